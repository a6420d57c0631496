//! Finite sums of polynomial-times-Gaussian terms on the real line.
//!
//! A [`GaussSum`] is stored as blocks sharing a `(center, width)` pair; each block
//! carries a polynomial in `(x - center)` with [`TruncatedSeries`] coefficients.
//! A single term `coeff·(x-c)^d·e^{-a(x-c)²}` is one monomial of one block.

use std::f64::consts::PI;

use thiserror::Error;

use crate::pbw::binomial;
use crate::series::{SeriesError, TruncatedSeries, C64};

/// Two `(center, width)` keys closer than this are the same key.
pub const MERGE_TOL: f64 = 1e-12;
pub const DEFAULT_TERM_CAP: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GaussError {
    #[error("Gaussian width must have positive real part, got {0}")]
    InvalidWidth(C64),
    #[error("formal shift argument has nonzero constant term {0}")]
    NonzeroConstant(C64),
    #[error("Gaussian sum has {terms} terms, above the cap of {cap}")]
    TermCap { terms: usize, cap: usize },
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// `coeff·(x - center)^degree·e^{-width·(x - center)²}`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussTerm {
    pub coeff: TruncatedSeries,
    pub degree: usize,
    pub center: C64,
    pub width: C64,
}

impl GaussTerm {
    pub fn new(coeff: TruncatedSeries, degree: usize, center: C64, width: C64) -> Result<Self, GaussError> {
        if width.re.is_nan() || width.re <= 0.0 {
            return Err(GaussError::InvalidWidth(width));
        }
        Ok(Self { coeff, degree, center, width })
    }
}

type Poly = Vec<TruncatedSeries>;

#[derive(Clone, Debug, PartialEq)]
struct Block {
    center: C64,
    width: C64,
    poly: Poly,
}

impl Block {
    fn trim(&mut self) {
        while self.poly.last().is_some_and(TruncatedSeries::is_zero) {
            self.poly.pop();
        }
    }

    /// Coarse upper bound for `sup_x |block(x)|` over real `x`, as a logarithm.
    fn log_sup(&self) -> f64 {
        let (x_star, e_star) = peak(self.center, self.width);
        let ar = self.width.re;
        let base = (x_star - self.center.re).abs() + self.center.im.abs();
        let mut best = f64::NEG_INFINITY;
        for (d, p) in self.poly.iter().enumerate() {
            let m = p.max_abs();
            if m == 0.0 {
                continue;
            }
            // sup_s (base + |s|)^d e^{-ar s²}
            let s = if d == 0 { 0.0 } else { (-base + (base * base + 2.0 * d as f64 / ar).sqrt()) / 2.0 };
            let v = m.ln() + d as f64 * (base + s).max(f64::MIN_POSITIVE).ln() - ar * s * s;
            best = log_add(best, v);
        }
        best + e_star
    }

    /// Radius `R` such that `|block(x)| < tol` for real `|x| > R`.
    fn support_radius(&self, tol: f64) -> f64 {
        let (x_star, e_star) = peak(self.center, self.width);
        let ar = self.width.re;
        let base = (x_star - self.center.re).abs() + self.center.im.abs();
        let c: f64 = self.poly.iter().map(TruncatedSeries::max_abs).sum();
        if c == 0.0 {
            return 0.0;
        }
        let dmax = self.poly.len().saturating_sub(1) as f64;
        let mut r = 0.0;
        for _ in 0..6 {
            let budget = e_star + c.ln() + dmax * (1.0 + base + r).ln() - tol.ln();
            r = (budget.max(0.0) / ar).sqrt();
        }
        x_star.abs() + r
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Location and value of the maximum over real `x` of `Re(-a(x-c)²)`.
fn peak(c: C64, a: C64) -> (f64, f64) {
    let y_star = -a.im * c.im / a.re;
    let e_star = c.im * c.im * a.norm_sqr() / a.re;
    (c.re + y_star, e_star)
}

/// `Q(y) = P(y + δ)`.
fn poly_shift(p: &[TruncatedSeries], delta: C64) -> Poly {
    if delta == C64::new(0.0, 0.0) || p.len() <= 1 {
        return p.to_vec();
    }
    let order = p[0].order();
    let mut q = vec![TruncatedSeries::zero(order); p.len()];
    let mut pows = vec![C64::new(1.0, 0.0); p.len()];
    for i in 1..p.len() {
        pows[i] = pows[i - 1] * delta;
    }
    for (d, pd) in p.iter().enumerate() {
        if pd.is_zero() {
            continue;
        }
        for (j, qj) in q.iter_mut().enumerate().take(d + 1) {
            *qj += &pd.scale(pows[d - j] * binomial(d as u32, j as u32));
        }
    }
    q
}

fn poly_mul(p: &[TruncatedSeries], q: &[TruncatedSeries]) -> Poly {
    if p.is_empty() || q.is_empty() {
        return Vec::new();
    }
    let order = p[0].order();
    let mut out = vec![TruncatedSeries::zero(order); p.len() + q.len() - 1];
    for (i, a) in p.iter().enumerate() {
        if a.is_zero() {
            continue;
        }
        for (j, b) in q.iter().enumerate() {
            if !b.is_zero() {
                out[i + j] += &(a * b);
            }
        }
    }
    out
}

/// `∫ y^d e^{-a y²} dy` along the real line.
pub fn gaussian_moment(d: usize, a: C64) -> C64 {
    if d % 2 == 1 {
        return C64::new(0.0, 0.0);
    }
    let double_fact: f64 = (1..d).step_by(2).map(|k| k as f64).product();
    let base = (C64::new(PI, 0.0) / a).sqrt();
    base * double_fact * (a * 2.0).powi(-((d / 2) as i32))
}

/// Finite sum of [`GaussTerm`]s with a common truncation order.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussSum {
    order: usize,
    blocks: Vec<Block>,
}

impl GaussSum {
    pub fn zero(order: usize) -> Self {
        Self { order, blocks: Vec::new() }
    }

    /// `coeff·e^{-width·(x - center)²}`.
    pub fn gaussian(coeff: TruncatedSeries, center: C64, width: C64) -> Result<Self, GaussError> {
        Self::from_terms(coeff.order(), [GaussTerm::new(coeff, 0, center, width)?])
    }

    pub fn from_terms(order: usize, terms: impl IntoIterator<Item = GaussTerm>) -> Result<Self, GaussError> {
        let mut out = Self::zero(order);
        for t in terms {
            if t.width.re.is_nan() || t.width.re <= 0.0 {
                return Err(GaussError::InvalidWidth(t.width));
            }
            if t.coeff.order() != order {
                return Err(SeriesError::OrderMismatch(order, t.coeff.order()).into());
            }
            let mut poly = vec![TruncatedSeries::zero(order); t.degree + 1];
            poly[t.degree] = t.coeff;
            out.push_block(t.center, t.width, poly);
        }
        Ok(out)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn terms(&self) -> Vec<GaussTerm> {
        let mut out = Vec::new();
        for b in &self.blocks {
            for (d, c) in b.poly.iter().enumerate() {
                if !c.is_zero() {
                    out.push(GaussTerm { coeff: c.clone(), degree: d, center: b.center, width: b.width });
                }
            }
        }
        out
    }

    pub fn term_count(&self) -> usize {
        self.blocks.iter().map(|b| b.poly.iter().filter(|c| !c.is_zero()).count()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn check_cap(&self, cap: usize) -> Result<(), GaussError> {
        let terms = self.term_count();
        if terms > cap {
            Err(GaussError::TermCap { terms, cap })
        } else {
            Ok(())
        }
    }

    fn push_block(&mut self, center: C64, width: C64, poly: Poly) {
        debug_assert!(width.re > 0.0);
        if poly.iter().all(TruncatedSeries::is_zero) {
            return;
        }
        let found = self
            .blocks
            .iter_mut()
            .find(|b| (b.center - center).norm() < MERGE_TOL && (b.width - width).norm() < MERGE_TOL);
        match found {
            Some(b) => {
                if b.poly.len() < poly.len() {
                    b.poly.resize(poly.len(), TruncatedSeries::zero(self.order));
                }
                for (i, p) in poly.into_iter().enumerate() {
                    b.poly[i] += &p;
                }
                b.trim();
            }
            None => {
                let mut b = Block { center, width, poly };
                b.trim();
                self.blocks.push(b);
            }
        }
        self.blocks.retain(|b| !b.poly.is_empty());
    }

    fn map_blocks(&self, f: impl Fn(&Block) -> Block) -> Self {
        let mut out = Self::zero(self.order);
        for b in &self.blocks {
            let nb = f(b);
            out.push_block(nb.center, nb.width, nb.poly);
        }
        out
    }

    /// Re-merges blocks with matching keys and drops vanishing coefficients.
    pub fn simplify(&self) -> Self {
        self.map_blocks(Block::clone)
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.order, other.order, "truncation order mismatch");
        let mut out = self.clone();
        for b in &other.blocks {
            out.push_block(b.center, b.width, b.poly.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale_c(C64::new(-1.0, 0.0)))
    }

    pub fn add_assign(&mut self, other: &Self) {
        assert_eq!(self.order, other.order, "truncation order mismatch");
        for b in &other.blocks {
            self.push_block(b.center, b.width, b.poly.clone());
        }
    }

    pub fn scale(&self, c: &TruncatedSeries) -> Self {
        self.map_blocks(|b| Block { poly: b.poly.iter().map(|p| p * c).collect(), ..*b })
    }

    pub fn scale_c(&self, c: C64) -> Self {
        self.map_blocks(|b| Block { poly: b.poly.iter().map(|p| p.scale(c)).collect(), ..*b })
    }

    pub fn pointwise_mul(&self, other: &Self) -> Self {
        assert_eq!(self.order, other.order, "truncation order mismatch");
        let mut out = Self::zero(self.order);
        for b1 in &self.blocks {
            for b2 in &other.blocks {
                let a = b1.width + b2.width;
                let c = (b1.width * b1.center + b2.width * b2.center) / a;
                let dc = b1.center - b2.center;
                let k = (-(b1.width * b2.width) * dc * dc / a).exp();
                let p1 = poly_shift(&b1.poly, c - b1.center);
                let p2 = poly_shift(&b2.poly, c - b2.center);
                let poly = poly_mul(&p1, &p2).into_iter().map(|p| p.scale(k)).collect();
                out.push_block(c, a, poly);
            }
        }
        out
    }

    pub fn derivative(&self) -> Self {
        self.map_blocks(|b| {
            let n = b.poly.len();
            let mut q = vec![TruncatedSeries::zero(self.order); n + 1];
            for (d, p) in b.poly.iter().enumerate() {
                if d > 0 {
                    q[d - 1] += &p.scale_real(d as f64);
                }
                q[d + 1] -= &p.scale(b.width * 2.0);
            }
            Block { poly: q, ..*b }
        })
    }

    /// `f(x - s)`.
    pub fn real_shift(&self, s: f64) -> Self {
        self.map_blocks(|b| Block { center: b.center + s, width: b.width, poly: b.poly.clone() })
    }

    /// `e^{iβx} f(x)`.
    pub fn phase_mul(&self, beta: f64) -> Self {
        self.exp_linear_mul(C64::new(0.0, beta))
    }

    /// `e^{γx} f(x)` for a complex number `γ`, by completing the square.
    pub fn exp_linear_mul(&self, gamma: C64) -> Self {
        if gamma == C64::new(0.0, 0.0) {
            return self.clone();
        }
        self.map_blocks(|b| {
            let shift = gamma / (b.width * 2.0);
            let center = b.center + shift;
            let factor = (gamma * b.center + gamma * gamma / (b.width * 4.0)).exp();
            let poly = poly_shift(&b.poly, shift).into_iter().map(|p| p.scale(factor)).collect();
            Block { center, width: b.width, poly }
        })
    }

    /// Multiplication by a polynomial `Σ_j poly[j] x^j` in the absolute variable.
    pub fn mul_poly(&self, poly: &[TruncatedSeries]) -> Self {
        self.map_blocks(|b| {
            let rel = poly_shift(poly, b.center);
            Block { poly: poly_mul(&b.poly, &rel), ..*b }
        })
    }

    pub fn mul_x(&self) -> Self {
        self.mul_poly(&[TruncatedSeries::zero(self.order), TruncatedSeries::one(self.order)])
    }

    /// `e^{γx} f(x)` for a formal `γ` with valuation ≥ 1, expanded into polynomials per order.
    pub fn formal_exp_linear_mul(&self, gamma: &TruncatedSeries) -> Result<Self, GaussError> {
        require_small(gamma)?;
        if gamma.is_zero() {
            return Ok(self.clone());
        }
        let mut poly = vec![TruncatedSeries::one(self.order)];
        let mut pw = TruncatedSeries::one(self.order);
        for j in 1..=self.order {
            pw = (&pw * gamma).scale_real(1.0 / j as f64);
            if pw.is_zero() {
                break;
            }
            poly.push(pw.clone());
        }
        Ok(self.mul_poly(&poly))
    }

    /// `f(x + ρ + εx)` as the terminating Taylor expansion `Σ_j (ρ+εx)^j/j! f^{(j)}(x)`.
    pub fn formal_shift(&self, rho: &TruncatedSeries, eps: &TruncatedSeries) -> Result<Self, GaussError> {
        require_small(rho)?;
        require_small(eps)?;
        if rho.is_zero() && eps.is_zero() {
            return Ok(self.clone());
        }
        let lin = vec![rho.clone(), eps.clone()];
        let mut acc = self.clone();
        let mut deriv = self.clone();
        let mut pw: Poly = vec![TruncatedSeries::one(self.order)];
        for j in 1..=self.order {
            pw = poly_mul(&pw, &lin).into_iter().map(|p| p.scale_real(1.0 / j as f64)).collect();
            if pw.iter().all(TruncatedSeries::is_zero) {
                break;
            }
            deriv = deriv.derivative();
            acc.add_assign(&deriv.mul_poly(&pw));
        }
        Ok(acc)
    }

    /// Complex conjugate as a function of real `x`.
    pub fn conj(&self) -> Self {
        self.map_blocks(|b| Block {
            center: b.center.conj(),
            width: b.width.conj(),
            poly: b.poly.iter().map(TruncatedSeries::conj).collect(),
        })
    }

    pub fn integrate(&self) -> TruncatedSeries {
        let mut acc = TruncatedSeries::zero(self.order);
        for b in &self.blocks {
            for (d, p) in b.poly.iter().enumerate().step_by(2) {
                acc += &p.scale(gaussian_moment(d, b.width));
            }
        }
        acc
    }

    pub fn evaluate(&self, x: f64) -> TruncatedSeries {
        self.evaluate_complex(C64::new(x, 0.0))
    }

    pub fn evaluate_complex(&self, x: C64) -> TruncatedSeries {
        let mut acc = vec![C64::new(0.0, 0.0); self.order + 1];
        for b in &self.blocks {
            let y = x - b.center;
            let g = (-b.width * y * y).exp();
            let mut yd = g;
            for p in &b.poly {
                for (a, c) in acc.iter_mut().zip(p.coeffs()) {
                    *a += c * yd;
                }
                yd *= y;
            }
        }
        TruncatedSeries::from_coeffs(acc)
    }

    /// Upper bound for `sup_x |f(x)|` over real `x` and all ℏ-orders.
    pub fn sup_bound(&self) -> f64 {
        self.blocks.iter().map(|b| b.log_sup().exp()).sum()
    }

    /// Radius outside of which `|f(x)| < tol` on the real line.
    pub fn support_radius(&self, tol: f64) -> f64 {
        let tol = tol / self.blocks.len().max(1) as f64;
        self.blocks.iter().map(|b| b.support_radius(tol)).fold(0.0, f64::max)
    }

    /// Drops blocks whose supremum bound is below `tol`.
    pub fn prune(&self, tol: f64) -> Self {
        let mut out = self.clone();
        out.blocks.retain(|b| b.log_sup() >= tol.ln());
        out
    }
}

fn require_small(s: &TruncatedSeries) -> Result<(), GaussError> {
    let c = s.constant_term();
    if c != C64::new(0.0, 0.0) {
        return Err(GaussError::NonzeroConstant(c));
    }
    Ok(())
}
