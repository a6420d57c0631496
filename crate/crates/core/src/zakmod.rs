//! Degree-`n` modules over the deformed torus in the Zak picture.
//!
//! A function of degree `n` on the Heisenberg manifold is
//! `f(x,y,t) = Σ_{k∈Z} f̃(x + k/n; k)·e^{2πi(ky + nt)}`, with `f̃(·; k)` depending on
//! `k mod n`. Sections store one [`GaussSum`] per residue in `[0, |n|)`.
//!
//! On this picture `p = (1/√2π)·d/du`, `q = √2π·n·u` and `t = n`. The flat torus acts
//! on the left at `θ′` and on the right at `θ` through Fourier modes
//! `W = e^{2πi(mx+ky)}`:
//!
//! * `(W ∗_{θ′} f)~(u; K) = e^{2πim(u-K/n)}·e^{-2πinmθ′(u-k/n)}·f̃(u - k/n; K - k)`
//! * `(f ∗_θ W)~(u; K) = e^{2πim(u-K/n)}·f̃(u - k/n - kθ; K - k)`

use std::f64::consts::PI;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::gauss::{GaussError, GaussSum, DEFAULT_TERM_CAP};
use crate::series::{alpha, Defect, DeformationParameter, SeriesError, TruncatedSeries, C64};
use crate::torus::{Realization, TorusElement, TorusError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ZakError {
    #[error("module degree must be nonzero")]
    ZeroDegree,
    #[error("expected {expected} residue components, got {got}")]
    ResidueCount { expected: usize, got: usize },
    #[error("degree mismatch: expected {expected}, got {got}")]
    DegreeMismatch { expected: i64, got: i64 },
    #[error("degrees {0} and {1} are not composable: the product has degree 0 or a factor has degree 0")]
    NonComposable(i64, i64),
    #[error("window must be non-negative, got {0}")]
    NegativeWindow(i64),
    #[error("torus element must use the flat realization")]
    NotFlat,
    #[error(transparent)]
    Gauss(#[from] GaussError),
    #[error(transparent)]
    Torus(#[from] TorusError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// Evaluation tolerance for the automatic cutoff of function-picture sums.
pub const EVAL_TOL: f64 = 1e-16;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZakOptions {
    /// Summands whose supremum bound falls below this are dropped from infinite sums.
    pub prune_tol: f64,
    pub term_cap: usize,
}

impl Default for ZakOptions {
    fn default() -> Self {
        Self { prune_tol: 1e-16, term_cap: DEFAULT_TERM_CAP }
    }
}

/// A point of the Heisenberg manifold with the value of a function there.
#[derive(Clone, Debug, PartialEq)]
pub struct FunctionSample {
    pub point: (f64, f64, f64),
    pub value: TruncatedSeries,
}

/// Element of `E_n[[ℏ]]` in the Zak picture.
#[derive(Clone, Debug, PartialEq)]
pub struct ZakSection {
    n: i64,
    order: usize,
    data: Vec<GaussSum>,
}

impl ZakSection {
    pub fn new(n: i64, data: Vec<GaussSum>) -> Result<Self, ZakError> {
        if n == 0 {
            return Err(ZakError::ZeroDegree);
        }
        let expected = n.unsigned_abs() as usize;
        if data.len() != expected {
            return Err(ZakError::ResidueCount { expected, got: data.len() });
        }
        let order = data[0].order();
        if let Some(bad) = data.iter().find(|g| g.order() != order) {
            return Err(SeriesError::OrderMismatch(order, bad.order()).into());
        }
        Ok(Self { n, order, data })
    }

    pub fn zero(n: i64, order: usize) -> Result<Self, ZakError> {
        if n == 0 {
            return Err(ZakError::ZeroDegree);
        }
        Ok(Self { n, order, data: vec![GaussSum::zero(order); n.unsigned_abs() as usize] })
    }

    pub fn degree(&self) -> i64 {
        self.n
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn data(&self) -> &[GaussSum] {
        &self.data
    }

    fn slots(&self) -> i64 {
        self.n.abs()
    }

    /// `f̃(·; k)` for any integer `k`.
    pub fn component(&self, k: i64) -> &GaussSum {
        &self.data[k.rem_euclid(self.slots()) as usize]
    }

    /// Applies `f` to every residue component.
    pub fn map_residues(&self, f: impl Fn(&GaussSum) -> GaussSum) -> Self {
        self.map(|_, g| f(g))
    }

    fn map(&self, f: impl Fn(i64, &GaussSum) -> GaussSum) -> Self {
        let data: Vec<GaussSum> = (0..self.slots()).map(|k| f(k, self.component(k))).collect();
        Self { n: self.n, order: data[0].order(), data }
    }

    fn try_map(&self, f: impl Fn(i64, &GaussSum) -> Result<GaussSum, ZakError>) -> Result<Self, ZakError> {
        let data = (0..self.slots()).map(|k| f(k, self.component(k))).collect::<Result<_, _>>()?;
        Ok(Self { n: self.n, order: self.order, data })
    }

    fn same_degree(&self, other: &Self) -> Result<(), ZakError> {
        if self.n != other.n {
            return Err(ZakError::DegreeMismatch { expected: self.n, got: other.n });
        }
        if self.order != other.order {
            return Err(SeriesError::OrderMismatch(self.order, other.order).into());
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, ZakError> {
        self.same_degree(other)?;
        Ok(self.map(|k, g| g.add(other.component(k))))
    }

    pub fn sub(&self, other: &Self) -> Result<Self, ZakError> {
        self.same_degree(other)?;
        Ok(self.map(|k, g| g.sub(other.component(k))))
    }

    pub fn scale(&self, c: &TruncatedSeries) -> Self {
        self.map(|_, g| g.scale(c))
    }

    pub fn check_cap(&self, cap: usize) -> Result<(), ZakError> {
        for g in &self.data {
            g.check_cap(cap)?;
        }
        Ok(())
    }

    pub fn act_p(&self) -> Self {
        let c = 1.0 / (2.0 * PI).sqrt();
        self.map(|_, g| g.derivative().scale_c(C64::new(c, 0.0)))
    }

    pub fn act_q(&self) -> Self {
        let c = (2.0 * PI).sqrt() * self.n as f64;
        self.map(|_, g| g.mul_x().scale_c(C64::new(c, 0.0)))
    }

    pub fn act_t(&self) -> Self {
        self.map(|_, g| g.scale_c(C64::new(self.n as f64, 0.0)))
    }

    fn apply_pow(&self, j: usize, op: impl Fn(&Self) -> Self) -> Self {
        (0..j).fold(self.clone(), |acc, _| op(&acc))
    }

    /// `W ∗_{θ′} f` for the Fourier mode `W = e^{2πi(mx+ky)}`.
    pub fn act_left_monomial(&self, (m, k): (i64, i64), theta_p: &DeformationParameter) -> Result<Self, ZakError> {
        let n = self.n as f64;
        let gamma = theta_p.series().scale(C64::new(0.0, -2.0 * PI * n * m as f64));
        self.try_map(|kk, _| {
            let g = self.component(kk - k).formal_exp_linear_mul(&gamma)?;
            let ph = C64::from_polar(1.0, -2.0 * PI * m as f64 * kk as f64 / n);
            Ok(g.real_shift(k as f64 / n).phase_mul(2.0 * PI * m as f64).scale_c(ph))
        })
    }

    /// `f ∗_θ W` for the Fourier mode `W = e^{2πi(mx+ky)}`.
    pub fn act_right_monomial(&self, (m, k): (i64, i64), theta: &DeformationParameter) -> Result<Self, ZakError> {
        let n = self.n as f64;
        let rho = theta.series().scale_real(-(k as f64));
        let zero = TruncatedSeries::zero(self.order);
        self.try_map(|kk, _| {
            let g = self.component(kk - k).real_shift(k as f64 / n).formal_shift(&rho, &zero)?;
            let ph = C64::from_polar(1.0, -2.0 * PI * m as f64 * kk as f64 / n);
            Ok(g.phase_mul(2.0 * PI * m as f64).scale_c(ph))
        })
    }

    pub fn act_left_u(&self, theta_p: &DeformationParameter) -> Result<Self, ZakError> {
        self.act_left_monomial(Realization::Flat.u_mode(), theta_p)
    }

    pub fn act_left_v(&self, theta_p: &DeformationParameter) -> Result<Self, ZakError> {
        self.act_left_monomial(Realization::Flat.v_mode(), theta_p)
    }

    pub fn act_right_u(&self, theta: &DeformationParameter) -> Result<Self, ZakError> {
        self.act_right_monomial(Realization::Flat.u_mode(), theta)
    }

    pub fn act_right_v(&self, theta: &DeformationParameter) -> Result<Self, ZakError> {
        self.act_right_monomial(Realization::Flat.v_mode(), theta)
    }

    /// `a ∗_{θ′} f` for `a` in the flat torus algebra.
    pub fn act_left(&self, a: &TorusElement, theta_p: &DeformationParameter) -> Result<Self, ZakError> {
        self.act_element(a, |mode| self.act_left_monomial(mode, theta_p))
    }

    /// `f ∗_θ a` for `a` in the flat torus algebra.
    pub fn act_right(&self, a: &TorusElement, theta: &DeformationParameter) -> Result<Self, ZakError> {
        self.act_element(a, |mode| self.act_right_monomial(mode, theta))
    }

    fn act_element(
        &self,
        a: &TorusElement,
        mono: impl Fn((i64, i64)) -> Result<Self, ZakError>,
    ) -> Result<Self, ZakError> {
        if a.realization() != Realization::Flat {
            return Err(ZakError::NotFlat);
        }
        if a.order() != self.order {
            return Err(SeriesError::OrderMismatch(self.order, a.order()).into());
        }
        let mut acc = Self::zero(self.n, self.order)?;
        for (&mode, c) in a.coeffs() {
            acc = acc.add(&mono(mode)?.scale(c))?;
        }
        Ok(acc)
    }

    /// Range of summation indices `k` with `|x + k/n|` inside the support radius.
    fn k_range(&self, x: f64, tol: f64) -> std::ops::RangeInclusive<i64> {
        let r = self.data.iter().map(|g| g.support_radius(tol)).fold(0.0, f64::max);
        let n = self.n as f64;
        let (a, b) = (n * (-r - x), n * (r - x));
        (a.min(b).floor() as i64)..=(a.max(b).ceil() as i64)
    }

    /// `Σ_{|k| ≤ k_cut} f̃(x + k/n; k)·e^{2πi(ky + nt)}`.
    pub fn function_eval(&self, x: f64, y: f64, t: f64, k_cut: i64) -> TruncatedSeries {
        self.function_eval_range(x, y, t, -k_cut..=k_cut)
    }

    /// Function-picture value with the cutoff chosen from the Gaussian decay.
    pub fn function_eval_auto(&self, x: f64, y: f64, t: f64) -> TruncatedSeries {
        self.function_eval_range(x, y, t, self.k_range(x, EVAL_TOL))
    }

    fn function_eval_range(&self, x: f64, y: f64, t: f64, ks: std::ops::RangeInclusive<i64>) -> TruncatedSeries {
        let n = self.n as f64;
        let mut acc = TruncatedSeries::zero(self.order);
        for k in ks {
            let ph = C64::from_polar(1.0, 2.0 * PI * (k as f64 * y + n * t));
            acc += &self.component(k).evaluate(x + k as f64 / n).scale(ph);
        }
        acc
    }

    pub fn sample(&self, point: (f64, f64, f64)) -> FunctionSample {
        FunctionSample { point, value: self.function_eval_auto(point.0, point.1, point.2) }
    }

    /// A section with one or two Gaussians per residue and random coefficients at every order.
    pub fn random_gaussian(n: i64, order: usize, rng: &mut impl Rng) -> Result<Self, ZakError> {
        if n == 0 {
            return Err(ZakError::ZeroDegree);
        }
        let data = (0..n.abs())
            .map(|_| {
                let mut g = GaussSum::zero(order);
                for _ in 0..rng.gen_range(1..=2) {
                    let coeff = TruncatedSeries::from_coeffs(
                        (0..=order).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect(),
                    );
                    let center = C64::new(rng.gen_range(-0.5..0.5), 0.0);
                    let width = C64::new(rng.gen_range(1.0..2.5), rng.gen_range(-0.5..0.5));
                    g.add_assign(&GaussSum::gaussian(coeff, center, width)?);
                }
                Ok(g)
            })
            .collect::<Result<Vec<_>, ZakError>>()?;
        Self::new(n, data)
    }
}

fn require_order(a: usize, b: usize) -> Result<(), ZakError> {
    if a != b {
        return Err(SeriesError::OrderMismatch(a, b).into());
    }
    Ok(())
}

/// The graded star product `E_{n₁} × E_{n₂} → E_{n₁+n₂}` as a convolution over `k₁ + k₂ = k`:
/// `f̃₁((1 - n₂θ)u + (1 + n₁θ)s₁; k₁)·f̃₂(u + s₂; k₂)` with
/// `s₁ = (k₁n₂ - k₂n₁)/(n₁n)` and `s₂ = -(k₁n₂ - k₂n₁)/(n₂n)`.
pub fn star_product_zak(f1: &ZakSection, f2: &ZakSection, theta: &DeformationParameter) -> Result<ZakSection, ZakError> {
    star_product_zak_with(f1, f2, theta, &ZakOptions::default())
}

pub fn star_product_zak_with(
    f1: &ZakSection,
    f2: &ZakSection,
    theta: &DeformationParameter,
    opts: &ZakOptions,
) -> Result<ZakSection, ZakError> {
    let (n1, n2) = (f1.n, f2.n);
    let n = n1 + n2;
    if n == 0 {
        return Err(ZakError::NonComposable(n1, n2));
    }
    require_order(f1.order, f2.order)?;
    require_order(f1.order, theta.order())?;
    let order = f1.order;
    let r1 = f1.data.iter().map(|g| g.support_radius(opts.prune_tol)).fold(0.0, f64::max);
    let r2 = f2.data.iter().map(|g| g.support_radius(opts.prune_tol)).fold(0.0, f64::max);
    // Non-negligible summands need |k₁n - kn₁| ≤ |n₁n₂|(r₁ + r₂).
    let spread = (n1 * n2).abs() as f64 * (r1 + r2);
    let eps = theta.series().scale_real(-(n2 as f64));
    let mut data = Vec::with_capacity(n.unsigned_abs() as usize);
    for k in 0..n.abs() {
        let centre = (k * n1) as f64 / n as f64;
        let half = spread / (n.abs() as f64);
        let lo = (centre - half).floor() as i64 - 1;
        let hi = (centre + half).ceil() as i64 + 1;
        let mut acc = GaussSum::zero(order);
        for k1 in lo..=hi {
            let k2 = k - k1;
            let d = (k1 * n2 - k2 * n1) as f64;
            let s1 = d / (n1 * n) as f64;
            let s2 = -d / (n2 * n) as f64;
            let g1 = f1.component(k1).real_shift(-s1);
            let g2 = f2.component(k2).real_shift(-s2);
            if g1.pointwise_mul(&g2).sup_bound() < opts.prune_tol {
                continue;
            }
            let rho = theta.series().scale_real(n1 as f64 * s1);
            let g1 = g1.formal_shift(&rho, &eps)?;
            acc.add_assign(&g1.pointwise_mul(&g2));
        }
        let acc = acc.prune(opts.prune_tol);
        acc.check_cap(opts.term_cap)?;
        data.push(acc);
    }
    ZakSection::new(n, data)
}

/// The same product computed as `Σ_j (-θ)^j/j!·(p^j f₁) ∗₀ (q^j f₂)`.
pub fn star_product_by_factorization(
    f1: &ZakSection,
    f2: &ZakSection,
    theta: &DeformationParameter,
) -> Result<ZakSection, ZakError> {
    let order = f1.order;
    let zero = DeformationParameter::zero(order);
    let mut acc = ZakSection::zero(f1.n + f2.n, order).map_err(|_| ZakError::NonComposable(f1.n, f2.n))?;
    let mut pj = f1.clone();
    let mut qj = f2.clone();
    let mut coeff = TruncatedSeries::one(order);
    let minus_theta = theta.series().scale_real(-1.0);
    for j in 0..=order {
        if coeff.is_zero() {
            break;
        }
        acc = acc.add(&star_product_zak(&pj, &qj, &zero)?.scale(&coeff))?;
        pj = pj.act_p();
        qj = qj.act_q();
        coeff = (&coeff * &minus_theta).scale_real(1.0 / (j + 1) as f64);
    }
    Ok(acc)
}

/// `(f̃₁|f̃₂) = Σ_k ∫ f̃₁((1 + nθ)x; k)·f̃₂(x; -k) dx`, equal to `∫_{T²} f₁ ∗_θ f₂`.
pub fn pairing(f1: &ZakSection, f2: &ZakSection, theta: &DeformationParameter) -> Result<TruncatedSeries, ZakError> {
    let stretched = stretch(f1, theta)?;
    pairing_prepared(&stretched, f2)
}

fn stretch(f1: &ZakSection, theta: &DeformationParameter) -> Result<ZakSection, ZakError> {
    require_order(f1.order, theta.order())?;
    let eps = theta.series().scale_real(f1.n as f64);
    let zero = TruncatedSeries::zero(f1.order);
    f1.try_map(|_, g| Ok(g.formal_shift(&zero, &eps)?))
}

fn pairing_prepared(stretched: &ZakSection, f2: &ZakSection) -> Result<TruncatedSeries, ZakError> {
    if stretched.n != -f2.n {
        return Err(ZakError::DegreeMismatch { expected: -stretched.n, got: f2.n });
    }
    require_order(stretched.order, f2.order)?;
    let mut acc = TruncatedSeries::zero(stretched.order);
    for k in 0..stretched.slots() {
        acc += &stretched.component(k).pointwise_mul(f2.component(-k)).integrate();
    }
    Ok(acc)
}

/// Which parameter the right `U`-action in the Fourier-coefficient pairing uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoefficientConvention {
    /// `α_n(θ)`; reproduces the Fourier coefficients of `f₁ ∗_θ f₂` exactly.
    Alpha,
    /// `θ` itself; off by `O(θ²)` when `n ≠ 0`.
    Theta,
}

/// The degree-0 product as a finite Fourier series together with a tail estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct A0Product {
    pub element: TorusElement,
    pub window: i64,
    /// Sum of coefficient magnitudes over the two rings just outside the window.
    pub tail: f64,
}

/// `Σ_{|r|,|s| ≤ R} U^r V^s·(f̃₁ | (f̃₂.V^{-s}).U^{-r})`.
pub fn product_into_a0(
    f1: &ZakSection,
    f2: &ZakSection,
    theta: &DeformationParameter,
    window: i64,
) -> Result<A0Product, ZakError> {
    product_into_a0_with(f1, f2, theta, window, CoefficientConvention::Alpha)
}

pub fn product_into_a0_with(
    f1: &ZakSection,
    f2: &ZakSection,
    theta: &DeformationParameter,
    window: i64,
    convention: CoefficientConvention,
) -> Result<A0Product, ZakError> {
    if window < 0 {
        return Err(ZakError::NegativeWindow(window));
    }
    if f1.n != -f2.n {
        return Err(ZakError::DegreeMismatch { expected: -f1.n, got: f2.n });
    }
    let order = f1.order;
    let stretched = stretch(f1, theta)?;
    let u_param = match convention {
        CoefficientConvention::Alpha => alpha(Ratio::from_integer(f1.n), theta),
        CoefficientConvention::Theta => theta.clone(),
    };
    let outer = window + 2;
    let mut element = TorusElement::zero(Realization::Flat, order);
    let mut tail = 0.0;
    for s in -outer..=outer {
        let shifted = f2.act_right_monomial((-s, 0), theta)?;
        for r in -outer..=outer {
            let h = shifted.act_right_monomial((0, -r), &u_param)?;
            let c = pairing_prepared(&stretched, &h)?;
            if s.abs().max(r.abs()) <= window {
                let mode = TorusElement::monomial(Realization::Flat, (s, r), c);
                element = element.add(&mode)?;
            } else {
                tail += c.max_abs();
            }
        }
    }
    Ok(A0Product { element, window, tail })
}

/// `Σ_j (-θ)^j/j!·(p^j f₁)(q^j f₂)` at a point, computed directly in the function picture.
pub fn direct_twisted_product(
    f1: &ZakSection,
    f2: &ZakSection,
    theta: &DeformationParameter,
    (x, y, t): (f64, f64, f64),
) -> Result<TruncatedSeries, ZakError> {
    require_order(f1.order, f2.order)?;
    require_order(f1.order, theta.order())?;
    let order = f1.order;
    let sq = (2.0 * PI).sqrt();
    // p^j f₁: derivatives of the residue data, scaled by (2π)^{-j/2}.
    let mut derivs = vec![f1.clone()];
    for _ in 0..order {
        let last = derivs.last().expect("nonempty");
        derivs.push(last.map(|_, g| g.derivative()));
    }
    let (n1, n2) = (f1.n as f64, f2.n as f64);
    let mut p_vals = vec![TruncatedSeries::zero(order); order + 1];
    for k in f1.k_range(x, EVAL_TOL) {
        let ph = C64::from_polar(1.0, 2.0 * PI * (k as f64 * y + n1 * t));
        let u = x + k as f64 / n1;
        for (j, d) in derivs.iter().enumerate() {
            p_vals[j] += &d.component(k).evaluate(u).scale(ph * sq.powi(-(j as i32)));
        }
    }
    let mut q_vals = vec![TruncatedSeries::zero(order); order + 1];
    for k in f2.k_range(x, EVAL_TOL) {
        let ph = C64::from_polar(1.0, 2.0 * PI * (k as f64 * y + n2 * t));
        let v = f2.component(k).evaluate(x + k as f64 / n2).scale(ph);
        let mult = sq * (k as f64 + n2 * x);
        for (j, q) in q_vals.iter_mut().enumerate() {
            *q += &v.scale_real(mult.powi(j as i32));
        }
    }
    let mut acc = TruncatedSeries::zero(order);
    let mut coeff = TruncatedSeries::one(order);
    let minus_theta = theta.series().scale_real(-1.0);
    for j in 0..=order {
        acc += &(&coeff * &(&p_vals[j] * &q_vals[j]));
        coeff = (&coeff * &minus_theta).scale_real(1.0 / (j + 1) as f64);
    }
    Ok(acc)
}

/// `count` points of `[0,1)³` from a Halton sequence with a seed-dependent start.
pub fn sample_points(count: usize, seed: u64) -> Vec<(f64, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start: u64 = rng.gen_range(1..10_000);
    (0..count as u64)
        .map(|i| (halton(start + i, 2), halton(start + i, 3), halton(start + i, 5)))
        .collect()
}

fn halton(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// An element of the graded algebra: a degree-0 torus element or a nonzero-degree section.
#[derive(Clone, Debug, PartialEq)]
pub enum Operand {
    Torus(TorusElement),
    Zak(ZakSection),
}

impl Operand {
    pub fn degree(&self) -> i64 {
        match self {
            Operand::Torus(_) => 0,
            Operand::Zak(z) => z.n,
        }
    }

    pub fn eval(&self, (x, y, t): (f64, f64, f64)) -> TruncatedSeries {
        match self {
            Operand::Torus(a) => a.evaluate(x, y),
            Operand::Zak(z) => z.function_eval_auto(x, y, t),
        }
    }
}

/// `a ∗_θ b` in the graded algebra.
pub fn graded_star(a: &Operand, b: &Operand, theta: &DeformationParameter) -> Result<Operand, ZakError> {
    graded_star_with(a, b, theta, &ZakOptions::default())
}

pub fn graded_star_with(a: &Operand, b: &Operand, theta: &DeformationParameter, opts: &ZakOptions) -> Result<Operand, ZakError> {
    Ok(match (a, b) {
        (Operand::Torus(x), Operand::Torus(y)) => Operand::Torus(x.star_mul(y, theta)?),
        (Operand::Torus(x), Operand::Zak(f)) => Operand::Zak(f.act_left(x, theta)?),
        (Operand::Zak(f), Operand::Torus(x)) => Operand::Zak(f.act_right(x, theta)?),
        (Operand::Zak(f), Operand::Zak(g)) => Operand::Zak(star_product_zak_with(f, g, theta, opts)?),
    })
}

/// Sup over `points` of the per-order difference of two operands.
pub fn operand_defect(a: &Operand, b: &Operand, points: &[(f64, f64, f64)]) -> Result<Defect, ZakError> {
    if a.degree() != b.degree() {
        return Err(ZakError::DegreeMismatch { expected: a.degree(), got: b.degree() });
    }
    let order = match a {
        Operand::Torus(x) => x.order(),
        Operand::Zak(z) => z.order,
    };
    let mut d = Defect::zero(order);
    for &p in points {
        d.absorb(&(a.eval(p) - b.eval(p)));
    }
    Ok(d)
}

/// Relative sup-defect of a section against point values, `max|f - v| / max|v|` per order.
pub fn relative_defect(values: &[TruncatedSeries], reference: &[TruncatedSeries]) -> Defect {
    let order = reference.first().map_or(0, TruncatedSeries::order);
    let mut diff = Defect::zero(order);
    let mut scale = Defect::zero(order);
    for (v, r) in values.iter().zip(reference) {
        diff.absorb(&(v - r));
        scale.absorb(r);
    }
    let by_order = diff
        .by_order()
        .iter()
        .zip(scale.by_order())
        .map(|(d, s)| if *s > 0.0 { d / s } else { *d })
        .collect();
    Defect::from_by_order(by_order)
}

/// `(a ∗_{θ′} b) ∗_θ c - a ∗_{θ′} (b ∗_θ c)` over sample points.
pub fn generalized_associativity_defect(
    a: &Operand,
    b: &ZakSection,
    c: &Operand,
    theta: &DeformationParameter,
    theta_p: &DeformationParameter,
    points: &[(f64, f64, f64)],
) -> Result<Defect, ZakError> {
    generalized_associativity_defect_with(a, b, c, theta, theta_p, points, &ZakOptions::default())
}

pub fn generalized_associativity_defect_with(
    a: &Operand,
    b: &ZakSection,
    c: &Operand,
    theta: &DeformationParameter,
    theta_p: &DeformationParameter,
    points: &[(f64, f64, f64)],
    opts: &ZakOptions,
) -> Result<Defect, ZakError> {
    for (x, y) in [(a.degree(), b.n), (b.n, c.degree()), (a.degree() + b.n, c.degree())] {
        if x != 0 && y != 0 && x + y == 0 {
            return Err(ZakError::NonComposable(x, y));
        }
    }
    if a.degree() + b.n + c.degree() == 0 && (a.degree() != 0 || c.degree() != 0) {
        return Err(ZakError::NonComposable(a.degree() + b.n, c.degree()));
    }
    let b = Operand::Zak(b.clone());
    let left = graded_star_with(&graded_star_with(a, &b, theta_p, opts)?, c, theta, opts)?;
    let right = graded_star_with(a, &graded_star_with(&b, c, theta, opts)?, theta_p, opts)?;
    operand_defect(&left, &right, points)
}

/// The generalized associativity law with `θ′ = α_n(θ)`, `n = deg b`.
pub fn verify_generalized_associativity(
    a: &Operand,
    b: &ZakSection,
    c: &Operand,
    theta: &DeformationParameter,
    points: &[(f64, f64, f64)],
) -> Result<Defect, ZakError> {
    verify_generalized_associativity_with(a, b, c, theta, points, &ZakOptions::default())
}

pub fn verify_generalized_associativity_with(
    a: &Operand,
    b: &ZakSection,
    c: &Operand,
    theta: &DeformationParameter,
    points: &[(f64, f64, f64)],
    opts: &ZakOptions,
) -> Result<Defect, ZakError> {
    let theta_p = alpha(Ratio::from_integer(b.n), theta);
    generalized_associativity_defect_with(a, b, c, theta, &theta_p, points, opts)
}

/// `(f₁∗f₂)∗f₃ - Σ_j (θ²n₂)^j/j!·(p^j f₁)∗(f₂∗(q^j f₃))`, optionally without the coassociator.
pub fn quasi_associativity_defect(
    f1: &ZakSection,
    f2: &ZakSection,
    f3: &ZakSection,
    theta: &DeformationParameter,
    with_phi: bool,
    points: &[(f64, f64, f64)],
) -> Result<Defect, ZakError> {
    let (n1, n2, n3) = (f1.n, f2.n, f3.n);
    if n1 + n2 == 0 || n2 + n3 == 0 || n1 + n2 + n3 == 0 {
        return Err(ZakError::NonComposable(n1 + n2, n3));
    }
    let order = f1.order;
    let left = star_product_zak(&star_product_zak(f1, f2, theta)?, f3, theta)?;
    let mut right = ZakSection::zero(n1 + n2 + n3, order)?;
    let step = (theta.series() * theta.series()).scale_real(n2 as f64);
    let mut coeff = TruncatedSeries::one(order);
    let terms = if with_phi { order } else { 0 };
    for j in 0..=terms {
        if coeff.is_zero() {
            break;
        }
        let pj = f1.apply_pow(j, ZakSection::act_p);
        let qj = f3.apply_pow(j, ZakSection::act_q);
        let inner = star_product_zak(f2, &qj, theta)?;
        right = right.add(&star_product_zak(&pj, &inner, theta)?.scale(&coeff))?;
        coeff = (&coeff * &step).scale_real(1.0 / (j + 1) as f64);
    }
    operand_defect(&Operand::Zak(left), &Operand::Zak(right), points)
}

pub fn verify_quasi_associativity(
    f1: &ZakSection,
    f2: &ZakSection,
    f3: &ZakSection,
    theta: &DeformationParameter,
    points: &[(f64, f64, f64)],
) -> Result<Defect, ZakError> {
    quasi_associativity_defect(f1, f2, f3, theta, true, points)
}

/// `(U.f).V - U.(f.V)` and the same with the generators swapped, left at `α_n(θ)`, right at `θ`.
pub fn bimodule_defect(f: &ZakSection, theta: &DeformationParameter, points: &[(f64, f64, f64)]) -> Result<Defect, ZakError> {
    let theta_p = alpha(Ratio::from_integer(f.n), theta);
    let mut d = Defect::zero(f.order);
    for (l, r) in [(Realization::Flat.u_mode(), Realization::Flat.v_mode()), (Realization::Flat.v_mode(), Realization::Flat.u_mode())] {
        let a = f.act_left_monomial(l, &theta_p)?.act_right_monomial(r, theta)?;
        let b = f.act_right_monomial(r, theta)?.act_left_monomial(l, &theta_p)?;
        d.merge(&operand_defect(&Operand::Zak(a), &Operand::Zak(b), points)?);
    }
    Ok(d)
}

/// `(f₁ ∗ a) ∗ f₂ - f₁ ∗ (a ∗ f₂)` for `a` in the torus algebra at the same `θ`.
pub fn middle_linearity_defect(
    f1: &ZakSection,
    a: &TorusElement,
    f2: &ZakSection,
    theta: &DeformationParameter,
    points: &[(f64, f64, f64)],
) -> Result<Defect, ZakError> {
    let left = star_product_zak(&f1.act_right(a, theta)?, f2, theta)?;
    let right = star_product_zak(f1, &f2.act_left(a, theta)?, theta)?;
    operand_defect(&Operand::Zak(left), &Operand::Zak(right), points)
}
