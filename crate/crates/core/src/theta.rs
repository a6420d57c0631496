//! The holomorphic sector of the elliptic realization: classical theta functions.
//!
//! On `C/(Z + τZ)` with `z = x + τy`, a degree-`n` function is
//! `f(x,y,t) = e^{πin(t/Im τ + xy)}·Σ_k e^{2πikx} f̃(y + k/n; k)`.
//! In this picture
//!
//! * `q̃ = c(2πinτu - d/du)`, proportional to `∇ = τ∂_x - ∂_y + Im(τ)·z·∂_t`,
//! * `p̃ = c(d/du - 2πinτ̄u)`,
//! * `t = n`,
//!
//! with `c = 1/(2i√(π Im τ))`. The kernel of `q̃` in degree `n > 0` is spanned by
//! `f̃(u; k) = c_k·e^{πinτu²}`, whose function pictures are theta series.

use std::f64::consts::PI;

use thiserror::Error;

use crate::gauss::{GaussError, GaussSum};
use crate::series::{Defect, DeformationParameter, TruncatedSeries, C64};
use crate::zakmod::{star_product_zak, ZakError, ZakSection, EVAL_TOL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ThetaError {
    #[error("holomorphic sections exist only in positive degree, got {0}")]
    NonPositiveDegree(i64),
    #[error("modular parameter must have positive imaginary part, got {0}")]
    InvalidTau(C64),
    #[error("modular parameters differ: {0} vs {1}")]
    TauMismatch(C64, C64),
    #[error("expected {expected} coefficients, got {got}")]
    ResidueCount { expected: usize, got: usize },
    #[error("tail tolerance must be positive, got {0}")]
    NonPositiveTolerance(f64),
    #[error(transparent)]
    Zak(#[from] ZakError),
    #[error(transparent)]
    Gauss(#[from] GaussError),
}

/// Coefficients `c(k)`, `k ∈ Z/nZ`, of a degree-`n` theta function.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaVector {
    n: i64,
    tau: C64,
    c: Vec<C64>,
}

fn check_tau(tau: C64) -> Result<(), ThetaError> {
    if tau.im > 0.0 {
        Ok(())
    } else {
        Err(ThetaError::InvalidTau(tau))
    }
}

impl ThetaVector {
    pub fn new(n: i64, tau: C64, c: Vec<C64>) -> Result<Self, ThetaError> {
        if n <= 0 {
            return Err(ThetaError::NonPositiveDegree(n));
        }
        check_tau(tau)?;
        if c.len() != n as usize {
            return Err(ThetaError::ResidueCount { expected: n as usize, got: c.len() });
        }
        Ok(Self { n, tau, c })
    }

    pub fn degree(&self) -> i64 {
        self.n
    }

    pub fn tau(&self) -> C64 {
        self.tau
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.c
    }

    pub fn coeff(&self, k: i64) -> C64 {
        self.c[k.rem_euclid(self.n) as usize]
    }

    /// `q = e^{πiτ}`.
    pub fn nome(&self) -> C64 {
        (C64::new(0.0, PI) * self.tau).exp()
    }
}

/// `q^w = e^{πiτw}` for a real exponent `w`.
fn q_pow(tau: C64, w: f64) -> C64 {
    (C64::new(0.0, PI) * tau * w).exp()
}

/// `c(k) = Σ_{k₁+k₂=k} c₁(k₁)c₂(k₂)·q^{(k₁n₂ - k₂n₁)²/(n₁n₂(n₁+n₂))}`, dropping weights below `tail_tol`.
pub fn theta_product(u: &ThetaVector, v: &ThetaVector, tail_tol: f64) -> Result<ThetaVector, ThetaError> {
    if u.tau != v.tau {
        return Err(ThetaError::TauMismatch(u.tau, v.tau));
    }
    if tail_tol.is_nan() || tail_tol <= 0.0 {
        return Err(ThetaError::NonPositiveTolerance(tail_tol));
    }
    let (n1, n2) = (u.n, v.n);
    let n = n1 + n2;
    let denom = (n1 * n2 * n) as f64;
    // |q|^w < tol once (k₁n - kn₁)² > denom·(-ln tol)/(π Im τ).
    let reach = (denom * (-tail_tol.ln()).max(0.0) / (PI * u.tau.im)).sqrt();
    let c = (0..n)
        .map(|k| {
            let centre = (k * n1) as f64 / n as f64;
            let lo = (centre - reach / n as f64).floor() as i64;
            let hi = (centre + reach / n as f64).ceil() as i64;
            (lo..=hi)
                .map(|k1| {
                    let k2 = k - k1;
                    let d = (k1 * n2 - k2 * n1) as f64;
                    u.coeff(k1) * v.coeff(k2) * q_pow(u.tau, d * d / denom)
                })
                .sum()
        })
        .collect();
    ThetaVector::new(n, u.tau, c)
}

/// `(x, y)` with `z = x + τy`.
pub fn real_coordinates(z: C64, tau: C64) -> (f64, f64) {
    let y = z.im / tau.im;
    (z.re - tau.re * y, y)
}

/// `e^{πin(t/Im τ + xy + τy²)}·Σ_{|k| ≤ K} c(k) q^{k²/n} e^{2πikz}`.
pub fn theta_eval_with_cut(u: &ThetaVector, z: C64, t: f64, k_cut: i64) -> C64 {
    let (x, y) = real_coordinates(z, u.tau);
    let n = u.n as f64;
    let pre = (C64::new(0.0, PI * n) * (t / u.tau.im + x * y + u.tau * y * y)).exp();
    let sum: C64 = (-k_cut..=k_cut)
        .map(|k| {
            let kf = k as f64;
            u.coeff(k) * q_pow(u.tau, kf * kf / n) * (C64::new(0.0, 2.0 * PI * kf) * z).exp()
        })
        .sum();
    pre * sum
}

/// Cutoff beyond which the summands of the theta series fall below `1e-16` relative to the peak.
pub fn theta_cutoff(u: &ThetaVector, z: C64) -> i64 {
    let n = u.n as f64;
    let y = z.im / u.tau.im;
    (n * y.abs() + (n * 16.0 * 10f64.ln() / (PI * u.tau.im)).sqrt()).ceil() as i64 + 1
}

pub fn theta_eval(u: &ThetaVector, z: C64, t: f64) -> C64 {
    theta_eval_with_cut(u, z, t, theta_cutoff(u, z))
}

/// The section `f̃(u; k) = c(k)·e^{πinτu²}`.
pub fn zak_bridge(u: &ThetaVector) -> Result<ZakSection, ThetaError> {
    let width = C64::new(0.0, -PI * u.n as f64) * u.tau;
    let data = u
        .c
        .iter()
        .map(|&c| GaussSum::gaussian(TruncatedSeries::constant(c, 0), C64::new(0.0, 0.0), width))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ZakSection::new(u.n, data)?)
}

/// `1/(2i√(π Im τ))`.
fn c_q(tau: C64) -> C64 {
    C64::new(0.0, -1.0) / (2.0 * (PI * tau.im).sqrt())
}

/// `q̃ f̃ = c(2πinτu f̃ - f̃′)`.
pub fn elliptic_q(f: &ZakSection, tau: C64) -> ZakSection {
    let lin = C64::new(0.0, 2.0 * PI * f.degree() as f64) * tau;
    let c = c_q(tau);
    f.map_residues(|g| g.mul_x().scale_c(lin).sub(&g.derivative()).scale_c(c))
}

/// `p̃ f̃ = c(f̃′ - 2πinτ̄u f̃)`.
pub fn elliptic_p(f: &ZakSection, tau: C64) -> ZakSection {
    let lin = C64::new(0.0, 2.0 * PI * f.degree() as f64) * tau.conj();
    let c = c_q(tau);
    f.map_residues(|g| g.derivative().sub(&g.mul_x().scale_c(lin)).scale_c(c))
}

/// Function-picture value `e^{πin(t/Im τ + xy)}·Σ_k e^{2πikx} f̃(y + k/n; k)`.
pub fn elliptic_eval(f: &ZakSection, tau: C64, (x, y, t): (f64, f64, f64)) -> TruncatedSeries {
    let n = f.degree() as f64;
    let pre = C64::from_polar(1.0, PI * n * (t / tau.im + x * y));
    let mut acc = TruncatedSeries::zero(f.order());
    for k in support_range(f, y) {
        let ph = pre * C64::from_polar(1.0, 2.0 * PI * k as f64 * x);
        acc += &f.component(k).evaluate(y + k as f64 / n).scale(ph);
    }
    acc
}

fn support_range(f: &ZakSection, y: f64) -> std::ops::RangeInclusive<i64> {
    let r = f.data().iter().map(|g| g.support_radius(EVAL_TOL)).fold(0.0, f64::max);
    let n = f.degree() as f64;
    let (a, b) = (n * (-r - y), n * (r - y));
    (a.min(b).floor() as i64)..=(a.max(b).ceil() as i64)
}

/// `∇f` at a point, by differentiating the function-picture sum term by term.
pub fn nabla_eval(f: &ZakSection, tau: C64, (x, y, t): (f64, f64, f64)) -> TruncatedSeries {
    let n = f.degree() as f64;
    let z = C64::new(x, 0.0) + tau * y;
    let pre = C64::from_polar(1.0, PI * n * (t / tau.im + x * y));
    let i = C64::new(0.0, 1.0);
    let mut acc = TruncatedSeries::zero(f.order());
    for k in support_range(f, y) {
        let kf = k as f64;
        let ph = pre * C64::from_polar(1.0, 2.0 * PI * kf * x);
        let u = y + kf / n;
        let g = f.component(k);
        // τ∂_x brings τ(πiny + 2πik); -∂_y brings -πinx and -∂_u; Im(τ)z∂_t brings πinz.
        let mult = tau * i * PI * (n * y + 2.0 * kf) - i * PI * n * x + i * PI * n * z;
        let v = g.evaluate(u).scale(mult) - g.derivative().evaluate(u);
        acc += &v.scale(ph);
    }
    acc
}

/// `max |∇f|` over the sample points.
pub fn holomorphy_defect(f: &ZakSection, tau: C64, points: &[(f64, f64, f64)]) -> f64 {
    points.iter().map(|&p| nabla_eval(f, tau, p).max_abs()).fold(0.0, f64::max)
}

/// Holomorphy defect of the bridged section of a theta vector.
pub fn theta_holomorphy_defect(u: &ThetaVector, points: &[(f64, f64, f64)]) -> Result<f64, ThetaError> {
    Ok(holomorphy_defect(&zak_bridge(u)?, u.tau, points))
}

/// `Σ_j (-θ)^j/j!·(p̃^j f₁) ∗₀ (q̃^j f₂)` with the elliptic operators.
pub fn elliptic_star_product(
    f1: &ZakSection,
    f2: &ZakSection,
    tau: C64,
    theta: &DeformationParameter,
) -> Result<ZakSection, ThetaError> {
    let order = theta.order();
    let lift = |f: &ZakSection| f.map_residues(|g| lift_order(g, order));
    let (f1, f2) = (lift(f1), lift(f2));
    let zero = DeformationParameter::zero(order);
    let mut acc = star_product_zak(&f1, &f2, &zero)?;
    let mut pj = f1;
    let mut qj = f2;
    let minus_theta = theta.series().scale_real(-1.0);
    let mut coeff = TruncatedSeries::one(order);
    for j in 1..=order {
        pj = elliptic_p(&pj, tau);
        qj = elliptic_q(&qj, tau);
        coeff = (&coeff * &minus_theta).scale_real(1.0 / j as f64);
        acc = acc.add(&star_product_zak(&pj, &qj, &zero)?.scale(&coeff))?;
    }
    Ok(acc)
}

/// Re-embeds a sum with numeric coefficients at truncation order `order`.
fn lift_order(g: &GaussSum, order: usize) -> GaussSum {
    if g.order() == order {
        return g.clone();
    }
    let terms = g.terms().into_iter().map(|mut t| {
        let mut c = vec![C64::new(0.0, 0.0); order + 1];
        for (dst, src) in c.iter_mut().zip(t.coeff.coeffs()) {
            *dst = *src;
        }
        t.coeff = TruncatedSeries::from_coeffs(c);
        t
    });
    GaussSum::from_terms(order, terms.collect::<Vec<_>>()).expect("widths already validated")
}

/// Per-order defect between the deformed and undeformed products of two bridged sections.
pub fn undeformed_product_defect(
    u: &ThetaVector,
    v: &ThetaVector,
    theta: &DeformationParameter,
    points: &[(f64, f64, f64)],
) -> Result<Defect, ThetaError> {
    if u.tau != v.tau {
        return Err(ThetaError::TauMismatch(u.tau, v.tau));
    }
    let (a, b) = (zak_bridge(u)?, zak_bridge(v)?);
    let deformed = elliptic_star_product(&a, &b, u.tau, theta)?;
    let plain = elliptic_star_product(&a, &b, u.tau, &DeformationParameter::zero(theta.order()))?;
    let mut d = Defect::zero(theta.order());
    for &p in points {
        d.absorb(&(elliptic_eval(&deformed, u.tau, p) - elliptic_eval(&plain, u.tau, p)));
    }
    Ok(d)
}
