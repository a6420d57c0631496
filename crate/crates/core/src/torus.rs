//! Deformed torus algebras as finite Fourier series.
//!
//! An element is `Σ a_{mk} e^{2πi(mx + ky)}` with truncated-series coefficients.
//! The twisted product of two Fourier modes only picks up a phase,
//! `exp{-θ·λ_p(mode₁)·λ_q(mode₂)}`, where `λ_p`, `λ_q` are the eigenvalues of the
//! `p`, `q` vector fields on the modes. The flat and elliptic realizations differ
//! only in those eigenvalues and in which mode is called `U` and which `V`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use thiserror::Error;

use crate::series::{DeformationParameter, SeriesError, TruncatedSeries, C64};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TorusError {
    #[error("realization mismatch")]
    RealizationMismatch,
    #[error("modular parameter must have positive imaginary part, got {0}")]
    InvalidTau(C64),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Realization {
    /// `V = e^{2πix}`, `U = e^{2πiy}`, with `p = ∂_x/√(2π)`, `q = -i(∂_y + x∂_t)/√(2π)`.
    Flat,
    /// `U = e^{2πix}`, `V = e^{2πiy}` on `C/(Z + τZ)`, `z = x + τy`.
    Elliptic { tau: C64 },
}

impl Realization {
    pub fn elliptic(tau: C64) -> Result<Self, TorusError> {
        if tau.im > 0.0 {
            Ok(Realization::Elliptic { tau })
        } else {
            Err(TorusError::InvalidTau(tau))
        }
    }

    /// Fourier mode of the generator `U`.
    pub fn u_mode(&self) -> (i64, i64) {
        match self {
            Realization::Flat => (0, 1),
            Realization::Elliptic { .. } => (1, 0),
        }
    }

    /// Fourier mode of the generator `V`.
    pub fn v_mode(&self) -> (i64, i64) {
        match self {
            Realization::Flat => (1, 0),
            Realization::Elliptic { .. } => (0, 1),
        }
    }

    /// `λ_p(m₁,k₁)·λ_q(m₂,k₂)`, the exponent the twist contributes per power of `-θ`.
    pub fn eigen_product(&self, (m1, k1): (i64, i64), (m2, k2): (i64, i64)) -> C64 {
        match *self {
            Realization::Flat => C64::new(0.0, 2.0 * PI * (m1 * k2) as f64),
            Realization::Elliptic { tau } => {
                let lp = C64::new(k1 as f64, 0.0) - tau.conj() * m1 as f64;
                let lq = tau * m2 as f64 - k2 as f64;
                lp * lq * (PI / tau.im)
            }
        }
    }
}

/// Finite Fourier series on a deformed torus.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusElement {
    realization: Realization,
    order: usize,
    coeffs: BTreeMap<(i64, i64), TruncatedSeries>,
}

impl TorusElement {
    pub fn zero(realization: Realization, order: usize) -> Self {
        Self { realization, order, coeffs: BTreeMap::new() }
    }

    pub fn one(realization: Realization, order: usize) -> Self {
        Self::monomial(realization, (0, 0), TruncatedSeries::one(order))
    }

    pub fn monomial(realization: Realization, mode: (i64, i64), c: TruncatedSeries) -> Self {
        let mut out = Self::zero(realization, c.order());
        out.insert(mode, c);
        out
    }

    pub fn u(realization: Realization, order: usize) -> Self {
        Self::monomial(realization, realization.u_mode(), TruncatedSeries::one(order))
    }

    pub fn v(realization: Realization, order: usize) -> Self {
        Self::monomial(realization, realization.v_mode(), TruncatedSeries::one(order))
    }

    pub fn from_coeffs(
        realization: Realization,
        order: usize,
        coeffs: impl IntoIterator<Item = ((i64, i64), TruncatedSeries)>,
    ) -> Self {
        let mut out = Self::zero(realization, order);
        for (mode, c) in coeffs {
            out.insert(mode, c);
        }
        out
    }

    pub fn realization(&self) -> Realization {
        self.realization
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coeffs(&self) -> &BTreeMap<(i64, i64), TruncatedSeries> {
        &self.coeffs
    }

    pub fn coeff(&self, mode: (i64, i64)) -> TruncatedSeries {
        self.coeffs.get(&mode).cloned().unwrap_or_else(|| TruncatedSeries::zero(self.order))
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn insert(&mut self, mode: (i64, i64), c: TruncatedSeries) {
        assert_eq!(c.order(), self.order, "truncation order mismatch");
        let entry = self.coeffs.entry(mode).or_insert_with(|| TruncatedSeries::zero(c.order()));
        *entry += &c;
        if entry.is_zero() {
            self.coeffs.remove(&mode);
        }
    }

    fn check(&self, other: &Self) -> Result<(), TorusError> {
        if self.realization != other.realization {
            return Err(TorusError::RealizationMismatch);
        }
        if self.order != other.order {
            return Err(SeriesError::OrderMismatch(self.order, other.order).into());
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, TorusError> {
        self.check(other)?;
        let mut out = self.clone();
        for (mode, c) in &other.coeffs {
            out.insert(*mode, c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, TorusError> {
        self.add(&other.scale(&TruncatedSeries::real(-1.0, self.order)))
    }

    pub fn scale(&self, c: &TruncatedSeries) -> Self {
        let mut out = Self::zero(self.realization, self.order);
        for (mode, a) in &self.coeffs {
            out.insert(*mode, a * c);
        }
        out
    }

    /// Twisted product `a ∗_θ b = m ∘ F_θ^{-1}(a ⊗ b)`.
    pub fn star_mul(&self, other: &Self, theta: &DeformationParameter) -> Result<Self, TorusError> {
        self.check(other)?;
        if theta.order() != self.order {
            return Err(SeriesError::OrderMismatch(self.order, theta.order()).into());
        }
        let mut out = Self::zero(self.realization, self.order);
        for (&m1, a) in &self.coeffs {
            for (&m2, b) in &other.coeffs {
                let phase = self.phase(m1, m2, theta);
                out.insert((m1.0 + m2.0, m1.1 + m2.1), &(a * b) * &phase);
            }
        }
        Ok(out)
    }

    /// The phase `exp{-θ λ_p(m₁) λ_q(m₂)}` attached to a product of two modes.
    pub fn phase(&self, m1: (i64, i64), m2: (i64, i64), theta: &DeformationParameter) -> TruncatedSeries {
        let lam = self.realization.eigen_product(m1, m2);
        theta.series().scale(-lam).exp().expect("θ has valuation >= 1")
    }

    /// The star-inverse of the monomial at `mode`.
    pub fn monomial_inverse(&self, mode: (i64, i64), theta: &DeformationParameter) -> Self {
        let inv_mode = (-mode.0, -mode.1);
        let phase = self.phase(mode, inv_mode, theta).invert().expect("phases are units");
        Self::monomial(self.realization, inv_mode, phase)
    }

    /// Undeformed (pointwise) product.
    pub fn pointwise_mul(&self, other: &Self) -> Result<Self, TorusError> {
        self.star_mul(other, &DeformationParameter::zero(self.order))
    }

    /// Value of the function at `(x, y)`, coefficient-wise in ℏ.
    pub fn evaluate(&self, x: f64, y: f64) -> TruncatedSeries {
        let mut acc = TruncatedSeries::zero(self.order);
        for (&(m, k), c) in &self.coeffs {
            let ph = C64::from_polar(1.0, 2.0 * PI * (m as f64 * x + k as f64 * y));
            acc += &c.scale(ph);
        }
        acc
    }

    /// Largest coefficient magnitude over all modes and ℏ-orders.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.values().map(TruncatedSeries::max_abs).fold(0.0, f64::max)
    }
}

/// The coefficient of `UV` in `U ∗_θ V - phase · V ∗_θ U`.
pub fn commutation_defect_with_phase(
    realization: Realization,
    theta: &DeformationParameter,
    phase: &TruncatedSeries,
) -> TruncatedSeries {
    let n = theta.order();
    let u = TorusElement::u(realization, n);
    let v = TorusElement::v(realization, n);
    let uv = u.star_mul(&v, theta).expect("same realization");
    let vu = v.star_mul(&u, theta).expect("same realization");
    let diff = uv.sub(&vu.scale(phase)).expect("same realization");
    diff.coeff((1, 1))
}

/// Defect of `U ∗_θ V = e^{2πiθ} V ∗_θ U`, as a series.
pub fn commutation_defect(realization: Realization, theta: &DeformationParameter) -> TruncatedSeries {
    let phase = theta
        .series()
        .scale(C64::new(0.0, 2.0 * PI))
        .exp()
        .expect("θ has valuation >= 1");
    commutation_defect_with_phase(realization, theta, &phase)
}
