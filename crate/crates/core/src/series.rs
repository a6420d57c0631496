//! Truncated formal power series in ℏ with complex coefficients.
//!
//! Every deformed structure in the crate takes its scalars from
//! `C[[ℏ]] / ℏ^(N+1)`. Values remember their truncation order `N`;
//! combining values of different orders is an error rather than a silent
//! re-truncation.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;
use num_rational::Ratio;
use thiserror::Error;

/// Complex scalar used throughout the crate.
pub type C64 = Complex64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("truncation order mismatch: {0} vs {1}")]
    OrderMismatch(usize, usize),
    #[error("expected valuation >= 1, found constant term {0}")]
    NonzeroConstant(C64),
    #[error("series with zero constant term is not invertible")]
    NotInvertible,
}

/// An element of `C[[ℏ]]` truncated after `ℏ^order`.
#[derive(Clone, PartialEq)]
pub struct TruncatedSeries {
    coeffs: Vec<C64>,
}

impl TruncatedSeries {
    pub fn zero(order: usize) -> Self {
        Self { coeffs: vec![C64::new(0.0, 0.0); order + 1] }
    }

    pub fn one(order: usize) -> Self {
        Self::constant(C64::new(1.0, 0.0), order)
    }

    pub fn constant(c: C64, order: usize) -> Self {
        let mut s = Self::zero(order);
        s.coeffs[0] = c;
        s
    }

    pub fn real(c: f64, order: usize) -> Self {
        Self::constant(C64::new(c, 0.0), order)
    }

    /// `c·ℏ^power`, or zero when `power` exceeds the order.
    pub fn monomial(power: usize, c: C64, order: usize) -> Self {
        let mut s = Self::zero(order);
        if power <= order {
            s.coeffs[power] = c;
        }
        s
    }

    /// The formal variable ℏ itself.
    pub fn hbar(order: usize) -> Self {
        Self::monomial(1, C64::new(1.0, 0.0), order)
    }

    /// Builds a series from explicit coefficients; the order is `len - 1`.
    ///
    /// # Panics
    /// If `coeffs` is empty.
    pub fn from_coeffs(coeffs: Vec<C64>) -> Self {
        assert!(!coeffs.is_empty(), "a truncated series needs at least one coefficient");
        Self { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::from_coeffs(coeffs.iter().map(|&c| C64::new(c, 0.0)).collect())
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeff(&self, j: usize) -> C64 {
        self.coeffs.get(j).copied().unwrap_or_default()
    }

    pub fn constant_term(&self) -> C64 {
        self.coeffs[0]
    }

    /// Index of the first nonzero coefficient, `None` for the zero series.
    pub fn valuation(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| *c != C64::new(0.0, 0.0))
    }

    pub fn is_zero(&self) -> bool {
        self.valuation().is_none()
    }

    /// Largest coefficient magnitude.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest coefficient-wise distance to `other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.check_order(other).expect("order mismatch in comparison");
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.order() == other.order() && self.max_abs_diff(other) <= tol
    }

    fn check_order(&self, other: &Self) -> Result<(), SeriesError> {
        if self.order() == other.order() {
            Ok(())
        } else {
            Err(SeriesError::OrderMismatch(self.order(), other.order()))
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check_order(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(Self { coeffs })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check_order(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Ok(Self { coeffs })
    }

    /// Cauchy product truncated at the common order.
    pub fn try_mul(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check_order(other)?;
        let n = self.order();
        let mut out = vec![C64::new(0.0, 0.0); n + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if *a == C64::new(0.0, 0.0) {
                continue;
            }
            for (j, b) in other.coeffs[..=n - i].iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Ok(Self { coeffs: out })
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|a| a * c).collect() }
    }

    pub fn scale_real(&self, c: f64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|a| a * c).collect() }
    }

    /// Coefficient-wise complex conjugate (ℏ treated as real).
    pub fn conj(&self) -> Self {
        Self { coeffs: self.coeffs.iter().map(|a| a.conj()).collect() }
    }

    pub fn pow(&self, mut e: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one(self.order());
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// `Σ_{j≤N} a^j / j!`, defined when the constant term vanishes.
    pub fn exp(&self) -> Result<Self, SeriesError> {
        if self.coeffs[0] != C64::new(0.0, 0.0) {
            return Err(SeriesError::NonzeroConstant(self.coeffs[0]));
        }
        let n = self.order();
        let mut acc = Self::one(n);
        let mut term = Self::one(n);
        for j in 1..=n {
            term = (&term * self).scale_real(1.0 / j as f64);
            if term.is_zero() {
                break;
            }
            acc += &term;
        }
        Ok(acc)
    }

    /// Multiplicative inverse by long division; requires a nonzero constant term.
    pub fn invert(&self) -> Result<Self, SeriesError> {
        let a0 = self.coeffs[0];
        if a0 == C64::new(0.0, 0.0) {
            return Err(SeriesError::NotInvertible);
        }
        let n = self.order();
        let mut b = vec![C64::new(0.0, 0.0); n + 1];
        b[0] = a0.inv();
        for k in 1..=n {
            let mut s = C64::new(0.0, 0.0);
            for j in 1..=k {
                s += self.coeffs[j] * b[k - j];
            }
            b[k] = -s * b[0];
        }
        Ok(Self { coeffs: b })
    }

    /// Evaluates the truncated polynomial at a numeric value of ℏ.
    pub fn eval_at(&self, h: C64) -> C64 {
        self.coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, c| acc * h + c)
    }
}

impl fmt::Debug for TruncatedSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TruncatedSeries{:?}", self.coeffs)
    }
}

impl fmt::Display for TruncatedSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (j, c) in self.coeffs.iter().enumerate() {
            if c.norm() == 0.0 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match j {
                0 => write!(f, "({c})")?,
                1 => write!(f, "({c})ħ")?,
                _ => write!(f, "({c})ħ^{j}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

// The operator impls panic on order mismatch; the `try_*` methods report it.
macro_rules! binop {
    ($tr:ident, $m:ident, $try:ident) => {
        impl $tr<&TruncatedSeries> for &TruncatedSeries {
            type Output = TruncatedSeries;
            fn $m(self, rhs: &TruncatedSeries) -> TruncatedSeries {
                self.$try(rhs).unwrap_or_else(|e| panic!("{e}"))
            }
        }
        impl $tr<TruncatedSeries> for TruncatedSeries {
            type Output = TruncatedSeries;
            fn $m(self, rhs: TruncatedSeries) -> TruncatedSeries {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&TruncatedSeries> for TruncatedSeries {
            type Output = TruncatedSeries;
            fn $m(self, rhs: &TruncatedSeries) -> TruncatedSeries {
                (&self).$m(rhs)
            }
        }
    };
}

binop!(Add, add, try_add);
binop!(Sub, sub, try_sub);
binop!(Mul, mul, try_mul);

impl AddAssign<&TruncatedSeries> for TruncatedSeries {
    fn add_assign(&mut self, rhs: &TruncatedSeries) {
        assert_eq!(self.order(), rhs.order(), "truncation order mismatch");
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a += b;
        }
    }
}

impl SubAssign<&TruncatedSeries> for TruncatedSeries {
    fn sub_assign(&mut self, rhs: &TruncatedSeries) {
        assert_eq!(self.order(), rhs.order(), "truncation order mismatch");
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a -= b;
        }
    }
}

impl Neg for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn neg(self) -> TruncatedSeries {
        TruncatedSeries { coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }
}

impl Neg for TruncatedSeries {
    type Output = TruncatedSeries;
    fn neg(self) -> TruncatedSeries {
        -&self
    }
}

/// A deformation parameter θ ∈ ℏC[[ℏ]]: a series with vanishing constant term.
#[derive(Clone, Debug, PartialEq)]
pub struct DeformationParameter(TruncatedSeries);

impl DeformationParameter {
    pub fn new(series: TruncatedSeries) -> Result<Self, SeriesError> {
        let c0 = series.constant_term();
        if c0 != C64::new(0.0, 0.0) {
            return Err(SeriesError::NonzeroConstant(c0));
        }
        Ok(Self(series))
    }

    /// θ from real ℏ-coefficients `[0, θ₁, θ₂, …]`; the length fixes the order.
    pub fn from_real(coeffs: &[f64]) -> Result<Self, SeriesError> {
        Self::new(TruncatedSeries::from_real(coeffs))
    }

    pub fn zero(order: usize) -> Self {
        Self(TruncatedSeries::zero(order))
    }

    /// θ = ℏ.
    pub fn hbar(order: usize) -> Self {
        Self(TruncatedSeries::hbar(order))
    }

    pub fn series(&self) -> &TruncatedSeries {
        &self.0
    }

    pub fn into_series(self) -> TruncatedSeries {
        self.0
    }

    pub fn order(&self) -> usize {
        self.0.order()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    /// `θ / (1 + rθ)`; see [`alpha`].
    pub fn alpha(&self, r: Ratio<i64>) -> Self {
        alpha(r, self)
    }
}

/// The action of ℚ on deformation parameters, `α_r(θ) = θ·(1 + rθ)^{-1}`.
///
/// `α_j ∘ α_k = α_{j+k}`, and valuation ≥ 1 is preserved.
pub fn alpha(r: Ratio<i64>, theta: &DeformationParameter) -> DeformationParameter {
    let n = theta.order();
    let r = *r.numer() as f64 / *r.denom() as f64;
    let denom = &TruncatedSeries::one(n) + &theta.0.scale_real(r);
    let inv = denom.invert().expect("1 + rθ always has constant term 1");
    DeformationParameter(&theta.0 * &inv)
}

/// Per-order supremum of a discrepancy, accumulated over sample points or terms.
#[derive(Clone, Debug, PartialEq)]
pub struct Defect {
    by_order: Vec<f64>,
}

impl Defect {
    pub fn zero(order: usize) -> Self {
        Self { by_order: vec![0.0; order + 1] }
    }

    pub fn from_series(s: &TruncatedSeries) -> Self {
        Self { by_order: s.coeffs.iter().map(|c| c.norm()).collect() }
    }

    pub fn from_by_order(by_order: Vec<f64>) -> Self {
        Self { by_order }
    }

    /// Raises each order to at least the corresponding coefficient magnitude of `s`.
    pub fn absorb(&mut self, s: &TruncatedSeries) {
        for (d, c) in self.by_order.iter_mut().zip(&s.coeffs) {
            *d = d.max(c.norm());
        }
    }

    pub fn merge(&mut self, other: &Defect) {
        for (d, o) in self.by_order.iter_mut().zip(&other.by_order) {
            *d = d.max(*o);
        }
    }

    pub fn by_order(&self) -> &[f64] {
        &self.by_order
    }

    pub fn max(&self) -> f64 {
        self.by_order.iter().copied().fold(0.0, f64::max)
    }

    /// First ℏ-order whose defect exceeds `tol`.
    pub fn leading_order(&self, tol: f64) -> Option<usize> {
        self.by_order.iter().position(|d| *d > tol)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { by_order: self.by_order.iter().map(|d| d * factor).collect() }
    }
}
