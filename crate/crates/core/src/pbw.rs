//! PBW normal forms in `U(h₃)^{⊗L}` with truncated-series coefficients.
//!
//! A leg monomial is stored in the normal order `t^c q^b p^a`; products are
//! reduced with `p^a q^b = Σ_k C(a,k) C(b,k) k! q^{b-k} t^k p^{a-k}`, which is
//! the relation `[p, q] = t` with `t` central. Tensor elements have at most
//! four legs, enough for the pentagon identity.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::series::{DeformationParameter, SeriesError, TruncatedSeries, C64};

pub const MAX_LEGS: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PbwError {
    #[error("leg count mismatch: {0} vs {1}")]
    LegMismatch(usize, usize),
    #[error("operation would exceed {MAX_LEGS} tensor legs")]
    TooManyLegs,
    #[error("leg index {index} out of range for {legs} legs")]
    LegOutOfRange { index: usize, legs: usize },
    #[error("exponential needs every coefficient to have valuation >= 1")]
    NotNilpotent,
    #[error("element is not invertible: its unit coefficient has zero constant term")]
    NotInvertible,
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// `t^t q^q p^p` in one tensor leg.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LegMonomial {
    pub t: u32,
    pub q: u32,
    pub p: u32,
}

impl LegMonomial {
    pub const ONE: LegMonomial = LegMonomial { t: 0, q: 0, p: 0 };
    pub const P: LegMonomial = LegMonomial { t: 0, q: 0, p: 1 };
    pub const Q: LegMonomial = LegMonomial { t: 0, q: 1, p: 0 };
    pub const T: LegMonomial = LegMonomial { t: 1, q: 0, p: 0 };

    pub fn new(t: u32, q: u32, p: u32) -> Self {
        Self { t, q, p }
    }

    pub fn is_one(&self) -> bool {
        *self == Self::ONE
    }

    pub fn degree(&self) -> u32 {
        self.t + self.q + self.p
    }

    /// Normal-ordered product `self · rhs` as a list of `(coefficient, monomial)`.
    pub fn product(&self, rhs: &LegMonomial) -> Vec<(f64, LegMonomial)> {
        // t^c1 q^b1 (p^a1 q^b2) t^c2 p^a2 with the middle factor reordered.
        let (a, b) = (self.p, rhs.q);
        let mut out = Vec::with_capacity(a.min(b) as usize + 1);
        let mut coeff = 1.0;
        for k in 0..=a.min(b) {
            if k > 0 {
                // C(a,k) C(b,k) k! from the previous k by the ratio (a-k+1)(b-k+1)/k
                coeff *= ((a - k + 1) * (b - k + 1)) as f64 / k as f64;
            }
            out.push((
                coeff,
                LegMonomial {
                    t: self.t + rhs.t + k,
                    q: self.q + b - k,
                    p: a - k + rhs.p,
                },
            ));
        }
        out
    }

    /// `Δ(t^c q^b p^a)` with every generator primitive.
    pub fn coproduct(&self) -> Vec<(f64, LegMonomial, LegMonomial)> {
        let mut out = Vec::new();
        for i in 0..=self.t {
            for j in 0..=self.q {
                for l in 0..=self.p {
                    let c = binomial(self.t, i) * binomial(self.q, j) * binomial(self.p, l);
                    out.push((
                        c,
                        LegMonomial::new(i, j, l),
                        LegMonomial::new(self.t - i, self.q - j, self.p - l),
                    ));
                }
            }
        }
        out
    }
}

pub(crate) fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Which Heisenberg generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Generator {
    P,
    Q,
    T,
}

impl Generator {
    pub fn monomial(self) -> LegMonomial {
        match self {
            Generator::P => LegMonomial::P,
            Generator::Q => LegMonomial::Q,
            Generator::T => LegMonomial::T,
        }
    }
}

/// Element of `U(h₃)^{⊗L}[[ℏ]]` in normal form, `1 ≤ L ≤ 4`.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorElement {
    legs: usize,
    order: usize,
    terms: BTreeMap<Vec<LegMonomial>, TruncatedSeries>,
}

impl TensorElement {
    pub fn zero(legs: usize, order: usize) -> Self {
        assert!((1..=MAX_LEGS).contains(&legs), "tensor elements have 1..=4 legs");
        Self { legs, order, terms: BTreeMap::new() }
    }

    pub fn unit(legs: usize, order: usize) -> Self {
        Self::scalar(TruncatedSeries::one(order), legs)
    }

    pub fn scalar(c: TruncatedSeries, legs: usize) -> Self {
        let mut out = Self::zero(legs, c.order());
        out.insert(vec![LegMonomial::ONE; legs], c);
        out
    }

    /// A single generator in a one-leg element.
    pub fn generator(g: Generator, order: usize) -> Self {
        Self::monomial(vec![g.monomial()], TruncatedSeries::one(order))
    }

    pub fn monomial(key: Vec<LegMonomial>, c: TruncatedSeries) -> Self {
        let mut out = Self::zero(key.len(), c.order());
        out.insert(key, c);
        out
    }

    pub fn legs(&self) -> usize {
        self.legs
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[LegMonomial], &TruncatedSeries)> {
        self.terms.iter().map(|(k, v)| (k.as_slice(), v))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, key: &[LegMonomial]) -> TruncatedSeries {
        self.terms.get(key).cloned().unwrap_or_else(|| TruncatedSeries::zero(self.order))
    }

    fn insert(&mut self, key: Vec<LegMonomial>, c: TruncatedSeries) {
        debug_assert_eq!(key.len(), self.legs);
        match self.terms.get_mut(&key) {
            Some(existing) => {
                *existing += &c;
                if existing.is_zero() {
                    self.terms.remove(&key);
                }
            }
            None => {
                if !c.is_zero() {
                    self.terms.insert(key, c);
                }
            }
        }
    }

    fn check_legs(&self, other: &Self) -> Result<(), PbwError> {
        if self.legs != other.legs {
            return Err(PbwError::LegMismatch(self.legs, other.legs));
        }
        if self.order != other.order {
            return Err(SeriesError::OrderMismatch(self.order, other.order).into());
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, PbwError> {
        self.check_legs(other)?;
        let mut out = self.clone();
        for (k, v) in &other.terms {
            out.insert(k.clone(), v.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, PbwError> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale(&TruncatedSeries::real(-1.0, self.order))
    }

    pub fn scale(&self, c: &TruncatedSeries) -> Self {
        let mut out = Self::zero(self.legs, self.order);
        for (k, v) in &self.terms {
            out.insert(k.clone(), v * c);
        }
        out
    }

    /// Legwise product reduced to normal form.
    pub fn mul(&self, other: &Self) -> Result<Self, PbwError> {
        self.check_legs(other)?;
        let n = self.order;
        let mut out = Self::zero(self.legs, n);
        for (k1, c1) in &self.terms {
            let v1 = c1.valuation().unwrap_or(n + 1);
            for (k2, c2) in &other.terms {
                let v2 = c2.valuation().unwrap_or(n + 1);
                if v1 + v2 > n {
                    continue;
                }
                let c = c1 * c2;
                // Cartesian product of the per-leg reorderings.
                let mut partial: Vec<(f64, Vec<LegMonomial>)> = vec![(1.0, Vec::with_capacity(self.legs))];
                for (m1, m2) in k1.iter().zip(k2) {
                    let leg = m1.product(m2);
                    let mut next = Vec::with_capacity(partial.len() * leg.len());
                    for (pc, pk) in &partial {
                        for (lc, lm) in &leg {
                            let mut key = pk.clone();
                            key.push(*lm);
                            next.push((pc * lc, key));
                        }
                    }
                    partial = next;
                }
                for (pc, key) in partial {
                    out.insert(key, c.scale_real(pc));
                }
            }
        }
        Ok(out)
    }

    /// Applies the primitive coproduct to `leg`, producing `L + 1` legs.
    pub fn coproduct(&self, leg: usize) -> Result<Self, PbwError> {
        if self.legs >= MAX_LEGS {
            return Err(PbwError::TooManyLegs);
        }
        self.check_leg(leg)?;
        let mut out = Self::zero(self.legs + 1, self.order);
        for (k, v) in &self.terms {
            for (c, left, right) in k[leg].coproduct() {
                let mut key = Vec::with_capacity(self.legs + 1);
                key.extend_from_slice(&k[..leg]);
                key.push(left);
                key.push(right);
                key.extend_from_slice(&k[leg + 1..]);
                out.insert(key, v.scale_real(c));
            }
        }
        Ok(out)
    }

    /// Applies the counit to `leg`, producing `L - 1` legs.
    pub fn counit(&self, leg: usize) -> Result<Self, PbwError> {
        self.check_leg(leg)?;
        if self.legs == 1 {
            return Err(PbwError::LegOutOfRange { index: leg, legs: 1 });
        }
        let mut out = Self::zero(self.legs - 1, self.order);
        for (k, v) in &self.terms {
            if k[leg].is_one() {
                let mut key = k.clone();
                key.remove(leg);
                out.insert(key, v.clone());
            }
        }
        Ok(out)
    }

    /// The full counit `ε^{⊗L}`: the coefficient of `1⊗…⊗1`.
    pub fn counit_all(&self) -> TruncatedSeries {
        self.coefficient(&vec![LegMonomial::ONE; self.legs])
    }

    fn check_leg(&self, leg: usize) -> Result<(), PbwError> {
        if leg < self.legs {
            Ok(())
        } else {
            Err(PbwError::LegOutOfRange { index: leg, legs: self.legs })
        }
    }

    /// `Σ_{j≤N} u^j / j!`; every coefficient must have valuation ≥ 1.
    pub fn exp(&self) -> Result<Self, PbwError> {
        if self.terms.values().any(|c| c.constant_term() != C64::new(0.0, 0.0)) {
            return Err(PbwError::NotNilpotent);
        }
        let mut acc = Self::unit(self.legs, self.order);
        let mut term = acc.clone();
        for j in 1..=self.order {
            term = term.mul(self)?.scale(&TruncatedSeries::real(1.0 / j as f64, self.order));
            if term.is_empty() {
                break;
            }
            acc = acc.add(&term)?;
        }
        Ok(acc)
    }

    /// Inverse of `c·(1 + x)` with `c` a nonzero constant and `x` of valuation ≥ 1.
    pub fn invert(&self) -> Result<Self, PbwError> {
        let unit_key = vec![LegMonomial::ONE; self.legs];
        let c = self.coefficient(&unit_key);
        let c0 = c.constant_term();
        if c0 == C64::new(0.0, 0.0) {
            return Err(PbwError::NotInvertible);
        }
        let scalar_inv = TruncatedSeries::constant(c0.inv(), self.order);
        // x = u/c0 - 1 must be ℏ-adically nilpotent.
        let x = self.scale(&scalar_inv).sub(&Self::unit(self.legs, self.order))?;
        if x.terms.values().any(|v| v.constant_term().norm() > 0.0) {
            return Err(PbwError::NotInvertible);
        }
        let minus_x = x.neg();
        let mut acc = Self::unit(self.legs, self.order);
        let mut term = acc.clone();
        for _ in 1..=self.order {
            term = term.mul(&minus_x)?;
            if term.is_empty() {
                break;
            }
            acc = acc.add(&term)?;
        }
        Ok(acc.scale(&scalar_inv))
    }

    /// Puts leg `i` of `self` into leg `positions[i]` of a `total`-leg element,
    /// filling the rest with `1`.
    pub fn place(&self, positions: &[usize], total: usize) -> Result<Self, PbwError> {
        if positions.len() != self.legs {
            return Err(PbwError::LegMismatch(positions.len(), self.legs));
        }
        if total > MAX_LEGS {
            return Err(PbwError::TooManyLegs);
        }
        for &p in positions {
            if p >= total {
                return Err(PbwError::LegOutOfRange { index: p, legs: total });
            }
        }
        let mut out = Self::zero(total, self.order);
        for (k, v) in &self.terms {
            let mut key = vec![LegMonomial::ONE; total];
            for (m, &p) in k.iter().zip(positions) {
                key[p] = *m;
            }
            out.insert(key, v.clone());
        }
        Ok(out)
    }

    /// `self ⊗ other`.
    pub fn tensor(&self, other: &Self) -> Result<Self, PbwError> {
        let legs = self.legs + other.legs;
        if legs > MAX_LEGS {
            return Err(PbwError::TooManyLegs);
        }
        let mut out = Self::zero(legs, self.order);
        for (k1, c1) in &self.terms {
            for (k2, c2) in &other.terms {
                let mut key = k1.clone();
                key.extend_from_slice(k2);
                out.insert(key, c1 * c2);
            }
        }
        Ok(out)
    }

    /// Replaces the central generator in `leg` by the number `value`, i.e.
    /// restricts that leg to a `t`-eigenspace.
    pub fn specialize_central(&self, leg: usize, value: f64) -> Result<Self, PbwError> {
        self.check_leg(leg)?;
        let mut out = Self::zero(self.legs, self.order);
        for (k, v) in &self.terms {
            let mut key = k.clone();
            let factor = value.powi(key[leg].t as i32);
            key[leg].t = 0;
            out.insert(key, v.scale_real(factor));
        }
        Ok(out)
    }

    /// Largest coefficient magnitude over all terms and ℏ-orders.
    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(TruncatedSeries::max_abs).fold(0.0, f64::max)
    }

    /// Largest coefficient magnitude of `self - other`, per ℏ-order.
    pub fn defect_by_order(&self, other: &Self) -> Result<Vec<f64>, PbwError> {
        let diff = self.sub(other)?;
        let mut out = vec![0.0; self.order + 1];
        for v in diff.terms.values() {
            for (j, c) in v.coeffs().iter().enumerate() {
                out[j] = f64::max(out[j], c.norm());
            }
        }
        Ok(out)
    }

    pub fn defect(&self, other: &Self) -> Result<f64, PbwError> {
        Ok(self.defect_by_order(other)?.into_iter().fold(0.0, f64::max))
    }
}

/// Whether coproducts applied to tensor legs are conjugated by the twist.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoproductKind {
    /// The primitive coproduct Δ.
    Plain,
    /// `Δ_F(h) = F Δ(h) F^{-1}` with `F = F_θ`.
    Twisted,
}

/// The twist `F_θ = exp{θ p⊗q}`.
pub fn build_twist(theta: &DeformationParameter) -> TensorElement {
    let n = theta.order();
    let pq = TensorElement::monomial(vec![LegMonomial::P, LegMonomial::Q], theta.series().clone());
    if theta.is_zero() {
        return TensorElement::unit(2, n);
    }
    pq.exp().expect("θ has valuation >= 1")
}

/// `F_θ^{-1} = exp{-θ p⊗q}`.
pub fn build_twist_inverse(theta: &DeformationParameter) -> TensorElement {
    let n = theta.order();
    if theta.is_zero() {
        return TensorElement::unit(2, n);
    }
    TensorElement::monomial(vec![LegMonomial::P, LegMonomial::Q], -theta.series())
        .exp()
        .expect("θ has valuation >= 1")
}

/// `Φ_{θ,θ'} = exp{-p⊗(θ - θ' - θθ' t)⊗q}`.
pub fn build_coassociator(theta: &DeformationParameter, theta_prime: &DeformationParameter) -> TensorElement {
    let n = theta.order();
    let (a, b) = (theta.series(), theta_prime.series());
    let mut exponent = TensorElement::zero(3, n);
    exponent.insert(vec![LegMonomial::P, LegMonomial::ONE, LegMonomial::Q], -(a - b));
    exponent.insert(vec![LegMonomial::P, LegMonomial::T, LegMonomial::Q], a * b);
    exponent.exp().expect("coassociator exponent has valuation >= 1")
}

/// Coproduct on `leg`, optionally conjugated by the twist placed on the two
/// resulting legs.
pub fn coproduct_on(
    u: &TensorElement,
    leg: usize,
    kind: CoproductKind,
    theta: &DeformationParameter,
) -> Result<TensorElement, PbwError> {
    let split = u.coproduct(leg)?;
    match kind {
        CoproductKind::Plain => Ok(split),
        CoproductKind::Twisted => {
            let legs = split.legs();
            let f = build_twist(theta).place(&[leg, leg + 1], legs)?;
            let f_inv = build_twist_inverse(theta).place(&[leg, leg + 1], legs)?;
            f.mul(&split)?.mul(&f_inv)
        }
    }
}

/// Both sides of the twist cocycle identity
/// `(Δ⊗id)(F_θ^{-1})(F_{θ'}^{-1}⊗1) = (id⊗Δ)(F_{θ'}^{-1})(1⊗F_θ^{-1}) Φ_{θ,θ'}`.
pub fn lemma31_sides(
    theta: &DeformationParameter,
    theta_prime: &DeformationParameter,
    phi: &TensorElement,
) -> Result<(TensorElement, TensorElement), PbwError> {
    let f_inv = build_twist_inverse(theta);
    let fp_inv = build_twist_inverse(theta_prime);
    let lhs = f_inv.coproduct(0)?.mul(&fp_inv.place(&[0, 1], 3)?)?;
    let rhs = fp_inv
        .coproduct(1)?
        .mul(&f_inv.place(&[1, 2], 3)?)?
        .mul(phi)?;
    Ok((lhs, rhs))
}

/// Max-coefficient defect of the twist cocycle identity with `Φ_{θ,θ'}`.
pub fn verify_lemma31(theta: &DeformationParameter, theta_prime: &DeformationParameter) -> Result<f64, PbwError> {
    let phi = build_coassociator(theta, theta_prime);
    let (lhs, rhs) = lemma31_sides(theta, theta_prime, &phi)?;
    lhs.defect(&rhs)
}

/// The gauge-transformed coassociator `F₂₃ F₁₍₂₃₎ (F⁻¹)₍₁₂₎₃ (F⁻¹)₁₂` of the
/// trivial coassociator, with parenthesised legs using the plain coproduct.
pub fn twisted_coassociator(theta: &DeformationParameter) -> Result<TensorElement, PbwError> {
    let f = build_twist(theta);
    let f_inv = build_twist_inverse(theta);
    f.place(&[1, 2], 3)?
        .mul(&f.coproduct(1)?)?
        .mul(&f_inv.coproduct(0)?)?
        .mul(&f_inv.place(&[0, 1], 3)?)
}

/// Defect between the gauge-transformed trivial coassociator and `Φ_{θ,θ}`.
pub fn verify_twisted_coassociator(theta: &DeformationParameter) -> Result<f64, PbwError> {
    twisted_coassociator(theta)?.defect(&build_coassociator(theta, theta))
}

/// Both sides of the pentagon `Φ₁₂₍₃₄₎Φ₍₁₂₎₃₄ = Φ₂₃₄Φ₁₍₂₃₎₄Φ₁₂₃` for `Φ_{θ,θ}`.
pub fn pentagon_sides(
    theta: &DeformationParameter,
    kind: CoproductKind,
) -> Result<(TensorElement, TensorElement), PbwError> {
    pentagon_sides_for(&build_coassociator(theta, theta), theta, kind)
}

/// Pentagon sides for an arbitrary three-leg `phi`; the twist for
/// [`CoproductKind::Twisted`] is `F_θ`.
pub fn pentagon_sides_for(
    phi: &TensorElement,
    theta: &DeformationParameter,
    kind: CoproductKind,
) -> Result<(TensorElement, TensorElement), PbwError> {
    let phi = phi.clone();
    let lhs = coproduct_on(&phi, 2, kind, theta)?.mul(&coproduct_on(&phi, 0, kind, theta)?)?;
    let rhs = phi
        .place(&[1, 2, 3], 4)?
        .mul(&coproduct_on(&phi, 1, kind, theta)?)?
        .mul(&phi.place(&[0, 1, 2], 4)?)?;
    Ok((lhs, rhs))
}

pub fn verify_pentagon(theta: &DeformationParameter, kind: CoproductKind) -> Result<f64, PbwError> {
    let (lhs, rhs) = pentagon_sides(theta, kind)?;
    lhs.defect(&rhs)
}

/// Pentagon defect split by ℏ-order.
pub fn pentagon_defect_by_order(theta: &DeformationParameter, kind: CoproductKind) -> Result<Vec<f64>, PbwError> {
    let (lhs, rhs) = pentagon_sides(theta, kind)?;
    lhs.defect_by_order(&rhs)
}

/// Defect of `(id⊗ε⊗id)(Φ_{θ,θ}) = 1`.
pub fn verify_counitality(theta: &DeformationParameter) -> Result<f64, PbwError> {
    let phi = build_coassociator(theta, theta);
    phi.counit(1)?.defect(&TensorElement::unit(2, theta.order()))
}

/// Defect of `(id⊗Δ)Δ(h) = Φ (Δ⊗id)Δ(h) Φ^{-1}` with twisted coproducts and `Φ_{θ,θ}`.
pub fn verify_quasi_coassoc(h: Generator, theta: &DeformationParameter) -> Result<f64, PbwError> {
    quasi_coassoc_defect(h, theta, CoproductKind::Twisted, true)
}

/// Variant used for negative controls: choose the coproduct and whether `Φ` conjugates.
pub fn quasi_coassoc_defect(
    h: Generator,
    theta: &DeformationParameter,
    kind: CoproductKind,
    with_phi: bool,
) -> Result<f64, PbwError> {
    Ok(quasi_coassoc_defect_by_order(h, theta, kind, with_phi)?.into_iter().fold(0.0, f64::max))
}

/// [`quasi_coassoc_defect`] split by ℏ-order.
pub fn quasi_coassoc_defect_by_order(
    h: Generator,
    theta: &DeformationParameter,
    kind: CoproductKind,
    with_phi: bool,
) -> Result<Vec<f64>, PbwError> {
    let n = theta.order();
    let gen = TensorElement::generator(h, n);
    let once = coproduct_on(&gen, 0, kind, theta)?;
    let right = coproduct_on(&once, 1, kind, theta)?;
    let left = coproduct_on(&once, 0, kind, theta)?;
    let left = if with_phi {
        let phi = build_coassociator(theta, theta);
        phi.mul(&left)?.mul(&phi.invert()?)?
    } else {
        left
    };
    right.defect_by_order(&left)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n_ord(order: usize) -> TruncatedSeries {
        TruncatedSeries::one(order)
    }

    /// Acts with a one-leg element on the polynomial `u^m` in the Schrödinger
    /// representation `p = d/du`, `q = u`, `t = 1`; returns coefficients in `u`.
    fn schrodinger_apply(u: &TensorElement, m: usize) -> Vec<f64> {
        let mut out = vec![0.0; m + 16];
        for (key, c) in u.terms() {
            let mono = key[0];
            if mono.p as usize > m {
                continue;
            }
            // p^a u^m = m!/(m-a)! u^{m-a}; then multiply by u^b.
            let mut coeff = c.constant_term().re;
            for i in 0..mono.p as usize {
                coeff *= (m - i) as f64;
            }
            out[m - mono.p as usize + mono.q as usize] += coeff;
        }
        out
    }

    fn single(t: u32, q: u32, p: u32, order: usize) -> TensorElement {
        TensorElement::monomial(vec![LegMonomial::new(t, q, p)], n_ord(order))
    }

    #[test]
    fn pq_reorders_to_qp_plus_t() {
        let p = TensorElement::generator(Generator::P, 2);
        let q = TensorElement::generator(Generator::Q, 2);
        let prod = p.mul(&q).unwrap();
        let want = single(0, 1, 1, 2).add(&single(1, 0, 0, 2)).unwrap();
        assert_eq!(prod, want);
    }

    #[test]
    fn p2q2_matches_schrodinger_oracle() {
        let p2 = single(0, 0, 2, 2);
        let q2 = single(0, 2, 0, 2);
        let prod = p2.mul(&q2).unwrap();
        // q²p² + 4 q t p + 2 t²
        let want = single(0, 2, 2, 2)
            .add(&single(1, 1, 1, 2).scale(&TruncatedSeries::real(4.0, 2)))
            .unwrap()
            .add(&single(2, 0, 0, 2).scale(&TruncatedSeries::real(2.0, 2)))
            .unwrap();
        assert_eq!(prod, want);
        // Oracle: p²(q² u^m) computed directly is (m+2)(m+1) u^m.
        for m in 0..6 {
            let got = schrodinger_apply(&prod, m);
            let expect = ((m + 2) * (m + 1)) as f64;
            assert!((got[m] - expect).abs() < 1e-12, "m = {m}");
        }
    }

    #[test]
    fn reordering_formula_agrees_with_schrodinger_composition() {
        for a in 0..5u32 {
            for b in 0..5u32 {
                let prod = single(0, 0, a, 1).mul(&single(0, b, 0, 1)).unwrap();
                for m in 0..5usize {
                    // direct: p^a (u^{m+b})
                    let mut direct = vec![0.0; m + 16];
                    if a as usize <= m + b as usize {
                        let mut c = 1.0;
                        for i in 0..a as usize {
                            c *= (m + b as usize - i) as f64;
                        }
                        direct[m + b as usize - a as usize] = c;
                    }
                    assert_eq!(schrodinger_apply(&prod, m), direct, "a={a} b={b} m={m}");
                }
            }
        }
    }

    #[test]
    fn unit_is_neutral_and_normal_forms_are_stable() {
        let u = single(1, 2, 3, 2).add(&single(0, 1, 0, 2)).unwrap();
        let one = TensorElement::unit(1, 2);
        assert_eq!(u.mul(&one).unwrap(), u);
        assert_eq!(one.mul(&u).unwrap(), u);
    }

    #[test]
    fn coproduct_examples() {
        let p = TensorElement::generator(Generator::P, 2);
        let dp = p.coproduct(0).unwrap();
        let want = TensorElement::monomial(vec![LegMonomial::P, LegMonomial::ONE], n_ord(2))
            .add(&TensorElement::monomial(vec![LegMonomial::ONE, LegMonomial::P], n_ord(2)))
            .unwrap();
        assert_eq!(dp, want);

        let dp2 = single(0, 0, 2, 2).coproduct(0).unwrap();
        let p2 = LegMonomial::new(0, 0, 2);
        assert_eq!(dp2.len(), 3);
        assert_eq!(dp2.coefficient(&[LegMonomial::P, LegMonomial::P]), TruncatedSeries::real(2.0, 2));
        assert_eq!(dp2.coefficient(&[p2, LegMonomial::ONE]), n_ord(2));

        assert_eq!(TensorElement::unit(1, 2).coproduct(0).unwrap(), TensorElement::unit(2, 2));
        assert_eq!(TensorElement::unit(4, 2).coproduct(0), Err(PbwError::TooManyLegs));
    }

    #[test]
    fn counit_examples() {
        let dp = TensorElement::generator(Generator::P, 2).coproduct(0).unwrap();
        assert_eq!(dp.counit(1).unwrap(), TensorElement::generator(Generator::P, 2));
        assert_eq!(TensorElement::unit(2, 2).counit(0).unwrap(), TensorElement::unit(1, 2));
        let theta = DeformationParameter::hbar(4);
        assert!(verify_counitality(&theta).unwrap() < 1e-15);
    }

    #[test]
    fn exp_examples() {
        let theta = DeformationParameter::hbar(2);
        let f = build_twist(&theta);
        let p2q2 = vec![LegMonomial::new(0, 0, 2), LegMonomial::new(0, 2, 0)];
        assert_eq!(f.len(), 3);
        assert_eq!(f.coefficient(&[LegMonomial::P, LegMonomial::Q]), TruncatedSeries::hbar(2));
        assert_eq!(f.coefficient(&p2q2), TruncatedSeries::monomial(2, C64::new(0.5, 0.0), 2));

        assert_eq!(TensorElement::zero(2, 3).exp().unwrap(), TensorElement::unit(2, 3));
        let bad = TensorElement::unit(1, 2);
        assert_eq!(bad.exp(), Err(PbwError::NotNilpotent));
    }

    #[test]
    fn exp_of_noncommuting_element_times_exp_of_negative_is_unit() {
        let n = 4;
        let h = TruncatedSeries::hbar(n);
        let u = TensorElement::monomial(vec![LegMonomial::P], h.scale_real(0.7))
            .add(&TensorElement::monomial(vec![LegMonomial::Q], h.scale_real(-1.3)))
            .unwrap()
            .add(&TensorElement::monomial(vec![LegMonomial::new(0, 1, 1)], h.clone()))
            .unwrap();
        let prod = u.exp().unwrap().mul(&u.neg().exp().unwrap()).unwrap();
        assert!(prod.defect(&TensorElement::unit(1, n)).unwrap() < 1e-12);
    }

    #[test]
    fn coassociator_on_the_diagonal_is_the_exponential_of_theta_squared() {
        let n = 5;
        let theta = DeformationParameter::from_real(&[0.0, 1.0, 0.5, 0.0, 0.0, 0.0]).unwrap();
        let phi = build_coassociator(&theta, &theta);
        let t2 = theta.series() * theta.series();
        let want = TensorElement::monomial(vec![LegMonomial::P, LegMonomial::T, LegMonomial::Q], t2)
            .exp()
            .unwrap();
        assert!(phi.defect(&want).unwrap() < 1e-14);
        let zero = DeformationParameter::zero(n);
        assert_eq!(build_coassociator(&zero, &zero), TensorElement::unit(3, n));
    }

    #[test]
    fn lemma31_examples() {
        let h = DeformationParameter::hbar(4);
        assert!(verify_lemma31(&h, &h).unwrap() < 1e-10);
        let z = DeformationParameter::zero(4);
        assert_eq!(verify_lemma31(&z, &z).unwrap(), 0.0);

        // Replacing Φ by 1 leaves the θ² p⊗t⊗q term at order ℏ².
        let (lhs, rhs) = lemma31_sides(&h, &h, &TensorElement::unit(3, 4)).unwrap();
        let by_order = lhs.defect_by_order(&rhs).unwrap();
        assert!(by_order[0] < 1e-15 && by_order[1] < 1e-15);
        assert!((by_order[2] - 1.0).abs() < 1e-12, "{by_order:?}");
    }

    #[test]
    fn twisted_coassociator_matches_closed_form() {
        let theta = DeformationParameter::from_real(&[0.0, 0.8, -0.3, 0.2]).unwrap();
        assert!(verify_twisted_coassociator(&theta).unwrap() < 1e-12);
    }

    #[test]
    fn pentagon_examples() {
        let h = DeformationParameter::hbar(3);
        assert!(verify_pentagon(&h, CoproductKind::Twisted).unwrap() < 1e-9);
        let z = DeformationParameter::zero(3);
        assert_eq!(verify_pentagon(&z, CoproductKind::Twisted).unwrap(), 0.0);
    }

    #[test]
    fn pentagon_also_holds_for_the_plain_coproduct() {
        // Every placed copy of p⊗t⊗q commutes with every other one, so the
        // exponent is an additive 3-cocycle for the primitive coproduct too.
        let h = DeformationParameter::hbar(5);
        let by_order = pentagon_defect_by_order(&h, CoproductKind::Plain).unwrap();
        assert!(by_order.iter().all(|d| *d < 1e-12), "{by_order:?}");
    }

    #[test]
    fn pentagon_detects_a_non_cocycle() {
        let n = 4;
        let h = DeformationParameter::hbar(n);
        let bogus = TensorElement::monomial(
            vec![LegMonomial::new(0, 0, 2), LegMonomial::T, LegMonomial::Q],
            TruncatedSeries::monomial(2, C64::new(1.0, 0.0), n),
        )
        .exp()
        .unwrap();
        for kind in [CoproductKind::Plain, CoproductKind::Twisted] {
            let (lhs, rhs) = pentagon_sides_for(&bogus, &h, kind).unwrap();
            let by_order = lhs.defect_by_order(&rhs).unwrap();
            assert!(by_order[2] > 0.5, "{kind:?}: {by_order:?}");
        }
    }

    #[test]
    fn quasi_coassociativity_needs_the_twisted_coproduct() {
        let h = DeformationParameter::hbar(3);
        let d = quasi_coassoc_defect(Generator::P, &h, CoproductKind::Plain, true).unwrap();
        assert!(d > 0.5, "{d}");
        let d = quasi_coassoc_defect(Generator::P, &h, CoproductKind::Twisted, false).unwrap();
        assert!(d > 0.5, "{d}");
    }

    #[test]
    fn quasi_coassociativity_examples() {
        let h = DeformationParameter::hbar(3);
        assert!(verify_quasi_coassoc(Generator::T, &h).unwrap() < 1e-12);
        assert!(verify_quasi_coassoc(Generator::P, &h).unwrap() < 1e-9);
        assert!(verify_quasi_coassoc(Generator::Q, &h).unwrap() < 1e-9);
        let z = DeformationParameter::zero(3);
        for g in [Generator::P, Generator::Q, Generator::T] {
            assert_eq!(verify_quasi_coassoc(g, &z).unwrap(), 0.0);
        }
    }

    #[test]
    fn matched_coassociator_is_trivial_on_a_t_eigenspace() {
        for n in [-2i64, -1, 1, 3] {
            let theta = DeformationParameter::from_real(&[0.0, 0.9, 0.4, -0.2, 0.1]).unwrap();
            let matched = theta.alpha(num_rational::Ratio::from_integer(n));
            let phi = build_coassociator(&theta, &matched).specialize_central(1, n as f64).unwrap();
            assert!(phi.defect(&TensorElement::unit(3, 4)).unwrap() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn inverse_of_twist_is_exp_of_negative() {
        let theta = DeformationParameter::from_real(&[0.0, 1.0, 0.3, 0.0]).unwrap();
        let f = build_twist(&theta);
        assert!(f.invert().unwrap().defect(&build_twist_inverse(&theta)).unwrap() < 1e-12);
    }
}
