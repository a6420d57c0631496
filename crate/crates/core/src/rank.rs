//! Higher-rank modules `E_{c,d}` over the deformed torus.
//!
//! Sections of `M_{c,d}` satisfy `f(x + d, y) = e^{-2πicy} f(x, y)` and are stored in
//! the Zak picture `f(x,y) = Σ_k f̃(x + kd/c; k)·e^{2πiky}` with `k mod c`. The torus acts
//! on the right at `θ`, and the rational torus `B_{b/d}` generated by
//! `U′f = e^{2πiay} f(x + b, y)` and `V′f = e^{2πix/d} f` acts on the left at `θ′`.
//! On the Zak data `p = (1/√2π)·d/du`, `q = √2π·(c/d)·u` and `t = c/d`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_integer::Integer;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::gauss::{GaussError, GaussSum};
use crate::series::{alpha, Defect, DeformationParameter, SeriesError, TruncatedSeries, C64};
use crate::torus::{Realization, TorusElement};
use crate::zakmod::EVAL_TOL;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RankError {
    #[error("{0} and {1} are not coprime")]
    NotCoprime(i64, i64),
    #[error("d must be nonzero")]
    ZeroD,
    #[error("c must be nonzero for a rank module section")]
    ZeroC,
    #[error("matrix entries ({a}, {b}; {c}, {d}) do not have determinant 1")]
    Determinant { a: i64, b: i64, c: i64, d: i64 },
    #[error("expected {expected} residue components, got {got}")]
    ResidueCount { expected: usize, got: usize },
    #[error("elements belong to different matrices")]
    MatrixMismatch,
    #[error("torus element must use the flat realization")]
    NotFlat,
    #[error(transparent)]
    Gauss(#[from] GaussError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// `(a b; c d)` with `ad - bc = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SL2ZMatrix {
    a: i64,
    b: i64,
    c: i64,
    d: i64,
}

impl SL2ZMatrix {
    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Result<Self, RankError> {
        if a * d - b * c != 1 {
            return Err(RankError::Determinant { a, b, c, d });
        }
        Ok(Self { a, b, c, d })
    }

    pub fn a(&self) -> i64 {
        self.a
    }
    pub fn b(&self) -> i64 {
        self.b
    }
    pub fn c(&self) -> i64 {
        self.c
    }
    pub fn d(&self) -> i64 {
        self.d
    }

    /// `c/d`.
    pub fn slope(&self) -> Ratio<i64> {
        Ratio::new(self.c, self.d)
    }

    /// Completion of `(c, d)` after normalizing to `d ≥ 1`, using `M_{c,d} ≅ M_{-c,-d}`.
    pub fn for_bundle(c: i64, d: i64) -> Result<Self, RankError> {
        match d {
            0 => Err(RankError::ZeroD),
            d if d < 0 => bezout_completion(-c, -d),
            d => bezout_completion(c, d),
        }
    }
}

/// The completion of the bottom row `(c, d)` with `0 ≤ a < |c|` (and `a = 1` when `c = 0`).
pub fn bezout_completion(c: i64, d: i64) -> Result<SL2ZMatrix, RankError> {
    if d < 1 {
        return Err(RankError::ZeroD);
    }
    if c.gcd(&d) != 1 {
        return Err(RankError::NotCoprime(c, d));
    }
    if c == 0 {
        return SL2ZMatrix::new(1, 0, 0, d);
    }
    let m = c.abs();
    let eg = d.rem_euclid(m).extended_gcd(&m);
    let a = eg.x.rem_euclid(m);
    // ad ≡ 1 (mod c), so b is an integer.
    let b = (a * d - 1) / c;
    SL2ZMatrix::new(a, b, c, d)
}

/// The unique `(k, m)` with `n = kc + md` and `1 ≤ k ≤ d`.
pub fn decompose(n: i64, g: &SL2ZMatrix) -> (i64, i64) {
    let (c, d) = (g.c, g.d);
    let k = (-n * g.b - 1).rem_euclid(d) + 1;
    (k, (n - k * c) / d)
}

/// Splits `φ(x) = Σ_n φ̂(n) e^{2πinx/d}` into `Σ_{k=1}^d e^{2πi(c/d)kx} φ_k(x)` with `φ_k` of period 1.
///
/// Component `k` is returned at index `k - 1` as Fourier coefficients of `e^{2πimx}`.
/// For `c = 0` the exponent is `k/d` instead.
pub fn fourier_split(phi: &BTreeMap<i64, C64>, c: i64, d: i64) -> Result<Vec<BTreeMap<i64, C64>>, RankError> {
    let g = split_matrix(c, d)?;
    let mut out = vec![BTreeMap::new(); d as usize];
    for (&n, &v) in phi {
        let (k, m) = decompose(n, &g);
        *out[(k - 1) as usize].entry(m).or_insert(C64::new(0.0, 0.0)) += v;
    }
    Ok(out)
}

/// Inverse of [`fourier_split`].
pub fn fourier_reassemble(parts: &[BTreeMap<i64, C64>], c: i64, d: i64) -> Result<BTreeMap<i64, C64>, RankError> {
    let g = split_matrix(c, d)?;
    let mut out = BTreeMap::new();
    for (i, part) in parts.iter().enumerate() {
        let k = i as i64 + 1;
        for (&m, &v) in part {
            *out.entry(k * g.c + m * d).or_insert(C64::new(0.0, 0.0)) += v;
        }
    }
    Ok(out)
}

fn split_matrix(c: i64, d: i64) -> Result<SL2ZMatrix, RankError> {
    if c == 0 {
        bezout_completion(1, d)
    } else {
        bezout_completion(c, d)
    }
}

/// Element of `E_{c,d}` in the Zak picture, one [`GaussSum`] per residue mod `c`.
#[derive(Clone, Debug, PartialEq)]
pub struct RankSection {
    g: SL2ZMatrix,
    order: usize,
    data: Vec<GaussSum>,
}

impl RankSection {
    pub fn new(g: SL2ZMatrix, data: Vec<GaussSum>) -> Result<Self, RankError> {
        if g.c == 0 {
            return Err(RankError::ZeroC);
        }
        if g.d < 1 {
            return Err(RankError::ZeroD);
        }
        let expected = g.c.unsigned_abs() as usize;
        if data.len() != expected {
            return Err(RankError::ResidueCount { expected, got: data.len() });
        }
        let order = data[0].order();
        if let Some(bad) = data.iter().find(|x| x.order() != order) {
            return Err(SeriesError::OrderMismatch(order, bad.order()).into());
        }
        Ok(Self { g, order, data })
    }

    pub fn zero(g: SL2ZMatrix, order: usize) -> Result<Self, RankError> {
        Self::new(g, vec![GaussSum::zero(order); g.c.unsigned_abs().max(1) as usize])
    }

    pub fn random_gaussian(g: SL2ZMatrix, order: usize, rng: &mut impl Rng) -> Result<Self, RankError> {
        let data = (0..g.c.abs())
            .map(|_| {
                let coeff = TruncatedSeries::from_coeffs(
                    (0..=order).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect(),
                );
                let center = C64::new(rng.gen_range(-0.5..0.5), 0.0);
                let width = C64::new(rng.gen_range(1.0..2.5), rng.gen_range(-0.5..0.5));
                GaussSum::gaussian(coeff, center, width)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(g, data)
    }

    pub fn matrix(&self) -> SL2ZMatrix {
        self.g
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn data(&self) -> &[GaussSum] {
        &self.data
    }

    pub fn component(&self, k: i64) -> &GaussSum {
        &self.data[k.rem_euclid(self.g.c.abs()) as usize]
    }

    fn offset(&self) -> f64 {
        self.g.d as f64 / self.g.c as f64
    }

    fn map(&self, f: impl Fn(i64, &GaussSum) -> Result<GaussSum, RankError>) -> Result<Self, RankError> {
        let data = (0..self.g.c.abs()).map(|k| f(k, self.component(k))).collect::<Result<Vec<_>, _>>()?;
        Self::new(self.g, data)
    }

    pub fn add(&self, other: &Self) -> Result<Self, RankError> {
        if self.g != other.g {
            return Err(RankError::MatrixMismatch);
        }
        self.map(|k, x| Ok(x.add(other.component(k))))
    }

    pub fn scale(&self, c: &TruncatedSeries) -> Self {
        self.map(|_, x| Ok(x.scale(c))).expect("shape preserved")
    }

    pub fn act_p(&self) -> Self {
        let s = C64::new(1.0 / (2.0 * PI).sqrt(), 0.0);
        self.map(|_, x| Ok(x.derivative().scale_c(s))).expect("shape preserved")
    }

    pub fn act_q(&self) -> Self {
        let s = C64::new((2.0 * PI).sqrt() * self.g.c as f64 / self.g.d as f64, 0.0);
        self.map(|_, x| Ok(x.mul_x().scale_c(s))).expect("shape preserved")
    }

    pub fn act_t(&self) -> Self {
        let s = C64::new(self.g.c as f64 / self.g.d as f64, 0.0);
        self.map(|_, x| Ok(x.scale_c(s))).expect("shape preserved")
    }

    /// `ξ ∗_{θ′} f` for the monomial `ξ = V′^m U′^k`.
    pub fn act_left_monomial(&self, (m, k): (i64, i64), theta_p: &DeformationParameter) -> Result<Self, RankError> {
        let (c, d) = (self.g.c as f64, self.g.d as f64);
        let gamma = theta_p.series().scale(C64::new(0.0, -2.0 * PI * c * m as f64 / (d * d)));
        let twisted = self.map(|_, x| Ok(x.formal_exp_linear_mul(&gamma)?))?;
        let off = self.offset();
        self.map(|kk, _| {
            let src = twisted.component(kk - k * self.g.a).real_shift(k as f64 / c);
            let ph = C64::from_polar(1.0, -2.0 * PI * m as f64 * kk as f64 * off / d);
            Ok(src.phase_mul(2.0 * PI * m as f64 / d).scale_c(ph))
        })
    }

    pub fn act_left_uprime(&self, theta_p: &DeformationParameter) -> Result<Self, RankError> {
        self.act_left_monomial((0, 1), theta_p)
    }

    pub fn act_left_vprime(&self, theta_p: &DeformationParameter) -> Result<Self, RankError> {
        self.act_left_monomial((1, 0), theta_p)
    }

    /// `f ∗_θ W` for the Fourier mode `W = e^{2πi(mx + ky)}`.
    pub fn act_right_monomial(&self, (m, k): (i64, i64), theta: &DeformationParameter) -> Result<Self, RankError> {
        let off = self.offset();
        let rho = theta.series().scale_real(-(k as f64));
        let zero = TruncatedSeries::zero(self.order);
        self.map(|kk, _| {
            let src = self.component(kk - k).real_shift(k as f64 * off).formal_shift(&rho, &zero)?;
            let ph = C64::from_polar(1.0, -2.0 * PI * m as f64 * kk as f64 * off);
            Ok(src.phase_mul(2.0 * PI * m as f64).scale_c(ph))
        })
    }

    pub fn act_right_u(&self, theta: &DeformationParameter) -> Result<Self, RankError> {
        self.act_right_monomial(Realization::Flat.u_mode(), theta)
    }

    pub fn act_right_v(&self, theta: &DeformationParameter) -> Result<Self, RankError> {
        self.act_right_monomial(Realization::Flat.v_mode(), theta)
    }

    pub fn act_left(&self, xi: &BElement, theta_p: &DeformationParameter) -> Result<Self, RankError> {
        if xi.g != self.g {
            return Err(RankError::MatrixMismatch);
        }
        let mut acc = Self::zero(self.g, self.order)?;
        for (&mode, c) in &xi.coeffs {
            acc = acc.add(&self.act_left_monomial(mode, theta_p)?.scale(c))?;
        }
        Ok(acc)
    }

    pub fn act_right(&self, a: &TorusElement, theta: &DeformationParameter) -> Result<Self, RankError> {
        if a.realization() != Realization::Flat {
            return Err(RankError::NotFlat);
        }
        let mut acc = Self::zero(self.g, self.order)?;
        for (&mode, c) in a.coeffs() {
            acc = acc.add(&self.act_right_monomial(mode, theta)?.scale(c))?;
        }
        Ok(acc)
    }

    fn k_range(&self, x: f64) -> std::ops::RangeInclusive<i64> {
        let r = self.data.iter().map(|g| g.support_radius(EVAL_TOL)).fold(0.0, f64::max);
        let s = 1.0 / self.offset();
        let (a, b) = (s * (-r - x), s * (r - x));
        (a.min(b).floor() as i64)..=(a.max(b).ceil() as i64)
    }

    /// `f(x, y) = Σ_k f̃(x + kd/c; k)·e^{2πiky}`.
    pub fn function_eval(&self, x: f64, y: f64) -> TruncatedSeries {
        self.function_eval_weighted(x, y, |_| C64::new(1.0, 0.0))
    }

    /// `∂_y f` at a point.
    pub fn function_eval_dy(&self, x: f64, y: f64) -> TruncatedSeries {
        self.function_eval_weighted(x, y, |k| C64::new(0.0, 2.0 * PI * k as f64))
    }

    fn function_eval_weighted(&self, x: f64, y: f64, w: impl Fn(i64) -> C64) -> TruncatedSeries {
        let off = self.offset();
        let mut acc = TruncatedSeries::zero(self.order);
        for k in self.k_range(x) {
            let ph = C64::from_polar(1.0, 2.0 * PI * k as f64 * y) * w(k);
            acc += &self.component(k).evaluate(x + k as f64 * off).scale(ph);
        }
        acc
    }

    /// `⟨f, g⟩ = ∫_{[0,d]×[0,1]} f* g = Σ_κ ∫_R f̃*(u; κ) g̃(u; κ) du`.
    pub fn inner_product(&self, other: &Self) -> Result<TruncatedSeries, RankError> {
        if self.g != other.g {
            return Err(RankError::MatrixMismatch);
        }
        let mut acc = TruncatedSeries::zero(self.order);
        for k in 0..self.g.c.abs() {
            acc += &self.component(k).conj().pointwise_mul(other.component(k)).integrate();
        }
        Ok(acc)
    }
}

/// Sampled bundle components `f_1..f_d` and the defects of their gluing conditions.
#[derive(Clone, Debug, PartialEq)]
pub struct BundleComponents {
    /// `values[i][k-1]` is `f_k` at the `i`-th grid point, ℏ⁰ coefficient.
    pub values: Vec<Vec<C64>>,
    pub points: Vec<(f64, f64)>,
    /// `max |f_k(x, y+1) - f_{k-1}(x, y)|` over `k ≠ 1`, together with `x`-periodicity of each `f_k`.
    pub shift_defect: f64,
    /// `max |f_1(x, y+1) - e^{2πicx} f_d(x, y)|`.
    pub wrap_defect: f64,
}

/// `f_k(x,y) = (1/d)·Σ_j G(x+j, y)·e^{-2πi(c/d)k(x+j)}` with `G = e^{2πi(c/d)xy} f`.
fn components_at(f: &RankSection, x: f64, y: f64) -> Vec<C64> {
    let (c, d) = (f.g.c as f64, f.g.d);
    let gvals: Vec<C64> = (0..d)
        .map(|j| {
            let xj = x + j as f64;
            f.function_eval(xj, y).coeff(0) * C64::from_polar(1.0, 2.0 * PI * c / d as f64 * xj * y)
        })
        .collect();
    (1..=d)
        .map(|k| {
            let s: C64 = (0..d)
                .map(|j| gvals[j as usize] * C64::from_polar(1.0, -2.0 * PI * c / d as f64 * k as f64 * (x + j as f64)))
                .sum();
            s / d as f64
        })
        .collect()
}

/// Evaluates the `d` bundle components on a `grid × grid` lattice of `[0,1)²` and checks the gluing.
pub fn bundle_components(f: &RankSection, grid: usize) -> BundleComponents {
    let c = f.g.c as f64;
    let d = f.g.d as usize;
    let mut values = Vec::new();
    let mut points = Vec::new();
    let mut shift_defect: f64 = 0.0;
    let mut wrap_defect: f64 = 0.0;
    for i in 0..grid {
        for j in 0..grid {
            let (x, y) = (i as f64 / grid as f64, j as f64 / grid as f64);
            let here = components_at(f, x, y);
            let up = components_at(f, x, y + 1.0);
            let right = components_at(f, x + 1.0, y);
            for k in 1..d {
                shift_defect = shift_defect.max((up[k] - here[k - 1]).norm());
            }
            for k in 0..d {
                shift_defect = shift_defect.max((right[k] - here[k]).norm());
            }
            wrap_defect = wrap_defect.max((up[0] - C64::from_polar(1.0, 2.0 * PI * c * x) * here[d - 1]).norm());
            values.push(here);
            points.push((x, y));
        }
    }
    BundleComponents { values, points, shift_defect, wrap_defect }
}

/// `max |f(x + d, y) - e^{-2πicy} f(x, y)|` over a grid.
pub fn quasi_periodicity_defect(f: &RankSection, grid: usize) -> f64 {
    let (c, d) = (f.g.c as f64, f.g.d as f64);
    let mut worst: f64 = 0.0;
    for i in 0..grid {
        for j in 0..grid {
            let (x, y) = (i as f64 / grid as f64, j as f64 / grid as f64);
            let lhs = f.function_eval(x + d, y);
            let rhs = f.function_eval(x, y).scale(C64::from_polar(1.0, -2.0 * PI * c * y));
            worst = worst.max((lhs - rhs).max_abs());
        }
    }
    worst
}

/// Element of the rational torus `B_{b/d}` as normal-ordered `Σ ξ_{mk} V′^m U′^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct BElement {
    g: SL2ZMatrix,
    order: usize,
    coeffs: BTreeMap<(i64, i64), TruncatedSeries>,
}

impl BElement {
    pub fn zero(g: SL2ZMatrix, order: usize) -> Self {
        Self { g, order, coeffs: BTreeMap::new() }
    }

    pub fn monomial(g: SL2ZMatrix, mode: (i64, i64), c: TruncatedSeries) -> Self {
        let mut out = Self::zero(g, c.order());
        out.insert(mode, c);
        out
    }

    pub fn u_prime(g: SL2ZMatrix, order: usize) -> Self {
        Self::monomial(g, (0, 1), TruncatedSeries::one(order))
    }

    pub fn v_prime(g: SL2ZMatrix, order: usize) -> Self {
        Self::monomial(g, (1, 0), TruncatedSeries::one(order))
    }

    pub fn coeffs(&self) -> &BTreeMap<(i64, i64), TruncatedSeries> {
        &self.coeffs
    }

    pub fn coeff(&self, mode: (i64, i64)) -> TruncatedSeries {
        self.coeffs.get(&mode).cloned().unwrap_or_else(|| TruncatedSeries::zero(self.order))
    }

    fn insert(&mut self, mode: (i64, i64), c: TruncatedSeries) {
        let e = self.coeffs.entry(mode).or_insert_with(|| TruncatedSeries::zero(c.order()));
        *e += &c;
        if e.is_zero() {
            self.coeffs.remove(&mode);
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, RankError> {
        if self.g != other.g {
            return Err(RankError::MatrixMismatch);
        }
        let mut out = self.clone();
        for (m, c) in &other.coeffs {
            out.insert(*m, c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, RankError> {
        let mut neg = other.clone();
        for c in neg.coeffs.values_mut() {
            *c = c.scale_real(-1.0);
        }
        self.add(&neg)
    }

    pub fn scale(&self, c: &TruncatedSeries) -> Self {
        let mut out = Self::zero(self.g, self.order);
        for (m, a) in &self.coeffs {
            out.insert(*m, a * c);
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.values().map(TruncatedSeries::max_abs).fold(0.0, f64::max)
    }

    /// `(V′^{m₁}U′^{k₁}) ∗ (V′^{m₂}U′^{k₂}) = e^{2πi(b/d)k₁m₂}·e^{-2πiθ′m₁k₂/d²}·V′^{m₁+m₂}U′^{k₁+k₂}`.
    pub fn b_star_mul(&self, other: &Self, theta_p: &DeformationParameter) -> Result<Self, RankError> {
        if self.g != other.g {
            return Err(RankError::MatrixMismatch);
        }
        let (b, d) = (self.g.b as f64, self.g.d as f64);
        let mut out = Self::zero(self.g, self.order);
        for (&(m1, k1), x) in &self.coeffs {
            for (&(m2, k2), y) in &other.coeffs {
                let reorder = C64::from_polar(1.0, 2.0 * PI * b / d * (k1 * m2) as f64);
                let twist = theta_p
                    .series()
                    .scale(C64::new(0.0, -2.0 * PI * (m1 * k2) as f64 / (d * d)))
                    .exp()?;
                out.insert((m1 + m2, k1 + k2), (&(x * y) * &twist).scale(reorder));
            }
        }
        Ok(out)
    }

    pub fn random(g: SL2ZMatrix, order: usize, terms: usize, rng: &mut impl Rng) -> Self {
        let mut out = Self::zero(g, order);
        for _ in 0..terms {
            let mode = (rng.gen_range(-2..=2), rng.gen_range(-2..=2));
            let c = TruncatedSeries::from_coeffs(
                (0..=order).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect(),
            );
            out.insert(mode, c);
        }
        out
    }
}

/// Coefficient of `V′U′` in `U′ ∗ V′ - e^{2πi(θ′/d² + b/d)} V′ ∗ U′`.
pub fn rational_relation_defect(g: SL2ZMatrix, theta_p: &DeformationParameter) -> Result<TruncatedSeries, RankError> {
    let n = theta_p.order();
    let u = BElement::u_prime(g, n);
    let v = BElement::v_prime(g, n);
    let uv = u.b_star_mul(&v, theta_p)?;
    let vu = v.b_star_mul(&u, theta_p)?;
    let phase = theta_p
        .series()
        .scale(C64::new(0.0, 2.0 * PI / (g.d * g.d) as f64))
        .exp()?
        .scale(C64::from_polar(1.0, 2.0 * PI * g.b as f64 / g.d as f64));
    Ok(uv.sub(&vu.scale(&phase))?.coeff((1, 1)))
}

/// `(d^{-2}θ′ + b/d) - (aθ + b)/(cθ + d)` with `θ′ = α_{c/d}(θ)`.
pub fn matched_parameter_defect(g: SL2ZMatrix, theta: &DeformationParameter) -> Result<TruncatedSeries, RankError> {
    let n = theta.order();
    let theta_p = alpha(g.slope(), theta);
    let d = g.d as f64;
    let lhs = &theta_p.series().scale_real(1.0 / (d * d)) + &TruncatedSeries::real(g.b as f64 / d, n);
    let num = &theta.series().scale_real(g.a as f64) + &TruncatedSeries::real(g.b as f64, n);
    let den = &theta.series().scale_real(g.c as f64) + &TruncatedSeries::real(d, n);
    let rhs = &num * &den.invert()?;
    Ok(lhs - rhs)
}

/// `(ξ ∗_{θ′} f) ∗_θ a - ξ ∗_{θ′} (f ∗_θ a)` sampled at the given `(x, y)` points.
pub fn bimodule_commutation_defect(
    xi: &BElement,
    f: &RankSection,
    a: &TorusElement,
    theta: &DeformationParameter,
    theta_p: &DeformationParameter,
    points: &[(f64, f64)],
) -> Result<Defect, RankError> {
    let left = f.act_left(xi, theta_p)?.act_right(a, theta)?;
    let right = f.act_right(a, theta)?.act_left(xi, theta_p)?;
    let mut d = Defect::zero(f.order);
    for &(x, y) in points {
        d.absorb(&(left.function_eval(x, y) - right.function_eval(x, y)));
    }
    Ok(d)
}

/// Worst commutation defect over random `ξ`, `f`, `a`, once at `θ′ = α_{c/d}(θ)` and once at `θ′ = θ`.
pub fn verify_prop65(
    g: SL2ZMatrix,
    theta: &DeformationParameter,
    trials: usize,
    seed: u64,
) -> Result<(Defect, Defect), RankError> {
    let matched = alpha(g.slope(), theta);
    Ok((prop65_defect(g, theta, &matched, trials, seed)?, prop65_defect(g, theta, theta, trials, seed)?))
}

pub fn prop65_defect(
    g: SL2ZMatrix,
    theta: &DeformationParameter,
    theta_p: &DeformationParameter,
    trials: usize,
    seed: u64,
) -> Result<Defect, RankError> {
    let order = theta.order();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<(f64, f64)> = crate::zakmod::sample_points(10, seed).into_iter().map(|(x, y, _)| (x, y)).collect();
    let mut worst = Defect::zero(order);
    for _ in 0..trials {
        let xi = BElement::random(g, order, 2, &mut rng);
        let f = RankSection::random_gaussian(g, order, &mut rng)?;
        let mut a = TorusElement::zero(Realization::Flat, order);
        for _ in 0..2 {
            let mode = (rng.gen_range(-1..=1), rng.gen_range(-1..=1));
            let c = TruncatedSeries::real(rng.gen_range(-1.0..1.0), order);
            a = a.add(&TorusElement::monomial(Realization::Flat, mode, c)).expect("same realization");
        }
        worst.merge(&bimodule_commutation_defect(&xi, &f, &a, theta, theta_p, &points)?);
    }
    Ok(worst)
}

/// `max |q(fg) - (qf)g - f(qg)|` where `fg` lies in `M_{2c, d²}`-type products of sections of `M_{c,d}`.
pub fn leibniz_defect(f: &RankSection, h: &RankSection, points: &[(f64, f64)]) -> Result<f64, RankError> {
    if f.g != h.g {
        return Err(RankError::MatrixMismatch);
    }
    let slope = f.g.c as f64 / f.g.d as f64;
    let pre = C64::new(0.0, -1.0 / (2.0 * PI).sqrt());
    let (qf, qh) = (f.act_q(), h.act_q());
    let mut worst: f64 = 0.0;
    for &(x, y) in points {
        let (fv, hv) = (f.function_eval(x, y), h.function_eval(x, y));
        let dy = &(&f.function_eval_dy(x, y) * &hv) + &(&fv * &h.function_eval_dy(x, y));
        let mult = C64::new(0.0, 2.0 * PI * 2.0 * slope * x);
        let q_prod = (&dy + &(&fv * &hv).scale(mult)).scale(pre);
        let split = &(&qf.function_eval(x, y) * &hv) + &(&fv * &qh.function_eval(x, y));
        worst = worst.max((q_prod - split).max_abs());
    }
    Ok(worst)
}
