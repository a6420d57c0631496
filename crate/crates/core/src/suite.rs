//! Verification suites, reports and their serializations.
//!
//! Each check computes a defect (a sup-norm, per ℏ-order where that makes sense) and compares it
//! with a tolerance. Checks are independent and run in parallel; reports come back sorted by id.

use std::fmt::Write as _;
use std::str::FromStr;
use std::time::{Duration, Instant};

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::gauss::DEFAULT_TERM_CAP;
use crate::pbw::{self, CoproductKind, Generator};
use crate::rank::{self, BElement, RankSection};
use crate::series::{alpha, Defect, DeformationParameter, TruncatedSeries, C64};
use crate::theta::{self, ThetaError, ThetaVector};
use crate::torus::{self, Realization, TorusElement};
use crate::zakmod::{self, Operand, ZakOptions, ZakSection};

pub const SCHEMA: &str = "nctorus.report/1";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SuiteError {
    #[error("unknown suite `{0}` (expected axioms, twist, zak, theta, rank or all)")]
    UnknownSuite(String),
    #[error("unknown format `{0}` (expected json, csv or text)")]
    UnknownFormat(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Axioms,
    Twist,
    Zak,
    Theta,
    Rank,
    All,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Axioms => "axioms",
            Suite::Twist => "twist",
            Suite::Zak => "zak",
            Suite::Theta => "theta",
            Suite::Rank => "rank",
            Suite::All => "all",
        }
    }

    fn includes(self, other: Suite) -> bool {
        self == Suite::All || self == other
    }
}

impl FromStr for Suite {
    type Err = SuiteError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "axioms" => Suite::Axioms,
            "twist" => Suite::Twist,
            "zak" => Suite::Zak,
            "theta" => Suite::Theta,
            "rank" => Suite::Rank,
            "all" => Suite::All,
            other => return Err(SuiteError::UnknownSuite(other.to_string())),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Text,
}

impl FromStr for Format {
    type Err = SuiteError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "text" => Ok(Format::Text),
            other => Err(SuiteError::UnknownFormat(other.to_string())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub order: usize,
    pub tol_symbolic: f64,
    pub tol_analytic: f64,
    pub samples: usize,
    pub seed: u64,
    pub term_cap: usize,
    pub format: Format,
    /// ℏ-coefficients of θ; `None` means θ = ℏ.
    pub theta: Option<Vec<f64>>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            order: 4,
            tol_symbolic: 1e-12,
            tol_analytic: 1e-8,
            samples: 20,
            seed: 0,
            term_cap: DEFAULT_TERM_CAP,
            format: Format::Json,
            theta: None,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), SuiteError> {
        let bad = |m: String| Err(SuiteError::InvalidConfig(m));
        if self.order < 1 {
            return bad("order must be at least 1".into());
        }
        for (name, t) in [("tol-symbolic", self.tol_symbolic), ("tol-analytic", self.tol_analytic)] {
            if !(t > 0.0 && t.is_finite()) {
                return bad(format!("{name} must be positive, got {t}"));
            }
        }
        if self.samples == 0 {
            return bad("sample count must be positive".into());
        }
        if self.term_cap == 0 {
            return bad("term cap must be positive".into());
        }
        self.theta().map(|_| ())
    }

    /// θ padded with zeros to the truncation order.
    pub fn theta(&self) -> Result<DeformationParameter, SuiteError> {
        let Some(c) = &self.theta else {
            return Ok(DeformationParameter::hbar(self.order));
        };
        if c.len() > self.order + 1 {
            return Err(SuiteError::InvalidConfig(format!(
                "theta has {} coefficients but the truncation order is {}",
                c.len(),
                self.order
            )));
        }
        if c.iter().any(|x| !x.is_finite()) {
            return Err(SuiteError::InvalidConfig("theta coefficients must be finite".into()));
        }
        let mut padded = c.clone();
        padded.resize(self.order + 1, 0.0);
        DeformationParameter::from_real(&padded).map_err(|e| SuiteError::InvalidConfig(format!("theta: {e}")))
    }

    fn theta_coeffs(&self) -> Vec<f64> {
        let mut c = self.theta.clone().unwrap_or_else(|| vec![0.0, 1.0]);
        c.resize(self.order + 1, 0.0);
        c
    }
}

/// Parses a comma-separated list of ℏ-coefficients such as `"0,1,0.5"`.
pub fn parse_theta_spec(spec: &str) -> Result<Vec<f64>, SuiteError> {
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| SuiteError::InvalidConfig(format!("bad theta coefficient `{}`", s.trim())))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportParams {
    pub order: usize,
    pub theta: Vec<f64>,
    pub degrees: Vec<i64>,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub id: String,
    pub suite: Suite,
    /// The identity being checked, in words.
    pub identity: String,
    pub params: ReportParams,
    #[serde(serialize_with = "three_digits")]
    pub defect: f64,
    #[serde(serialize_with = "three_digits")]
    pub tolerance: f64,
    pub pass: bool,
    /// First ℏ-order whose defect exceeds the tolerance.
    pub leading_order: Option<usize>,
    pub error: Option<String>,
    /// Not serialized, so that JSON output is reproducible.
    #[serde(skip)]
    pub wall_time: Duration,
}

fn round3(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.2e}").parse().unwrap_or(x)
}

fn three_digits<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(round3(*x))
    } else {
        s.serialize_none()
    }
}

#[derive(Clone, Copy)]
enum Tol {
    Symbolic,
    Analytic,
    Fixed(f64),
}

struct Outcome {
    defect: Defect,
    tolerance: Option<f64>,
}

impl Outcome {
    fn scalar(x: f64) -> Self {
        Self { defect: Defect::from_by_order(vec![x]), tolerance: None }
    }

    fn orders(d: Defect) -> Self {
        Self { defect: d, tolerance: None }
    }

    fn with_tolerance(mut self, t: f64) -> Self {
        self.tolerance = Some(t);
        self
    }
}

struct Ctx {
    order: usize,
    theta: DeformationParameter,
    seed: u64,
    points: Vec<(f64, f64, f64)>,
    opts: ZakOptions,
}

impl Ctx {
    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

type Runner = Box<dyn Fn(&Ctx) -> Result<Outcome, String> + Send + Sync>;

struct Check {
    id: String,
    suite: Suite,
    identity: &'static str,
    degrees: Vec<i64>,
    tol: Tol,
    run: Runner,
}

fn check(
    id: impl Into<String>,
    suite: Suite,
    identity: &'static str,
    degrees: Vec<i64>,
    tol: Tol,
    run: impl Fn(&Ctx) -> Result<Outcome, String> + Send + Sync + 'static,
) -> Check {
    Check { id: id.into(), suite, identity, degrees, tol, run: Box::new(run) }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn random_torus(rng: &mut ChaCha8Rng, r: Realization, order: usize) -> TorusElement {
    let terms: Vec<_> = (0..4)
        .map(|_| {
            let mode = (rng.gen_range(-2..=2), rng.gen_range(-2..=2));
            let c = (0..=order).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            (mode, TruncatedSeries::from_coeffs(c))
        })
        .collect();
    TorusElement::from_coeffs(r, order, terms)
}

fn random_theta(rng: &mut ChaCha8Rng, order: usize) -> DeformationParameter {
    let mut c = vec![0.0];
    c.extend((0..order).map(|_| rng.gen_range(-1.0..1.0)));
    DeformationParameter::from_real(&c).expect("zero constant term")
}

fn small_torus_element(order: usize) -> TorusElement {
    TorusElement::from_coeffs(
        Realization::Flat,
        order,
        [
            ((1, 0), TruncatedSeries::real(0.5, order)),
            ((0, 1), TruncatedSeries::real(-0.7, order)),
            ((1, -1), TruncatedSeries::real(0.3, order)),
        ],
    )
}

fn elliptic_tau() -> C64 {
    C64::new(0.3, 1.1)
}

fn axioms_checks() -> Vec<Check> {
    let s = Suite::Axioms;
    let mut out = vec![
        check("axioms.pentagon", s, "pentagon identity for the coassociator under the twisted coproduct", vec![], Tol::Symbolic, |c| {
            pbw::pentagon_defect_by_order(&c.theta, CoproductKind::Twisted).map(|v| Outcome::orders(Defect::from_by_order(v))).map_err(err)
        }),
        check("axioms.counit", s, "counit on the middle leg of the coassociator gives 1", vec![], Tol::Symbolic, |c| {
            pbw::verify_counitality(&c.theta).map(Outcome::scalar).map_err(err)
        }),
        check("axioms.alpha_group_law", s, "alpha_r composed with alpha_s equals alpha_(r+s) over integer and rational samples", vec![], Tol::Symbolic, |c| {
            let samples = [
                Ratio::from_integer(-2),
                Ratio::from_integer(-1),
                Ratio::from_integer(1),
                Ratio::from_integer(3),
                Ratio::new(1, 2),
                Ratio::new(-3, 4),
                Ratio::new(5, 3),
            ];
            let mut d = Defect::zero(c.order);
            for r in samples {
                for s in samples {
                    let lhs = alpha(r, &alpha(s, &c.theta));
                    d.absorb(&(lhs.series() - alpha(r + s, &c.theta).series()));
                }
            }
            Ok(Outcome::orders(d))
        }),
        check("axioms.alpha_zero", s, "alpha_0 is the identity exactly", vec![], Tol::Fixed(0.0), |c| {
            Ok(Outcome::scalar(if alpha(Ratio::from_integer(0), &c.theta) == c.theta { 0.0 } else { 1.0 }))
        }),
    ];
    for (h, name) in [(Generator::P, "p"), (Generator::Q, "q"), (Generator::T, "t")] {
        out.push(check(
            format!("axioms.quasi_coassoc.{name}"),
            s,
            "iterated twisted coproducts agree up to conjugation by the coassociator",
            vec![],
            Tol::Symbolic,
            move |c| pbw::verify_quasi_coassoc(h, &c.theta).map(Outcome::scalar).map_err(err),
        ));
    }
    out
}

fn twist_checks() -> Vec<Check> {
    let s = Suite::Twist;
    vec![
        check("twist.cocycle", s, "twist cocycle identity with coassociator exp{-p(θ-θ'-θθ't)q} on 10 random parameter pairs", vec![], Tol::Symbolic, |c| {
            let mut rng = c.rng();
            let mut worst: f64 = 0.0;
            for _ in 0..10 {
                let (a, b) = (random_theta(&mut rng, c.order), random_theta(&mut rng, c.order));
                worst = worst.max(pbw::verify_lemma31(&a, &b).map_err(err)?);
            }
            Ok(Outcome::scalar(worst))
        }),
        check("twist.gauge_coassociator", s, "gauge transform of the trivial coassociator by the twist", vec![], Tol::Symbolic, |c| {
            pbw::verify_twisted_coassociator(&c.theta).map(Outcome::scalar).map_err(err)
        }),
        check("twist.torus_relation.flat", s, "U*V = e^{2πiθ} V*U in the flat realization", vec![0], Tol::Symbolic, |c| {
            Ok(Outcome::orders(Defect::from_series(&torus::commutation_defect(Realization::Flat, &c.theta))))
        }),
        check("twist.torus_relation.elliptic", s, "U*V = e^{2πiθ} V*U in the elliptic realization at τ = 0.3+1.1i", vec![0], Tol::Symbolic, |c| {
            let r = Realization::elliptic(elliptic_tau()).map_err(err)?;
            Ok(Outcome::orders(Defect::from_series(&torus::commutation_defect(r, &c.theta))))
        }),
        check("twist.torus_associativity", s, "associativity of the torus star product on 50 random triples (relative)", vec![0, 0, 0], Tol::Symbolic, |c| {
            let mut rng = c.rng();
            let mut worst: f64 = 0.0;
            for r in [Realization::Flat, Realization::elliptic(elliptic_tau()).map_err(err)?] {
                for _ in 0..50 {
                    let (a, b, d) = (random_torus(&mut rng, r, c.order), random_torus(&mut rng, r, c.order), random_torus(&mut rng, r, c.order));
                    let left = a.star_mul(&b, &c.theta).and_then(|x| x.star_mul(&d, &c.theta)).map_err(err)?;
                    let right = b.star_mul(&d, &c.theta).and_then(|x| a.star_mul(&x, &c.theta)).map_err(err)?;
                    let diff = left.sub(&right).map_err(err)?.max_abs();
                    worst = worst.max(diff / left.max_abs().max(1.0));
                }
            }
            Ok(Outcome::scalar(worst))
        }),
    ]
}

fn zak_operand(deg: i64, order: usize, rng: &mut ChaCha8Rng) -> Result<Operand, String> {
    if deg == 0 {
        Ok(Operand::Torus(small_torus_element(order)))
    } else {
        ZakSection::random_gaussian(deg, order, rng).map(Operand::Zak).map_err(err)
    }
}

fn zak_values(f: &ZakSection, pts: &[(f64, f64, f64)]) -> Vec<TruncatedSeries> {
    pts.iter().map(|p| f.function_eval_auto(p.0, p.1, p.2)).collect()
}

fn zak_checks() -> Vec<Check> {
    let s = Suite::Zak;
    let mut out = Vec::new();
    for (na, n, nc) in [(1, 1, 1), (1, 2, 1), (-1, -1, -1), (0, -1, 2)] {
        out.push(check(
            format!("zak.generalized_assoc.{na},{n},{nc}"),
            s,
            "(a *_{α_n(θ)} b) *_θ c = a *_{α_n(θ)} (b *_θ c) with n = deg b",
            vec![na, n, nc],
            Tol::Analytic,
            move |c| {
                let mut rng = c.rng();
                let a = zak_operand(na, c.order, &mut rng)?;
                let b = ZakSection::random_gaussian(n, c.order, &mut rng).map_err(err)?;
                let cc = zak_operand(nc, c.order, &mut rng)?;
                zakmod::verify_generalized_associativity_with(&a, &b, &cc, &c.theta, &c.points, &c.opts).map(Outcome::orders).map_err(err)
            },
        ));
    }
    for (n1, n2) in [(1, 1), (1, 2), (2, -1)] {
        out.push(check(
            format!("zak.star_vs_oracle.{n1},{n2}"),
            s,
            "Zak-picture star product against m∘F^{-1} on functions (relative)",
            vec![n1, n2],
            Tol::Fixed(1e-6),
            move |c| {
                let mut rng = c.rng();
                let f = ZakSection::random_gaussian(n1, c.order, &mut rng).map_err(err)?;
                let g = ZakSection::random_gaussian(n2, c.order, &mut rng).map_err(err)?;
                let fg = zakmod::star_product_zak_with(&f, &g, &c.theta, &c.opts).map_err(err)?;
                let oracle = c
                    .points
                    .iter()
                    .map(|&p| zakmod::direct_twisted_product(&f, &g, &c.theta, p))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(err)?;
                Ok(Outcome::orders(zakmod::relative_defect(&zak_values(&fg, &c.points), &oracle)))
            },
        ));
    }
    out.push(check("zak.factorization", s, "star product equals the two-path factorization through the undeformed product", vec![1, 2], Tol::Analytic, |c| {
        let mut rng = c.rng();
        let f = ZakSection::random_gaussian(1, c.order, &mut rng).map_err(err)?;
        let g = ZakSection::random_gaussian(2, c.order, &mut rng).map_err(err)?;
        let a = zakmod::star_product_zak_with(&f, &g, &c.theta, &c.opts).map_err(err)?;
        let b = zakmod::star_product_by_factorization(&f, &g, &c.theta).map_err(err)?;
        zakmod::operand_defect(&Operand::Zak(a), &Operand::Zak(b), &c.points).map(Outcome::orders).map_err(err)
    }));
    out.push(check("zak.product_into_a0", s, "product of degrees n and -n as a torus element, window 6, within the measured tail", vec![1, -1], Tol::Analytic, |c| {
        let mut rng = c.rng();
        let f = ZakSection::random_gaussian(1, c.order, &mut rng).map_err(err)?;
        let g = ZakSection::random_gaussian(-1, c.order, &mut rng).map_err(err)?;
        let prod = zakmod::product_into_a0(&f, &g, &c.theta, 6).map_err(err)?;
        let mut d = Defect::zero(c.order);
        for &p in &c.points {
            let oracle = zakmod::direct_twisted_product(&f, &g, &c.theta, p).map_err(err)?;
            d.absorb(&(prod.element.evaluate(p.0, p.1) - oracle));
        }
        Ok(Outcome::orders(d).with_tolerance(prod.tail + 1e-10))
    }));
    out.push(check("zak.tail_monotone", s, "measured tail of the torus-element product shrinks over windows 2, 4, 8", vec![1, -1], Tol::Fixed(0.0), |c| {
        let mut rng = c.rng();
        let f = ZakSection::random_gaussian(1, c.order, &mut rng).map_err(err)?;
        let g = ZakSection::random_gaussian(-1, c.order, &mut rng).map_err(err)?;
        let tails = [2, 4, 8]
            .iter()
            .map(|&r| zakmod::product_into_a0(&f, &g, &c.theta, r).map(|p| p.tail))
            .collect::<Result<Vec<_>, _>>()
            .map_err(err)?;
        // Number of windows at which the tail failed to shrink strictly.
        let stalls = tails.windows(2).filter(|w| w[1] >= w[0]).count();
        Ok(Outcome::scalar(stalls as f64))
    }));
    out.push(check("zak.quasi_assoc", s, "quasi-associativity with coassociator exp{θ²p⊗t⊗q}", vec![1, 1, 1], Tol::Analytic, |c| {
        let mut rng = c.rng();
        let f = (0..3).map(|_| ZakSection::random_gaussian(1, c.order, &mut rng)).collect::<Result<Vec<_>, _>>().map_err(err)?;
        zakmod::verify_quasi_associativity(&f[0], &f[1], &f[2], &c.theta, &c.points).map(Outcome::orders).map_err(err)
    }));
    for n in [1, 2, -1] {
        out.push(check(
            format!("zak.bimodule.n={n}"),
            s,
            "left action at α_n(θ) commutes with right action at θ on generators",
            vec![n],
            Tol::Analytic,
            move |c| {
                let f = ZakSection::random_gaussian(n, c.order, &mut c.rng()).map_err(err)?;
                zakmod::bimodule_defect(&f, &c.theta, &c.points).map(Outcome::orders).map_err(err)
            },
        ));
    }
    out.push(check("zak.middle_linearity", s, "(f1 * a) * f2 = f1 * (a * f2) for a torus element a", vec![1, 0, 1], Tol::Analytic, |c| {
        let mut rng = c.rng();
        let f1 = ZakSection::random_gaussian(1, c.order, &mut rng).map_err(err)?;
        let f2 = ZakSection::random_gaussian(1, c.order, &mut rng).map_err(err)?;
        zakmod::middle_linearity_defect(&f1, &small_torus_element(c.order), &f2, &c.theta, &c.points).map(Outcome::orders).map_err(err)
    }));
    out
}

fn random_theta_vector(n: i64, tau: C64, rng: &mut ChaCha8Rng) -> Result<ThetaVector, ThetaError> {
    let c = (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    ThetaVector::new(n, tau, c)
}

fn theta_checks() -> Vec<Check> {
    let s = Suite::Theta;
    let i = C64::new(0.0, 1.0);
    vec![
        check("theta.product", s, "theta product against pointwise multiplication at τ = i (relative)", vec![1, 1], Tol::Fixed(1e-10), move |c| {
            let mut rng = c.rng();
            let u = random_theta_vector(1, i, &mut rng).map_err(err)?;
            let v = random_theta_vector(1, i, &mut rng).map_err(err)?;
            let uv = theta::theta_product(&u, &v, 1e-18).map_err(err)?;
            let mut worst: f64 = 0.0;
            for &(x, y, t) in &c.points {
                let z = C64::new(x, 0.0) + i * y;
                let want = theta::theta_eval(&u, z, t) * theta::theta_eval(&v, z, t);
                worst = worst.max((theta::theta_eval(&uv, z, t) - want).norm() / want.norm().max(1e-3));
            }
            Ok(Outcome::scalar(worst))
        }),
        check("theta.holomorphy", s, "bridged theta functions are annihilated by the antiholomorphic operator", vec![1, 2, 3], Tol::Analytic, move |c| {
            let mut rng = c.rng();
            let mut worst: f64 = 0.0;
            for n in 1..=3 {
                let u = random_theta_vector(n, i, &mut rng).map_err(err)?;
                worst = worst.max(theta::theta_holomorphy_defect(&u, &c.points).map_err(err)?);
            }
            Ok(Outcome::scalar(worst))
        }),
        check("theta.negative_degree_rejected", s, "theta vectors of non-positive degree are rejected", vec![-1, 0], Tol::Fixed(0.0), move |_| {
            let rejected = [-1, 0].iter().all(|&n| matches!(ThetaVector::new(n, i, vec![]), Err(ThetaError::NonPositiveDegree(_))));
            Ok(Outcome::scalar(if rejected { 0.0 } else { 1.0 }))
        }),
        check("theta.undeformed_product", s, "bridged theta sections multiply undeformed", vec![1, 2], Tol::Analytic, move |c| {
            let mut rng = c.rng();
            let u = random_theta_vector(1, i, &mut rng).map_err(err)?;
            let v = random_theta_vector(2, i, &mut rng).map_err(err)?;
            theta::undeformed_product_defect(&u, &v, &c.theta, &c.points).map(Outcome::orders).map_err(err)
        }),
    ]
}

fn rank_checks() -> Vec<Check> {
    let s = Suite::Rank;
    let mut out = Vec::new();
    for (cc, dd) in [(3i64, 2i64), (5, 3)] {
        let tag = format!("{cc},{dd}");
        out.push(check(format!("rank.relation.{tag}"), s, "U'*V' = e^{2πi(θ'/d² + b/d)} V'*U' in the rational torus", vec![cc, dd], Tol::Symbolic, move |c| {
            let g = rank::bezout_completion(cc, dd).map_err(err)?;
            let theta_p = alpha(g.slope(), &c.theta);
            rank::rational_relation_defect(g, &theta_p).map(|x| Outcome::orders(Defect::from_series(&x))).map_err(err)
        }));
        out.push(check(format!("rank.bimodule.{tag}"), s, "left rational-torus action at α_{c/d}(θ) commutes with the right torus action", vec![cc, dd], Tol::Analytic, move |c| {
            let g = rank::bezout_completion(cc, dd).map_err(err)?;
            let theta_p = alpha(g.slope(), &c.theta);
            rank::prop65_defect(g, &c.theta, &theta_p, 3, c.seed).map(Outcome::orders).map_err(err)
        }));
        out.push(check(format!("rank.matched_parameter.{tag}"), s, "θ'/d² + b/d = (aθ+b)/(cθ+d) at θ' = α_{c/d}(θ)", vec![cc, dd], Tol::Symbolic, move |c| {
            let g = rank::bezout_completion(cc, dd).map_err(err)?;
            rank::matched_parameter_defect(g, &c.theta).map(|x| Outcome::orders(Defect::from_series(&x))).map_err(err)
        }));
        out.push(check(format!("rank.decompose.{tag}"), s, "n = kc + md has exactly one solution with 1 ≤ k ≤ d, for |n| ≤ 50", vec![cc, dd], Tol::Fixed(0.0), move |_| {
            let g = rank::bezout_completion(cc, dd).map_err(err)?;
            let failures = (-50..=50i64)
                .filter(|&n| {
                    let sols: Vec<_> = (1..=dd).filter(|k| (n - k * cc) % dd == 0).map(|k| (k, (n - k * cc) / dd)).collect();
                    sols != vec![rank::decompose(n, &g)]
                })
                .count();
            Ok(Outcome::scalar(failures as f64))
        }));
        out.push(check(format!("rank.bundle.{tag}"), s, "bundle components satisfy the shift and wrap gluing conditions", vec![cc, dd], Tol::Analytic, move |c| {
            let g = rank::bezout_completion(cc, dd).map_err(err)?;
            let f = RankSection::random_gaussian(g, 0, &mut c.rng()).map_err(err)?;
            let b = rank::bundle_components(&f, 6);
            Ok(Outcome::scalar(b.shift_defect.max(b.wrap_defect).max(rank::quasi_periodicity_defect(&f, 6))))
        }));
        out.push(check(format!("rank.leibniz.{tag}"), s, "q acts as a derivation on products of sections and [p,q] = c/d", vec![cc, dd], Tol::Analytic, move |c| {
            let g = rank::bezout_completion(cc, dd).map_err(err)?;
            let mut rng = c.rng();
            let f = RankSection::random_gaussian(g, 1, &mut rng).map_err(err)?;
            let h = RankSection::random_gaussian(g, 1, &mut rng).map_err(err)?;
            let pts: Vec<_> = c.points.iter().map(|p| (p.0, p.1)).collect();
            let mut worst = rank::leibniz_defect(&f, &h, &pts).map_err(err)?;
            let comm = f.act_q().act_p().add(&f.act_p().act_q().scale(&TruncatedSeries::real(-1.0, 1))).map_err(err)?;
            let t = f.act_t();
            for &(x, y) in &pts {
                worst = worst.max((comm.function_eval(x, y) - t.function_eval(x, y)).max_abs());
            }
            Ok(Outcome::scalar(worst))
        }));
        out.push(check(format!("rank.unitarity.{tag}"), s, "U' and V' preserve the inner product", vec![cc, dd], Tol::Analytic, move |c| {
            let g = rank::bezout_completion(cc, dd).map_err(err)?;
            let f = RankSection::random_gaussian(g, 0, &mut c.rng()).map_err(err)?;
            let zero = DeformationParameter::zero(0);
            let norm = f.inner_product(&f).map_err(err)?;
            let mut worst: f64 = 0.0;
            for h in [f.act_left_uprime(&zero).map_err(err)?, f.act_left_vprime(&zero).map_err(err)?] {
                worst = worst.max((h.inner_product(&h).map_err(err)? - norm.clone()).max_abs());
            }
            Ok(Outcome::scalar(worst))
        }));
    }
    out.push(check("rank.algebra_associativity", s, "associativity of the rational-torus product", vec![3, 2], Tol::Symbolic, |c| {
        let g = rank::bezout_completion(3, 2).map_err(err)?;
        let theta_p = alpha(g.slope(), &c.theta);
        let mut rng = c.rng();
        let mut worst: f64 = 0.0;
        for _ in 0..10 {
            let (x, y, z) = (BElement::random(g, c.order, 3, &mut rng), BElement::random(g, c.order, 3, &mut rng), BElement::random(g, c.order, 3, &mut rng));
            let l = x.b_star_mul(&y, &theta_p).and_then(|p| p.b_star_mul(&z, &theta_p)).map_err(err)?;
            let r = y.b_star_mul(&z, &theta_p).and_then(|p| x.b_star_mul(&p, &theta_p)).map_err(err)?;
            worst = worst.max(l.sub(&r).map_err(err)?.max_abs() / l.max_abs().max(1.0));
        }
        Ok(Outcome::scalar(worst))
    }));
    out
}

fn registry(suite: Suite) -> Vec<Check> {
    [axioms_checks(), twist_checks(), zak_checks(), theta_checks(), rank_checks()]
        .into_iter()
        .flatten()
        .filter(|c| suite.includes(c.suite))
        .collect()
}

/// Ids of the checks `suite` would run.
pub fn check_ids(suite: Suite) -> Vec<String> {
    let mut ids: Vec<_> = registry(suite).into_iter().map(|c| c.id).collect();
    ids.sort();
    ids
}

fn check_seed(base: u64, id: &str) -> u64 {
    // Stable across runs and independent of registration order.
    id.bytes().fold(base ^ 0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

pub fn run_suite(suite: Suite, config: &EngineConfig) -> Result<Vec<VerificationReport>, SuiteError> {
    config.validate()?;
    let theta = config.theta()?;
    let theta_coeffs = config.theta_coeffs();
    let mut reports: Vec<VerificationReport> = registry(suite)
        .into_par_iter()
        .map(|chk| {
            let seed = check_seed(config.seed, &chk.id);
            let ctx = Ctx {
                order: config.order,
                theta: theta.clone(),
                seed,
                points: zakmod::sample_points(config.samples, seed),
                opts: ZakOptions { term_cap: config.term_cap, ..ZakOptions::default() },
            };
            let start = Instant::now();
            let result = (chk.run)(&ctx);
            let wall_time = start.elapsed();
            let base_tol = match chk.tol {
                Tol::Symbolic => config.tol_symbolic,
                Tol::Analytic => config.tol_analytic,
                Tol::Fixed(t) => t,
            };
            let params = ReportParams { order: config.order, theta: theta_coeffs.clone(), degrees: chk.degrees.clone(), seed };
            let (defect, tolerance, leading_order, error) = match result {
                Ok(o) => {
                    let tol = o.tolerance.unwrap_or(base_tol);
                    let d = o.defect.max();
                    let lead = if d > tol { o.defect.leading_order(tol) } else { None };
                    (d, tol, lead, None)
                }
                Err(e) => (f64::INFINITY, base_tol, None, Some(e)),
            };
            VerificationReport {
                id: chk.id,
                suite: chk.suite,
                identity: chk.identity.to_string(),
                params,
                defect,
                tolerance,
                pass: error.is_none() && defect <= tolerance,
                leading_order,
                error,
                wall_time,
            }
        })
        .collect();
    reports.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(reports)
}

pub fn all_pass(reports: &[VerificationReport]) -> bool {
    reports.iter().all(|r| r.pass)
}

#[derive(Serialize)]
struct JsonReport<'a> {
    schema: &'static str,
    reports: &'a [VerificationReport],
}

pub const CSV_HEADER: [&str; 12] =
    ["id", "suite", "identity", "order", "theta", "degrees", "seed", "defect", "tolerance", "pass", "leading_order", "error"];

fn fmt3(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.2e}")
    } else {
        "inf".into()
    }
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(";")
}

pub fn emit(reports: &[VerificationReport], format: Format) -> Vec<u8> {
    match format {
        Format::Json => {
            let mut out = serde_json::to_vec_pretty(&JsonReport { schema: SCHEMA, reports }).expect("reports serialize");
            out.push(b'\n');
            out
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(CSV_HEADER).expect("in-memory write");
            for r in reports {
                w.write_record([
                    r.id.clone(),
                    r.suite.name().to_string(),
                    r.identity.clone(),
                    r.params.order.to_string(),
                    join(&r.params.theta),
                    join(&r.params.degrees),
                    r.params.seed.to_string(),
                    fmt3(r.defect),
                    fmt3(r.tolerance),
                    r.pass.to_string(),
                    r.leading_order.map(|n| n.to_string()).unwrap_or_default(),
                    r.error.clone().unwrap_or_default(),
                ])
                .expect("in-memory write");
            }
            w.into_inner().expect("in-memory flush")
        }
        Format::Text => {
            if reports.is_empty() {
                return b"no checks\n".to_vec();
            }
            let width = reports.iter().map(|r| r.id.len()).max().unwrap_or(0);
            let mut s = String::new();
            for r in reports {
                let status = if r.pass { "PASS" } else { "FAIL" };
                let _ = write!(s, "{status}  {:width$}  defect {:>9}  tol {:>9}  {:>8.1?}  {}", r.id, fmt3(r.defect), fmt3(r.tolerance), r.wall_time, r.identity);
                if let Some(n) = r.leading_order {
                    let _ = write!(s, "  [first fails at ℏ^{n}]");
                }
                if let Some(e) = &r.error {
                    let _ = write!(s, "  error: {e}");
                }
                s.push('\n');
            }
            let passed = reports.iter().filter(|r| r.pass).count();
            let _ = writeln!(s, "{passed}/{} checks passed", reports.len());
            s.into_bytes()
        }
    }
}

/// Per-order defect of an obstruction that is expected to be nonzero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub id: String,
    pub description: String,
    pub order: usize,
    #[serde(serialize_with = "three_digits_vec")]
    pub by_order: Vec<f64>,
    /// First ℏ-order whose defect exceeds the analytic tolerance.
    pub leading_order: Option<usize>,
}

fn three_digits_vec<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(xs.len()))?;
    for x in xs {
        seq.serialize_element(&round3(*x))?;
    }
    seq.end()
}

type Obstruction = fn(&EngineConfig, &DeformationParameter) -> Result<Defect, String>;

fn obstructions() -> Vec<(&'static str, &'static str, Obstruction)> {
    vec![
        ("quasi_assoc_without_phi", "module associativity for degrees (1,1,1) with the coassociator omitted", |cfg, theta| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let f = (0..3).map(|_| ZakSection::random_gaussian(1, theta.order(), &mut rng)).collect::<Result<Vec<_>, _>>().map_err(err)?;
            let pts = zakmod::sample_points(cfg.samples, cfg.seed);
            zakmod::quasi_associativity_defect(&f[0], &f[1], &f[2], theta, false, &pts).map_err(err)
        }),
        ("generalized_assoc_theta_prime_eq_theta", "generalized associativity for degrees (1,2,1) with θ' = θ instead of α_2(θ)", |cfg, theta| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let order = theta.order();
            let a = Operand::Zak(ZakSection::random_gaussian(1, order, &mut rng).map_err(err)?);
            let b = ZakSection::random_gaussian(2, order, &mut rng).map_err(err)?;
            let c = Operand::Zak(ZakSection::random_gaussian(1, order, &mut rng).map_err(err)?);
            let pts = zakmod::sample_points(cfg.samples, cfg.seed);
            zakmod::generalized_associativity_defect(&a, &b, &c, theta, theta, &pts).map_err(err)
        }),
        ("quasi_coassoc_without_phi", "iterated twisted coproducts of p compared without conjugating by the coassociator", |_, theta| {
            pbw::quasi_coassoc_defect_by_order(Generator::P, theta, CoproductKind::Twisted, false).map(Defect::from_by_order).map_err(err)
        }),
        ("rank_bimodule_theta_prime_eq_theta", "rational-torus and torus actions on E_{3,2} with θ' = θ", |cfg, theta| {
            let g = rank::bezout_completion(3, 2).map_err(err)?;
            rank::prop65_defect(g, theta, theta, 2, cfg.seed).map_err(err)
        }),
    ]
}

/// Runs every known obstruction at each truncation order `1..=config.order`.
pub fn sweep(config: &EngineConfig) -> Result<Vec<SweepRow>, SuiteError> {
    config.validate()?;
    let base = config.theta_coeffs();
    let jobs: Vec<_> = obstructions().into_iter().flat_map(|o| (1..=config.order).map(move |n| (o, n))).collect();
    let rows = jobs
        .into_par_iter()
        .map(|((id, description, f), n)| {
            let mut c = base.clone();
            c.truncate(n + 1);
            c.resize(n + 1, 0.0);
            let theta = DeformationParameter::from_real(&c).map_err(|e| SuiteError::InvalidConfig(e.to_string()))?;
            let d = f(config, &theta).map_err(SuiteError::InvalidConfig)?;
            Ok(SweepRow {
                id: id.to_string(),
                description: description.to_string(),
                order: n,
                by_order: d.by_order().to_vec(),
                leading_order: d.leading_order(config.tol_analytic),
            })
        })
        .collect::<Result<Vec<_>, SuiteError>>()?;
    Ok(rows)
}

#[derive(Serialize)]
struct JsonSweep<'a> {
    schema: &'static str,
    sweep: &'a [SweepRow],
}

pub fn emit_sweep(rows: &[SweepRow], format: Format) -> Vec<u8> {
    match format {
        Format::Json => {
            let mut out = serde_json::to_vec_pretty(&JsonSweep { schema: SCHEMA, sweep: rows }).expect("rows serialize");
            out.push(b'\n');
            out
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["id", "order", "by_order", "leading_order"]).expect("in-memory write");
            for r in rows {
                let by = r.by_order.iter().map(|x| fmt3(*x)).collect::<Vec<_>>().join(";");
                w.write_record([r.id.clone(), r.order.to_string(), by, r.leading_order.map(|n| n.to_string()).unwrap_or_default()])
                    .expect("in-memory write");
            }
            w.into_inner().expect("in-memory flush")
        }
        Format::Text => {
            if rows.is_empty() {
                return b"no obstructions\n".to_vec();
            }
            let mut s = String::new();
            for r in rows {
                let lead = r.leading_order.map_or("none".to_string(), |n| format!("ℏ^{n}"));
                let by = r.by_order.iter().map(|x| fmt3(*x)).collect::<Vec<_>>().join(" ");
                let _ = writeln!(s, "{:40} N={}  leading {:5}  [{}]", r.id, r.order, lead, by);
            }
            s.into_bytes()
        }
    }
}
