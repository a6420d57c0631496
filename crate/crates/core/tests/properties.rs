use std::collections::BTreeMap;

use nctorus::gauss::GaussSum;
use nctorus::pbw::{Generator, LegMonomial, TensorElement};
use nctorus::rank::{bezout_completion, decompose, fourier_reassemble, fourier_split};
use nctorus::series::{alpha, DeformationParameter, TruncatedSeries, C64};
use nctorus::torus::{Realization, TorusElement};
use nctorus::zakmod::{operand_defect, sample_points, Operand, ZakSection};
use num_rational::Ratio;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const N: usize = 4;

fn series() -> impl Strategy<Value = TruncatedSeries> {
    prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64), N + 1)
        .prop_map(|v| TruncatedSeries::from_coeffs(v.into_iter().map(|(a, b)| C64::new(a, b)).collect()))
}

fn theta() -> impl Strategy<Value = DeformationParameter> {
    prop::collection::vec(-1.0..1.0f64, N).prop_map(|v| {
        let mut c = vec![0.0];
        c.extend(v);
        DeformationParameter::from_real(&c).unwrap()
    })
}

fn ratio() -> impl Strategy<Value = Ratio<i64>> {
    (-6i64..=6, 1i64..=5).prop_map(|(a, b)| Ratio::new(a, b))
}

fn torus_element() -> impl Strategy<Value = TorusElement> {
    prop::collection::vec(((-2i64..=2, -2i64..=2), series()), 1..4)
        .prop_map(|terms| TorusElement::from_coeffs(Realization::Flat, N, terms))
}

fn coprime_pair() -> impl Strategy<Value = (i64, i64)> {
    (-9i64..=9, 1i64..=9).prop_filter("coprime", |(c, d)| num_integer::gcd(*c, *d) == 1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn series_ring_axioms(a in series(), b in series(), c in series()) {
        prop_assert!((&(&a * &b) * &c).approx_eq(&(&a * &(&b * &c)), 1e-10));
        prop_assert!((&a * &(&b + &c)).approx_eq(&(&(&a * &b) + &(&a * &c)), 1e-10));
        prop_assert!((&a * &b).approx_eq(&(&b * &a), 1e-12));
        prop_assert!((&a - &a).is_zero());
    }

    #[test]
    fn series_exp_is_a_homomorphism(x in theta(), y in theta()) {
        let (x, y) = (x.series(), y.series());
        let lhs = (x + y).exp().unwrap();
        let rhs = &x.exp().unwrap() * &y.exp().unwrap();
        prop_assert!(lhs.approx_eq(&rhs, 1e-10));
    }

    #[test]
    fn series_units_invert(a in series(), c in 0.5..3.0f64) {
        let mut coeffs = a.coeffs().to_vec();
        coeffs[0] = C64::new(c, 0.0);
        let u = TruncatedSeries::from_coeffs(coeffs);
        let inv = u.invert().unwrap();
        prop_assert!((&u * &inv).approx_eq(&TruncatedSeries::one(N), 1e-8));
        prop_assert!(a.conj().conj() == a);
    }

    #[test]
    fn alpha_is_a_group_action(t in theta(), r in ratio(), s in ratio()) {
        let lhs = alpha(r, &alpha(s, &t));
        let rhs = alpha(r + s, &t);
        prop_assert!(lhs.series().approx_eq(rhs.series(), 1e-9));
        prop_assert_eq!(alpha(Ratio::from_integer(0), &t), t.clone());
        // Valuation ≥ 1 is preserved, and the linear term is untouched.
        prop_assert_eq!(lhs.series().coeff(0), C64::new(0.0, 0.0));
        prop_assert!((lhs.series().coeff(1) - t.series().coeff(1)).norm() < 1e-12);
    }

    #[test]
    fn torus_star_is_associative_and_unital(a in torus_element(), b in torus_element(), c in torus_element(), t in theta()) {
        let l = a.star_mul(&b, &t).unwrap().star_mul(&c, &t).unwrap();
        let r = a.star_mul(&b.star_mul(&c, &t).unwrap(), &t).unwrap();
        prop_assert!(l.sub(&r).unwrap().max_abs() <= 1e-10 * l.max_abs().max(1.0));
        let one = TorusElement::one(Realization::Flat, N);
        prop_assert_eq!(a.star_mul(&one, &t).unwrap(), a.clone());
        let z = DeformationParameter::zero(N);
        let d = a.star_mul(&b, &z).unwrap().sub(&b.star_mul(&a, &z).unwrap()).unwrap();
        prop_assert!(d.max_abs() < 1e-12);
    }

    #[test]
    fn tensor_product_is_associative(x in 0u32..3, y in 0u32..3, z in 0u32..3, w in 0u32..3) {
        let mono = |t, q, p| TensorElement::monomial(vec![LegMonomial::new(t, q, p)], TruncatedSeries::one(N));
        let (a, b, c) = (mono(0, x, y), mono(z, w, x), mono(y, z, w));
        let l = a.mul(&b).unwrap().mul(&c).unwrap();
        let r = a.mul(&b.mul(&c).unwrap()).unwrap();
        prop_assert!(l.defect(&r).unwrap() < 1e-9);
        // The coproduct is an algebra map.
        let lhs = a.mul(&b).unwrap().coproduct(0).unwrap();
        let rhs = a.coproduct(0).unwrap().mul(&b.coproduct(0).unwrap()).unwrap();
        prop_assert!(lhs.defect(&rhs).unwrap() < 1e-9);
    }

    #[test]
    fn gaussian_calculus(
        c1 in series(), c2 in series(),
        b1 in -1.0..1.0f64, b2 in -1.0..1.0f64,
        a1 in 0.5..3.0f64, a2 in 0.5..3.0f64,
        s in -2.0..2.0f64, x in -1.5..1.5f64,
    ) {
        let f = GaussSum::gaussian(c1, C64::new(b1, 0.0), C64::new(a1, 0.3)).unwrap();
        let g = GaussSum::gaussian(c2, C64::new(b2, 0.0), C64::new(a2, -0.2)).unwrap();
        let sum = f.add(&g);
        prop_assert!(sum.integrate().approx_eq(&(&f.integrate() + &g.integrate()), 1e-10));
        prop_assert!(f.real_shift(s).integrate().approx_eq(&f.integrate(), 1e-10));
        prop_assert!(f.derivative().integrate().max_abs() < 1e-10);
        prop_assert!(f.real_shift(s).evaluate(x).approx_eq(&f.evaluate(x - s), 1e-10));
        prop_assert!(f.pointwise_mul(&g).evaluate(x).approx_eq(&(&f.evaluate(x) * &g.evaluate(x)), 1e-10));
        let zero = TruncatedSeries::zero(N);
        prop_assert!(f.formal_shift(&zero, &zero).unwrap().evaluate(x).approx_eq(&f.evaluate(x), 1e-12));
    }

    #[test]
    fn bezout_and_decompose((c, d) in coprime_pair(), n in -200i64..=200) {
        let g = bezout_completion(c, d).unwrap();
        prop_assert_eq!(g.a() * g.d() - g.b() * g.c(), 1);
        if c != 0 {
            prop_assert!(0 <= g.a() && g.a() < c.abs());
        }
        let (k, m) = decompose(n, &g);
        prop_assert!((1..=d).contains(&k));
        prop_assert_eq!(k * c + m * d, n);
    }

    #[test]
    fn fourier_split_round_trips((c, d) in coprime_pair(), coeffs in prop::collection::btree_map(-30i64..=30, (-1.0..1.0f64, -1.0..1.0f64), 0..12)) {
        let phi: BTreeMap<i64, C64> = coeffs.into_iter().map(|(n, (a, b))| (n, C64::new(a, b))).collect();
        let parts = fourier_split(&phi, c, d).unwrap();
        prop_assert_eq!(parts.len(), d as usize);
        prop_assert_eq!(fourier_reassemble(&parts, c, d).unwrap(), phi);
    }

    #[test]
    fn zak_heisenberg_relation(n in prop::sample::select(vec![-2i64, -1, 1, 2, 3]), seed in any::<u64>()) {
        let f = ZakSection::random_gaussian(n, 1, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let comm = f.act_q().act_p().sub(&f.act_p().act_q()).unwrap();
        let d = operand_defect(&Operand::Zak(comm), &Operand::Zak(f.act_t()), &sample_points(6, seed)).unwrap();
        prop_assert!(d.max() < 1e-9);
    }

    #[test]
    fn zak_right_action_is_a_module_action(n in prop::sample::select(vec![-1i64, 1, 2]), seed in any::<u64>(), t in theta()) {
        let f = ZakSection::random_gaussian(n, N, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let u = TorusElement::u(Realization::Flat, N);
        let v = TorusElement::v(Realization::Flat, N);
        let pts = sample_points(6, seed);
        let a = f.act_right(&u.star_mul(&v, &t).unwrap(), &t).unwrap();
        let b = f.act_right(&u, &t).unwrap().act_right(&v, &t).unwrap();
        prop_assert!(operand_defect(&Operand::Zak(a), &Operand::Zak(b), &pts).unwrap().max() < 1e-8);
    }
}

#[test]
fn generators_have_the_heisenberg_bracket() {
    let p = TensorElement::generator(Generator::P, 2);
    let q = TensorElement::generator(Generator::Q, 2);
    let t = TensorElement::generator(Generator::T, 2);
    let bracket = p.mul(&q).unwrap().sub(&q.mul(&p).unwrap()).unwrap();
    assert!(bracket.defect(&t).unwrap() < 1e-15);
}
