use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use reeb_core::betti::{betti_numbers, betti_of_spec, odd_sphere_degree_pattern};
use reeb_core::growth::{linear_growth_rate, CountSequence};
use reeb_core::loopmodel::{bar, loop_space_model, sphere_model, tensor, ModelSpec};
use reeb_core::qdga::{Dga, DgaBuilder, Element};

const N: usize = 12;

fn spec_strategy() -> impl Strategy<Value = String> {
    let sphere = (2usize..8).prop_map(|n| format!("s{n}"));
    let base = prop_oneof![
        sphere.clone(),
        (sphere.clone(), sphere.clone()).prop_map(|(a, b)| format!("{a}*{b}")),
    ];
    prop_oneof![
        base.clone(),
        base.clone().prop_map(|b| format!("loop({b})")),
        (sphere.clone(), sphere).prop_map(|(a, b)| format!("loop({a})*loop({b})")),
    ]
}

fn rational(rng: &mut ChaCha8Rng) -> BigRational {
    BigRational::new(BigInt::from(rng.gen_range(-9i64..10)), BigInt::from(rng.gen_range(1i64..6)))
}

/// Random homogeneous element of degree `k` (possibly zero).
fn random_element(dga: &Dga, k: usize, rng: &mut ChaCha8Rng) -> Element {
    let basis = dga.basis(k).unwrap();
    let raw: Vec<(BigRational, Vec<u32>)> = basis
        .iter()
        .filter_map(|m| rng.gen_bool(0.6).then(|| (rational(rng), m.exponents().to_vec())))
        .collect();
    dga.element(&raw).unwrap()
}

fn sign(k: usize) -> BigRational {
    BigRational::from_integer(BigInt::from(if k % 2 == 0 { 1 } else { -1 }))
}

fn pick_degrees(rng: &mut ChaCha8Rng) -> (usize, usize) {
    let a = rng.gen_range(0..N - 1);
    let b = rng.gen_range(0..N - 1 - a);
    (a, b)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn graded_commutativity(spec in spec_strategy(), seed in any::<u64>()) {
        let dga = ModelSpec::parse(&spec).unwrap().build(N).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..4 {
            let (ka, kb) = pick_degrees(&mut rng);
            let a = random_element(&dga, ka, &mut rng);
            let b = random_element(&dga, kb, &mut rng);
            let ab = dga.multiply(&a, &b).unwrap();
            let ba = dga.multiply(&b, &a).unwrap();
            prop_assert_eq!(ab, ba.scale(&sign(ka * kb)));
        }
    }

    #[test]
    fn leibniz_rule(spec in spec_strategy(), seed in any::<u64>()) {
        let dga = ModelSpec::parse(&spec).unwrap().build(N).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..4 {
            let (ka, kb) = pick_degrees(&mut rng);
            let a = random_element(&dga, ka, &mut rng);
            let b = random_element(&dga, kb, &mut rng);
            let lhs = dga.differentiate(&dga.multiply(&a, &b).unwrap()).unwrap();
            let da_b = dga.multiply(&dga.differentiate(&a).unwrap(), &b).unwrap();
            let a_db = dga.multiply(&a, &dga.differentiate(&b).unwrap()).unwrap();
            let rhs = da_b.add(&a_db.scale(&sign(ka))).unwrap();
            prop_assert!(lhs.sub(&rhs).unwrap().is_zero(), "{}: |a|={ka} |b|={kb}", spec);
        }
    }

    #[test]
    fn differential_squares_to_zero(spec in spec_strategy(), seed in any::<u64>()) {
        let dga = ModelSpec::parse(&spec).unwrap().build(N).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for k in 0..=N - 2 {
            let e = random_element(&dga, k, &mut rng);
            let dde = dga.differentiate(&dga.differentiate(&e).unwrap()).unwrap();
            prop_assert!(dde.is_zero(), "{}: degree {k}", spec);
        }
    }

    #[test]
    fn json_round_trip_is_exact(n in 2usize..6, num in any::<i64>(), den in 1i64..i64::MAX, extra in any::<u64>()) {
        let big = BigInt::from(num) * BigInt::from(extra) + BigInt::from(1u8);
        let c = BigRational::new(big, BigInt::from(den));
        let odd = n % 2 == 1;
        let mut b = DgaBuilder::new(N).generator("x", n);
        if !odd {
            b = b.generator("y", 2 * n - 1).differential("y", vec![(c.clone(), vec![2])]);
        }
        let dga = b.build().unwrap();
        let back = Dga::from_json(&dga.to_json()).unwrap();
        prop_assert_eq!(back.to_json(), dga.to_json());
        for i in 0..dga.generators().len() {
            prop_assert_eq!(back.generator_differential(i), dga.generator_differential(i));
        }
    }

    #[test]
    fn bar_rule_on_generators(spec in prop_oneof![(2usize..8).prop_map(|n| format!("s{n}")), (2usize..6, 2usize..6).prop_map(|(a, b)| format!("s{a}*s{b}"))]) {
        let base = ModelSpec::parse(&spec).unwrap().build(N).unwrap();
        let lp = loop_space_model(&base).unwrap();
        let n = base.generators().len();
        for i in 0..n {
            let x = lp.gen(&lp.generators()[i].name).unwrap();
            let xbar = lp.gen(&lp.generators()[n + i].name).unwrap();
            let lhs = lp.differentiate(&xbar).unwrap();
            let rhs = bar(&lp, &lp.differentiate(&x).unwrap()).unwrap();
            prop_assert!(lhs.add(&rhs).unwrap().is_zero());
        }
    }

}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn kunneth_on_random_products(a in spec_strategy(), b in spec_strategy()) {
        let k = 10;
        let ta = betti_of_spec(&ModelSpec::parse(&a).unwrap(), k).unwrap();
        let tb = betti_of_spec(&ModelSpec::parse(&b).unwrap(), k).unwrap();
        let da = ModelSpec::parse(&a).unwrap().build(k + 2).unwrap();
        let db = ModelSpec::parse(&b).unwrap().build(k + 2).unwrap();
        let joint = betti_numbers(&tensor(&da, &db).unwrap(), k).unwrap();
        prop_assert_eq!(joint.values, ta.convolve(&tb).values);
    }
}

#[test]
fn spheres_have_sphere_cohomology() -> Result<(), TestCaseError> {
    for n in 2..=12 {
        let t = betti_numbers(&sphere_model(n, 2 * n + 2).unwrap(), 2 * n).unwrap();
        let want: Vec<u64> = (0..=2 * n).map(|i| u64::from(i == 0 || i == n)).collect();
        prop_assert_eq!(t.values, want);
    }
    Ok(())
}

#[test]
fn odd_loop_spheres_match_pattern() {
    for n in [3, 5, 7, 9, 11] {
        let t = betti_of_spec(&ModelSpec::parse(&format!("loop(s{n})")).unwrap(), 36).unwrap();
        assert_eq!(t, odd_sphere_degree_pattern(n, 36).unwrap());
    }
}

#[test]
fn odd_sphere_partial_sums_grow_linearly() {
    // Partial sums of b_i for the free loop space of S^n grow with slope 2/(n-1).
    for n in [3, 5, 7] {
        let k_max = 10 * (n - 1);
        let t = odd_sphere_degree_pattern(n, k_max).unwrap();
        let sums = t.partial_sums();
        let seq = CountSequence::new((1..=k_max).map(|k| (k as f64, sums[k] as u128)).collect()).unwrap();
        let target = 2.0 / (n - 1) as f64;
        let slope = linear_growth_rate(&seq).unwrap();
        assert!((slope - target).abs() <= 0.1 * target, "n={n}: {slope} vs {target}");
    }
}
