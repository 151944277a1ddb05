use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reeb_core::loops::*;

mod common;
use common::loops::{random_jagged_loop, random_smooth_loop};

/// Smooth random loop on the flat torus, winding `w` times in the first factor.
fn random_torus_loop(rng: &mut ChaCha8Rng, n: usize, w: i32) -> DiscreteLoop {
    let a: Vec<f64> = (0..4).map(|_| rng.gen_range(-0.2..0.2)).collect();
    let pts = (0..n)
        .map(|i| {
            let t = i as f64 / n as f64;
            let s = 2.0 * std::f64::consts::PI * t;
            vec![
                w as f64 * t + a[0] * s.sin() + a[1] * (2.0 * s).cos(),
                0.3 + a[2] * s.cos() + a[3] * (3.0 * s).sin(),
            ]
        })
        .collect();
    DiscreteLoop::torus(pts).unwrap()
}

#[test]
fn schwarz_on_random_loops() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let n = rng.gen_range(3..300);
        let dim = rng.gen_range(1..5);
        let lp = random_jagged_loop(&mut rng, n, dim);
        let m = measure(&lp);
        assert!(m.schwarz_gap() >= -1e-12 * m.energy);
        let lens = lp.chord_lengths();
        let spread = lens.iter().cloned().fold(0.0, f64::max) - lens.iter().cloned().fold(f64::MAX, f64::min);
        if spread > 1e-9 {
            assert!(m.schwarz_gap() > 0.0);
        }
        let r = arclength_reparametrize(&lp).unwrap();
        assert!(measure(&r).schwarz_gap() >= -1e-12 * measure(&r).energy);
    }
}

#[test]
fn equality_after_reparametrization() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..100 {
        let n = rng.gen_range(50..2000);
        let dim = rng.gen_range(2..5);
        let lp = random_smooth_loop(&mut rng, n, dim);
        let before = measure(&lp);
        let r = arclength_reparametrize(&lp).unwrap();
        let after = measure(&r);
        assert!(after.relative_schwarz_gap().abs() <= 1e-6, "n = {n} gap {}", after.relative_schwarz_gap());
        assert!(after.length <= before.length * (1.0 + 1e-12));
    }
}

#[test]
fn concatenation_on_random_torus_loops() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let (w1, w2) = (rng.gen_range(-1..2), rng.gen_range(-1..2));
        let g1 = random_torus_loop(&mut rng, 1000, w1);
        let g2 = random_torus_loop(&mut rng, 1000, w2);
        let eps = rng.gen_range(0.1..0.9);
        let c = concat_eps(&g1, &g2, eps).unwrap();
        assert_eq!(c.len(), 2000);
        let lhs = measure(&c).energy;
        let rhs = concat_energy_formula(&g1, &g2, grid_epsilon(&g1, &g2, eps));
        assert!((lhs - rhs).abs() / rhs <= 1e-3, "{lhs} vs {rhs}");
    }
}

#[test]
fn lift_identity_on_random_torus_loops() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let base = arclength_reparametrize(&random_torus_loop(&mut rng, 2000, 1)).unwrap();
        let lift = arclength_reparametrize(&lift_to_product_circle(&base)).unwrap();
        let l = measure(&lift.project().unwrap()).length;
        let e = measure(&lift).energy;
        assert!((e - 0.5 * (l * l + 1.0)).abs() / e <= 1e-3);
        assert!(lift.chord_lengths().iter().all(|&c| c > 0.0));
    }
}
