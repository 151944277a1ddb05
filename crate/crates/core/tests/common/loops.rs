use rand::Rng;
use rand_chacha::ChaCha8Rng;
use reeb_core::loops::DiscreteLoop;
use std::f64::consts::PI;

/// Random smooth loop in `R^dim`: a few random Fourier modes, sampled at a
/// randomly warped (non-uniform) parameter grid.
pub fn random_smooth_loop(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> DiscreteLoop {
    let modes = rng.gen_range(1..6);
    let coef: Vec<Vec<(f64, f64)>> = (0..dim)
        .map(|_| (0..modes).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect())
        .collect();
    let warp = rng.gen_range(0.0..0.9);
    let phase = rng.gen_range(0.0..1.0);
    let pts = (0..n)
        .map(|i| {
            let u = i as f64 / n as f64;
            let t = u + warp * (2.0 * PI * (u + phase)).sin() / (2.0 * PI) - warp * (2.0 * PI * phase).sin() / (2.0 * PI);
            coef.iter()
                .map(|c| {
                    c.iter()
                        .enumerate()
                        .map(|(k, (a, b))| {
                            let w = 2.0 * PI * (k + 1) as f64 * t;
                            a * w.cos() + b * w.sin()
                        })
                        .sum()
                })
                .collect()
        })
        .collect();
    DiscreteLoop::euclidean(pts).unwrap()
}

/// Loop through independent uniform points of `[-1, 1]^dim`.
pub fn random_jagged_loop(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> DiscreteLoop {
    let pts = (0..n)
        .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    DiscreteLoop::euclidean(pts).unwrap()
}
