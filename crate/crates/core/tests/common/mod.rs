#![allow(dead_code)]

pub mod loops;

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use reeb_core::maslov::{self, expm, j0};

/// Random symmetric matrix with entries in `[-scale, scale]`.
pub fn random_symmetric(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-scale..scale));
    (&a + a.transpose()) * 0.5
}

/// Linear Hamiltonian path `t ↦ exp(t J₀ S)` on `[0, 1]`.
pub fn linear_flow(m: usize, s: DMatrix<f64>) -> maslov::FnSymplecticPath<impl Fn(f64) -> DMatrix<f64>> {
    let gen = j0(m) * s;
    maslov::FnSymplecticPath {
        f: move |t: f64| expm(&(&gen * t)),
        tau: 1.0,
        m,
    }
}

/// Generator of a random nondegenerate linear path: `det S` and
/// `det(I - Ψ(1))` bounded away from zero.
pub fn random_nondegenerate_generator(rng: &mut ChaCha8Rng, m: usize) -> DMatrix<f64> {
    loop {
        let s = random_symmetric(rng, 2 * m, 4.0);
        let eig = s.clone().symmetric_eigen().eigenvalues;
        if eig.iter().any(|l| l.abs() < 0.2) {
            continue;
        }
        let end = expm(&(j0(m) * &s));
        if maslov::endpoint_degeneracy(&end) > 1e-2 {
            return s;
        }
    }
}
