//! Exact Betti numbers of truncated DGAs.

use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact;
use crate::loopmodel::{ModelError, ModelSpec};
use crate::qdga::{Dga, DgaError, Monomial};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BettiError {
    #[error("truncation degree {max_degree} too small for degree {requested}: need max_degree >= {requested} + 2")]
    InsufficientTruncation { requested: usize, max_degree: usize },
    #[error("sphere dimension {0} has the wrong parity for this operation")]
    WrongParity(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Dga(#[from] DgaError),
}

pub type Result<T> = std::result::Result<T, BettiError>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BettiTable {
    pub values: Vec<u64>,
    pub reliable_up_to: usize,
}

impl BettiTable {
    pub fn get(&self, degree: usize) -> u64 {
        self.values.get(degree).copied().unwrap_or(0)
    }

    /// `sum_{i=1}^{k} b_i` for `k = 0..=len-1`.
    pub fn partial_sums(&self) -> Vec<u64> {
        let mut acc = 0;
        self.values
            .iter()
            .enumerate()
            .map(|(i, &b)| {
                if i > 0 {
                    acc += b;
                }
                acc
            })
            .collect()
    }

    /// Discrete convolution `c_i = sum_{j+k=i} a_j b_k`, truncated to the
    /// shorter reliable range.
    pub fn convolve(&self, other: &BettiTable) -> BettiTable {
        let k = self.reliable_up_to.min(other.reliable_up_to);
        let values = (0..=k)
            .map(|i| (0..=i).map(|j| self.get(j) * other.get(i - j)).sum())
            .collect();
        BettiTable {
            values,
            reliable_up_to: k,
        }
    }
}

/// Matrix of `d: C^k -> C^{k+1}` with one row per target basis monomial.
fn differential_matrix(dga: &Dga, source: &[Monomial], target: &[Monomial]) -> Vec<Vec<BigRational>> {
    let position: std::collections::HashMap<&Monomial, usize> =
        target.iter().enumerate().map(|(i, m)| (m, i)).collect();
    let mut rows = vec![vec![BigRational::zero(); source.len()]; target.len()];
    for (j, m) in source.iter().enumerate() {
        let e = dga.monomial_element(m.clone(), BigRational::from_integer(1.into()));
        let de = dga.differentiate(&e).expect("element built from this algebra");
        for (tm, c) in de.terms() {
            let i = position[tm];
            rows[i][j] = c.clone();
        }
    }
    rows
}

/// Rank of `d: C^k -> C^{k+1}`.
pub fn differential_rank(dga: &Dga, k: usize) -> Result<usize> {
    if k + 1 > dga.max_degree() {
        return Err(BettiError::InsufficientTruncation {
            requested: k,
            max_degree: dga.max_degree(),
        });
    }
    if dga.has_zero_differential() {
        return Ok(0);
    }
    let source = dga.basis(k)?;
    let target = dga.basis(k + 1)?;
    if source.is_empty() || target.is_empty() {
        return Ok(0);
    }
    Ok(exact::rank(&differential_matrix(dga, &source, &target)))
}

/// `b_k = dim ker(d_k) - rank(d_{k-1})` for `k = 0..=max_reported`.
pub fn betti_numbers(dga: &Dga, max_reported: usize) -> Result<BettiTable> {
    if dga.max_degree() < max_reported + 2 {
        return Err(BettiError::InsufficientTruncation {
            requested: max_reported,
            max_degree: dga.max_degree(),
        });
    }
    let per_degree: Vec<(usize, usize)> = (0..=max_reported)
        .into_par_iter()
        .map(|k| -> Result<(usize, usize)> {
            Ok((dga.basis(k)?.len(), differential_rank(dga, k)?))
        })
        .collect::<Result<_>>()?;
    let values = (0..=max_reported)
        .map(|k| {
            let (dim, rank_out) = per_degree[k];
            let rank_in = if k == 0 { 0 } else { per_degree[k - 1].1 };
            (dim - rank_out - rank_in) as u64
        })
        .collect();
    Ok(BettiTable {
        values,
        reliable_up_to: max_reported,
    })
}

/// Betti numbers of a model spec, truncating at `max_reported + 2`.
pub fn betti_of_spec(spec: &ModelSpec, max_reported: usize) -> Result<BettiTable> {
    let dga = spec.build(max_reported + 2)?;
    betti_numbers(&dga, max_reported)
}

/// Degrees `(1 + 2s)(n - 1)` of the classes `xbar * ybar^s` in the model of
/// the free loop space of an even sphere.
pub fn sullivan_class_degrees(n: usize, s_max: usize) -> Result<Vec<usize>> {
    if n < 2 || n % 2 == 1 {
        return Err(BettiError::WrongParity(n));
    }
    Ok((0..=s_max).map(|s| (1 + 2 * s) * (n - 1)).collect())
}

/// Closed-form Betti numbers of the free loop space of an odd sphere `S^n`:
/// one class in degree 0 and one in each degree `k(n-1)`, `k(n-1)+1`, `k >= 1`.
pub fn odd_sphere_degree_pattern(n: usize, max_reported: usize) -> Result<BettiTable> {
    if n < 3 || n % 2 == 0 {
        return Err(BettiError::WrongParity(n));
    }
    let period = n - 1;
    let values = (0..=max_reported)
        .map(|i| {
            let hit = i == 0 || (i >= period && (i % period == 0 || i % period == 1));
            u64::from(hit)
        })
        .collect();
    Ok(BettiTable {
        values,
        reliable_up_to: max_reported,
    })
}

/// Lower bounds on `sum_{i=1}^{k} b_i` for free loop spaces of spheres and
/// their products, as stated for the asymptotic growth argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PartialSumBound {
    /// `2 floor(k / (n - 1))`, `n` odd.
    OddSphere(usize),
    /// `k / (2(n - 1))`, `n` even.
    EvenSphere(usize),
    /// `k^2 / ((l - 1)^2 (n - 1)^2)`.
    SphereProduct(usize, usize),
}

impl PartialSumBound {
    pub fn value(&self, k: usize) -> f64 {
        match *self {
            PartialSumBound::OddSphere(n) => (2 * (k / (n - 1))) as f64,
            PartialSumBound::EvenSphere(n) => k as f64 / (2.0 * (n - 1) as f64),
            PartialSumBound::SphereProduct(l, n) => {
                let d = ((l - 1) * (n - 1)) as f64;
                (k * k) as f64 / (d * d)
            }
        }
    }

    /// Degrees `1 <= k <= reliable_up_to` at which the partial sums of
    /// `table` fall below the bound.
    pub fn violations(&self, table: &BettiTable) -> Vec<usize> {
        let sums = table.partial_sums();
        (1..=table.reliable_up_to)
            .filter(|&k| (sums[k] as f64) < self.value(k))
            .collect()
    }
}
