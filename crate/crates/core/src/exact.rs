//! Exact rank of rational matrices by fraction-free (Bareiss) elimination.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// Clear denominators row by row so every entry is an integer.
fn integer_rows(rows: &[Vec<BigRational>]) -> Vec<Vec<BigInt>> {
    rows.iter()
        .map(|row| {
            let lcm = row
                .iter()
                .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
            row.iter()
                .map(|c| c.numer() * (&lcm / c.denom()))
                .collect()
        })
        .collect()
}

/// Rank of a dense integer matrix (row-major) using Bareiss elimination.
///
/// Every intermediate entry is a minor of the input, so the division by the
/// previous pivot is exact.
pub fn rank_integer(mut m: Vec<Vec<BigInt>>) -> usize {
    let rows = m.len();
    if rows == 0 {
        return 0;
    }
    let cols = m[0].len();
    let mut rank = 0;
    let mut prev_pivot = BigInt::one();
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(p) = (rank..rows).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, p);
        let pivot = m[rank][col].clone();
        for r in rank + 1..rows {
            let factor = m[r][col].clone();
            for c in col + 1..cols {
                let v = &pivot * &m[r][c] - &factor * &m[rank][c];
                m[r][c] = v / &prev_pivot;
            }
            m[r][col] = BigInt::zero();
        }
        // columns left of `col` in rows below are already zero
        prev_pivot = pivot;
        rank += 1;
    }
    rank
}

/// Rank of a rational matrix given as rows.
pub fn rank(rows: &[Vec<BigRational>]) -> usize {
    if rows.is_empty() || rows[0].is_empty() {
        return 0;
    }
    rank_integer(integer_rows(rows))
}
