//! Maslov-type indices of Lagrangian and symplectic paths.
//!
//! Conventions: coordinates `(q, p)` on `R^{2m}`, `ω₀ = dp ∧ dq`, and
//! `J₀ = [[0, I], [-I, 0]]`. As a bilinear form `ω₀(v, w) = vᵀ Ω w` with
//! `Ω = -J₀`. Symplectic matrices satisfy `ΨᵀJ₀Ψ = J₀`.
//!
//! The Robbin–Salamon index of a Lagrangian path `Λ` relative to `V` is
//!
//! ```text
//! μ(Λ, V) = ½ sign Γ(0) + Σ_{0<t<τ} sign Γ(t) + ½ sign Γ(τ)
//! ```
//!
//! summed over crossings `Λ(t) ∩ V ≠ 0`, where `Γ(t)` is the crossing form.
//! Crossings are located numerically: a coarse scan of the smallest singular
//! value of the stacked orthonormal frames, then golden-section refinement.
//! Singular crossing forms are reported as errors rather than perturbed away.
//! The index of a symplectic path is the index of its graph in
//! `(R^{2m} ⊕ R^{2m}, (-ω₀) ⊕ ω₀)` relative to the diagonal.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MaslovError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("frame is not Lagrangian (|FᵀΩF| = {0:.3e})")]
    NotLagrangian(f64),
    #[error("frame does not have full column rank")]
    RankDeficient,
    #[error("sample {index} is not symplectic (|ΨᵀJ₀Ψ - J₀| = {defect:.3e})")]
    NotSymplectic { index: usize, defect: f64 },
    #[error("sample times must be strictly increasing (sample {0})")]
    TimesNotIncreasing(usize),
    #[error("path needs at least two samples")]
    TooFewSamples,
    #[error("intersection dimension ambiguous: singular value {0:.3e} inside the threshold band; refine the tolerance")]
    AmbiguousRank(f64),
    #[error("no room for a finite-difference stencil at t = {0}")]
    NoStencil(f64),
    #[error("non-regular crossing at t = {t:.9}: crossing form eigenvalue {eigenvalue:.3e} is numerically zero")]
    NonRegularCrossing { t: f64, eigenvalue: f64 },
    #[error("time {0} outside the path domain")]
    OutOfDomain(f64),
    #[error("sampling too coarse: rotation angle jumps by {0:.3} rad (>= π/2) between samples")]
    CoarseSampling(f64),
    #[error("iteration count must be >= 1")]
    BadIterate,
    #[error("malformed path json: {0}")]
    Json(String),
}

pub type Result<T> = std::result::Result<T, MaslovError>;

/// `J₀ = [[0, I], [-I, 0]]` on `R^{2m}`.
pub fn j0(m: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * m, 2 * m);
    for i in 0..m {
        j[(i, m + i)] = 1.0;
        j[(m + i, i)] = -1.0;
    }
    j
}

/// Matrix of the standard form `ω₀ = dp ∧ dq`.
pub fn omega0(m: usize) -> DMatrix<f64> {
    -j0(m)
}

/// Matrix of `(-ω₀) ⊕ ω₀` on `R^{2m} ⊕ R^{2m}`.
pub fn twisted_omega(m: usize) -> DMatrix<f64> {
    let mut o = DMatrix::zeros(4 * m, 4 * m);
    o.view_mut((0, 0), (2 * m, 2 * m)).copy_from(&j0(m));
    o.view_mut((2 * m, 2 * m), (2 * m, 2 * m)).copy_from(&omega0(m));
    o
}

/// `exp(θ J₀)` on `R^{2m}`: simultaneous rotation by `θ` in every `(q_i, p_i)` plane.
pub fn rotation(m: usize, theta: f64) -> DMatrix<f64> {
    let (s, c) = theta.sin_cos();
    let mut r = DMatrix::zeros(2 * m, 2 * m);
    for i in 0..m {
        r[(i, i)] = c;
        r[(m + i, m + i)] = c;
        r[(i, m + i)] = s;
        r[(m + i, i)] = -s;
    }
    r
}

/// Matrix exponential by scaling and squaring with a Taylor core.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let norm = a.abs().row_sum().max();
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let scaled = a / 2f64.powi(squarings as i32);
    let n = a.nrows();
    let mut term = DMatrix::identity(n, n);
    let mut sum = DMatrix::identity(n, n);
    for k in 1..=20 {
        term = &term * &scaled / k as f64;
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

pub fn symplectic_defect(psi: &DMatrix<f64>) -> f64 {
    let m = psi.nrows() / 2;
    let j = j0(m);
    (psi.transpose() * &j * psi - &j).norm()
}

/// Exact half-integer, stored as its numerator over 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HalfInteger(pub i64);

impl HalfInteger {
    pub fn from_integer(n: i64) -> Self {
        HalfInteger(2 * n)
    }

    pub fn is_integer(&self) -> bool {
        self.0 % 2 == 0
    }

    pub fn as_f64(&self) -> f64 {
        self.0 as f64 / 2.0
    }
}

impl std::ops::Add for HalfInteger {
    type Output = HalfInteger;
    fn add(self, rhs: Self) -> Self {
        HalfInteger(self.0 + rhs.0)
    }
}

impl std::ops::Neg for HalfInteger {
    type Output = HalfInteger;
    fn neg(self) -> Self {
        HalfInteger(-self.0)
    }
}

impl fmt::Display for HalfInteger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}", self.as_f64())
        }
    }
}

fn orthonormal_columns(a: &DMatrix<f64>) -> DMatrix<f64> {
    a.clone().qr().q()
}

/// Lagrangian subspace of `(R^{2n}, Ω)` given by a `2n × n` frame.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianFrame {
    frame: DMatrix<f64>,
    omega: DMatrix<f64>,
}

/// Tolerance on `|FᵀΩF|` for frames after column orthonormalization.
pub const LAGRANGIAN_TOL: f64 = 1e-6;

impl LagrangianFrame {
    /// Frame in `R^{2m}` with the standard form.
    pub fn new(frame: DMatrix<f64>) -> Result<Self> {
        let m = frame.nrows() / 2;
        Self::with_form(frame, omega0(m))
    }

    pub fn with_form(frame: DMatrix<f64>, omega: DMatrix<f64>) -> Result<Self> {
        let rows = frame.nrows();
        if rows % 2 != 0 || frame.ncols() * 2 != rows || omega.shape() != (rows, rows) {
            return Err(MaslovError::Dimension(format!(
                "frame {:?} with form {:?}",
                frame.shape(),
                omega.shape()
            )));
        }
        let sv = frame.clone().svd(false, false).singular_values;
        if sv.min() <= 1e-10 * sv.max().max(1.0) {
            return Err(MaslovError::RankDeficient);
        }
        let q = orthonormal_columns(&frame);
        let defect = (q.transpose() * &omega * &q).norm();
        if defect > LAGRANGIAN_TOL {
            return Err(MaslovError::NotLagrangian(defect));
        }
        Ok(Self { frame, omega })
    }

    pub fn horizontal(m: usize) -> Self {
        let mut f = DMatrix::zeros(2 * m, m);
        f.view_mut((0, 0), (m, m)).fill_with_identity();
        Self::new(f).expect("horizontal subspace is Lagrangian")
    }

    pub fn vertical(m: usize) -> Self {
        let mut f = DMatrix::zeros(2 * m, m);
        f.view_mut((m, 0), (m, m)).fill_with_identity();
        Self::new(f).expect("vertical subspace is Lagrangian")
    }

    /// Graph `{(v, Av)}` of a linear map, Lagrangian in `(-ω₀) ⊕ ω₀` when `A` is symplectic.
    pub fn graph(a: &DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        let m = n / 2;
        let mut f = DMatrix::zeros(2 * n, n);
        f.view_mut((0, 0), (n, n)).fill_with_identity();
        f.view_mut((n, 0), (n, n)).copy_from(a);
        Self::with_form(f, twisted_omega(m))
    }

    /// Diagonal of `R^{2m} ⊕ R^{2m}`.
    pub fn diagonal(m: usize) -> Self {
        Self::graph(&DMatrix::identity(2 * m, 2 * m)).expect("diagonal is Lagrangian")
    }

    pub fn frame(&self) -> &DMatrix<f64> {
        &self.frame
    }

    pub fn omega(&self) -> &DMatrix<f64> {
        &self.omega
    }

    pub fn dim(&self) -> usize {
        self.frame.ncols()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "dim": self.frame.nrows(),
            "frame": matrix_to_rows(&self.frame),
        })
    }

    /// `{dim, frame: [[..], ..]}` or `{dim, frame: [row-major floats]}`.
    pub fn from_json(v: &Value) -> Result<Self> {
        let dim = v["dim"]
            .as_u64()
            .ok_or_else(|| MaslovError::Json("dim missing".into()))? as usize;
        let frame = matrix_from_json(&v["frame"], dim, dim / 2)?;
        Self::new(frame)
    }
}

/// Numerical-rank thresholds for intersection dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankTolerance {
    /// Singular values below this count as zero.
    pub zero: f64,
    /// Singular values above this count as nonzero; in between is an error.
    pub nonzero: f64,
}

impl Default for RankTolerance {
    fn default() -> Self {
        Self {
            zero: 1e-8,
            nonzero: 1e-5,
        }
    }
}

fn stacked_singular_values(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DVector<f64> {
    let qa = orthonormal_columns(a);
    let qb = orthonormal_columns(b);
    let mut s = DMatrix::zeros(qa.nrows(), qa.ncols() + qb.ncols());
    s.view_mut((0, 0), qa.shape()).copy_from(&qa);
    s.view_mut((0, qa.ncols()), qb.shape()).copy_from(&qb);
    s.svd(false, false).singular_values
}

pub fn intersection_dim(l1: &LagrangianFrame, l2: &LagrangianFrame) -> Result<usize> {
    intersection_dim_with(l1, l2, RankTolerance::default())
}

pub fn intersection_dim_with(
    l1: &LagrangianFrame,
    l2: &LagrangianFrame,
    tol: RankTolerance,
) -> Result<usize> {
    if l1.frame.shape() != l2.frame.shape() {
        return Err(MaslovError::Dimension("frames of different size".into()));
    }
    let sv = stacked_singular_values(&l1.frame, &l2.frame);
    let mut zeros = 0;
    for &s in sv.iter() {
        if s < tol.zero {
            zeros += 1;
        } else if s <= tol.nonzero {
            return Err(MaslovError::AmbiguousRank(s));
        }
    }
    Ok(zeros)
}

/// A smooth path of Lagrangian subspaces.
pub trait LagrangianPath {
    /// Matrix of the ambient symplectic form; must satisfy `Ω² = -I`.
    fn omega(&self) -> DMatrix<f64>;
    fn span(&self) -> (f64, f64);
    /// Frame (not necessarily orthonormal) of `Λ(t)`.
    fn frame_at(&self, t: f64) -> DMatrix<f64>;
    /// Times for the coarse crossing scan.
    fn scan_times(&self) -> Vec<f64> {
        let (a, b) = self.span();
        let n = 2000;
        (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
    }
}

/// Lagrangian path defined by a closure.
pub struct FnLagrangianPath<F: Fn(f64) -> DMatrix<f64>> {
    pub f: F,
    pub span: (f64, f64),
    pub omega: DMatrix<f64>,
    pub scan_points: usize,
}

impl<F: Fn(f64) -> DMatrix<f64>> FnLagrangianPath<F> {
    pub fn new(f: F, span: (f64, f64), omega: DMatrix<f64>) -> Self {
        Self {
            f,
            span,
            omega,
            scan_points: 2000,
        }
    }
}

impl<F: Fn(f64) -> DMatrix<f64>> LagrangianPath for FnLagrangianPath<F> {
    fn omega(&self) -> DMatrix<f64> {
        self.omega.clone()
    }
    fn span(&self) -> (f64, f64) {
        self.span
    }
    fn frame_at(&self, t: f64) -> DMatrix<f64> {
        (self.f)(t)
    }
    fn scan_times(&self) -> Vec<f64> {
        let (a, b) = self.span;
        let n = self.scan_points.max(2);
        (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
    }
}

/// Lagrangian path given by frames at sample times, linearly interpolated.
#[derive(Debug, Clone)]
pub struct SampledLagrangianPath {
    times: Vec<f64>,
    frames: Vec<DMatrix<f64>>,
    omega: DMatrix<f64>,
}

impl SampledLagrangianPath {
    pub fn new(samples: Vec<(f64, DMatrix<f64>)>, omega: DMatrix<f64>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(MaslovError::TooFewSamples);
        }
        for i in 1..samples.len() {
            if samples[i].0 <= samples[i - 1].0 {
                return Err(MaslovError::TimesNotIncreasing(i));
            }
        }
        let shape = samples[0].1.shape();
        if samples.iter().any(|s| s.1.shape() != shape) || shape.0 != 2 * shape.1 {
            return Err(MaslovError::Dimension("inconsistent frame shapes".into()));
        }
        let (times, frames) = samples.into_iter().unzip();
        Ok(Self {
            times,
            frames,
            omega,
        })
    }

    /// `{dim, samples: [{t, matrix: row-major floats}]}` with `2m × m` frames.
    pub fn from_json(v: &Value) -> Result<Self> {
        let (dim, samples) = parse_samples(v)?;
        let samples = samples
            .into_iter()
            .map(|(t, data)| Ok((t, matrix_from_json(&data, dim, dim / 2)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(samples, omega0(dim / 2))
    }
}

fn interpolate(times: &[f64], mats: &[DMatrix<f64>], t: f64) -> DMatrix<f64> {
    let n = times.len();
    if t <= times[0] {
        return mats[0].clone();
    }
    if t >= times[n - 1] {
        return mats[n - 1].clone();
    }
    let i = times.partition_point(|&x| x <= t) - 1;
    let s = (t - times[i]) / (times[i + 1] - times[i]);
    &mats[i] * (1.0 - s) + &mats[i + 1] * s
}

impl LagrangianPath for SampledLagrangianPath {
    fn omega(&self) -> DMatrix<f64> {
        self.omega.clone()
    }
    fn span(&self) -> (f64, f64) {
        (self.times[0], *self.times.last().unwrap())
    }
    fn frame_at(&self, t: f64) -> DMatrix<f64> {
        interpolate(&self.times, &self.frames, t)
    }
    fn scan_times(&self) -> Vec<f64> {
        refine_grid(&self.times, 2000)
    }
}

/// Sample times, subdivided so the grid has at least `min_points` points.
fn refine_grid(times: &[f64], min_points: usize) -> Vec<f64> {
    let per = (min_points / times.len().max(1)).max(1);
    let mut out = Vec::with_capacity(times.len() * per);
    for w in times.windows(2) {
        for k in 0..per {
            out.push(w[0] + (w[1] - w[0]) * k as f64 / per as f64);
        }
    }
    out.push(*times.last().unwrap());
    out
}

/// A path in `Sp(2m)`.
pub trait SymplecticCurve {
    fn half_dim(&self) -> usize;
    fn span(&self) -> (f64, f64);
    fn at(&self, t: f64) -> DMatrix<f64>;
    fn scan_times(&self) -> Vec<f64> {
        let (a, b) = self.span();
        let n = 2000;
        (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
    }
    /// Times at which the path is known exactly.
    fn sample_times(&self) -> Vec<f64> {
        self.scan_times()
    }
}

/// Sampled symplectic path; values between samples are linearly interpolated.
#[derive(Debug, Clone)]
pub struct SymplecticPath {
    times: Vec<f64>,
    mats: Vec<DMatrix<f64>>,
    tolerance: f64,
}

/// Default tolerance on `|ΨᵀJ₀Ψ - J₀|` for samples.
pub const SYMPLECTIC_TOL: f64 = 1e-8;

impl SymplecticPath {
    pub fn new(samples: Vec<(f64, DMatrix<f64>)>, tolerance: f64) -> Result<Self> {
        if samples.len() < 2 {
            return Err(MaslovError::TooFewSamples);
        }
        let n = samples[0].1.nrows();
        if n % 2 != 0 || n == 0 {
            return Err(MaslovError::Dimension(format!("matrix size {n} is not even")));
        }
        for (i, (t, m)) in samples.iter().enumerate() {
            if m.shape() != (n, n) {
                return Err(MaslovError::Dimension(format!("sample {i} has shape {:?}", m.shape())));
            }
            if i > 0 && *t <= samples[i - 1].0 {
                return Err(MaslovError::TimesNotIncreasing(i));
            }
            let defect = symplectic_defect(m);
            if defect > tolerance {
                return Err(MaslovError::NotSymplectic { index: i, defect });
            }
        }
        let (times, mats) = samples.into_iter().unzip();
        Ok(Self {
            times,
            mats,
            tolerance,
        })
    }

    /// Sample `f` at `n + 1` equally spaced times on `[0, tau]`.
    pub fn from_fn(f: impl Fn(f64) -> DMatrix<f64>, tau: f64, n: usize) -> Result<Self> {
        let samples = (0..=n)
            .map(|i| {
                let t = tau * i as f64 / n as f64;
                (t, f(t))
            })
            .collect();
        Self::new(samples, SYMPLECTIC_TOL)
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, &DMatrix<f64>)> {
        self.times.iter().copied().zip(self.mats.iter())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn end(&self) -> &DMatrix<f64> {
        self.mats.last().unwrap()
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn starts_at_identity(&self) -> bool {
        let n = self.mats[0].nrows();
        self.times[0] == 0.0 && (&self.mats[0] - DMatrix::identity(n, n)).norm() <= self.tolerance
    }

    /// Reverse the direction of traversal (`t ↦ τ - t`).
    pub fn reversed(&self) -> Self {
        let end = *self.times.last().unwrap();
        let start = self.times[0];
        let samples = self
            .times
            .iter()
            .rev()
            .zip(self.mats.iter().rev())
            .map(|(t, m)| (start + end - t, m.clone()))
            .collect();
        Self::new(samples, self.tolerance).expect("reversal keeps validity")
    }

    pub fn to_json(&self) -> Value {
        let samples: Vec<Value> = self
            .samples()
            .map(|(t, m)| json!({"t": t, "matrix": row_major(m)}))
            .collect();
        json!({"dim": self.mats[0].nrows(), "samples": samples})
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let (dim, samples) = parse_samples(v)?;
        let samples = samples
            .into_iter()
            .map(|(t, data)| Ok((t, matrix_from_json(&data, dim, dim)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(samples, 1e-6)
    }
}

impl SymplecticCurve for SymplecticPath {
    fn half_dim(&self) -> usize {
        self.mats[0].nrows() / 2
    }
    fn span(&self) -> (f64, f64) {
        (self.times[0], *self.times.last().unwrap())
    }
    fn at(&self, t: f64) -> DMatrix<f64> {
        interpolate(&self.times, &self.mats, t)
    }
    fn scan_times(&self) -> Vec<f64> {
        refine_grid(&self.times, 2000)
    }
    fn sample_times(&self) -> Vec<f64> {
        self.times.clone()
    }
}

/// Symplectic path given by a closure.
pub struct FnSymplecticPath<F: Fn(f64) -> DMatrix<f64>> {
    pub f: F,
    pub tau: f64,
    pub m: usize,
}

impl<F: Fn(f64) -> DMatrix<f64>> SymplecticCurve for FnSymplecticPath<F> {
    fn half_dim(&self) -> usize {
        self.m
    }
    fn span(&self) -> (f64, f64) {
        (0.0, self.tau)
    }
    fn at(&self, t: f64) -> DMatrix<f64> {
        (self.f)(t)
    }
}

/// Graph path `t ↦ gr Ψ(t)` in `(R^{2m} ⊕ R^{2m}, (-ω₀) ⊕ ω₀)`.
pub struct GraphPath<'a, C: SymplecticCurve + ?Sized>(pub &'a C);

impl<C: SymplecticCurve + ?Sized> LagrangianPath for GraphPath<'_, C> {
    fn omega(&self) -> DMatrix<f64> {
        twisted_omega(self.0.half_dim())
    }
    fn span(&self) -> (f64, f64) {
        self.0.span()
    }
    fn frame_at(&self, t: f64) -> DMatrix<f64> {
        let n = 2 * self.0.half_dim();
        let mut f = DMatrix::zeros(2 * n, n);
        f.view_mut((0, 0), (n, n)).fill_with_identity();
        f.view_mut((n, 0), (n, n)).copy_from(&self.0.at(t));
        f
    }
    fn scan_times(&self) -> Vec<f64> {
        self.0.scan_times()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Start,
    Interior,
    End,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossingRecord {
    pub t: f64,
    pub kernel_dim: usize,
    pub signature: i64,
    pub boundary: Boundary,
}

/// Tuning of the crossing search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingSettings {
    /// Time tolerance of the golden-section refinement.
    pub time_tol: f64,
    /// Smallest singular value below which `Λ(t) ∩ V ≠ 0`.
    pub crossing_tol: f64,
    /// Grid points with smallest singular value above this are not refined.
    pub scan_cutoff: f64,
    /// Relative threshold for numerically zero crossing-form eigenvalues.
    pub regularity_tol: f64,
    /// Absolute threshold, per unit of path span, for the same test.
    pub absolute_tol: f64,
    /// Finite-difference step relative to the path span.
    pub relative_step: f64,
}

impl Default for CrossingSettings {
    fn default() -> Self {
        Self {
            time_tol: 1e-8,
            crossing_tol: 1e-6,
            scan_cutoff: 0.25,
            regularity_tol: 1e-7,
            absolute_tol: 1e-6,
            relative_step: 1e-5,
        }
    }
}

fn min_singular<P: LagrangianPath + ?Sized>(path: &P, v: &DMatrix<f64>, t: f64) -> f64 {
    stacked_singular_values(&path.frame_at(t), v).min()
}

/// Orthonormal basis (columns) of `Λ(t) ∩ V`.
fn intersection_basis<P: LagrangianPath + ?Sized>(
    path: &P,
    v: &DMatrix<f64>,
    t: f64,
    tol: f64,
) -> DMatrix<f64> {
    let q = orthonormal_columns(&path.frame_at(t));
    let qv = orthonormal_columns(v);
    let n = q.ncols();
    let mut s = DMatrix::zeros(q.nrows(), 2 * n);
    s.view_mut((0, 0), q.shape()).copy_from(&q);
    s.view_mut((0, n), qv.shape()).copy_from(&qv);
    let svd = s.svd(false, true);
    let vt = svd.v_t.expect("requested v_t");
    let mut cols = Vec::new();
    for (i, &sigma) in svd.singular_values.iter().enumerate() {
        if sigma < tol {
            let a = vt.row(i).columns(0, n).transpose();
            let vec = &q * a;
            cols.push(vec.normalize());
        }
    }
    if cols.is_empty() {
        return DMatrix::zeros(q.nrows(), 0);
    }
    orthonormal_columns(&DMatrix::from_columns(&cols))
}

/// Lagrangian complement `J Λ(t)` with `J = -Ω`.
fn standard_complement(omega: &DMatrix<f64>, frame: &DMatrix<f64>) -> DMatrix<f64> {
    -(omega * orthonormal_columns(frame))
}

/// `ω(v_i, w_j(t))` where `v_j + w_j(t) ∈ Λ(t)`, `w_j(t) ∈ W`.
fn pairing_at<P: LagrangianPath + ?Sized>(
    path: &P,
    basis: &DMatrix<f64>,
    w: &DMatrix<f64>,
    omega: &DMatrix<f64>,
    t: f64,
) -> Result<DMatrix<f64>> {
    let f = path.frame_at(t);
    let n = f.ncols();
    let mut sys = DMatrix::zeros(f.nrows(), 2 * n);
    sys.view_mut((0, 0), f.shape()).copy_from(&f);
    sys.view_mut((0, n), w.shape()).copy_from(&(-w));
    let lu = sys.lu();
    let k = basis.ncols();
    let mut out = DMatrix::zeros(k, k);
    let mut ws = Vec::with_capacity(k);
    for j in 0..k {
        let rhs = basis.column(j).into_owned();
        let sol = lu
            .solve(&rhs)
            .ok_or_else(|| MaslovError::Dimension("complement is not transverse".into()))?;
        let b = sol.rows(n, n).into_owned();
        ws.push(w * b);
    }
    for i in 0..k {
        for j in 0..k {
            out[(i, j)] = (basis.column(i).transpose() * omega * &ws[j])[(0, 0)];
        }
    }
    Ok(out)
}

/// Crossing form at `t0` using the complement `W`; returns the symmetric
/// matrix of `Q_{t0}` on an orthonormal basis of `Λ(t0) ∩ V`.
pub fn crossing_form_with_complement<P: LagrangianPath + ?Sized>(
    path: &P,
    v: &LagrangianFrame,
    t0: f64,
    w: &DMatrix<f64>,
    settings: &CrossingSettings,
) -> Result<DMatrix<f64>> {
    let (a, b) = path.span();
    if t0 < a || t0 > b {
        return Err(MaslovError::OutOfDomain(t0));
    }
    let omega = path.omega();
    let basis = intersection_basis(path, v.frame(), t0, settings.crossing_tol);
    let k = basis.ncols();
    if k == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let h = settings.relative_step * (b - a);
    let f = |t: f64| pairing_at(path, &basis, w, &omega, t);
    let deriv = if t0 - h >= a && t0 + h <= b {
        (f(t0 + h)? - f(t0 - h)?) / (2.0 * h)
    } else if t0 + 2.0 * h <= b {
        (f(t0)? * -3.0 + f(t0 + h)? * 4.0 - f(t0 + 2.0 * h)?) / (2.0 * h)
    } else if t0 - 2.0 * h >= a {
        (f(t0)? * 3.0 - f(t0 - h)? * 4.0 + f(t0 - 2.0 * h)?) / (2.0 * h)
    } else {
        return Err(MaslovError::NoStencil(t0));
    };
    Ok((&deriv + deriv.transpose()) * 0.5)
}

/// Crossing form at `t0` with the complement `J Λ(t0)`.
pub fn crossing_form<P: LagrangianPath + ?Sized>(
    path: &P,
    v: &LagrangianFrame,
    t0: f64,
) -> Result<DMatrix<f64>> {
    let w = standard_complement(&path.omega(), &path.frame_at(t0));
    crossing_form_with_complement(path, v, t0, &w, &CrossingSettings::default())
}

fn signature_of(form: &DMatrix<f64>, t: f64, rel_tol: f64, abs_tol: f64) -> Result<i64> {
    let eig = form.clone().symmetric_eigen().eigenvalues;
    let scale = eig.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut sig = 0;
    for &l in eig.iter() {
        if l.abs() <= abs_tol || l.abs() < rel_tol * scale {
            return Err(MaslovError::NonRegularCrossing { t, eigenvalue: l });
        }
        sig += if l > 0.0 { 1 } else { -1 };
    }
    Ok(sig)
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let fa = f(a);
    let fb = f(b);
    // the minimum of a V-shaped profile may sit on the bracket edge
    [(a, fa), (b, fb), (c, fc), (d, fd)]
        .into_iter()
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .unwrap()
}

/// All crossings of `Λ` with `V`, in time order.
pub fn crossings<P: LagrangianPath + ?Sized>(
    path: &P,
    v: &LagrangianFrame,
    settings: &CrossingSettings,
) -> Result<Vec<CrossingRecord>> {
    let (a, b) = path.span();
    let omega = path.omega();
    if omega.shape() != v.omega().shape() || path.frame_at(a).shape() != v.frame().shape() {
        return Err(MaslovError::Dimension("path and V live in different spaces".into()));
    }
    let grid = path.scan_times();
    let sig: Vec<f64> = grid.iter().map(|&t| min_singular(path, v.frame(), t)).collect();
    let n = grid.len();
    let mut times: Vec<f64> = Vec::new();
    let edge = 10.0 * settings.time_tol;
    for i in 0..n {
        let left = if i > 0 { sig[i - 1] } else { f64::INFINITY };
        let right = if i + 1 < n { sig[i + 1] } else { f64::INFINITY };
        if sig[i] > settings.scan_cutoff || sig[i] > left || sig[i] > right {
            continue;
        }
        // plateau: only the first point of a run of equal values
        if i > 0 && sig[i] == left {
            continue;
        }
        let lo = grid[i.saturating_sub(1)];
        let hi = grid[(i + 1).min(n - 1)];
        let (t, s) = golden_min(|t| min_singular(path, v.frame(), t), lo, hi, settings.time_tol);
        let (t, s) = if (t - a).abs() < edge {
            (a, min_singular(path, v.frame(), a))
        } else if (b - t).abs() < edge {
            (b, min_singular(path, v.frame(), b))
        } else {
            (t, s)
        };
        if s < settings.crossing_tol && !times.iter().any(|&u| (u - t).abs() < 1e3 * settings.time_tol) {
            times.push(t);
        }
    }
    times.sort_by(f64::total_cmp);
    let mut out = Vec::with_capacity(times.len());
    for t in times {
        let w = standard_complement(&omega, &path.frame_at(t));
        let form = crossing_form_with_complement(path, v, t, &w, settings)?;
        let abs_tol = settings.absolute_tol / (b - a);
        let signature = signature_of(&form, t, settings.regularity_tol, abs_tol)?;
        let boundary = if t == a {
            Boundary::Start
        } else if t == b {
            Boundary::End
        } else {
            Boundary::Interior
        };
        out.push(CrossingRecord {
            t,
            kernel_dim: form.nrows(),
            signature,
            boundary,
        });
    }
    Ok(out)
}

fn index_from_crossings(records: &[CrossingRecord]) -> HalfInteger {
    HalfInteger(
        records
            .iter()
            .map(|c| match c.boundary {
                Boundary::Interior => 2 * c.signature,
                _ => c.signature,
            })
            .sum(),
    )
}

/// Robbin–Salamon index of a Lagrangian path relative to `V`.
pub fn rs_index<P: LagrangianPath + ?Sized>(path: &P, v: &LagrangianFrame) -> Result<HalfInteger> {
    let records = crossings(path, v, &CrossingSettings::default())?;
    Ok(index_from_crossings(&records))
}

/// Index of a symplectic path: the Robbin–Salamon index of its graph
/// relative to the diagonal. Integer whenever `det(I - Ψ(τ)) ≠ 0`.
pub fn cz_index<C: SymplecticCurve + ?Sized>(path: &C) -> Result<HalfInteger> {
    let diag = LagrangianFrame::diagonal(path.half_dim());
    rs_index(&GraphPath(path), &diag)
}

pub fn cz_crossings<C: SymplecticCurve + ?Sized>(path: &C) -> Result<Vec<CrossingRecord>> {
    let diag = LagrangianFrame::diagonal(path.half_dim());
    crossings(&GraphPath(path), &diag, &CrossingSettings::default())
}

/// `|det(I - Ψ)|`, the nondegeneracy test for the endpoint.
pub fn endpoint_degeneracy(psi: &DMatrix<f64>) -> f64 {
    let n = psi.nrows();
    (DMatrix::identity(n, n) - psi).determinant().abs()
}

/// Argument of `det(A + iB)` for the unitary factor `[[A, B], [-B, A]]` of
/// the polar decomposition of `Ψ`.
pub fn polar_angle(psi: &DMatrix<f64>) -> f64 {
    let m = psi.nrows() / 2;
    let svd = psi.clone().svd(true, true);
    let u = svd.u.unwrap() * svd.v_t.unwrap();
    let c = DMatrix::from_fn(m, m, |i, j| Complex64::new(u[(i, j)], u[(i, m + j)]));
    let det = c.determinant();
    det.arg()
}

/// Winding of the polar unitary determinant, `(α(τ) - α(0)) / π`.
pub fn delta_winding<C: SymplecticCurve + ?Sized>(path: &C) -> Result<f64> {
    let times = path.sample_times();
    let mut prev = polar_angle(&path.at(times[0]));
    let start = prev;
    let mut total = start;
    for &t in &times[1..] {
        let a = polar_angle(&path.at(t));
        let mut jump = a - prev;
        while jump > std::f64::consts::PI {
            jump -= 2.0 * std::f64::consts::PI;
        }
        while jump <= -std::f64::consts::PI {
            jump += 2.0 * std::f64::consts::PI;
        }
        if jump.abs() >= std::f64::consts::FRAC_PI_2 {
            return Err(MaslovError::CoarseSampling(jump.abs()));
        }
        total += jump;
        prev = a;
    }
    Ok((total - start) / std::f64::consts::PI)
}

/// `k`-fold extension on `[0, kτ]` with `Ψ(jτ + t) = Ψ(t) Ψ(τ)^j`.
pub fn iterate_path(path: &SymplecticPath, k: usize) -> Result<SymplecticPath> {
    if k == 0 {
        return Err(MaslovError::BadIterate);
    }
    let (t0, tau) = path.span();
    let period = tau - t0;
    let end = path.end().clone();
    let n = end.nrows();
    let mut power = DMatrix::identity(n, n);
    let mut samples = Vec::with_capacity(path.times.len() * k);
    for j in 0..k {
        for (i, (t, m)) in path.samples().enumerate() {
            if j > 0 && i == 0 {
                continue;
            }
            samples.push((t + j as f64 * period, m * &power));
        }
        power = &power * &end;
    }
    // products accumulate rounding, so loosen the check proportionally
    SymplecticPath::new(samples, path.tolerance * (k as f64 + 1.0) * 10.0)
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let mut v = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            v.push(m[(i, j)]);
        }
    }
    v
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn matrix_from_json(v: &Value, rows: usize, cols: usize) -> Result<DMatrix<f64>> {
    let bad = || MaslovError::Json(format!("expected a {rows}x{cols} matrix"));
    let arr = v.as_array().ok_or_else(bad)?;
    let flat: Vec<f64> = if arr.first().map_or(false, Value::is_array) {
        arr.iter()
            .flat_map(|r| r.as_array().cloned().unwrap_or_default())
            .map(|x| x.as_f64().ok_or_else(bad))
            .collect::<Result<_>>()?
    } else {
        arr.iter().map(|x| x.as_f64().ok_or_else(bad)).collect::<Result<_>>()?
    };
    if flat.len() != rows * cols {
        return Err(bad());
    }
    Ok(DMatrix::from_row_slice(rows, cols, &flat))
}

fn parse_samples(v: &Value) -> Result<(usize, Vec<(f64, Value)>)> {
    let dim = v["dim"]
        .as_u64()
        .ok_or_else(|| MaslovError::Json("dim missing".into()))? as usize;
    if dim == 0 || dim % 2 != 0 {
        return Err(MaslovError::Json(format!("dim {dim} must be positive and even")));
    }
    let samples = v["samples"]
        .as_array()
        .ok_or_else(|| MaslovError::Json("samples missing".into()))?
        .iter()
        .map(|s| {
            let t = s["t"].as_f64().ok_or_else(|| MaslovError::Json("sample t".into()))?;
            Ok((t, s["matrix"].clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((dim, samples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rot_path(theta: f64, tau: f64, n: usize) -> SymplecticPath {
        SymplecticPath::from_fn(|t| rotation(1, theta * t), tau, n).unwrap()
    }

    #[test]
    fn conventions() {
        let j = j0(2);
        assert_eq!(&j * &j, -DMatrix::<f64>::identity(4, 4));
        assert!(symplectic_defect(&rotation(2, 0.3)) < 1e-14);
        let e = expm(&(j0(1) * 0.7));
        assert!((e - rotation(1, 0.7)).norm() < 1e-12);
    }

    #[test]
    fn intersection_dims() {
        let h = LagrangianFrame::horizontal(2);
        let v = LagrangianFrame::vertical(2);
        assert_eq!(intersection_dim(&h, &h).unwrap(), 2);
        assert_eq!(intersection_dim(&h, &v).unwrap(), 0);
        // graph of rotation by π/2 against the diagonal in R^2 ⊕ R^2
        let g = LagrangianFrame::graph(&rotation(1, PI / 2.0)).unwrap();
        assert_eq!(intersection_dim(&g, &LagrangianFrame::diagonal(1)).unwrap(), 0);
        let g = LagrangianFrame::graph(&rotation(1, 1e-6)).unwrap();
        assert!(matches!(
            intersection_dim(&g, &LagrangianFrame::diagonal(1)),
            Err(MaslovError::AmbiguousRank(_))
        ));
    }

    #[test]
    fn non_lagrangian_rejected() {
        let f = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(LagrangianFrame::new(f), Err(MaslovError::NotLagrangian(_))));
    }

    #[test]
    fn crossing_form_of_rotation_is_positive() {
        let theta = 1.3;
        let path = FnSymplecticPath {
            f: |t: f64| rotation(1, theta * t),
            tau: 1.0,
            m: 1,
        };
        let g = GraphPath(&path);
        let q = crossing_form(&g, &LagrangianFrame::diagonal(1), 0.0).unwrap();
        assert_eq!(q.shape(), (2, 2));
        let eig = q.symmetric_eigen().eigenvalues;
        // ω(v, θJ₀v) = θ|v|² on the diagonal basis (v, v)/√2
        for l in eig.iter() {
            assert!((l - theta / 2.0).abs() < 1e-6, "{l}");
        }
    }

    #[test]
    fn crossing_form_constant_and_reversed() {
        let v = LagrangianFrame::horizontal(1);
        let constant = FnLagrangianPath::new(|_| v.frame().clone(), (0.0, 1.0), omega0(1));
        let q = crossing_form(&constant, &v, 0.5).unwrap();
        assert!(q.norm() < 1e-9);

        // Λ(t) = span(cos t, sin t) in R^2 crosses the horizontal at t = 0
        let fwd = FnLagrangianPath::new(
            |t: f64| DMatrix::from_column_slice(2, 1, &[t.cos(), t.sin()]),
            (-1.0, 1.0),
            omega0(1),
        );
        let bwd = FnLagrangianPath::new(
            |t: f64| DMatrix::from_column_slice(2, 1, &[(-t).cos(), (-t).sin()]),
            (-1.0, 1.0),
            omega0(1),
        );
        let a = crossing_form(&fwd, &v, 0.0).unwrap()[(0, 0)];
        let b = crossing_form(&bwd, &v, 0.0).unwrap()[(0, 0)];
        assert!(a.abs() > 0.1);
        assert!((a + b).abs() < 1e-8);
    }

    #[test]
    fn complement_independence() {
        let path = FnSymplecticPath {
            f: |t: f64| rotation(2, 0.9 * t),
            tau: 1.0,
            m: 2,
        };
        let g = GraphPath(&path);
        let v = LagrangianFrame::diagonal(2);
        let omega = twisted_omega(2);
        let q0 = orthonormal_columns(&g.frame_at(0.0));
        let j = -&omega;
        let s = DMatrix::from_fn(4, 4, |i, k| ((i + 2 * k) as f64 * 0.37).sin() + ((k + 2 * i) as f64 * 0.37).sin());
        let w_alt = &j * &q0 + &q0 * &s;
        let settings = CrossingSettings::default();
        let a = crossing_form(&g, &v, 0.0).unwrap();
        let b = crossing_form_with_complement(&g, &v, 0.0, &w_alt, &settings).unwrap();
        assert!((a - b).norm() < 1e-6);
    }

    #[test]
    fn cz_of_half_and_full_turn() {
        assert_eq!(cz_index(&rot_path(PI, 1.0, 400)).unwrap(), HalfInteger(2));
        assert_eq!(cz_index(&rot_path(2.0 * PI, 1.0, 400)).unwrap(), HalfInteger(4));
        let c = cz_crossings(&rot_path(2.0 * PI, 1.0, 400)).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!((c[0].boundary, c[0].signature), (Boundary::Start, 2));
        assert_eq!((c[1].boundary, c[1].signature), (Boundary::End, 2));
    }

    #[test]
    fn rs_index_of_full_rotation_graph() {
        let path = FnLagrangianPath::new(
            |t: f64| LagrangianFrame::graph(&rotation(1, 2.0 * PI * t)).unwrap().frame().clone(),
            (0.0, 1.0),
            twisted_omega(1),
        );
        assert_eq!(rs_index(&path, &LagrangianFrame::diagonal(1)).unwrap(), HalfInteger(4));
        let constant = FnLagrangianPath::new(
            |_| LagrangianFrame::vertical(1).frame().clone(),
            (0.0, 1.0),
            omega0(1),
        );
        assert_eq!(rs_index(&constant, &LagrangianFrame::horizontal(1)).unwrap(), HalfInteger(0));
    }

    #[test]
    fn reversal_negates() {
        for theta in [0.7 * PI, 2.5 * PI, 3.3 * PI] {
            let p = rot_path(theta, 1.0, 600);
            let a = cz_index(&p).unwrap();
            let b = cz_index(&p.reversed()).unwrap();
            assert_eq!(a, -b, "theta {theta}");
        }
    }

    #[test]
    fn non_regular_crossing_is_an_error() {
        // Λ(t) = span(cos t², sin t²) is tangent to the horizontal at t = 0
        let path = FnLagrangianPath::new(
            |t: f64| DMatrix::from_column_slice(2, 1, &[(t * t).cos(), (t * t).sin()]),
            (-1.0, 1.0),
            omega0(1),
        );
        assert!(matches!(
            rs_index(&path, &LagrangianFrame::horizontal(1)),
            Err(MaslovError::NonRegularCrossing { .. })
        ));
    }

    #[test]
    fn winding_examples() {
        assert!((delta_winding(&rot_path(2.0 * PI, 1.0, 400)).unwrap() - 2.0).abs() < 1e-9);
        let constant = SymplecticPath::from_fn(|_| rotation(1, 0.4), 1.0, 10).unwrap();
        assert!(delta_winding(&constant).unwrap().abs() < 1e-12);
        let hyperbolic = SymplecticPath::from_fn(
            |t| DMatrix::from_diagonal(&DVector::from_vec(vec![t.exp(), (-t).exp()])),
            1.0,
            100,
        )
        .unwrap();
        assert!(delta_winding(&hyperbolic).unwrap().abs() < 1e-12);
        let coarse = rot_path(2.0 * PI, 1.0, 3);
        assert!(matches!(delta_winding(&coarse), Err(MaslovError::CoarseSampling(_))));
    }

    #[test]
    fn iteration() {
        let p = rot_path(2.0 * PI, 1.0, 200);
        assert_eq!(iterate_path(&p, 1).unwrap().times(), p.times());
        for k in 1..=4 {
            let it = iterate_path(&p, k).unwrap();
            assert!((delta_winding(&it).unwrap() - 2.0 * k as f64).abs() < 1e-6);
            let mut pow = DMatrix::identity(2, 2);
            for _ in 0..k {
                pow = &pow * p.end();
            }
            assert!((it.end() - pow).norm() < 1e-9);
        }
        assert!(iterate_path(&p, 0).is_err());
    }

    #[test]
    fn json_round_trip() {
        let p = rot_path(PI, 1.0, 20);
        let back = SymplecticPath::from_json(&p.to_json()).unwrap();
        assert_eq!(back.times(), p.times());
        assert_eq!(cz_index(&back).unwrap(), HalfInteger(2));
        let f = LagrangianFrame::vertical(2);
        assert_eq!(LagrangianFrame::from_json(&f.to_json()).unwrap(), f);
    }

    #[test]
    fn half_integer_display() {
        assert_eq!(HalfInteger(2).to_string(), "1");
        assert_eq!(HalfInteger(-3).to_string(), "-1.5");
    }
}
