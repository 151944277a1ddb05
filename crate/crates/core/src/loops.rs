//! Closed polygonal loops with the energy and length functionals.
//!
//! A loop is `N` points on a uniform parameter grid of `S¹ = R/Z`; point
//! `N - 1` connects back to point `0`. With `Δq_i = q_{i+1} - q_i`,
//!
//! ```text
//! E = ½ N Σ |Δq_i|²,   L = Σ |Δq_i|,
//! ```
//!
//! so `½L² ≤ E` by Cauchy–Schwarz, with equality iff all chords are equal.
//! Periodic coordinates (flat tori, the extra circle of a lift) take values
//! in `[0, 1)` and chords use the shortest representative.

use std::fmt;

use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LoopError {
    #[error("a loop needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("point {index} has dimension {found}, expected {expected}")]
    Dimension { index: usize, expected: usize, found: usize },
    #[error("loop has zero length")]
    ZeroLength,
    #[error("epsilon must lie in (0, 1), got {0}")]
    EpsilonOutOfRange(f64),
    #[error("loops live in different spaces")]
    SpaceMismatch,
    #[error("non-finite coordinate in point {0}")]
    NonFinite(usize),
    #[error("malformed loop json: {0}")]
    Json(String),
}

pub type Result<T> = std::result::Result<T, LoopError>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LoopSpace {
    Euclidean,
    Torus,
    /// `M × S¹` with the circle as the last coordinate.
    ProductCircle(Box<LoopSpace>),
}

impl LoopSpace {
    fn periodic(&self, dim: usize, coord: usize) -> bool {
        match self {
            LoopSpace::Euclidean => false,
            LoopSpace::Torus => true,
            LoopSpace::ProductCircle(base) => coord + 1 == dim || base.periodic(dim - 1, coord),
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        if let Some(base) = s.strip_suffix("+circle") {
            return Some(LoopSpace::ProductCircle(Box::new(Self::parse(base)?)));
        }
        match s {
            "euclidean" => Some(LoopSpace::Euclidean),
            "torus" => Some(LoopSpace::Torus),
            _ => None,
        }
    }
}

impl fmt::Display for LoopSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoopSpace::Euclidean => write!(f, "euclidean"),
            LoopSpace::Torus => write!(f, "torus"),
            LoopSpace::ProductCircle(b) => write!(f, "{b}+circle"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteLoop {
    space: LoopSpace,
    points: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measure {
    pub energy: f64,
    pub length: f64,
}

impl Measure {
    /// `E - ½L²`, nonnegative up to rounding.
    pub fn schwarz_gap(&self) -> f64 {
        self.energy - 0.5 * self.length * self.length
    }

    /// Gap relative to the energy; zero for constant loops.
    pub fn relative_schwarz_gap(&self) -> f64 {
        if self.energy == 0.0 {
            0.0
        } else {
            self.schwarz_gap() / self.energy
        }
    }
}

impl DiscreteLoop {
    pub fn new(space: LoopSpace, mut points: Vec<Vec<f64>>) -> Result<Self> {
        if points.len() < 3 {
            return Err(LoopError::TooFewPoints(points.len()));
        }
        let dim = points[0].len();
        for (i, p) in points.iter_mut().enumerate() {
            if p.len() != dim {
                return Err(LoopError::Dimension {
                    index: i,
                    expected: dim,
                    found: p.len(),
                });
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(LoopError::NonFinite(i));
            }
            for (k, x) in p.iter_mut().enumerate() {
                if space.periodic(dim, k) {
                    *x = x.rem_euclid(1.0);
                }
            }
        }
        Ok(Self { space, points })
    }

    pub fn euclidean(points: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(LoopSpace::Euclidean, points)
    }

    pub fn torus(points: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(LoopSpace::Torus, points)
    }

    pub fn space(&self) -> &LoopSpace {
        &self.space
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    /// `b - a`, shortest representative in periodic coordinates.
    fn chord(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let dim = self.dim();
        (0..dim)
            .map(|k| {
                let d = b[k] - a[k];
                if self.space.periodic(dim, k) {
                    d - d.round()
                } else {
                    d
                }
            })
            .collect()
    }

    /// Chord vectors `Δq_i`, including the closing chord.
    pub fn chords(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        (0..n)
            .map(|i| self.chord(&self.points[i], &self.points[(i + 1) % n]))
            .collect()
    }

    pub fn chord_lengths(&self) -> Vec<f64> {
        self.chords().iter().map(|c| norm(c)).collect()
    }

    /// Lift to the universal cover: `N + 1` points, the last one the image
    /// of the first after one traversal.
    fn unwrapped(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(self.len() + 1);
        out.push(self.points[0].clone());
        for c in self.chords() {
            let last = out.last().unwrap();
            let next: Vec<f64> = last.iter().zip(&c).map(|(a, b)| a + b).collect();
            out.push(next);
        }
        out
    }

    /// Drop the extra circle coordinate of a lifted loop.
    pub fn project(&self) -> Option<DiscreteLoop> {
        let LoopSpace::ProductCircle(base) = &self.space else {
            return None;
        };
        let d = self.dim() - 1;
        let pts = self.points.iter().map(|p| p[..d].to_vec()).collect();
        DiscreteLoop::new((**base).clone(), pts).ok()
    }

    pub fn to_json(&self) -> Value {
        json!({"space": self.space.to_string(), "points": self.points})
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let space = v["space"]
            .as_str()
            .and_then(LoopSpace::parse)
            .ok_or_else(|| LoopError::Json("space must be euclidean or torus".into()))?;
        let points = v["points"]
            .as_array()
            .ok_or_else(|| LoopError::Json("points missing".into()))?
            .iter()
            .map(|p| {
                p.as_array()
                    .ok_or_else(|| LoopError::Json("point is not an array".into()))?
                    .iter()
                    .map(|x| x.as_f64().ok_or_else(|| LoopError::Json("coordinate".into())))
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(space, points)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn lerp(a: &[f64], b: &[f64], u: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + u * (y - x)).collect()
}

/// Energy and length as uniform-grid Riemann sums.
pub fn measure(lp: &DiscreteLoop) -> Measure {
    let lens = lp.chord_lengths();
    let n = lp.len() as f64;
    Measure {
        energy: 0.5 * n * lens.iter().map(|l| l * l).sum::<f64>(),
        length: lens.iter().sum(),
    }
}

/// Position on the unwrapped polyline: segment index and fraction.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
struct Cursor {
    seg: usize,
    u: f64,
}

/// First position after `from` on the polyline at Euclidean distance `c`
/// from the point `x` at `from`.
fn step_chord(poly: &[Vec<f64>], from: Cursor, x: &[f64], c: f64) -> Option<Cursor> {
    for seg in from.seg..poly.len() - 1 {
        let a = &poly[seg];
        let b = &poly[seg + 1];
        // |f + u d|² = c² with f = a - x, d = b - a
        let (mut dd, mut fd, mut ff) = (0.0, 0.0, 0.0);
        for k in 0..x.len() {
            let d = b[k] - a[k];
            let f = a[k] - x[k];
            dd += d * d;
            fd += f * d;
            ff += f * f;
        }
        if dd == 0.0 {
            continue;
        }
        let disc = fd * fd - dd * (ff - c * c);
        if disc < 0.0 {
            continue;
        }
        let u_min = if seg == from.seg { from.u } else { 0.0 };
        let root = (-fd + disc.sqrt()) / dd;
        if root >= u_min && root <= 1.0 {
            return Some(Cursor { seg, u: root });
        }
    }
    None
}

fn point_at(poly: &[Vec<f64>], cur: Cursor, out: &mut [f64]) {
    let (a, b) = (&poly[cur.seg], &poly[cur.seg + 1]);
    for k in 0..out.len() {
        out[k] = a[k] + cur.u * (b[k] - a[k]);
    }
}

/// Walk `n` chords of length `c`; returns how far along the polyline the
/// walk ends (`None` once it runs off the end) and, if asked, the points.
fn walk(poly: &[Vec<f64>], cum: &[f64], n: usize, c: f64, keep: bool) -> (Option<f64>, Vec<Vec<f64>>) {
    let mut cur = Cursor { seg: 0, u: 0.0 };
    let mut x = poly[0].clone();
    let mut pts = Vec::new();
    if keep {
        pts.push(x.clone());
    }
    for _ in 0..n {
        match step_chord(poly, cur, &x, c) {
            Some(next) => {
                cur = next;
                point_at(poly, cur, &mut x);
                if keep {
                    pts.push(x.clone());
                }
            }
            None => return (None, pts),
        }
    }
    let pos = cum[cur.seg] + cur.u * (cum[cur.seg + 1] - cum[cur.seg]);
    (Some(pos), pts)
}

/// Relative chord-length spread accepted as "equal chords".
const CHORD_TOL: f64 = 1e-12;

const MAX_RESTARTS: usize = 32;

/// Resample the polyline at `N` points with equal chords.
///
/// The chord length is found by bisection so that `N` equal chords walked
/// from vertex 0 close up exactly, which makes `E = ½L²` hold to rounding.
/// The image stays on the original polyline. A fold can make the walk jump.
/// Then positions along the polyline are relaxed until the cumulative chord
/// lengths are uniform, and after that other start vertices are tried (a
/// rotation of the parameter circle).
pub fn arclength_reparametrize(lp: &DiscreteLoop) -> Result<DiscreteLoop> {
    let n = lp.len();
    if measure(lp).length <= 0.0 {
        return Err(LoopError::ZeroLength);
    }
    let (poly, cum) = polyline(lp);
    if let Some(points) = equal_chord_points(&poly, &cum, n) {
        return DiscreteLoop::new(lp.space.clone(), points);
    }
    let (relaxed, spread) = relax_chords(&poly[..=n], &cum[..=n], n);
    if spread <= CHORD_TOL {
        return DiscreteLoop::new(lp.space.clone(), relaxed);
    }
    for k in 1..n.min(MAX_RESTARTS + 1) {
        let mut pts = lp.points[k..].to_vec();
        pts.extend_from_slice(&lp.points[..k]);
        let rotated = DiscreteLoop {
            space: lp.space.clone(),
            points: pts,
        };
        let (poly, cum) = polyline(&rotated);
        if let Some(points) = equal_chord_points(&poly, &cum, n) {
            return DiscreteLoop::new(lp.space.clone(), points);
        }
    }
    DiscreteLoop::new(lp.space.clone(), relaxed)
}

fn position(poly: &[Vec<f64>], cum: &[f64], s: f64, out: &mut [f64]) {
    let seg = cum.partition_point(|&x| x <= s).saturating_sub(1).min(poly.len() - 2);
    let width = cum[seg + 1] - cum[seg];
    let u = if width > 0.0 { ((s - cum[seg]) / width).clamp(0.0, 1.0) } else { 0.0 };
    point_at(poly, Cursor { seg, u }, out);
}

/// Fixed-point iteration on arc-length positions `s_i`: place the points so
/// the running sum of chord lengths grows linearly in `i`. Returns the points
/// and the final relative chord spread.
fn relax_chords(poly: &[Vec<f64>], cum: &[f64], n: usize) -> (Vec<Vec<f64>>, f64) {
    let total = cum[n];
    let dim = poly[0].len();
    let mut s: Vec<f64> = (0..=n).map(|i| total * i as f64 / n as f64).collect();
    let mut pts = vec![vec![0.0; dim]; n + 1];
    let mut best = (Vec::new(), f64::INFINITY);
    for _ in 0..500 {
        for i in 0..=n {
            position(poly, cum, s[i], &mut pts[i]);
        }
        let chords: Vec<f64> = (0..n)
            .map(|i| norm(&pts[i + 1].iter().zip(&pts[i]).map(|(a, b)| a - b).collect::<Vec<_>>()))
            .collect();
        let mean = chords.iter().sum::<f64>() / n as f64;
        let spread = chords.iter().map(|c| (c - mean).abs()).fold(0.0, f64::max) / mean;
        if spread < best.1 {
            best = (pts[..n].to_vec(), spread);
        }
        if spread <= CHORD_TOL {
            break;
        }
        // running chord sum as a function of position, inverted at i·mean
        let mut acc = vec![0.0; n + 1];
        for i in 0..n {
            acc[i + 1] = acc[i] + chords[i];
        }
        let mut next = s.clone();
        let mut j = 0;
        for (i, slot) in next.iter_mut().enumerate().take(n).skip(1) {
            let target = mean * i as f64;
            while j + 1 < n && acc[j + 1] < target {
                j += 1;
            }
            let w = (target - acc[j]) / chords[j].max(f64::MIN_POSITIVE);
            *slot = s[j] + w.clamp(0.0, 1.0) * (s[j + 1] - s[j]);
        }
        s = next;
    }
    best
}

/// Unwrapped polyline followed by a second traversal, so walks may overshoot
/// the closing point, with cumulative arc lengths.
fn polyline(lp: &DiscreteLoop) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut poly = lp.unwrapped();
    let n = lp.len();
    let shift: Vec<f64> = poly[n].iter().zip(&poly[0]).map(|(a, b)| a - b).collect();
    for i in 1..=n {
        let p = poly[i].iter().zip(&shift).map(|(a, b)| a + b).collect();
        poly.push(p);
    }
    let mut cum = vec![0.0];
    for w in poly.windows(2) {
        let d: Vec<f64> = w[1].iter().zip(&w[0]).map(|(a, b)| a - b).collect();
        cum.push(cum.last().unwrap() + norm(&d));
    }
    (poly, cum)
}

fn equal_chord_points(poly: &[Vec<f64>], cum: &[f64], n: usize) -> Option<Vec<Vec<f64>>> {
    let total = cum[n];
    let end = &poly[n];
    // the end position of the walk is monotone in the chord length
    let (mut lo, mut hi) = (0.0, total / n as f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        match walk(poly, cum, n, mid, false).0 {
            Some(p) if p < total => lo = mid,
            _ => hi = mid,
        }
        if hi - lo <= 1e-15 * total {
            break;
        }
    }
    let (pos, mut pts) = walk(poly, cum, n, hi, true);
    let pos = pos?;
    let last = pts.last()?;
    let gap = norm(&last.iter().zip(end).map(|(a, b)| a - b).collect::<Vec<_>>());
    if (pos - total).abs() > 1e-9 * total || gap > 1e-9 * total {
        return None;
    }
    pts.truncate(n);
    Some(pts)
}

/// Sample the loop at `m` equally spaced parameter values (piecewise linear).
pub fn resample_uniform(lp: &DiscreteLoop, m: usize) -> Result<DiscreteLoop> {
    if m < 3 {
        return Err(LoopError::TooFewPoints(m));
    }
    let poly = lp.unwrapped();
    let n = lp.len();
    let points = (0..m)
        .map(|j| {
            let s = j as f64 * n as f64 / m as f64;
            let seg = (s.floor() as usize).min(n - 1);
            lerp(&poly[seg], &poly[seg + 1], s - seg as f64)
        })
        .collect();
    DiscreteLoop::new(lp.space.clone(), points)
}

/// `t ↦ (q(t), t)` in `M × S¹`.
pub fn lift_to_product_circle(lp: &DiscreteLoop) -> DiscreteLoop {
    let n = lp.len();
    let points = lp
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut v = p.clone();
            v.push(i as f64 / n as f64);
            v
        })
        .collect();
    DiscreteLoop::new(LoopSpace::ProductCircle(Box::new(lp.space.clone())), points)
        .expect("lifting keeps a valid loop")
}

/// Split of `n` grid points used by [`concat_eps`]: the first loop gets
/// `round(εn)` of them, clamped so both parts keep at least 3.
pub fn concat_split(n: usize, eps: f64) -> usize {
    ((eps * n as f64).round() as usize).clamp(3, n - 3)
}

/// The parameter actually used for the junction, `concat_split(n, ε) / n`.
pub fn grid_epsilon(g1: &DiscreteLoop, g2: &DiscreteLoop, eps: f64) -> f64 {
    let n = g1.len() + g2.len();
    concat_split(n, eps) as f64 / n as f64
}

/// `γ *_ε γ'`: the translate `hγ` with `hγ(0) = γ'(0)` on `[0, ε]`, then `γ'`
/// on `[ε, 1]`, with `|γ| + |γ'|` points in total. The junction sits on a
/// grid point, so `ε` is rounded to [`grid_epsilon`].
pub fn concat_eps(g1: &DiscreteLoop, g2: &DiscreteLoop, eps: f64) -> Result<DiscreteLoop> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(LoopError::EpsilonOutOfRange(eps));
    }
    if g1.space != g2.space || g1.dim() != g2.dim() {
        return Err(LoopError::SpaceMismatch);
    }
    let n = g1.len() + g2.len();
    let n1 = concat_split(n, eps);
    let first = resample_uniform(g1, n1)?;
    let second = resample_uniform(g2, n - n1)?;
    let shift = g1.chord(&g1.points[0], &g2.points[0]);
    let mut points: Vec<Vec<f64>> = first
        .points
        .iter()
        .map(|p| p.iter().zip(&shift).map(|(a, b)| a + b).collect())
        .collect();
    points.extend(second.points.iter().cloned());
    DiscreteLoop::new(g1.space.clone(), points)
}

/// Right-hand side of the concatenation identity `(1/ε)E(hγ) + 1/(1-ε) E(γ')`.
pub fn concat_energy_formula(g1: &DiscreteLoop, g2: &DiscreteLoop, eps: f64) -> f64 {
    measure(g1).energy / eps + measure(g2).energy / (1.0 - eps)
}
