//! Hamiltonian dynamics on `R^{2m}` and on `T*T^n`.
//!
//! Coordinates `x = (q, p)`, Liouville form `λ = p dq`, `ω = dλ`, and
//! `ω(X_H, ·) = -dH`, so `q̇ = ∂_p H` and `ṗ = -∂_q H`. On the torus the
//! `q` coordinates of stored samples are reduced mod 1; integration runs in
//! the universal cover.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("time step must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("integration time must be positive, got {0}")]
    NonPositiveTime(f64),
    #[error("{steps} steps exceed the cap of {cap}")]
    TooManySteps { steps: u64, cap: u64 },
    #[error("state became non-finite at t = {0}")]
    NonFinite(f64),
    #[error("gradient evaluation failed at t = {0}")]
    Gradient(f64),
    #[error("expected {expected} coordinates, got {found}")]
    Dimension { expected: usize, found: usize },
    #[error("orbit is not closed: defect {defect:.3e} > {tolerance:.1e}")]
    OpenOrbit { defect: f64, tolerance: f64 },
    #[error("orbit does not solve the flow: residual {residual:.3e} > {tolerance:.1e}")]
    FlowResidual { residual: f64, tolerance: f64 },
    #[error("orbit samples are not equally spaced in time")]
    NonUniformSamples,
    #[error("orbit needs at least {0} samples")]
    TooFewSamples(usize),
    #[error("scale must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("epsilon must lie in (0, 1/4), got {0}")]
    EpsilonOutOfRange(f64),
    #[error("beta must be positive, got {0}")]
    NonPositiveBeta(f64),
    #[error("malformed orbit json: {0}")]
    Json(String),
}

pub type Result<T> = std::result::Result<T, FlowError>;

/// Upper bound on the number of integration steps.
pub const STEP_CAP: u64 = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseSpace {
    Euclidean(usize),
    TorusCotangent(usize),
}

impl PhaseSpace {
    /// Number of position coordinates.
    pub fn n(&self) -> usize {
        match *self {
            PhaseSpace::Euclidean(n) | PhaseSpace::TorusCotangent(n) => n,
        }
    }

    pub fn is_torus(&self) -> bool {
        matches!(self, PhaseSpace::TorusCotangent(_))
    }

    pub fn wrap(&self, q: &mut [f64]) {
        if self.is_torus() {
            for x in q {
                *x = x.rem_euclid(1.0);
            }
        }
    }

    /// Displacement `b - a` in the position coordinates, minimal on the torus.
    pub fn q_difference(&self, a: f64, b: f64) -> f64 {
        let d = b - a;
        if self.is_torus() {
            d - d.round()
        } else {
            d
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PhaseSpace::Euclidean(_) => "euclidean",
            PhaseSpace::TorusCotangent(_) => "torus",
        }
    }
}

impl fmt::Display for PhaseSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.name(), self.n())
    }
}

pub type ScalarFn = Arc<dyn Fn(f64, &[f64], &[f64]) -> f64 + Send + Sync>;
pub type GradientFn = Arc<dyn Fn(f64, &[f64], &[f64]) -> (Vec<f64>, Vec<f64>) + Send + Sync>;
pub type Potential = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;

/// A Hamiltonian `H(t, q, p)` with an optional analytic gradient.
#[derive(Clone)]
pub struct HamiltonianField {
    space: PhaseSpace,
    h: ScalarFn,
    grad: Option<GradientFn>,
    homogeneity_degree: Option<u32>,
    autonomous: bool,
}

impl fmt::Debug for HamiltonianField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HamiltonianField")
            .field("space", &self.space)
            .field("analytic_gradient", &self.grad.is_some())
            .field("homogeneity_degree", &self.homogeneity_degree)
            .field("autonomous", &self.autonomous)
            .finish()
    }
}

impl HamiltonianField {
    /// Autonomous field with a finite-difference gradient.
    pub fn new(
        space: PhaseSpace,
        h: impl Fn(f64, &[f64], &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            space,
            h: Arc::new(h),
            grad: None,
            homogeneity_degree: None,
            autonomous: true,
        }
    }

    pub fn with_gradient(
        mut self,
        g: impl Fn(f64, &[f64], &[f64]) -> (Vec<f64>, Vec<f64>) + Send + Sync + 'static,
    ) -> Self {
        self.grad = Some(Arc::new(g));
        self
    }

    pub fn homogeneous(mut self, degree: u32) -> Self {
        self.homogeneity_degree = Some(degree);
        self
    }

    pub fn time_dependent(mut self) -> Self {
        self.autonomous = false;
        self
    }

    /// `F = ½|p|²` with its analytic gradient.
    pub fn kinetic(space: PhaseSpace) -> Self {
        Self::new(space, |_, _, p| 0.5 * p.iter().map(|x| x * x).sum::<f64>())
            .with_gradient(|_, q, p| (vec![0.0; q.len()], p.to_vec()))
            .homogeneous(2)
    }

    /// `H = ½(|q|² + |p|²)` on `R^{2m}`.
    pub fn harmonic_oscillator(m: usize) -> Self {
        Self::new(PhaseSpace::Euclidean(m), |_, q, p| {
            0.5 * (q.iter().map(|x| x * x).sum::<f64>() + p.iter().map(|x| x * x).sum::<f64>())
        })
        .with_gradient(|_, q, p| (q.to_vec(), p.to_vec()))
    }

    /// `h ∘ H + W` for a scalar `h` with derivative `dh` and a potential `W(t, q)`.
    pub fn composed(
        base: &HamiltonianField,
        h: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dh: impl Fn(f64) -> f64 + Send + Sync + 'static,
        w: Potential,
    ) -> Self {
        let h = Arc::new(h);
        let dh = Arc::new(dh);
        let inner = base.clone();
        let value = {
            let (inner, h, w) = (inner.clone(), h.clone(), w.clone());
            move |t: f64, q: &[f64], p: &[f64]| h(inner.value(t, q, p)) + w(t, q)
        };
        let grad = {
            let inner = inner.clone();
            let w = w.clone();
            move |t: f64, q: &[f64], p: &[f64]| {
                let s = dh(inner.value(t, q, p));
                let (mut gq, mut gp) = inner.gradient(t, q, p).unwrap_or_else(|_| {
                    (vec![f64::NAN; q.len()], vec![f64::NAN; p.len()])
                });
                gq.iter_mut().for_each(|x| *x *= s);
                gp.iter_mut().for_each(|x| *x *= s);
                let dw = potential_gradient(&*w, t, q);
                for (a, b) in gq.iter_mut().zip(dw) {
                    *a += b;
                }
                (gq, gp)
            }
        };
        let mut out = Self::new(base.space, value).with_gradient(grad);
        out.autonomous = false;
        out
    }

    pub fn space(&self) -> PhaseSpace {
        self.space
    }

    pub fn homogeneity_degree(&self) -> Option<u32> {
        self.homogeneity_degree
    }

    pub fn is_autonomous(&self) -> bool {
        self.autonomous
    }

    pub fn value(&self, t: f64, q: &[f64], p: &[f64]) -> f64 {
        (self.h)(t, q, p)
    }

    /// `(∂_q H, ∂_p H)`.
    pub fn gradient(&self, t: f64, q: &[f64], p: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.space.n();
        if q.len() != n || p.len() != n {
            return Err(FlowError::Dimension {
                expected: n,
                found: q.len().max(p.len()),
            });
        }
        let (gq, gp) = match &self.grad {
            Some(g) => g(t, q, p),
            None => self.numerical_gradient(t, q, p),
        };
        if gq.iter().chain(&gp).any(|x| !x.is_finite()) {
            return Err(FlowError::Gradient(t));
        }
        Ok((gq, gp))
    }

    fn numerical_gradient(&self, t: f64, q: &[f64], p: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut qs = q.to_vec();
        let mut ps = p.to_vec();
        let mut gq = vec![0.0; q.len()];
        let mut gp = vec![0.0; p.len()];
        for i in 0..q.len() {
            let h = 1e-6 * (1.0 + q[i].abs());
            qs[i] = q[i] + h;
            let up = self.value(t, &qs, p);
            qs[i] = q[i] - h;
            let down = self.value(t, &qs, p);
            qs[i] = q[i];
            gq[i] = (up - down) / (2.0 * h);
        }
        for i in 0..p.len() {
            let h = 1e-6 * (1.0 + p[i].abs());
            ps[i] = p[i] + h;
            let up = self.value(t, q, &ps);
            ps[i] = p[i] - h;
            let down = self.value(t, q, &ps);
            ps[i] = p[i];
            gp[i] = (up - down) / (2.0 * h);
        }
        (gq, gp)
    }

    /// Largest `|F(q, s p) - s^d F(q, p)|` over the given points and scales.
    pub fn homogeneity_residual(&self, points: &[(Vec<f64>, Vec<f64>)], scales: &[f64]) -> Option<f64> {
        let d = self.homogeneity_degree? as i32;
        let mut worst = 0.0f64;
        for (q, p) in points {
            let base = self.value(0.0, q, p);
            for &s in scales {
                let sp: Vec<f64> = p.iter().map(|x| s * x).collect();
                worst = worst.max((self.value(0.0, q, &sp) - s.powi(d) * base).abs());
            }
        }
        Some(worst)
    }
}

fn potential_gradient(w: &(dyn Fn(f64, &[f64]) -> f64 + Send + Sync), t: f64, q: &[f64]) -> Vec<f64> {
    let mut qs = q.to_vec();
    (0..q.len())
        .map(|i| {
            let h = 1e-6 * (1.0 + q[i].abs());
            qs[i] = q[i] + h;
            let up = w(t, &qs);
            qs[i] = q[i] - h;
            let down = w(t, &qs);
            qs[i] = q[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `X_H(x) = (∂_p H, -∂_q H)`.
pub fn hamiltonian_vector_field(
    field: &HamiltonianField,
    q: &[f64],
    p: &[f64],
    t: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (gq, gp) = field.gradient(t, q, p)?;
    Ok((gp, gq.into_iter().map(|x| -x).collect()))
}

/// `|dF(x)(Y(x)) - 2F(x)|` with the fiberwise Liouville field `Y = Σ p_i ∂_{p_i}`.
pub fn euler_identity_residual(field: &HamiltonianField, q: &[f64], p: &[f64]) -> Result<f64> {
    let (_, gp) = field.gradient(0.0, q, p)?;
    let dfy: f64 = gp.iter().zip(p).map(|(g, x)| g * x).sum();
    Ok((dfy - 2.0 * field.value(0.0, q, p)).abs())
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitSample {
    pub t: f64,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Orbit {
    pub space: PhaseSpace,
    pub samples: Vec<OrbitSample>,
    pub period: f64,
    pub step: f64,
    pub method: String,
    /// Distance between the first and last sample (minimal on the torus).
    pub closure_defect: f64,
    /// `max_t |H(x(t)) - H(x(0))|` for autonomous fields.
    pub energy_drift: Option<f64>,
}

fn closure_defect(space: PhaseSpace, first: &OrbitSample, last: &OrbitSample) -> f64 {
    let dq = first
        .q
        .iter()
        .zip(&last.q)
        .map(|(a, b)| space.q_difference(*a, *b).powi(2));
    let dp = first.p.iter().zip(&last.p).map(|(a, b)| (b - a).powi(2));
    dq.chain(dp).sum::<f64>().sqrt()
}

impl Orbit {
    pub fn from_samples(space: PhaseSpace, samples: Vec<OrbitSample>, method: &str) -> Result<Self> {
        if samples.len() < 2 {
            return Err(FlowError::TooFewSamples(2));
        }
        let n = space.n();
        for s in &samples {
            if s.q.len() != n || s.p.len() != n {
                return Err(FlowError::Dimension {
                    expected: n,
                    found: s.q.len().max(s.p.len()),
                });
            }
        }
        let period = samples.last().unwrap().t - samples[0].t;
        let step = period / (samples.len() - 1) as f64;
        let closure_defect = closure_defect(space, &samples[0], samples.last().unwrap());
        Ok(Self {
            space,
            samples,
            period,
            step,
            method: method.to_string(),
            closure_defect,
            energy_drift: None,
        })
    }

    pub fn is_closed(&self, tolerance: f64) -> bool {
        self.closure_defect <= tolerance
    }

    pub fn start(&self) -> &OrbitSample {
        &self.samples[0]
    }

    pub fn to_json(&self) -> Value {
        let samples: Vec<Value> = self
            .samples
            .iter()
            .map(|s| json!({"t": s.t, "q": s.q, "p": s.p}))
            .collect();
        json!({
            "space": self.space.name(),
            "period": self.period,
            "step": self.step,
            "method": self.method,
            "closure_defect": self.closure_defect,
            "energy_drift": self.energy_drift,
            "samples": samples,
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let bad = |what: &str| FlowError::Json(what.to_string());
        let floats = |x: &Value, what: &str| -> Result<Vec<f64>> {
            x.as_array()
                .ok_or_else(|| bad(what))?
                .iter()
                .map(|y| y.as_f64().ok_or_else(|| bad(what)))
                .collect()
        };
        let samples = v["samples"]
            .as_array()
            .ok_or_else(|| bad("samples"))?
            .iter()
            .map(|s| {
                Ok(OrbitSample {
                    t: s["t"].as_f64().ok_or_else(|| bad("t"))?,
                    q: floats(&s["q"], "q")?,
                    p: floats(&s["p"], "p")?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let n = samples.first().map_or(0, |s| s.q.len());
        let space = match v["space"].as_str() {
            Some("torus") => PhaseSpace::TorusCotangent(n),
            _ => PhaseSpace::Euclidean(n),
        };
        let mut orbit = Orbit::from_samples(space, samples, v["method"].as_str().unwrap_or("file"))?;
        if let Some(p) = v["period"].as_f64() {
            orbit.period = p;
        }
        Ok(orbit)
    }
}

fn axpy(x: &[f64], a: f64, k: &[f64]) -> Vec<f64> {
    x.iter().zip(k).map(|(x, k)| x + a * k).collect()
}

/// Fixed-step classical Runge–Kutta integration of `ẋ = X_H(x)` on `[0, T]`.
/// The step is shrunk slightly so that it divides `T`.
pub fn integrate_flow(
    field: &HamiltonianField,
    q0: &[f64],
    p0: &[f64],
    total: f64,
    dt: f64,
) -> Result<Orbit> {
    if !(dt > 0.0) {
        return Err(FlowError::NonPositiveStep(dt));
    }
    if !(total > 0.0) {
        return Err(FlowError::NonPositiveTime(total));
    }
    let ratio = total / dt;
    if ratio > STEP_CAP as f64 {
        return Err(FlowError::TooManySteps {
            steps: ratio as u64,
            cap: STEP_CAP,
        });
    }
    let steps = ((ratio - 1e-9).ceil() as u64).max(1);
    let h = total / steps as f64;
    let space = field.space();
    let n = space.n();
    if q0.len() != n || p0.len() != n {
        return Err(FlowError::Dimension {
            expected: n,
            found: q0.len().max(p0.len()),
        });
    }
    let x0: Vec<f64> = q0.iter().chain(p0).copied().collect();
    let rhs = |t: f64, x: &[f64]| -> Result<Vec<f64>> {
        let (dq, dp) = hamiltonian_vector_field(field, &x[..n], &x[n..], t)?;
        Ok(dq.into_iter().chain(dp).collect())
    };
    let energy0 = field.value(0.0, q0, p0);
    let mut drift = 0.0f64;
    let store = |t: f64, x: &[f64]| {
        let mut q = x[..n].to_vec();
        space.wrap(&mut q);
        OrbitSample {
            t,
            q,
            p: x[n..].to_vec(),
        }
    };
    let mut samples = Vec::with_capacity(steps as usize + 1);
    samples.push(store(0.0, &x0));
    let mut x = x0;
    for i in 0..steps {
        let t = i as f64 * h;
        let k1 = rhs(t, &x)?;
        let k2 = rhs(t + h / 2.0, &axpy(&x, h / 2.0, &k1))?;
        let k3 = rhs(t + h / 2.0, &axpy(&x, h / 2.0, &k2))?;
        let k4 = rhs(t + h, &axpy(&x, h, &k3))?;
        for j in 0..x.len() {
            x[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        let t1 = (i + 1) as f64 * h;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(FlowError::NonFinite(t1));
        }
        if field.is_autonomous() {
            drift = drift.max((field.value(t1, &x[..n], &x[n..]) - energy0).abs());
        }
        samples.push(store(t1, &x));
    }
    let mut orbit = Orbit::from_samples(space, samples, "rk4")?;
    orbit.period = total;
    orbit.step = h;
    if field.is_autonomous() {
        orbit.energy_drift = Some(drift);
    }
    Ok(orbit)
}

/// Independent integrations of several initial conditions, in parallel.
pub fn integrate_batch(
    field: &HamiltonianField,
    starts: &[(Vec<f64>, Vec<f64>)],
    total: f64,
    dt: f64,
) -> Vec<Result<Orbit>> {
    starts
        .par_iter()
        .map(|(q, p)| integrate_flow(field, q, p, total, dt))
        .collect()
}

/// Default closure tolerance for action computations.
pub const CLOSURE_TOL: f64 = 1e-6;

fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

/// `∫ (Σ p_i q̇_i - H) dt` over the orbit with `q̇ = ∂_p H`.
pub fn action(field: &HamiltonianField, orbit: &Orbit) -> Result<f64> {
    action_with_tolerance(field, orbit, CLOSURE_TOL)
}

pub fn action_with_tolerance(field: &HamiltonianField, orbit: &Orbit, tolerance: f64) -> Result<f64> {
    if !orbit.is_closed(tolerance) {
        return Err(FlowError::OpenOrbit {
            defect: orbit.closure_defect,
            tolerance,
        });
    }
    let mut times = Vec::with_capacity(orbit.samples.len());
    let mut values = Vec::with_capacity(orbit.samples.len());
    for s in &orbit.samples {
        let (_, gp) = field.gradient(s.t, &s.q, &s.p)?;
        let pq: f64 = s.p.iter().zip(&gp).map(|(p, v)| p * v).sum();
        times.push(s.t);
        values.push(pq - field.value(s.t, &s.q, &s.p));
    }
    Ok(trapezoid(&times, &values))
}

/// `(q(t), s p(t))` reparametrized as a solution of `X_F`: for fiberwise
/// quadratic `F` this is the orbit through `s x(0)`, traversed with times `t / s`.
pub fn rescale_orbit(orbit: &Orbit, s: f64) -> Result<Orbit> {
    if !(s > 0.0) {
        return Err(FlowError::NonPositiveScale(s));
    }
    let t0 = orbit.samples[0].t;
    let samples = orbit
        .samples
        .iter()
        .map(|x| OrbitSample {
            t: t0 + (x.t - t0) / s,
            q: x.q.clone(),
            p: x.p.iter().map(|v| s * v).collect(),
        })
        .collect();
    let mut out = Orbit::from_samples(orbit.space, samples, &orbit.method)?;
    out.period = orbit.period / s;
    out.energy_drift = orbit.energy_drift.map(|d| d * s * s);
    Ok(out)
}

fn uniform_step(orbit: &Orbit) -> Result<f64> {
    let n = orbit.samples.len();
    if n < 5 {
        return Err(FlowError::TooFewSamples(5));
    }
    let h = (orbit.samples[n - 1].t - orbit.samples[0].t) / (n - 1) as f64;
    for (i, s) in orbit.samples.iter().enumerate() {
        if (s.t - orbit.samples[0].t - i as f64 * h).abs() > 1e-9 * (1.0 + s.t.abs()) {
            return Err(FlowError::NonUniformSamples);
        }
    }
    Ok(h)
}

/// Time derivatives `(q̇, ṗ)` of the samples by fourth-order central
/// differences; closed orbits are treated as periodic, open ones use
/// second-order one-sided stencils at the ends.
pub fn sample_velocities(orbit: &Orbit) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    let h = uniform_step(orbit)?;
    let space = orbit.space;
    let s = &orbit.samples;
    let len = s.len();
    let closed = orbit.is_closed(CLOSURE_TOL);
    let period_len = len - 1;
    let n = space.n();
    let index = |i: isize| -> Option<usize> {
        if closed {
            Some(i.rem_euclid(period_len as isize) as usize)
        } else if i >= 0 && (i as usize) < len {
            Some(i as usize)
        } else {
            None
        }
    };
    let coord = |a: usize, b: usize, k: usize| -> f64 {
        if k < n {
            space.q_difference(s[a].q[k], s[b].q[k])
        } else {
            s[b].p[k - n] - s[a].p[k - n]
        }
    };
    let mut out = Vec::with_capacity(len);
    for i in 0..len {
        let ii = i as isize;
        let mut v = vec![0.0; 2 * n];
        let stencil = (index(ii - 2), index(ii - 1), index(ii + 1), index(ii + 2));
        for (k, vk) in v.iter_mut().enumerate() {
            *vk = match stencil {
                (Some(m2), Some(m1), Some(p1), Some(p2)) => {
                    // displacements measured from sample i
                    (8.0 * coord(i, p1, k) - 8.0 * coord(i, m1, k) - coord(i, p2, k) + coord(i, m2, k))
                        / (12.0 * h)
                }
                (_, Some(m1), Some(p1), _) => (coord(i, p1, k) - coord(i, m1, k)) / (2.0 * h),
                (_, _, Some(p1), Some(p2)) => (4.0 * coord(i, p1, k) - coord(i, p2, k)) / (2.0 * h),
                (Some(m2), Some(m1), _, _) => (coord(i, m2, k) - 4.0 * coord(i, m1, k)) / (2.0 * h),
                _ => return Err(FlowError::TooFewSamples(5)),
            };
        }
        let p = v.split_off(n);
        out.push((v, p));
    }
    Ok(out)
}

/// `max_i |ẋ_i - X_H(x_i)| / (1 + |X_H(x_i)|)` from sample differences.
pub fn flow_residual(field: &HamiltonianField, orbit: &Orbit) -> Result<f64> {
    let vel = sample_velocities(orbit)?;
    let mut worst = 0.0f64;
    for (s, (vq, vp)) in orbit.samples.iter().zip(vel) {
        let (fq, fp) = hamiltonian_vector_field(field, &s.q, &s.p, s.t)?;
        let norm = fq.iter().chain(&fp).map(|x| x * x).sum::<f64>().sqrt();
        let err = vq
            .iter()
            .zip(&fq)
            .chain(vp.iter().zip(&fp))
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        worst = worst.max(err / (1.0 + norm));
    }
    Ok(worst)
}

/// Smooth cut-off `f` with `f = 0` on `r ≤ ε²`, `f(r) = r` on `r ≥ ε`,
/// `0 ≤ f' ≤ 2` and `f' > 0` on `(ε², ∞)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cutoff {
    eps: f64,
}

/// The cut-off for `0 < ε < 1/4`.
pub fn cutoff_f(eps: f64) -> Result<Cutoff> {
    if !(eps > 0.0 && eps < 0.25) {
        return Err(FlowError::EpsilonOutOfRange(eps));
    }
    Ok(Cutoff { eps })
}

impl Cutoff {
    pub fn epsilon(&self) -> f64 {
        self.eps
    }

    fn width(&self) -> f64 {
        self.eps - self.eps * self.eps
    }

    // Cubic Hermite blend on [ε², ε]: value 0 → ε, slope 0 → 1.
    pub fn value(&self, r: f64) -> f64 {
        let e = self.eps;
        if r <= e * e {
            return 0.0;
        }
        if r >= e {
            return r;
        }
        let w = self.width();
        let u = (r - e * e) / w;
        e * (3.0 * u * u - 2.0 * u * u * u) + w * (u * u * u - u * u)
    }

    pub fn derivative(&self, r: f64) -> f64 {
        let e = self.eps;
        if r <= e * e {
            return 0.0;
        }
        if r >= e {
            return 1.0;
        }
        let w = self.width();
        let u = (r - e * e) / w;
        (e * (6.0 * u - 6.0 * u * u) + w * (3.0 * u * u - 2.0 * u)) / w
    }
}

/// `L(t, q, v) = |v|² / (2β) - W(t, q)`, the Legendre dual of `β|p|²/2 + W`.
#[derive(Clone)]
pub struct QuadraticLagrangian {
    beta: f64,
    potential: Potential,
}

impl fmt::Debug for QuadraticLagrangian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QuadraticLagrangian").field("beta", &self.beta).finish()
    }
}

pub fn legendre_quadratic(beta: f64, potential: Potential) -> Result<QuadraticLagrangian> {
    if !(beta > 0.0) {
        return Err(FlowError::NonPositiveBeta(beta));
    }
    Ok(QuadraticLagrangian { beta, potential })
}

impl QuadraticLagrangian {
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn value(&self, t: f64, q: &[f64], v: &[f64]) -> f64 {
        v.iter().map(|x| x * x).sum::<f64>() / (2.0 * self.beta) - (self.potential)(t, q)
    }

    /// The Hamiltonian `β|p|²/2 + W(t, q)` on the given phase space.
    pub fn hamiltonian(&self, space: PhaseSpace) -> HamiltonianField {
        let beta = self.beta;
        let w = self.potential.clone();
        let w2 = self.potential.clone();
        HamiltonianField::new(space, move |t, q, p| {
            0.5 * beta * p.iter().map(|x| x * x).sum::<f64>() + w(t, q)
        })
        .with_gradient(move |t, q, p| {
            (potential_gradient(&*w2, t, q), p.iter().map(|x| beta * x).collect())
        })
        .time_dependent()
    }

    /// `E_L(q) = ∫ L(t, q, q̇) dt`, with `q̇` from sample differences.
    pub fn energy(&self, orbit: &Orbit) -> Result<f64> {
        let vel = sample_velocities(orbit)?;
        let times: Vec<f64> = orbit.samples.iter().map(|s| s.t).collect();
        let values: Vec<f64> = orbit
            .samples
            .iter()
            .zip(&vel)
            .map(|(s, (vq, _))| self.value(s.t, &s.q, vq))
            .collect();
        Ok(trapezoid(&times, &values))
    }

    /// `|A_H(x) - E_L(q)|` for a closed orbit of the dual Hamiltonian.
    pub fn action_energy_gap(&self, orbit: &Orbit) -> Result<f64> {
        let h = self.hamiltonian(orbit.space);
        Ok((action(&h, orbit)? - self.energy(orbit)?).abs())
    }
}

/// Flow-residual tolerance used by [`action_formula_check`].
pub const FLOW_RESIDUAL_TOL: f64 = 1e-6;

/// Compares the direct action of a closed orbit of `h ∘ H + W` with
/// `∫ 2h'(H)H - h(H) - W dt`; returns the absolute difference.
pub fn action_formula_check(
    h: impl Fn(f64) -> f64 + Send + Sync + Clone + 'static,
    dh: impl Fn(f64) -> f64 + Send + Sync + Clone + 'static,
    base: &HamiltonianField,
    w: Potential,
    orbit: &Orbit,
) -> Result<f64> {
    let total = HamiltonianField::composed(base, h.clone(), dh.clone(), w.clone());
    let residual = flow_residual(&total, orbit)?;
    if residual > FLOW_RESIDUAL_TOL {
        return Err(FlowError::FlowResidual {
            residual,
            tolerance: FLOW_RESIDUAL_TOL,
        });
    }
    if !orbit.is_closed(CLOSURE_TOL) {
        return Err(FlowError::OpenOrbit {
            defect: orbit.closure_defect,
            tolerance: CLOSURE_TOL,
        });
    }
    let vel = sample_velocities(orbit)?;
    let times: Vec<f64> = orbit.samples.iter().map(|s| s.t).collect();
    let mut direct = Vec::with_capacity(times.len());
    let mut formula = Vec::with_capacity(times.len());
    for (s, (vq, _)) in orbit.samples.iter().zip(&vel) {
        let hv = base.value(s.t, &s.q, &s.p);
        let wv = w(s.t, &s.q);
        let pq: f64 = s.p.iter().zip(vq).map(|(p, v)| p * v).sum();
        direct.push(pq - h(hv) - wv);
        formula.push(2.0 * dh(hv) * hv - h(hv) - wv);
    }
    Ok((trapezoid(&times, &direct) - trapezoid(&times, &formula)).abs())
}
