//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Run with `cargo test -p reeb-growth-core --test acceptance`. The process
//! exits non-zero when any criterion fails.

mod common;

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use reeb_core::betti::{betti_of_spec, odd_sphere_degree_pattern, sullivan_class_degrees, BettiTable, PartialSumBound};
use reeb_core::gromov::{self, octahedron};
use reeb_core::growth::{poly_growth_rate, CountSequence};
use reeb_core::hamflow::{self, HamiltonianField, PhaseSpace, Potential};
use reeb_core::loopmodel::ModelSpec;
use reeb_core::loops::{self, arclength_reparametrize, measure};
use reeb_core::maslov::{self, rotation, SymplecticPath};

use common::loops::random_smooth_loop;
use common::{linear_flow, random_nondegenerate_generator};

type Outcome = Result<String, String>;

fn check(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn betti(spec: &str, max: usize) -> BettiTable {
    betti_of_spec(&ModelSpec::parse(spec).unwrap(), max).unwrap()
}

fn criterion_1() -> Outcome {
    let s5 = [1, 0, 0, 0, 1, 1, 0, 0, 1, 1, 0, 0, 1, 1, 0, 0];
    let s7 = [1, 0, 0, 0, 0, 0, 1, 1, 0, 0, 0, 0, 1, 1, 0, 0];
    let product = [1, 0, 0, 0, 1, 1, 1, 1, 1, 1, 1, 2, 3, 2, 1, 2];
    let rows = [("loop(s5)", &s5), ("loop(s7)", &s7), ("loop(s5)*loop(s7)", &product)];
    let mut bad = Vec::new();
    for (spec, want) in rows {
        let got = betti(spec, 15);
        if got.values != want.to_vec() {
            bad.push(format!("{spec}: {:?}", got.values));
        }
    }
    check(bad.is_empty(), if bad.is_empty() { "3 rows, degrees 0-15 exact".into() } else { bad.join("; ") })
}

fn criterion_2() -> Outcome {
    let mut bad = Vec::new();
    for n in [3, 5, 7, 9] {
        let got = betti(&format!("loop(s{n})"), 30);
        let want = odd_sphere_degree_pattern(n, 30).unwrap();
        // the pattern itself, independently: 1 in degree 0 and in k(n-1), k(n-1)+1
        let direct: Vec<u64> = (0..=30).map(|i| u64::from(i == 0 || (i >= n - 1 && i % (n - 1) <= 1))).collect();
        if got.values != want.values || got.values != direct {
            bad.push(format!("n={n}"));
        }
    }
    check(bad.is_empty(), if bad.is_empty() { "n = 3, 5, 7, 9 up to degree 30".into() } else { format!("mismatch at {}", bad.join(", ")) })
}

fn criterion_3() -> Outcome {
    let mut bad = Vec::new();
    let mut checked = 0;
    for n in [2, 4, 6] {
        let t = betti(&format!("loop(s{n})"), 30);
        let s_max = (30 / (n - 1) - 1) / 2;
        for d in sullivan_class_degrees(n, s_max).unwrap().into_iter().filter(|&d| d <= 30) {
            checked += 1;
            if t.get(d) < 1 {
                bad.push(format!("n={n} degree {d}"));
            }
        }
    }
    check(bad.is_empty(), if bad.is_empty() { format!("{checked} class degrees, all b >= 1") } else { bad.join(", ") })
}

fn criterion_4() -> Outcome {
    let mut failures = Vec::new();
    for n in [3, 5, 7, 9] {
        let v = PartialSumBound::OddSphere(n).violations(&betti(&format!("loop(s{n})"), 30));
        if !v.is_empty() {
            failures.push(format!("odd S^{n} k={v:?}"));
        }
    }
    for n in [2, 4, 6] {
        let v = PartialSumBound::EvenSphere(n).violations(&betti(&format!("loop(s{n})"), 30));
        if !v.is_empty() {
            failures.push(format!("even S^{n} k={v:?}"));
        }
    }
    let v = PartialSumBound::SphereProduct(5, 7).violations(&betti("loop(s5)*loop(s7)", 30));
    if !v.is_empty() {
        failures.push(format!("S^5xS^7 k={v:?}"));
    }
    let t = betti("loop(s3*s3)", 40);
    let sums = t.partial_sums();
    let seq = CountSequence::new((1..=40).map(|k| (k as f64, sums[k] as u128)).collect()).unwrap();
    let rate = poly_growth_rate(&seq).unwrap();
    if rate < 1.8 {
        failures.push(format!("poly rate {rate:.4} < 1.8"));
    }
    let msg = format!("S^3xS^3 poly rate {rate:.4} (>= 1.8)");
    if failures.is_empty() {
        Ok(msg)
    } else {
        Err(format!("{msg}; partial-sum bound violated: {}", failures.join("; ")))
    }
}

fn criterion_5() -> Outcome {
    let half = SymplecticPath::from_fn(|t| rotation(1, PI * t), 1.0, 400).unwrap();
    let full = SymplecticPath::from_fn(|t| rotation(1, 2.0 * PI * t), 1.0, 800).unwrap();
    let cz_half = maslov::cz_index(&half).map_err(|e| e.to_string())?;
    let cz_full = maslov::cz_index(&full).map_err(|e| e.to_string())?;
    if cz_half.as_f64() != 1.0 || cz_full.as_f64() != 2.0 {
        return Err(format!("cz(π) = {cz_half}, cz(2π) = {cz_full}"));
    }

    let mut worst_iter: f64 = 0.0;
    for theta in [0.6 * PI, PI, 1.3 * PI, 2.0 * PI] {
        for m in [1, 2] {
            let p = SymplecticPath::from_fn(|t| rotation(m, theta * t), 1.0, 300).unwrap();
            let d1 = maslov::delta_winding(&p).map_err(|e| e.to_string())?;
            for k in 1..=5 {
                let pk = maslov::iterate_path(&p, k).map_err(|e| e.to_string())?;
                let dk = maslov::delta_winding(&pk).map_err(|e| e.to_string())?;
                worst_iter = worst_iter.max((dk - k as f64 * d1).abs());
            }
        }
    }
    if worst_iter > 1e-6 {
        return Err(format!("iteration defect {worst_iter:.2e} > 1e-6"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut checked, mut skipped, mut worst) = (0, 0, 0.0f64);
    while checked < 50 {
        let m = 1 + checked % 3;
        let path = linear_flow(m, random_nondegenerate_generator(&mut rng, m));
        let cz = match maslov::cz_index(&path) {
            Ok(v) => v,
            Err(maslov::MaslovError::NonRegularCrossing { .. }) => {
                skipped += 1;
                continue;
            }
            Err(e) => return Err(e.to_string()),
        };
        let delta = maslov::delta_winding(&path).map_err(|e| e.to_string())?;
        let gap = (cz.as_f64() - delta).abs();
        if gap >= m as f64 {
            return Err(format!("sandwich fails: m={m} cz={cz} delta={delta}"));
        }
        worst = worst.max(gap / m as f64);
        checked += 1;
    }
    Ok(format!(
        "cz(π)=1, cz(2π)=2, iteration defect {worst_iter:.1e}, sandwich on 50 paths (max |cz-Δ|/m = {worst:.3}, {skipped} non-regular skipped)"
    ))
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let kinetic = HamiltonianField::kinetic(PhaseSpace::TorusCotangent(2));
    let quartic = HamiltonianField::new(PhaseSpace::TorusCotangent(2), |_, _, p| {
        0.5 * (p[0].powi(4) + p[1].powi(4)) / (p[0] * p[0] + p[1] * p[1])
    })
    .homogeneous(2);
    let mut euler: f64 = 0.0;
    for f in [&kinetic, &quartic] {
        for _ in 0..50 {
            let q = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
            let p = [rng.gen_range(0.3..3.0), rng.gen_range(-3.0..-0.3)];
            euler = euler.max(hamflow::euler_identity_residual(f, &q, &p).map_err(|e| e.to_string())?);
        }
    }
    if euler > 1e-7 {
        return Err(format!("Euler residual {euler:.2e} > 1e-7"));
    }

    let mut drift: f64 = 0.0;
    let mut action_gap: f64 = 0.0;
    for _ in 0..20 {
        let q = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
        let p = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
        let orbit = hamflow::integrate_flow(&kinetic, &q, &p, 1.0, 1e-3).map_err(|e| e.to_string())?;
        drift = drift.max(orbit.energy_drift.unwrap());
        // integer velocities close up on the torus: any integer p for ½|p|²,
        // p on an axis for the quartic field
        let k = [rng.gen_range(-3..4) as f64, rng.gen_range(1..4) as f64];
        for (f, k) in [(&kinetic, k), (&quartic, [k[1], 0.0])] {
            let orbit = hamflow::integrate_flow(f, &q, &k, 1.0, 1e-3).map_err(|e| e.to_string())?;
            let a = hamflow::action(f, &orbit).map_err(|e| e.to_string())?;
            action_gap = action_gap.max((a - f.value(0.0, &q, &k)).abs());
        }
    }
    if drift > 1e-8 {
        return Err(format!("energy drift {drift:.2e} > 1e-8"));
    }
    if action_gap > 1e-6 {
        return Err(format!("|A_F - F| = {action_gap:.2e} > 1e-6"));
    }

    // orbits of action a: p integer with |p|² = 2a
    let mut period_gap: f64 = 0.0;
    for (a, p) in [(0.5, [1.0, 0.0]), (2.0, [2.0, 0.0]), (5.0, [1.0, 3.0])] {
        let orbit = hamflow::integrate_flow(&kinetic, &[0.2, 0.4], &p, 1.0, 1e-3).map_err(|e| e.to_string())?;
        let act = hamflow::action(&kinetic, &orbit).map_err(|e| e.to_string())?;
        let r = hamflow::rescale_orbit(&orbit, 1.0 / act.sqrt()).map_err(|e| e.to_string())?;
        let s = r.start();
        let on_level = (kinetic.value(0.0, &s.q, &s.p) - 1.0).abs();
        let residual = hamflow::flow_residual(&kinetic, &r).map_err(|e| e.to_string())?;
        if on_level > 1e-9 || !r.is_closed(1e-9) || residual > 1e-6 {
            return Err(format!("rescaled orbit for a={a} is not a closed orbit on F = 1"));
        }
        period_gap = period_gap.max((r.period - f64::sqrt(a)).abs());
    }
    if period_gap > 1e-9 {
        return Err(format!("period differs from √a by {period_gap:.2e}"));
    }

    let mut legendre: f64 = 0.0;
    let w: Potential = Arc::new(|_, q| 0.5 * q[0] * q[0]);
    let l = hamflow::legendre_quadratic(1.0, w).map_err(|e| e.to_string())?;
    let h = l.hamiltonian(PhaseSpace::Euclidean(1));
    let orbit = hamflow::integrate_flow(&h, &[0.7], &[0.0], 2.0 * PI, 1e-3).map_err(|e| e.to_string())?;
    legendre = legendre.max(l.action_energy_gap(&orbit).map_err(|e| e.to_string())?);
    let l2 = hamflow::legendre_quadratic(2.0, Arc::new(|_, _| 0.25)).map_err(|e| e.to_string())?;
    let h2 = l2.hamiltonian(PhaseSpace::TorusCotangent(1));
    let orbit = hamflow::integrate_flow(&h2, &[0.0], &[0.5], 1.0, 1e-3).map_err(|e| e.to_string())?;
    legendre = legendre.max(l2.action_energy_gap(&orbit).map_err(|e| e.to_string())?);
    check(
        legendre <= 1e-6,
        format!(
            "Euler {euler:.1e}, drift {drift:.1e}, |A_F-F| {action_gap:.1e}, √a period gap {period_gap:.1e}, |A_H-E_L| {legendre:.1e}"
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_eq: f64 = 0.0;
    for i in 0..100 {
        let n = rng.gen_range(50..2000);
        let dim = rng.gen_range(2..5);
        let lp = random_smooth_loop(&mut rng, n, dim);
        let m = measure(&lp);
        if m.schwarz_gap() < -1e-12 * m.energy {
            return Err(format!("loop {i}: ½L² > E"));
        }
        let r = arclength_reparametrize(&lp).map_err(|e| e.to_string())?;
        worst_eq = worst_eq.max(measure(&r).relative_schwarz_gap().abs());
    }
    if worst_eq > 1e-6 {
        return Err(format!("equality gap after reparametrization {worst_eq:.2e} > 1e-6"));
    }
    let mut worst_lift: f64 = 0.0;
    for _ in 0..5 {
        let base = arclength_reparametrize(&random_smooth_loop(&mut rng, 2000, 2)).map_err(|e| e.to_string())?;
        let lift = arclength_reparametrize(&loops::lift_to_product_circle(&base)).map_err(|e| e.to_string())?;
        let l = measure(&lift.project().unwrap()).length;
        let e = measure(&lift).energy;
        worst_lift = worst_lift.max((e - 0.5 * (l * l + 1.0)).abs() / e);
    }
    check(
        worst_lift <= 1e-3,
        format!("100 loops, equality gap {worst_eq:.1e}; lift at N=2000 relative gap {worst_lift:.1e}"),
    )
}

fn criterion_8() -> Outcome {
    let t = octahedron();
    let cover = gromov::star_cover(&t).map_err(|e| e.to_string())?;
    let one = gromov::enumerate_bk(&t, &cover, 1).map_err(|e| e.to_string())?;
    let two = gromov::enumerate_bk(&t, &cover, 2).map_err(|e| e.to_string())?;
    if one.partial || two.partial {
        return Err("enumeration capped".into());
    }
    let failing: Vec<_> = one.cells.iter().filter(|c| gromov::legs_outside_skeleton(&t, c) > 2 * c.dim).collect();
    if !failing.is_empty() {
        return Err(format!("{} cells break N(γ) <= 2i", failing.len()));
    }
    let missing = gromov::inclusion_failures(&one.cells, &two.cells);
    check(
        missing.is_empty(),
        format!("{} cells at k=1 pass N(γ) <= 2i; {} of them refine into the {} cells at k=2", one.cells.len(), one.cells.len() - missing.len(), two.cells.len()),
    )
}

fn main() {
    let criteria: [(&str, Option<u64>, fn() -> Outcome); 8] = [
        ("Betti table reproduction", Some(10), criterion_1),
        ("odd-sphere pattern", Some(30), criterion_2),
        ("even-sphere Sullivan classes", None, criterion_3),
        ("growth bounds", None, criterion_4),
        ("Maslov indices", Some(20), criterion_5),
        ("Hamiltonian suite", Some(10), criterion_6),
        ("loop functional suite", Some(5), criterion_7),
        ("Gromov complex", Some(30), criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, budget, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let over = budget.is_some_and(|b| elapsed > Duration::from_secs(b));
        let (ok, detail) = match outcome {
            Ok(d) if !over => (true, d),
            Ok(d) => (false, format!("{d}; runtime over budget")),
            Err(d) => (false, d),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "{} criterion {}: {name}: {detail} [{:.2} s{}]",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            elapsed.as_secs_f64(),
            budget.map_or(String::new(), |b| format!(", budget {b} s"))
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
