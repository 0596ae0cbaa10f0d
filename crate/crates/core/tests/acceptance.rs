//! Acceptance harness: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Default scale n = 1024, r_max = 32, dt = 1e-3.

use equimap_core::diagnostics::{self, virial_balance_with_sign, M0_FLUX_SIGN};
use equimap_core::evolve::{run_pair, Snapshot};
use equimap_core::fixtures::{bump_amplitude_for_mass, bump_map};
use equimap_core::reconstruct::{energy_defect, round_trip};
use equimap_core::solitons::harmonicity_defect;
use equimap_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

const N: usize = 1024;
const R_MAX: f64 = 32.0;
const DT: f64 = 1e-3;

type Outcome = std::result::Result<String, String>;

/// Collects the individual checks of one criterion.
#[derive(Default)]
struct Checks {
    failed: Vec<String>,
    passed: Vec<String>,
}

impl Checks {
    fn check(&mut self, ok: bool, what: impl Into<String>) {
        let what = what.into();
        if ok {
            self.passed.push(what);
        } else {
            self.failed.push(what);
        }
    }

    fn finish(self) -> Outcome {
        if self.failed.is_empty() {
            Ok(self.passed.join("; "))
        } else {
            Err(format!("failed: {} | passed: {}", self.failed.join("; "), self.passed.join("; ")))
        }
    }
}

fn grid() -> RadialGrid {
    RadialGrid::new(N, R_MAX).unwrap()
}

fn rel_l2(a: &RadialField, b: &RadialField) -> f64 {
    a.sub(b).unwrap().l2() / b.l2()
}

fn bump_pair(g: &RadialGrid, a: f64) -> PsiPair {
    PsiPair::from_gauge(&extract_fields(&bump_map(g, a).unwrap()))
}

fn config(n: usize, r_max: f64, dt: f64, t_final: f64, stride: usize, snapshots: bool) -> EvolutionConfig {
    let mut c = EvolutionConfig::new(n, r_max, dt, t_final);
    c.monitor_stride = stride;
    c.keep_snapshots = snapshots;
    c
}

fn hankel_round_trip() -> Outcome {
    let g = grid();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut c = Checks::default();
    for order in [0, 2] {
        let plan = HankelPlan::with_default_band(order, &g).unwrap();
        let mut worst: f64 = 0.0;
        for _ in 0..10 {
            let coeffs: Vec<Complex64> = (0..plan.modes())
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let f = plan.synthesize(&coeffs).unwrap();
            let back = plan.inverse(&plan.forward(&f).unwrap()).unwrap();
            worst = worst.max(rel_l2(&back, &f));
        }
        c.check(worst <= 1e-10, format!("order {order} worst round trip {worst:.2e}"));
    }
    c.finish()
}

fn plancherel() -> Outcome {
    let g = grid();
    let mut c = Checks::default();
    let fixtures: [(i32, &str, fn(f64) -> f64); 4] = [
        (0, "e^{-r²/2}", |r| (-r * r / 2.0).exp()),
        (0, "(1-r²)e^{-r²}", |r| (1.0 - r * r) * (-r * r).exp()),
        (2, "r²e^{-r²/2}", |r| r * r * (-r * r / 2.0).exp()),
        (2, "r²e^{-r²}", |r| r * r * (-r * r).exp()),
    ];
    for (order, name, f) in fixtures {
        let plan = HankelPlan::with_default_band(order, &g).unwrap();
        let f = RadialField::from_real_fn(&g, f);
        let defect = (plan.spectral_norm(&plan.forward(&f).unwrap()) / f.l2() - 1.0).abs();
        c.check(defect <= 1e-6, format!("order {order} {name}: {defect:.2e}"));
    }
    c.finish()
}

fn free_propagator() -> Outcome {
    let g = grid();
    let plan = HankelPlan::with_default_band(0, &g).unwrap();
    let f = RadialField::from_real_fn(&g, |r| (-r * r / 2.0).exp());
    let exact = RadialField::from_fn(&g, |r| {
        let z = Complex64::new(1.0, 2.0);
        (-(r * r) / (2.0 * z)).exp() / z
    });
    let mut c = Checks::default();
    let err = rel_l2(&plan.free_propagate(&f, 1.0).unwrap(), &exact);
    c.check(err <= 1e-6, format!("Gaussian at t = 1: {err:.2e}"));
    let drift = (0..=20)
        .map(|k| (plan.free_propagate(&f, 0.5 * k as f64).unwrap().mass() / f.mass() - 1.0).abs())
        .fold(0.0, f64::max);
    c.check(drift <= 1e-9, format!("mass drift on [0, 10]: {drift:.2e}"));
    c.finish()
}

fn gauge_identities() -> Outcome {
    let g = grid();
    let map = bump_map(&g, 0.5).unwrap();
    let gs = extract_fields(&map);
    let mut c = Checks::default();
    let cons = gs.conservation_defect();
    c.check(cons <= 1e-8, format!("||ψ₂|²+A₂²−1| {cons:.2e}"));
    let a2 = gs.a2.iter().zip(map.u_bar()).map(|(a, u)| (a - u[2]).abs()).fold(0.0, f64::max);
    c.check(a2 <= 1e-10, format!("A₂ − ū₃ {a2:.2e}"));
    let e = energy(&map);
    let de = (PI * gs.psi_minus.mass() - e).abs();
    c.check(de <= 1e-5 * e, format!("|π‖ψ⁻‖² − E|/E {:.2e}", de / e));
    let mean = g.integrate_real(&gs.a0).abs();
    let scale = gs.psi1.mass() + gs.psi2_over_r().mass();
    c.check(mean <= 1e-8 * scale, format!("|∫A₀ r dr|/scale {:.2e}", mean / scale));
    c.finish()
}

fn soliton() -> Outcome {
    let g = grid();
    let q = soliton_map(SolitonParams::default(), &g).unwrap();
    let gs = extract_fields(&q);
    let mut c = Checks::default();
    let minus = gs.psi_minus.l2();
    c.check(minus <= 1e-6, format!("‖ψ⁻(Q)‖ {minus:.2e}"));
    let plus = PI * gs.psi_plus.mass() / (8.0 * PI) - 1.0;
    c.check(plus.abs() <= 1e-3, format!("π‖ψ⁺‖²/8π − 1 = {plus:.2e}"));
    let e = energy(&q) / (4.0 * PI) - 1.0;
    c.check(e.abs() <= 1e-3, format!("E/4π − 1 = {e:.2e}"));
    let h = harmonicity_defect(&q, 3);
    c.check(h <= 1e-5, format!("|ū×Δū| {h:.2e}"));
    c.finish()
}

fn reconstruction() -> Outcome {
    let g = grid();
    let mut c = Checks::default();
    for mass in [0.25, 3.5] {
        let a = bump_amplitude_for_mass(&g, mass).unwrap();
        let (err, rep) = round_trip(&bump_map(&g, a).unwrap()).unwrap();
        c.check(err <= 1e-5, format!("mass {mass}: sup |ū − ū'| {err:.2e}"));
        let de = energy_defect(&rep);
        c.check(de <= 1e-5, format!("mass {mass}: energy defect {de:.2e}"));
        let lp = lp_transfer_check(&rep.gauge.psi_minus, 2.0).unwrap();
        c.check(
            lp.weighted_excess <= 1e-8,
            format!("mass {mass}: pointwise bound excess {:.2e}", lp.weighted_excess),
        );
    }
    let shape = RadialField::from_real_fn(&g, |r| r * r * (-r * r / 2.0).exp());
    let mut exact = true;
    for target in [7.9, 7.999_999, 8.0, 8.000_001, 9.0] {
        let f = shape.scale(Complex64::new((target / shape.mass()).sqrt(), 0.0));
        let rejected = matches!(solve_gauge_from_psi_minus(&f), Err(Error::Threshold { .. }));
        exact &= rejected == (f.mass() >= 8.0);
    }
    c.check(exact, "threshold rejection iff ‖ψ⁻‖² ≥ 8");
    c.finish()
}

fn conservation(plans: &Propagators) -> Outcome {
    let s0 = bump_pair(plans.grid(), 0.5);
    let rec = run_pair(&s0, &config(N, R_MAX, DT, 1.0, 10, false), plans).unwrap();
    let m0 = rec.samples[0].mass_minus;
    let drift = rec
        .samples
        .iter()
        .map(|s| (s.mass_minus / m0 - 1.0).abs())
        .fold(0.0, f64::max);
    let equality = rec
        .samples
        .iter()
        .map(|s| (s.mass_plus - s.mass_minus).abs() / s.mass_minus)
        .fold(0.0, f64::max);
    let mut c = Checks::default();
    c.check(drift <= 1e-10, format!("mass drift over 1000 steps {drift:.2e}"));
    c.check(equality <= 1e-5, format!("|M⁺ − M⁻|/M {equality:.2e}"));
    c.finish()
}

fn compatibility(plans: &Propagators) -> Outcome {
    let s0 = bump_pair(plans.grid(), 0.5);
    let finals: Vec<f64> = [DT, DT / 2.0, DT / 4.0]
        .iter()
        .map(|&dt| {
            let stride = (0.5 / dt).round() as usize;
            let rec = run_pair(&s0, &config(N, R_MAX, dt, 1.0, stride, false), plans).unwrap();
            rec.samples.last().unwrap().compat_residual
        })
        .collect();
    let mut c = Checks::default();
    c.check(finals[0] <= 1e-4, format!("residual at T = 1 {:.2e}", finals[0]));
    for k in 0..2 {
        let ratio = finals[k] / finals[k + 1];
        c.check((3.4..=4.6).contains(&ratio), format!("halving ratio {ratio:.3}"));
    }
    c.finish()
}

fn symmetries(plans: &Propagators) -> Outcome {
    let s0 = bump_pair(plans.grid(), 0.5);
    let t = 0.25;
    let steps = (t / DT).round() as usize;
    let evolve = |s: &PsiPair, dt: f64, k: usize| evolve::evolve_steps(s, dt, k, plans).unwrap();
    let mut c = Checks::default();

    // S(4t)∘g₂ = g₂∘S(t), with time steps scaled along
    let lhs = evolve(&symmetry_transform(&s0, SymmetryAction::Scale(2.0), plans).unwrap(), 4.0 * DT, steps);
    let rhs = symmetry_transform(&evolve(&s0, DT, steps), SymmetryAction::Scale(2.0), plans).unwrap();
    let e = lhs.distance(&rhs).unwrap() / rhs.norm();
    c.check(e <= 1e-6, format!("scaling λ = 2: {e:.2e}"));

    let phase = SymmetryAction::Phase(0.7);
    let lhs = evolve(&symmetry_transform(&s0, phase, plans).unwrap(), DT, steps);
    let rhs = symmetry_transform(&evolve(&s0, DT, steps), phase, plans).unwrap();
    let e = lhs.distance(&rhs).unwrap() / rhs.norm();
    c.check(e <= 1e-6, format!("phase: {e:.2e}"));

    let forward = evolve(&s0, DT, 2 * steps);
    let reversed = symmetry_transform(&forward, SymmetryAction::TimeReverse, plans).unwrap();
    let back = symmetry_transform(&evolve(&reversed, DT, 2 * steps), SymmetryAction::TimeReverse, plans).unwrap();
    let e = back.distance(&s0).unwrap() / s0.norm();
    c.check(e <= 1e-8, format!("time reversal over T = {}: {e:.2e}", 2.0 * t));
    c.finish()
}

fn virial(plans: &Propagators) -> Outcome {
    let g = plans.grid().clone();
    let mut c = Checks::default();

    // σ from the oracle: the only sign that closes the local charge balance
    let s0 = bump_pair(&g, 0.5);
    let short = run_pair(&s0, &config(N, R_MAX, DT, 0.05, 1, true), plans).unwrap();
    let oracle: Vec<f64> = [1.0, -1.0]
        .iter()
        .filter(|&&s| {
            diagnostics::virial_local_charge_residual(&short.snapshots, Cutoff::Bump { scale: 1.0 }, s)
                .unwrap()
                .max_relative()
                <= 1e-3
        })
        .cloned()
        .collect();
    c.check(oracle == vec![SIGMA], format!("oracle σ set {oracle:?}, frozen σ = {SIGMA}"));

    let m = momenta(&s0.gauge()).unwrap();
    c.check(m.route_discrepancy <= 1e-5, format!("M₀ routes {:.2e}", m.route_discrepancy));

    let a = Cutoff::QuadraticBump { scale: 10.0 };
    for mass in [0.25, 3.0] {
        let amp = bump_amplitude_for_mass(&g, mass).unwrap();
        let s = bump_pair(&g, amp);
        let coarse_plans = Propagators::new(&RadialGrid::new(N / 2, R_MAX).unwrap(), None).unwrap();
        let coarse_s = bump_pair(coarse_plans.grid(), amp);
        let rec = run_pair(&s, &config(N, R_MAX, DT, 1.0, 10, true), plans).unwrap();
        let coarse = run_pair(&coarse_s, &config(N / 2, R_MAX, 2.0 * DT, 1.0, 5, true), &coarse_plans).unwrap();

        let local = diagnostics::virial_local_charge_residual(&rec.snapshots, Cutoff::Bump { scale: 10.0 }, SIGMA)
            .unwrap()
            .max_relative();
        c.check(local <= 1e-3, format!("mass {mass}: local charge residual {local:.2e}"));

        let fine_b = virial_balance_with_sign(&rec.snapshots, a, M0_FLUX_SIGN).unwrap();
        let coarse_b = virial_balance_with_sign(&coarse.snapshots, a, M0_FLUX_SIGN).unwrap();
        c.check(
            fine_b.closure_relative <= 1e-2,
            format!("mass {mass}: closure {:.2e}", fine_b.closure_relative),
        );
        let ratio = coarse_b.closure.abs() / fine_b.closure.abs();
        c.check(ratio >= 2.0, format!("mass {mass}: closure refinement ratio {ratio:.2}"));
        c.check(
            fine_b.sign_definite > 0.0 && fine_b.sign_definite >= 5.0 * fine_b.log_laplacian.abs(),
            format!(
                "mass {mass}: sign-definite {:.3e} vs log-Laplacian {:.1e}",
                fine_b.sign_definite, fine_b.log_laplacian
            ),
        );
    }
    c.finish()
}

fn decay() -> Outcome {
    let g = RadialGrid::new(2 * N, 2.0 * R_MAX).unwrap();
    let f = RadialField::from_real_fn(&g, |r| r * r * (-r * r).exp());
    let plan = HankelPlan::with_default_band(2, &g).unwrap();
    let times = [0.0, 0.5, 1.0, 2.0, 5.0, 10.0];
    let s = decay_probe(&f, &plan, &times).unwrap();
    let mut c = Checks::default();
    let worst = s.iter().cloned().fold(0.0, f64::max);
    c.check(worst <= f.l2() + 1e-8, format!("sup s(t) {worst:.3e} ≤ ‖f‖ {:.3e}", f.l2()));
    c.check(s[5] <= s[1] / 5.0, format!("s(0.5)/s(10) = {:.2}", s[1] / s[5]));
    c.finish()
}

fn scattering() -> Outcome {
    let g = grid();
    let plans = Propagators::new(&g, None).unwrap();
    let a = bump_amplitude_for_mass(&g, 0.1).unwrap();
    let s0 = bump_pair(&g, a);
    let rec = run_pair(&s0, &config(N, R_MAX, DT, 8.0, 500, true), &plans).unwrap();
    let at = |t: f64| rec.snapshots.iter().find(|s| (s.t - t).abs() < 1e-9).cloned().unwrap();
    let snaps: Vec<Snapshot> = [2.0, 4.0, 8.0].iter().map(|&t| at(t)).collect();
    let rep = scattering_probe(&snaps, &plans).unwrap();
    let acc = |t: f64| rec.samples.iter().find(|s| (s.t - t).abs() < 1e-9).unwrap().strichartz_accum;
    let (first, second) = (acc(0.5) - acc(0.0), acc(1.0) - acc(0.5));
    let mut c = Checks::default();
    let diffs: Vec<String> = rep.differences.iter().map(|d| format!("{d:.3e}")).collect();
    c.check(rep.strictly_decreasing(), format!("Cauchy differences {}", diffs.join(", ")));
    c.check(second < first, format!("Strichartz increments {first:.3e} then {second:.3e}"));
    c.finish()
}

fn main() {
    let total = Instant::now();
    let plans = Propagators::new(&grid(), None).unwrap();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("Hankel round trip", Box::new(hankel_round_trip)),
        ("Plancherel", Box::new(plancherel)),
        ("free propagator", Box::new(free_propagator)),
        ("gauge identities", Box::new(gauge_identities)),
        ("soliton", Box::new(soliton)),
        ("reconstruction", Box::new(reconstruction)),
        ("evolution conservation", Box::new(|| conservation(&plans))),
        ("compatibility propagation", Box::new(|| compatibility(&plans))),
        ("symmetry covariance", Box::new(|| symmetries(&plans))),
        ("virial suite", Box::new(|| virial(&plans))),
        ("decay probe", Box::new(decay)),
        ("small-data scattering", Box::new(scattering)),
    ];
    let mut failures = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS {name} ({secs:.1}s): {detail}", k + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {:>2} FAIL {name} ({secs:.1}s): {detail}", k + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failures} failed ({:.1}s)",
        criteria.len() - failures,
        total.elapsed().as_secs_f64()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
