//! Split-step integration of
//!   (i∂_t + H₂)ψ⁻ = V⁻ψ⁻,   (i∂_t + H₀)ψ⁺ = V⁺ψ⁺,
//! with V∓ = A₀ ∓ 2(A₂+1)/r² ∓ ℑ(ψ₂ψ̄∓)/r, plus run monitors, the scattering
//! probe and the symmetry actions.

use crate::error::{Error, Result};
use crate::gauge::{a0_from_g, a2_from_pair, compatibility_residual, GaugeState};
use crate::hankel::{default_xi_max, HankelPlan};
use crate::radial::{RadialField, RadialGrid};
use crate::stencil::{self, Parity};
use num_complex::Complex64;

/// Iteration cap for the implicit phase substep.
const PHASE_ITERATIONS: usize = 60;

/// The evolved pair (ψ⁺, ψ⁻).
#[derive(Debug, Clone)]
pub struct PsiPair {
    pub plus: RadialField,
    pub minus: RadialField,
}

impl PsiPair {
    pub fn new(plus: RadialField, minus: RadialField) -> Result<Self> {
        plus.grid().check(minus.grid())?;
        Ok(PsiPair { plus, minus })
    }

    pub fn zeros(grid: &RadialGrid) -> Self {
        PsiPair {
            plus: RadialField::zeros(grid),
            minus: RadialField::zeros(grid),
        }
    }

    pub fn from_gauge(g: &GaugeState) -> Self {
        PsiPair {
            plus: g.psi_plus.clone(),
            minus: g.psi_minus.clone(),
        }
    }

    pub fn grid(&self) -> &RadialGrid {
        self.plus.grid()
    }

    /// Complete gauge state (ψ₁, ψ₂, A₂, A₀) of the pair.
    pub fn gauge(&self) -> GaugeState {
        GaugeState::from_psi_pair(&self.plus, &self.minus).expect("pair shares one grid")
    }

    pub fn is_finite(&self) -> bool {
        self.plus.is_finite() && self.minus.is_finite()
    }

    /// sqrt(‖Δψ⁺‖² + ‖Δψ⁻‖²).
    pub fn distance(&self, other: &PsiPair) -> Result<f64> {
        let dp = self.plus.sub(&other.plus)?.mass();
        let dm = self.minus.sub(&other.minus)?.mass();
        Ok((dp + dm).sqrt())
    }

    pub fn norm(&self) -> f64 {
        (self.plus.mass() + self.minus.mass()).sqrt()
    }
}

/// Real potentials and the connection coefficients they were built from.
#[derive(Debug, Clone)]
pub struct Potentials {
    pub v_plus: Vec<f64>,
    pub v_minus: Vec<f64>,
    pub a2: Vec<f64>,
    pub a0: Vec<f64>,
}

/// V± from (ψ⁺, ψ⁻): ψ₂/r = (ψ⁺−ψ⁻)/(2i), A₂ = −1 + ¼∫₀^r(|ψ⁺|²−|ψ⁻|²)s ds,
/// A₀ = −½g − [r∂_r]⁻¹g with g = ℜ(ψ̄⁺ψ⁻).
pub fn compute_potentials(psi_plus: &RadialField, psi_minus: &RadialField) -> Result<Potentials> {
    psi_plus.grid().check(psi_minus.grid())?;
    Ok(potentials_unchecked(psi_plus, psi_minus))
}

fn potentials_unchecked(psi_plus: &RadialField, psi_minus: &RadialField) -> Potentials {
    let grid = psi_plus.grid();
    let r = grid.nodes();
    let (p, m) = (psi_plus.values(), psi_minus.values());
    let a2 = a2_from_pair(psi_plus, psi_minus);
    let g: Vec<f64> = p.iter().zip(m).map(|(p, m)| (p.conj() * m).re).collect();
    let a0 = a0_from_g(grid, &g);
    let two_i = Complex64::new(0.0, 2.0);
    let mut v_plus = Vec::with_capacity(grid.n());
    let mut v_minus = Vec::with_capacity(grid.n());
    for j in 0..grid.n() {
        let eta = (p[j] - m[j]) / two_i;
        let curv = 2.0 * (a2[j] + 1.0) / (r[j] * r[j]);
        v_minus.push(a0[j] - curv - (eta * m[j].conj()).im);
        v_plus.push(a0[j] + curv + (eta * p[j].conj()).im);
    }
    Potentials { v_plus, v_minus, a2, a0 }
}

/// The order-0 and order-2 plans driving ψ⁺ and ψ⁻.
#[derive(Debug, Clone)]
pub struct Propagators {
    pub plus: HankelPlan,
    pub minus: HankelPlan,
}

impl Propagators {
    pub fn new(grid: &RadialGrid, xi_max: Option<f64>) -> Result<Self> {
        let xi = xi_max.unwrap_or_else(|| default_xi_max(grid));
        Ok(Propagators {
            plus: HankelPlan::new(0, grid, xi)?,
            minus: HankelPlan::new(2, grid, xi)?,
        })
    }

    pub fn grid(&self) -> &RadialGrid {
        self.plus.grid()
    }

    /// (e^{itH₀}ψ⁺, e^{itH₂}ψ⁻).
    pub fn free(&self, state: &PsiPair, t: f64) -> Result<PsiPair> {
        Ok(PsiPair {
            plus: self.plus.free_propagate(&state.plus, t)?,
            minus: self.minus.free_propagate(&state.minus, t)?,
        })
    }
}

fn rotate(f: &RadialField, v: &[f64], w: &[f64], tau: f64) -> RadialField {
    let vals = f
        .values()
        .iter()
        .zip(v.iter().zip(w))
        .map(|(x, (a, b))| x * Complex64::from_polar(1.0, -0.5 * tau * (a + b)))
        .collect();
    RadialField::from_vec(f.grid(), vals)
}

/// Phase substep y = e^{−iτ(V(x)+V(y))/2} x, solved by fixed-point iteration.
/// It is an exact pointwise isometry, and its inverse is the same map with −τ,
/// which makes the Strang composition time-symmetric.
pub fn phase_substep(state: &PsiPair, tau: f64) -> PsiPair {
    let v0 = potentials_unchecked(&state.plus, &state.minus);
    let mut y = PsiPair {
        plus: rotate(&state.plus, &v0.v_plus, &v0.v_plus, tau),
        minus: rotate(&state.minus, &v0.v_minus, &v0.v_minus, tau),
    };
    let scale = state.norm().max(f64::MIN_POSITIVE);
    let mut last = f64::INFINITY;
    for _ in 0..PHASE_ITERATIONS {
        let v1 = potentials_unchecked(&y.plus, &y.minus);
        let next = PsiPair {
            plus: rotate(&state.plus, &v0.v_plus, &v1.v_plus, tau),
            minus: rotate(&state.minus, &v0.v_minus, &v1.v_minus, tau),
        };
        let inc = max_diff(&next, &y);
        y = next;
        // stop once at rounding level or when rounding noise stops the decrease
        if inc <= 1e-15 * scale || inc >= last {
            break;
        }
        last = inc;
    }
    y
}

fn max_diff(a: &PsiPair, b: &PsiPair) -> f64 {
    let d = |x: &RadialField, y: &RadialField| {
        x.values()
            .iter()
            .zip(y.values())
            .map(|(p, q)| (p - q).norm())
            .fold(0.0, f64::max)
    };
    d(&a.plus, &b.plus).max(d(&a.minus, &b.minus))
}

/// One step: half phase substep, free propagation over dt, half phase substep.
pub fn strang_step(state: &PsiPair, dt: f64, plans: &Propagators) -> Result<PsiPair> {
    plans.grid().check(state.grid())?;
    let half = phase_substep(state, 0.5 * dt);
    let moved = plans.free(&half, dt)?;
    Ok(phase_substep(&moved, 0.5 * dt))
}

/// Evolve `state` by `steps` steps of size dt (negative dt runs backward).
pub fn evolve_steps(state: &PsiPair, dt: f64, steps: usize, plans: &Propagators) -> Result<PsiPair> {
    let mut s = state.clone();
    for k in 0..steps {
        s = strang_step(&s, dt, plans)?;
        if !s.is_finite() {
            return Err(Error::NonFinite { t: (k + 1) as f64 * dt });
        }
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative mass drift that raises an alarm.
    pub mass_drift: f64,
    /// Compatibility residual that raises an alarm.
    pub compat_alarm: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            mass_drift: 1e-10,
            compat_alarm: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub t_final: f64,
    pub monitor_stride: usize,
    pub n: usize,
    pub r_max: f64,
    pub xi_max: Option<f64>,
    pub tolerances: Tolerances,
    /// Keep (ψ⁺, ψ⁻) at every monitored time.
    pub keep_snapshots: bool,
}

impl EvolutionConfig {
    pub fn new(n: usize, r_max: f64, dt: f64, t_final: f64) -> Self {
        EvolutionConfig {
            dt,
            t_final,
            monitor_stride: 1,
            n,
            r_max,
            xi_max: None,
            tolerances: Tolerances::default(),
            keep_snapshots: false,
        }
    }

    /// Number of steps; t_final/dt must be an integer up to rounding.
    pub fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.dt <= 0.1) {
            return Err(Error::InvalidArgument(format!("dt must lie in (0, 0.1], got {}", self.dt)));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "t_final must be positive, got {}",
                self.t_final
            )));
        }
        if self.monitor_stride == 0 {
            return Err(Error::InvalidArgument("monitor_stride must be positive".into()));
        }
        let k = self.t_final / self.dt;
        let steps = k.round();
        if (k - steps).abs() > 1e-9 * k.max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "t_final / dt = {k} is not an integer"
            )));
        }
        Ok(steps as usize)
    }
}

/// Monitored quantities at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorSample {
    pub t: f64,
    pub mass_minus: f64,
    pub mass_plus: f64,
    pub sup_a2: f64,
    pub compat_residual: f64,
    /// Running ∫∫|ψ⁻|⁴ r dr dt.
    pub strichartz_accum: f64,
    /// Running ∫∫|ψ⁺|⁴ r dr dt.
    pub strichartz_accum_plus: f64,
    /// π·mass_minus.
    pub energy_proxy: f64,
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub state: PsiPair,
}

#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub dt: f64,
    pub samples: Vec<MonitorSample>,
    pub snapshots: Vec<Snapshot>,
    /// (t, residual) whenever the compatibility residual exceeded its tolerance.
    pub compat_alarms: Vec<(f64, f64)>,
    /// (t, relative drift) whenever either mass drifted beyond its tolerance.
    pub mass_alarms: Vec<(f64, f64)>,
    pub final_state: PsiPair,
}

impl TrajectoryRecord {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    /// The CSV header used by the command-line tools.
    pub const CSV_HEADER: &'static str =
        "t,mass_minus,mass_plus,sup_a2,compat_residual,strichartz_accum,energy_proxy";

    /// Samples as CSV with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for s in &self.samples {
            let row = [
                s.t,
                s.mass_minus,
                s.mass_plus,
                s.sup_a2,
                s.compat_residual,
                s.strichartz_accum,
                s.energy_proxy,
            ]
            .iter()
            .map(|v| format!("{v:.16e}"))
            .collect::<Vec<_>>()
            .join(",");
            out.push_str(&row);
            out.push('\n');
        }
        out
    }
}

fn quartic(f: &RadialField) -> f64 {
    let q: Vec<f64> = f.values().iter().map(|v| v.norm_sqr().powi(2)).collect();
    f.grid().integrate_real(&q)
}

/// Run from a gauge state with plans built from the configuration.
pub fn run(initial: &GaugeState, config: &EvolutionConfig) -> Result<TrajectoryRecord> {
    let grid = RadialGrid::new(config.n, config.r_max)?;
    grid.check(initial.grid())?;
    let plans = Propagators::new(&grid, config.xi_max)?;
    run_pair(&PsiPair::from_gauge(initial), config, &plans)
}

/// Run from a (ψ⁺, ψ⁻) pair with prebuilt plans.
pub fn run_pair(initial: &PsiPair, config: &EvolutionConfig, plans: &Propagators) -> Result<TrajectoryRecord> {
    let steps = config.steps()?;
    plans.grid().check(initial.grid())?;
    if initial.minus.mass() >= crate::reconstruct::MASS_THRESHOLD {
        return Err(Error::Threshold {
            mass: initial.minus.mass(),
        });
    }
    let m0 = (initial.minus.mass(), initial.plus.mass());
    let mut state = initial.clone();
    let mut rec = TrajectoryRecord {
        dt: config.dt,
        samples: Vec::new(),
        snapshots: Vec::new(),
        compat_alarms: Vec::new(),
        mass_alarms: Vec::new(),
        final_state: initial.clone(),
    };
    let (mut acc_m, mut acc_p) = (0.0, 0.0);
    for k in 0..=steps {
        let t = k as f64 * config.dt;
        if k % config.monitor_stride == 0 || k == steps {
            monitor(&mut rec, &state, t, acc_m, acc_p, m0, config);
        }
        if k == steps {
            break;
        }
        acc_m += config.dt * quartic(&state.minus);
        acc_p += config.dt * quartic(&state.plus);
        state = strang_step(&state, config.dt, plans)?;
        if !state.is_finite() {
            return Err(Error::NonFinite { t: t + config.dt });
        }
    }
    rec.final_state = state;
    Ok(rec)
}

fn monitor(
    rec: &mut TrajectoryRecord,
    state: &PsiPair,
    t: f64,
    acc_m: f64,
    acc_p: f64,
    m0: (f64, f64),
    config: &EvolutionConfig,
) {
    let gauge = state.gauge();
    let (mm, mp) = (state.minus.mass(), state.plus.mass());
    let compat = compatibility_residual(&gauge);
    if compat > config.tolerances.compat_alarm {
        rec.compat_alarms.push((t, compat));
    }
    let drift = |now: f64, start: f64| if start > 0.0 { (now - start).abs() / start } else { now };
    let d = drift(mm, m0.0).max(drift(mp, m0.1));
    if d > config.tolerances.mass_drift {
        rec.mass_alarms.push((t, d));
    }
    rec.samples.push(MonitorSample {
        t,
        mass_minus: mm,
        mass_plus: mp,
        sup_a2: gauge.sup_a2(),
        compat_residual: compat,
        strichartz_accum: acc_m,
        strichartz_accum_plus: acc_p,
        energy_proxy: std::f64::consts::PI * mm,
    });
    if config.keep_snapshots {
        rec.snapshots.push(Snapshot { t, state: state.clone() });
    }
}

/// Cauchy-sequence proxy for scattering.
#[derive(Debug, Clone)]
pub struct ScatteringReport {
    pub times: Vec<f64>,
    /// ‖φ(t_{k+1}) − φ(t_k)‖ for consecutive snapshots, φ± = e^{−itH±}ψ±(t).
    pub differences: Vec<f64>,
    /// ‖∂_r[r(φ⁺ − φ⁻)] − (φ⁺ + φ⁻)‖ / (‖φ⁺‖ + ‖φ⁻‖) at the latest snapshot.
    pub relation_residual: f64,
}

impl ScatteringReport {
    pub fn strictly_decreasing(&self) -> bool {
        self.differences.windows(2).all(|w| w[1] < w[0])
    }
}

pub fn scattering_probe(snapshots: &[Snapshot], plans: &Propagators) -> Result<ScatteringReport> {
    if snapshots.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "scattering probe needs at least two snapshots, got {}",
            snapshots.len()
        )));
    }
    if snapshots.windows(2).any(|w| w[1].t <= w[0].t) {
        return Err(Error::InvalidArgument("snapshot times must increase".into()));
    }
    let profiles = snapshots
        .iter()
        .map(|s| plans.free(&s.state, -s.t))
        .collect::<Result<Vec<_>>>()?;
    let differences = profiles
        .windows(2)
        .map(|w| w[1].distance(&w[0]))
        .collect::<Result<Vec<_>>>()?;
    let last = profiles.last().expect("at least two");
    let grid = last.grid();
    let r = grid.nodes();
    let diff: Vec<Complex64> = (0..grid.n())
        .map(|j| (last.plus.values()[j] - last.minus.values()[j]) * r[j])
        .collect();
    let d = stencil::differentiate(&diff, grid.spacing(), 1, Parity::Odd);
    let res: Vec<f64> = (0..grid.n())
        .map(|j| (d[j] - last.plus.values()[j] - last.minus.values()[j]).norm_sqr())
        .collect();
    let num = grid.integrate_real(&res).max(0.0).sqrt();
    let den = last.plus.l2() + last.minus.l2();
    Ok(ScatteringReport {
        times: snapshots.iter().map(|s| s.t).collect(),
        differences,
        relation_residual: if den > 0.0 { num / den } else { num },
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SymmetryAction {
    /// f → λ⁻¹ f(r/λ)
    Scale(f64),
    /// f → e^{iα} f
    Phase(f64),
    /// f → f̄, to be evolved forward again
    TimeReverse,
}

/// L² tail threshold defining the numerical support of a field.
const SUPPORT_TAIL: f64 = 1e-9;

/// Smallest node radius beyond which the L² tail of f is ≤ 1e-9‖f‖.
pub fn numerical_support(f: &RadialField) -> f64 {
    let grid = f.grid();
    let total = f.mass();
    if total == 0.0 {
        return 0.0;
    }
    let dens: Vec<f64> = f.abs_sq().iter().zip(grid.weights()).map(|(a, w)| a * w).collect();
    let limit = SUPPORT_TAIL * SUPPORT_TAIL * total;
    let mut tail = 0.0;
    for j in (0..grid.n()).rev() {
        tail += dens[j];
        if tail > limit {
            return grid.nodes()[j];
        }
    }
    0.0
}

pub fn symmetry_transform(state: &PsiPair, action: SymmetryAction, plans: &Propagators) -> Result<PsiPair> {
    plans.grid().check(state.grid())?;
    match action {
        SymmetryAction::Phase(alpha) => {
            let e = Complex64::from_polar(1.0, alpha);
            Ok(PsiPair {
                plus: state.plus.scale(e),
                minus: state.minus.scale(e),
            })
        }
        SymmetryAction::TimeReverse => Ok(PsiPair {
            plus: state.plus.conj(),
            minus: state.minus.conj(),
        }),
        SymmetryAction::Scale(lambda) => {
            if !(lambda > 0.0 && lambda.is_finite()) {
                return Err(Error::InvalidArgument(format!("scale must be positive, got {lambda}")));
            }
            if lambda == 1.0 {
                return Ok(state.clone());
            }
            let grid = state.grid();
            let supp = numerical_support(&state.plus).max(numerical_support(&state.minus));
            if lambda * supp > 0.5 * grid.r_max() {
                return Err(Error::InvalidArgument(format!(
                    "scaling by {lambda} moves the support ({supp:.3}) beyond r_max/2 = {}",
                    0.5 * grid.r_max()
                )));
            }
            // the Bessel series does not vanish past r_max, but the field does
            let inside = grid.nodes().iter().take_while(|&&r| r / lambda < grid.r_max()).count();
            let radii: Vec<f64> = grid.nodes()[..inside].iter().map(|r| r / lambda).collect();
            let resample = |plan: &HankelPlan, f: &RadialField| -> Result<RadialField> {
                let mut v: Vec<Complex64> = plan.evaluate(f, &radii)?.into_iter().map(|x| x / lambda).collect();
                v.resize(grid.n(), Complex64::new(0.0, 0.0));
                Ok(RadialField::from_vec(grid, v))
            };
            Ok(PsiPair {
                plus: resample(&plans.plus, &state.plus)?,
                minus: resample(&plans.minus, &state.minus)?,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::bump_psi_pair;

    fn setup(n: usize, r_max: f64, a: f64) -> (PsiPair, Propagators) {
        let g = RadialGrid::new(n, r_max).unwrap();
        let (p, m) = bump_psi_pair(&g, a);
        (PsiPair::new(p, m).unwrap(), Propagators::new(&g, None).unwrap())
    }

    #[test]
    fn zero_data_stays_zero() {
        let g = RadialGrid::new(64, 8.0).unwrap();
        let plans = Propagators::new(&g, None).unwrap();
        let z = PsiPair::zeros(&g);
        let pot = compute_potentials(&z.plus, &z.minus).unwrap();
        assert!(pot.v_plus.iter().chain(&pot.v_minus).all(|&v| v == 0.0));
        let s = strang_step(&z, 1e-3, &plans).unwrap();
        assert_eq!(s.norm(), 0.0);
    }

    #[test]
    fn phase_substep_is_isometric_and_reversible() {
        let (s, _) = setup(256, 16.0, 0.5);
        let y = phase_substep(&s, 0.01);
        for (a, b) in y.minus.values().iter().zip(s.minus.values()) {
            assert!((a.norm() - b.norm()).abs() < 1e-15);
        }
        let back = phase_substep(&y, -0.01);
        assert!(back.distance(&s).unwrap() < 1e-14);
    }

    #[test]
    fn a0_has_zero_mean_on_bump_pair() {
        let (s, _) = setup(1024, 32.0, 0.5);
        let pot = compute_potentials(&s.plus, &s.minus).unwrap();
        let mean = s.grid().integrate_real(&pot.a0);
        assert!(mean.abs() <= 1e-8 * s.plus.l2() * s.minus.l2(), "{mean}");
    }

    #[test]
    fn short_run_conserves_mass() {
        let (s, plans) = setup(256, 16.0, 0.5);
        let mut cfg = EvolutionConfig::new(256, 16.0, 1e-2, 0.2);
        cfg.monitor_stride = 5;
        let rec = run_pair(&s, &cfg, &plans).unwrap();
        assert_eq!(rec.samples.len(), 5);
        let first = rec.samples[0];
        let last = rec.samples.last().unwrap();
        assert!(((last.mass_minus - first.mass_minus) / first.mass_minus).abs() < 1e-12);
        assert!(rec.samples.windows(2).all(|w| w[1].strichartz_accum >= w[0].strichartz_accum));
        assert!(rec.to_csv().starts_with(TrajectoryRecord::CSV_HEADER));
    }

    #[test]
    fn config_validation() {
        assert!(EvolutionConfig::new(64, 8.0, 0.2, 1.0).steps().is_err());
        assert!(EvolutionConfig::new(64, 8.0, 0.03, 0.1).steps().is_err());
        assert_eq!(EvolutionConfig::new(64, 8.0, 0.001, 1.0).steps().unwrap(), 1000);
    }

    #[test]
    fn symmetry_actions() {
        let (s, plans) = setup(512, 32.0, 0.5);
        assert!(symmetry_transform(&s, SymmetryAction::Scale(1.0), &plans).unwrap().distance(&s).unwrap() == 0.0);
        let scaled = symmetry_transform(&s, SymmetryAction::Scale(2.0), &plans).unwrap();
        assert!((scaled.minus.mass() / s.minus.mass() - 1.0).abs() < 1e-8);
        assert!(symmetry_transform(&s, SymmetryAction::Scale(4.0), &plans).is_err());
        let back = symmetry_transform(&scaled, SymmetryAction::Scale(0.5), &plans).unwrap();
        assert!(back.distance(&s).unwrap() < 1e-8 * s.norm());
        assert!(scattering_probe(&[], &plans).is_err());
    }
}
