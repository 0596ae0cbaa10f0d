//! `equimap`: scenario runner for the equivariant Schrödinger map numerics.

mod config;
mod io;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use config::{InitKind, RunConfig};
use equimap_core::diagnostics::{self, virial_balance};
use equimap_core::fixtures::{bump_amplitude_for_mass, bump_map};
use equimap_core::reconstruct::energy_defect;
use equimap_core::solitons::{harmonicity_defect, soliton_profile};
use equimap_core::*;
use rayon::prelude::*;
use serde_json::json;
use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "equimap", version, about = "Coulomb-gauge numerics for 1-equivariant Schrödinger maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Map → gauge fields report.
    Gauge(GaugeArgs),
    /// ψ⁻ → (ψ₂, A₂, map) round-trip report.
    Reconstruct(ReconstructArgs),
    /// Time integration with monitors.
    Evolve(EvolveArgs),
    /// Virial balances of a saved trajectory.
    Virial(VirialArgs),
    /// Emit soliton profiles.
    Soliton(SolitonArgs),
    /// dt or grid refinement study.
    Convergence(ConvergenceArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MapKind {
    Bump,
    Soliton,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long, default_value_t = 1024)]
    n: usize,
    #[arg(long = "rmax", default_value_t = 32.0)]
    r_max: f64,
}

impl GridArgs {
    fn grid(&self) -> Result<RadialGrid> {
        Ok(RadialGrid::new(self.n, self.r_max)?)
    }
}

#[derive(Args)]
struct MapArgs {
    #[arg(long, value_enum, default_value = "bump")]
    map: MapKind,
    /// Bump amplitude.
    #[arg(long, default_value_t = 0.5)]
    a: f64,
    /// Soliton scale.
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Soliton rotation angle.
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
}

impl MapArgs {
    fn build(&self, grid: &RadialGrid) -> Result<MapState> {
        Ok(match self.map {
            MapKind::Bump => bump_map(grid, self.a)?,
            MapKind::Soliton => soliton_map(SolitonParams::new(self.lambda, self.alpha)?, grid)?,
        })
    }
}

#[derive(Args)]
struct GaugeArgs {
    #[command(flatten)]
    map: MapArgs,
    #[command(flatten)]
    grid: GridArgs,
    /// Report path (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write ψ⁻ as `r value_re value_im` lines.
    #[arg(long)]
    psi_minus_out: Option<PathBuf>,
}

#[derive(Args)]
struct ReconstructArgs {
    #[command(flatten)]
    map: MapArgs,
    #[command(flatten)]
    grid: GridArgs,
    /// Read ψ⁻ from a field file instead of building a map.
    #[arg(long, conflicts_with = "map")]
    psi_minus: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvolveArgs {
    #[arg(long)]
    config: PathBuf,
    /// CSV path; overrides outputs.trajectory_path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report path; overrides outputs.report_path.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Snapshot path; overrides outputs.snapshot_path.
    #[arg(long)]
    snapshots: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CutoffKind {
    Constant,
    Bump,
    Quadratic,
}

#[derive(Args)]
struct VirialArgs {
    /// Snapshot file written by `evolve`.
    #[arg(long)]
    trajectory: PathBuf,
    /// Cutoff for the momentum ledger.
    #[arg(long, value_enum, default_value = "quadratic")]
    cutoff: CutoffKind,
    /// Cutoff for the local charge balance.
    #[arg(long, value_enum, default_value = "bump")]
    charge_cutoff: CutoffKind,
    #[arg(long, default_value_t = 10.0)]
    scale: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolitonArgs {
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    #[command(flatten)]
    grid: GridArgs,
    /// Profile CSV path (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a JSON report of the soliton checks.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Refine {
    Dt,
    Grid,
}

#[derive(Args)]
struct ConvergenceArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_enum, default_value = "dt")]
    refine: Refine,
    /// Number of refinement levels (each halves dt or doubles n).
    #[arg(long, default_value_t = 3)]
    levels: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn cutoff(kind: CutoffKind, scale: f64) -> Cutoff {
    match kind {
        CutoffKind::Constant => Cutoff::Constant,
        CutoffKind::Bump => Cutoff::Bump { scale },
        CutoffKind::Quadratic => Cutoff::QuadraticBump { scale },
    }
}

/// Worker count from EQUIMAP_THREADS, if set.
fn thread_cap() -> Result<Option<usize>> {
    match std::env::var("EQUIMAP_THREADS") {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => bail!("EQUIMAP_THREADS: {e}"),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(k) if k > 0 => Ok(Some(k)),
            _ => bail!("EQUIMAP_THREADS: expected a positive integer, got `{s}`"),
        },
    }
}

fn gauge(args: &GaugeArgs) -> Result<()> {
    let grid = args.grid.grid()?;
    let map = args.map.build(&grid)?;
    let gs = extract_fields(&map);
    let e = energy(&map);
    let mass = gs.psi_minus.mass();
    if let Some(p) = &args.psi_minus_out {
        io::write_text(p, &io::format_field(&gs.psi_minus))?;
    }
    let report = json!({
        "mass": mass,
        "mass_plus": gs.psi_plus.mass(),
        "energy": e,
        "energy_identity_defect": if e > 0.0 { (PI * mass - e).abs() / e } else { (PI * mass).abs() },
        "compat_residual": compatibility_residual(&gs),
        "sup_a2": gs.sup_a2(),
        "conservation_defect": gs.conservation_defect(),
        "a0_mean": grid.integrate_real(&gs.a0),
    });
    io::emit_json(&report, args.out.as_deref())
}

fn reconstruct_cmd(args: &ReconstructArgs) -> Result<()> {
    let grid = args.grid.grid()?;
    let (psi_minus, original) = match &args.psi_minus {
        Some(p) => (io::read_field(p, &grid)?, None),
        None => {
            let map = args.map.build(&grid)?;
            (extract_fields(&map).psi_minus, Some(map))
        }
    };
    let rep = reconstruct(&psi_minus)?;
    // against the source map when there is one, else ψ⁻ after map → fields
    let roundtrip = match &original {
        Some(m) => m.sup_distance(&rep.map),
        None => {
            let again = extract_fields(&rep.map).psi_minus;
            again.sub(&psi_minus)?.values().iter().map(|v| v.norm()).fold(0.0, f64::max)
        }
    };
    let report = json!({
        "mass": rep.mass,
        "energy": energy(&rep.map),
        "roundtrip_sup_error": roundtrip,
        "compat_residual": rep.residuals.compatibility,
        "sup_a2": rep.sup_a2,
        "energy_defect": energy_defect(&rep),
        "ode_residual": rep.residuals.ode,
        "conservation_defect": rep.residuals.conservation,
        "fixed_point_iterations": rep.fixed_point_iterations,
        "outer_start": rep.outer_start,
    });
    io::emit_json(&report, args.out.as_deref())
}

fn initial_state(cfg: &RunConfig, grid: &RadialGrid) -> Result<GaugeState> {
    Ok(match &cfg.init.kind {
        InitKind::MapBump { a } => {
            let a = match cfg.init.mass_rescale {
                Some(m) => bump_amplitude_for_mass(grid, m)?,
                None => *a,
            };
            extract_fields(&bump_map(grid, a)?)
        }
        InitKind::PsiMinusFile { path } => {
            let mut f = io::read_field(path, grid)?;
            if let Some(m) = cfg.init.mass_rescale {
                let current = f.mass();
                if current == 0.0 {
                    bail!("init.mass_rescale: cannot rescale a zero field");
                }
                f = f.scale(Complex64::new((m / current).sqrt(), 0.0));
            }
            solve_gauge_from_psi_minus(&f)?
        }
        InitKind::Zero => PsiPair::zeros(grid).gauge(),
    })
}

fn run_report(rec: &TrajectoryRecord, steps: usize) -> serde_json::Value {
    let first = rec.samples.first().expect("at least the initial sample");
    let last = rec.samples.last().expect("at least the initial sample");
    let m0 = first.mass_minus;
    let drift = rec
        .samples
        .iter()
        .map(|s| if m0 > 0.0 { (s.mass_minus / m0 - 1.0).abs() } else { s.mass_minus })
        .fold(0.0, f64::max);
    json!({
        "mass": last.mass_minus,
        "energy": last.energy_proxy,
        "compat_residual": last.compat_residual,
        "sup_a2": rec.samples.iter().map(|s| s.sup_a2).fold(f64::NEG_INFINITY, f64::max),
        "mass_initial": m0,
        "mass_drift": drift,
        "mass_plus": last.mass_plus,
        "strichartz_accum": last.strichartz_accum,
        "steps": steps,
        "t_final": last.t,
        "compat_alarms": rec.compat_alarms.len(),
        "mass_alarms": rec.mass_alarms.len(),
    })
}

fn evolve_cmd(args: &EvolveArgs) -> Result<()> {
    let mut cfg = RunConfig::load(&args.config)?;
    if args.snapshots.is_some() {
        cfg.outputs.snapshot_path = args.snapshots.clone();
    }
    let grid = RadialGrid::new(cfg.grid.n, cfg.grid.r_max)?;
    let initial = initial_state(&cfg, &grid)?;
    let evo = cfg.evolution();
    let steps = evo.steps()?;
    let rec = run(&initial, &evo)?;
    let csv = rec.to_csv();
    match args.out.as_ref().or(cfg.outputs.trajectory_path.as_ref()) {
        Some(p) => io::write_text(p, &csv)?,
        None => print!("{csv}"),
    }
    if let Some(p) = args.report.as_ref().or(cfg.outputs.report_path.as_ref()) {
        io::emit_json(&run_report(&rec, steps), Some(p))?;
    }
    if let Some(p) = &cfg.outputs.snapshot_path {
        let stored = io::StoredTrajectory::new(&grid, evo.dt, &rec.snapshots);
        io::write_text(p, &(serde_json::to_string(&stored)? + "\n"))?;
    }
    Ok(())
}

fn virial_cmd(args: &VirialArgs) -> Result<()> {
    let (_, snaps) = io::StoredTrajectory::load(&args.trajectory)?;
    let local = diagnostics::virial_local_charge_residual(&snaps, cutoff(args.charge_cutoff, args.scale), SIGMA)?;
    let b = virial_balance(&snaps, cutoff(args.cutoff, args.scale))?;
    let routes = snaps
        .iter()
        .map(|s| momenta(&s.state.gauge()).map(|m| m.route_discrepancy))
        .collect::<equimap_core::Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let report = json!({
        "sigma": SIGMA,
        "m0_sign": b.m0_sign,
        "snapshots": snaps.len(),
        "local_charge_max_relative": local.max_relative(),
        "m0_route_discrepancy": routes,
        "boundary": b.boundary,
        "bulk": b.bulk,
        "log_laplacian": b.log_laplacian,
        "sign_definite": b.sign_definite,
        "a0_term": b.a0_term,
        "closure": b.closure,
        "closure_relative": b.closure_relative,
        "split_defect": b.split_defect,
        "pointwise_relative": b.pointwise_relative,
    });
    io::emit_json(&report, args.out.as_deref())
}

fn soliton_cmd(args: &SolitonArgs) -> Result<()> {
    let grid = args.grid.grid()?;
    let params = SolitonParams::new(args.lambda, args.alpha)?;
    let map = soliton_map(params, &grid)?;
    let gs = extract_fields(&map);
    let u = soliton_profile(params, &grid);
    let mut csv = String::from("r,u1,u2,u3,psi2_re,psi2_im,a2,psi_plus_re,psi_plus_im,psi_minus_re,psi_minus_im\n");
    for j in 0..grid.n() {
        let (p2, pp, pm) = (gs.psi2.values()[j], gs.psi_plus.values()[j], gs.psi_minus.values()[j]);
        let row = [
            grid.nodes()[j], u[j][0], u[j][1], u[j][2], p2.re, p2.im, gs.a2[j], pp.re, pp.im, pm.re, pm.im,
        ];
        let cells: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
        csv.push_str(&cells.join(","));
        csv.push('\n');
    }
    match &args.out {
        Some(p) => io::write_text(p, &csv)?,
        None => print!("{csv}"),
    }
    if let Some(p) = &args.report {
        let report = json!({
            "lambda": args.lambda,
            "alpha": args.alpha,
            "psi_minus_norm": gs.psi_minus.l2(),
            "plus_mass_times_pi": PI * gs.psi_plus.mass(),
            "energy": energy(&map),
            "harmonicity_defect": harmonicity_defect(&map, 3),
        });
        io::emit_json(&report, Some(p))?;
    }
    Ok(())
}

struct Level {
    n: usize,
    dt: f64,
    final_state: PsiPair,
    compat: f64,
    mass_drift: f64,
    mass_equality: f64,
}

fn convergence_cmd(args: &ConvergenceArgs) -> Result<()> {
    if !(2..=6).contains(&args.levels) {
        bail!("--levels must lie in [2, 6], got {}", args.levels);
    }
    let cfg = RunConfig::load(&args.config)?;
    let specs: Vec<(usize, f64)> = (0..args.levels)
        .map(|k| match args.refine {
            Refine::Dt => (cfg.grid.n, cfg.time.dt / f64::powi(2.0, k as i32)),
            Refine::Grid => (cfg.grid.n << k, cfg.time.dt),
        })
        .collect();
    let run_level = |&(n, dt): &(usize, f64)| -> Result<Level> {
        let mut c = cfg.clone();
        c.grid.n = n;
        c.time.dt = dt;
        // keep the monitored times fixed across levels
        c.time.monitor_stride = cfg.time.monitor_stride * (cfg.time.dt / dt).round() as usize;
        c.outputs.snapshot_path = None;
        let grid = RadialGrid::new(n, c.grid.r_max)?;
        let rec = run(&initial_state(&c, &grid)?, &c.evolution())?;
        let m0 = rec.samples[0].mass_minus;
        Ok(Level {
            n,
            dt,
            compat: rec.samples.last().unwrap().compat_residual,
            mass_drift: rec.samples.iter().map(|s| (s.mass_minus - m0).abs() / m0.max(f64::MIN_POSITIVE)).fold(0.0, f64::max),
            mass_equality: rec
                .samples
                .iter()
                .map(|s| (s.mass_plus - s.mass_minus).abs() / s.mass_minus.max(f64::MIN_POSITIVE))
                .fold(0.0, f64::max),
            final_state: rec.final_state,
        })
    };
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(k) = thread_cap()? {
            b = b.num_threads(k);
        }
        b.build().context("cannot start worker threads")?
    };
    let levels = pool.install(|| specs.par_iter().map(run_level).collect::<Result<Vec<_>>>())?;

    let mut differences = Vec::new();
    if args.refine == Refine::Dt {
        for w in levels.windows(2) {
            differences.push(w[0].final_state.distance(&w[1].final_state)?);
        }
    }
    let ratios = |v: &[f64]| -> Vec<f64> { v.windows(2).map(|w| w[0] / w[1]).collect() };
    let compat: Vec<f64> = levels.iter().map(|l| l.compat).collect();
    let report = json!({
        "refine": match args.refine { Refine::Dt => "dt", Refine::Grid => "grid" },
        "levels": levels.iter().map(|l| json!({
            "n": l.n,
            "dt": l.dt,
            "compat_residual": l.compat,
            "mass_drift": l.mass_drift,
            "mass_equality": l.mass_equality,
            "mass": l.final_state.minus.mass(),
        })).collect::<Vec<_>>(),
        "self_differences": differences,
        "self_ratios": ratios(&differences),
        "compat_ratios": ratios(&compat),
    });
    io::emit_json(&report, args.out.as_deref())
}

fn dispatch(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Gauge(a) => gauge(a),
        Command::Reconstruct(a) => reconstruct_cmd(a),
        Command::Evolve(a) => evolve_cmd(a),
        Command::Virial(a) => virial_cmd(a),
        Command::Soliton(a) => soliton_cmd(a),
        Command::Convergence(a) => convergence_cmd(a),
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("error: {}", one_line(first.trim_start_matches("error: ")));
            return ExitCode::from(2);
        }
    };
    // the worker cap applies to the global pool as well
    if let Ok(Some(k)) = thread_cap() {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", one_line(&format!("{e:#}")));
            ExitCode::FAILURE
        }
    }
}
