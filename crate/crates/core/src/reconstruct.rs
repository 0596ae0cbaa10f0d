//! Gauge → map: recover (ψ₂, A₂) from ψ⁻ by solving
//!   ∂_rψ₂ = iA₂ψ⁻ − A₂ψ₂/r,   ∂_rA₂ = ℑ(ψ⁻ψ̄₂) + |ψ₂|²/r
//! from r_max inward, complete the gauge, and rebuild the map and its frame.

use crate::error::{Error, Result};
use crate::gauge::{
    a0_from_g, compatibility_residual, energy, extract_fields, reorthonormalize, GaugeState,
    MapState, Vec3,
};
use crate::radial::{RadialField, RadialGrid};
use crate::stencil::{self, Parity};
use num_complex::Complex64;

/// ‖ψ⁻‖² at or above this value has no solution of the reconstruction system.
pub const MASS_THRESHOLD: f64 = 8.0;
/// The fixed-point region is where the pointwise majorant of |ψ₂| stays below this.
pub const OUTER_MAJORANT: f64 = 0.5;
pub const FIXED_POINT_TOL: f64 = 1e-12;
pub const FIXED_POINT_CAP: usize = 100;

/// Everything produced by a ψ⁻ → map reconstruction.
#[derive(Debug, Clone)]
pub struct ReconstructionReport {
    pub gauge: GaugeState,
    pub map: MapState,
    pub sup_a2: f64,
    pub mass: f64,
    pub fixed_point_iterations: usize,
    /// First node of the fixed-point region; nodes below it are integrated inward.
    pub outer_start: usize,
    pub residuals: ReconstructionResiduals,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructionResiduals {
    /// ‖∂_rψ₂ − iA₂ψ₁‖ by finite differences, relative to ‖ψ⁻‖.
    pub ode: f64,
    pub conservation: f64,
    pub compatibility: f64,
}

/// Details of the gauge solve alongside its result.
#[derive(Debug, Clone)]
pub struct GaugeSolve {
    pub gauge: GaugeState,
    pub fixed_point_iterations: usize,
    pub outer_start: usize,
}

/// r ∫_r^{r_max} |f(s)|/s ds at every node: the pointwise majorant of |ψ₂|.
pub fn psi2_majorant(psi_minus: &RadialField) -> Vec<f64> {
    let grid = psi_minus.grid();
    let f: Vec<f64> = psi_minus
        .values()
        .iter()
        .zip(grid.nodes())
        .map(|(v, r)| v.norm() / r)
        .collect();
    // |ψ⁻| is even but not smooth where ψ⁻ vanishes; one-sided stencils avoid ringing there
    stencil::cumulative_to_end(&f, grid.spacing(), Parity::None)
        .into_iter()
        .zip(grid.nodes())
        .map(|(v, r)| (v * r).max(0.0))
        .collect()
}

pub fn solve_gauge_from_psi_minus(psi_minus: &RadialField) -> Result<GaugeState> {
    solve_gauge_detailed(psi_minus).map(|s| s.gauge)
}

/// As [`solve_gauge_from_psi_minus`], also reporting the fixed-point work.
pub fn solve_gauge_detailed(psi_minus: &RadialField) -> Result<GaugeSolve> {
    if !psi_minus.is_finite() {
        return Err(Error::InvalidArgument("psi_minus has non-finite entries".into()));
    }
    let mass = psi_minus.mass();
    if mass >= MASS_THRESHOLD {
        return Err(Error::Threshold { mass });
    }
    let grid = psi_minus.grid().clone();
    let n = grid.n();
    let majorant = psi2_majorant(psi_minus);
    let mut start = n - 1;
    while start > 0 && majorant[start - 1] <= OUTER_MAJORANT {
        start -= 1;
    }

    let mut psi2 = vec![Complex64::new(0.0, 0.0); n];
    let mut a2 = vec![-1.0; n];
    let iterations = outer_fixed_point(&grid, psi_minus.values(), start, &mut psi2, &mut a2)?;
    integrate_inward(&grid, psi_minus.values(), start, &mut psi2, &mut a2);

    let i = Complex64::new(0.0, 1.0);
    let r = grid.nodes();
    let minus = psi_minus.values();
    let plus: Vec<Complex64> = (0..n).map(|j| minus[j] + 2.0 * i * psi2[j] / r[j]).collect();
    let psi1: Vec<Complex64> = (0..n).map(|j| minus[j] + i * psi2[j] / r[j]).collect();
    let g: Vec<f64> = (0..n).map(|j| (plus[j].conj() * minus[j]).re).collect();
    let a0 = a0_from_g(&grid, &g);
    let gauge = GaugeState {
        psi1: RadialField::from_vec(&grid, psi1),
        psi2: RadialField::from_vec(&grid, psi2),
        psi_plus: RadialField::from_vec(&grid, plus),
        psi_minus: psi_minus.clone(),
        a2,
        a0,
    };
    Ok(GaugeSolve {
        gauge,
        fixed_point_iterations: iterations,
        outer_start: start,
    })
}

/// Iterate ψ₂ = r[r∂_r]⁻¹(−iψ⁻ + i(A₂+1)ψ⁻ − (A₂+1)ψ₂/r), A₂ = −√(1−|ψ₂|²),
/// on nodes start..n.
fn outer_fixed_point(
    grid: &RadialGrid,
    minus: &[Complex64],
    start: usize,
    psi2: &mut [Complex64],
    a2: &mut [f64],
) -> Result<usize> {
    let i = Complex64::new(0.0, 1.0);
    let r = &grid.nodes()[start..];
    let w = &grid.weights()[start..];
    let m = &minus[start..];
    // the integrand (·)/s is odd when the region reaches the origin
    let parity = if start == 0 { Parity::Odd } else { Parity::None };
    let mut trace = Vec::new();
    for it in 1..=FIXED_POINT_CAP {
        let f: Vec<Complex64> = (0..r.len())
            .map(|k| {
                let j = start + k;
                let b = a2[j] + 1.0;
                (-i * m[k] + i * b * m[k] - b * psi2[j] / r[k]) / r[k]
            })
            .collect();
        let tail = stencil::cumulative_to_end(&f, grid.spacing(), parity);
        let mut inc = 0.0;
        for k in 0..r.len() {
            let j = start + k;
            let new = -tail[k] * r[k];
            let m2 = new.norm_sqr();
            if m2 >= 1.0 {
                return Err(Error::Admissibility(format!(
                    "|psi2| reached {:.6} at r = {:.6} inside the outer region",
                    m2.sqrt(),
                    r[k]
                )));
            }
            inc += (new - psi2[j]).norm_sqr() * w[k];
            psi2[j] = new;
            a2[j] = -(1.0 - m2).sqrt();
        }
        let inc = inc.sqrt();
        trace.push(inc);
        if inc <= FIXED_POINT_TOL {
            return Ok(it);
        }
        let k = trace.len();
        if k >= 4 && trace[k - 1] > trace[k - 2] && trace[k - 2] > trace[k - 3] {
            return Err(Error::NonContracting { iterations: it, trace });
        }
    }
    Err(Error::NonContracting {
        iterations: FIXED_POINT_CAP,
        trace,
    })
}

/// Classical RK4 from node `start` down to node 0 in the variables (η, A₂),
/// η = ψ₂/r, which satisfy ∂_rη = (iA₂ψ⁻ − (A₂+1)η)/r and
/// ∂_rA₂ = ℑ(ψ⁻η̄)r + |η|²r; the 1/r coefficient of the ψ₂ form is gone.
/// (ψ₂, A₂) is projected back onto the unit sphere after every step.
fn integrate_inward(
    grid: &RadialGrid,
    minus: &[Complex64],
    start: usize,
    psi2: &mut [Complex64],
    a2: &mut [f64],
) {
    let h = grid.spacing();
    let r = grid.nodes();
    let i = Complex64::new(0.0, 1.0);
    let rhs = |rr: f64, m: Complex64, e: Complex64, a: f64| -> (Complex64, f64) {
        ((i * a * m - (a + 1.0) * e) / rr, ((m * e.conj()).im + e.norm_sqr()) * rr)
    };
    for j in (0..start).rev() {
        let rm = (j as f64 + 1.0) * h;
        let mm = stencil::evaluate_at(minus, h, j as f64 + 1.0, 0, Parity::Even);
        let (e, a) = (psi2[j + 1] / r[j + 1], a2[j + 1]);
        let s = -h;
        let (k1e, k1a) = rhs(r[j + 1], minus[j + 1], e, a);
        let (k2e, k2a) = rhs(rm, mm, e + k1e * (0.5 * s), a + 0.5 * s * k1a);
        let (k3e, k3a) = rhs(rm, mm, e + k2e * (0.5 * s), a + 0.5 * s * k2a);
        let (k4e, k4a) = rhs(r[j], minus[j], e + k3e * s, a + s * k3a);
        let np = (e + (k1e + k2e * 2.0 + k3e * 2.0 + k4e) * (s / 6.0)) * r[j];
        let na = a + s / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
        let norm = (np.norm_sqr() + na * na).sqrt();
        psi2[j] = np / norm;
        a2[j] = na / norm;
    }
}

/// Integrate ∂_r v̄ = −ℜψ₁ ū, ∂_r w̄ = −ℑψ₁ ū, ∂_r ū = ℜψ₁ v̄ + ℑψ₁ w̄ inward from
/// (î, −ĵ, −k̂) at r_max, and check ū₃ = A₂ and w̄₃ − iv̄₃ = ψ₂ on exit.
pub fn rebuild_map(gauge: &GaugeState) -> Result<MapState> {
    let grid = gauge.grid().clone();
    let n = grid.n();
    let h = grid.spacing();
    let psi1 = gauge.psi1.values();
    let rhs = |p: Complex64, x: &[Vec3; 3]| -> [Vec3; 3] {
        let [v, w, u] = *x;
        let mut out = [[0.0; 3]; 3];
        for c in 0..3 {
            out[0][c] = -p.re * u[c];
            out[1][c] = -p.im * u[c];
            out[2][c] = p.re * v[c] + p.im * w[c];
        }
        out
    };
    let add = |x: &[Vec3; 3], k: &[Vec3; 3], s: f64| -> [Vec3; 3] {
        let mut out = *x;
        for a in 0..3 {
            for c in 0..3 {
                out[a][c] += s * k[a][c];
            }
        }
        out
    };
    let mut frame = vec![[[0.0; 3]; 3]; n];
    frame[n - 1] = [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]];
    for j in (0..n - 1).rev() {
        let pm = stencil::evaluate_at(psi1, h, j as f64 + 1.0, 0, Parity::Even);
        let x = frame[j + 1];
        let s = -h;
        let k1 = rhs(psi1[j + 1], &x);
        let k2 = rhs(pm, &add(&x, &k1, 0.5 * s));
        let k3 = rhs(pm, &add(&x, &k2, 0.5 * s));
        let k4 = rhs(psi1[j], &add(&x, &k3, s));
        let mut y = x;
        for a in 0..3 {
            for c in 0..3 {
                y[a][c] += s / 6.0 * (k1[a][c] + 2.0 * k2[a][c] + 2.0 * k3[a][c] + k4[a][c]);
            }
        }
        let u = crate::gauge::normalize(y[2]);
        let (v, w) = reorthonormalize(u, y[0], y[1]);
        frame[j] = [v, w, u];
    }
    let map = MapState::from_parts(
        &grid,
        frame.iter().map(|f| f[2]).collect(),
        frame.iter().map(|f| f[0]).collect(),
        frame.iter().map(|f| f[1]).collect(),
    )?;
    let drift = map.orthonormality_defect();
    if drift > 1e-6 {
        return Err(Error::Numerical(format!("frame orthonormality drift {drift:.3e}")));
    }
    let mut worst: f64 = 0.0;
    for j in 0..n {
        let (u, v, w) = (map.u_bar()[j], map.v_bar()[j], map.w_bar()[j]);
        worst = worst.max((u[2] - gauge.a2[j]).abs());
        worst = worst.max((Complex64::new(w[2], -v[2]) - gauge.psi2.values()[j]).norm());
    }
    if worst > 1e-6 {
        return Err(Error::Numerical(format!(
            "rebuilt map disagrees with the gauge data (u3 vs A2, w3 - i v3 vs psi2) by {worst:.3e}"
        )));
    }
    Ok(map)
}

/// Solve for the gauge, rebuild the map and collect residuals.
pub fn reconstruct(psi_minus: &RadialField) -> Result<ReconstructionReport> {
    let solve = solve_gauge_detailed(psi_minus)?;
    let map = rebuild_map(&solve.gauge)?;
    let gauge = solve.gauge;
    let residuals = ReconstructionResiduals {
        ode: ode_residual(&gauge),
        conservation: gauge.conservation_defect(),
        compatibility: compatibility_residual(&gauge),
    };
    Ok(ReconstructionReport {
        sup_a2: gauge.sup_a2(),
        mass: psi_minus.mass(),
        fixed_point_iterations: solve.fixed_point_iterations,
        outer_start: solve.outer_start,
        gauge,
        map,
        residuals,
    })
}

fn ode_residual(gauge: &GaugeState) -> f64 {
    let grid = gauge.grid();
    let i = Complex64::new(0.0, 1.0);
    let d = gauge.psi2.derivative(Parity::Odd);
    let res: Vec<f64> = (0..grid.n())
        .map(|j| (d.values()[j] - i * gauge.a2[j] * gauge.psi1.values()[j]).norm_sqr())
        .collect();
    let num = grid.integrate_real(&res).max(0.0).sqrt();
    let den = gauge.psi_minus.l2();
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

/// Ratios of ‖ψ⁺‖_p, ‖ψ₂/r‖_p, ‖(1+A₂)/r‖_p to ‖ψ⁻‖_p, plus pointwise
/// comparisons of ψ₂ with the majorant m(r) = r∫_r^∞|ψ⁻|/s ds.
///
/// With F = ψ₂/(1−A₂) the system gives ∂_rF = F/r + O(|ψ⁻|/(1−A₂)) exactly, so
/// |F| ≤ m wherever A₂ ≤ 0, i.e. |ψ₂| ≤ (1−A₂)m ≤ 2m. The constant-one form
/// |ψ₂| ≤ m is not implied and fails at cubic order in the amplitude.
#[derive(Debug, Clone)]
pub struct LpTransferReport {
    pub p: f64,
    pub norm_minus: f64,
    pub ratio_plus: f64,
    pub ratio_psi2_over_r: f64,
    pub ratio_a2_over_r: f64,
    pub majorant: Vec<f64>,
    /// max_j (|ψ₂| − m) at the nodes.
    pub pointwise_excess: f64,
    /// max_j (|ψ₂|/(1−A₂) − m) at the nodes.
    pub weighted_excess: f64,
    pub sup_a2: f64,
}

pub fn lp_transfer_check(psi_minus: &RadialField, p: f64) -> Result<LpTransferReport> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("p must satisfy 1 <= p < inf, got {p}")));
    }
    let gauge = solve_gauge_from_psi_minus(psi_minus)?;
    let grid = psi_minus.grid();
    let lp = |vals: &[f64]| -> f64 {
        let f: Vec<f64> = vals.iter().map(|v| v.abs().powf(p)).collect();
        grid.integrate_real(&f).max(0.0).powf(1.0 / p)
    };
    let r = grid.nodes();
    let norm_minus = lp(&psi_minus.values().iter().map(|v| v.norm()).collect::<Vec<_>>());
    let plus = lp(&gauge.psi_plus.values().iter().map(|v| v.norm()).collect::<Vec<_>>());
    let eta = lp(&(0..grid.n()).map(|j| gauge.psi2.values()[j].norm() / r[j]).collect::<Vec<_>>());
    let a2r = lp(&(0..grid.n()).map(|j| (1.0 + gauge.a2[j]) / r[j]).collect::<Vec<_>>());
    let majorant = psi2_majorant(psi_minus);
    let pointwise_excess = (0..grid.n())
        .map(|j| gauge.psi2.values()[j].norm() - majorant[j])
        .fold(f64::NEG_INFINITY, f64::max);
    let weighted_excess = (0..grid.n())
        .map(|j| gauge.psi2.values()[j].norm() / (1.0 - gauge.a2[j]) - majorant[j])
        .fold(f64::NEG_INFINITY, f64::max);
    let ratio = |x: f64| if norm_minus > 0.0 { x / norm_minus } else { 0.0 };
    Ok(LpTransferReport {
        p,
        norm_minus,
        ratio_plus: ratio(plus),
        ratio_psi2_over_r: ratio(eta),
        ratio_a2_over_r: ratio(a2r),
        majorant,
        pointwise_excess,
        weighted_excess,
        sup_a2: gauge.sup_a2(),
    })
}

/// Map → ψ⁻ → map: returns (sup |ū − ū_rebuilt|, report).
pub fn round_trip(map: &MapState) -> Result<(f64, ReconstructionReport)> {
    let psi_minus = extract_fields(map).psi_minus;
    let report = reconstruct(&psi_minus)?;
    Ok((map.sup_distance(&report.map), report))
}

/// Relative defect of E(map) = π‖ψ⁻‖² for a reconstruction.
pub fn energy_defect(report: &ReconstructionReport) -> f64 {
    let e = energy(&report.map);
    let target = std::f64::consts::PI * report.mass;
    if target > 0.0 {
        (e - target).abs() / target
    } else {
        e.abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{bump_amplitude_for_mass, bump_map, bump_psi_pair};

    fn grid() -> RadialGrid {
        RadialGrid::new(1024, 32.0).unwrap()
    }

    #[test]
    fn zero_input_gives_trivial_gauge_and_constant_map() {
        let g = RadialGrid::new(128, 16.0).unwrap();
        let rep = reconstruct(&RadialField::zeros(&g)).unwrap();
        assert!(rep.gauge.psi2.l2() == 0.0);
        assert!(rep.gauge.a2.iter().all(|&a| a == -1.0));
        assert_eq!(rep.map.u_bar()[0], [0.0, 0.0, -1.0]);
        let lp = lp_transfer_check(&RadialField::zeros(&g), 2.0).unwrap();
        assert_eq!((lp.ratio_plus, lp.ratio_psi2_over_r, lp.ratio_a2_over_r), (0.0, 0.0, 0.0));
    }

    #[test]
    fn threshold_and_bad_p() {
        let g = RadialGrid::new(256, 16.0).unwrap();
        let f = RadialField::from_real_fn(&g, |r| r * r * (-r * r / 2.0).exp());
        let big = f.scale(Complex64::new(3.0, 0.0)); // mass 9
        assert!(matches!(solve_gauge_from_psi_minus(&big), Err(Error::Threshold { .. })));
        assert!(lp_transfer_check(&f, 0.5).is_err());
    }

    #[test]
    fn bump_round_trip() {
        let g = grid();
        let m = bump_map(&g, 0.5).unwrap();
        let fields = extract_fields(&m);
        let (err, rep) = round_trip(&m).unwrap();
        assert!(err <= 1e-5, "{err}");
        assert!(energy_defect(&rep) <= 1e-5, "{}", energy_defect(&rep));
        let dpsi = rep.gauge.psi2.sub(&fields.psi2).unwrap();
        assert!(dpsi.values().iter().all(|v| v.norm() < 1e-5));
        assert!(rep.residuals.conservation <= 1e-8);
        assert!(rep.sup_a2 <= -1.0 + rep.mass / 4.0 + 1e-6);
    }

    #[test]
    fn large_mass_uses_inward_integration() {
        let g = grid();
        let a = bump_amplitude_for_mass(&g, 3.5).unwrap();
        let (_, minus) = bump_psi_pair(&g, a);
        let rep = reconstruct(&minus).unwrap();
        assert!(rep.outer_start > 0);
        assert!(rep.residuals.conservation <= 1e-8);
        assert!(rep.residuals.compatibility <= 1e-5, "{:?}", rep.residuals);
        assert!(energy_defect(&rep) <= 1e-5, "{}", energy_defect(&rep));
        let lp = lp_transfer_check(&minus, 2.0).unwrap();
        assert!(lp.sup_a2 <= 0.0 && lp.weighted_excess <= 1e-8);
    }

    #[test]
    fn constant_one_majorant_fails_at_cubic_order() {
        let g = grid();
        let excess = |a: f64| lp_transfer_check(&bump_psi_pair(&g, a).1, 2.0).unwrap();
        let (e1, e2) = (excess(0.1), excess(0.2));
        assert!(e1.pointwise_excess > 1e-5 && e1.weighted_excess <= 1e-12);
        let order = (e2.pointwise_excess / e1.pointwise_excess).log2();
        assert!((order - 3.0).abs() < 0.1, "{order}");
        assert!(e1.ratio_plus <= 5.0 && e1.ratio_psi2_over_r <= 5.0 && e1.ratio_a2_over_r <= 5.0);
    }
}
