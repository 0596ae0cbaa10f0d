//! Analytic test data shared by the tests, the acceptance harness and the CLI:
//! the bump family of maps and a smooth compactly supported cutoff.
//!
//! The bump profile has polar angle φ(r) = π − χ(r) with χ = a·r·e^{−r²/2}, so
//! ū = (sin χ, 0, −cos χ). Its Coulomb frame is known in closed form,
//! v̄ = (cos χ, 0, sin χ), w̄ = −ĵ, which gives ψ₁ = χ′, ψ₂ = −i sin χ and
//! ψ± = χ′ ± sin χ / r.

use crate::error::{Error, Result};
use crate::gauge::{solve_coulomb_frame, MapState, Vec3};
use crate::radial::{RadialField, RadialGrid};

fn chi(a: f64, r: f64) -> (f64, f64) {
    let e = (-0.5 * r * r).exp();
    (a * r * e, a * (1.0 - r * r) * e)
}

/// Profile ū at the grid nodes for amplitude `a`.
pub fn bump_profile(grid: &RadialGrid, a: f64) -> Vec<Vec3> {
    grid.nodes()
        .iter()
        .map(|&r| {
            let (c, _) = chi(a, r);
            [c.sin(), 0.0, -c.cos()]
        })
        .collect()
}

/// Bump map with its frame computed by the Coulomb-frame integrator.
pub fn bump_map(grid: &RadialGrid, a: f64) -> Result<MapState> {
    solve_coulomb_frame(&bump_profile(grid, a), grid)
}

/// Bump map carrying the closed-form Coulomb frame.
pub fn bump_map_exact(grid: &RadialGrid, a: f64) -> MapState {
    let u = bump_profile(grid, a);
    let v = grid
        .nodes()
        .iter()
        .map(|&r| {
            let (c, _) = chi(a, r);
            [c.cos(), 0.0, c.sin()]
        })
        .collect();
    let w = vec![[0.0, -1.0, 0.0]; grid.n()];
    MapState::from_parts(grid, u, v, w).expect("lengths match the grid")
}

/// Closed-form (ψ⁺, ψ⁻) of the bump map.
pub fn bump_psi_pair(grid: &RadialGrid, a: f64) -> (RadialField, RadialField) {
    let plus = RadialField::from_real_fn(grid, |r| {
        let (c, dc) = chi(a, r);
        dc + c.sin() / r
    });
    let minus = RadialField::from_real_fn(grid, |r| {
        let (c, dc) = chi(a, r);
        dc - c.sin() / r
    });
    (plus, minus)
}

/// Closed-form map energy π∫(χ′² + sin²χ/r²) r dr, by the grid quadrature.
pub fn bump_energy(grid: &RadialGrid, a: f64) -> f64 {
    let density: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&r| {
            let (c, dc) = chi(a, r);
            dc * dc + (c.sin() / r).powi(2)
        })
        .collect();
    std::f64::consts::PI * grid.integrate_real(&density)
}

/// Amplitude `a` whose bump ψ⁻ has the requested mass on `grid` (bisection).
pub fn bump_amplitude_for_mass(grid: &RadialGrid, mass: f64) -> Result<f64> {
    if !(mass > 0.0 && mass < 4.0) {
        return Err(Error::InvalidArgument(format!(
            "target bump mass must lie in (0, 4), got {mass}"
        )));
    }
    let m = |a: f64| bump_psi_pair(grid, a).1.mass();
    let mut hi = 0.25;
    while m(hi) < mass {
        hi *= 2.0;
        if hi > 64.0 {
            return Err(Error::Numerical(format!("no bump amplitude reaches mass {mass}")));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if m(mid) < mass {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn smooth_edge(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let f = (-1.0 / t).exp();
    let t2 = t * t;
    (f, f / t2, f * (1.0 - 2.0 * t) / (t2 * t2))
}

/// Smooth cutoff equal to 1 on [0, 1] and 0 on [2, ∞), with its first two
/// derivatives: (φ(x), φ′(x), φ″(x)).
pub fn smooth_cutoff(x: f64) -> (f64, f64, f64) {
    if x <= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    if x >= 2.0 {
        return (0.0, 0.0, 0.0);
    }
    let (q, dq, ddq) = {
        let (f, d, dd) = smooth_edge(2.0 - x);
        (f, -d, dd)
    };
    let (p, dp, ddp) = smooth_edge(x - 1.0);
    let s = p + q;
    let num = dq * p - q * dp;
    let dnum = ddq * p - q * ddp;
    let den = s * s;
    let dden = 2.0 * s * (dp + dq);
    (q / s, num / den, (dnum * den - num * dden) / (den * den))
}
