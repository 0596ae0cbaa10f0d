//! The equivariant harmonic maps h₁ = 2r/(1+r²), h₃ = (r²−1)/(r²+1) and the
//! soliton Q(r, θ) = e^{θR}(h₁, 0, h₃), with scale λ and rotation α.

use crate::error::{Error, Result};
use crate::gauge::{solve_coulomb_frame_any_class, MapState, Vec3};
use crate::radial::{RadialField, RadialGrid};
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolitonParams {
    pub lambda: f64,
    pub alpha: f64,
}

impl SolitonParams {
    pub fn new(lambda: f64, alpha: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) || !alpha.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "soliton needs a finite lambda >= 0 and a finite alpha (got {lambda}, {alpha})"
            )));
        }
        Ok(SolitonParams { lambda, alpha })
    }
}

impl Default for SolitonParams {
    fn default() -> Self {
        SolitonParams { lambda: 1.0, alpha: 0.0 }
    }
}

pub fn h1(r: f64) -> f64 {
    2.0 * r / (1.0 + r * r)
}

pub fn h3(r: f64) -> f64 {
    (r * r - 1.0) / (r * r + 1.0)
}

/// (ψ₂, A₂) = (e^{iα} h₁(λr), h₃(λr)); λ = 0 gives (0, −1).
pub fn harmonic_profile(params: SolitonParams, grid: &RadialGrid) -> (RadialField, Vec<f64>) {
    if params.lambda == 0.0 {
        return (RadialField::zeros(grid), vec![-1.0; grid.n()]);
    }
    let phase = Complex64::from_polar(1.0, params.alpha);
    let l = params.lambda;
    let psi2 = RadialField::from_fn(grid, |r| phase * h1(l * r));
    let a2 = grid.nodes().iter().map(|&r| h3(l * r)).collect();
    (psi2, a2)
}

/// Profile ū = (h₁ cos α, h₁ sin α, h₃) at λr.
pub fn soliton_profile(params: SolitonParams, grid: &RadialGrid) -> Vec<Vec3> {
    let (s, c) = params.alpha.sin_cos();
    grid.nodes()
        .iter()
        .map(|&r| {
            let x = params.lambda * r;
            // h₃ = (x²−1)/(x²+1) loses digits for small x; both forms agree to rounding
            let (a, b) = (h1(x), h3(x));
            let n = (a * a + b * b).sqrt();
            [a * c / n, a * s / n, b / n]
        })
        .collect()
}

/// The soliton map with its Coulomb frame. Q tends to +k̂, so the boundary
/// class check is skipped; λ = 0 yields the constant map −k̂.
pub fn soliton_map(params: SolitonParams, grid: &RadialGrid) -> Result<MapState> {
    if params.lambda == 0.0 {
        return Ok(MapState::constant(grid));
    }
    solve_coulomb_frame_any_class(&soliton_profile(params, grid), grid)
}

/// sup over interior nodes of |ū × Δū|, with Δ the m = 1 equivariant Laplacian
/// ū″ + ū′/r + (−ū₁, −ū₂, 0)/r² evaluated by finite differences.
pub fn harmonicity_defect(map: &MapState, skip: usize) -> f64 {
    use crate::gauge::{component, cross, PROFILE_PARITY};
    use crate::stencil;
    let grid = map.grid();
    let h = grid.spacing();
    let u = map.u_bar();
    let d: Vec<[Vec<f64>; 2]> = (0..3)
        .map(|i| {
            let c = component(u, i);
            [
                stencil::differentiate(&c, h, 1, PROFILE_PARITY[i]),
                stencil::differentiate(&c, h, 2, PROFILE_PARITY[i]),
            ]
        })
        .collect();
    let n = grid.n();
    (skip..n.saturating_sub(skip))
        .map(|j| {
            let r = grid.nodes()[j];
            let mut lap = [0.0; 3];
            for i in 0..3 {
                lap[i] = d[i][1][j] + d[i][0][j] / r;
            }
            lap[0] -= u[j][0] / (r * r);
            lap[1] -= u[j][1] / (r * r);
            let x = cross(u[j], lap);
            (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauge::{energy, extract_fields};
    use std::f64::consts::PI;

    #[test]
    fn profile_values() {
        let g = RadialGrid::new(64, 8.0).unwrap();
        assert_eq!(h1(1.0), 1.0);
        assert_eq!(h3(1.0), 0.0);
        let (p, a) = harmonic_profile(SolitonParams::default(), &g);
        for (v, a) in p.values().iter().zip(&a) {
            assert!((v.norm_sqr() + a * a - 1.0).abs() < 1e-14);
        }
        let (p0, a0) = harmonic_profile(SolitonParams::new(0.0, 1.0).unwrap(), &g);
        assert!(p0.l2() == 0.0 && a0.iter().all(|&x| x == -1.0));
        assert!(SolitonParams::new(-1.0, 0.0).is_err());
    }

    #[test]
    fn soliton_gauge_and_energy() {
        let g = RadialGrid::new(1024, 32.0).unwrap();
        let q = soliton_map(SolitonParams::default(), &g).unwrap();
        for u in q.u_bar() {
            assert!((u.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-14);
        }
        let gs = extract_fields(&q);
        assert!(gs.psi_minus.l2() <= 1e-6, "{}", gs.psi_minus.l2());
        let plus = PI * gs.psi_plus.mass();
        assert!((plus / (8.0 * PI) - 1.0).abs() < 1e-3, "{plus}");
        let e = energy(&q);
        assert!((e / (4.0 * PI) - 1.0).abs() < 1e-3, "{e}");
        for (a, u) in gs.a2.iter().zip(q.u_bar()) {
            assert!((a - u[2]).abs() < 1e-10);
        }
        assert!(harmonicity_defect(&q, 3) <= 1e-5, "{}", harmonicity_defect(&q, 3));
    }

    #[test]
    fn rotated_and_scaled_soliton_has_no_minus_field() {
        let g = RadialGrid::new(1024, 32.0).unwrap();
        let q = soliton_map(SolitonParams::new(2.0, 0.7).unwrap(), &g).unwrap();
        assert!(extract_fields(&q).psi_minus.l2() <= 1e-6);
        assert_eq!(
            soliton_map(SolitonParams::new(0.0, 0.0).unwrap(), &g).unwrap().u_bar()[5],
            [0.0, 0.0, -1.0]
        );
    }
}
