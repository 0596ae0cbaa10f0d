//! Map → gauge: the Coulomb frame along an equivariant profile, the
//! differentiated fields ψ₁, ψ₂, the connection coefficients A₂, A₀, the
//! combinations ψ± = ψ₁ ± iψ₂/r, the energy, ψ₀ and the compatibility residual.
//!
//! Orientation: v̄ × w̄ = ū, w̄ × ū = v̄, ū × v̄ = w̄, with (v̄, w̄, ū) → (î, −ĵ, −k̂)
//! at infinity. In these coordinates ψ₂ = w̄₃ − i v̄₃ and A₂ = ū₃.

use crate::error::{Error, Result};
use crate::radial::{radial_inverse_slice, RadialField, RadialGrid, RadialInverse};
use crate::stencil::{self, Parity};
use num_complex::Complex64;
use std::f64::consts::PI;

pub type Vec3 = [f64; 3];

/// Parities of the three components of an equivariant profile ū.
pub const PROFILE_PARITY: [Parity; 3] = [Parity::Odd, Parity::Odd, Parity::Even];

/// Allowed distance of ū(r_max) from −k̂ for the admissible class.
pub const BOUNDARY_TOLERANCE: f64 = 0.05;

pub(crate) fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn axpy(a: f64, x: Vec3, y: Vec3) -> Vec3 {
    [a * x[0] + y[0], a * x[1] + y[1], a * x[2] + y[2]]
}

pub(crate) fn scale(a: f64, x: Vec3) -> Vec3 {
    [a * x[0], a * x[1], a * x[2]]
}

pub(crate) fn normalize(x: Vec3) -> Vec3 {
    scale(1.0 / dot(x, x).sqrt(), x)
}

/// k̂ × ū: the angular derivative of e^{θR}ū at θ = 0.
pub(crate) fn rotate(u: Vec3) -> Vec3 {
    [-u[1], u[0], 0.0]
}

/// Frame coordinates x·v̄ + i x·w̄.
pub(crate) fn frame_coord(x: Vec3, v: Vec3, w: Vec3) -> Complex64 {
    Complex64::new(dot(x, v), dot(x, w))
}

/// Equivariant profile with its Coulomb frame.
#[derive(Debug, Clone)]
pub struct MapState {
    grid: RadialGrid,
    u: Vec<Vec3>,
    v: Vec<Vec3>,
    w: Vec<Vec3>,
}

impl MapState {
    /// Assemble a map from a profile and a frame without integrating anything.
    pub fn from_parts(grid: &RadialGrid, u: Vec<Vec3>, v: Vec<Vec3>, w: Vec<Vec3>) -> Result<Self> {
        let n = grid.n();
        if u.len() != n || v.len() != n || w.len() != n {
            return Err(Error::InvalidArgument(format!(
                "map arrays must have {n} entries (got {}, {}, {})",
                u.len(),
                v.len(),
                w.len()
            )));
        }
        Ok(MapState {
            grid: grid.clone(),
            u,
            v,
            w,
        })
    }

    /// The constant map ū ≡ −k̂ with frame (î, −ĵ).
    pub fn constant(grid: &RadialGrid) -> Self {
        let n = grid.n();
        MapState {
            grid: grid.clone(),
            u: vec![[0.0, 0.0, -1.0]; n],
            v: vec![[1.0, 0.0, 0.0]; n],
            w: vec![[0.0, -1.0, 0.0]; n],
        }
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn u_bar(&self) -> &[Vec3] {
        &self.u
    }

    pub fn v_bar(&self) -> &[Vec3] {
        &self.v
    }

    pub fn w_bar(&self) -> &[Vec3] {
        &self.w
    }

    /// sup_j of all orthonormality defects of (v̄, w̄, ū).
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for ((&u, &v), &w) in self.u.iter().zip(&self.v).zip(&self.w) {
            for d in [
                dot(v, v) - 1.0,
                dot(w, w) - 1.0,
                dot(u, u) - 1.0,
                dot(v, u),
                dot(w, u),
                dot(v, w),
            ] {
                worst = worst.max(d.abs());
            }
        }
        worst
    }

    /// sup_j of the orientation defects v̄×w̄ − ū, w̄×ū − v̄, ū×v̄ − w̄.
    pub fn orientation_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for ((&u, &v), &w) in self.u.iter().zip(&self.v).zip(&self.w) {
            for (a, b) in [(cross(v, w), u), (cross(w, u), v), (cross(u, v), w)] {
                for i in 0..3 {
                    worst = worst.max((a[i] - b[i]).abs());
                }
            }
        }
        worst
    }

    /// sup_j |A₁| = sup_j |∂_r v̄ · w̄|.
    pub fn a1_sup(&self) -> f64 {
        let dv = component_derivatives(&self.grid, &self.v, [Parity::None; 3]);
        dv.iter()
            .zip(&self.w)
            .map(|(&d, &w)| dot(d, w).abs())
            .fold(0.0, f64::max)
    }

    /// ∂_r ū at the nodes.
    pub fn du(&self) -> Vec<Vec3> {
        component_derivatives(&self.grid, &self.u, PROFILE_PARITY)
    }

    /// sup_j |ū_j − other_j|.
    pub fn sup_distance(&self, other: &MapState) -> f64 {
        self.u
            .iter()
            .zip(&other.u)
            .map(|(a, b)| (0..3).map(|i| (a[i] - b[i]).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }
}

pub(crate) fn component(values: &[Vec3], i: usize) -> Vec<f64> {
    values.iter().map(|x| x[i]).collect()
}

pub(crate) fn component_derivatives(grid: &RadialGrid, values: &[Vec3], parity: [Parity; 3]) -> Vec<Vec3> {
    let h = grid.spacing();
    let d: Vec<Vec<f64>> = (0..3)
        .map(|i| stencil::differentiate(&component(values, i), h, 1, parity[i]))
        .collect();
    (0..values.len()).map(|j| [d[0][j], d[1][j], d[2][j]]).collect()
}

fn check_profile(profile: &[Vec3], grid: &RadialGrid) -> Result<()> {
    if profile.len() != grid.n() {
        return Err(Error::InvalidArgument(format!(
            "profile has {} samples but the grid has {} nodes",
            profile.len(),
            grid.n()
        )));
    }
    for (j, &u) in profile.iter().enumerate() {
        if !u.iter().all(|c| c.is_finite()) || (dot(u, u).sqrt() - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "profile is not unit length at node {j} (|u| = {})",
                dot(u, u).sqrt()
            )));
        }
    }
    Ok(())
}

/// Coulomb frame for a profile in the admissible class (ū(r_max) near −k̂).
pub fn solve_coulomb_frame(profile: &[Vec3], grid: &RadialGrid) -> Result<MapState> {
    check_profile(profile, grid)?;
    let last = profile[grid.n() - 1];
    let dist = ((last[0]).powi(2) + (last[1]).powi(2) + (last[2] + 1.0).powi(2)).sqrt();
    if dist > BOUNDARY_TOLERANCE {
        return Err(Error::ClassViolation(format!(
            "|u(r_max) + k| = {dist:.3e} exceeds {BOUNDARY_TOLERANCE}; the class requires the limit -k"
        )));
    }
    integrate_frame(profile, grid)
}

/// Coulomb frame without the boundary-class check (used for solitons, whose
/// profile tends to +k̂).
pub fn solve_coulomb_frame_any_class(profile: &[Vec3], grid: &RadialGrid) -> Result<MapState> {
    check_profile(profile, grid)?;
    integrate_frame(profile, grid)
}

/// Integrate ∂_r X = M X, M x = ∂_rū (ū·x) − ū (∂_rū·x), inward from r_max with
/// the classical fourth-order Runge-Kutta method.
fn integrate_frame(profile: &[Vec3], grid: &RadialGrid) -> Result<MapState> {
    let n = grid.n();
    let h = grid.spacing();
    let u = profile.to_vec();
    let du = component_derivatives(grid, &u, PROFILE_PARITY);
    let comps: Vec<Vec<f64>> = (0..3).map(|i| component(&u, i)).collect();
    // ū and ∂_rū between nodes j and j+1 (position j + 1 in index units)
    let mid = |j: usize| -> (Vec3, Vec3) {
        let x = j as f64 + 1.0;
        let mut um = [0.0; 3];
        let mut dm = [0.0; 3];
        for i in 0..3 {
            um[i] = stencil::evaluate_at(&comps[i], h, x, 0, PROFILE_PARITY[i]);
            dm[i] = stencil::evaluate_at(&comps[i], h, x, 1, PROFILE_PARITY[i]);
        }
        let um = normalize(um);
        // keep the derivative tangent to the sphere
        let dm = axpy(-dot(dm, um), um, dm);
        (um, dm)
    };
    let apply = |uu: Vec3, dd: Vec3, x: Vec3| -> Vec3 { axpy(-dot(dd, x), uu, scale(dot(uu, x), dd)) };

    let mut v = vec![[0.0; 3]; n];
    let mut w = vec![[0.0; 3]; n];
    let ul = u[n - 1];
    let v0 = normalize(axpy(-ul[0], ul, [1.0, 0.0, 0.0]));
    v[n - 1] = v0;
    w[n - 1] = cross(ul, v0);

    for j in (0..n - 1).rev() {
        let (u1, d1) = (u[j + 1], du[j + 1]);
        let (um, dm) = mid(j);
        let (u0, d0) = (u[j], du[j]);
        let step = -h;
        let rk4 = |x: Vec3| -> Vec3 {
            let k1 = apply(u1, d1, x);
            let k2 = apply(um, dm, axpy(0.5 * step, k1, x));
            let k3 = apply(um, dm, axpy(0.5 * step, k2, x));
            let k4 = apply(u0, d0, axpy(step, k3, x));
            let mut out = x;
            for i in 0..3 {
                out[i] += step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            out
        };
        let (vn, wn) = reorthonormalize(u0, rk4(v[j + 1]), rk4(w[j + 1]));
        v[j] = vn;
        w[j] = wn;
    }
    Ok(MapState { grid: grid.clone(), u, v, w })
}

/// Project (v, w) onto the tangent plane at u and replace them by the nearest
/// orthonormal pair (polar factor of the 2×2 Gram matrix).
pub(crate) fn reorthonormalize(u: Vec3, v: Vec3, w: Vec3) -> (Vec3, Vec3) {
    let v = axpy(-dot(v, u), u, v);
    let w = axpy(-dot(w, u), u, w);
    let (a, b, c) = (dot(v, v), dot(v, w), dot(w, w));
    // S^{-1/2} for S = [[a, b], [b, c]]
    let s = (a * c - b * b).sqrt();
    let t = (a + c + 2.0 * s).sqrt();
    let inv = 1.0 / (s * t);
    let (p, q, rr) = ((c + s) * inv, -b * inv, (a + s) * inv);
    let vn = axpy(q, w, scale(p, v));
    let wn = axpy(rr, w, scale(q, v));
    (vn, wn)
}

/// Reduced fields of a map, or of a (ψ⁺, ψ⁻) pair.
#[derive(Debug, Clone)]
pub struct GaugeState {
    pub psi1: RadialField,
    pub psi2: RadialField,
    pub psi_plus: RadialField,
    pub psi_minus: RadialField,
    pub a2: Vec<f64>,
    pub a0: Vec<f64>,
}

impl GaugeState {
    pub fn grid(&self) -> &RadialGrid {
        self.psi1.grid()
    }

    /// Complete a gauge from ψ⁺ and ψ⁻ alone:
    /// ψ₁ = (ψ⁺+ψ⁻)/2, ψ₂ = r(ψ⁺−ψ⁻)/(2i), A₂ = −1 + ¼[r⁻¹∂_r]⁻¹(|ψ⁺|²−|ψ⁻|²), A₀ from g = ℜ(ψ̄⁺ψ⁻).
    pub fn from_psi_pair(psi_plus: &RadialField, psi_minus: &RadialField) -> Result<Self> {
        let grid = psi_plus.grid().clone();
        grid.check(psi_minus.grid())?;
        let two_i = Complex64::new(0.0, 2.0);
        let psi1 = psi_plus.zip_with(psi_minus, |p, m| (p + m) * 0.5)?;
        let psi2 = RadialField::from_vec(
            &grid,
            psi_plus
                .values()
                .iter()
                .zip(psi_minus.values())
                .zip(grid.nodes())
                .map(|((p, m), r)| (p - m) / two_i * r)
                .collect(),
        );
        let a2 = a2_from_pair(psi_plus, psi_minus);
        let g: Vec<f64> = psi_plus
            .values()
            .iter()
            .zip(psi_minus.values())
            .map(|(p, m)| (p.conj() * m).re)
            .collect();
        let a0 = a0_from_g(&grid, &g);
        Ok(GaugeState {
            psi1,
            psi2,
            psi_plus: psi_plus.clone(),
            psi_minus: psi_minus.clone(),
            a2,
            a0,
        })
    }

    /// ψ₂/r at the nodes.
    pub fn psi2_over_r(&self) -> RadialField {
        self.psi2.map(|r, v| v / r)
    }

    /// sup_j A₂.
    pub fn sup_a2(&self) -> f64 {
        self.a2.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// sup_j ||ψ₂|² + A₂² − 1|.
    pub fn conservation_defect(&self) -> f64 {
        self.psi2
            .values()
            .iter()
            .zip(&self.a2)
            .map(|(p, a)| (p.norm_sqr() + a * a - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// A₂ = −1 + ¼ ∫_0^r (|ψ⁺|² − |ψ⁻|²) s ds.
pub fn a2_from_pair(psi_plus: &RadialField, psi_minus: &RadialField) -> Vec<f64> {
    let diff: Vec<f64> = psi_plus
        .abs_sq()
        .iter()
        .zip(psi_minus.abs_sq())
        .map(|(p, m)| p - m)
        .collect();
    radial_inverse_slice(RadialInverse::RinvDrInv, psi_plus.grid(), &diff, Parity::Even)
        .into_iter()
        .map(|v| -1.0 + 0.25 * v)
        .collect()
}

/// A₀ = −½ g − [r∂_r]⁻¹ g for g = |ψ₁|² − |ψ₂|²/r² (the zero-mean solution).
pub fn a0_from_g(grid: &RadialGrid, g: &[f64]) -> Vec<f64> {
    let inv = radial_inverse_slice(RadialInverse::RdrInv, grid, g, Parity::Even);
    g.iter().zip(inv).map(|(g, i)| -0.5 * g - i).collect()
}

/// Differentiated fields and connection coefficients of a framed map.
pub fn extract_fields(map: &MapState) -> GaugeState {
    let grid = map.grid();
    let du = map.du();
    let i = Complex64::new(0.0, 1.0);
    let mut psi1 = Vec::with_capacity(grid.n());
    let mut psi2 = Vec::with_capacity(grid.n());
    for j in 0..grid.n() {
        let (u, v, w) = (map.u[j], map.v[j], map.w[j]);
        psi1.push(frame_coord(du[j], v, w));
        psi2.push(frame_coord(rotate(u), v, w));
    }
    let r = grid.nodes();
    let psi_plus: Vec<Complex64> = (0..grid.n()).map(|j| psi1[j] + i * psi2[j] / r[j]).collect();
    let psi_minus: Vec<Complex64> = (0..grid.n()).map(|j| psi1[j] - i * psi2[j] / r[j]).collect();
    let g: Vec<f64> = (0..grid.n())
        .map(|j| psi1[j].norm_sqr() - psi2[j].norm_sqr() / (r[j] * r[j]))
        .collect();
    GaugeState {
        psi1: RadialField::from_vec(grid, psi1),
        psi2: RadialField::from_vec(grid, psi2),
        psi_plus: RadialField::from_vec(grid, psi_plus),
        psi_minus: RadialField::from_vec(grid, psi_minus),
        a2: component(&map.u, 2),
        a0: a0_from_g(grid, &g),
    }
}

/// E = π ∫ (|∂_rū|² + (ū₁² + ū₂²)/r²) r dr.
pub fn energy(map: &MapState) -> f64 {
    let grid = map.grid();
    let du = map.du();
    let density: Vec<f64> = (0..grid.n())
        .map(|j| {
            let u = map.u[j];
            let r = grid.nodes()[j];
            dot(du[j], du[j]) + (u[0] * u[0] + u[1] * u[1]) / (r * r)
        })
        .collect();
    PI * grid.integrate_real(&density)
}

/// ψ₀ = i(∂_rψ₁ + ψ₁/r + iA₂ψ₂/r²).
pub fn compute_psi0(gauge: &GaugeState) -> RadialField {
    let grid = gauge.grid();
    let d1 = gauge.psi1.derivative(Parity::Even);
    let i = Complex64::new(0.0, 1.0);
    let values = (0..grid.n())
        .map(|j| {
            let r = grid.nodes()[j];
            let p1 = gauge.psi1.values()[j];
            let p2 = gauge.psi2.values()[j];
            i * (d1.values()[j] + p1 / r + i * gauge.a2[j] * p2 / (r * r))
        })
        .collect();
    RadialField::from_vec(grid, values)
}

/// ‖∂_r[r(ψ⁺ − ψ⁻)] + A₂(ψ⁺ + ψ⁻)‖ / (‖ψ⁺‖ + ‖ψ⁻‖); absolute when both vanish.
pub fn compatibility_residual(gauge: &GaugeState) -> f64 {
    let grid = gauge.grid();
    let r = grid.nodes();
    let diff: Vec<Complex64> = (0..grid.n())
        .map(|j| (gauge.psi_plus.values()[j] - gauge.psi_minus.values()[j]) * r[j])
        .collect();
    let d = stencil::differentiate(&diff, grid.spacing(), 1, Parity::Odd);
    let res: Vec<f64> = (0..grid.n())
        .map(|j| (d[j] + (gauge.psi_plus.values()[j] + gauge.psi_minus.values()[j]) * gauge.a2[j]).norm_sqr())
        .collect();
    let num = grid.integrate_real(&res).max(0.0).sqrt();
    let den = gauge.psi_plus.l2() + gauge.psi_minus.l2();
    if den > 0.0 {
        num / den
    } else {
        num
    }
}
