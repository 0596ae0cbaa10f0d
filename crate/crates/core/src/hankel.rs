//! Order-k Hankel transforms on the shared radial grid, the operators
//! H_k = ∂_r² + r⁻¹∂_r − k²/r², and the free propagators e^{itH_k}.
//!
//! The band is spanned by the Bessel modes J_k(ξ_l r) whose frequencies
//! ξ_l = j_{k,l}/r_max (scaled zeros of J_k) lie below ξ_max. Their samples are
//! orthonormalised in the grid quadrature by a Cholesky factorisation taken in
//! frequency order, so a low mode never borrows from higher ones. Each mode
//! keeps its exact eigenvalue −ξ_l², the propagator is exactly unitary in the
//! discrete L²(rdr) norm, and content outside the band is left untouched.

use crate::error::{invalid, Error, Result};
use crate::radial::{RadialField, RadialGrid};
use crate::special::{bessel_j, bessel_j_zero};
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Highest supported transform order.
pub const MAX_ORDER: u32 = 4;
/// Plans whose Gram matrix is worse conditioned than this are rejected.
pub const MAX_CONDITION: f64 = 1e12;

/// Direction of a [`transform`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Samples of F_k f on the plan's frequency nodes.
#[derive(Debug, Clone)]
pub struct Spectrum {
    order: u32,
    values: Vec<Complex64>,
}

impl Spectrum {
    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn new(order: u32, values: Vec<Complex64>) -> Self {
        Spectrum { order, values }
    }
}

/// Precomputed transform pair for one order on one grid. Immutable once built.
#[derive(Debug, Clone)]
pub struct HankelPlan {
    order: u32,
    grid: RadialGrid,
    xi_max: f64,
    xi: Vec<f64>,
    /// spectral quadrature weights for ∫ · ξ dξ
    omega: Vec<f64>,
    /// M×n row-major: orthonormal coefficients c = analysis · f
    analysis: Vec<f64>,
    /// n×M row-major: f = synthesis · c
    synthesis: Vec<f64>,
    /// lower Cholesky factor of the Gram matrix, M×M row-major
    chol: Vec<f64>,
    condition: f64,
}

/// Default band edge ξ_max = π n / (2 r_max).
pub fn default_xi_max(grid: &RadialGrid) -> f64 {
    PI * grid.n() as f64 / (2.0 * grid.r_max())
}

/// Build the order-`order` plan on `grid` with band edge `xi_max`.
pub fn build_plan(order: i32, grid: &RadialGrid, xi_max: f64) -> Result<HankelPlan> {
    HankelPlan::new(order, grid, xi_max)
}

impl HankelPlan {
    pub fn new(order: i32, grid: &RadialGrid, xi_max: f64) -> Result<Self> {
        if order < 0 {
            return invalid(format!("Hankel order must be nonnegative, got {order}"));
        }
        let k = order as u32;
        if k > MAX_ORDER {
            return invalid(format!("Hankel orders above {MAX_ORDER} are not supported, got {k}"));
        }
        if !(xi_max.is_finite() && xi_max > 0.0) {
            return invalid(format!("xi_max must be positive, got {xi_max}"));
        }
        let n = grid.n();
        let r_max = grid.r_max();
        let singular = |condition: f64| Error::SingularPlan {
            n,
            r_max,
            xi_max,
            condition,
        };

        let mut zeros = Vec::new();
        loop {
            let z = bessel_j_zero(k, zeros.len() + 1);
            if z / r_max > xi_max {
                break;
            }
            zeros.push(z);
        }
        let m = zeros.len();
        if m == 0 {
            return invalid(format!(
                "band xi_max = {xi_max} holds no Bessel mode for r_max = {r_max}"
            ));
        }
        if m > n {
            return Err(singular(f64::INFINITY));
        }
        let xi: Vec<f64> = zeros.iter().map(|z| z / r_max).collect();
        let omega: Vec<f64> = zeros
            .iter()
            .map(|&z| 2.0 / (r_max * r_max * bessel_j(k + 1, z).powi(2)))
            .collect();

        let sqrt_w: Vec<f64> = grid.weights().iter().map(|w| w.sqrt()).collect();
        let r = grid.nodes();
        // K[j,l] = √w_j J_k(ξ_l r_j) √ω_l : nearly orthonormal columns
        let kmat = DMatrix::from_fn(n, m, |j, l| sqrt_w[j] * bessel_j(k, xi[l] * r[j]) * omega[l].sqrt());
        let gram = kmat.transpose() * &kmat;
        let chol = gram.cholesky().ok_or_else(|| singular(f64::INFINITY))?;
        let lower = chol.l();
        let (mut dmin, mut dmax) = (f64::INFINITY, 0.0f64);
        for i in 0..m {
            dmin = dmin.min(lower[(i, i)]);
            dmax = dmax.max(lower[(i, i)]);
        }
        let condition = (dmax / dmin).powi(2);
        if !(condition <= MAX_CONDITION) {
            return Err(singular(condition));
        }
        // Xᵀ = L⁻¹ Kᵀ has orthonormal rows
        let xt = lower
            .solve_lower_triangular(&kmat.transpose())
            .ok_or_else(|| singular(condition))?;

        let mut analysis = vec![0.0; m * n];
        let mut synthesis = vec![0.0; n * m];
        for l in 0..m {
            for j in 0..n {
                let x = xt[(l, j)];
                analysis[l * n + j] = x * sqrt_w[j];
                synthesis[j * m + l] = x / sqrt_w[j];
            }
        }
        let mut chol_rows = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..=i {
                chol_rows[i * m + j] = lower[(i, j)];
            }
        }
        Ok(HankelPlan {
            order: k,
            grid: grid.clone(),
            xi_max,
            xi,
            omega,
            analysis,
            synthesis,
            chol: chol_rows,
            condition,
        })
    }

    /// Plan with the default band edge.
    pub fn with_default_band(order: i32, grid: &RadialGrid) -> Result<Self> {
        Self::new(order, grid, default_xi_max(grid))
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn xi_max(&self) -> f64 {
        self.xi_max
    }

    /// Frequency nodes ξ_l (ascending).
    pub fn freq_nodes(&self) -> &[f64] {
        &self.xi
    }

    /// Quadrature weights for ∫ · ξ dξ on the frequency nodes.
    pub fn freq_weights(&self) -> &[f64] {
        &self.omega
    }

    /// Number of modes in the band.
    pub fn modes(&self) -> usize {
        self.xi.len()
    }

    /// Condition estimate of the sampled Bessel Gram matrix.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    fn check(&self, f: &RadialField) -> Result<()> {
        self.grid.check(f.grid())
    }

    /// Orthonormal band coefficients of `f`.
    pub fn coefficients(&self, f: &RadialField) -> Result<Vec<Complex64>> {
        self.check(f)?;
        Ok(matvec(&self.analysis, self.modes(), self.grid.n(), f.values()))
    }

    /// Field with the given orthonormal band coefficients.
    pub fn synthesize(&self, coeffs: &[Complex64]) -> Result<RadialField> {
        if coeffs.len() != self.modes() {
            return invalid(format!(
                "expected {} band coefficients, got {}",
                self.modes(),
                coeffs.len()
            ));
        }
        Ok(RadialField::from_vec(
            &self.grid,
            matvec(&self.synthesis, self.grid.n(), self.modes(), coeffs),
        ))
    }

    /// F_k f(ξ_l) = ∫ J_k(rξ_l) f r dr on the band.
    pub fn forward(&self, f: &RadialField) -> Result<Spectrum> {
        let c = self.coefficients(f)?;
        let values = c.iter().zip(&self.omega).map(|(c, w)| c / w.sqrt()).collect();
        Ok(Spectrum::new(self.order, values))
    }

    /// Field whose transform is `s`.
    pub fn inverse(&self, s: &Spectrum) -> Result<RadialField> {
        if s.order != self.order || s.values.len() != self.modes() {
            return invalid(format!(
                "spectrum (order {}, {} nodes) does not match plan (order {}, {} nodes)",
                s.order,
                s.values.len(),
                self.order,
                self.modes()
            ));
        }
        let c: Vec<Complex64> = s.values.iter().zip(&self.omega).map(|(v, w)| v * w.sqrt()).collect();
        self.synthesize(&c)
    }

    /// ‖F_k f‖_{L²(ξdξ)} in the plan's spectral quadrature.
    pub fn spectral_norm(&self, s: &Spectrum) -> f64 {
        s.values
            .iter()
            .zip(&self.omega)
            .map(|(v, w)| v.norm_sqr() * w)
            .sum::<f64>()
            .sqrt()
    }

    /// ‖ξ^p F_k f‖_{L²(ξdξ)}.
    pub fn spectral_moment(&self, s: &Spectrum, p: f64) -> f64 {
        s.values
            .iter()
            .zip(&self.omega)
            .zip(&self.xi)
            .map(|((v, w), x)| v.norm_sqr() * w * x.powf(2.0 * p))
            .sum::<f64>()
            .sqrt()
    }

    fn spectral_multiply(&self, f: &RadialField, symbol: impl Fn(f64) -> Complex64, keep_rest: bool) -> Result<RadialField> {
        let c = self.coefficients(f)?;
        let scaled: Vec<Complex64> = c
            .iter()
            .zip(&self.xi)
            .map(|(c, &x)| {
                let s = symbol(x);
                if keep_rest {
                    c * (s - 1.0)
                } else {
                    c * s
                }
            })
            .collect();
        let band = matvec(&self.synthesis, self.grid.n(), self.modes(), &scaled);
        let values = if keep_rest {
            f.values().iter().zip(band).map(|(a, b)| a + b).collect()
        } else {
            band
        };
        Ok(RadialField::from_vec(&self.grid, values))
    }

    /// H_k f = inverse(−ξ² ⊙ forward(f)).
    pub fn apply_hk(&self, f: &RadialField) -> Result<RadialField> {
        self.spectral_multiply(f, |x| Complex64::new(-x * x, 0.0), false)
    }

    /// e^{itH_k} f, the solution of (i∂_t + H_k)u = 0 at time t.
    ///
    /// Band content is rotated by e^{−itξ²}; whatever lies outside the band
    /// is carried along unchanged, so the map is exactly unitary.
    pub fn free_propagate(&self, f: &RadialField, t: f64) -> Result<RadialField> {
        if t == 0.0 {
            self.check(f)?;
            return Ok(f.clone());
        }
        self.spectral_multiply(f, |x| Complex64::from_polar(1.0, -t * x * x), true)
    }

    /// Band-limited evaluation of `f` at arbitrary radii, by summing its
    /// Bessel expansion. Out-of-band content is dropped.
    pub fn evaluate(&self, f: &RadialField, radii: &[f64]) -> Result<Vec<Complex64>> {
        let c = self.coefficients(f)?;
        let m = self.modes();
        // amplitudes of J_k(ξ_l r): √ω ⊙ L⁻ᵀ c
        let mut y = c;
        for i in (0..m).rev() {
            let mut acc = y[i];
            for j in i + 1..m {
                acc -= y[j] * self.chol[j * m + i];
            }
            y[i] = acc / self.chol[i * m + i];
        }
        let amp: Vec<Complex64> = y.iter().zip(&self.omega).map(|(v, w)| v * w.sqrt()).collect();
        Ok(radii
            .iter()
            .map(|&r| {
                amp.iter()
                    .zip(&self.xi)
                    .map(|(a, &x)| a * bessel_j(self.order, x * r))
                    .sum()
            })
            .collect())
    }
}

/// Transform `f` in the given direction.
///
/// Forward takes grid samples to frequency samples; inverse the reverse.
/// The frequency side is carried as a [`RadialField`]-free [`Spectrum`].
pub fn transform_forward(plan: &HankelPlan, f: &RadialField) -> Result<Spectrum> {
    plan.forward(f)
}

pub fn transform_inverse(plan: &HankelPlan, s: &Spectrum) -> Result<RadialField> {
    plan.inverse(s)
}

/// Row-major real matrix times complex vector.
fn matvec(a: &[f64], rows: usize, cols: usize, x: &[Complex64]) -> Vec<Complex64> {
    debug_assert_eq!(a.len(), rows * cols);
    debug_assert_eq!(x.len(), cols);
    let xr: Vec<f64> = x.iter().map(|v| v.re).collect();
    let xi: Vec<f64> = x.iter().map(|v| v.im).collect();
    a.chunks_exact(cols)
        .map(|row| {
            let (mut sr, mut si) = (0.0, 0.0);
            for ((&a, &r), &i) in row.iter().zip(&xr).zip(&xi) {
                sr += a * r;
                si += a * i;
            }
            Complex64::new(sr, si)
        })
        .collect()
}
