//! Local polynomial stencils on the half-integer grid: finite differences,
//! interpolation, and cumulative integration.
//!
//! Positions are measured in units of the spacing h, so node `i` sits at
//! `i + 0.5`. Indices below zero address mirror images across the origin and
//! are resolved through the field's [`Parity`].

use num_complex::Complex64;
use std::ops::{Add, Mul};

/// Points used by derivative stencils (eighth order for first and second derivatives).
pub const DIFF_POINTS: usize = 9;
/// Points used by interpolation and cumulative integration stencils.
pub const INTERP_POINTS: usize = 8;

/// Reflection symmetry of a radial profile across r = 0.
///
/// A smooth radial profile of angular order k extends to negative r with
/// parity (-1)^k. `None` means no extension is assumed and stencils near the
/// origin become one-sided.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
    None,
}

impl Parity {
    pub fn of_order(k: u32) -> Parity {
        if k % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    /// Parity of the product with r (or 1/r).
    pub fn flip(self) -> Parity {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
            Parity::None => Parity::None,
        }
    }

    pub fn times(self, other: Parity) -> Parity {
        match (self, other) {
            (Parity::None, _) | (_, Parity::None) => Parity::None,
            (a, b) if a == b => Parity::Even,
            _ => Parity::Odd,
        }
    }

    fn sign(self) -> Option<f64> {
        match self {
            Parity::Even => Some(1.0),
            Parity::Odd => Some(-1.0),
            Parity::None => None,
        }
    }
}

/// Scalars the stencils act on.
pub trait Scalar: Copy + Add<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
}

/// A weighted list of (virtual) node indices.
#[derive(Debug, Clone)]
pub struct Stencil {
    pub first: i64,
    pub weights: Vec<f64>,
}

impl Stencil {
    pub fn apply<T: Scalar>(&self, f: &[T], parity: Parity) -> T {
        apply_weights(f, self.first, &self.weights, parity)
    }
}

#[inline]
fn apply_weights<T: Scalar>(f: &[T], first: i64, weights: &[f64], parity: Parity) -> T {
    let mut acc = T::zero();
    for (m, &w) in weights.iter().enumerate() {
        acc = acc + fetch(f, first + m as i64, parity) * w;
    }
    acc
}

#[inline]
fn fetch<T: Scalar>(f: &[T], i: i64, parity: Parity) -> T {
    if i >= 0 {
        f[i as usize]
    } else {
        // node -1 mirrors node 0, -2 mirrors 1, ...
        let s = parity.sign().expect("ghost node requested without parity");
        f[(-i - 1) as usize] * s
    }
}

/// Coefficients (in powers of y) of every Lagrange basis polynomial on `ys`.
fn lagrange_basis(ys: &[f64]) -> Vec<Vec<f64>> {
    let p = ys.len();
    (0..p)
        .map(|i| {
            let mut c = vec![0.0; p];
            c[0] = 1.0;
            let mut deg = 0;
            for (m, &ym) in ys.iter().enumerate() {
                if m == i {
                    continue;
                }
                let denom = ys[i] - ym;
                // multiply by (y - ym) / denom
                for d in (0..=deg + 1).rev() {
                    let lower = if d > 0 { c[d - 1] } else { 0.0 };
                    let cur = if d <= deg { c[d] } else { 0.0 };
                    c[d] = (lower - ym * cur) / denom;
                }
                deg += 1;
            }
            c
        })
        .collect()
}

fn derivative_weights(ys: &[f64], order: usize) -> Vec<f64> {
    let fact: f64 = (1..=order).map(|v| v as f64).product();
    lagrange_basis(ys)
        .into_iter()
        .map(|c| if order < c.len() { c[order] * fact } else { 0.0 })
        .collect()
}

fn integral_weights(ys: &[f64], a: f64, b: f64) -> Vec<f64> {
    lagrange_basis(ys)
        .into_iter()
        .map(|c| {
            c.iter()
                .enumerate()
                .map(|(d, &cd)| {
                    let e = (d + 1) as i32;
                    cd * (b.powi(e) - a.powi(e)) / e as f64
                })
                .sum()
        })
        .collect()
}

/// Choose `points` consecutive virtual indices centred on `center` (a position),
/// shifted to stay inside the grid. Ghost indices are allowed when `parity` is set.
fn window(center: f64, points: usize, n: usize, parity: Parity) -> i64 {
    let half = points as f64 / 2.0;
    // first index whose position is >= center - half
    let mut first = (center - half).ceil() as i64;
    let min_first = if parity == Parity::None {
        0
    } else {
        // mirrored nodes exist down to -(n), never needed that far
        -(points as i64)
    };
    first = first.max(min_first);
    first.min(n as i64 - points as i64)
}

fn positions(first: i64, points: usize) -> Vec<f64> {
    (0..points).map(|m| (first + m as i64) as f64 + 0.5).collect()
}

/// Stencil for the `order`-th derivative at position `x` (index units), unscaled by h.
pub fn derivative_stencil(x: f64, order: usize, n: usize, parity: Parity) -> Stencil {
    let first = window(x, DIFF_POINTS, n, parity);
    let ys: Vec<f64> = positions(first, DIFF_POINTS).iter().map(|p| p - x).collect();
    Stencil {
        first,
        weights: derivative_weights(&ys, order),
    }
}

/// Stencil for the value at position `x` (index units).
pub fn interpolation_stencil(x: f64, n: usize, parity: Parity) -> Stencil {
    let first = window(x, INTERP_POINTS, n, parity);
    let ys: Vec<f64> = positions(first, INTERP_POINTS).iter().map(|p| p - x).collect();
    Stencil {
        first,
        weights: derivative_weights(&ys, 0),
    }
}

/// Stencil for the integral over [a, b] (index units, unscaled by h).
pub fn integral_stencil(a: f64, b: f64, n: usize, parity: Parity) -> Stencil {
    let mid = 0.5 * (a + b);
    let first = window(mid, INTERP_POINTS, n, parity);
    let ys: Vec<f64> = positions(first, INTERP_POINTS).iter().map(|p| p - mid).collect();
    Stencil {
        first,
        weights: integral_weights(&ys, a - mid, b - mid),
    }
}

/// Derivative of order 1 or 2 at every node, for grid spacing `h`.
pub fn differentiate<T: Scalar>(f: &[T], h: f64, order: usize, parity: Parity) -> Vec<T> {
    let n = f.len();
    let scale = h.powi(-(order as i32));
    // interior weights are translation invariant; compute them once
    let interior = derivative_stencil((n / 2) as f64 + 0.5, order, n, parity);
    let lo = DIFF_POINTS / 2;
    (0..n)
        .map(|j| {
            let v = if j >= lo && j + lo < n {
                apply_weights(f, j as i64 - lo as i64, &interior.weights, parity)
            } else {
                derivative_stencil(j as f64 + 0.5, order, n, parity).apply(f, parity)
            };
            v * scale
        })
        .collect()
}

/// Integral of f over each cell [r_j, r_{j+1}], plus the two end pieces.
/// Returns (origin piece [0, r_0], inner cells, outer piece [r_{n-1}, r_max]).
fn cell_integrals<T: Scalar>(f: &[T], h: f64, parity: Parity) -> (T, Vec<T>, T) {
    let n = f.len();
    let interior = integral_stencil((n / 2) as f64 + 0.5, (n / 2) as f64 + 1.5, n, parity);
    let lo = INTERP_POINTS / 2 - 1;
    let cells = (0..n - 1)
        .map(|j| {
            let v = if j >= lo && j + INTERP_POINTS - lo <= n {
                apply_weights(f, j as i64 - lo as i64, &interior.weights, parity)
            } else {
                integral_stencil(j as f64 + 0.5, j as f64 + 1.5, n, parity).apply(f, parity)
            };
            v * h
        })
        .collect();
    let origin = integral_stencil(0.0, 0.5, n, parity).apply(f, parity) * h;
    let outer = integral_stencil(n as f64 - 0.5, n as f64, n, parity).apply(f, parity) * h;
    (origin, cells, outer)
}

/// I_j = ∫_0^{r_j} f ds at every node.
pub fn cumulative_from_origin<T: Scalar>(f: &[T], h: f64, parity: Parity) -> Vec<T> {
    let (origin, cells, _) = cell_integrals(f, h, parity);
    let mut out = Vec::with_capacity(f.len());
    let mut acc = origin;
    out.push(acc);
    for c in cells {
        acc = acc + c;
        out.push(acc);
    }
    out
}

/// T_j = ∫_{r_j}^{r_max} f ds at every node.
pub fn cumulative_to_end<T: Scalar>(f: &[T], h: f64, parity: Parity) -> Vec<T> {
    let n = f.len();
    let (_, cells, outer) = cell_integrals(f, h, parity);
    let mut out = vec![T::zero(); n];
    let mut acc = outer;
    out[n - 1] = acc;
    for j in (0..n - 1).rev() {
        acc = acc + cells[j];
        out[j] = acc;
    }
    out
}

/// Value (order 0) or derivative of f at an arbitrary position `x` in index units.
pub fn evaluate_at<T: Scalar>(f: &[T], h: f64, x: f64, order: usize, parity: Parity) -> T {
    let n = f.len();
    if order == 0 {
        interpolation_stencil(x, n, parity).apply(f, parity)
    } else {
        derivative_stencil(x, order, n, parity).apply(f, parity) * h.powi(-(order as i32))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nodes(n: usize, h: f64) -> Vec<f64> {
        (0..n).map(|j| (j as f64 + 0.5) * h).collect()
    }

    #[test]
    fn lagrange_reproduces_polynomials() {
        let ys = [-1.5, -0.5, 0.5, 1.5];
        let w = derivative_weights(&ys, 1);
        // derivative of y^3 at 0 is 0, of y is 1
        let d1: f64 = ys.iter().zip(&w).map(|(y, w)| y * w).sum();
        let d3: f64 = ys.iter().zip(&w).map(|(y, w)| y.powi(3) * w).sum();
        assert!((d1 - 1.0).abs() < 1e-14 && d3.abs() < 1e-14);
        let iw = integral_weights(&ys, -0.5, 0.5);
        let i2: f64 = ys.iter().zip(&iw).map(|(y, w)| y * y * w).sum();
        assert!((i2 - 1.0 / 12.0).abs() < 1e-14);
    }

    #[test]
    fn derivative_of_gaussian_with_parity() {
        let n = 256;
        let h = 10.0 / n as f64;
        let r = nodes(n, h);
        let f: Vec<f64> = r.iter().map(|r| (-r * r / 2.0).exp()).collect();
        let d = differentiate(&f, h, 1, Parity::Even);
        let d2 = differentiate(&f, h, 2, Parity::Even);
        for j in 0..n {
            let e = (-r[j] * r[j] / 2.0).exp();
            assert!((d[j] + r[j] * e).abs() < 1e-8, "j={j}");
            assert!((d2[j] - (r[j] * r[j] - 1.0) * e).abs() < 1e-7, "j={j}");
        }
    }

    #[test]
    fn one_sided_derivative_without_parity() {
        let n = 128;
        let h = 0.05;
        let r = nodes(n, h);
        let f: Vec<f64> = r.iter().map(|r| (1.0 + r).ln()).collect();
        let d = differentiate(&f, h, 1, Parity::None);
        for j in 0..n {
            assert!((d[j] - 1.0 / (1.0 + r[j])).abs() < 1e-7, "j={j}");
        }
    }

    #[test]
    fn cumulative_integrals_match_antiderivative() {
        let n = 200;
        let h = 12.0 / n as f64;
        let r = nodes(n, h);
        // odd integrand r e^{-r^2}: antiderivative (1 - e^{-r^2})/2
        let g: Vec<f64> = r.iter().map(|r| r * (-r * r).exp()).collect();
        let from0 = cumulative_from_origin(&g, h, Parity::Odd);
        let to_end = cumulative_to_end(&g, h, Parity::Odd);
        let total = (1.0 - (-144.0f64).exp()) / 2.0;
        for j in 0..n {
            let exact = (1.0 - (-r[j] * r[j]).exp()) / 2.0;
            assert!((from0[j] - exact).abs() < 1e-9, "j={j}");
            assert!((to_end[j] - (total - exact)).abs() < 1e-9, "j={j}");
        }
    }

    #[test]
    fn interpolation_at_midpoints() {
        let n = 100;
        let h = 0.1;
        let f: Vec<f64> = nodes(n, h).iter().map(|r| r.sin()).collect();
        for j in 0..n - 1 {
            let x = j as f64 + 1.0;
            let v = evaluate_at(&f, h, x, 0, Parity::Odd);
            assert!((v - (x * h).sin()).abs() < 1e-10);
            let dv = evaluate_at(&f, h, x, 1, Parity::Odd);
            assert!((dv - (x * h).cos()).abs() < 1e-9);
        }
    }
}
