//! Cartesian finite-difference calculus on collocated box grids.
//!
//! First derivatives use the centered stencil `(v[i+1] - v[i-1]) / 2h` in the
//! interior and the one-sided second-order stencils at the two ends of each
//! grid line. Because each `∂_a` acts along one axis only, the discrete
//! partials commute, so `div∘curl = 0` and `curl∘curl = grad div - Δ` hold to
//! rounding when `Δ` is composed as `div∘grad` (see [`laplacian`]).
//!
//! Composed second derivatives are first order at the two outermost layers.
//! The `*_compact` and `hessian` family uses the three-point second-difference
//! (one-sided four-point at the ends) and is second order up to the boundary;
//! the solver and the boundary checks rely on that family.

use rayon::prelude::*;

use crate::error::Result;
use crate::fields::{same_grid, GridSpec, MatrixField, Mask, ScalarField, VectorField};

/// Stencil selection shared by every operator in one computation.
#[derive(Clone, Debug, Default)]
pub struct StencilPolicy {
    /// With a mask present, nodes whose centered support leaves the mask
    /// switch to one-sided stencils pointing into the mask.
    pub use_onesided_at_mask_edge: bool,
    mask: Option<Mask>,
}

impl StencilPolicy {
    pub fn masked(mask: Mask) -> Self {
        Self { use_onesided_at_mask_edge: true, mask: Some(mask) }
    }

    pub fn mask(&self) -> Option<&Mask> {
        self.mask.as_ref()
    }

    fn active_mask(&self) -> Option<&Mask> {
        if self.use_onesided_at_mask_edge {
            self.mask.as_ref()
        } else {
            None
        }
    }

    /// `∂f/∂x_axis`.
    pub fn partial(&self, f: &ScalarField, axis: usize) -> ScalarField {
        let grid = f.grid();
        let h = grid.spacing()[axis];
        let out = apply_line_kernel(grid, f.values(), axis, self.active_mask(), |v, idx, s, pos, n, mask| {
            first_difference(v, idx, s, pos, n, h, mask)
        });
        ScalarField::from_parts(grid.clone(), out)
    }

    /// `∂²f/∂x_axis²` with the compact three-point stencil.
    pub fn second(&self, f: &ScalarField, axis: usize) -> ScalarField {
        let grid = f.grid();
        let h = grid.spacing()[axis];
        let out = apply_line_kernel(grid, f.values(), axis, self.active_mask(), |v, idx, s, pos, n, mask| {
            second_difference(v, idx, s, pos, n, h, mask)
        });
        ScalarField::from_parts(grid.clone(), out)
    }

    pub fn grad(&self, s: &ScalarField) -> VectorField {
        let [a, b, c] = std::array::from_fn(|axis| self.partial(s, axis).into_values());
        VectorField::from_parts(s.grid(), [a, b, c])
    }

    pub fn div(&self, u: &VectorField) -> ScalarField {
        let parts: [ScalarField; 3] = std::array::from_fn(|a| self.partial(u.component(a), a));
        sum3(&parts)
    }

    pub fn curl(&self, u: &VectorField) -> VectorField {
        let d = |c: usize, a: usize| self.partial(u.component(c), a);
        let x = sub(&d(2, 1), &d(1, 2));
        let y = sub(&d(0, 2), &d(2, 0));
        let z = sub(&d(1, 0), &d(0, 1));
        VectorField::from_parts(u.grid(), [x, y, z])
    }

    /// `div(grad s)`, consistent with [`Self::curl_curl`].
    pub fn laplacian(&self, s: &ScalarField) -> ScalarField {
        let parts: [ScalarField; 3] = std::array::from_fn(|a| self.partial(&self.partial(s, a), a));
        sum3(&parts)
    }

    pub fn vector_laplacian(&self, u: &VectorField) -> VectorField {
        let [a, b, c] = std::array::from_fn(|i| self.laplacian(u.component(i)).into_values());
        VectorField::from_parts(u.grid(), [a, b, c])
    }

    pub fn curl_curl(&self, u: &VectorField) -> VectorField {
        self.curl(&self.curl(u))
    }

    pub fn apply_matrix_curl(&self, b: &MatrixField, u: &VectorField) -> Result<VectorField> {
        same_grid(b.grid(), u.grid())?;
        Ok(matvec(b, &self.curl(u)))
    }

    /// Symmetric Hessian: compact second differences on the diagonal, composed
    /// first differences off it.
    pub fn hessian(&self, s: &ScalarField) -> [[ScalarField; 3]; 3] {
        let d: [ScalarField; 3] = std::array::from_fn(|a| self.partial(s, a));
        let dxy = self.partial(&d[0], 1);
        let dxz = self.partial(&d[0], 2);
        let dyz = self.partial(&d[1], 2);
        [
            [self.second(s, 0), dxy.clone(), dxz.clone()],
            [dxy, self.second(s, 1), dyz.clone()],
            [dxz, dyz, self.second(s, 2)],
        ]
    }

    /// Sum of compact second differences; second order up to the boundary.
    pub fn laplacian_compact(&self, s: &ScalarField) -> ScalarField {
        let parts: [ScalarField; 3] = std::array::from_fn(|a| self.second(s, a));
        sum3(&parts)
    }

    pub fn vector_laplacian_compact(&self, u: &VectorField) -> VectorField {
        let [a, b, c] = std::array::from_fn(|i| self.laplacian_compact(u.component(i)).into_values());
        VectorField::from_parts(u.grid(), [a, b, c])
    }

    /// `curl² u = grad div u - Δu` assembled from [`Self::hessian`] entries.
    pub fn curl_curl_hessian(&self, u: &VectorField) -> VectorField {
        let grid = u.grid();
        let n = grid.len();
        let mut out: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; n]);
        for (i, oi) in out.iter_mut().enumerate() {
            for j in 0..3 {
                if i == j {
                    continue;
                }
                let mixed = self.partial(&self.partial(u.component(j), j), i);
                let pure = self.second(u.component(i), j);
                for ((o, m), p) in oi.iter_mut().zip(mixed.values()).zip(pure.values()) {
                    *o += m - p;
                }
            }
        }
        VectorField::from_parts(grid, out)
    }
}

#[inline]
fn first_difference(v: &[f64], idx: usize, s: usize, pos: usize, n: usize, h: f64, mask: Option<&Mask>) -> f64 {
    let inside = |p: usize| mask.is_none_or(|m| m.contains(p));
    let centered_ok = pos > 0 && pos + 1 < n;
    let forward_ok = pos + 2 < n;
    let backward_ok = pos >= 2;
    let (centered, forward, backward) = match mask {
        None => (centered_ok, forward_ok, backward_ok),
        Some(_) => (
            centered_ok && inside(idx - s) && inside(idx + s),
            forward_ok && inside(idx + s) && inside(idx + 2 * s),
            backward_ok && inside(idx - s) && inside(idx - 2 * s),
        ),
    };
    if centered {
        (v[idx + s] - v[idx - s]) / (2.0 * h)
    } else if forward {
        (-3.0 * v[idx] + 4.0 * v[idx + s] - v[idx + 2 * s]) / (2.0 * h)
    } else if backward {
        (3.0 * v[idx] - 4.0 * v[idx - s] + v[idx - 2 * s]) / (2.0 * h)
    } else {
        first_difference(v, idx, s, pos, n, h, None)
    }
}

#[inline]
fn second_difference(v: &[f64], idx: usize, s: usize, pos: usize, n: usize, h: f64, mask: Option<&Mask>) -> f64 {
    let inside = |p: usize| mask.is_none_or(|m| m.contains(p));
    let centered_ok = pos > 0 && pos + 1 < n;
    let forward_ok = pos + 3 < n;
    let backward_ok = pos >= 3;
    let (centered, forward, backward) = match mask {
        None => (centered_ok, forward_ok, backward_ok),
        Some(_) => (
            centered_ok && inside(idx - s) && inside(idx + s),
            forward_ok && (1..=3).all(|q| inside(idx + q * s)),
            backward_ok && (1..=3).all(|q| inside(idx - q * s)),
        ),
    };
    let h2 = h * h;
    if centered {
        (v[idx + s] - 2.0 * v[idx] + v[idx - s]) / h2
    } else if forward {
        (2.0 * v[idx] - 5.0 * v[idx + s] + 4.0 * v[idx + 2 * s] - v[idx + 3 * s]) / h2
    } else if backward {
        (2.0 * v[idx] - 5.0 * v[idx - s] + 4.0 * v[idx - 2 * s] - v[idx - 3 * s]) / h2
    } else {
        second_difference(v, idx, s, pos, n, h, None)
    }
}

/// `∂v/∂x_axis` on raw node values with the unmasked policy.
pub(crate) fn partial_raw(grid: &GridSpec, v: &[f64], axis: usize) -> Vec<f64> {
    let h = grid.spacing()[axis];
    apply_line_kernel(grid, v, axis, None, |v, idx, s, pos, n, _| first_difference(v, idx, s, pos, n, h, None))
}

/// Compact `∂²v/∂x_axis²` on raw node values.
pub(crate) fn second_raw(grid: &GridSpec, v: &[f64], axis: usize) -> Vec<f64> {
    let h = grid.spacing()[axis];
    apply_line_kernel(grid, v, axis, None, |v, idx, s, pos, n, _| second_difference(v, idx, s, pos, n, h, None))
}

/// Evaluates a per-node stencil along `axis`, parallel over `z` slabs.
fn apply_line_kernel<K>(grid: &GridSpec, v: &[f64], axis: usize, mask: Option<&Mask>, kernel: K) -> Vec<f64>
where
    K: Fn(&[f64], usize, usize, usize, usize, Option<&Mask>) -> f64 + Sync,
{
    let [nx, ny, _] = grid.counts();
    let n = grid.counts()[axis];
    let s = grid.stride(axis);
    let layer = nx * ny;
    let mut out = vec![0.0; grid.len()];
    out.par_chunks_mut(layer).enumerate().for_each(|(k, slab)| {
        for j in 0..ny {
            for i in 0..nx {
                let idx = i + nx * (j + ny * k);
                let pos = [i, j, k][axis];
                slab[i + nx * j] = kernel(v, idx, s, pos, n, mask);
            }
        }
    });
    out
}

fn sum3(parts: &[ScalarField; 3]) -> ScalarField {
    let values = parts[0]
        .values()
        .iter()
        .zip(parts[1].values())
        .zip(parts[2].values())
        .map(|((a, b), c)| a + b + c)
        .collect();
    ScalarField::from_parts(parts[0].grid().clone(), values)
}

fn sub(a: &ScalarField, b: &ScalarField) -> Vec<f64> {
    a.values().iter().zip(b.values()).map(|(x, y)| x - y).collect()
}

/// Pointwise `B v`.
pub fn matvec(b: &MatrixField, v: &VectorField) -> VectorField {
    let grid = v.grid();
    let n = grid.len();
    let mut out: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; n]);
    for (r, o) in out.iter_mut().enumerate() {
        for (c, vc) in v.components().iter().enumerate() {
            for ((oi, bi), vi) in o.iter_mut().zip(b.entry(r, c).values()).zip(vc.values()) {
                *oi += bi * vi;
            }
        }
    }
    VectorField::from_parts(grid, out)
}

pub fn partial(f: &ScalarField, axis: usize) -> ScalarField {
    StencilPolicy::default().partial(f, axis)
}

pub fn grad(s: &ScalarField) -> VectorField {
    StencilPolicy::default().grad(s)
}

pub fn div(u: &VectorField) -> ScalarField {
    StencilPolicy::default().div(u)
}

pub fn curl(u: &VectorField) -> VectorField {
    StencilPolicy::default().curl(u)
}

pub fn laplacian(s: &ScalarField) -> ScalarField {
    StencilPolicy::default().laplacian(s)
}

pub fn vector_laplacian(u: &VectorField) -> VectorField {
    StencilPolicy::default().vector_laplacian(u)
}

pub fn curl_curl(u: &VectorField) -> VectorField {
    StencilPolicy::default().curl_curl(u)
}

pub fn apply_matrix_curl(b: &MatrixField, u: &VectorField) -> Result<VectorField> {
    StencilPolicy::default().apply_matrix_curl(b, u)
}

pub fn laplacian_compact(s: &ScalarField) -> ScalarField {
    StencilPolicy::default().laplacian_compact(s)
}

pub fn curl_curl_hessian(u: &VectorField) -> VectorField {
    StencilPolicy::default().curl_curl_hessian(u)
}
