//! Problem data, compatibility check at `t = 0`, component splitting at Σ, and
//! the cut-off localization `w = ηu`.

use std::fmt;
use std::sync::Arc;

use crate::diffops::StencilPolicy;
use crate::error::{Error, Result};
use crate::fields::{boundary_trace, GridSpec, Mask, MatrixField, ScalarField, SurfaceField, VectorField};

pub type ScalarFn = Arc<dyn Fn(f64, [f64; 3]) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(f64, [f64; 3]) -> [f64; 3] + Send + Sync>;
pub type MatrixFn = Arc<dyn Fn(f64, [f64; 3]) -> [[f64; 3]; 3] + Send + Sync>;

pub const DEFAULT_TOL_DIV: f64 = 1e-8;

pub fn constant_scalar(v: f64) -> ScalarFn {
    Arc::new(move |_, _| v)
}

pub fn zero_vector() -> VectorFn {
    Arc::new(|_, _| [0.0; 3])
}

pub fn constant_matrix(m: [[f64; 3]; 3]) -> MatrixFn {
    Arc::new(move |_, _| m)
}

/// `∂ₜu + a curl²u + B curl u + cu = f`, `div u = 0`, `u_T = 0` on Σ,
/// `u(0) = u⁰`, on the box of `grid` over `(0, t_final]`.
#[derive(Clone)]
pub struct ProblemSpec {
    pub grid: GridSpec,
    pub t_final: f64,
    pub dt: f64,
    pub a: ScalarFn,
    pub c: ScalarFn,
    pub b: MatrixFn,
    pub f: VectorFn,
    pub u0: VectorField,
    /// Dirichlet data on the outer faces; `None` means homogeneous.
    pub outer_data: Option<VectorFn>,
    /// Relative tolerance for `div u⁰`.
    pub tol_div: f64,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("counts", &self.grid.counts())
            .field("t_final", &self.t_final)
            .field("dt", &self.dt)
            .field("outer_data", &self.outer_data.is_some())
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    /// Problem with `a = 1`, `c = 0`, `B = 0`, `f = 0` and homogeneous outer data.
    pub fn new(u0: VectorField, t_final: f64, dt: f64) -> Self {
        Self {
            grid: u0.grid().clone(),
            t_final,
            dt,
            a: constant_scalar(1.0),
            c: constant_scalar(0.0),
            b: constant_matrix([[0.0; 3]; 3]),
            f: zero_vector(),
            u0,
            outer_data: None,
            tol_div: DEFAULT_TOL_DIV,
        }
    }

    /// Number of steps and the effective step `t_final / n`.
    pub fn time_steps(&self) -> (usize, f64) {
        let n = ((self.t_final / self.dt).round() as usize).max(1);
        (n, self.t_final / n as f64)
    }

    pub fn sample_a(&self, t: f64) -> Result<ScalarField> {
        ScalarField::sample(&self.grid, |x| (self.a)(t, x))
    }

    pub fn sample_c(&self, t: f64) -> Result<ScalarField> {
        ScalarField::sample(&self.grid, |x| (self.c)(t, x))
    }

    pub fn sample_b(&self, t: f64) -> Result<MatrixField> {
        MatrixField::sample(&self.grid, |x| (self.b)(t, x))
    }

    pub fn sample_f(&self, t: f64) -> Result<VectorField> {
        VectorField::sample(&self.grid, |x| (self.f)(t, x))
    }

    pub fn outer_value(&self, t: f64, x: [f64; 3]) -> [f64; 3] {
        self.outer_data.as_ref().map_or([0.0; 3], |g| g(t, x))
    }

    /// Checks `a ≥ a₀ > 0` at every node and time level, `div u⁰ = 0` and
    /// `(u⁰)_T = 0` on Σ. Returns `a₀`.
    pub fn validate(&self) -> Result<f64> {
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::InvalidProblem(format!("final time must be positive, got {}", self.t_final)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidProblem(format!("time step must be positive, got {}", self.dt)));
        }
        if self.u0.grid() != &self.grid {
            return Err(Error::GridMismatch("initial data is not on the problem grid".into()));
        }
        let (steps, dt) = self.time_steps();
        let mut a0 = f64::INFINITY;
        for n in 0..=steps {
            let t = n as f64 * dt;
            for idx in 0..self.grid.len() {
                let x = self.grid.point_at(idx);
                let a = (self.a)(t, x);
                if !(a > 0.0 && a.is_finite()) {
                    let [i, j, k] = self.grid.ijk(idx);
                    return Err(Error::InvalidProblem(format!("a = {a} at t = {t}, node ({i}, {j}, {k}); need a ≥ a₀ > 0")));
                }
                a0 = a0.min(a);
            }
        }
        let div = constraint_div_inf(&self.u0);
        let scale = self.u0.max_abs();
        if div > self.tol_div * scale {
            return Err(Error::InvalidProblem(format!(
                "initial data not divergence free: max |div u⁰| = {div:e} > {:e}",
                self.tol_div * scale
            )));
        }
        let [nx, ny, _] = self.grid.counts();
        for c in 0..2 {
            let vals = &self.u0.component(c).values()[..nx * ny];
            if let Some(p) = vals.iter().position(|&v| v != 0.0) {
                return Err(Error::InvalidProblem(format!(
                    "initial tangential trace u{} = {} at Σ node ({}, {})",
                    c + 1,
                    vals[p],
                    p % nx,
                    p / nx
                )));
            }
        }
        Ok(a0)
    }
}

/// Max `|div u|` over nodes not on an outer face (interior and Σ).
pub fn constraint_div_inf(u: &VectorField) -> f64 {
    let grid = u.grid();
    let div = crate::diffops::div(u);
    let [nx, ny, nz] = grid.counts();
    let mut m: f64 = 0.0;
    for k in 0..nz - 1 {
        for j in 1..ny - 1 {
            for i in 1..nx - 1 {
                m = m.max(div.values()[grid.index(i, j, k)].abs());
            }
        }
    }
    m
}

#[derive(Clone, Debug)]
pub struct CompatibilityReport {
    /// Tangential components of `a[curl²u⁰] + [B curl u⁰] - [f]` on Σ.
    pub residual: [SurfaceField; 2],
    /// Same with `-aΔu⁰` in place of `a curl²u⁰`.
    pub laplacian_residual: [SurfaceField; 2],
    pub max: f64,
    pub l2: f64,
    pub laplacian_max: f64,
    pub laplacian_l2: f64,
    /// Max over Σ of the difference between the two forms.
    pub form_difference: f64,
    pub h: f64,
}

/// Evaluates the compatibility condition at `t = 0` on Σ with boundary-accurate
/// second differences.
pub fn check_compatibility(p: &ProblemSpec) -> Result<CompatibilityReport> {
    if p.u0.grid() != &p.grid {
        return Err(Error::GridMismatch("initial data is not on the problem grid".into()));
    }
    let pol = StencilPolicy::default();
    let u0 = &p.u0;
    let cc = pol.curl_curl_hessian(u0);
    let lap = pol.vector_laplacian_compact(u0);
    let curl = pol.curl(u0);
    let grid = &p.grid;
    let [nx, ny, _] = grid.counts();
    let [hx, hy, _] = grid.spacing();
    let layer = nx * ny;
    let mut res: [Vec<f64>; 2] = [vec![0.0; layer], vec![0.0; layer]];
    let mut lres: [Vec<f64>; 2] = [vec![0.0; layer], vec![0.0; layer]];
    for idx in 0..layer {
        let x = grid.point_at(idx);
        let a = (p.a)(0.0, x);
        let b = (p.b)(0.0, x);
        let f = (p.f)(0.0, x);
        let cu = curl.at(idx);
        for c in 0..2 {
            let bcurl = b[c][0] * cu[0] + b[c][1] * cu[1] + b[c][2] * cu[2];
            res[c][idx] = a * cc.component(c).values()[idx] + bcurl - f[c];
            lres[c][idx] = -a * lap.component(c).values()[idx] + bcurl - f[c];
        }
    }
    let stats = |r: &[Vec<f64>; 2]| {
        let mut mx: f64 = 0.0;
        let mut s = 0.0;
        for idx in 0..layer {
            let m2 = r[0][idx] * r[0][idx] + r[1][idx] * r[1][idx];
            mx = mx.max(r[0][idx].abs()).max(r[1][idx].abs());
            let w = trapezoid_weight(idx % nx, nx) * trapezoid_weight(idx / nx, ny);
            s += w * m2;
        }
        (mx, (s * hx * hy).sqrt())
    };
    let (max, l2) = stats(&res);
    let (laplacian_max, laplacian_l2) = stats(&lres);
    let form_difference = (0..layer)
        .map(|i| (res[0][i] - lres[0][i]).abs().max((res[1][i] - lres[1][i]).abs()))
        .fold(0.0, f64::max);
    let [r0, r1] = res;
    let [l0, l1] = lres;
    Ok(CompatibilityReport {
        residual: [SurfaceField::new([nx, ny], r0)?, SurfaceField::new([nx, ny], r1)?],
        laplacian_residual: [SurfaceField::new([nx, ny], l0)?, SurfaceField::new([nx, ny], l1)?],
        max,
        l2,
        laplacian_max,
        laplacian_l2,
        form_difference,
        h: grid.spacing().iter().copied().fold(0.0, f64::max),
    })
}

pub(crate) fn trapezoid_weight(i: usize, n: usize) -> f64 {
    if i == 0 || i + 1 == n {
        0.5
    } else {
        1.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryCondition {
    /// `u_j = 0` on Σ.
    Dirichlet,
    /// `∂u_j/∂ν = 0` on Σ.
    Neumann,
}

/// Componentwise view of a field with the boundary condition each component
/// carries on Σ.
#[derive(Clone, Debug)]
pub struct SplitComponents<'a> {
    pub dirichlet: [&'a ScalarField; 2],
    pub neumann: &'a ScalarField,
    pub tags: [BoundaryCondition; 3],
    /// Max `|u₁|, |u₂|` on Σ.
    pub dirichlet_residual: f64,
    /// Max `|∂u₃/∂ν|` on Σ away from the outer edges.
    pub neumann_residual: f64,
    /// Max `|div u|` over interior and Σ nodes.
    pub div_residual: f64,
}

/// Splits `u` into the Dirichlet pair `(u₁, u₂)` and the Neumann scalar `u₃`.
/// The Neumann condition follows from `div u = 0` and `u_T = 0`, so `u` must be
/// divergence free to `div_tol` (absolute).
pub fn split_components(u: &VectorField, div_tol: f64) -> Result<SplitComponents<'_>> {
    let div_residual = constraint_div_inf(u);
    if div_residual > div_tol {
        return Err(Error::InvalidProblem(format!("split requires div u = 0: max |div u| = {div_residual:e} > {div_tol:e}")));
    }
    let tr = boundary_trace(u)?;
    let dirichlet_residual = tr.tangential[0].max_abs().max(tr.tangential[1].max_abs());
    let neumann_residual = tr.normal_derivative.max_abs_interior();
    Ok(SplitComponents {
        dirichlet: [u.component(0), u.component(1)],
        neumann: u.component(2),
        tags: [BoundaryCondition::Dirichlet, BoundaryCondition::Dirichlet, BoundaryCondition::Neumann],
        dirichlet_residual,
        neumann_residual,
        div_residual,
    })
}

/// Quintic smoothstep profile `χ(s)`, `s = |x|²`: one for `s ≤ R²`, zero for
/// `s ≥ R̃²`, `C²` in between. Being a function of `|x|²`, `η = χ(|x|²)` is even
/// in `z` and `∂η/∂z = 0` on Σ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutoffProfile {
    pub inner: f64,
    pub transition: f64,
}

impl CutoffProfile {
    fn t(&self, s: f64) -> f64 {
        ((s - self.inner * self.inner) / (self.transition * self.transition - self.inner * self.inner)).clamp(0.0, 1.0)
    }

    fn width(&self) -> f64 {
        self.transition * self.transition - self.inner * self.inner
    }

    /// `(η, ∇η, Δη)` at `x`.
    pub fn eval(&self, x: [f64; 3]) -> (f64, [f64; 3], f64) {
        let s = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        let t = self.t(s);
        if t <= 0.0 {
            return (1.0, [0.0; 3], 0.0);
        }
        if t >= 1.0 {
            return (0.0, [0.0; 3], 0.0);
        }
        let w = self.width();
        let eta = 1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
        let d1 = -30.0 * t * t * (1.0 - t) * (1.0 - t) / w;
        let d2 = -60.0 * t * (1.0 - t) * (1.0 - 2.0 * t) / (w * w);
        let grad = x.map(|c| 2.0 * d1 * c);
        let lap = 4.0 * d2 * s + 6.0 * d1;
        (eta, grad, lap)
    }
}

/// Cut-off `η` sampled on a grid together with its analytic derivatives.
#[derive(Clone, Debug)]
pub struct CutoffPair {
    pub profile: CutoffProfile,
    pub inner_radius: f64,
    pub outer_radius: f64,
    pub eta: ScalarField,
    pub grad: VectorField,
    pub laplacian: ScalarField,
    /// `∂η/∂ν = 0` on Σ holds by construction.
    pub neumann_on_sigma: bool,
}

/// `η = 1` on `B_R⁺`, `η = 0` outside `B_R̃`, `R̃ = (R + R₀)/2`.
pub fn build_cutoff(r: f64, r0: f64, grid: &GridSpec) -> Result<CutoffPair> {
    if !(r > 0.0 && r < r0 && r0.is_finite()) {
        return Err(Error::InvalidArgument(format!("cut-off radii need 0 < R < R₀, got R = {r}, R₀ = {r0}")));
    }
    let profile = CutoffProfile { inner: r, transition: 0.5 * (r + r0) };
    let n = grid.len();
    let mut eta = Vec::with_capacity(n);
    let mut lap = Vec::with_capacity(n);
    let mut grad: [Vec<f64>; 3] = std::array::from_fn(|_| Vec::with_capacity(n));
    for idx in 0..n {
        let (e, g, l) = profile.eval(grid.point_at(idx));
        eta.push(e);
        lap.push(l);
        for c in 0..3 {
            grad[c].push(g[c]);
        }
    }
    let [g0, g1, g2] = grad;
    Ok(CutoffPair {
        profile,
        inner_radius: r,
        outer_radius: r0,
        eta: ScalarField::new(grid.clone(), eta)?,
        grad: VectorField::new([
            ScalarField::new(grid.clone(), g0)?,
            ScalarField::new(grid.clone(), g1)?,
            ScalarField::new(grid.clone(), g2)?,
        ])?,
        laplacian: ScalarField::new(grid.clone(), lap)?,
        neumann_on_sigma: true,
    })
}

impl CutoffPair {
    pub fn inner_mask(&self) -> Result<Mask> {
        Mask::half_ball(self.eta.grid(), self.inner_radius)
    }
}

/// Right-hand sides of the localized system for `w = ηu`.
#[derive(Clone, Debug)]
pub struct ModifiedRhs {
    pub forcing: Vec<VectorField>,
    pub divergence: Vec<ScalarField>,
    pub w0: VectorField,
}

/// `F = ηf - a(Δη u + 2Σ∂ⱼη ∂ⱼu) + B(∇η × u)`, `g = ∇η·u`, `w⁰ = ηu⁰` at each
/// stored time level `(t, u(t))`.
///
/// The sign of the last term of `F` follows from `curl(ηu) = η curl u + ∇η × u`.
pub fn modified_rhs(p: &ProblemSpec, series: &[(f64, VectorField)], cut: &CutoffPair) -> Result<ModifiedRhs> {
    let grid = &p.grid;
    if cut.eta.grid() != grid {
        return Err(Error::GridMismatch("cut-off is not on the problem grid".into()));
    }
    let pol = StencilPolicy::default();
    let eta = cut.eta.values();
    let lap = cut.laplacian.values();
    let n = grid.len();
    let mut forcing = Vec::with_capacity(series.len());
    let mut divergence = Vec::with_capacity(series.len());
    for (t, u) in series {
        if u.grid() != grid {
            return Err(Error::GridMismatch("series field is not on the problem grid".into()));
        }
        let du: [[ScalarField; 3]; 3] = std::array::from_fn(|c| std::array::from_fn(|a| pol.partial(u.component(c), a)));
        let mut out: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; n]);
        let mut g = vec![0.0; n];
        for idx in 0..n {
            let x = grid.point_at(idx);
            let a = (p.a)(*t, x);
            let b = (p.b)(*t, x);
            let f = (p.f)(*t, x);
            let uv = u.at(idx);
            let ge = cut.grad.at(idx);
            let cross = [ge[1] * uv[2] - ge[2] * uv[1], ge[2] * uv[0] - ge[0] * uv[2], ge[0] * uv[1] - ge[1] * uv[0]];
            for c in 0..3 {
                let transport: f64 = (0..3).map(|j| ge[j] * du[c][j].values()[idx]).sum();
                let bx = b[c][0] * cross[0] + b[c][1] * cross[1] + b[c][2] * cross[2];
                out[c][idx] = eta[idx] * f[c] - a * (lap[idx] * uv[c] + 2.0 * transport) + bx;
            }
            g[idx] = ge[0] * uv[0] + ge[1] * uv[1] + ge[2] * uv[2];
        }
        forcing.push(VectorField::from_parts(grid, out));
        divergence.push(ScalarField::from_parts(grid.clone(), g));
    }
    let w0 = {
        let comps: [Vec<f64>; 3] = std::array::from_fn(|c| p.u0.component(c).values().iter().zip(eta).map(|(u, e)| u * e).collect());
        VectorField::from_parts(grid, comps)
    };
    Ok(ModifiedRhs { forcing, divergence, w0 })
}
