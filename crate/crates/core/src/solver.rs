//! Implicit time stepping of `∂ₜu - aΔu + B curl u + cu = f` on the half-space
//! box with `u₁ = u₂ = 0` and `∂u₃/∂ν = 0` on Σ, Dirichlet data on the outer
//! faces, and a discrete Leray projection after each step.
//!
//! The Neumann row for `u₃` is the one-sided second-order difference, solved
//! for the Σ value: `u₃(k=0) = (4u₃(k=1) - u₃(k=2))/3`. Eliminating it leaves a
//! row at `k = 1` that becomes symmetric after weighting by `3/2`; the same
//! weight `W` defines the discrete energy and the projection inner product.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::diffops;
use crate::error::{Error, Result};
use crate::fields::{boundary_trace, GridSpec, ScalarField, VectorField};
use crate::linalg::{cg, LinearOperator, SolveStats};
use crate::system::{check_compatibility, constraint_div_inf, ProblemSpec};

const NEUMANN_WEIGHT: f64 = 1.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    BackwardEuler,
    CrankNicolson,
}

impl Scheme {
    fn theta(self) -> f64 {
        match self {
            Scheme::BackwardEuler => 1.0,
            Scheme::CrankNicolson => 0.5,
        }
    }

    pub fn order(self) -> u32 {
        match self {
            Scheme::BackwardEuler => 1,
            Scheme::CrankNicolson => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::BackwardEuler => "be",
            Scheme::CrankNicolson => "cn",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "be" | "backward-euler" => Ok(Scheme::BackwardEuler),
            "cn" | "crank-nicolson" => Ok(Scheme::CrankNicolson),
            _ => Err(Error::InvalidArgument(format!("unknown scheme {s:?} (expected be or cn)"))),
        }
    }
}

/// How the Leray projection enters the time loop.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProjectionMode {
    /// The stepped state evolves without the constraint and every observed
    /// state is its projection.
    Filter,
    /// Project after every step and carry the accumulated projection gradient
    /// into the next implicit solve.
    Incremental,
}

/// Treatment of `B curl u`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BTreatment {
    /// Lagged: `B curl uⁿ` for Backward Euler, second-order extrapolation for
    /// Crank-Nicolson.
    Explicit,
    /// Picard sweeps on the implicit level, capped at `max_sweeps ≤ 5`.
    FixedPoint { max_sweeps: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub scheme: Scheme,
    /// Overrides the problem's time step.
    pub dt: Option<f64>,
    pub linear_tol: f64,
    pub max_linear_iters: usize,
    pub leray_projection: bool,
    pub projection: ProjectionMode,
    pub b_treatment: BTreatment,
    /// Keep every `snapshot_stride`-th state (the final state is always kept).
    pub snapshot_stride: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::CrankNicolson,
            dt: None,
            linear_tol: 1e-10,
            max_linear_iters: 5000,
            leray_projection: true,
            projection: ProjectionMode::Filter,
            b_treatment: BTreatment::Explicit,
            snapshot_stride: 1,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
            }
        }
        if !(self.linear_tol > 0.0) {
            return Err(Error::InvalidArgument(format!("linear_tol must be positive, got {}", self.linear_tol)));
        }
        if self.max_linear_iters == 0 || self.snapshot_stride == 0 {
            return Err(Error::InvalidArgument("max_linear_iters and snapshot_stride must be positive".into()));
        }
        if let BTreatment::FixedPoint { max_sweeps } = self.b_treatment {
            if !(1..=5).contains(&max_sweeps) {
                return Err(Error::InvalidArgument(format!("fixed-point sweeps must be in 1..=5, got {max_sweeps}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepDiagnostics {
    pub step: usize,
    pub time: f64,
    pub div_inf: f64,
    pub bc_dirichlet_res: f64,
    pub bc_neumann_res: f64,
    pub energy: f64,
}

pub const DIAGNOSTICS_HEADER: &str = "step,time,div_inf,bc_dirichlet_res,bc_neumann_res,energy";

impl StepDiagnostics {
    pub fn measure(step: usize, time: f64, u: &VectorField) -> Result<Self> {
        let tr = boundary_trace(u)?;
        Ok(Self {
            step,
            time,
            div_inf: constraint_div_inf(u),
            bc_dirichlet_res: tr.tangential[0].max_abs().max(tr.tangential[1].max_abs()),
            bc_neumann_res: tr.normal_derivative.max_abs_interior(),
            energy: energy(u),
        })
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:e},{:e},{:e},{:e},{:e}",
            self.step, self.time, self.div_inf, self.bc_dirichlet_res, self.bc_neumann_res, self.energy
        )
    }
}

/// Weighted discrete `‖u‖²` over the interior nodes.
pub fn energy(u: &VectorField) -> f64 {
    let grid = u.grid();
    let [nx, ny, nz] = grid.counts();
    let [hx, hy, hz] = grid.spacing();
    let mut s = 0.0;
    for k in 1..nz - 1 {
        for c in 0..3 {
            let w = if c == 2 && k == 1 { NEUMANN_WEIGHT } else { 1.0 };
            let v = u.component(c).values();
            let mut layer = 0.0;
            for j in 1..ny - 1 {
                for i in 1..nx - 1 {
                    let x = v[i + nx * (j + ny * k)];
                    layer += x * x;
                }
            }
            s += w * layer;
        }
    }
    s * hx * hy * hz
}

#[derive(Clone, Debug)]
pub struct SolutionSeries {
    pub times: Vec<f64>,
    pub snapshots: Vec<VectorField>,
    pub diagnostics: Vec<StepDiagnostics>,
    pub dt: f64,
}

impl SolutionSeries {
    pub fn grid(&self) -> &GridSpec {
        self.snapshots[0].grid()
    }

    pub fn final_state(&self) -> &VectorField {
        self.snapshots.last().expect("series holds the initial state")
    }

    pub fn write_diagnostics_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "{DIAGNOSTICS_HEADER}")?;
        for d in &self.diagnostics {
            writeln!(w, "{}", d.csv_row())?;
        }
        Ok(())
    }

    /// Writes `snapshot_NNNNN.bin` per stored time level into `dir`.
    pub fn write_snapshots(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (n, u) in self.snapshots.iter().enumerate() {
            let f = std::fs::File::create(dir.join(format!("snapshot_{n:05}.bin")))?;
            let mut w = std::io::BufWriter::new(f);
            u.write_snapshot(&mut w)?;
            w.flush()?;
        }
        Ok(())
    }
}

fn interior_range(n: usize) -> std::ops::Range<usize> {
    1..n - 1
}

/// `W (1 + θdt c)/a · x - θdt W Δ_h x` on interior nodes, zero elsewhere.
struct HeatOperator<'a> {
    grid: &'a GridSpec,
    diag: Vec<f64>,
    theta_dt: f64,
    neumann: bool,
}

impl HeatOperator<'_> {
    fn weight(&self, k: usize) -> f64 {
        if self.neumann && k == 1 {
            NEUMANN_WEIGHT
        } else {
            1.0
        }
    }

    fn jacobi(&self) -> Vec<f64> {
        let [nx, ny, nz] = self.grid.counts();
        let [hx, hy, hz] = self.grid.spacing();
        let mut d = vec![0.0; self.grid.len()];
        for k in interior_range(nz) {
            let zz = if self.neumann && k == 1 { 2.0 / 3.0 } else { 2.0 };
            let lap = 2.0 / (hx * hx) + 2.0 / (hy * hy) + zz / (hz * hz);
            let w = self.weight(k);
            for j in interior_range(ny) {
                for i in interior_range(nx) {
                    let idx = i + nx * (j + ny * k);
                    d[idx] = 1.0 / (self.diag[idx] + self.theta_dt * w * lap);
                }
            }
        }
        d
    }
}

impl LinearOperator for HeatOperator<'_> {
    fn dim(&self) -> usize {
        self.grid.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let [nx, ny, nz] = self.grid.counts();
        let [hx, hy, hz] = self.grid.spacing();
        let (ix, iy, iz) = (1.0 / (hx * hx), 1.0 / (hy * hy), 1.0 / (hz * hz));
        let layer = nx * ny;
        y.par_chunks_mut(layer).enumerate().for_each(|(k, yk)| {
            yk.iter_mut().for_each(|v| *v = 0.0);
            if k == 0 || k + 1 >= nz {
                return;
            }
            let w = self.weight(k);
            for j in interior_range(ny) {
                for i in interior_range(nx) {
                    let idx = i + nx * (j + ny * k);
                    let xc = x[idx];
                    let below = if k == 1 {
                        if self.neumann {
                            (4.0 * xc - x[idx + layer]) / 3.0
                        } else {
                            0.0
                        }
                    } else {
                        x[idx - layer]
                    };
                    let above = if k + 2 == nz { 0.0 } else { x[idx + layer] };
                    let west = if i == 1 { 0.0 } else { x[idx - 1] };
                    let east = if i + 2 == nx { 0.0 } else { x[idx + 1] };
                    let south = if j == 1 { 0.0 } else { x[idx - nx] };
                    let north = if j + 2 == ny { 0.0 } else { x[idx + nx] };
                    let lap = (west - 2.0 * xc + east) * ix + (south - 2.0 * xc + north) * iy + (below - 2.0 * xc + above) * iz;
                    yk[i + nx * j] = self.diag[idx] * xc - self.theta_dt * w * lap;
                }
            }
        });
    }
}

/// Discrete Leray projection onto fields with zero divergence at every
/// interior node.
///
/// Boundary values are held fixed, except that the Σ value of `u₃` moves with
/// the interior so the one-sided Neumann difference is preserved. Among all
/// such corrections the projection removes the one of least weighted norm, so
/// it never increases [`energy`] of a field with zero outer values.
#[derive(Clone, Debug)]
pub struct LerayProjector {
    grid: GridSpec,
    pub tol: f64,
    pub max_iters: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjectionStats {
    pub solve: SolveStats,
    pub div_before: f64,
    pub div_after: f64,
}

impl LerayProjector {
    pub fn new(grid: &GridSpec, tol: f64, max_iters: usize) -> Self {
        Self { grid: grid.clone(), tol, max_iters }
    }

    fn interior_mask(&self, v: &mut [f64]) {
        for (idx, x) in v.iter_mut().enumerate() {
            if !self.grid.is_interior(idx) {
                *x = 0.0;
            }
        }
    }

    /// Centered divergence at interior nodes, zero elsewhere.
    pub fn interior_divergence(&self, u: &VectorField) -> ScalarField {
        let [a, b, c] = [0, 1, 2].map(|i| u.component(i).values());
        ScalarField::from_parts(self.grid.clone(), self.div_raw([a, b, c]))
    }

    fn div_raw(&self, u: [&[f64]; 3]) -> Vec<f64> {
        let grid = &self.grid;
        let [nx, ny, nz] = grid.counts();
        let [hx, hy, hz] = grid.spacing();
        let layer = nx * ny;
        let mut out = vec![0.0; grid.len()];
        out.par_chunks_mut(layer).enumerate().for_each(|(k, ok)| {
            if k == 0 || k + 1 >= nz {
                return;
            }
            for j in interior_range(ny) {
                for i in interior_range(nx) {
                    let idx = i + nx * (j + ny * k);
                    ok[i + nx * j] = (u[0][idx + 1] - u[0][idx - 1]) / (2.0 * hx)
                        + (u[1][idx + nx] - u[1][idx - nx]) / (2.0 * hy)
                        + (u[2][idx + layer] - u[2][idx - layer]) / (2.0 * hz);
                }
            }
        });
        out
    }

    /// Fills the dependent Σ value of the third component from the interior.
    fn extend(&self, xi: &mut [Vec<f64>; 3]) {
        let [nx, ny, _] = self.grid.counts();
        let layer = nx * ny;
        for j in interior_range(ny) {
            for i in interior_range(nx) {
                let idx = i + nx * j;
                xi[2][idx] = (4.0 * xi[2][idx + layer] - xi[2][idx + 2 * layer]) / 3.0;
            }
        }
    }

    /// `W⁻¹Aᵀφ` for `A = div_h ∘ extend` restricted to interior rows.
    fn adjoint(&self, phi: &[f64]) -> [Vec<f64>; 3] {
        let grid = &self.grid;
        let [nx, ny, nz] = grid.counts();
        let [hx, hy, hz] = grid.spacing();
        let layer = nx * ny;
        let n = grid.len();
        let mut out: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; n]);
        let [o0, o1, o2] = &mut out;
        o0.par_chunks_mut(layer)
            .zip(o1.par_chunks_mut(layer))
            .zip(o2.par_chunks_mut(layer))
            .enumerate()
            .for_each(|(k, ((a, b), c))| {
                if k == 0 || k + 1 >= nz {
                    return;
                }
                for j in interior_range(ny) {
                    for i in interior_range(nx) {
                        let idx = i + nx * (j + ny * k);
                        let l = i + nx * j;
                        a[l] = (phi[idx - 1] - phi[idx + 1]) / (2.0 * hx);
                        b[l] = (phi[idx - nx] - phi[idx + nx]) / (2.0 * hy);
                        c[l] = match k {
                            1 => (-(4.0 / 3.0) * phi[idx] - phi[idx + layer]) / (2.0 * hz) / NEUMANN_WEIGHT,
                            2 => ((4.0 / 3.0) * phi[idx - layer] - phi[idx + layer]) / (2.0 * hz),
                            _ => (phi[idx - layer] - phi[idx + layer]) / (2.0 * hz),
                        };
                    }
                }
            });
        out
    }

    /// Discrete gradient adjoint to the interior divergence under the weighted
    /// inner product; `project(gradient(ψ)) = 0` for any `ψ`.
    pub fn gradient(&self, psi: &ScalarField) -> Result<VectorField> {
        crate::fields::same_grid(psi.grid(), &self.grid)?;
        let mut phi = psi.values().to_vec();
        self.interior_mask(&mut phi);
        let mut g = self.adjoint(&phi);
        for c in &mut g {
            c.iter_mut().for_each(|v| *v = -*v);
        }
        self.extend(&mut g);
        Ok(VectorField::from_parts(&self.grid, g))
    }

    pub fn project(&self, u: &VectorField) -> Result<(VectorField, ProjectionStats)> {
        let (out, _, stats) = self.project_with_correction(u)?;
        Ok((out, stats))
    }

    /// Also returns the removed gradient part.
    pub fn project_with_correction(&self, u: &VectorField) -> Result<(VectorField, VectorField, ProjectionStats)> {
        crate::fields::same_grid(u.grid(), &self.grid)?;
        let r = self.interior_divergence(u).into_values();
        let div_before = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut phi = vec![0.0; self.grid.len()];
        let solve = cg(&SchurOperator { p: self }, None, &r, &mut phi, self.tol, self.max_iters)?;
        let mut delta = self.adjoint(&phi);
        self.extend(&mut delta);
        let comps: [Vec<f64>; 3] =
            std::array::from_fn(|c| u.component(c).values().iter().zip(&delta[c]).map(|(a, d)| a - d).collect());
        let out = VectorField::from_parts(&self.grid, comps);
        let div_after = self.interior_divergence(&out).max_abs();
        Ok((out, VectorField::from_parts(&self.grid, delta), ProjectionStats { solve, div_before, div_after }))
    }
}

struct SchurOperator<'a> {
    p: &'a LerayProjector,
}

impl LinearOperator for SchurOperator<'_> {
    fn dim(&self) -> usize {
        self.p.grid.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let mut xi = self.p.adjoint(x);
        self.p.extend(&mut xi);
        let d = self.p.div_raw([&xi[0], &xi[1], &xi[2]]);
        y.copy_from_slice(&d);
    }
}

/// Projects with the default tolerance `1e-10`.
pub fn leray_project(u: &VectorField) -> Result<VectorField> {
    Ok(LerayProjector::new(u.grid(), 1e-10, 20_000).project(u)?.0)
}

/// Time stepper holding the lagged `B curl u` history.
pub struct Stepper<'a> {
    p: &'a ProblemSpec,
    cfg: SolverConfig,
    dt: f64,
    projector: LerayProjector,
    prev_b: Option<VectorField>,
    pressure: Option<VectorField>,
}

impl<'a> Stepper<'a> {
    pub fn new(p: &'a ProblemSpec, cfg: &SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let dt = match cfg.dt {
            Some(dt) => {
                let mut q = p.clone();
                q.dt = dt;
                q.time_steps().1
            }
            None => p.time_steps().1,
        };
        Ok(Self {
            p,
            cfg: cfg.clone(),
            dt,
            projector: LerayProjector::new(&p.grid, cfg.linear_tol, cfg.max_linear_iters.max(20_000)),
            prev_b: None,
            pressure: None,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn incremental(&self) -> bool {
        self.cfg.leray_projection && self.cfg.projection == ProjectionMode::Incremental
    }

    /// The stepped state that starts from `u⁰`: projected in incremental mode,
    /// `u⁰` itself otherwise.
    pub fn initial_state(&self, u0: &VectorField) -> Result<VectorField> {
        if self.incremental() {
            Ok(self.projector.project(u0)?.0)
        } else {
            Ok(u0.clone())
        }
    }

    /// The observed solution for a stepped state: its projection in filter
    /// mode, the state itself otherwise.
    pub fn constrained(&self, u: &VectorField) -> Result<VectorField> {
        if self.cfg.leray_projection && self.cfg.projection == ProjectionMode::Filter {
            Ok(self.projector.project(u)?.0)
        } else {
            Ok(u.clone())
        }
    }

    fn b_curl(&self, t: f64, u: &VectorField) -> Result<VectorField> {
        diffops::apply_matrix_curl(&self.p.sample_b(t)?, u)
    }

    /// Advances `u` from `t` to `t + dt`.
    pub fn advance(&mut self, u: &VectorField, t: f64) -> Result<VectorField> {
        let p = self.p;
        let grid = &p.grid;
        crate::fields::same_grid(u.grid(), grid)?;
        let dt = self.dt;
        let t1 = t + dt;
        let theta = self.cfg.scheme.theta();
        let a1 = p.sample_a(t1)?;
        let c1 = p.sample_c(t1)?;
        let f1 = p.sample_f(t1)?;
        let hb_n = self.b_curl(t, u)?;

        // Explicit part: uⁿ + dt(θ fⁿ⁺¹ + (1-θ)(fⁿ - Lⁿuⁿ)).
        let mut base: [Vec<f64>; 3] = std::array::from_fn(|c| {
            u.component(c).values().iter().zip(f1.component(c).values()).map(|(x, f)| x + dt * theta * f).collect()
        });
        if theta < 1.0 {
            let a0 = p.sample_a(t)?;
            let c0 = p.sample_c(t)?;
            let f0 = p.sample_f(t)?;
            for (c, bc) in base.iter_mut().enumerate() {
                let lap = diffops::laplacian_compact(u.component(c));
                for idx in 0..grid.len() {
                    let lu = -a0.values()[idx] * lap.values()[idx] + c0.values()[idx] * u.component(c).values()[idx];
                    bc[idx] += dt * (1.0 - theta) * (f0.component(c).values()[idx] - lu);
                }
            }
        }

        let (sweeps, extrapolated) = match (self.cfg.b_treatment, self.cfg.scheme, &self.prev_b) {
            (BTreatment::FixedPoint { max_sweeps }, _, _) => (max_sweeps, None),
            (BTreatment::Explicit, Scheme::BackwardEuler, _) => (0, Some(self.b_curl(t1, u)?)),
            (BTreatment::Explicit, Scheme::CrankNicolson, Some(prev)) => (0, Some(hb_n.lin_comb(1.5, prev, -0.5)?)),
            (BTreatment::Explicit, Scheme::CrankNicolson, None) => (2, None),
        };
        let b_zero = p.sample_b(t1)?.max_row_sum() == 0.0 && p.sample_b(t)?.max_row_sum() == 0.0;

        if let Some(gp) = self.pressure.as_ref().filter(|_| self.incremental()) {
            for (c, bc) in base.iter_mut().enumerate() {
                bc.iter_mut().zip(gp.component(c).values()).for_each(|(b, g)| *b -= dt * g);
            }
        }

        let mut hb = match extrapolated {
            Some(h) => h,
            None => {
                if theta < 1.0 {
                    hb_n.clone()
                } else {
                    self.b_curl(t1, u)?
                }
            }
        };
        let mut next = self.implicit_solve(u, &base, &hb, &a1, &c1, t1)?;
        if !b_zero {
            for _ in 0..sweeps {
                let h1 = self.b_curl(t1, &next)?;
                hb = if theta < 1.0 { hb_n.lin_comb(0.5, &h1, 0.5)? } else { h1 };
                let cand = self.implicit_solve(&next, &base, &hb, &a1, &c1, t1)?;
                let change = cand.lin_comb(1.0, &next, -1.0)?.max_abs();
                next = cand;
                if change <= self.cfg.linear_tol * (1.0 + next.max_abs()) {
                    break;
                }
            }
        }
        self.prev_b = Some(hb_n);

        if self.incremental() {
            let (projected, delta, _) = self.projector.project_with_correction(&next)?;
            next = projected;
            let rate = delta.scale(1.0 / dt);
            self.pressure = Some(match self.pressure.take() {
                Some(gp) => gp.lin_comb(1.0, &rate, 1.0)?,
                None => rate,
            });
        }
        Ok(next)
    }

    fn implicit_solve(
        &self,
        guess: &VectorField,
        base: &[Vec<f64>; 3],
        hb: &VectorField,
        a1: &ScalarField,
        c1: &ScalarField,
        t1: f64,
    ) -> Result<VectorField> {
        let p = self.p;
        let grid = &p.grid;
        let [nx, ny, nz] = grid.counts();
        let [hx, hy, hz] = grid.spacing();
        let theta_dt = self.cfg.scheme.theta() * self.dt;
        let n = grid.len();
        let layer = nx * ny;
        let mut outer: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; n]);
        if p.outer_data.is_some() {
            for idx in 0..n {
                if grid.is_interior(idx) {
                    continue;
                }
                let [i, j, k] = grid.ijk(idx);
                if k == 0 && i > 0 && j > 0 && i + 1 < nx && j + 1 < ny {
                    continue;
                }
                let g = p.outer_value(t1, grid.point_at(idx));
                for c in 0..3 {
                    outer[c][idx] = g[c];
                }
            }
        }
        let solved: Vec<Result<Vec<f64>>> = (0..3)
            .into_par_iter()
            .map(|c| {
                let neumann = c == 2;
                let weight = |k: usize| if neumann && k == 1 { NEUMANN_WEIGHT } else { 1.0 };
                let mut diag = vec![0.0; n];
                let mut rhs = vec![0.0; n];
                let mut x = vec![0.0; n];
                let g = &outer[c];
                for k in interior_range(nz) {
                    let w = weight(k);
                    for j in interior_range(ny) {
                        for i in interior_range(nx) {
                            let idx = i + nx * (j + ny * k);
                            let a = a1.values()[idx];
                            diag[idx] = w * (1.0 + theta_dt * c1.values()[idx]) / a;
                            let mut data = 0.0;
                            if i == 1 {
                                data += g[idx - 1] / (hx * hx);
                            }
                            if i + 2 == nx {
                                data += g[idx + 1] / (hx * hx);
                            }
                            if j == 1 {
                                data += g[idx - nx] / (hy * hy);
                            }
                            if j + 2 == ny {
                                data += g[idx + nx] / (hy * hy);
                            }
                            if k + 2 == nz {
                                data += g[idx + layer] / (hz * hz);
                            }
                            let b = base[c][idx] - self.dt * hb.component(c).values()[idx];
                            rhs[idx] = w * b / a + theta_dt * w * data;
                            x[idx] = guess.component(c).values()[idx];
                        }
                    }
                }
                let op = HeatOperator { grid, diag, theta_dt, neumann };
                let jac = op.jacobi();
                cg(&op, Some(&jac), &rhs, &mut x, self.cfg.linear_tol, self.cfg.max_linear_iters)?;
                for idx in 0..n {
                    if !grid.is_interior(idx) {
                        x[idx] = g[idx];
                    }
                }
                if neumann {
                    for j in interior_range(ny) {
                        for i in interior_range(nx) {
                            let idx = i + nx * j;
                            x[idx] = (4.0 * x[idx + layer] - x[idx + 2 * layer]) / 3.0;
                        }
                    }
                }
                Ok(x)
            })
            .collect();
        let mut it = solved.into_iter();
        let comps: [Vec<f64>; 3] = [it.next().unwrap()?, it.next().unwrap()?, it.next().unwrap()?];
        Ok(VectorField::from_parts(grid, comps))
    }
}

/// One step from the stepped state `(state, t)` with no lagged history,
/// returning the observed solution.
pub fn step(state: &VectorField, t: f64, p: &ProblemSpec, cfg: &SolverConfig) -> Result<VectorField> {
    let mut stepper = Stepper::new(p, cfg)?;
    let next = stepper.advance(state, t)?;
    stepper.constrained(&next)
}

fn preflight(p: &ProblemSpec, dt: f64) -> Result<()> {
    p.validate()?;
    let report = check_compatibility(p)?;
    let f0 = p.sample_f(0.0)?.max_abs();
    let scale = 1.0 + p.u0.max_abs() + f0;
    if report.max > 10.0 * report.h * report.h * scale {
        log::warn!(
            "compatibility residual {:e} on Σ exceeds 10h²·scale = {:e}; continuing",
            report.max,
            10.0 * report.h * report.h * scale
        );
    }
    let h = p.grid.spacing().iter().copied().fold(f64::INFINITY, f64::min);
    let bnorm = p.sample_b(0.0)?.max_row_sum();
    if bnorm * dt / h > 1.0 {
        log::warn!("explicit B term dominates: ‖B‖·dt/h = {:.3} > 1", bnorm * dt / h);
    }
    Ok(())
}

/// Runs the full time integration, calling `observe(step, t, u)` on every
/// observed state including the initial one. With Leray projection on, every
/// observed state satisfies the discrete constraint.
pub fn solve_observed(
    p: &ProblemSpec,
    cfg: &SolverConfig,
    mut observe: impl FnMut(usize, f64, &VectorField) -> Result<()>,
) -> Result<Vec<StepDiagnostics>> {
    let mut stepper = Stepper::new(p, cfg)?;
    let dt = stepper.dt();
    preflight(p, dt)?;
    let steps = (p.t_final / dt).round() as usize;
    let mut u = stepper.initial_state(&p.u0)?;
    let shown = stepper.constrained(&u)?;
    let mut diags = vec![StepDiagnostics::measure(0, 0.0, &shown)?];
    observe(0, 0.0, &shown)?;
    for n in 0..steps {
        let t = n as f64 * dt;
        u = stepper.advance(&u, t)?;
        let t1 = (n + 1) as f64 * dt;
        let shown = stepper.constrained(&u)?;
        let d = StepDiagnostics::measure(n + 1, t1, &shown)?;
        log::debug!("step {} t={:.4} div={:.2e} energy={:.6e}", d.step, d.time, d.div_inf, d.energy);
        diags.push(d);
        observe(n + 1, t1, &shown)?;
    }
    Ok(diags)
}

pub fn solve(p: &ProblemSpec, cfg: &SolverConfig) -> Result<SolutionSeries> {
    let mut times = Vec::new();
    let mut snapshots = Vec::new();
    let stride = cfg.snapshot_stride;
    let mut last = None;
    let diagnostics = solve_observed(p, cfg, |n, t, u| {
        if n % stride == 0 {
            times.push(t);
            snapshots.push(u.clone());
            last = None;
        } else {
            last = Some((t, u.clone()));
        }
        Ok(())
    })?;
    if let Some((t, u)) = last {
        times.push(t);
        snapshots.push(u);
    }
    let dt = diagnostics.get(1).map_or(p.t_final, |d| d.time);
    Ok(SolutionSeries { times, snapshots, diagnostics, dt })
}
