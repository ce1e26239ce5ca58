//! Boundary-fitted coordinates `x = F(y, z) = ρ(y) + z n(y)` and the
//! curvilinear vector calculus in the orthonormal frame `(E₁, E₂, E₃ = n)`.
//!
//! Chart grids reuse [`GridSpec`] with axes `(y₁, y₂, z)`; the face `z = 0` is
//! the image of the surface patch. Metric factors are
//! `√G_jj = √g_jj (1 - κ_j z)`, `G₃₃ = 1`, `√G = √G₁₁ √G₂₂`.

mod patch;
mod terms;

use std::fmt;
use std::sync::Arc;

pub use patch::{ChartDescriptor, ClosurePatch, CylinderPatch, FlatPatch, PatchKind, SpherePatch, SurfacePatch};
pub use terms::{curlcurl_phi_form, curlcurl_principal_form, lower_order_terms, LowerOrderTerms, TermVariant};

use crate::diffops::partial_raw;
use crate::error::{Error, Result};
use crate::fields::{GridSpec, ScalarField, SurfaceField, VectorField};
use patch::{cross, dot3, fd4, norm3};

/// Relative step for differentiating `g` and `κ` in `y`.
const METRIC_FD_STEP: f64 = 1e-6;
/// Relative step for the Jacobian orthogonality check.
const JACOBIAN_FD_STEP: f64 = 1e-3;
const ORTHO_TOL: f64 = 1e-10;

struct ChartData {
    patch: Arc<dyn SurfacePatch>,
    depth: f64,
    grid: GridSpec,
    /// Per surface node: `(E₁, E₂, n)`.
    frame: Vec<[[f64; 3]; 3]>,
    rho: Vec<[f64; 3]>,
    kappa: Vec<[f64; 2]>,
    /// Per node: `√G₁₁, √G₂₂`.
    s: [Vec<f64>; 2],
    /// Per node: `∂_a √G_jj`, indexed `[j][a]`.
    ds: [[Vec<f64>; 3]; 2],
}

#[derive(Clone)]
pub struct Chart {
    inner: Arc<ChartData>,
}

impl fmt::Debug for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Chart")
            .field("descriptor", &self.inner.patch.descriptor())
            .field("depth", &self.inner.depth)
            .field("counts", &self.inner.grid.counts())
            .finish()
    }
}

fn central(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Builds a chart over `grid`, whose axes are `(y₁, y₂, z)`. The `y` extents
/// must lie in the patch domain and the `z` extent in `[0, depth]`.
pub fn build_chart(patch: Arc<dyn SurfacePatch>, depth: f64, grid: GridSpec) -> Result<Chart> {
    if !(depth > 0.0 && depth.is_finite()) {
        return Err(Error::InvalidArgument(format!("chart depth must be positive, got {depth}")));
    }
    let dom = patch.domain();
    let ext = grid.extents();
    let slack = |a: usize| 1e-12 * (dom[a][1] - dom[a][0]).abs();
    for a in 0..2 {
        if ext[a][0] < dom[a][0] - slack(a) || ext[a][1] > dom[a][1] + slack(a) {
            return Err(Error::InvalidGrid(format!("chart grid axis {a} {:?} leaves the patch domain {:?}", ext[a], dom[a])));
        }
    }
    if ext[2][1] > depth * (1.0 + 1e-12) {
        return Err(Error::InvalidGrid(format!("chart grid depth {} exceeds chart depth {depth}", ext[2][1])));
    }
    let [nx, ny, nz] = grid.counts();
    let layer = nx * ny;
    let widths = [dom[0][1] - dom[0][0], dom[1][1] - dom[1][0]];

    let mut frame = Vec::with_capacity(layer);
    let mut rho = Vec::with_capacity(layer);
    let mut kappa = Vec::with_capacity(layer);
    let mut sqrt_g = Vec::with_capacity(layer);
    let mut d_sqrt_g = Vec::with_capacity(layer);
    let mut d_kappa = Vec::with_capacity(layer);
    for p in 0..layer {
        let y = [grid.coord(0, p % nx), grid.coord(1, p / nx)];
        let g = patch.first_form(y);
        if !(g[0] > 0.0 && g[1] > 0.0 && g.iter().all(|v| v.is_finite())) {
            return Err(Error::InvalidArgument(format!("first fundamental form {g:?} not positive at y = {y:?}")));
        }
        let k = patch.curvatures(y);
        for kj in k {
            let margin = 1.0 - kj * depth;
            if margin <= 0.0 {
                return Err(Error::Diffeomorphism { y1: y[0], y2: y[1], z: depth, margin });
            }
        }
        let [t1, t2] = patch.tangents(y);
        let cosine = dot3(t1, t2) / (norm3(t1) * norm3(t2));
        if cosine.abs() > ORTHO_TOL {
            return Err(Error::NonOrthogonal(format!("ρ₁·ρ₂/(|ρ₁||ρ₂|) = {cosine:e} at y = {y:?}")));
        }
        let n = patch.normal(y);
        let e1 = t1.map(|c| c / g[0].sqrt());
        let e2 = t2.map(|c| c / g[1].sqrt());
        frame.push([e1, e2, n]);
        rho.push(patch.rho(y));
        kappa.push(k);
        sqrt_g.push([g[0].sqrt(), g[1].sqrt()]);
        let step = [METRIC_FD_STEP * widths[0], METRIC_FD_STEP * widths[1]];
        let at = |a: usize, t: f64| if a == 0 { [t, y[1]] } else { [y[0], t] };
        d_sqrt_g.push(std::array::from_fn::<[f64; 2], 2, _>(|j| {
            std::array::from_fn(|a| central(|t| patch.first_form(at(a, t))[j].sqrt(), y[a], step[a]))
        }));
        d_kappa.push(std::array::from_fn::<[f64; 2], 2, _>(|j| {
            std::array::from_fn(|a| central(|t| patch.curvatures(at(a, t))[j], y[a], step[a]))
        }));
    }

    let n = grid.len();
    let mut s: [Vec<f64>; 2] = std::array::from_fn(|_| vec![0.0; n]);
    let mut ds: [[Vec<f64>; 3]; 2] = std::array::from_fn(|_| std::array::from_fn(|_| vec![0.0; n]));
    for k in 0..nz {
        let z = grid.coord(2, k);
        for p in 0..layer {
            let idx = p + layer * k;
            for j in 0..2 {
                let (sg, kj) = (sqrt_g[p][j], kappa[p][j]);
                s[j][idx] = sg * (1.0 - kj * z);
                for a in 0..2 {
                    ds[j][a][idx] = d_sqrt_g[p][j][a] * (1.0 - kj * z) - sg * d_kappa[p][j][a] * z;
                }
                ds[j][2][idx] = -sg * kj;
            }
        }
    }
    let chart = Chart { inner: Arc::new(ChartData { patch, depth, grid, frame, rho, kappa, s, ds }) };
    chart.check_jacobian()?;
    Ok(chart)
}

impl Chart {
    pub fn grid(&self) -> &GridSpec {
        &self.inner.grid
    }

    pub fn depth(&self) -> f64 {
        self.inner.depth
    }

    pub fn patch(&self) -> &dyn SurfacePatch {
        self.inner.patch.as_ref()
    }

    /// `F(y, z) = ρ(y) + z n(y)` for arbitrary `(y, z)`.
    pub fn map(&self, y: [f64; 2], z: f64) -> [f64; 3] {
        let r = self.inner.patch.rho(y);
        let n = self.inner.patch.normal(y);
        std::array::from_fn(|i| r[i] + z * n[i])
    }

    /// `F` at a chart grid node.
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let layer = self.layer();
        let p = idx % layer;
        let z = self.inner.grid.coord(2, idx / layer);
        let (r, n) = (self.inner.rho[p], self.inner.frame[p][2]);
        std::array::from_fn(|i| r[i] + z * n[i])
    }

    /// Frame `(E₁, E₂, E₃)` at a chart grid node; independent of `z`.
    pub fn frame(&self, idx: usize) -> [[f64; 3]; 3] {
        self.inner.frame[idx % self.layer()]
    }

    pub fn curvatures(&self, idx: usize) -> [f64; 2] {
        self.inner.kappa[idx % self.layer()]
    }

    /// `(√G₁₁, √G₂₂)` at every node.
    pub fn sqrt_metric(&self) -> [&[f64]; 2] {
        [&self.inner.s[0], &self.inner.s[1]]
    }

    /// `∂_a √G_jj` at every node.
    pub fn sqrt_metric_derivative(&self, j: usize, a: usize) -> &[f64] {
        &self.inner.ds[j][a]
    }

    /// `(G₁₁, G₂₂)` at a node.
    pub fn metric(&self, idx: usize) -> [f64; 2] {
        [self.inner.s[0][idx].powi(2), self.inner.s[1][idx].powi(2)]
    }

    fn layer(&self) -> usize {
        let [nx, ny, _] = self.inner.grid.counts();
        nx * ny
    }

    /// Samples `∂ⱼF` by finite differences and checks orthogonality and
    /// `G_jj = g_jj (1 - κ_j z)²`.
    fn check_jacobian(&self) -> Result<()> {
        let grid = &self.inner.grid;
        let [nx, ny, nz] = grid.counts();
        let dom = self.inner.patch.domain();
        let h = [JACOBIAN_FD_STEP * (dom[0][1] - dom[0][0]), JACOBIAN_FD_STEP * (dom[1][1] - dom[1][0])];
        let pick = |n: usize| -> Vec<usize> {
            let stride = n.div_ceil(8).max(1);
            let mut v: Vec<usize> = (0..n).step_by(stride).collect();
            if *v.last().unwrap() != n - 1 {
                v.push(n - 1);
            }
            v
        };
        for &k in &[0, nz / 2, nz - 1] {
            let z = grid.coord(2, k);
            for &j in &pick(ny) {
                for &i in &pick(nx) {
                    let y = [grid.coord(0, i), grid.coord(1, j)];
                    let f1 = fd4(|t| self.map([t, y[1]], z), y[0], h[0]);
                    let f2 = fd4(|t| self.map([y[0], t], z), y[1], h[1]);
                    let f3 = self.inner.patch.normal(y);
                    let (l1, l2, l3) = (norm3(f1), norm3(f2), norm3(f3));
                    let off = [dot3(f1, f2) / (l1 * l2), dot3(f1, f3) / (l1 * l3), dot3(f2, f3) / (l2 * l3)];
                    if let Some(bad) = off.iter().find(|v| v.abs() > ORTHO_TOL) {
                        return Err(Error::NonOrthogonal(format!("off-diagonal metric {bad:e} at y = {y:?}, z = {z}")));
                    }
                    let idx = grid.index(i, j, k);
                    let g = self.metric(idx);
                    for (jj, fj) in [(0, f1), (1, f2)] {
                        let rel = (dot3(fj, fj) - g[jj]).abs() / g[jj];
                        if rel > ORTHO_TOL {
                            return Err(Error::NonOrthogonal(format!(
                                "G{0}{0} from the Jacobian differs from g(1-κz)² by {rel:e} at y = {y:?}, z = {z}",
                                jj + 1
                            )));
                        }
                    }
                    // The frame must be right-handed: E₁ × E₂ = n.
                    let c = cross(f1, f2);
                    if dot3(c, f3) <= 0.0 {
                        return Err(Error::NonOrthogonal(format!("ρ₁ × ρ₂ is not along the inward normal at y = {y:?}")));
                    }
                }
            }
        }
        Ok(())
    }

    /// `H = ∂₃√G / √G` at every node.
    pub fn mean_curvature_field(&self) -> Vec<f64> {
        let [s1, s2] = self.sqrt_metric();
        let (d1, d2) = (self.sqrt_metric_derivative(0, 2), self.sqrt_metric_derivative(1, 2));
        (0..s1.len()).map(|i| d1[i] / s1[i] + d2[i] / s2[i]).collect()
    }

    /// `e^{∫₀^z H}` by composite trapezoid quadrature along each `z` line.
    pub fn gauge_factor(&self) -> Vec<f64> {
        let grid = self.grid();
        let [nx, ny, nz] = grid.counts();
        let layer = nx * ny;
        let hz = grid.spacing()[2];
        let h = self.mean_curvature_field();
        let mut out = vec![1.0; grid.len()];
        for p in 0..layer {
            let mut integral = 0.0;
            for k in 1..nz {
                integral += 0.5 * hz * (h[p + layer * (k - 1)] + h[p + layer * k]);
                out[p + layer * k] = integral.exp();
            }
        }
        out
    }
}

/// Frame and covariant components of a vector field on a chart:
/// `b_j = B·∂ⱼF` and `B̃_j = b_j / √G_jj`.
#[derive(Clone, Debug)]
pub struct CurvilinearVectorField {
    chart: Chart,
    frame: VectorField,
    covariant: VectorField,
}

impl CurvilinearVectorField {
    /// Wraps frame components `B̃_j` sampled on the chart grid.
    pub fn from_frame(chart: &Chart, frame: VectorField) -> Result<Self> {
        if frame.grid() != chart.grid() {
            return Err(Error::GridMismatch("frame components are not on the chart grid".into()));
        }
        let [s1, s2] = chart.sqrt_metric();
        let c = frame.components();
        let b1 = c[0].values().iter().zip(s1).map(|(v, s)| v * s).collect();
        let b2 = c[1].values().iter().zip(s2).map(|(v, s)| v * s).collect();
        let b3 = c[2].values().to_vec();
        let covariant = VectorField::from_parts(chart.grid(), [b1, b2, b3]);
        Ok(Self { chart: chart.clone(), frame, covariant })
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    /// `B̃_j`.
    pub fn frame_components(&self) -> &VectorField {
        &self.frame
    }

    /// `b_j`.
    pub fn covariant_components(&self) -> &VectorField {
        &self.covariant
    }

    /// Cartesian components `Σ B̃_j E_j` at every chart node.
    pub fn reconstruct(&self) -> VectorField {
        let grid = self.chart.grid();
        let mut out: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; grid.len()]);
        for idx in 0..grid.len() {
            let e = self.chart.frame(idx);
            let b = self.frame.at(idx);
            for (i, o) in out.iter_mut().enumerate() {
                o[idx] = b[0] * e[0][i] + b[1] * e[1][i] + b[2] * e[2][i];
            }
        }
        VectorField::from_parts(grid, out)
    }
}

/// Samples a Cartesian field through the chart: `B̃_j = B(F(y,z))·E_j`.
pub fn pushforward(b: impl Fn([f64; 3]) -> [f64; 3], chart: &Chart) -> Result<CurvilinearVectorField> {
    let grid = chart.grid();
    let mut vals: [Vec<f64>; 3] = std::array::from_fn(|_| Vec::with_capacity(grid.len()));
    for idx in 0..grid.len() {
        let v = b(chart.point(idx));
        let e = chart.frame(idx);
        for (j, out) in vals.iter_mut().enumerate() {
            out.push(dot3(v, e[j]));
        }
    }
    let [a, bb, c] = vals;
    let frame = VectorField::new([
        ScalarField::new(grid.clone(), a)?,
        ScalarField::new(grid.clone(), bb)?,
        ScalarField::new(grid.clone(), c)?,
    ])?;
    CurvilinearVectorField::from_frame(chart, frame)
}

fn prod(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

/// `div B = (1/√G)[∂₁(√G₂₂ B̃₁) + ∂₂(√G₁₁ B̃₂) + ∂₃(√G B̃₃)]`.
pub fn div_curvilinear(u: &CurvilinearVectorField) -> ScalarField {
    let chart = &u.chart;
    let grid = chart.grid();
    let [s1, s2] = chart.sqrt_metric();
    let c = u.frame.components();
    let sg = prod(s1, s2);
    let t1 = partial_raw(grid, &prod(s2, c[0].values()), 0);
    let t2 = partial_raw(grid, &prod(s1, c[1].values()), 1);
    let t3 = partial_raw(grid, &prod(&sg, c[2].values()), 2);
    let out = (0..grid.len()).map(|i| (t1[i] + t2[i] + t3[i]) / sg[i]).collect();
    ScalarField::from_parts(grid.clone(), out)
}

/// Frame components of `curl B` from the covariant components:
/// `R̃₁ = (∂₂b₃ - ∂₃b₂)/√G₂₂`, `R̃₂ = (∂₃b₁ - ∂₁b₃)/√G₁₁`,
/// `R̃₃ = (∂₁b₂ - ∂₂b₁)/√G`.
pub fn curl_curvilinear(u: &CurvilinearVectorField) -> CurvilinearVectorField {
    let chart = &u.chart;
    let grid = chart.grid();
    let [s1, s2] = chart.sqrt_metric();
    let b = u.covariant.components();
    let d = |c: usize, a: usize| partial_raw(grid, b[c].values(), a);
    let (d2b3, d3b2, d3b1, d1b3, d1b2, d2b1) = (d(2, 1), d(1, 2), d(0, 2), d(2, 0), d(1, 0), d(0, 1));
    let n = grid.len();
    let r1 = (0..n).map(|i| (d2b3[i] - d3b2[i]) / s2[i]).collect();
    let r2 = (0..n).map(|i| (d3b1[i] - d1b3[i]) / s1[i]).collect();
    let r3 = (0..n).map(|i| (d1b2[i] - d2b1[i]) / (s1[i] * s2[i])).collect();
    let frame = VectorField::from_parts(grid, [r1, r2, r3]);
    CurvilinearVectorField::from_frame(chart, frame).expect("chart grid")
}

/// Frame components `T̃_j` of `curl² B`, evaluated as the curl of the curl in
/// nested form.
pub fn curlcurl_curvilinear(u: &CurvilinearVectorField) -> CurvilinearVectorField {
    curl_curvilinear(&curl_curvilinear(u))
}

/// `H = ∂₃√G/√G` on the `z = 0` face; equals `-(κ₁ + κ₂)` for the chart metric.
pub fn robin_coefficient(chart: &Chart) -> Result<SurfaceField> {
    let [nx, ny, _] = chart.grid().counts();
    let h = chart.mean_curvature_field();
    let values: Vec<f64> = h[..nx * ny].to_vec();
    for (p, &v) in values.iter().enumerate() {
        let k = chart.curvatures(p);
        let expected = -(k[0] + k[1]);
        if (v - expected).abs() > 1e-10 * (1.0 + expected.abs()) {
            return Err(Error::InvalidArgument(format!("Robin coefficient {v} differs from -(κ₁+κ₂) = {expected} at surface node {p}")));
        }
    }
    SurfaceField::new([nx, ny], values)
}

/// `û₃ = e^{∫₀^z H} ũ₃`, turning the Robin condition `∂₃ũ₃ + Hũ₃ = 0` into a
/// homogeneous Neumann condition for `û₃`.
pub fn exp_gauge(u3: &ScalarField, chart: &Chart) -> Result<ScalarField> {
    if u3.grid() != chart.grid() {
        return Err(Error::GridMismatch("field is not on the chart grid".into()));
    }
    let factor = chart.gauge_factor();
    let out = u3.values().iter().zip(&factor).map(|(u, f)| f * u).collect();
    Ok(ScalarField::from_parts(chart.grid().clone(), out))
}

/// Chart grid with `n` nodes per axis over the patch domain and `[0, depth]`.
pub fn chart_grid(patch: &dyn SurfacePatch, depth: f64, n: usize) -> Result<GridSpec> {
    let d = patch.domain();
    GridSpec::new([d[0], d[1], [0.0, depth]], [n; 3])
}

/// Builds the chart described by `desc` on an `n³` grid.
pub fn build_chart_from_descriptor(desc: &ChartDescriptor, n: usize) -> Result<Chart> {
    let patch: Arc<dyn SurfacePatch> = Arc::from(desc.patch());
    let grid = chart_grid(patch.as_ref(), desc.depth, n)?;
    build_chart(patch, desc.depth, grid)
}
