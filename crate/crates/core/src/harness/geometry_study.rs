use rayon::prelude::*;

use crate::diffops;
use crate::fields::VectorField;
use crate::geometry::{
    build_chart_from_descriptor, curl_curvilinear, curlcurl_curvilinear, curlcurl_phi_form, curlcurl_principal_form, div_curvilinear,
    pushforward, robin_coefficient, Chart, ChartDescriptor, PatchKind, TermVariant,
};
use crate::{Error, Result};

use super::convergence::ConvergenceTable;

type Vec3 = fn([f64; 3]) -> [f64; 3];

/// Cartesian field with closed-form `div`, `curl` and `curl²`.
#[derive(Clone, Copy, Debug)]
pub struct AnalyticField {
    pub name: &'static str,
    pub u: Vec3,
    pub div: fn([f64; 3]) -> f64,
    pub curl: Vec3,
    pub curl2: Vec3,
    pub solenoidal: bool,
}

impl AnalyticField {
    pub fn poly() -> Self {
        Self {
            name: "poly",
            u: |[a, b, c]| [a * b * b + c, a * c * c + b * b, a * a * b - c * c],
            div: |[_, b, c]| b * b + 2.0 * b - 2.0 * c,
            curl: |[a, b, c]| [a * a - 2.0 * a * c, 1.0 - 2.0 * a * b, c * c - 2.0 * a * b],
            curl2: |[a, b, _]| [-2.0 * a, 2.0 * b - 2.0 * a, -2.0 * b],
            solenoidal: false,
        }
    }

    pub fn trig() -> Self {
        Self {
            name: "trig",
            u: |[a, b, c]| [a.sin() * b.cos(), b.sin() * c.cos(), c.sin() * a.cos()],
            div: |[a, b, c]| a.cos() * b.cos() + b.cos() * c.cos() + c.cos() * a.cos(),
            curl: |[a, b, c]| [b.sin() * c.sin(), c.sin() * a.sin(), a.sin() * b.sin()],
            curl2: |[a, b, c]| [a.sin() * (b.cos() - c.cos()), b.sin() * (c.cos() - a.cos()), c.sin() * (a.cos() - b.cos())],
            solenoidal: false,
        }
    }

    /// Divergence free, `curl² u = 2u`.
    pub fn solenoidal_trig() -> Self {
        Self {
            name: "solenoidal-trig",
            u: |[a, b, c]| [b.cos() * c.sin(), c.cos() * a.sin(), a.cos() * b.sin()],
            div: |_| 0.0,
            curl: |[a, b, c]| {
                [a.cos() * b.cos() + a.sin() * c.sin(), b.cos() * c.cos() + a.sin() * b.sin(), c.cos() * a.cos() + b.sin() * c.sin()]
            },
            curl2: |[a, b, c]| [2.0 * b.cos() * c.sin(), 2.0 * c.cos() * a.sin(), 2.0 * a.cos() * b.sin()],
            solenoidal: true,
        }
    }

    /// Divergence-free polynomial.
    pub fn solenoidal_poly() -> Self {
        Self {
            name: "solenoidal-poly",
            u: |[a, b, c]| [b * b * c, c * c * a, a * a * b],
            div: |_| 0.0,
            curl: |[a, b, c]| [a * a - 2.0 * c * a, b * b - 2.0 * a * b, c * c - 2.0 * b * c],
            curl2: |[a, b, c]| [-2.0 * c, -2.0 * a, -2.0 * b],
            solenoidal: true,
        }
    }

    pub fn all() -> Vec<Self> {
        vec![Self::poly(), Self::trig(), Self::solenoidal_trig(), Self::solenoidal_poly()]
    }

    pub fn by_name(name: &str) -> Result<Self> {
        Self::all()
            .into_iter()
            .find(|f| f.name == name)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown analytic field {name:?}")))
    }
}

pub fn chart_label(desc: &ChartDescriptor) -> String {
    match desc.kind {
        PatchKind::Flat => "flat".into(),
        PatchKind::Sphere { radius } => format!("sphere-r{radius}"),
        PatchKind::Cylinder { radius } => format!("cylinder-r{radius}"),
        PatchKind::StretchedSphere { radius, stretch } => format!("stretched-sphere-r{radius}-s{stretch}"),
    }
}

/// `H = −(κ₁ + κ₂)` in closed form for the built-in charts.
pub fn robin_exact(kind: &PatchKind) -> f64 {
    match *kind {
        PatchKind::Flat => 0.0,
        PatchKind::Sphere { radius } | PatchKind::StretchedSphere { radius, .. } => -2.0 / radius,
        PatchKind::Cylinder { radius } => -1.0 / radius,
    }
}

/// Nodes of the current grid that coincide with the nodes of the coarsest
/// grid at least two cells away from every face.
fn common_points(chart: &Chart, coarse: usize) -> Vec<usize> {
    let g = chart.grid();
    let m = (g.counts()[0] - 1) / (coarse - 1);
    let mut out = Vec::new();
    for k in 2..coarse - 2 {
        for j in 2..coarse - 2 {
            for i in 2..coarse - 2 {
                out.push(g.index(i * m, j * m, k * m));
            }
        }
    }
    out
}

fn frame_project(chart: &Chart, idx: usize, v: [f64; 3]) -> [f64; 3] {
    let e = chart.frame(idx);
    std::array::from_fn(|j| e[j][0] * v[0] + e[j][1] * v[1] + e[j][2] * v[2])
}

fn gap(points: &[usize], a: &VectorField, b: impl Fn(usize) -> [f64; 3]) -> f64 {
    points
        .iter()
        .map(|&i| {
            let (x, y) = (a.at(i), b(i));
            (0..3).map(|c| (x[c] - y[c]).abs()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

type Cell = Vec<(String, String, f64, f64)>;

fn study_cell(desc: &ChartDescriptor, field: &AnalyticField, n: usize, coarse: usize) -> Result<Cell> {
    let chart = build_chart_from_descriptor(desc, n)?;
    let label = format!("{}/{}", chart_label(desc), field.name);
    let h = chart.grid().spacing()[0];
    let pts = common_points(&chart, coarse);
    let u = pushforward(field.u, &chart)?;
    let div = div_curvilinear(&u);
    let curl = curl_curvilinear(&u);
    let cc = curlcurl_curvilinear(&u);
    let mut rows: Cell = Vec::new();
    if desc.kind == PatchKind::Flat {
        // The flat chart is compared against the Cartesian stencils themselves.
        let cart = VectorField::sample(chart.grid(), field.u)?;
        let (d, c, c2) = (diffops::div(&cart), diffops::curl(&cart), diffops::curl_curl(&cart));
        let e_div = pts.iter().map(|&i| (div.values()[i] - d.values()[i]).abs()).fold(0.0, f64::max);
        rows.push((label.clone(), "div".into(), h, e_div));
        rows.push((label.clone(), "curl".into(), h, gap(&pts, curl.frame_components(), |i| c.at(i))));
        rows.push((label.clone(), "curlcurl".into(), h, gap(&pts, cc.frame_components(), |i| c2.at(i))));
    } else {
        let e_div = pts.iter().map(|&i| (div.values()[i] - (field.div)(chart.point(i))).abs()).fold(0.0, f64::max);
        rows.push((label.clone(), "div".into(), h, e_div));
        let e_curl = gap(&pts, curl.frame_components(), |i| frame_project(&chart, i, (field.curl)(chart.point(i))));
        rows.push((label.clone(), "curl".into(), h, e_curl));
        let e_cc = gap(&pts, cc.frame_components(), |i| frame_project(&chart, i, (field.curl2)(chart.point(i))));
        rows.push((label.clone(), "curlcurl".into(), h, e_cc));
    }
    if field.solenoidal {
        let direct = cc.frame_components();
        for (variant, tag) in [(TermVariant::Corrected, "corrected"), (TermVariant::Printed, "printed")] {
            let phi = curlcurl_phi_form(&u, variant);
            let principal = curlcurl_principal_form(&u, variant);
            rows.push((label.clone(), format!("phi-form.{tag}"), h, gap(&pts, direct, |i| phi.at(i))));
            rows.push((label.clone(), format!("principal-form.{tag}"), h, gap(&pts, direct, |i| principal.at(i))));
            rows.push((label.clone(), format!("phi-vs-principal.{tag}"), h, gap(&pts, &phi, |i| principal.at(i))));
        }
    }
    Ok(rows)
}

fn robin_cell(desc: &ChartDescriptor, n: usize) -> Result<Cell> {
    let chart = build_chart_from_descriptor(desc, n)?;
    let exact = robin_exact(&desc.kind);
    let err = robin_coefficient(&chart)?.values().iter().map(|v| (v - exact).abs()).fold(0.0, f64::max);
    Ok(vec![(format!("{}/robin", chart_label(desc)), "robin".into(), chart.grid().spacing()[0], err)])
}

/// Errors of the curvilinear `div`, `curl`, `curl²` against closed forms
/// pushed through each chart (Cartesian stencils for the flat chart), the
/// consistency gaps between the direct, `φ`-form and principal-form
/// expansions of `curl²` for divergence-free fields, and the Robin
/// coefficient error. Cells run in parallel and are reduced in input order.
pub fn geometry_study(charts: &[ChartDescriptor], fields: &[AnalyticField], resolutions: &[usize]) -> Result<ConvergenceTable> {
    let coarse = *resolutions.first().ok_or_else(|| Error::InvalidArgument("no resolutions".into()))?;
    if coarse < 5 || resolutions.windows(2).any(|w| w[1] - 1 != 2 * (w[0] - 1)) {
        return Err(Error::InvalidArgument(format!("resolutions must start at ≥ 5 and refine dyadically, got {resolutions:?}")));
    }
    let mut jobs: Vec<(usize, usize, Option<usize>)> = Vec::new();
    for c in 0..charts.len() {
        for f in 0..fields.len() {
            for &n in resolutions {
                jobs.push((c, n, Some(f)));
            }
        }
        for &n in resolutions {
            jobs.push((c, n, None));
        }
    }
    let cells: Vec<Result<Cell>> = jobs
        .par_iter()
        .map(|&(c, n, f)| match f {
            Some(f) => study_cell(&charts[c], &fields[f], n, coarse),
            None => robin_cell(&charts[c], n),
        })
        .collect();
    let mut table = ConvergenceTable::default();
    for cell in cells {
        for (label, metric, h, v) in cell? {
            table.push(&label, &metric, h, 0.0, v);
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(f: &AnalyticField) {
        let x = [0.3, -0.2, 0.45];
        let e = 1e-5;
        let d = |g: &dyn Fn([f64; 3]) -> [f64; 3], axis: usize| -> [f64; 3] {
            let (mut p, mut m) = (x, x);
            p[axis] += e;
            m[axis] -= e;
            let (a, b) = (g(p), g(m));
            std::array::from_fn(|c| (a[c] - b[c]) / (2.0 * e))
        };
        let du: [[f64; 3]; 3] = std::array::from_fn(|ax| d(&f.u, ax));
        assert!((du[0][0] + du[1][1] + du[2][2] - (f.div)(x)).abs() < 1e-8);
        let curl = [du[1][2] - du[2][1], du[2][0] - du[0][2], du[0][1] - du[1][0]];
        let c = (f.curl)(x);
        let dc: [[f64; 3]; 3] = std::array::from_fn(|ax| d(&f.curl, ax));
        let curl2 = [dc[1][2] - dc[2][1], dc[2][0] - dc[0][2], dc[0][1] - dc[1][0]];
        let c2 = (f.curl2)(x);
        for k in 0..3 {
            assert!((curl[k] - c[k]).abs() < 1e-8, "{} curl", f.name);
            assert!((curl2[k] - c2[k]).abs() < 1e-8, "{} curl²", f.name);
        }
        if f.solenoidal {
            assert_eq!((f.div)(x), 0.0);
        }
    }

    #[test]
    fn analytic_fields_are_consistent() {
        for f in AnalyticField::all() {
            fd_check(&f);
        }
    }

    #[test]
    fn robin_closed_forms() {
        assert_eq!(robin_exact(&PatchKind::Sphere { radius: 2.0 }), -1.0);
        assert_eq!(robin_exact(&PatchKind::Cylinder { radius: 1.0 }), -1.0);
        assert_eq!(robin_exact(&PatchKind::Flat), 0.0);
    }
}
