use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fields::{GridSpec, Mask, VectorField};
use crate::norms::lq_norm_field;
use crate::solver::{solve, solve_observed, Scheme, SolverConfig};
use crate::{Error, Result};

use super::mms::{mms_generate, MmsFamily};

pub const CONVERGENCE_HEADER: &str = "label,metric,h,dt,value,order";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub label: String,
    pub metric: String,
    pub h: f64,
    pub dt: f64,
    pub value: f64,
}

/// Rows grouped by `(label, metric)` in insertion order; each group is a
/// refinement sequence.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn push(&mut self, label: &str, metric: &str, h: f64, dt: f64, value: f64) {
        self.rows.push(ConvergenceRow { label: label.to_string(), metric: metric.to_string(), h, dt, value });
    }

    /// Distinct `(label, metric)` groups in first-seen order.
    pub fn groups(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = Vec::new();
        for r in &self.rows {
            let key = (r.label.clone(), r.metric.clone());
            if !out.contains(&key) {
                out.push(key);
            }
        }
        out
    }

    pub fn series(&self, label: &str, metric: &str) -> Vec<&ConvergenceRow> {
        self.rows.iter().filter(|r| r.label == label && r.metric == metric).collect()
    }

    /// `log2(e_k / e_{k+1})` between consecutive rows of a group. Refinement is
    /// assumed dyadic; [`ConvergenceTable::check_dyadic`] verifies it.
    pub fn orders(&self, label: &str, metric: &str) -> Vec<f64> {
        self.series(label, metric).windows(2).map(|w| (w[0].value / w[1].value).log2()).collect()
    }

    /// Each group must refine `h` (or `dt` when `h` is fixed) by exactly a
    /// factor two per row.
    pub fn check_dyadic(&self) -> Result<()> {
        for (label, metric) in self.groups() {
            for w in self.series(&label, &metric).windows(2) {
                let (a, b) = if w[0].h == w[1].h { (w[0].dt, w[1].dt) } else { (w[0].h, w[1].h) };
                if ((a / b) - 2.0).abs() > 1e-9 {
                    return Err(Error::InvalidArgument(format!("{label}/{metric}: refinement {a} -> {b} is not dyadic")));
                }
            }
        }
        Ok(())
    }

    /// CSV with [`CONVERGENCE_HEADER`]; the order column is empty on the
    /// first row of each group.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "{CONVERGENCE_HEADER}")?;
        for (label, metric) in self.groups() {
            let rows = self.series(&label, &metric);
            for (i, r) in rows.iter().enumerate() {
                let order = if i == 0 { String::new() } else { format!("{:e}", (rows[i - 1].value / r.value).log2()) };
                writeln!(w, "{},{},{:e},{:e},{:e},{}", r.label, r.metric, r.h, r.dt, r.value, order)?;
            }
        }
        Ok(())
    }
}

fn l2(u: &VectorField, v: &VectorField) -> Result<f64> {
    let d = u.lin_comb(1.0, v, -1.0)?;
    lq_norm_field(&d, 2.0, &Mask::full(u.grid()))
}

/// Joint space-time refinement on `half_space(n, 1, 1)` grids, with
/// `base_steps` steps on the first resolution and doubling from there.
/// Records max-in-time L² (`l2`) and L^∞ (`linf`) errors against the exact
/// solution.
pub fn convergence_study(
    family: &MmsFamily,
    resolutions: &[usize],
    scheme: Scheme,
    t_final: f64,
    base_steps: usize,
) -> Result<ConvergenceTable> {
    check_resolutions(resolutions)?;
    let cells: Vec<Result<(f64, f64, f64, f64)>> = resolutions
        .par_iter()
        .enumerate()
        .map(|(k, &n)| {
            let grid = GridSpec::half_space(n, 1.0, 1.0)?;
            let steps = base_steps << k;
            let dt = t_final / steps as f64;
            let prob = mms_generate(family, &grid, t_final, dt)?;
            let cfg = SolverConfig { scheme, ..SolverConfig::default() };
            let (mut e2, mut einf) = (0.0f64, 0.0f64);
            solve_observed(&prob.spec, &cfg, |_, t, u| {
                let exact = prob.exact_at(t)?;
                e2 = e2.max(l2(u, &exact)?);
                einf = einf.max(u.lin_comb(1.0, &exact, -1.0)?.max_abs());
                Ok(())
            })?;
            Ok((grid.spacing()[0], dt, e2, einf))
        })
        .collect();
    let label = format!("{}/{}", family.name, scheme.name());
    let mut table = ConvergenceTable::default();
    let cells = cells.into_iter().collect::<Result<Vec<_>>>()?;
    for &(h, dt, e2, _) in &cells {
        table.push(&label, "l2", h, dt, e2);
    }
    for &(h, dt, _, einf) in &cells {
        table.push(&label, "linf", h, dt, einf);
    }
    Ok(table)
}

/// Temporal refinement on a fixed `n³` grid. Records the Richardson
/// differences `‖u_{dt} − u_{dt/2}‖` at the final time (`richardson.l2`),
/// which isolate the time error from the fixed spatial error, and the final
/// error against the exact solution (`final.l2`).
pub fn temporal_study(family: &MmsFamily, n: usize, steps: &[usize], scheme: Scheme, t_final: f64) -> Result<ConvergenceTable> {
    if steps.len() < 3 || steps.windows(2).any(|w| w[1] != 2 * w[0]) {
        return Err(Error::InvalidArgument(format!("temporal study needs ≥ 3 doubling step counts, got {steps:?}")));
    }
    let grid = GridSpec::half_space(n, 1.0, 1.0)?;
    let finals: Vec<Result<(VectorField, VectorField)>> = steps
        .par_iter()
        .map(|&s| {
            let prob = mms_generate(family, &grid, t_final, t_final / s as f64)?;
            let cfg = SolverConfig { scheme, ..SolverConfig::default() };
            let series = solve(&prob.spec, &cfg)?;
            Ok((series.final_state().clone(), prob.exact_at(*series.times.last().expect("non-empty"))?))
        })
        .collect();
    let finals = finals.into_iter().collect::<Result<Vec<_>>>()?;
    let label = format!("{}/{}/n{n}", family.name, scheme.name());
    let h = grid.spacing()[0];
    let mut table = ConvergenceTable::default();
    for (k, w) in finals.windows(2).enumerate() {
        table.push(&label, "richardson.l2", h, t_final / steps[k] as f64, l2(&w[0].0, &w[1].0)?);
    }
    for (k, (u, exact)) in finals.iter().enumerate() {
        table.push(&label, "final.l2", h, t_final / steps[k] as f64, l2(u, exact)?);
    }
    Ok(table)
}

fn check_resolutions(resolutions: &[usize]) -> Result<()> {
    if resolutions.is_empty() {
        return Err(Error::InvalidArgument("no resolutions".into()));
    }
    for w in resolutions.windows(2) {
        if w[1] - 1 != 2 * (w[0] - 1) {
            return Err(Error::InvalidArgument(format!("resolutions must refine dyadically, got {} -> {}", w[0], w[1])));
        }
    }
    Ok(())
}
