use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fields::GridSpec;
use crate::norms::{estimate_ratio, EstimateRatio, SpaceTime};
use crate::solver::{solve, Scheme, SolutionSeries, SolverConfig};
use crate::system::ProblemSpec;
use crate::{Error, Result};

use super::mms::{mms_generate, MmsFamily};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleVariant {
    /// `R_k = R₀ − (R₀ − R)/2^k`, growing toward `R₀`.
    Printed,
    /// `R_k = R + (R₀ − R)/2^k`, shrinking toward `R`.
    Decreasing,
}

impl std::str::FromStr for ScheduleVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "printed" => Ok(Self::Printed),
            "decreasing" => Ok(Self::Decreasing),
            _ => Err(Error::InvalidArgument(format!("unknown radii schedule {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiiSchedule {
    pub variant: ScheduleVariant,
    /// `R_1, …, R_kmax`.
    pub radii: Vec<f64>,
    pub increasing_toward_r0: bool,
    /// All radii lie strictly between `R` and `R₀`.
    pub nested: bool,
}

pub fn radii_schedule(r: f64, r0: f64, k_max: usize, variant: ScheduleVariant) -> Result<RadiiSchedule> {
    if !(r > 0.0 && r < r0 && r0.is_finite()) {
        return Err(Error::InvalidArgument(format!("need 0 < R < R₀, got R = {r}, R₀ = {r0}")));
    }
    let radii: Vec<f64> = (1..=k_max as i32)
        .map(|k| {
            let step = (r0 - r) / 2f64.powi(k);
            match variant {
                ScheduleVariant::Printed => r0 - step,
                ScheduleVariant::Decreasing => r + step,
            }
        })
        .collect();
    let nested = radii.iter().all(|&x| x > r && x < r0);
    Ok(RadiiSchedule { variant, radii, increasing_toward_r0: variant == ScheduleVariant::Printed, nested })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeConfig {
    pub alpha: f64,
    pub r: f64,
    pub r0: f64,
    pub k_max: usize,
    pub variant: ScheduleVariant,
    /// Dyadic `half_space(n, 1, 1)` resolutions.
    pub resolutions: Vec<usize>,
    pub t_final: f64,
    /// Steps on the coarsest resolution; doubled per refinement.
    pub base_steps: usize,
    pub scheme: Scheme,
    /// Amplitude of the tangential forcing perturbation `ε e^{−t/τ} e₁`.
    pub epsilon: f64,
    pub lambda: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            alpha: 0.3,
            r: 0.5,
            r0: 1.0,
            k_max: 2,
            variant: ScheduleVariant::Printed,
            resolutions: vec![9, 17, 33],
            t_final: 0.25,
            base_steps: 4,
            scheme: Scheme::CrankNicolson,
            epsilon: 1.0,
            lambda: 7.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeCell {
    pub radius: f64,
    pub n: usize,
    pub h: f64,
    pub ratio: EstimateRatio,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IncompatibleRun {
    pub epsilon: f64,
    pub baseline: f64,
    pub perturbed: f64,
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingCheck {
    pub lambda: f64,
    pub ratio: f64,
    pub scaled_ratio: f64,
    pub relative_difference: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub schedule: RadiiSchedule,
    pub cells: Vec<ProbeCell>,
    /// Per radius, `|ρ_fine − ρ_prev| / ρ_fine` over the two finest resolutions.
    pub variation: Vec<f64>,
    /// Some ratio more than doubled between the two finest resolutions.
    pub unbounded: bool,
    pub incompatible: IncompatibleRun,
    pub scaling: ScalingCheck,
}

impl ProbeReport {
    pub fn max_variation(&self) -> f64 {
        self.variation.iter().copied().fold(0.0, f64::max)
    }

    pub fn csv(&self) -> String {
        let mut s = String::from("radius,n,h,lhs,rhs,ratio\n");
        for c in &self.cells {
            s.push_str(&format!("{:e},{},{:e},{:e},{:e},{:e}\n", c.radius, c.n, c.h, c.ratio.lhs, c.ratio.rhs, c.ratio.ratio));
        }
        s
    }
}

fn run(spec: &ProblemSpec, scheme: Scheme) -> Result<SolutionSeries> {
    solve(spec, &SolverConfig { scheme, ..SolverConfig::default() })
}

fn ratios(series: &SolutionSeries, spec: &ProblemSpec, radii: &[f64], cfg: &ProbeConfig) -> Result<Vec<EstimateRatio>> {
    let st = SpaceTime::from_series(series)?;
    radii.iter().map(|&r| estimate_ratio(&st, spec, cfg.alpha, r, cfg.r0)).collect()
}

/// Ratio restricted to the first two time levels.
fn first_slice(series: &SolutionSeries, spec: &ProblemSpec, cfg: &ProbeConfig, radius: f64) -> Result<f64> {
    let st = SpaceTime::new(&series.times[..2], &series.snapshots[..2])?;
    Ok(estimate_ratio(&st, spec, cfg.alpha, radius, cfg.r0)?.ratio)
}

/// Solves the family at every resolution and evaluates the estimate ratio on
/// each `Q_{R_k} ⊂ Q_{R₀}` of the schedule. Also runs the paired
/// incompatible-forcing comparison on the finest grid and the λ-scaling
/// check on the coarsest.
pub fn estimate_probe(family: &MmsFamily, cfg: &ProbeConfig) -> Result<ProbeReport> {
    if cfg.resolutions.len() < 2 {
        return Err(Error::InvalidArgument("estimate probe needs at least two resolutions".into()));
    }
    let schedule = radii_schedule(cfg.r, cfg.r0, cfg.k_max, cfg.variant)?;
    let per_res: Vec<Result<(usize, f64, Vec<EstimateRatio>)>> = cfg
        .resolutions
        .par_iter()
        .enumerate()
        .map(|(k, &n)| {
            let grid = GridSpec::half_space(n, 1.0, 1.0)?;
            let prob = mms_generate(family, &grid, cfg.t_final, cfg.t_final / (cfg.base_steps << k) as f64)?;
            let series = run(&prob.spec, cfg.scheme)?;
            Ok((n, grid.spacing()[0], ratios(&series, &prob.spec, &schedule.radii, cfg)?))
        })
        .collect();
    let per_res = per_res.into_iter().collect::<Result<Vec<_>>>()?;

    let mut cells = Vec::new();
    for (n, h, rs) in &per_res {
        for (radius, ratio) in schedule.radii.iter().zip(rs) {
            cells.push(ProbeCell { radius: *radius, n: *n, h: *h, ratio: ratio.clone() });
        }
    }
    let (prev, fine) = (&per_res[per_res.len() - 2].2, &per_res[per_res.len() - 1].2);
    let variation: Vec<f64> = prev
        .iter()
        .zip(fine)
        .map(|(a, b)| if b.ratio == 0.0 { (a.ratio - b.ratio).abs() } else { (b.ratio - a.ratio).abs() / b.ratio })
        .collect();
    let unbounded = prev.iter().zip(fine).any(|(a, b)| b.ratio > 2.0 * a.ratio);

    let n_fine = *cfg.resolutions.last().expect("checked");
    let k_fine = cfg.resolutions.len() - 1;
    let grid = GridSpec::half_space(n_fine, 1.0, 1.0)?;
    let prob = mms_generate(family, &grid, cfg.t_final, cfg.t_final / (cfg.base_steps << k_fine) as f64)?;
    let mut perturbed = prob.spec.clone();
    let (f, eps, tau) = (prob.spec.f.clone(), cfg.epsilon, cfg.t_final / 10.0);
    perturbed.f = Arc::new(move |t, x| {
        let mut v = f(t, x);
        v[0] += eps * (-t / tau).exp();
        v
    });
    let radius = schedule.radii[0];
    let baseline = first_slice(&run(&prob.spec, cfg.scheme)?, &prob.spec, cfg, radius)?;
    let pert = first_slice(&run(&perturbed, cfg.scheme)?, &perturbed, cfg, radius)?;
    let incompatible = IncompatibleRun { epsilon: eps, baseline, perturbed: pert, delta: pert - baseline };

    let grid = GridSpec::half_space(cfg.resolutions[0], 1.0, 1.0)?;
    let dt = cfg.t_final / cfg.base_steps as f64;
    let scaled_family = family.scaled(cfg.lambda);
    let a = &per_res[0].2[0].ratio;
    let sp = mms_generate(&scaled_family, &grid, cfg.t_final, dt)?;
    let b = ratios(&run(&sp.spec, cfg.scheme)?, &sp.spec, &schedule.radii[..1], cfg)?[0].ratio;
    let relative_difference = if *a == 0.0 { b.abs() } else { (a - b).abs() / a };
    let scaling = ScalingCheck { lambda: cfg.lambda, ratio: *a, scaled_ratio: b, relative_difference };

    Ok(ProbeReport { schedule, cells, variation, unbounded, incompatible, scaling })
}
