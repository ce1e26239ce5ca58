//! `key = value` run configuration with `[section]` headers.
//!
//! A line holding several `key=value` tokens separated by whitespace is
//! accepted, so `command=chain p0=2 steps=3` is a complete config. Keys may
//! appear unqualified at top level, or inside their own section. Lists are
//! comma separated.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use curlheat::harness::ScheduleVariant;
use curlheat::solver::Scheme;

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Solve,
    MmsConvergence,
    VerifyGeometry,
    ProbeEstimate,
    CheckCompat,
    Chain,
}

impl Command {
    pub const ALL: [Command; 6] =
        [Command::Solve, Command::MmsConvergence, Command::VerifyGeometry, Command::ProbeEstimate, Command::CheckCompat, Command::Chain];

    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::MmsConvergence => "mms-convergence",
            Command::VerifyGeometry => "verify-geometry",
            Command::ProbeEstimate => "probe-estimate",
            Command::CheckCompat => "check-compat",
            Command::Chain => "chain",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Command::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Command::ALL.iter().map(|c| c.name()).collect();
            format!("unknown command {s:?}; expected one of {}", names.join(", "))
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub out: PathBuf,
    pub seed: u64,

    pub family: String,
    pub scheme: Scheme,
    pub n: usize,
    pub dt: f64,
    pub t_final: f64,
    pub snapshots: bool,

    pub alpha: f64,
    pub q: Vec<f64>,

    pub r: f64,
    pub r0: f64,
    pub k_max: usize,
    pub schedule: ScheduleVariant,
    pub epsilon: f64,
    pub lambda: f64,

    pub resolutions: Vec<usize>,
    pub base_steps: usize,
    pub joint: bool,
    pub temporal_n: usize,
    pub temporal_steps: Vec<usize>,
    pub charts: Vec<String>,
    pub fields: Vec<String>,

    pub p0: f64,
    pub steps: usize,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            out: PathBuf::from("out"),
            seed: 0,
            family: "trig".into(),
            scheme: Scheme::CrankNicolson,
            n: 17,
            dt: 0.0625,
            t_final: 0.5,
            snapshots: false,
            alpha: 0.3,
            q: vec![2.0, 10.0],
            r: 0.5,
            r0: 1.0,
            k_max: 2,
            schedule: ScheduleVariant::Printed,
            epsilon: 1.0,
            lambda: 7.5,
            resolutions: vec![9, 17, 33],
            base_steps: 8,
            joint: true,
            temporal_n: 33,
            temporal_steps: Vec::new(),
            charts: vec!["flat".into(), "sphere".into(), "cylinder".into()],
            fields: vec!["poly".into(), "trig".into(), "solenoidal-trig".into()],
            p0: 2.0,
            steps: 3,
        }
    }

    /// Applies `key = value` on top of the current values. `line` is used in
    /// error reports only.
    pub fn set(&mut self, line: usize, key: &str, value: &str) -> Result<()> {
        if section_of(key).is_none() {
            return Err(CliError::config(line, key, "unknown key"));
        }
        let err = |m: String| CliError::config(line, key, m);
        let v = value.trim();
        match key {
            "command" => self.command = v.parse().map_err(err)?,
            "out" => {
                if v.is_empty() {
                    return Err(err("must not be empty".into()));
                }
                self.out = PathBuf::from(v)
            }
            "seed" => self.seed = parse(v).map_err(err)?,
            "family" => {
                curlheat::harness::MmsFamily::by_name(v).map_err(|e| err(e.to_string()))?;
                self.family = v.to_string()
            }
            "scheme" => self.scheme = v.parse().map_err(|e: curlheat::Error| err(e.to_string()))?,
            "n" => self.n = in_range(parse(v).map_err(err)?, |n| n >= 5, "n ≥ 5").map_err(err)?,
            "dt" => self.dt = in_range(parse(v).map_err(err)?, |x: f64| x > 0.0 && x.is_finite(), "dt > 0").map_err(err)?,
            "t_final" => {
                self.t_final = in_range(parse(v).map_err(err)?, |x: f64| x > 0.0 && x.is_finite(), "t_final > 0").map_err(err)?
            }
            "snapshots" => self.snapshots = parse(v).map_err(err)?,
            "alpha" => self.alpha = in_range(parse(v).map_err(err)?, |a: f64| a > 0.0 && a < 1.0, "alpha ∈ (0,1)").map_err(err)?,
            "q" => {
                self.q = list(v, |s: &str| {
                    let q: f64 = parse(s)?;
                    in_range(q, |q| q >= 1.0, "q ∈ [1,∞]")
                })
                .map_err(err)?
            }
            "r" => self.r = in_range(parse(v).map_err(err)?, |x: f64| x > 0.0 && x.is_finite(), "r > 0").map_err(err)?,
            "r0" => self.r0 = in_range(parse(v).map_err(err)?, |x: f64| x > 0.0 && x.is_finite(), "r0 > 0").map_err(err)?,
            "k_max" => self.k_max = in_range(parse(v).map_err(err)?, |k| (1..=60).contains(&k), "k_max ∈ [1,60]").map_err(err)?,
            "schedule" => self.schedule = v.parse().map_err(|e: curlheat::Error| err(e.to_string()))?,
            "epsilon" => self.epsilon = in_range(parse(v).map_err(err)?, |x: f64| x.is_finite(), "epsilon finite").map_err(err)?,
            "lambda" => {
                self.lambda = in_range(parse(v).map_err(err)?, |x: f64| x != 0.0 && x.is_finite(), "lambda finite and nonzero").map_err(err)?
            }
            "resolutions" => {
                let rs = list(v, |s: &str| in_range(parse(s)?, |n| n >= 5, "each resolution ≥ 5")).map_err(err)?;
                if rs.is_empty() || rs.windows(2).any(|w| w[1] - 1 != 2 * (w[0] - 1)) {
                    return Err(err(format!("resolutions must refine dyadically (n → 2n − 1), got {v}")));
                }
                self.resolutions = rs
            }
            "base_steps" => self.base_steps = in_range(parse(v).map_err(err)?, |s| s >= 1, "base_steps ≥ 1").map_err(err)?,
            "joint" => self.joint = parse(v).map_err(err)?,
            "temporal_n" => self.temporal_n = in_range(parse(v).map_err(err)?, |n| n >= 5, "temporal_n ≥ 5").map_err(err)?,
            "temporal_steps" => {
                let s: Vec<usize> = if v.is_empty() { Vec::new() } else { list(v, |s: &str| parse(s)).map_err(err)? };
                if !s.is_empty() && (s.len() < 3 || s[0] == 0 || s.windows(2).any(|w| w[1] != 2 * w[0])) {
                    return Err(err(format!("temporal_steps must be ≥ 3 doubling counts, got {v}")));
                }
                self.temporal_steps = s
            }
            "charts" => {
                let c: Vec<String> = list(v, |s: &str| Ok(s.to_string())).map_err(err)?;
                for name in &c {
                    crate::registry::chart(name).map_err(|e| err(e.to_string()))?;
                }
                self.charts = c
            }
            "fields" => {
                let f: Vec<String> = list(v, |s: &str| Ok(s.to_string())).map_err(err)?;
                for name in &f {
                    curlheat::harness::AnalyticField::by_name(name).map_err(|e| err(e.to_string()))?;
                }
                self.fields = f
            }
            "p0" => self.p0 = in_range(parse(v).map_err(err)?, |p: f64| p >= 1.0 && p.is_finite(), "p0 ≥ 1").map_err(err)?,
            "steps" => self.steps = in_range(parse(v).map_err(err)?, |s| s <= 100, "steps ≤ 100").map_err(err)?,
            _ => unreachable!("key table and setter out of sync: {key}"),
        }
        Ok(())
    }

    fn check(&self) -> Result<()> {
        if self.r >= self.r0 {
            return Err(CliError::config(0, "r", format!("need r < r0, got r = {} and r0 = {}", self.r, self.r0)));
        }
        Ok(())
    }

    /// Canonical sectioned text; `parse_config(cfg.to_text())` returns `cfg`.
    pub fn to_text(&self) -> String {
        let join = |v: Vec<String>| v.join(",");
        let mut sections: Vec<(&str, Vec<(&str, String)>)> = vec![
            ("", vec![("command", self.command.to_string()), ("out", self.out.display().to_string()), ("seed", self.seed.to_string())]),
            (
                "problem",
                vec![
                    ("family", self.family.clone()),
                    ("scheme", self.scheme.name().to_string()),
                    ("n", self.n.to_string()),
                    ("dt", self.dt.to_string()),
                    ("t_final", self.t_final.to_string()),
                    ("snapshots", self.snapshots.to_string()),
                ],
            ),
            ("norms", vec![("alpha", self.alpha.to_string()), ("q", join(self.q.iter().map(|q| q.to_string()).collect()))]),
            (
                "probe",
                vec![
                    ("r", self.r.to_string()),
                    ("r0", self.r0.to_string()),
                    ("k_max", self.k_max.to_string()),
                    ("schedule", schedule_name(self.schedule).to_string()),
                    ("epsilon", self.epsilon.to_string()),
                    ("lambda", self.lambda.to_string()),
                ],
            ),
            (
                "study",
                vec![
                    ("resolutions", join(self.resolutions.iter().map(|n| n.to_string()).collect())),
                    ("base_steps", self.base_steps.to_string()),
                    ("joint", self.joint.to_string()),
                    ("temporal_n", self.temporal_n.to_string()),
                    ("temporal_steps", join(self.temporal_steps.iter().map(|n| n.to_string()).collect())),
                    ("charts", self.charts.join(",")),
                    ("fields", self.fields.join(",")),
                ],
            ),
            ("chain", vec![("p0", self.p0.to_string()), ("steps", self.steps.to_string())]),
        ];
        let mut s = String::new();
        for (name, keys) in sections.drain(..) {
            if !name.is_empty() {
                s.push_str(&format!("\n[{name}]\n"));
            }
            for (k, v) in keys {
                s.push_str(&format!("{k} = {v}\n"));
            }
        }
        s
    }
}

const SECTIONS: [&str; 5] = ["problem", "norms", "probe", "study", "chain"];

fn section_of(key: &str) -> Option<&'static str> {
    Some(match key {
        "command" | "out" | "seed" => "",
        "family" | "scheme" | "n" | "dt" | "t_final" | "snapshots" => "problem",
        "alpha" | "q" => "norms",
        "r" | "r0" | "k_max" | "schedule" | "epsilon" | "lambda" => "probe",
        "resolutions" | "base_steps" | "joint" | "temporal_n" | "temporal_steps" | "charts" | "fields" => "study",
        "p0" | "steps" => "chain",
        _ => return None,
    })
}

fn schedule_name(s: ScheduleVariant) -> &'static str {
    match s {
        ScheduleVariant::Printed => "printed",
        ScheduleVariant::Decreasing => "decreasing",
    }
}

fn parse<T: FromStr>(s: &str) -> std::result::Result<T, String>
where
    T::Err: fmt::Display,
{
    s.trim().parse::<T>().map_err(|e| format!("cannot parse {s:?}: {e}"))
}

fn in_range<T: fmt::Display + Copy>(v: T, ok: impl Fn(T) -> bool, range: &str) -> std::result::Result<T, String> {
    if ok(v) {
        Ok(v)
    } else {
        Err(format!("{v} out of range, need {range}"))
    }
}

fn list<T>(s: &str, item: impl Fn(&str) -> std::result::Result<T, String>) -> std::result::Result<Vec<T>, String> {
    s.split(',').map(str::trim).filter(|p| !p.is_empty()).map(item).collect()
}

/// `(line, key, value)` triples with section-qualified keys resolved.
fn pairs(text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut section = "";
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.split('#').next().unwrap_or("").trim();
        if l.is_empty() {
            continue;
        }
        if let Some(name) = l.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            let name = name.trim();
            section = SECTIONS.into_iter().find(|s| *s == name).ok_or_else(|| CliError::config(line, name, "unknown section"))?;
            continue;
        }
        let tokens: Vec<&str> = if l.matches('=').count() == 1 { vec![l] } else { l.split_whitespace().collect() };
        for tok in tokens {
            let (k, v) = tok.split_once('=').ok_or_else(|| CliError::config(line, tok, "expected key = value"))?;
            let k = k.trim();
            let (qual, key) = match k.split_once('.') {
                Some((s, k)) => (Some(s), k),
                None => (None, k),
            };
            let home = section_of(key).ok_or_else(|| CliError::config(line, k, "unknown key"))?;
            let placed = qual.unwrap_or(section);
            if placed != home && !(placed.is_empty() && qual.is_none()) {
                return Err(CliError::config(line, k, format!("key belongs to section [{home}]")));
            }
            out.push((line, key.to_string(), v.trim().to_string()));
        }
    }
    Ok(out)
}

/// Parses and validates a config; `command` is required.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_with(text, &[])
}

/// As [`parse_config`], with `key=value` overrides applied after the file.
/// Overrides are reported as line 0.
pub fn parse_config_with(text: &str, overrides: &[(String, String)]) -> Result<RunConfig> {
    let mut all = pairs(text)?;
    for (i, (line, key, _)) in all.iter().enumerate() {
        if let Some((first, _, _)) = all[..i].iter().find(|(_, k, _)| k == key) {
            return Err(CliError::config(*line, key, format!("duplicate key, first set on line {first}")));
        }
    }
    for (k, v) in overrides {
        let key = k.rsplit('.').next().unwrap_or(k);
        all.push((0, key.to_string(), v.clone()));
    }
    let command = all
        .iter()
        .rev()
        .find(|(_, k, _)| k == "command")
        .ok_or(CliError::Missing { key: "command".into() })
        .and_then(|(line, k, v)| v.parse::<Command>().map_err(|m| CliError::config(*line, k, m)))?;
    let mut cfg = RunConfig::new(command);
    for (line, key, value) in &all {
        cfg.set(*line, key, value)?;
    }
    cfg.check()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_key_has_a_section_and_a_setter() {
        let cfg = RunConfig::new(Command::Chain);
        let text = cfg.to_text();
        for line in text.lines().filter(|l| l.contains('=')) {
            let key = line.split('=').next().unwrap().trim();
            assert!(section_of(key).is_some(), "{key}");
        }
    }

    #[test]
    fn qualified_keys() {
        let cfg = parse_config("command=solve problem.n=9").unwrap();
        assert_eq!(cfg.n, 9);
        assert!(parse_config("command=solve norms.n=9").is_err());
        assert!(parse_config("command=solve\n[norms]\nn=9").is_err());
        assert!(parse_config("command=solve\n[nonsense]\n").is_err());
    }
}
