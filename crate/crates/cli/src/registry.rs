//! Built-in charts referenced by name from configs.

use curlheat::geometry::{ChartDescriptor, PatchKind};

use crate::error::{CliError, Result};

const DOMAIN: [[f64; 2]; 2] = [[-0.5, 0.5], [-0.5, 0.5]];

pub const CHART_NAMES: [&str; 4] = ["flat", "sphere", "cylinder", "stretched-sphere"];

pub fn chart(name: &str) -> Result<ChartDescriptor> {
    let (kind, depth) = match name {
        "flat" => (PatchKind::Flat, 1.0),
        "sphere" => (PatchKind::Sphere { radius: 2.0 }, 1.0),
        "cylinder" => (PatchKind::Cylinder { radius: 1.0 }, 0.5),
        "stretched-sphere" => (PatchKind::StretchedSphere { radius: 2.0, stretch: 0.3 }, 1.0),
        _ => return Err(CliError::config(0, "charts", format!("unknown chart {name:?}; expected one of {}", CHART_NAMES.join(", ")))),
    };
    Ok(ChartDescriptor { kind, domain: DOMAIN, depth })
}
