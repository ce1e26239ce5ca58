//! Manufactured solutions, convergence studies, geometry studies and the
//! estimate probe.

pub mod convergence;
pub mod geometry_study;
pub mod mms;
pub mod probe;
pub mod summary;

pub use convergence::{convergence_study, temporal_study, ConvergenceRow, ConvergenceTable, CONVERGENCE_HEADER};
pub use geometry_study::{chart_label, geometry_study, robin_exact, AnalyticField};
pub use mms::{mms_generate, MmsFamily, MmsPoint, MmsProblem, PolyPotential, Potential, TrigPotential};
pub use probe::{estimate_probe, radii_schedule, IncompatibleRun, ProbeCell, ProbeConfig, ProbeReport, RadiiSchedule, ScalingCheck, ScheduleVariant};
pub use summary::{PropertyCheck, Summary};
