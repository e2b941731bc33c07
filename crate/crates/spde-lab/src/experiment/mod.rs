//! Batch orchestration: parse experiment configs, run admissibility
//! studies, noise validation, solver runs, mild-weak equivalence studies
//! and regularity studies; emit CSV/JSON reports, static SVG plots, and a
//! checksummed manifest. Identical `(config, seed)` pairs produce
//! bit-identical artifacts.

mod config;
mod report;
mod runner;

pub use config::{ExperimentConfig, ExperimentKind};
pub use report::{sha256_hex, svg_loglog_plot, Manifest, ManifestEntry};
pub use runner::{compare_mild_weak, run, EquivalenceRow, EquivalenceTable};
