//! File formats and the study driver behind the command-line tool.

pub mod config;
pub mod data;
pub mod format;
pub mod run;

pub use config::{parse_config_file, RunConfig, Settings, Study, StudyConfig};
pub use data::load_binary_csv;
pub use run::{compute_study, run_study, OutputBundle, StudyOutput};
