//! Numerical evidence for the estimates: inequality constants over random
//! ensembles, norm time series, absorbing-set runs and the `|A1 v|` budget.

pub mod csv_io;
pub mod ensemble;
pub mod gronwall;
pub mod lemmas;
pub mod report;
pub mod runs;

pub use ensemble::EnsembleSpec;
pub use report::{norm_report, NormReport};
