//! Statistical harness: lemma checks, exact censuses and speed sweeps.

mod census;
mod lemmas;
mod stats;
mod sweep;

use thiserror::Error;

use crate::geometry::GeometryError;
use crate::network::NetworkError;
use crate::walker::WalkError;

pub use census::{census_horizontal, census_vertical, horizontal_product, CensusResult, DEFAULT_MAX_CENSUS_ORDER};
pub use lemmas::{
    cone_subgraph, entry_count_samples, infinite_entrance_samples, lemma42_bound_check, lemma_suite,
    return_time_check, trap_entry_samples, write_lemma_csv, EntrySample, Lemma42Report, Lemma42Sample,
    LemmaRow, SuiteOptions, Verdict,
};
pub use stats::{domination_test, quantile_sorted, DominationTest, SummaryStats};
pub use sweep::{run_replicates, speed_sweep, write_sweep_csv, ModelSpec, ReplicateSpec, SweepRow};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error("invalid experiment: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("thread pool: {0}")]
    Pool(String),
}
