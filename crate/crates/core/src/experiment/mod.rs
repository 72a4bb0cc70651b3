//! Leave-one-site-out evaluation, classification metrics, and lambda sweeps.

mod analysis;
mod loso;
mod metrics;
mod output;
mod sweep;

pub use analysis::{age_design, analyze, ppi_inputs, AnalysisOutcome, ClassSet, InferenceSpec};
pub use loso::{
    partition_by_site, run_loso, run_loso_with_progress, site_split_seed, sites_of, LosoOutcome, LosoSpec,
    PredictorSource, SiteFailure, SiteReport, SplitInfo, VocabularyStats,
};
pub use metrics::{accuracy, macro_f1, ConfusionMatrix, F1Summary};
pub use output::{confusion_csv, forest_csv, metrics_csv, sweep_csv};
pub use sweep::{lambda_sweep, uniform_grid, SweepRow};

#[cfg(test)]
mod tests;
