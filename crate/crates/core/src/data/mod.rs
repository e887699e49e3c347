//! Trial records, dataset collection and on-disk formats.

pub mod collect;
pub mod dataset;
pub mod record;

pub use collect::{
    collect_dataset, collect_records, sample_impossible_trial, sample_trial, sample_trial_for,
    CollectConfig, CollectStats,
};
pub use dataset::Dataset;
pub use record::{DatasetManifest, FamilyCount, ObjectSpec, TrialRecord, FORMAT_VERSION};
