//! Translation metrics, the off-target taxonomy, copy-similarity analysis and
//! beam-size and alpha sweeps.

mod metrics;
mod offtarget;
mod sweep;
mod testset;

pub use metrics::{chrf2, corpus_bleu, sentence_bleu, tokenize_13a, Smoothing, SENTENCE_BLEU_FLOOR};
pub use offtarget::{
    classify_off_target, copy_similarity_histogram, off_target_rates, Classification, CopySimilarity,
    OffTargetLabel, OffTargetRates,
};
pub use sweep::{evaluate, sweep_alpha, sweep_beam, Evaluation, SweepAxis, SweepReport, SweepRow, SWEEP_HEADER};
pub use testset::{TestItem, TestSet, META_FILE, REFERENCE_FILE, SOURCE_FILE};
