//! Shared fixtures for the benchmarks.

use langbeam_core::analysis::TestSet;
use langbeam_core::datagen::{build_surrogate, default_letter_ranges, gen_family, gen_lid_corpus, gen_testset};
use langbeam_core::{LidConfig, LidModel, ModeParams, SurrogateModel};

pub struct Fixture {
    pub model: SurrogateModel,
    pub lid: LidModel,
    pub testset: TestSet,
    pub lid_corpus: Vec<(String, String)>,
}

/// A four-language family with a surrogate for `l1 -> l2`, a trained LiD
/// model and `n` test sentences of 10 to 14 words.
pub fn fixture(n: usize) -> Fixture {
    let family = gen_family(11, 4, 100, &default_letter_ranges()).expect("family");
    let lid_corpus = gen_lid_corpus(&family, 300, (3, 14), 5).expect("lid corpus");
    let lid = LidModel::train(&lid_corpus, &LidConfig::default()).expect("lid");
    let (_, model) =
        build_surrogate(&family, ("l1", "l2"), ModeParams::default_prior(), ModeParams::default_peak()).expect("model");
    let testset = gen_testset(&family, &[("l1".into(), "l2".into())], n, (10, 14), 7).expect("test set");
    Fixture {
        model,
        lid,
        testset,
        lid_corpus,
    }
}
