//! Language-informed beam search and the off-target analysis toolkit.
//!
//! The crate bundles the decoding engines ([`decode`]), the model abstraction
//! with a table-backed and a surrogate implementation ([`models`]), a
//! character n-gram language identifier ([`lid`]), translation metrics and
//! sweep runners ([`analysis`]) and synthetic data generation ([`datagen`]).
//!
//! ```
//! use langbeam_core::datagen::{build_surrogate, default_letter_ranges, gen_family, gen_lid_corpus};
//! use langbeam_core::{beam_search, libs_decode, DecodeConfig, LidConfig, LidModel, ModeParams};
//!
//! let family = gen_family(11, 4, 100, &default_letter_ranges())?;
//! let lid = LidModel::train(&gen_lid_corpus(&family, 300, (3, 14), 5)?, &LidConfig::default())?;
//! let (_, model) = build_surrogate(&family, ("l1", "l2"), ModeParams::default_prior(), ModeParams::default_peak())?;
//!
//! let source = family.render("l1", &[8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18])?;
//! let cfg = DecodeConfig::new("l2").with_beam(20).with_source_lang("l1");
//! let baseline = beam_search(&model, &source, &cfg)?;
//! let libs = libs_decode(&model, &lid, &source, &cfg)?;
//! assert_eq!(lid.predict(baseline.best_text())?.lang, "en");
//! assert_eq!(libs.best_text(), family.render("l2", &[8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18])?);
//! # Ok::<(), langbeam_core::Error>(())
//! ```

pub mod analysis;
pub mod config;
pub mod datagen;
pub mod decode;
pub mod error;
pub mod hash;
pub mod hypothesis;
pub mod lid;
pub mod models;
pub mod vocab;

pub use config::DecodeConfig;
pub use decode::{beam_search, libs_decode, BeamTrace, Candidate, DecodeResult, Engine};
pub use error::{Error, Result};
pub use hypothesis::{normalized_score, Hypothesis};
pub use lid::{LidConfig, LidModel, Prediction};
pub use models::{AutoregressiveModel, Mode, ModeParams, RandomModel, SurrogateModel, SurrogateSpec, TableModel};
pub use vocab::{TokenId, Vocabulary};
