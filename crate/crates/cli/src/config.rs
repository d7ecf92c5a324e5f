//! The JSON run configuration. Every section and key is optional; unknown
//! keys are rejected. Relative paths resolve against the directory holding
//! the configuration file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use langbeam_core::datagen::{default_letter_ranges, LetterRange};
use langbeam_core::{DecodeConfig, LidConfig, ModeParams};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub data: DataSection,
    pub lid: LidSection,
    pub model: ModelSection,
    pub decode: DecodeSection,
    pub output: OutputSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 11,
            data: DataSection::default(),
            lid: LidSection::default(),
            model: ModelSection::default(),
            decode: DecodeSection::default(),
            output: OutputSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    /// Directory for the family, corpora and test set.
    pub dir: PathBuf,
    pub num_langs: usize,
    pub lexicon_size: usize,
    pub letter_ranges: Vec<LetterRange>,
    /// Test-set directions as `[source, target]` pairs.
    pub directions: Vec<(String, String)>,
    pub test_sentences: usize,
    pub len_range: (usize, usize),
    pub lid_sentences: usize,
    pub heldout_sentences: usize,
    pub lid_len_range: (usize, usize),
}

impl Default for DataSection {
    fn default() -> Self {
        DataSection {
            dir: PathBuf::from("data"),
            num_langs: 4,
            lexicon_size: 100,
            letter_ranges: default_letter_ranges(),
            directions: vec![("l1".into(), "l2".into())],
            test_sentences: 500,
            len_range: (10, 14),
            lid_sentences: 300,
            heldout_sentences: 200,
            lid_len_range: (3, 14),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LidSection {
    /// Model file; defaults to `lid.bin` in the data directory.
    pub path: Option<PathBuf>,
    pub ngram_range: (usize, usize),
    pub feature_dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for LidSection {
    fn default() -> Self {
        let d = LidConfig::default();
        LidSection {
            path: None,
            ngram_range: d.ngram_range,
            feature_dim: d.feature_dim,
            epochs: d.epochs,
            learning_rate: d.learning_rate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    /// Surrogate model file; defaults to `surrogate.json` in the data directory.
    pub surrogate: Option<PathBuf>,
    /// Table-model file, used instead of the surrogate when set.
    pub table: Option<PathBuf>,
    pub pi: ModeParams,
    pub rho: ModeParams,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            surrogate: None,
            table: None,
            pi: ModeParams::default_prior(),
            rho: ModeParams::default_peak(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecodeSection {
    pub beam_size: usize,
    pub window: usize,
    pub alpha: f64,
    pub length_penalty: f64,
    pub max_len: Option<usize>,
    /// Overrides every test item's target language when set.
    pub target_lang: Option<String>,
    /// Overrides every test item's source language when set.
    pub source_lang: Option<String>,
}

impl Default for DecodeSection {
    fn default() -> Self {
        let d = DecodeConfig::new("-");
        DecodeSection {
            beam_size: d.beam_size,
            window: d.window,
            alpha: d.alpha,
            length_penalty: d.length_penalty,
            max_len: None,
            target_lang: None,
            source_lang: None,
        }
    }
}

impl DecodeSection {
    pub fn to_config(&self, target: &str) -> DecodeConfig {
        DecodeConfig {
            beam_size: self.beam_size,
            window: self.window,
            alpha: self.alpha,
            length_penalty: self.length_penalty,
            max_len: self.max_len,
            target_lang: target.to_string(),
            source_lang: self.source_lang.clone().unwrap_or_default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// Any of `tsv` and `json`, for reports.
    pub formats: Vec<String>,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("out"),
            formats: vec!["tsv".into(), "json".into()],
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.resolve(base);
        config.validate()?;
        Ok(config)
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.data.dir);
        fix(&mut self.output.dir);
        for p in [&mut self.lid.path, &mut self.model.surrogate, &mut self.model.table]
            .into_iter()
            .flatten()
        {
            fix(p);
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        for f in &self.output.formats {
            if f != "tsv" && f != "json" {
                return Err(CliError::Usage(format!("unknown output format {f:?} (expected tsv or json)")));
            }
        }
        if self.model.surrogate.is_some() && self.model.table.is_some() {
            return Err(CliError::Usage("model.surrogate and model.table are mutually exclusive".into()));
        }
        Ok(())
    }

    pub fn lid_path(&self) -> PathBuf {
        self.lid.path.clone().unwrap_or_else(|| self.data.dir.join("lid.bin"))
    }

    pub fn surrogate_path(&self) -> PathBuf {
        self.model.surrogate.clone().unwrap_or_else(|| self.data.dir.join("surrogate.json"))
    }

    pub fn family_path(&self) -> PathBuf {
        self.data.dir.join("family.json")
    }

    pub fn testset_dir(&self) -> PathBuf {
        self.data.dir.join("testset")
    }

    pub fn lid_config(&self) -> LidConfig {
        LidConfig {
            ngram_range: self.lid.ngram_range,
            feature_dim: self.lid.feature_dim,
            epochs: self.lid.epochs,
            learning_rate: self.lid.learning_rate,
            seed: self.seed,
        }
    }

    pub fn wants(&self, format: &str) -> bool {
        self.output.formats.iter().any(|f| f == format)
    }
}
