use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Decoding hyper-parameters shared by every engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecodeConfig {
    pub beam_size: usize,
    /// Continuations pre-selected from each beam before language scoring.
    pub window: usize,
    /// Weight of the language-identification log probability.
    pub alpha: f64,
    pub length_penalty: f64,
    /// Cap on generated non-EOS tokens. `None` means `2 * source_words + 10`.
    #[serde(default)]
    pub max_len: Option<usize>,
    pub target_lang: String,
    /// Only used by analysis (off-target taxonomy).
    #[serde(default)]
    pub source_lang: String,
}

impl DecodeConfig {
    pub fn new(target_lang: impl Into<String>) -> Self {
        DecodeConfig {
            beam_size: 5,
            window: 2,
            alpha: 1.0,
            length_penalty: 1.0,
            max_len: None,
            target_lang: target_lang.into(),
            source_lang: String::new(),
        }
    }

    pub fn with_beam(mut self, beam_size: usize) -> Self {
        self.beam_size = beam_size;
        self
    }

    pub fn with_window(mut self, window: usize) -> Self {
        self.window = window;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_length_penalty(mut self, penalty: f64) -> Self {
        self.length_penalty = penalty;
        self
    }

    pub fn with_max_len(mut self, max_len: usize) -> Self {
        self.max_len = Some(max_len);
        self
    }

    pub fn with_source_lang(mut self, lang: impl Into<String>) -> Self {
        self.source_lang = lang.into();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.beam_size == 0 {
            return Err(Error::invalid("beam_size must be at least 1"));
        }
        if self.window == 0 {
            return Err(Error::invalid("window must be at least 1"));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid(format!("alpha must be finite and non-negative, got {}", self.alpha)));
        }
        if !(self.length_penalty >= 0.0 && self.length_penalty.is_finite()) {
            return Err(Error::invalid(format!(
                "length_penalty must be finite and non-negative, got {}",
                self.length_penalty
            )));
        }
        if self.max_len == Some(0) {
            return Err(Error::invalid("max_len must be at least 1"));
        }
        if self.target_lang.is_empty() {
            return Err(Error::invalid("target_lang is empty"));
        }
        Ok(())
    }

    /// Effective length cap for `source`.
    pub fn max_len_for(&self, source: &str) -> usize {
        self.max_len
            .unwrap_or_else(|| 2 * source.split_whitespace().count() + 10)
    }
}
