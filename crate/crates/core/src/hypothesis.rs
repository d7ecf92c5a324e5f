use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vocab::{TokenId, Vocabulary};

/// A partial or complete output sequence with its cumulative model log probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    /// Token ids, starting with BOS.
    pub tokens: Vec<TokenId>,
    /// Sum of per-step natural-log token probabilities.
    pub logprob: f64,
    /// True iff the last token is EOS.
    pub finished: bool,
}

impl Hypothesis {
    pub fn start(vocab: &Vocabulary) -> Self {
        Hypothesis {
            tokens: vec![vocab.bos()],
            logprob: 0.0,
            finished: false,
        }
    }

    /// Appends `token` with the given step log probability.
    pub fn extend(&self, token: TokenId, step_logprob: f64, eos: TokenId) -> Result<Self> {
        if self.finished {
            return Err(Error::InvalidState("cannot extend a finished hypothesis".into()));
        }
        let mut tokens = Vec::with_capacity(self.tokens.len() + 1);
        tokens.extend_from_slice(&self.tokens);
        tokens.push(token);
        Ok(Hypothesis {
            tokens,
            logprob: self.logprob + step_logprob,
            finished: token == eos,
        })
    }

    /// Tokens after BOS.
    pub fn generated(&self) -> &[TokenId] {
        &self.tokens[1..]
    }

    /// Number of generated tokens: BOS excluded, EOS included.
    pub fn len(&self) -> usize {
        self.tokens.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Generated tokens that are not EOS.
    pub fn content_len(&self) -> usize {
        if self.finished {
            self.len() - 1
        } else {
            self.len()
        }
    }
}

/// Length-normalized score `logprob / length^penalty`.
///
/// `length` counts generated tokens, excluding BOS and including EOS.
pub fn normalized_score(logprob: f64, length: usize, penalty: f64) -> Result<f64> {
    if length == 0 {
        return Err(Error::invalid("length must be positive"));
    }
    if penalty == 0.0 {
        return Ok(logprob);
    }
    Ok(logprob / (length as f64).powf(penalty))
}
