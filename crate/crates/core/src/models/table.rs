//! Conditional-table model read from JSON.
//!
//! ```json
//! {"vocab": "vocab.txt",
//!  "states": [{"source": "x", "lang": "de", "prefix": [2], "dist": {"▁a": 0.5, "</s>": 0.5}}]}
//! ```
//!
//! `vocab` is resolved relative to the table file. `prefix` lists the generated
//! token ids after BOS. Each `dist` must sum to one within 1e-6 and is
//! renormalized exactly on load; tokens it omits get probability zero. Any
//! state not listed falls back to a uniform distribution over every token
//! except BOS.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{check_prefix, AutoregressiveModel};
use crate::error::{Error, Result};
use crate::hypothesis::Hypothesis;
use crate::vocab::{TokenId, Vocabulary};

const SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableState {
    pub source: String,
    pub lang: String,
    pub prefix: Vec<TokenId>,
    pub dist: BTreeMap<String, f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableFile {
    vocab: String,
    states: Vec<TableState>,
}

type StateKey = (String, String, Vec<TokenId>);

#[derive(Debug, Clone)]
pub struct TableModel {
    vocab: Vocabulary,
    states: HashMap<StateKey, Vec<f64>>,
}

impl TableModel {
    pub fn new(vocab: Vocabulary, states: Vec<TableState>) -> Result<Self> {
        let mut table = HashMap::with_capacity(states.len());
        for (i, st) in states.into_iter().enumerate() {
            let mut probs = vec![0.0; vocab.len()];
            for (tok, &p) in &st.dist {
                let id = vocab.id_of(tok).ok_or_else(|| {
                    Error::Validation(format!("state {i}: token {tok:?} is not in the vocabulary"))
                })?;
                if id == vocab.bos() {
                    return Err(Error::Validation(format!("state {i}: BOS cannot be generated")));
                }
                if !(p >= 0.0 && p.is_finite()) {
                    return Err(Error::Validation(format!("state {i}: probability of {tok:?} is {p}")));
                }
                probs[id as usize] = p;
            }
            let sum: f64 = probs.iter().sum();
            if (sum - 1.0).abs() > SUM_TOLERANCE {
                return Err(Error::Validation(format!(
                    "state {i} (source {:?}, lang {:?}, prefix {:?}): probabilities sum to {sum}",
                    st.source, st.lang, st.prefix
                )));
            }
            if let Some(&bad) = st.prefix.iter().find(|&&t| vocab.token(t).is_none()) {
                return Err(Error::Validation(format!("state {i}: unknown prefix token id {bad}")));
            }
            let logprobs = probs.iter().map(|p| (p / sum).ln()).collect();
            if table.insert((st.source, st.lang, st.prefix), logprobs).is_some() {
                return Err(Error::Validation(format!("state {i} duplicates an earlier state")));
            }
        }
        Ok(TableModel { vocab, states: table })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: TableFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })?;
        let vocab_path = path.parent().unwrap_or(Path::new(".")).join(&file.vocab);
        let vocab = Vocabulary::load(vocab_path)?;
        Self::new(vocab, file.states)
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }
}

impl AutoregressiveModel for TableModel {
    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn next_token_logprobs(&self, source: &str, target_lang: &str, prefix: &Hypothesis) -> Result<Vec<f64>> {
        check_prefix(&self.vocab, prefix)?;
        let key = (source.to_string(), target_lang.to_string(), prefix.generated().to_vec());
        if let Some(lp) = self.states.get(&key) {
            return Ok(lp.clone());
        }
        let mut out = vec![(1.0 / (self.vocab.len() - 1) as f64).ln(); self.vocab.len()];
        out[self.vocab.bos() as usize] = f64::NEG_INFINITY;
        Ok(out)
    }
}
