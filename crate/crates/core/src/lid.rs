//! Character n-gram language identifier.
//!
//! A multinomial logistic regression over the average of hashed character
//! n-gram features. Each whitespace-separated word is padded as `<word>` and
//! every n-gram of `ngram_range` lengths is hashed with 64-bit FNV-1a over its
//! UTF-8 bytes, modulo `feature_dim`.
//!
//! # Model file layout
//!
//! All integers and floats are little-endian.
//!
//! | bytes | content |
//! |---|---|
//! | 4 | magic `LIDM` |
//! | 4 | format version, `u32`, currently 1 |
//! | 4 | header length `h`, `u32` |
//! | h | JSON header `{"languages": [...], "ngram_range": [min, max], "feature_dim": n}` |
//! | 8·n·L | weights, `f64`, row-major by feature (`L` = number of languages) |
//! | 8·L | bias, `f64` |

use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hash::fnv1a64;
use crate::models::logsumexp;

const MAGIC: &[u8; 4] = b"LIDM";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LidConfig {
    pub ngram_range: (usize, usize),
    pub feature_dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for LidConfig {
    fn default() -> Self {
        LidConfig {
            ngram_range: (1, 5),
            feature_dim: 1 << 18,
            epochs: 5,
            learning_rate: 10.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub lang: String,
    pub prob: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    languages: Vec<String>,
    ngram_range: (usize, usize),
    feature_dim: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LidModel {
    languages: Vec<String>,
    ngram_range: (usize, usize),
    feature_dim: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl LidModel {
    /// A model with all weights zero: every text gets the uniform distribution.
    pub fn zeros(languages: Vec<String>, ngram_range: (usize, usize), feature_dim: usize) -> Result<Self> {
        if languages.is_empty() {
            return Err(Error::invalid("language list is empty"));
        }
        let uniq: BTreeSet<&String> = languages.iter().collect();
        if uniq.len() != languages.len() {
            return Err(Error::invalid("language codes must be unique"));
        }
        let (lo, hi) = ngram_range;
        if lo == 0 || lo > hi {
            return Err(Error::invalid(format!("bad n-gram range ({lo}, {hi})")));
        }
        if feature_dim == 0 {
            return Err(Error::invalid("feature_dim must be positive"));
        }
        let n = languages.len();
        Ok(LidModel {
            languages,
            ngram_range,
            feature_dim,
            weights: vec![0.0; feature_dim * n],
            bias: vec![0.0; n],
        })
    }

    /// Trains on `(text, language)` pairs with plain SGD on the cross-entropy
    /// loss, visiting examples in a seeded shuffle each epoch with a learning
    /// rate decaying linearly to zero.
    pub fn train<S: AsRef<str>, L: AsRef<str>>(corpus: &[(S, L)], config: &LidConfig) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::invalid("training corpus is empty"));
        }
        let languages: Vec<String> = corpus
            .iter()
            .map(|(_, l)| l.as_ref().to_string())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if languages.len() < 2 {
            return Err(Error::invalid(format!(
                "training corpus needs at least 2 languages, found {}",
                languages.len()
            )));
        }
        let mut model = Self::zeros(languages, config.ngram_range, config.feature_dim)?;

        let mut examples = Vec::with_capacity(corpus.len());
        for (i, (text, lang)) in corpus.iter().enumerate() {
            let feats = model.features(text.as_ref());
            if feats.is_empty() {
                return Err(Error::invalid(format!("training text {i} is empty")));
            }
            let label = model.lang_index(lang.as_ref())?;
            examples.push((feats, label));
        }

        let mut order: Vec<usize> = (0..examples.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let total = (config.epochs * examples.len()).max(1) as f64;
        let n_lang = model.languages.len();
        let mut probs = vec![0.0; n_lang];
        let mut step = 0usize;
        for _ in 0..config.epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                let (feats, label) = &examples[i];
                let lr = config.learning_rate * (1.0 - step as f64 / total);
                step += 1;
                model.logits_into(feats, &mut probs);
                let z = logsumexp(&probs);
                for (l, p) in probs.iter_mut().enumerate() {
                    *p = (*p - z).exp() - if l == *label { 1.0 } else { 0.0 };
                }
                let scale = lr / feats.len() as f64;
                for &f in feats {
                    let row = &mut model.weights[f as usize * n_lang..(f as usize + 1) * n_lang];
                    for (w, g) in row.iter_mut().zip(&probs) {
                        *w -= scale * g;
                    }
                }
                for (b, g) in model.bias.iter_mut().zip(&probs) {
                    *b -= lr * g;
                }
            }
        }
        Ok(model)
    }

    pub fn languages(&self) -> &[String] {
        &self.languages
    }

    pub fn ngram_range(&self) -> (usize, usize) {
        self.ngram_range
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn covers(&self, lang: &str) -> bool {
        self.languages.iter().any(|l| l == lang)
    }

    fn lang_index(&self, lang: &str) -> Result<usize> {
        self.languages
            .iter()
            .position(|l| l == lang)
            .ok_or_else(|| Error::invalid(format!("language {lang:?} is not covered by the LiD model")))
    }

    /// Hashed feature indices of `text`, one per n-gram occurrence.
    pub fn features(&self, text: &str) -> Vec<u32> {
        let (lo, hi) = self.ngram_range;
        let mut out = Vec::new();
        let mut padded = String::new();
        let mut bounds = Vec::new();
        for word in text.split_whitespace() {
            padded.clear();
            padded.push('<');
            padded.push_str(word);
            padded.push('>');
            bounds.clear();
            bounds.extend(padded.char_indices().map(|(i, _)| i));
            bounds.push(padded.len());
            let chars = bounds.len() - 1;
            for n in lo..=hi.min(chars) {
                for start in 0..=chars - n {
                    let gram = &padded.as_bytes()[bounds[start]..bounds[start + n]];
                    out.push((fnv1a64(gram) % self.feature_dim as u64) as u32);
                }
            }
        }
        out
    }

    fn logits_into(&self, feats: &[u32], out: &mut [f64]) {
        let n = self.languages.len();
        out.copy_from_slice(&self.bias);
        if feats.is_empty() {
            return;
        }
        let mut acc = vec![0.0; n];
        for &f in feats {
            let row = &self.weights[f as usize * n..(f as usize + 1) * n];
            for (a, w) in acc.iter_mut().zip(row) {
                *a += w;
            }
        }
        let inv = 1.0 / feats.len() as f64;
        for (o, a) in out.iter_mut().zip(acc) {
            *o += a * inv;
        }
    }

    /// Log-softmax over languages, in `languages()` order.
    pub fn log_probs(&self, text: &str) -> Result<Vec<f64>> {
        let feats = self.features(text);
        if feats.is_empty() {
            return Err(Error::invalid("cannot identify the language of empty text"));
        }
        let mut out = vec![0.0; self.languages.len()];
        self.logits_into(&feats, &mut out);
        let z = logsumexp(&out);
        for x in &mut out {
            *x -= z;
        }
        Ok(out)
    }

    /// Log probability that `text` is in `lang`.
    pub fn logprob(&self, text: &str, lang: &str) -> Result<f64> {
        let idx = self.lang_index(lang)?;
        Ok(self.log_probs(text)?[idx])
    }

    /// Most probable language; ties go to the earlier language in `languages()`.
    pub fn predict(&self, text: &str) -> Result<Prediction> {
        let lp = self.log_probs(text)?;
        let mut best = 0;
        for (i, &x) in lp.iter().enumerate().skip(1) {
            if x > lp[best] {
                best = i;
            }
        }
        Ok(Prediction {
            lang: self.languages[best].clone(),
            prob: lp[best].exp(),
        })
    }

    pub fn predict_batch<S: AsRef<str> + Sync>(&self, texts: &[S]) -> Result<Vec<Prediction>> {
        let results: Vec<Result<Prediction>> = texts.par_iter().map(|t| self.predict(t.as_ref())).collect();
        collect_indexed(results)
    }

    /// Elementwise [`LidModel::logprob`], evaluated in parallel.
    pub fn logprob_batch<S: AsRef<str> + Sync>(&self, texts: &[S], lang: &str) -> Result<Vec<f64>> {
        let idx = self.lang_index(lang)?;
        let results: Vec<Result<f64>> = texts
            .par_iter()
            .map(|t| self.log_probs(t.as_ref()).map(|lp| lp[idx]))
            .collect();
        collect_indexed(results)
    }

    /// Fraction of `(text, language)` pairs predicted correctly.
    pub fn accuracy<S: AsRef<str> + Sync, L: AsRef<str> + Sync>(&self, data: &[(S, L)]) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::invalid("evaluation set is empty"));
        }
        let texts: Vec<&str> = data.iter().map(|(t, _)| t.as_ref()).collect();
        let preds = self.predict_batch(&texts)?;
        let hits = preds
            .iter()
            .zip(data)
            .filter(|(p, (_, l))| p.lang == l.as_ref())
            .count();
        Ok(hits as f64 / data.len() as f64)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let header = serde_json::to_vec(&Header {
            languages: self.languages.clone(),
            ngram_range: self.ngram_range,
            feature_dim: self.feature_dim,
        })
        .expect("header serializes");
        let mut out = Vec::with_capacity(12 + header.len() + 8 * (self.weights.len() + self.bias.len()));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        for x in self.weights.iter().chain(&self.bias) {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |msg: &str| Error::invalid(format!("malformed LiD model: {msg}"));
        if bytes.len() < 12 || &bytes[..4] != MAGIC {
            return Err(bad("missing magic"));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let hlen = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let body = bytes.get(12..12 + hlen).ok_or_else(|| bad("truncated header"))?;
        let header: Header = serde_json::from_slice(body)?;
        let mut model = Self::zeros(header.languages, header.ngram_range, header.feature_dim)?;
        let floats = &bytes[12 + hlen..];
        let expected = 8 * (model.weights.len() + model.bias.len());
        if floats.len() != expected {
            return Err(bad(&format!("expected {expected} weight bytes, found {}", floats.len())));
        }
        let mut it = floats
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
        for w in model.weights.iter_mut().chain(model.bias.iter_mut()) {
            *w = it.next().unwrap();
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes).map_err(|e| e.context(format!("loading {}", path.display())))
    }
}

fn collect_indexed<T>(results: Vec<Result<T>>) -> Result<Vec<T>> {
    let mut out = Vec::with_capacity(results.len());
    for (index, r) in results.into_iter().enumerate() {
        out.push(r.map_err(|e| Error::Batch {
            index,
            source: Box::new(e),
        })?);
    }
    Ok(out)
}

/// Parses a `lang<TAB>text` training corpus.
pub fn parse_corpus_tsv(text: &str, path: &Path) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (lang, body) = line.split_once('\t').ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: "expected `lang<TAB>text`".into(),
        })?;
        if lang.is_empty() || body.trim().is_empty() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: "empty language or text".into(),
            });
        }
        out.push((body.to_string(), lang.to_string()));
    }
    Ok(out)
}
