//! Decoding engines: standard beam search, language-informed beam search,
//! greedy search, an exhaustive oracle and a step tracer.
//!
//! Beam search and LiBS share one engine. At every step each live hypothesis
//! is expanded, the pool of continuations is sorted, finished entries among the
//! top `b` join the finished set and the best `b` unfinished entries form the
//! next beam. The standard engine expands over the full vocabulary and sorts by
//! cumulative model log probability. LiBS first keeps only the top `w`
//! continuations of each beam and sorts by `nmt + alpha * lid_logprob(text)`.
//! Stored entries always carry the model score alone, so the language term is
//! never accumulated across steps.
//!
//! Decoding stops once `b` hypotheses have finished or every hypothesis has
//! reached `max_len` content tokens, at which point only EOS may follow. The
//! finished set is ranked by `normalized_score(nmt, len, lambda)`, plus
//! `alpha * lid_logprob` of the full text for LiBS.
//!
//! Ordering is deterministic everywhere. In-loop ties are broken by higher
//! model score, then lower beam index, then lower token id. Final ties are
//! broken by higher model score, then lexicographically smaller token ids.

mod exhaustive;
mod trace;

pub use exhaustive::{exhaustive_decode, SEARCH_SPACE_LIMIT};
pub use trace::{render_side_by_side, trace_decode, BeamTrace, TraceEntry, TraceStep};

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::DecodeConfig;
use crate::error::{Error, Result};
use crate::hypothesis::{normalized_score, Hypothesis};
use crate::lid::LidModel;
use crate::models::AutoregressiveModel;
use crate::vocab::{TokenId, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Baseline,
    Libs,
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::Baseline => "baseline",
            Engine::Libs => "libs",
        })
    }
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(Engine::Baseline),
            "libs" => Ok(Engine::Libs),
            other => Err(Error::invalid(format!("unknown engine {other:?} (expected baseline or libs)"))),
        }
    }
}

/// A ranked output sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub text: String,
    /// Generated token ids (BOS excluded, EOS included when finished).
    pub tokens: Vec<TokenId>,
    pub final_score: f64,
    /// Cumulative model log probability.
    pub nmt_score: f64,
    /// Language-identification log probability of `text` for the target
    /// language; absent for the standard engine and for empty text.
    pub lid_logprob: Option<f64>,
    pub finished: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DecodeStats {
    pub steps: usize,
    /// Every language-identification evaluation, including the final rerank.
    pub lid_calls: usize,
    /// In-loop evaluations, one entry per step.
    #[serde(default)]
    pub lid_calls_per_step: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeResult {
    pub source: String,
    pub target_lang: String,
    /// Sorted by descending `final_score`; at most `beam_size` entries.
    pub candidates: Vec<Candidate>,
    pub stats: DecodeStats,
}

impl DecodeResult {
    pub fn best(&self) -> Option<&Candidate> {
        self.candidates.first()
    }

    pub fn best_text(&self) -> &str {
        self.best().map_or("", |c| c.text.as_str())
    }
}

/// Standard beam search over the full vocabulary.
pub fn beam_search<M: AutoregressiveModel + ?Sized>(
    model: &M,
    source: &str,
    config: &DecodeConfig,
) -> Result<DecodeResult> {
    config.validate()?;
    run(model, source, config, None, None, None)
}

/// Language-informed beam search.
pub fn libs_decode<M: AutoregressiveModel + ?Sized>(
    model: &M,
    lid: &LidModel,
    source: &str,
    config: &DecodeConfig,
) -> Result<DecodeResult> {
    config.validate()?;
    check_lid(lid, &config.target_lang)?;
    run(model, source, config, Some(lid), None, None)
}

/// Dispatches to [`beam_search`] or [`libs_decode`].
pub fn decode<M: AutoregressiveModel + ?Sized>(
    engine: Engine,
    model: &M,
    lid: Option<&LidModel>,
    source: &str,
    config: &DecodeConfig,
) -> Result<DecodeResult> {
    match engine {
        Engine::Baseline => beam_search(model, source, config),
        Engine::Libs => {
            let lid = lid.ok_or_else(|| Error::invalid("the libs engine needs a LiD model"))?;
            libs_decode(model, lid, source, config)
        }
    }
}

/// Stepwise argmax (lowest token id on ties) with the same length cap.
pub fn greedy<M: AutoregressiveModel + ?Sized>(
    model: &M,
    source: &str,
    config: &DecodeConfig,
) -> Result<DecodeResult> {
    config.validate()?;
    let vocab = model.vocab();
    let max_len = config.max_len_for(source);
    let mut hyp = Hypothesis::start(vocab);
    let mut steps = 0;
    while !hyp.finished {
        let lp = query(model, source, &config.target_lang, &hyp)?;
        let at_cap = hyp.content_len() >= max_len;
        let best = (0..lp.len() as TokenId)
            .filter(|&t| t != vocab.bos() && lp[t as usize] > f64::NEG_INFINITY)
            .filter(|&t| !at_cap || t == vocab.eos())
            .fold(None, |acc: Option<TokenId>, t| match acc {
                Some(b) if lp[b as usize] >= lp[t as usize] => Some(b),
                _ => Some(t),
            });
        let Some(tok) = best else { break };
        steps += 1;
        hyp = hyp.extend(tok, lp[tok as usize], vocab.eos())?;
    }
    let candidate = finalize(vocab, &hyp, config.length_penalty, None, None)?;
    Ok(DecodeResult {
        source: source.to_string(),
        target_lang: config.target_lang.clone(),
        candidates: candidate.into_iter().collect(),
        stats: DecodeStats {
            steps,
            ..DecodeStats::default()
        },
    })
}

pub(crate) fn check_lid(lid: &LidModel, target: &str) -> Result<()> {
    if lid.covers(target) {
        Ok(())
    } else {
        Err(Error::invalid(format!("LiD model does not cover target language {target:?}")))
    }
}

pub(crate) fn query<M: AutoregressiveModel + ?Sized>(
    model: &M,
    source: &str,
    target: &str,
    hyp: &Hypothesis,
) -> Result<Vec<f64>> {
    let lp = model.next_token_logprobs(source, target, hyp)?;
    if lp.len() != model.vocab().len() {
        return Err(Error::InvalidState(format!(
            "model returned {} log probabilities for a vocabulary of {}",
            lp.len(),
            model.vocab().len()
        )));
    }
    Ok(lp)
}

/// Orders final candidates: higher score, higher model score, smaller tokens.
pub(crate) fn final_order(a: &Candidate, b: &Candidate) -> Ordering {
    b.final_score
        .total_cmp(&a.final_score)
        .then(b.nmt_score.total_cmp(&a.nmt_score))
        .then_with(|| a.tokens.cmp(&b.tokens))
}

fn finalize(
    vocab: &Vocabulary,
    hyp: &Hypothesis,
    length_penalty: f64,
    lid_term: Option<(f64, Option<f64>)>,
    text: Option<String>,
) -> Result<Option<Candidate>> {
    if hyp.is_empty() {
        return Ok(None);
    }
    let text = match text {
        Some(t) => t,
        None => vocab.detokenize(&hyp.tokens)?,
    };
    let base = normalized_score(hyp.logprob, hyp.len(), length_penalty)?;
    let (final_score, lid_logprob) = match lid_term {
        Some((alpha, lp)) => (base + alpha * lp.unwrap_or(0.0), lp),
        None => (base, None),
    };
    Ok(Some(Candidate {
        text,
        tokens: hyp.generated().to_vec(),
        final_score,
        nmt_score: hyp.logprob,
        lid_logprob,
        finished: hyp.finished,
    }))
}

/// Scores the distinct non-empty texts once each, in parallel. Returns one
/// value per input (`None` for empty text) and the number of evaluations.
pub(crate) fn score_texts(lid: &LidModel, target: &str, texts: &[&str]) -> Result<(Vec<Option<f64>>, usize)> {
    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut unique: Vec<&str> = Vec::new();
    let slots: Vec<Option<usize>> = texts
        .iter()
        .map(|&t| {
            if t.is_empty() {
                return None;
            }
            Some(*index.entry(t).or_insert_with(|| {
                unique.push(t);
                unique.len() - 1
            }))
        })
        .collect();
    let scores = lid.logprob_batch(&unique, target)?;
    Ok((slots.into_iter().map(|s| s.map(|i| scores[i])).collect(), unique.len()))
}

#[derive(Clone)]
struct Live {
    hyp: Hypothesis,
    text: String,
}

struct PoolEntry {
    beam: usize,
    token: TokenId,
    step: f64,
    nmt: f64,
    combined: f64,
    text: Option<String>,
}

fn pool_order(a: &PoolEntry, b: &PoolEntry) -> Ordering {
    b.combined
        .total_cmp(&a.combined)
        .then(b.nmt.total_cmp(&a.nmt))
        .then(a.beam.cmp(&b.beam))
        .then(a.token.cmp(&b.token))
}

/// Shared engine. `lid` switches on pre-selection and combined scoring;
/// `labeler` and `trace` record the top of every step's sorted pool.
pub(crate) fn run<M: AutoregressiveModel + ?Sized>(
    model: &M,
    source: &str,
    config: &DecodeConfig,
    lid: Option<&LidModel>,
    labeler: Option<&LidModel>,
    mut trace: Option<&mut Vec<TraceStep>>,
) -> Result<DecodeResult> {
    let vocab = model.vocab();
    let (bos, eos) = (vocab.bos(), vocab.eos());
    let b = config.beam_size;
    let target = config.target_lang.as_str();
    let max_len = config.max_len_for(source);
    let needs_text = lid.is_some() || trace.is_some();

    let mut beams = vec![Live {
        hyp: Hypothesis::start(vocab),
        text: String::new(),
    }];
    let mut finished: Vec<Live> = Vec::new();
    let mut stuck: Vec<Live> = Vec::new();
    let mut stats = DecodeStats::default();

    while !beams.is_empty() && finished.len() < b {
        let mut pool: Vec<PoolEntry> = Vec::new();
        for (i, live) in beams.iter().enumerate() {
            let lp = query(model, source, target, &live.hyp)?;
            let mut options: Vec<TokenId> = if live.hyp.content_len() >= max_len {
                if lp[eos as usize] == f64::NEG_INFINITY {
                    stuck.push(live.clone());
                    continue;
                }
                vec![eos]
            } else {
                (0..lp.len() as TokenId)
                    .filter(|&t| t != bos && lp[t as usize] > f64::NEG_INFINITY)
                    .collect()
            };
            if lid.is_some() && options.len() > config.window {
                let by_prob = |x: &TokenId, y: &TokenId| lp[*y as usize].total_cmp(&lp[*x as usize]).then(x.cmp(y));
                options.select_nth_unstable_by(config.window - 1, by_prob);
                options.truncate(config.window);
                options.sort_unstable_by(by_prob);
            }
            for tok in options {
                let step = lp[tok as usize];
                let nmt = live.hyp.logprob + step;
                pool.push(PoolEntry {
                    beam: i,
                    token: tok,
                    step,
                    nmt,
                    combined: nmt,
                    text: None,
                });
            }
        }
        if pool.is_empty() {
            break;
        }
        stats.steps += 1;

        if needs_text {
            if lid.is_none() && pool.len() > 2 * b {
                pool.select_nth_unstable_by(2 * b - 1, pool_order);
                pool.truncate(2 * b);
            }
            for e in &mut pool {
                let mut text = beams[e.beam].text.clone();
                vocab.push_piece(e.token, &mut text)?;
                e.text = Some(text);
            }
        }
        if let Some(lid) = lid {
            let texts: Vec<&str> = pool.iter().map(|e| e.text.as_deref().unwrap_or("")).collect();
            let (scores, calls) = score_texts(lid, target, &texts)?;
            stats.lid_calls += calls;
            stats.lid_calls_per_step.push(calls);
            for (e, s) in pool.iter_mut().zip(scores) {
                e.combined = e.nmt + config.alpha * s.unwrap_or(0.0);
            }
            pool.sort_unstable_by(pool_order);
        } else {
            if pool.len() > 2 * b {
                pool.select_nth_unstable_by(2 * b - 1, pool_order);
                pool.truncate(2 * b);
            }
            pool.sort_unstable_by(pool_order);
        }

        if let Some(steps) = trace.as_deref_mut() {
            steps.push(trace::record_step(vocab, labeler, stats.steps, &pool[..pool.len().min(b)])?);
        }

        let mut next: Vec<Live> = Vec::with_capacity(b);
        for (rank, e) in pool.into_iter().enumerate() {
            if rank >= b && next.len() >= b {
                break;
            }
            let hyp = beams[e.beam].hyp.extend(e.token, e.step, eos)?;
            let text = match e.text {
                Some(t) => t,
                None if needs_text => unreachable!("text computed above"),
                None => String::new(),
            };
            if hyp.finished {
                if rank < b && finished.len() < b {
                    finished.push(Live { hyp, text });
                }
            } else if next.len() < b {
                next.push(Live { hyp, text });
            }
        }
        beams = next;
    }

    let mut pending = finished;
    if pending.len() < b {
        stuck.sort_by(|x, y| y.hyp.logprob.total_cmp(&x.hyp.logprob).then_with(|| x.hyp.tokens.cmp(&y.hyp.tokens)));
        pending.extend(stuck.into_iter().take(b - pending.len()));
    }

    let texts: Vec<String> = pending
        .iter()
        .map(|l| if needs_text { Ok(l.text.clone()) } else { vocab.detokenize(&l.hyp.tokens) })
        .collect::<Result<_>>()?;
    let lid_scores = match lid {
        Some(lid) => {
            let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
            let (scores, calls) = score_texts(lid, target, &refs)?;
            stats.lid_calls += calls;
            Some(scores)
        }
        None => None,
    };
    let mut candidates = Vec::with_capacity(pending.len());
    for (i, (live, text)) in pending.iter().zip(texts).enumerate() {
        let term = lid_scores.as_ref().map(|s| (config.alpha, s[i]));
        if let Some(c) = finalize(vocab, &live.hyp, config.length_penalty, term, Some(text))? {
            candidates.push(c);
        }
    }
    candidates.sort_by(final_order);

    Ok(DecodeResult {
        source: source.to_string(),
        target_lang: target.to_string(),
        candidates,
        stats,
    })
}

#[cfg(test)]
mod tests;
