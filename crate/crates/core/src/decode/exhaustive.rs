use super::{check_lid, final_order, query, score_texts, Candidate};
use crate::error::{Error, Result};
use crate::hypothesis::{normalized_score, Hypothesis};
use crate::lid::LidModel;
use crate::models::AutoregressiveModel;

/// Largest `|V|^max_len` (specials included) that [`exhaustive_decode`] accepts.
pub const SEARCH_SPACE_LIMIT: f64 = 1e7;

/// Enumerates every EOS-terminated sequence with at most `max_len` content
/// tokens and ranks all of them by `normalized_score(nmt, len, lambda)` plus
/// `alpha * lid_logprob(text)` when a LiD model is given (zero for empty text).
///
/// Sequences of probability zero are skipped. Ties are broken by higher model
/// score, then by token-id lexicographic order.
pub fn exhaustive_decode<M: AutoregressiveModel + ?Sized>(
    model: &M,
    source: &str,
    target_lang: &str,
    max_len: usize,
    length_penalty: f64,
    lid: Option<(&LidModel, f64)>,
) -> Result<Vec<Candidate>> {
    let vocab = model.vocab();
    let estimate = (vocab.len() as f64).powi(max_len as i32);
    if estimate > SEARCH_SPACE_LIMIT {
        return Err(Error::SearchSpace {
            estimate,
            limit: SEARCH_SPACE_LIMIT,
        });
    }
    if let Some((lid, _)) = lid {
        check_lid(lid, target_lang)?;
    }

    let mut complete = Vec::new();
    let mut stack = vec![Hypothesis::start(vocab)];
    while let Some(hyp) = stack.pop() {
        let lp = query(model, source, target_lang, &hyp)?;
        let eos = vocab.eos();
        if lp[eos as usize] > f64::NEG_INFINITY {
            complete.push(hyp.extend(eos, lp[eos as usize], eos)?);
        }
        if hyp.content_len() < max_len {
            for tok in (0..lp.len() as u32).rev() {
                if !vocab.is_special(tok) && lp[tok as usize] > f64::NEG_INFINITY {
                    stack.push(hyp.extend(tok, lp[tok as usize], eos)?);
                }
            }
        }
    }

    let texts: Vec<String> = complete
        .iter()
        .map(|h| vocab.detokenize(&h.tokens))
        .collect::<Result<_>>()?;
    let lid_scores = match lid {
        Some((lid, _)) => {
            let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
            Some(score_texts(lid, target_lang, &refs)?.0)
        }
        None => None,
    };
    let mut out = Vec::with_capacity(complete.len());
    for (i, (hyp, text)) in complete.into_iter().zip(texts).enumerate() {
        let mut final_score = normalized_score(hyp.logprob, hyp.len(), length_penalty)?;
        let mut lid_logprob = None;
        if let (Some((_, alpha)), Some(scores)) = (lid, &lid_scores) {
            lid_logprob = scores[i];
            final_score += alpha * scores[i].unwrap_or(0.0);
        }
        out.push(Candidate {
            text,
            tokens: hyp.generated().to_vec(),
            final_score,
            nmt_score: hyp.logprob,
            lid_logprob,
            finished: true,
        });
    }
    out.sort_by(final_order);
    Ok(out)
}
