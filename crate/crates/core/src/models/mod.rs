//! Autoregressive models queried by the decoders.

mod random;
mod surrogate;
mod table;

pub use random::RandomModel;
pub use surrogate::{crossover_length, Mode, ModeParams, SurrogateModel, SurrogateSpec};
pub use table::{TableModel, TableState};

use crate::error::{Error, Result};
use crate::hypothesis::Hypothesis;
use crate::vocab::{TokenId, Vocabulary};

/// Next-token distribution conditioned on a source sentence, a target
/// language tag and the tokens generated so far.
///
/// Implementations must be deterministic and must return a full-vocabulary
/// vector of natural-log probabilities whose exponentials sum to one.
pub trait AutoregressiveModel: Send + Sync {
    fn vocab(&self) -> &Vocabulary;

    fn next_token_logprobs(
        &self,
        source: &str,
        target_lang: &str,
        prefix: &Hypothesis,
    ) -> Result<Vec<f64>>;
}

impl<M: AutoregressiveModel + ?Sized> AutoregressiveModel for &M {
    fn vocab(&self) -> &Vocabulary {
        (**self).vocab()
    }

    fn next_token_logprobs(&self, source: &str, target_lang: &str, prefix: &Hypothesis) -> Result<Vec<f64>> {
        (**self).next_token_logprobs(source, target_lang, prefix)
    }
}

impl<M: AutoregressiveModel + ?Sized> AutoregressiveModel for Box<M> {
    fn vocab(&self) -> &Vocabulary {
        (**self).vocab()
    }

    fn next_token_logprobs(&self, source: &str, target_lang: &str, prefix: &Hypothesis) -> Result<Vec<f64>> {
        (**self).next_token_logprobs(source, target_lang, prefix)
    }
}

pub(crate) fn check_prefix(vocab: &Vocabulary, prefix: &Hypothesis) -> Result<()> {
    if prefix.finished {
        return Err(Error::InvalidState("prefix is finished".into()));
    }
    if prefix.tokens.first() != Some(&vocab.bos()) {
        return Err(Error::invalid("prefix must begin with BOS"));
    }
    Ok(())
}

pub fn logsumexp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

/// Recomputes the cumulative log probability of `generated` (tokens after BOS)
/// from scratch, one model query per token.
pub fn rescore<M: AutoregressiveModel + ?Sized>(
    model: &M,
    source: &str,
    target_lang: &str,
    generated: &[TokenId],
) -> Result<f64> {
    let vocab = model.vocab();
    let mut hyp = Hypothesis::start(vocab);
    for &tok in generated {
        let lp = model.next_token_logprobs(source, target_lang, &hyp)?;
        let step = *lp
            .get(tok as usize)
            .ok_or_else(|| Error::invalid(format!("unknown token id {tok}")))?;
        hyp = hyp.extend(tok, step, vocab.eos())?;
    }
    Ok(hyp.logprob)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logsumexp_basics() {
        assert!((logsumexp(&[0.5f64.ln(), 0.5f64.ln()])).abs() < 1e-15);
        assert_eq!(logsumexp(&[f64::NEG_INFINITY; 3]), f64::NEG_INFINITY);
        assert!((logsumexp(&[-1000.0, -1000.0]) - (-1000.0 + 2f64.ln())).abs() < 1e-9);
    }
}
