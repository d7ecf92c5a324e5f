use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_prefix, logsumexp, AutoregressiveModel};
use crate::error::Result;
use crate::hash::Fnv1a;
use crate::hypothesis::Hypothesis;
use crate::vocab::Vocabulary;

/// A model whose next-token distribution is a pseudo-random softmax keyed by a
/// hash of `(seed, source, target, prefix)`. Used as a fixture for oracle
/// comparisons on small vocabularies and for benchmarks.
#[derive(Debug, Clone)]
pub struct RandomModel {
    vocab: Vocabulary,
    seed: u64,
    /// Logits are drawn uniformly from `[0, sharpness)`.
    sharpness: f64,
}

impl RandomModel {
    pub fn new(vocab: Vocabulary, seed: u64, sharpness: f64) -> Self {
        RandomModel { vocab, seed, sharpness }
    }
}

impl AutoregressiveModel for RandomModel {
    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn next_token_logprobs(&self, source: &str, target_lang: &str, prefix: &Hypothesis) -> Result<Vec<f64>> {
        check_prefix(&self.vocab, prefix)?;
        let mut h = Fnv1a::new();
        h.write_u64(self.seed)
            .write(source.as_bytes())
            .write(&[0xff])
            .write(target_lang.as_bytes())
            .write(&[0xff]);
        for &t in prefix.generated() {
            h.write(&t.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(h.finish());
        let mut logits: Vec<f64> = (0..self.vocab.len())
            .map(|_| rng.gen::<f64>() * self.sharpness)
            .collect();
        logits[self.vocab.bos() as usize] = f64::NEG_INFINITY;
        let z = logsumexp(&logits);
        for x in &mut logits {
            *x -= z;
        }
        Ok(logits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocab::{DEFAULT_BOS, DEFAULT_EOS};

    #[test]
    fn deterministic_and_normalized() {
        let v = Vocabulary::new(DEFAULT_BOS, DEFAULT_EOS, ["▁a".into(), "▁b".into()]).unwrap();
        let m = RandomModel::new(v, 3, 4.0);
        let h = Hypothesis::start(m.vocab());
        let a = m.next_token_logprobs("x", "de", &h).unwrap();
        let b = m.next_token_logprobs("x", "de", &h).unwrap();
        assert_eq!(a, b);
        assert!(logsumexp(&a).abs() < 1e-12);
        let c = m.next_token_logprobs("x", "fr", &h).unwrap();
        assert_ne!(a, c);
    }
}
