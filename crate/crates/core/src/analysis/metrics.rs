//! BLEU and chrF compatible with sacreBLEU 1.4.14 (13a tokenization,
//! case-sensitive, 4-gram BLEU, character 6-gram chrF with beta = 2).

use std::collections::HashMap;
use std::sync::OnceLock;

use regex::Regex;

use crate::error::{Error, Result};

const NGRAM_ORDER: usize = 4;
const CHRF_ORDER: usize = 6;
const CHRF_BETA: f64 = 2.0;

/// Precision assigned to n-gram orders without matches by sentence BLEU:
/// `100 * FLOOR / total`.
pub const SENTENCE_BLEU_FLOOR: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Smoothing {
    /// Halve the precision of each successive order without matches.
    Exp,
    /// Use `value` in place of a zero match count.
    Floor(f64),
}

fn rules() -> &'static [(Regex, &'static str); 4] {
    static RULES: OnceLock<[(Regex, &'static str); 4]> = OnceLock::new();
    RULES.get_or_init(|| {
        [
            (Regex::new(r"([\{-~\[-` -&\(-\+:-@/])").unwrap(), " $1 "),
            (Regex::new(r"([^0-9])([\.,])").unwrap(), "$1 $2 "),
            (Regex::new(r"([\.,])([^0-9])").unwrap(), " $1 $2"),
            (Regex::new(r"([0-9])(-)").unwrap(), "$1 $2 "),
        ]
    })
}

/// The mteval-v13a tokenizer.
pub fn tokenize_13a(line: &str) -> String {
    let mut s = line
        .replace("<skipped>", "")
        .replace("-\n", "")
        .replace('\n', " ")
        .replace("&quot;", "\"")
        .replace("&amp;", "&")
        .replace("&lt;", "<")
        .replace("&gt;", ">");
    s = format!(" {s} ");
    for (re, rep) in rules() {
        s = re.replace_all(&s, *rep).into_owned();
    }
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct BleuStats {
    correct: [usize; NGRAM_ORDER],
    total: [usize; NGRAM_ORDER],
    sys_len: usize,
    ref_len: usize,
}

impl BleuStats {
    fn add(&mut self, other: &BleuStats) {
        for n in 0..NGRAM_ORDER {
            self.correct[n] += other.correct[n];
            self.total[n] += other.total[n];
        }
        self.sys_len += other.sys_len;
        self.ref_len += other.ref_len;
    }
}

fn ngram_counts<'a>(words: &'a [&'a str], n: usize) -> HashMap<&'a [&'a str], usize> {
    let mut out = HashMap::new();
    if words.len() >= n {
        for w in words.windows(n) {
            *out.entry(w).or_insert(0) += 1;
        }
    }
    out
}

fn sentence_stats(hyp: &str, reference: &str) -> BleuStats {
    let h = tokenize_13a(hyp);
    let r = tokenize_13a(reference);
    let hw: Vec<&str> = h.split(' ').filter(|w| !w.is_empty()).collect();
    let rw: Vec<&str> = r.split(' ').filter(|w| !w.is_empty()).collect();
    let mut st = BleuStats {
        sys_len: hw.len(),
        ref_len: rw.len(),
        ..BleuStats::default()
    };
    for n in 1..=NGRAM_ORDER {
        let hc = ngram_counts(&hw, n);
        let rc = ngram_counts(&rw, n);
        st.total[n - 1] = hw.len().saturating_sub(n - 1);
        st.correct[n - 1] = hc.iter().map(|(g, &c)| c.min(rc.get(g).copied().unwrap_or(0))).sum();
    }
    st
}

fn my_log(x: f64) -> f64 {
    if x == 0.0 {
        -9_999_999_999.0
    } else {
        x.ln()
    }
}

fn compute_bleu(st: &BleuStats, smoothing: Smoothing, effective_order: bool) -> f64 {
    let mut precisions = [0.0; NGRAM_ORDER];
    let mut smooth_mteval = 1.0;
    let mut order = NGRAM_ORDER;
    for (n, precision) in precisions.iter_mut().enumerate() {
        if st.total[n] == 0 {
            break;
        }
        if effective_order {
            order = n + 1;
        }
        let total = st.total[n] as f64;
        *precision = if st.correct[n] == 0 {
            match smoothing {
                Smoothing::Exp => {
                    smooth_mteval *= 2.0;
                    100.0 / (smooth_mteval * total)
                }
                Smoothing::Floor(v) => 100.0 * v / total,
            }
        } else {
            100.0 * st.correct[n] as f64 / total
        };
    }
    let bp = if st.sys_len < st.ref_len {
        if st.sys_len > 0 {
            (1.0 - st.ref_len as f64 / st.sys_len as f64).exp()
        } else {
            0.0
        }
    } else {
        1.0
    };
    bp * (precisions[..order].iter().map(|&p| my_log(p)).sum::<f64>() / order as f64).exp()
}

/// Sentence-level BLEU with floor smoothing and effective order.
pub fn sentence_bleu(hyp: &str, reference: &str) -> Result<f64> {
    if hyp.trim().is_empty() || reference.trim().is_empty() {
        return Err(Error::invalid("sentence BLEU needs non-empty hypothesis and reference"));
    }
    Ok(compute_bleu(
        &sentence_stats(hyp, reference),
        Smoothing::Floor(SENTENCE_BLEU_FLOOR),
        true,
    ))
}

/// Corpus BLEU with exponential smoothing.
pub fn corpus_bleu<H: AsRef<str>, R: AsRef<str>>(hyps: &[H], refs: &[R]) -> Result<f64> {
    if hyps.len() != refs.len() {
        return Err(Error::invalid(format!(
            "{} hypotheses but {} references",
            hyps.len(),
            refs.len()
        )));
    }
    if hyps.is_empty() {
        return Err(Error::invalid("corpus BLEU needs at least one sentence"));
    }
    let mut st = BleuStats::default();
    for (h, r) in hyps.iter().zip(refs) {
        st.add(&sentence_stats(h.as_ref(), r.as_ref()));
    }
    Ok(compute_bleu(&st, Smoothing::Exp, false))
}

fn char_ngrams(chars: &[char], n: usize) -> HashMap<&[char], usize> {
    let mut out = HashMap::new();
    if chars.len() >= n {
        for w in chars.windows(n) {
            *out.entry(w).or_insert(0) += 1;
        }
    }
    out
}

/// chrF2 on a 0-100 scale, whitespace removed before n-gram extraction.
pub fn chrf2(hyp: &str, reference: &str) -> Result<f64> {
    let h: Vec<char> = hyp.chars().filter(|c| !c.is_whitespace()).collect();
    let r: Vec<char> = reference.chars().filter(|c| !c.is_whitespace()).collect();
    if h.is_empty() || r.is_empty() {
        return Err(Error::invalid("chrF needs non-empty hypothesis and reference"));
    }
    let (mut precision, mut recall, mut order) = (0.0, 0.0, 0);
    for n in 1..=CHRF_ORDER {
        let hc = char_ngrams(&h, n);
        let rc = char_ngrams(&r, n);
        let hl: usize = hc.values().sum();
        let rl: usize = rc.values().sum();
        if hl > 0 && rl > 0 {
            let m: usize = hc.iter().map(|(g, &c)| c.min(rc.get(g).copied().unwrap_or(0))).sum();
            precision += m as f64 / hl as f64;
            recall += m as f64 / rl as f64;
            order += 1;
        }
    }
    if order == 0 {
        return Ok(0.0);
    }
    precision /= order as f64;
    recall /= order as f64;
    if precision == 0.0 && recall == 0.0 {
        return Ok(0.0);
    }
    let b2 = CHRF_BETA * CHRF_BETA;
    Ok(100.0 * (1.0 + b2) * precision * recall / (b2 * precision + recall))
}
