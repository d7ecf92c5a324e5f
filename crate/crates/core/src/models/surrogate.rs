//! Mode-mixture surrogate of a multilingual translation model.
//!
//! The first generated token selects one of three latent modes: translate into
//! the requested target language, translate into the pivot language, or copy
//! the source. Each mode has a first-step prior `pi` and a per-step
//! continuation peak `rho` on its scripted next token. Off-target modes start
//! with a low prior but continue more cheaply, so beyond a crossover length the
//! complete off-target sequence outscores the on-target one.
//!
//! Continuations are position-aligned: at generated position `k` a mode
//! scripts the output word aligned with source word `k`, whatever tokens were
//! chosen at positions `1..k`. A share of the non-peak mass goes to a few
//! same-language alternatives of the scripted word, the rest is spread
//! uniformly over the remaining content tokens. EOS has zero probability before
//! the output reaches the source length and receives the peak mass after that.
//! A first token that matches no mode's scripted head puts the hypothesis in a
//! stray state with uniform continuations.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{check_prefix, AutoregressiveModel};
use crate::error::{Error, Result};
use crate::hypothesis::Hypothesis;
use crate::vocab::{TokenId, Vocabulary, BOUNDARY_MARKER, DEFAULT_BOS, DEFAULT_EOS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Target,
    English,
    Copy,
}

impl Mode {
    /// Resolution order when two modes script the same token.
    pub const ALL: [Mode; 3] = [Mode::Target, Mode::English, Mode::Copy];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Target => "target",
            Mode::English => "english",
            Mode::Copy => "copy",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "target" => Ok(Mode::Target),
            "english" => Ok(Mode::English),
            "copy" => Ok(Mode::Copy),
            other => Err(Error::invalid(format!("unknown mode {other:?}"))),
        }
    }
}

/// One value per mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeParams {
    pub target: f64,
    pub english: f64,
    pub copy: f64,
}

impl ModeParams {
    pub fn new(target: f64, english: f64, copy: f64) -> Self {
        ModeParams { target, english, copy }
    }

    pub fn get(&self, mode: Mode) -> f64 {
        match mode {
            Mode::Target => self.target,
            Mode::English => self.english,
            Mode::Copy => self.copy,
        }
    }

    pub fn default_prior() -> Self {
        ModeParams::new(0.6, 0.05, 0.05)
    }

    pub fn default_peak() -> Self {
        ModeParams::new(0.7, 0.95, 0.9)
    }
}

/// Source length beyond which the complete `mode` sequence outscores the
/// complete target-mode sequence:
/// `(ln pi_target - ln pi_mode) / (ln rho_mode - ln rho_target)`.
pub fn crossover_length(pi: &ModeParams, rho: &ModeParams, mode: Mode) -> Result<f64> {
    let (on, off) = (rho.target, rho.get(mode));
    if off <= on {
        return Err(Error::NoCrossover {
            mode: mode.to_string(),
            off,
            on,
        });
    }
    Ok((pi.target.ln() - pi.get(mode).ln()) / (off.ln() - on.ln()))
}

fn default_alternatives() -> usize {
    1
}

fn default_alternative_share() -> f64 {
    0.9
}

/// Parameters and lexical resources of a [`SurrogateModel`].
///
/// `lexicons` maps a language code to its word list; `dictionary[src][tgt]`
/// maps a `src` word to its `tgt` translation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurrogateSpec {
    pub pi: ModeParams,
    pub rho: ModeParams,
    /// Same-language alternatives of each scripted word.
    #[serde(default = "default_alternatives")]
    pub alternatives: usize,
    /// Fraction of a mode's non-peak mass given to the alternatives.
    #[serde(default = "default_alternative_share")]
    pub alternative_share: f64,
    pub pivot: String,
    pub lexicons: BTreeMap<String, Vec<String>>,
    pub dictionary: BTreeMap<String, BTreeMap<String, BTreeMap<String, String>>>,
}

impl SurrogateSpec {
    /// Checks the prior/peak constraints alone.
    pub fn validate_params(pi: &ModeParams, rho: &ModeParams) -> Result<()> {
        for m in Mode::ALL {
            let p = pi.get(m);
            if !(0.0..=1.0).contains(&p) || p.is_nan() {
                return Err(Error::invalid(format!("pi.{m} = {p} is not a probability")));
            }
            let r = rho.get(m);
            if !(r > 0.0 && r < 1.0) {
                return Err(Error::invalid(format!("rho.{m} = {r} must lie strictly between 0 and 1")));
            }
        }
        let total = pi.target + pi.english + pi.copy;
        if total > 1.0 + 1e-12 {
            return Err(Error::invalid(format!("pi sums to {total}, more than 1")));
        }
        if pi.target <= pi.english {
            return Err(Error::invalid(format!(
                "constraint pi.target > pi.english violated ({} <= {})",
                pi.target, pi.english
            )));
        }
        if pi.target <= pi.copy {
            return Err(Error::invalid(format!(
                "constraint pi.target > pi.copy violated ({} <= {})",
                pi.target, pi.copy
            )));
        }
        if rho.english < rho.target {
            return Err(Error::invalid(format!(
                "constraint rho.english >= rho.target violated ({} < {})",
                rho.english, rho.target
            )));
        }
        if rho.copy < rho.target {
            return Err(Error::invalid(format!(
                "constraint rho.copy >= rho.target violated ({} < {})",
                rho.copy, rho.target
            )));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        Self::validate_params(&self.pi, &self.rho)?;
        if !(0.0..=1.0).contains(&self.alternative_share) {
            return Err(Error::invalid(format!(
                "alternative_share = {} is not a fraction",
                self.alternative_share
            )));
        }
        if !self.lexicons.contains_key(&self.pivot) {
            return Err(Error::invalid(format!("pivot {:?} has no lexicon", self.pivot)));
        }
        let mut owner: HashMap<&str, &str> = HashMap::new();
        let mut content = 0;
        for (lang, words) in &self.lexicons {
            if words.len() <= self.alternatives {
                return Err(Error::invalid(format!(
                    "lexicon {lang:?} has {} words, needs more than {} alternatives",
                    words.len(),
                    self.alternatives
                )));
            }
            for w in words {
                if w.is_empty() || w.chars().any(|c| c.is_whitespace() || c == BOUNDARY_MARKER) {
                    return Err(Error::invalid(format!("bad word {w:?} in lexicon {lang:?}")));
                }
                if let Some(other) = owner.insert(w.as_str(), lang.as_str()) {
                    return Err(Error::invalid(format!(
                        "lexicons must be disjoint: {w:?} appears in {other:?} and {lang:?}"
                    )));
                }
            }
            content += words.len();
        }
        if content < self.alternatives + 4 {
            return Err(Error::invalid("vocabulary too small for the noise distribution"));
        }
        for (src, by_tgt) in &self.dictionary {
            for (tgt, entries) in by_tgt {
                for (from, to) in entries {
                    if owner.get(from.as_str()) != Some(&src.as_str()) {
                        return Err(Error::invalid(format!(
                            "dictionary {src}->{tgt}: {from:?} is not a {src:?} word"
                        )));
                    }
                    if owner.get(to.as_str()) != Some(&tgt.as_str()) {
                        return Err(Error::invalid(format!(
                            "dictionary {src}->{tgt}: {to:?} is not a {tgt:?} word"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn crossover_length(&self, mode: Mode) -> Result<f64> {
        crossover_length(&self.pi, &self.rho, mode)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone)]
pub struct SurrogateModel {
    spec: SurrogateSpec,
    vocab: Vocabulary,
    lang_index: HashMap<String, usize>,
    offsets: Vec<TokenId>,
    sizes: Vec<usize>,
    words: HashMap<String, (usize, usize)>,
    /// `translate[src][tgt][i]` is the index in `tgt` of the translation of word `i` of `src`.
    translate: Vec<Vec<Vec<Option<usize>>>>,
    pivot: usize,
}

impl SurrogateModel {
    pub fn new(spec: SurrogateSpec) -> Result<Self> {
        spec.validate()?;
        let langs: Vec<String> = spec.lexicons.keys().cloned().collect();
        let lang_index: HashMap<String, usize> =
            langs.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect();

        let mut offsets = Vec::with_capacity(langs.len());
        let mut sizes = Vec::with_capacity(langs.len());
        let mut words = HashMap::new();
        let mut tokens = Vec::new();
        let mut next: TokenId = 2;
        for (li, lang) in langs.iter().enumerate() {
            let lex = &spec.lexicons[lang];
            offsets.push(next);
            sizes.push(lex.len());
            for (wi, w) in lex.iter().enumerate() {
                words.insert(w.clone(), (li, wi));
                tokens.push(format!("{BOUNDARY_MARKER}{w}"));
            }
            next += lex.len() as TokenId;
        }
        let vocab = Vocabulary::new(DEFAULT_BOS, DEFAULT_EOS, tokens)?;

        let mut translate = vec![vec![Vec::new(); langs.len()]; langs.len()];
        for (src, by_tgt) in &spec.dictionary {
            let s = lang_index[src];
            for (tgt, entries) in by_tgt {
                let t = lang_index[tgt];
                let table = &mut translate[s][t];
                *table = vec![None; sizes[s]];
                for (from, to) in entries {
                    table[words[from].1] = Some(words[to].1);
                }
            }
        }
        let pivot = lang_index[&spec.pivot];
        Ok(SurrogateModel {
            spec,
            vocab,
            lang_index,
            offsets,
            sizes,
            words,
            translate,
            pivot,
        })
    }

    pub fn spec(&self) -> &SurrogateSpec {
        &self.spec
    }

    pub fn languages(&self) -> impl Iterator<Item = &str> {
        self.spec.lexicons.keys().map(String::as_str)
    }

    fn lang(&self, code: &str) -> Result<usize> {
        self.lang_index
            .get(code)
            .copied()
            .ok_or_else(|| Error::invalid(format!("language {code:?} has no lexicon")))
    }

    /// Language index and word indices of a source sentence.
    fn parse_source(&self, source: &str) -> Result<(usize, Vec<usize>)> {
        let mut lang = None;
        let mut idx = Vec::new();
        for w in source.split_whitespace() {
            let &(l, i) = self
                .words
                .get(w)
                .ok_or_else(|| Error::invalid(format!("source word {w:?} is not in any lexicon")))?;
            match lang {
                None => lang = Some(l),
                Some(prev) if prev != l => {
                    return Err(Error::invalid("source mixes words from several languages"));
                }
                _ => {}
            }
            idx.push(i);
        }
        match lang {
            Some(l) => Ok((l, idx)),
            None => Err(Error::invalid("empty source sentence")),
        }
    }

    fn output_lang(&self, mode: Mode, src: usize, tgt: usize) -> usize {
        match mode {
            Mode::Target => tgt,
            Mode::English => self.pivot,
            Mode::Copy => src,
        }
    }

    fn mode_token(&self, mode: Mode, src: usize, tgt: usize, word: usize) -> Result<TokenId> {
        let out = self.output_lang(mode, src, tgt);
        let idx = if out == src {
            word
        } else {
            self.translate[src][out]
                .get(word)
                .copied()
                .flatten()
                .ok_or_else(|| {
                    let codes: Vec<&str> = self.languages().collect();
                    Error::invalid(format!(
                        "no {}->{} translation for {:?}",
                        codes[src], codes[out], self.spec.lexicons[codes[src]][word]
                    ))
                })?
        };
        Ok(self.offsets[out] + idx as TokenId)
    }

    fn locate(&self, token: TokenId) -> (usize, usize) {
        let lang = self.offsets.partition_point(|&o| o <= token) - 1;
        (lang, (token - self.offsets[lang]) as usize)
    }

    /// The complete scripted output of `mode`, EOS included.
    pub fn script(&self, mode: Mode, source: &str, target_lang: &str) -> Result<Vec<TokenId>> {
        let tgt = self.lang(target_lang)?;
        let (src, words) = self.parse_source(source)?;
        let mut out = words
            .iter()
            .map(|&w| self.mode_token(mode, src, tgt, w))
            .collect::<Result<Vec<_>>>()?;
        out.push(self.vocab.eos());
        Ok(out)
    }

    /// Mode selected by the first generated token, if it matches a scripted head.
    pub fn mode_of(&self, source: &str, target_lang: &str, generated: &[TokenId]) -> Result<Option<Mode>> {
        let tgt = self.lang(target_lang)?;
        let (src, words) = self.parse_source(source)?;
        let Some(&first) = generated.first() else {
            return Ok(None);
        };
        for m in Mode::ALL {
            if self.mode_token(m, src, tgt, words[0])? == first {
                return Ok(Some(m));
            }
        }
        Ok(None)
    }
}

impl AutoregressiveModel for SurrogateModel {
    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn next_token_logprobs(&self, source: &str, target_lang: &str, prefix: &Hypothesis) -> Result<Vec<f64>> {
        check_prefix(&self.vocab, prefix)?;
        let tgt = self.lang(target_lang)?;
        let (src, words) = self.parse_source(source)?;
        let n = words.len();
        let k = prefix.len();
        let content = self.vocab.len() - 2;
        let eos = self.vocab.eos() as usize;
        let mut out = vec![f64::NEG_INFINITY; self.vocab.len()];

        if k == 0 {
            let mut heads: Vec<(TokenId, f64)> = Vec::with_capacity(3);
            for m in Mode::ALL {
                let tok = self.mode_token(m, src, tgt, words[0])?;
                match heads.iter_mut().find(|(t, _)| *t == tok) {
                    Some((_, p)) => *p += self.spec.pi.get(m),
                    None => heads.push((tok, self.spec.pi.get(m))),
                }
            }
            let scripted: f64 = heads.iter().map(|&(_, p)| p).sum();
            let noise = ((1.0 - scripted).max(0.0) / (content - heads.len()) as f64).ln();
            out[2..].fill(noise);
            for (tok, p) in heads {
                out[tok as usize] = p.ln();
            }
            return Ok(out);
        }

        let first = prefix.generated()[0];
        let mut mode = None;
        for m in Mode::ALL {
            if self.mode_token(m, src, tgt, words[0])? == first {
                mode = Some(m);
                break;
            }
        }

        let Some(mode) = mode else {
            let slots = content + usize::from(k >= n);
            let u = (1.0 / slots as f64).ln();
            out[2..].fill(u);
            if k >= n {
                out[eos] = u;
            }
            return Ok(out);
        };

        let rho = self.spec.rho.get(mode);
        if k >= n {
            out[2..].fill(((1.0 - rho) / content as f64).ln());
            out[eos] = rho.ln();
            return Ok(out);
        }

        let scripted = self.mode_token(mode, src, tgt, words[k])?;
        let (lang, idx) = self.locate(scripted);
        let alts = self.spec.alternatives;
        let (alt_mass, noise_mass) = if alts == 0 {
            (0.0, 1.0 - rho)
        } else {
            let share = self.spec.alternative_share;
            ((1.0 - rho) * share / alts as f64, (1.0 - rho) * (1.0 - share))
        };
        out[2..].fill((noise_mass / (content - 1 - alts) as f64).ln());
        out[scripted as usize] = rho.ln();
        for j in 1..=alts {
            let alt = self.offsets[lang] + ((idx + j) % self.sizes[lang]) as TokenId;
            out[alt as usize] = alt_mass.ln();
        }
        Ok(out)
    }
}
