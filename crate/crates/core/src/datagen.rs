//! Synthetic language families, parallel corpora and surrogate construction.
//!
//! A family shares one base lexicon over a 20-letter base alphabet. Each
//! language renders base words through its own substitution cipher whose
//! letters come from a distinct Unicode alphabet, so character sets never
//! overlap across languages and every pair of languages has a word-level
//! bijective dictionary through the base lexicon.
//!
//! Default letter ranges, in assignment order (the pivot gets the first):
//!
//! | name | range |
//! |---|---|
//! | latin | a-z |
//! | greek | α-ω |
//! | cyrillic | а-я |
//! | armenian | ա-ֆ |
//! | georgian | ა-ჰ |
//! | hebrew | א-ת |

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{TestItem, TestSet};
use crate::error::{Error, Result};
use crate::hash::derive_seed;
use crate::models::{ModeParams, SurrogateModel, SurrogateSpec};

/// Letters in the base alphabet and in every cipher.
pub const ALPHABET_SIZE: usize = 20;
pub const PIVOT_CODE: &str = "en";
/// Number of short, frequent function words in every family.
pub const FUNCTION_WORDS: usize = 8;
const FUNCTION_WORD_RATE: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LetterRange {
    pub name: String,
    pub start: char,
    pub end: char,
}

impl LetterRange {
    pub fn new(name: &str, start: char, end: char) -> Self {
        LetterRange {
            name: name.to_string(),
            start,
            end,
        }
    }

    /// Alphabetic characters in the inclusive range.
    pub fn letters(&self) -> Vec<char> {
        (self.start..=self.end).filter(|c| c.is_alphabetic()).collect()
    }
}

pub fn default_letter_ranges() -> Vec<LetterRange> {
    vec![
        LetterRange::new("latin", 'a', 'z'),
        LetterRange::new("greek", 'α', 'ω'),
        LetterRange::new("cyrillic", 'а', 'я'),
        LetterRange::new("armenian", 'ա', 'ֆ'),
        LetterRange::new("georgian", 'ა', 'ჰ'),
        LetterRange::new("hebrew", 'א', 'ת'),
    ]
}

/// A synthetic language family.
///
/// `lexicon` holds base words: the first [`FUNCTION_WORDS`] entries are
/// function words, the rest content words. `ciphers[code]` lists the letter
/// replacing each base letter `a`..`t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToyLanguageFamily {
    pub languages: Vec<String>,
    pub ciphers: BTreeMap<String, String>,
    pub lexicon: Vec<String>,
    pub pivot: String,
    pub seed: u64,
}

fn base_letter(i: usize) -> char {
    (b'a' + i as u8) as char
}

fn random_word(rng: &mut ChaCha8Rng, lengths: std::ops::RangeInclusive<usize>) -> String {
    let len = rng.gen_range(lengths);
    (0..len).map(|_| base_letter(rng.gen_range(0..ALPHABET_SIZE))).collect()
}

/// Builds a family of `num_langs` languages (`en` as pivot, then `l1`, `l2`,
/// ...) with `lexicon_size` content words.
pub fn gen_family(seed: u64, num_langs: usize, lexicon_size: usize, ranges: &[LetterRange]) -> Result<ToyLanguageFamily> {
    if num_langs < 3 {
        return Err(Error::invalid(format!(
            "a family needs at least 3 languages (source, target, pivot), got {num_langs}"
        )));
    }
    if ranges.len() < num_langs {
        return Err(Error::invalid(format!(
            "insufficient disjoint letter ranges: {num_langs} languages but {} ranges",
            ranges.len()
        )));
    }
    if lexicon_size < 2 {
        return Err(Error::invalid("lexicon_size must be at least 2"));
    }
    let ranges = &ranges[..num_langs];
    for (i, r) in ranges.iter().enumerate() {
        let n = r.letters().len();
        if n < ALPHABET_SIZE {
            return Err(Error::invalid(format!(
                "letter range {:?} has {n} letters, needs at least {ALPHABET_SIZE}",
                r.name
            )));
        }
        for other in &ranges[..i] {
            if r.start <= other.end && other.start <= r.end {
                return Err(Error::invalid(format!(
                    "letter ranges {:?} and {:?} overlap",
                    other.name, r.name
                )));
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = BTreeSet::new();
    let mut lexicon = Vec::with_capacity(FUNCTION_WORDS + lexicon_size);
    while lexicon.len() < FUNCTION_WORDS {
        let w = random_word(&mut rng, 1..=2);
        if seen.insert(w.clone()) {
            lexicon.push(w);
        }
    }
    let mut attempts = 0;
    while lexicon.len() < FUNCTION_WORDS + lexicon_size {
        let w = random_word(&mut rng, 2..=7);
        if seen.insert(w.clone()) {
            lexicon.push(w);
        }
        attempts += 1;
        if attempts > 100 * (lexicon_size + 10) {
            return Err(Error::invalid(format!("cannot draw {lexicon_size} distinct words")));
        }
    }

    let languages: Vec<String> = std::iter::once(PIVOT_CODE.to_string())
        .chain((1..num_langs).map(|i| format!("l{i}")))
        .collect();
    let mut ciphers = BTreeMap::new();
    for (code, range) in languages.iter().zip(ranges) {
        let mut letters = range.letters();
        letters.shuffle(&mut rng);
        ciphers.insert(code.clone(), letters[..ALPHABET_SIZE].iter().collect());
    }
    Ok(ToyLanguageFamily {
        languages,
        ciphers,
        lexicon,
        pivot: PIVOT_CODE.to_string(),
        seed,
    })
}

impl ToyLanguageFamily {
    fn cipher(&self, lang: &str) -> Result<Vec<char>> {
        self.ciphers
            .get(lang)
            .map(|c| c.chars().collect())
            .ok_or_else(|| Error::invalid(format!("language {lang:?} is not in the family")))
    }

    /// The word for base-lexicon entry `index` in `lang`.
    pub fn word(&self, lang: &str, index: usize) -> Result<String> {
        let cipher = self.cipher(lang)?;
        let base = self
            .lexicon
            .get(index)
            .ok_or_else(|| Error::invalid(format!("lexicon index {index} out of range")))?;
        Ok(encode(base, &cipher))
    }

    /// All words of `lang`, aligned with `lexicon`.
    pub fn words(&self, lang: &str) -> Result<Vec<String>> {
        let cipher = self.cipher(lang)?;
        Ok(self.lexicon.iter().map(|w| encode(w, &cipher)).collect())
    }

    /// Characters used by `lang`.
    pub fn charset(&self, lang: &str) -> Result<BTreeSet<char>> {
        Ok(self.cipher(lang)?.into_iter().collect())
    }

    /// Renders a base sentence (lexicon indices) in `lang`.
    pub fn render(&self, lang: &str, sentence: &[usize]) -> Result<String> {
        let words = self.words(lang)?;
        sentence
            .iter()
            .map(|&i| {
                words
                    .get(i)
                    .cloned()
                    .ok_or_else(|| Error::invalid(format!("lexicon index {i} out of range")))
            })
            .collect::<Result<Vec<_>>>()
            .map(|w| w.join(" "))
    }

    pub fn validate(&self) -> Result<()> {
        if !self.languages.contains(&self.pivot) {
            return Err(Error::invalid(format!("pivot {:?} is not a family language", self.pivot)));
        }
        if self.lexicon.len() <= FUNCTION_WORDS {
            return Err(Error::invalid("lexicon has no content words"));
        }
        let mut owner: BTreeMap<char, &str> = BTreeMap::new();
        for lang in &self.languages {
            let cipher = self.cipher(lang)?;
            if cipher.len() != ALPHABET_SIZE {
                return Err(Error::invalid(format!("cipher of {lang:?} must have {ALPHABET_SIZE} letters")));
            }
            for c in cipher {
                if let Some(other) = owner.insert(c, lang) {
                    if other != lang {
                        return Err(Error::invalid(format!("letter {c:?} is shared by {other:?} and {lang:?}")));
                    }
                    return Err(Error::invalid(format!("cipher of {lang:?} repeats {c:?}")));
                }
            }
        }
        for w in &self.lexicon {
            if w.is_empty() || w.chars().any(|c| !('a'..base_letter(ALPHABET_SIZE)).contains(&c)) {
                return Err(Error::invalid(format!("base word {w:?} is outside the base alphabet")));
            }
        }
        if self.lexicon.iter().collect::<BTreeSet<_>>().len() != self.lexicon.len() {
            return Err(Error::invalid("base lexicon has duplicates"));
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let family: ToyLanguageFamily = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })?;
        family.validate()?;
        Ok(family)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)? + "\n";
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

fn encode(base: &str, cipher: &[char]) -> String {
    base.bytes().map(|b| cipher[(b - b'a') as usize]).collect()
}

fn check_range(len_range: (usize, usize)) -> Result<()> {
    if len_range.0 == 0 || len_range.0 > len_range.1 {
        return Err(Error::invalid(format!("bad sentence length range {len_range:?}")));
    }
    Ok(())
}

/// Base sentence `index` of the stream seeded with `seed`: lexicon indices,
/// with function words at a fixed rate.
pub fn base_sentence(family: &ToyLanguageFamily, seed: u64, index: u64, len_range: (usize, usize)) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "sentence", index));
    let len = rng.gen_range(len_range.0..=len_range.1);
    (0..len)
        .map(|_| {
            if rng.gen_bool(FUNCTION_WORD_RATE) {
                rng.gen_range(0..FUNCTION_WORDS)
            } else {
                rng.gen_range(FUNCTION_WORDS..family.lexicon.len())
            }
        })
        .collect()
}

/// `n` base sentences rendered into every language of `langs`, word-aligned.
pub fn gen_multiway(
    family: &ToyLanguageFamily,
    langs: &[&str],
    n: usize,
    len_range: (usize, usize),
    seed: u64,
) -> Result<Vec<Vec<String>>> {
    check_range(len_range)?;
    for l in langs {
        family.cipher(l)?;
    }
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let base = base_sentence(family, seed, i, len_range);
            langs.iter().map(|l| family.render(l, &base)).collect()
        })
        .collect()
}

/// `(source, reference)` pairs whose reference is the word-by-word translation.
pub fn gen_parallel_corpus(
    family: &ToyLanguageFamily,
    source_lang: &str,
    target_lang: &str,
    n: usize,
    len_range: (usize, usize),
    seed: u64,
) -> Result<Vec<(String, String)>> {
    Ok(gen_multiway(family, &[source_lang, target_lang], n, len_range, seed)?
        .into_iter()
        .map(|mut v| {
            let r = v.pop().unwrap();
            (v.pop().unwrap(), r)
        })
        .collect())
}

/// `(text, language)` pairs for LiD training, `n_per_lang` for every language.
pub fn gen_lid_corpus(
    family: &ToyLanguageFamily,
    n_per_lang: usize,
    len_range: (usize, usize),
    seed: u64,
) -> Result<Vec<(String, String)>> {
    check_range(len_range)?;
    let mut out = Vec::with_capacity(n_per_lang * family.languages.len());
    for (li, lang) in family.languages.iter().enumerate() {
        let stream = derive_seed(seed, "lid", li as u64);
        let texts: Vec<Result<String>> = (0..n_per_lang as u64)
            .into_par_iter()
            .map(|i| family.render(lang, &base_sentence(family, stream, i, len_range)))
            .collect();
        for t in texts {
            out.push((t?, lang.clone()));
        }
    }
    Ok(out)
}

/// A test set over the given directions, `n` sentences per direction.
pub fn gen_testset(
    family: &ToyLanguageFamily,
    directions: &[(String, String)],
    n: usize,
    len_range: (usize, usize),
    seed: u64,
) -> Result<TestSet> {
    let mut items = Vec::new();
    for (d, (src, tgt)) in directions.iter().enumerate() {
        let pairs = gen_parallel_corpus(family, src, tgt, n, len_range, derive_seed(seed, "testset", d as u64))?;
        items.extend(pairs.into_iter().map(|(source, reference)| TestItem {
            source,
            reference,
            source_lang: src.clone(),
            target_lang: tgt.clone(),
        }));
    }
    Ok(TestSet { items })
}

/// Surrogate parameters over the lexicons of `langs` (the pivot is always added),
/// with dictionaries between every pair.
pub fn surrogate_spec(family: &ToyLanguageFamily, langs: &[&str], pi: ModeParams, rho: ModeParams) -> Result<SurrogateSpec> {
    SurrogateSpec::validate_params(&pi, &rho)?;
    let langs: BTreeSet<&str> = langs.iter().copied().chain([family.pivot.as_str()]).collect();
    let mut lexicons = BTreeMap::new();
    for &l in &langs {
        lexicons.insert(l.to_string(), family.words(l)?);
    }
    let mut dictionary: BTreeMap<String, BTreeMap<String, BTreeMap<String, String>>> = BTreeMap::new();
    for &s in &langs {
        for &t in &langs {
            if s == t {
                continue;
            }
            let entries = lexicons[s].iter().cloned().zip(lexicons[t].iter().cloned()).collect();
            dictionary.entry(s.to_string()).or_default().insert(t.to_string(), entries);
        }
    }
    let spec = SurrogateSpec {
        pi,
        rho,
        alternatives: 1,
        alternative_share: 0.9,
        pivot: family.pivot.clone(),
        lexicons,
        dictionary,
    };
    spec.validate()?;
    Ok(spec)
}

/// Surrogate for translating `source_lang` into `target_lang`, with lexicons
/// for the source, the target and the pivot.
pub fn build_surrogate(
    family: &ToyLanguageFamily,
    direction: (&str, &str),
    pi: ModeParams,
    rho: ModeParams,
) -> Result<(SurrogateSpec, SurrogateModel)> {
    let spec = surrogate_spec(family, &[direction.0, direction.1], pi, rho)?;
    let model = SurrogateModel::new(spec.clone())?;
    Ok((spec, model))
}
