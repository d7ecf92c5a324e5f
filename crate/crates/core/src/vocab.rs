//! Token vocabulary and the marker-prefix subword convention.
//!
//! Word-initial pieces carry [`BOUNDARY_MARKER`] as their first character;
//! continuation pieces carry nothing. Detokenizing turns each marker into a
//! single space and drops the space in front of the first word.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

pub type TokenId = u32;

/// Reserved prefix of word-initial pieces (U+2581, as in SentencePiece).
pub const BOUNDARY_MARKER: char = '\u{2581}';

pub const DEFAULT_BOS: &str = "<s>";
pub const DEFAULT_EOS: &str = "</s>";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    entries: Vec<String>,
    ids: HashMap<String, TokenId>,
    bos: TokenId,
    eos: TokenId,
}

impl Vocabulary {
    /// Builds a vocabulary whose first two entries are `bos` and `eos`.
    pub fn new(bos: &str, eos: &str, tokens: impl IntoIterator<Item = String>) -> Result<Self> {
        let entries: Vec<String> = [bos.to_string(), eos.to_string()]
            .into_iter()
            .chain(tokens)
            .collect();
        Self::from_entries(entries)
    }

    /// Builds a vocabulary from a full entry list; entries 0 and 1 are BOS and EOS.
    pub fn from_entries(entries: Vec<String>) -> Result<Self> {
        if entries.len() < 2 {
            return Err(Error::invalid("vocabulary needs at least the BOS and EOS entries"));
        }
        if entries.len() > TokenId::MAX as usize {
            return Err(Error::invalid("vocabulary too large"));
        }
        let mut ids = HashMap::with_capacity(entries.len());
        for (i, tok) in entries.iter().enumerate() {
            if tok.is_empty() {
                return Err(Error::invalid(format!("empty token at id {i}")));
            }
            if tok.chars().any(char::is_whitespace) {
                return Err(Error::invalid(format!("token {tok:?} at id {i} contains whitespace")));
            }
            if i >= 2 && tok.chars().skip(1).any(|c| c == BOUNDARY_MARKER) {
                return Err(Error::invalid(format!(
                    "token {tok:?} at id {i} has a boundary marker after its first character"
                )));
            }
            if ids.insert(tok.clone(), i as TokenId).is_some() {
                return Err(Error::invalid(format!("duplicate token {tok:?}")));
            }
        }
        Ok(Vocabulary {
            entries,
            ids,
            bos: 0,
            eos: 1,
        })
    }

    /// Reads a vocabulary file: UTF-8, one token per line, line number = id,
    /// the first two lines being BOS and EOS.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: "empty token line".into(),
                });
            }
            entries.push(line.to_string());
        }
        Self::from_entries(entries).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: e.to_string(),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::new();
        for tok in &self.entries {
            writeln!(out, "{tok}").expect("writing to a String cannot fail");
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn bos(&self) -> TokenId {
        self.bos
    }

    pub fn eos(&self) -> TokenId {
        self.eos
    }

    pub fn entries(&self) -> &[String] {
        &self.entries
    }

    pub fn id_of(&self, token: &str) -> Option<TokenId> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, id: TokenId) -> Option<&str> {
        self.entries.get(id as usize).map(String::as_str)
    }

    pub fn is_special(&self, id: TokenId) -> bool {
        id == self.bos || id == self.eos
    }

    /// Renders a token sequence as plain text. BOS and EOS are skipped.
    pub fn detokenize(&self, tokens: &[TokenId]) -> Result<String> {
        let mut out = String::new();
        self.detokenize_into(tokens, &mut out)?;
        Ok(out)
    }

    /// Like [`Vocabulary::detokenize`] but appends to a caller-owned buffer,
    /// which is cleared first.
    pub fn detokenize_into(&self, tokens: &[TokenId], out: &mut String) -> Result<()> {
        out.clear();
        for &id in tokens {
            self.push_piece(id, out)?;
        }
        Ok(())
    }

    /// Appends the rendering of one token to already detokenized text.
    pub fn push_piece(&self, id: TokenId, out: &mut String) -> Result<()> {
        let piece = self
            .token(id)
            .ok_or_else(|| Error::invalid(format!("unknown token id {id}")))?;
        if self.is_special(id) {
            return Ok(());
        }
        match piece.strip_prefix(BOUNDARY_MARKER) {
            Some(rest) => {
                if !out.is_empty() {
                    out.push(' ');
                }
                out.push_str(rest);
            }
            None => out.push_str(piece),
        }
        Ok(())
    }

    /// Whitespace-splits `text` and maps every word to `▁word`, falling back to a
    /// greedy longest-match over continuation pieces. The literal BOS/EOS strings
    /// map to their special ids.
    pub fn tokenize(&self, text: &str) -> Result<Vec<TokenId>> {
        let mut out = Vec::new();
        for word in text.split_whitespace() {
            if let Some(id) = self.id_of(word).filter(|&id| self.is_special(id)) {
                out.push(id);
                continue;
            }
            let marked = format!("{BOUNDARY_MARKER}{word}");
            if let Some(id) = self.id_of(&marked) {
                out.push(id);
                continue;
            }
            self.segment(&marked, &mut out)
                .ok_or_else(|| Error::invalid(format!("word {word:?} cannot be segmented")))?;
        }
        Ok(out)
    }

    fn segment(&self, marked: &str, out: &mut Vec<TokenId>) -> Option<()> {
        let start = out.len();
        let mut rest = marked;
        while !rest.is_empty() {
            let found = rest
                .char_indices()
                .map(|(i, c)| i + c.len_utf8())
                .rev()
                .find_map(|end| {
                    self.id_of(&rest[..end])
                        .filter(|&id| !self.is_special(id))
                        .map(|id| (id, end))
                });
            match found {
                Some((id, end)) => {
                    out.push(id);
                    rest = &rest[end..];
                }
                None => {
                    out.truncate(start);
                    return None;
                }
            }
        }
        Some(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab(words: &[&str]) -> Vocabulary {
        Vocabulary::new(DEFAULT_BOS, DEFAULT_EOS, words.iter().map(|w| w.to_string())).unwrap()
    }

    #[test]
    fn detokenize_joins_marked_pieces() {
        let v = vocab(&["▁Wir", "▁haben", "▁jetzt", "▁co", "mp", "ute", "▁it"]);
        let ids = v.tokenize("Wir haben jetzt").unwrap();
        assert_eq!(v.detokenize(&ids).unwrap(), "Wir haben jetzt");

        let ids: Vec<_> = ["▁co", "mp", "ute", "▁it"]
            .iter()
            .map(|t| v.id_of(t).unwrap())
            .collect();
        assert_eq!(v.detokenize(&ids).unwrap(), "compute it");
    }

    #[test]
    fn specials_only_detokenize_to_empty() {
        let v = vocab(&["▁a"]);
        assert_eq!(v.detokenize(&[v.bos(), v.eos()]).unwrap(), "");
    }

    #[test]
    fn unknown_id_is_rejected() {
        let v = vocab(&["▁a"]);
        assert!(matches!(v.detokenize(&[7]), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn tokenize_falls_back_to_subwords() {
        let v = vocab(&["▁co", "mp", "ute", "▁it"]);
        let ids = v.tokenize("compute it").unwrap();
        assert_eq!(ids.len(), 4);
        assert_eq!(v.detokenize(&ids).unwrap(), "compute it");
        assert!(v.tokenize("xyz").is_err());
    }

    #[test]
    fn tokenize_maps_literal_specials() {
        let v = vocab(&["▁a"]);
        assert_eq!(v.tokenize("a </s>").unwrap(), vec![2, v.eos()]);
    }

    #[test]
    fn rejects_bad_entries() {
        assert!(Vocabulary::new("<s>", "<s>", []).is_err());
        assert!(Vocabulary::from_entries(vec!["<s>".into()]).is_err());
        assert!(Vocabulary::new("<s>", "</s>", ["a b".to_string()]).is_err());
        assert!(Vocabulary::new("<s>", "</s>", ["a▁b".to_string()]).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vocab.txt");
        let v = vocab(&["▁x", "y"]);
        v.save(&path).unwrap();
        let back = Vocabulary::load(&path).unwrap();
        assert_eq!(v, back);
        for (i, tok) in back.entries().iter().enumerate() {
            assert_eq!(back.id_of(tok), Some(i as TokenId));
        }
    }

    #[test]
    fn load_reports_line_of_empty_entry() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vocab.txt");
        std::fs::write(&path, "<s>\n</s>\n\n▁a\n").unwrap();
        match Vocabulary::load(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn tokenize_then_detokenize_is_identity(words in prop::collection::vec("[a-e]{1,4}", 1..8)) {
                let lexicon: Vec<String> = words.iter().map(|w| format!("▁{w}")).collect();
                let mut uniq = lexicon.clone();
                uniq.sort();
                uniq.dedup();
                let v = Vocabulary::new(DEFAULT_BOS, DEFAULT_EOS, uniq).unwrap();
                let text = words.join(" ");
                let ids = v.tokenize(&text).unwrap();
                prop_assert_eq!(v.detokenize(&ids).unwrap(), text);
            }
        }
    }
}
