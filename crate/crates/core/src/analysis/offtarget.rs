use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::metrics::sentence_bleu;
use crate::error::{Error, Result};
use crate::lid::LidModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OffTargetLabel {
    OnTarget,
    ToEnglish,
    ToSource,
    Other,
}

impl OffTargetLabel {
    pub fn name(self) -> &'static str {
        match self {
            OffTargetLabel::OnTarget => "on_target",
            OffTargetLabel::ToEnglish => "to_english",
            OffTargetLabel::ToSource => "to_source",
            OffTargetLabel::Other => "other",
        }
    }

    /// Label for a detected language. `english` is the pivot language code.
    pub fn from_detected(detected: &str, target: &str, source: &str, english: &str) -> Self {
        if detected == target {
            OffTargetLabel::OnTarget
        } else if detected == english {
            OffTargetLabel::ToEnglish
        } else if detected == source {
            OffTargetLabel::ToSource
        } else {
            OffTargetLabel::Other
        }
    }
}

impl fmt::Display for OffTargetLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OffTargetLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "on_target" => Ok(OffTargetLabel::OnTarget),
            "to_english" => Ok(OffTargetLabel::ToEnglish),
            "to_source" => Ok(OffTargetLabel::ToSource),
            "other" => Ok(OffTargetLabel::Other),
            other => Err(Error::invalid(format!("unknown off-target label {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub label: OffTargetLabel,
    /// `None` when the text is empty.
    pub detected: Option<String>,
    pub empty: bool,
}

/// Classifies `text` by its predicted language. Empty text is `Other` with
/// the `empty` flag set.
pub fn classify_off_target(
    lid: &LidModel,
    text: &str,
    target: &str,
    source: &str,
    english: &str,
) -> Result<Classification> {
    for lang in [target, source] {
        if !lang.is_empty() && !lid.covers(lang) {
            return Err(Error::invalid(format!("LiD model does not cover {lang:?}")));
        }
    }
    if text.trim().is_empty() {
        return Ok(Classification {
            label: OffTargetLabel::Other,
            detected: None,
            empty: true,
        });
    }
    let detected = lid.predict(text)?.lang;
    Ok(Classification {
        label: OffTargetLabel::from_detected(&detected, target, source, english),
        detected: Some(detected),
        empty: false,
    })
}

/// Percentages of each off-target category. `total` is their sum.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct OffTargetRates {
    pub total: f64,
    pub to_english: f64,
    pub to_source: f64,
    pub other: f64,
}

pub fn off_target_rates(labels: &[OffTargetLabel]) -> Result<OffTargetRates> {
    if labels.is_empty() {
        return Err(Error::invalid("no labels to summarize"));
    }
    let pct = |l: OffTargetLabel| 100.0 * labels.iter().filter(|&&x| x == l).count() as f64 / labels.len() as f64;
    let to_english = pct(OffTargetLabel::ToEnglish);
    let to_source = pct(OffTargetLabel::ToSource);
    let other = pct(OffTargetLabel::Other);
    Ok(OffTargetRates {
        total: to_english + to_source + other,
        to_english,
        to_source,
        other,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CopySimilarity {
    /// Counts in `[0,10)`, `[10,20)`, ..., `[90,100]`.
    pub bins: [usize; 10],
    pub mean: f64,
    pub scores: Vec<f64>,
}

/// Sentence BLEU of each output against its own source.
pub fn copy_similarity_histogram<S: AsRef<str>, O: AsRef<str>>(pairs: &[(S, O)]) -> Result<CopySimilarity> {
    if pairs.is_empty() {
        return Err(Error::invalid("no pairs for copy similarity"));
    }
    let scores: Vec<f64> = pairs
        .iter()
        .enumerate()
        .map(|(i, (s, o))| {
            sentence_bleu(o.as_ref(), s.as_ref()).map_err(|e| Error::Batch {
                index: i,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    let mut bins = [0; 10];
    for &s in &scores {
        bins[((s / 10.0).floor() as usize).min(9)] += 1;
    }
    Ok(CopySimilarity {
        bins,
        mean: scores.iter().sum::<f64>() / scores.len() as f64,
        scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use OffTargetLabel::*;

    #[test]
    fn labels_follow_detected_language() {
        assert_eq!(OffTargetLabel::from_detected("de", "de", "fr", "en"), OnTarget);
        assert_eq!(OffTargetLabel::from_detected("en", "de", "fr", "en"), ToEnglish);
        assert_eq!(OffTargetLabel::from_detected("fr", "de", "fr", "en"), ToSource);
        assert_eq!(OffTargetLabel::from_detected("it", "de", "fr", "en"), Other);
        assert_eq!(OffTargetLabel::from_detected("en", "en", "fr", "en"), OnTarget);
    }

    #[test]
    fn empty_text_is_flagged_other() {
        let lid = LidModel::zeros(vec!["de".into(), "fr".into()], (1, 2), 16).unwrap();
        let c = classify_off_target(&lid, "  ", "de", "fr", "en").unwrap();
        assert_eq!(c.label, Other);
        assert!(c.empty);
        let c = classify_off_target(&lid, "abc", "de", "fr", "en").unwrap();
        assert_eq!((c.label, c.detected.as_deref()), (OnTarget, Some("de")));
        assert!(classify_off_target(&lid, "abc", "xx", "fr", "en").is_err());
    }

    #[test]
    fn rate_examples() {
        assert_eq!(off_target_rates(&[OnTarget, OnTarget]).unwrap().total, 0.0);
        let r = off_target_rates(&[ToEnglish, ToSource, OnTarget, OnTarget]).unwrap();
        assert_eq!((r.total, r.to_english, r.to_source, r.other), (50.0, 25.0, 25.0, 0.0));
        assert!(off_target_rates(&[]).is_err());
    }

    #[test]
    fn copy_similarity_examples() {
        let same = copy_similarity_histogram(&[("a b c d", "a b c d"), ("x y z w", "x y z w")]).unwrap();
        assert!((same.mean - 100.0).abs() < 1e-9);
        assert_eq!(same.bins[9], 2);
        let s = sentence_bleu("f g h i j", "a b c d e").unwrap();
        let mixed = copy_similarity_histogram(&[
            ("a b c d", "a b c d"),
            ("x y z w", "x y z w"),
            ("a b c d e", "f g h i j"),
            ("a b c d e", "f g h i j"),
        ])
        .unwrap();
        assert!((mixed.mean - (200.0 + 2.0 * s) / 4.0).abs() < 1e-12);
        assert_eq!(mixed.bins[0], 2);
        let none: [(&str, &str); 0] = [];
        assert!(copy_similarity_histogram(&none).is_err());
    }

    proptest! {
        #[test]
        fn categories_sum_to_total(labels in prop::collection::vec(prop::sample::select(vec![OnTarget, ToEnglish, ToSource, Other]), 1..200)) {
            let r = off_target_rates(&labels).unwrap();
            prop_assert_eq!(r.total, r.to_english + r.to_source + r.other);
            for x in [r.total, r.to_english, r.to_source, r.other] {
                prop_assert!((0.0..=100.0 + 1e-9).contains(&x));
            }
        }
    }
}
