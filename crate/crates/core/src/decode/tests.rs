use std::sync::OnceLock;

use proptest::prelude::*;

use super::*;
use crate::lid::LidConfig;
use crate::models::{rescore, RandomModel, TableModel, TableState};
use crate::vocab::{DEFAULT_BOS, DEFAULT_EOS};

const LETTERS: [&str; 6] = ["a", "b", "c", "d", "e", "f"];

fn letter_vocab(content: usize) -> Vocabulary {
    Vocabulary::new(DEFAULT_BOS, DEFAULT_EOS, LETTERS[..content].iter().map(|l| format!("▁{l}"))).unwrap()
}

/// Language "x" writes a-c, language "y" writes d-f.
fn letter_lid() -> &'static LidModel {
    static LID: OnceLock<LidModel> = OnceLock::new();
    LID.get_or_init(|| {
        let mut corpus = Vec::new();
        for i in 0..60usize {
            let pick = |set: &[&str]| -> String {
                (0..1 + i % 4).map(|j| set[(i * 7 + j * 3) % 3]).collect::<Vec<_>>().join(" ")
            };
            corpus.push((pick(&LETTERS[..3]), "x".to_string()));
            corpus.push((pick(&LETTERS[3..]), "y".to_string()));
        }
        let config = LidConfig {
            feature_dim: 1 << 12,
            ..LidConfig::default()
        };
        LidModel::train(&corpus, &config).unwrap()
    })
}

/// `(prefix, [(token, probability)])` rows.
type Rows<'a> = [(&'a [TokenId], &'a [(&'a str, f64)])];

fn table(states: &Rows) -> TableModel {
    let vocab = Vocabulary::new(
        DEFAULT_BOS,
        DEFAULT_EOS,
        ["▁a", "▁b", "▁c", "▁q", "▁r", "▁s"].map(String::from),
    )
    .unwrap();
    let states = states
        .iter()
        .map(|(prefix, dist)| TableState {
            source: "src".into(),
            lang: "x".into(),
            prefix: prefix.to_vec(),
            dist: dist.iter().map(|(t, p)| (t.to_string(), *p)).collect(),
        })
        .collect();
    TableModel::new(vocab, states).unwrap()
}

#[test]
fn exhaustive_counts_all_complete_sequences() {
    let m = RandomModel::new(letter_vocab(2), 1, 2.0);
    let all = exhaustive_decode(&m, "s", "x", 2, 1.0, None).unwrap();
    assert_eq!(all.len(), 7);
    let mut texts: Vec<&str> = all.iter().map(|c| c.text.as_str()).collect();
    texts.sort();
    assert_eq!(texts, ["", "a", "a a", "a b", "b", "b a", "b b"]);
    assert!(all.iter().all(|c| c.finished && c.tokens.last() == Some(&1)));
}

#[test]
fn exhaustive_ties_break_lexicographically() {
    let m = table(&[]);
    let all = exhaustive_decode(&m, "src", "x", 2, 0.0, None).unwrap();
    let len2: Vec<&Vec<TokenId>> = all.iter().filter(|c| c.tokens.len() == 3).map(|c| &c.tokens).collect();
    assert_eq!(len2.len(), 36);
    assert!(len2.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(all[0].tokens, vec![1]);
}

#[test]
fn exhaustive_guard_refuses_large_spaces() {
    let m = RandomModel::new(letter_vocab(6), 1, 2.0);
    match exhaustive_decode(&m, "s", "x", 8, 1.0, None) {
        Err(Error::SearchSpace { estimate, .. }) => assert_eq!(estimate, 8f64.powi(8)),
        other => panic!("expected search-space error, got {other:?}"),
    }
}

#[test]
fn exhaustive_alpha_zero_matches_plain_ranking() {
    let m = RandomModel::new(letter_vocab(6), 4, 3.0);
    let plain = exhaustive_decode(&m, "s", "x", 3, 1.0, None).unwrap();
    let zero = exhaustive_decode(&m, "s", "x", 3, 1.0, Some((letter_lid(), 0.0))).unwrap();
    let a: Vec<_> = plain.iter().map(|c| &c.tokens).collect();
    let b: Vec<_> = zero.iter().map(|c| &c.tokens).collect();
    assert_eq!(a, b);
}

#[test]
fn beam_growth_can_lower_the_best_raw_score() {
    let m = table(&[
        (&[], &[("▁a", 0.5), ("▁b", 0.45), ("▁c", 0.05)]),
        (&[2], &[("▁q", 0.4), ("▁r", 0.3), ("▁s", 0.3)]),
        (&[3], &[("▁q", 0.5), ("▁r", 0.5)]),
        (&[2, 5], &[("</s>", 1.0)]),
        (&[3, 5], &[("</s>", 0.1), ("▁q", 0.9)]),
        (&[3, 6], &[("</s>", 0.1), ("▁q", 0.9)]),
    ]);
    let config = DecodeConfig::new("x").with_length_penalty(0.0).with_max_len(3);
    let one = beam_search(&m, "src", &config.clone().with_beam(1)).unwrap();
    let two = beam_search(&m, "src", &config.with_beam(2)).unwrap();
    assert_eq!(one.best_text(), "a q");
    assert!((one.best().unwrap().nmt_score - 0.2f64.ln()).abs() < 1e-12);
    assert!(two.best().unwrap().nmt_score < one.best().unwrap().nmt_score);
}

#[test]
fn stuck_hypotheses_are_flagged_unfinished() {
    let m = table(&[
        (&[], &[("▁a", 1.0)]),
        (&[2], &[("▁a", 1.0)]),
        (&[2, 2], &[("▁a", 1.0)]),
    ]);
    let config = DecodeConfig::new("x").with_beam(2).with_max_len(2);
    let out = beam_search(&m, "src", &config).unwrap();
    assert_eq!(out.candidates.len(), 1);
    let c = &out.candidates[0];
    assert!(!c.finished);
    assert_eq!(c.text, "a a");
    assert_eq!(c.tokens, vec![2, 2]);
}

#[test]
fn libs_requires_covered_target() {
    let m = RandomModel::new(letter_vocab(3), 1, 2.0);
    let config = DecodeConfig::new("zz");
    assert!(matches!(libs_decode(&m, letter_lid(), "s", &config), Err(Error::InvalidInput(_))));
    assert!(decode(Engine::Libs, &m, None, "s", &DecodeConfig::new("x")).is_err());
}

#[test]
fn empty_first_step_text_gets_a_neutral_lid_term() {
    let m = table(&[(&[], &[("</s>", 0.9), ("▁a", 0.1)])]);
    let config = DecodeConfig::new("x").with_beam(1).with_max_len(1);
    let out = libs_decode(&m, letter_lid(), "src", &config).unwrap();
    let c = out.best().unwrap();
    assert_eq!(c.text, "");
    assert_eq!(c.lid_logprob, None);
    assert_eq!(c.final_score, 0.9f64.ln());
}

#[test]
fn trace_shape_and_round_trip() {
    let m = RandomModel::new(letter_vocab(6), 9, 3.0);
    let config = DecodeConfig::new("x").with_beam(3).with_max_len(4);
    let trace = trace_decode(Engine::Libs, &m, Some(letter_lid()), "s", &config).unwrap();
    assert!(!trace.steps.is_empty());
    for (i, st) in trace.steps.iter().enumerate() {
        assert_eq!(st.step, i + 1);
        assert!(!st.entries.is_empty() && st.entries.len() <= 3);
        for e in &st.entries {
            let tokens = m.vocab().tokenize(&e.text).unwrap();
            assert_eq!(tokens.len(), st.step);
            let again = rescore(&m, "s", "x", &tokens).unwrap();
            assert!((again - e.logprob).abs() < 1e-9);
        }
    }
    let tsv = trace.to_tsv();
    assert_eq!(BeamTrace::from_tsv(&tsv, Path::new("t.tsv")).unwrap(), trace);
    let table = render_side_by_side(&[("b=3", &trace), ("b=3 again", &trace)]);
    assert!(table.contains("LogProb"));
}

#[test]
fn trace_tsv_rejects_bad_rows() {
    let p = Path::new("t.tsv");
    assert!(BeamTrace::from_tsv("nope\n", p).is_err());
    let bad = format!("{TRACE_HEADER}\n1\t1\ta\tx\n");
    match BeamTrace::from_tsv(&bad, p) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
        other => panic!("{other:?}"),
    }
}

#[test]
fn result_json_has_documented_keys() {
    let m = RandomModel::new(letter_vocab(3), 2, 2.0);
    let out = libs_decode(&m, letter_lid(), "s", &DecodeConfig::new("x").with_max_len(3)).unwrap();
    let v: serde_json::Value = serde_json::to_value(&out).unwrap();
    for key in ["source", "target_lang", "candidates", "stats"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    let c = &v["candidates"][0];
    for key in ["text", "final_score", "nmt_score", "lid_logprob", "finished"] {
        assert!(c.get(key).is_some(), "{key}");
    }
    assert!(v["stats"].get("steps").is_some() && v["stats"].get("lid_calls").is_some());
    let back: DecodeResult = serde_json::from_value(v).unwrap();
    assert_eq!(back, out);
}

use std::path::Path;
use trace::TRACE_HEADER;

fn instance() -> impl Strategy<Value = (usize, usize, u64)> {
    (1usize..=6, 1usize..=6, any::<u64>()).prop_filter("search space", |(c, l, _)| ((c + 2) as f64).powi(*l as i32) <= 4e4)
}

fn integrity(m: &RandomModel, out: &DecodeResult) -> std::result::Result<(), TestCaseError> {
    for c in &out.candidates {
        let again = rescore(m, "s", &out.target_lang, &c.tokens).unwrap();
        prop_assert!((again - c.nmt_score).abs() <= 1e-9, "{} vs {}", again, c.nmt_score);
        prop_assert_eq!(m.vocab().detokenize(&c.tokens).unwrap(), c.text.clone());
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn beam_one_is_greedy((content, max_len, seed) in instance()) {
        let m = RandomModel::new(letter_vocab(content), seed, 3.0);
        let config = DecodeConfig::new("x").with_beam(1).with_max_len(max_len);
        let b = beam_search(&m, "s", &config).unwrap();
        let g = greedy(&m, "s", &config).unwrap();
        prop_assert_eq!(&b.best().unwrap().tokens, &g.best().unwrap().tokens);
    }

    #[test]
    fn saturating_beams_match_exhaustive((content, max_len, seed) in instance(), lambda in prop::sample::select(vec![0.0, 1.0])) {
        let m = RandomModel::new(letter_vocab(content), seed, 3.0);
        let v = m.vocab().len();
        let b = v.pow(max_len as u32);
        let config = DecodeConfig::new("x").with_beam(b).with_window(v).with_max_len(max_len).with_length_penalty(lambda);
        let plain = exhaustive_decode(&m, "s", "x", max_len, lambda, None).unwrap();
        let base = beam_search(&m, "s", &config).unwrap();
        prop_assert_eq!(&base.best().unwrap().tokens, &plain[0].tokens);
        prop_assert_eq!(base.candidates.len(), plain.len());

        let with_lid = exhaustive_decode(&m, "s", "x", max_len, lambda, Some((letter_lid(), 1.0))).unwrap();
        let libs = libs_decode(&m, letter_lid(), "s", &config).unwrap();
        prop_assert_eq!(&libs.best().unwrap().tokens, &with_lid[0].tokens);
        prop_assert_eq!(libs.best().unwrap().final_score, with_lid[0].final_score);
    }

    #[test]
    fn scores_rescore_and_budget_holds((content, max_len, seed) in instance(), beam in 1usize..8, window in 1usize..4, alpha in 0.0f64..3.0) {
        let m = RandomModel::new(letter_vocab(content), seed, 3.0);
        let config = DecodeConfig::new("y").with_beam(beam).with_window(window).with_alpha(alpha).with_max_len(max_len);
        let base = beam_search(&m, "s", &config).unwrap();
        let libs = libs_decode(&m, letter_lid(), "s", &config).unwrap();
        integrity(&m, &base)?;
        integrity(&m, &libs)?;
        prop_assert!(base.candidates.len() <= beam && libs.candidates.len() <= beam);
        prop_assert_eq!(libs.stats.lid_calls_per_step.len(), libs.stats.steps);
        prop_assert!(libs.stats.lid_calls_per_step.iter().all(|&c| c <= beam * window));
        for out in [&base, &libs] {
            prop_assert!(out.candidates.windows(2).all(|w| final_order(&w[0], &w[1]) != Ordering::Greater));
        }
        for c in &libs.candidates {
            let lp = c.lid_logprob.unwrap_or(0.0);
            let expected = normalized_score(c.nmt_score, c.tokens.len(), 1.0).unwrap() + alpha * lp;
            prop_assert_eq!(c.final_score, expected);
        }
    }

    #[test]
    fn decoding_is_deterministic((content, max_len, seed) in instance(), beam in 1usize..6) {
        let m = RandomModel::new(letter_vocab(content), seed, 3.0);
        let config = DecodeConfig::new("x").with_beam(beam).with_max_len(max_len);
        prop_assert_eq!(libs_decode(&m, letter_lid(), "s", &config).unwrap(), libs_decode(&m, letter_lid(), "s", &config).unwrap());
        prop_assert_eq!(beam_search(&m, "s", &config).unwrap(), beam_search(&m, "s", &config).unwrap());
    }
}
