//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use langbeam_core::analysis::{
    chrf2, copy_similarity_histogram, corpus_bleu, evaluate, sentence_bleu, sweep_alpha, sweep_beam, Evaluation,
    OffTargetLabel, TestSet,
};
use langbeam_core::datagen::{build_surrogate, default_letter_ranges, gen_family, gen_lid_corpus, gen_testset, ToyLanguageFamily};
use langbeam_core::decode::exhaustive_decode;
use langbeam_core::models::{rescore, Mode};
use langbeam_core::vocab::{DEFAULT_BOS, DEFAULT_EOS};
use langbeam_core::{
    beam_search, libs_decode, AutoregressiveModel, DecodeConfig, Engine, LidConfig, LidModel, ModeParams, RandomModel,
    SurrogateModel, Vocabulary,
};

const SEED: u64 = 11;
const SOURCE: &str = "l1";
const TARGET: &str = "l2";
const ENGLISH: &str = "en";

struct Report {
    failures: usize,
}

impl Report {
    fn line(&mut self, id: usize, name: &str, pass: bool, detail: String) {
        if !pass {
            self.failures += 1;
        }
        println!("{} criterion {id} ({name}): {detail}", if pass { "PASS" } else { "FAIL" });
    }
}

struct Setup {
    family: ToyLanguageFamily,
    lid: LidModel,
    model: SurrogateModel,
    testset: TestSet,
    crossover: f64,
}

fn setup() -> Setup {
    let family = gen_family(SEED, 4, 100, &default_letter_ranges()).unwrap();
    let corpus = gen_lid_corpus(&family, 300, (3, 14), SEED + 1).unwrap();
    let lid = LidModel::train(&corpus, &LidConfig::default()).unwrap();
    let (spec, model) =
        build_surrogate(&family, (SOURCE, TARGET), ModeParams::default_prior(), ModeParams::default_peak()).unwrap();
    let testset = gen_testset(&family, &[(SOURCE.into(), TARGET.into())], 500, (10, 14), SEED + 2).unwrap();
    let crossover = spec.crossover_length(Mode::English).unwrap();
    Setup {
        family,
        lid,
        model,
        testset,
        crossover,
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn run(s: &Setup, engine: Engine, config: &DecodeConfig) -> Evaluation {
    evaluate(engine, &s.model, &s.lid, &s.testset, config, ENGLISH).unwrap()
}

fn reduction(r: &mut Report, s: &Setup) {
    let config = DecodeConfig::new(TARGET);
    let (matches, took) = timed(|| {
        let base = run(s, Engine::Baseline, &config);
        let libs = run(s, Engine::Libs, &config.clone().with_alpha(0.0));
        base.results
            .iter()
            .zip(&libs.results)
            .filter(|(a, b)| a.best_text() == b.best_text())
            .count()
    });
    let n = s.testset.len();
    r.line(
        1,
        "alpha=0 reduction",
        matches == n && took < Duration::from_secs(60),
        format!("{matches}/{n} identical top-1 strings in {:.2?}", took),
    );
}

fn letter_lid() -> LidModel {
    let letters = ["a", "b", "c", "d", "e", "f"];
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut corpus = Vec::new();
    for _ in 0..100 {
        for (lang, set) in [("x", &letters[..3]), ("y", &letters[3..])] {
            let n = rng.gen_range(1..6);
            let text: Vec<&str> = (0..n).map(|_| set[rng.gen_range(0..3)]).collect();
            corpus.push((text.join(" "), lang.to_string()));
        }
    }
    LidModel::train(&corpus, &LidConfig { feature_dim: 1 << 12, ..LidConfig::default() }).unwrap()
}

fn oracle(r: &mut Report) {
    let lid = letter_lid();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let instances = 200;
    let (mut base_ok, mut libs_ok) = (0, 0);
    let (_, took) = timed(|| {
        for i in 0..instances {
            let content = rng.gen_range(1..=6usize);
            let max_len = rng.gen_range(1..=6usize);
            let lambda = if i % 2 == 0 { 1.0 } else { 0.0 };
            let words = ["a", "b", "c", "d", "e", "f"][..content].iter().map(|w| format!("▁{w}"));
            let vocab = Vocabulary::new(DEFAULT_BOS, DEFAULT_EOS, words).unwrap();
            let v = vocab.len();
            let model = RandomModel::new(vocab, rng.gen(), 3.0);
            let target = if i % 3 == 0 { "y" } else { "x" };
            let config = DecodeConfig::new(target)
                .with_beam(v.pow(max_len as u32))
                .with_window(v)
                .with_max_len(max_len)
                .with_length_penalty(lambda);
            let plain = exhaustive_decode(&model, "src", target, max_len, lambda, None).unwrap();
            let scored = exhaustive_decode(&model, "src", target, max_len, lambda, Some((&lid, 1.0))).unwrap();
            let base = beam_search(&model, "src", &config).unwrap();
            let libs = libs_decode(&model, &lid, "src", &config.clone().with_alpha(1.0)).unwrap();
            base_ok += usize::from(base.candidates[0].tokens == plain[0].tokens);
            libs_ok += usize::from(libs.candidates[0].tokens == scored[0].tokens);
        }
    });
    r.line(
        2,
        "oracle equivalence",
        base_ok == instances && libs_ok == instances && took < Duration::from_secs(120),
        format!("beam search {base_ok}/{instances}, libs {libs_ok}/{instances} match exhaustive top-1 in {:.2?}", took),
    );
}

fn curse(r: &mut Report, s: &Setup) {
    let config = DecodeConfig::new(TARGET);
    let base = sweep_beam(Engine::Baseline, &s.model, &s.lid, &s.testset, &[5, 10, 20], &config, ENGLISH).unwrap();
    let off: Vec<f64> = base.rows.iter().map(|row| row.off_target.total).collect();
    r.line(
        3,
        "beam curse",
        (7.5..8.5).contains(&s.crossover) && off[2] - off[0] >= 10.0,
        format!(
            "crossover length {:.3}; baseline off-target at b=5/10/20: {:.1}% / {:.1}% / {:.1}%",
            s.crossover, off[0], off[1], off[2]
        ),
    );

    let libs = sweep_beam(Engine::Libs, &s.model, &s.lid, &s.testset, &[5, 10, 20], &config, ENGLISH).unwrap();
    let loff: Vec<f64> = libs.rows.iter().map(|row| row.off_target.total).collect();
    r.line(
        4,
        "curse breaking",
        loff.iter().all(|&x| x <= 5.0) && loff[2] <= off[0],
        format!(
            "libs (alpha=1) off-target at b=5/10/20: {:.1}% / {:.1}% / {:.1}%; baseline b=5: {:.1}%",
            loff[0], loff[1], loff[2], off[0]
        ),
    );
}

fn alpha_trend(r: &mut Report, s: &Setup) {
    let alphas = [0.0, 0.25, 0.5, 1.0, 2.0, 5.0];
    let config = DecodeConfig::new(TARGET).with_beam(20);
    let report = sweep_alpha(&s.model, &s.lid, &s.testset, &alphas, &config, ENGLISH).unwrap();
    let off: Vec<f64> = report.rows.iter().map(|row| row.off_target.total).collect();
    let shown: Vec<String> = alphas.iter().zip(&off).map(|(a, o)| format!("{a}:{o:.1}%")).collect();
    r.line(
        5,
        "alpha monotonicity",
        off.windows(2).all(|w| w[1] <= w[0]),
        format!("off-target by alpha at b=20: {}", shown.join(" ")),
    );
}

fn lid_quality(r: &mut Report, s: &Setup) {
    let ((acc, langs), took) = timed(|| {
        let train = gen_lid_corpus(&s.family, 300, (3, 14), SEED + 4).unwrap();
        let held_out = gen_lid_corpus(&s.family, 500, (3, 14), SEED + 5).unwrap();
        let lid = LidModel::train(&train, &LidConfig::default()).unwrap();
        (lid.accuracy(&held_out).unwrap(), lid.languages().len())
    });
    r.line(
        6,
        "LiD quality",
        langs == 4 && acc >= 0.99 && took < Duration::from_secs(60),
        format!("{langs}-language held-out accuracy {:.2}% in {:.2?}", 100.0 * acc, took),
    );
}

fn metrics(r: &mut Report, s: &Setup) {
    let texts = ["the cat sat on the mat today", "Hello, world! It's 3.5 o'clock.", &s.testset.items[0].reference];
    let identical = texts.iter().all(|t| {
        [sentence_bleu(t, t).unwrap(), corpus_bleu(&[t], &[t]).unwrap(), chrf2(t, t).unwrap()]
            .iter()
            .all(|x| (x - 100.0).abs() < 1e-9)
    });
    let by_hand = 100.0 * (6.0 / 7.0 * 4.0 / 6.0 * 2.0 / 5.0 * 1.0 / 4.0f64).powf(0.25);
    let computed = corpus_bleu(&["the cat sat on the mat today"], &["the cat sat on a mat today"]).unwrap();

    let (_, copier) =
        build_surrogate(&s.family, (SOURCE, TARGET), ModeParams::new(0.6, 0.001, 0.05), ModeParams::default_peak())
            .unwrap();
    let subset = TestSet {
        items: s.testset.items[..100].to_vec(),
    };
    let eval = evaluate(Engine::Baseline, &copier, &s.lid, &subset, &DecodeConfig::new(TARGET).with_beam(20), ENGLISH).unwrap();
    let pairs: Vec<(&str, &str)> = eval
        .labels
        .iter()
        .zip(&eval.results)
        .zip(&subset.items)
        .filter(|((l, _), _)| l.label == OffTargetLabel::ToSource)
        .map(|((_, res), item)| (item.source.as_str(), res.best_text()))
        .collect();
    let copy = copy_similarity_histogram(&pairs).map(|c| c.mean).unwrap_or(0.0);
    r.line(
        7,
        "metric sanity",
        identical && (computed - by_hand).abs() <= 0.1 && copy >= 90.0,
        format!(
            "identity scores 100: {identical}; corpus BLEU {computed:.4} vs hand {by_hand:.4}; copy similarity mean {copy:.1} over {} copy outputs",
            pairs.len()
        ),
    );
}

fn integrity_and_budget(r: &mut Report, s: &Setup) {
    let config = DecodeConfig::new(TARGET);
    let libs = run(s, Engine::Libs, &config);
    let wide = run(s, Engine::Libs, &config.clone().with_beam(20));
    let base = run(s, Engine::Baseline, &config.clone().with_beam(20));
    let (mut total, mut ok) = (0, 0);
    for eval in [&libs, &wide, &base] {
        for res in &eval.results {
            for c in &res.candidates {
                total += 1;
                let again = rescore(&s.model, &res.source, &res.target_lang, &c.tokens).unwrap();
                ok += usize::from((again - c.nmt_score).abs() <= 1e-9);
            }
        }
    }
    r.line(
        8,
        "score integrity",
        ok == total && total > 0,
        format!("{ok}/{total} candidates rescore to their stored model score within 1e-9"),
    );

    let budget = config.beam_size * config.window;
    let worst = libs
        .results
        .iter()
        .flat_map(|res| res.stats.lid_calls_per_step.iter().copied())
        .max()
        .unwrap_or(0);
    let consistent = libs.results.iter().all(|res| res.stats.lid_calls_per_step.len() == res.stats.steps);
    r.line(
        9,
        "LiD call budget",
        worst <= budget && consistent,
        format!("max LiD calls in one step {worst} (budget b*w = {budget})"),
    );
}

fn performance(r: &mut Report, s: &Setup) {
    let config = DecodeConfig::new(TARGET);
    run(s, Engine::Baseline, &config);
    run(s, Engine::Libs, &config);
    let best = |engine| {
        (0..3)
            .map(|_| timed(|| run(s, engine, &config)).1)
            .min()
            .unwrap()
    };
    let base = best(Engine::Baseline);
    let libs = best(Engine::Libs);
    let ratio = libs.as_secs_f64() / base.as_secs_f64();
    r.line(
        10,
        "performance envelope",
        ratio <= 10.0,
        format!("500 sentences at b=5: baseline {:.2?}, libs {:.2?}, ratio {ratio:.2}", base, libs),
    );
}

fn main() {
    let s = setup();
    assert!(s.model.vocab().len() > 2);
    let mut r = Report { failures: 0 };
    reduction(&mut r, &s);
    oracle(&mut r);
    curse(&mut r, &s);
    alpha_trend(&mut r, &s);
    lid_quality(&mut r, &s);
    metrics(&mut r, &s);
    integrity_and_budget(&mut r, &s);
    performance(&mut r, &s);
    if r.failures > 0 {
        eprintln!("{} acceptance criteria failed", r.failures);
        std::process::exit(1);
    }
}
