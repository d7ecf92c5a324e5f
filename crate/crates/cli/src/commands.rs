use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use langbeam_core::analysis::{
    chrf2, classify_off_target, copy_similarity_histogram, corpus_bleu, evaluate, off_target_rates, sweep_alpha,
    sweep_beam, CopySimilarity, OffTargetLabel, OffTargetRates, SweepAxis, SweepReport, TestSet,
};
use langbeam_core::datagen::{gen_family, gen_lid_corpus, gen_testset, surrogate_spec, ToyLanguageFamily, PIVOT_CODE};
use langbeam_core::decode::{render_side_by_side, trace_decode, DecodeResult};
use langbeam_core::hash::derive_seed;
use langbeam_core::lid::parse_corpus_tsv;
use langbeam_core::{
    AutoregressiveModel, DecodeConfig, Engine, LidModel, SurrogateModel, SurrogateSpec, TableModel,
};

use crate::config::{DecodeSection, RunConfig};
use crate::{CliError, Common, DecodeFlags};

type Result<T> = std::result::Result<T, CliError>;

fn load_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(d) = &common.data_dir {
        cfg.data.dir = d.clone();
    }
    if let Some(o) = &common.out {
        cfg.output.dir = o.clone();
    }
    if let Some(w) = common.workers {
        if w == 0 {
            return Err(CliError::Usage("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot configure {w} workers: {e}")))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn apply_flags(cfg: &mut RunConfig, flags: &DecodeFlags) {
    let d = &mut cfg.decode;
    if let Some(b) = flags.beam {
        d.beam_size = b;
    }
    if let Some(w) = flags.window {
        d.window = w;
    }
    if let Some(a) = flags.alpha {
        d.alpha = a;
    }
    if let Some(l) = flags.length_penalty {
        d.length_penalty = l;
    }
    if flags.max_len.is_some() {
        d.max_len = flags.max_len;
    }
    if flags.target_lang.is_some() {
        d.target_lang = flags.target_lang.clone();
    }
    if flags.source_lang.is_some() {
        d.source_lang = flags.source_lang.clone();
    }
}

fn require(path: &Path, hint: &str) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{} does not exist ({hint})", path.display())))
    }
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(langbeam_core::Error::from)?;
    s.push('\n');
    Ok(s)
}

fn corpus_tsv(corpus: &[(String, String)]) -> String {
    corpus.iter().fold(String::new(), |mut s, (text, lang)| {
        let _ = writeln!(s, "{lang}\t{text}");
        s
    })
}

pub fn gen_data(common: &Common) -> Result<()> {
    let cfg = load_config(common)?;
    let d = &cfg.data;
    let family = gen_family(cfg.seed, d.num_langs, d.lexicon_size, &d.letter_ranges)?;
    for (src, tgt) in &d.directions {
        for lang in [src, tgt] {
            if !family.languages.contains(lang) {
                return Err(CliError::Usage(format!(
                    "direction {src}->{tgt}: {lang:?} is not one of {:?}",
                    family.languages
                )));
            }
        }
    }
    let train = gen_lid_corpus(&family, d.lid_sentences, d.lid_len_range, derive_seed(cfg.seed, "lid-train", 0))?;
    let heldout = gen_lid_corpus(
        &family,
        d.heldout_sentences,
        d.lid_len_range,
        derive_seed(cfg.seed, "lid-heldout", 0),
    )?;
    let testset = gen_testset(&family, &d.directions, d.test_sentences, d.len_range, cfg.seed)?;
    let langs: Vec<&str> = family.languages.iter().map(String::as_str).collect();
    let spec = surrogate_spec(&family, &langs, cfg.model.pi, cfg.model.rho)?;

    fs::create_dir_all(&d.dir).map_err(|source| CliError::Io {
        path: d.dir.clone(),
        source,
    })?;
    family.save(cfg.family_path())?;
    write(&d.dir.join("lid_train.tsv"), &corpus_tsv(&train))?;
    write(&d.dir.join("lid_heldout.tsv"), &corpus_tsv(&heldout))?;
    testset.save(cfg.testset_dir())?;
    spec.save(cfg.surrogate_path())?;
    println!(
        "wrote {} languages, {} LiD training lines, {} held-out lines and {} test sentences to {}",
        family.languages.len(),
        train.len(),
        heldout.len(),
        testset.len(),
        d.dir.display()
    );
    Ok(())
}

#[derive(Debug, Serialize)]
struct LidReport {
    languages: Vec<String>,
    train_lines: usize,
    heldout_lines: usize,
    heldout_accuracy: Option<f64>,
    model: PathBuf,
}

pub fn train_lid(common: &Common, corpus: Option<PathBuf>, heldout: Option<PathBuf>) -> Result<()> {
    let cfg = load_config(common)?;
    let corpus_path = corpus.unwrap_or_else(|| cfg.data.dir.join("lid_train.tsv"));
    require(&corpus_path, "run gen-data or pass --corpus")?;
    let heldout_path = heldout.or_else(|| Some(cfg.data.dir.join("lid_heldout.tsv")).filter(|p| p.exists()));
    if let Some(p) = &heldout_path {
        require(p, "pass an existing --heldout file")?;
    }
    let train = parse_corpus_tsv(&read(&corpus_path)?, &corpus_path)?;
    let model = LidModel::train(&train, &cfg.lid_config())?;
    let (heldout_lines, heldout_accuracy) = match &heldout_path {
        Some(p) => {
            let data = parse_corpus_tsv(&read(p)?, p)?;
            let acc = model.accuracy(&data)?;
            (data.len(), Some(acc))
        }
        None => (0, None),
    };
    let out = cfg.lid_path();
    if let Some(dir) = out.parent() {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    model.save(&out)?;
    let report = LidReport {
        languages: model.languages().to_vec(),
        train_lines: train.len(),
        heldout_lines,
        heldout_accuracy,
        model: out,
    };
    let json = to_json(&report)?;
    write(&cfg.output.dir.join("lid_report.json"), &json)?;
    print!("{json}");
    Ok(())
}

/// Everything a decoding subcommand needs, loaded after validating paths.
struct Setup {
    cfg: RunConfig,
    model: Box<dyn AutoregressiveModel>,
    lid: LidModel,
    testset: TestSet,
    english: String,
}

fn setup(common: &Common, flags: &DecodeFlags) -> Result<Setup> {
    let mut cfg = load_config(common)?;
    apply_flags(&mut cfg, flags);
    let model_path = cfg.model.table.clone().unwrap_or_else(|| cfg.surrogate_path());
    let lid_path = cfg.lid_path();
    let testset_dir = cfg.testset_dir();
    require(&model_path, "run gen-data or set model.surrogate / model.table")?;
    require(&lid_path, "run train-lid or set lid.path")?;
    require(&testset_dir, "run gen-data first")?;

    let model: Box<dyn AutoregressiveModel> = match &cfg.model.table {
        Some(p) => Box::new(TableModel::load(p)?),
        None => Box::new(SurrogateModel::new(SurrogateSpec::load(&model_path)?)?),
    };
    let lid = LidModel::load(&lid_path)?;
    let mut testset = TestSet::load(&testset_dir)?;
    for item in &mut testset.items {
        if let Some(t) = &cfg.decode.target_lang {
            item.target_lang = t.clone();
        }
        if let Some(s) = &cfg.decode.source_lang {
            item.source_lang = s.clone();
        }
    }
    let family_path = cfg.family_path();
    let english = if family_path.exists() {
        ToyLanguageFamily::load(&family_path)?.pivot
    } else {
        PIVOT_CODE.to_string()
    };
    let probe = template(&cfg);
    probe.validate()?;
    Ok(Setup {
        cfg,
        model,
        lid,
        testset,
        english,
    })
}

/// Decoding settings shared by every item; languages are filled per item.
fn template(cfg: &RunConfig) -> DecodeConfig {
    let target = cfg.decode.target_lang.clone().unwrap_or_else(|| "-".into());
    cfg.decode.to_config(&target)
}

#[derive(Debug, Serialize, Deserialize)]
struct DecodeRecord {
    index: usize,
    source_lang: String,
    target_lang: String,
    source: String,
    output: String,
    label: OffTargetLabel,
    detected: Option<String>,
    result: DecodeResult,
}

#[derive(Debug, Serialize)]
struct DecodeSummary {
    engine: Engine,
    decode: DecodeSection,
    sentences: usize,
    bleu: f64,
    off_target: OffTargetRates,
    lid_calls: usize,
}

pub fn decode(common: &Common, flags: &DecodeFlags, engine: Engine) -> Result<()> {
    let s = setup(common, flags)?;
    let config = template(&s.cfg);
    let eval = evaluate(engine, &*s.model, &s.lid, &s.testset, &config, &s.english)?;
    let mut jsonl = String::new();
    for (index, ((item, result), label)) in s.testset.items.iter().zip(&eval.results).zip(&eval.labels).enumerate() {
        let record = DecodeRecord {
            index,
            source_lang: item.source_lang.clone(),
            target_lang: item.target_lang.clone(),
            source: item.source.clone(),
            output: result.best_text().to_string(),
            label: label.label,
            detected: label.detected.clone(),
            result: result.clone(),
        };
        jsonl.push_str(&serde_json::to_string(&record).map_err(langbeam_core::Error::from)?);
        jsonl.push('\n');
    }
    let summary = DecodeSummary {
        engine,
        decode: s.cfg.decode.clone(),
        sentences: eval.results.len(),
        bleu: eval.bleu,
        off_target: eval.rates,
        lid_calls: eval.results.iter().map(|r| r.stats.lid_calls).sum(),
    };
    let out = &s.cfg.output.dir;
    write(&out.join(format!("decode_{engine}.jsonl")), &jsonl)?;
    let json = to_json(&summary)?;
    write(&out.join(format!("summary_{engine}.json")), &json)?;
    print!("{json}");
    Ok(())
}

pub fn sweep(common: &Common, flags: &DecodeFlags, axis: SweepAxis, values: &[f64], engine: Engine) -> Result<()> {
    let s = setup(common, flags)?;
    let config = template(&s.cfg);
    let report: SweepReport = match axis {
        SweepAxis::Beam => {
            let sizes = values
                .iter()
                .map(|&v| {
                    if v >= 1.0 && v.fract() == 0.0 {
                        Ok(v as usize)
                    } else {
                        Err(CliError::Usage(format!("beam size {v} is not a positive integer")))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            sweep_beam(engine, &*s.model, &s.lid, &s.testset, &sizes, &config, &s.english)?
        }
        SweepAxis::Alpha => sweep_alpha(&*s.model, &s.lid, &s.testset, values, &config, &s.english)?,
    };
    let stem = format!("sweep_{axis}_{}", report.engine);
    let out = &s.cfg.output.dir;
    let tsv = report.to_tsv();
    if s.cfg.wants("tsv") {
        write(&out.join(format!("{stem}.tsv")), &tsv)?;
    }
    if s.cfg.wants("json") {
        write(&out.join(format!("{stem}.json")), &to_json(&report)?)?;
    }
    print!("{tsv}");
    Ok(())
}

/// Only `output` is required, so outputs from other systems can be analyzed.
#[derive(Debug, Deserialize)]
struct OutputLine {
    output: String,
}

#[derive(Debug, Serialize)]
struct Analysis {
    sentences: usize,
    bleu: f64,
    chrf2: f64,
    off_target: OffTargetRates,
    empty_outputs: usize,
    /// Output-vs-source sentence BLEU over every sentence.
    copy_similarity: CopySimilarity,
    /// The same restricted to outputs labeled as copies of the source.
    copy_similarity_to_source: Option<CopySimilarity>,
}

pub fn analyze(common: &Common, decoded: &Path) -> Result<()> {
    let cfg = load_config(common)?;
    require(decoded, "run decode first or pass an existing --decoded file")?;
    require(&cfg.testset_dir(), "run gen-data first")?;
    require(&cfg.lid_path(), "run train-lid or set lid.path")?;
    let testset = TestSet::load(cfg.testset_dir())?;
    let lid = LidModel::load(cfg.lid_path())?;
    let english = match cfg.family_path() {
        p if p.exists() => ToyLanguageFamily::load(&p)?.pivot,
        _ => PIVOT_CODE.to_string(),
    };
    let text = read(decoded)?;
    let outputs = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str::<OutputLine>(l).map(|o| o.output).map_err(|e| {
                CliError::Core(langbeam_core::Error::Parse {
                    path: decoded.to_path_buf(),
                    line: i + 1,
                    message: e.to_string(),
                })
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if outputs.len() != testset.len() {
        return Err(CliError::Usage(format!(
            "{} has {} outputs but the test set has {} sentences",
            decoded.display(),
            outputs.len(),
            testset.len()
        )));
    }
    let refs: Vec<&str> = testset.items.iter().map(|i| i.reference.as_str()).collect();
    let bleu = corpus_bleu(&outputs, &refs)?;
    let chrf = outputs
        .iter()
        .zip(&refs)
        .map(|(o, r)| chrf2(o, r))
        .sum::<langbeam_core::Result<f64>>()?
        / outputs.len() as f64;
    let labels = testset
        .items
        .iter()
        .zip(&outputs)
        .map(|(item, o)| classify_off_target(&lid, o, &item.target_lang, &item.source_lang, &english))
        .collect::<langbeam_core::Result<Vec<_>>>()?;
    let rates = off_target_rates(&labels.iter().map(|c| c.label).collect::<Vec<_>>())?;
    let pairs: Vec<(&str, &str)> = testset.items.iter().map(|i| i.source.as_str()).zip(outputs.iter().map(String::as_str)).collect();
    let copies: Vec<(&str, &str)> = pairs
        .iter()
        .zip(&labels)
        .filter(|(_, c)| c.label == OffTargetLabel::ToSource)
        .map(|(p, _)| *p)
        .collect();
    let analysis = Analysis {
        sentences: outputs.len(),
        bleu,
        chrf2: chrf,
        off_target: rates,
        empty_outputs: labels.iter().filter(|c| c.empty).count(),
        copy_similarity: copy_similarity_histogram(&pairs)?,
        copy_similarity_to_source: if copies.is_empty() {
            None
        } else {
            Some(copy_similarity_histogram(&copies)?)
        },
    };
    let json = to_json(&analysis)?;
    write(&cfg.output.dir.join("analysis.json"), &json)?;
    println!(
        "sentences {}  BLEU {:.2}  chrF2 {:.2}  off-target {:.1}% (english {:.1}%, source {:.1}%, other {:.1}%)  copy-sim mean {:.1}",
        analysis.sentences,
        bleu,
        chrf,
        rates.total,
        rates.to_english,
        rates.to_source,
        rates.other,
        analysis.copy_similarity.mean
    );
    Ok(())
}

pub fn trace(common: &Common, flags: &DecodeFlags, index: usize, engine: Engine, sizes: &[usize]) -> Result<()> {
    let s = setup(common, flags)?;
    let item = s.testset.items.get(index).ok_or_else(|| {
        CliError::Usage(format!("--index {index} is out of range for a test set of {} sentences", s.testset.len()))
    })?;
    if sizes.is_empty() {
        return Err(CliError::Usage("--sizes must list at least one beam size".into()));
    }
    let mut config = template(&s.cfg);
    config.target_lang = item.target_lang.clone();
    config.source_lang = item.source_lang.clone();
    let mut traces = Vec::with_capacity(sizes.len());
    for &b in sizes {
        let cfg = config.clone().with_beam(b);
        let t = trace_decode(engine, &*s.model, Some(&s.lid), &item.source, &cfg)?;
        write(&s.cfg.output.dir.join(format!("trace_{engine}_{index}_b{b}.tsv")), &t.to_tsv())?;
        traces.push((format!("{engine} b={b}"), t));
    }
    let views: Vec<(&str, &_)> = traces.iter().map(|(n, t)| (n.as_str(), t)).collect();
    let mut text = format!("source: {}\nreference: {}\n\n", item.source, item.reference);
    text.push_str(&render_side_by_side(&views));
    write(&s.cfg.output.dir.join(format!("trace_{engine}_{index}.txt")), &text)?;
    print!("{text}");
    Ok(())
}
