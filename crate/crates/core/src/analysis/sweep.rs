use std::fmt;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::corpus_bleu;
use super::offtarget::{classify_off_target, off_target_rates, Classification, OffTargetRates};
use super::testset::TestSet;
use crate::config::DecodeConfig;
use crate::decode::{decode, DecodeResult, Engine};
use crate::error::{Error, Result};
use crate::lid::LidModel;
use crate::models::AutoregressiveModel;

/// Decoded outputs of a test set with their corpus-level summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub results: Vec<DecodeResult>,
    pub labels: Vec<Classification>,
    pub bleu: f64,
    pub rates: OffTargetRates,
}

/// Decodes every sentence (in parallel) with `config`, using each item's own
/// language pair, then scores the top-1 outputs. `lid` classifies outputs and
/// drives the libs engine; `english` is the pivot language code.
pub fn evaluate<M: AutoregressiveModel + ?Sized>(
    engine: Engine,
    model: &M,
    lid: &LidModel,
    testset: &TestSet,
    config: &DecodeConfig,
    english: &str,
) -> Result<Evaluation> {
    if testset.is_empty() {
        return Err(Error::invalid("test set is empty"));
    }
    let outcomes: Vec<Result<(DecodeResult, Classification)>> = testset
        .items
        .par_iter()
        .map(|item| {
            let mut cfg = config.clone();
            cfg.target_lang = item.target_lang.clone();
            cfg.source_lang = item.source_lang.clone();
            let result = decode(engine, model, Some(lid), &item.source, &cfg)?;
            let label = classify_off_target(lid, result.best_text(), &item.target_lang, &item.source_lang, english)?;
            Ok((result, label))
        })
        .collect();
    let mut results = Vec::with_capacity(outcomes.len());
    let mut labels = Vec::with_capacity(outcomes.len());
    for (index, o) in outcomes.into_iter().enumerate() {
        let (r, l) = o.map_err(|e| Error::Batch {
            index,
            source: Box::new(e),
        })?;
        results.push(r);
        labels.push(l);
    }
    let hyps: Vec<&str> = results.iter().map(|r| r.best_text()).collect();
    let refs: Vec<&str> = testset.items.iter().map(|i| i.reference.as_str()).collect();
    let bleu = corpus_bleu(&hyps, &refs)?;
    let rates = off_target_rates(&labels.iter().map(|c| c.label).collect::<Vec<_>>())?;
    Ok(Evaluation {
        results,
        labels,
        bleu,
        rates,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    Beam,
    Alpha,
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepAxis::Beam => "beam",
            SweepAxis::Alpha => "alpha",
        })
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "beam" => Ok(SweepAxis::Beam),
            "alpha" => Ok(SweepAxis::Alpha),
            other => Err(Error::invalid(format!("unknown sweep axis {other:?} (expected beam or alpha)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// Beam size or alpha, depending on the axis.
    pub value: f64,
    pub bleu: f64,
    pub off_target: OffTargetRates,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub engine: Engine,
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
}

pub const SWEEP_HEADER: &str = "engine\taxis\tvalue\tbleu\toff_target\tto_english\tto_source\tother";

impl SweepReport {
    pub fn to_tsv(&self) -> String {
        let mut out = format!("{SWEEP_HEADER}\n");
        for r in &self.rows {
            let o = &r.off_target;
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                self.engine, self.axis, r.value, r.bleu, o.total, o.to_english, o.to_source, o.other
            );
        }
        out
    }

    pub fn from_tsv(text: &str, path: &Path) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut lines = text.lines().enumerate();
        if lines.next().map(|(_, h)| h) != Some(SWEEP_HEADER) {
            return Err(err(1, format!("expected header {SWEEP_HEADER:?}")));
        }
        let mut head: Option<(Engine, SweepAxis)> = None;
        let mut rows = Vec::new();
        for (i, line) in lines {
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 8 {
                return Err(err(i + 1, format!("expected 8 fields, found {}", f.len())));
            }
            let engine: Engine = f[0].parse().map_err(|e: Error| err(i + 1, e.to_string()))?;
            let axis: SweepAxis = f[1].parse().map_err(|e: Error| err(i + 1, e.to_string()))?;
            match head {
                None => head = Some((engine, axis)),
                Some(h) if h != (engine, axis) => return Err(err(i + 1, "mixed engines or axes".into())),
                Some(_) => {}
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| err(i + 1, e.to_string()));
            rows.push(SweepRow {
                value: num(f[2])?,
                bleu: num(f[3])?,
                off_target: OffTargetRates {
                    total: num(f[4])?,
                    to_english: num(f[5])?,
                    to_source: num(f[6])?,
                    other: num(f[7])?,
                },
            });
        }
        let (engine, axis) = head.ok_or_else(|| err(1, "report has no rows".into()))?;
        Ok(SweepReport { engine, axis, rows })
    }
}

fn row(eval: &Evaluation, value: f64) -> SweepRow {
    SweepRow {
        value,
        bleu: eval.bleu,
        off_target: eval.rates,
    }
}

/// Decodes the test set once per beam size.
pub fn sweep_beam<M: AutoregressiveModel + ?Sized>(
    engine: Engine,
    model: &M,
    lid: &LidModel,
    testset: &TestSet,
    sizes: &[usize],
    config: &DecodeConfig,
    english: &str,
) -> Result<SweepReport> {
    if sizes.is_empty() {
        return Err(Error::invalid("no beam sizes to sweep"));
    }
    let mut rows = Vec::with_capacity(sizes.len());
    for &b in sizes {
        let cfg = config.clone().with_beam(b);
        let eval = evaluate(engine, model, lid, testset, &cfg, english).map_err(|e| e.context(format!("beam size {b}")))?;
        rows.push(row(&eval, b as f64));
    }
    Ok(SweepReport {
        engine,
        axis: SweepAxis::Beam,
        rows,
    })
}

/// Decodes the test set with the libs engine once per alpha.
pub fn sweep_alpha<M: AutoregressiveModel + ?Sized>(
    model: &M,
    lid: &LidModel,
    testset: &TestSet,
    alphas: &[f64],
    config: &DecodeConfig,
    english: &str,
) -> Result<SweepReport> {
    if alphas.is_empty() {
        return Err(Error::invalid("no alpha values to sweep"));
    }
    if alphas.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("alpha values must be non-decreasing"));
    }
    let mut rows = Vec::with_capacity(alphas.len());
    for &a in alphas {
        let cfg = config.clone().with_alpha(a);
        let eval =
            evaluate(Engine::Libs, model, lid, testset, &cfg, english).map_err(|e| e.context(format!("alpha {a}")))?;
        rows.push(row(&eval, a));
    }
    Ok(SweepReport {
        engine: Engine::Libs,
        axis: SweepAxis::Alpha,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tsv_round_trip() {
        let report = SweepReport {
            engine: Engine::Baseline,
            axis: SweepAxis::Beam,
            rows: vec![
                SweepRow {
                    value: 5.0,
                    bleu: 41.123456789,
                    off_target: OffTargetRates {
                        total: 1.0 / 3.0,
                        to_english: 0.2,
                        to_source: 0.1 + 1.0 / 30.0,
                        other: 0.0,
                    },
                },
                SweepRow {
                    value: 20.0,
                    bleu: 0.0,
                    off_target: OffTargetRates::default(),
                },
            ],
        };
        let p = Path::new("r.tsv");
        assert_eq!(SweepReport::from_tsv(&report.to_tsv(), p).unwrap(), report);
        let json = serde_json::to_string(&report).unwrap();
        assert_eq!(serde_json::from_str::<SweepReport>(&json).unwrap(), report);
        assert!(SweepReport::from_tsv("bad\n", p).is_err());
    }
}
