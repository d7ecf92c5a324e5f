use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{check_lid, run, Engine, PoolEntry};
use crate::config::DecodeConfig;
use crate::error::{Error, Result};
use crate::lid::LidModel;
use crate::models::AutoregressiveModel;
use crate::vocab::Vocabulary;

pub const TRACE_HEADER: &str = "step\trank\ttext\tlid_label\tlogprob";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    /// Detokenized prefix; finished entries end with the EOS string.
    pub text: String,
    /// Predicted language of the text, `-` when the text is empty or no
    /// labeler was supplied.
    pub lid_label: String,
    /// Cumulative model log probability.
    pub logprob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub step: usize,
    pub entries: Vec<TraceEntry>,
}

/// The top `b` entries of every step's sorted candidate pool.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BeamTrace {
    pub steps: Vec<TraceStep>,
}

pub(super) fn record_step(
    vocab: &Vocabulary,
    labeler: Option<&LidModel>,
    step: usize,
    top: &[PoolEntry],
) -> Result<TraceStep> {
    let eos = vocab.token(vocab.eos()).unwrap_or_default();
    let mut entries = Vec::with_capacity(top.len());
    for e in top {
        let text = e.text.clone().unwrap_or_default();
        let lid_label = match labeler {
            Some(lid) if !text.is_empty() => lid.predict(&text)?.lang,
            _ => "-".to_string(),
        };
        let shown = if e.token != vocab.eos() {
            text
        } else if text.is_empty() {
            eos.to_string()
        } else {
            format!("{text} {eos}")
        };
        entries.push(TraceEntry {
            text: shown,
            lid_label,
            logprob: e.nmt,
        });
    }
    Ok(TraceStep { step, entries })
}

/// Runs `engine` and records each step. `lid` labels the entries and, for the
/// libs engine, also scores them.
pub fn trace_decode<M: AutoregressiveModel + ?Sized>(
    engine: Engine,
    model: &M,
    lid: Option<&LidModel>,
    source: &str,
    config: &DecodeConfig,
) -> Result<BeamTrace> {
    config.validate()?;
    let scorer = match engine {
        Engine::Baseline => None,
        Engine::Libs => {
            let lid = lid.ok_or_else(|| Error::invalid("the libs engine needs a LiD model"))?;
            check_lid(lid, &config.target_lang)?;
            Some(lid)
        }
    };
    let mut steps = Vec::new();
    run(model, source, config, scorer, lid, Some(&mut steps))?;
    Ok(BeamTrace { steps })
}

impl BeamTrace {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from(TRACE_HEADER);
        out.push('\n');
        for st in &self.steps {
            for (rank, e) in st.entries.iter().enumerate() {
                let _ = writeln!(out, "{}\t{}\t{}\t{}\t{}", st.step, rank + 1, e.text, e.lid_label, e.logprob);
            }
        }
        out
    }

    pub fn from_tsv(text: &str, path: &Path) -> Result<Self> {
        let parse_err = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h == TRACE_HEADER => {}
            _ => return Err(parse_err(1, format!("expected header {TRACE_HEADER:?}"))),
        }
        let mut trace = BeamTrace::default();
        for (i, line) in lines {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 5 {
                return Err(parse_err(i + 1, format!("expected 5 fields, found {}", fields.len())));
            }
            let num = |s: &str| s.parse::<usize>().map_err(|e| parse_err(i + 1, e.to_string()));
            let step = num(fields[0])?;
            let rank = num(fields[1])?;
            let logprob = fields[4].parse::<f64>().map_err(|e| parse_err(i + 1, e.to_string()))?;
            if trace.steps.last().map(|s| s.step) != Some(step) {
                trace.steps.push(TraceStep { step, entries: Vec::new() });
            }
            let current = trace.steps.last_mut().unwrap();
            if rank != current.entries.len() + 1 {
                return Err(parse_err(i + 1, format!("rank {rank} out of sequence")));
            }
            current.entries.push(TraceEntry {
                text: fields[2].to_string(),
                lid_label: fields[3].to_string(),
                logprob,
            });
        }
        Ok(trace)
    }
}

/// Renders traces next to each other, one column group per trace, in the
/// "Step | Beam | LiD | LogProb" layout.
pub fn render_side_by_side(traces: &[(&str, &BeamTrace)]) -> String {
    struct Col {
        rows: Vec<[String; 3]>,
        widths: [usize; 3],
    }
    let max_step = traces.iter().map(|(_, t)| t.steps.len()).max().unwrap_or(0);
    let mut cols: Vec<Col> = traces
        .iter()
        .map(|(_, t)| {
            let mut rows = Vec::new();
            for i in 0..max_step {
                let n = traces.iter().filter_map(|(_, t)| t.steps.get(i)).map(|s| s.entries.len()).max().unwrap_or(0);
                for r in 0..n {
                    rows.push(match t.steps.get(i).and_then(|s| s.entries.get(r)) {
                        Some(e) => [e.text.clone(), e.lid_label.clone(), format!("{:.2}", e.logprob)],
                        None => Default::default(),
                    });
                }
            }
            let mut widths = [4, 3, 7];
            for row in &rows {
                for (w, cell) in widths.iter_mut().zip(row) {
                    *w = (*w).max(cell.chars().count());
                }
            }
            Col { rows, widths }
        })
        .collect();

    let pad = |s: &str, w: usize| format!("{s}{}", " ".repeat(w.saturating_sub(s.chars().count())));
    let mut out = String::new();
    out.push_str("Step ");
    for ((name, _), col) in traces.iter().zip(&cols) {
        let w: usize = col.widths.iter().sum::<usize>() + 6;
        let _ = write!(out, "| {} ", pad(name, w));
    }
    out.push('\n');
    out.push_str("     ");
    for col in &cols {
        let [a, b, c] = col.widths;
        let _ = write!(out, "| {} | {} | {} ", pad("Beam", a), pad("LiD", b), pad("LogProb", c));
    }
    out.push('\n');

    let mut row = 0;
    for i in 0..max_step {
        let n = traces.iter().filter_map(|(_, t)| t.steps.get(i)).map(|s| s.entries.len()).max().unwrap_or(0);
        for r in 0..n {
            let label = if r == 0 { (i + 1).to_string() } else { String::new() };
            out.push_str(&pad(&label, 5));
            for col in &mut cols {
                let cells = &col.rows[row];
                let [a, b, c] = col.widths;
                let _ = write!(out, "| {} | {} | {} ", pad(&cells[0], a), pad(&cells[1], b), pad(&cells[2], c));
            }
            out.push('\n');
            row += 1;
        }
    }
    out
}
