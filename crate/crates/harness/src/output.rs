use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::HarnessError;
use crate::experiments::median;
use crate::runner::StepRecord;

/// Nats or bits, chosen by the `--bits` flag.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InfoUnit {
    Nats,
    Bits,
}

impl InfoUnit {
    pub fn from_bits_flag(bits: bool) -> Self {
        if bits {
            InfoUnit::Bits
        } else {
            InfoUnit::Nats
        }
    }

    pub fn convert(self, nats: f64) -> f64 {
        match self {
            InfoUnit::Nats => nats,
            InfoUnit::Bits => nats / std::f64::consts::LN_2,
        }
    }

    pub fn suffix(self) -> &'static str {
        match self {
            InfoUnit::Nats => "nats",
            InfoUnit::Bits => "bits",
        }
    }
}

pub fn ensure_dir(dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))
}

/// One JSON object per line, in nats.
pub fn write_trace(path: &Path, episodes: &[Vec<StepRecord>]) -> Result<(), HarnessError> {
    let file = fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let mut out = BufWriter::new(file);
    for record in episodes.iter().flatten() {
        let line = serde_json::to_string(record).map_err(|e| HarnessError::io(path, e))?;
        writeln!(out, "{line}").map_err(|e| HarnessError::io(path, e))?;
    }
    out.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn read_trace(path: &Path) -> Result<Vec<StepRecord>, HarnessError> {
    let file = fs::File::open(path).map_err(|e| HarnessError::io(path, e))?;
    BufReader::new(file)
        .lines()
        .map(|line| {
            let line = line.map_err(|e| HarnessError::io(path, e))?;
            serde_json::from_str(&line).map_err(|e| HarnessError::io(path, e))
        })
        .collect()
}

/// One row per episode plus a `median` row. Value columns are discounted
/// returns; information columns carry their unit in the header.
pub fn write_summary(
    path: &Path,
    episodes: &[Vec<StepRecord>],
    unit: InfoUnit,
) -> Result<(), HarnessError> {
    let io = |e: csv::Error| HarnessError::io(path, e);
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    let u = unit.suffix();
    w.write_record([
        "seed".to_string(),
        "lambda".to_string(),
        "steps".to_string(),
        "final_value_gap_return".to_string(),
        "mean_value_gap_return".to_string(),
        format!("final_kl_{u}"),
        format!("final_loss_gap_{u}"),
        format!("final_lambda_kl_{u}"),
        format!("final_empowerment_{u}"),
        "total_reward".to_string(),
    ])
    .map_err(io)?;

    let rows: Vec<[f64; 8]> = episodes
        .iter()
        .filter(|e| !e.is_empty())
        .map(|e| {
            let last = e.last().unwrap();
            [
                last.value_gap,
                e.iter().map(|r| r.value_gap).sum::<f64>() / e.len() as f64,
                unit.convert(last.kl_pi_star_zeta),
                unit.convert(last.loss_gap),
                unit.convert(last.lambda * last.kl_pi_star_zeta),
                unit.convert(last.empowerment),
                e.iter().map(|r| r.percept.reward).sum(),
                e.len() as f64,
            ]
        })
        .collect();
    for (e, row) in episodes.iter().filter(|e| !e.is_empty()).zip(&rows) {
        let first = &e[0];
        let mut record = vec![
            first.seed.to_string(),
            first.lambda.to_string(),
            e.len().to_string(),
        ];
        record.extend(row[..7].iter().map(|x| x.to_string()));
        w.write_record(&record).map_err(io)?;
    }
    if !rows.is_empty() {
        let column = |i: usize| median(&rows.iter().map(|r| r[i]).collect::<Vec<_>>());
        let mut record = vec!["median".to_string(), String::new(), column(7).to_string()];
        record.extend((0..7).map(|i| column(i).to_string()));
        w.write_record(&record).map_err(io)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn write_report(path: &Path, report: &impl Serialize) -> Result<(), HarnessError> {
    let text = serde_json::to_string_pretty(report).map_err(|e| HarnessError::io(path, e))?;
    fs::write(path, text + "\n").map_err(|e| HarnessError::io(path, e))
}
