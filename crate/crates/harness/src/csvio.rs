//! CSV output in the fixed schemas, and readers for round trips.

use std::io::{Read, Write};

use ksgd::estimator::AlgorithmKind;

use crate::error::{HarnessError, Result};
use crate::experiment::{ComparisonRow, SimulationResult, SweepPoint};

pub const SIMULATE_HEADER: [&str; 3] = ["n", "replicate", "excess_risk"];
pub const SWEEP_HEADER: [&str; 3] = ["n", "best_gamma", "mean_excess_risk"];
pub const COMPARE_HEADER: [&str; 4] = [
    "algorithm",
    "predicted_slope",
    "effective_slope",
    "residual_rms",
];

/// 16 significant digits: enough to round-trip far below 1e-12.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.15e}")
}

pub fn write_simulation<W: Write>(out: W, res: &SimulationResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SIMULATE_HEADER)?;
    for (c, &n) in res.checkpoints.iter().enumerate() {
        for (j, rep) in res.per_replicate.iter().enumerate() {
            w.write_record([n.to_string(), j.to_string(), fmt_float(rep[c])])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep<W: Write>(out: W, points: &[SweepPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for p in points {
        w.write_record([
            p.n.to_string(),
            fmt_float(p.best_gamma),
            fmt_float(p.mean_excess_risk),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_comparison<W: Write>(out: W, rows: &[ComparisonRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COMPARE_HEADER)?;
    for r in rows {
        w.write_record([
            r.algorithm.name().to_string(),
            fmt_float(r.predicted_slope),
            fmt_float(r.effective_slope),
            fmt_float(r.residual_rms),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn read_rows<R: Read>(input: R, header: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let found: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if found != header {
        return Err(HarnessError::InvalidInput(format!(
            "expected header {header:?}, found {found:?}"
        )));
    }
    r.records()
        .map(|rec| rec.map_err(HarnessError::from))
        .collect()
}

fn field<V: std::str::FromStr>(rec: &csv::StringRecord, i: usize) -> Result<V> {
    let raw = rec.get(i).unwrap_or("");
    raw.parse()
        .map_err(|_| HarnessError::InvalidInput(format!("cannot parse field `{raw}`")))
}

/// `(n, replicate, excess_risk)` rows.
pub fn read_simulation<R: Read>(input: R) -> Result<Vec<(usize, usize, f64)>> {
    read_rows(input, &SIMULATE_HEADER)?
        .iter()
        .map(|rec| Ok((field(rec, 0)?, field(rec, 1)?, field(rec, 2)?)))
        .collect()
}

pub fn read_sweep<R: Read>(input: R) -> Result<Vec<SweepPoint>> {
    read_rows(input, &SWEEP_HEADER)?
        .iter()
        .map(|rec| {
            Ok(SweepPoint {
                n: field(rec, 0)?,
                best_gamma: field(rec, 1)?,
                mean_excess_risk: field(rec, 2)?,
            })
        })
        .collect()
}

pub fn read_comparison<R: Read>(input: R) -> Result<Vec<ComparisonRow>> {
    read_rows(input, &COMPARE_HEADER)?
        .iter()
        .map(|rec| {
            let algorithm: AlgorithmKind = rec
                .get(0)
                .unwrap_or("")
                .parse()
                .map_err(|e: ksgd::Error| HarnessError::InvalidInput(e.to_string()))?;
            Ok(ComparisonRow {
                algorithm,
                predicted_slope: field(rec, 1)?,
                effective_slope: field(rec, 2)?,
                residual_rms: field(rec, 3)?,
            })
        })
        .collect()
}
