//! Experiment rows, the M-improvement metric and CSV output.

use std::path::Path;

use log::warn;

use crate::bnb::MipStatus;
use crate::error::{Error, Result};
use crate::model::Norm;
use crate::tighten::StrategyReport;

pub const RESULTS_HEADER: [&str; 11] = [
    "dataset",
    "C",
    "norm",
    "strategy",
    "m_improvement",
    "t_cluster",
    "t_strategy",
    "t_total",
    "gap",
    "objective",
    "status",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MImprovement {
    pub value: f64,
    /// Entries with `M_initial = 0`, left out of the average.
    pub skipped: usize,
}

/// Mean of `(M_init - M_final) / M_init` over the entries with nonzero `M_init`.
pub fn m_improvement(m_initial: &[f64], m_final: &[f64]) -> MImprovement {
    let mut sum = 0.0;
    let mut counted = 0;
    let mut skipped = 0;
    for (a, b) in m_initial.iter().zip(m_final) {
        if *a == 0.0 {
            skipped += 1;
            continue;
        }
        sum += (a - b) / a;
        counted += 1;
    }
    if skipped > 0 {
        warn!("{skipped} zero entries of the initial M skipped in the improvement metric");
    }
    MImprovement {
        value: if counted == 0 { 0.0 } else { sum / counted as f64 },
        skipped,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub dataset: String,
    pub c: f64,
    pub norm: Norm,
    pub strategy: String,
    pub m_improvement: f64,
    pub t_cluster: f64,
    pub t_strategy: f64,
    pub t_total: f64,
    pub gap: f64,
    pub objective: f64,
    pub status: MipStatus,
}

/// Clamp a gap above 1 (only possible with an incumbent near zero).
pub fn cap_gap(gap: f64) -> f64 {
    if gap > 1.0 {
        warn!("gap {gap} capped at 1 (incumbent close to zero)");
        1.0
    } else {
        gap
    }
}

/// `%.6g`-style formatting.
pub fn fmt_sig(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "NaN".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp) as usize;
        let s = format!("{v:.decimals$}");
        trim_zeros(&s).to_string()
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn key(r: &ExperimentRow) -> (String, f64, String, &'static str) {
    (r.dataset.clone(), r.c, r.strategy.clone(), r.norm.as_str())
}

/// Write rows sorted by (dataset, C, strategy).
pub fn write_results(rows: &[ExperimentRow], path: &Path) -> Result<()> {
    let mut sorted: Vec<&ExperimentRow> = rows.iter().collect();
    sorted.sort_by(|a, b| {
        let (ka, kb) = (key(a), key(b));
        ka.0.cmp(&kb.0)
            .then(ka.1.total_cmp(&kb.1))
            .then(ka.2.cmp(&kb.2))
            .then(ka.3.cmp(kb.3))
    });
    for pair in sorted.windows(2) {
        if key(pair[0]) == key(pair[1]) {
            let r = pair[0];
            return Err(Error::DuplicateKey(format!(
                "{}, C={}, {}, {}",
                r.dataset,
                r.c,
                r.norm.as_str(),
                r.strategy
            )));
        }
    }
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(RESULTS_HEADER)?;
    for r in sorted {
        w.write_record([
            r.dataset.clone(),
            fmt_sig(r.c),
            r.norm.as_str().to_string(),
            r.strategy.clone(),
            fmt_sig(r.m_improvement),
            fmt_sig(r.t_cluster),
            fmt_sig(r.t_strategy),
            fmt_sig(r.t_total),
            fmt_sig(r.gap),
            fmt_sig(r.objective),
            r.status.as_str().to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, row: usize, column: usize) -> Result<T> {
    let s = rec.get(column).unwrap_or("");
    s.parse().map_err(|_| Error::Parse {
        row,
        column: column + 1,
        message: format!("cannot parse {s:?}"),
    })
}

pub fn read_results(path: &Path) -> Result<Vec<ExperimentRow>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let header = r.headers()?.clone();
    if header.iter().ne(RESULTS_HEADER.iter().copied()) {
        return Err(Error::Parse {
            row: 1,
            column: 1,
            message: "unexpected results header".into(),
        });
    }
    let mut rows = Vec::new();
    for (idx, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = idx + 2;
        rows.push(ExperimentRow {
            dataset: rec.get(0).unwrap_or("").to_string(),
            c: field(&rec, row, 1)?,
            norm: field(&rec, row, 2)?,
            strategy: rec.get(3).unwrap_or("").to_string(),
            m_improvement: field(&rec, row, 4)?,
            t_cluster: field(&rec, row, 5)?,
            t_strategy: field(&rec, row, 6)?,
            t_total: field(&rec, row, 7)?,
            gap: field(&rec, row, 8)?,
            objective: field(&rec, row, 9)?,
            status: field(&rec, row, 10)?,
        });
    }
    Ok(rows)
}

/// Per-phase strategy log: phase, iteration, wall time, M improvement,
/// bound widths and `sum M`.
pub fn write_strategy_report(report: &StrategyReport, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["phase", "iteration", "wall_time", "m_improvement", "bound_width", "m_sum"])?;
    for p in &report.phases {
        w.write_record([
            p.phase.clone(),
            p.iteration.to_string(),
            fmt_sig(p.wall_time),
            fmt_sig(p.m_improvement),
            fmt_sig(p.bound_width),
            fmt_sig(p.snapshot.big_m.iter().sum()),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
