//! Iteration-history tables: a `#`-prefixed JSON metadata line followed by a
//! CSV table with one row per iterate. Floats use the shortest decimal form
//! that round-trips, so tables reproduce iterates exactly.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::problem::{Instance, KktResidual, PrimalDualPoint};
use crate::solvers::{prepare, MethodConfig, RunHistory};

const MAGIC: &str = "# balm-history ";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Meta {
    method: MethodConfig,
    n: usize,
    m: usize,
    relaxed: bool,
    converged: bool,
}

/// Shortest round-trip decimal, in exponent form outside `[1e-5, 1e16)`.
pub(crate) fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-5..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Schema(format!("history table: {e}"))
}

fn header(n: usize, m: usize, relaxed: bool) -> Vec<String> {
    let mut cols: Vec<String> = ["k", "primal", "dual", "complementarity", "step_h", "dist_h"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let point = |prefix: &str, cols: &mut Vec<String>| {
        cols.extend((0..n).map(|i| format!("{prefix}x_{i}")));
        cols.extend((0..m).map(|i| format!("{prefix}lambda_{i}")));
    };
    point("", &mut cols);
    if relaxed {
        point("pred_", &mut cols);
    }
    cols
}

/// Writes `history` as a table; `predictors[k]` lands on row `k + 1`.
pub fn write_history<W: Write>(out: W, history: &RunHistory) -> Result<()> {
    let w0 = &history.iterates[0];
    let (n, m) = (w0.x.len(), w0.lambda.len());
    let relaxed = !history.predictors.is_empty();
    let meta = Meta {
        method: history.method.clone(),
        n,
        m,
        relaxed,
        converged: history.converged,
    };
    let mut out = out;
    let meta = serde_json::to_string(&meta).map_err(|e| Error::Schema(e.to_string()))?;
    writeln!(out, "{MAGIC}{meta}")?;
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(header(n, m, relaxed)).map_err(csv_err)?;
    for (k, (w, res)) in history.iterates.iter().zip(&history.residuals).enumerate() {
        let mut row = vec![
            k.to_string(),
            fmt_f64(res.primal),
            fmt_f64(res.dual),
            fmt_f64(res.complementarity),
            fmt_f64(history.successive_h_steps[k]),
            history.h_distances.get(k).map(|v| fmt_f64(*v)).unwrap_or_default(),
        ];
        row.extend(w.x.iter().chain(&w.lambda).map(|v| fmt_f64(*v)));
        if relaxed {
            match k.checked_sub(1).and_then(|j| history.predictors.get(j)) {
                Some(p) => row.extend(p.x.iter().chain(&p.lambda).map(|v| fmt_f64(*v))),
                None => row.extend(std::iter::repeat_n(String::new(), n + m)),
            }
        }
        wtr.write_record(&row).map_err(csv_err)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn history_to_string(history: &RunHistory) -> Result<String> {
    let mut buf = Vec::new();
    write_history(&mut buf, history)?;
    String::from_utf8(buf).map_err(|e| Error::Schema(e.to_string()))
}

/// A history table parsed back into memory.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordedHistory {
    pub method: MethodConfig,
    pub converged: bool,
    pub iterates: Vec<PrimalDualPoint>,
    pub predictors: Vec<PrimalDualPoint>,
    pub residuals: Vec<KktResidual>,
    pub successive_h_steps: Vec<f64>,
    pub h_distances: Vec<f64>,
}

fn parse_f64(field: &str, row: usize) -> Result<f64> {
    field
        .parse()
        .map_err(|_| Error::Schema(format!("row {row}: {field:?} is not a number")))
}

pub fn parse_history(text: &str) -> Result<RecordedHistory> {
    let (first, body) = text.split_once('\n').unwrap_or((text, ""));
    let meta = first
        .strip_prefix(MAGIC)
        .ok_or_else(|| Error::Schema("missing history metadata line".into()))?;
    let meta: Meta = serde_json::from_str(meta).map_err(|e| Error::Schema(e.to_string()))?;
    let (n, m) = (meta.n, meta.m);
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let expected = header(n, m, meta.relaxed);
    let got: Vec<String> = rdr.headers().map_err(csv_err)?.iter().map(String::from).collect();
    if got != expected {
        return Err(Error::Schema("history header does not match metadata".into()));
    }
    let mut rec = RecordedHistory {
        method: meta.method,
        converged: meta.converged,
        iterates: Vec::new(),
        predictors: Vec::new(),
        residuals: Vec::new(),
        successive_h_steps: Vec::new(),
        h_distances: Vec::new(),
    };
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let f = |i: usize| parse_f64(&record[i], row);
        if record[0].parse::<usize>().ok() != Some(row) {
            return Err(Error::Schema(format!("row {row}: iteration counter out of order")));
        }
        rec.residuals.push(KktResidual {
            primal: f(1)?,
            dual: f(2)?,
            complementarity: f(3)?,
        });
        rec.successive_h_steps.push(f(4)?);
        if !record[5].is_empty() {
            rec.h_distances.push(f(5)?);
        }
        let point = |start: usize| -> Result<PrimalDualPoint> {
            let v = (start..start + n + m).map(&f).collect::<Result<Vec<_>>>()?;
            Ok(PrimalDualPoint::from_stacked(&v, n))
        };
        rec.iterates.push(point(6)?);
        if meta.relaxed && row > 0 {
            rec.predictors.push(point(6 + n + m)?);
        }
    }
    if rec.iterates.is_empty() {
        return Err(Error::Schema("history table has no rows".into()));
    }
    if !rec.h_distances.is_empty() && rec.h_distances.len() != rec.iterates.len() {
        return Err(Error::Schema("dist_h column is only partially filled".into()));
    }
    Ok(rec)
}

impl RecordedHistory {
    /// Rebuilds the run, recomputing the method's metric from `instance`.
    pub fn into_run_history(self, instance: &Instance) -> Result<RunHistory> {
        let dim = self.iterates[0].dim();
        let metric = prepare(instance, &self.method)?
            .metric()?
            .unwrap_or_else(|| DenseMatrix::identity(dim));
        Ok(RunHistory {
            method: self.method,
            metric,
            iterates: self.iterates,
            predictors: self.predictors,
            residuals: self.residuals,
            h_distances: self.h_distances,
            successive_h_steps: self.successive_h_steps,
            converged: self.converged,
        })
    }
}
