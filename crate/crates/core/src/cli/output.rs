//! CSV and JSON artefacts of a run.
//!
//! CSV floats use 17 significant digits so that every value reloads to the
//! same bits; JSON numbers use the shortest representation that round-trips,
//! and non-finite values are written as strings.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde_json::{json, Value};

use crate::active::{AbpceResult, IterationRecord};
use crate::benchmarks::SincBand;
use crate::error::Result;

pub const HISTORY_FILE: &str = "history.csv";
pub const DESIGN_FILE: &str = "design.csv";
pub const REPLICATE_FILE: &str = "replicate_pf.csv";
pub const REPORT_FILE: &str = "report.json";
pub const TIMING_FILE: &str = "timing.json";
pub const SINC_BAND_FILE: &str = "sinc_band.csv";
pub const SINC_DESIGN_FILE: &str = "sinc_design.csv";

pub const HISTORY_HEADER: &str =
    "iteration,n_total,pf_hat,pf_minus,pf_plus,beta,criterion,loo_error,degree,support_size,margin_size,added";

/// 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn json_f64(v: f64) -> Value {
    serde_json::Number::from_f64(v).map(Value::Number).unwrap_or_else(|| Value::String(v.to_string()))
}

fn join(values: impl IntoIterator<Item = f64>) -> String {
    values.into_iter().map(fmt_f64).collect::<Vec<_>>().join(",")
}

/// Appends one row per iteration and flushes it, so an interrupted run keeps
/// its history.
pub struct HistoryWriter {
    out: BufWriter<File>,
}

impl HistoryWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{HISTORY_HEADER}")?;
        out.flush()?;
        Ok(Self { out })
    }

    pub fn write(&mut self, r: &IterationRecord) -> Result<()> {
        writeln!(self.out, "{}", history_row(r))?;
        self.out.flush()?;
        Ok(())
    }
}

pub fn history_row(r: &IterationRecord) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{}",
        r.iteration,
        r.n_total,
        fmt_f64(r.pf_hat),
        fmt_f64(r.pf_minus),
        fmt_f64(r.pf_plus),
        fmt_f64(r.beta),
        fmt_f64(r.criterion),
        fmt_f64(r.loo_error),
        r.degree,
        r.support_size,
        r.margin_size,
        r.added.len()
    )
}

pub fn write_design(path: &Path, names: &[String], result: &AbpceResult) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{},y,g", names.join(","))?;
    let x = result.design.inputs();
    let y = result.design.responses();
    for (i, row) in x.rows().enumerate() {
        writeln!(out, "{},{},{}", join(row), fmt_f64(y[i]), fmt_f64(result.g[i]))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_replicates(path: &Path, replicate_pf: &[f64]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "replicate,pf")?;
    for (b, &p) in replicate_pf.iter().enumerate() {
        writeln!(out, "{b},{}", fmt_f64(p))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("JSON values serialise");
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub struct Reference<'a> {
    pub pf: f64,
    pub source: &'a str,
}

pub fn status(converged: bool) -> &'static str {
    if converged {
        "converged"
    } else {
        "budget_exhausted"
    }
}

/// Structured summary of a finished run.
pub fn run_report(config_toml: &str, seed: u64, result: &AbpceResult, reference: Option<Reference>) -> Value {
    let model = &result.model;
    json!({
        "version": env!("CARGO_PKG_VERSION"),
        "status": status(result.converged),
        "seed": seed,
        "config": config_toml,
        "result": {
            "converged": result.converged,
            "pf_hat": json_f64(result.pf_hat),
            "pf_minus": json_f64(result.pf_minus),
            "pf_plus": json_f64(result.pf_plus),
            "beta": json_f64(result.beta),
            "beta_lower": json_f64(result.beta_lower),
            "beta_upper": json_f64(result.beta_upper),
            "n_total": result.n_total,
            "iterations": result.history.len(),
            "criterion": json_f64(result.history.last().map_or(f64::INFINITY, |r| r.criterion)),
            "degree": model.degree(),
            "support_size": model.basis().len(),
            "loo_error": json_f64(model.loo_error()),
            "diagnostics": result.diagnostics,
        },
        "reference": reference.map(|r| json!({ "pf": json_f64(r.pf), "source": r.source })),
    })
}

/// Summary of a run that stopped on an error.
pub fn error_report(config_toml: &str, seed: u64, error: &str, history: &[IterationRecord]) -> Value {
    json!({
        "version": env!("CARGO_PKG_VERSION"),
        "status": "error",
        "seed": seed,
        "config": config_toml,
        "error": error,
        "iterations": history.len(),
        "n_total": history.last().map(|r| r.n_total),
    })
}

pub fn write_sinc_band(dir: &Path, band: &SincBand) -> Result<()> {
    let mut out = BufWriter::new(File::create(dir.join(SINC_BAND_FILE))?);
    writeln!(out, "x,truth,surrogate,lower,upper")?;
    for i in 0..band.grid.len() {
        writeln!(out, "{}", join([band.grid[i], band.truth[i], band.surrogate[i], band.lower[i], band.upper[i]]))?;
    }
    out.flush()?;
    let mut out = BufWriter::new(File::create(dir.join(SINC_DESIGN_FILE))?);
    writeln!(out, "x,y,lower,upper")?;
    for i in 0..band.design_x.len() {
        writeln!(out, "{}", join([band.design_x[i], band.design_y[i], band.design_lower[i], band.design_upper[i]]))?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.0f64.sqrt(), 1e-308, 6.02214076e23, 4.46e-3] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
            let digits = s.split('e').next().unwrap().chars().filter(char::is_ascii_digit).count();
            assert_eq!(digits, 17);
        }
        assert_eq!(fmt_f64(f64::INFINITY).parse::<f64>().unwrap(), f64::INFINITY);
    }

    #[test]
    fn json_numbers() {
        assert_eq!(json_f64(f64::INFINITY), Value::String("inf".into()));
        let v = 1.0 / 3.0;
        let back: f64 = serde_json::from_str(&serde_json::to_string(&json_f64(v)).unwrap()).unwrap();
        assert_eq!(back.to_bits(), v.to_bits());
    }

    #[test]
    fn history_row_layout() {
        let r = IterationRecord {
            iteration: 4,
            n_total: 32,
            pf_hat: 4.4e-3,
            pf_minus: 4.2e-3,
            pf_plus: 4.6e-3,
            beta: 2.62,
            criterion: 0.0909,
            loo_error: 1e-3,
            degree: 3,
            support_size: 7,
            margin_size: 120,
            added: vec![vec![0.0, 1.0]; 3],
        };
        let row = history_row(&r);
        assert_eq!(row.split(',').count(), HISTORY_HEADER.split(',').count());
        assert!(row.starts_with("4,32,4.4000000000000003e-3,"));
        assert!(row.ends_with(",3,7,120,3"));
    }

    proptest::proptest! {
        #[test]
        fn csv_floats_reload_bit_for_bit(bits in proptest::num::u64::ANY) {
            let v = f64::from_bits(bits);
            proptest::prop_assume!(v.is_finite());
            proptest::prop_assert_eq!(fmt_f64(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }
}
