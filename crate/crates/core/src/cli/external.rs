//! Coupling to an external model through batch directories.
//!
//! For every batch a fresh directory receives `candidates.csv` (header
//! `x1,...,xM`, one point per row). The command is run with the directory as
//! its last argument and must leave `responses.csv` there: a header `y` and
//! one value per candidate, in the same order.

use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};

use nalgebra::DVector;

use super::output::fmt_f64;
use crate::active::Model;
use crate::error::{Error, Result};
use crate::input::SampleMatrix;

pub const CANDIDATES_FILE: &str = "candidates.csv";
pub const RESPONSES_FILE: &str = "responses.csv";

#[derive(Debug, Clone)]
pub struct ExternalModel {
    command: PathBuf,
    args: Vec<String>,
    work_dir: PathBuf,
    parallel: bool,
    next_batch: usize,
}

fn protocol(dir: &Path, message: impl Into<String>) -> Error {
    Error::Protocol { batch_dir: dir.to_path_buf(), message: message.into() }
}

impl ExternalModel {
    pub fn new(command: impl Into<PathBuf>, args: Vec<String>, work_dir: impl Into<PathBuf>) -> Self {
        Self { command: command.into(), args, work_dir: work_dir.into(), parallel: false, next_batch: 0 }
    }

    /// One directory and one process per point, all running at once.
    pub fn parallel(mut self, on: bool) -> Self {
        self.parallel = on;
        self
    }

    fn fresh_dir(&mut self) -> Result<PathBuf> {
        fs::create_dir_all(&self.work_dir).map_err(|e| protocol(&self.work_dir, e.to_string()))?;
        loop {
            let dir = self.work_dir.join(format!("batch_{:06}", self.next_batch));
            self.next_batch += 1;
            match fs::create_dir(&dir) {
                Ok(()) => return Ok(dir),
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
                Err(e) => return Err(protocol(&dir, e.to_string())),
            }
        }
    }

    fn spawn(&self, dir: &Path) -> Result<Child> {
        let log = |name: &str| File::create(dir.join(name)).map_err(|e| protocol(dir, e.to_string()));
        Command::new(&self.command)
            .args(&self.args)
            .arg(dir)
            .stdin(Stdio::null())
            .stdout(log("stdout.log")?)
            .stderr(log("stderr.log")?)
            .spawn()
            .map_err(|e| protocol(dir, format!("cannot start {}: {e}", self.command.display())))
    }

    fn finish(dir: &Path, mut child: Child, expected: usize) -> Result<Vec<f64>> {
        let status = child.wait().map_err(|e| protocol(dir, e.to_string()))?;
        if !status.success() {
            return Err(protocol(dir, format!("model command exited with {status}")));
        }
        read_responses(dir, expected)
    }
}

/// Writes the candidate file of one batch.
pub fn write_candidates(dir: &Path, rows: &[Vec<f64>], dim: usize) -> Result<()> {
    let mut text = (1..=dim).map(|i| format!("x{i}")).collect::<Vec<_>>().join(",");
    text.push('\n');
    for row in rows {
        text.push_str(&row.iter().map(|&v| fmt_f64(v)).collect::<Vec<_>>().join(","));
        text.push('\n');
    }
    let mut f = File::create(dir.join(CANDIDATES_FILE)).map_err(|e| protocol(dir, e.to_string()))?;
    f.write_all(text.as_bytes()).map_err(|e| protocol(dir, e.to_string()))
}

/// Reads and checks the response file of one batch.
pub fn read_responses(dir: &Path, expected: usize) -> Result<Vec<f64>> {
    let path = dir.join(RESPONSES_FILE);
    let text = fs::read_to_string(&path).map_err(|e| protocol(dir, format!("cannot read {RESPONSES_FILE}: {e}")))?;
    let mut lines = text.lines().map(str::trim).enumerate().filter(|(_, l)| !l.is_empty());
    match lines.next() {
        Some((_, "y")) => {}
        other => {
            return Err(protocol(
                dir,
                format!("{RESPONSES_FILE} must start with the header `y`, found {:?}", other.map(|(_, l)| l)),
            ))
        }
    }
    let mut values = Vec::with_capacity(expected);
    for (n, line) in lines {
        let v: f64 = line
            .parse()
            .map_err(|_| protocol(dir, format!("{RESPONSES_FILE} line {}: `{line}` is not a number", n + 1)))?;
        if !v.is_finite() {
            return Err(protocol(dir, format!("{RESPONSES_FILE} line {}: response {v} is not finite", n + 1)));
        }
        values.push(v);
    }
    if values.len() != expected {
        return Err(protocol(dir, format!("{RESPONSES_FILE} has {} rows for {expected} candidates", values.len())));
    }
    Ok(values)
}

impl Model for ExternalModel {
    fn evaluate(&mut self, x: &SampleMatrix) -> Result<DVector<f64>> {
        let rows: Vec<Vec<f64>> = x.rows().collect();
        if rows.is_empty() {
            return Ok(DVector::zeros(0));
        }
        if !self.parallel || rows.len() == 1 {
            let dir = self.fresh_dir()?;
            write_candidates(&dir, &rows, x.dim())?;
            let child = self.spawn(&dir)?;
            return Ok(DVector::from_vec(Self::finish(&dir, child, rows.len())?));
        }
        let mut running = Vec::with_capacity(rows.len());
        for row in &rows {
            let dir = self.fresh_dir()?;
            write_candidates(&dir, std::slice::from_ref(row), x.dim())?;
            let child = self.spawn(&dir)?;
            running.push((dir, child));
        }
        // wait for every process before reporting the first failure
        let results: Vec<Result<Vec<f64>>> =
            running.into_iter().map(|(dir, child)| Self::finish(&dir, child, 1)).collect();
        let mut y = Vec::with_capacity(rows.len());
        for r in results {
            y.extend(r?);
        }
        Ok(DVector::from_vec(y))
    }
}
