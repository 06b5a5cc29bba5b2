//! Command-line front end.
//!
//! `validate <config>` checks a configuration, `run <config>` executes it and
//! `benchmark <name>` runs one of the canned reproductions. Exit status is 0
//! for a converged run, 2 when the evaluation budget ran out and 1 on error.

pub mod config;
pub mod external;
pub mod output;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::json;

pub use config::{AlgorithmConfig, DesignType, InputConfig, LimitStateConfig, MarginalConfig, RunConfig};
pub use external::ExternalModel;

use crate::active::{run_abpce_observed, AbpceResult, IterationRecord};
use crate::benchmarks::{by_name, frame_input_spec, sinc_band, SincBandConfig};
use crate::error::{Error, Result};
use output::{HistoryWriter, Reference};

pub const EXIT_CONVERGED: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_BUDGET: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "abpce", version, about = "Active bootstrap polynomial chaos reliability analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a configuration file without evaluating any model.
    Validate { config: PathBuf },
    /// Run the analysis described by a configuration file.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a canned benchmark: sinc_1d, four_branch, truss, linear_oracle or frame_inputs.
    Benchmark {
        name: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Settings of the canned reproductions.
pub fn canned_config(name: &str) -> Option<RunConfig> {
    let mut algorithm = AlgorithmConfig::default();
    match name {
        "four_branch" => {
            algorithm.initial_size = Some(20);
            algorithm.points_per_iteration = 3;
            algorithm.epsilon_pf = 0.05;
        }
        "linear_oracle" => {
            algorithm.initial_size = Some(12);
            algorithm.points_per_iteration = 1;
            algorithm.degree_min = 1;
            algorithm.degree_max = 5;
            algorithm.max_evaluations = 100;
        }
        "truss" => {
            algorithm.initial_size = Some(30);
            algorithm.initial_design = DesignType::Ball;
            algorithm.points_per_iteration = 3;
            algorithm.epsilon_pf = 0.10;
            algorithm.degree_min = 1;
            algorithm.q_norm = 0.75;
            algorithm.max_interaction = Some(2);
        }
        _ => return None,
    }
    Some(RunConfig {
        seed: 0,
        output_dir: None,
        input: None,
        limit_state: LimitStateConfig { builtin: Some(name.to_string()), ..Default::default() },
        algorithm,
    })
}

/// Outcome of [`run_to_dir`].
pub struct RunOutcome {
    pub result: AbpceResult,
    pub elapsed_seconds: f64,
}

/// Runs a validated configuration, writing every artefact into `out_dir`.
///
/// History rows are flushed as iterations complete; when the run fails the
/// report records the error and the rows written so far remain.
pub fn run_to_dir(cfg: &RunConfig, base_dir: &Path, out_dir: &Path) -> Result<RunOutcome> {
    let rv = cfg.validate()?;
    std::fs::create_dir_all(out_dir)?;
    // the echo leaves out the output location so reports compare across directories
    let config_toml = RunConfig { output_dir: None, ..cfg.clone() }.to_toml_string();
    let mut limit_state = cfg.limit_state(base_dir, out_dir)?;
    let mut history = HistoryWriter::create(&out_dir.join(output::HISTORY_FILE))?;
    let mut records: Vec<IterationRecord> = Vec::new();
    let mut write_error = None;
    let start = Instant::now();
    let outcome = run_abpce_observed(&rv, &mut limit_state, &cfg.algorithm.to_abpce(), cfg.seed, &mut |r| {
        if let Err(e) = history.write(r) {
            write_error.get_or_insert(e);
        }
        records.push(r.clone());
    });
    let elapsed_seconds = start.elapsed().as_secs_f64();
    output::write_json(&out_dir.join(output::TIMING_FILE), &json!({ "wall_seconds": elapsed_seconds }))?;
    let result = match outcome {
        Ok(result) => result,
        Err(e) => {
            output::write_json(
                &out_dir.join(output::REPORT_FILE),
                &output::error_report(&config_toml, cfg.seed, &e.to_string(), &records),
            )?;
            return Err(e);
        }
    };
    if let Some(e) = write_error {
        return Err(e);
    }
    output::write_design(&out_dir.join(output::DESIGN_FILE), rv.names(), &result)?;
    output::write_replicates(&out_dir.join(output::REPLICATE_FILE), &result.replicate_pf)?;
    let reference = cfg
        .limit_state
        .builtin
        .as_deref()
        .filter(|_| cfg.input.is_none() && cfg.limit_state.threshold.is_none())
        .and_then(by_name)
        .and_then(|spec| spec.reference_pf.map(|pf| (pf, spec.reference_source)));
    let report =
        output::run_report(&config_toml, cfg.seed, &result, reference.map(|(pf, source)| Reference { pf, source }));
    output::write_json(&out_dir.join(output::REPORT_FILE), &report)?;
    Ok(RunOutcome { result, elapsed_seconds })
}

fn print_summary(out_dir: &Path, outcome: &RunOutcome) {
    let r = &outcome.result;
    println!("status     {}", output::status(r.converged));
    println!("pf_hat     {:.6e}  [{:.6e}, {:.6e}]", r.pf_hat, r.pf_minus, r.pf_plus);
    println!("beta       {:.4}  [{:.4}, {:.4}]", r.beta, r.beta_lower, r.beta_upper);
    println!("n_total    {}", r.n_total);
    println!("iterations {}", r.history.len());
    for d in &r.diagnostics {
        println!("note       {d}");
    }
    println!("output     {}", out_dir.display());
    println!("elapsed    {:.1} s", outcome.elapsed_seconds);
}

fn exit_code(outcome: &RunOutcome) -> i32 {
    if outcome.result.converged {
        EXIT_CONVERGED
    } else {
        EXIT_BUDGET
    }
}

fn run_command(config: &Path, seed: Option<u64>, out: Option<PathBuf>) -> Result<i32> {
    let mut cfg = RunConfig::load(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let out_dir = out.unwrap_or_else(|| cfg.output_dir());
    cfg.output_dir = Some(out_dir.clone());
    let base_dir = config.parent().map(Path::to_path_buf).unwrap_or_default();
    let outcome = run_to_dir(&cfg, &base_dir, &out_dir)?;
    print_summary(&out_dir, &outcome);
    Ok(exit_code(&outcome))
}

fn benchmark_command(name: &str, seed: Option<u64>, out: Option<PathBuf>) -> Result<i32> {
    let seed = seed.unwrap_or(0);
    let out_dir = out.unwrap_or_else(|| PathBuf::from(format!("{name}_output")));
    match name {
        "sinc_1d" => {
            let start = Instant::now();
            let band = sinc_band(&SincBandConfig { seed, ..Default::default() })?;
            std::fs::create_dir_all(&out_dir)?;
            output::write_sinc_band(&out_dir, &band)?;
            let report = json!({
                "version": env!("CARGO_PKG_VERSION"),
                "benchmark": name,
                "seed": seed,
                "design_size": band.design_x.len(),
                "design_band_width": output::json_f64(band.design_band_width()),
                "design_residual": output::json_f64(band.design_residual),
                "coverage": output::json_f64(band.coverage()),
            });
            output::write_json(&out_dir.join(output::REPORT_FILE), &report)?;
            output::write_json(
                &out_dir.join(output::TIMING_FILE),
                &json!({ "wall_seconds": start.elapsed().as_secs_f64() }),
            )?;
            println!("band width at design points {:.3e} (relative)", band.design_band_width());
            println!("grid coverage               {:.3}", band.coverage());
            println!("output                      {}", out_dir.display());
            Ok(EXIT_CONVERGED)
        }
        "frame_inputs" => {
            let rv = frame_input_spec()?;
            println!(
                "frame_inputs is an input model only; use `preset = \"frame_inputs\"` with an external limit state"
            );
            for (name, m) in rv.names().iter().zip(rv.marginals()) {
                println!("{name:>4}  {:?}  mean {:.6e}  std {:.6e}", m.family(), m.mean(), m.std());
            }
            Ok(EXIT_CONVERGED)
        }
        _ => {
            let mut cfg = canned_config(name).ok_or_else(|| {
                Error::Config(format!(
                    "unknown benchmark `{name}`; expected sinc_1d, four_branch, truss, linear_oracle or frame_inputs"
                ))
            })?;
            cfg.seed = seed;
            cfg.output_dir = Some(out_dir.clone());
            let outcome = run_to_dir(&cfg, Path::new("."), &out_dir)?;
            print_summary(&out_dir, &outcome);
            Ok(exit_code(&outcome))
        }
    }
}

/// Parses `args` and executes the command; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_CONVERGED };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Validate { config } => RunConfig::load(&config).and_then(|cfg| {
            let rv = cfg.validate()?;
            println!("{}: valid ({} inputs)", config.display(), rv.dim());
            Ok(EXIT_CONVERGED)
        }),
        Command::Run { config, seed, out } => run_command(&config, seed, out),
        Command::Benchmark { name, seed, out } => benchmark_command(&name, seed, out),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}
