use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use balm::bench::{
    certify, generate_instance, history_to_string, method_from_name, parse_history, run_matchup, write_atomic,
    write_report, CertifyOptions, Check, Dims, InstanceKind, MethodParams, ProblemFile, Report,
};
use balm::par::Execution;
use balm::solvers::{run, StopRule};
use balm::{Error, Model, PrimalDualPoint};

#[derive(Parser)]
#[command(
    name = "balm",
    version,
    about = "Balanced augmented Lagrangian solvers and diagnostics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated instance to a problem file.
    Generate {
        #[arg(long, value_enum)]
        kind: InstanceKind,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        /// Block sizes for separable instances, e.g. `3,5`.
        #[arg(long, value_delimiter = ',')]
        blocks: Option<Vec<usize>>,
        /// Planted support size.
        #[arg(long)]
        sparsity: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one method and optionally write its iteration history.
    Solve {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long, default_value = "balanced-alm")]
        method: String,
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        stop: StopArgs,
        #[arg(long)]
        history: Option<PathBuf>,
        /// Problem file or JSON point holding a reference solution.
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Run several methods from the same start and write a summary report.
    Matchup {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "")]
        methods: Vec<String>,
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        stop: StopArgs,
        #[arg(long)]
        report: PathBuf,
        /// Directory receiving one `<method>.csv` history per method.
        #[arg(long)]
        history_dir: Option<PathBuf>,
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Run methods one after another.
        #[arg(long)]
        sequential: bool,
    },
    /// Replay contraction and ergodic-gap certificates over a history table.
    Certify {
        #[arg(long)]
        history: PathBuf,
        #[arg(long)]
        problem: PathBuf,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "contraction,gap")]
        check: Vec<Check>,
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long = "t", value_delimiter = ',', default_value = "10,100,1000")]
        horizons: Vec<usize>,
        #[arg(long, default_value_t = 500)]
        probes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct ParamArgs {
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Accept the sharper 0.75 step-size bounds of LALM and linearized ADMM.
    #[arg(long)]
    sharp_bounds: bool,
}

impl From<ParamArgs> for MethodParams {
    fn from(a: ParamArgs) -> Self {
        MethodParams {
            r: a.r,
            delta: a.delta,
            alpha: a.alpha,
            s: a.s,
            sigma: a.sigma,
            sharp_bounds: a.sharp_bounds,
        }
    }
}

#[derive(Args)]
struct StopArgs {
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 100_000)]
    max_iters: usize,
}

impl StopArgs {
    fn rule(&self) -> StopRule {
        StopRule::new(self.max_iters, self.tol)
    }
}

/// Failures carrying their exit code.
enum Failure {
    Lib(Error),
    NotConverged(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Lib(e.into())
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NoConvergence { .. } | Error::InnerNoConvergence { .. } => 1,
        Error::Io(_) | Error::Schema(_) => 3,
        _ => 2,
    }
}

fn json<T: serde::Serialize>(v: &T) -> Result<String, Error> {
    serde_json::to_string_pretty(v).map_err(|e| Error::Schema(e.to_string()))
}

fn load_reference(path: Option<&Path>, file: &ProblemFile) -> Result<Option<PrimalDualPoint>, Error> {
    let Some(path) = path else {
        return Ok(file.reference.clone());
    };
    let text = fs::read_to_string(path)?;
    if let Ok(other) = ProblemFile::from_json(&text) {
        return other
            .reference
            .map(Some)
            .ok_or_else(|| Error::Schema(format!("{} holds no reference", path.display())));
    }
    serde_json::from_str(&text)
        .map(Some)
        .map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
}

fn execute(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Generate {
            kind,
            m,
            n,
            blocks,
            sparsity,
            seed,
            out,
        } => {
            let dims = Dims { m, n, blocks, sparsity };
            let (instance, reference) = generate_instance(kind, &dims, seed)?;
            ProblemFile::from_instance(&instance, reference).write(&out)?;
        }
        Command::Solve {
            problem,
            method,
            params,
            stop,
            history,
            reference,
        } => {
            let file = ProblemFile::read(&problem)?;
            let instance = file.instance()?;
            let reference = load_reference(reference.as_deref(), &file)?;
            let config = method_from_name(&method, &params.into(), &instance)?;
            let h = run(
                &instance,
                &config,
                &stop.rule(),
                &instance.default_start(),
                reference.as_ref(),
            )?;
            if let Some(path) = history {
                write_atomic(&path, history_to_string(&h)?.as_bytes())?;
            }
            let summary = serde_json::json!({
                "method": method,
                "iterations": h.iterations(),
                "converged": h.converged,
                "final_kkt": h.residuals.last(),
                "objective_value": instance.objective_value(&h.last().x),
                "solution": h.last(),
            });
            println!("{}", json(&summary)?);
            if !h.converged {
                return Err(Failure::NotConverged(format!(
                    "{method} stopped after {} iterations without reaching tol {}",
                    h.iterations(),
                    stop.tol
                )));
            }
        }
        Command::Matchup {
            problem,
            methods,
            params,
            stop,
            report,
            history_dir,
            reference,
            sequential,
        } => {
            let file = ProblemFile::read(&problem)?;
            let instance = file.instance()?;
            let reference = load_reference(reference.as_deref(), &file)?;
            let rule = stop.rule();
            rule.validate()?;
            let methods: Vec<String> = methods.into_iter().filter(|m| !m.is_empty()).collect();
            let exec = if sequential {
                Execution::Sequential
            } else {
                Execution::default()
            };
            let entries = run_matchup(
                exec,
                &instance,
                &methods,
                &params.into(),
                &rule,
                &instance.default_start(),
                reference.as_ref(),
            );
            if let Some(dir) = history_dir {
                fs::create_dir_all(&dir)?;
                for e in &entries {
                    if let Some(h) = &e.history {
                        write_atomic(
                            &dir.join(format!("{}.csv", e.row.method)),
                            history_to_string(h)?.as_bytes(),
                        )?;
                    }
                }
            }
            let report_data = Report {
                max_iters: rule.max_iters,
                kkt_tol: rule.kkt_tol,
                rows: entries.into_iter().map(|e| e.row).collect(),
            };
            write_report(&report, &report_data)?;
            println!("{}", json(&report_data)?);
        }
        Command::Certify {
            history,
            problem,
            check,
            reference,
            horizons,
            probes,
            seed,
        } => {
            let file = ProblemFile::read(&problem)?;
            let instance = file.instance()?;
            let reference = load_reference(reference.as_deref(), &file)?;
            let recorded = parse_history(&fs::read_to_string(&history)?)?;
            let h = recorded.into_run_history(&instance)?;
            let opts = CertifyOptions {
                checks: check,
                horizons,
                probes,
                seed,
            };
            let out = certify(Execution::default(), &instance, &h, reference.as_ref(), &opts)?;
            println!("{}", json(&out)?);
            if !out.passed {
                return Err(Failure::NotConverged("certificate check failed".into()));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::NotConverged(msg)) => {
            eprintln!("balm: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("balm: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
