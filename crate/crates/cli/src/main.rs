#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use memfun_core::functionals::{FunctionalOptions, MemoryFunctional};
use memfun_core::kernels::{classify, ClassifyTolerances};
use memfun_core::sensitivity::{verify_axioms, ProbePlan};
use memfun_core::verify::{run_suite, VerificationConfig};
use memfun_core::Error;

mod config;

use config::RunConfig;

const EXIT_FAILURES: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Parser)]
#[command(name = "memfun", version, about = "Memory kernels, adaptive sensitivities and the memory functional S")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute S(f) and write the report.
    Eval(Common),
    /// Classify a kernel into the mathematical, regular and generalized classes.
    ClassifyKernel(Common),
    /// Check the sensitivity axioms, or P1-P4 for history-dependent models.
    VerifySensitivity(Common),
    /// Run the verification suite.
    Verify(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Grid points (odd, at least 3).
    #[arg(long)]
    grid: Option<usize>,
    /// Relative quadrature tolerance.
    #[arg(long)]
    tol: Option<f64>,
}

enum Failure {
    Error(Error),
    Verification(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

type Outcome = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(n) = std::env::var("MEMFUN_THREADS") {
        match n.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: MEMFUN_THREADS must be a positive integer, got {n:?}");
                return ExitCode::from(EXIT_CONFIG);
            }
        }
    }
    let outcome = match &cli.command {
        Command::Eval(c) => cmd_eval(c),
        Command::ClassifyKernel(c) => cmd_classify_kernel(c),
        Command::VerifySensitivity(c) => cmd_verify_sensitivity(c),
        Command::Verify(c) => cmd_verify(c),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification(n)) => {
            eprintln!("{n} verification failure(s)");
            ExitCode::from(EXIT_FAILURES)
        }
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::NonConvergence { .. } => EXIT_NUMERIC,
                _ => EXIT_CONFIG,
            })
        }
    }
}

fn run_config(c: &Common) -> Result<RunConfig, Error> {
    let path = c
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config is required".into()))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(n) = c.grid {
        cfg.grid_points = n;
    }
    if let Some(t) = c.tol {
        cfg.rel_tol = t;
    }
    if c.out.is_some() {
        cfg.out = c.out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_out(dir: &Path, name: &str, contents: &str) -> Result<(), Error> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), contents)?;
    Ok(())
}

fn json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn cmd_eval(c: &Common) -> Outcome {
    let cfg = run_config(c)?;
    let domain = cfg.domain()?;
    let f = cfg.trajectory(&domain)?;
    let kernel = cfg.kernel_spec()?.build(&domain)?;
    let lam = cfg.sensitivity_spec()?.build(&domain)?;
    let opts = FunctionalOptions {
        rel_tol: cfg.rel_tol,
        fast_path: cfg.fast_path,
        ..Default::default()
    };
    let report = MemoryFunctional::new(&f, &kernel, &lam, opts)?.report()?;
    println!("S = {:.16e}", report.s_value);
    println!("sup_norm_f = {:.16e}", report.sup_norm_f);
    println!("upper_bound = {:.16e}", report.upper_bound);
    println!("argmax_t = {:.16e}", report.argmax_t);
    if report.operator_sensitivity_mode {
        println!("operator-sensitivity mode: comparison bounds are empirical");
    }
    if let Some(dir) = &cfg.out {
        write_out(dir, "report.json", &json(&report))?;
        if cfg.plot {
            write_out(dir, "plot.csv", &report.plot_csv())?;
        }
    }
    Ok(())
}

fn cmd_classify_kernel(c: &Common) -> Outcome {
    let cfg = run_config(c)?;
    let domain = cfg.domain()?;
    let kernel = cfg.kernel_spec()?.build(&domain)?;
    let report = classify(&kernel, &ClassifyTolerances::default());
    println!("kernel = {}", report.kernel);
    println!("math = {}", report.class_math);
    println!("regular = {}", report.class_regular);
    println!("generalized = {}", report.class_generalized);
    for f in &report.failures {
        println!("failed {:?}: {}", f.condition, f.message);
    }
    if let Some(dir) = &cfg.out {
        write_out(dir, "classification.json", &json(&report))?;
    }
    Ok(())
}

fn cmd_verify_sensitivity(c: &Common) -> Outcome {
    let cfg = run_config(c)?;
    let domain = cfg.domain()?;
    let spec = cfg.sensitivity_spec()?;
    let model = spec.build(&domain)?;
    if model.is_operator() {
        let suite = VerificationConfig {
            horizon: domain.horizon(),
            grid_points: cfg.grid_points,
            rel_tol: cfg.rel_tol,
            sensitivities: vec![spec.clone()],
            entries: Some(
                ["P1", "P2", "P3", "P4"]
                    .iter()
                    .map(|p| format!("theorem.induced_sensitivity.{p}"))
                    .collect(),
            ),
            ..Default::default()
        };
        let report = run_suite(&suite, c.seed)?;
        let entries: Vec<_> = report
            .entries
            .iter()
            .filter(|e| e.theorem_id.starts_with("theorem.induced_sensitivity"))
            .collect();
        for e in &entries {
            println!("{} trials={} failures={} worst_margin={:.16e}", e.theorem_id, e.trials, e.failures, e.worst_margin);
        }
        if let Some(dir) = &cfg.out {
            write_out(dir, "sensitivity.json", &json(&entries))?;
        }
        let failures: usize = entries.iter().map(|e| e.failures).sum();
        return if failures == 0 { Ok(()) } else { Err(Failure::Verification(failures)) };
    }
    let plan = ProbePlan {
        seed: c.seed,
        ..Default::default()
    };
    let record = verify_axioms(&model, &domain, &plan)?;
    for a in &record.axioms {
        println!(
            "{} {} worst_margin={:.16e}",
            a.axiom,
            if a.passed { "pass" } else { "FAIL" },
            a.worst_margin
        );
        if let Some(w) = &a.witness {
            println!("  witness: {w}");
        }
    }
    if let Some(dir) = &cfg.out {
        write_out(dir, "sensitivity.json", &json(&record))?;
    }
    let failures = record.axioms.iter().filter(|a| !a.passed).count();
    if failures == 0 {
        Ok(())
    } else {
        Err(Failure::Verification(failures))
    }
}

fn cmd_verify(c: &Common) -> Outcome {
    let mut cfg = match &c.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
            VerificationConfig::from_json(&text)?
        }
        None => VerificationConfig::default(),
    };
    if let Some(n) = c.grid {
        cfg.grid_points = n;
    }
    if let Some(t) = c.tol {
        cfg.rel_tol = t;
    }
    let report = run_suite(&cfg, c.seed)?;
    for e in &report.entries {
        println!(
            "{:<48} trials={:<4} failures={:<3} worst_margin={:.16e}",
            e.theorem_id, e.trials, e.failures, e.worst_margin
        );
    }
    if let Some(dir) = &c.out {
        write_out(dir, "verification.json", &json(&report))?;
    }
    match report.total_failures() {
        0 => Ok(()),
        n => Err(Failure::Verification(n)),
    }
}
