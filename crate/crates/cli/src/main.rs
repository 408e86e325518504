use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use thermistor_core::config::load_config;
use thermistor_core::constitutive::{ConstitutiveSpec, Profile};
use thermistor_core::io::format_f64;
use thermistor_core::pipeline::{run_pipeline, uniform_decay_reference};
use thermistor_core::studies::{decay_study, potential_study, DecaySetup, StudyRow};
use thermistor_core::suites::Suite;

/// Simulate and verify a p-Laplacian thermistor model.
#[derive(Debug, Parser)]
#[command(name = "thermistor", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the eps-continuation study for a configuration file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to `output.dir` of the config, then `out`.
        #[arg(long, env = "THERMISTOR_OUT")]
        out: Option<PathBuf>,
    },
    /// Run a seeded property suite.
    Check {
        /// monotonicity, h1, interpolation or phipsi
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the current-voltage characteristic as CSV (columns V, I).
    IvCurve {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        sigma0: f64,
        #[arg(long)]
        vmax: f64,
        #[arg(long)]
        steps: usize,
        /// Temperature at which sigma0 is evaluated.
        #[arg(long, default_value_t = 0.0)]
        u: f64,
    },
    /// Mesh and time refinement study on the built-in manufactured cases.
    Converge {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
}

fn run(config: PathBuf, out: Option<PathBuf>) -> Result<bool> {
    let cfg = load_config(&config)?;
    let out = out
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let outputs = run_pipeline(&cfg, &out).with_context(|| format!("running {}", config.display()))?;
    for row in &outputs.continuation.ledger.rows {
        match &row.failure {
            None => println!("eps = {:e}: ok", row.eps),
            Some(msg) => println!("eps = {:e}: FAILED {msg}", row.eps),
        }
    }
    print!("{}", outputs.verification);
    if let Some((exact, bound)) = uniform_decay_reference(&cfg) {
        println!("uniform decay reference {exact:.6e}, error bound {bound:.6e}");
    }
    println!("wrote {} files to {}", outputs.files.len(), out.display());
    println!("overall: {}", if outputs.passed() { "PASS" } else { "FAIL" });
    Ok(outputs.passed())
}

fn check(suite: &str, samples: usize, seed: u64) -> Result<bool> {
    let Some(suite) = Suite::parse(suite) else {
        bail!("unknown suite '{suite}' (expected monotonicity, h1, interpolation or phipsi)");
    };
    let report = suite.run(samples, seed);
    print!("{report}");
    println!("overall: {}", if report.passed() { "PASS" } else { "FAIL" });
    Ok(report.passed())
}

fn iv_curve(p: f64, delta: f64, sigma0: f64, vmax: f64, steps: usize, u: f64) -> Result<bool> {
    if steps == 0 || !(vmax >= 0.0) {
        bail!("need steps >= 1 and vmax >= 0");
    }
    let spec = ConstitutiveSpec {
        p,
        delta,
        sigma0: Profile::Constant(sigma0),
        ..ConstitutiveSpec::ohmic(sigma0, 1.0, 0.0, 1.0, 0.0)
    };
    spec.validate()?;
    println!("V,I");
    for k in 0..=steps {
        let v = vmax * k as f64 / steps as f64;
        let i = spec.iv_characteristic(u, v)?;
        println!("{},{}", format_f64(v), format_f64(i));
    }
    Ok(true)
}

fn converge(config: PathBuf, levels: usize) -> Result<bool> {
    if levels < 2 {
        bail!("need at least 2 levels");
    }
    let cfg = load_config(&config)?;
    let base_n = cfg.mesh.nx.max(2);
    let mut rows: Vec<StudyRow> = Vec::new();
    rows.extend(potential_study(2.0, base_n, levels)?);
    rows.extend(potential_study(3.0, base_n, levels)?);
    let setup = DecaySetup {
        n: base_n,
        lx: cfg.mesh.lx,
        ly: cfg.mesh.ly,
        g: cfg.constitutive.g,
        h: cfg.constitutive.h,
        t_final: cfg.coupling.t_final,
        ..DecaySetup::default()
    };
    rows.extend(decay_study(&setup, cfg.coupling.steps, levels)?);
    println!("{}", StudyRow::CSV_HEADER);
    for r in &rows {
        println!(
            "{},{},{},{},{},{},{}",
            r.case,
            r.level,
            format_f64(r.h),
            format_f64(r.dt),
            format_f64(r.max_error),
            format_f64(r.grad_error),
            format_f64(r.rate)
        );
    }
    Ok(rows.iter().all(|r| r.max_error.is_finite()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out } => run(config, out),
        Command::Check { suite, samples, seed } => check(&suite, samples, seed),
        Command::IvCurve { p, delta, sigma0, vmax, steps, u } => iv_curve(p, delta, sigma0, vmax, steps, u),
        Command::Converge { config, levels } => converge(config, levels),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
