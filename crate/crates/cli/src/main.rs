use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use minkowski_core::selftest;
use minkowski_verify::exec::{workers_from_env, Parallel};
use minkowski_verify::{catalog, parse_levels, parse_sweep, read_scene, verify, CliError, Overrides};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "minkowski",
    version,
    about = "Curvature engine and integral-identity verifier"
)]
#[command(
    after_help = "Worker threads: set MINKOWSKI_WORKERS (default: all cores).\nExit codes: 0 pass, 1 identity failure or gate violation, 2 configuration error."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(clap::Args)]
struct RunFlags {
    /// Quadrature levels: `16,32,64` or per-axis `16x32;32x64`.
    #[arg(long)]
    levels: Option<String>,
    /// Relative residual tolerance for a pass.
    #[arg(long)]
    tol: Option<f64>,
    /// Seed for random_polynomial fields.
    #[arg(long)]
    seed: Option<u64>,
    /// Reverse the unit normal.
    #[arg(long)]
    flip_normal: bool,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// List manifolds, surfaces, fields and identities.
    Catalog {
        /// Only identities and their gates.
        #[arg(long)]
        identities: bool,
        #[arg(long)]
        json: bool,
    },
    /// Run a scene file through every configured level.
    Verify {
        scene: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Run the invariant battery.
    Selftest {
        /// Restrict to one or more suites.
        #[arg(long)]
        suite: Vec<String>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Random draws per suite.
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
    /// Re-run a scene across a parameter range.
    Sweep {
        scene: PathBuf,
        /// `key=start:stop:steps`, e.g. `surface.a2=1.0:2.0:5`.
        #[arg(long)]
        param: String,
        #[command(flatten)]
        flags: RunFlags,
    },
}

fn overrides(f: &RunFlags) -> Result<Overrides, CliError> {
    Ok(Overrides {
        levels: f.levels.as_deref().map(parse_levels).transpose()?,
        tol: f.tol,
        seed: f.seed,
        flip_normal: f.flip_normal,
    })
}

fn emit(text: &str, out: &Option<PathBuf>) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|source| CliError::Io {
            path: p.display().to_string(),
            source,
        }),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(text.as_bytes()).ok();
            Ok(())
        }
    }
}

fn cmd_verify(path: &Path, flags: &RunFlags) -> Result<i32, CliError> {
    let (src, mut file) = read_scene(path)?;
    let notes = overrides(flags)?.apply(&mut file);
    let workers = workers_from_env();
    let exec = Parallel::new(workers);
    let report = verify(
        &file,
        &src,
        Some(&path.display().to_string()),
        notes,
        &exec,
        exec.workers(),
    )?;
    let text = match flags.format {
        Format::Json => report.to_json(),
        Format::Table => report.to_table(),
    };
    emit(&text, &flags.out)?;
    Ok(report.exit_code)
}

#[derive(Serialize)]
struct SweepOut {
    param: String,
    values: Vec<f64>,
    passed: bool,
    reports: Vec<minkowski_verify::report::Report>,
}

fn cmd_sweep(path: &Path, param: &str, flags: &RunFlags) -> Result<i32, CliError> {
    let (src, mut base) = read_scene(path)?;
    let (key, values) = parse_sweep(param)?;
    let notes = overrides(flags)?.apply(&mut base);
    base.clone().set_param(&key, values[0])?;
    let workers = workers_from_env();
    let exec = Parallel::new(workers);
    let mut reports = Vec::new();
    for &v in &values {
        let mut f = base.clone();
        f.set_param(&key, v)?;
        let mut n = notes.clone();
        n.push(format!("{key} = {v}"));
        reports.push(verify(
            &f,
            &src,
            Some(&path.display().to_string()),
            n,
            &exec,
            exec.workers(),
        )?);
    }
    let passed = reports.iter().all(|r| r.passed);
    let text = match flags.format {
        Format::Json => {
            let out = SweepOut {
                param: key,
                values,
                passed,
                reports,
            };
            let mut s = serde_json::to_string_pretty(&out).expect("serializes");
            s.push('\n');
            s
        }
        Format::Table => {
            let mut s = format!(
                "{:<14} {:<6} {:>14} {:>12} {:>12}\n",
                key, "result", "max top rel", "std H1", "std H2"
            );
            for (v, r) in values.iter().zip(&reports) {
                let worst = r
                    .identities
                    .iter()
                    .filter_map(|i| i.top_relative)
                    .fold(0.0f64, f64::max);
                let (h1, h2) = r
                    .classification
                    .as_ref()
                    .map(|c| (format!("{:.3e}", c.std_h1), format!("{:.3e}", c.std_h2)))
                    .unwrap_or(("-".into(), "-".into()));
                s.push_str(&format!(
                    "{:<14} {:<6} {:>14.3e} {:>12} {:>12}\n",
                    format!("{v}"),
                    if r.passed { "pass" } else { "FAIL" },
                    worst,
                    h1,
                    h2
                ));
            }
            s
        }
    };
    emit(&text, &flags.out)?;
    Ok(if passed { 0 } else { 1 })
}

fn cmd_selftest(suites: &[String], seed: u64, samples: usize) -> Result<i32, CliError> {
    let only: Vec<&str> = suites.iter().map(String::as_str).collect();
    let reports = selftest::run(seed, &only, samples).map_err(CliError::Config)?;
    println!("selftest seed {seed}, {samples} draws per suite");
    println!("{:<12} {:>7} {:>12}  result", "suite", "checks", "worst/tol");
    let mut ok = true;
    for r in &reports {
        println!(
            "{:<12} {:>7} {:>12.3e}  {}",
            r.name,
            r.checks,
            r.worst_ratio,
            if r.passed() { "green" } else { "RED" }
        );
        for f in &r.failures {
            println!("    {f}");
        }
        ok &= r.passed();
    }
    Ok(if ok { 0 } else { 1 })
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Catalog { identities, json } => {
            let c = catalog::catalog();
            if json {
                println!("{}", serde_json::to_string_pretty(&c).expect("serializes"));
            } else {
                print!("{}", catalog::render(&c, identities));
            }
            Ok(0)
        }
        Command::Verify { scene, flags } => cmd_verify(&scene, &flags),
        Command::Selftest { suite, seed, samples } => cmd_selftest(&suite, seed, samples),
        Command::Sweep { scene, param, flags } => cmd_sweep(&scene, &param, &flags),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            e.print().ok();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
