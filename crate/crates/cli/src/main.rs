//! `ultri`: simulate unlabeled length measurements, reconstruct the point
//! configuration behind them, and check the result against ground truth.

use std::fs;
use std::path::{Path as FsPath, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ultri::geometry::{Configuration, DEFAULT_TOL};
use ultri::io::{from_json, render_svg, to_json, ExperimentSpec};
use ultri::measurement::{DataSet, Mode};
use ultri::reconstruct::{reconstruct, verify, ReconstructionOptions};
use ultri::relation::{RankStrategy, DEFAULT_RELATION_TOL};
use ultri::Error;

const EXIT_UNMATCHED: u8 = 1;
const EXIT_NO_BASE: u8 = 2;
const EXIT_MALFORMED: u8 = 3;
const EXIT_INVALID_SPEC: u8 = 4;

#[derive(Parser)]
#[command(name = "ultri", version, about = "Reconstruct point sets from unlabeled path and loop lengths")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a configuration, a trilaterating ensemble and its shuffled measurements.
    Gen(GenArgs),
    /// Recover a configuration from a data set.
    Reconstruct(ReconstructArgs),
    /// Compare a recovered configuration with the truth up to congruence and integer scale.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    points: usize,
    #[arg(long, value_parser = parse_mode)]
    mode: Mode,
    /// Number of random distractor walks.
    #[arg(long, default_value_t = 0)]
    extra: usize,
    /// Longest distractor walk, in edges.
    #[arg(long, default_value_t = 4)]
    max_hops: usize,
    #[arg(long, default_value_t = 0)]
    seed_config: u64,
    #[arg(long, default_value_t = 0)]
    seed_ensemble: u64,
    #[arg(long, default_value_t = 0)]
    seed_shuffle: u64,
    /// Traverse every walk this many times.
    #[arg(long, default_value_t = 1)]
    scale: u32,
    /// Recorded in spec.json for the reconstruction step.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long, value_parser = parse_strategy, default_value = "brute")]
    rank_strategy: RankStrategy,
    /// Output directory for dataset.json, truth.json, ensemble.json and spec.json.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct ReconstructArgs {
    dataset: PathBuf,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long, value_parser = parse_strategy, default_value = "brute")]
    rank_strategy: RankStrategy,
    /// Override the multiplicity bound declared in the data set.
    #[arg(long)]
    bound: Option<u32>,
    /// Assert the data are pings and triangles through one root (needed by `distinct`).
    #[arg(long)]
    assume_restricted: bool,
    /// Output directory for configuration.json and labeling.json.
    #[arg(long, short)]
    out: PathBuf,
    /// Also write an SVG scatter plot (planar data only).
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    truth: PathBuf,
    recovered: PathBuf,
    /// Relative tolerance on every pairwise length.
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    /// Largest integer scale to try.
    #[arg(long, default_value_t = 16)]
    max_scale: u32,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_strategy(s: &str) -> Result<RankStrategy, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// A failure with its exit code.
struct Failure(u8, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NoBaseFound => EXIT_NO_BASE,
            Error::InvalidSpec(_) | Error::UnsupportedDimension(_) | Error::AssumptionRequired => EXIT_INVALID_SPEC,
            _ => EXIT_MALFORMED,
        };
        Failure(code, e.to_string())
    }
}

fn read_json<T: for<'de> serde::Deserialize<'de>>(path: &FsPath) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure(EXIT_MALFORMED, format!("{}: {e}", path.display())))?;
    from_json(&text).map_err(|e| Failure(EXIT_MALFORMED, format!("{}: {e}", path.display())))
}

fn write_file(path: &FsPath, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure(EXIT_MALFORMED, format!("{}: {e}", path.display())))
}

fn create_dir(dir: &FsPath) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure(EXIT_MALFORMED, format!("{}: {e}", dir.display())))
}

fn cmd_gen(a: GenArgs) -> Result<(), Failure> {
    let spec = ExperimentSpec {
        n: a.points,
        d: a.dim,
        mode: a.mode,
        extra_distractors: a.extra,
        max_hops: a.max_hops,
        seed_config: a.seed_config,
        seed_ensemble: a.seed_ensemble,
        seed_shuffle: a.seed_shuffle,
        scale: a.scale,
        tol: a.tol,
        b_strategy: a.rank_strategy,
    };
    let exp = spec.generate()?;
    create_dir(&a.out)?;
    write_file(&a.out.join("spec.json"), &to_json(&spec)?)?;
    write_file(&a.out.join("dataset.json"), &to_json(&exp.dataset)?)?;
    write_file(&a.out.join("truth.json"), &to_json(&exp.truth)?)?;
    write_file(&a.out.join("ensemble.json"), &to_json(&exp.ensemble)?)?;
    println!(
        "wrote {} values ({} points, d={}, {} mode, bound {}) to {}",
        exp.dataset.len(),
        spec.n,
        spec.d,
        spec.mode,
        exp.dataset.bound,
        a.out.display()
    );
    Ok(())
}

fn cmd_reconstruct(a: ReconstructArgs) -> Result<(), Failure> {
    let data: DataSet = read_json(&a.dataset)?;
    if a.plot.is_some() && data.dim != 2 {
        return Err(Failure(
            EXIT_INVALID_SPEC,
            format!("--plot needs planar data, this data set has d={}", data.dim),
        ));
    }
    if !(a.tol.is_finite() && a.tol > 0.0) {
        return Err(Failure(EXIT_INVALID_SPEC, format!("--tol must be positive, got {}", a.tol)));
    }
    let opts = ReconstructionOptions {
        tol: a.tol,
        relation_tol: DEFAULT_RELATION_TOL,
        strategy: a.rank_strategy,
        assume_restricted: a.assume_restricted,
        bound: a.bound,
    };
    let result = reconstruct(&data, &opts)?;
    create_dir(&a.out)?;
    write_file(&a.out.join("configuration.json"), &to_json(&result.configuration)?)?;
    write_file(&a.out.join("labeling.json"), &to_json(&result.labeling)?)?;
    if let Some(plot) = &a.plot {
        write_file(plot, &render_svg(&result.configuration, &result.labeling)?)?;
    }
    println!(
        "recovered {} points explaining {} of {} values (certificate residual {:.2e})",
        result.configuration.len(),
        result.explained_count,
        data.len(),
        result.certificate_residual(&data)?
    );
    Ok(())
}

fn cmd_verify(a: VerifyArgs) -> Result<(), Failure> {
    let truth: Configuration = read_json(&a.truth)?;
    let recovered: Configuration = read_json(&a.recovered)?;
    let report = verify(&truth, &recovered, a.tol, a.max_scale)?;
    if report.matched {
        println!(
            "matched: {} of {} points, scale s={}, max residual {:.3e}",
            recovered.len(),
            truth.len(),
            report.scale,
            report.max_residual
        );
        Ok(())
    } else {
        println!("unmatched: no relabeling and scale up to {} within tol {:e}", a.max_scale, a.tol);
        Err(Failure(EXIT_UNMATCHED, String::new()))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Reconstruct(a) => cmd_reconstruct(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, msg)) => {
            if !msg.is_empty() {
                eprintln!("error: {msg}");
            }
            ExitCode::from(code)
        }
    }
}
