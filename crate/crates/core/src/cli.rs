//! The `aitv` command-line tool.
//!
//! Exit codes: 0 success, 1 solver failure, 2 usage or validation error,
//! 3 I/O error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench::{load_corpus, run_bench, BenchConfig};
use crate::error::{Error, Result};
use crate::fixtures;
use crate::image::Image;
use crate::io::{read_image, write_image, write_preview};
use crate::manifest::{RunManifest, RunSummary};
use crate::metrics::{line_profile, write_profile_csv, QualityReport};
use crate::noise::{corrupt_at_peak, NoiseSpec};
use crate::solver::{admm_solve, Regularizer, SolverConfig};
use crate::sweep::{run_sweep, Selection, SweepGrid, DEFAULT_ALPHAS, DEFAULT_LAMBDAS};

pub const EXIT_SOLVER: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_IO: u8 = 3;

/// Environment variable that overrides `--jobs`.
pub const THREADS_ENV: &str = "AITV_THREADS";

#[derive(Debug, Parser)]
#[command(name = "aitv", version, about = "Poisson denoising with anisotropic-isotropic total variation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rescale a clean image to a peak value and corrupt it with Poisson noise.
    Noise(NoiseArgs),
    /// Denoise a Poisson-corrupted image.
    Denoise(DenoiseArgs),
    /// Re-run a denoise recorded in a manifest.
    Replay(ReplayArgs),
    /// PSNR and SSIM of an estimate against a reference, as JSON.
    Metrics(MetricsArgs),
    /// Solve every cell of a parameter grid and keep the best.
    Sweep(SweepArgs),
    /// Corrupt, tune and score a directory of images at several peaks.
    Bench(BenchArgs),
    /// Export one image row as CSV.
    Profile(ProfileArgs),
    /// Write the synthetic test images as 8-bit PNGs.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Aitv,
    Tv,
}

impl From<Method> for Regularizer {
    fn from(m: Method) -> Self {
        match m {
            Method::Aitv => Regularizer::Aitv,
            Method::Tv => Regularizer::TvIsotropic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SelectBy {
    Psnr,
    Ssim,
}

#[derive(Debug, Args)]
pub struct NoiseArgs {
    pub input: PathBuf,
    #[arg(long)]
    pub peak: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Noisy output; `.png`/`.pgm` give 8-bit previews, anything else the flat float format.
    #[arg(short, long)]
    pub output: PathBuf,
    /// Rescaled clean reference. Defaults to `<output stem>.clean.aitv` next to the output.
    #[arg(long)]
    pub clean_output: Option<PathBuf>,
}

#[derive(Debug, Args, Clone)]
pub struct SolverArgs {
    #[arg(long, value_enum, default_value_t = Method::Aitv)]
    pub method: Method,
    #[arg(long, default_value_t = 10.0)]
    pub lambda: f64,
    /// AITV weight in [0, 1] (default 0.5); ignored by `--method tv`.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = 1e-3)]
    pub beta0: f64,
    #[arg(long, default_value_t = 1.75)]
    pub sigma: f64,
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
    #[arg(long, default_value_t = 300)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e12)]
    pub beta_cap: f64,
}

impl SolverArgs {
    pub fn config(&self) -> SolverConfig {
        if self.method == Method::Tv && self.alpha.is_some() {
            eprintln!("warning: --alpha has no effect with --method tv");
        }
        SolverConfig {
            lambda: self.lambda,
            alpha: self.alpha.unwrap_or(SolverConfig::default().alpha),
            beta0: self.beta0,
            sigma: self.sigma,
            epsilon: self.tol,
            max_iters: self.max_iters,
            regularizer: self.method.into(),
            beta_cap: self.beta_cap,
        }
    }
}

#[derive(Debug, Args)]
pub struct DenoiseArgs {
    pub input: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Denoised image in the flat float format (or an 8-bit preview for `.png`/`.pgm`).
    #[arg(short, long)]
    pub output: PathBuf,
    /// 8-bit preview; defaults to the output path with a `.png` extension.
    #[arg(long)]
    pub preview: Option<PathBuf>,
    /// Manifest path; defaults to `<output>.manifest.json`.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// `L` for the preview scaling; defaults to the maximum of the input.
    #[arg(long)]
    pub dynamic_range: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Write here instead of the manifest's output path.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    pub denoised: PathBuf,
    pub clean: PathBuf,
    /// Defaults to the maximum of the clean image (the peak for rescaled references).
    #[arg(long)]
    pub dynamic_range: Option<f64>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    pub noisy: PathBuf,
    pub clean: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_LAMBDAS.to_vec())]
    pub lambdas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_ALPHAS.to_vec())]
    pub alphas: Vec<f64>,
    #[arg(long, value_enum, default_value_t = SelectBy::Psnr)]
    pub select: SelectBy,
    #[arg(long)]
    pub dynamic_range: Option<f64>,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    pub corpus_dir: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = vec![80.0, 55.0, 30.0])]
    pub peaks: Vec<f64>,
    #[arg(long, value_delimiter = ',', value_enum, default_values_t = vec![Method::Aitv, Method::Tv])]
    pub methods: Vec<Method>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_LAMBDAS.to_vec())]
    pub lambdas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_ALPHAS.to_vec())]
    pub alphas: Vec<f64>,
    #[arg(long, value_enum, default_value_t = SelectBy::Psnr)]
    pub select: SelectBy,
    #[arg(long, default_value_t = 300)]
    pub max_iters: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    pub image: PathBuf,
    /// 1-based row number; row `r` is index `r - 1`.
    #[arg(long)]
    pub row: usize,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 64)]
    pub size: usize,
}

pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::NonFiniteIterate { .. } | Error::NonNegligibleImaginary { .. } => EXIT_SOLVER,
        Error::Io(_) => EXIT_IO,
        _ => EXIT_USAGE,
    }
}

fn jobs(flag: usize) -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .unwrap_or(flag)
        .max(1)
}

fn selection(s: SelectBy) -> Selection {
    match s {
        SelectBy::Psnr => Selection::BestPsnr,
        SelectBy::Ssim => Selection::BestSsim,
    }
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Noise(a) => cmd_noise(&a),
        Command::Denoise(a) => cmd_denoise(&a).map(|_| ()),
        Command::Replay(a) => cmd_replay(&a),
        Command::Metrics(a) => cmd_metrics(&a).map(|_| ()),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Bench(a) => cmd_bench(&a),
        Command::Profile(a) => cmd_profile(&a),
        Command::Synth(a) => cmd_synth(&a),
    }
}

/// Parses arguments, runs, and maps errors to exit codes.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

pub fn cmd_noise(a: &NoiseArgs) -> Result<()> {
    let g = read_image(&a.input)?;
    let spec = NoiseSpec { peak: a.peak, seed: a.seed };
    let (clean, noisy) = corrupt_at_peak(&g, &spec)?;
    let clean_path = a.clean_output.clone().unwrap_or_else(|| {
        let stem = a.output.file_stem().and_then(|s| s.to_str()).unwrap_or("noisy");
        a.output.with_file_name(format!("{stem}.clean.aitv"))
    });
    write_image(&a.output, &noisy, a.peak)?;
    write_image(&clean_path, &clean, a.peak)?;
    Ok(())
}

fn denoise_to(
    input: &Path,
    config: &SolverConfig,
    output: &Path,
    preview: &Path,
    dynamic_range: Option<f64>,
) -> Result<RunManifest> {
    let f = read_image(input)?;
    let result = admm_solve(&f, config)?;
    let l = dynamic_range.unwrap_or_else(|| f.max().max(f64::MIN_POSITIVE));
    write_image(output, &result.u_star, l)?;
    write_preview(preview, &result.u_star, l)?;
    Ok(RunManifest {
        version: env!("CARGO_PKG_VERSION").into(),
        input: input.to_path_buf(),
        clean: None,
        noise: None,
        solver: *config,
        dynamic_range: l,
        output: output.to_path_buf(),
        preview: Some(preview.to_path_buf()),
        run: RunSummary::from_result(&result),
    })
}

pub fn cmd_denoise(a: &DenoiseArgs) -> Result<RunManifest> {
    let config = a.solver.config();
    config.validate()?;
    let preview = a.preview.clone().unwrap_or_else(|| a.output.with_extension("png"));
    let manifest_path = a.manifest.clone().unwrap_or_else(|| with_suffix(&a.output, ".manifest.json"));
    let manifest = denoise_to(&a.input, &config, &a.output, &preview, a.dynamic_range)?;
    manifest.save(&manifest_path)?;
    println!(
        "{} iterations ({}), {:.3} s",
        manifest.run.iterations,
        if manifest.run.converged { "converged" } else { "iteration cap" },
        manifest.run.wall_time_s
    );
    Ok(manifest)
}

pub fn cmd_replay(a: &ReplayArgs) -> Result<()> {
    let m = RunManifest::load(&a.manifest)?;
    let output = a.output.clone().unwrap_or_else(|| m.output.clone());
    let preview = match (&a.output, &m.preview) {
        (None, Some(p)) => p.clone(),
        _ => output.with_extension("png"),
    };
    denoise_to(&m.input, &m.solver, &output, &preview, Some(m.dynamic_range))?;
    Ok(())
}

pub fn cmd_metrics(a: &MetricsArgs) -> Result<QualityReport> {
    let u = read_image(&a.denoised)?;
    let g = read_image(&a.clean)?;
    let l = a.dynamic_range.unwrap_or_else(|| g.max());
    let report = QualityReport::compute(&u, &g, l)?;
    let json = serde_json::to_string_pretty(&report)?;
    match &a.output {
        Some(p) => std::fs::write(p, json + "\n")?,
        None => println!("{json}"),
    }
    Ok(report)
}

pub fn cmd_sweep(a: &SweepArgs) -> Result<()> {
    let noisy = read_image(&a.noisy)?;
    let clean = read_image(&a.clean)?;
    let base = a.solver.config();
    base.validate()?;
    let grid = SweepGrid {
        lambdas: a.lambdas.clone(),
        alphas: a.alphas.clone(),
        selection: selection(a.select),
    };
    let l = a.dynamic_range.unwrap_or_else(|| clean.max());
    let outcome = run_sweep(&noisy, &clean, &grid, &base, a.solver.method.into(), l, jobs(a.jobs))?;
    std::fs::create_dir_all(&a.out_dir)?;
    std::fs::write(a.out_dir.join("sweep.csv"), outcome.to_csv())?;
    if let (Some(config), Some(result)) = (&outcome.best_config, &outcome.best_result) {
        let output = a.out_dir.join("best.aitv");
        let preview = a.out_dir.join("best.png");
        write_image(&output, &result.u_star, l)?;
        write_preview(&preview, &result.u_star, l)?;
        let manifest = RunManifest {
            version: env!("CARGO_PKG_VERSION").into(),
            input: a.noisy.clone(),
            clean: Some(a.clean.clone()),
            noise: None,
            solver: *config,
            dynamic_range: l,
            output,
            preview: Some(preview),
            run: RunSummary::from_result(result),
        };
        manifest.save(&a.out_dir.join("best.manifest.json"))?;
        let best = outcome.best_cell().expect("best cell exists with a result");
        println!(
            "best: lambda {} alpha {} -> PSNR {:.3} dB, SSIM {:.4}",
            best.lambda,
            best.alpha.map_or("-".into(), |v| v.to_string()),
            best.psnr_db,
            best.ssim
        );
    } else {
        eprintln!("warning: every sweep cell failed");
    }
    Ok(())
}

pub fn cmd_bench(a: &BenchArgs) -> Result<()> {
    let corpus = load_corpus(&a.corpus_dir)?;
    let config = BenchConfig {
        peaks: a.peaks.clone(),
        methods: a.methods.iter().map(|&m| m.into()).collect(),
        seed: a.seed,
        grid: SweepGrid {
            lambdas: a.lambdas.clone(),
            alphas: a.alphas.clone(),
            selection: selection(a.select),
        },
        solver: SolverConfig {
            max_iters: a.max_iters,
            ..SolverConfig::default()
        },
        jobs: jobs(a.jobs),
    };
    let report = run_bench(&corpus, &config)?;
    report.write_to(&a.out_dir)?;
    print!("{}", report.timing_csv());
    Ok(())
}

pub fn cmd_profile(a: &ProfileArgs) -> Result<()> {
    let img = read_image(&a.image)?;
    let index = a.row.checked_sub(1).ok_or(Error::RowOutOfRange {
        row: 0,
        rows: img.rows(),
    })?;
    let profile = line_profile(&img, index)?;
    let mut buf = Vec::new();
    write_profile_csv(&mut buf, &profile)?;
    std::fs::write(&a.output, buf)?;
    Ok(())
}

pub fn cmd_synth(a: &SynthArgs) -> Result<()> {
    std::fs::create_dir_all(&a.out_dir)?;
    let images: [(&str, Image); 2] = [
        ("oblique", fixtures::oblique_edge(a.size, a.size)),
        ("disc_bar", fixtures::disc_and_bar(a.size, a.size)),
    ];
    for (name, img) in images {
        write_preview(&a.out_dir.join(format!("{name}.png")), &img, 1.0)?;
    }
    Ok(())
}
