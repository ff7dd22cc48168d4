//! Corpus benchmark: corrupt every image at every peak, tune each method on
//! the parameter grid, and tabulate the best scores and solve times.
//!
//! Each `(image, peak)` scenario is corrupted with seed
//! `seed ^ fnv1a64("{name}@{peak}")`, where `name` is the file stem and
//! `peak` uses Rust's shortest `f64` display (`30`, `55.5`).

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::io::read_image;
use crate::metrics::{psnr, ssim};
use crate::noise::{corrupt_at_peak, NoiseSpec};
use crate::solver::{Regularizer, SolverConfig};
use crate::sweep::{fmt_num, run_sweep, SweepGrid};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

pub fn scenario_seed(seed: u64, name: &str, peak: f64) -> u64 {
    seed ^ fnv1a64(format!("{name}@{peak}").as_bytes())
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub peaks: Vec<f64>,
    pub methods: Vec<Regularizer>,
    pub seed: u64,
    pub grid: SweepGrid,
    /// Template for every solve; `lambda`, `alpha` and `regularizer` are
    /// overridden per cell.
    pub solver: SolverConfig,
    pub jobs: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            peaks: vec![80.0, 55.0, 30.0],
            methods: vec![Regularizer::Aitv, Regularizer::TvIsotropic],
            seed: 0,
            grid: SweepGrid::default(),
            solver: SolverConfig::default(),
            jobs: 1,
        }
    }
}

/// Best-over-grid outcome for one `(image, peak, method)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub image: String,
    pub peak: f64,
    /// `"noisy"` for the unprocessed observation, otherwise the method name.
    pub method: String,
    pub seed: u64,
    pub lambda: Option<f64>,
    pub alpha: Option<f64>,
    pub psnr_db: f64,
    pub ssim: f64,
    pub iterations: usize,
    /// Wall time of the selected solve.
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Default)]
pub struct BenchReport {
    pub images: Vec<String>,
    pub peaks: Vec<f64>,
    pub methods: Vec<String>,
    pub records: Vec<BenchRecord>,
}

pub fn load_corpus(dir: &Path) -> Result<Vec<(String, Image)>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && matches!(
                    p.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()).as_deref(),
                    Some("png") | Some("pgm") | Some("aitv")
                )
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::InvalidConfig(format!("no images found in {}", dir.display())));
    }
    paths
        .into_iter()
        .map(|p| {
            let name = p
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("image")
                .to_string();
            Ok((name, read_image(&p)?))
        })
        .collect()
}

pub fn run_bench(corpus: &[(String, Image)], config: &BenchConfig) -> Result<BenchReport> {
    if config.peaks.is_empty() || config.methods.is_empty() {
        return Err(Error::InvalidConfig("bench needs at least one peak and one method".into()));
    }
    config.grid.validate()?;
    let mut report = BenchReport {
        images: corpus.iter().map(|(n, _)| n.clone()).collect(),
        peaks: config.peaks.clone(),
        methods: std::iter::once("noisy".to_string())
            .chain(config.methods.iter().map(|m| m.name().to_string()))
            .collect(),
        records: Vec::new(),
    };
    for &peak in &config.peaks {
        for (name, image) in corpus {
            let seed = scenario_seed(config.seed, name, peak);
            let (clean, noisy) = corrupt_at_peak(image, &NoiseSpec { peak, seed })?;
            report.records.push(BenchRecord {
                image: name.clone(),
                peak,
                method: "noisy".into(),
                seed,
                lambda: None,
                alpha: None,
                psnr_db: psnr(&noisy, &clean, peak)?,
                ssim: ssim(&noisy, &clean, peak)?,
                iterations: 0,
                wall_time_s: 0.0,
            });
            for &method in &config.methods {
                let sweep = run_sweep(&noisy, &clean, &config.grid, &config.solver, method, peak, config.jobs)?;
                let record = match sweep.best_cell() {
                    Some(c) => BenchRecord {
                        image: name.clone(),
                        peak,
                        method: method.name().into(),
                        seed,
                        lambda: Some(c.lambda),
                        alpha: c.alpha,
                        psnr_db: c.psnr_db,
                        ssim: c.ssim,
                        iterations: c.iterations,
                        wall_time_s: c.wall_time_s,
                    },
                    None => BenchRecord {
                        image: name.clone(),
                        peak,
                        method: method.name().into(),
                        seed,
                        lambda: None,
                        alpha: None,
                        psnr_db: f64::NAN,
                        ssim: f64::NAN,
                        iterations: 0,
                        wall_time_s: f64::NAN,
                    },
                };
                report.records.push(record);
            }
        }
    }
    Ok(report)
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

impl BenchReport {
    pub fn record(&self, image: &str, peak: f64, method: &str) -> Option<&BenchRecord> {
        self.records
            .iter()
            .find(|r| r.image == image && r.peak == peak && r.method == method)
    }

    /// Mean over images of the given metric for one `(peak, method)`.
    pub fn average(&self, peak: f64, method: &str, metric: Metric) -> f64 {
        let vals: Vec<f64> = self
            .images
            .iter()
            .filter_map(|img| self.record(img, peak, method))
            .map(|r| metric.of(r))
            .collect();
        mean(&vals)
    }

    /// Quality table: one row per `(peak, method, metric)`, one column per
    /// image, then the average.
    pub fn quality_csv(&self) -> String {
        let mut out = String::from("peak,method,metric");
        for img in &self.images {
            out.push(',');
            out.push_str(img);
        }
        out.push_str(",avg\n");
        for &peak in &self.peaks {
            for method in &self.methods {
                for metric in [Metric::Psnr, Metric::Ssim] {
                    write!(out, "{},{},{}", fmt_num(peak), method, metric.name()).unwrap();
                    for img in &self.images {
                        let v = self.record(img, peak, method).map_or(f64::NAN, |r| metric.of(r));
                        write!(out, ",{}", fmt_num(v)).unwrap();
                    }
                    writeln!(out, ",{}", fmt_num(self.average(peak, method, metric))).unwrap();
                }
            }
        }
        out
    }

    /// Average wall time of the selected solve per method, over every
    /// `(image, peak)` scenario.
    pub fn timing_csv(&self) -> String {
        let mut out = String::from("method,avg_time_s,scenarios\n");
        for method in self.methods.iter().filter(|m| *m != "noisy") {
            let times: Vec<f64> = self
                .records
                .iter()
                .filter(|r| &r.method == method)
                .map(|r| r.wall_time_s)
                .collect();
            writeln!(out, "{},{},{}", method, fmt_num(mean(&times)), times.len()).unwrap();
        }
        out
    }

    /// Per-scenario selections, without timings.
    pub fn cells_csv(&self) -> String {
        let mut out = String::from("image,peak,method,seed,lambda,alpha,psnr_db,ssim,iterations\n");
        let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), fmt_num);
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.image,
                fmt_num(r.peak),
                r.method,
                r.seed,
                opt(r.lambda),
                opt(r.alpha),
                fmt_num(r.psnr_db),
                fmt_num(r.ssim),
                r.iterations
            )
            .unwrap();
        }
        out
    }

    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("quality.csv"), self.quality_csv())?;
        std::fs::write(dir.join("timing.csv"), self.timing_csv())?;
        std::fs::write(dir.join("cells.csv"), self.cells_csv())?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Psnr,
    Ssim,
}

impl Metric {
    fn of(self, r: &BenchRecord) -> f64 {
        match self {
            Metric::Psnr => r.psnr_db,
            Metric::Ssim => r.ssim,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Metric::Psnr => "psnr",
            Metric::Ssim => "ssim",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_reference_vectors() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn scenario_seeds_differ() {
        let a = scenario_seed(7, "river", 30.0);
        assert_eq!(a, 7 ^ fnv1a64(b"river@30"));
        assert_ne!(a, scenario_seed(7, "river", 55.0));
        assert_ne!(a, scenario_seed(7, "boat", 30.0));
    }
}
