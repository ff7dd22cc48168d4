//! Grid search over the fidelity weight and the AITV weight.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::metrics::{psnr, ssim};
use crate::solver::{admm_solve, Regularizer, SolverConfig, SolverResult};

pub const DEFAULT_LAMBDAS: [f64; 7] = [3.0, 5.0, 8.0, 10.0, 12.0, 15.0, 20.0];
pub const DEFAULT_ALPHAS: [f64; 5] = [0.1, 0.2, 0.3, 0.4, 0.5];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    #[default]
    BestPsnr,
    BestSsim,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub lambdas: Vec<f64>,
    pub alphas: Vec<f64>,
    pub selection: Selection,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            lambdas: DEFAULT_LAMBDAS.to_vec(),
            alphas: DEFAULT_ALPHAS.to_vec(),
            selection: Selection::BestPsnr,
        }
    }
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        if self.lambdas.is_empty() || self.alphas.is_empty() {
            return Err(Error::InvalidConfig("sweep grid lists must be non-empty".into()));
        }
        Ok(())
    }

    /// Cell parameters in grid order: lambda-major, alpha-minor. The TV
    /// baseline has no alpha axis and gets one cell per lambda.
    pub fn cells(&self, regularizer: Regularizer) -> Vec<(f64, Option<f64>)> {
        match regularizer {
            Regularizer::Aitv => self
                .lambdas
                .iter()
                .flat_map(|&l| self.alphas.iter().map(move |&a| (l, Some(a))))
                .collect(),
            Regularizer::TvIsotropic => self.lambdas.iter().map(|&l| (l, None)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub lambda: f64,
    pub alpha: Option<f64>,
    /// NaN when the solve failed.
    pub psnr_db: f64,
    pub ssim: f64,
    pub iterations: usize,
    pub converged: bool,
    pub wall_time_s: f64,
    pub error: Option<String>,
}

pub struct SweepOutcome {
    pub regularizer: Regularizer,
    pub cells: Vec<SweepCell>,
    pub best: Option<usize>,
    /// Solver output of the selected cell.
    pub best_result: Option<SolverResult>,
    pub best_config: Option<SolverConfig>,
}

impl SweepOutcome {
    pub fn best_cell(&self) -> Option<&SweepCell> {
        self.best.map(|i| &self.cells[i])
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda,alpha,psnr_db,ssim,iterations,converged,wall_time_s\n");
        for c in &self.cells {
            let alpha = c.alpha.map_or_else(|| "-".to_string(), fmt_num);
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                fmt_num(c.lambda),
                alpha,
                fmt_num(c.psnr_db),
                fmt_num(c.ssim),
                c.iterations,
                c.converged,
                c.wall_time_s
            )
            .unwrap();
        }
        out
    }
}

/// Shortest round-trip decimal, with `inf`/`nan` spelled out.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

fn score(cell: &SweepCell, selection: Selection) -> f64 {
    match selection {
        Selection::BestPsnr => cell.psnr_db,
        Selection::BestSsim => cell.ssim,
    }
}

/// Index of the best finite-or-infinite score; NaN cells never win and ties
/// go to the earliest cell.
pub fn select_best(cells: &[SweepCell], selection: Selection) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in cells.iter().enumerate() {
        let s = score(c, selection);
        if s.is_nan() {
            continue;
        }
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((i, s));
        }
    }
    best.map(|(i, _)| i)
}

/// Solves every grid cell with `base` as the template configuration and
/// scores each result against `clean`. Cells run on up to `jobs` threads;
/// a failing cell is recorded with NaN scores.
pub fn run_sweep(
    noisy: &Image,
    clean: &Image,
    grid: &SweepGrid,
    base: &SolverConfig,
    regularizer: Regularizer,
    dynamic_range: f64,
    jobs: usize,
) -> Result<SweepOutcome> {
    grid.validate()?;
    noisy.ensure_same_shape(clean)?;
    let params = grid.cells(regularizer);
    let run_cell = |&(lambda, alpha): &(f64, Option<f64>)| {
        let config = SolverConfig {
            lambda,
            alpha: alpha.unwrap_or(base.alpha),
            regularizer,
            ..*base
        };
        let outcome = admm_solve(noisy, &config).and_then(|r| {
            let p = psnr(&r.u_star, clean, dynamic_range)?;
            let s = ssim(&r.u_star, clean, dynamic_range)?;
            Ok((r, p, s))
        });
        match outcome {
            Ok((r, p, s)) => (
                SweepCell {
                    lambda,
                    alpha,
                    psnr_db: p,
                    ssim: s,
                    iterations: r.iterations,
                    converged: r.converged,
                    wall_time_s: r.wall_time.as_secs_f64(),
                    error: None,
                },
                Some((config, r)),
            ),
            Err(e) => (
                SweepCell {
                    lambda,
                    alpha,
                    psnr_db: f64::NAN,
                    ssim: f64::NAN,
                    iterations: 0,
                    converged: false,
                    wall_time_s: 0.0,
                    error: Some(e.to_string()),
                },
                None,
            ),
        }
    };

    let results: Vec<(SweepCell, Option<(SolverConfig, SolverResult)>)> = if jobs <= 1 {
        params.iter().map(run_cell).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        pool.install(|| params.par_iter().map(run_cell).collect())
    };

    let cells: Vec<SweepCell> = results.iter().map(|(c, _)| c.clone()).collect();
    let best = select_best(&cells, grid.selection);
    let (best_config, best_result) = match best.and_then(|i| results.into_iter().nth(i)?.1) {
        Some((c, r)) => (Some(c), Some(r)),
        None => (None, None),
    };
    Ok(SweepOutcome {
        regularizer,
        cells,
        best,
        best_result,
        best_config,
    })
}
