//! Acceptance checks. Runs without the libtest harness and prints one
//! `PASS`/`FAIL` line per criterion; exits non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use aitv_denoise::cli::{cmd_bench, BenchArgs, Method, SelectBy};
use aitv_denoise::fixtures::{disc_and_bar, oblique_edge};
use aitv_denoise::io::write_image;
use aitv_denoise::noise::corrupt_at_peak;
use aitv_denoise::prox::l1_minus_l2_objective;
use aitv_denoise::solver::{AdmmStepper, SolverState};
use aitv_denoise::sweep::{run_sweep, SweepGrid, DEFAULT_ALPHAS, DEFAULT_LAMBDAS};
use aitv_denoise::{
    admm_solve, grad, grad_adjoint, poisson_corrupt, prox_l1_minus_l2, psnr, ssim, GradField,
    Image, NoiseSpec, Regularizer, SolverConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_image(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Image {
    Image::from_fn(rows, cols, |_, _| rng.random_range(lo..hi))
}

// ---------------------------------------------------------------- oracles

/// Brute-force minimum of the prox objective on a 401x401 grid covering
/// `[-r, r]^2`, `r = max|x_i| + beta`.
fn prox_grid_minimum(x: [f64; 2], alpha: f64, beta: f64) -> f64 {
    const STEPS: usize = 401;
    let r = x[0].abs().max(x[1].abs()) + beta;
    let at = |k: usize| -r + 2.0 * r * k as f64 / (STEPS - 1) as f64;
    let mut best = f64::INFINITY;
    for a in 0..STEPS {
        for b in 0..STEPS {
            best = best.min(l1_minus_l2_objective(&[at(a), at(b)], &x, alpha, beta));
        }
    }
    best
}

/// Forward differences with wraparound, written out per pixel.
fn naive_grad(u: &Image) -> (Vec<f64>, Vec<f64>) {
    let (m, n) = u.shape();
    let mut gx = vec![0.0; m * n];
    let mut gy = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            gx[i * n + j] = u.get(i, (j + 1) % n) - u.get(i, j);
            gy[i * n + j] = u.get((i + 1) % m, j) - u.get(i, j);
        }
    }
    (gx, gy)
}

/// `(I - Laplacian) u` with the 5-point periodic stencil.
fn naive_identity_minus_laplacian(u: &Image) -> Image {
    let (m, n) = u.shape();
    Image::from_fn(m, n, |i, j| {
        let c = u.get(i, j);
        let sum = u.get((i + 1) % m, j) + u.get((i + m - 1) % m, j) + u.get(i, (j + 1) % n) + u.get(i, (j + n - 1) % n);
        c - (sum - 4.0 * c)
    })
}

fn mirror(idx: isize, len: usize) -> usize {
    let n = len as isize;
    let i = if idx < 0 { -idx - 1 } else if idx >= n { 2 * n - 1 - idx } else { idx };
    i as usize
}

/// Windowed SSIM evaluated pixel by pixel with a full 2-D Gaussian window
/// and centred second moments.
fn naive_ssim(x: &Image, y: &Image, l: f64) -> f64 {
    let (m, n) = x.shape();
    let mut w = [[0.0f64; 11]; 11];
    let mut total = 0.0;
    for (a, row) in w.iter_mut().enumerate() {
        for (b, v) in row.iter_mut().enumerate() {
            let (da, db) = (a as f64 - 5.0, b as f64 - 5.0);
            *v = (-(da * da + db * db) / (2.0 * 1.5 * 1.5)).exp();
            total += *v;
        }
    }
    let (c1, c2) = ((0.01 * l).powi(2), (0.03 * l).powi(2));
    let mut acc = 0.0;
    for i in 0..m {
        for j in 0..n {
            let sample = |a: usize, b: usize| {
                let (p, q) = (mirror(i as isize + a as isize - 5, m), mirror(j as isize + b as isize - 5, n));
                (x.get(p, q), y.get(p, q), w[a][b] / total)
            };
            let (mut mx, mut my) = (0.0, 0.0);
            for a in 0..11 {
                for b in 0..11 {
                    let (xv, yv, wt) = sample(a, b);
                    mx += wt * xv;
                    my += wt * yv;
                }
            }
            let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
            for a in 0..11 {
                for b in 0..11 {
                    let (xv, yv, wt) = sample(a, b);
                    sxx += wt * (xv - mx) * (xv - mx);
                    syy += wt * (yv - my) * (yv - my);
                    sxy += wt * (xv - mx) * (yv - my);
                }
            }
            acc += ((2.0 * mx * my + c1) * (2.0 * sxy + c2)) / ((mx * mx + my * my + c1) * (sxx + syy + c2));
        }
    }
    acc / (m * n) as f64
}

// -------------------------------------------------------------- criteria

fn prox_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let cases = 1000;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..cases {
        let x = [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)];
        let alpha = rng.random_range(0.0..=1.0);
        let beta = rng.random_range(0.01..=10.0);
        let y = prox_l1_minus_l2(&x, alpha, beta).map_err(|e| e.to_string())?;
        let gap = l1_minus_l2_objective(&y, &x, alpha, beta) - prox_grid_minimum(x, alpha, beta);
        worst = worst.max(gap);
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst <= 1e-6 && secs < 10.0,
        format!("{cases} cases, worst excess over grid {worst:.3e} (limit 1e-6), {secs:.2} s (limit 10 s)"),
    )
}

fn adjoint_and_u_step() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst_adj = 0.0f64;
    for _ in 0..100 {
        let u = random_image(&mut rng, 16, 16, -10.0, 10.0);
        let p = GradField::new(random_image(&mut rng, 16, 16, -10.0, 10.0), random_image(&mut rng, 16, 16, -10.0, 10.0))
            .unwrap();
        let g = grad(&u);
        let (nx, ny) = naive_grad(&u);
        if g.x.data() != nx.as_slice() || g.y.data() != ny.as_slice() {
            return Err("gradient differs from per-pixel forward differences".into());
        }
        let lhs = g.dot(&p).unwrap();
        let rhs = u.dot(&grad_adjoint(&p)).unwrap();
        worst_adj = worst_adj.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0));
    }

    // Drive the iteration by hand and check every u-step against its
    // normal equations beta (I - Laplacian) u = beta v - y + grad^T (beta w - z).
    let clean = oblique_edge(64, 64);
    let (_, noisy) = corrupt_at_peak(&clean, &NoiseSpec { peak: 30.0, seed: 7 }).unwrap();
    let mut worst_res = 0.0f64;
    let mut steps = 0;
    for f in [noisy, random_image(&mut rng, 24, 40, 0.0, 50.0)] {
        let cfg = SolverConfig { lambda: 10.0, alpha: 0.5, ..Default::default() };
        let mut stepper = AdmmStepper::new(&f, &cfg).unwrap();
        let mut state = SolverState::init(&f, &cfg);
        for _ in 0..cfg.max_iters {
            let before = state.clone();
            let rel = stepper.step(&mut state).map_err(|e| e.to_string())?;
            let b = before.beta;
            let q = GradField::new(
                before.w.x.zip_map(&before.z.x, |w, z| b * w - z).unwrap(),
                before.w.y.zip_map(&before.z.y, |w, z| b * w - z).unwrap(),
            )
            .unwrap();
            let adj = grad_adjoint(&q);
            let (m, n) = f.shape();
            let rhs = Image::from_fn(m, n, |i, j| b * before.v.get(i, j) - before.y.get(i, j) + adj.get(i, j));
            let lhs = naive_identity_minus_laplacian(&state.u).map(|v| b * v);
            let res = lhs.zip_map(&rhs, |a, c| a - c).unwrap().norm() / rhs.norm();
            worst_res = worst_res.max(res);
            steps += 1;
            if state.iter >= 2 && rel < cfg.epsilon {
                break;
            }
        }
    }
    check(
        worst_adj <= 1e-10 && worst_res <= 1e-8,
        format!(
            "adjoint worst rel. error {worst_adj:.2e} over 100 instances (limit 1e-10); \
             u-step worst rel. residual {worst_res:.2e} over {steps} iterations (limit 1e-8)"
        ),
    )
}

fn constant_fixed_point() -> Outcome {
    let f = Image::filled(32, 32, 4.0);
    let mut worst = 0.0f64;
    let mut max_iters = 0;
    for &lambda in &DEFAULT_LAMBDAS {
        for &alpha in &DEFAULT_ALPHAS {
            let cfg = SolverConfig { lambda, alpha, max_iters: 300, ..Default::default() };
            let r = admm_solve(&f, &cfg).map_err(|e| e.to_string())?;
            let dev = r.u_star.data().iter().map(|v| (v - 4.0).abs()).fold(0.0, f64::max);
            worst = worst.max(dev);
            max_iters = max_iters.max(r.iterations);
        }
    }
    check(
        worst <= 1e-3 && max_iters <= 300,
        format!("35 (lambda, alpha) pairs, max |u - 4| = {worst:.2e} (limit 1e-3), at most {max_iters} iterations"),
    )
}

fn convergence_fixture() -> Outcome {
    let clean = oblique_edge(64, 64);
    let (_, noisy) = corrupt_at_peak(&clean, &NoiseSpec { peak: 30.0, seed: 7 }).unwrap();
    let cfg = SolverConfig { lambda: 10.0, alpha: 0.5, beta0: 1e-3, sigma: 1.75, ..Default::default() };
    let r = admm_solve(&noisy, &cfg).map_err(|e| e.to_string())?;
    let h = &r.rel_change_history;
    let tail = &h[h.len().saturating_sub(10)..];
    let tail_ok = tail.len() == 10 && tail.windows(2).all(|p| p[1] <= 1.1 * p[0]);
    check(
        r.converged && r.iterations < 300 && tail_ok,
        format!(
            "converged={} after {} iterations, final rel. change {:.2e}, last 10 non-increasing within 10%: {}",
            r.converged,
            r.iterations,
            h.last().copied().unwrap_or(f64::NAN),
            tail_ok
        ),
    )
}

fn aitv_vs_tv() -> Outcome {
    let clean = oblique_edge(64, 64);
    let grid = SweepGrid::default();
    let base = SolverConfig::default();
    let mut wins = 0;
    let mut within = 0;
    let mut rows = Vec::new();
    for peak in [30.0, 55.0, 80.0] {
        let (g, f) = corrupt_at_peak(&clean, &NoiseSpec { peak, seed: 7 }).unwrap();
        let best = |reg| -> Result<f64, String> {
            let out = run_sweep(&f, &g, &grid, &base, reg, peak, 1).map_err(|e| e.to_string())?;
            out.best_cell().map(|c| c.psnr_db).ok_or_else(|| "no successful cell".to_string())
        };
        let (a, t) = (best(Regularizer::Aitv)?, best(Regularizer::TvIsotropic)?);
        wins += usize::from(a >= t);
        within += usize::from(a >= t - 0.1);
        rows.push(format!("peak {peak}: AITV {a:.2} dB / TV {t:.2} dB"));
    }
    check(
        wins >= 2 && within == 3,
        format!("{}; AITV >= TV at {wins}/3 peaks, within 0.1 dB at {within}/3", rows.join(", ")),
    )
}

fn timing() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let clean = Image::from_fn(321, 481, |i, j| {
        let edge = if (i as f64) > 0.6 * j as f64 + 40.0 { 0.3 } else { 1.0 };
        edge + 0.05 * rng.random_range(0.0..1.0)
    });
    let (_, noisy) = corrupt_at_peak(&clean, &NoiseSpec { peak: 30.0, seed: 1 }).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let start = Instant::now();
    let r = pool.install(|| admm_solve(&noisy, &SolverConfig::default())).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    check(
        secs <= 10.0,
        format!("321x481 default AITV solve: {secs:.2} s, {} iterations, converged={} (limit 10 s)", r.iterations, r.converged),
    )
}

fn sampler_moments() -> Outcome {
    let (m, n) = (400, 250);
    let count = (m * n) as f64;
    let mut rows = Vec::new();
    let mut ok = true;
    for (k, mu) in [1.0, 5.0, 30.0, 80.0].into_iter().enumerate() {
        let draws = poisson_corrupt(&Image::filled(m, n, mu), &NoiseSpec { peak: mu, seed: 100 + k as u64 })
            .map_err(|e| e.to_string())?;
        let mean = draws.data().iter().sum::<f64>() / count;
        let var = draws.data().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (count - 1.0);
        let mean_ok = (mean - mu).abs() <= 3.0 * (mu / count).sqrt();
        let var_ok = (var - mu).abs() / mu <= 0.05;
        ok &= mean_ok && var_ok;
        rows.push(format!("mu={mu}: mean {mean:.4} var {var:.3}"));
    }
    check(ok, format!("n={count} each; {}", rows.join(", ")))
}

fn metric_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let g = random_image(&mut rng, 16, 16, 10.0, 200.0);
    let u = g.map(|v| v + 1.0);
    let p = psnr(&u, &g, 255.0).map_err(|e| e.to_string())?;
    let self_ssim = ssim(&g, &g, 255.0).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for k in 0..20 {
        let (m, n) = (11 + k % 5, 11 + (3 * k) % 9);
        let x = random_image(&mut rng, m, n, 0.0, 255.0);
        let y = Image::from_fn(m, n, |i, j| (x.get(i, j) + rng.random_range(-40.0..40.0)).clamp(0.0, 255.0));
        let fast = ssim(&x, &y, 255.0).map_err(|e| e.to_string())?;
        worst = worst.max((fast - naive_ssim(&x, &y, 255.0)).abs());
    }
    check(
        (p - 48.1308).abs() <= 1e-3 && self_ssim == 1.0 && worst <= 1e-9,
        format!("PSNR(MSE=1, L=255) = {p:.5} dB; SSIM(u,u) = {self_ssim}; naive SSIM worst diff {worst:.2e} over 20 pairs"),
    )
}

fn bench_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let corpus = dir.path().join("corpus");
    std::fs::create_dir_all(&corpus).unwrap();
    write_image(&corpus.join("oblique.png"), &oblique_edge(32, 32).map(|v| v * 255.0), 255.0).unwrap();
    write_image(&corpus.join("disc.png"), &disc_and_bar(24, 28).map(|v| v * 255.0), 255.0).unwrap();
    let run = |out: &Path| {
        cmd_bench(&BenchArgs {
            corpus_dir: corpus.clone(),
            peaks: vec![30.0, 80.0],
            methods: vec![Method::Aitv, Method::Tv],
            seed: 11,
            lambdas: vec![5.0, 10.0],
            alphas: vec![0.3, 0.5],
            select: SelectBy::Psnr,
            max_iters: 300,
            out_dir: out.to_path_buf(),
            jobs: 2,
        })
        .map_err(|e| e.to_string())
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run(&a)?;
    run(&b)?;
    let mut same = Vec::new();
    for name in ["quality.csv", "cells.csv"] {
        let (x, y) = (std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap());
        if x != y {
            return Err(format!("{name} differs between runs"));
        }
        same.push(format!("{name} ({} bytes)", x.len()));
    }
    Ok(format!("identical across two runs: {}; timing.csv holds wall-clock times and is not compared", same.join(", ")))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("prox closed form vs grid search", prox_oracle),
        ("adjoint identity and u-step residual", adjoint_and_u_step),
        ("constant image fixed point", constant_fixed_point),
        ("convergence on oblique-edge fixture", convergence_fixture),
        ("AITV vs TV best-over-grid PSNR", aitv_vs_tv),
        ("321x481 solve time", timing),
        ("Poisson sampler moments", sampler_moments),
        ("PSNR/SSIM oracles", metric_oracles),
        ("bench determinism", bench_determinism),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS [{}] {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{}] {name}: {detail}", k + 1);
            }
        }
    }
    println!("{} of {} acceptance criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
