use aitv_denoise::fixtures::oblique_edge;
use aitv_denoise::noise::corrupt_at_peak;
use aitv_denoise::solver::{AdmmStepper, SolverState};
use aitv_denoise::{admm_solve, admm_solve_tv, grad, Image, NoiseSpec, SolverConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `lambda * sum(u - f ln u) + sum_pixels(|dx| + |dy| - alpha * hypot(dx, dy))`
/// with periodic forward differences, spelled out pixel by pixel.
fn model_objective(u: &[f64], f: &[f64], m: usize, n: usize, lambda: f64, alpha: f64) -> f64 {
    let mut total = 0.0;
    for i in 0..m {
        for j in 0..n {
            let k = i * n + j;
            let fid = if f[k] == 0.0 { u[k] } else { u[k] - f[k] * u[k].ln() };
            let dx = u[i * n + (j + 1) % n] - u[k];
            let dy = u[((i + 1) % m) * n + j] - u[k];
            total += lambda * fid + dx.abs() + dy.abs() - alpha * dx.hypot(dy);
        }
    }
    total
}

#[test]
fn small_problem_beats_random_neighbours() {
    let (m, n) = (4, 4);
    let (lambda, alpha) = (8.0, 0.5);
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for trial in 0..3 {
        let f = Image::from_fn(m, n, |_, _| rng.random_range(1..25) as f64);
        // With the default sigma = 1.75 the penalty grows so fast that the
        // iterates freeze a few objective units short of a stationary point;
        // a slow schedule lets the splitting settle into the local minimum.
        let cfg = SolverConfig { lambda, alpha, sigma: 1.05, epsilon: 1e-12, max_iters: 2000, ..Default::default() };

        // run by hand to keep the final v
        let mut stepper = AdmmStepper::new(&f, &cfg).unwrap();
        let mut state = SolverState::init(&f, &cfg);
        for _ in 0..cfg.max_iters {
            let rel = stepper.step(&mut state).unwrap();
            if state.iter >= 2 && rel < cfg.epsilon {
                break;
            }
        }
        let at_v = model_objective(state.v.data(), f.data(), m, n, lambda, alpha);
        let u_star = admm_solve(&f, &cfg).unwrap().u_star;

        let mut best = f64::INFINITY;
        for _ in 0..10_000 {
            let p: Vec<f64> = u_star
                .data()
                .iter()
                .map(|&u| (u + rng.random_range(-0.1..=0.1)).max(1e-12))
                .collect();
            best = best.min(model_objective(&p, f.data(), m, n, lambda, alpha));
        }
        assert!(at_v <= best, "trial {trial}: objective at v {at_v} > sampled {best}");
    }
}

#[test]
fn primal_residuals_vanish_on_fixture() {
    let (_, f) = corrupt_at_peak(&oblique_edge(64, 64), &NoiseSpec { peak: 30.0, seed: 7 }).unwrap();
    let cfg = SolverConfig { lambda: 10.0, alpha: 0.5, ..Default::default() };
    let r = admm_solve(&f, &cfg).unwrap();
    assert!(r.converged && r.iterations < 300);
    let limit = 1e-4 * f.norm();
    assert!(r.diagnostics.consensus_residual < limit, "{:?}", r.diagnostics);
    assert!(r.diagnostics.gradient_residual < limit, "{:?}", r.diagnostics);

    // the same quantities recomputed from a hand-driven run
    let mut stepper = AdmmStepper::new(&f, &cfg).unwrap();
    let mut state = SolverState::init(&f, &cfg);
    while state.iter < r.iterations {
        stepper.step(&mut state).unwrap();
    }
    let uv = state.u.zip_map(&state.v, |a, b| a - b).unwrap().norm();
    let g = grad(&state.u);
    let gw = (g.x.zip_map(&state.w.x, |a, b| a - b).unwrap().norm().powi(2)
        + g.y.zip_map(&state.w.y, |a, b| a - b).unwrap().norm().powi(2))
    .sqrt();
    assert!((uv - r.diagnostics.consensus_residual).abs() <= 1e-12 * uv);
    assert!((gw - r.diagnostics.gradient_residual).abs() <= 1e-12 * gw);
}

#[test]
fn objective_history_is_recorded_per_iteration() {
    let (_, f) = corrupt_at_peak(&oblique_edge(32, 32), &NoiseSpec { peak: 55.0, seed: 3 }).unwrap();
    let r = admm_solve(&f, &SolverConfig::default()).unwrap();
    assert_eq!(r.objective_history.len(), r.iterations);
    assert_eq!(r.rel_change_history.len(), r.iterations);
    assert!(r.objective_history.iter().all(|v| v.is_finite()));
    assert!(r.u_star.data().iter().all(|&v| v >= 0.0));
}

#[test]
fn tv_baseline_on_constant_image() {
    let f = Image::filled(20, 20, 7.0);
    let r = admm_solve_tv(&f, &SolverConfig { lambda: 3.0, ..Default::default() }).unwrap();
    assert!(r.u_star.data().iter().all(|v| (v - 7.0).abs() <= 1e-3));
}

#[test]
fn solves_are_bitwise_repeatable() {
    let (_, f) = corrupt_at_peak(&oblique_edge(40, 48), &NoiseSpec { peak: 30.0, seed: 9 }).unwrap();
    let cfg = SolverConfig::default();
    let a = admm_solve(&f, &cfg).unwrap();
    let b = admm_solve(&f, &cfg).unwrap();
    assert_eq!(a.u_star, b.u_star);
    assert_eq!(a.rel_change_history, b.rel_change_history);
}
