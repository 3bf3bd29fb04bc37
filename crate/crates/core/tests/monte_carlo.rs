mod common;

use drss::crlb::{closest_anchor, crlb_all, drss_jacobian, mean_drss, Parameterization};
use drss::estimators::{a_blue, le, rsdp_bcde, u_blue, BcdOpts, LeOptions};
use drss::model::augment;
use drss::scenario::{clustered_scenario, draw_target, fig1_scenario, random_scenario, Placement};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn whitened_error_is_nearly_white() {
    let s = fig1_scenario();
    let theta = augment(s.target());
    let draws = 10_000;
    let mut samples = Vec::with_capacity(draws);
    for seed in 0..draws as u64 {
        let m = common::model(&s, 4.0, 0.01, seed);
        samples.push(&m.rho - &m.phi * &theta);
    }
    let k = samples[0].len();
    let mean = samples.iter().fold(DVector::zeros(k), |a, v| a + v) / draws as f64;
    let mut cov = DMatrix::zeros(k, k);
    for v in &samples {
        let c = v - &mean;
        cov += &c * c.transpose();
    }
    cov /= (draws - 1) as f64;
    let mut worst: f64 = 0.0;
    for i in 0..k {
        for j in 0..k {
            if i != j {
                worst = worst.max(cov[(i, j)].abs() / (cov[(i, i)] * cov[(j, j)]).sqrt());
            }
        }
    }
    assert!(worst < 0.1, "largest normalised off-diagonal {worst}");
}

#[test]
fn constrained_refinement_helps_at_small_noise() {
    let s = clustered_scenario(Placement::Good);
    let (mut su, mut sa) = (0.0, 0.0);
    for seed in 0..1000 {
        let m = common::model(&s, 4.0, 0.01, seed);
        su += (u_blue(&m).unwrap().x_hat - s.target()).norm_squared();
        sa += (a_blue(&m).unwrap().x_hat - s.target()).norm_squared();
    }
    assert!(sa <= su, "A-BLUE {sa} > U-BLUE {su}");
}

/// Minimum of `‖Φ[x; ‖x‖²] - ρ‖²` over a square grid with the given step.
fn grid_minimum(m: &drss::model::WhitenedModel, side: f64, step: f64) -> f64 {
    let h = m.phi.transpose() * &m.phi;
    let g = m.phi.transpose() * &m.rho;
    let c = m.rho.norm_squared();
    let n = (side / step).round() as usize;
    let mut best = f64::INFINITY;
    for i in 0..=n {
        let x = i as f64 * step;
        for j in 0..=n {
            let y = j as f64 * step;
            let t = [x, y, x * x + y * y];
            let mut q = c;
            for a in 0..3 {
                q -= 2.0 * t[a] * g[a];
                for b in 0..3 {
                    q += t[a] * h[(a, b)] * t[b];
                }
            }
            best = best.min(q);
        }
    }
    best
}

#[test]
fn lagrangian_estimate_beats_grid_search() {
    let opts = LeOptions::default();
    for seed in 0..100 {
        let s = random_scenario(10, 50.0, 2, 7000 + seed).unwrap();
        let m = common::model(&s, 4.0, 4.0, seed);
        let e = le(&m, &opts).unwrap();
        let f = e.x_hat.norm_squared() - e.theta_hat[2];
        assert!(f.abs() <= opts.tol * e.theta_hat[2].abs().max(1.0), "seed {seed}: f = {f}");
        let cost = m.constrained_cost(&e.x_hat);
        let grid = grid_minimum(&m, 50.0, 0.05);
        // Grid points are feasible, so only rounding separates the two.
        assert!(cost <= grid * (1.0 + 1e-9) + 1e-9, "seed {seed}: {cost} > {grid}");
    }
}

#[test]
fn fim_gradient_matches_finite_differences() {
    for seed in 0..50 {
        let s = random_scenario(10, 50.0, 2, 500 + seed).unwrap();
        let x = s.target();
        let r = closest_anchor(x, s.anchors());
        let jac = drss_jacobian(x, s.anchors(), r, 4.0, Parameterization::LocationAndPle).unwrap();
        let h = 1e-5;
        for k in 0..3 {
            let (plus, minus) = if k < 2 {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[k] += h;
                xm[k] -= h;
                (mean_drss(&xp, s.anchors(), r, 4.0).unwrap(), mean_drss(&xm, s.anchors(), r, 4.0).unwrap())
            } else {
                (mean_drss(x, s.anchors(), r, 4.0 + h).unwrap(), mean_drss(x, s.anchors(), r, 4.0 - h).unwrap())
            };
            let fd = (plus - minus) / (2.0 * h);
            let err = (&fd - jac.column(k)).norm() / jac.column(k).norm();
            assert!(err <= 1e-5, "seed {seed} column {k}: {err}");
        }
    }
}

#[test]
fn unknown_exponent_never_tightens_location_bound() {
    for seed in 0..100 {
        let s = random_scenario(10, 50.0, 2, 900 + seed).unwrap();
        let b = crlb_all(&s, 4.0, 1.0).unwrap();
        assert!(b.joint_location >= b.location_known_ple, "seed {seed}");
    }
}

#[test]
fn block_coordinate_iterates_approach_target() {
    let s = clustered_scenario(Placement::Good);
    let opts = BcdOpts { gamma_init: 4.0, xi: 0.0, max_iter: 5, ..Default::default() };
    let trials = 200;
    let mut sq = [0.0; 5];
    let mut improved = 0;
    for seed in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = s.with_target(draw_target(&mut rng, s.anchors(), 50.0, 2)).unwrap();
        let drss = common::drss(&t, 2.0, 1.0, seed);
        let e = rsdp_bcde(&drss, t.anchors(), &opts).unwrap();
        let errs: Vec<f64> = e.diagnostics.history.iter().map(|it| (&it.x - t.target()).norm()).collect();
        assert_eq!(errs.len(), 5);
        for (acc, e) in sq.iter_mut().zip(&errs) {
            *acc += e * e;
        }
        if errs[4] <= errs[0] {
            improved += 1;
        }
    }
    assert!(sq.windows(2).all(|w| w[1] <= w[0]), "{sq:?}");
    assert!(improved * 10 >= trials * 9, "{improved}/{trials}");
}
