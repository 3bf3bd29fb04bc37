//! One Monte Carlo trial: draw a scenario and measurements, inject model
//! uncertainty, run the estimators.

use drss::channel::{drss_from_rss, sample_rss, ChannelParams, DrssSampleSet};
use drss::crlb::{crlb_all, CrlbSet};
use drss::estimators::{a_blue, le, rsdp_bcde, rsdpe, u_blue, BcdOpts, LeOptions, Method, RobustOpts};
use drss::model::whitened_model;
use drss::scenario::{clustered_scenario, draw_target, random_scenario_with, Placement, Scenario};
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::config::{ExperimentConfig, Family, Point};

/// Iterations of the joint estimator reported by the `bcd` family.
pub const BCD_REPORTED_ITERATIONS: [usize; 4] = [1, 2, 3, 5];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// Anchors and target uniform over the field, redrawn every trial.
    Random,
    /// Fixed layout, target redrawn every trial.
    Fixed(Placement),
}

/// Everything one trial needs.
#[derive(Debug, Clone)]
pub struct TrialSpec {
    pub family: Family,
    pub layout: Layout,
    pub point: Point,
    pub n_anchors: usize,
    pub field_side: f64,
    pub estimators: Vec<Method>,
    pub gamma_init: f64,
    /// Iterations reported for the joint estimator in the `bcd` family.
    pub bcd_iterations: Vec<usize>,
}

impl TrialSpec {
    pub fn new(cfg: &ExperimentConfig, layout: Layout, sweep_value: f64) -> Self {
        Self {
            family: cfg.family,
            layout,
            point: cfg.point(sweep_value),
            n_anchors: cfg.n_anchors,
            field_side: cfg.field_side,
            estimators: cfg.estimators.clone(),
            gamma_init: cfg.gamma_init,
            bcd_iterations: BCD_REPORTED_ITERATIONS.to_vec(),
        }
    }
}

/// Squared error of one output row in one trial, and the bound it is
/// compared against.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub label: String,
    /// `None` when the estimator failed.
    pub sq_error: Option<f64>,
    pub crlb: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrialResult {
    pub scenario: Scenario,
    pub bounds: Option<CrlbSet>,
    pub outcomes: Vec<Outcome>,
}

/// Generator for trial `index` under a master seed: one ChaCha stream per
/// trial, so trials are independent of scheduling order.
pub fn trial_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

fn gaussian(rng: &mut ChaCha8Rng, variance: f64) -> f64 {
    Normal::new(0.0, variance.sqrt()).expect("variance validated").sample(rng)
}

fn draw_scenario(spec: &TrialSpec, rng: &mut ChaCha8Rng) -> drss::Result<Scenario> {
    match spec.layout {
        Layout::Random => random_scenario_with(rng, spec.n_anchors, spec.field_side, 2),
        Layout::Fixed(kind) => {
            let base = clustered_scenario(kind);
            let target = draw_target(rng, base.anchors(), base.field_side(), 2);
            base.with_target(target)
        }
    }
}

pub fn run_trial(spec: &TrialSpec, master_seed: u64, index: u64) -> drss::Result<TrialResult> {
    let mut rng = trial_rng(master_seed, index);
    let scenario = draw_scenario(spec, &mut rng)?;
    let p = spec.point;
    let params = ChannelParams::with_noise_variance(p.gamma, p.sigma_n2)?;
    let drss = drss_from_rss(&sample_rss(&scenario, &params, &mut rng));

    // Model-side view: the estimators see γ̃ and s̃ᵢ, the measurements come
    // from γ and sᵢ.
    let gamma_model = p.gamma + gaussian(&mut rng, p.sigma_gamma2);
    let anchors_model: Vec<DVector<f64>> = scenario
        .anchors()
        .iter()
        .map(|s| s.map(|c| c + gaussian(&mut rng, p.sigma_s2)))
        .collect();

    let bounds = crlb_all(&scenario, p.gamma, p.sigma_n2).ok();
    let truth = scenario.target();
    let mut outcomes = Vec::new();
    for &method in &spec.estimators {
        if method == Method::RsdpBcde && spec.family == Family::Bcd {
            outcomes.extend(bcd_outcomes(spec, &drss, &anchors_model, truth, bounds.as_ref()));
            continue;
        }
        let reference = if method == Method::RsdpBcde {
            bounds.map(|b| b.joint_location)
        } else {
            bounds.map(|b| b.location_known_ple)
        };
        let x = estimate(method, &drss, &anchors_model, gamma_model, spec.gamma_init);
        outcomes.push(Outcome {
            label: method.name().to_string(),
            sq_error: x.ok().map(|x| (x - truth).norm_squared()).filter(|e| e.is_finite()),
            crlb: reference,
        });
    }
    Ok(TrialResult { scenario, bounds, outcomes })
}

fn estimate(
    method: Method,
    drss: &DrssSampleSet,
    anchors: &[DVector<f64>],
    gamma: f64,
    gamma_init: f64,
) -> drss::Result<DVector<f64>> {
    if method == Method::RsdpBcde {
        let opts = BcdOpts { gamma_init, ..Default::default() };
        return Ok(rsdp_bcde(drss, anchors, &opts)?.x_hat);
    }
    let m = whitened_model(drss, anchors, gamma)?;
    let e = match method {
        Method::UBlue => u_blue(&m)?,
        Method::ABlue => a_blue(&m)?,
        Method::Le => le(&m, &LeOptions::default())?,
        Method::Rsdpe => rsdpe(&m.phi, &m.rho, &RobustOpts::default())?,
        Method::RsdpBcde => unreachable!(),
    };
    Ok(e.x_hat)
}

/// Location and exponent rows for each reported iteration of one run with no
/// early stop.
fn bcd_outcomes(
    spec: &TrialSpec,
    drss: &DrssSampleSet,
    anchors: &[DVector<f64>],
    truth: &DVector<f64>,
    bounds: Option<&CrlbSet>,
) -> Vec<Outcome> {
    let max_iter = spec.bcd_iterations.iter().copied().max().unwrap_or(1);
    let opts = BcdOpts { gamma_init: spec.gamma_init, xi: 0.0, max_iter, ..Default::default() };
    let history = rsdp_bcde(drss, anchors, &opts).map(|e| e.diagnostics.history).unwrap_or_default();
    let mut out = Vec::new();
    for &k in &spec.bcd_iterations {
        let it = history.get(k - 1);
        out.push(Outcome {
            label: format!("rsdp_bcde_k{k}"),
            sq_error: it.map(|it| (&it.x - truth).norm_squared()),
            crlb: bounds.map(|b| b.joint_location),
        });
        out.push(Outcome {
            label: format!("rsdp_bcde_k{k}_ple"),
            sq_error: it.map(|it| (it.gamma - spec.point.gamma).powi(2)),
            crlb: bounds.map(|b| b.joint_ple),
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(family: Family, sigma_n2: f64, estimators: Vec<Method>) -> TrialSpec {
        let mut cfg = ExperimentConfig::for_family(family);
        cfg.estimators = estimators;
        TrialSpec::new(&cfg, Layout::Random, sigma_n2)
    }

    #[test]
    fn zero_noise_recovers_target() {
        let all = vec![Method::UBlue, Method::ABlue, Method::Le, Method::Rsdpe];
        for seed in 0..5 {
            let r = run_trial(&spec(Family::NoiseSweep, 0.0, all.clone()), seed, 3).unwrap();
            for o in &r.outcomes {
                let limit = if o.label == "rsdpe" { 1e-2 } else { 1e-6 };
                assert!(o.sq_error.unwrap() <= limit, "{} {:?}", o.label, o.sq_error);
            }
            assert!(r.bounds.is_none());
        }
    }

    #[test]
    fn same_seed_same_result() {
        let s = spec(Family::NoiseSweep, 4.0, vec![Method::Le, Method::Rsdpe]);
        let a = run_trial(&s, 11, 7).unwrap();
        let b = run_trial(&s, 11, 7).unwrap();
        assert_eq!(a.outcomes, b.outcomes);
        let c = run_trial(&s, 11, 8).unwrap();
        assert_ne!(a.scenario.target(), c.scenario.target());
    }

    #[test]
    fn bcd_rows_per_iteration() {
        let s = spec(Family::Bcd, 1.0, vec![Method::RsdpBcde]);
        let r = run_trial(&s, 1, 0).unwrap();
        let labels: Vec<_> = r.outcomes.iter().map(|o| o.label.as_str()).collect();
        assert_eq!(labels.len(), 2 * BCD_REPORTED_ITERATIONS.len());
        assert_eq!(labels[0], "rsdp_bcde_k1");
        assert_eq!(labels[1], "rsdp_bcde_k1_ple");
        assert_eq!(labels[7], "rsdp_bcde_k5_ple");
    }

    #[test]
    fn exponent_perturbation_changes_only_model() {
        let mut cfg = ExperimentConfig::for_family(Family::PleUncertainty);
        cfg.estimators = vec![Method::Le];
        let exact = run_trial(&TrialSpec::new(&cfg, Layout::Random, 0.0), 5, 1).unwrap();
        let noisy = run_trial(&TrialSpec::new(&cfg, Layout::Random, 1.0), 5, 1).unwrap();
        assert_eq!(exact.scenario.target(), noisy.scenario.target());
        assert_eq!(exact.bounds, noisy.bounds);
        assert_ne!(exact.outcomes[0].sq_error, noisy.outcomes[0].sq_error);
    }

    #[test]
    fn fixed_layout_keeps_anchors() {
        let mut cfg = ExperimentConfig::for_family(Family::Placement);
        cfg.estimators = vec![Method::UBlue];
        let s = TrialSpec::new(&cfg, Layout::Fixed(Placement::Bad), 1.0);
        let r = run_trial(&s, 2, 4).unwrap();
        assert_eq!(r.scenario.anchors(), clustered_scenario(Placement::Bad).anchors());
    }
}
