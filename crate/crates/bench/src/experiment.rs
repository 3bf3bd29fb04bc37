//! Sweeps, parallel trials and RMSE aggregation.

use drss::scenario::Placement;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, Family};
use crate::trial::{run_trial, Layout, TrialResult, TrialSpec};
use crate::BenchError;

/// One line of output: an estimator at one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub family: String,
    pub sweep_value: f64,
    pub estimator: String,
    /// Root mean squared error over the estimator's successful trials.
    #[serde(rename = "rmse_m")]
    pub rmse: Option<f64>,
    /// Per-trial bound averaged over the trials where it exists.
    #[serde(rename = "crlb_m")]
    pub crlb_ref: Option<f64>,
    pub trials_used: usize,
    pub failures: usize,
}

/// Layouts run by a family, with the label used in the `family` column.
pub fn layouts(family: Family) -> Vec<(Layout, String)> {
    match family {
        Family::Placement => vec![
            (Layout::Fixed(Placement::Good), "placement/good".into()),
            (Layout::Fixed(Placement::Bad), "placement/bad".into()),
        ],
        f => vec![(Layout::Random, f.name().into())],
    }
}

/// Runs `trials` trials in parallel. Results come back in trial order.
pub fn run_trials(spec: &TrialSpec, seed: u64, trials: usize) -> Result<Vec<TrialResult>, BenchError> {
    (0..trials as u64)
        .into_par_iter()
        .map(|i| run_trial(spec, seed, i).map_err(|e| BenchError::Runtime(format!("trial {i}: {e}"))))
        .collect()
}

/// Aggregates trial outcomes into one row per output label.
pub fn aggregate(family: &str, sweep_value: f64, results: &[TrialResult]) -> Vec<ResultRow> {
    let Some(first) = results.first() else { return Vec::new() };
    first
        .outcomes
        .iter()
        .enumerate()
        .map(|(j, o)| {
            let errors: Vec<f64> = results.iter().filter_map(|r| r.outcomes[j].sq_error).collect();
            let bounds: Vec<f64> = results.iter().filter_map(|r| r.outcomes[j].crlb).collect();
            let mean = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
            ResultRow {
                family: family.to_string(),
                sweep_value,
                estimator: o.label.clone(),
                rmse: mean(&errors).map(f64::sqrt),
                crlb_ref: mean(&bounds),
                trials_used: errors.len(),
                failures: results.len() - errors.len(),
            }
        })
        .collect()
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>, BenchError> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for &value in cfg.values(cfg.sweep) {
        for (layout, label) in layouts(cfg.family) {
            let spec = TrialSpec::new(cfg, layout, value);
            let results = run_trials(&spec, cfg.seed, cfg.trials)?;
            rows.extend(aggregate(&label, value, &results));
        }
    }
    rows.sort_by(|a, b| {
        a.sweep_value
            .total_cmp(&b.sweep_value)
            .then_with(|| a.estimator.cmp(&b.estimator))
            .then_with(|| a.family.cmp(&b.family))
    });
    Ok(rows)
}
