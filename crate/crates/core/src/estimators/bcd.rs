//! Joint location / path-loss-exponent estimation by block coordinate descent.
//!
//! Each iteration rebuilds the whitened model with the current exponent,
//! takes a robust SDP location step, then refits the exponent from the new
//! location with the scalar robust LMI of [`ple_step`]. Both uncertainty
//! bounds are re-derived from the data by total least squares every
//! iteration.

use nalgebra::{DMatrix, DVector};

use super::robust::{ple_step, rsdpe, zeta_tls, RobustOpts, ZetaBound};
use super::{Diagnostics, EstimateStatus, LocationEstimate, Method};
use crate::channel::DrssSampleSet;
use crate::model::{build_ple_model, whitened_model};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BcdOpts {
    pub gamma_init: f64,
    /// Stop once consecutive location iterates are within `xi` metres.
    pub xi: f64,
    pub max_iter: usize,
    pub robust: RobustOpts,
}

impl Default for BcdOpts {
    fn default() -> Self {
        Self { gamma_init: 4.0, xi: 1e-3, max_iter: 50, robust: RobustOpts::default() }
    }
}

impl BcdOpts {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_init > 0.0 && self.gamma_init.is_finite()) {
            return Err(Error::NonPositiveGamma(self.gamma_init));
        }
        if !(self.xi >= 0.0) {
            return Err(Error::InvalidArgument(format!("xi must be non-negative, got {}", self.xi)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// Location and exponent after one full iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct BcdIterate {
    pub x: DVector<f64>,
    pub gamma: f64,
}

struct Step {
    theta: DVector<f64>,
    gamma: f64,
    residual: f64,
    zeta: f64,
}

fn iterate(drss: &DrssSampleSet, anchors: &[DVector<f64>], gamma: f64, opts: &BcdOpts) -> Result<Step> {
    let model = whitened_model(drss, anchors, gamma)?;
    let loc = rsdpe(&model.phi, &model.rho, &RobustOpts { zeta: ZetaBound::Tls, ..opts.robust })?;
    let ple = build_ple_model(&loc.x_hat, anchors, drss)?;
    let dmat = DMatrix::from_column_slice(ple.dvec.len(), 1, ple.dvec.as_slice());
    let zeta2 = zeta_tls(&dmat, &ple.c)?;
    let (g, _, _) = ple_step(&ple, zeta2, &opts.robust.sdp)?;
    if !(g > 0.0 && g.is_finite()) {
        return Err(Error::NonPositiveGamma(g));
    }
    Ok(Step { theta: loc.theta_hat, gamma: g, residual: loc.diagnostics.residual, zeta: loc.diagnostics.zeta.unwrap_or(0.0) })
}

/// Robust SDP block coordinate descent estimator of location and exponent.
pub fn rsdp_bcde(drss: &DrssSampleSet, anchors: &[DVector<f64>], opts: &BcdOpts) -> Result<LocationEstimate> {
    opts.validate()?;
    let d = anchors.first().map(|a| a.len()).unwrap_or(0);
    if anchors.len() < d + 3 {
        return Err(Error::InvalidScenario(format!("{} anchors for dimension {d}", anchors.len())));
    }

    let mut gamma = opts.gamma_init;
    let mut history: Vec<BcdIterate> = Vec::new();
    let mut last: Option<Step> = None;
    let mut status = EstimateStatus::MaxIter;

    for _ in 0..opts.max_iter {
        let step = match iterate(drss, anchors, gamma, opts) {
            Ok(s) => s,
            Err(e) if last.is_none() => return Err(e),
            Err(_) => {
                status = EstimateStatus::InnerFailure;
                break;
            }
        };
        let x = step.theta.rows(0, d).into_owned();
        let moved = history.last().map(|prev| (&x - &prev.x).norm());
        gamma = step.gamma;
        history.push(BcdIterate { x, gamma });
        last = Some(step);
        if moved.is_some_and(|m| m <= opts.xi) {
            status = EstimateStatus::Converged;
            break;
        }
    }

    let step = last.expect("first iteration succeeded");
    let mut diag = Diagnostics::basic(history.len(), step.residual, status);
    diag.zeta = Some(step.zeta);
    diag.history = history;
    let mut est = LocationEstimate::new(step.theta, Method::RsdpBcde, diag);
    est.gamma_hat = Some(step.gamma);
    Ok(est)
}
