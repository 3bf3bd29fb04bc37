//! Fisher information and Cramér-Rao bounds for DRSS measurements.
//!
//! The DRSS vector against a reference anchor `s₁` is Gaussian with mean
//! `μᵢ = -10γ log10(‖x - sᵢ‖ / ‖x - s₁‖)` and covariance `σ²ₙ ΓΓᵀ`, which does
//! not depend on the parameters, so `J = (∂μ)ᵀ (σ²ₙ ΓΓᵀ)⁻¹ (∂μ)`.
//! The information is the same whichever anchor is the reference; the
//! closest anchor is used.

use std::f64::consts::LN_10;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::scenario::{Scenario, MIN_VALID_SEPARATION};
use crate::{Error, Result};

/// Unknowns the information matrix is taken with respect to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parameterization {
    /// `x` with the exponent known.
    Location,
    /// `[x; γ]`.
    LocationAndPle,
    /// `γ` with the location known.
    Ple,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    /// Location bound with the exponent unknown (CRLB₁).
    JointLocation,
    /// Exponent bound with the location unknown (CRLB₂).
    JointPle,
    /// Location bound with the exponent known (CRLB₃).
    LocationKnownPle,
    /// Exponent bound with the location known (CRLB₄).
    PleKnownLocation,
}

#[derive(Debug, Clone, Copy)]
pub struct CrlbRequest<'a> {
    pub scenario: &'a Scenario,
    pub gamma: f64,
    pub sigma_n2: f64,
    pub which: Bound,
}

/// All four bounds for one scenario, in metres (location) or exponent units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrlbSet {
    pub joint_location: f64,
    pub joint_ple: f64,
    pub location_known_ple: f64,
    pub ple_known_location: f64,
}

fn validate(gamma: f64, sigma_n2: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::NonPositiveGamma(gamma));
    }
    if !(sigma_n2 > 0.0 && sigma_n2.is_finite()) {
        return Err(Error::InvalidArgument(format!("noise variance must be positive, got {sigma_n2}")));
    }
    Ok(())
}

fn distances(x: &DVector<f64>, anchors: &[DVector<f64>]) -> Result<Vec<f64>> {
    anchors
        .iter()
        .map(|a| {
            let r = (x - a).norm();
            if r <= MIN_VALID_SEPARATION {
                Err(Error::CoincidentPoints { distance: r })
            } else {
                Ok(r)
            }
        })
        .collect()
}

/// Index of the anchor closest to `x` (lowest id on ties).
pub fn closest_anchor(x: &DVector<f64>, anchors: &[DVector<f64>]) -> usize {
    let mut best = 0;
    for (i, a) in anchors.iter().enumerate() {
        if (x - a).norm_squared() < (x - &anchors[best]).norm_squared() {
            best = i;
        }
    }
    best
}

/// Noise-free DRSS mean against `reference`, non-reference anchors in id order.
pub fn mean_drss(x: &DVector<f64>, anchors: &[DVector<f64>], reference: usize, gamma: f64) -> Result<DVector<f64>> {
    let r = distances(x, anchors)?;
    let vals: Vec<f64> = (0..anchors.len())
        .filter(|&i| i != reference)
        .map(|i| -10.0 * gamma * (r[i] / r[reference]).log10())
        .collect();
    Ok(DVector::from_vec(vals))
}

/// Jacobian of [`mean_drss`], one column per parameter.
pub fn drss_jacobian(
    x: &DVector<f64>,
    anchors: &[DVector<f64>],
    reference: usize,
    gamma: f64,
    param: Parameterization,
) -> Result<DMatrix<f64>> {
    if reference >= anchors.len() {
        return Err(Error::InvalidArgument(format!("reference {reference} out of range")));
    }
    let d = x.len();
    let r = distances(x, anchors)?;
    let s1 = &anchors[reference];
    let r1sq = r[reference] * r[reference];
    let others: Vec<usize> = (0..anchors.len()).filter(|&i| i != reference).collect();
    let (with_x, with_g) = match param {
        Parameterization::Location => (true, false),
        Parameterization::LocationAndPle => (true, true),
        Parameterization::Ple => (false, true),
    };
    let cols = if with_x { d } else { 0 } + usize::from(with_g);
    let mut jac = DMatrix::zeros(others.len(), cols);
    let scale = -10.0 * gamma / LN_10;
    for (row, &i) in others.iter().enumerate() {
        let si = &anchors[i];
        let risq = r[i] * r[i];
        if with_x {
            for k in 0..d {
                jac[(row, k)] = scale * ((x[k] - si[k]) * r1sq - (x[k] - s1[k]) * risq) / (risq * r1sq);
            }
        }
        if with_g {
            jac[(row, cols - 1)] = -10.0 * (r[i] / r[reference]).log10();
        }
    }
    Ok(jac)
}

/// FIM with an explicit reference anchor.
pub fn fim_with_reference(
    scenario: &Scenario,
    gamma: f64,
    sigma_n2: f64,
    param: Parameterization,
    reference: usize,
) -> Result<DMatrix<f64>> {
    validate(gamma, sigma_n2)?;
    let jac = drss_jacobian(scenario.target(), scenario.anchors(), reference, gamma, param)?;
    // (ΓΓᵀ)⁻¹ = I - 11ᵀ/N
    let n = scenario.n_anchors() as f64;
    let col_sums = DVector::from_iterator(jac.ncols(), jac.column_iter().map(|c| c.sum()));
    let j = (jac.transpose() * &jac - &col_sums * col_sums.transpose() / n) / sigma_n2;
    Ok((&j + j.transpose()) * 0.5)
}

/// Fisher information matrix at the scenario's target.
pub fn fim(scenario: &Scenario, gamma: f64, sigma_n2: f64, param: Parameterization) -> Result<DMatrix<f64>> {
    let reference = closest_anchor(scenario.target(), scenario.anchors());
    fim_with_reference(scenario, gamma, sigma_n2, param, reference)
}

fn inverse(j: DMatrix<f64>) -> Result<DMatrix<f64>> {
    j.cholesky().map(|c| c.inverse()).ok_or(Error::SingularFim)
}

pub fn crlb(request: &CrlbRequest) -> Result<f64> {
    let CrlbRequest { scenario, gamma, sigma_n2, which } = *request;
    let d = scenario.dimension();
    let bound = match which {
        Bound::JointLocation => {
            let inv = inverse(fim(scenario, gamma, sigma_n2, Parameterization::LocationAndPle)?)?;
            (0..d).map(|k| inv[(k, k)]).sum::<f64>()
        }
        Bound::JointPle => {
            let inv = inverse(fim(scenario, gamma, sigma_n2, Parameterization::LocationAndPle)?)?;
            inv[(d, d)]
        }
        Bound::LocationKnownPle => {
            let inv = inverse(fim(scenario, gamma, sigma_n2, Parameterization::Location)?)?;
            inv.trace()
        }
        Bound::PleKnownLocation => {
            let j = fim(scenario, gamma, sigma_n2, Parameterization::Ple)?;
            if !(j[(0, 0)] > 0.0) {
                return Err(Error::SingularFim);
            }
            1.0 / j[(0, 0)]
        }
    };
    if !(bound >= 0.0 && bound.is_finite()) {
        return Err(Error::SingularFim);
    }
    Ok(bound.sqrt())
}

pub fn crlb_all(scenario: &Scenario, gamma: f64, sigma_n2: f64) -> Result<CrlbSet> {
    let get = |which| crlb(&CrlbRequest { scenario, gamma, sigma_n2, which });
    Ok(CrlbSet {
        joint_location: get(Bound::JointLocation)?,
        joint_ple: get(Bound::JointPle)?,
        location_known_ple: get(Bound::LocationKnownPle)?,
        ple_known_location: get(Bound::PleKnownLocation)?,
    })
}
