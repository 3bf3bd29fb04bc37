//! Location estimators for the whitened DRSS model.
//!
//! | function | method |
//! |---|---|
//! | [`u_blue`] | unconstrained BLUE of `θ = [x; ‖x‖²]` |
//! | [`a_blue`] | U-BLUE refined by a linearised constraint step |
//! | [`le`] | exact constrained least squares (GTRS via bisection on the multiplier) |
//! | [`rsdpe`] | robust SDP relaxation against a bounded model perturbation |
//! | [`rsdp_bcde`] | joint location and path-loss-exponent estimation by block coordinate descent |

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::sdp::SdpStatus;

mod bcd;
mod blue;
mod lagrangian;
mod robust;

pub use bcd::{rsdp_bcde, BcdIterate, BcdOpts};
pub use blue::{a_blue, u_blue, CONDITION_LIMIT};
pub use lagrangian::{gtrs_interval, gtrs_secular, le, LeOptions};
pub use robust::{ple_step, rsdpe, rsdpe_problem, zeta_tls, RobustOpts, ZetaBound};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    UBlue,
    ABlue,
    Le,
    Rsdpe,
    RsdpBcde,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::UBlue => "u_blue",
            Method::ABlue => "a_blue",
            Method::Le => "le",
            Method::Rsdpe => "rsdpe",
            Method::RsdpBcde => "rsdp_bcde",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        Ok(match s {
            "u_blue" => Method::UBlue,
            "a_blue" => Method::ABlue,
            "le" => Method::Le,
            "rsdpe" => Method::Rsdpe,
            "rsdp_bcde" => Method::RsdpBcde,
            other => return Err(crate::Error::InvalidArgument(format!("unknown estimator `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateStatus {
    Converged,
    /// `ΦᵀΦ` exceeded [`CONDITION_LIMIT`]; a pseudo-inverse was used.
    IllConditioned,
    /// An iteration cap was hit (SDP solver or BCD loop).
    MaxIter,
    /// An inner solve failed; the estimate is the best earlier iterate.
    InnerFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub iterations: usize,
    /// `‖Φθ̂ - ρ‖₂` for the model the estimate was computed from.
    pub residual: f64,
    pub lambda: Option<f64>,
    pub zeta: Option<f64>,
    /// Optimal value of the SDP (for RSDPE the worst-case squared residual
    /// bound `t`).
    pub sdp_objective: Option<f64>,
    pub status: EstimateStatus,
    pub sdp_status: Option<SdpStatus>,
    /// Per-iteration location and exponent for the BCD estimator.
    pub history: Vec<BcdIterate>,
}

impl Diagnostics {
    pub(crate) fn basic(iterations: usize, residual: f64, status: EstimateStatus) -> Self {
        Self { iterations, residual, lambda: None, zeta: None, sdp_objective: None, status, sdp_status: None, history: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocationEstimate {
    pub x_hat: DVector<f64>,
    pub theta_hat: DVector<f64>,
    pub gamma_hat: Option<f64>,
    pub method: Method,
    pub diagnostics: Diagnostics,
}

impl LocationEstimate {
    pub(crate) fn new(theta_hat: DVector<f64>, method: Method, diagnostics: Diagnostics) -> Self {
        let d = theta_hat.len() - 1;
        Self { x_hat: theta_hat.rows(0, d).into_owned(), theta_hat, gamma_hat: None, method, diagnostics }
    }

    pub fn dimension(&self) -> usize {
        self.x_hat.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in [Method::UBlue, Method::ABlue, Method::Le, Method::Rsdpe, Method::RsdpBcde] {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("wls".parse::<Method>().is_err());
    }
}
