//! Source localization from differential received signal strength (DRSS).
//!
//! The crate is organised bottom-up:
//!
//! * [`scenario`]: anchor layouts and targets, preset and randomized.
//! * [`channel`]: log-normal shadowing RSS simulation, the Nakagami small-scale
//!   fading collection path, and RSS to DRSS differencing.
//! * [`model`]: the linear DRSS model in `θ = [x; ‖x‖²]`, its whitened form and
//!   the linear path-loss-exponent model used by the joint estimator.
//! * [`sdp`]: a small dense primal-dual interior-point solver for block LMIs.
//! * [`estimators`]: U-BLUE, A-BLUE, the Lagrangian (GTRS) estimator, the robust
//!   SDP estimator and the block coordinate descent joint location/PLE estimator.
//! * [`crlb`]: Fisher information and Cramér-Rao bounds for the DRSS model.

pub mod channel;
pub mod crlb;
mod error;
pub mod estimators;
pub mod model;
pub mod scenario;
pub mod sdp;

pub use error::{Error, Result};
