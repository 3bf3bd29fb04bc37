//! Log-normal shadowing RSS simulation and DRSS differencing.
//!
//! RSS values are kept in dB everywhere except inside the small-scale fading
//! collection path ([`sample_instantaneous_power`], [`estimate_rss_ml`]), which
//! works with linear power.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};

use crate::scenario::{Scenario, MIN_VALID_SEPARATION};
use crate::{Error, Result};

/// Reference distance of the path-loss model, in meters.
pub const REFERENCE_DISTANCE: f64 = 1.0;

/// Log-normal shadowing channel.
///
/// The measurement noise seen by a DRSS estimator has variance
/// `sigma_p0² + sigma_chi²` (see [`ChannelParams::sigma_n2`]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Path-loss exponent.
    pub gamma: f64,
    /// Shadowing standard deviation, dB.
    pub sigma_chi: f64,
    /// Transmit-power deviation standard deviation, dB.
    pub sigma_p0: f64,
    /// Nominal transmit power at the reference distance, dB.
    pub p0_nominal: f64,
}

impl ChannelParams {
    pub fn new(gamma: f64, sigma_chi: f64, sigma_p0: f64, p0_nominal: f64) -> Result<Self> {
        let params = ChannelParams { gamma, sigma_chi, sigma_p0, p0_nominal };
        params.validate()?;
        Ok(params)
    }

    /// Noise-free channel with the given exponent.
    pub fn noiseless(gamma: f64) -> Result<Self> {
        Self::new(gamma, 0.0, 0.0, 0.0)
    }

    /// Splits a total measurement-noise variance evenly between shadowing and
    /// transmit-power deviation.
    pub fn with_noise_variance(gamma: f64, sigma_n2: f64) -> Result<Self> {
        if !(sigma_n2 >= 0.0) {
            return Err(Error::InvalidArgument(format!("noise variance {sigma_n2} must be non-negative")));
        }
        let half = (sigma_n2 / 2.0).sqrt();
        Self::new(gamma, half, half, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::NonPositiveGamma(self.gamma));
        }
        if !(self.sigma_chi >= 0.0 && self.sigma_p0 >= 0.0) {
            return Err(Error::InvalidArgument("noise standard deviations must be non-negative".into()));
        }
        if !self.p0_nominal.is_finite() {
            return Err(Error::InvalidArgument("nominal transmit power must be finite".into()));
        }
        Ok(())
    }

    /// Total measurement-noise variance `σ²_n = σ²_P0 + σ²_χ`.
    pub fn sigma_n2(&self) -> f64 {
        self.sigma_p0 * self.sigma_p0 + self.sigma_chi * self.sigma_chi
    }
}

/// Nakagami-m small-scale fading for the RSS collection path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FadingParams {
    /// Fading parameter; smaller means more severe fading.
    pub m: f64,
    /// Number of instantaneous power samples averaged per RSS value.
    pub k_samples: usize,
}

impl FadingParams {
    pub fn new(m: f64, k_samples: usize) -> Result<Self> {
        if !(m >= 0.5 && m.is_finite()) {
            return Err(Error::InvalidArgument(format!("fading parameter m = {m} must be >= 0.5")));
        }
        if k_samples == 0 {
            return Err(Error::InvalidArgument("at least one power sample is required".into()));
        }
        Ok(FadingParams { m, k_samples })
    }
}

/// One RSS value per anchor, in dB. `anchor_ids[j]` names the anchor that
/// produced `rss_db[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RssSampleSet {
    pub rss_db: Vec<f64>,
    pub anchor_ids: Vec<usize>,
}

impl RssSampleSet {
    /// Samples in natural anchor order `0..N`.
    pub fn new(rss_db: Vec<f64>) -> Self {
        let anchor_ids = (0..rss_db.len()).collect();
        RssSampleSet { rss_db, anchor_ids }
    }

    /// Adds the same offset to every RSS value.
    pub fn offset(&self, c: f64) -> Self {
        RssSampleSet {
            rss_db: self.rss_db.iter().map(|v| v + c).collect(),
            anchor_ids: self.anchor_ids.clone(),
        }
    }
}

/// DRSS measurements relative to a reference node (RN).
///
/// `drss_db[j]` is `P_i - P_rn` for the j-th non-RN anchor in ascending id order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrssSampleSet {
    pub rn_index: usize,
    pub drss_db: Vec<f64>,
}

impl DrssSampleSet {
    pub fn n_anchors(&self) -> usize {
        self.drss_db.len() + 1
    }

    /// Ids of the non-RN anchors in the order of `drss_db`.
    pub fn other_ids(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_anchors()).filter(move |&i| i != self.rn_index)
    }

    /// Anchor ids with the RN first followed by the others in ascending order.
    pub fn rn_first_order(&self) -> Vec<usize> {
        std::iter::once(self.rn_index).chain(self.other_ids()).collect()
    }
}

fn separation(a: &DVector<f64>, b: &DVector<f64>) -> Result<f64> {
    let dist = (a - b).norm();
    if dist <= MIN_VALID_SEPARATION {
        return Err(Error::CoincidentPoints { distance: dist });
    }
    Ok(dist)
}

/// Noise-free received power `P0 - 10 γ log10(‖x - s‖ / d0)`.
pub fn mean_rss_db(target: &DVector<f64>, anchor: &DVector<f64>, params: &ChannelParams) -> Result<f64> {
    let dist = separation(target, anchor)?;
    Ok(params.p0_nominal - 10.0 * params.gamma * (dist / REFERENCE_DISTANCE).log10())
}

fn normal(std: f64) -> Normal<f64> {
    Normal::new(0.0, std).expect("standard deviation is finite and non-negative")
}

/// Mean RSS plus independent transmit-power deviation and shadowing per anchor.
pub fn sample_rss<R: Rng + ?Sized>(scenario: &Scenario, params: &ChannelParams, rng: &mut R) -> RssSampleSet {
    let p0 = normal(params.sigma_p0);
    let chi = normal(params.sigma_chi);
    let rss = scenario
        .anchors()
        .iter()
        .map(|a| {
            let mean = mean_rss_db(scenario.target(), a, params).expect("scenario guarantees separation");
            mean + p0.sample(rng) + chi.sample(rng)
        })
        .collect();
    RssSampleSet::new(rss)
}

/// [`sample_rss`] followed by the small-scale fading collection procedure: the
/// shadowed RSS of each anchor is converted to linear power `Ω`, `K` Gamma
/// distributed instantaneous powers are drawn and the ML estimate is taken.
pub fn sample_rss_with_fading<R: Rng + ?Sized>(
    scenario: &Scenario,
    params: &ChannelParams,
    fading: &FadingParams,
    rng: &mut R,
) -> Result<RssSampleSet> {
    let shadowed = sample_rss(scenario, params, rng);
    let mut out = Vec::with_capacity(shadowed.rss_db.len());
    for &p_db in &shadowed.rss_db {
        let omega = 10f64.powf(p_db / 10.0);
        let samples = (0..fading.k_samples)
            .map(|_| sample_instantaneous_power(omega, fading, rng))
            .collect::<Result<Vec<_>>>()?;
        out.push(estimate_rss_ml(&samples)?);
    }
    Ok(RssSampleSet::new(out))
}

/// One Gamma(m, Ω/m) draw: mean `Ω`, variance `Ω²/m`.
pub fn sample_instantaneous_power<R: Rng + ?Sized>(omega: f64, fading: &FadingParams, rng: &mut R) -> Result<f64> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::InvalidArgument(format!("mean power {omega} must be positive")));
    }
    let dist = Gamma::new(fading.m, omega / fading.m)
        .map_err(|e| Error::InvalidArgument(format!("gamma distribution: {e}")))?;
    Ok(dist.sample(rng))
}

/// Sample mean of linear powers, returned in dB.
pub fn estimate_rss_ml(power_samples: &[f64]) -> Result<f64> {
    if power_samples.is_empty() {
        return Err(Error::InvalidArgument("no power samples".into()));
    }
    if let Some(bad) = power_samples.iter().find(|&&p| !(p > 0.0)) {
        return Err(Error::InvalidArgument(format!("power sample {bad} must be positive")));
    }
    let mean = power_samples.iter().sum::<f64>() / power_samples.len() as f64;
    Ok(10.0 * mean.log10())
}

/// Picks the strongest anchor as RN (lowest id on ties) and differences the
/// other anchors against it.
pub fn drss_from_rss(rss: &RssSampleSet) -> DrssSampleSet {
    let n = rss.rss_db.len();
    let mut by_id = vec![f64::NAN; n];
    for (&id, &v) in rss.anchor_ids.iter().zip(&rss.rss_db) {
        by_id[id] = v;
    }
    let mut rn = 0;
    for (i, &v) in by_id.iter().enumerate().skip(1) {
        if v > by_id[rn] {
            rn = i;
        }
    }
    let drss_db = (0..n).filter(|&i| i != rn).map(|i| by_id[i] - by_id[rn]).collect();
    DrssSampleSet { rn_index: rn, drss_db }
}
