//! Linear DRSS model in the augmented parameter `θ = [x; ‖x‖²]`.
//!
//! Squaring the distance ratio of a DRSS measurement against the RN `s₁` gives,
//! per non-RN anchor `sᵢ` and with `P'ᵢ = 10^(Pᵢ₁ / (5γ))`,
//!
//! ```text
//! [2s₁ᵀ - 2P'ᵢ sᵢᵀ, P'ᵢ - 1] θ = ‖s₁‖² - P'ᵢ ‖sᵢ‖² + εᵢ
//! ```
//!
//! which stacks into `p = Ψθ + ε`. To first order `ε = C Γ n` with
//! `Γ = [-1 I]` and `n` the i.i.d. per-anchor measurement noise, so
//! `W = (ΓΓᵀ)^(-1/2)` whitens it: `ρ = Wp`, `Φ = WΨ`. The unknown scale `C`
//! (it depends on the RN distance) never needs to be computed because every
//! estimator is invariant to it.
//!
//! Rows are always ordered RN first, then the remaining anchors in ascending
//! id order; the provenance fields record the mapping back to anchor ids.

use nalgebra::{DMatrix, DVector};

use crate::channel::{drss_from_rss, mean_rss_db, ChannelParams, DrssSampleSet, RssSampleSet};
use crate::scenario::{Scenario, MIN_VALID_SEPARATION};
use crate::{Error, Result};

/// `Γ = [-1_(N-1) I_(N-1)]`, an `(N-1) x N` differencing matrix.
pub fn gamma_matrix(n_anchors: usize) -> Result<DMatrix<f64>> {
    if n_anchors < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 anchors, got {n_anchors}")));
    }
    let m = n_anchors - 1;
    Ok(DMatrix::from_fn(m, n_anchors, |i, j| {
        if j == 0 {
            -1.0
        } else if j == i + 1 {
            1.0
        } else {
            0.0
        }
    }))
}

/// Off-diagonal weight `β` of the whitener `W = I + β 11ᵀ` of size `N-1`.
///
/// `ΓΓᵀ = I + 11ᵀ` has eigenvalue `N` along `1` and `1` elsewhere, so its
/// inverse square root scales the `1` direction by `1/√N`.
fn whitener_beta(n_anchors: usize) -> f64 {
    let n = n_anchors as f64;
    (1.0 / n.sqrt() - 1.0) / (n - 1.0)
}

/// Dense `W = (ΓΓᵀ)^(-1/2)` of size `(N-1) x (N-1)`.
pub fn whitener(n_anchors: usize) -> Result<DMatrix<f64>> {
    if n_anchors < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 anchors, got {n_anchors}")));
    }
    let m = n_anchors - 1;
    let beta = whitener_beta(n_anchors);
    Ok(DMatrix::from_fn(m, m, |i, j| if i == j { 1.0 + beta } else { beta }))
}

/// Applies `W` to a vector in O(N).
pub fn whiten_vector(v: &DVector<f64>) -> DVector<f64> {
    let beta = whitener_beta(v.len() + 1);
    let shift = beta * v.sum();
    v.map(|x| x + shift)
}

/// Applies `W` to every column of `m` in O(N·cols).
pub fn whiten_matrix(m: &DMatrix<f64>) -> DMatrix<f64> {
    let beta = whitener_beta(m.nrows() + 1);
    let mut out = m.clone();
    for (j, col) in m.column_iter().enumerate() {
        let shift = beta * col.sum();
        out.column_mut(j).add_scalar_mut(shift);
    }
    out
}

/// `(Ψ, p)` before whitening, with the anchors in RN-first row order.
#[derive(Debug, Clone, PartialEq)]
pub struct UnwhitenedModel {
    pub psi: DMatrix<f64>,
    pub p: DVector<f64>,
    /// `P'ᵢ₁ = 10^(Pᵢ₁ / (5γ))` per row.
    pub pprime: DVector<f64>,
    pub gamma_used: f64,
    /// Anchor coordinates, RN first.
    pub anchors_used: Vec<DVector<f64>>,
    /// Anchor id of every entry of `anchors_used`.
    pub anchor_order: Vec<usize>,
    pub rn_index: usize,
}

/// Whitened model `ρ = Φθ + υ` with `Cov(υ) ∝ I`.
#[derive(Debug, Clone, PartialEq)]
pub struct WhitenedModel {
    pub phi: DMatrix<f64>,
    pub rho: DVector<f64>,
    pub gamma_used: f64,
    pub anchors_used: Vec<DVector<f64>>,
    pub anchor_order: Vec<usize>,
    pub rn_index: usize,
}

impl WhitenedModel {
    pub fn dimension(&self) -> usize {
        self.phi.ncols() - 1
    }

    /// `‖Φθ - ρ‖₂`.
    pub fn residual(&self, theta: &DVector<f64>) -> f64 {
        (&self.phi * theta - &self.rho).norm()
    }

    /// Least-squares cost on the constraint manifold, `‖Φ[x; ‖x‖²] - ρ‖²`.
    pub fn constrained_cost(&self, x: &DVector<f64>) -> f64 {
        self.residual(&augment(x)).powi(2)
    }
}

/// `[x; ‖x‖²]`.
pub fn augment(x: &DVector<f64>) -> DVector<f64> {
    let d = x.len();
    let mut theta = DVector::zeros(d + 1);
    theta.rows_mut(0, d).copy_from(x);
    theta[d] = x.norm_squared();
    theta
}

fn check_inputs(drss: &DrssSampleSet, anchors: &[DVector<f64>]) -> Result<usize> {
    let n = drss.n_anchors();
    if anchors.len() != n {
        return Err(Error::InvalidArgument(format!(
            "{} anchors supplied for {} DRSS samples",
            anchors.len(),
            drss.drss_db.len()
        )));
    }
    if drss.rn_index >= n {
        return Err(Error::InvalidArgument(format!("RN index {} out of range", drss.rn_index)));
    }
    let d = anchors[0].len();
    if anchors.iter().any(|a| a.len() != d) {
        return Err(Error::InvalidArgument("anchors have mixed dimensions".into()));
    }
    Ok(d)
}

/// Builds `(Ψ, p)` from DRSS samples and a path-loss exponent.
pub fn build_unwhitened(drss: &DrssSampleSet, anchors: &[DVector<f64>], gamma: f64) -> Result<UnwhitenedModel> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::NonPositiveGamma(gamma));
    }
    let d = check_inputs(drss, anchors)?;
    let order = drss.rn_first_order();
    let s1 = &anchors[drss.rn_index];
    let s1_sq = s1.norm_squared();
    let m = drss.drss_db.len();

    let pprime = DVector::from_iterator(m, drss.drss_db.iter().map(|p| 10f64.powf(p / (5.0 * gamma))));
    let mut psi = DMatrix::zeros(m, d + 1);
    let mut p = DVector::zeros(m);
    for (row, i) in drss.other_ids().enumerate() {
        let si = &anchors[i];
        let pp = pprime[row];
        for k in 0..d {
            psi[(row, k)] = 2.0 * s1[k] - 2.0 * pp * si[k];
        }
        psi[(row, d)] = pp - 1.0;
        p[row] = s1_sq - pp * si.norm_squared();
    }
    Ok(UnwhitenedModel {
        psi,
        p,
        pprime,
        gamma_used: gamma,
        anchors_used: order.iter().map(|&i| anchors[i].clone()).collect(),
        anchor_order: order,
        rn_index: drss.rn_index,
    })
}

/// `Φ = WΨ`, `ρ = Wp`.
pub fn build_whitened(unwhitened: &UnwhitenedModel) -> WhitenedModel {
    WhitenedModel {
        phi: whiten_matrix(&unwhitened.psi),
        rho: whiten_vector(&unwhitened.p),
        gamma_used: unwhitened.gamma_used,
        anchors_used: unwhitened.anchors_used.clone(),
        anchor_order: unwhitened.anchor_order.clone(),
        rn_index: unwhitened.rn_index,
    }
}

/// Convenience: [`build_unwhitened`] followed by [`build_whitened`].
pub fn whitened_model(drss: &DrssSampleSet, anchors: &[DVector<f64>], gamma: f64) -> Result<WhitenedModel> {
    Ok(build_whitened(&build_unwhitened(drss, anchors, gamma)?))
}

/// Whitened linear model in the path-loss exponent for a fixed location:
/// `c = d γ + e` with `c = Wπ`, `d = Wλ`, `λᵢ = -10 log10(‖x - sᵢ‖ / ‖x - s₁‖)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PleModel {
    pub c: DVector<f64>,
    pub dvec: DVector<f64>,
    pub location: DVector<f64>,
}

impl PleModel {
    /// Ordinary least-squares exponent `dᵀc / dᵀd`.
    pub fn least_squares_gamma(&self) -> f64 {
        self.dvec.dot(&self.c) / self.dvec.norm_squared()
    }
}

pub fn build_ple_model(location: &DVector<f64>, anchors: &[DVector<f64>], drss: &DrssSampleSet) -> Result<PleModel> {
    let d = check_inputs(drss, anchors)?;
    if location.len() != d {
        return Err(Error::InvalidArgument(format!("location has dimension {}, anchors {d}", location.len())));
    }
    let dist = |i: usize| -> Result<f64> {
        let r = (location - &anchors[i]).norm();
        if r <= MIN_VALID_SEPARATION {
            return Err(Error::CoincidentPoints { distance: r });
        }
        Ok(r)
    };
    let d1 = dist(drss.rn_index)?;
    let lambda = drss
        .other_ids()
        .map(|i| Ok(-10.0 * (dist(i)? / d1).log10()))
        .collect::<Result<Vec<_>>>()?;
    let pi = DVector::from_column_slice(&drss.drss_db);
    Ok(PleModel {
        c: whiten_vector(&pi),
        dvec: whiten_vector(&DVector::from_vec(lambda)),
        location: location.clone(),
    })
}

/// Residuals of the RSS/DRSS whitened-model equivalence check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivalenceReport {
    /// `‖P'₁² P'P'ᵀ - I‖_F`.
    pub unitarity_error: f64,
    /// `‖Φθ - P'B'φ‖ / (1 + ‖Φθ‖)`.
    pub model_error: f64,
    pub tolerance: f64,
}

impl EquivalenceReport {
    pub fn holds(&self) -> bool {
        self.unitarity_error <= self.tolerance && self.model_error <= self.tolerance
    }
}

/// Checks, on a noise-free instance, that the whitened DRSS model equals the
/// whitened RSS model after projecting out the nominal power:
///
/// * `P' = -(1/P'₁) W Γ` is a scaled unitary map, `P'P'ᵀ = I / P'₁²`;
/// * `Φθ = P'B'φ` with `B' = D'B`, `D' = diag(P'ᵢ)`, `φ = [x; ‖x‖²; P̄'₀]`.
pub fn verify_rss_equivalence(scenario: &Scenario, params: &ChannelParams, tolerance: f64) -> Result<bool> {
    let report = rss_equivalence_report(scenario, params, None, tolerance)?;
    Ok(report.holds())
}

/// Same check as [`verify_rss_equivalence`] with full residuals. When
/// `dprime` is given it replaces the RSS-derived `P'ᵢ = 10^(Pᵢ / (5γ))`
/// (indexed by anchor id) used to build `P'` and `B'`.
pub fn rss_equivalence_report(
    scenario: &Scenario,
    params: &ChannelParams,
    dprime: Option<&[f64]>,
    tolerance: f64,
) -> Result<EquivalenceReport> {
    let n = scenario.n_anchors();
    let d = scenario.dimension();
    let x = scenario.target();
    let rss = scenario
        .anchors()
        .iter()
        .map(|a| mean_rss_db(x, a, params))
        .collect::<Result<Vec<_>>>()?;
    let drss = drss_from_rss(&RssSampleSet::new(rss.clone()));
    let model = whitened_model(&drss, scenario.anchors(), params.gamma)?;
    let order = drss.rn_first_order();

    let dp: Vec<f64> = match dprime {
        Some(v) => {
            if v.len() != n {
                return Err(Error::InvalidArgument(format!("{} scaling entries for {n} anchors", v.len())));
            }
            order.iter().map(|&i| v[i]).collect()
        }
        None => order.iter().map(|&i| 10f64.powf(rss[i] / (5.0 * params.gamma))).collect(),
    };
    let p1 = dp[0];
    let w = whitener(n)?;
    let proj = (&w * gamma_matrix(n)?) * (-1.0 / p1);

    let eye = DMatrix::<f64>::identity(n - 1, n - 1);
    let unitarity_error = (&proj * proj.transpose() * (p1 * p1) - eye).norm();

    // B rows [2sᵢᵀ, -1, 1/P'ᵢ], scaled by D'.
    let mut b_prime = DMatrix::zeros(n, d + 2);
    for (row, &i) in order.iter().enumerate() {
        let s = &scenario.anchors()[i];
        for k in 0..d {
            b_prime[(row, k)] = dp[row] * 2.0 * s[k];
        }
        b_prime[(row, d)] = -dp[row];
        b_prime[(row, d + 1)] = 1.0;
    }
    let p0_prime = 10f64.powf(params.p0_nominal / (5.0 * params.gamma));
    let mut phi_vec = DVector::zeros(d + 2);
    phi_vec.rows_mut(0, d).copy_from(x);
    phi_vec[d] = x.norm_squared();
    phi_vec[d + 1] = p0_prime;

    let lhs = &model.phi * augment(x);
    let rhs = &proj * (b_prime * phi_vec);
    let model_error = (&lhs - rhs).norm() / (1.0 + lhs.norm());
    Ok(EquivalenceReport { unitarity_error, model_error, tolerance })
}
