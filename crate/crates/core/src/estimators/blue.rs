use nalgebra::{DMatrix, DVector};

use super::{Diagnostics, EstimateStatus, LocationEstimate, Method};
use crate::model::{augment, WhitenedModel};
use crate::{Error, Result};

/// Largest condition number of `ΦᵀΦ` solved directly.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Least-squares `θ̂ = (ΦᵀΦ)⁻¹Φᵀρ` through the SVD of `Φ`, plus the
/// condition number of `ΦᵀΦ`.
pub(crate) fn least_squares(phi: &DMatrix<f64>, rho: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
    let svd = phi.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let rank_tol = smax * f64::EPSILON * phi.nrows().max(phi.ncols()) as f64;
    if !(smin > rank_tol) {
        let condition = if smin > 0.0 { (smax / smin).powi(2) } else { f64::INFINITY };
        return Err(Error::SingularModel { condition });
    }
    let condition = (smax / smin).powi(2);
    let theta = svd.solve(rho, rank_tol).map_err(|_| Error::SingularModel { condition })?;
    Ok((theta, condition))
}

/// Length scale `s` of the unknown location, taken from the least-squares
/// fit. Substituting `x = s x̄`, `θ_(d+1) = s² θ̄_(d+1)` keeps the constraint
/// `θ_(d+1) = ‖x‖²` in the same form while balancing the columns of `Φ`.
pub(crate) fn location_scale(phi: &DMatrix<f64>, rho: &DVector<f64>) -> f64 {
    let d = phi.ncols() - 1;
    least_squares(phi, rho)
        .ok()
        .map(|(t, _)| t.rows(0, d).norm().max(t[d].abs().sqrt()))
        .filter(|m| m.is_finite())
        .unwrap_or(1.0)
        .max(1.0)
}

/// `diag(s, …, s, s²)`.
pub(crate) fn structured_scaling(d: usize, s: f64) -> DVector<f64> {
    DVector::from_fn(d + 1, |k, _| if k < d { s } else { s * s })
}

/// Unconstrained best linear unbiased estimate of `θ`.
pub fn u_blue(model: &WhitenedModel) -> Result<LocationEstimate> {
    let (theta, condition) = least_squares(&model.phi, &model.rho)?;
    let status = if condition > CONDITION_LIMIT { EstimateStatus::IllConditioned } else { EstimateStatus::Converged };
    let residual = model.residual(&theta);
    Ok(LocationEstimate::new(theta, Method::UBlue, Diagnostics::basic(0, residual, status)))
}

/// U-BLUE followed by one weighted correction that pulls `θ̂` onto the
/// manifold `θ_(d+1) = ‖x‖²`, linearised at the U-BLUE location.
pub fn a_blue(model: &WhitenedModel) -> Result<LocationEstimate> {
    let u = u_blue(model)?;
    let d = model.dimension();
    let xu = &u.x_hat;

    let mut tau = DVector::zeros(d + 1);
    tau[d] = xu.norm_squared() - u.theta_hat[d];
    let mut g = DMatrix::zeros(d + 1, d);
    for k in 0..d {
        g[(k, k)] = 1.0;
        g[(d, k)] = 2.0 * xu[k];
    }
    let h = model.phi.transpose() * &model.phi;
    let gth = g.transpose() * &h;
    let lhs = &gth * &g;
    let rhs = &gth * &tau;
    let step = lhs.cholesky().ok_or(Error::Singular("GᵀΦᵀΦG"))?.solve(&rhs);
    let x = xu - step;
    let theta = augment(&x);
    let residual = model.residual(&theta);
    Ok(LocationEstimate::new(theta, Method::ABlue, Diagnostics::basic(0, residual, u.diagnostics.status)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{drss_from_rss, sample_rss, ChannelParams};
    use crate::model::whitened_model;
    use crate::scenario::{fig1_scenario, random_scenario, Scenario};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model_for(s: &Scenario, gamma: f64, sigma_n2: f64, seed: u64) -> WhitenedModel {
        let p = ChannelParams::with_noise_variance(gamma, sigma_n2).unwrap();
        let drss = drss_from_rss(&sample_rss(s, &p, &mut ChaCha8Rng::seed_from_u64(seed)));
        whitened_model(&drss, s.anchors(), gamma).unwrap()
    }

    #[test]
    fn fig1_zero_noise_exact() {
        let s = fig1_scenario();
        let m = model_for(&s, 4.0, 0.0, 0);
        let u = u_blue(&m).unwrap();
        assert!((&u.x_hat - s.target()).norm() < 1e-8, "{}", u.x_hat);
        assert_eq!(u.diagnostics.status, EstimateStatus::Converged);
        let a = a_blue(&m).unwrap();
        assert!((&a.x_hat - s.target()).norm() < 1e-8);
        assert!((&a.x_hat - &u.x_hat).norm() < 1e-9);
    }

    #[test]
    fn u_blue_matches_qr_oracle() {
        for seed in 0..20 {
            let s = random_scenario(10, 50.0, 2, seed).unwrap();
            let m = model_for(&s, 3.0, 4.0, seed);
            let u = u_blue(&m).unwrap();
            let qr = m.phi.clone().qr();
            let qtr = qr.q().transpose() * &m.rho;
            let oracle = qr.r().solve_upper_triangular(&qtr).unwrap();
            let err = (&u.theta_hat - &oracle).norm() / oracle.norm();
            assert!(err < 1e-10, "seed {seed}: {err}");
        }
    }

    #[test]
    fn a_blue_matches_stacked_least_squares() {
        // The correction is the least-squares solution of (ΦG) δ ≈ Φτ.
        for seed in 0..20 {
            let s = random_scenario(10, 50.0, 2, 100 + seed).unwrap();
            let m = model_for(&s, 4.0, 2.0, seed);
            let u = u_blue(&m).unwrap();
            let a = a_blue(&m).unwrap();
            let xu = &u.x_hat;
            let g = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 2.0 * xu[0], 2.0 * xu[1]]);
            let tau = DVector::from_column_slice(&[0.0, 0.0, xu.norm_squared() - u.theta_hat[2]]);
            let pg = &m.phi * g;
            let qr = pg.clone().qr();
            let delta = qr.r().solve_upper_triangular(&(qr.q().transpose() * (&m.phi * tau))).unwrap();
            let oracle = xu - delta;
            let err = (&a.x_hat - &oracle).norm() / oracle.norm();
            assert!(err < 1e-10, "seed {seed}: {err}");
            assert!((a.theta_hat[2] - a.x_hat.norm_squared()).abs() < 1e-9 * a.theta_hat[2]);
        }
    }

    #[test]
    fn rank_deficient_rejected() {
        let s = fig1_scenario();
        let mut m = model_for(&s, 4.0, 0.0, 0);
        let col = m.phi.column(0).into_owned();
        m.phi.set_column(1, &(col * 2.0));
        assert!(matches!(u_blue(&m), Err(Error::SingularModel { .. })));
        assert!(a_blue(&m).is_err());
    }

    #[test]
    fn ill_conditioned_flagged() {
        let s = fig1_scenario();
        let mut m = model_for(&s, 4.0, 0.0, 0);
        let col = m.phi.column(0).into_owned();
        let perturb = DVector::from_fn(col.len(), |i, _| if i == 0 { 1e-5 } else { 0.0 });
        m.phi.set_column(1, &(col * 2.0 + perturb));
        let u = u_blue(&m).unwrap();
        assert_eq!(u.diagnostics.status, EstimateStatus::IllConditioned);
    }
}
