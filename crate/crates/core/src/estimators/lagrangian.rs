//! Constrained least squares `min ‖Φθ - ρ‖²  s.t.  θᵀAθ + 2bᵀθ = 0` with
//! `A = diag(I_d, 0)`, `b = [0; -1/2]`, i.e. `θ_(d+1) = ‖x‖²`.
//!
//! For a multiplier `λ` with `ΦᵀΦ + λA ≻ 0` the stationary point of
//! `‖Φθ - ρ‖² + λ(θᵀAθ + 2bᵀθ)` is `θ(λ) = (ΦᵀΦ + λA)⁻¹(Φᵀρ - λb)`, and the
//! constraint value
//! `f(λ) = θ(λ)ᵀAθ(λ) + 2bᵀθ(λ)` is strictly decreasing on
//! `(-1/λ_max, ∞)`, so the root is found by bisection.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::blue::{location_scale, structured_scaling};
use super::{Diagnostics, EstimateStatus, LocationEstimate, Method};
use crate::model::WhitenedModel;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeOptions {
    /// Root tolerance on `|f(λ)|`, relative to `max(1, ‖x̂‖², |θ̂_(d+1)|)`.
    pub tol: f64,
    pub max_bisections: usize,
    pub max_doublings: usize,
}

impl Default for LeOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_bisections: 200, max_doublings: 200 }
    }
}

/// The problem in scaled variables `θ = Dθ̄`, `D = diag(s, …, s, s²)`,
/// diagonalised once: with `Φ D = QR` and `R⁻ᵀAR⁻¹ = VΛVᵀ`,
/// `Rθ̄(λ̄) = V (I + λ̄Λ)⁻¹ Vᵀ (Qᵀρ - λ̄R⁻ᵀb)`. The scaled multiplier is
/// `λ̄ = s²λ` and the scaled constraint `f̄ = f / s²`.
struct Gtrs {
    r: DMatrix<f64>,
    v: DMatrix<f64>,
    eig: DVector<f64>,
    vq: DVector<f64>,
    vw: DVector<f64>,
    scale: f64,
    d: usize,
}

impl Gtrs {
    fn new(model: &WhitenedModel) -> Result<Self> {
        let d = model.dimension();
        let scale = location_scale(&model.phi, &model.rho);
        let dvec = structured_scaling(d, scale);
        let phi = &model.phi * DMatrix::from_diagonal(&dvec);
        if phi.nrows() < d + 1 {
            return Err(Error::Singular("ΦᵀΦ"));
        }
        let qr = phi.qr();
        let r = qr.r();
        let q = qr.q().transpose() * &model.rho;
        let rt = r.transpose();
        let mut e = DMatrix::zeros(d + 1, d);
        for k in 0..d {
            e[(k, k)] = 1.0;
        }
        let b_mat = rt.solve_lower_triangular(&e).ok_or(Error::Singular("ΦᵀΦ"))?;
        let mut bvec = DVector::zeros(d + 1);
        bvec[d] = -0.5;
        let w = rt.solve_lower_triangular(&bvec).ok_or(Error::Singular("ΦᵀΦ"))?;
        if !b_mat.iter().chain(w.iter()).all(|v| v.is_finite()) {
            return Err(Error::Singular("ΦᵀΦ"));
        }
        let mut m = &b_mat * b_mat.transpose();
        let mt = m.transpose();
        m = (m + mt) * 0.5;
        let se = SymmetricEigen::new(m);
        let v = se.eigenvectors;
        Ok(Self { vq: v.transpose() * q, vw: v.transpose() * w, r, v, eig: se.eigenvalues, scale, d })
    }

    fn s2(&self) -> f64 {
        self.scale * self.scale
    }

    /// Largest eigenvalue of `(ΦᵀΦ)^(-1/2) A (ΦᵀΦ)^(-1/2)` in unscaled units.
    fn lambda_max(&self) -> f64 {
        self.eig.max() * self.s2()
    }

    /// `θ(λ)` in unscaled units; `None` unless `ΦᵀΦ + λA ≻ 0`.
    fn theta(&self, lambda: f64) -> Option<DVector<f64>> {
        self.theta_scaled_multiplier(lambda * self.s2())
    }

    /// `θ` (unscaled) at the scaled multiplier `λ̄`.
    fn theta_scaled_multiplier(&self, lb: f64) -> Option<DVector<f64>> {
        let mut z = DVector::zeros(self.d + 1);
        for i in 0..=self.d {
            let den = 1.0 + lb * self.eig[i];
            if !(den > 0.0) {
                return None;
            }
            z[i] = (self.vq[i] - lb * self.vw[i]) / den;
        }
        let mut theta = self.r.solve_upper_triangular(&(&self.v * z))?;
        for k in 0..self.d {
            theta[k] *= self.scale;
        }
        theta[self.d] *= self.s2();
        Some(theta)
    }

    fn constraint(&self, theta: &DVector<f64>) -> f64 {
        theta.rows(0, self.d).norm_squared() - theta[self.d]
    }
}

/// Open interval `(-1/λ_max, ∞)` of multipliers for which `ΦᵀΦ + λA ≻ 0`;
/// returns its lower end.
pub fn gtrs_interval(model: &WhitenedModel) -> Result<f64> {
    Ok(-1.0 / Gtrs::new(model)?.lambda_max())
}

/// `f(λ) = ‖θ(λ)_(1:d)‖² - θ(λ)_(d+1)`; `None` outside the interval.
pub fn gtrs_secular(model: &WhitenedModel, lambda: f64) -> Option<f64> {
    let g = Gtrs::new(model).ok()?;
    g.theta(lambda).map(|t| g.constraint(&t))
}

/// Lagrangian estimator: the exact solution of the constrained problem.
pub fn le(model: &WhitenedModel, opts: &LeOptions) -> Result<LocationEstimate> {
    // Bracketing and bisection run on the scaled multiplier λ̄ = s²λ.
    let gtrs = Gtrs::new(model)?;
    let lmax = gtrs.eig.max();
    let boundary = -1.0 / lmax;
    let delta = 1e-9 * (1.0 + 1.0 / lmax);
    let eval = |lambda: f64| -> Result<(DVector<f64>, f64)> {
        let t = gtrs.theta_scaled_multiplier(lambda).ok_or(Error::Singular("ΦᵀΦ + λA"))?;
        let f = gtrs.constraint(&t);
        Ok((t, f))
    };
    let d = model.dimension();
    let converged =
        |t: &DVector<f64>, f: f64| f.abs() <= opts.tol * t.rows(0, d).norm_squared().max(t[d].abs()).max(1.0);

    let mut lo = boundary + delta;
    let (_, f_lo) = eval(lo)?;
    if f_lo <= 0.0 {
        return Err(Error::HardCase { boundary: boundary / gtrs.s2() });
    }
    let mut hi = 1.0f64.max(lo + 1.0);
    let mut doublings = 0;
    loop {
        let (t, f) = eval(hi)?;
        if converged(&t, f) {
            return finish(model, &gtrs, t, hi, 0, boundary, delta);
        }
        if f < 0.0 {
            break;
        }
        lo = hi;
        doublings += 1;
        if doublings > opts.max_doublings {
            return Err(Error::BracketNotFound { doublings });
        }
        hi *= 2.0;
    }

    let mut best = None;
    for iter in 1..=opts.max_bisections {
        let mid = 0.5 * (lo + hi);
        let (t, f) = eval(mid)?;
        if converged(&t, f) || (hi - lo) <= opts.tol * (1.0 + mid.abs()) {
            return finish(model, &gtrs, t, mid, iter, boundary, delta);
        }
        if f > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        best = Some((t, mid, iter));
    }
    let (t, lambda, iter) = best.expect("at least one bisection step");
    let mut est = finish(model, &gtrs, t, lambda, iter, boundary, delta)?;
    est.diagnostics.status = EstimateStatus::MaxIter;
    Ok(est)
}

fn finish(
    model: &WhitenedModel,
    gtrs: &Gtrs,
    theta: DVector<f64>,
    lambda: f64,
    iterations: usize,
    boundary: f64,
    delta: f64,
) -> Result<LocationEstimate> {
    if lambda - boundary <= 2.0 * delta {
        return Err(Error::HardCase { boundary: boundary / gtrs.s2() });
    }
    let residual = model.residual(&theta);
    let mut diag = Diagnostics::basic(iterations, residual, EstimateStatus::Converged);
    diag.lambda = Some(lambda / gtrs.s2());
    Ok(LocationEstimate::new(theta, Method::Le, diag))
}
