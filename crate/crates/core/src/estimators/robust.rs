//! Robust SDP estimator.
//!
//! With a model perturbation `‖ΔΦ‖₂ ≤ ζ`, the worst-case residual bound
//! `‖Φθ - ρ‖ + ζ‖θ‖ ≤ √t` is written through the S-procedure as
//!
//! ```text
//! [ (1-α)I     Φθ - ρ    0    ]
//! [ (Φθ - ρ)ᵀ  t         -ζθᵀ ]  ⪰ 0,     [ I_d  x       ]  ⪰ 0
//! [ 0          -ζθ       αI   ]           [ xᵀ   θ_(d+1) ]
//! ```
//!
//! and `t` is minimised over `(θ, t, α)`. The second LMI is the semidefinite
//! relaxation of `θ_(d+1) = ‖x‖²`.

use nalgebra::{DMatrix, DVector};

use super::blue::{location_scale, structured_scaling};
use super::{Diagnostics, EstimateStatus, LocationEstimate, Method};
use crate::model::PleModel;
use crate::sdp::{solve, LmiBlock, SdpOptions, SdpProblem, SdpStatus};
use crate::{Error, Result};

/// Source of the uncertainty bound `ζ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZetaBound {
    /// Total-least-squares estimate from the data, see [`zeta_tls`].
    Tls,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustOpts {
    pub zeta: ZetaBound,
    pub sdp: SdpOptions,
}

impl Default for RobustOpts {
    fn default() -> Self {
        Self { zeta: ZetaBound::Tls, sdp: SdpOptions { gap_tol: 1e-13, ..SdpOptions::default() } }
    }
}

/// Uncertainty bound from the rank-deficient approximation of `[Φ ρ]`.
///
/// The smallest singular value of the augmented matrix is set to zero and
/// `ζ = ‖Φ - Φ̂‖_F` is measured on the `Φ` columns of the reconstruction.
pub fn zeta_tls(phi: &DMatrix<f64>, rho: &DVector<f64>) -> Result<f64> {
    let q = phi.ncols() + 1;
    if phi.nrows() != rho.len() {
        return Err(Error::InvalidArgument(format!("{} rows vs {} observations", phi.nrows(), rho.len())));
    }
    if phi.nrows() < q {
        return Err(Error::InvalidArgument(format!(
            "TLS bound needs at least {q} rows, got {}",
            phi.nrows()
        )));
    }
    let mut aug = DMatrix::zeros(phi.nrows(), q);
    aug.columns_mut(0, q - 1).copy_from(phi);
    aug.set_column(q - 1, rho);
    // Rank-one removal of the smallest singular triple: the correction is
    // σ_min u vᵀ, so its Φ part has norm σ_min ‖v_(1:q-1)‖. The SVD runs on the
    // triangular factor, which has the same σ and V.
    let r = aug.qr().r();
    let svd = r
        .try_svd(false, true, f64::EPSILON, 0)
        .ok_or(Error::Singular("[Φ ρ]"))?;
    let v_t = svd.v_t.as_ref().expect("Vᵀ requested");
    let (imin, smin) = svd.singular_values.argmin();
    Ok(smin * v_t.row(imin).columns(0, q - 1).norm())
}

/// Scale factors applied inside the solver: `θ = diag(s) θ̄`, and `Φ`, `ρ`,
/// `ζ` divided by `κ`.
struct Scaling {
    var: DVector<f64>,
    kappa: f64,
}

impl Scaling {
    fn unit(n: usize) -> Self {
        Self { var: DVector::from_element(n, 1.0), kappa: 1.0 }
    }

    fn for_data(phi: &DMatrix<f64>, rho: &DVector<f64>) -> Self {
        let var = structured_scaling(phi.ncols() - 1, location_scale(phi, rho));
        let scaled = phi * DMatrix::from_diagonal(&var);
        let kappa = scaled.norm().max(rho.norm()).max(f64::MIN_POSITIVE);
        Self { var, kappa }
    }
}

fn build_problem(phi: &DMatrix<f64>, rho: &DVector<f64>, zeta: f64, sc: &Scaling) -> Result<SdpProblem> {
    let m = phi.nrows();
    let d = phi.ncols() - 1;
    if rho.len() != m {
        return Err(Error::InvalidArgument(format!("{m} rows vs {} observations", rho.len())));
    }
    let nv = d + 3; // θ̄, t̄, α
    let n1 = m + 1 + d + 1;
    let it = d + 1;
    let ia = d + 2;
    let k = sc.kappa;

    let mut f0 = DMatrix::zeros(n1, n1);
    for i in 0..m {
        f0[(i, i)] = 1.0;
        f0[(i, m)] = -rho[i] / k;
        f0[(m, i)] = -rho[i] / k;
    }
    let mut coeffs = vec![DMatrix::zeros(n1, n1); nv];
    for j in 0..=d {
        let f = &mut coeffs[j];
        let s = sc.var[j];
        for i in 0..m {
            f[(i, m)] = phi[(i, j)] * s / k;
            f[(m, i)] = phi[(i, j)] * s / k;
        }
        f[(m, m + 1 + j)] = -zeta * s / k;
        f[(m + 1 + j, m)] = -zeta * s / k;
    }
    coeffs[it][(m, m)] = 1.0;
    for i in 0..m {
        coeffs[ia][(i, i)] = -1.0;
    }
    for i in 0..=d {
        coeffs[ia][(m + 1 + i, m + 1 + i)] = 1.0;
    }
    let block1 = LmiBlock { f0, coeffs };

    let mut g0 = DMatrix::zeros(d + 1, d + 1);
    for i in 0..d {
        g0[(i, i)] = 1.0;
    }
    let mut gc = vec![DMatrix::zeros(d + 1, d + 1); nv];
    for j in 0..d {
        gc[j][(j, d)] = sc.var[j];
        gc[j][(d, j)] = sc.var[j];
    }
    gc[d][(d, d)] = sc.var[d];
    let block2 = LmiBlock { f0: g0, coeffs: gc };

    let mut objective = DVector::zeros(nv);
    objective[it] = 1.0;
    SdpProblem::new(objective, vec![block1, block2])
}

/// The LMI problem in the unscaled variables `y = [θ; t; α]`.
pub fn rsdpe_problem(phi: &DMatrix<f64>, rho: &DVector<f64>, zeta: f64) -> Result<SdpProblem> {
    build_problem(phi, rho, zeta, &Scaling::unit(phi.ncols()))
}

/// Robust SDP location estimate from a possibly perturbed `Φ`.
pub fn rsdpe(phi: &DMatrix<f64>, rho: &DVector<f64>, opts: &RobustOpts) -> Result<LocationEstimate> {
    if phi.ncols() < 2 {
        return Err(Error::InvalidArgument("Φ needs at least two columns".into()));
    }
    let zeta = match opts.zeta {
        ZetaBound::Tls => zeta_tls(phi, rho)?,
        ZetaBound::Fixed(z) if z >= 0.0 && z.is_finite() => z,
        ZetaBound::Fixed(z) => return Err(Error::InvalidArgument(format!("ζ must be non-negative, got {z}"))),
    };
    let sc = Scaling::for_data(phi, rho);
    let problem = build_problem(phi, rho, zeta, &sc)?;
    let sol = solve(&problem, &opts.sdp);
    let status = match sol.status {
        SdpStatus::Optimal => EstimateStatus::Converged,
        SdpStatus::MaxIter => EstimateStatus::MaxIter,
        s => return Err(Error::Sdp { status: s, iterations: sol.iterations }),
    };
    let d = phi.ncols() - 1;
    let theta = DVector::from_fn(d + 1, |j, _| sol.y[j] * sc.var[j]);
    let residual = (phi * &theta - rho).norm();
    let mut diag = Diagnostics::basic(sol.iterations, residual, status);
    diag.zeta = Some(zeta);
    diag.sdp_status = Some(sol.status);
    diag.sdp_objective = Some(sol.objective * sc.kappa * sc.kappa);
    Ok(LocationEstimate::new(theta, Method::Rsdpe, diag))
}

/// Robust estimate of the path-loss exponent from the whitened linear model
/// `c ≈ dγ` with `‖Δd‖ ≤ ζ`:
///
/// ```text
/// minimise t  s.t.  [ (1-α)I    c - dγ   0   ]
///                   [ (c-dγ)ᵀ   t        -ζγ ]  ⪰ 0
///                   [ 0         -ζγ      α   ]
/// ```
///
/// Returns `(γ, SDP status, iterations)`.
pub fn ple_step(model: &PleModel, zeta: f64, opts: &SdpOptions) -> Result<(f64, SdpStatus, usize)> {
    let m = model.c.len();
    if model.dvec.len() != m {
        return Err(Error::InvalidArgument("PLE model vectors differ in length".into()));
    }
    let k = model.dvec.norm().max(model.c.norm()).max(f64::MIN_POSITIVE);
    let n = m + 2;
    let mut f0 = DMatrix::zeros(n, n);
    let mut fg = DMatrix::zeros(n, n);
    let mut ft = DMatrix::zeros(n, n);
    let mut fa = DMatrix::zeros(n, n);
    for i in 0..m {
        f0[(i, i)] = 1.0;
        f0[(i, m)] = model.c[i] / k;
        f0[(m, i)] = model.c[i] / k;
        fg[(i, m)] = -model.dvec[i] / k;
        fg[(m, i)] = -model.dvec[i] / k;
        fa[(i, i)] = -1.0;
    }
    fg[(m, m + 1)] = -zeta / k;
    fg[(m + 1, m)] = -zeta / k;
    ft[(m, m)] = 1.0;
    fa[(m + 1, m + 1)] = 1.0;
    let problem = SdpProblem::new(
        DVector::from_column_slice(&[0.0, 1.0, 0.0]),
        vec![LmiBlock { f0, coeffs: vec![fg, ft, fa] }],
    )?;
    let sol = solve(&problem, opts);
    match sol.status {
        SdpStatus::Optimal | SdpStatus::MaxIter => Ok((sol.y[0], sol.status, sol.iterations)),
        s => Err(Error::Sdp { status: s, iterations: sol.iterations }),
    }
}
