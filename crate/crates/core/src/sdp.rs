//! Dense primal-dual interior-point solver for small block-diagonal LMI problems
//!
//! ```text
//! minimize    cᵀy
//! subject to  F₀ⱼ + Σₖ yₖ Fₖⱼ ⪰ 0   for every block j
//! ```
//!
//! The problem is treated as the dual of a standard-form SDP with
//! `C = F₀`, `Aₖ = -Fₖ`, `b = -c` and solved by an infeasible-start
//! path-following method (Nesterov-Todd search direction, Mehrotra
//! predictor-corrector).
//! Everything is dense; it is meant for a handful of variables and blocks of
//! size ≲ 20.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Maximum asymmetry `max |Fᵢⱼ - Fⱼᵢ|` tolerated in the input matrices.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// One LMI `F₀ + Σₖ yₖ Fₖ ⪰ 0`; `coeffs[k]` is `Fₖ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LmiBlock {
    pub f0: DMatrix<f64>,
    pub coeffs: Vec<DMatrix<f64>>,
}

impl LmiBlock {
    pub fn size(&self) -> usize {
        self.f0.nrows()
    }

    /// `F₀ + Σₖ yₖ Fₖ`.
    pub fn evaluate(&self, y: &DVector<f64>) -> DMatrix<f64> {
        let mut f = self.f0.clone();
        for (fk, &yk) in self.coeffs.iter().zip(y.iter()) {
            f += fk * yk;
        }
        f
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem {
    objective: DVector<f64>,
    blocks: Vec<LmiBlock>,
}

fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

impl SdpProblem {
    pub fn new(objective: DVector<f64>, blocks: Vec<LmiBlock>) -> Result<Self> {
        let n = objective.len();
        if n == 0 {
            return Err(Error::InvalidArgument("SDP needs at least one variable".into()));
        }
        if objective.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("objective has non-finite entries".into()));
        }
        if blocks.is_empty() {
            return Err(Error::InvalidArgument("SDP needs at least one block".into()));
        }
        for (j, b) in blocks.iter().enumerate() {
            let s = b.f0.nrows();
            if s == 0 || b.f0.ncols() != s {
                return Err(Error::InvalidArgument(format!("block {j}: F0 must be square and non-empty")));
            }
            if b.coeffs.len() != n {
                return Err(Error::InvalidArgument(format!(
                    "block {j}: {} coefficient matrices for {n} variables",
                    b.coeffs.len()
                )));
            }
            for m in std::iter::once(&b.f0).chain(&b.coeffs) {
                if m.nrows() != s || m.ncols() != s {
                    return Err(Error::InvalidArgument(format!("block {j}: inconsistent matrix sizes")));
                }
                if m.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidArgument(format!("block {j}: non-finite entries")));
                }
                let a = asymmetry(m);
                if a > SYMMETRY_TOL * (1.0 + m.amax()) {
                    return Err(Error::NotSymmetric(a));
                }
            }
        }
        Ok(Self { objective, blocks })
    }

    pub fn objective(&self) -> &DVector<f64> {
        &self.objective
    }

    pub fn blocks(&self) -> &[LmiBlock] {
        &self.blocks
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    /// `F(y)` block by block.
    pub fn evaluate(&self, y: &DVector<f64>) -> Vec<DMatrix<f64>> {
        self.blocks.iter().map(|b| b.evaluate(y)).collect()
    }

    /// Smallest eigenvalue over all blocks of `F(y)`.
    pub fn min_block_eig(&self, y: &DVector<f64>) -> f64 {
        self.evaluate(y).iter().map(sym_min_eig).fold(f64::INFINITY, f64::min)
    }

    /// Plain-text dump: a header line, the objective, then each block's
    /// `F₀, F₁, …` as whitespace-separated rows.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "sdp {} {}", self.n_vars(), self.blocks.len());
        let _ = writeln!(out, "objective {}", join(self.objective.iter()));
        for b in &self.blocks {
            let _ = writeln!(out, "block {}", b.size());
            for m in std::iter::once(&b.f0).chain(&b.coeffs) {
                for row in m.row_iter() {
                    let _ = writeln!(out, "{}", join(row.iter()));
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let mut next = |what: &str| lines.next().ok_or_else(|| Error::Parse(format!("unexpected end of input, expected {what}")));

        let header: Vec<&str> = next("header")?.split_whitespace().collect();
        if header.len() != 3 || header[0] != "sdp" {
            return Err(Error::Parse("header must be `sdp <n_vars> <n_blocks>`".into()));
        }
        let n_vars: usize = parse_num(header[1])?;
        let n_blocks: usize = parse_num(header[2])?;

        let obj_line = next("objective")?;
        let obj = obj_line
            .strip_prefix("objective")
            .ok_or_else(|| Error::Parse("missing `objective` line".into()))?;
        let objective = parse_row(obj)?;
        if objective.len() != n_vars {
            return Err(Error::Parse(format!("objective has {} entries, expected {n_vars}", objective.len())));
        }

        let mut blocks = Vec::with_capacity(n_blocks);
        for _ in 0..n_blocks {
            let bl = next("block header")?;
            let size: usize = parse_num(
                bl.strip_prefix("block")
                    .ok_or_else(|| Error::Parse(format!("expected `block <size>`, got `{bl}`")))?
                    .trim(),
            )?;
            let mut mats = Vec::with_capacity(n_vars + 1);
            for _ in 0..=n_vars {
                let mut data = Vec::with_capacity(size * size);
                for _ in 0..size {
                    let row = parse_row(next("matrix row")?)?;
                    if row.len() != size {
                        return Err(Error::Parse(format!("matrix row has {} entries, expected {size}", row.len())));
                    }
                    data.extend(row);
                }
                mats.push(DMatrix::from_row_slice(size, size, &data));
            }
            let f0 = mats.remove(0);
            blocks.push(LmiBlock { f0, coeffs: mats });
        }
        Self::new(DVector::from_vec(objective), blocks)
    }

    pub fn save_text(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load_text(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

fn join<'a>(it: impl Iterator<Item = &'a f64>) -> String {
    it.map(|v| format!("{v:e}")).collect::<Vec<_>>().join(" ")
}

fn parse_num<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Parse(format!("bad number `{s}`")))
}

fn parse_row(s: &str) -> Result<Vec<f64>> {
    s.split_whitespace().map(parse_num).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdpOptions {
    /// Minimum eigenvalue of every block of `F(y)` required for `Optimal`.
    pub feas_tol: f64,
    /// Relative duality gap `⟨X, S⟩ / (1 + |cᵀy| + |⟨F₀, X⟩|)`.
    pub gap_tol: f64,
    pub max_iter: usize,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self { feas_tol: 1e-8, gap_tol: 1e-7, max_iter: 100 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    MaxIter,
    NumericalFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution {
    pub y: DVector<f64>,
    pub status: SdpStatus,
    pub iterations: usize,
    /// Complementarity `⟨X, S⟩` at the returned iterate.
    pub duality_gap: f64,
    /// `cᵀy` at the returned iterate.
    pub objective: f64,
    /// Complementarity after each accepted iteration, starting from the
    /// initial point.
    pub gap_history: Vec<f64>,
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eig(m: &DMatrix<f64>) -> Result<f64> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::InvalidArgument(format!("matrix is {}x{}, expected square", m.nrows(), m.ncols())));
    }
    let a = asymmetry(m);
    if a > 1e-10 * (1.0 + m.amax()) {
        return Err(Error::NotSymmetric(a));
    }
    Ok(sym_min_eig(m))
}

fn sym_min_eig(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.min()
}

/// Block-diagonal matrix stored as its blocks.
type Blocks = Vec<DMatrix<f64>>;

fn inner(a: &Blocks, b: &Blocks) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

/// Largest step `α ≤ 1` (after the fraction-to-boundary factor) keeping
/// `M + α ΔM ≻ 0`, given the Cholesky factor `L` of `M`.
fn max_step(chol: &[DMatrix<f64>], dm: &Blocks, fraction: f64) -> f64 {
    let mut alpha = f64::INFINITY;
    for (l, d) in chol.iter().zip(dm) {
        let n = l.nrows();
        // L⁻¹ ΔM L⁻ᵀ
        let Some(linv_d) = l.solve_lower_triangular(d) else { return 0.0 };
        let Some(t) = l.solve_lower_triangular(&linv_d.transpose()) else { return 0.0 };
        let mut t = t;
        symmetrize(&mut t);
        let lmin = if n == 1 { t[(0, 0)] } else { sym_min_eig(&t) };
        if lmin < 0.0 {
            alpha = alpha.min(-1.0 / lmin);
        }
    }
    (fraction * alpha).min(1.0)
}

fn cholesky_factors(m: &Blocks) -> Option<Vec<DMatrix<f64>>> {
    m.iter().map(|b| b.clone().cholesky().map(|c| c.l())).collect()
}

struct Workspace<'a> {
    /// `Aₖ` per variable, per block.
    a: Vec<Blocks>,
    c: &'a [DMatrix<f64>],
    b: DVector<f64>,
    n_total: f64,
}

impl Workspace<'_> {
    /// `𝒜(X)ₖ = ⟨Aₖ, X⟩`.
    fn apply_a(&self, x: &Blocks) -> DVector<f64> {
        DVector::from_iterator(self.a.len(), self.a.iter().map(|ak| inner(ak, x)))
    }

    /// `Σₖ yₖ Aₖ`.
    fn apply_at(&self, y: &DVector<f64>) -> Blocks {
        let mut out: Blocks = self.c.iter().map(|c| DMatrix::zeros(c.nrows(), c.ncols())).collect();
        for (ak, &yk) in self.a.iter().zip(y.iter()) {
            for (o, a) in out.iter_mut().zip(ak) {
                *o += a * yk;
            }
        }
        out
    }

    /// `C - S - Σ yₖAₖ`.
    fn dual_residual(&self, y: &DVector<f64>, s: &Blocks) -> Blocks {
        let aty = self.apply_at(y);
        self.c
            .iter()
            .zip(s)
            .zip(aty)
            .map(|((c, s), a)| c - s - a)
            .collect()
    }
}

/// Nesterov-Todd scaling of one block: `G` with `GᵀSG = G⁻¹XG⁻ᵀ = D` diagonal,
/// from `Lₛᵀ Lₓ = UDVᵀ` and `G = Lₓ V D^(-1/2)`.
struct NtBlock {
    g: DMatrix<f64>,
    d: DVector<f64>,
}

impl NtBlock {
    fn new(lx: &DMatrix<f64>, ls: &DMatrix<f64>) -> Option<Self> {
        let svd = (ls.transpose() * lx).try_svd(false, true, f64::EPSILON, 0)?;
        let d = svd.singular_values;
        if !d.iter().all(|v| *v > 0.0 && v.is_finite()) {
            return None;
        }
        let inv_sqrt = DMatrix::from_diagonal(&d.map(|v| 1.0 / v.sqrt()));
        let g = lx * svd.v_t?.transpose() * inv_sqrt;
        Some(Self { g, d })
    }

    /// `GᵀMG`.
    fn scale_dual(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        self.g.transpose() * m * &self.g
    }
}

struct Direction {
    dx: Blocks,
    dy: DVector<f64>,
    ds: Blocks,
    /// `ΔX`, `ΔS` in the scaled space.
    dx_scaled: Blocks,
    ds_scaled: Blocks,
}

/// Solves the NT Newton system with complementarity target `σμI - corr` in
/// the scaled space. `a_scaled[k][j] = GⱼᵀAₖⱼGⱼ`.
#[allow(clippy::too_many_arguments)]
fn direction(
    ws: &Workspace,
    nt: &[NtBlock],
    a_scaled: &[Blocks],
    schur: &nalgebra::Cholesky<f64, nalgebra::Dyn>,
    rp: &DVector<f64>,
    rd: &Blocks,
    sigma_mu: f64,
    corr: Option<&Blocks>,
) -> Direction {
    // ΔX̃ + ΔS̃ = T with Tᵢⱼ = 2Rᵢⱼ / (dᵢ + dⱼ), R = σμI - D² - sym(corr).
    let t: Blocks = nt
        .iter()
        .enumerate()
        .map(|(j, b)| {
            let n = b.d.len();
            let mut r = DMatrix::identity(n, n) * sigma_mu;
            for i in 0..n {
                r[(i, i)] -= b.d[i] * b.d[i];
            }
            if let Some(c) = corr {
                let mut cj = c[j].clone();
                symmetrize(&mut cj);
                r -= cj;
            }
            DMatrix::from_fn(n, n, |i, k| 2.0 * r[(i, k)] / (b.d[i] + b.d[k]))
        })
        .collect();
    let rd_scaled: Blocks = nt.iter().zip(rd).map(|(b, r)| b.scale_dual(r)).collect();
    let diff: Blocks = t.iter().zip(&rd_scaled).map(|(a, b)| a - b).collect();
    let rhs = rp - DVector::from_iterator(a_scaled.len(), a_scaled.iter().map(|ak| inner(ak, &diff)));
    let dy = schur.solve(&rhs);
    let ds_scaled: Blocks = rd_scaled
        .iter()
        .enumerate()
        .map(|(j, r)| {
            let mut out = r.clone();
            for (ak, &yk) in a_scaled.iter().zip(dy.iter()) {
                out -= &ak[j] * yk;
            }
            out
        })
        .collect();
    let dx_scaled: Blocks = t.iter().zip(&ds_scaled).map(|(a, b)| a - b).collect();
    let dx = nt
        .iter()
        .zip(&dx_scaled)
        .map(|(b, m)| {
            let mut v = &b.g * m * b.g.transpose();
            symmetrize(&mut v);
            v
        })
        .collect();
    // Formed in the original space so the dual residual shrinks exactly.
    let ds: Blocks = rd.iter().zip(ws.apply_at(&dy)).map(|(r, a)| r - a).collect();
    Direction { dx, dy, ds, dx_scaled, ds_scaled }
}

fn blocks_add(a: &Blocks, b: &Blocks, alpha: f64) -> Blocks {
    a.iter().zip(b).map(|(x, y)| x + y * alpha).collect()
}

fn fro(a: &Blocks) -> f64 {
    a.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt()
}

/// Solves the LMI problem.
pub fn solve(problem: &SdpProblem, opts: &SdpOptions) -> SdpSolution {
    const FRACTION: f64 = 0.95;
    const BLOWUP: f64 = 1e12;

    let m = problem.n_vars();
    let c: Blocks = problem.blocks.iter().map(|b| b.f0.clone()).collect();
    let a: Vec<Blocks> = (0..m)
        .map(|k| problem.blocks.iter().map(|b| -&b.coeffs[k]).collect())
        .collect();
    let b = -problem.objective.clone();
    let n_total: f64 = c.iter().map(|m| m.nrows() as f64).sum();
    let ws = Workspace { a, c: &c, b, n_total };

    // Initial point scaled to the data.
    let mut x: Blocks = Vec::new();
    let mut s: Blocks = Vec::new();
    for (j, cj) in c.iter().enumerate() {
        let n = cj.nrows() as f64;
        let mut xi = 10f64.max(n.sqrt());
        let mut eta = 10f64.max(n.sqrt()).max(cj.norm());
        for k in 0..m {
            let an = ws.a[k][j].norm();
            xi = xi.max(n * (1.0 + ws.b[k].abs()) / (1.0 + an));
            eta = eta.max(an);
        }
        x.push(DMatrix::identity(cj.nrows(), cj.nrows()) * xi);
        s.push(DMatrix::identity(cj.nrows(), cj.nrows()) * eta);
    }
    let mut y = DVector::zeros(m);
    let scale0 = fro(&x).max(fro(&s));
    let b_norm = ws.b.norm();
    let c_norm = fro(&c);

    let mut gap = inner(&x, &s);
    let mut gap_history = vec![gap];
    let mut best: Option<(DVector<f64>, f64)> = None;

    let finish = |y: DVector<f64>, status, iterations, gap, history: Vec<f64>| SdpSolution {
        objective: problem.objective.dot(&y),
        y,
        status,
        iterations,
        duality_gap: gap,
        gap_history: history,
    };

    for iter in 0..opts.max_iter {
        let rp = &ws.b - ws.apply_a(&x);
        let rd = ws.dual_residual(&y, &s);
        let pobj = inner(&c, &x);
        let dobj = ws.b.dot(&y);
        let rel_gap = gap / (1.0 + pobj.abs() + dobj.abs());
        let pinf = rp.norm() / (1.0 + b_norm);
        let dinf = fro(&rd) / (1.0 + c_norm);

        if dinf <= opts.feas_tol {
            let feas = problem.min_block_eig(&y);
            if feas >= -opts.feas_tol {
                let better = best.as_ref().is_none_or(|(_, g)| rel_gap < *g);
                if better {
                    best = Some((y.clone(), rel_gap));
                }
                if rel_gap <= opts.gap_tol && pinf <= opts.gap_tol.max(1e-8) {
                    return finish(y, SdpStatus::Optimal, iter, gap, gap_history);
                }
            }
        }

        let Some(lx) = cholesky_factors(&x) else {
            return finish(y, SdpStatus::NumericalFailure, iter, gap, gap_history);
        };
        let Some(ls) = cholesky_factors(&s) else {
            return finish(y, SdpStatus::NumericalFailure, iter, gap, gap_history);
        };
        let Some(nt) = lx.iter().zip(&ls).map(|(a, b)| NtBlock::new(a, b)).collect::<Option<Vec<_>>>() else {
            return finish(y, SdpStatus::NumericalFailure, iter, gap, gap_history);
        };

        // Schur complement Mₖₗ = Σⱼ tr(Aₖ W Aₗ W) = ⟨Ãₖ, Ãₗ⟩.
        let a_scaled: Vec<Blocks> =
            ws.a.iter().map(|ak| nt.iter().zip(ak).map(|(b, a)| b.scale_dual(a)).collect()).collect();
        let mut schur = DMatrix::zeros(m, m);
        for k in 0..m {
            for l in k..m {
                let v = inner(&a_scaled[k], &a_scaled[l]);
                schur[(k, l)] = v;
                schur[(l, k)] = v;
            }
        }
        let Some(schur) = schur.cholesky() else {
            return finish(y, SdpStatus::NumericalFailure, iter, gap, gap_history);
        };

        let mu = gap / ws.n_total;
        let pred = direction(&ws, &nt, &a_scaled, &schur, &rp, &rd, 0.0, None);
        let ap = max_step(&lx, &pred.dx, FRACTION);
        let ad = max_step(&ls, &pred.ds, FRACTION);
        let mu_aff = inner(&blocks_add(&x, &pred.dx, ap), &blocks_add(&s, &pred.ds, ad)) / ws.n_total;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);
        let corr: Blocks = pred.dx_scaled.iter().zip(&pred.ds_scaled).map(|(dx, ds)| dx * ds).collect();
        let dir = direction(&ws, &nt, &a_scaled, &schur, &rp, &rd, sigma * mu, Some(&corr));

        let mut ap = max_step(&lx, &dir.dx, FRACTION);
        let mut ad = max_step(&ls, &dir.ds, FRACTION);
        // Keep the complementarity non-increasing.
        let mut accepted = None;
        for _ in 0..60 {
            let xn = blocks_add(&x, &dir.dx, ap);
            let sn = blocks_add(&s, &dir.ds, ad);
            let g = inner(&xn, &sn);
            if g <= gap {
                accepted = Some((xn, sn, g));
                break;
            }
            ap *= 0.7;
            ad *= 0.7;
        }
        let Some((xn, sn, g)) = accepted else {
            return match best {
                Some((yb, _)) => finish(yb, SdpStatus::NumericalFailure, iter, gap, gap_history),
                None => finish(y, SdpStatus::NumericalFailure, iter, gap, gap_history),
            };
        };
        if ap < 1e-12 && ad < 1e-12 {
            return finish(y, SdpStatus::NumericalFailure, iter, gap, gap_history);
        }
        x = xn;
        s = sn;
        y += &dir.dy * ad;
        gap = g;
        gap_history.push(gap);

        if !y.iter().all(|v| v.is_finite()) {
            return finish(y, SdpStatus::NumericalFailure, iter + 1, gap, gap_history);
        }
        if fro(&x) > BLOWUP * scale0 || y.norm() > BLOWUP * (1.0 + scale0) {
            return finish(y, SdpStatus::Infeasible, iter + 1, gap, gap_history);
        }
    }

    let y = best.map(|(yb, _)| yb).unwrap_or(y);
    finish(y, SdpStatus::MaxIter, opts.max_iter, gap, gap_history)
}
