//! Spectral radii of the bound operators and the two contraction
//! certificates built on them.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen, SVD};
use serde::{Deserialize, Serialize};

use crate::bounds::EpidemicParams;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::sparse::LinearOperator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralMethod {
    /// Power iteration on a nonnegative matrix with Collatz–Wielandt bracketing.
    PowerNonneg,
    /// Power iteration with a residual test, for large matrices of mixed sign.
    PowerSigned,
    /// `||A^(2^k)||_1^(1/2^k)` by normalized repeated squaring.
    Gelfand,
    /// Eigenvalues of the real Schur form.
    DenseQr,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralResult {
    pub rho: f64,
    pub method: SpectralMethod,
    pub iterations: usize,
    /// Bracket width, residual norm, or last Gelfand step, depending on method.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct SpectralOptions {
    /// Relative bracket width / residual for the power iterations.
    pub tol: f64,
    /// Relative gap between successive Gelfand estimates.
    pub gelfand_tol: f64,
    pub max_squarings: usize,
    pub max_iter: usize,
    /// Largest dimension handled by dense Schur decomposition.
    pub dense_limit: usize,
    /// Largest dimension for which dense repeated squaring is attempted.
    pub gelfand_limit: usize,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            gelfand_tol: 1e-8,
            max_squarings: 64,
            max_iter: 200_000,
            dense_limit: 512,
            gelfand_limit: 2048,
        }
    }
}

/// Spectral radius with method selection by sign structure and size.
///
/// Nonnegative operators use bracketed power iteration. Mixed-sign operators
/// use repeated squaring up to `dense_limit` (falling back to a Schur
/// decomposition), and residual-checked power iteration above it.
pub fn spectral_radius<O: LinearOperator + ?Sized>(op: &O, opts: &SpectralOptions) -> Result<SpectralResult> {
    if !(opts.tol > 0.0) || !(opts.gelfand_tol > 0.0) {
        return Err(Error::InvalidParameter("spectral tolerances must be positive".into()));
    }
    let dim = op.dim();
    if dim == 0 {
        return Ok(SpectralResult {
            rho: 0.0,
            method: SpectralMethod::PowerNonneg,
            iterations: 0,
            residual: 0.0,
        });
    }
    if op.is_nonnegative() {
        match power_nonneg(op, opts) {
            Ok((res, _)) => return Ok(res),
            Err(Error::NotConverged(msg)) => {
                log::debug!("power iteration stalled ({msg}); falling back");
            }
            Err(e) => return Err(e),
        }
        return dense_fallback(op, opts);
    }
    if dim <= opts.dense_limit {
        let dense = op.to_dense();
        return match gelfand_radius(&dense, opts) {
            Ok(r) => Ok(r),
            Err(Error::NotConverged(_)) => dense_qr_radius(&dense),
            Err(e) => Err(e),
        };
    }
    match power_signed(op, opts) {
        Ok(r) => Ok(r),
        Err(Error::NotConverged(msg)) => {
            log::debug!("signed power iteration failed ({msg}); falling back");
            dense_fallback(op, opts)
        }
        Err(e) => Err(e),
    }
}

fn dense_fallback<O: LinearOperator + ?Sized>(op: &O, opts: &SpectralOptions) -> Result<SpectralResult> {
    let dim = op.dim();
    if dim <= opts.dense_limit {
        dense_qr_radius(&op.to_dense())
    } else if dim <= opts.gelfand_limit {
        gelfand_radius(&op.to_dense(), opts)
    } else {
        Err(Error::DimensionTooLarge {
            what: "dense spectral fallback",
            dim,
            limit: opts.gelfand_limit,
        })
    }
}

/// A strictly positive vector `v` with `A v <= upper * v` entrywise, for a
/// nonnegative `A`. Then `wᵀ A^t z <= upper^t * max_i(z_i / v_i) * wᵀ v`
/// for all nonnegative `w`, `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerronCertificate {
    pub vector: Vec<f64>,
    pub upper: f64,
    pub lower: f64,
}

impl PerronCertificate {
    /// Constant `C` in `wᵀ A^t z <= C * upper^t`; infinite when `z` has
    /// support outside that of the vector.
    pub fn bilinear_constant(&self, w: &[f64], z: &[f64]) -> f64 {
        let scale = self
            .vector
            .iter()
            .zip(z)
            .map(|(&v, &zi)| if zi == 0.0 { 0.0 } else if v > 0.0 { zi / v } else { f64::INFINITY })
            .fold(0.0f64, f64::max);
        let wv: f64 = w.iter().zip(&self.vector).map(|(a, b)| a * b).sum();
        scale * wv
    }
}

/// Bracketed power iteration for nonnegative operators.
pub fn power_nonneg<O: LinearOperator + ?Sized>(
    op: &O,
    opts: &SpectralOptions,
) -> Result<(SpectralResult, PerronCertificate)> {
    let dim = op.dim();
    let mut x = vec![1.0; dim];
    let mut y = vec![0.0; dim];
    op.apply(&x, &mut y);
    let row_bound = y.iter().copied().fold(0.0f64, f64::max);
    if row_bound == 0.0 {
        return Ok((
            SpectralResult {
                rho: 0.0,
                method: SpectralMethod::PowerNonneg,
                iterations: 1,
                residual: 0.0,
            },
            PerronCertificate {
                vector: x,
                upper: 0.0,
                lower: 0.0,
            },
        ));
    }
    // A positive diagonal makes an irreducible matrix primitive; otherwise
    // shift to break periodicity.
    let shift = if op.diagonal().iter().all(|&d| d > 0.0) {
        0.0
    } else {
        0.1 * row_bound
    };
    let mut trunc = vec![0.0; dim];
    let mut y_trunc = vec![0.0; dim];
    let mut best_lower = 0.0f64;
    let mut last_upper = f64::INFINITY;
    let mut stall = Stall::default();

    for it in 1..=opts.max_iter {
        op.apply(&x, &mut y);
        let mut lower = f64::INFINITY;
        let mut upper = 0.0f64;
        for i in 0..dim {
            let yi = y[i] + shift * x[i];
            if x[i] > 0.0 {
                let r = yi / x[i];
                lower = lower.min(r);
                upper = upper.max(r);
            } else if yi > 0.0 {
                upper = f64::INFINITY;
            }
        }
        best_lower = best_lower.max(lower - shift);
        // Lower bound on the dominant support only: components that decay
        // relative to the dominant one would otherwise pin the bracket.
        if it % 16 == 0 && upper.is_finite() {
            let xmax = x.iter().copied().fold(0.0f64, f64::max);
            for i in 0..dim {
                trunc[i] = if x[i] >= 1e-12 * xmax { x[i] } else { 0.0 };
            }
            op.apply(&trunc, &mut y_trunc);
            let tl = (0..dim)
                .filter(|&i| trunc[i] > 0.0)
                .map(|i| y_trunc[i] / trunc[i])
                .fold(f64::INFINITY, f64::min);
            best_lower = best_lower.max(tl);
        }
        let up = upper - shift;
        last_upper = up;
        let scale = up.abs().max(f64::MIN_POSITIVE);
        if up.is_finite() && (up - best_lower <= opts.tol * scale || stall.settled(up - best_lower, scale)) {
            let rho = 0.5 * (up + best_lower);
            return Ok((
                SpectralResult {
                    rho,
                    method: SpectralMethod::PowerNonneg,
                    iterations: it,
                    residual: up - best_lower,
                },
                PerronCertificate {
                    vector: x,
                    upper: up,
                    lower: best_lower,
                },
            ));
        }
        let ymax = (0..dim).map(|i| y[i] + shift * x[i]).fold(0.0f64, f64::max);
        if ymax == 0.0 {
            return Ok((
                SpectralResult {
                    rho: 0.0,
                    method: SpectralMethod::PowerNonneg,
                    iterations: it,
                    residual: 0.0,
                },
                PerronCertificate {
                    vector: x,
                    upper: 0.0,
                    lower: 0.0,
                },
            ));
        }
        for i in 0..dim {
            x[i] = (y[i] + shift * x[i]) / ymax;
        }
    }
    Err(Error::NotConverged(format!(
        "nonnegative power iteration after {} steps (bracket [{best_lower}, {last_upper}])",
        opts.max_iter
    )))
}

/// Perron certificate for a nonnegative operator with a strictly positive
/// eigenvector estimate.
pub fn perron_certificate<O: LinearOperator + ?Sized>(op: &O, opts: &SpectralOptions) -> Result<PerronCertificate> {
    if !op.is_nonnegative() {
        return Err(Error::Inapplicable("Perron certificate needs a nonnegative operator".into()));
    }
    let (_, mut cert) = power_nonneg(op, opts)?;
    if cert.vector.iter().any(|&v| v <= 0.0) {
        return Err(Error::Inapplicable("Perron vector is not strictly positive".into()));
    }
    // recompute the ratio bound on the returned vector itself
    let mut y = vec![0.0; op.dim()];
    op.apply(&cert.vector, &mut y);
    cert.upper = y
        .iter()
        .zip(&cert.vector)
        .map(|(a, b)| a / b)
        .fold(0.0f64, f64::max);
    Ok(cert)
}

/// Power iteration with Rayleigh estimate, accepted once
/// `||A x - λ x|| <= tol * |λ|` for unit `x`.
pub fn power_signed<O: LinearOperator + ?Sized>(op: &O, opts: &SpectralOptions) -> Result<SpectralResult> {
    let dim = op.dim();
    // pseudo-random positive start, so symmetric structure cannot hide the
    // dominant direction
    let mut rng = SplitMix64::new(0x005E_ED0F_5151);
    let mut x: Vec<f64> = (0..dim).map(|_| 0.5 + rng.next_f64()).collect();
    normalize(&mut x);
    let mut y = vec![0.0; dim];
    let mut stall = Stall::default();
    for it in 1..=opts.max_iter {
        op.apply(&x, &mut y);
        let lambda: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let resid = x
            .iter()
            .zip(&y)
            .map(|(a, b)| (b - lambda * a).powi(2))
            .sum::<f64>()
            .sqrt();
        let ynorm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if ynorm == 0.0 {
            return Ok(SpectralResult {
                rho: 0.0,
                method: SpectralMethod::PowerSigned,
                iterations: it,
                residual: 0.0,
            });
        }
        if resid <= opts.tol * lambda.abs() || stall.settled(resid, lambda.abs()) {
            return Ok(SpectralResult {
                rho: lambda.abs(),
                method: SpectralMethod::PowerSigned,
                iterations: it,
                residual: resid,
            });
        }
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / ynorm;
        }
    }
    Err(Error::NotConverged(format!(
        "signed power iteration after {} steps",
        opts.max_iter
    )))
}

/// Detects an error measure that has stopped shrinking at the rounding
/// floor: no new minimum for `STALL_STEPS` iterations while already within
/// `STALL_TOL` relative.
#[derive(Default)]
pub(crate) struct Stall {
    best: Option<f64>,
    since: usize,
}

const STALL_STEPS: usize = 100;
const STALL_TOL: f64 = 1.5e-8;

impl Stall {
    pub(crate) fn settled(&mut self, err: f64, scale: f64) -> bool {
        if self.best.is_none_or(|b| err < b) {
            self.best = Some(err);
            self.since = 0;
            return false;
        }
        self.since += 1;
        self.since >= STALL_STEPS && err <= STALL_TOL * scale
    }
}

fn normalize(x: &mut [f64]) {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v /= n);
    }
}

fn norm1(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Gelfand estimate by normalized repeated squaring. Each estimate is an
/// upper bound on the radius; iteration stops after two consecutive relative
/// gaps below `gelfand_tol`.
pub fn gelfand_radius(m: &DMatrix<f64>, opts: &SpectralOptions) -> Result<SpectralResult> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let zero = |k| {
        Ok(SpectralResult {
            rho: 0.0,
            method: SpectralMethod::Gelfand,
            iterations: k,
            residual: 0.0,
        })
    };
    let n0 = norm1(m);
    if n0 == 0.0 {
        return zero(0);
    }
    let mut a = m / n0;
    // M^(2^k) = exp(log_scale) * a
    let mut log_scale = n0.ln();
    let mut est = n0;
    let mut small_gaps = 0;
    for k in 1..=opts.max_squarings {
        let b = &a * &a;
        let nb = norm1(&b);
        if nb == 0.0 || !nb.is_finite() {
            return zero(k);
        }
        log_scale = 2.0 * log_scale + nb.ln();
        a = b / nb;
        let next = (log_scale / 2f64.powi(k as i32)).exp();
        let gap = (next - est).abs();
        est = next;
        if gap <= opts.gelfand_tol * est {
            small_gaps += 1;
            if small_gaps >= 2 {
                return Ok(SpectralResult {
                    rho: est,
                    method: SpectralMethod::Gelfand,
                    iterations: k,
                    residual: gap,
                });
            }
        } else {
            small_gaps = 0;
        }
    }
    Err(Error::NotConverged(format!(
        "Gelfand estimate after {} squarings ({est})",
        opts.max_squarings
    )))
}

/// Largest eigenvalue modulus from the real Schur form.
pub fn dense_qr_radius(m: &DMatrix<f64>) -> Result<SpectralResult> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.nrows() == 0 {
        return Ok(SpectralResult {
            rho: 0.0,
            method: SpectralMethod::DenseQr,
            iterations: 0,
            residual: 0.0,
        });
    }
    let n = m.nrows();
    let rho = if m.relative_eq(&m.transpose(), 0.0, 0.0) {
        SymmetricEigen::new(m.clone()).eigenvalues.amax()
    } else {
        // the QR sweep can stall at machine-epsilon deflation on matrices
        // with many repeated eigenvalues; relax the threshold step by step,
        // then retry on a Householder-reflected copy
        let cap = 60 * n.max(10);
        let v = DVector::from_fn(n, |i, _| 1.0 + 0.37 * i as f64).normalize();
        let h = DMatrix::identity(n, n) - 2.0 * &v * v.transpose();
        let reflected = &h * m * &h;
        let schur = [m, &reflected]
            .into_iter()
            .flat_map(|a| [1.0, 8.0, 64.0, 512.0, 4096.0].map(|k| (a, k)))
            .find_map(|(a, k)| Schur::try_new(a.clone(), k * f64::EPSILON, cap))
            .ok_or_else(|| Error::NotConverged("Schur decomposition".into()))?;
        schur.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
    };
    Ok(SpectralResult {
        rho,
        method: SpectralMethod::DenseQr,
        iterations: 0,
        residual: 0.0,
    })
}

// ---------------------------------------------------------------------------
// Lyapunov contraction certificate

/// `P ≻ 0` solving `MᵀPM − P = −I`, with `η = ||P^{1/2} M P^{-1/2}||_2 < 1`.
/// For any `w`, `z`: `wᵀ M^t z <= η^t ||P^{-1/2} w|| ||P^{1/2} z||`.
#[derive(Debug, Clone)]
pub struct LyapunovCertificate {
    pub p: DMatrix<f64>,
    pub p_sqrt: DMatrix<f64>,
    pub p_inv_sqrt: DMatrix<f64>,
    pub eta: f64,
    /// `||P^{1/2} 1|| * ||P^{-1/2} 1||`
    pub bound_constant: f64,
    /// `||P^{1/2}||_2 * ||P^{-1/2}||_2`, i.e. `sqrt(cond(P))`.
    pub conditioning: f64,
    pub rho: f64,
}

impl LyapunovCertificate {
    pub fn bilinear_constant(&self, w: &[f64], z: &[f64]) -> f64 {
        let w = DVector::from_column_slice(w);
        let z = DVector::from_column_slice(z);
        (&self.p_inv_sqrt * w).norm() * (&self.p_sqrt * z).norm()
    }

    /// Certified upper bound on `1ᵀ M^t 1`.
    pub fn bound(&self, t: u32) -> f64 {
        self.eta.powi(t as i32) * self.bound_constant
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LyapunovOptions {
    pub dim_limit: usize,
    pub max_doublings: usize,
    pub spectral: SpectralOptions,
}

impl Default for LyapunovOptions {
    fn default() -> Self {
        Self {
            dim_limit: 512,
            max_doublings: 64,
            spectral: SpectralOptions::default(),
        }
    }
}

/// Solves `MᵀPM − P = −I` by Smith doubling:
/// `P_{k+1} = P_k + A_kᵀ P_k A_k`, `A_{k+1} = A_k²`, starting at `P_0 = I`,
/// `A_0 = M`, so `P_k = Σ_{j < 2^k} (Mᵀ)^j M^j`.
pub fn solve_discrete_lyapunov(m: &DMatrix<f64>, max_doublings: usize) -> Result<DMatrix<f64>> {
    let d = m.nrows();
    let mut p = DMatrix::<f64>::identity(d, d);
    let mut a = m.clone();
    for _ in 0..max_doublings {
        let inc = a.transpose() * &p * &a;
        let done = inc.amax() <= 1e-17 * p.amax();
        p += inc;
        if done {
            p = (&p + p.transpose()) * 0.5;
            return Ok(p);
        }
        a = &a * &a;
        if !a.iter().all(|v| v.is_finite()) {
            break;
        }
    }
    Err(Error::NotConverged("Smith iteration for the Lyapunov equation".into()))
}

pub fn lyapunov_certificate<O: LinearOperator + ?Sized>(op: &O, opts: &LyapunovOptions) -> Result<LyapunovCertificate> {
    let d = op.dim();
    if d > opts.dim_limit {
        return Err(Error::DimensionTooLarge {
            what: "Lyapunov solver",
            dim: d,
            limit: opts.dim_limit,
        });
    }
    let m = op.to_dense();
    let rho = if d <= opts.spectral.dense_limit {
        dense_qr_radius(&m)?.rho
    } else {
        spectral_radius(op, &opts.spectral)?.rho
    };
    if rho >= 1.0 {
        return Err(Error::NoCertificate { rho });
    }
    let p = solve_discrete_lyapunov(&m, opts.max_doublings)?;
    let resid = (m.transpose() * &p * &m - &p + DMatrix::identity(d, d)).amax();
    if resid > 1e-8 * p.amax().max(1.0) {
        return Err(Error::InternalConsistency(format!(
            "Lyapunov residual {resid:e} too large"
        )));
    }
    let decrease = &p - m.transpose() * &p * &m;
    if decrease.clone().cholesky().is_none() {
        return Err(Error::InternalConsistency("P - MᵀPM is not positive definite".into()));
    }

    let eig = SymmetricEigen::new(p.clone());
    if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
        return Err(Error::InternalConsistency("Lyapunov solution is not positive definite".into()));
    }
    let v = &eig.eigenvectors;
    let sq = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    let isq = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
    let p_sqrt = v * sq * v.transpose();
    let p_inv_sqrt = v * isq * v.transpose();

    let nmat = &p_sqrt * &m * &p_inv_sqrt;
    let eta = SVD::new(nmat, false, false)
        .singular_values
        .iter()
        .copied()
        .fold(0.0, f64::max);
    if eta >= 1.0 {
        return Err(Error::InternalConsistency(format!("contraction factor {eta} is not below 1")));
    }
    let ones = DVector::from_element(d, 1.0);
    let bound_constant = (&p_sqrt * &ones).norm() * (&p_inv_sqrt * &ones).norm();
    let lmax = eig.eigenvalues.max();
    let lmin = eig.eigenvalues.min();
    Ok(LyapunovCertificate {
        p,
        p_sqrt,
        p_inv_sqrt,
        eta,
        bound_constant,
        conditioning: (lmax / lmin).sqrt(),
        rho,
    })
}

// ---------------------------------------------------------------------------
// Star-graph row-sum certificate

/// Weighted row-sum bound `ρ(M'') <= max_i (M'' x)_i / x_i` for a star with
/// hub 0, using `x = [1, ε 1, (α/√(n-1)) 1, c 1]` over the classes
/// (hub `p`, leaf `p`, `q_out`, `q_in`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StarCertificate {
    pub n: usize,
    pub params: EpidemicParams,
    pub alpha: f64,
    pub c: f64,
    pub eps: f64,
    /// Row bounds for the hub, leaf, `q_out` and `q_in` classes.
    pub row_bounds: [f64; 4],
    pub max_rho: f64,
    /// `1 − δ + β √(n−1)`
    pub rho_m: f64,
}

impl StarCertificate {
    pub fn beats_marginal_bound(&self) -> bool {
        self.max_rho < self.rho_m
    }

    /// The weighting vector in `(p, q_out, q_in)` layout.
    pub fn weights(&self) -> Vec<f64> {
        let k = self.n - 1;
        let mut x = Vec::with_capacity(3 * self.n - 2);
        x.push(1.0);
        x.extend(std::iter::repeat_n(self.eps, k));
        x.extend(std::iter::repeat_n(self.alpha / (k as f64).sqrt(), k));
        x.extend(std::iter::repeat_n(self.c, k));
        x
    }
}

/// Picks the window midpoints `α = (δ+1)/2`,
/// `c = (max{α(1+δ), 1} + α/δ)/2`, `ε = β(α − δc) / (2δ(1−δ))` and evaluates
/// the four class row bounds in closed form.
pub fn star_rowsum_certificate(n: usize, params: EpidemicParams) -> Result<StarCertificate> {
    let (b, d) = (params.beta(), params.delta());
    if n < 2 {
        return Err(Error::InvalidSize(format!("star needs n >= 2, got {n}")));
    }
    if !params.q_bound_admissible() {
        return Err(Error::Inapplicable(format!("1 - δ - β = {} < 0", 1.0 - d - b)));
    }
    if d * (1.0 + d) >= 1.0 {
        return Err(Error::Inapplicable(format!("δ(1 + δ) = {} >= 1", d * (1.0 + d))));
    }
    if !(d > 0.0 && d < 1.0) {
        return Err(Error::DegenerateWindow(format!("δ = {d} leaves no window for c")));
    }
    let alpha = 0.5 * (d + 1.0);
    let c_lo = (alpha * (1.0 + d)).max(1.0);
    let c_hi = alpha / d;
    if !(c_lo < c_hi) {
        return Err(Error::DegenerateWindow(format!("c window ({c_lo}, {c_hi}) is empty")));
    }
    let c = 0.5 * (c_lo + c_hi);
    let eps_hi = b * (alpha - d * c) / (d * (1.0 - d));
    if !(eps_hi > 0.0) {
        return Err(Error::DegenerateWindow(format!("ε window (0, {eps_hi}) is empty")));
    }
    let eps = 0.5 * eps_hi;
    let s = ((n - 1) as f64).sqrt();

    let hub = 1.0 - d + alpha * b * s;
    let leaf = 1.0 - d + b * c / eps;
    let q_out = (1.0 - d) * (1.0 - d - b) + (eps * d * (1.0 - d) + b * d * c) * s / alpha;
    let q_in = (1.0 - d) * (1.0 + d / c - d - b) - alpha * b / (c * s) + (alpha / c) * b * (1.0 + d) * s;
    let row_bounds = [hub, leaf, q_out, q_in];
    let max_rho = row_bounds.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(StarCertificate {
        n,
        params,
        alpha,
        c,
        eps,
        row_bounds,
        max_rho,
        rho_m: 1.0 - d + b * s,
    })
}
