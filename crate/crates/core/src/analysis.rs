//! Bound propagation, checks against the exact chain, mixing-time
//! certificates, comparison rows and threshold scans.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{check_sign_condition, BoundKind, BoundMatrix, EpidemicParams, SignCheckOptions, SignStatus};
use crate::chain::{exact_moments, tv_from_stationary, ChainDistribution, ExactChain, ExactMoments, NetworkState};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::sparse::LinearOperator;
use crate::spectral::{
    lyapunov_certificate, perron_certificate, spectral_radius, LyapunovOptions, SpectralOptions,
};

/// Bound iterates `x̂(0..=T)` in natural coordinates: `p̂` for `M`,
/// `(p̂, p̂_E)` for `M'`, `(p̂, q̂_E)` for `M''`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundTrajectory {
    pub kind: BoundKind,
    pub n: usize,
    pub states: Vec<Vec<f64>>,
    /// Whether the iterates are guaranteed to bound the chain.
    pub valid: bool,
}

impl BoundTrajectory {
    pub fn p(&self, t: usize) -> &[f64] {
        &self.states[t][..self.n]
    }

    /// Pairwise block: `p̂_E` for `M'`, `q̂_E` for `M''`, empty for `M`.
    pub fn pairs(&self, t: usize) -> &[f64] {
        &self.states[t][self.n..]
    }

    pub fn total(&self, t: usize) -> f64 {
        self.p(t).iter().sum()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PropagateOptions {
    /// Propagate `M''` even when `1 − δ − β < 0`, marking the result invalid.
    pub allow_invalid: bool,
    /// Sign-condition horizon for `M'`; defaults to the propagation length.
    pub sign_horizon: Option<usize>,
}

pub fn propagate(
    kind: BoundKind,
    g: &Graph,
    params: EpidemicParams,
    init: &ExactMoments,
    t_max: usize,
) -> Result<BoundTrajectory> {
    propagate_with(kind, g, params, init, t_max, &PropagateOptions::default())
}

pub fn propagate_with(
    kind: BoundKind,
    g: &Graph,
    params: EpidemicParams,
    init: &ExactMoments,
    t_max: usize,
    opts: &PropagateOptions,
) -> Result<BoundTrajectory> {
    let (n, m) = (g.node_count(), g.edge_count());
    if init.p.len() != n || init.p_e.len() != m || init.q_e.len() != 2 * m {
        return Err(Error::InvalidSize("initial moments do not match the graph".into()));
    }
    let op = BoundMatrix::new(kind, g, params);
    let (mut x, valid) = match kind {
        BoundKind::M => (init.p.clone(), true),
        BoundKind::MPrime => {
            let horizon = opts.sign_horizon.unwrap_or(t_max).max(1);
            let report = check_sign_condition(&op, &SignCheckOptions { horizon, ..Default::default() })?;
            let valid = match report.status {
                SignStatus::FailsAt { .. } => false,
                SignStatus::HoldsConverged { .. } => true,
                SignStatus::HoldsToHorizon { horizon } => horizon >= t_max,
            };
            let mut x = init.p.clone();
            x.extend(init.p_e.iter().map(|v| -v));
            (x, valid)
        }
        BoundKind::MDoublePrime => {
            if !params.q_bound_admissible() && !opts.allow_invalid {
                return Err(Error::PropagationInvalid(format!(
                    "1 - δ - β = {} < 0",
                    1.0 - params.delta() - params.beta()
                )));
            }
            let mut x = init.p.clone();
            x.extend_from_slice(&init.q_e);
            (x, params.q_bound_admissible())
        }
    };
    let natural = |x: &[f64]| -> Vec<f64> {
        if kind == BoundKind::MPrime {
            x[..n].iter().copied().chain(x[n..].iter().map(|v| -v)).collect()
        } else {
            x.to_vec()
        }
    };
    let mut states = Vec::with_capacity(t_max + 1);
    states.push(natural(&x));
    let mut y = vec![0.0; x.len()];
    for _ in 0..t_max {
        op.apply(&x, &mut y);
        std::mem::swap(&mut x, &mut y);
        states.push(natural(&x));
    }
    Ok(BoundTrajectory { kind, n, states, valid })
}

// ---------------------------------------------------------------------------
// Dominance against the exact chain

/// Largest violation of each clause over `t <= T` (0 when a clause holds).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub t_max: usize,
    /// `p(t+1) <= (1−δ)p + βAp`
    pub marginal: f64,
    /// The pairwise-corrected marginal bound holds and is at least as tight.
    pub pairwise_marginal: f64,
    /// Lower bound on `p_ij(t+1)`.
    pub pair_lower: f64,
    /// One-step bounds on `p` and `q` through the cross terms.
    pub cross_terms: f64,
    /// Multi-step dominance of the propagated bounds that are valid.
    pub trajectory: f64,
    /// `tv(t) <= 1ᵀp(t) <= 1ᵀp̂_M(t)`
    pub union_bound: f64,
    pub m_prime_checked: bool,
    pub m_double_prime_checked: bool,
}

impl DominanceReport {
    pub fn max_violation(&self) -> f64 {
        [
            self.marginal,
            self.pairwise_marginal,
            self.pair_lower,
            self.cross_terms,
            self.trajectory,
            self.union_bound,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn clauses(&self) -> [(&'static str, f64); 6] {
        [
            ("marginal", self.marginal),
            ("pairwise_marginal", self.pairwise_marginal),
            ("pair_lower", self.pair_lower),
            ("cross_terms", self.cross_terms),
            ("trajectory", self.trajectory),
            ("union_bound", self.union_bound),
        ]
    }
}

fn excess(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs).max(0.0)
}

/// One-step clauses between consecutive exact moments.
fn one_step(g: &Graph, params: EpidemicParams, now: &ExactMoments, next: &ExactMoments, r: &mut DominanceReport) {
    let (b, d) = (params.beta(), params.delta());
    let dir = g.directed_index();
    let und = g.undirected_index();
    for i in 0..g.node_count() {
        let sum_p: f64 = g.neighbors(i).iter().map(|&j| now.p[j]).sum();
        let sum_pij: f64 = g
            .neighbors(i)
            .iter()
            .map(|&j| now.p_e[und.index_of(i, j).expect("edge")])
            .sum();
        let sum_q: f64 = g
            .neighbors(i)
            .iter()
            .map(|&l| now.q_e[dir.index_of(i, l).expect("edge")])
            .sum();
        let classic = (1.0 - d) * now.p[i] + b * sum_p;
        let pairwise = classic - b * sum_pij;
        let cross = (1.0 - d) * now.p[i] + b * sum_q;
        r.marginal = r.marginal.max(excess(next.p[i], classic));
        r.pairwise_marginal = r.pairwise_marginal.max(excess(next.p[i], pairwise)).max(excess(pairwise, classic));
        r.cross_terms = r.cross_terms.max(excess(next.p[i], cross));
    }
    for (e, &(i, j)) in g.edges().iter().enumerate() {
        let lower = (1.0 - d) * b * (now.p[i] + now.p[j]) + (1.0 - d) * (1.0 - d - 2.0 * b) * now.p_e[e];
        r.pair_lower = r.pair_lower.max(excess(lower, next.p_e[e]));
    }
    for (k, (i, j)) in dir.pairs().enumerate() {
        let rev = dir.index_of(j, i).expect("reverse pair");
        let others: f64 = g
            .neighbors(j)
            .iter()
            .filter(|&&l| l != i)
            .map(|&l| now.q_e[dir.index_of(j, l).expect("edge")])
            .sum();
        let upper = d * (1.0 - d) * now.p[j]
            + (1.0 - d) * (1.0 - d - b) * now.q_e[k]
            + b * d * now.q_e[rev]
            + b * (1.0 + d) * others;
        r.cross_terms = r.cross_terms.max(excess(next.q_e[k], upper));
    }
}

/// Runs the exact chain from all-infected for `t_max` steps and measures
/// every one-step and multi-step bound against it.
pub fn dominance_check(g: &Graph, params: EpidemicParams, t_max: usize) -> Result<DominanceReport> {
    let n = g.node_count();
    let chain = ExactChain::new(g, params)?;
    let dists = chain.evolve(ChainDistribution::point_mass(n, NetworkState::all_infected(n))?, t_max)?;
    let moments: Vec<ExactMoments> = dists.iter().map(|d| exact_moments(d, g)).collect::<Result<_>>()?;

    let mut r = DominanceReport {
        t_max,
        marginal: 0.0,
        pairwise_marginal: 0.0,
        pair_lower: 0.0,
        cross_terms: 0.0,
        trajectory: 0.0,
        union_bound: 0.0,
        m_prime_checked: false,
        m_double_prime_checked: false,
    };
    for w in moments.windows(2) {
        one_step(g, params, &w[0], &w[1], &mut r);
    }

    let init = &moments[0];
    let hat_m = propagate(BoundKind::M, g, params, init, t_max)?;
    let hat_mp = propagate(BoundKind::MPrime, g, params, init, t_max)?;
    r.m_prime_checked = hat_mp.valid;
    let hat_mpp = if params.q_bound_admissible() {
        r.m_double_prime_checked = true;
        Some(propagate(BoundKind::MDoublePrime, g, params, init, t_max)?)
    } else {
        None
    };
    for (t, mom) in moments.iter().enumerate() {
        for i in 0..n {
            r.trajectory = r.trajectory.max(excess(mom.p[i], hat_m.p(t)[i]));
            if hat_mp.valid {
                r.trajectory = r
                    .trajectory
                    .max(excess(mom.p[i], hat_mp.p(t)[i]))
                    .max(excess(hat_mp.p(t)[i], hat_m.p(t)[i]));
            }
            if let Some(h) = &hat_mpp {
                r.trajectory = r.trajectory.max(excess(mom.p[i], h.p(t)[i]));
            }
        }
        if let Some(h) = &hat_mpp {
            for (q, qh) in mom.q_e.iter().zip(h.pairs(t)) {
                r.trajectory = r.trajectory.max(excess(*q, *qh));
            }
        }
        let tv = tv_from_stationary(&dists[t]);
        r.union_bound = r
            .union_bound
            .max(excess(tv, mom.total_infected()))
            .max(excess(mom.total_infected(), hat_m.total(t)));
    }
    Ok(r)
}

// ---------------------------------------------------------------------------
// Comparison rows

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub graph: String,
    pub n: usize,
    pub edges: usize,
    pub params: EpidemicParams,
    pub lambda_max: f64,
    pub rho_m: f64,
    pub rho_m_prime: f64,
    pub sign_condition: SignStatus,
    pub rho_m_double_prime: f64,
    /// `1 − δ − β >= 0`, the premise for propagating `M''`.
    pub q_bound_admissible: bool,
    /// `ρ(M') <= ρ(M)` up to `1e-8`.
    pub conjecture_holds: bool,
}

impl ComparisonRow {
    /// `β λ_max / δ`
    pub fn effective_rate(&self) -> f64 {
        self.params.beta() * self.lambda_max / self.params.delta()
    }
}

pub fn table_row(g: &Graph, label: &str, params: EpidemicParams, horizon: usize) -> Result<ComparisonRow> {
    let opts = SpectralOptions::default();
    let rho = |k| spectral_radius(&BoundMatrix::new(k, g, params), &opts).map(|r| r.rho);
    let rho_m = rho(BoundKind::M)?;
    let rho_m_prime = rho(BoundKind::MPrime)?;
    let rho_m_double_prime = rho(BoundKind::MDoublePrime)?;
    let report = check_sign_condition(
        &BoundMatrix::new(BoundKind::MPrime, g, params),
        &SignCheckOptions { horizon, ..Default::default() },
    )?;
    let conjecture_holds = rho_m_prime <= rho_m + 1e-8;
    if !conjecture_holds {
        log::warn!(
            "rho(M') = {rho_m_prime} exceeds rho(M) = {rho_m} on {label} (beta = {}, delta = {})",
            params.beta(),
            params.delta()
        );
    }
    Ok(ComparisonRow {
        graph: label.to_string(),
        n: g.node_count(),
        edges: g.edge_count(),
        params,
        lambda_max: g.lambda_max(),
        rho_m,
        rho_m_prime,
        sign_condition: report.status,
        rho_m_double_prime,
        q_bound_admissible: params.q_bound_admissible(),
        conjecture_holds,
    })
}

// ---------------------------------------------------------------------------
// Mixing-time certificates

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixingRoute {
    /// `log(n/ε) / −log ρ(M)`
    Marginal,
    /// Lyapunov certificate for `M'` with the sign condition holding.
    Pairwise,
    /// Perron or Lyapunov certificate for nonnegative `M''`.
    CrossTerm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixingCertificate {
    pub route: MixingRoute,
    /// `t_mix(ε) <= bound`
    pub bound: f64,
    /// Per-step contraction factor.
    pub rate: f64,
    /// `C` in `tv(t) <= C rate^t`.
    pub constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "result")]
pub enum MixingBound {
    Certified {
        best: MixingCertificate,
        all: Vec<MixingCertificate>,
    },
    NoCertificate,
}

impl MixingBound {
    pub fn bound(&self) -> Option<f64> {
        match self {
            MixingBound::Certified { best, .. } => Some(best.bound),
            MixingBound::NoCertificate => None,
        }
    }

    pub fn route(&self, route: MixingRoute) -> Option<&MixingCertificate> {
        match self {
            MixingBound::Certified { all, .. } => all.iter().find(|c| c.route == route),
            MixingBound::NoCertificate => None,
        }
    }
}

fn certificate(route: MixingRoute, rate: f64, constant: f64, eps: f64) -> MixingCertificate {
    MixingCertificate {
        route,
        bound: ((constant / eps).ln() / -rate.ln()).max(0.0),
        rate,
        constant,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MixingOptions {
    pub sign_horizon: usize,
    pub spectral: SpectralOptions,
    pub lyapunov: LyapunovOptions,
}

impl Default for MixingOptions {
    fn default() -> Self {
        Self {
            sign_horizon: 1000,
            spectral: SpectralOptions::default(),
            lyapunov: LyapunovOptions::default(),
        }
    }
}

pub fn mixing_bound(g: &Graph, params: EpidemicParams, eps: f64) -> Result<MixingBound> {
    mixing_bound_with(g, params, eps, &MixingOptions::default())
}

/// Best certified upper bound on `t_mix(ε)` over the routes whose premises
/// hold. Each route bounds `1ᵀp(t)` from the all-infected start, which
/// dominates the distance to the absorbing state.
pub fn mixing_bound_with(g: &Graph, params: EpidemicParams, eps: f64, opts: &MixingOptions) -> Result<MixingBound> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon = {eps} must lie in (0, 1)")));
    }
    let (n, m) = (g.node_count(), g.edge_count());
    let mut all = Vec::new();

    let rho_m = spectral_radius(&BoundMatrix::new(BoundKind::M, g, params), &opts.spectral)?.rho;
    if rho_m < 1.0 && rho_m > 0.0 {
        all.push(certificate(MixingRoute::Marginal, rho_m, n as f64, eps));
    }

    let mp = BoundMatrix::new(BoundKind::MPrime, g, params);
    let sign = check_sign_condition(&mp, &SignCheckOptions { horizon: opts.sign_horizon, ..Default::default() })?;
    if sign.status.holds() {
        match lyapunov_certificate(&mp, &opts.lyapunov) {
            Ok(cert) if cert.eta > 0.0 => {
                let mut w = vec![0.0; n + m];
                w[..n].iter_mut().for_each(|v| *v = 1.0);
                let mut z = vec![-1.0; n + m];
                z[..n].iter_mut().for_each(|v| *v = 1.0);
                all.push(certificate(MixingRoute::Pairwise, cert.eta, cert.bilinear_constant(&w, &z), eps));
            }
            Ok(_) => {}
            Err(Error::NoCertificate { .. } | Error::DimensionTooLarge { .. } | Error::NotConverged(_)) => {}
            Err(e) => return Err(e),
        }
    }

    if params.q_bound_admissible() {
        let mpp = BoundMatrix::new(BoundKind::MDoublePrime, g, params);
        let mut w = vec![0.0; n + 2 * m];
        w[..n].iter_mut().for_each(|v| *v = 1.0);
        let mut best: Option<MixingCertificate> = None;
        if let Ok(cert) = perron_certificate(&mpp, &opts.spectral) {
            if cert.upper < 1.0 && cert.upper > 0.0 {
                best = Some(certificate(MixingRoute::CrossTerm, cert.upper, cert.bilinear_constant(&w, &w), eps));
            }
        }
        match lyapunov_certificate(&mpp, &opts.lyapunov) {
            Ok(cert) if cert.eta > 0.0 => {
                let c = certificate(MixingRoute::CrossTerm, cert.eta, cert.bilinear_constant(&w, &w), eps);
                if best.is_none_or(|b| c.bound < b.bound) {
                    best = Some(c);
                }
            }
            Ok(_) => {}
            Err(Error::NoCertificate { .. } | Error::DimensionTooLarge { .. } | Error::NotConverged(_)) => {}
            Err(e) => return Err(e),
        }
        all.extend(best);
    }

    Ok(match all.iter().min_by(|a, b| a.bound.total_cmp(&b.bound)).copied() {
        Some(best) => MixingBound::Certified { best, all },
        None => MixingBound::NoCertificate,
    })
}

// ---------------------------------------------------------------------------
// Threshold scans

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub beta: f64,
    pub rho_m: f64,
    pub rho_mp: f64,
    pub rho_mpp: f64,
    pub cond_holds: bool,
}

/// A radius crossing 1 between two adjacent grid points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub kind: BoundKind,
    pub beta_lo: f64,
    pub beta_hi: f64,
    /// Linear interpolation of the radius between the two grid points.
    pub interpolated: f64,
    /// Bisection estimate, when refinement was requested.
    pub refined: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub graph: String,
    pub delta: f64,
    pub rows: Vec<ScanRow>,
    pub crossings: Vec<Crossing>,
}

impl ScanReport {
    pub fn crossing(&self, kind: BoundKind) -> Option<&Crossing> {
        self.crossings.iter().find(|c| c.kind == kind)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "beta,rho_m,rho_mp,rho_mpp,cond_holds")?;
        for r in &self.rows {
            writeln!(w, "{},{},{},{},{}", r.beta, r.rho_m, r.rho_mp, r.rho_mpp, r.cond_holds)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ScanOptions {
    pub horizon: usize,
    /// Bisection tolerance in `β`; `None` skips refinement.
    pub refine_tol: Option<f64>,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            horizon: 1000,
            refine_tol: Some(1e-4),
        }
    }
}

fn radius(kind: BoundKind, g: &Graph, beta: f64, delta: f64) -> Result<f64> {
    let p = EpidemicParams::new(beta, delta)?;
    Ok(spectral_radius(&BoundMatrix::new(kind, g, p), &SpectralOptions::default())?.rho)
}

pub fn threshold_scan(g: &Graph, label: &str, delta: f64, betas: &[f64], opts: &ScanOptions) -> Result<ScanReport> {
    if betas.is_empty() {
        return Err(Error::InvalidParameter("empty beta grid".into()));
    }
    if betas.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter("beta grid must be strictly increasing".into()));
    }
    let rows: Vec<ScanRow> = betas
        .par_iter()
        .map(|&beta| {
            let row = table_row(g, label, EpidemicParams::new(beta, delta)?, opts.horizon)?;
            Ok(ScanRow {
                beta,
                rho_m: row.rho_m,
                rho_mp: row.rho_m_prime,
                rho_mpp: row.rho_m_double_prime,
                cond_holds: row.sign_condition.holds(),
            })
        })
        .collect::<Result<_>>()?;

    let mut crossings = Vec::new();
    for kind in [BoundKind::M, BoundKind::MPrime, BoundKind::MDoublePrime] {
        let pick = |r: &ScanRow| match kind {
            BoundKind::M => r.rho_m,
            BoundKind::MPrime => r.rho_mp,
            BoundKind::MDoublePrime => r.rho_mpp,
        };
        for w in rows.windows(2) {
            let (a, b) = (pick(&w[0]) - 1.0, pick(&w[1]) - 1.0);
            if a == 0.0 || a.signum() == b.signum() {
                continue;
            }
            let interpolated = w[0].beta + (w[1].beta - w[0].beta) * a / (a - b);
            let refined = match opts.refine_tol {
                Some(tol) => Some(bisect(kind, g, delta, w[0].beta, w[1].beta, a < 0.0, tol)?),
                None => None,
            };
            crossings.push(Crossing {
                kind,
                beta_lo: w[0].beta,
                beta_hi: w[1].beta,
                interpolated,
                refined,
            });
        }
    }
    Ok(ScanReport {
        graph: label.to_string(),
        delta,
        rows,
        crossings,
    })
}

fn bisect(kind: BoundKind, g: &Graph, delta: f64, mut lo: f64, mut hi: f64, rising: bool, tol: f64) -> Result<f64> {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let below = radius(kind, g, mid, delta)? < 1.0;
        if below == rising {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::MixingOutcome;
    use crate::graph::{clique, cycle, path, star};

    fn params(b: f64, d: f64) -> EpidemicParams {
        EpidemicParams::new(b, d).unwrap()
    }

    #[test]
    fn marginal_propagation_is_matrix_power() {
        let g = cycle(5).unwrap();
        let p = params(0.2, 0.3);
        let traj = propagate(BoundKind::M, &g, p, &ExactMoments::all_infected(&g), 20).unwrap();
        let m = BoundMatrix::new(BoundKind::M, &g, p).to_dense();
        let mut v = nalgebra::DVector::from_element(5, 1.0);
        let rho = 1.0 - 0.3 + 0.2 * 2.0;
        for t in 0..=20 {
            for i in 0..5 {
                assert!((traj.p(t)[i] - v[i]).abs() < 1e-12);
            }
            assert!(traj.total(t) <= 5.0 * f64::powi(rho, t as i32) + 1e-9);
            v = &m * v;
        }
    }

    #[test]
    fn no_infection_decays_geometrically() {
        let g = star(5).unwrap();
        let d = 0.35;
        let init = ExactMoments::all_infected(&g);
        for kind in [BoundKind::M, BoundKind::MPrime, BoundKind::MDoublePrime] {
            let traj = propagate(kind, &g, params(0.0, d), &init, 15).unwrap();
            for t in 0..=15 {
                for &v in traj.p(t) {
                    assert!((v - (1.0 - d).powi(t as i32)).abs() < 1e-14, "{kind:?} t={t}");
                }
            }
        }
    }

    #[test]
    fn m_prime_state_flips_back() {
        let g = path(2).unwrap();
        let traj = propagate(BoundKind::MPrime, &g, params(0.1, 0.2), &ExactMoments::all_infected(&g), 1).unwrap();
        assert_eq!(traj.pairs(0), &[1.0]);
        // p_01(1) >= (1-δ)β·2 + (1-δ)(1-δ-2β)
        let expect = 0.8 * 0.1 * 2.0 + 0.8 * 0.6;
        assert!((traj.pairs(1)[0] - expect).abs() < 1e-14);
    }

    #[test]
    fn q_propagation_requires_premise() {
        let g = path(3).unwrap();
        let init = ExactMoments::all_infected(&g);
        let p = params(0.6, 0.6);
        assert!(matches!(
            propagate(BoundKind::MDoublePrime, &g, p, &init, 5),
            Err(Error::PropagationInvalid(_))
        ));
        let opts = PropagateOptions { allow_invalid: true, ..Default::default() };
        let traj = propagate_with(BoundKind::MDoublePrime, &g, p, &init, 5, &opts).unwrap();
        assert!(!traj.valid);
        assert_eq!(traj.len(), 6);
    }

    #[test]
    fn star6_sandwich() {
        let g = star(6).unwrap();
        let p = params(0.05, 0.6);
        let chain = ExactChain::new(&g, p).unwrap();
        let dists = chain
            .evolve(ChainDistribution::point_mass(6, NetworkState::all_infected(6)).unwrap(), 50)
            .unwrap();
        let init = ExactMoments::all_infected(&g);
        let hm = propagate(BoundKind::M, &g, p, &init, 50).unwrap();
        let hmp = propagate(BoundKind::MPrime, &g, p, &init, 50).unwrap();
        assert!(hmp.valid);
        for t in 0..=50 {
            let mom = exact_moments(&dists[t], &g).unwrap();
            for i in 0..6 {
                assert!(mom.p[i] <= hmp.p(t)[i] + 1e-10);
                assert!(hmp.p(t)[i] <= hm.p(t)[i] + 1e-10);
            }
        }
    }

    #[test]
    fn path3_dominance_clean() {
        let r = dominance_check(&path(3).unwrap(), params(0.3, 0.4), 30).unwrap();
        assert!(r.max_violation() <= 1e-10, "{r:?}");
        assert!(r.m_double_prime_checked);
    }

    #[test]
    fn full_recovery_pair_bound_trivial() {
        let r = dominance_check(&clique(4).unwrap(), params(0.4, 1.0), 5).unwrap();
        assert_eq!(r.pair_lower, 0.0);
        assert!(r.max_violation() <= 1e-12);
    }

    #[test]
    fn frozen_chain_bounds_tight() {
        let r = dominance_check(&cycle(4).unwrap(), params(0.0, 0.0), 5).unwrap();
        assert_eq!(r.max_violation(), 0.0);
    }

    #[test]
    fn star101_row() {
        let g = star(101).unwrap();
        let row = table_row(&g, "star101", params(0.078, 0.75), 1000).unwrap();
        assert!((row.rho_m - 1.030).abs() < 1e-3);
        assert!(row.conjecture_holds);
        assert!((row.lambda_max - 10.0).abs() < 1e-9);
    }

    #[test]
    fn cycle_rho_m_size_free() {
        for n in [3, 10, 101] {
            let row = table_row(&cycle(n).unwrap(), "cycle", params(0.390, 0.75), 200).unwrap();
            assert!((row.rho_m - 1.030).abs() < 1e-3, "n = {n}");
        }
    }

    #[test]
    fn zero_beta_row() {
        let row = table_row(&star(9).unwrap(), "star9", params(0.0, 0.4), 100).unwrap();
        for r in [row.rho_m, row.rho_m_prime, row.rho_m_double_prime] {
            assert!((r - 0.6).abs() < 1e-8, "{r}");
        }
    }

    #[test]
    fn star6_mixing_bound_dominates_exact() {
        let g = star(6).unwrap();
        let p = params(0.05, 0.6);
        let b = mixing_bound(&g, p, 0.01).unwrap();
        let bound = b.bound().unwrap();
        let t = crate::chain::mixing_time(&g, p, 0.01, 1000).unwrap();
        let MixingOutcome::Reached(t) = t else { panic!("not mixed") };
        assert!(t as f64 <= bound.ceil(), "{t} > {bound}");
        let marginal = b.route(MixingRoute::Marginal).unwrap().bound;
        let rho: f64 = 1.0 - 0.6 + 0.05 * 5f64.sqrt();
        assert!((marginal - (600f64).ln() / -rho.ln()).abs() < 1e-6);
    }

    #[test]
    fn pairwise_route_beyond_marginal_threshold() {
        // a small star with ρ(M) > 1 > ρ(M')
        let g = star(6).unwrap();
        let p = params(0.25, 0.55);
        let rho_m = radius(BoundKind::M, &g, 0.25, 0.55).unwrap();
        let rho_mp = radius(BoundKind::MPrime, &g, 0.25, 0.55).unwrap();
        assert!(rho_m > 1.0 && rho_mp < 1.0, "{rho_m} {rho_mp}");
        let b = mixing_bound(&g, p, 0.01).unwrap();
        assert!(b.route(MixingRoute::Marginal).is_none());
        let pw = b.route(MixingRoute::Pairwise).unwrap();
        let t = crate::chain::mixing_time(&g, p, 0.01, 10_000).unwrap().time().unwrap();
        assert!(t as f64 <= pw.bound.ceil());
    }

    #[test]
    fn no_certificate_when_everything_grows() {
        let g = clique(6).unwrap();
        assert_eq!(mixing_bound(&g, params(0.9, 0.05), 0.01).unwrap(), MixingBound::NoCertificate);
        assert!(mixing_bound(&g, params(0.9, 0.05), 0.0).is_err());
    }

    #[test]
    fn scan_finds_marginal_crossing() {
        let g = cycle(8).unwrap();
        let delta = 0.5;
        let betas: Vec<f64> = (0..=10).map(|k| k as f64 * 0.05).collect();
        let scan = threshold_scan(&g, "cycle8", delta, &betas, &ScanOptions { horizon: 200, refine_tol: Some(1e-6) }).unwrap();
        assert!((scan.rows[0].rho_m - 0.5).abs() < 1e-9);
        assert!(scan.rows.windows(2).all(|w| w[1].rho_m > w[0].rho_m));
        let c = scan.crossing(BoundKind::M).unwrap();
        // ρ(M) = 1 at β = δ / λ_max = 0.25, which is a grid point
        assert!((c.refined.unwrap() - 0.25).abs() < 1e-5);
    }

    #[test]
    fn scan_rejects_bad_grids() {
        let g = path(3).unwrap();
        assert!(threshold_scan(&g, "p", 0.3, &[], &ScanOptions::default()).is_err());
        assert!(threshold_scan(&g, "p", 0.3, &[0.2, 0.1], &ScanOptions::default()).is_err());
    }

    #[test]
    fn scan_csv_header() {
        let g = path(3).unwrap();
        let scan = threshold_scan(&g, "p", 0.3, &[0.1], &ScanOptions::default()).unwrap();
        let mut buf = Vec::new();
        scan.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("beta,rho_m,rho_mp,rho_mpp,cond_holds\n0.1,"));
    }
}
