//! The three linear bound operators on the SIS marginals.
//!
//! * `M  = (1-δ) I + β A` acts on the marginals `p`.
//! * `M' = [[(1-δ) I + β A, β B], [-(1-δ) β Bᵀ, (1-δ)(1-δ-2β) I]]` acts on
//!   the stacked state `(p, -p_E)`: note the sign on the pairwise block.
//! * `M''` (size `n + 2|E|`) acts on `(p, q_E)` where `q_ij = P(X_i = 0, X_j = 1)`:
//!
//!   ```text
//!   p_i  <- (1-δ) p_i + β Σ_{l ~ i} q_il
//!   q_ij <- δ(1-δ) p_j + (1-δ)(1-δ-β) q_ij + βδ q_ji + β(1+δ) Σ_{l ~ j, l != i} q_jl
//!   ```
//!
//! All three are applied matrix-free in `O(n + |E|)`; `to_sparse` materializes
//! the explicit matrix in row-major triplet form when it is needed.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::sparse::{LinearOperator, SparseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpidemicParams {
    beta: f64,
    delta: f64,
}

impl EpidemicParams {
    pub fn new(beta: f64, delta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::InvalidParameter(format!("beta = {beta} outside [0, 1]")));
        }
        if !(0.0..=1.0).contains(&delta) {
            return Err(Error::InvalidParameter(format!("delta = {delta} outside [0, 1]")));
        }
        Ok(Self { beta, delta })
    }

    /// Infection probability per infected link.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Recovery probability.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Effective infection rate `β/δ`; undefined for `δ = 0`.
    pub fn tau(&self) -> Option<f64> {
        (self.delta > 0.0).then(|| self.beta / self.delta)
    }

    /// The premise `1 - δ - β >= 0` under which `M''` can be propagated.
    pub fn q_bound_admissible(&self) -> bool {
        1.0 - self.delta - self.beta >= 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    M,
    MPrime,
    MDoublePrime,
}

impl BoundKind {
    pub fn label(self) -> &'static str {
        match self {
            BoundKind::M => "M",
            BoundKind::MPrime => "M'",
            BoundKind::MDoublePrime => "M''",
        }
    }
}

/// One of `M`, `M'`, `M''` for a fixed graph and parameter pair.
#[derive(Debug, Clone, Copy)]
pub struct BoundMatrix<'g> {
    kind: BoundKind,
    graph: &'g Graph,
    params: EpidemicParams,
}

pub fn build_m(g: &Graph, params: EpidemicParams) -> BoundMatrix<'_> {
    BoundMatrix {
        kind: BoundKind::M,
        graph: g,
        params,
    }
}

pub fn build_m_prime(g: &Graph, params: EpidemicParams) -> BoundMatrix<'_> {
    BoundMatrix {
        kind: BoundKind::MPrime,
        graph: g,
        params,
    }
}

pub fn build_m_double_prime(g: &Graph, params: EpidemicParams) -> BoundMatrix<'_> {
    BoundMatrix {
        kind: BoundKind::MDoublePrime,
        graph: g,
        params,
    }
}

impl<'g> BoundMatrix<'g> {
    pub fn new(kind: BoundKind, g: &'g Graph, params: EpidemicParams) -> Self {
        Self {
            kind,
            graph: g,
            params,
        }
    }

    pub fn kind(&self) -> BoundKind {
        self.kind
    }

    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    pub fn params(&self) -> EpidemicParams {
        self.params
    }

    pub fn dimension(&self) -> usize {
        let (n, m) = (self.graph.node_count(), self.graph.edge_count());
        match self.kind {
            BoundKind::M => n,
            BoundKind::MPrime => n + m,
            BoundKind::MDoublePrime => n + 2 * m,
        }
    }

    /// Whether every entry of the explicit matrix is `>= 0`.
    pub fn nonnegative(&self) -> bool {
        let (b, d) = (self.params.beta, self.params.delta);
        let no_edges = self.graph.edge_count() == 0;
        match self.kind {
            BoundKind::M => true,
            BoundKind::MPrime => {
                no_edges || ((b == 0.0 || d == 1.0) && (1.0 - d) * (1.0 - d - 2.0 * b) >= 0.0)
            }
            BoundKind::MDoublePrime => no_edges || (1.0 - d) * (1.0 - d - b) >= 0.0,
        }
    }

    /// Explicit matrix, row-major.
    pub fn to_sparse(&self) -> SparseMatrix {
        let g = self.graph;
        let (b, d) = (self.params.beta, self.params.delta);
        let (n, m) = (g.node_count(), g.edge_count());
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 1.0 - d));
        }
        match self.kind {
            BoundKind::M => {
                for &(i, j) in g.edges() {
                    t.push((i, j, b));
                    t.push((j, i, b));
                }
            }
            BoundKind::MPrime => {
                let r = (1.0 - d) * (1.0 - d - 2.0 * b);
                for (e, &(i, j)) in g.edges().iter().enumerate() {
                    t.push((i, j, b));
                    t.push((j, i, b));
                    t.push((i, n + e, b));
                    t.push((j, n + e, b));
                    t.push((n + e, i, -(1.0 - d) * b));
                    t.push((n + e, j, -(1.0 - d) * b));
                    t.push((n + e, n + e, r));
                }
            }
            BoundKind::MDoublePrime => {
                let idx = g.directed_index();
                let self_coef = (1.0 - d) * (1.0 - d - b);
                for (k, (i, j)) in idx.pairs().enumerate() {
                    let row = n + k;
                    // p_i row picks up β q_ij
                    t.push((i, row, b));
                    t.push((row, j, d * (1.0 - d)));
                    t.push((row, row, self_coef));
                    let rev = idx.index_of(j, i).expect("reverse pair exists");
                    t.push((row, n + rev, b * d));
                    for &l in g.neighbors(j) {
                        if l != i {
                            let col = idx.index_of(j, l).expect("edge exists");
                            t.push((row, n + col, b * (1.0 + d)));
                        }
                    }
                }
                debug_assert_eq!(idx.len(), 2 * m);
            }
        }
        SparseMatrix::from_triplets(self.dimension(), self.dimension(), t).expect("indices in range")
    }
}

impl LinearOperator for BoundMatrix<'_> {
    fn dim(&self) -> usize {
        self.dimension()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let g = self.graph;
        let (b, d) = (self.params.beta, self.params.delta);
        let (n, m) = (g.node_count(), g.edge_count());
        assert_eq!(x.len(), self.dimension());
        assert_eq!(y.len(), self.dimension());
        let (yp, yr) = y.split_at_mut(n);
        let (xp, xr) = x.split_at(n);
        match self.kind {
            BoundKind::M => {
                g.adjacency_apply(xp, yp);
                for i in 0..n {
                    yp[i] = (1.0 - d) * xp[i] + b * yp[i];
                }
            }
            BoundKind::MPrime => {
                g.adjacency_apply(xp, yp);
                for i in 0..n {
                    yp[i] = (1.0 - d) * xp[i] + b * yp[i];
                }
                let r = (1.0 - d) * (1.0 - d - 2.0 * b);
                for (e, &(i, j)) in g.edges().iter().enumerate() {
                    yp[i] += b * xr[e];
                    yp[j] += b * xr[e];
                    yr[e] = -(1.0 - d) * b * (xp[i] + xp[j]) + r * xr[e];
                }
            }
            BoundKind::MDoublePrime => {
                // s[i] = Σ_{l ~ i} q_il
                let mut s = vec![0.0; n];
                for (e, &(i, j)) in g.edges().iter().enumerate() {
                    s[i] += xr[e];
                    s[j] += xr[m + e];
                }
                for i in 0..n {
                    yp[i] = (1.0 - d) * xp[i] + b * s[i];
                }
                let c = (1.0 - d) * (1.0 - d - b);
                for (e, &(i, j)) in g.edges().iter().enumerate() {
                    let (qij, qji) = (xr[e], xr[m + e]);
                    yr[e] = d * (1.0 - d) * xp[j] + c * qij + b * d * qji + b * (1.0 + d) * (s[j] - qji);
                    yr[m + e] =
                        d * (1.0 - d) * xp[i] + c * qji + b * d * qij + b * (1.0 + d) * (s[i] - qij);
                }
            }
        }
    }

    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        let g = self.graph;
        let (b, d) = (self.params.beta, self.params.delta);
        let (n, m) = (g.node_count(), g.edge_count());
        assert_eq!(x.len(), self.dimension());
        assert_eq!(y.len(), self.dimension());
        let (yp, yr) = y.split_at_mut(n);
        let (xp, xr) = x.split_at(n);
        match self.kind {
            BoundKind::M => self.apply(x, y),
            BoundKind::MPrime => {
                g.adjacency_apply(xp, yp);
                for i in 0..n {
                    yp[i] = (1.0 - d) * xp[i] + b * yp[i];
                }
                let r = (1.0 - d) * (1.0 - d - 2.0 * b);
                for (e, &(i, j)) in g.edges().iter().enumerate() {
                    yp[i] -= (1.0 - d) * b * xr[e];
                    yp[j] -= (1.0 - d) * b * xr[e];
                    yr[e] = b * (xp[i] + xp[j]) + r * xr[e];
                }
            }
            BoundKind::MDoublePrime => {
                // t[a] = Σ_{x ~ a} v_xa, the weights of rows q_xa
                let mut t = vec![0.0; n];
                for i in 0..n {
                    yp[i] = (1.0 - d) * xp[i];
                }
                for (e, &(i, j)) in g.edges().iter().enumerate() {
                    let (vij, vji) = (xr[e], xr[m + e]);
                    yp[j] += d * (1.0 - d) * vij;
                    yp[i] += d * (1.0 - d) * vji;
                    t[j] += vij;
                    t[i] += vji;
                }
                let c = (1.0 - d) * (1.0 - d - b);
                for (e, &(i, j)) in g.edges().iter().enumerate() {
                    let (vij, vji) = (xr[e], xr[m + e]);
                    yr[e] = b * xp[i] + c * vij + b * d * vji + b * (1.0 + d) * (t[i] - vji);
                    yr[m + e] = b * xp[j] + c * vji + b * d * vij + b * (1.0 + d) * (t[j] - vij);
                }
            }
        }
    }

    fn is_nonnegative(&self) -> bool {
        self.nonnegative()
    }

    fn diagonal(&self) -> Vec<f64> {
        let (b, d) = (self.params.beta, self.params.delta);
        let (n, m) = (self.graph.node_count(), self.graph.edge_count());
        let mut diag = vec![1.0 - d; n];
        match self.kind {
            BoundKind::M => {}
            BoundKind::MPrime => diag.extend(std::iter::repeat_n((1.0 - d) * (1.0 - d - 2.0 * b), m)),
            BoundKind::MDoublePrime => {
                diag.extend(std::iter::repeat_n((1.0 - d) * (1.0 - d - b), 2 * m))
            }
        }
        diag
    }

    fn to_dense(&self) -> DMatrix<f64> {
        self.to_sparse().dense()
    }
}

// ---------------------------------------------------------------------------
// Sign-propagation condition for M'

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum SignStatus {
    /// Some `[1ᵀ 0ᵀ] M'^t` had an entry below `-tol`.
    FailsAt { t: usize },
    /// Every iterate up to the horizon was nonnegative.
    HoldsToHorizon { horizon: usize },
    /// The normalized iterate settled on a strictly positive direction at
    /// step `t` and was nonnegative up to there.
    HoldsConverged { t: usize },
}

impl SignStatus {
    pub fn holds(&self) -> bool {
        !matches!(self, SignStatus::FailsAt { .. })
    }

    pub fn symbol(&self) -> char {
        if self.holds() {
            '+'
        } else {
            '-'
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignConditionReport {
    pub horizon: usize,
    pub tol: f64,
    /// `holds[t-1]` for each step that was computed.
    pub holds: Vec<bool>,
    pub first_failure: Option<usize>,
    pub status: SignStatus,
}

#[derive(Debug, Clone, Copy)]
pub struct SignCheckOptions {
    pub horizon: usize,
    pub tol: f64,
    /// Stop early once consecutive normalized iterates differ by at most
    /// this much (sup norm) and the iterate's smallest entry exceeds
    /// `positivity_margin`. Set to 0 to disable.
    pub convergence_tol: f64,
    pub positivity_margin: f64,
}

impl Default for SignCheckOptions {
    fn default() -> Self {
        Self {
            horizon: 1000,
            tol: 1e-12,
            convergence_tol: 1e-13,
            positivity_margin: 1e-6,
        }
    }
}

/// Checks `[1_nᵀ 0ᵀ] M'^t >= 0` for `t = 1..=horizon`.
///
/// The iterate is rescaled by its sup norm each step (signs are unaffected),
/// and an entry counts as negative when it is below `-tol` after rescaling.
/// A passing report is only evidence up to the step it reached.
pub fn check_sign_condition(mp: &BoundMatrix<'_>, opts: &SignCheckOptions) -> Result<SignConditionReport> {
    if mp.kind() != BoundKind::MPrime {
        return Err(Error::InvalidParameter(format!(
            "sign condition applies to M', got {}",
            mp.kind().label()
        )));
    }
    sign_propagation(mp, mp.graph().node_count(), opts)
}

/// Checks `[1ᵀ 0ᵀ] A^t >= 0` for a general operator whose leading `n_lead`
/// coordinates carry the ones.
pub fn sign_propagation<O: LinearOperator + ?Sized>(
    op: &O,
    n_lead: usize,
    opts: &SignCheckOptions,
) -> Result<SignConditionReport> {
    if opts.horizon < 1 {
        return Err(Error::InvalidParameter("sign-condition horizon must be >= 1".into()));
    }
    if opts.tol < 0.0 {
        return Err(Error::InvalidParameter("sign-condition tolerance must be >= 0".into()));
    }
    let n = n_lead;
    let dim = op.dim();
    if n > dim {
        return Err(Error::InvalidSize(format!("{n} leading coordinates in dimension {dim}")));
    }
    let mut v = vec![0.0; dim];
    v[..n].iter_mut().for_each(|x| *x = 1.0);
    let mut next = vec![0.0; dim];
    let mut holds = Vec::with_capacity(opts.horizon.min(4096));

    for t in 1..=opts.horizon {
        op.apply_transpose(&v, &mut next);
        let scale = next.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if scale == 0.0 {
            // the iterate vanished; every later one is zero as well
            holds.push(true);
            return Ok(SignConditionReport {
                horizon: opts.horizon,
                tol: opts.tol,
                holds,
                first_failure: None,
                status: SignStatus::HoldsConverged { t },
            });
        }
        next.iter_mut().for_each(|x| *x /= scale);
        let min = next.iter().copied().fold(f64::INFINITY, f64::min);
        let ok = min >= -opts.tol;
        holds.push(ok);
        if !ok {
            return Ok(SignConditionReport {
                horizon: opts.horizon,
                tol: opts.tol,
                holds,
                first_failure: Some(t),
                status: SignStatus::FailsAt { t },
            });
        }
        let change = v
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        std::mem::swap(&mut v, &mut next);
        if opts.convergence_tol > 0.0 && change <= opts.convergence_tol && min > opts.positivity_margin {
            return Ok(SignConditionReport {
                horizon: opts.horizon,
                tol: opts.tol,
                holds,
                first_failure: None,
                status: SignStatus::HoldsConverged { t },
            });
        }
    }
    Ok(SignConditionReport {
        horizon: opts.horizon,
        tol: opts.tol,
        holds,
        first_failure: None,
        status: SignStatus::HoldsToHorizon {
            horizon: opts.horizon,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{clique, cycle, path, star};

    fn p(b: f64, d: f64) -> EpidemicParams {
        EpidemicParams::new(b, d).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(EpidemicParams::new(1.1, 0.5).is_err());
        assert!(EpidemicParams::new(0.5, -0.1).is_err());
        assert_eq!(p(0.2, 0.0).tau(), None);
        assert_eq!(p(0.2, 0.4).tau(), Some(0.5));
    }

    #[test]
    fn m_on_single_edge() {
        let g = path(2).unwrap();
        let m = build_m(&g, p(0.1, 0.2)).to_sparse().dense();
        let expect = DMatrix::from_row_slice(2, 2, &[0.8, 0.1, 0.1, 0.8]);
        assert!((m - expect).abs().max() < 1e-15);
    }

    #[test]
    fn m_vanishes_when_nothing_survives() {
        let g = clique(4).unwrap();
        let m = build_m(&g, p(0.0, 1.0));
        assert_eq!(m.to_sparse().nnz(), 0);
        assert!(m.nonnegative());
    }

    #[test]
    fn m_prime_on_single_edge() {
        let (b, d) = (0.13, 0.37);
        let g = path(2).unwrap();
        let mp = build_m_prime(&g, p(b, d)).to_sparse().dense();
        let w = -(1.0 - d) * b;
        #[rustfmt::skip]
        let expect = DMatrix::from_row_slice(3, 3, &[
            1.0 - d, b, b,
            b, 1.0 - d, b,
            w, w, (1.0 - d) * (1.0 - d - 2.0 * b),
        ]);
        assert!((mp - expect).abs().max() < 1e-15);
    }

    #[test]
    fn m_prime_without_infection_is_block_diagonal() {
        let d = 0.3;
        let g = cycle(5).unwrap();
        let mp = build_m_prime(&g, p(0.0, d)).to_sparse();
        for (r, c, v) in mp.triplets() {
            assert_eq!(r, c);
            let expect = if r < 5 { 1.0 - d } else { (1.0 - d) * (1.0 - d) };
            assert!((v - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn m_double_prime_on_single_edge() {
        let (b, d) = (0.21, 0.33);
        let g = path(2).unwrap();
        let mpp = build_m_double_prime(&g, p(b, d)).to_sparse().dense();
        let c = (1.0 - d) * (1.0 - d - b);
        #[rustfmt::skip]
        let expect = DMatrix::from_row_slice(4, 4, &[
            1.0 - d, 0.0, b, 0.0,
            0.0, 1.0 - d, 0.0, b,
            0.0, d * (1.0 - d), c, b * d,
            d * (1.0 - d), 0.0, b * d, c,
        ]);
        assert!((mpp - expect).abs().max() < 1e-15);
    }

    /// The block form for a star with hub 0: p block, then q_out = (q_0j),
    /// then q_in = (q_j0).
    #[test]
    fn m_double_prime_star_block_form() {
        let (n, b, d) = (6usize, 0.11, 0.27);
        let g = star(n).unwrap();
        let got = build_m_double_prime(&g, p(b, d)).to_sparse().dense();
        let k = n - 1;
        let dim = n + 2 * k;
        let mut e = DMatrix::<f64>::zeros(dim, dim);
        let c = (1.0 - d) * (1.0 - d - b);
        for i in 0..n {
            e[(i, i)] = 1.0 - d;
        }
        for l in 0..k {
            let (qo, qi) = (n + l, n + k + l);
            e[(0, qo)] = b; // βΓ
            e[(1 + l, qi)] = b; // βΔ
            e[(qo, 1 + l)] = d * (1.0 - d); // δ(1-δ)Δᵀ
            e[(qo, qo)] = c;
            e[(qo, qi)] = b * d;
            e[(qi, 0)] = d * (1.0 - d); // δ(1-δ)Γᵀ
            for l2 in 0..k {
                e[(qi, n + l2)] = b * (1.0 + d) - if l2 == l { b } else { 0.0 };
            }
            e[(qi, qi)] = c;
        }
        assert!((got - e).abs().max() < 1e-15);
    }

    #[test]
    fn nonnegativity_flags() {
        let g = star(5).unwrap();
        assert!(build_m_double_prime(&g, p(0.3, 0.6)).nonnegative());
        assert!(!build_m_double_prime(&g, p(0.5, 0.6)).nonnegative());
        assert!(!build_m_prime(&g, p(0.1, 0.5)).nonnegative());
        assert!(build_m_prime(&g, p(0.0, 0.5)).nonnegative());
    }

    #[test]
    fn sign_condition_trivial_without_infection() {
        let g = cycle(6).unwrap();
        let mp = build_m_prime(&g, p(0.0, 0.4));
        let r = check_sign_condition(&mp, &SignCheckOptions::default()).unwrap();
        assert!(r.status.holds());
        assert!(r.holds.iter().all(|&h| h));
        assert_eq!(r.first_failure, None);
    }

    #[test]
    fn sign_condition_rejects_bad_input() {
        let g = cycle(6).unwrap();
        let mp = build_m_prime(&g, p(0.1, 0.4));
        let opts = SignCheckOptions { horizon: 0, ..Default::default() };
        assert!(check_sign_condition(&mp, &opts).is_err());
        let m = build_m(&g, p(0.1, 0.4));
        assert!(check_sign_condition(&m, &SignCheckOptions::default()).is_err());
    }

    #[test]
    fn sign_propagation_detects_failure() {
        // [1 1 0] A = [1, 1, 1], then [1 1 0] A^2 picks up the -3 entry
        let a = nalgebra::DMatrix::from_row_slice(3, 3, &[
            0.5, 0.5, 0.5, //
            0.5, 0.5, 0.5, //
            0.0, 0.0, -3.0,
        ]);
        let r = sign_propagation(&a, 2, &SignCheckOptions { horizon: 50, ..Default::default() }).unwrap();
        let mut v = nalgebra::RowDVector::from_row_slice(&[1.0, 1.0, 0.0]);
        let mut first = None;
        for t in 1..=50 {
            v = &v * &a;
            let scale = v.amax();
            if v.iter().any(|&x| x < -1e-12 * scale) {
                first = Some(t);
                break;
            }
        }
        assert_eq!(first, Some(2));
        assert_eq!(r.first_failure, first);
        assert_eq!(r.status, SignStatus::FailsAt { t: 2 });
        assert_eq!(r.holds, vec![true, false]);
    }

    #[test]
    fn sign_condition_on_m_prime_matches_direct_powering() {
        let g = clique(4).unwrap();
        let mp = build_m_prime(&g, p(0.6, 0.1));
        let opts = SignCheckOptions { horizon: 40, convergence_tol: 0.0, ..Default::default() };
        let r = check_sign_condition(&mp, &opts).unwrap();
        let dense = mp.to_sparse().dense();
        let mut v = nalgebra::RowDVector::from_fn(dense.nrows(), |_, c| if c < 4 { 1.0 } else { 0.0 });
        for t in 1..=40 {
            v = &v * &dense;
            let scale = v.amax();
            v /= scale;
            assert_eq!(r.holds[t - 1], v.iter().all(|&x| x >= -1e-12), "t = {t}");
        }
    }
}
