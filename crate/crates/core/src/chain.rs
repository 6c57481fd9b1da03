//! The exact SIS Markov chain on `2^n` network states.
//!
//! State `X` is a bitmask with bit `i` set when node `i` is infected. One
//! step updates every node independently given `X`: an infected node
//! recovers with probability `δ`, a healthy node with `m` infected
//! neighbours stays healthy with probability `(1−β)^m`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::bounds::EpidemicParams;
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Default cap on the node count for exact evolution (16384 states).
pub const DEFAULT_STATE_CAP: usize = 14;

/// Hard limit from memory: a distribution over `2^30` states is 8 GiB.
const MAX_BITS: usize = 30;

const CLAMP: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NetworkState(pub u64);

impl NetworkState {
    pub const HEALTHY: NetworkState = NetworkState(0);

    pub fn all_infected(n: usize) -> Self {
        NetworkState(if n >= 64 { u64::MAX } else { (1u64 << n) - 1 })
    }

    pub fn single(i: usize) -> Self {
        NetworkState(1u64 << i)
    }

    #[inline]
    pub fn is_infected(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn infected_count(self) -> u32 {
        self.0.count_ones()
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Probability vector over the `2^n` states.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainDistribution {
    n: usize,
    probs: Vec<f64>,
}

impl ChainDistribution {
    fn check_bits(n: usize) -> Result<()> {
        if n > MAX_BITS {
            return Err(Error::DimensionTooLarge {
                what: "exact chain state space (nodes)",
                dim: n,
                limit: MAX_BITS,
            });
        }
        Ok(())
    }

    pub fn point_mass(n: usize, state: NetworkState) -> Result<Self> {
        Self::check_bits(n)?;
        if state.0 >> n != 0 {
            return Err(Error::InvalidParameter(format!("state {:#x} has bits beyond n = {n}", state.0)));
        }
        let mut probs = vec![0.0; 1 << n];
        probs[state.index()] = 1.0;
        Ok(Self { n, probs })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::check_bits(n)?;
        let len = 1usize << n;
        Ok(Self {
            n,
            probs: vec![1.0 / len as f64; len],
        })
    }

    /// Validates length, sign (clamping tiny negatives) and total mass.
    pub fn from_vec(n: usize, mut probs: Vec<f64>) -> Result<Self> {
        Self::check_bits(n)?;
        if probs.len() != 1 << n {
            return Err(Error::InvalidSize(format!(
                "distribution over {n} nodes needs {} entries, got {}",
                1usize << n,
                probs.len()
            )));
        }
        clamp_negatives(&mut probs)?;
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("distribution sums to {total}")));
        }
        Ok(Self { n, probs })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, s: NetworkState) -> f64 {
        self.probs[s.index()]
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// `state_bitmask,probability`, one row per state.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "state_bitmask,probability")?;
        for (s, p) in self.probs.iter().enumerate() {
            writeln!(w, "{s},{p:e}")?;
        }
        Ok(())
    }
}

fn clamp_negatives(v: &mut [f64]) -> Result<()> {
    for (k, x) in v.iter_mut().enumerate() {
        if *x < 0.0 {
            if *x < -CLAMP {
                return Err(Error::InternalConsistency(format!("probability {x:e} at state {k}")));
            }
            *x = 0.0;
        }
    }
    Ok(())
}

/// Marginals and pairwise terms of a distribution.
///
/// `p_e[e]` is `P(X_i = 1, X_j = 1)` for the `e`-th edge `(i, j)`, `i < j`.
/// `q_e` follows the directed edge layout: entry `e` is `q_ij` and entry
/// `m + e` is `q_ji`, where `q_ij = P(X_i = 0, X_j = 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactMoments {
    pub p: Vec<f64>,
    pub p_e: Vec<f64>,
    pub q_e: Vec<f64>,
}

impl ExactMoments {
    /// Moments of the point mass on `state`.
    pub fn of_state(g: &Graph, state: NetworkState) -> Self {
        let x = |i| if state.is_infected(i) { 1.0 } else { 0.0 };
        let n = g.node_count();
        let m = g.edge_count();
        let mut q_e = vec![0.0; 2 * m];
        let mut p_e = vec![0.0; m];
        for (e, &(i, j)) in g.edges().iter().enumerate() {
            p_e[e] = x(i) * x(j);
            q_e[e] = (1.0 - x(i)) * x(j);
            q_e[m + e] = (1.0 - x(j)) * x(i);
        }
        Self {
            p: (0..n).map(x).collect(),
            p_e,
            q_e,
        }
    }

    pub fn all_infected(g: &Graph) -> Self {
        Self::of_state(g, NetworkState::all_infected(g.node_count()))
    }

    pub fn total_infected(&self) -> f64 {
        self.p.iter().sum()
    }
}

/// The chain for one graph and parameter pair.
#[derive(Debug, Clone, Copy)]
pub struct ExactChain<'g> {
    graph: &'g Graph,
    params: EpidemicParams,
}

impl<'g> ExactChain<'g> {
    pub fn new(graph: &'g Graph, params: EpidemicParams) -> Result<Self> {
        Self::with_cap(graph, params, DEFAULT_STATE_CAP)
    }

    pub fn with_cap(graph: &'g Graph, params: EpidemicParams, cap: usize) -> Result<Self> {
        let n = graph.node_count();
        let cap = cap.min(MAX_BITS);
        if n > cap {
            return Err(Error::DimensionTooLarge {
                what: "exact chain (nodes)",
                dim: n,
                limit: cap,
            });
        }
        Ok(Self { graph, params })
    }

    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    /// Infection probability of each node at the next step, given `x`.
    pub fn node_probabilities(&self, x: NetworkState, out: &mut [f64]) {
        let (b, d) = (self.params.beta(), self.params.delta());
        for (i, o) in out.iter_mut().enumerate() {
            *o = if x.is_infected(i) {
                1.0 - d
            } else {
                let m = self.graph.neighbors(i).iter().filter(|&&j| x.is_infected(j)).count();
                1.0 - (1.0 - b).powi(m as i32)
            };
        }
    }

    /// `dist · S`, expanding each source state's product distribution only
    /// over the nodes whose next value is random.
    pub fn step(&self, dist: &ChainDistribution) -> Result<ChainDistribution> {
        let n = self.graph.node_count();
        if dist.n != n {
            return Err(Error::InvalidSize(format!(
                "distribution over {} nodes, graph has {n}",
                dist.n
            )));
        }
        let mut out = vec![0.0; dist.probs.len()];
        let mut probs = vec![0.0; n];
        let mut states: Vec<u64> = Vec::with_capacity(dist.probs.len());
        let mut weights: Vec<f64> = Vec::with_capacity(dist.probs.len());
        for (src, &w) in dist.probs.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            self.node_probabilities(NetworkState(src as u64), &mut probs);
            let mut fixed = 0u64;
            states.clear();
            weights.clear();
            states.push(0);
            weights.push(w);
            for (i, &pi) in probs.iter().enumerate() {
                if pi == 0.0 {
                    continue;
                }
                if pi == 1.0 {
                    fixed |= 1 << i;
                    continue;
                }
                let len = states.len();
                for k in 0..len {
                    let wk = weights[k];
                    states.push(states[k] | 1 << i);
                    weights.push(wk * pi);
                    weights[k] = wk * (1.0 - pi);
                }
            }
            for (&s, &wk) in states.iter().zip(&weights) {
                out[(s | fixed) as usize] += wk;
            }
        }
        clamp_negatives(&mut out)?;
        let total: f64 = out.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InternalConsistency(format!("transition output sums to {total}")));
        }
        Ok(ChainDistribution { n, probs: out })
    }

    /// Distributions at `t = 0..=t_max`.
    pub fn evolve(&self, init: ChainDistribution, t_max: usize) -> Result<Vec<ChainDistribution>> {
        let mut out = Vec::with_capacity(t_max + 1);
        out.push(init);
        for _ in 0..t_max {
            let next = self.step(out.last().expect("nonempty"))?;
            out.push(next);
        }
        Ok(out)
    }

    /// First `t` at which the chain started from all-infected is within
    /// `epsilon` of the absorbing state.
    pub fn mixing_time(&self, epsilon: f64, t_max: usize) -> Result<MixingOutcome> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidParameter(format!("epsilon = {epsilon} must lie in (0, 1)")));
        }
        let n = self.graph.node_count();
        let mut dist = ChainDistribution::point_mass(n, NetworkState::all_infected(n))?;
        for t in 0..=t_max {
            if tv_from_stationary(&dist) <= epsilon {
                return Ok(MixingOutcome::Reached(t));
            }
            if t < t_max {
                dist = self.step(&dist)?;
            }
        }
        Ok(MixingOutcome::Exceeded(t_max))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixingOutcome {
    Reached(usize),
    Exceeded(usize),
}

impl MixingOutcome {
    pub fn time(self) -> Option<usize> {
        match self {
            MixingOutcome::Reached(t) => Some(t),
            MixingOutcome::Exceeded(_) => None,
        }
    }
}

pub fn transition_apply(g: &Graph, params: EpidemicParams, dist: &ChainDistribution) -> Result<ChainDistribution> {
    ExactChain::new(g, params)?.step(dist)
}

pub fn mixing_time(g: &Graph, params: EpidemicParams, epsilon: f64, t_max: usize) -> Result<MixingOutcome> {
    ExactChain::new(g, params)?.mixing_time(epsilon, t_max)
}

pub fn exact_moments(dist: &ChainDistribution, g: &Graph) -> Result<ExactMoments> {
    let n = g.node_count();
    if dist.n != n {
        return Err(Error::InvalidSize(format!(
            "distribution over {} nodes, graph has {n}",
            dist.n
        )));
    }
    let m = g.edge_count();
    let mut p = vec![0.0; n];
    let mut p_e = vec![0.0; m];
    let mut q_e = vec![0.0; 2 * m];
    for (s, &w) in dist.probs.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let x = NetworkState(s as u64);
        for (i, pi) in p.iter_mut().enumerate() {
            if x.is_infected(i) {
                *pi += w;
            }
        }
        for (e, &(i, j)) in g.edges().iter().enumerate() {
            match (x.is_infected(i), x.is_infected(j)) {
                (true, true) => p_e[e] += w,
                (false, true) => q_e[e] += w,
                (true, false) => q_e[m + e] += w,
                (false, false) => {}
            }
        }
    }
    Ok(ExactMoments { p, p_e, q_e })
}

/// Total variation distance to the point mass on the all-healthy state.
pub fn tv_from_stationary(dist: &ChainDistribution) -> f64 {
    (1.0 - dist.probs[0]).max(0.0)
}
