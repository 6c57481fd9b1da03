//! Sampled SIS trajectories.
//!
//! Updates are synchronous. In the default mode every node consumes exactly
//! one uniform draw per step, in node order: an infected node recovers when
//! the draw is below `δ`, a healthy node with `m` infected neighbours is
//! infected when it is below `1 − (1−β)^m`. In per-edge mode a healthy node
//! instead draws once per infected neighbour (neighbour order) and is infected
//! if any draw is below `β`. Trajectory `j` uses
//! `SplitMix64::for_stream(seed, j)`. A trajectory that reaches the all-healthy
//! state stops drawing.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::EpidemicParams;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::SplitMix64;

pub const DEFAULT_SEED: u64 = 0x5151_2013;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialCondition {
    AllInfected,
    Single(usize),
    Nodes(Vec<usize>),
}

impl InitialCondition {
    pub fn state(&self, n: usize) -> Result<Vec<bool>> {
        let mut x = vec![false; n];
        match self {
            InitialCondition::AllInfected => x.iter_mut().for_each(|v| *v = true),
            InitialCondition::Single(i) => *x.get_mut(*i).ok_or_else(|| bad_node(*i, n))? = true,
            InitialCondition::Nodes(nodes) => {
                for &i in nodes {
                    *x.get_mut(i).ok_or_else(|| bad_node(i, n))? = true;
                }
            }
        }
        Ok(x)
    }
}

fn bad_node(i: usize, n: usize) -> Error {
    Error::InvalidParameter(format!("initial node {i} outside 0..{n}"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_traj: usize,
    pub t_max: usize,
    pub seed: u64,
    pub init: InitialCondition,
    /// Per-edge infection draws instead of one draw per node.
    pub per_edge: bool,
    /// Times at which per-node infection frequencies are recorded.
    pub track_times: Vec<usize>,
}

impl McConfig {
    pub fn new(n_traj: usize, t_max: usize) -> Self {
        Self {
            n_traj,
            t_max,
            seed: DEFAULT_SEED,
            init: InitialCondition::AllInfected,
            per_edge: false,
            track_times: Vec::new(),
        }
    }
}

/// One synchronous step. Returns the number of infected nodes afterwards.
struct Stepper<'a> {
    g: &'a Graph,
    beta: f64,
    delta: f64,
    /// `1 − (1−β)^m` by `m`
    infect: Vec<f64>,
    per_edge: bool,
    counts: Vec<u32>,
}

impl<'a> Stepper<'a> {
    fn new(g: &'a Graph, params: EpidemicParams, per_edge: bool) -> Self {
        let max_deg = (0..g.node_count()).map(|i| g.degree(i)).max().unwrap_or(0);
        let b = params.beta();
        Self {
            g,
            beta: b,
            delta: params.delta(),
            infect: (0..=max_deg).map(|m| 1.0 - (1.0 - b).powi(m as i32)).collect(),
            per_edge,
            counts: vec![0; g.node_count()],
        }
    }

    fn step(&mut self, x: &mut [bool], rng: &mut SplitMix64) -> usize {
        self.counts.iter_mut().for_each(|c| *c = 0);
        for (i, &xi) in x.iter().enumerate() {
            if xi {
                for &j in self.g.neighbors(i) {
                    self.counts[j] += 1;
                }
            }
        }
        let mut infected = 0;
        for i in 0..x.len() {
            let next = if x[i] {
                rng.next_f64() >= self.delta
            } else if self.per_edge {
                let mut hit = false;
                for _ in 0..self.counts[i] {
                    hit |= rng.next_f64() < self.beta;
                }
                hit
            } else {
                rng.next_f64() < self.infect[self.counts[i] as usize]
            };
            x[i] = next;
            infected += next as usize;
        }
        infected
    }
}

fn check_params(g: &Graph, cfg: &McConfig) -> Result<Vec<bool>> {
    if cfg.n_traj < 1 {
        return Err(Error::InvalidParameter("need at least one trajectory".into()));
    }
    if g.node_count() == 0 {
        return Err(Error::InvalidGraph("empty graph".into()));
    }
    cfg.init.state(g.node_count())
}

/// States at `t = 0..=t_max` for one seed.
pub fn simulate_trajectory(
    g: &Graph,
    params: EpidemicParams,
    init: &InitialCondition,
    t_max: usize,
    seed: u64,
) -> Result<Vec<Vec<bool>>> {
    let mut x = init.state(g.node_count())?;
    let mut rng = SplitMix64::new(seed);
    let mut stepper = Stepper::new(g, params, false);
    let mut out = Vec::with_capacity(t_max + 1);
    out.push(x.clone());
    let mut alive = x.iter().any(|&v| v);
    for _ in 0..t_max {
        if alive {
            alive = stepper.step(&mut x, &mut rng) > 0;
        }
        out.push(x.clone());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub n: usize,
    pub n_traj: usize,
    /// Mean infected fraction at `t = 0..=t_max`.
    pub mean: Vec<f64>,
    /// Standard error of the mean infected fraction.
    pub stderr: Vec<f64>,
    /// Trajectories with at least one infected node.
    pub alive: Vec<usize>,
    /// `(t, per-node infection frequency)` for each tracked time.
    pub node_frequency: Vec<(usize, Vec<f64>)>,
}

impl McEstimate {
    pub fn absorbed(&self) -> usize {
        self.n_traj - self.alive.last().copied().unwrap_or(0)
    }

    /// Binomial standard error of a frequency.
    pub fn frequency_stderr(&self, f: f64) -> f64 {
        (f * (1.0 - f) / self.n_traj as f64).sqrt()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,mean_infected_fraction,stderr,n_alive_trajectories")?;
        for t in 0..self.mean.len() {
            writeln!(w, "{t},{},{},{}", self.mean[t], self.stderr[t], self.alive[t])?;
        }
        Ok(())
    }
}

#[derive(Clone)]
struct Tally {
    sum: Vec<u64>,
    sum_sq: Vec<u64>,
    alive: Vec<u64>,
    nodes: Vec<Vec<u64>>,
}

impl Tally {
    fn new(len: usize, tracked: usize, n: usize) -> Self {
        Self {
            sum: vec![0; len],
            sum_sq: vec![0; len],
            alive: vec![0; len],
            nodes: vec![vec![0; n]; tracked],
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.sum_sq.iter_mut().zip(&other.sum_sq) {
            *a += b;
        }
        for (a, b) in self.alive.iter_mut().zip(&other.alive) {
            *a += b;
        }
        for (row, orow) in self.nodes.iter_mut().zip(&other.nodes) {
            for (a, b) in row.iter_mut().zip(orow) {
                *a += b;
            }
        }
        self
    }
}

/// Runs `cfg.n_traj` trajectories in parallel. Counts are aggregated as
/// integers, so the result does not depend on scheduling.
pub fn estimate(g: &Graph, params: EpidemicParams, cfg: &McConfig) -> Result<McEstimate> {
    let init = check_params(g, cfg)?;
    let n = g.node_count();
    let len = cfg.t_max + 1;
    let tracked: Vec<usize> = cfg.track_times.iter().copied().filter(|&t| t <= cfg.t_max).collect();
    let k0 = init.iter().filter(|&&v| v).count() as u64;

    let tally = (0..cfg.n_traj as u64)
        .into_par_iter()
        .fold(
            || (Tally::new(len, tracked.len(), n), Stepper::new(g, params, cfg.per_edge), init.clone()),
            |(mut tally, mut stepper, mut x), j| {
                x.copy_from_slice(&init);
                let mut rng = SplitMix64::for_stream(cfg.seed, j);
                let mut k = k0;
                for t in 0..len {
                    if t > 0 && k > 0 {
                        k = stepper.step(&mut x, &mut rng) as u64;
                    }
                    tally.sum[t] += k;
                    tally.sum_sq[t] += k * k;
                    tally.alive[t] += (k > 0) as u64;
                    for (slot, _) in tracked.iter().enumerate().filter(|(_, tt)| **tt == t) {
                        for (c, &xi) in tally.nodes[slot].iter_mut().zip(&x) {
                            *c += xi as u64;
                        }
                    }
                }
                (tally, stepper, x)
            },
        )
        .map(|(tally, _, _)| tally)
        .reduce(|| Tally::new(len, tracked.len(), n), Tally::merge);

    let traj = cfg.n_traj as f64;
    let nf = n as f64;
    let mut mean = Vec::with_capacity(len);
    let mut stderr = Vec::with_capacity(len);
    for t in 0..len {
        let m = tally.sum[t] as f64 / (traj * nf);
        mean.push(m);
        let se = if cfg.n_traj > 1 {
            let second = tally.sum_sq[t] as f64 / (traj * nf * nf);
            let var = ((second - m * m) * traj / (traj - 1.0)).max(0.0);
            (var / traj).sqrt()
        } else {
            0.0
        };
        stderr.push(se);
    }
    Ok(McEstimate {
        n,
        n_traj: cfg.n_traj,
        mean,
        stderr,
        alive: tally.alive.iter().map(|&a| a as usize).collect(),
        node_frequency: tracked
            .iter()
            .zip(&tally.nodes)
            .map(|(&t, row)| (t, row.iter().map(|&c| c as f64 / traj).collect()))
            .collect(),
    })
}
