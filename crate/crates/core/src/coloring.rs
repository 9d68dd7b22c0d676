//! Distributed channel allocation.
//!
//! MGs screen the channels on which their solo sharing raises the sum
//! throughput, then color an interference graph whose colors are channels.
//! The coloring runs as a synchronous node program; an outer loop adapts the
//! graph threshold until the coloring succeeds and spreads over the
//! available channels.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::channel::GainTable;
use crate::config::{ColorChoice, SimConfig};
use crate::error::Result;
use crate::metrics::{delta_rate, objective_and_constraints, Allocation};
use crate::rng::SimRng;
use crate::rounds::{NodeProgram, SyncNetwork};
use crate::scenario::CellScenario;

/// Per-MG channels with a positive solo throughput delta.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateChannelSets {
    /// Ascending channel indices per MG.
    pub sets: Vec<Vec<usize>>,
    /// `deltas[g][k]`: solo-probe throughput delta, bit/s.
    pub deltas: Vec<Vec<f64>>,
}

impl CandidateChannelSets {
    /// Builds sets from explicit deltas (`k ∈ C_g` iff `deltas[g][k] > 0`).
    pub fn from_deltas(deltas: Vec<Vec<f64>>) -> Self {
        let sets = deltas
            .iter()
            .map(|row| (0..row.len()).filter(|&k| row[k] > 0.0).collect())
            .collect();
        Self { sets, deltas }
    }

    pub fn num_mgs(&self) -> usize {
        self.sets.len()
    }

    pub fn is_excluded(&self, g: usize) -> bool {
        self.sets[g].is_empty()
    }

    pub fn num_excluded(&self) -> usize {
        self.sets.iter().filter(|s| s.is_empty()).count()
    }

    pub fn contains(&self, g: usize, k: usize) -> bool {
        self.sets[g].binary_search(&k).is_ok()
    }

    pub fn intersects(&self, g: usize, j: usize) -> bool {
        self.sets[g].iter().any(|k| self.contains(j, *k))
    }

    /// Number of channels appearing in at least one set.
    pub fn distinct_channels(&self) -> usize {
        let mut all: Vec<usize> = self.sets.iter().flatten().copied().collect();
        all.sort_unstable();
        all.dedup();
        all.len()
    }
}

/// Screens every (MG, channel) pair with the MG alone on the channel at full power.
pub fn candidate_sets(scenario: &CellScenario, gains: &GainTable, config: &SimConfig) -> CandidateChannelSets {
    let probe = config.p_g_max_mw();
    let deltas = (0..scenario.num_mgs())
        .map(|g| {
            (0..scenario.num_cus())
                .map(|k| delta_rate(g, k, scenario, gains, config, probe))
                .collect()
        })
        .collect();
    CandidateChannelSets::from_deltas(deltas)
}

/// `cross[g][j]`: fading-free gain from MG transmitter `g` to the worst receiver of group `j`.
pub fn cross_gains(gains: &GainTable) -> Vec<Vec<f64>> {
    let n = gains.num_mgs();
    let worst: Vec<usize> = (0..n).map(|j| gains.worst_receiver(j)).collect();
    (0..n)
        .map(|g| (0..n).map(|j| gains.ls_gr[g][j][worst[j]]).collect())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InterferenceGraph {
    pub adjacency: Vec<Vec<bool>>,
    pub neighbors: Vec<Vec<usize>>,
    pub gamma_th: f64,
}

impl InterferenceGraph {
    pub fn from_adjacency(adjacency: Vec<Vec<bool>>, gamma_th: f64) -> Self {
        let neighbors = adjacency
            .iter()
            .map(|row| (0..row.len()).filter(|&j| row[j]).collect())
            .collect();
        Self {
            adjacency,
            neighbors,
            gamma_th,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }
}

/// Edge rule over precomputed cross gains. Excluded MGs stay isolated.
pub fn interference_graph_from_cross(candidates: &CandidateChannelSets, cross: &[Vec<f64>], gamma_th: f64) -> InterferenceGraph {
    let n = candidates.num_mgs();
    let mut adjacency = vec![vec![false; n]; n];
    for g in 0..n {
        if candidates.is_excluded(g) {
            continue;
        }
        for j in (g + 1)..n {
            if candidates.is_excluded(j) {
                continue;
            }
            let edge = !candidates.intersects(g, j) || (cross[g][j] - cross[j][g]).abs() < gamma_th;
            adjacency[g][j] = edge;
            adjacency[j][g] = edge;
        }
    }
    InterferenceGraph::from_adjacency(adjacency, gamma_th)
}

/// Interference matrix at threshold `gamma_th`: an edge joins two MGs whose
/// candidate sets are disjoint, or whose sets intersect and whose cross
/// gains differ by less than `gamma_th`.
pub fn build_interference_graph(candidates: &CandidateChannelSets, gains: &GainTable, gamma_th: f64) -> InterferenceGraph {
    interference_graph_from_cross(candidates, &cross_gains(gains), gamma_th)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColoringState {
    pub color: Vec<Option<usize>>,
    pub palette: Vec<Vec<usize>>,
    pub rounds: usize,
    /// Set when a non-excluded node ended uncolored or the round cap was hit.
    pub flag: bool,
    pub colors_unique: usize,
}

#[derive(Debug, Clone)]
struct ColorMsg {
    color: Option<usize>,
    /// Picked this round (as opposed to held from an earlier round).
    fresh: bool,
    candidate_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Pick,
    Resolve,
}

#[derive(Debug)]
struct ColoringNode {
    id: usize,
    candidate_count: usize,
    palette: Vec<usize>,
    deltas: Vec<f64>,
    color: Option<usize>,
    fresh: bool,
    phase: Phase,
    choice: ColorChoice,
    rng: SimRng,
}

impl ColoringNode {
    fn pick(&mut self) -> usize {
        match self.choice {
            ColorChoice::Random => *self.palette.choose(&mut self.rng).expect("nonempty palette"),
            ColorChoice::Greedy => *self
                .palette
                .iter()
                .max_by(|&&a, &&b| self.deltas[a].total_cmp(&self.deltas[b]).then(b.cmp(&a)))
                .expect("nonempty palette"),
        }
    }

    fn loses_to(&self, other: usize, other_count: usize) -> bool {
        (self.candidate_count, self.id) > (other_count, other)
    }

    fn msg(&self) -> ColorMsg {
        ColorMsg {
            color: self.color,
            fresh: self.fresh,
            candidate_count: self.candidate_count,
        }
    }
}

impl NodeProgram for ColoringNode {
    type Msg = ColorMsg;

    fn step(&mut self, inbox: &[(usize, ColorMsg)]) -> Option<ColorMsg> {
        match self.phase {
            Phase::Pick => {
                if self.color.is_none() {
                    self.palette
                        .retain(|c| !inbox.iter().any(|(_, m)| m.color == Some(*c)));
                    if !self.palette.is_empty() {
                        self.color = Some(self.pick());
                        self.fresh = true;
                    }
                }
                self.phase = Phase::Resolve;
            }
            Phase::Resolve => {
                if self.fresh {
                    let conflict = inbox.iter().any(|(j, m)| {
                        m.color == self.color && (!m.fresh || self.loses_to(*j, m.candidate_count))
                    });
                    if conflict {
                        self.color = None;
                    }
                }
                self.fresh = false;
                self.phase = Phase::Pick;
            }
        }
        Some(self.msg())
    }

    fn is_quiescent(&self) -> bool {
        self.phase == Phase::Pick && (self.color.is_some() || self.palette.is_empty())
    }
}

/// Synchronous distributed list coloring.
///
/// Each round: uncolored nodes pick a palette color, neighbors exchange
/// colors, the endpoint of a monochromatic edge with the larger original
/// candidate set (then larger index) gives its color up, colors are
/// re-announced and uncolored nodes drop their neighbors' colors from their
/// palettes.
pub fn distributed_coloring<R: Rng>(
    graph: &InterferenceGraph,
    candidates: &CandidateChannelSets,
    rng: &mut R,
    max_rounds: usize,
    choice: ColorChoice,
) -> ColoringState {
    let nodes: Vec<ColoringNode> = (0..graph.num_nodes())
        .map(|g| ColoringNode {
            id: g,
            candidate_count: candidates.sets[g].len(),
            palette: candidates.sets[g].clone(),
            deltas: candidates.deltas[g].clone(),
            color: None,
            fresh: false,
            phase: Phase::Pick,
            choice,
            rng: SimRng::seed_from_u64(rng.random()),
        })
        .collect();
    let mut net = SyncNetwork::new(nodes, graph.neighbors.clone());
    let converged = net.run(2 * max_rounds);
    let rounds = net.steps().div_ceil(2);
    let nodes = net.into_nodes();

    let color: Vec<Option<usize>> = nodes.iter().map(|n| n.color).collect();
    let uncolored = (0..color.len()).any(|g| !candidates.is_excluded(g) && color[g].is_none());
    let mut used: Vec<usize> = color.iter().flatten().copied().collect();
    used.sort_unstable();
    used.dedup();
    ColoringState {
        palette: nodes.into_iter().map(|n| n.palette).collect(),
        color,
        rounds,
        flag: uncolored || !converged,
        colors_unique: used.len(),
    }
}

/// One outer iteration of the adaptive threshold loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuterIterRecord {
    pub iter: usize,
    pub gamma_th: f64,
    pub flag: u8,
    pub colors_unique: usize,
    pub edges: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelAllocation {
    pub channels: Vec<Option<usize>>,
    pub candidates: CandidateChannelSets,
    pub trace: Vec<OuterIterRecord>,
    /// Coloring rounds summed over all outer iterations.
    pub color_rounds: usize,
    /// Outer iteration whose coloring was returned.
    pub best_iter: usize,
    /// Objective of the returned coloring with every assigned MG at full power.
    pub probe_objective: f64,
}

impl ChannelAllocation {
    pub fn outer_iters(&self) -> usize {
        self.trace.len()
    }

    /// Trace as JSON lines.
    pub fn trace_jsonl(&self) -> String {
        self.trace
            .iter()
            .map(|r| serde_json::to_string(r).expect("trace record serializes") + "\n")
            .collect()
    }
}

/// Number of distinct colors the outer loop aims for.
pub fn color_target(candidates: &CandidateChannelSets, n_c: usize) -> usize {
    let active = candidates.num_mgs() - candidates.num_excluded();
    n_c.min(candidates.distinct_channels()).min(active)
}

/// Adaptive-threshold channel allocation with candidate screening included.
pub fn allocate_channels<R: Rng>(
    scenario: &CellScenario,
    gains: &GainTable,
    config: &SimConfig,
    rng: &mut R,
) -> Result<ChannelAllocation> {
    let candidates = candidate_sets(scenario, gains, config);
    allocate_channels_with(scenario, gains, config, candidates, rng)
}

/// Adaptive-threshold loop over fixed candidate sets.
///
/// A failed coloring lowers the threshold by `delta` (floored at 0); a
/// successful one that uses fewer colors than the target raises it. The
/// best successful coloring (by full-power objective) is returned. The last
/// permitted iteration runs at threshold 0 if nothing has succeeded yet,
/// where only disjointness edges remain and coloring cannot fail.
pub fn allocate_channels_with<R: Rng>(
    scenario: &CellScenario,
    gains: &GainTable,
    config: &SimConfig,
    candidates: CandidateChannelSets,
    rng: &mut R,
) -> Result<ChannelAllocation> {
    let n_c = scenario.num_cus();
    let n_p = scenario.num_mgs();
    let cross = cross_gains(gains);
    let target = color_target(&candidates, n_c);
    let max_outer = config.max_outer_iters as usize;
    let p_max = config.p_g_max_mw();

    let mut gamma = config.gamma_th_init;
    let mut trace = Vec::new();
    let mut color_rounds = 0;
    let mut best: Option<(f64, usize, Vec<Option<usize>>)> = None;

    for iter in 0..max_outer {
        if iter + 1 == max_outer && best.is_none() {
            gamma = 0.0;
        }
        let graph = interference_graph_from_cross(&candidates, &cross, gamma);
        let state = distributed_coloring(&graph, &candidates, rng, config.max_color_rounds as usize, config.color_choice);
        color_rounds += state.rounds;
        trace.push(OuterIterRecord {
            iter,
            gamma_th: gamma,
            flag: state.flag as u8,
            colors_unique: state.colors_unique,
            edges: graph.edge_count(),
        });

        if !state.flag {
            let powers = state.color.iter().map(|c| if c.is_some() { p_max } else { 0.0 }).collect();
            let alloc = Allocation::from_channels(&state.color, powers, n_c, config);
            let objective = objective_and_constraints(scenario, gains, &alloc, config)?.objective;
            if best.as_ref().is_none_or(|(b, _, _)| objective > *b) {
                best = Some((objective, iter, state.color.clone()));
            }
            if state.colors_unique >= target {
                break;
            }
            gamma += config.delta;
        } else {
            gamma = (gamma - config.delta).max(0.0);
        }
    }

    let (probe_objective, best_iter, channels) = best.expect("threshold-zero coloring always succeeds");
    debug_assert_eq!(channels.len(), n_p);
    Ok(ChannelAllocation {
        channels,
        candidates,
        trace,
        color_rounds,
        best_iter,
        probe_objective,
    })
}
