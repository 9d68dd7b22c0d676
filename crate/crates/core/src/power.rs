//! Distributed per-channel power allocation.
//!
//! Co-channel MGs draw random powers in a sliding dBm window, reorder them
//! so that MGs with stronger links to the base station hold lower powers,
//! and check their aggregate interference at the base station against the
//! CU's budget. Over-budget channels revoke the powers of MGs above their
//! equal share and retry one window step lower.

use std::cmp::Ordering;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::GainTable;
use crate::config::SimConfig;
use crate::rounds::{NodeProgram, SyncNetwork};
use crate::units::dbm_to_linear;

/// Dynamic range of the power window below the maximum MG power. Once the
/// window has slid this far it collapses to zero power.
pub const POWER_RANGE_DB: f64 = 30.0;

/// Largest aggregate MG interference at the base station (mW) that keeps
/// CU `k` at its SINR threshold.
pub fn interference_budget(k: usize, gains: &GainTable, config: &SimConfig) -> f64 {
    (config.p_c_max_mw() * gains.h_cb[k] / config.gamma_c_th() - config.noise_mw()).max(0.0)
}

/// Per-channel interference budgets and their per-MG shares.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InterferenceBudget {
    pub cu: Vec<f64>,
}

impl InterferenceBudget {
    pub fn new(gains: &GainTable, config: &SimConfig) -> Self {
        Self {
            cu: (0..gains.num_channels())
                .map(|k| interference_budget(k, gains, config))
                .collect(),
        }
    }

    /// Equal share of channel `k`'s budget among `sharing` MGs.
    pub fn per_mg(&self, k: usize, sharing: usize) -> f64 {
        if sharing == 0 {
            self.cu[k]
        } else {
            self.cu[k] / sharing as f64
        }
    }
}

/// Window iterations after which the power window has collapsed to zero.
pub fn window_iteration_bound(beta_db: f64) -> usize {
    (POWER_RANGE_DB / beta_db).ceil() as usize + 1
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Token {
    home: usize,
    gain: f64,
}

impl Token {
    /// Order of the sorted line: strongest base-station gain first.
    fn precedes(&self, other: &Token) -> bool {
        match other.gain.total_cmp(&self.gain) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => self.home < other.home,
        }
    }
}

#[derive(Debug, Clone)]
struct Held {
    token: Token,
    power: f64,
}

/// One peer on the line of co-channel MGs running odd-even transposition.
///
/// Phases `0..n` sort tokens by gain (descending) and, independently, the
/// power values ascending, so position `i` pairs the i-th strongest link
/// with the i-th lowest power. Phases `n..2n` carry each power back home by
/// sorting tokens on their home position.
#[derive(Debug)]
struct TranspositionPeer {
    pos: usize,
    n: usize,
    held: Held,
    phase: usize,
    started: bool,
    exchanges: usize,
}

impl TranspositionPeer {
    fn partner(&self, phase: usize) -> Option<(usize, bool)> {
        if self.pos % 2 == phase % 2 {
            (self.pos + 1 < self.n).then_some((self.pos + 1, true))
        } else {
            self.pos.checked_sub(1).map(|p| (p, false))
        }
    }

    fn exchange(&mut self, theirs: &Held, is_left: bool) {
        let mine = self.held.clone();
        let next = if self.phase < self.n {
            let token_first = mine.token.precedes(&theirs.token);
            let power_first = mine.power.total_cmp(&theirs.power) != Ordering::Greater;
            let token = if token_first == is_left { mine.token } else { theirs.token };
            let power = if power_first == is_left { mine.power } else { theirs.power };
            Held { token, power }
        } else {
            let first = mine.token.home < theirs.token.home;
            if first == is_left {
                mine
            } else {
                theirs.clone()
            }
        };
        let changed = next.token != self.held.token || next.power.to_bits() != self.held.power.to_bits();
        if changed && is_left {
            self.exchanges += 1;
        }
        self.held = next;
    }
}

impl NodeProgram for TranspositionPeer {
    type Msg = Held;

    fn step(&mut self, inbox: &[(usize, Held)]) -> Option<Held> {
        if !self.started {
            self.started = true;
        } else if self.phase < 2 * self.n {
            if let Some((partner, is_left)) = self.partner(self.phase) {
                let theirs = inbox
                    .iter()
                    .find(|(from, _)| *from == partner)
                    .map(|(_, m)| m.clone())
                    .expect("line neighbors broadcast every step");
                self.exchange(&theirs, is_left);
            }
            self.phase += 1;
        }
        Some(self.held.clone())
    }

    fn is_quiescent(&self) -> bool {
        self.started && self.phase >= 2 * self.n
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resolution {
    pub powers: Vec<f64>,
    /// Synchronous steps used.
    pub steps: usize,
    /// Compare-exchanges that moved something.
    pub exchanges: usize,
}

/// Permutes `powers` among co-channel MGs so that a stronger gain to the
/// base station never holds a higher power. Runs as odd-even transposition
/// between line neighbors; `O(n)` steps and `O(n²)` compare-exchanges.
pub fn resolve_conflicts(bs_gains: &[f64], powers: &[f64]) -> Resolution {
    let n = bs_gains.len();
    assert_eq!(n, powers.len(), "one power per MG");
    let peers = (0..n)
        .map(|pos| TranspositionPeer {
            pos,
            n,
            held: Held {
                token: Token {
                    home: pos,
                    gain: bs_gains[pos],
                },
                power: powers[pos],
            },
            phase: 0,
            started: false,
            exchanges: 0,
        })
        .collect();
    let line = (0..n)
        .map(|i| {
            let mut v = Vec::with_capacity(2);
            if i > 0 {
                v.push(i - 1);
            }
            if i + 1 < n {
                v.push(i + 1);
            }
            v
        })
        .collect();
    let mut net = SyncNetwork::new(peers, line);
    let done = net.run(2 * n + 2);
    debug_assert!(done);
    let steps = net.steps();
    let peers = net.into_nodes();
    debug_assert!(peers.iter().enumerate().all(|(i, p)| p.held.token.home == i));
    Resolution {
        exchanges: peers.iter().map(|p| p.exchanges).sum(),
        powers: peers.into_iter().map(|p| p.held.power).collect(),
        steps,
    }
}

/// Loop state of the window search on one channel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerState {
    /// mW per co-channel MG; `None` while unassigned.
    pub powers: Vec<Option<f64>>,
    /// `(p_min, p_max)` in dBm.
    pub window_dbm: (f64, f64),
    pub iteration: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerTraceRecord {
    pub iter: usize,
    pub p_min_dbm: f64,
    pub p_max_dbm: f64,
    pub unassigned_count: usize,
    pub aggregate_interference_mw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelPower {
    pub channel: usize,
    pub members: Vec<usize>,
    /// mW, aligned with `members`.
    pub powers: Vec<f64>,
    pub budget_mw: f64,
    pub aggregate_mw: f64,
    pub iterations: usize,
    pub exchanges: usize,
    pub trace: Vec<PowerTraceRecord>,
}

impl ChannelPower {
    pub fn trace_jsonl(&self) -> String {
        self.trace
            .iter()
            .map(|r| serde_json::to_string(r).expect("trace record serializes") + "\n")
            .collect()
    }
}

fn aggregate(gains: &[f64], powers: &[f64]) -> f64 {
    gains.iter().zip(powers).map(|(h, p)| h * p).sum()
}

/// Runs the window search for the MGs assigned to channel `k`.
///
/// Compliant MGs keep their powers; only revoked ones redraw. The window
/// slides down by `beta_dbm_step` per retry and collapses to zero power
/// after [`POWER_RANGE_DB`], or when `max_power_iters` is reached, so the
/// loop always ends within the budget.
pub fn allocate_power<R: Rng>(k: usize, members: &[usize], gains: &GainTable, config: &SimConfig, rng: &mut R) -> ChannelPower {
    let budget = interference_budget(k, gains, config);
    let h: Vec<f64> = members.iter().map(|&g| gains.h_gb[g][k]).collect();
    let n = members.len();
    let mut out = ChannelPower {
        channel: k,
        members: members.to_vec(),
        powers: vec![],
        budget_mw: budget,
        aggregate_mw: 0.0,
        iterations: 0,
        exchanges: 0,
        trace: vec![],
    };
    if n == 0 {
        return out;
    }

    let share = budget / n as f64;
    let beta = config.beta_dbm_step;
    let collapse_after = window_iteration_bound(beta) - 1;
    let max_iters = config.max_power_iters as usize;
    let mut state = PowerState {
        powers: vec![None; n],
        window_dbm: (config.p_g_max_dbm - beta, config.p_g_max_dbm),
        iteration: 0,
    };

    loop {
        state.iteration += 1;
        let slides = state.iteration - 1;
        let p_max = config.p_g_max_dbm - slides as f64 * beta;
        state.window_dbm = (p_max - beta, p_max);
        let collapsed = slides >= collapse_after || state.iteration >= max_iters;

        for p in state.powers.iter_mut().filter(|p| p.is_none()) {
            *p = Some(if collapsed {
                0.0
            } else {
                dbm_to_linear(rng.random_range(state.window_dbm.0..=state.window_dbm.1))
            });
        }
        let drawn: Vec<f64> = state.powers.iter().map(|p| p.expect("all assigned")).collect();
        let resolved = resolve_conflicts(&h, &drawn);
        out.exchanges += resolved.exchanges;
        let total = aggregate(&h, &resolved.powers);
        state.powers = resolved.powers.iter().map(|&p| Some(p)).collect();

        // once collapsed, every remaining power passed an equal-share check, so the
        // aggregate is within the budget up to rounding
        if total <= budget || collapsed {
            out.trace.push(PowerTraceRecord {
                iter: state.iteration,
                p_min_dbm: state.window_dbm.0,
                p_max_dbm: state.window_dbm.1,
                unassigned_count: 0,
                aggregate_interference_mw: total,
            });
            out.aggregate_mw = total;
            break;
        }

        for (p, &hg) in state.powers.iter_mut().zip(&h) {
            if p.is_some_and(|p| p * hg > share) {
                *p = None;
            }
        }
        out.trace.push(PowerTraceRecord {
            iter: state.iteration,
            p_min_dbm: state.window_dbm.0,
            p_max_dbm: state.window_dbm.1,
            unassigned_count: state.powers.iter().filter(|p| p.is_none()).count(),
            aggregate_interference_mw: total,
        });
    }

    out.iterations = state.iteration;
    out.powers = state.powers.into_iter().map(|p| p.expect("all assigned")).collect();
    out
}
