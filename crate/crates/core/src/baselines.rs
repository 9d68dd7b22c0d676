//! Comparison schemes: random and greedy channel allocation, and equal,
//! maximum and water-filling power allocation.

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::channel::GainTable;
use crate::coloring::CandidateChannelSets;
use crate::config::SimConfig;
use crate::metrics::channel_objective;
use crate::power::interference_budget;
use crate::scenario::CellScenario;

/// Random channel allocation: each MG picks uniformly from its candidate set.
pub fn rca_channels<R: Rng>(candidates: &CandidateChannelSets, rng: &mut R) -> Vec<Option<usize>> {
    candidates.sets.iter().map(|set| set.choose(rng).copied()).collect()
}

/// Greedy interference-aware channel allocation.
///
/// MGs are visited in order of their best solo throughput delta. Each takes
/// the candidate channel where it adds the most to that channel's sum
/// throughput given the MGs already placed, everyone at full power.
pub fn greedy_ia_channels(
    scenario: &CellScenario,
    gains: &GainTable,
    config: &SimConfig,
    candidates: &CandidateChannelSets,
) -> Vec<Option<usize>> {
    let n_p = scenario.num_mgs();
    let p = config.p_g_max_mw();
    let best_solo = |g: usize| {
        candidates.sets[g]
            .iter()
            .map(|&k| candidates.deltas[g][k])
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let mut order: Vec<usize> = (0..n_p).filter(|&g| !candidates.is_excluded(g)).collect();
    order.sort_by(|&a, &b| best_solo(b).total_cmp(&best_solo(a)).then(a.cmp(&b)));

    let mut placed: Vec<Vec<(usize, f64)>> = vec![Vec::new(); scenario.num_cus()];
    let mut channels = vec![None; n_p];
    for g in order {
        let mut best: Option<(usize, f64)> = None;
        for &k in &candidates.sets[g] {
            let before = channel_objective(k, &placed[k], scenario, gains, config);
            let mut with = placed[k].clone();
            with.push((g, p));
            let gain = channel_objective(k, &with, scenario, gains, config) - before;
            if best.is_none_or(|(_, b)| gain > b) {
                best = Some((k, gain));
            }
        }
        let (k, _) = best.expect("non-excluded MGs have candidates");
        placed[k].push((g, p));
        channels[g] = Some(k);
    }
    channels
}

/// Equal power: one common power for all MGs on channel `k`, the largest
/// that keeps their aggregate interference within the budget.
pub fn epa_power(k: usize, members: &[usize], gains: &GainTable, config: &SimConfig) -> Vec<f64> {
    if members.is_empty() {
        return vec![];
    }
    let budget = interference_budget(k, gains, config);
    let total_gain: f64 = members.iter().map(|&g| gains.h_gb[g][k]).sum();
    let p = config.p_g_max_mw().min(budget / total_gain);
    vec![p; members.len()]
}

/// Maximum power for everyone, ignoring the CU budget.
pub fn mpa_power(members: &[usize], config: &SimConfig) -> Vec<f64> {
    vec![config.p_g_max_mw(); members.len()]
}

/// Receiver-side terms used by water-filling: the serving gain `e` to the
/// limiting receiver and the CU interference plus noise `n` it sees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaterFillingLink {
    pub bs_gain: f64,
    pub serving_gain: f64,
    pub floor_mw: f64,
}

impl WaterFillingLink {
    /// Limiting receiver of MG `g` alone on channel `k`.
    pub fn of(g: usize, k: usize, scenario: &CellScenario, gains: &GainTable, config: &SimConfig) -> Self {
        let p_c = config.p_c_max_mw();
        let n0 = config.noise_mw();
        let (serving_gain, floor_mw) = (0..scenario.group_size(g))
            .map(|r| (gains.h_gr[g][g][r][k], gains.h_cr[k][g][r] * p_c + n0))
            .min_by(|a, b| (a.0 / a.1).total_cmp(&(b.0 / b.1)))
            .expect("groups are nonempty");
        Self {
            bs_gain: gains.h_gb[g][k],
            serving_gain,
            floor_mw,
        }
    }

    fn power_at(&self, level: f64, p_max: f64) -> f64 {
        (level / self.bs_gain - self.floor_mw / self.serving_gain).clamp(0.0, p_max)
    }
}

/// Relative tolerance on the budget at which the water level search stops.
pub const WATER_LEVEL_RTOL: f64 = 1e-9;

/// Water-filling over `links` with aggregate interference `budget` (mW) and
/// per-MG cap `p_max`: `p = clamp(level / h_b - n / e, 0, p_max)` with the
/// level found by bisection. The returned powers never exceed the budget.
pub fn water_fill(links: &[WaterFillingLink], budget: f64, p_max: f64) -> Vec<f64> {
    if links.is_empty() {
        return vec![];
    }
    if !(budget > 0.0) {
        return vec![0.0; links.len()];
    }
    let used = |level: f64| -> f64 { links.iter().map(|l| l.bs_gain * l.power_at(level, p_max)).sum() };
    let full: Vec<f64> = vec![p_max; links.len()];
    if links.iter().map(|l| l.bs_gain * p_max).sum::<f64>() <= budget {
        return full;
    }
    let mut lo = 0.0;
    let mut hi = links
        .iter()
        .map(|l| l.bs_gain * (p_max + l.floor_mw / l.serving_gain))
        .fold(0.0, f64::max);
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if used(mid) <= budget {
            lo = mid;
        } else {
            hi = mid;
        }
        if budget - used(lo) <= WATER_LEVEL_RTOL * budget || hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    links.iter().map(|l| l.power_at(lo, p_max)).collect()
}

/// Water-filling power allocation for the MGs on channel `k`.
pub fn wfpa_power(k: usize, members: &[usize], scenario: &CellScenario, gains: &GainTable, config: &SimConfig) -> Vec<f64> {
    let links: Vec<WaterFillingLink> = members
        .iter()
        .map(|&g| WaterFillingLink::of(g, k, scenario, gains, config))
        .collect();
    water_fill(&links, interference_budget(k, gains, config), config.p_g_max_mw())
}
