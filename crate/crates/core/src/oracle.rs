//! Exhaustive search over channel assignments and grid powers for small
//! instances of the joint allocation problem.

use serde::Serialize;

use crate::channel::GainTable;
use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::metrics::{objective_and_constraints, Allocation};
use crate::power::interference_budget;
use crate::scenario::CellScenario;

pub const MAX_ORACLE_MGS: usize = 4;
pub const MAX_ORACLE_CUS: usize = 3;
pub const MAX_GRID_LEVELS: usize = 8;

/// Relative slack on the aggregate interference budget.
pub const BUDGET_RTOL: f64 = 1e-9;

/// Whether an MG may be left without a channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum C3Mode {
    /// At most one channel per MG.
    #[default]
    Relaxed,
    /// Exactly one channel per MG (zero power still allowed if on the grid).
    Strict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    pub assignment: Vec<Option<usize>>,
    pub powers_mw: Vec<f64>,
    pub objective_bps: f64,
    #[serde(skip)]
    pub allocation: Allocation,
    #[serde(skip)]
    pub evaluated: usize,
}

impl OracleResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("oracle result serializes")
    }
}

/// True when every channel's aggregate MG interference at the base station
/// fits its budget (with [`BUDGET_RTOL`] slack).
pub fn within_budget(alloc: &Allocation, gains: &GainTable, config: &SimConfig) -> bool {
    (0..alloc.num_channels()).all(|k| {
        let used: f64 = alloc.members(k).iter().map(|&g| gains.h_gb[g][k] * alloc.p_g[g]).sum();
        used <= interference_budget(k, gains, config) * (1.0 + BUDGET_RTOL)
    })
}

/// Largest grid level not above `p`, or 0 when `p` is below every level.
pub fn round_down_to_grid(p: f64, grid: &[f64]) -> f64 {
    grid.iter().copied().filter(|&l| l <= p).fold(0.0, f64::max)
}

/// Copy of `alloc` with every MG power rounded down to the grid.
pub fn grid_rounded(alloc: &Allocation, grid: &[f64]) -> Allocation {
    let mut out = alloc.clone();
    for p in &mut out.p_g {
        *p = round_down_to_grid(*p, grid);
    }
    out
}

/// Enumerates every assignment (MG 0 most significant, exclusion first,
/// then channel-major, level-minor) and returns the budget-feasible one with
/// the largest objective; the first maximizer wins ties.
pub fn brute_force_optimum(
    scenario: &CellScenario,
    gains: &GainTable,
    config: &SimConfig,
    grid: &[f64],
    mode: C3Mode,
) -> Result<OracleResult> {
    let n_p = scenario.num_mgs();
    let n_c = scenario.num_cus();
    if n_p > MAX_ORACLE_MGS || n_c > MAX_ORACLE_CUS || grid.len() > MAX_GRID_LEVELS {
        return Err(Error::OracleGuard(format!(
            "{n_p} MGs x {n_c} CUs x {} levels exceeds {MAX_ORACLE_MGS} x {MAX_ORACLE_CUS} x {MAX_GRID_LEVELS}",
            grid.len()
        )));
    }
    if n_c == 0 || grid.is_empty() {
        return Err(Error::OracleGuard("need at least one CU and one grid level".into()));
    }
    let p_max = config.p_g_max_mw();
    if let Some(bad) = grid.iter().find(|&&l| !(0.0..=p_max).contains(&l)) {
        return Err(Error::InvalidArgument(format!("grid level {bad} mW outside [0, {p_max}]")));
    }

    // option 0 is exclusion in relaxed mode
    let offset = usize::from(mode == C3Mode::Relaxed);
    let per_mg = offset + n_c * grid.len();
    let decode = |opt: usize| -> (Option<usize>, f64) {
        if opt < offset {
            (None, 0.0)
        } else {
            let o = opt - offset;
            (Some(o / grid.len()), grid[o % grid.len()])
        }
    };

    let mut digits = vec![0usize; n_p];
    let mut best: Option<(f64, Allocation)> = None;
    let mut evaluated = 0;
    loop {
        let (channels, powers): (Vec<Option<usize>>, Vec<f64>) = digits.iter().map(|&d| decode(d)).unzip();
        let alloc = Allocation::from_channels(&channels, powers, n_c, config);
        if within_budget(&alloc, gains, config) {
            let objective = objective_and_constraints(scenario, gains, &alloc, config)?.objective;
            evaluated += 1;
            if best.as_ref().is_none_or(|(b, _)| objective > *b) {
                best = Some((objective, alloc));
            }
        }
        // odometer increment, last MG fastest
        let mut i = n_p;
        loop {
            if i == 0 {
                let (objective_bps, allocation) = best.ok_or_else(|| {
                    Error::OracleGuard("no budget-feasible assignment on this grid".into())
                })?;
                return Ok(OracleResult {
                    assignment: allocation.channels(),
                    powers_mw: allocation.p_g.clone(),
                    objective_bps,
                    allocation,
                    evaluated,
                });
            }
            i -= 1;
            digits[i] += 1;
            if digits[i] < per_mg {
                break;
            }
            digits[i] = 0;
        }
    }
}
