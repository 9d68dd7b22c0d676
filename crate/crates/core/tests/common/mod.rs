//! Fixtures and independent reference implementations shared by the
//! integration test targets. The references recompute everything from raw
//! gains and the closed-form rate expressions, without calling into the
//! library's own evaluation code.

#![allow(dead_code)]


use d2dsim::channel::build_gain_table;
use d2dsim::rng::stream;
use d2dsim::scenario::{uniform_in_disc, CellScenario};
use d2dsim::{Allocation, GainTable, SimConfig};

/// Reference value of Pr[N = 0] at unit mean, from `oracles/derive_values.py`.
pub const EMPTY_PROBABILITY_UNIT_MEAN: f64 = 0.367_879_441_171_442_33;
/// MG transmitter density giving a mean of 20 MGs in a 500 m cell, from the same script.
pub const LAMBDA_GT_MEAN_20: f64 = 2.546_479_089_470_325_7e-5;
/// `10^-3.6`, from the same script.
pub const GAIN_TEN_METERS: f64 = 2.511_886_431_509_579_5e-4;
/// `100^-3.6 * 10^0.8 * 0.5`, from the same script.
pub const GAIN_HUNDRED_METERS_SHADOWED: f64 = 1.990_535_852_767_485_7e-7;
/// `log2(1.5)`, the CU rate in the hand-evaluated throughput delta example.
pub const LOG2_THREE_HALVES: f64 = 0.584_962_500_721_156_2;

pub fn close(a: f64, b: f64, rtol: f64) -> bool {
    (a - b).abs() <= rtol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// A scenario with `n_c` CUs and the given group sizes on fixed placeholder positions.
pub fn scenario(n_c: usize, group_sizes: &[usize]) -> CellScenario {
    CellScenario {
        cu_positions: (0..n_c).map(|k| [20.0 * (k + 1) as f64, 0.0]).collect(),
        mgtx_positions: (0..group_sizes.len()).map(|g| [0.0, 20.0 * (g + 1) as f64]).collect(),
        mgrx_positions: group_sizes
            .iter()
            .enumerate()
            .map(|(g, &n)| (0..n).map(|r| [1.0 + r as f64, 20.0 * (g + 1) as f64 + 1.0]).collect())
            .collect(),
        bs_position: [0.0, 0.0],
        seed: 0,
        receiver_resamples: 0,
    }
}

/// Every gain set to `value`.
pub fn flat_gains(n_c: usize, group_sizes: &[usize], value: f64) -> GainTable {
    let n_p = group_sizes.len();
    let per_group = || group_sizes.iter().map(|&n| vec![value; n]).collect::<Vec<_>>();
    GainTable {
        h_cb: vec![value; n_c],
        h_gb: vec![vec![value; n_c]; n_p],
        h_gr: (0..n_p)
            .map(|_| group_sizes.iter().map(|&n| vec![vec![value; n_c]; n]).collect())
            .collect(),
        h_cr: (0..n_c).map(|_| per_group()).collect(),
        ls_gr: (0..n_p).map(|_| per_group()).collect(),
        ls_gb: vec![value; n_p],
        clamped_links: 0,
    }
}

/// 0 dBm powers, unit bandwidth and noise `n0` mW.
pub fn unit_config(n0: f64) -> SimConfig {
    SimConfig {
        bandwidth_hz: 1.0,
        noise_dbm: 10.0 * n0.log10(),
        p_c_max_dbm: 0.0,
        p_g_max_dbm: 0.0,
        ..SimConfig::default()
    }
}

/// Random geometry with exact node counts: CUs and transmitters uniform in
/// the cell, receivers uniform within `d_r` of their transmitter.
pub fn random_scenario(n_c: usize, group_sizes: &[usize], config: &SimConfig, seed: u64) -> CellScenario {
    let mut rng = stream(seed, 99);
    let origin = [0.0, 0.0];
    let cu_positions = (0..n_c).map(|_| uniform_in_disc(origin, config.cell_radius, &mut rng)).collect();
    let mgtx_positions: Vec<[f64; 2]> = group_sizes
        .iter()
        .map(|_| uniform_in_disc(origin, config.cell_radius, &mut rng))
        .collect();
    let mgrx_positions = mgtx_positions
        .iter()
        .zip(group_sizes)
        .map(|(&tx, &n)| (0..n).map(|_| uniform_in_disc(tx, config.d_r, &mut rng)).collect())
        .collect();
    CellScenario {
        cu_positions,
        mgtx_positions,
        mgrx_positions,
        bs_position: origin,
        seed,
        receiver_resamples: 0,
    }
}

pub fn random_instance(n_c: usize, group_sizes: &[usize], config: &SimConfig, seed: u64) -> (CellScenario, GainTable) {
    let s = random_scenario(n_c, group_sizes, config, seed);
    let g = build_gain_table(&s, config, &mut stream(seed, 98)).expect("valid geometry");
    (s, g)
}

fn mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

fn ratio(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Sum throughput recomputed term by term from raw gains.
pub fn reference_objective(s: &CellScenario, g: &GainTable, alloc: &Allocation, c: &SimConfig) -> f64 {
    let n0 = mw(c.noise_dbm);
    let b = c.bandwidth_hz;
    let n_p = s.mgtx_positions.len();
    let n_c = s.cu_positions.len();
    let mut total = 0.0;
    for k in 0..n_c {
        let mut at_bs = 0.0;
        for m in 0..n_p {
            if alloc.a[m][k] {
                at_bs += g.h_gb[m][k] * alloc.p_g[m];
            }
        }
        total += b * (1.0 + alloc.p_c[k] * g.h_cb[k] / (at_bs + n0)).log2();
    }
    for m in 0..n_p {
        for k in 0..n_c {
            if !alloc.a[m][k] {
                continue;
            }
            let mut worst = f64::INFINITY;
            for r in 0..s.mgrx_positions[m].len() {
                let mut denom = g.h_cr[k][m][r] * alloc.p_c[k] + n0;
                for j in 0..n_p {
                    if j != m && alloc.a[j][k] {
                        denom += g.h_gr[j][m][r][k] * alloc.p_g[j];
                    }
                }
                worst = worst.min(alloc.p_g[m] * g.h_gr[m][m][r][k] / denom);
            }
            total += s.mgrx_positions[m].len() as f64 * b * (1.0 + worst).log2();
        }
    }
    total
}

/// Throughput delta of MG `m` alone on channel `k` at `p` mW, from raw gains.
pub fn reference_delta(s: &CellScenario, g: &GainTable, c: &SimConfig, m: usize, k: usize, p: f64) -> f64 {
    let n0 = mw(c.noise_dbm);
    let b = c.bandwidth_hz;
    let pc = mw(c.p_c_max_dbm);
    let r_alone = b * (1.0 + pc * g.h_cb[k] / n0).log2();
    let r_shared = b * (1.0 + pc * g.h_cb[k] / (g.h_gb[m][k] * p + n0)).log2();
    let worst = (0..s.mgrx_positions[m].len())
        .map(|r| p * g.h_gr[m][m][r][k] / (g.h_cr[k][m][r] * pc + n0))
        .fold(f64::INFINITY, f64::min);
    let r_group = s.mgrx_positions[m].len() as f64 * b * (1.0 + worst).log2();
    r_group + r_shared - r_alone
}

/// `p_c h_cb / Gamma_c - N0`, floored at 0.
pub fn reference_budget(g: &GainTable, c: &SimConfig, k: usize) -> f64 {
    (mw(c.p_c_max_dbm) * g.h_cb[k] / ratio(c.gamma_c_th_db) - mw(c.noise_dbm)).max(0.0)
}

/// Whether `coloring` is a proper list coloring: no monochromatic edge and
/// every color drawn from its node's palette. Nodes with empty palettes must
/// be uncolored; all others must be colored.
pub fn is_proper_list_coloring(adj: &[Vec<bool>], palettes: &[Vec<usize>], coloring: &[Option<usize>]) -> bool {
    let n = adj.len();
    for v in 0..n {
        match coloring[v] {
            None if !palettes[v].is_empty() => return false,
            Some(c) if !palettes[v].contains(&c) => return false,
            _ => {}
        }
        for u in (v + 1)..n {
            if adj[v][u] && coloring[v].is_some() && coloring[v] == coloring[u] {
                return false;
            }
        }
    }
    true
}

/// Every proper list coloring, by exhaustive enumeration of palette choices.
pub fn proper_list_colorings(adj: &[Vec<bool>], palettes: &[Vec<usize>]) -> Vec<Vec<Option<usize>>> {
    fn extend(
        v: usize,
        adj: &[Vec<bool>],
        palettes: &[Vec<usize>],
        partial: &mut Vec<Option<usize>>,
        out: &mut Vec<Vec<Option<usize>>>,
    ) {
        if v == adj.len() {
            out.push(partial.clone());
            return;
        }
        if palettes[v].is_empty() {
            partial.push(None);
            extend(v + 1, adj, palettes, partial, out);
            partial.pop();
            return;
        }
        for &c in &palettes[v] {
            if (0..v).any(|u| adj[v][u] && partial[u] == Some(c)) {
                continue;
            }
            partial.push(Some(c));
            extend(v + 1, adj, palettes, partial, out);
            partial.pop();
        }
    }
    let mut out = Vec::new();
    extend(0, adj, palettes, &mut Vec::new(), &mut out);
    out
}

/// Centralized sort: the powers in ascending order handed out by
/// descending base-station gain (ties by index).
pub fn sorted_assignment(bs_gains: &[f64], powers: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..bs_gains.len()).collect();
    order.sort_by(|&a, &b| bs_gains[b].total_cmp(&bs_gains[a]).then(a.cmp(&b)));
    let mut sorted = powers.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut out = vec![0.0; powers.len()];
    for (slot, p) in order.into_iter().zip(sorted) {
        out[slot] = p;
    }
    out
}

/// Water-filling link terms `(h_b, e, n)` of MG `m` on channel `k`, taken
/// at the receiver with the weakest `e / n`.
pub fn reference_wf_link(s: &CellScenario, g: &GainTable, c: &SimConfig, m: usize, k: usize) -> (f64, f64, f64) {
    let pc = mw(c.p_c_max_dbm);
    let n0 = mw(c.noise_dbm);
    let (e, n) = (0..s.mgrx_positions[m].len())
        .map(|r| (g.h_gr[m][m][r][k], g.h_cr[k][m][r] * pc + n0))
        .min_by(|a, b| (a.0 / a.1).total_cmp(&(b.0 / b.1)))
        .expect("nonempty group");
    (g.h_gb[m][k], e, n)
}

/// The water-filling utility `sum ln(1 + p e / n)`.
pub fn wf_utility(links: &[(f64, f64, f64)], powers: &[f64]) -> f64 {
    links.iter().zip(powers).map(|(&(_, e, n), &p)| (1.0 + p * e / n).ln()).sum()
}

/// Best water-filling utility of two links over a dense grid of the
/// feasible set `{h1 p1 + h2 p2 <= budget, 0 <= p <= p_max}`. The utility is
/// increasing, so for each `p1` only the largest feasible `p2` is tried.
pub fn wf_grid_optimum(links: &[(f64, f64, f64); 2], budget: f64, p_max: f64, steps: usize) -> f64 {
    let (h1, h2) = (links[0].0, links[1].0);
    let p1_top = p_max.min(budget / h1);
    (0..=steps)
        .map(|i| {
            let p1 = p1_top * i as f64 / steps as f64;
            let p2 = ((budget - h1 * p1) / h2).clamp(0.0, p_max);
            wf_utility(links, &[p1, p2])
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Whether some vector drawn from `levels` (mW) with every entry at least
/// `floor` meets the aggregate budget, by exhaustive search.
pub fn feasible_on_grid(bs_gains: &[f64], budget: f64, levels: &[f64], floor: &[f64]) -> bool {
    let n = bs_gains.len();
    let mut digits = vec![0usize; n];
    loop {
        let p: Vec<f64> = digits.iter().map(|&d| levels[d]).collect();
        if p.iter().zip(floor).all(|(a, b)| a >= b) && bs_gains.iter().zip(&p).map(|(h, p)| h * p).sum::<f64>() <= budget {
            return true;
        }
        let mut i = n;
        loop {
            if i == 0 {
                return false;
            }
            i -= 1;
            digits[i] += 1;
            if digits[i] < levels.len() {
                break;
            }
            digits[i] = 0;
        }
    }
}

/// Sample mean and the Pearson correlation of two equally long samples.
pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn correlation(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}
