//! SINR, rate and sum-throughput evaluation for a fixed allocation.

use serde::{Deserialize, Serialize};

use crate::channel::GainTable;
use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::scenario::CellScenario;

/// Relative tolerance on the C1 power bounds, absorbing dBm/mW round trips.
const POWER_BOUND_RTOL: f64 = 1e-12;

/// Channel assignment `a[g][k]` and transmit powers in mW.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub a: Vec<Vec<bool>>,
    pub p_g: Vec<f64>,
    pub p_c: Vec<f64>,
}

impl Allocation {
    /// One channel (or none) per MG; CUs at full power.
    pub fn from_channels(channels: &[Option<usize>], p_g: Vec<f64>, n_c: usize, config: &SimConfig) -> Self {
        assert_eq!(channels.len(), p_g.len(), "one power per MG");
        let a = channels
            .iter()
            .map(|ch| (0..n_c).map(|k| *ch == Some(k)).collect())
            .collect();
        Self {
            a,
            p_g,
            p_c: vec![config.p_c_max_mw(); n_c],
        }
    }

    pub fn num_mgs(&self) -> usize {
        self.a.len()
    }

    pub fn num_channels(&self) -> usize {
        self.p_c.len()
    }

    /// The first channel MG `g` is assigned to.
    pub fn channel_of(&self, g: usize) -> Option<usize> {
        self.a[g].iter().position(|&x| x)
    }

    /// MGs assigned channel `k` (the set 𝔾_k), ascending.
    pub fn members(&self, k: usize) -> Vec<usize> {
        (0..self.a.len()).filter(|&g| self.a[g][k]).collect()
    }

    pub fn channels(&self) -> Vec<Option<usize>> {
        (0..self.a.len()).map(|g| self.channel_of(g)).collect()
    }
}

/// Per-receiver SINRs of MG `group` on `channel`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MgLinkSinr {
    pub group: usize,
    pub channel: usize,
    pub per_receiver: Vec<f64>,
}

impl MgLinkSinr {
    pub fn worst(&self) -> f64 {
        self.per_receiver.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sinrs {
    /// CU SINR at the base station, per channel.
    pub cu: Vec<f64>,
    /// One entry per assigned (MG, channel) pair, channel-major.
    pub mg: Vec<MgLinkSinr>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rates {
    pub cu: Vec<f64>,
    /// Aligned with [`Sinrs::mg`].
    pub mg_links: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum C2Violation {
    Cu { channel: usize, sinr: f64 },
    Mg { group: usize, channel: usize, worst_sinr: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StructuralViolation {
    /// C1: a power outside `[0, max]`.
    PowerBound { who: String, power_mw: f64 },
    /// C3: an MG assigned more than one channel.
    MultipleChannels { group: usize, channels: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaRecord {
    pub group: usize,
    pub channel: usize,
    pub delta_bps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub cu_sinr: Vec<f64>,
    /// Worst receiver SINR per MG; 0 for MGs without a channel.
    pub mg_worst_sinr: Vec<f64>,
    pub cu_rate: Vec<f64>,
    pub mg_rate: Vec<f64>,
    pub standalone_cu_rate: Vec<f64>,
    /// Solo-probe throughput delta of every assigned pair at its allocated power.
    pub delta_rate: Vec<DeltaRecord>,
    pub objective: f64,
    pub c2_violations: Vec<C2Violation>,
    pub structural_violations: Vec<StructuralViolation>,
}

impl RateReport {
    pub fn total_cu_rate(&self) -> f64 {
        self.cu_rate.iter().sum()
    }

    pub fn total_mg_rate(&self) -> f64 {
        self.mg_rate.iter().sum()
    }

    pub fn has_cu_violation(&self) -> bool {
        self.c2_violations.iter().any(|v| matches!(v, C2Violation::Cu { .. }))
    }

    pub fn has_mg_violation(&self) -> bool {
        self.c2_violations.iter().any(|v| matches!(v, C2Violation::Mg { .. }))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// `B log2(1 + sinr)`.
pub fn cu_rate(sinr: f64, bandwidth_hz: f64) -> f64 {
    bandwidth_hz * (1.0 + sinr).log2()
}

/// `|U_g| B log2(1 + min_r sinr_r)`.
pub fn mg_rate(group_size: usize, receiver_sinrs: &[f64], bandwidth_hz: f64) -> f64 {
    let worst = receiver_sinrs.iter().copied().fold(f64::INFINITY, f64::min);
    if !worst.is_finite() {
        return 0.0;
    }
    group_size as f64 * bandwidth_hz * (1.0 + worst).log2()
}

fn check_shapes(scenario: &CellScenario, gains: &GainTable, alloc: &Allocation) -> Result<()> {
    let n_p = scenario.num_mgs();
    let n_c = scenario.num_cus();
    if gains.num_mgs() != n_p || gains.num_channels() != n_c {
        return Err(Error::MalformedAllocation("gain table does not match scenario".into()));
    }
    if alloc.a.len() != n_p || alloc.p_g.len() != n_p || alloc.p_c.len() != n_c {
        return Err(Error::MalformedAllocation(format!(
            "expected {n_p} MGs and {n_c} CUs, got a: {}, p_g: {}, p_c: {}",
            alloc.a.len(),
            alloc.p_g.len(),
            alloc.p_c.len()
        )));
    }
    if alloc.a.iter().any(|row| row.len() != n_c) {
        return Err(Error::MalformedAllocation("assignment rows must have one entry per channel".into()));
    }
    Ok(())
}

fn power_violations(alloc: &Allocation, config: &SimConfig) -> Vec<StructuralViolation> {
    let mut out = Vec::new();
    let limits = [(&alloc.p_g, config.p_g_max_mw(), "MG"), (&alloc.p_c, config.p_c_max_mw(), "CU")];
    for (powers, max, label) in limits {
        for (i, &p) in powers.iter().enumerate() {
            if !(p >= 0.0 && p <= max * (1.0 + POWER_BOUND_RTOL)) {
                out.push(StructuralViolation::PowerBound {
                    who: format!("{label} {i}"),
                    power_mw: p,
                });
            }
        }
    }
    out
}

fn sinrs_unchecked(scenario: &CellScenario, gains: &GainTable, alloc: &Allocation, config: &SimConfig) -> Sinrs {
    let n0 = config.noise_mw();
    let n_c = scenario.num_cus();
    let mut cu = Vec::with_capacity(n_c);
    let mut mg = Vec::new();
    for k in 0..n_c {
        let members = alloc.members(k);
        let p_c = alloc.p_c[k];
        let interference: f64 = members.iter().map(|&g| gains.h_gb[g][k] * alloc.p_g[g]).sum();
        cu.push(p_c * gains.h_cb[k] / (interference + n0));
        for &g in &members {
            let per_receiver = (0..scenario.group_size(g))
                .map(|r| {
                    let inter_mg: f64 = members
                        .iter()
                        .filter(|&&j| j != g)
                        .map(|&j| gains.h_gr[j][g][r][k] * alloc.p_g[j])
                        .sum();
                    let denom = inter_mg + gains.h_cr[k][g][r] * p_c + n0;
                    alloc.p_g[g] * gains.h_gr[g][g][r][k] / denom
                })
                .collect();
            mg.push(MgLinkSinr {
                group: g,
                channel: k,
                per_receiver,
            });
        }
    }
    Sinrs { cu, mg }
}

/// CU and per-receiver MG SINRs. Only co-channel MGs interfere with each other.
pub fn compute_sinrs(scenario: &CellScenario, gains: &GainTable, alloc: &Allocation, config: &SimConfig) -> Result<Sinrs> {
    check_shapes(scenario, gains, alloc)?;
    if let Some(StructuralViolation::PowerBound { who, power_mw }) = power_violations(alloc, config).into_iter().next() {
        let max_mw = if who.starts_with("MG") {
            config.p_g_max_mw()
        } else {
            config.p_c_max_mw()
        };
        return Err(Error::PowerBound { who, power_mw, max_mw });
    }
    Ok(sinrs_unchecked(scenario, gains, alloc, config))
}

pub fn compute_rates(sinrs: &Sinrs, group_sizes: &[usize], config: &SimConfig) -> Rates {
    let b = config.bandwidth_hz;
    Rates {
        cu: sinrs.cu.iter().map(|&s| cu_rate(s, b)).collect(),
        mg_links: sinrs
            .mg
            .iter()
            .map(|l| mg_rate(group_sizes[l.group], &l.per_receiver, b))
            .collect(),
    }
}

/// CU rate on channel `k` with no MG sharing it.
pub fn standalone_cu_rate(k: usize, gains: &GainTable, config: &SimConfig) -> f64 {
    cu_rate(config.p_c_max_mw() * gains.h_cb[k] / config.noise_mw(), config.bandwidth_hz)
}

/// Change in sum-throughput when MG `g` alone shares channel `k` at `probe_power` mW.
pub fn delta_rate(g: usize, k: usize, scenario: &CellScenario, gains: &GainTable, config: &SimConfig, probe_power: f64) -> f64 {
    let n0 = config.noise_mw();
    let b = config.bandwidth_hz;
    let p_c = config.p_c_max_mw();
    let signal = p_c * gains.h_cb[k];
    let alone = cu_rate(signal / n0, b);
    let shared = cu_rate(signal / (gains.h_gb[g][k] * probe_power + n0), b);
    let receiver_sinrs: Vec<f64> = (0..scenario.group_size(g))
        .map(|r| probe_power * gains.h_gr[g][g][r][k] / (gains.h_cr[k][g][r] * p_c + n0))
        .collect();
    let group = mg_rate(scenario.group_size(g), &receiver_sinrs, b);
    group + shared - alone
}

/// Sum throughput of the channel-`k` subsystem alone: the CU rate plus the
/// rates of `members`, given as `(mg, power_mw)` pairs.
pub fn channel_objective(k: usize, members: &[(usize, f64)], scenario: &CellScenario, gains: &GainTable, config: &SimConfig) -> f64 {
    let n0 = config.noise_mw();
    let b = config.bandwidth_hz;
    let p_c = config.p_c_max_mw();
    let at_bs: f64 = members.iter().map(|&(g, p)| gains.h_gb[g][k] * p).sum();
    let mut total = cu_rate(p_c * gains.h_cb[k] / (at_bs + n0), b);
    for &(g, p) in members {
        let sinrs: Vec<f64> = (0..scenario.group_size(g))
            .map(|r| {
                let inter: f64 = members
                    .iter()
                    .filter(|(j, _)| *j != g)
                    .map(|&(j, pj)| gains.h_gr[j][g][r][k] * pj)
                    .sum();
                p * gains.h_gr[g][g][r][k] / (inter + gains.h_cr[k][g][r] * p_c + n0)
            })
            .collect();
        total += mg_rate(scenario.group_size(g), &sinrs, b);
    }
    total
}

/// Evaluates the sum-throughput objective and reports every constraint
/// violation. Never fails on constraint violations; only on shape mismatch.
pub fn objective_and_constraints(
    scenario: &CellScenario,
    gains: &GainTable,
    alloc: &Allocation,
    config: &SimConfig,
) -> Result<RateReport> {
    check_shapes(scenario, gains, alloc)?;
    let mut structural = power_violations(alloc, config);
    for (g, row) in alloc.a.iter().enumerate() {
        let channels: Vec<usize> = row.iter().enumerate().filter(|(_, &x)| x).map(|(k, _)| k).collect();
        if channels.len() > 1 {
            structural.push(StructuralViolation::MultipleChannels { group: g, channels });
        }
    }

    let sinrs = sinrs_unchecked(scenario, gains, alloc, config);
    let sizes: Vec<usize> = (0..scenario.num_mgs()).map(|g| scenario.group_size(g)).collect();
    let rates = compute_rates(&sinrs, &sizes, config);

    let n_p = scenario.num_mgs();
    let mut mg_rate_total = vec![0.0; n_p];
    let mut mg_worst = vec![f64::INFINITY; n_p];
    let mut deltas = Vec::with_capacity(sinrs.mg.len());
    let mut violations = Vec::new();
    let gamma_c = config.gamma_c_th();
    let gamma_g = config.gamma_g_th();

    for (k, &s) in sinrs.cu.iter().enumerate() {
        if s < gamma_c {
            violations.push(C2Violation::Cu { channel: k, sinr: s });
        }
    }
    for (link, &rate) in sinrs.mg.iter().zip(&rates.mg_links) {
        let g = link.group;
        let worst = link.worst();
        mg_rate_total[g] += rate;
        mg_worst[g] = mg_worst[g].min(worst);
        deltas.push(DeltaRecord {
            group: g,
            channel: link.channel,
            delta_bps: delta_rate(g, link.channel, scenario, gains, config, alloc.p_g[g]),
        });
        // a silent MG carries no multicast session, so only active links are held to the threshold
        if alloc.p_g[g] > 0.0 && worst < gamma_g {
            violations.push(C2Violation::Mg {
                group: g,
                channel: link.channel,
                worst_sinr: worst,
            });
        }
    }
    for w in &mut mg_worst {
        if w.is_infinite() {
            *w = 0.0;
        }
    }

    let objective = rates.cu.iter().sum::<f64>() + mg_rate_total.iter().sum::<f64>();
    Ok(RateReport {
        cu_sinr: sinrs.cu,
        mg_worst_sinr: mg_worst,
        standalone_cu_rate: (0..scenario.num_cus()).map(|k| standalone_cu_rate(k, gains, config)).collect(),
        cu_rate: rates.cu,
        mg_rate: mg_rate_total,
        delta_rate: deltas,
        objective,
        c2_violations: violations,
        structural_violations: structural,
    })
}
