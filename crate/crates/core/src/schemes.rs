//! Named channel/power scheme combinations and their evaluation on one instance.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::{epa_power, greedy_ia_channels, mpa_power, rca_channels, wfpa_power};
use crate::channel::GainTable;
use crate::coloring::{allocate_channels_with, candidate_sets, CandidateChannelSets, OuterIterRecord};
use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::metrics::{objective_and_constraints, Allocation, RateReport};
use crate::power::{allocate_power, ChannelPower};
use crate::rng::{stable_hash, stream, tag};
use crate::scenario::CellScenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ChannelScheme {
    Proposed,
    Rca,
    GreedyIa,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PowerScheme {
    Proposed,
    Epa,
    Mpa,
    Wfpa,
}

impl ChannelScheme {
    pub const ALL: [ChannelScheme; 3] = [ChannelScheme::Proposed, ChannelScheme::Rca, ChannelScheme::GreedyIa];

    pub fn name(self) -> &'static str {
        match self {
            ChannelScheme::Proposed => "PROPOSED",
            ChannelScheme::Rca => "RCA",
            ChannelScheme::GreedyIa => "GREEDY_IA",
        }
    }

    fn code(self) -> u64 {
        self as u64
    }
}

impl PowerScheme {
    pub const ALL: [PowerScheme; 4] = [PowerScheme::Proposed, PowerScheme::Epa, PowerScheme::Mpa, PowerScheme::Wfpa];

    pub fn name(self) -> &'static str {
        match self {
            PowerScheme::Proposed => "PROPOSED",
            PowerScheme::Epa => "EPA",
            PowerScheme::Mpa => "MPA",
            PowerScheme::Wfpa => "WFPA",
        }
    }

    /// Whether the scheme keeps every channel within its CU budget.
    pub fn respects_budget(self) -> bool {
        self != PowerScheme::Mpa
    }

    fn code(self) -> u64 {
        self as u64
    }
}

impl FromStr for ChannelScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown channel scheme `{s}`")))
    }
}

impl FromStr for PowerScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown power scheme `{s}`")))
    }
}

/// One channel scheme paired with one power scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SchemeId {
    pub channel: ChannelScheme,
    pub power: PowerScheme,
}

impl SchemeId {
    pub const PROPOSED: SchemeId = SchemeId::new(ChannelScheme::Proposed, PowerScheme::Proposed);

    pub const fn new(channel: ChannelScheme, power: PowerScheme) -> Self {
        Self { channel, power }
    }

    /// Channel schemes paired with proposed power, then power schemes
    /// paired with proposed channels.
    pub fn comparison_set() -> Vec<SchemeId> {
        let mut v: Vec<SchemeId> = ChannelScheme::ALL
            .into_iter()
            .map(|c| SchemeId::new(c, PowerScheme::Proposed))
            .collect();
        v.extend(
            PowerScheme::ALL[1..]
                .iter()
                .map(|&p| SchemeId::new(ChannelScheme::Proposed, p)),
        );
        v
    }

    /// Parses a comma-separated list of `CHANNEL:POWER` pairs.
    pub fn parse_list(s: &str) -> Result<Vec<SchemeId>> {
        s.split(',')
            .filter(|t| !t.trim().is_empty())
            .map(str::parse)
            .collect()
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.channel.name(), self.power.name())
    }
}

impl FromStr for SchemeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (c, p) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidArgument(format!("scheme `{s}` is not CHANNEL:POWER")))?;
        Ok(SchemeId::new(c.parse()?, p.parse()?))
    }
}

/// Result of a channel scheme on one instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelOutcome {
    pub scheme: ChannelScheme,
    pub channels: Vec<Option<usize>>,
    pub outer_iters: usize,
    pub color_rounds: usize,
    pub trace: Vec<OuterIterRecord>,
}

pub fn run_channel_scheme(
    scheme: ChannelScheme,
    scenario: &CellScenario,
    gains: &GainTable,
    config: &SimConfig,
    candidates: &CandidateChannelSets,
    seed: u64,
) -> Result<ChannelOutcome> {
    let mut rng = stream(stable_hash(&[seed, scheme.code()]), tag::CHANNELS);
    let (channels, outer_iters, color_rounds, trace) = match scheme {
        ChannelScheme::Proposed => {
            let out = allocate_channels_with(scenario, gains, config, candidates.clone(), &mut rng)?;
            (out.channels, out.trace.len(), out.color_rounds, out.trace)
        }
        ChannelScheme::Rca => (rca_channels(candidates, &mut rng), 0, 0, vec![]),
        ChannelScheme::GreedyIa => (greedy_ia_channels(scenario, gains, config, candidates), 0, 0, vec![]),
    };
    Ok(ChannelOutcome {
        scheme,
        channels,
        outer_iters,
        color_rounds,
        trace,
    })
}

/// Result of a power scheme over all channels of one instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerOutcome {
    pub scheme: PowerScheme,
    pub p_g: Vec<f64>,
    /// Window iterations of the slowest channel (0 for non-iterative schemes).
    pub max_iterations: usize,
    /// Per-channel detail, proposed scheme only.
    pub channels: Vec<ChannelPower>,
}

pub fn run_power_scheme(
    scheme: PowerScheme,
    channels: &[Option<usize>],
    scenario: &CellScenario,
    gains: &GainTable,
    config: &SimConfig,
    seed: u64,
) -> PowerOutcome {
    let n_c = scenario.num_cus();
    let mut p_g = vec![0.0; scenario.num_mgs()];
    let mut detail = Vec::new();
    let mut max_iterations = 0;
    for k in 0..n_c {
        let members: Vec<usize> = (0..channels.len()).filter(|&g| channels[g] == Some(k)).collect();
        let powers = match scheme {
            PowerScheme::Proposed => {
                let mut rng = stream(stable_hash(&[seed, k as u64]), tag::POWER);
                let out = allocate_power(k, &members, gains, config, &mut rng);
                max_iterations = max_iterations.max(out.iterations);
                let p = out.powers.clone();
                detail.push(out);
                p
            }
            PowerScheme::Epa => epa_power(k, &members, gains, config),
            PowerScheme::Mpa => mpa_power(&members, config),
            PowerScheme::Wfpa => wfpa_power(k, &members, scenario, gains, config),
        };
        for (&g, p) in members.iter().zip(powers) {
            p_g[g] = p;
        }
    }
    PowerOutcome {
        scheme,
        p_g,
        max_iterations,
        channels: detail,
    }
}

/// A scheme's full outcome on one instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeOutcome {
    pub scheme: SchemeId,
    pub allocation: Allocation,
    pub report: RateReport,
    pub outer_iters: usize,
    pub color_rounds: usize,
    pub power_iters: usize,
    pub excluded: usize,
}

fn power_seed(seed: u64, scheme: SchemeId) -> u64 {
    stable_hash(&[seed, scheme.channel.code(), scheme.power.code()])
}

fn finish(
    scheme: SchemeId,
    ch: &ChannelOutcome,
    pw: &PowerOutcome,
    scenario: &CellScenario,
    gains: &GainTable,
    config: &SimConfig,
) -> Result<SchemeOutcome> {
    let allocation = Allocation::from_channels(&ch.channels, pw.p_g.clone(), scenario.num_cus(), config);
    let report = objective_and_constraints(scenario, gains, &allocation, config)?;
    Ok(SchemeOutcome {
        scheme,
        excluded: ch.channels.iter().filter(|c| c.is_none()).count(),
        allocation,
        report,
        outer_iters: ch.outer_iters,
        color_rounds: ch.color_rounds,
        power_iters: pw.max_iterations,
    })
}

/// One scheme with its channel and power stages kept for inspection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeRun {
    pub channel: ChannelOutcome,
    pub power: PowerOutcome,
    pub outcome: SchemeOutcome,
}

/// Runs a single scheme exactly as [`evaluate_schemes`] would.
pub fn run_scheme(
    scheme: SchemeId,
    scenario: &CellScenario,
    gains: &GainTable,
    config: &SimConfig,
    seed: u64,
) -> Result<SchemeRun> {
    let candidates = candidate_sets(scenario, gains, config);
    let channel = run_channel_scheme(scheme.channel, scenario, gains, config, &candidates, seed)?;
    let power = run_power_scheme(scheme.power, &channel.channels, scenario, gains, config, power_seed(seed, scheme));
    let outcome = finish(scheme, &channel, &power, scenario, gains, config)?;
    Ok(SchemeRun { channel, power, outcome })
}

/// Runs every scheme on the same scenario and gain table. Channel schemes
/// are computed once and shared by all power schemes they pair with.
pub fn evaluate_schemes(
    scenario: &CellScenario,
    gains: &GainTable,
    config: &SimConfig,
    schemes: &[SchemeId],
    seed: u64,
) -> Result<Vec<SchemeOutcome>> {
    let candidates = candidate_sets(scenario, gains, config);
    let mut channel_cache: Vec<ChannelOutcome> = Vec::new();
    let mut out = Vec::with_capacity(schemes.len());
    for &scheme in schemes {
        let ch = match channel_cache.iter().position(|c| c.scheme == scheme.channel) {
            Some(i) => &channel_cache[i],
            None => {
                let c = run_channel_scheme(scheme.channel, scenario, gains, config, &candidates, seed)?;
                channel_cache.push(c);
                channel_cache.last().expect("just pushed")
            }
        };
        let pw = run_power_scheme(scheme.power, &ch.channels, scenario, gains, config, power_seed(seed, scheme));
        out.push(finish(scheme, ch, &pw, scenario, gains, config)?);
    }
    Ok(out)
}
