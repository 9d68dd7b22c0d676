//! Link gains: distance power law, log-normal shadowing and Rayleigh fading.
//!
//! Shadowing is drawn once per (transmitter, receiver) pair and shared by all
//! channels; fading is drawn independently per channel.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::Serialize;

use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::scenario::{distance, CellScenario, Point};

/// Distances below this are clamped when building a gain table.
pub const MIN_LINK_DISTANCE_M: f64 = 0.1;

/// `d^-α · 10^(shadow/10) · fading`.
pub fn link_gain(tx: Point, rx: Point, shadow_db: f64, fading: f64, config: &SimConfig) -> Result<f64> {
    gain_at_distance(distance(tx, rx), shadow_db, fading, config.pathloss_exp)
}

fn gain_at_distance(d: f64, shadow_db: f64, fading: f64, alpha: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::ZeroDistance);
    }
    if !(fading > 0.0) {
        return Err(Error::InvalidArgument(format!("fading sample must be > 0, got {fading}")));
    }
    Ok(d.powf(-alpha) * 10f64.powf(shadow_db / 10.0) * fading)
}

/// Per-channel linear gains of every link the SINR expressions use.
///
/// Indexing: `k` is a CU/channel index, `g`/`j` are MG indices and `r` a
/// receiver index within its group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainTable {
    /// `h_cb[k]`: CU k to the base station on channel k.
    pub h_cb: Vec<f64>,
    /// `h_gb[g][k]`: MG transmitter g to the base station on channel k.
    pub h_gb: Vec<Vec<f64>>,
    /// `h_gr[j][g][r][k]`: MG transmitter j to receiver r of group g on channel k.
    pub h_gr: Vec<Vec<Vec<Vec<f64>>>>,
    /// `h_cr[k][g][r]`: CU k to receiver r of group g on channel k.
    pub h_cr: Vec<Vec<Vec<f64>>>,
    /// Fading-free gain `ls_gr[j][g][r]` of the transmitter-to-receiver links.
    #[serde(skip)]
    pub ls_gr: Vec<Vec<Vec<f64>>>,
    /// Fading-free gain `ls_gb[g]` of MG transmitter g to the base station.
    #[serde(skip)]
    pub ls_gb: Vec<f64>,
    /// Links whose endpoints were closer than [`MIN_LINK_DISTANCE_M`].
    #[serde(skip)]
    pub clamped_links: usize,
}

impl GainTable {
    pub fn num_channels(&self) -> usize {
        self.h_cb.len()
    }

    pub fn num_mgs(&self) -> usize {
        self.h_gb.len()
    }

    /// Index of the receiver of group `g` with the weakest large-scale serving gain.
    pub fn worst_receiver(&self, g: usize) -> usize {
        let serving = &self.ls_gr[g][g];
        (0..serving.len())
            .min_by(|&a, &b| serving[a].total_cmp(&serving[b]))
            .expect("groups are nonempty")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("gain table serializes")
    }
}

struct LinkSampler<'a, R> {
    config: &'a SimConfig,
    n_channels: usize,
    rng: &'a mut R,
    clamped: usize,
}

impl<R: Rng> LinkSampler<'_, R> {
    /// Returns the large-scale gain and one faded gain per channel.
    fn sample(&mut self, tx: Point, rx: Point) -> (f64, Vec<f64>) {
        let mut d = distance(tx, rx);
        if d < MIN_LINK_DISTANCE_M {
            log::debug!("clamping link distance {d} m to {MIN_LINK_DISTANCE_M} m");
            self.clamped += 1;
            d = MIN_LINK_DISTANCE_M;
        }
        let z: f64 = StandardNormal.sample(self.rng);
        let shadow_db = self.config.shadow_sigma_db * z;
        let alpha = self.config.pathloss_exp;
        let large = gain_at_distance(d, shadow_db, 1.0, alpha).expect("clamped distance is positive");
        let faded = (0..self.n_channels)
            .map(|_| {
                let f: f64 = Exp1.sample(self.rng);
                // Exp1 can return exactly 0 with negligible probability
                large * f.max(f64::MIN_POSITIVE)
            })
            .collect();
        (large, faded)
    }

    /// Large-scale gain plus the faded gain on channel `k` only.
    fn sample_on(&mut self, tx: Point, rx: Point, k: usize) -> f64 {
        let (_, faded) = self.sample(tx, rx);
        faded[k]
    }
}

/// Builds the gain table for `scenario`; deterministic for a fixed rng state.
pub fn build_gain_table<R: Rng>(scenario: &CellScenario, config: &SimConfig, rng: &mut R) -> Result<GainTable> {
    if scenario.is_degenerate() {
        return Err(Error::InvalidArgument(
            "gain table needs at least one CU and one MG".into(),
        ));
    }
    let n_c = scenario.num_cus();
    let n_p = scenario.num_mgs();
    let bs = scenario.bs_position;
    let mut s = LinkSampler {
        config,
        n_channels: n_c,
        rng,
        clamped: 0,
    };

    let h_cb = scenario
        .cu_positions
        .iter()
        .enumerate()
        .map(|(k, &cu)| s.sample_on(cu, bs, k))
        .collect();

    let mut ls_gb = Vec::with_capacity(n_p);
    let mut h_gb = Vec::with_capacity(n_p);
    for &tx in &scenario.mgtx_positions {
        let (large, faded) = s.sample(tx, bs);
        ls_gb.push(large);
        h_gb.push(faded);
    }

    let mut h_gr = Vec::with_capacity(n_p);
    let mut ls_gr = Vec::with_capacity(n_p);
    for &tx in &scenario.mgtx_positions {
        let mut per_group = Vec::with_capacity(n_p);
        let mut ls_group = Vec::with_capacity(n_p);
        for group in &scenario.mgrx_positions {
            let (ls, faded): (Vec<f64>, Vec<Vec<f64>>) = group.iter().map(|&rx| s.sample(tx, rx)).unzip();
            per_group.push(faded);
            ls_group.push(ls);
        }
        h_gr.push(per_group);
        ls_gr.push(ls_group);
    }

    let h_cr = scenario
        .cu_positions
        .iter()
        .enumerate()
        .map(|(k, &cu)| {
            scenario
                .mgrx_positions
                .iter()
                .map(|group| group.iter().map(|&rx| s.sample_on(cu, rx, k)).collect())
                .collect()
        })
        .collect();

    let clamped_links = s.clamped;
    Ok(GainTable {
        h_cb,
        h_gb,
        h_gr,
        h_cr,
        ls_gr,
        ls_gb,
        clamped_links,
    })
}
