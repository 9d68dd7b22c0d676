//! Network instance generation.
//!
//! CUs and MG transmitters are homogeneous Poisson point processes over the
//! cell disc. Each MG transmitter is the parent of a Matérn cluster: a
//! Poisson number of receivers placed uniformly in the disc of radius `d_r`
//! around it (and inside the cell).

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::rng::{stream, tag};

/// A position in meters, `[x, y]`, with the base station at the origin.
pub type Point = [f64; 2];

pub fn distance(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellScenario {
    pub cu_positions: Vec<Point>,
    pub mgtx_positions: Vec<Point>,
    /// Receivers of each MG, in MG order.
    pub mgrx_positions: Vec<Vec<Point>>,
    pub bs_position: Point,
    pub seed: u64,
    /// Receiver draws that came up empty and were redrawn.
    pub receiver_resamples: usize,
}

impl CellScenario {
    pub fn num_cus(&self) -> usize {
        self.cu_positions.len()
    }

    pub fn num_mgs(&self) -> usize {
        self.mgtx_positions.len()
    }

    pub fn group_size(&self, g: usize) -> usize {
        self.mgrx_positions[g].len()
    }

    /// True when the instance has no CU or no MG; the harness skips these.
    pub fn is_degenerate(&self) -> bool {
        self.cu_positions.is_empty() || self.mgtx_positions.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }
}

/// Draws a Poisson count with mean `density * area`.
pub fn sample_poisson_count<R: Rng + ?Sized>(density: f64, area: f64, rng: &mut R) -> Result<usize> {
    if !(density >= 0.0) || !(area >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "poisson count needs density >= 0 and area >= 0, got {density} and {area}"
        )));
    }
    let mean = density * area;
    if mean == 0.0 {
        return Ok(0);
    }
    let poisson = Poisson::new(mean)
        .map_err(|e| Error::InvalidArgument(format!("poisson mean {mean}: {e}")))?;
    Ok(poisson.sample(rng) as usize)
}

/// Uniform point in the disc of `radius` around `center`.
pub fn uniform_in_disc<R: Rng + ?Sized>(center: Point, radius: f64, rng: &mut R) -> Point {
    let r = radius * rng.random::<f64>().sqrt();
    let theta = std::f64::consts::TAU * rng.random::<f64>();
    [center[0] + r * theta.cos(), center[1] + r * theta.sin()]
}

/// Samples one network instance. Identical `(config, seed)` pairs give
/// identical scenarios.
pub fn generate_scenario(config: &SimConfig, seed: u64) -> Result<CellScenario> {
    config.validate()?;
    let mut rng = stream(seed, tag::SCENARIO);
    let bs = [0.0, 0.0];
    let radius = config.cell_radius;

    let n_cu = sample_poisson_count(config.lambda_cu, config.cell_area(), &mut rng)?;
    let cu_positions = (0..n_cu).map(|_| uniform_in_disc(bs, radius, &mut rng)).collect();

    let n_mg = sample_poisson_count(config.lambda_gt, config.cell_area(), &mut rng)?;
    let mgtx_positions: Vec<Point> = (0..n_mg).map(|_| uniform_in_disc(bs, radius, &mut rng)).collect();

    let mut receiver_resamples = 0;
    let mut mgrx_positions = Vec::with_capacity(n_mg);
    for &tx in &mgtx_positions {
        let count = if config.lambda_gr > 0.0 {
            loop {
                let c = sample_poisson_count(config.lambda_gr, config.cluster_area(), &mut rng)?;
                if c > 0 {
                    break c;
                }
                receiver_resamples += 1;
            }
        } else {
            // an empty child process can never be resampled into a receiver
            1
        };
        let group = (0..count)
            .map(|_| loop {
                let p = uniform_in_disc(tx, config.d_r, &mut rng);
                if distance(p, bs) <= radius {
                    break p;
                }
            })
            .collect();
        mgrx_positions.push(group);
    }

    Ok(CellScenario {
        cu_positions,
        mgtx_positions,
        mgrx_positions,
        bs_position: bs,
        seed,
        receiver_resamples,
    })
}
