//! Monte Carlo sweeps over a single configuration axis.

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{build_gain_table, GainTable};
use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::metrics::{C2Violation, RateReport};
use crate::rng::{stable_hash, stream, tag};
use crate::scenario::{generate_scenario, CellScenario};
use crate::schemes::{evaluate_schemes, PowerScheme, SchemeId, SchemeOutcome};

/// Sampled network plus its gain table.
#[derive(Debug, Clone)]
pub struct Instance {
    pub scenario: CellScenario,
    pub gains: GainTable,
}

/// Samples the instance for `seed`, or `None` when it has no CU or no MG.
pub fn sample_instance(config: &SimConfig, seed: u64) -> Result<Option<Instance>> {
    let scenario = generate_scenario(config, seed)?;
    if scenario.is_degenerate() {
        return Ok(None);
    }
    let mut rng = stream(seed, tag::GAINS);
    let gains = build_gain_table(&scenario, config, &mut rng)?;
    Ok(Some(Instance { scenario, gains }))
}

/// Attempts made by [`sample_bounded_instance`] before giving up.
pub const MAX_BOUNDED_ATTEMPTS: u64 = 10_000;

/// Copy of `config` with CU and MG densities lowered (never raised) so the
/// mean counts are at most half of `max_cus` and `max_mgs`. Bounded sampling
/// from the result rarely rejects.
pub fn bounded_config(config: &SimConfig, max_mgs: usize, max_cus: usize) -> SimConfig {
    let area = config.cell_area();
    let mut c = config.clone();
    c.lambda_cu = c.lambda_cu.min(0.5 * max_cus as f64 / area);
    c.lambda_gt = c.lambda_gt.min(0.5 * max_mgs as f64 / area);
    c
}

/// Draws non-degenerate instances from derived seeds until one has at most
/// `max_mgs` MGs and `max_cus` CUs.
pub fn sample_bounded_instance(config: &SimConfig, seed: u64, max_mgs: usize, max_cus: usize) -> Result<Instance> {
    for attempt in 0..MAX_BOUNDED_ATTEMPTS {
        let s = stable_hash(&[seed, attempt]);
        if let Some(inst) = sample_instance(config, s)? {
            if inst.scenario.num_mgs() <= max_mgs && inst.scenario.num_cus() <= max_cus {
                return Ok(inst);
            }
        }
    }
    Err(Error::InvalidArgument(format!(
        "no instance with at most {max_mgs} MGs and {max_cus} CUs in {MAX_BOUNDED_ATTEMPTS} draws"
    )))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    #[serde(rename = "lambda_gt")]
    LambdaGt,
    #[serde(rename = "p_g_max_dbm")]
    PGMaxDbm,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::LambdaGt => "lambda_gt",
            SweepAxis::PGMaxDbm => "p_g_max_dbm",
        }
    }

    /// Copy of `config` with the axis set to `value`.
    pub fn apply(self, config: &SimConfig, value: f64) -> SimConfig {
        let mut c = config.clone();
        match self {
            SweepAxis::LambdaGt => c.lambda_gt = value,
            SweepAxis::PGMaxDbm => c.p_g_max_dbm = value,
        }
        c
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lambda_gt" => Ok(SweepAxis::LambdaGt),
            "p_g_max_dbm" => Ok(SweepAxis::PGMaxDbm),
            _ => Err(Error::InvalidArgument(format!(
                "unknown axis `{s}` (expected lambda_gt or p_g_max_dbm)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub schemes: Vec<SchemeId>,
    pub instances: usize,
    pub base_seed: u64,
    pub workers: usize,
}

impl SweepSpec {
    pub fn validate(&self, config: &SimConfig) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::InvalidArgument("sweep needs at least one axis value".into()));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("axis values must be finite".into()));
        }
        if self.values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("axis values must be strictly increasing".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::InvalidArgument("sweep needs at least one scheme".into()));
        }
        if self.instances == 0 {
            return Err(Error::InvalidArgument("instances must be at least 1".into()));
        }
        for &v in &self.values {
            self.axis.apply(config, v).validate()?;
        }
        Ok(())
    }
}

/// Aggregated statistics for one scheme at one axis value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub axis: SweepAxis,
    pub axis_value: f64,
    pub scheme: SchemeId,
    pub mean_objective_bps: f64,
    pub ci95_bps: f64,
    pub mean_cu_rate_bps: f64,
    pub mean_mg_rate_bps: f64,
    pub violation_rate: f64,
    pub mean_outer_iters: f64,
    pub mean_color_rounds: f64,
    pub mean_power_iters: f64,
    pub excluded_mg_fraction: f64,
    /// Instances evaluated (skipped ones excluded).
    pub instances: usize,
    pub skipped: usize,
}

pub const CSV_HEADER: &str = "axis,axis_value,scheme_channel,scheme_power,mean_objective_bps,ci95_bps,\
mean_cu_rate_bps,mean_mg_rate_bps,violation_rate,mean_outer_iters,mean_color_rounds,mean_power_iters,\
excluded_mg_fraction,instances,skipped";

impl ResultRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.axis.name(),
            fmt_g(self.axis_value),
            self.scheme.channel.name(),
            self.scheme.power.name(),
            fmt_g(self.mean_objective_bps),
            fmt_g(self.ci95_bps),
            fmt_g(self.mean_cu_rate_bps),
            fmt_g(self.mean_mg_rate_bps),
            fmt_g(self.violation_rate),
            fmt_g(self.mean_outer_iters),
            fmt_g(self.mean_color_rounds),
            fmt_g(self.mean_power_iters),
            fmt_g(self.excluded_mg_fraction),
            self.instances,
            self.skipped,
        )
    }
}

/// Formats like C's `%g`: six significant digits, trailing zeros dropped,
/// scientific notation outside `[1e-4, 1e6)`.
pub fn fmt_g(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.5e}");
    let (mant, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let mant = trim_zeros(mant);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mant}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Whether an outcome counts toward the violation rate. Budget-compliant
/// schemes are charged only for MG-side threshold misses, since a CU can sit
/// below its threshold with no MG on its channel; MPA is charged for any miss.
pub fn has_violation(report: &RateReport, power: PowerScheme) -> bool {
    if power.respects_budget() {
        report.c2_violations.iter().any(|v| matches!(v, C2Violation::Mg { .. }))
    } else {
        !report.c2_violations.is_empty()
    }
}

#[derive(Debug, Clone, Default)]
struct Kahan {
    sum: f64,
    c: f64,
}

impl Kahan {
    fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }
}

#[derive(Debug, Clone, Default)]
struct Accumulator {
    n: usize,
    objective: Kahan,
    objective_sq: Kahan,
    cu_rate: Kahan,
    mg_rate: Kahan,
    violations: usize,
    outer_iters: Kahan,
    color_rounds: Kahan,
    power_iters: Kahan,
    excluded: usize,
    mgs: usize,
}

impl Accumulator {
    fn push(&mut self, o: &SchemeOutcome, num_mgs: usize) {
        let obj = o.report.objective;
        self.n += 1;
        self.objective.add(obj);
        self.objective_sq.add(obj * obj);
        self.cu_rate.add(o.report.total_cu_rate());
        self.mg_rate.add(o.report.total_mg_rate());
        self.violations += has_violation(&o.report, o.scheme.power) as usize;
        self.outer_iters.add(o.outer_iters as f64);
        self.color_rounds.add(o.color_rounds as f64);
        self.power_iters.add(o.power_iters as f64);
        self.excluded += o.excluded;
        self.mgs += num_mgs;
    }

    fn row(&self, axis: SweepAxis, value: f64, scheme: SchemeId, skipped: usize) -> ResultRow {
        let n = self.n as f64;
        let mean = self.objective.sum / n;
        let ci95 = if self.n > 1 {
            let var = ((self.objective_sq.sum - n * mean * mean) / (n - 1.0)).max(0.0);
            1.96 * var.sqrt() / n.sqrt()
        } else {
            0.0
        };
        ResultRow {
            axis,
            axis_value: value,
            scheme,
            mean_objective_bps: mean,
            ci95_bps: ci95,
            mean_cu_rate_bps: self.cu_rate.sum / n,
            mean_mg_rate_bps: self.mg_rate.sum / n,
            violation_rate: self.violations as f64 / n,
            mean_outer_iters: self.outer_iters.sum / n,
            mean_color_rounds: self.color_rounds.sum / n,
            mean_power_iters: self.power_iters.sum / n,
            excluded_mg_fraction: if self.mgs > 0 { self.excluded as f64 / self.mgs as f64 } else { 0.0 },
            instances: self.n,
            skipped,
        }
    }
}

/// Seed of instance `i` at axis value `value`.
pub fn instance_seed(base_seed: u64, value: f64, i: usize) -> u64 {
    stable_hash(&[base_seed, value.to_bits(), i as u64])
}

/// Per-instance outcomes, `None` for skipped instances, in index order.
pub type PointOutcomes = Vec<Option<(usize, Vec<SchemeOutcome>)>>;

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start {workers} workers: {e}")))
}

/// Evaluates every instance at one axis value. Outcomes are returned in
/// instance order regardless of the worker count.
pub fn evaluate_point(config: &SimConfig, spec: &SweepSpec, value: f64) -> Result<PointOutcomes> {
    let cfg = spec.axis.apply(config, value);
    let pool = thread_pool(spec.workers)?;
    let eval = |i: usize| -> Result<Option<(usize, Vec<SchemeOutcome>)>> {
        let seed = instance_seed(spec.base_seed, value, i);
        let Some(inst) = sample_instance(&cfg, seed)? else {
            return Ok(None);
        };
        let outcomes = evaluate_schemes(&inst.scenario, &inst.gains, &cfg, &spec.schemes, seed)?;
        Ok(Some((inst.scenario.num_mgs(), outcomes)))
    };
    let results: Vec<Result<_>> = pool.install(|| (0..spec.instances).into_par_iter().map(eval).collect());
    results
        .into_iter()
        .collect::<Result<Vec<_>>>()
        .map_err(|e| Error::Point {
            axis: spec.axis.name().into(),
            value,
            source: Box::new(e),
        })
}

/// One row per scheme at one axis value.
pub fn run_point(config: &SimConfig, spec: &SweepSpec, value: f64) -> Result<Vec<ResultRow>> {
    let outcomes = evaluate_point(config, spec, value)?;
    let skipped = outcomes.iter().filter(|o| o.is_none()).count();
    if 2 * skipped > spec.instances {
        return Err(Error::TooManySkips {
            axis: spec.axis.name().into(),
            value,
            skipped,
            instances: spec.instances,
        });
    }
    let mut acc = vec![Accumulator::default(); spec.schemes.len()];
    for (num_mgs, per_scheme) in outcomes.iter().flatten() {
        for (a, o) in acc.iter_mut().zip(per_scheme) {
            a.push(o, *num_mgs);
        }
    }
    Ok(spec
        .schemes
        .iter()
        .zip(&acc)
        .map(|(&s, a)| a.row(spec.axis, value, s, skipped))
        .collect())
}

pub fn run_sweep(config: &SimConfig, spec: &SweepSpec) -> Result<Vec<ResultRow>> {
    config.validate()?;
    spec.validate(config)?;
    let mut rows = Vec::new();
    for &v in &spec.values {
        log::info!("{} = {}", spec.axis.name(), v);
        rows.extend(run_point(config, spec, v)?);
    }
    Ok(rows)
}

pub fn rows_to_csv(rows: &[ResultRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{}", r.csv_line());
    }
    out
}
