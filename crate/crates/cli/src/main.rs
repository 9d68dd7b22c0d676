use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use d2dsim::harness::{bounded_config, rows_to_csv, run_sweep, sample_bounded_instance, sample_instance, SweepAxis, SweepSpec};
use d2dsim::metrics::objective_and_constraints;
use d2dsim::oracle::{brute_force_optimum, grid_rounded, C3Mode, MAX_GRID_LEVELS, MAX_ORACLE_CUS, MAX_ORACLE_MGS};
use d2dsim::rng::stable_hash;
use d2dsim::schemes::{evaluate_schemes, run_scheme, SchemeId};
use d2dsim::{Error, SimConfig};

#[derive(Debug, Parser)]
#[command(name = "d2dsim", version, about = "D2D multicast underlay resource allocation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a Monte Carlo sweep and write CSV.
    Sweep(SweepArgs),
    /// Run one instance and dump scenario, gains, traces and the rate report.
    Single(SingleArgs),
    /// Compare every scheme against the exhaustive optimum on a small instance.
    Oracle(OracleArgs),
    /// Check a configuration and exit.
    ValidateConfig(ConfigArgs),
}

#[derive(Debug, Args)]
struct ConfigArgs {
    /// JSON configuration file; omitted keys keep their defaults.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override one configuration key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, value_parser = parse_axis)]
    axis: SweepAxis,
    /// Comma-separated, strictly increasing axis values.
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
    values: Vec<f64>,
    /// Comma-separated CHANNEL:POWER pairs; defaults to the comparison set.
    #[arg(long, value_parser = parse_scheme, value_delimiter = ',', num_args = 1..)]
    schemes: Option<Vec<SchemeId>>,
    #[arg(long, default_value_t = 500)]
    instances: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, env = "D2DSIM_WORKERS")]
    workers: Option<usize>,
    /// CSV destination; stdout when omitted.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SingleArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Scheme whose channel and power traces are dumped.
    #[arg(long, value_parser = parse_scheme, default_value = "PROPOSED:PROPOSED")]
    scheme: SchemeId,
    /// Output directory (created; must not already hold files).
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 2)]
    max_mgs: usize,
    #[arg(long, default_value_t = 2)]
    max_cus: usize,
    /// Number of evenly spaced power levels from 0 to the MG maximum.
    #[arg(long, default_value_t = 6)]
    levels: usize,
    /// Require every MG to hold a channel.
    #[arg(long)]
    strict_c3: bool,
    /// Write the optimum as JSON.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

fn parse_axis(s: &str) -> Result<SweepAxis, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_scheme(s: &str) -> Result<SchemeId, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// A failure carrying its process exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        let code = match error.downcast_ref::<Error>() {
            Some(Error::UnknownKey(_) | Error::MalformedValue { .. }) => 2,
            _ => 1,
        };
        Self { code, error }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        anyhow::Error::new(e).into()
    }
}

fn load_config(args: &ConfigArgs) -> Result<SimConfig, Failure> {
    let mut config = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read config {}", path.display()))?;
            SimConfig::from_json(&text)?
        }
        None => SimConfig::default(),
    };
    for o in &args.overrides {
        config.apply_override(o)?;
    }
    config.validate()?;
    Ok(config)
}

/// Writes `contents` next to `path` and renames it into place.
fn write_atomic(path: &Path, contents: &[u8]) -> anyhow::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("cannot create a temporary file in {}", dir.display()))?;
    tmp.write_all(contents)?;
    tmp.persist(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<(), Failure> {
    let config = load_config(&args.config)?;
    let workers = args
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, usize::from));
    if workers == 0 {
        return Err(anyhow::anyhow!("--workers must be at least 1").into());
    }
    let spec = SweepSpec {
        axis: args.axis,
        values: args.values,
        schemes: args.schemes.unwrap_or_else(SchemeId::comparison_set),
        instances: args.instances,
        base_seed: args.seed,
        workers,
    };
    let rows = run_sweep(&config, &spec)?;
    let csv = rows_to_csv(&rows);
    match &args.out {
        Some(path) => write_atomic(path, csv.as_bytes())?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn single(args: SingleArgs) -> Result<(), Failure> {
    let config = load_config(&args.config)?;
    let Some(inst) = sample_instance(&config, args.seed)? else {
        return Err(anyhow::anyhow!("seed {} gives an instance with no CU or no MG", args.seed).into());
    };
    let (scenario, gains) = (&inst.scenario, &inst.gains);
    let scheme = args.scheme;
    let run = run_scheme(scheme, scenario, gains, &config, args.seed)?;
    let (channel, power, outcome) = (&run.channel, &run.power, &run.outcome);

    let channel_trace: String = channel
        .trace
        .iter()
        .map(|r| serde_json::to_string(r).expect("trace record serializes") + "\n")
        .collect();
    let power_trace: String = power
        .channels
        .iter()
        .flat_map(|c| {
            c.trace.iter().map(move |r| {
                let mut v = serde_json::to_value(r).expect("trace record serializes");
                v["channel"] = c.channel.into();
                v.to_string() + "\n"
            })
        })
        .collect();
    let report = serde_json::json!({
        "scheme": scheme.to_string(),
        "seed": args.seed,
        "channels": outcome.allocation.channels(),
        "p_g_mw": outcome.allocation.p_g,
        "excluded": outcome.excluded,
        "report": outcome.report,
    });

    let out = &args.out;
    if out.exists() && fs::read_dir(out).map(|mut d| d.next().is_some()).unwrap_or(true) {
        return Err(anyhow::anyhow!("output directory {} exists and is not empty", out.display()).into());
    }
    let parent = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let staging = tempfile::Builder::new()
        .prefix(".d2dsim-single")
        .tempdir_in(&parent)
        .with_context(|| format!("cannot stage output in {}", parent.display()))?;
    let files = [
        ("scenario.json", scenario.to_json()),
        ("gains.json", gains.to_json()),
        ("channel_trace.jsonl", channel_trace),
        ("power_trace.jsonl", power_trace),
        ("report.json", serde_json::to_string_pretty(&report).expect("report serializes")),
    ];
    for (name, body) in files {
        fs::write(staging.path().join(name), body).with_context(|| format!("cannot write {name}"))?;
    }
    if out.exists() {
        fs::remove_dir(out).with_context(|| format!("cannot replace {}", out.display()))?;
    }
    let staged = staging.keep();
    fs::rename(&staged, out).with_context(|| format!("cannot move output to {}", out.display()))?;
    println!(
        "{}: objective {:.6e} bit/s, {} MGs, {} CUs -> {}",
        scheme,
        outcome.report.objective,
        scenario.num_mgs(),
        scenario.num_cus(),
        out.display()
    );
    Ok(())
}

fn oracle(args: OracleArgs) -> Result<(), Failure> {
    let config = load_config(&args.config)?;
    if args.max_mgs == 0 || args.max_mgs > MAX_ORACLE_MGS || args.max_cus == 0 || args.max_cus > MAX_ORACLE_CUS {
        return Err(anyhow::anyhow!(
            "--max-mgs must be in 1..={MAX_ORACLE_MGS} and --max-cus in 1..={MAX_ORACLE_CUS}"
        )
        .into());
    }
    if args.levels < 2 || args.levels > MAX_GRID_LEVELS {
        return Err(anyhow::anyhow!("--levels must be in 2..={MAX_GRID_LEVELS}").into());
    }
    let p_max = config.p_g_max_mw();
    let grid: Vec<f64> = (0..args.levels)
        .map(|i| p_max * i as f64 / (args.levels - 1) as f64)
        .collect();
    let small = bounded_config(&config, args.max_mgs, args.max_cus);
    let inst = sample_bounded_instance(&small, args.seed, args.max_mgs, args.max_cus)?;
    let (scenario, gains) = (&inst.scenario, &inst.gains);
    let mode = if args.strict_c3 { C3Mode::Strict } else { C3Mode::Relaxed };
    let best = brute_force_optimum(scenario, gains, &config, &grid, mode)?;

    println!(
        "instance: {} MGs, {} CUs, {} power levels, {} feasible assignments",
        scenario.num_mgs(),
        scenario.num_cus(),
        grid.len(),
        best.evaluated
    );
    println!("{:<22} {:>14} {:>8}", "scheme", "objective_bps", "ratio");
    println!("{:<22} {:>14.6e} {:>8.4}", "OPTIMUM", best.objective_bps, 1.0);
    let schemes = SchemeId::comparison_set();
    let outcomes = evaluate_schemes(scenario, gains, &config, &schemes, stable_hash(&[args.seed, 0x0AC1E]))?;
    for o in &outcomes {
        let rounded = grid_rounded(&o.allocation, &grid);
        let objective = objective_and_constraints(scenario, gains, &rounded, &config)?.objective;
        let ratio = objective / best.objective_bps;
        let note = if o.scheme.power.respects_budget() { "" } else { "  (ignores CU budget)" };
        println!("{:<22} {:>14.6e} {:>8.4}{note}", o.scheme.to_string(), objective, ratio);
        if o.scheme == SchemeId::PROPOSED && !(ratio > 0.0 && ratio <= 1.0 + 1e-12) {
            return Err(anyhow::anyhow!("proposed/optimum ratio {ratio} outside (0, 1]").into());
        }
    }
    if let Some(path) = &args.out {
        write_atomic(path, best.to_json().as_bytes())?;
    }
    Ok(())
}

fn validate_config(args: ConfigArgs) -> Result<(), Failure> {
    load_config(&args)?;
    println!("configuration is valid");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sweep(a) => sweep(a),
        Command::Single(a) => single(a),
        Command::Oracle(a) => oracle(a),
        Command::ValidateConfig(a) => validate_config(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
