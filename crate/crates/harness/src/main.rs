use std::collections::HashMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hibb_core::MasterSeed;
use hibb_harness::report::{reports_json, run_csv, summarize_sweep_point, sweep_csv};
use hibb_harness::verify::{run_suite, Suite};
use hibb_harness::workload::{AllocatorKind, ChurnMode, WorkloadSpec};
use hibb_harness::{run_workload, RunReport};

/// Default seed when neither --seed, config, nor HIBB_SEED provide one.
const DEFAULT_SEED_HEX: &str = "7d9f3c0a55e1b24868d0c4f6a2917e3b5c8d10f24467a9eb0d3f5c7a92e14b68";
const SEED_ENV: &str = "HIBB_SEED";

#[derive(Parser)]
#[command(
    name = "hibb",
    about = "History-independent two-choice allocation harness",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a workload and emit per-operation measurements.
    Run(RunArgs),
    /// Run one workload per density and emit one summary row each.
    Sweep(SweepArgs),
    /// Execute an invariant verification suite.
    Verify(VerifyArgs),
    /// Compare the component orienter against the exhaustive oracle.
    OrientOracle(OrientArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Bin count.
    #[arg(long)]
    n: Option<usize>,
    /// Density m/n; capacity is mu * n unless --m is given.
    #[arg(long)]
    mu: Option<u64>,
    /// Capacity (overrides --mu).
    #[arg(long)]
    m: Option<usize>,
    /// 64 hex characters; defaults to $HIBB_SEED, then a built-in constant.
    #[arg(long)]
    seed: Option<String>,
    /// Flat key=value config file; flags take precedence over file entries.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Allocator: single | hi-greedy | slice-spread | full.
    #[arg(long)]
    alloc: Option<String>,
    /// Number of insert/delete operations.
    #[arg(long)]
    ops: Option<usize>,
    /// Churn mode: uniform-churn | reinsertion-heavy | sliding-window.
    #[arg(long)]
    churn: Option<String>,
    /// Independent trials (parallelized, one derived seed each).
    #[arg(long)]
    trials: Option<usize>,
    /// Snapshot cadence in operations.
    #[arg(long)]
    snapshot_every: Option<usize>,
    /// Recycled-id pool size for reinsertion-heavy churn.
    #[arg(long)]
    pool: Option<usize>,
    /// Write per-operation CSV here ("-" for stdout).
    #[arg(long)]
    csv: Option<String>,
    /// Write the full JSON report here ("-" for stdout).
    #[arg(long)]
    json: Option<String>,
    /// Write the final state's pipeline diagnostics (census, fail sets, swap
    /// failures, dummy inventory) as JSON here.
    #[arg(long)]
    dump_diag: Option<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    alloc: Option<String>,
    /// Comma-separated density list, e.g. 16,64,256.
    #[arg(long)]
    mus: Option<String>,
    #[arg(long)]
    ops: Option<usize>,
    #[arg(long)]
    churn: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    csv: Option<String>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Suite: hi | greedy-neighbor | two-worlds | accounting | f-safety |
    /// orient-oracle | all.
    #[arg(long)]
    suite: String,
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Args)]
struct OrientArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Number of random components to compare against the oracle.
    #[arg(long, default_value_t = 1000)]
    cases: usize,
    /// Maximum edges per sampled component.
    #[arg(long, default_value_t = 10)]
    max_edges: usize,
}

struct Resolved {
    file: HashMap<String, String>,
}

impl Resolved {
    fn load(path: &Option<PathBuf>) -> Result<Self, String> {
        let mut file = HashMap::new();
        if let Some(p) = path {
            let text = std::fs::read_to_string(p)
                .map_err(|e| format!("cannot read config {}: {e}", p.display()))?;
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (k, v) = line
                    .split_once('=')
                    .ok_or_else(|| format!("config line {}: expected key=value", lineno + 1))?;
                file.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        Ok(Resolved { file })
    }

    fn get<T: std::str::FromStr>(
        &self,
        key: &str,
        flag: Option<T>,
        default: T,
    ) -> Result<T, String> {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.file.get(key) {
            Some(raw) => raw
                .parse()
                .map_err(|_| format!("config key {key}: cannot parse {raw:?}")),
            None => Ok(default),
        }
    }

    fn get_str(&self, key: &str, flag: Option<String>, default: &str) -> String {
        flag.or_else(|| self.file.get(key).cloned())
            .unwrap_or_else(|| default.to_string())
    }

    fn seed(&self, flag: Option<String>) -> Result<MasterSeed, String> {
        let hex = flag
            .or_else(|| self.file.get("seed").cloned())
            .or_else(|| std::env::var(SEED_ENV).ok())
            .unwrap_or_else(|| DEFAULT_SEED_HEX.to_string());
        MasterSeed::from_hex(&hex).map_err(|e| e.to_string())
    }
}

fn geometry(
    r: &Resolved,
    c: &CommonArgs,
    default_n: usize,
    default_mu: u64,
) -> Result<(usize, usize, u64), String> {
    let n = r.get("n", c.n, default_n)?;
    let mu = r.get("mu", c.mu, default_mu)?;
    let m = r.get("m", c.m, n * mu as usize)?;
    if n == 0 || m == 0 {
        return Err("n and m must be positive".into());
    }
    Ok((n, m, (m / n) as u64))
}

fn write_output(target: &str, content: &str) -> Result<(), String> {
    if target == "-" {
        print!("{content}");
        Ok(())
    } else {
        std::fs::write(target, content).map_err(|e| format!("cannot write {target}: {e}"))
    }
}

fn build_spec(r: &Resolved, args: &RunArgs) -> Result<WorkloadSpec, String> {
    let (n, m, _) = geometry(r, &args.common, 256, 16)?;
    let alloc_name = r.get_str("alloc", args.alloc.clone(), "full");
    let allocator = AllocatorKind::parse(&alloc_name)
        .ok_or_else(|| format!("unknown allocator {alloc_name:?}"))?;
    let churn_name = r.get_str("churn", args.churn.clone(), "uniform-churn");
    let churn = ChurnMode::parse(&churn_name)
        .ok_or_else(|| format!("unknown churn mode {churn_name:?}"))?;
    let seed = r.seed(args.common.seed.clone())?;
    let ops = r.get("ops", args.ops, 256)?;
    let mut spec = WorkloadSpec::new(n, m, allocator, ops, seed).map_err(|e| e.to_string())?;
    spec.churn = churn;
    spec.trials = r.get("trials", args.trials, 1)?;
    spec.snapshot_every = r.get("snapshot_every", args.snapshot_every, 16)?;
    spec.recycle_pool = r.get("pool", args.pool, 64)?;
    if spec.trials == 0 || spec.snapshot_every == 0 {
        return Err("trials and snapshot_every must be positive".into());
    }
    Ok(spec)
}

fn cmd_run(args: RunArgs) -> Result<(), String> {
    let r = Resolved::load(&args.common.config)?;
    let spec = build_spec(&r, &args)?;
    let reports: Vec<RunReport> = run_workload(&spec).map_err(|e| e.to_string())?;

    match (&args.csv, &args.json) {
        (None, None) => print!("{}", run_csv(&reports)),
        _ => {
            if let Some(target) = &args.csv {
                write_output(target, &run_csv(&reports))?;
            }
            if let Some(target) = &args.json {
                write_output(target, &reports_json(&reports))?;
            }
        }
    }
    if let Some(target) = &args.dump_diag {
        let dump = final_state_dump(&spec).map_err(|e| e.to_string())?;
        write_output(target, &dump)?;
    }
    let agg = summarize_sweep_point(&reports);
    eprintln!(
        "{}: trials={} mean_recourse={:.3} p95={} max={} median_overload={:.3}",
        agg.run_id,
        agg.trials,
        agg.mean_recourse,
        agg.p95_recourse,
        agg.max_recourse,
        agg.median_overload
    );
    Ok(())
}

/// Pipeline diagnostics of trial 0's final set.
fn final_state_dump(spec: &WorkloadSpec) -> Result<String, hibb_core::Error> {
    use hibb_harness::workload::{generate_trace, TraceOp};
    let cfg = hibb_core::Config::new(spec.n, spec.m)?;
    let oracle = hibb_core::RandomOracle::new(spec.seed.derive("trial", 0));
    let trace = generate_trace(spec, 0);
    let mut live = trace.initial.clone();
    for op in &trace.ops {
        match *op {
            TraceOp::Insert(b) => {
                live.insert(b);
            }
            TraceOp::Delete(b) => {
                live.remove(b);
            }
        }
    }
    hibb_core::post::diagnostic_dump(&live, &cfg, &oracle)
}

fn cmd_sweep(args: SweepArgs) -> Result<(), String> {
    let r = Resolved::load(&args.common.config)?;
    let (n, _, _) = geometry(&r, &args.common, 256, 16)?;
    let alloc_name = r.get_str("alloc", args.alloc.clone(), "full");
    let allocator = AllocatorKind::parse(&alloc_name)
        .ok_or_else(|| format!("unknown allocator {alloc_name:?}"))?;
    let churn_name = r.get_str("churn", args.churn.clone(), "uniform-churn");
    let churn = ChurnMode::parse(&churn_name)
        .ok_or_else(|| format!("unknown churn mode {churn_name:?}"))?;
    let seed = r.seed(args.common.seed.clone())?;
    let mus_raw = r.get_str("mus", args.mus.clone(), "16,64,256");
    let mus: Vec<u64> = mus_raw
        .split(',')
        .map(|s| s.trim().parse().map_err(|_| format!("bad mu {s:?}")))
        .collect::<Result<_, String>>()?;
    let ops = r.get("ops", args.ops, 128)?;
    let trials = r.get("trials", args.trials, 4)?;

    let mut rows = Vec::new();
    for mu in mus {
        let mut spec = WorkloadSpec::new(n, n * mu as usize, allocator, ops, seed)
            .map_err(|e| e.to_string())?;
        spec.churn = churn;
        spec.trials = trials;
        let reports = run_workload(&spec).map_err(|e| e.to_string())?;
        rows.push(summarize_sweep_point(&reports));
    }
    let csv = sweep_csv(&rows);
    match &args.csv {
        Some(target) => write_output(target, &csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> Result<bool, String> {
    let r = Resolved::load(&args.common.config)?;
    let suites =
        Suite::parse(&args.suite).ok_or_else(|| format!("unknown suite {:?}", args.suite))?;
    let seed = r.seed(args.common.seed.clone())?;
    let mut all_pass = true;
    for suite in suites {
        let (dn, dmu, dt) = match suite {
            Suite::Hi => (256, 16, 50),
            Suite::GreedyNeighbor => (128, 16, 200),
            Suite::TwoWorlds => (256, 16, 200),
            Suite::Accounting => (64, 16, 20),
            Suite::FSafety => (512, 128, 50),
            Suite::OrientOracle => (8, 4, 10),
        };
        let (n, _, mu) = geometry(&r, &args.common, dn, dmu)?;
        let trials = r.get("trials", args.trials, dt)?;
        let outcome = run_suite(suite, n, mu, trials, &seed).map_err(|e| e.to_string())?;
        println!(
            "{:<16} {} {}",
            outcome.suite,
            if outcome.pass { "PASS" } else { "FAIL" },
            outcome.detail
        );
        all_pass &= outcome.pass;
    }
    Ok(all_pass)
}

fn cmd_orient(args: OrientArgs) -> Result<bool, String> {
    let r = Resolved::load(&args.common.config)?;
    let seed = r.seed(args.common.seed.clone())?;
    let outcome = hibb_harness::verify::orientation_oracle(args.cases, args.max_edges, &seed)
        .map_err(|e| e.to_string())?;
    println!(
        "{:<16} {} {}",
        outcome.suite,
        if outcome.pass { "PASS" } else { "FAIL" },
        outcome.detail
    );
    Ok(outcome.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args).map(|()| true),
        Command::Sweep(args) => cmd_sweep(args).map(|()| true),
        Command::Verify(args) => cmd_verify(args),
        Command::OrientOracle(args) => cmd_orient(args),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
