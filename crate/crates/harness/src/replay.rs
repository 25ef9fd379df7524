//! Trace replay: recompute the allocation after every operation, record the
//! recourse against the previous allocation, and sample load metrics.

use serde::Serialize;

use hibb_core::greedy::{allocate_hi_greedy, allocate_single_choice};
use hibb_core::post::{full_allocate, FullDiagnostics};
use hibb_core::slice_spread::{allocate_slice_spread, RoundDiagnostics};
use hibb_core::{recourse, Allocation, BallSet, Config, Error, Exact, RandomOracle, Scalar};

use crate::stats::{mean, percentile};
use crate::workload::{generate_trace, AllocatorKind, TraceOp, WorkloadSpec};

#[derive(Debug, Clone, Serialize)]
pub struct Snapshot {
    pub op_index: usize,
    pub overload: f64,
    pub cumulative_overload: f64,
    pub max_load: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub mean_recourse: f64,
    pub p50_recourse: u64,
    pub p95_recourse: u64,
    pub max_recourse: u64,
    pub final_overload: f64,
    pub final_cumulative_overload: f64,
    pub final_max_load: u64,
}

/// Condensed view of the final state's pipeline diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct FullSummary {
    pub extracted: usize,
    pub phase1_dummies: usize,
    pub phase2_dummies: usize,
    pub fsafe_ok: bool,
    pub f_prime_size: usize,
    pub max_component_cycles: usize,
    pub mean_component_edges: f64,
}

impl FullSummary {
    fn from_diag(d: &FullDiagnostics) -> Self {
        FullSummary {
            extracted: d.extracted,
            phase1_dummies: d.phase1_dummies,
            phase2_dummies: d.phase2_dummies,
            fsafe_ok: d.fsafe_ok,
            f_prime_size: d.f_prime_size,
            max_component_cycles: d.max_component_cycles(),
            mean_component_edges: d.mean_component_edges(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub run_id: String,
    pub allocator: String,
    pub n: usize,
    pub m: usize,
    pub trial: usize,
    pub ops: usize,
    pub recourse: Vec<u64>,
    pub snapshots: Vec<Snapshot>,
    /// Final state's per-round accounting, when the allocator has rounds.
    pub rounds: Option<RoundDiagnostics>,
    /// Final state's pipeline summary, for the full allocator.
    pub full: Option<FullSummary>,
    pub summary: Summary,
}

pub struct AllocOutcome {
    pub allocation: Allocation,
    pub rounds: Option<RoundDiagnostics>,
    pub full: Option<FullDiagnostics>,
}

/// One canonical (padded) allocation of `s` under the chosen allocator.
pub fn allocate(
    kind: AllocatorKind,
    s: &BallSet,
    cfg: &Config,
    rng: &RandomOracle,
) -> Result<AllocOutcome, Error> {
    Ok(match kind {
        AllocatorKind::Single => AllocOutcome {
            allocation: allocate_single_choice(s, cfg, rng)?,
            rounds: None,
            full: None,
        },
        AllocatorKind::HiGreedy => AllocOutcome {
            allocation: allocate_hi_greedy(s, cfg, rng)?.0,
            rounds: None,
            full: None,
        },
        AllocatorKind::SliceSpread => {
            let (a, d) = allocate_slice_spread(s, cfg, rng)?;
            AllocOutcome {
                allocation: a,
                rounds: Some(d),
                full: None,
            }
        }
        AllocatorKind::Full => {
            let (a, d) = full_allocate(s, cfg, rng)?;
            AllocOutcome {
                allocation: a,
                rounds: Some(d.rounds.clone()),
                full: Some(d),
            }
        }
    })
}

fn run_id(spec: &WorkloadSpec) -> String {
    format!(
        "{}-n{}-m{}-{}",
        spec.allocator.name(),
        spec.n,
        spec.m,
        &spec.seed.to_hex()[..8]
    )
}

/// Replays one trial of the workload.
pub fn replay_trial(spec: &WorkloadSpec, trial: usize) -> Result<RunReport, Error> {
    let cfg = Config::new(spec.n, spec.m)?;
    let oracle = RandomOracle::new(spec.seed.derive("trial", trial as u64));
    let trace = generate_trace(spec, trial);

    let mut live = trace.initial.clone();
    let mut prev = allocate(spec.allocator, &live, &cfg, &oracle)?;
    let mut recourse_samples = Vec::with_capacity(trace.ops.len());
    let mut snapshots = Vec::new();

    let take_snapshot = |op_index: usize, outcome: &AllocOutcome, snaps: &mut Vec<Snapshot>| {
        let loads = outcome.allocation.loads(true);
        snaps.push(Snapshot {
            op_index,
            overload: loads.overload::<Exact>(&cfg).to_f64_lossy(),
            cumulative_overload: loads.cumulative_overload::<Exact>(&cfg).to_f64_lossy(),
            max_load: loads.max_load(),
        });
    };

    for (i, op) in trace.ops.iter().enumerate() {
        match *op {
            TraceOp::Insert(b) => {
                live.insert(b);
            }
            TraceOp::Delete(b) => {
                live.remove(b);
            }
        }
        let cur = allocate(spec.allocator, &live, &cfg, &oracle)?;
        recourse_samples.push(recourse(&prev.allocation, &cur.allocation)?);
        let is_last = i + 1 == trace.ops.len();
        if (i + 1) % spec.snapshot_every == 0 || is_last {
            take_snapshot(i + 1, &cur, &mut snapshots);
        }
        prev = cur;
    }

    let final_snapshot = snapshots.last().cloned().unwrap_or(Snapshot {
        op_index: 0,
        overload: 0.0,
        cumulative_overload: 0.0,
        max_load: 0,
    });
    let recourse_f: Vec<f64> = recourse_samples.iter().map(|&r| r as f64).collect();
    let summary = Summary {
        mean_recourse: mean(&recourse_f),
        p50_recourse: percentile(&recourse_samples, 50.0),
        p95_recourse: percentile(&recourse_samples, 95.0),
        max_recourse: recourse_samples.iter().copied().max().unwrap_or(0),
        final_overload: final_snapshot.overload,
        final_cumulative_overload: final_snapshot.cumulative_overload,
        final_max_load: final_snapshot.max_load,
    };

    Ok(RunReport {
        run_id: run_id(spec),
        allocator: spec.allocator.name().to_string(),
        n: spec.n,
        m: spec.m,
        trial,
        ops: trace.ops.len(),
        recourse: recourse_samples,
        snapshots,
        rounds: prev.rounds,
        full: prev.full.as_ref().map(FullSummary::from_diag),
        summary,
    })
}

/// Runs every trial of the workload; trials execute on worker threads and are
/// merged in trial order.
pub fn run_workload(spec: &WorkloadSpec) -> Result<Vec<RunReport>, Error> {
    if spec.trials <= 1 {
        return Ok(vec![replay_trial(spec, 0)?]);
    }
    let results: Vec<Result<RunReport, Error>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..spec.trials)
            .map(|t| scope.spawn(move || replay_trial(spec, t)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("trial thread panicked"))
            .collect()
    });
    results.into_iter().collect()
}
