//! The slice-and-spread allocator.
//!
//! Every ball starts at its first hash. Each round `t` then slices: a bin
//! holding `load` balls evicts the `min(|C_{t,i}|, load - tau_t)` first (in
//! canonical order) of its round-`t`-assigned balls `C_{t,i}` into the
//! rethrow set; spreading places each rethrown ball at its second hash. Only
//! round-assigned (Type 3) balls are ever rethrown, so first and second
//! hashes of the remaining balls stay unevaluated — the contract the
//! post-processing stage relies on.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::model::{
    pad_to_capacity, AllocEntry, Allocation, BallId, BallSet, BallType, Choice, Config, LoadVector,
};
use crate::oracle::Randomness;
use crate::schedule::{build_schedule, Schedule};

/// Per-round accounting, including the convention of a round 0 that spreads
/// the whole set (the initial first-hash placement) and slices nothing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRow {
    pub round: usize,
    /// `|R_t|`: balls thrown during this round's spreading stage.
    pub rethrow_count: u64,
    /// `w`: balls sitting in bins immediately before spreading.
    pub pre_spread_total: u64,
    /// `E^-_t`: total shortfall below `tau_t` over the pre-spread loads.
    pub underfill: u64,
    /// `E^+_t`: total excess above `tau_t` over the pre-spread loads.
    pub overfill: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RoundDiagnostics {
    pub rows: Vec<RoundRow>,
}

impl RoundDiagnostics {
    /// Exact accounting identity: in every round,
    /// `|R_t| = total - n*tau_t - E^+_t + E^-_t`.
    pub fn accounting_holds(&self, total_balls: u64, n: usize, sched: &Schedule) -> bool {
        self.rows.iter().all(|row| {
            let rhs = total_balls as i128
                - (n as i128) * sched.tau_t()[row.round] as i128
                - row.overfill as i128
                + row.underfill as i128;
            row.rethrow_count as i128 == rhs
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("diagnostics serialize")
    }
}

/// Underfill and overfill error of a load vector against round `t`'s
/// threshold: `(sum_i max(tau_t - l_i, 0), sum_i max(l_i - tau_t, 0))`.
pub fn diagnostics_errors(loads: &LoadVector, sched: &Schedule, t: usize) -> (u64, u64) {
    let tau = sched.tau_t()[t];
    let mut under = 0u64;
    let mut over = 0u64;
    for &l in loads.counts() {
        if l < tau {
            under += tau - l;
        } else {
            over += l - tau;
        }
    }
    (under, over)
}

/// Full output of an instrumented run.
#[derive(Debug, Clone)]
pub struct SliceSpreadRun {
    pub allocation: Allocation,
    pub diagnostics: RoundDiagnostics,
    pub schedule: Schedule,
    /// `round_start_loads[t - 1]` holds the loads at the start of round `t`
    /// (before its slicing stage), for `t = 1 ..= t* + 1`; the last entry is
    /// the final load vector.
    pub round_start_loads: Vec<Vec<u64>>,
    /// Rethrown balls per round, in eviction order.
    pub rethrown: Vec<Vec<BallId>>,
}

/// Slice-and-spread over the padded set.
pub fn allocate_slice_spread<R: Randomness>(
    s: &BallSet,
    cfg: &Config,
    rng: &R,
) -> Result<(Allocation, RoundDiagnostics), Error> {
    let padded = pad_to_capacity(s, cfg)?;
    let run = run(padded.as_slice(), cfg, rng, false);
    Ok((run.allocation, run.diagnostics))
}

/// Slice-and-spread over the set exactly as given, without padding.
pub fn allocate_slice_spread_raw<R: Randomness>(
    set: &BallSet,
    cfg: &Config,
    rng: &R,
) -> Result<(Allocation, RoundDiagnostics), Error> {
    check_capacity(set, cfg)?;
    let run = run(set.as_slice(), cfg, rng, false);
    Ok((run.allocation, run.diagnostics))
}

/// Instrumented run exposing per-round load vectors and rethrow sets.
pub fn slice_spread_instrumented<R: Randomness>(
    set: &BallSet,
    cfg: &Config,
    rng: &R,
    pad: bool,
) -> Result<SliceSpreadRun, Error> {
    if pad {
        let padded = pad_to_capacity(set, cfg)?;
        Ok(run(padded.as_slice(), cfg, rng, true))
    } else {
        check_capacity(set, cfg)?;
        Ok(run(set.as_slice(), cfg, rng, true))
    }
}

fn check_capacity(set: &BallSet, cfg: &Config) -> Result<(), Error> {
    if set.len() > cfg.m() {
        return Err(Error::CapacityExceeded {
            size: set.len(),
            capacity: cfg.m(),
        });
    }
    Ok(())
}

fn run<R: Randomness>(ids: &[BallId], cfg: &Config, rng: &R, instrument: bool) -> SliceSpreadRun {
    let n = cfg.n();
    let sched = build_schedule(cfg);
    let t_star = sched.t_star();
    let total = ids.len() as u64;

    let mut bins: Vec<u32> = Vec::with_capacity(ids.len());
    let mut choices = vec![Choice::First; ids.len()];
    let mut loads = vec![0u64; n];

    // Round-t candidate lists per bin; built in ascending ball order, so each
    // list is already canonically ordered.
    let mut candidates: Vec<Vec<Vec<u32>>> = vec![vec![Vec::new(); n]; t_star];

    for (idx, &ball) in ids.iter().enumerate() {
        let b1 = rng.bin1(ball, n);
        bins.push(b1.0);
        loads[b1.as_usize()] += 1;
        if rng.ball_type(ball) == BallType::Three {
            if let Some(t) = rng.round_of(ball, &sched) {
                debug_assert!((1..=t_star).contains(&t));
                candidates[t - 1][b1.as_usize()].push(idx as u32);
            }
        }
    }

    let mut diagnostics = RoundDiagnostics {
        rows: vec![RoundRow {
            round: 0,
            rethrow_count: total,
            pre_spread_total: 0,
            underfill: 0,
            overfill: 0,
        }],
    };
    let mut round_start_loads = Vec::new();
    let mut rethrown_per_round = Vec::new();

    for t in 1..=t_star {
        if instrument {
            round_start_loads.push(loads.clone());
        }
        let tau = sched.tau_t()[t];
        let mut rethrow: Vec<u32> = Vec::new();
        for i in 0..n {
            let c = &candidates[t - 1][i];
            if c.is_empty() {
                continue;
            }
            let slack = loads[i].saturating_sub(tau) as usize;
            let take = c.len().min(slack);
            if take == 0 {
                continue;
            }
            rethrow.extend_from_slice(&c[..take]);
            loads[i] -= take as u64;
        }

        let mut under = 0u64;
        let mut over = 0u64;
        for &l in &loads {
            if l < tau {
                under += tau - l;
            } else {
                over += l - tau;
            }
        }
        diagnostics.rows.push(RoundRow {
            round: t,
            rethrow_count: rethrow.len() as u64,
            pre_spread_total: loads.iter().sum(),
            underfill: under,
            overfill: over,
        });

        for &idx in &rethrow {
            let ball = ids[idx as usize];
            let b2 = rng.bin2(ball, n);
            debug_assert_eq!(choices[idx as usize], Choice::First, "ball rethrown twice");
            bins[idx as usize] = b2.0;
            choices[idx as usize] = Choice::Second;
            loads[b2.as_usize()] += 1;
        }
        if instrument {
            rethrown_per_round.push(rethrow.iter().map(|&i| ids[i as usize]).collect());
        }
    }
    if instrument {
        round_start_loads.push(loads.clone());
    }

    debug_assert!(diagnostics.accounting_holds(total, n, &sched));

    let entries: Vec<AllocEntry> = ids
        .iter()
        .zip(bins.iter().zip(choices.iter()))
        .map(|(&ball, (&bin, &choice))| AllocEntry {
            ball,
            bin: crate::model::BinIndex(bin),
            choice,
        })
        .collect();

    SliceSpreadRun {
        allocation: Allocation::from_entries(n, entries),
        diagnostics,
        schedule: sched,
        round_start_loads,
        rethrown: rethrown_per_round,
    }
}
