//! The single-choice baseline and the history-independent greedy allocator.
//!
//! HI Greedy computes the allocation of a set by simulating greedy insertion
//! in canonical (ascending id) order: each ball goes to the less loaded of
//! its two candidate bins at that instant, ties broken toward the first hash.
//! Because the insertion order is a function of the set alone, so is the
//! resulting allocation.

use serde::Serialize;

use crate::error::Error;
use crate::model::{
    pad_to_capacity, AllocEntry, Allocation, BallId, BallSet, BinIndex, Choice, Config,
};
use crate::oracle::Randomness;

/// Per-insertion record: the candidate bin loads seen at insertion time and
/// the chosen bin. Records appear in canonical ball order.
#[derive(Debug, Clone, Serialize)]
pub struct GreedyStep {
    pub ball: BallId,
    pub load_first: u64,
    pub load_second: u64,
    pub chosen: BinIndex,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct GreedyTrace {
    pub steps: Vec<GreedyStep>,
}

impl GreedyTrace {
    /// One JSON object per line, for debugging dumps.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for step in &self.steps {
            out.push_str(&serde_json::to_string(step).expect("trace serializes"));
            out.push('\n');
        }
        out
    }
}

/// Places every ball at its first hash.
pub fn allocate_single_choice<R: Randomness>(
    s: &BallSet,
    cfg: &Config,
    rng: &R,
) -> Result<Allocation, Error> {
    let padded = pad_to_capacity(s, cfg)?;
    Ok(single_choice_of(padded.as_slice(), cfg, rng))
}

/// Single-choice placement of the set exactly as given, without padding.
pub fn allocate_single_choice_raw<R: Randomness>(
    set: &BallSet,
    cfg: &Config,
    rng: &R,
) -> Result<Allocation, Error> {
    if set.len() > cfg.m() {
        return Err(Error::CapacityExceeded {
            size: set.len(),
            capacity: cfg.m(),
        });
    }
    Ok(single_choice_of(set.as_slice(), cfg, rng))
}

fn single_choice_of<R: Randomness>(ids: &[BallId], cfg: &Config, rng: &R) -> Allocation {
    let entries = ids
        .iter()
        .map(|&ball| AllocEntry {
            ball,
            bin: rng.bin1(ball, cfg.n()),
            choice: Choice::First,
        })
        .collect();
    Allocation::from_entries(cfg.n(), entries)
}

/// HI Greedy over the padded set.
pub fn allocate_hi_greedy<R: Randomness>(
    s: &BallSet,
    cfg: &Config,
    rng: &R,
) -> Result<(Allocation, GreedyTrace), Error> {
    let padded = pad_to_capacity(s, cfg)?;
    Ok(hi_greedy_of(padded.as_slice(), cfg, rng))
}

/// HI Greedy over the set exactly as given, without padding.
pub fn allocate_hi_greedy_raw<R: Randomness>(
    set: &BallSet,
    cfg: &Config,
    rng: &R,
) -> Result<(Allocation, GreedyTrace), Error> {
    if set.len() > cfg.m() {
        return Err(Error::CapacityExceeded {
            size: set.len(),
            capacity: cfg.m(),
        });
    }
    Ok(hi_greedy_of(set.as_slice(), cfg, rng))
}

fn hi_greedy_of<R: Randomness>(ids: &[BallId], cfg: &Config, rng: &R) -> (Allocation, GreedyTrace) {
    let n = cfg.n();
    let mut loads = vec![0u64; n];
    let mut entries = Vec::with_capacity(ids.len());
    let mut steps = Vec::with_capacity(ids.len());

    // `ids` is sorted, so iteration order is the canonical insertion order.
    for &ball in ids {
        let b1 = rng.bin1(ball, n);
        let b2 = rng.bin2(ball, n);
        let (l1, l2) = (loads[b1.as_usize()], loads[b2.as_usize()]);
        let (bin, choice) = if l2 < l1 {
            (b2, Choice::Second)
        } else {
            (b1, Choice::First)
        };
        loads[bin.as_usize()] += 1;
        steps.push(GreedyStep {
            ball,
            load_first: l1,
            load_second: l2,
            chosen: bin,
        });
        entries.push(AllocEntry { ball, bin, choice });
    }

    (Allocation::from_entries(n, entries), GreedyTrace { steps })
}
