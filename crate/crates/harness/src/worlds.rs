//! Parallel-worlds instrumentation: run an allocator on neighboring sets
//! under a shared seed and compare the states round by round.

use serde::Serialize;

use hibb_core::post::full_allocate_raw;
use hibb_core::slice_spread::slice_spread_instrumented;
use hibb_core::{recourse, BallSet, Config, Error, MasterSeed, RandomOracle, Randomness};

use crate::workload::{sample_fresh_ids, AllocatorKind};

/// One sampled neighbor pair.
#[derive(Debug, Clone, Serialize)]
pub struct PairOutcome {
    pub pair: usize,
    pub recourse: u64,
    /// Total per-bin load discrepancy at the start of each round, for rounds
    /// `1 ..= t* + 1` (the last entry compares final states).
    pub discrepancy: Vec<u64>,
    /// The extra ball's assigned round (0 when unassigned).
    pub special_round: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct WorldsReport {
    pub allocator: String,
    pub n: usize,
    pub m: usize,
    pub pairs: usize,
    pub t_star: usize,
    /// Hard per-pair recourse bound asserted for the slicing allocator.
    pub recourse_bound: Option<u64>,
    pub max_recourse: u64,
    pub mean_recourse: f64,
    pub violations: Vec<String>,
    pub outcomes: Vec<PairOutcome>,
}

impl WorldsReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Samples `pairs` neighboring padded-size sets (sizes m-1 and m differing in
/// one ball), runs both worlds under a shared seed, and checks the
/// deterministic per-round guarantees of the slicing allocator.
pub fn two_worlds(
    n: usize,
    m: usize,
    seed: &MasterSeed,
    allocator: AllocatorKind,
    pairs: usize,
) -> Result<WorldsReport, Error> {
    if !matches!(allocator, AllocatorKind::SliceSpread | AllocatorKind::Full) {
        return Err(Error::InvalidConfig(
            "two-worlds instrumentation requires slice-spread or full".into(),
        ));
    }
    let cfg = Config::new(n, m)?;
    let mut outcomes = Vec::with_capacity(pairs);
    let mut violations = Vec::new();
    let mut t_star = 0;

    for p in 0..pairs {
        let pair_seed = seed.derive("pair", p as u64);
        let rng = RandomOracle::new(pair_seed);
        let ids = sample_fresh_ids(&pair_seed, u64::MAX, m);
        // Alternate random extra balls with an adversarial flavor: the
        // canonically smallest ball diverges the replayed insertion order as
        // early as possible.
        let extra = if p % 2 == 0 {
            ids[0]
        } else {
            *ids.iter().min().unwrap()
        };
        let base: BallSet = ids.iter().copied().filter(|&b| b != extra).collect();
        let mut bigger = base.clone();
        bigger.insert(extra);

        let outcome = match allocator {
            AllocatorKind::SliceSpread => {
                let w0 = slice_spread_instrumented(&base, &cfg, &rng, false)?;
                let w1 = slice_spread_instrumented(&bigger, &cfg, &rng, false)?;
                t_star = w0.schedule.t_star();
                let d: Vec<u64> = w0
                    .round_start_loads
                    .iter()
                    .zip(&w1.round_start_loads)
                    .map(|(l0, l1)| l0.iter().zip(l1).map(|(&a, &b)| a.abs_diff(b)).sum())
                    .collect();
                let special = rng.round_of(extra, &w0.schedule).unwrap_or(0);

                if let Some(&d1) = d.first() {
                    if d1 != 1 {
                        violations.push(format!("pair {p}: d(1) = {d1}, expected 1"));
                    }
                }
                for t in 1..=t_star {
                    let allowed = if t == special { d[t - 1] + 2 } else { d[t - 1] };
                    if d[t] > allowed {
                        violations.push(format!(
                            "pair {p}: d({}) = {} exceeds {} (special round {special})",
                            t + 1,
                            d[t],
                            allowed
                        ));
                    }
                }

                let r = recourse(&w0.allocation, &w1.allocation)?;
                let bound = 3 * t_star as u64 + 3;
                if r > bound {
                    violations.push(format!("pair {p}: recourse {r} exceeds bound {bound}"));
                }
                PairOutcome {
                    pair: p,
                    recourse: r,
                    discrepancy: d,
                    special_round: special,
                }
            }
            AllocatorKind::Full => {
                let (a0, _) = full_allocate_raw(&base, &cfg, &rng)?;
                let (a1, _) = full_allocate_raw(&bigger, &cfg, &rng)?;
                let r = recourse(&a0, &a1)?;
                PairOutcome {
                    pair: p,
                    recourse: r,
                    discrepancy: Vec::new(),
                    special_round: 0,
                }
            }
            _ => unreachable!(),
        };
        outcomes.push(outcome);
    }

    let max_recourse = outcomes.iter().map(|o| o.recourse).max().unwrap_or(0);
    let mean_recourse = if outcomes.is_empty() {
        0.0
    } else {
        outcomes.iter().map(|o| o.recourse as f64).sum::<f64>() / outcomes.len() as f64
    };

    Ok(WorldsReport {
        allocator: allocator.name().to_string(),
        n,
        m,
        pairs,
        t_star,
        recourse_bound: matches!(allocator, AllocatorKind::SliceSpread)
            .then(|| 3 * t_star as u64 + 3),
        max_recourse,
        mean_recourse,
        violations,
        outcomes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_sets_have_zero_discrepancy() {
        // Degenerate check of the instrumentation itself: comparing a world
        // against itself gives all-zero discrepancies.
        let cfg = Config::new(16, 16 * 16).unwrap();
        let seed = MasterSeed::from_u64(1);
        let rng = RandomOracle::new(seed);
        let ids = sample_fresh_ids(&seed, 9, cfg.m());
        let set: BallSet = ids.into_iter().collect();
        let w = slice_spread_instrumented(&set, &cfg, &rng, false).unwrap();
        for (l0, l1) in w.round_start_loads.iter().zip(&w.round_start_loads) {
            let d: u64 = l0.iter().zip(l1).map(|(&a, &b)| a.abs_diff(b)).sum();
            assert_eq!(d, 0);
        }
    }

    #[test]
    fn slice_spread_pairs_respect_bounds() {
        let r = two_worlds(
            32,
            32 * 16,
            &MasterSeed::from_u64(2),
            AllocatorKind::SliceSpread,
            40,
        )
        .unwrap();
        assert!(r.ok(), "{:?}", r.violations);
        assert!(r.max_recourse <= r.recourse_bound.unwrap());
    }

    #[test]
    fn full_pairs_report_recourse() {
        let r = two_worlds(16, 16 * 8, &MasterSeed::from_u64(3), AllocatorKind::Full, 5).unwrap();
        assert_eq!(r.outcomes.len(), 5);
        assert!(r.max_recourse >= 1);
    }

    #[test]
    fn rejects_unsupported_allocators() {
        assert!(two_worlds(8, 32, &MasterSeed::from_u64(4), AllocatorKind::Single, 1).is_err());
    }
}
