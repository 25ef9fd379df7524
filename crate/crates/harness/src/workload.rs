//! Deterministic workload generation: insert/delete traces that keep the set
//! size within {m-1, m}.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use hibb_core::oracle::StreamLabel;
use hibb_core::{BallId, BallSet, Error, MasterSeed, RandomOracle, REAL_ID_LIMIT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AllocatorKind {
    Single,
    HiGreedy,
    SliceSpread,
    Full,
}

impl AllocatorKind {
    pub const ALL: [AllocatorKind; 4] = [
        AllocatorKind::Single,
        AllocatorKind::HiGreedy,
        AllocatorKind::SliceSpread,
        AllocatorKind::Full,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AllocatorKind::Single => "single",
            AllocatorKind::HiGreedy => "hi-greedy",
            AllocatorKind::SliceSpread => "slice-spread",
            AllocatorKind::Full => "full",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChurnMode {
    /// Alternate random deletes with fresh random inserts.
    UniformChurn,
    /// Deletes and re-inserts cycle through a small recycled id pool.
    ReinsertionHeavy,
    /// Deletes always remove the oldest surviving ball.
    SlidingWindow,
}

impl ChurnMode {
    pub const ALL: [ChurnMode; 3] = [
        ChurnMode::UniformChurn,
        ChurnMode::ReinsertionHeavy,
        ChurnMode::SlidingWindow,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ChurnMode::UniformChurn => "uniform-churn",
            ChurnMode::ReinsertionHeavy => "reinsertion-heavy",
            ChurnMode::SlidingWindow => "sliding-window",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s)
    }
}

#[derive(Debug, Clone)]
pub struct WorkloadSpec {
    pub n: usize,
    pub m: usize,
    pub allocator: AllocatorKind,
    pub ops: usize,
    pub churn: ChurnMode,
    pub seed: MasterSeed,
    pub trials: usize,
    pub snapshot_every: usize,
    pub recycle_pool: usize,
}

impl WorkloadSpec {
    pub fn new(
        n: usize,
        m: usize,
        allocator: AllocatorKind,
        ops: usize,
        seed: MasterSeed,
    ) -> Result<Self, Error> {
        if ops == 0 {
            return Err(Error::InvalidConfig("ops must be >= 1".into()));
        }
        Ok(WorkloadSpec {
            n,
            m,
            allocator,
            ops,
            churn: ChurnMode::UniformChurn,
            seed,
            trials: 1,
            snapshot_every: 16,
            recycle_pool: 64,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceOp {
    Insert(BallId),
    Delete(BallId),
}

#[derive(Debug, Clone)]
pub struct Trace {
    pub initial: BallSet,
    pub ops: Vec<TraceOp>,
}

/// Counter-mode words from the oracle's workload stream.
struct TraceRng {
    oracle: RandomOracle,
    trial: u64,
    counter: u64,
}

const LABEL_TRACE: StreamLabel = StreamLabel("trace");

impl TraceRng {
    fn new(seed: &MasterSeed, trial: u64) -> Self {
        TraceRng {
            oracle: RandomOracle::new(*seed),
            trial,
            counter: 0,
        }
    }

    fn next(&mut self) -> u64 {
        let w = self.oracle.prf(LABEL_TRACE, &[self.trial, self.counter]);
        self.counter += 1;
        w
    }

    fn below(&mut self, n: u64) -> u64 {
        ((self.next() as u128 * n as u128) >> 64) as u64
    }
}

/// `count` distinct fresh ball ids drawn deterministically from a seed.
pub fn sample_fresh_ids(seed: &MasterSeed, stream: u64, count: usize) -> Vec<BallId> {
    let mut rng = TraceRng::new(seed, stream);
    let mut used = HashSet::with_capacity(count * 2);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let id = rng.below(REAL_ID_LIMIT);
        if used.insert(id) {
            out.push(BallId(id));
        }
    }
    out
}

/// Deterministic trace for one trial: `ops` operations alternating so that
/// the live set size stays in {m-1, m}, starting full.
pub fn generate_trace(spec: &WorkloadSpec, trial: usize) -> Trace {
    let mut rng = TraceRng::new(&spec.seed, trial as u64);
    let mut used: HashSet<u64> = HashSet::with_capacity(spec.m * 2);
    let fresh = |rng: &mut TraceRng, used: &mut HashSet<u64>| -> BallId {
        loop {
            let id = rng.below(REAL_ID_LIMIT);
            if used.insert(id) {
                return BallId(id);
            }
        }
    };

    // Initial full set, remembered in arrival order for the sliding window.
    let mut arrival: Vec<BallId> = Vec::with_capacity(spec.m);
    for _ in 0..spec.m {
        arrival.push(fresh(&mut rng, &mut used));
    }
    let initial: BallSet = arrival.iter().copied().collect();

    let pool: Vec<BallId> = {
        let k = spec.recycle_pool.clamp(1, spec.m);
        initial.iter().take(k).collect()
    };

    let mut live = initial.clone();
    let mut queue = std::collections::VecDeque::from(arrival);
    let mut ops = Vec::with_capacity(spec.ops);

    for _ in 0..spec.ops {
        let at_capacity = live.len() == spec.m;
        let op = match spec.churn {
            ChurnMode::UniformChurn => {
                if at_capacity {
                    let victim = live.as_slice()[rng.below(live.len() as u64) as usize];
                    TraceOp::Delete(victim)
                } else {
                    TraceOp::Insert(fresh(&mut rng, &mut used))
                }
            }
            ChurnMode::ReinsertionHeavy => {
                if at_capacity {
                    let present: Vec<BallId> =
                        pool.iter().copied().filter(|&b| live.contains(b)).collect();
                    let victim = present[rng.below(present.len() as u64) as usize];
                    TraceOp::Delete(victim)
                } else {
                    let absent: Vec<BallId> = pool
                        .iter()
                        .copied()
                        .filter(|&b| !live.contains(b))
                        .collect();
                    let back = absent[rng.below(absent.len() as u64) as usize];
                    TraceOp::Insert(back)
                }
            }
            ChurnMode::SlidingWindow => {
                if at_capacity {
                    let oldest = *queue.front().expect("nonempty window");
                    TraceOp::Delete(oldest)
                } else {
                    TraceOp::Insert(fresh(&mut rng, &mut used))
                }
            }
        };
        match op {
            TraceOp::Insert(b) => {
                live.insert(b);
                queue.push_back(b);
            }
            TraceOp::Delete(b) => {
                live.remove(b);
                if let Some(pos) = queue.iter().position(|&x| x == b) {
                    queue.remove(pos);
                }
            }
        }
        ops.push(op);
        debug_assert!(live.len() == spec.m || live.len() == spec.m - 1);
    }

    Trace { initial, ops }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(churn: ChurnMode, ops: usize, pool: usize) -> WorkloadSpec {
        let mut s =
            WorkloadSpec::new(8, 32, AllocatorKind::Single, ops, MasterSeed::from_u64(11)).unwrap();
        s.churn = churn;
        s.recycle_pool = pool;
        s
    }

    #[test]
    fn single_op_from_full_set_is_a_delete() {
        let t = generate_trace(&spec(ChurnMode::UniformChurn, 1, 64), 0);
        assert_eq!(t.initial.len(), 32);
        assert!(matches!(t.ops[0], TraceOp::Delete(_)));
    }

    #[test]
    fn uniform_churn_keeps_size_in_band() {
        let s = spec(ChurnMode::UniformChurn, 101, 64);
        let t = generate_trace(&s, 3);
        let mut live = t.initial.clone();
        for op in &t.ops {
            match *op {
                TraceOp::Insert(b) => assert!(live.insert(b)),
                TraceOp::Delete(b) => assert!(live.remove(b)),
            }
            assert!(live.len() == s.m || live.len() == s.m - 1);
        }
    }

    #[test]
    fn reinsertion_pool_of_one_toggles_one_ball() {
        let s = spec(ChurnMode::ReinsertionHeavy, 10, 1);
        let t = generate_trace(&s, 0);
        let toggled = match t.ops[0] {
            TraceOp::Delete(b) => b,
            _ => panic!("first op must delete"),
        };
        for (i, op) in t.ops.iter().enumerate() {
            match *op {
                TraceOp::Delete(b) => {
                    assert_eq!(b, toggled);
                    assert_eq!(i % 2, 0);
                }
                TraceOp::Insert(b) => {
                    assert_eq!(b, toggled);
                    assert_eq!(i % 2, 1);
                }
            }
        }
    }

    #[test]
    fn sliding_window_deletes_oldest() {
        let s = spec(ChurnMode::SlidingWindow, 8, 64);
        let t = generate_trace(&s, 1);
        // Ops alternate delete-oldest / insert-fresh; replays cleanly.
        let mut live = t.initial.clone();
        let mut deleted = Vec::new();
        for op in &t.ops {
            match *op {
                TraceOp::Insert(b) => {
                    assert!(live.insert(b));
                }
                TraceOp::Delete(b) => {
                    assert!(live.remove(b));
                    deleted.push(b);
                }
            }
        }
        // No ball is deleted twice by the FIFO rule in this short window.
        let unique: HashSet<_> = deleted.iter().collect();
        assert_eq!(unique.len(), deleted.len());
    }

    #[test]
    fn traces_are_deterministic_per_seed_and_trial() {
        let s = spec(ChurnMode::UniformChurn, 50, 64);
        let a = generate_trace(&s, 2);
        let b = generate_trace(&s, 2);
        assert_eq!(a.initial, b.initial);
        assert_eq!(a.ops, b.ops);
        let c = generate_trace(&s, 3);
        assert_ne!(a.ops, c.ops);
    }
}
