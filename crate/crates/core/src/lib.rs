//! History-independent two-choice balls-into-bins allocation.
//!
//! Every allocator in this crate computes its state as a pure function of
//! (ball set, seed): the placement reached by any insert/delete history
//! ending at the same set is bit-identical. Four allocators are provided,
//! in increasing sophistication:
//!
//! - single choice: every ball at its first hash;
//! - HI greedy: greedy insertion replayed in canonical order;
//! - slice-and-spread: thresholded rounds of evicting round-assigned balls
//!   to their second hashes;
//! - the full pipeline: slice-and-spread followed by two-phase swapping and
//!   per-component graph orientation of the swapped and fail-set balls.
//!
//! The companion harness crate measures recourse and overload for all four.

pub mod census;
pub mod error;
pub mod graph;
pub mod greedy;
pub mod model;
pub mod oracle;
pub mod post;
pub mod scalar;
pub mod schedule;
pub mod slice_spread;

pub use error::Error;
pub use model::{
    pad_dummy, pad_to_capacity, recourse, AllocEntry, Allocation, BallId, BallSet, BallType,
    BinIndex, Choice, Config, LoadVector, SwapPhase, DEFAULT_ECO_PARTS, PAD_DUMMY_BASE,
    REAL_ID_LIMIT,
};
pub use oracle::{MasterSeed, RandomOracle, Randomness, StreamLabel};
pub use scalar::Scalar;
pub use schedule::{build_schedule, Schedule};

/// Exact rational scalar used for load metrics by default.
pub type Exact = num_rational::Ratio<i128>;

#[cfg(test)]
pub(crate) mod testing {
    //! Fixed-table randomness for pinning down hand-computed scenarios.

    use std::collections::HashMap;

    use crate::model::{BallId, BallType, BinIndex, SwapPhase};
    use crate::oracle::{MasterSeed, RandomOracle, Randomness};
    use crate::schedule::Schedule;

    pub struct TableRandomness {
        pub h1: HashMap<u64, u32>,
        pub h2: HashMap<u64, u32>,
        pub types: HashMap<u64, BallType>,
        pub rounds: HashMap<u64, usize>,
        pub fallback: RandomOracle,
    }

    impl TableRandomness {
        pub fn new(_n: usize) -> Self {
            TableRandomness {
                h1: HashMap::new(),
                h2: HashMap::new(),
                types: HashMap::new(),
                rounds: HashMap::new(),
                fallback: RandomOracle::new(MasterSeed::from_u64(0)),
            }
        }

        pub fn set(&mut self, ball: u64, hashes: (u32, u32), ty: BallType) {
            self.h1.insert(ball, hashes.0);
            self.h2.insert(ball, hashes.1);
            self.types.insert(ball, ty);
        }

        pub fn set_round(&mut self, ball: u64, round: usize) {
            self.rounds.insert(ball, round);
        }
    }

    impl Randomness for TableRandomness {
        fn bin1(&self, ball: BallId, n: usize) -> BinIndex {
            match self.h1.get(&ball.0) {
                Some(&b) => BinIndex(b % n as u32),
                None => self.fallback.bin1(ball, n),
            }
        }

        fn bin2(&self, ball: BallId, n: usize) -> BinIndex {
            match self.h2.get(&ball.0) {
                Some(&b) => BinIndex(b % n as u32),
                None => self.fallback.bin2(ball, n),
            }
        }

        fn ball_type(&self, ball: BallId) -> BallType {
            *self.types.get(&ball.0).unwrap_or(&BallType::One)
        }

        fn round_of(&self, ball: BallId, sched: &Schedule) -> Option<usize> {
            if sched.t_star() == 0 || self.ball_type(ball) != BallType::Three {
                return None;
            }
            match self.rounds.get(&ball.0) {
                Some(&r) => Some(r.min(sched.t_star())),
                None => Some(1),
            }
        }

        fn dummy_bin2(&self, bin: BinIndex, phase: SwapPhase, k: u64, n: usize) -> BinIndex {
            self.fallback.dummy_bin2(bin, phase, k, n)
        }

        fn eco_part(&self, ball: BallId, parts: u32) -> u32 {
            self.fallback.eco_part(ball, parts)
        }
    }
}
