//! Hash census of a ball set, bin over/underload classification, and the
//! fail-set construction used by the post-processing stage.
//!
//! The census counts, for every bin, type and hash function, how many balls
//! of that type hash there. Classification compares those counts against the
//! exact rational thresholds `(p_j +- eps) * m / n` with
//! `p = (0.89, 0.10, 0.01)` and `eps = 0.0001`; all comparisons are done in
//! integer cross-multiplied form, so they are exact.

use serde::Serialize;

use crate::model::{BallId, BallType, BinIndex, Choice, Config};
use crate::oracle::Randomness;

/// Type probabilities and classification margin as exact fractions over
/// [`PROB_DENOMINATOR`].
pub const TYPE_PROB_NUMERATORS: [u64; 3] = [8900, 1000, 100];
pub const EPSILON_NUMERATOR: u64 = 1;
pub const PROB_DENOMINATOR: u64 = 10_000;

/// Per-(bin, type, hash) counts of set balls hashing to the bin.
///
/// These are counts over the set itself, independent of any allocation.
#[derive(Debug, Clone, Serialize)]
pub struct TypedBinCensus {
    n: usize,
    counts: Vec<[[u32; 2]; 3]>,
}

impl TypedBinCensus {
    pub fn build<R: Randomness>(set_ids: &[BallId], cfg: &Config, rng: &R) -> Self {
        let n = cfg.n();
        let mut counts = vec![[[0u32; 2]; 3]; n];
        for &ball in set_ids {
            let ty = rng.ball_type(ball).index();
            counts[rng.bin1(ball, n).as_usize()][ty][0] += 1;
            counts[rng.bin2(ball, n).as_usize()][ty][1] += 1;
        }
        TypedBinCensus { n, counts }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn count(&self, bin: BinIndex, ty: BallType, hash: Choice) -> u32 {
        self.counts[bin.as_usize()][ty.index()][hash_index(hash)]
    }
}

fn hash_index(hash: Choice) -> usize {
    match hash {
        Choice::First => 0,
        Choice::Second => 1,
    }
}

/// Over/underload flags per (bin, type, hash).
///
/// A bin is type-`j` overloaded from hash `h_k` when its census count is at
/// least `(p_j + eps) * m/n`, and underloaded when at most `(p_j - eps) * m/n`.
#[derive(Debug, Clone)]
pub struct BinClassification {
    n: usize,
    over: Vec<[[bool; 2]; 3]>,
    under: Vec<[[bool; 2]; 3]>,
}

impl BinClassification {
    pub fn classify(census: &TypedBinCensus, cfg: &Config) -> Self {
        let n = census.n;
        let m = cfg.m() as u128;
        let nn = cfg.n() as u128;
        let mut over = vec![[[false; 2]; 3]; n];
        let mut under = vec![[[false; 2]; 3]; n];
        for bin in 0..n {
            for ty in 0..3 {
                let p_num = TYPE_PROB_NUMERATORS[ty] as u128;
                for hash in 0..2 {
                    let c = census.counts[bin][ty][hash] as u128;
                    // c >= (p + eps) * m / n  <=>  c * DEN * n >= (p_num + eps_num) * m
                    let lhs = c * PROB_DENOMINATOR as u128 * nn;
                    over[bin][ty][hash] = lhs >= (p_num + EPSILON_NUMERATOR as u128) * m;
                    under[bin][ty][hash] = lhs <= (p_num - EPSILON_NUMERATOR as u128) * m;
                }
            }
        }
        BinClassification { n, over, under }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn overloaded_from(&self, bin: BinIndex, ty: BallType, hash: Choice) -> bool {
        self.over[bin.as_usize()][ty.index()][hash_index(hash)]
    }

    pub fn underloaded_from(&self, bin: BinIndex, ty: BallType, hash: Choice) -> bool {
        self.under[bin.as_usize()][ty.index()][hash_index(hash)]
    }

    /// Overloaded from at least one hash.
    pub fn type_overloaded(&self, bin: BinIndex, ty: BallType) -> bool {
        self.overloaded_from(bin, ty, Choice::First)
            || self.overloaded_from(bin, ty, Choice::Second)
    }

    /// Underloaded from at least one hash.
    pub fn type_underloaded(&self, bin: BinIndex, ty: BallType) -> bool {
        self.underloaded_from(bin, ty, Choice::First)
            || self.underloaded_from(bin, ty, Choice::Second)
    }
}

/// Identity of one fail set.
///
/// `X { a, b, c, d }` holds the type-`a` balls whose hash-`c` bin is type-`b`
/// underloaded from hash `d` (with `b < a`); `Y { a, c }` holds the type-`a`
/// balls whose hash-`c` bin is type-`a` overloaded from hash `c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FailSetKind {
    X {
        a: BallType,
        b: BallType,
        c: Choice,
        d: Choice,
    },
    Y {
        a: BallType,
        c: Choice,
    },
}

impl FailSetKind {
    /// All eighteen kinds in application order: the X sets in ascending
    /// lexicographic (a, b, c, d), then the Y sets in ascending (a, c).
    pub fn application_order() -> Vec<FailSetKind> {
        let mut kinds = Vec::with_capacity(18);
        for a in BallType::ALL {
            for b in BallType::ALL {
                if b >= a {
                    continue;
                }
                for c in [Choice::First, Choice::Second] {
                    for d in [Choice::First, Choice::Second] {
                        kinds.push(FailSetKind::X { a, b, c, d });
                    }
                }
            }
        }
        for a in BallType::ALL {
            for c in [Choice::First, Choice::Second] {
                kinds.push(FailSetKind::Y { a, c });
            }
        }
        kinds
    }

    pub fn label(&self) -> String {
        match self {
            FailSetKind::X { a, b, c, d } => format!(
                "X({},{},{},{})",
                a.number(),
                b.number(),
                c.as_u8(),
                d.as_u8()
            ),
            FailSetKind::Y { a, c } => format!("Y({},{})", a.number(), c.as_u8()),
        }
    }
}

/// The fail sets in application order. Their union is the fail superset: an
/// allocation-independent over-approximation of the balls that can experience
/// swap failures.
#[derive(Debug, Clone)]
pub struct FailSets {
    pub sets: Vec<(FailSetKind, Vec<BallId>)>,
}

impl FailSets {
    /// Sorted union of all member balls.
    pub fn f_prime(&self) -> Vec<BallId> {
        let mut all: Vec<BallId> = self
            .sets
            .iter()
            .flat_map(|(_, v)| v.iter().copied())
            .collect();
        all.sort_unstable();
        all.dedup();
        all
    }

    pub fn sizes(&self) -> Vec<(String, usize)> {
        self.sets
            .iter()
            .map(|(k, v)| (k.label(), v.len()))
            .collect()
    }
}

/// Builds census, classification, and the fail sets of a padded set.
pub fn build_fail_sets<R: Randomness>(
    set_ids: &[BallId],
    cfg: &Config,
    rng: &R,
) -> (TypedBinCensus, BinClassification, FailSets) {
    let census = TypedBinCensus::build(set_ids, cfg, rng);
    let class = BinClassification::classify(&census, cfg);
    let kinds = FailSetKind::application_order();
    let mut sets: Vec<(FailSetKind, Vec<BallId>)> =
        kinds.iter().map(|&k| (k, Vec::new())).collect();

    let n = cfg.n();
    for &ball in set_ids {
        let ty = rng.ball_type(ball);
        let h = [rng.bin1(ball, n), rng.bin2(ball, n)];
        for (kind, members) in sets.iter_mut() {
            match *kind {
                FailSetKind::X { a, b, c, d } => {
                    if ty == a && class.underloaded_from(h[hash_index(c)], b, d) {
                        members.push(ball);
                    }
                }
                FailSetKind::Y { a, c } => {
                    if ty == a && class.overloaded_from(h[hash_index(c)], a, c) {
                        members.push(ball);
                    }
                }
            }
        }
    }

    (census, class, FailSets { sets })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BallSet;
    use crate::testing::TableRandomness;

    #[test]
    fn application_order_is_stable() {
        let kinds = FailSetKind::application_order();
        assert_eq!(kinds.len(), 18);
        assert_eq!(kinds[0].label(), "X(2,1,1,1)");
        assert_eq!(kinds[3].label(), "X(2,1,2,2)");
        assert_eq!(kinds[4].label(), "X(3,1,1,1)");
        assert_eq!(kinds[8].label(), "X(3,2,1,1)");
        assert_eq!(kinds[12].label(), "Y(1,1)");
        assert_eq!(kinds[17].label(), "Y(3,2)");
    }

    #[test]
    fn threshold_arithmetic_mu_1000() {
        // mu = 1000, Type 2 (p = 0.1): overloaded iff count >= 100.1, i.e.
        // >= 101; underloaded iff count <= 99.9, i.e. <= 99; 100 is neutral.
        let cfg = Config::new(4, 4000).unwrap();
        let mut census = TypedBinCensus {
            n: 4,
            counts: vec![[[0u32; 2]; 3]; 4],
        };
        census.counts[0][1][0] = 101;
        census.counts[1][1][0] = 100;
        census.counts[2][1][0] = 99;
        let class = BinClassification::classify(&census, &cfg);
        let t2 = BallType::Two;
        assert!(class.overloaded_from(BinIndex(0), t2, Choice::First));
        assert!(!class.underloaded_from(BinIndex(0), t2, Choice::First));
        assert!(!class.overloaded_from(BinIndex(1), t2, Choice::First));
        assert!(!class.underloaded_from(BinIndex(1), t2, Choice::First));
        assert!(class.underloaded_from(BinIndex(2), t2, Choice::First));
        // Count 0 in any bin is underloaded for every type at mu >= 1.
        assert!(class.underloaded_from(BinIndex(3), BallType::One, Choice::Second));
        assert!(class.underloaded_from(BinIndex(3), BallType::Three, Choice::First));
    }

    #[test]
    fn balanced_census_has_empty_fail_sets() {
        // Two bins, mu = 40. Exact per-(type,hash) counts sitting strictly
        // inside (p_j - eps, p_j + eps) * mu: 36/40 for type 1 would be
        // needed... instead use counts equal to p_j * mu exactly where the
        // open interval contains them: p1*40 = 35.6 -> use 36? 36*10^4*2 =
        // 720000 vs (8901)*80 = 712080 -> overloaded. Type thresholds at
        // small mu are razor thin, so instead verify directly with mu large
        // enough to leave an integer strictly inside the band.
        let cfg = Config::new(2, 2 * 100_000).unwrap();
        let mut t = TableRandomness::new(2);
        // Give every ball type 1 and split hashes evenly: counts are exactly
        // p1-ish only if we hand-build the census, so here we just check the
        // neutral band directly.
        t.set(0, (0, 1), BallType::One);
        let mut census = TypedBinCensus {
            n: 2,
            counts: vec![[[0u32; 2]; 3]; 2],
        };
        // (p1 - eps)*mu = 88990, (p1 + eps)*mu = 89010: 89000 is neutral.
        census.counts[0][0][0] = 89_000;
        census.counts[1][0][0] = 89_000;
        // Same for types 2 and 3.
        census.counts[0][1][0] = 10_000;
        census.counts[1][1][0] = 10_000;
        census.counts[0][2][0] = 1_000;
        census.counts[1][2][0] = 1_000;
        census.counts[0][0][1] = 89_000;
        census.counts[1][0][1] = 89_000;
        census.counts[0][1][1] = 10_000;
        census.counts[1][1][1] = 10_000;
        census.counts[0][2][1] = 1_000;
        census.counts[1][2][1] = 1_000;
        let class = BinClassification::classify(&census, &cfg);
        for bin in [BinIndex(0), BinIndex(1)] {
            for ty in BallType::ALL {
                assert!(!class.type_overloaded(bin, ty));
                assert!(!class.type_underloaded(bin, ty));
            }
        }
    }

    #[test]
    fn membership_replay_matches_definition() {
        let cfg = Config::new(4, 64).unwrap();
        let mut t = TableRandomness::new(4);
        let set: BallSet = (0..64u64).map(BallId).collect();
        for b in 0..64u64 {
            let ty = match b % 10 {
                0 => BallType::Two,
                1 => BallType::Three,
                _ => BallType::One,
            };
            t.set(b, ((b % 4) as u32, ((b / 4) % 4) as u32), ty);
        }
        let (_, class, fails) = build_fail_sets(set.as_slice(), &cfg, &t);
        use crate::oracle::Randomness as _;
        for (kind, members) in &fails.sets {
            for &ball in members {
                let h = [t.bin1(ball, 4), t.bin2(ball, 4)];
                match *kind {
                    FailSetKind::X { a, b, c, d } => {
                        assert_eq!(t.ball_type(ball), a);
                        assert!(class.underloaded_from(h[hash_index(c)], b, d));
                    }
                    FailSetKind::Y { a, c } => {
                        assert_eq!(t.ball_type(ball), a);
                        assert!(class.overloaded_from(h[hash_index(c)], a, c));
                    }
                }
            }
        }
        // A ball may appear in several sets; the union is deduplicated.
        let f_prime = fails.f_prime();
        let total: usize = fails.sets.iter().map(|(_, v)| v.len()).sum();
        assert!(total >= f_prime.len());
    }
}
