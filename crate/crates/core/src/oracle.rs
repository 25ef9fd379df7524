//! Seed-keyed source of every random quantity in the system.
//!
//! All hashes, ball types, round assignments, dummy tapes, and subgraph
//! labels are derived from one 256-bit master seed through a keyed PRF with
//! domain-separated streams. Allocators therefore compute pure functions of
//! (ball set, seed): feeding them the same set twice yields bit-identical
//! output regardless of operation history, which is exactly the unique
//! representation that makes the structures history independent.
//!
//! "Infinite random tapes" are realized as indexed PRF calls: position `k` of
//! the tape for bin `i` is one PRF evaluation on `(i, k)`.

use std::fmt;

use crate::error::Error;
use crate::model::{BallId, BallType, BinIndex, SwapPhase};
use crate::schedule::Schedule;

mod sip {
    //! SipHash-2-4 (Aumasson & Bernstein), vendored so that stream values are
    //! stable across platforms and dependency versions forever.

    macro_rules! sipround {
        ($v0:ident, $v1:ident, $v2:ident, $v3:ident) => {
            $v0 = $v0.wrapping_add($v1);
            $v1 = $v1.rotate_left(13);
            $v1 ^= $v0;
            $v0 = $v0.rotate_left(32);
            $v2 = $v2.wrapping_add($v3);
            $v3 = $v3.rotate_left(16);
            $v3 ^= $v2;
            $v0 = $v0.wrapping_add($v3);
            $v3 = $v3.rotate_left(21);
            $v3 ^= $v0;
            $v2 = $v2.wrapping_add($v1);
            $v1 = $v1.rotate_left(17);
            $v1 ^= $v2;
            $v2 = $v2.rotate_left(32);
        };
    }

    pub fn hash_bytes(k0: u64, k1: u64, data: &[u8]) -> u64 {
        let mut v0 = k0 ^ 0x736f_6d65_7073_6575;
        let mut v1 = k1 ^ 0x646f_7261_6e64_6f6d;
        let mut v2 = k0 ^ 0x6c79_6765_6e65_7261;
        let mut v3 = k1 ^ 0x7465_6462_7974_6573;

        let mut chunks = data.chunks_exact(8);
        for chunk in &mut chunks {
            let m = u64::from_le_bytes(chunk.try_into().unwrap());
            v3 ^= m;
            sipround!(v0, v1, v2, v3);
            sipround!(v0, v1, v2, v3);
            v0 ^= m;
        }
        let mut last = (data.len() as u64 & 0xff) << 56;
        for (i, &b) in chunks.remainder().iter().enumerate() {
            last |= (b as u64) << (8 * i);
        }
        v3 ^= last;
        sipround!(v0, v1, v2, v3);
        sipround!(v0, v1, v2, v3);
        v0 ^= last;

        v2 ^= 0xff;
        sipround!(v0, v1, v2, v3);
        sipround!(v0, v1, v2, v3);
        sipround!(v0, v1, v2, v3);
        sipround!(v0, v1, v2, v3);
        v0 ^ v1 ^ v2 ^ v3
    }

    /// Hash of little-endian 64-bit words; identical to `hash_bytes` on the
    /// words' byte serialization.
    pub fn hash_words(k0: u64, k1: u64, words: &[u64]) -> u64 {
        let mut v0 = k0 ^ 0x736f_6d65_7073_6575;
        let mut v1 = k1 ^ 0x646f_7261_6e64_6f6d;
        let mut v2 = k0 ^ 0x6c79_6765_6e65_7261;
        let mut v3 = k1 ^ 0x7465_6462_7974_6573;

        for &m in words {
            v3 ^= m;
            sipround!(v0, v1, v2, v3);
            sipround!(v0, v1, v2, v3);
            v0 ^= m;
        }
        let last = ((words.len() as u64 * 8) & 0xff) << 56;
        v3 ^= last;
        sipround!(v0, v1, v2, v3);
        sipround!(v0, v1, v2, v3);
        v0 ^= last;

        v2 ^= 0xff;
        sipround!(v0, v1, v2, v3);
        sipround!(v0, v1, v2, v3);
        sipround!(v0, v1, v2, v3);
        sipround!(v0, v1, v2, v3);
        v0 ^ v1 ^ v2 ^ v3
    }

}

/// 256-bit key fixing one experiment's entire randomness.
///
/// Two oracles built from equal seeds are behaviorally identical. External
/// seed material (hex strings, test integers) is expanded through the PRF so
/// that all 256 internal bits are uniformly mixed regardless of how the seed
/// was supplied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MasterSeed([u8; 32]);

const BOOT_K0: u64 = 0x6869_6262_2d73_6565; // ASCII tag material, arbitrary fixed values
const BOOT_K1: u64 = 0x642d_6578_7061_6e64;

impl MasterSeed {
    fn expand(raw: &[u8]) -> Self {
        let mut out = [0u8; 32];
        for i in 0..4 {
            let mut msg = Vec::with_capacity(raw.len() + 1);
            msg.extend_from_slice(raw);
            msg.push(i as u8);
            out[i * 8..(i + 1) * 8]
                .copy_from_slice(&sip::hash_bytes(BOOT_K0, BOOT_K1, &msg).to_le_bytes());
        }
        MasterSeed(out)
    }

    /// Parses exactly 64 hex characters and expands them to the internal key.
    pub fn from_hex(s: &str) -> Result<Self, Error> {
        let s = s.trim();
        if s.len() != 64 {
            return Err(Error::BadSeed(format!(
                "expected 64 hex characters, got {}",
                s.len()
            )));
        }
        let mut raw = [0u8; 32];
        for (i, chunk) in s.as_bytes().chunks_exact(2).enumerate() {
            let hi = (chunk[0] as char).to_digit(16).ok_or_else(|| {
                Error::BadSeed(format!("non-hex character {:?}", chunk[0] as char))
            })?;
            let lo = (chunk[1] as char).to_digit(16).ok_or_else(|| {
                Error::BadSeed(format!("non-hex character {:?}", chunk[1] as char))
            })?;
            raw[i] = (hi * 16 + lo) as u8;
        }
        Ok(Self::expand(&raw))
    }

    /// Convenience constructor for tests and defaults.
    pub fn from_u64(x: u64) -> Self {
        Self::expand(&x.to_le_bytes())
    }

    /// Child seed for an independent sub-experiment (trial, pair, ...).
    /// Distinct `(purpose, index)` pairs yield independent-looking keys.
    pub fn derive(&self, purpose: &str, index: u64) -> Self {
        let mut raw = Vec::with_capacity(32 + 8 + purpose.len());
        raw.extend_from_slice(&self.0);
        raw.extend_from_slice(&index.to_le_bytes());
        raw.extend_from_slice(purpose.as_bytes());
        Self::expand(&raw)
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        self.0.iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl fmt::Display for MasterSeed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// Short tag naming a stream's purpose. Distinct purposes use distinct tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamLabel(pub &'static str);

pub const LABEL_H1: StreamLabel = StreamLabel("h1");
pub const LABEL_H2: StreamLabel = StreamLabel("h2");
pub const LABEL_TYPE: StreamLabel = StreamLabel("type");
pub const LABEL_ROUND: StreamLabel = StreamLabel("round");
pub const LABEL_DUMMY: StreamLabel = StreamLabel("dummy");
pub const LABEL_ECO: StreamLabel = StreamLabel("eco");

/// Interface through which allocators consume randomness.
///
/// The production implementation is [`RandomOracle`]; tests substitute fixed
/// tables to pin down hand-computed scenarios.
pub trait Randomness {
    /// First-choice bin of `ball`, uniform over `[0, n)`.
    fn bin1(&self, ball: BallId, n: usize) -> BinIndex;

    /// Second-choice bin of `ball`, an independent stream from `bin1`.
    fn bin2(&self, ball: BallId, n: usize) -> BinIndex;

    /// Type of `ball`, with marginals (0.89, 0.10, 0.01).
    fn ball_type(&self, ball: BallId) -> BallType;

    /// Round assignment in `[1, t*]`, present only for round-assigned balls.
    ///
    /// Round-assigned coincides with Type 3: only those balls are ever
    /// rethrown, so the population that pays recourse in the slicing rounds
    /// is the same population whose second hashes the pre-baking stage is
    /// allowed to consume. Conditioned on assignment, round `t` is drawn
    /// with probability `m_{t-1} / sum_q m_{q-1}`.
    fn round_of(&self, ball: BallId, sched: &Schedule) -> Option<usize>;

    /// Position `k` of the second-hash tape for `bin` in the given swap
    /// phase, uniform over `[0, n)`.
    fn dummy_bin2(&self, bin: BinIndex, phase: SwapPhase, k: u64, n: usize) -> BinIndex;

    /// Subgraph label of `ball` in `[0, parts)`. Depends only on the seed and
    /// the ball, so a ball keeps its label across different set memberships.
    fn eco_part(&self, ball: BallId, parts: u32) -> u32;
}

/// Deterministic oracle keyed by a master seed.
///
/// Stateless after construction; safe to share across threads.
#[derive(Debug, Clone)]
pub struct RandomOracle {
    seed: MasterSeed,
    k_h1: (u64, u64),
    k_h2: (u64, u64),
    k_type: (u64, u64),
    k_round: (u64, u64),
    k_dummy: (u64, u64),
    k_eco: (u64, u64),
}

/// Maps a uniform word to `[0, n)` by the multiply-high method.
#[inline]
fn to_range(word: u64, n: u64) -> u64 {
    ((word as u128 * n as u128) >> 64) as u64
}

// Cut points partitioning the 64-bit word space into 0.89 / 0.10 / 0.01.
const TYPE_ONE_CUT: u64 = ((89u128 << 64) / 100) as u64;
const TYPE_TWO_CUT: u64 = ((99u128 << 64) / 100) as u64;

impl RandomOracle {
    pub fn new(seed: MasterSeed) -> Self {
        let derive = |label: StreamLabel| Self::derive_subkey(&seed, label);
        RandomOracle {
            k_h1: derive(LABEL_H1),
            k_h2: derive(LABEL_H2),
            k_type: derive(LABEL_TYPE),
            k_round: derive(LABEL_ROUND),
            k_dummy: derive(LABEL_DUMMY),
            k_eco: derive(LABEL_ECO),
            seed,
        }
    }

    pub fn seed(&self) -> &MasterSeed {
        &self.seed
    }

    fn derive_subkey(seed: &MasterSeed, label: StreamLabel) -> (u64, u64) {
        let b = seed.as_bytes();
        let k0 = u64::from_le_bytes(b[0..8].try_into().unwrap());
        let k1 = u64::from_le_bytes(b[8..16].try_into().unwrap());
        let half = |sel: u8| {
            let mut msg = Vec::with_capacity(17 + label.0.len());
            msg.extend_from_slice(&b[16..32]);
            msg.push(sel);
            msg.extend_from_slice(label.0.as_bytes());
            sip::hash_bytes(k0, k1, &msg)
        };
        (half(0), half(1))
    }

    /// Raw keyed PRF word for `(label, inputs)`.
    pub fn prf(&self, label: StreamLabel, inputs: &[u64]) -> u64 {
        let key = match label.0 {
            "h1" => self.k_h1,
            "h2" => self.k_h2,
            "type" => self.k_type,
            "round" => self.k_round,
            "dummy" => self.k_dummy,
            "eco" => self.k_eco,
            _ => Self::derive_subkey(&self.seed, label),
        };
        sip::hash_words(key.0, key.1, inputs)
    }

    #[inline]
    fn stream_word(key: (u64, u64), inputs: &[u64]) -> u64 {
        sip::hash_words(key.0, key.1, inputs)
    }
}

impl Randomness for RandomOracle {
    fn bin1(&self, ball: BallId, n: usize) -> BinIndex {
        assert!(n >= 1, "bin count must be >= 1");
        BinIndex(to_range(Self::stream_word(self.k_h1, &[ball.0]), n as u64) as u32)
    }

    fn bin2(&self, ball: BallId, n: usize) -> BinIndex {
        assert!(n >= 1, "bin count must be >= 1");
        BinIndex(to_range(Self::stream_word(self.k_h2, &[ball.0]), n as u64) as u32)
    }

    fn ball_type(&self, ball: BallId) -> BallType {
        let w = Self::stream_word(self.k_type, &[ball.0]);
        if w < TYPE_ONE_CUT {
            BallType::One
        } else if w < TYPE_TWO_CUT {
            BallType::Two
        } else {
            BallType::Three
        }
    }

    fn round_of(&self, ball: BallId, sched: &Schedule) -> Option<usize> {
        if sched.t_star() == 0 || self.ball_type(ball) != BallType::Three {
            return None;
        }
        let weights = sched.round_weights();
        let total: u64 = weights.iter().sum();
        debug_assert!(total > 0);
        let mut r = to_range(Self::stream_word(self.k_round, &[ball.0]), total);
        for (i, &w) in weights.iter().enumerate() {
            if r < w {
                return Some(i + 1);
            }
            r -= w;
        }
        unreachable!("round draw exceeded total weight")
    }

    fn dummy_bin2(&self, bin: BinIndex, phase: SwapPhase, k: u64, n: usize) -> BinIndex {
        assert!(n >= 1, "bin count must be >= 1");
        let w = Self::stream_word(self.k_dummy, &[bin.0 as u64, phase.as_u64(), k]);
        BinIndex(to_range(w, n as u64) as u32)
    }

    fn eco_part(&self, ball: BallId, parts: u32) -> u32 {
        assert!(parts >= 1, "parts must be >= 1");
        to_range(Self::stream_word(self.k_eco, &[ball.0]), parts as u64) as u32
    }
}

impl<R: Randomness + ?Sized> Randomness for &R {
    fn bin1(&self, ball: BallId, n: usize) -> BinIndex {
        (**self).bin1(ball, n)
    }
    fn bin2(&self, ball: BallId, n: usize) -> BinIndex {
        (**self).bin2(ball, n)
    }
    fn ball_type(&self, ball: BallId) -> BallType {
        (**self).ball_type(ball)
    }
    fn round_of(&self, ball: BallId, sched: &Schedule) -> Option<usize> {
        (**self).round_of(ball, sched)
    }
    fn dummy_bin2(&self, bin: BinIndex, phase: SwapPhase, k: u64, n: usize) -> BinIndex {
        (**self).dummy_bin2(bin, phase, k, n)
    }
    fn eco_part(&self, ball: BallId, parts: u32) -> u32 {
        (**self).eco_part(ball, parts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Config;
    use crate::schedule::build_schedule;

    fn oracle() -> RandomOracle {
        RandomOracle::new(MasterSeed::from_u64(0xA11CE))
    }

    #[test]
    fn prf_is_deterministic() {
        let o = oracle();
        let a = o.prf(LABEL_H1, &[1, 2, 3]);
        let b = o.prf(LABEL_H1, &[1, 2, 3]);
        assert_eq!(a, b);
        let o2 = RandomOracle::new(MasterSeed::from_u64(0xA11CE));
        assert_eq!(o2.prf(LABEL_H1, &[1, 2, 3]), a);
    }

    #[test]
    fn domain_separation() {
        let o = oracle();
        let mut collisions = 0;
        for x in 0..10_000u64 {
            if o.prf(LABEL_H1, &[x]) == o.prf(LABEL_H2, &[x]) {
                collisions += 1;
            }
        }
        assert!(collisions < 10, "{collisions} collisions across labels");
    }

    #[test]
    fn bit_balance() {
        let o = oracle();
        let mut ones = 0u64;
        let samples = 1_000_000u64;
        for x in 0..samples / 64 {
            ones += o.prf(LABEL_TYPE, &[x, 7]).count_ones() as u64;
        }
        let ratio = ones as f64 / samples as f64;
        assert!((ratio - 0.5).abs() < 0.01, "bit balance {ratio}");
    }

    #[test]
    fn single_bin_hashes_to_zero() {
        let o = oracle();
        for x in 0..100 {
            assert_eq!(o.bin1(BallId(x), 1), BinIndex(0));
            assert_eq!(o.bin2(BallId(x), 1), BinIndex(0));
        }
    }

    #[test]
    fn hashes_stable_across_calls() {
        let o = oracle();
        let b = BallId(424242);
        assert_eq!(o.bin1(b, 77), o.bin1(b, 77));
        assert_eq!(o.bin2(b, 77), o.bin2(b, 77));
        assert_eq!(o.ball_type(b), o.ball_type(b));
        assert_eq!(o.eco_part(b, 5), o.eco_part(b, 5));
    }

    #[test]
    fn type_frequencies_match_marginals() {
        let o = oracle();
        let samples = 1_000_000u64;
        let mut counts = [0u64; 3];
        for x in 0..samples {
            counts[o.ball_type(BallId(x)).index()] += 1;
        }
        let f1 = counts[0] as f64 / samples as f64;
        let f3 = counts[2] as f64 / samples as f64;
        // 3-sigma binomial tolerances at 1e6 samples.
        assert!((f1 - 0.89).abs() < 0.002, "type-1 frequency {f1}");
        assert!((f3 - 0.01).abs() < 0.0005, "type-3 frequency {f3}");
    }

    #[test]
    fn round_of_none_for_non_type3() {
        let o = oracle();
        let sched = build_schedule(&Config::new(4, 64).unwrap());
        assert!(sched.t_star() > 0);
        for x in 0..2000u64 {
            let b = BallId(x);
            if o.ball_type(b) != BallType::Three {
                assert_eq!(o.round_of(b, &sched), None);
            }
        }
    }

    #[test]
    fn round_of_single_round() {
        let o = oracle();
        // mu = 4 executes exactly one round.
        let sched = build_schedule(&Config::new(16, 64).unwrap());
        assert_eq!(sched.t_star(), 1);
        let mut saw_round = false;
        for x in 0..20_000u64 {
            if let Some(t) = o.round_of(BallId(x), &sched) {
                assert_eq!(t, 1);
                saw_round = true;
            }
        }
        assert!(saw_round);
    }

    #[test]
    fn round_distribution_matches_weights() {
        let o = oracle();
        // mu = 16: weights m_0 : m_1 : m_2 = 16 : 8 : 4.
        let sched = build_schedule(&Config::new(64, 1024).unwrap());
        assert_eq!(sched.round_weights(), &[1024, 512, 256]);
        let mut counts = [0u64; 3];
        let mut assigned = 0u64;
        for x in 0..2_000_000u64 {
            if let Some(t) = o.round_of(BallId(x), &sched) {
                counts[t - 1] += 1;
                assigned += 1;
            }
        }
        let total_w = 28.0;
        for (i, w) in [16.0, 8.0, 4.0].into_iter().enumerate() {
            let p = w / total_w;
            let f = counts[i] as f64 / assigned as f64;
            let tol = 3.0 * (p * (1.0 - p) / assigned as f64).sqrt();
            assert!(
                (f - p).abs() < tol,
                "round {} freq {f} vs {p} (tol {tol})",
                i + 1
            );
        }
    }

    #[test]
    fn dummy_tapes_are_stable_and_separated() {
        let o = oracle();
        let b = BinIndex(3);
        assert_eq!(
            o.dummy_bin2(b, SwapPhase::One, 5, 32),
            o.dummy_bin2(b, SwapPhase::One, 5, 32)
        );
        let mut same = 0;
        for k in 0..1000 {
            if o.dummy_bin2(b, SwapPhase::One, k, 1 << 30)
                == o.dummy_bin2(b, SwapPhase::Two, k, 1 << 30)
            {
                same += 1;
            }
        }
        assert!(same < 5, "phase tapes look correlated ({same})");
    }

    #[test]
    fn eco_part_single_part() {
        let o = oracle();
        for x in 0..100 {
            assert_eq!(o.eco_part(BallId(x), 1), 0);
        }
    }

    #[test]
    fn eco_parts_balanced() {
        let o = oracle();
        let mut counts = [0u64; 4];
        let samples = 100_000u64;
        for x in 0..samples {
            counts[o.eco_part(BallId(x), 4) as usize] += 1;
        }
        for c in counts {
            let f = c as f64 / samples as f64;
            assert!((f - 0.25).abs() < 0.01, "part share {f}");
        }
    }

    #[test]
    fn seed_hex_roundtrip_and_validation() {
        let hex = "00112233445566778899aabbccddeeff00112233445566778899aabbccddeeff";
        let s1 = MasterSeed::from_hex(hex).unwrap();
        let s2 = MasterSeed::from_hex(&hex.to_uppercase()).unwrap();
        assert_eq!(s1, s2);
        assert!(MasterSeed::from_hex("abcd").is_err());
        assert!(MasterSeed::from_hex(&"zz".repeat(32)).is_err());
        // Different raw seeds expand to different keys.
        assert_ne!(
            MasterSeed::from_u64(1).as_bytes(),
            MasterSeed::from_u64(2).as_bytes()
        );
    }

    #[test]
    fn equal_seeds_identical_behavior() {
        let a = RandomOracle::new(MasterSeed::from_u64(7));
        let b = RandomOracle::new(MasterSeed::from_u64(7));
        for x in 0..1000u64 {
            assert_eq!(a.bin1(BallId(x), 37), b.bin1(BallId(x), 37));
            assert_eq!(a.ball_type(BallId(x)), b.ball_type(BallId(x)));
        }
    }
}
