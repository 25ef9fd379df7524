//! Core state: balls, bins, configurations, allocations, and the load and
//! recourse metrics shared by every allocator.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::scalar::Scalar;

/// Identifier of a ball, totally ordered by its numeric value.
///
/// Numeric order is the canonical ordering used everywhere a canonical total
/// ordering is required. Ids at or above [`PAD_DUMMY_BASE`] are reserved for
/// padding dummies and must not be used for real balls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BallId(pub u64);

/// Start of the reserved id range for padding dummies.
pub const PAD_DUMMY_BASE: u64 = 0xFFFF_0000_0000_0000;

/// Real ball ids must be strictly below this bound.
pub const REAL_ID_LIMIT: u64 = PAD_DUMMY_BASE;

/// The `j`-th padding dummy (0-based). Dummy ids are fixed and consumed in
/// order, so equal sets always pad to equal padded sets.
pub fn pad_dummy(j: u64) -> BallId {
    BallId(PAD_DUMMY_BASE + j)
}

impl BallId {
    pub fn is_pad_dummy(self) -> bool {
        self.0 >= PAD_DUMMY_BASE
    }
}

impl fmt::Display for BallId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Index of a bin, in `[0, n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BinIndex(pub u32);

impl BinIndex {
    pub fn as_usize(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for BinIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Which of a ball's two allowable locations it occupies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Choice {
    First,
    Second,
}

impl Choice {
    pub fn as_u8(self) -> u8 {
        match self {
            Choice::First => 1,
            Choice::Second => 2,
        }
    }
}

/// Ball type, drawn per ball with probabilities (0.89, 0.10, 0.01).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BallType {
    One,
    Two,
    Three,
}

impl BallType {
    pub const ALL: [BallType; 3] = [BallType::One, BallType::Two, BallType::Three];

    pub fn index(self) -> usize {
        match self {
            BallType::One => 0,
            BallType::Two => 1,
            BallType::Three => 2,
        }
    }

    pub fn number(self) -> u8 {
        self.index() as u8 + 1
    }
}

/// Phase of the two-phase swapping procedure, used to select dummy tapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SwapPhase {
    One,
    Two,
}

impl SwapPhase {
    pub fn as_u64(self) -> u64 {
        match self {
            SwapPhase::One => 1,
            SwapPhase::Two => 2,
        }
    }
}

/// System configuration: `n` bins, capacity of `m` balls.
///
/// The density `mu = m / n` is kept exact; integer-threshold consumers floor
/// it explicitly via [`Config::mu_floor`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Config {
    n: usize,
    m: usize,
    eco_parts: u32,
}

/// Default number of random subgraphs used by the extended orientation
/// procedure (the inverse of its sampling constant).
pub const DEFAULT_ECO_PARTS: u32 = 4;

impl Config {
    pub fn new(n: usize, m: usize) -> Result<Self, Error> {
        if n == 0 {
            return Err(Error::InvalidConfig("bin count n must be >= 1".into()));
        }
        if m == 0 {
            return Err(Error::InvalidConfig("capacity m must be >= 1".into()));
        }
        Ok(Config {
            n,
            m,
            eco_parts: DEFAULT_ECO_PARTS,
        })
    }

    pub fn with_eco_parts(mut self, parts: u32) -> Result<Self, Error> {
        if parts == 0 {
            return Err(Error::InvalidConfig("eco_parts must be >= 1".into()));
        }
        self.eco_parts = parts;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn eco_parts(&self) -> u32 {
        self.eco_parts
    }

    /// `floor(m / n)`.
    pub fn mu_floor(&self) -> u64 {
        (self.m / self.n) as u64
    }

    /// `m / n` in the requested scalar.
    pub fn mu<S: Scalar>(&self) -> S {
        S::from_ratio(self.m as u64, self.n as u64)
    }
}

/// A set of balls, stored sorted by id.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BallSet {
    ids: Vec<BallId>,
}

impl BallSet {
    pub fn new(mut ids: Vec<BallId>) -> Self {
        ids.sort_unstable();
        ids.dedup();
        BallSet { ids }
    }

    pub fn empty() -> Self {
        BallSet::default()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn contains(&self, ball: BallId) -> bool {
        self.ids.binary_search(&ball).is_ok()
    }

    /// Inserts `ball`; returns false if it was already present.
    pub fn insert(&mut self, ball: BallId) -> bool {
        match self.ids.binary_search(&ball) {
            Ok(_) => false,
            Err(pos) => {
                self.ids.insert(pos, ball);
                true
            }
        }
    }

    /// Removes `ball`; returns false if it was absent.
    pub fn remove(&mut self, ball: BallId) -> bool {
        match self.ids.binary_search(&ball) {
            Ok(pos) => {
                self.ids.remove(pos);
                true
            }
            Err(_) => false,
        }
    }

    pub fn as_slice(&self) -> &[BallId] {
        &self.ids
    }

    pub fn iter(&self) -> impl Iterator<Item = BallId> + '_ {
        self.ids.iter().copied()
    }
}

impl FromIterator<BallId> for BallSet {
    fn from_iter<I: IntoIterator<Item = BallId>>(iter: I) -> Self {
        BallSet::new(iter.into_iter().collect())
    }
}

/// Pads `s` with reserved dummy balls up to exactly `m` elements.
///
/// The same input always yields the same padded set, since the dummy ids are
/// fixed and taken in order.
pub fn pad_to_capacity(s: &BallSet, cfg: &Config) -> Result<BallSet, Error> {
    if s.len() > cfg.m() {
        return Err(Error::CapacityExceeded {
            size: s.len(),
            capacity: cfg.m(),
        });
    }
    let mut ids = s.ids.clone();
    let missing = cfg.m() - ids.len();
    ids.extend((0..missing as u64).map(pad_dummy));
    // Dummy ids live above every real id, so appending preserves order unless
    // the input already contained reserved ids; re-sort handles that case.
    if !ids.is_sorted() {
        ids.sort_unstable();
        ids.dedup();
    }
    Ok(BallSet { ids })
}

/// One placed ball.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AllocEntry {
    pub ball: BallId,
    pub bin: BinIndex,
    pub choice: Choice,
}

/// A total assignment of a ball set to bins, sorted by ball id.
///
/// The entry list is the state whose uniqueness constitutes history
/// independence: recomputing the allocation of the same set under the same
/// seed must reproduce it bit for bit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Allocation {
    n: usize,
    entries: Vec<AllocEntry>,
}

impl Allocation {
    pub fn from_entries(n: usize, mut entries: Vec<AllocEntry>) -> Self {
        entries.sort_unstable_by_key(|e| e.ball);
        debug_assert!(entries.windows(2).all(|w| w[0].ball < w[1].ball));
        debug_assert!(entries.iter().all(|e| e.bin.as_usize() < n));
        Allocation { n, entries }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[AllocEntry] {
        &self.entries
    }

    pub fn bin_of(&self, ball: BallId) -> Option<(BinIndex, Choice)> {
        self.entries
            .binary_search_by_key(&ball, |e| e.ball)
            .ok()
            .map(|i| (self.entries[i].bin, self.entries[i].choice))
    }

    /// Per-bin ball counts. Padding dummies are counted unless excluded.
    pub fn loads(&self, count_dummies: bool) -> LoadVector {
        let mut counts = vec![0u64; self.n];
        for e in &self.entries {
            if count_dummies || !e.ball.is_pad_dummy() {
                counts[e.bin.as_usize()] += 1;
            }
        }
        LoadVector {
            counts,
            includes_dummies: count_dummies,
        }
    }

    /// Line-oriented text form: one `<ball> <bin> <choice>` record per ball,
    /// sorted by ball id. Byte equality of serializations is the history
    /// independence test.
    pub fn serialize(&self) -> String {
        let mut out = String::with_capacity(self.entries.len() * 16);
        for e in &self.entries {
            out.push_str(&format!("{} {} {}\n", e.ball, e.bin, e.choice.as_u8()));
        }
        out
    }
}

/// Per-bin load counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadVector {
    counts: Vec<u64>,
    includes_dummies: bool,
}

impl LoadVector {
    pub fn from_counts(counts: Vec<u64>, includes_dummies: bool) -> Self {
        LoadVector {
            counts,
            includes_dummies,
        }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn includes_dummies(&self) -> bool {
        self.includes_dummies
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn max_load(&self) -> u64 {
        self.counts.iter().copied().max().unwrap_or(0)
    }

    /// `max_i load_i - m/n`. May be negative.
    pub fn overload<S: Scalar>(&self, cfg: &Config) -> S {
        S::from_count(self.max_load()) - cfg.mu::<S>()
    }

    /// `sum_i max(load_i - m/n, 0)`.
    pub fn cumulative_overload<S: Scalar>(&self, cfg: &Config) -> S {
        let mu = cfg.mu::<S>();
        let mut acc = S::zero();
        for &c in &self.counts {
            let excess = S::from_count(c) - mu.clone();
            if excess > S::zero() {
                acc = acc + excess;
            }
        }
        acc
    }
}

/// Recourse between the allocations of two neighboring sets: one plus the
/// number of shared balls whose bin changed.
///
/// Padding dummies count as ordinary balls. The neighbor precondition is on
/// the real sets; allocations whose real domains differ in more than one ball
/// are a misuse.
pub fn recourse(a: &Allocation, b: &Allocation) -> Result<u64, Error> {
    let diff = real_symmetric_difference(a, b);
    if diff > 1 {
        return Err(Error::NotNeighbors { diff });
    }
    let mut moved = 0u64;
    let (mut i, mut j) = (0usize, 0usize);
    let (ea, eb) = (&a.entries, &b.entries);
    while i < ea.len() && j < eb.len() {
        match ea[i].ball.cmp(&eb[j].ball) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                if ea[i].bin != eb[j].bin {
                    moved += 1;
                }
                i += 1;
                j += 1;
            }
        }
    }
    Ok(1 + moved)
}

fn real_symmetric_difference(a: &Allocation, b: &Allocation) -> usize {
    let mut diff = 0usize;
    let (mut i, mut j) = (0usize, 0usize);
    let (ea, eb) = (&a.entries, &b.entries);
    while i < ea.len() || j < eb.len() {
        if i < ea.len() && ea[i].ball.is_pad_dummy() {
            i += 1;
            continue;
        }
        if j < eb.len() && eb[j].ball.is_pad_dummy() {
            j += 1;
            continue;
        }
        match (ea.get(i), eb.get(j)) {
            (Some(x), Some(y)) => match x.ball.cmp(&y.ball) {
                std::cmp::Ordering::Less => {
                    diff += 1;
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    diff += 1;
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    i += 1;
                    j += 1;
                }
            },
            (Some(_), None) => {
                diff += 1;
                i += 1;
            }
            (None, Some(_)) => {
                diff += 1;
                j += 1;
            }
            (None, None) => break,
        }
    }
    diff
}
