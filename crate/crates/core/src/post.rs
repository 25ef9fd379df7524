//! Overload post-processing: extract the over-height balls, swap them for
//! fresh-randomness surrogates in two phases, reorient the surrogate set and
//! every fail set per-component, and compose the final allocation with
//! last-set-wins semantics.

use std::collections::HashSet;

use serde::Serialize;

use crate::census::{build_fail_sets, FailSets, TypedBinCensus};
use crate::error::Error;
use crate::graph::{eco_orient, oriented_bin, ComponentStats, CuckooGraph, GraphEdge};
use crate::model::{
    pad_to_capacity, AllocEntry, Allocation, BallId, BallSet, BallType, BinIndex, Choice, Config,
    LoadVector, SwapPhase,
};
use crate::oracle::Randomness;
use crate::slice_spread::{slice_spread_instrumented, RoundDiagnostics};

// Reserved id ranges for swap dummies; used only inside internal orientation
// graphs, never in reported allocations.
const SWAP_DUMMY_P1_BASE: u64 = 0xFFFF_2000_0000_0000;
const SWAP_DUMMY_P2_BASE: u64 = 0xFFFF_3000_0000_0000;

/// Identity of a swap-set member: a real set ball, or a dummy standing in
/// for a failure, addressed by its tape position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SwapId {
    Real(BallId),
    Dummy {
        phase: SwapPhase,
        bin: BinIndex,
        index: u64,
    },
}

impl SwapId {
    pub fn is_dummy(&self) -> bool {
        matches!(self, SwapId::Dummy { .. })
    }

    /// Synthetic ball id for graph edges; dummies get reserved-range ids.
    pub fn edge_ball_id(&self) -> BallId {
        match *self {
            SwapId::Real(b) => b,
            SwapId::Dummy { phase, bin, index } => {
                let base = match phase {
                    SwapPhase::One => SWAP_DUMMY_P1_BASE,
                    SwapPhase::Two => SWAP_DUMMY_P2_BASE,
                };
                debug_assert!(index < 1 << 24);
                BallId(base | (bin.0 as u64) << 24 | index)
            }
        }
    }
}

/// A member of the phase-1 or phase-2 set with its two-choice edge: first
/// endpoint is the bin it came from, second endpoint is a never-consumed
/// hash (the ball's own second hash, or a tape read for dummies).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SwapMember {
    pub id: SwapId,
    pub first: BinIndex,
    pub second: BinIndex,
}

/// Outcome of the two-phase swapping procedure.
#[derive(Debug, Clone, Serialize)]
pub struct SwapState {
    /// The extracted over-height balls, sorted.
    pub extracted: Vec<BallId>,
    /// Phase-1 set: real Type-2 victims plus phase-1 dummies.
    pub phase1: Vec<SwapMember>,
    /// Phase-2 set: real Type-1 victims plus phase-2 dummies.
    pub b_prime: Vec<SwapMember>,
    /// Per-bin phase-1 failure counts (shortfall of Type-2 victims).
    pub phase1_failures: Vec<u32>,
    /// Per-bin phase-2 failure counts (shortfall of Type-1 victims).
    pub phase2_failures: Vec<u32>,
}

impl SwapState {
    pub fn phase1_dummy_count(&self) -> usize {
        self.phase1.iter().filter(|m| m.id.is_dummy()).count()
    }

    pub fn b_prime_dummy_count(&self) -> usize {
        self.b_prime.iter().filter(|m| m.id.is_dummy()).count()
    }
}

/// Extracts the over-height balls: from each bin holding more than
/// `floor(m/n)` balls, the excess count of largest-id residents.
pub fn extract_overheight(alloc: &Allocation, cfg: &Config) -> BallSet {
    let threshold = cfg.mu_floor();
    let mut residents: Vec<Vec<BallId>> = vec![Vec::new(); cfg.n()];
    for e in alloc.entries() {
        residents[e.bin.as_usize()].push(e.ball);
    }
    let mut extracted = Vec::new();
    for balls in residents {
        let len = balls.len() as u64;
        if len > threshold {
            let take = (len - threshold) as usize;
            // Entries are scanned in ball order, so the tail holds the
            // largest ids of the bin.
            extracted.extend_from_slice(&balls[balls.len() - take..]);
        }
    }
    BallSet::new(extracted)
}

/// Two-phase swapping of the extracted balls `b` for fresh-randomness
/// surrogates.
///
/// Phase 1: every bin holding `k_i` extracted balls gives up its
/// `min(a_i, k_i)` smallest-id Type-2 residents, plus `k_i - a_i` tape-backed
/// dummies on shortfall. Phase 2: each phase-1 member lands at its second
/// endpoint; every bin receiving `j_i` of them gives up its `min(b_i, j_i)`
/// smallest-id Type-1 residents into the output set, plus dummies on
/// shortfall. Extracted balls and failed balls stay where they are.
pub fn two_phase_swap<R: Randomness>(
    alloc: &Allocation,
    b: &BallSet,
    cfg: &Config,
    rng: &R,
) -> SwapState {
    let n = cfg.n();
    let b_members: HashSet<BallId> = b.iter().collect();

    // Residents by bin, in ball order, with types.
    let mut type1: Vec<Vec<BallId>> = vec![Vec::new(); n];
    let mut type2: Vec<Vec<BallId>> = vec![Vec::new(); n];
    let mut b_count = vec![0u32; n];
    for e in alloc.entries() {
        let bin = e.bin.as_usize();
        if b_members.contains(&e.ball) {
            b_count[bin] += 1;
            continue;
        }
        match rng.ball_type(e.ball) {
            BallType::One => type1[bin].push(e.ball),
            BallType::Two => type2[bin].push(e.ball),
            BallType::Three => {}
        }
    }

    // Phase 1.
    let mut phase1 = Vec::new();
    let mut phase1_failures = vec![0u32; n];
    for i in 0..n {
        let k_i = b_count[i] as usize;
        if k_i == 0 {
            continue;
        }
        let a_i = type2[i].len();
        let take = a_i.min(k_i);
        for &ball in &type2[i][..take] {
            phase1.push(SwapMember {
                id: SwapId::Real(ball),
                first: BinIndex(i as u32),
                second: rng.bin2(ball, n),
            });
        }
        let fails = (k_i - take) as u32;
        phase1_failures[i] = fails;
        for t in 0..fails as u64 {
            phase1.push(SwapMember {
                id: SwapId::Dummy {
                    phase: SwapPhase::One,
                    bin: BinIndex(i as u32),
                    index: t,
                },
                first: BinIndex(i as u32),
                second: rng.dummy_bin2(BinIndex(i as u32), SwapPhase::One, t, n),
            });
        }
    }

    // Phase 2: land phase-1 members at their second endpoints.
    let mut arrivals: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (idx, m) in phase1.iter().enumerate() {
        arrivals[m.second.as_usize()].push(idx);
    }
    let mut b_prime = Vec::new();
    let mut phase2_failures = vec![0u32; n];
    for i in 0..n {
        let j_i = arrivals[i].len();
        if j_i == 0 {
            continue;
        }
        let take = type1[i].len().min(j_i);
        for &ball in &type1[i][..take] {
            b_prime.push(SwapMember {
                id: SwapId::Real(ball),
                first: BinIndex(i as u32),
                second: rng.bin2(ball, n),
            });
        }
        let fails = (j_i - take) as u32;
        phase2_failures[i] = fails;
        for t in 0..fails as u64 {
            b_prime.push(SwapMember {
                id: SwapId::Dummy {
                    phase: SwapPhase::Two,
                    bin: BinIndex(i as u32),
                    index: t,
                },
                first: BinIndex(i as u32),
                second: rng.dummy_bin2(BinIndex(i as u32), SwapPhase::Two, t, n),
            });
        }
    }

    debug_assert_eq!(phase1.len(), b.len());
    debug_assert_eq!(b_prime.len(), phase1.len());

    SwapState {
        extracted: b.iter().collect(),
        phase1,
        b_prime,
        phase1_failures,
        phase2_failures,
    }
}

/// True iff every bin's count is at most `m / n` (exact rational compare).
pub fn fsafe_check(excluded_loads: &LoadVector, cfg: &Config) -> bool {
    let m = cfg.m() as u128;
    let n = cfg.n() as u128;
    excluded_loads
        .counts()
        .iter()
        .all(|&c| (c as u128) * n <= m)
}

/// Diagnostics of one full-pipeline run.
#[derive(Debug, Clone, Serialize)]
pub struct FullDiagnostics {
    pub rounds: RoundDiagnostics,
    pub extracted: usize,
    pub phase1_dummies: usize,
    pub phase2_dummies: usize,
    pub phase1_failure_total: u64,
    pub phase2_failure_total: u64,
    /// F-prime safety: with the fail-superset and phase-2 set removed, every
    /// bin holds at most m/n set balls. Deterministic for mu >= 100; logged
    /// either way.
    pub fsafe_ok: bool,
    pub fsafe_asserted: bool,
    pub fail_set_sizes: Vec<(String, usize)>,
    pub f_prime_size: usize,
    /// Component statistics of every extended-orientation application, the
    /// phase-2 set first, then each fail set in application order.
    pub eco_components: Vec<(String, Vec<ComponentStats>)>,
    /// Loads including swap dummies occupying internal slots.
    pub internal_loads: LoadVector,
}

impl FullDiagnostics {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("diagnostics serialize")
    }

    pub fn max_component_cycles(&self) -> usize {
        self.eco_components
            .iter()
            .flat_map(|(_, stats)| stats.iter().map(|s| s.cycles))
            .max()
            .unwrap_or(0)
    }

    pub fn mean_component_edges(&self) -> f64 {
        let mut total = 0usize;
        let mut count = 0usize;
        for (_, stats) in &self.eco_components {
            for s in stats {
                total += s.edges;
                count += 1;
            }
        }
        if count == 0 {
            0.0
        } else {
            total as f64 / count as f64
        }
    }
}

/// The full overload-reduction pipeline over the padded set.
pub fn full_allocate<R: Randomness>(
    s: &BallSet,
    cfg: &Config,
    rng: &R,
) -> Result<(Allocation, FullDiagnostics), Error> {
    let padded = pad_to_capacity(s, cfg)?;
    full_of(&padded, cfg, rng)
}

/// The full pipeline over the set exactly as given, without padding.
pub fn full_allocate_raw<R: Randomness>(
    set: &BallSet,
    cfg: &Config,
    rng: &R,
) -> Result<(Allocation, FullDiagnostics), Error> {
    if set.len() > cfg.m() {
        return Err(Error::CapacityExceeded {
            size: set.len(),
            capacity: cfg.m(),
        });
    }
    full_of(set, cfg, rng)
}

fn full_of<R: Randomness>(
    set: &BallSet,
    cfg: &Config,
    rng: &R,
) -> Result<(Allocation, FullDiagnostics), Error> {
    let n = cfg.n();

    // Step 1: pre-bake.
    let pre = slice_spread_instrumented(set, cfg, rng, false)?;
    let pre_alloc = pre.allocation;

    // Step 2: extract and swap.
    let b = extract_overheight(&pre_alloc, cfg);
    let swap = two_phase_swap(&pre_alloc, &b, cfg, rng);

    // Positions after the swap: phase-1 real members sit at their second
    // endpoint, phase-2 real members leave the system (they re-enter through
    // orientation), everything else keeps its pre-bake position.
    let ids = set.as_slice();
    let mut bins: Vec<u32> = pre_alloc.entries().iter().map(|e| e.bin.0).collect();
    let mut placed: Vec<bool> = vec![true; ids.len()];
    let index_of = |ball: BallId| -> usize { ids.binary_search(&ball).expect("ball in set") };
    for m in &swap.phase1 {
        if let SwapId::Real(ball) = m.id {
            bins[index_of(ball)] = m.second.0;
        }
    }
    for m in &swap.b_prime {
        if let SwapId::Real(ball) = m.id {
            placed[index_of(ball)] = false;
        }
    }

    // Step 2b: fail sets from the census (allocation independent).
    let (_census, _class, fails) = build_fail_sets(ids, cfg, rng);
    let f_prime = fails.f_prime();
    let f_prime_set: HashSet<BallId> = f_prime.iter().copied().collect();

    // F-prime safety over the post-swap state: set balls outside the fail
    // superset and outside the phase-2 set, at their current positions.
    let fsafe_ok = {
        let mut counts = vec![0u64; n];
        for (idx, &ball) in ids.iter().enumerate() {
            if placed[idx] && !f_prime_set.contains(&ball) {
                counts[bins[idx] as usize] += 1;
            }
        }
        fsafe_check(&LoadVector::from_counts(counts, true), cfg)
    };
    let fsafe_asserted = cfg.mu_floor() >= 100;
    debug_assert!(!fsafe_asserted || fsafe_ok, "fail-superset safety violated");

    let mut eco_components = Vec::new();

    // Step 3: orient the phase-2 set; real members are placed at their
    // directed endpoint, dummies occupy internal slots only.
    let mut internal_dummy_loads = vec![0u64; n];
    for m in &swap.phase1 {
        if m.id.is_dummy() {
            // Phase-1 dummies landed at their second endpoint and stay there.
            internal_dummy_loads[m.second.as_usize()] += 1;
        }
    }
    {
        let edges: Vec<GraphEdge> = swap
            .b_prime
            .iter()
            .map(|m| GraphEdge {
                ball: m.id.edge_ball_id(),
                u: m.first,
                v: m.second,
            })
            .collect();
        let g = CuckooGraph::new(n, edges);
        let eco = eco_orient(&g, cfg.eco_parts(), rng);
        for m in &swap.b_prime {
            let ball = m.id.edge_ball_id();
            let dir = eco.orientation.dir_of(ball).expect("oriented");
            let edge = GraphEdge {
                ball,
                u: m.first,
                v: m.second,
            };
            let target = oriented_bin(&edge, dir);
            match m.id {
                SwapId::Real(real) => {
                    let idx = index_of(real);
                    bins[idx] = target.0;
                    placed[idx] = true;
                }
                SwapId::Dummy { .. } => internal_dummy_loads[target.as_usize()] += 1,
            }
        }
        eco_components.push(("B'".to_string(), eco.components));
    }

    // Step 4: reorient each fail set in application order; a ball in several
    // sets keeps the assignment of the last one.
    for (kind, members) in &fails.sets {
        if members.is_empty() {
            eco_components.push((kind.label(), Vec::new()));
            continue;
        }
        let edges: Vec<GraphEdge> = members
            .iter()
            .map(|&ball| GraphEdge {
                ball,
                u: rng.bin1(ball, n),
                v: rng.bin2(ball, n),
            })
            .collect();
        let g = CuckooGraph::new(n, edges);
        let eco = eco_orient(&g, cfg.eco_parts(), rng);
        for e in g.edges() {
            let dir = eco.orientation.dir_of(e.ball).expect("oriented");
            let idx = index_of(e.ball);
            bins[idx] = oriented_bin(e, dir).0;
            placed[idx] = true;
        }
        eco_components.push((kind.label(), eco.components));
    }

    // Compose the final allocation. Every ball is placed: phase-2 members
    // were all oriented in step 3 or overridden in step 4.
    let mut entries = Vec::with_capacity(ids.len());
    for (idx, &ball) in ids.iter().enumerate() {
        debug_assert!(placed[idx], "ball left unplaced");
        let bin = BinIndex(bins[idx]);
        let choice = if bin == rng.bin1(ball, n) {
            Choice::First
        } else {
            debug_assert_eq!(bin, rng.bin2(ball, n), "final bin not allowable");
            Choice::Second
        };
        entries.push(AllocEntry { ball, bin, choice });
    }
    let allocation = Allocation::from_entries(n, entries);

    let internal_loads = {
        let mut counts: Vec<u64> = allocation.loads(true).counts().to_vec();
        for (i, &d) in internal_dummy_loads.iter().enumerate() {
            counts[i] += d;
        }
        LoadVector::from_counts(counts, true)
    };

    let diagnostics = FullDiagnostics {
        rounds: pre.diagnostics,
        extracted: swap.extracted.len(),
        phase1_dummies: swap.phase1_dummy_count(),
        phase2_dummies: swap.b_prime_dummy_count(),
        phase1_failure_total: swap.phase1_failures.iter().map(|&x| x as u64).sum(),
        phase2_failure_total: swap.phase2_failures.iter().map(|&x| x as u64).sum(),
        fsafe_ok,
        fsafe_asserted,
        fail_set_sizes: fails.sizes(),
        f_prime_size: f_prime.len(),
        eco_components,
        internal_loads,
    };

    Ok((allocation, diagnostics))
}

/// Census JSON dump for external inspection.
pub fn census_json(census: &TypedBinCensus) -> String {
    serde_json::to_string(census).expect("census serializes")
}

/// Fail sets plus membership, for external inspection.
pub fn fail_sets_json(fails: &FailSets) -> String {
    #[derive(Serialize)]
    struct Entry {
        kind: String,
        members: Vec<u64>,
    }
    let entries: Vec<Entry> = fails
        .sets
        .iter()
        .map(|(k, v)| Entry {
            kind: k.label(),
            members: v.iter().map(|b| b.0).collect(),
        })
        .collect();
    serde_json::to_string(&entries).expect("fail sets serialize")
}

/// One-stop diagnostic dump of a set's pipeline state: per-bin census,
/// fail-set sizes, per-bin swap failure counts, and the dummy inventory.
pub fn diagnostic_dump<R: Randomness>(s: &BallSet, cfg: &Config, rng: &R) -> Result<String, Error> {
    #[derive(Serialize)]
    struct DummySlot {
        phase: SwapPhase,
        bin: u32,
        count: u32,
    }
    #[derive(Serialize)]
    struct Dump {
        n: usize,
        m: usize,
        census: TypedBinCensus,
        fail_set_sizes: Vec<(String, usize)>,
        f_prime_size: usize,
        extracted: usize,
        phase1_failures: Vec<u32>,
        phase2_failures: Vec<u32>,
        dummy_inventory: Vec<DummySlot>,
    }

    let padded = pad_to_capacity(s, cfg)?;
    let (pre, _) = crate::slice_spread::allocate_slice_spread_raw(&padded, cfg, rng)?;
    let b = extract_overheight(&pre, cfg);
    let swap = two_phase_swap(&pre, &b, cfg, rng);
    let (census, _, fails) = build_fail_sets(padded.as_slice(), cfg, rng);

    let mut dummy_inventory = Vec::new();
    for (phase, members) in [
        (SwapPhase::One, &swap.phase1),
        (SwapPhase::Two, &swap.b_prime),
    ] {
        let mut per_bin = vec![0u32; cfg.n()];
        for m in members.iter() {
            if let SwapId::Dummy { bin, .. } = m.id {
                per_bin[bin.as_usize()] += 1;
            }
        }
        for (bin, &count) in per_bin.iter().enumerate() {
            if count > 0 {
                dummy_inventory.push(DummySlot {
                    phase,
                    bin: bin as u32,
                    count,
                });
            }
        }
    }

    let dump = Dump {
        n: cfg.n(),
        m: cfg.m(),
        census,
        fail_set_sizes: fails.sizes(),
        f_prime_size: fails.f_prime().len(),
        extracted: swap.extracted.len(),
        phase1_failures: swap.phase1_failures,
        phase2_failures: swap.phase2_failures,
        dummy_inventory,
    };
    Ok(serde_json::to_string_pretty(&dump).expect("dump serializes"))
}
