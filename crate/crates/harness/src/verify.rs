//! Invariant verification suites behind `hibb verify`.

use hibb_core::graph::{
    achieved_max_indegree, brute_min_max_indegree, canonical_orientation, CuckooGraph, GraphEdge,
};
use hibb_core::oracle::StreamLabel;
use hibb_core::post::full_allocate;
use hibb_core::slice_spread::slice_spread_instrumented;
use hibb_core::{
    pad_to_capacity, BallId, BallSet, BinIndex, Config, Error, MasterSeed, RandomOracle,
};

use crate::replay::allocate;
use crate::workload::{sample_fresh_ids, AllocatorKind};
use crate::worlds::two_worlds;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Hi,
    GreedyNeighbor,
    TwoWorlds,
    Accounting,
    FSafety,
    OrientOracle,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::Hi,
        Suite::GreedyNeighbor,
        Suite::TwoWorlds,
        Suite::Accounting,
        Suite::FSafety,
        Suite::OrientOracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Hi => "hi",
            Suite::GreedyNeighbor => "greedy-neighbor",
            Suite::TwoWorlds => "two-worlds",
            Suite::Accounting => "accounting",
            Suite::FSafety => "f-safety",
            Suite::OrientOracle => "orient-oracle",
        }
    }

    pub fn parse(s: &str) -> Option<Vec<Suite>> {
        if s == "all" {
            return Some(Suite::ALL.to_vec());
        }
        Suite::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .map(|k| vec![k])
    }
}

#[derive(Debug, Clone)]
pub struct SuiteOutcome {
    pub suite: &'static str,
    pub pass: bool,
    pub detail: String,
}

pub fn run_suite(
    suite: Suite,
    n: usize,
    mu: u64,
    trials: usize,
    seed: &MasterSeed,
) -> Result<SuiteOutcome, Error> {
    let m = n * mu as usize;
    let cfg = Config::new(n, m)?;
    match suite {
        Suite::Hi => history_independence(&cfg, trials, seed),
        Suite::GreedyNeighbor => greedy_neighbor(&cfg, trials, seed),
        Suite::TwoWorlds => {
            let report = two_worlds(n, m, seed, AllocatorKind::SliceSpread, trials)?;
            Ok(SuiteOutcome {
                suite: suite.name(),
                pass: report.ok(),
                detail: if report.ok() {
                    format!(
                        "{} pairs, max recourse {} <= bound {}",
                        report.pairs,
                        report.max_recourse,
                        report.recourse_bound.unwrap_or(0)
                    )
                } else {
                    report.violations.join("; ")
                },
            })
        }
        Suite::Accounting => accounting(&cfg, trials, seed),
        Suite::FSafety => f_safety(&cfg, trials, seed),
        Suite::OrientOracle => orientation_oracle(trials.max(1) * 100, 10, seed),
    }
}

/// Reaching one target set through different histories yields byte-identical
/// serializations for every allocator.
fn history_independence(
    cfg: &Config,
    histories: usize,
    seed: &MasterSeed,
) -> Result<SuiteOutcome, Error> {
    let oracle = RandomOracle::new(*seed);
    let target: BallSet = sample_fresh_ids(seed, 0, cfg.m() - 1).into_iter().collect();

    let mut baselines: Option<Vec<String>> = None;
    for h in 0..histories {
        // Rebuild the target through a history-dependent path: shuffle the
        // insertion order and interleave insert/delete detours.
        let hist_seed = seed.derive("history", h as u64);
        let detours = sample_fresh_ids(&hist_seed, 1, 8);
        let mut s = BallSet::empty();
        let mut order: Vec<BallId> = target.iter().collect();
        // Deterministic shuffle driven by the history seed.
        let hist_oracle = RandomOracle::new(hist_seed);
        for i in (1..order.len()).rev() {
            let j =
                (hist_oracle.prf(StreamLabel("shuffle"), &[i as u64]) % (i as u64 + 1)) as usize;
            order.swap(i, j);
        }
        for (i, &b) in order.iter().enumerate() {
            s.insert(b);
            if i % 97 == 13 {
                let d = detours[(i / 97) % detours.len()];
                s.insert(d);
                s.remove(d);
            }
        }
        assert_eq!(s, target);

        let serialized: Vec<String> = AllocatorKind::ALL
            .iter()
            .map(|&k| allocate(k, &s, cfg, &oracle).map(|o| o.allocation.serialize()))
            .collect::<Result<_, _>>()?;
        match &baselines {
            None => baselines = Some(serialized),
            Some(b) => {
                if b != &serialized {
                    return Ok(SuiteOutcome {
                        suite: "hi",
                        pass: false,
                        detail: format!("history {h} produced different bytes"),
                    });
                }
            }
        }
    }
    Ok(SuiteOutcome {
        suite: "hi",
        pass: true,
        detail: format!("{histories} histories, 4 allocators, byte-identical"),
    })
}

/// Neighboring sets differ in exactly one bin's load, by exactly one, under
/// the greedy allocator.
fn greedy_neighbor(cfg: &Config, pairs: usize, seed: &MasterSeed) -> Result<SuiteOutcome, Error> {
    use hibb_core::greedy::allocate_hi_greedy_raw;
    for p in 0..pairs {
        let pair_seed = seed.derive("pair", p as u64);
        let rng = RandomOracle::new(pair_seed);
        let ids = sample_fresh_ids(&pair_seed, u64::MAX, cfg.m());
        let extra = ids[0];
        let base: BallSet = ids[1..].iter().copied().collect();
        let mut bigger = base.clone();
        bigger.insert(extra);

        let (a, _) = allocate_hi_greedy_raw(&base, cfg, &rng)?;
        let (b, _) = allocate_hi_greedy_raw(&bigger, cfg, &rng)?;
        let (la, lb) = (a.loads(true), b.loads(true));
        let mut diffs = 0usize;
        let mut bad = false;
        for (&x, &y) in la.counts().iter().zip(lb.counts()) {
            if x != y {
                diffs += 1;
                if y != x + 1 {
                    bad = true;
                }
            }
        }
        if diffs != 1 || bad {
            return Ok(SuiteOutcome {
                suite: "greedy-neighbor",
                pass: false,
                detail: format!("pair {p}: {diffs} bins differ"),
            });
        }
    }
    Ok(SuiteOutcome {
        suite: "greedy-neighbor",
        pass: true,
        detail: format!("{pairs} pairs, one special bin each"),
    })
}

/// The per-round accounting identity holds exactly on padded runs.
fn accounting(cfg: &Config, trials: usize, seed: &MasterSeed) -> Result<SuiteOutcome, Error> {
    for t in 0..trials {
        let trial_seed = seed.derive("trial", t as u64);
        let rng = RandomOracle::new(trial_seed);
        let real = sample_fresh_ids(&trial_seed, 2, cfg.m() - (t % 2));
        let set: BallSet = real.into_iter().collect();
        let padded = pad_to_capacity(&set, cfg)?;
        let run = slice_spread_instrumented(&padded, cfg, &rng, false)?;
        if !run
            .diagnostics
            .accounting_holds(cfg.m() as u64, cfg.n(), &run.schedule)
        {
            return Ok(SuiteOutcome {
                suite: "accounting",
                pass: false,
                detail: format!("trial {t}: identity violated"),
            });
        }
    }
    Ok(SuiteOutcome {
        suite: "accounting",
        pass: true,
        detail: format!("{trials} runs, identity exact in every round"),
    })
}

/// After every swap, the system restricted to non-fail-set balls is safe.
fn f_safety(cfg: &Config, trials: usize, seed: &MasterSeed) -> Result<SuiteOutcome, Error> {
    let asserted = cfg.mu_floor() >= 100;
    let mut safe = 0usize;
    for t in 0..trials {
        let trial_seed = seed.derive("trial", t as u64);
        let rng = RandomOracle::new(trial_seed);
        let set: BallSet = sample_fresh_ids(&trial_seed, 3, cfg.m() - (t % 2))
            .into_iter()
            .collect();
        let (_, diag) = full_allocate(&set, cfg, &rng)?;
        if diag.fsafe_ok {
            safe += 1;
        } else if asserted {
            return Ok(SuiteOutcome {
                suite: "f-safety",
                pass: false,
                detail: format!("trial {t}: fail-superset safety violated at mu >= 100"),
            });
        }
    }
    Ok(SuiteOutcome {
        suite: "f-safety",
        pass: true,
        detail: if asserted {
            format!("{trials} swaps, all safe (asserted at mu >= 100)")
        } else {
            format!("{safe}/{trials} safe (mu < 100: observational only)")
        },
    })
}

/// Random small components match the exhaustive orientation oracle, and
/// removing a ball only reorients its own component.
pub fn orientation_oracle(
    cases: usize,
    max_edges: usize,
    seed: &MasterSeed,
) -> Result<SuiteOutcome, Error> {
    let oracle = RandomOracle::new(*seed);
    let label = StreamLabel("orient");
    for case in 0..cases {
        let c = case as u64;
        let verts = 2 + (oracle.prf(label, &[c, 0]) % 7) as u32; // 2..=8
        let edges = 1 + (oracle.prf(label, &[c, 1]) % max_edges as u64) as usize;
        let list: Vec<GraphEdge> = (0..edges)
            .map(|i| GraphEdge {
                ball: BallId(i as u64),
                u: BinIndex((oracle.prf(label, &[c, 2, i as u64]) % verts as u64) as u32),
                v: BinIndex((oracle.prf(label, &[c, 3, i as u64]) % verts as u64) as u32),
            })
            .collect();
        let g = CuckooGraph::new(verts as usize, list);
        for comp in g.components() {
            let achieved = achieved_max_indegree(&g, &comp);
            let best = brute_min_max_indegree(&g, &comp)?;
            if achieved != best {
                return Ok(SuiteOutcome {
                    suite: "orient-oracle",
                    pass: false,
                    detail: format!("case {case}: achieved {achieved} != optimal {best}"),
                });
            }
        }
    }

    // Locality: orientations change only inside the removed ball's component.
    let locality_samples = (cases / 5).max(20);
    for s in 0..locality_samples {
        let c = s as u64;
        let n = 64usize;
        let balls = 40usize;
        let edges: Vec<GraphEdge> = (0..balls)
            .map(|i| {
                let ball = BallId(oracle.prf(label, &[c, 10, i as u64]) >> 16);
                GraphEdge {
                    ball,
                    u: BinIndex((oracle.prf(label, &[c, 11, ball.0]) % n as u64) as u32),
                    v: BinIndex((oracle.prf(label, &[c, 12, ball.0]) % n as u64) as u32),
                }
            })
            .collect();
        let g = CuckooGraph::new(n, edges);
        let victim = g.edges()[(oracle.prf(label, &[c, 13]) % g.edges().len() as u64) as usize];
        let comp_balls: Vec<BallId> = g
            .components()
            .into_iter()
            .find(|cmp| {
                cmp.edge_indices
                    .iter()
                    .any(|&i| g.edges()[i].ball == victim.ball)
            })
            .map(|cmp| {
                cmp.edge_indices
                    .iter()
                    .map(|&i| g.edges()[i].ball)
                    .collect()
            })
            .unwrap_or_default();
        let remaining: Vec<GraphEdge> = g
            .edges()
            .iter()
            .copied()
            .filter(|e| e.ball != victim.ball)
            .collect();
        let g2 = CuckooGraph::new(n, remaining);
        let o1 = canonical_orientation(&g);
        let o2 = canonical_orientation(&g2);
        let escaped: Vec<BallId> = o1
            .differing_balls(&o2)
            .into_iter()
            .filter(|b| !comp_balls.contains(b))
            .collect();
        if !escaped.is_empty() {
            return Ok(SuiteOutcome {
                suite: "orient-oracle",
                pass: false,
                detail: format!("sample {s}: changes escaped the component: {escaped:?}"),
            });
        }
    }

    Ok(SuiteOutcome {
        suite: "orient-oracle",
        pass: true,
        detail: format!("{cases} oracle cases, {locality_samples} locality samples"),
    })
}
