//! Cuckoo graphs, component analysis, and deterministic minimum-in-degree
//! orientation, including the extended (partitioned) orientation procedure.
//!
//! The cuckoo graph of a ball set has the bins as vertices and one edge
//! `(u, v)` per ball, where `u` and `v` are the ball's two candidate bins.
//! Orienting an edge toward a vertex assigns the ball to that bin, so the
//! maximum in-degree is the maximum load contributed by the oriented balls.
//! Multi-edges and self-loops are permitted; a self-loop points at its own
//! vertex and counts one toward its in-degree.

use serde::Serialize;

use crate::error::Error;
use crate::model::{BallId, BinIndex};
use crate::oracle::Randomness;

/// Upper size limit for the exhaustive orientation oracle.
pub const BRUTE_FORCE_EDGE_LIMIT: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GraphEdge {
    pub ball: BallId,
    pub u: BinIndex,
    pub v: BinIndex,
}

impl GraphEdge {
    pub fn is_self_loop(&self) -> bool {
        self.u == self.v
    }
}

/// Multigraph on `n` bins with ball-labeled edges, kept sorted by ball id —
/// the canonical representation that orientation depends on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CuckooGraph {
    n: usize,
    edges: Vec<GraphEdge>,
}

impl CuckooGraph {
    pub fn new(n: usize, mut edges: Vec<GraphEdge>) -> Self {
        edges.sort_unstable_by_key(|e| e.ball);
        debug_assert!(edges.windows(2).all(|w| w[0].ball < w[1].ball));
        debug_assert!(edges
            .iter()
            .all(|e| e.u.as_usize() < n && e.v.as_usize() < n));
        CuckooGraph { n, edges }
    }

    /// Builds the graph by resolving each ball's endpoints.
    pub fn build<I, F>(n: usize, balls: I, mut endpoints: F) -> Self
    where
        I: IntoIterator<Item = BallId>,
        F: FnMut(BallId) -> (BinIndex, BinIndex),
    {
        let edges = balls
            .into_iter()
            .map(|ball| {
                let (u, v) = endpoints(ball);
                GraphEdge { ball, u, v }
            })
            .collect();
        CuckooGraph::new(n, edges)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[GraphEdge] {
        &self.edges
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Connected components (isolated vertices form none), ordered by their
    /// smallest vertex.
    pub fn components(&self) -> Vec<Component> {
        let mut dsu = Dsu::new(self.n);
        let mut incident = vec![false; self.n];
        for e in &self.edges {
            dsu.union(e.u.as_usize(), e.v.as_usize());
            incident[e.u.as_usize()] = true;
            incident[e.v.as_usize()] = true;
        }
        let mut comp_of_root = vec![usize::MAX; self.n];
        let mut comps: Vec<Component> = Vec::new();
        for (v, _) in incident.iter().enumerate().filter(|(_, &inc)| inc) {
            let root = dsu.find(v);
            if comp_of_root[root] == usize::MAX {
                comp_of_root[root] = comps.len();
                comps.push(Component {
                    vertices: Vec::new(),
                    edge_indices: Vec::new(),
                });
            }
            comps[comp_of_root[root]].vertices.push(v as u32);
        }
        for (idx, e) in self.edges.iter().enumerate() {
            let root = dsu.find(e.u.as_usize());
            comps[comp_of_root[root]].edge_indices.push(idx);
        }
        comps
    }

    /// Text dump, one `ball u v dir` line per edge; `dir` is `u`, `v`, or `-`.
    pub fn dump(&self, orientation: Option<&Orientation>) -> String {
        let mut out = String::new();
        for e in &self.edges {
            let dir = orientation
                .and_then(|o| o.dir_of(e.ball))
                .map(|d| match d {
                    EdgeDir::TowardU => "u",
                    EdgeDir::TowardV => "v",
                })
                .unwrap_or("-");
            out.push_str(&format!("{} {} {} {}\n", e.ball, e.u, e.v, dir));
        }
        out
    }
}

/// A connected component: sorted vertex list plus edge indices in canonical
/// order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub vertices: Vec<u32>,
    pub edge_indices: Vec<usize>,
}

impl Component {
    pub fn edge_count(&self) -> usize {
        self.edge_indices.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    /// Independent cycles: `e - v + 1` for a connected component. Self-loops
    /// and parallel edges each add one.
    pub fn cycle_count(&self) -> usize {
        self.edge_indices.len() + 1 - self.vertices.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EdgeDir {
    TowardU,
    TowardV,
}

/// A direction for every edge of a graph, sorted by ball id.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Orientation {
    entries: Vec<(BallId, EdgeDir)>,
}

impl Orientation {
    pub fn from_entries(mut entries: Vec<(BallId, EdgeDir)>) -> Self {
        entries.sort_unstable_by_key(|&(b, _)| b);
        Orientation { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(BallId, EdgeDir)] {
        &self.entries
    }

    pub fn dir_of(&self, ball: BallId) -> Option<EdgeDir> {
        self.entries
            .binary_search_by_key(&ball, |&(b, _)| b)
            .ok()
            .map(|i| self.entries[i].1)
    }

    /// Balls whose directions differ between two orientations over the same
    /// edge set (balls present in only one count as differing).
    pub fn differing_balls(&self, other: &Orientation) -> Vec<BallId> {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.entries.len() || j < other.entries.len() {
            match (self.entries.get(i), other.entries.get(j)) {
                (Some(&(a, da)), Some(&(b, db))) => match a.cmp(&b) {
                    std::cmp::Ordering::Less => {
                        out.push(a);
                        i += 1;
                    }
                    std::cmp::Ordering::Greater => {
                        out.push(b);
                        j += 1;
                    }
                    std::cmp::Ordering::Equal => {
                        if da != db {
                            out.push(a);
                        }
                        i += 1;
                        j += 1;
                    }
                },
                (Some(&(a, _)), None) => {
                    out.push(a);
                    i += 1;
                }
                (None, Some(&(b, _))) => {
                    out.push(b);
                    j += 1;
                }
                (None, None) => break,
            }
        }
        out
    }
}

/// Bin an oriented edge points at.
pub fn oriented_bin(edge: &GraphEdge, dir: EdgeDir) -> BinIndex {
    match dir {
        EdgeDir::TowardU => edge.u,
        EdgeDir::TowardV => edge.v,
    }
}

/// Per-bin in-degrees induced by an orientation of `g`.
pub fn in_degrees(g: &CuckooGraph, orientation: &Orientation) -> Vec<u32> {
    let mut deg = vec![0u32; g.n()];
    for e in g.edges() {
        let dir = orientation.dir_of(e.ball).expect("orientation is total");
        deg[oriented_bin(e, dir).as_usize()] += 1;
    }
    deg
}

/// Orients one connected component with the minimum possible maximum
/// in-degree. Deterministic given the canonical edge list.
///
/// Greedy pass: each edge points at its lower-in-degree endpoint, ties toward
/// the first. Repair pass: starting from the density lower bound
/// `ceil(e / v)`, vertices above the target shed one in-degree unit at a time
/// along a chain of edge flips ending at a vertex strictly below the target.
/// When no such chain exists, the backward-reachable set closes under tails
/// and holds at least `target * |R| + 1` induced edges, which certifies that
/// no orientation achieves the target; the target then increments. The final
/// target is therefore optimal.
pub fn orient_component(g: &CuckooGraph, comp: &Component) -> Vec<(usize, EdgeDir)> {
    let verts = &comp.vertices;
    let nloc = verts.len();
    let local = |gv: u32| verts.binary_search(&gv).expect("vertex in component");

    let m = comp.edge_indices.len();
    let mut tail_head: Vec<(usize, usize)> = Vec::with_capacity(m); // (tail, head) in locals
    let mut indeg = vec![0u32; nloc];
    // Edges currently pointing at each vertex; entries may go stale after
    // flips and are cleaned lazily.
    let mut in_edges: Vec<Vec<usize>> = vec![Vec::new(); nloc];

    for (pos, &eidx) in comp.edge_indices.iter().enumerate() {
        let e = &g.edges()[eidx];
        let (lu, lv) = (local(e.u.0), local(e.v.0));
        let (tail, head) = if lu == lv {
            (lu, lu)
        } else if indeg[lv] < indeg[lu] {
            (lu, lv)
        } else {
            (lv, lu)
        };
        indeg[head] += 1;
        in_edges[head].push(pos);
        tail_head.push((tail, head));
    }

    let mut target = (m as u32).div_ceil(nloc as u32).max(1);
    let mut search = PathSearch::new(nloc);
    for start in 0..nloc {
        while indeg[start] > target {
            match search.reducing_path(start, target, &tail_head, &indeg, &mut in_edges) {
                Some(path) => {
                    // Flip the chain from the slack vertex back to `start`.
                    for &pos in &path {
                        let (tail, head) = tail_head[pos];
                        indeg[head] -= 1;
                        indeg[tail] += 1;
                        tail_head[pos] = (head, tail);
                        in_edges[tail].push(pos);
                    }
                }
                None => {
                    // Certified infeasible at this target.
                    target += 1;
                }
            }
        }
    }
    debug_assert!(indeg.iter().all(|&d| d <= target));

    comp.edge_indices
        .iter()
        .enumerate()
        .map(|(pos, &eidx)| {
            let e = &g.edges()[eidx];
            let head = tail_head[pos].1;
            // Self-loops canonicalize toward u (their only vertex).
            let dir = if e.is_self_loop() || verts[head] == e.u.0 {
                EdgeDir::TowardU
            } else {
                debug_assert_eq!(verts[head], e.v.0);
                EdgeDir::TowardV
            };
            (eidx, dir)
        })
        .collect()
}

/// Reusable scratch space for the flip-chain search.
struct PathSearch {
    parent: Vec<usize>,
    visit_mark: Vec<u32>,
    epoch: u32,
    queue: std::collections::VecDeque<usize>,
}

impl PathSearch {
    fn new(nloc: usize) -> Self {
        PathSearch {
            parent: vec![usize::MAX; nloc],
            visit_mark: vec![0; nloc],
            epoch: 0,
            queue: std::collections::VecDeque::new(),
        }
    }

    /// BFS backward from `start` for a chain of flips moving one in-degree
    /// unit onto a vertex with in-degree < target. Returns flip positions
    /// ordered from the slack vertex back toward `start`.
    fn reducing_path(
        &mut self,
        start: usize,
        target: u32,
        tail_head: &[(usize, usize)],
        indeg: &[u32],
        in_edges: &mut [Vec<usize>],
    ) -> Option<Vec<usize>> {
        self.epoch += 1;
        let epoch = self.epoch;
        self.queue.clear();
        self.visit_mark[start] = epoch;
        self.queue.push_back(start);

        while let Some(w) = self.queue.pop_front() {
            // Lazily drop stale entries (edges that no longer point at w).
            in_edges[w].retain(|&pos| tail_head[pos].1 == w);
            for &pos in &in_edges[w] {
                let (tail, head) = tail_head[pos];
                debug_assert_eq!(head, w);
                if tail == head || self.visit_mark[tail] == epoch {
                    continue;
                }
                self.visit_mark[tail] = epoch;
                self.parent[tail] = pos;
                if indeg[tail] < target {
                    let mut path = Vec::new();
                    let mut cur = tail;
                    while cur != start {
                        let p = self.parent[cur];
                        path.push(p);
                        cur = tail_head[p].1;
                    }
                    return Some(path);
                }
                self.queue.push_back(tail);
            }
        }
        None
    }
}

/// Minimum-in-degree orientation of every component of `g`.
pub fn canonical_orientation(g: &CuckooGraph) -> Orientation {
    let mut entries = Vec::with_capacity(g.edges().len());
    for comp in g.components() {
        for (eidx, dir) in orient_component(g, &comp) {
            entries.push((g.edges()[eidx].ball, dir));
        }
    }
    Orientation::from_entries(entries)
}

/// Statistics of one oriented component within one partition subgraph.
#[derive(Debug, Clone, Serialize)]
pub struct ComponentStats {
    pub part: u32,
    pub vertices: usize,
    pub edges: usize,
    pub cycles: usize,
    pub max_in_degree: u32,
}

/// Result of the extended orientation procedure.
#[derive(Debug, Clone)]
pub struct EcoOutcome {
    pub orientation: Orientation,
    pub components: Vec<ComponentStats>,
}

/// Extended orientation: partition the edges into `parts` random subgraphs by
/// each ball's subgraph label, orient every subgraph canonically, and union
/// the results.
pub fn eco_orient<R: Randomness>(g: &CuckooGraph, parts: u32, rng: &R) -> EcoOutcome {
    assert!(parts >= 1, "parts must be >= 1");
    let mut part_edges: Vec<Vec<GraphEdge>> = vec![Vec::new(); parts as usize];
    for e in g.edges() {
        part_edges[rng.eco_part(e.ball, parts) as usize].push(*e);
    }

    let mut entries = Vec::with_capacity(g.edges().len());
    let mut stats = Vec::new();
    for (part, edges) in part_edges.into_iter().enumerate() {
        if edges.is_empty() {
            continue;
        }
        let sub = CuckooGraph::new(g.n(), edges);
        for comp in sub.components() {
            let oriented = orient_component(&sub, &comp);
            let mut max_in = 0u32;
            {
                let mut indeg = std::collections::HashMap::new();
                for &(eidx, dir) in &oriented {
                    let bin = oriented_bin(&sub.edges()[eidx], dir);
                    let c = indeg.entry(bin).or_insert(0u32);
                    *c += 1;
                    max_in = max_in.max(*c);
                }
            }
            stats.push(ComponentStats {
                part: part as u32,
                vertices: comp.vertex_count(),
                edges: comp.edge_count(),
                cycles: comp.cycle_count(),
                max_in_degree: max_in,
            });
            for (eidx, dir) in oriented {
                entries.push((sub.edges()[eidx].ball, dir));
            }
        }
    }

    EcoOutcome {
        orientation: Orientation::from_entries(entries),
        components: stats,
    }
}

/// Exhaustive minimum over all orientations of a small component.
pub fn brute_min_max_indegree(g: &CuckooGraph, comp: &Component) -> Result<u32, Error> {
    let m = comp.edge_indices.len();
    if m > BRUTE_FORCE_EDGE_LIMIT {
        return Err(Error::ComponentTooLarge {
            edges: m,
            limit: BRUTE_FORCE_EDGE_LIMIT,
        });
    }
    let verts = &comp.vertices;
    let local = |gv: u32| verts.binary_search(&gv).expect("vertex in component");
    let pairs: Vec<(usize, usize)> = comp
        .edge_indices
        .iter()
        .map(|&i| {
            let e = &g.edges()[i];
            (local(e.u.0), local(e.v.0))
        })
        .collect();

    let mut best = u32::MAX;
    let mut indeg = vec![0u32; verts.len()];
    for mask in 0u32..(1 << m) {
        indeg.iter_mut().for_each(|d| *d = 0);
        for (bit, &(lu, lv)) in pairs.iter().enumerate() {
            let target = if mask >> bit & 1 == 0 { lu } else { lv };
            indeg[target] += 1;
        }
        best = best.min(indeg.iter().copied().max().unwrap_or(0));
    }
    Ok(best)
}

/// Maximum in-degree achieved by `orient_component` on a component.
pub fn achieved_max_indegree(g: &CuckooGraph, comp: &Component) -> u32 {
    let oriented = orient_component(g, comp);
    let mut counts = std::collections::HashMap::new();
    let mut max = 0;
    for (eidx, dir) in oriented {
        let bin = oriented_bin(&g.edges()[eidx], dir);
        let c = counts.entry(bin).or_insert(0u32);
        *c += 1;
        max = max.max(*c);
    }
    max
}

struct Dsu {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] as usize != root {
            root = self.parent[root] as usize;
        }
        let mut cur = x;
        while cur != root {
            let next = self.parent[cur] as usize;
            self.parent[cur] = root as u32;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        let (big, small) = if self.size[ra] >= self.size[rb] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[small] = big as u32;
        self.size[big] += self.size[small];
    }
}
