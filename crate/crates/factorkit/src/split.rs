//! The split graph Ḧ: vertices are doubled and every negative edge becomes
//! a two-vertex gadget, so that `vt`-paths of `G` become almost perfect
//! matchings of Ḧ_t (Ḧ with `t₁`, `t₂` identified).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{CopyId, Multigraph, Vertex};
use crate::oracle::brute_perfect_matching_max;

/// Gadget vertices `e₁`, `e₂` of a negative edge copy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gadget {
    pub copy: CopyId,
    pub first: Vertex,
    pub second: Vertex,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SplitGraph {
    /// Ḧ with weights ẅ.
    pub graph: Multigraph,
    pub t: Vertex,
    /// `v₁` is vertex `2v` and `v₂` is `2v + 1`; gadgets follow.
    pub gadgets: Vec<Gadget>,
    /// Ḧ_t, with `t₂` merged into `t₁` and the edge `t₁t₂` dropped.
    pub contracted: Multigraph,
    /// Vertex of Ḧ_t for every vertex of Ḧ.
    pub to_contracted: Vec<Vertex>,
}

impl SplitGraph {
    pub fn first(v: Vertex) -> Vertex {
        2 * v
    }

    pub fn second(v: Vertex) -> Vertex {
        2 * v + 1
    }
}

/// Build Ḧ and Ḧ_t. Nonnegative loops are irrelevant to paths and are
/// dropped. A negative loop, or at least `n` negative copies, means a
/// negative cycle.
pub fn build_split_graph(g: &Multigraph, t: Vertex) -> Result<SplitGraph> {
    let n = g.n();
    if t >= n {
        return Err(Error::input(format!("sink {t} out of range")));
    }
    let negative: Vec<CopyId> = g.copies().filter(|&c| g.weight(c) < 0).collect();
    if let Some(c) = negative.iter().find(|c| g.edge(c.edge).is_loop()) {
        return Err(Error::NegativeCycle(format!("loop at vertex {} is negative", g.edge(c.edge).u)));
    }
    if negative.len() >= n {
        return Err(Error::NegativeCycle(format!("{} negative edges on {n} vertices contain a cycle", negative.len())));
    }
    let mut h = Multigraph::new(2 * n + 2 * negative.len());
    for v in 0..n {
        h.add_edge(SplitGraph::first(v), SplitGraph::second(v), vec![0])?;
    }
    let mut gadgets = Vec::new();
    for c in g.copies() {
        let e = g.edge(c.edge);
        let w = g.weight(c);
        if e.is_loop() {
            continue;
        }
        if w >= 0 {
            for a in [SplitGraph::first(e.u), SplitGraph::second(e.u)] {
                for b in [SplitGraph::first(e.v), SplitGraph::second(e.v)] {
                    h.add_edge(a, b, vec![-w])?;
                }
            }
            continue;
        }
        let (u, v) = (e.u.min(e.v), e.u.max(e.v));
        let e1 = 2 * n + 2 * gadgets.len();
        let e2 = e1 + 1;
        h.add_edge(SplitGraph::first(u), e1, vec![-w])?;
        h.add_edge(SplitGraph::second(u), e1, vec![-w])?;
        h.add_edge(e1, e2, vec![0])?;
        h.add_edge(SplitGraph::first(v), e2, vec![0])?;
        h.add_edge(SplitGraph::second(v), e2, vec![0])?;
        gadgets.push(Gadget { copy: c, first: e1, second: e2 });
    }
    let (t1, t2) = (SplitGraph::first(t), SplitGraph::second(t));
    let to_contracted: Vec<Vertex> = (0..h.n())
        .map(|x| match x {
            x if x == t2 => t1,
            x if x > t2 => x - 1,
            x => x,
        })
        .collect();
    let mut contracted = Multigraph::new(h.n() - 1);
    for e in h.edges() {
        let (a, b) = (to_contracted[e.u], to_contracted[e.v]);
        if a != b {
            contracted.add_edge(a, b, e.weights.clone())?;
        }
    }
    Ok(SplitGraph { graph: h, t, gadgets, contracted, to_contracted })
}

/// Maximum perfect matching weight of Ḧ; positive exactly when `G` has a
/// negative cycle.
pub fn split_perfect_weight(sg: &SplitGraph) -> Result<i64> {
    brute_perfect_matching_max(&sg.graph, None)?.ok_or_else(|| Error::inconsistent("split graph has no perfect matching"))
}

/// Distances to `t` as `−ẅ(M(v₁))` over maximum `v₁`-matchings of Ḧ_t,
/// after checking that the weights are conservative.
pub fn split_distances(g: &Multigraph, t: Vertex) -> Result<Vec<i64>> {
    let sg = build_split_graph(g, t)?;
    let top = split_perfect_weight(&sg)?;
    if top > 0 {
        return Err(Error::NegativeCycle(format!("split graph has a perfect matching of weight {top}")));
    }
    (0..g.n())
        .map(|v| {
            if v == t {
                return Ok(0);
            }
            let avoid = sg.to_contracted[SplitGraph::first(v)];
            brute_perfect_matching_max(&sg.contracted, Some(avoid))?
                .map(|w| -w)
                .ok_or_else(|| Error::input(format!("vertex {v} is not connected to the sink")))
        })
        .collect()
}
