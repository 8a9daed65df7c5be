//! Multigraphs with per-copy weights, degree constraints and edge subsets.
//!
//! An edge `uv` with multiplicity `μ` carries one weight per copy. Loops
//! (`u == v`) are allowed and contribute 2 to the degree of their vertex.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vertex = usize;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub u: Vertex,
    pub v: Vertex,
    /// One weight per parallel copy; the multiplicity is `weights.len()`.
    pub weights: Vec<i64>,
}

impl Edge {
    pub fn mult(&self) -> usize {
        self.weights.len()
    }

    pub fn is_loop(&self) -> bool {
        self.u == self.v
    }

    /// The endpoint opposite to `x`.
    pub fn other(&self, x: Vertex) -> Vertex {
        if self.u == x {
            self.v
        } else {
            self.u
        }
    }
}

/// A single copy of an edge, `copy < mult`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CopyId {
    pub edge: usize,
    pub copy: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Multigraph {
    n: usize,
    edges: Vec<Edge>,
}

impl Multigraph {
    pub fn new(n: usize) -> Self {
        Multigraph { n, edges: Vec::new() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: usize) -> &Edge {
        &self.edges[id]
    }

    pub fn add_vertex(&mut self) -> Vertex {
        self.n += 1;
        self.n - 1
    }

    /// Add an edge with the given per-copy weights and return its id.
    pub fn add_edge(&mut self, u: Vertex, v: Vertex, weights: Vec<i64>) -> Result<usize> {
        if u >= self.n || v >= self.n {
            return Err(Error::input(format!(
                "edge ({u},{v}) has an endpoint outside 0..{}",
                self.n
            )));
        }
        if weights.is_empty() {
            return Err(Error::input(format!("edge ({u},{v}) has multiplicity 0")));
        }
        self.edges.push(Edge { u, v, weights });
        Ok(self.edges.len() - 1)
    }

    /// Build a graph from `(u, v, weights)` triples.
    pub fn from_edges(n: usize, edges: Vec<(Vertex, Vertex, Vec<i64>)>) -> Result<Self> {
        let mut g = Multigraph::new(n);
        for (u, v, w) in edges {
            g.add_edge(u, v, w)?;
        }
        Ok(g)
    }

    /// Add an edge whose copies all weigh 0.
    pub fn add_plain(&mut self, u: Vertex, v: Vertex, mult: usize) -> Result<usize> {
        self.add_edge(u, v, vec![0; mult])
    }

    pub fn weight(&self, c: CopyId) -> i64 {
        self.edges[c.edge].weights[c.copy]
    }

    pub fn num_copies(&self) -> usize {
        self.edges.iter().map(Edge::mult).sum()
    }

    /// All copies in (edge, copy) order.
    pub fn copies(&self) -> impl Iterator<Item = CopyId> + '_ {
        self.edges
            .iter()
            .enumerate()
            .flat_map(|(edge, e)| (0..e.mult()).map(move |copy| CopyId { edge, copy }))
    }

    /// Largest absolute copy weight (0 for an edgeless graph).
    pub fn max_abs_weight(&self) -> i64 {
        self.edges
            .iter()
            .flat_map(|e| e.weights.iter())
            .map(|w| w.abs())
            .max()
            .unwrap_or(0)
    }

    /// Incident edge ids per vertex; a loop is listed once.
    pub fn incidence(&self) -> Vec<Vec<usize>> {
        let mut inc = vec![Vec::new(); self.n];
        for (id, e) in self.edges.iter().enumerate() {
            inc[e.u].push(id);
            if !e.is_loop() {
                inc[e.v].push(id);
            }
        }
        inc
    }

    /// Two-colouring of the graph, if one exists (loops rule it out).
    pub fn bipartition(&self) -> Option<Vec<u8>> {
        let inc = self.incidence();
        let mut side = vec![u8::MAX; self.n];
        for s in 0..self.n {
            if side[s] != u8::MAX {
                continue;
            }
            side[s] = 0;
            let mut stack = vec![s];
            while let Some(x) = stack.pop() {
                for &id in &inc[x] {
                    let e = &self.edges[id];
                    if e.is_loop() {
                        return None;
                    }
                    let y = e.other(x);
                    if side[y] == u8::MAX {
                        side[y] = 1 - side[x];
                        stack.push(y);
                    } else if side[y] == side[x] {
                        return None;
                    }
                }
            }
        }
        Some(side)
    }

    pub fn with_weights_negated(&self) -> Multigraph {
        let mut g = self.clone();
        for e in &mut g.edges {
            for w in &mut e.weights {
                *w = -*w;
            }
        }
        g
    }
}

/// Direction of a unit perturbation of a degree constraint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Lower,
    Upper,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeConstraint {
    f: Vec<usize>,
    /// The single unit perturbation applied to this constraint, if any.
    perturbation: Option<(Vertex, Direction)>,
}

impl DegreeConstraint {
    pub fn new(f: Vec<usize>) -> Self {
        DegreeConstraint { f, perturbation: None }
    }

    pub fn uniform(n: usize, value: usize) -> Self {
        Self::new(vec![value; n])
    }

    pub fn len(&self) -> usize {
        self.f.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f.is_empty()
    }

    pub fn get(&self, v: Vertex) -> usize {
        self.f[v]
    }

    pub fn set(&mut self, v: Vertex, value: usize) {
        self.f[v] = value;
    }

    pub fn push(&mut self, value: usize) {
        self.f.push(value);
    }

    pub fn values(&self) -> &[usize] {
        &self.f
    }

    pub fn phi(&self) -> usize {
        self.f.iter().sum()
    }

    pub fn perturbation(&self) -> Option<(Vertex, Direction)> {
        self.perturbation
    }

    /// Vertices whose constraint is 0; solvers may skip them.
    pub fn zero_vertices(&self) -> Vec<Vertex> {
        (0..self.f.len()).filter(|&v| self.f[v] == 0).collect()
    }

    /// `f_v` (lower) or `f^v` (upper). Perturbing back in the opposite
    /// direction cancels a recorded perturbation.
    pub fn perturb(&self, v: Vertex, dir: Direction) -> Result<DegreeConstraint> {
        if v >= self.f.len() {
            return Err(Error::input(format!("vertex {v} out of range")));
        }
        let mut out = self.clone();
        match dir {
            Direction::Lower => {
                if self.f[v] == 0 {
                    return Err(Error::input(format!(
                        "lower perturbation of vertex {v} with f = 0"
                    )));
                }
                out.f[v] -= 1;
            }
            Direction::Upper => out.f[v] += 1,
        }
        out.perturbation = match self.perturbation {
            None => Some((v, dir)),
            Some((pv, pd)) if pv == v && pd != dir => None,
            Some(_) => {
                return Err(Error::input(
                    "a degree constraint carries at most one unit perturbation",
                ))
            }
        };
        Ok(out)
    }
}

/// A set of selected edge copies.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeSubset {
    items: BTreeSet<CopyId>,
}

impl EdgeSubset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, c: CopyId) -> bool {
        self.items.insert(c)
    }

    pub fn remove(&mut self, c: &CopyId) -> bool {
        self.items.remove(c)
    }

    pub fn contains(&self, c: &CopyId) -> bool {
        self.items.contains(c)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &CopyId> + '_ {
        self.items.iter()
    }

    /// Check that every copy exists in `g`.
    pub fn validate(&self, g: &Multigraph) -> Result<()> {
        for c in &self.items {
            if c.edge >= g.m() || c.copy >= g.edge(c.edge).mult() {
                return Err(Error::input(format!(
                    "copy {}/{} does not exist",
                    c.edge, c.copy
                )));
            }
        }
        Ok(())
    }

    pub fn weight(&self, g: &Multigraph) -> i64 {
        self.items.iter().map(|&c| g.weight(c)).sum()
    }

    /// Number of selected copies per edge.
    pub fn counts(&self, g: &Multigraph) -> Vec<usize> {
        let mut cnt = vec![0; g.m()];
        for c in &self.items {
            cnt[c.edge] += 1;
        }
        cnt
    }

    /// Degrees of all vertices, loops counted twice.
    pub fn degrees(&self, g: &Multigraph) -> Vec<usize> {
        let mut d = vec![0; g.n()];
        for c in &self.items {
            let e = g.edge(c.edge);
            d[e.u] += 1;
            d[e.v] += 1;
        }
        d
    }

    pub fn is_factor(&self, g: &Multigraph, f: &DegreeConstraint) -> bool {
        self.validate(g).is_ok() && f.len() == g.n() && self.degrees(g) == f.values()
    }
}

impl FromIterator<CopyId> for EdgeSubset {
    fn from_iter<I: IntoIterator<Item = CopyId>>(iter: I) -> Self {
        EdgeSubset { items: iter.into_iter().collect() }
    }
}

/// Degree of `v` in `s`.
pub fn degree(g: &Multigraph, s: &EdgeSubset, v: Vertex) -> Result<usize> {
    if v >= g.n() {
        return Err(Error::input(format!("vertex {v} out of range")));
    }
    s.validate(g)?;
    Ok(s
        .iter()
        .map(|c| {
            let e = g.edge(c.edge);
            usize::from(e.u == v) + usize::from(e.v == v)
        })
        .sum())
}

/// Result of [`critical_closure`].
#[derive(Clone, Debug)]
pub struct Closure {
    pub graph: Multigraph,
    pub f: DegreeConstraint,
    pub s: Vertex,
    /// Edges `0..original_edges` are the edges of the input graph.
    pub original_edges: usize,
}

/// Add a vertex `s` with `f(s) = 1`, a weight-0 edge `sv` and a weight-0
/// loop `vv` for every vertex `v`. A maximum `f_s`-factor of the result
/// restricted to the original edges is a maximum `f`-factor of `g`.
pub fn critical_closure(g: &Multigraph, f: &DegreeConstraint) -> Closure {
    let mut h = g.clone();
    let s = h.add_vertex();
    for v in 0..g.n() {
        h.add_plain(s, v, 1).expect("valid endpoints");
    }
    for v in 0..g.n() {
        h.add_plain(v, v, 1).expect("valid endpoints");
    }
    let mut fc = f.clone();
    fc.push(1);
    Closure { graph: h, f: fc, s, original_edges: g.m() }
}

/// A graph whose edges keep their ids but may have fewer copies.
#[derive(Clone, Debug)]
pub struct Normalized {
    pub graph: Multigraph,
    /// `copy_map[e][k]` is the original copy index of copy `k` of edge `e`.
    pub copy_map: Vec<Vec<usize>>,
}

impl Normalized {
    pub fn lift(&self, s: &EdgeSubset) -> EdgeSubset {
        s.iter()
            .map(|c| CopyId { edge: c.edge, copy: self.copy_map[c.edge][c.copy] })
            .collect()
    }
}

/// Keep only the heaviest copies of every edge that a factor could use:
/// `min(mult, f(u), f(v))` for ordinary edges and `min(mult, ⌊f(v)/2⌋)` for
/// loops. Edge ids are stable; an edge may be left with no copies.
pub fn normalize(g: &Multigraph, f: &DegreeConstraint) -> Normalized {
    let mut out = Multigraph::new(g.n());
    let mut copy_map = Vec::with_capacity(g.m());
    for e in g.edges() {
        let cap = if e.is_loop() { f.get(e.u) / 2 } else { f.get(e.u).min(f.get(e.v)) };
        let keep = e.mult().min(cap);
        let mut order: Vec<usize> = (0..e.mult()).collect();
        order.sort_by(|&a, &b| e.weights[b].cmp(&e.weights[a]).then(a.cmp(&b)));
        order.truncate(keep);
        order.sort_unstable();
        out.edges.push(Edge { u: e.u, v: e.v, weights: order.iter().map(|&k| e.weights[k]).collect() });
        copy_map.push(order);
    }
    Normalized { graph: out, copy_map }
}

/// Induced subgraph on `keep`; returns the graph, the new index of every kept
/// vertex, and the original id of every kept edge.
pub fn induced(g: &Multigraph, keep: &[bool]) -> (Multigraph, Vec<Option<Vertex>>, Vec<usize>) {
    let mut index = vec![None; g.n()];
    let mut next = 0;
    for v in 0..g.n() {
        if keep[v] {
            index[v] = Some(next);
            next += 1;
        }
    }
    let mut h = Multigraph::new(next);
    let mut origin = Vec::new();
    for (id, e) in g.edges().iter().enumerate() {
        if let (Some(a), Some(b)) = (index[e.u], index[e.v]) {
            if e.mult() > 0 {
                h.edges.push(Edge { u: a, v: b, weights: e.weights.clone() });
                origin.push(id);
            }
        }
    }
    (h, index, origin)
}
