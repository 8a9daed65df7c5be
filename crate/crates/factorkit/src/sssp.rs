//! Shortest `vt`-paths in undirected graphs with conservative weights. The
//! distances come from maximum perturbations of an f-factor encoding (a
//! zero loop at every vertex but `t`, `f = 2` except `f(t) = 1`, weights
//! negated); the generalized shortest-path tree is assembled from the
//! weighted blossom forest of that encoding by a search-tree scan inside
//! every blossom, and certified by its dual inequalities.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::blossom::{build_forest_with_sink, hat_yz, max_weight_general, Node, WeightedBlossomForest};
use crate::config::{with_retries, SolveConfig};
use crate::error::{Error, Result};
use crate::graph::{CopyId, DegreeConstraint, Direction, Multigraph, Vertex};
use crate::oracle::{brute_negative_cycle, brute_paths, OracleBudget};
use crate::perturb::{lower_weights_once, PerturbationWeights};

/// Source of the distances fed to the blossom stage.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    #[default]
    Algebraic,
    Oracle,
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "algebraic" => Ok(Backend::Algebraic),
            "oracle" => Ok(Backend::Oracle),
            other => Err(Error::input(format!("unknown backend {other:?}"))),
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Algebraic => "algebraic",
            Backend::Oracle => "oracle",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GspKind {
    Leaf(Vertex),
    Cycle,
    Tree,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GspNode {
    pub kind: GspKind,
    /// Children with `N_1` (the child holding the sink) first.
    pub children: Vec<usize>,
    pub parent: Option<usize>,
    /// `V(N)`, sorted.
    pub vertices: Vec<Vertex>,
    /// `t(N)`.
    pub sink: Vertex,
    /// `e(N)`; absent at the root and on the sink chain below it.
    pub exit: Option<CopyId>,
    /// `E(N)`: a cycle on the children, or the tree of parent edges at a
    /// tree root.
    pub edges: Vec<CopyId>,
    /// Sum of `z` over `N` and its ancestors.
    pub zeta: i64,
    pub z: i64,
}

/// A gsp-tree with its duals `d` and `z`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GspStructure {
    pub t: Vertex,
    pub nodes: Vec<GspNode>,
    pub root: usize,
    /// Leaf node of every vertex.
    pub leaf: Vec<usize>,
    /// `d(v)`: the distance from `v` to `t`.
    pub d: Vec<i64>,
}

impl GspStructure {
    fn contains(&self, n: usize, v: Vertex) -> bool {
        self.nodes[n].vertices.binary_search(&v).is_ok()
    }

    /// Nodes covering an edge copy: those holding both ends, and those whose
    /// exit edge it is.
    pub fn covering(&self, g: &Multigraph, c: CopyId) -> Vec<usize> {
        let e = g.edge(c.edge);
        (0..self.nodes.len())
            .filter(|&n| self.nodes[n].exit == Some(c) || (self.contains(n, e.u) && self.contains(n, e.v)))
            .collect()
    }

    fn cover_sum(&self, g: &Multigraph, c: CopyId) -> i64 {
        self.covering(g, c).iter().map(|&n| self.nodes[n].z).sum()
    }

    /// Cover of the zero loop at `x`: every ancestor of the leaf `x`.
    fn loop_cover(&self, x: Vertex) -> i64 {
        let mut n = Some(self.leaf[x]);
        let mut sum = 0;
        while let Some(k) = n {
            sum += self.nodes[k].z;
            n = self.nodes[k].parent;
        }
        sum
    }
}

/// Scan-stage tree before duals are attached.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GspTree {
    pub nodes: Vec<GspNode>,
    pub root: usize,
    pub leaf: Vec<usize>,
}

fn blank(kind: GspKind) -> GspNode {
    GspNode {
        kind,
        children: Vec::new(),
        parent: None,
        vertices: Vec::new(),
        sink: 0,
        exit: None,
        edges: Vec::new(),
        zeta: 0,
        z: 0,
    }
}

struct Dsu(Vec<usize>);

impl Dsu {
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut y = x;
        while self.0[y] != r {
            let next = self.0[y];
            self.0[y] = r;
            y = next;
        }
        r
    }
}

/// Fill `vertices`, `sink` and the inherited exits top-down: `N_1` shares
/// the exit and sink of its parent, every other child keeps its own exit
/// and has the end of that exit as sink.
fn finish_tree(g: &Multigraph, nodes: &mut [GspNode], root: usize, t: Vertex) -> Result<()> {
    fn collect(nodes: &mut [GspNode], n: usize) -> Vec<Vertex> {
        if let GspKind::Leaf(v) = nodes[n].kind {
            nodes[n].vertices = vec![v];
            return vec![v];
        }
        let mut all = Vec::new();
        for k in 0..nodes[n].children.len() {
            let c = nodes[n].children[k];
            nodes[c].parent = Some(n);
            all.extend(collect(nodes, c));
        }
        all.sort_unstable();
        nodes[n].vertices = all.clone();
        all
    }
    collect(nodes, root);
    nodes[root].parent = None;
    nodes[root].exit = None;
    nodes[root].sink = t;
    let mut stack = vec![root];
    while let Some(n) = stack.pop() {
        let kids = nodes[n].children.clone();
        for (i, &c) in kids.iter().enumerate() {
            if i == 0 {
                nodes[c].exit = nodes[n].exit;
                nodes[c].sink = nodes[n].sink;
                if nodes[c].vertices.binary_search(&nodes[n].sink).is_err() {
                    return Err(Error::inconsistent("first child does not hold the sink"));
                }
            } else {
                let ex = nodes[c].exit.ok_or_else(|| Error::inconsistent("child without an exit edge"))?;
                let e = g.edge(ex.edge);
                let inside = |x: Vertex| nodes[c].vertices.binary_search(&x).is_ok();
                nodes[c].sink = match (inside(e.u), inside(e.v)) {
                    (true, false) => e.u,
                    (false, true) => e.v,
                    _ => return Err(Error::inconsistent("exit edge does not leave its node")),
                };
            }
            stack.push(c);
        }
    }
    Ok(())
}

/// A gsp-tree for `g` with sink `t` whose exit edges agree with `e0`
/// wherever `e0` is set, grown as a search tree of u- and d-vertices from
/// `t` with fundamental cycles contracted into cycle nodes. Loops are
/// ignored. The root is a cycle node when everything contracts into `t`,
/// else a tree node over the final search tree.
pub fn build_gsp_tree(g: &Multigraph, t: Vertex, e0: &[Option<CopyId>]) -> Result<GspTree> {
    let n = g.n();
    if t >= n || e0.len() != n {
        return Err(Error::input("sink or e0 table does not match the graph"));
    }
    if e0[t].is_some() {
        return Err(Error::input("the sink has no exit edge"));
    }
    let mut nodes: Vec<GspNode> = (0..n).map(|v| blank(GspKind::Leaf(v))).collect();
    let leaf: Vec<usize> = (0..n).collect();
    let mut dsu = Dsu((0..n).collect());
    let mut node_of: Vec<usize> = (0..n).collect();
    let mut e: Vec<Option<CopyId>> = e0.to_vec();
    let mut in_tree = vec![false; n];
    let mut up = vec![false; n];
    let mut pedge: Vec<Option<CopyId>> = vec![None; n];
    let mut d_scanned = vec![false; n];
    let mut scanned: HashSet<(CopyId, Vertex)> = HashSet::new();
    in_tree[t] = true;
    up[t] = true;
    let copies: Vec<CopyId> = g.copies().filter(|c| !g.edge(c.edge).is_loop()).collect();

    fn add(y: usize, c: CopyId, in_tree: &mut [bool], pedge: &mut [Option<CopyId>], e: &mut [Option<CopyId>], up: &mut [bool]) {
        in_tree[y] = true;
        pedge[y] = Some(c);
        if e[y].is_none() {
            e[y] = Some(c);
        }
        up[y] = e[y] == Some(c);
    }

    loop {
        // A u-vertex with an unscanned nontree edge.
        let mut action = None;
        'find: for &c in &copies {
            let ed = g.edge(c.edge);
            for (x, y) in [(ed.u, ed.v), (ed.v, ed.u)] {
                let (rx, ry) = (dsu.find(x), dsu.find(y));
                if rx == ry || !in_tree[rx] || !up[rx] || scanned.contains(&(c, x)) {
                    continue;
                }
                if pedge[rx] == Some(c) || pedge[ry] == Some(c) {
                    continue;
                }
                action = Some((c, x, rx, ry, true));
                break 'find;
            }
        }
        if action.is_none() {
            for r in 0..n {
                if dsu.find(r) == r && in_tree[r] && !up[r] && !d_scanned[r] {
                    let c = e[r].ok_or_else(|| Error::inconsistent("d-vertex without e0"))?;
                    let ed = g.edge(c.edge);
                    let y = if dsu.find(ed.u) == r { ed.v } else { ed.u };
                    action = Some((c, r, r, dsu.find(y), false));
                    break;
                }
            }
        }
        let Some((c, x, rx, ry, from_u)) = action else { break };
        if from_u {
            scanned.insert((c, x));
        } else {
            d_scanned[rx] = true;
        }
        if !in_tree[ry] {
            add(ry, c, &mut in_tree, &mut pedge, &mut e, &mut up);
            continue;
        }
        let qualifies = if from_u { up[ry] || e[ry] == Some(c) } else { e[ry] == Some(c) };
        if !qualifies {
            continue;
        }
        // Contract the fundamental cycle of c.
        let path_up = |mut r: usize, dsu: &mut Dsu| {
            let mut out = vec![r];
            while let Some(pe) = pedge[r] {
                let ed = g.edge(pe.edge);
                let other = if dsu.find(ed.u) == r { ed.v } else { ed.u };
                r = dsu.find(other);
                out.push(r);
            }
            out
        };
        let px = path_up(rx, &mut dsu);
        let py = path_up(ry, &mut dsu);
        let b = *px.iter().find(|r| py.contains(r)).ok_or_else(|| Error::inconsistent("search tree is not connected"))?;
        if !up[b] {
            return Err(Error::inconsistent("fundamental cycle based at a d-vertex"));
        }
        let mut members = vec![b];
        let mut edges = vec![c];
        for path in [&px, &py] {
            for &r in path.iter().take_while(|&&r| r != b) {
                members.push(r);
                edges.push(pedge[r].expect("non-root tree vertex has a parent edge"));
            }
        }
        let id = nodes.len();
        let mut node = blank(GspKind::Cycle);
        node.edges = edges;
        for &m in &members {
            node.children.push(node_of[m]);
            if m != b {
                nodes[node_of[m]].exit = e[m];
            }
        }
        nodes.push(node);
        let (eb, pb) = (e[b], pedge[b]);
        for &m in &members[1..] {
            dsu.0[m] = b;
        }
        node_of[b] = id;
        e[b] = eb;
        pedge[b] = pb;
        up[b] = true;
    }

    let reps: Vec<usize> = (0..n).filter(|&r| dsu.find(r) == r).collect();
    if reps.iter().any(|&r| !in_tree[r]) {
        return Err(Error::inconsistent("some vertex has no permissible path to the sink"));
    }
    let rt = dsu.find(t);
    let root = if reps.len() == 1 {
        node_of[rt]
    } else {
        if reps.iter().any(|&r| !up[r]) {
            return Err(Error::inconsistent("a d-vertex remains in the final search tree"));
        }
        let mut node = blank(GspKind::Tree);
        node.children.push(node_of[rt]);
        for &r in reps.iter().filter(|&&r| r != rt) {
            node.children.push(node_of[r]);
            nodes[node_of[r]].exit = pedge[r];
            node.edges.push(pedge[r].expect("tree vertex has a parent edge"));
        }
        nodes.push(node);
        nodes.len() - 1
    };
    finish_tree(g, &mut nodes, root, t)?;
    Ok(GspTree { nodes, root, leaf })
}

/// The input after clean-up: loops dropped, every other copy its own edge.
#[derive(Clone, Debug)]
pub struct CleanGraph {
    pub graph: Multigraph,
    /// Input copy behind every edge.
    pub origin: Vec<CopyId>,
}

/// Drop loops and split copies into separate edges, rejecting graphs that
/// are not connected. Negative loops and parallel pairs are not checked here;
/// see [`short_negative_cycle`].
pub fn clean(g: &Multigraph, t: Vertex) -> Result<CleanGraph> {
    if t >= g.n() {
        return Err(Error::input(format!("sink {t} out of range")));
    }
    let mut graph = Multigraph::new(g.n());
    let mut origin = Vec::new();
    for c in g.copies().filter(|c| !g.edge(c.edge).is_loop()) {
        let e = g.edge(c.edge);
        graph.add_edge(e.u, e.v, vec![g.weight(c)])?;
        origin.push(c);
    }
    let mut seen = vec![false; g.n()];
    let mut stack = vec![t];
    seen[t] = true;
    let inc = graph.incidence();
    while let Some(x) = stack.pop() {
        for &id in &inc[x] {
            let y = graph.edge(id).other(x);
            if !seen[y] {
                seen[y] = true;
                stack.push(y);
            }
        }
    }
    if let Some(v) = seen.iter().position(|s| !s) {
        return Err(Error::input(format!("vertex {v} is not connected to the sink")));
    }
    Ok(CleanGraph { graph, origin })
}

/// The f-factor encoding of a cleaned graph. When `t` has more than one
/// edge a pendant sink `t'` is attached to `t` by a weight-0 edge, and `t`
/// becomes an ordinary vertex.
#[derive(Clone, Debug)]
pub struct Encoding {
    pub graph: Multigraph,
    pub f: DegreeConstraint,
    /// The sink of the encoding: `t'` if present, else `t`.
    pub sink: Vertex,
    pub pendant: Option<Vertex>,
    /// Cleaned-graph edge behind each encoding edge; `None` for the pendant
    /// edge and the loops.
    pub origin: Vec<Option<usize>>,
}

pub fn encode(clean: &Multigraph, t: Vertex) -> Encoding {
    let n = clean.n();
    let mut graph = clean.with_weights_negated();
    let mut origin: Vec<Option<usize>> = (0..clean.m()).map(Some).collect();
    let deg = clean.edges().iter().filter(|e| e.u == t || e.v == t).count();
    let mut f = DegreeConstraint::uniform(n, 2);
    let (sink, pendant) = if deg > 1 {
        let tp = graph.add_vertex();
        graph.add_plain(t, tp, 1).expect("valid endpoints");
        origin.push(None);
        f.push(1);
        (tp, Some(tp))
    } else {
        f.set(t, 1);
        (t, None)
    };
    for v in 0..n {
        if v != sink {
            graph.add_plain(v, v, 1).expect("valid endpoints");
            origin.push(None);
        }
    }
    Encoding { graph, f, sink, pendant, origin }
}

/// A negative loop or a pair of parallel copies of negative total weight.
pub fn short_negative_cycle(g: &Multigraph) -> Option<Vec<CopyId>> {
    let mut cheapest: BTreeMap<(Vertex, Vertex), Vec<(i64, CopyId)>> = BTreeMap::new();
    for c in g.copies() {
        let e = g.edge(c.edge);
        let w = g.weight(c);
        if e.is_loop() {
            if w < 0 {
                return Some(vec![c]);
            }
            continue;
        }
        let list = cheapest.entry((e.u.min(e.v), e.u.max(e.v))).or_default();
        list.push((w, c));
        list.sort_unstable();
        list.truncate(2);
    }
    cheapest
        .values()
        .find(|l| l.len() == 2 && l[0].0 + l[1].0 < 0)
        .map(|l| vec![l[0].1, l[1].1])
}

/// A negative cycle read off a maximum `f_t`-factor of the encoding, which
/// is a union of loops and cycles of nonnegative negated weight.
fn cycle_from_encoding(enc: &Encoding, cg: &CleanGraph, g: &Multigraph, cfg: &SolveConfig) -> Result<Vec<CopyId>> {
    let fs = enc.f.perturb(enc.sink, Direction::Lower)?;
    let fac = max_weight_general(&enc.graph, &fs, cfg)?.factor;
    let mut adj: BTreeMap<Vertex, Vec<CopyId>> = BTreeMap::new();
    for c in fac.iter().filter(|c| !enc.graph.edge(c.edge).is_loop()) {
        let e = enc.graph.edge(c.edge);
        adj.entry(e.u).or_default().push(*c);
        adj.entry(e.v).or_default().push(*c);
    }
    let mut used: HashSet<CopyId> = HashSet::new();
    for &start in adj.keys() {
        let mut cyc = Vec::new();
        let mut x = start;
        while let Some(&c) = adj[&x].iter().find(|c| !used.contains(c)) {
            used.insert(c);
            cyc.push(c);
            x = enc.graph.edge(c.edge).other(x);
            if x == start {
                break;
            }
        }
        let lifted: Vec<CopyId> = cyc.iter().filter_map(|c| enc.origin[c.edge]).map(|id| cg.origin[id]).collect();
        if lifted.iter().map(|&c| g.weight(c)).sum::<i64>() < 0 {
            return Ok(lifted);
        }
    }
    Err(Error::unlucky("no negative cycle in the sink factor"))
}

pub fn describe_cycle(g: &Multigraph, cycle: &[CopyId]) -> String {
    let w: i64 = cycle.iter().map(|&c| g.weight(c)).sum();
    let mut verts = Vec::new();
    if let Some(first) = cycle.first() {
        let e0 = g.edge(first.edge);
        // Start at the end of the first edge not shared with the last one.
        let mut x = match cycle.last().map(|c| g.edge(c.edge)) {
            Some(l) if cycle.len() > 1 && (l.u == e0.u || l.v == e0.u) && !(l.u == e0.v || l.v == e0.v) => e0.u,
            Some(l) if cycle.len() > 1 && (l.u == e0.v || l.v == e0.v) => e0.v,
            _ => e0.u,
        };
        for c in cycle {
            verts.push(x);
            x = g.edge(c.edge).other(x);
        }
    }
    format!("cycle through vertices {verts:?} has weight {w}")
}

/// Assemble the gsp-structure on the encoding from its blossom forest.
fn structure_from_forest(
    enc: &Encoding,
    forest: &WeightedBlossomForest,
    vertex_zeta: &[i64],
    lower: &[i64],
) -> Result<GspStructure> {
    let h = &enc.graph;
    let n = h.n();
    let mut nodes: Vec<GspNode> = (0..n).map(|v| blank(GspKind::Leaf(v))).collect();
    for (v, node) in nodes.iter_mut().enumerate() {
        node.zeta = -vertex_zeta[v];
    }
    let leaf: Vec<usize> = (0..n).collect();
    let tight = |c: CopyId| h.weight(c) == hat_yz(h, c, forest);
    let mut gsp_of: Vec<usize> = vec![usize::MAX; forest.blossoms.len()];

    // Solve one contracted graph and graft its tree: `units[i]` is the gsp
    // node of unit i, `unit_of[v]` the unit holding v (or none).
    let graft = |nodes: &mut Vec<GspNode>,
                     units: &[usize],
                     unit_of: &dyn Fn(Vertex) -> Option<usize>,
                     candidates: &[CopyId],
                     e0: &[Option<CopyId>],
                     sink_unit: usize,
                     zeta: Option<i64>|
     -> Result<usize> {
        let mut small = Multigraph::new(units.len());
        let mut back: Vec<CopyId> = Vec::new();
        for &c in candidates {
            let e = h.edge(c.edge);
            let (Some(p), Some(q)) = (unit_of(e.u), unit_of(e.v)) else { continue };
            if p != q {
                small.add_edge(p, q, vec![h.weight(c)])?;
                back.push(c);
            }
        }
        let find = |c: CopyId| back.iter().position(|&d| d == c).map(|i| CopyId { edge: i, copy: 0 });
        let mut se0 = Vec::with_capacity(units.len());
        for (i, x) in e0.iter().enumerate() {
            se0.push(if i == sink_unit {
                None
            } else {
                match x {
                    None => None,
                    Some(c) => Some(find(*c).ok_or_else(|| Error::inconsistent("exit edge of a blossom is not tight"))?),
                }
            });
        }
        let tree = build_gsp_tree(&small, sink_unit, &se0)?;
        let base = nodes.len();
        let map = |k: usize| if k < units.len() { units[k] } else { base + k - units.len() };
        for (k, sn) in tree.nodes.iter().enumerate() {
            if k < units.len() {
                if k != sink_unit {
                    nodes[units[k]].exit = sn.exit.map(|c| back[c.edge]);
                }
                continue;
            }
            let mut node = blank(sn.kind);
            node.children = sn.children.iter().map(|&c| map(c)).collect();
            node.edges = sn.edges.iter().map(|c| back[c.edge]).collect();
            node.exit = sn.exit.map(|c| back[c.edge]);
            node.zeta = match zeta {
                Some(z) => z,
                None => node.children.iter().map(|&c| nodes[c].zeta).max().unwrap_or(0),
            };
            nodes.push(node);
        }
        Ok(map(tree.root))
    };

    let all: Vec<CopyId> = h.copies().filter(|c| !h.edge(c.edge).is_loop()).collect();
    for (id, b) in forest.blossoms.iter().enumerate() {
        if b.i_set.len() != 1 {
            return Err(Error::inconsistent(format!("blossom {id} has {} exit edges", b.i_set.len())));
        }
        let exit = *b.i_set.iter().next().expect("one exit edge");
        if let [Node::Vertex(x)] = b.children[..] {
            gsp_of[id] = x;
            nodes[x].exit = Some(exit);
            continue;
        }
        let units: Vec<usize> = b
            .children
            .iter()
            .map(|&c| match c {
                Node::Vertex(x) => x,
                Node::Blossom(a) => gsp_of[a],
            })
            .collect();
        let child_unit = |v: Vertex| -> Option<usize> {
            b.children.iter().position(|&c| match c {
                Node::Vertex(x) => x == v,
                Node::Blossom(a) => forest.blossoms[a].vertices.binary_search(&v).is_ok(),
            })
        };
        let e0: Vec<Option<CopyId>> = b
            .children
            .iter()
            .map(|&c| match c {
                Node::Vertex(_) => None,
                Node::Blossom(a) => forest.blossoms[a].i_set.iter().next().copied(),
            })
            .collect();
        let ex = h.edge(exit.edge);
        let t_b = if b.vertices.binary_search(&ex.u).is_ok() { ex.u } else { ex.v };
        let sink_unit = child_unit(t_b).expect("the exit edge leaves from inside");
        if let Node::Blossom(a) = b.children[sink_unit] {
            if !forest.blossoms[a].i_set.contains(&exit) {
                return Err(Error::inconsistent("sink child does not share the exit edge of its blossom"));
            }
        }
        let cand: Vec<CopyId> = all.iter().copied().filter(|&c| tight(c)).collect();
        let r = graft(&mut nodes, &units, &child_unit, &cand, &e0, sink_unit, Some(-b.zbar))?;
        if nodes[r].kind != GspKind::Cycle {
            return Err(Error::inconsistent(format!("blossom {id} does not contract to a cycle")));
        }
        nodes[r].exit = Some(exit);
        gsp_of[id] = r;
    }

    // Top level: maximal blossoms and blossom-free vertices joined by 𝒯.
    let mut top_units: Vec<usize> = Vec::new();
    let mut top_e0: Vec<Option<CopyId>> = Vec::new();
    let mut unit_of_vertex = vec![usize::MAX; n];
    for b in forest.maximal() {
        for &v in &forest.blossoms[b].vertices {
            unit_of_vertex[v] = top_units.len();
        }
        top_units.push(gsp_of[b]);
        top_e0.push(forest.blossoms[b].i_set.iter().next().copied());
    }
    for v in (0..n).filter(|&v| forest.smallest[v].is_none()) {
        unit_of_vertex[v] = top_units.len();
        top_units.push(v);
        top_e0.push(None);
    }
    let sink_unit = unit_of_vertex[enc.sink];
    let root = if top_units.len() == 1 {
        top_units[0]
    } else {
        let lookup = |v: Vertex| Some(unit_of_vertex[v]);
        graft(&mut nodes, &top_units, &lookup, &forest.tree_edges, &top_e0, sink_unit, None)?
    };
    let mut s = GspStructure { t: enc.sink, nodes, root, leaf, d: lower.iter().map(|w| -w).collect() };
    finish_tree(h, &mut s.nodes, s.root, enc.sink)?;
    Ok(s)
}

/// Remove the pendant sink `t'`, making `t` the sink.
fn splice_pendant(s: &mut GspStructure, g: &Multigraph, t: Vertex, tp: Vertex) -> Result<()> {
    let lp = s.leaf[tp];
    let root = s.root;
    if !s.nodes[root].children.contains(&lp) {
        return Err(Error::inconsistent("pendant sink is not a child of the root"));
    }
    let k = *s.nodes[root]
        .children
        .iter()
        .find(|&&c| s.nodes[c].vertices.binary_search(&t).is_ok())
        .ok_or_else(|| Error::inconsistent("no root child holds t"))?;
    let pendant = s.nodes[k].exit;
    s.nodes[root].children.retain(|&c| c != lp && c != k);
    s.nodes[root].children.insert(0, k);
    s.nodes[root].edges.retain(|&c| Some(c) != pendant);
    if s.nodes[root].children.len() == 1 {
        s.nodes[root].children.clear();
        s.root = k;
    }
    finish_tree(g, &mut s.nodes, s.root, t)?;
    // Compact away the pendant leaf and a dropped root.
    let mut keep = vec![false; s.nodes.len()];
    let mut stack = vec![s.root];
    while let Some(x) = stack.pop() {
        keep[x] = true;
        stack.extend(s.nodes[x].children.iter().copied());
    }
    let mut new_id = vec![usize::MAX; s.nodes.len()];
    let mut nodes = Vec::new();
    for (i, node) in s.nodes.iter().enumerate() {
        if keep[i] {
            new_id[i] = nodes.len();
            nodes.push(node.clone());
        }
    }
    for node in &mut nodes {
        node.parent = node.parent.map(|p| new_id[p]);
        for c in &mut node.children {
            *c = new_id[*c];
        }
    }
    s.root = new_id[s.root];
    s.leaf = s.leaf[..tp].iter().map(|&l| new_id[l]).collect();
    s.nodes = nodes;
    s.d.truncate(tp);
    s.t = t;
    Ok(())
}

/// `z(N) = ζ_N − ζ_{p(N)}` and `z` of the root equal to its `ζ`.
fn set_z(s: &mut GspStructure) {
    for i in 0..s.nodes.len() {
        s.nodes[i].z = match s.nodes[i].parent {
            Some(p) => s.nodes[i].zeta - s.nodes[p].zeta,
            None => s.nodes[i].zeta,
        };
    }
}

/// Rewrite copies of the encoding as copies of the input graph.
fn lift(s: &mut GspStructure, enc: &Encoding, cg: &CleanGraph) -> Result<()> {
    let map = |c: CopyId| -> Result<CopyId> {
        enc.origin[c.edge]
            .map(|id| cg.origin[id])
            .ok_or_else(|| Error::inconsistent("the structure uses a loop or the pendant edge"))
    };
    for node in &mut s.nodes {
        node.exit = node.exit.map(map).transpose()?;
        node.edges = node.edges.iter().map(|&c| map(c)).collect::<Result<_>>()?;
    }
    Ok(())
}

/// Either a certified gsp-structure or a negative cycle of the input.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SsspOutcome {
    Structure(Box<GspStructure>),
    /// Input copies of a cycle of negative weight.
    Cycle(Vec<CopyId>),
}

/// `w(F_v)` of the encoding for every vertex, or a negative cycle found by
/// the oracle.
fn lower_or_cycle(enc: &Encoding, cg: &CleanGraph, t: Vertex, backend: Backend, bits: u32, seed: u64) -> Result<std::result::Result<Vec<i64>, Vec<CopyId>>> {
    match backend {
        Backend::Algebraic => Ok(Ok(lower_weights_once(&enc.graph, &enc.f, bits, seed)?.0)),
        Backend::Oracle => {
            if let Some(c) = brute_negative_cycle(&cg.graph, OracleBudget::default())? {
                return Ok(Err(c.iter().map(|id| cg.origin[id.edge]).collect()));
            }
            let mut lower: Vec<i64> = Vec::with_capacity(enc.graph.n());
            for p in brute_paths(&cg.graph, t, OracleBudget::default())? {
                let (w, _) = p.ok_or_else(|| Error::input("vertex not connected to the sink"))?;
                lower.push(-w);
            }
            if enc.pendant.is_some() {
                lower.push(0);
            }
            Ok(Ok(lower))
        }
    }
}

/// [`sssp`] with a negative cycle returned as data instead of an error.
pub fn solve_sssp(g: &Multigraph, t: Vertex, backend: Backend, cfg: &SolveConfig) -> Result<SsspOutcome> {
    if let Some(c) = short_negative_cycle(g) {
        return Ok(SsspOutcome::Cycle(c));
    }
    let cg = clean(g, t)?;
    if g.n() == 1 {
        let mut node = blank(GspKind::Leaf(0));
        node.vertices = vec![0];
        let s = GspStructure { t, nodes: vec![node], root: 0, leaf: vec![0], d: vec![0] };
        return Ok(SsspOutcome::Structure(Box::new(s)));
    }
    let enc = encode(&cg.graph, t);
    let (out, _) = with_retries(cfg, |seed| {
        let lower = match lower_or_cycle(&enc, &cg, t, backend, cfg.prime_bits, seed)? {
            Ok(l) => l,
            Err(c) => return Ok(SsspOutcome::Cycle(c)),
        };
        if lower[enc.sink] > 0 {
            let c = cycle_from_encoding(&enc, &cg, g, &SolveConfig { seed, ..*cfg })?;
            return Ok(SsspOutcome::Cycle(c));
        }
        if lower[enc.sink] < 0 {
            return Err(Error::unlucky("the sink factor has negative weight"));
        }
        let top = *lower.iter().max().expect("nonempty");
        let pw = PerturbationWeights { lower: lower.clone(), upper: lower.clone(), base_lower: top, base_upper: top };
        let (zt, forest) = build_forest_with_sink(&enc.graph, &enc.f, &pw, Some(enc.sink))?;
        let mut s = structure_from_forest(&enc, &forest, &zt.vertex, &lower)?;
        if let Some(tp) = enc.pendant {
            splice_pendant(&mut s, &enc.graph, t, tp)?;
        }
        lift(&mut s, &enc, &cg)?;
        set_z(&mut s);
        let report = validate_gsp(&s, g);
        if !report.is_valid() {
            return Err(Error::inconsistent(format!("gsp-structure fails validation: {}", report.violations[0])));
        }
        Ok(SsspOutcome::Structure(Box::new(s)))
    })?;
    Ok(out)
}

/// Shortest paths to `t` with their gsp-structure, certified by
/// [`validate_gsp`] before being returned. A negative cycle is reported as
/// [`Error::NegativeCycle`] naming its vertices.
pub fn sssp(g: &Multigraph, t: Vertex, backend: Backend, cfg: &SolveConfig) -> Result<GspStructure> {
    match solve_sssp(g, t, backend, cfg)? {
        SsspOutcome::Structure(s) => Ok(*s),
        SsspOutcome::Cycle(c) => Err(Error::NegativeCycle(describe_cycle(g, &c))),
    }
}

/// A negative cycle of `g` as input copies, or `None` when `w` is
/// conservative. `t` only fixes the encoding; `g` must be connected.
pub fn find_negative_cycle(g: &Multigraph, t: Vertex, backend: Backend, cfg: &SolveConfig) -> Result<Option<Vec<CopyId>>> {
    match solve_sssp(g, t, backend, cfg)? {
        SsspOutcome::Structure(_) => Ok(None),
        SsspOutcome::Cycle(c) => Ok(Some(c)),
    }
}

/// The path `p(v)` from `v` to `t` specified by the tree, as copies in order.
pub fn expand_path(s: &GspStructure, g: &Multigraph, v: Vertex) -> Result<Vec<CopyId>> {
    if v >= s.leaf.len() {
        return Err(Error::input(format!("vertex {v} out of range")));
    }
    path_in(s, g, v, s.root, 0)
}

fn path_in(s: &GspStructure, g: &Multigraph, x: Vertex, n: usize, depth: usize) -> Result<Vec<CopyId>> {
    if depth > s.nodes.len() {
        return Err(Error::inconsistent("gsp-tree has a cycle"));
    }
    let node = &s.nodes[n];
    if let GspKind::Leaf(v) = node.kind {
        return if v == x { Ok(Vec::new()) } else { Err(Error::inconsistent("path reached the wrong leaf")) };
    }
    let kids = &node.children;
    let child = |y: Vertex| kids.iter().position(|&c| s.contains(c, y));
    let i = child(x).ok_or_else(|| Error::inconsistent("vertex outside the node"))?;
    if i == 0 {
        return path_in(s, g, x, kids[0], depth + 1);
    }
    // Walk E(N) from child i to child 0, starting with e(N_i).
    let mut seq = vec![i];
    let mut links: Vec<CopyId> = Vec::new();
    let mut cur = i;
    let mut edge = s.nodes[kids[i]].exit.ok_or_else(|| Error::inconsistent("child without exit"))?;
    loop {
        if links.len() > kids.len() {
            return Err(Error::inconsistent("E(N) walk does not reach the first child"));
        }
        let e = g.edge(edge.edge);
        let (a, b) = (child(e.u), child(e.v));
        let next = match (a, b) {
            (Some(a), Some(b)) if a == cur => b,
            (Some(a), Some(b)) if b == cur => a,
            _ => return Err(Error::inconsistent("E(N) edge does not join children")),
        };
        links.push(edge);
        seq.push(next);
        if next == 0 {
            break;
        }
        cur = next;
        edge = match node.kind {
            GspKind::Tree => s.nodes[kids[cur]].exit.ok_or_else(|| Error::inconsistent("tree child without exit"))?,
            _ => *node
                .edges
                .iter()
                .find(|&&c| {
                    c != edge && {
                        let e = g.edge(c.edge);
                        child(e.u) == Some(cur) || child(e.v) == Some(cur)
                    }
                })
                .ok_or_else(|| Error::inconsistent("cycle of E(N) is broken"))?,
        };
    }
    let end_in = |c: CopyId, k: usize| {
        let e = g.edge(c.edge);
        if s.contains(kids[k], e.u) { e.u } else { e.v }
    };
    let mut out = Vec::new();
    for (j, &k) in seq.iter().enumerate() {
        let enter = if j == 0 { x } else { end_in(links[j - 1], k) };
        let own = s.nodes[kids[k]].exit;
        let leaves_by_exit = j + 1 == seq.len() || Some(links[j]) == own;
        let seg = if leaves_by_exit {
            path_in(s, g, enter, kids[k], depth + 1)?
        } else if j > 0 && Some(links[j - 1]) == own {
            let leave = end_in(links[j], k);
            let mut p = path_in(s, g, leave, kids[k], depth + 1)?;
            p.reverse();
            p
        } else {
            return Err(Error::inconsistent("path crosses a child without using its exit edge"));
        };
        out.extend(seg);
        if j < links.len() {
            out.push(links[j]);
        }
    }
    Ok(out)
}

/// Violations found by [`validate_gsp`]; empty for a valid structure.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GspReport {
    pub violations: Vec<String>,
}

impl GspReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check the tree shape, the dual inequalities `d(x) + d(y) + w(xy) ≥ Σ z(N)`
/// over covering nodes for every copy and every zero loop `xx` (`x ≠ t`),
/// equality on every `E(N)` and `e(N)` edge and every loop, `z(N) ≤ 0` below
/// the root, and that every `p(v)` is a simple `vt`-path of weight `d(v)`.
pub fn validate_gsp(s: &GspStructure, g: &Multigraph) -> GspReport {
    let mut bad = Vec::new();
    let n = g.n();
    if s.leaf.len() != n || s.d.len() != n {
        return GspReport { violations: vec!["structure does not match the vertex count".into()] };
    }
    let root = &s.nodes[s.root];
    if root.exit.is_some() || root.sink != s.t || root.vertices.len() != n {
        bad.push("root must span V, have sink t and no exit edge".into());
    }
    if s.d[s.t] != 0 {
        bad.push("d(t) must be 0".into());
    }
    for (i, node) in s.nodes.iter().enumerate() {
        if Some(i) != Some(s.root) && node.z > 0 {
            bad.push(format!("node {i} has positive z"));
        }
        if matches!(node.kind, GspKind::Leaf(_)) {
            continue;
        }
        let kids = &node.children;
        let child = |y: Vertex| kids.iter().position(|&c| s.contains(c, y));
        let mut deg = vec![0usize; kids.len()];
        for &c in &node.edges {
            let e = g.edge(c.edge);
            match (child(e.u), child(e.v)) {
                (Some(a), Some(b)) if a != b => {
                    deg[a] += 1;
                    deg[b] += 1;
                }
                _ => bad.push(format!("edge {c:?} of node {i} does not join two children")),
            }
        }
        for (k, &c) in kids.iter().enumerate().skip(1) {
            match s.nodes[c].exit {
                Some(ex) if node.edges.contains(&ex) => {}
                _ => bad.push(format!("child {k} of node {i} has no exit edge in E(N)")),
            }
        }
        let is_cycle = node.edges.len() == kids.len() && deg.iter().all(|&d| d == 2);
        let is_tree = node.edges.len() + 1 == kids.len();
        match node.kind {
            GspKind::Cycle if !is_cycle => bad.push(format!("node {i} is not a cycle")),
            GspKind::Tree if !is_tree || i != s.root => bad.push(format!("node {i} is not a root tree")),
            _ => {}
        }
    }
    let mut equal: HashSet<CopyId> = HashSet::new();
    for node in &s.nodes {
        equal.extend(node.edges.iter().copied());
        equal.extend(node.exit);
    }
    for c in g.copies() {
        let e = g.edge(c.edge);
        let lhs = s.d[e.u] + s.d[e.v] + g.weight(c);
        let rhs = s.cover_sum(g, c);
        if lhs < rhs {
            bad.push(format!("copy {c:?}: {lhs} < {rhs}"));
        } else if equal.contains(&c) && lhs != rhs {
            bad.push(format!("tree copy {c:?} is not tight: {lhs} > {rhs}"));
        }
    }
    for x in (0..n).filter(|&x| x != s.t) {
        if 2 * s.d[x] != s.loop_cover(x) {
            bad.push(format!("loop at {x} is not tight"));
        }
    }
    for v in 0..n {
        match expand_path(s, g, v) {
            Ok(p) => {
                let mut x = v;
                let mut seen = vec![false; n];
                seen[v] = true;
                let mut simple = true;
                for c in &p {
                    x = g.edge(c.edge).other(x);
                    simple &= !std::mem::replace(&mut seen[x], true);
                }
                let w: i64 = p.iter().map(|&c| g.weight(c)).sum();
                if !simple || x != s.t || w != s.d[v] {
                    bad.push(format!("p({v}) is not a simple path to t of weight d({v})"));
                }
            }
            Err(e) => bad.push(format!("p({v}): {e}")),
        }
    }
    GspReport { violations: bad }
}
