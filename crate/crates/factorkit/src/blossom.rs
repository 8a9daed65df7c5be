//! General weighted f-factors: ζ tables, the weighted blossom forest built by
//! a descending sweep over G(ζ), I-sets, and top-down extraction of maximum
//! perturbations from the forest.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::config::{with_retries, SolveConfig};
use crate::error::{Error, Result};
use crate::graph::{induced, CopyId, DegreeConstraint, Direction, EdgeSubset, Multigraph, Vertex};
use crate::perturb::{perturbation_weights, PerturbationWeights};
use crate::solve::find_factor;

/// ζ values of every vertex and every edge copy.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeZetas {
    /// `ζ_v = w(F_v) + w(F^v)`.
    pub vertex: Vec<i64>,
    /// `ζ_{uv} = w(F_u) + w(F_v) + w(uv)` per edge, per copy.
    pub lower: Vec<Vec<i64>>,
    /// `ζ^{uv} = w(F^u) + w(F^v) − w(uv)` per edge, per copy.
    pub upper: Vec<Vec<i64>>,
}

impl EdgeZetas {
    /// `min(ζ_{uv}, ζ^{uv})`: the highest level at which the copy is in G(ζ).
    pub fn level(&self, c: CopyId) -> i64 {
        self.lower[c.edge][c.copy].min(self.upper[c.edge][c.copy])
    }

    pub fn of(&self, c: CopyId) -> (i64, i64) {
        (self.lower[c.edge][c.copy], self.upper[c.edge][c.copy])
    }
}

/// Tables of ζ values, with the identity `ζ_{uv} + ζ^{uv} = ζ_u + ζ_v`
/// checked on every copy.
pub fn edge_zetas(g: &Multigraph, pw: &PerturbationWeights) -> Result<EdgeZetas> {
    if pw.lower.len() != g.n() || pw.upper.len() != g.n() {
        return Err(Error::input("perturbation tables do not match the vertex count"));
    }
    let vertex: Vec<i64> = (0..g.n()).map(|v| pw.lower[v] + pw.upper[v]).collect();
    let mut lower = Vec::with_capacity(g.m());
    let mut upper = Vec::with_capacity(g.m());
    for e in g.edges() {
        let lo: Vec<i64> = e.weights.iter().map(|w| pw.lower[e.u] + pw.lower[e.v] + w).collect();
        let up: Vec<i64> = e.weights.iter().map(|w| pw.upper[e.u] + pw.upper[e.v] - w).collect();
        for k in 0..e.mult() {
            if lo[k] + up[k] != vertex[e.u] + vertex[e.v] {
                return Err(Error::inconsistent("ζ identity violated: corrupted perturbation weights"));
            }
        }
        lower.push(lo);
        upper.push(up);
    }
    Ok(EdgeZetas { vertex, lower, upper })
}

/// A child of a blossom: an original vertex or a smaller blossom.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Node {
    Vertex(Vertex),
    Blossom(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Blossom {
    /// `V(B)`, sorted.
    pub vertices: Vec<Vertex>,
    pub children: Vec<Node>,
    pub parent: Option<usize>,
    /// `z̄(B)`, the ζ level at which the blossom was found.
    pub zbar: i64,
    /// `z(B) = z̄(B) − z̄(parent)`; maximal blossoms use `z(V)` as parent value.
    pub z: i64,
    /// `I(B) ⊆ δ(V(B))`.
    pub i_set: BTreeSet<CopyId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightedBlossomForest {
    /// Blossoms in creation order; children precede parents.
    pub blossoms: Vec<Blossom>,
    /// `B_v`, the smallest blossom containing `v`.
    pub smallest: Vec<Option<usize>>,
    /// `z(V)`: the lowest ζ level, shared by every maximal blossom as its
    /// parent value.
    pub root_zbar: i64,
    /// Edges of the tree 𝒯 joining the maximal blossoms.
    pub tree_edges: Vec<CopyId>,
    /// Vertex duals `y(v) = −w(F_v)`.
    pub y: Vec<i64>,
}

impl WeightedBlossomForest {
    pub fn maximal(&self) -> Vec<usize> {
        (0..self.blossoms.len()).filter(|&b| self.blossoms[b].parent.is_none()).collect()
    }

    fn contains(&self, b: usize, v: Vertex) -> bool {
        self.blossoms[b].vertices.binary_search(&v).is_ok()
    }

    fn depth(&self, mut b: usize) -> usize {
        let mut d = 0;
        while let Some(p) = self.blossoms[b].parent {
            b = p;
            d += 1;
        }
        d
    }

    /// Nearest common ancestor of two blossoms, `None` for the pseudo-root.
    fn nca(&self, a: Option<usize>, b: Option<usize>) -> Option<usize> {
        let (mut a, mut b) = (a?, b?);
        let (mut da, mut db) = (self.depth(a), self.depth(b));
        while da > db {
            a = self.blossoms[a].parent?;
            da -= 1;
        }
        while db > da {
            b = self.blossoms[b].parent?;
            db -= 1;
        }
        while a != b {
            a = self.blossoms[a].parent?;
            b = self.blossoms[b].parent?;
        }
        Some(a)
    }

    fn zbar(&self, b: Option<usize>) -> i64 {
        b.map_or(self.root_zbar, |b| self.blossoms[b].zbar)
    }

    /// `f(V(B))` for every blossom.
    fn mass(&self, f: &DegreeConstraint) -> Vec<usize> {
        self.blossoms.iter().map(|b| b.vertices.iter().map(|&v| f.get(v)).sum()).collect()
    }
}

fn crosses(g: &Multigraph, c: CopyId, inside: &dyn Fn(Vertex) -> bool) -> bool {
    let e = g.edge(c.edge);
    inside(e.u) != inside(e.v)
}

struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu { parent: (0..n).collect() }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut x = x;
        while self.parent[x] != r {
            let next = self.parent[x];
            self.parent[x] = r;
            x = next;
        }
        r
    }

    /// False when `a` and `b` were already joined.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

/// Bridges of a multigraph given as an edge list on `k` nodes; parallel edges
/// are never bridges.
fn bridges(k: usize, edges: &[(usize, usize)]) -> Vec<bool> {
    let mut adj = vec![Vec::new(); k];
    for (i, &(a, b)) in edges.iter().enumerate() {
        adj[a].push((b, i));
        adj[b].push((a, i));
    }
    let mut is_bridge = vec![false; edges.len()];
    let mut tin = vec![usize::MAX; k];
    let mut low = vec![0; k];
    let mut timer = 0;
    for root in 0..k {
        if tin[root] != usize::MAX {
            continue;
        }
        // (node, edge used to enter, next adjacency index)
        let mut stack = vec![(root, usize::MAX, 0usize)];
        tin[root] = timer;
        low[root] = timer;
        timer += 1;
        while let Some(&mut (x, via, ref mut next)) = stack.last_mut() {
            if *next < adj[x].len() {
                let (y, id) = adj[x][*next];
                *next += 1;
                if id == via {
                    continue;
                }
                if tin[y] == usize::MAX {
                    tin[y] = timer;
                    low[y] = timer;
                    timer += 1;
                    stack.push((y, id, 0));
                } else {
                    low[x] = low[x].min(tin[y]);
                }
            } else {
                stack.pop();
                if let Some(&(p, _, _)) = stack.last() {
                    low[p] = low[p].min(low[x]);
                    if low[x] > tin[p] {
                        is_bridge[via] = true;
                    }
                }
            }
        }
    }
    is_bridge
}

/// Current class of every vertex: its largest blossom or itself.
struct Classes {
    dsu: Dsu,
    /// Node represented by each DSU root.
    node: Vec<Node>,
}

impl Classes {
    fn new(n: usize) -> Self {
        Classes { dsu: Dsu::new(n), node: (0..n).map(Node::Vertex).collect() }
    }

    fn of(&mut self, v: Vertex) -> (usize, Node) {
        let r = self.dsu.find(v);
        (r, self.node[r])
    }
}

/// Descending distinct values of `min(ζ_{uv}, ζ^{uv})`.
fn omega(g: &Multigraph, zt: &EdgeZetas) -> Vec<i64> {
    let mut vals: Vec<i64> = g.copies().map(|c| zt.level(c)).collect();
    vals.sort_unstable_by(|a, b| b.cmp(a));
    vals.dedup();
    vals
}

/// The V(B)-sets, `z`, and the tree 𝒯, found by sweeping ζ over Ω in
/// descending order. At each level the 2-edge-connected components of G(ζ)
/// (with earlier blossoms contracted) become blossoms with `z̄ = ζ`; a lone
/// uncontracted vertex with a loop in G(ζ) is a blossom by itself. Every
/// G(ζ⁻) is checked to be a forest. I-sets are left empty.
pub fn find_vb_sets(g: &Multigraph, zt: &EdgeZetas, pw: &PerturbationWeights) -> Result<WeightedBlossomForest> {
    find_vb_sets_with_sink(g, zt, pw, None)
}

/// [`find_vb_sets`] where the vertex `sink` may stay outside every blossom,
/// as the sink of a shortest-path instance does.
pub fn find_vb_sets_with_sink(
    g: &Multigraph,
    zt: &EdgeZetas,
    pw: &PerturbationWeights,
    sink: Option<Vertex>,
) -> Result<WeightedBlossomForest> {
    let n = g.n();
    let levels = omega(g, zt);
    let Some(&lowest) = levels.last() else {
        return Err(Error::inconsistent("a critical graph has at least one edge"));
    };
    let mut order: Vec<CopyId> = g.copies().collect();
    order.sort_by_key(|&c| std::cmp::Reverse(zt.level(c)));
    let mut cls = Classes::new(n);
    let mut blossoms: Vec<Blossom> = Vec::new();
    let mut next = 0;
    let mut active: Vec<CopyId> = Vec::new();
    for &zeta in &levels {
        while next < order.len() && zt.level(order[next]) >= zeta {
            active.push(order[next]);
            next += 1;
        }
        // Contracted G(ζ).
        let mut ids: HashMap<usize, usize> = HashMap::new();
        let mut roots: Vec<usize> = Vec::new();
        let mut edges: Vec<(usize, usize)> = Vec::new();
        let mut looped: BTreeSet<usize> = BTreeSet::new();
        let mut id_of = |r: usize, roots: &mut Vec<usize>| {
            *ids.entry(r).or_insert_with(|| {
                roots.push(r);
                roots.len() - 1
            })
        };
        for &c in &active {
            let e = g.edge(c.edge);
            let (ru, nu) = cls.of(e.u);
            let (rv, _) = cls.of(e.v);
            if ru != rv {
                let a = id_of(ru, &mut roots);
                let b = id_of(rv, &mut roots);
                edges.push((a, b));
            } else if e.is_loop() && matches!(nu, Node::Vertex(_)) {
                let a = id_of(ru, &mut roots);
                looped.insert(a);
            }
        }
        let br = bridges(roots.len(), &edges);
        let mut comp = Dsu::new(roots.len());
        for (i, &(a, b)) in edges.iter().enumerate() {
            if !br[i] {
                comp.union(a, b);
            }
        }
        let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
        for a in 0..roots.len() {
            groups.entry(comp.find(a)).or_default().push(a);
        }
        let mut groups: Vec<Vec<usize>> = groups.into_values().collect();
        groups.sort();
        for grp in groups {
            if grp.len() == 1 && !looped.contains(&grp[0]) {
                continue;
            }
            let id = blossoms.len();
            let mut children = Vec::with_capacity(grp.len());
            let mut vertices = Vec::new();
            for &a in &grp {
                let child = cls.node[roots[a]];
                match child {
                    Node::Vertex(v) => vertices.push(v),
                    Node::Blossom(b) => {
                        blossoms[b].parent = Some(id);
                        vertices.extend_from_slice(&blossoms[b].vertices);
                    }
                }
                children.push(child);
            }
            vertices.sort_unstable();
            for w in grp.windows(2) {
                cls.dsu.union(roots[w[0]], roots[w[1]]);
            }
            let r = cls.dsu.find(roots[grp[0]]);
            cls.node[r] = Node::Blossom(id);
            blossoms.push(Blossom { vertices, children, parent: None, zbar: zeta, z: 0, i_set: BTreeSet::new() });
        }
        // G(ζ⁻) must be a forest.
        let mut forest = Dsu::new(n);
        for &c in &active {
            let e = g.edge(c.edge);
            let (ru, _) = cls.of(e.u);
            let (rv, _) = cls.of(e.v);
            if ru != rv && !forest.union(ru, rv) {
                return Err(Error::inconsistent(format!("G(ζ⁻) at level {zeta} contains a cycle")));
            }
        }
    }
    // When one blossom spans V it is V itself and carries z(V).
    let root_zbar = match blossoms.last() {
        Some(b) if b.vertices.len() == n => b.zbar,
        _ => lowest,
    };
    for id in 0..blossoms.len() {
        let parent = blossoms[id].parent.map_or(root_zbar, |p| blossoms[p].zbar);
        blossoms[id].z = blossoms[id].zbar - parent;
    }
    let mut smallest = vec![None; n];
    for (id, b) in blossoms.iter().enumerate() {
        for &v in &b.vertices {
            smallest[v].get_or_insert(id);
        }
    }
    let mut tree_edges = Vec::new();
    let mut span = Dsu::new(n);
    for c in g.copies() {
        let e = g.edge(c.edge);
        let (ru, _) = cls.of(e.u);
        let (rv, _) = cls.of(e.v);
        if ru != rv {
            tree_edges.push(c);
            span.union(ru, rv);
        }
    }
    let forest = WeightedBlossomForest {
        blossoms,
        smallest,
        root_zbar,
        tree_edges,
        y: pw.lower.iter().map(|w| -w).collect(),
    };
    for v in (0..n).filter(|&v| Some(v) != sink) {
        if forest.zbar(forest.smallest[v]) != zt.vertex[v] || forest.smallest[v].is_none() {
            return Err(Error::inconsistent(format!("ζ_v differs from z̄(B_v) at vertex {v}")));
        }
    }
    let r0 = span.find(cls.of(0).0);
    if (0..n).any(|v| {
        let r = cls.of(v).0;
        span.find(r) != r0
    }) {
        return Err(Error::inconsistent("𝒯 does not span the maximal blossoms"));
    }
    Ok(forest)
}

/// Fill in the I-sets. At each level ζ every new blossom collects `I_0(y)`
/// for its vertex children and the inherited edges of its blossom children;
/// the remaining edges of G(ζ⁻) are assigned by peeling leaves with the
/// parity rule: `xy ∈ I(B)` iff `f(V(B)) − 1 + |I(B) − xy|` is odd.
pub fn find_ib_sets(
    g: &Multigraph,
    f: &DegreeConstraint,
    zt: &EdgeZetas,
    forest: &mut WeightedBlossomForest,
) -> Result<()> {
    find_ib_sets_with_sink(g, f, zt, forest, None)
}

/// [`find_ib_sets`] where the blossom-free `sink` contributes no I-set: an
/// edge of G(ζ⁻) peeled at the sink belongs to the I-set of its other end.
pub fn find_ib_sets_with_sink(
    g: &Multigraph,
    f: &DegreeConstraint,
    zt: &EdgeZetas,
    forest: &mut WeightedBlossomForest,
    sink: Option<Vertex>,
) -> Result<()> {
    let n = g.n();
    let levels = omega(g, zt);
    let inc = g.incidence();
    let mass = forest.mass(f);
    for b in &mut forest.blossoms {
        b.i_set.clear();
    }
    for &zeta in &levels {
        let fresh: Vec<usize> = (0..forest.blossoms.len()).filter(|&b| forest.blossoms[b].zbar == zeta).collect();
        for &b in &fresh {
            let inside = |v: Vertex| forest.contains(b, v);
            let mut set = BTreeSet::new();
            for &child in &forest.blossoms[b].children {
                match child {
                    Node::Blossom(a) => {
                        set.extend(forest.blossoms[a].i_set.iter().copied().filter(|&c| crosses(g, c, &inside)));
                    }
                    Node::Vertex(y) => {
                        if zt.vertex[y] != zeta {
                            return Err(Error::inconsistent(format!("vertex {y} has ζ_y ≠ z̄ of its blossom")));
                        }
                        for &eid in &inc[y] {
                            let e = g.edge(eid);
                            let x = e.other(y);
                            if inside(x) {
                                continue;
                            }
                            for k in 0..e.mult() {
                                let c = CopyId { edge: eid, copy: k };
                                let (lo, up) = zt.of(c);
                                if zt.vertex[y] > up || (zt.vertex[y] == lo && lo != zt.vertex[x]) {
                                    set.insert(c);
                                }
                            }
                        }
                    }
                }
            }
            forest.blossoms[b].i_set = set;
        }
        // Classes of G(ζ⁻): the largest blossom with z̄ ≥ ζ containing v.
        let mut top: Vec<Option<usize>> = vec![None; n];
        for v in 0..n {
            let mut cur = forest.smallest[v];
            let mut best = None;
            while let Some(b) = cur {
                if forest.blossoms[b].zbar >= zeta {
                    best = Some(b);
                }
                cur = forest.blossoms[b].parent;
            }
            top[v] = best;
        }
        let key = |v: Vertex| top[v].map_or(Node::Vertex(v), Node::Blossom);
        let mut adj: HashMap<Node, Vec<CopyId>> = HashMap::new();
        for c in g.copies() {
            if zt.level(c) < zeta {
                continue;
            }
            let e = g.edge(c.edge);
            let (a, b) = (key(e.u), key(e.v));
            if a != b {
                adj.entry(a).or_default().push(c);
                adj.entry(b).or_default().push(c);
            }
        }
        let mut leaves: Vec<Node> = adj.iter().filter(|(_, l)| l.len() == 1).map(|(k, _)| *k).collect();
        leaves.sort_by_key(|k| match k {
            Node::Vertex(v) => (0, *v),
            Node::Blossom(b) => (1, *b),
        });
        while let Some(leaf) = leaves.pop() {
            let Some(list) = adj.get(&leaf) else { continue };
            if list.len() != 1 {
                continue;
            }
            let c = list[0];
            let e = g.edge(c.edge);
            let other = if key(e.u) == leaf { key(e.v) } else { key(e.u) };
            let in_b = match leaf {
                Node::Vertex(v) if Some(v) == sink => false,
                Node::Vertex(_) => return Err(Error::inconsistent("an unblossomed vertex is incident to G(ζ⁻)")),
                Node::Blossom(b) => peel(forest, b, c, zeta, &mass),
            };
            if let Node::Blossom(x) = other {
                if forest.blossoms[x].zbar == zeta {
                    if in_b {
                        if forest.blossoms[x].i_set.contains(&c) {
                            return Err(Error::inconsistent("edge of G(ζ⁻) claimed by both ends"));
                        }
                    } else {
                        forest.blossoms[x].i_set.insert(c);
                    }
                } else if forest.blossoms[x].i_set.contains(&c) == in_b {
                    return Err(Error::inconsistent("edge of G(ζ⁻) violates I(A) ⊕ I(B)"));
                }
            }
            adj.remove(&leaf);
            if let Some(l) = adj.get_mut(&other) {
                l.retain(|&d| d != c);
                if l.len() == 1 {
                    leaves.push(other);
                }
            }
        }
    }
    for (id, b) in forest.blossoms.iter().enumerate() {
        if (mass[id] - 1 + b.i_set.len()) % 2 != 0 {
            return Err(Error::inconsistent(format!("respect parity fails for blossom {id}")));
        }
    }
    Ok(())
}

/// Decide a peeled edge `c` of G(ζ⁻) at blossom `b`: by the parity rule if
/// `b` is new at this level, else by its recorded I-set.
fn peel(forest: &mut WeightedBlossomForest, b: usize, c: CopyId, zeta: i64, mass: &[usize]) -> bool {
    let bl = &mut forest.blossoms[b];
    if bl.zbar != zeta {
        return bl.i_set.contains(&c);
    }
    let rest = bl.i_set.iter().filter(|&&d| d != c).count();
    let decide = (mass[b] - 1 + rest) % 2 == 1;
    if decide {
        bl.i_set.insert(c);
    } else {
        bl.i_set.remove(&c);
    }
    decide
}

/// The dual cover `ŷz(e)` of an edge copy: vertex duals plus the `z` of every
/// blossom containing both ends or having `e` in its I-set.
pub fn hat_yz(g: &Multigraph, c: CopyId, forest: &WeightedBlossomForest) -> i64 {
    let e = g.edge(c.edge);
    let (bu, bv) = (forest.smallest[e.u], forest.smallest[e.v]);
    let nca = forest.nca(bu, bv);
    let in_u = bu.is_some_and(|b| forest.blossoms[b].i_set.contains(&c));
    let in_v = bv.is_some_and(|b| forest.blossoms[b].i_set.contains(&c));
    let y = forest.y[e.u] + forest.y[e.v];
    y + match (in_u, in_v) {
        (false, false) => forest.zbar(nca),
        (true, false) => forest.zbar(bu),
        (false, true) => forest.zbar(bv),
        (true, true) => forest.zbar(bu) + forest.zbar(bv) - forest.zbar(nca),
    }
}

/// Endpoint of an edge inside the graph H of a blossom: the child it enters.
fn child_of(forest: &WeightedBlossomForest, b: Option<usize>, v: Vertex) -> Node {
    let mut cur = forest.smallest[v];
    let mut last = Node::Vertex(v);
    while let Some(x) = cur {
        if Some(x) == b {
            return last;
        }
        last = Node::Blossom(x);
        cur = forest.blossoms[x].parent;
    }
    last
}

/// A maximum `f_v` (`Lower`) or `f^v` (`Upper`) factor of a critical graph,
/// assembled from the forest in three steps: 𝒯 edges by parity of the
/// perturbed constraint on each side, strictly underrated edges, then the
/// blossoms top-down, each by an unweighted factor of its contracted graph
/// with every blossom child replaced by a substitute gadget.
pub fn extract_perturbation(
    g: &Multigraph,
    f: &DegreeConstraint,
    forest: &WeightedBlossomForest,
    v: Vertex,
    dir: Direction,
    cfg: &SolveConfig,
) -> Result<EdgeSubset> {
    let n = g.n();
    let fv = f.perturb(v, dir)?;
    let mut decided: Vec<Vec<Option<bool>>> = g.edges().iter().map(|e| vec![None; e.mult()]).collect();

    // 𝒯 edges.
    let maximal = forest.maximal();
    // Units of 𝒯: maximal blossoms, then vertices outside every blossom.
    let mut units: Vec<Vec<Vertex>> = maximal.iter().map(|&b| forest.blossoms[b].vertices.clone()).collect();
    units.extend((0..n).filter(|&x| forest.smallest[x].is_none()).map(|x| vec![x]));
    let mut top_of = vec![usize::MAX; n];
    for (i, unit) in units.iter().enumerate() {
        for &x in unit {
            top_of[x] = i;
        }
    }
    let tree_pairs: Vec<(usize, usize)> = forest
        .tree_edges
        .iter()
        .map(|c| {
            let e = g.edge(c.edge);
            (top_of[e.u], top_of[e.v])
        })
        .collect();
    let top_mass: Vec<usize> = units.iter().map(|u| u.iter().map(|&x| fv.get(x)).sum()).collect();
    for (i, &c) in forest.tree_edges.iter().enumerate() {
        let mut seen = vec![false; units.len()];
        let mut stack = vec![tree_pairs[i].0];
        seen[tree_pairs[i].0] = true;
        while let Some(a) = stack.pop() {
            for (j, &(p, q)) in tree_pairs.iter().enumerate() {
                if j == i {
                    continue;
                }
                for (s, t) in [(p, q), (q, p)] {
                    if s == a && !seen[t] {
                        seen[t] = true;
                        stack.push(t);
                    }
                }
            }
        }
        let side: usize = (0..units.len()).filter(|&a| seen[a]).map(|a| top_mass[a]).sum();
        decided[c.edge][c.copy] = Some(side % 2 == 1);
    }

    // Strictly underrated and strictly dominated edges.
    for c in g.copies() {
        if decided[c.edge][c.copy].is_some() {
            continue;
        }
        let cover = hat_yz(g, c, forest);
        let w = g.weight(c);
        if w != cover {
            decided[c.edge][c.copy] = Some(w > cover);
        }
    }

    // Blossoms, top-down.
    let mut queue: Vec<usize> = maximal.clone();
    while let Some(b) = queue.pop() {
        solve_blossom(g, &fv, forest, b, v, &mut decided, cfg)?;
        for &child in &forest.blossoms[b].children {
            if let Node::Blossom(a) = child {
                queue.push(a);
            }
        }
    }

    let mut out = EdgeSubset::new();
    for c in g.copies() {
        match decided[c.edge][c.copy] {
            Some(true) => {
                out.insert(c);
            }
            Some(false) => {}
            None => return Err(Error::inconsistent("an edge copy was never decided")),
        }
    }
    if !out.is_factor(g, &fv) {
        return Err(Error::unlucky("assembled perturbation violates the degree constraint"));
    }
    Ok(out)
}

fn solve_blossom(
    g: &Multigraph,
    fv: &DegreeConstraint,
    forest: &WeightedBlossomForest,
    b: usize,
    v: Vertex,
    decided: &mut [Vec<Option<bool>>],
    cfg: &SolveConfig,
) -> Result<()> {
    let blossom = &forest.blossoms[b];
    let inside = |x: Vertex| forest.contains(b, x);
    let mut h = Multigraph::new(0);
    let mut hf: Vec<usize> = Vec::new();
    let add = |h: &mut Multigraph, hf: &mut Vec<usize>, want: usize| {
        hf.push(want);
        h.add_vertex()
    };
    // Degree used so far by decided edges.
    let mut used: HashMap<Vertex, usize> = HashMap::new();
    for c in g.copies() {
        if decided[c.edge][c.copy] == Some(true) {
            let e = g.edge(c.edge);
            *used.entry(e.u).or_default() += 1;
            *used.entry(e.v).or_default() += 1;
        }
    }
    struct Gadget {
        a: Vertex,
        b: Vertex,
    }
    let mut rep_vertex: HashMap<Vertex, Vertex> = HashMap::new();
    let mut gadgets: HashMap<usize, Gadget> = HashMap::new();
    for &child in &blossom.children {
        match child {
            Node::Vertex(x) => {
                let have = used.get(&x).copied().unwrap_or(0);
                let want = fv
                    .get(x)
                    .checked_sub(have)
                    .ok_or_else(|| Error::inconsistent(format!("vertex {x} over-saturated by forced edges")))?;
                let id = add(&mut h, &mut hf, want);
                rep_vertex.insert(x, id);
            }
            Node::Blossom(a) => {
                let ab = &forest.blossoms[a];
                let in_a = |x: Vertex| forest.contains(a, x);
                let mut mismatch = 0;
                for c in g.copies() {
                    if !crosses(g, c, &in_a) {
                        continue;
                    }
                    if let Some(sel) = decided[c.edge][c.copy] {
                        if sel != ab.i_set.contains(&c) {
                            mismatch += 1;
                        }
                    }
                }
                let fb = match (in_a(v), mismatch) {
                    (true, 0) | (false, 1) => 0,
                    (false, 0) => 1,
                    _ => return Err(Error::inconsistent(format!("forced edges break respect of blossom {a}"))),
                };
                let ga = add(&mut h, &mut hf, 1);
                let gb = add(&mut h, &mut hf, fb);
                let gc = add(&mut h, &mut hf, 1);
                h.add_plain(ga, gc, 1)?;
                h.add_plain(gb, gc, 1)?;
                gadgets.insert(a, Gadget { a: ga, b: gb });
            }
        }
    }
    // Undecided copies of γ(B) between distinct children, or loops at a
    // vertex child.
    let mut origin: Vec<(usize, CopyId)> = Vec::new();
    let endpoint = |h: &mut Multigraph, hf: &mut Vec<usize>, x: Vertex, c: CopyId| -> Result<Vertex> {
        match child_of(forest, Some(b), x) {
            Node::Vertex(x) => Ok(rep_vertex[&x]),
            Node::Blossom(a) => {
                let gd = &gadgets[&a];
                if forest.blossoms[a].i_set.contains(&c) {
                    let ak = add(h, hf, 1);
                    h.add_plain(gd.a, ak, 1)?;
                    Ok(ak)
                } else {
                    Ok(gd.b)
                }
            }
        }
    };
    for c in g.copies() {
        if decided[c.edge][c.copy].is_some() {
            continue;
        }
        let e = g.edge(c.edge);
        if !inside(e.u) || !inside(e.v) {
            continue;
        }
        let (cu, cv) = (child_of(forest, Some(b), e.u), child_of(forest, Some(b), e.v));
        if cu == cv && matches!(cu, Node::Blossom(_)) {
            continue;
        }
        let p = endpoint(&mut h, &mut hf, e.u, c)?;
        let q = if e.is_loop() { p } else { endpoint(&mut h, &mut hf, e.v, c)? };
        let id = h.add_plain(p, q, 1)?;
        origin.push((id, c));
    }
    let hf = DegreeConstraint::new(hf);
    let res = find_factor(&h, &hf, cfg)?;
    let Some(sel) = res.factor else {
        return Err(Error::unlucky(format!("no factor in the contracted graph of blossom {b}")));
    };
    for &(id, c) in &origin {
        let chosen = sel.contains(&CopyId { edge: id, copy: 0 });
        decided[c.edge][c.copy] = Some(chosen);
    }
    Ok(())
}

/// Complementary slackness for a claimed maximum perturbation `factor` at
/// `v`: factor copies are underrated, other copies dominated, every blossom
/// is respected and every non-maximal `z` is positive.
pub fn certify_general(
    g: &Multigraph,
    forest: &WeightedBlossomForest,
    factor: &EdgeSubset,
    v: Vertex,
) -> bool {
    for c in g.copies() {
        let cover = hat_yz(g, c, forest);
        let w = g.weight(c);
        if factor.contains(&c) && w < cover || !factor.contains(&c) && w > cover {
            return false;
        }
    }
    for (id, b) in forest.blossoms.iter().enumerate() {
        if b.parent.is_some() && b.z <= 0 || b.parent.is_none() && b.z < 0 {
            return false;
        }
        let inside = |x: Vertex| forest.contains(id, x);
        let meet: BTreeSet<CopyId> = factor.iter().copied().filter(|&c| crosses(g, c, &inside)).collect();
        let diff = meet.symmetric_difference(&b.i_set).count();
        if diff != usize::from(!inside(v)) {
            return false;
        }
    }
    true
}

/// Laminarity of the V-sets: any two are nested or disjoint.
pub fn is_laminar(forest: &WeightedBlossomForest) -> bool {
    let bl = &forest.blossoms;
    for i in 0..bl.len() {
        for j in i + 1..bl.len() {
            let a: BTreeSet<_> = bl[i].vertices.iter().collect();
            let b: BTreeSet<_> = bl[j].vertices.iter().collect();
            let common = a.intersection(&b).count();
            if common != 0 && common != a.len() && common != b.len() {
                return false;
            }
        }
    }
    true
}

/// The graph used to find maximum weight f-factors: a new vertex `s` with
/// `f(s) = 1`, a weight-0 edge `sv` to every vertex and a weight-0 loop
/// `ss`. Its maximum `f_s`-factors are the maximum f-factors of `g`, and it
/// is critical whenever `g` has an f-factor.
pub fn weighted_closure(g: &Multigraph, f: &DegreeConstraint) -> (Multigraph, DegreeConstraint, Vertex) {
    let mut h = g.clone();
    let s = h.add_vertex();
    for v in 0..g.n() {
        h.add_plain(s, v, 1).expect("valid endpoints");
    }
    h.add_plain(s, s, 1).expect("valid endpoints");
    let mut fc = f.clone();
    fc.push(1);
    (h, fc, s)
}

/// Forest and tables for a critical graph, for one seed.
pub fn build_forest(
    g: &Multigraph,
    f: &DegreeConstraint,
    pw: &PerturbationWeights,
) -> Result<(EdgeZetas, WeightedBlossomForest)> {
    build_forest_with_sink(g, f, pw, None)
}

/// [`build_forest`] with a sink vertex allowed outside every blossom.
pub fn build_forest_with_sink(
    g: &Multigraph,
    f: &DegreeConstraint,
    pw: &PerturbationWeights,
    sink: Option<Vertex>,
) -> Result<(EdgeZetas, WeightedBlossomForest)> {
    let zt = edge_zetas(g, pw)?;
    let mut forest = find_vb_sets_with_sink(g, &zt, pw, sink)?;
    find_ib_sets_with_sink(g, f, &zt, &mut forest, sink)?;
    Ok((zt, forest))
}

/// A maximum perturbation of a critical graph, with its forest, certified.
pub fn max_perturbation(
    g: &Multigraph,
    f: &DegreeConstraint,
    v: Vertex,
    dir: Direction,
    cfg: &SolveConfig,
) -> Result<(EdgeSubset, WeightedBlossomForest, PerturbationWeights)> {
    let (out, _) = with_retries(cfg, |seed| {
        let sub = SolveConfig { seed, ..*cfg };
        let pw = perturbation_weights(g, f, &sub)?;
        let (_, forest) = build_forest(g, f, &pw)?;
        let factor = extract_perturbation(g, f, &forest, v, dir, &sub.child(1))?;
        let target = match dir {
            Direction::Lower => pw.lower[v],
            Direction::Upper => pw.upper[v],
        };
        if factor.weight(g) != target {
            return Err(Error::unlucky("extracted perturbation weight differs from its predicted weight"));
        }
        if !certify_general(g, &forest, &factor, v) {
            return Err(Error::inconsistent("dual certificate failed"));
        }
        Ok((factor, forest, pw))
    })?;
    Ok(out)
}

/// Re-check a reported maximum f-factor against its instance: it must be
/// an f-factor and, lifted to the closure, satisfy the dual certificate of
/// `forest`.
pub fn certify_weighted_factor(
    g: &Multigraph,
    f: &DegreeConstraint,
    factor: &EdgeSubset,
    forest: &WeightedBlossomForest,
) -> bool {
    if f.len() != g.n() || factor.validate(g).is_err() || !factor.is_factor(g, f) {
        return false;
    }
    let keep: Vec<bool> = (0..g.n()).map(|v| f.get(v) > 0).collect();
    let (h, _, origin) = induced(g, &keep);
    let kept: Vec<Vertex> = (0..g.n()).filter(|&v| keep[v]).collect();
    let hf = DegreeConstraint::new(kept.iter().map(|&v| f.get(v)).collect());
    let (c, _, s) = weighted_closure(&h, &hf);
    if forest.y.len() != c.n() {
        return false;
    }
    let mut back = vec![usize::MAX; g.m()];
    for (i, &o) in origin.iter().enumerate() {
        back[o] = i;
    }
    let mut lifted = EdgeSubset::new();
    for x in factor.iter() {
        if back[x.edge] == usize::MAX {
            return false;
        }
        lifted.insert(CopyId { edge: back[x.edge], copy: x.copy });
    }
    certify_general(&c, forest, &lifted, s)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneralWeightedFactor {
    pub factor: EdgeSubset,
    pub weight: i64,
    /// Forest of the closure; the closure vertex `s` is `closure_vertex`.
    pub forest: WeightedBlossomForest,
    /// Vertices with `f > 0`, in closure order; closure vertex `i` is
    /// `kept[i]` of the input for `i < kept.len()`.
    pub kept: Vec<Vertex>,
    pub closure_vertex: Vertex,
}

/// Maximum weight f-factor of a general multigraph, certified by blossom
/// duals. Vertices with `f = 0` are removed first.
pub fn max_weight_general(g: &Multigraph, f: &DegreeConstraint, cfg: &SolveConfig) -> Result<GeneralWeightedFactor> {
    if f.len() != g.n() {
        return Err(Error::input("degree constraint length differs from vertex count"));
    }
    let keep: Vec<bool> = (0..g.n()).map(|v| f.get(v) > 0).collect();
    let (h, index, origin) = induced(g, &keep);
    let kept: Vec<Vertex> = (0..g.n()).filter(|&v| keep[v]).collect();
    let hf = DegreeConstraint::new(kept.iter().map(|&v| f.get(v)).collect());
    if hf.phi() % 2 == 1 {
        return Err(Error::infeasible("f(V) is odd"));
    }
    let _ = index;
    let (c, cf, s) = weighted_closure(&h, &hf);
    let (factor, forest, _) = match max_perturbation(&c, &cf, s, Direction::Lower, cfg) {
        Err(Error::Infeasible(_)) => return Err(Error::infeasible("the graph has no f-factor")),
        other => other?,
    };
    let lifted: EdgeSubset = factor
        .iter()
        .filter(|c| c.edge < h.m())
        .map(|c| CopyId { edge: origin[c.edge], copy: c.copy })
        .collect();
    if lifted.len() != factor.len() {
        return Err(Error::inconsistent("maximum f_s-factor uses a closure edge"));
    }
    Ok(GeneralWeightedFactor { weight: lifted.weight(g), factor: lifted, forest, kept, closure_vertex: s })
}
