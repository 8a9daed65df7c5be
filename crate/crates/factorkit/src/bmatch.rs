//! Maximum weight perfect b-matching: the blossom tree of a b-critical
//! graph from the weights `w(F_v)`, recursive extraction, and a dual check.

use serde::{Deserialize, Serialize};

use crate::blossom::Node;
use crate::config::{with_retries, SolveConfig};
use crate::error::{Error, Result};
use crate::graph::{induced, CopyId, DegreeConstraint, EdgeSubset, Multigraph, Vertex};
use crate::perturb::lower_weights_once;
use crate::solve::find_factor;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BBlossom {
    pub vertices: Vec<Vertex>,
    pub children: Vec<Node>,
    pub parent: Option<usize>,
    /// `ζ(B)`: the value of `ζ*` when the blossom was contracted.
    pub zeta: i64,
    /// `z(B) = ζ(B) − ζ(p(B))`, and `ζ(B)` at the root.
    pub z: i64,
    /// `E*(B)`: the copies of value `ζ(B)` joining children of `B`.
    pub edges: Vec<CopyId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BMatchBlossomTree {
    pub blossoms: Vec<BBlossom>,
    /// Parent blossom of every vertex leaf.
    pub leaf_parent: Vec<usize>,
    pub root: usize,
    /// `y(v) = −w(F_v)`.
    pub y: Vec<i64>,
    /// `ζ(uv) = w(F_u) + w(F_v) + w(uv)` per edge, per copy.
    pub zeta: Vec<Vec<i64>>,
}

impl BMatchBlossomTree {
    fn contains(&self, b: usize, v: Vertex) -> bool {
        self.blossoms[b].vertices.binary_search(&v).is_ok()
    }

    /// Smallest blossom containing both ends of the copy.
    pub fn cover_blossom(&self, g: &Multigraph, c: CopyId) -> usize {
        let e = g.edge(c.edge);
        let mut b = self.leaf_parent[e.u];
        while !self.contains(b, e.v) {
            b = self.blossoms[b].parent.expect("the root contains every vertex");
        }
        b
    }

    /// `y(e) + Σ z(A)` over blossoms `A ⊇ e`.
    pub fn cover(&self, g: &Multigraph, c: CopyId) -> i64 {
        let e = g.edge(c.edge);
        self.y[e.u] + self.y[e.v] + self.blossoms[self.cover_blossom(g, c)].zeta
    }
}

/// Replace every copy of every edge by `min(b(u), b(v))` identical copies
/// (`⌊b(v)/2⌋` for a loop), enough for any b-matching. Returns the graph and
/// the input copy behind each new edge.
pub fn materialize(g: &Multigraph, b: &DegreeConstraint) -> (Multigraph, Vec<CopyId>) {
    let mut h = Multigraph::new(g.n());
    let mut origin = Vec::new();
    for (id, e) in g.edges().iter().enumerate() {
        let cap = if e.is_loop() { b.get(e.u) / 2 } else { b.get(e.u).min(b.get(e.v)) };
        if cap == 0 {
            continue;
        }
        for (k, &w) in e.weights.iter().enumerate() {
            h.add_edge(e.u, e.v, vec![w; cap]).expect("valid endpoints");
            origin.push(CopyId { edge: id, copy: k });
        }
    }
    (h, origin)
}

struct Dsu(Vec<usize>);

impl Dsu {
    fn find(&mut self, x: usize) -> usize {
        if self.0[x] != x {
            let r = self.find(self.0[x]);
            self.0[x] = r;
        }
        self.0[x]
    }
}

/// The shrinking procedure on integer weights: copies are processed in
/// decreasing ζ; at each value every nontrivial connected component of the
/// ζ*-copies between current vertices (loops at uncontracted vertices
/// included) is contracted into a blossom.
pub fn build_bmatch_tree(g: &Multigraph, b: &DegreeConstraint, lower: &[i64]) -> Result<BMatchBlossomTree> {
    let n = g.n();
    if lower.len() != n || b.len() != n {
        return Err(Error::input("weight table or b does not match the vertex count"));
    }
    if n == 0 {
        return Err(Error::input("empty graph"));
    }
    let zeta: Vec<Vec<i64>> = g
        .edges()
        .iter()
        .map(|e| e.weights.iter().map(|w| lower[e.u] + lower[e.v] + w).collect())
        .collect();
    let mut order: Vec<CopyId> = g.copies().collect();
    order.sort_by_key(|c| std::cmp::Reverse(zeta[c.edge][c.copy]));
    // DSU over vertices plus blossoms; element n + i is blossom i.
    let mut dsu = Dsu((0..n).collect());
    let mut blossoms: Vec<BBlossom> = Vec::new();
    let mut leaf_parent = vec![usize::MAX; n];
    let mut i = 0;
    while i < order.len() {
        let level = zeta[order[i].edge][order[i].copy];
        let mut j = i;
        while j < order.len() && zeta[order[j].edge][order[j].copy] == level {
            j += 1;
        }
        let batch: Vec<CopyId> = order[i..j]
            .iter()
            .copied()
            .filter(|c| {
                let e = g.edge(c.edge);
                let (ru, rv) = (dsu.find(e.u), dsu.find(e.v));
                ru != rv || (e.is_loop() && ru < n)
            })
            .collect();
        i = j;
        if batch.is_empty() {
            continue;
        }
        // Components of the batch over current vertices.
        let mut local = Dsu(Vec::new());
        let mut slot: std::collections::HashMap<usize, usize> = std::collections::HashMap::new();
        let mut reps: Vec<usize> = Vec::new();
        let mut idx = |r: usize, local: &mut Dsu| {
            *slot.entry(r).or_insert_with(|| {
                local.0.push(local.0.len());
                reps.push(r);
                reps.len() - 1
            })
        };
        let mut ends = Vec::with_capacity(batch.len());
        for &c in &batch {
            let e = g.edge(c.edge);
            let a = idx(dsu.find(e.u), &mut local);
            let bb = idx(dsu.find(e.v), &mut local);
            ends.push((a, bb));
            let (ra, rb) = (local.find(a), local.find(bb));
            if ra != rb {
                local.0[ra] = rb;
            }
        }
        let mut comps: std::collections::BTreeMap<usize, (Vec<usize>, Vec<CopyId>)> = Default::default();
        for a in 0..reps.len() {
            let r = local.find(a);
            comps.entry(r).or_default().0.push(a);
        }
        for (k, &c) in batch.iter().enumerate() {
            let r = local.find(ends[k].0);
            comps.get_mut(&r).expect("component exists").1.push(c);
        }
        for (_, (members, edges)) in comps {
            let id = blossoms.len();
            let mut children = Vec::new();
            let mut vertices = Vec::new();
            for &a in &members {
                let r = reps[a];
                if r < n {
                    children.push(Node::Vertex(r));
                    vertices.push(r);
                    leaf_parent[r] = id;
                } else {
                    let c = r - n;
                    children.push(Node::Blossom(c));
                    blossoms[c].parent = Some(id);
                    vertices.extend_from_slice(&blossoms[c].vertices);
                }
            }
            vertices.sort_unstable();
            dsu.0.push(n + id);
            for &a in &members {
                let r = reps[a];
                dsu.0[r] = n + id;
            }
            blossoms.push(BBlossom { vertices, children, parent: None, zeta: level, z: 0, edges });
        }
    }
    if n == 1 && blossoms.is_empty() {
        leaf_parent[0] = 0;
        let edges = Vec::new();
        blossoms.push(BBlossom { vertices: vec![0], children: vec![Node::Vertex(0)], parent: None, zeta: 0, z: 0, edges });
    }
    let roots: Vec<usize> = (0..blossoms.len()).filter(|&x| blossoms[x].parent.is_none()).collect();
    if roots.len() != 1 || blossoms[roots[0]].vertices.len() != n {
        return Err(Error::inconsistent("shrinking did not end with a single vertex: the graph is not b-critical"));
    }
    let root = roots[0];
    for id in 0..blossoms.len() {
        blossoms[id].z = match blossoms[id].parent {
            Some(p) => blossoms[id].zeta - blossoms[p].zeta,
            None => blossoms[id].zeta,
        };
        if blossoms[id].parent.is_some() && blossoms[id].z < 0 {
            return Err(Error::inconsistent("ζ* increased during shrinking"));
        }
    }
    let tree = BMatchBlossomTree { blossoms, leaf_parent, root, y: lower.iter().map(|w| -w).collect(), zeta };
    for c in g.copies() {
        if tree.cover(g, c) < g.weight(c) {
            return Err(Error::inconsistent("a copy with ζ above its blossom was left uncontracted"));
        }
    }
    Ok(tree)
}

fn child_containing(tree: &BMatchBlossomTree, b: usize, v: Vertex) -> Node {
    if tree.leaf_parent[v] == b {
        return Node::Vertex(v);
    }
    let mut x = tree.leaf_parent[v];
    while tree.blossoms[x].parent != Some(b) {
        x = tree.blossoms[x].parent.expect("v lies inside b");
    }
    Node::Blossom(x)
}

/// A maximum `b_v`-matching built top-down: at each blossom a `b_v̄`-matching
/// of its ζ*-graph (blossom children have `b = 1`), then recursion into each
/// blossom child at the vertex its matched edge enters.
pub fn b_match(
    tree: &BMatchBlossomTree,
    g: &Multigraph,
    b: &DegreeConstraint,
    v: Vertex,
    cfg: &SolveConfig,
) -> Result<EdgeSubset> {
    let mut out = EdgeSubset::new();
    let mut stack = vec![(tree.root, v)];
    while let Some((bl, x)) = stack.pop() {
        let node = &tree.blossoms[bl];
        let index = |c: Node| node.children.iter().position(|&d| d == c).expect("child of the blossom");
        let mut hb: Vec<usize> = node
            .children
            .iter()
            .map(|&c| match c {
                Node::Vertex(u) => b.get(u),
                Node::Blossom(_) => 1,
            })
            .collect();
        let xi = index(child_containing(tree, bl, x));
        hb[xi] = hb[xi]
            .checked_sub(1)
            .ok_or_else(|| Error::inconsistent("zero degree bound at the deficient child"))?;
        let mut h = Multigraph::new(node.children.len());
        let mut ends = Vec::with_capacity(node.edges.len());
        for &c in &node.edges {
            let e = g.edge(c.edge);
            let (p, q) = (index(child_containing(tree, bl, e.u)), index(child_containing(tree, bl, e.v)));
            h.add_edge(p, q, vec![0])?;
            ends.push((e.u, e.v));
        }
        let res = find_factor(&h, &DegreeConstraint::new(hb), cfg)?;
        let Some(sel) = res.factor else {
            return Err(Error::unlucky(format!("no matching in the ζ*-graph of blossom {bl}")));
        };
        let mut entry: Vec<Option<Vertex>> = vec![None; node.children.len()];
        entry[xi] = Some(x);
        for (k, &c) in node.edges.iter().enumerate() {
            if !sel.contains(&CopyId { edge: k, copy: 0 }) {
                continue;
            }
            out.insert(c);
            for end in [ends[k].0, ends[k].1] {
                let ci = index(child_containing(tree, bl, end));
                if matches!(node.children[ci], Node::Blossom(_)) && ci != xi {
                    entry[ci] = Some(end);
                }
            }
        }
        for (ci, &c) in node.children.iter().enumerate() {
            if let Node::Blossom(cb) = c {
                let at = entry[ci].ok_or_else(|| Error::unlucky("a blossom child was left unmatched"))?;
                stack.push((cb, at));
            }
        }
    }
    Ok(out)
}

/// Las Vegas check of a claimed maximum `b_v`-matching: every copy
/// dominated, matched copies tight, every blossom `A` meets the matching in
/// `(b(V(A)) − 1)/2` internal copies, and `z ≥ 0` below the root.
pub fn verify_bmatch(
    tree: &BMatchBlossomTree,
    g: &Multigraph,
    b: &DegreeConstraint,
    matching: &EdgeSubset,
    v: Vertex,
) -> bool {
    let Ok(bv) = b.perturb(v, crate::graph::Direction::Lower) else { return false };
    if !matching.is_factor(g, &bv) {
        return false;
    }
    for c in g.copies() {
        let cover = tree.cover(g, c);
        if g.weight(c) > cover || matching.contains(&c) && g.weight(c) != cover {
            return false;
        }
    }
    for (id, bl) in tree.blossoms.iter().enumerate() {
        if id != tree.root && bl.z < 0 {
            return false;
        }
        let mass: usize = bl.vertices.iter().map(|&x| b.get(x)).sum();
        let inner = matching
            .iter()
            .filter(|c| {
                let e = g.edge(c.edge);
                tree.contains(id, e.u) && tree.contains(id, e.v)
            })
            .count();
        if mass == 0 || 2 * inner != mass - 1 {
            return false;
        }
    }
    true
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BMatching {
    /// `counts[e][k]`: how many times copy `k` of input edge `e` is used.
    pub counts: Vec<Vec<usize>>,
    pub weight: i64,
    /// Blossom tree of the closure on the materialized graph.
    pub tree: BMatchBlossomTree,
}

struct BClosure {
    graph: Multigraph,
    b: DegreeConstraint,
    s: Vertex,
    /// Copy of the reduced graph behind every materialized edge.
    morigin: Vec<CopyId>,
    /// Input edge behind every edge of the reduced graph.
    origin: Vec<usize>,
}

/// Drop `b = 0` vertices, materialize, and add the closure vertex.
fn bmatch_closure(g: &Multigraph, b: &DegreeConstraint) -> Result<BClosure> {
    let keep: Vec<bool> = (0..g.n()).map(|v| b.get(v) > 0).collect();
    let (h, _, origin) = induced(g, &keep);
    let kept: Vec<Vertex> = (0..g.n()).filter(|&v| keep[v]).collect();
    let hb = DegreeConstraint::new(kept.iter().map(|&v| b.get(v)).collect());
    if hb.phi() % 2 == 1 {
        return Err(Error::infeasible("b(V) is odd"));
    }
    let (mut m, morigin) = materialize(&h, &hb);
    let s = m.add_vertex();
    for v in 0..h.n() {
        m.add_plain(s, v, 1)?;
    }
    let mut mb = hb;
    mb.push(1);
    Ok(BClosure { graph: m, b: mb, s, morigin, origin })
}

/// Re-check a reported b-matching against its instance: degrees, weight,
/// and the dual certificate of its blossom tree.
pub fn certify_bmatching(g: &Multigraph, b: &DegreeConstraint, r: &BMatching) -> bool {
    if b.len() != g.n() || r.counts.len() != g.m() {
        return false;
    }
    let Ok(cl) = bmatch_closure(g, b) else { return false };
    let mut deg = vec![0usize; g.n()];
    let mut weight = 0;
    for (e, ed) in g.edges().iter().enumerate() {
        if r.counts[e].len() != ed.mult() {
            return false;
        }
        for (k, &n) in r.counts[e].iter().enumerate() {
            deg[ed.u] += n;
            deg[ed.v] += n;
            weight += ed.weights[k] * n as i64;
        }
    }
    if (0..g.n()).any(|v| deg[v] != b.get(v)) || weight != r.weight {
        return false;
    }
    let mut matching = EdgeSubset::new();
    for (j, oc) in cl.morigin.iter().enumerate() {
        let n = r.counts[cl.origin[oc.edge]][oc.copy];
        if n > cl.graph.edge(j).mult() {
            return false;
        }
        for copy in 0..n {
            matching.insert(CopyId { edge: j, copy });
        }
    }
    verify_bmatch(&r.tree, &cl.graph, &cl.b, &matching, cl.s)
}

/// Maximum weight perfect b-matching, each edge usable any number of times.
/// The closure adds a vertex `s` with `b(s) = 1` and weight-0 edges `sv`;
/// a maximum `b_s`-matching of it is the answer.
pub fn max_weight_bmatching(g: &Multigraph, b: &DegreeConstraint, cfg: &SolveConfig) -> Result<BMatching> {
    if b.len() != g.n() {
        return Err(Error::input("b length differs from vertex count"));
    }
    let counts0: Vec<Vec<usize>> = g.edges().iter().map(|e| vec![0; e.mult()]).collect();
    let BClosure { graph: m, b: mb, s, morigin, origin } = bmatch_closure(g, b)?;
    let ((matching, tree), _) = with_retries(cfg, |seed| {
        let (lower, _) = lower_weights_once(&m, &mb, cfg.prime_bits, seed)?;
        let tree = build_bmatch_tree(&m, &mb, &lower)?;
        let sub = SolveConfig { seed, ..*cfg }.child(2);
        let matching = b_match(&tree, &m, &mb, s, &sub)?;
        if matching.weight(&m) != lower[s] || !verify_bmatch(&tree, &m, &mb, &matching, s) {
            return Err(Error::unlucky("b-matching failed its dual certificate"));
        }
        Ok((matching, tree))
    })
    .map_err(|e| match e {
        Error::Infeasible(_) => Error::infeasible("no perfect b-matching"),
        other => other,
    })?;
    let mut counts = counts0;
    for c in matching.iter() {
        if c.edge >= morigin.len() {
            return Err(Error::inconsistent("maximum b_s-matching uses a closure edge"));
        }
        let oc = morigin[c.edge];
        counts[origin[oc.edge]][oc.copy] += 1;
    }
    let weight = g
        .edges()
        .iter()
        .enumerate()
        .map(|(e, ed)| ed.weights.iter().zip(&counts[e]).map(|(w, &k)| w * k as i64).sum::<i64>())
        .sum();
    Ok(BMatching { counts, weight, tree })
}
