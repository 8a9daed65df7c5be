//! Vertex-capacitated max-flow and min-cost max-flow (linear or convex arc
//! costs, optional lower bounds) by reduction to weighted bipartite
//! f-factors.

use serde::{Deserialize, Serialize};

use crate::bipartite::max_weight_bipartite;
use crate::config::SolveConfig;
use crate::error::{Error, Result};
use crate::graph::{DegreeConstraint, EdgeSubset, Multigraph, Vertex};

/// Cost of sending `k` units along an arc.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cost {
    /// `k·a`.
    Linear(i64),
    /// Piecewise linear through `(k, a(k))` breakpoints with `a(0) = 0`;
    /// the last slope continues up to the capacity.
    Convex(Vec<(usize, i64)>),
}

impl Default for Cost {
    fn default() -> Self {
        Cost::Linear(0)
    }
}

impl Cost {
    /// Marginals `m(1), …, m(cap)`, checked to be integral and nondecreasing.
    pub fn marginals(&self, cap: usize) -> Result<Vec<i64>> {
        match self {
            Cost::Linear(a) => Ok(vec![*a; cap]),
            Cost::Convex(points) => {
                let mut pts = vec![(0usize, 0i64)];
                let mut sorted = points.clone();
                sorted.sort_unstable();
                for p in sorted {
                    if p.0 == 0 {
                        if p.1 != 0 {
                            return Err(Error::input("convex cost must vanish at 0"));
                        }
                        continue;
                    }
                    if pts.last().map(|q| q.0) == Some(p.0) {
                        return Err(Error::input(format!("duplicate breakpoint at {}", p.0)));
                    }
                    pts.push(p);
                }
                let mut m = Vec::with_capacity(cap);
                for k in 1..=cap {
                    let seg = pts.windows(2).find(|w| w[1].0 >= k).unwrap_or_else(|| {
                        let l = pts.len();
                        if l >= 2 { &pts[l - 2..] } else { &pts[..] }
                    });
                    if seg.len() < 2 {
                        m.push(0);
                        continue;
                    }
                    let (dx, dy) = ((seg[1].0 - seg[0].0) as i64, seg[1].1 - seg[0].1);
                    if dy % dx != 0 {
                        return Err(Error::input("convex cost has a fractional marginal"));
                    }
                    m.push(dy / dx);
                }
                if m.windows(2).any(|w| w[0] > w[1]) {
                    return Err(Error::input("cost is not convex"));
                }
                Ok(m)
            }
        }
    }

    /// `a(k)`.
    pub fn at(&self, k: usize) -> Result<i64> {
        Ok(self.marginals(k)?.iter().sum())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arc {
    pub from: Vertex,
    pub to: Vertex,
    pub cap: usize,
    pub lower: usize,
    pub cost: Cost,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowNetwork {
    pub n: usize,
    pub s: Vertex,
    pub t: Vertex,
    /// Capacity of every nonterminal; ignored at `s` and `t`.
    pub vertex_cap: Vec<usize>,
    /// Lower bound on the flow through every nonterminal.
    pub vertex_lower: Vec<usize>,
    pub arcs: Vec<Arc>,
}

impl FlowNetwork {
    pub fn new(n: usize, s: Vertex, t: Vertex) -> Self {
        FlowNetwork { n, s, t, vertex_cap: vec![0; n], vertex_lower: vec![0; n], arcs: Vec::new() }
    }

    pub fn add_arc(&mut self, from: Vertex, to: Vertex, cap: usize, cost: i64) -> usize {
        self.arcs.push(Arc { from, to, cap, lower: 0, cost: Cost::Linear(cost) });
        self.arcs.len() - 1
    }

    fn check(&self) -> Result<()> {
        if self.s >= self.n || self.t >= self.n || self.s == self.t {
            return Err(Error::input("source and sink must be distinct vertices"));
        }
        if self.vertex_cap.len() != self.n || self.vertex_lower.len() != self.n {
            return Err(Error::input("vertex capacity table does not match the vertex count"));
        }
        for (i, a) in self.arcs.iter().enumerate() {
            if a.from >= self.n || a.to >= self.n {
                return Err(Error::input(format!("arc {i} has an endpoint out of range")));
            }
            if a.lower > a.cap {
                return Err(Error::input(format!("arc {i} has lower bound above its capacity")));
            }
            a.cost.marginals(a.cap)?;
        }
        let bounded = self.arcs.iter().any(|a| a.lower > 0) || self.vertex_lower.iter().any(|&l| l > 0);
        if bounded && self.arcs.iter().any(|a| a.to == self.s || a.from == self.t) {
            return Err(Error::input("lower bounds need a network with no arc entering s or leaving t"));
        }
        Ok(())
    }

    fn nonterminals(&self) -> impl Iterator<Item = Vertex> + '_ {
        (0..self.n).filter(move |&v| v != self.s && v != self.t)
    }
}

/// An integral flow with its value and cost.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowAssignment {
    /// Flow on every arc of the network it was computed for.
    pub flow: Vec<usize>,
    pub value: i64,
    pub cost: i64,
}

/// Check capacities, lower bounds and conservation; return value and cost.
pub fn check_flow(net: &FlowNetwork, flow: &[usize]) -> Result<(i64, i64)> {
    if flow.len() != net.arcs.len() {
        return Err(Error::inconsistent("flow does not cover every arc"));
    }
    let mut inflow = vec![0usize; net.n];
    let mut outflow = vec![0usize; net.n];
    let mut cost = 0;
    for (a, &g) in net.arcs.iter().zip(flow) {
        if g < a.lower || g > a.cap {
            return Err(Error::inconsistent(format!("flow {g} on arc {}->{} violates its bounds", a.from, a.to)));
        }
        inflow[a.to] += g;
        outflow[a.from] += g;
        cost += a.cost.at(g)?;
    }
    for v in net.nonterminals() {
        if inflow[v] != outflow[v] {
            return Err(Error::inconsistent(format!("flow is not conserved at {v}")));
        }
        if inflow[v] > net.vertex_cap[v] || inflow[v] < net.vertex_lower[v] {
            return Err(Error::inconsistent(format!("flow through {v} violates its bounds")));
        }
    }
    Ok((outflow[net.s] as i64 - inflow[net.s] as i64, cost))
}

/// The network rewritten so that no arc enters `s`, leaves `t`, or joins
/// `s` to `t` directly.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Normalized {
    pub network: FlowNetwork,
    /// Original arc behind every arc, if any.
    pub origin: Vec<Option<usize>>,
    /// One line per rewrite.
    pub audit: Vec<String>,
}

impl Normalized {
    /// Flow on the original arcs.
    pub fn lift(&self, flow: &[usize], arcs: usize) -> Vec<usize> {
        let mut out = vec![0; arcs];
        for (i, o) in self.origin.iter().enumerate() {
            if let Some(o) = *o {
                out[o] = flow[i];
            }
        }
        out
    }
}

pub fn normalize(net: &FlowNetwork) -> Result<Normalized> {
    net.check()?;
    let mut out = net.clone();
    let mut origin: Vec<Option<usize>> = (0..net.arcs.len()).map(Some).collect();
    let mut audit = Vec::new();
    if out.arcs.iter().any(|a| a.to == out.s) {
        let old = out.s;
        let cap: usize = out.arcs.iter().filter(|a| a.from == old).map(|a| a.cap).sum();
        let s = out.n;
        out.n += 1;
        out.vertex_cap[old] = cap;
        out.vertex_cap.push(0);
        out.vertex_lower.push(0);
        out.arcs.push(Arc { from: s, to: old, cap, lower: 0, cost: Cost::Linear(0) });
        origin.push(None);
        out.s = s;
        audit.push(format!("arcs enter s={old}: new source {s} feeds it with capacity {cap}"));
    }
    if out.arcs.iter().any(|a| a.from == out.t) {
        let old = out.t;
        let cap: usize = out.arcs.iter().filter(|a| a.to == old).map(|a| a.cap).sum();
        let t = out.n;
        out.n += 1;
        out.vertex_cap[old] = cap;
        out.vertex_cap.push(0);
        out.vertex_lower.push(0);
        out.arcs.push(Arc { from: old, to: t, cap, lower: 0, cost: Cost::Linear(0) });
        origin.push(None);
        out.t = t;
        audit.push(format!("arcs leave t={old}: new sink {t} drains it with capacity {cap}"));
    }
    for i in 0..out.arcs.len() {
        if out.arcs[i].from == out.s && out.arcs[i].to == out.t {
            let x = out.n;
            out.n += 1;
            let (cap, lower) = (out.arcs[i].cap, out.arcs[i].lower);
            out.vertex_cap.push(cap);
            out.vertex_lower.push(0);
            out.arcs[i].to = x;
            out.arcs.push(Arc { from: x, to: out.t, cap, lower, cost: Cost::Linear(0) });
            origin.push(None);
            audit.push(format!("arc {i} from s to t subdivided by vertex {x}"));
        }
    }
    Ok(Normalized { network: out, origin, audit })
}

/// A bipartite f-factor instance built from a normalized network.
#[derive(Clone, Debug)]
pub struct FlowReduction {
    pub normalized: Normalized,
    pub graph: Multigraph,
    pub f: DegreeConstraint,
    /// 0 for out-vertices, 1 for in-vertices.
    pub side: Vec<u8>,
    /// Edge holding the free copies of every normalized arc.
    pub arc_edge: Vec<Option<usize>>,
    /// Added to the factor weight to get the flow value (max-flow) or
    /// subtracted from its negation to get the cost (min-cost).
    pub shift: i64,
    pub min_cost: bool,
}

struct Builder {
    g: Multigraph,
    side: Vec<u8>,
    f: Vec<i64>,
}

impl Builder {
    fn vertex(&mut self, side: u8) -> Vertex {
        self.side.push(side);
        self.f.push(0);
        self.g.add_vertex()
    }

    fn edge(&mut self, u: Vertex, v: Vertex, weights: Vec<i64>) -> Result<Option<usize>> {
        if weights.is_empty() {
            return Ok(None);
        }
        Ok(Some(self.g.add_edge(u, v, weights)?))
    }
}

fn reduce(net: &FlowNetwork, fmax: Option<i64>) -> Result<FlowReduction> {
    let normalized = normalize(net)?;
    let nw = &normalized.network;
    let mut b = Builder { g: Multigraph::new(0), side: Vec::new(), f: Vec::new() };
    let mut v_in = vec![usize::MAX; nw.n];
    let mut v_out = vec![usize::MAX; nw.n];
    let cap_total: i64 = nw.nonterminals().map(|v| nw.vertex_cap[v] as i64).sum();
    for v in nw.nonterminals() {
        v_in[v] = b.vertex(1);
        v_out[v] = b.vertex(0);
        let (c, l) = (nw.vertex_cap[v], nw.vertex_lower[v]);
        if l > c {
            return Err(Error::infeasible(format!("vertex {v} has lower bound above its capacity")));
        }
        let lin: usize = nw.arcs.iter().filter(|a| a.to == v).map(|a| a.lower).sum();
        let lout: usize = nw.arcs.iter().filter(|a| a.from == v).map(|a| a.lower).sum();
        b.f[v_in[v]] = c as i64 - lin as i64;
        b.f[v_out[v]] = c as i64 - lout as i64;
        b.edge(v_in[v], v_out[v], vec![0; c - l])?;
    }
    let s_out = b.vertex(0);
    let t_in = b.vertex(1);
    v_out[nw.s] = s_out;
    v_in[nw.t] = t_in;
    let ls: i64 = nw.arcs.iter().filter(|a| a.from == nw.s).map(|a| a.lower as i64).sum();
    let lt: i64 = nw.arcs.iter().filter(|a| a.to == nw.t).map(|a| a.lower as i64).sum();
    let mut arc_edge = Vec::with_capacity(nw.arcs.len());
    let mut shift = 0;
    for a in &nw.arcs {
        let weights: Vec<i64> = match fmax {
            None => vec![i64::from(a.from == nw.s); a.cap - a.lower],
            Some(_) => a.cost.marginals(a.cap)?[a.lower..].iter().map(|m| -m).collect(),
        };
        shift += match fmax {
            None => i64::from(a.from == nw.s) * a.lower as i64,
            Some(_) => a.cost.at(a.lower)?,
        };
        arc_edge.push(b.edge(v_out[a.from], v_in[a.to], weights)?);
    }
    match fmax {
        None => {
            let k = cap_total + ls + lt;
            b.f[s_out] = k - ls;
            b.f[t_in] = k - lt;
            b.edge(s_out, t_in, vec![0; k as usize])?;
        }
        Some(fmax) => {
            let s_in = b.vertex(1);
            let t_out = b.vertex(0);
            b.edge(s_in, s_out, vec![0; cap_total as usize])?;
            b.edge(t_in, t_out, vec![0; cap_total as usize])?;
            b.f[s_in] = cap_total;
            b.f[t_out] = cap_total;
            b.f[s_out] = cap_total + fmax - ls;
            b.f[t_in] = cap_total + fmax - lt;
        }
    }
    if let Some(v) = b.f.iter().position(|&x| x < 0) {
        return Err(Error::infeasible(format!("lower bounds exceed capacity at reduced vertex {v}")));
    }
    let f = DegreeConstraint::new(b.f.iter().map(|&x| x as usize).collect());
    Ok(FlowReduction { normalized, graph: b.g, f, side: b.side, arc_edge, shift, min_cost: fmax.is_some() })
}

/// `G_N`: its maximum f-factor weight plus `shift` is the maximum flow value.
pub fn reduce_maxflow(net: &FlowNetwork) -> Result<FlowReduction> {
    reduce(net, None)
}

/// `G_{N,a}` for a known maximum flow value: its maximum f-factor weight is
/// `shift − (minimum cost)`.
pub fn reduce_mincost(net: &FlowNetwork, fmax: i64) -> Result<FlowReduction> {
    reduce(net, Some(fmax))
}

/// Read the flow of the original network off a factor of the reduction,
/// validating it.
pub fn factor_to_flow(factor: &EdgeSubset, net: &FlowNetwork, red: &FlowReduction) -> Result<FlowAssignment> {
    let counts = factor.counts(&red.graph);
    let nw = &red.normalized.network;
    let inner: Vec<usize> = nw
        .arcs
        .iter()
        .zip(&red.arc_edge)
        .map(|(a, e)| a.lower + e.map_or(0, |e| counts[e]))
        .collect();
    check_flow(nw, &inner)?;
    let flow = red.normalized.lift(&inner, net.arcs.len());
    let (value, cost) = check_flow(net, &flow)?;
    Ok(FlowAssignment { flow, value, cost })
}

/// Maximum flow through the reduction. Infeasible lower bounds surface as
/// [`Error::Infeasible`].
pub fn max_flow(net: &FlowNetwork, cfg: &SolveConfig) -> Result<FlowAssignment> {
    let red = reduce_maxflow(net)?;
    let r = max_weight_bipartite(&red.graph, &red.f, &red.side, &cfg.child(7))?;
    let flow = factor_to_flow(&r.factor, net, &red)?;
    if flow.value != r.weight + red.shift {
        return Err(Error::inconsistent("flow value differs from the factor weight"));
    }
    Ok(flow)
}

/// Minimum cost maximum flow: a max-flow pass fixes the value, then the
/// cost reduction is solved on the same seed stream.
pub fn min_cost_max_flow(net: &FlowNetwork, cfg: &SolveConfig) -> Result<FlowAssignment> {
    let fmax = max_flow(net, cfg)?.value;
    let red = reduce_mincost(net, fmax)?;
    let r = max_weight_bipartite(&red.graph, &red.f, &red.side, &cfg.child(8))?;
    let flow = factor_to_flow(&r.factor, net, &red)?;
    if flow.value != fmax || flow.cost != red.shift - r.weight {
        return Err(Error::inconsistent("min-cost flow disagrees with the factor weight"));
    }
    Ok(flow)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> FlowNetwork {
        let mut net = FlowNetwork::new(3, 0, 2);
        net.vertex_cap[1] = 1;
        net.add_arc(0, 1, 2, 0);
        net.add_arc(1, 2, 2, 0);
        net
    }

    #[test]
    fn bottleneck_vertex() {
        let net = chain();
        let red = reduce_maxflow(&net).unwrap();
        assert_eq!(red.f.phi(), 4);
        let r = max_flow(&net, &SolveConfig::default()).unwrap();
        assert_eq!(r.value, 1);
        assert_eq!(r.flow, vec![1, 1]);
    }

    #[test]
    fn disconnected_terminals() {
        let mut net = FlowNetwork::new(3, 0, 2);
        net.vertex_cap[1] = 2;
        net.add_arc(0, 1, 2, 0);
        let r = max_flow(&net, &SolveConfig::default()).unwrap();
        assert_eq!(r.value, 0);
        assert_eq!(r.flow, vec![0]);
    }

    #[test]
    fn squared_cost_marginals() {
        let c = Cost::Convex(vec![(1, 1), (2, 4), (3, 9)]);
        assert_eq!(c.marginals(3).unwrap(), vec![1, 3, 5]);
        assert_eq!(c.at(2).unwrap(), 4);
        assert!(Cost::Convex(vec![(1, 3), (2, 4)]).marginals(2).is_err());
        assert_eq!(Cost::Convex(vec![(2, 4)]).marginals(3).unwrap(), vec![2, 2, 2]);
    }

    #[test]
    fn direct_arc_and_reverse_arcs_are_normalized() {
        let mut net = FlowNetwork::new(3, 0, 2);
        net.vertex_cap[1] = 5;
        net.add_arc(0, 2, 3, 1);
        net.add_arc(1, 0, 1, 0);
        net.add_arc(2, 1, 1, 0);
        net.add_arc(0, 1, 2, 0);
        net.add_arc(1, 2, 2, 0);
        let norm = normalize(&net).unwrap();
        assert_eq!(norm.audit.len(), 2);
        let r = max_flow(&net, &SolveConfig::default()).unwrap();
        assert_eq!(r.value, 5);
        let c = min_cost_max_flow(&net, &SolveConfig::default()).unwrap();
        assert_eq!((c.value, c.cost), (5, 3));
    }

    #[test]
    fn lower_bound_forces_expensive_route() {
        let mut net = FlowNetwork::new(4, 0, 3);
        net.vertex_cap[1] = 1;
        net.vertex_cap[2] = 1;
        net.add_arc(0, 1, 1, 1);
        net.add_arc(1, 3, 1, 0);
        net.add_arc(0, 2, 1, 5);
        net.add_arc(2, 3, 1, 0);
        net.arcs[2].lower = 1;
        let c = min_cost_max_flow(&net, &SolveConfig::default()).unwrap();
        assert_eq!((c.value, c.cost), (2, 6));
        net.vertex_cap[2] = 0;
        assert!(matches!(max_flow(&net, &SolveConfig::default()), Err(Error::Infeasible(_))));
    }
}
