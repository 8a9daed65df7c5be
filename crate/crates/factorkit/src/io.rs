//! Instance files, result envelopes and the command runner behind the CLI.
//!
//! Vertices are numbered from 0. Graph files:
//!
//! ```text
//! c comment
//! p ffactor <n> <m>        (or bmatch, sssp)
//! v <id> <f>               (absent vertices have f = 0)
//! t <id>                   (sssp sink)
//! e <u> <v> <mult> <w1> … <w_mult>
//! ```
//!
//! Flow files (`p maxflow` or `p mincost`, `m` counts arcs) use `s <id>`,
//! `t <id>`, `n <id> <cap> [<lower>]` (a vertex without one is bounded only
//! by its incoming arcs), `a <u> <v> <cap> [<cost>]`, and
//! `l <u> <v> <lower>` / `x <u> <v> <k> <a(k)>` lines, which refer to the
//! most recent arc `u → v`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::blossom::{certify_weighted_factor, max_weight_general, WeightedBlossomForest};
use crate::bmatch::{certify_bmatching, materialize, max_weight_bmatching, BMatching};
use crate::config::SolveConfig;
use crate::error::{Error, Result};
use crate::field::DEFAULT_PRIME_BITS;
use crate::flow::{check_flow, max_flow, min_cost_max_flow, Cost, FlowAssignment, FlowNetwork};
use crate::graph::{CopyId, DegreeConstraint, EdgeSubset, Multigraph, Vertex};
use crate::oracle::{brute_flow, brute_max_weight, brute_paths, brute_shortest, OracleBudget, ShortestOutcome};
use crate::solve::find_factor;
use crate::sssp::{describe_cycle, expand_path, solve_sssp, validate_gsp, Backend, GspStructure, SsspOutcome};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceKind {
    Ffactor,
    Bmatch,
    Sssp,
    Maxflow,
    Mincost,
}

impl InstanceKind {
    fn is_flow(self) -> bool {
        matches!(self, InstanceKind::Maxflow | InstanceKind::Mincost)
    }
}

impl FromStr for InstanceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "ffactor" => InstanceKind::Ffactor,
            "bmatch" => InstanceKind::Bmatch,
            "sssp" => InstanceKind::Sssp,
            "maxflow" => InstanceKind::Maxflow,
            "mincost" => InstanceKind::Mincost,
            other => return Err(Error::input(format!("unknown instance kind {other:?}"))),
        })
    }
}

impl fmt::Display for InstanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InstanceKind::Ffactor => "ffactor",
            InstanceKind::Bmatch => "bmatch",
            InstanceKind::Sssp => "sssp",
            InstanceKind::Maxflow => "maxflow",
            InstanceKind::Mincost => "mincost",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphInstance {
    pub kind: InstanceKind,
    pub graph: Multigraph,
    /// `f` or `b`; unused by shortest paths.
    pub f: DegreeConstraint,
    pub t: Option<Vertex>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowInstance {
    pub kind: InstanceKind,
    pub network: FlowNetwork,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Instance {
    Graph(GraphInstance),
    Flow(FlowInstance),
}

impl Instance {
    pub fn kind(&self) -> InstanceKind {
        match self {
            Instance::Graph(g) => g.kind,
            Instance::Flow(f) => f.kind,
        }
    }
}

fn err(line: usize, msg: impl fmt::Display) -> Error {
    Error::input(format!("line {line}: {msg}"))
}

fn num<T: FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| err(line, format!("missing {what}")))?;
    tok.parse().map_err(|_| err(line, format!("bad {what} {tok:?}")))
}

fn vertex(tok: Option<&str>, line: usize, n: usize) -> Result<Vertex> {
    let v: Vertex = num(tok, line, "vertex")?;
    if v >= n {
        return Err(err(line, format!("vertex {v} out of range 0..{n}")));
    }
    Ok(v)
}

fn no_more<'a>(mut toks: impl Iterator<Item = &'a str>, line: usize) -> Result<()> {
    match toks.next() {
        Some(t) => Err(err(line, format!("unexpected token {t:?}"))),
        None => Ok(()),
    }
}

/// Parse an instance file.
pub fn parse_instance(text: &str) -> Result<Instance> {
    let mut header: Option<(InstanceKind, usize, usize)> = None;
    let mut graph = Multigraph::new(0);
    let mut f: Vec<usize> = Vec::new();
    let mut net = FlowNetwork::new(0, 0, 0);
    let (mut s, mut t): (Option<Vertex>, Option<Vertex>) = (None, None);
    let mut count = 0usize;
    let mut capped: Vec<bool> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let mut toks = raw.split_whitespace();
        let Some(tag) = toks.next() else { continue };
        if tag == "c" {
            continue;
        }
        if tag == "p" {
            if header.is_some() {
                return Err(err(line, "second problem line"));
            }
            let kind: InstanceKind = toks.next().ok_or_else(|| err(line, "missing kind"))?.parse().map_err(|e: Error| err(line, e))?;
            let n: usize = num(toks.next(), line, "vertex count")?;
            let m: usize = num(toks.next(), line, "edge count")?;
            no_more(toks, line)?;
            header = Some((kind, n, m));
            graph = Multigraph::new(n);
            f = vec![0; n];
            net = FlowNetwork::new(n, 0, 0);
            capped = vec![false; n];
            continue;
        }
        let Some((kind, n, _)) = header else {
            return Err(err(line, "data before the problem line"));
        };
        match (tag, kind.is_flow()) {
            ("v", false) => {
                let v = vertex(toks.next(), line, n)?;
                f[v] = num(toks.next(), line, "degree")?;
            }
            ("t", _) => t = Some(vertex(toks.next(), line, n)?),
            ("s", true) => s = Some(vertex(toks.next(), line, n)?),
            ("e", false) => {
                let u = vertex(toks.next(), line, n)?;
                let v = vertex(toks.next(), line, n)?;
                let mult: usize = num(toks.next(), line, "multiplicity")?;
                let weights: Vec<i64> = (0..mult).map(|_| num(toks.next(), line, "weight")).collect::<Result<_>>()?;
                if mult == 0 {
                    return Err(err(line, "multiplicity must be positive"));
                }
                graph.add_edge(u, v, weights).map_err(|e| err(line, e))?;
                count += 1;
            }
            ("n", true) => {
                let v = vertex(toks.next(), line, n)?;
                net.vertex_cap[v] = num(toks.next(), line, "capacity")?;
                capped[v] = true;
                if let Some(tok) = toks.next() {
                    net.vertex_lower[v] = num(Some(tok), line, "lower bound")?;
                }
            }
            ("a", true) => {
                let u = vertex(toks.next(), line, n)?;
                let v = vertex(toks.next(), line, n)?;
                let cap: usize = num(toks.next(), line, "capacity")?;
                let cost: i64 = match toks.next() {
                    Some(tok) => num(Some(tok), line, "cost")?,
                    None => 0,
                };
                net.add_arc(u, v, cap, cost);
                count += 1;
            }
            ("l", true) | ("x", true) => {
                let u = vertex(toks.next(), line, n)?;
                let v = vertex(toks.next(), line, n)?;
                let arc = net
                    .arcs
                    .iter_mut()
                    .rev()
                    .find(|a| a.from == u && a.to == v)
                    .ok_or_else(|| err(line, format!("no arc {u} -> {v} before this line")))?;
                if tag == "l" {
                    arc.lower = num(toks.next(), line, "lower bound")?;
                } else {
                    let k: usize = num(toks.next(), line, "breakpoint")?;
                    let c: i64 = num(toks.next(), line, "cost")?;
                    match &mut arc.cost {
                        Cost::Linear(0) => arc.cost = Cost::Convex(vec![(k, c)]),
                        Cost::Linear(_) => return Err(err(line, "convex arc must have linear cost 0")),
                        Cost::Convex(points) => points.push((k, c)),
                    }
                }
            }
            _ => return Err(err(line, format!("unexpected {tag:?} line in a {kind} file"))),
        }
        no_more(toks, line)?;
    }
    let (kind, n, m) = header.ok_or_else(|| Error::input("missing problem line"))?;
    if count != m {
        return Err(Error::input(format!("problem line announces {m} edges, found {count}")));
    }
    if kind.is_flow() {
        net.s = s.ok_or_else(|| Error::input("flow file without an s line"))?;
        net.t = t.ok_or_else(|| Error::input("flow file without a t line"))?;
        if n < 2 || net.s == net.t {
            return Err(Error::input("flow files need distinct s and t"));
        }
        for v in (0..n).filter(|&v| !capped[v] && v != net.s && v != net.t) {
            net.vertex_cap[v] = net.arcs.iter().filter(|a| a.to == v).map(|a| a.cap).sum();
        }
        return Ok(Instance::Flow(FlowInstance { kind, network: net }));
    }
    if kind == InstanceKind::Sssp && t.is_none() {
        return Err(Error::input("sssp file without a t line"));
    }
    Ok(Instance::Graph(GraphInstance { kind, graph, f: DegreeConstraint::new(f), t }))
}

/// Write an instance in the file format; [`parse_instance`] inverts it.
pub fn serialize_instance(inst: &Instance) -> String {
    let mut out = String::new();
    match inst {
        Instance::Graph(gi) => {
            let g = &gi.graph;
            out += &format!("p {} {} {}\n", gi.kind, g.n(), g.m());
            for v in 0..g.n() {
                if gi.f.get(v) > 0 {
                    out += &format!("v {v} {}\n", gi.f.get(v));
                }
            }
            if let Some(t) = gi.t {
                out += &format!("t {t}\n");
            }
            for e in g.edges() {
                let ws: Vec<String> = e.weights.iter().map(|w| w.to_string()).collect();
                out += &format!("e {} {} {} {}\n", e.u, e.v, e.mult(), ws.join(" "));
            }
        }
        Instance::Flow(fi) => {
            let net = &fi.network;
            out += &format!("p {} {} {}\ns {}\nt {}\n", fi.kind, net.n, net.arcs.len(), net.s, net.t);
            for v in 0..net.n {
                let terminal = v == net.s || v == net.t;
                match (net.vertex_cap[v], net.vertex_lower[v]) {
                    (0, 0) if terminal => {}
                    (c, 0) => out += &format!("n {v} {c}\n"),
                    (c, l) => out += &format!("n {v} {c} {l}\n"),
                }
            }
            for a in &net.arcs {
                let linear = match a.cost {
                    Cost::Linear(c) => c,
                    Cost::Convex(_) => 0,
                };
                out += &format!("a {} {} {} {}\n", a.from, a.to, a.cap, linear);
                if a.lower > 0 {
                    out += &format!("l {} {} {}\n", a.from, a.to, a.lower);
                }
                if let Cost::Convex(points) = &a.cost {
                    for (k, c) in points {
                        out += &format!("x {} {} {k} {c}\n", a.from, a.to);
                    }
                }
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Infeasible,
    NegativeCycle,
    ProbabilisticFailure,
    InputError,
    BudgetExceeded,
    /// `verify` found a claim that does not hold.
    Rejected,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Infeasible | Status::NegativeCycle | Status::Rejected => 1,
            Status::ProbabilisticFailure => 2,
            Status::InputError | Status::BudgetExceeded => 3,
        }
    }

    fn of(e: &Error) -> Status {
        match e {
            Error::Infeasible(_) => Status::Infeasible,
            Error::NegativeCycle(_) => Status::NegativeCycle,
            Error::Probabilistic { .. } | Error::Unlucky(_) | Error::Inconsistent(_) => Status::ProbabilisticFailure,
            Error::Input(_) => Status::InputError,
            Error::Budget(_) => Status::BudgetExceeded,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub check: String,
    pub pass: bool,
}

/// Everything a command reports. `verify` re-checks it against the
/// instance without rerunning any randomized step.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Envelope {
    pub command: String,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub seed: u64,
    pub prime_bits: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backend: Option<Backend>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factor: Option<Vec<CopyId>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forest: Option<WeightedBlossomForest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bmatching: Option<BMatching>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distances: Option<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paths: Option<Vec<Vec<CopyId>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gsp: Option<GspStructure>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycle: Option<Vec<CopyId>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow: Option<FlowAssignment>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub verdicts: Vec<Verdict>,
}

impl Envelope {
    fn new(command: Command, flags: &Flags) -> Self {
        Envelope {
            command: command.to_string(),
            status: Status::Ok,
            message: None,
            seed: flags.seed,
            prime_bits: flags.prime_bits,
            backend: None,
            weight: None,
            factor: None,
            forest: None,
            bmatching: None,
            distances: None,
            paths: None,
            gsp: None,
            cycle: None,
            flow: None,
            verdicts: Vec::new(),
        }
    }

    fn fail(mut self, e: &Error) -> Self {
        self.status = Status::of(e);
        self.message = Some(e.to_string());
        self
    }

    fn check(&mut self, check: impl Into<String>, pass: bool) {
        self.verdicts.push(Verdict { check: check.into(), pass });
    }

    pub fn exit_code(&self) -> i32 {
        self.status.exit_code()
    }

    /// Plain-text report.
    pub fn summary(&self) -> String {
        let mut out = format!("status: {:?}\n", self.status);
        if let Some(m) = &self.message {
            out += &format!("message: {m}\n");
        }
        if let Some(w) = self.weight {
            out += &format!("weight: {w}\n");
        }
        if let Some(f) = &self.factor {
            let list: Vec<String> = f.iter().map(|c| format!("{}.{}", c.edge, c.copy)).collect();
            out += &format!("factor: {}\n", list.join(" "));
        }
        if let Some(b) = &self.bmatching {
            for (e, counts) in b.counts.iter().enumerate() {
                for (k, &n) in counts.iter().enumerate().filter(|x| *x.1 > 0) {
                    out += &format!("edge {e}.{k} x{n}\n");
                }
            }
        }
        if let (Some(d), Some(p)) = (&self.distances, &self.paths) {
            for (v, (dv, path)) in d.iter().zip(p).enumerate() {
                let list: Vec<String> = path.iter().map(|c| format!("{}.{}", c.edge, c.copy)).collect();
                out += &format!("d({v}) = {dv}  path: {}\n", list.join(" "));
            }
        }
        if let Some(c) = &self.cycle {
            let list: Vec<String> = c.iter().map(|c| format!("{}.{}", c.edge, c.copy)).collect();
            out += &format!("negative cycle: {}\n", list.join(" "));
        }
        if let Some(fl) = &self.flow {
            out += &format!("value: {}\ncost: {}\n", fl.value, fl.cost);
            for (i, x) in fl.flow.iter().enumerate() {
                out += &format!("arc {i}: {x}\n");
            }
        }
        for v in &self.verdicts {
            out += &format!("check {}: {}\n", v.check, if v.pass { "pass" } else { "FAIL" });
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Command {
    Ffactor,
    FfactorMax,
    Bmatch,
    Sssp,
    Maxflow,
    Mincost,
    Verify,
    Oracle,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::Ffactor => "ffactor",
            Command::FfactorMax => "ffactor-max",
            Command::Bmatch => "bmatch",
            Command::Sssp => "sssp",
            Command::Maxflow => "maxflow",
            Command::Mincost => "mincost",
            Command::Verify => "verify",
            Command::Oracle => "oracle",
        })
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "ffactor" => Command::Ffactor,
            "ffactor-max" => Command::FfactorMax,
            "bmatch" => Command::Bmatch,
            "sssp" => Command::Sssp,
            "maxflow" => Command::Maxflow,
            "mincost" => Command::Mincost,
            "verify" => Command::Verify,
            "oracle" => Command::Oracle,
            other => return Err(Error::input(format!("unknown command {other:?}"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flags {
    pub seed: u64,
    pub prime_bits: u32,
    pub backend: Backend,
    /// Attach certificate verdicts to the envelope.
    pub certify: bool,
}

impl Default for Flags {
    fn default() -> Self {
        Flags { seed: 0, prime_bits: DEFAULT_PRIME_BITS, backend: Backend::Algebraic, certify: false }
    }
}

fn graph_of(inst: &Instance) -> Result<&GraphInstance> {
    match inst {
        Instance::Graph(g) => Ok(g),
        Instance::Flow(_) => Err(Error::input("this command needs a graph instance")),
    }
}

fn network_of(inst: &Instance) -> Result<&FlowNetwork> {
    match inst {
        Instance::Flow(f) => Ok(&f.network),
        Instance::Graph(_) => Err(Error::input("this command needs a flow instance")),
    }
}

fn subset(copies: &[CopyId]) -> EdgeSubset {
    copies.iter().copied().collect()
}

fn is_negative_cycle(g: &Multigraph, cycle: &[CopyId]) -> bool {
    if cycle.is_empty() || subset(cycle).validate(g).is_err() || subset(cycle).len() != cycle.len() {
        return false;
    }
    let mut deg = vec![0usize; g.n()];
    for c in cycle {
        let e = g.edge(c.edge);
        deg[e.u] += 1;
        deg[e.v] += 1;
    }
    let w: i64 = cycle.iter().map(|&c| g.weight(c)).sum();
    deg.iter().all(|&d| d == 0 || d == 2) && w < 0
}

fn is_walk_to(g: &Multigraph, v: Vertex, t: Vertex, path: &[CopyId]) -> bool {
    let mut x = v;
    for c in path {
        if c.edge >= g.m() || c.copy >= g.edge(c.edge).mult() {
            return false;
        }
        let e = g.edge(c.edge);
        if e.u != x && e.v != x {
            return false;
        }
        x = e.other(x);
    }
    x == t
}

/// Solve `command` on the instance text. The envelope of a `verify` run
/// is `envelope`, the JSON envelope being checked.
pub fn run(command: Command, instance: &str, envelope: Option<&str>, flags: &Flags) -> Envelope {
    match parse_instance(instance) {
        Ok(inst) => run_instance(command, &inst, envelope, flags),
        Err(e) => Envelope::new(command, flags).fail(&e),
    }
}

/// [`run`] on an already parsed instance.
pub fn run_instance(command: Command, inst: &Instance, envelope: Option<&str>, flags: &Flags) -> Envelope {
    let env = Envelope::new(command, flags);
    let cfg = SolveConfig { seed: flags.seed, prime_bits: flags.prime_bits, ..SolveConfig::default() };
    let result = match command {
        Command::Verify => match envelope.map(serde_json::from_str::<Envelope>) {
            Some(Ok(claim)) => Ok(verify(&inst, claim, env.clone())),
            Some(Err(e)) => Err(Error::input(format!("bad envelope: {e}"))),
            None => Err(Error::input("verify needs an envelope")),
        },
        Command::Oracle => oracle(&inst, env.clone()),
        _ => solve(command, &inst, &cfg, flags, env.clone()),
    };
    result.unwrap_or_else(|e| env.fail(&e))
}

fn solve(command: Command, inst: &Instance, cfg: &SolveConfig, flags: &Flags, mut env: Envelope) -> Result<Envelope> {
    match command {
        Command::Ffactor => {
            let gi = graph_of(inst)?;
            let r = find_factor(&gi.graph, &gi.f, cfg)?;
            match r.factor {
                Some(f) => env.factor = Some(f.iter().copied().collect()),
                None => return Err(Error::infeasible("the graph has no f-factor")),
            }
        }
        Command::FfactorMax => {
            let gi = graph_of(inst)?;
            let r = max_weight_general(&gi.graph, &gi.f, cfg)?;
            env.weight = Some(r.weight);
            env.factor = Some(r.factor.iter().copied().collect());
            env.forest = Some(r.forest);
        }
        Command::Bmatch => {
            let gi = graph_of(inst)?;
            let r = max_weight_bmatching(&gi.graph, &gi.f, cfg)?;
            env.weight = Some(r.weight);
            env.bmatching = Some(r);
        }
        Command::Sssp => {
            let gi = graph_of(inst)?;
            let t = gi.t.ok_or_else(|| Error::input("sssp needs a sink"))?;
            env.backend = Some(flags.backend);
            match solve_sssp(&gi.graph, t, flags.backend, cfg)? {
                SsspOutcome::Structure(s) => {
                    let paths: Vec<Vec<CopyId>> =
                        (0..gi.graph.n()).map(|v| expand_path(&s, &gi.graph, v)).collect::<Result<_>>()?;
                    env.distances = Some(s.d.clone());
                    env.paths = Some(paths);
                    env.gsp = Some(*s);
                }
                SsspOutcome::Cycle(c) => {
                    env.status = Status::NegativeCycle;
                    env.message = Some(describe_cycle(&gi.graph, &c));
                    env.cycle = Some(c);
                }
            }
        }
        Command::Maxflow => env.flow = Some(max_flow(network_of(inst)?, cfg)?),
        Command::Mincost => env.flow = Some(min_cost_max_flow(network_of(inst)?, cfg)?),
        Command::Verify | Command::Oracle => unreachable!("handled by run"),
    }
    if flags.certify {
        let checked = verify(inst, env.clone(), env.clone());
        env.verdicts = checked.verdicts;
        if checked.status == Status::Rejected {
            env.status = Status::Rejected;
        }
    }
    Ok(env)
}

/// Re-check the claims of `claim` against the instance; results go into
/// `env`, whose status becomes `Rejected` if any check fails.
fn verify(inst: &Instance, claim: Envelope, mut env: Envelope) -> Envelope {
    env.seed = claim.seed;
    env.prime_bits = claim.prime_bits;
    let command: Command = match claim.command.parse() {
        Ok(c) => c,
        Err(e) => return env.fail(&e),
    };
    if claim.status != Status::Ok && claim.status != Status::NegativeCycle {
        env.check(format!("{:?} claim carries no certificate", claim.status), true);
        return env;
    }
    let outcome: Result<()> = (|| {
        match command {
            Command::Ffactor => {
                let gi = graph_of(inst)?;
                let f = subset(claim.factor.as_deref().unwrap_or_default());
                env.check("f-factor", f.validate(&gi.graph).is_ok() && f.is_factor(&gi.graph, &gi.f));
            }
            Command::FfactorMax => {
                let gi = graph_of(inst)?;
                let f = subset(claim.factor.as_deref().unwrap_or_default());
                let ok_weight = f.validate(&gi.graph).is_ok() && Some(f.weight(&gi.graph)) == claim.weight;
                env.check("reported weight", ok_weight);
                let certified = claim.forest.as_ref().is_some_and(|forest| certify_weighted_factor(&gi.graph, &gi.f, &f, forest));
                env.check("dual certificate", certified);
            }
            Command::Bmatch => {
                let gi = graph_of(inst)?;
                let ok = claim.bmatching.as_ref().is_some_and(|b| Some(b.weight) == claim.weight && certify_bmatching(&gi.graph, &gi.f, b));
                env.check("b-matching dual certificate", ok);
            }
            Command::Sssp => {
                let gi = graph_of(inst)?;
                let t = gi.t.ok_or_else(|| Error::input("sssp needs a sink"))?;
                if claim.status == Status::NegativeCycle {
                    let ok = claim.cycle.as_deref().is_some_and(|c| is_negative_cycle(&gi.graph, c));
                    env.check("negative cycle", ok);
                    return Ok(());
                }
                let Some(s) = &claim.gsp else {
                    env.check("gsp-structure present", false);
                    return Ok(());
                };
                let report = validate_gsp(s, &gi.graph);
                env.check("gsp-structure duals", report.is_valid() && s.t == t);
                env.check("distances match the structure", claim.distances.as_ref() == Some(&s.d));
                let paths_ok = claim.paths.as_ref().is_some_and(|p| {
                    p.len() == gi.graph.n()
                        && p.iter().enumerate().all(|(v, path)| {
                            is_walk_to(&gi.graph, v, t, path)
                                && path.iter().map(|&c| gi.graph.weight(c)).sum::<i64>() == s.d[v]
                        })
                });
                env.check("paths reach t with weight d(v)", paths_ok);
            }
            Command::Maxflow | Command::Mincost => {
                let net = network_of(inst)?;
                let ok = claim.flow.as_ref().is_some_and(|fl| check_flow(net, &fl.flow).ok() == Some((fl.value, fl.cost)));
                env.check("feasible flow with the reported value and cost", ok);
            }
            Command::Verify | Command::Oracle => {
                env.check("nothing to verify", true);
            }
        }
        Ok(())
    })();
    if let Err(e) = outcome {
        return env.fail(&e);
    }
    if env.verdicts.iter().any(|v| !v.pass) {
        env.status = Status::Rejected;
    }
    env
}

/// Brute-force answer for the instance kind, within the default budget.
fn oracle(inst: &Instance, mut env: Envelope) -> Result<Envelope> {
    let budget = OracleBudget::default();
    match inst {
        Instance::Graph(gi) => match gi.kind {
            InstanceKind::Ffactor => match brute_max_weight(&gi.graph, &gi.f, budget)? {
                Some((w, f)) => {
                    env.weight = Some(w);
                    env.factor = Some(f.iter().copied().collect());
                }
                None => return Err(Error::infeasible("the graph has no f-factor")),
            },
            InstanceKind::Bmatch => {
                let (m, _) = materialize(&gi.graph, &gi.f);
                match brute_max_weight(&m, &gi.f, budget)? {
                    Some((w, _)) => env.weight = Some(w),
                    None => return Err(Error::infeasible("no perfect b-matching")),
                }
            }
            _ => {
                let t = gi.t.ok_or_else(|| Error::input("sssp needs a sink"))?;
                match brute_shortest(&gi.graph, t, budget)? {
                    ShortestOutcome::NegativeCycle(c) => {
                        env.status = Status::NegativeCycle;
                        env.message = Some(describe_cycle(&gi.graph, &c));
                        env.cycle = Some(c);
                    }
                    ShortestOutcome::Distances(_) => {
                        let mut d = Vec::new();
                        let mut paths = Vec::new();
                        for p in brute_paths(&gi.graph, t, budget)? {
                            let (w, path) = p.ok_or_else(|| Error::input("graph is not connected"))?;
                            d.push(w);
                            paths.push(path);
                        }
                        env.distances = Some(d);
                        env.paths = Some(paths);
                    }
                }
            }
        },
        Instance::Flow(fi) => match brute_flow(&fi.network, budget)? {
            Some((value, cost)) => {
                env.flow = Some(FlowAssignment { flow: Vec::new(), value, cost });
            }
            None => return Err(Error::infeasible("no flow meets the bounds")),
        },
    }
    Ok(env)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRIANGLE: &str = "c a=0 b=1 t=2\np sssp 3 3\nt 2\ne 0 1 1 -2\ne 0 2 1 1\ne 1 2 1 1\n";

    #[test]
    fn path_has_no_perfect_matching() {
        let text = "p ffactor 3 2\nv 0 1\nv 1 1\nv 2 1\ne 0 1 1 0\ne 1 2 1 0\n";
        let env = run(Command::Ffactor, text, None, &Flags::default());
        assert_eq!(env.status, Status::Infeasible);
        assert_eq!(env.exit_code(), 1);
    }

    #[test]
    fn sssp_triangle_and_verify() {
        let env = run(Command::Sssp, TRIANGLE, None, &Flags::default());
        assert_eq!(env.status, Status::Ok);
        assert_eq!(env.distances.as_deref(), Some(&[-1, -1, 0][..]));
        let json = serde_json::to_string(&env).unwrap();
        let checked = run(Command::Verify, TRIANGLE, Some(&json), &Flags::default());
        assert_eq!(checked.status, Status::Ok, "{:?}", checked.verdicts);
        assert!(!checked.verdicts.is_empty());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let env = run(Command::Ffactor, "p ffactor 2 1\ne 0 5 1 0\n", None, &Flags::default());
        assert_eq!(env.status, Status::InputError);
        assert!(env.message.unwrap().contains("line 2"));
        assert!(parse_instance("p ffactor 2 1\ne 0 1 2 4\n").is_err());
        assert!(parse_instance("p ffactor 2 2\ne 0 1 1 4\n").is_err());
    }

    #[test]
    fn flow_round_trip() {
        let text = "p mincost 4 3\ns 0\nt 3\nn 1 2\nn 2 1 1\na 0 1 2 1\na 1 2 2 0\nl 1 2 1\nx 1 2 1 1\nx 1 2 2 4\na 2 3 2 0\n";
        let inst = parse_instance(text).unwrap();
        assert_eq!(parse_instance(&serialize_instance(&inst)).unwrap(), inst);
        let env = run(Command::Mincost, text, None, &Flags { certify: true, ..Flags::default() });
        assert_eq!(env.status, Status::Ok, "{:?}", env.message);
        let fl = env.flow.unwrap();
        assert_eq!((fl.value, fl.cost), (1, 2));
    }
}
