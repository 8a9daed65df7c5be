//! C ABI for factorkit.
//!
//! Graphs are built through an opaque [`FkGraph`] handle, solvers return an
//! opaque [`FkResult`], and every call reports an [`FkStatus`]. Handles and
//! strings returned by this library are released with the matching
//! `fk_*_free` function.

use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use factorkit::graph::{DegreeConstraint, Multigraph};
use factorkit::io::{run, run_instance, Command, Envelope, Flags, GraphInstance, Instance, InstanceKind, Status};
use factorkit::sssp::Backend;

/// Return codes. `Ok` through `Rejected` mirror the envelope statuses.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FkStatus {
    Ok = 0,
    Infeasible = 1,
    NegativeCycle = 2,
    ProbabilisticFailure = 3,
    InputError = 4,
    BudgetExceeded = 5,
    Rejected = 6,
    NullPointer = 7,
    OutOfRange = 8,
    Panic = 9,
}

impl From<Status> for FkStatus {
    fn from(s: Status) -> Self {
        match s {
            Status::Ok => FkStatus::Ok,
            Status::Infeasible => FkStatus::Infeasible,
            Status::NegativeCycle => FkStatus::NegativeCycle,
            Status::ProbabilisticFailure => FkStatus::ProbabilisticFailure,
            Status::InputError => FkStatus::InputError,
            Status::BudgetExceeded => FkStatus::BudgetExceeded,
            Status::Rejected => FkStatus::Rejected,
        }
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FkCommand {
    Ffactor = 0,
    FfactorMax = 1,
    Bmatch = 2,
    Sssp = 3,
    Maxflow = 4,
    Mincost = 5,
    Verify = 6,
    Oracle = 7,
}

impl From<FkCommand> for Command {
    fn from(c: FkCommand) -> Self {
        match c {
            FkCommand::Ffactor => Command::Ffactor,
            FkCommand::FfactorMax => Command::FfactorMax,
            FkCommand::Bmatch => Command::Bmatch,
            FkCommand::Sssp => Command::Sssp,
            FkCommand::Maxflow => Command::Maxflow,
            FkCommand::Mincost => Command::Mincost,
            FkCommand::Verify => Command::Verify,
            FkCommand::Oracle => Command::Oracle,
        }
    }
}

/// Solver options. `backend` is 0 for algebraic, 1 for the oracle.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct FkFlags {
    pub seed: u64,
    pub prime_bits: u32,
    pub backend: u32,
    pub certify: bool,
}

impl From<FkFlags> for Flags {
    fn from(f: FkFlags) -> Self {
        Flags {
            seed: f.seed,
            prime_bits: f.prime_bits,
            backend: if f.backend == 1 { Backend::Oracle } else { Backend::Algebraic },
            certify: f.certify,
        }
    }
}

/// A multigraph with degree bounds and an optional sink.
pub struct FkGraph {
    graph: Multigraph,
    f: Vec<usize>,
    t: Option<usize>,
}

/// A solver result envelope.
pub struct FkResult {
    envelope: Envelope,
    message: Option<CString>,
}

fn guard(f: impl FnOnce() -> FkStatus) -> FkStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or(FkStatus::Panic)
}

fn finish(envelope: Envelope, out: *mut *mut FkResult) -> FkStatus {
    let status = envelope.status.into();
    let message = envelope.message.as_deref().and_then(|m| CString::new(m).ok());
    // SAFETY: callers check `out` for null before solving.
    unsafe { *out = Box::into_raw(Box::new(FkResult { envelope, message })) };
    status
}

/// Default flags: seed 0, 31-bit primes, algebraic backend, no certificate.
#[no_mangle]
pub extern "C" fn fk_flags_default() -> FkFlags {
    let f = Flags::default();
    FkFlags { seed: f.seed, prime_bits: f.prime_bits, backend: 0, certify: f.certify }
}

/// New graph on `n` vertices with no edges and all degree bounds 0.
#[no_mangle]
pub extern "C" fn fk_graph_new(n: usize) -> *mut FkGraph {
    Box::into_raw(Box::new(FkGraph { graph: Multigraph::new(n), f: vec![0; n], t: None }))
}

/// # Safety
/// `g` is null or a handle from [`fk_graph_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fk_graph_free(g: *mut FkGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Add an edge `uv` with `mult` copies of the given weights.
///
/// # Safety
/// `g` is a live handle and `weights` points to `mult` readable values.
#[no_mangle]
pub unsafe extern "C" fn fk_graph_add_edge(g: *mut FkGraph, u: usize, v: usize, weights: *const i64, mult: usize) -> FkStatus {
    guard(|| {
        if g.is_null() || (weights.is_null() && mult > 0) {
            return FkStatus::NullPointer;
        }
        let g = &mut *g;
        if u >= g.graph.n() || v >= g.graph.n() {
            return FkStatus::OutOfRange;
        }
        let w = if mult == 0 { Vec::new() } else { std::slice::from_raw_parts(weights, mult).to_vec() };
        match g.graph.add_edge(u, v, w) {
            Ok(_) => FkStatus::Ok,
            Err(_) => FkStatus::InputError,
        }
    })
}

/// Set `f(v)` (or `b(v)`).
///
/// # Safety
/// `g` is a live handle.
#[no_mangle]
pub unsafe extern "C" fn fk_graph_set_degree(g: *mut FkGraph, v: usize, f: usize) -> FkStatus {
    if g.is_null() {
        return FkStatus::NullPointer;
    }
    let g = &mut *g;
    match g.f.get_mut(v) {
        Some(slot) => {
            *slot = f;
            FkStatus::Ok
        }
        None => FkStatus::OutOfRange,
    }
}

/// Set the shortest-path sink.
///
/// # Safety
/// `g` is a live handle.
#[no_mangle]
pub unsafe extern "C" fn fk_graph_set_sink(g: *mut FkGraph, t: usize) -> FkStatus {
    if g.is_null() {
        return FkStatus::NullPointer;
    }
    let g = &mut *g;
    if t >= g.graph.n() {
        return FkStatus::OutOfRange;
    }
    g.t = Some(t);
    FkStatus::Ok
}

/// Run a graph command (`Ffactor`, `FfactorMax`, `Bmatch`, `Sssp` or
/// `Oracle`) and store the result in `*out`, also on failure.
///
/// # Safety
/// `g` is a live handle and `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn fk_graph_solve(g: *const FkGraph, command: FkCommand, flags: FkFlags, out: *mut *mut FkResult) -> FkStatus {
    guard(|| {
        if g.is_null() || out.is_null() {
            return FkStatus::NullPointer;
        }
        let g = &*g;
        let kind = match command {
            FkCommand::Ffactor | FkCommand::FfactorMax => InstanceKind::Ffactor,
            FkCommand::Bmatch => InstanceKind::Bmatch,
            FkCommand::Sssp => InstanceKind::Sssp,
            FkCommand::Oracle if g.t.is_some() => InstanceKind::Sssp,
            FkCommand::Oracle => InstanceKind::Ffactor,
            _ => return FkStatus::InputError,
        };
        let inst = Instance::Graph(GraphInstance { kind, graph: g.graph.clone(), f: DegreeConstraint::new(g.f.clone()), t: g.t });
        finish(run_instance(command.into(), &inst, None, &flags.into()), out)
    })
}

/// Run any command on an instance in the text file format. `envelope` is
/// the JSON envelope for `Verify` and may be null otherwise.
///
/// # Safety
/// `instance` and a non-null `envelope` are NUL-terminated strings, and
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn fk_run(
    command: FkCommand,
    instance: *const c_char,
    envelope: *const c_char,
    flags: FkFlags,
    out: *mut *mut FkResult,
) -> FkStatus {
    guard(|| {
        if instance.is_null() || out.is_null() {
            return FkStatus::NullPointer;
        }
        let Ok(text) = CStr::from_ptr(instance).to_str() else {
            return FkStatus::InputError;
        };
        let claim = if envelope.is_null() {
            None
        } else {
            match CStr::from_ptr(envelope).to_str() {
                Ok(s) => Some(s),
                Err(_) => return FkStatus::InputError,
            }
        };
        finish(run(command.into(), text, claim, &flags.into()), out)
    })
}

/// # Safety
/// `r` is null or a result not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fk_result_free(r: *mut FkResult) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// # Safety
/// `r` is a live result.
#[no_mangle]
pub unsafe extern "C" fn fk_result_status(r: *const FkResult) -> FkStatus {
    if r.is_null() {
        return FkStatus::NullPointer;
    }
    (*r).envelope.status.into()
}

/// Diagnostic text, or null when there is none. The string lives as long
/// as the result.
///
/// # Safety
/// `r` is a live result.
#[no_mangle]
pub unsafe extern "C" fn fk_result_message(r: *const FkResult) -> *const c_char {
    if r.is_null() {
        return ptr::null();
    }
    (*r).message.as_ref().map_or(ptr::null(), |m| m.as_ptr())
}

/// Optimal weight, for weighted commands.
///
/// # Safety
/// `r` is a live result and `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn fk_result_weight(r: *const FkResult, out: *mut i64) -> FkStatus {
    if r.is_null() || out.is_null() {
        return FkStatus::NullPointer;
    }
    match (*r).envelope.weight {
        Some(w) => {
            *out = w;
            FkStatus::Ok
        }
        None => FkStatus::OutOfRange,
    }
}

/// Number of edge copies in the factor (0 when there is none).
///
/// # Safety
/// `r` is a live result.
#[no_mangle]
pub unsafe extern "C" fn fk_result_factor_len(r: *const FkResult) -> usize {
    if r.is_null() {
        return 0;
    }
    (*r).envelope.factor.as_ref().map_or(0, Vec::len)
}

/// The `i`-th factor copy as edge index and copy index.
///
/// # Safety
/// `r` is a live result; `edge` and `copy` are writable.
#[no_mangle]
pub unsafe extern "C" fn fk_result_factor_copy(r: *const FkResult, i: usize, edge: *mut usize, copy: *mut usize) -> FkStatus {
    if r.is_null() || edge.is_null() || copy.is_null() {
        return FkStatus::NullPointer;
    }
    match (*r).envelope.factor.as_ref().and_then(|f| f.get(i)) {
        Some(c) => {
            *edge = c.edge;
            *copy = c.copy;
            FkStatus::Ok
        }
        None => FkStatus::OutOfRange,
    }
}

/// Shortest-path distance `d(v)` to the sink.
///
/// # Safety
/// `r` is a live result and `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn fk_result_distance(r: *const FkResult, v: usize, out: *mut i64) -> FkStatus {
    if r.is_null() || out.is_null() {
        return FkStatus::NullPointer;
    }
    match (*r).envelope.distances.as_ref().and_then(|d| d.get(v)) {
        Some(&d) => {
            *out = d;
            FkStatus::Ok
        }
        None => FkStatus::OutOfRange,
    }
}

/// Flow value and cost, for flow commands.
///
/// # Safety
/// `r` is a live result; `value` and `cost` are writable.
#[no_mangle]
pub unsafe extern "C" fn fk_result_flow(r: *const FkResult, value: *mut i64, cost: *mut i64) -> FkStatus {
    if r.is_null() || value.is_null() || cost.is_null() {
        return FkStatus::NullPointer;
    }
    match &(*r).envelope.flow {
        Some(f) => {
            *value = f.value;
            *cost = f.cost;
            FkStatus::Ok
        }
        None => FkStatus::OutOfRange,
    }
}

/// The full envelope as JSON; release it with [`fk_string_free`].
///
/// # Safety
/// `r` is a live result.
#[no_mangle]
pub unsafe extern "C" fn fk_result_json(r: *const FkResult) -> *mut c_char {
    if r.is_null() {
        return ptr::null_mut();
    }
    serde_json::to_string(&(*r).envelope)
        .ok()
        .and_then(|s| CString::new(s).ok())
        .map_or(ptr::null_mut(), CString::into_raw)
}

/// # Safety
/// `s` is null or a string from [`fk_result_json`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fk_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
