//! C ABI over the `sigaug` toolkit.
//!
//! Every function returns a [`SigaugStatus`]; on failure a message for the
//! calling thread is available from [`sigaug_last_error`]. Graphs are opaque
//! handles released with [`sigaug_graph_free`]; strings returned by the
//! library are released with [`sigaug_string_free`]. Panics never cross the
//! boundary and are reported as [`SigaugStatus::Panic`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use sigaug::balance::{enumerate_triangles, local_balance_degree};
use sigaug::curriculum::{pacing, PacingConfig};
use sigaug::evalbench::{auc, default_data_dir, run_experiment, Dataset, ExperimentConfig};
use sigaug::graph::{DatasetFormat, EdgeSample, Sign, SignedGraph};
use sigaug::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigaugStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    /// The quantity is undefined for this input (for example no triangles).
    Undefined = 5,
    Runtime = 6,
    Panic = 7,
}

/// Opaque signed graph handle.
pub struct SigaugGraph {
    graph: SignedGraph,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SigaugEdge {
    pub u: usize,
    pub v: usize,
    /// `1` or `-1`.
    pub sign: i8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SigaugTriangleCounts {
    pub balanced: u64,
    pub unbalanced: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SigaugEdgeProfile {
    pub balanced: u64,
    pub unbalanced: u64,
    pub local_degree: f64,
    pub difficulty: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(err: &Error) -> SigaugStatus {
    match err {
        Error::Io { .. } => SigaugStatus::Io,
        Error::Parse { .. } | Error::Json(_) | Error::Csv(_) => SigaugStatus::Parse,
        Error::EmptyInput(_) | Error::InvalidArgument(_) | Error::Config(_) | Error::EdgeNotFound(..) => {
            SigaugStatus::InvalidArgument
        }
        Error::Stage { source, .. } => status_of(source),
        _ => SigaugStatus::Runtime,
    }
}

fn fail(status: SigaugStatus, msg: impl Into<String>) -> SigaugStatus {
    set_last_error(msg);
    status
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), SigaugStatus>) -> SigaugStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            SigaugStatus::Ok
        }
        Ok(Err(status)) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(SigaugStatus::Panic, format!("panic: {msg}"))
        }
    }
}

fn check(err: Error) -> SigaugStatus {
    fail(status_of(&err), err.to_string())
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, SigaugStatus> {
    if p.is_null() {
        return Err(fail(SigaugStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(SigaugStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

unsafe fn graph_ref<'a>(g: *const SigaugGraph) -> Result<&'a SignedGraph, SigaugStatus> {
    g.as_ref()
        .map(|h| &h.graph)
        .ok_or_else(|| fail(SigaugStatus::NullPointer, "graph handle is null"))
}

unsafe fn out_ref<'a, T>(p: *mut T) -> Result<&'a mut T, SigaugStatus> {
    p.as_mut().ok_or_else(|| fail(SigaugStatus::NullPointer, "output pointer is null"))
}

/// Message describing the last failure on this thread, or an empty string.
/// The pointer is valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn sigaug_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Loads a dataset file into a symmetrized graph. `format` is
/// `"rating-csv"`, `"sign-tsv"` or null to infer from the file name.
#[no_mangle]
pub unsafe extern "C" fn sigaug_graph_load(
    path: *const c_char,
    format: *const c_char,
    out: *mut *mut SigaugGraph,
) -> SigaugStatus {
    guard(|| {
        let out = out_ref(out)?;
        *out = ptr::null_mut();
        let path = Path::new(c_str(path, "path")?);
        let format = if format.is_null() {
            DatasetFormat::infer(path)
        } else {
            c_str(format, "format")?.parse().map_err(check)?
        };
        let ds = Dataset::load(path, format).map_err(check)?;
        *out = Box::into_raw(Box::new(SigaugGraph { graph: ds.graph }));
        Ok(())
    })
}

/// Builds a graph from `len` undirected edges over nodes `0..num_nodes`.
#[no_mangle]
pub unsafe extern "C" fn sigaug_graph_from_edges(
    num_nodes: usize,
    edges: *const SigaugEdge,
    len: usize,
    out: *mut *mut SigaugGraph,
) -> SigaugStatus {
    guard(|| {
        let out = out_ref(out)?;
        *out = ptr::null_mut();
        if edges.is_null() && len > 0 {
            return Err(fail(SigaugStatus::NullPointer, "edges is null"));
        }
        let raw = if len == 0 { &[][..] } else { std::slice::from_raw_parts(edges, len) };
        let mut samples = Vec::with_capacity(len);
        for e in raw {
            let sign = Sign::try_from(e.sign).map_err(|m| fail(SigaugStatus::InvalidArgument, m))?;
            samples.push(EdgeSample::new(e.u, e.v, sign).map_err(check)?);
        }
        let graph = SignedGraph::from_edges(num_nodes, &samples).map_err(check)?;
        *out = Box::into_raw(Box::new(SigaugGraph { graph }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn sigaug_graph_free(graph: *mut SigaugGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Node count, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn sigaug_graph_num_nodes(graph: *const SigaugGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.graph.num_nodes())
}

/// Undirected edge count, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn sigaug_graph_num_edges(graph: *const SigaugGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.graph.edge_count())
}

/// `2 |E| / (n (n - 1))`.
#[no_mangle]
pub unsafe extern "C" fn sigaug_graph_density(graph: *const SigaugGraph, out: *mut f64) -> SigaugStatus {
    guard(|| {
        let g = graph_ref(graph)?;
        let out = out_ref(out)?;
        *out = g.density().map_err(check)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn sigaug_graph_triangles(
    graph: *const SigaugGraph,
    out: *mut SigaugTriangleCounts,
) -> SigaugStatus {
    guard(|| {
        let g = graph_ref(graph)?;
        let out = out_ref(out)?;
        let t = enumerate_triangles(g);
        *out = SigaugTriangleCounts { balanced: t.balanced, unbalanced: t.unbalanced };
        Ok(())
    })
}

/// Fraction of balanced triangles; `Undefined` when there are none.
#[no_mangle]
pub unsafe extern "C" fn sigaug_graph_balance_degree(graph: *const SigaugGraph, out: *mut f64) -> SigaugStatus {
    guard(|| {
        let g = graph_ref(graph)?;
        let out = out_ref(out)?;
        match enumerate_triangles(g).global_balance_degree() {
            Some(bd) => {
                *out = bd;
                Ok(())
            }
            None => Err(fail(SigaugStatus::Undefined, "graph has no triangles")),
        }
    })
}

/// Triangle profile of the existing edge `(u, v)`.
#[no_mangle]
pub unsafe extern "C" fn sigaug_graph_edge_profile(
    graph: *const SigaugGraph,
    u: usize,
    v: usize,
    out: *mut SigaugEdgeProfile,
) -> SigaugStatus {
    guard(|| {
        let g = graph_ref(graph)?;
        let out = out_ref(out)?;
        let n = g.num_nodes();
        if u >= n || v >= n {
            return Err(fail(SigaugStatus::InvalidArgument, format!("node out of range for {n} nodes")));
        }
        let sign = g
            .sign(u, v)
            .ok_or_else(|| check(Error::EdgeNotFound(u, v)))?;
        let p = local_balance_degree(g, EdgeSample { u, v, sign }).map_err(check)?;
        *out = SigaugEdgeProfile {
            balanced: p.balanced_incident,
            unbalanced: p.unbalanced_incident,
            local_degree: p.local_degree,
            difficulty: p.difficulty,
        };
        Ok(())
    })
}

/// Linear pacing `min(1, lambda0 + (1 - lambda0) t / big_t)`.
#[no_mangle]
pub unsafe extern "C" fn sigaug_pacing(t: usize, lambda0: f64, big_t: usize, out: *mut f64) -> SigaugStatus {
    guard(|| {
        let out = out_ref(out)?;
        let cfg = PacingConfig { lambda0, big_t, total_epochs: big_t.max(1) };
        cfg.validate().map_err(check)?;
        *out = pacing(t, &cfg);
        Ok(())
    })
}

/// ROC AUC of `scores` against labels in {1, -1}; `Undefined` when one
/// class is absent.
#[no_mangle]
pub unsafe extern "C" fn sigaug_compute_auc(
    scores: *const f64,
    labels: *const i8,
    len: usize,
    out: *mut f64,
) -> SigaugStatus {
    guard(|| {
        let out = out_ref(out)?;
        if scores.is_null() || labels.is_null() {
            return Err(fail(SigaugStatus::NullPointer, "scores or labels is null"));
        }
        if len == 0 {
            return Err(fail(SigaugStatus::InvalidArgument, "no scores"));
        }
        let scores = std::slice::from_raw_parts(scores, len);
        let labels: Vec<Sign> = std::slice::from_raw_parts(labels, len)
            .iter()
            .map(|&l| Sign::try_from(l))
            .collect::<Result<_, _>>()
            .map_err(|m| fail(SigaugStatus::InvalidArgument, m))?;
        if scores.iter().any(|s| s.is_nan()) {
            return Err(fail(SigaugStatus::InvalidArgument, "scores contain NaN"));
        }
        *out = auc(scores, &labels).ok_or_else(|| fail(SigaugStatus::Undefined, "only one class present"))?;
        Ok(())
    })
}

/// Runs an experiment on `dataset` (a known name or a path) with a JSON
/// experiment configuration (null or `"{}"` for defaults) and returns the
/// JSON report in `out_json`, to be freed with [`sigaug_string_free`].
#[no_mangle]
pub unsafe extern "C" fn sigaug_run_experiment_json(
    dataset: *const c_char,
    config_json: *const c_char,
    out_json: *mut *mut c_char,
) -> SigaugStatus {
    guard(|| {
        let out = out_ref(out_json)?;
        *out = ptr::null_mut();
        let spec = c_str(dataset, "dataset")?;
        let cfg: ExperimentConfig = if config_json.is_null() {
            ExperimentConfig::default()
        } else {
            serde_json::from_str(c_str(config_json, "config_json")?)
                .map_err(|e| fail(SigaugStatus::InvalidArgument, format!("config: {e}")))?
        };
        let ds = Dataset::open(spec, None, &default_data_dir()).map_err(check)?;
        let outcome = run_experiment(&ds, &cfg, None).map_err(check)?;
        let text = serde_json::to_string(&outcome.report).map_err(|e| check(e.into()))?;
        *out = CString::new(text)
            .map_err(|_| fail(SigaugStatus::Runtime, "report contains NUL"))?
            .into_raw();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn sigaug_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
