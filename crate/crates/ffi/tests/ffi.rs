use std::ffi::{CStr, CString};
use std::io::Write;
use std::ptr;

use sigaug_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(sigaug_last_error()) }.to_string_lossy().into_owned()
}

fn edge(u: usize, v: usize, sign: i8) -> SigaugEdge {
    SigaugEdge { u, v, sign }
}

fn four_node_graph() -> *mut SigaugGraph {
    // balanced {0,1,2}: + + +; unbalanced {0,2,3}: + + -
    let edges = [edge(0, 1, 1), edge(1, 2, 1), edge(0, 2, 1), edge(2, 3, 1), edge(0, 3, -1)];
    let mut g = ptr::null_mut();
    let st = unsafe { sigaug_graph_from_edges(4, edges.as_ptr(), edges.len(), &mut g) };
    assert_eq!(st, SigaugStatus::Ok);
    g
}

#[test]
fn graph_queries() {
    let g = four_node_graph();
    unsafe {
        assert_eq!(sigaug_graph_num_nodes(g), 4);
        assert_eq!(sigaug_graph_num_edges(g), 5);
        let mut d = 0.0;
        assert_eq!(sigaug_graph_density(g, &mut d), SigaugStatus::Ok);
        assert!((d - 10.0 / 12.0).abs() < 1e-15);
        let mut t = SigaugTriangleCounts::default();
        assert_eq!(sigaug_graph_triangles(g, &mut t), SigaugStatus::Ok);
        assert_eq!(t, SigaugTriangleCounts { balanced: 1, unbalanced: 1 });
        let mut bd = 0.0;
        assert_eq!(sigaug_graph_balance_degree(g, &mut bd), SigaugStatus::Ok);
        assert_eq!(bd, 0.5);
        let mut p = SigaugEdgeProfile::default();
        assert_eq!(sigaug_graph_edge_profile(g, 2, 0, &mut p), SigaugStatus::Ok);
        assert_eq!((p.balanced, p.unbalanced, p.local_degree, p.difficulty), (1, 1, 0.0, 0.5));
        assert_eq!(sigaug_graph_edge_profile(g, 1, 3, &mut p), SigaugStatus::InvalidArgument);
        assert!(last_error().contains("not in the graph"));
        sigaug_graph_free(g);
    }
}

#[test]
fn error_codes() {
    unsafe {
        let mut g = ptr::null_mut();
        let bad = [edge(0, 0, 1)];
        assert_eq!(sigaug_graph_from_edges(2, bad.as_ptr(), 1, &mut g), SigaugStatus::InvalidArgument);
        assert!(g.is_null());
        let bad = [edge(0, 1, 3)];
        assert_eq!(sigaug_graph_from_edges(2, bad.as_ptr(), 1, &mut g), SigaugStatus::InvalidArgument);
        assert_eq!(sigaug_graph_from_edges(2, ptr::null(), 1, &mut g), SigaugStatus::NullPointer);
        let mut d = 0.0;
        assert_eq!(sigaug_graph_density(ptr::null(), &mut d), SigaugStatus::NullPointer);
        assert_eq!(sigaug_graph_num_nodes(ptr::null()), 0);
        sigaug_graph_free(ptr::null_mut());

        let path = CString::new("/nonexistent/graph.csv").unwrap();
        assert_eq!(sigaug_graph_load(path.as_ptr(), ptr::null(), &mut g), SigaugStatus::Io);
        assert!(!last_error().is_empty());

        let edges = [edge(0, 1, 1)];
        assert_eq!(sigaug_graph_from_edges(3, edges.as_ptr(), 1, &mut g), SigaugStatus::Ok);
        let mut bd = 0.0;
        assert_eq!(sigaug_graph_balance_degree(g, &mut bd), SigaugStatus::Undefined);
        sigaug_graph_free(g);
    }
}

#[test]
fn load_from_file() {
    let mut f = tempfile::Builder::new().suffix(".csv").tempfile().unwrap();
    writeln!(f, "1,2,5,0\n2,3,-2,0\n3,1,1,0\n2,1,4,0").unwrap();
    let path = CString::new(f.path().to_str().unwrap()).unwrap();
    let mut g = ptr::null_mut();
    unsafe {
        assert_eq!(sigaug_graph_load(path.as_ptr(), ptr::null(), &mut g), SigaugStatus::Ok);
        assert_eq!(sigaug_graph_num_nodes(g), 3);
        assert_eq!(sigaug_graph_num_edges(g), 3);
        let mut t = SigaugTriangleCounts::default();
        sigaug_graph_triangles(g, &mut t);
        assert_eq!(t, SigaugTriangleCounts { balanced: 0, unbalanced: 1 });
        sigaug_graph_free(g);
        let tsv = CString::new("sign-tsv").unwrap();
        assert_eq!(sigaug_graph_load(path.as_ptr(), tsv.as_ptr(), &mut g), SigaugStatus::Parse);
    }
}

#[test]
fn pacing_and_auc() {
    unsafe {
        let mut g = 0.0;
        assert_eq!(sigaug_pacing(5, 0.3, 10, &mut g), SigaugStatus::Ok);
        assert!((g - 0.65).abs() < 1e-12);
        assert_eq!(sigaug_pacing(50, 0.3, 10, &mut g), SigaugStatus::Ok);
        assert_eq!(g, 1.0);
        assert_eq!(sigaug_pacing(0, 0.0, 10, &mut g), SigaugStatus::InvalidArgument);

        let scores = [0.9, 0.8, 0.4, 0.3];
        let labels = [1i8, -1, 1, -1];
        let mut auc = 0.0;
        assert_eq!(sigaug_compute_auc(scores.as_ptr(), labels.as_ptr(), 4, &mut auc), SigaugStatus::Ok);
        assert_eq!(auc, 0.75);
        let same = [1i8; 4];
        assert_eq!(sigaug_compute_auc(scores.as_ptr(), same.as_ptr(), 4, &mut auc), SigaugStatus::Undefined);
        assert_eq!(sigaug_compute_auc(ptr::null(), labels.as_ptr(), 4, &mut auc), SigaugStatus::NullPointer);
    }
}

#[test]
fn experiment_json() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("factions.tsv");
    let mut f = std::fs::File::create(&path).unwrap();
    for e in sigaug::evalbench::synthetic::two_factions(30, 0.3, 0.05, 2) {
        writeln!(f, "{}\t{}\t{}", e.u, e.v, e.sign.value()).unwrap();
    }
    drop(f);
    let ds = CString::new(path.to_str().unwrap()).unwrap();
    let cfg = CString::new(r#"{"pipeline":"baseline","seeds":[0],"encoder":{"embed_dim":4,"epochs":5}}"#).unwrap();
    let mut out = ptr::null_mut();
    unsafe {
        assert_eq!(sigaug_run_experiment_json(ds.as_ptr(), cfg.as_ptr(), &mut out), SigaugStatus::Ok, "{}", last_error());
        let report: serde_json::Value = serde_json::from_str(CStr::from_ptr(out).to_str().unwrap()).unwrap();
        assert_eq!(report["pipeline"], "baseline");
        assert_eq!(report["seeds"].as_array().unwrap().len(), 1);
        sigaug_string_free(out);

        let bad = CString::new(r#"{"pipline":"sga"}"#).unwrap();
        assert_eq!(sigaug_run_experiment_json(ds.as_ptr(), bad.as_ptr(), &mut out), SigaugStatus::InvalidArgument);
        assert!(out.is_null());
    }
}

#[test]
fn header_lists_exports() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/sigaug.h")).unwrap();
    for name in [
        "sigaug_last_error",
        "sigaug_graph_load",
        "sigaug_graph_from_edges",
        "sigaug_graph_free",
        "sigaug_graph_triangles",
        "sigaug_graph_edge_profile",
        "sigaug_pacing",
        "sigaug_compute_auc",
        "sigaug_run_experiment_json",
        "sigaug_string_free",
        "SIGAUG_STATUS_UNDEFINED = 5",
        "typedef struct SigaugGraph SigaugGraph;",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}
