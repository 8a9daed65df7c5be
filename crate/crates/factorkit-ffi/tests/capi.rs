use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use factorkit_ffi::*;

fn triangle() -> *mut FkGraph {
    let g = fk_graph_new(3);
    unsafe {
        assert_eq!(fk_graph_add_edge(g, 0, 1, [-2i64].as_ptr(), 1), FkStatus::Ok);
        assert_eq!(fk_graph_add_edge(g, 0, 2, [1i64].as_ptr(), 1), FkStatus::Ok);
        assert_eq!(fk_graph_add_edge(g, 1, 2, [1i64].as_ptr(), 1), FkStatus::Ok);
    }
    g
}

#[test]
fn sssp_through_handles() {
    let g = triangle();
    unsafe {
        assert_eq!(fk_graph_set_sink(g, 2), FkStatus::Ok);
        let mut r = ptr::null_mut();
        assert_eq!(fk_graph_solve(g, FkCommand::Sssp, fk_flags_default(), &mut r), FkStatus::Ok);
        let mut d = 0;
        let got: Vec<i64> = (0..3)
            .map(|v| {
                assert_eq!(fk_result_distance(r, v, &mut d), FkStatus::Ok);
                d
            })
            .collect();
        assert_eq!(got, vec![-1, -1, 0]);
        assert_eq!(fk_result_distance(r, 3, &mut d), FkStatus::OutOfRange);
        fk_result_free(r);
        fk_graph_free(g);
    }
}

#[test]
fn weighted_factor_and_json() {
    let g = triangle();
    unsafe {
        for v in 0..3 {
            fk_graph_set_degree(g, v, 2);
        }
        let mut r = ptr::null_mut();
        let flags = FkFlags { certify: true, ..fk_flags_default() };
        assert_eq!(fk_graph_solve(g, FkCommand::FfactorMax, flags, &mut r), FkStatus::Ok);
        let mut w = 0;
        assert_eq!(fk_result_weight(r, &mut w), FkStatus::Ok);
        assert_eq!(w, 0);
        assert_eq!(fk_result_factor_len(r), 3);
        let json = fk_result_json(r);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        assert!(text.contains("\"dual certificate\""));
        fk_string_free(json);
        fk_result_free(r);
        fk_graph_free(g);
    }
}

#[test]
fn errors_are_codes() {
    unsafe {
        let g = fk_graph_new(2);
        assert_eq!(fk_graph_add_edge(g, 0, 5, [1i64].as_ptr(), 1), FkStatus::OutOfRange);
        assert_eq!(fk_graph_set_degree(g, 0, 1), FkStatus::Ok);
        assert_eq!(fk_graph_set_degree(ptr::null_mut(), 0, 1), FkStatus::NullPointer);
        let mut r = ptr::null_mut();
        assert_eq!(fk_graph_solve(g, FkCommand::Ffactor, fk_flags_default(), &mut r), FkStatus::Infeasible);
        assert!(!fk_result_message(r).is_null());
        fk_result_free(r);
        fk_graph_free(g);

        let bad = CString::new("p ffactor 2 1\ne 0 1 2 7\n").unwrap();
        let mut r = ptr::null_mut();
        assert_eq!(fk_run(FkCommand::Ffactor, bad.as_ptr(), ptr::null(), fk_flags_default(), &mut r), FkStatus::InputError);
        let msg = CStr::from_ptr(fk_result_message(r)).to_str().unwrap();
        assert!(msg.contains("line 2"), "{msg}");
        fk_result_free(r);
    }
}

#[test]
fn flow_and_verify_through_text() {
    let inst = CString::new("p maxflow 4 4\ns 0\nt 3\nn 1 1\na 0 1 2\na 0 2 1\na 1 3 2\na 2 3 2\n").unwrap();
    unsafe {
        let mut r = ptr::null_mut();
        assert_eq!(fk_run(FkCommand::Maxflow, inst.as_ptr(), ptr::null(), fk_flags_default(), &mut r), FkStatus::Ok);
        let (mut value, mut cost) = (0, 0);
        assert_eq!(fk_result_flow(r, &mut value, &mut cost), FkStatus::Ok);
        assert_eq!(value, 2);
        let json = fk_result_json(r);
        let mut checked = ptr::null_mut();
        assert_eq!(fk_run(FkCommand::Verify, inst.as_ptr(), json, fk_flags_default(), &mut checked), FkStatus::Ok);
        fk_string_free(json);
        fk_result_free(checked);
        fk_result_free(r);
    }
}

#[test]
fn header_compiles_and_links_from_c() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap();
    let lib = profile_dir.join("libfactorkit_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let dir = std::env::temp_dir().join(format!("factorkit-capi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let src = dir.join("main.c");
    std::fs::write(
        &src,
        r#"#include "factorkit.h"
#include <stdio.h>
int main(void) {
    FkGraph *g = fk_graph_new(2);
    int64_t w[2] = {3, 5};
    if (fk_graph_add_edge(g, 0, 1, w, 2) != FK_STATUS_OK) return 10;
    fk_graph_set_degree(g, 0, 1);
    fk_graph_set_degree(g, 1, 1);
    FkResult *r = NULL;
    if (fk_graph_solve(g, FK_COMMAND_FFACTOR_MAX, fk_flags_default(), &r) != FK_STATUS_OK) return 11;
    int64_t best = 0;
    fk_result_weight(r, &best);
    fk_result_free(r);
    fk_graph_free(g);
    printf("%lld\n", (long long)best);
    return best == 5 ? 0 : 12;
}
"#,
    )
    .unwrap();
    let bin = dir.join("main");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .expect("C compiler");
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "{out:?}");
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "5");
    std::fs::remove_dir_all(&dir).ok();
}
