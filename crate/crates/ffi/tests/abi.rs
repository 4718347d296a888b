use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use plurality_ffi::*;

fn last_error() -> String {
    let p = pl_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn config(counts: &[u64]) -> *mut PlConfiguration {
    let mut out = ptr::null_mut();
    let st = unsafe { pl_configuration_new(counts.as_ptr(), counts.len(), &mut out) };
    assert_eq!(st, PlStatus::Ok);
    out
}

#[test]
fn configuration_round_trip() {
    let c = config(&[3, 1]);
    unsafe {
        assert_eq!(pl_configuration_k(c), 2);
        assert_eq!(pl_configuration_n(c), 4);
        let mut b = PlBiasStats::default();
        assert_eq!(pl_bias_stats(c, &mut b), PlStatus::Ok);
        assert_eq!((b.m, b.s, b.plurality, b.majority_set_size), (3, 2, 0, 1));
        assert!((b.alpha - 0.125).abs() < 1e-15 && b.gamma.abs() < 1e-15);

        let mut p = [0.0; 2];
        assert_eq!(
            pl_pick_probabilities_3maj(c, p.as_mut_ptr(), 2),
            PlStatus::Ok
        );
        assert!((p[0] + p[1] - 1.0).abs() < 1e-15);
        assert_eq!(
            pl_pick_probabilities_3maj(c, p.as_mut_ptr(), 1),
            PlStatus::BufferSize
        );
        pl_configuration_free(c);
    }
}

#[test]
fn errors_are_reported() {
    let mut out = ptr::null_mut();
    let st = unsafe { pl_configuration_new([0u64, 0].as_ptr(), 2, &mut out) };
    assert_eq!(st, PlStatus::InvalidArgument);
    assert!(out.is_null());
    assert!(!last_error().is_empty());

    let st = unsafe { pl_configuration_new(ptr::null(), 2, &mut out) };
    assert_eq!(st, PlStatus::NullPointer);

    let text = CString::new("k=3\n0 0 1 -> 2\n").unwrap();
    let mut rule = ptr::null_mut();
    assert_eq!(
        unsafe { pl_rule_parse(text.as_ptr(), &mut rule) },
        PlStatus::Parse
    );
    assert!(last_error().contains('2'), "{}", last_error());

    unsafe {
        pl_configuration_free(ptr::null_mut());
        pl_rule_free(ptr::null_mut());
        pl_chain_free(ptr::null_mut());
    }
}

#[test]
fn classification() {
    let name = CString::new("median").unwrap();
    let mut rule = ptr::null_mut();
    unsafe {
        assert_eq!(pl_rule_builtin(name.as_ptr(), &mut rule), PlStatus::Ok);
        let mut c = PlClassification::default();
        assert_eq!(pl_classify(rule, 3, &mut c), PlStatus::Ok);
        assert!(c.clear_majority && !c.uniform && !c.in_m3);
        assert!(c.has_uniform_counterexample);
        assert_eq!(c.counterexample_colors, [0, 1, 2]);
        assert_eq!(c.counterexample_deltas, [0, 6, 0]);
        pl_rule_free(rule);

        let name = CString::new("3maj").unwrap();
        assert_eq!(pl_rule_builtin(name.as_ptr(), &mut rule), PlStatus::Ok);
        assert_eq!(pl_classify(rule, 8, &mut c), PlStatus::Ok);
        assert!(c.in_m3 && !c.has_uniform_counterexample);
        pl_rule_free(rule);
    }
}

#[test]
fn trial_and_chain() {
    let c = config(&[900, 100]);
    let d = CString::new("3maj").unwrap();
    unsafe {
        let mut r = PlTrialResult::default();
        assert_eq!(pl_run_trial(c, d.as_ptr(), 1000, 7, &mut r), PlStatus::Ok);
        assert!(r.converged && r.reached_majority);
        assert_eq!(r.winner, 0);
        let mut again = PlTrialResult::default();
        pl_run_trial(c, d.as_ptr(), 1000, 7, &mut again);
        assert_eq!(r.rounds, again.rounds);
        pl_configuration_free(c);

        let mut ch = ptr::null_mut();
        assert_eq!(pl_chain_build(2, 2, d.as_ptr(), &mut ch), PlStatus::Ok);
        assert_eq!(pl_chain_state_count(ch), 3);
        let mut idx = 0usize;
        assert_eq!(
            pl_chain_state_index(ch, [1u64, 1].as_ptr(), 2, &mut idx),
            PlStatus::Ok
        );
        let mut t = 0.0;
        assert_eq!(pl_chain_absorption_time(ch, idx, &mut t), PlStatus::Ok);
        assert!((t - 2.0).abs() < 1e-12);
        let mut p = [0.0; 2];
        assert_eq!(
            pl_chain_absorption_probabilities(ch, idx, p.as_mut_ptr(), 2),
            PlStatus::Ok
        );
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12);
        assert_eq!(
            pl_chain_absorption_time(ch, 99, &mut t),
            PlStatus::InvalidArgument
        );
        pl_chain_free(ch);

        assert_eq!(
            pl_chain_build(60, 6, d.as_ptr(), &mut ch),
            PlStatus::CapExceeded
        );
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(pl_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

/// Compiles the C example against the generated header and static library.
#[test]
fn c_program_links_against_header() {
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = crate_dir.join("include/plurality.h");
    assert!(header.is_file(), "header not generated");
    let target = crate_dir.join("../../target");
    let lib = ["debug", "release"]
        .iter()
        .map(|p| target.join(p).join("libplurality_ffi.a"))
        .filter(|p| p.is_file())
        .max_by_key(|p| p.metadata().and_then(|m| m.modified()).ok());
    let Some(lib) = lib else {
        eprintln!("static library not built; skipping C link check");
        return;
    };
    let exe = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("plurality_smoke");
    let status = Command::new("cc")
        .arg(crate_dir.join("examples/smoke.c"))
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status();
    let Ok(status) = status else {
        eprintln!("no C compiler; skipping C link check");
        return;
    };
    assert!(status.success(), "C compile failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "smoke exited with {:?}", out.status);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(
        text.contains("0.740741 0.259259 2.000 3"),
        "unexpected output {text:?}"
    );
}
