use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use qmarginal_ffi::*;

fn last_error() -> String {
    let p = qm_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

const SINGLE_QUBIT: &str = r#"{"n": 1, "subsets": [[1]], "marginals": [[[[1,0],[0,0]],[[0,0],[0,0]]]], "beta": 0.1}"#;
const MIXED: &str = r#"{"n": 1, "matrix": [[[0.5,0],[0,0]],[[0,0],[0.5,0]]]}"#;

#[test]
fn lh_round_trip_and_ground_energy() {
    unsafe {
        let mut lh = ptr::null_mut();
        assert_eq!(qm_lh_generate(3, 3, 2, 0.2, true, 11, &mut lh), QmStatus::Ok);
        let mut json = ptr::null_mut();
        assert_eq!(qm_lh_to_json(lh, &mut json), QmStatus::Ok);
        let mut parsed = ptr::null_mut();
        assert_eq!(qm_lh_parse(json, &mut parsed), QmStatus::Ok);
        let mut json2 = ptr::null_mut();
        assert_eq!(qm_lh_to_json(parsed, &mut json2), QmStatus::Ok);
        assert_eq!(CStr::from_ptr(json), CStr::from_ptr(json2));
        let (mut a, mut b) = (0.0, 1.0);
        assert_eq!(qm_lh_min_eigenvalue(lh, &mut a), QmStatus::Ok);
        assert_eq!(qm_lh_min_eigenvalue(parsed, &mut b), QmStatus::Ok);
        assert_eq!(a, b);
        qm_string_free(json);
        qm_string_free(json2);
        qm_lh_free(parsed);
        qm_lh_free(lh);
    }
}

#[test]
fn reduce_one_qubit() {
    let lh = CString::new(r#"{"n": 1, "terms": [{"subset": [1], "matrix": [[[0,0],[0,0]],[[0,0],[1,0]]]}], "a": 0.1, "b": 0.4}"#).unwrap();
    unsafe {
        let mut h = ptr::null_mut();
        assert_eq!(qm_lh_parse(lh.as_ptr(), &mut h), QmStatus::Ok);
        let mut ans = QmDecision::No;
        assert_eq!(qm_lh_reduce(h, ptr::null(), 3, 1, &mut ans), QmStatus::Ok);
        assert_eq!(ans, QmDecision::Yes);
        assert_eq!(qm_lh_reduce(h, ptr::null(), 2, 1, &mut ans), QmStatus::Config);
        assert!(last_error().contains("odd"));
        let bad_cfg = CString::new(r#"{"nope": 1}"#).unwrap();
        assert_eq!(qm_lh_reduce(h, bad_cfg.as_ptr(), 1, 1, &mut ans), QmStatus::Schema);
        qm_lh_free(h);
    }
}

#[test]
fn check_and_verifier_gap() {
    let inst = CString::new(SINGLE_QUBIT).unwrap();
    let state = CString::new(MIXED).unwrap();
    unsafe {
        let mut c = ptr::null_mut();
        assert_eq!(qm_consistency_parse(inst.as_ptr(), &mut c), QmStatus::Ok);
        let mut d = QmDecision::No;
        let mut dist = -1.0;
        assert_eq!(qm_consistency_check(c, ptr::null(), &mut d, &mut dist), QmStatus::Ok);
        assert_eq!(d, QmDecision::Yes);
        assert!(dist < 1e-6);
        assert_eq!(qm_consistency_check(c, ptr::null(), &mut d, ptr::null_mut()), QmStatus::Ok);
        let mut s = ptr::null_mut();
        assert_eq!(qm_state_parse(state.as_ptr(), &mut s), QmStatus::Ok);
        let mut gap = 0.0;
        assert_eq!(qm_verifier_gap(c, s, &mut gap), QmStatus::Ok);
        assert!((gap - 0.5).abs() < 1e-12);
        qm_state_free(s);
        qm_consistency_free(c);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut h = ptr::null_mut();
        assert_eq!(qm_lh_parse(ptr::null(), &mut h), QmStatus::NullOrInvalidArgument);
        let bad = CString::new("{\n\"n\": 1,\n\"terms\": [}").unwrap();
        assert_eq!(qm_lh_parse(bad.as_ptr(), &mut h), QmStatus::Schema);
        assert!(last_error().contains("line 3"));
        assert!(h.is_null());
        let mut out = 0.0;
        assert_eq!(qm_lh_min_eigenvalue(ptr::null(), &mut out), QmStatus::NullOrInvalidArgument);
        assert_eq!(qm_lh_generate(2, 1, 3, 0.2, true, 0, &mut h), QmStatus::Config);
        qm_lh_free(ptr::null_mut());
        qm_string_free(ptr::null_mut());
    }
    assert!(!unsafe { CStr::from_ptr(qm_version()) }.to_bytes().is_empty());
}

#[test]
fn header_lists_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/qmarginal.h")).unwrap();
    for f in [
        "qm_last_error", "qm_version", "qm_string_free", "qm_lh_parse", "qm_lh_generate", "qm_lh_to_json",
        "qm_lh_min_eigenvalue", "qm_lh_reduce", "qm_lh_free", "qm_consistency_parse", "qm_consistency_check",
        "qm_consistency_free", "qm_state_parse", "qm_state_free", "qm_verifier_gap",
    ] {
        assert!(header.contains(&format!("{f}(")), "{f} missing from header");
    }
    assert!(header.contains("typedef struct QmLocalHamiltonian QmLocalHamiltonian;"));
}

/// Compiles tests/c/smoke.c against the header and static library.
#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // The test binary lives in <target>/<profile>/deps; the library one level up.
    let exe = std::env::current_exe().unwrap();
    let lib_dir = exe.parent().and_then(|d| d.parent()).unwrap().to_path_buf();
    let lib = lib_dir.join("libqmarginal_ffi.a");
    if !lib.exists() {
        eprintln!("skipping: {} not built", lib.display());
        return;
    }
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let out = tempfile_path("qm_smoke");
    let status = Command::new(&cc)
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&out)
        .status();
    match status {
        Err(e) => eprintln!("skipping: cannot run {cc}: {e}"),
        Ok(s) => {
            assert!(s.success(), "C compilation failed");
            let run = Command::new(&out).output().unwrap();
            let stdout = String::from_utf8_lossy(&run.stdout);
            assert!(run.status.success(), "{stdout}{}", String::from_utf8_lossy(&run.stderr));
            assert!(stdout.contains("answer=YES"), "{stdout}");
            let _ = std::fs::remove_file(&out);
        }
    }
}

fn tempfile_path(stem: &str) -> PathBuf {
    std::env::temp_dir().join(format!("{stem}_{}", std::process::id()))
}
