use std::ffi::{CStr, CString};
use std::ptr;

use shiftbeam_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(sb_last_error()).to_string_lossy().into_owned() }
}

#[test]
fn solve_roundtrip() {
    unsafe {
        let name = CString::new("ex1").unwrap();
        let mut p = ptr::null_mut();
        assert_eq!(sb_problem_example(name.as_ptr(), 1e-2, &mut p), SbStatus::Ok);
        let (mut beta, mut delta) = (0.0, 0.0);
        assert_eq!(sb_problem_constants(p, &mut beta, &mut delta), SbStatus::Ok);
        assert_eq!(beta, 1.0);
        assert!(delta > 0.0);

        let label = CString::new("BS-BS").unwrap();
        let mut m = ptr::null_mut();
        assert_eq!(sb_mesh_build(p, label.as_ptr(), 32, 2, 0.0, &mut m), SbStatus::Ok);
        assert_eq!(sb_mesh_n_cells(m), 32);
        let mut nodes = vec![0.0; 33];
        assert_eq!(sb_mesh_nodes(m, nodes.as_mut_ptr(), nodes.len()), SbStatus::Ok);
        assert_eq!((nodes[0], nodes[16], nodes[32]), (0.0, 1.0, 2.0));
        assert_eq!(sb_mesh_nodes(m, nodes.as_mut_ptr(), 10), SbStatus::BufferTooSmall);

        let mut s = ptr::null_mut();
        assert_eq!(sb_solve(p, m, 2, &mut s), SbStatus::Ok);
        let mut v = SbFieldValue::default();
        assert_eq!(sb_solution_eval(s, 0.0, &mut v), SbStatus::Ok);
        assert!(v.u.abs() < 1e-12);
        assert_eq!(sb_solution_eval(s, 1.0, &mut v), SbStatus::Ok);
        assert!(v.u > 0.0);
        assert_eq!(sb_solution_eval(s, 2.5, &mut v), SbStatus::OutOfDomain);
        assert!(last_error().contains("2.5"), "{}", last_error());

        let mut e = 0.0;
        assert_eq!(sb_energy_error(p, s, 4, 128, &mut e), SbStatus::Ok);
        assert!(e > 0.0 && e < 1e-1, "{e}");

        sb_solution_free(s);
        sb_mesh_free(m);
        sb_problem_free(p);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(sb_problem_constant(1e-3, 3, 1.0, 2.0, 1.0, 1.0, &mut p), SbStatus::InvalidInput);
        assert!(p.is_null());
        // c too small against d: coercivity fails
        assert_eq!(sb_problem_constant(1e-3, 1, 1.0, 0.1, 1.0, 1.0, &mut p), SbStatus::Assumption);
        assert!(!last_error().is_empty());
        assert_eq!(sb_problem_example(ptr::null(), 1e-3, &mut p), SbStatus::NullPointer);

        assert_eq!(sb_problem_constant(1e-3, 1, 1.0, 2.0, 1.0, 1.0, &mut p), SbStatus::Ok);
        let bad = CString::new("nope").unwrap();
        let mut m = ptr::null_mut();
        assert_eq!(sb_mesh_build(p, bad.as_ptr(), 32, 2, 0.0, &mut m), SbStatus::InvalidInput);
        let label = CString::new("BS-BS").unwrap();
        assert_eq!(sb_mesh_build(p, label.as_ptr(), 30, 2, 0.0, &mut m), SbStatus::InvalidInput);
        assert_eq!(sb_mesh_build(p, label.as_ptr(), 64, 1, 0.0, &mut m), SbStatus::Ok);
        let mut s = ptr::null_mut();
        let mut e = 0.0;
        assert_eq!(sb_solve(p, m, 1, &mut s), SbStatus::Ok);
        assert_eq!(sb_energy_error(p, s, 2, 64, &mut e), SbStatus::Domination);
        assert_eq!(sb_solve(ptr::null(), m, 1, &mut s), SbStatus::NullPointer);

        sb_solution_free(s);
        sb_mesh_free(m);
        sb_problem_free(p);
        sb_problem_free(ptr::null_mut());
    }
}

#[test]
fn version_and_header() {
    let v = unsafe { CStr::from_ptr(sb_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/shiftbeam.h")).unwrap();
    for f in ["sb_problem_example", "sb_mesh_build", "sb_solve", "sb_solution_eval", "sb_last_error", "SB_STATUS_SINGULAR"] {
        assert!(header.contains(f), "{f} missing from header");
    }
}
