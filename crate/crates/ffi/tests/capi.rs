use std::ffi::{CStr, CString};
use std::ptr;

use fw_ffi::*;

fn last_error() -> String {
    let p = fw_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn simplex_domain(dim: usize) -> CString {
    CString::new(format!(r#"{{"variant":"simplex","dim":{dim}}}"#)).unwrap()
}

#[test]
fn solve_projection_onto_simplex() {
    let center = [0.6, 0.5, -0.2];
    let dom = simplex_domain(3);
    let mut p = ptr::null_mut();
    let st = unsafe { fw_problem_new_squared_distance(3, center.as_ptr(), dom.as_ptr(), &mut p) };
    assert_eq!(st, FwStatus::Ok);
    assert_eq!(unsafe { fw_problem_dim(p) }, 3);

    for variant in [FwVariant::Afw, FwVariant::Pfw, FwVariant::Fcfw, FwVariant::Mnp] {
        let mut r = ptr::null_mut();
        assert_eq!(unsafe { fw_solve(p, variant, 1e-10, 1000, &mut r) }, FwStatus::Ok);
        let mut status = FwSolveStatus::MaxIter;
        assert_eq!(unsafe { fw_result_status(r, &mut status) }, FwStatus::Ok);
        assert_eq!(status, FwSolveStatus::Converged, "{variant:?}");
        let mut x = [0.0; 3];
        assert_eq!(unsafe { fw_result_x(r, x.as_mut_ptr(), 3) }, FwStatus::Ok);
        // projection of (0.6, 0.5, -0.2) onto the simplex is (0.55, 0.45, 0)
        assert!((x[0] - 0.55).abs() < 1e-6 && (x[1] - 0.45).abs() < 1e-6 && x[2].abs() < 1e-6, "{x:?}");
        let (mut value, mut gap) = (0.0, 0.0);
        assert_eq!(unsafe { fw_result_value_gap(r, &mut value, &mut gap) }, FwStatus::Ok);
        assert!(gap <= 1e-10);
        assert!((value - 0.5 * (0.05f64.powi(2) * 2.0 + 0.04)).abs() < 1e-8);
        assert!(unsafe { fw_result_iterations(r) } >= 1);

        let mut csv = ptr::null_mut();
        assert_eq!(unsafe { fw_result_trace_csv(r, &mut csv) }, FwStatus::Ok);
        let text = unsafe { CStr::from_ptr(csv) }.to_str().unwrap().to_owned();
        assert!(text.lines().any(|l| l.starts_with("iter,kind,")));
        assert!(text.lines().count() >= 2);
        unsafe { fw_string_free(csv) };
        unsafe { fw_result_free(r) };
    }
    unsafe { fw_problem_free(p) };
}

#[test]
fn quadratic_problem_from_row_major() {
    // f = ½ xᵀ diag(2, 4) x − (2, 4)ᵀx has its minimizer at (1, 1), outside the simplex
    let q = [2.0, 0.0, 0.0, 4.0];
    let b = [-2.0, -4.0];
    let dom = simplex_domain(2);
    let mut p = ptr::null_mut();
    let st = unsafe { fw_problem_new_quadratic(2, q.as_ptr(), b.as_ptr(), 0.0, dom.as_ptr(), &mut p) };
    assert_eq!(st, FwStatus::Ok);
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { fw_solve(p, FwVariant::Afw, 1e-12, 1000, &mut r) }, FwStatus::Ok);
    let mut x = [0.0; 2];
    assert_eq!(unsafe { fw_result_x(r, x.as_mut_ptr(), 2) }, FwStatus::Ok);
    // on x1 + x2 = 1: minimize x1² − 2x1 + 2x2² − 4x2 → x1 = 1/3
    assert!((x[0] - 1.0 / 3.0).abs() < 1e-6, "{x:?}");
    unsafe {
        fw_result_free(r);
        fw_problem_free(p);
    }
}

#[test]
fn null_pointers_are_rejected() {
    let dom = simplex_domain(2);
    let mut p = ptr::null_mut();
    let st = unsafe { fw_problem_new_squared_distance(2, ptr::null(), dom.as_ptr(), &mut p) };
    assert_eq!(st, FwStatus::NullPointer);
    assert!(p.is_null());
    assert!(last_error().contains("center"));

    let c = [0.0, 0.0];
    let st = unsafe { fw_problem_new_squared_distance(2, c.as_ptr(), dom.as_ptr(), ptr::null_mut()) };
    assert_eq!(st, FwStatus::NullPointer);

    let mut r = ptr::null_mut();
    assert_eq!(
        unsafe { fw_solve(ptr::null(), FwVariant::Fw, 1e-6, 10, &mut r) },
        FwStatus::NullPointer
    );
    assert!(r.is_null());
    let mut s = FwSolveStatus::Converged;
    assert_eq!(unsafe { fw_result_status(ptr::null(), &mut s) }, FwStatus::NullPointer);
    assert_eq!(unsafe { fw_result_iterations(ptr::null()) }, 0);
    assert_eq!(unsafe { fw_problem_dim(ptr::null()) }, 0);
    unsafe {
        fw_problem_free(ptr::null_mut());
        fw_result_free(ptr::null_mut());
        fw_string_free(ptr::null_mut());
    }
}

#[test]
fn error_codes_and_messages() {
    let c = [0.0, 0.0, 0.0];
    let mut p = ptr::null_mut();

    let dom = simplex_domain(2);
    let st = unsafe { fw_problem_new_squared_distance(3, c.as_ptr(), dom.as_ptr(), &mut p) };
    assert_eq!(st, FwStatus::DimensionMismatch);
    assert!(p.is_null());

    let bad = CString::new(r#"{"variant":"nonsense"}"#).unwrap();
    let st = unsafe { fw_problem_new_squared_distance(3, c.as_ptr(), bad.as_ptr(), &mut p) };
    assert_eq!(st, FwStatus::InvalidDomain);
    assert!(!last_error().is_empty());

    let dom3 = simplex_domain(3);
    let st = unsafe { fw_problem_new_squared_distance(0, c.as_ptr(), dom3.as_ptr(), &mut p) };
    assert_eq!(st, FwStatus::InvalidArgument);

    // indefinite Q
    let q = [1.0, 0.0, 0.0, -1.0];
    let b = [0.0, 0.0];
    let st = unsafe { fw_problem_new_quadratic(2, q.as_ptr(), b.as_ptr(), 0.0, dom.as_ptr(), &mut p) };
    assert_eq!(st, FwStatus::InvalidObjective);

    let nan = [f64::NAN, 0.0];
    let st = unsafe { fw_problem_new_squared_distance(2, nan.as_ptr(), dom.as_ptr(), &mut p) };
    assert_ne!(st, FwStatus::Ok);
    assert!(p.is_null());
}

#[test]
fn result_buffer_too_small() {
    let c = [0.2, 0.3, 0.5];
    let dom = simplex_domain(3);
    let mut p = ptr::null_mut();
    unsafe { fw_problem_new_squared_distance(3, c.as_ptr(), dom.as_ptr(), &mut p) };
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { fw_solve(p, FwVariant::Pfw, 1e-8, 100, &mut r) }, FwStatus::Ok);
    let mut x = [0.0; 2];
    assert_eq!(unsafe { fw_result_x(r, x.as_mut_ptr(), 2) }, FwStatus::DimensionMismatch);
    unsafe {
        fw_result_free(r);
        fw_problem_free(p);
    }
}

#[test]
fn pyramidal_width_of_unit_square() {
    let pts = [0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0];
    let mut w = 0.0;
    assert_eq!(unsafe { fw_pwidth(pts.as_ptr(), 4, 2, 500, &mut w) }, FwStatus::Ok);
    assert!((w - 0.5f64.sqrt()).abs() < 0.02 * 0.5f64.sqrt(), "{w}");

    let one = [1.0, 2.0];
    assert_eq!(unsafe { fw_pwidth(one.as_ptr(), 1, 2, 100, &mut w) }, FwStatus::Unavailable);
    assert_eq!(unsafe { fw_pwidth(ptr::null(), 4, 2, 100, &mut w) }, FwStatus::NullPointer);
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(fw_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn generated_header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/fw_ffi.h")).unwrap();
    assert!(header.contains("#ifndef FW_FFI_H"));
    for name in [
        "typedef struct FwProblem FwProblem;",
        "typedef struct FwResult FwResult;",
        "FW_STATUS_OK = 0",
        "FW_STATUS_PANIC = 8",
        "fw_problem_new_quadratic(",
        "fw_problem_new_squared_distance(",
        "fw_problem_free(",
        "fw_solve(",
        "fw_result_x(",
        "fw_result_trace_csv(",
        "fw_string_free(",
        "fw_pwidth(",
        "fw_last_error(",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

#[test]
fn generated_header_compiles_as_c() {
    let Ok(cc) = std::env::var("CC").or_else(|_| {
        ["cc", "gcc", "clang"]
            .into_iter()
            .find(|c| std::process::Command::new(c).arg("--version").output().is_ok())
            .map(String::from)
            .ok_or(())
    }) else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let dir = tempfile_dir();
    let src = dir.join("use_header.c");
    std::fs::write(
        &src,
        "#include \"fw_ffi.h\"\n\
         int probe(void) {\n\
           FwProblem *p = 0; FwResult *r = 0; double c[2] = {0, 0};\n\
           FwStatus st = fw_problem_new_squared_distance(2, c, \"{}\", &p);\n\
           if (st == FW_STATUS_OK) st = fw_solve(p, FW_VARIANT_AFW, 1e-9, 10, &r);\n\
           fw_result_free(r); fw_problem_free(p);\n\
           return (int)st;\n\
         }\n",
    )
    .unwrap();
    let out = std::process::Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include"))
        .arg(&src)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn tempfile_dir() -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("fw_ffi_header_{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
