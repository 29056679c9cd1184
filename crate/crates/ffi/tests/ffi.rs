use std::ffi::CStr;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use kdv_tbc_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    let n = unsafe { kdv_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert!(n > 0);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

#[test]
fn direct_run_through_handles() {
    unsafe {
        let params = kdv_example1_params(KdvScheme::Ccn as u32, 120, 20);
        let mut problem = ptr::null_mut();
        assert_eq!(kdv_problem_new(&params, &mut problem), KdvStatus::Ok);
        let mut solver = ptr::null_mut();
        assert_eq!(kdv_solver_new(problem, false, 0, 0, &mut solver), KdvStatus::Ok);
        let n = kdv_solver_len(solver);
        assert_eq!(n, 121);
        for _ in 0..20 {
            assert_eq!(kdv_solver_step(solver), KdvStatus::Ok);
        }
        assert_eq!(kdv_solver_step(solver), KdvStatus::Finished);
        assert_eq!(kdv_solver_step_index(solver), 20);
        assert!((kdv_solver_time(solver) - 4.0).abs() < 1e-12);
        let mut u = vec![0.0; n];
        assert_eq!(kdv_solver_copy_u(solver, u.as_mut_ptr(), n), KdvStatus::Ok);
        assert!(u.iter().all(|v| v.is_finite()) && u.iter().any(|v| v.abs() > 1e-3));
        assert_eq!(kdv_solver_copy_u(solver, u.as_mut_ptr(), n - 1), KdvStatus::InvalidInput);
        kdv_solver_free(solver);
        kdv_problem_free(problem);
    }
}

#[test]
fn fast_mode_matches_core_library() {
    unsafe {
        let params = kdv_example1_params(KdvScheme::Rcn as u32, 100, 60);
        let mut problem = ptr::null_mut();
        assert_eq!(kdv_problem_new(&params, &mut problem), KdvStatus::Ok);
        let mut solver = ptr::null_mut();
        assert_eq!(kdv_solver_new(problem, true, 10, 2, &mut solver), KdvStatus::Ok);
        while kdv_solver_step(solver) == KdvStatus::Ok {}
        let mut u = vec![0.0; kdv_solver_len(solver)];
        kdv_solver_copy_u(solver, u.as_mut_ptr(), u.len());
        let spec = kdv_tbc::ProblemSpec::example1(kdv_tbc::Scheme::Rcn, 100, 60);
        let mode = kdv_tbc::solver::Mode::Fast { terms: 10, head: 2 };
        let want = kdv_tbc::solver::run(&spec, mode, &[4.0]).unwrap();
        assert_eq!(u, want.snapshots[0].u);
        kdv_solver_free(solver);
        kdv_problem_free(problem);
    }
}

#[test]
fn invalid_inputs_report_codes_and_messages() {
    unsafe {
        let mut params = kdv_example1_params(KdvScheme::Rcn as u32, 4, 20);
        let mut problem = ptr::null_mut();
        assert_eq!(kdv_problem_new(&params, &mut problem), KdvStatus::InvalidInput);
        assert!(problem.is_null());
        assert!(last_error().starts_with("invalid_input"));
        params.j = 100;
        params.u1 = 1.0;
        assert_eq!(kdv_problem_new(&params, &mut problem), KdvStatus::InvalidInput);
        assert!(last_error().contains("U1 = 0"));
        params.u1 = 0.0;
        params.scheme = 7;
        assert_eq!(kdv_problem_new(&params, &mut problem), KdvStatus::InvalidInput);
        assert_eq!(kdv_problem_new(ptr::null(), &mut problem), KdvStatus::NullPointer);
        assert_eq!(kdv_solver_step(ptr::null_mut()), KdvStatus::NullPointer);
        assert_eq!(kdv_solver_len(ptr::null()), 0);
        kdv_problem_free(ptr::null_mut());
        kdv_solver_free(ptr::null_mut());
    }
}

#[test]
fn airy_and_status_names() {
    unsafe {
        let mut v = 0.0;
        assert_eq!(kdv_airy(0.0, &mut v), KdvStatus::Ok);
        assert!((v - 0.355_028_053_887_817_2).abs() < 1e-15);
        assert_eq!(kdv_airy(200.0, &mut v), KdvStatus::OutOfRange);
        assert!(last_error().starts_with("out_of_range"));
        let name = |s: i32| CStr::from_ptr(kdv_status_name(s)).to_str().unwrap().to_string();
        assert_eq!(name(KdvStatus::Ok as i32), "ok");
        assert_eq!(name(KdvStatus::SingularSystem as i32), "singular_system");
        assert_eq!(name(-1), "unknown");
        assert_eq!(name(99), "unknown");
    }
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/kdv_tbc.h")).unwrap();
    for name in ["kdv_problem_new", "kdv_solver_new", "kdv_solver_step", "kdv_solver_copy_u", "kdv_last_error_message", "KDV_STATUS_FINISHED", "typedef struct KdvSolver KdvSolver"] {
        assert!(header.contains(name), "{name} missing from header");
    }
}

/// Compiles `tests/smoke.c` against the generated header and the static
/// library and runs it.
#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // target/<profile>/deps/<test binary>
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|p| p.parent()).unwrap().to_path_buf();
    let lib = profile_dir.join("libkdv_tbc_ffi.a");
    assert!(lib.exists(), "static library not found at {}", lib.display());
    let out = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("kdv_smoke");
    let status = Command::new("cc")
        .arg(manifest.join("tests/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&out)
        .status()
        .expect("C compiler `cc` not available");
    assert!(status.success());
    let run = Command::new(&out).output().unwrap();
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(run.status.success(), "{stdout}\n{}", String::from_utf8_lossy(&run.stderr));
    assert!(stdout.contains("steps 10"), "{stdout}");
    assert!(stdout.contains("error invalid_input"), "{stdout}");
}
