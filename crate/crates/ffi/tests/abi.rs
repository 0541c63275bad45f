//! The exported C functions, called from Rust and from a C program built
//! against the generated header.

use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use nalgebra::DVector;
use rhsim::dynamics::{crba, forward_dynamics, gravity, ExternalForces};
use rhsim::scenarios::{sample_roadheader, ROADHEADER_ROBOT};
use rhsim::sim::total_energy;
use rhsim_ffi::*;

struct Model(*mut RhsimModel);

impl Drop for Model {
    fn drop(&mut self) {
        unsafe { rhsim_model_free(self.0) }
    }
}

fn load(text: &str) -> Result<Model, (RhsimStatus, String)> {
    let c = CString::new(text).unwrap();
    let mut out = ptr::null_mut();
    let s = unsafe { rhsim_model_from_robot_text(c.as_ptr(), &mut out) };
    if s == RhsimStatus::Ok {
        assert!(!out.is_null());
        Ok(Model(out))
    } else {
        assert!(out.is_null());
        Err((s, last_error()))
    }
}

fn last_error() -> String {
    let p = rhsim_last_error_message();
    assert!(!p.is_null(), "no error message");
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

fn roadheader() -> Model {
    load(ROADHEADER_ROBOT).unwrap()
}

#[test]
fn dynamics_match_the_library() {
    let m = roadheader();
    let n = unsafe { rhsim_model_dof(m.0) };
    assert_eq!(n, 7);
    let lib = sample_roadheader().build().unwrap();
    let q: Vec<f64> = (0..n).map(|i| 0.3 * i as f64 - 0.7).collect();
    let qd: Vec<f64> = (0..n).map(|i| 0.1 * i as f64).collect();
    let tau: Vec<f64> = (0..n).map(|i| 100.0 * (i as f64 - 3.0)).collect();
    let mut qdd = vec![0.0; n];
    let mut back = vec![0.0; n];
    let mut h = vec![0.0; n * n];
    unsafe {
        assert_eq!(rhsim_forward_dynamics(m.0, q.as_ptr(), qd.as_ptr(), tau.as_ptr(), 9.8, qdd.as_mut_ptr()), RhsimStatus::Ok);
        assert_eq!(rhsim_inverse_dynamics(m.0, q.as_ptr(), qd.as_ptr(), qdd.as_ptr(), 9.8, back.as_mut_ptr()), RhsimStatus::Ok);
        assert_eq!(rhsim_mass_matrix(m.0, q.as_ptr(), h.as_mut_ptr()), RhsimStatus::Ok);
    }
    assert!(rhsim_last_error_message().is_null());
    let (qv, qdv, tv) = (DVector::from_vec(q.clone()), DVector::from_vec(qd), DVector::from_vec(tau.clone()));
    let want = forward_dynamics(&lib, &qv, &qdv, &tv, &ExternalForces::none(), &gravity(9.8)).unwrap();
    assert_eq!(qdd, want.as_slice());
    for (a, b) in back.iter().zip(&tau) {
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }
    let hm = crba(&lib, &qv).unwrap();
    for i in 0..n {
        for j in 0..n {
            assert_eq!(h[i * n + j], hm[(i, j)]);
        }
    }
}

#[test]
fn load_errors_carry_status_and_message() {
    let (s, msg) = load("robot x\nbody oops\n").err().unwrap();
    assert!(matches!(s, RhsimStatus::ParseError), "{s:?}");
    assert!(msg.contains("line"), "{msg}");

    let mut doc = sample_roadheader();
    let mut close = doc.joints.last().unwrap().clone();
    close.name = "loop".into();
    close.predecessor = doc.joints.last().unwrap().successor.clone();
    close.successor = doc.joints[0].successor.clone();
    doc.joints.push(close);
    let (s, _) = load(&rhsim::model::serialize_robotics(&doc)).err().unwrap();
    assert_eq!(s, RhsimStatus::ModelError);
}

#[test]
fn null_arguments_are_rejected() {
    let m = roadheader();
    let mut out = ptr::null_mut();
    unsafe {
        assert_eq!(rhsim_model_from_robot_text(ptr::null(), &mut out), RhsimStatus::NullPointer);
        assert_eq!(rhsim_model_from_robot_text(c"robot x".as_ptr(), ptr::null_mut()), RhsimStatus::NullPointer);
        assert_eq!(rhsim_model_dof(ptr::null()), 0);
        let q = [0.0; 7];
        let mut o = [0.0; 7];
        assert_eq!(rhsim_forward_dynamics(ptr::null(), q.as_ptr(), q.as_ptr(), q.as_ptr(), 9.8, o.as_mut_ptr()), RhsimStatus::NullPointer);
        assert_eq!(rhsim_forward_dynamics(m.0, ptr::null(), q.as_ptr(), q.as_ptr(), 9.8, o.as_mut_ptr()), RhsimStatus::NullPointer);
        assert!(last_error().contains('q'));
        assert_eq!(rhsim_mass_matrix(m.0, q.as_ptr(), ptr::null_mut()), RhsimStatus::NullPointer);
        assert_eq!(rhsim_sim_step(ptr::null_mut()), RhsimStatus::NullPointer);
        let mut e = 0.0;
        assert_eq!(rhsim_sim_energy(ptr::null(), &mut e), RhsimStatus::NullPointer);
        // freeing null is a no-op
        rhsim_model_free(ptr::null_mut());
        rhsim_sim_free(ptr::null_mut());
    }
}

#[test]
fn simulator_steps_and_reports_energy() {
    let m = roadheader();
    let mut sim = ptr::null_mut();
    unsafe {
        assert_eq!(rhsim_sim_new(m.0, RhsimIntegrator::Rk4, 1.0 / 60.0, 16, 9.8, &mut sim), RhsimStatus::Ok);
        // the simulator outlives the model handle
        drop(m);
        let mut t = -1.0;
        let mut q = [f64::NAN; 7];
        let mut qd = [f64::NAN; 7];
        assert_eq!(rhsim_sim_state(sim, &mut t, q.as_mut_ptr(), qd.as_mut_ptr()), RhsimStatus::Ok);
        assert_eq!((t, q, qd), (0.0, [0.0; 7], [0.0; 7]));

        assert_eq!(rhsim_sim_set_command(sim, 7, 1.0), RhsimStatus::InvalidArgument);
        assert!(last_error().contains("out of range"));
        assert_eq!(rhsim_sim_set_command(sim, 3, 5.0), RhsimStatus::Ok);
        for _ in 0..30 {
            assert_eq!(rhsim_sim_step(sim), RhsimStatus::Ok);
        }
        assert_eq!(rhsim_sim_state(sim, &mut t, q.as_mut_ptr(), qd.as_mut_ptr()), RhsimStatus::Ok);
        assert!((t - 0.5).abs() < 1e-12, "{t}");
        assert!(q[3] != 0.0);
        let mut e = f64::NAN;
        assert_eq!(rhsim_sim_energy(sim, &mut e), RhsimStatus::Ok);
        let lib = sample_roadheader().build().unwrap();
        assert_eq!(e, total_energy(&lib, &DVector::from_row_slice(&q), &DVector::from_row_slice(&qd), 9.8));
        rhsim_sim_free(sim);
    }
}

#[test]
fn bad_config_is_invalid_argument() {
    let m = roadheader();
    let mut sim = ptr::null_mut();
    let s = unsafe { rhsim_sim_new(m.0, RhsimIntegrator::SymplecticEuler, 1.0 / 60.0, 0, 9.8, &mut sim) };
    assert_eq!(s, RhsimStatus::InvalidArgument);
    assert!(sim.is_null());
    assert!(last_error().contains("substeps"));
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/rhsim.h")).unwrap();
    let src = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .lines()
        .filter_map(|l| l.trim().strip_prefix("pub unsafe extern \"C\" fn ").or_else(|| l.trim().strip_prefix("pub extern \"C\" fn ")))
        .map(|l| l.split('(').next().unwrap())
        .collect();
    assert_eq!(exports.len(), 13);
    for f in exports {
        assert!(header.contains(&format!("{f}(")), "{f} missing from header");
    }
    assert!(header.contains("typedef struct RhsimModel RhsimModel;"));
    assert!(header.contains("RHSIM_STATUS_OK = 0"));
}

fn artifact_dir() -> PathBuf {
    // target/<profile>/deps/abi-xxxx -> target/<profile>
    std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_the_static_library() {
    let Some(cc) = ["cc", "gcc", "clang"].into_iter().find(|c| Command::new(c).arg("--version").output().is_ok()) else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let lib = artifact_dir().join("librhsim_ffi.a");
    assert!(lib.exists(), "{} not built", lib.display());
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let out = Command::new(cc)
        .arg("-std=c11")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(manifest.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl"])
        .arg("-o")
        .arg(&exe)
        .output()
        .unwrap();
    assert!(out.status.success(), "compile failed:\n{}", String::from_utf8_lossy(&out.stderr));

    let robot = dir.path().join("roadheader.robot");
    std::fs::write(&robot, ROADHEADER_ROBOT).unwrap();
    let run = Command::new(&exe).arg(&robot).output().unwrap();
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(run.status.success(), "exit {:?}: {}{}", run.status.code(), stdout, String::from_utf8_lossy(&run.stderr));
    assert!(stdout.starts_with("dof=7 "), "{stdout}");
    let roundtrip: f64 = stdout.split("roundtrip=").nth(1).unwrap().split_whitespace().next().unwrap().parse().unwrap();
    assert!(roundtrip < 1e-9, "{stdout}");
    assert!(stdout.contains("t=1.000000"), "{stdout}");
}
