//! C ABI over the `rhsim` engine.
//!
//! Models and simulators are opaque handles created and freed by this
//! library. Every function returns an [`RhsimStatus`]; on failure the
//! message is available from [`rhsim_last_error_message`] on the same
//! thread. Vectors are caller-owned `double` buffers of length `dof`
//! (`dof * dof` row-major for the mass matrix).

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{self, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use nalgebra::DVector;
use rhsim::dynamics::{crba, forward_dynamics, gravity, rnea, ExternalForces};
use rhsim::error::Error;
use rhsim::integrate::IntegratorKind;
use rhsim::model::{parse_robotics, RobotModel};
use rhsim::sim::{default_gains, total_energy, Control, SimConfig, SimState, Simulator, UserAction};

/// Result code of every exported function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RhsimStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ParseError = 3,
    ModelError = 4,
    DynamicsError = 5,
    IntegrationError = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RhsimIntegrator {
    ExplicitEuler = 0,
    SymplecticEuler = 1,
    ExplicitMidpoint = 2,
    Rk4 = 3,
    Rk6 = 4,
}

impl From<RhsimIntegrator> for IntegratorKind {
    fn from(k: RhsimIntegrator) -> Self {
        match k {
            RhsimIntegrator::ExplicitEuler => IntegratorKind::ExplicitEuler,
            RhsimIntegrator::SymplecticEuler => IntegratorKind::SymplecticEuler,
            RhsimIntegrator::ExplicitMidpoint => IntegratorKind::ExplicitMidpoint,
            RhsimIntegrator::Rk4 => IntegratorKind::Rk4,
            RhsimIntegrator::Rk6 => IntegratorKind::Rk6,
        }
    }
}

/// A built kinematic tree.
pub struct RhsimModel {
    model: Arc<RobotModel>,
}

/// A running simulation with its own state and joint commands.
pub struct RhsimSim {
    sim: Simulator,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(RhsimStatus, String);

impl Failure {
    fn null(what: &str) -> Self {
        Failure(RhsimStatus::NullPointer, format!("{what} is null"))
    }

    fn arg(msg: impl Into<String>) -> Self {
        Failure(RhsimStatus::InvalidArgument, msg.into())
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Parse(_) => RhsimStatus::ParseError,
            Error::Model(_) => RhsimStatus::ModelError,
            Error::Dynamics(_) => RhsimStatus::DynamicsError,
            Error::Integration(_) => RhsimStatus::IntegrationError,
            _ => RhsimStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn set_error(msg: String) {
    // interior NULs would truncate the C string; replace them
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> RhsimStatus {
    match panic::catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            RhsimStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            RhsimStatus::Panic
        }
    }
}

unsafe fn model_ref<'a>(m: *const RhsimModel) -> Result<&'a RobotModel, Failure> {
    m.as_ref().map(|m| m.model.as_ref()).ok_or_else(|| Failure::null("model"))
}

unsafe fn vec_in(p: *const f64, n: usize, what: &str) -> Result<DVector<f64>, Failure> {
    if n == 0 {
        return Ok(DVector::zeros(0));
    }
    if p.is_null() {
        return Err(Failure::null(what));
    }
    Ok(DVector::from_column_slice(std::slice::from_raw_parts(p, n)))
}

unsafe fn write_out(p: *mut f64, data: &[f64], what: &str) -> Result<(), Failure> {
    if data.is_empty() {
        return Ok(());
    }
    if p.is_null() {
        return Err(Failure::null(what));
    }
    ptr::copy_nonoverlapping(data.as_ptr(), p, data.len());
    Ok(())
}

/// Parse a `.robot` document and build its kinematic tree.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer. On
/// success `*out` receives a handle to release with [`rhsim_model_free`].
#[no_mangle]
pub unsafe extern "C" fn rhsim_model_from_robot_text(text: *const c_char, out: *mut *mut RhsimModel) -> RhsimStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        *out = ptr::null_mut();
        if text.is_null() {
            return Err(Failure::null("text"));
        }
        let text = CStr::from_ptr(text).to_str().map_err(|e| Failure::arg(format!("text is not UTF-8: {e}")))?;
        let doc = parse_robotics(text).map_err(Error::from)?;
        let model = doc.build().map_err(Error::from)?;
        *out = Box::into_raw(Box::new(RhsimModel { model: Arc::new(model) }));
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle from [`rhsim_model_from_robot_text`]
/// not already freed.
#[no_mangle]
pub unsafe extern "C" fn rhsim_model_free(model: *mut RhsimModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of generalized coordinates, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live model handle.
#[no_mangle]
pub unsafe extern "C" fn rhsim_model_dof(model: *const RhsimModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.dof())
}

/// Joint accelerations `qdd` from `q`, `qd` and joint forces `tau`, under
/// gravity of magnitude `g` along −z.
///
/// # Safety
/// `model` must be live; the vectors must each hold `dof` doubles.
#[no_mangle]
pub unsafe extern "C" fn rhsim_forward_dynamics(
    model: *const RhsimModel,
    q: *const f64,
    qd: *const f64,
    tau: *const f64,
    g: f64,
    out_qdd: *mut f64,
) -> RhsimStatus {
    guard(|| {
        let m = model_ref(model)?;
        let n = m.dof();
        let (q, qd, tau) = (vec_in(q, n, "q")?, vec_in(qd, n, "qd")?, vec_in(tau, n, "tau")?);
        let qdd = forward_dynamics(m, &q, &qd, &tau, &ExternalForces::none(), &gravity(g)).map_err(Error::from)?;
        write_out(out_qdd, qdd.as_slice(), "out_qdd")
    })
}

/// Joint forces `tau` that produce accelerations `qdd`.
///
/// # Safety
/// As for [`rhsim_forward_dynamics`].
#[no_mangle]
pub unsafe extern "C" fn rhsim_inverse_dynamics(
    model: *const RhsimModel,
    q: *const f64,
    qd: *const f64,
    qdd: *const f64,
    g: f64,
    out_tau: *mut f64,
) -> RhsimStatus {
    guard(|| {
        let m = model_ref(model)?;
        let n = m.dof();
        let (q, qd, qdd) = (vec_in(q, n, "q")?, vec_in(qd, n, "qd")?, vec_in(qdd, n, "qdd")?);
        let tau = rnea(m, &q, &qd, &qdd, &ExternalForces::none(), &gravity(g)).map_err(Error::from)?;
        write_out(out_tau, tau.as_slice(), "out_tau")
    })
}

/// Joint-space inertia matrix at `q`, written row-major into `out_h`.
///
/// # Safety
/// `q` must hold `dof` doubles and `out_h` room for `dof * dof`.
#[no_mangle]
pub unsafe extern "C" fn rhsim_mass_matrix(model: *const RhsimModel, q: *const f64, out_h: *mut f64) -> RhsimStatus {
    guard(|| {
        let m = model_ref(model)?;
        let q = vec_in(q, m.dof(), "q")?;
        let h = crba(m, &q).map_err(Error::from)?;
        // symmetric, so column-major storage is also row-major
        write_out(out_h, h.as_slice(), "out_h")
    })
}

/// Start a simulation at rest at `q = 0`. `dt` is the frame length and
/// each frame takes `substeps` integrator steps. Actuation gains are the
/// engine defaults for gravity `g`.
///
/// # Safety
/// `model` must be live and `out` valid. The simulator keeps its own
/// reference to the model, so the model may be freed first.
#[no_mangle]
pub unsafe extern "C" fn rhsim_sim_new(
    model: *const RhsimModel,
    integrator: RhsimIntegrator,
    dt: f64,
    substeps: usize,
    g: f64,
    out: *mut *mut RhsimSim,
) -> RhsimStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        *out = ptr::null_mut();
        let m = model.as_ref().ok_or_else(|| Failure::null("model"))?;
        let dof = m.model.dof();
        let config = SimConfig {
            dt,
            num_substeps: substeps,
            gravity: g,
            integrator: integrator.into(),
            actuation_gain: default_gains(&m.model, g),
        };
        let sim = Simulator::new(m.model.clone(), config, SimState::at_rest(DVector::zeros(dof)))?;
        *out = Box::into_raw(Box::new(RhsimSim { sim }));
        Ok(())
    })
}

/// # Safety
/// `sim` must be null or a live handle from [`rhsim_sim_new`].
#[no_mangle]
pub unsafe extern "C" fn rhsim_sim_free(sim: *mut RhsimSim) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Hold joint `joint` at command `value`, clamped to [−1, 1], until changed.
///
/// # Safety
/// `sim` must be live.
#[no_mangle]
pub unsafe extern "C" fn rhsim_sim_set_command(sim: *mut RhsimSim, joint: usize, value: f64) -> RhsimStatus {
    guard(|| {
        let s = sim.as_mut().ok_or_else(|| Failure::null("sim"))?;
        let dof = s.sim.model().dof();
        if joint >= dof {
            return Err(Failure::arg(format!("joint {joint} out of range for {dof} DOF")));
        }
        s.sim.apply(Control::Action(UserAction::Command { joint, command: value }));
        Ok(())
    })
}

/// Advance one frame. On failure the state is the last finite one.
///
/// # Safety
/// `sim` must be live.
#[no_mangle]
pub unsafe extern "C" fn rhsim_sim_step(sim: *mut RhsimSim) -> RhsimStatus {
    guard(|| {
        let s = sim.as_mut().ok_or_else(|| Failure::null("sim"))?;
        s.sim.step_frame().map_err(Error::from)?;
        Ok(())
    })
}

/// Copy out the current time and coordinates. Any output may be null.
///
/// # Safety
/// `sim` must be live; non-null `out_q` and `out_qd` must hold `dof` doubles.
#[no_mangle]
pub unsafe extern "C" fn rhsim_sim_state(sim: *const RhsimSim, out_t: *mut f64, out_q: *mut f64, out_qd: *mut f64) -> RhsimStatus {
    guard(|| {
        let s = sim.as_ref().ok_or_else(|| Failure::null("sim"))?;
        let st = s.sim.state();
        if !out_t.is_null() {
            *out_t = st.t;
        }
        if !out_q.is_null() {
            write_out(out_q, st.q.as_slice(), "out_q")?;
        }
        if !out_qd.is_null() {
            write_out(out_qd, st.qd.as_slice(), "out_qd")?;
        }
        Ok(())
    })
}

/// Total mechanical energy of the current state, potential measured from z = 0.
///
/// # Safety
/// `sim` must be live and `out_e` valid.
#[no_mangle]
pub unsafe extern "C" fn rhsim_sim_energy(sim: *const RhsimSim, out_e: *mut f64) -> RhsimStatus {
    guard(|| {
        let s = sim.as_ref().ok_or_else(|| Failure::null("sim"))?;
        if out_e.is_null() {
            return Err(Failure::null("out_e"));
        }
        let st = s.sim.state();
        *out_e = total_energy(s.sim.model(), &st.q, &st.qd, s.sim.config().gravity);
        Ok(())
    })
}

/// Message for the last failed call on this thread, or null after a
/// success. Valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn rhsim_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}
