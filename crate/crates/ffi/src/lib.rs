//! C interface to `embedded_spectra`.
//!
//! Objects are opaque handles created by `es_*_new`/`es_*_build` functions
//! and released with the matching `es_*_free`. Every fallible call returns an
//! [`EsStatus`]; on failure a description is available from
//! [`es_last_error`] on the same thread until the next failing call.
//! Strings returned through out-parameters are owned by the caller and must
//! be released with [`es_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use embedded_spectra::asymptotics::{
    detect_embedded_eigenvalue, verify_construction, DecayModel, EigenSearchConfig,
};
use embedded_spectra::coeff::{CoeffEngine, CoeffKey, CoeffKind, CoeffValue, EvalPoint};
use embedded_spectra::integrator::{
    integrate_coupled_construction, integrate_prufer, log_mesh, shoot_psi_initial, ConstructionRun, Frozen,
    IntegratorConfig, ShootingConfig,
};
use embedded_spectra::phase_sets::{build_resonance_set, PhaseSet};
use embedded_spectra::potential::{plan_construction, ConstructionPlan, PotentialModel, PotentialSpec};
use embedded_spectra::rational::{parse_rational, parse_rational_list, to_f64};
use embedded_spectra::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EsStatus {
    Ok = 0,
    NullPointer = 1,
    /// Malformed argument: bad UTF-8, unparsable rational, out-of-range number.
    InvalidArgument = 2,
    InvalidSpec = 3,
    NotInResonanceShell = 4,
    NonGeneric = 5,
    Infeasible = 6,
    /// The value sits on a pole of the coefficient.
    Pole = 7,
    StepFailure = 8,
    NonConvergence = 9,
    BracketFailure = 10,
    WindowTooShort = 11,
    NotFound = 12,
    Io = 13,
    /// A Rust panic was caught at the boundary.
    Internal = 14,
}

/// Coefficient family for [`es_coeff_eval`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EsCoeffKind {
    UpperF = 0,
    UpperG = 1,
    LowerF = 2,
    LowerG = 3,
}

/// One trajectory sample; `xi` and `psi` are NaN outside construction runs.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EsSample {
    pub x: f64,
    pub theta: f64,
    pub log_r: f64,
    pub xi: f64,
    pub psi: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EsVerification {
    pub psi_inf: f64,
    pub target_psi: f64,
    pub b: f64,
    pub lambda_abs: f64,
    pub ratio: f64,
    pub psi_locked: bool,
    pub decay_rate: bool,
    pub slope_residual: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EsDetection {
    /// Boundary angle in `[0, pi)`.
    pub theta_boundary: f64,
    pub b: f64,
}

/// Exact coefficient engine with its memo table.
pub struct EsEngine(CoeffEngine);

/// A potential with its resolved description and construction plan.
pub struct EsPotential {
    spec: PotentialSpec,
    plan: ConstructionPlan,
    model: PotentialModel,
}

/// An integrated trajectory, together with the recorded phase profile of
/// construction runs.
pub struct EsTrajectory(ConstructionRun);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(EsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::ParseRational { .. } | Error::OrderCap { .. } | Error::InvalidCoefficient(_) => {
                EsStatus::InvalidArgument
            }
            Error::InvalidSpec(_) | Error::Json(_) | Error::Trajectory(_) => EsStatus::InvalidSpec,
            Error::NotInResonanceShell { .. } => EsStatus::NotInResonanceShell,
            Error::NonGeneric(_) => EsStatus::NonGeneric,
            Error::Infeasible(_) => EsStatus::Infeasible,
            Error::StepFailure { .. } => EsStatus::StepFailure,
            Error::NonConvergence(_) => EsStatus::NonConvergence,
            Error::BracketFailure(_) => EsStatus::BracketFailure,
            Error::WindowTooShort(_) => EsStatus::WindowTooShort,
            Error::NotFound(_) => EsStatus::NotFound,
            Error::Io(_) => EsStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(EsStatus::InvalidArgument, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> EsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EsStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            EsStatus::Internal
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure(EsStatus::NullPointer, format!("{name} is null")))
}

unsafe fn out<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| Failure(EsStatus::NullPointer, format!("{name} is null")))
}

unsafe fn text<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(EsStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| invalid(format!("{name}: {e}")))
}

fn owned_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|e| Failure(EsStatus::Internal, e.to_string()))
}

fn check_range(x_max: f64, x0: f64, samples: usize, tol: f64) -> Result<(), Failure> {
    if !(x_max > x0 && x0 > 0.0) || samples < 2 || !(tol > 0.0) {
        return Err(invalid(format!(
            "need x_max > x0 > 0, samples >= 2 and tol > 0 (x_max = {x_max}, x0 = {x0}, samples = {samples}, tol = {tol})"
        )));
    }
    Ok(())
}

/// Message of the last failing call on this thread; empty if none. Valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn es_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn es_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn es_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Candidate energies of the phase set `phases` (comma-separated rationals)
/// at order `p`, as JSON.
///
/// # Safety
/// `phases` must be a NUL-terminated string; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn es_resonance_set_json(
    phases: *const c_char,
    p: usize,
    out_json: *mut *mut c_char,
) -> EsStatus {
    guard(|| {
        let slot = out(out_json, "out_json")?;
        let phases = parse_rational_list(text(phases, "phases")?)?;
        if p < 2 {
            return Err(invalid(format!("p must be at least 2, got {p}")));
        }
        let set = build_resonance_set(&PhaseSet::new(phases), p);
        let json = serde_json::to_string(&set).map_err(Error::from)?;
        *slot = owned_string(json)?;
        Ok(())
    })
}

/// Engine evaluating coefficients up to order `cap`; 0 selects the default.
#[no_mangle]
pub extern "C" fn es_engine_new(cap: usize) -> *mut EsEngine {
    let engine = if cap == 0 {
        CoeffEngine::new()
    } else {
        CoeffEngine::with_cap(cap)
    };
    Box::into_raw(Box::new(EsEngine(engine)))
}

/// # Safety
/// `engine` must be null or a handle from [`es_engine_new`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn es_engine_free(engine: *mut EsEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// Exact value of a coefficient at `eta` and comma-separated `phases`
/// (`order` of them; null means all zero). The exact rational goes to
/// `out_exact` (may be null) and its nearest double to `out_value`.
/// Returns [`EsStatus::Pole`] on a nonremovable singularity.
///
/// # Safety
/// `engine` must be a live handle; string arguments NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn es_coeff_eval(
    engine: *const EsEngine,
    kind: EsCoeffKind,
    order: usize,
    harmonic: usize,
    eta: *const c_char,
    phases: *const c_char,
    out_value: *mut f64,
    out_exact: *mut *mut c_char,
) -> EsStatus {
    guard(|| {
        let engine = &borrow(engine, "engine")?.0;
        let value = out(out_value, "out_value")?;
        let key = CoeffKey::new(order, harmonic)?;
        let eta = parse_rational(text(eta, "eta")?)?;
        let phis = if phases.is_null() {
            vec![Default::default(); order]
        } else {
            parse_rational_list(text(phases, "phases")?)?
        };
        let kind = match kind {
            EsCoeffKind::UpperF => CoeffKind::UpperF,
            EsCoeffKind::UpperG => CoeffKind::UpperG,
            EsCoeffKind::LowerF => CoeffKind::LowerF,
            EsCoeffKind::LowerG => CoeffKind::LowerG,
        };
        match engine.eval(kind, key, &EvalPoint::new(eta, phis))? {
            CoeffValue::Finite(r) => {
                *value = to_f64(&r);
                if let Some(slot) = out_exact.as_mut() {
                    *slot = owned_string(CoeffValue::Finite(r).to_string())?;
                }
                Ok(())
            }
            pole => {
                *value = f64::NAN;
                Err(Failure(EsStatus::Pole, pole.to_string()))
            }
        }
    })
}

/// Parses a JSON potential description, resolves a `"constraint"`
/// amplitude and computes the construction plan.
///
/// # Safety
/// `json` must be NUL-terminated; `out_potential` must be writable.
#[no_mangle]
pub unsafe extern "C" fn es_potential_build(json: *const c_char, out_potential: *mut *mut EsPotential) -> EsStatus {
    guard(|| {
        let slot = out(out_potential, "out_potential")?;
        *slot = ptr::null_mut();
        let spec = PotentialSpec::from_json(text(json, "json")?)?.resolve_constraint()?;
        let plan = plan_construction(&spec, &CoeffEngine::new())?;
        let model = PotentialModel::from_plan(&spec, &plan);
        *slot = Box::into_raw(Box::new(EsPotential { spec, plan, model }));
        Ok(())
    })
}

/// # Safety
/// `potential` must be null or a handle from [`es_potential_build`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn es_potential_free(potential: *mut EsPotential) {
    if !potential.is_null() {
        drop(Box::from_raw(potential));
    }
}

/// `V(x)` with the aggregate phase frozen at `xi`.
///
/// # Safety
/// `potential` must be a live handle; `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn es_potential_value(
    potential: *const EsPotential,
    x: f64,
    xi: f64,
    out_value: *mut f64,
) -> EsStatus {
    guard(|| {
        let p = borrow(potential, "potential")?;
        *out(out_value, "out_value")? = p.model.value(x, xi);
        Ok(())
    })
}

/// The construction plan as JSON.
///
/// # Safety
/// `potential` must be a live handle; `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn es_potential_plan_json(potential: *const EsPotential, out_json: *mut *mut c_char) -> EsStatus {
    guard(|| {
        let p = borrow(potential, "potential")?;
        let slot = out(out_json, "out_json")?;
        *slot = owned_string(serde_json::to_string(&p.plan).map_err(Error::from)?)?;
        Ok(())
    })
}

/// Forward Prüfer run from `x0` to `x_max` with the phase frozen at 0 and
/// `theta(x0) = theta0`, sampled on a logarithmic mesh.
///
/// # Safety
/// `potential` must be a live handle; `out_trajectory` writable.
#[no_mangle]
pub unsafe extern "C" fn es_simulate_forward(
    potential: *const EsPotential,
    theta0: f64,
    x_max: f64,
    samples: usize,
    tol: f64,
    out_trajectory: *mut *mut EsTrajectory,
) -> EsStatus {
    guard(|| {
        let p = borrow(potential, "potential")?;
        let slot = out(out_trajectory, "out_trajectory")?;
        *slot = ptr::null_mut();
        check_range(x_max, p.spec.x0, samples, tol)?;
        let pot = Frozen { model: &p.model, xi: 0.0 };
        let mesh = log_mesh(p.spec.x0, x_max, samples);
        let t = integrate_prufer(&pot, to_f64(&p.spec.energy), theta0, 0.0, &mesh, &IntegratorConfig::with_tol(tol))?;
        *slot = Box::into_raw(Box::new(EsTrajectory(ConstructionRun { trajectory: t, profile: None })));
        Ok(())
    })
}

/// Phase-locked construction: shoots `xi(x0)` on a `grid`-point circle mesh
/// to within `shoot_tol` of the target limit, then integrates the coupled
/// system. Requires a plan with a dynamic phase.
///
/// # Safety
/// `potential` must be a live handle; `out_trajectory` writable;
/// `out_xi0` may be null.
#[no_mangle]
pub unsafe extern "C" fn es_construct(
    potential: *const EsPotential,
    x_max: f64,
    samples: usize,
    tol: f64,
    grid: usize,
    shoot_tol: f64,
    out_xi0: *mut f64,
    out_trajectory: *mut *mut EsTrajectory,
) -> EsStatus {
    guard(|| {
        let p = borrow(potential, "potential")?;
        let slot = out(out_trajectory, "out_trajectory")?;
        *slot = ptr::null_mut();
        check_range(x_max, p.spec.x0, samples, tol)?;
        if !p.plan.dynamic {
            return Err(Failure(EsStatus::InvalidSpec, "plan has no dynamic phase".into()));
        }
        if grid < 2 || !(shoot_tol > 0.0) {
            return Err(invalid("need grid >= 2 and shoot_tol > 0"));
        }
        let energy = to_f64(&p.spec.energy);
        let icfg = IntegratorConfig::with_tol(tol);
        let cfg = ShootingConfig {
            energy,
            theta0: 0.0,
            mesh: log_mesh(p.spec.x0, x_max, samples),
            target: p.plan.target_psi,
            exponent: DecayModel::from_spec(&p.spec).transient,
            tol: shoot_tol,
            grid,
            max_bisections: 60,
        };
        let shot = shoot_psi_initial(&p.model, &cfg, &icfg)?;
        let run = integrate_coupled_construction(&p.model, energy, 0.0, shot.xi0, &cfg.mesh, &icfg, true)?;
        if let Some(xi0) = out_xi0.as_mut() {
            *xi0 = shot.xi0;
        }
        *slot = Box::into_raw(Box::new(EsTrajectory(run)));
        Ok(())
    })
}

/// # Safety
/// `trajectory` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn es_trajectory_free(trajectory: *mut EsTrajectory) {
    if !trajectory.is_null() {
        drop(Box::from_raw(trajectory));
    }
}

/// Number of samples; 0 for a null handle.
///
/// # Safety
/// `trajectory` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn es_trajectory_len(trajectory: *const EsTrajectory) -> usize {
    trajectory.as_ref().map_or(0, |t| t.0.trajectory.samples.len())
}

/// # Safety
/// `trajectory` must be a live handle; `out_sample` writable.
#[no_mangle]
pub unsafe extern "C" fn es_trajectory_sample(
    trajectory: *const EsTrajectory,
    index: usize,
    out_sample: *mut EsSample,
) -> EsStatus {
    guard(|| {
        let t = &borrow(trajectory, "trajectory")?.0.trajectory;
        let slot = out(out_sample, "out_sample")?;
        let s = t
            .samples
            .get(index)
            .ok_or_else(|| invalid(format!("index {index} out of range 0..{}", t.samples.len())))?;
        *slot = EsSample {
            x: s.x,
            theta: s.theta,
            log_r: s.log_r,
            xi: s.xi.unwrap_or(f64::NAN),
            psi: s.psi.unwrap_or(f64::NAN),
        };
        Ok(())
    })
}

/// Phase-locking, decay-rate and slope verdicts for a construction run.
///
/// # Safety
/// Both handles must be live; `out_report` writable.
#[no_mangle]
pub unsafe extern "C" fn es_verify(
    potential: *const EsPotential,
    trajectory: *const EsTrajectory,
    out_report: *mut EsVerification,
) -> EsStatus {
    guard(|| {
        let p = borrow(potential, "potential")?;
        let t = borrow(trajectory, "trajectory")?;
        let slot = out(out_report, "out_report")?;
        let r = verify_construction(&p.spec, &p.plan, &t.0.trajectory)?;
        *slot = EsVerification {
            psi_inf: r.psi_inf,
            target_psi: r.target_psi,
            b: r.b,
            lambda_abs: r.lambda_abs,
            ratio: r.ratio,
            psi_locked: r.verdicts.psi_locked,
            decay_rate: r.verdicts.decay_rate,
            slope_residual: r.verdicts.slope_residual,
        };
        Ok(())
    })
}

/// Integrates the decaying solution backward from `x_max` and reports the
/// boundary angle at 0. `construction` is the forward run of a dynamic plan
/// (from [`es_construct`]) and must be null for frozen plans. Returns
/// [`EsStatus::NotFound`] when the solution is not square integrable.
///
/// # Safety
/// `potential` must be a live handle, `construction` null or live,
/// `out_detection` writable.
#[no_mangle]
pub unsafe extern "C" fn es_detect_eigenvalue(
    potential: *const EsPotential,
    construction: *const EsTrajectory,
    x_max: f64,
    tol: f64,
    out_detection: *mut EsDetection,
) -> EsStatus {
    guard(|| {
        let p = borrow(potential, "potential")?;
        let slot = out(out_detection, "out_detection")?;
        check_range(x_max, p.spec.x0, 2, tol)?;
        let forward = construction.as_ref().map(|t| &t.0);
        if p.plan.dynamic && forward.and_then(|f| f.profile.as_ref()).is_none() {
            return Err(invalid("a dynamic plan needs the construction run from es_construct"));
        }
        let cfg = EigenSearchConfig::for_spec(&p.spec, x_max, IntegratorConfig::with_tol(tol));
        let d = detect_embedded_eigenvalue(&p.spec, &p.plan, &p.model, forward, &cfg)?;
        *slot = EsDetection {
            theta_boundary: d.theta_boundary,
            b: d.fit.b,
        };
        Ok(())
    })
}
