//! C ABI over `workfluct`.
//!
//! Every entry point returns a `WfStatus`. On failure a description is
//! available from `wf_last_error_message` on the same thread. Matrices are
//! row-major `double` arrays. Panics never cross the boundary; they surface
//! as `WF_STATUS_INTERNAL`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use workfluct::linalg::{eigendecompose, propagate};
use workfluct::protocol::{DriveKind, DriveProtocol, Schedule, DEFAULT_GAMMA_SAMPLES};
use workfluct::readout::{correct_joint, ReadoutModel};
use workfluct::tpm::{
    exp_work_moments, free_energy_difference, thermal_populations, transition_probabilities, JointProbabilityTable,
    WorkDistribution,
};
use workfluct::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    SingularModel = 4,
    InconsistentData = 5,
    ContractViolation = 6,
    Internal = 7,
}

/// Values accepted by the `kind` argument of the protocol constructors.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WfDriveKind {
    Bare = 0,
    CounterDiabatic = 1,
}

/// Statistics of `e^{−βW}` for one protocol and temperature.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct WfWorkStats {
    pub mean_exp_work: f64,
    pub variance_exp_work: f64,
    /// `e^{−βΔF}` from the endpoint partition functions.
    pub exact_mean: f64,
    /// kHz
    pub delta_f_khz: f64,
    pub jarzynski_residual: f64,
    pub unitarity_defect: f64,
    pub n_steps: usize,
}

/// Opaque drive protocol.
pub struct WfProtocol {
    inner: DriveProtocol,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure {
    status: WfStatus,
    message: String,
}

impl Failure {
    fn null(name: &str) -> Self {
        Failure {
            status: WfStatus::NullPointer,
            message: format!("`{name}` is null"),
        }
    }

    fn invalid(message: impl Into<String>) -> Self {
        Failure {
            status: WfStatus::InvalidArgument,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::DimensionMismatch { .. } => WfStatus::DimensionMismatch,
            Error::SingularModel { .. } => WfStatus::SingularModel,
            Error::InconsistentData { .. } => WfStatus::InconsistentData,
            Error::Contract(_) => WfStatus::ContractViolation,
            Error::Io(_) => WfStatus::Internal,
            _ => WfStatus::InvalidArgument,
        };
        Failure {
            status,
            message: e.to_string(),
        }
    }
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> WfStatus {
    set_last_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => WfStatus::Ok,
        Ok(Err(failure)) => {
            set_last_error(&failure.message);
            failure.status
        }
        Err(payload) => {
            let what = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("internal error: {what}"));
            WfStatus::Internal
        }
    }
}

fn kind_from(raw: i32) -> Result<DriveKind, Failure> {
    match raw {
        0 => Ok(DriveKind::Bare),
        1 => Ok(DriveKind::CounterDiabatic),
        other => Err(Failure::invalid(format!("unknown drive kind {other}"))),
    }
}

unsafe fn protocol_ref<'a>(p: *const WfProtocol) -> Result<&'a DriveProtocol, Failure> {
    p.as_ref().map(|h| &h.inner).ok_or_else(|| Failure::null("protocol"))
}

unsafe fn input<'a>(p: *const f64, len: usize, name: &str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(Failure::null(name));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output<'a>(p: *mut f64, len: usize, name: &str) -> Result<&'a mut [f64], Failure> {
    if p.is_null() {
        return Err(Failure::null(name));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn store_protocol(out: *mut *mut WfProtocol, inner: DriveProtocol) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::null("out"));
    }
    *out = Box::into_raw(Box::new(WfProtocol { inner }));
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn wf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message describing the last failure on this thread, or an empty string
/// after a successful call. Valid until the next `wf_` call on this thread.
#[no_mangle]
pub extern "C" fn wf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Cosine ramp `X(t) = x_max·(1 − cos(πt/τ))/2` against a static `Z`, both
/// in kHz, over `tau_ms`. `kind` is a `WfDriveKind` value.
///
/// # Safety
/// `out` must be null or point to writable storage for one pointer. The
/// handle written there must be released with `wf_protocol_free`.
#[no_mangle]
pub unsafe extern "C" fn wf_protocol_new(
    z_khz: f64,
    x_max_khz: f64,
    tau_ms: f64,
    kind: i32,
    out: *mut *mut WfProtocol,
) -> WfStatus {
    guard(|| {
        let p = DriveProtocol::new(z_khz, x_max_khz, tau_ms, kind_from(kind)?, Schedule::CosineRamp)?;
        store_protocol(out, p)
    })
}

/// Piecewise-linear ramp through `n_knots` points `(s[k], fraction[k])`,
/// with `s` running from 0 to 1 and `X = x_max·fraction`.
///
/// # Safety
/// `s` and `fraction` must each point to `n_knots` readable doubles; `out`
/// as for `wf_protocol_new`.
#[no_mangle]
pub unsafe extern "C" fn wf_protocol_new_piecewise(
    z_khz: f64,
    x_max_khz: f64,
    tau_ms: f64,
    kind: i32,
    s: *const f64,
    fraction: *const f64,
    n_knots: usize,
    out: *mut *mut WfProtocol,
) -> WfStatus {
    guard(|| {
        let s = input(s, n_knots, "s")?;
        let f = input(fraction, n_knots, "fraction")?;
        let knots = s.iter().copied().zip(f.iter().copied()).collect();
        let p = DriveProtocol::new(
            z_khz,
            x_max_khz,
            tau_ms,
            kind_from(kind)?,
            Schedule::PiecewiseLinear { knots },
        )?;
        store_protocol(out, p)
    })
}

/// Reference drive: `Z = 5/√3` kHz, `x_max = 5` kHz, cosine ramp.
///
/// # Safety
/// As for `wf_protocol_new`.
#[no_mangle]
pub unsafe extern "C" fn wf_protocol_reference(tau_ms: f64, kind: i32, out: *mut *mut WfProtocol) -> WfStatus {
    guard(|| store_protocol(out, DriveProtocol::reference(tau_ms, kind_from(kind)?)?))
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `p` must be null or a handle from a `wf_protocol_new*` call that has not
/// been freed.
#[no_mangle]
pub unsafe extern "C" fn wf_protocol_free(p: *mut WfProtocol) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// `H(t)` in kHz as 2x2 row-major real and imaginary parts.
///
/// # Safety
/// `p` must be a live handle; `out_re` and `out_im` must each hold 4 doubles.
#[no_mangle]
pub unsafe extern "C" fn wf_protocol_hamiltonian(
    p: *const WfProtocol,
    t_ms: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> WfStatus {
    guard(|| {
        let h = protocol_ref(p)?.hamiltonian_at(t_ms)?;
        let re = output(out_re, 4, "out_re")?;
        let im = output(out_im, 4, "out_im")?;
        for (k, z) in h.matrix().as_slice().iter().enumerate() {
            re[k] = z.re;
            im[k] = z.im;
        }
        Ok(())
    })
}

/// Default midpoint step count for this protocol.
///
/// # Safety
/// `p` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wf_protocol_default_steps(p: *const WfProtocol, out: *mut usize) -> WfStatus {
    guard(|| {
        let n = protocol_ref(p)?.default_steps()?;
        out.as_mut().map(|o| *o = n).ok_or_else(|| Failure::null("out"))
    })
}

/// Adiabatic parameter `Γ` of a bare protocol and the time where it peaks.
/// `n_samples = 0` selects the default grid.
///
/// # Safety
/// `p` must be a live handle; `gamma` must be writable; `argmax_ms` may be null.
#[no_mangle]
pub unsafe extern "C" fn wf_protocol_gamma(
    p: *const WfProtocol,
    n_samples: usize,
    gamma: *mut f64,
    argmax_ms: *mut f64,
) -> WfStatus {
    guard(|| {
        let n = if n_samples == 0 {
            DEFAULT_GAMMA_SAMPLES
        } else {
            n_samples
        };
        let r = protocol_ref(p)?.adiabatic_parameter(n)?;
        *gamma.as_mut().ok_or_else(|| Failure::null("gamma"))? = r.gamma;
        if let Some(a) = argmax_ms.as_mut() {
            *a = r.argmax_time;
        }
        Ok(())
    })
}

struct Propagated {
    spectrum0: Vec<f64>,
    spectrum_tau: Vec<f64>,
    transitions: workfluct::tpm::TransitionMatrix,
    unitarity_defect: f64,
    n_steps: usize,
}

fn propagate_protocol(p: &DriveProtocol, n_steps: usize) -> Result<Propagated, Failure> {
    let n_steps = if n_steps == 0 { p.default_steps()? } else { n_steps };
    let u = propagate(p, n_steps)?;
    let (h0, h1) = p.endpoint_hamiltonians()?;
    let (b0, b1) = (eigendecompose(&h0), eigendecompose(&h1));
    let transitions = transition_probabilities(&u, &b0, &b1)?;
    Ok(Propagated {
        spectrum0: b0.values,
        spectrum_tau: b1.values,
        transitions,
        unitarity_defect: u.unitarity_defect(),
        n_steps,
    })
}

/// Transition probabilities `out[2m + n] = p(m → n)` between the eigenbases
/// of `H(0)` and `H(τ)`. `n_steps = 0` selects the default step count.
///
/// # Safety
/// `p` must be a live handle; `out` must hold 4 doubles.
#[no_mangle]
pub unsafe extern "C" fn wf_protocol_transitions(p: *const WfProtocol, n_steps: usize, out: *mut f64) -> WfStatus {
    guard(|| {
        let prop = propagate_protocol(protocol_ref(p)?, n_steps)?;
        let out = output(out, 4, "out")?;
        for (k, v) in prop.transitions.rows().iter().flatten().enumerate() {
            out[k] = *v;
        }
        Ok(())
    })
}

/// Two-point-measurement statistics at inverse temperature `beta_z / Z`.
///
/// # Safety
/// `p` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wf_protocol_work_stats(
    p: *const WfProtocol,
    n_steps: usize,
    beta_z: f64,
    out: *mut WfWorkStats,
) -> WfStatus {
    guard(|| {
        let proto = protocol_ref(p)?;
        if !(beta_z > 0.0 && beta_z.is_finite()) {
            return Err(Failure::invalid(format!("beta_z must be positive, got {beta_z}")));
        }
        let out = out.as_mut().ok_or_else(|| Failure::null("out"))?;
        let prop = propagate_protocol(proto, n_steps)?;
        let beta = beta_z / proto.z();
        let state = thermal_populations(&prop.spectrum0, beta)?;
        let table = JointProbabilityTable::new(&state, &prop.transitions)?;
        let wd = WorkDistribution::from_joint(&table, &prop.spectrum0, &prop.spectrum_tau)?;
        let m = exp_work_moments(&wd, beta);
        let delta_f = free_energy_difference(&prop.spectrum0, &prop.spectrum_tau, beta)?;
        let exact = (-beta * delta_f).exp();
        *out = WfWorkStats {
            mean_exp_work: m.mean,
            variance_exp_work: m.variance,
            exact_mean: exact,
            delta_f_khz: delta_f,
            jarzynski_residual: (m.mean - exact).abs(),
            unitarity_defect: prop.unitarity_defect,
            n_steps: prop.n_steps,
        };
        Ok(())
    })
}

unsafe fn readout_model(dim: usize, t: *const f64) -> Result<ReadoutModel, Failure> {
    if dim == 0 {
        return Err(Failure::invalid("dim must be positive"));
    }
    let flat = input(t, dim * dim, "t")?;
    Ok(ReadoutModel::new(flat.chunks(dim).map(<[f64]>::to_vec).collect())?)
}

/// Applies a column-stochastic confusion matrix `t[i·dim + j] = p(i | j)` to
/// a probability vector.
///
/// # Safety
/// `t` must hold `dim²` doubles; `p` and `out` must hold `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn wf_readout_apply(dim: usize, t: *const f64, p: *const f64, out: *mut f64) -> WfStatus {
    guard(|| {
        let model = readout_model(dim, t)?;
        let noisy = model.apply_to_vector(input(p, dim, "p")?)?;
        output(out, dim, "out")?.copy_from_slice(&noisy);
        Ok(())
    })
}

/// Corrects measured initial populations `p0_exp` and conditional
/// probabilities `pc_exp[i·dim + j] = p(final i | initial j)` for readout
/// errors. Writes the joint table `joint_out[m·dim + n]` (initial `m`, final
/// `n`) and, if non-null, the probability mass moved by clamping.
///
/// # Safety
/// `t`, `pc_exp` and `joint_out` must hold `dim²` doubles; `p0_exp` must
/// hold `dim`; `clamped_mass` may be null.
#[no_mangle]
pub unsafe extern "C" fn wf_readout_correct(
    dim: usize,
    t: *const f64,
    p0_exp: *const f64,
    pc_exp: *const f64,
    joint_out: *mut f64,
    clamped_mass: *mut f64,
) -> WfStatus {
    guard(|| {
        let model = readout_model(dim, t)?;
        let p0 = input(p0_exp, dim, "p0_exp")?;
        let pc: Vec<Vec<f64>> = input(pc_exp, dim * dim, "pc_exp")?
            .chunks(dim)
            .map(<[f64]>::to_vec)
            .collect();
        let out = output(joint_out, dim * dim, "joint_out")?;
        let c = correct_joint(p0, &pc, &model)?;
        for (k, v) in c.table.entries().iter().flatten().enumerate() {
            out[k] = *v;
        }
        if let Some(m) = clamped_mass.as_mut() {
            *m = c.clamped_mass;
        }
        Ok(())
    })
}
