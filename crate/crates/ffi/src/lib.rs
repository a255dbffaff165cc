//! C ABI over the neuroskin simulator.
//!
//! Models and traces are opaque handles created and released through this
//! interface. Every fallible call returns an [`NsStatus`]; on failure the
//! message is available from [`ns_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use neuroskin::config::ExperimentConfig;
use neuroskin::fe::{simulate_with, InputSignal, SimulationSettings, SimulationTrace};
use neuroskin::membrane::{build_membrane, ActivationKind, MembraneModel, Neuron, SupportEdge};
use neuroskin::objective::{expand_parameters, rmse};
use neuroskin::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Config = 5,
    Simulation = 6,
    Panic = 7,
}

/// Neuron activation selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NsActivation {
    SymmetricSigmoid = 0,
    LinearSaturating = 1,
    Zero = 2,
}

/// A membrane with its simulation settings and, when loaded from a config
/// file, its configured input signal.
pub struct NsModel {
    model: MembraneModel,
    settings: SimulationSettings,
    input: Option<InputSignal>,
}

/// Displacement history: one row per recorded time, first column the output node.
pub struct NsTrace {
    times: Vec<f64>,
    columns: usize,
    data: Vec<f64>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> NsStatus {
    match e {
        Error::Io { .. } => NsStatus::Io,
        Error::Parse { .. } => NsStatus::Parse,
        Error::Config(_) => NsStatus::Config,
        Error::Step { .. } | Error::Assembly(_) | Error::Evaluation { .. } => NsStatus::Simulation,
        _ => NsStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (NsStatus, String)>) -> NsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NsStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            NsStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (NsStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (NsStatus, String) {
    (NsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], (NsStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn trace_handle(t: SimulationTrace) -> *mut NsTrace {
    let columns = t.nodes.len();
    let data = t.rows.into_iter().flatten().collect();
    Box::into_raw(Box::new(NsTrace {
        times: t.times,
        columns,
        data,
    }))
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ns_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ns_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a model from a TOML experiment file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ns_model_load(path: *const c_char, out: *mut *mut NsModel) -> NsStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| (NsStatus::InvalidArgument, "path is not UTF-8".to_string()))?;
        let cfg = ExperimentConfig::load(Path::new(path)).map_err(lib_err)?;
        let model = cfg.build_model().map_err(lib_err)?;
        let settings = cfg.settings(&model).map_err(lib_err)?;
        let input = cfg.input_signal(&model).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(NsModel {
            model,
            settings,
            input: Some(input),
        }));
        Ok(())
    })
}

/// Builds an `nx` x `ny` membrane of square elements supported on its left
/// edge, with default material and neurons. `output_node` is 1-based.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ns_model_build(
    nx: usize,
    ny: usize,
    size: f64,
    output_node: usize,
    dt: f64,
    steps: usize,
    out: *mut *mut NsModel,
) -> NsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if !(dt > 0.0) || steps == 0 {
            return Err((NsStatus::InvalidArgument, "need dt > 0 and steps > 0".into()));
        }
        let model = build_membrane(nx, ny, size, SupportEdge::Left, output_node).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(NsModel {
            model,
            settings: SimulationSettings::new(dt, steps),
            input: None,
        }));
        Ok(())
    })
}

/// # Safety
/// `model` must come from this library and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ns_model_free(model: *mut NsModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn ns_model_element_count(model: *const NsModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.element_count())
}

/// Number of input channels, one per supported node.
///
/// # Safety
/// `model` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn ns_model_support_count(model: *const NsModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.mesh.supported_nodes.len())
}

/// # Safety
/// `model` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn ns_model_steps(model: *const NsModel) -> usize {
    model.as_ref().map_or(0, |m| m.settings.steps)
}

/// Sets element moduli from `len` values; `len` must divide the element
/// count and each value covers a contiguous block of elements.
///
/// # Safety
/// `model` must be a live handle and `values` point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ns_model_set_moduli(model: *mut NsModel, values: *const f64, len: usize) -> NsStatus {
    guard(|| {
        let m = model.as_mut().ok_or_else(|| null("model"))?;
        let v = slice(values, len, "values")?;
        let moduli = expand_parameters(v, m.model.element_count()).map_err(lib_err)?;
        let mut material = m.model.material.clone();
        material.moduli = moduli;
        material.validate().map_err(lib_err)?;
        m.model.material = material;
        Ok(())
    })
}

/// Gives every element the same neuron.
///
/// # Safety
/// `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ns_model_set_neuron(
    model: *mut NsModel,
    input_weight: f64,
    activation: NsActivation,
    output_weight: f64,
) -> NsStatus {
    guard(|| {
        let m = model.as_mut().ok_or_else(|| null("model"))?;
        if !(input_weight.is_finite() && output_weight.is_finite()) {
            return Err((NsStatus::InvalidArgument, "neuron weights must be finite".into()));
        }
        let kind = match activation {
            NsActivation::SymmetricSigmoid => ActivationKind::SymmetricSigmoid,
            NsActivation::LinearSaturating => ActivationKind::LinearSaturating,
            NsActivation::Zero => ActivationKind::Zero,
        };
        m.model = m.model.clone().with_neurons(Neuron::uniform(input_weight, kind, output_weight));
        Ok(())
    })
}

/// Runs the model with an explicit input: `steps * channels` doubles, row
/// `k` holding every support's prescribed horizontal displacement at step `k + 1`.
///
/// # Safety
/// `model` must be a live handle, `input` point to `steps * channels` doubles
/// and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ns_simulate(
    model: *const NsModel,
    input: *const f64,
    steps: usize,
    channels: usize,
    out: *mut *mut NsTrace,
) -> NsStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let data = slice(input, steps * channels, "input")?;
        if channels == 0 {
            return Err((NsStatus::InvalidArgument, "channels must be positive".into()));
        }
        let rows: Vec<Vec<f64>> = data.chunks(channels).map(<[f64]>::to_vec).collect();
        let signal = if rows.is_empty() {
            InputSignal::zeros(channels, 0)
        } else {
            InputSignal::from_rows(&rows).map_err(lib_err)?
        };
        let mut settings = m.settings.clone();
        settings.steps = steps;
        let trace = simulate_with(&m.model, &signal, &settings).map_err(lib_err)?;
        *out = trace_handle(trace);
        Ok(())
    })
}

/// Runs a config-loaded model with its configured input.
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ns_simulate_configured(model: *const NsModel, out: *mut *mut NsTrace) -> NsStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let input = m
            .input
            .as_ref()
            .ok_or_else(|| (NsStatus::InvalidArgument, "model has no configured input".to_string()))?;
        let trace = simulate_with(&m.model, input, &m.settings).map_err(lib_err)?;
        *out = trace_handle(trace);
        Ok(())
    })
}

/// # Safety
/// `trace` must come from this library and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ns_trace_free(trace: *mut NsTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// # Safety
/// `trace` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn ns_trace_rows(trace: *const NsTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.times.len())
}

/// # Safety
/// `trace` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn ns_trace_columns(trace: *const NsTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.columns)
}

/// Row-major `rows * columns` displacements, owned by the trace.
///
/// # Safety
/// `trace` must be a live handle or null (returns null).
#[no_mangle]
pub unsafe extern "C" fn ns_trace_data(trace: *const NsTrace) -> *const f64 {
    trace.as_ref().map_or(ptr::null(), |t| t.data.as_ptr())
}

/// `rows` sample times, owned by the trace.
///
/// # Safety
/// `trace` must be a live handle or null (returns null).
#[no_mangle]
pub unsafe extern "C" fn ns_trace_times(trace: *const NsTrace) -> *const f64 {
    trace.as_ref().map_or(ptr::null(), |t| t.times.as_ptr())
}

/// Root-mean-square difference of two series of length `len`.
///
/// # Safety
/// `a` and `b` must point to `len` doubles and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ns_rmse(a: *const f64, b: *const f64, len: usize, out: *mut f64) -> NsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let (a, b) = (slice(a, len, "a")?, slice(b, len, "b")?);
        *out = rmse(a, b).map_err(lib_err)?;
        Ok(())
    })
}
