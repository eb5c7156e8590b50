//! C ABI over the netslice library so other languages can bind the analysis
//! pipeline: load a scenario once into an opaque handle, then query flows,
//! sized capacities, analytic delays, packet-level measurements, and
//! embedding admission counts through plain functions and status codes.
//!
//! Conventions:
//! * every function returns an [`NsStatus`]; outputs go through pointers
//!   that are written only on `NS_STATUS_OK`;
//! * a failure stores a human-readable message retrievable with
//!   [`ns_last_error`] (per thread);
//! * handles from `ns_scenario_*` constructors must be released with
//!   [`ns_scenario_free`];
//! * buffers are caller-allocated; string outputs are NUL-terminated.
//!
//! The matching header `include/netslice_ffi.h` is generated by cbindgen at
//! build time.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::path::Path;
use std::str::FromStr;

use netslice::capacity::optimal_capacity;
use netslice::embedding::{embed_max, EmbedMode};
use netslice::error::Error;
use netslice::model::{case_study_topology, PriceVector, VnRequest};
use netslice::pricing::best_response;
use netslice::queueing::{mean_delay, solve_traffic_equations};
use netslice::scenario::{LoadedScenario, Scenario, ScenarioError};
use netslice::simulator::simulate_slice_packets;

/// Result of every call. Anything but `NS_STATUS_OK` leaves the outputs
/// untouched and stores a message for [`ns_last_error`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NsStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument,
    /// A string argument was not valid UTF-8.
    Utf8,
    /// The scenario file could not be read.
    Io,
    /// The scenario text is not valid TOML (or has unknown keys).
    Parse,
    /// The scenario parsed but failed cross-validation.
    Validation,
    /// No slice with the given id exists in the scenario.
    UnknownVn,
    /// A buffer length does not match what the slice needs.
    Dimension,
    /// The routing matrix keeps all traffic inside; no flow solution.
    ClosedNetwork,
    /// Arrival rates meet or exceed service rates somewhere.
    Unstable,
    /// Degenerate input (for example, no traffic at all).
    Degenerate,
    /// A scalar argument is out of range.
    InvalidParameter,
    /// Exhaustive embedding was asked for an instance beyond its limits.
    TooLarge,
    /// The output buffer is too small; the needed size was reported.
    BufferTooSmall,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn fail(status: NsStatus, message: impl Into<String>) -> NsStatus {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = message.into());
    status
}

fn fail_core(err: Error) -> NsStatus {
    let status = match &err {
        Error::InvalidParameter(_) => NsStatus::InvalidParameter,
        Error::DimensionMismatch(_) => NsStatus::Dimension,
        Error::ClosedNetwork => NsStatus::ClosedNetwork,
        Error::Unstable(_) => NsStatus::Unstable,
        Error::Degenerate(_) => NsStatus::Degenerate,
        Error::UnknownVn(_) => NsStatus::UnknownVn,
        Error::TooLarge(_) => NsStatus::TooLarge,
        Error::MalformedSchedule(_) => NsStatus::Validation,
    };
    fail(status, err.to_string())
}

fn fail_scenario(err: ScenarioError) -> NsStatus {
    let status = match &err {
        ScenarioError::Io(_) => NsStatus::Io,
        ScenarioError::Parse(_) => NsStatus::Parse,
        ScenarioError::Invalid(_) => NsStatus::Validation,
    };
    fail(status, err.to_string())
}

/// Opaque, immutable scenario handle.
pub struct NsScenario {
    loaded: LoadedScenario,
}

impl NsScenario {
    fn request(&self, vn_id: &str) -> Result<&VnRequest, NsStatus> {
        self.loaded
            .request(vn_id)
            .ok_or_else(|| fail(NsStatus::UnknownVn, format!("unknown vn `{vn_id}`")))
    }
}

unsafe fn utf8_arg<'a>(ptr: *const c_char) -> Result<&'a str, NsStatus> {
    if ptr.is_null() {
        return Err(fail(NsStatus::NullArgument, "string argument is null"));
    }
    unsafe { CStr::from_ptr(ptr) }
        .to_str()
        .map_err(|_| fail(NsStatus::Utf8, "string argument is not UTF-8"))
}

fn non_null<'a, T>(ptr: *mut T, name: &str) -> Result<&'a mut T, NsStatus> {
    if ptr.is_null() {
        Err(fail(NsStatus::NullArgument, format!("{name} is null")))
    } else {
        Ok(unsafe { &mut *ptr })
    }
}

fn boxed(loaded: LoadedScenario, out: *mut *mut NsScenario) -> NsStatus {
    match non_null(out, "out") {
        Ok(slot) => {
            *slot = Box::into_raw(Box::new(NsScenario { loaded }));
            NsStatus::Ok
        }
        Err(status) => status,
    }
}

/// Version of the underlying library as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ns_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Short static name of a status code.
#[no_mangle]
pub extern "C" fn ns_status_name(status: NsStatus) -> *const c_char {
    let name: &'static str = match status {
        NsStatus::Ok => "ok\0",
        NsStatus::NullArgument => "null argument\0",
        NsStatus::Utf8 => "invalid utf-8\0",
        NsStatus::Io => "io error\0",
        NsStatus::Parse => "parse error\0",
        NsStatus::Validation => "validation error\0",
        NsStatus::UnknownVn => "unknown vn\0",
        NsStatus::Dimension => "dimension mismatch\0",
        NsStatus::ClosedNetwork => "closed network\0",
        NsStatus::Unstable => "unstable\0",
        NsStatus::Degenerate => "degenerate\0",
        NsStatus::InvalidParameter => "invalid parameter\0",
        NsStatus::TooLarge => "too large\0",
        NsStatus::BufferTooSmall => "buffer too small\0",
    };
    name.as_ptr().cast()
}

/// Copy the current thread's last error message into `buf` (NUL-terminated).
/// On success `written` holds the message length without the NUL; when the
/// buffer is too small, `written` holds the required size including the NUL
/// and nothing is copied.
///
/// # Safety
/// `buf` must point to at least `len` writable bytes; `written` must be a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ns_last_error(
    buf: *mut c_char,
    len: usize,
    written: *mut usize,
) -> NsStatus {
    let Ok(written) = non_null(written, "written") else {
        return NsStatus::NullArgument;
    };
    if buf.is_null() {
        return NsStatus::NullArgument;
    }
    LAST_ERROR.with(|slot| {
        let message = slot.borrow();
        let bytes = message.as_bytes();
        if bytes.len() + 1 > len {
            *written = bytes.len() + 1;
            return NsStatus::BufferTooSmall;
        }
        unsafe {
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast(), bytes.len());
            *buf.add(bytes.len()) = 0;
        }
        *written = bytes.len();
        NsStatus::Ok
    })
}

/// Parse a scenario from TOML text into a new handle.
///
/// # Safety
/// `text` must be a valid NUL-terminated string; `out` must be a valid
/// pointer. The returned handle must be freed with [`ns_scenario_free`].
#[no_mangle]
pub unsafe extern "C" fn ns_scenario_parse(
    text: *const c_char,
    out: *mut *mut NsScenario,
) -> NsStatus {
    let text = match unsafe { utf8_arg(text) } {
        Ok(text) => text,
        Err(status) => return status,
    };
    match Scenario::from_str(text).and_then(|s| s.to_model()) {
        Ok(loaded) => boxed(loaded, out),
        Err(err) => fail_scenario(err),
    }
}

/// Read and parse a scenario file into a new handle.
///
/// # Safety
/// `path` must be a valid NUL-terminated string; `out` must be a valid
/// pointer. The returned handle must be freed with [`ns_scenario_free`].
#[no_mangle]
pub unsafe extern "C" fn ns_scenario_load_file(
    path: *const c_char,
    out: *mut *mut NsScenario,
) -> NsStatus {
    let path = match unsafe { utf8_arg(path) } {
        Ok(path) => path,
        Err(status) => return status,
    };
    match Scenario::from_file(Path::new(path)).and_then(|s| s.to_model()) {
        Ok(loaded) => boxed(loaded, out),
        Err(err) => fail_scenario(err),
    }
}

/// Release a handle. Null is a no-op.
///
/// # Safety
/// `scenario` must be a pointer previously returned by a constructor and not
/// yet freed.
#[no_mangle]
pub unsafe extern "C" fn ns_scenario_free(scenario: *mut NsScenario) {
    if !scenario.is_null() {
        drop(unsafe { Box::from_raw(scenario) });
    }
}

unsafe fn handle<'a>(scenario: *const NsScenario) -> Result<&'a NsScenario, NsStatus> {
    if scenario.is_null() {
        Err(fail(NsStatus::NullArgument, "scenario handle is null"))
    } else {
        Ok(unsafe { &*scenario })
    }
}

/// Number of slices described by the scenario.
///
/// # Safety
/// `scenario` must be a live handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ns_scenario_vn_count(
    scenario: *const NsScenario,
    out: *mut usize,
) -> NsStatus {
    let handle = match unsafe { handle(scenario) } {
        Ok(h) => h,
        Err(status) => return status,
    };
    match non_null(out, "out") {
        Ok(slot) => {
            *slot = handle.loaded.requests.len();
            NsStatus::Ok
        }
        Err(status) => status,
    }
}

/// Copy the id of the `index`-th slice (declaration order) into `buf`,
/// NUL-terminated. Same buffer contract as [`ns_last_error`].
///
/// # Safety
/// `scenario` must be a live handle; `buf` must point to `len` writable
/// bytes; `written` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ns_scenario_vn_id(
    scenario: *const NsScenario,
    index: usize,
    buf: *mut c_char,
    len: usize,
    written: *mut usize,
) -> NsStatus {
    let handle = match unsafe { handle(scenario) } {
        Ok(h) => h,
        Err(status) => return status,
    };
    let Ok(written) = non_null(written, "written") else {
        return NsStatus::NullArgument;
    };
    if buf.is_null() {
        return fail(NsStatus::NullArgument, "buf is null");
    }
    let Some(timed) = handle.loaded.requests.get(index) else {
        return fail(
            NsStatus::UnknownVn,
            format!("vn index {index} out of range"),
        );
    };
    let bytes = timed.request.id.as_bytes();
    if bytes.len() + 1 > len {
        *written = bytes.len() + 1;
        return NsStatus::BufferTooSmall;
    }
    unsafe {
        std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast(), bytes.len());
        *buf.add(bytes.len()) = 0;
    }
    *written = bytes.len();
    NsStatus::Ok
}

/// Number of virtual nodes in one slice.
///
/// # Safety
/// `scenario` must be a live handle; `vn_id` must be a valid NUL-terminated
/// string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ns_scenario_vn_node_count(
    scenario: *const NsScenario,
    vn_id: *const c_char,
    out: *mut usize,
) -> NsStatus {
    let handle = match unsafe { handle(scenario) } {
        Ok(h) => h,
        Err(status) => return status,
    };
    let vn_id = match unsafe { utf8_arg(vn_id) } {
        Ok(s) => s,
        Err(status) => return status,
    };
    let request = match handle.request(vn_id) {
        Ok(r) => r,
        Err(status) => return status,
    };
    match non_null(out, "out") {
        Ok(slot) => {
            *slot = request.node_count();
            NsStatus::Ok
        }
        Err(status) => status,
    }
}

/// Solve the slice's traffic equations; `out_lambdas` receives one effective
/// arrival rate per virtual node and must hold exactly `len` entries equal to
/// the slice's node count.
///
/// # Safety
/// `scenario` must be a live handle; `vn_id` a valid string; `out_lambdas`
/// must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ns_scenario_flows(
    scenario: *const NsScenario,
    vn_id: *const c_char,
    out_lambdas: *mut f64,
    len: usize,
) -> NsStatus {
    let handle = match unsafe { handle(scenario) } {
        Ok(h) => h,
        Err(status) => return status,
    };
    let vn_id = match unsafe { utf8_arg(vn_id) } {
        Ok(s) => s,
        Err(status) => return status,
    };
    let request = match handle.request(vn_id) {
        Ok(r) => r,
        Err(status) => return status,
    };
    if out_lambdas.is_null() {
        return fail(NsStatus::NullArgument, "out_lambdas is null");
    }
    if len != request.node_count() {
        return fail(
            NsStatus::Dimension,
            format!(
                "slice has {} nodes, buffer holds {len}",
                request.node_count()
            ),
        );
    }
    match solve_traffic_equations(&request.traffic) {
        Ok(flow) => {
            unsafe {
                std::ptr::copy_nonoverlapping(flow.lambdas.as_ptr(), out_lambdas, len);
            }
            NsStatus::Ok
        }
        Err(err) => fail_core(err),
    }
}

/// Size the slice at the scenario prices. `t_seconds <= 0` means "use the
/// slice's own SLA latency". `out_mus` must hold exactly the slice's node
/// count; `out_total_cost` and `out_alpha` may be null if not wanted.
///
/// # Safety
/// `scenario` must be a live handle; `vn_id` a valid string; `out_mus` must
/// point to `len` writable doubles; the optional outputs must be valid or
/// null.
#[no_mangle]
pub unsafe extern "C" fn ns_scenario_optimal_capacity(
    scenario: *const NsScenario,
    vn_id: *const c_char,
    t_seconds: f64,
    out_mus: *mut f64,
    len: usize,
    out_total_cost: *mut f64,
    out_alpha: *mut f64,
) -> NsStatus {
    let handle = match unsafe { handle(scenario) } {
        Ok(h) => h,
        Err(status) => return status,
    };
    let vn_id = match unsafe { utf8_arg(vn_id) } {
        Ok(s) => s,
        Err(status) => return status,
    };
    let request = match handle.request(vn_id) {
        Ok(r) => r,
        Err(status) => return status,
    };
    if out_mus.is_null() {
        return fail(NsStatus::NullArgument, "out_mus is null");
    }
    if len != request.node_count() {
        return fail(
            NsStatus::Dimension,
            format!(
                "slice has {} nodes, buffer holds {len}",
                request.node_count()
            ),
        );
    }
    let mut sized = request.clone();
    if t_seconds > 0.0 {
        sized.sla_latency = t_seconds;
    }
    match best_response(&sized, &handle.loaded.prices) {
        Ok(plan) => {
            unsafe {
                std::ptr::copy_nonoverlapping(plan.mus.as_ptr(), out_mus, len);
            }
            if !out_total_cost.is_null() {
                unsafe { *out_total_cost = plan.total_cost };
            }
            if !out_alpha.is_null() {
                unsafe { *out_alpha = plan.kkt_multiplier };
            }
            NsStatus::Ok
        }
        Err(err) => fail_core(err),
    }
}

/// Analytic mean end-to-end delay of the slice under caller-chosen service
/// rates (`mus`, one per virtual node).
///
/// # Safety
/// `scenario` must be a live handle; `vn_id` a valid string; `mus` must point
/// to `len` readable doubles; `out_delay` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ns_scenario_mean_delay(
    scenario: *const NsScenario,
    vn_id: *const c_char,
    mus: *const f64,
    len: usize,
    out_delay: *mut f64,
) -> NsStatus {
    let handle = match unsafe { handle(scenario) } {
        Ok(h) => h,
        Err(status) => return status,
    };
    let vn_id = match unsafe { utf8_arg(vn_id) } {
        Ok(s) => s,
        Err(status) => return status,
    };
    let request = match handle.request(vn_id) {
        Ok(r) => r,
        Err(status) => return status,
    };
    if mus.is_null() {
        return fail(NsStatus::NullArgument, "mus is null");
    }
    let Ok(out_delay) = non_null(out_delay, "out_delay") else {
        return NsStatus::NullArgument;
    };
    let mus = unsafe { std::slice::from_raw_parts(mus, len) };
    let result = solve_traffic_equations(&request.traffic).and_then(|flow| mean_delay(&flow, mus));
    match result {
        Ok(metrics) => {
            *out_delay = metrics.mean_system_delay;
            NsStatus::Ok
        }
        Err(err) => fail_core(err),
    }
}

/// Packet-level simulation of one slice under its sized plan: mean measured
/// delay, the 95% half-width, and the number of completed packets.
/// Deterministic for a given seed.
///
/// # Safety
/// `scenario` must be a live handle; `vn_id` a valid string; the outputs must
/// be valid pointers or null.
#[no_mangle]
pub unsafe extern "C" fn ns_scenario_simulate_slice(
    scenario: *const NsScenario,
    vn_id: *const c_char,
    duration_seconds: f64,
    seed: u64,
    out_mean_delay: *mut f64,
    out_ci_half_width: *mut f64,
    out_packets: *mut u64,
) -> NsStatus {
    let handle = match unsafe { handle(scenario) } {
        Ok(h) => h,
        Err(status) => return status,
    };
    let vn_id = match unsafe { utf8_arg(vn_id) } {
        Ok(s) => s,
        Err(status) => return status,
    };
    let request = match handle.request(vn_id) {
        Ok(r) => r,
        Err(status) => return status,
    };
    let plan = match best_response(request, &handle.loaded.prices) {
        Ok(plan) => plan,
        Err(err) => return fail_core(err),
    };
    match simulate_slice_packets(request, &plan, duration_seconds, seed) {
        Ok(stats) => {
            if !out_mean_delay.is_null() {
                unsafe { *out_mean_delay = stats.measured_mean_delay };
            }
            if !out_ci_half_width.is_null() {
                unsafe { *out_ci_half_width = stats.ci_half_width };
            }
            if !out_packets.is_null() {
                unsafe { *out_packets = stats.completed_packets };
            }
            NsStatus::Ok
        }
        Err(err) => fail_core(err),
    }
}

/// Embed every slice onto the scenario substrate (sized at the scenario
/// prices) and report how many were admitted. `exact` selects exhaustive
/// search; otherwise the greedy heuristic runs.
///
/// # Safety
/// `scenario` must be a live handle; `out_admitted` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ns_scenario_embed_count(
    scenario: *const NsScenario,
    exact: bool,
    out_admitted: *mut usize,
) -> NsStatus {
    let handle = match unsafe { handle(scenario) } {
        Ok(h) => h,
        Err(status) => return status,
    };
    let Ok(out_admitted) = non_null(out_admitted, "out_admitted") else {
        return NsStatus::NullArgument;
    };
    let mut sized = Vec::new();
    for timed in &handle.loaded.requests {
        match best_response(&timed.request, &handle.loaded.prices) {
            Ok(plan) => sized.push((timed.request.clone(), plan)),
            Err(err) => return fail_core(err),
        }
    }
    let mode = if exact {
        EmbedMode::Exact
    } else {
        EmbedMode::Greedy
    };
    match embed_max(
        &handle.loaded.substrate,
        &sized,
        mode,
        &handle.loaded.compat,
    ) {
        Ok(outcome) => {
            *out_admitted = outcome.admitted.len();
            NsStatus::Ok
        }
        Err(err) => fail_core(err),
    }
}

/// Size the four-node reference slice directly, without a scenario: external
/// rate `lambda`, admin branch probability `q`, `prices` and `out_mus` are
/// arrays of exactly four doubles.
///
/// # Safety
/// `prices` must point to 4 readable doubles and `out_mus` to 4 writable
/// doubles; the optional outputs must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn ns_case_study_capacity(
    lambda: f64,
    q: f64,
    prices: *const f64,
    t_seconds: f64,
    out_mus: *mut f64,
    out_total_cost: *mut f64,
    out_alpha: *mut f64,
) -> NsStatus {
    if prices.is_null() || out_mus.is_null() {
        return fail(NsStatus::NullArgument, "prices and out_mus are required");
    }
    let prices = PriceVector::new(unsafe { std::slice::from_raw_parts(prices, 4) }.to_vec());
    let result = case_study_topology(lambda, q)
        .and_then(|request| solve_traffic_equations(&request.traffic))
        .and_then(|flow| optimal_capacity(&flow, &prices, t_seconds));
    match result {
        Ok(plan) => {
            unsafe {
                std::ptr::copy_nonoverlapping(plan.mus.as_ptr(), out_mus, 4);
            }
            if !out_total_cost.is_null() {
                unsafe { *out_total_cost = plan.total_cost };
            }
            if !out_alpha.is_null() {
                unsafe { *out_alpha = plan.kkt_multiplier };
            }
            NsStatus::Ok
        }
        Err(err) => fail_core(err),
    }
}
