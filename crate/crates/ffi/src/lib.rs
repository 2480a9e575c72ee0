//! C ABI over `aloe-core`.
//!
//! Problems live behind the opaque [`AloeProblem`] handle. Every fallible
//! function returns an [`AloeStatus`]; on failure a message is available from
//! [`aloe_last_error`] on the same thread until the next failing call.
//! Strings returned by the library are released with [`aloe_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use aloe_core::benchmarks::{make_polygon, PolygonSpec};
use aloe_core::estimator::{estimate_with, AloeEstimate, EstimateOptions};
use aloe_core::events::{
    parse_problem, whiten, EventSystem, GeneralGaussianSpec, HalfSpaceProblem,
};
use aloe_core::grid::{grid_problem, GridCase};
use aloe_core::stats::{normal_cdf, normal_quantile, sample_upper_truncated_normal, RandomStream};
use aloe_core::AloeError;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AloeStatus {
    Ok = 0,
    InvalidInput = 1,
    InfeasibleDeterministic = 2,
    EmptyMixture = 3,
    Domain = 4,
    Unsampleable = 5,
    NearSingularCovariance = 6,
    DegenerateConstraint = 7,
    DisconnectedNetwork = 8,
    InvalidWeights = 9,
    InvalidDistribution = 10,
    Io = 11,
    NullPointer = 12,
    Panic = 13,
}

/// Opaque problem handle.
pub struct AloeProblem {
    inner: HalfSpaceProblem,
}

/// Summary of one ALOE run.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct AloeEstimateResult {
    pub mu_hat: f64,
    pub se: f64,
    pub n: u64,
    pub union_bound: f64,
    pub lower_bound: f64,
    pub hard_range_lo: f64,
    pub hard_range_hi: f64,
    pub var_bound_theorem: f64,
    pub var_bound_lemma: f64,
    pub cv_bound: f64,
    /// Fraction of draws with more than one event.
    pub multi_event_fraction: f64,
    pub dropped_mass: f64,
    pub num_events: u64,
    /// Nonzero when only one value of S was observed, so `se` is 0.
    pub degenerate_se: u8,
}

impl From<&AloeEstimate> for AloeEstimateResult {
    fn from(e: &AloeEstimate) -> Self {
        Self {
            mu_hat: e.mu_hat,
            se: e.se,
            n: e.n,
            union_bound: e.union_bound,
            lower_bound: e.lower_bound,
            hard_range_lo: e.hard_range[0],
            hard_range_hi: e.hard_range[1],
            var_bound_theorem: e.var_bound_theorem,
            var_bound_lemma: e.var_bound_lemma,
            cv_bound: e.cv_bound,
            multi_event_fraction: e.multi_event_fraction(),
            dropped_mass: e.dropped_mass,
            num_events: e.num_events as u64,
            degenerate_se: e.degenerate_se as u8,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &AloeError) -> AloeStatus {
    match e {
        AloeError::Domain(_) => AloeStatus::Domain,
        AloeError::Unsampleable { .. } => AloeStatus::Unsampleable,
        AloeError::InvalidInput(_) => AloeStatus::InvalidInput,
        AloeError::NearSingularCovariance { .. } => AloeStatus::NearSingularCovariance,
        AloeError::DegenerateConstraint { .. } => AloeStatus::DegenerateConstraint,
        AloeError::DisconnectedNetwork { .. } => AloeStatus::DisconnectedNetwork,
        AloeError::InfeasibleDeterministic { .. } => AloeStatus::InfeasibleDeterministic,
        AloeError::EmptyMixture => AloeStatus::EmptyMixture,
        AloeError::InvalidWeights(_) => AloeStatus::InvalidWeights,
        AloeError::InvalidDistribution(_) => AloeStatus::InvalidDistribution,
        AloeError::Io(_) => AloeStatus::Io,
    }
}

enum Failure {
    Core(AloeError),
    Null(&'static str),
}

impl From<AloeError> for Failure {
    fn from(e: AloeError) -> Self {
        Failure::Core(e)
    }
}

/// Runs `f`, converting errors and panics into a status code.
fn guard<F>(f: F) -> AloeStatus
where
    F: FnOnce() -> Result<(), Failure>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AloeStatus::Ok,
        Ok(Err(Failure::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("{what} is null"));
            AloeStatus::NullPointer
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            AloeStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn text<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure::Core(AloeError::InvalidInput(format!("{what} is not UTF-8: {e}"))))
}

unsafe fn problem_ref<'a>(p: *const AloeProblem) -> Result<&'a AloeProblem, Failure> {
    p.as_ref().ok_or(Failure::Null("problem"))
}

unsafe fn emit(out: *mut *mut AloeProblem, problem: HalfSpaceProblem) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null("out"));
    }
    *out = Box::into_raw(Box::new(AloeProblem { inner: problem }));
    Ok(())
}

fn rows(flat: &[f64], count: usize, width: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|i| flat[i * width..(i + 1) * width].to_vec())
        .collect()
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn aloe_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn aloe_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn aloe_normal_cdf(x: f64) -> f64 {
    normal_cdf(x)
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn aloe_normal_quantile(p: f64, out: *mut f64) -> AloeStatus {
    guard(|| {
        let out = out.as_mut().ok_or(Failure::Null("out"))?;
        *out = normal_quantile(p)?;
        Ok(())
    })
}

/// Draws from `N(0,1)` conditioned to exceed `tau`, by inversion of `u`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn aloe_truncated_normal(tau: f64, u: f64, out: *mut f64) -> AloeStatus {
    guard(|| {
        let out = out.as_mut().ok_or(Failure::Null("out"))?;
        *out = sample_upper_truncated_normal(tau, u)?;
        Ok(())
    })
}

/// Half-spaces `ω_jᵀx ≥ τ_j` in dimension `dim`; `normals` holds `num_events`
/// rows of length `dim`, row-major.
///
/// # Safety
/// `normals` must hold `dim * num_events` values, `taus` `num_events` values,
/// and `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn aloe_problem_new(
    dim: usize,
    normals: *const f64,
    num_events: usize,
    taus: *const f64,
    out: *mut *mut AloeProblem,
) -> AloeStatus {
    guard(|| {
        let normals = slice(normals, dim * num_events, "normals")?;
        let taus = slice(taus, num_events, "taus")?;
        let problem = HalfSpaceProblem::from_flat(dim, normals.to_vec(), taus.to_vec())?;
        emit(out, problem)
    })
}

/// Parses a problem in either the whitened or the raw JSON form.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn aloe_problem_from_json(
    json: *const c_char,
    out: *mut *mut AloeProblem,
) -> AloeStatus {
    guard(|| {
        let problem = parse_problem(text(json, "json")?)?;
        emit(out, problem)
    })
}

/// Whitens `γ_jᵀy ≥ κ_j` for `y ~ N(η, Σ)`. `sigma` is `dim × dim` and
/// `gamma` is `num_events × dim`, both row-major.
///
/// # Safety
/// Array lengths must match the stated dimensions and `out` must be valid
/// for writes.
#[no_mangle]
pub unsafe extern "C" fn aloe_problem_whiten(
    dim: usize,
    eta: *const f64,
    sigma: *const f64,
    num_events: usize,
    gamma: *const f64,
    kappa: *const f64,
    out: *mut *mut AloeProblem,
) -> AloeStatus {
    guard(|| {
        let spec = GeneralGaussianSpec {
            eta: slice(eta, dim, "eta")?.to_vec(),
            sigma: rows(slice(sigma, dim * dim, "sigma")?, dim, dim),
            gamma: rows(slice(gamma, dim * num_events, "gamma")?, num_events, dim),
            kappa: slice(kappa, num_events, "kappa")?.to_vec(),
        };
        emit(out, whiten(&spec)?)
    })
}

/// Builds the violation problem of a DC grid case given as JSON.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn aloe_problem_from_grid_json(
    json: *const c_char,
    out: *mut *mut AloeProblem,
) -> AloeStatus {
    guard(|| {
        let case = GridCase::from_json(text(json, "json")?)?;
        emit(out, grid_problem(&case)?.problem)
    })
}

/// The exterior of the regular `num_sides`-gon circumscribing the circle of
/// radius `tau`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn aloe_problem_polygon(
    num_sides: usize,
    tau: f64,
    out: *mut *mut AloeProblem,
) -> AloeStatus {
    guard(|| emit(out, make_polygon(&PolygonSpec::full(num_sides, tau))?))
}

/// Excludes events with `τ_j > threshold` from sampling and counting.
///
/// # Safety
/// `problem` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn aloe_problem_set_drop_threshold(
    problem: *mut AloeProblem,
    threshold: f64,
) -> AloeStatus {
    guard(|| {
        let p = problem.as_mut().ok_or(Failure::Null("problem"))?;
        p.inner = p.inner.clone().with_drop_threshold(threshold);
        Ok(())
    })
}

/// # Safety
/// `problem` must be a handle from this library or null; it must not be
/// used afterwards.
#[no_mangle]
pub unsafe extern "C" fn aloe_problem_free(problem: *mut AloeProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Number of events, including those excluded from sampling.
///
/// # Safety
/// `problem` must be a live handle or null (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn aloe_problem_num_events(problem: *const AloeProblem) -> usize {
    problem.as_ref().map_or(0, |p| p.inner.num_events())
}

/// `μ̄ = Σ P_j`; NaN for a null handle.
///
/// # Safety
/// `problem` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn aloe_problem_union_bound(problem: *const AloeProblem) -> f64 {
    problem.as_ref().map_or(f64::NAN, |p| p.inner.union_bound())
}

/// `max P_j`; NaN for a null handle.
///
/// # Safety
/// `problem` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn aloe_problem_lower_bound(problem: *const AloeProblem) -> f64 {
    problem.as_ref().map_or(f64::NAN, |p| p.inner.lower_bound())
}

/// Copies the event probabilities `P_j` into `out`, which holds `len` values.
///
/// # Safety
/// `out` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn aloe_problem_probabilities(
    problem: *const AloeProblem,
    out: *mut f64,
    len: usize,
) -> AloeStatus {
    guard(|| {
        let p = problem_ref(problem)?;
        let probs = p.inner.probabilities();
        if len < probs.len() {
            return Err(AloeError::InvalidInput(format!(
                "buffer holds {len} values, {} needed",
                probs.len()
            ))
            .into());
        }
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        std::slice::from_raw_parts_mut(out, probs.len()).copy_from_slice(probs);
        Ok(())
    })
}

fn run(
    problem: &AloeProblem,
    n: u64,
    seed: u64,
    stream_id: u64,
    block_size: usize,
) -> Result<AloeEstimate, Failure> {
    let options = EstimateOptions {
        block_size: if block_size == 0 {
            EstimateOptions::default().block_size
        } else {
            block_size
        },
    };
    Ok(estimate_with(
        &problem.inner,
        n,
        RandomStream::new(seed, stream_id),
        &options,
    )?)
}

/// Runs `n` ALOE draws on stream `(seed, stream_id)`. A `block_size` of 0
/// selects the default. Results do not depend on the block size.
///
/// # Safety
/// `problem` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn aloe_estimate(
    problem: *const AloeProblem,
    n: u64,
    seed: u64,
    stream_id: u64,
    block_size: usize,
    out: *mut AloeEstimateResult,
) -> AloeStatus {
    guard(|| {
        let p = problem_ref(problem)?;
        let out = out.as_mut().ok_or(Failure::Null("out"))?;
        *out = AloeEstimateResult::from(&run(p, n, seed, stream_id, block_size)?);
        Ok(())
    })
}

/// As [`aloe_estimate`], writing every estimate field, including the `S`
/// histogram, as a JSON object. Release the string with
/// [`aloe_string_free`].
///
/// # Safety
/// `problem` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn aloe_estimate_json(
    problem: *const AloeProblem,
    n: u64,
    seed: u64,
    stream_id: u64,
    block_size: usize,
    out: *mut *mut c_char,
) -> AloeStatus {
    guard(|| {
        let p = problem_ref(problem)?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let e = run(p, n, seed, stream_id, block_size)?;
        let json = serde_json::to_string(&e).map_err(AloeError::from)?;
        *out = CString::new(json)
            .map_err(|e| AloeError::InvalidInput(e.to_string()))?
            .into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn aloe_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
