//! C ABI over `needle-core`.
//!
//! Conventions: every function returns an [`NfStatus`]; results go through
//! out-pointers. Objects are opaque handles created by `nf_*_new`/`load`
//! functions and released with the matching `nf_*_free`. Strings returned to
//! the caller are freed with [`nf_string_free`]. On failure a description is
//! available from [`nf_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use needle_core::environment::{load_scenario, load_scenario_file, Scenario};
use needle_core::fit::fit_straight_insertion;
use needle_core::force::{internal_force_profile, max_tissue_force, segment_backstep, ForceProfile};
use needle_core::kinematics::NeedlePath;
use needle_core::planner::{ano_plan, Budget, CostMode, PlanResult, PlannerConfig};
use needle_core::{ArcSegment, Error, Pose, TissueParams};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ParseError = 3,
    IoError = 4,
    /// The internal force overflowed (exponent of the friction growth too large).
    Saturated = 5,
    RankDeficient = 6,
    /// Planning budget expired without reaching the insertion region.
    NoSolution = 7,
    /// A Rust panic was caught at the boundary; this is a bug.
    Internal = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub enum NfCostMode {
    Force = 0,
    Length = 1,
}

/// Tissue friction per unit length `c_friction` (N/m), capstan coefficient
/// `mu`, and tip piercing force (N).
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct NfTissue {
    pub c_friction: f64,
    pub mu: f64,
    pub piercing_force: f64,
}

/// Constant-curvature arc: roll about the tangent (rad), curvature (1/m),
/// length (m).
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct NfSegment {
    pub roll: f64,
    pub curvature: f64,
    pub length: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct NfSegmentForce {
    pub n_distal: f64,
    pub n_proximal: f64,
    pub f_t_max: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct NfForceSample {
    pub s: f64,
    pub n: f64,
    pub f_t: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct NfFit {
    pub piercing_force: f64,
    pub c_friction: f64,
    pub r_squared: f64,
    /// NaN with fewer than three points.
    pub adjusted_r_squared: f64,
    pub negative_piercing_force: bool,
}

/// Planner options. `iterations > 0` selects a reproducible iteration
/// budget; otherwise `time_s` seconds are used. A negative `epsilon` keeps
/// the default.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct NfPlannerOptions {
    pub iterations: u64,
    pub time_s: f64,
    pub seed: u64,
    pub cost_mode: NfCostMode,
    pub epsilon: f64,
}

pub struct NfPath(NeedlePath);
pub struct NfScenario(Scenario);
pub struct NfForceProfile(ForceProfile);
pub struct NfPlan {
    result: PlanResult,
    tissue: TissueParams,
    improvements: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).expect("NULs removed"));
}

fn status_of(err: &Error) -> NfStatus {
    match err {
        Error::Parse { .. } => NfStatus::ParseError,
        Error::Io { .. } => NfStatus::IoError,
        Error::Saturation { .. } => NfStatus::Saturated,
        Error::RankDeficient(_) => NfStatus::RankDeficient,
        _ => NfStatus::InvalidArgument,
    }
}

/// Runs `f`, recording errors and converting panics.
fn guard(f: impl FnOnce() -> Result<(), (NfStatus, String)>) -> NfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NfStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            NfStatus::Internal
        }
    }
}

fn core<T>(r: needle_core::Result<T>) -> Result<T, (NfStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (NfStatus, String) {
    (NfStatus::NullPointer, format!("`{what}` is null"))
}

/// # Safety
/// `p` must be null or valid for reads of `T`.
unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, (NfStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

/// # Safety
/// `p` must be null or valid for writes of `T`.
unsafe fn put<T>(p: *mut T, what: &str, value: T) -> Result<(), (NfStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(value);
    Ok(())
}

/// # Safety
/// `s` must be null or a NUL-terminated string.
unsafe fn text<'a>(s: *const c_char, what: &str) -> Result<&'a str, (NfStatus, String)> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| (NfStatus::InvalidArgument, format!("`{what}` is not UTF-8")))
}

fn tissue(t: &NfTissue) -> Result<TissueParams, (NfStatus, String)> {
    core(TissueParams::new(t.c_friction, t.mu, t.piercing_force))
}

fn segment(s: &NfSegment) -> Result<ArcSegment, (NfStatus, String)> {
    core(ArcSegment::new(s.roll, s.curvature, s.length))
}

/// Message for the last failed call on this thread; empty if none. The
/// pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn nf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Tissue values measured for a phantom (C = 83.75 N/m, mu = 0.32, F_p = 0.4 N).
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nf_tissue_default(out: *mut NfTissue) -> NfStatus {
    guard(|| {
        let t = TissueParams::default();
        put(
            out,
            "out",
            NfTissue {
                c_friction: t.c_friction(),
                mu: t.mu(),
                piercing_force: t.piercing_force(),
            },
        )
    })
}

/// Force state across one segment given the internal force at its distal end.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn nf_segment_backstep(
    n_distal: f64,
    seg: *const NfSegment,
    tissue_params: *const NfTissue,
    out: *mut NfSegmentForce,
) -> NfStatus {
    guard(|| {
        let seg = segment(get(seg, "seg")?)?;
        let params = tissue(get(tissue_params, "tissue")?)?;
        let state = core(segment_backstep(n_distal, &seg, &params))?;
        put(
            out,
            "out",
            NfSegmentForce {
                n_distal: state.n_distal,
                n_proximal: state.n_proximal,
                f_t_max: state.f_t_max,
            },
        )
    })
}

/// Path from a base position, base orientation quaternion `(w, x, y, z)` and
/// `count` segments ordered base to tip.
///
/// # Safety
/// `position` must hold 3 doubles, `orientation` 4, `segments` `count`
/// entries (may be null when `count == 0`), and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nf_path_new(
    position: *const f64,
    orientation: *const f64,
    segments: *const NfSegment,
    count: usize,
    out: *mut *mut NfPath,
) -> NfStatus {
    guard(|| {
        if position.is_null() || orientation.is_null() || (segments.is_null() && count > 0) {
            return Err(null("position/orientation/segments"));
        }
        let p = std::slice::from_raw_parts(position, 3);
        let q = std::slice::from_raw_parts(orientation, 4);
        let segs = if count == 0 {
            Vec::new()
        } else {
            std::slice::from_raw_parts(segments, count)
                .iter()
                .map(segment)
                .collect::<Result<_, _>>()?
        };
        let base = core(Pose::from_components([p[0], p[1], p[2]], [q[0], q[1], q[2], q[3]]))?;
        let path = core(NeedlePath::new(base, segs))?;
        put(out, "out", Box::into_raw(Box::new(NfPath(path))))
    })
}

/// Parses the JSON path format (also accepts planner solution files).
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nf_path_from_json(json: *const c_char, out: *mut *mut NfPath) -> NfStatus {
    guard(|| {
        let path = core(NeedlePath::from_json(text(json, "json")?))?;
        put(out, "out", Box::into_raw(Box::new(NfPath(path))))
    })
}

/// # Safety
/// `path` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nf_path_free(path: *mut NfPath) {
    if !path.is_null() {
        drop(Box::from_raw(path));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn nf_path_total_length(path: *const NfPath, out: *mut f64) -> NfStatus {
    guard(|| put(out, "out", get(path, "path")?.0.total_length()))
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn nf_path_segment_count(path: *const NfPath, out: *mut usize) -> NfStatus {
    guard(|| put(out, "out", get(path, "path")?.0.segments().len()))
}

/// Largest tissue normal force along the path (N/m); `+inf` if the force
/// saturates.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn nf_max_tissue_force(
    path: *const NfPath,
    tissue_params: *const NfTissue,
    out: *mut f64,
) -> NfStatus {
    guard(|| {
        let path = &get(path, "path")?.0;
        let params = tissue(get(tissue_params, "tissue")?)?;
        put(out, "out", max_tissue_force(path, &params))
    })
}

/// Sampled force profile, base to tip, at spacing `resolution` (m).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn nf_force_profile(
    path: *const NfPath,
    tissue_params: *const NfTissue,
    resolution: f64,
    out: *mut *mut NfForceProfile,
) -> NfStatus {
    guard(|| {
        let path = &get(path, "path")?.0;
        let params = tissue(get(tissue_params, "tissue")?)?;
        let profile = core(internal_force_profile(path, &params, resolution))?;
        put(out, "out", Box::into_raw(Box::new(NfForceProfile(profile))))
    })
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn nf_profile_len(profile: *const NfForceProfile, out: *mut usize) -> NfStatus {
    guard(|| put(out, "out", get(profile, "profile")?.0.samples.len()))
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn nf_profile_sample(
    profile: *const NfForceProfile,
    index: usize,
    out: *mut NfForceSample,
) -> NfStatus {
    guard(|| {
        let samples = &get(profile, "profile")?.0.samples;
        let s = samples.get(index).ok_or_else(|| {
            (
                NfStatus::InvalidArgument,
                format!("sample index {index} out of range (len {})", samples.len()),
            )
        })?;
        put(out, "out", NfForceSample { s: s.s, n: s.n, f_t: s.f_t })
    })
}

/// Insertion force n(0) (N), maximum tissue force (N/m) and where it occurs (m).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn nf_profile_summary(
    profile: *const NfForceProfile,
    insertion_force: *mut f64,
    max_tissue_force: *mut f64,
    argmax_s: *mut f64,
) -> NfStatus {
    guard(|| {
        let p = &get(profile, "profile")?.0;
        put(insertion_force, "insertion_force", p.insertion_force)?;
        put(max_tissue_force, "max_tissue_force", p.max_tissue_force)?;
        put(argmax_s, "argmax_s", p.argmax_s)
    })
}

/// # Safety
/// `profile` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn nf_profile_free(profile: *mut NfForceProfile) {
    if !profile.is_null() {
        drop(Box::from_raw(profile));
    }
}

/// Least-squares fit of `force = F_p + C * depth`.
///
/// # Safety
/// `depth` and `force` must hold `count` doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nf_fit_straight_insertion(
    depth: *const f64,
    force: *const f64,
    count: usize,
    out: *mut NfFit,
) -> NfStatus {
    guard(|| {
        if depth.is_null() || force.is_null() {
            return Err(null("depth/force"));
        }
        let d = std::slice::from_raw_parts(depth, count);
        let f = std::slice::from_raw_parts(force, count);
        let data: Vec<(f64, f64)> = d.iter().copied().zip(f.iter().copied()).collect();
        let fit = core(fit_straight_insertion(&data))?;
        put(
            out,
            "out",
            NfFit {
                piercing_force: fit.piercing_force,
                c_friction: fit.c_friction,
                r_squared: fit.r_squared,
                adjusted_r_squared: fit.adjusted_r_squared.unwrap_or(f64::NAN),
                negative_piercing_force: fit.negative_piercing_force,
            },
        )
    })
}

/// Loads a scenario file; a referenced voxel grid resolves relative to it.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nf_scenario_load(path: *const c_char, out: *mut *mut NfScenario) -> NfStatus {
    guard(|| {
        let sc = core(load_scenario_file(Path::new(text(path, "path")?)))?;
        put(out, "out", Box::into_raw(Box::new(NfScenario(sc))))
    })
}

/// Parses a scenario document. `base_dir` (nullable) resolves a relative
/// voxel grid path.
///
/// # Safety
/// `json` must be a NUL-terminated string, `base_dir` null or one; `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn nf_scenario_from_json(
    json: *const c_char,
    base_dir: *const c_char,
    out: *mut *mut NfScenario,
) -> NfStatus {
    guard(|| {
        let dir = if base_dir.is_null() {
            None
        } else {
            Some(Path::new(text(base_dir, "base_dir")?))
        };
        let sc = core(load_scenario(text(json, "json")?, dir))?;
        put(out, "out", Box::into_raw(Box::new(NfScenario(sc))))
    })
}

/// # Safety
/// `scenario` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn nf_scenario_free(scenario: *mut NfScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Runs the anytime planner and returns its best plan. Returns
/// `NoSolution` (and leaves `*out` null) when the budget expires first.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn nf_plan(
    scenario: *const NfScenario,
    options: *const NfPlannerOptions,
    out: *mut *mut NfPlan,
) -> NfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        out.write(ptr::null_mut());
        let sc = &get(scenario, "scenario")?.0;
        let opts = get(options, "options")?;
        let mut config = PlannerConfig {
            budget: if opts.iterations > 0 {
                Budget::Iterations { count: opts.iterations }
            } else {
                Budget::Time { seconds: opts.time_s }
            },
            rng_seed: opts.seed,
            cost_mode: match opts.cost_mode {
                NfCostMode::Force => CostMode::Force,
                NfCostMode::Length => CostMode::Length,
            },
            ..PlannerConfig::for_scenario(sc)
        };
        if opts.epsilon >= 0.0 {
            config.epsilon = opts.epsilon;
        }
        let outcome = core(ano_plan(sc, &config, |_, _| {}))?;
        let improvements = outcome.log.entries.len();
        let Some(result) = outcome.best else {
            return Err((NfStatus::NoSolution, "no plan found within the budget".into()));
        };
        out.write(Box::into_raw(Box::new(NfPlan {
            result,
            tissue: sc.tissue,
            improvements,
        })));
        Ok(())
    })
}

/// Bottleneck (maximum tissue) force of the plan (N/m).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn nf_plan_bottleneck_cost(plan: *const NfPlan, out: *mut f64) -> NfStatus {
    guard(|| put(out, "out", get(plan, "plan")?.result.bottleneck_cost))
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn nf_plan_length(plan: *const NfPlan, out: *mut f64) -> NfStatus {
    guard(|| put(out, "out", get(plan, "plan")?.result.length))
}

/// Number of improved solutions the anytime loop reported.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn nf_plan_improvements(plan: *const NfPlan, out: *mut usize) -> NfStatus {
    guard(|| put(out, "out", get(plan, "plan")?.improvements))
}

/// Copy of the plan's forward path (insertion site to target).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn nf_plan_path(plan: *const NfPlan, out: *mut *mut NfPath) -> NfStatus {
    guard(|| {
        let path = get(plan, "plan")?.result.path.clone();
        put(out, "out", Box::into_raw(Box::new(NfPath(path))))
    })
}

/// Solution document (path plus costs) as JSON; free with [`nf_string_free`].
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn nf_plan_to_json(plan: *const NfPlan, out: *mut *mut c_char) -> NfStatus {
    guard(|| {
        let plan = get(plan, "plan")?;
        let json = CString::new(plan.result.to_json(&plan.tissue)).expect("JSON has no NUL");
        put(out, "out", json.into_raw())
    })
}

/// # Safety
/// `plan` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn nf_plan_free(plan: *mut NfPlan) {
    if !plan.is_null() {
        drop(Box::from_raw(plan));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
