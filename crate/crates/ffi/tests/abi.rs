use std::ffi::{CStr, CString};
use std::path::Path;
use std::ptr;

use needle_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(nf_last_error_message()) }.to_string_lossy().into_owned()
}

fn reference_tissue() -> NfTissue {
    let mut t = NfTissue { c_friction: 0.0, mu: 0.0, piercing_force: 0.0 };
    assert_eq!(unsafe { nf_tissue_default(&mut t) }, NfStatus::Ok);
    t
}

fn distal_arc() -> *mut NfPath {
    let segs = [
        NfSegment { roll: 0.0, curvature: 0.0, length: 0.05 },
        NfSegment { roll: 0.0, curvature: 10.0, length: 0.05 },
    ];
    let mut path = ptr::null_mut();
    let status = unsafe {
        nf_path_new([0.0; 3].as_ptr(), [1.0, 0.0, 0.0, 0.0].as_ptr(), segs.as_ptr(), segs.len(), &mut path)
    };
    assert_eq!(status, NfStatus::Ok);
    path
}

#[test]
fn segment_and_path_forces() {
    let tissue = reference_tissue();
    assert_eq!((tissue.c_friction, tissue.mu, tissue.piercing_force), (83.75, 0.32, 0.4));

    let mut state = NfSegmentForce::default();
    let arc = NfSegment { roll: 0.0, curvature: 10.0, length: 0.05 };
    assert_eq!(unsafe { nf_segment_backstep(0.4, &arc, &tissue, &mut state) }, NfStatus::Ok);
    assert!((state.f_t_max - 50.106).abs() < 1e-3);

    let path = distal_arc();
    let mut max = 0.0;
    assert_eq!(unsafe { nf_max_tissue_force(path, &tissue, &mut max) }, NfStatus::Ok);
    assert_eq!(max, state.f_t_max);

    let mut profile = ptr::null_mut();
    assert_eq!(unsafe { nf_force_profile(path, &tissue, 1e-3, &mut profile) }, NfStatus::Ok);
    let (mut n0, mut ft, mut at) = (0.0, 0.0, 0.0);
    assert_eq!(unsafe { nf_profile_summary(profile, &mut n0, &mut ft, &mut at) }, NfStatus::Ok);
    assert_eq!((ft, at), (max, 0.05));
    let mut len = 0;
    assert_eq!(unsafe { nf_profile_len(profile, &mut len) }, NfStatus::Ok);
    let mut first = NfForceSample::default();
    assert_eq!(unsafe { nf_profile_sample(profile, 0, &mut first) }, NfStatus::Ok);
    assert_eq!((first.s, first.n), (0.0, n0));
    assert_eq!(unsafe { nf_profile_sample(profile, len, &mut first) }, NfStatus::InvalidArgument);
    assert!(last_error().contains("out of range"));
    unsafe {
        nf_profile_free(profile);
        nf_path_free(path);
    }
}

#[test]
fn errors_are_reported() {
    let tissue = reference_tissue();
    let bad = NfSegment { roll: 0.0, curvature: -1.0, length: 0.05 };
    let mut state = NfSegmentForce::default();
    assert_eq!(unsafe { nf_segment_backstep(0.4, &bad, &tissue, &mut state) }, NfStatus::InvalidArgument);
    assert!(last_error().contains("curvature"), "{}", last_error());

    assert_eq!(unsafe { nf_segment_backstep(0.4, ptr::null(), &tissue, &mut state) }, NfStatus::NullPointer);

    let huge = NfSegment { roll: 0.0, curvature: 20.0, length: 500.0 };
    assert_eq!(unsafe { nf_segment_backstep(0.4, &huge, &tissue, &mut state) }, NfStatus::Saturated);

    let json = CString::new("{not json").unwrap();
    let mut path = ptr::null_mut();
    assert_eq!(unsafe { nf_path_from_json(json.as_ptr(), &mut path) }, NfStatus::ParseError);
    assert!(path.is_null());

    let (d, f) = ([0.05, 0.05, 0.05], [1.0, 2.0, 3.0]);
    let mut fit = NfFit::default();
    assert_eq!(unsafe { nf_fit_straight_insertion(d.as_ptr(), f.as_ptr(), 3, &mut fit) }, NfStatus::RankDeficient);

    let missing = CString::new("/nonexistent/scenario.json").unwrap();
    let mut sc = ptr::null_mut();
    assert_eq!(unsafe { nf_scenario_load(missing.as_ptr(), &mut sc) }, NfStatus::IoError);

    // freeing null is a no-op
    unsafe {
        nf_path_free(ptr::null_mut());
        nf_plan_free(ptr::null_mut());
        nf_string_free(ptr::null_mut());
    }
}

#[test]
fn fit_recovers_line() {
    let d: Vec<f64> = (1..=10).map(|i| 0.01 * i as f64).collect();
    let f: Vec<f64> = d.iter().map(|x| 0.4 + 83.75 * x).collect();
    let mut fit = NfFit::default();
    assert_eq!(unsafe { nf_fit_straight_insertion(d.as_ptr(), f.as_ptr(), d.len(), &mut fit) }, NfStatus::Ok);
    assert!((fit.piercing_force - 0.4).abs() < 1e-12);
    assert!((fit.c_friction - 83.75).abs() < 1e-10);
    assert!(!fit.negative_piercing_force);
}

#[test]
fn plan_round_trip() {
    let file = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/two_spheres.json");
    let file = CString::new(file.to_str().unwrap()).unwrap();
    let mut sc = ptr::null_mut();
    assert_eq!(unsafe { nf_scenario_load(file.as_ptr(), &mut sc) }, NfStatus::Ok);
    let opts = NfPlannerOptions {
        iterations: 20_000,
        time_s: 0.0,
        seed: 3,
        cost_mode: NfCostMode::Force,
        epsilon: -1.0,
    };
    let mut plan = ptr::null_mut();
    assert_eq!(unsafe { nf_plan(sc, &opts, &mut plan) }, NfStatus::Ok, "{}", last_error());
    let (mut cost, mut improvements) = (0.0, 0);
    unsafe {
        assert_eq!(nf_plan_bottleneck_cost(plan, &mut cost), NfStatus::Ok);
        assert_eq!(nf_plan_improvements(plan, &mut improvements), NfStatus::Ok);
    }
    assert!(cost.is_finite() && improvements >= 1);

    // the exported path reprices to the same bottleneck cost
    let mut path = ptr::null_mut();
    let mut again = 0.0;
    let tissue = reference_tissue();
    unsafe {
        assert_eq!(nf_plan_path(plan, &mut path), NfStatus::Ok);
        assert_eq!(nf_max_tissue_force(path, &tissue, &mut again), NfStatus::Ok);
    }
    assert!((again - cost).abs() <= 1e-9 * cost);

    let mut json = ptr::null_mut();
    assert_eq!(unsafe { nf_plan_to_json(plan, &mut json) }, NfStatus::Ok);
    let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_owned();
    assert!(text.contains("bottleneck_cost"));
    let mut reparsed = ptr::null_mut();
    assert_eq!(unsafe { nf_path_from_json(json, &mut reparsed) }, NfStatus::Ok);

    unsafe {
        nf_string_free(json);
        nf_path_free(reparsed);
        nf_path_free(path);
        nf_plan_free(plan);
        nf_scenario_free(sc);
    }
}

#[test]
fn enclosed_target_is_no_solution() {
    let doc = CString::new(
        r#"{"start_pose": {"position": [0, 0, 0.03], "orientation": [1, 0, 0, 0]},
            "target": {"center": [0, 0, 0], "radius": 0.005},
            "bounds": {"min": [-0.05, -0.05, -0.01], "max": [0.05, 0.05, 0.05]},
            "obstacles": {"spheres": [], "boxes": [{"min": [-0.02, -0.02, -0.009], "max": [0.02, 0.02, 0.012]}]}}"#,
    )
    .unwrap();
    let mut sc = ptr::null_mut();
    assert_eq!(unsafe { nf_scenario_from_json(doc.as_ptr(), ptr::null(), &mut sc) }, NfStatus::Ok);
    let opts = NfPlannerOptions {
        iterations: 500,
        time_s: 0.0,
        seed: 0,
        cost_mode: NfCostMode::Length,
        epsilon: 0.0,
    };
    let mut plan = ptr::dangling_mut::<NfPlan>();
    assert_eq!(unsafe { nf_plan(sc, &opts, &mut plan) }, NfStatus::NoSolution);
    assert!(plan.is_null());
    unsafe { nf_scenario_free(sc) };
}
