use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use needle_core::planner::ConvergenceLog;
use needle_core::stats::quartiles;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_needle-planner"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn run(cmd: &mut Command) -> (i32, String, String) {
    let Output { status, stdout, stderr } = cmd.output().expect("binary runs");
    (
        status.code().expect("exited normally"),
        String::from_utf8(stdout).unwrap(),
        String::from_utf8(stderr).unwrap(),
    )
}

/// Value printed after `label` on its own output line.
fn printed(stdout: &str, label: &str) -> f64 {
    let line = stdout
        .lines()
        .find(|l| l.starts_with(label))
        .unwrap_or_else(|| panic!("no `{label}` in {stdout}"));
    line[label.len()..]
        .trim_start_matches([' ', '='])
        .split_whitespace()
        .next()
        .unwrap()
        .parse()
        .unwrap()
}

#[test]
fn force_straight_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.csv");
    let (code, stdout, _) = run(bin()
        .args(["force", "--path"])
        .arg(fixture("straight_path.json"))
        .arg("--out")
        .arg(&out));
    assert_eq!(code, 0);
    assert!((printed(&stdout, "insertion force n(0)") - 8.775).abs() < 1e-12);
    assert_eq!(printed(&stdout, "max tissue force"), 0.0);
    let csv = fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("s_m,n_N,ft_N_per_m\n0,8.775,0\n"));
}

#[test]
fn force_distal_arc_and_zero_friction() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("nested/p.csv");
    let (code, stdout, _) = run(bin()
        .args(["force", "--path"])
        .arg(fixture("distal_arc_path.json"))
        .arg("--out")
        .arg(&out));
    assert_eq!(code, 0);
    assert!((printed(&stdout, "max tissue force") - 50.106).abs() < 1e-3);
    assert_eq!(printed(&stdout, "argmax s"), 0.05);

    let (code, stdout, _) = run(bin()
        .args(["force", "--tissue", "0,0,0.4", "--path"])
        .arg(fixture("distal_arc_path.json"))
        .arg("--out")
        .arg(&out));
    assert_eq!(code, 0);
    assert!((printed(&stdout, "max tissue force") - 4.0).abs() < 1e-12);
}

#[test]
fn force_rejects_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"base_pose": {"position": [0, 0]}, "segments": []}"#).unwrap();
    let (code, _, stderr) = run(bin().args(["force", "--path"]).arg(&bad));
    assert_eq!(code, 1);
    assert!(stderr.contains("base_pose"), "{stderr}");

    let (code, _, stderr) = run(bin()
        .args(["force", "--tissue", "1,2", "--path"])
        .arg(fixture("straight_path.json")));
    assert_eq!(code, 1);
    assert!(stderr.contains("tissue"), "{stderr}");
}

fn write_csv(path: &Path, rows: &[(f64, f64)]) {
    let mut text = String::from("depth_m,force_N\n");
    for (d, f) in rows {
        text += &format!("{d},{f}\n");
    }
    fs::write(path, text).unwrap();
}

#[test]
fn fit_noiseless_and_noisy() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    let depths: Vec<f64> = (1..=20).map(|i| 0.005 * i as f64).collect();
    write_csv(&data, &depths.iter().map(|&d| (d, 0.4 + 83.75 * d)).collect::<Vec<_>>());
    let (code, stdout, _) = run(bin().args(["fit", "--data"]).arg(&data).arg("--out").arg(dir.path()));
    assert_eq!(code, 0);
    assert!((printed(&stdout, "F_p") - 0.4).abs() < 1e-9);
    assert!((printed(&stdout, "C") - 83.75).abs() < 1e-9);
    assert!((printed(&stdout, "R^2") - 1.0).abs() < 1e-12);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("fit.json")).unwrap()).unwrap();
    assert!((json["c_friction"].as_f64().unwrap() - 83.75).abs() < 1e-9);

    let noise = Normal::new(0.0, 0.05).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    write_csv(
        &data,
        &depths.iter().map(|&d| (d, 0.4 + 83.75 * d + noise.sample(&mut rng))).collect::<Vec<_>>(),
    );
    let (code, stdout, _) = run(bin().args(["fit", "--data"]).arg(&data).arg("--out").arg(dir.path()));
    assert_eq!(code, 0);
    assert!((printed(&stdout, "F_p") / 0.4 - 1.0).abs() < 0.05, "{stdout}");
    assert!((printed(&stdout, "C") / 83.75 - 1.0).abs() < 0.05);
    assert!(printed(&stdout, "R^2") > 0.99);
}

#[test]
fn fit_rejects_degenerate_data() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    write_csv(&data, &[(0.05, 4.0), (0.05, 4.5), (0.05, 4.2)]);
    let (code, _, stderr) = run(bin().args(["fit", "--data"]).arg(&data));
    assert_eq!(code, 1);
    assert!(stderr.contains("rank"), "{stderr}");

    write_csv(&data, &[(0.01, 1.0), (0.02, 2.0)]);
    let (code, _, stderr) = run(bin().args(["fit", "--data"]).arg(&data));
    assert_eq!(code, 1);
    assert!(stderr.contains("at least 3"), "{stderr}");
}

#[test]
fn plan_input_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let doc = dir.path().join("s.json");
    fs::write(
        &doc,
        r#"{"start_pose": {"position": [0, 0, 0.1], "orientation": [1, 0, 0, 0]},
            "target": {"center": [0, 0, 0], "radius": -1},
            "bounds": {"min": [-0.1, -0.1, -0.1], "max": [0.1, 0.1, 0.2]},
            "obstacles": {"spheres": [], "boxes": []}}"#,
    )
    .unwrap();
    let (code, _, stderr) = run(bin().args(["plan", "--time", "1", "--scenario"]).arg(&doc));
    assert_eq!(code, 1);
    assert!(stderr.contains("target"), "{stderr}");

    let (code, _, stderr) = run(bin()
        .args(["plan", "--time", "1", "--scenario"])
        .arg(dir.path().join("missing.json")));
    assert_eq!(code, 1);
    assert!(stderr.contains("missing.json"), "{stderr}");
}

#[test]
fn plan_without_solution_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let doc = dir.path().join("enclosed.json");
    fs::write(
        &doc,
        r#"{"start_pose": {"position": [0, 0, 0.03], "orientation": [1, 0, 0, 0]},
            "target": {"center": [0, 0, 0], "radius": 0.005},
            "bounds": {"min": [-0.05, -0.05, -0.01], "max": [0.05, 0.05, 0.05]},
            "obstacles": {"spheres": [], "boxes": [{"min": [-0.02, -0.02, -0.009], "max": [0.02, 0.02, 0.012]}]}}"#,
    )
    .unwrap();
    let (code, stdout, _) = run(bin()
        .args(["plan", "--time", "0.001", "--seed", "9", "--scenario"])
        .arg(&doc)
        .arg("--out")
        .arg(dir.path()));
    assert_eq!(code, 2);
    assert!(stdout.contains("no solution"));
    let log = fs::read_to_string(dir.path().join("convergence_9.csv")).unwrap();
    assert_eq!(log, "wall_time_s,iteration,cost,mode\n");
    assert!(!dir.path().join("solution_9.json").exists());
}

fn plan_batch(out: &Path) -> (i32, String) {
    let (code, stdout, stderr) = run(bin()
        .args(["plan", "--iterations", "20000", "--seed", "7", "--runs", "3", "--scenario"])
        .arg(fixture("two_spheres.json"))
        .arg("--out")
        .arg(out)
        .env("NEEDLE_PLANNER_THREADS", "2"));
    assert!(stderr.is_empty(), "{stderr}");
    (code, stdout)
}

#[test]
fn batch_artifacts_are_reproducible_and_consistent() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (code, stdout) = plan_batch(a.path());
    assert_eq!(code, 0);
    assert!(stdout.contains("3/3 runs solved"), "{stdout}");
    assert_eq!(plan_batch(b.path()).0, 0);

    let mut names: Vec<String> = fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names.len(), 10, "{names:?}");
    for name in &names {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name} differs between identical runs"
        );
    }

    // summary statistics recomputed from the per-run logs
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["axis"], "iteration");
    let logs: Vec<ConvergenceLog> = (7..10)
        .map(|seed| {
            ConvergenceLog::parse_csv(&fs::read_to_string(a.path().join(format!("convergence_{seed}.csv"))).unwrap())
                .unwrap()
        })
        .collect();
    for point in summary["curve"].as_array().unwrap() {
        let at = point["at"].as_f64().unwrap();
        let costs: Vec<f64> = logs
            .iter()
            .map(|log| {
                log.entries
                    .iter()
                    .rev()
                    .find(|e| e.iteration as f64 <= at)
                    .map_or(f64::INFINITY, |e| e.cost)
            })
            .collect();
        let (lo, mid, hi) = quartiles(&costs).unwrap();
        let field = |k: &str| point[k].as_f64().unwrap_or(f64::INFINITY);
        assert_eq!((field("lower"), field("median"), field("upper")), (lo, mid, hi));
        assert!(field("lower") <= field("median") && field("median") <= field("upper"));
    }

    // every solution re-read by the force command reproduces its cost
    for seed in 7..10 {
        let solution = a.path().join(format!("solution_{seed}.json"));
        let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&solution).unwrap()).unwrap();
        let recorded = doc["bottleneck_cost"].as_f64().unwrap();
        let (code, stdout, _) = run(bin()
            .args(["force", "--path"])
            .arg(&solution)
            .arg("--out")
            .arg(a.path().join("reprofile.csv")));
        assert_eq!(code, 0);
        let recomputed = printed(&stdout, "max tissue force");
        assert!((recomputed - recorded).abs() <= 1e-9 * recorded, "{recomputed} vs {recorded}");
        fs::remove_file(a.path().join("reprofile.csv")).unwrap();
    }
}
