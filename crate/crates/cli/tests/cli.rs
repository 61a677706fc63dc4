use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn species(name: &str) -> PathBuf {
    root().join(format!("fixtures/species/{name}.json"))
}

fn table1() -> PathBuf {
    root().join("fixtures/trap/table1.json")
}

fn polyion(species_name: &str, experiment: &str, out: &Path, extra: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polyion"))
        .arg("--species")
        .arg(species(species_name))
        .arg("--trap")
        .arg(table1())
        .args(["--experiment", experiment, "--seed", "11", "--out"])
        .arg(out)
        .args(extra)
        .output()
        .expect("binary runs")
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn levels_on_asymmetric_top_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = polyion("propanediol-like", "levels", &out, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc = read_json(&out.join("levels.json"));
    let n = doc["n_states"].as_u64().unwrap();
    assert_eq!(doc["levels"].as_array().unwrap().len() as u64, n);
    assert!(doc["n_manifolds"].as_u64().unwrap() > 1);
    assert_eq!(doc["meta"]["seed"], 11);
    assert_eq!(doc["meta"]["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn unknown_experiment_leaves_no_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = polyion("generic76", "teleport", &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn schema_errors_are_collected_and_named() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = polyion(
        "generic76",
        "alpha",
        &out,
        &[
            "--set",
            "lattice.wavelength_nm=-5",
            "--set",
            "lattice.polarization=[1,1,1]",
        ],
    );
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(msg.contains("lattice.wavelength_nm"), "{msg}");
    assert!(msg.contains("orthogonal"), "{msg}");
    assert!(!out.exists());
}

#[test]
fn unknown_keys_and_sections_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = polyion(
        "generic76",
        "alpha",
        &out,
        &["--set", "bogus.x=1", "--set", "trap.omega_w_MHz=1"],
    );
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(msg.contains("bogus"), "{msg}");
    assert!(msg.contains("omega_w_MHz"), "{msg}");
}

#[test]
fn missing_input_file_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = polyion("no-such-species", "levels", &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn check_validates_without_running() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = polyion("generic76", "heat", &out, &["--check"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn unstable_step_is_a_numeric_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = polyion(
        "generic76",
        "heat",
        &out,
        &["--set", "heating.dt_ns=1000", "--set", "heating.n_traj=2"],
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

const SHORT_HEAT: [&str; 6] = [
    "--set",
    "heating.n_traj=4",
    "--set",
    "heating.t_end_ms=0.05",
    "--set",
    "heating.n_windows=5",
];

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    v.sort();
    v
}

#[test]
fn heat_outputs_are_byte_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(polyion("generic76", "heat", &a, &SHORT_HEAT)
        .status
        .success());
    let o = Command::new(env!("CARGO_BIN_EXE_polyion"))
        .env("POLYION_THREADS", "3")
        .arg("--species")
        .arg(species("generic76"))
        .arg("--trap")
        .arg(table1())
        .args(["--experiment", "heat", "--seed", "11", "--out"])
        .arg(&b)
        .args(SHORT_HEAT)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let fa = files(&a);
    assert_eq!(fa.len(), 3);
    assert_eq!(fa, files(&b));

    let s = read_json(&a.join("heat_summary.json"));
    for k in ["rate_K_per_s", "stderr", "n_traj", "params_hash", "seed"] {
        assert!(s.get(k).is_some(), "missing {k}");
    }
    assert_eq!(s["n_traj"], 4);
    assert_eq!(s["params_hash"], s["meta"]["config_hash"]);
    let traj = std::fs::read_to_string(a.join("trajectory.csv")).unwrap();
    assert!(traj.starts_with("# config_hash="));
    assert_eq!(
        traj.lines().nth(1),
        Some("t_us,x1_nm,y1_nm,z1_nm,x2_nm,y2_nm,z2_nm,label,E_total_mK")
    );
}

#[test]
fn different_seed_changes_hashless_payload() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    assert!(polyion("generic76", "heat", &a, &SHORT_HEAT)
        .status
        .success());
    let b = dir.path().join("b");
    let o = Command::new(env!("CARGO_BIN_EXE_polyion"))
        .arg("--species")
        .arg(species("generic76"))
        .arg("--trap")
        .arg(table1())
        .args(["--experiment", "heat", "--seed", "12", "--out"])
        .arg(&b)
        .args(SHORT_HEAT)
        .output()
        .unwrap();
    assert!(o.status.success());
    let ra = read_json(&a.join("heat_summary.json"))["rate_K_per_s"]
        .as_f64()
        .unwrap();
    let rb = read_json(&b.join("heat_summary.json"))["rate_K_per_s"]
        .as_f64()
        .unwrap();
    assert_ne!(ra, rb);
}

#[test]
fn readout_log_has_one_line_per_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = polyion(
        "generic76",
        "readout",
        &out,
        &["--set", "experiment.runs=20"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(out.join("readout.jsonl")).unwrap();
    let lines: Vec<Value> = text
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert!(lines[0].get("meta").is_some());
    assert_eq!(lines.len(), 21);
    for (i, l) in lines[1..].iter().enumerate() {
        assert_eq!(l["run_id"], i);
        assert_eq!(l["step"], 0);
        assert!(l["t_model_ms"].as_f64().unwrap() > 0.0);
        assert!(matches!(
            l["outcome"].as_str(),
            Some("heated" | "not_heated")
        ));
    }
}

#[test]
fn noiseless_search_always_finds_the_state() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = polyion(
        "propanediol-like",
        "search",
        &out,
        &[
            "--set",
            "experiment.runs=200",
            "--set",
            "thermometer.false_positive=0",
            "--set",
            "thermometer.false_negative=0",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let s = read_json(&out.join("search_summary.json"));
    assert_eq!(s["success_rate"], 1.0);
    assert!(
        s["max_determinations"].as_u64().unwrap() <= s["bound_3_ceil_log2_n"].as_u64().unwrap()
    );
}

#[test]
fn prepare_chiral_and_scan_produce_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p");
    assert!(polyion(
        "propanediol-like",
        "prepare",
        &p,
        &["--set", "experiment.runs=50"]
    )
    .status
    .success());
    let s = read_json(&p.join("prepare_summary.json"));
    assert!(s["mean_rounds"].as_f64().unwrap() >= 1.0);

    let c = dir.path().join("c");
    assert!(polyion("generic76", "chiral", &c, &[]).status.success());
    assert!(
        read_json(&c.join("chiral.json"))["contrast"]
            .as_f64()
            .unwrap()
            >= 0.99
    );

    let r = dir.path().join("r");
    let o = polyion(
        "generic76",
        "scan",
        &r,
        &[
            "--set",
            "experiment.scan_kind=ramsey",
            "--set",
            "experiment.scan_points=11",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(r.join("scan.csv")).unwrap();
    assert_eq!(csv.lines().nth(1), Some("detuning_kHz,transfer_prob"));
    assert_eq!(csv.lines().count(), 13);
}

#[test]
fn potential_and_alpha_carry_units() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p");
    assert!(polyion("generic76", "potential", &p, &[]).status.success());
    let d = read_json(&p.join("derived.json"));
    let u0 = d["U0_over_h_MHz"].as_f64().unwrap();
    assert!((6.5..7.5).contains(&u0), "{u0}");
    let csv = std::fs::read_to_string(p.join("potential.csv")).unwrap();
    assert_eq!(csv.lines().nth(1), Some("state,z_nm,U_over_h_MHz"));

    let a = dir.path().join("a");
    assert!(polyion("generic76", "alpha", &a, &[]).status.success());
    let csv = std::fs::read_to_string(a.join("alpha.csv")).unwrap();
    assert!(
        csv.lines().any(|l| l.starts_with("2,\"1_01,0\",1.7e-39,")),
        "override not applied"
    );
}

#[test]
fn transitions_report_reachability() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t");
    assert!(polyion("co-like", "transitions", &t, &[]).status.success());
    let s = read_json(&t.join("transitions_summary.json"));
    assert_eq!(s["all_reachable"], false);
    assert!(t.join("grotrian.json").exists());
}
