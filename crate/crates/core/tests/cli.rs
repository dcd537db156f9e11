// Copyright 2026 The critical-prep Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use critical_prep::analysis::analytic_qfi_bound;
use critical_prep::prune::{pruned_task, SimilarityReport};
use critical_prep::rl::TaskSpec;
use critical_prep::schedule::{ControlField, ControlKind, CouplingRamp, PulseSchedule};

const DESK: &str = r#"
[model]
kind = "rabi"
Omega = 50.0
g0 = 0.01
gc = 1.0
fock_cutoff = 40

[schedule]
steps = 20
fields = ["quadrature_squared"]

[run]
episodes = 30
seed = 7
run_id = "t"
"#;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_critical-prep"))
        .args(args)
        .env_remove("CRITICAL_PREP_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = bin(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

struct Fixture {
    dir: tempfile::TempDir,
}

impl Fixture {
    fn new(config: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("run.toml"), config).unwrap();
        Self { dir }
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.dir.path().join(rel)
    }

    fn s(&self, rel: &str) -> String {
        self.path(rel).to_string_lossy().into_owned()
    }

    fn train(&self, out: &str) -> PathBuf {
        ok(&["train", "--config", &self.s("run.toml"), "--output-dir", &self.s(out)]);
        self.path(out)
    }
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn csv_rows(p: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = read(p);
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn missing_config_exits_1_with_path() {
    let out = bin(&["train", "--config", "/nonexistent/run.toml"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("/nonexistent/run.toml"));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(bin(&["analyze", "heatmap"]).status.code(), Some(1));
    assert_eq!(bin(&["--help"]).status.code(), Some(0));
}

#[test]
fn unknown_config_key_is_named() {
    let fx = Fixture::new(&DESK.replace("seed = 7", "seed = 7\nbudget = 3"));
    let out = bin(&["train", "--config", &fx.s("run.toml")]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("budget"), "{}", stderr(&out));
}

#[test]
fn budget_one_emits_one_record() {
    let fx = Fixture::new(DESK);
    ok(&["train", "--config", &fx.s("run.toml"), "--episodes", "1", "--output-dir", &fx.s("o")]);
    let lines = read(&fx.path("o/episodes.jsonl"));
    assert_eq!(lines.lines().count(), 1);
    let rec: serde_json::Value = serde_json::from_str(lines.lines().next().unwrap()).unwrap();
    assert_eq!(rec["episode"], 0);
}

#[test]
fn train_is_deterministic() {
    let fx = Fixture::new(DESK);
    let a = fx.train("a");
    let b = fx.train("b");
    assert_eq!(read(&a.join("summary.json")), read(&b.join("summary.json")));
    assert_eq!(read(&a.join("episodes.jsonl")).lines().count(), 30);
    let stdout = ok(&["train", "--config", &fx.s("run.toml"), "--output-dir", &fx.s("c")]);
    assert!(stdout.contains("best F ="), "{stdout}");
}

#[test]
fn analysis_json_is_deterministic() {
    let fx = Fixture::new(DESK);
    let a = fx.train("a");
    let sched = a.join("best_schedule.json").to_string_lossy().into_owned();
    let cfg = fx.s("run.toml");
    for (i, out) in ["x", "y"].iter().enumerate() {
        let o = fx.s(out);
        ok(&["evaluate", "--config", &cfg, "--schedule", &sched, "--output-dir", &o]);
        ok(&["prune", "--config", &cfg, "--schedule", &sched, "--output-dir", &o]);
        ok(&[
            "analyze", "robustness", "--config", &cfg, "--schedule", &sched, "--output-dir", &o,
            "--realizations", "8", "--beta", "0,0.03", "--workers", &(i + 1).to_string(),
        ]);
    }
    for name in ["t_evaluate.json", "t_similarity.json", "t_prune.json", "t_robustness.json"] {
        assert_eq!(read(&fx.path("x").join(name)), read(&fx.path("y").join(name)), "{name}");
    }
}

fn frozen_schedule(g0: f64) -> PulseSchedule {
    let ramp = CouplingRamp::linear(g0, g0, 2.0).unwrap();
    let field = ControlField::zero(ControlKind::QuadratureSquared, 20);
    PulseSchedule::new(2.0, 20, 1.0, ramp, vec![field]).unwrap()
}

#[test]
fn frozen_zero_schedule_is_stationary() {
    let fx = Fixture::new(DESK);
    frozen_schedule(0.01).save(&fx.path("frozen.json")).unwrap();
    ok(&["evaluate", "--config", &fx.s("run.toml"), "--schedule", &fx.s("frozen.json"), "--output-dir", &fx.s("o")]);
    let v: serde_json::Value = serde_json::from_str(&read(&fx.path("o/t_evaluate.json"))).unwrap();
    assert!(v["fidelity"].as_f64().unwrap() >= 1.0 - 1e-6, "{v}");
    let (header, rows) = csv_rows(&fx.path("o/t_trajectory.csv"));
    assert_eq!(header[0], "time");
    assert_eq!(rows.len(), 21);
}

#[test]
fn open_with_zero_rates_matches_closed() {
    let fx = Fixture::new(DESK);
    let a = fx.train("a");
    let sched = a.join("best_schedule.json").to_string_lossy().into_owned();
    let cfg = fx.s("run.toml");
    ok(&["evaluate", "--config", &cfg, "--schedule", &sched, "--output-dir", &fx.s("c")]);
    ok(&["evaluate", "--config", &cfg, "--schedule", &sched, "--output-dir", &fx.s("o"), "--open"]);
    let f = |d: &str| -> f64 {
        let v: serde_json::Value = serde_json::from_str(&read(&fx.path(d).join("t_evaluate.json"))).unwrap();
        v["fidelity"].as_f64().unwrap()
    };
    assert!((f("c") - f("o")).abs() < 1e-6, "{} vs {}", f("c"), f("o"));
}

#[test]
fn malformed_schedule_exits_1_naming_the_field() {
    let fx = Fixture::new(DESK);
    let mut v = serde_json::to_value(frozen_schedule(0.01)).unwrap();
    v["fields"][0]["phase"] = "zero".into();
    std::fs::write(fx.path("bad.json"), v.to_string()).unwrap();
    let out = bin(&["evaluate", "--config", &fx.s("run.toml"), "--schedule", &fx.s("bad.json")]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("fields[0].phase"), "{}", stderr(&out));
}

#[test]
fn leaking_evaluation_is_a_runtime_error() {
    let fx = Fixture::new(&DESK.replace("fock_cutoff = 40", "fock_cutoff = 4"));
    let ramp = CouplingRamp::linear(0.01, 1.0, 3.0).unwrap();
    let mut field = ControlField::zero(ControlKind::Displacement, 20);
    field.amplitudes[1..19].fill(5.0);
    PulseSchedule::new(3.0, 20, 1.0, ramp, vec![field]).unwrap().save(&fx.path("s.json")).unwrap();
    let out = bin(&["evaluate", "--config", &fx.s("run.toml"), "--schedule", &fx.s("s.json"), "--output-dir", &fx.s("o")]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn prune_ranks_the_only_field_first() {
    let fx = Fixture::new(DESK);
    let ramp = CouplingRamp::linear(0.01, 0.8, 3.0).unwrap();
    let mut fields: Vec<ControlField> = ControlKind::ALL.iter().map(|&k| ControlField::zero(k, 20)).collect();
    fields[4].amplitudes[1..19].fill(2.0);
    PulseSchedule::new(3.0, 20, 1.5, ramp, fields).unwrap().save(&fx.path("s.json")).unwrap();
    let stdout = ok(&["prune", "--config", &fx.s("run.toml"), "--schedule", &fx.s("s.json"), "--output-dir", &fx.s("o")]);
    assert!(stdout.contains("qubit_x"), "{stdout}");
    let text = read(&fx.path("o/t_similarity.json"));
    let report: SimilarityReport = serde_json::from_str(&text).unwrap();
    assert_eq!(report.ranking[0], ControlKind::QubitX);
    assert_eq!(serde_json::to_string_pretty(&report).unwrap(), text.trim_end());

    let all = TaskSpec::desk_scale().with_fields(&ControlKind::ALL);
    assert_eq!(pruned_task(&all, &report, 5).unwrap().field_mask, all.field_mask);
    assert!(pruned_task(&all, &report, 6).is_err());
}

#[test]
fn prune_retrain_writes_stage_two() {
    let fx = Fixture::new(&DESK.replace("episodes = 30", "episodes = 4"));
    let a = fx.train("a");
    let sched = a.join("best_schedule.json").to_string_lossy().into_owned();
    ok(&["prune", "--config", &fx.s("run.toml"), "--schedule", &sched, "--retrain", "--output-dir", &fx.s("p")]);
    assert_eq!(read(&fx.path("p/stage2/episodes.jsonl")).lines().count(), 4);
    let v: serde_json::Value = serde_json::from_str(&read(&fx.path("p/t_prune.json"))).unwrap();
    assert_eq!(v["stage2"]["episodes"], 4);
}

#[test]
fn spectrum_shape() {
    let fx = Fixture::new(DESK);
    ok(&["analyze", "spectrum", "--config", &fx.s("run.toml"), "--output-dir", &fx.s("o"), "--fock-cutoff", "24"]);
    let (header, rows) = csv_rows(&fx.path("o/t_spectrum.csv"));
    assert_eq!(header.len(), 11);
    assert_eq!(header[10], "gap10");
    assert_eq!(rows.len(), 101);
    assert!(rows.iter().all(|r| r.len() == 11));
    assert!((rows[100][0] - 1.0).abs() < 1e-12);
}

#[test]
fn static_qfi_matches_the_bound() {
    let fx = Fixture::new(DESK);
    ok(&["analyze", "qfi", "--static", "--g", "0.3,0.5,0.7,0.9", "--output-dir", &fx.s("o")]);
    let (header, rows) = csv_rows(&fx.path("o/static_qfi.csv"));
    assert_eq!(header, ["time", "qfi", "bound"]);
    for (row, g) in rows.iter().zip([0.3, 0.5, 0.7, 0.9]) {
        let bound = analytic_qfi_bound(g).unwrap();
        assert!((row[1] / bound - 1.0).abs() < 0.01, "g = {g}: {} vs {bound}", row[1]);
    }
}

#[test]
fn robustness_beta_zero_has_zero_std() {
    let fx = Fixture::new(DESK);
    let a = fx.train("a");
    let sched = a.join("best_schedule.json").to_string_lossy().into_owned();
    ok(&[
        "analyze", "robustness", "--config", &fx.s("run.toml"), "--schedule", &sched,
        "--output-dir", &fx.s("o"), "--beta", "0", "--chi", "phi2", "--realizations", "5",
    ]);
    let (header, rows) = csv_rows(&fx.path("o/t_robustness_phi2.csv"));
    assert_eq!(header, ["beta", "mean_fidelity", "std_fidelity", "failures"]);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][2], 0.0);
}

#[test]
fn wigner_populations_and_dissipation_outputs() {
    let fx = Fixture::new(DESK);
    let a = fx.train("a");
    let sched = a.join("best_schedule.json").to_string_lossy().into_owned();
    let cfg = fx.s("run.toml");
    let o = fx.s("o");
    ok(&["analyze", "wigner", "--config", &cfg, "--schedule", &sched, "--output-dir", &o, "--points", "21"]);
    let (header, rows) = csv_rows(&fx.path("o/t_wigner_final.csv"));
    assert_eq!(header, ["x", "p", "w"]);
    assert_eq!(rows.len(), 21 * 21);
    ok(&["analyze", "populations", "--config", &cfg, "--schedule", &sched, "--output-dir", &o, "--m", "3"]);
    let (header, rows) = csv_rows(&fx.path("o/t_populations.csv"));
    assert_eq!(header, ["time", "g", "P0", "P1", "P2"]);
    assert_eq!(rows.len(), 21);
    assert!(rows.iter().all(|r| r[2..].iter().sum::<f64>() <= 1.0 + 1e-9));
    ok(&["analyze", "dissipation", "--config", &cfg, "--schedule", &sched, "--output-dir", &o, "--kappas", "0,0.01"]);
    let text = read(&fx.path("o/t_dissipation.csv"));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "kappa,fidelity,error");
    assert_eq!(lines.len(), 3);
    // the error column is empty for successful runs
    assert!(lines[1].starts_with("0,0.") && lines[1].ends_with(','), "{}", lines[1]);
}

#[test]
fn outputs_stay_in_output_dir() {
    let fx = Fixture::new(DESK);
    let out = Command::new(env!("CARGO_BIN_EXE_critical-prep"))
        .args(["analyze", "spectrum", "--config", "run.toml", "--g-step", "0.5", "--fock-cutoff", "12"])
        .current_dir(fx.dir.path())
        .env("CRITICAL_PREP_OUTPUT_DIR", "from-env")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let mut entries: Vec<String> = std::fs::read_dir(fx.dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    entries.sort();
    assert_eq!(entries, ["from-env", "run.toml"]);
    assert!(fx.path("from-env/t_spectrum.csv").exists());
}
