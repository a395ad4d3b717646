use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;
use tempfile::TempDir;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn config(name: &str) -> PathBuf {
    root().join("configs").join(name)
}

struct Run {
    code: i32,
    dir: TempDir,
    stderr: String,
}

impl Run {
    fn json(&self, name: &str) -> Value {
        serde_json::from_slice(&fs::read(self.dir.path().join(name)).unwrap()).unwrap()
    }

    fn csv(&self, name: &str) -> Vec<Vec<String>> {
        let text = fs::read_to_string(self.dir.path().join(name)).unwrap();
        assert!(!text.contains('\r'));
        text.lines().map(|l| l.split(',').map(str::to_string).collect()).collect()
    }

    fn has(&self, name: &str) -> bool {
        self.dir.path().join(name).exists()
    }
}

fn run(command: &str, cfg: &Path, extra: &[&str]) -> Run {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_parallel-spectra"))
        .arg(command)
        .arg("--config")
        .arg(cfg)
        .arg("--output-dir")
        .arg(dir.path())
        .args(extra)
        .env_remove("SOURCE_DATE_EPOCH")
        .output()
        .unwrap();
    Run { code: out.status.code().unwrap(), dir, stderr: String::from_utf8_lossy(&out.stderr).into_owned() }
}

fn write_config(dir: &TempDir, body: &str) -> PathBuf {
    let p = dir.path().join("cfg.json");
    fs::write(&p, body).unwrap();
    p
}

fn validator(schema: &str) -> jsonschema::Validator {
    let dir = root().join("crates/cli/schemas");
    let load = |name: &str| -> Value { serde_json::from_slice(&fs::read(dir.join(name)).unwrap()).unwrap() };
    let config = jsonschema::Resource::from_contents(load("config.schema.json")).unwrap();
    jsonschema::options().with_resource("json-schema:///config.schema.json", config).build(&load(schema)).unwrap()
}

fn assert_valid(schema: &str, doc: &Value) {
    let v = validator(schema);
    let errors: Vec<String> = v.iter_errors(doc).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    assert!(errors.is_empty(), "{schema}: {errors:?}");
}

#[test]
fn spectrum_lists_every_eigenvalue() {
    let r = run("spectrum", &config("n2.json"), &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rows = r.csv("spectrum.csv");
    assert_eq!(rows[0], ["index", "system", "re_energy", "im_energy", "residual"]);
    assert_eq!(rows.len(), 13);
    for sys in ["H", "N", "NDAG"] {
        assert_eq!(rows.iter().filter(|row| row[1] == sys).count(), 4);
    }
    assert!(!r.has("matches.csv"));
    assert_valid("run.schema.json", &r.json("run.json"));
}

#[test]
fn hermitian_limit_gives_identical_rows() {
    let r = run(
        "spectrum",
        &config("n2.json"),
        &["--set", "params.gamma=0", "--set", "params.kappa=0", "--set", "params.v=0"],
    );
    assert_eq!(r.code, 0);
    let rows = r.csv("spectrum.csv");
    let energies = |sys: &str| -> Vec<(String, String)> {
        rows.iter().filter(|row| row[1] == sys).map(|row| (row[2].clone(), row[3].clone())).collect()
    };
    assert_eq!(energies("H"), energies("N"));
}

#[test]
fn match_flags_the_common_subspace() {
    let r = run("spectrum", &config("packet_n300.json"), &["--match"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rows = r.csv("spectrum.csv");
    let matched = rows[0].iter().position(|h| h == "matched").unwrap();
    for sys in ["H", "N", "NDAG"] {
        assert_eq!(rows.iter().filter(|row| row[1] == sys && row[matched] == "true").count(), 149);
    }
    assert_eq!(r.csv("matches.csv").len(), 150);
}

#[test]
fn bad_configs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write_config(&dir, r#"{"model":{"kind":"uniform","chain_length":2},"params":{"gamma":1},"extra":1}"#);
    for cmd in ["spectrum", "sweep", "verify", "zero-modes", "evolve"] {
        assert_eq!(run(cmd, &unknown, &[]).code, 2, "{cmd}");
        assert_eq!(run(cmd, &config("n2.json"), &["--set", "params.gamma=\"x\""]).code, 2, "{cmd}");
        assert_eq!(run(cmd, &dir.path().join("missing.json"), &[]).code, 2, "{cmd}");
    }
    let out = Command::new(env!("CARGO_BIN_EXE_parallel-spectra")).arg("spectrum").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_finds_the_breaking_point() {
    let r = run("sweep", &config("sweep_n2.json"), &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(r.csv("sweep.csv")[0], ["param_value", "index", "re", "im"]);
    assert_eq!(r.csv("sweep.csv").len(), 1 + 301 * 4);
    let t = r.json("transitions.json");
    assert_valid("transitions.schema.json", &t);
    let found = &t["transitions"][0];
    assert!((found["location"].as_f64().unwrap() - 2.0).abs() < 1e-3);
    assert_eq!(found["exceptional_point"], true);
}

#[test]
fn sweep_degenerate_and_bad_ranges() {
    let one =
        run("sweep", &config("sweep_n2.json"), &["--set", "scenario.sweep.to=0", "--set", "scenario.sweep.steps=1"]);
    assert_eq!(one.code, 0, "{}", one.stderr);
    let rows = one.csv("sweep.csv");
    assert_eq!(rows.len(), 5);
    assert!(rows[1..].iter().all(|r| r[0] == "0.0"));
    assert_eq!(run("sweep", &config("sweep_n2.json"), &["--set", "scenario.sweep.to=-1"]).code, 2);
    assert_eq!(run("sweep", &config("n2.json"), &[]).code, 2);
    assert_eq!(run("sweep", &config("sweep_n2.json"), &["--set", "scenario.sweep.param=delta"]).code, 2);
}

#[test]
fn ssh_sweep_flags_the_critical_coupling() {
    let r = run(
        "sweep",
        &config("ssh20.json"),
        &["--set", r#"scenario.sweep={"param":"gamma","from":0.1,"to":0.2,"steps":21}"#],
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    let t = r.json("transitions.json");
    let first = &t["transitions"][0];
    assert!((first["location"].as_f64().unwrap() - 0.1478).abs() < 1e-3);
    assert_eq!(first["exceptional_point"], true);
}

#[test]
fn verify_reports_closed_forms() {
    let r = run("verify", &config("n2.json"), &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let c = r.json("correspondence.json");
    assert_valid("correspondence.schema.json", &c);
    assert_eq!(c["all_verified"], true);
    let phi3 = c["closed_form"].as_array().unwrap().iter().find(|s| s["formula"] == "phi_3").unwrap();
    assert!((phi3["proportionality"]["re"].as_f64().unwrap() + 2.0).abs() < 1e-10);
    assert_eq!(phi3["constraint"]["combination"], "V-kappa");
    assert_eq!(phi3["config_satisfies_constraint"], true);
}

#[test]
fn verify_hermitian_limit_has_constant_two() {
    let r = run(
        "verify",
        &config("n2.json"),
        &["--set", "params.gamma=0", "--set", "params.kappa=0", "--set", "params.v=0"],
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    let c = r.json("correspondence.json");
    let states = c["states"].as_array().unwrap();
    assert_eq!(states.len(), 4);
    for s in states {
        assert_eq!(s["verified"], true);
        assert!((s["proportionality"]["re"].as_f64().unwrap() - 2.0).abs() < 1e-10, "{s}");
    }
}

#[test]
fn verify_failure_still_writes_report() {
    let r = run("verify", &config("n2.json"), &["--set", "tolerances.eig=1e-17"]);
    assert_eq!(r.code, 1);
    let c = r.json("correspondence.json");
    assert_valid("correspondence.schema.json", &c);
    assert_eq!(c["all_verified"], false);
}

#[test]
fn zero_modes_uniform_and_ssh() {
    let u = run("zero-modes", &config("zero_modes_m1.json"), &[]);
    assert_eq!(u.code, 0, "{}", u.stderr);
    let rows = u.csv("zero_modes.csv");
    assert_eq!(rows[0], ["state", "site", "re", "im"]);
    assert_eq!(rows.iter().filter(|r| r[0] == "Phi_minus").count(), 7);
    let j = u.json("zero_modes.json");
    assert_valid("zero_modes.schema.json", &j);
    assert!(j["biorthogonal_overlap"]["re"].as_f64().unwrap().abs() < 1e-12);
    assert_eq!(j["exceptional_points"][0]["size"], 3);

    let s = run("zero-modes", &config("ssh20.json"), &[]);
    assert_eq!(s.code, 0, "{}", s.stderr);
    let j = s.json("zero_modes.json");
    assert_valid("zero_modes.schema.json", &j);
    assert!((j["kappa_c"].as_f64().unwrap() - 1.1 * (9.0f64 / 11.0).powi(10)).abs() < 1e-15);
}

#[test]
fn zero_modes_reject_unsupported_models() {
    assert_eq!(run("zero-modes", &config("ssh20.json"), &["--set", "model.delta=0"]).code, 2);
    assert_eq!(run("zero-modes", &config("zero_modes_m1.json"), &["--set", "model.total_sites=8"]).code, 2);
    let dir = tempfile::tempdir().unwrap();
    let custom = write_config(
        &dir,
        r#"{"model":{"kind":"custom","sites":3,"edges":[[0,1,-1.0],[1,2,-1.0]],"a":0,"b":2,"coupling":0},"params":{}}"#,
    );
    assert_eq!(run("zero-modes", &custom, &[]).code, 2);
}

#[test]
fn evolve_twin_scenario() {
    let r = run("evolve", &config("packet_n60.json"), &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let a = r.json("audit.json");
    assert_valid("audit.schema.json", &a);
    assert_eq!(a["passes"], true);
    assert!(a["bulk_evolution_deviation"].as_f64().unwrap() < 1e-6);
    let trace = r.csv("trace.csv");
    assert_eq!(trace[0], ["time", "site", "prob_phi", "prob_phitilde", "prob_psi"]);
    assert_eq!(trace.len(), 1 + 5 * 60);
    // ψ profiles are mirror-symmetric at every dump time
    for t in 0..5 {
        let block = &trace[1 + 60 * t..1 + 60 * (t + 1)];
        for l in 0..60 {
            let p: f64 = block[l][4].parse().unwrap();
            let q: f64 = block[59 - l][4].parse().unwrap();
            assert!((p - q).abs() < 1e-8);
        }
    }
    assert_eq!(r.csv("globals.csv")[0][0], "time");
}

#[test]
fn evolve_hermitian_limit_splits_evenly() {
    let r = run("evolve", &config("packet_n60.json"), &["--set", "params.gamma=0"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    for row in &r.csv("trace.csv")[1..] {
        let phi: f64 = row[2].parse().unwrap();
        let psi: f64 = row[4].parse().unwrap();
        assert!((phi - psi / 4.0).abs() < 1e-12, "{row:?}");
    }
}

#[test]
fn evolve_audit_failure_exits_one() {
    let r = run("evolve", &config("packet_n60.json"), &["--set", "scenario.audit_threshold=1e-30"]);
    assert_eq!(r.code, 1);
    assert_eq!(r.json("audit.json")["passes"], false);
    let leak = run("evolve", &config("packet_n60.json"), &["--set", "scenario.truncation_threshold=1e-30"]);
    assert_eq!(leak.code, 1);
    assert_valid("audit.schema.json", &leak.json("audit.json"));
    assert_eq!(run("evolve", &config("packet_n60.json"), &["--set", "scenario.dump_times=[500]"]).code, 2);
}

#[test]
fn shipped_configs_match_schema() {
    let v = validator("config.schema.json");
    for entry in fs::read_dir(root().join("configs")).unwrap() {
        let p = entry.unwrap().path();
        let doc: Value = serde_json::from_slice(&fs::read(&p).unwrap()).unwrap();
        assert!(v.is_valid(&doc), "{}", p.display());
    }
}

#[test]
fn timestamp_follows_source_date_epoch() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_parallel-spectra"))
        .args(["spectrum", "--config"])
        .arg(config("n2.json"))
        .arg("--output-dir")
        .arg(dir.path())
        .env("SOURCE_DATE_EPOCH", "0")
        .output()
        .unwrap();
    assert!(out.status.success());
    let meta: Value = serde_json::from_slice(&fs::read(dir.path().join("run.json")).unwrap()).unwrap();
    assert_eq!(meta["timestamp"], 0);
    assert_valid("run.schema.json", &meta);
}
