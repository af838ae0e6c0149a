use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn qdwalk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qdwalk"))
        .args(args)
        .output()
        .expect("binary runs")
}

/// Runs `sub` with `config` into a fresh directory; returns the directory
/// and the exit code.
fn run(sub: &str, config: &Path, extra: &[&str]) -> (TempDir, i32) {
    let out = TempDir::new().unwrap();
    let mut args = vec![
        sub,
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.path().to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    let res = qdwalk(&args);
    let code = res.status.code().expect("exit code");
    if code != 0 {
        eprintln!("{}", String::from_utf8_lossy(&res.stderr));
    }
    (out, code)
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn report(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join(name)).unwrap()).unwrap()
}

fn tsv_column(dir: &Path, name: &str, col: usize) -> Vec<f64> {
    fs::read_to_string(dir.join(name))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split('\t').nth(col).unwrap().parse().unwrap())
        .collect()
}

fn files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    names
}

#[test]
fn hadamard_cycle_spreads_linearly() {
    let (out, code) = run("walk", &configs().join("hadamard_cycle.toml"), &[]);
    assert_eq!(code, 0);
    assert_eq!(files(out.path()), ["distribution.tsv", "final_state.json", "report.json", "spread.tsv"]);
    let p = tsv_column(out.path(), "distribution.tsv", 1);
    assert_eq!(p.len(), 64);
    assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    let sigma = tsv_column(out.path(), "spread.tsv", 2);
    assert_eq!(sigma.len(), 31);
    // ballistic: sigma / n roughly constant, well above the diffusive sqrt(n)
    let ratio: Vec<f64> = (10..=30).map(|n| sigma[n] / n as f64).collect();
    assert!(ratio.iter().all(|r| (r - ratio[20]).abs() < 0.05), "{ratio:?}");
    assert!(sigma[30] > 2.0 * 30f64.sqrt());
}

#[test]
fn zero_steps_keep_the_initial_localization() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "k2.toml",
        "version = 1\nfamily = \"complete\"\nnodes = 2\nsteps = 0\n[start]\nkind = \"localized\"\nnode = 2\ncoin = 1\n",
    );
    let (out, code) = run("walk", &cfg, &[]);
    assert_eq!(code, 0);
    assert_eq!(
        fs::read_to_string(out.path().join("distribution.tsv")).unwrap(),
        "node\tprobability\n1\t0\n2\t1\n"
    );
}

#[test]
fn walk_from_graph_file_with_oracle() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("k4.txt"), "4\n1 2\n1 3\n1 4\n2 3\n2 4\n3 4\n").unwrap();
    let cfg = write_config(
        dir.path(),
        "walk.toml",
        "version = 1\ngraph = \"k4.txt\"\nsteps = 10\ncoin = \"dft\"\n[start]\nkind = \"random\"\n",
    );
    let (out, code) = run("walk", &cfg, &["--oracle", "--seed", "5"]);
    assert_eq!(code, 0);
    let r = report(out.path(), "report.json");
    assert_eq!(r["seed"], 5);
    assert_eq!(r["edges"], 6);
    assert!(r["oracle_deviation"].as_f64().unwrap() < 1e-10);

    let (out, code) = run("walk", &configs().join("complete_random.toml"), &["--oracle"]);
    assert_eq!(code, 0);
    let r = report(out.path(), "report.json");
    assert_eq!(r["seed"], 7);
    assert!(r["oracle_deviation"].as_f64().unwrap() < 1e-10);
}

#[test]
fn walk_snapshots() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "walk.toml",
        "version = 1\nfamily = \"path\"\nnodes = 5\nsteps = 4\nsnapshot_every = 2\n[start]\nkind = \"localized\"\nnode = 3\ncoin = 2\n",
    );
    let (out, code) = run("walk", &cfg, &[]);
    assert_eq!(code, 0);
    for name in ["state_00000.json", "state_00002.json", "state_00004.json"] {
        assert!(out.path().join(name).is_file(), "{name}");
    }
    assert!(!out.path().join("state_00001.json").exists());
}

#[test]
fn identity_decomposes_into_identity_stages() {
    let dir = TempDir::new().unwrap();
    let n = 4;
    let entries: Vec<String> = (0..n * n)
        .map(|i| if i % (n + 1) == 0 { "[1.0, 0.0]" } else { "[0.0, 0.0]" }.to_string())
        .collect();
    fs::write(
        dir.path().join("id.json"),
        format!("{{\"n\": {n}, \"entries\": [{}]}}", entries.join(", ")),
    )
    .unwrap();
    let cfg = write_config(dir.path(), "d.toml", "version = 1\nunitary = \"id.json\"\n");
    let (out, code) = run("decompose", &cfg, &["--oracle"]);
    assert_eq!(code, 0);
    let r = report(out.path(), "report.json");
    assert_eq!(r["stage_count"], 3);
    assert_eq!(r["reconstruction_error"], 0.0);
    let stages = report(out.path(), "stages.json");
    for stage in stages["stages"].as_array().unwrap() {
        for pair in stage["pairs"].as_array().unwrap() {
            let u = &pair["u"];
            assert!((u[0][0].as_f64().unwrap() - 1.0).abs() < 1e-15);
            assert!(u[1][0].as_f64().unwrap().abs() < 1e-15);
        }
    }
}

#[test]
fn random_unitary_decomposition() {
    let (out, code) = run("decompose", &configs().join("decompose_random.toml"), &["--oracle"]);
    assert_eq!(code, 0);
    let r = report(out.path(), "report.json");
    assert_eq!(r["n"], 8);
    assert_eq!(r["stage_count"], 7);
    assert!(r["reconstruction_error"].as_f64().unwrap() < 1e-10);
    assert!(r["oracle_deviation"].as_f64().unwrap() < 1e-10);
}

#[test]
fn odd_dimension_is_padded() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "d.toml", "version = 1\nrandom_dimension = 3\n");
    let (out, code) = run("decompose", &cfg, &[]);
    assert_eq!(code, 0);
    let r = report(out.path(), "report.json");
    assert_eq!(r["padded_n"], 4);
    assert_eq!(r["stage_count"], 3);
}

#[test]
fn non_unitary_input_is_an_invariant_violation() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("m.json"),
        r#"{"n": 2, "entries": [[1, 0], [1, 0], [0, 0], [1, 0]]}"#,
    )
    .unwrap();
    let cfg = write_config(dir.path(), "d.toml", "version = 1\nunitary = \"m.json\"\n");
    let res = qdwalk(&["decompose", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&res.stderr).contains("not unitary"));
}

#[test]
fn tolerance_failures_exit_with_four() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "d.toml", "version = 1\nrandom_dimension = 8\ntolerance = 0.0\n");
    let (out, code) = run("decompose", &cfg, &[]);
    assert_eq!(code, 4);
    // the outputs are still written for inspection
    assert!(out.path().join("report.json").is_file());
}

#[test]
fn conveyor_verification() {
    let (out, code) = run("conveyor-verify", &configs().join("conveyor.toml"), &["--oracle"]);
    assert_eq!(code, 0);
    let r = report(out.path(), "report.json");
    assert!(r["max_deviation"].as_f64().unwrap() <= 1e-10);
    assert!(r["max_register_amplitude"].as_f64().unwrap() < 1e-12);
    assert_eq!(r["rotations"], 50);
    assert_eq!(r["pi_transfers"], 100);
    assert!(r["walk_deviation"].as_f64().unwrap() <= 1e-10);

    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.toml", "version = 1\nn = 4\nstages = 20\nidentity = true\n");
    let (out, code) = run("conveyor-verify", &cfg, &[]);
    assert_eq!(code, 0);
    assert_eq!(report(out.path(), "report.json")["max_deviation"], 0.0);
}

#[test]
fn seeded_runs_are_byte_identical() {
    for (sub, cfg) in [
        ("conveyor-verify", "conveyor.toml"),
        ("walk", "complete_random.toml"),
        ("decompose", "decompose_random.toml"),
    ] {
        let (a, ca) = run(sub, &configs().join(cfg), &["--seed", "42", "--oracle"]);
        let (b, cb) = run(sub, &configs().join(cfg), &["--seed", "42", "--oracle"]);
        assert_eq!((ca, cb), (0, 0));
        let names = files(a.path());
        assert_eq!(names, files(b.path()));
        for name in &names {
            assert_eq!(
                fs::read(a.path().join(name)).unwrap(),
                fs::read(b.path().join(name)).unwrap(),
                "{sub}: {name}"
            );
        }
        assert_eq!(report(a.path(), "report.json")["seed"], 42);

        let (c, _) = run(sub, &configs().join(cfg), &["--seed", "43"]);
        assert_ne!(
            fs::read(a.path().join("report.json")).unwrap(),
            fs::read(c.path().join("report.json")).unwrap()
        );
    }
}

#[test]
fn stationary_high_barrier_gives_a_flat_trajectory() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "t.toml",
        "version = 1\n[timeline]\nramp_down = 2.0\nhold = 2.0\nramp_up = 2.0\nhigh = 30.0\nlow = 30.0\n",
    );
    let (out, code) = run("tdse", &cfg, &[]);
    assert_eq!(code, 0);
    let alpha = tsv_column(out.path(), "trajectory.tsv", 1);
    let beta = tsv_column(out.path(), "trajectory.tsv", 2);
    assert!(alpha.len() > 10);
    // residual tunnelling through the high barrier is of order (delta t)^2
    assert!(alpha.iter().all(|a| (a - 1.0).abs() < 1e-4));
    assert!(beta.iter().all(|b| b.abs() < 1e-4));
}

#[test]
fn tdse_pi_hold_transfers_the_electron() {
    let (out, code) = run("tdse", &configs().join("tdse_pi.toml"), &["--oracle"]);
    assert_eq!(code, 0);
    let r = report(out.path(), "report.json");
    assert!(r["beta_sqr"].as_f64().unwrap() >= 0.99);
    assert!(r["leakage"].as_f64().unwrap() <= 0.01);
    assert!(r["halving_difference"].as_f64().unwrap() < 1e-6);
    assert!((r["norm"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    let header = fs::read_to_string(out.path().join("trajectory.tsv")).unwrap();
    assert!(header.starts_with("t\talpha_sqr\tbeta_sqr\trelative_phase\tleakage\tnorm\n"));
}

#[test]
fn calibrated_rotations() {
    let (out, code) = run("calibrate", &configs().join("calibrate.toml"), &[]);
    assert_eq!(code, 0);
    let r = report(out.path(), "calibration.json");
    let results = r["results"].as_array().unwrap();
    let pi = &results[0];
    let half = &results[1];
    assert!(pi["achieved_transfer"].as_f64().unwrap() >= 0.99);
    assert!((half["achieved_transfer"].as_f64().unwrap() - 0.5).abs() <= 0.01);
    for c in results {
        assert!(c["leakage"].as_f64().unwrap() <= 0.01);
        assert!(c["hold"].as_f64().unwrap() >= 0.0);
    }
    let beta = tsv_column(out.path(), "trajectory_1.tsv", 2);
    assert!((beta.last().unwrap() - pi["achieved_transfer"].as_f64().unwrap()).abs() < 1e-9);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let cases = [
        ("walk", "family = \"cycle\"\nnodes = 4\nsteps = 1\n[start]\nkind = \"random\"\n", "version"),
        ("walk", "version = 2\nfamily = \"cycle\"\nnodes = 4\nsteps = 1\n[start]\nkind = \"random\"\n", "version 2"),
        ("walk", "version = 1\ngraph = \"missing.txt\"\nsteps = 1\n[start]\nkind = \"random\"\n", "does not exist"),
        ("walk", "version = 1\nfamily = \"cycle\"\nnodes = 4\nsteps = 1\nspeed = 3\n[start]\nkind = \"random\"\n", "speed"),
        ("walk", "version = 1\nfamily = \"cycle\"\nnodes = 4\nsteps = 1\n[start]\nkind = \"localized\"\nnode = 9\ncoin = 1\n", "invalid"),
        ("decompose", "version = 1\n", "exactly one"),
        ("conveyor-verify", "version = 1\nn = 6\n", "power of two"),
        ("tdse", "version = 1\n[grid]\npoints = 4\n", "invalid"),
        ("calibrate", "version = 1\ntargets = []\n", "empty"),
    ];
    for (i, (sub, text, needle)) in cases.iter().enumerate() {
        let cfg = write_config(d, &format!("c{i}.toml"), text);
        let res = qdwalk(&[sub, "--config", cfg.to_str().unwrap(), "--out", d.join("out").to_str().unwrap()]);
        let stderr = String::from_utf8_lossy(&res.stderr);
        assert_eq!(res.status.code(), Some(2), "case {i}: {stderr}");
        assert!(stderr.contains(needle), "case {i}: {stderr}");
    }
    assert_eq!(qdwalk(&["walk"]).status.code(), Some(2));
    assert_eq!(qdwalk(&["walk", "--config", "/nonexistent.toml"]).status.code(), Some(2));
}

#[test]
fn unreachable_calibration_is_a_tolerance_failure() {
    let dir = TempDir::new().unwrap();
    // a scan window far shorter than the tunnelling period
    let cfg = write_config(
        dir.path(),
        "c.toml",
        "version = 1\ntargets = [1.0]\n[search]\nscan_periods = 0.02\n",
    );
    let res = qdwalk(&["calibrate", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&res.stderr).contains("unreachable"));
}
