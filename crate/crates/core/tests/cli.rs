use std::path::PathBuf;
use std::process::{Command, Output};

use dcnot::params::ParamTable;

fn dcnot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dcnot")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn config(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "configs", name].iter().collect();
    p.to_string_lossy().into_owned()
}

#[test]
fn verify_passes_and_lists_every_check() {
    let o = dcnot(&["verify"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let out = stdout(&o);
    for name in dcnot::cli::check_names() {
        assert!(out.contains(&format!("PASS  {name}")), "{name} missing from\n{out}");
    }
}

#[test]
fn verify_single_check() {
    let o = dcnot(&["verify", "--check", "length5-condition"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 1);
    assert_eq!(dcnot(&["verify", "--check", "nope"]).status.code(), Some(2));
}

#[test]
fn verify_flags_a_corrupted_angle() {
    let dir = tempfile::tempdir().unwrap();
    let mut table = ParamTable::published();
    let mut psi = table.cnot.psi();
    psi[1] += 1e-2;
    table.cnot = table.cnot.with_psi(psi);
    let path = dir.path().join("params.json");
    std::fs::write(&path, serde_json::to_string(&table).unwrap()).unwrap();
    let o = dcnot(&["verify", "--params", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL  final-cnot-intrinsic"), "{}", stdout(&o));
    assert!(stderr(&o).contains("final-cnot-intrinsic"));
}

#[test]
fn analyze_partitions_the_length5_channels() {
    let o = dcnot(&["analyze", "length5"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let rows: Vec<&str> = out.lines().skip(1).collect();
    assert_eq!(rows.len(), 15);
    assert_eq!(rows.iter().filter(|r| r.contains(",true,")).count(), 8);
    assert_eq!(rows.iter().filter(|r| r.contains(",false,")).count(), 7);
}

#[test]
fn unknown_sequence_lists_known_ids() {
    let o = dcnot(&["analyze", "length7"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("cnot-final-k20"));
    let o = dcnot(&["local-noise", "--sequence", "length7", "--mode", "random"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_is_reproducible_and_carries_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (out, workers) in [(&a, "1"), (&b, "3")] {
        let o = dcnot(&[
            "sweep",
            "--config",
            &config("fig2.cfg"),
            "--samples",
            "4",
            "--seed",
            "7",
            "--out",
            out.to_str().unwrap(),
            "--workers",
            workers,
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert!(text.contains("# config_sha256: ") && text.contains("# seed: 7"));
    for series in ["uncorrected-ising", "cnot-final-k20", "cnot-second-order"] {
        assert_eq!(text.lines().filter(|l| l.starts_with(&format!("{series},"))).count(), 20);
    }
    assert!(text.contains("sequence_id,sigma,mean_infidelity,std_error,n_samples,seed"));
}

#[test]
fn sweep_config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.cfg");
    std::fs::write(&cfg, r#"{"sequences":["cnot-k20"],"scenario":{"type":"heisenberg-fields"},"sigma_grid":[]}"#)
        .unwrap();
    assert_eq!(dcnot(&["sweep", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(dcnot(&["sweep", "--config", "/definitely/missing.cfg"]).status.code(), Some(2));
    let unwritable = dir.path().join("no/such/dir/out.csv");
    let o = dcnot(&["sweep", "--config", &config("fig1.cfg"), "--samples", "1", "--out", unwritable.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn optimize_finds_a_cnot_solution() {
    let o = dcnot(&["optimize", "--target", "cnot", "--n", "1,1,1,2", "--seeds", "50"]);
    assert_eq!(o.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let row = &report["results"][0];
    assert!(row["objective"].as_f64().unwrap() < 1e-10);
    assert!(row["published"]["objective"].as_f64().unwrap() < 1e-9);
    assert_eq!(dcnot(&["optimize", "--target", "cnot", "--n", "1,1,1,1"]).status.code(), Some(2));
}

#[test]
fn local_noise_grid() {
    let o = dcnot(&[
        "local-noise",
        "--sequence",
        "length120",
        "--mode",
        "systematic",
        "--samples",
        "20",
        "--scales",
        "1e-3,1e-2",
        "--sigmas",
        "0,1e-3",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().filter(|l| l.starts_with("length120,")).count(), 4);
}
