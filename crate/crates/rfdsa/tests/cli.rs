use std::path::Path;
use std::process::{Command, Output};

fn rfdsa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rfdsa")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn tiny_train(dir: &Path) -> Output {
    rfdsa(&[
        "train-base",
        "--out",
        dir.to_str().unwrap(),
        "--set",
        "modulations=QPSK,GFSK",
        "--set",
        "snr_grid_db=18",
        "--set",
        "per_mod_count=12",
        "--set",
        "idle_count=12",
        "--set",
        "confusion_snrs=18",
        "--set",
        "epochs=2",
    ])
}

#[test]
fn train_base_writes_outputs_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tiny_train(tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["model.ckpt", "history.csv", "accuracy_by_snr.csv", "confusion_18db.csv", "config.txt"] {
        assert!(tmp.path().join(f).exists(), "{f} missing");
    }
    let m = manifest(tmp.path());
    assert_eq!(m["experiment"], "train-base");
    assert_eq!(m["seed"], 1);
    assert_eq!(m["config"]["per_mod_count"], "12");
    assert!(stdout(&out).contains("accuracy_at_top_snr"));
}

#[test]
fn same_seed_gives_identical_checkpoint() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(tiny_train(a.path()).status.success());
    assert!(tiny_train(b.path()).status.success());
    let read = |d: &Path| std::fs::read(d.join("model.ckpt")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
}

#[test]
fn simulate_with_trained_model() {
    let tmp = tempfile::tempdir().unwrap();
    let model_dir = tmp.path().join("model");
    assert!(tiny_train(&model_dir).status.success());
    let sim_dir = tmp.path().join("sim");
    let out = rfdsa(&[
        "simulate",
        "--out",
        sim_dir.to_str().unwrap(),
        "--classifier",
        "model",
        "--model",
        model_dir.join("model.ckpt").to_str().unwrap(),
        "--set",
        "superframes=5",
        "--set",
        "benchmarks=off",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let metrics = std::fs::read_to_string(sim_dir.join("metrics.csv")).unwrap();
    assert!(metrics.lines().nth(1).unwrap().starts_with("distributed,model,"));
    assert_eq!(manifest(&sim_dir)["config"]["classifier"], "model");
}

#[test]
fn config_file_and_overrides() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("sim.cfg");
    std::fs::write(&cfg, "# short run\nsuperframes = 20\njamming = off\n").unwrap();
    let out_dir = tmp.path().join("o");
    let out = rfdsa(&[
        "simulate",
        "--out",
        out_dir.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
        "--traffic-fusion",
        "on",
        "--check",
    ]);
    assert!(out.status.success(), "{}{}", stdout(&out), String::from_utf8_lossy(&out.stderr));
    let m = manifest(&out_dir);
    assert_eq!(m["config"]["superframes"], "20");
    assert_eq!(m["config"]["jamming"], "off");
    assert_eq!(m["config"]["traffic_fusion"], "on");
    assert_eq!(m["passed"], true);
    let rows = std::fs::read_to_string(out_dir.join("superframes.csv")).unwrap();
    assert_eq!(rows.lines().count(), 21);
}

#[test]
fn failed_check_exits_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    // Two epochs on a handful of frames cannot reach the accuracy target.
    let mut args: Vec<String> = ["train-base", "--check", "--out", tmp.path().to_str().unwrap()]
        .map(String::from)
        .to_vec();
    for kv in ["modulations=QPSK,QAM16,GFSK", "snr_grid_db=0", "per_mod_count=8", "idle_count=8", "epochs=1"] {
        args.extend(["--set".to_string(), kv.to_string()]);
    }
    let out = rfdsa(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("FAIL accuracy_at_top_snr"));
}

#[test]
fn bad_input_exits_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().to_str().unwrap();
    for args in [
        vec!["simulate", "--out", dir, "--set", "no_such_key=1"],
        vec!["simulate", "--out", dir, "--set", "superframes=many"],
        vec!["simulate", "--out", dir, "--set", "nonsense"],
        vec!["train-base", "--out", dir, "--config", "/nonexistent/file.cfg"],
        vec!["simulate", "--out", dir, "--classifier", "model"],
    ] {
        let out = rfdsa(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    }
}
