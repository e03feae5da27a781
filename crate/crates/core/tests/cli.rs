use std::path::Path;
use std::process::{Command, Output};

fn msvgd(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_msvgd"));
    cmd.args(args).env_remove("MSVGD_SEED").env_remove("MSVGD_OUT_DIR");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("spawn msvgd")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn read(p: impl AsRef<Path>) -> String {
    std::fs::read_to_string(p.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", p.as_ref().display()))
}

#[test]
fn run_writes_outputs_and_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = msvgd(
        &["run", "-b", "2d-banana", "-m", "mr", "--max-iterations", "40", "--set", "checkpoint_every=10", "-o"],
        &[],
    );
    // missing value for -o
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));

    let o = msvgd(
        &[
            "run", "-b", "2d-banana", "-m", "mr", "--max-iterations", "40",
            "--set", "checkpoint_every=10", "-o", out.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["checkpoints.csv", "summary.csv", "summary.json", "config-resolved.toml", "monitor-2d-banana.svg", "pareto-2d-banana.svg"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let resolved: toml::Table = toml::from_str(&read(out.join("config-resolved.toml"))).unwrap();
    assert_eq!(resolved["method"].as_str(), Some("mr"));
    assert_eq!(resolved["checkpoint_every"].as_integer(), Some(10));
    assert_eq!(read(out.join("checkpoints.csv")).lines().count(), 1 + 5);
}

#[test]
fn config_file_is_overridden_by_flags_and_env() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "benchmark = 'gaussian'\nmethod = 'svgd'\nseed = 3\nmax_iterations = 20\nn_particles = 16\n[step]\nh = 0.05\n",
    )
    .unwrap();
    let out = dir.path().join("env-out");
    let o = msvgd(
        &["run", "-c", cfg.to_str().unwrap(), "--step", "0.02"],
        &[("MSVGD_SEED", "9"), ("MSVGD_OUT_DIR", out.to_str().unwrap())],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let resolved: toml::Table = toml::from_str(&read(out.join("config-resolved.toml"))).unwrap();
    assert_eq!(resolved["seed"].as_integer(), Some(9));
    assert_eq!(resolved["step"]["h"].as_float(), Some(0.02));
    assert_eq!(resolved["n_particles"].as_integer(), Some(16));

    let o = msvgd(&["run", "-c", cfg.to_str().unwrap(), "--seed", "4", "-o", out.to_str().unwrap()], &[("MSVGD_SEED", "9")]);
    assert_eq!(code(&o), 0);
    let resolved: toml::Table = toml::from_str(&read(out.join("config-resolved.toml"))).unwrap();
    assert_eq!(resolved["seed"].as_integer(), Some(4));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(code(&msvgd(&["run", "-b", "no-such-benchmark", "-o", out], &[])), 1);
    assert_eq!(code(&msvgd(&["run", "-b", "gaussian", "--set", "bogus_key=1", "-o", out], &[])), 1);
    assert_eq!(code(&msvgd(&["run", "-c", "/definitely/missing.toml", "-o", out], &[])), 2);
    assert_eq!(code(&msvgd(&["summarize", "/definitely/missing.csv", "-o", out], &[])), 2);
    let diverged = msvgd(
        &["run", "-b", "2d-banana", "-m", "sgld", "--set", "chain.eta=50", "--max-iterations", "200", "-o", out],
        &[],
    );
    assert_eq!(code(&diverged), 3);
}

#[test]
fn sweep_then_summarize_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("sweep");
    let b = dir.path().join("again");
    let o = msvgd(
        &[
            "sweep", "-b", "gaussian", "--methods", "svgd,adapt-mr", "--seeds", "3",
            "--max-iterations", "60", "--n-particles", "24", "-o", a.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = msvgd(&["summarize", a.join("checkpoints.csv").to_str().unwrap(), "-o", b.to_str().unwrap()], &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read(a.join("checkpoints.csv")), read(b.join("checkpoints.csv")));
    let strip_wall = |s: String| -> serde_json::Value {
        let mut v: serde_json::Value = serde_json::from_str(&s).unwrap();
        for summary in v["summaries"].as_array_mut().unwrap() {
            for row in summary["rows"].as_array_mut().unwrap() {
                row["wall_seconds"] = serde_json::Value::Null;
            }
        }
        v
    };
    assert_eq!(strip_wall(read(a.join("summary.json"))), strip_wall(read(b.join("summary.json"))));
    let json: serde_json::Value = serde_json::from_str(&read(b.join("summary.json"))).unwrap();
    assert_eq!(json["summaries"][0]["rows"][0]["finite"], "3/3");

    let c = dir.path().join("final");
    let o = msvgd(
        &["summarize", a.join("checkpoints.csv").to_str().unwrap(), "--point", "final", "--aggregate", "mean", "-o", c.to_str().unwrap()],
        &[],
    );
    assert_eq!(code(&o), 0);
    let json: serde_json::Value = serde_json::from_str(&read(c.join("summary.json"))).unwrap();
    assert_eq!(json["summaries"][0]["point"], "final");
    assert_eq!(json["summaries"][0]["rows"][0]["iteration"], 60.0);
}

#[test]
fn validate_passes() {
    let o = msvgd(&["validate"], &[]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(code(&o), 0, "{stdout}");
    assert!(stdout.lines().count() >= 13);
    assert!(stdout.lines().all(|l| l.starts_with("PASS")));
}
