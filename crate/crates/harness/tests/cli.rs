use std::path::Path;
use std::process::{Command, Output};

use tla_harness::output::read_table;

const TINY: &[&str] = &[
    "--set", "total_steps=400",
    "--set", "eval_every=200",
    "--set", "eval_episodes=2",
    "--set", "hidden=8,8",
    "--set", "batch_size=16",
    "--set", "warmup_steps=100",
];

fn tla(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tla")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = tla(args);
    assert!(
        out.status.success(),
        "{args:?}\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn train(algo: &str, env: &str, out: &Path, extra: &[&str]) -> String {
    let mut args = vec!["train", "--algo", algo, "--env", env, "--out", out.to_str().unwrap()];
    args.extend_from_slice(TINY);
    args.extend_from_slice(extra);
    ok(&args)
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn every_algorithm_trains_and_writes_its_files() {
    let dir = tempfile::tempdir().unwrap();
    for algo in ["td3", "tla_c", "tla_o", "td3_delayed", "tla_realtime"] {
        let out = dir.path().join(algo);
        let stdout = train(algo, "pendulum", &out, &["--set", "n=2"]);
        assert!(stdout.contains("mean: final return"), "{stdout}");
        let (header, rows) = read_table(&out.join("metrics.csv")).unwrap();
        assert_eq!(header[0], "seed");
        assert_eq!(rows.last().unwrap()[0], "mean");
        for f in ["config.txt", "aggregate_curve.csv", "learning_curve.svg"] {
            assert!(out.join(f).is_file(), "{algo}: {f}");
        }
        let seed = out.join("seed_0");
        for f in ["curve.csv", "metrics.csv", "trajectory.csv"] {
            assert!(seed.join(f).is_file(), "{algo}: {f}");
        }
        let layered = algo.starts_with("tla");
        assert_eq!(seed.join("activations.csv").is_file(), layered, "{algo}");
        assert_eq!(seed.join("fast.ckpt").is_file(), layered, "{algo}");
        assert_eq!(seed.join("agent.ckpt").is_file(), !layered, "{algo}");
        let (curve_header, curve) = read_table(&seed.join("curve.csv")).unwrap();
        assert_eq!(curve_header, ["step", "eval_return_mean", "eval_return_std"]);
        assert_eq!(curve.len(), 3, "{algo}");
    }
}

#[test]
fn realtime_flag_switches_to_the_delayed_variant() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rt");
    train("td3", "cartpole", &out, &["--realtime"]);
    let cfg = std::fs::read_to_string(out.join("config.txt")).unwrap();
    assert!(cfg.contains("algorithm = td3_delayed"), "{cfg}");
    let (header, _) = read_table(&out.join("seed_0/trajectory.csv")).unwrap();
    assert!(header.iter().any(|h| h.starts_with("chosen")), "{header:?}");
    assert!(header.iter().any(|h| h.starts_with("applied")), "{header:?}");
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let extra = ["--set", "seeds=3,4", "--set", "n=2"];
    train("tla_c", "cartpole", &a, &extra);
    train("tla_c", "cartpole", &b, &["--set", "seeds=3,4", "--set", "n=2", "--set", "workers=2"]);
    for f in [
        "metrics.csv",
        "aggregate_curve.csv",
        "seed_3/curve.csv",
        "seed_3/pretrain_curve.csv",
        "seed_4/trajectory.csv",
        "seed_4/activations.csv",
        "seed_4/fast.ckpt",
    ] {
        assert_eq!(read(&a.join(f)), read(&b.join(f)), "{f}");
    }
}

#[test]
fn config_file_round_trips_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    train("tla_o", "pendulum", &first, &["--set", "n=2", "--set", "seeds=1"]);
    let again = dir.path().join("again");
    let cfg = first.join("config.txt");
    ok(&["train", "--config", cfg.to_str().unwrap(), "--out", again.to_str().unwrap()]);
    assert_eq!(read(&first.join("metrics.csv")), read(&again.join("metrics.csv")));
}

#[test]
fn eval_reproduces_the_final_evaluation_from_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    train("tla_c", "pendulum", &out, &["--set", "n=2"]);
    let cfg = out.join("config.txt");
    let stdout = ok(&["eval", "--config", cfg.to_str().unwrap()]);
    let (_, rows) = read_table(&out.join("seed_0/metrics.csv")).unwrap();
    let expected: f64 = rows[0][1].parse().unwrap();
    let printed: f64 = stdout
        .split("return ")
        .nth(1)
        .and_then(|s| s.split_whitespace().next())
        .unwrap()
        .parse()
        .unwrap();
    assert!((printed - expected).abs() < 1e-3, "{stdout} vs {expected}");
    assert_eq!(
        read(&out.join("seed_0/eval_trajectory.csv")),
        read(&out.join("seed_0/trajectory.csv"))
    );
}

#[test]
fn sweep_writes_a_table_and_a_chart() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let mut args = vec!["sweep", "--algo", "tla_c", "--env", "cartpole", "--out", out.to_str().unwrap()];
    args.extend_from_slice(TINY);
    args.extend_from_slice(&["--set", "n=2", "--thresholds", "0:0.5:1"]);
    ok(&args);
    let (header, rows) = read_table(&out.join("sweep.csv")).unwrap();
    assert_eq!(header, tla_harness::sweep::SWEEP_HEADER);
    assert_eq!(rows.len(), 3);
    let svg = std::fs::read_to_string(out.join("sweep.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
}

#[test]
fn plot_reads_only_the_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("c.csv");
    std::fs::write(&csv, "step,eval_return_mean,eval_return_std\n0,-1200,50\n1000,-400,30\n2000,-150,10\n").unwrap();
    let a = dir.path().join("a.svg");
    let b = dir.path().join("b.svg");
    ok(&["plot", "--csv", csv.to_str().unwrap(), "--out", a.to_str().unwrap()]);
    ok(&["plot", "--csv", csv.to_str().unwrap(), "--out", b.to_str().unwrap()]);
    assert_eq!(read(&a), read(&b));
    let svg = String::from_utf8(read(&a)).unwrap();
    assert!(svg.contains("</svg>"));
}

#[test]
fn bad_input_fails_with_a_message() {
    for args in [
        vec!["train", "--set", "nonsense=1"],
        vec!["train", "--algo", "sarsa"],
        vec!["train", "--env", "acrobot"],
        vec!["train", "--algo", "tla_c", "--set", "n=1"],
        vec!["train", "--set", "total_steps=10"],
        vec!["train", "--algo", "tla_o", "--realtime"],
        vec!["eval", "--out", "/nonexistent/run"],
    ] {
        let out = tla(&args);
        assert!(!out.status.success(), "{args:?}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.starts_with("error: "), "{args:?}: {err}");
    }
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    std::fs::write(&cfg, "env = pendulum\n\nn = four\n").unwrap();
    let out = tla(&["train", "--config", cfg.to_str().unwrap()]);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");
}
