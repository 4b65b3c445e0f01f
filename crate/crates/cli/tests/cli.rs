use std::path::Path;
use std::process::{Command, Output};

fn wishmix(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wishmix"))
        .args(args)
        .current_dir(dir)
        .env_remove("WISHMIX_THREADS")
        .output()
        .unwrap()
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn full_workflow() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("sim.toml"), "seed = 3\nn = 24\nk0 = 3\nnu = 12.0\n").unwrap();
    ok(&wishmix(&["simulate", "--config", "sim.toml", "-o", "data.json"], d));
    ok(&wishmix(&["simulate", "--config", "sim.toml", "-o", "copy.json"], d));
    assert_eq!(std::fs::read(d.join("data.json")).unwrap(), std::fs::read(d.join("copy.json")).unwrap());

    let fit = ok(&wishmix(&["fit", "data.json", "--seed", "5", "--iterations", "200", "--burn-in", "50", "-o", "run.json"], d));
    assert!(fit.contains("K+ ="));
    ok(&wishmix(&["fit", "data.json", "--from-result", "run.json", "-o", "replay.json"], d));
    assert_eq!(std::fs::read(d.join("run.trace")).unwrap(), std::fs::read(d.join("replay.trace")).unwrap());

    ok(&wishmix(&["baselines", "data.json", "--from-result", "run.json", "-o", "base.json"], d));
    let eval = ok(&wishmix(&["evaluate", "--truth", "data.json", "run.json", "base.json", "-o", "metrics.json"], d));
    assert!(eval.contains("ward"));
    let report = ok(&wishmix(&["report", "metrics.json", "-o", "report.json"], d));
    assert!(report.contains("pam"));
    let fisher = ok(&wishmix(&["evaluate", "--table", "26,29,25,19"], d));
    assert!(fisher.contains("p = 0.420"), "{fisher}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("noseed.toml"), "n = 10\n").unwrap();
    let out = wishmix(&["simulate", "--config", "noseed.toml", "-o", "x.json"], d);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));

    std::fs::write(d.join("typo.toml"), "seed = 1\nnn = 10\n").unwrap();
    let out = wishmix(&["simulate", "--config", "typo.toml", "-o", "x.json"], d);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("typo.toml:2"));

    std::fs::write(d.join("bad.json"), "not json").unwrap();
    let out = wishmix(&["fit", "bad.json", "--seed", "1", "-o", "r.json"], d);
    assert_eq!(out.status.code(), Some(3));

    std::fs::create_dir(d.join("series")).unwrap();
    std::fs::write(d.join("series/s1.csv"), "1,2\n3,oops\n").unwrap();
    let out = wishmix(&["pipeline", "series", "-o", "p.json"], d);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 2, column 2"));

    let out = Command::new(env!("CARGO_BIN_EXE_wishmix"))
        .args(["evaluate", "--table", "1,2,3,4"])
        .env("WISHMIX_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn shipped_configs_run() {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for setting in ["mixture", "var1", "large"] {
        let cfg = configs.join(format!("simulate-{setting}.toml"));
        let out = format!("{setting}.json");
        ok(&wishmix(&["simulate", "--config", cfg.to_str().unwrap(), "--n", "20", "-o", &out], d));
    }
    for preset in ["simulation", "application"] {
        let cfg = configs.join(format!("fit-{preset}.toml"));
        let args = ["fit", "mixture.json", "--config", cfg.to_str().unwrap(), "--iterations", "60", "--burn-in", "20", "-o", "r.json"];
        ok(&wishmix(&args, d));
    }
}
