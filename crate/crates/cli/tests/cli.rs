use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_staged-automl"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn synth(dir: &Path, kind: &str, n: &str, d: &str, name: &str) -> String {
    let path = dir.join(name);
    let out = cli(&[
        "synth",
        "--kind",
        kind,
        "--n",
        n,
        "--d",
        d,
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path.to_str().unwrap().to_string()
}

fn json(path: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(path).unwrap();
    assert!(text.ends_with('\n'));
    serde_json::from_str(&text).unwrap()
}

#[test]
fn run_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "separable", "80", "3", "sep.csv");
    let out = dir.path().join("run");
    let status = cli(&[
        "run",
        "--data",
        &data,
        "--preset",
        "primitive",
        "--seed",
        "7",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        status.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&status.stderr)
    );
    assert!(String::from_utf8_lossy(&status.stdout).contains("best: "));
    let report = json(&out.join("report.json"));
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["best"]["basis"], "any_stage_best");
    assert_eq!(report["config"]["seed"], 7);
    assert!(json(&out.join("stages.json")).is_array());
    let journal = std::fs::read_to_string(out.join("journal.jsonl")).unwrap();
    for line in journal.lines() {
        serde_json::from_str::<serde_json::Value>(line).unwrap();
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "separable", "40", "2", "sep.csv");
    let out = dir.path().join("x");
    let o = out.to_str().unwrap();

    let bad = cli(&["run", "--data", &data, "--preset", "fast", "--out", o]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("monotone-tuning"));

    let zero = cli(&[
        "run",
        "--data",
        &data,
        "--preset",
        "full",
        "--global-timeout",
        "0",
        "--out",
        o,
    ]);
    assert_eq!(zero.status.code(), Some(2));
    assert!(out.join("report.json").exists());

    assert_eq!(
        cli(&["run", "--data", "missing.csv", "--out", o]).status.code(),
        Some(1)
    );
    assert_eq!(cli(&["run", "--bogus"]).status.code(), Some(1));
    assert_eq!(cli(&["--help"]).status.code(), Some(0));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "separable", "60", "2", "sep.csv");
    let out = dir.path().join("out");
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(
        &cfg,
        format!(
            "data = [{data:?}]\npreset = \"primitive\"\nseed = 3\nrepeats = 2\nout = {:?}\n",
            out.to_str().unwrap()
        ),
    )
    .unwrap();
    let o = cli(&["--config", cfg.to_str().unwrap(), "run", "--seed", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = json(&out.join("report.json"));
    assert_eq!(report["config"]["seed"], 5);
    assert_eq!(report["config"]["eval"]["repeats"], 2);

    std::fs::write(&cfg, "colour = 1\n").unwrap();
    assert_eq!(cli(&["--config", cfg.to_str().unwrap(), "run"]).status.code(), Some(1));
}

#[test]
fn bench_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "separable", "60", "2", "sep.csv");
    let run = |out: &Path| {
        let o = cli(&[
            "bench",
            "--data",
            &data,
            "--presets",
            "primitive,single-scaling",
            "--splits",
            "3",
            "--repeats",
            "2",
            "--jobs",
            "2",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read_to_string(out.join("results.csv")).unwrap()
    };
    let a = run(&dir.path().join("a"));
    let b = run(&dir.path().join("b"));
    assert_eq!(a, b);
    assert!(a.starts_with("dataset_id,approach_id,split_index,error\n"));
    assert_eq!(a.lines().count(), 1 + 6);
    let report = dir.path().join("a/reports/sep/primitive/split-0.json");
    assert_eq!(json(&report)["bench"]["approach_id"], "primitive");
    assert!(dir.path().join("a/journals/sep/single-scaling/split-2.jsonl").exists());

    for source in ["a/results.csv", "a/reports"] {
        let out = dir.path().join(format!("tables-{}", source.replace('/', "-")));
        let o = cli(&[
            "report",
            "--results",
            dir.path().join(source).to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        for f in [
            "summary.csv",
            "summary.txt",
            "tournament.csv",
            "tournament.txt",
            "synergy.csv",
        ] {
            assert!(out.join("tables").join(f).exists(), "{f}");
        }
        let tournament = std::fs::read_to_string(out.join("tables/tournament.csv")).unwrap();
        assert!(tournament.starts_with("approach,wins,unique_wins,losses,draws\nsingle-scaling,"));
    }
}

#[test]
fn report_errors() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    assert_eq!(
        cli(&["report", "--results", empty.to_str().unwrap()]).status.code(),
        Some(1)
    );

    let unpaired = dir.path().join("r.csv");
    std::fs::write(
        &unpaired,
        "dataset_id,approach_id,split_index,error\nd,a,0,0.1\nd,a,1,0.2\nd,b,0,0.1\n",
    )
    .unwrap();
    let o = cli(&[
        "report",
        "--results",
        unpaired.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn synth_to_stdout() {
    let o = cli(&["synth", "--kind", "noise-only", "--n", "20", "--d", "2"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 21);
    assert_eq!(cli(&["synth", "--kind", "spiral"]).status.code(), Some(1));
    assert_eq!(
        cli(&["synth", "--kind", "separable", "--n", "5"]).status.code(),
        Some(1)
    );
}
