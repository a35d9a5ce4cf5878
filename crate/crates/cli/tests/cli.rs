use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn changehound(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_changehound"))
        .args(args)
        .current_dir(cwd)
        .env("CHANGEHOUND_CORPUS", corpus())
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn model_path(app: &str) -> String {
    corpus()
        .join(app)
        .join(format!("{app}.app.json"))
        .display()
        .to_string()
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = changehound(&["validate", "--app", "amaze_like"], dir.path());
    assert_eq!(ok.status.code(), Some(0), "{}", stderr(&ok));
    assert!(stdout(&ok).contains(": ok"));

    let text = std::fs::read_to_string(model_path("beecount_like")).unwrap();
    let broken = dir.path().join("broken.app.json");
    std::fs::write(
        &broken,
        text.replace(
            "\"initial_layout\": \"activity_welcome\"",
            "\"initial_layout\": \"ghost\"",
        ),
    )
    .unwrap();
    let bad = changehound(&["validate", "--app", broken.to_str().unwrap()], dir.path());
    assert_eq!(bad.status.code(), Some(1));
    assert!(
        stdout(&bad).contains("unknown layout reference: `ghost`"),
        "{}",
        stdout(&bad)
    );

    let garbled = dir.path().join("garbled.app.json");
    std::fs::write(&garbled, "{\"name\": 3}").unwrap();
    let parse = changehound(
        &["validate", "--app", garbled.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(parse.status.code(), Some(2));
    assert!(stderr(&parse).contains("name"));

    let missing = changehound(&["validate", "--app", "no_such_app"], dir.path());
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn analyze_writes_targets() {
    let dir = tempfile::tempdir().unwrap();
    let out = changehound(
        &["analyze", "--app", "amaze_like", "--dot", "map.dot"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("target elements: compress"));
    let targets: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("targets.json")).unwrap())
            .unwrap();
    assert_eq!(targets["target_elements"], serde_json::json!(["compress"]));
    assert!(std::fs::read_to_string(dir.path().join("map.dot"))
        .unwrap()
        .starts_with("graph"));

    let out = changehound(
        &["analyze", "--app", "simpledraw_like", "--out", "sd"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("fill_bucket"));
}

#[test]
fn analyze_rejects_unknown_signatures() {
    let dir = tempfile::tempdir().unwrap();
    let changes = dir.path().join("changes.json");
    std::fs::write(
        &changes,
        r#"{"changed_functions": ["filemanager.Nope.gone(int)"]}"#,
    )
    .unwrap();
    let out = changehound(
        &[
            "analyze",
            "--app",
            &model_path("amaze_like"),
            "--changes",
            changes.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("filemanager.Nope.gone(int)"));
    assert!(!dir.path().join("targets.json").exists());
}

#[test]
fn run_writes_trace_report_and_sequences() {
    let dir = tempfile::tempdir().unwrap();
    let out = changehound(
        &["run", "--app", "amaze_like", "--budget", "1", "--seed", "3"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let seed_dir = dir.path().join("out/amaze_like/cat/seed-3");
    let trace = std::fs::read_to_string(seed_dir.join("trace.ndjson")).unwrap();
    assert_eq!(trace.lines().count(), 1);
    assert!(seed_dir.join("report.json").is_file());
    assert!(seed_dir.join("sequences.json").is_file());

    let line = stdout(&out).lines().next().unwrap().to_owned();
    for part in [
        "app=amaze_like",
        "strategy=cat",
        "budget=1",
        "seed=3",
        "model=sha256:",
        "changes=sha256:",
        "guidance=none",
    ] {
        assert!(line.contains(part), "{line}");
    }
}

#[test]
fn runs_are_reproducible_from_the_config_line() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "run",
        "--app",
        "currency_like",
        "--strategy",
        "random",
        "--budget",
        "200",
        "--seed",
        "7",
    ];
    let first = changehound(&[&args[..], &["--out", "a"]].concat(), dir.path());
    let second = changehound(&[&args[..], &["--out", "b"]].concat(), dir.path());
    assert_eq!(first.status.code(), Some(0));
    let echo = |o: &Output| stdout(o).lines().next().unwrap().to_owned();
    assert_eq!(echo(&first), echo(&second));
    let read = |d: &str| {
        std::fs::read(
            dir.path()
                .join(d)
                .join("currency_like/random/seed-7/trace.ndjson"),
        )
        .unwrap()
    };
    assert_eq!(read("a"), read("b"));
}

#[test]
fn beecount_cat_run_reports_the_state_loss() {
    let dir = tempfile::tempdir().unwrap();
    let out = changehound(
        &["run", "--app", "beecount_like", "--seed", "1"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("out/beecount_like/cat/seed-1/report.json"))
            .unwrap(),
    )
    .unwrap();
    let faults = report["revealed_faults"].as_array().unwrap();
    assert!(faults.iter().any(|f| f["fault_id"] == "bc_state_loss"));
}

#[test]
fn guidance_mismatch_is_a_finding() {
    let dir = tempfile::tempdir().unwrap();
    let guidance = dir.path().join("g.json");
    std::fs::write(&guidance, r#"[{"element_id": "ghost", "action": "click"}]"#).unwrap();
    let out = changehound(
        &[
            "run",
            "--app",
            "simplefm_like",
            "--guidance",
            guidance.to_str().unwrap(),
            "--budget",
            "5",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr(&out).contains("guidance event 1"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn compare_writes_one_row_per_strategy() {
    let dir = tempfile::tempdir().unwrap();
    let out = changehound(
        &[
            "compare",
            "--app",
            "opentasks_like",
            "--seeds",
            "1-3",
            "--budget",
            "300",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let mut csv = csv::Reader::from_path(dir.path().join("compare/summary.csv")).unwrap();
    let headers = csv.headers().unwrap().clone();
    assert_eq!(&headers[0], "app");
    let rows: Vec<csv::StringRecord> = csv.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 4);
    assert_eq!(&rows[0][1], "cat");
    assert!(rows.iter().all(|r| &r[2] == "3"));
    let reports: Vec<serde_json::Value> = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("compare/reports.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(reports.len(), 12);
    assert!(stdout(&out).contains("first-inter."));

    let single = changehound(
        &[
            "compare",
            "--app",
            "opentasks_like",
            "--strategy",
            "dfs",
            "--seeds",
            "1,2",
            "--budget",
            "100",
            "--out",
            "one",
        ],
        dir.path(),
    );
    assert_eq!(single.status.code(), Some(0));
    let rows = csv::Reader::from_path(dir.path().join("one/summary.csv"))
        .unwrap()
        .records()
        .count();
    assert_eq!(rows, 1);
}

#[test]
fn failing_runs_are_reported_as_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = changehound(
        &[
            "compare",
            "--app",
            "simplefm_like",
            "--strategy",
            "cat",
            "--seeds",
            "1-2",
            "--budget",
            "200",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("compare/summary.csv")).unwrap();
    let row = text.lines().nth(1).unwrap();
    assert!(row.starts_with("simplefm_like,cat,2,Failure,2,"), "{row}");
}

#[test]
fn bad_flags_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = changehound(
        &["run", "--app", "amaze_like", "--strategy", "bfs"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("unknown strategy `bfs`"));
    let out = changehound(&["run", "--app", "amaze_like", "--budget", "0"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}
