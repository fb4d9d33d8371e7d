use std::path::Path;
use std::process::{Command, Output};

fn fairrank(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fairrank"))
        .args(args)
        .env_remove("FAIREO_SEED")
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// A 60 x 12 generated dataset in `dir/data`.
fn small_dataset(dir: &Path) -> std::path::PathBuf {
    let data = dir.join("data");
    let out = fairrank(&["generate", "--family", "gauss-1-03", "--groups", "2", "--seed", "3", "--n", "60", "--m", "12", "--out", s(&data)]);
    assert!(out.status.success(), "{}", stderr(&out));
    data
}

#[test]
fn generate_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for d in [&a, &b] {
        let out = fairrank(&["generate", "--family", "gauss-1-03", "--groups", "2", "--seed", "3", "--out", s(d)]);
        assert!(out.status.success());
    }
    for f in ["scores.csv", "groups.csv", "manifest.json"] {
        let x = std::fs::read(a.join(f)).unwrap();
        assert!(!x.contains(&b'\r'));
        assert_eq!(x, std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let scores = std::fs::read_to_string(a.join("scores.csv")).unwrap();
    assert_eq!(scores.lines().count(), 601);
}

#[test]
fn seed_environment_variable_overrides_flag() {
    let dir = tempfile::tempdir().unwrap();
    let run = |seed_flag: &str, env: Option<&str>, name: &str| {
        let out_dir = dir.path().join(name);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_fairrank"));
        cmd.args(["generate", "--family", "uni", "--n", "8", "--m", "5", "--seed", seed_flag, "--out", s(&out_dir)]);
        match env {
            Some(v) => cmd.env("FAIREO_SEED", v),
            None => cmd.env_remove("FAIREO_SEED"),
        };
        assert!(cmd.output().unwrap().status.success());
        std::fs::read(out_dir.join("scores.csv")).unwrap()
    };
    assert_eq!(run("1", Some("7"), "env"), run("7", None, "flag"));
    assert_ne!(run("1", None, "plain"), run("7", None, "flag2"));
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = fairrank(&["generate", "--n", "0", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("n must be ≥ 1"));

    let out = fairrank(&["generate", "--family", "gauss", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("uni, gauss-1-01, gauss-1-03"));

    let out = fairrank(&["generate", "--family", "uni", "--preset", "gauss", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));

    let out = fairrank(&["sweep", "--families", "nope", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("gauss-1-03"));

    let data = small_dataset(dir.path());
    let out = fairrank(&[
        "optimize", "--scores", s(&data.join("scores.csv")), "--groups", s(&data.join("groups.csv")),
        "--alpha", "1.5", "--out", s(&dir.path().join("o")),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_input_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = fairrank(&[
        "optimize", "--scores", s(&dir.path().join("none.csv")), "--groups", s(&dir.path().join("none.csv")),
        "--out", s(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn alpha_zero_returns_hsc_and_evaluates_to_zero_loss() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_dataset(dir.path());
    let (scores, groups) = (data.join("scores.csv"), data.join("groups.csv"));
    let out_dir = dir.path().join("opt");
    let out = fairrank(&[
        "optimize", "--scores", s(&scores), "--groups", s(&groups), "--method", "tabu", "--alpha", "0", "--k", "3",
        "--out", s(&out_dir),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("Q_pct=0 "), "{stdout}");
    assert!(stdout.contains("pct_changed=0"), "{stdout}");

    let eval_dir = dir.path().join("eval");
    let out = fairrank(&[
        "evaluate", "--scores", s(&scores), "--groups", s(&groups), "--solution", s(&out_dir.join("solution.json")),
        "--out", s(&eval_dir),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(eval_dir.join("objectives.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[4], "0");
        assert_eq!(cols[6], "0");
    }
}

#[test]
fn optimize_writes_solution_objectives_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_dataset(dir.path());
    let out_dir = dir.path().join("opt");
    let (scores, groups) = (data.join("scores.csv"), data.join("groups.csv"));
    let args = [
        "optimize", "--scores", s(&scores), "--groups", s(&groups),
        "--method", "inc", "--alpha0", "0.1", "--alpha-step", "0.1", "--alpha", "0.9", "--trace", "--out", s(&out_dir),
    ];
    assert!(fairrank(&args).status.success());
    let solution: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("solution.json")).unwrap()).unwrap();
    assert_eq!(solution["k"], 5);
    assert_eq!(solution["lists"].as_object().unwrap().len(), 60);
    let trace = std::fs::read_to_string(out_dir.join("trace.csv")).unwrap();
    assert!(trace.starts_with("step,student,course_out,course_in,V_before,V_after,positive,aspiration,alpha\n"));
    let first = std::fs::read(out_dir.join("solution.json")).unwrap();
    assert!(fairrank(&args).status.success());
    assert_eq!(first, std::fs::read(out_dir.join("solution.json")).unwrap());
}

#[test]
fn evaluate_hand_built_solution() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("scores.csv"), "student_id,c0,c1\na,0.9,0.1\nb,0.2,0.8\n").unwrap();
    std::fs::write(dir.path().join("groups.csv"), "student_id,group\na,A\nb,B\n").unwrap();
    std::fs::write(dir.path().join("sol.json"), r#"{"k":1,"lists":{"a":["c0"],"b":["c1"]}}"#).unwrap();
    let out = fairrank(&[
        "evaluate", "--scores", s(&dir.path().join("scores.csv")), "--groups", s(&dir.path().join("groups.csv")),
        "--solution", s(&dir.path().join("sol.json")),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let stdout = String::from_utf8(out.stdout).unwrap();
    // Each group holds one course alone against a 50/50 target.
    assert!(stdout.starts_with("O_pct=100 Q_pct=0 V_pct=50 pct_changed=0\n"), "{stdout}");

    std::fs::write(dir.path().join("bad.json"), r#"{"k":1,"lists":{"a":["c9"],"b":["c1"]}}"#).unwrap();
    let out = fairrank(&[
        "evaluate", "--scores", s(&dir.path().join("scores.csv")), "--groups", s(&dir.path().join("groups.csv")),
        "--solution", s(&dir.path().join("bad.json")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("c9"));
}

#[test]
fn config_file_supplies_flags_and_command_line_wins() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("cfg.json");
    std::fs::write(&config, r#"{"family": "uni", "n": 9, "m": 4, "seed": 5, "groups": 3}"#).unwrap();
    let out_dir = dir.path().join("d");
    let out = fairrank(&["generate", "--config", s(&config), "--n", "12", "--out", s(&out_dir)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["params"]["n"], 12);
    assert_eq!(manifest["params"]["m"], 4);
    assert_eq!(manifest["params"]["groups"], 3);
    assert_eq!(manifest["params"]["seed"], 5);
}

fn sorted_lines(path: &Path) -> Vec<String> {
    let mut lines: Vec<String> = std::fs::read_to_string(path).unwrap().lines().map(String::from).collect();
    lines.sort();
    lines
}

#[test]
fn sweep_output_independent_of_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let run = |jobs: &str| {
        let out_dir = dir.path().join(format!("jobs{jobs}"));
        let out = fairrank(&[
            "sweep", "--families", "uni,gauss-1-03", "--groups", "2", "--methods", "gc,tabu", "--alphas", "0.2,0.8",
            "--seeds", "0,1", "--n", "30", "--m", "10", "--k", "3", "--neg-moves", "10", "--jobs", jobs,
            "--no-timing", "--quiet", "--out", s(&out_dir),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
        assert!(!out_dir.join("records.partial.csv").exists());
        out_dir
    };
    let (a, b) = (run("1"), run("8"));
    for f in ["records.csv", "aggregates.csv"] {
        assert_eq!(sorted_lines(&a.join(f)), sorted_lines(&b.join(f)), "{f}");
    }
    // 2 families x 2 methods x 2 alphas x 2 seeds, two groups each.
    assert_eq!(sorted_lines(&a.join("records.csv")).len(), 2 + 16 * 2);
}
