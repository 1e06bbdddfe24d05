use std::fs;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lamperti")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn design_example() {
    let o = run(&["design", "--family", "geometric", "--p", "0.5", "--jmax", "20", "--method", "both"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.starts_with("# schema: lamperti.design/1\n"));
    assert!(s.contains("j,F,F_inf,tail,F_series,discrepancy,F_closed_form\n"));
    assert_eq!(s.lines().filter(|l| !l.starts_with('#')).count(), 22);
}

#[test]
fn classify_counting_design() {
    let o = run(&["classify", "--family", "counting-design", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["results"]["verdict"], "Transient");
    let limit = v["results"]["limit_estimate"].as_f64().unwrap();
    assert!((limit - 1.0).abs() < 0.02);
}

#[test]
fn one_state_matrix() {
    let o = run(&["build", "--family", "geometric", "--p", "0.5", "--N", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).ends_with("# table: P\ni,P_1\n1,1.0000000000000000e0\n"));
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["design", "--family", "nope"]).status.code(), Some(1));
    assert_eq!(run(&["design", "--bogus"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["hitting", "--family", "geometric", "--p", "0.5"]).status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let start = dir.path().join("start.txt");
    fs::write(&start, "0 0 0 0 0 0 1 0\n").unwrap();
    let choice = format!("file:{}", start.display());
    let base = ["hitting", "--family", "geometric", "--p", "0.5", "--N", "8", "--pi0", choice.as_str()];
    assert_eq!(run(&base).status.code(), Some(2));
    let mut forced = base.to_vec();
    forced.push("--forced");
    let o = run(&forced);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("# result.note.0: "));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "family = \"geometric\"\np = 0.3\njmax = 5\nformat = \"json\"\n").unwrap();
    let o = run(&["design", "--config", cfg.to_str().unwrap(), "--jmax", "7"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["meta"]["config"]["jmax"], 7);
    assert_eq!(v["meta"]["config"]["p"], 0.3);
    assert_eq!(v["tables"]["design"]["F"].as_array().unwrap().len(), 8);
}

#[test]
fn report_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report");
    let args = [
        "report", "--family", "geometric", "--p", "0.5", "--N", "8", "--steps", "20000", "--seed", "3", "--out",
        out.to_str().unwrap(),
    ];
    let snapshot = || {
        let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(&out)
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
            })
            .collect();
        files.sort();
        files
    };
    assert_eq!(run(&args).status.code(), Some(0));
    let first = snapshot();
    assert!(first.iter().any(|(n, _)| n == "simulate.csv"));
    assert!(first.iter().any(|(n, _)| n == "plot_sep.csv"));
    let sim = String::from_utf8(first.iter().find(|(n, _)| n == "simulate.csv").unwrap().1.clone()).unwrap();
    assert!(sim.contains("# generator: ChaCha20"));
    assert_eq!(run(&args).status.code(), Some(0));
    assert_eq!(first, snapshot());
}
