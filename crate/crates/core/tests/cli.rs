use std::process::{Command, Output};

fn cpaclab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cpaclab")).args(args).env_remove("CPACLAB_SEED").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const DIST: &str = r#"{"atoms":[[[0,1],"1/2"],[[1,0],"1/4"],[[2,1],"1/4"]]}"#;

#[test]
fn exit_codes() {
    assert_eq!(cpaclab(&["vc", "dim", "--class", r#"{"kind":"cube","k":3}"#, "--domain", "5"]).status.code(), Some(0));
    // a constant-1 witness is realized by the full cube on {1, 2}
    let o = cpaclab(&[
        "vc",
        "verify-witness",
        "--class",
        r#"{"kind":"cube","k":3}"#,
        "--domain",
        "4",
        "--k",
        "1",
        "--constant",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("\"verdict\":\"counterexample\""));
    let o = cpaclab(&["learn", "erm", "--sample", r#"{"pairs":[[1,2]]}"#]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("malformed sample"));
    assert_eq!(cpaclab(&["learn", "erm", "--sample", "/nonexistent/sample.json"]).status.code(), Some(2));
    assert_eq!(
        cpaclab(&["vc", "diagonalize", "--k", "2", "--l", "3", "--candidate-code", "0", "--total-out", "2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(cpaclab(&["classes", "explore-e", "--k", "3", "--l", "2"]).status.code(), Some(2));
    assert_eq!(cpaclab(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(cpaclab(&["--help"]).status.code(), Some(0));
}

#[test]
fn file_arguments_match_inline() {
    let dir = std::env::temp_dir().join(format!("cpaclab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let class = dir.join("class.json");
    let sample = dir.join("sample.json");
    std::fs::write(&class, r#"{"kind":"support_at_most","k":1}"#).unwrap();
    std::fs::write(&sample, r#"{"pairs":[[3,1],[4,0],[3,1]]}"#).unwrap();
    let from_files = cpaclab(&[
        "learn",
        "srm",
        "--class",
        class.to_str().unwrap(),
        "--b",
        "1",
        "--sample",
        sample.to_str().unwrap(),
    ]);
    let inline = cpaclab(&[
        "learn",
        "srm",
        "--class",
        r#"{"kind":"support_at_most","k":1}"#,
        "--b",
        "1",
        "--sample",
        r#"{"pairs":[[3,1],[4,0],[3,1]]}"#,
    ]);
    assert_eq!(from_files.status.code(), Some(0));
    assert_eq!(from_files.stdout, inline.stdout);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn seed_env_is_a_fallback() {
    let args = [
        "harness",
        "hoeffding",
        "--hypothesis",
        r#"{"support":[]}"#,
        "--dist",
        DIST,
        "--m",
        "32",
        "--b",
        "1",
        "--trials",
        "1000",
    ];
    let flag = cpaclab(&[&["--seed", "9"][..], &args[..]].concat());
    let env = Command::new(env!("CARGO_BIN_EXE_cpaclab")).args(args).env("CPACLAB_SEED", "9").output().unwrap();
    let other = cpaclab(&[&["--seed", "10"][..], &args[..]].concat());
    assert_eq!(flag.stdout, env.stdout);
    assert_ne!(flag.stdout, other.stdout);
}

#[test]
fn curve_writes_csv() {
    let path = std::env::temp_dir().join(format!("cpaclab-curve-{}.csv", std::process::id()));
    let config = format!(
        r#"{{"learner":{{"kind":"erm_hfin"}},"class":{{"kind":"hfin"}},"distribution":{DIST},"a":4,"b":2,"grid":[4,64],"trials":100}}"#
    );
    let o = cpaclab(&["harness", "curve", "--config", &config, "--output", path.to_str().unwrap()]);
    assert!(o.status.code().is_some_and(|c| c <= 1));
    let csv = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "m,freq,threshold,pass");
    assert_eq!(lines.len(), 3);
    assert!(lines[2].starts_with("64,"));
    std::fs::remove_file(&path).unwrap();
}

#[test]
fn explore_and_member_agree() {
    let o = cpaclab(&["classes", "explore-e", "--k", "2", "--l", "3", "--index-budget", "60", "--step-budget", "100"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let first = text.lines().next().expect("at least one record");
    let record: serde_json::Value = serde_json::from_str(first).unwrap();
    let h = serde_json::to_string(&record["h_e"]).unwrap();
    let member = cpaclab(&["classes", "member", "--class", r#"{"kind":"hkl","k":2,"l":3}"#, "--hypothesis", &h]);
    assert_eq!(stdout(&member), "YES\n");
}

#[test]
fn machine_round_trip() {
    let program = r#"[{"op":"clr","r":1},{"op":"inc","r":1}]"#;
    let code = stdout(&cpaclab(&["machine", "encode", "--program", program]));
    let decoded = stdout(&cpaclab(&["machine", "decode", "--code", code.trim()]));
    assert_eq!(decoded.trim(), program);
    let run = stdout(&cpaclab(&["machine", "run", "--code", code.trim(), "--input", "8", "--budget", "5"]));
    assert_eq!(run.trim(), r#"{"outcome":"halted","output":[1],"steps":2}"#);
}
