use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_dynatomo");

fn run(args: &[&str], out: &Path, cwd: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .current_dir(cwd)
        .env_remove("DYNATOMO_SEED")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.display().to_string()
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn every_subcommand_is_byte_deterministic() {
    let tmp = TempDir::new().unwrap();
    let rud = write_config(tmp.path(), "rud.json", r#"{"protocol": "rud", "family": {"builder": "example-4-8"}, "shots": 5000}"#);
    let avg = write_config(tmp.path(), "avg.json", r#"{"protocol": "avgchannel", "dimension": 3, "shots": 5000}"#);
    let sic = write_config(tmp.path(), "sic.json", r#"{"protocol": "sic-simulate", "dimension": 2, "shots": 5000}"#);
    let ic = write_config(tmp.path(), "ic.json", r#"{"protocol": "ic-check", "dimension": 2, "family": {"random": {"count": 6}}}"#);
    let cases: Vec<Vec<&str>> = vec![
        vec!["run", &rud],
        vec!["run", &avg],
        vec!["sic-simulate", &sic],
        vec!["ic-check", &ic],
        vec!["example-4-8", "--shots", "1000"],
        vec!["wh-demo", "--d", "4"],
        vec!["sic-verify", "--d", "3"],
    ];
    for (i, args) in cases.iter().enumerate() {
        let mut args = args.clone();
        args.extend(["--seed", "11"]);
        let a = tmp.path().join(format!("a{i}"));
        let b = tmp.path().join(format!("b{i}"));
        assert!(run(&args, &a, tmp.path()).status.success(), "{args:?}");
        assert!(run(&args, &b, tmp.path()).status.success(), "{args:?}");
        assert_eq!(files(&a), files(&b), "{args:?}");
    }
}

#[test]
fn seed_changes_sampled_output() {
    let tmp = TempDir::new().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    run(&["example-4-8", "--shots", "1000", "--seed", "1"], &a, tmp.path());
    run(&["example-4-8", "--shots", "1000", "--seed", "2"], &b, tmp.path());
    assert_ne!(files(&a), files(&b));
}

#[test]
fn env_seed_is_a_fallback() {
    let tmp = TempDir::new().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let c = tmp.path().join("c");
    run(&["example-4-8", "--shots", "100", "--seed", "5"], &a, tmp.path());
    let out = Command::new(BIN)
        .args(["example-4-8", "--shots", "100", "--out-dir"])
        .arg(&b)
        .env("DYNATOMO_SEED", "5")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(files(&a), files(&b));
    // the flag wins over the environment
    let out = Command::new(BIN)
        .args(["example-4-8", "--shots", "100", "--seed", "5", "--out-dir"])
        .arg(&c)
        .env("DYNATOMO_SEED", "9")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(files(&a), files(&c));
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("o");
    let bad_json = write_config(tmp.path(), "a.json", "{\"protocol\": ");
    assert_eq!(run(&["run", &bad_json], &out, tmp.path()).status.code(), Some(2));
    let unknown = write_config(tmp.path(), "b.json", r#"{"protocol": "rud", "famly": {}}"#);
    let o = run(&["run", &unknown], &out, tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("famly"));
    let few = write_config(
        tmp.path(),
        "c.json",
        r#"{"protocol": "rud", "family": {"projectors": [[1, [[1,0],[0,0]]], [1, [[0,0],[1,0]]], [1, [[1,0],[0,0]]]]}}"#,
    );
    let o = run(&["run", &few], &out, tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/family"));
    // spans only the diagonal: not informationally complete
    let diag = write_config(
        tmp.path(),
        "d.json",
        r#"{"protocol": "ic-check", "family": {"projectors": [[0.5, [[1,0],[0,0]]], [0.5, [[0,0],[1,0]]], [0.5, [[1,0],[0,0]]], [0.5, [[0,0],[1,0]]]]}}"#,
    );
    let o = run(&["ic-check", &diag], &out, tmp.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(out.join("ic-check.json").exists(), "report is still written");
    assert_eq!(run(&["run", &diag.replace("d.json", "missing.json")], &out, tmp.path()).status.code(), Some(1));
    let wrong = write_config(tmp.path(), "e.json", r#"{"protocol": "wh-demo", "dimension": 3}"#);
    assert_eq!(run(&["sic-simulate", &wrong], &out, tmp.path()).status.code(), Some(2));
    assert_eq!(run(&["run", &wrong], &out, tmp.path()).status.code(), Some(0));
}

#[test]
fn exact_mode_csv_columns_agree() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("o");
    assert!(run(&["example-4-8"], &out, tmp.path()).status.success());
    let csv = fs::read_to_string(out.join("example-4-8.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,p_exact,p_sampled,shots"));
    let mut n = 0;
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f[1], f[2]);
        assert_eq!(f[3], "0");
        n += 1;
    }
    assert_eq!(n, 9);
    assert!(!csv.contains('\r'));
}

#[test]
fn json_only_and_output_names() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("o");
    let cfg = write_config(
        tmp.path(),
        "r.json",
        r#"{"protocol": "avgchannel", "dimension": 2, "output": {"json": "nested/report.json", "csv": "p.csv"}}"#,
    );
    assert!(run(&["run", &cfg], &out, tmp.path()).status.success());
    assert!(out.join("nested/report.json").exists());
    assert!(out.join("p.csv").exists());
    let out2 = tmp.path().join("o2");
    assert!(run(&["run", &cfg, "--json-only"], &out2, tmp.path()).status.success());
    assert!(out2.join("nested/report.json").exists());
    assert!(!out2.join("p.csv").exists());
}

#[test]
fn report_echoes_effective_config() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("o");
    let cfg = write_config(tmp.path(), "r.json", r#"{"protocol": "rud", "family": {"builder": "example-4-8"}}"#);
    assert!(run(&["run", &cfg, "--seed", "3", "--shots", "10"], &out, tmp.path()).status.success());
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("rud.json")).unwrap()).unwrap();
    assert_eq!(v["config"]["seed"], 3);
    assert_eq!(v["config"]["shots"], 10);
    let echoed = serde_json::to_string(&v["config"]).unwrap();
    dynatomo_cli::config::parse_config(&echoed).expect("echo is itself a valid config");
}

#[test]
fn thread_count_does_not_change_reports() {
    let tmp = TempDir::new().unwrap();
    let mut snaps = Vec::new();
    for threads in ["1", "4"] {
        let out = tmp.path().join(format!("t{threads}"));
        for args in [&["sic-verify", "--d", "3"][..], &["example-4-8", "--shots", "2000"][..]] {
            let ok = Command::new(BIN)
                .args(args)
                .args(["--seed", "8", "--out-dir"])
                .arg(&out)
                .env("RAYON_NUM_THREADS", threads)
                .env_remove("DYNATOMO_SEED")
                .status()
                .unwrap()
                .success();
            assert!(ok);
        }
        snaps.push(files(&out));
    }
    assert_eq!(snaps[0], snaps[1]);
}
