use std::path::Path;
use std::process::{Command, Output};

fn shiftlab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shiftlab"))
        .args(args)
        .current_dir(dir)
        .env("SHIFTLAB_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write_matrix(path: &Path, re: &[&[f64]], im: &[&[f64]]) {
    let v = serde_json::json!({ "dim": re.len(), "re": re, "im": im });
    std::fs::write(path, v.to_string()).unwrap();
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = shiftlab(&["--help"], dir.path());
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    for sub in [
        "verify-sa",
        "verify-unitary",
        "shift-fn",
        "besov",
        "factorize",
        "sweep-constants",
        "sweep-open",
    ] {
        assert!(text.contains(sub), "{sub} missing from usage");
    }
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        code(&shiftlab(&["verify-sa", "--dim", "-3"], dir.path())),
        2
    );
    assert_eq!(code(&shiftlab(&["verify-sa", "--bogus"], dir.path())), 2);
    assert_eq!(code(&shiftlab(&["no-such-command"], dir.path())), 2);
    assert_eq!(code(&shiftlab(&["verify-sa", "--dim", "0"], dir.path())), 2);
}

#[test]
fn unreadable_input_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = shiftlab(
        &[
            "verify-sa",
            "--a",
            "missing_a.json",
            "--k",
            "missing_k.json",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing_a.json"));
    let o = shiftlab(&["besov", "--config", "nope.json"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("nope.json"));
}

#[test]
fn verify_sa_reference_run() {
    let dir = tempfile::tempdir().unwrap();
    let o = shiftlab(
        &[
            "verify-sa",
            "--dim",
            "8",
            "--seed",
            "42",
            "--eps",
            "0.1",
            "--out",
            "r.json",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&dir.path().join("r.json"));
    assert_eq!(r["pass"], true);
    let functions = r["reports"][0]["functions"].as_array().unwrap();
    assert_eq!(functions.len(), 12);
    assert!(functions.iter().all(|f| f["pass"] == true));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout
        .lines()
        .any(|l| l.starts_with("instance 0 dim=8 seed=42")));
}

#[test]
fn reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str| {
        [
            "verify-unitary",
            "--count",
            "6",
            "--max-dim",
            "4",
            "--seed",
            "9",
            "--out",
            out,
        ]
    };
    assert_eq!(code(&shiftlab(&args("a.json"), dir.path())), 0);
    assert_eq!(code(&shiftlab(&args("b.json"), dir.path())), 0);
    let a = std::fs::read(dir.path().join("a.json")).unwrap();
    let b = std::fs::read(dir.path().join("b.json")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn failing_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("strict.json"),
        r#"{"tolerances": {"koplienko": 1e-30, "krein": 1e-30}}"#,
    )
    .unwrap();
    let o = shiftlab(
        &["verify-sa", "--config", "strict.json", "--dim", "4"],
        dir.path(),
    );
    assert_eq!(code(&o), 1);
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.json"),
        r#"{"subcommand": "verify-sa", "seed": 5, "grid": {"dim": 3, "eps": 0.05}, "family": "polynomial"}"#,
    )
    .unwrap();
    let o = shiftlab(
        &[
            "verify-sa",
            "--config",
            "run.json",
            "--dim",
            "4",
            "--out",
            "r.json",
            "--save-config",
            "eff.json",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    let r = read_json(&dir.path().join("r.json"));
    let inst = &r["reports"][0]["instance"];
    assert_eq!(inst["dim"], 4);
    assert_eq!(inst["seed"], 5);
    assert_eq!(inst["eps"], 0.05);
    assert_eq!(r["reports"][0]["functions"].as_array().unwrap().len(), 2);
    let eff = read_json(&dir.path().join("eff.json"));
    assert_eq!(eff["grid"]["dim"], 4);
    assert_eq!(eff["output"]["out"], "r.json");

    // The effective configuration reproduces the run.
    let o = shiftlab(
        &["verify-sa", "--config", "eff.json", "--out", "r2.json"],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    assert_eq!(read_json(&dir.path().join("r2.json")), r);

    let o = shiftlab(
        &["besov", "--config", "run.json", "--member", "z^2"],
        dir.path(),
    );
    assert_eq!(code(&o), 2);
}

#[test]
fn explicit_matrices() {
    let dir = tempfile::tempdir().unwrap();
    write_matrix(
        &dir.path().join("a.json"),
        &[&[0.3, 0.1], &[0.1, -0.4]],
        &[&[0.0, 0.2], &[-0.2, 0.0]],
    );
    write_matrix(
        &dir.path().join("k.json"),
        &[&[0.05, 0.0], &[0.0, -0.02]],
        &[&[0.0, 0.0], &[0.0, 0.0]],
    );
    let o = shiftlab(
        &[
            "verify-sa",
            "--a",
            "a.json",
            "--k",
            "k.json",
            "--out",
            "r.json",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read_json(&dir.path().join("r.json"))["pass"], true);

    write_matrix(
        &dir.path().join("bad.json"),
        &[&[0.0, 1.0], &[0.0, 0.0]],
        &[&[0.0, 0.0], &[0.0, 0.0]],
    );
    let o = shiftlab(
        &["verify-sa", "--a", "bad.json", "--k", "k.json"],
        dir.path(),
    );
    assert_eq!(code(&o), 2);
}

#[test]
fn eta_csv_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    write_matrix(&dir.path().join("a.json"), &[&[0.0]], &[&[0.0]]);
    write_matrix(&dir.path().join("k.json"), &[&[1.0]], &[&[0.0]]);
    let o = shiftlab(
        &[
            "shift-fn",
            "--kind",
            "koplienko",
            "--first",
            "a.json",
            "--second",
            "k.json",
            "--samples",
            "101",
            "--lo",
            "0",
            "--hi",
            "1",
            "--csv",
            "eta.csv",
            "--out",
            "eta.json",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut rdr = csv::Reader::from_path(dir.path().join("eta.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["x", "eta"]);
    let rows: Vec<(f64, f64)> = rdr
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].parse().unwrap(), r[1].parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 101);
    for (x, eta) in rows {
        assert!((eta - (1.0 - x)).abs() <= 1e-15, "eta({x}) = {eta}");
    }
    assert_eq!(read_json(&dir.path().join("eta.json"))["kind"], "koplienko");
}

#[test]
fn neidhardt_moments_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = shiftlab(
        &[
            "shift-fn",
            "--kind",
            "neidhardt",
            "--dim",
            "3",
            "--degree",
            "5",
            "--csv",
            "m.csv",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(dir.path().join("m.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 11);
}

#[test]
fn empty_batch_gives_header_only_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = shiftlab(&["verify-sa", "--count", "0", "--csv", "e.csv"], dir.path());
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(dir.path().join("e.csv")).unwrap();
    assert_eq!(text.lines().count(), 1);
}

#[test]
fn sweep_csv_row_count_equals_grid() {
    let dir = tempfile::tempdir().unwrap();
    let o = shiftlab(
        &[
            "sweep-constants",
            "--kind",
            "unitary-s2",
            "--dims",
            "2,3",
            "--params",
            "1,2,4",
            "--seeds",
            "0,1",
            "--csv",
            "s.csv",
            "--out",
            "s.json",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let text = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 3 * 2);
    assert_eq!(
        read_json(&dir.path().join("s.json"))["summary"]["stable"],
        true
    );
}

#[test]
fn open_sweep_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = shiftlab(
        &[
            "sweep-open",
            "--problems",
            "unitary",
            "--dims",
            "1,2,4",
            "--terms",
            "4,8",
            "--seeds",
            "0",
            "--csv",
            "o.csv",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(dir.path().join("o.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 3 * 2);
    assert!(String::from_utf8_lossy(&o.stdout).contains("growth"));
}

#[test]
fn besov_and_factorize_from_files() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("f.json"),
        r#"{"kind": "circle", "coeffs": [[4, 1.0, 0.0], [-2, 0.0, 0.5]]}"#,
    )
    .unwrap();
    let o = shiftlab(
        &[
            "besov",
            "--function",
            "f.json",
            "--out",
            "b.json",
            "--csv",
            "b.csv",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    let b = read_json(&dir.path().join("b.json"));
    assert!(b["seminorm"].as_f64().unwrap() > 0.0);

    let o = shiftlab(
        &["factorize", "--function", "f.json", "--out", "f_out.json"],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    let f = read_json(&dir.path().join("f_out.json"));
    assert!(f["reconstruction_error"].as_f64().unwrap() <= 1e-12);
    assert_eq!(f["factorization"]["domain"], "circle");

    std::fs::write(
        dir.path().join("bad.json"),
        r#"{"kind": "line", "poly": [[0,0],[0,0],[0,0]], "modes": [[0.0, 1.0, 0.0]]}"#,
    )
    .unwrap();
    assert_eq!(
        code(&shiftlab(&["besov", "--function", "bad.json"], dir.path())),
        2
    );
}
