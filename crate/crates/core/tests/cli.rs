use std::path::Path;
use std::process::{Command, Output};

fn cv_edr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cv-edr")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn field<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find(|l| l.split_whitespace().next() == Some(key))
        .unwrap_or_else(|| panic!("no {key} in\n{text}"))
}

fn assert_single_line_error(o: &Output, code: i32, kind: &str) {
    assert_eq!(o.status.code(), Some(code), "{}", stderr(o));
    let err = stderr(o);
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    assert!(err.starts_with(&format!("error[{kind}]: ")), "{err}");
}

#[test]
fn report_coherent_half() {
    let o = cv_edr(&["report", "--state", "coherent", "--t", "0.5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(field(&out, "epsilon").contains("0.765366"), "{out}");
    assert!(field(&out, "lhs_heisenberg").ends_with("violated"));
    assert!(field(&out, "lhs_ozawa").ends_with("valid"));
    assert!(field(&out, "lhs_branciard").contains("valid"));
}

#[test]
fn minimize_coherent() {
    let o = cv_edr(&["minimize", "--state", "coherent"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(field(&stdout(&o), "t_star").ends_with("0.500000"));
}

#[test]
fn sweep_default_writes_three_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = cv_edr(&["sweep", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["sweep.csv", "bounds.csv", "report.json"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    let rows = csv.lines().filter(|l| !l.starts_with('#')).count() - 1;
    assert_eq!(rows, 297);
}

#[test]
fn sweep_with_config_and_empirical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.txt");
    std::fs::write(&cfg, "coherent=\nt_start=0.4\nt_stop=0.6\nt_step=0.1\nn=2000\ntrials=3\ninclude_empirical=true\n").unwrap();
    let out = dir.path().join("run");
    let o = cv_edr(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("outside 3 bars"));
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().contains("emp_epsilon_err"));
    assert_eq!(csv.lines().count(), 2 + 3);
}

fn gen(dir: &Path, trials: &str) {
    let o = cv_edr(&[
        "gen", "--state", "squeezed_db", "--param", "sqz_db=-2.9", "--param", "antisqz_db=3.9", "--t", "0.7",
        "--n", "4000", "--seed", "3", "--trials", trials, "--out", dir.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn gen_then_analyze_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), "2");
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let args = |with_ref: bool| {
        let mut a = vec!["analyze".to_string(), "--t".into(), "0.7".into()];
        for k in ["000", "001"] {
            a.extend(["--x".into(), p(&format!("x_{k}.csv")), "--p".into(), p(&format!("p_{k}.csv"))]);
            if with_ref {
                a.extend([
                    "--ref-x".into(),
                    p(&format!("ref_x_{k}.csv")),
                    "--ref-p".into(),
                    p(&format!("ref_p_{k}.csv")),
                ]);
            }
        }
        a
    };
    let run = |a: Vec<String>| cv_edr(&a.iter().map(String::as_str).collect::<Vec<_>>());
    let first = run(args(true));
    let second = run(args(true));
    assert!(first.status.success(), "{}", stderr(&first));
    assert_eq!(stdout(&first), stdout(&second));
    assert!(field(&stdout(&first), "sigma_source").contains("reference"));
    assert!(stdout(&first).contains("epsilon_rms"));

    let reconstructed = run(args(false));
    assert!(reconstructed.status.success(), "{}", stderr(&reconstructed));
    assert!(field(&stdout(&reconstructed), "sigma_source").contains("reconstructed"));
}

#[test]
fn validation_errors_exit_1() {
    assert_single_line_error(&cv_edr(&["report", "--state", "coherent", "--t", "1.5"]), 1, "validation");
    assert_single_line_error(&cv_edr(&["report", "--state", "banana", "--t", "0.5"]), 1, "validation");
    assert_single_line_error(&cv_edr(&["report", "--state", "coherent"]), 1, "validation");
    assert_single_line_error(
        &cv_edr(&["report", "--state", "squeezed_db", "--param", "sqz_db=-3", "--param", "antisqz_db=2", "--t", "0.5"]),
        1,
        "validation",
    );
}

#[test]
fn config_errors_carry_path_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.txt");
    std::fs::write(&cfg, "# ok\nt_step=0\n").unwrap();
    let o = cv_edr(&["sweep", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_single_line_error(&o, 1, "validation");
    assert!(stderr(&o).contains(&format!("{}:2:", cfg.display())), "{}", stderr(&o));
}

#[test]
fn missing_file_exits_2() {
    let o = cv_edr(&["analyze", "--x", "/nonexistent/x.csv", "--p", "/nonexistent/p.csv", "--t", "0.5"]);
    assert_single_line_error(&o, 2, "io");
}

#[test]
fn swapped_bases_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), "1");
    let x = dir.path().join("x_000.csv");
    let p = dir.path().join("p_000.csv");
    let o = cv_edr(&["analyze", "--x", p.to_str().unwrap(), "--p", x.to_str().unwrap(), "--t", "0.7"]);
    assert_single_line_error(&o, 1, "validation");
    assert!(stderr(&o).contains("basis"), "{}", stderr(&o));

    let o = cv_edr(&["analyze", "--x", x.to_str().unwrap(), "--p", p.to_str().unwrap(), "--t", "0.6"]);
    assert_single_line_error(&o, 1, "validation");
}
