use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn ksobs(args: &[&str]) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ksobs"));
    cmd.args(args).env_remove("KSOBS_OUT");
    cmd
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    ksobs(args).arg("--out").arg(dir).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn single_mode() -> String {
    configs().join("single_mode.cfg").to_string_lossy().into_owned()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path).unwrap().lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn value(rows: &[Vec<String>], quantity: &str, index: usize) -> f64 {
    rows.iter().find(|r| r[0] == quantity && r[1] == index.to_string()).map(|r| r[2].parse().unwrap()).unwrap()
}

#[test]
fn design_reports_example_values() {
    let out = TempDir::new().unwrap();
    let o = run_in(out.path(), &["design", "--config", &single_mode()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&out.path().join("design.csv"));
    assert_eq!(value(&rows, "c", 0), 0.5);
    assert!((value(&rows, "c", 1) + 2.0 * 2f64.sqrt() / (PI * PI)).abs() < 1e-12);
    assert!((value(&rows, "closed_loop_eigenvalue", 0) + 2.0).abs() < 1e-9);
    assert!((value(&rows, "closed_loop_eigenvalue", 1) + 1.0).abs() < 1e-9);
    assert_eq!(value(&rows, "assumption_b", 0), 1.0);
    assert!(out.path().join("design.kv").exists());
}

#[test]
fn assumption_b_failures_exit_2() {
    let out = TempDir::new().unwrap();
    let resonant = configs().join("resonant.cfg");
    let o = run_in(out.path(), &["design", "--config", resonant.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("q = (0^2+1^2)pi^2"));

    let cfg = write_config(
        out.path(),
        "zero_c1.cfg",
        "problem.q = 9.970925584731695\nproblem.N = 1\nproblem.kernel = coeffs:1,0\ngain.L = 1,1\n",
    );
    let o = run_in(out.path(), &["design", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("c_1 = 0"));
}

#[test]
fn masp_prints_optimum_and_branches() {
    let out = TempDir::new().unwrap();
    let o = run_in(out.path(), &["masp", "--config", &single_mode(), "--grid", "-1:1:0.005"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let grab = |key: &str| -> f64 {
        text.lines().find_map(|l| l.strip_prefix(key)).map(|v| v.trim().parse().unwrap()).unwrap()
    };
    assert!((grab("r_star =") + 0.2).abs() < 0.06);
    assert!((grab("T_max_star =") - 0.01606).abs() < 5e-4);
    assert_eq!(csv_rows(&out.path().join("masp_curve.csv")).len(), 401);

    let o = run_in(out.path(), &["masp", "--config", &single_mode(), "--grid", "0"]);
    let beta = ((16.0 + 4.5 * PI.powi(4)) * (25.0 + 128.0 / PI.powi(4) + 9.0 * PI.powi(4) / 8.0)).sqrt();
    let t0: f64 = stdout(&o).lines().find_map(|l| l.strip_prefix("T_max_star =")).unwrap().trim().parse().unwrap();
    assert!((t0 - PI * PI / (2.0 * 2f64.sqrt() * beta)).abs() < 1e-12);

    let cfg = std::fs::read_to_string(single_mode()).unwrap().replace("gain.L = 4,20.936592598916636", "gain.L = 0,0");
    let zero =
        write_config(out.path(), "zero_gain.cfg", &cfg.replace("envelope.R = 11.657584361344004", "envelope.R = 1"));
    let o = run_in(out.path(), &["masp", "--config", &zero]);
    assert!(stdout(&o).contains("T_max infinite"), "{}{}", stdout(&o), String::from_utf8_lossy(&o.stderr));
}

#[test]
fn simulate_verifies_single_mode() {
    let out = TempDir::new().unwrap();
    let o = run_in(out.path(), &["simulate", "--config", &single_mode()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let verdict = csv_rows(&out.path().join("verdict.csv"));
    assert_eq!(verdict[0][3], "0");
    let fitted: f64 = verdict[0][6].parse().unwrap();
    let sigma: f64 = verdict[0][7].parse().unwrap();
    assert!(fitted >= sigma, "fitted {fitted} < sigma {sigma}");
    let header = std::fs::read_to_string(out.path().join("trace.csv")).unwrap();
    assert!(header.starts_with("t,norm_L2,norm_D2,norm_D4,predictor_error,bound21,bound22,bound23,is_sample_time\n"));
}

#[test]
fn infeasible_period_exits_3() {
    let out = TempDir::new().unwrap();
    let cfg = configs().join("infeasible.cfg");
    let o = run_in(out.path(), &["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let o = run_in(out.path(), &["certify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn batch_writes_one_trace_per_run() {
    let out = TempDir::new().unwrap();
    let cfg = configs().join("single_mode_batch.cfg");
    let o = run_in(out.path(), &["simulate", "--config", cfg.to_str().unwrap(), "--jobs", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let verdict = csv_rows(&out.path().join("verdict.csv"));
    assert_eq!(verdict.len(), 20);
    for (k, row) in verdict.iter().enumerate() {
        assert_eq!(row[0], k.to_string());
        assert_eq!(row[1], (2024 + k).to_string());
        assert_eq!(row[3], "0");
        assert!(out.path().join(format!("trace_{k:04}.csv")).exists());
    }
}

#[test]
fn seed_override_and_echo_round_trip() {
    let out = TempDir::new().unwrap();
    let a = out.path().join("a");
    let b = out.path().join("b");
    let c = out.path().join("c");
    run_in(&a, &["simulate", "--config", &single_mode(), "--seed", "8"]);
    run_in(&b, &["simulate", "--config", &single_mode()]);
    let trace = |d: &Path| std::fs::read(d.join("trace.csv")).unwrap();
    assert_ne!(trace(&a), trace(&b));

    let echo = a.join("config.cfg");
    assert!(std::fs::read_to_string(&echo).unwrap().contains("simulation.seed = 8"));
    run_in(&c, &["simulate", "--config", echo.to_str().unwrap()]);
    assert_eq!(trace(&a), trace(&c));
}

#[test]
fn stochastic_config_without_seed_is_rejected() {
    let out = TempDir::new().unwrap();
    let cfg = std::fs::read_to_string(single_mode()).unwrap().replace("simulation.seed = 7\n", "");
    let path = write_config(out.path(), "noseed.cfg", &cfg);
    let o = run_in(out.path(), &["simulate", "--config", &path]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed"));
}

#[test]
fn output_directory_from_environment() {
    let out = TempDir::new().unwrap();
    let o = ksobs(&["design", "--config", &single_mode()]).env("KSOBS_OUT", out.path()).output().unwrap();
    assert!(o.status.success());
    assert!(out.path().join("design.csv").exists());
}

#[test]
fn oracle_rows() {
    let out = TempDir::new().unwrap();
    let cfg = write_config(
        out.path(),
        "const.cfg",
        "problem.q = 9.970925584731695\nproblem.N = 1\nproblem.kernel = x\ngain.poles = -1,-2\n\
         oracle.profile = const:1\noracle.horizon = 0.001\noracle.grid = 51\noracle.dt = 1e-5\n",
    );
    let o = run_in(out.path(), &["oracle", "--config", &cfg]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&out.path().join("oracle.csv"));
    assert_eq!(rows.len(), 1);
    assert!(rows[0][4].parse::<f64>().unwrap() < 1e-12);

    let study = configs().join("oracle.cfg");
    let o = run_in(out.path(), &["oracle", "--config", study.to_str().unwrap()]);
    assert!(o.status.success());
    let rows = csv_rows(&out.path().join("oracle.csv"));
    assert_eq!(rows.len(), 3);
    for row in &rows[1..] {
        let order: f64 = row[5].parse().unwrap();
        assert!((1.8..=2.2).contains(&order));
    }
}
