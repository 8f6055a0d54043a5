use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fracdecay(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracdecay")).args(args).output().expect("binary runs")
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

fn files(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> =
        fs::read_dir(dir).map(|r| r.map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect()).unwrap_or_default();
    v.sort();
    v
}

#[test]
fn single_mode_config_gives_sandwich() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "e.cfg", "[run single_mode]\nkind = subdiffusion\nalpha = 0.5\nbeta = 0.5\nmodes = 8\nu0 = mode1\n");
    let out = dir.path().join("out");
    let o = fracdecay(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    assert!(text(&o.stdout).contains("verdict=sandwich_ok"), "{}", text(&o.stdout));
    assert_eq!(files(&out), ["report.txt", "single_mode.csv", "single_mode.report.txt"]);
    let csv = fs::read_to_string(out.join("single_mode.csv")).unwrap();
    assert!(csv.starts_with("t,E,bound_lower,bound_upper\n"));
}

#[test]
fn empty_config_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "e.cfg", "# nothing to run\n[experiment]\nseed = 1\n");
    let out = dir.path().join("out");
    let o = fracdecay(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(!out.exists());
}

#[test]
fn beta_at_minus_alpha_names_hypothesis() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "e.cfg", "[run edge]\nkind = subdiffusion\nalpha = 0.5\nbeta = -0.5\n");
    let out = dir.path().join("out");
    let o = fracdecay(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = text(&o.stderr);
    assert!(err.contains("edge.beta") && err.contains("hypothesis (H)"), "{err}");
    assert!(!out.exists());

    let o = fracdecay(&["ode", "solve", "--alpha", "0.5", "--beta", "-0.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o.stderr).contains("hypothesis (H)"));
}

#[test]
fn unknown_keys_are_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "e.cfg", "[run typo]\nkind = ode\nlamda = 2\n");
    let o = fracdecay(&["run", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o.stderr).contains("typo.lamda"), "{}", text(&o.stderr));

    let o = fracdecay(&["subdiffusion", "solve", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn failed_run_leaves_no_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    // the second run fails numerically after the first has been solved
    let cfg = write(
        dir.path(),
        "e.cfg",
        "[run ok]\nkind = ode\nsteps = 64\n[run blowup]\nkind = nonlinear\noperator = porous_medium\nsource = power_absorption\nmu = -50\npoints = 15\nsteps = 64\nT = 10\n",
    );
    let out = dir.path().join("out");
    let o = fracdecay(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(5), "{}", text(&o.stderr));
    assert!(files(&out).is_empty(), "{:?}", files(&out));
}

fn trace_file(dir: &Path, name: &str, f: impl Fn(f64) -> f64) -> String {
    let mut body = String::from("t,E\n");
    for i in 0..=200 {
        let t = 10f64.powf(-2.0 + 5.0 * i as f64 / 200.0);
        body.push_str(&format!("{t},{}\n", f(t)));
    }
    write(dir, name, &body)
}

#[test]
fn decay_fit_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = trace_file(dir.path(), "good.csv", |t| 1.0 / (1.0 + t));
    let o = fracdecay(&["decay", "fit", "--input", &good, "--model", "auto", "--window", "2", "--exponent", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let stdout = text(&o.stdout);
    assert!(stdout.lines().nth(1).unwrap().starts_with("verdict=sandwich_ok"), "{stdout}");

    let slow = trace_file(dir.path(), "slow.csv", |t| 1.0 / (1.0 + t.sqrt()));
    let o = fracdecay(&["decay", "fit", "--input", &slow, "--exponent", "1"]);
    assert_eq!(o.status.code(), Some(3), "{}", text(&o.stdout));
    assert!(text(&o.stdout).contains("verdict=violated"));

    let zero = trace_file(dir.path(), "zero.csv", |_| 0.0);
    let o = fracdecay(&["decay", "fit", "--input", &zero]);
    assert_eq!(o.status.code(), Some(4));
    assert!(text(&o.stdout).contains("verdict=degenerate"));
}

#[test]
fn specfun_eval_prints_value_and_bounds() {
    let o = fracdecay(&["specfun", "eval", "--alpha", "0.5", "--m", "2", "--l", "1", "--z", "-1"]);
    assert_eq!(o.status.code(), Some(0));
    let line = text(&o.stdout);
    let fields: Vec<f64> = line.trim().split('\t').map(|f| f.parse().unwrap()).collect();
    assert_eq!(fields.len(), 3);
    assert!(fields[1] <= fields[0] && fields[0] <= fields[2], "{fields:?}");

    let o = fracdecay(&["specfun", "eval", "--alpha", "1", "--m", "2", "--z", "0.5"]);
    let v: f64 = text(&o.stdout).trim().parse().unwrap();
    assert!((v - 0.25f64.exp()).abs() < 1e-12);
}

#[test]
fn solve_subcommands_emit_documented_columns() {
    let o = fracdecay(&["ode", "solve", "--alpha", "0.5", "--beta", "0.5", "--delta", "2", "--T", "10", "--steps", "256"]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    assert!(text(&o.stdout).starts_with("t,H,sub_envelope,super_envelope\n"));

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = fracdecay(&["--out", out, "subdiffusion", "solve", "--modes", "4", "--u0", "1,0.5", "--snapshots", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stdout));
    let fields = fs::read_to_string(dir.path().join("subdiffusion.fields.csv")).unwrap();
    assert!(fields.starts_with("x,t=0.0,"));
    assert_eq!(fields.lines().count(), 130);

    let o = fracdecay(&["heat", "solve", "--coefficient", "logarithmic", "--p", "3", "--modes", "4", "--T", "100"]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    assert!(text(&o.stdout).starts_with("t,E,bound_lower,bound_upper,model\n"));
    assert!(text(&o.stderr).contains("model: logarithmic"), "{}", text(&o.stderr));

    let o = fracdecay(&[
        "nonlinear", "solve", "--operator", "p_laplace", "--p", "3", "--points", "31", "--steps", "256", "--T", "100",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    assert!(text(&o.stdout).starts_with("t,E,predicted_bound\n"));
    assert!(text(&o.stderr).contains("verdict=upper_only_ok"));
}

#[test]
fn seeded_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "e.cfg",
        "[experiment]\nseed = 11\njobs = 2\n[run rnd]\nkind = subdiffusion\nu0 = random\nmodes = 8\nalpha = 0.4, 0.7\n",
    );
    let run = |sub: &str, extra: &[&str]| {
        let out = dir.path().join(sub);
        let mut args = vec!["run", "--config", cfg.as_str(), "--out", out.to_str().unwrap()];
        args.extend_from_slice(extra);
        assert_eq!(fracdecay(&args).status.code(), Some(0));
        fs::read(out.join("rnd_001.csv")).unwrap()
    };
    let a = run("a", &[]);
    assert_eq!(a, run("b", &["--jobs", "1"]));
    assert_ne!(a, run("c", &["--seed", "12"]));
}

#[test]
fn loosened_specfun_fails_reproduce() {
    let o = fracdecay(&["reproduce", "--loosen-specfun", "1e6", "--skip-determinism"]);
    assert_ne!(o.status.code(), Some(0));
    let table = text(&o.stdout);
    let row1 = table.lines().find(|l| l.starts_with("1 ")).unwrap();
    assert!(row1.contains("FAIL"), "{table}");
}
