use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use piecemeal::config::{parse_config, read_config};
use piecemeal::output::{meta_path, parse_csv, CSV_HEADER};

const BASE: &str = "\
wavelength_m = 380e-9
theta_bar_as = 1.2
longest_baseline_m = 1070
sigma_rad = pi/3
m_grid = 1, 4, 16
trials = 200
";

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_piecemeal"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn sweep_writes_csv_and_meta() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.cfg", BASE);
    let out = dir.path().join("sweep.csv");
    let o = run(&[
        "sweep",
        "--config",
        &cfg,
        "--seed",
        "9",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let csv = fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().next().unwrap(), CSV_HEADER);
    let rows = parse_csv(&csv).unwrap();
    assert_eq!(rows.iter().map(|r| r.m).collect::<Vec<_>>(), vec![1, 4, 16]);
    assert!(rows.iter().all(|r| r.trials == 200 && r.seed == 9));

    // the sidecar is a loadable run file that reproduces the run
    let meta = meta_path(&out);
    let echoed = read_config(&meta).unwrap();
    assert_eq!(echoed.seed, Some(9));
    assert_eq!(echoed.out.as_deref(), out.to_str());
    let again = dir.path().join("again.csv");
    let o = run(&[
        "sweep",
        "--config",
        meta.to_str().unwrap(),
        "--out",
        again.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert_eq!(fs::read(&out).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn identical_invocations_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.cfg", &format!("{BASE}seed = 77\n"));
    let a = run(&["sweep", "--config", &cfg]);
    let b = run(&["sweep", "--config", &cfg]);
    assert!(a.status.success());
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout);
    let c = run(&["sweep", "--config", &cfg, "--seed", "78"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn missing_seed_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.cfg", BASE);
    let o = run(&["sweep", "--config", &cfg]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed"));
}

#[test]
fn both_ladder_sizes_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.cfg", &format!("{BASE}k = 15\nseed = 1\n"));
    let o = run(&["sweep", "--config", &cfg]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(
        err.contains("k") && err.contains("longest_baseline_m"),
        "{err}"
    );
}

#[test]
fn unknown_key_and_bad_unit_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.cfg",
        &format!("{BASE}seed = 1\ntheta_bar = 3\n"),
    );
    let o = run(&["sweep", "--config", &cfg]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("theta_bar"));

    let cfg = write_config(dir.path(), "bad.cfg", &BASE.replace("1070", "1.07km"));
    let o = run(&["sweep", "--config", &cfg, "--seed", "1"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("meters"));
}

#[test]
fn unreadable_config_names_path() {
    let o = run(&["sweep", "--config", "/nonexistent/run.cfg", "--seed", "1"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent/run.cfg"));
}

#[test]
fn compare_writes_both_curves_on_one_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.cfg", BASE);
    let out = dir.path().join("fig.csv");
    let o = run(&[
        "compare",
        "--config",
        &cfg,
        "--seed",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("single_baseline_photons_at_eps_0.01"));

    let pm = parse_csv(&fs::read_to_string(dir.path().join("fig_piecemeal.csv")).unwrap()).unwrap();
    let sb = parse_csv(&fs::read_to_string(dir.path().join("fig_single_baseline.csv")).unwrap())
        .unwrap();
    assert_eq!(pm.len(), sb.len());
    for (a, b) in pm.iter().zip(&sb) {
        assert_eq!(a.n_photons, b.n_photons);
        assert_eq!(b.trials, 0);
        assert_eq!(b.eps_stderr, 0.0);
        // a few hundred photons are nowhere near enough for one baseline
        assert!(b.eps_mean > 0.99);
    }
    assert!(dir.path().join("fig_piecemeal.csv.meta").exists());
}

#[test]
fn reference_and_estimate_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.cfg",
        &format!("{BASE}gamma0_as = 2\ntheta0_mas = 1\ndecorrelation = 0\ntheta_as = 0.4\n"),
    );
    let out = dir.path().join("ref.csv");
    let o = run(&[
        "reference",
        "--config",
        &cfg,
        "--seed",
        "4",
        "--trials",
        "50",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = parse_csv(&fs::read_to_string(&out).unwrap()).unwrap();
    assert!(rows.iter().all(|r| r.trials == 50));

    let o = run(&["estimate", "--config", &cfg, "--seed", "4"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("theta_as = 0.4"));
    assert_eq!(
        text.lines()
            .filter(|l| l.ends_with(",true") || l.ends_with(",false"))
            .count(),
        3
    );
}

#[test]
fn echoed_config_round_trips() {
    let cfg = parse_config(&format!(
        "{BASE}seed = 12\ndrift = per_baseline\nflip_a = 0.1\n"
    ))
    .unwrap();
    assert_eq!(parse_config(&cfg.to_config_text()).unwrap(), cfg);
}
