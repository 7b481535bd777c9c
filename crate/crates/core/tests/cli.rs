use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pendulum_lqr::harness::synth::{gravity_log, horizontal_log, GravitySweep, HorizontalRun};
use pendulum_lqr::sysid::{format_log, LogRecord};
use pendulum_lqr::trajectory::Trajectory;
use pendulum_lqr::PendulumParams;
use tempfile::TempDir;

const PAPER: PendulumParams = PendulumParams::IDENTIFIED;

fn pendctl(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pendctl"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn value(report: &str, key: &str) -> f64 {
    let prefix = format!("{key} = ");
    report
        .lines()
        .find_map(|l| l.strip_prefix(&prefix))
        .unwrap_or_else(|| panic!("no `{key}` in\n{report}"))
        .parse()
        .unwrap()
}

fn write_logs(dir: &TempDir, name: &str, logs: &[Vec<LogRecord>]) -> Vec<PathBuf> {
    logs.iter()
        .enumerate()
        .map(|(i, log)| {
            let p = dir.path().join(format!("{name}{i}.csv"));
            fs::write(&p, format_log(log)).unwrap();
            p
        })
        .collect()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("identify prints JSON")
}

#[test]
fn identify_horizontal_trials() {
    let dir = TempDir::new().unwrap();
    let logs: Vec<_> = (0..6)
        .map(|seed| horizontal_log(&PAPER, &HorizontalRun { seed, ..HorizontalRun::default() }).unwrap())
        .collect();
    let paths = write_logs(&dir, "horizontal", &logs);
    let mut args = vec!["identify", "inertia-damping", "--params-out", "fit.cfg"];
    args.extend(paths.iter().map(|p| p.to_str().unwrap()));
    let o = pendctl(dir.path(), &args);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = json(&o);
    assert_eq!(report["trials"].as_array().unwrap().len(), 6);
    assert!(report["trials"][0]["coefficients"]["velocity"].as_f64().unwrap() < 0.0);
    let m = report["averaged"]["m_c"].as_f64().unwrap();
    let b = report["averaged"]["b_c"].as_f64().unwrap();
    assert!((m / 0.055 - 1.0).abs() < 1e-6, "{m}");
    assert!((b / 11.77 - 1.0).abs() < 1e-6, "{b}");

    let params = fs::read_to_string(dir.path().join("fit.cfg")).unwrap();
    assert!(params.starts_with("m_c = 0.05"));
    // the params file is itself a valid configuration
    let o = pendctl(dir.path(), &["design", "--config", "fit.cfg"]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn identify_gravity_sweeps() {
    let dir = TempDir::new().unwrap();
    let logs: Vec<_> = (0..2)
        .map(|seed| gravity_log(&PAPER, &GravitySweep { seed, ..GravitySweep::default() }).unwrap())
        .collect();
    let paths = write_logs(&dir, "vertical", &logs);
    let mut args = vec!["identify", "gravity"];
    args.extend(paths.iter().map(|p| p.to_str().unwrap()));
    let o = pendctl(dir.path(), &args);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = json(&o);
    let g = report["averaged"]["g_c"].as_f64().unwrap();
    assert!((g / 1.678 - 1.0).abs() < 1e-3, "{g}");
    assert_eq!(report["trials"][0]["segments"].as_u64(), Some(37));
    assert_eq!(report["settings"]["velocity_threshold"].as_f64(), Some(0.005));
}

#[test]
fn identify_failures() {
    let dir = TempDir::new().unwrap();
    let o = pendctl(dir.path(), &["identify", "inertia-damping"]);
    assert_eq!(o.status.code(), Some(1));

    fs::write(dir.path().join("bad.csv"), "t,position_fbk,velocity_fbk,effort_fbk\n0,a,0,0\n").unwrap();
    let o = pendctl(dir.path(), &["identify", "inertia-damping", "bad.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bad.csv"));
    assert!(stderr(&o).contains("line 2"));

    // three holds at one angle cannot separate gravity from nothing
    let mut recs = Vec::new();
    let mut k = 0;
    for _ in 0..3 {
        for _ in 0..100 {
            recs.push(LogRecord::feedback(k as f64 * 0.01, 0.3, 0.0, 0.5));
            k += 1;
        }
        for j in 0..20 {
            let v = if j < 10 { 0.1 } else { -0.1 };
            recs.push(LogRecord::feedback(k as f64 * 0.01, 0.3, v, 0.5));
            k += 1;
        }
    }
    fs::write(dir.path().join("flat.csv"), format_log(&recs)).unwrap();
    let o = pendctl(dir.path(), &["identify", "gravity", "flat.csv"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("flat.csv"));
}

#[test]
fn design_report_and_table() {
    let dir = TempDir::new().unwrap();
    let o = pendctl(dir.path(), &["design"]);
    assert!(o.status.success());
    let report = stdout(&o);
    assert!(report.starts_with("# effective configuration\n"));
    assert!((value(&report, "time_constant") - 0.3717).abs() <= 0.001);

    let o = pendctl(dir.path(), &["design", "--table", "--out", "table.csv"]);
    assert!(o.status.success());
    let csv = fs::read_to_string(dir.path().join("table.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 5);
    let printed = [0.14, -0.30, -0.30, -2.69, -2.68];
    for (row, p) in rows.iter().zip(printed) {
        let e1: f64 = row[7].parse().unwrap();
        assert!((e1 - p).abs() <= 0.02, "{row:?}");
    }

    let o = pendctl(dir.path(), &["design", "--q11", "-1"]);
    assert_eq!(o.status.code(), Some(1));
    let o = pendctl(dir.path(), &["design", "--setpoint-theta", "1.0"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn simulate_modes() {
    let dir = TempDir::new().unwrap();
    let o = pendctl(dir.path(), &["simulate"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = stdout(&o);
    assert!(value(&report, "max_abs_u_control") <= 0.5);
    let sim = fs::read_to_string(dir.path().join("sim.csv")).unwrap();
    assert_eq!(sim.lines().count(), 2502);

    let o = pendctl(dir.path(), &["simulate", "--mode", "plant"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let plant = fs::read_to_string(dir.path().join("plant.csv")).unwrap();
    assert_eq!(plant.lines().count(), 502);
    assert_eq!(Trajectory::from_csv_str(&plant, "p").unwrap().last_time(), Some(5.0));
}

#[test]
fn seed_list_matches_single_runs() {
    let dir = TempDir::new().unwrap();
    let o = pendctl(dir.path(), &["simulate", "--seeds", "1,2,3", "--out", "run.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for seed in ["1", "2", "3"] {
        let single = format!("single{seed}.csv");
        let o = pendctl(dir.path(), &["simulate", "--seed", seed, "--out", &single]);
        assert!(o.status.success());
        assert_eq!(
            fs::read(dir.path().join(format!("run-seed{seed}.csv"))).unwrap(),
            fs::read(dir.path().join(single)).unwrap()
        );
    }
}

#[test]
fn divergence_writes_partial_run() {
    let dir = TempDir::new().unwrap();
    // weakest stabilizing gain against a steady one-sided disturbance
    let o = pendctl(
        dir.path(),
        &[
            "simulate", "--q11", "0", "--q22", "0", "--r11", "1", "--noise-lo", "7", "--noise-hi", "8",
            "--out", "fall.csv",
        ],
    );
    assert_eq!(o.status.code(), Some(3), "{}", stdout(&o));
    assert!(stderr(&o).contains("diverged"));
    assert!(!dir.path().join("fall.csv").exists());
    let partial = fs::read_to_string(dir.path().join("fall.csv.partial")).unwrap();
    let tr = Trajectory::from_csv_str(&partial, "partial").unwrap();
    assert!(!tr.is_empty() && tr.len() < 2501);
}

#[test]
fn compare_pipeline() {
    let dir = TempDir::new().unwrap();
    let run = |args: &[&str]| {
        let o = pendctl(dir.path(), args);
        assert!(o.status.success(), "{}", stderr(&o));
        stdout(&o)
    };
    run(&["simulate", "--seed", "5", "--out", "sim.csv"]);
    run(&["simulate", "--seed", "5", "--mode", "plant", "--control-rate", "500", "--out", "matched.csv"]);
    run(&[
        "simulate", "--seed", "5", "--mode", "plant", "--control-rate", "500", "--perturb-m-c", "0.05",
        "--out", "heavy.csv",
    ]);
    run(&["simulate", "--seed", "5", "--mode", "plant", "--out", "plant100.csv"]);

    let same = run(&["compare", "sim.csv", "sim.csv"]);
    for key in ["mean_dpos", "std_dpos", "mean_dvel", "std_dvel"] {
        assert_eq!(value(&same, key), 0.0);
    }
    assert_eq!(value(&same, "n"), 2501.0);

    let matched = run(&["compare", "sim.csv", "matched.csv"]);
    for key in ["mean_dpos", "std_dpos", "mean_dvel", "std_dvel"] {
        assert!(value(&matched, key).abs() <= 1e-9);
    }
    let heavy = run(&["compare", "sim.csv", "heavy.csv", "--out", "report.txt"]);
    assert!(value(&heavy, "std_dpos") > 0.0);
    assert!(value(&heavy, "std_dvel") > 0.0);
    assert_eq!(fs::read_to_string(dir.path().join("report.txt")).unwrap(), heavy);

    let coarse = run(&["compare", "sim.csv", "plant100.csv"]);
    assert_eq!(value(&coarse, "n"), 2501.0);

    // a shorter plant run cannot cover the simulation's time span
    run(&["simulate", "--mode", "plant", "--duration", "2", "--out", "short.csv"]);
    let o = pendctl(dir.path(), &["compare", "sim.csv", "short.csv"]);
    assert_eq!(o.status.code(), Some(2));
    let o = pendctl(dir.path(), &["compare", "sim.csv", "missing.csv"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn trajgen_outputs() {
    let dir = TempDir::new().unwrap();
    let o = pendctl(dir.path(), &["trajgen", "0", "10deg", "--out", "move.csv"]);
    assert!(o.status.success());
    let csv = fs::read_to_string(dir.path().join("move.csv")).unwrap();
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 89);
    assert!((rows[88][1] - 0.174533).abs() < 1e-6);
    assert_eq!(rows[88][1], 10f64.to_radians());
    assert!((rows[1][0] - 0.01).abs() < 1e-15);

    let o = pendctl(dir.path(), &["trajgen", "0.5", "0.5"]);
    assert_eq!(stdout(&o).lines().count(), 2);

    let o = pendctl(dir.path(), &["trajgen", "-20deg", "0", "--peak-velocity", "0.45"]);
    let peak = stdout(&o)
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().parse::<f64>().unwrap())
        .fold(0.0, f64::max);
    // 175 samples: the half sine never lands exactly on its crest
    assert!(peak <= 0.45 && peak > 0.4499, "{peak}");

    let o = pendctl(dir.path(), &["trajgen", "0", "1", "--increment", "0"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn config_file_precedence() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("run.cfg"), "# weights\nq11 = 1\nq22 = 0.1\nseed = 12\n").unwrap();
    let o = pendctl(dir.path(), &["design", "--config", "run.cfg", "--q22", "0.01"]);
    let report = stdout(&o);
    assert!(report.contains("# q11 = 1\n"));
    assert!(report.contains("# q22 = 0.01\n"));
    assert!(report.contains("# seed = 12\n"));

    fs::write(dir.path().join("broken.cfg"), "q11 100\n").unwrap();
    let o = pendctl(dir.path(), &["design", "--config", "broken.cfg"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("broken.cfg:1"));
}
