use std::fs;
use std::path::Path;
use std::process::Command;

const SMALL: &str = "grid_rows = 5\ngrid_cols = 5\nn_honest = 300\nn_dishonest = 20\nstrategy_min = 81\n\
                     total_time_units = 15\ndetection_prob = 0.001\ngrowth_window = 3\nconvergence_horizon = 5\n";

fn repsim(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_repsim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(path: &Path, text: &str) {
    fs::write(path, text).unwrap();
}

#[test]
fn simulate_writes_artifacts_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.cfg");
    write(&cfg, SMALL);
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let res = repsim(&[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            "9",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(
            res.status.success(),
            "{}",
            String::from_utf8_lossy(&res.stderr)
        );
        let pop = fs::read_to_string(out.join("population.csv")).unwrap();
        let sum = fs::read_to_string(out.join("summary.csv")).unwrap();
        assert!(out.join("convergence.txt").exists());
        assert_eq!(sum.lines().count(), 17);
        assert!(pop.starts_with("time_unit,strategy,fraction,group_utility\n"));
        outputs.push((pop, sum));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn static_mode_keeps_strategy_multiset_at_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("static.cfg");
    write(
        &cfg,
        &format!("{SMALL}mode = static\ndetection_prob = 0.05\n"),
    );
    let out = dir.path().join("out");
    let res = repsim(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success());
    let rows = repsim::metrics::read_csv(&out).unwrap();
    assert!(rows.last().unwrap().removed_cumulative > 0);
    // A snapshot may fall between a removal and its batch; nothing new ever appears.
    let initial = &rows[0].fractions;
    for r in &rows {
        for (a, b) in r.fractions.iter().zip(initial) {
            assert!(a <= b, "a strategy outside the initial multiset appeared");
        }
    }
}

#[test]
fn sweep_writes_one_row_per_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.cfg");
    write(&cfg, SMALL);
    let out = dir.path().join("sweep");
    let res = repsim(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--values",
        "1,5,10",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let summary = fs::read_to_string(out.join("sweep_summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(
        lines[0],
        "param_value,seed,dominant_strategy,convergence_time_units,steady_growth_rate"
    );
    assert_eq!(lines.len(), 4);
    assert!(out.join("init_reputation_10/seed_0/summary.csv").exists());
}

#[test]
fn sweep_child_matches_isolated_rerun() {
    // A sweep child re-run alone with its derived seed yields identical files.
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("small.cfg");
    write(&cfg_path, SMALL);
    let out = dir.path().join("sweep");
    let res = repsim(&[
        "sweep",
        "--config",
        cfg_path.to_str().unwrap(),
        "--values",
        "1,5",
        "--seeds",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success());
    let base = repsim::config::parse_config(&cfg_path).unwrap();
    let spec = repsim::SweepSpec::new(vec![1.0, 5.0], 2).unwrap();
    let child = repsim::experiment::sweep_child(
        &repsim::SimConfig {
            out_dir: out.clone(),
            ..base
        },
        &spec,
        3,
    )
    .unwrap();
    let alone = dir.path().join("alone");
    let solo = repsim::SimConfig {
        out_dir: alone.clone(),
        ..child.clone()
    };
    repsim::run_simulate(&solo, child.seed).unwrap();
    for f in ["population.csv", "summary.csv"] {
        assert_eq!(
            fs::read(child.out_dir.join(f)).unwrap(),
            fs::read(alone.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn replicate_writes_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let payoffs = dir.path().join("u.txt");
    write(&payoffs, "1\n2\n3\n");
    let out = dir.path().join("rep");
    let res = repsim(&[
        "replicate",
        "--payoffs",
        payoffs.to_str().unwrap(),
        "--x0",
        "0.3333333333333333,0.3333333333333333,0.3333333333333334",
        "--dt",
        "0.01",
        "--steps",
        "1000",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let text = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "step,x_1,x_2,x_3");
    assert_eq!(lines.len(), 1002);
    let last: Vec<f64> = lines[1001]
        .split(',')
        .skip(1)
        .map(|v| v.parse().unwrap())
        .collect();
    assert!((last[2] - 1.0).abs() < 1e-2, "{last:?}");
    for line in &lines[1..] {
        let x: Vec<f64> = line
            .split(',')
            .skip(1)
            .map(|v| v.parse().unwrap())
            .collect();
        assert!(x.iter().all(|&v| v >= 0.0));
        assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    let vertex = dir.path().join("vertex");
    let res = repsim(&[
        "replicate",
        "--payoffs",
        payoffs.to_str().unwrap(),
        "--x0",
        "0,1,0",
        "--dt",
        "0.1",
        "--steps",
        "50",
        "--out",
        vertex.to_str().unwrap(),
    ]);
    assert!(res.status.success());
    let text = fs::read_to_string(vertex.join("trajectory.csv")).unwrap();
    assert!(text.lines().skip(1).all(|l| l.ends_with(",0,1,0")));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cfg");
    write(&bad, "tick_s = 7\n");
    let res = repsim(&["simulate", "--config", bad.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("tick_s"));

    let missing = dir.path().join("nope.cfg");
    let res = repsim(&["simulate", "--config", missing.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(3));

    let payoffs = dir.path().join("u.txt");
    write(&payoffs, "1\n2\n");
    let res = repsim(&[
        "replicate",
        "--payoffs",
        payoffs.to_str().unwrap(),
        "--x0",
        "0.7,0.7",
        "--dt",
        "0.1",
        "--steps",
        "5",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(2));

    // A child whose output directory cannot be created fails the sweep with code 4.
    let good = dir.path().join("good.cfg");
    let blocker = dir.path().join("blocker");
    write(&blocker, "a file, not a directory");
    write(&good, &format!("{SMALL}total_time_units = 2\n"));
    let res = repsim(&[
        "sweep",
        "--config",
        good.to_str().unwrap(),
        "--values",
        "1",
        "--out",
        blocker.join("sub").to_str().unwrap(),
    ]);
    assert_eq!(
        res.status.code(),
        Some(4),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );

    let res = repsim(&["frobnicate"]);
    assert_eq!(res.status.code(), Some(2));
}
