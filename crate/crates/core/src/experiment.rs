//! Single runs, parameter sweeps and the standalone replicator integrator.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::config::{SimConfig, SweepSpec};
use crate::error::{Error, Result};
use crate::evolution::Mode;
use crate::metrics::{
    detect_convergence, export_csv, fill_growth_rates, snapshot, steady_growth_rate,
    trajectory_csv, write_file, ConvergenceReport, MetricsRow,
};
use crate::replicator::{
    check_simplex, integrate_replicator, PayoffTable, Trajectory, SIMPLEX_TOLERANCE,
};
use crate::rng::child_seed;
use crate::world::World;

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub rows: Vec<MetricsRow>,
    pub report: ConvergenceReport,
}

impl RunOutcome {
    pub fn steady_growth_rate(&self) -> Option<f64> {
        steady_growth_rate(&self.rows)
    }

    pub fn final_overall_utility(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.overall_utility)
    }
}

/// Runs the simulation in memory: one row at time unit 0 and one per unit boundary.
pub fn simulate(cfg: &SimConfig) -> Result<RunOutcome> {
    let mut world = World::new(cfg)?;
    let per_unit = cfg.ticks_per_unit();
    let mut rows = Vec::with_capacity(cfg.total_time_units as usize + 1);
    rows.push(snapshot(&world, 0));
    for unit in 1..=cfg.total_time_units {
        world.run_until(unit as u64 * per_unit)?;
        rows.push(snapshot(&world, unit));
    }
    fill_growth_rates(&mut rows, cfg.growth_window as usize)?;
    let report = detect_convergence(
        &rows,
        cfg.convergence_threshold,
        cfg.convergence_horizon as usize,
    );
    Ok(RunOutcome { rows, report })
}

/// Runs with `seed` and writes `population.csv`, `summary.csv`,
/// `convergence.txt` and the effective `config.cfg` into `cfg.out_dir`.
pub fn run_simulate(cfg: &SimConfig, seed: u64) -> Result<RunOutcome> {
    let cfg = SimConfig {
        seed,
        ..cfg.clone()
    };
    let out = simulate(&cfg)?;
    let dir = &cfg.out_dir;
    export_csv(&out.rows, dir)?;
    write_file(&dir.join("convergence.txt"), &out.report.render())?;
    write_file(&dir.join("config.cfg"), &cfg.serialize())?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub param_value: f64,
    pub seed: u64,
    pub dominant_strategy: Option<u32>,
    pub convergence_time_units: Option<u32>,
    pub steady_growth_rate: Option<f64>,
}

pub const SWEEP_HEADER: &str =
    "param_value,seed,dominant_strategy,convergence_time_units,steady_growth_rate";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    let opt = |v: Option<String>| v.unwrap_or_default();
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.param_value,
            r.seed,
            opt(r.dominant_strategy.map(|v| v.to_string())),
            opt(r.convergence_time_units.map(|v| v.to_string())),
            opt(r.steady_growth_rate.map(|v| v.to_string())),
        );
    }
    out
}

/// Child configuration `r` of a sweep: value `values[r / seeds]`, seed derived
/// from the master seed and `r`, output under `out_dir/<parameter>_<value>/seed_<k>`.
pub fn sweep_child(cfg: &SimConfig, spec: &SweepSpec, r: usize) -> Result<SimConfig> {
    let seeds = spec.seeds as usize;
    let value = spec.values[r / seeds];
    let mut child = cfg.clone();
    child.set(&spec.parameter, &value.to_string())?;
    child.seed = child_seed(cfg.seed, r as u64);
    child.out_dir = cfg
        .out_dir
        .join(format!("{}_{}", spec.parameter, value))
        .join(format!("seed_{}", r % seeds));
    child.validate()?;
    Ok(child)
}

/// One run per (value, seed), in parallel. Writes every run's artifacts and
/// `sweep_summary.csv` under `cfg.out_dir`. If a child fails, the summary
/// still lists the runs that finished and the first failure is returned.
pub fn run_sweep(cfg: &SimConfig, spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let n = spec.values.len() * spec.seeds as usize;
    let children = (0..n)
        .map(|r| sweep_child(cfg, spec, r))
        .collect::<Result<Vec<_>>>()?;
    let results: Vec<Result<SweepRow>> = children
        .par_iter()
        .map(|child| {
            let out = run_simulate(child, child.seed).map_err(|e| Error::ChildRun {
                label: child.out_dir.display().to_string(),
                source: Box::new(e),
            })?;
            let value = child.init_reputation;
            Ok(SweepRow {
                param_value: value,
                seed: child.seed,
                dominant_strategy: out.report.dominant_strategy.map(|s| s.fr()),
                convergence_time_units: out.report.convergence_time,
                steady_growth_rate: out.steady_growth_rate(),
            })
        })
        .collect();
    let mut rows = Vec::new();
    let mut first_err = None;
    for r in results {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    let written = fs::create_dir_all(&cfg.out_dir)
        .map_err(|e| Error::io(&cfg.out_dir, e))
        .and_then(|()| write_file(&cfg.out_dir.join("sweep_summary.csv"), &sweep_csv(&rows)));
    match first_err {
        Some(e) => Err(e),
        None => written.map(|()| rows),
    }
}

/// Final overall utility of an evolving run and of its static twin.
pub fn compare_modes(cfg: &SimConfig) -> Result<(RunOutcome, RunOutcome)> {
    let evolve = SimConfig {
        mode: Mode::Evolve,
        ..cfg.clone()
    };
    let stat = SimConfig {
        mode: Mode::Static,
        ..cfg.clone()
    };
    let (a, b) = rayon::join(|| simulate(&evolve), || simulate(&stat));
    Ok((a?, b?))
}

/// Parses `0.2,0.5,0.3`.
pub fn parse_point(list: &str) -> Result<Vec<f64>> {
    list.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::config("x0", format!("`{t}` is not a number")))
        })
        .collect()
}

/// Integrates the replicator dynamics for a payoff table and writes `trajectory.csv` into `out`.
pub fn run_replicate(
    payoffs: &Path,
    x0: &[f64],
    dt: f64,
    steps: usize,
    out: &Path,
) -> Result<Trajectory> {
    let table = PayoffTable::read(payoffs)?;
    if table.dim() != x0.len() {
        return Err(Error::config(
            "x0",
            format!(
                "{} coordinates for a {}-strategy payoff table",
                x0.len(),
                table.dim()
            ),
        ));
    }
    check_simplex(x0, SIMPLEX_TOLERANCE).map_err(|e| Error::config("x0", e.to_string()))?;
    let traj = integrate_replicator(x0, |x| table.eval(x), dt, steps)?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write_file(&out.join("trajectory.csv"), &trajectory_csv(&traj.states))?;
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SimConfig {
        SimConfig::parse_str(
            "grid_rows = 5\ngrid_cols = 5\nn_honest = 300\nn_dishonest = 20\nstrategy_min = 81\n\
             total_time_units = 12\ndetection_prob = 0.001\ngrowth_window = 3\nconvergence_horizon = 4\n",
        )
        .unwrap()
    }

    #[test]
    fn one_row_per_unit() {
        let out = simulate(&small()).unwrap();
        assert_eq!(out.rows.len(), 13);
        assert_eq!(out.rows[0].time_unit, 0);
        assert!(out.rows[0].group_utilities.iter().all(|&u| u == 0.0));
        assert!(out.rows[..3].iter().all(|r| r.growth_rate.is_none()));
        assert!(out.rows[3..].iter().all(|r| r.growth_rate.is_some()));
    }

    #[test]
    fn sweep_children_are_distinct_and_stable() {
        let cfg = small();
        let spec = SweepSpec::new(vec![1.0, 5.0], 2).unwrap();
        let kids: Vec<_> = (0..4)
            .map(|r| sweep_child(&cfg, &spec, r).unwrap())
            .collect();
        assert_eq!(kids[0].init_reputation, 1.0);
        assert_eq!(kids[3].init_reputation, 5.0);
        let mut seeds: Vec<u64> = kids.iter().map(|k| k.seed).collect();
        seeds.dedup();
        assert_eq!(seeds.len(), 4);
        assert_eq!(kids[2].seed, child_seed(cfg.seed, 2));
        assert!(kids[1].out_dir.ends_with("init_reputation_1/seed_1"));
    }

    #[test]
    fn replicate_rejects_off_simplex_start() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("u.txt");
        fs::write(&p, "1\n2\n3\n").unwrap();
        let err = run_replicate(&p, &[0.5, 0.5, 0.5], 0.1, 10, dir.path()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let err = run_replicate(&p, &[0.5, 0.5], 0.1, 10, dir.path()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
