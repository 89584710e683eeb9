//! Per-time-unit observables, convergence detection and CSV export.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::evolution::{overall_utility, Strategy, STRATEGY_COUNT};
use crate::world::World;

/// One time-unit snapshot. Utilities are in ticks of on-air time.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub time_unit: u32,
    pub fractions: Vec<f64>,
    pub group_utilities: Vec<f64>,
    /// Absent while no dishonest vehicle is alive.
    pub overall_utility: Option<f64>,
    pub growth_rate: Option<f64>,
    pub living_dishonest: u32,
    pub removed_cumulative: u64,
    pub active_false_messages: u64,
}

impl MetricsRow {
    /// Fractions of the living population rather than of the nominal size.
    pub fn living_shares(&self) -> Vec<f64> {
        let mass: f64 = self.fractions.iter().sum();
        if mass > 0.0 {
            self.fractions.iter().map(|a| a / mass).collect()
        } else {
            vec![0.0; self.fractions.len()]
        }
    }
}

/// Row for the world's current state; `growth_rate` is filled in later by
/// [`fill_growth_rates`].
pub fn snapshot(world: &World, time_unit: u32) -> MetricsRow {
    let now = world.now();
    let fractions = world.population().fractions();
    let group_utilities = world.ledger().group_utilities(now);
    let overall = overall_utility(&fractions, &group_utilities).ok();
    MetricsRow {
        time_unit,
        fractions,
        group_utilities,
        overall_utility: overall,
        growth_rate: None,
        living_dishonest: world.population().living(),
        removed_cumulative: world.stats().removed_vehicles,
        active_false_messages: world.server().active_false_count() as u64,
    }
}

/// `rate(t) = (O(t) - O(t - w)) / w`, absent for `t < w` or where either end is absent.
pub fn growth_rate(series: &[Option<f64>], w: usize) -> Result<Vec<Option<f64>>> {
    if w == 0 {
        return Err(Error::config("growth_window", "must be at least 1"));
    }
    Ok((0..series.len())
        .map(|t| {
            if t < w {
                return None;
            }
            Some((series[t]? - series[t - w]?) / w as f64)
        })
        .collect())
}

pub fn fill_growth_rates(rows: &mut [MetricsRow], w: usize) -> Result<()> {
    let series: Vec<Option<f64>> = rows.iter().map(|r| r.overall_utility).collect();
    for (row, rate) in rows.iter_mut().zip(growth_rate(&series, w)?) {
        row.growth_rate = rate;
    }
    Ok(())
}

/// Mean defined growth rate over the final 10% of rows (at least one row).
pub fn steady_growth_rate(rows: &[MetricsRow]) -> Option<f64> {
    let tail = (rows.len() / 10).max(1).min(rows.len());
    let rates: Vec<f64> = rows[rows.len() - tail..]
        .iter()
        .filter_map(|r| r.growth_rate)
        .collect();
    if rates.is_empty() {
        None
    } else {
        Some(rates.iter().sum::<f64>() / rates.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub converged: bool,
    pub dominant_strategy: Option<Strategy>,
    /// First time unit of the first qualifying window.
    pub convergence_time: Option<u32>,
    pub dominance_threshold: f64,
}

impl ConvergenceReport {
    pub fn render(&self) -> String {
        let opt = |v: Option<String>| v.unwrap_or_default();
        format!(
            "converged = {}\ndominant_strategy = {}\nconvergence_time = {}\ndominance_threshold = {}\n",
            self.converged,
            opt(self.dominant_strategy.map(|s| s.to_string())),
            opt(self.convergence_time.map(|t| t.to_string())),
            self.dominance_threshold
        )
    }
}

fn dominant(row: &MetricsRow, threshold: f64) -> Option<usize> {
    if row.living_dishonest == 0 {
        return None;
    }
    row.living_shares().iter().position(|&s| s >= threshold)
}

/// Converged iff one strategy holds at least `threshold` of the living
/// population in `horizon` consecutive rows.
pub fn detect_convergence(
    rows: &[MetricsRow],
    threshold: f64,
    horizon: usize,
) -> ConvergenceReport {
    let mut run_start = 0usize;
    let mut current: Option<usize> = None;
    let mut found = None;
    for (i, row) in rows.iter().enumerate() {
        let d = dominant(row, threshold);
        if d != current || d.is_none() {
            run_start = i;
            current = d;
        }
        if let Some(s) = current {
            if i + 1 - run_start >= horizon {
                found = Some((s, rows[run_start].time_unit));
                break;
            }
        }
    }
    ConvergenceReport {
        converged: found.is_some(),
        dominant_strategy: found.map(|(s, _)| Strategy::from_index(s)),
        convergence_time: found.map(|(_, t)| t),
        dominance_threshold: threshold,
    }
}

fn opt_num(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub const POPULATION_HEADER: &str = "time_unit,strategy,fraction,group_utility";
pub const SUMMARY_HEADER: &str =
    "time_unit,overall_utility,growth_rate,living_dishonest,removed_cumulative,active_false_messages";

pub fn population_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::from(POPULATION_HEADER);
    out.push('\n');
    for r in rows {
        for (i, (&a, &u)) in r.fractions.iter().zip(&r.group_utilities).enumerate() {
            if a > 0.0 || u > 0.0 {
                let _ = writeln!(out, "{},{},{},{}", r.time_unit, i + 1, a, u);
            }
        }
    }
    out
}

pub fn summary_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.time_unit,
            opt_num(r.overall_utility),
            opt_num(r.growth_rate),
            r.living_dishonest,
            r.removed_cumulative,
            r.active_false_messages
        );
    }
    out
}

pub fn trajectory_csv(states: &[Vec<f64>]) -> String {
    let k = states.first().map_or(0, Vec::len);
    let mut out = String::from("step");
    for i in 1..=k {
        let _ = write!(out, ",x_{i}");
    }
    out.push('\n');
    for (step, x) in states.iter().enumerate() {
        let _ = write!(out, "{step}");
        for v in x {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes `population.csv` and `summary.csv` into `dir`.
pub fn export_csv(rows: &[MetricsRow], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_file(&dir.join("population.csv"), &population_csv(rows))?;
    write_file(&dir.join("summary.csv"), &summary_csv(rows))
}

fn field<T: std::str::FromStr>(path: &Path, line: usize, tok: Option<&str>) -> Result<T> {
    let tok = tok.unwrap_or("");
    tok.parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        reason: format!("bad field `{tok}`"),
    })
}

fn opt_field(path: &Path, line: usize, tok: Option<&str>) -> Result<Option<f64>> {
    match tok {
        Some("") => Ok(None),
        t => field(path, line, t).map(Some),
    }
}

/// Reads back the files written by [`export_csv`].
pub fn read_csv(dir: &Path) -> Result<Vec<MetricsRow>> {
    let summary_path = dir.join("summary.csv");
    let summary = fs::read_to_string(&summary_path).map_err(|e| Error::io(&summary_path, e))?;
    let mut rows = Vec::new();
    for (n, line) in summary.lines().enumerate().skip(1) {
        let mut it = line.split(',');
        let p = &summary_path;
        rows.push(MetricsRow {
            time_unit: field(p, n + 1, it.next())?,
            overall_utility: opt_field(p, n + 1, it.next())?,
            growth_rate: opt_field(p, n + 1, it.next())?,
            living_dishonest: field(p, n + 1, it.next())?,
            removed_cumulative: field(p, n + 1, it.next())?,
            active_false_messages: field(p, n + 1, it.next())?,
            fractions: vec![0.0; STRATEGY_COUNT],
            group_utilities: vec![0.0; STRATEGY_COUNT],
        });
    }
    let pop_path = dir.join("population.csv");
    let pop = fs::read_to_string(&pop_path).map_err(|e| Error::io(&pop_path, e))?;
    let mut cursor = 0usize;
    for (n, line) in pop.lines().enumerate().skip(1) {
        let mut it = line.split(',');
        let p = &pop_path;
        let t: u32 = field(p, n + 1, it.next())?;
        let s: usize = field(p, n + 1, it.next())?;
        let a: f64 = field(p, n + 1, it.next())?;
        let u: f64 = field(p, n + 1, it.next())?;
        while cursor < rows.len() && rows[cursor].time_unit != t {
            cursor += 1;
        }
        let bad = |reason: String| Error::Parse {
            path: p.to_path_buf(),
            line: n + 1,
            reason,
        };
        let row = rows
            .get_mut(cursor)
            .ok_or_else(|| bad(format!("time unit {t} missing from summary")))?;
        if !(1..=STRATEGY_COUNT).contains(&s) {
            return Err(bad(format!("strategy {s} out of range")));
        }
        row.fractions[s - 1] = a;
        row.group_utilities[s - 1] = u;
    }
    Ok(rows)
}
