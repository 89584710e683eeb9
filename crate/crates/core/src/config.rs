//! Run configuration.
//!
//! Files are flat `key = value` lines; `#` starts a comment. Any key left out
//! keeps its default, and the defaults describe the full-size experiment.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::evolution::{EvolutionConfig, Mode, Strategy};
use crate::trust::{PenaltyMethod, TrustConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub grid_rows: u32,
    pub grid_cols: u32,
    pub block_len_m: f64,
    pub speed_kmh: f64,
    pub tick_s: f64,
    pub time_unit_s: f64,
    pub n_honest: u32,
    pub n_dishonest: u32,
    pub init_reputation: f64,
    pub penalty_method: PenaltyMethod,
    pub penalty_param: f64,
    pub epsilon: f64,
    pub mode: Mode,
    pub replacement_period_units: f64,
    pub sensing_radius_m: f64,
    pub detection_prob: f64,
    pub event_rate: f64,
    pub event_duration_units: f64,
    pub strategy_min: u32,
    pub strategy_max: u32,
    pub total_time_units: u32,
    pub growth_window: u32,
    pub convergence_threshold: f64,
    pub convergence_horizon: u32,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            grid_rows: 87,
            grid_cols: 87,
            block_len_m: 1000.0,
            speed_kmh: 36.0,
            tick_s: 1.0,
            time_unit_s: 5000.0,
            n_honest: 99_900,
            n_dishonest: 100,
            init_reputation: 1.0,
            penalty_method: PenaltyMethod::Linear,
            penalty_param: 1.0,
            epsilon: 1.0,
            mode: Mode::Evolve,
            replacement_period_units: 0.1,
            sensing_radius_m: 1000.0,
            detection_prob: 3.0e-5,
            event_rate: 0.0,
            event_duration_units: 1.0,
            strategy_min: 1,
            strategy_max: 100,
            total_time_units: 400,
            growth_window: 10,
            convergence_threshold: 0.9,
            convergence_horizon: 100,
            seed: 1,
            out_dir: PathBuf::from("out"),
        }
    }
}

/// Keys in file order.
pub const KEYS: &[&str] = &[
    "grid_rows",
    "grid_cols",
    "block_len_m",
    "speed_kmh",
    "tick_s",
    "time_unit_s",
    "n_honest",
    "n_dishonest",
    "init_reputation",
    "penalty_method",
    "penalty_param",
    "epsilon",
    "mode",
    "replacement_period_units",
    "sensing_radius_m",
    "detection_prob",
    "event_rate",
    "event_duration_units",
    "strategy_min",
    "strategy_max",
    "total_time_units",
    "growth_window",
    "convergence_threshold",
    "convergence_horizon",
    "seed",
    "out_dir",
];

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(key, format!("cannot parse `{value}`")))
}

impl SimConfig {
    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "grid_rows" => self.grid_rows = num(key, value)?,
            "grid_cols" => self.grid_cols = num(key, value)?,
            "block_len_m" => self.block_len_m = num(key, value)?,
            "speed_kmh" => self.speed_kmh = num(key, value)?,
            "tick_s" => self.tick_s = num(key, value)?,
            "time_unit_s" => self.time_unit_s = num(key, value)?,
            "n_honest" => self.n_honest = num(key, value)?,
            "n_dishonest" => self.n_dishonest = num(key, value)?,
            "init_reputation" => self.init_reputation = num(key, value)?,
            "penalty_method" => {
                self.penalty_method = value.parse().map_err(|e| Error::config(key, e))?
            }
            "penalty_param" => self.penalty_param = num(key, value)?,
            "epsilon" => self.epsilon = num(key, value)?,
            "mode" => self.mode = value.parse().map_err(|e| Error::config(key, e))?,
            "replacement_period_units" => self.replacement_period_units = num(key, value)?,
            "sensing_radius_m" => self.sensing_radius_m = num(key, value)?,
            "detection_prob" => self.detection_prob = num(key, value)?,
            "event_rate" => self.event_rate = num(key, value)?,
            "event_duration_units" => self.event_duration_units = num(key, value)?,
            "strategy_min" => self.strategy_min = num(key, value)?,
            "strategy_max" => self.strategy_max = num(key, value)?,
            "total_time_units" => self.total_time_units = num(key, value)?,
            "growth_window" => self.growth_window = num(key, value)?,
            "convergence_threshold" => self.convergence_threshold = num(key, value)?,
            "convergence_horizon" => self.convergence_horizon = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            other => return Err(Error::config(other, "unknown key")),
        }
        Ok(())
    }

    /// Parses config text over the defaults and validates the result.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut cfg = SimConfig::default();
        for raw in text.lines() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::config(line, "expected `key = value`"));
            };
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let _ = writeln!(out, "{key} = {}", self.get(key));
        }
        out
    }

    fn get(&self, key: &str) -> String {
        match key {
            "grid_rows" => self.grid_rows.to_string(),
            "grid_cols" => self.grid_cols.to_string(),
            "block_len_m" => self.block_len_m.to_string(),
            "speed_kmh" => self.speed_kmh.to_string(),
            "tick_s" => self.tick_s.to_string(),
            "time_unit_s" => self.time_unit_s.to_string(),
            "n_honest" => self.n_honest.to_string(),
            "n_dishonest" => self.n_dishonest.to_string(),
            "init_reputation" => self.init_reputation.to_string(),
            "penalty_method" => self.penalty_method.to_string(),
            "penalty_param" => self.penalty_param.to_string(),
            "epsilon" => self.epsilon.to_string(),
            "mode" => self.mode.to_string(),
            "replacement_period_units" => self.replacement_period_units.to_string(),
            "sensing_radius_m" => self.sensing_radius_m.to_string(),
            "detection_prob" => self.detection_prob.to_string(),
            "event_rate" => self.event_rate.to_string(),
            "event_duration_units" => self.event_duration_units.to_string(),
            "strategy_min" => self.strategy_min.to_string(),
            "strategy_max" => self.strategy_max.to_string(),
            "total_time_units" => self.total_time_units.to_string(),
            "growth_window" => self.growth_window.to_string(),
            "convergence_threshold" => self.convergence_threshold.to_string(),
            "convergence_horizon" => self.convergence_horizon.to_string(),
            "seed" => self.seed.to_string(),
            "out_dir" => self.out_dir.display().to_string(),
            _ => unreachable!("not a config key: {key}"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |key: &str, reason: String| Err(Error::config(key, reason));
        if self.grid_rows < 2 {
            return fail("grid_rows", format!("must be >= 2, got {}", self.grid_rows));
        }
        if self.grid_cols < 2 {
            return fail("grid_cols", format!("must be >= 2, got {}", self.grid_cols));
        }
        for (key, v) in [
            ("block_len_m", self.block_len_m),
            ("speed_kmh", self.speed_kmh),
            ("tick_s", self.tick_s),
            ("time_unit_s", self.time_unit_s),
            ("replacement_period_units", self.replacement_period_units),
            ("event_duration_units", self.event_duration_units),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return fail(key, format!("must be > 0, got {v}"));
            }
        }
        if self.n_honest == 0 {
            return fail("n_honest", "must be positive".into());
        }
        if self.n_dishonest == 0 {
            return fail("n_dishonest", "must be positive".into());
        }
        if self.total_time_units == 0 {
            return fail("total_time_units", "must be positive".into());
        }
        let units = self.time_unit_s / self.tick_s;
        if units.fract() != 0.0 {
            return fail(
                "tick_s",
                format!(
                    "{} does not divide time_unit_s = {}",
                    self.tick_s, self.time_unit_s
                ),
            );
        }
        if self.step_m() > self.block_len_m {
            return fail(
                "speed_kmh",
                format!(
                    "{} m per tick overshoots a {} m block",
                    self.step_m(),
                    self.block_len_m
                ),
            );
        }
        let period = self.replacement_period_units * units;
        if period.fract() != 0.0 || period < 1.0 {
            return fail(
                "replacement_period_units",
                format!(
                    "{} units is not a whole number of ticks",
                    self.replacement_period_units
                ),
            );
        }
        let duration = self.event_duration_units * units;
        if duration.fract() != 0.0 {
            return fail(
                "event_duration_units",
                format!(
                    "{} units is not a whole number of ticks",
                    self.event_duration_units
                ),
            );
        }
        if !(self.sensing_radius_m >= 0.0) {
            return fail(
                "sensing_radius_m",
                format!("must be >= 0, got {}", self.sensing_radius_m),
            );
        }
        if !(0.0..=1.0).contains(&self.detection_prob) {
            return fail(
                "detection_prob",
                format!("must lie in [0, 1], got {}", self.detection_prob),
            );
        }
        if !(self.event_rate >= 0.0) || self.event_rate * self.tick_s / self.time_unit_s > 1.0 {
            return fail(
                "event_rate",
                format!("must lie in [0, one per tick], got {}", self.event_rate),
            );
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return fail(
                "epsilon",
                format!("must lie in [0, 1], got {}", self.epsilon),
            );
        }
        Strategy::new(self.strategy_min)
            .map_err(|e| Error::config("strategy_min", e.to_string()))?;
        let top = Strategy::new(self.strategy_max)
            .map_err(|e| Error::config("strategy_max", e.to_string()))?;
        if self.strategy_min > self.strategy_max {
            return fail("strategy_min", "must not exceed strategy_max".into());
        }
        if top.fr() as f64 * self.tick_s / self.time_unit_s > 1.0 {
            return fail(
                "tick_s",
                format!("too long for {} submissions per unit", top.fr()),
            );
        }
        self.trust().validate()?;
        if self.growth_window == 0 {
            return fail("growth_window", "must be at least 1".into());
        }
        if !(self.convergence_threshold > 0.5 && self.convergence_threshold <= 1.0) {
            return fail(
                "convergence_threshold",
                format!("must lie in (0.5, 1], got {}", self.convergence_threshold),
            );
        }
        if self.convergence_horizon == 0 {
            return fail("convergence_horizon", "must be at least 1".into());
        }
        Ok(())
    }

    pub fn ticks_per_unit(&self) -> u64 {
        (self.time_unit_s / self.tick_s) as u64
    }

    pub fn total_ticks(&self) -> u64 {
        self.ticks_per_unit() * self.total_time_units as u64
    }

    pub fn speed_ms(&self) -> f64 {
        self.speed_kmh / 3.6
    }

    /// Distance covered per tick.
    pub fn step_m(&self) -> f64 {
        self.speed_ms() * self.tick_s
    }

    pub fn replacement_period_ticks(&self) -> u64 {
        (self.replacement_period_units * self.ticks_per_unit() as f64) as u64
    }

    pub fn event_duration_ticks(&self) -> u64 {
        (self.event_duration_units * self.ticks_per_unit() as f64) as u64
    }

    pub fn trust(&self) -> TrustConfig {
        TrustConfig {
            init_reputation: self.init_reputation,
            penalty_method: self.penalty_method,
            penalty_param: self.penalty_param,
        }
    }

    pub fn evolution(&self) -> EvolutionConfig {
        EvolutionConfig {
            epsilon: self.epsilon,
            mode: self.mode,
            replacement_period: self.replacement_period_ticks(),
            pool: (
                Strategy::new(self.strategy_min).expect("validated"),
                Strategy::new(self.strategy_max).expect("validated"),
            ),
        }
    }

    /// Initial strategies: the pool dealt out round-robin, one vehicle each.
    pub fn initial_strategies(&self) -> Vec<Strategy> {
        let span = self.strategy_max - self.strategy_min + 1;
        (0..self.n_dishonest)
            .map(|k| Strategy::new(self.strategy_min + k % span).expect("validated"))
            .collect()
    }
}

pub fn parse_config(path: &Path) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    SimConfig::parse_str(&text)
}

/// Reduced-size preset: a 20 x 20 grid with the honest population scaled to keep
/// the per-segment density of the full-size network. Also shipped as `desk.cfg`.
pub fn desk_preset() -> SimConfig {
    SimConfig::parse_str(DESK_CFG).expect("desk preset is valid")
}

pub const DESK_CFG: &str = include_str!("../desk.cfg");

/// Sweep over one trust-scheme parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub parameter: String,
    pub values: Vec<f64>,
    pub seeds: u32,
}

impl SweepSpec {
    pub fn new(values: Vec<f64>, seeds: u32) -> Result<Self> {
        let spec = SweepSpec {
            parameter: "init_reputation".into(),
            values,
            seeds,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.parameter != "init_reputation" {
            return Err(Error::config(
                "parameter",
                format!("cannot sweep `{}`", self.parameter),
            ));
        }
        if self.values.is_empty() {
            return Err(Error::config("values", "need at least one value"));
        }
        if self.seeds == 0 {
            return Err(Error::config("seeds", "need at least one seed"));
        }
        Ok(())
    }

    /// Parses `1,5,10`.
    pub fn parse_values(list: &str) -> Result<Vec<f64>> {
        list.split(',')
            .map(|v| num::<f64>("values", v.trim()))
            .collect()
    }
}
