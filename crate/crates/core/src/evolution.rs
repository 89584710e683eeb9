//! The attackers' evolutionary game.
//!
//! A strategy is a deception intensity: the mean number of false messages a
//! dishonest vehicle submits per time unit. Group utility is the summed
//! on-air duration of every false message a strategy's vehicles ever
//! submitted. When a dishonest vehicle is removed, its replacement picks a
//! strategy whose group utility beats the population's presence-weighted mean.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::road::VehicleId;

pub const STRATEGY_MIN: u8 = 1;
pub const STRATEGY_MAX: u8 = 100;
/// Size of the strategy space.
pub const STRATEGY_COUNT: usize = STRATEGY_MAX as usize;

/// Deception intensity, in false messages per time unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Strategy(u8);

impl Strategy {
    pub fn new(fr: u32) -> Result<Self> {
        if (STRATEGY_MIN as u32..=STRATEGY_MAX as u32).contains(&fr) {
            Ok(Strategy(fr as u8))
        } else {
            Err(Error::Contract(format!(
                "deception intensity {fr} outside {STRATEGY_MIN}..={STRATEGY_MAX}"
            )))
        }
    }

    pub fn fr(self) -> u32 {
        self.0 as u32
    }

    /// Zero-based position in strategy-indexed vectors.
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn from_index(i: usize) -> Strategy {
        assert!(i < STRATEGY_COUNT, "strategy index {i} out of range");
        Strategy(i as u8 + 1)
    }

    pub fn all() -> impl Iterator<Item = Strategy> {
        (STRATEGY_MIN..=STRATEGY_MAX).map(Strategy)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Per-tick submission probability `fr * tick_len / time_unit`.
pub fn submit_probability(s: Strategy, tick_len: f64, time_unit: f64) -> Result<f64> {
    let p = s.fr() as f64 * tick_len / time_unit;
    if p > 1.0 {
        return Err(Error::config(
            "tick_s",
            format!(
                "tick of {tick_len}s is too long for {} messages per {time_unit}s",
                s.fr()
            ),
        ));
    }
    Ok(p)
}

/// One Bernoulli draw: does a vehicle playing `s` submit a false message this tick?
pub fn should_submit<R: Rng + ?Sized>(
    s: Strategy,
    tick_len: f64,
    time_unit: f64,
    rng: &mut R,
) -> Result<bool> {
    let p = submit_probability(s, tick_len, time_unit)?;
    Ok(rng.random_bool(p))
}

/// Living dishonest vehicles per strategy, against the nominal population size.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationState {
    counts: Vec<u32>,
    living: u32,
    nominal_n: u32,
}

impl PopulationState {
    pub fn new(nominal_n: u32) -> Self {
        PopulationState {
            counts: vec![0; STRATEGY_COUNT],
            living: 0,
            nominal_n,
        }
    }

    pub fn add(&mut self, s: Strategy) {
        self.counts[s.index()] += 1;
        self.living += 1;
    }

    pub fn remove(&mut self, s: Strategy) {
        let c = &mut self.counts[s.index()];
        assert!(*c > 0, "removing strategy {s} with no living members");
        *c -= 1;
        self.living -= 1;
    }

    pub fn count(&self, s: Strategy) -> u32 {
        self.counts[s.index()]
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn living(&self) -> u32 {
        self.living
    }

    pub fn nominal_n(&self) -> u32 {
        self.nominal_n
    }

    /// `a_i = count_i / N`.
    pub fn fractions(&self) -> Vec<f64> {
        let n = self.nominal_n as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }
}

/// Cumulative on-air time of false messages, per strategy and per vehicle.
///
/// Live messages count at their current age, removed ones are frozen at
/// `removed_at - submitted_at`. Each bucket keeps the frozen total, the number
/// of live messages and the sum of their submission ticks, so a query at any
/// tick is O(1) and exact.
#[derive(Debug, Clone, Default)]
pub struct UtilityLedger {
    groups: Vec<Bucket>,
    vehicles: Vec<Bucket>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Bucket {
    frozen: u64,
    live: u64,
    live_submit_sum: u64,
}

impl Bucket {
    fn at(&self, now: u64) -> u64 {
        self.frozen + self.live * now - self.live_submit_sum
    }
}

impl UtilityLedger {
    pub fn new() -> Self {
        UtilityLedger {
            groups: vec![Bucket::default(); STRATEGY_COUNT],
            vehicles: Vec::new(),
        }
    }

    fn vehicle_mut(&mut self, v: VehicleId) -> &mut Bucket {
        let i = v.0 as usize;
        if i >= self.vehicles.len() {
            self.vehicles.resize(i + 1, Bucket::default());
        }
        &mut self.vehicles[i]
    }

    pub fn record_submit(&mut self, vehicle: VehicleId, s: Strategy, at: u64) {
        let g = &mut self.groups[s.index()];
        g.live += 1;
        g.live_submit_sum += at;
        let v = self.vehicle_mut(vehicle);
        v.live += 1;
        v.live_submit_sum += at;
    }

    pub fn record_removal(
        &mut self,
        vehicle: VehicleId,
        s: Strategy,
        submitted_at: u64,
        removed_at: u64,
    ) {
        let g = &mut self.groups[s.index()];
        g.live -= 1;
        g.live_submit_sum -= submitted_at;
        g.frozen += removed_at - submitted_at;
        let v = self.vehicle_mut(vehicle);
        v.live -= 1;
        v.live_submit_sum -= submitted_at;
        v.frozen += removed_at - submitted_at;
    }

    /// Group utility `U_i` at `now`, in ticks.
    pub fn group_utility(&self, s: Strategy, now: u64) -> f64 {
        self.groups[s.index()].at(now) as f64
    }

    /// All group utilities at `now`, indexed by [`Strategy::index`].
    pub fn group_utilities(&self, now: u64) -> Vec<f64> {
        self.groups.iter().map(|b| b.at(now) as f64).collect()
    }

    pub fn vehicle_utility(&self, v: VehicleId, now: u64) -> f64 {
        self.vehicles
            .get(v.0 as usize)
            .map_or(0.0, |b| b.at(now) as f64)
    }

    pub fn live_messages(&self, s: Strategy) -> u64 {
        self.groups[s.index()].live
    }
}

/// Free-function form of [`UtilityLedger::group_utility`].
pub fn group_utility(ledger: &UtilityLedger, s: Strategy, now: u64) -> f64 {
    ledger.group_utility(s, now)
}

fn check_dims(fractions: &[f64], utils: &[f64]) -> Result<()> {
    if fractions.len() != utils.len() {
        return Err(Error::Contract(format!(
            "{} fractions against {} utilities",
            fractions.len(),
            utils.len()
        )));
    }
    Ok(())
}

/// Presence-weighted mean utility `sum(a_j U_j) / sum(a_j)`.
pub fn overall_utility(fractions: &[f64], utils: &[f64]) -> Result<f64> {
    check_dims(fractions, utils)?;
    let mass: f64 = fractions.iter().sum();
    if !(mass > 0.0) {
        return Err(Error::EmptyPopulation);
    }
    let weighted: f64 = fractions.iter().zip(utils).map(|(a, u)| a * u).sum();
    Ok(weighted / mass)
}

/// Indices whose utility strictly exceeds the overall utility.
///
/// Strategies without submission history have zero utility and so never
/// qualify.
pub fn predominant_set(fractions: &[f64], utils: &[f64]) -> Result<Vec<usize>> {
    let overall = overall_utility(fractions, utils)?;
    Ok(utils
        .iter()
        .enumerate()
        .filter(|&(_, &u)| u > overall)
        .map(|(i, _)| i)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Evolve,
    Static,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Evolve => "evolve",
            Mode::Static => "static",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "evolve" => Ok(Mode::Evolve),
            "static" => Ok(Mode::Static),
            other => Err(format!(
                "unknown mode `{other}` (expected evolve or static)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionConfig {
    /// Evolution ability factor: chance a newcomer picks from the predominant set.
    pub epsilon: f64,
    pub mode: Mode,
    /// Ticks between replacement batches.
    pub replacement_period: u64,
    /// Strategies a blind newcomer may draw from, inclusive.
    pub pool: (Strategy, Strategy),
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::config(
                "epsilon",
                format!("must lie in [0, 1], got {}", self.epsilon),
            ));
        }
        if self.replacement_period == 0 {
            return Err(Error::config(
                "replacement_period_units",
                "must be at least one tick",
            ));
        }
        if self.pool.0 > self.pool.1 {
            return Err(Error::config(
                "strategy_min",
                "must not exceed strategy_max",
            ));
        }
        Ok(())
    }
}

/// Strategy for one replacement slot.
///
/// Static mode hands back `removed` unchanged. Otherwise, with probability
/// `epsilon` the pick is uniform over the predominant set; blind picks, and
/// every pick while that set is empty or the population is extinct, are
/// uniform over the joining pool.
pub fn select_strategy<R: Rng + ?Sized>(
    state: &PopulationState,
    utils: &[f64],
    cfg: &EvolutionConfig,
    removed: Option<Strategy>,
    rng: &mut R,
) -> Result<Strategy> {
    if cfg.mode == Mode::Static {
        return removed.ok_or_else(|| {
            Error::Contract("static replacement needs the removed strategy".into())
        });
    }
    if rng.random_bool(cfg.epsilon) {
        let predominant = match predominant_set(&state.fractions(), utils) {
            Ok(set) => set,
            Err(Error::EmptyPopulation) => Vec::new(),
            Err(e) => return Err(e),
        };
        if !predominant.is_empty() {
            let i = predominant[rng.random_range(0..predominant.len())];
            return Ok(Strategy::from_index(i));
        }
    }
    let (lo, hi) = cfg.pool;
    Ok(Strategy(rng.random_range(lo.0..=hi.0)))
}
