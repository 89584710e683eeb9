//! Central reputation authority.
//!
//! Vehicles and event messages each carry a reputation. A message starts with
//! the reputation its submitter holds at submission and loses one unit per
//! non-existence report; at zero it leaves the broadcast list and its
//! submitter (if still present) is penalized. A vehicle whose reputation hits
//! zero is removed from the network. Nothing ever raises a reputation.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::evolution::Strategy;
use crate::road::{EdgeId, Position, Vehicle, VehicleId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MessageId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PenaltyMethod {
    Linear,
    Exponential,
    Logarithmic,
}

impl fmt::Display for PenaltyMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PenaltyMethod::Linear => "linear",
            PenaltyMethod::Exponential => "exponential",
            PenaltyMethod::Logarithmic => "logarithmic",
        })
    }
}

impl FromStr for PenaltyMethod {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "linear" => Ok(PenaltyMethod::Linear),
            "exponential" => Ok(PenaltyMethod::Exponential),
            "logarithmic" => Ok(PenaltyMethod::Logarithmic),
            other => Err(format!(
                "unknown penalty method `{other}` (expected linear, exponential or logarithmic)"
            )),
        }
    }
}

/// Punitive reduction applied to a vehicle whose message was discredited.
///
/// * linear: `rep - param`
/// * exponential: `rep / param`, requires `param > 1`
/// * logarithmic: `rep - param * ln(1 + rep)`
///
/// The result is clamped below at zero.
pub fn apply_penalty(rep: f64, method: PenaltyMethod, param: f64) -> Result<f64> {
    if !(rep > 0.0) {
        return Err(Error::Contract(format!(
            "penalty on non-positive reputation {rep}"
        )));
    }
    if !(param > 0.0) {
        return Err(Error::config(
            "penalty_param",
            format!("must be > 0, got {param}"),
        ));
    }
    let next = match method {
        PenaltyMethod::Linear => rep - param,
        PenaltyMethod::Exponential => {
            if param <= 1.0 {
                return Err(Error::config(
                    "penalty_param",
                    format!("exponential decline needs a divisor > 1, got {param}"),
                ));
            }
            rep / param
        }
        PenaltyMethod::Logarithmic => rep - param * rep.ln_1p(),
    };
    Ok(next.max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrustConfig {
    pub init_reputation: f64,
    pub penalty_method: PenaltyMethod,
    pub penalty_param: f64,
}

impl Default for TrustConfig {
    fn default() -> Self {
        TrustConfig {
            init_reputation: 1.0,
            penalty_method: PenaltyMethod::Linear,
            penalty_param: 1.0,
        }
    }
}

impl TrustConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.init_reputation > 0.0 && self.init_reputation.is_finite()) {
            return Err(Error::config(
                "init_reputation",
                format!("must be > 0, got {}", self.init_reputation),
            ));
        }
        if !(self.penalty_param > 0.0 && self.penalty_param.is_finite()) {
            return Err(Error::config(
                "penalty_param",
                format!("must be > 0, got {}", self.penalty_param),
            ));
        }
        if self.penalty_method == PenaltyMethod::Exponential && self.penalty_param <= 1.0 {
            return Err(Error::config(
                "penalty_param",
                format!(
                    "exponential decline needs a divisor > 1, got {}",
                    self.penalty_param
                ),
            ));
        }
        Ok(())
    }
}

/// Ledger entry for one submitted message. Entries are never deleted.
#[derive(Debug, Clone, PartialEq)]
pub struct EventMessage {
    pub id: MessageId,
    pub submitter: VehicleId,
    pub claimed_location: EdgeId,
    pub submitted_at: u64,
    pub initial_reputation: f64,
    pub reputation: f64,
    pub removed_at: Option<u64>,
    /// Ground truth, for metrics only. The scheme never reads it.
    pub is_false: bool,
}

impl EventMessage {
    pub fn is_active(&self) -> bool {
        self.removed_at.is_none()
    }

    /// Time on the broadcast list, frozen at removal.
    pub fn duration(&self, now: u64) -> u64 {
        self.removed_at
            .unwrap_or(now)
            .saturating_sub(self.submitted_at)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RemovalRecord {
    pub vehicle: VehicleId,
    pub removed_at: u64,
    pub strategy: Option<Strategy>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Penalty {
    pub vehicle: VehicleId,
    pub reputation: f64,
    pub removal: Option<RemovalRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReportOutcome {
    /// Reputation dropped but stays positive.
    Decremented { reputation: f64 },
    /// The message hit zero and left the broadcast list. `penalty` is `None` when
    /// the submitter had already been removed.
    Removed { penalty: Option<Penalty> },
    /// This reporter already reported the message; nothing changed.
    Duplicate,
    /// The message was already off the broadcast list; nothing changed.
    Inactive,
}

#[derive(Debug, Clone)]
struct VehicleEntry {
    honest: bool,
    strategy: Option<Strategy>,
    reputation: f64,
    removed_at: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct TrustServer {
    cfg: TrustConfig,
    vehicles: Vec<VehicleEntry>,
    messages: Vec<EventMessage>,
    reporters: HashMap<MessageId, SmallVec<[VehicleId; 2]>>,
    active_false: usize,
    active: usize,
}

impl TrustServer {
    pub fn new(cfg: TrustConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(TrustServer {
            cfg,
            vehicles: Vec::new(),
            messages: Vec::new(),
            reporters: HashMap::new(),
            active_false: 0,
            active: 0,
        })
    }

    pub fn config(&self) -> &TrustConfig {
        &self.cfg
    }

    /// Registers a vehicle with the configured initial reputation.
    pub fn admit_vehicle(
        &mut self,
        honest: bool,
        strategy: Option<Strategy>,
        pos: Position,
        now: u64,
    ) -> Result<Vehicle> {
        if honest == strategy.is_some() {
            return Err(Error::Contract(if honest {
                "honest vehicles carry no strategy".into()
            } else {
                "dishonest vehicles need a strategy".into()
            }));
        }
        let id = VehicleId(self.vehicles.len() as u32);
        self.vehicles.push(VehicleEntry {
            honest,
            strategy,
            reputation: self.cfg.init_reputation,
            removed_at: None,
        });
        Ok(Vehicle {
            id,
            pos,
            honest,
            reputation: self.cfg.init_reputation,
            strategy,
            joined_at: now,
        })
    }

    fn entry(&self, id: VehicleId) -> Result<&VehicleEntry> {
        self.vehicles
            .get(id.0 as usize)
            .ok_or(Error::UnknownVehicle(id.0))
    }

    pub fn reputation(&self, id: VehicleId) -> Result<f64> {
        Ok(self.entry(id)?.reputation)
    }

    pub fn is_present(&self, id: VehicleId) -> bool {
        self.entry(id)
            .map(|e| e.removed_at.is_none())
            .unwrap_or(false)
    }

    pub fn is_honest(&self, id: VehicleId) -> Result<bool> {
        Ok(self.entry(id)?.honest)
    }

    pub fn strategy_of(&self, id: VehicleId) -> Result<Option<Strategy>> {
        Ok(self.entry(id)?.strategy)
    }

    pub fn vehicle_count(&self) -> usize {
        self.vehicles.len()
    }

    pub fn submit_message(
        &mut self,
        submitter: VehicleId,
        location: EdgeId,
        now: u64,
        is_false: bool,
    ) -> Result<MessageId> {
        let entry = self.entry(submitter)?;
        if entry.removed_at.is_some() {
            return Err(Error::UnknownVehicle(submitter.0));
        }
        let id = MessageId(self.messages.len() as u32);
        self.messages.push(EventMessage {
            id,
            submitter,
            claimed_location: location,
            submitted_at: now,
            initial_reputation: entry.reputation,
            reputation: entry.reputation,
            removed_at: None,
            is_false,
        });
        self.active += 1;
        if is_false {
            self.active_false += 1;
        }
        Ok(id)
    }

    pub fn message(&self, id: MessageId) -> Option<&EventMessage> {
        self.messages.get(id.0 as usize)
    }

    pub fn has_reported(&self, msg: MessageId, reporter: VehicleId) -> bool {
        self.reporters
            .get(&msg)
            .is_some_and(|r| r.contains(&reporter))
    }

    /// Processes one non-existence report.
    pub fn report_absence(
        &mut self,
        msg: MessageId,
        reporter: VehicleId,
        now: u64,
    ) -> Result<ReportOutcome> {
        let idx = msg.0 as usize;
        let Some(m) = self.messages.get_mut(idx) else {
            return Err(Error::Contract(format!(
                "report on unknown message {}",
                msg.0
            )));
        };
        if m.removed_at.is_some() {
            return Ok(ReportOutcome::Inactive);
        }
        let seen = self.reporters.entry(msg).or_default();
        if seen.contains(&reporter) {
            return Ok(ReportOutcome::Duplicate);
        }
        seen.push(reporter);
        m.reputation -= 1.0;
        if m.reputation > 0.0 {
            return Ok(ReportOutcome::Decremented {
                reputation: m.reputation,
            });
        }
        m.reputation = 0.0;
        m.removed_at = Some(now);
        let submitter = m.submitter;
        self.active -= 1;
        if m.is_false {
            self.active_false -= 1;
        }
        self.reporters.remove(&msg);

        let e = &mut self.vehicles[submitter.0 as usize];
        if e.removed_at.is_some() {
            return Ok(ReportOutcome::Removed { penalty: None });
        }
        e.reputation = apply_penalty(
            e.reputation,
            self.cfg.penalty_method,
            self.cfg.penalty_param,
        )?;
        let reputation = e.reputation;
        let removal = if reputation <= 0.0 {
            Some(self.remove_vehicle(submitter, now)?)
        } else {
            None
        };
        Ok(ReportOutcome::Removed {
            penalty: Some(Penalty {
                vehicle: submitter,
                reputation,
                removal,
            }),
        })
    }

    /// Takes a discredited vehicle off the network. Its live messages stay listed.
    pub fn remove_vehicle(&mut self, id: VehicleId, now: u64) -> Result<RemovalRecord> {
        let e = self
            .vehicles
            .get_mut(id.0 as usize)
            .ok_or(Error::UnknownVehicle(id.0))?;
        if e.removed_at.is_some() {
            return Err(Error::Contract(format!("vehicle {} already removed", id.0)));
        }
        if e.reputation > 0.0 {
            return Err(Error::Contract(format!(
                "vehicle {} still has reputation {}",
                id.0, e.reputation
            )));
        }
        e.removed_at = Some(now);
        Ok(RemovalRecord {
            vehicle: id,
            removed_at: now,
            strategy: e.strategy,
        })
    }

    /// Messages currently credited, in submission order.
    pub fn broadcast_list(&self) -> impl Iterator<Item = &EventMessage> {
        self.messages.iter().filter(|m| m.reputation > 0.0)
    }

    /// Every message ever submitted, in submission order.
    pub fn ledger(&self) -> &[EventMessage] {
        &self.messages
    }

    pub fn active_count(&self) -> usize {
        self.active
    }

    pub fn active_false_count(&self) -> usize {
        self.active_false
    }
}
