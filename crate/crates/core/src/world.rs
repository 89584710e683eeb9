//! Event-driven simulation state.
//!
//! Vehicles move at constant speed, so instead of stepping every vehicle each
//! tick the world schedules each vehicle's next intersection arrival on a timing
//! wheel and each dishonest vehicle's next submission on a heap. Between those
//! events a vehicle's offset is a linear function of time.
//!
//! Honest vehicles sense when they enter a segment (every live claim in range
//! gets one detection chance) and when a claim appears in their range. Both
//! passes go through [`bernoulli_subset`], so their cost does not grow with the
//! number of claims that go unnoticed.

use std::cmp::Reverse;
use std::collections::hash_map::DefaultHasher;
use std::collections::{BinaryHeap, VecDeque};
use std::hash::{Hash, Hasher};

use smallvec::SmallVec;

use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::evolution::{
    select_strategy, submit_probability, EvolutionConfig, PopulationState, Strategy, UtilityLedger,
};
use crate::rng::{geometric_gap, seeded, SimRng};
use crate::road::{
    bernoulli_subset, build_network, EdgeId, EventSpawner, Heading, Position, RoadNetwork,
    TrafficEvent, VehicleId,
};
use crate::trust::{MessageId, RemovalRecord, ReportOutcome, TrustServer};

const NO_SLOT: u32 = u32::MAX;

#[derive(Debug, Clone)]
struct Agent {
    id: VehicleId,
    strategy: Option<Strategy>,
    alive: bool,
    generation: u32,
    edge: EdgeId,
    heading: Heading,
    entry_offset: f64,
    entered_at: u64,
    /// Index in the occupant list of `edge`; honest vehicles only.
    occ_idx: u32,
    submit_p: f64,
}

/// Counters exposed for diagnostics and tests.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WorldStats {
    pub submissions: u64,
    pub reports: u64,
    pub removed_messages: u64,
    pub removed_vehicles: u64,
    pub replacements: u64,
}

pub struct World {
    cfg: SimConfig,
    net: RoadNetwork,
    evo: EvolutionConfig,
    now: u64,
    rng: SimRng,
    server: TrustServer,
    ledger: UtilityLedger,
    population: PopulationState,
    step: f64,
    agents: Vec<Agent>,
    /// Slot of each vehicle id ever admitted.
    slot_of: Vec<u32>,
    wheel: Vec<Vec<(u32, u32)>>,
    submissions: BinaryHeap<Reverse<(u64, u32, u32)>>,
    near_start: Vec<u32>,
    near: Vec<EdgeId>,
    occupants: Vec<Vec<u32>>,
    claims: Vec<Vec<MessageId>>,
    claim_pos: Vec<u32>,
    event_count: Vec<u32>,
    events: VecDeque<TrafficEvent>,
    spawner: EventSpawner,
    pending: Vec<(u32, RemovalRecord)>,
    replacement_due: bool,
    stats: WorldStats,
}

impl World {
    /// Builds the network and places every vehicle uniformly at random. Honest
    /// vehicles take ids `0..n_honest`, dishonest ones follow.
    pub fn new(cfg: &SimConfig) -> Result<World> {
        cfg.validate()?;
        let net = build_network(cfg.grid_rows, cfg.grid_cols, cfg.block_len_m)?;
        let evo = cfg.evolution();
        evo.validate()?;
        let segments = net.segment_count();

        let mut near_start = Vec::with_capacity(segments + 1);
        let mut near = Vec::new();
        near_start.push(0);
        for e in net.edges() {
            near.extend(net.edges_within(e, cfg.sensing_radius_m));
            near_start.push(near.len() as u32);
        }

        let step = cfg.step_m();
        let wheel_len = (cfg.block_len_m / step).ceil() as usize + 2;
        let mut world = World {
            net,
            evo,
            now: 0,
            rng: seeded(cfg.seed),
            server: TrustServer::new(cfg.trust())?,
            ledger: UtilityLedger::new(),
            population: PopulationState::new(cfg.n_dishonest),
            step,
            agents: Vec::new(),
            slot_of: Vec::new(),
            wheel: vec![Vec::new(); wheel_len],
            submissions: BinaryHeap::new(),
            near_start,
            near,
            occupants: vec![Vec::new(); segments],
            claims: vec![Vec::new(); segments],
            claim_pos: Vec::new(),
            event_count: vec![0; segments],
            events: VecDeque::new(),
            spawner: EventSpawner::new(
                cfg.event_rate,
                cfg.tick_s,
                cfg.time_unit_s,
                cfg.event_duration_ticks(),
            )?,
            pending: Vec::new(),
            replacement_due: false,
            stats: WorldStats::default(),
            cfg: cfg.clone(),
        };
        for _ in 0..cfg.n_honest {
            let pos = world.net.random_position(&mut world.rng);
            world.admit(None, pos, NO_SLOT)?;
        }
        for s in cfg.initial_strategies() {
            let pos = world.net.random_position(&mut world.rng);
            world.admit(Some(s), pos, NO_SLOT)?;
        }
        Ok(world)
    }

    fn admit(
        &mut self,
        strategy: Option<Strategy>,
        pos: Position,
        reuse: u32,
    ) -> Result<VehicleId> {
        let honest = strategy.is_none();
        let v = self.server.admit_vehicle(honest, strategy, pos, self.now)?;
        let submit_p = match strategy {
            Some(s) => submit_probability(s, self.cfg.tick_s, self.cfg.time_unit_s)?,
            None => 0.0,
        };
        let mut agent = Agent {
            id: v.id,
            strategy,
            alive: true,
            generation: 0,
            edge: pos.edge,
            heading: pos.heading,
            entry_offset: pos.offset,
            entered_at: self.now,
            occ_idx: 0,
            submit_p,
        };
        let slot = if reuse == NO_SLOT {
            self.agents.push(agent);
            (self.agents.len() - 1) as u32
        } else {
            agent.generation = self.agents[reuse as usize].generation + 1;
            self.agents[reuse as usize] = agent;
            reuse
        };
        self.slot_of.push(slot);
        debug_assert_eq!(self.slot_of.len() - 1, v.id.0 as usize);
        if honest {
            self.occupy(slot, pos.edge);
        } else {
            self.population.add(strategy.expect("dishonest"));
            self.schedule_submission(slot);
        }
        self.schedule_arrival(slot);
        Ok(v.id)
    }

    fn occupy(&mut self, slot: u32, edge: EdgeId) {
        let list = &mut self.occupants[edge.0 as usize];
        self.agents[slot as usize].occ_idx = list.len() as u32;
        list.push(slot);
    }

    fn vacate(&mut self, slot: u32) {
        let a = &self.agents[slot as usize];
        let (edge, idx) = (a.edge, a.occ_idx as usize);
        let list = &mut self.occupants[edge.0 as usize];
        list.swap_remove(idx);
        if let Some(&moved) = list.get(idx) {
            self.agents[moved as usize].occ_idx = idx as u32;
        }
    }

    fn schedule_arrival(&mut self, slot: u32) {
        let a = &self.agents[slot as usize];
        let ticks = ((self.cfg.block_len_m - a.entry_offset) / self.step)
            .ceil()
            .max(1.0) as u64;
        let at = a.entered_at + ticks;
        let w = self.wheel.len() as u64;
        self.wheel[(at % w) as usize].push((slot, a.generation));
    }

    fn schedule_submission(&mut self, slot: u32) {
        let a = &self.agents[slot as usize];
        let gap = geometric_gap(&mut self.rng, a.submit_p);
        if gap == u64::MAX {
            return;
        }
        self.submissions
            .push(Reverse((self.now + 1 + gap, slot, a.generation)));
    }

    fn neighbourhood(&self, edge: EdgeId) -> &[EdgeId] {
        let i = edge.0 as usize;
        &self.near[self.near_start[i] as usize..self.near_start[i + 1] as usize]
    }

    /// Advances one tick.
    ///
    /// Order within a tick: pending replacements (if the previous tick closed a
    /// replacement period), then the clock moves to `t`, real events expire and
    /// spawn, vehicles due at an intersection turn and sense, and due
    /// submissions are broadcast and sensed.
    pub fn tick(&mut self) -> Result<()> {
        if self.replacement_due {
            self.process_replacements()?;
            self.replacement_due = false;
        }
        self.now += 1;
        let t = self.now;

        while self.events.front().is_some_and(|e| !e.is_active(t)) {
            let e = self.events.pop_front().expect("front exists");
            self.event_count[e.location.edge.0 as usize] -= 1;
        }
        if let Some(e) = self.spawner.spawn(&self.net, t, &mut self.rng) {
            self.event_count[e.location.edge.0 as usize] += 1;
            self.events.push_back(e);
        }

        let w = self.wheel.len();
        let mut due = std::mem::take(&mut self.wheel[(t % w as u64) as usize]);
        for &(slot, generation) in &due {
            let a = &self.agents[slot as usize];
            if a.alive && a.generation == generation {
                self.arrive(slot)?;
            }
        }
        due.clear();
        self.wheel[(t % w as u64) as usize] = due;

        while let Some(&Reverse((at, slot, generation))) = self.submissions.peek() {
            if at != t {
                debug_assert!(at > t);
                break;
            }
            self.submissions.pop();
            let a = &self.agents[slot as usize];
            if a.alive && a.generation == generation {
                self.submit(slot)?;
                self.schedule_submission(slot);
            }
        }

        if t.is_multiple_of(self.evo.replacement_period) {
            self.replacement_due = true;
        }
        Ok(())
    }

    fn arrive(&mut self, slot: u32) -> Result<()> {
        let t = self.now;
        let (edge, heading, travelled) = {
            let a = &self.agents[slot as usize];
            (
                a.edge,
                a.heading,
                a.entry_offset + (t - a.entered_at) as f64 * self.step,
            )
        };
        let node = self.net.destination(edge, heading);
        let (next, next_heading) = self.net.choose_turn(node, heading, &mut self.rng);
        let honest = self.agents[slot as usize].strategy.is_none();
        if honest {
            self.vacate(slot);
        }
        {
            let a = &mut self.agents[slot as usize];
            a.edge = next;
            a.heading = next_heading;
            a.entry_offset = (travelled - self.cfg.block_len_m).max(0.0);
            a.entered_at = t;
        }
        self.schedule_arrival(slot);
        if honest {
            self.occupy(slot, next);
            self.sense_on_entry(slot)?;
        }
        Ok(())
    }

    /// One detection chance for every live claim in range of the segment entered.
    fn sense_on_entry(&mut self, slot: u32) -> Result<()> {
        if self.cfg.detection_prob <= 0.0 {
            return Ok(());
        }
        let edge = self.agents[slot as usize].edge;
        let mut lists: SmallVec<[(u32, usize); 16]> = SmallVec::new();
        let mut total = 0usize;
        for &e in self.neighbourhood(edge) {
            let i = e.0 as usize;
            let n = self.claims[i].len();
            if n > 0 && self.event_count[i] == 0 {
                lists.push((e.0, n));
                total += n;
            }
        }
        if total == 0 {
            return Ok(());
        }
        let mut picked: SmallVec<[MessageId; 4]> = SmallVec::new();
        let claims = &self.claims;
        let (mut li, mut base) = (0usize, 0usize);
        bernoulli_subset(total, self.cfg.detection_prob, &mut self.rng, |k| {
            while k >= base + lists[li].1 {
                base += lists[li].1;
                li += 1;
            }
            picked.push(claims[lists[li].0 as usize][k - base]);
        });
        let reporter = self.agents[slot as usize].id;
        for msg in picked {
            self.report(msg, reporter)?;
        }
        Ok(())
    }

    fn submit(&mut self, slot: u32) -> Result<()> {
        let t = self.now;
        let (id, strategy, edge) = {
            let a = &self.agents[slot as usize];
            (
                a.id,
                a.strategy.expect("only dishonest vehicles submit"),
                a.edge,
            )
        };
        let msg = self.server.submit_message(id, edge, t, true)?;
        self.ledger.record_submit(id, strategy, t);
        self.stats.submissions += 1;
        let list = &mut self.claims[edge.0 as usize];
        self.claim_pos.push(list.len() as u32);
        debug_assert_eq!(self.claim_pos.len() - 1, msg.0 as usize);
        list.push(msg);

        if self.cfg.detection_prob <= 0.0 || self.event_count[edge.0 as usize] > 0 {
            return Ok(());
        }
        let mut lists: SmallVec<[(u32, usize); 16]> = SmallVec::new();
        let mut total = 0usize;
        for &e in self.neighbourhood(edge) {
            let n = self.occupants[e.0 as usize].len();
            if n > 0 {
                lists.push((e.0, n));
                total += n;
            }
        }
        let mut picked: SmallVec<[u32; 4]> = SmallVec::new();
        let occupants = &self.occupants;
        let (mut li, mut base) = (0usize, 0usize);
        bernoulli_subset(total, self.cfg.detection_prob, &mut self.rng, |k| {
            while k >= base + lists[li].1 {
                base += lists[li].1;
                li += 1;
            }
            picked.push(occupants[lists[li].0 as usize][k - base]);
        });
        for reporter_slot in picked {
            let reporter = self.agents[reporter_slot as usize].id;
            self.report(msg, reporter)?;
        }
        Ok(())
    }

    fn report(&mut self, msg: MessageId, reporter: VehicleId) -> Result<()> {
        if self.server.has_reported(msg, reporter) {
            return Ok(());
        }
        let t = self.now;
        let outcome = self.server.report_absence(msg, reporter, t)?;
        match outcome {
            ReportOutcome::Duplicate | ReportOutcome::Inactive => return Ok(()),
            ReportOutcome::Decremented { .. } => {}
            ReportOutcome::Removed { penalty } => {
                let m = self.server.message(msg).expect("just reported").clone();
                self.unlist(msg, m.claimed_location);
                let strategy = self
                    .server
                    .strategy_of(m.submitter)?
                    .expect("false messages come from dishonest vehicles");
                self.ledger
                    .record_removal(m.submitter, strategy, m.submitted_at, t);
                self.stats.removed_messages += 1;
                if let Some(record) = penalty.and_then(|p| p.removal) {
                    let slot = self.slot_of[record.vehicle.0 as usize];
                    self.agents[slot as usize].alive = false;
                    self.population.remove(strategy);
                    self.pending.push((slot, record));
                    self.stats.removed_vehicles += 1;
                }
            }
        }
        self.stats.reports += 1;
        Ok(())
    }

    fn unlist(&mut self, msg: MessageId, edge: EdgeId) {
        let idx = self.claim_pos[msg.0 as usize] as usize;
        let list = &mut self.claims[edge.0 as usize];
        debug_assert_eq!(list[idx], msg);
        list.swap_remove(idx);
        if let Some(&moved) = list.get(idx) {
            self.claim_pos[moved.0 as usize] = idx as u32;
        }
    }

    /// Admits one newcomer for every vehicle removed since the last batch, in
    /// removal order. Each newcomer picks a strategy from the state left by the
    /// newcomers before it. Returns the number admitted.
    pub fn process_replacements(&mut self) -> Result<usize> {
        if self.pending.is_empty() {
            return Ok(0);
        }
        let utils = self.ledger.group_utilities(self.now);
        let batch = std::mem::take(&mut self.pending);
        for (slot, record) in &batch {
            let s = select_strategy(
                &self.population,
                &utils,
                &self.evo,
                record.strategy,
                &mut self.rng,
            )?;
            let pos = self.net.random_position(&mut self.rng);
            self.admit(Some(s), pos, *slot)?;
            self.stats.replacements += 1;
        }
        Ok(batch.len())
    }

    /// Runs until `now == until`.
    pub fn run_until(&mut self, until: u64) -> Result<()> {
        while self.now < until {
            self.tick()?;
        }
        Ok(())
    }

    pub fn now(&self) -> u64 {
        self.now
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn network(&self) -> &RoadNetwork {
        &self.net
    }

    pub fn server(&self) -> &TrustServer {
        &self.server
    }

    pub fn ledger(&self) -> &UtilityLedger {
        &self.ledger
    }

    pub fn population(&self) -> &PopulationState {
        &self.population
    }

    pub fn stats(&self) -> WorldStats {
        self.stats
    }

    /// Removed vehicles waiting for the next replacement batch.
    pub fn pending_replacements(&self) -> usize {
        self.pending.len()
    }

    pub fn active_events(&self) -> impl Iterator<Item = &TrafficEvent> {
        self.events.iter()
    }

    /// Current position of a vehicle still on the network.
    pub fn position(&self, id: VehicleId) -> Result<Position> {
        let slot = *self
            .slot_of
            .get(id.0 as usize)
            .ok_or(Error::UnknownVehicle(id.0))?;
        let a = &self.agents[slot as usize];
        if a.id != id || !a.alive {
            return Err(Error::UnknownVehicle(id.0));
        }
        Ok(Position {
            edge: a.edge,
            offset: a.entry_offset + (self.now - a.entered_at) as f64 * self.step,
            heading: a.heading,
        })
    }

    /// Vehicles currently on the network, honest first.
    pub fn present_vehicles(&self) -> impl Iterator<Item = VehicleId> + '_ {
        self.agents.iter().filter(|a| a.alive).map(|a| a.id)
    }

    /// Live claims listed on `edge`.
    pub fn claims_on(&self, edge: EdgeId) -> &[MessageId] {
        &self.claims[edge.0 as usize]
    }

    /// Digest of the full dynamic state, for determinism checks.
    pub fn state_hash(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.now.hash(&mut h);
        for a in &self.agents {
            (
                a.id,
                a.alive,
                a.generation,
                a.edge,
                a.heading as u8,
                a.entered_at,
            )
                .hash(&mut h);
            a.entry_offset.to_bits().hash(&mut h);
        }
        for m in self.server.ledger() {
            (
                m.submitter,
                m.claimed_location,
                m.submitted_at,
                m.removed_at,
            )
                .hash(&mut h);
            m.reputation.to_bits().hash(&mut h);
        }
        self.population.counts().hash(&mut h);
        self.pending.len().hash(&mut h);
        h.finish()
    }
}
