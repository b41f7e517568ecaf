//! Tick-driven replay of the detection pipeline over a trained network.
//!
//! Each tick every live node other than the cluster heads emits one record:
//! compromised nodes draw from the attack pool, the rest from the normal
//! pool, silent nodes emit nothing. Agents overhear records in range and judge
//! each one. A source whose recent window is mostly anomalous is reported:
//! the reporter checks its signature store and either raises a matched alarm
//! or asks its head for a vote. Re-election is checked after every tick.

mod log;

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::agent::{
    cooperate, derive_signature, misuse_check, AgentError, Alert, AnomalyOutcome, IdsAgent, IntrusionReport,
    MisuseOutcome, Signature, SignatureDb, SignatureId, Tally, TrafficEvent, Verdict,
};
use crate::dataset::Normalization;
use crate::dist::{global_exchange, DistConfig, DistError, TrainingSession};
use crate::metrics::Confusion;
use crate::svm::{FeatureVector, Label, Sample, SvmModel};
use crate::wsn::{reelect, ChargeKind, ChargeOutcome, ClusterId, Network, NodeId, ReelectionEvent, Role, WsnError};

pub use log::{AuditError, EventKind, EventLog, SimEvent};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Wsn(#[from] WsnError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error("invalid simulation setup: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub ticks: u64,
    /// Share of all nodes, taken from ordinary nodes, that emit attack traffic.
    pub compromised_fraction: f64,
    /// Share of all nodes, taken from the remaining ordinary nodes, that emit nothing.
    pub silent_fraction: f64,
    pub dist: DistConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            ticks: 40,
            compromised_fraction: 0.1,
            silent_fraction: 0.05,
            dist: DistConfig::default(),
        }
    }
}

/// A trained network ready for replay.
pub struct SimSetup {
    pub net: Network,
    /// Converged sessions, one per cluster with agents.
    pub sessions: Vec<TrainingSession>,
    pub models: BTreeMap<NodeId, SvmModel>,
    /// Normalized training draws handed to agents promoted by re-election.
    pub spare_draws: Vec<Vec<Sample>>,
    pub normalization: Normalization,
    /// Raw feature vectors.
    pub normal_traffic: Vec<FeatureVector>,
    pub attack_traffic: Vec<FeatureVector>,
    pub signatures: SignatureDb,
}

#[derive(Debug, Clone)]
pub struct SimOutcome {
    /// Per-observation confusion over everything agents checked.
    pub confusion: Confusion,
    pub compromised: BTreeSet<NodeId>,
    pub silent: BTreeSet<NodeId>,
    pub isolated: BTreeSet<NodeId>,
    pub signatures_learned: usize,
    pub reelections: usize,
    pub log: EventLog,
}

pub struct Simulation {
    net: Network,
    cfg: SimConfig,
    rng: ChaCha8Rng,
    norm: Normalization,
    normal_traffic: Vec<FeatureVector>,
    attack_traffic: Vec<FeatureVector>,
    agents: BTreeMap<NodeId, IdsAgent>,
    heads: BTreeMap<NodeId, IdsAgent>,
    sessions: BTreeMap<ClusterId, TrainingSession>,
    spare_draws: Vec<Vec<Sample>>,
    next_spare: usize,
    compromised: BTreeSet<NodeId>,
    silent: BTreeSet<NodeId>,
    reports: BTreeMap<NodeId, Vec<IntrusionReport>>,
    learned_seq: BTreeMap<NodeId, u32>,
    dead: BTreeSet<NodeId>,
    /// Clusters whose last re-election check found nobody eligible.
    degraded: BTreeSet<ClusterId>,
    confusion: Confusion,
    signatures_learned: usize,
    reelections: usize,
    log: EventLog,
    tick: u64,
}

fn pick_fraction(pool: &mut Vec<NodeId>, n_total: usize, fraction: f64, rng: &mut ChaCha8Rng) -> BTreeSet<NodeId> {
    let want = ((n_total as f64) * fraction).round() as usize;
    let take = want.min(pool.len());
    pool.shuffle(rng);
    pool.drain(..take).collect()
}

impl Simulation {
    pub fn new(setup: SimSetup, cfg: SimConfig, seed: u64) -> Result<Self, SimError> {
        if setup.normal_traffic.is_empty() {
            return Err(SimError::Invalid("normal traffic pool is empty".into()));
        }
        if setup.attack_traffic.is_empty() && cfg.compromised_fraction > 0.0 {
            return Err(SimError::Invalid("attack traffic pool is empty".into()));
        }
        for f in [cfg.compromised_fraction, cfg.silent_fraction] {
            if !(0.0..=1.0).contains(&f) {
                return Err(SimError::Invalid(format!("fraction {f} outside [0, 1]")));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let topo = setup.net.topology();
        let mut ordinary: Vec<NodeId> = topo
            .nodes
            .iter()
            .filter(|n| n.role == Role::Ordinary)
            .map(|n| n.id)
            .collect();
        let n_total = topo.nodes.len();
        let compromised = pick_fraction(&mut ordinary, n_total, cfg.compromised_fraction, &mut rng);
        let silent = pick_fraction(&mut ordinary, n_total, cfg.silent_fraction, &mut rng);

        let heads = topo
            .heads()
            .into_iter()
            .map(|h| (h, IdsAgent::new(h, setup.signatures.clone())))
            .collect();
        let mut agents = BTreeMap::new();
        for (&node, model) in &setup.models {
            let mut a = IdsAgent::new(node, setup.signatures.clone());
            a.install_model(model.clone());
            agents.insert(node, a);
        }
        let sessions = setup.sessions.into_iter().map(|s| (s.cluster(), s)).collect();
        Ok(Simulation {
            net: setup.net,
            cfg,
            rng,
            norm: setup.normalization,
            normal_traffic: setup.normal_traffic,
            attack_traffic: setup.attack_traffic,
            agents,
            heads,
            sessions,
            spare_draws: setup.spare_draws,
            next_spare: 0,
            compromised,
            silent,
            reports: BTreeMap::new(),
            learned_seq: BTreeMap::new(),
            dead: BTreeSet::new(),
            degraded: BTreeSet::new(),
            confusion: Confusion::default(),
            signatures_learned: 0,
            reelections: 0,
            log: EventLog::default(),
            tick: 0,
        })
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn agents(&self) -> &BTreeMap<NodeId, IdsAgent> {
        &self.agents
    }

    pub fn heads(&self) -> &BTreeMap<NodeId, IdsAgent> {
        &self.heads
    }

    pub fn log(&self) -> &EventLog {
        &self.log
    }

    pub fn compromised(&self) -> &BTreeSet<NodeId> {
        &self.compromised
    }

    pub fn silent(&self) -> &BTreeSet<NodeId> {
        &self.silent
    }

    pub fn run(mut self) -> Result<(SimOutcome, Network), SimError> {
        for _ in 0..self.cfg.ticks {
            self.step()?;
        }
        let isolated = self
            .net
            .topology()
            .nodes
            .iter()
            .filter(|n| n.isolated)
            .map(|n| n.id)
            .collect();
        let outcome = SimOutcome {
            confusion: self.confusion,
            compromised: self.compromised,
            silent: self.silent,
            isolated,
            signatures_learned: self.signatures_learned,
            reelections: self.reelections,
            log: self.log,
        };
        Ok((outcome, self.net))
    }

    fn db_version_of(&self, node: NodeId) -> u64 {
        self.agents
            .get(&node)
            .or_else(|| self.heads.get(&node))
            .map_or(0, |a| a.db().version())
    }

    fn dim(&self) -> usize {
        self.norm.bounds.len()
    }

    /// Unicast that logs instead of failing when the route or a node is gone.
    fn deliver(&mut self, from: NodeId, to: NodeId, bytes: u64) -> bool {
        let ok = matches!(self.net.transmit(from, to, bytes), Ok(d) if d.delivered);
        if !ok {
            self.log.push(self.tick, EventKind::Undeliverable, from, Some(to));
        }
        ok
    }

    fn emit(&mut self) -> Vec<(TrafficEvent, Label)> {
        let mut events = Vec::new();
        let ids: Vec<NodeId> = self
            .net
            .topology()
            .nodes
            .iter()
            .filter(|n| n.is_active() && n.role != Role::ClusterHead && !self.silent.contains(&n.id))
            .map(|n| n.id)
            .collect();
        let record_bytes = self.cfg.dist.wire.sample_bytes(self.dim());
        for id in ids {
            let (pool, truth) = if self.compromised.contains(&id) {
                (&self.attack_traffic, Label::Negative)
            } else {
                (&self.normal_traffic, Label::Positive)
            };
            let features = pool[self.rng.random_range(0..pool.len())].clone();
            // the send itself may exhaust the node; what it sent still goes out
            let _ = self.net.charge(id, record_bytes, ChargeKind::Send);
            events.push((
                TrafficEvent {
                    tick: self.tick,
                    source: id,
                    features,
                },
                truth,
            ));
        }
        events
    }

    /// Run one tick.
    pub fn step(&mut self) -> Result<(), SimError> {
        let emitted = self.emit();
        let truth: BTreeMap<NodeId, Label> = emitted.iter().map(|(e, t)| (e.source, *t)).collect();
        let events: Vec<TrafficEvent> = emitted.into_iter().map(|(e, _)| e).collect();
        let record_bytes = self.cfg.dist.wire.sample_bytes(self.dim());

        let mut pending = Vec::new();
        let agent_ids: Vec<NodeId> = self.agents.keys().copied().collect();
        for id in agent_ids {
            if !self.net.node(id)?.is_active() {
                continue;
            }
            let seen = self.agents[&id].collect(self.net.topology(), &events, &self.norm);
            for (source, x) in seen {
                if self.net.charge(id, record_bytes, ChargeKind::Receive)? == ChargeOutcome::Depleted {
                    break;
                }
                let agent = self.agents.get_mut(&id).expect("listed agent");
                let outcome = match agent.observe(source, self.tick, x.clone()) {
                    Ok(o) => o,
                    Err(AgentError::NotReady(_)) => continue,
                    Err(e) => return Err(e.into()),
                };
                let predicted = match outcome {
                    AnomalyOutcome::Normal => Label::Positive,
                    AnomalyOutcome::Suspect(_) => Label::Negative,
                };
                self.confusion.record(truth[&source], predicted);
                if let AnomalyOutcome::Suspect(value) = outcome {
                    if agent.is_suspicious(source) {
                        pending.push(IntrusionReport::new(id, source, x, value, self.tick)?);
                    }
                }
            }
        }

        for report in pending {
            self.handle_report(report)?;
        }
        self.note_deaths();
        self.check_reelection()?;
        self.note_deaths();
        self.tick += 1;
        Ok(())
    }

    fn note_deaths(&mut self) {
        let newly: Vec<NodeId> = self
            .net
            .topology()
            .nodes
            .iter()
            .filter(|n| n.is_dead() && !self.dead.contains(&n.id))
            .map(|n| n.id)
            .collect();
        for id in newly {
            self.dead.insert(id);
            self.log.push(self.tick, EventKind::NodeDead, id, None);
        }
    }

    fn handle_report(&mut self, report: IntrusionReport) -> Result<(), SimError> {
        let reporter = report.reporter;
        let suspect = report.suspect;
        if !self.net.node(reporter)?.is_active() {
            return Ok(());
        }
        let head = self.net.topology().head_of(reporter)?;
        if self.heads[&head].is_isolated(suspect) || self.net.node(suspect)?.isolated {
            return Ok(());
        }
        let db_version = self.db_version_of(reporter);
        self.log
            .push_with(self.tick, EventKind::Suspect, reporter, Some(suspect), |e| {
                e.db_version = db_version;
                e.decision_value = Some(report.decision_value);
            });
        self.reports.entry(suspect).or_default().push(report.clone());

        let outcome = misuse_check(self.agents[&reporter].db(), &report);
        let report_bytes = self.cfg.dist.wire.message_bytes(self.dim(), 1, 0);
        match outcome {
            MisuseOutcome::Matched(sig) => {
                self.log
                    .push_with(self.tick, EventKind::MisuseMatch, reporter, Some(suspect), |e| {
                        e.db_version = db_version;
                        e.signature = Some(sig);
                    });
                if self.deliver(reporter, head, report_bytes) {
                    self.isolate(head, suspect, None)?;
                }
            }
            MisuseOutcome::Unmatched => {
                self.log
                    .push_with(self.tick, EventKind::MisuseMiss, reporter, Some(suspect), |e| {
                        e.db_version = db_version;
                    });
                if !self.deliver(reporter, head, report_bytes) {
                    return Ok(());
                }
                self.vote(head, suspect)?;
            }
        }
        Ok(())
    }

    fn vote(&mut self, head: NodeId, suspect: NodeId) -> Result<(), SimError> {
        let cluster = self.net.node(head)?.cluster;
        let voters: Vec<NodeId> = self
            .net
            .topology()
            .active_agents(cluster)
            .into_iter()
            .filter(|a| self.agents.get(a).is_some_and(|s| s.model().is_some()))
            .collect();
        let wire = self.cfg.dist.wire;
        let poll_bytes = wire.header_bytes + wire.retraction_bytes;
        let _ = self.net.multicast(head, &voters, poll_bytes);
        let polled: Vec<&IdsAgent> = voters.iter().map(|v| &self.agents[v]).collect();
        let (verdict, votes) = cooperate(cluster, &polled, suspect)?;
        for &(voter, _) in &votes {
            self.deliver(voter, head, wire.header_bytes + 1);
        }
        let tally = Tally::from_votes(votes.iter().map(|(_, v)| v));
        let db_version = self.db_version_of(head);
        self.log
            .push_with(self.tick, EventKind::Vote, head, Some(suspect), |e| {
                e.db_version = db_version;
                e.verdict = Some(verdict);
                e.tally = Some(tally);
            });
        if verdict == Verdict::Intruder {
            let seq = self.learned_seq.entry(head).or_insert(0);
            *seq += 1;
            let id = SignatureId::learned(head, *seq);
            let sig = derive_signature(id, &self.reports[&suspect])?;
            self.signatures_learned += 1;
            self.isolate(head, suspect, Some(sig))?;
        }
        Ok(())
    }

    /// Isolate `suspect` and spread the alert to every head and agent.
    fn isolate(&mut self, head: NodeId, suspect: NodeId, sig: Option<Signature>) -> Result<(), SimError> {
        self.net.topology_mut().node_mut(suspect)?.isolated = true;
        let alert = Alert {
            malicious: suspect,
            new_signature: sig,
            issuing_head: head,
        };
        let sig_id = alert.new_signature.as_ref().map(|s| s.id);
        self.log
            .push_with(self.tick, EventKind::Isolation, head, Some(suspect), |e| {
                e.signature = sig_id;
            });

        let wire = self.cfg.dist.wire;
        let mut bytes = wire.header_bytes + wire.retraction_bytes;
        if alert.new_signature.is_some() {
            bytes += wire.sample_bytes(self.dim()) + wire.bytes_per_feature;
        }
        let heads: Vec<NodeId> = self.heads.keys().copied().collect();
        for h in heads {
            if h != head && !self.deliver(head, h, bytes) {
                continue;
            }
            self.heads.get_mut(&h).expect("listed head").apply_alert(&alert);
            let cluster = self.net.node(h)?.cluster;
            let members: Vec<NodeId> = self
                .net
                .topology()
                .agents(cluster)
                .into_iter()
                .filter(|a| self.agents.contains_key(a))
                .collect();
            let reached = self.net.multicast(h, &members, bytes);
            for a in members {
                if reached.contains(&a) {
                    self.agents.get_mut(&a).expect("listed agent").apply_alert(&alert);
                } else {
                    self.log.push(self.tick, EventKind::Undeliverable, h, Some(a));
                }
            }
            let version = self.heads[&h].db().version();
            self.log.push_with(self.tick, EventKind::Alert, h, Some(suspect), |e| {
                e.db_version = version;
                e.signature = sig_id;
            });
        }
        Ok(())
    }

    fn check_reelection(&mut self) -> Result<(), SimError> {
        let clusters: Vec<ClusterId> = self.net.topology().clusters.iter().map(|c| c.id).collect();
        for cluster in clusters {
            if self.net.topology().active_agents(cluster).is_empty() {
                continue;
            }
            match reelect(self.net.topology_mut(), cluster)? {
                None => {
                    self.degraded.remove(&cluster);
                }
                Some(ReelectionEvent::Degraded { agents, .. }) => {
                    if self.degraded.insert(cluster) {
                        let head = self.net.topology().cluster(cluster)?.head;
                        self.log.push_with(self.tick, EventKind::Degraded, head, None, |e| {
                            e.count = Some(agents.len());
                        });
                    }
                }
                Some(ReelectionEvent::Replaced { demoted, promoted, .. }) => {
                    self.degraded.remove(&cluster);
                    self.reelections += 1;
                    self.replace_agents(cluster, &demoted, &promoted)?;
                }
            }
        }
        Ok(())
    }

    fn replace_agents(&mut self, cluster: ClusterId, demoted: &[NodeId], promoted: &[NodeId]) -> Result<(), SimError> {
        let head = self.net.topology().cluster(cluster)?.head;
        for d in demoted {
            self.agents.remove(d);
        }
        let handover_bytes = {
            let db = self.heads[&head].db();
            let wire = self.cfg.dist.wire;
            wire.header_bytes + db.len() as u64 * (wire.sample_bytes(self.dim()) + wire.bytes_per_feature)
        };
        for &p in promoted {
            let mut agent = IdsAgent::new(p, self.heads[&head].db().clone());
            for &iso in self.heads[&head].isolated_view() {
                agent.apply_alert(&Alert {
                    malicious: iso,
                    new_signature: None,
                    issuing_head: head,
                });
            }
            self.deliver(head, p, handover_bytes);
            self.agents.insert(p, agent);
        }
        let version = self.heads[&head].db().version();
        self.log.push_with(self.tick, EventKind::Reelection, head, None, |e| {
            e.db_version = version;
            e.count = Some(promoted.len());
        });

        // fresh session for this cluster, then a network-wide refresh
        let old_draws: BTreeMap<NodeId, Vec<Sample>> = self
            .sessions
            .get(&cluster)
            .map(|s| s.agents().iter().map(|a| (a.node, a.raw.clone())).collect())
            .unwrap_or_default();
        let mut participants = Vec::new();
        for a in self.net.topology().active_agents(cluster) {
            let draw = match old_draws.get(&a) {
                Some(d) => d.clone(),
                None => {
                    if self.spare_draws.is_empty() {
                        return Err(SimError::Invalid("no training draws left for new agents".into()));
                    }
                    // reuse draws cyclically once the reserve runs out
                    let d = self.spare_draws[self.next_spare % self.spare_draws.len()].clone();
                    self.next_spare += 1;
                    d
                }
            };
            participants.push((a, draw));
        }
        let mut session = TrainingSession::start(cluster, head, participants, &self.cfg.dist)?;
        let refreshed = session
            .cluster_pass(&mut self.net)
            .map_err(SimError::from)
            .and_then(|_| {
                self.sessions.insert(cluster, session);
                let mut all: Vec<TrainingSession> = self.sessions.values().cloned().collect();
                let out = global_exchange(&mut all, &mut self.net, &self.cfg.dist)?;
                for s in all {
                    self.sessions.insert(s.cluster(), s);
                }
                Ok(out)
            });
        match refreshed {
            Ok(out) => {
                for (node, model) in out.models {
                    if let Some(a) = self.agents.get_mut(&node) {
                        a.install_model(model);
                    }
                }
                self.log.push(self.tick, EventKind::Retrained, head, None);
            }
            Err(SimError::Dist(e)) => {
                self.log
                    .push_with(self.tick, EventKind::RetrainFailed, head, None, |ev| {
                        ev.note = Some(e.to_string());
                    });
                // new agents borrow the model the other agents still hold
                let fallback = self.agents.values().find_map(|a| a.model().cloned());
                if let Some(m) = fallback {
                    for &p in promoted {
                        if let Some(a) = self.agents.get_mut(&p) {
                            a.install_model(m.clone());
                        }
                    }
                }
            }
            Err(e) => return Err(e),
        }
        Ok(())
    }
}
