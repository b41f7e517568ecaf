//! Per-node detection: traffic collection, the SVM anomaly engine, the
//! signature misuse engine, cluster voting and alert handling.

mod signature;
mod voting;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

use crate::dataset::Normalization;
use crate::svm::{FeatureVector, Label, SvmError, SvmModel};
use crate::wsn::{ClusterId, NodeId, Topology};

pub use signature::{
    derive_signature, misuse_check, predefined_signatures, MisuseOutcome, Signature, SignatureDb, SignatureId,
    SignatureOrigin, MIN_RADIUS, MIN_SIGNATURE_SUPPORT, PREDEFINED_QUANTILE,
};
pub use voting::{cooperate, Tally, Verdict, Vote};

/// Records kept per monitored source.
pub const EVIDENCE_WINDOW: usize = 5;
/// Anomalous records within the window before a source is reported or voted
/// against.
pub const EVIDENCE_THRESHOLD: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AgentError {
    #[error("agent {0} has no trained model")]
    NotReady(NodeId),
    #[error("intrusion reports need a negative decision value, got {0}")]
    NotAnomalous(f64),
    #[error("cluster {0} has no active IDS agent to poll")]
    NoActiveAgents(ClusterId),
    #[error("a signature needs at least one report")]
    NoReports,
    #[error("duplicate signature id {0}")]
    DuplicateSignature(SignatureId),
    #[error("invalid signature: {0}")]
    InvalidSignature(String),
    #[error("feature dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Svm(#[from] SvmError),
}

/// One record emitted by a node during a tick, in raw feature units.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficEvent {
    pub tick: u64,
    pub source: NodeId,
    pub features: FeatureVector,
}

/// One judged record in an agent's window.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub tick: u64,
    pub features: FeatureVector,
    pub anomalous: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnomalyOutcome {
    Normal,
    Suspect(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntrusionReport {
    pub reporter: NodeId,
    pub suspect: NodeId,
    pub features: FeatureVector,
    pub decision_value: f64,
    pub timestamp: u64,
}

impl IntrusionReport {
    pub fn new(
        reporter: NodeId,
        suspect: NodeId,
        features: FeatureVector,
        decision_value: f64,
        timestamp: u64,
    ) -> Result<Self, AgentError> {
        if decision_value.is_nan() || decision_value >= 0.0 {
            return Err(AgentError::NotAnomalous(decision_value));
        }
        Ok(IntrusionReport {
            reporter,
            suspect,
            features,
            decision_value,
            timestamp,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alert {
    pub malicious: NodeId,
    /// Present only when the verdict came from a vote.
    pub new_signature: Option<Signature>,
    pub issuing_head: NodeId,
}

impl Alert {
    /// Identity used to drop repeated deliveries.
    pub fn key(&self) -> (NodeId, Option<SignatureId>) {
        (self.malicious, self.new_signature.as_ref().map(|s| s.id))
    }
}

/// State held by one IDS agent (or by a cluster head, which keeps a
/// signature store and isolation view but no model).
#[derive(Debug, Clone)]
pub struct IdsAgent {
    pub node: NodeId,
    model: Option<SvmModel>,
    db: SignatureDb,
    isolated: BTreeSet<NodeId>,
    applied: BTreeSet<(NodeId, Option<SignatureId>)>,
    history: BTreeMap<NodeId, VecDeque<Observation>>,
}

impl IdsAgent {
    pub fn new(node: NodeId, db: SignatureDb) -> Self {
        IdsAgent {
            node,
            model: None,
            db,
            isolated: BTreeSet::new(),
            applied: BTreeSet::new(),
            history: BTreeMap::new(),
        }
    }

    pub fn install_model(&mut self, model: SvmModel) {
        self.model = Some(model);
    }

    pub fn model(&self) -> Option<&SvmModel> {
        self.model.as_ref()
    }

    pub fn db(&self) -> &SignatureDb {
        &self.db
    }

    /// Replace the signature store, as done when a head hands its set to a
    /// newly elected agent.
    pub fn adopt_db(&mut self, db: SignatureDb) {
        self.db = db;
    }

    /// Nodes this agent considers isolated.
    pub fn isolated_view(&self) -> &BTreeSet<NodeId> {
        &self.isolated
    }

    pub fn is_isolated(&self, node: NodeId) -> bool {
        self.isolated.contains(&node)
    }

    /// The most recent judged records of `source`, oldest first.
    pub fn history(&self, source: NodeId) -> Option<&VecDeque<Observation>> {
        self.history.get(&source)
    }

    /// Normalized features of every event whose source is another live,
    /// non-isolated node within radio range.
    pub fn collect(
        &self,
        topo: &Topology,
        events: &[TrafficEvent],
        norm: &Normalization,
    ) -> Vec<(NodeId, FeatureVector)> {
        events
            .iter()
            .filter(|ev| ev.source != self.node && topo.in_range(self.node, ev.source))
            .filter(|ev| topo.node(ev.source).is_ok_and(|n| n.is_active()))
            .map(|ev| (ev.source, norm.apply(&ev.features)))
            .collect()
    }

    pub fn anomaly_check(&self, x: &FeatureVector) -> Result<AnomalyOutcome, AgentError> {
        let model = self.model.as_ref().ok_or(AgentError::NotReady(self.node))?;
        let (label, value) = model.decide(x)?;
        Ok(match label {
            Label::Positive => AnomalyOutcome::Normal,
            Label::Negative => AnomalyOutcome::Suspect(value),
        })
    }

    /// Judge one record from `source` and add it to that source's window.
    pub fn observe(&mut self, source: NodeId, tick: u64, x: FeatureVector) -> Result<AnomalyOutcome, AgentError> {
        let outcome = self.anomaly_check(&x)?;
        let window = self.history.entry(source).or_default();
        if window.len() == EVIDENCE_WINDOW {
            window.pop_front();
        }
        window.push_back(Observation {
            tick,
            features: x,
            anomalous: matches!(outcome, AnomalyOutcome::Suspect(_)),
        });
        Ok(outcome)
    }

    /// Whether the window for `source` holds enough anomalous records.
    pub fn is_suspicious(&self, source: NodeId) -> bool {
        self.history
            .get(&source)
            .is_some_and(|w| w.iter().filter(|o| o.anomalous).count() >= EVIDENCE_THRESHOLD)
    }

    /// Vote on `suspect` from this agent's own window of observations.
    pub fn vote(&self, suspect: NodeId) -> Vote {
        match self.history.get(&suspect) {
            None => Vote::Abstain,
            Some(_) if self.is_suspicious(suspect) => Vote::Intruder,
            Some(_) => Vote::Benign,
        }
    }

    /// Apply an alert once. Returns whether anything changed.
    pub fn apply_alert(&mut self, alert: &Alert) -> bool {
        if !self.applied.insert(alert.key()) {
            return false;
        }
        let mut changed = self.isolated.insert(alert.malicious);
        if let Some(sig) = &alert.new_signature {
            changed |= self.db.insert(sig.clone());
        }
        changed
    }
}
