use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io;
use std::str::FromStr;

use thiserror::Error;

use crate::agent::{SignatureId, Tally, Verdict};
use crate::wsn::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    /// An agent's anomaly engine flagged a record.
    Suspect,
    MisuseMatch,
    MisuseMiss,
    /// A head polled its agents.
    Vote,
    Isolation,
    /// A head applied and relayed an alert.
    Alert,
    Undeliverable,
    Reelection,
    /// Re-election was due but nobody was eligible; logged on entering that state.
    Degraded,
    Retrained,
    RetrainFailed,
    NodeDead,
}

const KINDS: [(EventKind, &str); 12] = [
    (EventKind::Suspect, "suspect"),
    (EventKind::MisuseMatch, "misuse_match"),
    (EventKind::MisuseMiss, "misuse_miss"),
    (EventKind::Vote, "vote"),
    (EventKind::Isolation, "isolation"),
    (EventKind::Alert, "alert"),
    (EventKind::Undeliverable, "undeliverable"),
    (EventKind::Reelection, "reelection"),
    (EventKind::Degraded, "degraded"),
    (EventKind::Retrained, "retrained"),
    (EventKind::RetrainFailed, "retrain_failed"),
    (EventKind::NodeDead, "node_dead"),
];

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = KINDS.iter().find(|(k, _)| k == self).map(|(_, n)| *n).unwrap_or("?");
        f.write_str(name)
    }
}

impl FromStr for EventKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        KINDS
            .iter()
            .find(|(_, n)| *n == s)
            .map(|(k, _)| *k)
            .ok_or_else(|| format!("unknown event type {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimEvent {
    pub index: usize,
    pub tick: u64,
    pub kind: EventKind,
    pub actor: NodeId,
    pub suspect: Option<NodeId>,
    pub verdict: Option<Verdict>,
    pub tally: Option<Tally>,
    /// Signature store version of the actor when the event was logged.
    pub db_version: u64,
    pub signature: Option<SignatureId>,
    pub decision_value: Option<f64>,
    pub count: Option<usize>,
    pub note: Option<String>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AuditError {
    #[error("event {index}: logged verdict does not follow from its votes")]
    VerdictMismatch { index: usize },
    #[error("event {index}: isolation without a preceding match or majority vote")]
    UnjustifiedIsolation { index: usize },
    #[error("event {index}: vote event without a tally or verdict")]
    IncompleteVote { index: usize },
    #[error("silent node {0} was isolated")]
    SilentIsolated(NodeId),
    #[error("node {0} isolated twice")]
    DuplicateIsolation(NodeId),
    #[error("event log row {row}: {message}")]
    Malformed { row: usize, message: String },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    events: Vec<SimEvent>,
}

const HEADER: [&str; 15] = [
    "seed",
    "index",
    "tick",
    "type",
    "actor",
    "suspect",
    "verdict",
    "db_version",
    "votes_intruder",
    "votes_benign",
    "votes_abstain",
    "signature",
    "decision_value",
    "count",
    "note",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl EventLog {
    pub fn events(&self) -> &[SimEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn of_kind(&self, kind: EventKind) -> impl Iterator<Item = &SimEvent> {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    pub fn push(&mut self, tick: u64, kind: EventKind, actor: NodeId, suspect: Option<NodeId>) {
        self.push_with(tick, kind, actor, suspect, |_| {});
    }

    pub fn push_with<F: FnOnce(&mut SimEvent)>(
        &mut self,
        tick: u64,
        kind: EventKind,
        actor: NodeId,
        suspect: Option<NodeId>,
        fill: F,
    ) {
        let mut e = SimEvent {
            index: self.events.len(),
            tick,
            kind,
            actor,
            suspect,
            verdict: None,
            tally: None,
            db_version: 0,
            signature: None,
            decision_value: None,
            count: None,
            note: None,
        };
        fill(&mut e);
        self.events.push(e);
    }

    /// Check the log's internal consistency: every verdict follows from its
    /// tally, every isolation follows a match (alert without signature) or a
    /// majority vote (alert with signature), nobody is isolated twice, and no
    /// node in `silent` is isolated.
    pub fn audit(&self, silent: &BTreeSet<NodeId>) -> Result<(), AuditError> {
        let mut last_match: BTreeMap<NodeId, usize> = BTreeMap::new();
        let mut last_intruder_vote: BTreeMap<NodeId, usize> = BTreeMap::new();
        let mut isolated = BTreeSet::new();
        for e in &self.events {
            match e.kind {
                EventKind::MisuseMatch => {
                    if let Some(s) = e.suspect {
                        last_match.insert(s, e.index);
                    }
                }
                EventKind::Vote => {
                    let (Some(tally), Some(verdict), Some(s)) = (e.tally, e.verdict, e.suspect) else {
                        return Err(AuditError::IncompleteVote { index: e.index });
                    };
                    if tally.verdict() != verdict {
                        return Err(AuditError::VerdictMismatch { index: e.index });
                    }
                    if verdict == Verdict::Intruder {
                        last_intruder_vote.insert(s, e.index);
                    }
                }
                EventKind::Isolation => {
                    let Some(s) = e.suspect else {
                        return Err(AuditError::UnjustifiedIsolation { index: e.index });
                    };
                    let justified = if e.signature.is_some() {
                        last_intruder_vote.contains_key(&s)
                    } else {
                        last_match.contains_key(&s)
                    };
                    if !justified {
                        return Err(AuditError::UnjustifiedIsolation { index: e.index });
                    }
                    if silent.contains(&s) {
                        return Err(AuditError::SilentIsolated(s));
                    }
                    if !isolated.insert(s) {
                        return Err(AuditError::DuplicateIsolation(s));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Write several runs' logs into one file, each row tagged with its seed.
    pub fn write_csv<W: io::Write>(logs: &[(u64, &EventLog)], out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(HEADER)?;
        for (seed, log) in logs {
            for e in &log.events {
                let verdict = e.verdict.map(|v| match v {
                    Verdict::Intruder => "intruder",
                    Verdict::Benign => "benign",
                });
                w.write_record([
                    seed.to_string(),
                    e.index.to_string(),
                    e.tick.to_string(),
                    e.kind.to_string(),
                    e.actor.0.to_string(),
                    opt(e.suspect.map(|s| s.0)),
                    opt(verdict),
                    e.db_version.to_string(),
                    opt(e.tally.map(|t| t.intruder)),
                    opt(e.tally.map(|t| t.benign)),
                    opt(e.tally.map(|t| t.abstain)),
                    opt(e.signature.map(|s| s.0)),
                    opt(e.decision_value),
                    opt(e.count),
                    e.note.clone().unwrap_or_default(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Parse logs written by [`EventLog::write_csv`], grouped by seed in file order.
    pub fn read_csv<R: io::Read>(input: R) -> Result<Vec<(u64, EventLog)>, AuditError> {
        let mut rdr = csv::Reader::from_reader(input);
        let mut logs: Vec<(u64, EventLog)> = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let bad = |message: String| AuditError::Malformed { row, message };
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            if rec.len() != HEADER.len() {
                return Err(bad(format!("expected {} columns, found {}", HEADER.len(), rec.len())));
            }
            fn num<T: FromStr>(s: &str) -> Result<Option<T>, String>
            where
                T::Err: fmt::Display,
            {
                if s.is_empty() {
                    Ok(None)
                } else {
                    s.parse().map(Some).map_err(|e: T::Err| format!("{s:?}: {e}"))
                }
            }
            let req = |s: &str| num::<u64>(s).and_then(|v| v.ok_or_else(|| "missing value".to_string()));
            let verdict = match &rec[6] {
                "" => None,
                "intruder" => Some(Verdict::Intruder),
                "benign" => Some(Verdict::Benign),
                other => return Err(bad(format!("unknown verdict {other:?}"))),
            };
            let votes = (
                num::<usize>(&rec[8]).map_err(bad)?,
                num::<usize>(&rec[9]).map_err(bad)?,
                num::<usize>(&rec[10]).map_err(bad)?,
            );
            let tally = match votes {
                (Some(intruder), Some(benign), Some(abstain)) => Some(Tally {
                    intruder,
                    benign,
                    abstain,
                }),
                (None, None, None) => None,
                _ => return Err(bad("partial tally".into())),
            };
            let seed = req(&rec[0]).map_err(bad)?;
            if logs.last().is_none_or(|(s, _)| *s != seed) {
                logs.push((seed, EventLog::default()));
            }
            let log = &mut logs.last_mut().expect("just pushed").1;
            log.events.push(SimEvent {
                index: req(&rec[1]).map_err(bad)? as usize,
                tick: req(&rec[2]).map_err(bad)?,
                kind: rec[3].parse().map_err(bad)?,
                actor: NodeId(req(&rec[4]).map_err(bad)? as u32),
                suspect: num::<u32>(&rec[5]).map_err(bad)?.map(NodeId),
                verdict,
                db_version: req(&rec[7]).map_err(bad)?,
                tally,
                signature: num::<u64>(&rec[11]).map_err(bad)?.map(SignatureId),
                decision_value: num::<f64>(&rec[12]).map_err(bad)?,
                count: num::<usize>(&rec[13]).map_err(bad)?,
                note: (!rec[14].is_empty()).then(|| rec[14].to_string()),
            });
        }
        Ok(logs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vote(log: &mut EventLog, suspect: u32, t: Tally, v: Verdict) {
        log.push_with(0, EventKind::Vote, NodeId(0), Some(NodeId(suspect)), |e| {
            e.tally = Some(t);
            e.verdict = Some(v);
        });
    }

    #[test]
    fn audit_catches_bad_logs() {
        let majority = Tally {
            intruder: 3,
            benign: 1,
            abstain: 0,
        };
        let mut log = EventLog::default();
        vote(&mut log, 5, majority, Verdict::Intruder);
        log.push_with(0, EventKind::Isolation, NodeId(0), Some(NodeId(5)), |e| {
            e.signature = Some(SignatureId(1 << 32))
        });
        assert_eq!(log.audit(&BTreeSet::new()), Ok(()));
        assert_eq!(
            log.audit(&[NodeId(5)].into()),
            Err(AuditError::SilentIsolated(NodeId(5)))
        );

        let mut wrong = EventLog::default();
        vote(&mut wrong, 5, majority, Verdict::Benign);
        assert_eq!(
            wrong.audit(&BTreeSet::new()),
            Err(AuditError::VerdictMismatch { index: 0 })
        );

        let mut bare = EventLog::default();
        bare.push(0, EventKind::Suspect, NodeId(1), Some(NodeId(5)));
        bare.push(0, EventKind::Isolation, NodeId(0), Some(NodeId(5)));
        assert_eq!(
            bare.audit(&BTreeSet::new()),
            Err(AuditError::UnjustifiedIsolation { index: 1 })
        );
    }

    #[test]
    fn csv_round_trip() {
        let mut log = EventLog::default();
        vote(
            &mut log,
            7,
            Tally {
                intruder: 1,
                benign: 2,
                abstain: 3,
            },
            Verdict::Benign,
        );
        log.push_with(2, EventKind::Suspect, NodeId(3), Some(NodeId(7)), |e| {
            e.decision_value = Some(-0.25);
            e.db_version = 4;
        });
        log.push_with(3, EventKind::RetrainFailed, NodeId(1), None, |e| {
            e.note = Some("no route, n3 to n9".into())
        });
        let mut other = EventLog::default();
        other.push(0, EventKind::NodeDead, NodeId(4), None);
        let mut buf = Vec::new();
        EventLog::write_csv(&[(9, &log), (2, &other)], &mut buf).unwrap();
        assert_eq!(EventLog::read_csv(&buf[..]).unwrap(), vec![(9, log), (2, other)]);
    }
}
