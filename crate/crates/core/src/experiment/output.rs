use std::io;

use serde::Serialize;

use super::{ComparisonRow, MetricsRow};
use crate::dataset::FeatureRanking;
use crate::sim::EventLog;
use crate::wsn::Network;

/// Per-node energy and traffic totals at the end of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyRow {
    pub seed: u64,
    pub node: u32,
    pub role: String,
    pub cluster: u32,
    pub initial_j: f64,
    pub residual_j: f64,
    pub spent_j: f64,
    pub bytes_sent: u64,
    pub bytes_received: u64,
    pub isolated: bool,
    pub dead: bool,
}

impl EnergyRow {
    pub fn collect(seed: u64, net: &Network) -> Vec<EnergyRow> {
        net.topology()
            .nodes
            .iter()
            .map(|n| {
                let acct = net.ledger().account(n.id);
                EnergyRow {
                    seed,
                    node: n.id.0,
                    role: n.role.to_string(),
                    cluster: n.cluster.0,
                    initial_j: n.initial_energy().joules(),
                    residual_j: n.energy().joules(),
                    spent_j: acct.spent.joules(),
                    bytes_sent: acct.bytes_sent,
                    bytes_received: acct.bytes_received,
                    isolated: n.isolated,
                    dead: n.is_dead(),
                }
            })
            .collect()
    }
}

/// One line of `ranking.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankingCsvRow {
    pub n_features: usize,
    /// Space-separated field names.
    pub features: String,
    pub removed: String,
    pub accuracy: f64,
    pub detection_rate: Option<f64>,
}

fn write_rows<W: io::Write, T: Serialize>(out: W, rows: &[T]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_metrics<W: io::Write>(out: W, rows: &[MetricsRow]) -> Result<(), csv::Error> {
    write_rows(out, rows)
}

pub fn write_comparison<W: io::Write>(out: W, rows: &[ComparisonRow]) -> Result<(), csv::Error> {
    write_rows(out, rows)
}

pub fn write_energy<W: io::Write>(out: W, rows: &[EnergyRow]) -> Result<(), csv::Error> {
    write_rows(out, rows)
}

pub fn write_events<W: io::Write>(out: W, logs: &[(u64, &EventLog)]) -> Result<(), csv::Error> {
    EventLog::write_csv(logs, out)
}

pub fn write_ranking<W: io::Write>(out: W, ranking: &FeatureRanking) -> Result<(), csv::Error> {
    let rows: Vec<RankingCsvRow> = ranking
        .rows
        .iter()
        .map(|r| RankingCsvRow {
            n_features: r.features.len(),
            features: r.features.iter().map(|f| f.name()).collect::<Vec<_>>().join(" "),
            removed: r.removed.map(|f| f.name().to_string()).unwrap_or_default(),
            accuracy: r.score.accuracy,
            detection_rate: r.score.detection_rate,
        })
        .collect();
    write_rows(out, &rows)
}
