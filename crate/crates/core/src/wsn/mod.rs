//! Clustered sensor-network substrate: topology, IDS placement, energy
//! accounting and IDS re-election.

mod energy;
mod placement;
mod reelect;
mod topology;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use energy::{Charge, ChargeKind, ChargeOutcome, Delivery, Energy, EnergyLedger, EnergyModel, NodeAccount};
pub use placement::{coverage_gain, place_ids, LinkCoverage};
pub use reelect::{reelect, reelection_due, ReelectionEvent};
pub use topology::{build_topology, Cluster, Position, Role, SensorNode, Topology, TopologyConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WsnError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("node {0} cannot reach its cluster head")]
    Unreachable(NodeId),
    #[error("no route from {from} to {to}")]
    NoRoute { from: NodeId, to: NodeId },
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("unknown cluster {0}")]
    UnknownCluster(ClusterId),
    #[error("node {0} is isolated")]
    Isolated(NodeId),
    #[error("node {0} has no energy left")]
    Dead(NodeId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ClusterId(pub u32);

impl fmt::Display for ClusterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c{}", self.0)
    }
}

/// Average IDS count for range `r` (metres) and density `d` (nodes per m²):
/// `round(1.6 r² d)`, at least 1 when both are positive.
pub fn ids_count(r: f64, d: f64) -> Result<usize, WsnError> {
    if !(r >= 0.0 && d >= 0.0) || !r.is_finite() || !d.is_finite() {
        return Err(WsnError::InvalidInput(format!(
            "range {r} and density {d} must be finite and non-negative"
        )));
    }
    let n = (1.6 * r * r * d).round() as usize;
    if r > 0.0 && d > 0.0 {
        Ok(n.max(1))
    } else {
        Ok(n)
    }
}

/// Topology plus the energy state every transmission is charged against.
#[derive(Debug, Clone)]
pub struct Network {
    topology: Topology,
    model: EnergyModel,
    ledger: EnergyLedger,
}

impl Network {
    pub fn new(topology: Topology, model: EnergyModel) -> Self {
        let ledger = EnergyLedger::new(topology.nodes.len());
        Network {
            topology,
            model,
            ledger,
        }
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    /// Roles and isolation flags may change; energy only moves through charges.
    pub fn topology_mut(&mut self) -> &mut Topology {
        &mut self.topology
    }

    pub fn model(&self) -> &EnergyModel {
        &self.model
    }

    pub fn ledger(&self) -> &EnergyLedger {
        &self.ledger
    }

    pub fn node(&self, id: NodeId) -> Result<&SensorNode, WsnError> {
        self.topology.node(id)
    }

    /// Charge `bytes` of radio traffic to `node`.
    pub fn charge(&mut self, node: NodeId, bytes: u64, kind: ChargeKind) -> Result<ChargeOutcome, WsnError> {
        let cost = match kind {
            ChargeKind::Send => self.model.send_cost(bytes),
            ChargeKind::Receive => self.model.receive_cost(bytes),
            ChargeKind::Drain => {
                return Err(WsnError::InvalidInput("drain charges take an energy amount".into()));
            }
        };
        self.apply_charge(node, bytes, kind, cost)
    }

    /// Charge a non-radio cost (sensing, processing) directly in energy units.
    pub fn drain(&mut self, node: NodeId, amount: Energy) -> Result<ChargeOutcome, WsnError> {
        self.apply_charge(node, 0, ChargeKind::Drain, amount)
    }

    fn apply_charge(
        &mut self,
        id: NodeId,
        bytes: u64,
        kind: ChargeKind,
        cost: Energy,
    ) -> Result<ChargeOutcome, WsnError> {
        let node = self.topology.node_mut(id)?;
        if node.isolated {
            return Err(WsnError::Isolated(id));
        }
        if node.is_dead() {
            return Err(WsnError::Dead(id));
        }
        if bytes == 0 && cost == Energy::ZERO {
            return Ok(ChargeOutcome::Charged);
        }
        let (taken, outcome) = node.consume(cost);
        self.ledger
            .record(id, kind, bytes, taken, outcome == ChargeOutcome::Depleted);
        Ok(outcome)
    }

    /// Hop path over live, non-isolated nodes; endpoints included.
    pub fn route(&self, from: NodeId, to: NodeId) -> Option<Vec<NodeId>> {
        self.topology.route(from, to, |n| n.is_active())
    }

    /// Send `bytes` from `from` to `to` along the shortest hop path,
    /// charging every sender and receiver on the way.
    pub fn transmit(&mut self, from: NodeId, to: NodeId, bytes: u64) -> Result<Delivery, WsnError> {
        for end in [from, to] {
            let n = self.node(end)?;
            if n.isolated {
                return Err(WsnError::Isolated(end));
            }
            if n.is_dead() {
                return Err(WsnError::Dead(end));
            }
        }
        let path = self.route(from, to).ok_or(WsnError::NoRoute { from, to })?;
        let hops = path.len().saturating_sub(1);
        let mut delivered = true;
        for pair in path.windows(2) {
            let tx = self.charge(pair[0], bytes, ChargeKind::Send)?;
            let rx = self.charge(pair[1], bytes, ChargeKind::Receive)?;
            if tx == ChargeOutcome::Depleted || rx == ChargeOutcome::Depleted {
                delivered = false;
                break;
            }
        }
        Ok(Delivery {
            hops,
            bytes_on_air: bytes * hops as u64,
            delivered,
        })
    }

    /// One-hop broadcast: the sender pays once, every live receiver pays for
    /// reception. Dead or isolated receivers hear nothing and are skipped.
    /// All receivers must be within range.
    pub fn transmit_local(&mut self, from: NodeId, to: &[NodeId], bytes: u64) -> Result<Delivery, WsnError> {
        for &t in to {
            if !self.topology.in_range(from, t) {
                return Err(WsnError::NoRoute { from, to: t });
            }
        }
        let mut delivered = self.charge(from, bytes, ChargeKind::Send)? == ChargeOutcome::Charged;
        for &t in to {
            if !self.node(t)?.is_active() {
                continue;
            }
            if self.charge(t, bytes, ChargeKind::Receive)? == ChargeOutcome::Depleted {
                delivered = false;
            }
        }
        Ok(Delivery {
            hops: 1,
            bytes_on_air: bytes,
            delivered,
        })
    }

    /// Reach `targets` from `from`: one broadcast for those in range, routed
    /// unicasts for the rest. Returns the targets actually reached.
    pub fn multicast(&mut self, from: NodeId, targets: &[NodeId], bytes: u64) -> BTreeSet<NodeId> {
        let mut reached = BTreeSet::new();
        let (near, far): (Vec<NodeId>, Vec<NodeId>) = targets
            .iter()
            .copied()
            .filter(|&t| self.node(t).is_ok_and(|n| n.is_active()))
            .partition(|&t| self.topology.in_range(from, t));
        if !near.is_empty() && matches!(self.transmit_local(from, &near, bytes), Ok(d) if d.delivered) {
            reached.extend(near);
        }
        for t in far {
            if matches!(self.transmit(from, t, bytes), Ok(d) if d.delivered) {
                reached.insert(t);
            }
        }
        reached
    }

    /// `node,role,cluster,x,y,energy_j,initial_j,isolated,dead`
    pub fn write_nodes_csv<W: std::io::Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "node",
            "role",
            "cluster",
            "x",
            "y",
            "energy_j",
            "initial_j",
            "isolated",
            "dead",
        ])?;
        for n in &self.topology.nodes {
            w.write_record([
                n.id.0.to_string(),
                n.role.to_string(),
                n.cluster.0.to_string(),
                n.position.x.to_string(),
                n.position.y.to_string(),
                n.energy().joules().to_string(),
                n.initial_energy().joules().to_string(),
                n.isolated.to_string(),
                n.is_dead().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// One row per ledger charge, in order.
    pub fn write_charges_csv<W: std::io::Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["seq", "node", "kind", "bytes", "energy_j", "depleted"])?;
        for (seq, c) in self.ledger.charges().iter().enumerate() {
            w.write_record([
                seq.to_string(),
                c.node.0.to_string(),
                c.kind.to_string(),
                c.bytes.to_string(),
                c.energy.joules().to_string(),
                c.depleted.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_count_examples() {
        assert_eq!(ids_count(1.0, 10.0).unwrap(), 16);
        assert_eq!(ids_count(0.0, 5.0).unwrap(), 0);
        assert_eq!(ids_count(1.5, 8.0).unwrap(), 29);
        assert_eq!(ids_count(0.1, 0.1).unwrap(), 1);
        assert_eq!(ids_count(33.6, 0.01).unwrap(), 18);
        assert!(ids_count(-1.0, 1.0).is_err());
        assert!(ids_count(1.0, -0.5).is_err());
        assert!(ids_count(f64::NAN, 1.0).is_err());
    }
}
