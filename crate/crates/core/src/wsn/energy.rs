use std::fmt;
use std::ops::{Add, AddAssign, Sub};

use serde::{Deserialize, Serialize};

use super::NodeId;

/// Energy in whole nanojoules, so ledger sums are exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct Energy(pub u64);

impl Energy {
    pub const ZERO: Energy = Energy(0);

    pub fn from_joules(j: f64) -> Energy {
        Energy((j.max(0.0) * 1e9).round() as u64)
    }

    pub fn from_microjoules(uj: f64) -> Energy {
        Energy((uj.max(0.0) * 1e3).round() as u64)
    }

    pub fn joules(self) -> f64 {
        self.0 as f64 / 1e9
    }

    pub fn nanojoules(self) -> u64 {
        self.0
    }
}

impl Add for Energy {
    type Output = Energy;
    fn add(self, rhs: Energy) -> Energy {
        Energy(self.0 + rhs.0)
    }
}

impl AddAssign for Energy {
    fn add_assign(&mut self, rhs: Energy) {
        self.0 += rhs.0;
    }
}

impl Sub for Energy {
    type Output = Energy;
    fn sub(self, rhs: Energy) -> Energy {
        Energy(self.0 - rhs.0)
    }
}

impl fmt::Display for Energy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} J", self.joules())
    }
}

/// Per-byte radio costs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyModel {
    pub tx_per_byte: Energy,
    pub rx_per_byte: Energy,
    /// Used only to express costs as instruction equivalents.
    pub instructions_per_bit: u64,
}

impl Default for EnergyModel {
    fn default() -> Self {
        EnergyModel {
            tx_per_byte: Energy::from_microjoules(50.0),
            rx_per_byte: Energy::from_microjoules(25.0),
            instructions_per_bit: 900,
        }
    }
}

impl EnergyModel {
    pub fn send_cost(&self, bytes: u64) -> Energy {
        Energy(bytes * self.tx_per_byte.0)
    }

    pub fn receive_cost(&self, bytes: u64) -> Energy {
        Energy(bytes * self.rx_per_byte.0)
    }

    pub fn instruction_equivalents(&self, bytes: u64) -> u64 {
        bytes * 8 * self.instructions_per_bit
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChargeKind {
    Send,
    Receive,
    /// Sensing or processing cost not tied to radio bytes.
    Drain,
}

impl fmt::Display for ChargeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChargeKind::Send => "send",
            ChargeKind::Receive => "receive",
            ChargeKind::Drain => "drain",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChargeOutcome {
    Charged,
    /// The node could not cover the cost; what it had left was taken and it is now dead.
    Depleted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Charge {
    pub node: NodeId,
    pub kind: ChargeKind,
    pub bytes: u64,
    pub energy: Energy,
    pub depleted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct NodeAccount {
    pub bytes_sent: u64,
    pub bytes_received: u64,
    pub spent: Energy,
}

/// Cumulative per-node totals plus the full charge log.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EnergyLedger {
    accounts: Vec<NodeAccount>,
    charges: Vec<Charge>,
}

impl EnergyLedger {
    pub fn new(nodes: usize) -> Self {
        EnergyLedger {
            accounts: vec![NodeAccount::default(); nodes],
            charges: Vec::new(),
        }
    }

    pub(super) fn record(&mut self, node: NodeId, kind: ChargeKind, bytes: u64, energy: Energy, depleted: bool) {
        let acct = &mut self.accounts[node.index()];
        match kind {
            ChargeKind::Send => acct.bytes_sent += bytes,
            ChargeKind::Receive => acct.bytes_received += bytes,
            ChargeKind::Drain => {}
        }
        acct.spent += energy;
        self.charges.push(Charge {
            node,
            kind,
            bytes,
            energy,
            depleted,
        });
    }

    pub fn account(&self, node: NodeId) -> NodeAccount {
        self.accounts.get(node.index()).copied().unwrap_or_default()
    }

    pub fn charges(&self) -> &[Charge] {
        &self.charges
    }

    pub fn total_spent(&self) -> Energy {
        self.accounts.iter().fold(Energy::ZERO, |acc, a| acc + a.spent)
    }

    pub fn total_bytes_sent(&self) -> u64 {
        self.accounts.iter().map(|a| a.bytes_sent).sum()
    }
}

/// Outcome of a multi-hop transmission.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Delivery {
    pub hops: usize,
    /// Payload bytes summed over every hop.
    pub bytes_on_air: u64,
    pub delivered: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_costs() {
        let m = EnergyModel::default();
        assert_eq!(m.send_cost(100), Energy::from_joules(0.005));
        assert_eq!(m.send_cost(0), Energy::ZERO);
        assert_eq!(m.receive_cost(100), Energy::from_joules(0.0025));
        assert_eq!(m.instruction_equivalents(100), 720_000);
    }

    #[test]
    fn unit_conversions() {
        assert_eq!(Energy::from_joules(1.5).nanojoules(), 1_500_000_000);
        assert_eq!(Energy::from_microjoules(50.0).nanojoules(), 50_000);
        assert_eq!(Energy(2_000_000_000).joules(), 2.0);
    }
}
