use std::collections::VecDeque;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::energy::{ChargeOutcome, Energy};
use super::{ClusterId, NodeId, WsnError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn distance(self, other: Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Ordinary,
    IdsAgent,
    ClusterHead,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Ordinary => "ordinary",
            Role::IdsAgent => "ids",
            Role::ClusterHead => "head",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensorNode {
    pub id: NodeId,
    pub position: Position,
    pub role: Role,
    pub cluster: ClusterId,
    pub isolated: bool,
    energy: Energy,
    initial_energy: Energy,
    dead: bool,
}

impl SensorNode {
    pub fn new(id: NodeId, position: Position, role: Role, cluster: ClusterId, initial_energy: Energy) -> Self {
        SensorNode {
            id,
            position,
            role,
            cluster,
            isolated: false,
            energy: initial_energy,
            initial_energy,
            dead: initial_energy == Energy::ZERO,
        }
    }

    pub fn energy(&self) -> Energy {
        self.energy
    }

    pub fn initial_energy(&self) -> Energy {
        self.initial_energy
    }

    /// Remaining energy as a fraction of the initial budget.
    pub fn energy_fraction(&self) -> f64 {
        if self.initial_energy == Energy::ZERO {
            0.0
        } else {
            self.energy.0 as f64 / self.initial_energy.0 as f64
        }
    }

    /// Whether at least half of the initial budget remains, in exact units.
    pub fn has_half_energy(&self) -> bool {
        u128::from(self.energy.0) * 2 >= u128::from(self.initial_energy.0)
    }

    pub fn is_dead(&self) -> bool {
        self.dead
    }

    /// Alive and not isolated.
    pub fn is_active(&self) -> bool {
        !self.dead && !self.isolated
    }

    pub(super) fn consume(&mut self, cost: Energy) -> (Energy, ChargeOutcome) {
        if cost <= self.energy {
            self.energy = self.energy - cost;
            (cost, ChargeOutcome::Charged)
        } else {
            let taken = self.energy;
            self.energy = Energy::ZERO;
            self.dead = true;
            (taken, ChargeOutcome::Depleted)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cluster {
    pub id: ClusterId,
    pub head: NodeId,
    /// Non-head members in id order.
    pub members: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopologyConfig {
    pub n_nodes: usize,
    /// Square deployment area in m².
    pub area: f64,
    /// Radio range in metres.
    pub comm_range: f64,
    pub n_clusters: usize,
    pub node_energy: Energy,
    pub head_energy: Energy,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        TopologyConfig {
            n_nodes: 100,
            area: 10_000.0,
            comm_range: 33.6,
            n_clusters: 3,
            node_energy: Energy::from_joules(2.0),
            head_energy: Energy::from_joules(10.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub nodes: Vec<SensorNode>,
    pub clusters: Vec<Cluster>,
    pub comm_range: f64,
    /// Nodes per m².
    pub density: f64,
}

impl Topology {
    pub fn node(&self, id: NodeId) -> Result<&SensorNode, WsnError> {
        self.nodes.get(id.index()).ok_or(WsnError::UnknownNode(id))
    }

    pub fn node_mut(&mut self, id: NodeId) -> Result<&mut SensorNode, WsnError> {
        self.nodes.get_mut(id.index()).ok_or(WsnError::UnknownNode(id))
    }

    pub fn cluster(&self, id: ClusterId) -> Result<&Cluster, WsnError> {
        self.clusters
            .iter()
            .find(|c| c.id == id)
            .ok_or(WsnError::UnknownCluster(id))
    }

    pub fn in_range(&self, a: NodeId, b: NodeId) -> bool {
        self.nodes[a.index()].position.distance(self.nodes[b.index()].position) <= self.comm_range
    }

    pub fn distance(&self, a: NodeId, b: NodeId) -> f64 {
        self.nodes[a.index()].position.distance(self.nodes[b.index()].position)
    }

    pub fn neighbors(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        let p = self.nodes[id.index()].position;
        let r = self.comm_range;
        self.nodes
            .iter()
            .filter(move |n| n.id != id && n.position.distance(p) <= r)
            .map(|n| n.id)
    }

    pub fn heads(&self) -> Vec<NodeId> {
        self.clusters.iter().map(|c| c.head).collect()
    }

    pub fn head_of(&self, node: NodeId) -> Result<NodeId, WsnError> {
        let cid = self.node(node)?.cluster;
        Ok(self.cluster(cid)?.head)
    }

    /// IDS agents of a cluster in id order, including isolated or dead ones.
    pub fn agents(&self, cluster: ClusterId) -> Vec<NodeId> {
        self.nodes
            .iter()
            .filter(|n| n.cluster == cluster && n.role == Role::IdsAgent)
            .map(|n| n.id)
            .collect()
    }

    /// Live, non-isolated IDS agents of a cluster in id order.
    pub fn active_agents(&self, cluster: ClusterId) -> Vec<NodeId> {
        self.nodes
            .iter()
            .filter(|n| n.cluster == cluster && n.role == Role::IdsAgent && n.is_active())
            .map(|n| n.id)
            .collect()
    }

    pub fn all_agents(&self) -> Vec<NodeId> {
        self.nodes
            .iter()
            .filter(|n| n.role == Role::IdsAgent)
            .map(|n| n.id)
            .collect()
    }

    /// Breadth-first shortest hop path from `from` to `to` through nodes
    /// accepted by `usable` (endpoints are always usable). Neighbours are
    /// expanded in id order, so the path is deterministic.
    pub fn route<F>(&self, from: NodeId, to: NodeId, usable: F) -> Option<Vec<NodeId>>
    where
        F: Fn(&SensorNode) -> bool,
    {
        if from == to {
            return Some(vec![from]);
        }
        let n = self.nodes.len();
        let mut prev = vec![usize::MAX; n];
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([from.index()]);
        seen[from.index()] = true;
        while let Some(u) = queue.pop_front() {
            for v in self.neighbors(NodeId(u as u32)) {
                let vi = v.index();
                if seen[vi] || (v != to && !usable(&self.nodes[vi])) {
                    continue;
                }
                seen[vi] = true;
                prev[vi] = u;
                if v == to {
                    let mut path = vec![to];
                    let mut cur = vi;
                    while prev[cur] != usize::MAX {
                        cur = prev[cur];
                        path.push(NodeId(cur as u32));
                    }
                    path.reverse();
                    return Some(path);
                }
                queue.push_back(vi);
            }
        }
        None
    }
}

/// Uniform random placement in a square, greedy farthest-point heads and
/// nearest-head membership.
pub fn build_topology(cfg: &TopologyConfig, seed: u64) -> Result<Topology, WsnError> {
    if cfg.n_nodes == 0 {
        return Err(WsnError::InvalidInput("network needs at least one node".into()));
    }
    if cfg.n_clusters == 0 || cfg.n_clusters > cfg.n_nodes {
        return Err(WsnError::InvalidInput(format!(
            "cluster count {} must be in 1..={}",
            cfg.n_clusters, cfg.n_nodes
        )));
    }
    if !(cfg.area > 0.0 && cfg.area.is_finite()) {
        return Err(WsnError::InvalidInput(format!("area {} must be positive", cfg.area)));
    }
    if !(cfg.comm_range > 0.0 && cfg.comm_range.is_finite()) {
        return Err(WsnError::InvalidInput(format!(
            "range {} must be positive",
            cfg.comm_range
        )));
    }
    if cfg.head_energy <= cfg.node_energy {
        return Err(WsnError::InvalidInput(
            "cluster heads need more initial energy than ordinary nodes".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = cfg.area.sqrt();
    let positions: Vec<Position> = (0..cfg.n_nodes)
        .map(|_| Position {
            x: rng.random_range(0.0..side),
            y: rng.random_range(0.0..side),
        })
        .collect();

    let mut heads = vec![rng.random_range(0..cfg.n_nodes)];
    let mut nearest: Vec<f64> = positions.iter().map(|p| p.distance(positions[heads[0]])).collect();
    while heads.len() < cfg.n_clusters {
        let mut best = None;
        for (i, &d) in nearest.iter().enumerate() {
            if heads.contains(&i) {
                continue;
            }
            if best.is_none_or(|(_, bd)| d > bd) {
                best = Some((i, d));
            }
        }
        let (h, _) = best.expect("fewer heads than nodes");
        heads.push(h);
        for (i, slot) in nearest.iter_mut().enumerate() {
            *slot = slot.min(positions[i].distance(positions[h]));
        }
    }
    heads.sort_unstable();

    let mut nodes = Vec::with_capacity(cfg.n_nodes);
    let mut clusters: Vec<Cluster> = heads
        .iter()
        .enumerate()
        .map(|(c, &h)| Cluster {
            id: ClusterId(c as u32),
            head: NodeId(h as u32),
            members: Vec::new(),
        })
        .collect();
    for (i, &p) in positions.iter().enumerate() {
        let id = NodeId(i as u32);
        if let Some(c) = heads.iter().position(|&h| h == i) {
            nodes.push(SensorNode::new(
                id,
                p,
                Role::ClusterHead,
                ClusterId(c as u32),
                cfg.head_energy,
            ));
            continue;
        }
        let c = heads
            .iter()
            .enumerate()
            .min_by(|(_, &a), (_, &b)| p.distance(positions[a]).total_cmp(&p.distance(positions[b])))
            .map(|(c, _)| c)
            .expect("at least one head");
        clusters[c].members.push(id);
        nodes.push(SensorNode::new(
            id,
            p,
            Role::Ordinary,
            ClusterId(c as u32),
            cfg.node_energy,
        ));
    }

    let topo = Topology {
        nodes,
        clusters,
        comm_range: cfg.comm_range,
        density: cfg.n_nodes as f64 / cfg.area,
    };
    for c in &topo.clusters {
        for &m in &c.members {
            if topo.route(m, c.head, |_| true).is_none() {
                return Err(WsnError::Unreachable(m));
            }
        }
    }
    Ok(topo)
}
