use std::collections::HashMap;

use super::topology::{Role, Topology};
use super::{NodeId, WsnError};

/// Radio links and which nodes can watch them. A node watches link `(u, v)`
/// when both endpoints lie within its range, so an agent also watches the
/// links to its own neighbours, other agents included.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkCoverage {
    links: Vec<(NodeId, NodeId)>,
    covers: Vec<Vec<usize>>,
}

impl LinkCoverage {
    pub fn new(topo: &Topology) -> Self {
        let mut links = Vec::new();
        let mut index = HashMap::new();
        for u in &topo.nodes {
            for v in topo.neighbors(u.id) {
                if u.id < v {
                    index.insert((u.id, v), links.len());
                    links.push((u.id, v));
                }
            }
        }
        let covers = topo
            .nodes
            .iter()
            .map(|m| {
                let mut near: Vec<NodeId> = topo.neighbors(m.id).collect();
                near.push(m.id);
                near.sort_unstable();
                let mut covered = Vec::new();
                for (i, &a) in near.iter().enumerate() {
                    for &b in &near[i + 1..] {
                        if let Some(&l) = index.get(&(a, b)) {
                            covered.push(l);
                        }
                    }
                }
                covered
            })
            .collect();
        LinkCoverage { links, covers }
    }

    pub fn links(&self) -> &[(NodeId, NodeId)] {
        &self.links
    }

    pub fn covered_by(&self, node: NodeId) -> &[usize] {
        &self.covers[node.index()]
    }

    /// Links watched by at least one of `monitors`, as a mask over [`Self::links`].
    pub fn mask(&self, monitors: &[NodeId]) -> Vec<bool> {
        let mut mask = vec![false; self.links.len()];
        for &m in monitors {
            self.mark(&mut mask, m);
        }
        mask
    }

    pub fn mark(&self, mask: &mut [bool], node: NodeId) {
        for &l in &self.covers[node.index()] {
            mask[l] = true;
        }
    }
}

/// Links `node` would newly cover given the current mask.
pub fn coverage_gain(cov: &LinkCoverage, mask: &[bool], node: NodeId) -> usize {
    cov.covered_by(node).iter().filter(|&&l| !mask[l]).count()
}

/// Promote `n` ordinary nodes to IDS agents by greedy maximum link coverage.
/// When `n` is at least the number of clusters, every cluster first gets one
/// agent. Equal gains go to the lower node id. Returns the promoted nodes in
/// promotion order.
pub fn place_ids(topo: &mut Topology, n: usize) -> Result<Vec<NodeId>, WsnError> {
    if n == 0 {
        return Err(WsnError::InvalidInput("at least one IDS agent is required".into()));
    }
    let mut candidates: Vec<NodeId> = topo
        .nodes
        .iter()
        .filter(|node| node.role == Role::Ordinary && node.is_active())
        .map(|node| node.id)
        .collect();
    if n > candidates.len() {
        return Err(WsnError::InvalidInput(format!(
            "{n} IDS agents requested but only {} candidate nodes",
            candidates.len()
        )));
    }
    let cov = LinkCoverage::new(topo);
    let mut mask = cov.mask(&topo.all_agents());
    let mut promoted = Vec::with_capacity(n);

    let best_of = |pool: &mut dyn Iterator<Item = NodeId>, mask: &[bool]| -> Option<NodeId> {
        let mut best: Option<(NodeId, usize)> = None;
        for c in pool {
            let g = coverage_gain(&cov, mask, c);
            if best.is_none_or(|(_, bg)| g > bg) {
                best = Some((c, g));
            }
        }
        best.map(|(c, _)| c)
    };

    if n >= topo.clusters.len() {
        for cluster in topo.clusters.clone() {
            if !topo.agents(cluster.id).is_empty() {
                continue;
            }
            let mut pool = candidates
                .iter()
                .copied()
                .filter(|&c| topo.nodes[c.index()].cluster == cluster.id);
            if let Some(pick) = best_of(&mut pool, &mask) {
                cov.mark(&mut mask, pick);
                candidates.retain(|&c| c != pick);
                promoted.push(pick);
            }
        }
    }
    while promoted.len() < n {
        let pick = best_of(&mut candidates.iter().copied(), &mask).expect("enough candidates");
        cov.mark(&mut mask, pick);
        candidates.retain(|&c| c != pick);
        promoted.push(pick);
    }
    for &p in &promoted {
        topo.nodes[p.index()].role = Role::IdsAgent;
    }
    Ok(promoted)
}
