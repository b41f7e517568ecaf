use super::placement::{coverage_gain, LinkCoverage};
use super::topology::{Role, Topology};
use super::{ClusterId, NodeId, WsnError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReelectionEvent {
    Replaced {
        cluster: ClusterId,
        demoted: Vec<NodeId>,
        promoted: Vec<NodeId>,
        /// Old agents kept because too few eligible replacements existed.
        retained: Vec<NodeId>,
    },
    /// The trigger fired but no member had half its energy left.
    Degraded { cluster: ClusterId, agents: Vec<NodeId> },
}

impl ReelectionEvent {
    pub fn cluster(&self) -> ClusterId {
        match self {
            ReelectionEvent::Replaced { cluster, .. } | ReelectionEvent::Degraded { cluster, .. } => *cluster,
        }
    }
}

/// True when at least `ceil(3/4 * agents)` of the agents are below half energy.
pub fn reelection_due(agents: usize, below_half: usize) -> bool {
    agents > 0 && below_half * 4 >= 3 * agents
}

/// Check the cluster's agents and, if the trigger fires, replace them.
///
/// Replacements are eligible ordinary members with at least half their
/// initial energy, picked greedily by new link coverage, then residual
/// energy, then lower id.
pub fn reelect(topo: &mut Topology, cluster: ClusterId) -> Result<Option<ReelectionEvent>, WsnError> {
    let info = topo.cluster(cluster)?.clone();
    let old: Vec<NodeId> = topo
        .agents(cluster)
        .into_iter()
        .filter(|&a| !topo.nodes[a.index()].isolated)
        .collect();
    if old.is_empty() {
        return Err(WsnError::InvalidInput(format!("cluster {cluster} has no IDS agent")));
    }
    let below = old
        .iter()
        .filter(|&&a| !topo.nodes[a.index()].has_half_energy())
        .count();
    if !reelection_due(old.len(), below) {
        return Ok(None);
    }

    let mut candidates: Vec<NodeId> = info
        .members
        .iter()
        .copied()
        .filter(|&m| {
            let n = &topo.nodes[m.index()];
            n.role == Role::Ordinary && n.is_active() && n.has_half_energy()
        })
        .collect();
    if candidates.is_empty() {
        return Ok(Some(ReelectionEvent::Degraded { cluster, agents: old }));
    }

    let cov = LinkCoverage::new(topo);
    let others: Vec<NodeId> = topo
        .nodes
        .iter()
        .filter(|n| n.role == Role::IdsAgent && n.cluster != cluster && n.is_active())
        .map(|n| n.id)
        .collect();
    let mut mask = cov.mask(&others);
    let mut promoted = Vec::new();
    while promoted.len() < old.len() && !candidates.is_empty() {
        let (pos, _) = candidates
            .iter()
            .enumerate()
            .max_by(|(_, &a), (_, &b)| {
                let ka = (coverage_gain(&cov, &mask, a), topo.nodes[a.index()].energy());
                let kb = (coverage_gain(&cov, &mask, b), topo.nodes[b.index()].energy());
                ka.cmp(&kb).then(b.cmp(&a))
            })
            .expect("non-empty");
        let pick = candidates.remove(pos);
        cov.mark(&mut mask, pick);
        promoted.push(pick);
    }

    let shortfall = old.len() - promoted.len();
    let retained: Vec<NodeId> = old
        .iter()
        .copied()
        .filter(|&a| topo.nodes[a.index()].has_half_energy() && topo.nodes[a.index()].is_active())
        .take(shortfall)
        .collect();
    let demoted: Vec<NodeId> = old.iter().copied().filter(|a| !retained.contains(a)).collect();
    for &d in &demoted {
        topo.nodes[d.index()].role = Role::Ordinary;
    }
    for &p in &promoted {
        topo.nodes[p.index()].role = Role::IdsAgent;
    }
    Ok(Some(ReelectionEvent::Replaced {
        cluster,
        demoted,
        promoted,
        retained,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trigger_uses_ceiling_of_three_quarters() {
        assert!(reelection_due(4, 3));
        assert!(!reelection_due(4, 2));
        assert!(reelection_due(1, 1));
        assert!(!reelection_due(1, 0));
        // ceil(3 * 5 / 4) = 4
        assert!(!reelection_due(5, 3));
        assert!(reelection_due(5, 4));
        // ceil(3 * 6 / 4) = 5
        assert!(!reelection_due(6, 4));
        assert!(reelection_due(6, 5));
        assert!(!reelection_due(0, 0));
    }
}
