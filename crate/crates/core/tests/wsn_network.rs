use std::collections::BTreeSet;

use proptest::prelude::*;
use wsn_hids::wsn::{
    build_topology, ids_count, place_ids, reelect, Energy, EnergyModel, Network, NodeId, ReelectionEvent, Role,
    TopologyConfig,
};

fn config(n_nodes: usize, n_clusters: usize) -> TopologyConfig {
    TopologyConfig {
        n_nodes,
        n_clusters,
        ..TopologyConfig::default()
    }
}

#[test]
fn default_deployment_gets_eighteen_agents() {
    let topo = build_topology(&TopologyConfig::default(), 1).unwrap();
    assert!((topo.density - 0.01).abs() < 1e-12);
    assert_eq!(ids_count(topo.comm_range, topo.density).unwrap(), 18);
}

#[test]
fn ids_count_rounds_the_neighbourhood_estimate() {
    // 1.6 r² d for a handful of hand-computed points.
    assert_eq!(ids_count(10.0, 0.01).unwrap(), 2); // 1.6
    assert_eq!(ids_count(20.0, 0.01).unwrap(), 6); // 6.4
    assert_eq!(ids_count(25.0, 0.02).unwrap(), 20); // 20.0
    assert_eq!(ids_count(1.0, 0.01).unwrap(), 1); // 0.016, floored at one
    assert_eq!(ids_count(0.0, 0.01).unwrap(), 0);
    assert!(ids_count(-1.0, 0.01).is_err());
    assert!(ids_count(10.0, f64::NAN).is_err());
}

#[test]
fn invalid_deployments_are_rejected() {
    assert!(build_topology(&config(0, 1), 1).is_err());
    assert!(build_topology(&config(10, 0), 1).is_err());
    assert!(build_topology(&config(3, 4), 1).is_err());
    let flat = TopologyConfig {
        head_energy: Energy::from_joules(2.0),
        ..TopologyConfig::default()
    };
    assert!(build_topology(&flat, 1).is_err());
}

#[test]
fn routed_transmission_charges_every_hop() {
    let mut net = Network::new(
        build_topology(&TopologyConfig::default(), 4).unwrap(),
        EnergyModel::default(),
    );
    let (from, to) = (NodeId(0), NodeId(57));
    let path = net.route(from, to).expect("default deployment is connected enough");
    let d = net.transmit(from, to, 100).unwrap();
    assert!(d.delivered);
    assert_eq!(d.hops, path.len() - 1);
    assert_eq!(d.bytes_on_air, 100 * d.hops as u64);
    let model = EnergyModel::default();
    for (i, node) in path.iter().enumerate() {
        let acct = net.ledger().account(*node);
        let sends = if i + 1 < path.len() { 1 } else { 0 };
        let receives = if i > 0 { 1 } else { 0 };
        assert_eq!(
            acct.spent,
            Energy(sends * model.send_cost(100).0 + receives * model.receive_cost(100).0)
        );
    }
}

#[test]
fn exhausted_sender_is_reported_dead() {
    let topo = build_topology(&TopologyConfig::default(), 2).unwrap();
    let mut net = Network::new(topo, EnergyModel::default());
    let a = NodeId(10);
    let b = net.topology().neighbors(a).next().expect("a neighbour");
    let budget = net.node(a).unwrap().energy();
    net.drain(a, Energy(budget.0 - 1)).unwrap();
    let d = net.transmit(a, b, 10).unwrap();
    assert!(!d.delivered);
    assert!(net.node(a).unwrap().is_dead());
    assert!(net.transmit(a, b, 10).is_err());
}

#[test]
fn reelection_replaces_drained_agents_with_fresh_members() {
    let mut net = Network::new(
        build_topology(&TopologyConfig::default(), 3).unwrap(),
        EnergyModel::default(),
    );
    place_ids(net.topology_mut(), 9).unwrap();
    let cluster = net.topology().clusters[0].id;
    let old = net.topology().agents(cluster);
    for &a in &old {
        let n = net.node(a).unwrap();
        // One unit past half, in exact units.
        let excess = n.energy().0 - n.initial_energy().0 / 2 + 1;
        net.drain(a, Energy(excess)).unwrap();
        assert!(!net.node(a).unwrap().has_half_energy());
    }
    match reelect(net.topology_mut(), cluster).unwrap() {
        Some(ReelectionEvent::Replaced {
            demoted,
            promoted,
            retained,
            ..
        }) => {
            assert_eq!(demoted, old);
            assert_eq!(promoted.len(), old.len());
            assert!(retained.is_empty());
            for p in &promoted {
                let n = net.node(*p).unwrap();
                assert_eq!(n.role, Role::IdsAgent);
                assert!(n.has_half_energy());
            }
        }
        other => panic!("expected a replacement, got {other:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn clusters_partition_the_ordinary_nodes(seed in 0u64..1000, n_nodes in 10usize..120, n_clusters in 1usize..6) {
        // A range spanning the square keeps every member reachable.
        let cfg = TopologyConfig { comm_range: 150.0, ..config(n_nodes, n_clusters) };
        let topo = build_topology(&cfg, seed).unwrap();
        prop_assert_eq!(topo.nodes.len(), n_nodes);
        prop_assert_eq!(topo.clusters.len(), n_clusters);
        let side = cfg.area.sqrt();
        for n in &topo.nodes {
            prop_assert!(n.position.x >= 0.0 && n.position.x < side);
            prop_assert!(n.position.y >= 0.0 && n.position.y < side);
        }
        let heads: BTreeSet<NodeId> = topo.heads().into_iter().collect();
        prop_assert_eq!(heads.len(), n_clusters);
        let mut seen = BTreeSet::new();
        for c in &topo.clusters {
            prop_assert_eq!(topo.node(c.head).unwrap().role, Role::ClusterHead);
            prop_assert!(c.members.windows(2).all(|w| w[0] < w[1]));
            for m in &c.members {
                prop_assert!(!heads.contains(m));
                prop_assert_eq!(topo.node(*m).unwrap().cluster, c.id);
                prop_assert!(seen.insert(*m));
            }
        }
        prop_assert_eq!(seen.len() + n_clusters, n_nodes);
        prop_assert_eq!(build_topology(&cfg, seed).unwrap(), topo);
    }

    #[test]
    fn placement_promotes_exactly_n_ordinary_nodes(seed in 0u64..1000, n in 1usize..30) {
        let mut topo = build_topology(&TopologyConfig::default(), seed).unwrap();
        let promoted = place_ids(&mut topo, n).unwrap();
        prop_assert_eq!(promoted.len(), n);
        let unique: BTreeSet<NodeId> = promoted.iter().copied().collect();
        prop_assert_eq!(unique.len(), n);
        prop_assert_eq!(topo.all_agents().len(), n);
        for h in topo.heads() {
            prop_assert!(!unique.contains(&h));
        }
        if n >= topo.clusters.len() {
            for c in &topo.clusters {
                prop_assert!(!topo.agents(c.id).is_empty());
            }
        }
    }

    // Energy spent according to the ledger equals the drop in residual energy.
    #[test]
    fn ledger_matches_residual_energy(seed in 0u64..500, sends in proptest::collection::vec((0u32..100, 0u32..100, 1u64..400), 1..40)) {
        let mut net = Network::new(build_topology(&TopologyConfig::default(), seed).unwrap(), EnergyModel::default());
        for (a, b, bytes) in sends {
            let _ = net.transmit(NodeId(a), NodeId(b), bytes);
        }
        let dropped: u64 = net.topology().nodes.iter().map(|n| n.initial_energy().0 - n.energy().0).sum();
        prop_assert_eq!(net.ledger().total_spent().0, dropped);
        for n in &net.topology().nodes {
            prop_assert_eq!(net.ledger().account(n.id).spent.0, n.initial_energy().0 - n.energy().0);
        }
    }
}
