mod common;

use common::fv;
use proptest::prelude::*;
use wsn_hids::agent::{
    cooperate, derive_signature, predefined_signatures, Alert, AnomalyOutcome, IdsAgent, IntrusionReport,
    MisuseOutcome, Signature, SignatureDb, SignatureId, SignatureOrigin, Verdict, Vote, EVIDENCE_THRESHOLD,
    EVIDENCE_WINDOW, MIN_RADIUS, MIN_SIGNATURE_SUPPORT,
};
use wsn_hids::dataset::Category;
use wsn_hids::svm::{train, KernelParams, Label, Sample, SvmModel};
use wsn_hids::wsn::{ClusterId, NodeId};

/// One-dimensional model: small values are normal, large ones anomalous.
fn threshold_model() -> SvmModel {
    let data: Vec<Sample> = (0..10)
        .map(|i| {
            let x = i as f64 / 9.0;
            let y = if x < 0.5 { Label::Positive } else { Label::Negative };
            Sample::new(i, fv(&[x]), y)
        })
        .collect();
    train(&data, 100.0, KernelParams::rbf(0.5)).unwrap()
}

fn armed(node: u32) -> IdsAgent {
    let mut a = IdsAgent::new(NodeId(node), SignatureDb::new());
    a.install_model(threshold_model());
    a
}

const NORMAL: f64 = 0.05;
const ATTACK: f64 = 0.95;

fn feed(agent: &mut IdsAgent, source: u32, pattern: &[bool]) {
    for (t, &bad) in pattern.iter().enumerate() {
        let x = if bad { ATTACK } else { NORMAL };
        agent.observe(NodeId(source), t as u64, fv(&[x])).unwrap();
    }
}

fn sig(id: u64, centre: f64, radius: f64) -> Signature {
    Signature::new(
        SignatureId(id),
        fv(&[centre]),
        radius,
        SignatureOrigin::Predefined,
        None,
    )
    .unwrap()
}

#[test]
fn single_anomaly_is_not_enough_to_report() {
    let mut a = armed(1);
    assert!(matches!(a.observe(NodeId(2), 0, fv(&[ATTACK])).unwrap(), AnomalyOutcome::Suspect(v) if v < 0.0));
    assert!(!a.is_suspicious(NodeId(2)));
    assert_eq!(a.vote(NodeId(2)), Vote::Benign);
    assert_eq!(a.vote(NodeId(3)), Vote::Abstain);
}

#[test]
fn window_forgets_old_records() {
    let mut a = armed(1);
    feed(&mut a, 2, &[true, true, true, true]);
    assert!(a.is_suspicious(NodeId(2)));
    feed(&mut a, 2, &[false, false]);
    assert_eq!(a.history(NodeId(2)).unwrap().len(), EVIDENCE_WINDOW);
    assert!(!a.is_suspicious(NodeId(2)));
}

#[test]
fn cluster_vote_counts_abstainers_in_the_denominator() {
    // Two agents saw the suspect misbehave, three never saw it.
    let mut agents: Vec<IdsAgent> = (1..=5).map(armed).collect();
    for a in &mut agents[..2] {
        feed(a, 9, &[true; 5]);
    }
    let polled: Vec<&IdsAgent> = agents.iter().collect();
    let (verdict, votes) = cooperate(ClusterId(0), &polled, NodeId(9)).unwrap();
    assert_eq!(verdict, Verdict::Benign);
    assert_eq!(votes.iter().filter(|(_, v)| *v == Vote::Abstain).count(), 3);

    for a in &mut agents[2..4] {
        feed(a, 9, &[true; 5]);
    }
    let polled: Vec<&IdsAgent> = agents.iter().collect();
    assert_eq!(
        cooperate(ClusterId(0), &polled, NodeId(9)).unwrap().0,
        Verdict::Intruder
    );
}

#[test]
fn alerts_apply_once() {
    let mut a = armed(1);
    let learned = Signature::new(
        SignatureId::learned(NodeId(40), 1),
        fv(&[0.9]),
        0.1,
        SignatureOrigin::Learned,
        None,
    )
    .unwrap();
    let alert = Alert {
        malicious: NodeId(7),
        new_signature: Some(learned),
        issuing_head: NodeId(40),
    };
    assert!(a.apply_alert(&alert));
    assert_eq!(a.db().version(), 1);
    assert!(a.is_isolated(NodeId(7)));
    assert!(!a.apply_alert(&alert));
    assert_eq!(a.db().version(), 1);

    let plain = Alert {
        malicious: NodeId(8),
        new_signature: None,
        issuing_head: NodeId(40),
    };
    assert!(a.apply_alert(&plain));
    assert_eq!(a.db().version(), 1);
    assert_eq!(a.db().learned(), 1);
}

#[test]
fn nearest_covering_signature_wins_with_ties_to_lower_id() {
    let db = SignatureDb::with_signatures([sig(3, 0.5, 0.3), sig(2, 0.7, 0.1), sig(5, 0.3, 0.2)]).unwrap();
    assert_eq!(db.version(), 0);
    assert_eq!(db.match_features(&fv(&[0.68])), MisuseOutcome::Matched(SignatureId(2)));
    // 0.4 is 0.1 from both id 3 and id 5.
    assert_eq!(db.match_features(&fv(&[0.4])), MisuseOutcome::Matched(SignatureId(3)));
    assert_eq!(db.match_features(&fv(&[0.95])), MisuseOutcome::Unmatched);
    assert!(SignatureDb::with_signatures([sig(1, 0.1, 0.1), sig(1, 0.2, 0.1)]).is_err());
}

#[test]
fn learned_ids_never_collide() {
    let a = SignatureId::learned(NodeId(0), 1);
    let b = SignatureId::learned(NodeId(1), 1);
    let c = SignatureId::learned(NodeId(0), 2);
    assert!(a != b && a != c && b != c);
    assert!(a.0 >= 1 << 32);
}

#[test]
fn reports_must_be_anomalous() {
    assert!(IntrusionReport::new(NodeId(1), NodeId(2), fv(&[0.0]), 0.3, 0).is_err());
    assert!(IntrusionReport::new(NodeId(1), NodeId(2), fv(&[0.0]), 0.0, 0).is_err());
    assert!(IntrusionReport::new(NodeId(1), NodeId(2), fv(&[0.0]), -0.3, 0).is_ok());
    assert!(derive_signature(SignatureId(1), &[]).is_err());
}

#[test]
fn predefined_signatures_skip_rare_and_normal_names() {
    let points: Vec<_> = (0..20).map(|i| fv(&[0.8 + i as f64 * 0.005])).collect();
    let mut samples: Vec<(&_, Category, &str)> = points.iter().map(|x| (x, Category::Dos, "smurf")).collect();
    samples.extend(
        points
            .iter()
            .take(MIN_SIGNATURE_SUPPORT - 1)
            .map(|x| (x, Category::Probe, "satan")),
    );
    samples.extend(points.iter().map(|x| (x, Category::Normal, "normal")));
    let sigs = predefined_signatures(samples).unwrap();
    assert_eq!(sigs.len(), 1);
    assert_eq!(sigs[0].id, SignatureId(1));
    assert_eq!(sigs[0].attack_hint, Some(Category::Dos));
    let covered = points.iter().filter(|x| sigs[0].covers(x).is_some()).count();
    assert_eq!(covered, 18);
}

proptest! {
    #[test]
    fn suspicion_follows_the_last_window(pattern in proptest::collection::vec(any::<bool>(), 1..30)) {
        let mut a = armed(1);
        feed(&mut a, 2, &pattern);
        let tail = &pattern[pattern.len().saturating_sub(EVIDENCE_WINDOW)..];
        let bad = tail.iter().filter(|b| **b).count();
        prop_assert_eq!(a.is_suspicious(NodeId(2)), bad >= EVIDENCE_THRESHOLD);
        let expected = if bad >= EVIDENCE_THRESHOLD { Vote::Intruder } else { Vote::Benign };
        prop_assert_eq!(a.vote(NodeId(2)), expected);
        let window = a.history(NodeId(2)).unwrap();
        prop_assert_eq!(window.len(), tail.len());
        prop_assert!(window.iter().zip(tail).all(|(o, b)| o.anomalous == *b));
    }

    #[test]
    fn derived_signature_covers_every_report(xs in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..12)) {
        let reports: Vec<IntrusionReport> = xs
            .iter()
            .enumerate()
            .map(|(t, &(a, b))| IntrusionReport::new(NodeId(1), NodeId(2), fv(&[a, b]), -1.0, t as u64).unwrap())
            .collect();
        let s = derive_signature(SignatureId(9), &reports).unwrap();
        prop_assert!(s.radius >= MIN_RADIUS);
        for r in &reports {
            prop_assert!(s.covers(&r.features).is_some());
        }
        let mut db = SignatureDb::new();
        prop_assert!(db.insert(s.clone()));
        prop_assert!(!db.insert(s));
        prop_assert_eq!(db.version(), 1);
    }
}
