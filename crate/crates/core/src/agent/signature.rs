use std::collections::BTreeMap;
use std::fmt;

use super::{AgentError, IntrusionReport};
use crate::dataset::Category;
use crate::svm::FeatureVector;
use crate::wsn::NodeId;

/// Smallest radius a learned signature may have, in normalized units.
pub const MIN_RADIUS: f64 = 0.05;

/// Samples an attack name needs before it gets a predefined signature.
pub const MIN_SIGNATURE_SUPPORT: usize = 5;

/// Quantile of centroid distances used as a predefined signature's radius.
pub const PREDEFINED_QUANTILE: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SignatureId(pub u64);

impl SignatureId {
    /// Id of the `seq`-th signature learned by `head`. Distinct heads never
    /// collide with each other or with predefined ids below 2^32.
    pub fn learned(head: NodeId, seq: u32) -> SignatureId {
        SignatureId(((u64::from(head.0) + 1) << 32) | u64::from(seq))
    }
}

impl fmt::Display for SignatureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignatureOrigin {
    Predefined,
    Learned,
}

/// A ball in normalized feature space.
#[derive(Debug, Clone, PartialEq)]
pub struct Signature {
    pub id: SignatureId,
    pub centroid: FeatureVector,
    pub radius: f64,
    pub origin: SignatureOrigin,
    pub attack_hint: Option<Category>,
}

impl Signature {
    pub fn new(
        id: SignatureId,
        centroid: FeatureVector,
        radius: f64,
        origin: SignatureOrigin,
        attack_hint: Option<Category>,
    ) -> Result<Signature, AgentError> {
        if !(radius >= 0.0 && radius.is_finite()) {
            return Err(AgentError::InvalidSignature(format!(
                "radius {radius} must be finite and non-negative"
            )));
        }
        Ok(Signature {
            id,
            centroid,
            radius,
            origin,
            attack_hint,
        })
    }

    /// Distance from `x` to the centroid when `x` lies inside the ball.
    pub fn covers(&self, x: &FeatureVector) -> Option<f64> {
        let d = self.centroid.distance(x).ok()?;
        (d <= self.radius).then_some(d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MisuseOutcome {
    Matched(SignatureId),
    Unmatched,
}

/// Versioned signature store; every node holds one.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SignatureDb {
    signatures: BTreeMap<SignatureId, Signature>,
    version: u64,
}

impl SignatureDb {
    pub fn new() -> Self {
        SignatureDb::default()
    }

    /// Initial store at version 0.
    pub fn with_signatures<I: IntoIterator<Item = Signature>>(signatures: I) -> Result<Self, AgentError> {
        let mut db = SignatureDb::new();
        for sig in signatures {
            if db.signatures.contains_key(&sig.id) {
                return Err(AgentError::DuplicateSignature(sig.id));
            }
            db.signatures.insert(sig.id, sig);
        }
        Ok(db)
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn len(&self) -> usize {
        self.signatures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signatures.is_empty()
    }

    pub fn get(&self, id: SignatureId) -> Option<&Signature> {
        self.signatures.get(&id)
    }

    pub fn contains(&self, id: SignatureId) -> bool {
        self.signatures.contains_key(&id)
    }

    /// Signatures in id order.
    pub fn signatures(&self) -> impl Iterator<Item = &Signature> {
        self.signatures.values()
    }

    pub fn learned(&self) -> usize {
        self.signatures
            .values()
            .filter(|s| s.origin == SignatureOrigin::Learned)
            .count()
    }

    /// Add a signature and bump the version. An id already present is left
    /// alone and reported as `false`.
    pub fn insert(&mut self, sig: Signature) -> bool {
        if self.signatures.contains_key(&sig.id) {
            return false;
        }
        self.signatures.insert(sig.id, sig);
        self.version += 1;
        true
    }

    /// Nearest covering signature; equal distances go to the lower id.
    pub fn match_features(&self, x: &FeatureVector) -> MisuseOutcome {
        let mut best: Option<(f64, SignatureId)> = None;
        for sig in self.signatures.values() {
            if let Some(d) = sig.covers(x) {
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, sig.id));
                }
            }
        }
        best.map_or(MisuseOutcome::Unmatched, |(_, id)| MisuseOutcome::Matched(id))
    }
}

pub fn misuse_check(db: &SignatureDb, report: &IntrusionReport) -> MisuseOutcome {
    db.match_features(&report.features)
}

fn centroid<'a, I>(points: I, dim: usize) -> Result<FeatureVector, AgentError>
where
    I: IntoIterator<Item = &'a FeatureVector>,
{
    let mut sum = vec![0.0; dim];
    let mut n = 0usize;
    for p in points {
        if p.dim() != dim {
            return Err(AgentError::DimensionMismatch {
                expected: dim,
                found: p.dim(),
            });
        }
        for (s, v) in sum.iter_mut().zip(p.as_slice()) {
            *s += v;
        }
        n += 1;
    }
    let n = n as f64;
    Ok(FeatureVector::new(sum.into_iter().map(|s| s / n).collect())?)
}

/// Learned signature from one suspect's reports: their mean, with a radius
/// reaching the farthest report, at least [`MIN_RADIUS`].
pub fn derive_signature(id: SignatureId, reports: &[IntrusionReport]) -> Result<Signature, AgentError> {
    let first = reports.first().ok_or(AgentError::NoReports)?;
    let center = centroid(reports.iter().map(|r| &r.features), first.features.dim())?;
    let mut radius = MIN_RADIUS;
    for r in reports {
        radius = radius.max(center.distance(&r.features)?);
    }
    Signature::new(id, center, radius, SignatureOrigin::Learned, None)
}

/// One predefined signature per attack name with at least
/// [`MIN_SIGNATURE_SUPPORT`] samples, radius at the 90th-percentile centroid
/// distance. Ids start at 1 in order of attack name.
pub fn predefined_signatures<'a, I>(samples: I) -> Result<Vec<Signature>, AgentError>
where
    I: IntoIterator<Item = (&'a FeatureVector, Category, &'a str)>,
{
    let mut groups: BTreeMap<&str, (Category, Vec<&FeatureVector>)> = BTreeMap::new();
    for (x, cat, name) in samples {
        if cat == Category::Normal {
            continue;
        }
        groups.entry(name).or_insert_with(|| (cat, Vec::new())).1.push(x);
    }
    let mut out = Vec::new();
    for (_, (cat, points)) in groups {
        if points.len() < MIN_SIGNATURE_SUPPORT {
            continue;
        }
        let center = centroid(points.iter().copied(), points[0].dim())?;
        let mut dists = points
            .iter()
            .map(|p| center.distance(p))
            .collect::<Result<Vec<f64>, _>>()?;
        dists.sort_by(f64::total_cmp);
        let rank = ((PREDEFINED_QUANTILE * dists.len() as f64).ceil() as usize).clamp(1, dists.len());
        let id = SignatureId(out.len() as u64 + 1);
        out.push(Signature::new(
            id,
            center,
            dists[rank - 1],
            SignatureOrigin::Predefined,
            Some(cat),
        )?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(v: &[f64]) -> FeatureVector {
        FeatureVector::new(v.to_vec()).unwrap()
    }

    fn sig(id: u64, c: &[f64], r: f64) -> Signature {
        Signature::new(SignatureId(id), fv(c), r, SignatureOrigin::Predefined, None).unwrap()
    }

    fn report(x: &[f64]) -> IntrusionReport {
        IntrusionReport::new(NodeId(1), NodeId(2), fv(x), -1.0, 0).unwrap()
    }

    #[test]
    fn matching_rules() {
        let empty = SignatureDb::new();
        assert_eq!(misuse_check(&empty, &report(&[0.5, 0.5])), MisuseOutcome::Unmatched);

        let db = SignatureDb::with_signatures([sig(1, &[0.5, 0.5], 0.1)]).unwrap();
        assert_eq!(
            misuse_check(&db, &report(&[0.5, 0.5])),
            MisuseOutcome::Matched(SignatureId(1))
        );
        assert_eq!(misuse_check(&db, &report(&[0.7, 0.5])), MisuseOutcome::Unmatched);

        let tie = SignatureDb::with_signatures([sig(7, &[0.0, 0.0], 1.0), sig(3, &[1.0, 0.0], 1.0)]).unwrap();
        assert_eq!(
            misuse_check(&tie, &report(&[0.5, 0.0])),
            MisuseOutcome::Matched(SignatureId(3))
        );

        let nearest = SignatureDb::with_signatures([sig(1, &[0.0, 0.0], 1.0), sig(2, &[0.4, 0.0], 1.0)]).unwrap();
        assert_eq!(
            misuse_check(&nearest, &report(&[0.5, 0.0])),
            MisuseOutcome::Matched(SignatureId(2))
        );
    }

    #[test]
    fn derived_geometry() {
        let one = derive_signature(SignatureId(9), &[report(&[0.2, 0.3])]).unwrap();
        assert_eq!(one.centroid, fv(&[0.2, 0.3]));
        assert_eq!(one.radius, MIN_RADIUS);
        assert_eq!(one.origin, SignatureOrigin::Learned);

        let two = derive_signature(SignatureId(9), &[report(&[0.0, 0.0]), report(&[0.4, 0.0])]).unwrap();
        assert_eq!(two.centroid, fv(&[0.2, 0.0]));
        assert!((two.radius - 0.2).abs() < 1e-12);

        assert!(matches!(
            derive_signature(SignatureId(1), &[]),
            Err(AgentError::NoReports)
        ));
    }

    #[test]
    fn db_versioning() {
        let mut db = SignatureDb::with_signatures([sig(1, &[0.0], 0.1)]).unwrap();
        assert_eq!(db.version(), 0);
        assert!(db.insert(sig(2, &[1.0], 0.1)));
        assert!(!db.insert(sig(2, &[1.0], 0.1)));
        assert_eq!(db.version(), 1);
        assert!(matches!(
            SignatureDb::with_signatures([sig(1, &[0.0], 0.1), sig(1, &[0.5], 0.1)]),
            Err(AgentError::DuplicateSignature(SignatureId(1)))
        ));
        assert!(Signature::new(SignatureId(1), fv(&[0.0]), -0.1, SignatureOrigin::Learned, None).is_err());
    }

    #[test]
    fn learned_ids_are_disjoint() {
        assert_ne!(SignatureId::learned(NodeId(0), 1), SignatureId::learned(NodeId(1), 1));
        assert!(SignatureId::learned(NodeId(0), 0).0 >= 1 << 32);
    }

    #[test]
    fn predefined_per_attack_name() {
        let pts: Vec<FeatureVector> = (0..10).map(|i| fv(&[i as f64 / 10.0, 0.0])).collect();
        let few = fv(&[0.9, 0.9]);
        let mut input: Vec<(&FeatureVector, Category, &str)> =
            pts.iter().map(|p| (p, Category::Dos, "smurf")).collect();
        input.push((&few, Category::Probe, "nmap"));
        input.push((&pts[0], Category::Normal, "normal"));
        let sigs = predefined_signatures(input).unwrap();
        assert_eq!(sigs.len(), 1);
        assert_eq!(sigs[0].id, SignatureId(1));
        assert_eq!(sigs[0].attack_hint, Some(Category::Dos));
        assert!((sigs[0].centroid.as_slice()[0] - 0.45).abs() < 1e-12);
        // distances 0.45, 0.35, .. sorted: 0.05,0.05,0.15,0.15,0.25,0.25,0.35,0.35,0.45,0.45; 9th is 0.45
        assert!((sigs[0].radius - 0.45).abs() < 1e-12);
    }
}
