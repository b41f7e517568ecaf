use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Category, DataError, LabeledDataset, SampleMeta};
use crate::svm::Sample;

/// Test records per IDS agent.
pub const TEST_SAMPLES_PER_AGENT: usize = 60;
/// Share of anomalous records in the test set.
pub const TEST_ANOMALY_SHARE: f64 = 0.42;

/// Training records drawn by each agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AgentQuota {
    pub normal: usize,
    pub anomalous: usize,
}

impl Default for AgentQuota {
    fn default() -> Self {
        AgentQuota {
            normal: 50,
            anomalous: 50,
        }
    }
}

/// Shape of a sampling plan.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanSpec {
    pub quota: AgentQuota,
    /// Share of each anomalous draw taken from Probe records; the rest is Dos.
    pub probe_fraction: f64,
    /// Number of disjoint agent draws to reserve.
    pub agent_slots: usize,
    pub test_size: usize,
    /// Anomalies per category (Dos, Probe) set aside for predefined signatures.
    pub holdout_per_category: usize,
}

impl Default for PlanSpec {
    fn default() -> Self {
        PlanSpec {
            quota: AgentQuota::default(),
            probe_fraction: 0.3,
            agent_slots: 0,
            test_size: 0,
            holdout_per_category: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Split {
    normal: usize,
    dos: usize,
    probe: usize,
}

impl Split {
    fn anomalous(n: usize, probe_fraction: f64) -> (usize, usize) {
        let probe = ((n as f64) * probe_fraction).round() as usize;
        let probe = probe.min(n);
        (n - probe, probe)
    }
}

/// Seeded, disjoint partition of a dataset into agent training draws, a test
/// set, a signature holdout and a remainder used as replay traffic.
///
/// Each class pool is shuffled once from the seed; agent `k` takes the `k`-th
/// block from the front, so a draw depends only on (corpus, seed, agent id).
#[derive(Debug, Clone)]
pub struct SamplingPlan<'a> {
    ds: &'a LabeledDataset,
    spec: PlanSpec,
    per_agent: Split,
    test: Split,
    normal: Vec<usize>,
    dos: Vec<usize>,
    probe: Vec<usize>,
}

impl<'a> SamplingPlan<'a> {
    pub fn new(ds: &'a LabeledDataset, seed: u64, spec: PlanSpec) -> Result<Self, DataError> {
        if !(0.0..=1.0).contains(&spec.probe_fraction) {
            return Err(DataError::Invalid(format!(
                "probe fraction {} outside [0, 1]",
                spec.probe_fraction
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pool = |cat: Category| -> Vec<usize> {
            ds.meta
                .iter()
                .enumerate()
                .filter(|(_, m)| m.category == cat)
                .map(|(i, _)| i)
                .collect()
        };
        let mut normal = pool(Category::Normal);
        let mut dos = pool(Category::Dos);
        let mut probe = pool(Category::Probe);
        normal.shuffle(&mut rng);
        dos.shuffle(&mut rng);
        probe.shuffle(&mut rng);

        let (agent_dos, agent_probe) = Split::anomalous(spec.quota.anomalous, spec.probe_fraction);
        let per_agent = Split {
            normal: spec.quota.normal,
            dos: agent_dos,
            probe: agent_probe,
        };
        let test_anom = ((spec.test_size as f64) * TEST_ANOMALY_SHARE).round() as usize;
        let (test_dos, test_probe) = Split::anomalous(test_anom, spec.probe_fraction);
        let test = Split {
            normal: spec.test_size - test_anom,
            dos: test_dos,
            probe: test_probe,
        };

        let plan = SamplingPlan {
            ds,
            per_agent,
            test,
            normal,
            dos,
            probe,
            spec,
        };
        plan.check_capacity()?;
        Ok(plan)
    }

    fn check_capacity(&self) -> Result<(), DataError> {
        let slots = self.spec.agent_slots;
        let hold = self.spec.holdout_per_category;
        let needs = [
            (
                "normal samples",
                slots * self.per_agent.normal + self.test.normal,
                self.normal.len(),
            ),
            (
                "dos samples",
                slots * self.per_agent.dos + self.test.dos + hold,
                self.dos.len(),
            ),
            (
                "probe samples",
                slots * self.per_agent.probe + self.test.probe + hold,
                self.probe.len(),
            ),
        ];
        for (what, needed, available) in needs {
            if needed > available {
                return Err(DataError::Insufficient {
                    what: what.to_string(),
                    needed,
                    available,
                });
            }
        }
        Ok(())
    }

    pub fn spec(&self) -> &PlanSpec {
        &self.spec
    }

    pub fn dataset(&self) -> &'a LabeledDataset {
        self.ds
    }

    fn agent_region(&self) -> Split {
        Split {
            normal: self.spec.agent_slots * self.per_agent.normal,
            dos: self.spec.agent_slots * self.per_agent.dos,
            probe: self.spec.agent_slots * self.per_agent.probe,
        }
    }

    fn collect(&self, ranges: [(&[usize], usize, usize); 3]) -> Vec<usize> {
        let mut idx: Vec<usize> = ranges
            .iter()
            .flat_map(|(pool, start, len)| pool[*start..*start + *len].iter().copied())
            .collect();
        idx.sort_unstable();
        idx
    }

    /// Dataset positions of agent `agent`'s training draw, ascending.
    pub fn agent_indices(&self, agent: usize) -> Result<Vec<usize>, DataError> {
        if agent >= self.spec.agent_slots {
            return Err(DataError::Insufficient {
                what: "agent draws".into(),
                needed: agent + 1,
                available: self.spec.agent_slots,
            });
        }
        let a = self.per_agent;
        Ok(self.collect([
            (&self.normal, agent * a.normal, a.normal),
            (&self.dos, agent * a.dos, a.dos),
            (&self.probe, agent * a.probe, a.probe),
        ]))
    }

    pub fn agent_training(&self, agent: usize) -> Result<Vec<Sample>, DataError> {
        Ok(self.materialize(&self.agent_indices(agent)?))
    }

    pub fn test_indices(&self) -> Vec<usize> {
        let r = self.agent_region();
        self.collect([
            (&self.normal, r.normal, self.test.normal),
            (&self.dos, r.dos, self.test.dos),
            (&self.probe, r.probe, self.test.probe),
        ])
    }

    pub fn test_set(&self) -> Vec<Sample> {
        self.materialize(&self.test_indices())
    }

    /// Held-out anomalies for seeding predefined signatures.
    pub fn holdout_indices(&self) -> Vec<usize> {
        let r = self.agent_region();
        let hold = self.spec.holdout_per_category;
        self.collect([
            (&self.normal, 0, 0),
            (&self.dos, r.dos + self.test.dos, hold),
            (&self.probe, r.probe + self.test.probe, hold),
        ])
    }

    /// Everything not claimed by agents, test or holdout, split by category.
    pub fn remainder(&self) -> Vec<(Category, Vec<usize>)> {
        let r = self.agent_region();
        let hold = self.spec.holdout_per_category;
        let mut out = Vec::new();
        for (cat, pool, used) in [
            (Category::Normal, &self.normal, r.normal + self.test.normal),
            (Category::Dos, &self.dos, r.dos + self.test.dos + hold),
            (Category::Probe, &self.probe, r.probe + self.test.probe + hold),
        ] {
            let mut rest = pool[used..].to_vec();
            rest.sort_unstable();
            out.push((cat, rest));
        }
        out
    }

    pub fn materialize(&self, indices: &[usize]) -> Vec<Sample> {
        indices.iter().map(|&i| self.ds.samples[i].clone()).collect()
    }

    pub fn meta(&self, index: usize) -> &SampleMeta {
        &self.ds.meta[index]
    }
}

/// Agent `agent_id`'s `n_normal + n_anom` training draw under `seed`.
pub fn sample_agent_training(
    ds: &LabeledDataset,
    n_normal: usize,
    n_anom: usize,
    agent_id: usize,
    seed: u64,
) -> Result<Vec<Sample>, DataError> {
    let spec = PlanSpec {
        quota: AgentQuota {
            normal: n_normal,
            anomalous: n_anom,
        },
        agent_slots: agent_id + 1,
        ..PlanSpec::default()
    };
    SamplingPlan::new(ds, seed, spec)?.agent_training(agent_id)
}

/// The `n_agents * 60` test records, disjoint from the default agent draws.
pub fn sample_test(ds: &LabeledDataset, n_agents: usize, seed: u64) -> Result<Vec<Sample>, DataError> {
    let spec = PlanSpec {
        agent_slots: n_agents,
        test_size: n_agents * TEST_SAMPLES_PER_AGENT,
        ..PlanSpec::default()
    };
    Ok(SamplingPlan::new(ds, seed, spec)?.test_set())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::synth::{generate_dataset, SynthConfig};
    use crate::svm::Label;
    use std::collections::BTreeSet;

    fn corpus() -> LabeledDataset {
        generate_dataset(
            &SynthConfig {
                records: 6000,
                ..SynthConfig::default()
            },
            11,
        )
    }

    #[test]
    fn eighteen_agents_draw_disjoint_sets() {
        let ds = corpus();
        let spec = PlanSpec {
            agent_slots: 18,
            test_size: 18 * TEST_SAMPLES_PER_AGENT,
            ..PlanSpec::default()
        };
        let plan = SamplingPlan::new(&ds, 5, spec).unwrap();
        let mut seen = BTreeSet::new();
        for a in 0..18 {
            let idx = plan.agent_indices(a).unwrap();
            assert_eq!(idx.len(), 100);
            let normals = idx.iter().filter(|&&i| ds.samples[i].y == Label::Positive).count();
            assert_eq!(normals, 50);
            assert!(idx.iter().any(|&i| ds.meta[i].category == Category::Probe));
            assert!(idx.iter().any(|&i| ds.meta[i].category == Category::Dos));
            seen.extend(idx);
        }
        assert_eq!(seen.len(), 1800);
        let test = plan.test_indices();
        assert_eq!(test.len(), 1080);
        let anomalies = test.iter().filter(|&&i| ds.samples[i].y == Label::Negative).count();
        assert_eq!(anomalies, 454);
        assert!(test.iter().all(|i| !seen.contains(i)));
    }

    #[test]
    fn draws_are_deterministic_and_independent_of_slot_count() {
        let ds = corpus();
        let a = sample_agent_training(&ds, 50, 50, 3, 9).unwrap();
        let b = sample_agent_training(&ds, 50, 50, 3, 9).unwrap();
        assert_eq!(a, b);
        let plan = SamplingPlan::new(
            &ds,
            9,
            PlanSpec {
                agent_slots: 10,
                ..PlanSpec::default()
            },
        )
        .unwrap();
        assert_eq!(plan.agent_training(3).unwrap(), a);
        let other_seed = sample_agent_training(&ds, 50, 50, 3, 10).unwrap();
        assert_ne!(a, other_seed);
    }

    #[test]
    fn exhausted_corpus_is_reported() {
        let mut ds = corpus();
        let keep: Vec<usize> = {
            let mut normals = 0;
            (0..ds.len())
                .filter(|&i| {
                    if ds.meta[i].category == Category::Normal {
                        normals += 1;
                        normals <= 40
                    } else {
                        true
                    }
                })
                .collect()
        };
        ds.samples = keep.iter().map(|&i| ds.samples[i].clone()).collect();
        ds.meta = keep.iter().map(|&i| ds.meta[i].clone()).collect();
        let err = sample_agent_training(&ds, 50, 50, 0, 1).unwrap_err();
        assert!(
            matches!(
                err,
                DataError::Insufficient {
                    needed: 50,
                    available: 40,
                    ..
                }
            ),
            "{err}"
        );
    }

    #[test]
    fn test_set_sizes() {
        let ds = corpus();
        assert_eq!(sample_test(&ds, 18, 2).unwrap().len(), 1080);
        assert!(sample_test(&ds, 0, 2).unwrap().is_empty());
    }

    #[test]
    fn regions_partition_the_pools() {
        let ds = corpus();
        let spec = PlanSpec {
            agent_slots: 4,
            test_size: 240,
            holdout_per_category: 30,
            ..PlanSpec::default()
        };
        let plan = SamplingPlan::new(&ds, 77, spec).unwrap();
        let mut all = Vec::new();
        for a in 0..4 {
            all.extend(plan.agent_indices(a).unwrap());
        }
        all.extend(plan.test_indices());
        all.extend(plan.holdout_indices());
        for (_, rest) in plan.remainder() {
            all.extend(rest);
        }
        let unique: BTreeSet<usize> = all.iter().copied().collect();
        assert_eq!(unique.len(), all.len());
        assert_eq!(unique.len(), ds.len());
    }
}
