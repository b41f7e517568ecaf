//! Batch experiments: build a network, train the agents to consensus, and
//! score the result. Every run is a pure function of (corpus, config, seed).

mod config;
mod output;

use std::collections::BTreeSet;
use std::path::Path;
use std::thread;

use serde::Serialize;
use thiserror::Error;

pub use config::{AttackTraffic, ConfigError, ExperimentConfig, IdsCount};
pub use output::{
    write_comparison, write_energy, write_events, write_metrics, write_ranking, EnergyRow, RankingCsvRow,
};

use crate::agent::{predefined_signatures, AgentError, SignatureDb};
use crate::dataset::{
    load_dataset, rank_features, AgentQuota, Category, CategoryMap, DataError, FeatureId, FeatureRanking,
    LabeledDataset, Normalization, PlanSpec, SamplingPlan, Score, TEST_SAMPLES_PER_AGENT,
};
use crate::dist::{
    communication_report, global_exchange, local_train, CommReport, DistConfig, DistError, GlobalOutcome,
    TrainingSession,
};
use crate::metrics::{compute_metrics, Confusion, MetricsError, Rates};
use crate::sim::{SimConfig, SimError, SimOutcome, SimSetup, Simulation};
use crate::svm::{Sample, SampleId, SvmError, SvmModel};
use crate::wsn::{build_topology, ids_count, place_ids, Network, NodeId, WsnError};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("writing results: {0}")]
    Output(#[from] csv::Error),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Wsn(#[from] WsnError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Svm(#[from] SvmError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

impl ExperimentError {
    /// 1 for configuration problems, 2 for data and I/O, 3 for protocol or solver failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) => 1,
            ExperimentError::Data(_) | ExperimentError::Output(_) => 2,
            _ => 3,
        }
    }
}

/// Load the configured corpus projected onto `features`.
pub fn load_corpus(cfg: &ExperimentConfig, features: &[FeatureId]) -> Result<LabeledDataset, ExperimentError> {
    let path = cfg.dataset.as_deref().ok_or(ConfigError::MissingDataset)?;
    let categories = match &cfg.category_map {
        Some(p) => CategoryMap::parse(&std::fs::read_to_string(p).map_err(DataError::from)?)?,
        None => CategoryMap::default(),
    };
    Ok(load_dataset(path, features, &categories)?)
}

/// Number of IDS agents for `topo`: the override, else the configured count.
pub fn resolve_ids(cfg: &ExperimentConfig, density: f64, n_override: Option<usize>) -> Result<usize, ExperimentError> {
    match n_override {
        Some(n) => Ok(n),
        None => match cfg.n_ids {
            IdsCount::Fixed(n) => Ok(n),
            IdsCount::Auto => Ok(ids_count(cfg.comm_range, density)?.max(1)),
        },
    }
}

/// A deployed network with each agent's training draw and the shared test set.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub seed: u64,
    pub net: Network,
    /// IDS agents in ascending id order; agent `k` owns draw `k`.
    pub agents: Vec<NodeId>,
    pub draws: Vec<Vec<Sample>>,
    /// Extra normalized draws for retraining after re-election.
    pub spare_draws: Vec<Vec<Sample>>,
    pub test: Vec<Sample>,
    pub normalization: Normalization,
    /// Dataset positions of the signature holdout.
    pub holdout: Vec<usize>,
    /// Dataset positions nobody trained or tested on, by category.
    pub remainder: Vec<(Category, Vec<usize>)>,
}

impl Prepared {
    pub fn n_ids(&self) -> usize {
        self.agents.len()
    }

    pub fn draw_of(&self, node: NodeId) -> Option<&[Sample]> {
        self.agents
            .iter()
            .position(|&a| a == node)
            .map(|k| self.draws[k].as_slice())
    }
}

/// Build the topology, place the agents and sample their data. `ds` must
/// already be projected onto the training features.
pub fn prepare(
    ds: &LabeledDataset,
    cfg: &ExperimentConfig,
    seed: u64,
    n_override: Option<usize>,
    spares: usize,
    holdout_per_category: usize,
) -> Result<Prepared, ExperimentError> {
    let mut topo = build_topology(&cfg.topology_config(), seed)?;
    let n = resolve_ids(cfg, topo.density, n_override)?;
    place_ids(&mut topo, n)?;
    let agents = topo.all_agents();
    let spec = PlanSpec {
        quota: AgentQuota {
            normal: cfg.normal_per_agent,
            anomalous: cfg.anomalous_per_agent,
        },
        probe_fraction: cfg.probe_fraction,
        agent_slots: agents.len() + spares,
        test_size: agents.len() * TEST_SAMPLES_PER_AGENT,
        holdout_per_category,
    };
    let plan = SamplingPlan::new(ds, seed, spec)?;
    let raw = (0..agents.len() + spares)
        .map(|k| plan.agent_training(k))
        .collect::<Result<Vec<_>, _>>()?;
    let normalization = Normalization::fit(raw[..agents.len()].iter().flatten())
        .ok_or_else(|| DataError::Invalid("agent draws are empty".into()))?;
    let scale = |v: &[Sample]| v.iter().map(|s| normalization.apply_sample(s)).collect::<Vec<_>>();
    let mut draws: Vec<Vec<Sample>> = raw.iter().map(|d| scale(d)).collect();
    let spare_draws = draws.split_off(agents.len());
    let test = scale(&plan.test_set());
    Ok(Prepared {
        seed,
        net: Network::new(topo, cfg.energy_model()),
        agents,
        draws,
        spare_draws,
        test,
        holdout: plan.holdout_indices(),
        remainder: plan.remainder(),
        normalization,
    })
}

/// Converged cluster sessions, the global exchange and its byte accounting.
#[derive(Debug, Clone)]
pub struct Trained {
    pub sessions: Vec<TrainingSession>,
    pub global: GlobalOutcome,
    pub report: CommReport,
}

impl Trained {
    /// The model of the lowest-id agent, where every test is scored.
    pub fn evaluator(&self) -> (NodeId, &SvmModel) {
        self.global.first_model().expect("every run has at least one agent")
    }

    pub fn max_exchange_passes(&self) -> usize {
        self.sessions.iter().map(|s| s.exchange_passes()).max().unwrap_or(0)
    }
}

/// One training session per cluster that has agents, run to consensus over
/// the network, then the global exchange.
pub fn train_distributed(prep: &mut Prepared, dist: &DistConfig) -> Result<Trained, ExperimentError> {
    let mut sessions = Vec::new();
    for cluster in prep.net.topology().clusters.clone() {
        let members = prep.net.topology().agents(cluster.id);
        if members.is_empty() {
            continue;
        }
        let participants = members
            .into_iter()
            .map(|node| (node, prep.draw_of(node).expect("agent has a draw").to_vec()))
            .collect();
        sessions.push(TrainingSession::start(cluster.id, cluster.head, participants, dist)?);
    }
    for s in &mut sessions {
        s.cluster_pass(&mut prep.net)?;
    }
    let global = global_exchange(&mut sessions, &mut prep.net, dist)?;
    let report = communication_report(&sessions, Some(&global), &dist.wire);
    Ok(Trained {
        sessions,
        global,
        report,
    })
}

pub fn evaluate(model: &SvmModel, test: &[Sample]) -> Result<(Rates, Confusion), ExperimentError> {
    let preds = test
        .iter()
        .map(|s| model.decide(&s.x).map(|(label, _)| (s.y, label)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(compute_metrics(preds)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    TrainEval,
    Simulate,
}

/// One line of `metrics.csv`. Rates are percentages; an absent rate means
/// its class never occurred.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRow {
    pub scenario: Scenario,
    pub seed: u64,
    pub n_ids: usize,
    pub accuracy: f64,
    pub detection_rate: Option<f64>,
    pub false_positive_rate: Option<f64>,
    pub detected: u64,
    pub missed: u64,
    pub passed: u64,
    pub false_alarms: u64,
    pub bytes_distributed: u64,
    pub bytes_centralized_equivalent: u64,
    pub bytes_ratio: f64,
    pub bytes_on_air: u64,
    pub exchange_passes: usize,
    pub signatures_learned: usize,
    pub nodes_isolated: usize,
    pub reelections: usize,
    pub energy_spent_j: f64,
}

impl MetricsRow {
    fn new(
        scenario: Scenario,
        seed: u64,
        n_ids: usize,
        confusion: &Confusion,
        trained: &Trained,
        net: &Network,
    ) -> Result<Self, ExperimentError> {
        let rates = confusion.rates()?;
        Ok(MetricsRow {
            scenario,
            seed,
            n_ids,
            accuracy: rates.accuracy,
            detection_rate: rates.detection_rate,
            false_positive_rate: rates.false_positive_rate,
            detected: confusion.detected,
            missed: confusion.missed,
            passed: confusion.passed,
            false_alarms: confusion.false_alarms,
            bytes_distributed: trained.report.distributed_bytes,
            bytes_centralized_equivalent: trained.report.centralized_bytes,
            bytes_ratio: trained.report.ratio(),
            bytes_on_air: trained.report.on_air_bytes,
            exchange_passes: trained.max_exchange_passes(),
            signatures_learned: 0,
            nodes_isolated: 0,
            reelections: 0,
            energy_spent_j: net.ledger().total_spent().joules(),
        })
    }

    pub fn confusion(&self) -> Confusion {
        Confusion {
            detected: self.detected,
            missed: self.missed,
            passed: self.passed,
            false_alarms: self.false_alarms,
        }
    }
}

/// Run `f` for every seed on its own thread; results come back in seed order.
fn per_seed<T, F>(seeds: &[u64], f: F) -> Result<Vec<T>, ExperimentError>
where
    T: Send,
    F: Fn(u64) -> Result<T, ExperimentError> + Sync,
{
    let workers = thread::available_parallelism().map_or(1, |n| n.get()).max(1);
    let mut out = Vec::with_capacity(seeds.len());
    for chunk in seeds.chunks(workers) {
        let results: Vec<_> = thread::scope(|scope| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|&seed| {
                    let f = &f;
                    scope.spawn(move || f(seed))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("seed worker panicked"))
                .collect()
        });
        for r in results {
            out.push(r?);
        }
    }
    Ok(out)
}

/// Distributed training and evaluation for one seed.
pub fn train_eval_seed(
    ds: &LabeledDataset,
    cfg: &ExperimentConfig,
    seed: u64,
    n_override: Option<usize>,
) -> Result<MetricsRow, ExperimentError> {
    let mut prep = prepare(ds, cfg, seed, n_override, 0, 0)?;
    let trained = train_distributed(&mut prep, &cfg.dist_config())?;
    let (_, confusion) = evaluate(trained.evaluator().1, &prep.test)?;
    MetricsRow::new(Scenario::TrainEval, seed, prep.n_ids(), &confusion, &trained, &prep.net)
}

/// One `train-eval` row per configured seed.
pub fn run_train_eval(ds: &LabeledDataset, cfg: &ExperimentConfig) -> Result<Vec<MetricsRow>, ExperimentError> {
    cfg.validate()?;
    let ds = ds.project(&cfg.features)?;
    per_seed(&cfg.seeds, |seed| train_eval_seed(&ds, cfg, seed, None))
}

/// One line of `comparison.csv`: both paths on identical data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub seed: u64,
    pub n_ids: usize,
    pub distributed_accuracy: f64,
    pub centralized_accuracy: f64,
    /// Centralized minus distributed, in percentage points.
    pub gap: f64,
    pub distributed_detection_rate: Option<f64>,
    pub centralized_detection_rate: Option<f64>,
    pub distributed_false_positive_rate: Option<f64>,
    pub centralized_false_positive_rate: Option<f64>,
    pub bytes_ratio: f64,
}

/// A comparison row with the records each path consumed.
#[derive(Debug, Clone)]
pub struct ComparisonRun {
    pub row: ComparisonRow,
    pub distributed_training: Vec<SampleId>,
    pub centralized_training: Vec<SampleId>,
    pub distributed_test: Vec<SampleId>,
    pub centralized_test: Vec<SampleId>,
}

fn sorted_ids<'a, I: IntoIterator<Item = &'a Sample>>(samples: I) -> Vec<SampleId> {
    let mut ids: Vec<SampleId> = samples.into_iter().map(|s| s.id).collect();
    ids.sort_unstable();
    ids
}

/// Distributed and centralized training on the same draws, scored on the same test set.
pub fn compare_seed(
    ds: &LabeledDataset,
    cfg: &ExperimentConfig,
    seed: u64,
    n: usize,
) -> Result<ComparisonRun, ExperimentError> {
    let dist = cfg.dist_config();
    let mut prep = prepare(ds, cfg, seed, Some(n), 0, 0)?;
    let trained = train_distributed(&mut prep, &dist)?;
    let (d_rates, _) = evaluate(trained.evaluator().1, &prep.test)?;

    let distributed_training = sorted_ids(trained.sessions.iter().flat_map(|s| s.agents()).flat_map(|a| &a.raw));
    let pooled: Vec<Sample> = prep.draws.iter().flatten().cloned().collect();
    let (central, _) = local_train(&pooled, &dist.train)?;
    let (c_rates, _) = evaluate(&central, &prep.test)?;

    Ok(ComparisonRun {
        row: ComparisonRow {
            seed,
            n_ids: prep.n_ids(),
            distributed_accuracy: d_rates.accuracy,
            centralized_accuracy: c_rates.accuracy,
            gap: c_rates.accuracy - d_rates.accuracy,
            distributed_detection_rate: d_rates.detection_rate,
            centralized_detection_rate: c_rates.detection_rate,
            distributed_false_positive_rate: d_rates.false_positive_rate,
            centralized_false_positive_rate: c_rates.false_positive_rate,
            bytes_ratio: trained.report.ratio(),
        },
        distributed_training,
        centralized_training: sorted_ids(&pooled),
        distributed_test: sorted_ids(&prep.test),
        centralized_test: sorted_ids(&prep.test),
    })
}

/// Paired runs for every N in `ns` and every seed, ordered by N then seed.
pub fn run_compare_detailed(
    ds: &LabeledDataset,
    cfg: &ExperimentConfig,
    ns: &[usize],
) -> Result<Vec<ComparisonRun>, ExperimentError> {
    cfg.validate()?;
    let ds = ds.project(&cfg.features)?;
    let jobs: Vec<(usize, u64)> = ns
        .iter()
        .flat_map(|&n| cfg.seeds.iter().map(move |&s| (n, s)))
        .collect();
    let keys: Vec<u64> = (0..jobs.len() as u64).collect();
    per_seed(&keys, |k| {
        let (n, seed) = jobs[k as usize];
        compare_seed(&ds, cfg, seed, n)
    })
}

pub fn run_compare(
    ds: &LabeledDataset,
    cfg: &ExperimentConfig,
    ns: &[usize],
) -> Result<Vec<ComparisonRow>, ExperimentError> {
    Ok(run_compare_detailed(ds, cfg, ns)?.into_iter().map(|r| r.row).collect())
}

/// Everything one simulated run produced.
#[derive(Debug, Clone)]
pub struct SimRun {
    pub row: MetricsRow,
    pub outcome: SimOutcome,
    pub net: Network,
}

impl SimRun {
    pub fn energy_rows(&self) -> Vec<EnergyRow> {
        EnergyRow::collect(self.row.seed, &self.net)
    }
}

/// Train to consensus, seed the signature databases from the holdout, then
/// replay traffic through the detection pipeline.
pub fn simulate_seed(ds: &LabeledDataset, cfg: &ExperimentConfig, seed: u64) -> Result<SimRun, ExperimentError> {
    let dist = cfg.dist_config();
    let spares = cfg.n_clusters;
    let mut prep = prepare(ds, cfg, seed, None, spares, cfg.holdout_per_category)?;
    let trained = train_distributed(&mut prep, &dist)?;

    let scaled: Vec<(Sample, usize)> = prep
        .holdout
        .iter()
        .map(|&i| (prep.normalization.apply_sample(&ds.samples[i]), i))
        .collect();
    let signatures = predefined_signatures(
        scaled
            .iter()
            .map(|(s, i)| (&s.x, ds.meta[*i].category, ds.meta[*i].attack.as_str())),
    )?;
    let signatures = SignatureDb::with_signatures(signatures)?;

    let pool = |keep: &dyn Fn(Category) -> bool| {
        prep.remainder
            .iter()
            .filter(|(c, _)| keep(*c))
            .flat_map(|(_, idx)| idx.iter().map(|&i| ds.samples[i].x.clone()))
            .collect::<Vec<_>>()
    };
    let normal_traffic = pool(&|c| c == Category::Normal);
    let attack_traffic = pool(&|c| cfg.attack_traffic.includes(c));

    let n_ids = prep.n_ids();
    let setup = SimSetup {
        net: prep.net,
        models: trained.global.models.clone(),
        sessions: trained.sessions.clone(),
        spare_draws: prep.spare_draws,
        normalization: prep.normalization,
        normal_traffic,
        attack_traffic,
        signatures,
    };
    let sim_cfg = SimConfig {
        ticks: cfg.ticks,
        compromised_fraction: cfg.attack_fraction,
        silent_fraction: cfg.silent_fraction,
        dist,
    };
    let (outcome, net) = Simulation::new(setup, sim_cfg, seed)?.run()?;
    let mut row = MetricsRow::new(Scenario::Simulate, seed, n_ids, &outcome.confusion, &trained, &net)?;
    row.signatures_learned = outcome.signatures_learned;
    row.nodes_isolated = outcome.isolated.len();
    row.reelections = outcome.reelections;
    Ok(SimRun { row, outcome, net })
}

pub fn run_simulate(ds: &LabeledDataset, cfg: &ExperimentConfig) -> Result<Vec<SimRun>, ExperimentError> {
    cfg.validate()?;
    let ds = ds.project(&cfg.features)?;
    per_seed(&cfg.seeds, |seed| simulate_seed(&ds, cfg, seed))
}

/// Backward elimination over `cfg.rank_features`, scoring each subset with a
/// full distributed run on the first seed. Subsets are scored on accuracy
/// alone, so node batteries are made large enough that training never runs
/// out: the two- and three-feature subsets keep most samples as support
/// vectors and would otherwise exhaust relay nodes.
pub fn run_rank_features(ds: &LabeledDataset, cfg: &ExperimentConfig) -> Result<FeatureRanking, ExperimentError> {
    cfg.validate()?;
    let seed = cfg.seeds[0];
    let cfg = &ExperimentConfig {
        node_energy_j: RANKING_NODE_ENERGY_J,
        head_energy_j: 2.0 * RANKING_NODE_ENERGY_J,
        ..cfg.clone()
    };
    rank_features(ds, &cfg.rank_features, |subset| {
        let mut prep = prepare(subset, cfg, seed, None, 0, 0)?;
        let trained = train_distributed(&mut prep, &cfg.dist_config())?;
        let (rates, _) = evaluate(trained.evaluator().1, &prep.test)?;
        Ok::<_, ExperimentError>(Score {
            accuracy: rates.accuracy,
            detection_rate: rates.detection_rate,
        })
    })
}

const RANKING_NODE_ENERGY_J: f64 = 1.0e6;

/// Output files written by the command-line runner.
pub const METRICS_FILE: &str = "metrics.csv";
pub const COMPARISON_FILE: &str = "comparison.csv";
pub const RANKING_FILE: &str = "ranking.csv";
pub const EVENTS_FILE: &str = "events.csv";
pub const ENERGY_FILE: &str = "energy.csv";

/// Create `dir` if needed and open `name` inside it.
pub fn create_output(dir: &Path, name: &str) -> Result<std::fs::File, ExperimentError> {
    std::fs::create_dir_all(dir).map_err(DataError::from)?;
    Ok(std::fs::File::create(dir.join(name)).map_err(DataError::from)?)
}

/// Isolated nodes that were never compromised.
pub fn wrongly_isolated(outcome: &SimOutcome) -> BTreeSet<NodeId> {
    outcome.isolated.difference(&outcome.compromised).copied().collect()
}
