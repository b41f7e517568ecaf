use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use wsn_hids::dataset::synth::{generate_records, write_records, SynthConfig};
use wsn_hids::dataset::{FeatureId, LabeledDataset};
use wsn_hids::experiment::{
    create_output, load_corpus, run_compare, run_rank_features, run_simulate, run_train_eval, write_comparison,
    write_energy, write_events, write_metrics, write_ranking, ConfigError, ExperimentConfig, ExperimentError, IdsCount,
    COMPARISON_FILE, ENERGY_FILE, EVENTS_FILE, METRICS_FILE, RANKING_FILE,
};

#[derive(Parser)]
#[command(
    name = "wsn-hids",
    version,
    about = "Distributed SVM intrusion detection experiments for clustered sensor networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train to consensus and score one agent on the shared test set.
    TrainEval(Common),
    /// Distributed against centralized accuracy for several IDS counts.
    Compare(Common),
    /// Replay traffic through the full detection lifecycle.
    Simulate(Common),
    /// Backward feature elimination scored by distributed runs.
    RankFeatures(Common),
    /// Write a synthetic corpus in the KDD'99 record format.
    GenerateCorpus(Generate),
}

#[derive(Args)]
struct Common {
    /// Corpus file, plain or gzip.
    #[arg(long, value_name = "PATH")]
    dataset: Option<PathBuf>,
    /// Attack-name to category table replacing the built-in one.
    #[arg(long, value_name = "PATH")]
    category_map: Option<PathBuf>,
    /// key = value settings; flags take precedence.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Comma-separated seeds.
    #[arg(long, value_name = "LIST")]
    seed: Option<String>,
    /// IDS agent count, or auto to derive it from range and density.
    #[arg(long, value_name = "INT|auto")]
    n_ids: Option<String>,
    #[arg(long, value_name = "DIR", default_value = "results")]
    out: PathBuf,
}

#[derive(Args)]
struct Generate {
    /// Destination file.
    path: PathBuf,
    #[arg(long, default_value_t = SynthConfig::default().records)]
    records: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

impl Common {
    fn config(&self) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| ConfigError::Invalid(format!("cannot read {}: {e}", path.display())))?;
                ExperimentConfig::parse(&text).map_err(ExperimentError::from)?
            }
            None => ExperimentConfig::default(),
        };
        if let Some(path) = &self.dataset {
            cfg.dataset = Some(path.clone());
        }
        if let Some(path) = &self.category_map {
            cfg.category_map = Some(path.clone());
        }
        if let Some(seeds) = &self.seed {
            cfg.set("seeds", seeds).map_err(ExperimentError::from)?;
        }
        if let Some(n) = &self.n_ids {
            cfg.set("n_ids", n).map_err(ExperimentError::from)?;
        }
        cfg.validate().map_err(ExperimentError::from)?;
        if cfg.dataset.is_none() {
            return Err(ExperimentError::from(ConfigError::MissingDataset).into());
        }
        Ok(cfg)
    }
}

fn write_to(
    dir: &Path,
    name: &str,
    write: impl FnOnce(BufWriter<File>) -> Result<(), csv::Error>,
) -> anyhow::Result<()> {
    let file = create_output(dir, name)?;
    write(BufWriter::new(file))
        .map_err(ExperimentError::from)
        .with_context(|| format!("writing {}", dir.join(name).display()))?;
    println!("wrote {}", dir.join(name).display());
    Ok(())
}

fn load(cfg: &ExperimentConfig, features: &[FeatureId]) -> anyhow::Result<LabeledDataset> {
    let path = cfg.dataset.as_deref().unwrap_or(Path::new(""));
    let ds = load_corpus(cfg, features).with_context(|| format!("loading {}", path.display()))?;
    Ok(ds)
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.2}"))
}

fn train_eval(args: &Common) -> anyhow::Result<()> {
    let cfg = args.config()?;
    let ds = load(&cfg, &cfg.features)?;
    let rows = run_train_eval(&ds, &cfg)?;
    for r in &rows {
        println!(
            "seed {:>4}  N {:>2}  accuracy {:.2}  detection {}  false-positive {}  bytes ratio {:.3}",
            r.seed,
            r.n_ids,
            r.accuracy,
            pct(r.detection_rate),
            pct(r.false_positive_rate),
            r.bytes_ratio
        );
    }
    write_to(&args.out, METRICS_FILE, |w| write_metrics(w, &rows))
}

fn compare(args: &Common) -> anyhow::Result<()> {
    let cfg = args.config()?;
    let ns = match cfg.n_ids {
        IdsCount::Fixed(n) if args.n_ids.is_some() => vec![n],
        _ => cfg.compare_n.clone(),
    };
    let ds = load(&cfg, &cfg.features)?;
    let rows = run_compare(&ds, &cfg, &ns)?;
    for n in &ns {
        let (mut dist, mut central, mut k) = (0.0, 0.0, 0.0);
        for r in rows.iter().filter(|r| r.n_ids == *n) {
            dist += r.distributed_accuracy;
            central += r.centralized_accuracy;
            k += 1.0;
        }
        println!("N {n:>2}  distributed {:.2}  centralized {:.2}", dist / k, central / k);
    }
    write_to(&args.out, COMPARISON_FILE, |w| write_comparison(w, &rows))
}

fn simulate(args: &Common) -> anyhow::Result<()> {
    let cfg = args.config()?;
    let ds = load(&cfg, &cfg.features)?;
    let runs = run_simulate(&ds, &cfg)?;
    for run in &runs {
        let o = &run.outcome;
        println!(
            "seed {:>4}  compromised {:>2}  isolated {:>2}  signatures learned {}  re-elections {}  false-positive {}",
            run.row.seed,
            o.compromised.len(),
            o.isolated.len(),
            o.signatures_learned,
            o.reelections,
            pct(run.row.false_positive_rate)
        );
    }
    let rows: Vec<_> = runs.iter().map(|r| r.row.clone()).collect();
    let logs: Vec<_> = runs.iter().map(|r| (r.row.seed, &r.outcome.log)).collect();
    let energy: Vec<_> = runs.iter().flat_map(|r| r.energy_rows()).collect();
    write_to(&args.out, METRICS_FILE, |w| write_metrics(w, &rows))?;
    write_to(&args.out, EVENTS_FILE, |w| write_events(w, &logs))?;
    write_to(&args.out, ENERGY_FILE, |w| write_energy(w, &energy))
}

fn rank(args: &Common) -> anyhow::Result<()> {
    let cfg = args.config()?;
    let ds = load(&cfg, &cfg.rank_features)?;
    let ranking = run_rank_features(&ds, &cfg)?;
    for row in &ranking.rows {
        let names: Vec<&str> = row.features.iter().map(|f| FeatureId::name(*f)).collect();
        println!(
            "{:>2} features  accuracy {:.2}  detection {}  [{}]",
            row.features.len(),
            row.score.accuracy,
            pct(row.score.detection_rate),
            names.join(" ")
        );
    }
    write_to(&args.out, RANKING_FILE, |w| write_ranking(w, &ranking))
}

fn generate(args: &Generate) -> anyhow::Result<()> {
    let cfg = SynthConfig {
        records: args.records,
        ..SynthConfig::default()
    };
    let records = generate_records(&cfg, args.seed);
    let file = File::create(&args.path).with_context(|| format!("creating {}", args.path.display()))?;
    write_records(&records, BufWriter::new(file)).with_context(|| format!("writing {}", args.path.display()))?;
    println!("wrote {} records to {}", records.len(), args.path.display());
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if let Some(e) = err.downcast_ref::<ExperimentError>() {
        e.exit_code() as u8
    } else if err.downcast_ref::<std::io::Error>().is_some() {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::TrainEval(a) => train_eval(a),
        Command::Compare(a) => compare(a),
        Command::Simulate(a) => simulate(a),
        Command::RankFeatures(a) => rank(a),
        Command::GenerateCorpus(g) => generate(g),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
