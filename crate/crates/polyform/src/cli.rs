//! Command-line entry point: generate, graph, sample, featurize, train,
//! eval, bench, roundtrip.
//!
//! Exit codes: 0 success, 1 validation/usage, 2 numerical failure,
//! 3 internal invariant violation. Config files are flat `key=value` lines;
//! precedence is flags > file > defaults. POLYFORM_SEED supplies the default
//! seed when no flag or file entry gives one.

use crate::data::{
    gen_dataset, gen_random_multipolygon, load_dataset, save_dataset, DatasetSpec, LabeledSample,
    Task,
};
use crate::featurizer::{reconstruct_from_tuples, tuple_multiset, GraphTuples};
use crate::geometry::{parse_multipolygon, serialize_multipolygon_json, Multipolygon};
use crate::hetgraph::{
    build_graph, canonical_form, graph_from_json, graph_to_json, reconstruct_multipolygon,
};
use crate::metrics::{count_messages, evaluate, EvalReport};
use crate::nn::checkpoint::{load_checkpoint, save_checkpoint};
use crate::nn::model::{predict_batch, ModelConfig};
use crate::nn::train::{train, TrainConfig, TrainSample};
use crate::sampler::{reduced_graph, sample_spanning_tree};
use clap::{Args, Parser, Subcommand};
use ndarray::Array2;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(msg: impl Into<String>) -> CliError {
        CliError {
            code: 1,
            message: msg.into(),
        }
    }
    fn numerical(msg: impl Into<String>) -> CliError {
        CliError {
            code: 2,
            message: msg.into(),
        }
    }
    fn internal(msg: impl Into<String>) -> CliError {
        CliError {
            code: 3,
            message: msg.into(),
        }
    }
}

macro_rules! usage_from {
    ($($ty:ty),*) => {$(
        impl From<$ty> for CliError {
            fn from(e: $ty) -> CliError {
                CliError::usage(e.to_string())
            }
        }
    )*};
}
usage_from!(
    crate::data::DataError,
    crate::geometry::GeometryError,
    crate::hetgraph::GraphError,
    crate::sampler::SampleError,
    crate::featurizer::FeaturizeError,
    crate::nn::checkpoint::CheckpointError,
    std::io::Error
);

impl From<crate::nn::train::TrainError> for CliError {
    fn from(e: crate::nn::train::TrainError) -> CliError {
        use crate::nn::train::TrainError;
        match e {
            TrainError::Model(m) => CliError::numerical(m.to_string()),
            other => CliError::usage(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "polyform",
    about = "Heterogeneous visibility graphs over multipolygons: datasets, features, training, benchmarks",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic labeled dataset (JSON lines)
    Generate(GenerateArgs),
    /// Build the heterogeneous visibility graph of a multipolygon
    Graph(GraphArgs),
    /// Sample a spanning tree over parts and export the reduced graph
    Sample(SampleArgs),
    /// Export two-hop path tuples as CSV
    Featurize(FeaturizeArgs),
    /// Train a model on a generated dataset
    Train(TrainArgs),
    /// Evaluate a checkpoint on a dataset file
    Eval(EvalArgs),
    /// Message-count benchmark: one-hop vs two-hop vs reduced two-hop
    Bench(BenchArgs),
    /// Reconstruction round-trip checks (graph, sampled graph, tuples)
    Roundtrip(RoundtripArgs),
}

#[derive(Args)]
struct CommonConfig {
    /// Flat key=value config file; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    common: CommonConfig,
    /// single-shape | pair-shape | pair-relation | partial-contain
    #[arg(long)]
    task: Option<String>,
    /// Number of samples
    #[arg(long)]
    n: Option<usize>,
    /// Number of classes (defaults per task)
    #[arg(long)]
    classes: Option<usize>,
    /// Per-vertex jitter amplitude
    #[arg(long)]
    noise: Option<f64>,
    /// Dataset seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output JSON-lines path
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GraphArgs {
    /// Multipolygon file (WKT or JSON)
    #[arg(long)]
    input: PathBuf,
    /// Output graph JSON path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    /// Multipolygon file (WKT or JSON)
    #[arg(long)]
    input: PathBuf,
    /// Spanning-tree seed
    #[arg(long)]
    sample_seed: Option<u64>,
    /// Output reduced-graph JSON path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FeaturizeArgs {
    /// Multipolygon file (WKT or JSON)
    #[arg(long)]
    input: PathBuf,
    /// Spanning-tree seed (applies unless --no-sample)
    #[arg(long)]
    sample_seed: Option<u64>,
    /// Featurize the full graph without spanning-tree reduction
    #[arg(long)]
    no_sample: bool,
    /// Output CSV path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: CommonConfig,
    #[arg(long)]
    task: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long)]
    noise: Option<f64>,
    /// Dataset seed
    #[arg(long)]
    seed: Option<u64>,
    /// Model init seed
    #[arg(long)]
    model_seed: Option<u64>,
    /// Spanning-tree seed
    #[arg(long)]
    sample_seed: Option<u64>,
    /// Train on the full graph, no per-epoch resampling
    #[arg(long)]
    no_sample: bool,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Independent trials (model seeds seed..seed+k); mean +/- std reported
    #[arg(long)]
    trials: Option<usize>,
    /// Output directory for snapshot, checkpoint, and CSV reports
    #[arg(long)]
    outdir: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Checkpoint path written by `train`
    #[arg(long)]
    checkpoint: PathBuf,
    /// Dataset JSON-lines path
    #[arg(long)]
    data: PathBuf,
    /// Spanning-tree seed for featurization
    #[arg(long)]
    sample_seed: Option<u64>,
    /// Evaluate on the full graph
    #[arg(long)]
    no_sample: bool,
    /// Output CSV path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: CommonConfig,
    #[arg(long)]
    task: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    sample_seed: Option<u64>,
    /// Output CSV path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RoundtripArgs {
    /// Multipolygon or graph-JSON file to check
    #[arg(long, conflicts_with = "random")]
    input: Option<PathBuf>,
    /// Check this many random multipolygons instead of a file
    #[arg(long)]
    random: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

// ---------------------------------------------------------------------------
// Config resolution
// ---------------------------------------------------------------------------

fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))?;
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            CliError::usage(format!(
                "config {} line {}: expected key=value",
                path.display(),
                i + 1
            ))
        })?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

struct Resolver {
    file: BTreeMap<String, String>,
}

impl Resolver {
    fn new(common: &CommonConfig) -> Result<Resolver, CliError> {
        let file = match &common.config {
            Some(p) => read_config_file(p)?,
            None => BTreeMap::new(),
        };
        Ok(Resolver { file })
    }

    fn get<T: std::str::FromStr>(
        &self,
        flag: Option<T>,
        key: &str,
        default: T,
    ) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.file.get(key) {
            Some(s) => s
                .parse()
                .map_err(|e| CliError::usage(format!("config key {key}={s}: {e}"))),
            None => Ok(default),
        }
    }

    fn seed(&self, flag: Option<u64>, key: &str, default: u64) -> Result<u64, CliError> {
        if flag.is_some() || self.file.contains_key(key) {
            return self.get(flag, key, default);
        }
        match std::env::var("POLYFORM_SEED") {
            Ok(s) => s
                .parse()
                .map_err(|e| CliError::usage(format!("POLYFORM_SEED={s}: {e}"))),
            Err(_) => Ok(default),
        }
    }
}

fn default_classes(task: Task) -> usize {
    match task {
        Task::SingleShape => 5,
        Task::PairShape => 9,
        Task::PairRelation => 6,
        Task::PartialContain => 2,
    }
}

fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn emit(out: Option<&PathBuf>, contents: &str) -> Result<(), CliError> {
    match out {
        Some(p) => write_atomic(p, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn read_multipolygon(path: &Path) -> Result<Multipolygon, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    Ok(parse_multipolygon(&text)?)
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

struct ResolvedDataset {
    spec: DatasetSpec,
}

fn resolve_dataset(
    r: &Resolver,
    task: &Option<String>,
    n: Option<usize>,
    classes: Option<usize>,
    noise: Option<f64>,
    seed: Option<u64>,
) -> Result<ResolvedDataset, CliError> {
    let task: Task = r
        .get(task.clone(), "task", "single-shape".to_string())?
        .parse()
        .map_err(CliError::usage)?;
    let spec = DatasetSpec {
        task,
        num_samples: r.get(n, "n", 500)?,
        num_classes: r.get(classes, "classes", default_classes(task))?,
        noise: r.get(noise, "noise", 0.05)?,
        seed: r.seed(seed, "seed", 0)?,
    };
    spec.validate()?;
    Ok(ResolvedDataset { spec })
}

fn cmd_generate(a: GenerateArgs) -> Result<(), CliError> {
    let r = Resolver::new(&a.common)?;
    let d = resolve_dataset(&r, &a.task, a.n, a.classes, a.noise, a.seed)?;
    let out = match &a.out {
        Some(p) => p.clone(),
        None => r.get(None::<PathBuf>, "out", PathBuf::from("dataset.jsonl"))?,
    };
    let samples = gen_dataset(&d.spec)?;
    save_dataset(&samples, &out)?;
    eprintln!(
        "wrote {} samples ({} classes) to {}",
        samples.len(),
        d.spec.num_classes,
        out.display()
    );
    Ok(())
}

fn cmd_graph(a: GraphArgs) -> Result<(), CliError> {
    let mp = read_multipolygon(&a.input)?;
    let g = build_graph(&mp)?;
    emit(a.out.as_ref(), &(graph_to_json(&g) + "\n"))
}

fn cmd_sample(a: SampleArgs) -> Result<(), CliError> {
    let mp = read_multipolygon(&a.input)?;
    let g = build_graph(&mp)?;
    let seed = match a.sample_seed {
        Some(s) => s,
        None => env_seed_or(0)?,
    };
    let s = sample_spanning_tree(&g, seed)?;
    emit(
        a.out.as_ref(),
        &(graph_to_json(&reduced_graph(&g, &s)) + "\n"),
    )
}

fn env_seed_or(default: u64) -> Result<u64, CliError> {
    match std::env::var("POLYFORM_SEED") {
        Ok(s) => s
            .parse()
            .map_err(|e| CliError::usage(format!("POLYFORM_SEED={s}: {e}"))),
        Err(_) => Ok(default),
    }
}

fn tuples_csv(t: &GraphTuples) -> String {
    let mut out = String::from("head_id,mid_id,tail_id,d_ij,d_jk,theta,type_ij,type_jk\n");
    for rec in &t.records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            rec.path.head.0,
            rec.path.mid.0,
            rec.path.tail.0,
            rec.tuple.d_ij,
            rec.tuple.d_jk,
            rec.tuple.theta,
            rec.tuple.type_ij,
            rec.tuple.type_jk,
        ));
    }
    out
}

fn cmd_featurize(a: FeaturizeArgs) -> Result<(), CliError> {
    let mp = read_multipolygon(&a.input)?;
    let g = build_graph(&mp)?;
    let g = if a.no_sample {
        g
    } else {
        let seed = match a.sample_seed {
            Some(s) => s,
            None => env_seed_or(0)?,
        };
        let s = sample_spanning_tree(&g, seed)?;
        reduced_graph(&g, &s)
    };
    let tuples = tuple_multiset(&g)?;
    emit(a.out.as_ref(), &tuples_csv(&tuples))
}

fn to_train_samples(samples: &[LabeledSample]) -> Result<Vec<TrainSample>, CliError> {
    samples
        .iter()
        .map(|s| {
            Ok(TrainSample {
                graph: build_graph(&s.mp)?,
                label: s.label,
            })
        })
        .collect()
}

fn eval_csv(reports: &[EvalReport]) -> String {
    let mut out = String::from("trial,acc,weighted_precision,weighted_f1,weighted_auc\n");
    for (i, r) in reports.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            i,
            r.acc,
            r.weighted_precision,
            r.weighted_f1,
            r.weighted_auc
                .map_or("undefined".to_string(), |a| a.to_string()),
        ));
    }
    if reports.len() > 1 {
        let cols: Vec<Vec<f64>> = vec![
            reports.iter().map(|r| r.acc).collect(),
            reports.iter().map(|r| r.weighted_precision).collect(),
            reports.iter().map(|r| r.weighted_f1).collect(),
            reports.iter().filter_map(|r| r.weighted_auc).collect(),
        ];
        let stats = |v: &[f64]| {
            if v.is_empty() {
                return (f64::NAN, f64::NAN);
            }
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64;
            (mean, var.sqrt())
        };
        let m: Vec<(f64, f64)> = cols.iter().map(|c| stats(c)).collect();
        out.push_str(&format!(
            "mean,{},{},{},{}\n",
            m[0].0, m[1].0, m[2].0, m[3].0
        ));
        out.push_str(&format!(
            "std,{},{},{},{}\n",
            m[0].1, m[1].1, m[2].1, m[3].1
        ));
    }
    out
}

fn featurize_set(
    samples: &[TrainSample],
    sampling: bool,
    seed: u64,
) -> Result<Vec<GraphTuples>, CliError> {
    samples
        .iter()
        .map(|s| {
            let t = if sampling && s.graph.num_parts() > 1 {
                let tree = sample_spanning_tree(&s.graph, seed)?;
                tuple_multiset(&reduced_graph(&s.graph, &tree))?
            } else {
                tuple_multiset(&s.graph)?
            };
            Ok(t)
        })
        .collect()
}

fn evaluate_model(
    model: &crate::nn::model::Model,
    set: &[TrainSample],
    sampling: bool,
    sample_seed: u64,
) -> Result<EvalReport, CliError> {
    let tuples = featurize_set(set, sampling, sample_seed)?;
    let labels: Vec<usize> = set.iter().map(|s| s.label).collect();
    let logits: Array2<f64> =
        predict_batch(model, &tuples).map_err(|e| CliError::numerical(e.to_string()))?;
    Ok(evaluate(&logits, &labels))
}

fn report_csv(report: &crate::nn::train::TrainReport) -> String {
    let mut out = String::from("epoch,train_loss,val_loss,val_acc,lr\n");
    for e in &report.epochs {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            e.epoch, e.train_loss, e.val_loss, e.val_acc, e.lr
        ));
    }
    out
}

fn cmd_train(a: TrainArgs) -> Result<(), CliError> {
    let r = Resolver::new(&a.common)?;
    let d = resolve_dataset(&r, &a.task, a.n, a.classes, a.noise, a.seed)?;
    let hidden = r.get(a.hidden, "hidden", 64)?;
    let layers = r.get(a.layers, "layers", 4)?;
    let lr = r.get(a.lr, "lr", 1e-3)?;
    let batch = r.get(a.batch, "batch", 64)?;
    let epochs = r.get(a.epochs, "epochs", 200)?;
    let trials = r.get(a.trials, "trials", 1)?;
    let model_seed = r.get(a.model_seed, "model_seed", 1)?;
    let sample_seed = r.get(a.sample_seed, "sample_seed", 0)?;
    let sampling = if a.no_sample {
        false
    } else {
        r.get(None, "sampling", true)?
    };
    let outdir = r.get(a.outdir, "outdir", PathBuf::from("run"))?;
    if hidden < 1 || layers < 1 {
        return Err(CliError::usage("hidden and layers must be >= 1"));
    }
    if !(lr > 0.0) {
        return Err(CliError::usage(format!("lr must be > 0, got {lr}")));
    }
    if trials < 1 {
        return Err(CliError::usage("trials must be >= 1"));
    }
    std::fs::create_dir_all(&outdir)?;

    // config snapshot: rerunning with --config <snapshot> reproduces the run
    let snapshot = format!(
        "task={}\nn={}\nclasses={}\nnoise={}\nseed={}\nmodel_seed={}\nsample_seed={}\nsampling={}\nhidden={}\nlayers={}\nlr={}\nbatch={}\nepochs={}\ntrials={}\noutdir={}\n",
        d.spec.task,
        d.spec.num_samples,
        d.spec.num_classes,
        d.spec.noise,
        d.spec.seed,
        model_seed,
        sample_seed,
        sampling,
        hidden,
        layers,
        lr,
        batch,
        epochs,
        trials,
        outdir.display(),
    );
    write_atomic(&outdir.join("config.txt"), &snapshot)?;

    let samples = gen_dataset(&d.spec)?;
    save_dataset(&samples, &outdir.join("dataset.jsonl"))?;
    let (train_raw, val_raw, test_raw) =
        crate::data::split(&samples, (0.6, 0.2, 0.2), d.spec.seed)?;
    let train_set = to_train_samples(&train_raw)?;
    let val_set = to_train_samples(&val_raw)?;
    let test_set = to_train_samples(&test_raw)?;

    let model_config = ModelConfig::new(hidden, layers, d.spec.num_classes);
    let mut reports = Vec::new();
    for trial in 0..trials {
        let cfg = TrainConfig {
            lr,
            batch_size: batch,
            max_epochs: epochs,
            sampling,
            model_seed: model_seed + trial as u64,
            sample_seed,
            ..Default::default()
        };
        let (model, report) = train(&model_config, &cfg, &train_set, &val_set)?;
        if report.diverged {
            return Err(CliError::numerical(format!(
                "trial {trial}: training diverged (non-finite loss) at epoch {}",
                report.epochs.len()
            )));
        }
        let suffix = if trials == 1 {
            String::new()
        } else {
            format!("-{trial}")
        };
        save_checkpoint(
            &outdir.join(format!("model{suffix}.ckpt")),
            &model,
            cfg.model_seed,
        )?;
        write_atomic(
            &outdir.join(format!("report{suffix}.csv")),
            &report_csv(&report),
        )?;
        let eval = evaluate_model(&model, &test_set, sampling, sample_seed)?;
        eprintln!(
            "trial {trial}: best val loss {:.4} at epoch {}, test acc {:.4}",
            report.best_val_loss, report.best_epoch, eval.acc
        );
        reports.push(eval);
    }
    write_atomic(&outdir.join("eval.csv"), &eval_csv(&reports))?;
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> Result<(), CliError> {
    let (model, _header) = load_checkpoint(&a.checkpoint)?;
    let samples = load_dataset(&a.data)?;
    let set = to_train_samples(&samples)?;
    let sample_seed = match a.sample_seed {
        Some(s) => s,
        None => env_seed_or(0)?,
    };
    let report = evaluate_model(&model, &set, !a.no_sample, sample_seed)?;
    emit(a.out.as_ref(), &eval_csv(&[report]))
}

fn cmd_bench(a: BenchArgs) -> Result<(), CliError> {
    let r = Resolver::new(&a.common)?;
    let d = resolve_dataset(&r, &a.task, a.n, a.classes, a.noise, a.seed)?;
    let sample_seed = r.seed(a.sample_seed, "sample_seed", 0)?;
    let samples = gen_dataset(&d.spec)?;
    let mut out =
        String::from("sample,one_hop,two_hop_full,two_hop_reduced,full_ratio,reduced_ratio\n");
    let mut total = crate::metrics::MessageCounts::default();
    for (i, s) in samples.iter().enumerate() {
        let g = build_graph(&s.mp)?;
        let tree = if g.num_parts() > 1 {
            Some(sample_spanning_tree(&g, sample_seed)?)
        } else {
            None
        };
        let c = count_messages(&g, tree.as_ref());
        total += c;
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            i,
            c.one_hop,
            c.two_hop_full,
            c.two_hop_reduced,
            c.two_hop_full as f64 / c.one_hop as f64,
            c.two_hop_reduced as f64 / c.one_hop as f64,
        ));
    }
    out.push_str(&format!(
        "total,{},{},{},{},{}\n",
        total.one_hop,
        total.two_hop_full,
        total.two_hop_reduced,
        total.two_hop_full as f64 / total.one_hop as f64,
        total.two_hop_reduced as f64 / total.one_hop as f64,
    ));
    emit(a.out.as_ref(), &out)
}

fn roundtrip_one(name: &str, mp: &Multipolygon, seed: u64) -> Result<(), String> {
    let canon = canonical_form(mp);
    let g = build_graph(mp).map_err(|e| format!("{name}: build: {e}"))?;
    // full-graph reconstruction
    let rec = reconstruct_multipolygon(&g).map_err(|e| format!("{name}: reconstruct: {e}"))?;
    if serialize_multipolygon_json(&canonical_form(&rec)) != serialize_multipolygon_json(&canon) {
        return Err(format!("{name}: full-graph reconstruction mismatch"));
    }
    // sampled-graph reconstruction
    if g.num_parts() > 1 {
        let s = sample_spanning_tree(&g, seed).map_err(|e| format!("{name}: sample: {e}"))?;
        let rec = reconstruct_multipolygon(&reduced_graph(&g, &s))
            .map_err(|e| format!("{name}: sampled reconstruct: {e}"))?;
        if serialize_multipolygon_json(&canonical_form(&rec)) != serialize_multipolygon_json(&canon)
        {
            return Err(format!("{name}: sampled-graph reconstruction mismatch"));
        }
    }
    // tuple reconstruction: structure exact, pairwise distances preserved
    let tuples = tuple_multiset(&g).map_err(|e| format!("{name}: featurize: {e}"))?;
    let rg =
        reconstruct_from_tuples(&tuples).map_err(|e| format!("{name}: tuple reconstruct: {e}"))?;
    if rg.inner_edges != g.inner_edges || rg.cross_edges != g.cross_edges {
        return Err(format!("{name}: tuple reconstruction changed edges"));
    }
    for a in 0..g.nodes.len() {
        for b in (a + 1)..g.nodes.len() {
            let d0 = g.nodes[a].coords.dist(&g.nodes[b].coords);
            let d1 = rg.nodes[a].coords.dist(&rg.nodes[b].coords);
            if (d0 - d1).abs() > 1e-6 * d0.max(1.0) {
                return Err(format!(
                    "{name}: tuple reconstruction distance drift at ({a},{b}): {d0} vs {d1}"
                ));
            }
        }
    }
    Ok(())
}

fn cmd_roundtrip(a: RoundtripArgs) -> Result<(), CliError> {
    let seed = match a.seed {
        Some(s) => s,
        None => env_seed_or(0)?,
    };
    let cases: Vec<(String, Multipolygon)> = if let Some(n) = a.random {
        (0..n)
            .map(|i| {
                gen_random_multipolygon(seed.wrapping_add(i as u64), 4)
                    .map(|mp| (format!("random-{i}"), mp))
            })
            .collect::<Result<_, _>>()?
    } else if let Some(path) = &a.input {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        // graph JSON is accepted too: reconstruct the geometry first
        let mp = if text.trim_start().starts_with('{') && text.contains("\"nodes\"") {
            let g = graph_from_json(&text)?;
            reconstruct_multipolygon(&g)?
        } else {
            parse_multipolygon(&text)?
        };
        vec![(path.display().to_string(), mp)]
    } else {
        return Err(CliError::usage("roundtrip needs --input or --random"));
    };

    let mut failures = 0usize;
    for (name, mp) in &cases {
        if let Err(msg) = roundtrip_one(name, mp, seed) {
            eprintln!("FAIL {msg}");
            failures += 1;
        }
    }
    println!(
        "{}/{} round trips passed",
        cases.len() - failures,
        cases.len()
    );
    if failures > 0 {
        Err(CliError::internal(format!(
            "{failures} round-trip failures"
        )))
    } else {
        Ok(())
    }
}

pub fn run() -> i32 {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Graph(a) => cmd_graph(a),
        Command::Sample(a) => cmd_sample(a),
        Command::Featurize(a) => cmd_featurize(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Roundtrip(a) => cmd_roundtrip(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
