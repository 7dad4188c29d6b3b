//! The `condtree` command line. [`run`] takes the argument vector and
//! output streams and returns the process exit code:
//! 0 success, 1 usage error, 2 data or validation error, 3 size cap.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use condtree::eval::{accuracy, classify_batch, evaluate_divergence};
use condtree::info::EdgeWeightScheme;
use condtree::io::{
    load_csv, load_csv_with_schema, load_joint, load_model, sample, save_model, write_atomic, write_csv, ModelFile,
    Provenance, SimnetConfig,
};
use condtree::learn::{
    learn_chow_liu_multinet, learn_conditional_tree, learn_with_cutset, prune_class_links, prune_cutset_links,
    EMPIRICAL_PRUNE_EPS,
};
use condtree::oracle::{certify, weak_transitivity_scan, ScanConfig};
use condtree::simnet::{canonical_order, learn_local_networks, rank_irrelevant_features, union_networks};
use condtree::tables::{fit_joint_capped, pairwise_stats, DEFAULT_TABLE_CAP};
use condtree::{ClassifierModel, Dataset, DiscreteModel, Error, Execution, JointTable, Schema};

#[derive(Parser, Debug)]
#[command(name = "condtree", version, about = "Tree-structured Bayesian network classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Learn a model from a CSV dataset
    Learn(LearnArgs),
    /// Predict the class of every row of a CSV file
    Classify(ClassifyArgs),
    /// Compare a model with a reference distribution or labeled data
    Eval(EvalArgs),
    /// Draw a seeded sample from a model
    Sample(SampleArgs),
    /// Exhaustive tree search and the weak-transitivity scan
    Oracle(OracleArgs),
    /// Rank features that barely distinguish the classes of each cover edge (advisory)
    Advise(AdviseArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Multinet,
    Condtree,
    Cutset,
    Simnet,
}

#[derive(Args, Debug)]
struct LearnArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    class: String,
    #[arg(long, value_enum, default_value = "condtree")]
    mode: Mode,
    /// Cutset columns (cutset mode)
    #[arg(long, value_delimiter = ',')]
    cutset: Vec<String>,
    /// Cover and relevant-feature configuration (simnet mode)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Class labels to restrict a conditional tree to
    #[arg(long, value_delimiter = ',')]
    subset: Vec<String>,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Tolerance for dropping class (or cutset) links; negative disables pruning
    #[arg(long, default_value_t = EMPIRICAL_PRUNE_EPS, allow_negative_numbers = true)]
    prune_eps: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ClassifyArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    input: PathBuf,
    /// Add one posterior column per class value
    #[arg(long)]
    report_posteriors: bool,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    /// Reference joint table (JSON)
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Labeled CSV; used for accuracy, and as the reference when no table is given
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "divergence,accuracy,bounds")]
    metrics: Vec<Metric>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Metric {
    Divergence,
    Accuracy,
    Bounds,
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct OracleArgs {
    /// CSV dataset; its empirical joint is the instance
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    class: Option<String>,
    /// Reference joint table (JSON) instead of a dataset
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long, default_value_t = 7)]
    max_vars: usize,
    #[arg(long)]
    scan_weak_transitivity: bool,
    #[arg(long, default_value_t = 0.05)]
    step: f64,
    #[arg(long, default_value_t = 1e-6)]
    eps_constraint: f64,
    #[arg(long, default_value_t = 1e-9)]
    eps_conclusion: f64,
}

#[derive(Args, Debug)]
struct AdviseArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    class: String,
    #[arg(long)]
    config: PathBuf,
    /// Report features whose within-edge class information is at most this many bits
    #[arg(long, default_value_t = 0.01)]
    threshold: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
}

enum Failure {
    Usage(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Core(Error::Io(e))
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Core(Error::Json(e))
    }
}

type Outcome = Result<(), Failure>;

/// Parses `argv` (program name first) and runs the subcommand.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let result = match cli.command {
        Command::Learn(a) => learn(a, out),
        Command::Classify(a) => classify(a, out, err),
        Command::Eval(a) => eval(a, out),
        Command::Sample(a) => sample_cmd(a, out),
        Command::Oracle(a) => oracle(a, out),
        Command::Advise(a) => advise(a, out),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            1
        }
        Err(Failure::Core(e)) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_size_cap() {
                3
            } else {
                2
            }
        }
    }
}

fn pretty(v: &Value) -> Result<String, Failure> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

fn class_codes(schema: &Schema, labels: &[String]) -> Result<Vec<usize>, Failure> {
    let c = schema.require_class()?;
    let var = &schema.vars()[c];
    labels
        .iter()
        .map(|l| var.label_code(l).ok_or_else(|| Failure::Core(Error::InvalidClassSubset(format!("`{l}` is not a value of `{}`", var.name)))))
        .collect()
}

fn learn(a: LearnArgs, out: &mut dyn Write) -> Outcome {
    let prune = a.prune_eps >= 0.0;
    let cutset_cols: &[String] = if matches!(a.mode, Mode::Cutset) { &a.cutset } else { &[] };
    let data = load_csv(&a.input, Some(&a.class), cutset_cols)?;
    let schema = data.schema().clone();
    let class = schema.require_class()?;
    let mut provenance = Provenance::new(a.alpha, "");
    provenance.prune_eps = prune.then_some(a.prune_eps);

    let model = match a.mode {
        Mode::Multinet => {
            let stats = pairwise_stats(&data, &[class], a.alpha)?;
            provenance.scheme = "multinet: per-class".into();
            provenance.prune_eps = None;
            ClassifierModel::Multinet(learn_chow_liu_multinet(&stats)?)
        }
        Mode::Condtree => {
            let stats = pairwise_stats(&data, &[class], a.alpha)?;
            let subset = if a.subset.is_empty() { None } else { Some(class_codes(&schema, &a.subset)?) };
            let mut m = learn_conditional_tree(&stats, subset.as_deref())?;
            provenance.scheme = format!(
                "condtree: {}",
                EdgeWeightScheme::Conditional(m.class_subset.clone()).describe()
            );
            if prune {
                m = prune_class_links(&m, &data, a.prune_eps)?;
            }
            ClassifierModel::ConditionalTree(m)
        }
        Mode::Cutset => {
            if a.cutset.is_empty() {
                return Err(Failure::Usage("cutset mode needs --cutset".into()));
            }
            let mut conditioning = vec![class];
            for name in &a.cutset {
                conditioning.push(schema.index_of(name)?);
            }
            let stats = pairwise_stats(&data, &conditioning, a.alpha)?;
            let mut m = learn_with_cutset(&stats, &conditioning)?;
            provenance.scheme = format!("cutset: {}", EdgeWeightScheme::Cutset(conditioning).describe());
            if prune {
                m = prune_cutset_links(&m, &data, a.prune_eps)?;
            }
            ClassifierModel::Cutset(m)
        }
        Mode::Simnet => {
            let path = a.config.as_ref().ok_or_else(|| Failure::Usage("simnet mode needs --config".into()))?;
            let resolved = SimnetConfig::load(path)?.resolve(&schema)?;
            let stats = pairwise_stats(&data, &[class], a.alpha)?;
            let eps = if prune { a.prune_eps } else { -1.0 };
            let simnet = learn_local_networks(&stats, &resolved.cover, &resolved.features, eps)?;
            let order = resolved.order.unwrap_or_else(|| canonical_order(&simnet));
            provenance.scheme = "simnet: conditional per cover edge".into();
            ClassifierModel::Global(union_networks(&simnet, &data, &order, a.alpha)?)
        }
    };
    let file = ModelFile::new(schema, model, provenance);
    save_model(&a.out, &file)?;
    writeln!(out, "{}", summary(&file))?;
    Ok(())
}

fn summary(file: &ModelFile) -> String {
    let names = |v: usize| file.schema.vars()[v].name.clone();
    let edges: Vec<String> = match &file.model {
        ClassifierModel::ConditionalTree(m) => m.structure.edges().iter().map(|&(a, b)| format!("{}-{}", names(a), names(b))).collect(),
        ClassifierModel::Cutset(m) => m.structure.edges().iter().map(|&(a, b)| format!("{}-{}", names(a), names(b))).collect(),
        ClassifierModel::Multinet(m) => m
            .trees
            .iter()
            .enumerate()
            .flat_map(|(c, t)| t.structure.edges().into_iter().map(move |e| (c, e)))
            .map(|(c, (a, b))| format!("[{c}]{}-{}", names(a), names(b)))
            .collect(),
        ClassifierModel::Global(g) => g.dag.edges().iter().map(|&(a, b)| format!("{}->{}", names(a), names(b))).collect(),
    };
    format!("{} model, edges: {}", file.model.family(), edges.join(" "))
}

fn labeled(data: &Dataset, missing: &[usize], class: Option<usize>) -> bool {
    class.is_some_and(|c| !missing.contains(&c)) && !data.is_empty()
}

fn classify(a: ClassifyArgs, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let file = load_model(&a.model)?;
    let rec = load_csv_with_schema(&a.input, &file.schema)?;
    let results = classify_batch(&file.model, rec.dataset.rows(), Execution::default())?;
    let class = file.model.class_var().ok_or_else(|| Error::NoClassVariable("model".into()))?;
    let labels = &file.schema.vars()[class].labels;
    let mut header = vec!["row".to_string(), "predicted".to_string()];
    if a.report_posteriors {
        header.extend(labels.iter().map(|l| format!("p({l})")));
    }
    writeln!(out, "{}", header.join(","))?;
    for (i, r) in results.iter().enumerate() {
        let mut line = vec![i.to_string(), labels[r.class].clone()];
        if a.report_posteriors {
            line.extend(r.posterior.iter().map(|p| p.to_string()));
        }
        writeln!(out, "{}", line.join(","))?;
    }
    if labeled(&rec.dataset, &rec.missing, Some(class)) {
        let hits = results.iter().zip(rec.dataset.rows()).filter(|(r, row)| r.class == row[class]).count();
        writeln!(err, "accuracy: {} ({hits}/{})", hits as f64 / results.len() as f64, results.len())?;
    }
    Ok(())
}

const DIVERGENCE_KEYS: [&str; 3] = ["per_class_divergence", "class_prior_divergence", "weighted_divergence"];
const BOUND_KEYS: [&str; 6] = [
    "entropy_x_given_c",
    "entropy_c_given_x",
    "mutual_information",
    "hellman_raviv_bound",
    "model_bayes_error",
    "truth_bayes_error",
];

fn pick(report: &Value, keys: &[&str]) -> Value {
    Value::Object(keys.iter().filter_map(|&k| report.get(k).map(|v| (k.to_string(), v.clone()))).collect())
}

fn eval(a: EvalArgs, out: &mut dyn Write) -> Outcome {
    if a.truth.is_none() && a.input.is_none() {
        return Err(Failure::Usage("eval needs --truth or --input".into()));
    }
    let file = load_model(&a.model)?;
    let data = match &a.input {
        Some(p) => Some(load_csv_with_schema(p, &file.schema)?),
        None => None,
    };
    let reference: Option<JointTable> = match (&a.truth, &data) {
        (Some(p), _) => {
            let t = load_joint(p)?;
            if !t.schema().compatible(&file.schema) {
                return Err(Error::SchemaMismatch("reference table and model use different schemas".into()).into());
            }
            Some(t)
        }
        (None, Some(rec)) if a.metrics.iter().any(|m| *m != Metric::Accuracy) => {
            Some(fit_joint_capped(&rec.dataset, 0.0, DEFAULT_TABLE_CAP)?)
        }
        _ => None,
    };
    let mut report = Map::new();
    let full = match &reference {
        Some(t) => Some(serde_json::to_value(evaluate_divergence(&file.model, t)?)?),
        None => None,
    };
    if let Some(v) = &full {
        if a.metrics.contains(&Metric::Divergence) {
            report.insert("divergence".into(), pick(v, &DIVERGENCE_KEYS));
        }
        if a.metrics.contains(&Metric::Bounds) {
            report.insert("bounds".into(), pick(v, &BOUND_KEYS));
        }
    }
    if a.metrics.contains(&Metric::Accuracy) {
        let mut acc = Map::new();
        if let Some(v) = &full {
            acc.insert("expected_accuracy".into(), v["expected_accuracy"].clone());
        }
        if let Some(rec) = &data {
            if labeled(&rec.dataset, &rec.missing, file.model.class_var()) {
                acc.insert("empirical_accuracy".into(), json!(accuracy(&file.model, &rec.dataset, Execution::default())?));
            }
        }
        report.insert("accuracy".into(), Value::Object(acc));
    }
    let text = pretty(&Value::Object(report))?;
    if let Some(p) = &a.out {
        write_atomic(p, |w| w.write_all(text.as_bytes()))?;
    }
    out.write_all(text.as_bytes())?;
    Ok(())
}

fn sample_cmd(a: SampleArgs, out: &mut dyn Write) -> Outcome {
    if a.n == 0 {
        return Err(Failure::Usage("--n must be at least 1".into()));
    }
    let file = load_model(&a.model)?;
    let data = sample(&file.model, &file.schema, a.n, a.seed)?;
    write_csv(&a.out, &data)?;
    writeln!(out, "wrote {} rows to {}", data.len(), a.out.display())?;
    Ok(())
}

fn oracle_instance(a: &OracleArgs) -> Result<Option<JointTable>, Failure> {
    match (&a.truth, &a.input) {
        (Some(p), _) => Ok(Some(load_joint(p)?)),
        (None, Some(p)) => {
            let class = a.class.as_deref().ok_or_else(|| Failure::Usage("--input needs --class".into()))?;
            let data = load_csv(p, Some(class), &[])?;
            let features = data.schema().features().len();
            if features > a.max_vars {
                return Err(Error::OracleSize { got: features, min: 1, max: a.max_vars }.into());
            }
            Ok(Some(fit_joint_capped(&data, 0.0, DEFAULT_TABLE_CAP)?))
        }
        (None, None) => Ok(None),
    }
}

fn oracle(a: OracleArgs, out: &mut dyn Write) -> Outcome {
    let instance = oracle_instance(&a)?;
    if instance.is_none() && !a.scan_weak_transitivity {
        return Err(Failure::Usage("oracle needs --input, --truth or --scan-weak-transitivity".into()));
    }
    let mut report = Map::new();
    if let Some(t) = instance {
        let features = t.schema().features().len();
        if features > a.max_vars {
            return Err(Error::OracleSize { got: features, min: 1, max: a.max_vars }.into());
        }
        let scheme = EdgeWeightScheme::Conditional((0..t.schema().cardinality(t.schema().require_class()?)).collect());
        report.insert("verdict".into(), serde_json::to_value(certify(&t, &scheme, Execution::default())?)?);
    }
    if a.scan_weak_transitivity {
        let config = ScanConfig { step: a.step, eps_constraint: a.eps_constraint, eps_conclusion: a.eps_conclusion };
        report.insert("weak_transitivity".into(), serde_json::to_value(weak_transitivity_scan(&config, Execution::default())?)?);
    }
    out.write_all(pretty(&Value::Object(report))?.as_bytes())?;
    Ok(())
}

fn advise(a: AdviseArgs, out: &mut dyn Write) -> Outcome {
    let data = load_csv(&a.input, Some(&a.class), &[])?;
    let schema = data.schema();
    let resolved = SimnetConfig::load(&a.config)?.resolve(schema)?;
    let stats = pairwise_stats(&data, &[schema.require_class()?], a.alpha)?;
    let ranked = rank_irrelevant_features(&stats, &resolved.cover, a.threshold)?;
    let edges: Vec<Value> = ranked
        .iter()
        .enumerate()
        .map(|(e, list)| {
            let class = schema.require_class().unwrap();
            let classes: Vec<&str> = resolved.cover.edges[e].iter().map(|&c| schema.vars()[class].labels[c].as_str()).collect();
            json!({
                "classes": classes,
                "weak_features": list.iter().map(|f| json!({"feature": schema.vars()[f.feature].name, "bits": f.score})).collect::<Vec<_>>(),
            })
        })
        .collect();
    let report = json!({
        "advisory": "features listed carry at most the threshold of class information within the edge; relevance is a modeling judgment",
        "threshold_bits": a.threshold,
        "edges": edges,
    });
    out.write_all(pretty(&report)?.as_bytes())?;
    Ok(())
}
