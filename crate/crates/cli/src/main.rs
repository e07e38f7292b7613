use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use unelisa::baselines::{dawid_skene, majority_vote, sml};
use unelisa::gibbs::{sample, GibbsConfig};
use unelisa::harness::{generate_graph, run_benchmark, write_results_csv, write_trials_csv, BenchConfig, D0Rule, Snr};
use unelisa::io;
use unelisa::metrics::{classification, ClassificationOptions};
use unelisa::model::degree_stats;
use unelisa::nodewise::{default_lambda, neighborhoods};
use unelisa::predict::{augmented_majority_vote, bayes_classify, em_fit, EmConfig};
use unelisa::prune::reconstruct_n0;
use unelisa::{approximate, Error, LabelMatrix, Method, PredictionResult, SignMatrix, Symmetrize};

/// Unsupervised ensemble learning: find the expert classifiers in an
/// ensemble and predict labels from them.
#[derive(Parser, Debug)]
#[command(name = "unelisa", version)]
struct Cli {
    /// Seed for every random choice made by the command.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory (default: current directory, or `out_dir` from a
    /// benchmark config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a labels CSV, truth CSV and graph TSV from a random or given graph.
    Simulate(SimulateArgs),
    /// Write the node-0-marginalized approximation of a graph as TSV.
    Approx {
        #[arg(long)]
        graph: PathBuf,
    },
    /// Estimate neighborhoods and reconstruct the expert set.
    Prune(PruneArgs),
    /// Predict labels with one method.
    Predict(PredictArgs),
    /// Score predictions against truth.
    Evaluate(EvaluateArgs),
    /// Run a simulation sweep and write results.csv and trials.csv.
    Benchmark(BenchmarkArgs),
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Sample from this graph instead of generating one.
    #[arg(long, conflicts_with_all = ["p", "d0", "snr"])]
    graph: Option<PathBuf>,
    #[arg(long, default_value_t = 25)]
    p: usize,
    /// Number of experts, or one of log, sqrt, p/4.
    #[arg(long, default_value = "sqrt")]
    d0: String,
    #[arg(long, default_value = "high")]
    snr: String,
    /// Number of instances (default: n_scale * max approximated degree * ln p).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 30.0)]
    n_scale: f64,
    #[arg(long, default_value_t = 1000)]
    burn_in: usize,
}

#[derive(Args, Debug)]
struct PruneArgs {
    #[arg(long)]
    labels: PathBuf,
    /// `auto` for sqrt(ln p / n), or a nonnegative value.
    #[arg(long, default_value = "auto")]
    lambda: String,
    /// How to combine the two nodewise estimates of an edge.
    #[arg(long, default_value = "or")]
    rule: String,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum MethodArg {
    Bayes,
    Amv,
    Mv,
    Ds,
    Sml,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[arg(long, value_enum)]
    method: MethodArg,
    #[arg(long)]
    labels: PathBuf,
    /// Expert report written by `prune`; required for bayes and amv.
    #[arg(long)]
    experts: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    /// Classify by `score >= threshold` instead of the predicted labels.
    #[arg(long)]
    threshold: Option<f64>,
    /// Also report F1 from precision and recall.
    #[arg(long)]
    f1: bool,
}

#[derive(Args, Debug)]
struct BenchmarkArgs {
    /// Flat `key = value` config; defaults apply to missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}

fn run(cli: Cli) -> unelisa::Result<()> {
    let out = cli.out.clone();
    let dir = || -> unelisa::Result<PathBuf> {
        let d = out.clone().unwrap_or_else(|| PathBuf::from("."));
        fs::create_dir_all(&d)?;
        Ok(d)
    };
    let seed = cli.seed.unwrap_or(0);
    match cli.command {
        Command::Simulate(a) => simulate(&a, seed, &dir()?),
        Command::Approx { graph } => {
            let spec = io::read_spec_tsv(io::open(&graph)?)?;
            let model = approximate(&spec)?;
            let path = dir()?.join("approx.tsv");
            io::write_spec_tsv(io::create(&path)?, &model.to_spec())?;
            println!("wrote {}", path.display());
            Ok(())
        }
        Command::Prune(a) => prune(&a, &dir()?),
        Command::Predict(a) => predict(&a, &dir()?),
        Command::Evaluate(a) => evaluate(&a, &dir()?),
        Command::Benchmark(a) => benchmark(&a, cli.seed, out),
    }
}

fn parse_d0(text: &str, p: usize) -> unelisa::Result<usize> {
    match text.parse::<usize>() {
        Ok(d0) => Ok(d0),
        Err(_) => Ok(text.parse::<D0Rule>()?.d0(p)),
    }
}

fn simulate(a: &SimulateArgs, seed: u64, dir: &Path) -> unelisa::Result<()> {
    let spec = match &a.graph {
        Some(path) => io::read_spec_tsv(io::open(path)?)?,
        None => generate_graph(a.p, parse_d0(&a.d0, a.p)?, a.snr.parse::<Snr>()?, seed)?,
    };
    let n = match a.n {
        Some(n) => n,
        None => {
            let tilde = degree_stats(&spec).tilde_max.max(1) as f64;
            (a.n_scale * tilde * (spec.p() as f64).ln()).ceil() as usize
        }
    };
    let mut cfg = GibbsConfig::new(n, seed.wrapping_add(1));
    cfg.burn_in_sweeps = a.burn_in;
    let labels = sample(&spec, &cfg)?;
    let truth = labels.truth().expect("sampled labels carry truth");
    io::write_labels_csv(io::create(dir.join("labels.csv"))?, &labels)?;
    io::write_truth_csv(io::create(dir.join("truth.csv"))?, labels.instance_ids(), truth)?;
    io::write_spec_tsv(io::create(dir.join("graph.tsv"))?, &spec)?;
    println!(
        "sampled n = {n}, p = {}, experts {:?} into {}",
        spec.p(),
        spec.expert_set(),
        dir.display()
    );
    Ok(())
}

fn resolve_lambda(text: &str, labels: &LabelMatrix) -> unelisa::Result<f64> {
    if text == "auto" {
        return Ok(default_lambda(labels.n(), labels.p()));
    }
    match text.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.is_finite() => Ok(v),
        _ => Err(Error::InvalidArgument(format!(
            "lambda must be 'auto' or a nonnegative number, got '{text}'"
        ))),
    }
}

fn prune(a: &PruneArgs, dir: &Path) -> unelisa::Result<()> {
    let labels = io::read_labels_csv(io::open(&a.labels)?)?;
    let lambda = resolve_lambda(&a.lambda, &labels)?;
    let rule: Symmetrize = a.rule.parse()?;
    let nbhd = neighborhoods(&labels, lambda, rule)?;
    let recon = reconstruct_n0(&nbhd);
    let experts: Vec<usize> = recon.expert_set.iter().copied().collect();

    let mut expert_edges = Vec::new();
    for (i, &s) in experts.iter().enumerate() {
        for &t in &experts[i + 1..] {
            if let Some(w) = nbhd.weight(s, t) {
                expert_edges.push(json!([s, t, w]));
            }
        }
    }
    let ids = labels.classifier_ids();
    let report = json!({
        "expert_set": experts,
        "expert_ids": experts.iter().map(|&s| ids[s - 1].clone()).collect::<Vec<_>>(),
        "knot_table": serde_json::to_value(&recon.table)?["knots"],
        "neighborhood_sizes": experts.iter().map(|&s| (s.to_string(), json!(nbhd.size(s)))).collect::<serde_json::Map<_, _>>(),
        "expert_edges": expert_edges,
        "parameters": {"lambda": lambda, "rule": a.rule, "n": labels.n(), "p": labels.p()},
        "flags": recon.flags,
    });
    let path = dir.join("experts.json");
    fs::write(&path, serde_json::to_string_pretty(&report)?)?;
    println!("selected experts {:?}; wrote {}", experts, path.display());
    Ok(())
}

struct ExpertFile {
    experts: Vec<usize>,
    sizes: BTreeMap<usize, usize>,
    edges: Vec<(usize, usize, f64)>,
}

fn bad_report(what: &str) -> Error {
    Error::Parse(format!("expert report: {what}"))
}

fn read_expert_file(path: &Path, p: usize) -> unelisa::Result<ExpertFile> {
    let v: Value = serde_json::from_reader(io::open(path)?)?;
    let experts: Vec<usize> = v["expert_set"]
        .as_array()
        .ok_or_else(|| bad_report("missing expert_set"))?
        .iter()
        .map(|x| {
            x.as_u64()
                .map(|s| s as usize)
                .ok_or_else(|| bad_report("expert ids must be integers"))
        })
        .collect::<unelisa::Result<_>>()?;
    if let Some(&s) = experts.iter().find(|&&s| s == 0 || s > p) {
        return Err(bad_report(&format!("expert {s} outside 1..={p}")));
    }
    let sizes = experts
        .iter()
        .map(|&s| (s, v["neighborhood_sizes"][s.to_string()].as_u64().unwrap_or(0) as usize))
        .collect();
    let edges = v["expert_edges"]
        .as_array()
        .map(|a| {
            a.iter()
                .filter_map(|e| Some((e[0].as_u64()? as usize, e[1].as_u64()? as usize, e[2].as_f64()?)))
                .collect()
        })
        .unwrap_or_default();
    Ok(ExpertFile { experts, sizes, edges })
}

fn predict(a: &PredictArgs, dir: &Path) -> unelisa::Result<()> {
    let labels = io::read_labels_csv(io::open(&a.labels)?)?;
    let need_experts = || -> unelisa::Result<ExpertFile> {
        let path = a
            .experts
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("--experts is required for bayes and amv".into()))?;
        let file = read_expert_file(path, labels.p())?;
        if file.experts.is_empty() {
            return Err(Error::InvalidArgument("expert report selects no experts".into()));
        }
        Ok(file)
    };
    let pred: PredictionResult = match a.method {
        MethodArg::Bayes => {
            let file = need_experts()?;
            let fit = em_fit(&labels, &file.experts, &EmConfig::default())?;
            for f in &fit.flags {
                eprintln!("note: {f}");
            }
            let path = dir.join("bayes_weights.json");
            fs::write(&path, serde_json::to_string_pretty(&fit.report)?)?;
            bayes_classify(&fit.report, &labels)?
        }
        MethodArg::Amv => {
            let file = need_experts()?;
            let signs = SignMatrix::from_fn(file.experts.clone(), |s, t| {
                file.edges
                    .iter()
                    .find(|&&(a, b, _)| (a, b) == (s, t) || (a, b) == (t, s))
                    .map_or(0, |&(_, _, w)| if w > 0.0 { 1 } else { -1 })
            });
            augmented_majority_vote(&labels, &signs, &file.sizes)?.prediction
        }
        MethodArg::Mv => majority_vote(&labels),
        MethodArg::Ds => dawid_skene(&labels, 1e-8, 500)?.prediction,
        MethodArg::Sml => sml(&labels)?.prediction,
    };
    for f in &pred.flags {
        eprintln!("note: {f}");
    }
    let path = dir.join("predictions.csv");
    io::write_predictions_csv(io::create(&path)?, labels.instance_ids(), &pred)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn flag_for<'a>(metric: &str, flags: &'a [String]) -> &'a str {
    let prefixes: &[&str] = match metric {
        "ppv" => &["PPV"],
        "npv" => &["NPV"],
        "f_score" => &["F-score"],
        "f1" => &["F1", "recall"],
        "auc" => &["AUC"],
        _ => &[],
    };
    flags
        .iter()
        .find(|f| prefixes.iter().any(|p| f.starts_with(p)))
        .map_or("", String::as_str)
}

fn evaluate(a: &EvaluateArgs, dir: &Path) -> unelisa::Result<()> {
    let (ids, pred) = io::read_predictions_csv(io::open(&a.pred)?, Method::Mv)?;
    let truth = io::read_truth_csv(io::open(&a.truth)?)?.aligned_to(&ids)?;
    let opts = ClassificationOptions {
        threshold: a.threshold,
        conventional_f1: a.f1,
    };
    let m = classification(&pred, &truth, opts)?;
    let mut rows = vec![
        ("accuracy", m.accuracy),
        ("auc", m.auc),
        ("ppv", m.ppv),
        ("npv", m.npv),
        ("f_score", m.f_score),
    ];
    if let Some(f1) = m.f1 {
        rows.push(("f1", f1));
    }
    let path = dir.join("metrics.csv");
    let mut w = io::create(&path)?;
    let mut shown = String::new();
    writeln!(w, "metric,value,flag")?;
    for (name, value) in rows {
        let flag = flag_for(name, &m.flags).replace(',', ";");
        writeln!(w, "{name},{value},{flag}")?;
        shown.push_str(&format!("{name:>9} {value:.4} {flag}\n"));
    }
    // a closed pipe on stdout is not an error worth reporting
    let _ = std::io::stdout().write_all(shown.as_bytes());
    Ok(())
}

fn benchmark(a: &BenchmarkArgs, seed: Option<u64>, out: Option<PathBuf>) -> unelisa::Result<()> {
    let mut cfg = match &a.config {
        Some(path) => BenchConfig::parse(&fs::read_to_string(path)?)?,
        None => BenchConfig::default(),
    };
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let dir = out
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)?;
    let report = run_benchmark(&cfg)?;
    write_results_csv(io::create(dir.join("results.csv"))?, &report.summaries)?;
    write_trials_csv(io::create(dir.join("trials.csv"))?, &report.records, &cfg.methods)?;
    println!(
        "{:>4} {:>7} {:>3} {:>6}  {:<10} {:>7} {:>7}",
        "p", "rule", "d0", "snr", "metric", "mean", "sd"
    );
    for s in &report.summaries {
        println!(
            "{:>4} {:>7} {:>3} {:>6}  {:<10} {:>7.3} {:>7.3}",
            s.cell.p, s.cell.d0_rule, s.cell.d0, s.cell.snr, s.metric, s.mean, s.sd
        );
    }
    println!(
        "wrote {} and {}",
        dir.join("results.csv").display(),
        dir.join("trials.csv").display()
    );
    Ok(())
}
