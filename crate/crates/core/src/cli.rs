//! Command-line workflows. Every artifact is a file; every random choice
//! comes from `--seed`.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::datagen::{
    self, fake_graphs, graph_spectral_features, load_graph, save_graph, ShiftKind, ShiftSpec,
    SpectralParams, SyntheticKind,
};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::model::{load_network, save_network, train_toy, Activation, Hyper, LayerSpec, NetworkModel};
use crate::monitor::{
    confidence_scores, detect, nearest_rank, roc_metrics, selection_score, shift_monitor, spearman,
    Candidate, Direction, DEFAULT_QUANTILE,
};
use crate::profile::{fit_profile, load_profile, save_profile, FitOptions, Scorer, TopologicalProfile};
use crate::topology::LayerSelection;

#[derive(Debug, Parser)]
#[command(name = "topo-uncertainty", version, about = "Topological uncertainty for feed-forward networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    /// Pretty-printed JSON.
    Structured,
}

#[derive(Debug, Args)]
struct Report {
    /// Write the report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a topological profile on training data.
    Fit {
        #[arg(long)]
        net: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Comma-separated 1-based layer indices; default all hidden layers.
        #[arg(long, value_delimiter = ',')]
        layers: Option<Vec<usize>>,
        /// Also use the softmax layer's graph.
        #[arg(long)]
        include_output: bool,
        /// Keep at most this many samples per predicted class, chosen uniformly.
        #[arg(long)]
        subsample: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Profile file to write.
        #[arg(long)]
        output: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Score every sample of a dataset.
    Score {
        #[arg(long)]
        net: PathBuf,
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        report: Report,
    },
    /// Compare TU and max-softmax confidence as OOD detectors.
    DetectOod {
        #[arg(long)]
        net: PathBuf,
        #[arg(long)]
        profile: PathBuf,
        /// In-distribution samples.
        #[arg(long)]
        data: PathBuf,
        /// Out-of-distribution samples.
        #[arg(long)]
        ood_data: PathBuf,
        #[arg(long, default_value_t = DEFAULT_QUANTILE)]
        quantile: f64,
        #[command(flatten)]
        report: Report,
    },
    /// Rank candidate networks by mean TU on an unlabeled batch.
    SelectModel {
        /// Lines of `name net profile [accuracy]`; relative paths resolve
        /// against the manifest's directory.
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        report: Report,
    },
    /// Track TU on a batch under increasing shift.
    MonitorShift {
        #[arg(long)]
        net: PathBuf,
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum)]
        shift: ShiftArg,
        /// Comma-separated levels: pixel counts, blur sigmas or noise sigmas.
        #[arg(long, value_delimiter = ',', required = true)]
        levels: Vec<f64>,
        /// Image shape `RxC`, required by pixel and blur shifts.
        #[arg(long)]
        shape: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        report: Report,
    },
    /// Generate datasets or graphs.
    GenData(GenArgs),
    /// Accuracy and confidence of a network on labeled data.
    EvalNet {
        #[arg(long)]
        net: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        report: Report,
    },
    /// Train a small softmax classifier on labeled data.
    Train {
        #[arg(long)]
        data: PathBuf,
        /// Hidden layers as `units:activation`, comma-separated, e.g. `64:relu,64:relu`.
        #[arg(long, value_delimiter = ',', required = true)]
        hidden: Vec<String>,
        /// Output classes; default max label + 1.
        #[arg(long)]
        classes: Option<usize>,
        #[arg(long, default_value_t = 200)]
        epochs: usize,
        #[arg(long, default_value_t = 0.05)]
        learning_rate: f64,
        #[arg(long, default_value_t = 32)]
        batch_size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Network file to write.
        #[arg(long)]
        output: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ShiftArg {
    Pixels,
    Blur,
    Noise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GenKind {
    TwoMoons,
    Blobs,
    UniformBox,
    UniformImages,
    GaussianImages,
    FakeGraphs,
    GraphFeatures,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: GenKind,
    /// Number of samples or graphs.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Two-moons coordinate noise.
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    /// Blob count.
    #[arg(long)]
    classes: Option<usize>,
    /// Feature dimension for blobs and uniform-box.
    #[arg(long)]
    dim: Option<usize>,
    /// Blob spread, or pixel spread for gaussian-images.
    #[arg(long)]
    std: Option<f64>,
    /// Blob centers are drawn in `[-box, box]^dim`.
    #[arg(long = "box", default_value_t = 10.0)]
    half_width: f64,
    /// Seed of the blob centers, shared by train and test sets.
    #[arg(long, default_value_t = 0)]
    center_seed: u64,
    #[arg(long, allow_negative_numbers = true)]
    low: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    high: Option<f64>,
    /// uniform-box: keep only points farther than `--min-distance` from every sample here.
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    min_distance: f64,
    /// Image shape `RxC` or `RxCxK`.
    #[arg(long)]
    shape: Option<String>,
    /// Pixel mean for gaussian-images.
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    mean: f64,
    #[arg(long, value_delimiter = ',')]
    vertex_counts: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    edge_counts: Option<Vec<usize>>,
    /// graph-features: lines of `graph-file [label]`.
    #[arg(long)]
    graphs: Option<PathBuf>,
    /// Dataset file, or directory for fake-graphs.
    #[arg(long)]
    output: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

/// Parses `argv` (program name first), runs the command and returns the exit
/// status. Diagnostics go to stderr as one line.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return 0;
            }
            let rendered = e.to_string();
            let line = rendered.lines().find(|l| !l.trim().is_empty()).unwrap_or("invalid arguments");
            let _ = writeln!(err, "{}", line.trim());
            return 2;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            let _ = writeln!(err, "error: {msg}");
            1
        }
    }
}

struct Output {
    text: String,
    value: Value,
}

fn emit(output: Output, format: Format, path: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    let body = match format {
        Format::Text => output.text,
        Format::Structured => {
            let mut s = serde_json::to_string_pretty(&output.value).expect("json values serialize");
            s.push('\n');
            s
        }
    };
    match path {
        Some(p) => std::fs::write(p, body).map_err(|e| Error::io(p, e)),
        None => out
            .write_all(body.as_bytes())
            .map_err(|e| Error::io(Path::new("<stdout>"), e)),
    }
}

fn execute(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Fit {
            net,
            data,
            layers,
            include_output,
            subsample,
            seed,
            output,
            format,
        } => {
            let net = load_network(&net)?;
            let data = Dataset::load(&data)?;
            let selection = match layers {
                Some(l) => LayerSelection::explicit(&net, &l, include_output)?,
                None => LayerSelection::all(&net, include_output)?,
            };
            let profile = fit_profile(&net, data.samples(), &selection, &FitOptions { subsample, seed })?;
            save_profile(&profile, &output)?;
            emit(fit_summary(&profile), format, None, out)
        }
        Command::Score { net, profile, data, report } => {
            let net = load_network(&net)?;
            let profile = load_profile(&profile)?;
            let data = Dataset::load(&data)?;
            let reports = Scorer::new(&profile, &net)?.score_batch(data.samples())?;
            let mut text = String::from("index\tpredicted\tconfidence\ttu\n");
            let mut rows = Vec::with_capacity(reports.len());
            for (i, r) in reports.iter().enumerate() {
                writeln!(text, "{i}\t{}\t{}\t{}", r.predicted, r.confidence, r.tu).unwrap();
                rows.push(json!({
                    "index": i,
                    "predicted": r.predicted,
                    "confidence": r.confidence,
                    "tu": r.tu,
                    "per_layer": r.per_layer.iter().map(|(l, d)| json!({"layer": l, "distance": d})).collect::<Vec<_>>(),
                }));
            }
            emit(Output { text, value: Value::Array(rows) }, report.format, report.output.as_deref(), out)
        }
        Command::DetectOod {
            net,
            profile,
            data,
            ood_data,
            quantile,
            report,
        } => {
            let net = load_network(&net)?;
            let profile = load_profile(&profile)?;
            let inside = Dataset::load(&data)?;
            let outside = Dataset::load(&ood_data)?;
            emit(
                detect_ood(&net, &profile, &inside, &outside, quantile)?,
                report.format,
                report.output.as_deref(),
                out,
            )
        }
        Command::SelectModel { manifest, data, report } => {
            let entries = read_manifest(&manifest)?;
            let data = Dataset::load(&data)?;
            let loaded = entries
                .iter()
                .map(|e| Ok((load_network(&e.net)?, load_profile(&e.profile)?)))
                .collect::<Result<Vec<_>>>()?;
            let candidates: Vec<Candidate<'_>> = entries
                .iter()
                .zip(&loaded)
                .map(|(e, (net, profile))| Candidate {
                    name: e.name.clone(),
                    net,
                    profile,
                    accuracy: e.accuracy,
                })
                .collect();
            let result = selection_score(&candidates, data.samples())?;
            let mut text = String::from("rank\tname\tmean_tu\tmean_confidence\taccuracy\tscored\tskipped\n");
            for (rank, &m) in result.ranking.iter().enumerate() {
                let s = &result.models[m];
                writeln!(
                    text,
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    rank + 1,
                    s.name,
                    opt(s.mean_score),
                    opt(s.mean_confidence),
                    opt(s.accuracy),
                    s.scored,
                    s.skipped
                )
                .unwrap();
            }
            if let Some(g) = result.gap_metric {
                writeln!(text, "gap_metric\t{g}").unwrap();
            }
            let value = serde_json::to_value(&result).expect("serializable");
            emit(Output { text, value }, report.format, report.output.as_deref(), out)
        }
        Command::MonitorShift {
            net,
            profile,
            data,
            shift,
            levels,
            shape,
            seed,
            report,
        } => {
            let shape = shape.as_deref().map(parse_shape2).transpose()?;
            if matches!(shift, ShiftArg::Pixels | ShiftArg::Blur) && shape.is_none() {
                return Err(Error::InvalidArgument("--shape is required for pixel and blur shifts".into()));
            }
            let kinds = levels
                .iter()
                .map(|&l| shift_kind(shift, l))
                .collect::<Result<Vec<_>>>()?;
            let net = load_network(&net)?;
            let profile = load_profile(&profile)?;
            let data = Dataset::load(&data)?;
            emit(
                monitor(&net, &profile, &data, &levels, &kinds, shape, seed)?,
                report.format,
                report.output.as_deref(),
                out,
            )
        }
        Command::GenData(args) => {
            let format = args.format;
            emit(gen_data(args)?, format, None, out)
        }
        Command::EvalNet { net, data, report } => {
            let net = load_network(&net)?;
            let data = Dataset::load(&data)?;
            emit(eval_net(&net, &data)?, report.format, report.output.as_deref(), out)
        }
        Command::Train {
            data,
            hidden,
            classes,
            epochs,
            learning_rate,
            batch_size,
            seed,
            output,
            format,
        } => {
            let specs = hidden.iter().map(|h| parse_layer_spec(h)).collect::<Result<Vec<_>>>()?;
            let data = Dataset::load(&data)?;
            let labels = data
                .labels()
                .ok_or_else(|| Error::InvalidArgument("training data has no labels".into()))?;
            let classes = match classes {
                Some(k) => k,
                None => labels.iter().max().map_or(0, |m| m + 1),
            };
            let hyper = Hyper {
                learning_rate,
                epochs,
                batch_size,
                seed,
            };
            let outcome = train_toy(&specs, classes, &data, &hyper)?;
            save_network(&outcome.network, &output)?;
            let text = format!(
                "parameters\t{}\ntrain_accuracy\t{}\nfinal_loss\t{}\n",
                outcome.network.parameter_count(),
                outcome.train_accuracy,
                outcome.final_loss
            );
            let value = json!({
                "parameters": outcome.network.parameter_count(),
                "train_accuracy": outcome.train_accuracy,
                "final_loss": outcome.final_loss,
            });
            emit(Output { text, value }, format, None, out)
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| x.to_string())
}

fn fit_summary(profile: &TopologicalProfile) -> Output {
    let train = profile.train_tu();
    let q = |p: f64| nearest_rank(train, p).expect("fitted profiles are nonempty");
    let (q50, q95) = (q(0.5), q(0.95));
    let layers: Vec<String> = profile.layers().iter().map(|l| l.to_string()).collect();
    let counts: Vec<String> = profile.counts().iter().map(|c| c.to_string()).collect();
    let text = format!(
        "fingerprint\t{}\nlayers\t{}\nclass_counts\t{}\ntrain_tu_median\t{q50}\ntrain_tu_q95\t{q95}\n",
        profile.fingerprint(),
        layers.join(","),
        counts.join(","),
    );
    let value = json!({
        "fingerprint": profile.fingerprint(),
        "layers": profile.layers(),
        "class_counts": profile.counts(),
        "train_tu_median": q50,
        "train_tu_q95": q95,
    });
    Output { text, value }
}

fn detect_ood(
    net: &NetworkModel,
    profile: &TopologicalProfile,
    inside: &Dataset,
    outside: &Dataset,
    quantile: f64,
) -> Result<Output> {
    let scorer = Scorer::new(profile, net)?;
    let tu_in: Vec<f64> = scorer.score_batch(inside.samples())?.iter().map(|r| r.tu).collect();
    let tu_out: Vec<f64> = scorer.score_batch(outside.samples())?.iter().map(|r| r.tu).collect();
    let conf_in = confidence_scores(net, inside.samples())?;
    let conf_out = confidence_scores(net, outside.samples())?;

    // TU is calibrated on the profile's training scores; confidence, which has
    // no stored training scores, on the in-distribution batch at 1 - q.
    let tu_threshold = nearest_rank(profile.train_tu(), quantile)?;
    let low_q = 1.0 - quantile;
    let conf_threshold = if low_q > 0.0 {
        nearest_rank(&conf_in, low_q)?
    } else {
        f64::NEG_INFINITY
    };

    let mut text = String::from(
        "method\tauroc\tfpr_at_95_tpr\tthreshold_at_95_tpr\tcalibrated_threshold\tflagged_in\tflagged_out\n",
    );
    let mut methods = serde_json::Map::new();
    for (name, ins, outs, direction, calibrated) in [
        ("tu", &tu_in, &tu_out, Direction::FlagAbove, tu_threshold),
        ("confidence", &conf_in, &conf_out, Direction::FlagBelow, conf_threshold),
    ] {
        let report = roc_metrics(ins, outs, direction)?;
        let rate = |s: &[f64]| s.iter().filter(|&&v| detect(v, calibrated, direction)).count() as f64 / s.len() as f64;
        let (flag_in, flag_out) = (rate(ins), rate(outs));
        writeln!(
            text,
            "{name}\t{}\t{}\t{}\t{calibrated}\t{flag_in}\t{flag_out}",
            report.auroc, report.fpr_at_95_tpr, report.threshold
        )
        .unwrap();
        let mut v = serde_json::to_value(&report).expect("serializable");
        let obj = v.as_object_mut().expect("report is an object");
        obj.insert("threshold_at_95_tpr".into(), obj["threshold"].clone());
        obj.remove("threshold");
        obj.insert("calibrated_threshold".into(), json_f64(calibrated));
        obj.insert("flagged_in".into(), json!(flag_in));
        obj.insert("flagged_out".into(), json!(flag_out));
        methods.insert(name.into(), v);
    }
    let value = json!({ "quantile": quantile, "methods": methods });
    Ok(Output { text, value })
}

/// JSON has no infinities; they are written as strings.
fn json_f64(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(v.to_string())
    }
}

fn monitor(
    net: &NetworkModel,
    profile: &TopologicalProfile,
    data: &Dataset,
    levels: &[f64],
    kinds: &[ShiftKind],
    shape: Option<(usize, usize)>,
    seed: u64,
) -> Result<Output> {
    let batches = kinds
        .iter()
        .map(|&kind| ShiftSpec { kind, seed }.apply_batch(data.samples(), shape))
        .collect::<Result<Vec<_>>>()?;
    let schedule: Vec<crate::monitor::ShiftLevel<'_>> = levels
        .iter()
        .zip(&batches)
        .map(|(&level, batch)| crate::monitor::ShiftLevel {
            level,
            batch,
            labels: data.labels(),
        })
        .collect();
    let summary = shift_monitor(profile, net, &schedule)?;
    let mut text = String::from("level\tmean_tu\tq10\tq90\tmean_confidence\taccuracy\n");
    for s in &summary {
        writeln!(
            text,
            "{}\t{}\t{}\t{}\t{}\t{}",
            s.level,
            s.mean_tu,
            s.q10,
            s.q90,
            s.mean_confidence,
            opt(s.accuracy)
        )
        .unwrap();
    }
    let rho = if summary.len() >= 2 {
        let tus: Vec<f64> = summary.iter().map(|s| s.mean_tu).collect();
        Some(spearman(levels, &tus)?)
    } else {
        None
    };
    if let Some(r) = rho {
        writeln!(text, "spearman\t{r}").unwrap();
    }
    let value = json!({ "levels": summary, "spearman": rho });
    Ok(Output { text, value })
}

fn shift_kind(shift: ShiftArg, level: f64) -> Result<ShiftKind> {
    if level.is_nan() || level < 0.0 || level.is_infinite() {
        return Err(Error::InvalidArgument(format!("shift level {level} must be >= 0")));
    }
    Ok(match shift {
        ShiftArg::Pixels => {
            if level.fract() != 0.0 {
                return Err(Error::InvalidArgument(format!("pixel count {level} is not an integer")));
            }
            ShiftKind::PixelCorruption { n: level as usize }
        }
        ShiftArg::Blur => ShiftKind::GaussianBlur { sigma: level },
        ShiftArg::Noise => ShiftKind::CoordinateNoise { sigma: level },
    })
}

fn eval_net(net: &NetworkModel, data: &Dataset) -> Result<Output> {
    let labels = data
        .labels()
        .ok_or_else(|| Error::InvalidArgument("evaluation data has no labels".into()))?;
    if data.is_empty() {
        return Err(Error::Empty("evaluation data"));
    }
    let k = net.num_classes();
    let mut support = vec![0usize; k];
    let mut correct = vec![0usize; k];
    let mut predicted_counts = vec![0usize; k];
    let mut confidences = Vec::with_capacity(data.len());
    for (i, (x, &y)) in data.samples().iter().zip(labels).enumerate() {
        if y >= k {
            return Err(Error::LabelOutOfRange {
                index: i,
                label: y,
                num_classes: k,
            });
        }
        let (p, c) = net.predict(x).map_err(|e| Error::at_sample(i, e))?;
        support[y] += 1;
        predicted_counts[p] += 1;
        if p == y {
            correct[y] += 1;
        }
        confidences.push(c);
    }
    let n = data.len() as f64;
    let accuracy = correct.iter().sum::<usize>() as f64 / n;
    let mean_confidence = crate::metrics::compensated_sum(confidences.iter().copied()) / n;
    let mut text = format!("samples\t{}\naccuracy\t{accuracy}\nmean_confidence\t{mean_confidence}\n", data.len());
    text.push_str("class\tsupport\tpredicted\tcorrect\n");
    let mut classes = Vec::with_capacity(k);
    for c in 0..k {
        writeln!(text, "{c}\t{}\t{}\t{}", support[c], predicted_counts[c], correct[c]).unwrap();
        classes.push(json!({
            "class": c,
            "support": support[c],
            "predicted": predicted_counts[c],
            "correct": correct[c],
        }));
    }
    let value = json!({
        "samples": data.len(),
        "accuracy": accuracy,
        "mean_confidence": mean_confidence,
        "classes": classes,
    });
    Ok(Output { text, value })
}

fn require<T>(v: Option<T>, flag: &str, kind: &str) -> Result<T> {
    v.ok_or_else(|| Error::InvalidArgument(format!("--{flag} is required for --kind {kind}")))
}

fn gen_data(a: GenArgs) -> Result<Output> {
    let kind_name = a.kind.to_possible_value().expect("no skipped variants").get_name().to_string();
    let k = kind_name.as_str();
    // Validate every required flag before generating anything.
    let dataset = match a.kind {
        GenKind::TwoMoons => {
            let n = require(a.n, "n", k)?;
            datagen::synthetic_dataset(&SyntheticKind::TwoMoons { n, noise: a.noise }, a.seed)?
        }
        GenKind::Blobs => {
            let n = require(a.n, "n", k)?;
            let classes = require(a.classes, "classes", k)?;
            let dim = require(a.dim, "dim", k)?;
            let centers = datagen::draw_blob_centers(classes, dim, a.half_width, a.center_seed);
            let std = a.std.unwrap_or(1.0);
            datagen::synthetic_dataset(&SyntheticKind::GaussianBlobs { n, centers, std }, a.seed)?
        }
        GenKind::UniformBox => {
            let n = require(a.n, "n", k)?;
            let low = require(a.low, "low", k)?;
            let high = require(a.high, "high", k)?;
            let (dim, reference) = match &a.reference {
                Some(p) => {
                    let r = Dataset::load(p)?;
                    if a.dim.is_some_and(|d| d != r.dim()) {
                        return Err(Error::InvalidArgument("--dim differs from the reference dimension".into()));
                    }
                    (r.dim(), r.samples().to_vec())
                }
                None => (require(a.dim, "dim", k)?, Vec::new()),
            };
            datagen::uniform_far_field(n, low, high, dim, &reference, a.min_distance, a.seed)?
        }
        GenKind::UniformImages => {
            let n = require(a.n, "n", k)?;
            let shape = parse_shape3(&require(a.shape.clone(), "shape", k)?)?;
            datagen::synthetic_dataset(&SyntheticKind::UniformImages { n, shape }, a.seed)?
        }
        GenKind::GaussianImages => {
            let n = require(a.n, "n", k)?;
            let shape = parse_shape3(&require(a.shape.clone(), "shape", k)?)?;
            let std = a.std.unwrap_or(0.1);
            datagen::synthetic_dataset(
                &SyntheticKind::GaussianImages {
                    n,
                    shape,
                    mean: a.mean,
                    std,
                },
                a.seed,
            )?
        }
        GenKind::FakeGraphs => {
            let n = require(a.n, "n", k)?;
            let vc = require(a.vertex_counts.clone(), "vertex-counts", k)?;
            let ec = require(a.edge_counts.clone(), "edge-counts", k)?;
            let graphs = fake_graphs(&vc, &ec, n, a.seed)?;
            std::fs::create_dir_all(&a.output).map_err(|e| Error::io(&a.output, e))?;
            let width = n.saturating_sub(1).to_string().len();
            let mut text = String::from("file\tvertices\tedges\n");
            let mut rows = Vec::with_capacity(graphs.len());
            for (i, g) in graphs.iter().enumerate() {
                let name = format!("graph_{i:0width$}.txt");
                save_graph(g, a.output.join(&name))?;
                writeln!(text, "{name}\t{}\t{}", g.vertex_count(), g.edge_count()).unwrap();
                rows.push(json!({"file": name, "vertices": g.vertex_count(), "edges": g.edge_count()}));
            }
            return Ok(Output {
                text,
                value: json!({ "graphs": rows }),
            });
        }
        GenKind::GraphFeatures => {
            let list = require(a.graphs.clone(), "graphs", k)?;
            graph_feature_dataset(&list)?
        }
    };
    dataset.save(&a.output)?;
    let text = format!(
        "samples\t{}\nfeatures\t{}\nlabeled\t{}\n",
        dataset.len(),
        dataset.dim(),
        dataset.labels().is_some()
    );
    let value = json!({
        "samples": dataset.len(),
        "features": dataset.dim(),
        "labeled": dataset.labels().is_some(),
    });
    Ok(Output { text, value })
}

fn graph_feature_dataset(list: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(list).map_err(|e| Error::io(list, e))?;
    let base = list.parent().unwrap_or(Path::new(""));
    let params = SpectralParams::default();
    let mut samples = Vec::new();
    let mut labels = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() > 2 {
            return Err(Error::parse(i + 1, "expected 'graph-file [label]'"));
        }
        let g = load_graph(base.join(parts[0]))?;
        samples.push(graph_spectral_features(&g, &params)?);
        if let Some(l) = parts.get(1) {
            labels.push(
                l.parse::<usize>()
                    .map_err(|_| Error::parse(i + 1, format!("invalid label '{l}'")))?,
            );
        }
    }
    let dim = params.eig_count + params.hks_quantiles;
    match labels.len() {
        0 => Dataset::unlabeled(dim, samples),
        n if n == samples.len() => Dataset::new(dim, samples, Some(labels)),
        _ => Err(Error::InvalidArgument("either every graph has a label or none does".into())),
    }
}

struct ManifestEntry {
    name: String,
    net: PathBuf,
    profile: PathBuf,
    accuracy: Option<f64>,
}

fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        if !(3..=4).contains(&parts.len()) {
            return Err(Error::parse(i + 1, "expected 'name net profile [accuracy]'"));
        }
        let accuracy = parts
            .get(3)
            .map(|a| {
                a.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::parse(i + 1, format!("invalid accuracy '{a}'")))
            })
            .transpose()?;
        entries.push(ManifestEntry {
            name: parts[0].to_string(),
            net: base.join(parts[1]),
            profile: base.join(parts[2]),
            accuracy,
        });
    }
    if entries.is_empty() {
        return Err(Error::Empty("model manifest"));
    }
    Ok(entries)
}

fn parse_dims(s: &str) -> Result<Vec<usize>> {
    s.split(['x', 'X'])
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .ok()
                .filter(|&v| v > 0)
                .ok_or_else(|| Error::InvalidArgument(format!("invalid shape '{s}'")))
        })
        .collect()
}

fn parse_shape2(s: &str) -> Result<(usize, usize)> {
    match parse_dims(s)?[..] {
        [r, c] => Ok((r, c)),
        _ => Err(Error::InvalidArgument(format!("shape '{s}' must be RxC"))),
    }
}

fn parse_shape3(s: &str) -> Result<(usize, usize, usize)> {
    match parse_dims(s)?[..] {
        [r, c] => Ok((r, c, 1)),
        [r, c, k] => Ok((r, c, k)),
        _ => Err(Error::InvalidArgument(format!("shape '{s}' must be RxC or RxCxK"))),
    }
}

fn parse_layer_spec(s: &str) -> Result<LayerSpec> {
    let (units, act) = s
        .split_once(':')
        .ok_or_else(|| Error::InvalidArgument(format!("hidden layer '{s}' must be units:activation")))?;
    let units = units
        .trim()
        .parse::<usize>()
        .map_err(|_| Error::InvalidArgument(format!("invalid unit count in '{s}'")))?;
    let activation: Activation = act.trim().parse()?;
    Ok(LayerSpec::new(units, activation))
}
