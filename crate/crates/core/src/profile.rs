//! Per-class topological profiles and Topological Uncertainty scoring.
//!
//! Fitting groups training samples by the class the network *predicts* for
//! them, averages their diagrams per `(layer, class)` and keeps only those
//! Fréchet means plus the distribution of training TU values. The TU of a new
//! sample is the mean over selected layers of the `Dist2` distance between its
//! diagram and the mean diagram of its predicted class.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::{diagram_distance, frechet_mean, DistanceKind};
use crate::model::{network_fingerprint, NetworkModel};
use crate::rng::{stream_rng, streams};
use crate::textio::{push_reals, read_file, write_file, Records};
use crate::topology::{diagrams_for, diagrams_for_trace, LayerSelection, PersistenceDiagram};

const MAGIC: &str = "topo-uncertainty-profile";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct TopologicalProfile {
    fingerprint: String,
    layers: Vec<usize>,
    cardinalities: Vec<usize>,
    num_classes: usize,
    means: BTreeMap<(usize, usize), PersistenceDiagram>,
    train_tu: Vec<f64>,
    counts: Vec<usize>,
}

impl TopologicalProfile {
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn layers(&self) -> &[usize] {
        &self.layers
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// Fréchet mean for `(layer, class)`.
    pub fn mean(&self, layer: usize, class: usize) -> Option<&PersistenceDiagram> {
        self.means.get(&(layer, class))
    }

    /// Training TU values, ascending.
    pub fn train_tu(&self) -> &[f64] {
        &self.train_tu
    }

    /// Fitting samples per predicted class.
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn covers(&self, class: usize) -> bool {
        self.counts.get(class).is_some_and(|&c| c > 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuReport {
    pub tu: f64,
    pub predicted: usize,
    pub confidence: f64,
    /// `(layer, distance)` in layer order.
    pub per_layer: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FitOptions {
    pub subsample: Option<usize>,
    pub seed: u64,
}

fn tu_from_diagrams(
    means: &BTreeMap<(usize, usize), PersistenceDiagram>,
    layers: &[usize],
    class: usize,
    diagrams: &[PersistenceDiagram],
) -> Result<(f64, Vec<(usize, f64)>)> {
    let mut per_layer = Vec::with_capacity(layers.len());
    for (&layer, dgm) in layers.iter().zip(diagrams) {
        let mean = means
            .get(&(layer, class))
            .ok_or(Error::UncoveredClass(class))?;
        per_layer.push((layer, diagram_distance(dgm, mean, DistanceKind::Dist2)?));
    }
    let tu = per_layer.iter().map(|(_, d)| d).sum::<f64>() / per_layer.len() as f64;
    Ok((tu, per_layer))
}

/// Fits the profile of `net` on `samples`.
pub fn fit_profile(
    net: &NetworkModel,
    samples: &[Vec<f64>],
    layers: &LayerSelection,
    options: &FitOptions,
) -> Result<TopologicalProfile> {
    if samples.is_empty() {
        return Err(Error::Empty("training data"));
    }
    let computed: Vec<(usize, Vec<PersistenceDiagram>)> = samples
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let trace = net.forward(x).map_err(|e| Error::at_sample(i, e))?;
            let dgms = diagrams_for_trace(net, &trace, layers).map_err(|e| Error::at_sample(i, e))?;
            Ok((trace.predicted, dgms))
        })
        .collect::<Result<_>>()?;

    let num_classes = net.num_classes();
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); num_classes];
    for (i, (k, _)) in computed.iter().enumerate() {
        by_class[*k].push(i);
    }
    let uncovered: Vec<usize> = (0..num_classes).filter(|&k| by_class[k].is_empty()).collect();
    if !uncovered.is_empty() {
        return Err(Error::UncoveredClasses(uncovered));
    }
    if let Some(cap) = options.subsample {
        if cap == 0 {
            return Err(Error::InvalidArgument("subsample cap must be positive".into()));
        }
        let mut rng = stream_rng(options.seed, streams::SUBSAMPLE);
        for members in &mut by_class {
            if members.len() > cap {
                let mut picked = rand::seq::index::sample(&mut rng, members.len(), cap).into_vec();
                picked.sort_unstable();
                *members = picked.into_iter().map(|p| members[p]).collect();
            }
        }
    }

    let layer_ids = layers.indices().to_vec();
    let mut means = BTreeMap::new();
    for (pos, &layer) in layer_ids.iter().enumerate() {
        for (k, members) in by_class.iter().enumerate() {
            let set: Vec<PersistenceDiagram> =
                members.iter().map(|&i| computed[i].1[pos].clone()).collect();
            means.insert((layer, k), frechet_mean(&set)?);
        }
    }
    let cardinalities = layer_ids
        .iter()
        .map(|&l| means[&(l, 0)].len())
        .collect();

    let mut fitting: Vec<usize> = by_class.iter().flatten().copied().collect();
    fitting.sort_unstable();
    let mut train_tu = fitting
        .par_iter()
        .map(|&i| {
            let (k, dgms) = &computed[i];
            tu_from_diagrams(&means, &layer_ids, *k, dgms).map(|(tu, _)| tu)
        })
        .collect::<Result<Vec<f64>>>()?;
    train_tu.sort_by(f64::total_cmp);

    Ok(TopologicalProfile {
        fingerprint: network_fingerprint(net),
        layers: layer_ids,
        cardinalities,
        num_classes,
        means,
        train_tu,
        counts: by_class.iter().map(Vec::len).collect(),
    })
}

/// A profile checked against its network once, for repeated scoring.
pub struct Scorer<'a> {
    profile: &'a TopologicalProfile,
    net: &'a NetworkModel,
    selection: LayerSelection,
}

impl<'a> Scorer<'a> {
    pub fn new(profile: &'a TopologicalProfile, net: &'a NetworkModel) -> Result<Self> {
        let fp = network_fingerprint(net);
        if fp != profile.fingerprint {
            return Err(Error::FingerprintMismatch {
                profile: profile.fingerprint.clone(),
                network: fp,
            });
        }
        let selection = LayerSelection::explicit(net, &profile.layers, true)?;
        Ok(Scorer {
            profile,
            net,
            selection,
        })
    }

    pub fn score(&self, x: &[f64]) -> Result<TuReport> {
        let trace = self.net.forward(x)?;
        if !self.profile.covers(trace.predicted) {
            return Err(Error::UncoveredClass(trace.predicted));
        }
        let diagrams = diagrams_for_trace(self.net, &trace, &self.selection)?;
        let (tu, per_layer) = tu_from_diagrams(
            &self.profile.means,
            &self.profile.layers,
            trace.predicted,
            &diagrams,
        )?;
        Ok(TuReport {
            tu,
            predicted: trace.predicted,
            confidence: trace.confidence,
            per_layer,
        })
    }

    /// Scores in input order; the first failure is reported with its index.
    pub fn score_batch(&self, batch: &[Vec<f64>]) -> Result<Vec<TuReport>> {
        batch
            .par_iter()
            .enumerate()
            .map(|(i, x)| self.score(x).map_err(|e| Error::at_sample(i, e)))
            .collect()
    }
}

pub fn topological_uncertainty(
    profile: &TopologicalProfile,
    net: &NetworkModel,
    x: &[f64],
) -> Result<TuReport> {
    Scorer::new(profile, net)?.score(x)
}

pub fn score_batch(
    profile: &TopologicalProfile,
    net: &NetworkModel,
    batch: &[Vec<f64>],
) -> Result<Vec<TuReport>> {
    Scorer::new(profile, net)?.score_batch(batch)
}

/// Diagrams of one training sample, kept for the min-over-training variant.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredSample {
    pub predicted: usize,
    pub layers: Vec<usize>,
    pub diagrams: Vec<PersistenceDiagram>,
}

impl StoredSample {
    pub fn diagram(&self, layer: usize) -> Option<&PersistenceDiagram> {
        self.layers
            .iter()
            .position(|&l| l == layer)
            .map(|p| &self.diagrams[p])
    }
}

pub fn store_samples(
    net: &NetworkModel,
    samples: &[Vec<f64>],
    layers: &LayerSelection,
) -> Result<Vec<StoredSample>> {
    samples
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let trace = net.forward(x).map_err(|e| Error::at_sample(i, e))?;
            let diagrams =
                diagrams_for_trace(net, &trace, layers).map_err(|e| Error::at_sample(i, e))?;
            Ok(StoredSample {
                predicted: trace.predicted,
                layers: layers.indices().to_vec(),
                diagrams,
            })
        })
        .collect()
}

/// Smallest `Dist2` between the layer-`layer` diagram of `x` and those of
/// stored samples sharing its predicted class.
pub fn tu_min_over_train(
    net: &NetworkModel,
    stored: &[StoredSample],
    x: &[f64],
    layer: usize,
) -> Result<f64> {
    let selection = LayerSelection::explicit(net, &[layer], true)?;
    let trace = net.forward(x)?;
    let own = diagrams_for_trace(net, &trace, &selection)?.remove(0);
    let mut best: Option<f64> = None;
    for s in stored.iter().filter(|s| s.predicted == trace.predicted) {
        let other = s.diagram(layer).ok_or(Error::LayerOutOfRange {
            layer,
            max: s.layers.iter().copied().max().unwrap_or(0),
        })?;
        let d = diagram_distance(&own, other, DistanceKind::Dist2)?;
        best = Some(best.map_or(d, |b: f64| b.min(d)));
    }
    best.ok_or(Error::UncoveredClass(trace.predicted))
}

/// Diagrams of `x` for the profile's layers, without scoring.
pub fn profile_diagrams(
    profile: &TopologicalProfile,
    net: &NetworkModel,
    x: &[f64],
) -> Result<Vec<PersistenceDiagram>> {
    let selection = LayerSelection::explicit(net, &profile.layers, true)?;
    diagrams_for(net, x, &selection)
}

pub fn render_profile(profile: &TopologicalProfile) -> String {
    let mut out = String::new();
    writeln!(out, "{MAGIC} {VERSION}").unwrap();
    writeln!(out, "fingerprint {}", profile.fingerprint).unwrap();
    writeln!(out, "classes {}", profile.num_classes).unwrap();
    let join = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    writeln!(out, "layers {}", join(&profile.layers)).unwrap();
    writeln!(out, "cardinality {}", join(&profile.cardinalities)).unwrap();
    for ((layer, class), dgm) in &profile.means {
        push_reals(&mut out, &format!("mean {layer} {class}"), dgm.weights());
    }
    push_reals(
        &mut out,
        &format!("train_tu {}", profile.train_tu.len()),
        &profile.train_tu,
    );
    writeln!(out, "counts {}", join(&profile.counts)).unwrap();
    out.push_str("end\n");
    out
}

pub fn parse_profile(text: &str) -> Result<TopologicalProfile> {
    let mut records = Records::new(text, "profile file");
    let header = records.expect(MAGIC)?;
    let version: String = header.value("format version")?;
    if version != VERSION.to_string() {
        return Err(Error::Version {
            found: version,
            expected: VERSION,
        });
    }
    if records.peek_keyword() != Some("fingerprint") {
        return Err(Error::MissingFingerprint);
    }
    let fingerprint: String = records.expect("fingerprint")?.value("fingerprint")?;
    let num_classes: usize = records.expect("classes")?.value("class count")?;
    let layers: Vec<usize> = records.expect("layers")?.all(0, "layer index")?;
    let card_rec = records.expect("cardinality")?;
    let cardinalities: Vec<usize> = card_rec.all(0, "cardinality")?;
    if layers.is_empty() {
        return Err(Error::EmptyLayers);
    }
    if cardinalities.len() != layers.len() {
        return Err(Error::parse(card_rec.line, "one cardinality per layer required"));
    }

    let mut means = BTreeMap::new();
    while records.peek_keyword() == Some("mean") {
        let rec = records.expect("mean")?;
        let layer: usize = rec.get(0, "layer")?;
        let class: usize = rec.get(1, "class")?;
        let pos = layers
            .iter()
            .position(|&l| l == layer)
            .ok_or_else(|| Error::parse(rec.line, format!("layer {layer} not in layer list")))?;
        if class >= num_classes {
            return Err(Error::parse(rec.line, format!("class {class} out of range")));
        }
        let weights: Vec<f64> = rec.all(2, "diagram weight")?;
        if weights.len() != cardinalities[pos] {
            return Err(Error::DimensionMismatch {
                layer,
                message: format!(
                    "mean for class {class} has {} points, expected {}",
                    weights.len(),
                    cardinalities[pos]
                ),
            });
        }
        means.insert((layer, class), PersistenceDiagram::new(weights));
    }
    let tu_rec = records.expect("train_tu")?;
    let count: usize = tu_rec.get(0, "train_tu count")?;
    let train_tu: Vec<f64> = tu_rec.all(1, "train_tu value")?;
    if train_tu.len() != count {
        return Err(Error::Truncated(format!(
            "train_tu lists {} of {count} values",
            train_tu.len()
        )));
    }
    let counts_rec = records.expect("counts")?;
    let counts: Vec<usize> = counts_rec.all(0, "count")?;
    if counts.len() != num_classes {
        return Err(Error::parse(counts_rec.line, "one count per class required"));
    }
    records.expect("end")?;
    records.finish()?;

    for (k, &c) in counts.iter().enumerate() {
        for &l in &layers {
            if c > 0 && !means.contains_key(&(l, k)) {
                return Err(Error::Truncated(format!("missing mean for layer {l} class {k}")));
            }
        }
    }
    Ok(TopologicalProfile {
        fingerprint,
        layers,
        cardinalities,
        num_classes,
        means,
        train_tu,
        counts,
    })
}

pub fn save_profile(profile: &TopologicalProfile, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &render_profile(profile))
}

pub fn load_profile(path: impl AsRef<Path>) -> Result<TopologicalProfile> {
    parse_profile(&read_file(path.as_ref())?)
}
