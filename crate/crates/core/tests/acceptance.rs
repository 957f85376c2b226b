//! Acceptance criteria. Each test prints one `criterion N ... PASS|FAIL` line
//! to stderr (bypassing output capture) and then asserts.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use topo_uncertainty::datagen::{
    draw_blob_centers, fake_graphs, graph_spectral_features, jacobi_eigendecomposition,
    synthetic_dataset, uniform_far_field, ShiftKind, ShiftSpec, SimpleGraph, SpectralParams,
    SyntheticKind,
};
use topo_uncertainty::dataset::Dataset;
use topo_uncertainty::metrics::{diagram_distance, frechet_mean, matching_distance_oracle, DistanceKind};
use topo_uncertainty::model::{
    cross_entropy_loss, gradients, train_toy, Activation, DenseLayer, Hyper, LayerSpec, NetworkModel,
};
use topo_uncertainty::monitor::{
    auroc, confidence_scores, roc_metrics, selection_score, shift_monitor, spearman, Candidate,
    Direction, ShiftLevel,
};
use topo_uncertainty::profile::{fit_profile, FitOptions, Scorer, TopologicalProfile};
use topo_uncertainty::topology::{diagrams_for, persistence_diagram, ActivationGraph, LayerSelection, PersistenceDiagram};

fn report(id: u32, name: &str, pass: bool, detail: String) {
    let line = format!(
        "criterion {id:>2} {name:<34} {} ({detail})\n",
        if pass { "PASS" } else { "FAIL" }
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn secs(d: Duration) -> String {
    format!("{:.2} s", d.as_secs_f64())
}

fn random_diagram(rng: &mut ChaCha8Rng, n: usize, high: f64) -> PersistenceDiagram {
    PersistenceDiagram::new((0..n).map(|_| rng.random_range(0.0..=high)).collect())
}

#[test]
fn criterion_01_matching_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.random_range(1..=6);
        let a = random_diagram(&mut rng, n, 10.0);
        let b = random_diagram(&mut rng, n, 10.0);
        let fast = diagram_distance(&a, &b, DistanceKind::Dist2).unwrap();
        let exact = (matching_distance_oracle(&a, &b, 2).unwrap() / n as f64).sqrt();
        worst = worst.max((fast - exact).abs());
    }
    let elapsed = start.elapsed();
    let pass = worst <= 1e-12 && elapsed < Duration::from_secs(10);
    report(1, "matching reduction equivalence", pass, format!("max |diff| {worst:.3e}, {}", secs(elapsed)));
    assert!(pass);
}

/// Weight multiset of a maximum-total-weight spanning tree, by enumerating
/// every `(n - 1)`-edge subset.
fn brute_force_mst(weights: &Array2<f64>) -> Vec<f64> {
    let (rows, cols) = weights.dim();
    let n = rows + cols;
    let edges: Vec<(usize, usize, f64)> = (0..rows)
        .flat_map(|i| (0..cols).map(move |j| (i, rows + j)))
        .map(|(u, v)| (u, v, weights[[u, v - rows]]))
        .collect();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1 << edges.len()) {
        if mask.count_ones() as usize != n - 1 {
            continue;
        }
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                x = p[x];
            }
            x
        }
        let mut acyclic = true;
        let mut chosen = Vec::with_capacity(n - 1);
        for (k, &(u, v, w)) in edges.iter().enumerate() {
            if mask & (1 << k) == 0 {
                continue;
            }
            let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
            if ru == rv {
                acyclic = false;
                break;
            }
            parent[ru] = rv;
            chosen.push(w);
        }
        if !acyclic {
            continue;
        }
        let total: f64 = chosen.iter().sum();
        if best.as_ref().is_none_or(|(t, _)| total > *t) {
            best = Some((total, chosen));
        }
    }
    let mut w = best.expect("complete bipartite graphs are connected").1;
    w.sort_by(|a, b| b.total_cmp(a));
    w
}

#[test]
fn criterion_02_mst_diagram() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut mismatches = 0;
    for g in 0..200 {
        let rows = rng.random_range(1..=6);
        let cols = rng.random_range(1..=(7 - rows));
        // Half the graphs use multiples of 1/8 in [0, 4]: exact sums, many ties.
        let weights = if g % 2 == 0 {
            Array2::from_shape_fn((rows, cols), |_| rng.random_range(0..=32) as f64 / 8.0)
        } else {
            Array2::from_shape_fn((rows, cols), |_| rng.random_range(0.0..5.0))
        };
        let graph = ActivationGraph {
            layer_index: 1,
            weights: weights.clone(),
        };
        let got = persistence_diagram(&graph).unwrap();
        if got.weights() != brute_force_mst(&weights).as_slice() {
            mismatches += 1;
        }
    }
    let elapsed = start.elapsed();
    let pass = mismatches == 0 && elapsed < Duration::from_secs(10);
    report(2, "MST diagram vs enumeration", pass, format!("{mismatches}/200 mismatches, {}", secs(elapsed)));
    assert!(pass);
}

#[test]
fn criterion_03_frechet_optimality() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let objective = |m: &PersistenceDiagram, set: &[PersistenceDiagram]| -> f64 {
        set.iter()
            .map(|d| diagram_distance(m, d, DistanceKind::Dist2).unwrap().powi(2))
            .sum()
    };
    let mut worst_drop = f64::NEG_INFINITY;
    for _ in 0..100 {
        let m = rng.random_range(1..=5);
        let n = rng.random_range(1..=6);
        let set: Vec<PersistenceDiagram> = (0..m).map(|_| random_diagram(&mut rng, n, 10.0)).collect();
        let mean = frechet_mean(&set).unwrap();
        let base = objective(&mean, &set);
        for k in 0..10_000 {
            let scale = [1e-6, 1e-3, 1e-1, 1.0][k % 4];
            let perturbed = PersistenceDiagram::new(
                mean.weights()
                    .iter()
                    .map(|w| (w + scale * rng.random_range(-1.0..1.0)).max(0.0))
                    .collect(),
            );
            worst_drop = worst_drop.max(base - objective(&perturbed, &set));
        }
    }
    let pass = worst_drop <= 1e-9;
    report(3, "Frechet mean optimality", pass, format!("largest decrease {worst_drop:.3e}"));
    assert!(pass);
}

fn random_activation(rng: &mut ChaCha8Rng) -> Activation {
    [Activation::Relu, Activation::Sigmoid, Activation::Identity][rng.random_range(0..3)]
}

fn random_network(rng: &mut ChaCha8Rng, dims: &[usize], scale: f64) -> NetworkModel {
    let layers = dims
        .windows(2)
        .enumerate()
        .map(|(l, w)| {
            let act = if l + 2 == dims.len() {
                Activation::Softmax
            } else {
                random_activation(rng)
            };
            DenseLayer::new(
                Array2::from_shape_fn((w[0], w[1]), |_| rng.random_range(-scale..scale)),
                Array1::from_shape_fn(w[1], |_| rng.random_range(-scale..scale)),
                act,
            )
        })
        .collect();
    NetworkModel::new(layers).unwrap()
}

#[test]
fn criterion_04_stability_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut violations = 0;
    let mut tightest = 0.0f64;
    for t in 0..500 {
        let depth = rng.random_range(1..=3);
        let dims: Vec<usize> = (0..=depth).map(|_| rng.random_range(1..=6)).collect();
        let net = random_network(&mut rng, &dims, 2.0);
        let x: Vec<f64> = (0..dims[0]).map(|_| rng.random_range(-3.0..3.0)).collect();
        let y: Vec<f64> = if t % 2 == 0 {
            (0..dims[0]).map(|_| rng.random_range(-3.0..3.0)).collect()
        } else {
            x.iter().map(|v| v + rng.random_range(-1e-3..1e-3)).collect()
        };
        let gap = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let selection = LayerSelection::all(&net, true).unwrap();
        let dx = diagrams_for(&net, &x, &selection).unwrap();
        let dy = diagrams_for(&net, &y, &selection).unwrap();
        let lipschitz = net.cumulative_lipschitz();
        for (k, &layer) in selection.indices().iter().enumerate() {
            let d = diagram_distance(&dx[k], &dy[k], DistanceKind::DInf).unwrap();
            let bound = lipschitz[layer - 1] * gap;
            // Computed diagram weights carry rounding error proportional to their magnitude.
            let magnitude = dx[k].weights()[0].max(dy[k].weights()[0]);
            if d > bound + 64.0 * f64::EPSILON * magnitude {
                violations += 1;
            }
            if bound > 0.0 {
                tightest = tightest.max(d / bound);
            }
        }
    }
    let pass = violations == 0;
    report(4, "stability bound", pass, format!("{violations} violations, max ratio {tightest:.6}"));
    assert!(pass);
}

fn moons_fixture(seed: u64) -> (Dataset, NetworkModel, f64) {
    let train = synthetic_dataset(&SyntheticKind::TwoMoons { n: 500, noise: 0.1 }, seed).unwrap();
    let hidden = [LayerSpec::new(64, Activation::Relu), LayerSpec::new(64, Activation::Relu)];
    let hyper = Hyper {
        learning_rate: 0.05,
        epochs: 300,
        batch_size: 16,
        seed,
    };
    let outcome = train_toy(&hidden, 2, &train, &hyper).unwrap();
    (train, outcome.network, outcome.train_accuracy)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

#[test]
fn criterion_05_far_field_overconfidence() {
    let start = Instant::now();
    let (train, net, accuracy) = moons_fixture(1);
    let selection = LayerSelection::all(&net, false).unwrap();
    let profile = fit_profile(&net, train.samples(), &selection, &FitOptions::default()).unwrap();
    let far = uniform_far_field(500, -3.0, 3.0, 2, train.samples(), 2.0, 7).unwrap();
    let far_tu: Vec<f64> = Scorer::new(&profile, &net)
        .unwrap()
        .score_batch(far.samples())
        .unwrap()
        .iter()
        .map(|r| r.tu)
        .collect();
    let far_conf = confidence_scores(&net, far.samples()).unwrap();
    let (tu_far, tu_train, conf_far) = (mean(&far_tu), mean(profile.train_tu()), mean(&far_conf));
    let elapsed = start.elapsed();
    let pass = accuracy >= 0.95
        && tu_far >= 3.0 * tu_train
        && conf_far >= 0.9
        && elapsed < Duration::from_secs(60);
    report(
        5,
        "far-field TU vs over-confidence",
        pass,
        format!(
            "train acc {accuracy:.3}, TU far/train {:.2}, far confidence {conf_far:.3}, {}",
            tu_far / tu_train,
            secs(elapsed)
        ),
    );
    assert!(pass);
}

/// AUROC by counting every (in, out) pair.
fn pair_count_auroc(ins: &[f64], outs: &[f64], direction: Direction) -> f64 {
    let mut credit = 0.0;
    for &i in ins {
        for &o in outs {
            let (o, i) = match direction {
                Direction::FlagAbove => (o, i),
                Direction::FlagBelow => (-o, -i),
            };
            credit += if o > i {
                1.0
            } else if o == i {
                0.5
            } else {
                0.0
            };
        }
    }
    credit / (ins.len() * outs.len()) as f64
}

/// Smallest FPR over every threshold whose TPR is at least 95%.
fn brute_force_fpr(ins: &[f64], outs: &[f64], direction: Direction) -> f64 {
    let flagged = |s: f64, t: f64| match direction {
        Direction::FlagAbove => s > t,
        Direction::FlagBelow => s < t,
    };
    let mut candidates: Vec<f64> = ins.iter().chain(outs).copied().collect();
    candidates.extend([f64::INFINITY, f64::NEG_INFINITY]);
    let extra: Vec<f64> = candidates.iter().map(|c| c.next_down()).chain(candidates.iter().map(|c| c.next_up())).collect();
    candidates.extend(extra);
    candidates
        .iter()
        .filter(|&&t| outs.iter().filter(|&&s| flagged(s, t)).count() as f64 >= 0.95 * outs.len() as f64 - 1e-9)
        .map(|&t| ins.iter().filter(|&&s| flagged(s, t)).count() as f64 / ins.len() as f64)
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn criterion_06_blob_ood_detection() {
    let dim = 8;
    let centers = draw_blob_centers(3, dim, 10.0, 11);
    let blobs = |n, seed| {
        synthetic_dataset(
            &SyntheticKind::GaussianBlobs {
                n,
                centers: centers.clone(),
                std: 1.0,
            },
            seed,
        )
        .unwrap()
    };
    let train = blobs(600, 1);
    let test = blobs(300, 2);
    let noise = uniform_far_field(300, -10.0, 10.0, dim, &[], 0.0, 3).unwrap();
    let hidden = [LayerSpec::new(32, Activation::Relu), LayerSpec::new(32, Activation::Relu)];
    let hyper = Hyper {
        learning_rate: 0.01,
        epochs: 60,
        batch_size: 32,
        seed: 5,
    };
    let net = train_toy(&hidden, 3, &train, &hyper).unwrap().network;
    let selection = LayerSelection::all(&net, false).unwrap();
    let profile = fit_profile(&net, train.samples(), &selection, &FitOptions::default()).unwrap();
    let scorer = Scorer::new(&profile, &net).unwrap();
    let tu = |d: &Dataset| -> Vec<f64> { scorer.score_batch(d.samples()).unwrap().iter().map(|r| r.tu).collect() };
    let tu_auc = auroc(&tu(&test), &tu(&noise), Direction::FlagAbove).unwrap();
    let conf_auc = auroc(
        &confidence_scores(&net, test.samples()).unwrap(),
        &confidence_scores(&net, noise.samples()).unwrap(),
        Direction::FlagBelow,
    )
    .unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut worst_auc = 0.0f64;
    let mut fpr_mismatch = 0;
    for s in 0..50 {
        let n = rng.random_range(1..=40);
        let m = rng.random_range(1..=40);
        // Every other set draws from a small integer range to force ties.
        let mut draw = |k: usize| -> Vec<f64> {
            (0..k)
                .map(|_| {
                    if s % 2 == 0 {
                        rng.random_range(0..6) as f64
                    } else {
                        rng.random_range(-1.0..1.0)
                    }
                })
                .collect()
        };
        let (ins, outs) = (draw(n), draw(m));
        for direction in [Direction::FlagAbove, Direction::FlagBelow] {
            let r = roc_metrics(&ins, &outs, direction).unwrap();
            worst_auc = worst_auc.max((r.auroc - pair_count_auroc(&ins, &outs, direction)).abs());
            if r.fpr_at_95_tpr != brute_force_fpr(&ins, &outs, direction) {
                fpr_mismatch += 1;
            }
        }
    }
    let pass = tu_auc >= 0.9 && tu_auc >= conf_auc && worst_auc <= 1e-12 && fpr_mismatch == 0;
    report(
        6,
        "blob OOD detection",
        pass,
        format!(
            "TU AUROC {tu_auc:.4}, confidence AUROC {conf_auc:.4}, pair-count max |diff| {worst_auc:.1e}, FPR mismatches {fpr_mismatch}"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_07_shift_monotonicity() {
    let (train, net, _) = moons_fixture(1);
    let selection = LayerSelection::all(&net, false).unwrap();
    let profile = fit_profile(&net, train.samples(), &selection, &FitOptions::default()).unwrap();
    let base = synthetic_dataset(&SyntheticKind::TwoMoons { n: 500, noise: 0.1 }, 21).unwrap();
    let configs: [(&str, [f64; 6]); 2] = [
        ("sigma 0..1.6", [0.0, 0.1, 0.2, 0.4, 0.8, 1.6]),
        ("sigma 0..1.0", [0.0, 0.2, 0.4, 0.6, 0.8, 1.0]),
    ];
    let mut all_correlated = true;
    let mut any_flat = false;
    let mut details = Vec::new();
    for (name, levels) in configs {
        let batches: Vec<Vec<Vec<f64>>> = levels
            .iter()
            .map(|&sigma| {
                ShiftSpec {
                    kind: ShiftKind::CoordinateNoise { sigma },
                    seed: 8,
                }
                .apply_batch(base.samples(), None)
                .unwrap()
            })
            .collect();
        let schedule: Vec<ShiftLevel<'_>> = levels
            .iter()
            .zip(&batches)
            .map(|(&level, batch)| ShiftLevel {
                level,
                batch,
                labels: base.labels(),
            })
            .collect();
        let summary = shift_monitor(&profile, &net, &schedule).unwrap();
        let tus: Vec<f64> = summary.iter().map(|s| s.mean_tu).collect();
        let rho = spearman(&levels, &tus).unwrap();
        let drift = summary
            .iter()
            .map(|s| (s.mean_confidence - summary[0].mean_confidence).abs())
            .fold(0.0, f64::max);
        all_correlated &= rho >= 0.9;
        any_flat |= rho >= 0.9 && drift <= 0.05;
        details.push(format!("{name}: rho {rho:.3}, confidence drift {drift:.3}"));
    }
    let pass = all_correlated && any_flat;
    report(7, "shift monotonicity", pass, details.join("; "));
    assert!(pass);
}

#[test]
fn criterion_08_selection_ordering() {
    let dim = 6;
    let centers = draw_blob_centers(4, dim, 8.0, 31);
    let make = |n, seed| {
        synthetic_dataset(
            &SyntheticKind::GaussianBlobs {
                n,
                centers: centers.clone(),
                std: 1.0,
            },
            seed,
        )
        .unwrap()
    };
    let train = make(800, 1);
    let test = make(800, 2);
    let pairs = [[0usize, 1], [2, 3]];
    let hidden = [LayerSpec::new(16, Activation::Relu), LayerSpec::new(16, Activation::Relu)];
    let fitted: Vec<(NetworkModel, TopologicalProfile)> = pairs
        .iter()
        .enumerate()
        .map(|(k, pair)| {
            let data = train.select_classes(pair).unwrap();
            let hyper = Hyper {
                learning_rate: 0.01,
                epochs: 60,
                batch_size: 32,
                seed: 40 + k as u64,
            };
            let net = train_toy(&hidden, 2, &data, &hyper).unwrap().network;
            let selection = LayerSelection::all(&net, false).unwrap();
            let profile = fit_profile(&net, data.samples(), &selection, &FitOptions::default()).unwrap();
            (net, profile)
        })
        .collect();
    let candidates: Vec<Candidate<'_>> = fitted
        .iter()
        .enumerate()
        .map(|(k, (net, profile))| Candidate {
            name: format!("pair{k}"),
            net,
            profile,
            accuracy: None,
        })
        .collect();
    let pools: Vec<Dataset> = pairs.iter().map(|p| test.select_classes(p).unwrap()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut correct = 0;
    for _ in 0..20 {
        let k = rng.random_range(0..2);
        let mut batch = pools[k].samples().to_vec();
        batch.shuffle(&mut rng);
        batch.truncate(50);
        let result = selection_score(&candidates, &batch).unwrap();
        if result.ranking[0] == k {
            correct += 1;
        }
    }
    let pass = correct == 20;
    report(8, "selection ordering", pass, format!("{correct}/20 batches ranked the matching model first"));
    assert!(pass);
}

#[test]
fn criterion_09_spectral_features() {
    let params = SpectralParams::default();
    let k2 = graph_spectral_features(&SimpleGraph::new(2, [(0, 1)]).unwrap(), &params).unwrap();
    let k2_err = k2[0].abs().max((k2[1] - 2.0).abs());

    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let mut worst_recon = 0.0f64;
    for t in 0..100 {
        let n = 1 + t % 20;
        let b = Array2::from_shape_fn((n, n), |_| rng.random_range(-1.0..1.0));
        let m = &b + &b.t();
        let eig = jacobi_eigendecomposition(&m).unwrap();
        let q = &eig.vectors;
        let lambda = Array2::from_diag(&Array1::from(eig.values.clone()));
        let diff = q.dot(&lambda).dot(&q.t()) - &m;
        // Induced infinity norm: largest absolute row sum.
        let norm = diff.rows().into_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
        worst_recon = worst_recon.max(norm);
    }

    let mut worst_perm = 0.0f64;
    for g in fake_graphs(&[5, 10, 20, 35], &[6, 20, 40, 80], 40, 9).unwrap() {
        let mut perm: Vec<usize> = (0..g.vertex_count()).collect();
        perm.shuffle(&mut rng);
        let a = graph_spectral_features(&g, &params).unwrap();
        let b = graph_spectral_features(&g.permuted(&perm).unwrap(), &params).unwrap();
        assert_eq!(a.len(), 40);
        for (x, y) in a.iter().zip(&b) {
            worst_perm = worst_perm.max((x - y).abs());
        }
    }
    let pass = k2_err <= 1e-10 && worst_recon < 1e-8 && worst_perm <= 1e-8;
    report(
        9,
        "spectral graph features",
        pass,
        format!("K2 err {k2_err:.1e}, reconstruction {worst_recon:.1e}, permutation {worst_perm:.1e}"),
    );
    assert!(pass);
}

fn max_relative_fd_error(net: &NetworkModel, xs: &[Vec<f64>], ys: &[usize]) -> f64 {
    let h = 1e-5;
    let analytic = gradients(net, xs, ys).unwrap();
    let loss = |layers: Vec<DenseLayer>| cross_entropy_loss(&NetworkModel::new(layers).unwrap(), xs, ys).unwrap();
    let mut worst: f64 = 0.0;
    let mut compare = |numeric: f64, a: f64| {
        let rel = (numeric - a).abs() / numeric.abs().max(a.abs()).max(1e-6);
        worst = worst.max(rel);
    };
    for (li, (gw, gb)) in analytic.layers.iter().enumerate() {
        for ((i, j), &a) in gw.indexed_iter() {
            let mut plus = net.layers().to_vec();
            plus[li].weights[[i, j]] += h;
            let mut minus = net.layers().to_vec();
            minus[li].weights[[i, j]] -= h;
            compare((loss(plus) - loss(minus)) / (2.0 * h), a);
        }
        for (j, &a) in gb.indexed_iter() {
            let mut plus = net.layers().to_vec();
            plus[li].bias[j] += h;
            let mut minus = net.layers().to_vec();
            minus[li].bias[j] -= h;
            compare((loss(plus) - loss(minus)) / (2.0 * h), a);
        }
    }
    worst
}

#[test]
fn criterion_10_gradient_check() {
    let mut worst = 0.0f64;
    let mut max_params = 0;
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let net = loop {
            let depth = rng.random_range(1..=3);
            let mut dims = vec![rng.random_range(1..=4)];
            dims.extend((1..depth).map(|_| rng.random_range(2..=4)));
            dims.push(rng.random_range(2..=3));
            let net = random_network(&mut rng, &dims, 1.0);
            if net.parameter_count() <= 50 {
                break net;
            }
        };
        max_params = max_params.max(net.parameter_count());
        let xs: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..net.input_dim()).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let ys: Vec<usize> = (0..4).map(|_| rng.random_range(0..net.num_classes())).collect();
        worst = worst.max(max_relative_fd_error(&net, &xs, &ys));
    }
    let pass = worst < 1e-4;
    report(10, "trainer gradient check", pass, format!("max relative error {worst:.2e}, up to {max_params} parameters"));
    assert!(pass);
}

fn run_cli(dir: &Path, args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_topo-uncertainty"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

/// Every workflow the CLI offers, with file outputs and reports.
fn full_workflow(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let steps: &[&[&str]] = &[
        &["gen-data", "--kind", "two-moons", "--n", "300", "--seed", "1", "--output", "moons.csv"],
        &["gen-data", "--kind", "two-moons", "--n", "100", "--seed", "2", "--output", "moons_test.csv"],
        &["train", "--data", "moons.csv", "--hidden", "16:relu,16:relu", "--epochs", "60", "--seed", "3", "--output", "moons.net"],
        &["fit", "--net", "moons.net", "--data", "moons.csv", "--subsample", "200", "--seed", "4", "--output", "moons.profile"],
        &["gen-data", "--kind", "uniform-box", "--n", "100", "--low", "-5", "--high", "5", "--reference", "moons.csv", "--min-distance", "1.5", "--seed", "5", "--output", "far.csv"],
        &["score", "--net", "moons.net", "--profile", "moons.profile", "--data", "moons_test.csv", "--output", "score.txt"],
        &["score", "--net", "moons.net", "--profile", "moons.profile", "--data", "far.csv", "--format", "structured", "--output", "score.json"],
        &["detect-ood", "--net", "moons.net", "--profile", "moons.profile", "--data", "moons_test.csv", "--ood-data", "far.csv", "--output", "ood.txt"],
        &["detect-ood", "--net", "moons.net", "--profile", "moons.profile", "--data", "moons_test.csv", "--ood-data", "far.csv", "--format", "structured", "--output", "ood.json"],
        &["monitor-shift", "--net", "moons.net", "--profile", "moons.profile", "--data", "moons_test.csv", "--shift", "noise", "--levels", "0,0.2,0.5", "--seed", "6", "--output", "shift.txt"],
        &["eval-net", "--net", "moons.net", "--data", "moons_test.csv", "--format", "structured", "--output", "eval.json"],
        &["gen-data", "--kind", "blobs", "--n", "200", "--classes", "2", "--dim", "16", "--center-seed", "7", "--seed", "8", "--output", "blobs.csv"],
        &["train", "--data", "blobs.csv", "--hidden", "8:sigmoid", "--epochs", "20", "--seed", "9", "--output", "a.net"],
        &["train", "--data", "blobs.csv", "--hidden", "8:relu", "--epochs", "20", "--seed", "10", "--output", "b.net"],
        &["fit", "--net", "a.net", "--data", "blobs.csv", "--output", "a.profile"],
        &["fit", "--net", "b.net", "--data", "blobs.csv", "--include-output", "--output", "b.profile"],
        &["select-model", "--manifest", "models.txt", "--data", "blobs.csv", "--format", "structured", "--output", "select.json"],
        &["monitor-shift", "--net", "a.net", "--profile", "a.profile", "--data", "blobs.csv", "--shift", "pixels", "--shape", "4x4", "--levels", "0,2,4", "--seed", "11", "--output", "pixels.txt"],
        &["monitor-shift", "--net", "a.net", "--profile", "a.profile", "--data", "blobs.csv", "--shift", "blur", "--shape", "4x4", "--levels", "0,0.5,1", "--output", "blur.txt"],
        &["gen-data", "--kind", "uniform-images", "--n", "20", "--shape", "4x4x2", "--seed", "12", "--output", "uimg.csv"],
        &["gen-data", "--kind", "gaussian-images", "--n", "20", "--shape", "5x5", "--seed", "13", "--output", "gimg.csv"],
        &["gen-data", "--kind", "fake-graphs", "--n", "4", "--vertex-counts", "6,9", "--edge-counts", "8,12", "--seed", "14", "--output", "graphs"],
        &["gen-data", "--kind", "graph-features", "--graphs", "graphs.txt", "--output", "graph_features.csv"],
    ];
    std::fs::write(dir.join("models.txt"), "first a.net a.profile 0.9\nsecond b.net b.profile\n").unwrap();
    std::fs::write(dir.join("graphs.txt"), "graphs/graph_0.txt 0\ngraphs/graph_1.txt 1\ngraphs/graph_2.txt 0\n").unwrap();
    let mut outputs = BTreeMap::new();
    for (k, step) in steps.iter().enumerate() {
        outputs.insert(format!("stdout-{k:02}"), run_cli(dir, step));
    }
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                outputs.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    outputs
}

#[test]
fn criterion_11_cli_reproducibility() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = full_workflow(a.path());
    let second = full_workflow(b.path());
    let differing: Vec<&String> = first
        .keys()
        .chain(second.keys())
        .filter(|k| first.get(*k) != second.get(*k))
        .collect();
    let pass = differing.is_empty();
    report(
        11,
        "CLI reproducibility",
        pass,
        format!("{} files and reports compared, {} differ {differing:?}", first.len(), differing.len()),
    );
    assert!(pass);
}
