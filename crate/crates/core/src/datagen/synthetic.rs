use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::{stream_rng, streams};

#[derive(Debug, Clone, PartialEq)]
pub enum SyntheticKind {
    /// Two interleaved half circles, labels 0 (upper) and 1 (lower).
    TwoMoons { n: usize, noise: f64 },
    /// Isotropic Gaussian clusters, label = center index. Samples are dealt to
    /// centers round-robin.
    GaussianBlobs {
        n: usize,
        centers: Vec<Vec<f64>>,
        std: f64,
    },
    /// Pixels i.i.d. uniform on `[0, 1]`; shape is `(rows, cols, channels)`.
    UniformImages { n: usize, shape: (usize, usize, usize) },
    /// Pixels i.i.d. `N(mean, std^2)` clamped to `[0, 1]`.
    GaussianImages {
        n: usize,
        shape: (usize, usize, usize),
        mean: f64,
        std: f64,
    },
}

fn normal(mean: f64, std: f64) -> Result<Normal<f64>> {
    Normal::new(mean, std).map_err(|e| Error::InvalidArgument(format!("normal({mean}, {std}): {e}")))
}

fn image_len(shape: (usize, usize, usize)) -> Result<usize> {
    let len = shape.0 * shape.1 * shape.2;
    if len == 0 {
        return Err(Error::InvalidArgument(format!("invalid image shape {shape:?}")));
    }
    Ok(len)
}

pub fn synthetic_dataset(kind: &SyntheticKind, seed: u64) -> Result<Dataset> {
    let mut rng = stream_rng(seed, streams::DATASET);
    match kind {
        SyntheticKind::TwoMoons { n, noise } => {
            if *n == 0 {
                return Err(Error::Empty("two-moons sample count"));
            }
            let noise_dist = normal(0.0, *noise)?;
            let n_upper = n / 2;
            let n_lower = n - n_upper;
            let arc = |i: usize, count: usize| {
                if count <= 1 {
                    0.0
                } else {
                    std::f64::consts::PI * i as f64 / (count - 1) as f64
                }
            };
            let mut rows: Vec<(Vec<f64>, usize)> = Vec::with_capacity(*n);
            for i in 0..n_upper {
                let t = arc(i, n_upper);
                rows.push((vec![t.cos(), t.sin()], 0));
            }
            for i in 0..n_lower {
                let t = arc(i, n_lower);
                rows.push((vec![1.0 - t.cos(), 0.5 - t.sin()], 1));
            }
            if *noise > 0.0 {
                for (x, _) in &mut rows {
                    for v in x.iter_mut() {
                        *v += noise_dist.sample(&mut rng);
                    }
                }
            }
            rows.shuffle(&mut rng);
            let (samples, labels) = rows.into_iter().unzip();
            Dataset::new(2, samples, Some(labels))
        }
        SyntheticKind::GaussianBlobs { n, centers, std } => {
            let dim = centers.first().map(Vec::len).ok_or(Error::Empty("blob centers"))?;
            if centers.iter().any(|c| c.len() != dim) || dim == 0 {
                return Err(Error::InvalidArgument("blob centers must share a positive dimension".into()));
            }
            let dist = normal(0.0, *std)?;
            let mut samples = Vec::with_capacity(*n);
            let mut labels = Vec::with_capacity(*n);
            for i in 0..*n {
                let k = i % centers.len();
                samples.push(centers[k].iter().map(|c| c + dist.sample(&mut rng)).collect());
                labels.push(k);
            }
            Dataset::new(dim, samples, Some(labels))
        }
        SyntheticKind::UniformImages { n, shape } => {
            let len = image_len(*shape)?;
            let samples = (0..*n)
                .map(|_| (0..len).map(|_| rng.random_range(0.0..=1.0)).collect())
                .collect();
            Dataset::unlabeled(len, samples)
        }
        SyntheticKind::GaussianImages { n, shape, mean, std } => {
            let len = image_len(*shape)?;
            let dist = normal(*mean, *std)?;
            let samples = (0..*n)
                .map(|_| (0..len).map(|_| dist.sample(&mut rng).clamp(0.0, 1.0)).collect())
                .collect();
            Dataset::unlabeled(len, samples)
        }
    }
}

/// `count` centers uniform in `[-half_width, half_width]^dim`.
pub fn draw_blob_centers(count: usize, dim: usize, half_width: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = stream_rng(seed, streams::DATASET ^ 0x100);
    (0..count)
        .map(|_| (0..dim).map(|_| rng.random_range(-half_width..=half_width)).collect())
        .collect()
}

/// Uniform points in `[low, high]^dim` whose Euclidean distance to every
/// reference point exceeds `min_distance`, by rejection.
pub fn uniform_far_field(
    n: usize,
    low: f64,
    high: f64,
    dim: usize,
    reference: &[Vec<f64>],
    min_distance: f64,
    seed: u64,
) -> Result<Dataset> {
    if !low.is_finite() || !high.is_finite() || low >= high || dim == 0 {
        return Err(Error::InvalidArgument(format!("invalid box [{low}, {high}]^{dim}")));
    }
    let mut rng = stream_rng(seed, streams::DATASET ^ 0x200);
    let limit = 10_000usize.max(n.saturating_mul(10_000));
    let min_sq = min_distance * min_distance;
    let mut samples = Vec::with_capacity(n);
    let mut tries = 0usize;
    while samples.len() < n {
        tries += 1;
        if tries > limit {
            return Err(Error::InvalidArgument(format!(
                "could not place {n} points farther than {min_distance} from the reference set"
            )));
        }
        let x: Vec<f64> = (0..dim).map(|_| rng.random_range(low..=high)).collect();
        let far = reference.iter().all(|r| {
            r.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() > min_sq
        });
        if far {
            samples.push(x);
        }
    }
    Dataset::unlabeled(dim, samples)
}
