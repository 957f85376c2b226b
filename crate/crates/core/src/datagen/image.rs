use ndarray::Array2;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::{child_seed, stream_rng, streams};

/// Flips `n` distinct uniformly chosen pixels: `x -> 1 - x`.
pub fn corrupt_pixels(image: &Array2<f64>, n: usize, seed: u64) -> Result<Array2<f64>> {
    let total = image.len();
    if n > total {
        return Err(Error::InvalidArgument(format!(
            "cannot corrupt {n} pixels of a {total}-pixel image"
        )));
    }
    let mut out = image.clone();
    let cols = image.ncols();
    let mut rng = stream_rng(seed, streams::PIXELS);
    for idx in rand::seq::index::sample(&mut rng, total, n) {
        let px = &mut out[[idx / cols, idx % cols]];
        *px = 1.0 - *px;
    }
    Ok(out)
}

/// Half-sample symmetric reflection (`c b a | a b c | c b a`).
fn reflect(p: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let m = p.rem_euclid(period) as usize;
    if m < n {
        m
    } else {
        2 * n - 1 - m
    }
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let raw: Vec<f64> = (-radius..=radius)
        .map(|k| (-(k * k) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Separable Gaussian blur with standard deviation `sigma`, kernel truncated
/// at `ceil(3 sigma)` and symmetric borders. `sigma = 0` is the identity.
pub fn gaussian_blur(image: &Array2<f64>, sigma: f64) -> Result<Array2<f64>> {
    if sigma.is_nan() || sigma < 0.0 || sigma.is_infinite() {
        return Err(Error::InvalidArgument(format!("blur sigma {sigma} must be >= 0")));
    }
    if sigma == 0.0 || image.is_empty() {
        return Ok(image.clone());
    }
    let kernel = gaussian_kernel(sigma);
    let radius = (kernel.len() / 2) as isize;
    let (rows, cols) = image.dim();
    let horizontal: Array2<f64> = Array2::from_shape_fn((rows, cols), |(r, c)| {
        kernel
            .iter()
            .enumerate()
            .map(|(k, w)| w * image[[r, reflect(c as isize + k as isize - radius, cols)]])
            .sum::<f64>()
    });
    Ok(Array2::from_shape_fn((rows, cols), |(r, c)| {
        kernel
            .iter()
            .enumerate()
            .map(|(k, w)| w * horizontal[[reflect(r as isize + k as isize - radius, rows), c]])
            .sum::<f64>()
    }))
}

/// Adds i.i.d. `N(0, sigma^2)` noise to every coordinate.
pub fn add_coordinate_noise(x: &[f64], sigma: f64, seed: u64) -> Result<Vec<f64>> {
    if sigma == 0.0 {
        return Ok(x.to_vec());
    }
    let normal = Normal::new(0.0, sigma)
        .map_err(|e| Error::InvalidArgument(format!("noise sigma {sigma}: {e}")))?;
    let mut rng = stream_rng(seed, streams::NOISE);
    Ok(x.iter().map(|v| v + normal.sample(&mut rng)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftKind {
    PixelCorruption { n: usize },
    GaussianBlur { sigma: f64 },
    /// Additive Gaussian noise on raw coordinates, for non-image data.
    CoordinateNoise { sigma: f64 },
}

/// A shift `s_gamma` applied sample by sample; sample `i` uses its own child
/// seed so results do not depend on batch composition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShiftSpec {
    pub kind: ShiftKind,
    pub seed: u64,
}

impl ShiftSpec {
    /// `shape` is `(rows, cols)` of the flattened row-major image, required for
    /// pixel corruption and blur.
    pub fn apply(&self, index: usize, sample: &[f64], shape: Option<(usize, usize)>) -> Result<Vec<f64>> {
        let seed = child_seed(self.seed, index as u64);
        let as_image = || -> Result<Array2<f64>> {
            let (r, c) = shape.ok_or_else(|| {
                Error::InvalidArgument("image shift requires an image shape".into())
            })?;
            Array2::from_shape_vec((r, c), sample.to_vec()).map_err(|_| {
                Error::InvalidArgument(format!(
                    "sample of length {} is not a {r}x{c} image",
                    sample.len()
                ))
            })
        };
        match self.kind {
            ShiftKind::PixelCorruption { n } => {
                Ok(corrupt_pixels(&as_image()?, n, seed)?.into_iter().collect())
            }
            ShiftKind::GaussianBlur { sigma } => {
                Ok(gaussian_blur(&as_image()?, sigma)?.into_iter().collect())
            }
            ShiftKind::CoordinateNoise { sigma } => add_coordinate_noise(sample, sigma, seed),
        }
    }

    pub fn apply_batch(&self, batch: &[Vec<f64>], shape: Option<(usize, usize)>) -> Result<Vec<Vec<f64>>> {
        batch
            .iter()
            .enumerate()
            .map(|(i, x)| self.apply(i, x, shape).map_err(|e| Error::at_sample(i, e)))
            .collect()
    }
}
