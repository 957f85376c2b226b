//! Network file format.
//!
//! ```text
//! topo-uncertainty-network 1
//! input_dim 2
//! num_classes 2
//! layers 2
//! layer 1 2 8 relu
//! weights <rows*cols reals, row-major>
//! bias <cols reals>
//! layer 2 8 2 softmax
//! ...
//! end
//! ```

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array1, Array2};
use sha2::{Digest, Sha256};

use super::{Activation, DenseLayer, NetworkModel};
use crate::error::{Error, Result};
use crate::textio::{push_reals, read_file, write_file, Records};

const MAGIC: &str = "topo-uncertainty-network";
const VERSION: u32 = 1;

pub fn render_network(net: &NetworkModel) -> String {
    let mut out = String::new();
    writeln!(out, "{MAGIC} {VERSION}").unwrap();
    writeln!(out, "input_dim {}", net.input_dim()).unwrap();
    writeln!(out, "num_classes {}", net.num_classes()).unwrap();
    writeln!(out, "layers {}", net.num_layers()).unwrap();
    for (idx, layer) in net.layers().iter().enumerate() {
        writeln!(
            out,
            "layer {} {} {} {}",
            idx + 1,
            layer.in_size(),
            layer.out_size(),
            layer.activation
        )
        .unwrap();
        push_reals(&mut out, "weights", layer.weights.iter());
        push_reals(&mut out, "bias", layer.bias.iter());
    }
    out.push_str("end\n");
    out
}

pub fn parse_network(text: &str) -> Result<NetworkModel> {
    let mut records = Records::new(text, "network file");
    let header = records.expect(MAGIC)?;
    let version: String = header.value("format version")?;
    if version != VERSION.to_string() {
        return Err(Error::Version {
            found: version,
            expected: VERSION,
        });
    }
    let input_dim: usize = records.expect("input_dim")?.value("input_dim")?;
    let num_classes: usize = records.expect("num_classes")?.value("num_classes")?;
    let count: usize = records.expect("layers")?.value("layer count")?;

    let mut layers = Vec::with_capacity(count);
    for expected_index in 1..=count {
        let rec = records.expect("layer")?;
        if rec.len() != 4 {
            return Err(Error::parse(rec.line, "layer record needs: index rows cols activation"));
        }
        let index: usize = rec.get(0, "layer index")?;
        if index != expected_index {
            return Err(Error::parse(
                rec.line,
                format!("expected layer {expected_index}, found {index}"),
            ));
        }
        let rows: usize = rec.get(1, "rows")?;
        let cols: usize = rec.get(2, "cols")?;
        let activation: Activation = rec.get::<String>(3, "activation")?.parse()?;

        let w = records.expect("weights")?;
        let weights: Vec<f64> = w.all(0, "weight")?;
        if weights.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                layer: index,
                message: format!("{} weights listed for a {rows}x{cols} matrix", weights.len()),
            });
        }
        let b = records.expect("bias")?;
        let bias: Vec<f64> = b.all(0, "bias")?;
        if bias.len() != cols {
            return Err(Error::DimensionMismatch {
                layer: index,
                message: format!("{} bias entries for {cols} output units", bias.len()),
            });
        }
        let weights = Array2::from_shape_vec((rows, cols), weights)
            .map_err(|e| Error::parse(w.line, e.to_string()))?;
        layers.push(DenseLayer::new(weights, Array1::from(bias), activation));
    }
    records.expect("end")?;
    records.finish()?;

    let net = NetworkModel::new(layers)?;
    if net.input_dim() != input_dim {
        return Err(Error::DimensionMismatch {
            layer: 1,
            message: format!("header input_dim {input_dim} but layer 1 has {} rows", net.input_dim()),
        });
    }
    if net.num_classes() != num_classes {
        return Err(Error::DimensionMismatch {
            layer: net.num_layers(),
            message: format!(
                "header num_classes {num_classes} but final layer has {} columns",
                net.num_classes()
            ),
        });
    }
    Ok(net)
}

pub fn load_network(path: impl AsRef<Path>) -> Result<NetworkModel> {
    parse_network(&read_file(path.as_ref())?)
}

pub fn save_network(net: &NetworkModel, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &render_network(net))
}

/// SHA-256 of the canonical file rendering, hex encoded.
pub fn network_fingerprint(net: &NetworkModel) -> String {
    hex::encode(Sha256::digest(render_network(net).as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn small_net() -> NetworkModel {
        NetworkModel::new(vec![
            DenseLayer::new(
                array![[0.1, -0.2, 1.0 / 3.0], [1e-300, 2.5e17, -0.0]],
                array![0.0, 0.7, -std::f64::consts::PI],
                Activation::Relu,
            ),
            DenseLayer::new(
                array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]],
                array![0.1, 0.2],
                Activation::Softmax,
            ),
        ])
        .unwrap()
    }

    #[test]
    fn roundtrip_is_bitwise() {
        let net = small_net();
        let text = render_network(&net);
        let back = parse_network(&text).unwrap();
        for (a, b) in net.layers().iter().zip(back.layers()) {
            for (x, y) in a.weights.iter().zip(b.weights.iter()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
            for (x, y) in a.bias.iter().zip(b.bias.iter()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
        assert_eq!(render_network(&back), text);
    }

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.txt");
        save_network(&small_net(), &path).unwrap();
        assert_eq!(load_network(&path).unwrap(), small_net());
    }

    #[test]
    fn mismatched_layers_name_second_layer() {
        let text = "topo-uncertainty-network 1\ninput_dim 2\nnum_classes 2\nlayers 2\n\
                    layer 1 2 3 relu\nweights 1 2 3 4 5 6\nbias 0 0 0\n\
                    layer 2 4 2 softmax\nweights 1 2 3 4 5 6 7 8\nbias 0 0\nend\n";
        match parse_network(text) {
            Err(Error::DimensionMismatch { layer, .. }) => assert_eq!(layer, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nan_weight_is_rejected() {
        let text = "topo-uncertainty-network 1\ninput_dim 1\nnum_classes 2\nlayers 1\n\
                    layer 1 1 2 softmax\nweights 1 NaN\nbias 0 0\nend\n";
        assert!(matches!(parse_network(text), Err(Error::NonFinite { layer: 1, .. })));
    }

    #[test]
    fn wrong_version_and_truncation() {
        let text = render_network(&small_net()).replacen(" 1\n", " 7\n", 1);
        assert!(matches!(parse_network(&text), Err(Error::Version { .. })));
        let full = render_network(&small_net());
        let cut = &full[..full.len() - 4];
        assert!(matches!(parse_network(cut), Err(Error::Truncated(_))));
    }

    #[test]
    fn fingerprint_tracks_content() {
        let a = small_net();
        let mut layers = a.layers().to_vec();
        layers[1].bias[0] = 0.11;
        let b = NetworkModel::new(layers).unwrap();
        assert_eq!(network_fingerprint(&a), network_fingerprint(&a.clone()));
        assert_ne!(network_fingerprint(&a), network_fingerprint(&b));
        assert_eq!(network_fingerprint(&a).len(), 64);
    }
}
