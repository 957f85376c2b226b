//! Input generators: synthetic datasets, image shifts, random graphs and
//! spectral graph features. Every generator is a pure function of its
//! parameters and seed.

mod graph;
mod image;
mod jacobi;
mod synthetic;

pub use graph::{
    fake_graphs, graph_spectral_features, load_graph, normalized_laplacian, parse_graph,
    render_graph, save_graph, SimpleGraph, SpectralParams,
};
pub use image::{add_coordinate_noise, corrupt_pixels, gaussian_blur, ShiftKind, ShiftSpec};
pub use jacobi::{jacobi_eigendecomposition, EigenDecomposition};
pub use synthetic::{draw_blob_centers, synthetic_dataset, uniform_far_field, SyntheticKind};
