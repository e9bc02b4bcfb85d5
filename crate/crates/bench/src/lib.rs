//! Fixtures shared by the benchmarks in `benches/`.

use payband_core::linalg::Matrix;
use payband_core::{ContextSourceSpec, InstanceSpec};

/// The 8-arm, 4-dimensional Gaussian instance of the `fig1` preset.
pub fn fig1_instance() -> InstanceSpec {
    InstanceSpec {
        n_arms: 8,
        dim: 4,
        horizon: 800,
        true_attrs: vec![
            vec![0.7126, 0.1436, 0.1788, 0.5257],
            vec![0.1511, -0.7953, 0.1598, -0.1604],
            vec![0.1028, -0.8925, 0.1299, -0.1065],
            vec![0.3247, 0.192, -0.1887, -0.2943],
            vec![0.4804, 0.0808, -0.605, 0.2365],
            vec![-0.1955, -0.5271, 0.0774, 0.2006],
            vec![-0.0553, 0.3514, 0.6528, 0.0816],
            vec![0.0526, -0.2108, -0.4087, 0.5754],
        ],
        noise_std: 0.1,
        context_source: ContextSourceSpec::GaussianIid {
            mean: vec![0.3, 0.2, 0.1, 0.2],
            std: 0.35,
        },
        init_explore_m: 32,
        master_seed: 800,
    }
}

/// A well-conditioned SPD matrix: identity plus `2d` deterministic outer products.
pub fn spd_matrix(d: usize) -> Matrix {
    let mut m = Matrix::identity(d);
    for k in 0..2 * d {
        let x: Vec<f64> = (0..d)
            .map(|i| (((k * 7 + i * 13) % 17) as f64 - 8.0) / 8.0)
            .collect();
        m.add_outer(&x, 1.0);
    }
    m
}
