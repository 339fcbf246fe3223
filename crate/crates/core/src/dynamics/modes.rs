use faer::c64;
use serde::Serialize;

use crate::liouvillian::SpectralDecomposition;
use crate::tensor::{tensor_label, SphericalTensorBasis};

/// Rank-resolved weights of one eigenmode.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModeWeights {
    pub mode_index: usize,
    #[serde(skip)]
    pub eigenvalue: c64,
    /// `w_k = Σ_q |c_kq|²` for `k = 0..=2j`.
    pub weights: Vec<f64>,
    /// `1 / Σ_k w_k²`: 1 for single-rank support, up to `2j + 1`.
    pub participation_ratio: f64,
}

impl ModeWeights {
    /// Rank carrying the most weight.
    pub fn dominant_rank(&self) -> usize {
        (0..self.weights.len()).max_by(|&a, &b| self.weights[a].total_cmp(&self.weights[b])).unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModeWeightTable {
    pub modes: Vec<ModeWeights>,
    pub steady_index: Option<usize>,
}

/// Weights for every right eigenvector, normalized to `Σ|c|² = 1`, in
/// spectrum order.
pub fn rank_weights(spec: &SpectralDecomposition, basis: &SphericalTensorBasis) -> ModeWeightTable {
    let n = spec.len();
    let ranks = basis.max_rank() + 1;
    let modes = (0..n)
        .map(|alpha| {
            let norm: f64 = (0..n).map(|i| spec.right[(i, alpha)].norm_sqr()).sum();
            let mut weights = vec![0.0; ranks];
            for i in 0..n {
                weights[tensor_label(i).0] += spec.right[(i, alpha)].norm_sqr() / norm;
            }
            let participation_ratio = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
            ModeWeights { mode_index: alpha, eigenvalue: spec.eigenvalues[alpha], weights, participation_ratio }
        })
        .collect();
    ModeWeightTable { modes, steady_index: spec.steady_index }
}
