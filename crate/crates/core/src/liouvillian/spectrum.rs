use faer::linalg::solvers::DenseSolveCore;
use faer::{c64, Mat, MatRef};

use super::LiouvillianMatrix;
use crate::error::{Error, Result};
use crate::linalg::{c, frobenius, hermiticity_residual, hermitian_eigenvalues, CMat};

/// Relative threshold (times `‖M‖_F`) below which an eigenvalue counts as zero.
pub const DEFAULT_ZERO_TOL_REL: f64 = 1e-9;

/// Couplings below this fraction of the largest entry do not join blocks.
const BLOCK_TOL_REL: f64 = 1e-14;

/// Largest tolerated eigenpair residual relative to `‖M‖_F`.
const RESIDUAL_TOL_REL: f64 = 1e-8;

/// Full eigendecomposition of a coefficient-space generator.
///
/// Eigenvalues are sorted by descending real part, ties broken by ascending
/// `|Im λ|` and then by `Im λ`. Right eigenvectors have unit norm; left
/// eigenvectors are normalized so that `l_α† r_β = δ_αβ`.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<c64>,
    /// Columns are right eigenvectors.
    pub right: CMat,
    /// Columns are left eigenvectors.
    pub left: CMat,
    /// Eigenvalue condition number `‖l_α‖ ‖r_α‖ / |l_α† r_α|` per pair.
    pub condition: Vec<f64>,
    /// Largest `‖M r − λ r‖` over all pairs.
    pub max_residual: f64,
    /// Frobenius norm of the generator.
    pub generator_norm: f64,
    /// Index of the unique zero mode, if exactly one exists.
    pub steady_index: Option<usize>,
    /// Number of eigenvalues with `|λ| < zero_tol`.
    pub zero_count: usize,
    pub zero_tol: f64,
}

impl SpectralDecomposition {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn right_vector(&self, alpha: usize) -> Vec<c64> {
        (0..self.right.nrows()).map(|i| self.right[(i, alpha)]).collect()
    }

    pub fn left_vector(&self, alpha: usize) -> Vec<c64> {
        (0..self.left.nrows()).map(|i| self.left[(i, alpha)]).collect()
    }

    pub fn max_condition(&self) -> f64 {
        self.condition.iter().cloned().fold(0.0, f64::max)
    }

    /// Frobenius-norm condition estimate `‖R‖_F ‖R⁻¹‖_F` of the eigenbasis.
    pub fn eigenbasis_condition(&self) -> f64 {
        frobenius(self.right.as_ref()) * frobenius(self.left.as_ref())
    }

    /// The oscillatory mode (`|Im λ| > tol`) with the largest real part.
    pub fn slowest_oscillatory(&self, im_tol: f64) -> Option<usize> {
        self.eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, l)| l.im.abs() > im_tol)
            .max_by(|a, b| a.1.re.total_cmp(&b.1.re))
            .map(|(i, _)| i)
    }
}

fn sort_key(lambda: c64, tol: f64) -> (i64, f64, f64) {
    let q = if tol > 0.0 { (lambda.re / tol).round() as i64 } else { 0 };
    (-q, lambda.im.abs(), lambda.im)
}

/// Computes the spectrum with `DEFAULT_ZERO_TOL_REL`.
pub fn spectrum(liouv: &LiouvillianMatrix) -> Result<SpectralDecomposition> {
    spectrum_with_tol(liouv, DEFAULT_ZERO_TOL_REL)
}

/// Connected components of the coupling graph `i ~ j ⇔ |m_ij| or |m_ji| > tol`.
fn coupled_blocks(m: MatRef<'_, c64>, tol: f64) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut block = vec![usize::MAX; n];
    let mut blocks = Vec::new();
    for start in 0..n {
        if block[start] != usize::MAX {
            continue;
        }
        let id = blocks.len();
        block[start] = id;
        let mut members = vec![start];
        let mut cursor = 0;
        while cursor < members.len() {
            let i = members[cursor];
            cursor += 1;
            for j in 0..n {
                if block[j] == usize::MAX && (m[(i, j)].norm() > tol || m[(j, i)].norm() > tol) {
                    block[j] = id;
                    members.push(j);
                }
            }
        }
        members.sort_unstable();
        blocks.push(members);
    }
    blocks
}

/// Eigenpairs computed block by block, so that eigenvectors of an exactly
/// decoupled generator never mix blocks even when eigenvalues coincide.
fn blockwise_eigen(m: MatRef<'_, c64>) -> Result<(Vec<c64>, CMat)> {
    let n = m.nrows();
    let max_entry = (0..n).flat_map(|j| (0..n).map(move |i| (i, j))).fold(0.0f64, |a, (i, j)| a.max(m[(i, j)].norm()));
    let mut values = Vec::with_capacity(n);
    let mut vectors = Mat::<c64>::zeros(n, n);
    for members in coupled_blocks(m, BLOCK_TOL_REL * max_entry) {
        let sub = Mat::from_fn(members.len(), members.len(), |a, b| m[(members[a], members[b])]);
        let evd = sub.eigen().map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
        for col in 0..members.len() {
            let dst = values.len();
            values.push(evd.S()[col]);
            for (a, &row) in members.iter().enumerate() {
                vectors[(row, dst)] = evd.U()[(a, col)];
            }
        }
    }
    Ok((values, vectors))
}

pub fn spectrum_with_tol(liouv: &LiouvillianMatrix, zero_tol_rel: f64) -> Result<SpectralDecomposition> {
    let m = liouv.matrix();
    let n = m.nrows();
    let norm = frobenius(m);
    let (values, vectors) = blockwise_eigen(m)?;

    let zero_tol = zero_tol_rel * norm;
    let mut order: Vec<usize> = (0..n).collect();
    let key_tol = zero_tol.max(f64::MIN_POSITIVE);
    order.sort_by(|&a, &b| {
        let (ka, kb) = (sort_key(values[a], key_tol), sort_key(values[b], key_tol));
        ka.0.cmp(&kb.0).then(ka.1.total_cmp(&kb.1)).then(ka.2.total_cmp(&kb.2))
    });

    let eigenvalues: Vec<c64> = order.iter().map(|&i| values[i]).collect();
    let mut right = Mat::<c64>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = vectors.col(src);
        let nrm = col.norm_l2();
        if !(nrm > 0.0) || !nrm.is_finite() {
            return Err(Error::Eigensolver(format!("degenerate eigenvector at position {dst}")));
        }
        for i in 0..n {
            right[(i, dst)] = col[i] / nrm;
        }
    }

    let mut max_residual = 0.0f64;
    let mr = m * &right;
    for alpha in 0..n {
        let mut r = 0.0f64;
        for i in 0..n {
            r += (mr[(i, alpha)] - right[(i, alpha)] * eigenvalues[alpha]).norm_sqr();
        }
        max_residual = max_residual.max(r.sqrt());
    }
    if !max_residual.is_finite() || max_residual > RESIDUAL_TOL_REL * norm.max(f64::MIN_POSITIVE) {
        return Err(Error::Eigensolver(format!("eigenpair residual {max_residual:e} exceeds tolerance")));
    }

    let inv = right.partial_piv_lu().inverse();
    let left = inv.adjoint().to_owned();
    let condition = (0..n).map(|alpha| left.col(alpha).norm_l2()).collect();

    let zero_count = eigenvalues.iter().filter(|l| l.norm() < zero_tol).count();
    let steady_index = (zero_count == 1).then(|| eigenvalues.iter().position(|l| l.norm() < zero_tol)).flatten();

    Ok(SpectralDecomposition {
        eigenvalues,
        right,
        left,
        condition,
        max_residual,
        generator_norm: norm,
        steady_index,
        zero_count,
        zero_tol,
    })
}

/// Steady-state coefficients, normalized to unit trace (`a_00 = 1/√(2j+1)`).
pub fn steady_state(liouv: &LiouvillianMatrix) -> Result<Vec<c64>> {
    let spec = spectrum(liouv)?;
    steady_state_from(liouv, &spec)
}

pub fn steady_state_from(liouv: &LiouvillianMatrix, spec: &SpectralDecomposition) -> Result<Vec<c64>> {
    let alpha = spec.steady_index.ok_or(Error::SteadyState { count: spec.zero_count })?;
    let v = spec.right_vector(alpha);
    let dim = liouv.basis().representation().dim();
    let target = 1.0 / (dim as f64).sqrt();
    if v[0].norm() < 1e-300 {
        return Err(Error::SteadyState { count: 0 });
    }
    let scale = c(target, 0.0) / v[0];
    Ok(v.into_iter().map(|z| z * scale).collect())
}

/// Hermiticity residual and smallest eigenvalue of the reconstructed density matrix.
pub fn density_diagnostics(liouv: &LiouvillianMatrix, coeffs: &[c64]) -> Result<(f64, f64)> {
    let rho = liouv.basis().reconstruct(coeffs)?;
    let herm = hermiticity_residual(rho.as_ref());
    let sym = (&rho + rho.adjoint()) * faer::Scale(c(0.5, 0.0));
    let min_eig = hermitian_eigenvalues(sym.as_ref())?.into_iter().fold(f64::INFINITY, f64::min);
    Ok((herm, min_eig))
}
