//! The collective-decay boundary-time-crystal Lindbladian
//!
//! `ℒρ = −i[ΩJx, ρ] + (Γ/N)(J₋ρJ₊ − ½{J₊J₋, ρ})`
//!
//! and its matrix in the spherical-tensor coefficient basis,
//! `M_{(k'q'),(kq)} = Tr[T^{k'}_{q'}† ℒ(T^k_q)]`, so that `ȧ = M a`.

mod hopping;
mod spectrum;

use std::sync::Arc;

use faer::{c64, Mat, MatRef, Scale};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{anticommutator, c, commutator, identity, kron, max_abs, CMat, I};
use crate::spin::{build_spin_operators, SpinOperators, SpinRepresentation};
use crate::tensor::{build_tensor_basis, SphericalTensorBasis};

pub use hopping::{extract_hoppings, HoppingCoefficients, HoppingSite};
pub use spectrum::{
    density_diagnostics, spectrum, spectrum_with_tol, steady_state, steady_state_from, SpectralDecomposition,
    DEFAULT_ZERO_TOL_REL,
};

/// Drive strength, collective decay rate and number of spins.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParameters {
    pub omega: f64,
    pub gamma_rate: f64,
    pub n_spins: u32,
}

impl ModelParameters {
    pub fn new(omega: f64, gamma_rate: f64, n_spins: u32) -> Result<Self> {
        let p = Self { omega, gamma_rate, n_spins };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.omega.is_finite() || self.omega < 0.0 {
            return Err(Error::InvalidParameter { name: "omega", reason: format!("{} must be finite and >= 0", self.omega) });
        }
        if !self.gamma_rate.is_finite() || self.gamma_rate < 0.0 {
            return Err(Error::InvalidParameter {
                name: "gamma",
                reason: format!("{} must be finite and >= 0", self.gamma_rate),
            });
        }
        if self.n_spins == 0 {
            return Err(Error::InvalidParameter { name: "n_spins", reason: "at least one spin is required".into() });
        }
        Ok(())
    }

    /// `Γ/Ω`, when the drive is nonzero.
    pub fn gamma_ratio(&self) -> Option<f64> {
        (self.omega > 0.0).then(|| self.gamma_rate / self.omega)
    }

    pub fn representation(&self) -> SpinRepresentation {
        SpinRepresentation::from_spins(self.n_spins)
    }

    /// Per-spin decay prefactor `Γ/N`.
    fn decay_prefactor(&self) -> f64 {
        self.gamma_rate / self.n_spins as f64
    }
}

fn check_square(rho: MatRef<'_, c64>, dim: usize) -> Result<()> {
    if rho.nrows() != dim || rho.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: format!("{dim}x{dim}"),
            got: format!("{}x{}", rho.nrows(), rho.ncols()),
        });
    }
    Ok(())
}

/// Applies the Lindbladian to a density matrix in the `|j,m⟩` basis.
pub fn apply_liouvillian(rho: MatRef<'_, c64>, params: &ModelParameters, ops: &SpinOperators) -> Result<CMat> {
    params.validate()?;
    check_square(rho, ops.jz.nrows())?;
    let h = &ops.jx * Scale(c(params.omega, 0.0));
    let coherent = commutator(h.as_ref(), rho) * Scale(-I);
    let jpjm = &ops.jplus * &ops.jminus;
    let jump = &ops.jminus * rho * &ops.jplus;
    let dissipator = (jump - anticommutator(jpjm.as_ref(), rho) * Scale(c(0.5, 0.0)))
        * Scale(c(params.decay_prefactor(), 0.0));
    Ok(coherent + dissipator)
}

/// The Lindbladian as a `d² × d²` matrix acting on column-stacked `vec(ρ)`,
/// built from `vec(AXB) = (Bᵀ ⊗ A) vec(X)`.
pub fn vectorized_superoperator(params: &ModelParameters, ops: &SpinOperators) -> Result<CMat> {
    params.validate()?;
    let dim = ops.jz.nrows();
    let id = identity(dim);
    let h = &ops.jx * Scale(c(params.omega, 0.0));
    let coherent = (kron(id.as_ref(), h.as_ref()) - kron(h.transpose(), id.as_ref())) * Scale(-I);
    let jpjm = &ops.jplus * &ops.jminus;
    let jump = kron(ops.jplus.transpose(), ops.jminus.as_ref());
    let anti = kron(id.as_ref(), jpjm.as_ref()) + kron(jpjm.transpose(), id.as_ref());
    let dissipator = (jump - anti * Scale(c(0.5, 0.0))) * Scale(c(params.decay_prefactor(), 0.0));
    Ok(coherent + dissipator)
}

/// Dense generator of the coefficient dynamics `ȧ = M a`.
#[derive(Clone, Debug)]
pub struct LiouvillianMatrix {
    m: CMat,
    params: ModelParameters,
    basis: Arc<SphericalTensorBasis>,
}

impl LiouvillianMatrix {
    /// Builds `M_{(k'q'),(kq)} = Tr[T^{k'}_{q'}† ℒ(T^k_q)]` column by column.
    pub fn build(params: &ModelParameters, basis: Arc<SphericalTensorBasis>) -> Result<Self> {
        params.validate()?;
        let rep = params.representation();
        if basis.representation() != &rep {
            return Err(Error::DimensionMismatch {
                expected: format!("basis for j = {}", rep.j()),
                got: format!("basis for j = {}", basis.representation().j()),
            });
        }
        let ops = build_spin_operators(&rep);
        let n = basis.len();
        let mut m = Mat::<c64>::zeros(n, n);
        for (col, t) in basis.tensors().iter().enumerate() {
            let image = apply_liouvillian(t.as_ref(), params, &ops)?;
            let coeffs = basis.decompose(image.as_ref())?;
            for (row, z) in coeffs.into_iter().enumerate() {
                m[(row, col)] = z;
            }
        }
        Ok(Self { m, params: *params, basis })
    }

    /// Second construction path: `U† S U` with `S` the vectorized superoperator
    /// and `U` the basis-change isometry.
    pub fn build_vectorized(params: &ModelParameters, basis: Arc<SphericalTensorBasis>) -> Result<Self> {
        params.validate()?;
        let rep = params.representation();
        let ops = build_spin_operators(&rep);
        let s = vectorized_superoperator(params, &ops)?;
        let u = basis.isometry();
        let m = u.adjoint() * &s * &u;
        Ok(Self { m, params: *params, basis })
    }

    /// Convenience constructor that also builds the tensor basis.
    pub fn for_params(params: &ModelParameters) -> Result<Self> {
        params.validate()?;
        let basis = Arc::new(build_tensor_basis(&params.representation())?);
        Self::build(params, basis)
    }

    pub fn matrix(&self) -> MatRef<'_, c64> {
        self.m.as_ref()
    }

    pub fn params(&self) -> &ModelParameters {
        &self.params
    }

    pub fn basis(&self) -> &SphericalTensorBasis {
        &self.basis
    }

    pub fn shared_basis(&self) -> Arc<SphericalTensorBasis> {
        Arc::clone(&self.basis)
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn max_entry(&self) -> f64 {
        max_abs(self.m.as_ref())
    }

    /// Applies `M` to a coefficient vector.
    pub fn apply(&self, a: &[c64]) -> Vec<c64> {
        crate::linalg::mat_vec(self.m.as_ref(), a)
    }
}

/// Builds the coefficient-space generator for `params` with the given basis.
pub fn build_superoperator(params: &ModelParameters, basis: Arc<SphericalTensorBasis>) -> Result<LiouvillianMatrix> {
    LiouvillianMatrix::build(params, basis)
}
