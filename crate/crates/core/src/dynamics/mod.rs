//! Time evolution of tensor coefficients, expectation values, rank-resolved
//! mode weights and the initial-state comparison experiment.

pub mod integrate;
mod modes;
mod universality;

use faer::{c64, Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermiticity_residual, max_abs, CMat};
use crate::liouvillian::{spectrum, LiouvillianMatrix, SpectralDecomposition};
use crate::spin::{build_spin_operators, ln_factorial, SpinRepresentation};
use crate::tensor::SphericalTensorBasis;

pub use integrate::{SparseGenerator, StepStats, Tolerances};
pub use modes::{rank_weights, ModeWeightTable, ModeWeights};
pub use universality::{count_crossings, dominant_frequency, universality_experiment, PairComparison, StateSummary, UniversalityReport};

/// State vector of `|θ, φ⟩ = e^{−iφJz} e^{−iθJy} |j, j⟩`.
pub fn coherent_spin_vector(rep: &SpinRepresentation, theta: f64, phi: f64) -> Result<Vec<c64>> {
    if !(0.0..=std::f64::consts::PI).contains(&theta) {
        return Err(Error::InvalidParameter { name: "theta", reason: format!("{theta} outside [0, π]") });
    }
    if !(0.0..2.0 * std::f64::consts::PI).contains(&phi) {
        return Err(Error::InvalidParameter { name: "phi", reason: format!("{phi} outside [0, 2π)") });
    }
    let two_j = rep.j().twice();
    let (cos, sin) = ((0.5 * theta).cos(), (0.5 * theta).sin());
    Ok((0..rep.dim())
        .map(|i| {
            let m = rep.m_of(i);
            let up = ((two_j + m.twice()) / 2) as i32;
            let down = ((two_j - m.twice()) / 2) as i32;
            let binom = (0.5 * (ln_factorial(two_j) - ln_factorial(up as i64) - ln_factorial(down as i64))).exp();
            c64::cis(-m.value() * phi) * (binom * cos.powi(up) * sin.powi(down))
        })
        .collect())
}

/// `|θ, φ⟩⟨θ, φ|`.
pub fn coherent_spin_state(rep: &SpinRepresentation, theta: f64, phi: f64) -> Result<CMat> {
    let psi = coherent_spin_vector(rep, theta, phi)?;
    Ok(Mat::from_fn(psi.len(), psi.len(), |i, j| psi[i] * psi[j].conj()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvolutionMethod {
    /// Spectral unless the eigenbasis is too ill-conditioned.
    Auto,
    Spectral,
    Integrate,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    pub method: EvolutionMethod,
    /// Largest eigenbasis condition estimate accepted by `Auto`.
    pub condition_limit: f64,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { method: EvolutionMethod::Auto, condition_limit: 1e8, rtol: 1e-9, atol: 1e-12 }
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `a(t)` per time, in tensor-index order.
    pub coefficients: Vec<Vec<c64>>,
    /// `⟨Jx⟩`, `⟨Jy⟩`, `⟨Jz⟩` keyed by `jx`, `jy`, `jz`.
    pub observables: Vec<(String, Vec<f64>)>,
    /// Method actually used (never `Auto`).
    pub method: EvolutionMethod,
    pub eigenbasis_condition: Option<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn observable(&self, name: &str) -> Option<&[f64]> {
        self.observables.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }
}

fn check_times(t_grid: &[f64]) -> Result<()> {
    if t_grid.first() != Some(&0.0) {
        return Err(Error::InvalidParameter { name: "t_grid", reason: "must start at 0".into() });
    }
    if t_grid.iter().any(|t| !t.is_finite()) || t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter { name: "t_grid", reason: "must be finite and strictly ascending".into() });
    }
    Ok(())
}

/// `a(t) = exp(M t) a₀` on `t_grid`.
pub fn evolve(liouv: &LiouvillianMatrix, a0: &[c64], t_grid: &[f64], options: &EvolveOptions) -> Result<Trajectory> {
    let spec = match options.method {
        EvolutionMethod::Integrate => None,
        _ => Some(spectrum(liouv)?),
    };
    evolve_with(liouv, spec.as_ref(), a0, t_grid, options)
}

/// As [`evolve`], reusing a precomputed spectrum when one is given.
pub fn evolve_with(
    liouv: &LiouvillianMatrix,
    spec: Option<&SpectralDecomposition>,
    a0: &[c64],
    t_grid: &[f64],
    options: &EvolveOptions,
) -> Result<Trajectory> {
    check_times(t_grid)?;
    let n = liouv.dim();
    if a0.len() != n {
        return Err(Error::DimensionMismatch { expected: format!("{n} coefficients"), got: format!("{}", a0.len()) });
    }
    let condition = spec.map(SpectralDecomposition::eigenbasis_condition);
    let method = match (options.method, condition) {
        (EvolutionMethod::Integrate, _) | (_, None) => EvolutionMethod::Integrate,
        (EvolutionMethod::Spectral, Some(_)) => EvolutionMethod::Spectral,
        (EvolutionMethod::Auto, Some(cond)) if cond <= options.condition_limit => EvolutionMethod::Spectral,
        (EvolutionMethod::Auto, Some(cond)) => {
            log::warn!("eigenbasis condition {cond:.3e} exceeds {:.1e}; integrating directly", options.condition_limit);
            EvolutionMethod::Integrate
        }
    };

    let coefficients = match (method, spec) {
        (EvolutionMethod::Spectral, Some(spec)) => spectral_evolution(spec, a0, t_grid),
        _ => {
            let gen = SparseGenerator::from_dense(liouv.matrix());
            integrate::integrate(&gen, a0, t_grid, Tolerances { rtol: options.rtol, atol: options.atol })?.0
        }
    };

    let mut traj = Trajectory {
        times: t_grid.to_vec(),
        coefficients,
        observables: Vec::new(),
        method,
        eigenbasis_condition: condition,
    };
    let ops = build_spin_operators(liouv.basis().representation());
    for (name, op) in [("jx", &ops.jx), ("jy", &ops.jy), ("jz", &ops.jz)] {
        let series = observable_trajectory(&traj, liouv.basis(), &Observable::Matrix(op.clone()))?;
        traj.observables.push((name.to_string(), series));
    }
    Ok(traj)
}

fn spectral_evolution(spec: &SpectralDecomposition, a0: &[c64], t_grid: &[f64]) -> Vec<Vec<c64>> {
    let n = a0.len();
    let a0 = Mat::from_fn(n, 1, |i, _| a0[i]);
    // c_α = l_α† a₀, then a(t) = R diag(e^{λt}) c for all times in one product
    let weights = spec.left.adjoint() * &a0;
    let phases = Mat::from_fn(n, t_grid.len(), |alpha, ti| weights[(alpha, 0)] * (spec.eigenvalues[alpha] * t_grid[ti]).exp());
    let states = &spec.right * &phases;
    (0..t_grid.len()).map(|ti| (0..n).map(|i| states[(i, ti)]).collect()).collect()
}

/// Observable for [`observable_trajectory`].
#[derive(Clone, Debug)]
pub enum Observable {
    Jx,
    Jy,
    Jz,
    Matrix(CMat),
}

/// `⟨A⟩(t) = Tr[A ρ(t)] = Re Σ a_kq(t) conj(b_kq)` with `b = decompose(A)`.
pub fn observable_trajectory(traj: &Trajectory, basis: &SphericalTensorBasis, observable: &Observable) -> Result<Vec<f64>> {
    let owned;
    let a: MatRef<'_, c64> = match observable {
        Observable::Matrix(m) => m.as_ref(),
        named => {
            let ops = build_spin_operators(basis.representation());
            owned = match named {
                Observable::Jx => ops.jx,
                Observable::Jy => ops.jy,
                _ => ops.jz,
            };
            owned.as_ref()
        }
    };
    let residual = hermiticity_residual(a);
    if residual > 1e-10 * max_abs(a).max(1.0) {
        return Err(Error::NotHermitian { residual });
    }
    let b = basis.decompose(a)?;
    Ok(traj
        .coefficients
        .iter()
        .map(|coeffs| coeffs.iter().zip(&b).map(|(x, y)| (*x * y.conj()).re).sum())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, trace, unitary_exp};
    use crate::liouvillian::{steady_state, ModelParameters};

    fn liouv(omega: f64, gamma: f64, n: u32) -> LiouvillianMatrix {
        LiouvillianMatrix::for_params(&ModelParameters::new(omega, gamma, n).unwrap()).unwrap()
    }

    #[test]
    fn coherent_state_poles_and_equator() {
        let rep = SpinRepresentation::from_spins(6);
        let ops = build_spin_operators(&rep);
        let north = coherent_spin_state(&rep, 0.0, 0.0).unwrap();
        assert!((north[(0, 0)] - c(1.0, 0.0)).norm() < 1e-14);
        let south = coherent_spin_state(&rep, std::f64::consts::PI, 0.0).unwrap();
        assert!((south[(6, 6)] - c(1.0, 0.0)).norm() < 1e-12);
        let eq = coherent_spin_state(&rep, std::f64::consts::FRAC_PI_2, 0.0).unwrap();
        let jx = trace((&ops.jx * &eq).as_ref());
        assert!((jx - c(3.0, 0.0)).norm() < 1e-12);
        assert!(coherent_spin_state(&rep, -0.1, 0.0).is_err());
        assert!(coherent_spin_state(&rep, 0.1, 7.0).is_err());
    }

    #[test]
    fn coherent_state_matches_rotation() {
        let rep = SpinRepresentation::from_spins(5);
        let ops = build_spin_operators(&rep);
        let (theta, phi) = (1.1, 2.3);
        let ry = unitary_exp(ops.jy.as_ref(), theta).unwrap();
        let rz = unitary_exp(ops.jz.as_ref(), phi).unwrap();
        let u = &rz * &ry;
        let psi = coherent_spin_vector(&rep, theta, phi).unwrap();
        for i in 0..rep.dim() {
            assert!((psi[i] - u[(i, 0)]).norm() < 1e-12);
        }
        let rho = coherent_spin_state(&rep, theta, phi).unwrap();
        assert!((trace(rho.as_ref()) - c(1.0, 0.0)).norm() < 1e-12);
        assert!((trace((&rho * &rho).as_ref()) - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn steady_state_is_stationary() {
        let l = liouv(1.0, 0.8, 6);
        let a0 = steady_state(&l).unwrap();
        let times: Vec<f64> = (0..=20).map(|i| i as f64 * 0.5).collect();
        for method in [EvolutionMethod::Spectral, EvolutionMethod::Integrate] {
            let opts = EvolveOptions { method, ..Default::default() };
            let traj = evolve(&l, &a0, &times, &opts).unwrap();
            assert_eq!(traj.method, method);
            for a in &traj.coefficients {
                let d = a.iter().zip(&a0).map(|(x, y)| (*x - *y).norm()).fold(0.0, f64::max);
                assert!(d < 1e-9, "{method:?}: {d}");
            }
        }
    }

    #[test]
    fn unitary_flow_conserves_norm() {
        let l = liouv(1.0, 0.0, 6);
        let rho = coherent_spin_state(l.basis().representation(), 0.7, 0.2).unwrap();
        let a0 = l.basis().decompose(rho.as_ref()).unwrap();
        let n0: f64 = a0.iter().map(|z| z.norm_sqr()).sum();
        let times: Vec<f64> = (0..=30).map(|i| i as f64 * 0.3).collect();
        let traj = evolve(&l, &a0, &times, &EvolveOptions::default()).unwrap();
        for a in &traj.coefficients {
            let n: f64 = a.iter().map(|z| z.norm_sqr()).sum();
            assert!((n - n0).abs() < 1e-9);
        }
    }

    #[test]
    fn methods_agree() {
        let l = liouv(1.0, 0.6, 8);
        let rho = coherent_spin_state(l.basis().representation(), 0.4, 1.0).unwrap();
        let a0 = l.basis().decompose(rho.as_ref()).unwrap();
        let times: Vec<f64> = (0..=40).map(|i| i as f64 * 0.25).collect();
        let s = evolve(&l, &a0, &times, &EvolveOptions { method: EvolutionMethod::Spectral, ..Default::default() }).unwrap();
        let d = evolve(&l, &a0, &times, &EvolveOptions { method: EvolutionMethod::Integrate, ..Default::default() }).unwrap();
        for (x, y) in s.coefficients.iter().zip(&d.coefficients) {
            let diff: f64 = x.iter().zip(y).map(|(a, b)| (*a - *b).norm_sqr()).sum::<f64>().sqrt();
            let norm: f64 = x.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            assert!(diff < 1e-6 * norm, "{diff}");
        }
    }

    #[test]
    fn ill_conditioned_basis_falls_back() {
        let l = liouv(1.0, 0.6, 4);
        let a0 = steady_state(&l).unwrap();
        let opts = EvolveOptions { condition_limit: 0.5, ..Default::default() };
        let traj = evolve(&l, &a0, &[0.0, 1.0], &opts).unwrap();
        assert_eq!(traj.method, EvolutionMethod::Integrate);
        assert!(traj.eigenbasis_condition.unwrap() > 0.5);
    }

    #[test]
    fn time_grid_is_validated() {
        let l = liouv(1.0, 0.6, 2);
        let a0 = steady_state(&l).unwrap();
        let opts = EvolveOptions::default();
        assert!(evolve(&l, &a0, &[0.5, 1.0], &opts).is_err());
        assert!(evolve(&l, &a0, &[0.0, 1.0, 1.0], &opts).is_err());
        assert!(evolve(&l, &a0[1..], &[0.0, 1.0], &opts).is_err());
    }

    #[test]
    fn dark_state_polarization() {
        let l = liouv(0.0, 1.0, 8);
        let a0 = steady_state(&l).unwrap();
        let traj = evolve(&l, &a0, &[0.0], &EvolveOptions::default()).unwrap();
        assert!((traj.observable("jz").unwrap()[0] + 4.0).abs() < 1e-9);
    }

    #[test]
    fn non_hermitian_observable_rejected() {
        let l = liouv(1.0, 1.0, 2);
        let a0 = steady_state(&l).unwrap();
        let traj = evolve(&l, &a0, &[0.0], &EvolveOptions::default()).unwrap();
        let ops = build_spin_operators(l.basis().representation());
        let r = observable_trajectory(&traj, l.basis(), &Observable::Matrix(ops.jplus.clone()));
        assert!(matches!(r, Err(Error::NotHermitian { .. })));
        let jz = observable_trajectory(&traj, l.basis(), &Observable::Jz).unwrap();
        assert_eq!(jz, traj.observable("jz").unwrap());
    }
}
