//! Reading the generator as a hopping model on the `(k, q)` wedge:
//!
//! `ȧ_{k,q} = t₊ a_{k+1,q} + t₋ a_{k−1,q} − γ a_{k,q} − i w₋ a_{k,q−1} − i w₊ a_{k,q+1}`.
//!
//! Amplitudes are read straight off the matrix; everything outside this
//! five-point stencil is collected into `residual_norm`.

use super::LiouvillianMatrix;
use crate::linalg::{c, I};
use crate::tensor::{tensor_index, tensor_label};
use faer::c64;

/// Hopping amplitudes into the equation of motion of one site `(k, q)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HoppingSite {
    pub k: usize,
    pub q: i64,
    /// coupling from `a_{k+1,q}`
    pub tplus: c64,
    /// coupling from `a_{k−1,q}`
    pub tminus: c64,
    /// on-site decay, entered with a minus sign
    pub gamma_onsite: c64,
    /// coupling from `a_{k,q+1}`, entered as `−i·wplus`
    pub wplus: c64,
    /// coupling from `a_{k,q−1}`, entered as `−i·wminus`
    pub wminus: c64,
}

#[derive(Clone, Debug)]
pub struct HoppingCoefficients {
    /// One entry per site, in tensor-index order.
    pub sites: Vec<HoppingSite>,
    /// Largest magnitude outside the hopping stencil.
    pub residual_norm: f64,
    /// Largest magnitude of any generator entry.
    pub max_entry: f64,
}

impl HoppingCoefficients {
    pub fn site(&self, k: usize, q: i64) -> Option<&HoppingSite> {
        let idx = tensor_index(k, q).ok()?;
        self.sites.get(idx)
    }

    /// `residual_norm / max_entry`, or zero for a vanishing generator.
    pub fn relative_residual(&self) -> f64 {
        if self.max_entry == 0.0 {
            0.0
        } else {
            self.residual_norm / self.max_entry
        }
    }
}

fn is_stencil(row: (usize, i64), col: (usize, i64)) -> bool {
    let dk = col.0 as i64 - row.0 as i64;
    let dq = col.1 - row.1;
    matches!((dk, dq), (0, 0) | (1, 0) | (-1, 0) | (0, 1) | (0, -1))
}

pub fn extract_hoppings(liouv: &LiouvillianMatrix) -> HoppingCoefficients {
    let m = liouv.matrix();
    let n = liouv.dim();
    let max_rank = liouv.basis().max_rank();
    let zero = c(0.0, 0.0);
    let entry = |row: usize, k: i64, q: i64| -> c64 {
        if k < 0 || k as usize > max_rank || q.abs() > k {
            zero
        } else {
            m[(row, tensor_index(k as usize, q).expect("in range"))]
        }
    };

    let sites = (0..n)
        .map(|row| {
            let (k, q) = tensor_label(row);
            let ki = k as i64;
            HoppingSite {
                k,
                q,
                tplus: entry(row, ki + 1, q),
                tminus: entry(row, ki - 1, q),
                gamma_onsite: -m[(row, row)],
                wplus: I * entry(row, ki, q + 1),
                wminus: I * entry(row, ki, q - 1),
            }
        })
        .collect();

    let mut residual = 0.0f64;
    let mut max_entry = 0.0f64;
    for col in 0..n {
        let lc = tensor_label(col);
        for row in 0..n {
            let v = m[(row, col)].norm();
            max_entry = max_entry.max(v);
            if !is_stencil(tensor_label(row), lc) {
                residual = residual.max(v);
            }
        }
    }
    HoppingCoefficients { sites, residual_norm: residual, max_entry }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liouvillian::ModelParameters;
    use crate::linalg::max_abs_diff;

    fn hoppings(omega: f64, gamma: f64, n: u32) -> HoppingCoefficients {
        let p = ModelParameters::new(omega, gamma, n).unwrap();
        extract_hoppings(&LiouvillianMatrix::for_params(&p).unwrap())
    }

    #[test]
    fn no_drive_means_no_q_hopping() {
        let h = hoppings(0.0, 1.0, 6);
        assert!(h.sites.iter().all(|s| s.wplus.norm() == 0.0 && s.wminus.norm() == 0.0));
    }

    #[test]
    fn no_decay_means_no_k_hopping() {
        let h = hoppings(1.0, 0.0, 6);
        assert!(h
            .sites
            .iter()
            .all(|s| s.tplus.norm() < 1e-15 && s.tminus.norm() < 1e-15 && s.gamma_onsite.norm() < 1e-15));
    }

    #[test]
    fn stencil_is_exhaustive() {
        for n in [4, 10] {
            let h = hoppings(1.0, 1.0, n);
            assert!(h.residual_norm < 1e-12 * h.max_entry, "N={n}: {}", h.relative_residual());
        }
    }

    #[test]
    fn coherent_amplitudes_follow_ladder_factors() {
        // M_{(k,q),(k,q±1)} = −i(Ω/2)√(k(k+1) − q(q±1)): wplus/wminus are real.
        let omega = 1.3;
        let h = hoppings(omega, 0.4, 8);
        for s in &h.sites {
            let kf = s.k as f64;
            let qf = s.q as f64;
            let up = if s.q < s.k as i64 { 0.5 * omega * (kf * (kf + 1.0) - qf * (qf + 1.0)).sqrt() } else { 0.0 };
            let down = if s.q > -(s.k as i64) { 0.5 * omega * (kf * (kf + 1.0) - qf * (qf - 1.0)).sqrt() } else { 0.0 };
            assert!((s.wplus - c(up, 0.0)).norm() < 1e-10, "{s:?}");
            assert!((s.wminus - c(down, 0.0)).norm() < 1e-10, "{s:?}");
        }
    }

    #[test]
    fn amplitudes_scale_linearly() {
        let base = hoppings(1.0, 1.0, 6);
        let doubled_gamma = hoppings(1.0, 2.0, 6);
        let doubled_omega = hoppings(2.0, 1.0, 6);
        for ((b, g), o) in base.sites.iter().zip(&doubled_gamma.sites).zip(&doubled_omega.sites) {
            assert!((g.tplus - b.tplus * 2.0).norm() < 1e-12);
            assert!((g.tminus - b.tminus * 2.0).norm() < 1e-12);
            assert!((g.gamma_onsite - b.gamma_onsite * 2.0).norm() < 1e-12);
            assert!((g.wplus - b.wplus).norm() < 1e-12);
            assert!((o.wplus - b.wplus * 2.0).norm() < 1e-12);
            assert!((o.wminus - b.wminus * 2.0).norm() < 1e-12);
            assert!((o.tplus - b.tplus).norm() < 1e-12);
        }
    }

    #[test]
    fn decay_makes_generator_non_normal() {
        let p = ModelParameters::new(1.0, 1.0, 6).unwrap();
        let l = LiouvillianMatrix::for_params(&p).unwrap();
        let m = l.matrix();
        let mmh = m * m.adjoint();
        let mhm = m.adjoint() * m;
        assert!(max_abs_diff(mmh.as_ref(), mhm.as_ref()) > 1e-3);

        let h = extract_hoppings(&l);
        // k-hopping is non-reciprocal somewhere
        let asym = h.sites.iter().any(|s| {
            h.site(s.k + 1, s.q).is_some_and(|up| (s.tplus.norm() - up.tminus.norm()).abs() > 1e-6)
        });
        assert!(asym);

        let unitary = LiouvillianMatrix::for_params(&ModelParameters::new(1.0, 0.0, 6).unwrap()).unwrap();
        let m = unitary.matrix();
        let comm = m * m.adjoint() - m.adjoint() * m;
        assert!(crate::linalg::max_abs(comm.as_ref()) < 1e-12);
    }
}
