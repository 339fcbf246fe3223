//! Orthonormal spherical tensor operator basis `T^k_q` for a single spin `j`.
//!
//! Matrix elements follow the Wigner–Eckart form
//! `⟨j m'|T^k_q|j m⟩ = √((2k+1)/(2j+1)) ⟨j m; k q | j m'⟩`, which makes the set
//! orthonormal under `Tr[A† B]` and gives `T^k_q† = (−1)^q T^k_{−q}`.
//!
//! Tensors are stored by linear index `k² + k + q`, so each rank occupies a
//! contiguous block.

use faer::{c64, Mat, MatRef};

use crate::error::{Error, Result};
use crate::linalg::{c, hs_inner, CMat};
use crate::spin::{clebsch_gordan, HalfInt, SpinRepresentation};

/// Linear index of `(k, q)`: `k² + k + q`.
pub fn tensor_index(k: usize, q: i64) -> Result<usize> {
    let ki = k as i64;
    if q.abs() > ki {
        return Err(Error::TensorIndexOutOfRange { k: ki, q, max_rank: i64::MAX });
    }
    Ok((ki * ki + ki + q) as usize)
}

/// Inverse of [`tensor_index`].
pub fn tensor_label(index: usize) -> (usize, i64) {
    let k = (index as f64).sqrt().floor() as usize;
    // guard against rounding at perfect squares
    let k = if (k + 1) * (k + 1) <= index { k + 1 } else if k * k > index { k - 1 } else { k };
    let q = index as i64 - (k * k + k) as i64;
    (k, q)
}

/// The full tensor basis for one representation.
#[derive(Clone, Debug)]
pub struct SphericalTensorBasis {
    rep: SpinRepresentation,
    tensors: Vec<CMat>,
}

impl SphericalTensorBasis {
    pub fn new(rep: &SpinRepresentation) -> Result<Self> {
        let dim = rep.dim();
        let j = rep.j();
        let count = dim * dim;
        let mut tensors = Vec::with_capacity(count);
        for index in 0..count {
            let (k, q) = tensor_label(index);
            let norm = ((2 * k + 1) as f64 / dim as f64).sqrt();
            let kk = HalfInt::from_int(k as i64);
            let qq = HalfInt::from_int(q);
            let mut t = Mat::<c64>::zeros(dim, dim);
            for col in 0..dim {
                let m = rep.m_of(col);
                let Some(row) = rep.index_of(m + qq) else { continue };
                let cg = clebsch_gordan(j, m, kk, qq, j, m + qq)?;
                t[(row, col)] = c(norm * cg, 0.0);
            }
            tensors.push(t);
        }
        Ok(Self { rep: *rep, tensors })
    }

    pub fn representation(&self) -> &SpinRepresentation {
        &self.rep
    }

    /// Number of tensors, `(2j+1)²`.
    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn max_rank(&self) -> usize {
        self.rep.max_rank()
    }

    pub fn index(&self, k: usize, q: i64) -> Result<usize> {
        if k > self.max_rank() || q.abs() > k as i64 {
            return Err(Error::TensorIndexOutOfRange {
                k: k as i64,
                q,
                max_rank: self.max_rank() as i64,
            });
        }
        tensor_index(k, q)
    }

    pub fn label(&self, index: usize) -> (usize, i64) {
        tensor_label(index)
    }

    pub fn tensor(&self, k: usize, q: i64) -> Result<&CMat> {
        Ok(&self.tensors[self.index(k, q)?])
    }

    pub fn tensors(&self) -> &[CMat] {
        &self.tensors
    }

    /// Coefficients `a_kq = Tr[T^k_q† ρ]`.
    pub fn decompose(&self, rho: MatRef<'_, c64>) -> Result<Vec<c64>> {
        let dim = self.rep.dim();
        if rho.nrows() != dim || rho.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: format!("{dim}x{dim}"),
                got: format!("{}x{}", rho.nrows(), rho.ncols()),
            });
        }
        // each T^k_q is supported on the single band m' = m + q
        Ok(self
            .tensors
            .iter()
            .enumerate()
            .map(|(index, t)| {
                let (_, q) = tensor_label(index);
                let mut acc = c(0.0, 0.0);
                for col in 0..dim {
                    let row = col as i64 - q;
                    if row >= 0 && (row as usize) < dim {
                        acc += t[(row as usize, col)].conj() * rho[(row as usize, col)];
                    }
                }
                acc
            })
            .collect())
    }

    /// `ρ = Σ a_kq T^k_q`.
    pub fn reconstruct(&self, coeffs: &[c64]) -> Result<CMat> {
        if coeffs.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} coefficients", self.len()),
                got: format!("{}", coeffs.len()),
            });
        }
        let dim = self.rep.dim();
        let mut rho = Mat::<c64>::zeros(dim, dim);
        for (index, (t, &a)) in self.tensors.iter().zip(coeffs).enumerate() {
            if a == c(0.0, 0.0) {
                continue;
            }
            let (_, q) = tensor_label(index);
            for col in 0..dim {
                let row = col as i64 - q;
                if row >= 0 && (row as usize) < dim {
                    rho[(row as usize, col)] += t[(row as usize, col)] * a;
                }
            }
        }
        Ok(rho)
    }

    /// Basis-change isometry whose columns are `vec(T^k_q)` (column stacking).
    pub fn isometry(&self) -> CMat {
        let dim = self.rep.dim();
        let n = self.len();
        Mat::from_fn(dim * dim, n, |r, i| self.tensors[i][(r % dim, r / dim)])
    }

    /// Unitary change of basis to Hermitian operators. Column `a` holds the
    /// tensor-basis coefficients of the `a`-th Hermitian basis element:
    /// `T^k_0`, then for each `q = 1..k` the pair
    /// `((−1)^q T^k_q + T^k_{−q})/√2` and `i((−1)^q T^k_q − T^k_{−q})/√2`.
    ///
    /// Every column stays within one rank, and the returned ranks give the
    /// rank of each column. A Hermiticity-preserving map has a real matrix in
    /// this basis.
    pub fn hermitian_basis_change(&self) -> (CMat, Vec<usize>) {
        let n = self.len();
        let mut v = Mat::<c64>::zeros(n, n);
        let mut ranks = Vec::with_capacity(n);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut col = 0;
        for k in 0..=self.max_rank() {
            v[(tensor_index(k, 0).expect("valid"), col)] = c(1.0, 0.0);
            ranks.push(k);
            col += 1;
            for q in 1..=k as i64 {
                let plus = tensor_index(k, q).expect("valid");
                let minus = tensor_index(k, -q).expect("valid");
                let sign = parity(q);
                v[(plus, col)] = c(sign * s, 0.0);
                v[(minus, col)] = c(s, 0.0);
                v[(plus, col + 1)] = c(0.0, sign * s);
                v[(minus, col + 1)] = c(0.0, -s);
                ranks.push(k);
                ranks.push(k);
                col += 2;
            }
        }
        (v, ranks)
    }

    /// Largest deviation of the Gram matrix `Tr[T_a† T_b]` from the identity.
    pub fn gram_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for (a, ta) in self.tensors.iter().enumerate() {
            for (b, tb) in self.tensors.iter().enumerate().skip(a) {
                let g = hs_inner(ta.as_ref(), tb.as_ref());
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((g - c(target, 0.0)).norm());
            }
        }
        worst
    }

    /// Largest deviation from `T^k_q† = (−1)^q T^k_{−q}`.
    pub fn conjugation_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for (index, t) in self.tensors.iter().enumerate() {
            let (k, q) = tensor_label(index);
            let partner = &self.tensors[tensor_index(k, -q).expect("valid label")];
            let sign = if q.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            let dim = self.rep.dim();
            for col in 0..dim {
                for row in 0..dim {
                    let lhs = t[(col, row)].conj();
                    let rhs = partner[(row, col)] * sign;
                    worst = worst.max((lhs - rhs).norm());
                }
            }
        }
        worst
    }
}

pub fn build_tensor_basis(rep: &SpinRepresentation) -> Result<SphericalTensorBasis> {
    SphericalTensorBasis::new(rep)
}

/// Sign `(−1)^q`.
pub(crate) fn parity(q: i64) -> f64 {
    if q.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}
