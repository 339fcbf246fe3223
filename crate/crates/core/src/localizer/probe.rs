use faer::{c64, Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, hermitian_eigenvalues, max_abs, max_abs_diff, symmetric_eigenvalues, CMat, I};
use crate::liouvillian::LiouvillianMatrix;
use crate::tensor::{tensor_label, SphericalTensorBasis};

/// Position-term weight used unless a caller asks otherwise.
pub const DEFAULT_KAPPA: f64 = 1.0;

/// Zero threshold for localizer eigenvalues, relative to the localizer's
/// spectral norm.
pub const DEFAULT_ZERO_TOL_REL: f64 = 1e-8;

/// Diagonal position operator. For the tensor basis this is the rank `k`
/// of every `(k, q)` site.
#[derive(Clone, Debug, PartialEq)]
pub struct PositionSuperoperator {
    diag: Vec<f64>,
}

impl PositionSuperoperator {
    pub fn rank_position(basis: &SphericalTensorBasis) -> Self {
        Self { diag: (0..basis.len()).map(|i| tensor_label(i).0 as f64).collect() }
    }

    pub fn from_positions(diag: Vec<f64>) -> Self {
        Self { diag }
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizerOptions {
    pub zero_tol_rel: f64,
}

impl Default for LocalizerOptions {
    fn default() -> Self {
        Self { zero_tol_rel: DEFAULT_ZERO_TOL_REL }
    }
}

/// One evaluation of the local index and gap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalizerSample {
    pub x0: f64,
    pub lambda0: c64,
    pub kappa: f64,
    pub nu: i64,
    pub mu: f64,
    pub well_defined: bool,
}

#[derive(Clone, Copy, Debug)]
struct Inertia {
    signature: i64,
    gapped: bool,
    min_abs: f64,
}

fn inertia(h: MatRef<'_, c64>, zero_tol_rel: f64) -> Result<Inertia> {
    inertia_of(hermitian_eigenvalues(h)?, zero_tol_rel)
}

fn inertia_of(vals: Vec<f64>, zero_tol_rel: f64) -> Result<Inertia> {
    let norm = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = zero_tol_rel * norm;
    Ok(count_inertia(&vals, tol))
}

fn count_inertia(vals: &[f64], tol: f64) -> Inertia {
    let pos = vals.iter().filter(|&&v| v > tol).count() as i64;
    let neg = vals.iter().filter(|&&v| v < -tol).count() as i64;
    let min_abs = vals.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    Inertia { signature: pos - neg, gapped: (pos + neg) as usize == vals.len(), min_abs }
}

fn check_hermitian(h: MatRef<'_, c64>) -> Result<()> {
    if h.nrows() != h.ncols() {
        return Err(Error::DimensionMismatch {
            expected: "square matrix".into(),
            got: format!("{}x{}", h.nrows(), h.ncols()),
        });
    }
    let residual = max_abs_diff(h, h.adjoint().to_owned().as_ref());
    if residual > 1e-10 * max_abs(h).max(1.0) {
        return Err(Error::NotHermitian { residual });
    }
    Ok(())
}

/// Signature of a Hermitian matrix: `#{λ > tol} − #{λ < −tol}`, plus
/// whether every eigenvalue cleared the tolerance.
pub fn signature(h: MatRef<'_, c64>, zero_tol: f64) -> Result<(i64, bool)> {
    check_hermitian(h)?;
    let vals = hermitian_eigenvalues(h)?;
    let inertia = count_inertia(&vals, zero_tol);
    Ok((inertia.signature, inertia.gapped))
}

/// Real form of a generator: in some unitarily rotated basis that commutes
/// with the positions, `A = sym + antisym` with both parts real. For real `λ₀`
/// the localizer is then real symmetric with the same spectrum.
#[derive(Clone, Debug)]
struct RealForm {
    sym: Mat<f64>,
    antisym: Mat<f64>,
    positions: Vec<f64>,
}

impl RealForm {
    fn from_real(a: MatRef<'_, c64>, positions: Vec<f64>) -> Option<Self> {
        let scale = max_abs(a).max(1.0);
        let n = a.nrows();
        if (0..n).any(|j| (0..n).any(|i| a[(i, j)].im.abs() > 1e-13 * scale)) {
            return None;
        }
        let sym = Mat::from_fn(n, n, |i, j| 0.5 * (a[(i, j)].re + a[(j, i)].re));
        let antisym = Mat::from_fn(n, n, |i, j| 0.5 * (a[(i, j)].re - a[(j, i)].re));
        Some(Self { sym, antisym, positions })
    }

    fn localizer(&self, x0: f64, lambda0: f64, kappa: f64) -> Mat<f64> {
        let n = self.positions.len();
        Mat::from_fn(2 * n, 2 * n, |r, col| {
            let (i, s) = (r / 2, r % 2);
            let (j, t) = (col / 2, col % 2);
            let diag = if i == j { 1.0 } else { 0.0 };
            match (s, t) {
                (0, 0) => kappa * (self.positions[i] - x0) * diag,
                (1, 1) => -kappa * (self.positions[i] - x0) * diag,
                // Im(A)⊗σy = antisym ⊗ [[0,−1],[1,0]] for real A
                (0, 1) => self.sym[(i, j)] - lambda0 * diag - self.antisym[(i, j)],
                _ => self.sym[(i, j)] - lambda0 * diag + self.antisym[(i, j)],
            }
        })
    }
}

/// Precomputed Hermitian and anti-Hermitian parts of a generator together
/// with its position operator; evaluates localizers at arbitrary
/// `(x₀, λ₀, κ)`.
#[derive(Clone, Debug)]
pub struct LocalizerProbe {
    generator: CMat,
    re_part: CMat,
    im_part: CMat,
    positions: Vec<f64>,
    options: LocalizerOptions,
    flip_alt_sign: bool,
    real_form: Option<RealForm>,
}

impl LocalizerProbe {
    pub fn new(generator: MatRef<'_, c64>, position: &PositionSuperoperator, options: LocalizerOptions) -> Result<Self> {
        let n = generator.nrows();
        if generator.ncols() != n || position.len() != n {
            return Err(Error::DimensionMismatch {
                expected: format!("{n}x{n} generator with {n} positions"),
                got: format!("{}x{} generator with {} positions", generator.nrows(), generator.ncols(), position.len()),
            });
        }
        let adj = generator.adjoint().to_owned();
        let re_part = (generator + &adj) * faer::Scale(c(0.5, 0.0));
        let im_part = (generator - &adj) * faer::Scale(c(0.0, -0.5));
        Ok(Self {
            generator: generator.to_owned(),
            re_part,
            im_part,
            positions: position.diag.clone(),
            options,
            flip_alt_sign: false,
            real_form: RealForm::from_real(generator, position.diag.clone()),
        })
    }

    /// Probe on the rank coordinate `x = k` of a Liouvillian.
    pub fn for_liouvillian(liouv: &LiouvillianMatrix, options: LocalizerOptions) -> Result<Self> {
        let pos = PositionSuperoperator::rank_position(liouv.basis());
        let mut probe = Self::new(liouv.matrix(), &pos, options)?;
        // the generator preserves Hermiticity, so it is real on a Hermitian basis
        let (v, ranks) = liouv.basis().hermitian_basis_change();
        let rotated = v.adjoint() * liouv.matrix() * &v;
        probe.real_form = RealForm::from_real(rotated.as_ref(), ranks.iter().map(|&k| k as f64).collect());
        Ok(probe)
    }

    /// Whether samples at real `λ₀` use the real symmetric form.
    pub fn has_real_form(&self) -> bool {
        self.real_form.is_some()
    }

    /// Drops the real form so every sample goes through the complex localizer.
    #[doc(hidden)]
    pub fn without_real_form(mut self) -> Self {
        self.real_form = None;
        self
    }

    pub fn dim(&self) -> usize {
        self.positions.len()
    }

    pub fn options(&self) -> &LocalizerOptions {
        &self.options
    }

    pub fn generator(&self) -> MatRef<'_, c64> {
        self.generator.as_ref()
    }

    /// Test hook: negates the alternate construction so that equivalence
    /// checks can be seen to fail.
    #[doc(hidden)]
    pub fn with_alt_sign_fault(mut self, enabled: bool) -> Self {
        self.flip_alt_sign = enabled;
        self
    }

    /// The localizer as a `2n × 2n` Hermitian matrix, Kronecker-ordered with
    /// the Pauli factor as the fast index.
    pub fn localizer(&self, x0: f64, lambda0: c64, kappa: f64) -> CMat {
        let n = self.dim();
        Mat::from_fn(2 * n, 2 * n, |r, col| {
            let (i, s) = (r / 2, r % 2);
            let (j, t) = (col / 2, col % 2);
            let diag = if i == j { 1.0 } else { 0.0 };
            let re = self.re_part[(i, j)] - c(lambda0.re * diag, 0.0);
            let im = self.im_part[(i, j)] - c(lambda0.im * diag, 0.0);
            match (s, t) {
                (0, 0) => c(kappa * (self.positions[i] - x0) * diag, 0.0),
                (1, 1) => c(-kappa * (self.positions[i] - x0) * diag, 0.0),
                // σx = [[0,1],[1,0]], σy = [[0,−i],[i,0]]
                (0, 1) => re - I * im,
                _ => re + I * im,
            }
        })
    }

    /// `(X̃ + iH̃)S` with `H̃ = [[0, B], [B†, 0]]`, `X̃ = diag(κ(X−x₀), κ(X−x₀))`,
    /// `S = diag(1, −1)` and `B = A − λ₀`, in block ordering.
    pub fn alt_localizer(&self, x0: f64, lambda0: c64, kappa: f64) -> CMat {
        let n = self.dim();
        let b = Mat::from_fn(n, n, |i, j| self.generator[(i, j)] - if i == j { lambda0 } else { c(0.0, 0.0) });
        let bh = b.adjoint().to_owned();
        let h_tilde = Mat::from_fn(2 * n, 2 * n, |r, col| match (r < n, col < n) {
            (true, false) => b[(r, col - n)],
            (false, true) => bh[(r - n, col)],
            _ => c(0.0, 0.0),
        });
        let x_tilde = Mat::from_fn(2 * n, 2 * n, |r, col| {
            if r == col {
                c(kappa * (self.positions[r % n] - x0), 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        let chiral = Mat::from_fn(2 * n, 2 * n, |r, col| {
            if r != col {
                c(0.0, 0.0)
            } else if r < n {
                c(1.0, 0.0)
            } else {
                c(-1.0, 0.0)
            }
        });
        let l = (x_tilde + h_tilde * faer::Scale(I)) * chiral;
        if self.flip_alt_sign {
            l * faer::Scale(c(-1.0, 0.0))
        } else {
            l
        }
    }

    fn sample_from(&self, h: MatRef<'_, c64>, x0: f64, lambda0: c64, kappa: f64) -> Result<LocalizerSample> {
        let inertia = inertia(h, self.options.zero_tol_rel)?;
        self.finish(inertia, x0, lambda0, kappa)
    }

    fn finish(&self, inertia: Inertia, x0: f64, lambda0: c64, kappa: f64) -> Result<LocalizerSample> {
        let well_defined = inertia.gapped;
        if well_defined && inertia.signature % 2 != 0 {
            return Err(Error::OddSignature { signature: inertia.signature });
        }
        Ok(LocalizerSample { x0, lambda0, kappa, nu: inertia.signature / 2, mu: inertia.min_abs, well_defined })
    }

    /// Local index `ν = sig(L)/2` and gap `μ = min |spec L|`.
    pub fn sample(&self, x0: f64, lambda0: c64, kappa: f64) -> Result<LocalizerSample> {
        check_kappa(kappa)?;
        if let (Some(real), 0.0) = (&self.real_form, lambda0.im) {
            let l = real.localizer(x0, lambda0.re, kappa);
            let inertia = inertia_of(symmetric_eigenvalues(l.as_ref())?, self.options.zero_tol_rel)?;
            return self.finish(inertia, x0, lambda0, kappa);
        }
        let l = self.localizer(x0, lambda0, kappa);
        self.sample_from(l.as_ref(), x0, lambda0, kappa)
    }

    /// Same quantities from the alternate construction.
    pub fn alt_sample(&self, x0: f64, lambda0: c64, kappa: f64) -> Result<LocalizerSample> {
        check_kappa(kappa)?;
        let l = self.alt_localizer(x0, lambda0, kappa);
        check_hermitian(l.as_ref())?;
        self.sample_from(l.as_ref(), x0, lambda0, kappa)
    }
}

fn check_kappa(kappa: f64) -> Result<()> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(Error::InvalidParameter { name: "kappa", reason: format!("{kappa} must be positive") });
    }
    Ok(())
}

pub fn build_localizer(probe: &LocalizerProbe, x0: f64, lambda0: c64, kappa: f64) -> Result<CMat> {
    check_kappa(kappa)?;
    Ok(probe.localizer(x0, lambda0, kappa))
}

pub fn build_alt_localizer(probe: &LocalizerProbe, x0: f64, lambda0: c64, kappa: f64) -> Result<CMat> {
    check_kappa(kappa)?;
    Ok(probe.alt_localizer(x0, lambda0, kappa))
}

pub fn local_index(probe: &LocalizerProbe, x0: f64, lambda0: c64, kappa: f64) -> Result<LocalizerSample> {
    probe.sample(x0, lambda0, kappa)
}

pub fn alt_localizer_index(probe: &LocalizerProbe, x0: f64, lambda0: c64, kappa: f64) -> Result<LocalizerSample> {
    probe.alt_sample(x0, lambda0, kappa)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::hermiticity_residual;
    use crate::liouvillian::ModelParameters;

    fn probe(omega: f64, gamma: f64, n: u32) -> LocalizerProbe {
        let l = LiouvillianMatrix::for_params(&ModelParameters::new(omega, gamma, n).unwrap()).unwrap();
        LocalizerProbe::for_liouvillian(&l, LocalizerOptions::default()).unwrap()
    }

    fn diag(v: &[f64]) -> CMat {
        Mat::from_fn(v.len(), v.len(), |i, j| if i == j { c(v[i], 0.0) } else { c(0.0, 0.0) })
    }

    #[test]
    fn signature_examples() {
        assert_eq!(signature(diag(&[1.0, -1.0]).as_ref(), 1e-12).unwrap(), (0, true));
        assert_eq!(signature(diag(&[2.0, 1.0, 1e-15]).as_ref(), 1e-12).unwrap(), (2, false));
        let mut nh = diag(&[1.0, 1.0]);
        nh[(0, 1)] = c(0.5, 0.0);
        assert!(matches!(signature(nh.as_ref(), 1e-12), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn rank_position_spectrum() {
        let l = LiouvillianMatrix::for_params(&ModelParameters::new(1.0, 1.0, 4).unwrap()).unwrap();
        let pos = PositionSuperoperator::rank_position(l.basis());
        for k in 0..=4usize {
            let count = pos.diag().iter().filter(|&&x| x == k as f64).count();
            assert_eq!(count, 2 * k + 1);
        }
    }

    #[test]
    fn localizer_shape_and_hermiticity() {
        let p = probe(1.0, 1.0, 10);
        let l = build_localizer(&p, 1.3, c(-0.2, 0.4), 0.7).unwrap();
        assert_eq!((l.nrows(), l.ncols()), (242, 242));
        assert!(hermiticity_residual(l.as_ref()) < 1e-12);
    }

    #[test]
    fn nonpositive_kappa_rejected() {
        let p = probe(1.0, 1.0, 2);
        assert!(p.sample(0.0, c(0.0, 0.0), 0.0).is_err());
        assert!(p.sample(0.0, c(0.0, 0.0), -1.0).is_err());
    }

    #[test]
    fn unitary_generator_is_trivial_on_real_axis() {
        let p = probe(1.0, 0.0, 6);
        for x0 in [0.0, 0.55, 1.5, 3.2, 6.0] {
            for re in [0.0, -0.3, 0.8] {
                let s = p.sample(x0, c(re, 0.0), 1.0).unwrap();
                assert_eq!(s.nu, 0, "x0={x0}");
            }
        }
    }

    #[test]
    fn alternate_construction_flips_sign() {
        let p = probe(1.0, 1.2, 6);
        for (x0, lam) in [(0.5, c(0.0, 0.0)), (1.5, c(-0.1, 0.4)), (2.2, c(-0.3, -0.9))] {
            let a = p.sample(x0, lam, 1.0).unwrap();
            let b = p.alt_sample(x0, lam, 1.0).unwrap();
            assert_eq!(a.nu, -b.nu);
            assert!((a.mu - b.mu).abs() < 1e-10);
        }
    }

    #[test]
    fn real_form_matches_complex_localizer() {
        for (omega, gamma, n) in [(1.0, 1.0, 6), (0.7, 2.0, 5), (1.0, 0.0, 4)] {
            let fast = probe(omega, gamma, n);
            assert!(fast.has_real_form());
            let slow = fast.clone().without_real_form();
            for x0 in [0.3, 1.1, 2.5, 4.0] {
                for re in [0.0, -0.4, 0.2] {
                    let a = fast.sample(x0, c(re, 0.0), 0.8).unwrap();
                    let b = slow.sample(x0, c(re, 0.0), 0.8).unwrap();
                    assert!((a.mu - b.mu).abs() < 1e-10, "{a:?} {b:?}");
                    if a.mu > 1e-6 {
                        assert_eq!(a.nu, b.nu);
                    }
                }
            }
        }
    }

    #[test]
    fn injected_fault_breaks_equivalence() {
        let p = probe(1.0, 1.2, 4).with_alt_sign_fault(true);
        let a = p.sample(0.5, c(0.0, 0.0), 1.0).unwrap();
        let b = p.alt_sample(0.5, c(0.0, 0.0), 1.0).unwrap();
        assert_eq!(a.nu, b.nu);
    }
}
