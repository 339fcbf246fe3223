use btc_topology::dynamics::{coherent_spin_state, evolve, rank_weights, EvolutionMethod, EvolveOptions};
use btc_topology::linalg::{frobenius, hermiticity_residual, max_abs, CMat};
use btc_topology::liouvillian::{spectrum, LiouvillianMatrix, ModelParameters};
use btc_topology::localizer::{LocalizerOptions, LocalizerProbe, PositionSuperoperator};
use btc_topology::tensor::tensor_label;
use faer::{c64, Mat};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn liouv(omega: f64, gamma: f64, n: u32) -> LiouvillianMatrix {
    LiouvillianMatrix::for_params(&ModelParameters::new(omega, gamma, n).unwrap()).unwrap()
}

/// `(C a)_{k,q} = (−1)^q conj(a_{k,−q})`; Hermitian operators are its fixed points.
fn conjugate(a: &[c64]) -> Vec<c64> {
    (0..a.len())
        .map(|i| {
            let (k, q) = tensor_label(i);
            let partner = k * k + k;
            let z = a[(partner as i64 - q) as usize].conj();
            if q % 2 == 0 {
                z
            } else {
                -z
            }
        })
        .collect()
}

fn random_vec(seed: u64, n: usize) -> Vec<c64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| c64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
}

fn params() -> impl Strategy<Value = (f64, f64, u32)> {
    (0.0..3.0f64, 0.0..3.0f64, 1u32..=8)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn trace_row_vanishes((omega, gamma, n) in params()) {
        let l = liouv(omega, gamma, n);
        let m = l.matrix();
        let row = (0..m.ncols()).map(|j| m[(0, j)].norm()).fold(0.0, f64::max);
        prop_assert!(row <= 1e-12 * l.max_entry().max(1.0));
    }

    #[test]
    fn hermiticity_is_preserved((omega, gamma, n) in params(), seed in any::<u64>()) {
        let l = liouv(omega, gamma, n);
        let a = random_vec(seed, l.dim());
        let lhs = l.apply(&conjugate(&a));
        let rhs = conjugate(&l.apply(&a));
        let err = lhs.iter().zip(&rhs).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-12 * l.max_entry().max(1.0));
    }

    #[test]
    fn mode_weights_are_distributions((omega, gamma, n) in (0.1..2.0f64, 0.0..2.0f64, 1u32..=6)) {
        let l = liouv(omega, gamma, n);
        let table = rank_weights(&spectrum(&l).unwrap(), l.basis());
        for m in &table.modes {
            prop_assert!((m.weights.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            prop_assert!(m.participation_ratio >= 1.0 - 1e-10);
            prop_assert!(m.participation_ratio <= m.weights.len() as f64 + 1e-10);
        }
    }
}

fn probe(gamma: f64, n: u32) -> (LiouvillianMatrix, LocalizerProbe) {
    let l = liouv(1.0, gamma, n);
    let p = LocalizerProbe::for_liouvillian(&l, LocalizerOptions::default()).unwrap();
    (l, p)
}

fn point() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    // x0, Re λ0, Im λ0, κ
    (0.0..6.0f64, -2.0..0.5f64, -4.0..4.0f64, 0.1..3.0f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn localizer_is_hermitian_with_even_signature(gamma in 0.0..2.0f64, n in 2u32..=6, (x0, re, im, kappa) in point()) {
        let (_, p) = probe(gamma, n);
        let lambda0 = c64::new(re, im);
        let h = p.localizer(x0, lambda0, kappa);
        prop_assert!(hermiticity_residual(h.as_ref()) <= 1e-14 * max_abs(h.as_ref()));
        let s = p.sample(x0, lambda0, kappa).unwrap();
        prop_assert!(s.nu.unsigned_abs() as usize <= p.dim());
        prop_assert!(s.mu >= 0.0);
    }

    #[test]
    fn gap_is_lipschitz(gamma in 0.0..2.0f64, n in 2u32..=6, (x0, re, im, kappa) in point(), dx in -0.5..0.5f64, dre in -0.3..0.3f64, dim in -0.3..0.3f64) {
        let (_, p) = probe(gamma, n);
        let base = p.sample(x0, c64::new(re, im), kappa).unwrap().mu;
        let shifted_x = p.sample(x0 + dx, c64::new(re, im), kappa).unwrap().mu;
        prop_assert!((shifted_x - base).abs() <= kappa * dx.abs() + 1e-10);
        let shifted_l = p.sample(x0, c64::new(re + dre, im + dim), kappa).unwrap().mu;
        prop_assert!((shifted_l - base).abs() <= (dre * dre + dim * dim).sqrt() + 1e-10);
    }

    #[test]
    fn constructions_differ_only_in_sign(gamma in 0.0..2.0f64, n in 2u32..=6, (x0, re, im, kappa) in point(), real_axis in any::<bool>()) {
        let (_, p) = probe(gamma, n);
        let lambda0 = c64::new(re, if real_axis { 0.0 } else { im });
        let a = p.sample(x0, lambda0, kappa).unwrap();
        let b = p.alt_sample(x0, lambda0, kappa).unwrap();
        prop_assert_eq!(b.nu, -a.nu);
        prop_assert_eq!(a.well_defined, b.well_defined);
        prop_assert!((a.mu - b.mu).abs() < 1e-10);
    }

    #[test]
    fn index_survives_small_perturbations(gamma in 0.2..2.0f64, n in 2u32..=5, (x0, re, im, kappa) in point(), seed in any::<u64>()) {
        let (l, p) = probe(gamma, n);
        let lambda0 = c64::new(re, im);
        let s = p.sample(x0, lambda0, kappa).unwrap();
        prop_assume!(s.well_defined && s.mu > 1e-6);
        // ‖ΔL‖ ≤ ‖Re E‖ + ‖Im E‖ ≤ 2‖E‖_F < μ
        let dim = l.dim();
        let raw = random_vec(seed, dim * dim);
        let e: CMat = Mat::from_fn(dim, dim, |i, j| raw[i * dim + j]);
        let e = &e * faer::Scale(c64::new(0.45 * s.mu / frobenius(e.as_ref()), 0.0));
        let perturbed = l.matrix() + &e;
        let q = LocalizerProbe::new(perturbed.as_ref(), &PositionSuperoperator::rank_position(l.basis()), LocalizerOptions::default()).unwrap();
        let t = q.sample(x0, lambda0, kappa).unwrap();
        prop_assert_eq!(t.nu, s.nu);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn evolution_preserves_trace_and_hermiticity(gamma in 0.0..2.0f64, n in 1u32..=6, theta in 0.0..std::f64::consts::PI, phi in 0.0..std::f64::consts::TAU, integrate in any::<bool>()) {
        let l = liouv(1.0, gamma, n);
        let rho = coherent_spin_state(l.basis().representation(), theta, phi).unwrap();
        let a0 = l.basis().decompose(rho.as_ref()).unwrap();
        let times: Vec<f64> = (0..=20).map(|i| i as f64 * 0.25).collect();
        let method = if integrate { EvolutionMethod::Integrate } else { EvolutionMethod::Spectral };
        let traj = evolve(&l, &a0, &times, &EvolveOptions { method, ..Default::default() }).unwrap();
        for a in &traj.coefficients {
            prop_assert!((a[0] - a0[0]).norm() < 1e-10);
            let c = conjugate(a);
            let err = a.iter().zip(&c).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            prop_assert!(err < 1e-8);
        }
        let last = l.basis().reconstruct(traj.coefficients.last().unwrap()).unwrap();
        let sym = (&last + last.adjoint()) * faer::Scale(c64::new(0.5, 0.0));
        let min = btc_topology::linalg::hermitian_eigenvalues(sym.as_ref()).unwrap().into_iter().fold(f64::INFINITY, f64::min);
        prop_assert!(min >= -1e-7);
    }
}
