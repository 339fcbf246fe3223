//! Self-consistency battery behind `btc-topo validate`.

use std::path::Path;

use btc_topology::linalg::{commutator, hermiticity_residual, max_abs, max_abs_diff, trace, CMat};
use btc_topology::liouvillian::{
    extract_hoppings, spectrum, steady_state_from, density_diagnostics, LiouvillianMatrix, ModelParameters,
};
use btc_topology::localizer::{bloch_winding, hatano_nelson, hatano_nelson_positions, LocalizerOptions, LocalizerProbe};
use btc_topology::dynamics::{coherent_spin_state, evolve, EvolutionMethod, EvolveOptions};
use btc_topology::spin::{build_spin_operators, SpinRepresentation};
use btc_topology::tensor::build_tensor_basis;
use faer::{c64, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::sync::Arc;

use crate::commands::Phases;
use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::write_sidecar;

const ANCHOR_SITES: usize = 40;
const ANCHOR_KAPPA: f64 = 0.1;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub tolerance: f64,
    pub measured: f64,
    pub samples: usize,
    pub failures: usize,
    pub passed: bool,
}

impl Check {
    fn bound(name: &'static str, tolerance: f64, measured: f64, samples: usize) -> Self {
        let passed = measured <= tolerance;
        Check { name, tolerance, measured, samples, failures: usize::from(!passed), passed }
    }

    fn count(name: &'static str, tolerance: f64, measured: f64, samples: usize, failures: usize) -> Self {
        Check { name, tolerance, measured, samples, failures, passed: failures == 0 && measured <= tolerance }
    }
}

#[derive(Serialize)]
struct Report<'a> {
    passed: bool,
    failed: Vec<&'static str>,
    checks: &'a [Check],
}

/// Faults that can be injected to see checks fail.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Faults {
    pub alt_sign: bool,
}

impl Faults {
    pub fn parse(name: Option<&str>) -> Result<Self, CliError> {
        match name {
            None => Ok(Self::default()),
            Some("alt-sign") => Ok(Self { alt_sign: true }),
            Some(other) => Err(CliError::Config(format!("unknown fault `{other}`"))),
        }
    }
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    Mat::from_fn(n, n, |_, _| c64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

fn liouv(omega: f64, gamma: f64, n: u32) -> Result<LiouvillianMatrix, CliError> {
    Ok(LiouvillianMatrix::for_params(&ModelParameters::new(omega, gamma, n)?)?)
}

fn tensor_checks(max_two_j: u32, rng: &mut ChaCha8Rng) -> Result<Vec<Check>, CliError> {
    let (mut gram, mut conj, mut ladder, mut roundtrip) = (0f64, 0f64, 0f64, 0f64);
    for two_j in 1..=max_two_j {
        let rep = SpinRepresentation::from_spins(two_j);
        let basis = build_tensor_basis(&rep)?;
        gram = gram.max(basis.gram_residual());
        conj = conj.max(basis.conjugation_residual());

        let ops = build_spin_operators(&rep);
        let zp = commutator(ops.jz.as_ref(), ops.jplus.as_ref());
        let zm = commutator(ops.jz.as_ref(), ops.jminus.as_ref());
        let pm = commutator(ops.jplus.as_ref(), ops.jminus.as_ref());
        let minus_jm = &ops.jminus * faer::Scale(c64::new(-1.0, 0.0));
        let two_jz = &ops.jz * faer::Scale(c64::new(2.0, 0.0));
        ladder = ladder
            .max(max_abs_diff(zp.as_ref(), ops.jplus.as_ref()))
            .max(max_abs_diff(zm.as_ref(), minus_jm.as_ref()))
            .max(max_abs_diff(pm.as_ref(), two_jz.as_ref()));

        let rho = random_matrix(rng, rep.dim());
        let back = basis.reconstruct(&basis.decompose(rho.as_ref())?)?;
        roundtrip = roundtrip.max(max_abs_diff(rho.as_ref(), back.as_ref()));
    }
    let n = max_two_j as usize;
    Ok(vec![
        Check::bound("tensor_orthonormality", 1e-10, gram, n),
        Check::bound("tensor_conjugation", 1e-10, conj, n),
        Check::bound("ladder_commutators", 1e-10, ladder, n),
        Check::bound("decompose_roundtrip", 1e-10, roundtrip, n),
    ])
}

fn generator_checks(sizes: &[u32], pairs: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Check>, CliError> {
    let (mut trace_row, mut stencil, mut affine) = (0f64, 0f64, 0f64);
    for &n in sizes {
        let coherent = liouv(1.0, 0.0, n)?;
        let dissipative = liouv(0.0, 1.0, n)?;
        for _ in 0..pairs {
            let omega = rng.random_range(0.0..2.0);
            let gamma = rng.random_range(0.0..2.0);
            let l = liouv(omega, gamma, n)?;
            let m = l.matrix();
            trace_row = trace_row.max((0..m.ncols()).map(|j| m[(0, j)].norm()).fold(0.0, f64::max));
            stencil = stencil.max(extract_hoppings(&l).relative_residual());
            let model = coherent.matrix() * faer::Scale(c64::new(omega, 0.0))
                + dissipative.matrix() * faer::Scale(c64::new(gamma, 0.0));
            affine = affine.max(max_abs_diff(m, model.as_ref()) / max_abs(m).max(f64::MIN_POSITIVE));
        }
    }
    let samples = sizes.len() * pairs;
    Ok(vec![
        Check::bound("trace_preservation", 1e-12, trace_row, samples),
        Check::bound("hopping_sparsity", 1e-12, stencil, samples),
        Check::bound("affine_decomposition", 1e-12, affine, samples),
    ])
}

fn superoperator_equivalence(n: u32) -> Result<Check, CliError> {
    let params = ModelParameters::new(1.0, 0.8, n)?;
    let basis = Arc::new(build_tensor_basis(&params.representation())?);
    let a = LiouvillianMatrix::build(&params, Arc::clone(&basis))?;
    let b = LiouvillianMatrix::build_vectorized(&params, basis)?;
    let rel = max_abs_diff(a.matrix(), b.matrix()) / a.max_entry();
    Ok(Check::bound("superoperator_equivalence", 1e-10, rel, 1))
}

struct LocalizerPoint {
    x0: f64,
    lambda0: c64,
    kappa: f64,
}

fn localizer_points(l: &LiouvillianMatrix, samples: usize, rng: &mut ChaCha8Rng) -> Result<Vec<LocalizerPoint>, CliError> {
    let spec = spectrum(l)?;
    let re_min = spec.eigenvalues.iter().map(|z| z.re).fold(0.0, f64::min);
    let im_max = spec.eigenvalues.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let x_max = l.basis().max_rank() as f64;
    Ok((0..samples)
        .map(|i| {
            let re = rng.random_range(re_min - 0.2..0.2);
            let im = rng.random_range(-im_max - 0.2..im_max + 0.2);
            LocalizerPoint {
                x0: rng.random_range(0.0..x_max),
                // every fourth point on the real axis exercises the real form
                lambda0: c64::new(re, if i % 4 == 0 { 0.0 } else { im }),
                kappa: rng.random_range(0.1..3.0),
            }
        })
        .collect())
}

fn localizer_checks(n: u32, samples: usize, faults: Faults, rng: &mut ChaCha8Rng) -> Result<Vec<Check>, CliError> {
    let l = liouv(1.0, 1.0, n)?;
    let probe = LocalizerProbe::for_liouvillian(&l, LocalizerOptions::default())?.with_alt_sign_fault(faults.alt_sign);
    let complex_only = probe.clone().without_real_form();
    let points = localizer_points(&l, samples, rng)?;

    let mut herm = 0f64;
    let (mut flip_failures, mut mu_diff) = (0, 0f64);
    let (mut real_failures, mut real_diff, mut real_samples) = (0, 0f64, 0);
    for p in &points {
        let h = probe.localizer(p.x0, p.lambda0, p.kappa);
        herm = herm.max(hermiticity_residual(h.as_ref()) / max_abs(h.as_ref()));
        let main = probe.sample(p.x0, p.lambda0, p.kappa)?;
        let alt = probe.alt_sample(p.x0, p.lambda0, p.kappa)?;
        if alt.nu != -main.nu || alt.well_defined != main.well_defined {
            flip_failures += 1;
        }
        mu_diff = mu_diff.max((alt.mu - main.mu).abs());
        if p.lambda0.im == 0.0 {
            real_samples += 1;
            let reference = complex_only.sample(p.x0, p.lambda0, p.kappa)?;
            if reference.nu != main.nu {
                real_failures += 1;
            }
            real_diff = real_diff.max((reference.mu - main.mu).abs());
        }
    }

    // chains with nonzero winding, so a sign error cannot hide behind ν = 0
    let anchors = samples.div_ceil(10);
    let positions = hatano_nelson_positions(ANCHOR_SITES);
    for _ in 0..anchors {
        let (tr, tl, onsite, lambda0, _) = winding_chain(rng)?;
        let h = hatano_nelson(ANCHOR_SITES, tr, tl, onsite)?;
        let chain = LocalizerProbe::new(h.as_ref(), &positions, LocalizerOptions::default())?
            .with_alt_sign_fault(faults.alt_sign);
        let x0 = (ANCHOR_SITES as f64 - 1.0) / 2.0;
        let main = chain.sample(x0, lambda0, ANCHOR_KAPPA)?;
        let alt = chain.alt_sample(x0, lambda0, ANCHOR_KAPPA)?;
        if alt.nu != -main.nu || alt.well_defined != main.well_defined {
            flip_failures += 1;
        }
        mu_diff = mu_diff.max((alt.mu - main.mu).abs());
    }
    Ok(vec![
        Check::bound("localizer_hermiticity", 1e-12, herm, samples),
        Check::count("localizer_equivalence", 1e-10, mu_diff, samples + anchors, flip_failures),
        Check::count("real_form_consistency", 1e-10, real_diff, real_samples, real_failures),
    ])
}

/// Random chain with `λ₀` strictly inside the point-gap ellipse.
fn hatano_nelson_instance(rng: &mut ChaCha8Rng) -> (f64, f64, f64, c64) {
    let t_right = rng.random_range(0.2..1.5);
    let t_left = rng.random_range(0.2..1.5);
    let onsite = rng.random_range(-0.5..0.5);
    let f = rng.random_range(0.0..0.8);
    let angle = rng.random_range(0.0..std::f64::consts::TAU);
    let lambda0 = c64::new(onsite + f * (t_right + t_left) * angle.cos(), f * (t_right - t_left) * angle.sin());
    (t_right, t_left, onsite, lambda0)
}

/// Draws chains until one has nonzero winding at its `λ₀`.
fn winding_chain(rng: &mut ChaCha8Rng) -> Result<(f64, f64, f64, c64, i64), CliError> {
    for _ in 0..100 {
        let (tr, tl, onsite, lambda0) = hatano_nelson_instance(rng);
        // λ₀ too close to the Bloch curve, or a degenerate ellipse
        let Ok(winding) = bloch_winding(tr, tl, onsite, lambda0) else { continue };
        if winding != 0 {
            return Ok((tr, tl, onsite, lambda0, winding));
        }
    }
    Err(CliError::Config("could not draw gapped chain instances".into()))
}

fn hatano_nelson_check(instances: usize, sites: usize, kappa: f64, rng: &mut ChaCha8Rng) -> Result<Check, CliError> {
    let x0 = (sites as f64 - 1.0) / 2.0;
    let positions = hatano_nelson_positions(sites);
    let mut failures = 0;
    for _ in 0..instances {
        let (tr, tl, onsite, lambda0, winding) = winding_chain(rng)?;
        let h = hatano_nelson(sites, tr, tl, onsite)?;
        let probe = LocalizerProbe::new(h.as_ref(), &positions, LocalizerOptions::default())?;
        let s = probe.sample(x0, lambda0, kappa)?;
        if !s.well_defined || s.nu.abs() != winding.abs() {
            failures += 1;
        }
    }
    Ok(Check::count("hatano_nelson_oracle", 0.0, failures as f64, instances, failures))
}

fn steady_state_check(n: u32) -> Result<Check, CliError> {
    let l = liouv(1.0, 1.0, n)?;
    let spec = spectrum(&l)?;
    let a = steady_state_from(&l, &spec)?;
    let rho = l.basis().reconstruct(&a)?;
    let (herm, min_eig) = density_diagnostics(&l, &a)?;
    let measured = (trace(rho.as_ref()) - c64::new(1.0, 0.0)).norm().max(herm).max((-min_eig).max(0.0));
    Ok(Check::bound("steady_state", 1e-9, measured, 1))
}

fn evolution_check(n: u32) -> Result<Check, CliError> {
    let l = liouv(1.0, 0.7, n)?;
    let rho = coherent_spin_state(l.basis().representation(), 0.4, 1.1)?;
    let a0 = l.basis().decompose(rho.as_ref())?;
    let times: Vec<f64> = (0..=50).map(|i| i as f64 * 0.1).collect();
    let spectral = evolve(&l, &a0, &times, &EvolveOptions { method: EvolutionMethod::Spectral, ..Default::default() })?;
    let direct = evolve(&l, &a0, &times, &EvolveOptions { method: EvolutionMethod::Integrate, ..Default::default() })?;
    let mut worst = 0f64;
    for (a, b) in spectral.coefficients.iter().zip(&direct.coefficients) {
        let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
        let norm: f64 = b.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        worst = worst.max(diff / norm);
    }
    Ok(Check::bound("evolution_agreement", 1e-6, worst, times.len()))
}

/// Runs every check and writes `validate.json`. Fails with the names of the
/// failed checks.
pub fn run(cfg: &RunConfig, faults: Faults, out: &Path, phases: &mut Phases) -> Result<(), CliError> {
    let v = &cfg.validate;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut checks = Vec::new();
    checks.extend(phases.time("tensor", || tensor_checks(v.max_two_j, &mut rng))?);
    checks.extend(phases.time("generator", || generator_checks(&v.generator_sizes, v.generator_pairs, &mut rng))?);
    checks.push(phases.time("superoperator", || superoperator_equivalence(v.n_spins))?);
    checks.extend(phases.time("localizer", || localizer_checks(v.n_spins, v.samples, faults, &mut rng))?);
    checks.push(phases.time("hatano_nelson", || hatano_nelson_check(v.hn_instances, v.hn_sites, v.hn_kappa, &mut rng))?);
    checks.push(phases.time("steady_state", || steady_state_check(v.n_spins))?);
    checks.push(phases.time("evolution", || evolution_check(v.n_spins))?);

    let failed: Vec<&'static str> = checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    let report = Report { passed: failed.is_empty(), failed: failed.clone(), checks: &checks };
    write_sidecar(out, "validate", cfg, &[], &report)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(failed.into_iter().map(String::from).collect()))
    }
}
