use btc_topology::dynamics::{coherent_spin_state, evolve, EvolutionMethod, EvolveOptions};
use btc_topology::liouvillian::{steady_state, LiouvillianMatrix, ModelParameters};

fn liouv(omega: f64, gamma: f64, n: u32) -> LiouvillianMatrix {
    LiouvillianMatrix::for_params(&ModelParameters::new(omega, gamma, n).unwrap()).unwrap()
}

/// Population rate equations of the undriven cascade, RK4 with a fine step:
/// `ṗ_m = g[(j+m+1)(j−m) p_{m+1} − (j+m)(j−m+1) p_m]`, `g = Γ/N`.
fn cascade_jz(n: u32, gamma: f64, times: &[f64]) -> Vec<f64> {
    let j = n as f64 / 2.0;
    let d = n as usize + 1;
    let g = gamma / n as f64;
    let m = |i: usize| j - i as f64;
    let rhs = |p: &[f64]| -> Vec<f64> {
        (0..d)
            .map(|i| {
                let inflow = if i > 0 { (j + m(i) + 1.0) * (j - m(i)) * p[i - 1] } else { 0.0 };
                g * (inflow - (j + m(i)) * (j - m(i) + 1.0) * p[i])
            })
            .collect()
    };
    let mut p = vec![0.0; d];
    p[0] = 1.0;
    let h: f64 = 1e-3;
    let mut t: f64 = 0.0;
    let mut out = Vec::new();
    for &target in times {
        while t < target - 1e-12 {
            let step = h.min(target - t);
            let k1 = rhs(&p);
            let y: Vec<f64> = p.iter().zip(&k1).map(|(a, b)| a + 0.5 * step * b).collect();
            let k2 = rhs(&y);
            let y: Vec<f64> = p.iter().zip(&k2).map(|(a, b)| a + 0.5 * step * b).collect();
            let k3 = rhs(&y);
            let y: Vec<f64> = p.iter().zip(&k3).map(|(a, b)| a + step * b).collect();
            let k4 = rhs(&y);
            for i in 0..d {
                p[i] += step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            t += step;
        }
        out.push((0..d).map(|i| m(i) * p[i]).sum());
    }
    out
}

#[test]
fn superradiant_cascade_matches_rate_equations() {
    let (n, gamma) = (4, 1.0);
    let l = liouv(0.0, gamma, n);
    let rho = coherent_spin_state(l.basis().representation(), 0.0, 0.0).unwrap();
    let a0 = l.basis().decompose(rho.as_ref()).unwrap();
    let times: Vec<f64> = (0..=40).map(|i| i as f64 * 0.25).collect();
    let oracle = cascade_jz(n, gamma, &times);
    for method in [EvolutionMethod::Auto, EvolutionMethod::Integrate] {
        let traj = evolve(&l, &a0, &times, &EvolveOptions { method, ..Default::default() }).unwrap();
        // cascade rates pair up, so the generator is defective
        assert_eq!(traj.method, EvolutionMethod::Integrate);
        let jz = traj.observable("jz").unwrap();
        for (i, (a, b)) in jz.iter().zip(&oracle).enumerate() {
            assert!((a - b).abs() < 1e-8, "{method:?} t={}: {a} vs {b}", times[i]);
        }
        assert!(jz.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }
}

#[test]
fn spectral_cascade_is_flagged_ill_conditioned() {
    let l = liouv(0.0, 1.0, 4);
    let rho = coherent_spin_state(l.basis().representation(), 0.0, 0.0).unwrap();
    let a0 = l.basis().decompose(rho.as_ref()).unwrap();
    let times: Vec<f64> = (0..=40).map(|i| i as f64 * 0.25).collect();
    let oracle = cascade_jz(4, 1.0, &times);
    let options = EvolveOptions { method: EvolutionMethod::Spectral, ..Default::default() };
    let traj = evolve(&l, &a0, &times, &options).unwrap();
    assert!(traj.eigenbasis_condition.unwrap() > options.condition_limit);
    let jz = traj.observable("jz").unwrap();
    assert!(jz.iter().zip(&oracle).all(|(a, b)| (a - b).abs() < 1e-6));
}

#[test]
fn long_time_limit_is_the_steady_state() {
    for (gamma, n) in [(1.0, 4), (0.6, 6), (2.5, 5)] {
        let l = liouv(1.0, gamma, n);
        let target = steady_state(&l).unwrap();
        let rho = coherent_spin_state(l.basis().representation(), 0.7, 2.0).unwrap();
        let a0 = l.basis().decompose(rho.as_ref()).unwrap();
        let t_end = 50.0 * n as f64 / gamma;
        let traj = evolve(&l, &a0, &[0.0, t_end], &EvolveOptions::default()).unwrap();
        let last = traj.coefficients.last().unwrap();
        let err = last.iter().zip(&target).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(err < 1e-6, "Γ={gamma} N={n}: {err}");
    }
}
