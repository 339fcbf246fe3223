use btc_topology::localizer::{bloch_winding, hatano_nelson, hatano_nelson_positions, LocalizerOptions, LocalizerProbe};
use faer::c64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SITES: usize = 40;
const KAPPA: f64 = 0.1;

fn mid_chain_index(t_right: f64, t_left: f64, onsite: f64, lambda0: c64) -> (i64, bool) {
    let h = hatano_nelson(SITES, t_right, t_left, onsite).unwrap();
    let probe = LocalizerProbe::new(h.as_ref(), &hatano_nelson_positions(SITES), LocalizerOptions::default()).unwrap();
    let s = probe.sample((SITES as f64 - 1.0) / 2.0, lambda0, KAPPA).unwrap();
    (s.nu, s.well_defined)
}

#[test]
fn index_magnitude_matches_winding() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    while checked < 20 {
        let tr = rng.random_range(0.2..1.5);
        let tl = rng.random_range(0.2..1.5);
        let onsite = rng.random_range(-0.5..0.5);
        let f = rng.random_range(0.0..0.8);
        let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let lambda0 = c64::new(onsite + f * (tr + tl) * angle.cos(), f * (tr - tl) * angle.sin());
        let Ok(w) = bloch_winding(tr, tl, onsite, lambda0) else { continue };
        if w == 0 {
            continue;
        }
        let (nu, well_defined) = mid_chain_index(tr, tl, onsite, lambda0);
        assert!(well_defined);
        assert_eq!(nu.abs(), w.abs(), "t_right={tr} t_left={tl} onsite={onsite} λ0={lambda0}");
        checked += 1;
    }
}

#[test]
fn outside_the_loop_the_index_vanishes() {
    for lambda0 in [c64::new(3.0, 0.0), c64::new(0.0, 2.0), c64::new(-2.5, -1.0)] {
        assert_eq!(bloch_winding(1.0, 0.5, 0.0, lambda0).unwrap(), 0);
        assert_eq!(mid_chain_index(1.0, 0.5, 0.0, lambda0).0, 0);
    }
}

#[test]
fn reversing_the_asymmetry_keeps_the_magnitude() {
    let lambda0 = c64::new(0.1, 0.05);
    let (a, _) = mid_chain_index(1.0, 0.5, 0.0, lambda0);
    let (b, _) = mid_chain_index(0.5, 1.0, 0.0, lambda0);
    assert_eq!(a.abs(), 1);
    assert_eq!(b.abs(), 1);
    assert_eq!(bloch_winding(1.0, 0.5, 0.0, lambda0).unwrap(), -bloch_winding(0.5, 1.0, 0.0, lambda0).unwrap());
}
