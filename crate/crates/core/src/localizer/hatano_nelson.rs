//! Hatano–Nelson chain: a translation-invariant fixture whose point-gap
//! winding is known exactly, used to validate the localizer index.

use std::f64::consts::PI;

use faer::{c64, Mat};

use super::probe::PositionSuperoperator;
use crate::error::{Error, Result};
use crate::linalg::{c, CMat};

/// Momentum samples used for the Bloch winding.
pub const BLOCH_SAMPLES: usize = 4096;

/// Open chain with `H[i+1, i] = t_right`, `H[i, i+1] = t_left` and a uniform
/// on-site term, so a plane wave `e^{ipn}` sees
/// `h(p) = onsite + t_right e^{−ip} + t_left e^{ip}`.
pub fn hatano_nelson(n_sites: usize, t_right: f64, t_left: f64, onsite: f64) -> Result<CMat> {
    if n_sites < 8 {
        return Err(Error::InvalidParameter { name: "n_sites", reason: format!("{n_sites} < 8") });
    }
    if !(t_right.is_finite() && t_left.is_finite() && onsite.is_finite()) {
        return Err(Error::InvalidParameter { name: "hopping", reason: "non-finite amplitude".into() });
    }
    Ok(Mat::from_fn(n_sites, n_sites, |i, j| {
        if i == j {
            c(onsite, 0.0)
        } else if i == j + 1 {
            c(t_right, 0.0)
        } else if j == i + 1 {
            c(t_left, 0.0)
        } else {
            c(0.0, 0.0)
        }
    }))
}

/// Site positions `0, 1, …, n − 1`.
pub fn hatano_nelson_positions(n_sites: usize) -> PositionSuperoperator {
    PositionSuperoperator::from_positions((0..n_sites).map(|i| i as f64).collect())
}

fn bloch(t_right: f64, t_left: f64, onsite: f64, lambda0: c64, p: f64) -> c64 {
    c(onsite, 0.0) + c64::cis(-p) * t_right + c64::cis(p) * t_left - lambda0
}

/// Winding number of `p ↦ h(p) − λ₀` around the origin as `p` runs over
/// `[0, 2π)`, counted positive for counter-clockwise loops.
pub fn bloch_winding(t_right: f64, t_left: f64, onsite: f64, lambda0: c64) -> Result<i64> {
    let step = 2.0 * PI / BLOCH_SAMPLES as f64;
    let values: Vec<c64> = (0..BLOCH_SAMPLES).map(|i| bloch(t_right, t_left, onsite, lambda0, i as f64 * step)).collect();

    // refine the closest approach with a golden-section search around the best sample
    let best = (0..BLOCH_SAMPLES).min_by(|&a, &b| values[a].norm().total_cmp(&values[b].norm())).expect("nonempty");
    let (mut lo, mut hi) = ((best as f64 - 1.0) * step, (best as f64 + 1.0) * step);
    let golden = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let a = hi - golden * (hi - lo);
        let b = lo + golden * (hi - lo);
        if bloch(t_right, t_left, onsite, lambda0, a).norm() < bloch(t_right, t_left, onsite, lambda0, b).norm() {
            hi = b;
        } else {
            lo = a;
        }
    }
    let distance = bloch(t_right, t_left, onsite, lambda0, 0.5 * (lo + hi)).norm();
    if distance < 1e-9 {
        return Err(Error::GapClosing { distance });
    }

    let mut total = 0.0;
    for i in 0..BLOCH_SAMPLES {
        let next = values[(i + 1) % BLOCH_SAMPLES];
        total += (next / values[i]).arg();
    }
    let winding = total / (2.0 * PI);
    let rounded = winding.round();
    if (winding - rounded).abs() > 1e-6 {
        return Err(Error::Eigensolver(format!("winding {winding} is not resolved by {BLOCH_SAMPLES} samples")));
    }
    Ok(rounded as i64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_layout() {
        let h = hatano_nelson(8, 1.0, 0.5, 0.2).unwrap();
        assert_eq!(h[(1, 0)], c(1.0, 0.0));
        assert_eq!(h[(0, 1)], c(0.5, 0.0));
        assert_eq!(h[(3, 3)], c(0.2, 0.0));
        assert_eq!(h[(0, 2)], c(0.0, 0.0));
        assert!(hatano_nelson(7, 1.0, 0.5, 0.0).is_err());
    }

    #[test]
    fn reciprocal_chain_has_no_winding() {
        assert_eq!(bloch_winding(0.7, 0.7, 0.0, c(0.1, 0.3)).unwrap(), 0);
        assert_eq!(bloch_winding(0.7, 0.7, 0.0, c(0.0, -0.5)).unwrap(), 0);
    }

    #[test]
    fn right_dominated_chain_winds_clockwise() {
        assert_eq!(bloch_winding(1.0, 0.5, 0.0, c(0.0, 0.0)).unwrap(), -1);
        assert_eq!(bloch_winding(0.5, 1.0, 0.0, c(0.0, 0.0)).unwrap(), 1);
    }

    #[test]
    fn outside_the_ellipse_is_trivial() {
        assert_eq!(bloch_winding(1.0, 0.5, 0.0, c(3.0, 0.0)).unwrap(), 0);
        assert_eq!(bloch_winding(1.0, 0.5, 0.0, c(0.0, 2.0)).unwrap(), 0);
    }

    #[test]
    fn on_the_curve_is_rejected() {
        // h(0) = 1.5 for t_right = 1, t_left = 0.5
        assert!(matches!(bloch_winding(1.0, 0.5, 0.0, c(1.5, 0.0)), Err(Error::GapClosing { .. })));
        // h(π/2) = −i·0.5
        assert!(matches!(bloch_winding(1.0, 0.5, 0.0, c(0.0, -0.5)), Err(Error::GapClosing { .. })));
    }
}
