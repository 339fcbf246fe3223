use std::f64::consts::PI;

use faer::c64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;

use super::{check_times, evolve_with, EvolutionMethod, EvolveOptions, Trajectory};
use crate::error::{Error, Result};
use crate::linalg::{c, CMat};
use crate::liouvillian::{spectrum, LiouvillianMatrix};

/// Number of sign changes of `series − level`. Samples within `tol` of the
/// level are skipped.
pub fn count_crossings(series: &[f64], level: f64, tol: f64) -> usize {
    let mut last = 0i8;
    let mut count = 0;
    for &x in series {
        let d = x - level;
        if d.abs() <= tol {
            continue;
        }
        let s = if d > 0.0 { 1 } else { -1 };
        if last != 0 && s != last {
            count += 1;
        }
        last = s;
    }
    count
}

/// Peak of the Hann-windowed spectrum of the mean-subtracted signal on a
/// uniform grid with spacing `dt`. Returns `(bin, angular frequency)`; the DC
/// bin is excluded.
pub fn dominant_frequency(signal: &[f64], dt: f64) -> (usize, f64) {
    let n = signal.len();
    if n < 4 {
        return (0, 0.0);
    }
    let mean = signal.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<c64> = signal
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let w = 0.5 - 0.5 * (2.0 * PI * i as f64 / (n - 1) as f64).cos();
            c((x - mean) * w, 0.0)
        })
        .collect();
    FftPlanner::<f64>::new().plan_fft_forward(n).process(&mut buf);
    let bin = (1..=n / 2).max_by(|&a, &b| buf[a].norm().total_cmp(&buf[b].norm())).unwrap_or(1);
    (bin, 2.0 * PI * bin as f64 / (n as f64 * dt))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StateSummary {
    pub index: usize,
    pub dominant_bin: usize,
    pub dominant_frequency: f64,
    pub final_jz: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairComparison {
    pub first: usize,
    pub second: usize,
    /// `max |⟨Jz⟩_a/j − ⟨Jz⟩_b/j|` over the final quarter of the grid.
    pub late_distance: f64,
    pub same_bin: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UniversalityReport {
    /// Angular frequency spacing of the transform.
    pub frequency_resolution: f64,
    pub late_window_start: f64,
    pub method: EvolutionMethod,
    pub states: Vec<StateSummary>,
    pub pairs: Vec<PairComparison>,
}

/// Evolves every initial density matrix and compares normalized `⟨Jz⟩`
/// trajectories pairwise. `t_grid` must be uniform.
pub fn universality_experiment(
    liouv: &LiouvillianMatrix,
    initial_states: &[CMat],
    t_grid: &[f64],
    options: &EvolveOptions,
) -> Result<(UniversalityReport, Vec<Trajectory>)> {
    if initial_states.len() < 2 {
        return Err(Error::InvalidParameter { name: "initial_states", reason: "need at least two".into() });
    }
    check_times(t_grid)?;
    if t_grid.len() < 4 {
        return Err(Error::InvalidParameter { name: "t_grid", reason: "need at least four points".into() });
    }
    let dt = t_grid[1] - t_grid[0];
    if t_grid.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(1.0)) {
        return Err(Error::InvalidParameter { name: "t_grid", reason: "must be uniform".into() });
    }

    let spec = match options.method {
        EvolutionMethod::Integrate => None,
        _ => Some(spectrum(liouv)?),
    };
    let coeffs = initial_states
        .iter()
        .map(|rho| liouv.basis().decompose(rho.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    let trajectories = coeffs
        .par_iter()
        .map(|a0| evolve_with(liouv, spec.as_ref(), a0, t_grid, options))
        .collect::<Result<Vec<_>>>()?;

    let j = liouv.basis().representation().j().value();
    let scale = if j > 0.0 { 1.0 / j } else { 1.0 };
    let jz: Vec<Vec<f64>> = trajectories
        .iter()
        .map(|t| t.observable("jz").expect("always recorded").iter().map(|x| x * scale).collect())
        .collect();

    let late = t_grid.len() * 3 / 4;
    let states: Vec<StateSummary> = jz
        .iter()
        .enumerate()
        .map(|(index, series)| {
            let (bin, freq) = dominant_frequency(series, dt);
            StateSummary { index, dominant_bin: bin, dominant_frequency: freq, final_jz: *series.last().expect("nonempty") / scale }
        })
        .collect();
    let mut pairs = Vec::new();
    for a in 0..jz.len() {
        for b in a + 1..jz.len() {
            let late_distance = jz[a][late..].iter().zip(&jz[b][late..]).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            pairs.push(PairComparison {
                first: a,
                second: b,
                late_distance,
                same_bin: states[a].dominant_bin == states[b].dominant_bin,
            });
        }
    }
    let report = UniversalityReport {
        frequency_resolution: 2.0 * PI / (t_grid.len() as f64 * dt),
        late_window_start: t_grid[late],
        method: trajectories[0].method,
        states,
        pairs,
    };
    Ok((report, trajectories))
}
