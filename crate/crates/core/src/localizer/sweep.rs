//! Parameter sweeps over the probe position, the reference frequency plane
//! and the position weight κ.
//!
//! Every grid point is an independent evaluation, so the sweeps run in
//! parallel on the current rayon pool; results are always returned in grid
//! order.

use std::collections::VecDeque;
use std::time::Instant;

use faer::c64;
use rayon::prelude::*;

use super::probe::{LocalizerProbe, LocalizerSample};
use crate::error::{Error, Result};
use crate::linalg::c;

/// Axis-aligned grid in the complex plane. Points are ordered with the real
/// part varying fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexGrid {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl ComplexGrid {
    pub fn linspace(re_min: f64, re_max: f64, re_count: usize, im_min: f64, im_max: f64, im_count: usize) -> Self {
        Self { re: linspace(re_min, re_max, re_count), im: linspace(im_min, im_max, im_count) }
    }

    pub fn len(&self) -> usize {
        self.re.len() * self.im.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, index: usize) -> c64 {
        let (ix, iy) = self.cell(index);
        c(self.re[ix], self.im[iy])
    }

    /// `(re index, im index)` of a flat index.
    pub fn cell(&self, index: usize) -> (usize, usize) {
        (index % self.re.len(), index / self.re.len())
    }

    pub fn flat(&self, ix: usize, iy: usize) -> usize {
        iy * self.re.len() + ix
    }

    pub fn cell_area(&self) -> f64 {
        spacing(&self.re) * spacing(&self.im)
    }

    /// Grid point nearest to `z`.
    pub fn nearest(&self, z: c64) -> (usize, usize) {
        (nearest_index(&self.re, z.re), nearest_index(&self.im, z.im))
    }

    fn validate(&self) -> Result<()> {
        if self.re.len() < 2 || self.im.len() < 2 {
            return Err(Error::InvalidParameter { name: "lambda grid", reason: "needs at least 2x2 points".into() });
        }
        check_ascending("lambda grid (real axis)", &self.re)?;
        check_ascending("lambda grid (imaginary axis)", &self.im)
    }
}

fn spacing(v: &[f64]) -> f64 {
    if v.len() < 2 {
        0.0
    } else {
        (v[v.len() - 1] - v[0]) / (v.len() - 1) as f64
    }
}

fn nearest_index(v: &[f64], x: f64) -> usize {
    (0..v.len()).min_by(|&a, &b| (v[a] - x).abs().total_cmp(&(v[b] - x).abs())).unwrap_or(0)
}

/// `count` evenly spaced points from `min` to `max` inclusive.
pub fn linspace(min: f64, max: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![min],
        _ => (0..count).map(|i| min + (max - min) * i as f64 / (count - 1) as f64).collect(),
    }
}

fn check_ascending(name: &'static str, v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::InvalidParameter { name, reason: "empty grid".into() });
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter { name, reason: "non-finite grid point".into() });
    }
    if v.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter { name, reason: "grid must be strictly ascending".into() });
    }
    Ok(())
}

/// Positions `0, step, 2·step, …` up to `max_rank`.
pub fn default_position_grid(max_rank: usize, step: f64) -> Vec<f64> {
    let count = (max_rank as f64 / step + 1e-9).floor() as usize + 1;
    (0..count).map(|i| i as f64 * step).collect()
}

/// Bounding box of `eigenvalues`, padded by 10% per side, with
/// `count × count` points.
pub fn default_plane_grid(eigenvalues: &[c64], count: usize) -> ComplexGrid {
    let (mut re_min, mut re_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut im_min, mut im_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for z in eigenvalues {
        re_min = re_min.min(z.re);
        re_max = re_max.max(z.re);
        im_min = im_min.min(z.im);
        im_max = im_max.max(z.im);
    }
    if eigenvalues.is_empty() {
        (re_min, re_max, im_min, im_max) = (-1.0, 1.0, -1.0, 1.0);
    }
    let widest = (re_max - re_min).max(im_max - im_min).max(1e-12);
    let pad = |lo: f64, hi: f64| {
        let w = hi - lo;
        let p = if w > 1e-9 * widest { 0.1 * w } else { 0.1 * widest };
        (lo - p, hi + p)
    };
    let (re_lo, re_hi) = pad(re_min, re_max);
    let (im_lo, im_hi) = pad(im_min, im_max);
    ComplexGrid::linspace(re_lo, re_hi, count, im_lo, im_hi, count)
}

/// The κ values examined by default.
pub fn default_kappa_list() -> Vec<f64> {
    vec![0.01, 0.1, 0.5, 1.0, 2.0, 5.0]
}

#[derive(Clone, Debug, PartialEq)]
pub enum SweepAxis {
    Position { x_grid: Vec<f64>, lambda0: c64 },
    Spectral { grid: ComplexGrid, x0: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Adjacency {
    Four,
    Eight,
}

/// A connected region of nonzero index on a spectral grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Island {
    /// `(re index, im index)` of every member point.
    pub cells: Vec<(usize, usize)>,
    pub nu_min: i64,
    pub nu_max: i64,
}

impl Island {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Whether `z` lies in the closed union of the grid cells (Voronoi
    /// squares) of the island's points.
    pub fn contains(&self, grid: &ComplexGrid, z: c64) -> bool {
        let half_re = 0.5 * spacing(&grid.re) * (1.0 + 1e-9);
        let half_im = 0.5 * spacing(&grid.im) * (1.0 + 1e-9);
        self.cells
            .iter()
            .any(|&(ix, iy)| (grid.re[ix] - z.re).abs() <= half_re && (grid.im[iy] - z.im).abs() <= half_im)
    }
}

/// Connected components of grid points with `nu ≠ 0`.
pub fn extract_islands(grid: &ComplexGrid, nu: &[i64], adjacency: Adjacency) -> Vec<Island> {
    let (nx, ny) = (grid.re.len(), grid.im.len());
    assert_eq!(nu.len(), nx * ny);
    let mut seen = vec![false; nu.len()];
    let mut islands = Vec::new();
    let offsets: &[(i64, i64)] = match adjacency {
        Adjacency::Four => &[(1, 0), (-1, 0), (0, 1), (0, -1)],
        Adjacency::Eight => &[(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)],
    };
    for start in 0..nu.len() {
        if seen[start] || nu[start] == 0 {
            continue;
        }
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        let mut cells = Vec::new();
        let (mut lo, mut hi) = (i64::MAX, i64::MIN);
        while let Some(idx) = queue.pop_front() {
            let (ix, iy) = grid.cell(idx);
            cells.push((ix, iy));
            lo = lo.min(nu[idx]);
            hi = hi.max(nu[idx]);
            for &(dx, dy) in offsets {
                let (jx, jy) = (ix as i64 + dx, iy as i64 + dy);
                if jx < 0 || jy < 0 || jx >= nx as i64 || jy >= ny as i64 {
                    continue;
                }
                let j = grid.flat(jx as usize, jy as usize);
                if !seen[j] && nu[j] != 0 {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        cells.sort_unstable_by_key(|&(x, y)| (y, x));
        islands.push(Island { cells, nu_min: lo, nu_max: hi });
    }
    islands
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub kappa: f64,
    pub samples: Vec<LocalizerSample>,
    /// For position sweeps: indices `i` where `nu[i] ≠ nu[i + 1]`.
    pub boundaries: Vec<usize>,
    /// For spectral sweeps: nonzero-index islands (4-neighbour adjacency).
    pub islands: Vec<Island>,
    pub elapsed_seconds: f64,
}

impl SweepResult {
    pub fn nu(&self) -> Vec<i64> {
        self.samples.iter().map(|s| s.nu).collect()
    }

    pub fn mu(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.mu).collect()
    }

    pub fn nonzero_count(&self) -> usize {
        self.samples.iter().filter(|s| s.nu != 0).count()
    }

    /// Maximal runs `[start, end]` (inclusive) of equal nonzero index.
    pub fn nonzero_domains(&self) -> Vec<(usize, usize)> {
        let nu = self.nu();
        let mut out = Vec::new();
        let mut i = 0;
        while i < nu.len() {
            if nu[i] == 0 {
                i += 1;
                continue;
            }
            let start = i;
            while i + 1 < nu.len() && nu[i + 1] == nu[start] {
                i += 1;
            }
            out.push((start, i));
            i += 1;
        }
        out
    }

    pub fn grid(&self) -> Option<&ComplexGrid> {
        match &self.axis {
            SweepAxis::Spectral { grid, .. } => Some(grid),
            SweepAxis::Position { .. } => None,
        }
    }
}

fn evaluate<F>(count: usize, f: F) -> Result<Vec<LocalizerSample>>
where
    F: Fn(usize) -> Result<LocalizerSample> + Sync + Send,
{
    (0..count).into_par_iter().map(f).collect()
}

/// Index and gap along the rank coordinate at fixed `λ₀`.
pub fn sweep_position(probe: &LocalizerProbe, x_grid: &[f64], lambda0: c64, kappa: f64) -> Result<SweepResult> {
    check_ascending("x grid", x_grid)?;
    let start = Instant::now();
    let samples = evaluate(x_grid.len(), |i| probe.sample(x_grid[i], lambda0, kappa))?;
    let boundaries = samples.windows(2).enumerate().filter(|(_, w)| w[0].nu != w[1].nu).map(|(i, _)| i).collect();
    Ok(SweepResult {
        axis: SweepAxis::Position { x_grid: x_grid.to_vec(), lambda0 },
        kappa,
        samples,
        boundaries,
        islands: Vec::new(),
        elapsed_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Index and gap over a rectangle of reference frequencies at fixed `x₀`.
pub fn sweep_spectral(probe: &LocalizerProbe, x0: f64, grid: &ComplexGrid, kappa: f64) -> Result<SweepResult> {
    grid.validate()?;
    let start = Instant::now();
    let samples = evaluate(grid.len(), |i| probe.sample(x0, grid.point(i), kappa))?;
    let nu: Vec<i64> = samples.iter().map(|s| s.nu).collect();
    let islands = extract_islands(grid, &nu, Adjacency::Four);
    Ok(SweepResult {
        axis: SweepAxis::Spectral { grid: grid.clone(), x0 },
        kappa,
        samples,
        boundaries: Vec::new(),
        islands,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    })
}

/// How the index pattern changes with κ.
#[derive(Clone, Debug, PartialEq)]
pub struct KappaStability {
    pub reference_kappa: f64,
    /// `(κ, identical to the reference pattern, number of nonzero points)`
    pub per_kappa: Vec<(f64, bool, usize)>,
}

#[derive(Clone, Debug)]
pub struct KappaSweep {
    pub sweeps: Vec<SweepResult>,
    pub stability: KappaStability,
}

/// Repeats a sweep for each κ. `axis` supplies the grid and the fixed
/// coordinate; the reference pattern for the stability report is the κ
/// closest to 1.
pub fn sweep_kappa(probe: &LocalizerProbe, axis: &SweepAxis, kappa_list: &[f64]) -> Result<KappaSweep> {
    if kappa_list.is_empty() || kappa_list.iter().any(|k| !(*k > 0.0) || !k.is_finite()) {
        return Err(Error::InvalidParameter { name: "kappa list", reason: "values must be positive".into() });
    }
    let sweeps = kappa_list
        .iter()
        .map(|&kappa| match axis {
            SweepAxis::Position { x_grid, lambda0 } => sweep_position(probe, x_grid, *lambda0, kappa),
            SweepAxis::Spectral { grid, x0 } => sweep_spectral(probe, *x0, grid, kappa),
        })
        .collect::<Result<Vec<_>>>()?;
    let reference = (0..sweeps.len())
        .min_by(|&a, &b| (kappa_list[a].ln()).abs().total_cmp(&(kappa_list[b].ln()).abs()))
        .expect("nonempty");
    let ref_nu = sweeps[reference].nu();
    let per_kappa = sweeps.iter().map(|s| (s.kappa, s.nu() == ref_nu, s.nonzero_count())).collect();
    Ok(KappaSweep { sweeps, stability: KappaStability { reference_kappa: kappa_list[reference], per_kappa } })
}
