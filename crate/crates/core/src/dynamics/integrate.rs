//! Adaptive Dormand–Prince 5(4) stepping for linear coefficient flows
//! `ȧ = M a`, with the generator stored row-sparse.

use faer::{c64, MatRef};

use crate::error::{Error, Result};
use crate::linalg::c;

const MAX_STEPS: usize = 10_000_000;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth minus fourth order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Row-sparse copy of a square generator.
#[derive(Clone, Debug)]
pub struct SparseGenerator {
    rows: Vec<Vec<(usize, c64)>>,
}

impl SparseGenerator {
    pub fn from_dense(m: MatRef<'_, c64>) -> Self {
        let rows = (0..m.nrows())
            .map(|i| (0..m.ncols()).filter(|&j| m[(i, j)] != c(0.0, 0.0)).map(|j| (j, m[(i, j)])).collect())
            .collect();
        Self { rows }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn apply(&self, x: &[c64], out: &mut [c64]) {
        for (o, row) in out.iter_mut().zip(&self.rows) {
            *o = row.iter().fold(c(0.0, 0.0), |acc, &(j, v)| acc + v * x[j]);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

/// Integration statistics.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
}

fn combine(y: &[c64], h: f64, terms: &[(f64, &[c64])], out: &mut [c64]) {
    for i in 0..y.len() {
        let mut acc = c(0.0, 0.0);
        for &(w, k) in terms {
            acc += k[i] * w;
        }
        out[i] = y[i] + acc * h;
    }
}

/// Integrates from `times[0]` and records the state at every requested time.
pub fn integrate(gen: &SparseGenerator, a0: &[c64], times: &[f64], tol: Tolerances) -> Result<(Vec<Vec<c64>>, StepStats)> {
    let n = gen.dim();
    if a0.len() != n {
        return Err(Error::DimensionMismatch { expected: format!("{n} coefficients"), got: format!("{}", a0.len()) });
    }
    let Some(&t_start) = times.first() else { return Ok((Vec::new(), StepStats::default())) };

    let mut y = a0.to_vec();
    let mut t = t_start;
    let mut out = Vec::with_capacity(times.len());
    out.push(y.clone());
    let mut stats = StepStats::default();

    let zero = vec![c(0.0, 0.0); n];
    let (mut k1, mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) =
        (zero.clone(), zero.clone(), zero.clone(), zero.clone(), zero.clone(), zero.clone(), zero.clone());
    let mut stage = zero.clone();
    let mut y_new = zero;
    gen.apply(&y, &mut k1);

    let norm = |v: &[c64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let mut h = {
        let (dy, yy) = (norm(&k1), norm(&y));
        let span = times.last().copied().unwrap_or(t_start) - t_start;
        let guess = if dy > 0.0 { 0.01 * yy.max(tol.atol) / dy } else { span };
        guess.min(span.max(f64::MIN_POSITIVE)).max(1e-12)
    };

    for &target in &times[1..] {
        while t < target {
            if stats.accepted + stats.rejected >= MAX_STEPS {
                return Err(Error::Integration(format!("step limit reached at t = {t}")));
            }
            let last = t + h >= target;
            let step = if last { target - t } else { h };

            combine(&y, step, &[(A21, &k1)], &mut stage);
            gen.apply(&stage, &mut k2);
            combine(&y, step, &[(A31, &k1), (A32, &k2)], &mut stage);
            gen.apply(&stage, &mut k3);
            combine(&y, step, &[(A41, &k1), (A42, &k2), (A43, &k3)], &mut stage);
            gen.apply(&stage, &mut k4);
            combine(&y, step, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], &mut stage);
            gen.apply(&stage, &mut k5);
            combine(&y, step, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], &mut stage);
            gen.apply(&stage, &mut k6);
            combine(&y, step, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)], &mut y_new);
            gen.apply(&y_new, &mut k7);

            let mut err = 0.0;
            for i in 0..n {
                let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * step;
                let scale = tol.atol + tol.rtol * y[i].norm().max(y_new[i].norm());
                err += (e.norm() / scale).powi(2);
            }
            let err = (err / n as f64).sqrt();

            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 {
                t = if last { target } else { t + step };
                std::mem::swap(&mut y, &mut y_new);
                std::mem::swap(&mut k1, &mut k7);
                stats.accepted += 1;
                if !last {
                    h = step * factor;
                }
            } else {
                stats.rejected += 1;
                h = step * factor.min(1.0);
                if !(h > 1e-14 * t.abs().max(1.0)) {
                    return Err(Error::Integration(format!("step size underflow at t = {t}")));
                }
            }
        }
        out.push(y.clone());
    }
    Ok((out, stats))
}
