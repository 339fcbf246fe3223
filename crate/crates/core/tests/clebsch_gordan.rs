//! Clebsch–Gordan coefficients against states built by lowering from the
//! highest weight in the product space.

use std::collections::HashMap;

use btc_topology::spin::{clebsch_gordan, HalfInt};

/// `(twice J, twice M) -> amplitudes over (i1, i2)` with `m = j − i`.
fn coupled_states(tj1: i64, tj2: i64) -> HashMap<(i64, i64), Vec<f64>> {
    let (d1, d2) = ((tj1 + 1) as usize, (tj2 + 1) as usize);
    let idx = |i1: usize, i2: usize| i1 * d2 + i2;
    let m1 = |i1: usize| (tj1 - 2 * i1 as i64) as f64 / 2.0;
    let m2 = |i2: usize| (tj2 - 2 * i2 as i64) as f64 / 2.0;
    let (j1, j2) = (tj1 as f64 / 2.0, tj2 as f64 / 2.0);
    let lower = |v: &[f64]| {
        let mut out = vec![0.0; v.len()];
        for i1 in 0..d1 {
            for i2 in 0..d2 {
                let a = v[idx(i1, i2)];
                if a == 0.0 {
                    continue;
                }
                if i1 + 1 < d1 {
                    out[idx(i1 + 1, i2)] += a * (j1 * (j1 + 1.0) - m1(i1) * (m1(i1) - 1.0)).sqrt();
                }
                if i2 + 1 < d2 {
                    out[idx(i1, i2 + 1)] += a * (j2 * (j2 + 1.0) - m2(i2) * (m2(i2) - 1.0)).sqrt();
                }
            }
        }
        out
    };

    let mut states: HashMap<(i64, i64), Vec<f64>> = HashMap::new();
    let mut tj = tj1 + tj2;
    while tj >= (tj1 - tj2).abs() {
        // seed |m1 = j1, m2 = J − j1⟩, then remove the higher-J components
        let i2 = ((tj2 - (tj - tj1)) / 2) as usize;
        let mut v = vec![0.0; d1 * d2];
        v[idx(0, i2)] = 1.0;
        let mut higher = tj1 + tj2;
        while higher > tj {
            let u = &states[&(higher, tj)];
            let overlap: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
            for (x, y) in v.iter_mut().zip(u) {
                *x -= overlap * y;
            }
            higher -= 2;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let sign = v[idx(0, i2)].signum();
        v.iter_mut().for_each(|x| *x *= sign / norm);

        let big_j = tj as f64 / 2.0;
        let mut tm = tj;
        loop {
            states.insert((tj, tm), v.clone());
            if tm == -tj {
                break;
            }
            let m = tm as f64 / 2.0;
            let scale = (big_j * (big_j + 1.0) - m * (m - 1.0)).sqrt();
            v = lower(&v).into_iter().map(|x| x / scale).collect();
            tm -= 2;
        }
        tj -= 2;
    }
    states
}

#[test]
fn matches_lowering_construction() {
    let mut compared = 0;
    for tj1 in 0..=4 {
        for tj2 in 0..=4 {
            let states = coupled_states(tj1, tj2);
            let d2 = (tj2 + 1) as usize;
            for (&(tj, tm), v) in &states {
                for i1 in 0..=tj1 as usize {
                    for i2 in 0..=tj2 as usize {
                        let cg = clebsch_gordan(
                            HalfInt::from_twice(tj1),
                            HalfInt::from_twice(tj1 - 2 * i1 as i64),
                            HalfInt::from_twice(tj2),
                            HalfInt::from_twice(tj2 - 2 * i2 as i64),
                            HalfInt::from_twice(tj),
                            HalfInt::from_twice(tm),
                        )
                        .unwrap();
                        let expected = v[i1 * d2 + i2];
                        assert!((cg - expected).abs() < 1e-12, "j1={tj1}/2 j2={tj2}/2 J={tj}/2 M={tm}/2: {cg} vs {expected}");
                        compared += 1;
                    }
                }
            }
        }
    }
    assert!(compared > 1000);
}

#[test]
fn singlet_of_two_halves() {
    let h = HalfInt::from_twice;
    let up_down = clebsch_gordan(h(1), h(1), h(1), h(-1), h(0), h(0)).unwrap();
    let down_up = clebsch_gordan(h(1), h(-1), h(1), h(1), h(0), h(0)).unwrap();
    assert!((up_down - 0.5f64.sqrt()).abs() < 1e-15);
    assert!((down_up + 0.5f64.sqrt()).abs() < 1e-15);
    let scalar = clebsch_gordan(h(2), h(2), h(2), h(-2), h(0), h(0)).unwrap();
    assert!((scalar - 1.0 / 3f64.sqrt()).abs() < 1e-15);
}
