//! Collective angular-momentum algebra.
//!
//! Matrices act on the `|j, m⟩` basis ordered with `m` descending, so row `i`
//! carries `m = j - i`.

use std::fmt;
use std::sync::OnceLock;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, CMat};

/// A half-integer quantum number, stored as twice its value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct HalfInt(i64);

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt(0);

    pub const fn from_twice(twice: i64) -> Self {
        HalfInt(twice)
    }

    pub const fn from_int(n: i64) -> Self {
        HalfInt(2 * n)
    }

    /// Accepts any float that is an exact multiple of one half.
    pub fn from_f64(value: f64) -> Result<Self> {
        let twice = 2.0 * value;
        if !twice.is_finite() || (twice - twice.round()).abs() > 1e-12 {
            return Err(Error::NotHalfInteger { value });
        }
        Ok(HalfInt(twice.round() as i64))
    }

    pub const fn twice(self) -> i64 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub const fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }

    pub const fn abs(self) -> Self {
        HalfInt(self.0.abs())
    }
}

impl std::ops::Add for HalfInt {
    type Output = HalfInt;
    fn add(self, rhs: Self) -> Self {
        HalfInt(self.0 + rhs.0)
    }
}

impl std::ops::Sub for HalfInt {
    type Output = HalfInt;
    fn sub(self, rhs: Self) -> Self {
        HalfInt(self.0 - rhs.0)
    }
}

impl std::ops::Neg for HalfInt {
    type Output = HalfInt;
    fn neg(self) -> Self {
        HalfInt(-self.0)
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

/// The maximal-spin sector `j = N/2` of `N` spin-1/2 constituents.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpinRepresentation {
    j: HalfInt,
}

impl SpinRepresentation {
    pub fn new(j: HalfInt) -> Result<Self> {
        if j.twice() < 0 {
            return Err(Error::InvalidQuantumNumbers(format!("spin j = {j} is negative")));
        }
        Ok(Self { j })
    }

    pub fn from_j(j: f64) -> Result<Self> {
        Self::new(HalfInt::from_f64(j)?)
    }

    pub fn from_spins(n_spins: u32) -> Self {
        Self { j: HalfInt::from_twice(n_spins as i64) }
    }

    pub fn j(&self) -> HalfInt {
        self.j
    }

    /// Hilbert-space dimension `2j + 1`.
    pub fn dim(&self) -> usize {
        self.j.twice() as usize + 1
    }

    pub fn n_spins(&self) -> u32 {
        self.j.twice() as u32
    }

    /// Largest tensor rank, `2j`.
    pub fn max_rank(&self) -> usize {
        self.j.twice() as usize
    }

    /// `m` value of basis row `i`.
    pub fn m_of(&self, i: usize) -> HalfInt {
        self.j - HalfInt::from_int(i as i64)
    }

    /// Basis row carrying magnetic number `m`.
    pub fn index_of(&self, m: HalfInt) -> Option<usize> {
        let d = self.j - m;
        if !d.is_integer() || d.twice() < 0 || d.twice() > 2 * self.j.twice() {
            return None;
        }
        Some((d.twice() / 2) as usize)
    }
}

/// Dense spin matrices in the descending-`m` basis.
#[derive(Clone, Debug)]
pub struct SpinOperators {
    pub jx: CMat,
    pub jy: CMat,
    pub jz: CMat,
    pub jplus: CMat,
    pub jminus: CMat,
}

impl SpinOperators {
    pub fn new(rep: &SpinRepresentation) -> Self {
        let dim = rep.dim();
        let j = rep.j().value();
        let jz = Mat::from_fn(dim, dim, |r, col| {
            if r == col {
                c(rep.m_of(r).value(), 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        // J+|m⟩ = √(j(j+1) − m(m+1)) |m+1⟩; |m+1⟩ sits one row above |m⟩.
        let jplus = Mat::from_fn(dim, dim, |r, col| {
            if col == r + 1 {
                let m = rep.m_of(col).value();
                c((j * (j + 1.0) - m * (m + 1.0)).sqrt(), 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        let jminus = jplus.adjoint().to_owned();
        let jx = (&jplus + &jminus) * faer::Scale(c(0.5, 0.0));
        let jy = (&jplus - &jminus) * faer::Scale(c(0.0, -0.5));
        Self { jx, jy, jz, jplus, jminus }
    }
}

/// Builds `Jx, Jy, Jz, J±` for the given representation.
pub fn build_spin_operators(rep: &SpinRepresentation) -> SpinOperators {
    SpinOperators::new(rep)
}

const LN_FACTORIAL_TABLE: usize = 1024;

fn ln_factorial_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(LN_FACTORIAL_TABLE);
        let mut acc = 0.0f64;
        t.push(0.0);
        for n in 1..LN_FACTORIAL_TABLE {
            acc += (n as f64).ln();
            t.push(acc);
        }
        t
    })
}

/// `ln(n!)`.
pub fn ln_factorial(n: i64) -> f64 {
    assert!(n >= 0, "factorial of negative argument {n}");
    let table = ln_factorial_table();
    let n = n as usize;
    if n < table.len() {
        table[n]
    } else {
        table[table.len() - 1] + ((table.len())..=n).map(|k| (k as f64).ln()).sum::<f64>()
    }
}

fn check_projection(j: HalfInt, m: HalfInt, label: &str) -> Result<()> {
    if j.twice() < 0 {
        return Err(Error::InvalidQuantumNumbers(format!("{label}: negative j = {j}")));
    }
    if m.abs() > j || !(j - m).is_integer() {
        return Err(Error::InvalidQuantumNumbers(format!("{label}: m = {m} incompatible with j = {j}")));
    }
    Ok(())
}

/// Clebsch–Gordan coefficient `⟨j1 m1; j2 m2 | J M⟩` in the Condon–Shortley
/// convention, evaluated with the Racah sum over log-factorials.
///
/// Returns zero when the selection rules forbid the coupling; malformed
/// projections (`|m| > j` or wrong parity) are an error.
pub fn clebsch_gordan(
    j1: HalfInt,
    m1: HalfInt,
    j2: HalfInt,
    m2: HalfInt,
    big_j: HalfInt,
    big_m: HalfInt,
) -> Result<f64> {
    check_projection(j1, m1, "first spin")?;
    check_projection(j2, m2, "second spin")?;
    check_projection(big_j, big_m, "coupled spin")?;

    if m1 + m2 != big_m {
        return Ok(0.0);
    }
    if big_j > j1 + j2 || big_j < (j1 - j2).abs() || !(j1 + j2 - big_j).is_integer() {
        return Ok(0.0);
    }

    // Everything below is an integer combination; work in plain integers.
    let h = |x: HalfInt| x.twice() / 2;
    let a = h(j1 + j2 - big_j);
    let b = h(j1 - m1);
    let cc = h(j2 + m2);
    let d = h(big_j - j2 + m1);
    let e = h(big_j - j1 - m2);

    let ln_prefactor = 0.5
        * (((big_j.twice() + 1) as f64).ln()
            + ln_factorial(h(big_j + j1 - j2))
            + ln_factorial(h(big_j - j1 + j2))
            + ln_factorial(a)
            - ln_factorial(h(j1 + j2 + big_j) + 1)
            + ln_factorial(h(big_j + big_m))
            + ln_factorial(h(big_j - big_m))
            + ln_factorial(h(j1 - m1))
            + ln_factorial(h(j1 + m1))
            + ln_factorial(h(j2 - m2))
            + ln_factorial(h(j2 + m2)));

    let k_min = 0.max(-d).max(-e);
    let k_max = a.min(b).min(cc);
    let mut sum = 0.0f64;
    for k in k_min..=k_max {
        let ln_den = ln_factorial(k)
            + ln_factorial(a - k)
            + ln_factorial(b - k)
            + ln_factorial(cc - k)
            + ln_factorial(d + k)
            + ln_factorial(e + k);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * (ln_prefactor - ln_den).exp();
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{commutator, identity, max_abs, max_abs_diff};

    fn hi(x: f64) -> HalfInt {
        HalfInt::from_f64(x).unwrap()
    }

    #[test]
    fn half_int_parsing() {
        assert_eq!(hi(1.5).twice(), 3);
        assert_eq!(hi(-2.0).twice(), -4);
        assert!(HalfInt::from_f64(0.3).is_err());
        assert!(SpinRepresentation::from_j(0.25).is_err());
        assert_eq!(format!("{}", hi(2.5)), "5/2");
        assert_eq!(format!("{}", hi(3.0)), "3");
    }

    #[test]
    fn representation_bookkeeping() {
        let rep = SpinRepresentation::from_spins(5);
        assert_eq!(rep.j(), hi(2.5));
        assert_eq!(rep.dim(), 6);
        assert_eq!(rep.n_spins(), 5);
        assert_eq!(rep.m_of(0), hi(2.5));
        assert_eq!(rep.m_of(5), hi(-2.5));
        assert_eq!(rep.index_of(hi(-0.5)), Some(3));
        assert_eq!(rep.index_of(hi(0.0)), None);
        assert_eq!(rep.index_of(hi(3.5)), None);
    }

    #[test]
    fn spin_half_jz() {
        let ops = build_spin_operators(&SpinRepresentation::from_j(0.5).unwrap());
        assert_eq!(ops.jz[(0, 0)], c(0.5, 0.0));
        assert_eq!(ops.jz[(1, 1)], c(-0.5, 0.0));
        assert_eq!(ops.jz[(0, 1)], c(0.0, 0.0));
    }

    #[test]
    fn spin_one_ladder_entries() {
        let ops = build_spin_operators(&SpinRepresentation::from_j(1.0).unwrap());
        let s2 = 2.0f64.sqrt();
        assert!((ops.jplus[(0, 1)].re - s2).abs() < 1e-15);
        assert!((ops.jplus[(1, 2)].re - s2).abs() < 1e-15);
        assert_eq!(ops.jplus[(1, 0)], c(0.0, 0.0));
    }

    #[test]
    fn algebra_identities_up_to_j5() {
        for twice in 1..=10 {
            let rep = SpinRepresentation::new(HalfInt::from_twice(twice)).unwrap();
            let ops = build_spin_operators(&rep);
            let j = rep.j().value();

            let comm = commutator(ops.jx.as_ref(), ops.jy.as_ref());
            let ijz = &ops.jz * faer::Scale(c(0.0, 1.0));
            assert!(max_abs_diff(comm.as_ref(), ijz.as_ref()) < 1e-12);

            let casimir = &ops.jx * &ops.jx + &ops.jy * &ops.jy + &ops.jz * &ops.jz;
            let target = identity(rep.dim()) * faer::Scale(c(j * (j + 1.0), 0.0));
            assert!(max_abs_diff(casimir.as_ref(), target.as_ref()) < 1e-12);

            let jp = &ops.jx + &ops.jy * faer::Scale(c(0.0, 1.0));
            assert!(max_abs_diff(jp.as_ref(), ops.jplus.as_ref()) < 1e-14);
            let jm = &ops.jx - &ops.jy * faer::Scale(c(0.0, 1.0));
            assert!(max_abs_diff(jm.as_ref(), ops.jminus.as_ref()) < 1e-14);
        }
    }

    #[test]
    fn zero_spin_is_trivial() {
        let ops = build_spin_operators(&SpinRepresentation::from_j(0.0).unwrap());
        assert_eq!(ops.jz.nrows(), 1);
        assert_eq!(max_abs(ops.jplus.as_ref()), 0.0);
    }

    #[test]
    fn ln_factorial_values() {
        assert_eq!(ln_factorial(0), 0.0);
        assert!((ln_factorial(5) - 120f64.ln()).abs() < 1e-13);
        let direct: f64 = (1..=1500).map(|k| (k as f64).ln()).sum();
        assert!((ln_factorial(1500) - direct).abs() < 1e-8);
    }

    #[test]
    fn cg_rejects_malformed_projections() {
        let r = clebsch_gordan(hi(0.5), hi(1.5), hi(0.5), hi(0.5), hi(1.0), hi(1.0));
        assert!(matches!(r, Err(Error::InvalidQuantumNumbers(_))));
        let r = clebsch_gordan(hi(1.0), hi(0.5), hi(0.5), hi(0.5), hi(1.0), hi(1.0));
        assert!(r.is_err());
    }

    #[test]
    fn cg_selection_rules_give_zero() {
        // M ≠ m1 + m2
        assert_eq!(clebsch_gordan(hi(1.0), hi(1.0), hi(1.0), hi(0.0), hi(2.0), hi(0.0)).unwrap(), 0.0);
        // triangle violated
        assert_eq!(clebsch_gordan(hi(0.5), hi(0.5), hi(0.5), hi(0.5), hi(2.0), hi(1.0)).unwrap(), 0.0);
    }
}
