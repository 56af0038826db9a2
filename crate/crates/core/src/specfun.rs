//! Combinatorial and (basic) hypergeometric building blocks.
//!
//! Measures and norm constants are products of many factors whose
//! intermediate values leave the `f64` range near N ≈ 10³, so they are
//! accumulated as [`SignedLogValue`]s and exponentiated once.
//!
//! Terminating series alternate in sign and lose digits to cancellation.
//! Their term recurrence and summation run in double-double arithmetic,
//! which keeps ~31 significant digits; the result is accurate while
//! `Σ|t_k| / |Σ t_k|` stays below ~1e15.

use std::f64::consts::LN_2;
use std::ops::{Div, Mul};

use twofloat::TwoFloat;

use crate::error::{Error, Result};

/// Largest termination order accepted by the series evaluators.
pub const MAX_TERMINATION_ORDER: usize = 200;

/// A real number stored as `sign · exp(log_magnitude)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedLogValue {
    log_magnitude: f64,
    sign: i8,
}

impl SignedLogValue {
    pub const ONE: Self = Self {
        log_magnitude: 0.0,
        sign: 1,
    };
    pub const ZERO: Self = Self {
        log_magnitude: f64::NEG_INFINITY,
        sign: 0,
    };

    pub fn new(log_magnitude: f64, sign: i8) -> Self {
        match sign.signum() {
            0 => Self::ZERO,
            s => Self {
                log_magnitude,
                sign: s,
            },
        }
    }

    pub fn from_f64(v: f64) -> Self {
        if v == 0.0 {
            Self::ZERO
        } else {
            Self::new(v.abs().ln(), if v > 0.0 { 1 } else { -1 })
        }
    }

    /// Natural log of the magnitude; `-inf` for zero.
    pub fn log_magnitude(&self) -> f64 {
        self.log_magnitude
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    /// Exponentiate back to linear space.
    pub fn value(&self) -> f64 {
        match self.sign {
            0 => 0.0,
            s => f64::from(s) * self.log_magnitude.exp(),
        }
    }

    pub fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Self::ONE;
        }
        if self.is_zero() {
            return Self::ZERO;
        }
        let sign = if self.sign < 0 && n % 2 != 0 { -1 } else { 1 };
        Self::new(self.log_magnitude * f64::from(n), sign)
    }

    /// Reciprocal; `None` for zero.
    pub fn recip(self) -> Option<Self> {
        (!self.is_zero()).then(|| Self::new(-self.log_magnitude, self.sign))
    }
}

impl Mul for SignedLogValue {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return Self::ZERO;
        }
        Self::new(self.log_magnitude + rhs.log_magnitude, self.sign * rhs.sign)
    }
}

impl Div for SignedLogValue {
    type Output = Self;

    /// Panics when dividing by zero.
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Self) -> Self {
        self * rhs.recip().expect("division by a zero SignedLogValue")
    }
}

/// Running product kept as `sign · mantissa · 2^exponent`; rescaling by
/// exact powers of two never rounds.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ScaledProduct {
    mantissa: f64,
    exponent: i64,
    sign: i8,
}

const RESCALE_BITS: i32 = 512;

impl ScaledProduct {
    pub(crate) fn new() -> Self {
        Self {
            mantissa: 1.0,
            exponent: 0,
            sign: 1,
        }
    }

    fn absorb_sign(&mut self, f: f64) -> f64 {
        if f < 0.0 {
            self.sign = -self.sign;
        }
        f.abs()
    }

    fn rescale(&mut self) {
        let hi = 2f64.powi(RESCALE_BITS);
        let lo = 2f64.powi(-RESCALE_BITS);
        while self.mantissa > hi {
            self.mantissa *= lo;
            self.exponent += i64::from(RESCALE_BITS);
        }
        while self.mantissa < lo && self.mantissa > 0.0 {
            self.mantissa *= hi;
            self.exponent -= i64::from(RESCALE_BITS);
        }
    }

    pub(crate) fn mul(&mut self, f: f64) {
        if f == 0.0 {
            self.sign = 0;
        }
        if self.sign == 0 {
            return;
        }
        let f = self.absorb_sign(f);
        self.mantissa *= f;
        self.rescale();
    }

    pub(crate) fn div(&mut self, f: f64) {
        if self.sign == 0 {
            return;
        }
        let f = self.absorb_sign(f);
        self.mantissa /= f;
        self.rescale();
    }

    pub(crate) fn finish(self) -> SignedLogValue {
        if self.sign == 0 {
            return SignedLogValue::ZERO;
        }
        SignedLogValue::new(self.mantissa.ln() + self.exponent as f64 * LN_2, self.sign)
    }
}

/// Rising factorial `(a)_n = a (a+1) ⋯ (a+n-1)`, with `(a)_0 = 1`.
pub fn log_pochhammer(a: f64, n: usize) -> SignedLogValue {
    let mut acc = ScaledProduct::new();
    for k in 0..n {
        acc.mul(a + k as f64);
    }
    acc.finish()
}

/// `ln n!`.
pub fn log_factorial(n: usize) -> f64 {
    log_pochhammer(1.0, n).log_magnitude()
}

/// `1 - a q^k` with the cancellation near `a q^k ≈ 1` handled by `expm1`.
fn one_minus_scaled_power(a: f64, ln_q: f64, k: i64) -> f64 {
    if a > 0.0 {
        -(a.ln() + k as f64 * ln_q).exp_m1()
    } else {
        1.0 - a * (k as f64 * ln_q).exp()
    }
}

/// q-shifted factorial `(a;q)_n = ∏_{k<n} (1 - a q^k)`, with `(a;q)_0 = 1`.
pub fn q_pochhammer(a: f64, q: f64, n: usize) -> SignedLogValue {
    let ln_q = q.ln();
    let mut acc = ScaledProduct::new();
    for k in 0..n {
        acc.mul(one_minus_scaled_power(a, ln_q, k as i64));
    }
    acc.finish()
}

fn check_range(n: usize, x: usize) -> Result<()> {
    if x > n {
        return Err(Error::Domain(format!("x = {x} outside 0..={n}")));
    }
    Ok(())
}

/// `ln C(n, x)`.
///
/// Computed from `min(x, n-x)` so the result is symmetric bit for bit.
/// Exact integer arithmetic is used while the coefficient fits in `u128`.
pub fn log_binomial(n: usize, x: usize) -> Result<f64> {
    check_range(n, x)?;
    let m = x.min(n - x);
    let mut exact: Option<u128> = Some(1);
    for i in 1..=m {
        exact = exact
            .and_then(|c| c.checked_mul((n - m + i) as u128))
            .map(|c| c / i as u128);
        if exact.is_none() {
            break;
        }
    }
    if let Some(c) = exact {
        return Ok((c as f64).ln());
    }
    let mut acc = ScaledProduct::new();
    for i in 1..=m {
        acc.mul((n - m + i) as f64);
        acc.div(i as f64);
    }
    Ok(acc.finish().log_magnitude())
}

/// `ln` of the Gaussian binomial `(q;q)_n / ((q;q)_x (q;q)_{n-x})`.
pub fn log_q_binomial(n: usize, x: usize, q: f64) -> Result<f64> {
    check_range(n, x)?;
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain(format!("q = {q} outside (0, 1)")));
    }
    let ln_q = q.ln();
    let m = x.min(n - x);
    let mut acc = ScaledProduct::new();
    for i in 1..=m {
        acc.mul(one_minus_scaled_power(1.0, ln_q, (n - m + i) as i64));
        acc.div(one_minus_scaled_power(1.0, ln_q, i as i64));
    }
    Ok(acc.finish().log_magnitude())
}

/// Gaussian binomial coefficient `[n x]_q`.
pub fn q_binomial(n: usize, x: usize, q: f64) -> Result<f64> {
    log_q_binomial(n, x, q).map(f64::exp)
}

fn nonpositive_integer(v: f64) -> Option<usize> {
    (v <= 0.0 && v.fract() == 0.0 && v > -(2f64.powi(52))).then(|| (-v) as usize)
}

/// Value and absolute-term sum of a terminating series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    /// `Σ |t_k|`; `abs_sum / |value|` bounds the loss of significance.
    pub abs_sum: f64,
}

/// Double-double quotient. `TwoFloat`'s own `/` drops the remainder of the
/// leading quotient, which costs about half the extra precision.
fn dd_div(a: TwoFloat, b: TwoFloat) -> TwoFloat {
    let q1 = a.hi() / b.hi();
    let r = a - b * q1;
    let q2 = r.hi() / b.hi();
    let r = r - b * q2;
    TwoFloat::new_add(q1, q2) + r.hi() / b.hi()
}

/// `q^m` in double-double by binary powering.
fn dd_powi(q: TwoFloat, m: i64) -> TwoFloat {
    let mut base = q;
    let mut acc = TwoFloat::from(1.0);
    let mut e = m.unsigned_abs();
    while e > 0 {
        if e & 1 == 1 {
            acc *= base;
        }
        base *= base;
        e >>= 1;
    }
    if m < 0 {
        dd_div(TwoFloat::from(1.0), acc)
    } else {
        acc
    }
}

fn sum_terms(order: usize, mut ratio: impl FnMut(usize) -> TwoFloat) -> SeriesValue {
    let mut term = TwoFloat::from(1.0);
    let mut sum = term;
    let mut abs_sum = 1.0;
    for k in 0..order {
        term *= ratio(k);
        sum += term;
        abs_sum += f64::from(term).abs();
    }
    SeriesValue {
        value: f64::from(sum),
        abs_sum,
    }
}

fn termination_order(num: impl Iterator<Item = Option<usize>>) -> Result<usize> {
    let order = num.flatten().min().ok_or(Error::NonTerminating)?;
    if order > MAX_TERMINATION_ORDER {
        return Err(Error::Domain(format!(
            "termination order {order} exceeds {MAX_TERMINATION_ORDER}"
        )));
    }
    Ok(order)
}

/// Terminating generalized hypergeometric series `pFq(num; den | z)`.
///
/// The series stops at the smallest `m` for which a numerator parameter
/// equals `-m`. A denominator parameter equal to `-j` with `j < m` is a
/// singularity; `-N` with `N ≥ m` is harmless.
pub fn hypergeometric_terminating(num: &[f64], den: &[f64], z: f64) -> Result<f64> {
    hypergeometric_terminating_detailed(num, den, z).map(|s| s.value)
}

/// As [`hypergeometric_terminating`], also reporting `Σ|t_k|`.
pub fn hypergeometric_terminating_detailed(
    num: &[f64],
    den: &[f64],
    z: f64,
) -> Result<SeriesValue> {
    let order = termination_order(num.iter().map(|&a| nonpositive_integer(a)))?;
    for &b in den {
        if let Some(j) = nonpositive_integer(b) {
            if j < order {
                return Err(Error::Singularity {
                    param: b,
                    term: j + 1,
                });
            }
        }
    }
    let z = TwoFloat::from(z);
    Ok(sum_terms(order, |k| {
        let kf = k as f64;
        let mut r = dd_div(z, TwoFloat::from(kf + 1.0));
        for &a in num {
            r *= TwoFloat::from(a) + kf;
        }
        for &b in den {
            r = dd_div(r, TwoFloat::from(b) + kf);
        }
        r
    }))
}

/// A basic-hypergeometric parameter: a plain value or an exact power `q^e`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QParam {
    Value(f64),
    Power(i64),
}

impl QParam {
    /// Recognises `v = q^{-m}` (m ≥ 0 integer) to relative 1e-12.
    fn classify(v: f64, q: f64) -> Self {
        if v > 0.0 {
            let e = v.ln() / q.ln();
            let r = e.round();
            if r <= 0.0 && (e - r).abs() <= 1e-12 * r.abs().max(1.0) {
                return Self::Power(r as i64);
            }
        }
        Self::Value(v)
    }

    fn termination(&self) -> Option<usize> {
        match *self {
            Self::Power(e) if e <= 0 => Some((-e) as usize),
            _ => None,
        }
    }

    /// `1 - p q^k` in double-double.
    fn factor(&self, q: TwoFloat, k: usize) -> TwoFloat {
        let one = TwoFloat::from(1.0);
        match *self {
            Self::Power(e) => {
                let m = e + k as i64;
                if m == 0 {
                    TwoFloat::from(0.0)
                } else {
                    one - dd_powi(q, m)
                }
            }
            Self::Value(a) => one - TwoFloat::from(a) * dd_powi(q, k as i64),
        }
    }
}

/// Terminating `₃φ₂(num; den | q; z)` with values classified automatically.
pub fn basic_hypergeometric_3phi2_terminating(
    num: [f64; 3],
    den: [f64; 2],
    q: f64,
    z: f64,
) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain(format!("q = {q} outside (0, 1)")));
    }
    let num = num.map(|v| QParam::classify(v, q));
    let den = den.map(|v| QParam::classify(v, q));
    phi32_terminating(num, den, q, z).map(|s| s.value)
}

/// `₃φ₂` with explicitly typed parameters; exact powers terminate exactly.
pub fn phi32_terminating(
    num: [QParam; 3],
    den: [QParam; 2],
    q: f64,
    z: f64,
) -> Result<SeriesValue> {
    let order = termination_order(num.iter().map(QParam::termination))?;
    for b in &den {
        if let Some(j) = b.termination() {
            if j < order {
                let param = match *b {
                    QParam::Power(e) => q.powi(e as i32),
                    QParam::Value(v) => v,
                };
                return Err(Error::Singularity { param, term: j + 1 });
            }
        }
    }
    let q2 = TwoFloat::from(q);
    let z = TwoFloat::from(z);
    Ok(sum_terms(order, |k| {
        let mut r = dd_div(z, QParam::Power(1).factor(q2, k));
        for a in &num {
            r *= a.factor(q2, k);
        }
        for b in &den {
            r = dd_div(r, b.factor(q2, k));
        }
        r
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn double_double_division_keeps_remainder() {
        let third = dd_div(TwoFloat::from(1.0), TwoFloat::from(3.0));
        assert!(third.lo() != 0.0);
        assert_eq!(
            f64::from(third * TwoFloat::from(3.0) - TwoFloat::from(1.0)),
            0.0
        );
        let q = TwoFloat::from(0.7);
        let back = dd_powi(q, -5) * dd_powi(q, 5) - TwoFloat::from(1.0);
        assert!(f64::from(back).abs() < 1e-30);
    }

    #[test]
    fn pochhammer_small_cases() {
        assert_eq!(log_pochhammer(3.7, 0), SignedLogValue::ONE);
        assert!(close(log_pochhammer(1.0, 4).value(), 24.0, 1e-15));
        // direct product loop oracle
        let direct: f64 = (0..3).map(|k| 0.5 + k as f64).product();
        assert!(close(log_pochhammer(0.5, 3).value(), direct, 1e-15));
        assert!(close(direct, 1.875, 1e-15));
    }

    #[test]
    fn pochhammer_signs_and_zero() {
        // (-2.5)_3 = -2.5 * -1.5 * -0.5
        let v = log_pochhammer(-2.5, 3);
        assert_eq!(v.sign(), -1);
        assert!(close(v.value(), -1.875, 1e-15));
        assert!(log_pochhammer(-2.0, 4).is_zero());
        assert!(!log_pochhammer(-2.0, 2).is_zero());
    }

    #[test]
    fn pochhammer_survives_overflow_range() {
        // (1)_200 = 200! overflows f64 nowhere in log space
        let v = log_pochhammer(1.0, 200);
        let direct: f64 = (1..=200).map(|k| (k as f64).ln()).sum();
        assert!(close(v.log_magnitude(), direct, 1e-14));
    }

    #[test]
    fn q_pochhammer_cases() {
        assert_eq!(q_pochhammer(0.9, 0.5, 0), SignedLogValue::ONE);
        assert!(q_pochhammer(1.0, 0.5, 2).is_zero());
        assert!(close(q_pochhammer(0.3, 0.5, 2).value(), 0.7 * 0.85, 1e-15));
        // negative argument keeps factors positive
        let v = q_pochhammer(-0.5, 0.5, 3);
        assert!(close(v.value(), 1.5 * 1.25 * 1.125, 1e-15));
    }

    #[test]
    fn log_binomial_cases() {
        assert_eq!(log_binomial(17, 0).unwrap(), 0.0);
        assert!(close(log_binomial(4, 2).unwrap(), 6f64.ln(), 1e-16));
        // exact integer oracle
        let mut c: u128 = 1;
        for i in 1..=25u128 {
            c = c * (25 + i) / i;
        }
        assert_eq!(c, 126_410_606_437_752);
        let got = log_binomial(50, 25).unwrap();
        let want = (c as f64).ln();
        assert!((got - want).abs() <= f64::EPSILON * want);
        assert!(log_binomial(3, 4).is_err());
    }

    #[test]
    fn log_binomial_large_uses_scaled_path() {
        let got = log_binomial(10_000, 5_000).unwrap();
        // Stirling-level check plus symmetry
        let sum: f64 = (1..=5000)
            .map(|i| ((5000 + i) as f64 / i as f64).ln())
            .sum();
        assert!(close(got, sum, 1e-13));
        assert_eq!(
            log_binomial(10_000, 3).unwrap().to_bits(),
            log_binomial(10_000, 9_997).unwrap().to_bits()
        );
    }

    #[test]
    fn q_binomial_cases() {
        assert!(close(q_binomial(7, 0, 0.3).unwrap(), 1.0, 1e-15));
        assert!(close(q_binomial(2, 1, 0.3).unwrap(), 1.3, 1e-15));
        let qp = |n: usize| q_pochhammer(0.5, 0.5, n).value();
        let want = qp(4) / (qp(2) * qp(2));
        assert!(close(q_binomial(4, 2, 0.5).unwrap(), want, 1e-14));
        assert!(q_binomial(2, 3, 0.5).is_err());
        assert!(q_binomial(2, 1, 1.5).is_err());
    }

    #[test]
    fn hypergeometric_basic_cases() {
        assert_eq!(
            hypergeometric_terminating(&[0.0, 3.3], &[1.7], 9.0).unwrap(),
            1.0
        );
        // Krawtchouk P_1(1) with N = 2, p = 1/2
        assert_eq!(
            hypergeometric_terminating(&[-1.0, -1.0], &[-2.0], 2.0).unwrap(),
            0.0
        );
        // ₂F₀ has no denominator parameters
        let v = hypergeometric_terminating(&[-2.0, -1.0], &[], -1.0).unwrap();
        assert!(close(v, 1.0 - 2.0, 1e-15));
    }

    #[test]
    fn hypergeometric_errors() {
        assert_eq!(
            hypergeometric_terminating(&[0.5, 1.5], &[2.0], 0.5),
            Err(Error::NonTerminating)
        );
        assert!(matches!(
            hypergeometric_terminating(&[-3.0], &[-1.0], 1.0),
            Err(Error::Singularity { term: 2, .. })
        ));
        // -N in the denominator is safe when -x terminates first
        assert!(hypergeometric_terminating(&[-3.0, -2.0], &[-2.0], 1.0).is_ok());
        assert!(hypergeometric_terminating(&[-201.0], &[], 1.0).is_err());
    }

    #[test]
    fn phi32_basic_cases() {
        let q: f64 = 0.5;
        assert_eq!(
            basic_hypergeometric_3phi2_terminating([1.0, 0.3, 0.7], [0.2, 0.1], q, q).unwrap(),
            1.0
        );
        // q^{-x} = 1 kills every term beyond the first
        let v =
            basic_hypergeometric_3phi2_terminating([q.powi(-3), 0.2, 1.0], [0.4, q.powi(-5)], q, q)
                .unwrap();
        assert_eq!(v, 1.0);
        assert_eq!(
            basic_hypergeometric_3phi2_terminating([0.3, 0.2, 0.1], [0.4, 0.5], q, q),
            Err(Error::NonTerminating)
        );
    }

    #[test]
    fn classify_recognises_powers() {
        let q: f64 = 0.7;
        assert_eq!(QParam::classify(q.powi(-6), q), QParam::Power(-6));
        assert_eq!(QParam::classify(1.0, q), QParam::Power(0));
        assert_eq!(QParam::classify(0.3, q), QParam::Value(0.3));
    }

    #[test]
    fn signed_log_arithmetic() {
        let a = SignedLogValue::from_f64(-3.0);
        let b = SignedLogValue::from_f64(0.5);
        assert!(close((a * b).value(), -1.5, 1e-15));
        assert!(close((a / b).value(), -6.0, 1e-15));
        assert!(close(a.powi(3).value(), -27.0, 1e-14));
        assert!((a * SignedLogValue::ZERO).is_zero());
        assert!(SignedLogValue::ZERO.recip().is_none());
        assert_eq!(SignedLogValue::new(5.0, 0), SignedLogValue::ZERO);
    }
}
