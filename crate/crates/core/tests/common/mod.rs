//! Exact rational arithmetic used as a reference for the floating-point
//! special functions.
#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub fn rat(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite input")
}

pub fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().expect("representable")
}

/// `(x)_k`.
pub fn poch(x: &BigRational, k: usize) -> BigRational {
    (0..k).fold(BigRational::one(), |acc, j| acc * (x + int(j as i64)))
}

pub fn binomial(n: usize, k: usize) -> BigRational {
    if k > n {
        return BigRational::zero();
    }
    (0..k).fold(BigRational::one(), |acc, j| {
        acc * int((n - j) as i64) / int(j as i64 + 1)
    })
}

/// `Σ_k Π(num)_k / Π(den)_k z^k / k!`, summed until a numerator
/// Pochhammer symbol vanishes (the caller guarantees termination).
pub fn hypergeometric(num: &[BigRational], den: &[BigRational], z: &BigRational) -> BigRational {
    let mut sum = BigRational::zero();
    let mut term = BigRational::one();
    let mut k = 0usize;
    while !term.is_zero() {
        sum += &term;
        let kk = int(k as i64);
        for a in num {
            term *= a + &kk;
        }
        if term.is_zero() {
            break;
        }
        for b in den {
            term /= b + &kk;
        }
        term *= z;
        term /= int(k as i64 + 1);
        k += 1;
        assert!(k < 10_000, "series failed to terminate");
    }
    sum
}

/// Hahn type (ii) eigenvalue as the explicit alternating sum
/// `Σ_k C(n,k) (-1)^k (b)_k (n+a+2b+c-1)_k / ((a+b)_k (b+c)_k)`.
pub fn hahn_type2_alternating(a: f64, b: f64, c: f64, n: usize) -> BigRational {
    let (a, b, c) = (rat(a), rat(b), rat(c));
    let top = int(n as i64) + &a + int(2) * &b + &c - int(1);
    let mut sum = BigRational::zero();
    for k in 0..=n {
        let term = binomial(n, k) * poch(&b, k) * poch(&top, k)
            / (poch(&(&a + &b), k) * poch(&(&b + &c), k));
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    sum
}

/// Relative distance `|x - exact| / |exact|` (absolute when `exact = 0`).
pub fn rel_error(x: f64, exact: &BigRational) -> f64 {
    let diff = (rat(x) - exact).abs();
    if exact.is_zero() {
        to_f64(&diff)
    } else {
        to_f64(&(diff / exact.abs()))
    }
}
