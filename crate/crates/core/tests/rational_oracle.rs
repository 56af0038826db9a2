//! Floating-point results against exact rational arithmetic.

mod common;

use common::{binomial, hypergeometric, int, poch, rat, rel_error, to_f64};
use num_rational::BigRational;
use num_traits::{One, Zero};
use solvferm_core::specfun::{hypergeometric_terminating, q_binomial, q_pochhammer};
use solvferm_core::*;

type Q = BigRational;

fn pow(x: &Q, k: usize) -> Q {
    (0..k).fold(Q::one(), |acc, _| acc * x)
}

fn kraw_pi(x: usize, n: usize, p: &Q) -> Q {
    if x > n {
        return Q::zero();
    }
    binomial(n, x) * pow(p, x) * pow(&(Q::one() - p), n - x)
}

fn hahn_pi(x: usize, n: usize, a: &Q, b: &Q) -> Q {
    if x > n {
        return Q::zero();
    }
    binomial(n, x) * poch(a, x) * poch(b, n - x) / poch(&(a + b), n)
}

/// Kernels written directly as the convolution sums.
fn rational_kernel(
    conv: ConvType,
    n: usize,
    pi1: impl Fn(usize, usize) -> Q,
    pi2: impl Fn(usize, usize) -> Q,
) -> Vec<Vec<Q>> {
    let mut k = vec![vec![Q::zero(); n + 1]; n + 1];
    for (x, row) in k.iter_mut().enumerate() {
        for (y, entry) in row.iter_mut().enumerate() {
            *entry = match conv {
                ConvType::I => (0..=x.min(y)).map(|z| pi2(x - z, n - z) * pi1(z, y)).sum(),
                ConvType::II => ((x + y).saturating_sub(n)..=x.min(y))
                    .map(|z| pi2(x - z, n - y) * pi1(z, y))
                    .sum(),
                ConvType::III => (x.max(y)..=n).map(|z| pi2(x, z) * pi1(z - y, n - y)).sum(),
            };
        }
    }
    k
}

struct Case {
    recipe: ConvolutionRecipe,
    kernel: Vec<Vec<Q>>,
    pi: Box<dyn Fn(usize) -> Q>,
    poly: Box<dyn Fn(usize, usize) -> Q>,
    kappa: Box<dyn Fn(usize) -> Q>,
}

const N: usize = 6;

fn krawtchouk_case(conv: ConvType, a: f64, b: f64) -> Case {
    let (qa, qb) = (rat(a), rat(b));
    let one = Q::one();
    let (p, kappa): (Q, Q) = match conv {
        ConvType::I => (&qb / (&one - &qa + &qa * &qb), &qa * (&one - &qb)),
        ConvType::II => (&qb / (&one - &qa + &qb), &qa - &qb),
        ConvType::III => (&qa * &qb / (&one - &qb + &qa * &qb), (&one - &qa) * &qb),
    };
    let kernel = rational_kernel(
        conv,
        N,
        |x, m| kraw_pi(x, m, &qa),
        |x, m| kraw_pi(x, m, &qb),
    );
    let inv_p = &one / &p;
    Case {
        recipe: ConvolutionRecipe::krawtchouk(conv, a, b).unwrap(),
        kernel,
        pi: Box::new({
            let p = p.clone();
            move |x| kraw_pi(x, N, &p)
        }),
        poly: Box::new(move |deg, x| {
            hypergeometric(
                &[int(-(deg as i64)), int(-(x as i64))],
                &[int(-(N as i64))],
                &inv_p,
            )
        }),
        kappa: Box::new(move |deg| pow(&kappa, deg)),
    }
}

fn hahn_case(conv: ConvType, a: f64, b: f64, c: f64) -> Case {
    let (qa, qb, qc) = (rat(a), rat(b), rat(c));
    let (s1, s2): (Q, Q) = match conv {
        ConvType::I => (&qa + &qb, qc.clone()),
        ConvType::II => (&qa + &qb, &qb + &qc),
        ConvType::III => (qc.clone(), &qa + &qb),
    };
    let kernel = match conv {
        ConvType::I | ConvType::II => rational_kernel(
            conv,
            N,
            |x, m| hahn_pi(x, m, &qa, &qb),
            |x, m| hahn_pi(x, m, &qb, &qc),
        ),
        ConvType::III => rational_kernel(
            conv,
            N,
            |x, m| hahn_pi(x, m, &qa, &qb),
            |x, m| hahn_pi(x, m, &qc, &qa),
        ),
    };
    let kappa: Box<dyn Fn(usize) -> Q> = match conv {
        ConvType::I => {
            let (qa, qb, qc) = (qa.clone(), qb.clone(), qc.clone());
            Box::new(move |n| {
                poch(&qa, n) * poch(&qc, n) / (poch(&(&qa + &qb), n) * poch(&(&qb + &qc), n))
            })
        }
        ConvType::II => Box::new(move |n| common::hahn_type2_alternating(a, b, c, n)),
        ConvType::III => {
            let (qa, qb, qc) = (qa.clone(), qb.clone(), qc.clone());
            Box::new(move |n| {
                poch(&qb, n) * poch(&qc, n) / (poch(&(&qa + &qb), n) * poch(&(&qa + &qc), n))
            })
        }
    };
    let (pa, pb) = (s1.clone(), s2.clone());
    Case {
        recipe: ConvolutionRecipe::hahn(conv, a, b, c).unwrap(),
        kernel,
        pi: Box::new(move |x| hahn_pi(x, N, &pa, &pb)),
        poly: Box::new(move |deg, x| {
            let d = int(deg as i64);
            hypergeometric(
                &[-d.clone(), &d + &s1 + &s2 - int(1), int(-(x as i64))],
                &[s1.clone(), int(-(N as i64))],
                &Q::one(),
            )
        }),
        kappa,
    }
}

fn all_cases() -> Vec<Case> {
    let mut out = Vec::new();
    for conv in [ConvType::I, ConvType::II, ConvType::III] {
        out.push(krawtchouk_case(conv, 0.25, 0.625));
        out.push(krawtchouk_case(conv, 0.75, 0.375));
        out.push(hahn_case(conv, 1.0, 2.0, 0.5));
        out.push(hahn_case(conv, 0.5, 1.5, 2.25));
    }
    out
}

#[test]
fn kernels_match_exact_convolutions() {
    for case in all_cases() {
        let k = ConvolutionKernel::build(&case.recipe, LatticeSpec::finite(N)).unwrap();
        for x in 0..=N {
            assert!(rel_error(k.pi()[x], &(case.pi)(x)) < 1e-13);
            for y in 0..=N {
                let err = rel_error(k.matrix()[(x, y)], &case.kernel[x][y]);
                assert!(err < 1e-13, "{:?} ({x},{y}): {err:e}", case.recipe);
            }
        }
    }
}

#[test]
fn exact_eigenrelation_and_balance() {
    for case in all_cases() {
        let pi: Vec<Q> = (0..=N).map(&case.pi).collect();
        for y in 0..=N {
            let col: Q = (0..=N).map(|x| case.kernel[x][y].clone()).sum();
            assert_eq!(col, Q::one());
            for x in 0..=N {
                assert_eq!(&case.kernel[x][y] * &pi[y], &case.kernel[y][x] * &pi[x]);
            }
        }
        for deg in 0..=N {
            let kappa = (case.kappa)(deg);
            assert!(
                rel_error(case.recipe.kappa(deg), &kappa) < 1e-13 || to_f64(&kappa).abs() < 1e-300
            );
            for x in 0..=N {
                let lhs: Q = (0..=N)
                    .map(|y| &case.kernel[x][y] * &pi[y] * (case.poly)(deg, y))
                    .sum();
                assert_eq!(
                    lhs,
                    &kappa * &pi[x] * (case.poly)(deg, x),
                    "{:?} n={deg} x={x}",
                    case.recipe
                );
            }
        }
    }
}

#[test]
fn polynomials_match_exact_series() {
    let specs = [
        (FamilyParams::Krawtchouk { p: 0.375 }, 9),
        (FamilyParams::Hahn { a: 0.5, b: 2.25 }, 9),
    ];
    for (params, n) in specs {
        let spec = FamilySpec::finite(params, n).unwrap();
        for deg in 0..=n {
            for x in 0..=n {
                let exact = match params {
                    FamilyParams::Krawtchouk { p } => hypergeometric(
                        &[int(-(deg as i64)), int(-(x as i64))],
                        &[int(-(n as i64))],
                        &(Q::one() / rat(p)),
                    ),
                    FamilyParams::Hahn { a, b } => hypergeometric(
                        &[
                            int(-(deg as i64)),
                            int(deg as i64) + rat(a) + rat(b) - int(1),
                            int(-(x as i64)),
                        ],
                        &[rat(a), int(-(n as i64))],
                        &Q::one(),
                    ),
                    _ => unreachable!(),
                };
                let got = spec.polynomial(deg, x).unwrap();
                let scale = to_f64(&exact).abs().max(1.0);
                assert!(
                    (got - to_f64(&exact)).abs() <= 1e-12 * scale,
                    "deg {deg} x {x}"
                );
            }
        }
    }
    let meixner = FamilySpec::semi_infinite(FamilyParams::Meixner { a: 1.5, b: 0.25 }).unwrap();
    for deg in 0..8 {
        for x in 0..8 {
            let exact = hypergeometric(
                &[int(-(deg as i64)), int(-(x as i64))],
                &[rat(1.5)],
                &(Q::one() - Q::one() / rat(0.25)),
            );
            let scale = to_f64(&exact).abs().max(1.0);
            assert!((meixner.polynomial(deg, x).unwrap() - to_f64(&exact)).abs() <= 1e-12 * scale);
        }
    }
}

#[test]
fn measures_match_exact_values() {
    let k = FamilySpec::finite(FamilyParams::Krawtchouk { p: 0.375 }, 12).unwrap();
    let h = FamilySpec::finite(FamilyParams::Hahn { a: 0.5, b: 2.25 }, 12).unwrap();
    for x in 0..=12 {
        assert!(rel_error(k.measure(x).unwrap(), &kraw_pi(x, 12, &rat(0.375))) < 1e-14);
        assert!(
            rel_error(
                h.measure(x).unwrap(),
                &hahn_pi(x, 12, &rat(0.5), &rat(2.25))
            ) < 1e-14
        );
    }
    // integer a makes (1-b)^a rational
    let m = FamilySpec::semi_infinite(FamilyParams::Meixner { a: 3.0, b: 0.25 }).unwrap();
    for x in 0..30usize {
        let fact: Q = poch(&Q::one(), x);
        let exact = poch(&int(3), x) * pow(&rat(0.25), x) * pow(&rat(0.75), 3) / fact;
        assert!(rel_error(m.measure(x).unwrap(), &exact) < 1e-14);
    }
    let c = FamilySpec::semi_infinite(FamilyParams::Charlier { a: 2.5 }).unwrap();
    for x in 0..30usize {
        // evaluated as exp(ln π): relative error grows with |ln π|
        let log_mag = c.log_measure(x + 1).unwrap().abs() + 1.0;
        let ratio = c.measure(x + 1).unwrap() / c.measure(x).unwrap();
        assert!(
            (ratio - 2.5 / (x + 1) as f64).abs() < 4e-16 * log_mag * ratio,
            "x={x}"
        );
    }
}

#[test]
fn generalized_hypergeometric_against_exact() {
    let cases: [(&[f64], &[f64], f64); 4] = [
        (&[-7.0, 2.5, 0.75], &[1.25, 3.5], 1.0),
        (&[-10.0, -4.0], &[-12.0], 2.5),
        (&[-12.0, 0.5], &[], -0.75),
        (&[-15.0, 16.75, 2.0], &[1.5, 3.25], 1.0),
    ];
    for (num, den, z) in cases {
        let exact = hypergeometric(
            &num.iter().map(|&v| rat(v)).collect::<Vec<_>>(),
            &den.iter().map(|&v| rat(v)).collect::<Vec<_>>(),
            &rat(z),
        );
        let got = hypergeometric_terminating(num, den, z).unwrap();
        assert!(rel_error(got, &exact) < 1e-13, "{num:?} {den:?}: {got}");
    }
}

#[test]
fn q_objects_against_exact() {
    let q = 0.5;
    let qq = rat(q);
    for (a, n) in [(0.25, 10usize), (-0.5, 12), (3.0, 7)] {
        let exact: Q = (0..n).fold(Q::one(), |acc, k| acc * (Q::one() - rat(a) * pow(&qq, k)));
        assert!(rel_error(q_pochhammer(a, q, n).value(), &exact) < 1e-14);
    }
    for n in 0..12usize {
        for x in 0..=n {
            let qp = |m: usize| (1..=m).fold(Q::one(), |acc, k| acc * (Q::one() - pow(&qq, k)));
            let exact = qp(n) / (qp(x) * qp(n - x));
            assert!(rel_error(q_binomial(n, x, q).unwrap(), &exact) < 1e-14);
        }
    }
}
