//! Family data: orthogonality measures, polynomials, norm constants,
//! eigenvalues of the convolution kernels and the parameter maps that
//! send the two convolved measures to the stationary one.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::quadrature::BetaQuadrature;
use crate::specfun::{
    hypergeometric_terminating_detailed, log_binomial, log_factorial, log_pochhammer,
    log_q_binomial, phi32_terminating, q_pochhammer, QParam, SeriesValue,
};
use crate::tridiagonal::eigenvector_log;

/// Polynomial family tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Krawtchouk,
    Charlier,
    Hahn,
    Meixner,
    QHahn,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Krawtchouk,
        Family::Charlier,
        Family::Hahn,
        Family::Meixner,
        Family::QHahn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Krawtchouk => "krawtchouk",
            Family::Charlier => "charlier",
            Family::Hahn => "hahn",
            Family::Meixner => "meixner",
            Family::QHahn => "qhahn",
        }
    }

    /// Finite families live on `{0..N}`; the others on `Z≥0`.
    pub fn is_finite(self) -> bool {
        matches!(self, Family::Krawtchouk | Family::Hahn | Family::QHahn)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|fam| fam.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::Parse(format!("unknown family `{s}`")))
    }
}

/// Parameters of one orthogonality measure, without the lattice size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FamilyParams {
    Krawtchouk { p: f64 },
    Charlier { a: f64 },
    Hahn { a: f64, b: f64 },
    Meixner { a: f64, b: f64 },
    QHahn { a: f64, b: f64, q: f64 },
}

fn require(ok: bool, what: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Domain(what()))
    }
}

/// `1 - c q^e`, accurate when `c q^e` is close to one.
fn one_minus_power(c: f64, q: f64, e: f64) -> f64 {
    if c > 0.0 {
        -(c.ln() + e * q.ln()).exp_m1()
    } else {
        1.0 - c * q.powf(e)
    }
}

fn in_unit(v: f64) -> bool {
    v > 0.0 && v < 1.0
}

impl FamilyParams {
    pub fn family(&self) -> Family {
        match self {
            FamilyParams::Krawtchouk { .. } => Family::Krawtchouk,
            FamilyParams::Charlier { .. } => Family::Charlier,
            FamilyParams::Hahn { .. } => Family::Hahn,
            FamilyParams::Meixner { .. } => Family::Meixner,
            FamilyParams::QHahn { .. } => Family::QHahn,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            FamilyParams::Krawtchouk { p } => require(in_unit(p), || {
                format!("krawtchouk needs 0 < p < 1, got p = {p}")
            }),
            FamilyParams::Charlier { a } => require(a > 0.0 && a.is_finite(), || {
                format!("charlier needs a > 0, got a = {a}")
            }),
            FamilyParams::Hahn { a, b } => require(a > 0.0 && b > 0.0, || {
                format!("hahn needs a, b > 0, got a = {a}, b = {b}")
            }),
            FamilyParams::Meixner { a, b } => require(a > 0.0 && in_unit(b), || {
                format!("meixner needs a > 0 and 0 < b < 1, got a = {a}, b = {b}")
            }),
            FamilyParams::QHahn { a, b, q } => require(in_unit(q) && in_unit(a) && b < 1.0, || {
                format!("qhahn needs 0 < q < 1, 0 < a < 1, b < 1, got a = {a}, b = {b}, q = {q}")
            }),
        }
    }

    /// `ln π(x)` on `{0..n}`; `n` is ignored by the semi-infinite families
    /// and `-inf` is returned outside the support.
    pub fn log_weight(&self, x: usize, n: usize) -> f64 {
        if self.family().is_finite() && x > n {
            return f64::NEG_INFINITY;
        }
        let lb = |n, x| log_binomial(n, x).expect("x <= n checked above");
        let lp = |a, k| log_pochhammer(a, k).log_magnitude();
        let xf = x as f64;
        match *self {
            FamilyParams::Krawtchouk { p } => {
                lb(n, x) + xf * p.ln() + (n - x) as f64 * (-p).ln_1p()
            }
            FamilyParams::Charlier { a } => xf * a.ln() - a - log_factorial(x),
            FamilyParams::Hahn { a, b } => lb(n, x) + lp(a, x) + lp(b, n - x) - lp(a + b, n),
            FamilyParams::Meixner { a, b } => {
                lp(a, x) + xf * b.ln() + a * (-b).ln_1p() - log_factorial(x)
            }
            FamilyParams::QHahn { a, b, q } => {
                let lqp = |c, k| q_pochhammer(c, q, k).log_magnitude();
                log_q_binomial(n, x, q).expect("x <= n checked above")
                    + lqp(a, x)
                    + lqp(b, n - x)
                    + (n - x) as f64 * a.ln()
                    - lqp(a * b, n)
            }
        }
    }

    pub fn weight(&self, x: usize, n: usize) -> f64 {
        self.log_weight(x, n).exp()
    }

    /// `ln d_deg²` on `{0..n}`.
    fn log_norm_sq(&self, deg: usize, n: usize) -> f64 {
        let lp = |a, k| log_pochhammer(a, k).log_magnitude();
        let df = deg as f64;
        match *self {
            FamilyParams::Krawtchouk { p } => {
                log_binomial(n, deg).expect("degree within lattice") + df * (p.ln() - (-p).ln_1p())
            }
            FamilyParams::Charlier { a } => df * a.ln() - log_factorial(deg),
            FamilyParams::Hahn { .. } | FamilyParams::QHahn { .. } if deg == 0 => 0.0,
            FamilyParams::Hahn { a, b } => {
                let s = a + b;
                log_binomial(n, deg).expect("degree within lattice")
                    + lp(a, deg)
                    + (2.0 * df + s - 1.0).ln()
                    + lp(s, n)
                    - lp(b, deg)
                    - (df + s - 1.0).ln()
                    - lp(df + s, n)
            }
            FamilyParams::Meixner { a, b } => lp(a, deg) + df * b.ln() - log_factorial(deg),
            FamilyParams::QHahn { a, b, q } => {
                // (ab/q; q)_n / (1 - ab/q) = (ab; q)_{n-1}, finite even at ab = q
                let lqp = |c, k| q_pochhammer(c, q, k).log_magnitude();
                let ab = a * b;
                log_q_binomial(n, deg, q).expect("degree within lattice")
                    + lqp(a, deg)
                    + lqp(ab, deg - 1)
                    + one_minus_power(ab, q, 2.0 * df - 1.0).ln()
                    - lqp(ab * q.powi(n as i32), deg)
                    - lqp(b, deg)
                    - df * a.ln()
            }
        }
    }

    fn polynomial_series(&self, deg: usize, x: usize, n: usize) -> Result<SeriesValue> {
        let (df, xf, nf) = (deg as f64, x as f64, n as f64);
        match *self {
            FamilyParams::Krawtchouk { p } => {
                hypergeometric_terminating_detailed(&[-df, -xf], &[-nf], 1.0 / p)
            }
            FamilyParams::Charlier { a } => {
                hypergeometric_terminating_detailed(&[-df, -xf], &[], -1.0 / a)
            }
            FamilyParams::Hahn { a, b } => {
                hypergeometric_terminating_detailed(&[-df, df + a + b - 1.0, -xf], &[a, -nf], 1.0)
            }
            FamilyParams::Meixner { a, b } => {
                hypergeometric_terminating_detailed(&[-df, -xf], &[a], 1.0 - 1.0 / b)
            }
            FamilyParams::QHahn { a, b, q } => phi32_terminating(
                [
                    QParam::Power(-(deg as i64)),
                    QParam::Value(a * b * q.powi(deg as i32 - 1)),
                    QParam::Power(-(x as i64)),
                ],
                [QParam::Value(a), QParam::Power(-(n as i64))],
                q,
                q,
            ),
        }
    }

    /// Coefficients `B(x)`, `D(x)` of the difference equation
    /// `B(x)(P(x) - P(x+1)) + D(x)(P(x) - P(x-1)) = E(n) P(x)`.
    fn birth_death(&self, x: usize, n: usize) -> (f64, f64) {
        let xf = x as f64;
        let nf = n as f64;
        match *self {
            FamilyParams::Krawtchouk { p } => (p * (nf - xf), (1.0 - p) * xf),
            FamilyParams::Charlier { a } => (a, xf),
            FamilyParams::Hahn { a, b } => ((xf + a) * (nf - xf), xf * (b + nf - xf)),
            FamilyParams::Meixner { a, b } => (b * (xf + a) / (1.0 - b), xf / (1.0 - b)),
            FamilyParams::QHahn { a, b, q } => {
                let lq = q.ln();
                let q_xn = ((xf - nf) * lq).exp();
                (
                    ((xf - nf) * lq).exp_m1() * -(a.ln() + xf * lq).exp_m1(),
                    a / q * -(xf * lq).exp_m1() * (q_xn - b),
                )
            }
        }
    }

    /// Eigenvalue `E(n)` of the difference operator.
    fn energy(&self, deg: usize) -> f64 {
        let df = deg as f64;
        match *self {
            FamilyParams::Krawtchouk { .. }
            | FamilyParams::Charlier { .. }
            | FamilyParams::Meixner { .. } => df,
            FamilyParams::Hahn { a, b } => df * (df + a + b - 1.0),
            FamilyParams::QHahn { a, b, q } => {
                (-df * q.ln()).exp_m1() * (1.0 - a * b * q.powi(deg as i32 - 1))
            }
        }
    }

    /// Orthonormal vectors `d_n √π(x) P_n(x)` for `x < rows`, `n < modes`,
    /// evaluated through the difference equation rather than the series.
    ///
    /// `n` is the lattice size parameter of finite families (`rows = n + 1`);
    /// for semi-infinite families the operator is cut at `rows`, which is
    /// accurate for modes whose mass lies well inside the window.
    fn orthonormal_modes(&self, n: usize, rows: usize, modes: usize) -> DMatrix<f64> {
        let bd: Vec<(f64, f64)> = (0..rows).map(|x| self.birth_death(x, n)).collect();
        // symmetrised operator = Gᵀ G with one bidiagonal row per edge x → x+1
        let d: Vec<f64> = bd.iter().map(|&(b, _)| b).collect();
        let l: Vec<f64> = (0..rows.saturating_sub(1))
            .map(|x| -(bd[x + 1].1 / bd[x].0).sqrt())
            .collect();
        let log_pi0 = self.log_weight(0, n);
        let mut phi = DMatrix::zeros(rows, modes);
        for deg in 0..modes {
            let v = eigenvector_log(&d, &l, self.energy(deg));
            let (l0, s0) = v[0];
            let shift = 0.5 * (self.log_norm_sq(deg, n) + log_pi0) - l0;
            for (x, &(l, s)) in v.iter().enumerate() {
                phi[(x, deg)] = f64::from(s * s0) * (l + shift).exp();
            }
        }
        phi
    }
}

/// A measure together with its lattice: `N` for finite families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilySpec {
    params: FamilyParams,
    n: Option<usize>,
}

impl FamilySpec {
    pub fn new(params: FamilyParams, n: Option<usize>) -> Result<Self> {
        params.validate()?;
        match (params.family().is_finite(), n) {
            (true, None) => Err(Error::Domain(format!(
                "{} is a finite family and needs N",
                params.family()
            ))),
            (false, Some(_)) => Err(Error::Domain(format!(
                "{} lives on the semi-infinite lattice and takes no N",
                params.family()
            ))),
            _ => Ok(Self { params, n }),
        }
    }

    pub fn finite(params: FamilyParams, n: usize) -> Result<Self> {
        Self::new(params, Some(n))
    }

    pub fn semi_infinite(params: FamilyParams) -> Result<Self> {
        Self::new(params, None)
    }

    pub fn params(&self) -> FamilyParams {
        self.params
    }

    pub fn family(&self) -> Family {
        self.params.family()
    }

    /// `N` for finite families.
    pub fn lattice_n(&self) -> Option<usize> {
        self.n
    }

    fn check_point(&self, x: usize, what: &str) -> Result<()> {
        match self.n {
            Some(n) if x > n => Err(Error::Domain(format!("{what} = {x} outside 0..={n}"))),
            _ => Ok(()),
        }
    }

    fn n_or_zero(&self) -> usize {
        self.n.unwrap_or(0)
    }

    pub fn log_measure(&self, x: usize) -> Result<f64> {
        self.check_point(x, "x")?;
        Ok(self.params.log_weight(x, self.n_or_zero()))
    }

    /// Normalised orthogonality measure `π(x)`.
    pub fn measure(&self, x: usize) -> Result<f64> {
        self.log_measure(x).map(f64::exp)
    }

    /// `P̌_n(x)` from its terminating series, normalised so `P̌_n(0) = 1`.
    pub fn polynomial(&self, deg: usize, x: usize) -> Result<f64> {
        self.polynomial_detailed(deg, x).map(|s| s.value)
    }

    /// Series value with its absolute-term sum (a cancellation measure).
    pub fn polynomial_detailed(&self, deg: usize, x: usize) -> Result<SeriesValue> {
        self.check_point(deg, "degree")?;
        self.check_point(x, "x")?;
        self.params.polynomial_series(deg, x, self.n_or_zero())
    }

    pub fn log_norm_constant_sq(&self, deg: usize) -> Result<f64> {
        self.check_point(deg, "degree")?;
        Ok(self.params.log_norm_sq(deg, self.n_or_zero()))
    }

    /// `d_n²` with `Σ_x π P̌_m P̌_n = δ_{mn} / d_n²`.
    pub fn norm_constant_sq(&self, deg: usize) -> Result<f64> {
        self.log_norm_constant_sq(deg).map(f64::exp)
    }

    /// Matrix of orthonormal vectors `φ̂_n(x) = d_n √π(x) P̌_n(x)`,
    /// `x < rows`, `n < modes`.
    ///
    /// Finite families require `rows = N + 1`.
    pub fn orthonormal_modes(&self, rows: usize, modes: usize) -> Result<DMatrix<f64>> {
        if let Some(n) = self.n {
            if rows != n + 1 || modes > n + 1 {
                return Err(Error::Domain(format!(
                    "finite lattice 0..={n} needs rows = {} and modes <= {}",
                    n + 1,
                    n + 1
                )));
            }
        }
        Ok(self.params.orthonormal_modes(self.n_or_zero(), rows, modes))
    }
}

fn fmt_param(f: &mut fmt::Formatter<'_>, name: &str, v: f64, first: bool) -> fmt::Result {
    if !first {
        f.write_str(",")?;
    }
    write!(f, "{name}={v:?}")
}

/// Canonical text form, e.g. `hahn:a=1.0,b=2.0,N=10`.
impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.family())?;
        match self.params {
            FamilyParams::Krawtchouk { p } => fmt_param(f, "p", p, true)?,
            FamilyParams::Charlier { a } => fmt_param(f, "a", a, true)?,
            FamilyParams::Hahn { a, b } | FamilyParams::Meixner { a, b } => {
                fmt_param(f, "a", a, true)?;
                fmt_param(f, "b", b, false)?;
            }
            FamilyParams::QHahn { a, b, q } => {
                fmt_param(f, "a", a, true)?;
                fmt_param(f, "b", b, false)?;
                fmt_param(f, "q", q, false)?;
            }
        }
        if let Some(n) = self.n {
            write!(f, ",N={n}")?;
        }
        Ok(())
    }
}

/// Collects `key=value` pairs, rejecting duplicates and unknown keys.
pub(crate) struct KeyValues<'a> {
    pairs: Vec<(&'a str, &'a str)>,
}

impl<'a> KeyValues<'a> {
    pub(crate) fn parse(items: impl Iterator<Item = &'a str>, allowed: &[&str]) -> Result<Self> {
        let mut pairs: Vec<(&str, &str)> = Vec::new();
        for item in items.filter(|s| !s.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got `{item}`")))?;
            if !allowed.contains(&k) {
                return Err(Error::Parse(format!(
                    "unknown key `{k}` (allowed: {})",
                    allowed.join(", ")
                )));
            }
            if pairs.iter().any(|(seen, _)| *seen == k) {
                return Err(Error::Parse(format!("duplicate key `{k}`")));
            }
            pairs.push((k, v));
        }
        Ok(Self { pairs })
    }

    pub(crate) fn raw(&self, key: &str) -> Option<&'a str> {
        self.pairs.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
    }

    pub(crate) fn real(&self, key: &str) -> Result<f64> {
        let v = self
            .raw(key)
            .ok_or_else(|| Error::Parse(format!("missing key `{key}`")))?;
        v.parse()
            .map_err(|_| Error::Parse(format!("`{key}={v}` is not a number")))
    }

    pub(crate) fn opt_real(&self, key: &str) -> Result<Option<f64>> {
        self.raw(key).map(|_| self.real(key)).transpose()
    }

    pub(crate) fn count(&self, key: &str) -> Result<Option<usize>> {
        self.raw(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| Error::Parse(format!("`{key}={v}` is not a lattice size")))
            })
            .transpose()
    }
}

impl FromStr for FamilySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (fam, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("expected family:key=value,..., got `{s}`")))?;
        let family: Family = fam.trim().parse()?;
        let allowed: &[&str] = match family {
            Family::Krawtchouk => &["p", "N"],
            Family::Charlier => &["a"],
            Family::Hahn => &["a", "b", "N"],
            Family::Meixner => &["a", "b"],
            Family::QHahn => &["a", "b", "q", "N"],
        };
        let kv = KeyValues::parse(rest.split(',').map(str::trim), allowed)?;
        let params = match family {
            Family::Krawtchouk => FamilyParams::Krawtchouk { p: kv.real("p")? },
            Family::Charlier => FamilyParams::Charlier { a: kv.real("a")? },
            Family::Hahn => FamilyParams::Hahn {
                a: kv.real("a")?,
                b: kv.real("b")?,
            },
            Family::Meixner => FamilyParams::Meixner {
                a: kv.real("a")?,
                b: kv.real("b")?,
            },
            Family::QHahn => FamilyParams::QHahn {
                a: kv.real("a")?,
                b: kv.real("b")?,
                q: kv.real("q")?,
            },
        };
        FamilySpec::new(params, kv.count("N")?)
    }
}

/// Convolution type of the kernel construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConvType {
    I,
    II,
    III,
}

impl ConvType {
    pub const ALL: [ConvType; 3] = [ConvType::I, ConvType::II, ConvType::III];

    pub fn roman(self) -> &'static str {
        match self {
            ConvType::I => "i",
            ConvType::II => "ii",
            ConvType::III => "iii",
        }
    }
}

impl fmt::Display for ConvType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.roman())
    }
}

impl FromStr for ConvType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "i" | "1" => Ok(ConvType::I),
            "ii" | "2" => Ok(ConvType::II),
            "iii" | "3" => Ok(ConvType::III),
            _ => Err(Error::Parse(format!("unknown convolution type `{s}`"))),
        }
    }
}

fn unsupported(family: Family, conv: ConvType, why: &str) -> Error {
    Error::Unsupported(format!("{family} type ({conv}): {why}"))
}

fn same(lhs: f64, rhs: f64, what: &str) -> Result<()> {
    require(lhs == rhs, || {
        format!("the two measures must share {what}: {lhs} != {rhs}")
    })
}

/// Stationary parameters `λ₃` of the kernel built from `λ₁` and `λ₂`.
///
/// Finite kernels convolve two measures of the same family; the
/// semi-infinite ones mix a finite measure with its limit family.
pub fn lambda3_map(
    conv: ConvType,
    lambda1: &FamilyParams,
    lambda2: &FamilyParams,
) -> Result<FamilyParams> {
    use FamilyParams as P;
    lambda1.validate()?;
    lambda2.validate()?;
    let out = match (conv, *lambda1, *lambda2) {
        (ConvType::I, P::Krawtchouk { p: a }, P::Krawtchouk { p: b }) => P::Krawtchouk {
            p: b / (1.0 - a + a * b),
        },
        (ConvType::II, P::Krawtchouk { p: a }, P::Krawtchouk { p: b }) => P::Krawtchouk {
            p: b / (1.0 - a + b),
        },
        (ConvType::III, P::Krawtchouk { p: a }, P::Krawtchouk { p: b }) => P::Krawtchouk {
            p: a * b / (1.0 - b + a * b),
        },
        (ConvType::I, P::Krawtchouk { p: a }, P::Charlier { a: b }) => {
            P::Charlier { a: b / (1.0 - a) }
        }
        (ConvType::III, P::Charlier { a }, P::Krawtchouk { p: b }) => P::Charlier {
            a: a * b / (1.0 - b),
        },
        (ConvType::I, P::Hahn { a, b }, P::Hahn { a: b2, b: c }) => {
            same(b, b2, "b")?;
            P::Hahn { a: a + b, b: c }
        }
        (ConvType::II, P::Hahn { a, b }, P::Hahn { a: b2, b: c }) => {
            same(b, b2, "b")?;
            P::Hahn { a: a + b, b: b + c }
        }
        (ConvType::III, P::Hahn { a, b }, P::Hahn { a: c, b: a2 }) => {
            same(a, a2, "a")?;
            P::Hahn { a: c, b: a + b }
        }
        (ConvType::I | ConvType::II, P::Hahn { a, b }, P::Meixner { a: b2, b: c }) => {
            same(b, b2, "b")?;
            P::Meixner { a: a + b, b: c }
        }
        (ConvType::III, P::Meixner { a, b }, P::Hahn { a: c, b: a2 }) => {
            same(a, a2, "a")?;
            P::Meixner { a: c, b }
        }
        (ConvType::I, P::QHahn { a, b, q }, P::QHahn { a: b2, b: c, q: q2 }) => {
            same(b, b2, "b")?;
            same(q, q2, "q")?;
            P::QHahn { a: a * b, b: c, q }
        }
        (ConvType::III, P::QHahn { a, b, q }, P::QHahn { a: c, b: a2, q: q2 }) => {
            same(a, a2, "a")?;
            same(q, q2, "q")?;
            P::QHahn { a: c, b: a * b, q }
        }
        (ConvType::II, P::QHahn { .. }, P::QHahn { .. }) => {
            return Err(unsupported(
                Family::QHahn,
                conv,
                "the type (ii) convolution does not exist for q-Hahn",
            ))
        }
        (conv, l1, l2) => {
            return Err(Error::Unsupported(format!(
                "no type ({conv}) kernel convolves {} with {}",
                l2.family(),
                l1.family()
            )))
        }
    };
    out.validate()?;
    Ok(out)
}

/// User-facing parameters of a kernel recipe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RecipeParams {
    Krawtchouk { a: f64, b: f64 },
    Charlier { a: f64, b: f64 },
    Hahn { a: f64, b: f64, c: f64 },
    Meixner { a: f64, b: f64, c: f64 },
    QHahn { a: f64, b: f64, c: f64, q: f64 },
}

impl RecipeParams {
    pub fn family(&self) -> Family {
        match self {
            RecipeParams::Krawtchouk { .. } => Family::Krawtchouk,
            RecipeParams::Charlier { .. } => Family::Charlier,
            RecipeParams::Hahn { .. } => Family::Hahn,
            RecipeParams::Meixner { .. } => Family::Meixner,
            RecipeParams::QHahn { .. } => Family::QHahn,
        }
    }
}

/// Everything needed to build one reversible kernel: the convolution type,
/// the two convolved measures `λ₁`, `λ₂` and the stationary `λ₃`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvolutionRecipe {
    conv_type: ConvType,
    params: RecipeParams,
    lambda1: FamilyParams,
    lambda2: FamilyParams,
    lambda3: FamilyParams,
}

impl ConvolutionRecipe {
    pub fn new(conv_type: ConvType, params: RecipeParams) -> Result<Self> {
        use FamilyParams as P;
        use RecipeParams as R;
        let (lambda1, lambda2) = match (params, conv_type) {
            (R::Krawtchouk { a, b }, _) => {
                require(in_unit(a) && in_unit(b), || {
                    format!("krawtchouk kernels need 0 < a, b < 1, got a = {a}, b = {b}")
                })?;
                (P::Krawtchouk { p: a }, P::Krawtchouk { p: b })
            }
            (R::Charlier { .. }, ConvType::II) => {
                return Err(unsupported(
                    Family::Charlier,
                    conv_type,
                    "the limit of the type (ii) kernel coincides with type (i); use type=i",
                ))
            }
            (R::Charlier { a, b }, ConvType::I) => {
                require(in_unit(a) && b > 0.0, || {
                    format!("charlier type (i) needs 0 < a < 1 and b > 0, got a = {a}, b = {b}")
                })?;
                (P::Krawtchouk { p: a }, P::Charlier { a: b })
            }
            (R::Charlier { a, b }, ConvType::III) => {
                require(a > 0.0 && in_unit(b), || {
                    format!("charlier type (iii) needs a > 0 and 0 < b < 1, got a = {a}, b = {b}")
                })?;
                (P::Charlier { a }, P::Krawtchouk { p: b })
            }
            (R::Hahn { a, b, c }, ConvType::I | ConvType::II) => {
                (P::Hahn { a, b }, P::Hahn { a: b, b: c })
            }
            (R::Hahn { a, b, c }, ConvType::III) => (P::Hahn { a, b }, P::Hahn { a: c, b: a }),
            (R::Meixner { a, b, c }, ConvType::I | ConvType::II) => {
                (P::Hahn { a, b }, P::Meixner { a: b, b: c })
            }
            (R::Meixner { a, b, c }, ConvType::III) => {
                (P::Meixner { a, b }, P::Hahn { a: c, b: a })
            }
            (R::QHahn { a, b, c, q }, ConvType::I | ConvType::II) => {
                (P::QHahn { a, b, q }, P::QHahn { a: b, b: c, q })
            }
            (R::QHahn { a, b, c, q }, ConvType::III) => {
                (P::QHahn { a, b, q }, P::QHahn { a: c, b: a, q })
            }
        };
        let lambda3 = lambda3_map(conv_type, &lambda1, &lambda2)?;
        Ok(Self {
            conv_type,
            params,
            lambda1,
            lambda2,
            lambda3,
        })
    }

    pub fn krawtchouk(conv: ConvType, a: f64, b: f64) -> Result<Self> {
        Self::new(conv, RecipeParams::Krawtchouk { a, b })
    }

    pub fn charlier(conv: ConvType, a: f64, b: f64) -> Result<Self> {
        Self::new(conv, RecipeParams::Charlier { a, b })
    }

    pub fn hahn(conv: ConvType, a: f64, b: f64, c: f64) -> Result<Self> {
        Self::new(conv, RecipeParams::Hahn { a, b, c })
    }

    pub fn meixner(conv: ConvType, a: f64, b: f64, c: f64) -> Result<Self> {
        Self::new(conv, RecipeParams::Meixner { a, b, c })
    }

    pub fn q_hahn(conv: ConvType, a: f64, b: f64, c: f64, q: f64) -> Result<Self> {
        Self::new(conv, RecipeParams::QHahn { a, b, c, q })
    }

    pub fn conv_type(&self) -> ConvType {
        self.conv_type
    }

    /// Summation pattern actually used to build the matrix. The Meixner
    /// type (ii) limit coincides with type (i).
    pub fn kernel_shape(&self) -> ConvType {
        match (self.family(), self.conv_type) {
            (Family::Meixner, ConvType::II) => ConvType::I,
            (_, t) => t,
        }
    }

    pub fn params(&self) -> RecipeParams {
        self.params
    }

    pub fn family(&self) -> Family {
        self.params.family()
    }

    pub fn lambda1(&self) -> FamilyParams {
        self.lambda1
    }

    pub fn lambda2(&self) -> FamilyParams {
        self.lambda2
    }

    /// Parameters of the stationary distribution.
    pub fn lambda3(&self) -> FamilyParams {
        self.lambda3
    }

    /// Eigenvalue `κ(n)`.
    pub fn kappa(&self, n: usize) -> f64 {
        match (self.params, self.kernel_shape()) {
            (RecipeParams::Hahn { a, b, c }, ConvType::II) => hahn_type2_kappas(a, b, c, n + 1)[n],
            _ => self.closed_form_kappa(n),
        }
    }

    /// `κ(0), …, κ(count - 1)`.
    pub fn kappas(&self, count: usize) -> Vec<f64> {
        match (self.params, self.kernel_shape()) {
            (RecipeParams::Hahn { a, b, c }, ConvType::II) => hahn_type2_kappas(a, b, c, count),
            _ => (0..count).map(|n| self.closed_form_kappa(n)).collect(),
        }
    }

    fn closed_form_kappa(&self, n: usize) -> f64 {
        use ConvType::*;
        use RecipeParams as R;
        let ni = n as i32;
        let poch = |x: f64| log_pochhammer(x, n);
        match (self.params, self.kernel_shape()) {
            (R::Krawtchouk { a, b }, I) => (a * (1.0 - b)).powi(ni),
            (R::Krawtchouk { a, b }, II) => (a - b).powi(ni),
            (R::Krawtchouk { a, b }, III) => ((1.0 - a) * b).powi(ni),
            (R::Charlier { a, .. }, I) => a.powi(ni),
            (R::Charlier { b, .. }, _) => b.powi(ni),
            (R::Hahn { a, b, c }, I) => (poch(a) * poch(c) / (poch(a + b) * poch(b + c))).value(),
            (R::Hahn { a, b, c }, III) => (poch(b) * poch(c) / (poch(a + b) * poch(a + c))).value(),
            (R::Meixner { a, b, .. }, I) => (poch(a) / poch(a + b)).value(),
            (R::Meixner { a, c, .. }, _) => (poch(c) / poch(a + c)).value(),
            (R::QHahn { a, b, c, q }, I) => {
                let qp = |x| q_pochhammer(x, q, n);
                b.powi(ni) * (qp(a) * qp(c) / (qp(a * b) * qp(b * c))).value()
            }
            (R::QHahn { a, b, c, q }, _) => {
                let qp = |x| q_pochhammer(x, q, n);
                a.powi(ni) * (qp(b) * qp(c) / (qp(a * b) * qp(a * c))).value()
            }
            (R::Hahn { .. }, II) => unreachable!("handled by the quadrature path"),
        }
    }
}

/// Hahn type (ii) eigenvalues `κ(n) = E[(T - S)^n]` with `T ~ Beta(a, b)`
/// and `S ~ Beta(b, c)` independent, for `n < count`.
///
/// The factorial moments of the two beta-binomial factors of the kernel
/// give this representation; it equals the `₃F₂(-n, n+a+2b+c-1, b; a+b,
/// b+c | 1)` form but has no cancellation, since every node pair
/// contributes at most its weight.
pub fn hahn_type2_kappas(a: f64, b: f64, c: f64, count: usize) -> Vec<f64> {
    let points = count / 2 + 1;
    let t = BetaQuadrature::new(a, b, points);
    let s = BetaQuadrature::new(b, c, points);
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(points * points);
    for (&ti, &wi) in t.nodes.iter().zip(&t.weights) {
        for (&sj, &wj) in s.nodes.iter().zip(&s.weights) {
            pairs.push((ti - sj, wi * wj));
        }
    }
    let mut out = Vec::with_capacity(count);
    let mut powers: Vec<f64> = vec![1.0; pairs.len()];
    for n in 0..count {
        if n == 0 {
            out.push(1.0);
        } else {
            for (pw, (d, _)) in powers.iter_mut().zip(&pairs) {
                *pw *= d;
            }
            out.push(powers.iter().zip(&pairs).map(|(pw, (_, w))| pw * w).sum());
        }
    }
    out
}

/// Hahn type (ii) `κ(n)` from its `₃F₂` series (double-double evaluation).
pub fn hahn_type2_kappa_series(a: f64, b: f64, c: f64, n: usize) -> Result<f64> {
    let nf = n as f64;
    crate::specfun::hypergeometric_terminating(
        &[-nf, nf + a + 2.0 * b + c - 1.0, b],
        &[a + b, b + c],
        1.0,
    )
}

/// Sup-norm distances of a family of measures from a limiting measure.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitReport {
    /// Value of the limit parameter (N or a) at each step.
    pub parameters: Vec<f64>,
    pub distances: Vec<f64>,
}

impl LimitReport {
    pub fn strictly_decreasing(&self) -> bool {
        self.distances.windows(2).all(|w| w[1] < w[0])
    }
}

fn sup_distance(window: usize, lhs: impl Fn(usize) -> f64, rhs: impl Fn(usize) -> f64) -> f64 {
    (0..=window)
        .map(|x| (lhs(x) - rhs(x)).abs())
        .fold(0.0, f64::max)
}

/// `π_K(·, N, p/N) → π_C(·, p)` as `N → ∞`.
pub fn limit_check_k_to_c(p: f64, ns: &[usize], window: usize) -> Result<LimitReport> {
    let target = FamilyParams::Charlier { a: p };
    target.validate()?;
    let mut distances = Vec::with_capacity(ns.len());
    for &n in ns {
        let k = FamilyParams::Krawtchouk { p: p / n as f64 };
        k.validate()?;
        distances.push(sup_distance(
            window,
            |x| k.weight(x, n),
            |x| target.weight(x, 0),
        ));
    }
    Ok(LimitReport {
        parameters: ns.iter().map(|&n| n as f64).collect(),
        distances,
    })
}

/// `π_H(·, N, a, N(1-b)/b) → π_M(·, a, b)` as `N → ∞`.
pub fn limit_check_h_to_m(a: f64, b: f64, ns: &[usize], window: usize) -> Result<LimitReport> {
    let target = FamilyParams::Meixner { a, b };
    target.validate()?;
    let mut distances = Vec::with_capacity(ns.len());
    for &n in ns {
        let h = FamilyParams::Hahn {
            a,
            b: n as f64 * (1.0 - b) / b,
        };
        h.validate()?;
        distances.push(sup_distance(
            window,
            |x| h.weight(x, n),
            |x| target.weight(x, 0),
        ));
    }
    Ok(LimitReport {
        parameters: ns.iter().map(|&n| n as f64).collect(),
        distances,
    })
}

/// `π_M(·, a, b/(a+b)) → π_C(·, b)` as `a → ∞`.
pub fn limit_check_m_to_c(b: f64, a_values: &[f64], window: usize) -> Result<LimitReport> {
    let target = FamilyParams::Charlier { a: b };
    target.validate()?;
    let mut distances = Vec::with_capacity(a_values.len());
    for &a in a_values {
        let m = FamilyParams::Meixner { a, b: b / (a + b) };
        m.validate()?;
        distances.push(sup_distance(
            window,
            |x| m.weight(x, 0),
            |x| target.weight(x, 0),
        ));
    }
    Ok(LimitReport {
        parameters: a_values.to_vec(),
        distances,
    })
}
