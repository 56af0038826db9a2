//! Convolution kernels, their stationary distributions and verification.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::{ConvType, ConvolutionRecipe, FamilyParams};

/// Default verification tolerance on finite lattices.
pub const FINITE_TOL: f64 = 1e-12;
/// Default verification tolerance on truncated lattices.
pub const TRUNCATED_TOL: f64 = 1e-10;

/// Lattice on which a kernel is materialised.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LatticeSpec {
    /// `{0, …, n}`.
    Finite { n: usize },
    /// `{0, …, m}` cut out of `Z≥0`; `tail_eps` bounds the stationary mass
    /// beyond `m`.
    Truncated { m: usize, tail_eps: f64 },
}

impl LatticeSpec {
    pub fn finite(n: usize) -> Self {
        LatticeSpec::Finite { n }
    }

    /// Smallest window whose stationary tail is certified below `tail_eps`.
    pub fn truncated(stationary: &FamilyParams, tail_eps: f64) -> Result<Self> {
        let m = truncation_cutoff(stationary, tail_eps)?;
        Ok(LatticeSpec::Truncated { m, tail_eps })
    }

    /// Window `{0..m}` with its certified tail bound.
    pub fn truncated_at(stationary: &FamilyParams, m: usize) -> Result<Self> {
        let tail_eps = tail_bound(stationary, m)?.exp();
        Ok(LatticeSpec::Truncated { m, tail_eps })
    }

    /// Number of retained points.
    pub fn size(&self) -> usize {
        match *self {
            LatticeSpec::Finite { n } => n + 1,
            LatticeSpec::Truncated { m, .. } => m + 1,
        }
    }

    pub fn is_truncated(&self) -> bool {
        matches!(self, LatticeSpec::Truncated { .. })
    }

    /// `N` of a finite lattice.
    pub fn finite_n(&self) -> Option<usize> {
        match *self {
            LatticeSpec::Finite { n } => Some(n),
            LatticeSpec::Truncated { .. } => None,
        }
    }

    pub fn default_tol(&self) -> f64 {
        if self.is_truncated() {
            TRUNCATED_TOL
        } else {
            FINITE_TOL
        }
    }
}

impl fmt::Display for LatticeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            LatticeSpec::Finite { n } => write!(f, "N={n}"),
            LatticeSpec::Truncated { m, tail_eps } => write!(f, "M={m} tail<={tail_eps:e}"),
        }
    }
}

/// Ratio `π(x+1)/π(x)` and its supremum over `[x, ∞)`.
fn tail_ratio(params: &FamilyParams, x: usize) -> Result<(f64, f64)> {
    let xf = x as f64;
    match *params {
        FamilyParams::Charlier { a } => {
            let r = a / (xf + 1.0);
            Ok((r, r))
        }
        FamilyParams::Meixner { a, b } => {
            let r = b * (a + xf) / (xf + 1.0);
            Ok((r, r.max(b)))
        }
        _ => Err(Error::Domain(format!(
            "{} is a finite family; truncation applies to charlier and meixner",
            params.family()
        ))),
    }
}

/// `ln` of a certified upper bound on `Σ_{x>m} π(x)`, or `+inf` while the
/// ratio bound is not yet geometric.
fn tail_bound(params: &FamilyParams, m: usize) -> Result<f64> {
    params.validate()?;
    let (_, sup) = tail_ratio(params, m + 1)?;
    if sup >= 1.0 {
        return Ok(f64::INFINITY);
    }
    Ok(params.log_weight(m + 1, 0) - (-sup).ln_1p())
}

/// Smallest `M` with `Σ_{x>M} π(x) ≤ tail_eps`, certified by the ratio test
/// `Σ_{x>M} π(x) ≤ π(M+1) / (1 - sup_{x>M} π(x+1)/π(x))`.
pub fn truncation_cutoff(params: &FamilyParams, tail_eps: f64) -> Result<usize> {
    if !(tail_eps > 0.0 && tail_eps <= 1e-6) {
        return Err(Error::Domain(format!(
            "tail_eps = {tail_eps} outside (0, 1e-6]"
        )));
    }
    tail_bound(params, 0)?;
    let target = tail_eps.ln();
    (0..1_000_000)
        .find(|&m| tail_bound(params, m).is_ok_and(|lb| lb <= target))
        .ok_or_else(|| Error::Domain(format!("no cutoff below 10^6 reaches tail {tail_eps:e}")))
}

/// Tabulated `π(x; n)` of one measure: one row per lattice size `n` for a
/// finite family, a single row for a semi-infinite one. Falls back to
/// direct evaluation outside the table.
pub(crate) struct MeasureTable {
    params: FamilyParams,
    finite: bool,
    rows: Vec<Vec<f64>>,
}

impl MeasureTable {
    pub(crate) fn new(params: FamilyParams, max_size: usize) -> Self {
        let finite = params.family().is_finite();
        let rows = if finite {
            (0..=max_size)
                .map(|n| (0..=n).map(|x| params.weight(x, n)).collect())
                .collect()
        } else {
            vec![(0..=max_size).map(|x| params.weight(x, 0)).collect()]
        };
        Self {
            params,
            finite,
            rows,
        }
    }

    /// `π(x; n)`; `n` is ignored by semi-infinite families.
    pub(crate) fn get(&self, x: usize, n: Option<usize>) -> f64 {
        let row = if self.finite {
            n.expect("finite measure evaluated without a lattice size")
        } else {
            0
        };
        match self.rows.get(row).and_then(|r| r.get(x)) {
            Some(&v) => v,
            None => self.params.weight(x, row),
        }
    }
}

/// Column `y` of a type (i) kernel:
/// `K(x,y) = Σ_{z=0}^{min(x,y)} π₂(x-z; N-z) π₁(z; y)`.
fn column_type1(
    pi2: &MeasureTable,
    pi1: &MeasureTable,
    n: Option<usize>,
    size: usize,
    y: usize,
) -> Vec<f64> {
    (0..size)
        .map(|x| {
            (0..=x.min(y))
                .map(|z| pi2.get(x - z, n.map(|n| n - z)) * pi1.get(z, Some(y)))
                .sum()
        })
        .collect()
}

/// Column `y` of a type (ii) kernel:
/// `K(x,y) = Σ_{z=max(0,x+y-N)}^{min(x,y)} π₂(x-z; N-y) π₁(z; y)`.
fn column_type2(pi2: &MeasureTable, pi1: &MeasureTable, n: usize, y: usize) -> Vec<f64> {
    (0..=n)
        .map(|x| {
            ((x + y).saturating_sub(n)..=x.min(y))
                .map(|z| pi2.get(x - z, Some(n - y)) * pi1.get(z, Some(y)))
                .sum()
        })
        .collect()
}

/// Maximum number of terms of an unbounded type (iii) sum.
const MAX_TAIL_TERMS: usize = 100_000;

/// Column `y` of a type (iii) kernel:
/// `K(x,y) = Σ_{z=max(x,y)}^{N or ∞} π₂(x; z) π₁(z-y; N-y)`.
///
/// Unbounded sums stop once three consecutive terms fall below `1e-16` of
/// the partial sum while decreasing.
fn column_type3(
    pi2: &MeasureTable,
    pi1: &MeasureTable,
    n: Option<usize>,
    size: usize,
    y: usize,
) -> Result<Vec<f64>> {
    (0..size)
        .map(|x| {
            let term = |z: usize| pi2.get(x, Some(z)) * pi1.get(z - y, n.map(|n| n - y));
            let start = x.max(y);
            match n {
                Some(n) => Ok((start..=n).map(term).sum()),
                None => {
                    let mut sum = 0.0;
                    let mut prev = f64::INFINITY;
                    let mut small = 0;
                    for z in start..start + MAX_TAIL_TERMS {
                        let t = term(z);
                        sum += t;
                        if t <= 1e-16 * sum && t <= prev {
                            small += 1;
                            if small == 3 {
                                return Ok(sum);
                            }
                        } else {
                            small = 0;
                        }
                        prev = t;
                    }
                    Err(Error::Domain(format!(
                        "type (iii) sum at (x={x}, y={y}) did not converge in {MAX_TAIL_TERMS} terms"
                    )))
                }
            }
        })
        .collect()
}

/// Dense type (i) kernel on `size` points; `n` is `N` for finite lattices.
pub(crate) fn build_type1(
    pi2: &MeasureTable,
    pi1: &MeasureTable,
    n: Option<usize>,
    size: usize,
) -> DMatrix<f64> {
    let cols: Vec<Vec<f64>> = (0..size)
        .into_par_iter()
        .map(|y| column_type1(pi2, pi1, n, size, y))
        .collect();
    DMatrix::from_fn(size, size, |x, y| cols[y][x])
}

/// Dense type (ii) kernel on `{0..n}`.
pub(crate) fn build_type2(pi2: &MeasureTable, pi1: &MeasureTable, n: usize) -> DMatrix<f64> {
    let cols: Vec<Vec<f64>> = (0..=n)
        .into_par_iter()
        .map(|y| column_type2(pi2, pi1, n, y))
        .collect();
    DMatrix::from_fn(n + 1, n + 1, |x, y| cols[y][x])
}

/// Dense type (iii) kernel on `size` points.
pub(crate) fn build_type3(
    pi2: &MeasureTable,
    pi1: &MeasureTable,
    n: Option<usize>,
    size: usize,
) -> Result<DMatrix<f64>> {
    let cols: Vec<Vec<f64>> = (0..size)
        .into_par_iter()
        .map(|y| column_type3(pi2, pi1, n, size, y))
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_fn(size, size, |x, y| cols[y][x]))
}

/// A reversible kernel `K(x,y)` (column-stochastic: `Σ_x K(x,y) = 1`)
/// together with its stationary distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvolutionKernel {
    matrix: DMatrix<f64>,
    pi: DVector<f64>,
    recipe: ConvolutionRecipe,
    lattice: LatticeSpec,
}

impl ConvolutionKernel {
    /// Builds the kernel of `recipe` on `lattice`.
    ///
    /// On a truncated lattice, moves that would leave the window are
    /// rejected: their probability `Σ_{x>M} K(x,y)` is put back on the
    /// diagonal. The result stays column-stochastic and reversible with
    /// respect to the restricted `π`.
    pub fn build(recipe: &ConvolutionRecipe, lattice: LatticeSpec) -> Result<Self> {
        let family = recipe.family();
        match (family.is_finite(), lattice) {
            (true, LatticeSpec::Truncated { .. }) => {
                return Err(Error::Domain(format!(
                    "{family} kernels live on a finite lattice; give N"
                )))
            }
            (false, LatticeSpec::Finite { .. }) => {
                return Err(Error::Domain(format!(
                    "{family} kernels live on the semi-infinite lattice; give a tail bound"
                )))
            }
            _ => {}
        }
        if let LatticeSpec::Truncated { m, tail_eps } = lattice {
            if !(tail_eps > 0.0 && tail_eps < 1.0) || m == usize::MAX {
                return Err(Error::Domain(format!(
                    "invalid truncation M={m}, tail={tail_eps}"
                )));
            }
        }
        let size = lattice.size();
        let n = lattice.finite_n();
        let pi1 = MeasureTable::new(recipe.lambda1(), 2 * size + 64);
        let pi2 = MeasureTable::new(recipe.lambda2(), 2 * size + 64);
        let mut matrix = match recipe.kernel_shape() {
            ConvType::I => build_type1(&pi2, &pi1, n, size),
            ConvType::II => build_type2(
                &pi2,
                &pi1,
                n.expect("type (ii) kernels exist on finite lattices only"),
            ),
            ConvType::III => build_type3(&pi2, &pi1, n, size)?,
        };
        if lattice.is_truncated() {
            for y in 0..size {
                // a column summing to 1 + ulp must not push a tiny diagonal negative
                let leak = (1.0 - matrix.column(y).sum()).max(0.0);
                matrix[(y, y)] += leak;
            }
        }
        let stationary = recipe.lambda3();
        let pi = DVector::from_iterator(
            size,
            (0..size).map(|x| stationary.weight(x, n.unwrap_or(0))),
        );
        Ok(Self {
            matrix,
            pi,
            recipe: *recipe,
            lattice,
        })
    }

    /// Assembles a kernel from explicit parts, e.g. for fault injection or
    /// for testing an alternative stationary distribution.
    pub fn from_parts(
        matrix: DMatrix<f64>,
        pi: DVector<f64>,
        recipe: ConvolutionRecipe,
        lattice: LatticeSpec,
    ) -> Result<Self> {
        let size = lattice.size();
        if matrix.nrows() != size || matrix.ncols() != size || pi.len() != size {
            return Err(Error::Contract(format!(
                "kernel parts do not match lattice size {size}"
            )));
        }
        Ok(Self {
            matrix,
            pi,
            recipe,
            lattice,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn pi(&self) -> &DVector<f64> {
        &self.pi
    }

    pub fn recipe(&self) -> &ConvolutionRecipe {
        &self.recipe
    }

    pub fn lattice(&self) -> LatticeSpec {
        self.lattice
    }

    pub fn size(&self) -> usize {
        self.lattice.size()
    }

    pub fn into_parts(self) -> (DMatrix<f64>, DVector<f64>) {
        (self.matrix, self.pi)
    }
}

/// Outcome of [`verify_kernel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelReport {
    /// `max_y |Σ_x K(x,y) - 1|`.
    pub max_stochastic_violation: f64,
    /// `max |K(x,y)π(y) - K(y,x)π(x)|` relative to the largest flux `K(x,y)π(y)`.
    pub max_reversibility_violation: f64,
    /// All entries positive (finite lattices) or nonnegative with a positive
    /// diagonal (truncated lattices).
    pub positivity: bool,
    pub tol: f64,
    pub passed: bool,
}

/// Checks stochasticity, detailed balance and positivity. Never fails; the
/// report carries the verdict.
pub fn verify_kernel(kernel: &ConvolutionKernel, tol: f64) -> KernelReport {
    let k = kernel.matrix();
    let pi = kernel.pi();
    let size = k.nrows();
    let max_stochastic_violation = (0..size)
        .map(|y| (k.column(y).sum() - 1.0).abs())
        .fold(0.0, f64::max);
    let mut max_flux: f64 = 0.0;
    let mut max_gap: f64 = 0.0;
    for y in 0..size {
        for x in 0..size {
            let f = k[(x, y)] * pi[y];
            max_flux = max_flux.max(f.abs());
            if x < y {
                max_gap = max_gap.max((f - k[(y, x)] * pi[x]).abs());
            }
        }
    }
    let max_reversibility_violation = if max_flux > 0.0 {
        max_gap / max_flux
    } else {
        max_gap
    };
    let positivity = if kernel.lattice().is_truncated() {
        k.iter().all(|&v| v >= 0.0) && (0..size).all(|i| k[(i, i)] > 0.0)
    } else {
        k.iter().all(|&v| v > 0.0)
    };
    let finite = |v: f64| v.is_finite();
    let passed = finite(max_stochastic_violation)
        && finite(max_reversibility_violation)
        && max_stochastic_violation <= tol
        && max_reversibility_violation <= tol
        && positivity;
    KernelReport {
        max_stochastic_violation,
        max_reversibility_violation,
        positivity,
        tol,
        passed,
    }
}

/// Expected stationary mass that the untruncated chain would move out of the
/// window in one step: `Σ_y π(y) Σ_{x>M} K(x,y) ≤ Σ_{x>M} π(x)`.
///
/// Rows just outside the window are summed explicitly; beyond them the
/// stationary tail bound caps the rest, so the value is an upper estimate
/// free of the `1 - Σ` cancellation.
pub fn stationary_leakage(kernel: &ConvolutionKernel) -> f64 {
    if !kernel.lattice().is_truncated() {
        return 0.0;
    }
    let recipe = kernel.recipe();
    let size = kernel.size();
    let ext = 2 * size + 64;
    let pi1 = MeasureTable::new(recipe.lambda1(), ext);
    let pi2 = MeasureTable::new(recipe.lambda2(), ext);
    let column = |y| match recipe.kernel_shape() {
        ConvType::I => Ok(column_type1(&pi2, &pi1, None, ext, y)),
        _ => column_type3(&pi2, &pi1, None, ext, y),
    };
    let mut direct = 0.0;
    for y in 0..size {
        match column(y) {
            Ok(col) => direct += kernel.pi()[y] * col[size..].iter().sum::<f64>(),
            Err(_) => return f64::INFINITY,
        }
    }
    let rest = tail_bound(&recipe.lambda3(), ext - 1).map_or(f64::INFINITY, f64::exp);
    direct + rest
}
