//! Symmetric Hamiltonian of a kernel, its analytic eigensystem and the dense
//! numeric cross-check.

use nalgebra::{DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};
use crate::families::{ConvolutionRecipe, FamilySpec};
use crate::markov::{ConvolutionKernel, LatticeSpec};

/// Largest asymmetry accepted by [`numeric_spectrum`].
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Modes of a truncated lattice are kept while their weight beyond the
/// window stays below this amplitude.
pub const CERTIFY_AMPLITUDE: f64 = 1e-11;

/// `H(x,y) = K(x,y) √(π(y)/π(x))`, symmetrised.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalHamiltonian {
    pub matrix: DMatrix<f64>,
    pub sqrt_pi: DVector<f64>,
    /// `max |H - Hᵀ|` before symmetrisation.
    pub asymmetry: f64,
}

pub fn classical_hamiltonian(kernel: &ConvolutionKernel) -> Result<ClassicalHamiltonian> {
    let pi = kernel.pi();
    if let Some(x) = pi.iter().position(|&p| p.is_nan() || p <= 0.0) {
        return Err(Error::Domain(format!("π({x}) = {} is not positive", pi[x])));
    }
    let sqrt_pi = pi.map(f64::sqrt);
    let k = kernel.matrix();
    let raw = DMatrix::from_fn(k.nrows(), k.ncols(), |x, y| {
        k[(x, y)] * sqrt_pi[y] / sqrt_pi[x]
    });
    let asymmetry = (&raw - raw.transpose()).amax();
    let matrix = (&raw + raw.transpose()) * 0.5;
    Ok(ClassicalHamiltonian {
        matrix,
        sqrt_pi,
        asymmetry,
    })
}

/// Dense symmetric eigendecomposition with a finiteness check.
///
/// nalgebra's implicit QR can return `inf`/`NaN` at its default threshold
/// on matrices with many exactly zero rows (reduced density matrices,
/// particle-number-blocked operators); such cases are retried at a
/// slightly looser threshold.
pub(crate) fn symmetric_eigen(m: DMatrix<f64>) -> Result<SymmetricEigen<f64, Dyn>> {
    let finite = |e: &SymmetricEigen<f64, Dyn>| {
        e.eigenvalues
            .iter()
            .chain(e.eigenvectors.iter())
            .all(|v| v.is_finite())
    };
    let eig = SymmetricEigen::new(m.clone());
    if finite(&eig) {
        return Ok(eig);
    }
    SymmetricEigen::try_new(m, 4.0 * f64::EPSILON, 0)
        .filter(finite)
        .ok_or_else(|| Error::Contract("symmetric eigensolver did not converge".into()))
}

/// Full spectrum of a symmetric matrix, sorted descending.
pub fn numeric_spectrum(h: &DMatrix<f64>) -> Result<Vec<f64>> {
    Ok(numeric_eigensystem(h)?.0)
}

/// Eigenvalues (descending) and matching orthonormal eigenvectors.
pub fn numeric_eigensystem(h: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    if !h.is_square() {
        return Err(Error::Contract("matrix is not square".into()));
    }
    let asym = (h - h.transpose()).amax();
    if asym > SYMMETRY_TOL {
        return Err(Error::Contract(format!(
            "matrix asymmetry {asym:e} exceeds {SYMMETRY_TOL:e}"
        )));
    }
    let eig = symmetric_eigen(h.clone())?;
    let mut order: Vec<usize> = (0..h.nrows()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(h.nrows(), h.nrows(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Largest deviation between the analytic eigenvalues and the numeric
/// spectrum. Equal lengths are compared as sorted multisets; a shorter
/// analytic list is matched greedily against distinct numeric values.
pub fn spectrum_mismatch(analytic: &[f64], numeric: &[f64]) -> f64 {
    let mut a = analytic.to_vec();
    a.sort_by(|x, y| y.total_cmp(x));
    let mut b = numeric.to_vec();
    b.sort_by(|x, y| y.total_cmp(x));
    if a.len() == b.len() {
        return a
            .iter()
            .zip(&b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
    }
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let best = (0..b.len())
            .filter(|&j| !used[j])
            .min_by(|&i, &j| (b[i] - x).abs().total_cmp(&(b[j] - x).abs()));
        match best {
            Some(j) => {
                used[j] = true;
                worst = worst.max((b[j] - x).abs());
            }
            None => return f64::INFINITY,
        }
    }
    worst
}

/// Kernel, Hamiltonian and analytic eigenpairs `(κ(n), φ̂_n)`.
///
/// On finite lattices every mode is present. On truncated lattices only
/// the leading modes whose weight outside the window is below
/// [`CERTIFY_AMPLITUDE`] are kept.
#[derive(Debug, Clone)]
pub struct SpectralSystem {
    kernel: ConvolutionKernel,
    hamiltonian: ClassicalHamiltonian,
    kappas: Vec<f64>,
    phi: DMatrix<f64>,
    complete_rows: usize,
}

impl SpectralSystem {
    pub fn analytic(recipe: &ConvolutionRecipe, lattice: LatticeSpec) -> Result<Self> {
        let kernel = ConvolutionKernel::build(recipe, lattice)?;
        Self::from_kernel(kernel)
    }

    /// Analytic eigensystem attached to an already built kernel.
    pub fn from_kernel(kernel: ConvolutionKernel) -> Result<Self> {
        let hamiltonian = classical_hamiltonian(&kernel)?;
        let recipe = *kernel.recipe();
        let size = kernel.size();
        let (phi, complete_rows) = match kernel.lattice() {
            LatticeSpec::Finite { n } => {
                let spec = FamilySpec::finite(recipe.lambda3(), n)?;
                (spec.orthonormal_modes(size, size)?, size)
            }
            LatticeSpec::Truncated { .. } => {
                let spec = FamilySpec::semi_infinite(recipe.lambda3())?;
                let padded = 2 * size + 40;
                let full = spec.orthonormal_modes(padded, size)?;
                let outside =
                    |col: usize, from: usize| full.view((from, col), (padded - from, 1)).norm();
                let cert = (0..size)
                    .take_while(|&n| outside(n, size) <= CERTIFY_AMPLITUDE)
                    .count();
                // self-dual families: Σ_{n≥cert} φ̂_n(x)² = Σ_{r≥cert} φ̂_x(r)²
                let complete = (0..cert)
                    .take_while(|&x| outside(x, cert) <= CERTIFY_AMPLITUDE)
                    .count();
                (full.view((0, 0), (size, cert)).into_owned(), complete)
            }
        };
        let kappas = recipe.kappas(phi.ncols());
        Ok(Self {
            kernel,
            hamiltonian,
            kappas,
            phi,
            complete_rows,
        })
    }

    pub fn kernel(&self) -> &ConvolutionKernel {
        &self.kernel
    }

    pub fn hamiltonian(&self) -> &DMatrix<f64> {
        &self.hamiltonian.matrix
    }

    pub fn sqrt_pi(&self) -> &DVector<f64> {
        &self.hamiltonian.sqrt_pi
    }

    /// Asymmetry of `H` before symmetrisation.
    pub fn asymmetry(&self) -> f64 {
        self.hamiltonian.asymmetry
    }

    /// `κ(n)` of the retained modes.
    pub fn kappas(&self) -> &[f64] {
        &self.kappas
    }

    /// Columns `φ̂_n`, one per retained mode.
    pub fn phi(&self) -> &DMatrix<f64> {
        &self.phi
    }

    pub fn size(&self) -> usize {
        self.kernel.size()
    }

    /// Number of retained analytic modes.
    pub fn mode_count(&self) -> usize {
        self.phi.ncols()
    }

    pub fn is_complete(&self) -> bool {
        self.mode_count() == self.size()
    }

    /// `‖H‖_∞` (maximum absolute row sum).
    pub fn h_norm_inf(&self) -> f64 {
        let h = self.hamiltonian();
        (0..h.nrows())
            .map(|r| h.row(r).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `‖H φ̂_n - κ(n) φ̂_n‖_∞` for each retained mode.
    pub fn residuals(&self) -> Vec<f64> {
        let hp = self.hamiltonian() * &self.phi;
        (0..self.mode_count())
            .map(|n| (hp.column(n) - self.phi.column(n) * self.kappas[n]).amax())
            .collect()
    }

    /// `max |ΦᵀΦ - I|` over the retained modes.
    pub fn orthonormality_defect(&self) -> f64 {
        let m = self.mode_count();
        (self.phi.transpose() * &self.phi - DMatrix::identity(m, m)).amax()
    }

    /// `max |Σ_n φ̂_n(x) φ̂_n(y) - δ_xy|` over the rows where the retained
    /// modes are complete (all rows on a finite lattice).
    pub fn completeness_defect(&self) -> f64 {
        let r = self.complete_rows;
        let rows = self.phi.view((0, 0), (r, self.mode_count()));
        (rows * rows.transpose() - DMatrix::identity(r, r)).amax()
    }

    /// Rows over which [`Self::completeness_defect`] is measured.
    pub fn complete_rows(&self) -> usize {
        self.complete_rows
    }

    /// Dense spectrum of `H`, descending.
    pub fn numeric_spectrum(&self) -> Result<Vec<f64>> {
        numeric_spectrum(self.hamiltonian())
    }

    /// `1 - max_{n≥1} |κ(n)|` over the lattice modes.
    pub fn spectral_gap(&self) -> f64 {
        let count = match self.kernel.lattice() {
            LatticeSpec::Finite { n } => n + 1,
            LatticeSpec::Truncated { .. } => self.mode_count().max(2),
        };
        let kappas = self.kernel.recipe().kappas(count);
        1.0 - kappas[1..].iter().map(|k| k.abs()).fold(0.0, f64::max)
    }
}
