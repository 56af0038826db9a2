//! Free fermions hopping with the classical Hamiltonian: mode energies,
//! ground-state correlations and block entanglement entropy.

use std::ops::Range;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::spectral::{numeric_eigensystem, symmetric_eigen, SpectralSystem};

/// Largest lattice for which 2^size many-body objects are built.
pub const MANY_BODY_CAP: usize = 12;

/// Entropy eigenvalues are clamped to `[ENTROPY_CLAMP, 1 - ENTROPY_CLAMP]`.
pub const ENTROPY_CLAMP: f64 = 1e-12;

/// Single-particle data of `H_f = Σ_n ε_n ĉ_n† ĉ_n` and a filling.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeFermionModel {
    energies: Vec<f64>,
    modes: DMatrix<f64>,
    filled: Vec<usize>,
    mu: f64,
    analytic: bool,
}

impl FreeFermionModel {
    /// Model with the default filling `{n : ε_n < mu}`.
    ///
    /// Complete analytic eigensystems (finite lattices) supply `κ(n)` and
    /// `φ̂_n`; otherwise the modes come from a dense diagonalisation of the
    /// truncated Hamiltonian.
    pub fn new(spectral: &SpectralSystem, mu: f64) -> Result<Self> {
        let (energies, modes, analytic) = if spectral.is_complete() {
            (spectral.kappas().to_vec(), spectral.phi().clone(), true)
        } else {
            let (e, v) = numeric_eigensystem(spectral.hamiltonian())?;
            (e, v, false)
        };
        Ok(Self::from_modes(energies, modes, mu, analytic))
    }

    fn from_modes(energies: Vec<f64>, modes: DMatrix<f64>, mu: f64, analytic: bool) -> Self {
        let filled = (0..energies.len()).filter(|&n| energies[n] < mu).collect();
        Self {
            energies,
            modes,
            filled,
            mu,
            analytic,
        }
    }

    /// Model of an arbitrary symmetric single-particle matrix.
    pub fn from_hamiltonian(h: &DMatrix<f64>, mu: f64) -> Result<Self> {
        let (e, v) = numeric_eigensystem(h)?;
        Ok(Self::from_modes(e, v, mu, false))
    }

    /// Replaces the default filling by an explicit set of mode indices.
    pub fn with_filled(mut self, filled: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut set: Vec<usize> = filled.into_iter().collect();
        set.sort_unstable();
        set.dedup();
        if let Some(&bad) = set.iter().find(|&&n| n >= self.size()) {
            return Err(Error::Domain(format!(
                "mode {bad} outside 0..{}",
                self.size()
            )));
        }
        self.filled = set;
        Ok(self)
    }

    pub fn size(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Orthonormal mode vectors, one column per energy.
    pub fn modes(&self) -> &DMatrix<f64> {
        &self.modes
    }

    pub fn filled(&self) -> &[usize] {
        &self.filled
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Whether the modes are the closed-form `φ̂_n`.
    pub fn is_analytic(&self) -> bool {
        self.analytic
    }

    /// `Σ_{n filled} ε_n`.
    pub fn filled_energy(&self) -> f64 {
        self.filled.iter().map(|&n| self.energies[n]).sum()
    }

    /// `C(x,y) = Σ_{n filled} φ_n(x) φ_n(y)`.
    pub fn correlation_matrix(&self) -> CorrelationMatrix {
        let size = self.modes.nrows();
        let mut c = DMatrix::zeros(size, size);
        for &n in &self.filled {
            let v = self.modes.column(n);
            c += v * v.transpose();
        }
        CorrelationMatrix { matrix: c }
    }
}

/// Ground-state two-point function `⟨c_x† c_y⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    matrix: DMatrix<f64>,
}

impl CorrelationMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    /// `max |C² - C|`.
    pub fn idempotency_defect(&self) -> f64 {
        (&self.matrix * &self.matrix - &self.matrix).amax()
    }

    /// Eigenvalues of the principal submatrix on `block`.
    pub fn block_eigenvalues(&self, block: Range<usize>) -> Result<Vec<f64>> {
        if block.end > self.size() || block.start > block.end {
            return Err(Error::Domain(format!(
                "block {}..{} outside 0..{}",
                block.start,
                block.end,
                self.size()
            )));
        }
        let len = block.end - block.start;
        if len == 0 {
            return Ok(Vec::new());
        }
        let sub = self
            .matrix
            .view((block.start, block.start), (len, len))
            .into_owned();
        Ok(symmetric_eigen(sub)?.eigenvalues.iter().copied().collect())
    }
}

fn binary_entropy(p: f64) -> f64 {
    let p = p.clamp(ENTROPY_CLAMP, 1.0 - ENTROPY_CLAMP);
    -(p * p.ln() + (1.0 - p) * (-p).ln_1p())
}

/// Entanglement entropy of the contiguous `block` from the eigenvalues of
/// the restricted correlation matrix.
pub fn block_entropy(c: &CorrelationMatrix, block: Range<usize>) -> Result<f64> {
    Ok(c.block_eigenvalues(block)?
        .into_iter()
        .map(binary_entropy)
        .sum())
}

/// All `2^size` many-body energies `Σ_{n∈S} ε_n`, ascending.
pub fn many_body_energies(model: &FreeFermionModel, max_size: usize) -> Result<Vec<f64>> {
    let cap = max_size.min(MANY_BODY_CAP);
    let size = model.size();
    if size > cap {
        return Err(Error::SizeCap { size, cap });
    }
    let e = model.energies();
    let mut out: Vec<f64> = (0u32..1 << size)
        .map(|s| (0..size).filter(|&n| s >> n & 1 == 1).map(|n| e[n]).sum())
        .collect();
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// Brute-force Fock-space construction used to check the single-particle
/// results. Site `x` is bit `x` of the basis index, and `c_x` carries the
/// string `(-1)^{#occupied sites below x}`.
pub mod jordan_wigner {
    use nalgebra::{DMatrix, DVector};

    use super::MANY_BODY_CAP;
    use crate::error::{Error, Result};
    use crate::spectral::symmetric_eigen;

    fn check(size: usize) -> Result<()> {
        if size > MANY_BODY_CAP {
            Err(Error::SizeCap {
                size,
                cap: MANY_BODY_CAP,
            })
        } else {
            Ok(())
        }
    }

    fn string_sign(state: usize, x: usize) -> f64 {
        if (state & ((1 << x) - 1)).count_ones().is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }

    /// Dense `c_x` on `size` sites.
    pub fn annihilation(size: usize, x: usize) -> Result<DMatrix<f64>> {
        check(size)?;
        if x >= size {
            return Err(Error::Domain(format!("site {x} outside 0..{size}")));
        }
        let dim = 1 << size;
        let mut c = DMatrix::zeros(dim, dim);
        for s in (0..dim).filter(|s| s >> x & 1 == 1) {
            c[(s ^ (1 << x), s)] = string_sign(s, x);
        }
        Ok(c)
    }

    /// Dense `c_x†`.
    pub fn creation(size: usize, x: usize) -> Result<DMatrix<f64>> {
        annihilation(size, x).map(|c| c.transpose())
    }

    /// `H_f = Σ_{x,y} H(x,y) c_x† c_y` as a dense `2^size` matrix.
    pub fn many_body_hamiltonian(h: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let size = h.nrows();
        check(size)?;
        let dim = 1 << size;
        let mut hf = DMatrix::zeros(dim, dim);
        for s in 0..dim {
            for y in (0..size).filter(|&y| s >> y & 1 == 1) {
                let t = s ^ (1 << y);
                let sy = string_sign(s, y);
                for x in (0..size).filter(|&x| t >> x & 1 == 0) {
                    hf[(t | (1 << x), s)] += h[(x, y)] * sy * string_sign(t, x);
                }
            }
        }
        Ok(hf)
    }

    /// Full many-body spectrum of `H_f`, ascending.
    pub fn oracle_spectrum(h: &DMatrix<f64>) -> Result<Vec<f64>> {
        let hf = many_body_hamiltonian(h)?;
        let mut e: Vec<f64> = symmetric_eigen(hf)?.eigenvalues.iter().copied().collect();
        e.sort_by(f64::total_cmp);
        Ok(e)
    }

    /// Ground state of `H_f - mu N̂`, found sector by sector in particle
    /// number. Returns the energy of `H_f - mu N̂` and the state.
    pub fn ground_state(h: &DMatrix<f64>, mu: f64) -> Result<(f64, DVector<f64>)> {
        let size = h.nrows();
        let hf = many_body_hamiltonian(h)?;
        let dim = 1 << size;
        let mut best: Option<(f64, DVector<f64>)> = None;
        for k in 0..=size {
            let basis: Vec<usize> = (0..dim)
                .filter(|s: &usize| s.count_ones() as usize == k)
                .collect();
            let m = basis.len();
            let sector = DMatrix::from_fn(m, m, |i, j| hf[(basis[i], basis[j])]);
            let eig = symmetric_eigen(sector)?;
            let (i0, e0) = eig
                .eigenvalues
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, &e)| (i, e - mu * k as f64))
                .expect("sector is never empty");
            if best.as_ref().is_none_or(|(e, _)| e0 < *e) {
                let mut psi = DVector::zeros(dim);
                for (i, &s) in basis.iter().enumerate() {
                    psi[s] = eig.eigenvectors[(i, i0)];
                }
                best = Some((e0, psi));
            }
        }
        Ok(best.expect("at least the vacuum sector"))
    }

    /// Von Neumann entropy of the sites `block` (contiguous) in the pure
    /// state `psi`, by explicit partial trace.
    pub fn reduced_density_entropy(
        psi: &DVector<f64>,
        size: usize,
        block: std::ops::Range<usize>,
    ) -> Result<f64> {
        check(size)?;
        if psi.len() != 1 << size || block.end > size || block.start > block.end {
            return Err(Error::Domain(
                "state or block does not match the lattice".into(),
            ));
        }
        let len = block.end - block.start;
        if len == 0 {
            return Ok(0.0);
        }
        let rest = size - len;
        let mask = (1usize << len) - 1;
        let low = (1usize << block.start) - 1;
        let mut amp = DMatrix::zeros(1 << len, 1 << rest);
        for s in 0..psi.len() {
            let inside = (s >> block.start) & mask;
            let outside = (s & low) | ((s >> block.end) << block.start);
            amp[(inside, outside)] = psi[s];
        }
        // ρ_A = A Aᵀ shares its nonzero spectrum with Aᵀ A; use the smaller
        let rho = if amp.nrows() <= amp.ncols() {
            &amp * amp.transpose()
        } else {
            amp.transpose() * &amp
        };
        Ok(symmetric_eigen(rho)?
            .eigenvalues
            .iter()
            .filter(|&&l| l > 1e-300)
            .map(|&l| -l * l.ln())
            .sum())
    }
}
