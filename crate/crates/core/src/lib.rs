//! Reversible Markov kernels built from convolutions of classical discrete
//! orthogonality measures, their spectral data and the free-fermion models
//! they define.

pub mod error;
pub mod export;
pub mod families;
pub mod fermion;
pub mod markov;
pub mod quadrature;
pub mod recipe;
pub mod specfun;
pub mod spectral;
mod tridiagonal;

pub use error::{Error, Result};
pub use export::MatrixEnvelope;
pub use families::{
    lambda3_map, ConvType, ConvolutionRecipe, Family, FamilyParams, FamilySpec, LimitReport,
    RecipeParams,
};
pub use fermion::{block_entropy, many_body_energies, CorrelationMatrix, FreeFermionModel};
pub use markov::{verify_kernel, ConvolutionKernel, KernelReport, LatticeSpec};
pub use recipe::{LatticeRequest, RecipeSpec, SweepConfig};
pub use spectral::SpectralSystem;
