//! Fixtures shared by the criterion benches in `benches/`.

use solvferm_core::{ConvolutionRecipe, LatticeSpec, RecipeSpec};

/// One recipe per family, without a lattice.
pub const RECIPES: &[&str] = &[
    "krawtchouk type=ii a=0.2 b=0.6",
    "hahn type=i a=1 b=2 c=0.5",
    "qhahn type=iii a=0.4 b=-0.5 c=0.3 q=0.7",
    "charlier type=iii a=1 b=0.5",
    "meixner type=i a=1 b=2 c=0.3",
];

/// Parses `line` and attaches a lattice: `N=size` for finite families,
/// `M=size` for semi-infinite ones.
pub fn fixture(line: &str, size: usize) -> (ConvolutionRecipe, LatticeSpec) {
    let spec: RecipeSpec = line.parse().expect("fixture recipe");
    let key = if spec.recipe.family().is_finite() {
        "N"
    } else {
        "M"
    };
    let spec: RecipeSpec = format!("{line} {key}={size}")
        .parse()
        .expect("fixture lattice");
    let lattice = spec.lattice_spec().expect("fixture lattice");
    (spec.recipe, lattice)
}
