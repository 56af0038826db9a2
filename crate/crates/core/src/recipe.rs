//! One-line recipe grammar and JSON sweep configurations.
//!
//! ```text
//! krawtchouk type=i a=0.3 b=0.5 N=5
//! charlier type=iii a=1.0 b=0.5 eps=1e-12
//! meixner type=i a=1.0 b=2.0 c=0.3 M=40
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::{ConvType, ConvolutionRecipe, Family, KeyValues, RecipeParams};
use crate::markov::LatticeSpec;

/// How the lattice of a recipe is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LatticeRequest {
    /// Finite lattice `{0..N}`.
    Size(usize),
    /// Truncated lattice with certified stationary tail below `eps`.
    TailEps(f64),
    /// Truncated lattice `{0..M}`.
    Cutoff(usize),
}

/// A parsed recipe line: kernel recipe plus an optional lattice request.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecipeSpec {
    pub recipe: ConvolutionRecipe,
    pub lattice: Option<LatticeRequest>,
}

impl RecipeSpec {
    pub fn new(recipe: ConvolutionRecipe, lattice: Option<LatticeRequest>) -> Self {
        Self { recipe, lattice }
    }

    /// Same recipe with the lattice request replaced.
    pub fn with_lattice(self, lattice: LatticeRequest) -> Self {
        Self {
            lattice: Some(lattice),
            ..self
        }
    }

    /// Resolves the lattice request against the family of the recipe.
    pub fn lattice_spec(&self) -> Result<LatticeSpec> {
        let family = self.recipe.family();
        match (self.lattice, family.is_finite()) {
            (None, true) => Err(Error::Parse(format!("{family} recipes need N=<size>"))),
            (None, false) => Err(Error::Parse(format!(
                "{family} recipes need eps=<tail bound> or M=<cutoff>"
            ))),
            (Some(LatticeRequest::Size(n)), true) => Ok(LatticeSpec::finite(n)),
            (Some(LatticeRequest::TailEps(eps)), false) => {
                LatticeSpec::truncated(&self.recipe.lambda3(), eps)
            }
            (Some(LatticeRequest::Cutoff(m)), false) => {
                LatticeSpec::truncated_at(&self.recipe.lambda3(), m)
            }
            (Some(_), true) => Err(Error::Domain(format!(
                "{family} lives on a finite lattice; use N=<size>"
            ))),
            (Some(_), false) => Err(Error::Domain(format!(
                "{family} lives on the semi-infinite lattice; use eps= or M="
            ))),
        }
    }
}

impl fmt::Display for RecipeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = &self.recipe;
        write!(f, "{} type={}", r.family(), r.conv_type())?;
        match r.params() {
            RecipeParams::Krawtchouk { a, b } | RecipeParams::Charlier { a, b } => {
                write!(f, " a={a:?} b={b:?}")?
            }
            RecipeParams::Hahn { a, b, c } | RecipeParams::Meixner { a, b, c } => {
                write!(f, " a={a:?} b={b:?} c={c:?}")?
            }
            RecipeParams::QHahn { a, b, c, q } => write!(f, " a={a:?} b={b:?} c={c:?} q={q:?}")?,
        }
        match self.lattice {
            None => Ok(()),
            Some(LatticeRequest::Size(n)) => write!(f, " N={n}"),
            Some(LatticeRequest::TailEps(e)) => write!(f, " eps={e:?}"),
            Some(LatticeRequest::Cutoff(m)) => write!(f, " M={m}"),
        }
    }
}

impl FromStr for RecipeSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut words = s.split_whitespace();
        let family: Family = words
            .next()
            .ok_or_else(|| Error::Parse("empty recipe".into()))?
            .parse()?;
        let allowed: &[&str] = match family {
            Family::Krawtchouk | Family::Charlier => &["type", "a", "b", "N", "eps", "M"],
            Family::Hahn | Family::Meixner => &["type", "a", "b", "c", "N", "eps", "M"],
            Family::QHahn => &["type", "a", "b", "c", "q", "N", "eps", "M"],
        };
        let kv = KeyValues::parse(words, allowed)?;
        let conv: ConvType = kv
            .raw("type")
            .ok_or_else(|| Error::Parse("missing key `type`".into()))?
            .parse()?;
        let params = match family {
            Family::Krawtchouk => RecipeParams::Krawtchouk {
                a: kv.real("a")?,
                b: kv.real("b")?,
            },
            Family::Charlier => RecipeParams::Charlier {
                a: kv.real("a")?,
                b: kv.real("b")?,
            },
            Family::Hahn => RecipeParams::Hahn {
                a: kv.real("a")?,
                b: kv.real("b")?,
                c: kv.real("c")?,
            },
            Family::Meixner => RecipeParams::Meixner {
                a: kv.real("a")?,
                b: kv.real("b")?,
                c: kv.real("c")?,
            },
            Family::QHahn => RecipeParams::QHahn {
                a: kv.real("a")?,
                b: kv.real("b")?,
                c: kv.real("c")?,
                q: kv.real("q")?,
            },
        };
        let requests = [
            kv.count("N")?.map(LatticeRequest::Size),
            kv.opt_real("eps")?.map(LatticeRequest::TailEps),
            kv.count("M")?.map(LatticeRequest::Cutoff),
        ];
        let mut given = requests.into_iter().flatten();
        let lattice = given.next();
        if given.next().is_some() {
            return Err(Error::Parse("give only one of N, eps, M".into()));
        }
        let recipe = ConvolutionRecipe::new(conv, params)?;
        Ok(RecipeSpec { recipe, lattice })
    }
}

/// Parameter sweep: every recipe without a lattice key is expanded over
/// `sizes` (finite families) or `tail_eps` (semi-infinite ones).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub recipes: Vec<String>,
    #[serde(default)]
    pub sizes: Vec<usize>,
    #[serde(default)]
    pub tail_eps: Vec<f64>,
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("sweep config: {e}")))
    }

    /// Expanded list of recipes, each with a lattice request.
    pub fn expand(&self) -> Result<Vec<RecipeSpec>> {
        let mut out = Vec::new();
        for line in &self.recipes {
            let spec: RecipeSpec = line.parse()?;
            if spec.lattice.is_some() {
                out.push(spec);
                continue;
            }
            let expanded: Vec<RecipeSpec> = if spec.recipe.family().is_finite() {
                self.sizes
                    .iter()
                    .map(|&n| spec.with_lattice(LatticeRequest::Size(n)))
                    .collect()
            } else {
                self.tail_eps
                    .iter()
                    .map(|&e| spec.with_lattice(LatticeRequest::TailEps(e)))
                    .collect()
            };
            if expanded.is_empty() {
                return Err(Error::Parse(format!(
                    "`{line}` has no lattice and the sweep gives none"
                )));
            }
            out.extend(expanded);
        }
        Ok(out)
    }
}
