//! LSH families and their collision probabilities.

mod families;
mod probability;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use families::{
    mix_tuple, GridL1Hash, HyperplaneHash, RandomLineHash, MIX_INIT, MIX_MULTIPLIER,
    UNIT_NORM_TOLERANCE,
};
pub(crate) use families::{check_unit, splitmix64};
pub use probability::{
    binary_entropy, collision_prob_hyperplane, collision_prob_l2, delta_exponent,
    SensitivityParams,
};

pub use crate::search::Metric;
use crate::error::{parameter, Result};

/// Which family an index draws its hash functions from, with the family's
/// parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FamilySpec {
    /// Random lines for ℓ2. Directions have i.i.d. `Normal(mu, sigma^2)`
    /// coordinates; `width` is the bucket width along the line.
    RandomLine { width: f64, mu: f64, sigma: f64 },
    /// `k` concatenated random hyperplanes; inputs must lie on the unit sphere.
    Hyperplane { k: usize },
    /// `k` concatenated randomly shifted grids of cell side `width`, for ℓ1.
    GridL1 { width: f64, k: usize },
}

impl FamilySpec {
    /// Random-line family with standard normal directions and width `w`.
    ///
    /// The width is in data units; with search radius `r` and approximation
    /// `c`, `w = c·r` is the natural default.
    pub fn random_line(width: f64) -> Self {
        FamilySpec::RandomLine { width, mu: 0.0, sigma: 1.0 }
    }

    /// Shifted-grid family with `α = k = max(1, floor(log2 n))` and cell side
    /// `α·r`.
    pub fn grid_l1_for(n: usize, r: f64) -> Self {
        let alpha = (usize::BITS - 1).saturating_sub(n.max(1).leading_zeros()).max(1) as usize;
        FamilySpec::GridL1 { width: alpha as f64 * r, k: alpha }
    }

    pub fn metric(&self) -> Metric {
        match self {
            FamilySpec::RandomLine { .. } | FamilySpec::Hyperplane { .. } => Metric::L2,
            FamilySpec::GridL1 { .. } => Metric::L1,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FamilySpec::RandomLine { .. } => "random_line",
            FamilySpec::Hyperplane { .. } => "hyperplane",
            FamilySpec::GridL1 { .. } => "grid_l1",
        }
    }

    /// The bucket or cell width, when the family has one.
    pub fn width(&self) -> Option<f64> {
        match *self {
            FamilySpec::RandomLine { width, .. } | FamilySpec::GridL1 { width, .. } => Some(width),
            FamilySpec::Hyperplane { .. } => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(parameter(format!("{name} must be positive, got {x}")))
            }
        };
        match *self {
            FamilySpec::RandomLine { width, mu, sigma } => {
                positive("width", width)?;
                positive("sigma", sigma)?;
                if !mu.is_finite() {
                    return Err(parameter("mu must be finite"));
                }
            }
            FamilySpec::Hyperplane { k } => {
                if k == 0 || k > HyperplaneHash::MAX_K {
                    return Err(parameter(format!("hyperplane k must be in [1, 64], got {k}")));
                }
            }
            FamilySpec::GridL1 { width, k } => {
                positive("width", width)?;
                if k == 0 {
                    return Err(parameter("grid k must be positive"));
                }
            }
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, dim: usize, rng: &mut R) -> Result<LshHasher> {
        self.validate()?;
        Ok(match *self {
            FamilySpec::RandomLine { width, mu, sigma } => {
                LshHasher::Line(RandomLineHash::sample(dim, width, mu, sigma, rng)?)
            }
            FamilySpec::Hyperplane { k } => LshHasher::Hyperplane(HyperplaneHash::sample(dim, k, rng)?),
            FamilySpec::GridL1 { width, k } => LshHasher::Grid(GridL1Hash::sample(dim, width, k, rng)?),
        })
    }
}

/// One sampled member of a family, evaluating to a canonical integer.
#[derive(Debug, Clone, PartialEq)]
pub enum LshHasher {
    Line(RandomLineHash),
    Hyperplane(HyperplaneHash),
    Grid(GridL1Hash),
}

impl LshHasher {
    pub fn dim(&self) -> usize {
        match self {
            LshHasher::Line(h) => h.dim(),
            LshHasher::Hyperplane(h) => h.dim(),
            LshHasher::Grid(h) => h.dim(),
        }
    }

    pub fn eval(&self, p: &[f64]) -> Result<i64> {
        Ok(match self {
            LshHasher::Line(h) => h.eval(p)?,
            LshHasher::Hyperplane(h) => h.eval(p)? as i64,
            LshHasher::Grid(h) => h.eval(p)?,
        })
    }

    /// Callers must have checked the dimension (and unit norm, for hyperplanes).
    #[inline]
    pub(crate) fn eval_unchecked(&self, p: &[f64]) -> i64 {
        match self {
            LshHasher::Line(h) => h.eval_unchecked(p),
            LshHasher::Hyperplane(h) => h.eval_unchecked(p) as i64,
            LshHasher::Grid(h) => h.eval_unchecked(p),
        }
    }
}
