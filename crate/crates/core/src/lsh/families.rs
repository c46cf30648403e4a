use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{check_dim, parameter, Error, Result};
use crate::kernels::{dot, norm};

/// Tolerance on the Euclidean norm of inputs to [`HyperplaneHash`].
pub const UNIT_NORM_TOLERANCE: f64 = 1e-6;

/// Random-line hash for ℓ2: `h(p) = floor((<p, v> + t) / w)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomLineHash {
    direction: Vec<f64>,
    offset: f64,
    width: f64,
}

impl RandomLineHash {
    /// Samples a direction with i.i.d. `Normal(mu, sigma^2)` coordinates and an
    /// offset uniform in `[0, width)`.
    pub fn sample<R: Rng + ?Sized>(
        dim: usize,
        width: f64,
        mu: f64,
        sigma: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(parameter("dimension must be positive"));
        }
        if !(width > 0.0 && width.is_finite()) {
            return Err(parameter(format!("bucket width must be positive, got {width}")));
        }
        if !(sigma > 0.0 && sigma.is_finite()) || !mu.is_finite() {
            return Err(parameter(format!(
                "direction distribution needs finite mu and positive sigma, got ({mu}, {sigma})"
            )));
        }
        let normal = Normal::new(mu, sigma).map_err(|e| parameter(e.to_string()))?;
        let direction = (0..dim).map(|_| normal.sample(rng)).collect();
        let offset = rng.random_range(0.0..width);
        Ok(Self { direction, offset, width })
    }

    pub fn from_parts(direction: Vec<f64>, offset: f64, width: f64) -> Result<Self> {
        if direction.is_empty() {
            return Err(parameter("dimension must be positive"));
        }
        if !(width > 0.0 && width.is_finite()) {
            return Err(parameter(format!("bucket width must be positive, got {width}")));
        }
        if !(0.0..width).contains(&offset) {
            return Err(parameter(format!("offset {offset} outside [0, {width})")));
        }
        Ok(Self { direction, offset, width })
    }

    pub fn dim(&self) -> usize {
        self.direction.len()
    }

    pub fn direction(&self) -> &[f64] {
        &self.direction
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn eval(&self, p: &[f64]) -> Result<i64> {
        check_dim(self.dim(), p.len())?;
        Ok(self.eval_unchecked(p))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, p: &[f64]) -> i64 {
        ((dot(p, &self.direction) + self.offset) / self.width).floor() as i64
    }
}

/// Concatenation of `k` random-hyperplane sign hashes for points on the unit
/// sphere. Bit `j` of the pattern is set iff `<p, v_j> >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperplaneHash {
    dim: usize,
    // k unit vectors, row-major
    directions: Vec<f64>,
}

impl HyperplaneHash {
    pub const MAX_K: usize = 64;

    pub fn sample<R: Rng + ?Sized>(dim: usize, k: usize, rng: &mut R) -> Result<Self> {
        if dim == 0 {
            return Err(parameter("dimension must be positive"));
        }
        check_amplification(k, Self::MAX_K)?;
        let mut directions = Vec::with_capacity(k * dim);
        for _ in 0..k {
            loop {
                let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
                let len = norm(&v);
                if len > 0.0 {
                    directions.extend(v.iter().map(|x| x / len));
                    break;
                }
            }
        }
        Ok(Self { dim, directions })
    }

    pub fn from_parts(dim: usize, directions: Vec<f64>) -> Result<Self> {
        if dim == 0 || directions.is_empty() || !directions.len().is_multiple_of(dim) {
            return Err(parameter("hyperplane directions do not form k rows of the dimension"));
        }
        check_amplification(directions.len() / dim, Self::MAX_K)?;
        for row in directions.chunks_exact(dim) {
            if (norm(row) - 1.0).abs() > 1e-9 {
                return Err(parameter("hyperplane direction is not a unit vector"));
            }
        }
        Ok(Self { dim, directions })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn k(&self) -> usize {
        self.directions.len() / self.dim
    }

    pub fn directions(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.directions.chunks_exact(self.dim)
    }

    pub(crate) fn raw_directions(&self) -> &[f64] {
        &self.directions
    }

    /// Returns the `k`-bit sign pattern of `p`.
    pub fn eval(&self, p: &[f64]) -> Result<u64> {
        check_dim(self.dim, p.len())?;
        check_unit(p)?;
        Ok(self.eval_unchecked(p))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, p: &[f64]) -> u64 {
        self.directions
            .chunks_exact(self.dim)
            .enumerate()
            .fold(0u64, |acc, (j, v)| if dot(p, v) >= 0.0 { acc | (1 << j) } else { acc })
    }
}

pub(crate) fn check_unit(p: &[f64]) -> Result<()> {
    let len = norm(p);
    if (len - 1.0).abs() > UNIT_NORM_TOLERANCE {
        return Err(Error::Domain(format!(
            "hyperplane hashing needs unit-norm points, got norm {len}"
        )));
    }
    Ok(())
}

/// `k` concatenated randomly shifted grids for ℓ1, each cell of side `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridL1Hash {
    dim: usize,
    width: f64,
    // k rows of d shifts, each in [0, width)
    offsets: Vec<f64>,
}

impl GridL1Hash {
    pub fn sample<R: Rng + ?Sized>(dim: usize, width: f64, k: usize, rng: &mut R) -> Result<Self> {
        if dim == 0 {
            return Err(parameter("dimension must be positive"));
        }
        if !(width > 0.0 && width.is_finite()) {
            return Err(parameter(format!("cell width must be positive, got {width}")));
        }
        check_amplification(k, usize::MAX)?;
        let offsets = (0..k * dim).map(|_| rng.random_range(0.0..width)).collect();
        Ok(Self { dim, width, offsets })
    }

    pub fn from_parts(dim: usize, width: f64, offsets: Vec<f64>) -> Result<Self> {
        if dim == 0 || offsets.is_empty() || !offsets.len().is_multiple_of(dim) {
            return Err(parameter("grid offsets do not form k rows of the dimension"));
        }
        if !(width > 0.0 && width.is_finite()) {
            return Err(parameter(format!("cell width must be positive, got {width}")));
        }
        if offsets.iter().any(|t| !(0.0..width).contains(t)) {
            return Err(parameter("grid offset outside [0, w)"));
        }
        Ok(Self { dim, width, offsets })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn k(&self) -> usize {
        self.offsets.len() / self.dim
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    /// The `k·d` grid cell indices of `p`, grid by grid.
    pub fn cells(&self, p: &[f64]) -> Result<Vec<i64>> {
        check_dim(self.dim, p.len())?;
        Ok(self.cell_iter(p).collect())
    }

    /// The cell tuple reduced to one integer with [`mix_tuple`].
    pub fn eval(&self, p: &[f64]) -> Result<i64> {
        check_dim(self.dim, p.len())?;
        Ok(self.eval_unchecked(p))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, p: &[f64]) -> i64 {
        mix_tuple(self.cell_iter(p))
    }

    fn cell_iter<'a>(&'a self, p: &'a [f64]) -> impl Iterator<Item = i64> + 'a {
        self.offsets
            .chunks_exact(self.dim)
            .flat_map(move |row| row.iter().zip(p).map(|(t, x)| ((x + t) / self.width).floor() as i64))
    }
}

fn check_amplification(k: usize, max: usize) -> Result<()> {
    if k == 0 || k > max {
        return Err(parameter(format!("amplification k must be in [1, {max}], got {k}")));
    }
    Ok(())
}

/// Initial state of the tuple mixer.
pub const MIX_INIT: u64 = 0xcbf2_9ce4_8422_2325;
/// Multiplier of the tuple mixer's polynomial step (odd, so the step is a bijection).
pub const MIX_MULTIPLIER: u64 = 0x9e37_79b9_7f4a_7c15;

/// Reduces an integer tuple to one integer.
///
/// The state starts at [`MIX_INIT`] and absorbs each element as
/// `h = h * MIX_MULTIPLIER + x (mod 2^64)`, then goes through the SplitMix64
/// finalizer. Equal tuples always give equal results; distinct tuples collide
/// with probability about `2^-64`.
pub fn mix_tuple<I: IntoIterator<Item = i64>>(tuple: I) -> i64 {
    let h = tuple
        .into_iter()
        .fold(MIX_INIT, |h, x| h.wrapping_mul(MIX_MULTIPLIER).wrapping_add(x as u64));
    splitmix64(h) as i64
}

/// SplitMix64 output function.
#[inline]
pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
