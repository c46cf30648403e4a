//! Synthetic point sets and planted query sets.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::{Dataset, QuerySet};
use crate::error::{parameter, Result};
use crate::kernels::norm;

pub const DEFAULT_SPHERE_NOISE: f64 = 0.1;
pub const DEFAULT_KLEIN_NOISE: f64 = 0.05;
pub const DEFAULT_P_NEAR: f64 = 0.5;

/// Distance from the origin to the core circle of the Klein bottle.
pub const KLEIN_MAJOR_RADIUS: f64 = 2.0;
/// Radius of the tube swept around the core circle.
pub const KLEIN_MINOR_RADIUS: f64 = 1.0;

const MAX_REJECTIONS: usize = 100_000;

/// Uniform points on the unit sphere of `R^d` plus i.i.d. `Normal(0, noise_sigma^2)`
/// noise on every coordinate.
pub fn gen_sphere(n: usize, d: usize, noise_sigma: f64, seed: u64) -> Result<Dataset> {
    if n == 0 || d < 2 {
        return Err(parameter(format!("sphere needs n >= 1 and d >= 2, got n={n}, d={d}")));
    }
    let noise = noise_distribution(noise_sigma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n * d);
    let mut row = vec![0.0; d];
    for _ in 0..n {
        loop {
            row.iter_mut().for_each(|x| *x = StandardNormal.sample(&mut rng));
            let len = norm(&row);
            if len > 0.0 {
                row.iter_mut().for_each(|x| *x /= len);
                break;
            }
        }
        if let Some(noise) = noise {
            row.iter_mut().for_each(|x| *x += noise.sample(&mut rng));
        }
        points.extend_from_slice(&row);
    }
    Dataset::new(d, points)
}

/// The Klein bottle point with parameters `(u, v)` in the 4-dimensional
/// embedding
///
/// ```text
/// ((R + r cos v) cos u, (R + r cos v) sin u, r sin v cos(u/2), r sin v sin(u/2))
/// ```
///
/// with `R = KLEIN_MAJOR_RADIUS` and `r = KLEIN_MINOR_RADIUS`. Shifting `u` by
/// `2π` maps `v` to `−v`, which is the Klein bottle's gluing. Every point has
/// `‖x‖² = R² + r² + 2Rr cos v`.
pub fn klein_point(u: f64, v: f64) -> [f64; 4] {
    let (major, minor) = (KLEIN_MAJOR_RADIUS, KLEIN_MINOR_RADIUS);
    let ring = major + minor * v.cos();
    [
        ring * u.cos(),
        ring * u.sin(),
        minor * v.sin() * (u / 2.0).cos(),
        minor * v.sin() * (u / 2.0).sin(),
    ]
}

/// Points on a Klein bottle in the first four coordinates of `R^d`, zero in
/// the rest, plus i.i.d. `Normal(0, noise_sigma^2)` noise on every coordinate.
pub fn gen_klein(n: usize, d: usize, noise_sigma: f64, seed: u64) -> Result<Dataset> {
    if n == 0 || d < 4 {
        return Err(parameter(format!("Klein bottle needs n >= 1 and d >= 4, got n={n}, d={d}")));
    }
    let noise = noise_distribution(noise_sigma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = vec![0.0; n * d];
    for row in points.chunks_exact_mut(d) {
        let u = rng.random_range(0.0..TAU);
        let v = rng.random_range(0.0..TAU);
        row[..4].copy_from_slice(&klein_point(u, v));
        if let Some(noise) = noise {
            row.iter_mut().for_each(|x| *x += noise.sample(&mut rng));
        }
    }
    Dataset::new(d, points)
}

/// Plants `m` queries around uniformly chosen dataset points.
///
/// For each query a Bernoulli(`p_near`) draw picks the class, then Gaussian
/// displacements with per-coordinate deviation `near_sigma` are resampled
/// until the displacement norm is `<= 1` for "near" or `> 1` for "far". The
/// deviation defaults to `1/√d`, which puts the typical displacement norm at
/// about 1 so both classes are cheap to hit.
pub fn gen_queries(
    dataset: &Dataset,
    m: usize,
    p_near: f64,
    near_sigma: Option<f64>,
    seed: u64,
) -> Result<QuerySet> {
    if m == 0 {
        return Err(parameter("query count must be positive"));
    }
    if !(0.0..=1.0).contains(&p_near) {
        return Err(parameter(format!("p_near must be a probability, got {p_near}")));
    }
    let d = dataset.dim();
    let sigma = near_sigma.unwrap_or(1.0 / (d as f64).sqrt());
    let step = Normal::new(0.0, sigma)
        .ok()
        .filter(|_| sigma > 0.0)
        .ok_or_else(|| parameter(format!("near_sigma must be positive, got {sigma}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(m * d);
    let mut labels = Vec::with_capacity(m);
    let mut sources = Vec::with_capacity(m);
    let mut shift = vec![0.0; d];
    for _ in 0..m {
        let source = rng.random_range(0..dataset.len());
        let near = rng.random_bool(p_near);
        let mut attempts = 0;
        loop {
            shift.iter_mut().for_each(|x| *x = step.sample(&mut rng));
            if (norm(&shift) <= 1.0) == near {
                break;
            }
            attempts += 1;
            if attempts == MAX_REJECTIONS {
                return Err(parameter(format!(
                    "near_sigma {sigma} almost never yields a {} displacement in dimension {d}",
                    if near { "near" } else { "far" }
                )));
            }
        }
        points.extend(dataset.point(source).iter().zip(&shift).map(|(x, s)| x + s));
        labels.push(near);
        sources.push(source);
    }
    Ok(QuerySet {
        points: Dataset::new(d, points)?,
        labels: Some(labels),
        sources: Some(sources),
    })
}

fn noise_distribution(sigma: f64) -> Result<Option<Normal<f64>>> {
    if sigma == 0.0 {
        return Ok(None);
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(parameter(format!("noise sigma must be non-negative, got {sigma}")));
    }
    Ok(Some(Normal::new(0.0, sigma).map_err(|e| parameter(e.to_string()))?))
}
