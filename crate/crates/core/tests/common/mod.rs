//! Oracles shared by the integration tests. Nothing here calls into the
//! code paths it is used to check.
#![allow(dead_code)]

use rand::Rng;
use rand_distr::StandardNormal;

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    recurse(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, 50)
}

/// Collision probability of the random-line family by direct integration of
/// the density of the projected gap.
pub fn line_collision_by_quadrature(eta: f64, w: f64) -> f64 {
    let density = move |t: f64| {
        2.0 / ((2.0 * std::f64::consts::PI).sqrt() * eta) * (-t * t / (2.0 * eta * eta)).exp() * (1.0 - t / w)
    };
    adaptive_simpson(&density, 0.0, w, 1e-13)
}

pub fn gaussian_vec<R: Rng>(rng: &mut R, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

pub fn unit_vec<R: Rng>(rng: &mut R, d: usize) -> Vec<f64> {
    let v = gaussian_vec(rng, d);
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

/// `q` at ℓ2 distance exactly `dist` from `p`, in a random direction.
pub fn at_l2_distance<R: Rng>(rng: &mut R, p: &[f64], dist: f64) -> Vec<f64> {
    let u = unit_vec(rng, p.len());
    p.iter().zip(&u).map(|(x, y)| x + dist * y).collect()
}

/// Naive per-coordinate brute force, sorted by (distance, id).
pub fn naive_near(points: &[Vec<f64>], q: &[f64], r: f64, l1: bool) -> Vec<(u32, f64)> {
    let mut out = Vec::new();
    for (id, p) in points.iter().enumerate() {
        let mut acc = 0.0;
        for i in 0..p.len() {
            let diff = p[i] - q[i];
            if l1 {
                acc += diff.abs();
            } else {
                acc += diff * diff;
            }
        }
        let dist = if l1 { acc } else { acc.sqrt() };
        if dist <= r {
            out.push((id as u32, dist));
        }
    }
    out.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
    out
}

/// Error-free transformation `a + b = s + e`.
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Euclidean distance accumulated in double-double arithmetic.
pub fn l2_double_double(p: &[f64], q: &[f64]) -> f64 {
    let (mut hi, mut lo) = (0.0f64, 0.0f64);
    for (x, y) in p.iter().zip(q) {
        let (d, de) = two_sum(*x, -*y);
        // (d + de)^2 ≈ d*d + 2*d*de
        let sq = d * d;
        let sq_err = d.mul_add(d, -sq) + 2.0 * d * de;
        let (s, e) = two_sum(hi, sq);
        hi = s;
        lo += e + sq_err;
    }
    let (s, e) = two_sum(hi, lo);
    let root = s.sqrt();
    if root == 0.0 {
        0.0
    } else {
        root + e / (2.0 * root)
    }
}

pub fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}
