mod common;

use std::io::Cursor;

use hyperdolphin::data::{gen_klein, gen_queries, gen_sphere, DEFAULT_SPHERE_NOISE};
use hyperdolphin::data::{read_vecs, read_vecs_from, write_vecs, write_vecs_to};
use hyperdolphin::search::brute_force_near;
use hyperdolphin::{Dataset, ElementKind, Metric};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::gaussian_vec;

fn round_trip(data: &Dataset, kind: ElementKind) -> (Vec<u8>, Dataset) {
    let mut bytes = Vec::new();
    write_vecs_to(data, &mut bytes, kind).unwrap();
    let back = read_vecs_from(Cursor::new(&bytes), kind).unwrap();
    (bytes, back)
}

proptest! {
    #[test]
    fn fvecs_round_trip(dim in 1usize..20, values in prop::collection::vec(any::<f32>().prop_filter("finite", |x| x.is_finite()), 1..200)) {
        let n = values.len() / dim;
        prop_assume!(n > 0);
        let pts: Vec<f64> = values[..n * dim].iter().map(|&x| x as f64).collect();
        let data = Dataset::new(dim, pts).unwrap();
        let (bytes, back) = round_trip(&data, ElementKind::Float32);
        prop_assert_eq!(bytes.len(), n * (4 + 4 * dim));
        prop_assert_eq!(back.as_flat(), data.as_flat());
        let (again, _) = round_trip(&back, ElementKind::Float32);
        prop_assert_eq!(again, bytes);
    }

    #[test]
    fn bvecs_round_trip(dim in 1usize..20, values in prop::collection::vec(any::<u8>(), 1..200)) {
        let n = values.len() / dim;
        prop_assume!(n > 0);
        let data = Dataset::new(dim, values[..n * dim].iter().map(|&x| x as f64).collect()).unwrap();
        let (bytes, back) = round_trip(&data, ElementKind::Uint8);
        prop_assert_eq!(bytes.len(), n * (4 + dim));
        prop_assert_eq!(back.as_flat(), data.as_flat());
    }

    #[test]
    fn ivecs_round_trip(dim in 1usize..20, values in prop::collection::vec(any::<i32>(), 1..200)) {
        let n = values.len() / dim;
        prop_assume!(n > 0);
        let data = Dataset::new(dim, values[..n * dim].iter().map(|&x| x as f64).collect()).unwrap();
        let (bytes, back) = round_trip(&data, ElementKind::Int32);
        prop_assert_eq!(bytes.len(), n * (4 + 4 * dim));
        prop_assert_eq!(back.as_flat(), data.as_flat());
    }
}

#[test]
fn fvecs_layout_is_little_endian_dim_prefixed() {
    let data = Dataset::new(2, vec![1.0, -2.5]).unwrap();
    let (bytes, _) = round_trip(&data, ElementKind::Float32);
    let mut want = 2i32.to_le_bytes().to_vec();
    want.extend(1.0f32.to_le_bytes());
    want.extend((-2.5f32).to_le_bytes());
    assert_eq!(bytes, want);
}

#[test]
fn malformed_files_are_rejected() {
    let mut bytes = 3i32.to_le_bytes().to_vec();
    bytes.extend([0u8; 8]);
    assert!(read_vecs_from(Cursor::new(&bytes), ElementKind::Float32).is_err());
    assert!(read_vecs_from(Cursor::new(Vec::new()), ElementKind::Float32).is_err());
    let bad_dim = 0i32.to_le_bytes();
    assert!(read_vecs_from(Cursor::new(&bad_dim), ElementKind::Uint8).is_err());
    let mut ragged = 1i32.to_le_bytes().to_vec();
    ragged.push(7);
    ragged.extend(2i32.to_le_bytes());
    ragged.extend([1, 2]);
    assert!(read_vecs_from(Cursor::new(&ragged), ElementKind::Uint8).is_err());
    let out_of_range = Dataset::new(1, vec![300.0]).unwrap();
    assert!(write_vecs_to(&out_of_range, Vec::new(), ElementKind::Uint8).is_err());
}

#[test]
fn file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = gen_klein(500, 6, 0.05, 3).unwrap();
    let path = dir.path().join("k.fvecs");
    write_vecs(&data, &path, ElementKind::Float32).unwrap();
    let back = read_vecs(&path, ElementKind::Float32).unwrap();
    for (a, b) in back.as_flat().iter().zip(data.as_flat()) {
        assert_eq!(*a, *b as f32 as f64);
    }
}

#[test]
fn sphere_norms_match_monte_carlo() {
    let (n, d, sigma) = (10_000, 128, DEFAULT_SPHERE_NOISE);
    let data = gen_sphere(n, d, sigma, 1).unwrap();
    let norms: Vec<f64> = data.iter().map(|p| p.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    let mean = norms.iter().sum::<f64>() / n as f64;
    let var = norms.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;

    // independent estimate of E|e1 + z| with z ~ N(0, sigma^2 I)
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let m = 20_000;
    let oracle: Vec<f64> = (0..m)
        .map(|_| {
            let mut z = gaussian_vec(&mut rng, d);
            z.iter_mut().for_each(|x| *x *= sigma);
            z[0] += 1.0;
            z.iter().map(|x| x * x).sum::<f64>().sqrt()
        })
        .collect();
    let o_mean = oracle.iter().sum::<f64>() / m as f64;
    let o_var = oracle.iter().map(|x| (x - o_mean).powi(2)).sum::<f64>() / (m - 1) as f64;
    let se = (var / n as f64 + o_var / m as f64).sqrt();
    assert!((mean - o_mean).abs() <= 4.0 * se, "{mean} vs {o_mean}");
}

#[test]
fn noiseless_sphere_is_unit() {
    let data = gen_sphere(1000, 64, 0.0, 2).unwrap();
    for p in data.iter() {
        let norm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() <= 1e-9);
    }
}

#[test]
fn klein_points_lie_on_the_surface() {
    let data = gen_klein(1000, 8, 0.0, 4).unwrap();
    for p in data.iter() {
        // the first two coordinates give the major angle and the tube offset
        let rho = (p[0] * p[0] + p[1] * p[1]).sqrt();
        let tube = ((rho - 2.0).powi(2) + p[2] * p[2] + p[3] * p[3]).sqrt();
        assert!((tube - 1.0).abs() < 1e-9, "{tube}");
        assert!(p[4..].iter().all(|x| *x == 0.0));
    }
    assert!(gen_klein(10, 3, 0.0, 0).is_err());
}

#[test]
fn query_labels_follow_p_near() {
    let data = gen_sphere(2000, 32, 0.1, 5).unwrap();
    let m = 1000;
    let qs = gen_queries(&data, m, 0.5, None, 6).unwrap();
    let labels = qs.labels.as_ref().unwrap();
    let frac = labels.iter().filter(|&&b| b).count() as f64 / m as f64;
    assert!((frac - 0.5).abs() <= 4.0 * (0.25 / m as f64).sqrt(), "{frac}");
    let sources = qs.sources.as_ref().unwrap();
    for ((q, &near), &src) in qs.points.iter().zip(labels).zip(sources) {
        let dist = Metric::L2.distance(q, data.point(src));
        assert_eq!(dist <= 1.0, near);
        if near {
            assert!(!brute_force_near(&data, q, 1.0, Metric::L2).unwrap().is_empty());
        }
    }
}

#[test]
fn generators_are_deterministic() {
    assert_eq!(gen_sphere(100, 8, 0.1, 9).unwrap(), gen_sphere(100, 8, 0.1, 9).unwrap());
    assert_ne!(gen_sphere(100, 8, 0.1, 9).unwrap(), gen_sphere(100, 8, 0.1, 10).unwrap());
    let d = gen_klein(100, 8, 0.05, 9).unwrap();
    assert_eq!(gen_queries(&d, 20, 0.3, None, 1).unwrap(), gen_queries(&d, 20, 0.3, None, 1).unwrap());
}
