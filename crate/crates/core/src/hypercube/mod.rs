//! The hypercube index.
//!
//! Coordinate `i` of a point's key is `f_i(h_i(p))`: an LSH function `h_i`
//! followed by a fair-coin map `f_i` from hash values to bits. Points are
//! stored as ids in buckets keyed by the resulting `d'`-bit vertex; empty
//! vertices take no space.

mod format;

use std::sync::{Arc, PoisonError, RwLock};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashMap;

pub use format::{read_index_info, IndexInfo, FORMAT_VERSION, MAGIC};

use crate::data::Dataset;
use crate::error::{check_dim, parameter, Error, Result};
use crate::lsh::{check_unit, splitmix64, FamilySpec, LshHasher};

/// Largest supported hypercube dimension; keys are packed into one `u64`.
pub const MAX_DPRIME: u32 = 64;

/// `floor(log2 n)` clamped to `[1, 64]`.
pub fn default_dprime(n: usize) -> Result<u32> {
    if n < 2 {
        return Err(parameter(format!("default d' needs at least 2 points, got {n}")));
    }
    Ok(n.ilog2().clamp(1, MAX_DPRIME))
}

/// A hypercube vertex: bit `i` holds coordinate `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Key(u64);

impl Key {
    pub fn new(bits: u64, dprime: u32) -> Result<Self> {
        if !fits(bits, dprime) {
            return Err(parameter(format!("key {bits:#x} does not fit a {dprime}-dimensional cube")));
        }
        Ok(Key(bits))
    }

    pub(crate) const fn from_bits_unchecked(bits: u64) -> Self {
        Key(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn hamming_distance(self, other: Key) -> u32 {
        (self.0 ^ other.0).count_ones()
    }
}

fn fits(bits: u64, dprime: u32) -> bool {
    (1..=MAX_DPRIME).contains(&dprime) && (dprime == 64 || bits >> dprime == 0)
}

const STREAM_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// Lazily memoized fair-coin map from hash values to bits.
///
/// The coin for hash value `x` is the top bit of output `x` of the SplitMix64
/// stream seeded with this coordinate's seed, so the bit a value receives
/// does not depend on the order in which values are first seen. Values are
/// memoized on first use; concurrent first lookups of the same value agree
/// because they compute the same coin, and the first insert wins.
#[derive(Debug)]
pub struct BitAssignment {
    seed: u64,
    memo: RwLock<FxHashMap<i64, bool>>,
}

impl BitAssignment {
    pub fn new(seed: u64) -> Self {
        Self { seed, memo: RwLock::default() }
    }

    pub(crate) fn with_memo(seed: u64, memo: FxHashMap<i64, bool>) -> Self {
        Self { seed, memo: RwLock::new(memo) }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn bit(&self, value: i64) -> bool {
        if let Some(&b) = self.memo.read().unwrap_or_else(PoisonError::into_inner).get(&value) {
            return b;
        }
        let coin = self.coin(value);
        *self
            .memo
            .write()
            .unwrap_or_else(PoisonError::into_inner)
            .entry(value)
            .or_insert(coin)
    }

    // Single-writer path used while building.
    fn bit_mut(&mut self, value: i64) -> bool {
        let coin = self.coin(value);
        *self
            .memo
            .get_mut()
            .unwrap_or_else(PoisonError::into_inner)
            .entry(value)
            .or_insert(coin)
    }

    fn coin(&self, value: i64) -> bool {
        splitmix64(self.seed.wrapping_add((value as u64).wrapping_mul(STREAM_GAMMA))) >> 63 == 1
    }

    /// Number of hash values assigned so far.
    pub fn len(&self) -> usize {
        self.memo.read().unwrap_or_else(PoisonError::into_inner).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Snapshot of the memo, sorted by hash value.
    pub fn entries(&self) -> Vec<(i64, bool)> {
        let mut entries: Vec<_> = self
            .memo
            .read()
            .unwrap_or_else(PoisonError::into_inner)
            .iter()
            .map(|(&k, &b)| (k, b))
            .collect();
        entries.sort_unstable_by_key(|&(k, _)| k);
        entries
    }
}

impl Clone for BitAssignment {
    fn clone(&self) -> Self {
        Self::with_memo(
            self.seed,
            self.memo.read().unwrap_or_else(PoisonError::into_inner).clone(),
        )
    }
}

/// Linear-space index over a shared dataset.
#[derive(Debug, Clone)]
pub struct HypercubeIndex {
    dataset: Arc<Dataset>,
    dprime: u32,
    family: FamilySpec,
    seed: u64,
    hashers: Vec<LshHasher>,
    bits: Vec<BitAssignment>,
    buckets: FxHashMap<u64, Vec<u32>>,
}

impl HypercubeIndex {
    /// Samples `dprime` (hash function, bit map) pairs from `seed` and buckets
    /// every point of `dataset`.
    pub fn build(dataset: Arc<Dataset>, dprime: u32, family: FamilySpec, seed: u64) -> Result<Self> {
        if !(1..=MAX_DPRIME).contains(&dprime) {
            return Err(parameter(format!("d' must be in [1, {MAX_DPRIME}], got {dprime}")));
        }
        family.validate()?;
        if u32::try_from(dataset.len()).is_err() {
            return Err(Error::Build(format!("{} points exceed the u32 id space", dataset.len())));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut hashers = Vec::with_capacity(dprime as usize);
        let mut bits = Vec::with_capacity(dprime as usize);
        for _ in 0..dprime {
            hashers.push(family.sample(dataset.dim(), &mut rng)?);
            bits.push(BitAssignment::new(rng.next_u64()));
        }

        let mut buckets: FxHashMap<u64, Vec<u32>> = FxHashMap::default();
        let unit_sphere = matches!(family, FamilySpec::Hyperplane { .. });
        for (id, p) in dataset.iter().enumerate() {
            if unit_sphere {
                check_unit(p).map_err(|e| Error::Build(format!("point {id}: {e}")))?;
            }
            let key = hashers
                .iter()
                .zip(bits.iter_mut())
                .enumerate()
                .fold(0u64, |key, (i, (h, f))| key | (f.bit_mut(h.eval_unchecked(p)) as u64) << i);
            buckets.entry(key).or_default().push(id as u32);
        }

        Ok(Self { dataset, dprime, family, seed, hashers, bits, buckets })
    }

    /// Key of `p`. New hash values get their coin flipped and memoized.
    pub fn project(&self, p: &[f64]) -> Result<Key> {
        check_dim(self.dataset.dim(), p.len())?;
        if matches!(self.family, FamilySpec::Hyperplane { .. }) {
            check_unit(p)?;
        }
        let key = self
            .hashers
            .iter()
            .zip(&self.bits)
            .enumerate()
            .fold(0u64, |key, (i, (h, f))| key | (f.bit(h.eval_unchecked(p)) as u64) << i);
        Ok(Key(key))
    }

    /// Ids stored at `key`; empty for unused vertices.
    pub fn bucket_of(&self, key: Key) -> Result<&[u32]> {
        if !fits(key.0, self.dprime) {
            return Err(parameter(format!(
                "key {:#x} has bits above position {}",
                key.0,
                self.dprime - 1
            )));
        }
        Ok(self.bucket_unchecked(key.0))
    }

    #[inline]
    pub(crate) fn bucket_unchecked(&self, bits: u64) -> &[u32] {
        self.buckets.get(&bits).map_or(&[], Vec::as_slice)
    }

    /// Non-empty buckets, in no particular order.
    pub fn buckets(&self) -> impl Iterator<Item = (Key, &[u32])> {
        self.buckets.iter().map(|(&k, ids)| (Key(k), ids.as_slice()))
    }

    pub fn non_empty_buckets(&self) -> usize {
        self.buckets.len()
    }

    pub fn dataset(&self) -> &Arc<Dataset> {
        &self.dataset
    }

    pub fn len(&self) -> usize {
        self.dataset.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dataset.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dataset.dim()
    }

    pub fn dprime(&self) -> u32 {
        self.dprime
    }

    pub fn family(&self) -> FamilySpec {
        self.family
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn hashers(&self) -> &[LshHasher] {
        &self.hashers
    }

    pub fn bit_assignments(&self) -> &[BitAssignment] {
        &self.bits
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::gen_sphere;

    fn sphere(n: usize, d: usize, seed: u64) -> Arc<Dataset> {
        Arc::new(gen_sphere(n, d, 0.1, seed).unwrap())
    }

    #[test]
    fn default_dprime_examples() {
        assert_eq!(default_dprime(1024).unwrap(), 10);
        assert_eq!(default_dprime(1_000_000).unwrap(), 19);
        assert_eq!(default_dprime(2).unwrap(), 1);
        assert_eq!(default_dprime(3).unwrap(), 1);
        assert!(default_dprime(1).is_err());
        assert!(default_dprime(0).is_err());
    }

    #[test]
    fn key_validation() {
        assert!(Key::new(0b111, 3).is_ok());
        assert!(Key::new(0b1000, 3).is_err());
        assert!(Key::new(u64::MAX, 64).is_ok());
        assert!(Key::new(0, 0).is_err());
        assert_eq!(Key(0b1011).hamming_distance(Key(0b0001)), 2);
    }

    #[test]
    fn single_point_single_bucket() {
        let ds = Arc::new(Dataset::from_rows(&[[0.3, -0.2]]).unwrap());
        let index = HypercubeIndex::build(ds, 1, FamilySpec::random_line(2.0), 5).unwrap();
        assert_eq!(index.non_empty_buckets(), 1);
        let (_, ids) = index.buckets().next().unwrap();
        assert_eq!(ids, &[0]);
    }

    #[test]
    fn duplicates_share_a_bucket() {
        let ds = Arc::new(Dataset::from_rows(&[[1.0, 2.0, 3.0], [0.0, 0.0, 9.0], [1.0, 2.0, 3.0]]).unwrap());
        for family in [FamilySpec::random_line(1.0), FamilySpec::GridL1 { width: 1.0, k: 2 }] {
            let index = HypercubeIndex::build(ds.clone(), 12, family, 77).unwrap();
            let key = index.project(ds.point(0)).unwrap();
            let bucket = index.bucket_of(key).unwrap();
            assert!(bucket.contains(&0) && bucket.contains(&2));
        }
    }

    #[test]
    fn build_parameter_errors() {
        let ds = sphere(10, 4, 1);
        assert!(matches!(
            HypercubeIndex::build(ds.clone(), 0, FamilySpec::random_line(1.0), 1),
            Err(Error::Parameter(_))
        ));
        assert!(HypercubeIndex::build(ds.clone(), 65, FamilySpec::random_line(1.0), 1).is_err());
        assert!(HypercubeIndex::build(ds.clone(), 4, FamilySpec::random_line(-1.0), 1).is_err());
        assert!(matches!(
            HypercubeIndex::build(ds, 4, FamilySpec::Hyperplane { k: 2 }, 1),
            Err(Error::Build(_))
        ));
    }

    #[test]
    fn project_is_memoized_and_checked() {
        let ds = sphere(200, 8, 2);
        let index = HypercubeIndex::build(ds.clone(), 10, FamilySpec::random_line(2.0), 3).unwrap();
        let far = vec![40.0; 8];
        let before: usize = index.bit_assignments().iter().map(BitAssignment::len).sum();
        let a = index.project(&far).unwrap();
        let after: usize = index.bit_assignments().iter().map(BitAssignment::len).sum();
        assert!(after > before);
        assert_eq!(index.project(&far).unwrap(), a);
        assert!(matches!(index.project(&[0.0; 3]), Err(Error::Shape { expected: 8, actual: 3 })));
        assert!(a.bits() >> 10 == 0);
    }

    #[test]
    fn bucket_of_rejects_wide_keys() {
        let index = HypercubeIndex::build(sphere(50, 4, 1), 5, FamilySpec::random_line(2.0), 1).unwrap();
        assert!(index.bucket_of(Key::from_bits_unchecked(1 << 5)).is_err());
    }

    #[test]
    fn coin_does_not_depend_on_lookup_order() {
        let a = BitAssignment::new(99);
        let b = BitAssignment::new(99);
        let forward: Vec<bool> = (-50..50).map(|x| a.bit(x)).collect();
        let backward: Vec<bool> = (-50..50).rev().map(|x| b.bit(x)).collect();
        assert!(forward.iter().eq(backward.iter().rev()));
        assert_eq!(a.entries(), b.entries());
    }

    #[test]
    fn hyperplane_index_on_sphere() {
        let ds = Arc::new(gen_sphere(300, 16, 0.0, 8).unwrap());
        let index = HypercubeIndex::build(ds.clone(), 8, FamilySpec::Hyperplane { k: 3 }, 4).unwrap();
        let total: usize = index.buckets().map(|(_, ids)| ids.len()).sum();
        assert_eq!(total, 300);
        assert!(matches!(index.project(&[2.0; 16]), Err(Error::Domain(_))));
    }
}
