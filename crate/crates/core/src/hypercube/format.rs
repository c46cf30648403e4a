//! Binary index file.
//!
//! All integers and doubles are little-endian.
//!
//! ```text
//! magic        "HDLP"
//! version      u16
//! dprime       u32
//! family tag   u8      1 = random line, 2 = hyperplane, 3 = ℓ1 grid
//! dim          u32
//! n            u64
//! seed         u64
//! family       random line: width f64, mu f64, sigma f64
//!              hyperplane:  k u32
//!              ℓ1 grid:     width f64, k u32
//! dprime × coordinate:
//!   hasher     random line: offset f64, dim × f64 direction
//!              hyperplane:  k × dim × f64 unit directions
//!              ℓ1 grid:     k × dim × f64 shifts
//!   bit seed   u64
//!   memo       count u64, count × (hash value i64, bit u8), ascending by value
//! buckets      count u64, count × (key u64, len u32, len × id u32), ascending by key
//! checksum     u64     FNV-1a of the dataset (see `Dataset::checksum`)
//! ```

use std::fs;
use std::path::Path;
use std::sync::Arc;

use rustc_hash::FxHashMap;

use super::{fits, BitAssignment, HypercubeIndex, MAX_DPRIME};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::lsh::{FamilySpec, GridL1Hash, HyperplaneHash, LshHasher, RandomLineHash};

pub const MAGIC: [u8; 4] = *b"HDLP";
pub const FORMAT_VERSION: u16 = 1;

const TAG_LINE: u8 = 1;
const TAG_HYPERPLANE: u8 = 2;
const TAG_GRID: u8 = 3;

/// Index metadata readable without the dataset.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct IndexInfo {
    pub version: u16,
    pub dprime: u32,
    pub family: FamilySpec,
    pub dim: usize,
    pub n: usize,
    pub seed: u64,
    pub non_empty_buckets: usize,
    pub memo_entries: usize,
    pub dataset_checksum: u64,
    pub bytes: usize,
}

impl HypercubeIndex {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&self.dprime.to_le_bytes());
        out.push(match self.family {
            FamilySpec::RandomLine { .. } => TAG_LINE,
            FamilySpec::Hyperplane { .. } => TAG_HYPERPLANE,
            FamilySpec::GridL1 { .. } => TAG_GRID,
        });
        out.extend_from_slice(&(self.dim() as u32).to_le_bytes());
        out.extend_from_slice(&(self.len() as u64).to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        let put_f64s = |out: &mut Vec<u8>, xs: &[f64]| xs.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes()));
        match self.family {
            FamilySpec::RandomLine { width, mu, sigma } => put_f64s(&mut out, &[width, mu, sigma]),
            FamilySpec::Hyperplane { k } => out.extend_from_slice(&(k as u32).to_le_bytes()),
            FamilySpec::GridL1 { width, k } => {
                put_f64s(&mut out, &[width]);
                out.extend_from_slice(&(k as u32).to_le_bytes());
            }
        }
        for (hasher, bits) in self.hashers.iter().zip(&self.bits) {
            match hasher {
                LshHasher::Line(h) => {
                    put_f64s(&mut out, &[h.offset()]);
                    put_f64s(&mut out, h.direction());
                }
                LshHasher::Hyperplane(h) => put_f64s(&mut out, h.raw_directions()),
                LshHasher::Grid(h) => put_f64s(&mut out, h.offsets()),
            }
            out.extend_from_slice(&bits.seed().to_le_bytes());
            let memo = bits.entries();
            out.extend_from_slice(&(memo.len() as u64).to_le_bytes());
            for (value, bit) in memo {
                out.extend_from_slice(&value.to_le_bytes());
                out.push(bit as u8);
            }
        }
        let mut keys: Vec<u64> = self.buckets.keys().copied().collect();
        keys.sort_unstable();
        out.extend_from_slice(&(keys.len() as u64).to_le_bytes());
        for key in keys {
            let ids = &self.buckets[&key];
            out.extend_from_slice(&key.to_le_bytes());
            out.extend_from_slice(&(ids.len() as u32).to_le_bytes());
            ids.iter().for_each(|id| out.extend_from_slice(&id.to_le_bytes()));
        }
        out.extend_from_slice(&self.dataset.checksum().to_le_bytes());
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    /// Loads an index saved for `dataset`. The dataset must be the one the
    /// index was built on; its checksum is verified.
    pub fn load(path: impl AsRef<Path>, dataset: Arc<Dataset>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?, dataset)
    }

    pub fn from_bytes(bytes: &[u8], dataset: Arc<Dataset>) -> Result<Self> {
        let raw = RawIndex::parse(bytes)?;
        if raw.checksum != dataset.checksum() {
            return Err(Error::Load(format!(
                "dataset checksum {:#018x} does not match the index's {:#018x}",
                dataset.checksum(),
                raw.checksum
            )));
        }
        if raw.dim != dataset.dim() || raw.n != dataset.len() {
            return Err(Error::Load(format!(
                "index covers {} points of dimension {}, dataset has {} of dimension {}",
                raw.n,
                raw.dim,
                dataset.len(),
                dataset.dim()
            )));
        }
        Ok(Self {
            dataset,
            dprime: raw.dprime,
            family: raw.family,
            seed: raw.seed,
            hashers: raw.hashers,
            bits: raw.bits,
            buckets: raw.buckets,
        })
    }
}

pub fn read_index_info(path: impl AsRef<Path>) -> Result<IndexInfo> {
    let bytes = fs::read(path)?;
    let raw = RawIndex::parse(&bytes)?;
    Ok(IndexInfo {
        version: FORMAT_VERSION,
        dprime: raw.dprime,
        family: raw.family,
        dim: raw.dim,
        n: raw.n,
        seed: raw.seed,
        non_empty_buckets: raw.buckets.len(),
        memo_entries: raw.bits.iter().map(BitAssignment::len).sum(),
        dataset_checksum: raw.checksum,
        bytes: bytes.len(),
    })
}

struct RawIndex {
    dprime: u32,
    family: FamilySpec,
    dim: usize,
    n: usize,
    seed: u64,
    hashers: Vec<LshHasher>,
    bits: Vec<BitAssignment>,
    buckets: FxHashMap<u64, Vec<u32>>,
    checksum: u64,
}

impl RawIndex {
    fn parse(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Load("not an index file (bad magic)".into()));
        }
        let version = r.u16()?;
        if version != FORMAT_VERSION {
            return Err(Error::Load(format!(
                "unsupported format version {version}, expected {FORMAT_VERSION}"
            )));
        }
        let dprime = r.u32()?;
        if !(1..=MAX_DPRIME).contains(&dprime) {
            return Err(Error::Load(format!("d' {dprime} out of range")));
        }
        let tag = r.u8()?;
        let dim = r.u32()? as usize;
        let n = usize::try_from(r.u64()?).map_err(|_| Error::Load("point count overflows".into()))?;
        let seed = r.u64()?;
        if dim == 0 || n == 0 {
            return Err(Error::Load("empty dataset recorded in index".into()));
        }
        let family = match tag {
            TAG_LINE => FamilySpec::RandomLine { width: r.f64()?, mu: r.f64()?, sigma: r.f64()? },
            TAG_HYPERPLANE => FamilySpec::Hyperplane { k: r.u32()? as usize },
            TAG_GRID => FamilySpec::GridL1 { width: r.f64()?, k: r.u32()? as usize },
            other => return Err(Error::Load(format!("unknown family tag {other}"))),
        };
        family.validate().map_err(|e| Error::Load(e.to_string()))?;

        let mut hashers = Vec::with_capacity(dprime as usize);
        let mut bits = Vec::with_capacity(dprime as usize);
        for _ in 0..dprime {
            let hasher = match family {
                FamilySpec::RandomLine { width, .. } => {
                    let offset = r.f64()?;
                    LshHasher::Line(RandomLineHash::from_parts(r.f64s(dim)?, offset, width)?)
                }
                FamilySpec::Hyperplane { k } => {
                    LshHasher::Hyperplane(HyperplaneHash::from_parts(dim, r.f64s(k * dim)?)?)
                }
                FamilySpec::GridL1 { width, k } => {
                    LshHasher::Grid(GridL1Hash::from_parts(dim, width, r.f64s(k * dim)?)?)
                }
            };
            hashers.push(hasher);
            let bit_seed = r.u64()?;
            let count = r.count(9)?;
            let mut memo = FxHashMap::default();
            memo.reserve(count);
            for _ in 0..count {
                let value = r.i64()?;
                let bit = match r.u8()? {
                    0 => false,
                    1 => true,
                    b => return Err(Error::Load(format!("memo bit byte {b} is not 0 or 1"))),
                };
                memo.insert(value, bit);
            }
            bits.push(BitAssignment::with_memo(bit_seed, memo));
        }

        let bucket_count = r.count(12)?;
        let mut buckets = FxHashMap::default();
        buckets.reserve(bucket_count);
        let mut seen = vec![false; n];
        for _ in 0..bucket_count {
            let key = r.u64()?;
            if !fits(key, dprime) {
                return Err(Error::Load(format!("bucket key {key:#x} wider than d' = {dprime}")));
            }
            let len = r.u32()? as usize;
            let mut ids = Vec::with_capacity(len.min(n));
            for _ in 0..len {
                let id = r.u32()?;
                let slot = seen
                    .get_mut(id as usize)
                    .ok_or_else(|| Error::Load(format!("point id {id} out of range")))?;
                if std::mem::replace(slot, true) {
                    return Err(Error::Load(format!("point id {id} stored twice")));
                }
                ids.push(id);
            }
            if buckets.insert(key, ids).is_some() {
                return Err(Error::Load(format!("bucket {key:#x} stored twice")));
            }
        }
        if let Some(missing) = seen.iter().position(|&s| !s) {
            return Err(Error::Load(format!("point id {missing} missing from buckets")));
        }
        let checksum = r.u64()?;
        if r.pos != bytes.len() {
            return Err(Error::Load(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        Ok(Self { dprime, family, dim, n, seed, hashers, bits, buckets, checksum })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(len).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::Load(format!("truncated file: needed {len} bytes at offset {}", self.pos))
        })?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().unwrap())
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.array::<1>()?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.array()?))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    fn i64(&mut self) -> Result<i64> {
        Ok(i64::from_le_bytes(self.array()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }

    fn f64s(&mut self, count: usize) -> Result<Vec<f64>> {
        let bytes = self.take(count.checked_mul(8).ok_or_else(|| Error::Load("length overflow".into()))?)?;
        Ok(bytes.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect())
    }

    // A u64 element count, rejected if the remaining bytes cannot hold it.
    fn count(&mut self, min_element_size: usize) -> Result<usize> {
        let count = self.u64()?;
        let remaining = (self.bytes.len() - self.pos) as u64;
        if count > remaining / min_element_size as u64 {
            return Err(Error::Load(format!("truncated file: count {count} at offset {}", self.pos - 8)));
        }
        Ok(count as usize)
    }
}
