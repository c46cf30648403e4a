//! Linear-space approximate near-neighbor search.
//!
//! Points are projected onto the vertices of a Hamming hypercube of
//! dimension `d'` (about `log2 n`). Each hypercube coordinate is produced by
//! one LSH function followed by a random fair-coin map from hash values to
//! bits. Points are bucketed by their `d'`-bit key, and a query inspects the
//! buckets of its own vertex and of nearby vertices in order of increasing
//! Hamming distance, checking candidates with the exact metric until it finds
//! a point within the search radius or exhausts its candidate budget.
//!
//! The crate is organized as:
//!
//! - [`lsh`]: the random-line (ℓ2), hyperplane (unit sphere) and shifted-grid
//!   (ℓ1) families, plus the collision-probability formulas used for
//!   parameter selection.
//! - [`hypercube`]: the index itself, its bit assignments and its on-disk
//!   format.
//! - [`search`]: Hamming-ball enumeration, decision and all-near queries,
//!   and the brute-force oracle.
//! - [`data`]: `fvecs`/`bvecs`/`ivecs` I/O and synthetic workloads.
//! - [`bench`]: the benchmark driver behind the command-line tool.

pub mod bench;
pub mod data;
mod error;
mod kernels;
pub mod hypercube;
pub mod lsh;
pub mod search;

pub use data::{Dataset, ElementKind, QuerySet};
pub use error::{Error, Result};
pub use hypercube::{default_dprime, HypercubeIndex, Key};
pub use lsh::{FamilySpec, Metric};
pub use search::{QueryOutcome, QueryParams};
