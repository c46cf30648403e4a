//! Query algorithms over a [`HypercubeIndex`], and the exact oracle.
//!
//! A query projects onto its hypercube vertex and walks the Hamming ball
//! around it nearest-first. Empty vertices cost one hash-map probe and no
//! distance computations. Every point in a visited bucket is a candidate and
//! is checked with the exact metric.

mod ball;

use std::fmt;
use std::ops::ControlFlow;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use ball::{hamming_ball, HammingBall};

use crate::data::Dataset;
use crate::error::{check_dim, parameter, Result};
use crate::hypercube::HypercubeIndex;
use crate::kernels;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    L2,
    L1,
}

impl Metric {
    /// Distance without a dimension check.
    #[inline]
    pub fn distance(self, p: &[f64], q: &[f64]) -> f64 {
        match self {
            Metric::L2 => kernels::squared_l2(p, q).sqrt(),
            Metric::L1 => kernels::l1(p, q),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::L2 => "l2",
            Metric::L1 => "l1",
        })
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "l2" => Ok(Metric::L2),
            "l1" => Ok(Metric::L1),
            other => Err(format!("unknown metric {other:?}, expected l2 or l1")),
        }
    }
}

pub fn metric_distance(p: &[f64], q: &[f64], metric: Metric) -> Result<f64> {
    check_dim(p.len(), q.len())?;
    Ok(metric.distance(p, q))
}

/// A dataset point and its exact distance to the query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Neighbor {
    pub id: u32,
    pub distance: f64,
}

/// Work done by one query.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SearchStats {
    /// Points whose exact distance was computed.
    pub candidates_examined: usize,
    /// Hypercube vertices enumerated, empty or not.
    pub buckets_visited: usize,
    /// Hamming distance of the last vertex enumerated.
    pub max_radius_reached: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QueryOutcome {
    /// First candidate found within the radius, or `None` for "no".
    pub witness: Option<Neighbor>,
    pub stats: SearchStats,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NearNeighbors {
    /// Sorted by ascending distance, ties by ascending id.
    pub neighbors: Vec<Neighbor>,
    pub stats: SearchStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueryParams {
    /// Search radius `r`.
    pub radius: f64,
    /// Approximation factor, kept for reporting.
    pub c: Option<f64>,
    /// Most candidates examined before answering.
    pub threshold: usize,
    /// Largest Hamming radius explored; `None` means `d'`.
    pub rho_max: Option<u32>,
}

impl QueryParams {
    pub fn new(radius: f64, threshold: usize) -> Self {
        Self { radius, c: None, threshold, rho_max: None }
    }

    pub fn with_rho_max(mut self, rho_max: u32) -> Self {
        self.rho_max = Some(rho_max);
        self
    }

    pub fn with_c(mut self, c: f64) -> Self {
        self.c = Some(c);
        self
    }

    pub fn validate(&self, dprime: u32) -> Result<()> {
        if !(self.radius >= 0.0 && self.radius.is_finite()) {
            return Err(parameter(format!("radius must be non-negative, got {}", self.radius)));
        }
        if self.threshold == 0 {
            return Err(parameter("threshold must be at least 1"));
        }
        if let Some(c) = self.c {
            if !(c > 1.0) {
                return Err(parameter(format!("approximation factor must exceed 1, got {c}")));
            }
        }
        if let Some(rho) = self.rho_max {
            if rho > dprime {
                return Err(parameter(format!("rho_max {rho} exceeds d' = {dprime}")));
            }
        }
        Ok(())
    }
}

/// `floor(d'·(1 − p1)/2)`: the Hamming radius within which a near pair's
/// keys are expected to fall.
pub fn hamming_radius_cap(dprime: u32, p1: f64) -> Result<u32> {
    if !(0.0..=1.0).contains(&p1) {
        return Err(parameter(format!("p1 must be a probability, got {p1}")));
    }
    Ok((dprime as f64 * (1.0 - p1) / 2.0).floor() as u32)
}

impl HypercubeIndex {
    /// Returns the first candidate within `radius`, or "no" once the
    /// threshold or the Hamming ball is exhausted.
    pub fn query_decision(&self, q: &[f64], params: &QueryParams) -> Result<QueryOutcome> {
        let mut witness = None;
        let stats = self.traverse(q, params, |n| {
            if n.distance <= params.radius {
                witness = Some(n);
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        })?;
        Ok(QueryOutcome { witness, stats })
    }

    /// Every candidate within `radius` met before the threshold or the
    /// Hamming ball is exhausted.
    pub fn query_all_near(&self, q: &[f64], params: &QueryParams) -> Result<NearNeighbors> {
        let mut neighbors = Vec::new();
        let stats = self.traverse(q, params, |n| {
            if n.distance <= params.radius {
                neighbors.push(n);
            }
            ControlFlow::Continue(())
        })?;
        sort_neighbors(&mut neighbors);
        Ok(NearNeighbors { neighbors, stats })
    }

    /// Feeds candidates to `visit` in enumeration order. Stops when `visit`
    /// breaks, after `threshold` candidates, once every point has been
    /// examined, or when the ball of radius `rho_max` is exhausted.
    fn traverse(
        &self,
        q: &[f64],
        params: &QueryParams,
        mut visit: impl FnMut(Neighbor) -> ControlFlow<()>,
    ) -> Result<SearchStats> {
        params.validate(self.dprime())?;
        let center = self.project(q)?;
        let metric = self.family().metric();
        let dataset = self.dataset();
        let budget = params.threshold.min(self.len());
        let mut stats = SearchStats::default();
        let mut ball = hamming_ball(center, self.dprime(), params.rho_max.unwrap_or(self.dprime()))?;
        while let Some(key) = ball.next() {
            stats.buckets_visited += 1;
            stats.max_radius_reached = ball.radius();
            for &id in self.bucket_unchecked(key.bits()) {
                stats.candidates_examined += 1;
                let distance = metric.distance(dataset.point(id as usize), q);
                let flow = visit(Neighbor { id, distance });
                if flow.is_break() || stats.candidates_examined == budget {
                    return Ok(stats);
                }
            }
        }
        Ok(stats)
    }
}

/// Exact scan: every point within `radius` of `q`, sorted by distance then id.
pub fn brute_force_near(dataset: &Dataset, q: &[f64], radius: f64, metric: Metric) -> Result<Vec<Neighbor>> {
    check_dim(dataset.dim(), q.len())?;
    let mut out: Vec<Neighbor> = dataset
        .iter()
        .enumerate()
        .filter_map(|(id, p)| {
            let distance = metric.distance(p, q);
            (distance <= radius).then_some(Neighbor { id: id as u32, distance })
        })
        .collect();
    sort_neighbors(&mut out);
    Ok(out)
}

fn sort_neighbors(neighbors: &mut [Neighbor]) {
    neighbors.sort_by(|a, b| a.distance.total_cmp(&b.distance).then(a.id.cmp(&b.id)));
}
