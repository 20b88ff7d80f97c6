//! Planar nearest-neighbor frontends.
//!
//! [`NnIndex`] answers Euclidean nearest-neighbor queries by lifting points to
//! planes tangent to the paraboloid and asking a corrected [`StarStructure`]
//! for the lowest one. The additively weighted variants work through the
//! [`AwnnBackend`] contract; [`ExhaustiveAwnn`] is the reference backend.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{lift_point, PlanarPoint, VerticalLine};
use crate::star::{DeleteMode, StarConfig, StarStructure};

/// Tolerance for weighted-distance comparisons; values this close count as tied and go to the smaller id.
pub const EPS_DIST: f64 = 1e-9;

/// A point with an additive weight: its distance to `q` is `|q - p| + w`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedPoint {
    pub id: u64,
    pub x: f64,
    pub y: f64,
    pub w: f64,
}

impl WeightedPoint {
    pub fn new(id: u64, x: f64, y: f64, w: f64) -> Self {
        WeightedPoint { id, x, y, w }
    }

    #[inline]
    pub fn weighted_dist(&self, q: (f64, f64)) -> f64 {
        (self.x - q.0).hypot(self.y - q.1) + self.w
    }
}

/// A static set answering additively weighted nearest-neighbor queries.
///
/// The nearest point is the smallest id among those within [`EPS_DIST`] of the
/// minimum weighted distance, which makes the answer independent of how the set
/// is split across structures. `keep` filters out members a caller has retired.
pub trait AwnnBackend: Sized {
    fn build(points: Vec<WeightedPoint>) -> Self;
    fn points(&self) -> &[WeightedPoint];
    /// Smallest weighted distance to `q` over kept members.
    fn min_dist(&self, q: (f64, f64), keep: &dyn Fn(u64) -> bool) -> Option<f64>;
    /// The kept member with the smallest id whose weighted distance is at most `bound`.
    fn first_within(&self, q: (f64, f64), bound: f64, keep: &dyn Fn(u64) -> bool) -> Option<(WeightedPoint, f64)>;

    fn len(&self) -> usize {
        self.points().len()
    }

    fn is_empty(&self) -> bool {
        self.points().is_empty()
    }

    fn nearest(&self, q: (f64, f64)) -> Result<(WeightedPoint, f64)> {
        let all = |_: u64| true;
        let d = self.min_dist(q, &all).ok_or(Error::Empty)?;
        Ok(self.first_within(q, d + EPS_DIST, &all).expect("the minimum is within tolerance of itself"))
    }
}

/// Linear scan over the members.
#[derive(Clone, Debug, Default)]
pub struct ExhaustiveAwnn {
    points: Vec<WeightedPoint>,
}

impl AwnnBackend for ExhaustiveAwnn {
    fn build(points: Vec<WeightedPoint>) -> Self {
        ExhaustiveAwnn { points }
    }

    fn points(&self) -> &[WeightedPoint] {
        &self.points
    }

    fn min_dist(&self, q: (f64, f64), keep: &dyn Fn(u64) -> bool) -> Option<f64> {
        self.points.iter().filter(|p| keep(p.id)).map(|p| p.weighted_dist(q)).min_by(f64::total_cmp)
    }

    fn first_within(&self, q: (f64, f64), bound: f64, keep: &dyn Fn(u64) -> bool) -> Option<(WeightedPoint, f64)> {
        self.points
            .iter()
            .filter(|p| keep(p.id))
            .map(|p| (*p, p.weighted_dist(q)))
            .filter(|(_, d)| *d <= bound)
            .min_by_key(|(p, _)| p.id)
    }
}

/// Insertion-only weighted nearest neighbor by the logarithmic method: buckets
/// of distinct power-of-two sizes, merged like a binary counter.
#[derive(Clone, Debug)]
pub struct InsertOnlyAwnn<B: AwnnBackend = ExhaustiveAwnn> {
    buckets: Vec<B>,
    ids: HashSet<u64>,
}

impl<B: AwnnBackend> Default for InsertOnlyAwnn<B> {
    fn default() -> Self {
        InsertOnlyAwnn { buckets: Vec::new(), ids: HashSet::new() }
    }
}

impl<B: AwnnBackend> InsertOnlyAwnn<B> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds from a whole set at once, bucketed by the binary digits of its size.
    pub fn from_points(points: Vec<WeightedPoint>) -> Result<Self> {
        let mut ids = HashSet::with_capacity(points.len());
        for p in &points {
            if !ids.insert(p.id) {
                return Err(Error::DuplicateId(p.id));
            }
        }
        let mut buckets = Vec::new();
        let mut rest = points;
        while !rest.is_empty() {
            let size = 1usize << rest.len().ilog2();
            let tail = rest.split_off(size);
            buckets.push(B::build(rest));
            rest = tail;
        }
        Ok(InsertOnlyAwnn { buckets, ids })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn contains(&self, id: u64) -> bool {
        self.ids.contains(&id)
    }

    /// Bucket sizes, largest first.
    pub fn bucket_sizes(&self) -> Vec<usize> {
        self.buckets.iter().map(|b| b.len()).collect()
    }

    pub fn points(&self) -> impl Iterator<Item = &WeightedPoint> {
        self.buckets.iter().flat_map(|b| b.points().iter())
    }

    pub fn insert(&mut self, p: WeightedPoint) -> Result<()> {
        if !self.ids.insert(p.id) {
            return Err(Error::DuplicateId(p.id));
        }
        let mut merged = vec![p];
        while self.buckets.last().is_some_and(|b| b.len() == merged.len()) {
            let b = self.buckets.pop().expect("checked nonempty");
            merged.extend_from_slice(b.points());
        }
        self.buckets.push(B::build(merged));
        Ok(())
    }

    pub fn nearest(&self, q: (f64, f64)) -> Result<(WeightedPoint, f64)> {
        let all = |_: u64| true;
        let d = self.min_dist(q).ok_or(Error::Empty)?;
        Ok(self.first_within(q, d + EPS_DIST, &all).expect("some bucket attains the minimum"))
    }

    /// Smallest weighted distance to `q` over all buckets.
    pub fn min_dist(&self, q: (f64, f64)) -> Option<f64> {
        let all = |_: u64| true;
        self.buckets.iter().filter_map(|b| b.min_dist(q, &all)).min_by(f64::total_cmp)
    }

    /// The kept member with the smallest id whose weighted distance is at most `bound`.
    pub fn first_within(&self, q: (f64, f64), bound: f64, keep: &dyn Fn(u64) -> bool) -> Option<(WeightedPoint, f64)> {
        self.buckets.iter().filter_map(|b| b.first_within(q, bound, keep)).min_by_key(|(p, _)| p.id)
    }

    /// Members within [`EPS_DIST`] of the minimum weighted distance, by increasing id.
    pub fn nearest_ties(&self, q: (f64, f64)) -> Vec<(WeightedPoint, f64)> {
        let Some(d) = self.min_dist(q) else { return Vec::new() };
        let mut out: Vec<(WeightedPoint, f64)> = Vec::new();
        loop {
            let keep = |id: u64| out.iter().all(|(p, _)| p.id != id);
            match self.first_within(q, d + EPS_DIST, &keep) {
                Some(hit) => out.push(hit),
                None => return out,
            }
        }
    }
}

/// A deletion-only pool: popped members are tombstoned, and the backend is
/// rebuilt over the survivors once tombstones outnumber them.
#[derive(Clone, Debug)]
pub struct DeletionPool<B: AwnnBackend = ExhaustiveAwnn> {
    backend: B,
    tombstones: HashSet<u64>,
    live: usize,
    rebuilds: u64,
}

impl<B: AwnnBackend> DeletionPool<B> {
    pub fn new(points: Vec<WeightedPoint>) -> Self {
        let live = points.len();
        DeletionPool { backend: B::build(points), tombstones: HashSet::new(), live, rebuilds: 0 }
    }

    pub fn len(&self) -> usize {
        self.live
    }

    pub fn is_empty(&self) -> bool {
        self.live == 0
    }

    pub fn tombstones(&self) -> usize {
        self.tombstones.len()
    }

    pub fn rebuilds(&self) -> u64 {
        self.rebuilds
    }

    pub fn contains(&self, id: u64) -> bool {
        !self.tombstones.contains(&id) && self.backend.points().iter().any(|p| p.id == id)
    }

    /// Live members, in backend order.
    pub fn members(&self) -> Vec<WeightedPoint> {
        self.backend.points().iter().filter(|p| !self.tombstones.contains(&p.id)).copied().collect()
    }

    /// Removes and returns the nearest live member if its weighted distance to `q` is at most `bound`.
    pub fn pop_within(&mut self, q: (f64, f64), bound: f64) -> Option<WeightedPoint> {
        self.pop_nearest_if(q, |_, d| d <= bound + EPS_DIST)
    }

    /// Removes and returns the nearest live member if `accept` takes it.
    ///
    /// Members tied with the nearest within [`EPS_DIST`] are offered in id
    /// order, so an exact predicate near the tolerance still finds a match.
    pub fn pop_nearest_if(&mut self, q: (f64, f64), accept: impl Fn(&WeightedPoint, f64) -> bool) -> Option<WeightedPoint> {
        let tomb = &self.tombstones;
        let keep = |id: u64| !tomb.contains(&id);
        let d = self.backend.min_dist(q, &keep)?;
        let mut tried: HashSet<u64> = HashSet::new();
        let found = loop {
            let keep = |id: u64| !tomb.contains(&id) && !tried.contains(&id);
            let Some((p, dp)) = self.backend.first_within(q, d + EPS_DIST, &keep) else { break None };
            if accept(&p, dp) {
                break Some(p);
            }
            tried.insert(p.id);
        };
        let p = found?;
        self.tombstones.insert(p.id);
        self.live -= 1;
        if self.tombstones.len() > self.live {
            let rest = self.members();
            self.backend = B::build(rest);
            self.tombstones.clear();
            self.rebuilds += 1;
        }
        Some(p)
    }
}

/// Dynamic Euclidean nearest neighbor over integer points, via lifting.
#[derive(Clone, Debug)]
pub struct NnIndex {
    star: StarStructure,
    points: HashMap<u64, PlanarPoint>,
}

impl Default for NnIndex {
    fn default() -> Self {
        Self::new()
    }
}

impl NnIndex {
    pub fn new() -> Self {
        NnIndex { star: StarStructure::new(StarConfig::with_mode(DeleteMode::Corrected)), points: HashMap::new() }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn insert(&mut self, p: PlanarPoint) -> Result<()> {
        if self.points.contains_key(&p.id) {
            return Err(Error::DuplicateId(p.id));
        }
        self.star.insert(lift_point(&p))?;
        self.points.insert(p.id, p);
        Ok(())
    }

    pub fn delete(&mut self, id: u64) -> Result<()> {
        if self.points.remove(&id).is_none() {
            return Err(Error::UnknownId(id));
        }
        self.star.delete(id)
    }

    /// The nearest point to `(x, y)`, ties to the smaller id.
    pub fn nearest(&self, x: i64, y: i64) -> Result<Option<PlanarPoint>> {
        let line = VerticalLine::new(x, y)?;
        Ok(self.star.query(&line).map(|h| self.points[&h.id]))
    }

    pub fn star(&self) -> &StarStructure {
        &self.star
    }
}
