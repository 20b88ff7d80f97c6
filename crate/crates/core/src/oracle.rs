//! Brute-force references.
//!
//! Everything here is a linear scan or a sort over the whole input and shares
//! nothing with the structures under test beyond the predicates of [`crate::geom`].

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::geom::{disk_edge, Disk, Plane, Point3, VerticalLine};

fn key(p: &Plane, line: &VerticalLine) -> (i128, u64) {
    (p.scaled_height(line), p.id)
}

/// The lowest plane at `line`, ties to the smaller id.
pub fn naive_lowest<'a>(planes: impl IntoIterator<Item = &'a Plane>, line: &VerticalLine) -> Option<Plane> {
    planes.into_iter().min_by_key(|p| key(p, line)).copied()
}

/// The `min(k, n)` lowest planes at `line`, sorted by height then id.
pub fn naive_k_lowest<'a>(planes: impl IntoIterator<Item = &'a Plane>, line: &VerticalLine, k: usize) -> Result<Vec<Plane>> {
    if k == 0 {
        return Err(Error::ZeroK);
    }
    let mut all: Vec<Plane> = planes.into_iter().copied().collect();
    all.sort_by_key(|p| key(p, line));
    all.truncate(k);
    Ok(all)
}

/// Planes strictly below `point`, sorted by id.
pub fn naive_below<'a>(planes: impl IntoIterator<Item = &'a Plane>, point: &Point3) -> Vec<Plane> {
    let mut out: Vec<Plane> = planes.into_iter().filter(|p| point.is_above(p)).copied().collect();
    out.sort_by_key(|p| p.id);
    out
}

/// Exhaustive additively weighted nearest neighbor: argmin of `|q - p| + w`.
/// Points are `(id, x, y, w)`. Every point within `eps` of the minimum counts
/// as tied and the smallest id among them wins.
pub fn naive_awnn(points: &[(u64, f64, f64, f64)], q: (f64, f64), eps: f64) -> Result<u64> {
    let d = |&(_, x, y, w): &(u64, f64, f64, f64)| (x - q.0).hypot(y - q.1) + w;
    let best = points.iter().map(d).fold(f64::INFINITY, f64::min);
    points.iter().filter(|p| d(p) <= best + eps).map(|p| p.0).min().ok_or(Error::Empty)
}

/// Exact Euclidean nearest neighbor of `(x, y)` among integer points, ties to
/// the smaller id. Points are `(id, x, y)`.
pub fn naive_nn(points: &[(u64, i64, i64)], x: i64, y: i64) -> Option<u64> {
    points
        .iter()
        .min_by_key(|&&(id, px, py)| {
            let (dx, dy) = ((px - x) as i128, (py - y) as i128);
            (dx * dx + dy * dy, id)
        })
        .map(|p| p.0)
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

/// Dijkstra on the explicit proximity graph: an edge joins two disks whose gap
/// is at most `r`, weighted by the distance between centers. Returns distances
/// in input order, `f64::INFINITY` where unreachable.
pub fn dijkstra_explicit(disks: &[Disk], r: f64, source: u64) -> Result<Vec<f64>> {
    let s = disks.iter().position(|d| d.id == source).ok_or(Error::UnknownId(source))?;
    let n = disks.len();
    let mut adj = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            if disk_edge(&disks[i], &disks[j], r)? {
                let w = disks[i].dist(&disks[j]);
                adj[i].push((j, w));
                adj[j].push((i, w));
            }
        }
    }
    let mut dist = vec![f64::INFINITY; n];
    dist[s] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(Entry(0.0, s));
    while let Some(Entry(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, w) in &adj[u] {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(Entry(nd, v));
            }
        }
    }
    Ok(dist)
}
