//! Single-source shortest paths in the disk proximity graph.
//!
//! Two disks are adjacent when the gap between them is at most `r`; an edge
//! weighs the distance between centers. Settled disks are kept in a tree
//! ordered by `dis(p) + r_p` whose nodes carry two weighted nearest-neighbor
//! sets, and unreached disks sit in a deletion pool weighted by `-r_p`.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use ordered_float::OrderedFloat;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::{disk_gap_within, Disk};
use crate::nn2d::{DeletionPool, InsertOnlyAwnn, WeightedPoint};

/// Subtree weight fraction above which the scapegoat rebuild fires.
const BALANCE: f64 = 0.7;

fn radius_point(d: &Disk) -> WeightedPoint {
    WeightedPoint::new(d.id, d.x, d.y, -d.r)
}

fn distance_point(d: &Disk, dis: f64) -> WeightedPoint {
    WeightedPoint::new(d.id, d.x, d.y, dis)
}

fn disk_of(p: &WeightedPoint) -> Disk {
    Disk { id: p.id, x: p.x, y: p.y, r: -p.w }
}

type Key = (OrderedFloat<f64>, u64);

#[derive(Clone, Debug)]
enum Kind {
    Leaf,
    Inner { left: usize, right: usize },
}

#[derive(Clone, Debug)]
struct Node {
    parent: Option<usize>,
    kind: Kind,
    size: usize,
    /// Key of the rightmost leaf below.
    max: Key,
    /// Weights `-r_p`.
    vor1: InsertOnlyAwnn,
    /// Weights `dis(p)`.
    vor2: InsertOnlyAwnn,
}

/// A leaf of [`TaIndex`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LeafRef(usize);

/// Settled disks in a leaf-oriented scapegoat tree keyed by `(dis(p) + r_p, id)`.
#[derive(Clone, Debug, Default)]
pub struct TaIndex {
    nodes: Vec<Node>,
    free: Vec<usize>,
    root: Option<usize>,
    /// Per leaf node: the disk and its distance.
    items: HashMap<usize, (Disk, f64)>,
    disks: HashMap<u64, Disk>,
    rebuilds: u64,
    pub(crate) vor1_queries: u64,
    pub(crate) vor2_queries: u64,
}

impl TaIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.disks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.disks.is_empty()
    }

    /// Subtree rebuilds performed so far.
    pub fn rebuilds(&self) -> u64 {
        self.rebuilds
    }

    pub fn height(&self) -> usize {
        fn h(t: &TaIndex, v: usize) -> usize {
            match t.nodes[v].kind {
                Kind::Leaf => 0,
                Kind::Inner { left, right } => 1 + h(t, left).max(h(t, right)),
            }
        }
        self.root.map_or(0, |r| h(self, r))
    }

    fn alloc(&mut self, node: Node) -> usize {
        match self.free.pop() {
            Some(i) => {
                self.nodes[i] = node;
                i
            }
            None => {
                self.nodes.push(node);
                self.nodes.len() - 1
            }
        }
    }

    fn key(d: &Disk, dis: f64) -> Key {
        (OrderedFloat(dis + d.r), d.id)
    }

    fn leaf(&mut self, d: Disk, dis: f64, parent: Option<usize>) -> usize {
        let mut vor1 = InsertOnlyAwnn::new();
        let mut vor2 = InsertOnlyAwnn::new();
        vor1.insert(radius_point(&d)).expect("fresh set");
        vor2.insert(distance_point(&d, dis)).expect("fresh set");
        let v = self.alloc(Node { parent, kind: Kind::Leaf, size: 1, max: Self::key(&d, dis), vor1, vor2 });
        self.items.insert(v, (d, dis));
        v
    }

    /// Leaves left to right as `(disk, dis)`.
    pub fn leaves(&self) -> Vec<(Disk, f64)> {
        let mut out = Vec::with_capacity(self.len());
        if let Some(r) = self.root {
            self.collect(r, &mut out);
        }
        out
    }

    fn collect(&self, v: usize, out: &mut Vec<(Disk, f64)>) {
        match self.nodes[v].kind {
            Kind::Leaf => out.push(self.items[&v]),
            Kind::Inner { left, right } => {
                self.collect(left, out);
                self.collect(right, out);
            }
        }
    }

    /// Adds a settled disk with distance `dis`.
    pub fn insert(&mut self, d: Disk, dis: f64) -> Result<()> {
        if self.disks.contains_key(&d.id) {
            return Err(Error::DuplicateId(d.id));
        }
        self.disks.insert(d.id, d);
        let key = Self::key(&d, dis);
        let Some(mut v) = self.root else {
            self.root = Some(self.leaf(d, dis, None));
            return Ok(());
        };
        while let Kind::Inner { left, right } = self.nodes[v].kind {
            v = if key <= self.nodes[left].max { left } else { right };
        }
        // Split leaf `v` into an inner node over the old leaf and the new one.
        let parent = self.nodes[v].parent;
        let new_leaf = self.leaf(d, dis, None);
        let old_key = self.nodes[v].max;
        let (left, right) = if key < old_key { (new_leaf, v) } else { (v, new_leaf) };
        let mut vor1 = self.nodes[v].vor1.clone();
        let mut vor2 = self.nodes[v].vor2.clone();
        vor1.insert(radius_point(&d)).expect("id checked");
        vor2.insert(distance_point(&d, dis)).expect("id checked");
        let inner = self.alloc(Node { parent, kind: Kind::Inner { left, right }, size: 2, max: old_key.max(key), vor1, vor2 });
        self.nodes[left].parent = Some(inner);
        self.nodes[right].parent = Some(inner);
        match parent {
            None => self.root = Some(inner),
            Some(p) => self.replace_child(p, v, inner),
        }
        let mut scapegoat = None;
        let mut u = parent;
        while let Some(a) = u {
            let node = &mut self.nodes[a];
            node.size += 1;
            node.max = node.max.max(key);
            node.vor1.insert(radius_point(&d)).expect("id checked");
            node.vor2.insert(distance_point(&d, dis)).expect("id checked");
            if let Kind::Inner { left, right } = node.kind {
                let heavy = self.nodes[left].size.max(self.nodes[right].size);
                if heavy as f64 > BALANCE * self.nodes[a].size as f64 && self.nodes[a].size > 2 {
                    scapegoat = Some(a);
                }
            }
            u = self.nodes[a].parent;
        }
        if let Some(a) = scapegoat {
            self.rebuild_subtree(a);
        }
        Ok(())
    }

    fn replace_child(&mut self, p: usize, old: usize, new: usize) {
        if let Kind::Inner { left, right } = &mut self.nodes[p].kind {
            if *left == old {
                *left = new;
            } else {
                debug_assert_eq!(*right, old);
                *right = new;
            }
        }
    }

    fn release(&mut self, v: usize) {
        if let Kind::Inner { left, right } = self.nodes[v].kind {
            self.release(left);
            self.release(right);
        }
        self.items.remove(&v);
        self.free.push(v);
    }

    fn rebuild_subtree(&mut self, v: usize) {
        self.rebuilds += 1;
        let mut leaves = Vec::with_capacity(self.nodes[v].size);
        self.collect(v, &mut leaves);
        let parent = self.nodes[v].parent;
        self.release(v);
        let fresh = self.build_balanced(&leaves, parent);
        match parent {
            None => self.root = Some(fresh),
            Some(p) => self.replace_child(p, v, fresh),
        }
    }

    fn build_balanced(&mut self, leaves: &[(Disk, f64)], parent: Option<usize>) -> usize {
        if let [(d, dis)] = leaves {
            return self.leaf(*d, *dis, parent);
        }
        let vor1 = InsertOnlyAwnn::from_points(leaves.iter().map(|(d, _)| radius_point(d)).collect()).expect("distinct ids");
        let vor2 = InsertOnlyAwnn::from_points(leaves.iter().map(|(d, dis)| distance_point(d, *dis)).collect()).expect("distinct ids");
        let (d, dis) = leaves[leaves.len() - 1];
        let v = self.alloc(Node { parent, kind: Kind::Leaf, size: leaves.len(), max: Self::key(&d, dis), vor1, vor2 });
        let mid = leaves.len() / 2;
        let left = self.build_balanced(&leaves[..mid], Some(v));
        let right = self.build_balanced(&leaves[mid..], Some(v));
        self.nodes[v].kind = Kind::Inner { left, right };
        v
    }

    /// Some member of `v`'s subtree adjacent to `b`, found through its `-r` weighted set.
    fn adjacent_in(&mut self, v: usize, b: &Disk, r: f64) -> Option<u64> {
        self.vor1_queries += 1;
        let ties = self.nodes[v].vor1.nearest_ties((b.x, b.y));
        ties.iter().map(|(p, _)| disk_of(p)).find(|p| disk_gap_within(p, b, r)).map(|p| p.id)
    }

    /// The leftmost leaf adjacent to `b`, by descending toward whichever child holds an adjacent disk.
    pub fn leftmost_adjacent_leaf(&mut self, b: &Disk, r: f64) -> Option<LeafRef> {
        let mut v = self.root?;
        while let Kind::Inner { left, right } = self.nodes[v].kind {
            v = if self.adjacent_in(left, b, r).is_some() { left } else { right };
        }
        let (d, _) = self.items[&v];
        (d.id != b.id && disk_gap_within(&d, b, r)).then_some(LeafRef(v))
    }

    /// The disk at `leaf` and its distance.
    pub fn leaf_item(&self, leaf: LeafRef) -> (Disk, f64) {
        self.items[&leaf.0]
    }

    /// Nodes whose leaves partition the suffix starting at `leaf`, left to right.
    fn suffix_cover(&self, leaf: LeafRef) -> Vec<usize> {
        let mut right_parts = Vec::new();
        let mut v = leaf.0;
        while let Some(p) = self.nodes[v].parent {
            if let Kind::Inner { left, right } = self.nodes[p].kind {
                if left == v {
                    right_parts.push(right);
                }
            }
            v = p;
        }
        let mut out = vec![leaf.0];
        out.extend(right_parts);
        out
    }

    /// The disk minimizing `dis(p) + |p - b|` over the suffix starting at `leaf`.
    ///
    /// Among values within tolerance of the minimum the smallest adjacent id
    /// wins. The flag is false when none of them is adjacent to `b`.
    pub fn best_predecessor(&mut self, b: &Disk, leaf: LeafRef, r: f64) -> (u64, f64, bool) {
        let q = (b.x, b.y);
        let cover = self.suffix_cover(leaf);
        self.vor2_queries += cover.len() as u64;
        let best = cover.iter().filter_map(|&v| self.nodes[v].vor2.min_dist(q)).fold(f64::INFINITY, f64::min);
        let mut ties: Vec<(WeightedPoint, f64)> = Vec::new();
        for &v in &cover {
            if self.nodes[v].vor2.min_dist(q).is_some_and(|d| d <= best + crate::nn2d::EPS_DIST) {
                ties.extend(self.nodes[v].vor2.nearest_ties(q).into_iter().filter(|(_, d)| *d <= best + crate::nn2d::EPS_DIST));
            }
        }
        ties.sort_by_key(|(p, _)| p.id);
        let adjacent = |p: &WeightedPoint| disk_gap_within(&self.disks[&p.id], b, r);
        match ties.iter().find(|(p, _)| adjacent(p)) {
            Some((p, d)) => (p.id, *d, true),
            None => {
                let (p, d) = ties[0];
                (p.id, d, false)
            }
        }
    }

    /// Checks key order, subtree sizes, parent links and that every node's two
    /// weighted sets hold exactly its leaves.
    pub fn audit(&self) -> std::result::Result<(), String> {
        let Some(root) = self.root else {
            return if self.disks.is_empty() { Ok(()) } else { Err("ids without a root".into()) };
        };
        if self.nodes[root].parent.is_some() {
            return Err("root has a parent".into());
        }
        let leaves = self.leaves();
        if leaves.len() != self.disks.len() {
            return Err(format!("{} leaves for {} ids", leaves.len(), self.disks.len()));
        }
        for w in leaves.windows(2) {
            if Self::key(&w[0].0, w[0].1) >= Self::key(&w[1].0, w[1].1) {
                return Err(format!("leaves {} and {} out of order", w[0].0.id, w[1].0.id));
            }
        }
        self.audit_node(root).map(|_| ())
    }

    fn audit_node(&self, v: usize) -> std::result::Result<Vec<u64>, String> {
        let node = &self.nodes[v];
        let mut ids = match node.kind {
            Kind::Leaf => vec![self.items.get(&v).ok_or("leaf without an item")?.0.id],
            Kind::Inner { left, right } => {
                for c in [left, right] {
                    if self.nodes[c].parent != Some(v) {
                        return Err(format!("broken parent link at node {c}"));
                    }
                }
                let mut a = self.audit_node(left)?;
                a.extend(self.audit_node(right)?);
                if self.nodes[left].max >= self.nodes[right].min_key(self) {
                    return Err(format!("children of node {v} overlap"));
                }
                a
            }
        };
        if ids.len() != node.size {
            return Err(format!("node {v} has size {} but {} leaves", node.size, ids.len()));
        }
        ids.sort_unstable();
        for (name, set) in [("first", &node.vor1), ("second", &node.vor2)] {
            let mut got: Vec<u64> = set.points().map(|p| p.id).collect();
            got.sort_unstable();
            if got != ids {
                return Err(format!("node {v}: {name} weighted set differs from its leaves"));
            }
        }
        Ok(ids)
    }
}

impl Node {
    fn min_key(&self, t: &TaIndex) -> Key {
        match self.kind {
            Kind::Leaf => self.max,
            Kind::Inner { left, .. } => t.nodes[left].min_key(t),
        }
    }
}

/// Pops every pool member adjacent to `a`: nearest first by `|p - a| - r_p`,
/// stopping at the first nearest that is too far.
pub fn collect_ba(a: &Disk, pool: &mut DeletionPool, r: f64) -> Vec<u64> {
    let mut out = Vec::new();
    while let Some(p) = pool.pop_nearest_if((a.x, a.y), |p, _| disk_gap_within(&disk_of(p), a, r)) {
        out.push(p.id);
    }
    out
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SsspStats {
    pub iterations: u64,
    pub reached: u64,
    /// Entry 0 counts iterations with empty `B_a`; entry `i > 0` those with `2^(i-1) <= |B_a| < 2^i`.
    pub ba_histogram: Vec<u64>,
    pub vor1_queries: u64,
    pub vor2_queries: u64,
    pub ta_rebuilds: u64,
    pub pool_rebuilds: u64,
    pub ta_height: usize,
    /// Best predecessors that were not adjacent to their disk; zero unless tolerance collapses a tie.
    pub nonadjacent_predecessors: u64,
    /// Failed checks in audit mode.
    pub invariant_violations: u64,
}

#[derive(Clone, Debug, Default)]
pub struct SsspOptions {
    /// Checks the loop invariants against the explicit-graph oracle every iteration. Quadratic.
    pub audit: bool,
}

/// Distances and a shortest-path tree, in input order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SsspResult {
    pub ids: Vec<u64>,
    /// `f64::INFINITY` where unreachable.
    pub dis: Vec<f64>,
    pub pred: Vec<Option<u64>>,
    pub stats: SsspStats,
}

impl SsspResult {
    pub fn dis_of(&self, id: u64) -> Option<f64> {
        self.ids.iter().position(|&i| i == id).map(|i| self.dis[i])
    }
}

pub fn sssp(disks: &[Disk], r: f64, source: u64) -> Result<SsspResult> {
    sssp_with(disks, r, source, &SsspOptions::default())
}

pub fn sssp_with(disks: &[Disk], r: f64, source: u64, opts: &SsspOptions) -> Result<SsspResult> {
    if !r.is_finite() || r < 0.0 {
        return Err(Error::InvalidParameter("r must be finite and nonnegative"));
    }
    let mut index = HashMap::with_capacity(disks.len());
    for (i, d) in disks.iter().enumerate() {
        if index.insert(d.id, i).is_some() {
            return Err(Error::DuplicateId(d.id));
        }
    }
    let s = *index.get(&source).ok_or(Error::UnknownId(source))?;
    let n = disks.len();
    let mut dis = vec![f64::INFINITY; n];
    let mut pred = vec![None; n];
    let mut stats = SsspStats::default();
    let oracle = if opts.audit { Some(crate::oracle::dijkstra_explicit(disks, r, source)?) } else { None };

    dis[s] = 0.0;
    let mut pool: DeletionPool = DeletionPool::new(disks.iter().filter(|d| d.id != source).map(radius_point).collect());
    let mut ta = TaIndex::new();
    ta.insert(disks[s], 0.0)?;
    let mut heap: BinaryHeap<Reverse<Key>> = BinaryHeap::new();
    heap.push(Reverse((OrderedFloat(disks[s].r), source)));
    let mut a1: Vec<usize> = Vec::new();

    while let Some(Reverse((_, aid))) = heap.pop() {
        stats.iterations += 1;
        let a = disks[index[&aid]];
        let ba = collect_ba(&a, &mut pool, r);
        let bucket = if ba.is_empty() { 0 } else { ba.len().ilog2() as usize + 1 };
        if stats.ba_histogram.len() <= bucket {
            stats.ba_histogram.resize(bucket + 1, 0);
        }
        stats.ba_histogram[bucket] += 1;
        for bid in ba {
            let bi = index[&bid];
            let b = disks[bi];
            if opts.audit && !disk_gap_within(&a, &b, r) {
                stats.invariant_violations += 1;
            }
            let leaf = ta.leftmost_adjacent_leaf(&b, r).expect("a is settled and adjacent to b");
            let (q, d, adjacent) = ta.best_predecessor(&b, leaf, r);
            if !adjacent {
                stats.nonadjacent_predecessors += 1;
            }
            dis[bi] = d;
            pred[bi] = Some(q);
            ta.insert(b, d)?;
            heap.push(Reverse((OrderedFloat(d + b.r), bid)));
        }
        a1.push(index[&aid]);
        if let Some(want) = &oracle {
            stats.invariant_violations += audit_step(disks, r, &dis, want, &a1, &pool);
            if ta.audit().is_err() {
                stats.invariant_violations += 1;
            }
        }
    }
    stats.reached = dis.iter().filter(|d| d.is_finite()).count() as u64;
    stats.vor1_queries = ta.vor1_queries;
    stats.vor2_queries = ta.vor2_queries;
    stats.ta_rebuilds = ta.rebuilds();
    stats.pool_rebuilds = pool.rebuilds();
    stats.ta_height = ta.height();
    Ok(SsspResult { ids: disks.iter().map(|d| d.id).collect(), dis, pred, stats })
}

/// Relative agreement used for distances.
pub fn close(a: f64, b: f64) -> bool {
    if a.is_infinite() || b.is_infinite() {
        return a == b;
    }
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

fn audit_step(disks: &[Disk], r: f64, dis: &[f64], want: &[f64], a1: &[usize], pool: &DeletionPool) -> u64 {
    let mut bad = 0;
    for (i, d) in dis.iter().enumerate() {
        if d.is_finite() && !close(*d, want[i]) {
            bad += 1;
        }
    }
    for b in pool.members() {
        let b = disk_of(&b);
        bad += a1.iter().filter(|&&i| disk_gap_within(&disks[i], &b, r)).count() as u64;
    }
    bad
}
