//! Chan's dynamic lower envelope with worst-case deletions.
//!
//! A structure over a set `H` is a substructure `D` (a hierarchy of shallow
//! cuttings of `H` at levels `|H|/2, |H|/4, ..., 1`) plus, recursively, a
//! structure over the planes `D` rejects as bad. Small sets are plain lists.
//!
//! Every plane is live in exactly one substructure. Deleting a plane bumps the
//! counter of each cell whose original list holds it, and each bump removes a
//! fixed share of that cell's list; removed planes that were still live are
//! hidden and handed to a sink for re-insertion. A cell at level `i` is empty
//! after `ceil(k_{i+1} / 2)` bumps, which is what the query needs: if the
//! lowest live plane of `D` were missing from the level-`t` cell at a line,
//! then at some level `i` it is in the cell but at least `k_{i+1}` planes
//! below it are gone, so that cell would have been emptied, the plane with it.
//!
//! The whole of `H` acts as a level-0 cell covering everything. Cells of the
//! last level count deletions but are never drained; the argument above only
//! drains the cell one level above the one missing the answer.

use std::collections::HashMap;

use serde::Serialize;

use crate::cutting::{CuttingBudget, ShallowCutting};
use crate::error::{Error, Result};
use crate::geom::{Plane, PlaneId, VerticalLine};

/// Branching factor of the cutting levels.
const B: usize = 2;

/// Tuning constants.
#[derive(Clone, Debug, PartialEq)]
pub struct ChanConfig {
    pub budget: CuttingBudget,
    /// Sets at most this large are stored as plain lists.
    pub base_size: usize,
    /// How often `c'` may double when a substructure rejects more than half its planes.
    pub max_escalations: u32,
}

impl Default for ChanConfig {
    fn default() -> Self {
        ChanConfig { budget: CuttingBudget::default(), base_size: 32, max_escalations: 4 }
    }
}

impl ChanConfig {
    /// Planes drained per counter bump when every list meets the `c * k` bound: `ceil(2 c b)`.
    pub fn drain_const(&self) -> usize {
        2 * self.budget.c * B
    }
}

/// Operation counters.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ChanStats {
    pub insertions: u64,
    pub deletions: u64,
    /// Planes handed to the sink by draining.
    pub reinsertions: u64,
    /// Substructures visited by deletions.
    pub chan_delete_calls: u64,
    pub kappa_increments: u64,
    /// Rebuilds of any recursion level, the top included.
    pub rebuilds: u64,
    pub top_rebuilds: u64,
    pub escalations: u64,
    /// Top-level rebuilds after which the level sum exceeded twice the size.
    pub level_sum_violations: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum State {
    Live,
    /// Passed on to the next recursion level at build time.
    Bad,
    /// Drained while live; the plane now lives elsewhere or nowhere.
    Hidden,
    Deleted,
}

#[derive(Clone, Debug)]
enum Level {
    List(Vec<Plane>),
    Sub(Box<Sub>),
}

#[derive(Clone, Debug)]
struct Sub {
    /// `IN(D)`, sorted by id; positions are slots.
    planes: Vec<Plane>,
    slot: HashMap<PlaneId, u32>,
    state: Vec<State>,
    live: usize,
    /// `k_0 = |IN|, k_1, ..., k_t`.
    ks: Vec<usize>,
    /// Cutting `i` is at index `i - 1`.
    cuttings: Vec<ShallowCutting>,
    /// Per slot, the `(cutting index, cell)` pairs whose original list holds it.
    incident: Vec<Vec<(u16, u32)>>,
    /// Bad-plane threshold this substructure was built with.
    threshold: usize,
    top_kappa: usize,
    top_cursor: usize,
    n0: usize,
    bad: Level,
}

/// Chan's structure `D(H)`.
#[derive(Clone, Debug)]
pub struct ChanStructure {
    root: Level,
    cfg: ChanConfig,
    stats: ChanStats,
}

fn log2_ceil(n: usize) -> usize {
    (usize::BITS - (n.max(1) - 1).leading_zeros()) as usize
}

impl Level {
    fn len(&self) -> usize {
        match self {
            Level::List(v) => v.len(),
            Level::Sub(s) => s.live + s.bad.len(),
        }
    }

    fn contains(&self, id: PlaneId) -> bool {
        match self {
            Level::List(v) => v.iter().any(|p| p.id == id),
            Level::Sub(s) => s.slot.get(&id).is_some_and(|&q| s.state[q as usize] == State::Live) || s.bad.contains(id),
        }
    }

    /// Whether any substructure still has `id` in a list (live, bad or hidden) or a list level holds it.
    fn holds(&self, id: PlaneId) -> bool {
        match self {
            Level::List(v) => v.iter().any(|p| p.id == id),
            Level::Sub(s) => s.slot.get(&id).is_some_and(|&q| s.state[q as usize] != State::Deleted) || s.bad.holds(id),
        }
    }

    fn collect(&self, out: &mut Vec<Plane>) {
        match self {
            Level::List(v) => out.extend_from_slice(v),
            Level::Sub(s) => {
                out.extend(s.planes.iter().zip(&s.state).filter(|(_, st)| **st == State::Live).map(|(p, _)| *p));
                s.bad.collect(out);
            }
        }
    }

    fn level_of(&self, id: PlaneId, depth: usize) -> Option<usize> {
        match self {
            Level::List(v) => v.iter().any(|p| p.id == id).then_some(depth + 1),
            Level::Sub(s) => match s.slot.get(&id) {
                Some(&q) if s.state[q as usize] == State::Live => Some(depth + 1),
                _ => s.bad.level_of(id, depth + 1),
            },
        }
    }

    fn level_sum(&self, depth: usize) -> usize {
        match self {
            Level::List(v) => v.len() * (depth + 1),
            Level::Sub(s) => s.live * (depth + 1) + s.bad.level_sum(depth + 1),
        }
    }

    fn build(mut planes: Vec<Plane>, cfg: &ChanConfig, stats: &mut ChanStats) -> Level {
        planes.sort_unstable_by_key(|p| p.id);
        if planes.len() <= cfg.base_size {
            return Level::List(planes);
        }
        let m = planes.len();
        let t = log2_ceil(m);
        let ks: Vec<usize> = (0..=t).map(|i| m.div_ceil(B.pow(i as u32))).collect();
        let mut budget = cfg.budget.clone();
        let mut escalations = 0;
        let (cuttings, bad, threshold) = loop {
            let (cuttings, bad, threshold) = hierarchy(&planes, &ks, &budget);
            let rejected = bad.iter().filter(|&&b| b).count();
            if 2 * rejected <= m || escalations == cfg.max_escalations {
                break (cuttings, bad, threshold);
            }
            escalations += 1;
            stats.escalations += 1;
            budget.c_prime *= 2;
        };
        let mut incident = vec![Vec::new(); m];
        for (i, cut) in cuttings.iter().enumerate() {
            for (ci, cell) in cut.cells().iter().enumerate() {
                for &q in cell.conflict() {
                    incident[q as usize].push((i as u16, ci as u32));
                }
            }
        }
        let state: Vec<State> = bad.iter().map(|&b| if b { State::Bad } else { State::Live }).collect();
        let rejected: Vec<Plane> = planes.iter().zip(&bad).filter(|(_, &b)| b).map(|(p, _)| *p).collect();
        let live = m - rejected.len();
        let slot = planes.iter().enumerate().map(|(i, p)| (p.id, i as u32)).collect();
        let bad = Level::build(rejected, cfg, stats);
        Level::Sub(Box::new(Sub {
            planes,
            slot,
            state,
            live,
            ks,
            cuttings,
            incident,
            threshold,
            top_kappa: 0,
            top_cursor: 0,
            n0: m,
            bad,
        }))
    }

    fn insert(&mut self, h: Plane, cfg: &ChanConfig, stats: &mut ChanStats, depth: usize) {
        match self {
            Level::List(v) => {
                v.push(h);
                if v.len() > cfg.base_size {
                    let all = std::mem::take(v);
                    *self = Level::build(all, cfg, stats);
                    stats.rebuilds += 1;
                    if depth == 0 {
                        stats.top_rebuilds += 1;
                    }
                }
            }
            Level::Sub(s) => {
                s.bad.insert(h, cfg, stats, depth + 1);
                if 4 * s.bad.len() >= 3 * s.n0 {
                    self.rebuild(Vec::new(), cfg, stats, depth);
                }
            }
        }
    }

    fn rebuild(&mut self, extra: Vec<Plane>, cfg: &ChanConfig, stats: &mut ChanStats, depth: usize) {
        let mut all = extra;
        self.collect(&mut all);
        *self = Level::build(all, cfg, stats);
        stats.rebuilds += 1;
        if depth == 0 {
            stats.top_rebuilds += 1;
            if self.level_sum(0) > 2 * self.len() {
                stats.level_sum_violations += 1;
            }
        }
    }

    /// Deletes `id` wherever it is held; returns whether any level held it.
    fn delete(&mut self, id: PlaneId, sink: &mut Vec<Plane>, stats: &mut ChanStats) -> bool {
        match self {
            Level::List(v) => match v.iter().position(|p| p.id == id) {
                Some(i) => {
                    v.remove(i);
                    true
                }
                None => false,
            },
            Level::Sub(s) => {
                let mut here = false;
                if let Some(&q) = s.slot.get(&id) {
                    let st = s.state[q as usize];
                    if st != State::Deleted {
                        here = true;
                        stats.chan_delete_calls += 1;
                        s.account(q, sink, stats);
                        s.state[q as usize] = State::Deleted;
                        if st == State::Live {
                            s.live -= 1;
                            return true;
                        }
                    }
                }
                s.bad.delete(id, sink, stats) || here
            }
        }
    }

    fn best(&self, line: &VerticalLine, best: &mut Option<(i128, PlaneId, Plane)>) {
        let mut consider = |p: &Plane| {
            let key = (p.scaled_height(line), p.id);
            if best.map_or(true, |(h, i, _)| key < (h, i)) {
                *best = Some((key.0, key.1, *p));
            }
        };
        match self {
            Level::List(v) => v.iter().for_each(&mut consider),
            Level::Sub(s) => {
                if let Some(cut) = s.cuttings.last() {
                    let cell = cut.cell(cut.locate_cell(line));
                    for &q in cell.conflict() {
                        if s.state[q as usize] == State::Live {
                            consider(&s.planes[q as usize]);
                        }
                    }
                }
                s.bad.best(line, best);
            }
        }
    }

    fn gather(&self, line: &VerticalLine, k: usize, out: &mut Vec<Plane>) {
        match self {
            Level::List(v) => out.extend_from_slice(v),
            Level::Sub(s) => {
                let j = s.query_level(k);
                if j == 0 {
                    out.extend(s.live_planes());
                } else {
                    let cut = &s.cuttings[j - 1];
                    let cell = cut.cell(cut.locate_cell(line));
                    out.extend(cell.conflict().iter().filter(|&&q| s.state[q as usize] == State::Live).map(|&q| s.planes[q as usize]));
                }
                s.bad.gather(line, k, out);
            }
        }
    }

    fn merge(&mut self, extra: Vec<Plane>, cfg: &ChanConfig, stats: &mut ChanStats, depth: usize) -> usize {
        match self {
            Level::List(v) => {
                v.extend(extra);
                if v.len() > cfg.base_size {
                    let all = std::mem::take(v);
                    *self = Level::build(all, cfg, stats);
                    stats.rebuilds += 1;
                }
                depth
            }
            Level::Sub(s) => {
                if 4 * (extra.len() + s.bad.len()) >= 3 * s.n0 {
                    self.rebuild(extra, cfg, stats, depth);
                    depth
                } else {
                    s.bad.merge(extra, cfg, stats, depth + 1)
                }
            }
        }
    }
}

/// Builds cuttings `1..=t` over shrinking live sets; returns them, the bad flags and the threshold.
fn hierarchy(planes: &[Plane], ks: &[usize], budget: &CuttingBudget) -> (Vec<ShallowCutting>, Vec<bool>, usize) {
    let m = planes.len();
    let t = ks.len() - 1;
    let threshold = 2 * budget.c * budget.c_prime * t;
    let mut members: Vec<u32> = (0..m as u32).collect();
    let mut count = vec![0usize; m];
    let mut bad = vec![false; m];
    let mut cuttings: Vec<ShallowCutting> = Vec::with_capacity(t);
    for &k in &ks[1..] {
        if members.is_empty() {
            break;
        }
        let mut cut = ShallowCutting::build_over(planes, &members, k, budget, cuttings.last(), false).expect("members are nonempty");
        for cell in cut.cells() {
            for &q in cell.conflict() {
                count[q as usize] += 1;
            }
        }
        let before = members.len();
        members.retain(|&q| {
            let reject = count[q as usize] > threshold;
            bad[q as usize] |= reject;
            !reject
        });
        if members.len() < before {
            cut.restrict(|q| !bad[q as usize]);
        }
        cuttings.push(cut);
    }
    (cuttings, bad, threshold)
}

impl Sub {
    fn live_planes(&self) -> impl Iterator<Item = Plane> + '_ {
        self.planes.iter().zip(&self.state).filter(|(_, st)| **st == State::Live).map(|(p, _)| *p)
    }

    /// The deepest level `j` whose cells are guaranteed to hold the `k` lowest live planes:
    /// `floor(k_j / 2) >= k - 1`; level 0 is the whole set.
    fn query_level(&self, k: usize) -> usize {
        (1..=self.cuttings.len()).rev().find(|&j| self.ks[j] / 2 + 1 >= k).unwrap_or(0)
    }

    /// Bumps the counters of every cell holding slot `q` and drains them.
    fn account(&mut self, q: u32, sink: &mut Vec<Plane>, stats: &mut ChanStats) {
        let m = self.planes.len();
        self.top_kappa += 1;
        stats.kappa_increments += 1;
        let per = m.div_ceil(self.ks[1].div_ceil(2));
        let end = (self.top_cursor + per).min(m);
        for r in self.top_cursor..end {
            self.release(r as u32, q, sink, stats);
        }
        self.top_cursor = end;
        let t = self.cuttings.len();
        for idx in 0..self.incident[q as usize].len() {
            let (i, ci) = self.incident[q as usize][idx];
            let i = i as usize;
            stats.kappa_increments += 1;
            let cell = self.cuttings[i].cell_mut(ci as usize);
            cell.kappa += 1;
            if i + 1 == t {
                continue;
            }
            // Cutting index `i` is level `i + 1`; it must be empty after `ceil(k_{i+2} / 2)` bumps.
            let bumps = self.ks[i + 2].div_ceil(2);
            let per = cell.original_conflict().len().div_ceil(bumps);
            let drained: Vec<u32> = cell.drain_front(per).to_vec();
            for r in drained {
                self.release(r, q, sink, stats);
            }
        }
    }

    fn release(&mut self, r: u32, deleting: u32, sink: &mut Vec<Plane>, stats: &mut ChanStats) {
        if r != deleting && self.state[r as usize] == State::Live {
            self.state[r as usize] = State::Hidden;
            self.live -= 1;
            stats.reinsertions += 1;
            sink.push(self.planes[r as usize]);
        }
    }
}

/// Shape of one substructure, for audits.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubstructureInfo {
    /// `|IN(D)|`.
    pub size: usize,
    pub live: usize,
    /// Planes rejected at build time.
    pub rejected: usize,
    /// Cutting levels `t`.
    pub levels: usize,
    pub threshold: usize,
    /// Largest number of cells any live plane's original lists put it in.
    pub max_live_incidence: usize,
    pub mean_live_incidence: f64,
    /// Largest conflict list over all cuttings.
    pub max_conflict: usize,
}

impl ChanStructure {
    /// An empty structure.
    pub fn new(cfg: ChanConfig) -> Self {
        ChanStructure { root: Level::List(Vec::new()), cfg, stats: ChanStats::default() }
    }

    /// Builds the structure over `planes`; ids must be distinct.
    pub fn preprocess(planes: Vec<Plane>, cfg: ChanConfig) -> Result<Self> {
        check_distinct(&planes)?;
        let mut stats = ChanStats::default();
        let root = Level::build(planes, &cfg, &mut stats);
        Ok(ChanStructure { root, cfg, stats })
    }

    pub fn config(&self) -> &ChanConfig {
        &self.cfg
    }

    pub fn stats(&self) -> &ChanStats {
        &self.stats
    }

    /// Number of planes present.
    pub fn len(&self) -> usize {
        self.root.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, id: PlaneId) -> bool {
        self.root.contains(id)
    }

    /// Whether some substructure still lists `id`, including planes drained but not deleted.
    pub fn holds(&self, id: PlaneId) -> bool {
        self.root.holds(id)
    }

    /// All present planes, in no particular order.
    pub fn planes(&self) -> Vec<Plane> {
        let mut v = Vec::with_capacity(self.len());
        self.root.collect(&mut v);
        v
    }

    /// Planes in the recursion below the first substructure, `|B(H)|`.
    pub fn bad_len(&self) -> usize {
        match &self.root {
            Level::List(_) => 0,
            Level::Sub(s) => s.bad.len(),
        }
    }

    /// Size at the last rebuild of the top level.
    pub fn n0(&self) -> usize {
        match &self.root {
            Level::List(v) => v.len(),
            Level::Sub(s) => s.n0,
        }
    }

    /// Inserts `h` into the bad-set recursion, rebuilding any level whose bad set reaches 3/4 of its size.
    pub fn insert(&mut self, h: Plane) -> Result<()> {
        if self.contains(h.id) {
            return Err(Error::DuplicateId(h.id));
        }
        self.stats.insertions += 1;
        self.root.insert(h, &self.cfg, &mut self.stats, 0);
        Ok(())
    }

    /// Deletes `id`; drained planes are re-inserted once the deletion is done.
    pub fn delete(&mut self, id: PlaneId) -> Result<()> {
        if !self.contains(id) {
            return Err(Error::UnknownId(id));
        }
        let mut sink = Vec::new();
        self.delete_into(id, &mut sink)?;
        for p in sink {
            self.root.insert(p, &self.cfg, &mut self.stats, 0);
        }
        Ok(())
    }

    /// Deletes `id` from every level that holds it, live or hidden, and pushes
    /// drained planes to `sink` instead of re-inserting them.
    pub fn delete_into(&mut self, id: PlaneId, sink: &mut Vec<Plane>) -> Result<()> {
        if !self.root.delete(id, sink, &mut self.stats) {
            return Err(Error::UnknownId(id));
        }
        self.stats.deletions += 1;
        Ok(())
    }

    /// The lowest present plane at `line`, ties to the smaller id.
    pub fn query(&self, line: &VerticalLine) -> Option<Plane> {
        let mut best = None;
        self.root.best(line, &mut best);
        best.map(|b| b.2)
    }

    /// The `k` lowest present planes at `line`, sorted by height then id.
    pub fn k_lowest(&self, line: &VerticalLine, k: usize) -> Result<Vec<Plane>> {
        if k == 0 {
            return Err(Error::ZeroK);
        }
        let mut v = Vec::new();
        self.root.gather(line, k, &mut v);
        Ok(select_lowest(v, line, k))
    }

    /// Substructure-level of a present plane: `j` if it is live in `D_j`.
    pub fn level_of(&self, id: PlaneId) -> Option<usize> {
        self.root.level_of(id, 0)
    }

    /// Sum of substructure-levels over `ids`.
    pub fn level_sum<'a>(&self, ids: impl IntoIterator<Item = &'a PlaneId>) -> Result<usize> {
        ids.into_iter().map(|&id| self.level_of(id).ok_or(Error::UnknownId(id))).sum()
    }

    /// Sum of substructure-levels over all present planes.
    pub fn total_level_sum(&self) -> usize {
        self.root.level_sum(0)
    }

    /// Per-substructure shape, top first; the final list level is not included.
    pub fn substructures(&self) -> Vec<SubstructureInfo> {
        let mut out = Vec::new();
        let mut cur = &self.root;
        while let Level::Sub(s) = cur {
            let max_live_incidence = (0..s.planes.len()).filter(|&q| s.state[q] == State::Live).map(|q| s.incident[q].len()).max().unwrap_or(0);
            let total: usize = (0..s.planes.len()).filter(|&q| s.state[q] == State::Live).map(|q| s.incident[q].len()).sum();
            out.push(SubstructureInfo {
                size: s.planes.len(),
                live: s.live,
                rejected: s.state.iter().filter(|&&st| st == State::Bad).count(),
                levels: s.cuttings.len(),
                threshold: s.threshold,
                max_live_incidence,
                mean_live_incidence: total as f64 / s.live.max(1) as f64,
                max_conflict: s.cuttings.iter().map(|c| c.max_conflict()).max().unwrap_or(0),
            });
            cur = &s.bad;
        }
        out
    }

    /// Number of cells, the whole-set cell included, whose original lists in the first substructure hold `id`.
    pub fn conflict_cells(&self, id: PlaneId) -> usize {
        match &self.root {
            Level::Sub(s) => s.slot.get(&id).map_or(0, |&q| 1 + s.incident[q as usize].len()),
            Level::List(_) => 0,
        }
    }

    /// Merges `extra` into the bad-set recursion: the first level whose bad
    /// set together with `extra` reaches 3/4 of its size is rebuilt with them.
    /// Returns the recursion depth reached.
    pub(crate) fn merge_into_bad(&mut self, extra: Vec<Plane>) -> usize {
        match &mut self.root {
            Level::Sub(s) => s.bad.merge(extra, &self.cfg, &mut self.stats, 1),
            Level::List(_) => self.root.merge(extra, &self.cfg, &mut self.stats, 0),
        }
    }
}

/// Sorts by height then id and keeps the first `k`; duplicates by id are dropped.
pub(crate) fn select_lowest(mut v: Vec<Plane>, line: &VerticalLine, k: usize) -> Vec<Plane> {
    let mut keyed: Vec<(i128, PlaneId, Plane)> = v.drain(..).map(|p| (p.scaled_height(line), p.id, p)).collect();
    keyed.sort_unstable_by_key(|e| (e.0, e.1));
    keyed.dedup_by_key(|e| e.1);
    keyed.truncate(k);
    keyed.into_iter().map(|e| e.2).collect()
}

pub(crate) fn check_distinct(planes: &[Plane]) -> Result<()> {
    let mut ids: Vec<PlaneId> = planes.iter().map(|p| p.id).collect();
    ids.sort_unstable();
    match ids.windows(2).find(|w| w[0] == w[1]) {
        Some(w) => Err(Error::DuplicateId(w[0])),
        None => Ok(()),
    }
}
