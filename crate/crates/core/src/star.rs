//! The two-tier structure `D*(H)`: a main Chan structure over `H+` and a
//! recursive auxiliary structure over `H-`.
//!
//! New planes, and planes drained out of the main tier by deletions, go to the
//! auxiliary tier. Once it holds `alpha * n / log n` planes it is merged back:
//! into the main tier's bad-set recursion, or by rebuilding everything when
//! that recursion would reach `3n/4`.
//!
//! Deletion comes in two modes. [`DeleteMode::Faithful`] deletes a plane of
//! `H-` from the auxiliary tier only. A plane drained from the main tier and
//! re-inserted is in `H-` but still sits in main-tier conflict lists, so its
//! deletion never bumps their counters and those cells can stop draining
//! before they should; queries then miss planes. [`DeleteMode::Corrected`]
//! deletes from the main tier whenever it still lists the plane, then from
//! the auxiliary tier.

use std::collections::HashSet;

use serde::Serialize;

use crate::chan::{check_distinct, select_lowest, ChanConfig, ChanStructure};
use crate::error::{Error, Result};
use crate::geom::{Plane, PlaneId, VerticalLine};

/// Which deletion algorithm to run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DeleteMode {
    /// As originally published; loses planes.
    Faithful,
    /// Delete from the main tier first, then from the auxiliary one.
    #[default]
    Corrected,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StarConfig {
    pub chan: ChanConfig,
    pub alpha: f64,
    /// Sets of at most this many planes are plain lists.
    pub base_size: usize,
    pub mode: DeleteMode,
}

impl Default for StarConfig {
    fn default() -> Self {
        StarConfig { chan: ChanConfig::default(), alpha: 3.0, base_size: 32, mode: DeleteMode::Corrected }
    }
}

impl StarConfig {
    pub fn with_mode(mode: DeleteMode) -> Self {
        StarConfig { mode, ..Default::default() }
    }
}

/// Counters summed over every tier.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct StarStats {
    pub insertions: u64,
    pub deletions: u64,
    /// Planes handed back by main-tier deletions.
    pub reinsertions: u64,
    /// Substructures visited by main-tier deletions.
    pub chan_delete_calls: u64,
    pub merges: u64,
    pub full_rebuilds: u64,
    /// Bad-set recursion depth of each merge, as a histogram.
    pub merge_depths: Vec<u64>,
    /// Largest `depth / log2(log2 n)` seen at a merge.
    pub max_depth_ratio: f64,
    /// Full rebuilds after which the substructure-levels summed to more than `2n`.
    pub level_sum_violations: u64,
    pub max_level_sum_ratio: f64,
    /// Tier nesting depth reached.
    pub max_tiers: usize,
}

impl StarStats {
    pub fn max_merge_depth(&self) -> usize {
        self.merge_depths.iter().rposition(|&c| c > 0).unwrap_or(0)
    }

    fn record_depth(&mut self, depth: usize, n: usize) {
        if self.merge_depths.len() <= depth {
            self.merge_depths.resize(depth + 1, 0);
        }
        self.merge_depths[depth] += 1;
        let ll = log2f(log2f(n as f64)).max(1.0);
        self.max_depth_ratio = self.max_depth_ratio.max(depth as f64 / ll);
    }
}

fn log2f(x: f64) -> f64 {
    x.max(1.0).log2()
}

/// `alpha * n / max(1, log2 n)`.
pub fn aux_threshold(alpha: f64, n: usize) -> f64 {
    alpha * n as f64 / log2f(n as f64).max(1.0)
}

#[derive(Clone, Debug)]
enum Tier {
    List(Vec<Plane>),
    Split { main: ChanStructure, aux: Box<Tier>, n_ref: usize },
}

/// The structure `D*(H)`.
#[derive(Clone, Debug)]
pub struct StarStructure {
    root: Tier,
    cfg: StarConfig,
    stats: StarStats,
}

impl StarStructure {
    pub fn new(cfg: StarConfig) -> Self {
        StarStructure { root: Tier::List(Vec::new()), cfg, stats: StarStats::default() }
    }

    /// Everything starts in the main tier.
    pub fn build(planes: Vec<Plane>, cfg: StarConfig) -> Result<Self> {
        check_distinct(&planes)?;
        let mut stats = StarStats::default();
        let root = Tier::fresh(planes, &cfg, &mut stats);
        Ok(StarStructure { root, cfg, stats })
    }

    pub fn config(&self) -> &StarConfig {
        &self.cfg
    }

    pub fn mode(&self) -> DeleteMode {
        self.cfg.mode
    }

    pub fn stats(&self) -> &StarStats {
        &self.stats
    }

    pub fn len(&self) -> usize {
        self.root.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, id: PlaneId) -> bool {
        self.root.contains(id)
    }

    /// All present planes, sorted by id.
    pub fn planes(&self) -> Vec<Plane> {
        let mut v = Vec::new();
        self.root.collect(&mut v);
        v.sort_unstable_by_key(|p| p.id);
        v.dedup_by_key(|p| p.id);
        v
    }

    pub fn insert(&mut self, h: Plane) -> Result<()> {
        if self.contains(h.id) {
            return Err(Error::DuplicateId(h.id));
        }
        self.stats.insertions += 1;
        self.root.insert(h, &self.cfg, &mut self.stats, 1);
        Ok(())
    }

    pub fn delete(&mut self, id: PlaneId) -> Result<()> {
        if !self.contains(id) {
            return Err(Error::UnknownId(id));
        }
        self.stats.deletions += 1;
        self.root.delete(id, &self.cfg, &mut self.stats, 1);
        Ok(())
    }

    /// The lower of the two tiers' answers, ties to the smaller id.
    pub fn query(&self, line: &VerticalLine) -> Option<Plane> {
        let mut best: Option<(i128, PlaneId, Plane)> = None;
        self.root.best(line, &mut best);
        best.map(|b| b.2)
    }

    /// The `k` lowest present planes at `line`, sorted by height then id.
    pub fn k_lowest(&self, line: &VerticalLine, k: usize) -> Result<Vec<Plane>> {
        if k == 0 {
            return Err(Error::ZeroK);
        }
        let mut v = Vec::new();
        self.root.gather(line, k, &mut v)?;
        Ok(select_lowest(v, line, k))
    }

    /// Whether `|H-| < alpha * n_ref / log2 n_ref` at every tier.
    pub fn threshold_holds(&self) -> bool {
        self.root.threshold_holds(self.cfg.alpha)
    }

    /// `(|H-|, n_ref)` for each split tier, outermost first.
    pub fn tier_sizes(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut cur = &self.root;
        while let Tier::Split { aux, n_ref, .. } = cur {
            out.push((aux.len(), *n_ref));
            cur = aux;
        }
        out
    }

    /// The outermost main tier, if the structure is not a plain list.
    pub fn main(&self) -> Option<&ChanStructure> {
        match &self.root {
            Tier::Split { main, .. } => Some(main),
            Tier::List(_) => None,
        }
    }

    /// Ids still listed in a main tier (live or drained) and also present in the
    /// auxiliary structure beneath it. Deleting one in faithful mode skips the
    /// main tier.
    pub fn dual_members(&self) -> Vec<PlaneId> {
        let mut out = Vec::new();
        self.root.dual_members(&mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Ids live in a main tier and present in its auxiliary structure at once.
    pub fn live_overlap(&self) -> Vec<PlaneId> {
        let mut out = Vec::new();
        let mut cur = &self.root;
        while let Tier::Split { main, aux, .. } = cur {
            let mut below = Vec::new();
            aux.collect(&mut below);
            out.extend(below.iter().filter(|p| main.contains(p.id)).map(|p| p.id));
            cur = aux;
        }
        out
    }

    /// Substructure-level sum over the outermost main tier's planes, and that tier's size.
    pub fn main_level_sum(&self) -> Option<(usize, usize)> {
        self.main().map(|m| (m.total_level_sum(), m.len()))
    }
}

impl Tier {
    fn fresh(planes: Vec<Plane>, cfg: &StarConfig, stats: &mut StarStats) -> Tier {
        if planes.len() <= cfg.base_size {
            return Tier::List(planes);
        }
        let n = planes.len();
        let main = ChanStructure::preprocess(planes, cfg.chan.clone()).expect("ids are distinct");
        let sum = main.total_level_sum();
        if sum > 2 * n {
            stats.level_sum_violations += 1;
        }
        stats.max_level_sum_ratio = stats.max_level_sum_ratio.max(sum as f64 / n as f64);
        Tier::Split { main, aux: Box::new(Tier::List(Vec::new())), n_ref: n }
    }

    fn len(&self) -> usize {
        match self {
            Tier::List(v) => v.len(),
            Tier::Split { main, aux, .. } => main.len() + aux.len(),
        }
    }

    fn contains(&self, id: PlaneId) -> bool {
        match self {
            Tier::List(v) => v.iter().any(|p| p.id == id),
            Tier::Split { main, aux, .. } => main.contains(id) || aux.contains(id),
        }
    }

    fn collect(&self, out: &mut Vec<Plane>) {
        match self {
            Tier::List(v) => out.extend_from_slice(v),
            Tier::Split { main, aux, .. } => {
                out.extend(main.planes());
                aux.collect(out);
            }
        }
    }

    fn take_all(&mut self) -> Vec<Plane> {
        let mut v = Vec::new();
        self.collect(&mut v);
        v.sort_unstable_by_key(|p| p.id);
        v.dedup_by_key(|p| p.id);
        *self = Tier::List(Vec::new());
        v
    }

    fn insert(&mut self, h: Plane, cfg: &StarConfig, stats: &mut StarStats, depth: usize) {
        stats.max_tiers = stats.max_tiers.max(depth);
        match self {
            Tier::List(v) => {
                v.push(h);
                if v.len() > cfg.base_size {
                    let all = std::mem::take(v);
                    stats.full_rebuilds += 1;
                    *self = Tier::fresh(all, cfg, stats);
                }
            }
            Tier::Split { aux, n_ref, .. } => {
                aux.insert(h, cfg, stats, depth + 1);
                if aux.len() as f64 >= aux_threshold(cfg.alpha, *n_ref) {
                    self.merge(cfg, stats);
                }
            }
        }
    }

    fn merge(&mut self, cfg: &StarConfig, stats: &mut StarStats) {
        let full = match self {
            Tier::Split { main, aux, n_ref } => 4 * (aux.len() + main.bad_len()) >= 3 * *n_ref,
            Tier::List(_) => return,
        };
        stats.merges += 1;
        if full {
            let all = self.take_all();
            stats.full_rebuilds += 1;
            stats.record_depth(0, all.len());
            *self = Tier::fresh(all, cfg, stats);
        } else if let Tier::Split { main, aux, n_ref } = self {
            let extra = aux.take_all();
            let depth = main.merge_into_bad(extra);
            stats.record_depth(depth, *n_ref);
        }
    }

    fn delete(&mut self, id: PlaneId, cfg: &StarConfig, stats: &mut StarStats, depth: usize) {
        match self {
            Tier::List(v) => v.retain(|p| p.id != id),
            Tier::Split { main, aux, .. } => {
                let mut sink = Vec::new();
                let in_aux = aux.contains(id);
                let from_main = match cfg.mode {
                    DeleteMode::Faithful => !in_aux,
                    DeleteMode::Corrected => main.holds(id),
                };
                if from_main {
                    let before = main.stats().chan_delete_calls;
                    main.delete_into(id, &mut sink).expect("main tier holds the plane");
                    stats.chan_delete_calls += main.stats().chan_delete_calls - before;
                    stats.reinsertions += sink.len() as u64;
                }
                if in_aux {
                    aux.delete(id, cfg, stats, depth + 1);
                }
                // Drained planes re-enter through the auxiliary tier once the deletion is done.
                for p in sink {
                    self.insert(p, cfg, stats, depth);
                }
            }
        }
    }

    fn best(&self, line: &VerticalLine, best: &mut Option<(i128, PlaneId, Plane)>) {
        let mut consider = |p: Plane| {
            let key = (p.scaled_height(line), p.id);
            if best.map_or(true, |(h, i, _)| key < (h, i)) {
                *best = Some((key.0, key.1, p));
            }
        };
        match self {
            Tier::List(v) => v.iter().for_each(|p| consider(*p)),
            Tier::Split { main, aux, .. } => {
                if let Some(p) = main.query(line) {
                    consider(p);
                }
                aux.best(line, best);
            }
        }
    }

    fn gather(&self, line: &VerticalLine, k: usize, out: &mut Vec<Plane>) -> Result<()> {
        match self {
            Tier::List(v) => out.extend_from_slice(v),
            Tier::Split { main, aux, .. } => {
                out.extend(main.k_lowest(line, k)?);
                aux.gather(line, k, out)?;
            }
        }
        Ok(())
    }

    fn threshold_holds(&self, alpha: f64) -> bool {
        match self {
            Tier::List(_) => true,
            Tier::Split { aux, n_ref, .. } => (aux.len() as f64) < aux_threshold(alpha, *n_ref) && aux.threshold_holds(alpha),
        }
    }

    fn dual_members(&self, out: &mut Vec<PlaneId>) {
        if let Tier::Split { main, aux, .. } = self {
            let mut below = Vec::new();
            aux.collect(&mut below);
            let ids: HashSet<PlaneId> = below.iter().map(|p| p.id).collect();
            out.extend(ids.into_iter().filter(|&id| main.holds(id) && !main.contains(id)));
            aux.dual_members(out);
        }
    }
}
