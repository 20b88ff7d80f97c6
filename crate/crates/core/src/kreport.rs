//! k-lowest-planes queries, below-point reporting, and a deletion-only
//! structure answering k-lowest queries from one conflict list.

use std::collections::HashMap;

use serde::Serialize;

use crate::chan::{select_lowest, ChanStructure};
use crate::cutting::{verify_cutting, CuttingBudget, ShallowCutting};
use crate::error::{Error, Result};
use crate::geom::{Plane, PlaneId, Point3, VerticalLine};
use crate::star::StarStructure;

/// Anything that reports the `k` lowest planes at a line.
pub trait KLowest {
    /// Number of planes present.
    fn size(&self) -> usize;
    /// The `min(k, size)` lowest planes at `line`, sorted by height then id.
    fn k_lowest_at(&self, line: &VerticalLine, k: usize) -> Result<Vec<Plane>>;
}

impl KLowest for ChanStructure {
    fn size(&self) -> usize {
        self.len()
    }

    fn k_lowest_at(&self, line: &VerticalLine, k: usize) -> Result<Vec<Plane>> {
        self.k_lowest(line, k)
    }
}

impl KLowest for StarStructure {
    fn size(&self) -> usize {
        self.len()
    }

    fn k_lowest_at(&self, line: &VerticalLine, k: usize) -> Result<Vec<Plane>> {
        self.k_lowest(line, k)
    }
}

impl KLowest for DeletionOnlyKLowest {
    fn size(&self) -> usize {
        self.len()
    }

    fn k_lowest_at(&self, line: &VerticalLine, k: usize) -> Result<Vec<Plane>> {
        self.query(line, k)
    }
}

fn log2_ceil(n: usize) -> usize {
    (usize::BITS - (n.max(1) - 1).leading_zeros()) as usize
}

/// Planes strictly below `point`, sorted by id.
pub fn below_point<S: KLowest + ?Sized>(s: &S, point: &Point3) -> Result<Vec<Plane>> {
    below_point_rounds(s, point).map(|r| r.0)
}

/// Like [`below_point`], also returning how many k-lowest queries it took.
///
/// `k` starts at `max(1, ceil(log2 n))` and doubles until the `k`-th lowest
/// plane is not below the point or every plane has been seen.
pub fn below_point_rounds<S: KLowest + ?Sized>(s: &S, point: &Point3) -> Result<(Vec<Plane>, usize)> {
    let n = s.size();
    let line = point.line();
    let mut k = log2_ceil(n).max(1);
    let mut rounds = 0;
    loop {
        rounds += 1;
        let v = s.k_lowest_at(&line, k)?;
        let done = k >= n || v.len() < k || v.last().map_or(true, |p| !point.is_above(p));
        if done {
            let mut out: Vec<Plane> = v.into_iter().filter(|p| point.is_above(p)).collect();
            out.sort_unstable_by_key(|p| p.id);
            return Ok((out, rounds));
        }
        k *= 2;
    }
}

/// Which level answered a deletion-only query.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DokCase {
    /// `k` is a constant fraction of `n`: select over every plane.
    All,
    /// A cell of an intermediate cutting.
    Middle,
    /// A cell of the finest cutting.
    Last,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct DokStats {
    pub deletions: u64,
    pub rebuilds: u64,
    pub case_all: u64,
    pub case_middle: u64,
    pub case_last: u64,
    /// Queries whose cell could not certify `k` planes below its ceiling and moved up a level.
    pub fallbacks: u64,
}

/// Deletion-only k-lowest structure over a fixed set `Q`.
///
/// Cuttings at levels `n/2, n/4, ..., n/2^t` with `2^t <= r < 2^(t+1)`. A
/// query whose `k` lies in `(n/2^(i+1), n/2^i]` scans the level-`min(i, t)`
/// cell at the line, or every plane when `i = 0`. Once more than half of some
/// conflict list is deleted the whole structure is rebuilt.
#[derive(Clone, Debug)]
pub struct DeletionOnlyKLowest {
    planes: Vec<Plane>,
    present: Vec<bool>,
    slot: HashMap<PlaneId, u32>,
    live: usize,
    r: usize,
    cuttings: Vec<ShallowCutting>,
    incident: Vec<Vec<(u16, u32)>>,
    budget: CuttingBudget,
    stats: DokStats,
}

impl DeletionOnlyKLowest {
    /// Builds and verifies the hierarchy; needs `1 <= r <= |Q|`.
    pub fn build(q: Vec<Plane>, r: usize) -> Result<Self> {
        Self::build_with(q, r, CuttingBudget::default())
    }

    pub fn build_with(q: Vec<Plane>, r: usize, budget: CuttingBudget) -> Result<Self> {
        crate::chan::check_distinct(&q)?;
        if r == 0 || r > q.len() {
            return Err(Error::InvalidParameter("r must satisfy 1 <= r <= |Q|"));
        }
        let mut d = DeletionOnlyKLowest {
            planes: Vec::new(),
            present: Vec::new(),
            slot: HashMap::new(),
            live: 0,
            r,
            cuttings: Vec::new(),
            incident: Vec::new(),
            budget,
            stats: DokStats::default(),
        };
        d.rebuild(q)?;
        Ok(d)
    }

    fn rebuild(&mut self, mut q: Vec<Plane>) -> Result<()> {
        q.sort_unstable_by_key(|p| p.id);
        let n = q.len();
        self.r = self.r.min(n);
        let t = if n == 0 { 0 } else { self.r.ilog2() as usize };
        let members: Vec<u32> = (0..n as u32).collect();
        let mut cuttings: Vec<ShallowCutting> = Vec::with_capacity(t);
        for i in 1..=t {
            let k = n.div_ceil(1 << i);
            let cut = ShallowCutting::build_over(&q, &members, k, &self.budget, cuttings.last(), true)?;
            let rep = verify_cutting(&cut, &q, k);
            if !rep.passed() {
                return Err(Error::Construction(format!("level {i} failed verification: {rep:?}")));
            }
            cuttings.push(cut);
        }
        let mut incident = vec![Vec::new(); n];
        for (i, cut) in cuttings.iter().enumerate() {
            for (ci, cell) in cut.cells().iter().enumerate() {
                for &s in cell.conflict() {
                    incident[s as usize].push((i as u16, ci as u32));
                }
            }
        }
        self.slot = q.iter().enumerate().map(|(i, p)| (p.id, i as u32)).collect();
        self.present = vec![true; n];
        self.live = n;
        self.planes = q;
        self.cuttings = cuttings;
        self.incident = incident;
        Ok(())
    }

    /// Number of planes not yet deleted.
    pub fn len(&self) -> usize {
        self.live
    }

    pub fn is_empty(&self) -> bool {
        self.live == 0
    }

    /// Size of the set the current hierarchy was built over.
    pub fn built_size(&self) -> usize {
        self.planes.len()
    }

    /// Number of cutting levels `t`.
    pub fn levels(&self) -> usize {
        self.cuttings.len()
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn stats(&self) -> &DokStats {
        &self.stats
    }

    pub fn cuttings(&self) -> &[ShallowCutting] {
        &self.cuttings
    }

    pub fn contains(&self, id: PlaneId) -> bool {
        self.slot.get(&id).is_some_and(|&s| self.present[s as usize])
    }

    /// Present planes, sorted by id.
    pub fn planes(&self) -> Vec<Plane> {
        self.planes.iter().zip(&self.present).filter(|(_, &p)| p).map(|(p, _)| *p).collect()
    }

    /// Deletes `id` from every list holding it; rebuilds once a list is more than half deleted.
    pub fn delete(&mut self, id: PlaneId) -> Result<()> {
        let s = match self.slot.get(&id) {
            Some(&s) if self.present[s as usize] => s,
            _ => return Err(Error::UnknownId(id)),
        };
        self.present[s as usize] = false;
        self.live -= 1;
        self.stats.deletions += 1;
        let mut overflow = false;
        for &(i, ci) in &self.incident[s as usize] {
            let cell = self.cuttings[i as usize].cell_mut(ci as usize);
            cell.kappa += 1;
            overflow |= 2 * cell.kappa as usize > cell.original_conflict().len();
        }
        if overflow {
            self.stats.rebuilds += 1;
            let rest = self.planes();
            self.rebuild(rest)?;
        }
        Ok(())
    }

    /// The branch a query for `k` takes: `i` with `n/2^(i+1) < k <= n/2^i`, capped at `t`.
    pub fn case_for(&self, k: usize) -> (DokCase, usize) {
        let n = self.planes.len();
        let t = self.cuttings.len();
        let mut i = 0;
        while (k as u128) << (i + 1) <= n as u128 {
            i += 1;
        }
        match i {
            0 => (DokCase::All, 0),
            _ if t == 0 => (DokCase::All, 0),
            _ if i < t => (DokCase::Middle, i),
            _ => (DokCase::Last, t),
        }
    }

    /// The `k` lowest present planes at `line`, sorted by height then id.
    ///
    /// A cell answers only if at least `k` of its live planes pass strictly
    /// below its ceiling on the line; those include the `k` lowest overall.
    /// Otherwise the query moves to the next coarser level.
    pub fn query(&self, line: &VerticalLine, k: usize) -> Result<Vec<Plane>> {
        if k == 0 {
            return Err(Error::ZeroK);
        }
        let (_, mut level) = self.case_for(k);
        while level > 0 {
            let cut = &self.cuttings[level - 1];
            let cell = cut.cell(cut.locate_cell(line));
            let ceiling = cell.ceiling_at(line);
            let cand: Vec<Plane> = cell.conflict().iter().filter(|&&s| self.present[s as usize]).map(|&s| self.planes[s as usize]).collect();
            if cand.iter().filter(|p| ceiling.is_below(p)).count() >= k {
                return Ok(select_lowest(cand, line, k));
            }
            level -= 1;
        }
        Ok(select_lowest(self.planes(), line, k))
    }

    /// [`query`](Self::query), also counting the branch taken.
    pub fn query_counted(&mut self, line: &VerticalLine, k: usize) -> Result<Vec<Plane>> {
        let (case, level) = self.case_for(k);
        match case {
            DokCase::All => self.stats.case_all += 1,
            DokCase::Middle => self.stats.case_middle += 1,
            DokCase::Last => self.stats.case_last += 1,
        }
        if level > 0 {
            let cut = &self.cuttings[level - 1];
            let cell = cut.cell(cut.locate_cell(line));
            let ceiling = cell.ceiling_at(line);
            let below = cell.conflict().iter().filter(|&&s| self.present[s as usize] && ceiling.is_below(&self.planes[s as usize])).count();
            if below < k {
                self.stats.fallbacks += 1;
            }
        }
        self.query(line, k)
    }
}
