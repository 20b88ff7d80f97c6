//! Independent checks of the shallow-cutting contract.
//!
//! Containment and ceiling heights are computed from the cells' real
//! homogeneous vertices, so these checks do not trust the chart maps used
//! during construction.

use num_bigint::BigInt;

use super::chart::{tri_contains, twice_area, ChartHom, CHARTS};
use super::envelope::lower_envelope_vertices;
use super::{Hom, PrismCell, ShallowCutting};
use crate::geom::{Plane, VerticalLine, COEFF_LIMIT};

/// Grid resolution for sample points per chart axis.
const GRID: i128 = 24;
/// Buckets per chart axis in the witness index.
const BUCKETS: usize = 64;

/// Findings of [`verify_cutting`]; counts are of failures unless noted.
#[derive(Clone, Debug, Default, PartialEq, serde::Serialize)]
pub struct VerifyReport {
    pub cells: usize,
    /// Cells with non-positive orientation or outside their chart.
    pub bad_footprints: usize,
    /// Total over charts of `|sum of cell areas - chart area|`, doubled (0 when tiled).
    pub area_excess: i128,
    /// Grid witnesses covered by no footprint.
    pub gaps: usize,
    /// Grid witnesses interior to two or more footprints.
    pub overlaps: usize,
    /// Query lines where `locate_cell` returned a cell not containing them.
    pub locator_mismatches: usize,
    pub conflict_mismatches: usize,
    pub size_violations: usize,
    pub witnesses: usize,
    /// Witnesses where the k-th lowest plane is above some containing ceiling or uncovered.
    pub coverage_failures: usize,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.bad_footprints == 0
            && self.area_excess == 0
            && self.gaps == 0
            && self.overlaps == 0
            && self.locator_mismatches == 0
            && self.conflict_mismatches == 0
            && self.size_violations == 0
            && self.coverage_failures == 0
    }
}

fn det3(a: &[BigInt; 3], b: &[BigInt; 3], c: &[BigInt; 3]) -> BigInt {
    &a[0] * (&b[1] * &c[2] - &b[2] * &c[1]) - &a[1] * (&b[0] * &c[2] - &b[2] * &c[0]) + &a[2] * (&b[0] * &c[1] - &b[1] * &c[0])
}

fn big3(h: &Hom) -> [BigInt; 3] {
    h.map(BigInt::from)
}

/// Barycentric numerators of `q` in the cone over the cell's vertices, normalized so the
/// denominator is positive.
pub(super) fn barycentric(cell: &PrismCell, q: &Hom) -> ([BigInt; 3], BigInt) {
    let p = cell.vertices().map(|v| big3(&v));
    let q = big3(q);
    let mut d = det3(&p[0], &p[1], &p[2]);
    let mut mu = [det3(&q, &p[1], &p[2]), det3(&p[0], &q, &p[2]), det3(&p[0], &p[1], &q)];
    if d < BigInt::from(0) {
        d = -d;
        for m in &mut mu {
            *m = -&*m;
        }
    }
    (mu, d)
}

#[derive(PartialEq)]
enum Inside {
    No,
    Boundary,
    Interior,
}

fn contains(cell: &PrismCell, q: &Hom) -> Inside {
    let (mu, _) = barycentric(cell, q);
    let zero = BigInt::from(0);
    if mu.iter().any(|m| *m < zero) {
        Inside::No
    } else if mu.iter().all(|m| *m > zero) {
        Inside::Interior
    } else {
        Inside::Boundary
    }
}

/// Whether the homogeneous height `h` at `q` is at most the cell's ceiling there; `q` must be inside.
fn below_ceiling(cell: &PrismCell, q: &Hom, h: i128) -> bool {
    let (mu, d) = barycentric(cell, q);
    let z = cell.ceiling_scaled();
    let ceil: BigInt = (0..3).map(|j| &mu[j] * BigInt::from(z[j])).sum();
    BigInt::from(h) * d <= ceil
}

/// Chart-space buckets of cell bounding boxes.
struct Index<'a> {
    cutting: &'a ShallowCutting,
    buckets: Vec<Vec<Vec<usize>>>,
}

impl<'a> Index<'a> {
    fn new(cutting: &'a ShallowCutting) -> Self {
        let side = cutting.layout().root()[1].x as f64;
        let mut buckets = vec![vec![Vec::new(); BUCKETS * BUCKETS]; CHARTS.len()];
        for (idx, c) in cutting.cells().iter().enumerate() {
            let ci = c.chart().index();
            let f = c.footprint();
            let b = |v: i64| bucket(v as f64, side);
            let (x0, x1) = (f.iter().map(|p| b(p.x)).min().unwrap(), f.iter().map(|p| b(p.x)).max().unwrap());
            let (y0, y1) = (f.iter().map(|p| b(p.y)).min().unwrap(), f.iter().map(|p| b(p.y)).max().unwrap());
            // One bucket of slack absorbs float error in witness coordinates.
            for i in x0.saturating_sub(1)..=(x1 + 1).min(BUCKETS - 1) {
                for j in y0.saturating_sub(1)..=(y1 + 1).min(BUCKETS - 1) {
                    buckets[ci][i * BUCKETS + j].push(idx);
                }
            }
        }
        Index { cutting, buckets }
    }

    /// Cells whose closed footprint may contain the real point `q`, `w > 0`.
    fn candidates(&self, q: &Hom) -> Vec<usize> {
        let layout = self.cutting.layout();
        let mut out = Vec::new();
        for chart in CHARTS {
            let Some((u, v)) = layout.to_chart_f64(chart, q[0] as f64, q[1] as f64, q[2] as f64) else {
                continue;
            };
            let side = layout.root()[1].x as f64;
            out.extend_from_slice(&self.buckets[chart.index()][bucket(u, side) * BUCKETS + bucket(v, side)]);
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

fn bucket(v: f64, side: f64) -> usize {
    ((v / side * BUCKETS as f64).floor().max(0.0) as usize).min(BUCKETS - 1)
}

/// Grid sample points of the chart triangle, as chart homogeneous `(s, t, d)`;
/// offset by a third of a step so most samples avoid split edges.
fn chart_grid(cutting: &ShallowCutting) -> Vec<(i128, i128, i128)> {
    let side = cutting.layout().root()[1].x as i128;
    let d = 3 * GRID;
    let mut v = Vec::new();
    for i in 0..GRID {
        for j in 0..GRID - i {
            v.push((side * (3 * i + 1), side * (3 * j + 1), d));
        }
    }
    v
}

/// Query lines spread over the domain on a geometric scale.
fn probe_lines() -> Vec<VerticalLine> {
    let mut vals = vec![0i64];
    for e in 0..31 {
        let m = (1i64 << e) + e as i64;
        if m < COEFF_LIMIT {
            vals.push(m);
            vals.push(-m);
        }
    }
    let mut out = Vec::new();
    for &x in &vals {
        for &y in &vals {
            out.push(VerticalLine::new(x, y).expect("in domain"));
        }
    }
    out.push(VerticalLine::rational(1, -1, 3).expect("in domain"));
    out
}

/// Checks `cutting` against the planes it was built for.
///
/// The witness set is every vertex of `LE(planes)` in the query box, every
/// finite ceiling vertex, every cell centroid and a grid in each chart. At each witness the k-th
/// lowest plane must lie at or below the ceiling of every cell whose closed
/// footprint contains the witness, and at least one such cell must exist.
pub fn verify_cutting(cutting: &ShallowCutting, planes: &[Plane], k: usize) -> VerifyReport {
    let mut rep = VerifyReport { cells: cutting.cells().len(), ..Default::default() };
    let k = k.clamp(1, planes.len().max(1));
    let layout = cutting.layout();

    let root = layout.root();
    let side = root[1].x;
    let mut area = [0i128; CHARTS.len()];
    for c in cutting.cells() {
        let a = twice_area(c.footprint());
        area[c.chart().index()] += a;
        let inside = c.footprint().iter().all(|p| p.x >= 0 && p.y >= 0 && p.x + p.y <= side);
        if a <= 0 || !inside {
            rep.bad_footprints += 1;
        }
    }
    for a in area {
        rep.area_excess += (a - twice_area(&root)).abs();
    }

    let mut by_chart: Vec<Vec<&PrismCell>> = vec![Vec::new(); CHARTS.len()];
    for c in cutting.cells() {
        by_chart[c.chart().index()].push(c);
    }
    let mut grid_real: Vec<Hom> = Vec::new();
    let grid = chart_grid(cutting);
    for chart in CHARTS {
        for &(u, v, d) in &grid {
            let q = ChartHom::new(u.into(), v.into(), d.into());
            let mut closed = 0;
            let mut interior = 0;
            for c in &by_chart[chart.index()] {
                if tri_contains(c.footprint(), &q) {
                    closed += 1;
                    let h = layout.to_real_frac(chart, u, v, d);
                    if contains(c, &h) == Inside::Interior {
                        interior += 1;
                    }
                }
            }
            if closed == 0 {
                rep.gaps += 1;
            }
            if interior > 1 {
                rep.overlaps += 1;
            }
            grid_real.push(layout.to_real_frac(chart, u, v, d));
        }
    }

    for line in probe_lines() {
        let id = cutting.locate_cell(&line);
        let (xn, yn) = line.numerators();
        let q = [xn as i128, yn as i128, line.den() as i128];
        match cutting.cells().iter().find(|c| c.id == id) {
            Some(c) if contains(c, &q) != Inside::No => {}
            _ => rep.locator_mismatches += 1,
        }
    }

    for c in cutting.cells() {
        let v = c.vertices();
        let z = c.ceiling_scaled();
        let expect: Vec<u32> = (0..planes.len() as u32)
            .filter(|&i| (0..3).any(|j| planes[i as usize].hom(v[j][0], v[j][1], v[j][2]) < z[j]))
            .collect();
        if expect.as_slice() != c.conflict() {
            rep.conflict_mismatches += 1;
        }
        if c.conflict().len() > cutting.max_conflict() {
            rep.size_violations += 1;
        }
    }

    let mut witnesses: Vec<Hom> = lower_envelope_vertices(planes).into_iter().map(|(x, y, w)| [x, y, w]).collect();
    for c in cutting.cells() {
        witnesses.extend(c.vertices().iter().filter(|v| v[2] > 0).copied());
        let f = c.footprint();
        let (u, v) = f.iter().fold((0i128, 0i128), |(u, v), p| (u + p.x as i128, v + p.y as i128));
        witnesses.push(layout.to_real_frac(c.chart(), u, v, 3));
    }
    witnesses.extend(grid_real);
    witnesses.sort_unstable();
    witnesses.dedup();
    rep.witnesses = witnesses.len();

    let index = Index::new(cutting);
    let mut heights: Vec<i128> = Vec::with_capacity(planes.len());
    for q in &witnesses {
        heights.clear();
        heights.extend(planes.iter().map(|p| p.hom(q[0], q[1], q[2])));
        let (_, kth, _) = heights.select_nth_unstable(k - 1);
        let kth = *kth;
        let mut covered = false;
        let mut failed = false;
        for idx in index.candidates(q) {
            let c = &cutting.cells()[idx];
            if contains(c, q) == Inside::No {
                continue;
            }
            if below_ceiling(c, q, kth) {
                covered = true;
            } else {
                failed = true;
            }
        }
        if failed || !covered {
            rep.coverage_failures += 1;
        }
    }
    rep
}

