//! Vertical shallow cuttings built by adaptive triangle bisection.
//!
//! Footprints come from bisection of the root triangles of four coordinate
//! charts (see [`Chart`]). Every cell picks a set `S` of `k` planes, the
//! lowest at one of a few anchor points, and places its ceiling one unit
//! above the highest of them at each vertex, so all of `S` lies strictly
//! below the ceiling and every point of level `< k` inside the prism is
//! covered. Cells whose conflict list is too long are split along whichever
//! edge gives the shortest child lists. The bisection trees double as the
//! point locator.

mod chart;
mod envelope;
mod verify;

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::geom::{Plane, PlaneId, VerticalLine};

pub use chart::{Chart, ChartPoint, Hom, Layout, SIDE_BITS};
pub use envelope::lower_envelope_vertices;
pub use verify::{verify_cutting, VerifyReport};

use chart::{orient, ChartHom, CHARTS};

/// Constants controlling construction.
#[derive(Clone, Debug, PartialEq)]
pub struct CuttingBudget {
    /// Conflict lists must satisfy `|list| <= c * k`.
    pub c: usize,
    /// At most `c_prime * n / k` cells.
    pub c_prime: usize,
    pub max_retries: u32,
    /// Cells are split while their list exceeds `refine * k`; retries coarsen toward `c`.
    pub refine: usize,
}

impl Default for CuttingBudget {
    fn default() -> Self {
        CuttingBudget { c: 8, c_prime: 4, max_retries: 8, refine: 8 }
    }
}

/// A prism below a triangular ceiling.
///
/// Vertices are kept in chart coordinates and as real homogeneous points
/// `(X, Y, W)`. Ceiling values are homogeneous heights: the ceiling over
/// vertex `j` has height `ceiling[j] / W_j`, or slope `ceiling[j]` in the
/// vertex direction when `W_j = 0`. A plane conflicts with the cell when
/// `a*X + b*Y + c*W < ceiling` at some vertex.
#[derive(Clone, Debug)]
pub struct PrismCell {
    pub id: usize,
    chart: Chart,
    footprint: [ChartPoint; 3],
    vertices: [Hom; 3],
    ceiling: [i128; 3],
    /// Indices into the plane slice the cutting was built over, ascending.
    conflict: Vec<u32>,
    /// Entries before this cursor have been removed from the list.
    drained: usize,
    pub kappa: u32,
}

/// A cell's ceiling over one vertical line, for exact comparisons there.
#[derive(Clone, Debug)]
pub struct CeilingAt {
    line: VerticalLine,
    num: num_bigint::BigInt,
    den: num_bigint::BigInt,
}

impl CeilingAt {
    /// Whether `plane` passes strictly below the ceiling on this line.
    pub fn is_below(&self, plane: &Plane) -> bool {
        num_bigint::BigInt::from(plane.scaled_height(&self.line)) * &self.den < self.num
    }
}

impl PrismCell {
    /// The ceiling over `line`; meaningful only if the line crosses the footprint.
    pub fn ceiling_at(&self, line: &VerticalLine) -> CeilingAt {
        let (xn, yn) = line.numerators();
        let q = [xn as i128, yn as i128, line.den() as i128];
        let (mu, den) = verify::barycentric(self, &q);
        let num = (0..3).map(|j| &mu[j] * num_bigint::BigInt::from(self.ceiling[j])).sum();
        CeilingAt { line: *line, num, den }
    }

    pub fn chart(&self) -> Chart {
        self.chart
    }

    /// Footprint in chart coordinates, counter-clockwise.
    pub fn footprint(&self) -> &[ChartPoint; 3] {
        &self.footprint
    }

    /// Footprint vertices as real homogeneous points.
    pub fn vertices(&self) -> &[Hom; 3] {
        &self.vertices
    }

    /// Homogeneous ceiling heights at the vertices.
    pub fn ceiling_scaled(&self) -> &[i128; 3] {
        &self.ceiling
    }

    pub fn set_ceiling_scaled(&mut self, ceiling: [i128; 3]) {
        self.ceiling = ceiling;
    }

    /// Current conflict list (plane indices), after removals.
    pub fn conflict(&self) -> &[u32] {
        &self.conflict[self.drained..]
    }

    /// The list as built, including removed entries.
    pub fn original_conflict(&self) -> &[u32] {
        &self.conflict
    }

    pub fn conflict_ids(&self, planes: &[Plane]) -> Vec<PlaneId> {
        self.conflict().iter().map(|&i| planes[i as usize].id).collect()
    }

    /// Removes up to `count` entries from the front of the list and returns them.
    pub fn drain_front(&mut self, count: usize) -> &[u32] {
        let start = self.drained;
        self.drained = (start + count).min(self.conflict.len());
        &self.conflict[start..self.drained]
    }
}

#[derive(Clone, Debug)]
enum NodeKind {
    Leaf(usize),
    Split(u32, u32),
}

#[derive(Clone, Debug)]
struct Node {
    chart: Chart,
    tri: [ChartPoint; 3],
    depth: u32,
    kind: NodeKind,
}

/// Outcome counters of one construction.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BuildStats {
    pub nodes_processed: usize,
    /// Cells whose candidate set had to be widened to the full plane set.
    pub widened: usize,
    /// Cells left over the split threshold because their edge could not be halved.
    pub depth_capped: usize,
    pub attempts: u32,
}

/// A `(k, K)` vertical shallow cutting.
#[derive(Clone, Debug)]
pub struct ShallowCutting {
    k: usize,
    max_conflict: usize,
    layout: Layout,
    cells: Vec<PrismCell>,
    nodes: Vec<Node>,
    pub stats: BuildStats,
}

/// Builds a cutting for all of `planes` (indices in conflict lists refer to this slice).
pub fn build_shallow_cutting(planes: &[Plane], k: usize, budget: &CuttingBudget) -> Result<ShallowCutting> {
    if planes.is_empty() {
        return Err(Error::Empty);
    }
    if k == 0 {
        return Err(Error::ZeroK);
    }
    let members: Vec<u32> = (0..planes.len() as u32).collect();
    ShallowCutting::build_over(planes, &members, k, budget, None, true)
}

struct Work {
    node: u32,
    universe: Vec<u32>,
    /// Twice the enclosing ceiling at the three vertices, if any.
    outer2: Option<[i128; 3]>,
    /// Vertices and certificate, when already computed.
    pre: Option<([Hom; 3], ([i128; 3], Vec<u32>))>,
}

struct Builder<'a> {
    planes: &'a [Plane],
    members: &'a [u32],
    k: usize,
    split_above: usize,
    layout: Layout,
    nodes: Vec<Node>,
    cells: Vec<PrismCell>,
    stats: BuildStats,
    heights: Vec<[i128; 3]>,
    keys: Vec<(i128, PlaneId, u32)>,
    fits: Vec<u32>,
}

/// Barycentric weights of the points where candidate sets are chosen: the
/// centroid, points near each vertex and the edge midpoints.
const ANCHORS: [[i128; 3]; 7] = [[1, 1, 1], [4, 1, 1], [1, 4, 1], [1, 1, 4], [0, 1, 1], [1, 0, 1], [1, 1, 0]];

impl<'a> Builder<'a> {
    /// Ceiling and conflict list for one triangle; `None` if the candidates are too few.
    fn certify(&mut self, verts: &[Hom; 3], universe: &[u32], outer2: Option<[i128; 3]>, anchors: &[[i128; 3]]) -> Option<([i128; 3], Vec<u32>)> {
        let (z, size) = self.ceiling(verts, universe, outer2, anchors)?;
        let mut conflict = Vec::with_capacity(size);
        conflict.extend(universe.iter().zip(&self.heights).filter(|(_, h)| (0..3).any(|j| h[j] < z[j])).map(|(&i, _)| i));
        Some((z, conflict))
    }

    /// Ceiling and conflict list size, leaving the heights in `self.heights`.
    fn ceiling(&mut self, verts: &[Hom; 3], universe: &[u32], outer2: Option<[i128; 3]>, anchors: &[[i128; 3]]) -> Option<([i128; 3], usize)> {
        self.heights.clear();
        for &i in universe {
            let p = &self.planes[i as usize];
            self.heights.push(std::array::from_fn(|j| p.hom(verts[j][0], verts[j][1], verts[j][2])));
        }
        self.ceiling_from_heights(verts, universe, outer2, anchors)
    }

    fn ceiling_from_heights(&mut self, verts: &[Hom; 3], universe: &[u32], outer2: Option<[i128; 3]>, anchors: &[[i128; 3]]) -> Option<([i128; 3], usize)> {
        // The ceiling clears its planes by one real unit, `W` in homogeneous
        // terms. At ideal vertices it only matches their slope, so it does
        // not tilt up toward infinity over planes parallel to the lowest ones.
        let lift: [i128; 3] = std::array::from_fn(|j| verts[j][2]);
        self.fits.clear();
        for (pos, h) in self.heights.iter().enumerate() {
            // Candidates clear the enclosing ceiling by the same margin, so
            // the new ceiling cannot rise above it.
            if outer2.map_or(true, |o| (0..3).all(|j| 2 * (h[j] + lift[j]) <= o[j])) {
                self.fits.push(pos as u32);
            }
        }
        if self.fits.len() < self.k {
            return None;
        }
        // Try the k lowest planes at a few anchor points and keep the tightest.
        let mut best: Option<([i128; 3], usize)> = None;
        for &w in anchors {
            let top = self.top_for(universe, w);
            let z: [i128; 3] = std::array::from_fn(|j| top[j] + lift[j]);
            let size = self.heights.iter().filter(|h| (0..3).any(|j| h[j] < z[j])).count();
            if best.map_or(true, |(_, s)| size < s) {
                best = Some((z, size));
            }
        }
        best
    }

    /// Per-vertex maximum over the `k` fitting planes lowest at the anchor with barycentric weights `w`.
    fn top_for(&mut self, universe: &[u32], w: [i128; 3]) -> [i128; 3] {
        self.keys.clear();
        for &pos in &self.fits {
            let h = &self.heights[pos as usize];
            let key = w[0] * h[0] + w[1] * h[1] + w[2] * h[2];
            self.keys.push((key, self.planes[universe[pos as usize] as usize].id, pos));
        }
        let k = self.k;
        if self.keys.len() > k {
            self.keys.select_nth_unstable(k - 1);
        }
        let mut top = [i128::MIN; 3];
        for &(_, _, pos) in &self.keys[..k] {
            let h = &self.heights[pos as usize];
            for j in 0..3 {
                top[j] = top[j].max(h[j]);
            }
        }
        top
    }

    fn run(&mut self, mut stack: Vec<Work>) {
        while let Some(w) = stack.pop() {
            self.stats.nodes_processed += 1;
            let Node { chart, tri, depth, .. } = self.nodes[w.node as usize];
            let (verts, (ceiling, conflict)) = match w.pre {
                Some(p) => p,
                None => {
                    let verts = tri.map(|p| self.layout.to_real(chart, p));
                    let cert = self.certify_or_widen(&verts, &w.universe, w.outer2, &ANCHORS);
                    (verts, cert)
                }
            };
            if conflict.len() <= self.split_above {
                self.leaf(w.node, chart, tri, verts, ceiling, conflict);
                continue;
            }
            // Heights at the three vertices, then at the three edge midpoints.
            let mut pts = [verts[0]; 6];
            for r in 0..3 {
                pts[r] = verts[r];
                if let Some(m) = tri[(r + 1) % 3].mid(tri[(r + 2) % 3]) {
                    pts[3 + r] = self.layout.to_real(chart, m);
                }
            }
            let node_h: Vec<[i128; 6]> = conflict
                .iter()
                .map(|&i| {
                    let p = &self.planes[i as usize];
                    pts.map(|v| p.hom(v[0], v[1], v[2]))
                })
                .collect();
            // Score the three edges by the lists the centroid anchor alone
            // gives, then certify the winner with every anchor.
            let mut best: Option<(usize, [([ChartPoint; 3], [i128; 3], [usize; 3]); 2])> = None;
            for r in 0..3 {
                let t = [tri[r], tri[(r + 1) % 3], tri[(r + 2) % 3]];
                let z = [ceiling[r], ceiling[(r + 1) % 3], ceiling[(r + 2) % 3]];
                let Some(m) = t[1].mid(t[2]) else { continue };
                let zm2 = z[1] + z[2];
                let z2 = z.map(|v| 2 * v);
                let (r1, r2) = ((r + 1) % 3, (r + 2) % 3);
                let halves = [([m, t[0], t[1]], [zm2, z2[0], z2[1]], [3 + r, r, r1]), ([m, t[2], t[0]], [zm2, z2[2], z2[0]], [3 + r, r2, r])];
                let score: usize = halves
                    .iter()
                    .map(|(_, outer2, src)| {
                        let cv = src.map(|j| pts[j]);
                        self.gather(&node_h, *src);
                        match self.ceiling_from_heights(&cv, &conflict, Some(*outer2), &ANCHORS[..1]) {
                            Some((_, size)) => size,
                            None => self.certify_or_widen(&cv, &conflict, Some(*outer2), &ANCHORS[..1]).1.len(),
                        }
                    })
                    .sum();
                if best.as_ref().map_or(true, |(s, _)| score < *s) {
                    best = Some((score, halves));
                }
            }
            let Some((_, halves)) = best else {
                self.stats.depth_capped += 1;
                self.leaf(w.node, chart, tri, verts, ceiling, conflict);
                continue;
            };
            let children = halves.map(|(ct, outer2, src)| {
                let cv = src.map(|j| pts[j]);
                debug_assert_eq!(cv, ct.map(|p| self.layout.to_real(chart, p)));
                self.gather(&node_h, src);
                let cert = match self.ceiling_from_heights(&cv, &conflict, Some(outer2), &ANCHORS) {
                    Some((z, size)) => {
                        let mut list = Vec::with_capacity(size);
                        list.extend(conflict.iter().zip(&self.heights).filter(|(_, h)| (0..3).any(|j| h[j] < z[j])).map(|(&i, _)| i));
                        (z, list)
                    }
                    None => self.certify_or_widen(&cv, &conflict, Some(outer2), &ANCHORS),
                };
                Child { tri: ct, verts: cv, cert }
            });
            let a = self.nodes.len() as u32;
            let depth = depth + 1;
            // The stored parent triangle is rotated so its split edge is `tri[1]..tri[2]`.
            let [m, q0, q1] = children[0].tri;
            let q2 = children[1].tri[1];
            debug_assert_eq!(q1.mid(q2), Some(m));
            self.nodes[w.node as usize].tri = [q0, q1, q2];
            self.nodes[w.node as usize].kind = NodeKind::Split(a, a + 1);
            for ch in &children {
                self.nodes.push(Node { chart, tri: ch.tri, depth, kind: NodeKind::Leaf(usize::MAX) });
            }
            for (off, ch) in children.into_iter().enumerate().rev() {
                stack.push(Work { node: a + off as u32, universe: Vec::new(), outer2: None, pre: Some((ch.verts, ch.cert)) });
            }
        }
    }

    fn gather(&mut self, node_h: &[[i128; 6]], src: [usize; 3]) {
        self.heights.clear();
        self.heights.extend(node_h.iter().map(|h| src.map(|j| h[j])));
    }

    fn certify_or_widen(&mut self, verts: &[Hom; 3], universe: &[u32], outer2: Option<[i128; 3]>, anchors: &[[i128; 3]]) -> ([i128; 3], Vec<u32>) {
        match self.certify(verts, universe, outer2, anchors) {
            Some(r) => r,
            None => {
                self.stats.widened += 1;
                let all = self.members;
                self.certify(verts, all, None, anchors).expect("k <= number of members")
            }
        }
    }

    fn leaf(&mut self, node: u32, chart: Chart, tri: [ChartPoint; 3], verts: [Hom; 3], ceiling: [i128; 3], conflict: Vec<u32>) {
        let id = self.cells.len();
        self.cells.push(PrismCell { id, chart, footprint: tri, vertices: verts, ceiling, conflict, drained: 0, kappa: 0 });
        self.nodes[node as usize].kind = NodeKind::Leaf(id);
    }
}

struct Child {
    tri: [ChartPoint; 3],
    verts: [Hom; 3],
    cert: ([i128; 3], Vec<u32>),
}

impl ShallowCutting {
    /// Builds over the subset `members` of `planes`.
    ///
    /// With `seed`, refinement starts from the seed's cells and their lists
    /// (restricted to `members`), which is valid whenever the seed was built
    /// over a superset of `members` for a level at least `k`. In `strict` mode
    /// budget violations are errors; otherwise the best attempt is returned.
    pub(crate) fn build_over(
        planes: &[Plane],
        members: &[u32],
        k: usize,
        budget: &CuttingBudget,
        seed: Option<&ShallowCutting>,
        strict: bool,
    ) -> Result<ShallowCutting> {
        if members.is_empty() {
            return Err(Error::Empty);
        }
        let k = k.clamp(1, members.len());
        let n = members.len();
        let max_cells = (budget.c_prime * n).div_ceil(k).max(1);
        let mut refine = budget.refine.clamp(1, budget.c.max(1));
        let mut last = None;
        for attempt in 1..=budget.max_retries.max(1) {
            let mut cut = Self::attempt(planes, members, k, (refine * k).max(k + 2), seed);
            cut.stats.attempts = attempt;
            let cells_ok = cut.cells.len() <= max_cells;
            let size_ok = cut.max_conflict <= budget.c * k;
            if cells_ok && size_ok {
                return Ok(cut);
            }
            last = Some(cut);
            if !cells_ok && refine < budget.c {
                refine = (refine * 2).min(budget.c);
            } else {
                break;
            }
        }
        let cut = last.expect("at least one attempt");
        if strict {
            return Err(Error::Construction(format!(
                "k={k}: {} cells (limit {max_cells}), max conflict {} (limit {})",
                cut.cells.len(),
                cut.max_conflict,
                budget.c * k
            )));
        }
        Ok(cut)
    }

    fn attempt(planes: &[Plane], members: &[u32], k: usize, split_above: usize, seed: Option<&ShallowCutting>) -> ShallowCutting {
        let layout = seed.map_or_else(|| Layout::for_planes(planes, members), |s| s.layout);
        let mut b = Builder {
            planes,
            members,
            k,
            split_above,
            layout,
            nodes: Vec::new(),
            cells: Vec::new(),
            stats: BuildStats::default(),
            heights: Vec::new(),
            keys: Vec::new(),
            fits: Vec::new(),
        };
        let mut stack = Vec::new();
        match seed {
            None => {
                // Root `i` is the triangle of chart `CHARTS[i]`.
                for chart in CHARTS {
                    b.nodes.push(Node { chart, tri: layout.root(), depth: 0, kind: NodeKind::Leaf(usize::MAX) });
                }
                for node in (0..b.nodes.len() as u32).rev() {
                    stack.push(Work { node, universe: members.to_vec(), outer2: None, pre: None });
                }
            }
            Some(s) => {
                let mut inside = vec![false; planes.len()];
                for &i in members {
                    inside[i as usize] = true;
                }
                // Copy the seed's internal nodes; its leaves become work items.
                b.nodes = s.nodes.clone();
                for (idx, node) in s.nodes.iter().enumerate() {
                    if let NodeKind::Leaf(c) = node.kind {
                        let cell = &s.cells[c];
                        let universe = cell.conflict.iter().copied().filter(|&i| inside[i as usize]).collect();
                        stack.push(Work { node: idx as u32, universe, outer2: Some(cell.ceiling.map(|z| 2 * z)), pre: None });
                    }
                }
                stack.reverse();
            }
        }
        b.run(stack);
        let max_conflict = b.cells.iter().map(|c| c.conflict.len()).max().unwrap_or(0);
        ShallowCutting { k, max_conflict, layout, cells: b.cells, nodes: b.nodes, stats: b.stats }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Largest conflict list size.
    pub fn max_conflict(&self) -> usize {
        self.max_conflict
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn cells(&self) -> &[PrismCell] {
        &self.cells
    }

    pub fn cells_mut(&mut self) -> &mut [PrismCell] {
        &mut self.cells
    }

    pub fn cell(&self, id: usize) -> &PrismCell {
        &self.cells[id]
    }

    pub fn cell_mut(&mut self, id: usize) -> &mut PrismCell {
        &mut self.cells[id]
    }

    /// Drops plane indices rejected by `keep` from every list; only valid before any removals.
    pub(crate) fn restrict(&mut self, keep: impl Fn(u32) -> bool) {
        for c in &mut self.cells {
            debug_assert_eq!(c.drained, 0);
            c.conflict.retain(|&i| keep(i));
        }
        self.max_conflict = self.cells.iter().map(|c| c.conflict.len()).max().unwrap_or(0);
    }

    /// Deletes a cell outright, leaving a hole; used by perturbation tests of the verifier.
    pub fn remove_cell(&mut self, id: usize) {
        self.cells.retain(|c| c.id != id);
    }

    /// The cell whose footprint contains the line. Points on a split edge go
    /// to the child holding the split triangle's second vertex.
    pub fn locate_cell(&self, line: &VerticalLine) -> usize {
        let (chart, q) = self.layout.locate_line(line);
        self.locate_in(chart, &q)
    }

    pub(crate) fn locate_in(&self, chart: Chart, q: &ChartHom) -> usize {
        let mut cur = chart.index();
        loop {
            let node = &self.nodes[cur];
            match node.kind {
                NodeKind::Leaf(c) => return c,
                NodeKind::Split(a, b) => {
                    let m = node.tri[1].mid(node.tri[2]).expect("split edges halve");
                    cur = if orient(node.tri[0], m, q) != Ordering::Greater { a as usize } else { b as usize };
                }
            }
        }
    }
}
