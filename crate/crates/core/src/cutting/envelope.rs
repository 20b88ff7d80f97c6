//! Vertices of the lower envelope over the query box, by clipping each plane's
//! region against every other plane.

use std::collections::HashSet;

use num_integer::Integer;

use crate::geom::{Plane, COEFF_LIMIT};

/// A line `a*x + b*y + c = 0`; the kept side is `>= 0`.
type Line = (i128, i128, i128);

/// Homogeneous point `(x/w, y/w)` with `w > 0`.
pub type HomPoint = (i128, i128, i128);

fn meet(l1: Line, l2: Line) -> Option<HomPoint> {
    let x = l1.1 * l2.2 - l1.2 * l2.1;
    let y = l1.2 * l2.0 - l1.0 * l2.2;
    let w = l1.0 * l2.1 - l1.1 * l2.0;
    match w.signum() {
        0 => None,
        1 => Some((x, y, w)),
        _ => Some((-x, -y, -w)),
    }
}

fn side(l: Line, p: HomPoint) -> i128 {
    l.0 * p.0 + l.1 * p.1 + l.2 * p.2
}

fn reduce(p: HomPoint) -> HomPoint {
    let g = p.0.gcd(&p.1).gcd(&p.2);
    if g > 1 {
        (p.0 / g, p.1 / g, p.2 / g)
    } else {
        p
    }
}

fn box_edges() -> Vec<Line> {
    let b = COEFF_LIMIT as i128;
    // Counter-clockwise: bottom, right, top, left.
    vec![(0, 1, b), (-1, 0, b), (0, -1, b), (1, 0, b)]
}

/// Clips a convex polygon, given by its edge lines in order, to `clip >= 0`.
/// Returns `false` if nothing of positive area remains.
fn clip(edges: &mut Vec<Line>, clip: Line, scratch: &mut Vec<Line>) -> bool {
    let m = edges.len();
    let verts: Vec<HomPoint> = (0..m)
        .map(|i| meet(edges[(i + m - 1) % m], edges[i]).expect("consecutive edges are not parallel"))
        .collect();
    let signs: Vec<i128> = verts.iter().map(|&v| side(clip, v).signum()).collect();
    if signs.iter().all(|&s| s >= 0) {
        return true;
    }
    if signs.iter().all(|&s| s <= 0) {
        return false;
    }
    // Edge i runs from vertex i to vertex i+1. The positive vertices form one
    // cyclic run; keep the edges from where it is entered to where it is left.
    let entry = (0..m).find(|&i| signs[i] <= 0 && signs[(i + 1) % m] > 0).expect("mixed signs");
    let exit = (0..m).find(|&i| signs[i] > 0 && signs[(i + 1) % m] <= 0).expect("mixed signs");
    scratch.clear();
    let mut i = entry;
    loop {
        scratch.push(edges[i]);
        if i == exit {
            break;
        }
        i = (i + 1) % m;
    }
    scratch.push(clip);
    std::mem::swap(edges, scratch);
    true
}

/// All vertices of `LE(planes)` inside the closed query box, including where
/// the envelope meets the box boundary and the box corners.
pub fn lower_envelope_vertices(planes: &[Plane]) -> Vec<HomPoint> {
    let mut out = HashSet::new();
    let mut scratch = Vec::new();
    // Clip first by planes that are low somewhere, which shrinks regions fastest.
    let mut order: Vec<usize> = (0..planes.len()).collect();
    order.sort_by_key(|&i| planes[i].c());
    for &i in &order {
        let h = &planes[i];
        let mut edges = box_edges();
        let mut alive = true;
        for &j in &order {
            if j == i {
                continue;
            }
            let g = &planes[j];
            let l = ((g.a() - h.a()) as i128, (g.b() - h.b()) as i128, (g.c() - h.c()) as i128);
            if l.0 == 0 && l.1 == 0 {
                if l.2 < 0 || (l.2 == 0 && g.id < h.id) {
                    alive = false;
                    break;
                }
                continue;
            }
            if !clip(&mut edges, l, &mut scratch) {
                alive = false;
                break;
            }
        }
        if alive {
            let m = edges.len();
            for k in 0..m {
                if let Some(p) = meet(edges[(k + m - 1) % m], edges[k]) {
                    out.insert(reduce(p));
                }
            }
        }
    }
    let mut v: Vec<HomPoint> = out.into_iter().collect();
    v.sort_unstable();
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_planes_crease() {
        // z = x and z = -x meet along x = 0: vertices at (0, +-B) plus the four box corners.
        let p = [Plane::new(1, 1, 0, 0).unwrap(), Plane::new(2, -1, 0, 0).unwrap()];
        let v = lower_envelope_vertices(&p);
        let b = COEFF_LIMIT as i128;
        assert!(v.contains(&(0, b, 1)));
        assert!(v.contains(&(0, -b, 1)));
        assert_eq!(v.len(), 6);
    }

    #[test]
    fn three_planes_meet() {
        // x, y and -x-y meet at the origin.
        let p = [
            Plane::new(1, 1, 0, 0).unwrap(),
            Plane::new(2, 0, 1, 0).unwrap(),
            Plane::new(3, -1, -1, 0).unwrap(),
        ];
        assert!(lower_envelope_vertices(&p).contains(&(0, 0, 1)));
    }
}
