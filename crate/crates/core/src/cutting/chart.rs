//! Coordinate charts for cutting footprints.
//!
//! Each closed quadrant of the plane is mapped projectively onto the triangle
//! `s, t >= 0, s + t <= C` by `s = |x| / (1 + (|x| + |y|) / C)` and likewise
//! for `t`. Lines stay lines. Near the origin the map is close to the
//! identity; far away it shrinks distances like `C^2 / r`, so the radial
//! structure of the far field needs no more cells than the middle. The edge
//! `s + t = C` is the line at infinity, so footprints may have ideal
//! vertices and four root triangles cover the whole plane.
//!
//! Chart coordinates are integers `S = s * 2^SIDE_BITS / C`.

use std::cmp::Ordering;

use num_bigint::BigInt;

use crate::geom::{Plane, VerticalLine};

/// Chart triangles have legs of `2^SIDE_BITS` units.
pub const SIDE_BITS: u32 = 40;
const SIDE: i64 = 1 << SIDE_BITS;

/// A closed quadrant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
pub enum Chart {
    /// `x >= 0, y >= 0`
    NorthEast,
    /// `x <= 0, y >= 0`
    NorthWest,
    /// `x <= 0, y <= 0`
    SouthWest,
    /// `x >= 0, y <= 0`
    SouthEast,
}

pub(crate) const CHARTS: [Chart; 4] = [Chart::NorthEast, Chart::NorthWest, Chart::SouthWest, Chart::SouthEast];

impl Chart {
    fn signs(self) -> (i128, i128) {
        match self {
            Chart::NorthEast => (1, 1),
            Chart::NorthWest => (-1, 1),
            Chart::SouthWest => (-1, -1),
            Chart::SouthEast => (1, -1),
        }
    }

    pub(crate) fn index(self) -> usize {
        self as usize
    }
}

/// A vertex in chart coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ChartPoint {
    pub x: i64,
    pub y: i64,
}

impl ChartPoint {
    /// Midpoint, if it is representable.
    pub(crate) fn mid(self, o: ChartPoint) -> Option<ChartPoint> {
        let (sx, sy) = (self.x + o.x, self.y + o.y);
        if sx % 2 != 0 || sy % 2 != 0 {
            return None;
        }
        Some(ChartPoint { x: sx / 2, y: sy / 2 })
    }
}

/// Homogeneous real point `(x/w, y/w)` with `w >= 0`; `w = 0` is a direction at infinity.
pub type Hom = [i128; 3];

/// The scale `C = 2^log_center` of the quadrant maps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layout {
    pub log_center: u32,
}

impl Layout {
    /// Picks `C` near the typical distance of pairwise plane crossings from the origin.
    pub fn for_planes(planes: &[Plane], members: &[u32]) -> Layout {
        let m = members.len();
        if m < 2 {
            return Layout { log_center: 16 };
        }
        let samples = m.min(256);
        let mut d: Vec<f64> = (0..samples)
            .map(|t| {
                let p = &planes[members[t % m] as usize];
                let q = &planes[members[(t * 7919 + m / 2 + 1) % m] as usize];
                let slope = (p.a() - q.a()).abs().max((p.b() - q.b()).abs()).max(1) as f64;
                (p.c() - q.c()).abs() as f64 / slope
            })
            .collect();
        d.sort_by(|a, b| a.total_cmp(b));
        let q80 = d[(samples * 4) / 5].max(1.0);
        let log = (2.0 * q80).log2().ceil() as i64;
        Layout { log_center: log.clamp(4, 30) as u32 }
    }

    /// The root triangle of every chart, counter-clockwise, with the ideal edge second to third.
    pub fn root(&self) -> [ChartPoint; 3] {
        [ChartPoint { x: 0, y: 0 }, ChartPoint { x: SIDE, y: 0 }, ChartPoint { x: 0, y: SIDE }]
    }

    /// The chart containing the real point `(x/w, y/w)`, `w > 0`.
    pub fn chart_of(&self, x: i128, y: i128) -> Chart {
        match (x >= 0, y >= 0) {
            (true, true) => Chart::NorthEast,
            (false, true) => Chart::NorthWest,
            (false, false) => Chart::SouthWest,
            (true, false) => Chart::SouthEast,
        }
    }

    /// Real homogeneous coordinates of a chart vertex.
    pub fn to_real(&self, chart: Chart, p: ChartPoint) -> Hom {
        self.to_real_frac(chart, p.x as i128, p.y as i128, 1)
    }

    /// Real homogeneous coordinates of the chart point `(s/d, t/d)`, `d > 0`.
    pub fn to_real_frac(&self, chart: Chart, s: i128, t: i128, d: i128) -> Hom {
        let (sx, sy) = chart.signs();
        let cs = self.log_center;
        [sx * (s << cs), sy * (t << cs), (d << SIDE_BITS) - s - t]
    }

    /// Approximate chart coordinates of the real point `(x/w, y/w)`, `w > 0`.
    pub(crate) fn to_chart_f64(&self, chart: Chart, x: f64, y: f64, w: f64) -> Option<(f64, f64)> {
        let (sx, sy) = chart.signs();
        let (ax, ay) = (x * sx as f64, y * sy as f64);
        if ax < 0.0 || ay < 0.0 {
            return None;
        }
        let den = w * (1u64 << self.log_center) as f64 + ax + ay;
        let side = SIDE as f64;
        Some((side * ax / den, side * ay / den))
    }

    /// Chart-space homogeneous coordinates of the real point `(x/w, y/w)`, `w > 0`,
    /// or `None` if the point is outside the chart's quadrant.
    pub(crate) fn to_chart(&self, chart: Chart, x: i128, y: i128, w: i128) -> Option<ChartHom> {
        let (sx, sy) = chart.signs();
        let (ax, ay) = (BigInt::from(x) * sx, BigInt::from(y) * sy);
        let zero = BigInt::from(0);
        if ax < zero || ay < zero {
            return None;
        }
        let den = BigInt::from(w) * BigInt::from(1i64 << self.log_center) + &ax + &ay;
        let side = BigInt::from(SIDE);
        Some(ChartHom::new(ax * &side, ay * side, den))
    }

    /// The chart and chart-space coordinates of a query line.
    pub(crate) fn locate_line(&self, line: &VerticalLine) -> (Chart, ChartHom) {
        let (xn, yn) = line.numerators();
        let (x, y, w) = (xn as i128, yn as i128, line.den() as i128);
        let chart = self.chart_of(x, y);
        (chart, self.to_chart(chart, x, y, w).expect("chart_of picks the point's quadrant"))
    }
}

/// A chart-space point `(x/w, y/w)`, `w > 0`, with a float copy for filtering.
#[derive(Clone, Debug)]
pub(crate) struct ChartHom {
    x: BigInt,
    y: BigInt,
    w: BigInt,
    small: Option<(i128, i128, i128)>,
    f: (f64, f64, f64),
}

impl ChartHom {
    pub fn new(x: BigInt, y: BigInt, w: BigInt) -> ChartHom {
        use num_traits::ToPrimitive;
        let small = match (x.to_i128(), y.to_i128(), w.to_i128()) {
            (Some(a), Some(b), Some(c)) => Some((a, b, c)),
            _ => None,
        };
        let f = (x.to_f64().unwrap_or(f64::NAN), y.to_f64().unwrap_or(f64::NAN), w.to_f64().unwrap_or(f64::NAN));
        ChartHom { x, y, w, small, f }
    }
}

/// Sign of the turn `a -> b -> q` in chart space.
pub(crate) fn orient(a: ChartPoint, b: ChartPoint, q: &ChartHom) -> Ordering {
    let (ax, ay) = (a.x as i128, a.y as i128);
    let ex = b.x as i128 - ax;
    let ey = b.y as i128 - ay;
    // Float filter: each term carries a relative error of a few ulps.
    let (qx, qy, qw) = q.f;
    let (dx, dy) = (qx - ax as f64 * qw, qy - ay as f64 * qw);
    let val = ex as f64 * dy - ey as f64 * dx;
    let mag = (ex as f64).abs() * (qy.abs() + (ay as f64 * qw).abs()) + (ey as f64).abs() * (qx.abs() + (ax as f64 * qw).abs());
    if val.is_finite() && val.abs() > mag * 1e-12 {
        return if val > 0.0 { Ordering::Greater } else { Ordering::Less };
    }
    if let Some((qx, qy, qw)) = q.small {
        let d = ax.checked_mul(qw).and_then(|p| qx.checked_sub(p)).zip(ay.checked_mul(qw).and_then(|r| qy.checked_sub(r)));
        if let Some((dx, dy)) = d {
            if let (Some(l), Some(r)) = (ex.checked_mul(dy), ey.checked_mul(dx)) {
                return l.cmp(&r);
            }
        }
    }
    let big = BigInt::from;
    let dx = &q.x - big(ax) * &q.w;
    let dy = &q.y - big(ay) * &q.w;
    (big(ex) * dy).cmp(&(big(ey) * dx))
}

/// Closed containment in a counter-clockwise chart triangle.
pub(crate) fn tri_contains(t: &[ChartPoint; 3], q: &ChartHom) -> bool {
    (0..3).all(|j| orient(t[j], t[(j + 1) % 3], q) != Ordering::Less)
}

/// Twice the signed area of a chart triangle.
pub(crate) fn twice_area(t: &[ChartPoint; 3]) -> i128 {
    let (ax, ay) = (t[0].x as i128, t[0].y as i128);
    (t[1].x as i128 - ax) * (t[2].y as i128 - ay) - (t[1].y as i128 - ay) * (t[2].x as i128 - ax)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vertex_round_trip() {
        let l = Layout { log_center: 4 };
        // s = t = C/4 is the real point (C/2, C/2); in the south-west chart (-8, -8).
        let p = ChartPoint { x: SIDE / 4, y: SIDE / 4 };
        let h = l.to_real(Chart::SouthWest, p);
        assert_eq!(h[0], -8 * h[2]);
        assert_eq!(h[1], -8 * h[2]);
        let q = l.to_chart(Chart::SouthWest, -8, -8, 1).unwrap();
        let (x, y, w) = q.small.unwrap();
        assert_eq!((x, y), (p.x as i128 * w, p.y as i128 * w));
    }

    #[test]
    fn ideal_edge() {
        let l = Layout { log_center: 10 };
        let h = l.to_real(Chart::NorthWest, ChartPoint { x: SIDE / 2, y: SIDE / 2 });
        assert_eq!(h[2], 0);
        assert!(h[0] < 0 && h[1] > 0);
    }

    #[test]
    fn charts_by_quadrant() {
        let l = Layout { log_center: 4 };
        assert_eq!(l.chart_of(0, 0), Chart::NorthEast);
        assert_eq!(l.chart_of(-1, 0), Chart::NorthWest);
        assert_eq!(l.chart_of(-1, -3), Chart::SouthWest);
        assert_eq!(l.chart_of(2, -3), Chart::SouthEast);
        assert!(l.to_chart(Chart::NorthEast, -5, 0, 1).is_none());
        assert!(l.to_chart(Chart::NorthWest, 0, 5, 1).is_some());
    }

    #[test]
    fn orient_exact_on_line() {
        let a = ChartPoint { x: 0, y: 0 };
        let b = ChartPoint { x: SIDE, y: SIDE };
        let big = |v: i128| BigInt::from(v);
        let on = ChartHom::new(big(3 << 100), big(3 << 100), big(1 << 60));
        assert_eq!(orient(a, b, &on), Ordering::Equal);
        let off = ChartHom::new(big(3 << 100), big((3 << 100) + 1), big(1 << 60));
        assert_eq!(orient(a, b, &off), Ordering::Greater);
    }
}
