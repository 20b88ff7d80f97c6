//! Exact primitives: planes, vertical lines, levels, lifting and the disk edge predicate.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type PlaneId = u64;

/// Exclusive bound on the magnitude of plane coefficients and line coordinates.
pub const COEFF_LIMIT: i64 = 1 << 31;

/// Exclusive bound on planar point coordinates accepted by [`lift_point`].
pub const LIFT_LIMIT: i64 = 1 << 15;

/// The plane `z = a*x + b*y + c`, identified by `id`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Plane {
    pub id: PlaneId,
    a: i64,
    b: i64,
    c: i64,
}

fn check_coeff(v: i64) -> Result<i64> {
    if v.abs() < COEFF_LIMIT {
        Ok(v)
    } else {
        Err(Error::CoefficientOutOfRange(v))
    }
}

impl Plane {
    pub fn new(id: PlaneId, a: i64, b: i64, c: i64) -> Result<Self> {
        Ok(Plane { id, a: check_coeff(a)?, b: check_coeff(b)?, c: check_coeff(c)? })
    }

    pub fn a(&self) -> i64 {
        self.a
    }

    pub fn b(&self) -> i64 {
        self.b
    }

    pub fn c(&self) -> i64 {
        self.c
    }

    /// `w * height(x/w, y/w)`, exact for the ranges used in this crate.
    #[inline]
    pub(crate) fn hom(&self, x: i128, y: i128, w: i128) -> i128 {
        self.a as i128 * x + self.b as i128 * y + self.c as i128 * w
    }

    /// Height times the line's denominator.
    #[inline]
    pub fn scaled_height(&self, line: &VerticalLine) -> i128 {
        self.hom(line.xn as i128, line.yn as i128, line.den as i128)
    }
}

/// A line parallel to the z-axis through `(xn/den, yn/den)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VerticalLine {
    xn: i64,
    yn: i64,
    den: i64,
}

impl VerticalLine {
    /// Integer line; |x|, |y| < 2^31.
    pub fn new(x: i64, y: i64) -> Result<Self> {
        Self::rational(x, y, 1)
    }

    /// Line through `(xn/den, yn/den)` with `0 < den < 2^31` and |x|, |y| < 2^31.
    pub fn rational(xn: i64, yn: i64, den: i64) -> Result<Self> {
        if den <= 0 || den >= COEFF_LIMIT {
            return Err(Error::BadDenominator);
        }
        let lim = COEFF_LIMIT as i128 * den as i128;
        if (xn as i128).abs() >= lim || (yn as i128).abs() >= lim {
            return Err(Error::OutsideDomain);
        }
        Ok(VerticalLine { xn, yn, den })
    }

    pub fn x(&self) -> Ratio<i64> {
        Ratio::new(self.xn, self.den)
    }

    pub fn y(&self) -> Ratio<i64> {
        Ratio::new(self.yn, self.den)
    }

    pub fn numerators(&self) -> (i64, i64) {
        (self.xn, self.yn)
    }

    pub fn den(&self) -> i64 {
        self.den
    }
}

/// A point `(xn/den, yn/den, zn/den)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Point3 {
    line: VerticalLine,
    zn: i128,
}

impl Point3 {
    pub fn new(x: i64, y: i64, z: i64) -> Result<Self> {
        Ok(Point3 { line: VerticalLine::new(x, y)?, zn: z as i128 })
    }

    pub fn rational(xn: i64, yn: i64, zn: i128, den: i64) -> Result<Self> {
        Ok(Point3 { line: VerticalLine::rational(xn, yn, den)?, zn })
    }

    pub fn line(&self) -> VerticalLine {
        self.line
    }

    /// z times the shared denominator.
    pub fn scaled_z(&self) -> i128 {
        self.zn
    }

    /// True if `plane` passes strictly below this point.
    #[inline]
    pub fn is_above(&self, plane: &Plane) -> bool {
        plane.scaled_height(&self.line) < self.zn
    }
}

/// Exact height of `plane` over `line`.
pub fn eval_plane(plane: &Plane, line: &VerticalLine) -> Ratio<i128> {
    Ratio::new(plane.scaled_height(line), line.den as i128)
}

/// Orders planes by height at `line`, then by id.
#[inline]
pub fn cmp_at(line: &VerticalLine, p: &Plane, q: &Plane) -> Ordering {
    p.scaled_height(line).cmp(&q.scaled_height(line)).then(p.id.cmp(&q.id))
}

/// The lower of two planes at `line`; equal heights go to the smaller id.
pub fn lower_at<'a>(line: &VerticalLine, p1: &'a Plane, p2: &'a Plane) -> &'a Plane {
    if cmp_at(line, p1, p2) == Ordering::Greater {
        p2
    } else {
        p1
    }
}

/// Number of planes strictly below `point`.
pub fn level_of<'a>(point: &Point3, planes: impl IntoIterator<Item = &'a Plane>) -> usize {
    planes.into_iter().filter(|h| point.is_above(h)).count()
}

/// A planar point with integer coordinates, |x|, |y| < 2^15.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlanarPoint {
    pub id: PlaneId,
    x: i64,
    y: i64,
}

impl PlanarPoint {
    pub fn new(id: PlaneId, x: i64, y: i64) -> Result<Self> {
        if x.abs() >= LIFT_LIMIT || y.abs() >= LIFT_LIMIT {
            return Err(Error::OutsideDomain);
        }
        Ok(PlanarPoint { id, x, y })
    }

    pub fn x(&self) -> i64 {
        self.x
    }

    pub fn y(&self) -> i64 {
        self.y
    }
}

/// The tangent plane of the paraboloid above `p`: `z = -2px x - 2py y + px^2 + py^2`.
///
/// At any `q` its height is `|q - p|^2 - |q|^2`, so the lowest lifted plane is the nearest point.
pub fn lift_point(p: &PlanarPoint) -> Plane {
    Plane { id: p.id, a: -2 * p.x, b: -2 * p.y, c: p.x * p.x + p.y * p.y }
}

/// A disk with center `(x, y)` and radius `r`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub id: u64,
    pub x: f64,
    pub y: f64,
    pub r: f64,
}

impl Disk {
    pub fn new(id: u64, x: f64, y: f64, r: f64) -> Result<Self> {
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::NonFinite);
        }
        if !r.is_finite() || r < 0.0 {
            return Err(Error::BadRadius);
        }
        Ok(Disk { id, x, y, r })
    }

    pub fn dist(&self, other: &Disk) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// True iff `|p - p'| - r_p - r_p' <= r`.
///
/// Inputs are treated as the exact binary rationals they hold; a float filter
/// settles clear cases and the rest are decided on big integers.
pub fn disk_edge(d1: &Disk, d2: &Disk, r: f64) -> Result<bool> {
    if d1.id == d2.id {
        return Err(Error::SelfLoop(d1.id));
    }
    Ok(disk_gap_within(d1, d2, r))
}

pub(crate) fn disk_gap_within(d1: &Disk, d2: &Disk, r: f64) -> bool {
    let d = d1.dist(d2);
    let reach = r + d1.r + d2.r;
    let scale = d.max(reach).max(1.0);
    let slack = 1e-12 * scale;
    if d <= reach - slack {
        return true;
    }
    if d > reach + slack {
        return false;
    }
    exact_gap_within(d1, d2, r)
}

fn exact_gap_within(d1: &Disk, d2: &Disk, r: f64) -> bool {
    // Every finite f64 is m * 2^e; bring all six values to the smallest exponent.
    let vals = [d1.x, d2.x, d1.y, d2.y, r, d1.r, d2.r];
    let parts: Vec<(BigInt, i32)> = vals
        .iter()
        .map(|v| {
            let (m, e, s) = v.integer_decode();
            (BigInt::from(m) * s, e as i32)
        })
        .collect();
    let emin = parts.iter().map(|p| p.1).min().unwrap_or(0);
    let ints: Vec<BigInt> = parts.into_iter().map(|(m, e)| m << ((e - emin) as usize)).collect();
    let dx = &ints[0] - &ints[1];
    let dy = &ints[2] - &ints[3];
    let reach = &ints[4] + &ints[5] + &ints[6];
    &dx * &dx + &dy * &dy <= &reach * &reach
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pl(id: u64, a: i64, b: i64, c: i64) -> Plane {
        Plane::new(id, a, b, c).unwrap()
    }

    fn line(x: i64, y: i64) -> VerticalLine {
        VerticalLine::new(x, y).unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(eval_plane(&pl(1, 0, 0, 5), &line(3, 4)), Ratio::from_integer(5));
        assert_eq!(eval_plane(&pl(1, 1, 1, 0), &line(1, 2)), Ratio::from_integer(3));
        assert_eq!(eval_plane(&pl(1, 2, -1, 1), &line(2, 3)), Ratio::from_integer(2));
        let half = VerticalLine::rational(1, 1, 2).unwrap();
        assert_eq!(eval_plane(&pl(1, 1, 1, 0), &half), Ratio::from_integer(1));
    }

    #[test]
    fn lower_at_examples() {
        let (z1, z2) = (pl(1, 0, 0, 1), pl(2, 0, 0, 2));
        assert_eq!(lower_at(&line(0, 0), &z1, &z2).id, 1);
        let (zx, zmx) = (pl(1, 1, 0, 0), pl(2, -1, 0, 0));
        assert_eq!(lower_at(&line(0, 0), &zx, &zmx).id, 1);
        assert_eq!(lower_at(&line(0, 0), &zmx, &zx).id, 1);
        assert_eq!(lower_at(&line(2, 0), &zx, &zmx).id, 2);
    }

    #[test]
    fn level_examples() {
        let h = [pl(1, 0, 0, 1), pl(2, 0, 0, 2)];
        assert_eq!(level_of(&Point3::new(0, 0, 0).unwrap(), &h), 0);
        assert_eq!(level_of(&Point3::new(0, 0, 3).unwrap(), &h), 2);
        assert_eq!(level_of(&Point3::new(0, 0, 2).unwrap(), &h), 1);
    }

    #[test]
    fn lift_examples() {
        let o = lift_point(&PlanarPoint::new(7, 0, 0).unwrap());
        assert_eq!((o.id, o.a(), o.b(), o.c()), (7, 0, 0, 0));
        let p = lift_point(&PlanarPoint::new(1, 1, 2).unwrap());
        assert_eq!((p.a(), p.b(), p.c()), (-2, -4, 5));
        let near = lift_point(&PlanarPoint::new(1, 1, 0).unwrap());
        let far = lift_point(&PlanarPoint::new(2, 3, 0).unwrap());
        assert_eq!(lower_at(&line(0, 0), &far, &near).id, 1);
    }

    #[test]
    fn limits() {
        assert!(Plane::new(1, COEFF_LIMIT, 0, 0).is_err());
        assert!(Plane::new(1, -(COEFF_LIMIT - 1), 0, 0).is_ok());
        assert!(VerticalLine::new(COEFF_LIMIT, 0).is_err());
        assert!(VerticalLine::rational(1, 1, 0).is_err());
        assert!(PlanarPoint::new(1, LIFT_LIMIT, 0).is_err());
        let corner = PlanarPoint::new(1, -(LIFT_LIMIT - 1), LIFT_LIMIT - 1).unwrap();
        let l = lift_point(&corner);
        assert!(Plane::new(1, l.a(), l.b(), l.c()).is_ok());
    }

    #[test]
    fn disk_edge_examples() {
        let d = |id, x, y, r| Disk::new(id, x, y, r).unwrap();
        assert!(disk_edge(&d(1, 0.0, 0.0, 1.0), &d(2, 4.0, 0.0, 1.0), 2.0).unwrap());
        assert!(!disk_edge(&d(1, 0.0, 0.0, 0.0), &d(2, 10.0, 0.0, 0.0), 5.0).unwrap());
        assert!(disk_edge(&d(1, 0.0, 0.0, 1.0), &d(2, 3.0, 4.0, 2.0), 2.0).unwrap());
        assert_eq!(disk_edge(&d(1, 0.0, 0.0, 1.0), &d(1, 3.0, 4.0, 2.0), 2.0), Err(Error::SelfLoop(1)));
        assert!(Disk::new(1, 0.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn disk_edge_exact_boundary() {
        // 0.1 + 0.2 != 0.3 in binary; the exact rule must see the true values.
        let a = Disk::new(1, 0.0, 0.0, 0.1).unwrap();
        let b = Disk::new(2, 0.5, 0.0, 0.2).unwrap();
        let exact = exact_gap_within(&a, &b, 0.2);
        assert_eq!(disk_gap_within(&a, &b, 0.2), exact);
        // Tangent disks at distance 1 with radii summing to 1: an edge even with r = 0.
        let c = Disk::new(3, 1.0, 0.0, 0.5).unwrap();
        let e = Disk::new(4, 0.0, 0.0, 0.5).unwrap();
        assert!(disk_edge(&c, &e, 0.0).unwrap());
        let f = Disk::new(5, 0.0, 0.0, 0.5 - 1e-15).unwrap();
        assert!(!disk_edge(&c, &f, 0.0).unwrap());
    }
}
