//! Wide-integer helpers: i128 fast paths with a big-integer fallback on overflow.

use std::cmp::Ordering;

use num_bigint::BigInt;

/// Sign of `a*b - c*d`.
pub fn cmp_products(a: i128, b: i128, c: i128, d: i128) -> Ordering {
    match (a.checked_mul(b), c.checked_mul(d)) {
        (Some(x), Some(y)) => x.cmp(&y),
        _ => (BigInt::from(a) * BigInt::from(b)).cmp(&(BigInt::from(c) * BigInt::from(d))),
    }
}

/// Sign of the 2x2 determinant `| ax ay ; bx by |`.
pub fn det_sign(ax: i128, ay: i128, bx: i128, by: i128) -> Ordering {
    cmp_products(ax, by, ay, bx)
}

/// Compares `an/ad` with `bn/bd` for positive denominators.
pub fn cmp_fractions(an: i128, ad: i128, bn: i128, bd: i128) -> Ordering {
    debug_assert!(ad > 0 && bd > 0);
    cmp_products(an, bd, bn, ad)
}
