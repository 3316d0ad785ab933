//! Branch-free sine and cosine for phases in (roughly) [0, 2 pi), written so
//! that loops over particles vectorize.

use std::f64::consts::PI;

// Taylor coefficients of sin and cos, accurate to ~1e-16 on [-pi/2, pi/2].
const S: [f64; 10] = [
    1.0,
    -1.0 / 6.0,
    1.0 / 120.0,
    -1.0 / 5040.0,
    1.0 / 362880.0,
    -1.0 / 39916800.0,
    1.0 / 6227020800.0,
    -1.0 / 1307674368000.0,
    1.0 / 355687428096000.0,
    -1.0 / 121645100408832000.0,
];

const C: [f64; 11] = [
    1.0,
    -1.0 / 2.0,
    1.0 / 24.0,
    -1.0 / 720.0,
    1.0 / 40320.0,
    -1.0 / 3628800.0,
    1.0 / 479001600.0,
    -1.0 / 87178291200.0,
    1.0 / 20922789888000.0,
    -1.0 / 6402373705728000.0,
    1.0 / 2432902008176640000.0,
];

/// `(sin u, cos u)` for `u` in [0, 2 pi]; absolute error below 1e-15.
#[inline(always)]
pub(crate) fn sin_cos(u: f64) -> (f64, f64) {
    // half angle of u - pi lies in [-pi, pi] / 2
    let y = 0.5 * (u - PI);
    let y2 = y * y;
    let mut ps = S[9];
    for k in (0..9).rev() {
        ps = ps * y2 + S[k];
    }
    let s = ps * y;
    let mut pc = C[10];
    for k in (0..10).rev() {
        pc = pc * y2 + C[k];
    }
    let c = pc;
    // sin u = -sin 2y, cos u = -cos 2y
    (-2.0 * s * c, 2.0 * s * s - 1.0)
}
