//! Inner polygon approximation of the apparent-power disc `p^2 + q^2 <= s^2`.
//!
//! Half-plane `k` is `cos(2 pi k / n) p + sin(2 pi k / n) q <= s cos(pi / n)`;
//! the polygon's vertices lie on the circle, so every feasible point is
//! inside the disc.

use std::f64::consts::PI;

/// Unit normals of the `n` half-planes.
pub fn normals(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|k| {
            let a = 2.0 * PI * k as f64 / n as f64;
            (a.cos(), a.sin())
        })
        .collect()
}

/// Right-hand side shared by all half-planes for limit `s`.
pub fn rhs(s: f64, n: usize) -> f64 {
    s * (PI / n as f64).cos()
}

pub fn contains(p: f64, q: f64, s: f64, n: usize) -> bool {
    let r = rhs(s, n);
    normals(n).into_iter().all(|(c, sn)| c * p + sn * q <= r)
}
