//! Gamma function at integer and half-integer arguments, and sphere measures.
//!
//! Every Gamma value needed for even dimensions has argument `n/2`, so it is
//! computed exactly from factorial recursions instead of a Lanczos fit.

use std::f64::consts::PI;

/// Γ(n/2) for a positive integer `n`.
pub fn gamma_half(n: u32) -> f64 {
    assert!(n > 0, "gamma_half requires a positive argument");
    if n.is_multiple_of(2) {
        (1..n / 2).fold(1.0, |acc, j| acc * j as f64)
    } else {
        // Γ(1/2) = √π and Γ(x + 1) = xΓ(x)
        let mut g = PI.sqrt();
        let mut x = 0.5;
        while x < n as f64 / 2.0 - 0.25 {
            g *= x;
            x += 1.0;
        }
        g
    }
}

/// Surface measure of the unit sphere S^d ⊂ ℝ^{d+1}: 2π^{(d+1)/2}/Γ((d+1)/2).
pub fn sphere_measure(d: u32) -> f64 {
    2.0 * PI.powf((d + 1) as f64 / 2.0) / gamma_half(d + 1)
}

/// Lebesgue measure of the unit ball in ℝ^d: π^{d/2}/Γ(d/2 + 1).
pub fn ball_measure(d: u32) -> f64 {
    PI.powf(d as f64 / 2.0) / gamma_half(d + 2)
}

/// n! as a float.
pub fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, j| acc * j as f64)
}
