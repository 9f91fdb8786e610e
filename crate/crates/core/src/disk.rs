//! Non-radial checks in the Poincaré disk (N = 2): composition with Möbius
//! translations, a fourth-order Δ_g at arbitrary points and polar quadrature.

use serde::{Deserialize, Serialize};

use crate::ball_model::{hyperbolic_translate, DimensionParams};
use crate::error::{Error, Result};
use crate::quadrature::{gl20, integrate_panels};

pub type Point = [f64; 2];

/// f ∘ τ_b on the disk.
#[derive(Debug, Clone, Copy)]
pub struct Pushforward<F> {
    f: F,
    b: Point,
}

impl<F: Fn(Point) -> f64> Pushforward<F> {
    pub fn b(&self) -> Point {
        self.b
    }

    pub fn eval(&self, x: Point) -> Result<f64> {
        let y = hyperbolic_translate(&self.b, &x)?;
        Ok((self.f)([y[0], y[1]]))
    }
}

/// Composition with the translation τ_b; only the disk is supported.
pub fn pushforward_2d<F: Fn(Point) -> f64>(f: F, b: Point, dims: &DimensionParams) -> Result<Pushforward<F>> {
    if dims.n() != 2 {
        return Err(Error::UnsupportedDimension(format!("composition is implemented for N = 2, got N = {}", dims.n())));
    }
    if !(b[0] * b[0] + b[1] * b[1] < 1.0) {
        return Err(Error::Domain(format!("b = {b:?} not inside the unit disk")));
    }
    Ok(Pushforward { f, b })
}

/// Δ_g f(x) = ((1 − |x|²)/2)² Δf(x) with fourth-order central differences of step h.
pub fn disk_laplacian(f: impl Fn(Point) -> Result<f64>, x: Point, h: f64) -> Result<f64> {
    let r2 = x[0] * x[0] + x[1] * x[1];
    let reach = r2.sqrt() + 2.0 * h;
    if !(reach < 1.0) {
        return Err(Error::Domain(format!("stencil at {x:?} with step {h} leaves the disk")));
    }
    let second = |dir: Point| -> Result<f64> {
        let at = |t: f64| f([x[0] + t * dir[0], x[1] + t * dir[1]]);
        Ok((-at(2.0 * h)? + 16.0 * at(h)? - 30.0 * at(0.0)? + 16.0 * at(-h)? - at(-2.0 * h)?) / (12.0 * h * h))
    };
    let conf = 0.5 * (1.0 - r2);
    Ok(conf * conf * (second([1.0, 0.0])? + second([0.0, 1.0])?))
}

/// ∫_{|x|<R} f dv_g in polar coordinates: Gauss–Legendre panels in ρ, trapezoid in θ.
pub fn disk_integral(f: impl Fn(Point) -> Result<f64>, radius: f64, panels: usize, angles: usize) -> Result<f64> {
    if !(radius > 0.0 && radius < 1.0) {
        return Err(Error::Domain(format!("integration radius {radius} must lie in (0, 1)")));
    }
    let mut err = None;
    let value = integrate_panels(&[0.0, radius], panels, gl20(), |rho| {
        let mut ring = 0.0;
        for j in 0..angles {
            let t = std::f64::consts::TAU * j as f64 / angles as f64;
            match f([rho * t.cos(), rho * t.sin()]) {
                Ok(v) => ring += v,
                Err(e) => {
                    err.get_or_insert(e);
                }
            }
        }
        let conf = 2.0 / (1.0 - rho * rho);
        ring * std::f64::consts::TAU / angles as f64 * rho * conf * conf
    });
    match err {
        Some(e) => Err(e),
        None => Ok(value),
    }
}

/// Off-centre C^∞ bump e^{1 − 1/(1 − |x − c|²/ρ²)} used for the isometry checks.
pub fn disk_test_bump(x: Point) -> f64 {
    const C: Point = [0.1, -0.05];
    const RHO: f64 = 0.25;
    let t = ((x[0] - C[0]).powi(2) + (x[1] - C[1]).powi(2)) / (RHO * RHO);
    if t < 1.0 {
        (1.0 - 1.0 / (1.0 - t)).exp()
    } else {
        0.0
    }
}

/// Square of [`disk_test_bump`], the integrand of the L² check.
fn bump_sq(x: Point) -> f64 {
    disk_test_bump(x).powi(2)
}

/// Mismatches of one translation at one resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsometryRecord {
    pub b: Point,
    pub resolution: usize,
    pub integral: f64,
    pub integral_translated: f64,
    /// |∫|u∘τ_b|² − ∫|u|²| / ∫|u|²
    pub integral_mismatch: f64,
    /// max over probe points of |Δ_g(u∘τ_b)(x) − (Δ_g u)(τ_b x)|
    pub laplacian_mismatch: f64,
    /// max over probe points of |(Δ_g u)(τ_b x)|
    pub laplacian_scale: f64,
}

/// Integral and pointwise Laplacian invariance of the test bump under τ_b.
///
/// Quadrature uses `resolution` radial panels on |x| < 0.75 and 16·resolution
/// angles; the difference step is 0.16/resolution.
pub fn isometry_check(b: Point, resolution: usize) -> Result<IsometryRecord> {
    let dims = DimensionParams::new(1)?;
    if !(b[0].hypot(b[1]) <= 0.5) {
        let norm = b[0].hypot(b[1]);
        return Err(Error::Domain(format!("|b| = {norm} exceeds 0.5; the translate may leave the quadrature disk")));
    }
    let resolution = resolution.max(1);
    let (radius, angles, h) = (0.75, 16 * resolution, 0.16 / resolution as f64);
    let integral = disk_integral(|x| Ok(bump_sq(x)), radius, resolution, angles)?;
    let moved = pushforward_2d(bump_sq, b, &dims)?;
    let integral_translated = disk_integral(|x| moved.eval(x), radius, resolution, angles)?;
    let u_b = pushforward_2d(disk_test_bump, b, &dims)?;
    let minus_b = [-b[0], -b[1]];
    let mut laplacian_mismatch: f64 = 0.0;
    let mut laplacian_scale: f64 = 0.0;
    for j in 0..12 {
        // probe points pulled back from a ring inside the bump's support
        let t = std::f64::consts::TAU * j as f64 / 12.0;
        let y = [0.1 + 0.15 * t.cos(), -0.05 + 0.15 * t.sin()];
        let xv = hyperbolic_translate(&minus_b, &y)?;
        let x = [xv[0], xv[1]];
        let lhs = disk_laplacian(|p| u_b.eval(p), x, h)?;
        let tx = hyperbolic_translate(&b, &x)?;
        let rhs = disk_laplacian(|p| Ok(disk_test_bump(p)), [tx[0], tx[1]], h)?;
        laplacian_mismatch = laplacian_mismatch.max((lhs - rhs).abs());
        laplacian_scale = laplacian_scale.max(rhs.abs());
    }
    Ok(IsometryRecord {
        b,
        resolution,
        integral,
        integral_translated,
        integral_mismatch: (integral_translated - integral).abs() / integral,
        laplacian_mismatch,
        laplacian_scale,
    })
}
