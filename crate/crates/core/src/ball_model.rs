//! Geometry of the Poincaré ball: metric factor, radius conversions, volume
//! densities, the graded radial grid, radial functions and hyperbolic translations.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::banded::solve_dense;
use crate::error::{Error, Result};
use crate::special::gamma_half;

/// Dimension data for the critical case N = 2k.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionParams {
    k: u32,
    n: u32,
    omega_nm1: f64,
}

impl DimensionParams {
    pub fn new(k: u32) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        Self::with_dimension(k, 2 * k)
    }

    /// Explicit (k, N) pair; only N = 2k is accepted.
    pub fn with_dimension(k: u32, n: u32) -> Result<Self> {
        if k == 0 || n != 2 * k {
            return Err(Error::UnsupportedDimension(format!("N = {n} with k = {k}; require N = 2k, k >= 1")));
        }
        let omega_nm1 = 2.0 * PI.powf(n as f64 / 2.0) / gamma_half(n);
        Ok(Self { k, n, omega_nm1 })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// Dimension N.
    pub fn n(&self) -> u32 {
        self.n
    }

    /// Measure of the unit sphere S^{N-1}.
    pub fn omega_nm1(&self) -> f64 {
        self.omega_nm1
    }
}

/// Conformal factor 2/(1 − s²) of the ball metric.
pub fn metric_factor(s: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&s) {
        return Err(Error::Domain(format!("Euclidean radius {s} outside [0, 1)")));
    }
    Ok(2.0 / (1.0 - s * s))
}

/// Euclidean radius stored together with its distance to the boundary sphere,
/// so that radii extremely close to 1 keep full relative precision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EuclideanRadius {
    pub s: f64,
    /// 1 − s, computed without cancellation.
    pub gap: f64,
}

impl EuclideanRadius {
    pub fn from_s(s: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&s) {
            return Err(Error::Domain(format!("Euclidean radius {s} outside [0, 1)")));
        }
        Ok(Self { s, gap: 1.0 - s })
    }

    /// 1 − s².
    pub fn one_minus_s2(&self) -> f64 {
        self.gap * (1.0 + self.s)
    }
}

/// s = tanh(r/2).
pub fn geodesic_to_euclidean(r: f64) -> Result<EuclideanRadius> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!("geodesic radius {r} must be finite and nonnegative")));
    }
    Ok(EuclideanRadius { s: (0.5 * r).tanh(), gap: 2.0 / (r.exp() + 1.0) })
}

/// r = log((1 + s)/(1 − s)).
pub fn euclidean_to_geodesic(e: EuclideanRadius) -> f64 {
    if e.s < 0.5 {
        2.0 * e.s.atanh()
    } else {
        ((1.0 + e.s) / e.gap).ln()
    }
}

/// Radial density ω_{N−1} sinh^{N−1}(r) of dv_g in the geodesic radius.
pub fn volume_weight(r: f64, dims: &DimensionParams) -> f64 {
    dims.omega_nm1 * r.sinh().powi(dims.n as i32 - 1)
}

/// The same density from the Euclidean form ω_{N−1} s^{N−1} (2/(1−s²))^N ds/dr.
pub fn volume_weight_euclidean(e: EuclideanRadius, dims: &DimensionParams) -> f64 {
    let q = e.one_minus_s2();
    let conformal = (2.0 / q).powi(dims.n as i32);
    dims.omega_nm1 * e.s.powi(dims.n as i32 - 1) * conformal * (0.5 * q)
}

/// Which measure a set of radial weights integrates against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Measure {
    /// dv_g on H^N
    Hyperbolic,
    /// dx on B^N
    Euclidean,
}

/// B_n(1/2) for n ≤ 8.
fn bernoulli_half(n: usize) -> f64 {
    match n {
        0 => 1.0,
        2 => -1.0 / 12.0,
        4 => 7.0 / 240.0,
        6 => -31.0 / 1344.0,
        8 => 127.0 / 15360.0,
        n if n % 2 == 1 => 0.0,
        _ => unreachable!("only B_n(1/2) for n <= 8 is tabulated"),
    }
}

/// Relative corrections to midpoint weights of the K cells next to an endpoint,
/// making the rule exact on the listed endpoint monomial powers.
fn endpoint_corrections(powers: &[usize]) -> Vec<f64> {
    let k = powers.len();
    let a: Vec<Vec<f64>> = powers.iter().map(|&p| (1..=k).map(|i| (i as f64 - 0.5).powi(p as i32)).collect()).collect();
    let b: Vec<f64> = powers.iter().map(|&p| bernoulli_half(p + 1) / (p + 1) as f64).collect();
    solve_dense(&a, &b).expect("endpoint moment system is nonsingular")
}

/// Mesh in the geodesic radius r ∈ (0, R_max], cell-centred in a computational
/// variable ξ ∈ (0, 1) with r(ξ) = R_max sinh(gξ)/sinh(g) (uniform for g = 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    n_nodes: usize,
    r_max: f64,
    grading: f64,
    h: f64,
    xi: Vec<f64>,
    r: Vec<f64>,
    r_xi: Vec<f64>,
    s: Vec<f64>,
    gap: Vec<f64>,
    r_half: Vec<f64>,
    r_xi_half: Vec<f64>,
    quad_weights: Vec<f64>,
    origin_corr: Vec<f64>,
    origin_corr_mixed: Vec<f64>,
    far_corr: Vec<f64>,
}

impl RadialGrid {
    pub fn new(n_nodes: usize, r_max: f64, grading: f64) -> Result<Self> {
        if n_nodes < 16 {
            return Err(Error::InvalidParameter(format!("n_nodes = {n_nodes}; need at least 16")));
        }
        if !(r_max > 0.0 && r_max.is_finite()) || r_max > 200.0 {
            return Err(Error::InvalidParameter(format!("R_max = {r_max} must lie in (0, 200]")));
        }
        if !(0.0..=20.0).contains(&grading) {
            return Err(Error::InvalidParameter(format!("grading = {grading} must lie in [0, 20]")));
        }
        let h = 1.0 / n_nodes as f64;
        let map = |x: f64| -> (f64, f64) {
            if grading == 0.0 {
                (r_max * x, r_max)
            } else {
                let sg = grading.sinh();
                (r_max * (grading * x).sinh() / sg, r_max * grading * (grading * x).cosh() / sg)
            }
        };
        let xi: Vec<f64> = (1..=n_nodes).map(|i| (i as f64 - 0.5) * h).collect();
        let (r, r_xi): (Vec<f64>, Vec<f64>) = xi.iter().map(|&x| map(x)).unzip();
        let (r_half, r_xi_half): (Vec<f64>, Vec<f64>) = (0..=n_nodes).map(|j| map(j as f64 * h)).unzip();
        let conv: Vec<EuclideanRadius> = r.iter().map(|&ri| geodesic_to_euclidean(ri)).collect::<Result<_>>()?;
        let origin_corr = endpoint_corrections(&[1, 3, 5]);
        let origin_corr_mixed = endpoint_corrections(&[1, 2, 3, 4, 5]);
        let far_corr = endpoint_corrections(&[0, 1, 2, 3, 4, 5]);
        let mut quad_weights: Vec<f64> = r_xi.iter().map(|&d| h * d).collect();
        for (i, c) in far_corr.iter().enumerate() {
            quad_weights[n_nodes - 1 - i] *= 1.0 + c;
        }
        Ok(Self {
            n_nodes,
            r_max,
            grading,
            h,
            xi,
            r,
            r_xi,
            s: conv.iter().map(|e| e.s).collect(),
            gap: conv.iter().map(|e| e.gap).collect(),
            r_half,
            r_xi_half,
            quad_weights,
            origin_corr,
            origin_corr_mixed,
            far_corr,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn grading(&self) -> f64 {
        self.grading
    }

    /// Spacing of the computational variable.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    pub fn geodesic_nodes(&self) -> &[f64] {
        &self.r
    }

    pub fn euclidean_nodes(&self) -> &[f64] {
        &self.s
    }

    /// 1 − s_i at every node.
    pub fn euclidean_gaps(&self) -> &[f64] {
        &self.gap
    }

    pub fn euclidean_radius(&self, i: usize) -> EuclideanRadius {
        EuclideanRadius { s: self.s[i], gap: self.gap[i] }
    }

    /// dr/dξ at the nodes.
    pub fn jacobian(&self) -> &[f64] {
        &self.r_xi
    }

    /// Geodesic radii of the cell faces ξ = jh, j = 0..n.
    pub fn face_radii(&self) -> &[f64] {
        &self.r_half
    }

    /// dr/dξ at the cell faces.
    pub fn face_jacobian(&self) -> &[f64] {
        &self.r_xi_half
    }

    /// Positive weights for ∫₀^{R_max} f(r) dr.
    pub fn quad_weights(&self) -> &[f64] {
        &self.quad_weights
    }

    /// Geodesic width of the first cell, [0, r(h)].
    pub fn origin_spacing(&self) -> f64 {
        self.r_half[1]
    }

    /// Radial density of the measure (per unit r) at geodesic radius index `i`.
    fn density(&self, i: usize, dims: &DimensionParams, measure: Measure) -> f64 {
        match measure {
            Measure::Hyperbolic => volume_weight(self.r[i], dims),
            Measure::Euclidean => {
                let e = self.euclidean_radius(i);
                dims.omega_nm1 * e.s.powi(dims.n as i32 - 1) * 0.5 * e.one_minus_s2()
            }
        }
    }

    /// Density of the measure at the cell faces, per unit r.
    pub fn face_density(&self, dims: &DimensionParams, measure: Measure) -> Vec<f64> {
        self.r_half
            .iter()
            .map(|&r| match measure {
                Measure::Hyperbolic => volume_weight(r, dims),
                Measure::Euclidean => {
                    let e = geodesic_to_euclidean(r).expect("face radii are valid");
                    dims.omega_nm1 * e.s.powi(dims.n as i32 - 1) * 0.5 * e.one_minus_s2()
                }
            })
            .collect()
    }

    /// Diagonal mass weights of the operator inner product: midpoint weights with
    /// moment corrections at the axis (the integrand is odd in ξ there).
    pub fn mass_weights(&self, dims: &DimensionParams, measure: Measure) -> Vec<f64> {
        let mut w: Vec<f64> =
            (0..self.n_nodes).map(|i| self.h * self.r_xi[i] * self.density(i, dims, measure)).collect();
        for (i, c) in self.origin_corr.iter().enumerate() {
            w[i] *= 1.0 + c;
        }
        w
    }

    /// Integration weights for integrands vanishing at the axis with either parity
    /// there (such as u²/(1 − s)^{2k}) and not necessarily at R_max.
    pub fn integration_weights(&self, dims: &DimensionParams, measure: Measure) -> Vec<f64> {
        let mut w: Vec<f64> =
            (0..self.n_nodes).map(|i| self.h * self.r_xi[i] * self.density(i, dims, measure)).collect();
        for (i, c) in self.origin_corr_mixed.iter().enumerate() {
            w[i] *= 1.0 + c;
        }
        for (i, c) in self.far_corr.iter().enumerate() {
            w[self.n_nodes - 1 - i] *= 1.0 + c;
        }
        w
    }
}

/// Radial profile sampled on a grid. Values are even in r, so the axis needs no node.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialFunction {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
    origin_value: f64,
    support: Option<f64>,
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(node) => Err(Error::NonFinite { node, value: values[node] }),
        None => Ok(()),
    }
}

impl RadialFunction {
    /// Samples `f(r)` at the nodes; the origin value is f(0).
    pub fn from_fn(grid: &Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values: Vec<f64> = grid.r.iter().map(|&r| f(r)).collect();
        check_finite(&values)?;
        let origin_value = f(0.0);
        check_finite(&[origin_value])?;
        Ok(Self { grid: Arc::clone(grid), values, origin_value, support: None })
    }

    /// Samples `f(s)` in the Euclidean radius s = tanh(r/2).
    pub fn from_euclidean_fn(grid: &Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values: Vec<f64> = grid.s.iter().map(|&s| f(s)).collect();
        check_finite(&values)?;
        let origin_value = f(0.0);
        check_finite(&[origin_value])?;
        Ok(Self { grid: Arc::clone(grid), values, origin_value, support: None })
    }

    /// Wraps node values; the origin value is extrapolated as an even function of ξ.
    pub fn from_values(grid: &Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_nodes {
            return Err(Error::InvalidParameter(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.n_nodes
            )));
        }
        check_finite(&values)?;
        // even Lagrange extrapolation in ξ² through the first three nodes
        let q: [f64; 3] = [0.25, 2.25, 6.25];
        let mut origin_value = 0.0;
        for i in 0..3 {
            let mut l = 1.0;
            for j in 0..3 {
                if j != i {
                    l *= q[j] / (q[j] - q[i]);
                }
            }
            origin_value += l * values[i];
        }
        Ok(Self { grid: Arc::clone(grid), values, origin_value, support: None })
    }

    pub fn zeros(grid: &Arc<RadialGrid>) -> Self {
        Self { grid: Arc::clone(grid), values: vec![0.0; grid.n_nodes], origin_value: 0.0, support: Some(0.0) }
    }

    /// Marks the profile as vanishing for geodesic radius beyond `radius`.
    pub fn with_support(mut self, radius: f64) -> Self {
        self.support = Some(radius);
        self
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn origin_value(&self) -> f64 {
        self.origin_value
    }

    pub fn compactly_supported(&self) -> bool {
        self.support.is_some()
    }

    pub fn support_radius(&self) -> Option<f64> {
        self.support
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|v| c * v).collect(),
            origin_value: c * self.origin_value,
            support: self.support,
        }
    }

    /// Pointwise `self + c·other` on the same grid.
    pub fn axpy(&self, c: f64, other: &Self) -> Self {
        assert!(Arc::ptr_eq(&self.grid, &other.grid) || self.grid == other.grid, "grids differ");
        let support = match (self.support, other.support) {
            (Some(a), Some(b)) => Some(a.max(b)),
            _ => None,
        };
        Self {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + c * b).collect(),
            origin_value: self.origin_value + c * other.origin_value,
            support,
        }
    }

    /// True when the outer tenth of the radial range carries more than 1e−12 of ∫|f| dv_g,
    /// so truncation at R_max is not negligible.
    pub fn truncation_flag(&self, dims: &DimensionParams) -> bool {
        if let Some(rs) = self.support {
            return rs >= self.grid.r_max;
        }
        let w = self.grid.mass_weights(dims, Measure::Hyperbolic);
        let cut = 0.9 * self.grid.r_max;
        let (mut total, mut tail) = (0.0, 0.0);
        for ((v, wi), &r) in self.values.iter().zip(&w).zip(&self.grid.r) {
            let c = wi * v.abs();
            total += c;
            if r >= cut {
                tail += c;
            }
        }
        total > 0.0 && tail > 1e-12 * total
    }
}

/// ∫_{H^N} f dv_g.
pub fn integrate_radial(f: &RadialFunction, dims: &DimensionParams) -> Result<f64> {
    integrate_with(f, dims, Measure::Hyperbolic)
}

/// ∫_{B^N} f dx over the Euclidean ball covered by the grid.
pub fn integrate_radial_euclidean(f: &RadialFunction, dims: &DimensionParams) -> Result<f64> {
    integrate_with(f, dims, Measure::Euclidean)
}

fn integrate_with(f: &RadialFunction, dims: &DimensionParams, measure: Measure) -> Result<f64> {
    check_finite(&f.values)?;
    let w = f.grid.integration_weights(dims, measure);
    Ok(w.iter().zip(&f.values).map(|(a, b)| a * b).sum())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Möbius translation τ_b(x) of the unit ball, with τ_b(0) = b.
pub fn hyperbolic_translate(b: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    if b.len() != x.len() {
        return Err(Error::InvalidParameter("points of different dimension".into()));
    }
    let (bb, xx, xb) = (dot(b, b), dot(x, x), dot(x, b));
    if !(bb < 1.0) {
        return Err(Error::Domain(format!("|b|² = {bb} not inside the unit ball")));
    }
    if !(xx < 1.0) {
        return Err(Error::Domain(format!("|x|² = {xx} not inside the unit ball")));
    }
    let den = bb * xx + 2.0 * xb + 1.0;
    let cb = xx + 2.0 * xb + 1.0;
    Ok(x.iter().zip(b).map(|(&xi, &bi)| ((1.0 - bb) * xi + cb * bi) / den).collect())
}
