//! Sharp constants and numerical margins for the inequalities around the
//! critical Adams inequality: Poincaré chain, boundary Hardy–Rellich bound,
//! the Adams functional itself and its linearized form.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::ball_model::{DimensionParams, Measure, RadialFunction};
use crate::error::{Error, Result};
use crate::operators::{gjms_energy, RadialCalculus};
use crate::special::{ball_measure, factorial, gamma_half, sphere_measure};

/// Exponent guard for e^{x}: beyond this the value is reported as +∞.
pub const EXP_LIMIT: f64 = 700.0;

/// Critical exponent β₀(k, N) with p = N/k, p′ = p/(p − 1).
pub fn beta0(k: u32, n: u32) -> Result<f64> {
    if k == 0 || k >= n {
        return Err(Error::Domain(format!("beta0 needs 1 <= k < N, got k = {k}, N = {n}")));
    }
    let p = n as f64 / k as f64;
    let p_prime = p / (p - 1.0);
    let omega = sphere_measure(n - 1);
    let ratio = if k % 2 == 1 { gamma_half(k + 1) / gamma_half(n - k + 1) } else { gamma_half(k) / gamma_half(n - k) };
    let base = PI.powf(n as f64 / 2.0) * 2f64.powi(k as i32) * ratio;
    Ok(n as f64 / omega * base.powf(p_prime))
}

/// Moser's constant α_N = N ω_{N−1}^{1/(N−1)}.
pub fn alpha_n(n: u32) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain(format!("alpha_N needs N >= 2, got {n}")));
    }
    Ok(n as f64 * sphere_measure(n - 1).powf(1.0 / (n as f64 - 1.0)))
}

/// M = (4π)^k (k − 1)!/2, the energy scale of the extremal family.
pub fn moser_mass(k: u32) -> f64 {
    (4.0 * PI).powi(k as i32) * factorial(k - 1) / 2.0
}

/// A(k) = ∏_{j=1}^{k}(2j − 1)² / 4^k.
pub fn owen_constant(k: u32) -> f64 {
    (1..=k).map(|j| ((2 * j - 1) as f64).powi(2) / 4.0).product()
}

/// Reading of ω_N in the sharp subcritical Sobolev constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum OmegaConvention {
    /// measure of the unit sphere S^N
    #[default]
    SphereN,
    /// volume of the unit ball B^N
    UnitBallN,
}

/// Λ_k = 2^{2k} ω_N^{−2k/N} / (N(N − 2k)∏_{j=1}^{k−1}(N² − (2j)²)) for N > 2k.
pub fn liu_constant(k: u32, n: u32, convention: OmegaConvention) -> Result<f64> {
    if k == 0 || n <= 2 * k {
        return Err(Error::Domain(format!("Liu constant needs N > 2k, got k = {k}, N = {n}")));
    }
    let omega = match convention {
        OmegaConvention::SphereN => sphere_measure(n),
        OmegaConvention::UnitBallN => ball_measure(n),
    };
    let nf = n as f64;
    let den: f64 = nf * (nf - 2.0 * k as f64) * (1..k).map(|j| nf * nf - (2.0 * j as f64).powi(2)).product::<f64>();
    Ok(4f64.powi(k as i32) * omega.powf(-2.0 * k as f64 / nf) / den)
}

/// Closed-form constants attached to (k, N).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpConstants {
    pub k: u32,
    pub n: u32,
    pub beta0: f64,
    pub alpha_n: f64,
    /// M = (4π)^k (k − 1)!/2
    pub m: f64,
    pub a_k: f64,
    /// only defined for N > 2k
    pub lambda_k: Option<f64>,
    /// ((N − 1)/2)²
    pub poincare_base: f64,
}

impl SharpConstants {
    pub fn new(k: u32, n: u32) -> Result<Self> {
        Ok(Self {
            k,
            n,
            beta0: beta0(k, n)?,
            alpha_n: alpha_n(n)?,
            m: moser_mass(k),
            a_k: owen_constant(k),
            lambda_k: (n > 2 * k).then(|| liu_constant(k, n, OmegaConvention::default())).transpose()?,
            poincare_base: ((n as f64 - 1.0) / 2.0).powi(2),
        })
    }
}

/// e^{x} − 1 with the overflow guard; `None` past [`EXP_LIMIT`].
pub fn guarded_expm1(x: f64) -> Option<f64> {
    (x <= EXP_LIMIT).then(|| x.exp_m1())
}

/// ∫(e^{βu²} − 1) dv_g; +∞ when some exponent exceeds [`EXP_LIMIT`].
pub fn adams_functional(u: &RadialFunction, beta: f64, dims: &DimensionParams) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::InvalidParameter(format!("beta = {beta} must be positive")));
    }
    if let Some(node) = u.values().iter().position(|v| v.is_nan()) {
        return Err(Error::NonFinite { node, value: f64::NAN });
    }
    let w = u.grid().integration_weights(dims, Measure::Hyperbolic);
    let mut total = 0.0;
    for (wi, v) in w.iter().zip(u.values()) {
        match guarded_expm1(beta * v * v) {
            Some(e) => total += wi * e,
            None => return Ok(f64::INFINITY),
        }
    }
    Ok(total)
}

/// ∫|∇_g^k u|² − ((N−1)/2)^{2(k−l)} ∫|∇_g^l u|².
pub fn check_poincare_chain(u: &RadialFunction, k: usize, l: usize, dims: &DimensionParams) -> Result<f64> {
    if l >= k {
        return Err(Error::InvalidParameter(format!("need l < k, got l = {l}, k = {k}")));
    }
    let terms = RadialCalculus::new(u.grid(), dims, Measure::Hyperbolic).power_forms(u.values(), k);
    let c = ((dims.n() as f64 - 1.0) / 2.0).powi(2 * (k - l) as i32);
    Ok(terms[k] - c * terms[l])
}

/// ∫|∇^k u|²dx − A(k)∫u²/(1 − |x|)^{2k} dx on the unit ball, with u compactly supported.
pub fn check_owen(u: &RadialFunction, k: usize, dims: &DimensionParams) -> Result<f64> {
    let n = u.grid().n_nodes();
    let guard = n - n / 20;
    if u.values()[guard..].iter().any(|v| *v != 0.0) {
        return Err(Error::Domain("profile reaches the ball boundary; the weighted integral may diverge".into()));
    }
    let calc = RadialCalculus::new(u.grid(), dims, Measure::Euclidean);
    let energy = calc.power_forms(u.values(), k)[k];
    let w = u.grid().integration_weights(dims, Measure::Euclidean);
    let gaps = u.grid().euclidean_gaps();
    let hardy: f64 = (0..n).map(|i| w[i] * u.values()[i].powi(2) / gaps[i].powi(2 * k as i32)).sum();
    Ok(energy - owen_constant(k as u32) * hardy)
}

/// Outcome of the two scalar inequalities used by the linearized bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarInequalityReport {
    pub points: usize,
    /// max over t of (e^t − 1)² − (e^{2t} − 2t − 1), relative to the right side
    pub worst_first: f64,
    /// max over t of (e^t − 1)² − |e^{2t} − 1|, relative to the right side
    pub worst_second: f64,
    pub equality_at_zero: bool,
    pub passed: bool,
}

/// Checks (e^t − 1)² ≤ e^{2t} − 2t − 1 and (e^t − 1)² ≤ |e^{2t} − 1| on a dense grid in [−50, 50]
/// plus fixed pseudo-random points.
pub fn scalar_inequality_suite() -> ScalarInequalityReport {
    let dense = 100_000usize;
    let mut ts: Vec<f64> = (0..=dense).map(|i| -50.0 + 100.0 * i as f64 / dense as f64).collect();
    // Weyl sequence of extra points
    let golden = 0.618_033_988_749_894_9_f64;
    ts.extend((1..=10_000).map(|i| -50.0 + 100.0 * (i as f64 * golden).fract()));
    let (mut worst_first, mut worst_second) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let tol = 4.0 * f64::EPSILON;
    for &t in &ts {
        let lhs = t.exp_m1().powi(2);
        let r1 = (2.0 * t).exp_m1() - 2.0 * t;
        let r2 = (2.0 * t).exp_m1().abs();
        let scale = lhs.abs().max(r1.abs()).max(f64::MIN_POSITIVE);
        worst_first = worst_first.max((lhs - r1) / scale);
        let scale2 = lhs.abs().max(r2).max(f64::MIN_POSITIVE);
        worst_second = worst_second.max((lhs - r2) / scale2);
    }
    let equality_at_zero = 0f64.exp_m1().powi(2) == 0.0 && (0f64).exp_m1() - 0.0 == 0.0;
    ScalarInequalityReport {
        points: ts.len(),
        worst_first,
        worst_second,
        equality_at_zero,
        passed: worst_first <= tol && worst_second <= tol && equality_at_zero,
    }
}

/// log ∫(e^{2u} − 2u − 1) dv_g; −∞ for u ≡ 0.
pub fn log_linearized_integral(u: &RadialFunction, dims: &DimensionParams) -> Result<f64> {
    let w = u.grid().integration_weights(dims, Measure::Hyperbolic);
    let mut total = 0.0;
    for (node, (wi, &v)) in w.iter().zip(u.values()).enumerate() {
        if 2.0 * v > EXP_LIMIT {
            return Err(Error::Overflow { node, exponent: 2.0 * v });
        }
        total += wi * ((2.0 * v).exp_m1() - 2.0 * v);
    }
    Ok(if total > 0.0 { total.ln() } else { f64::NEG_INFINITY })
}

/// C(δ) + ⟨P_k u, u⟩/(β₀δ) − log ∫(e^{2u} − 2u − 1) dv_g with an empirical C(δ).
pub fn linearized_adams_bound(u: &RadialFunction, delta: f64, dims: &DimensionParams, c_delta: f64) -> Result<f64> {
    let lhs = log_linearized_integral(u, dims)?;
    if lhs == f64::NEG_INFINITY {
        return Ok(f64::INFINITY);
    }
    Ok(c_delta - linearized_excess(u, delta, dims, lhs)?)
}

fn linearized_excess(u: &RadialFunction, delta: f64, dims: &DimensionParams, lhs: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta = {delta} must lie in (0, 1)")));
    }
    let b0 = beta0(dims.k(), dims.n())?;
    let energy = gjms_energy(u, dims)?.gjms_energy;
    Ok(lhs - energy / (b0 * delta))
}

/// Empirical C(δ): the supremum of log∫(e^{2u} − 2u − 1) − ⟨P_k u, u⟩/(β₀δ) over a family.
pub fn fit_linearized_constant(family: &[RadialFunction], delta: f64, dims: &DimensionParams) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    for u in family {
        let lhs = log_linearized_integral(u, dims)?;
        if lhs == f64::NEG_INFINITY {
            continue;
        }
        best = best.max(linearized_excess(u, delta, dims, lhs)?);
    }
    Ok(best)
}
