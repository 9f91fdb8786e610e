//! The concentrating family v_m on B₂ and its rescaling ũ_m(x) = v_m(2x),
//! with the blow-up and best-Sobolev-constant experiments built on it.
//!
//! v_m is piecewise: a polynomial in m|x|² for |x| < 1/√m, the logarithmic
//! branch −√(2/(M log m)) log|x| up to |x| = 1, and a Hermite cutoff ξ_m on
//! [1, 2]. Each piece is a Laurent polynomial plus a multiple of log ρ, a class
//! closed under Δ and d/dρ, so the critical energy ∫|∇^k v_m|² is evaluated in
//! closed form. Integrals of nonlinear functions of ũ_m use Gauss–Legendre
//! panels aligned with the branch points, in log ρ on the logarithmic branch.

use std::collections::BTreeMap;
use std::f64::consts::E;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::ball_model::{DimensionParams, RadialFunction, RadialGrid};
use crate::banded::solve_dense;
use crate::error::{Error, Result};
use crate::inequalities::{beta0, guarded_expm1, moser_mass};
use crate::quadrature::{gl20, integrate_panels};
use crate::special::factorial;

/// Σ c_e ρ^e + b log ρ.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LogLaurent {
    terms: BTreeMap<i32, f64>,
    log: f64,
}

impl LogLaurent {
    pub fn polynomial(coeffs: &[f64]) -> Self {
        let terms = coeffs.iter().enumerate().filter(|(_, c)| **c != 0.0).map(|(e, &c)| (e as i32, c)).collect();
        Self { terms, log: 0.0 }
    }

    pub fn log(b: f64) -> Self {
        Self { terms: BTreeMap::new(), log: b }
    }

    fn push(&mut self, e: i32, c: f64) {
        if c != 0.0 {
            *self.terms.entry(e).or_insert(0.0) += c;
        }
    }

    pub fn eval(&self, rho: f64) -> f64 {
        let poly: f64 = self.terms.iter().map(|(&e, &c)| c * rho.powi(e)).sum();
        if self.log == 0.0 {
            poly
        } else {
            poly + self.log * rho.ln()
        }
    }

    pub fn derivative(&self) -> Self {
        let mut out = Self::default();
        for (&e, &c) in &self.terms {
            out.push(e - 1, e as f64 * c);
        }
        out.push(-1, self.log);
        out
    }

    /// Radial Laplacian in ℝ^N: Δρ^e = e(e + N − 2)ρ^{e−2}, Δ log ρ = (N − 2)ρ^{−2}.
    pub fn laplacian(&self, n: u32) -> Self {
        let nf = n as i32;
        let mut out = Self::default();
        for (&e, &c) in &self.terms {
            out.push(e - 2, (e * (e + nf - 2)) as f64 * c);
        }
        out.push(-2, (nf - 2) as f64 * self.log);
        out
    }

    /// Δ^{k/2} for even k, d/dρ Δ^{(k−1)/2} for odd k.
    pub fn grad_k(&self, k: u32, n: u32) -> Self {
        let mut f = self.clone();
        for _ in 0..k / 2 {
            f = f.laplacian(n);
        }
        if k % 2 == 1 {
            f = f.derivative();
        }
        f
    }

    /// ∫_a^b f(ρ)² ω ρ^{N−1} dρ in closed form; requires no log term.
    pub fn integrate_square(&self, n: u32, omega: f64, a: f64, b: f64) -> f64 {
        assert_eq!(self.log, 0.0, "closed-form square integral needs a pure Laurent polynomial");
        let mut total = 0.0;
        for (&e1, &c1) in &self.terms {
            for (&e2, &c2) in &self.terms {
                let p = e1 + e2 + n as i32 - 1;
                let prim = if p == -1 { (b / a).ln() } else { (b.powi(p + 1) - a.powi(p + 1)) / (p + 1) as f64 };
                total += c1 * c2 * prim;
            }
        }
        omega * total
    }
}

/// Coefficients in t = ρ − 1 of η on [0, 1] with η(0) = 0, η^{(l)}(0) = (−1)^l (l−1)!
/// for l = 1..k−1 and η^{(l)}(1) = 0 for l = 0..k−1.
pub fn hermite_cutoff(k: u32) -> Result<Vec<f64>> {
    let k = k as usize;
    let deg = 2 * k - 1;
    let mut a = vec![0.0; deg + 1];
    for (l, al) in a.iter_mut().enumerate().take(k).skip(1) {
        *al = if l % 2 == 0 { 1.0 } else { -1.0 } / l as f64;
    }
    if k == 1 {
        return Ok(vec![0.0, 0.0]);
    }
    // falling factorial j!/(j − l)!
    let ff = |j: usize, l: usize| -> f64 { ((j - l + 1)..=j).map(|x| x as f64).product() };
    let mut mat = vec![vec![0.0; k]; k];
    let mut rhs = vec![0.0; k];
    for l in 0..k {
        for (col, j) in (k..=deg).enumerate() {
            mat[l][col] = ff(j, l);
        }
        rhs[l] = -(l..k).map(|j| a[j] * ff(j, l)).sum::<f64>();
    }
    let sol = solve_dense(&mat, &rhs)?;
    a[k..].copy_from_slice(&sol);
    Ok(a)
}

/// l-th derivative at t of the polynomial with coefficients `a`.
fn poly_derivative(a: &[f64], l: usize, t: f64) -> f64 {
    a.iter()
        .enumerate()
        .skip(l)
        .map(|(j, c)| c * ((j - l + 1)..=j).map(|x| x as f64).product::<f64>() * t.powi((j - l) as i32))
        .sum()
}

/// Binomial re-expansion of Σ a_j (ρ − 1)^j in powers of ρ.
fn shift_to_rho(a: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len()];
    for (j, &c) in a.iter().enumerate() {
        let mut binom = 1.0;
        for i in 0..=j {
            // C(j, i) ρ^i (−1)^{j−i}
            let sign = if (j - i) % 2 == 0 { 1.0 } else { -1.0 };
            out[i] += c * binom * sign;
            binom = binom * (j - i) as f64 / (i + 1) as f64;
        }
    }
    out
}

/// The extremal profile for one (m, k).
#[derive(Debug, Clone)]
pub struct MoserProfile {
    pub m: f64,
    pub k: u32,
    /// M = (4π)^k (k − 1)!/2
    pub big_m: f64,
    /// coefficients in τ = m|x|² of Σ_{l=1}^{k−1}(1 − τ)^l/l
    pub inner_coeffs: Vec<f64>,
    /// coefficients in t = |x| − 1 of ξ_m on [1, 2]
    pub cutoff_spline: Vec<f64>,
    /// ũ_m sampled on the grid
    pub samples: RadialFunction,
    log_m: f64,
}

impl MoserProfile {
    pub fn log_m(&self) -> f64 {
        self.log_m
    }

    /// √(log m/(2M)), the plateau value.
    pub fn plateau(&self) -> f64 {
        (self.log_m / (2.0 * self.big_m)).sqrt()
    }

    /// √(2/(M log m)), the slope of the logarithmic branch.
    pub fn log_slope(&self) -> f64 {
        (2.0 / (self.big_m * self.log_m)).sqrt()
    }

    fn inner_scale(&self) -> f64 {
        1.0 / (2.0 * self.big_m * self.log_m).sqrt()
    }

    /// Inner branch at |x| = ρ.
    pub fn inner_branch(&self, rho: f64) -> f64 {
        let tau = self.m * rho * rho;
        let p: f64 = self.inner_coeffs.iter().rev().fold(0.0, |acc, c| acc * tau + c);
        self.plateau() + self.inner_scale() * p
    }

    /// Logarithmic branch at |x| = ρ.
    pub fn log_branch(&self, rho: f64) -> f64 {
        -self.log_slope() * rho.ln()
    }

    /// Cutoff ξ_m at |x| = ρ ∈ [1, 2].
    pub fn cutoff(&self, rho: f64) -> f64 {
        poly_derivative(&self.cutoff_spline, 0, rho - 1.0)
    }

    /// v_m(ρ).
    pub fn v(&self, rho: f64) -> f64 {
        if rho * rho * self.m < 1.0 {
            self.inner_branch(rho)
        } else if rho < 1.0 {
            self.log_branch(rho)
        } else if rho < 2.0 {
            self.cutoff(rho)
        } else {
            0.0
        }
    }

    /// ũ_m(s) = v_m(2s).
    pub fn u_tilde(&self, s: f64) -> f64 {
        self.v(2.0 * s)
    }

    /// Largest mismatch between neighbouring branches at |x| = 1/√m and |x| = 1.
    pub fn branch_mismatch(&self) -> f64 {
        let r0 = 1.0 / self.m.sqrt();
        let a = (self.inner_branch(r0) - self.log_branch(r0)).abs();
        let b = (self.log_branch(1.0) - self.cutoff(1.0)).abs();
        a.max(b)
    }

    /// Largest residual among the 2k boundary conditions of ξ_m.
    pub fn spline_residual(&self) -> f64 {
        let c = self.log_slope();
        let k = self.k as usize;
        let mut worst = poly_derivative(&self.cutoff_spline, 0, 0.0).abs();
        for l in 1..k {
            let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
            let target = sign * factorial(l as u32 - 1) * c;
            worst = worst.max((poly_derivative(&self.cutoff_spline, l, 0.0) - target).abs());
        }
        for l in 0..k {
            worst = worst.max(poly_derivative(&self.cutoff_spline, l, 1.0).abs());
        }
        worst
    }

    /// Jump of the k-th radial derivative across |x| = 1 (left-over regularity gap).
    pub fn kth_derivative_jump(&self) -> f64 {
        let k = self.k as usize;
        let log_side = LogLaurent::log(-self.log_slope());
        let mut d = log_side;
        for _ in 0..k {
            d = d.derivative();
        }
        (poly_derivative(&self.cutoff_spline, k, 0.0) - d.eval(1.0)).abs()
    }

    /// sup_{[1,2]} |ξ_m| sampled densely.
    pub fn cutoff_sup(&self) -> f64 {
        (0..=2000).map(|i| self.cutoff(1.0 + i as f64 / 2000.0).abs()).fold(0.0, f64::max)
    }
}

/// Builds the profile and its samples ũ_m on `grid`.
pub fn build_moser_profile(m: f64, k: u32, grid: &Arc<RadialGrid>) -> Result<MoserProfile> {
    if !(m >= 2.0) || !m.is_finite() {
        return Err(Error::InvalidParameter(format!("m = {m} must be at least 2")));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let needed = 1.0 / (4.0 * m.sqrt());
    if grid.origin_spacing() >= needed {
        return Err(Error::Resolution(format!(
            "spacing {:.3e} near the origin must be below 1/(4√m) = {needed:.3e}",
            grid.origin_spacing()
        )));
    }
    let big_m = moser_mass(k);
    let log_m = m.ln();
    // Σ_{l=1}^{k−1}(1 − τ)^l/l expanded in τ
    let mut inner_coeffs = vec![0.0; k as usize];
    for l in 1..k as usize {
        let mut binom = 1.0;
        for i in 0..=l {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            inner_coeffs[i] += sign * binom / l as f64;
            binom = binom * (l - i) as f64 / (i + 1) as f64;
        }
    }
    let c = (2.0 / (big_m * log_m)).sqrt();
    let cutoff_spline: Vec<f64> = hermite_cutoff(k)?.iter().map(|a| a * c).collect();
    let mut profile =
        MoserProfile { m, k, big_m, inner_coeffs, cutoff_spline, samples: RadialFunction::zeros(grid), log_m };
    let samples = RadialFunction::from_euclidean_fn(grid, |s| profile.u_tilde(s))?;
    profile.samples = samples.with_support(grid.r_max());
    Ok(profile)
}

/// Closed-form pieces of ‖ũ_m‖²_{k,g} = ∫_{B₂}|∇^k v_m|² dx.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoserEnergy {
    pub energy: f64,
    pub inner: f64,
    pub log_part: f64,
    pub outer: f64,
    /// (energy − 1)·log m
    pub deviation_times_log: f64,
}

/// ‖ũ_m‖²_{k,g} through the Euclidean identity, integrated exactly piece by piece.
pub fn moser_energy(profile: &MoserProfile, dims: &DimensionParams) -> Result<MoserEnergy> {
    if dims.k() != profile.k {
        return Err(Error::InvalidParameter(format!("profile k = {} but dims k = {}", profile.k, dims.k())));
    }
    let (k, n, omega) = (dims.k(), dims.n(), dims.omega_nm1());
    // inner piece in t = √m ρ: ∫ is scale invariant when N = 2k
    let mut inner_t = vec![0.0; 2 * k as usize];
    for (i, c) in profile.inner_coeffs.iter().enumerate() {
        inner_t[2 * i] = c * profile.inner_scale();
    }
    inner_t[0] += profile.plateau();
    let inner = LogLaurent::polynomial(&inner_t).grad_k(k, n).integrate_square(n, omega, 0.0, 1.0);
    let log_part =
        LogLaurent::log(-profile.log_slope()).grad_k(k, n).integrate_square(n, omega, 1.0 / profile.m.sqrt(), 1.0);
    let outer =
        LogLaurent::polynomial(&shift_to_rho(&profile.cutoff_spline)).grad_k(k, n).integrate_square(n, omega, 1.0, 2.0);
    let energy = inner + log_part + outer;
    if !(energy > 0.0) || !energy.is_finite() {
        return Err(Error::Discretization(format!("extremal energy {energy} is not positive")));
    }
    Ok(MoserEnergy { energy, inner, log_part, outer, deviation_times_log: (energy - 1.0) * profile.log_m })
}

/// ∫_{B₁} f(ũ_m(s)) dv_g split as (concentration disk |x| ≤ 1/(2√m), remainder).
pub fn moser_integral(
    profile: &MoserProfile,
    dims: &DimensionParams,
    log_panels: usize,
    f: impl Fn(f64) -> f64,
) -> (f64, f64) {
    let n = dims.n() as i32;
    let omega = dims.omega_nm1();
    let density = |s: f64| -> f64 { omega * s.powi(n - 1) * (2.0 / ((1.0 - s) * (1.0 + s))).powi(n) };
    let a = 0.5 / profile.m.sqrt();
    let rule = gl20();
    let inner = integrate_panels(&[0.0, a], 4, rule, |s| f(profile.u_tilde(s)) * density(s));
    let log_region = integrate_panels(&[a.ln(), 0.5f64.ln()], log_panels, rule, |y| {
        let s = y.exp();
        f(profile.u_tilde(s)) * density(s) * s
    });
    let outer = integrate_panels(&[0.5, 1.0], 16, rule, |s| f(profile.u_tilde(s)) * density(s));
    (inner, log_region + outer)
}

fn default_log_panels(profile: &MoserProfile) -> usize {
    (8.0 * profile.log_m).ceil().max(40.0) as usize
}

/// Adams functional of the normalized u_m: (concentration-disk part, total).
pub fn moser_adams_functional(profile: &MoserProfile, dims: &DimensionParams, beta: f64, energy: f64) -> (f64, f64) {
    let scale = beta / energy;
    let overflow = std::cell::Cell::new(false);
    let (inner, rest) = moser_integral(profile, dims, default_log_panels(profile), |u| {
        guarded_expm1(scale * u * u).unwrap_or_else(|| {
            overflow.set(true);
            0.0
        })
    });
    if overflow.get() {
        (f64::INFINITY, f64::INFINITY)
    } else {
        (inner, inner + rest)
    }
}

/// log ∫|ũ_m|^p dv_g evaluated with a log-sum-exp over quadrature nodes.
pub fn moser_log_lp(profile: &MoserProfile, dims: &DimensionParams, p: f64) -> f64 {
    let logs = std::cell::RefCell::new(Vec::new());
    moser_integral(profile, dims, default_log_panels(profile), |u| {
        logs.borrow_mut().push(p * u.abs().ln());
        0.0
    });
    let logs = logs.into_inner();
    let shift = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (a, b) = moser_integral(profile, dims, default_log_panels(profile), |u| (p * u.abs().ln() - shift).exp());
    (a + b).ln() + shift
}

/// One cell of the blow-up sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupRecord {
    pub m: f64,
    pub beta: f64,
    /// ‖ũ_m‖²_{k,g}
    pub energy: f64,
    pub normalized: bool,
    /// Adams functional of u_m = ũ_m/‖ũ_m‖
    pub functional_value: f64,
    /// part of the functional from |x| ≤ 1/(2√m)
    pub concentration_value: f64,
    /// β/(2M) − k
    pub predicted_exponent: f64,
}

/// Adams functional of the normalized profiles over a (β, m) sweep.
pub fn blowup_experiment(
    beta_list: &[f64],
    m_list: &[f64],
    k: u32,
    grid: &Arc<RadialGrid>,
) -> Result<Vec<BlowupRecord>> {
    let dims = DimensionParams::new(k)?;
    let big_m = moser_mass(k);
    let mut out = Vec::new();
    for &m in m_list {
        let profile = build_moser_profile(m, k, grid)?;
        let energy = moser_energy(&profile, &dims)?.energy;
        for &beta in beta_list {
            if !(beta > 0.0) {
                return Err(Error::InvalidParameter(format!("beta = {beta} must be positive")));
            }
            let (conc, total) = moser_adams_functional(&profile, &dims, beta, energy);
            out.push(BlowupRecord {
                m,
                beta,
                energy,
                normalized: true,
                functional_value: total,
                concentration_value: conc,
                predicted_exponent: beta / (2.0 * big_m) - k as f64,
            });
        }
    }
    Ok(out)
}

/// Least-squares slope of y against x.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Log-log regression of a blow-up sweep at fixed β.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupFit {
    pub beta: f64,
    pub slope: f64,
    pub concentration_slope: f64,
    pub target: f64,
    pub max_over_min: f64,
}

pub fn fit_blowup(records: &[BlowupRecord], beta: f64) -> Option<BlowupFit> {
    let rows: Vec<&BlowupRecord> = records.iter().filter(|r| r.beta == beta).collect();
    if rows.len() < 2 || rows.iter().any(|r| !r.functional_value.is_finite()) {
        return None;
    }
    let lm: Vec<f64> = rows.iter().map(|r| r.m.ln()).collect();
    let lf: Vec<f64> = rows.iter().map(|r| r.functional_value.ln()).collect();
    let lc: Vec<f64> = rows.iter().map(|r| r.concentration_value.ln()).collect();
    let vals: Vec<f64> = rows.iter().map(|r| r.functional_value).collect();
    let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    Some(BlowupFit {
        beta,
        slope: ols_slope(&lm, &lf),
        concentration_slope: ols_slope(&lm, &lc),
        target: rows[0].predicted_exponent,
        max_over_min: max / min,
    })
}

/// One row of the best-constant asymptotics table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolevRow {
    pub m: f64,
    /// p = 2k log m
    pub p: f64,
    pub energy: f64,
    /// log ∫|ũ_m|^p dv_g
    pub log_lp: f64,
    pub s_upper: f64,
    pub p_s_upper: f64,
    /// 2β₀e
    pub target: f64,
}

/// Upper bounds S_upper(p) = ‖ũ_m‖²/(∫|ũ_m|^p)^{2/p} with p = 2k log m.
pub fn sobolev_upper_experiment(m_list: &[f64], k: u32, grid: &Arc<RadialGrid>) -> Result<Vec<SobolevRow>> {
    let dims = DimensionParams::new(k)?;
    let target = 2.0 * beta0(k, 2 * k)? * E;
    let mut rows = Vec::new();
    for &m in m_list {
        let profile = build_moser_profile(m, k, grid)?;
        let energy = moser_energy(&profile, &dims)?.energy;
        let p = 2.0 * k as f64 * profile.log_m;
        let log_lp = moser_log_lp(&profile, &dims, p);
        let s_upper = energy * (-2.0 / p * log_lp).exp();
        rows.push(SobolevRow { m, p, energy, log_lp, s_upper, p_s_upper: p * s_upper, target });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid() -> Arc<RadialGrid> {
        Arc::new(RadialGrid::new(2000, 12.0, 5.0).unwrap())
    }

    #[test]
    fn laurent_calculus() {
        // Δ s² = 2N
        let p = LogLaurent::polynomial(&[0.0, 0.0, 1.0]);
        assert_eq!(p.laplacian(4).eval(0.3), 8.0);
        // log ρ is harmonic in the plane
        assert_eq!(LogLaurent::log(1.0).laplacian(2).eval(0.7), 0.0);
        // ρ^{2−N} is harmonic for N = 6
        let f = LogLaurent { terms: [(-4, 1.0)].into_iter().collect(), log: 0.0 };
        assert_eq!(f.laplacian(6).eval(1.3), 0.0);
        // ∫_0^1 (ρ)² 2πρ dρ = π/2
        let g = LogLaurent::polynomial(&[0.0, 1.0]);
        assert!((g.integrate_square(2, 2.0 * PI, 0.0, 1.0) - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn cutoff_conditions_and_shift() {
        for k in 1..=4 {
            let a = hermite_cutoff(k).unwrap();
            assert_eq!(a.len(), 2 * k as usize);
            for l in 0..k as usize {
                assert!(poly_derivative(&a, l, 1.0).abs() < 1e-12);
            }
            let rho = shift_to_rho(&a);
            for &x in &[1.0, 1.3, 1.9] {
                let direct = poly_derivative(&a, 0, x - 1.0);
                let shifted: f64 = rho.iter().enumerate().map(|(i, c)| c * x.powi(i as i32)).sum();
                let scale: f64 = rho.iter().enumerate().map(|(i, c)| (c * x.powi(i as i32)).abs()).sum();
                assert!((direct - shifted).abs() <= 1e-14 * scale, "{k} {x} {}", direct - shifted);
            }
        }
        assert_eq!(hermite_cutoff(1).unwrap(), vec![0.0, 0.0]);
        // k = 2: η = −t(1 − t)²
        let a = hermite_cutoff(2).unwrap();
        for (x, y) in a.iter().zip([0.0, -1.0, 2.0, -1.0]) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn profile_values() {
        let g = grid();
        for k in 1..=3 {
            let p = build_moser_profile(1e3, k, &g).unwrap();
            let h: f64 = (1..k).map(|l| 1.0 / l as f64).sum();
            let origin = (1e3f64.ln() / (2.0 * p.big_m)).sqrt() + h / (2.0 * p.big_m * 1e3f64.ln()).sqrt();
            assert!((p.v(0.0) - origin).abs() < 1e-14);
            assert!(p.branch_mismatch() <= 1e-10 * p.log_m().sqrt());
            assert!(p.spline_residual() < 1e-10);
            assert_eq!(p.v(1.0), 0.0);
            assert_eq!(p.v(2.0), 0.0);
        }
    }

    #[test]
    fn resolution_guard() {
        let coarse = Arc::new(RadialGrid::new(64, 25.0, 0.0).unwrap());
        assert!(matches!(build_moser_profile(1e4, 1, &coarse), Err(Error::Resolution(_))));
        assert!(build_moser_profile(1.0, 1, &grid()).is_err());
    }

    #[test]
    fn energy_exact_for_k1_and_log_part_for_k2() {
        let g = grid();
        for &m in &[1e2, 1e4] {
            let p = build_moser_profile(m, 1, &g).unwrap();
            let e = moser_energy(&p, &DimensionParams::new(1).unwrap()).unwrap();
            assert!((e.energy - 1.0).abs() < 1e-13);
            let p = build_moser_profile(m, 2, &g).unwrap();
            let e = moser_energy(&p, &DimensionParams::new(2).unwrap()).unwrap();
            assert!((e.log_part - 1.0).abs() < 1e-13);
            assert!(e.inner > 0.0 && e.outer > 0.0);
        }
    }

    #[test]
    fn k2_inner_energy_closed_form() {
        // inner piece: B²∫_{B^4}|Δ(1 − t²)|² = 64 |B^4| B², B² = 1/(2M log m)
        let g = grid();
        let p = build_moser_profile(1e3, 2, &g).unwrap();
        let e = moser_energy(&p, &DimensionParams::new(2).unwrap()).unwrap();
        let b2 = 1.0 / (2.0 * p.big_m * p.log_m());
        assert!((e.inner - 64.0 * PI * PI / 2.0 * b2).abs() < 1e-13);
    }

    #[test]
    fn cutoff_magnitude_scales_with_log() {
        let g = grid();
        for k in 2..=3 {
            let c: Vec<f64> = [1e2, 1e3, 1e4]
                .iter()
                .map(|&m| {
                    let p = build_moser_profile(m, k, &g).unwrap();
                    p.cutoff_sup() * p.log_m().sqrt()
                })
                .collect();
            assert!((c[0] - c[2]).abs() < 1e-12 * c[0]);
        }
    }

    #[test]
    fn lp_log_space_matches_direct() {
        let g = grid();
        let d = DimensionParams::new(1).unwrap();
        let p = build_moser_profile(100.0, 1, &g).unwrap();
        let (a, b) = moser_integral(&p, &d, 60, |u| u.abs().powf(4.0));
        assert!((moser_log_lp(&p, &d, 4.0) - (a + b).ln()).abs() < 1e-13);
    }

    #[test]
    fn samples_agree_with_exact_functional() {
        let g = Arc::new(RadialGrid::new(4000, 10.0, 4.0).unwrap());
        let d = DimensionParams::new(1).unwrap();
        let p = build_moser_profile(100.0, 1, &g).unwrap();
        let (_, exact) = moser_adams_functional(&p, &d, 2.0 * PI, 1.0);
        let sampled = crate::inequalities::adams_functional(&p.samples, 2.0 * PI, &d).unwrap();
        assert!(((sampled - exact) / exact).abs() < 1e-3, "{sampled} vs {exact}");
    }
}
