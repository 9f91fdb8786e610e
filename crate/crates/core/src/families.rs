//! Named radial profiles used as PDE data and as test functions.
//!
//! Text form: `zero`, `gaussian:A:σ`, `bump:A:ρ`, `rational-decay:A:a`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::ball_model::{DimensionParams, Measure, RadialFunction, RadialGrid};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum RadialFamily {
    Zero,
    /// A e^{−r²/(2σ²)}
    Gaussian {
        amplitude: f64,
        width: f64,
    },
    /// A e^{1 − 1/(1 − (r/ρ)²)} for r < ρ, peak value A
    Bump {
        amplitude: f64,
        radius: f64,
    },
    /// A (cosh r)^{−a}, a rational function of the Euclidean radius
    RationalDecay {
        amplitude: f64,
        exponent: f64,
    },
}

impl RadialFamily {
    /// Value at geodesic radius r.
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            Self::Zero => 0.0,
            Self::Gaussian { amplitude, width } => amplitude * (-r * r / (2.0 * width * width)).exp(),
            Self::Bump { amplitude, radius } => {
                let t = r / radius;
                if t < 1.0 {
                    amplitude * (1.0 - 1.0 / (1.0 - t * t)).exp()
                } else {
                    0.0
                }
            }
            Self::RationalDecay { amplitude, exponent } => amplitude * r.cosh().powf(-exponent),
        }
    }

    pub fn support(&self) -> Option<f64> {
        match *self {
            Self::Zero => Some(0.0),
            Self::Bump { radius, .. } => Some(radius),
            _ => None,
        }
    }

    pub fn sample(&self, grid: &Arc<RadialGrid>) -> Result<RadialFunction> {
        self.validate()?;
        let f = RadialFunction::from_fn(grid, |r| self.eval(r))?;
        Ok(match self.support() {
            Some(rho) => f.with_support(rho),
            None => f,
        })
    }

    fn validate(&self) -> Result<()> {
        let bad = match *self {
            Self::Zero => None,
            Self::Gaussian { amplitude, width } => {
                (!amplitude.is_finite() || !(width > 0.0)).then_some("gaussian needs finite A and σ > 0")
            }
            Self::Bump { amplitude, radius } => {
                (!amplitude.is_finite() || !(radius > 0.0)).then_some("bump needs finite A and ρ > 0")
            }
            Self::RationalDecay { amplitude, exponent } => {
                (!amplitude.is_finite() || !(exponent > 0.0)).then_some("rational-decay needs finite A and a > 0")
            }
        };
        bad.map_or(Ok(()), |m| Err(Error::InvalidParameter(m.into())))
    }
}

impl fmt::Display for RadialFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => write!(f, "zero"),
            Self::Gaussian { amplitude, width } => write!(f, "gaussian:{amplitude}:{width}"),
            Self::Bump { amplitude, radius } => write!(f, "bump:{amplitude}:{radius}"),
            Self::RationalDecay { amplitude, exponent } => write!(f, "rational-decay:{amplitude}:{exponent}"),
        }
    }
}

impl FromStr for RadialFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').map(str::trim).collect();
        let num = |i: usize| -> Result<f64> {
            parts
                .get(i)
                .ok_or_else(|| Error::InvalidParameter(format!("`{s}`: missing parameter {i}")))?
                .parse::<f64>()
                .map_err(|e| Error::InvalidParameter(format!("`{s}`: {e}")))
        };
        let family = match parts[0] {
            "zero" if parts.len() == 1 => Self::Zero,
            "gaussian" if parts.len() == 3 => Self::Gaussian { amplitude: num(1)?, width: num(2)? },
            "bump" if parts.len() == 3 => Self::Bump { amplitude: num(1)?, radius: num(2)? },
            "rational-decay" if parts.len() == 3 => Self::RationalDecay { amplitude: num(1)?, exponent: num(2)? },
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "`{s}`: expected zero, gaussian:A:σ, bump:A:ρ or rational-decay:A:a"
                )))
            }
        };
        family.validate()?;
        Ok(family)
    }
}

/// (1 − s²/a²)^q in the Euclidean radius s, supported in s < a; its critical
/// Euclidean energy has a closed form through the variable w = 1 − s²/a².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolynomialBump {
    pub radius: f64,
    pub power: u32,
}

impl PolynomialBump {
    pub fn new(radius: f64, power: u32) -> Result<Self> {
        if !(radius > 0.0 && radius < 1.0) {
            return Err(Error::InvalidParameter(format!("bump radius {radius} must lie in (0, 1)")));
        }
        Ok(Self { radius, power })
    }

    pub fn eval_euclidean(&self, s: f64) -> f64 {
        if s < self.radius {
            (1.0 - (s / self.radius).powi(2)).powi(self.power as i32)
        } else {
            0.0
        }
    }

    pub fn sample(&self, grid: &Arc<RadialGrid>) -> Result<RadialFunction> {
        let f = RadialFunction::from_euclidean_fn(grid, |s| self.eval_euclidean(s))?;
        Ok(f.with_support(2.0 * self.radius.atanh()))
    }

    /// ∫_{ℝ^{2k}} |∇^k u|² dx, exact up to rounding.
    pub fn exact_energy(&self, k: u32) -> Result<f64> {
        let dims = DimensionParams::new(k)?;
        let n = dims.n() as f64;
        let a2 = self.radius * self.radius;
        let deriv = |g: &[f64]| -> Vec<f64> { g.iter().enumerate().skip(1).map(|(i, c)| i as f64 * c).collect() };
        let eval = |g: &[f64], w: f64| g.iter().rev().fold(0.0, |acc, c| acc * w + c);
        // g(w) = w^q; Δ acts as (4(1 − w)g'' − 2N g')/a²
        let mut g = vec![0.0; self.power as usize + 1];
        g[self.power as usize] = 1.0;
        for _ in 0..k / 2 {
            let g1 = deriv(&g);
            let g2 = deriv(&g1);
            let mut next = vec![0.0; g.len()];
            for (i, c) in g2.iter().enumerate() {
                next[i] += 4.0 * c / a2;
                next[i + 1] -= 4.0 * c / a2;
            }
            for (i, c) in g1.iter().enumerate() {
                next[i] -= 2.0 * n * c / a2;
            }
            g = next;
        }
        let odd = k % 2 == 1;
        let g1 = deriv(&g);
        // s^{N−1} ds = ½ a^N (1 − w)^{k−1} dw; (d/ds)² contributes 4(1 − w)/a²
        let rule = crate::quadrature::GaussLegendre::new(60);
        let integral = rule.integrate(0.0, 1.0, |w| {
            let base = (1.0 - w).powi(k as i32 - 1);
            if odd {
                4.0 * (1.0 - w) / a2 * eval(&g1, w).powi(2) * base
            } else {
                eval(&g, w).powi(2) * base
            }
        });
        Ok(dims.omega_nm1() * 0.5 * self.radius.powi(dims.n() as i32) * integral)
    }
}

/// Σ c_j (1 − s²/a_j²)^{q_j}, the random smooth profiles of the margin sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpMixture {
    pub terms: Vec<(f64, PolynomialBump)>,
}

impl BumpMixture {
    /// Builds a mixture from uniform draws in [0, 1): three per term
    /// (coefficient, radius, power), mapped to c ∈ [−1, 1], a ∈ [0.3, 0.85], q ∈ [q_min, q_min + 4].
    pub fn from_unit_draws(draws: &[f64], q_min: u32) -> Result<Self> {
        if draws.is_empty() || !draws.len().is_multiple_of(3) {
            return Err(Error::InvalidParameter("need three draws per mixture term".into()));
        }
        let terms = draws
            .chunks(3)
            .map(|d| {
                let bump = PolynomialBump::new(0.3 + 0.55 * d[1], q_min + (d[2] * 5.0).floor().min(4.0) as u32)?;
                Ok((2.0 * d[0] - 1.0, bump))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { terms })
    }

    pub fn eval_euclidean(&self, s: f64) -> f64 {
        self.terms.iter().map(|(c, b)| c * b.eval_euclidean(s)).sum()
    }

    pub fn sample(&self, grid: &Arc<RadialGrid>) -> Result<RadialFunction> {
        let support = self.terms.iter().map(|(_, b)| b.radius).fold(0.0, f64::max);
        let f = RadialFunction::from_euclidean_fn(grid, |s| self.eval_euclidean(s))?;
        Ok(f.with_support(2.0 * support.atanh()))
    }
}

/// Checks ∫Q² dv_g < ∞ from the decay of the integrand near R_max.
///
/// Returns the estimated relative tail beyond R_max; errors when the integrand
/// does not decay there.
pub fn square_integrability(q: &RadialFunction, dims: &DimensionParams) -> Result<f64> {
    if q.compactly_supported() {
        return Ok(0.0);
    }
    let grid = q.grid();
    let w = grid.integration_weights(dims, Measure::Hyperbolic);
    let v = q.values();
    let total: f64 = w.iter().zip(v).map(|(w, v)| w * v * v).sum();
    if total == 0.0 {
        return Ok(0.0);
    }
    let n = v.len();
    let r = grid.geodesic_nodes();
    let f = |i: usize| v[i] * v[i] * crate::ball_model::volume_weight(r[i], dims);
    let (i0, i1) = (n - 8, n - 1);
    if f(i1) == 0.0 {
        return Ok(0.0);
    }
    let rate = (f(i1).ln() - f(i0).ln()) / (r[i1] - r[i0]);
    if !(rate < 0.0) {
        return Err(Error::Domain(format!(
            "Q²·sinh^(N−1) r grows at rate {rate:.3} near R_max; Q is not square-integrable against dv_g"
        )));
    }
    Ok(f(i1) / -rate / total)
}
