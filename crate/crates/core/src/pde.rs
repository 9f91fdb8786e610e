//! Variational solver for P_k u + Q₁ = Q₂ e^{2u} on radial grid functions
//! vanishing beyond R_max.
//!
//! Convex mode (Q₂ ≤ 0) minimizes
//! J(u) = ½⟨P_k u, u⟩ − ∫Qu − ½∫Q₂(e^{2u} − 2u − 1), Q = Q₂ − Q₁,
//! by damped Newton. Log-constrained mode minimizes
//! J_Q(u) = ⟨P_k u, u⟩ + 2∫Q₁u − log∫Q₂(e^{2u} − 1) over the set where the
//! logarithm's argument is positive, then shifts the minimizer by a constant.
//! Gradients are represented against the mass inner product, so a critical
//! point is literally a zero of the discrete equation.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::ball_model::{DimensionParams, Measure, RadialFunction, RadialGrid};
use crate::banded::{BandLu, BandMatrix};
use crate::error::{Error, Result};
use crate::families::square_integrability;
use crate::inequalities::EXP_LIMIT;
use crate::operators::{gjms_assemble, gjms_factors, DiscreteOperator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PdeMode {
    Convex,
    LogConstrained,
}

/// Data of one Q-curvature-type problem with its assembled operator.
#[derive(Debug, Clone)]
pub struct PdeProblem {
    dims: DimensionParams,
    q1: RadialFunction,
    q2: RadialFunction,
    mode: PdeMode,
    operator: DiscreteOperator,
    weights: Vec<f64>,
    diagnostics: Vec<String>,
}

impl PdeProblem {
    pub fn new(dims: DimensionParams, q1: RadialFunction, q2: RadialFunction, mode: PdeMode) -> Result<Self> {
        if !Arc::ptr_eq(q1.grid(), q2.grid()) && q1.grid().geodesic_nodes() != q2.grid().geodesic_nodes() {
            return Err(Error::InvalidParameter("Q₁ and Q₂ live on different grids".into()));
        }
        for q in [&q1, &q2] {
            if let Some(node) = q.values().iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { node, value: q.values()[node] });
            }
        }
        let mut diagnostics = Vec::new();
        match mode {
            PdeMode::Convex => {
                if let Some(node) = q2.values().iter().position(|&v| v > 0.0) {
                    return Err(Error::Domain(format!("convex mode needs Q₂ ≤ 0; Q₂ > 0 at node {node}")));
                }
                let q = q2.axpy(-1.0, &q1);
                let tail = square_integrability(&q, &dims)?;
                if tail > 1e-12 {
                    diagnostics.push(format!("Q₂ − Q₁ tail beyond R_max is {tail:.2e} of its L² mass"));
                }
            }
            PdeMode::LogConstrained => {
                for (name, q) in [("Q₁", &q1), ("Q₂", &q2)] {
                    let tail = square_integrability(q, &dims)?;
                    if tail > 1e-12 {
                        diagnostics.push(format!("{name} tail beyond R_max is {tail:.2e} of its L² mass"));
                    }
                }
            }
        }
        let grid = Arc::clone(q1.grid());
        let operator = gjms_assemble(&dims, &grid)?;
        let weights = grid.mass_weights(&dims, Measure::Hyperbolic);
        Ok(Self { dims, q1, q2, mode, operator, weights, diagnostics })
    }

    pub fn dims(&self) -> &DimensionParams {
        &self.dims
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        self.q1.grid()
    }

    pub fn mode(&self) -> PdeMode {
        self.mode
    }

    pub fn q1(&self) -> &RadialFunction {
        &self.q1
    }

    pub fn q2(&self) -> &RadialFunction {
        &self.q2
    }

    pub fn operator(&self) -> &DiscreteOperator {
        &self.operator
    }

    pub fn diagnostics(&self) -> &[String] {
        &self.diagnostics
    }

    /// Discrete L²(dv_g) inner product.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.weights.iter().zip(a.iter().zip(b)).map(|(w, (x, y))| w * x * y).sum()
    }

    /// Discrete L²(dv_g) norm.
    pub fn norm(&self, v: &[f64]) -> f64 {
        self.inner(v, v).sqrt()
    }

    fn require(&self, mode: PdeMode) -> Result<()> {
        if self.mode == mode {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("operation needs {mode:?} mode, problem is {:?}", self.mode)))
        }
    }
}

/// Outcome of a solve.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub u: RadialFunction,
    pub objective: f64,
    /// ‖P_k u + Q₁ − Q₂e^{2u}‖ in discrete L²(dv_g)
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// −½ log∫Q₂(e^{2u₀} − 1) in log-constrained mode
    pub additive_constant: Option<f64>,
    pub objective_history: Vec<f64>,
    /// ε·‖|P_k||u|‖, the residual level rounding alone produces
    pub residual_floor: f64,
    pub diagnostics: Vec<String>,
}

/// ε·‖|P_k||u|‖ in discrete L²(dv_g).
pub fn residual_floor(u: &[f64], problem: &PdeProblem) -> f64 {
    let a = problem.operator.band_matrix();
    let row: Vec<f64> =
        (0..u.len()).map(|i| a.row_span(i).map(|j| (a.get(i, j) * u[j]).abs()).sum::<f64>() * f64::EPSILON).collect();
    problem.norm(&row)
}

/// e^{2u} with the overflow guard.
fn exp2(u: &[f64]) -> Result<Vec<f64>> {
    u.iter()
        .enumerate()
        .map(|(node, &v)| {
            let exponent = 2.0 * v;
            if exponent > EXP_LIMIT {
                Err(Error::Overflow { node, exponent })
            } else {
                Ok(exponent.exp())
            }
        })
        .collect()
}

fn values_of(u: &RadialFunction, problem: &PdeProblem) -> Result<()> {
    if u.values().len() != problem.weights.len() {
        return Err(Error::InvalidParameter("function and problem grids differ".into()));
    }
    Ok(())
}

fn j_values(u: &[f64], p: &PdeProblem) -> Result<f64> {
    let pu = p.operator.apply_values(u);
    let (q1, q2) = (p.q1.values(), p.q2.values());
    let mut total = 0.0;
    for i in 0..u.len() {
        let two_u = 2.0 * u[i];
        if two_u > EXP_LIMIT {
            return Err(Error::Overflow { node: i, exponent: two_u });
        }
        let q = q2[i] - q1[i];
        total += p.weights[i] * (0.5 * pu[i] * u[i] - q * u[i] - 0.5 * q2[i] * (two_u.exp_m1() - two_u));
    }
    Ok(total)
}

/// J(u) in convex mode.
pub fn functional_j(u: &RadialFunction, problem: &PdeProblem) -> Result<f64> {
    problem.require(PdeMode::Convex)?;
    values_of(u, problem)?;
    j_values(u.values(), problem)
}

/// Pointwise P_k u + Q₁ − Q₂e^{2u} from the assembled operator.
fn equation_values(u: &[f64], p: &PdeProblem) -> Result<Vec<f64>> {
    let e = exp2(u)?;
    let pu = p.operator.apply_values(u);
    Ok((0..u.len()).map(|i| pu[i] + p.q1.values()[i] - p.q2.values()[i] * e[i]).collect())
}

/// ∇J against the dv_g inner product: P_k u − Q − Q₂(e^{2u} − 1).
pub fn gradient_j(u: &RadialFunction, problem: &PdeProblem) -> Result<RadialFunction> {
    problem.require(PdeMode::Convex)?;
    values_of(u, problem)?;
    RadialFunction::from_values(problem.grid(), equation_values(u.values(), problem)?)
}

/// Hessian of J applied to w: P_k w − 2Q₂e^{2u}w.
pub fn hessian_action_j(u: &RadialFunction, w: &RadialFunction, problem: &PdeProblem) -> Result<RadialFunction> {
    problem.require(PdeMode::Convex)?;
    values_of(u, problem)?;
    let e = exp2(u.values())?;
    let pw = problem.operator.apply_values(w.values());
    let out = (0..pw.len()).map(|i| pw[i] - 2.0 * problem.q2.values()[i] * e[i] * w.values()[i]).collect();
    RadialFunction::from_values(problem.grid(), out)
}

/// ‖P_k u + Q₁ − Q₂e^{2u}‖ recomputed by applying the second-order factors one at a time.
pub fn residual(u: &RadialFunction, problem: &PdeProblem) -> Result<f64> {
    residual_shifted(u, 0.0, problem)
}

/// Residual of u + c, using that P_k annihilates constants.
pub fn residual_shifted(u: &RadialFunction, c: f64, problem: &PdeProblem) -> Result<f64> {
    values_of(u, problem)?;
    let mut pu = u.values().to_vec();
    for f in gjms_factors(&problem.dims, problem.grid()) {
        pu = f.apply_values(&pu);
    }
    let shifted: Vec<f64> = u.values().iter().map(|v| v + c).collect();
    let e = exp2(&shifted)?;
    let r: Vec<f64> = (0..pu.len()).map(|i| pu[i] + problem.q1.values()[i] - problem.q2.values()[i] * e[i]).collect();
    Ok(problem.norm(&r))
}

/// Solves P_k u = f by a banded LU per second-order factor.
pub fn factorwise_solve(dims: &DimensionParams, grid: &Arc<RadialGrid>, f: &[f64]) -> Result<Vec<f64>> {
    let mut x = f.to_vec();
    for factor in gjms_factors(dims, grid) {
        x = factor.band_matrix().lu()?.solve(&x);
    }
    Ok(x)
}

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACK: usize = 60;

/// Minimizes J by damped Newton with Armijo backtracking; falls back to a
/// gradient step preconditioned by P_k + εI when Newton is not a descent direction.
pub fn solve_convex(problem: &PdeProblem, tol: f64, max_iter: usize) -> Result<SolveResult> {
    problem.require(PdeMode::Convex)?;
    let n = problem.weights.len();
    let mut u = vec![0.0; n];
    let mut obj = j_values(&u, problem)?;
    let mut history = vec![obj];
    let mut diagnostics = problem.diagnostics.clone();
    let p_band = problem.operator.band_matrix();
    let mut precond: Option<BandLu> = None;
    let mut iterations = 0;
    let mut res_norm;
    let mut stalled = 0;
    let mut best = f64::INFINITY;
    loop {
        let g = equation_values(&u, problem)?;
        res_norm = problem.norm(&g);
        if res_norm <= tol || iterations >= max_iter {
            break;
        }
        if res_norm > 0.5 * best {
            stalled += 1;
            if stalled >= 3 && res_norm < 10.0 * residual_floor(&u, problem) {
                diagnostics.push("residual stalled at the rounding floor".into());
                break;
            }
        } else {
            stalled = 0;
        }
        best = best.min(res_norm);
        iterations += 1;
        let e = exp2(&u)?;
        let mut h = p_band.clone();
        let curv: Vec<f64> = (0..n).map(|i| -2.0 * problem.q2.values()[i] * e[i]).collect();
        h.add_diagonal(&curv);
        let mut d: Vec<f64> = h.lu()?.solve(&g).iter().map(|x| -x).collect();
        let mut slope = problem.inner(&g, &d);
        let hd = h.matvec(&d);
        let dhd = problem.inner(&d, &hd);
        if dhd < 0.0 {
            return Err(Error::Discretization(format!(
                "negative curvature {dhd:.3e} with Q₂ ≤ 0; the discrete operator is not positive"
            )));
        }
        if !(slope < 0.0) {
            diagnostics.push(format!("iteration {iterations}: Newton step not a descent direction, gradient fallback"));
            let lu = match &precond {
                Some(lu) => lu,
                None => {
                    let mut m = p_band.clone();
                    m.add_scaled_identity(1e-8 * p_band.norm_inf());
                    precond.insert(m.lu()?)
                }
            };
            d = lu.solve(&g).iter().map(|x| -x).collect();
            slope = problem.inner(&g, &d);
        }
        // near the minimizer J differences drown in roundoff; accept a full step that shrinks the residual
        let full_step = || {
            let trial: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a + b).collect();
            let r = equation_values(&trial, problem).ok().map(|g| problem.norm(&g))?;
            let o = j_values(&trial, problem).ok()?;
            (r < res_norm).then_some((trial, o.min(obj)))
        };
        let roundoff = -slope < 1e3 * f64::EPSILON * obj.abs().max(1.0);
        let step = if roundoff { full_step() } else { None };
        let Some((next, next_obj)) =
            step.or_else(|| line_search(&u, &d, obj, slope, |v| j_values(v, problem).ok())).or_else(full_step)
        else {
            diagnostics.push(format!("iteration {iterations}: no step decreased J or the residual"));
            break;
        };
        u = next;
        obj = next_obj;
        history.push(obj);
    }
    let converged = res_norm <= tol;
    let floor = residual_floor(&u, problem);
    if !converged {
        diagnostics.push(format!(
            "stopped after {iterations} iterations with residual {res_norm:.3e} (rounding floor {floor:.3e})"
        ));
    }
    Ok(SolveResult {
        u: RadialFunction::from_values(problem.grid(), u)?,
        objective: obj,
        residual_norm: res_norm,
        iterations,
        converged,
        additive_constant: None,
        objective_history: history,
        residual_floor: floor,
        diagnostics,
    })
}

/// Backtracking along d from u until the Armijo condition holds.
fn line_search(
    u: &[f64],
    d: &[f64],
    f0: f64,
    slope: f64,
    f: impl Fn(&[f64]) -> Option<f64>,
) -> Option<(Vec<f64>, f64)> {
    let mut t = 1.0;
    for _ in 0..MAX_BACKTRACK {
        let trial: Vec<f64> = u.iter().zip(d).map(|(a, b)| a + t * b).collect();
        if let Some(val) = f(&trial) {
            if val <= f0 + ARMIJO * t * slope {
                return Some((trial, val));
            }
        }
        t *= 0.5;
    }
    None
}

/// ∫Q₂(e^{2u} − 1) dv_g, the argument of the logarithm in J_Q.
fn log_argument(u: &[f64], p: &PdeProblem) -> Result<f64> {
    let mut z = 0.0;
    for (i, &v) in u.iter().enumerate() {
        if 2.0 * v > EXP_LIMIT {
            return Err(Error::Overflow { node: i, exponent: 2.0 * v });
        }
        z += p.weights[i] * p.q2.values()[i] * (2.0 * v).exp_m1();
    }
    Ok(z)
}

fn jq_values(u: &[f64], p: &PdeProblem) -> Result<f64> {
    let z = log_argument(u, p)?;
    if !(z > 0.0) {
        return Err(Error::Infeasible(format!("log argument {z:.3e} is not positive")));
    }
    let pu = p.operator.apply_values(u);
    Ok(p.inner(&pu, u) + 2.0 * p.inner(p.q1.values(), u) - z.ln())
}

/// J_Q(u); errors outside the set where ∫Q₂(e^{2u} − 1) > 0.
pub fn functional_jq(u: &RadialFunction, problem: &PdeProblem) -> Result<f64> {
    problem.require(PdeMode::LogConstrained)?;
    values_of(u, problem)?;
    jq_values(u.values(), problem)
}

fn jq_gradient_values(u: &[f64], p: &PdeProblem) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let z = log_argument(u, p)?;
    let e = exp2(u)?;
    let q: Vec<f64> = (0..u.len()).map(|i| p.q2.values()[i] * e[i]).collect();
    let pu = p.operator.apply_values(u);
    let g = (0..u.len()).map(|i| 2.0 * pu[i] + 2.0 * p.q1.values()[i] - 2.0 * q[i] / z).collect();
    Ok((g, q, z))
}

/// ∇J_Q against the dv_g inner product: 2P_k u + 2Q₁ − 2Q₂e^{2u}/Z.
pub fn gradient_jq(u: &RadialFunction, problem: &PdeProblem) -> Result<RadialFunction> {
    problem.require(PdeMode::LogConstrained)?;
    values_of(u, problem)?;
    let (g, _, _) = jq_gradient_values(u.values(), problem)?;
    RadialFunction::from_values(problem.grid(), g)
}

/// A point with ∫Q₂(e^{2u} − 1) > 0: a small multiple of the positive part of Q₂.
pub fn feasible_start(problem: &PdeProblem) -> Result<Vec<f64>> {
    let q2 = problem.q2.values();
    let peak = q2.iter().cloned().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(Error::Infeasible("Q₂ has no positive part, so ∫Q₂(e^{2u} − 1) > 0 is impossible".into()));
    }
    let u: Vec<f64> = q2.iter().map(|&q| 0.1 * q.max(0.0) / peak).collect();
    let z = log_argument(&u, problem)?;
    if !(z > 0.0) {
        return Err(Error::Infeasible(format!("start built from Q₂⁺ has log argument {z:.3e}")));
    }
    Ok(u)
}

/// Minimizes J_Q by Newton steps (Sherman–Morrison for the rank-one term) with
/// backtracking that keeps iterates feasible; falls back to preconditioned gradient steps.
pub fn solve_log_constrained(problem: &PdeProblem, tol: f64, max_iter: usize) -> Result<SolveResult> {
    problem.require(PdeMode::LogConstrained)?;
    let n = problem.weights.len();
    let mut u = feasible_start(problem)?;
    let mut obj = jq_values(&u, problem)?;
    let mut history = vec![obj];
    let mut diagnostics = problem.diagnostics.clone();
    let p_band = problem.operator.band_matrix();
    let precond = {
        let mut m = p_band.clone();
        m.scale(2.0);
        m.add_scaled_identity(1e-8 * p_band.norm_inf());
        m.lu()?
    };
    let mut iterations = 0;
    let shifted_residual = |u: &[f64]| -> Result<(f64, f64)> {
        let z = log_argument(u, problem)?;
        let c = -0.5 * z.ln();
        let e = exp2(u)?;
        let pu = problem.operator.apply_values(u);
        let r: Vec<f64> = (0..n).map(|i| pu[i] + problem.q1.values()[i] - problem.q2.values()[i] * e[i] / z).collect();
        Ok((problem.norm(&r), c))
    };
    let (mut res_norm, mut shift) = shifted_residual(&u)?;
    while res_norm > tol && iterations < max_iter {
        iterations += 1;
        let (g, q, z) = jq_gradient_values(&u, problem)?;
        let d = newton_direction_jq(p_band, &g, &q, z, &problem.weights)
            .filter(|d| {
                let slope = problem.inner(&g, d);
                let hd = hessian_jq(p_band, d, &q, z, &problem.weights);
                slope < 0.0 && problem.inner(d, &hd) > 0.0
            })
            .unwrap_or_else(|| {
                diagnostics.push(format!("iteration {iterations}: gradient fallback"));
                precond.solve(&g).iter().map(|x| -x).collect()
            });
        let slope = problem.inner(&g, &d);
        // backtracking with shrink 0.5 rejects steps leaving the feasible set
        let full_step = || {
            let trial: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a + b).collect();
            let o = jq_values(&trial, problem).ok()?;
            let (r, _) = shifted_residual(&trial).ok()?;
            (r < res_norm).then_some((trial, o.min(obj)))
        };
        let roundoff = -slope < 1e3 * f64::EPSILON * obj.abs().max(1.0);
        let step = if roundoff { full_step() } else { None }
            .or_else(|| line_search(&u, &d, obj, slope, |v| jq_values(v, problem).ok()))
            .or_else(full_step);
        let Some((next, next_obj)) = step else {
            diagnostics.push("line search stalled".into());
            break;
        };
        u = next;
        obj = next_obj;
        history.push(obj);
        (res_norm, shift) = shifted_residual(&u)?;
    }
    let converged = res_norm <= tol;
    let floor = residual_floor(&u, problem);
    if !converged {
        diagnostics.push(format!(
            "stopped after {iterations} iterations with residual {res_norm:.3e} (rounding floor {floor:.3e})"
        ));
    }
    Ok(SolveResult {
        u: RadialFunction::from_values(problem.grid(), u)?,
        objective: obj,
        residual_norm: res_norm,
        iterations,
        converged,
        additive_constant: Some(shift),
        objective_history: history,
        residual_floor: floor,
        diagnostics,
    })
}

/// Hessian of J_Q applied to w: 2P w − 4q w/Z + 4q⟨q, w⟩/Z², q = Q₂e^{2u}.
fn hessian_jq(p: &BandMatrix, w: &[f64], q: &[f64], z: f64, weights: &[f64]) -> Vec<f64> {
    let pw = p.matvec(w);
    let qw: f64 = (0..w.len()).map(|i| weights[i] * q[i] * w[i]).sum();
    (0..w.len()).map(|i| 2.0 * pw[i] - 4.0 * q[i] * w[i] / z + 4.0 * q[i] * qw / (z * z)).collect()
}

/// Solves H d = −g with H = A + 4q(Wq)ᵀ/Z², A = 2P − 4 diag(q)/Z.
fn newton_direction_jq(p: &BandMatrix, g: &[f64], q: &[f64], z: f64, weights: &[f64]) -> Option<Vec<f64>> {
    let mut a = p.clone();
    a.scale(2.0);
    let diag: Vec<f64> = q.iter().map(|qi| -4.0 * qi / z).collect();
    a.add_diagonal(&diag);
    let lu = a.lu().ok()?;
    let ag = lu.solve(g);
    let aq = lu.solve(q);
    let c = 4.0 / (z * z);
    let wq_ag: f64 = (0..g.len()).map(|i| weights[i] * q[i] * ag[i]).sum();
    let wq_aq: f64 = (0..g.len()).map(|i| weights[i] * q[i] * aq[i]).sum();
    let denom = 1.0 + c * wq_aq;
    if denom.abs() < 1e-14 {
        return None;
    }
    let d: Vec<f64> = (0..g.len()).map(|i| -(ag[i] - c * aq[i] * wq_ag / denom)).collect();
    d.iter().all(|x| x.is_finite()).then_some(d)
}
