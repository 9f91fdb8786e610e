//! Observed-order fits over the refinement levels n, 2n, 4n.

use serde::{Deserialize, Serialize};

use crate::report::Table;

/// Order of the radial stencils.
pub const DOCUMENTED_ORDER: f64 = 4.0;
/// Smallest acceptable observed order.
pub const ORDER_THRESHOLD: f64 = DOCUMENTED_ORDER - 0.5;

/// How a series' error behaved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeriesStatus {
    Ok,
    /// observed order below [`ORDER_THRESHOLD`]
    OrderDeficit,
    /// errors did not decrease; reported, not fatal
    NonMonotone,
    /// the finest error sits below the noise level of the quantity
    Saturated,
    /// the solver tolerance, not the grid, bounds the residual
    TolSaturated,
    /// some level stopped at the rounding floor of the operator, above the tolerance
    FloorSaturated,
    /// a level's solve missed its tolerance
    Unconverged,
}

impl SeriesStatus {
    pub fn name(self) -> &'static str {
        match self {
            Self::Ok => "ok",
            Self::OrderDeficit => "order-deficit",
            Self::NonMonotone => "non-monotone",
            Self::Saturated => "saturated",
            Self::TolSaturated => "tol-saturated",
            Self::FloorSaturated => "floor-saturated",
            Self::Unconverged => "unconverged",
        }
    }
}

/// One quantity tracked across the levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub label: String,
    pub n_nodes: Vec<usize>,
    pub values: Vec<f64>,
    /// error per level (exact reference) or per consecutive pair (self-convergence)
    pub errors: Vec<f64>,
    pub orders: Vec<f64>,
    pub observed_order: Option<f64>,
    pub status: SeriesStatus,
}

fn orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// Least-squares rate of errors measured at node counts `n`.
fn fitted_order(n: &[usize], errors: &[f64]) -> f64 {
    let x: Vec<f64> = n.iter().map(|&v| (v as f64).log2()).collect();
    let y: Vec<f64> = errors.iter().map(|e| e.log2()).collect();
    -hyperadams_core::extremals::ols_slope(&x, &y)
}

fn classify(errors: &[f64], order: Option<f64>, noise: f64) -> SeriesStatus {
    if errors.last().is_some_and(|&e| e <= noise) {
        SeriesStatus::Saturated
    } else if errors.windows(2).any(|w| !(w[1] < w[0])) {
        SeriesStatus::NonMonotone
    } else if order.is_some_and(|q| q < ORDER_THRESHOLD) {
        SeriesStatus::OrderDeficit
    } else {
        SeriesStatus::Ok
    }
}

impl Series {
    /// Errors against a known reference value.
    pub fn against_reference(label: impl Into<String>, n_nodes: Vec<usize>, values: Vec<f64>, exact: f64) -> Self {
        let errors: Vec<f64> = values.iter().map(|v| (v - exact).abs() / exact.abs().max(f64::MIN_POSITIVE)).collect();
        let order = fitted_order(&n_nodes, &errors);
        let status = classify(&errors, Some(order), 1e-13);
        Self {
            label: label.into(),
            orders: orders(&errors),
            observed_order: Some(order),
            n_nodes,
            values,
            errors,
            status,
        }
    }

    /// Differences of consecutive levels; `noise` is the absolute level below which
    /// a difference carries no information.
    pub fn self_convergence(label: impl Into<String>, n_nodes: Vec<usize>, values: Vec<f64>, noise: f64) -> Self {
        let errors: Vec<f64> = values.windows(2).map(|w| (w[0] - w[1]).abs()).collect();
        let ords = orders(&errors);
        let order = ords.last().copied().filter(|q| q.is_finite());
        let status = classify(&errors, order, noise);
        Self { label: label.into(), orders: ords, observed_order: order, n_nodes, values, errors, status }
    }
}

/// All series of one study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub documented_order: f64,
    pub threshold: f64,
    pub levels: Vec<usize>,
    pub series: Vec<Series>,
    /// smallest order among series that were not saturated
    pub observed_order: Option<f64>,
    pub flagged: Vec<String>,
    pub passed: bool,
}

impl ConvergenceReport {
    pub fn new(levels: Vec<usize>, series: Vec<Series>) -> Self {
        let observed_order = series
            .iter()
            .filter(|s| matches!(s.status, SeriesStatus::Ok | SeriesStatus::OrderDeficit))
            .filter_map(|s| s.observed_order)
            .reduce(f64::min);
        let flagged = series
            .iter()
            .filter(|s| s.status != SeriesStatus::Ok)
            .map(|s| format!("{}: {}", s.label, s.status.name()))
            .collect();
        let passed = series.iter().all(|s| !matches!(s.status, SeriesStatus::OrderDeficit | SeriesStatus::Unconverged));
        Self {
            documented_order: DOCUMENTED_ORDER,
            threshold: ORDER_THRESHOLD,
            levels,
            series,
            observed_order,
            flagged,
            passed,
        }
    }

    /// One row per series and level.
    pub fn table(&self) -> Table {
        let mut t = Table::new(&["series", "level", "n_nodes", "value", "error", "order", "status"]);
        for s in &self.series {
            let offset = s.values.len() - s.errors.len();
            for (level, (&n, &v)) in s.n_nodes.iter().zip(&s.values).enumerate() {
                let error = level.checked_sub(offset).map(|i| s.errors[i]);
                let order = level.checked_sub(offset + 1).and_then(|i| s.orders.get(i).copied());
                t.push(vec![
                    s.label.as_str().into(),
                    level.into(),
                    n.into(),
                    v.into(),
                    error.into(),
                    order.into(),
                    s.status.name().into(),
                ]);
            }
        }
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::Cell;

    #[test]
    fn fourth_order_reference() {
        let n = vec![100, 200, 400];
        let values: Vec<f64> = n.iter().map(|&m| 1.0 + 3.0 / (m as f64).powi(4)).collect();
        let s = Series::against_reference("x", n, values, 1.0);
        assert!((s.observed_order.unwrap() - 4.0).abs() < 1e-6);
        assert_eq!(s.status, SeriesStatus::Ok);
    }

    #[test]
    fn second_order_is_a_deficit() {
        let n = vec![100, 200, 400];
        let values: Vec<f64> = n.iter().map(|&m| 2.0 + 1.0 / (m as f64).powi(2)).collect();
        let s = Series::self_convergence("x", n.clone(), values, 1e-15);
        assert_eq!(s.status, SeriesStatus::OrderDeficit);
        assert!(!ConvergenceReport::new(n, vec![s]).passed);
    }

    #[test]
    fn non_monotone_is_flagged_not_fatal() {
        let n = vec![100, 200, 400];
        let s = Series::self_convergence("x", n.clone(), vec![1.0, 1.1, 1.3], 1e-15);
        assert_eq!(s.status, SeriesStatus::NonMonotone);
        let r = ConvergenceReport::new(n, vec![s]);
        assert!(r.passed && r.flagged.len() == 1);
    }

    #[test]
    fn saturated_series_excluded_from_order() {
        let n = vec![100, 200, 400];
        let s = Series::self_convergence("x", n.clone(), vec![1.0, 1.0, 1.0], 1e-12);
        assert_eq!(s.status, SeriesStatus::Saturated);
        assert_eq!(ConvergenceReport::new(n, vec![s]).observed_order, None);
    }

    #[test]
    fn table_layout() {
        let n = vec![100, 200, 400];
        let s = Series::self_convergence("x", n.clone(), vec![1.0, 0.5, 0.25], 1e-15);
        let t = ConvergenceReport::new(n, vec![s]).table();
        assert_eq!(t.rows.len(), 3);
        assert_eq!(t.rows[0][4], Cell::Empty);
        assert_eq!(t.rows[2][5], Cell::Real(1.0));
    }
}
