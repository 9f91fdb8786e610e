//! Radial Laplacians, the GJMS operator P_k and the energies it is compared against.
//!
//! Second-order operators are assembled in flux form L = −W⁻¹GᵀΣG: G is a
//! staggered fourth-order difference from cell centres to cell faces, Σ holds
//! the face fluxes and W the diagonal mass weights. Values are reflected evenly
//! across the axis and oddly across R_max, where u = 0. L is W-self-adjoint and
//! negative definite, so every quadratic form below is evaluated in split form.
//! Inside the higher forms, Δ is applied in collocated form instead: the flux
//! form is only consistent in the W-weighted sense at the axis, and repeating it
//! would cost two orders there.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::ball_model::{geodesic_to_euclidean, DimensionParams, Measure, RadialFunction, RadialGrid};
use crate::banded::BandMatrix;
use crate::error::{Error, Result};

const STAGGERED: [(isize, f64); 4] = [(-1, 1.0 / 24.0), (0, -27.0 / 24.0), (1, 27.0 / 24.0), (2, -1.0 / 24.0)];
const CENTERED: [(isize, f64); 4] = [(-2, 1.0 / 12.0), (-1, -8.0 / 12.0), (1, 8.0 / 12.0), (2, -1.0 / 12.0)];
const SECOND: [(isize, f64); 5] =
    [(-2, -1.0 / 12.0), (-1, 16.0 / 12.0), (0, -30.0 / 12.0), (1, 16.0 / 12.0), (2, -1.0 / 12.0)];

/// Maps a 1-based cell index to a 0-based column and sign: even reflection
/// across the axis, odd reflection across the outer face ξ = 1 (u = 0 at R_max).
fn cell_column(c: isize, n: usize) -> Option<(usize, f64)> {
    let c = if c < 1 { 1 - c } else { c };
    let n = n as isize;
    if c <= n {
        Some((c as usize - 1, 1.0))
    } else {
        let mirrored = 2 * n + 1 - c;
        (mirrored >= 1).then(|| (mirrored as usize - 1, -1.0))
    }
}

/// Staggered derivative d/dξ from the n cell centres to the n + 1 faces.
fn face_gradient(n: usize, h: f64) -> BandMatrix {
    let mut g = BandMatrix::zeros(n + 1, n, 2, 1);
    for j in 0..=n {
        for &(o, v) in &STAGGERED {
            if let Some((col, sign)) = cell_column(j as isize + o, n) {
                g.add(j, col, sign * v / h);
            }
        }
    }
    g
}

/// Centred fourth-order d/dξ at the cell centres for even profiles.
fn cell_derivative(n: usize, h: f64) -> BandMatrix {
    let mut d = BandMatrix::zeros(n, n, 2, 2);
    for i in 1..=n {
        for &(o, v) in &CENTERED {
            if let Some((col, sign)) = cell_column(i as isize + o, n) {
                d.add(i - 1, col, sign * v / h);
            }
        }
    }
    d
}

/// Δu = a u_rr + b u_r at the cell centres from centred ξ-differences of the even
/// extension, with u_r = u_ξ/r_ξ and u_rr = (u_ξξ − r_ξξ u_r)/r_ξ².
fn collocated_laplacian(grid: &RadialGrid, dims: &DimensionParams, measure: Measure) -> BandMatrix {
    let n = grid.n_nodes();
    let h = grid.h();
    let g2 = grid.grading().powi(2);
    let nm1 = dims.n() as f64 - 1.0;
    let mut lap = BandMatrix::zeros(n, n, 2, 2);
    for i in 0..n {
        let r = grid.geodesic_nodes()[i];
        let r_xi = grid.jacobian()[i];
        // r(ξ) = R sinh(gξ)/sinh g has r_ξξ = g² r
        let r_xixi = g2 * r;
        let (a, b) = match measure {
            Measure::Hyperbolic => (1.0, nm1 / r.tanh()),
            Measure::Euclidean => {
                let e = grid.euclidean_radius(i);
                let a = (2.0 / e.one_minus_s2()).powi(2);
                (a, a * (e.s + nm1 * e.one_minus_s2() / (2.0 * e.s)))
            }
        };
        let first = b / r_xi - a * r_xixi / r_xi.powi(3);
        let second = a / (r_xi * r_xi);
        let c = i as isize + 1;
        for &(o, v) in &CENTERED {
            if let Some((col, sign)) = cell_column(c + o, n) {
                lap.add(i, col, sign * first * v / h);
            }
        }
        for &(o, v) in &SECOND {
            if let Some((col, sign)) = cell_column(c + o, n) {
                lap.add(i, col, sign * second * v / (h * h));
            }
        }
    }
    lap
}

/// Precomputed flux-form pieces for one measure on one grid.
#[derive(Debug, Clone)]
pub struct RadialCalculus {
    grid: Arc<RadialGrid>,
    dims: DimensionParams,
    measure: Measure,
    gradient: BandMatrix,
    flux: Vec<f64>,
    mass: Vec<f64>,
    stiffness: BandMatrix,
    laplacian: BandMatrix,
    collocated: BandMatrix,
}

impl RadialCalculus {
    pub fn new(grid: &Arc<RadialGrid>, dims: &DimensionParams, measure: Measure) -> Self {
        let n = grid.n_nodes();
        let h = grid.h();
        let gradient = face_gradient(n, h);
        let density = grid.face_density(dims, measure);
        let mut flux: Vec<f64> = grid
            .face_radii()
            .iter()
            .zip(grid.face_jacobian())
            .zip(&density)
            .map(|((&r, &rx), &rho)| {
                // squared length of ∂_r in the chosen metric
                let g_rr = match measure {
                    Measure::Hyperbolic => 1.0,
                    Measure::Euclidean => {
                        let e = geodesic_to_euclidean(r).expect("face radius valid");
                        (0.5 * e.one_minus_s2()).powi(2)
                    }
                };
                h * rho / (rx * g_rr)
            })
            .collect();
        // the outer face is the mirror plane of the odd extension: trapezoid end weight
        flux[n] *= 0.5;
        let mass = grid.mass_weights(dims, measure);
        let mut weighted = gradient.clone();
        weighted.scale_rows(&flux);
        let stiffness = gradient.transpose().mul(&weighted);
        let mut laplacian = stiffness.clone();
        laplacian.scale_rows(&mass.iter().map(|w| -1.0 / w).collect::<Vec<_>>());
        let collocated = collocated_laplacian(grid, dims, measure);
        Self { grid: Arc::clone(grid), dims: *dims, measure, gradient, flux, mass, stiffness, laplacian, collocated }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn dims(&self) -> &DimensionParams {
        &self.dims
    }

    pub fn measure(&self) -> Measure {
        self.measure
    }

    /// Diagonal mass weights W.
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// S = GᵀΣG, the matrix of the Dirichlet form.
    pub fn stiffness(&self) -> &BandMatrix {
        &self.stiffness
    }

    /// L = −W⁻¹S.
    pub fn laplacian(&self) -> &BandMatrix {
        &self.laplacian
    }

    /// Radial derivative at the cell faces in the metric of the measure.
    pub fn face_gradient(&self) -> &BandMatrix {
        &self.gradient
    }

    /// ⟨u, w⟩_W.
    pub fn inner(&self, u: &[f64], w: &[f64]) -> f64 {
        self.mass.iter().zip(u.iter().zip(w)).map(|(m, (a, b))| m * a * b).sum()
    }

    /// ∫|∇u|² = uᵀSu, evaluated as Σ_j Σ_j (Gu)_j².
    pub fn dirichlet(&self, u: &[f64]) -> f64 {
        let gu = self.gradient.matvec(u);
        gu.iter().zip(&self.flux).map(|(g, f)| f * g * g).sum()
    }

    pub fn apply_laplacian(&self, u: &[f64]) -> Vec<f64> {
        self.laplacian.matvec(u)
    }

    /// Collocated Δ, pointwise fourth order up to the axis.
    pub fn apply_collocated(&self, u: &[f64]) -> Vec<f64> {
        self.collocated.matvec(u)
    }

    /// Q_i = ∫|∇^i u|² for i = 0..=max_power: ‖Δ^j u‖²_W for i = 2j and the
    /// Dirichlet form of Δ^j u for i = 2j + 1, with Δ applied collocated.
    pub fn power_forms(&self, u: &[f64], max_power: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(max_power + 1);
        let mut v = u.to_vec();
        for i in 0..=max_power {
            if i % 2 == 0 {
                if i > 0 {
                    v = self.apply_collocated(&v);
                }
                out.push(self.inner(&v, &v));
            } else {
                out.push(self.dirichlet(&v));
            }
        }
        out
    }
}

/// Banded matrix realizing a radial differential operator on a grid.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    grid: Arc<RadialGrid>,
    band_matrix: BandMatrix,
    symbol: String,
    order: u32,
    mass: Vec<f64>,
}

impl DiscreteOperator {
    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn band_matrix(&self) -> &BandMatrix {
        &self.band_matrix
    }

    pub fn symbol(&self) -> &str {
        &self.symbol
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// Mass weights of the inner product the operator is self-adjoint in.
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn apply_values(&self, u: &[f64]) -> Vec<f64> {
        self.band_matrix.matvec(u)
    }

    pub fn apply(&self, u: &RadialFunction) -> Result<RadialFunction> {
        RadialFunction::from_values(&self.grid, self.apply_values(u.values()))
    }

    /// Composition `self ∘ other`.
    pub fn compose(&self, other: &Self, symbol: impl Into<String>) -> Self {
        Self {
            grid: Arc::clone(&self.grid),
            band_matrix: self.band_matrix.mul(&other.band_matrix),
            symbol: symbol.into(),
            order: self.order + other.order,
            mass: self.mass.clone(),
        }
    }

    /// ⟨u, w⟩ in the operator's mass inner product.
    pub fn inner(&self, u: &[f64], w: &[f64]) -> f64 {
        self.mass.iter().zip(u.iter().zip(w)).map(|(m, (a, b))| m * a * b).sum()
    }
}

fn from_calculus(calc: &RadialCalculus, symbol: &str) -> DiscreteOperator {
    DiscreteOperator {
        grid: Arc::clone(&calc.grid),
        band_matrix: calc.laplacian.clone(),
        symbol: symbol.into(),
        order: 2,
        mass: calc.mass.clone(),
    }
}

/// Euclidean Δf = f'' + (N−1)f'/s in the Euclidean radius, realized on the geodesic grid.
pub fn euclidean_laplacian_radial(dims: &DimensionParams, grid: &Arc<RadialGrid>) -> DiscreteOperator {
    from_calculus(&RadialCalculus::new(grid, dims, Measure::Euclidean), "Delta")
}

/// Δ_g f = f'' + (N−1)coth(r) f' in the geodesic radius.
pub fn hyperbolic_laplacian_radial(dims: &DimensionParams, grid: &Arc<RadialGrid>) -> DiscreteOperator {
    from_calculus(&RadialCalculus::new(grid, dims, Measure::Hyperbolic), "Delta_g")
}

/// Independent assembly of Δ_g from its Euclidean-coordinate form
/// ((1−s²)/2)²Δf + (N−2)((1−s²)/2) s f_s.
pub fn hyperbolic_laplacian_euclidean_form(dims: &DimensionParams, grid: &Arc<RadialGrid>) -> DiscreteOperator {
    let calc = RadialCalculus::new(grid, dims, Measure::Euclidean);
    let n = grid.n_nodes();
    let (a, b): (Vec<f64>, Vec<f64>) = (0..n)
        .map(|i| {
            let e = grid.euclidean_radius(i);
            let half = 0.5 * e.one_minus_s2();
            // f_s = f_ξ / (s_r r_ξ)
            let s_xi = half * grid.jacobian()[i];
            (half * half, (dims.n() as f64 - 2.0) * half * e.s / s_xi)
        })
        .unzip();
    let mut main = calc.laplacian.clone();
    main.scale_rows(&a);
    let mut first = cell_derivative(n, grid.h());
    first.scale_rows(&b);
    let mut band = BandMatrix::zeros(n, n, 3, 3);
    for i in 0..n {
        for j in main.row_span(i) {
            band.add(i, j, main.get(i, j));
        }
        for j in first.row_span(i) {
            band.add(i, j, first.get(i, j));
        }
    }
    DiscreteOperator {
        grid: Arc::clone(grid),
        band_matrix: band,
        symbol: "Delta_g (Euclidean form)".into(),
        order: 2,
        mass: grid.mass_weights(dims, Measure::Hyperbolic),
    }
}

/// Zeroth-order shifts of the GJMS factors: factor j is −Δ_g + (j(j−1) − N(N−2)/4).
pub fn gjms_factor_shifts(k: u32, n: u32) -> Vec<i64> {
    let base = (n as i64) * (n as i64 - 2) / 4;
    (1..=k as i64).map(|j| j * (j - 1) - base).collect()
}

/// Coefficients a_i of P_k = Σ a_i (−Δ_g)^i.
pub fn gjms_polynomial(dims: &DimensionParams) -> Vec<f64> {
    let mut coeffs = vec![1.0];
    for shift in gjms_factor_shifts(dims.k(), dims.n()) {
        // multiply by (x + shift)
        let mut next = vec![0.0; coeffs.len() + 1];
        for (i, c) in coeffs.iter().enumerate() {
            next[i + 1] += c;
            next[i] += shift as f64 * c;
        }
        coeffs = next;
    }
    coeffs
}

/// The second-order factors P₁ + j(j−1), j = 1..k, with P₁ = −Δ_g − N(N−2)/4.
pub fn gjms_factors(dims: &DimensionParams, grid: &Arc<RadialGrid>) -> Vec<DiscreteOperator> {
    let lap = hyperbolic_laplacian_radial(dims, grid);
    gjms_factor_shifts(dims.k(), dims.n())
        .into_iter()
        .enumerate()
        .map(|(j, shift)| {
            let mut m = lap.band_matrix.clone();
            m.scale(-1.0);
            m.add_scaled_identity(shift as f64);
            DiscreteOperator {
                grid: Arc::clone(grid),
                band_matrix: m,
                symbol: format!("P1 + {}", (j + 1) * j),
                order: 2,
                mass: lap.mass.clone(),
            }
        })
        .collect()
}

/// Banded P_k = ∏_{j=1}^{k}(P₁ + j(j−1)), multiplied factor by factor.
pub fn gjms_assemble(dims: &DimensionParams, grid: &Arc<RadialGrid>) -> Result<DiscreteOperator> {
    if dims.n() != 2 * dims.k() {
        return Err(Error::UnsupportedDimension(format!("GJMS assembly needs N = 2k, got N = {}", dims.n())));
    }
    let factors = gjms_factors(dims, grid);
    let mut op = factors[0].clone();
    for f in &factors[1..] {
        op = op.compose(f, "");
    }
    op.symbol = format!("P_{}", dims.k());
    Ok(op)
}

/// Energies of a radial profile with grid metadata and clamp diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    /// ⟨P_k u, u⟩ in L²(dv_g)
    pub gjms_energy: f64,
    /// ∫_{B^N} |∇^k u|² dx
    pub euclidean_energy: f64,
    /// Σ_{m=0}^{k} ∫|∇_g^m u|²_g dv_g
    pub sobolev_energy: f64,
    pub n_nodes: usize,
    pub r_max: f64,
    pub grading: f64,
    pub truncation_warning: bool,
    pub diagnostics: Vec<String>,
}

/// Applies the negativity clamp: values in (−1e−12·scale, 0) become 0.
fn clamp_energy(name: &str, value: f64, scale: f64, diagnostics: &mut Vec<String>) -> Result<f64> {
    if !value.is_finite() {
        return Err(Error::Discretization(format!("{name} is not finite")));
    }
    if value >= 0.0 {
        return Ok(value);
    }
    if value > -1e-12 * scale {
        diagnostics.push(format!("{name} = {value:e} clamped to 0"));
        Ok(0.0)
    } else {
        Err(Error::Discretization(format!("{name} = {value:e} is negative beyond roundoff (scale {scale:e})")))
    }
}

/// ⟨P_k u, u⟩ from the split forms and the clamp scale Σ|a_i Q_i|.
fn gjms_from_forms(dims: &DimensionParams, forms: &[f64]) -> (f64, f64) {
    let a = gjms_polynomial(dims);
    let value = a.iter().zip(forms).map(|(c, q)| c * q).sum();
    let scale = a.iter().zip(forms).map(|(c, q)| (c * q).abs()).sum();
    (value, scale)
}

/// ∫_{B^N}|∇^k v|² dx: |Δ^{k/2}v|² for even k, |∇Δ^{(k−1)/2}v|² for odd k.
pub fn euclidean_gradk_energy(v: &RadialFunction, dims: &DimensionParams) -> Result<f64> {
    let calc = RadialCalculus::new(v.grid(), dims, Measure::Euclidean);
    let k = dims.k() as usize;
    let forms = calc.power_forms(v.values(), k);
    let mut diag = Vec::new();
    clamp_energy("Euclidean energy", forms[k], forms[k].abs(), &mut diag)
}

/// T_m = ∫|∇_g^m u|²_g dv_g for m = 0..=max_order.
pub fn sobolev_terms(u: &RadialFunction, dims: &DimensionParams, max_order: usize) -> Vec<f64> {
    RadialCalculus::new(u.grid(), dims, Measure::Hyperbolic).power_forms(u.values(), max_order)
}

/// Σ_{m=0}^{k} ∫|∇_g^m u|²_g dv_g.
pub fn sobolev_energy(u: &RadialFunction, dims: &DimensionParams) -> Result<f64> {
    let total: f64 = sobolev_terms(u, dims, dims.k() as usize).iter().sum();
    if total.is_finite() {
        Ok(total)
    } else {
        Err(Error::Discretization("Sobolev energy is not finite".into()))
    }
}

/// All three energies of a compactly supported radial profile.
pub fn gjms_energy(u: &RadialFunction, dims: &DimensionParams) -> Result<EnergyReport> {
    let k = dims.k() as usize;
    let hyper = RadialCalculus::new(u.grid(), dims, Measure::Hyperbolic);
    let forms = hyper.power_forms(u.values(), k);
    let (value, scale) = gjms_from_forms(dims, &forms);
    let mut diagnostics = Vec::new();
    let gjms = clamp_energy("GJMS energy", value, scale, &mut diagnostics)?;
    let euclid = RadialCalculus::new(u.grid(), dims, Measure::Euclidean).power_forms(u.values(), k)[k];
    let euclidean_energy = clamp_energy("Euclidean energy", euclid, euclid.abs(), &mut diagnostics)?;
    let truncation_warning = u.truncation_flag(dims);
    if truncation_warning {
        diagnostics.push("profile does not vanish before R_max".into());
    }
    let grid = u.grid();
    Ok(EnergyReport {
        gjms_energy: gjms,
        euclidean_energy,
        sobolev_energy: forms.iter().sum(),
        n_nodes: grid.n_nodes(),
        r_max: grid.r_max(),
        grading: grid.grading(),
        truncation_warning,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ball_model::{integrate_radial_euclidean, RadialGrid};
    use proptest::prelude::*;

    fn dims(k: u32) -> DimensionParams {
        DimensionParams::new(k).unwrap()
    }

    fn grid(n: usize, r: f64, g: f64) -> Arc<RadialGrid> {
        Arc::new(RadialGrid::new(n, r, g).unwrap())
    }

    /// (1 − s²/a²)^q₊ in the Euclidean radius.
    fn bump(g: &Arc<RadialGrid>, a: f64, q: i32) -> RadialFunction {
        RadialFunction::from_euclidean_fn(g, |s| if s < a { (1.0 - s * s / (a * a)).powi(q) } else { 0.0 })
            .unwrap()
            .with_support(2.0 * a.atanh())
    }

    #[test]
    fn factor_shift_reduction() {
        for k in 1..=6u32 {
            let shifts = gjms_factor_shifts(k, 2 * k);
            assert_eq!(*shifts.last().unwrap(), 0);
            assert_eq!(shifts[0], -((2 * k as i64) * (2 * k as i64 - 2) / 4));
        }
        assert_eq!(gjms_factor_shifts(1, 2), vec![0]);
        assert_eq!(gjms_polynomial(&dims(2)), vec![0.0, -2.0, 1.0]);
        assert_eq!(gjms_polynomial(&dims(3)), vec![0.0, 24.0, -10.0, 1.0]);
    }

    #[test]
    fn constants_are_annihilated_inside() {
        let g = grid(200, 6.0, 1.5);
        for k in 1..=3 {
            for op in [hyperbolic_laplacian_radial(&dims(k), &g), euclidean_laplacian_radial(&dims(k), &g)] {
                let out = op.apply_values(&vec![1.0; 200]);
                let m = op.band_matrix();
                for (i, v) in out.iter().enumerate().take(196) {
                    let row: f64 = m.row_span(i).map(|j| m.get(i, j).abs()).sum();
                    assert!(v.abs() <= 1e-13 * row, "{} node {i}: {v}", op.symbol());
                }
            }
        }
    }

    #[test]
    fn euclidean_laplacian_of_s_squared_in_n4() {
        let g = grid(400, 2.0, 0.5);
        let op = euclidean_laplacian_radial(&dims(2), &g);
        let u: Vec<f64> = g.euclidean_nodes().iter().map(|s| s * s).collect();
        let out = op.apply_values(&u);
        for (i, v) in out.iter().enumerate().take(390).skip(20) {
            assert!((v - 8.0).abs() < 1e-6, "node {i}: {v}");
        }
    }

    #[test]
    fn fundamental_solution_is_harmonic() {
        let g = grid(400, 3.0, 0.0);
        let op = euclidean_laplacian_radial(&dims(2), &g);
        let u: Vec<f64> = g.euclidean_nodes().iter().map(|s| s.powi(-2)).collect();
        let out = op.apply_values(&u);
        let m = op.band_matrix();
        for i in 40..380 {
            let terms: f64 = m.row_span(i).map(|j| (m.get(i, j) * u[j]).abs()).sum();
            assert!(out[i].abs() < 1e-6 * terms, "node {i}: {} vs {terms}", out[i]);
        }
    }

    #[test]
    fn hyperbolic_laplacian_of_s_squared() {
        for k in 1..=3 {
            let d = dims(k);
            let nf = d.n() as f64;
            let g = grid(800, 4.0, 1.0);
            for op in [hyperbolic_laplacian_radial(&d, &g), hyperbolic_laplacian_euclidean_form(&d, &g)] {
                let u: Vec<f64> = g.euclidean_nodes().iter().map(|s| s * s).collect();
                let out = op.apply_values(&u);
                for i in 100..780 {
                    let s = g.euclidean_nodes()[i];
                    let q = 0.5 * (1.0 - s * s);
                    let exact = q * q * 2.0 * nf + (nf - 2.0) * q * 2.0 * s * s;
                    assert!((out[i] - exact).abs() < 1e-7, "{} k = {k} node {i}", op.symbol());
                }
            }
        }
    }

    #[test]
    fn geodesic_form_matches_coth_form() {
        // Δ_g e^{−r²} = (4r² − 2)e^{−r²} − 2r(N−1)coth(r) e^{−r²}
        for k in 1..=3 {
            let d = dims(k);
            let mut errs = vec![];
            for n in [100, 200, 400] {
                let g = grid(n, 8.0, 2.0);
                let op = hyperbolic_laplacian_radial(&d, &g);
                let u: Vec<f64> = g.geodesic_nodes().iter().map(|r| (-r * r).exp()).collect();
                let out = op.apply_values(&u);
                let mut err: f64 = 0.0;
                for (i, &r) in g.geodesic_nodes().iter().enumerate() {
                    if !(0.5..=6.0).contains(&r) {
                        continue;
                    }
                    let e = (-r * r).exp();
                    let exact = (4.0 * r * r - 2.0) * e - 2.0 * r * (d.n() as f64 - 1.0) / r.tanh() * e;
                    err = err.max((out[i] - exact).abs());
                }
                errs.push(err);
            }
            assert!(errs[2] < errs[1] / 10.0 && errs[1] < errs[0] / 10.0, "k = {k}: {errs:?}");
        }
    }

    #[test]
    fn dual_assembly_agrees_at_scheme_order() {
        for k in 1..=3 {
            let d = dims(k);
            let mut errs = vec![];
            for n in [200, 400, 800] {
                let g = grid(n, 4.0, 1.0);
                let u: Vec<f64> = g
                    .euclidean_nodes()
                    .iter()
                    .map(|s| if *s < 0.8 { (1.0 - s * s / 0.64).powi(8) } else { 0.0 })
                    .collect();
                let a = hyperbolic_laplacian_radial(&d, &g).apply_values(&u);
                let b = hyperbolic_laplacian_euclidean_form(&d, &g).apply_values(&u);
                let err = g
                    .geodesic_nodes()
                    .iter()
                    .zip(a.iter().zip(&b))
                    .filter(|(r, _)| **r > 0.4)
                    .map(|(_, (x, y))| (x - y).abs())
                    .fold(0.0, f64::max);
                errs.push(err);
            }
            // in two dimensions the forms coincide up to roundoff
            let at_roundoff = errs.iter().all(|e| *e < 1e-9);
            assert!(at_roundoff || (errs[1] < errs[0] / 8.0 && errs[2] < errs[1] / 8.0), "k = {k}: {errs:?}");
        }
    }

    #[test]
    fn p2_matches_expanded_paneitz_form() {
        // P₂ = Δ_g² + 2Δ_g for N = 4
        let d = dims(2);
        let g = grid(120, 5.0, 1.0);
        let p2 = gjms_assemble(&d, &g).unwrap();
        let lap = hyperbolic_laplacian_radial(&d, &g);
        let mut expanded = lap.band_matrix().mul(lap.band_matrix());
        let mut twice = lap.band_matrix().clone();
        twice.scale(2.0);
        for i in 0..120 {
            for j in twice.row_span(i) {
                expanded.add(i, j, twice.get(i, j));
            }
        }
        let scale = expanded.norm_inf();
        for i in 0..120 {
            for j in expanded.row_span(i) {
                assert!((expanded.get(i, j) - p2.band_matrix().get(i, j)).abs() < 1e-13 * scale);
            }
        }
        assert_eq!(p2.band_matrix().bandwidth(), (6, 6));
    }

    #[test]
    fn weighted_gjms_matrix_is_symmetric() {
        for k in 1..=3 {
            let d = dims(k);
            let g = grid(150, 5.0, 1.5);
            let p = gjms_assemble(&d, &g).unwrap();
            let m = p.band_matrix();
            let w = p.mass();
            let scale = (0..150)
                .map(|i| w[i] * m.row_span(i).map(|j| m.get(i, j).abs()).fold(0.0, f64::max))
                .fold(0.0, f64::max);
            for i in 0..150 {
                for j in m.row_span(i) {
                    assert!((w[i] * m.get(i, j) - w[j] * m.get(j, i)).abs() <= 1e-13 * scale, "k = {k} ({i}, {j})");
                }
            }
        }
    }

    #[test]
    fn p1_is_minus_laplacian_in_two_dimensions() {
        let g = grid(64, 4.0, 1.0);
        let p1 = gjms_assemble(&dims(1), &g).unwrap();
        let lap = hyperbolic_laplacian_radial(&dims(1), &g);
        for i in 0..64 {
            for j in lap.band_matrix().row_span(i) {
                assert_eq!(p1.band_matrix().get(i, j), -lap.band_matrix().get(i, j));
            }
        }
    }

    #[test]
    fn zero_profile_has_zero_energies() {
        let g = grid(100, 3.0, 1.0);
        let r = gjms_energy(&RadialFunction::zeros(&g), &dims(2)).unwrap();
        assert_eq!((r.gjms_energy, r.euclidean_energy, r.sobolev_energy), (0.0, 0.0, 0.0));
    }

    #[test]
    fn k1_energy_matches_first_derivative_quadrature() {
        // v = (1 − s²/a²)^6: ∫|v'|² 2πs ds computed by Gauss–Legendre in s
        let a: f64 = 0.6;
        let exact = crate::quadrature::integrate_panels(&[0.0, a], 4, crate::quadrature::gl20(), |s| {
            let dv = 6.0 * (1.0 - s * s / (a * a)).powi(5) * (-2.0 * s / (a * a));
            dv * dv * 2.0 * std::f64::consts::PI * s
        });
        let g = grid(400, 3.0, 1.5);
        let v = bump(&g, a, 6);
        let e = euclidean_gradk_energy(&v, &dims(1)).unwrap();
        assert!(((e - exact) / exact).abs() < 1e-7, "{e} vs {exact}");
        let r = gjms_energy(&v, &dims(1)).unwrap();
        assert!(((r.gjms_energy - exact) / exact).abs() < 1e-7);
    }

    #[test]
    fn sobolev_zeroth_term_is_l2_norm() {
        let g = grid(200, 4.0, 1.0);
        let d = dims(2);
        let u = bump(&g, 0.7, 10);
        let t = sobolev_terms(&u, &d, 2);
        let sq = RadialFunction::from_values(&g, u.values().iter().map(|v| v * v).collect()).unwrap();
        let l2 = crate::ball_model::integrate_radial(&sq, &d).unwrap();
        assert!((t[0] - l2).abs() < 1e-9 * l2, "{} vs {l2}", t[0]);
        let _ = integrate_radial_euclidean(&sq, &d).unwrap();
    }

    fn random_profile(g: &Arc<RadialGrid>, coef: &[f64], widths: &[f64]) -> RadialFunction {
        RadialFunction::from_euclidean_fn(g, |s| {
            coef.iter().zip(widths).map(|(c, a)| if s < *a { c * (1.0 - s * s / (a * a)).powi(10) } else { 0.0 }).sum()
        })
        .unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn gjms_is_symmetric_and_positive(
            k in 1u32..=3,
            cu in proptest::collection::vec(-2.0f64..2.0, 3),
            cw in proptest::collection::vec(-2.0f64..2.0, 3),
            wu in proptest::collection::vec(0.3f64..0.9, 3),
            ww in proptest::collection::vec(0.3f64..0.9, 3),
        ) {
            let d = dims(k);
            let g = grid(160, 4.0, 1.0);
            let (u, w) = (random_profile(&g, &cu, &wu), random_profile(&g, &cw, &ww));
            let p = gjms_assemble(&d, &g).unwrap();
            let (pu, pw) = (p.apply_values(u.values()), p.apply_values(w.values()));
            let lhs = p.inner(&pu, w.values());
            let rhs = p.inner(u.values(), &pw);
            // backward-error scale: the bilinear form of |W P| on |u|, |w|
            let m = p.band_matrix();
            let abs_form = |x: &[f64], y: &[f64]| -> f64 {
                (0..x.len())
                    .map(|i| p.mass()[i] * y[i].abs() * m.row_span(i).map(|j| (m.get(i, j) * x[j]).abs()).sum::<f64>())
                    .sum()
            };
            let scale = abs_form(u.values(), w.values()).max(abs_form(w.values(), u.values()));
            prop_assert!((lhs - rhs).abs() <= 1e-10 * scale, "{} {} {}", lhs, rhs, scale);
            let e = gjms_energy(&u, &d).unwrap();
            prop_assert!(e.gjms_energy >= 0.0);
        }

        #[test]
        fn operators_are_linear(
            a in -3.0f64..3.0, b in -3.0f64..3.0,
            cu in proptest::collection::vec(-2.0f64..2.0, 3),
            cw in proptest::collection::vec(-2.0f64..2.0, 3),
        ) {
            let g = grid(100, 4.0, 1.0);
            let d = dims(2);
            let widths = [0.4, 0.6, 0.8];
            let (u, w) = (random_profile(&g, &cu, &widths), random_profile(&g, &cw, &widths));
            let p = gjms_assemble(&d, &g).unwrap();
            let combo = u.scaled(a).axpy(b, &w);
            let lhs = p.apply_values(combo.values());
            let (pu, pw) = (p.apply_values(u.values()), p.apply_values(w.values()));
            let m = p.band_matrix();
            for i in 0..100 {
                let scale: f64 = m
                    .row_span(i)
                    .map(|j| m.get(i, j).abs() * (a.abs() * u.values()[j].abs() + b.abs() * w.values()[j].abs()))
                    .sum();
                prop_assert!((lhs[i] - a * pu[i] - b * pw[i]).abs() <= 1e-13 * scale);
            }
        }
    }
}
