//! ⟨P_k u, u⟩_{dv_g} against the exact ∫|∇^k u|²dx on polynomial bumps.

use std::sync::Arc;

use hyperadams_core::operators::gjms_energy;
use hyperadams_core::{DimensionParams, PolynomialBump, RadialGrid};

const BUMPS: [(f64, u32); 3] = [(0.5, 8), (0.6, 10), (0.7, 12)];

fn relative_errors(k: u32, bump: PolynomialBump) -> Vec<f64> {
    let dims = DimensionParams::new(k).unwrap();
    let exact = bump.exact_energy(k).unwrap();
    [100, 200, 400]
        .iter()
        .map(|&n| {
            let grid = Arc::new(RadialGrid::new(n, 2.0, 0.0).unwrap());
            let report = gjms_energy(&bump.sample(&grid).unwrap(), &dims).unwrap();
            assert!(!report.truncation_warning);
            (report.gjms_energy - exact).abs() / exact
        })
        .collect()
}

#[test]
fn identity_holds_at_fourth_order() {
    for k in 1..=3 {
        for (a, q) in BUMPS {
            let errs = relative_errors(k, PolynomialBump::new(a, q).unwrap());
            assert!(errs[2] <= 1e-4, "k = {k}, a = {a}: {errs:?}");
            for w in errs.windows(2) {
                let order = (w[0] / w[1]).log2();
                assert!(order >= 3.5, "k = {k}, a = {a}: order {order}, {errs:?}");
            }
        }
    }
}

#[test]
fn euclidean_and_hyperbolic_forms_agree() {
    let grid = Arc::new(RadialGrid::new(400, 2.0, 0.0).unwrap());
    for k in 1..=3 {
        let dims = DimensionParams::new(k).unwrap();
        let u = PolynomialBump::new(0.6, 10).unwrap().sample(&grid).unwrap();
        let r = gjms_energy(&u, &dims).unwrap();
        assert!((r.gjms_energy - r.euclidean_energy).abs() <= 1e-5 * r.euclidean_energy);
    }
}
