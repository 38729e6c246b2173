//! Helpers shared by the integration tests.
#![allow(dead_code)]

use wforge_core::calc::StencilOrder;
use wforge_core::immersion::{generate, SurfaceSpec};
use wforge_core::meancurv::Analysis;
use wforge_core::tolerances::acceptance::ROUNDOFF_FLOOR;

pub fn analyze_spec(spec: &SurfaceSpec, n: usize, stencil: StencilOrder) -> Analysis {
    let f =
        generate(spec, n, n, stencil).unwrap_or_else(|e| panic!("{} at {n}²: {e}", spec.name()));
    Analysis::new(f).unwrap_or_else(|e| panic!("{} at {n}²: {e}", spec.name()))
}

pub fn analyze(name: &str, n: usize) -> Analysis {
    analyze_spec(
        &SurfaceSpec::from_name(name).unwrap(),
        n,
        StencilOrder::default(),
    )
}

/// `log₂(r_k / r_{k+1})` for residuals on grids that double.
pub fn observed_orders(r: &[f64]) -> Vec<f64> {
    r.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// Every halving either reduces the residual by `2^p` or lands below the
/// roundoff floor, where no order can be observed.
pub fn converges(r: &[f64], p: f64) -> bool {
    r.windows(2)
        .all(|w| w[1] < ROUNDOFF_FLOOR || (w[0] / w[1]).log2() >= p)
}

pub fn fmt(r: &[f64]) -> String {
    let vals: Vec<String> = r.iter().map(|x| format!("{x:.2e}")).collect();
    let ords: Vec<String> = observed_orders(r)
        .iter()
        .map(|x| format!("{x:.2}"))
        .collect();
    format!("[{}] orders [{}]", vals.join(", "), ords.join(", "))
}
