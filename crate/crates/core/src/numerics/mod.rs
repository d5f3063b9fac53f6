//! Numerical kernels shared by the models, the fitter and the simulator.

pub mod bvn;
pub mod diff;
pub mod linalg;
pub mod normal;
pub mod optimize;

pub use bvn::{bvn_rect, upper_orthant, Rect2};
pub use diff::{num_grad, num_hessian, num_jacobian};
pub use normal::{erfc, std_normal_cdf, std_normal_pdf};
pub use optimize::{maximize, Maximum, Objective, OptimOptions};

/// Pairwise (cascade) summation; the result depends only on the order of `values`.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        values.iter().sum()
    } else {
        let mid = values.len() / 2;
        pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
    }
}

pub fn mean(values: &[f64]) -> f64 {
    pairwise_sum(values) / values.len() as f64
}

/// Population variance `P_n (v - P_n v)^2`.
pub fn variance(values: &[f64]) -> f64 {
    let m = mean(values);
    let dev: Vec<f64> = values.iter().map(|v| (v - m) * (v - m)).collect();
    mean(&dev)
}
