//! Shared numerical kernels: adaptive Gauss-Kronrod quadrature, a BFGS
//! maximizer, and standard normal special functions.

mod bfgs;
mod normal;
mod quadrature;

pub use bfgs::{finite_difference_gradient, maximize_bfgs, maximize_bfgs_with_grad, Optimum};
pub use normal::{normal_cdf, normal_pdf, normal_quantile, z_for_level};
pub use quadrature::{
    integrate, integrate_gk, QuadratureResult, DEFAULT_ABS_TOL, DEFAULT_REL_TOL, MAX_SUBDIVISIONS,
};
