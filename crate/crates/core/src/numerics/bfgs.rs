//! BFGS quasi-Newton maximizer with a strong-Wolfe line search.

use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 500;
const WOLFE_C1: f64 = 1e-4;
const WOLFE_C2: f64 = 0.9;

#[derive(Debug, Clone)]
pub struct Optimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

/// Maximizes `f` starting at `x0`, with gradients by central finite
/// differences (step cbrt(eps) * (1 + |x_i|)).
pub fn maximize_bfgs<F>(f: F, x0: &[f64], tol: f64) -> Result<Optimum>
where
    F: Fn(&[f64]) -> f64,
{
    let fd = |x: &[f64]| finite_difference_gradient(&f, x);
    maximize_bfgs_with_grad(&f, fd, x0, tol)
}

/// Maximizes `f` with a user-supplied gradient.
///
/// Returns once the gradient norm drops below `tol * (1 + |f|)`; errors with
/// `OptimizerDiverged` after 500 iterations or on non-finite values.
pub fn maximize_bfgs_with_grad<F, G>(f: F, grad: G, x0: &[f64], tol: f64) -> Result<Optimum>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    // Minimize the negation.
    let obj = |x: &[f64]| -f(x);
    let obj_grad = |x: &[f64]| {
        let mut g = grad(x);
        for gi in &mut g {
            *gi = -*gi;
        }
        g
    };

    let n = x0.len();
    let mut x = x0.to_vec();
    let mut fx = obj(&x);
    if !fx.is_finite() {
        return Err(Error::OptimizerDiverged(
            "objective is not finite at the starting point".into(),
        ));
    }
    let mut g = obj_grad(&x);
    let mut h = identity(n); // inverse Hessian approximation

    for iter in 0..=MAX_ITERATIONS {
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::OptimizerDiverged("non-finite gradient".into()));
        }
        let gnorm = norm(&g);
        if gnorm < tol * (1.0 + fx.abs()) {
            return Ok(Optimum {
                x,
                value: -fx,
                iterations: iter,
            });
        }
        if iter == MAX_ITERATIONS {
            break;
        }

        let mut p = neg_mat_vec(&h, &g);
        if dot(&p, &g) >= 0.0 {
            // Non-descent direction; reset to steepest descent.
            h = identity(n);
            p = g.iter().map(|v| -v).collect();
        }

        let (alpha, fx_new) = line_search(&obj, &obj_grad, &x, &p, fx, dot(&g, &p))?;

        let x_new: Vec<f64> = x.iter().zip(&p).map(|(xi, pi)| xi + alpha * pi).collect();
        let g_new = obj_grad(&x_new);
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) {
            bfgs_update(&mut h, &s, &y, sy);
        }
        x = x_new;
        fx = fx_new;
        g = g_new;
    }

    Err(Error::OptimizerDiverged(format!(
        "no convergence within {MAX_ITERATIONS} iterations"
    )))
}

pub fn finite_difference_gradient<F>(f: &F, x: &[f64]) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let step_scale = f64::EPSILON.cbrt();
    let mut g = vec![0.0; x.len()];
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        let h = step_scale * (1.0 + x[i].abs());
        xp[i] = x[i] + h;
        let fp = f(&xp);
        xp[i] = x[i] - h;
        let fm = f(&xp);
        xp[i] = x[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
    g
}

/// Strong-Wolfe line search (bracket and zoom). Returns (alpha, f(x + alpha p)).
fn line_search<F, G>(
    f: &F,
    grad: &G,
    x: &[f64],
    p: &[f64],
    phi0: f64,
    dphi0: f64,
) -> Result<(f64, f64)>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    if dphi0 >= 0.0 {
        return Err(Error::OptimizerDiverged(
            "line search started with non-descent direction".into(),
        ));
    }
    let phi = |a: f64| f(&step(x, p, a));
    let dphi = |a: f64| dot(&grad(&step(x, p, a)), p);

    let alpha_max = 1e10;
    let mut a_prev = 0.0;
    let mut phi_prev = phi0;
    let mut a = 1.0;

    for i in 0..60 {
        let phi_a = phi(a);
        if !phi_a.is_finite() || phi_a > phi0 + WOLFE_C1 * a * dphi0 || (phi_a >= phi_prev && i > 0)
        {
            return zoom(&phi, &dphi, phi0, dphi0, a_prev, phi_prev, a);
        }
        let dphi_a = dphi(a);
        if dphi_a.abs() <= -WOLFE_C2 * dphi0 {
            return Ok((a, phi_a));
        }
        if dphi_a >= 0.0 {
            return zoom(&phi, &dphi, phi0, dphi0, a, phi_a, a_prev);
        }
        a_prev = a;
        phi_prev = phi_a;
        a = (2.0 * a).min(alpha_max);
        if a >= alpha_max {
            return Err(Error::OptimizerDiverged(
                "line search exceeded maximum step".into(),
            ));
        }
    }
    Err(Error::OptimizerDiverged("line search failed to bracket".into()))
}

/// Zoom phase: lo always satisfies Armijo, the minimizer is bracketed by lo/hi.
fn zoom<P, D>(
    phi: &P,
    dphi: &D,
    phi0: f64,
    dphi0: f64,
    mut lo: f64,
    mut phi_lo: f64,
    mut hi: f64,
) -> Result<(f64, f64)>
where
    P: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    for _ in 0..60 {
        let dphi_lo = dphi(lo);
        // Quadratic interpolation through (lo, phi_lo, dphi_lo) and (hi, phi_hi);
        // exact for quadratic objectives, bisection as the safeguard.
        let d = hi - lo;
        let phi_hi = phi(hi);
        let denom = 2.0 * (phi_hi - phi_lo - dphi_lo * d);
        let mut a = if denom.abs() > 1e-300 && phi_hi.is_finite() {
            lo - dphi_lo * d * d / denom
        } else {
            lo + 0.5 * d
        };
        let (lo_b, hi_b) = if d > 0.0 { (lo, hi) } else { (hi, lo) };
        let margin = 0.05 * d.abs();
        if !(a.is_finite()) || a < lo_b + margin || a > hi_b - margin {
            a = lo + 0.5 * d;
        }

        let phi_a = phi(a);
        if !phi_a.is_finite() || phi_a > phi0 + WOLFE_C1 * a * dphi0 || phi_a >= phi_lo {
            hi = a;
        } else {
            let dphi_a = dphi(a);
            if dphi_a.abs() <= -WOLFE_C2 * dphi0 {
                return Ok((a, phi_a));
            }
            if dphi_a * (hi - lo) >= 0.0 {
                hi = lo;
            }
            lo = a;
            phi_lo = phi_a;
        }
        if (hi - lo).abs() < 1e-14 * (1.0 + lo.abs()) {
            return Ok((lo, phi_lo));
        }
    }
    // The bracket collapsed without meeting the curvature condition; lo still
    // satisfies sufficient decrease.
    if phi_lo < phi0 {
        Ok((lo, phi_lo))
    } else {
        Err(Error::OptimizerDiverged("zoom failed".into()))
    }
}

fn step(x: &[f64], p: &[f64], a: f64) -> Vec<f64> {
    x.iter().zip(p).map(|(xi, pi)| xi + a * pi).collect()
}

fn identity(n: usize) -> Vec<f64> {
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        h[i * n + i] = 1.0;
    }
    h
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn neg_mat_vec(h: &[f64], g: &[f64]) -> Vec<f64> {
    let n = g.len();
    (0..n)
        .map(|i| -(0..n).map(|j| h[i * n + j] * g[j]).sum::<f64>())
        .collect()
}

/// H <- (I - rho s y') H (I - rho y s') + rho s s'
fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| h[i * n + j] * y[j]).sum::<f64>())
        .collect();
    let yhy = dot(y, &hy);
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] += -rho * (s[i] * hy[j] + hy[i] * s[j])
                + rho * rho * yhy * s[i] * s[j]
                + rho * s[i] * s[j];
        }
    }
}
