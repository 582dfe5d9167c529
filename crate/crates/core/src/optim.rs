//! Box-constrained quasi-Newton minimization with projected gradients.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Options for the Step-1 optimizer, readable from a CLI config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimOptions {
    /// Projected-gradient infinity-norm tolerance.
    pub tol: f64,
    /// Iteration cap per multistart.
    pub max_iter: usize,
    /// Number of fixed multistart points (capped at the recipe length).
    pub multistarts: usize,
    /// Lower bound for omega.
    pub omega_lo: f64,
    /// Upper bound for omega as a multiple of mean |eps|^delta.
    pub omega_hi_factor: f64,
    /// Upper bound for alpha_plus and alpha_minus.
    pub alpha_hi: f64,
    /// Upper bound for beta. Stationarity is intentionally not imposed.
    pub beta_hi: f64,
    /// Tie alpha_plus = alpha_minus during optimization.
    pub symmetric: bool,
    /// Initialization rule for the volatility recursion.
    pub init: crate::types::InitRule,
}

impl Default for OptimOptions {
    fn default() -> Self {
        OptimOptions {
            tol: 1e-8,
            max_iter: 500,
            multistarts: 8,
            omega_lo: 1e-8,
            omega_hi_factor: 10.0,
            alpha_hi: 5.0,
            beta_hi: 0.9999,
            symmetric: false,
            init: crate::types::InitRule::SampleMoment,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BoxOptResult {
    pub x: DVector<f64>,
    pub value: f64,
    pub pg_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn clamp(x: &DVector<f64>, lo: &[f64], hi: &[f64]) -> DVector<f64> {
    DVector::from_iterator(
        x.len(),
        x.iter()
            .enumerate()
            .map(|(i, &v)| v.clamp(lo[i], hi[i])),
    )
}

fn projected_gradient(x: &DVector<f64>, g: &DVector<f64>, lo: &[f64], hi: &[f64]) -> DVector<f64> {
    const EDGE: f64 = 1e-10;
    DVector::from_iterator(
        x.len(),
        (0..x.len()).map(|i| {
            if (x[i] <= lo[i] + EDGE && g[i] > 0.0) || (x[i] >= hi[i] - EDGE && g[i] < 0.0) {
                0.0
            } else {
                g[i]
            }
        }),
    )
}

fn active_mask(x: &DVector<f64>, g: &DVector<f64>, lo: &[f64], hi: &[f64]) -> Vec<bool> {
    const EDGE: f64 = 1e-10;
    (0..x.len())
        .map(|i| (x[i] <= lo[i] + EDGE && g[i] > 0.0) || (x[i] >= hi[i] - EDGE && g[i] < 0.0))
        .collect()
}

/// Projected BFGS with backtracking Armijo line search. The inverse Hessian
/// approximation is reset whenever the active set changes.
pub fn minimize_box(
    f: &mut dyn FnMut(&DVector<f64>) -> (f64, DVector<f64>),
    x0: &DVector<f64>,
    lo: &[f64],
    hi: &[f64],
    tol: f64,
    max_iter: usize,
) -> BoxOptResult {
    let n = x0.len();
    let mut x = clamp(x0, lo, hi);
    let (mut fx, mut g) = f(&x);
    let mut h_inv = DMatrix::<f64>::identity(n, n);
    let mut mask = active_mask(&x, &g, lo, hi);
    let mut iterations = 0usize;

    for _ in 0..max_iter {
        let pg = projected_gradient(&x, &g, lo, hi);
        let pg_norm = pg.amax();
        if pg_norm < tol {
            return BoxOptResult {
                x,
                value: fx,
                pg_norm,
                iterations,
                converged: true,
            };
        }
        iterations += 1;

        // quasi-Newton direction on the free subspace
        let mut d = -(&h_inv * &g);
        for i in 0..n {
            if mask[i] {
                d[i] = 0.0;
            }
        }
        if d.dot(&g) >= 0.0 {
            d = -pg.clone();
            h_inv = DMatrix::identity(n, n);
        }

        // projected backtracking line search
        let mut alpha = 1.0f64;
        let mut stepped = false;
        let mut x_new = x.clone();
        let mut f_new = fx;
        let mut g_new = g.clone();
        for _ in 0..60 {
            let cand = clamp(&(&x + alpha * &d), lo, hi);
            let pred = g.dot(&(&cand - &x));
            if pred < 0.0 {
                let (fc, gc) = f(&cand);
                if fc <= fx + 1e-4 * pred {
                    x_new = cand;
                    f_new = fc;
                    g_new = gc;
                    stepped = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !stepped {
            // try plain projected steepest descent before giving up
            let mut alpha = 1.0f64;
            for _ in 0..60 {
                let cand = clamp(&(&x - alpha * &pg), lo, hi);
                let pred = g.dot(&(&cand - &x));
                if pred < 0.0 {
                    let (fc, gc) = f(&cand);
                    if fc <= fx + 1e-4 * pred {
                        x_new = cand;
                        f_new = fc;
                        g_new = gc;
                        stepped = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
        }
        if !stepped {
            // no descent achievable at line-search resolution
            let pg_norm = projected_gradient(&x, &g, lo, hi).amax();
            return BoxOptResult {
                x,
                value: fx,
                pg_norm,
                iterations,
                converged: pg_norm < tol.max(1e-7),
            };
        }

        let s = &x_new - &x;
        let y = &g_new - &g;
        let sy = s.dot(&y);
        let new_mask = active_mask(&x_new, &g_new, lo, hi);
        if new_mask != mask {
            h_inv = DMatrix::identity(n, n);
        } else if sy > 1e-12 * s.norm() * y.norm() {
            let rho = 1.0 / sy;
            let id = DMatrix::<f64>::identity(n, n);
            let left = &id - rho * &s * y.transpose();
            let right = &id - rho * &y * s.transpose();
            h_inv = &left * h_inv * &right + rho * &s * s.transpose();
        }
        mask = new_mask;
        x = x_new;
        fx = f_new;
        g = g_new;
    }

    let pg_norm = projected_gradient(&x, &g, lo, hi).amax();
    BoxOptResult {
        x,
        value: fx,
        pg_norm,
        iterations,
        converged: pg_norm < tol,
    }
}
