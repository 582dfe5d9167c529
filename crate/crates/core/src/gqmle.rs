//! Step 1: generalized QMLE of the volatility parameters, with plug-in
//! information matrices and the estimator's asymptotic covariance.

use crate::error::{Error, Result};
use crate::linalg::{sym_inverse, sym_pinverse, symmetrize};
use crate::optim::{minimize_box, BoxOptResult, OptimOptions};
use crate::rng::pairwise_sum_by;
use crate::transform::{abs_pow, neg_pow, pos_pow};
use crate::types::{InitRule, ModelParams, SeriesData};
use crate::volatility::{volatility_path_fixed, VolatilityPath, SIGMA_DELTA_FLOOR};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Objective evaluation: mean loss, its gradient, and how often the
/// volatility floor was hit.
#[derive(Debug, Clone)]
pub struct ObjectiveEval {
    pub value: f64,
    pub gradient: [f64; 4],
    pub floor_hits: usize,
}

/// Mean generalized quasi-likelihood loss
/// (1/n) sum_t [ r log sigma_t(theta) + |eps_t|^r / sigma_t^r(theta) ]
/// and its analytic gradient through the volatility recursion.
pub fn gqmle_objective(
    theta: &ModelParams,
    series: &SeriesData,
    r: f64,
    init: &InitRule,
) -> Result<(f64, [f64; 4])> {
    let (e0, s0) = init.resolve(series, theta)?;
    let abs_r: Vec<f64> = series
        .values
        .iter()
        .map(|e| abs_pow(e.abs(), r))
        .collect();
    let ev = objective_eval(theta, series, &abs_r, r, e0, s0)?;
    Ok((ev.value, ev.gradient))
}

fn objective_eval(
    theta: &ModelParams,
    series: &SeriesData,
    abs_r: &[f64],
    r: f64,
    init_eps: f64,
    init_sigma_delta: f64,
) -> Result<ObjectiveEval> {
    let path = volatility_path_fixed(series, theta, init_eps, init_sigma_delta)?;
    let d = theta.delta;
    let rd = r / d;
    let n = series.len() as f64;
    let mut value = 0.0f64;
    let mut grad = [0.0f64; 4];
    let mut floor_hits = 0usize;
    for t in 0..series.len() {
        let mut s = path.sigma_delta[t];
        if s < SIGMA_DELTA_FLOOR {
            s = SIGMA_DELTA_FLOOR;
            floor_hits += 1;
        }
        // |eta_t|^r = |eps_t|^r / s^(r/delta)
        let s_rd = if rd == 1.0 { s } else { s.powf(rd) };
        let eta_r = abs_r[t] / s_rd;
        value += rd * s.ln() + eta_r;
        let w = rd * (1.0 - eta_r) / s;
        let g = &path.grad[t];
        grad[0] += w * g[0];
        grad[1] += w * g[1];
        grad[2] += w * g[2];
        grad[3] += w * g[3];
    }
    value /= n;
    for g in &mut grad {
        *g /= n;
    }
    if !value.is_finite() {
        return Err(Error::VolatilityOverflow { index: 0 });
    }
    Ok(ObjectiveEval {
        value,
        gradient: grad,
        floor_hits,
    })
}

/// Flags for solutions pinned at box boundaries. Alphas exactly at zero are
/// legitimate; omega or beta at a bound is suspicious.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct BoundaryFlags {
    pub alpha_plus_at_zero: bool,
    pub alpha_minus_at_zero: bool,
    pub omega_at_bound: bool,
    pub beta_at_upper: bool,
}

impl BoundaryFlags {
    pub fn any_alpha_at_zero(&self) -> bool {
        self.alpha_plus_at_zero || self.alpha_minus_at_zero
    }
}

/// Step-1 fit: the GQMLE with its residuals, fitted volatility path and the
/// plug-in information matrices (all in original data units).
#[derive(Debug, Clone)]
pub struct GqmleFit {
    pub params: ModelParams,
    pub r: f64,
    /// Mean loss at the optimum.
    pub objective: f64,
    /// eta_t(theta_hat) = eps_t / sigma_t(theta_hat).
    pub residuals: Vec<f64>,
    pub path: VolatilityPath,
    pub j_tilde: DMatrix<f64>,
    pub omega_tilde: DMatrix<f64>,
    pub h_tilde: DMatrix<f64>,
    pub gamma_tilde: DMatrix<f64>,
    /// kappa_hat_{2r} = ((1/n) sum |eta_t|^{2r} - 1) / r^2.
    pub kappa2r_hat: f64,
    pub converged: bool,
    pub iterations: usize,
    pub n: usize,
    pub boundary: BoundaryFlags,
    /// Condition number of J in the scale-free parameterization.
    pub cond_j: f64,
    /// Objective at each multistart's initial point (original units).
    pub start_objectives: Vec<f64>,
    /// mean |eps_t|^delta: the data scale the fit was conditioned on.
    pub m_delta: f64,
    pub opts: OptimOptions,
}

/// Parameter rescaling between original data units and the unit-scale space
/// (omega carries the data scale; the other components are scale-free).
fn scale_diag(m_delta: f64) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_vec(vec![m_delta, 1.0, 1.0, 1.0]))
}

/// Multistart initial points in unit-scale space: a grid over beta crossed
/// with symmetric/asymmetric splits of a fixed ARCH mass, plus two extremes.
fn multistart_points(count: usize, symmetric: bool) -> Vec<[f64; 4]> {
    let recipe: [(f64, f64, f64); 8] = [
        (0.5, 0.10, 0.10),
        (0.5, 0.05, 0.15),
        (0.7, 0.10, 0.10),
        (0.7, 0.05, 0.15),
        (0.9, 0.10, 0.10),
        (0.9, 0.05, 0.15),
        (0.0, 0.15, 0.15),
        (0.95, 0.025, 0.075),
    ];
    recipe
        .iter()
        .take(count.max(1).min(recipe.len()))
        .map(|&(beta, ap, am)| {
            let (ap, am) = if symmetric {
                let a = 0.5 * (ap + am);
                (a, a)
            } else {
                (ap, am)
            };
            let omega = (1.0 - beta - ap - am).max(0.05);
            [omega, ap, am, beta]
        })
        .collect()
}

/// Fit the GQMLE over the box Theta by projected quasi-Newton multistart.
///
/// Internally the data are rescaled to unit mean |eps|^delta (the optimizer
/// is exactly equivariant under this), and the result is mapped back. The
/// `Stationary` init rule is resolved once from the first start's
/// parameters and then held fixed so the analytic gradient stays exact.
pub fn fit_gqmle(
    series: &SeriesData,
    r: f64,
    delta: f64,
    opts: &OptimOptions,
) -> Result<GqmleFit> {
    if r <= 0.0 || r > 4.0 {
        return Err(Error::InvalidParameter(format!(
            "estimator power r must be in (0, 4], got {r}"
        )));
    }
    if delta <= 0.0 {
        return Err(Error::InvalidParameter(format!("delta must be > 0, got {delta}")));
    }
    let n = series.len();
    if n < 50 {
        return Err(Error::TooShort { need: 50, got: n });
    }

    let m_delta = series.abs_moment(delta);
    if !(m_delta > 0.0) || !m_delta.is_finite() {
        return Err(Error::InvalidSeries(
            "mean |eps|^delta is zero or non-finite".into(),
        ));
    }
    let c = m_delta.powf(1.0 / delta);
    let scaled = SeriesData::new(series.values.iter().map(|v| v / c).collect())?;
    let abs_r: Vec<f64> = scaled.values.iter().map(|e| abs_pow(e.abs(), r)).collect();

    let starts = multistart_points(opts.multistarts, opts.symmetric);

    // resolve the init rule once, in scaled units
    let (init_eps_s, init_s0_s) = match opts.init {
        InitRule::SampleMoment => opts.init.resolve(&scaled, &ModelParams::with_theta([1.0; 4], delta))?,
        InitRule::Stationary => {
            let p0 = ModelParams::with_theta([starts[0][0], starts[0][1], starts[0][2], starts[0][3]], delta);
            opts.init.resolve(&scaled, &p0)?
        }
        InitRule::Fixed {
            epsilon0,
            sigma0_delta,
        } => (epsilon0 / c, sigma0_delta / m_delta),
    };

    let lo = [opts.omega_lo / m_delta, 0.0, 0.0, 0.0];
    let hi = [
        opts.omega_hi_factor,
        opts.alpha_hi,
        opts.alpha_hi,
        opts.beta_hi,
    ];

    let eval_scaled = |theta: &[f64; 4]| -> Result<ObjectiveEval> {
        let p = ModelParams {
            omega: theta[0].max(lo[0]),
            alpha_plus: theta[1].max(0.0),
            alpha_minus: theta[2].max(0.0),
            beta: theta[3].max(0.0),
            delta,
        };
        objective_eval(&p, &scaled, &abs_r, r, init_eps_s, init_s0_s)
    };

    let mut best: Option<BoxOptResult> = None;
    let mut total_iters = 0usize;
    let mut start_objectives = Vec::with_capacity(starts.len());
    for start in &starts {
        let x0 = DVector::from_vec(start.to_vec());
        let mut obj = |x: &DVector<f64>| {
            let th = [x[0], x[1], x[2], x[3]];
            let (th, tied) = if opts.symmetric {
                let a = 0.5 * (th[1] + th[2]);
                ([th[0], a, a, th[3]], true)
            } else {
                (th, false)
            };
            match eval_scaled(&th) {
                Ok(ev) => {
                    let mut g = DVector::from_vec(ev.gradient.to_vec());
                    if tied {
                        let a = 0.5 * (g[1] + g[2]);
                        g[1] = a;
                        g[2] = a;
                    }
                    (ev.value, g)
                }
                // an invalid interior evaluation is driven away by +inf
                Err(_) => (f64::INFINITY, DVector::zeros(4)),
            }
        };
        let (f0, _) = obj(&x0);
        start_objectives.push(f0);
        let res = minimize_box(&mut obj, &x0, &lo, &hi, opts.tol, opts.max_iter);
        total_iters += res.iterations;
        let better = match &best {
            None => true,
            Some(b) => res.value < b.value,
        };
        if better {
            best = Some(res);
        }
    }
    let best = best.expect("at least one start");
    if !best.value.is_finite() {
        return Err(Error::NoConvergence {
            restarts: starts.len(),
            pg_norm: best.pg_norm,
        });
    }

    let mut theta_s = [best.x[0], best.x[1], best.x[2], best.x[3]];
    if opts.symmetric {
        let a = 0.5 * (theta_s[1] + theta_s[2]);
        theta_s[1] = a;
        theta_s[2] = a;
    }

    // map back to original units: omega carries the scale
    let theta = [theta_s[0] * m_delta, theta_s[1], theta_s[2], theta_s[3]];
    let params = ModelParams::with_theta(theta, delta);
    params.validate()?;

    let boundary = BoundaryFlags {
        alpha_plus_at_zero: theta[1] <= 1e-10,
        alpha_minus_at_zero: theta[2] <= 1e-10,
        omega_at_bound: theta_s[0] <= lo[0] * (1.0 + 1e-6) || theta_s[0] >= hi[0] * (1.0 - 1e-9),
        beta_at_upper: theta_s[3] >= opts.beta_hi - 1e-10,
    };

    // assemble everything on the scaled path (well-conditioned), then map
    let path_s = volatility_path_fixed(&scaled, &ModelParams::with_theta(theta_s, delta), init_eps_s, init_s0_s)?;
    let mats = SampleMatrices::assemble(&scaled, &path_s, &ModelParams::with_theta(theta_s, delta), r);

    let dm = scale_diag(m_delta);
    let dm_inv = scale_diag(1.0 / m_delta);
    let to_orig = |m: &DMatrix<f64>| symmetrize(&(&dm_inv * m * &dm_inv));
    let to_orig_ns = |m: &DMatrix<f64>| &dm_inv * m * &dm_inv; // non-symmetric

    // condition number in the scale-free space
    let cond_j = match sym_inverse(&symmetrize(&mats.j), "J") {
        Ok((_, c)) => c,
        Err(Error::SingularMatrix { cond, .. }) => cond,
        Err(e) => return Err(e),
    };

    // residuals and objective in original units
    let path = volatility_path_fixed(series, &params, init_eps_s * c, init_s0_s * m_delta)?;
    let residuals = path.residuals(series, delta);
    let abs_r_orig: Vec<f64> = series.values.iter().map(|e| abs_pow(e.abs(), r)).collect();
    let objective = objective_eval(&params, series, &abs_r_orig, r, init_eps_s * c, init_s0_s * m_delta)?.value;

    let kappa2r_hat = (pairwise_sum_by(&residuals, |e| abs_pow(e.abs(), 2.0 * r)) / n as f64
        - 1.0)
        / (r * r);

    let start_objectives: Vec<f64> = start_objectives
        .iter()
        .map(|v| v + (r / delta) * m_delta.ln())
        .collect();

    Ok(GqmleFit {
        params,
        r,
        objective,
        residuals,
        path,
        j_tilde: to_orig(&mats.j),
        omega_tilde: to_orig(&mats.omega),
        h_tilde: to_orig_ns(&mats.h),
        gamma_tilde: to_orig_ns(&mats.gamma),
        kappa2r_hat,
        converged: best.converged,
        iterations: total_iters,
        n,
        boundary,
        cond_j,
        start_objectives,
        m_delta,
        opts: opts.clone(),
    })
}

/// The four sample-counterpart matrices, assembled from a fitted path.
struct SampleMatrices {
    j: DMatrix<f64>,
    omega: DMatrix<f64>,
    h: DMatrix<f64>,
    gamma: DMatrix<f64>,
}

impl SampleMatrices {
    fn assemble(
        series: &SeriesData,
        path: &VolatilityPath,
        params: &ModelParams,
        _r: f64,
    ) -> SampleMatrices {
        let n = series.len();
        let d = params.delta;
        let mut j = DMatrix::zeros(4, 4);
        let mut omega = DMatrix::zeros(4, 4);
        let mut h = DMatrix::zeros(4, 4);
        let mut gamma = DMatrix::zeros(4, 4);
        for t in 0..n {
            let s = path.sigma_delta[t].max(SIGMA_DELTA_FLOOR);
            let inv_s2 = 1.0 / (s * s);
            let g = path.grad[t];
            let glag = path.lagged_grad(t);
            let z = regressor(series, path, d, t);
            for i in 0..4 {
                for k in 0..4 {
                    j[(i, k)] += g[i] * g[k] * inv_s2;
                    omega[(i, k)] += z[i] * z[k] * inv_s2;
                    h[(i, k)] += z[i] * g[k] * inv_s2;
                    gamma[(i, k)] += params.beta * z[i] * glag[k] * inv_s2;
                }
            }
        }
        let nf = n as f64;
        SampleMatrices {
            j: j / nf,
            omega: omega / nf,
            h: h / nf,
            gamma: gamma / nf,
        }
    }
}

/// z_t = (1, (eps_{t-1}^+)^delta, (-(eps_{t-1}^-))^delta, sigma_{t-1}^delta)'.
#[inline]
pub(crate) fn regressor(
    series: &SeriesData,
    path: &VolatilityPath,
    delta: f64,
    t: usize,
) -> [f64; 4] {
    let eps_prev = if t == 0 {
        path.init_epsilon
    } else {
        series.values[t - 1]
    };
    [
        1.0,
        pos_pow(eps_prev, delta),
        neg_pow(eps_prev, delta),
        path.lagged_sigma_delta(t),
    ]
}

/// All regressor rows for a fitted path.
pub(crate) fn regressor_rows(
    series: &SeriesData,
    path: &VolatilityPath,
    delta: f64,
) -> Vec<[f64; 4]> {
    (0..series.len())
        .map(|t| regressor(series, path, delta, t))
        .collect()
}

/// Asymptotic covariance output of Step 1.
#[derive(Debug, Clone)]
pub struct GqmleAvar {
    /// kappa_{2r} delta^2 J^{-1} / n, the covariance of theta_tilde.
    pub cov_theta: DMatrix<f64>,
    /// (delta^2/r^2) J_vv^{-1} [ (1/n) sum v v' ] J_vv^{-1} / n: covariance
    /// of the vartheta block built from the score pieces v_t.
    pub cov_vartheta_star: DMatrix<f64>,
    pub cond_j: f64,
    /// A pseudo-inverse was used because J was singular with an alpha pinned
    /// at zero.
    pub used_pinv: bool,
}

/// Plug-in covariance of the GQMLE and the score-based vartheta block.
pub fn gqmle_avar(fit: &GqmleFit, series: &SeriesData) -> Result<GqmleAvar> {
    let n = fit.n as f64;
    let d = fit.params.delta;
    let r = fit.r;
    let dm = scale_diag(fit.m_delta);

    // invert in the scale-free space
    let j_scaled = symmetrize(&(&dm * &fit.j_tilde * &dm));
    let (j_inv_scaled, cond, used_pinv) = match sym_inverse(&j_scaled, "J") {
        Ok((inv, c)) => (inv, c, false),
        Err(Error::SingularMatrix { cond, null_dir, .. }) => {
            if fit.boundary.any_alpha_at_zero() || fit.boundary.beta_at_upper {
                let (p, _, _) = sym_pinverse(&j_scaled, 1e-12);
                (p, cond, true)
            } else {
                return Err(Error::SingularMatrix {
                    name: "J",
                    cond,
                    null_dir,
                });
            }
        }
        Err(e) => return Err(e),
    };
    // J = Dm^{-1} J' Dm^{-1}  =>  J^{-1} = Dm J'^{-1} Dm
    let j_inv = &dm * &j_inv_scaled * &dm;
    let cov_theta = symmetrize(&(fit.kappa2r_hat * d * d / n * &j_inv));

    // vartheta block from the score pieces v_t restricted to vartheta
    let vv = score_outer_vartheta(fit, series);
    let j_vv = fit.j_tilde.view((1, 1), (3, 3)).into_owned();
    let (j_vv_inv, _, pinv2) = match sym_inverse(&symmetrize(&j_vv), "J_vartheta") {
        Ok((inv, c)) => (inv, c, false),
        Err(Error::SingularMatrix { cond, null_dir, .. }) => {
            if fit.boundary.any_alpha_at_zero() || fit.boundary.beta_at_upper {
                let (p, _, _) = sym_pinverse(&symmetrize(&j_vv), 1e-12);
                (p, cond, true)
            } else {
                return Err(Error::SingularMatrix {
                    name: "J_vartheta",
                    cond,
                    null_dir,
                });
            }
        }
        Err(e) => return Err(e),
    };
    let cov_vartheta_star =
        symmetrize(&((d * d) / (r * r) / n * &j_vv_inv * vv * &j_vv_inv));

    Ok(GqmleAvar {
        cov_theta,
        cov_vartheta_star,
        cond_j: cond,
        used_pinv: used_pinv || pinv2,
    })
}

/// (1/n) sum of outer products of the vartheta score pieces
/// v_t = (1 - |eta_t|^r) (1/sigma_t^delta) d sigma_t^delta / d vartheta.
fn score_outer_vartheta(fit: &GqmleFit, _series: &SeriesData) -> DMatrix<f64> {
    let r = fit.r;
    let mut m = DMatrix::zeros(3, 3);
    for t in 0..fit.n {
        let s = fit.path.sigma_delta[t].max(SIGMA_DELTA_FLOOR);
        let w = 1.0 - abs_pow(fit.residuals[t].abs(), r);
        let g = fit.path.grad[t];
        let v = [w * g[1] / s, w * g[2] / s, w * g[3] / s];
        for i in 0..3 {
            for k in 0..3 {
                m[(i, k)] += v[i] * v[k];
            }
        }
    }
    m / fit.n as f64
}

/// Score pieces v_t for the full theta (used by the hybrid covariance).
pub(crate) fn score_rows_theta(fit: &GqmleFit) -> Vec<[f64; 4]> {
    let r = fit.r;
    (0..fit.n)
        .map(|t| {
            let s = fit.path.sigma_delta[t].max(SIGMA_DELTA_FLOOR);
            let w = (1.0 - abs_pow(fit.residuals[t].abs(), r)) / s;
            let g = fit.path.grad[t];
            [w * g[0], w * g[1], w * g[2], w * g[3]]
        })
        .collect()
}
