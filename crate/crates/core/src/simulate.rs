//! Path simulation, the top Lyapunov exponent and the stationarity-boundary
//! quantities, all under a fixed ChaCha8 seed.

use crate::error::{Error, Result};
use crate::rng::{partition_sizes, rng_for_stream, PairwiseAccumulator};
use crate::transform::{neg_pow, pos_pow};
use crate::types::{InnovationDist, ModelParams, SeriesData};

/// Above this the h recursion switches to log space. Only ratios and logs of
/// h are consumed by the diagnostics downstream, so the switch is lossless
/// for them; raw returns beyond f64 range are an error, never a silent inf.
const LOG_SPACE_THRESHOLD: f64 = 1e250;
/// ln(f64::MAX) with a little headroom.
const MAX_LOG_ABS: f64 = 709.0;

/// A simulated path with its latent volatility state exposed.
#[derive(Debug, Clone)]
pub struct SimOutput {
    pub series: SeriesData,
    /// h_t aligned with series (may be +inf when only log_h is representable).
    pub h: Vec<f64>,
    /// log h_t, always finite.
    pub log_h: Vec<f64>,
    /// The innovations eta_t that generated each return.
    pub innovations: Vec<f64>,
    /// Last burn-in return (the eps_0 preceding the first emitted point).
    pub init_epsilon: f64,
    /// h value preceding the first emitted point.
    pub init_h: f64,
}

/// Simulate `n` post-burn-in observations from the model. Deterministic
/// given the seed.
pub fn simulate(
    params: &ModelParams,
    dist: &InnovationDist,
    n: usize,
    burnin: usize,
    seed: u64,
) -> Result<SeriesData> {
    Ok(simulate_full(params, dist, n, burnin, seed)?.series)
}

/// Simulation that also returns the latent h path and innovations.
pub fn simulate_full(
    params: &ModelParams,
    dist: &InnovationDist,
    n: usize,
    burnin: usize,
    seed: u64,
) -> Result<SimOutput> {
    params.validate()?;
    dist.validate()?;
    if n == 0 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    let mut rng = rng_for_stream(seed, 0);
    let d = params.delta;

    // start the recursion from the clipped fixed point of the beta-chain
    let mut h = params.omega / (1.0 - params.beta.min(0.99));
    let mut log_h = h.ln();
    let mut log_mode = false;
    let mut prev_eps = 0.0f64;
    let mut prev_eta = 0.0f64;

    let total = burnin + n;
    let mut series = Vec::with_capacity(n);
    let mut h_out = Vec::with_capacity(n);
    let mut log_h_out = Vec::with_capacity(n);
    let mut eta_out = Vec::with_capacity(n);
    let mut init_epsilon = prev_eps;
    let mut init_h = h;

    for t in 0..total {
        if !log_mode {
            let next = params.omega
                + params.alpha_plus * pos_pow(prev_eps, d)
                + params.alpha_minus * neg_pow(prev_eps, d)
                + params.beta * h;
            if next > LOG_SPACE_THRESHOLD {
                log_mode = true;
                // recompute this step in log space from the previous state
                log_h = log_h + (params.a0(prev_eta) + params.omega * (-log_h).exp()).ln();
                h = f64::INFINITY;
            } else {
                h = next;
                log_h = next.ln();
            }
        } else {
            log_h = log_h + (params.a0(prev_eta) + params.omega * (-log_h).exp()).ln();
            if log_h < LOG_SPACE_THRESHOLD.ln() {
                log_mode = false;
                h = log_h.exp();
            } else {
                h = f64::INFINITY;
            }
        }

        let eta = dist.sample(&mut rng);
        let eps = if !log_mode {
            h.powf(1.0 / d) * eta
        } else {
            if eta == 0.0 {
                0.0
            } else {
                let log_abs = log_h / d + eta.abs().ln();
                if log_abs > MAX_LOG_ABS {
                    return Err(Error::SimulationOverflow {
                        index: t.saturating_sub(burnin),
                    });
                }
                log_abs.exp().copysign(eta)
            }
        };
        if !eps.is_finite() {
            return Err(Error::SimulationOverflow {
                index: t.saturating_sub(burnin),
            });
        }

        if t >= burnin {
            series.push(eps);
            h_out.push(h);
            log_h_out.push(log_h);
            eta_out.push(eta);
        } else if t + 1 == burnin {
            // the state that precedes the first emitted observation
            init_epsilon = eps;
            init_h = h;
        }
        prev_eps = eps;
        prev_eta = eta;
    }

    Ok(SimOutput {
        series: SeriesData::new(series)?,
        h: h_out,
        log_h: log_h_out,
        innovations: eta_out,
        init_epsilon,
        init_h,
    })
}

/// Monte Carlo estimate of the top Lyapunov exponent
/// gamma_0 = E log a0(eta) with its standard error.
///
/// Draws are split over a fixed number of partitions with per-partition
/// derived streams, so the estimate is independent of worker count.
pub fn lyapunov_mc(
    params: &ModelParams,
    dist: &InnovationDist,
    ndraws: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    params.validate()?;
    dist.validate()?;
    if ndraws < 1000 {
        return Err(Error::InvalidParameter(
            "lyapunov_mc requires ndraws >= 1000".into(),
        ));
    }
    if params.alpha_plus == 0.0 && params.alpha_minus == 0.0 && params.beta == 0.0 {
        return Err(Error::InvalidParameter(
            "at least one of alpha_plus, alpha_minus, beta must be positive".into(),
        ));
    }
    let mut sum = PairwiseAccumulator::new();
    let mut sumsq = PairwiseAccumulator::new();
    for (p, sz) in partition_sizes(ndraws).into_iter().enumerate() {
        let mut rng = rng_for_stream(seed, 1 + p as u64);
        for _ in 0..sz {
            let a = params.a0(dist.sample(&mut rng));
            if a <= 0.0 {
                return Err(Error::DegenerateA0);
            }
            let l = a.ln();
            sum.push(l);
            sumsq.push(l * l);
        }
    }
    let n = ndraws as f64;
    let mean = sum.sum() / n;
    let var = (sumsq.sum() / n - mean * mean).max(0.0);
    Ok((mean, (var / n).sqrt()))
}

/// Monte Carlo estimate of ||1/a0(eta)||_p^{-1} = (E[(1/a0)^p])^{-1/p}.
pub fn beta_boundary(
    params: &ModelParams,
    dist: &InnovationDist,
    p: f64,
    ndraws: usize,
    seed: u64,
) -> Result<f64> {
    params.validate()?;
    dist.validate()?;
    if p < 1.0 {
        return Err(Error::InvalidParameter("p must be >= 1".into()));
    }
    let int_p = if p.fract() == 0.0 && p <= 32.0 {
        Some(p as i32)
    } else {
        None
    };
    let mut sum = PairwiseAccumulator::new();
    for (part, sz) in partition_sizes(ndraws).into_iter().enumerate() {
        let mut rng = rng_for_stream(seed, 1 + part as u64);
        for _ in 0..sz {
            let a = params.a0(dist.sample(&mut rng));
            if a <= 0.0 {
                return Err(Error::DegenerateA0);
            }
            let inv = 1.0 / a;
            sum.push(match int_p {
                Some(k) => inv.powi(k),
                None => inv.powf(p),
            });
        }
    }
    Ok((sum.sum() / ndraws as f64).powf(-1.0 / p))
}

/// Solve for the alpha_plus that makes gamma_0 = 0, holding the other
/// parameters fixed, by bisection on a common-random-numbers Monte Carlo
/// estimate of gamma_0. The draws are materialized once, so the objective is
/// deterministic and strictly increasing in alpha_plus.
pub fn alpha_plus_for_zero_gamma(
    alpha_minus: f64,
    beta: f64,
    delta: f64,
    dist: &InnovationDist,
    ndraws: usize,
    seed: u64,
) -> Result<f64> {
    dist.validate()?;
    if alpha_minus < 0.0 || beta < 0.0 || delta <= 0.0 {
        return Err(Error::InvalidParameter(
            "alpha_minus, beta must be >= 0 and delta > 0".into(),
        ));
    }
    // precompute (eta^+)^delta and the alpha_plus-free part of a0
    let mut plus_pow = Vec::with_capacity(ndraws);
    let mut base = Vec::with_capacity(ndraws);
    for (part, sz) in partition_sizes(ndraws).into_iter().enumerate() {
        let mut rng = rng_for_stream(seed, 1 + part as u64);
        for _ in 0..sz {
            let eta = dist.sample(&mut rng);
            plus_pow.push(pos_pow(eta, delta));
            base.push(alpha_minus * neg_pow(eta, delta) + beta);
        }
    }
    let gamma = |alpha_plus: f64| -> Result<f64> {
        let mut acc = PairwiseAccumulator::new();
        for i in 0..ndraws {
            let a = alpha_plus * plus_pow[i] + base[i];
            if a <= 0.0 {
                return Err(Error::DegenerateA0);
            }
            acc.push(a.ln());
        }
        Ok(acc.sum() / ndraws as f64)
    };

    // bracket by doubling
    let mut lo = 0.0f64;
    let mut hi = 0.05f64;
    let g_lo = gamma(lo)?;
    if g_lo >= 0.0 {
        return Err(Error::NoBracket);
    }
    let mut g_hi = gamma(hi)?;
    let mut doubles = 0;
    while g_hi < 0.0 {
        hi *= 2.0;
        doubles += 1;
        if doubles > 24 {
            return Err(Error::NoBracket);
        }
        g_hi = gamma(hi)?;
    }
    // bisection to 1e-6 in alpha_plus
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if gamma(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{InitRule, ModelParams};
    use crate::volatility::volatility_path;

    #[test]
    fn degenerate_volatility_equals_raw_draws() {
        // omega=1, alphas=beta=0 => h == 1, output equals the raw eta stream
        let p = ModelParams::new(1.0, 0.0, 0.0, 0.0, 2.0).unwrap();
        let d = InnovationDist::StandardNormal;
        let out = simulate_full(&p, &d, 64, 0, 33).unwrap();
        let mut rng = crate::rng::rng_for_stream(33, 0);
        for (i, v) in out.series.values.iter().enumerate() {
            let eta = d.sample(&mut rng);
            assert_eq!(*v, eta, "draw {i}");
            assert_eq!(out.h[i], 1.0);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let p = ModelParams::new(0.1, 0.05, 0.15, 0.9, 2.0).unwrap();
        let d = InnovationDist::StandardizedT { nu: 5.0 };
        let a = simulate(&p, &d, 200, 100, 7).unwrap();
        let b = simulate(&p, &d, 200, 100, 7).unwrap();
        assert_eq!(a.values, b.values);
        let c = simulate(&p, &d, 200, 100, 8).unwrap();
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn recovers_h_bit_exactly_with_true_init() {
        let p = ModelParams::new(0.1, 0.05, 0.15, 0.9, 2.0).unwrap();
        let d = InnovationDist::StandardNormal;
        let out = simulate_full(&p, &d, 500, 200, 21).unwrap();
        let init = InitRule::Fixed {
            epsilon0: out.init_epsilon,
            sigma0_delta: out.init_h,
        };
        let path = volatility_path(&out.series, &p, &init).unwrap();
        for t in 0..out.series.len() {
            assert_eq!(path.sigma_delta[t], out.h[t], "t = {t}");
        }
    }

    #[test]
    fn table2_sample_gamma_along_path() {
        // alpha+ = 0.05 design: gamma_0 = -0.0104 (within 3 MC ses)
        let p = ModelParams::new(0.1, 0.05, 0.15, 0.9, 2.0).unwrap();
        let d = InnovationDist::StandardNormal;
        let out = simulate_full(&p, &d, 200_000, 500, 2).unwrap();
        let logs: Vec<f64> = out.innovations.iter().map(|e| p.a0(*e).ln()).collect();
        let (mean, sd) = crate::rng::mean_sd(&logs);
        let se = sd / (logs.len() as f64).sqrt();
        assert!(
            (mean - -0.0104).abs() < 3.0 * se,
            "gamma_hat = {mean}, se = {se}"
        );
    }

    #[test]
    fn lyapunov_constant_a0() {
        let p = ModelParams::new(0.1, 0.0, 0.0, 0.9, 2.0).unwrap();
        let (g, se) = lyapunov_mc(&p, &InnovationDist::StandardNormal, 10_000, 1).unwrap();
        assert!((g - 0.9f64.ln()).abs() < 1e-12);
        // constant a0 has zero sampling variance up to round-off
        assert!(se < 1e-9, "se = {se}");
    }

    #[test]
    fn lyapunov_monotone_in_each_parameter_under_common_seed() {
        let base = ModelParams::new(0.1, 0.05, 0.15, 0.9, 2.0).unwrap();
        let d = InnovationDist::StandardNormal;
        let (g0, _) = lyapunov_mc(&base, &d, 20_000, 5).unwrap();
        for k in 1..4 {
            let mut th = base.theta();
            th[k] += 0.01;
            let p = ModelParams::with_theta(th, 2.0);
            let (g1, _) = lyapunov_mc(&p, &d, 20_000, 5).unwrap();
            assert!(g1 > g0, "component {k}: {g1} <= {g0}");
        }
    }

    #[test]
    fn boundary_constant_a0_is_beta() {
        let p = ModelParams::new(0.1, 0.0, 0.0, 0.77, 2.0).unwrap();
        let b = beta_boundary(&p, &InnovationDist::StandardNormal, 2.0, 10_000, 3).unwrap();
        assert!((b - 0.77).abs() < 1e-12);
    }

    #[test]
    fn explosive_regime_eventually_overflows() {
        // gamma0 > 0 with a huge horizon overflows eps eventually; the error
        // carries the index instead of silently returning inf
        let p = ModelParams::new(0.1, 3.0, 3.0, 0.99, 1.0).unwrap();
        let d = InnovationDist::StandardNormal;
        let r = simulate(&p, &d, 2_000_000, 0, 11);
        assert!(matches!(r, Err(Error::SimulationOverflow { .. })));
    }
}
