//! Core domain types: model parameters, innovation distributions, observed
//! series and initialization rules for the volatility recursion.

use crate::error::{Error, Result};
use crate::transform::{abs_pow, neg_pow, pos_pow};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::ContinuousCDF;
use statrs::function::gamma::ln_gamma;

/// Parameter vector theta = (omega, alpha_plus, alpha_minus, beta) of the
/// first-order asymmetric power GARCH model, with a fixed known exponent
/// `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub omega: f64,
    pub alpha_plus: f64,
    pub alpha_minus: f64,
    pub beta: f64,
    pub delta: f64,
}

impl ModelParams {
    pub fn new(
        omega: f64,
        alpha_plus: f64,
        alpha_minus: f64,
        beta: f64,
        delta: f64,
    ) -> Result<Self> {
        let p = ModelParams {
            omega,
            alpha_plus,
            alpha_minus,
            beta,
            delta,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.omega,
            self.alpha_plus,
            self.alpha_minus,
            self.beta,
            self.delta,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite component".into()));
        }
        if self.omega <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "omega must be > 0, got {}",
                self.omega
            )));
        }
        if self.alpha_plus < 0.0 || self.alpha_minus < 0.0 || self.beta < 0.0 {
            return Err(Error::InvalidParameter(
                "alpha_plus, alpha_minus, beta must be >= 0".into(),
            ));
        }
        if self.delta <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "delta must be > 0, got {}",
                self.delta
            )));
        }
        Ok(())
    }

    /// The four free components as a vector (delta is fixed, not estimated).
    pub fn theta(&self) -> [f64; 4] {
        [self.omega, self.alpha_plus, self.alpha_minus, self.beta]
    }

    pub fn with_theta(theta: [f64; 4], delta: f64) -> Self {
        ModelParams {
            omega: theta[0],
            alpha_plus: theta[1],
            alpha_minus: theta[2],
            beta: theta[3],
            delta,
        }
    }

    /// `a0(x) = alpha_plus (x^+)^delta + alpha_minus (-(x^-))^delta + beta`,
    /// the random coefficient whose log-mean is the top Lyapunov exponent.
    #[inline]
    pub fn a0(&self, x: f64) -> f64 {
        self.alpha_plus * pos_pow(x, self.delta)
            + self.alpha_minus * neg_pow(x, self.delta)
            + self.beta
    }
}

/// Innovation distribution for the i.i.d. noise eta_t. The standardized
/// Student's t is scaled by sqrt((nu-2)/nu) so that E eta^2 = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InnovationDist {
    StandardNormal,
    StandardizedT { nu: f64 },
}

impl InnovationDist {
    pub fn standardized_t(nu: f64) -> Result<Self> {
        if !(nu > 2.0) {
            return Err(Error::InvalidParameter(format!(
                "standardized t requires nu > 2, got {nu}"
            )));
        }
        Ok(InnovationDist::StandardizedT { nu })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            InnovationDist::StandardNormal => Ok(()),
            InnovationDist::StandardizedT { nu } => {
                if *nu > 2.0 && nu.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!(
                        "standardized t requires finite nu > 2, got {nu}"
                    )))
                }
            }
        }
    }

    /// Draw one innovation. The standardized t is composed from a normal and
    /// a chi-square draw (in that order), then scaled by sqrt((nu-2)/nu).
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            InnovationDist::StandardNormal => StandardNormal.sample(rng),
            InnovationDist::StandardizedT { nu } => {
                let z: f64 = StandardNormal.sample(rng);
                let chi = ChiSquared::new(*nu).expect("validated nu");
                let v: f64 = chi.sample(rng);
                z * (nu - 2.0).sqrt() / v.sqrt()
            }
        }
    }

    /// Closed-form absolute moment E|eta|^r.
    ///
    /// Normal: 2^(r/2) Gamma((r+1)/2) / sqrt(pi).
    /// Standardized t_nu: (nu-2)^(r/2) Gamma((r+1)/2) Gamma((nu-r)/2)
    ///                    / (sqrt(pi) Gamma(nu/2)), for r < nu.
    pub fn abs_moment(&self, r: f64) -> Result<f64> {
        if r <= 0.0 {
            return Err(Error::InvalidParameter(format!("moment order r = {r}")));
        }
        match self {
            InnovationDist::StandardNormal => {
                let ln = 0.5 * r * std::f64::consts::LN_2 + ln_gamma((r + 1.0) / 2.0)
                    - 0.5 * std::f64::consts::PI.ln();
                Ok(ln.exp())
            }
            InnovationDist::StandardizedT { nu } => {
                if r >= *nu {
                    return Err(Error::UndefinedMoment {
                        r,
                        dist: format!("standardized t_{nu}"),
                    });
                }
                let ln = 0.5 * r * (nu - 2.0).ln() + ln_gamma((r + 1.0) / 2.0)
                    + ln_gamma((nu - r) / 2.0)
                    - 0.5 * std::f64::consts::PI.ln()
                    - ln_gamma(nu / 2.0);
                Ok(ln.exp())
            }
        }
    }

    /// True quantile Q_{tau,eta} of the innovation distribution.
    pub fn quantile(&self, tau: f64) -> f64 {
        assert!(tau > 0.0 && tau < 1.0, "quantile level must be in (0,1)");
        match self {
            InnovationDist::StandardNormal => {
                let n = statrs::distribution::Normal::new(0.0, 1.0).unwrap();
                n.inverse_cdf(tau)
            }
            InnovationDist::StandardizedT { nu } => {
                let t = statrs::distribution::StudentsT::new(0.0, 1.0, *nu).unwrap();
                t.inverse_cdf(tau) * ((nu - 2.0) / nu).sqrt()
            }
        }
    }

    /// Density of T(eta) at x0, where T is the signed power transform with
    /// exponent delta. Used as the plug-in truth in oracle computations.
    pub fn transformed_density(&self, x0: f64, delta: f64) -> f64 {
        // y = T(x) => x = T^{-1}(y), dx/dy = |y|^{1/delta - 1} / delta
        let x = crate::transform::inverse_transform(x0, delta);
        let jac = if x0 == 0.0 {
            f64::INFINITY
        } else {
            abs_pow(x0.abs(), 1.0 / delta - 1.0) / delta
        };
        self.density(x) * jac
    }

    fn density(&self, x: f64) -> f64 {
        match self {
            InnovationDist::StandardNormal => {
                (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
            }
            InnovationDist::StandardizedT { nu } => {
                use statrs::distribution::Continuous;
                let s = ((nu - 2.0) / nu).sqrt();
                let t = statrs::distribution::StudentsT::new(0.0, 1.0, *nu).unwrap();
                t.pdf(x / s) / s
            }
        }
    }
}

/// An observed (or simulated) return series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesData {
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamps: Option<Vec<String>>,
}

impl SeriesData {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidSeries("series is empty".into()));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput { index });
        }
        Ok(SeriesData {
            values,
            timestamps: None,
        })
    }

    pub fn with_timestamps(values: Vec<f64>, timestamps: Vec<String>) -> Result<Self> {
        if values.len() != timestamps.len() {
            return Err(Error::InvalidSeries(
                "timestamps length differs from values".into(),
            ));
        }
        let mut s = Self::new(values)?;
        s.timestamps = Some(timestamps);
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Mean of |eps_t|^delta over the sample.
    pub fn abs_moment(&self, delta: f64) -> f64 {
        let n = self.values.len() as f64;
        crate::rng::pairwise_sum_by(&self.values, |v| abs_pow(v.abs(), delta)) / n
    }
}

/// Rule for the unobserved pre-sample values (eps_0, sigma_0^delta).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum InitRule {
    /// eps_0 = 0, sigma_0^delta = mean |eps_t|^delta over the sample.
    /// Scale-consistent and independent of theta.
    SampleMoment,
    /// eps_0 = 0, sigma_0^delta = omega / (1 - min(beta, 0.99)).
    Stationary,
    /// User-supplied constants.
    Fixed { epsilon0: f64, sigma0_delta: f64 },
}

impl Default for InitRule {
    fn default() -> Self {
        InitRule::SampleMoment
    }
}

impl InitRule {
    /// Resolve to concrete (eps_0, sigma_0^delta) values.
    pub fn resolve(&self, series: &SeriesData, params: &ModelParams) -> Result<(f64, f64)> {
        match self {
            InitRule::SampleMoment => Ok((0.0, series.abs_moment(params.delta))),
            InitRule::Stationary => Ok((0.0, params.omega / (1.0 - params.beta.min(0.99)))),
            InitRule::Fixed {
                epsilon0,
                sigma0_delta,
            } => {
                if !epsilon0.is_finite() || !sigma0_delta.is_finite() || *sigma0_delta < 0.0 {
                    return Err(Error::InvalidParameter(
                        "fixed init values must be finite with sigma0_delta >= 0".into(),
                    ));
                }
                Ok((*epsilon0, *sigma0_delta))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(0.1, 0.05, 0.15, 0.9, 2.0).is_ok());
        assert!(ModelParams::new(0.0, 0.05, 0.15, 0.9, 2.0).is_err());
        assert!(ModelParams::new(0.1, -0.05, 0.15, 0.9, 2.0).is_err());
        assert!(ModelParams::new(0.1, 0.05, 0.15, 0.9, 0.0).is_err());
    }

    #[test]
    fn params_serde_roundtrip_exact() {
        let p = ModelParams::new(0.1, 0.05000000000000001, 0.15, 0.9999999999999, 2.0).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        let q: ModelParams = serde_json::from_str(&s).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn standardized_t_requires_nu_above_two() {
        assert!(InnovationDist::standardized_t(2.0).is_err());
        assert!(InnovationDist::standardized_t(5.0).is_ok());
    }

    #[test]
    fn unit_second_moment_over_million_draws() {
        // E eta^2 = 1 for every kind; sample mean within 0.01 at 1e6 draws.
        for dist in [
            InnovationDist::StandardNormal,
            InnovationDist::StandardizedT { nu: 5.0 },
            InnovationDist::StandardizedT { nu: 3.0 },
        ] {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
            let n = 1_000_000usize;
            let mut acc = crate::rng::PairwiseAccumulator::new();
            for _ in 0..n {
                let e = dist.sample(&mut rng);
                acc.push(e * e);
            }
            let m2 = acc.sum() / n as f64;
            assert!(
                (m2 - 1.0).abs() < 0.01,
                "E eta^2 = {m2} for {dist:?}"
            );
        }
    }

    #[test]
    fn closed_form_moments() {
        // E|Z| = sqrt(2/pi), E Z^2 = 1, E|Z|^4 = 3
        let n = InnovationDist::StandardNormal;
        assert!((n.abs_moment(1.0).unwrap() - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-12);
        assert!((n.abs_moment(2.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((n.abs_moment(4.0).unwrap() - 3.0).abs() < 1e-12);
        // standardized t: E eta^2 = 1 exactly by construction
        let t = InnovationDist::StandardizedT { nu: 5.0 };
        assert!((t.abs_moment(2.0).unwrap() - 1.0).abs() < 1e-12);
        // moment undefined at r >= nu
        assert!(t.abs_moment(5.0).is_err());
        // MC cross-check of E|eta| for st_5
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let n_draws = 2_000_000usize;
        let mut acc = crate::rng::PairwiseAccumulator::new();
        for _ in 0..n_draws {
            acc.push(t.sample(&mut rng).abs());
        }
        let mc = acc.sum() / n_draws as f64;
        assert!((mc - t.abs_moment(1.0).unwrap()).abs() < 2e-3);
    }

    #[test]
    fn quantiles_match_statrs() {
        let n = InnovationDist::StandardNormal;
        assert!((n.quantile(0.05) + 1.6448536269514722).abs() < 1e-9);
        let t = InnovationDist::StandardizedT { nu: 5.0 };
        // standardized t quantile is the raw t quantile scaled down
        assert!(t.quantile(0.05) > -2.015048372669157); // raw t5 5% point
        assert!(t.quantile(0.05) < -1.0);
    }

    #[test]
    fn series_validation() {
        assert!(SeriesData::new(vec![]).is_err());
        assert!(matches!(
            SeriesData::new(vec![1.0, f64::NAN]),
            Err(Error::NonFiniteInput { index: 1 })
        ));
    }
}

