//! Gaussian maximum likelihood for order-(1,1) GARCH and GJR-GARCH.
//!
//! The search runs in an unconstrained space: `ω = exp(a)` and the
//! coefficient shares `(α, [γ/2], β, slack)` are a softmax of
//! `(u_α, [u_γ], u_β, 0)`. Every point of that space is positive and
//! strictly stationary.

use super::{garch_filter_with, mean_variance, FilterInit, GarchKind, GarchParams, VolatilityPath};
use crate::error::{Error, Result};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub nelder_mead: NelderMeadOptions,
    /// Extra simplex restarts from the incumbent optimum.
    pub restarts: usize,
    pub min_observations: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            nelder_mead: NelderMeadOptions::default(),
            restarts: 8,
            min_observations: 50,
        }
    }
}

/// A fitted model together with the demeaning and seeding it was fitted
/// under, so the same recursion can be replayed on longer series.
#[derive(Debug, Clone, PartialEq)]
pub struct GarchFit<T> {
    pub kind: GarchKind,
    pub params: GarchParams<T>,
    pub loglik: T,
    pub mean: T,
    pub sigma2_0: T,
    pub n_obs: usize,
    pub converged: bool,
}

impl<T: Scalar> GarchFit<T> {
    /// Wraps known parameters with an explicit mean and initial variance.
    pub fn from_params(kind: GarchKind, params: GarchParams<T>, mean: T, sigma2_0: T) -> Result<Self> {
        params.check_stationary(kind)?;
        Ok(Self {
            kind,
            params,
            loglik: T::nan(),
            mean,
            sigma2_0,
            n_obs: 0,
            converged: true,
        })
    }

    pub fn init(&self) -> FilterInit<T> {
        FilterInit {
            sigma2_0: Some(self.sigma2_0),
            mean: Some(self.mean),
        }
    }

    /// Filters `returns` with the fitted parameters and the fit-time seeding.
    pub fn filter(&self, returns: &[T]) -> Result<VolatilityPath<T>> {
        garch_filter_with(&self.params, returns, self.kind, self.init())
    }

    pub fn unconditional_variance(&self) -> Result<T> {
        self.params.unconditional_variance(self.kind)
    }
}

/// Log-likelihood of `returns` under `params` with the given seeding.
pub fn log_likelihood<T: Scalar>(
    params: &GarchParams<T>,
    returns: &[T],
    kind: GarchKind,
    init: FilterInit<T>,
) -> Result<T> {
    Ok(garch_filter_with(params, returns, kind, init)?.log_likelihood())
}

fn shares<T: Scalar>(logits: &[T]) -> Vec<T> {
    let max = logits.iter().copied().fold(T::zero(), T::max);
    let exps: Vec<T> = logits.iter().map(|&u| (u - max).exp()).collect();
    let denom = exps.iter().copied().sum::<T>() + (-max).exp();
    exps.into_iter().map(|e| e / denom).collect()
}

fn decode<T: Scalar>(theta: &[T], kind: GarchKind) -> Result<GarchParams<T>> {
    let omega = theta[0].exp();
    let s = shares(&theta[1..]);
    match kind {
        GarchKind::Garch => GarchParams::garch11(omega, s[0], s[1]),
        GarchKind::Gjr => GarchParams::gjr11(omega, s[0], T::lit(2.0) * s[1], s[2]),
    }
}

fn encode<T: Scalar>(params: &GarchParams<T>, kind: GarchKind) -> Vec<T> {
    let mut parts = vec![params.alpha[0]];
    if kind == GarchKind::Gjr {
        parts.push(params.gamma.as_ref().map_or(T::zero(), |g| g[0]) / T::lit(2.0));
    }
    parts.push(params.beta[0]);
    let slack = T::one() - parts.iter().copied().sum::<T>();
    let mut theta = vec![params.omega.ln()];
    theta.extend(parts.into_iter().map(|p| (p / slack).ln()));
    theta
}

fn starting_point<T: Scalar>(var: T, kind: GarchKind) -> Result<GarchParams<T>> {
    let omega = T::lit(0.1) * var;
    match kind {
        GarchKind::Garch => GarchParams::garch11(omega, T::lit(0.1), T::lit(0.8)),
        GarchKind::Gjr => GarchParams::gjr11(omega, T::lit(0.05), T::lit(0.1), T::lit(0.8)),
    }
}

/// Maximizes the Gaussian log-likelihood of a first-order model.
///
/// Returns are demeaned by their sample mean and the recursion is seeded
/// with their sample variance; both are stored in the result.
pub fn fit_mle<T: Scalar>(returns: &[T], kind: GarchKind, options: &FitOptions) -> Result<GarchFit<T>> {
    if returns.len() < options.min_observations {
        return Err(Error::Data(format!(
            "GARCH fit needs at least {} returns, got {}",
            options.min_observations,
            returns.len()
        )));
    }
    if returns.iter().any(|r| !r.is_finite()) {
        return Err(Error::Data("returns contain non-finite values".into()));
    }
    let (mean, var) = mean_variance(returns);
    if !(var > T::zero()) {
        return Err(Error::Degenerate("returns are constant (zero variance)".into()));
    }
    let init = FilterInit {
        sigma2_0: Some(var),
        mean: Some(mean),
    };
    let objective = |theta: &[T]| -> T {
        match decode(theta, kind).and_then(|p| log_likelihood(&p, returns, kind, init)) {
            Ok(ll) => -ll,
            Err(_) => T::infinity(),
        }
    };

    let start = encode(&starting_point(var, kind)?, kind);
    let start_value = objective(&start);
    let mut best = nelder_mead(objective, &start, &options.nelder_mead);
    for _ in 0..options.restarts {
        let next = nelder_mead(objective, &best.x, &options.nelder_mead);
        let gain = best.value - next.value;
        let done = gain <= T::lit(options.nelder_mead.f_tol) * (T::one() + best.value.abs());
        if next.value < best.value {
            best = next;
        }
        if done {
            break;
        }
    }

    let params = decode(&best.x, kind)?;
    if !best.value.is_finite() || !(best.value < start_value) {
        let mut flat = vec![params.omega.as_f64(), params.alpha[0].as_f64()];
        if let Some(g) = &params.gamma {
            flat.push(g[0].as_f64());
        }
        flat.push(params.beta[0].as_f64());
        return Err(Error::FitFailure {
            best_params: flat,
            best_loglik: -best.value.as_f64(),
        });
    }
    Ok(GarchFit {
        kind,
        params,
        loglik: -best.value,
        mean,
        sigma2_0: var,
        n_obs: returns.len(),
        converged: best.converged,
    })
}
