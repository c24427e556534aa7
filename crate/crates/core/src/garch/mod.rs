//! GARCH(P,Q) and GJR-GARCH(P,Q) conditional variance models.
//!
//! The variance recursion is
//!
//! ```text
//! σ²_t = ω + Σ_p (α_p + γ_p·1{ε_{t-p} < 0}) ε²_{t-p} + Σ_q β_q σ²_{t-q}
//! ```
//!
//! with `γ ≡ 0` for plain GARCH. The first `max(P, Q)` variances are seeded
//! with a fixed σ²₀.

pub mod exact;
mod fit;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use fit::{fit_mle, log_likelihood, FitOptions, GarchFit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GarchKind {
    Garch,
    Gjr,
}

impl std::fmt::Display for GarchKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GarchKind::Garch => "garch",
            GarchKind::Gjr => "gjr",
        })
    }
}

impl std::str::FromStr for GarchKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "garch" => Ok(GarchKind::Garch),
            "gjr" | "gjr-garch" => Ok(GarchKind::Gjr),
            other => Err(Error::Config(format!("unknown GARCH kind `{other}`"))),
        }
    }
}

/// Model coefficients. `gamma` is only read for [`GarchKind::Gjr`].
#[derive(Debug, Clone, PartialEq)]
pub struct GarchParams<T> {
    pub omega: T,
    pub alpha: Vec<T>,
    pub beta: Vec<T>,
    pub gamma: Option<Vec<T>>,
}

impl<T: Scalar> GarchParams<T> {
    /// Validates positivity: `ω > 0`, `α, β ≥ 0`, `α_p + γ_p ≥ 0`.
    /// Stationarity is checked separately, per model kind.
    pub fn new(omega: T, alpha: Vec<T>, beta: Vec<T>, gamma: Option<Vec<T>>) -> Result<Self> {
        let bad = |msg: String| Err(Error::Constraint(msg));
        if !(omega > T::zero()) || !omega.is_finite() {
            return bad(format!("omega must be positive and finite, got {omega}"));
        }
        if alpha.is_empty() {
            return bad("at least one alpha coefficient is required".into());
        }
        if alpha.iter().chain(&beta).any(|&c| !(c >= T::zero()) || !c.is_finite()) {
            return bad(format!(
                "alpha/beta must be finite and non-negative: {alpha:?} {beta:?}"
            ));
        }
        if let Some(g) = &gamma {
            if g.len() != alpha.len() {
                return bad(format!("gamma has {} lags, alpha has {}", g.len(), alpha.len()));
            }
            if g.iter()
                .zip(&alpha)
                .any(|(&gp, &ap)| !gp.is_finite() || ap + gp < T::zero())
            {
                return bad(format!("alpha + gamma must be non-negative: {g:?}"));
            }
        }
        Ok(Self {
            omega,
            alpha,
            beta,
            gamma,
        })
    }

    pub fn garch11(omega: T, alpha: T, beta: T) -> Result<Self> {
        Self::new(omega, vec![alpha], vec![beta], None)
    }

    pub fn gjr11(omega: T, alpha: T, gamma: T, beta: T) -> Result<Self> {
        Self::new(omega, vec![alpha], vec![beta], Some(vec![gamma]))
    }

    /// (P, Q)
    pub fn order(&self) -> (usize, usize) {
        (self.alpha.len(), self.beta.len())
    }

    fn gamma_at(&self, kind: GarchKind, p: usize) -> T {
        match (kind, &self.gamma) {
            (GarchKind::Gjr, Some(g)) => g[p],
            _ => T::zero(),
        }
    }

    /// `Σα + Σβ`, plus `Σγ/2` for GJR.
    pub fn persistence(&self, kind: GarchKind) -> T {
        let base = self.alpha.iter().copied().sum::<T>() + self.beta.iter().copied().sum::<T>();
        match (kind, &self.gamma) {
            (GarchKind::Gjr, Some(g)) => base + g.iter().copied().sum::<T>() / T::lit(2.0),
            _ => base,
        }
    }

    pub fn check_kind(&self, kind: GarchKind) -> Result<()> {
        if kind == GarchKind::Gjr && self.gamma.is_none() {
            return Err(Error::Constraint("GJR model needs gamma coefficients".into()));
        }
        Ok(())
    }

    pub fn check_stationary(&self, kind: GarchKind) -> Result<()> {
        self.check_kind(kind)?;
        let p = self.persistence(kind);
        if !(p < T::one()) {
            return Err(Error::Constraint(format!(
                "non-stationary {kind} parameters: persistence {p} >= 1"
            )));
        }
        Ok(())
    }

    /// Long-run variance `ω / (1 − persistence)`.
    pub fn unconditional_variance(&self, kind: GarchKind) -> Result<T> {
        self.check_stationary(kind)?;
        Ok(self.omega / (T::one() - self.persistence(kind)))
    }

    /// σ²_t from the residual and variance histories strictly before `t`.
    fn next_variance(&self, kind: GarchKind, eps: &[T], sigma2: &[T], t: usize) -> T {
        let mut v = self.omega;
        for (p, &a) in self.alpha.iter().enumerate() {
            let e = eps[t - 1 - p];
            let coef = if e < T::zero() { a + self.gamma_at(kind, p) } else { a };
            v += coef * e * e;
        }
        for (q, &b) in self.beta.iter().enumerate() {
            v += b * sigma2[t - 1 - q];
        }
        v
    }

    fn warmup(&self) -> usize {
        self.alpha.len().max(self.beta.len())
    }
}

/// Free function form of [`GarchParams::unconditional_variance`].
pub fn unconditional_variance<T: Scalar>(params: &GarchParams<T>, kind: GarchKind) -> Result<T> {
    params.unconditional_variance(kind)
}

/// Conditional variances with the residuals and returns that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct VolatilityPath<T> {
    pub sigma2: Vec<T>,
    pub residuals: Vec<T>,
    pub returns: Vec<T>,
}

impl<T: Scalar> VolatilityPath<T> {
    pub fn len(&self) -> usize {
        self.sigma2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma2.is_empty()
    }

    pub fn sigma(&self) -> Vec<T> {
        self.sigma2.iter().map(|v| v.sqrt()).collect()
    }

    /// Gaussian log-likelihood `−½ Σ (ln 2π + ln σ²_t + ε²_t / σ²_t)`.
    pub fn log_likelihood(&self) -> T {
        let ln2pi = T::lit(std::f64::consts::TAU.ln());
        let half = T::lit(0.5);
        -half
            * self
                .sigma2
                .iter()
                .zip(&self.residuals)
                .map(|(&s2, &e)| ln2pi + s2.ln() + e * e / s2)
                .sum::<T>()
    }
}

/// How the filter demeans returns and seeds the first variances.
/// `None` fields are estimated from the filtered returns themselves.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FilterInit<T> {
    pub sigma2_0: Option<T>,
    pub mean: Option<T>,
}

/// Mean and unbiased sample variance.
pub fn mean_variance<T: Scalar>(x: &[T]) -> (T, T) {
    let n = T::from_usize_lossy(x.len());
    let mean = x.iter().copied().sum::<T>() / n;
    let ss = x.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>();
    let denom = if x.len() > 1 { n - T::one() } else { T::one() };
    (mean, ss / denom)
}

/// Runs the variance recursion over `returns`, seeding σ²₀ with the sample
/// variance and demeaning by the sample mean.
pub fn garch_filter<T: Scalar>(params: &GarchParams<T>, returns: &[T], kind: GarchKind) -> Result<VolatilityPath<T>> {
    garch_filter_with(params, returns, kind, FilterInit::default())
}

pub fn garch_filter_with<T: Scalar>(
    params: &GarchParams<T>,
    returns: &[T],
    kind: GarchKind,
    init: FilterInit<T>,
) -> Result<VolatilityPath<T>> {
    params.check_stationary(kind)?;
    let warmup = params.warmup();
    if returns.len() <= warmup {
        return Err(Error::Data(format!(
            "need more than {warmup} returns to filter, got {}",
            returns.len()
        )));
    }
    let (mean, var) = mean_variance(returns);
    let mean = init.mean.unwrap_or(mean);
    let sigma2_0 = init.sigma2_0.unwrap_or(var);
    if !(sigma2_0 > T::zero()) {
        return Err(Error::Degenerate(format!(
            "initial variance must be positive, got {sigma2_0}"
        )));
    }
    let residuals: Vec<T> = returns.iter().map(|&r| r - mean).collect();
    let mut sigma2 = Vec::with_capacity(returns.len());
    for t in 0..returns.len() {
        let v = if t < warmup {
            sigma2_0
        } else {
            params.next_variance(kind, &residuals, &sigma2, t)
        };
        sigma2.push(v);
    }
    Ok(VolatilityPath {
        sigma2,
        residuals,
        returns: returns.to_vec(),
    })
}

/// Simulates `r_t = σ_t z_t` with `z_t` i.i.d. standard normal drawn from
/// `ChaCha8Rng::seed_from_u64(seed)`. The first `max(P, Q)` variances equal
/// the unconditional variance; returns have zero mean.
pub fn garch_simulate<T: Scalar>(
    params: &GarchParams<T>,
    n: usize,
    seed: u64,
    kind: GarchKind,
) -> Result<VolatilityPath<T>> {
    let sigma2_0 = params.unconditional_variance(kind)?;
    if n == 0 {
        return Err(Error::Contract("simulation length must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let warmup = params.warmup();
    let mut sigma2 = Vec::with_capacity(n);
    let mut returns = Vec::with_capacity(n);
    for t in 0..n {
        let v = if t < warmup {
            sigma2_0
        } else {
            params.next_variance(kind, &returns, &sigma2, t)
        };
        let z: f64 = StandardNormal.sample(&mut rng);
        sigma2.push(v);
        returns.push(v.sqrt() * T::lit(z));
    }
    Ok(VolatilityPath {
        sigma2,
        residuals: returns.clone(),
        returns,
    })
}

/// One-step-ahead conditional volatility σ_{T+1} after the end of `path`.
pub fn forecast_sigma<T: Scalar>(params: &GarchParams<T>, path: &VolatilityPath<T>, kind: GarchKind) -> Result<T> {
    params.check_kind(kind)?;
    let t = path.len();
    if t < params.warmup() {
        return Err(Error::Data("path shorter than the model order".into()));
    }
    Ok(params.next_variance(kind, &path.residuals, &path.sigma2, t).sqrt())
}
