use crate::error::{Error, Result};
use crate::garch::GarchFit;
use crate::scalar::Scalar;

/// `r_t = ln(p_{t+1} / p_t)`, one shorter than `prices`.
pub fn log_returns<T: Scalar>(prices: &[T]) -> Result<Vec<T>> {
    if prices.len() < 2 {
        return Err(Error::Data(format!("need at least 2 prices, got {}", prices.len())));
    }
    if let Some(i) = prices.iter().position(|p| !(*p > T::zero())) {
        return Err(Error::Data(format!(
            "price at index {i} is not positive: {}",
            prices[i]
        )));
    }
    Ok(prices.windows(2).map(|w| (w[1] / w[0]).ln()).collect())
}

/// Population standard deviation of the `window` returns strictly before
/// each step. Entry `k` belongs to step `t = window + k`, so the output has
/// `returns.len() − window + 1` entries and the last one summarizes the
/// final `window` returns.
pub fn rolling_volatility<T: Scalar>(returns: &[T], window: usize) -> Result<Vec<T>> {
    if window == 0 {
        return Err(Error::Config("rolling window must be at least 1".into()));
    }
    if returns.len() < window {
        return Err(Error::Data(format!(
            "need at least {window} returns for the rolling window, got {}",
            returns.len()
        )));
    }
    let w = T::from_usize_lossy(window);
    Ok(returns
        .windows(window)
        .map(|xs| {
            let mean = xs.iter().copied().sum::<T>() / w;
            let var = xs.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>() / w;
            var.sqrt()
        })
        .collect())
}

/// Per-step model inputs and targets. Row `k` describes step
/// `t = steps[k]`: both features use returns before `t`, the target is the
/// realized volatility at `t + 1`, which includes `r_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureFrame<T> {
    pub steps: Vec<usize>,
    pub realized_vol: Vec<T>,
    pub garch_vol: Vec<T>,
    pub target: Vec<T>,
}

impl<T> FeatureFrame<T> {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

pub const FEATURE_NAMES: [&str; 2] = ["realized_vol", "garch_vol"];

/// Rows for `t` in `[window, n)`: `n − window` of them. The GARCH feature is
/// the conditional σ_t from filtering the whole series with the fitted
/// parameters and the fit-time seeding.
pub fn build_features<T: Scalar>(returns: &[T], garch: &GarchFit<T>, window: usize) -> Result<FeatureFrame<T>> {
    let n = returns.len();
    if n <= window {
        return Err(Error::Data(format!(
            "need at least {} returns for window {window}, got {n}",
            window + 1
        )));
    }
    let rv = rolling_volatility(returns, window)?;
    let sigma = garch.filter(returns)?.sigma();
    let steps: Vec<usize> = (window..n).collect();
    Ok(FeatureFrame {
        realized_vol: steps.iter().map(|&t| rv[t - window]).collect(),
        garch_vol: steps.iter().map(|&t| sigma[t]).collect(),
        target: steps.iter().map(|&t| rv[t + 1 - window]).collect(),
        steps,
    })
}
