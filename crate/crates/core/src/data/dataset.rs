use super::features::{build_features, log_returns, FeatureFrame, FEATURE_NAMES};
use super::scaler::{Scaler, ScalerMode};
use super::series::PriceSeries;
use crate::error::{Error, Result};
use crate::garch::{fit_mle, garch_simulate, FitOptions, GarchFit, GarchKind, GarchParams};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Partition {
    Train,
    Test,
}

impl std::fmt::Display for Partition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Partition::Train => "train",
            Partition::Test => "test",
        })
    }
}

/// Scaled sliding windows over a [`FeatureFrame`].
///
/// Sample `i` reads frame rows `i..i + window` and predicts the target of
/// row `i + window − 1`. Samples `0..split_index` are the training set.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedDataset<T> {
    /// `[samples × window × 2]`
    pub x: Tensor<T>,
    /// Scaled targets, one per sample.
    pub y: Vec<T>,
    pub x_scaler: Scaler<T>,
    pub y_scaler: Scaler<T>,
    pub split_index: usize,
    pub window: usize,
}

impl<T: Scalar> WindowedDataset<T> {
    pub fn samples(&self) -> usize {
        self.y.len()
    }

    pub fn range(&self, part: Partition) -> std::ops::Range<usize> {
        match part {
            Partition::Train => 0..self.split_index,
            Partition::Test => self.split_index..self.samples(),
        }
    }

    pub fn x(&self, part: Partition) -> Tensor<T> {
        let r = self.range(part);
        let per = self.window * FEATURE_NAMES.len();
        Tensor::new(
            vec![r.len(), self.window, FEATURE_NAMES.len()],
            self.x.data()[r.start * per..r.end * per].to_vec(),
        )
        .expect("partition is non-empty")
    }

    pub fn y(&self, part: Partition) -> &[T] {
        &self.y[self.range(part)]
    }

    /// Targets in volatility units.
    pub fn y_unscaled(&self, part: Partition) -> Vec<T> {
        self.y(part).iter().map(|&v| self.y_scaler.inverse(0, v)).collect()
    }

    /// Frame row whose target sample `i` predicts.
    pub fn target_row(&self, i: usize) -> usize {
        i + self.window - 1
    }
}

/// `(samples, train samples)` for a frame of `rows` rows.
pub fn split_sizes(rows: usize, window: usize, split: f64) -> Result<(usize, usize)> {
    if !(split > 0.0 && split < 1.0) {
        return Err(Error::Config(format!("split must be in (0, 1), got {split}")));
    }
    if window == 0 {
        return Err(Error::Config("window must be at least 1".into()));
    }
    let samples = (rows + 1).saturating_sub(window);
    let train = (split * samples as f64).floor() as usize;
    if train == 0 || train == samples {
        return Err(Error::Data(format!(
            "{rows} feature rows give {samples} windows of length {window}; \
             a {split} split needs at least one training and one test window"
        )));
    }
    Ok((samples, train))
}

/// Fits scalers on the training rows only and cuts the frame into windows.
pub fn fit_transform_scalers<T: Scalar>(
    frame: &FeatureFrame<T>,
    window: usize,
    split: f64,
    mode: ScalerMode,
) -> Result<WindowedDataset<T>> {
    let (samples, train) = split_sizes(frame.len(), window, split)?;
    // rows visible to training windows, and the rows whose targets they predict
    let x_rows = train + window - 1;
    let x_scaler = Scaler::fit(
        mode,
        &[&frame.realized_vol[..x_rows], &frame.garch_vol[..x_rows]],
        &FEATURE_NAMES,
    )?;
    let y_scaler = Scaler::fit(mode, &[&frame.target[window - 1..x_rows]], &["target"])?;

    let cols = [&frame.realized_vol, &frame.garch_vol];
    let mut x = Vec::with_capacity(samples * window * cols.len());
    for i in 0..samples {
        for row in i..i + window {
            for (j, col) in cols.iter().enumerate() {
                x.push(x_scaler.transform(j, col[row]));
            }
        }
    }
    let y = (0..samples)
        .map(|i| y_scaler.transform(0, frame.target[i + window - 1]))
        .collect();
    Ok(WindowedDataset {
        x: Tensor::new(vec![samples, window, cols.len()], x)?,
        y,
        x_scaler,
        y_scaler,
        split_index: train,
        window,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOptions {
    pub window: usize,
    pub split: f64,
    pub garch: GarchKind,
    pub scaler: ScalerMode,
    pub fit: FitOptions,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            window: 5,
            split: 0.8,
            garch: GarchKind::Garch,
            scaler: ScalerMode::MinMax,
            fit: FitOptions::default(),
        }
    }
}

/// Everything produced between a price series and a training set.
#[derive(Debug, Clone, PartialEq)]
pub struct Prepared<T> {
    /// `returns_end[t]` is the timestamp at which `r_t` is known.
    pub returns_end: Vec<i64>,
    pub returns: Vec<T>,
    pub garch: GarchFit<T>,
    pub frame: FeatureFrame<T>,
    pub dataset: WindowedDataset<T>,
}

impl<T: Scalar> Prepared<T> {
    /// Timestamp at which the target of sample `i` is realized.
    pub fn sample_timestamp(&self, i: usize) -> i64 {
        let step = self.frame.steps[self.dataset.target_row(i)];
        self.returns_end[step]
    }

    /// Partition of frame row `k`, by the sample predicting its target.
    pub fn row_partition(&self, k: usize) -> Partition {
        if k < self.dataset.split_index + self.dataset.window - 1 {
            Partition::Train
        } else {
            Partition::Test
        }
    }

    /// `t,realized_vol,garch_vol,target,split`, one line per frame row.
    pub fn write_frame_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,realized_vol,garch_vol,target,split")?;
        let f = &self.frame;
        for k in 0..f.len() {
            writeln!(
                out,
                "{},{:e},{:e},{:e},{}",
                self.returns_end[f.steps[k]],
                f.realized_vol[k].as_f64(),
                f.garch_vol[k].as_f64(),
                f.target[k].as_f64(),
                self.row_partition(k)
            )?;
        }
        Ok(())
    }
}

/// Log returns → GARCH fit on the training span → features → scaled windows.
///
/// The GARCH model only sees returns up to the last one any training target
/// depends on; the fitted recursion is then run over the whole series.
pub fn prepare_dataset<T: Scalar>(series: &PriceSeries<T>, opts: &PipelineOptions) -> Result<Prepared<T>> {
    let returns = log_returns(series.close())?;
    let w = opts.window;
    let n = returns.len();
    let rows = n
        .checked_sub(w)
        .ok_or_else(|| Error::Data(format!("{n} returns are too few for window {w}")))?;
    let (_, train) = split_sizes(rows, w, opts.split)?;
    let fit_end = train + 2 * w - 1;
    let garch = fit_mle(&returns[..fit_end], opts.garch, &opts.fit)?;
    let frame = build_features(&returns, &garch, w)?;
    let dataset = fit_transform_scalers(&frame, w, opts.split, opts.scaler)?;
    Ok(Prepared {
        returns_end: series.timestamps()[1..].to_vec(),
        returns,
        garch,
        frame,
        dataset,
    })
}

pub const SYNTHETIC_OMEGA: f64 = 0.1;
pub const SYNTHETIC_ALPHA: f64 = 0.1;
pub const SYNTHETIC_BETA: f64 = 0.8;
pub const SYNTHETIC_START: i64 = 1_577_836_800;

/// `n` daily prices `100·exp(Σ r)` driven by returns simulated from
/// `params`, starting at [`SYNTHETIC_START`].
pub fn simulated_prices<T: Scalar>(
    params: &GarchParams<T>,
    kind: GarchKind,
    seed: u64,
    n: usize,
) -> Result<PriceSeries<T>> {
    if n < 2 {
        return Err(Error::Config(format!(
            "simulated series needs at least 2 prices, got {n}"
        )));
    }
    let sim = garch_simulate(params, n - 1, seed, kind)?;
    let mut level = T::zero();
    let mut close = vec![T::lit(100.0)];
    for &r in &sim.returns {
        level += r;
        close.push(T::lit(100.0) * level.exp());
    }
    let timestamps = (0..n as i64).map(|i| SYNTHETIC_START + 86_400 * i).collect();
    PriceSeries::new(timestamps, close)
}

/// [`simulated_prices`] with ω = 0.1, α = 0.1, β = 0.8.
pub fn synthetic_prices<T: Scalar>(seed: u64, n: usize) -> Result<PriceSeries<T>> {
    let params = GarchParams::garch11(T::lit(SYNTHETIC_OMEGA), T::lit(SYNTHETIC_ALPHA), T::lit(SYNTHETIC_BETA))?;
    simulated_prices(&params, GarchKind::Garch, seed, n)
}
