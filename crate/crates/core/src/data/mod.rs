//! From close prices to scaled training windows.

pub mod dataset;
pub mod features;
pub mod scaler;
pub mod series;

pub use dataset::{
    fit_transform_scalers, prepare_dataset, simulated_prices, split_sizes, synthetic_prices, Partition,
    PipelineOptions, Prepared, WindowedDataset,
};
pub use features::{build_features, log_returns, rolling_volatility, FeatureFrame, FEATURE_NAMES};
pub use scaler::{Scaler, ScalerMode};
pub use series::{parse_timestamp, PriceSeries};
