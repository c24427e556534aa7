//! Volatility forecasting with GARCH-family models and attention-free LSTM
//! networks.
//!
//! The crate is generic over the floating point type through [`Scalar`];
//! the `*F64` / `*F32` aliases below name the concrete instantiations. The
//! reference configuration runs in `f64`.

// `!(x > 0)` rejects NaN on purpose; tape ops return `Result`, so they cannot be the operator traits.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::should_implement_trait)]

pub mod autodiff;
pub mod data;
pub mod error;
pub mod garch;
pub mod nn;
pub mod optim;
pub mod scalar;
pub mod tensor;
pub mod train;

pub use autodiff::{Gradients, Tape, Var};
pub use error::{Error, Result};
pub use scalar::Scalar;
pub use tensor::Tensor;

pub type TensorF64 = Tensor<f64>;
pub type TensorF32 = Tensor<f32>;
pub type TapeF64 = Tape<f64>;
pub type GarchParamsF64 = garch::GarchParams<f64>;
pub type GarchFitF64 = garch::GarchFit<f64>;
pub type VolatilityPathF64 = garch::VolatilityPath<f64>;
pub type LstmParamsF64 = nn::LstmParams<f64>;
pub type AfLstmParamsF64 = nn::AfLstmParams<f64>;
pub type ModelF64 = nn::Model<f64>;
pub type PriceSeriesF64 = data::PriceSeries<f64>;
pub type WindowedDatasetF64 = data::WindowedDataset<f64>;
pub type TrainReportF64 = train::TrainReport<f64>;
pub type AfLstmParamsF32 = nn::AfLstmParams<f32>;
pub type GarchParamsF32 = garch::GarchParams<f32>;
