//! Recurrent and attention-free layers, built on the autodiff tape.

pub mod af_block;
pub mod af_lstm;
pub mod init;
pub mod lstm;
pub mod model;
pub mod serialize;

pub use af_block::{af_block, AfBlockParams, AfBlockVars, AfVariant};
pub use af_lstm::{af_lstm_forward, AfLstmConfig, AfLstmLayer, AfLstmParams, AfLstmVars, LayerNormParams};
pub use init::Initializer;
pub use lstm::{lstm_step, LstmParams, LstmState, LstmStateVar, LstmVars};
pub use model::{LstmRegressor, Model, ModelConfig, ModelKind, Network};
pub use serialize::{load_params, read_params, save_params, write_params};
