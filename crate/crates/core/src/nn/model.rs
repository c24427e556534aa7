//! The two forecasters behind one interface.

use super::af_block::AfVariant;
use super::af_lstm::{AfLstmConfig, AfLstmParams};
use super::init::Initializer;
use super::lstm::{LstmParams, LstmState, LstmVars};
use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Lstm,
    AfLstm,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Lstm => "lstm",
            ModelKind::AfLstm => "af-lstm",
        })
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lstm" => Ok(ModelKind::Lstm),
            "af-lstm" | "af_lstm" | "aflstm" => Ok(ModelKind::AfLstm),
            other => Err(Error::Config(format!("unknown model `{other}`"))),
        }
    }
}

/// Sizes shared by both models. `dim`, `af_hidden`, `variant` and
/// `max_seq_len` only matter for the attention-free network.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub input: usize,
    pub hidden: usize,
    pub layers: usize,
    pub dim: usize,
    pub af_hidden: usize,
    pub variant: AfVariant,
    pub max_seq_len: usize,
    pub ln_eps: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let af = AfLstmConfig::default();
        Self {
            kind: ModelKind::AfLstm,
            input: af.input,
            hidden: af.hidden,
            layers: af.layers,
            dim: af.dim,
            af_hidden: af.af_hidden,
            variant: af.variant,
            max_seq_len: af.max_seq_len,
            ln_eps: af.ln_eps,
        }
    }
}

impl ModelConfig {
    pub fn af_lstm(&self) -> AfLstmConfig {
        AfLstmConfig {
            input: self.input,
            dim: self.dim,
            af_hidden: self.af_hidden,
            hidden: self.hidden,
            layers: self.layers,
            variant: self.variant,
            max_seq_len: self.max_seq_len,
            ln_eps: self.ln_eps,
        }
    }
}

/// Stacked LSTM with a linear head on the last hidden state.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmRegressor<T> {
    pub layers: Vec<LstmParams<T>>,
    pub w_y: Tensor<T>,
    pub b_y: Tensor<T>,
}

impl<T: Scalar> LstmRegressor<T> {
    pub fn init(input: usize, hidden: usize, layers: usize, init: &mut Initializer) -> Result<Self> {
        if layers == 0 {
            return Err(Error::Config("at least one layer is required".into()));
        }
        let layers = (0..layers)
            .map(|l| LstmParams::init(if l == 0 { input } else { hidden }, hidden, init))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            layers,
            w_y: init.uniform(&[1, hidden], hidden),
            b_y: init.uniform(&[1], hidden),
        })
    }

    pub fn named_tensors(&self) -> Vec<(String, &Tensor<T>)> {
        let mut out = Vec::new();
        for (l, p) in self.layers.iter().enumerate() {
            out.extend(p.named_tensors(&format!("layers.{l}.lstm.")));
        }
        out.push(("head.w_y".into(), &self.w_y));
        out.push(("head.b_y".into(), &self.b_y));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut out: Vec<_> = self.layers.iter_mut().flat_map(LstmParams::tensors_mut).collect();
        out.push(&mut self.w_y);
        out.push(&mut self.b_y);
        out
    }

    fn forward<'t>(&self, tape: &'t Tape<T>, x: Var<'t, T>) -> Result<(Var<'t, T>, Vec<Var<'t, T>>)> {
        let vars: Vec<LstmVars<'t, T>> = self.layers.iter().map(|p| p.bind(tape)).collect();
        let w_y = tape.leaf(self.w_y.clone());
        let b_y = tape.leaf(self.b_y.clone());
        let batch = x.shape()[0];
        let mut seq = x;
        let mut last = None;
        for (v, p) in vars.iter().zip(&self.layers) {
            let state = LstmState::zeros(Some(batch), p.hidden()).bind(tape);
            let (hs, fin) = v.unroll(seq, state)?;
            seq = hs;
            last = Some(fin.h);
        }
        let y = last.expect("at least one layer").matmul_bt(w_y)?.add_bias(b_y)?;
        let mut leaves: Vec<_> = vars.iter().flat_map(LstmVars::leaves).collect();
        leaves.extend([w_y, b_y]);
        Ok((y, leaves))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Network<T> {
    Lstm(LstmRegressor<T>),
    AfLstm(AfLstmParams<T>),
}

/// A forecaster mapping windows `[B × T × input]` to one value per window.
#[derive(Debug, Clone, PartialEq)]
pub struct Model<T> {
    pub config: ModelConfig,
    pub seed: u64,
    pub net: Network<T>,
}

impl<T: Scalar> Model<T> {
    pub fn init(config: &ModelConfig, seed: u64) -> Result<Self> {
        let mut init = Initializer::new(seed);
        let net = match config.kind {
            ModelKind::Lstm => {
                if config.input == 0 || config.hidden == 0 {
                    return Err(Error::Config(format!(
                        "LSTM sizes must be positive (input {}, hidden {})",
                        config.input, config.hidden
                    )));
                }
                Network::Lstm(LstmRegressor::init(
                    config.input,
                    config.hidden,
                    config.layers,
                    &mut init,
                )?)
            }
            ModelKind::AfLstm => Network::AfLstm(AfLstmParams::init(&config.af_lstm(), &mut init)?),
        };
        Ok(Self {
            config: config.clone(),
            seed,
            net,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.config.kind
    }

    pub fn named_tensors(&self) -> Vec<(String, &Tensor<T>)> {
        match &self.net {
            Network::Lstm(m) => m.named_tensors(),
            Network::AfLstm(m) => m.named_tensors(),
        }
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        match &mut self.net {
            Network::Lstm(m) => m.tensors_mut(),
            Network::AfLstm(m) => m.tensors_mut(),
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.named_tensors().iter().map(|(_, t)| t.len()).sum()
    }

    /// Records the forward pass on `tape`. Returns predictions `[B × 1]` and
    /// the parameter leaves in [`Model::named_tensors`] order.
    pub fn forward<'t>(&self, tape: &'t Tape<T>, x: Var<'t, T>) -> Result<(Var<'t, T>, Vec<Var<'t, T>>)> {
        let shape = x.shape();
        if shape.len() != 3 || shape[2] != self.config.input {
            return Err(Error::Dimension {
                op: "model_forward",
                left: shape,
                right: vec![self.config.input],
            });
        }
        match &self.net {
            Network::Lstm(m) => m.forward(tape, x),
            Network::AfLstm(m) => {
                let vars = m.bind(tape);
                let (y, _) = vars.forward(x, None)?;
                Ok((y, vars.leaves()))
            }
        }
    }

    pub fn predict(&self, x: &Tensor<T>) -> Result<Vec<T>> {
        let tape = Tape::new();
        let (y, _) = self.forward(&tape, tape.leaf(x.clone()))?;
        Ok(y.value().into_data())
    }
}
