//! Attention-free LSTM layer and network.
//!
//! Per layer, two attention-free channels read the same input sequence:
//!
//! ```text
//! left  = ReLU(LN₁(AF₁(Z)))
//! right = LN₂(AF₂(Z))
//! ζ     = LN₃(left ⊙ right)
//! ```
//!
//! `ζ` is fed step by step through an LSTM. Layers stack by passing the
//! LSTM hidden-state sequence on as the next layer's input; a linear head
//! maps the last hidden state of the last layer to the forecast.

use super::af_block::{AfBlockParams, AfBlockVars, AfVariant};
use super::init::Initializer;
use super::lstm::{LstmParams, LstmState, LstmStateVar, LstmVars};
use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct AfLstmConfig {
    /// Features per time step.
    pub input: usize,
    /// Width of the per-step input embedding `W_x z + b_x`.
    pub dim: usize,
    /// Width of queries, keys, values and of each channel's output.
    pub af_hidden: usize,
    /// LSTM hidden size.
    pub hidden: usize,
    pub layers: usize,
    pub variant: AfVariant,
    pub max_seq_len: usize,
    pub ln_eps: f64,
}

impl Default for AfLstmConfig {
    fn default() -> Self {
        Self {
            input: 2,
            dim: 2,
            af_hidden: 64,
            hidden: 64,
            layers: 1,
            variant: AfVariant::Simple,
            max_seq_len: 1000,
            ln_eps: 1e-5,
        }
    }
}

/// Affine parameters `(ψ, φ)` of a layer normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerNormParams<T> {
    pub psi: Tensor<T>,
    pub phi: Tensor<T>,
}

impl<T: Scalar> LayerNormParams<T> {
    /// ψ = 1, φ = 0.
    pub fn identity(width: usize) -> Self {
        Self {
            psi: Tensor::full(&[width], T::one()),
            phi: Tensor::zeros(&[width]),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AfLstmLayer<T> {
    pub af1: AfBlockParams<T>,
    pub af2: AfBlockParams<T>,
    pub ln1: LayerNormParams<T>,
    pub ln2: LayerNormParams<T>,
    pub ln3: LayerNormParams<T>,
    pub lstm: LstmParams<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AfLstmParams<T> {
    pub config: AfLstmConfig,
    pub layers: Vec<AfLstmLayer<T>>,
    /// `[1 × hidden]`
    pub w_y: Tensor<T>,
    /// `[1]`
    pub b_y: Tensor<T>,
}

impl<T: Scalar> AfLstmParams<T> {
    pub fn init(config: &AfLstmConfig, init: &mut Initializer) -> Result<Self> {
        let c = config;
        if c.layers == 0 || c.hidden == 0 || c.af_hidden == 0 || c.dim == 0 || c.input == 0 {
            return Err(Error::Config(format!("AF-LSTM sizes must be positive: {c:?}")));
        }
        if !(c.ln_eps > 0.0) {
            return Err(Error::Config("layer norm eps must be positive".into()));
        }
        let mut layers = Vec::with_capacity(c.layers);
        for l in 0..c.layers {
            let input = if l == 0 { c.input } else { c.hidden };
            layers.push(AfLstmLayer {
                af1: AfBlockParams::init(input, c.dim, c.af_hidden, c.variant, c.max_seq_len, init)?,
                af2: AfBlockParams::init(input, c.dim, c.af_hidden, c.variant, c.max_seq_len, init)?,
                ln1: LayerNormParams::identity(c.af_hidden),
                ln2: LayerNormParams::identity(c.af_hidden),
                ln3: LayerNormParams::identity(c.af_hidden),
                lstm: LstmParams::init(c.af_hidden, c.hidden, init)?,
            });
        }
        Ok(Self {
            config: c.clone(),
            layers,
            w_y: init.uniform(&[1, c.hidden], c.hidden),
            b_y: init.uniform(&[1], c.hidden),
        })
    }

    pub fn named_tensors(&self) -> Vec<(String, &Tensor<T>)> {
        let mut out = Vec::new();
        for (l, layer) in self.layers.iter().enumerate() {
            out.extend(layer.af1.named_tensors(&format!("layers.{l}.af1.")));
            out.extend(layer.af2.named_tensors(&format!("layers.{l}.af2.")));
            for (name, ln) in [("ln1", &layer.ln1), ("ln2", &layer.ln2), ("ln3", &layer.ln3)] {
                out.push((format!("layers.{l}.{name}.psi"), &ln.psi));
                out.push((format!("layers.{l}.{name}.phi"), &ln.phi));
            }
            out.extend(layer.lstm.named_tensors(&format!("layers.{l}.lstm.")));
        }
        out.push(("head.w_y".into(), &self.w_y));
        out.push(("head.b_y".into(), &self.b_y));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            out.extend(layer.af1.tensors_mut());
            out.extend(layer.af2.tensors_mut());
            for ln in [&mut layer.ln1, &mut layer.ln2, &mut layer.ln3] {
                out.push(&mut ln.psi);
                out.push(&mut ln.phi);
            }
            out.extend(layer.lstm.tensors_mut());
        }
        out.push(&mut self.w_y);
        out.push(&mut self.b_y);
        out
    }

    pub fn bind<'t>(&self, tape: &'t Tape<T>) -> AfLstmVars<'t, T> {
        let layers = self
            .layers
            .iter()
            .map(|layer| {
                let ln = |p: &LayerNormParams<T>| (tape.leaf(p.psi.clone()), tape.leaf(p.phi.clone()));
                AfLstmLayerVars {
                    af1: layer.af1.bind(tape),
                    af2: layer.af2.bind(tape),
                    ln1: ln(&layer.ln1),
                    ln2: ln(&layer.ln2),
                    ln3: ln(&layer.ln3),
                    lstm: layer.lstm.bind(tape),
                }
            })
            .collect();
        AfLstmVars {
            layers,
            w_y: tape.leaf(self.w_y.clone()),
            b_y: tape.leaf(self.b_y.clone()),
            eps: T::lit(self.config.ln_eps),
            hidden: self.config.hidden,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AfLstmLayerVars<'t, T> {
    pub af1: AfBlockVars<'t, T>,
    pub af2: AfBlockVars<'t, T>,
    pub ln1: (Var<'t, T>, Var<'t, T>),
    pub ln2: (Var<'t, T>, Var<'t, T>),
    pub ln3: (Var<'t, T>, Var<'t, T>),
    pub lstm: LstmVars<'t, T>,
}

/// Intermediate activations of one layer, exposed for inspection and tests.
#[derive(Debug, Clone, Copy)]
pub struct AfLstmActivations<'t, T> {
    pub left: Var<'t, T>,
    pub right: Var<'t, T>,
    pub gate: Var<'t, T>,
    pub zeta: Var<'t, T>,
}

impl<'t, T: Scalar> AfLstmLayerVars<'t, T> {
    /// Same order as the layer's entries in [`AfLstmParams::named_tensors`].
    pub fn leaves(&self) -> Vec<Var<'t, T>> {
        let mut out = self.af1.leaves();
        out.extend(self.af2.leaves());
        out.extend([self.ln1.0, self.ln1.1, self.ln2.0, self.ln2.1, self.ln3.0, self.ln3.1]);
        out.extend(self.lstm.leaves());
        out
    }

    pub fn channels(&self, z: Var<'t, T>, eps: T) -> Result<AfLstmActivations<'t, T>> {
        let left = self.af1.forward(z)?.layer_norm(self.ln1.0, self.ln1.1, eps)?.relu();
        let right = self.af2.forward(z)?.layer_norm(self.ln2.0, self.ln2.1, eps)?;
        let gate = left.mul(right)?;
        let zeta = gate.layer_norm(self.ln3.0, self.ln3.1, eps)?;
        Ok(AfLstmActivations {
            left,
            right,
            gate,
            zeta,
        })
    }

    /// `z [B × T × q]` → hidden sequence `[B × T × hidden]` and final state.
    pub fn forward(
        &self,
        z: Var<'t, T>,
        state: LstmStateVar<'t, T>,
        eps: T,
    ) -> Result<(Var<'t, T>, LstmStateVar<'t, T>)> {
        let act = self.channels(z, eps)?;
        self.lstm.unroll(act.zeta, state)
    }
}

#[derive(Debug, Clone)]
pub struct AfLstmVars<'t, T> {
    pub layers: Vec<AfLstmLayerVars<'t, T>>,
    pub w_y: Var<'t, T>,
    pub b_y: Var<'t, T>,
    pub eps: T,
    pub hidden: usize,
}

impl<'t, T: Scalar> AfLstmVars<'t, T> {
    pub fn leaves(&self) -> Vec<Var<'t, T>> {
        let mut out: Vec<_> = self.layers.iter().flat_map(AfLstmLayerVars::leaves).collect();
        out.extend([self.w_y, self.b_y]);
        out
    }

    /// `z [B × T × q]` → forecasts `[B × 1]` and the final state of every layer.
    /// Missing initial states start at zero.
    pub fn forward(
        &self,
        z: Var<'t, T>,
        states: Option<&[LstmState<T>]>,
    ) -> Result<(Var<'t, T>, Vec<LstmStateVar<'t, T>>)> {
        let shape = z.shape();
        if shape.len() != 3 {
            return Err(Error::Dimension {
                op: "af_lstm_forward",
                left: shape,
                right: vec![],
            });
        }
        let tape = z.tape();
        let mut seq = z;
        let mut finals = Vec::with_capacity(self.layers.len());
        for (l, layer) in self.layers.iter().enumerate() {
            let state = match states.and_then(|s| s.get(l)) {
                Some(s) => s.bind(tape),
                None => LstmState::zeros(Some(shape[0]), self.hidden).bind(tape),
            };
            let (hs, last) = layer.forward(seq, state, self.eps)?;
            seq = hs;
            finals.push(last);
        }
        let h_last = finals.last().expect("at least one layer").h;
        let y = h_last.matmul_bt(self.w_y)?.add_bias(self.b_y)?;
        Ok((y, finals))
    }
}

/// Forecast for one sequence `z [T × q]`, with optional per-layer initial
/// states (`[hidden]` each). Returns the forecast and the final states.
pub fn af_lstm_forward<T: Scalar>(
    params: &AfLstmParams<T>,
    z: &Tensor<T>,
    states: Option<&[LstmState<T>]>,
) -> Result<(T, Vec<LstmState<T>>)> {
    let [steps, q] = z.shape() else {
        return Err(Error::Dimension {
            op: "af_lstm_forward",
            left: z.shape().to_vec(),
            right: vec![],
        });
    };
    let batched: Option<Vec<LstmState<T>>> = states.map(|ss| {
        ss.iter()
            .map(|s| LstmState {
                h: s.h.clone().reshape(vec![1, s.h.len()]).expect("state reshape"),
                c: s.c.clone().reshape(vec![1, s.c.len()]).expect("state reshape"),
            })
            .collect()
    });
    let tape = Tape::new();
    let vars = params.bind(&tape);
    let input = tape.leaf(z.clone().reshape(vec![1, *steps, *q])?);
    let (y, finals) = vars.forward(input, batched.as_deref())?;
    let out = finals
        .iter()
        .map(|s| {
            let s = s.value();
            LstmState {
                h: s.h.clone().reshape(vec![s.h.len()]).expect("state reshape"),
                c: s.c.clone().reshape(vec![s.c.len()]).expect("state reshape"),
            }
        })
        .collect();
    Ok((y.item().expect("single forecast"), out))
}
