//! Attention-free block.
//!
//! Inputs `Z [.. × T × q]` are embedded step by step (`x = W_x z + b_x`) and
//! projected to queries, keys and values. Two mixing rules are available:
//!
//! * [`AfVariant::Simple`]: one context vector per sequence,
//!   `η = Σ_t softmax_t(K) ⊙ V`, shared by every step; output `σ(Q_t) ⊙ η`.
//! * [`AfVariant::PositionBias`]: a context per target step weighted by
//!   `exp(K_s + w_{t,s})` with learned pair-wise biases `w`; output
//!   `σ(Q_t) ⊙ Σ_s exp(K_s + w_{t,s}) V_s / Σ_s exp(K_s + w_{t,s})`.

use super::init::Initializer;
use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum AfVariant {
    #[default]
    Simple,
    PositionBias,
}

impl std::fmt::Display for AfVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AfVariant::Simple => "simple",
            AfVariant::PositionBias => "position-bias",
        })
    }
}

impl std::str::FromStr for AfVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simple" => Ok(AfVariant::Simple),
            "position-bias" | "position_bias" => Ok(AfVariant::PositionBias),
            other => Err(Error::Config(format!("unknown attention-free variant `{other}`"))),
        }
    }
}

/// Weights of one attention-free block.
///
/// `w_x [embed × input]`, `b_x [embed]`, `w_q`/`w_k`/`w_v [width × embed]`,
/// and for the position-bias variant `w_bias [cap × cap]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AfBlockParams<T> {
    pub w_x: Tensor<T>,
    pub b_x: Tensor<T>,
    pub w_q: Tensor<T>,
    pub w_k: Tensor<T>,
    pub w_v: Tensor<T>,
    pub w_bias: Option<Tensor<T>>,
}

impl<T: Scalar> AfBlockParams<T> {
    /// Position biases start at zero; every other weight is drawn uniformly.
    pub fn init(
        input: usize,
        embed: usize,
        width: usize,
        variant: AfVariant,
        max_seq_len: usize,
        init: &mut Initializer,
    ) -> Result<Self> {
        if input == 0 || embed == 0 || width == 0 || max_seq_len == 0 {
            return Err(Error::Config(format!(
                "attention-free sizes must be positive (input {input}, embed {embed}, width {width}, max_seq_len {max_seq_len})"
            )));
        }
        Ok(Self {
            w_x: init.uniform(&[embed, input], input),
            b_x: init.uniform(&[embed], input),
            w_q: init.uniform(&[width, embed], embed),
            w_k: init.uniform(&[width, embed], embed),
            w_v: init.uniform(&[width, embed], embed),
            w_bias: match variant {
                AfVariant::Simple => None,
                AfVariant::PositionBias => Some(Tensor::zeros(&[max_seq_len, max_seq_len])),
            },
        })
    }

    pub fn variant(&self) -> AfVariant {
        if self.w_bias.is_some() {
            AfVariant::PositionBias
        } else {
            AfVariant::Simple
        }
    }

    pub fn width(&self) -> usize {
        self.w_q.shape()[0]
    }

    pub fn named_tensors(&self, prefix: &str) -> Vec<(String, &Tensor<T>)> {
        let mut out = vec![
            (format!("{prefix}w_x"), &self.w_x),
            (format!("{prefix}b_x"), &self.b_x),
            (format!("{prefix}w_q"), &self.w_q),
            (format!("{prefix}w_k"), &self.w_k),
            (format!("{prefix}w_v"), &self.w_v),
        ];
        if let Some(w) = &self.w_bias {
            out.push((format!("{prefix}w_bias"), w));
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut out = vec![
            &mut self.w_x,
            &mut self.b_x,
            &mut self.w_q,
            &mut self.w_k,
            &mut self.w_v,
        ];
        if let Some(w) = &mut self.w_bias {
            out.push(w);
        }
        out
    }

    pub fn bind<'t>(&self, tape: &'t Tape<T>) -> AfBlockVars<'t, T> {
        AfBlockVars {
            w_x: tape.leaf(self.w_x.clone()),
            b_x: tape.leaf(self.b_x.clone()),
            w_q: tape.leaf(self.w_q.clone()),
            w_k: tape.leaf(self.w_k.clone()),
            w_v: tape.leaf(self.w_v.clone()),
            w_bias: self.w_bias.as_ref().map(|w| tape.leaf(w.clone())),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AfBlockVars<'t, T> {
    pub w_x: Var<'t, T>,
    pub b_x: Var<'t, T>,
    pub w_q: Var<'t, T>,
    pub w_k: Var<'t, T>,
    pub w_v: Var<'t, T>,
    pub w_bias: Option<Var<'t, T>>,
}

impl<'t, T: Scalar> AfBlockVars<'t, T> {
    pub fn leaves(&self) -> Vec<Var<'t, T>> {
        let mut out = vec![self.w_x, self.b_x, self.w_q, self.w_k, self.w_v];
        out.extend(self.w_bias);
        out
    }

    /// `z [.. × T × input]` → `[.. × T × width]`.
    pub fn forward(&self, z: Var<'t, T>) -> Result<Var<'t, T>> {
        let shape = z.shape();
        if shape.len() < 2 {
            return Err(Error::Dimension {
                op: "af_block",
                left: shape,
                right: vec![],
            });
        }
        let steps = shape[shape.len() - 2];
        let input = shape[shape.len() - 1];
        let rows: usize = shape[..shape.len() - 1].iter().product();
        let out_shape = |width: usize| {
            let mut s = shape[..shape.len() - 1].to_vec();
            s.push(width);
            s
        };

        let x = z.reshape(vec![rows, input])?.matmul_bt(self.w_x)?.add_bias(self.b_x)?;
        let project = |w: Var<'t, T>| -> Result<Var<'t, T>> {
            let p = x.matmul_bt(w)?;
            let width = p.shape()[1];
            p.reshape(out_shape(width))
        };
        let q = project(self.w_q)?;
        let k = project(self.w_k)?;
        let v = project(self.w_v)?;

        let mixed = match self.w_bias {
            None => k
                .softmax_over_time()?
                .mul(v)?
                .sum_over_time()?
                .broadcast_over_time(steps)?,
            Some(w) => z.tape().position_bias_mix(k, v, w)?,
        };
        q.sigmoid().mul(mixed)
    }
}

/// Value-level forward of one block.
pub fn af_block<T: Scalar>(params: &AfBlockParams<T>, z: &Tensor<T>) -> Result<Tensor<T>> {
    let tape = Tape::new();
    let vars = params.bind(&tape);
    Ok(vars.forward(tape.leaf(z.clone()))?.value())
}
