//! LSTM cell.
//!
//! ```text
//! f = σ(W_f [h; z] + b_f)      i = σ(W_i [h; z] + b_i)
//! c̃ = tanh(W_c [h; z] + b_c)   o = σ(W_o [h; z] + b_o)
//! c' = f ⊙ c + i ⊙ c̃           h' = o ⊙ tanh(c')
//! ```

use super::init::Initializer;
use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Gate weights `[hidden × (hidden + input)]` acting on `[h; z]`, and biases `[hidden]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams<T> {
    pub w_f: Tensor<T>,
    pub w_i: Tensor<T>,
    pub w_c: Tensor<T>,
    pub w_o: Tensor<T>,
    pub b_f: Tensor<T>,
    pub b_i: Tensor<T>,
    pub b_c: Tensor<T>,
    pub b_o: Tensor<T>,
}

/// Hidden and cell state, `[hidden]` or `[batch × hidden]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState<T> {
    pub h: Tensor<T>,
    pub c: Tensor<T>,
}

impl<T: Scalar> LstmState<T> {
    pub fn zeros(batch: Option<usize>, hidden: usize) -> Self {
        let shape = match batch {
            Some(b) => vec![b, hidden],
            None => vec![hidden],
        };
        Self {
            h: Tensor::zeros(&shape),
            c: Tensor::zeros(&shape),
        }
    }

    pub fn bind<'t>(&self, tape: &'t Tape<T>) -> LstmStateVar<'t, T> {
        LstmStateVar {
            h: tape.leaf(self.h.clone()),
            c: tape.leaf(self.c.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LstmStateVar<'t, T> {
    pub h: Var<'t, T>,
    pub c: Var<'t, T>,
}

impl<T: Scalar> LstmStateVar<'_, T> {
    pub fn value(&self) -> LstmState<T> {
        LstmState {
            h: self.h.value(),
            c: self.c.value(),
        }
    }
}

impl<T: Scalar> LstmParams<T> {
    pub fn init(input: usize, hidden: usize, init: &mut Initializer) -> Result<Self> {
        if input == 0 || hidden == 0 {
            return Err(Error::Config(format!(
                "LSTM sizes must be positive (input {input}, hidden {hidden})"
            )));
        }
        let fan_in = hidden + input;
        let w = [hidden, fan_in];
        let b = [hidden];
        Ok(Self {
            w_f: init.uniform(&w, fan_in),
            w_i: init.uniform(&w, fan_in),
            w_c: init.uniform(&w, fan_in),
            w_o: init.uniform(&w, fan_in),
            b_f: init.uniform(&b, fan_in),
            b_i: init.uniform(&b, fan_in),
            b_c: init.uniform(&b, fan_in),
            b_o: init.uniform(&b, fan_in),
        })
    }

    pub fn zeros(input: usize, hidden: usize) -> Self {
        let w = Tensor::zeros(&[hidden, hidden + input]);
        let b = Tensor::zeros(&[hidden]);
        Self {
            w_f: w.clone(),
            w_i: w.clone(),
            w_c: w.clone(),
            w_o: w,
            b_f: b.clone(),
            b_i: b.clone(),
            b_c: b.clone(),
            b_o: b,
        }
    }

    pub fn hidden(&self) -> usize {
        self.w_f.shape()[0]
    }

    pub fn input(&self) -> usize {
        self.w_f.shape()[1] - self.hidden()
    }

    pub fn named_tensors(&self, prefix: &str) -> Vec<(String, &Tensor<T>)> {
        [
            ("w_f", &self.w_f),
            ("w_i", &self.w_i),
            ("w_c", &self.w_c),
            ("w_o", &self.w_o),
            ("b_f", &self.b_f),
            ("b_i", &self.b_i),
            ("b_c", &self.b_c),
            ("b_o", &self.b_o),
        ]
        .into_iter()
        .map(|(n, t)| (format!("{prefix}{n}"), t))
        .collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        vec![
            &mut self.w_f,
            &mut self.w_i,
            &mut self.w_c,
            &mut self.w_o,
            &mut self.b_f,
            &mut self.b_i,
            &mut self.b_c,
            &mut self.b_o,
        ]
    }

    pub fn parameter_count(&self) -> usize {
        self.named_tensors("").iter().map(|(_, t)| t.len()).sum()
    }

    pub fn bind<'t>(&self, tape: &'t Tape<T>) -> LstmVars<'t, T> {
        LstmVars {
            w_f: tape.leaf(self.w_f.clone()),
            w_i: tape.leaf(self.w_i.clone()),
            w_c: tape.leaf(self.w_c.clone()),
            w_o: tape.leaf(self.w_o.clone()),
            b_f: tape.leaf(self.b_f.clone()),
            b_i: tape.leaf(self.b_i.clone()),
            b_c: tape.leaf(self.b_c.clone()),
            b_o: tape.leaf(self.b_o.clone()),
        }
    }
}

/// LSTM parameters registered on a tape.
#[derive(Debug, Clone, Copy)]
pub struct LstmVars<'t, T> {
    pub w_f: Var<'t, T>,
    pub w_i: Var<'t, T>,
    pub w_c: Var<'t, T>,
    pub w_o: Var<'t, T>,
    pub b_f: Var<'t, T>,
    pub b_i: Var<'t, T>,
    pub b_c: Var<'t, T>,
    pub b_o: Var<'t, T>,
}

impl<'t, T: Scalar> LstmVars<'t, T> {
    /// Same order as [`LstmParams::named_tensors`].
    pub fn leaves(&self) -> Vec<Var<'t, T>> {
        vec![
            self.w_f, self.w_i, self.w_c, self.w_o, self.b_f, self.b_i, self.b_c, self.b_o,
        ]
    }

    /// One cell update. `z` is `[input]` or `[batch × input]`, matching the state.
    pub fn step(&self, state: LstmStateVar<'t, T>, z: Var<'t, T>) -> Result<LstmStateVar<'t, T>> {
        let h_shape = state.h.shape();
        let vector = h_shape.len() == 1;
        let (h, c, z) = if vector {
            (
                state.h.reshape(vec![1, h_shape[0]])?,
                state.c.reshape(vec![1, h_shape[0]])?,
                z.reshape(vec![1, z.shape().iter().product()])?,
            )
        } else {
            (state.h, state.c, z)
        };
        let hz = h.concat_last(z)?;
        let gate = |w: Var<'t, T>, b: Var<'t, T>| hz.matmul_bt(w)?.add_bias(b);
        let f = gate(self.w_f, self.b_f)?.sigmoid();
        let i = gate(self.w_i, self.b_i)?.sigmoid();
        let c_tilde = gate(self.w_c, self.b_c)?.tanh();
        let o = gate(self.w_o, self.b_o)?.sigmoid();
        let c_next = f.mul(c)?.add(i.mul(c_tilde)?)?;
        let h_next = o.mul(c_next.tanh())?;
        if vector {
            Ok(LstmStateVar {
                h: h_next.reshape(h_shape.clone())?,
                c: c_next.reshape(h_shape)?,
            })
        } else {
            Ok(LstmStateVar { h: h_next, c: c_next })
        }
    }

    /// Runs the cell over `[batch × steps × input]`, returning the stacked
    /// hidden states `[batch × steps × hidden]` and the final state.
    pub fn unroll(&self, seq: Var<'t, T>, state: LstmStateVar<'t, T>) -> Result<(Var<'t, T>, LstmStateVar<'t, T>)> {
        let shape = seq.shape();
        let steps = shape[shape.len() - 2];
        let mut state = state;
        let mut hs = Vec::with_capacity(steps);
        for t in 0..steps {
            state = self.step(state, seq.select_time(t)?)?;
            hs.push(state.h);
        }
        Ok((seq.tape().stack_time(&hs)?, state))
    }
}

/// Value-level cell update.
pub fn lstm_step<T: Scalar>(params: &LstmParams<T>, state: &LstmState<T>, z: &Tensor<T>) -> Result<LstmState<T>> {
    let tape = Tape::new();
    let vars = params.bind(&tape);
    let next = vars.step(state.bind(&tape), tape.leaf(z.clone()))?;
    Ok(next.value())
}
