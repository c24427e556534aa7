//! Forward rules. Each method computes a value and records the node.

use ndarray::linalg::general_mat_mul;

use super::{Op, Tape, Var};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Sigmoid,
    Tanh,
    Relu,
    Exp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
}

pub(crate) fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

impl UnaryOp {
    pub(crate) fn apply<T: Scalar>(self, x: T) -> T {
        match self {
            UnaryOp::Sigmoid => sigmoid(x),
            UnaryOp::Tanh => x.tanh(),
            UnaryOp::Relu => x.max(T::zero()),
            UnaryOp::Exp => x.exp(),
        }
    }

    /// Local derivative from input `x` and output `y`.
    pub(crate) fn derivative<T: Scalar>(self, x: T, y: T) -> T {
        match self {
            UnaryOp::Sigmoid => y * (T::one() - y),
            UnaryOp::Tanh => T::one() - y * y,
            // relu'(0) = 0
            UnaryOp::Relu => {
                if x > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            UnaryOp::Exp => y,
        }
    }
}

/// Splits a `[.., steps, width]` shape into (leading, steps, width).
pub(crate) fn time_dims(shape: &[usize]) -> Option<(usize, usize, usize)> {
    let r = shape.len();
    if r < 2 {
        return None;
    }
    let lead = shape[..r - 2].iter().product();
    Some((lead, shape[r - 2], shape[r - 1]))
}

fn require_time_dims(op: &'static str, shape: &[usize]) -> Result<(usize, usize, usize)> {
    time_dims(shape).ok_or_else(|| Error::Dimension {
        op,
        left: shape.to_vec(),
        right: vec![],
    })
}

fn same_shape(op: &'static str, a: &Tensor<impl Scalar>, b: &Tensor<impl Scalar>) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::Dimension {
            op,
            left: a.shape().to_vec(),
            right: b.shape().to_vec(),
        });
    }
    Ok(())
}

impl<T: Scalar> Tape<T> {
    /// Stacks `[.., width]` tensors along a new time axis, giving `[.., steps, width]`.
    pub fn stack_time<'t>(&'t self, parts: &[Var<'t, T>]) -> Result<Var<'t, T>> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Contract("stack_time needs at least one part".into()))?;
        let shape = first.shape();
        if shape.is_empty() {
            return Err(Error::Dimension {
                op: "stack_time",
                left: shape,
                right: vec![],
            });
        }
        let width = *shape.last().unwrap();
        let lead: usize = shape[..shape.len() - 1].iter().product();
        let steps = parts.len();
        let mut out = vec![T::zero(); lead * steps * width];
        {
            let nodes = self.nodes();
            for (t, p) in parts.iter().enumerate() {
                let v = &nodes[p.id].value;
                if v.shape() != shape.as_slice() {
                    return Err(Error::Dimension {
                        op: "stack_time",
                        left: shape.clone(),
                        right: v.shape().to_vec(),
                    });
                }
                for b in 0..lead {
                    let dst = (b * steps + t) * width;
                    out[dst..dst + width].copy_from_slice(&v.data()[b * width..(b + 1) * width]);
                }
            }
        }
        let mut out_shape = shape[..shape.len() - 1].to_vec();
        out_shape.extend([steps, width]);
        let value = Tensor::new(out_shape, out)?;
        Ok(self.push(
            value,
            Op::StackTime {
                parts: parts.iter().map(|p| p.id).collect(),
            },
        ))
    }

    /// Attention-free mixing with pair-wise position biases.
    ///
    /// For every leading index, feature `j` and target step `t`:
    /// `out[t, j] = Σ_s exp(k[s, j] + w[t, s]) v[s, j] / Σ_s exp(k[s, j] + w[t, s])`.
    /// `w` is a `[cap × cap]` matrix of which the top-left `steps × steps`
    /// block is used.
    pub fn position_bias_mix<'t>(&'t self, k: Var<'t, T>, v: Var<'t, T>, w: Var<'t, T>) -> Result<Var<'t, T>> {
        let (value, weights) = {
            let nodes = self.nodes();
            let (kt, vt, wt) = (&nodes[k.id].value, &nodes[v.id].value, &nodes[w.id].value);
            same_shape("position_bias_mix", kt, vt)?;
            let (lead, steps, width) = require_time_dims("position_bias_mix", kt.shape())?;
            let cap = match wt.shape() {
                [r, c] if r == c => *r,
                other => {
                    return Err(Error::Dimension {
                        op: "position_bias_mix",
                        left: other.to_vec(),
                        right: vec![steps, steps],
                    })
                }
            };
            if steps > cap {
                return Err(Error::Capacity { len: steps, max: cap });
            }
            let (kd, vd, wd) = (kt.data(), vt.data(), wt.data());
            let mut out = vec![T::zero(); kd.len()];
            let mut weights = vec![T::zero(); lead * width * steps * steps];
            let mut logits = vec![T::zero(); steps];
            for b in 0..lead {
                for j in 0..width {
                    for t in 0..steps {
                        let mut max = T::neg_infinity();
                        for s in 0..steps {
                            let a = kd[(b * steps + s) * width + j] + wd[t * cap + s];
                            logits[s] = a;
                            max = max.max(a);
                        }
                        let mut denom = T::zero();
                        for l in logits.iter_mut() {
                            *l = (*l - max).exp();
                            denom += *l;
                        }
                        let base = ((b * width + j) * steps + t) * steps;
                        let mut acc = T::zero();
                        for s in 0..steps {
                            let p = logits[s] / denom;
                            weights[base + s] = p;
                            acc += p * vd[(b * steps + s) * width + j];
                        }
                        out[(b * steps + t) * width + j] = acc;
                    }
                }
            }
            (Tensor::new(kt.shape().to_vec(), out)?, weights)
        };
        Ok(self.push(
            value,
            Op::PositionBias {
                k: k.id,
                v: v.id,
                w: w.id,
                weights,
            },
        ))
    }
}

impl<'t, T: Scalar> Var<'t, T> {
    fn check_same_tape(&self, other: &Var<'t, T>) -> Result<()> {
        if std::ptr::eq(self.tape, other.tape) {
            Ok(())
        } else {
            Err(Error::Contract("operands recorded on different tapes".into()))
        }
    }

    /// Matrix product `self [m×k] · rhs [k×n]`.
    pub fn matmul(self, rhs: Var<'t, T>) -> Result<Self> {
        self.check_same_tape(&rhs)?;
        let value = {
            let nodes = self.tape.nodes();
            let (a, b) = (&nodes[self.id].value, &nodes[rhs.id].value);
            match (a.shape(), b.shape()) {
                ([m, k], [k2, n]) if k == k2 => {
                    let mut out = Tensor::zeros(&[*m, *n]);
                    general_mat_mul(T::one(), &a.view2(), &b.view2(), T::zero(), &mut out.view2_mut());
                    out
                }
                _ => {
                    return Err(Error::Dimension {
                        op: "matmul",
                        left: a.shape().to_vec(),
                        right: b.shape().to_vec(),
                    })
                }
            }
        };
        Ok(self.tape.push(value, Op::MatMul { a: self.id, b: rhs.id }))
    }

    /// `self [m×k] · wᵀ` for `w [n×k]`; the usual dense-layer product.
    pub fn matmul_bt(self, w: Var<'t, T>) -> Result<Self> {
        self.check_same_tape(&w)?;
        let value = {
            let nodes = self.tape.nodes();
            let (a, b) = (&nodes[self.id].value, &nodes[w.id].value);
            match (a.shape(), b.shape()) {
                ([m, k], [n, k2]) if k == k2 => {
                    let mut out = Tensor::zeros(&[*m, *n]);
                    general_mat_mul(T::one(), &a.view2(), &b.view2().t(), T::zero(), &mut out.view2_mut());
                    out
                }
                _ => {
                    return Err(Error::Dimension {
                        op: "matmul_bt",
                        left: a.shape().to_vec(),
                        right: b.shape().to_vec(),
                    })
                }
            }
        };
        Ok(self.tape.push(value, Op::MatMulBt { a: self.id, w: w.id }))
    }

    pub fn binary(self, op: BinaryOp, rhs: Var<'t, T>) -> Result<Self> {
        self.check_same_tape(&rhs)?;
        let value = {
            let nodes = self.tape.nodes();
            let (a, b) = (&nodes[self.id].value, &nodes[rhs.id].value);
            let name = match op {
                BinaryOp::Add => "add",
                BinaryOp::Sub => "sub",
                BinaryOp::Mul => "mul",
            };
            same_shape(name, a, b)?;
            let data = a
                .data()
                .iter()
                .zip(b.data())
                .map(|(&x, &y)| match op {
                    BinaryOp::Add => x + y,
                    BinaryOp::Sub => x - y,
                    BinaryOp::Mul => x * y,
                })
                .collect();
            Tensor::new(a.shape().to_vec(), data)?
        };
        let (a, b) = (self.id, rhs.id);
        let node = match op {
            BinaryOp::Add => Op::Add { a, b },
            BinaryOp::Sub => Op::Sub { a, b },
            BinaryOp::Mul => Op::Mul { a, b },
        };
        Ok(self.tape.push(value, node))
    }

    pub fn add(self, rhs: Var<'t, T>) -> Result<Self> {
        self.binary(BinaryOp::Add, rhs)
    }

    pub fn sub(self, rhs: Var<'t, T>) -> Result<Self> {
        self.binary(BinaryOp::Sub, rhs)
    }

    pub fn mul(self, rhs: Var<'t, T>) -> Result<Self> {
        self.binary(BinaryOp::Mul, rhs)
    }

    pub fn unary(self, op: UnaryOp) -> Self {
        let value = self.tape.nodes()[self.id].value.map(|x| op.apply(x));
        self.tape.push(value, Op::Unary { x: self.id, op })
    }

    pub fn sigmoid(self) -> Self {
        self.unary(UnaryOp::Sigmoid)
    }

    pub fn tanh(self) -> Self {
        self.unary(UnaryOp::Tanh)
    }

    pub fn relu(self) -> Self {
        self.unary(UnaryOp::Relu)
    }

    pub fn exp(self) -> Self {
        self.unary(UnaryOp::Exp)
    }

    /// Multiplies every entry by a constant.
    pub fn scale(self, factor: T) -> Self {
        let value = self.tape.nodes()[self.id].value.map(|x| x * factor);
        self.tape.push(value, Op::Scale { x: self.id, factor })
    }

    /// Adds a constant to every entry.
    pub fn add_scalar(self, c: T) -> Self {
        let value = self.tape.nodes()[self.id].value.map(|x| x + c);
        self.tape.push(value, Op::AddScalar { x: self.id })
    }

    /// Adds `bias [n]` to every row of `self [.., n]`.
    pub fn add_bias(self, bias: Var<'t, T>) -> Result<Self> {
        self.check_same_tape(&bias)?;
        let value = {
            let nodes = self.tape.nodes();
            let (x, b) = (&nodes[self.id].value, &nodes[bias.id].value);
            let n = x.last_dim();
            if b.shape() != [n] || x.rank() == 0 {
                return Err(Error::Dimension {
                    op: "add_bias",
                    left: x.shape().to_vec(),
                    right: b.shape().to_vec(),
                });
            }
            let data = x
                .data()
                .chunks(n)
                .flat_map(|row| row.iter().zip(b.data()).map(|(&u, &v)| u + v))
                .collect();
            Tensor::new(x.shape().to_vec(), data)?
        };
        Ok(self.tape.push(
            value,
            Op::AddBias {
                x: self.id,
                bias: bias.id,
            },
        ))
    }

    /// Softmax over the time axis (second to last) of `[.., steps, width]`,
    /// independently for every leading index and feature column.
    pub fn softmax_over_time(self) -> Result<Self> {
        let value = {
            let nodes = self.tape.nodes();
            let x = &nodes[self.id].value;
            let (lead, steps, width) = require_time_dims("softmax_over_time", x.shape())?;
            let d = x.data();
            let mut out = vec![T::zero(); d.len()];
            for b in 0..lead {
                for j in 0..width {
                    let idx = |t: usize| (b * steps + t) * width + j;
                    let max = (0..steps).map(|t| d[idx(t)]).fold(T::neg_infinity(), T::max);
                    let mut denom = T::zero();
                    for t in 0..steps {
                        let e = (d[idx(t)] - max).exp();
                        out[idx(t)] = e;
                        denom += e;
                    }
                    for t in 0..steps {
                        out[idx(t)] /= denom;
                    }
                }
            }
            Tensor::new(x.shape().to_vec(), out)?
        };
        Ok(self.tape.push(value, Op::SoftmaxTime { x: self.id }))
    }

    /// Layer normalization over the last axis with population variance:
    /// `psi * (x - mean) / sqrt(var + eps) + phi`.
    pub fn layer_norm(self, psi: Var<'t, T>, phi: Var<'t, T>, eps: T) -> Result<Self> {
        self.check_same_tape(&psi)?;
        self.check_same_tape(&phi)?;
        if !(eps > T::zero()) {
            return Err(Error::Contract("layer_norm eps must be positive".into()));
        }
        let (value, xhat, inv_std) = {
            let nodes = self.tape.nodes();
            let (x, g, b) = (&nodes[self.id].value, &nodes[psi.id].value, &nodes[phi.id].value);
            let d = x.last_dim();
            if x.rank() == 0 || g.shape() != [d] || b.shape() != [d] {
                return Err(Error::Dimension {
                    op: "layer_norm",
                    left: x.shape().to_vec(),
                    right: g.shape().to_vec(),
                });
            }
            let n = T::from_usize_lossy(d);
            let rows = x.len() / d;
            let mut out = Vec::with_capacity(x.len());
            let mut xhat = Vec::with_capacity(x.len());
            let mut inv_std = Vec::with_capacity(rows);
            for row in x.data().chunks(d) {
                let mean = row.iter().copied().sum::<T>() / n;
                let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n;
                let inv = T::one() / (var + eps).sqrt();
                inv_std.push(inv);
                for (k, &v) in row.iter().enumerate() {
                    let h = (v - mean) * inv;
                    xhat.push(h);
                    out.push(g.data()[k] * h + b.data()[k]);
                }
            }
            (Tensor::new(x.shape().to_vec(), out)?, xhat, inv_std)
        };
        Ok(self.tape.push(
            value,
            Op::LayerNorm {
                x: self.id,
                psi: psi.id,
                phi: phi.id,
                xhat,
                inv_std,
            },
        ))
    }

    /// `[.., steps, width]` → `[.., width]` by summing over time.
    pub fn sum_over_time(self) -> Result<Self> {
        let value = {
            let nodes = self.tape.nodes();
            let x = &nodes[self.id].value;
            let (lead, steps, width) = require_time_dims("sum_over_time", x.shape())?;
            let mut out = vec![T::zero(); lead * width];
            for b in 0..lead {
                for t in 0..steps {
                    let src = &x.data()[(b * steps + t) * width..(b * steps + t + 1) * width];
                    for (o, &s) in out[b * width..(b + 1) * width].iter_mut().zip(src) {
                        *o += s;
                    }
                }
            }
            let mut shape = x.shape().to_vec();
            shape.remove(shape.len() - 2);
            Tensor::new(shape, out)?
        };
        Ok(self.tape.push(value, Op::SumTime { x: self.id }))
    }

    /// `[.., width]` → `[.., steps, width]` by repeating along a new time axis.
    pub fn broadcast_over_time(self, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::Contract("broadcast_over_time needs steps >= 1".into()));
        }
        let value = {
            let nodes = self.tape.nodes();
            let x = &nodes[self.id].value;
            if x.rank() == 0 {
                return Err(Error::Dimension {
                    op: "broadcast_over_time",
                    left: vec![],
                    right: vec![],
                });
            }
            let width = x.last_dim();
            let lead = x.len() / width;
            let mut out = Vec::with_capacity(lead * steps * width);
            for row in x.data().chunks(width) {
                for _ in 0..steps {
                    out.extend_from_slice(row);
                }
            }
            let mut shape = x.shape().to_vec();
            shape.insert(shape.len() - 1, steps);
            let _ = lead;
            Tensor::new(shape, out)?
        };
        Ok(self.tape.push(value, Op::BroadcastTime { x: self.id }))
    }

    /// `[.., steps, width]` → `[.., width]` at time index `step`.
    pub fn select_time(self, step: usize) -> Result<Self> {
        let value = {
            let nodes = self.tape.nodes();
            let x = &nodes[self.id].value;
            let (lead, steps, width) = require_time_dims("select_time", x.shape())?;
            if step >= steps {
                return Err(Error::Contract(format!("time index {step} out of range {steps}")));
            }
            let mut out = Vec::with_capacity(lead * width);
            for b in 0..lead {
                let src = (b * steps + step) * width;
                out.extend_from_slice(&x.data()[src..src + width]);
            }
            let mut shape = x.shape().to_vec();
            shape.remove(shape.len() - 2);
            Tensor::new(shape, out)?
        };
        Ok(self.tape.push(value, Op::SelectTime { x: self.id, step }))
    }

    /// Concatenates along the last axis.
    pub fn concat_last(self, rhs: Var<'t, T>) -> Result<Self> {
        self.check_same_tape(&rhs)?;
        let value = {
            let nodes = self.tape.nodes();
            let (a, b) = (&nodes[self.id].value, &nodes[rhs.id].value);
            let (ra, rb) = (a.shape(), b.shape());
            if ra.is_empty() || ra.len() != rb.len() || ra[..ra.len() - 1] != rb[..rb.len() - 1] {
                return Err(Error::Dimension {
                    op: "concat_last",
                    left: ra.to_vec(),
                    right: rb.to_vec(),
                });
            }
            let (n, m) = (a.last_dim(), b.last_dim());
            let mut out = Vec::with_capacity(a.len() + b.len());
            for (ra, rb) in a.data().chunks(n).zip(b.data().chunks(m)) {
                out.extend_from_slice(ra);
                out.extend_from_slice(rb);
            }
            let mut shape = a.shape().to_vec();
            *shape.last_mut().unwrap() = n + m;
            Tensor::new(shape, out)?
        };
        Ok(self.tape.push(value, Op::ConcatLast { a: self.id, b: rhs.id }))
    }

    pub fn reshape(self, shape: Vec<usize>) -> Result<Self> {
        let value = self.tape.nodes()[self.id].value.clone().reshape(shape)?;
        Ok(self.tape.push(value, Op::Reshape { x: self.id }))
    }

    /// Sum of all entries as a scalar.
    pub fn sum(self) -> Self {
        let total = self.tape.nodes()[self.id].value.sum();
        self.tape.push(Tensor::scalar(total), Op::SumAll { x: self.id })
    }

    /// Mean squared difference against a constant target of the same shape.
    pub fn mse(self, target: &Tensor<T>) -> Result<Self> {
        let value = {
            let nodes = self.tape.nodes();
            let pred = &nodes[self.id].value;
            same_shape("mse", pred, target)?;
            let n = T::from_usize_lossy(pred.len());
            let s: T = pred
                .data()
                .iter()
                .zip(target.data())
                .map(|(&p, &y)| (p - y) * (p - y))
                .sum();
            Tensor::scalar(s / n)
        };
        Ok(self.tape.push(
            value,
            Op::Mse {
                pred: self.id,
                target: target.data().to_vec(),
            },
        ))
    }
}
