//! Reverse-mode differentiation over dense tensors.
//!
//! A [`Tape`] records every operation applied to [`Var`] handles during a
//! forward pass (define-by-run). [`Tape::backward`] then sweeps the recorded
//! nodes once in reverse insertion order, which is a valid reverse
//! topological order because a node can only consume nodes that already
//! exist. Gradients reaching a node from several consumers are summed.
//!
//! Tapes are cheap to build and are meant to be thrown away after one
//! forward/backward pass.

mod backward;
pub mod gradcheck;
mod ops;

use std::cell::{Ref, RefCell};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

pub use ops::{BinaryOp, UnaryOp};

/// Index of a node on a tape.
pub type NodeId = usize;

/// Recorded operation together with whatever the backward rule needs.
#[derive(Debug)]
pub(crate) enum Op<T> {
    Leaf,
    MatMul {
        a: NodeId,
        b: NodeId,
    },
    MatMulBt {
        a: NodeId,
        w: NodeId,
    },
    Add {
        a: NodeId,
        b: NodeId,
    },
    Sub {
        a: NodeId,
        b: NodeId,
    },
    Mul {
        a: NodeId,
        b: NodeId,
    },
    Scale {
        x: NodeId,
        factor: T,
    },
    AddScalar {
        x: NodeId,
    },
    AddBias {
        x: NodeId,
        bias: NodeId,
    },
    Unary {
        x: NodeId,
        op: UnaryOp,
    },
    SoftmaxTime {
        x: NodeId,
    },
    LayerNorm {
        x: NodeId,
        psi: NodeId,
        phi: NodeId,
        xhat: Vec<T>,
        inv_std: Vec<T>,
    },
    SumTime {
        x: NodeId,
    },
    BroadcastTime {
        x: NodeId,
    },
    SelectTime {
        x: NodeId,
        step: usize,
    },
    StackTime {
        parts: Vec<NodeId>,
    },
    ConcatLast {
        a: NodeId,
        b: NodeId,
    },
    Reshape {
        x: NodeId,
    },
    SumAll {
        x: NodeId,
    },
    Mse {
        pred: NodeId,
        target: Vec<T>,
    },
    PositionBias {
        k: NodeId,
        v: NodeId,
        w: NodeId,
        weights: Vec<T>,
    },
}

#[derive(Debug)]
pub(crate) struct Node<T> {
    pub(crate) value: Tensor<T>,
    pub(crate) op: Op<T>,
}

/// Append-only record of a forward computation.
#[derive(Debug, Default)]
pub struct Tape<T> {
    nodes: RefCell<Vec<Node<T>>>,
}

/// A tensor living on a tape.
#[derive(Clone, Copy)]
pub struct Var<'t, T> {
    tape: &'t Tape<T>,
    id: NodeId,
}

impl<T> std::fmt::Debug for Var<'_, T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Var").field("id", &self.id).finish()
    }
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Self {
            nodes: RefCell::new(Vec::new()),
        }
    }

    /// Registers an input tensor. Gradients are reported for every leaf.
    pub fn leaf(&self, value: Tensor<T>) -> Var<'_, T> {
        self.push(value, Op::Leaf)
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.borrow().is_empty()
    }

    pub(crate) fn push(&self, value: Tensor<T>, op: Op<T>) -> Var<'_, T> {
        let mut nodes = self.nodes.borrow_mut();
        let id = nodes.len();
        nodes.push(Node { value, op });
        Var { tape: self, id }
    }

    pub(crate) fn nodes(&self) -> Ref<'_, Vec<Node<T>>> {
        self.nodes.borrow()
    }

    /// Gradients of the scalar `root` with respect to every node recorded
    /// before it. The seed gradient is 1.
    pub fn backward(&self, root: Var<'_, T>) -> Result<Gradients<T>> {
        if !std::ptr::eq(root.tape, self) {
            return Err(Error::Contract("backward root belongs to another tape".into()));
        }
        let nodes = self.nodes.borrow();
        if nodes[root.id].value.len() != 1 {
            return Err(Error::Contract(format!(
                "backward needs a scalar root, got shape {:?}",
                nodes[root.id].value.shape()
            )));
        }
        let grads = backward::run(&nodes, root.id);
        Ok(Gradients { grads })
    }
}

impl<'t, T: Scalar> Var<'t, T> {
    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn tape(&self) -> &'t Tape<T> {
        self.tape
    }

    pub fn value(&self) -> Tensor<T> {
        self.tape.nodes.borrow()[self.id].value.clone()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.tape.nodes.borrow()[self.id].value.shape().to_vec()
    }

    pub fn item(&self) -> Option<T> {
        self.tape.nodes.borrow()[self.id].value.item()
    }

    pub fn backward(self) -> Result<Gradients<T>> {
        self.tape.backward(self)
    }
}

/// Gradient table keyed by node id.
#[derive(Debug, Clone)]
pub struct Gradients<T> {
    grads: Vec<Option<Tensor<T>>>,
}

impl<T: Scalar> Gradients<T> {
    /// Gradient for `var`, or `None` if the root does not depend on it.
    pub fn get(&self, var: Var<'_, T>) -> Option<&Tensor<T>> {
        self.grads.get(var.id).and_then(Option::as_ref)
    }

    /// Gradient for `var`, zero-filled when the root does not depend on it.
    pub fn wrt(&self, var: Var<'_, T>) -> Tensor<T> {
        match self.get(var) {
            Some(g) => g.clone(),
            None => Tensor::zeros(&var.shape()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(x: f64) -> Tensor<f64> {
        Tensor::scalar(x)
    }

    #[test]
    fn leaf_root_has_unit_gradient() {
        let tape = Tape::new();
        let x = tape.leaf(s(4.0));
        let g = x.backward().unwrap();
        assert_eq!(g.wrt(x).item(), Some(1.0));
    }

    #[test]
    fn product_rule() {
        let tape = Tape::new();
        let x = tape.leaf(s(2.0));
        let y = tape.leaf(s(3.0));
        let g = x.mul(y).unwrap().backward().unwrap();
        assert_eq!(g.wrt(x).item(), Some(3.0));
        assert_eq!(g.wrt(y).item(), Some(2.0));
    }

    #[test]
    fn shared_node_sums_consumers() {
        // f = x*y + sin-free reuse: u = x*y; f = u*u + u => df/dx = (2u+1)*y
        let tape = Tape::new();
        let x = tape.leaf(s(2.0));
        let y = tape.leaf(s(3.0));
        let u = x.mul(y).unwrap();
        let f = u.mul(u).unwrap().add(u).unwrap();
        let g = f.backward().unwrap();
        assert_eq!(g.wrt(x).item(), Some((2.0 * 6.0 + 1.0) * 3.0));
        assert_eq!(g.wrt(y).item(), Some((2.0 * 6.0 + 1.0) * 2.0));
    }

    #[test]
    fn non_scalar_root_is_rejected() {
        let tape = Tape::new();
        let x = tape.leaf(Tensor::vector(vec![1.0, 2.0]).unwrap());
        assert!(matches!(x.backward(), Err(Error::Contract(_))));
    }

    #[test]
    fn foreign_root_is_rejected() {
        let a = Tape::<f64>::new();
        let b = Tape::<f64>::new();
        let x = b.leaf(s(1.0));
        assert!(a.backward(x).is_err());
    }

    #[test]
    fn unused_leaf_gets_zero_gradient() {
        let tape = Tape::new();
        let x = tape.leaf(s(1.0));
        let y = tape.leaf(Tensor::vector(vec![1.0, 2.0]).unwrap());
        let g = x.scale(3.0).backward().unwrap();
        assert!(g.get(y).is_none());
        assert_eq!(g.wrt(y).data(), &[0.0, 0.0]);
    }
}
