//! Reverse sweep. Each arm maps the output gradient to input gradients.

use ndarray::linalg::general_mat_mul;

use super::ops::time_dims;
use super::{Node, NodeId, Op};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

fn accumulate<T: Scalar>(grads: &mut [Option<Tensor<T>>], id: NodeId, g: Tensor<T>) {
    match &mut grads[id] {
        Some(existing) => existing.add_assign(&g),
        slot @ None => *slot = Some(g),
    }
}

fn with_shape<T: Scalar>(shape: &[usize], data: Vec<T>) -> Tensor<T> {
    Tensor::new(shape.to_vec(), data).expect("gradient shape mirrors forward shape")
}

pub(super) fn run<T: Scalar>(nodes: &[Node<T>], root: NodeId) -> Vec<Option<Tensor<T>>> {
    let mut grads: Vec<Option<Tensor<T>>> = vec![None; root + 1];
    grads[root] = Some(Tensor::full(nodes[root].value.shape(), T::one()));

    for id in (0..=root).rev() {
        let node = &nodes[id];
        if matches!(node.op, Op::Leaf) {
            continue;
        }
        // only leaf gradients are kept; intermediate ones are consumed here
        let Some(g) = grads[id].take() else { continue };
        let val = |n: NodeId| &nodes[n].value;
        match &node.op {
            Op::Leaf => unreachable!(),
            Op::MatMul { a, b } => {
                let (av, bv) = (val(*a), val(*b));
                let mut da = Tensor::zeros(av.shape());
                general_mat_mul(T::one(), &g.view2(), &bv.view2().t(), T::zero(), &mut da.view2_mut());
                let mut db = Tensor::zeros(bv.shape());
                general_mat_mul(T::one(), &av.view2().t(), &g.view2(), T::zero(), &mut db.view2_mut());
                accumulate(&mut grads, *a, da);
                accumulate(&mut grads, *b, db);
            }
            Op::MatMulBt { a, w } => {
                let (av, wv) = (val(*a), val(*w));
                let mut da = Tensor::zeros(av.shape());
                general_mat_mul(T::one(), &g.view2(), &wv.view2(), T::zero(), &mut da.view2_mut());
                let mut dw = Tensor::zeros(wv.shape());
                general_mat_mul(T::one(), &g.view2().t(), &av.view2(), T::zero(), &mut dw.view2_mut());
                accumulate(&mut grads, *a, da);
                accumulate(&mut grads, *w, dw);
            }
            Op::Add { a, b } => {
                accumulate(&mut grads, *a, g.clone());
                accumulate(&mut grads, *b, g);
            }
            Op::Sub { a, b } => {
                accumulate(&mut grads, *b, g.map(|x| -x));
                accumulate(&mut grads, *a, g);
            }
            Op::Mul { a, b } => {
                let (av, bv) = (val(*a), val(*b));
                let da = g.data().iter().zip(bv.data()).map(|(&u, &v)| u * v).collect();
                let db = g.data().iter().zip(av.data()).map(|(&u, &v)| u * v).collect();
                accumulate(&mut grads, *a, with_shape(av.shape(), da));
                accumulate(&mut grads, *b, with_shape(bv.shape(), db));
            }
            Op::Scale { x, factor } => {
                let f = *factor;
                accumulate(&mut grads, *x, g.map(|u| u * f));
            }
            Op::AddScalar { x } => accumulate(&mut grads, *x, g),
            Op::AddBias { x, bias } => {
                let n = g.last_dim();
                let mut db = vec![T::zero(); n];
                for row in g.data().chunks(n) {
                    for (acc, &u) in db.iter_mut().zip(row) {
                        *acc += u;
                    }
                }
                accumulate(&mut grads, *bias, with_shape(&[n], db));
                accumulate(&mut grads, *x, g);
            }
            Op::Unary { x, op } => {
                let xv = val(*x);
                let d = g
                    .data()
                    .iter()
                    .zip(xv.data().iter().zip(node.value.data()))
                    .map(|(&u, (&xi, &yi))| u * op.derivative(xi, yi))
                    .collect();
                accumulate(&mut grads, *x, with_shape(xv.shape(), d));
            }
            Op::SoftmaxTime { x } => {
                let y = node.value.data();
                let (lead, steps, width) = time_dims(node.value.shape()).expect("time dims");
                let mut dx = vec![T::zero(); y.len()];
                for b in 0..lead {
                    for j in 0..width {
                        let idx = |t: usize| (b * steps + t) * width + j;
                        let dot: T = (0..steps).map(|t| g.data()[idx(t)] * y[idx(t)]).sum();
                        for t in 0..steps {
                            dx[idx(t)] = y[idx(t)] * (g.data()[idx(t)] - dot);
                        }
                    }
                }
                accumulate(&mut grads, *x, with_shape(node.value.shape(), dx));
            }
            Op::LayerNorm {
                x,
                psi,
                phi,
                xhat,
                inv_std,
            } => {
                let psi_v = val(*psi).data();
                let d = psi_v.len();
                let n = T::from_usize_lossy(d);
                let mut dpsi = vec![T::zero(); d];
                let mut dphi = vec![T::zero(); d];
                let mut dx = vec![T::zero(); g.len()];
                let mut dxhat = vec![T::zero(); d];
                for (r, (grow, hrow)) in g.data().chunks(d).zip(xhat.chunks(d)).enumerate() {
                    let mut sum_dh = T::zero();
                    let mut sum_dh_h = T::zero();
                    for k in 0..d {
                        dpsi[k] += grow[k] * hrow[k];
                        dphi[k] += grow[k];
                        dxhat[k] = grow[k] * psi_v[k];
                        sum_dh += dxhat[k];
                        sum_dh_h += dxhat[k] * hrow[k];
                    }
                    let scale = inv_std[r] / n;
                    for k in 0..d {
                        dx[r * d + k] = scale * (n * dxhat[k] - sum_dh - hrow[k] * sum_dh_h);
                    }
                }
                accumulate(&mut grads, *x, with_shape(g.shape(), dx));
                accumulate(&mut grads, *psi, with_shape(&[d], dpsi));
                accumulate(&mut grads, *phi, with_shape(&[d], dphi));
            }
            Op::SumTime { x } => {
                let xs = val(*x).shape();
                let (lead, steps, width) = time_dims(xs).expect("time dims");
                let mut dx = Vec::with_capacity(lead * steps * width);
                for row in g.data().chunks(width) {
                    for _ in 0..steps {
                        dx.extend_from_slice(row);
                    }
                }
                accumulate(&mut grads, *x, with_shape(xs, dx));
            }
            Op::BroadcastTime { x } => {
                let (lead, steps, width) = time_dims(g.shape()).expect("time dims");
                let mut dx = vec![T::zero(); lead * width];
                for b in 0..lead {
                    for t in 0..steps {
                        let src = &g.data()[(b * steps + t) * width..(b * steps + t + 1) * width];
                        for (o, &s) in dx[b * width..(b + 1) * width].iter_mut().zip(src) {
                            *o += s;
                        }
                    }
                }
                accumulate(&mut grads, *x, with_shape(val(*x).shape(), dx));
            }
            Op::SelectTime { x, step } => {
                let xs = val(*x).shape();
                let (lead, steps, width) = time_dims(xs).expect("time dims");
                let mut dx = vec![T::zero(); lead * steps * width];
                for b in 0..lead {
                    let dst = (b * steps + step) * width;
                    dx[dst..dst + width].copy_from_slice(&g.data()[b * width..(b + 1) * width]);
                }
                accumulate(&mut grads, *x, with_shape(xs, dx));
            }
            Op::StackTime { parts } => {
                let (lead, steps, width) = time_dims(g.shape()).expect("time dims");
                for (t, &p) in parts.iter().enumerate() {
                    let mut dp = Vec::with_capacity(lead * width);
                    for b in 0..lead {
                        let src = (b * steps + t) * width;
                        dp.extend_from_slice(&g.data()[src..src + width]);
                    }
                    accumulate(&mut grads, p, with_shape(val(p).shape(), dp));
                }
            }
            Op::ConcatLast { a, b } => {
                let (av, bv) = (val(*a), val(*b));
                let (n, m) = (av.last_dim(), bv.last_dim());
                let mut da = Vec::with_capacity(av.len());
                let mut db = Vec::with_capacity(bv.len());
                for row in g.data().chunks(n + m) {
                    da.extend_from_slice(&row[..n]);
                    db.extend_from_slice(&row[n..]);
                }
                accumulate(&mut grads, *a, with_shape(av.shape(), da));
                accumulate(&mut grads, *b, with_shape(bv.shape(), db));
            }
            Op::Reshape { x } => {
                let dx = g.reshape(val(*x).shape().to_vec()).expect("reshape back");
                accumulate(&mut grads, *x, dx);
            }
            Op::SumAll { x } => {
                let seed = g.data()[0];
                accumulate(&mut grads, *x, Tensor::full(val(*x).shape(), seed));
            }
            Op::Mse { pred, target } => {
                let pv = val(*pred);
                let n = T::from_usize_lossy(pv.len());
                let k = g.data()[0] * T::lit(2.0) / n;
                let d = pv.data().iter().zip(target).map(|(&p, &y)| k * (p - y)).collect();
                accumulate(&mut grads, *pred, with_shape(pv.shape(), d));
            }
            Op::PositionBias { k, v, w, weights } => {
                let (vv, wv) = (val(*v), val(*w));
                let (lead, steps, width) = time_dims(vv.shape()).expect("time dims");
                let cap = wv.shape()[0];
                let out = node.value.data();
                let vd = vv.data();
                let mut dk = vec![T::zero(); vd.len()];
                let mut dv = vec![T::zero(); vd.len()];
                let mut dw = vec![T::zero(); wv.len()];
                for b in 0..lead {
                    for j in 0..width {
                        for t in 0..steps {
                            let oi = (b * steps + t) * width + j;
                            let gt = g.data()[oi];
                            let base = ((b * width + j) * steps + t) * steps;
                            for s in 0..steps {
                                let p = weights[base + s];
                                let si = (b * steps + s) * width + j;
                                dv[si] += gt * p;
                                let da = p * gt * (vd[si] - out[oi]);
                                dk[si] += da;
                                dw[t * cap + s] += da;
                            }
                        }
                    }
                }
                accumulate(&mut grads, *k, with_shape(vv.shape(), dk));
                accumulate(&mut grads, *v, with_shape(vv.shape(), dv));
                accumulate(&mut grads, *w, with_shape(wv.shape(), dw));
            }
        }
    }
    grads
}
