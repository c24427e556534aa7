//! Oracles shared by the integration tests and the acceptance suite.
#![allow(dead_code)]

use std::time::{Duration, Instant};

use afvol_core::autodiff::gradcheck::{check, relative_error};
use afvol_core::garch::{fit_mle, garch_simulate, log_likelihood, FitOptions, GarchFit, GarchKind, GarchParams};
use afvol_core::nn::{
    af_block, AfBlockParams, AfLstmConfig, AfLstmParams, AfVariant, Initializer, LstmParams, LstmState,
};
use afvol_core::train::mse_loss;
use afvol_core::{Result, Tape, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const H: f64 = 1e-5;
pub const GRAD_TOL: f64 = 1e-4;
pub const INSTANCES: usize = 20;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_tensor(rng: &mut ChaCha8Rng, shape: &[usize], scale: f64) -> Tensor<f64> {
    let n = shape.iter().product();
    let data = (0..n).map(|_| rng.random_range(-scale..scale)).collect();
    Tensor::new(shape.to_vec(), data).unwrap()
}

/// Entries bounded away from zero, for ops with a kink there.
fn away_from_zero(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor<f64> {
    random_tensor(rng, shape, 1.0).map(|v| if v.abs() < 0.05 { v + 0.1f64.copysign(v) } else { v })
}

/// `Σ out ⊙ probe`, so every output entry gets a distinct weight.
fn probe<'t>(out: Var<'t, f64>, probe: &Tensor<f64>) -> Result<Var<'t, f64>> {
    let p = out.tape().leaf(probe.clone());
    Ok(out.mul(p)?.sum())
}

#[derive(Debug, Clone)]
pub struct OpCheck {
    pub op: &'static str,
    pub instances: usize,
    pub entries: usize,
    pub worst: f64,
}

impl OpCheck {
    pub fn passed(&self) -> bool {
        self.instances >= INSTANCES && self.worst <= GRAD_TOL
    }
}

type Case = Box<dyn Fn(&mut ChaCha8Rng) -> Result<(f64, usize)>>;

fn value_case<F>(shapes: impl Fn(&mut ChaCha8Rng) -> Vec<Tensor<f64>> + 'static, f: F) -> Case
where
    F: for<'t> Fn(&'t Tape<f64>, &[Var<'t, f64>]) -> Result<Var<'t, f64>> + Copy + 'static,
{
    Box::new(move |r| {
        let inputs = shapes(r);
        let report = check(&inputs, H, f)?;
        Ok((report.max_relative_error, report.checked))
    })
}

/// Finite-difference check over every tensor of a parameter bundle.
fn module_check<P: Clone>(
    params: &P,
    tensors_mut: impl Fn(&mut P) -> Vec<&mut Tensor<f64>>,
    eval: impl for<'t> Fn(&P, &'t Tape<f64>) -> Result<(Var<'t, f64>, Vec<Var<'t, f64>>)>,
) -> Result<(f64, usize)> {
    let analytic: Vec<Tensor<f64>> = {
        let tape = Tape::new();
        let (out, leaves) = eval(params, &tape)?;
        let g = out.backward()?;
        leaves.iter().map(|&l| g.wrt(l)).collect()
    };
    let value = |p: &P| -> Result<f64> {
        let tape = Tape::new();
        Ok(eval(p, &tape)?.0.item().unwrap())
    };
    let mut work = params.clone();
    let counts: Vec<usize> = tensors_mut(&mut work).iter().map(|t| t.len()).collect();
    assert_eq!(counts.len(), analytic.len(), "leaf / tensor count mismatch");
    let (mut worst, mut checked) = (0.0f64, 0);
    for (i, &len) in counts.iter().enumerate() {
        for e in 0..len {
            let orig = tensors_mut(&mut work)[i].data()[e];
            tensors_mut(&mut work)[i].data_mut()[e] = orig + H;
            let plus = value(&work)?;
            tensors_mut(&mut work)[i].data_mut()[e] = orig - H;
            let minus = value(&work)?;
            tensors_mut(&mut work)[i].data_mut()[e] = orig;
            let numeric = (plus - minus) / (2.0 * H);
            let err = relative_error(analytic[i].data()[e], numeric);
            worst = if err.is_nan() { f64::INFINITY } else { worst.max(err) };
            checked += 1;
        }
    }
    Ok((worst, checked))
}

fn dims(r: &mut ChaCha8Rng, lo: usize, hi: usize) -> usize {
    r.random_range(lo..=hi)
}

fn lstm_case() -> Case {
    Box::new(|r| {
        let (input, hidden, batch) = (dims(r, 1, 4), dims(r, 1, 4), dims(r, 1, 3));
        let mut init = Initializer::new(r.random());
        let params = LstmParams::<f64>::init(input, hidden, &mut init)?;
        let state = LstmState {
            h: random_tensor(r, &[batch, hidden], 1.0),
            c: random_tensor(r, &[batch, hidden], 1.0),
        };
        let z = random_tensor(r, &[batch, input], 1.0);
        let pr = random_tensor(r, &[batch, 2 * hidden], 1.0);
        let bundle = (params, state, z);
        module_check(
            &bundle,
            |(p, s, z)| {
                let mut t = p.tensors_mut();
                t.extend([&mut s.h, &mut s.c, z]);
                t
            },
            |(p, s, z), tape| {
                let vars = p.bind(tape);
                let sv = s.bind(tape);
                let zv = tape.leaf(z.clone());
                let next = vars.step(sv, zv)?;
                let out = probe(next.h.concat_last(next.c)?, &pr)?;
                let mut leaves = vars.leaves();
                leaves.extend([sv.h, sv.c, zv]);
                Ok((out, leaves))
            },
        )
    })
}

fn af_block_case(variant: AfVariant) -> Case {
    Box::new(move |r| {
        let (input, embed, width) = (dims(r, 1, 3), dims(r, 1, 3), dims(r, 1, 4));
        let (batch, steps) = (dims(r, 1, 2), dims(r, 1, 5));
        let cap = steps + dims(r, 0, 2);
        let mut init = Initializer::new(r.random());
        let mut params = AfBlockParams::<f64>::init(input, embed, width, variant, cap, &mut init)?;
        if let Some(w) = &mut params.w_bias {
            *w = random_tensor(r, &[cap, cap], 1.0);
        }
        let z = random_tensor(r, &[batch, steps, input], 1.0);
        let pr = random_tensor(r, &[batch, steps, width], 1.0);
        module_check(
            &(params, z),
            |(p, z)| {
                let mut t = p.tensors_mut();
                t.push(z);
                t
            },
            |(p, z), tape| {
                let vars = p.bind(tape);
                let zv = tape.leaf(z.clone());
                let out = probe(vars.forward(zv)?, &pr)?;
                let mut leaves = vars.leaves();
                leaves.push(zv);
                Ok((out, leaves))
            },
        )
    })
}

fn af_lstm_case(variant: AfVariant) -> Case {
    Box::new(move |r| {
        let config = AfLstmConfig {
            input: dims(r, 1, 2),
            dim: dims(r, 1, 3),
            // a two-wide layer norm is nearly a sign function, too curved for h = 1e-5
            af_hidden: dims(r, 3, 4),
            hidden: dims(r, 1, 3),
            layers: dims(r, 1, 2),
            variant,
            max_seq_len: 4,
            ln_eps: 1e-5,
        };
        let (batch, steps) = (dims(r, 1, 2), dims(r, 1, 4));
        let mut init = Initializer::new(r.random());
        let mut params = AfLstmParams::<f64>::init(&config, &mut init)?;
        // start away from the identity affine maps and the zero biases
        for t in params.tensors_mut() {
            for v in t.data_mut() {
                *v += r.random_range(-0.3..0.3);
            }
        }
        let z = random_tensor(r, &[batch, steps, config.input], 1.0);
        let pr = random_tensor(r, &[batch, 1], 1.0);
        module_check(
            &(params, z),
            |(p, z)| {
                let mut t = p.tensors_mut();
                t.push(z);
                t
            },
            |(p, z), tape| {
                let vars = p.bind(tape);
                let zv = tape.leaf(z.clone());
                let (y, _) = vars.forward(zv, None)?;
                let out = probe(y, &pr)?;
                let mut leaves = vars.leaves();
                leaves.push(zv);
                Ok((out, leaves))
            },
        )
    })
}

fn time_shape(r: &mut ChaCha8Rng) -> Vec<usize> {
    vec![dims(r, 1, 3), dims(r, 1, 5), dims(r, 1, 4)]
}

fn cases() -> Vec<(&'static str, Case)> {
    use afvol_core::autodiff::BinaryOp;
    fn elementwise(op: BinaryOp) -> Case {
        Box::new(move |r| {
            let shape = vec![dims(r, 1, 4), dims(r, 1, 4)];
            let inputs = vec![
                random_tensor(r, &shape, 2.0),
                random_tensor(r, &shape, 2.0),
                random_tensor(r, &shape, 1.0),
            ];
            let report = check(&inputs, H, move |_, v| Ok(v[0].binary(op, v[1])?.mul(v[2])?.sum()))?;
            Ok((report.max_relative_error, report.checked))
        })
    }
    vec![
        (
            "matmul",
            value_case(
                |r| {
                    let (m, k, n) = (dims(r, 1, 5), dims(r, 1, 5), dims(r, 1, 5));
                    vec![
                        random_tensor(r, &[m, k], 1.0),
                        random_tensor(r, &[k, n], 1.0),
                        random_tensor(r, &[m, n], 1.0),
                    ]
                },
                |_, v| Ok(v[0].matmul(v[1])?.mul(v[2])?.sum()),
            ),
        ),
        (
            "matmul_bt",
            value_case(
                |r| {
                    let (m, k, n) = (dims(r, 1, 5), dims(r, 1, 5), dims(r, 1, 5));
                    vec![
                        random_tensor(r, &[m, k], 1.0),
                        random_tensor(r, &[n, k], 1.0),
                        random_tensor(r, &[m, n], 1.0),
                    ]
                },
                |_, v| Ok(v[0].matmul_bt(v[1])?.mul(v[2])?.sum()),
            ),
        ),
        ("add", elementwise(BinaryOp::Add)),
        ("sub", elementwise(BinaryOp::Sub)),
        ("mul", elementwise(BinaryOp::Mul)),
        (
            "sigmoid",
            value_case(
                |r| vec![random_tensor(r, &[3, 4], 4.0), random_tensor(r, &[3, 4], 1.0)],
                |_, v| Ok(v[0].sigmoid().mul(v[1])?.sum()),
            ),
        ),
        (
            "tanh",
            value_case(
                |r| vec![random_tensor(r, &[3, 4], 3.0), random_tensor(r, &[3, 4], 1.0)],
                |_, v| Ok(v[0].tanh().mul(v[1])?.sum()),
            ),
        ),
        (
            "relu",
            value_case(
                |r| vec![away_from_zero(r, &[3, 4]), random_tensor(r, &[3, 4], 1.0)],
                |_, v| Ok(v[0].relu().mul(v[1])?.sum()),
            ),
        ),
        (
            "exp",
            value_case(
                |r| vec![random_tensor(r, &[3, 4], 2.0), random_tensor(r, &[3, 4], 1.0)],
                |_, v| Ok(v[0].exp().mul(v[1])?.sum()),
            ),
        ),
        (
            "scale",
            value_case(
                |r| vec![random_tensor(r, &[2, 5], 2.0), random_tensor(r, &[2, 5], 1.0)],
                |_, v| Ok(v[0].scale(-1.7).mul(v[1])?.sum()),
            ),
        ),
        (
            "add_scalar",
            value_case(
                |r| vec![random_tensor(r, &[2, 5], 2.0), random_tensor(r, &[2, 5], 1.0)],
                |_, v| Ok(v[0].add_scalar(0.3).mul(v[0])?.mul(v[1])?.sum()),
            ),
        ),
        (
            "add_bias",
            value_case(
                |r| {
                    let s = time_shape(r);
                    vec![
                        random_tensor(r, &s, 1.0),
                        random_tensor(r, &[s[2]], 1.0),
                        random_tensor(r, &s, 1.0),
                    ]
                },
                |_, v| Ok(v[0].add_bias(v[1])?.mul(v[2])?.sum()),
            ),
        ),
        (
            "softmax_over_time",
            value_case(
                |r| {
                    let s = time_shape(r);
                    vec![random_tensor(r, &s, 2.0), random_tensor(r, &s, 1.0)]
                },
                |_, v| Ok(v[0].softmax_over_time()?.mul(v[1])?.sum()),
            ),
        ),
        (
            "layer_norm",
            value_case(
                |r| {
                    let mut s = time_shape(r);
                    s[2] = dims(r, 2, 5);
                    let w = s[2];
                    vec![
                        random_tensor(r, &s, 2.0),
                        random_tensor(r, &[w], 1.5),
                        random_tensor(r, &[w], 1.0),
                        random_tensor(r, &s, 1.0),
                    ]
                },
                |_, v| Ok(v[0].layer_norm(v[1], v[2], 1e-5)?.mul(v[3])?.sum()),
            ),
        ),
        (
            "sum_over_time",
            value_case(
                |r| {
                    let s = time_shape(r);
                    let p = random_tensor(r, &[s[0], s[2]], 1.0);
                    vec![random_tensor(r, &s, 1.0), p]
                },
                |_, v| Ok(v[0].sum_over_time()?.mul(v[1])?.sum()),
            ),
        ),
        (
            "broadcast_over_time",
            value_case(
                |r| {
                    let (b, t, w) = (dims(r, 1, 3), dims(r, 1, 4), dims(r, 1, 3));
                    vec![random_tensor(r, &[b, w], 1.0), random_tensor(r, &[b, t, w], 1.0)]
                },
                |_, v| {
                    let t = v[1].shape()[1];
                    Ok(v[0].broadcast_over_time(t)?.mul(v[1])?.sum())
                },
            ),
        ),
        (
            "select_time",
            value_case(
                |r| {
                    let s = time_shape(r);
                    vec![random_tensor(r, &s, 1.0), random_tensor(r, &[s[0], s[2]], 1.0)]
                },
                |_, v| {
                    let t = v[0].shape()[1];
                    Ok(v[0].select_time(t - 1)?.mul(v[1])?.sum())
                },
            ),
        ),
        (
            "stack_time",
            value_case(
                |r| {
                    let (b, w) = (dims(r, 1, 3), dims(r, 1, 3));
                    vec![
                        random_tensor(r, &[b, w], 1.0),
                        random_tensor(r, &[b, w], 1.0),
                        random_tensor(r, &[b, 2, w], 1.0),
                    ]
                },
                |tape, v| Ok(tape.stack_time(&[v[0], v[1]])?.mul(v[2])?.sum()),
            ),
        ),
        (
            "concat_last",
            value_case(
                |r| {
                    let (b, p, q) = (dims(r, 1, 3), dims(r, 1, 3), dims(r, 1, 3));
                    vec![
                        random_tensor(r, &[b, p], 1.0),
                        random_tensor(r, &[b, q], 1.0),
                        random_tensor(r, &[b, p + q], 1.0),
                    ]
                },
                |_, v| Ok(v[0].concat_last(v[1])?.mul(v[2])?.sum()),
            ),
        ),
        (
            "reshape",
            value_case(
                |r| {
                    let (a, b) = (dims(r, 1, 4), dims(r, 1, 4));
                    vec![random_tensor(r, &[a, b], 1.0), random_tensor(r, &[a * b], 1.0)]
                },
                |_, v| Ok(v[0].reshape(vec![v[1].shape()[0]])?.mul(v[1])?.sum()),
            ),
        ),
        (
            "position_bias_mix",
            value_case(
                |r| {
                    let s = time_shape(r);
                    let cap = s[1] + 1;
                    vec![
                        random_tensor(r, &s, 2.0),
                        random_tensor(r, &s, 1.0),
                        random_tensor(r, &[cap, cap], 1.0),
                        random_tensor(r, &s, 1.0),
                    ]
                },
                |tape, v| Ok(tape.position_bias_mix(v[0], v[1], v[2])?.mul(v[3])?.sum()),
            ),
        ),
        ("lstm_step", lstm_case()),
        ("af_block[simple]", af_block_case(AfVariant::Simple)),
        ("af_block[position-bias]", af_block_case(AfVariant::PositionBias)),
        ("af_lstm_forward[simple]", af_lstm_case(AfVariant::Simple)),
        ("af_lstm_forward[position-bias]", af_lstm_case(AfVariant::PositionBias)),
        (
            "mse_loss",
            Box::new(|r: &mut ChaCha8Rng| {
                let n = dims(r, 1, 8);
                let target: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
                let inputs = vec![random_tensor(r, &[n, 1], 1.0)];
                let report = check(&inputs, H, move |_, v| mse_loss(v[0], &target))?;
                Ok((report.max_relative_error, report.checked))
            }),
        ),
    ]
}

/// Runs every differentiable op on [`INSTANCES`] random instances.
pub fn gradient_suite(seed: u64) -> (Vec<OpCheck>, Duration) {
    let start = Instant::now();
    let mut r = rng(seed);
    let results = cases()
        .into_iter()
        .map(|(op, case)| {
            let mut out = OpCheck {
                op,
                instances: 0,
                entries: 0,
                worst: 0.0,
            };
            for _ in 0..INSTANCES {
                match case(&mut r) {
                    Ok((err, n)) => {
                        out.worst = if err.is_nan() {
                            f64::INFINITY
                        } else {
                            out.worst.max(err)
                        };
                        out.entries += n;
                        out.instances += 1;
                    }
                    Err(e) => panic!("{op}: {e}"),
                }
            }
            out
        })
        .collect();
    (results, start.elapsed())
}

/// Direct evaluation of one attention-free block on `z [T × input]`.
pub fn af_block_naive(p: &AfBlockParams<f64>, z: &Tensor<f64>) -> Vec<f64> {
    let (steps, input) = (z.shape()[0], z.shape()[1]);
    let embed = p.w_x.shape()[0];
    let width = p.w_q.shape()[0];
    let x: Vec<Vec<f64>> = (0..steps)
        .map(|t| {
            (0..embed)
                .map(|e| p.b_x.data()[e] + (0..input).map(|i| p.w_x.at2(e, i) * z.at2(t, i)).sum::<f64>())
                .collect()
        })
        .collect();
    let proj = |w: &Tensor<f64>, t: usize, j: usize| (0..embed).map(|e| w.at2(j, e) * x[t][e]).sum::<f64>();
    let mut out = vec![0.0; steps * width];
    for t in 0..steps {
        for j in 0..width {
            let q = proj(&p.w_q, t, j);
            let mut num = 0.0;
            let mut den = 0.0;
            for s in 0..steps {
                let bias = p.w_bias.as_ref().map_or(0.0, |w| w.at2(t, s));
                let e = (proj(&p.w_k, s, j) + bias).exp();
                num += e * proj(&p.w_v, s, j);
                den += e;
            }
            out[t * width + j] = num / den / (1.0 + (-q).exp());
        }
    }
    out
}

/// Worst absolute deviation of the block from [`af_block_naive`] over
/// `trials` random instances with `T ≤ 16` and every width `≤ 8`.
pub fn af_oracle(variant: AfVariant, trials: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let (input, embed, width, steps) = (
            dims(&mut r, 1, 8),
            dims(&mut r, 1, 8),
            dims(&mut r, 1, 8),
            dims(&mut r, 1, 16),
        );
        let cap = 16;
        let mut init = Initializer::new(r.random());
        let mut p = AfBlockParams::<f64>::init(input, embed, width, variant, cap, &mut init).unwrap();
        if let Some(w) = &mut p.w_bias {
            *w = random_tensor(&mut r, &[cap, cap], 1.0);
        }
        let z = random_tensor(&mut r, &[steps, input], 2.0);
        let got = af_block(&p, &z).unwrap();
        let want = af_block_naive(&p, &z);
        for (a, b) in got.data().iter().zip(&want) {
            worst = worst.max((a - b).abs());
        }
    }
    worst
}

pub const TRUE_OMEGA: f64 = 0.1;
pub const TRUE_ALPHA: f64 = 0.1;
pub const TRUE_BETA: f64 = 0.8;

pub struct Recovery {
    pub fit: GarchFit<f64>,
    pub true_loglik: f64,
    pub elapsed: Duration,
}

impl Recovery {
    pub fn within(&self, tol: f64) -> bool {
        let p = &self.fit.params;
        (p.omega - TRUE_OMEGA).abs() <= tol
            && (p.alpha[0] - TRUE_ALPHA).abs() <= tol
            && (p.beta[0] - TRUE_BETA).abs() <= tol
    }
}

/// Fits a GARCH(1,1) to 5000 returns simulated with seed 7.
pub fn garch_recovery() -> Recovery {
    let truth = GarchParams::garch11(TRUE_OMEGA, TRUE_ALPHA, TRUE_BETA).unwrap();
    let sim = garch_simulate(&truth, 5000, 7, GarchKind::Garch).unwrap();
    let start = Instant::now();
    let fit = fit_mle(&sim.returns, GarchKind::Garch, &FitOptions::default()).unwrap();
    let elapsed = start.elapsed();
    let true_loglik = log_likelihood(&truth, &sim.returns, GarchKind::Garch, fit.init()).unwrap();
    Recovery {
        fit,
        true_loglik,
        elapsed,
    }
}

/// Relative gap between the sample variance of `n` simulated returns and 1.
pub fn monte_carlo_variance_gap(n: usize, seed: u64) -> f64 {
    let truth = GarchParams::garch11(TRUE_OMEGA, TRUE_ALPHA, TRUE_BETA).unwrap();
    let sim = garch_simulate(&truth, n, seed, GarchKind::Garch).unwrap();
    let (_, var) = afvol_core::garch::mean_variance(&sim.returns);
    (var - 1.0).abs()
}

use afvol_core::data::{
    fit_transform_scalers, prepare_dataset, synthetic_prices, FeatureFrame, Partition, PipelineOptions, PriceSeries,
    Scaler, ScalerMode,
};

/// Prices from index `from` on, distorted.
pub fn poisoned(series: &PriceSeries<f64>, from: usize) -> PriceSeries<f64> {
    let close: Vec<f64> = series
        .close()
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            if i >= from {
                p * (1.1 + 0.5 * ((i * 37 % 11) as f64 / 11.0))
            } else {
                p
            }
        })
        .collect();
    PriceSeries::new(series.timestamps().to_vec(), close).unwrap()
}

/// Distorting every price after the last one a training target depends on
/// leaves the GARCH fit, the scalers and the training set untouched, while
/// distorting one price earlier does not.
pub fn poisoning_holds(seed: u64, n: usize) -> bool {
    let series = synthetic_prices::<f64>(seed, n).unwrap();
    let opts = PipelineOptions::default();
    let clean = prepare_dataset(&series, &opts).unwrap();
    let last = clean.dataset.split_index + 2 * opts.window - 1;
    let dirty = prepare_dataset(&poisoned(&series, last + 1), &opts).unwrap();
    let touched = prepare_dataset(&poisoned(&series, last), &opts).unwrap();
    let (c, d) = (&clean.dataset, &dirty.dataset);
    clean.garch == dirty.garch
        && c.x_scaler == d.x_scaler
        && c.y_scaler == d.y_scaler
        && c.x(Partition::Train) == d.x(Partition::Train)
        && c.y(Partition::Train) == d.y(Partition::Train)
        && c.y(Partition::Test) != d.y(Partition::Test)
        && c.y(Partition::Train) != touched.dataset.y(Partition::Train)
}

/// Worst `|inverse(transform(x)) − x| / max(|x|, 1)` over random columns.
pub fn scaler_round_trip_worst(trials: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for t in 0..trials {
        let mode = if t % 2 == 0 {
            ScalerMode::MinMax
        } else {
            ScalerMode::Standard
        };
        let scale = 10f64.powi(r.random_range(-4..4));
        let cols: Vec<Vec<f64>> = (0..dims(&mut r, 1, 3))
            .map(|_| {
                (0..dims(&mut r, 2, 40))
                    .map(|_| r.random_range(-scale..scale))
                    .collect()
            })
            .collect();
        let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
        let names = vec!["f"; cols.len()];
        let s = Scaler::fit(mode, &refs, &names).unwrap();
        for (j, col) in cols.iter().enumerate() {
            for &x in col {
                let back = s.inverse(j, s.transform(j, x));
                worst = worst.max((back - x).abs() / x.abs().max(1.0));
            }
        }
    }
    worst
}

/// `|train − 0.8·samples|` for prepared synthetic series of several lengths.
pub fn split_gaps() -> Vec<(usize, f64)> {
    [100usize, 333, 1000, 2000, 5001]
        .iter()
        .map(|&n| {
            let prep = prepare_dataset(&synthetic_prices::<f64>(1, n).unwrap(), &PipelineOptions::default()).unwrap();
            let s = prep.dataset.samples() as f64;
            (n, (prep.dataset.split_index as f64 - 0.8 * s).abs())
        })
        .collect()
}

/// Scaled windows rebuilt by hand from a random frame of `len ≤ 50` rows.
/// Returns the worst deviation, or `None` when the shapes or split differ.
pub fn windowing_check(trials: usize, seed: u64) -> Option<f64> {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let window = dims(&mut r, 1, 6);
        let len = dims(&mut r, window + 4, 50);
        let col = |r: &mut ChaCha8Rng| -> Vec<f64> { (0..len).map(|_| r.random_range(0.0..3.0)).collect() };
        let frame = FeatureFrame {
            steps: (0..len).collect(),
            realized_vol: col(&mut r),
            garch_vol: col(&mut r),
            target: col(&mut r),
        };
        let ds = fit_transform_scalers(&frame, window, 0.8, ScalerMode::MinMax).ok()?;
        let samples = len + 1 - window;
        let train = (0.8 * samples as f64).floor() as usize;
        if ds.samples() != samples || ds.split_index != train {
            return None;
        }
        let seen = train + window - 1;
        let range = |c: &[f64]| {
            let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (lo, hi - lo)
        };
        let fx = [range(&frame.realized_vol[..seen]), range(&frame.garch_vol[..seen])];
        let fy = range(&frame.target[window - 1..seen]);
        for i in 0..samples {
            for j in 0..window {
                for (f, c) in [&frame.realized_vol, &frame.garch_vol].iter().enumerate() {
                    let want = (c[i + j] - fx[f].0) / fx[f].1;
                    worst = worst.max((ds.x.data()[(i * window + j) * 2 + f] - want).abs());
                }
            }
            worst = worst.max((ds.y[i] - (frame.target[i + window - 1] - fy.0) / fy.1).abs());
        }
    }
    Some(worst)
}
