//! Full-batch training with Adam and squared error, plus RMSE evaluation.

pub mod adam;

pub use adam::{adam_step, AdamState};

use crate::autodiff::{Tape, Var};
use crate::data::{Partition, WindowedDataset, FEATURE_NAMES};
use crate::error::{Error, Result};
use crate::nn::{Model, ModelConfig, ModelKind};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Mean squared error between a prediction node and constant targets.
/// `pred` may be `[n]` or `[n × 1]`.
pub fn mse_loss<'t, T: Scalar>(pred: Var<'t, T>, target: &[T]) -> Result<Var<'t, T>> {
    if target.is_empty() {
        return Err(Error::Contract("mse_loss needs at least one target".into()));
    }
    let shape = pred.shape();
    let len: usize = shape.iter().product();
    if len != target.len() {
        return Err(Error::Dimension {
            op: "mse_loss",
            left: shape,
            right: vec![target.len()],
        });
    }
    pred.mse(&Tensor::new(shape, target.to_vec())?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub model: ModelConfig,
    /// Global gradient-norm cap; `None` disables clipping.
    pub clip_norm: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 1000,
            learning_rate: 0.001,
            seed: 42,
            model: ModelConfig::default(),
            clip_norm: Some(5.0),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.model.hidden == 0 {
            return Err(Error::Config("hidden size must be positive".into()));
        }
        if self.model.layers == 0 {
            return Err(Error::Config("layers must be at least 1".into()));
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0) {
                return Err(Error::Config(format!("clip norm must be positive, got {c}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport<T> {
    pub model: ModelKind,
    pub config: TrainConfig,
    /// Loss before the update of each epoch, on the scaled targets.
    pub train_loss: Vec<T>,
    pub test_loss: Vec<T>,
    pub rmse_train: T,
    pub rmse_test: T,
}

impl<T: Scalar> TrainReport<T> {
    pub fn initial_train_loss(&self) -> T {
        self.train_loss[0]
    }

    pub fn final_train_loss(&self) -> T {
        *self.train_loss.last().expect("at least one epoch")
    }

    /// `epoch,train_loss,test_loss` per epoch, then `rmse,<train>,<test>`.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "epoch,train_loss,test_loss")?;
        for (e, (tr, te)) in self.train_loss.iter().zip(&self.test_loss).enumerate() {
            writeln!(out, "{},{:e},{:e}", e + 1, tr.as_f64(), te.as_f64())?;
        }
        writeln!(out, "rmse,{:e},{:e}", self.rmse_train.as_f64(), self.rmse_test.as_f64())?;
        Ok(())
    }
}

fn check_dataset<T: Scalar>(dataset: &WindowedDataset<T>, config: &TrainConfig) -> Result<()> {
    if config.model.input != FEATURE_NAMES.len() {
        return Err(Error::Config(format!(
            "model expects {} input features, dataset has {}",
            config.model.input,
            FEATURE_NAMES.len()
        )));
    }
    if dataset.split_index == 0 || dataset.split_index >= dataset.samples() {
        return Err(Error::Data("dataset needs non-empty train and test partitions".into()));
    }
    if config.model.kind == ModelKind::AfLstm && dataset.window > config.model.max_seq_len {
        return Err(Error::Capacity {
            len: dataset.window,
            max: config.model.max_seq_len,
        });
    }
    Ok(())
}

fn scaled_mse<T: Scalar>(pred: &[T], target: &[T]) -> T {
    let s: T = pred.iter().zip(target).map(|(&p, &y)| (p - y) * (p - y)).sum();
    s / T::from_usize_lossy(target.len())
}

/// Trains a freshly initialized model on the training partition.
///
/// Every epoch is one full-batch Adam step. The test loss is measured at
/// the same parameters as the train loss and never enters a gradient.
pub fn train<T: Scalar>(dataset: &WindowedDataset<T>, config: &TrainConfig) -> Result<(Model<T>, TrainReport<T>)> {
    config.validate()?;
    check_dataset(dataset, config)?;
    let mut model = Model::<T>::init(&config.model, config.seed)?;
    let names: Vec<String> = model.named_tensors().into_iter().map(|(n, _)| n).collect();
    let mut adam = AdamState::new(
        model.named_tensors().into_iter().map(|(_, t)| t),
        T::lit(config.learning_rate),
    );

    let x_train = dataset.x(Partition::Train);
    let y_train = dataset.y(Partition::Train);
    let x_test = dataset.x(Partition::Test);
    let y_test = dataset.y(Partition::Test);

    let mut train_loss = Vec::with_capacity(config.epochs);
    let mut test_loss = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let (loss, mut grads) = {
            let tape = Tape::new();
            let (pred, leaves) = model.forward(&tape, tape.leaf(x_train.clone()))?;
            let loss = mse_loss(pred, y_train)?;
            let g = loss.backward()?;
            let grads: Vec<Tensor<T>> = leaves.iter().map(|&l| g.wrt(l)).collect();
            (loss.item().expect("scalar loss"), grads)
        };
        let test = scaled_mse(&model.predict(&x_test)?, y_test);
        if !loss.is_finite() || !test.is_finite() {
            return Err(Error::Diverged {
                epoch: epoch + 1,
                reason: format!("loss became non-finite (train {loss}, test {test})"),
            });
        }
        train_loss.push(loss);
        test_loss.push(test);

        if let Some(cap) = config.clip_norm {
            let norm = grads.iter().map(Tensor::norm_sq).sum::<T>().sqrt();
            let cap = T::lit(cap);
            if norm > cap {
                let factor = cap / norm;
                for g in &mut grads {
                    for v in g.data_mut() {
                        *v *= factor;
                    }
                }
            }
        }
        adam_step(&mut model.tensors_mut(), &grads, &names, &mut adam).map_err(|e| match e {
            Error::NonFiniteGradient { param } => Error::Diverged {
                epoch: epoch + 1,
                reason: format!("non-finite gradient for parameter `{param}`"),
            },
            other => other,
        })?;
    }

    let report = TrainReport {
        model: config.model.kind,
        config: config.clone(),
        train_loss,
        test_loss,
        rmse_train: evaluate_rmse(&model, dataset, Partition::Train)?,
        rmse_test: evaluate_rmse(&model, dataset, Partition::Test)?,
    };
    Ok((model, report))
}

/// Predictions for one partition, inverse-transformed to volatility units.
pub fn predict_unscaled<T: Scalar>(model: &Model<T>, dataset: &WindowedDataset<T>, part: Partition) -> Result<Vec<T>> {
    Ok(model
        .predict(&dataset.x(part))?
        .into_iter()
        .map(|p| dataset.y_scaler.inverse(0, p))
        .collect())
}

pub fn rmse<T: Scalar>(pred: &[T], actual: &[T]) -> Result<T> {
    if pred.len() != actual.len() || pred.is_empty() {
        return Err(Error::Dimension {
            op: "rmse",
            left: vec![pred.len()],
            right: vec![actual.len()],
        });
    }
    Ok(scaled_mse(pred, actual).sqrt())
}

/// Root mean squared error in volatility units.
pub fn evaluate_rmse<T: Scalar>(model: &Model<T>, dataset: &WindowedDataset<T>, part: Partition) -> Result<T> {
    rmse(&predict_unscaled(model, dataset, part)?, &dataset.y_unscaled(part))
}

/// Two models trained on the same dataset.
#[derive(Debug, Clone)]
pub struct Comparison<T> {
    pub lstm: (Model<T>, TrainReport<T>),
    pub af_lstm: (Model<T>, TrainReport<T>),
}

impl<T: Scalar> Comparison<T> {
    /// Rows `Train Set`, `Test Set`; columns `LSTM RMSE`, `AF-LSTM RMSE`.
    pub fn write_summary_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        let (l, a) = (&self.lstm.1, &self.af_lstm.1);
        writeln!(out, "set,LSTM RMSE,AF-LSTM RMSE")?;
        writeln!(out, "Train Set,{:e},{:e}", l.rmse_train.as_f64(), a.rmse_train.as_f64())?;
        writeln!(out, "Test Set,{:e},{:e}", l.rmse_test.as_f64(), a.rmse_test.as_f64())?;
        Ok(())
    }
}

/// Trains both models, on two threads.
pub fn compare_models<T: Scalar>(
    dataset: &WindowedDataset<T>,
    lstm: &TrainConfig,
    af_lstm: &TrainConfig,
) -> Result<Comparison<T>> {
    if lstm.model.kind != ModelKind::Lstm || af_lstm.model.kind != ModelKind::AfLstm {
        return Err(Error::Config(
            "compare needs one lstm and one af-lstm configuration".into(),
        ));
    }
    lstm.validate()?;
    af_lstm.validate()?;
    // independent tapes and seeds, so the result does not depend on scheduling
    let (l, a) = std::thread::scope(|s| {
        let l = s.spawn(|| train(dataset, lstm));
        let a = train(dataset, af_lstm);
        (l.join().expect("lstm training thread panicked"), a)
    });
    Ok(Comparison { lstm: l?, af_lstm: a? })
}
