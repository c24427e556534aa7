//! `afvol` command line: GARCH fitting, model training and the LSTM vs
//! AF-LSTM comparison.
//!
//! Every flag can also be set from a flat `key = value` file passed with
//! `--config`; flags given on the command line win.

use std::collections::HashMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use afvol_core::data::{
    prepare_dataset, simulated_prices, synthetic_prices, Partition, PipelineOptions, Prepared, PriceSeries, ScalerMode,
};
use afvol_core::garch::{fit_mle, FitOptions, GarchFit, GarchKind, GarchParams};
use afvol_core::nn::{write_params, AfVariant, Model, ModelConfig, ModelKind};
use afvol_core::train::{compare_models, predict_unscaled, train, TrainConfig, TrainReport};
use afvol_core::{data, Error, Result};
use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};

pub const SYNTHETIC_LEN: usize = 2000;

#[derive(Debug, Parser)]
#[command(
    name = "afvol",
    version,
    about = "GARCH-fed attention-free LSTM volatility forecasting"
)]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit GARCH by maximum likelihood and write its volatility path.
    FitGarch(RunArgs),
    /// Train one model and write its report, parameters and predictions.
    Train(RunArgs),
    /// Train the LSTM and the AF-LSTM on the same data and summarize both.
    Compare(RunArgs),
    /// Write a simulated GARCH price series as `timestamp,close` CSV.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Price CSV with `timestamp,close` columns.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Use a simulated GARCH(1,1) series (ω=0.1, α=0.1, β=0.8) drawn with this seed instead of --input.
    #[arg(long)]
    pub synthetic: Option<u64>,
    /// Number of prices in the simulated series.
    #[arg(long, default_value_t = SYNTHETIC_LEN)]
    pub synthetic_len: usize,
    /// Flat `key = value` file with defaults for any of these flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub output_dir: PathBuf,
    /// Seed for weight initialization.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.001)]
    pub lr: f64,
    /// LSTM hidden size.
    #[arg(long, default_value_t = 64)]
    pub hidden: usize,
    /// Width of the per-step input embedding inside each attention-free block.
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Width of queries, keys and values inside each attention-free block.
    #[arg(long, default_value_t = 64)]
    pub af_hidden: usize,
    /// Stacked recurrent layers.
    #[arg(long, default_value_t = 1)]
    pub layers: usize,
    /// Longest sequence the position-bias matrix covers.
    #[arg(long, default_value_t = 1000)]
    pub max_seq_len: usize,
    /// Rolling-volatility and input window length.
    #[arg(long, default_value_t = 5)]
    pub window: usize,
    /// Fraction of windows used for training.
    #[arg(long, default_value_t = 0.8)]
    pub split: f64,
    #[arg(long, default_value = "af-lstm", value_parser = parse_from_str::<ModelKind>)]
    pub model: ModelKind,
    #[arg(long, default_value = "simple", value_parser = parse_from_str::<AfVariant>)]
    pub af_variant: AfVariant,
    #[arg(long, default_value = "garch", value_parser = parse_from_str::<GarchKind>)]
    pub garch: GarchKind,
    #[arg(long, default_value = "minmax", value_parser = parse_from_str::<ScalerMode>)]
    pub scaler: ScalerMode,
    /// Global gradient-norm cap.
    #[arg(long, default_value_t = 5.0)]
    pub clip_norm: f64,
    /// Disable gradient clipping.
    #[arg(long)]
    pub no_clip: bool,
    /// Also write the feature frame as dataset.csv.
    #[arg(long)]
    pub dump_dataset: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Number of prices.
    #[arg(long, default_value_t = SYNTHETIC_LEN)]
    pub n: usize,
    #[arg(long, default_value_t = 0.1)]
    pub omega: f64,
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.8)]
    pub beta: f64,
    /// Asymmetry coefficient; only used with `--garch gjr`.
    #[arg(long, default_value_t = 0.0)]
    pub gamma: f64,
    #[arg(long, default_value = "garch", value_parser = parse_from_str::<GarchKind>)]
    pub garch: GarchKind,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "synthetic.csv")]
    pub output: PathBuf,
}

fn parse_from_str<V: std::str::FromStr<Err = Error>>(s: &str) -> std::result::Result<V, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Everything `fit-garch`, `train` and `compare` need, validated.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub source: Source,
    pub output_dir: PathBuf,
    pub pipeline: PipelineOptions,
    pub train: TrainConfig,
    pub dump_dataset: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Csv(PathBuf),
    Synthetic { seed: u64, len: usize },
}

impl RunConfig {
    pub fn from_args(a: &RunArgs) -> Result<Self> {
        let source = match (&a.input, a.synthetic) {
            (Some(_), Some(_)) => return Err(Error::Config("use either --input or --synthetic, not both".into())),
            (None, None) => return Err(Error::Config("one of --input or --synthetic is required".into())),
            (Some(p), None) => Source::Csv(p.clone()),
            (None, Some(seed)) => Source::Synthetic {
                seed,
                len: a.synthetic_len,
            },
        };
        let cfg = Self {
            source,
            output_dir: a.output_dir.clone(),
            pipeline: PipelineOptions {
                window: a.window,
                split: a.split,
                garch: a.garch,
                scaler: a.scaler,
                fit: FitOptions::default(),
            },
            train: TrainConfig {
                epochs: a.epochs,
                learning_rate: a.lr,
                seed: a.seed,
                model: ModelConfig {
                    kind: a.model,
                    input: data::FEATURE_NAMES.len(),
                    hidden: a.hidden,
                    layers: a.layers,
                    dim: a.dim,
                    af_hidden: a.af_hidden,
                    variant: a.af_variant,
                    max_seq_len: a.max_seq_len,
                    ..ModelConfig::default()
                },
                clip_norm: if a.no_clip { None } else { Some(a.clip_norm) },
            },
            dump_dataset: a.dump_dataset,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        let m = &self.train.model;
        if m.dim == 0 || m.af_hidden == 0 {
            return Err(Error::Config("--dim and --af-hidden must be positive".into()));
        }
        let p = &self.pipeline;
        if p.window < 2 {
            return Err(Error::Config(format!("--window must be at least 2, got {}", p.window)));
        }
        if !(p.split > 0.0 && p.split < 1.0) {
            return Err(Error::Config(format!("--split must be in (0, 1), got {}", p.split)));
        }
        if m.max_seq_len < p.window {
            return Err(Error::Config(format!(
                "--max-seq-len {} is shorter than --window {}",
                m.max_seq_len, p.window
            )));
        }
        match &self.source {
            Source::Csv(path) if !path.is_file() => {
                Err(Error::Io(format!("input file {} does not exist", path.display())))
            }
            Source::Synthetic { len, .. } if *len < data::series::MIN_PRICES => Err(Error::Config(format!(
                "--synthetic-len must be at least {}",
                data::series::MIN_PRICES
            ))),
            _ => Ok(()),
        }
    }

    pub fn load_series(&self) -> Result<PriceSeries<f64>> {
        match &self.source {
            Source::Csv(path) => PriceSeries::from_csv_path(path),
            Source::Synthetic { seed, len } => synthetic_prices(*seed, *len),
        }
    }

    fn with_model(&self, kind: ModelKind) -> TrainConfig {
        let mut t = self.train.clone();
        t.model.kind = kind;
        t
    }
}

/// Files produced by one command, written together at the end.
#[derive(Debug, Default)]
pub struct Artifacts {
    files: Vec<(PathBuf, Vec<u8>)>,
    /// Human-readable summary for stdout.
    pub message: String,
}

impl Artifacts {
    fn add(&mut self, path: PathBuf, content: Vec<u8>) {
        self.files.push((path, content));
    }

    pub fn paths(&self) -> Vec<&Path> {
        self.files.iter().map(|(p, _)| p.as_path()).collect()
    }

    /// Writes every file, or none: on failure the files already written
    /// are removed again.
    pub fn write(&self) -> Result<()> {
        let mut done: Vec<&Path> = Vec::new();
        for (path, content) in &self.files {
            let res = path
                .parent()
                .filter(|p| !p.as_os_str().is_empty())
                .map_or(Ok(()), std::fs::create_dir_all)
                .and_then(|_| std::fs::write(path, content));
            if let Err(e) = res {
                for p in done {
                    let _ = std::fs::remove_file(p);
                }
                return Err(Error::Io(format!("{}: {e}", path.display())));
            }
            done.push(path);
        }
        Ok(())
    }
}

fn garch_summary(fit: &GarchFit<f64>) -> String {
    let p = &fit.params;
    let mut s = String::new();
    let _ = writeln!(s, "kind {}", fit.kind);
    let _ = writeln!(s, "omega {:e}", p.omega);
    let _ = writeln!(s, "alpha {:e}", p.alpha[0]);
    if let Some(g) = &p.gamma {
        let _ = writeln!(s, "gamma {:e}", g[0]);
    }
    let _ = writeln!(s, "beta {:e}", p.beta[0]);
    let _ = writeln!(s, "loglik {:e}", fit.loglik);
    let _ = writeln!(s, "mean {:e}", fit.mean);
    let _ = writeln!(s, "sigma2_0 {:e}", fit.sigma2_0);
    let _ = writeln!(s, "n_obs {}", fit.n_obs);
    let _ = writeln!(s, "converged {}", fit.converged);
    if let Ok(v) = fit.unconditional_variance() {
        let _ = writeln!(s, "unconditional_variance {v:e}");
    }
    s
}

/// Fits on every return; the CSV has one row per step `t` in
/// `[window, returns)`, i.e. `prices − 1 − window` rows.
pub fn cmd_fit_garch(cfg: &RunConfig) -> Result<Artifacts> {
    let series = cfg.load_series()?;
    let returns = data::log_returns(series.close())?;
    let w = cfg.pipeline.window;
    let fit = fit_mle(&returns, cfg.pipeline.garch, &cfg.pipeline.fit)?;
    let sigma = fit.filter(&returns)?.sigma();
    let rv = data::rolling_volatility(&returns, w)?;

    let mut csv = String::from("t,realized_vol,garch_vol\n");
    for t in w..returns.len() {
        let _ = writeln!(csv, "{},{:e},{:e}", series.timestamps()[t + 1], rv[t - w], sigma[t]);
    }
    if sigma.iter().any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("GARCH filter produced non-finite volatility".into()));
    }
    let summary = garch_summary(&fit);
    let mut out = Artifacts {
        message: summary.clone(),
        ..Artifacts::default()
    };
    out.add(cfg.output_dir.join("garch_params.txt"), summary.into_bytes());
    out.add(cfg.output_dir.join("garch_vol.csv"), csv.into_bytes());
    Ok(out)
}

fn prediction_csv(prepared: &Prepared<f64>, model: &Model<f64>, epochs: usize) -> Result<Vec<u8>> {
    let ds = &prepared.dataset;
    let mut s = String::from("t,actual_vol,predicted_vol,split\n");
    for part in [Partition::Train, Partition::Test] {
        let pred = predict_unscaled(model, ds, part)?;
        let actual = ds.y_unscaled(part);
        for ((i, p), a) in ds.range(part).zip(pred).zip(actual) {
            if !p.is_finite() {
                return Err(Error::Diverged {
                    epoch: epochs,
                    reason: "non-finite prediction".into(),
                });
            }
            let _ = writeln!(s, "{},{:e},{:e},{}", prepared.sample_timestamp(i), a, p, part);
        }
    }
    Ok(s.into_bytes())
}

fn report_bytes(report: &TrainReport<f64>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    report.write_csv(&mut buf)?;
    Ok(buf)
}

fn params_bytes(model: &Model<f64>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_params(model, &mut buf)?;
    Ok(buf)
}

fn add_model_outputs(
    out: &mut Artifacts,
    cfg: &RunConfig,
    prepared: &Prepared<f64>,
    model: &Model<f64>,
    report: &TrainReport<f64>,
) -> Result<()> {
    let tag = report.model.to_string();
    out.add(cfg.output_dir.join(format!("report_{tag}.csv")), report_bytes(report)?);
    out.add(cfg.output_dir.join(format!("params_{tag}.txt")), params_bytes(model)?);
    out.add(
        cfg.output_dir.join(format!("predictions_{tag}.csv")),
        prediction_csv(prepared, model, report.config.epochs)?,
    );
    let _ = writeln!(
        out.message,
        "{tag}: train RMSE {:.6}, test RMSE {:.6} (loss {:.6} -> {:.6})",
        report.rmse_train,
        report.rmse_test,
        report.initial_train_loss(),
        report.final_train_loss()
    );
    Ok(())
}

fn prepare(cfg: &RunConfig, out: &mut Artifacts) -> Result<Prepared<f64>> {
    let series = cfg.load_series()?;
    let prepared = prepare_dataset(&series, &cfg.pipeline)?;
    if cfg.dump_dataset {
        let mut buf = Vec::new();
        prepared.write_frame_csv(&mut buf)?;
        out.add(cfg.output_dir.join("dataset.csv"), buf);
    }
    Ok(prepared)
}

pub fn cmd_train(cfg: &RunConfig) -> Result<Artifacts> {
    let mut out = Artifacts::default();
    let prepared = prepare(cfg, &mut out)?;
    let (model, report) = train(&prepared.dataset, &cfg.train)?;
    add_model_outputs(&mut out, cfg, &prepared, &model, &report)?;
    Ok(out)
}

pub fn cmd_compare(cfg: &RunConfig) -> Result<Artifacts> {
    let mut out = Artifacts::default();
    let prepared = prepare(cfg, &mut out)?;
    let cmp = compare_models(
        &prepared.dataset,
        &cfg.with_model(ModelKind::Lstm),
        &cfg.with_model(ModelKind::AfLstm),
    )?;
    add_model_outputs(&mut out, cfg, &prepared, &cmp.lstm.0, &cmp.lstm.1)?;
    add_model_outputs(&mut out, cfg, &prepared, &cmp.af_lstm.0, &cmp.af_lstm.1)?;
    let mut summary = Vec::new();
    cmp.write_summary_csv(&mut summary)?;
    out.message.push_str(&String::from_utf8_lossy(&summary));
    out.add(cfg.output_dir.join("summary.csv"), summary);
    Ok(out)
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<Artifacts> {
    let params = match a.garch {
        GarchKind::Garch => GarchParams::garch11(a.omega, a.alpha, a.beta)?,
        GarchKind::Gjr => GarchParams::gjr11(a.omega, a.alpha, a.gamma, a.beta)?,
    };
    params.check_stationary(a.garch)?;
    let series = simulated_prices(&params, a.garch, a.seed, a.n)?;
    let mut buf = Vec::new();
    series.write_csv(&mut buf)?;
    let mut out = Artifacts {
        message: format!("{} prices written to {}\n", series.len(), a.output.display()),
        ..Artifacts::default()
    };
    out.add(a.output.clone(), buf);
    Ok(out)
}

/// Exit status for an error: 2 for bad input or configuration, 1 for
/// failures of the computation itself.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Data(_)
        | Error::Config(_)
        | Error::Parse { .. }
        | Error::Io(_)
        | Error::Constraint(_)
        | Error::Degenerate(_)
        | Error::DegenerateFeature { .. }
        | Error::Capacity { .. } => 2,
        _ => 1,
    }
}

fn config_entries(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: i + 1,
            message: format!("expected `key = value`, got `{raw}`"),
        })?;
        out.push((k.trim().replace('_', "-"), v.trim().to_string()));
    }
    Ok(out)
}

/// Turns config-file entries into flags placed before the user's own, so
/// that anything on the command line overrides the file.
fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(pos) = args
        .iter()
        .position(|a| a == "--config" || a.to_string_lossy().starts_with("--config="))
    else {
        return Ok(args);
    };
    let path = match args[pos].to_string_lossy().strip_prefix("--config=") {
        Some(p) => PathBuf::from(p),
        None => match args.get(pos + 1) {
            Some(p) => PathBuf::from(p),
            None => return Ok(args),
        },
    };
    let Some(sub_name) = args.get(1).map(|s| s.to_string_lossy().into_owned()) else {
        return Ok(args);
    };
    let cmd = Cli::command();
    let Some(sub) = cmd.find_subcommand(&sub_name) else {
        return Ok(args);
    };
    let known: HashMap<String, bool> = sub
        .get_arguments()
        .filter_map(|a| {
            a.get_long()
                .map(|l| (l.to_string(), matches!(a.get_action(), clap::ArgAction::SetTrue)))
        })
        .collect();

    let mut injected = Vec::new();
    for (key, value) in config_entries(&path)? {
        let flag = known
            .get(&key)
            .copied()
            .ok_or_else(|| Error::Config(format!("unknown key `{key}` in {}", path.display())))?;
        if key == "config" {
            return Err(Error::Config("config files cannot include other config files".into()));
        }
        if flag {
            match value.as_str() {
                "true" | "1" | "yes" => injected.push(OsString::from(format!("--{key}"))),
                "false" | "0" | "no" => {}
                other => return Err(Error::Config(format!("`{key}` expects true or false, got `{other}`"))),
            }
        } else {
            injected.push(OsString::from(format!("--{key}={value}")));
        }
    }
    let mut out = args[..2].to_vec();
    out.extend(injected);
    out.extend(args[2..].iter().cloned());
    Ok(out)
}

/// Parses `args` (including the program name), runs the command and writes
/// its outputs. Returns the process exit status.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let matches = match Cli::command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match &cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::FitGarch(a) | Command::Train(a) | Command::Compare(a) => {
            RunConfig::from_args(a).and_then(|cfg| match &cli.command {
                Command::FitGarch(_) => cmd_fit_garch(&cfg),
                Command::Train(_) => cmd_train(&cfg),
                _ => cmd_compare(&cfg),
            })
        }
    };
    match result.and_then(|out| out.write().map(|_| out)) {
        Ok(out) => {
            print!("{}", out.message);
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
