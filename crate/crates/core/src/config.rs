//! Experiment configuration and its flat `key = value` text format.
//!
//! ```text
//! # comment
//! alpha = 1.0
//! hidden_sizes = [4]
//! ```
//!
//! Unknown keys are rejected so that typos cannot silently fall back to a
//! default.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Result, SnnError};
use crate::kernels::NeuronParams;
use crate::losses::TtfsLoss;
use crate::optim::{AdamHyper, OptimizerKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    Xor,
    Iris,
    YinYang,
    /// Small random layered networks, used by the gradient checker.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convergence {
    /// Run the full epoch budget.
    None,
    /// Stop once every training sample is classified correctly.
    FullBatchAccuracy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub alpha: f64,
    pub beta: f64,
    pub theta: f64,
    /// Latest input spike time `T`.
    pub t_max: f64,
    pub t_early: f64,
    pub t_bias: Option<f64>,
    pub hidden_sizes: Vec<usize>,
    pub hidden_weights_mean: Vec<f64>,
    pub hidden_weights_stdev: Vec<f64>,
    pub output_weights_mean: f64,
    pub output_weights_stdev: f64,
    /// `None` trains on the full batch.
    pub minibatch_size: Option<usize>,
    pub epochs: usize,
    pub optimizer: OptimizerKind,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub eta: f64,
    pub gamma: f64,
    pub tau0: f64,
    pub tau1: f64,

    /// Include the `γ` label-neuron term in the loss.
    pub loss_regularizer: bool,
    pub dataset: DatasetKind,
    pub seed: u64,
    pub data_seed: u64,
    pub convergence: Convergence,
    /// End of the simulation window; also the sentinel time of silent outputs.
    pub sim_window: f64,
    pub xor_bit0_early: bool,
    pub test_fraction: f64,
    pub iris_path: Option<PathBuf>,
    pub yinyang_train: usize,
    pub yinyang_test: usize,
    pub yinyang_radius: f64,
    pub tail_cutoff: Option<f64>,
    pub max_events: usize,
    pub log_count_changes: bool,
    /// Evaluate the test split every this many epochs (the final epoch is always evaluated).
    pub eval_every: usize,
    /// Grid spacing of the `simulate` trace.
    pub trace_dt: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            alpha: 1.0,
            beta: 0.99,
            theta: 1.0,
            t_max: 2.0,
            t_early: 0.0,
            t_bias: None,
            hidden_sizes: vec![4],
            hidden_weights_mean: vec![3.0],
            hidden_weights_stdev: vec![1.0],
            output_weights_mean: 2.0,
            output_weights_stdev: 0.1,
            minibatch_size: None,
            epochs: 1000,
            optimizer: OptimizerKind::Adam,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            eta: 0.1,
            gamma: 0.2,
            tau0: 0.1,
            tau1: 1.0,
            loss_regularizer: true,
            dataset: DatasetKind::Xor,
            seed: 0,
            data_seed: 0,
            convergence: Convergence::None,
            sim_window: 8.0,
            xor_bit0_early: true,
            test_fraction: 0.2,
            iris_path: None,
            yinyang_train: 5000,
            yinyang_test: 1000,
            yinyang_radius: 0.5,
            tail_cutoff: None,
            max_events: crate::simulator::DEFAULT_MAX_EVENTS,
            log_count_changes: false,
            eval_every: 1,
            trace_dt: 0.01,
        }
    }
}

pub const XOR_CONFIG: &str = include_str!("../configs/xor.cfg");
pub const IRIS_CONFIG: &str = include_str!("../configs/iris.cfg");
pub const YINYANG_CONFIG: &str = include_str!("../configs/yinyang.cfg");
pub const GRADCHECK_CONFIG: &str = include_str!("../configs/gradcheck.cfg");

fn parse_value<T: FromStr>(key: &str, value: &str, line: usize) -> Result<T> {
    value.parse().map_err(|_| SnnError::Parse {
        line,
        message: format!("bad value {value:?} for {key}"),
    })
}

fn parse_list<T: FromStr>(key: &str, value: &str, line: usize) -> Result<Vec<T>> {
    let inner = value.trim().trim_start_matches('[').trim_end_matches(']');
    inner
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(key, s, line))
        .collect()
}

fn parse_bool(key: &str, value: &str, line: usize) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(SnnError::Parse {
            line,
            message: format!("bad boolean {value:?} for {key}"),
        }),
    }
}

fn parse_optional<T: FromStr>(key: &str, value: &str, line: usize) -> Result<Option<T>> {
    if value == "none" {
        Ok(None)
    } else {
        parse_value(key, value, line).map(Some)
    }
}

fn fmt_list<T: std::fmt::Display>(items: &[T]) -> String {
    let parts: Vec<String> = items.iter().map(|x| x.to_string()).collect();
    format!("[{}]", parts.join(", "))
}

fn fmt_optional<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "none".to_string(), |x| x.to_string())
}

impl TrainConfig {
    pub fn xor() -> Self {
        Self::parse(XOR_CONFIG).expect("shipped XOR config parses")
    }

    pub fn iris() -> Self {
        Self::parse(IRIS_CONFIG).expect("shipped Iris config parses")
    }

    pub fn yinyang() -> Self {
        Self::parse(YINYANG_CONFIG).expect("shipped Yin-Yang config parses")
    }

    pub fn gradcheck() -> Self {
        Self::parse(GRADCHECK_CONFIG).expect("shipped gradcheck config parses")
    }

    /// Parses on top of the defaults and validates the result.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = TrainConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(SnnError::Parse {
                    line,
                    message: format!("expected `key = value`, got {content:?}"),
                });
            };
            cfg.set(key.trim(), value.trim(), line)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads a config file. A relative `iris_path` is resolved against the
    /// directory of the file.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg = Self::parse(&std::fs::read_to_string(path)?)?;
        if let Some(p) = &cfg.iris_path {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    cfg.iris_path = Some(dir.join(p));
                }
            }
        }
        Ok(cfg)
    }

    fn set(&mut self, key: &str, v: &str, line: usize) -> Result<()> {
        match key {
            "alpha" => self.alpha = parse_value(key, v, line)?,
            "beta" => self.beta = parse_value(key, v, line)?,
            "theta" => self.theta = parse_value(key, v, line)?,
            "t_max" => self.t_max = parse_value(key, v, line)?,
            "t_early" => self.t_early = parse_value(key, v, line)?,
            "t_bias" => self.t_bias = parse_optional(key, v, line)?,
            "hidden_sizes" => self.hidden_sizes = parse_list(key, v, line)?,
            "hidden_weights_mean" => self.hidden_weights_mean = parse_list(key, v, line)?,
            "hidden_weights_stdev" => self.hidden_weights_stdev = parse_list(key, v, line)?,
            "output_weights_mean" => self.output_weights_mean = parse_value(key, v, line)?,
            "output_weights_stdev" => self.output_weights_stdev = parse_value(key, v, line)?,
            "minibatch_size" => {
                self.minibatch_size = if v == "full" { None } else { Some(parse_value(key, v, line)?) }
            }
            "epochs" => self.epochs = parse_value(key, v, line)?,
            "optimizer" => {
                self.optimizer = match v.to_ascii_lowercase().as_str() {
                    "adam" => OptimizerKind::Adam,
                    "sgd" => OptimizerKind::Sgd,
                    _ => {
                        return Err(SnnError::Parse {
                            line,
                            message: format!("unknown optimizer {v:?}"),
                        })
                    }
                }
            }
            "beta1" => self.beta1 = parse_value(key, v, line)?,
            "beta2" => self.beta2 = parse_value(key, v, line)?,
            "epsilon" => self.epsilon = parse_value(key, v, line)?,
            "eta" => self.eta = parse_value(key, v, line)?,
            "gamma" => self.gamma = parse_value(key, v, line)?,
            "tau0" => self.tau0 = parse_value(key, v, line)?,
            "tau1" => self.tau1 = parse_value(key, v, line)?,
            "loss_regularizer" => self.loss_regularizer = parse_bool(key, v, line)?,
            "dataset" => {
                self.dataset = match v {
                    "xor" => DatasetKind::Xor,
                    "iris" => DatasetKind::Iris,
                    "yinyang" => DatasetKind::YinYang,
                    "random" => DatasetKind::Random,
                    _ => {
                        return Err(SnnError::Parse {
                            line,
                            message: format!("unknown dataset {v:?}"),
                        })
                    }
                }
            }
            "seed" => self.seed = parse_value(key, v, line)?,
            "data_seed" => self.data_seed = parse_value(key, v, line)?,
            "convergence" => {
                self.convergence = match v {
                    "none" => Convergence::None,
                    "full_batch_accuracy" => Convergence::FullBatchAccuracy,
                    _ => {
                        return Err(SnnError::Parse {
                            line,
                            message: format!("unknown convergence rule {v:?}"),
                        })
                    }
                }
            }
            "sim_window" => self.sim_window = parse_value(key, v, line)?,
            "xor_bit0_early" => self.xor_bit0_early = parse_bool(key, v, line)?,
            "test_fraction" => self.test_fraction = parse_value(key, v, line)?,
            "iris_path" => self.iris_path = if v == "none" { None } else { Some(PathBuf::from(v)) },
            "yinyang_train" => self.yinyang_train = parse_value(key, v, line)?,
            "yinyang_test" => self.yinyang_test = parse_value(key, v, line)?,
            "yinyang_radius" => self.yinyang_radius = parse_value(key, v, line)?,
            "tail_cutoff" => self.tail_cutoff = parse_optional(key, v, line)?,
            "max_events" => self.max_events = parse_value(key, v, line)?,
            "log_count_changes" => self.log_count_changes = parse_bool(key, v, line)?,
            "eval_every" => self.eval_every = parse_value(key, v, line)?,
            "trace_dt" => self.trace_dt = parse_value(key, v, line)?,
            _ => {
                return Err(SnnError::Parse {
                    line,
                    message: format!("unknown key {key:?}"),
                })
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.neuron_params()?;
        self.loss()?;
        let positive = [
            ("t_max", self.t_max),
            ("sim_window", self.sim_window),
            ("beta1", 1.0 - self.beta1),
            ("beta2", 1.0 - self.beta2),
            ("epsilon", self.epsilon),
            ("trace_dt", self.trace_dt),
            ("yinyang_radius", self.yinyang_radius),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(SnnError::invalid(format!("{name} out of range")));
            }
        }
        if !(self.beta1 >= 0.0 && self.beta2 >= 0.0 && self.eta >= 0.0) {
            return Err(SnnError::invalid("Adam parameters and eta must be nonnegative"));
        }
        if !(0.0..=self.t_max).contains(&self.t_early) {
            return Err(SnnError::invalid("t_early must lie in [0, t_max]"));
        }
        let n = self.hidden_sizes.len();
        if self.hidden_weights_mean.len() != n || self.hidden_weights_stdev.len() != n {
            return Err(SnnError::invalid(
                "hidden_weights_mean and hidden_weights_stdev need one entry per hidden layer",
            ));
        }
        if self.hidden_sizes.contains(&0) || self.minibatch_size == Some(0) || self.eval_every == 0 {
            return Err(SnnError::invalid("sizes must be positive"));
        }
        if self.hidden_weights_stdev.iter().chain([&self.output_weights_stdev]).any(|&s| !(s >= 0.0)) {
            return Err(SnnError::invalid("weight stdev must be nonnegative"));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(SnnError::invalid("test_fraction must lie in (0, 1)"));
        }
        Ok(())
    }

    pub fn neuron_params(&self) -> Result<NeuronParams> {
        NeuronParams::new(self.alpha, self.beta, self.theta)
    }

    pub fn loss(&self) -> Result<TtfsLoss> {
        let gamma = if self.loss_regularizer { self.gamma } else { 0.0 };
        TtfsLoss::new(self.tau0, self.tau1, gamma)
    }

    pub fn adam_hyper(&self) -> AdamHyper {
        AdamHyper {
            eta: self.eta,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }

    pub fn sim_options(&self) -> crate::simulator::SimOptions {
        let mut opts = crate::simulator::SimOptions::new(self.sim_window);
        opts.max_events = self.max_events;
        opts.tail_cutoff = self.tail_cutoff;
        opts
    }

    /// Serializes every key; `parse(to_text())` round-trips.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("alpha", self.alpha.to_string());
        put("beta", self.beta.to_string());
        put("theta", self.theta.to_string());
        put("t_max", self.t_max.to_string());
        put("t_early", self.t_early.to_string());
        put("t_bias", fmt_optional(&self.t_bias));
        put("hidden_sizes", fmt_list(&self.hidden_sizes));
        put("hidden_weights_mean", fmt_list(&self.hidden_weights_mean));
        put("hidden_weights_stdev", fmt_list(&self.hidden_weights_stdev));
        put("output_weights_mean", self.output_weights_mean.to_string());
        put("output_weights_stdev", self.output_weights_stdev.to_string());
        put("minibatch_size", self.minibatch_size.map_or("full".into(), |b| b.to_string()));
        put("epochs", self.epochs.to_string());
        put(
            "optimizer",
            match self.optimizer {
                OptimizerKind::Adam => "adam".into(),
                OptimizerKind::Sgd => "sgd".into(),
            },
        );
        put("beta1", self.beta1.to_string());
        put("beta2", self.beta2.to_string());
        put("epsilon", self.epsilon.to_string());
        put("eta", self.eta.to_string());
        put("gamma", self.gamma.to_string());
        put("tau0", self.tau0.to_string());
        put("tau1", self.tau1.to_string());
        put("loss_regularizer", self.loss_regularizer.to_string());
        put(
            "dataset",
            match self.dataset {
                DatasetKind::Xor => "xor",
                DatasetKind::Iris => "iris",
                DatasetKind::YinYang => "yinyang",
                DatasetKind::Random => "random",
            }
            .into(),
        );
        put("seed", self.seed.to_string());
        put("data_seed", self.data_seed.to_string());
        put(
            "convergence",
            match self.convergence {
                Convergence::None => "none",
                Convergence::FullBatchAccuracy => "full_batch_accuracy",
            }
            .into(),
        );
        put("sim_window", self.sim_window.to_string());
        put("xor_bit0_early", self.xor_bit0_early.to_string());
        put("test_fraction", self.test_fraction.to_string());
        put(
            "iris_path",
            self.iris_path.as_ref().map_or("none".into(), |p| p.display().to_string()),
        );
        put("yinyang_train", self.yinyang_train.to_string());
        put("yinyang_test", self.yinyang_test.to_string());
        put("yinyang_radius", self.yinyang_radius.to_string());
        put("tail_cutoff", fmt_optional(&self.tail_cutoff));
        put("max_events", self.max_events.to_string());
        put("log_count_changes", self.log_count_changes.to_string());
        put("eval_every", self.eval_every.to_string());
        put("trace_dt", self.trace_dt.to_string());
        s
    }
}
