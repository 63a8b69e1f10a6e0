//! Training loop: per-sample exact gradients averaged over minibatches.

use std::fmt;
use std::io::Write;
use std::time::{Duration, Instant};

use log::{debug, info, warn};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::config::{Convergence, DatasetKind, TrainConfig};
use crate::data::{self, EncodedSample, YinYangEncoding};
use crate::error::{Result, SnnError};
use crate::fpgrad::exact_gradient;
use crate::losses::{first_spikes, FirstSpikes, TtfsLoss};
use crate::network::NetworkTopology;
use crate::optim::Optimizer;
use crate::simulator::{simulate, SimOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub train: Vec<EncodedSample>,
    pub test: Vec<EncodedSample>,
    pub n_inputs: usize,
    pub n_classes: usize,
}

impl Dataset {
    pub fn new(train: Vec<EncodedSample>, test: Vec<EncodedSample>, n_classes: usize) -> Result<Self> {
        let n_inputs = train.first().map(|s| s.spikes.len()).ok_or_else(|| SnnError::invalid("empty training set"))?;
        if train.iter().chain(&test).any(|s| s.spikes.len() != n_inputs || s.label >= n_classes) {
            return Err(SnnError::invalid("samples disagree on input count or have out-of-range labels"));
        }
        Ok(Dataset {
            train,
            test,
            n_inputs,
            n_classes,
        })
    }

    /// Builds the dataset selected by `cfg.dataset`.
    pub fn from_config(cfg: &TrainConfig) -> Result<Self> {
        match cfg.dataset {
            DatasetKind::Xor => {
                let samples = data::xor_dataset(cfg.t_early, cfg.t_max, cfg.xor_bit0_early);
                Dataset::new(samples.clone(), samples, 2)
            }
            DatasetKind::Iris => {
                let iris = match &cfg.iris_path {
                    Some(path) => data::load_iris(path)?,
                    None => data::parse_iris(data::IRIS_CSV.as_bytes())?,
                };
                let encoded = iris.encode(cfg.t_max)?;
                let (train, test) = iris.stratified_split(cfg.data_seed, cfg.test_fraction);
                Dataset::new(
                    train.iter().map(|&i| encoded[i].clone()).collect(),
                    test.iter().map(|&i| encoded[i].clone()).collect(),
                    iris.n_classes(),
                )
            }
            DatasetKind::YinYang => {
                let enc = YinYangEncoding {
                    t_early: cfg.t_early,
                    t_late: cfg.t_max,
                    t_bias: cfg.t_bias.ok_or_else(|| SnnError::invalid("the yinyang dataset needs t_bias"))?,
                };
                let r = cfg.yinyang_radius;
                let train = data::generate_yinyang(cfg.yinyang_train, r, 2 * cfg.data_seed)?;
                let test = data::generate_yinyang(cfg.yinyang_test, r, 2 * cfg.data_seed + 1)?;
                Dataset::new(
                    data::encode_yinyang_points(&train, r, &enc)?,
                    data::encode_yinyang_points(&test, r, &enc)?,
                    3,
                )
            }
            DatasetKind::Random => Err(SnnError::invalid("the random dataset has no training samples")),
        }
    }

    pub fn fingerprint(&self) -> String {
        let mut all = self.train.clone();
        all.extend_from_slice(&self.test);
        data::fingerprint(&all)
    }
}

/// Layer sizes `[inputs, hidden.., outputs]` for a config.
pub fn layer_sizes(cfg: &TrainConfig, n_inputs: usize, n_classes: usize) -> Vec<usize> {
    let mut sizes = vec![n_inputs];
    sizes.extend_from_slice(&cfg.hidden_sizes);
    sizes.push(n_classes);
    sizes
}

/// Fully connected network with independent normal weights per layer.
pub fn init_network(cfg: &TrainConfig, n_inputs: usize, n_classes: usize, seed: u64) -> Result<NetworkTopology> {
    let sizes = layer_sizes(cfg, n_inputs, n_classes);
    let mut dists = Vec::with_capacity(sizes.len() - 1);
    for l in 0..sizes.len() - 1 {
        let (mean, sd) = if l < cfg.hidden_sizes.len() {
            (cfg.hidden_weights_mean[l], cfg.hidden_weights_stdev[l])
        } else {
            (cfg.output_weights_mean, cfg.output_weights_stdev)
        };
        dists.push(Normal::new(mean, sd).map_err(|e| SnnError::invalid(e.to_string()))?);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    NetworkTopology::layered(cfg.neuron_params()?, &sizes, |layer, _, _| dists[layer].sample(&mut rng))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleOutcome {
    pub loss: f64,
    pub prediction: Option<usize>,
    pub first: FirstSpikes,
    pub spike_count: usize,
    /// Loss gradient over the weights, when requested and well defined.
    pub grad: Option<Vec<f64>>,
}

impl SampleOutcome {
    pub fn correct(&self, label: usize) -> bool {
        self.prediction == Some(label)
    }
}

/// Simulates one sample and optionally differentiates its loss.
/// A degenerate firing system yields no gradient rather than an error.
pub fn run_sample(
    net: &NetworkTopology,
    sample: &EncodedSample,
    loss: &TtfsLoss,
    opts: &SimOptions,
    with_grad: bool,
) -> Result<SampleOutcome> {
    let sim = simulate(net, &sample.spikes, opts)?;
    let first = first_spikes(&sim.record, net.outputs(), opts.t_max);
    let eval = loss.evaluate(&first, sample.label)?;
    let grad = if with_grad {
        match exact_gradient(net, &sim, &eval.d_fires) {
            Ok(g) => Some(g.dldw),
            Err(e @ (SnnError::DegenerateFire { .. } | SnnError::Singular { .. })) => {
                warn!("skipping gradient: {e}");
                None
            }
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    Ok(SampleOutcome {
        loss: eval.loss,
        prediction: first.prediction(),
        spike_count: sim.record.len(),
        first,
        grad,
    })
}

/// Loss and accuracy over a sample set.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub loss: f64,
    pub accuracy: f64,
    pub outcomes: Vec<SampleOutcome>,
}

pub fn evaluate(net: &NetworkTopology, samples: &[EncodedSample], cfg: &TrainConfig) -> Result<EvalReport> {
    let loss = cfg.loss()?;
    let mut opts = cfg.sim_options();
    opts.stop_when_outputs_fired = true;
    let outcomes: Vec<SampleOutcome> = samples
        .par_iter()
        .enumerate()
        .map(|(i, s)| run_sample(net, s, &loss, &opts, false).map_err(|e| e.with_sample(i)))
        .collect::<Result<_>>()?;
    let n = samples.len().max(1) as f64;
    let total: f64 = outcomes.iter().map(|o| o.loss).sum();
    let correct = outcomes.iter().zip(samples).filter(|(o, s)| o.correct(s.label)).count();
    Ok(EvalReport {
        loss: total / n,
        accuracy: correct as f64 / n,
        outcomes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub split: Split,
    pub loss: f64,
    pub accuracy: f64,
}

pub fn write_metrics_csv<W: Write>(mut out: W, history: &[EpochMetrics]) -> std::io::Result<()> {
    writeln!(out, "epoch,split,loss,accuracy")?;
    for m in history {
        writeln!(out, "{},{},{},{}", m.epoch, m.split, m.loss, m.accuracy)?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub net: NetworkTopology,
    /// Epoch 0 holds the metrics of the initial weights. Later train rows
    /// average the minibatch losses seen during the epoch, before each step.
    pub history: Vec<EpochMetrics>,
    /// Optimizer steps taken.
    pub steps: usize,
    pub converged: bool,
    /// Samples whose spike count differed from their previous visit.
    pub count_changes: usize,
    /// Samples whose gradient was skipped as degenerate.
    pub skipped: usize,
    pub elapsed: Duration,
}

impl TrainOutcome {
    pub fn last(&self, split: Split) -> Option<&EpochMetrics> {
        self.history.iter().rev().find(|m| m.split == split)
    }
}

/// Trains a fresh network initialized from `cfg.seed`.
pub fn train(cfg: &TrainConfig, dataset: &Dataset) -> Result<TrainOutcome> {
    let net = init_network(cfg, dataset.n_inputs, dataset.n_classes, cfg.seed)?;
    train_network(cfg, dataset, net)
}

/// Trains `net` in place of a freshly initialized one.
pub fn train_network(cfg: &TrainConfig, dataset: &Dataset, mut net: NetworkTopology) -> Result<TrainOutcome> {
    cfg.validate()?;
    if dataset.train.is_empty() {
        return Err(SnnError::invalid("empty training set"));
    }
    let start = Instant::now();
    let loss = cfg.loss()?;
    let mut opts = cfg.sim_options();
    opts.stop_when_outputs_fired = true;
    let n_train = dataset.train.len();
    let batch = cfg.minibatch_size.unwrap_or(n_train).min(n_train);
    let full_batch = batch == n_train;
    let mut optimizer = Optimizer::new(cfg.optimizer, cfg.adam_hyper(), net.n_weights());
    // the shuffle stream is separate from the initialization stream
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);

    let mut history = Vec::new();
    let initial = evaluate(&net, &dataset.train, cfg)?;
    history.push(EpochMetrics {
        epoch: 0,
        split: Split::Train,
        loss: initial.loss,
        accuracy: initial.accuracy,
    });
    if !dataset.test.is_empty() {
        let test = evaluate(&net, &dataset.test, cfg)?;
        history.push(EpochMetrics {
            epoch: 0,
            split: Split::Test,
            loss: test.loss,
            accuracy: test.accuracy,
        });
    }
    info!("epoch 0: train loss {:.4} acc {:.4}", initial.loss, initial.accuracy);

    let mut last_counts: Vec<Option<usize>> = vec![None; n_train];
    let mut order: Vec<usize> = (0..n_train).collect();
    let mut steps = 0;
    let mut converged = false;
    let mut count_changes = 0;
    let mut skipped = 0;
    let mut grad = vec![0.0; net.n_weights()];
    let mut epochs_run = 0;

    'epochs: for epoch in 1..=cfg.epochs {
        if !full_batch {
            order.shuffle(&mut rng);
        }
        let mut epoch_loss = 0.0;
        let mut epoch_correct = 0;
        let mut seen = 0;
        for chunk in order.chunks(batch) {
            let outcomes: Vec<SampleOutcome> = chunk
                .par_iter()
                .map(|&i| run_sample(&net, &dataset.train[i], &loss, &opts, true).map_err(|e| e.with_sample(i)))
                .collect::<Result<_>>()?;

            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut step_changes = 0;
            for (&i, o) in chunk.iter().zip(&outcomes) {
                epoch_loss += o.loss;
                if o.correct(dataset.train[i].label) {
                    epoch_correct += 1;
                }
                if last_counts[i].is_some_and(|c| c != o.spike_count) {
                    step_changes += 1;
                }
                last_counts[i] = Some(o.spike_count);
                match &o.grad {
                    Some(g) => grad.iter_mut().zip(g).for_each(|(a, b)| *a += b),
                    None => skipped += 1,
                }
            }
            seen += chunk.len();
            count_changes += step_changes;
            if cfg.log_count_changes && step_changes > 0 {
                info!("step {}: spike count changed for {step_changes} samples", steps + 1);
            }

            if full_batch
                && cfg.convergence == Convergence::FullBatchAccuracy
                && epoch_correct == n_train
            {
                converged = true;
                history.push(EpochMetrics {
                    epoch,
                    split: Split::Train,
                    loss: epoch_loss / n_train as f64,
                    accuracy: 1.0,
                });
                epochs_run = epoch;
                break 'epochs;
            }

            let scale = 1.0 / chunk.len() as f64;
            grad.iter_mut().for_each(|g| *g *= scale);
            optimizer.step(net.weights_mut(), &grad)?;
            steps += 1;
        }
        epochs_run = epoch;
        let train_loss = epoch_loss / seen as f64;
        let train_acc = epoch_correct as f64 / seen as f64;
        history.push(EpochMetrics {
            epoch,
            split: Split::Train,
            loss: train_loss,
            accuracy: train_acc,
        });
        debug!("epoch {epoch}: train loss {train_loss:.4} acc {train_acc:.4}");

        if !full_batch && cfg.convergence == Convergence::FullBatchAccuracy {
            let report = evaluate(&net, &dataset.train, cfg)?;
            if report.accuracy == 1.0 {
                converged = true;
                break;
            }
        }
        if !dataset.test.is_empty() && epoch % cfg.eval_every == 0 && epoch != cfg.epochs {
            let test = evaluate(&net, &dataset.test, cfg)?;
            info!("epoch {epoch}: train loss {train_loss:.4} acc {train_acc:.4}, test acc {:.4}", test.accuracy);
            history.push(EpochMetrics {
                epoch,
                split: Split::Test,
                loss: test.loss,
                accuracy: test.accuracy,
            });
        }
    }

    if !dataset.test.is_empty() && history.last().is_some_and(|m| m.split == Split::Train) {
        let test = evaluate(&net, &dataset.test, cfg)?;
        history.push(EpochMetrics {
            epoch: epochs_run,
            split: Split::Test,
            loss: test.loss,
            accuracy: test.accuracy,
        });
    }

    Ok(TrainOutcome {
        net,
        history,
        steps,
        converged,
        count_changes,
        skipped,
        elapsed: start.elapsed(),
    })
}
