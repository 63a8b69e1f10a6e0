//! Command-line front end: `train`, `eval`, `gradcheck`, `simulate`, `gen-data`.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{DatasetKind, TrainConfig};
use crate::data;
use crate::error::{Result, SnnError};
use crate::gradcheck::{check_case, random_case};
use crate::network::NetworkTopology;
use crate::simulator::{membrane_trace, simulate, write_trace_csv};
use crate::train::{evaluate, init_network, train, write_metrics_csv, Dataset, Split};

#[derive(Debug, Parser)]
#[command(name = "fpsnn", version, about = "Exact-gradient spiking network training and analysis")]
pub struct Cli {
    /// Worker threads for per-sample parallelism (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    Yinyang,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a network and write metrics, weights and a run manifest.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Test accuracy and a first-spike-time histogram for trained weights.
    Eval {
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Directory for `first_spikes_hist.csv` (default: next to the weights).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 40)]
        bins: usize,
    },
    /// Compare exact gradients with central finite differences on random networks.
    Gradcheck {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        #[arg(long, default_value_t = 1e-6)]
        h: f64,
        /// Write the exact gradient of the first trial as `weight_index,d_loss_d_weight`.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Membrane trace and spike dump for one sample.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        sample: usize,
        #[arg(long, value_enum, default_value_t = SplitArg::Train)]
        split: SplitArg,
        /// Trained weights; defaults to the config's initialization.
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Trace grid spacing (default: `trace_dt` from the config).
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Generate a dataset file.
    GenData {
        #[arg(value_enum)]
        kind: GenKind,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.5)]
        radius: f64,
        /// `x,y,class` output (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the spike encoding as `sample_id,neuron_id,time,label`.
        #[arg(long)]
        encoded: Option<PathBuf>,
        /// Config providing `t_early`, `t_max` and `t_bias` for `--encoded`.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool already initialized: {e}");
        }
    }
    match run(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

/// Runs one command. `Ok(code)` carries a nonzero code for a completed run
/// that failed its check (gradcheck).
pub fn run(command: &Command) -> Result<i32> {
    match command {
        Command::Train { config, out, seed } => cmd_train(config, out, *seed),
        Command::Eval {
            weights,
            config,
            out,
            bins,
        } => cmd_eval(weights, config, out.as_deref(), *bins),
        Command::Gradcheck {
            config,
            trials,
            tol,
            h,
            dump,
        } => cmd_gradcheck(config, *trials, *tol, *h, dump.as_deref()),
        Command::Simulate {
            config,
            sample,
            split,
            weights,
            out,
            dt,
        } => cmd_simulate(config, *sample, *split, weights.as_deref(), out, *dt),
        Command::GenData {
            kind: GenKind::Yinyang,
            n,
            seed,
            radius,
            out,
            encoded,
            config,
        } => cmd_gen_yinyang(*n, *seed, *radius, out.as_deref(), encoded.as_deref(), config.as_deref()),
    }
}

/// `from,to,weight` lines with a header.
pub fn write_weights<W: Write>(mut out: W, net: &NetworkTopology) -> std::io::Result<()> {
    writeln!(out, "from,to,weight")?;
    for (e, w) in net.edges().iter().zip(net.weights()) {
        writeln!(out, "{},{},{w:e}", e.source, e.target)?;
    }
    Ok(())
}

/// Loads `from,to,weight` lines into `net`; every edge must be given exactly once.
pub fn read_weights(path: &Path, net: &mut NetworkTopology) -> Result<()> {
    let text = std::fs::read_to_string(path)?;
    let mut seen = vec![false; net.n_weights()];
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with("from") {
            continue;
        }
        let parse_err = |message: String| SnnError::Parse { line: line_no, message };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let [from, to, weight] = fields[..] else {
            return Err(parse_err(format!("expected from,to,weight, got {line:?}")));
        };
        let from: usize = from.parse().map_err(|_| parse_err(format!("bad neuron id {from:?}")))?;
        let to: usize = to.parse().map_err(|_| parse_err(format!("bad neuron id {to:?}")))?;
        let weight: f64 = weight.parse().map_err(|_| parse_err(format!("bad weight {weight:?}")))?;
        if from >= net.n_neurons() || to >= net.n_neurons() {
            return Err(parse_err(format!("edge {from} -> {to} is not in the network")));
        }
        let e = net
            .edge_index(from, to)
            .ok_or_else(|| parse_err(format!("edge {from} -> {to} is not in the network")))?;
        if std::mem::replace(&mut seen[e], true) {
            return Err(parse_err(format!("edge {from} -> {to} given twice")));
        }
        net.weights_mut()[e] = weight;
    }
    if let Some(missing) = seen.iter().position(|&s| !s) {
        let e = net.edges()[missing];
        return Err(SnnError::invalid(format!("weights file lacks edge {} -> {}", e.source, e.target)));
    }
    Ok(())
}

fn cmd_train(config: &Path, out: &Path, seed: Option<u64>) -> Result<i32> {
    let mut cfg = TrainConfig::from_file(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let dataset = Dataset::from_config(&cfg)?;
    std::fs::create_dir_all(out)?;
    let start = Instant::now();
    let outcome = train(&cfg, &dataset)?;
    let elapsed = start.elapsed();

    write_metrics_csv(create(&out.join("metrics.csv"))?, &outcome.history)?;
    write_weights(create(&out.join("weights.csv"))?, &outcome.net)?;

    let mut m = create(&out.join("manifest.txt"))?;
    writeln!(m, "command = train")?;
    writeln!(m, "config_file = {}", config.display())?;
    writeln!(m, "seed = {}", cfg.seed)?;
    writeln!(m, "dataset_fingerprint = sha256:{}", dataset.fingerprint())?;
    writeln!(m, "output_dir = {}", out.display())?;
    writeln!(m, "elapsed_seconds = {:.3}", elapsed.as_secs_f64())?;
    writeln!(m, "steps = {}", outcome.steps)?;
    writeln!(m, "converged = {}", outcome.converged)?;
    writeln!(m, "spike_count_changes = {}", outcome.count_changes)?;
    writeln!(m, "skipped_gradients = {}", outcome.skipped)?;
    writeln!(m, "artifacts = metrics.csv, weights.csv, manifest.txt")?;
    for line in cfg.to_text().lines() {
        writeln!(m, "config.{line}")?;
    }
    m.flush()?;

    let train_acc = outcome.last(Split::Train).map_or(f64::NAN, |x| x.accuracy);
    let test_acc = outcome.last(Split::Test).map_or(f64::NAN, |x| x.accuracy);
    println!(
        "trained {} steps in {:.1}s: train accuracy {train_acc:.4}, test accuracy {test_acc:.4}",
        outcome.steps,
        elapsed.as_secs_f64()
    );
    Ok(0)
}

/// Builds the config's network shape and loads trained weights into it.
pub fn load_network(cfg: &TrainConfig, dataset: &Dataset, weights: Option<&Path>) -> Result<NetworkTopology> {
    let mut net = init_network(cfg, dataset.n_inputs, dataset.n_classes, cfg.seed)?;
    if let Some(path) = weights {
        read_weights(path, &mut net)?;
    }
    Ok(net)
}

fn cmd_eval(weights: &Path, config: &Path, out: Option<&Path>, bins: usize) -> Result<i32> {
    if bins == 0 {
        return Err(SnnError::invalid("need at least one histogram bin"));
    }
    let cfg = TrainConfig::from_file(config)?;
    let dataset = Dataset::from_config(&cfg)?;
    let net = load_network(&cfg, &dataset, Some(weights))?;
    let report = evaluate(&net, &dataset.test, &cfg)?;
    println!("test loss {:.6}, test accuracy {:.4} ({} samples)", report.loss, report.accuracy, dataset.test.len());

    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| weights.parent().unwrap_or(Path::new(".")).to_path_buf());
    let path = dir.join("first_spikes_hist.csv");
    let width = cfg.sim_window / bins as f64;
    let n_out = dataset.n_classes;
    // counts[output][class][bin]; silent outputs are left out
    let mut counts = vec![vec![vec![0usize; bins]; n_out]; n_out];
    for (o, s) in report.outcomes.iter().zip(&dataset.test) {
        for (j, (&t, &silent)) in o.first.times.iter().zip(&o.first.silent).enumerate() {
            if !silent {
                let b = ((t / width) as usize).min(bins - 1);
                counts[j][s.label][b] += 1;
            }
        }
    }
    let mut w = create(&path)?;
    writeln!(w, "output,true_class,bin_start,bin_end,count")?;
    for (j, per_class) in counts.iter().enumerate() {
        for (c, hist) in per_class.iter().enumerate() {
            for (b, &n) in hist.iter().enumerate() {
                writeln!(w, "{j},{c},{},{},{n}", b as f64 * width, (b + 1) as f64 * width)?;
            }
        }
    }
    w.flush()?;
    println!("wrote {}", path.display());
    Ok(0)
}

fn cmd_gradcheck(config: &Path, trials: usize, tol: f64, h: f64, dump: Option<&Path>) -> Result<i32> {
    let cfg = TrainConfig::from_file(config)?;
    if cfg.dataset != DatasetKind::Random {
        log::info!("gradcheck draws random networks; dataset {:?} is ignored", cfg.dataset);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst = 0.0f64;
    let mut checked = 0;
    let mut unstable = 0;
    let mut reordered = 0;
    for trial in 0..trials {
        let case = random_case(&mut rng)?;
        let report = check_case(&case, h)?;
        if trial == 0 {
            if let Some(path) = dump {
                let mut w = create(path)?;
                writeln!(w, "weight_index,d_loss_d_weight")?;
                for (k, g) in report.exact.iter().enumerate() {
                    writeln!(w, "{k},{g:e}")?;
                }
                w.flush()?;
            }
        }
        checked += report.n_order_stable();
        unstable += report.stable.len() - report.n_stable();
        reordered += report.n_stable() - report.n_order_stable();
        if !report.triangular {
            println!("trial {trial}: firing system is not lower triangular with positive diagonal");
            worst = f64::INFINITY;
        }
        worst = worst.max(report.max_rel_err_smooth);
    }
    let pass = worst <= tol;
    println!(
        "{}, max rel err {worst:.3e} {} {tol:e} ({trials} networks, {checked} weights checked, {unstable} skipped as spike-count unstable, {reordered} as spike-order unstable)",
        if pass { "PASS" } else { "FAIL" },
        if pass { "≤" } else { ">" },
    );
    Ok(if pass { 0 } else { 1 })
}

fn cmd_simulate(
    config: &Path,
    sample: usize,
    split: SplitArg,
    weights: Option<&Path>,
    out: &Path,
    dt: Option<f64>,
) -> Result<i32> {
    let cfg = TrainConfig::from_file(config)?;
    let dataset = Dataset::from_config(&cfg)?;
    let samples = match split {
        SplitArg::Train => &dataset.train,
        SplitArg::Test => &dataset.test,
    };
    let s = samples
        .get(sample)
        .ok_or_else(|| SnnError::invalid(format!("sample {sample} out of range ({} samples)", samples.len())))?;
    let net = load_network(&cfg, &dataset, weights)?;
    let sim = simulate(&net, &s.spikes, &cfg.sim_options())?;

    let dt = dt.unwrap_or(cfg.trace_dt);
    if !(dt > 0.0) {
        return Err(SnnError::invalid("trace spacing must be positive"));
    }
    let steps = (cfg.sim_window / dt + 1e-9).floor() as usize;
    let grid: Vec<f64> = (0..=steps).map(|k| k as f64 * dt).collect();
    let trace = membrane_trace(&net, &s.spikes, &sim.record, &grid);
    let neurons: Vec<usize> = (0..net.n_neurons()).filter(|&n| !net.is_input(n)).collect();

    std::fs::create_dir_all(out)?;
    let trace_path = out.join(format!("trace_{sample}.csv"));
    let mut w = create(&trace_path)?;
    write_trace_csv(&mut w, &neurons, &grid, &trace)?;
    w.flush()?;
    let spikes_path = out.join(format!("spikes_{sample}.csv"));
    let mut w = create(&spikes_path)?;
    sim.record.write_spike_dump(&mut w)?;
    w.flush()?;
    println!(
        "sample {sample} (label {}): {} fires; wrote {} and {}",
        s.label,
        sim.record.len(),
        trace_path.display(),
        spikes_path.display()
    );
    Ok(0)
}

fn cmd_gen_yinyang(
    n: usize,
    seed: u64,
    radius: f64,
    out: Option<&Path>,
    encoded: Option<&Path>,
    config: Option<&Path>,
) -> Result<i32> {
    let points = data::generate_yinyang(n, radius, seed)?;
    match out {
        Some(path) => {
            let mut w = create(path)?;
            data::write_yinyang_csv(&mut w, &points)?;
            w.flush()?;
        }
        None => data::write_yinyang_csv(std::io::stdout().lock(), &points)?,
    }
    if let Some(path) = encoded {
        let cfg = match config {
            Some(c) => TrainConfig::from_file(c)?,
            None => TrainConfig::yinyang(),
        };
        let enc = data::YinYangEncoding {
            t_early: cfg.t_early,
            t_late: cfg.t_max,
            t_bias: cfg.t_bias.ok_or_else(|| SnnError::invalid("config has no t_bias"))?,
        };
        let samples = data::encode_yinyang_points(&points, radius, &enc)?;
        let mut w = create(path)?;
        data::write_encoded_csv(&mut w, &samples)?;
        w.flush()?;
    }
    Ok(0)
}
