//! Datasets and their spike-time encodings: XOR, Iris and Yin-Yang.
//!
//! Every task uses exactly one spike per input neuron; larger values spike
//! earlier for Iris, while Yin-Yang maps coordinates linearly onto
//! `[t_early, t_late]` and adds a bias input.

use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Result, SnnError};

#[derive(Debug, Clone, PartialEq)]
pub struct EncodedSample {
    /// Spike times per input neuron.
    pub spikes: Vec<Vec<f64>>,
    pub label: usize,
}

/// The four XOR patterns. A bit is encoded as an early (`t_early`) or late
/// (`t_late`) spike; with `bit0_early` a zero bit spikes early.
pub fn xor_dataset(t_early: f64, t_late: f64, bit0_early: bool) -> Vec<EncodedSample> {
    let time = |bit: u8| {
        if (bit == 0) == bit0_early {
            t_early
        } else {
            t_late
        }
    };
    [(0u8, 0u8), (0, 1), (1, 0), (1, 1)]
        .into_iter()
        .map(|(a, b)| EncodedSample {
            spikes: vec![vec![time(a)], vec![time(b)]],
            label: usize::from(a ^ b),
        })
        .collect()
}

/// Linear feature-to-time map `T·(1 - (n - min)/(max - min))`.
pub fn encode_iris(feature: f64, feat_min: f64, feat_max: f64, t_max: f64) -> Result<f64> {
    if !(feat_max > feat_min) {
        return Err(SnnError::invalid(format!(
            "feature range is degenerate ({feat_min} .. {feat_max})"
        )));
    }
    Ok(t_max * (1.0 - (feature - feat_min) / (feat_max - feat_min)))
}

/// The standard 150-sample Iris table, bundled with the crate.
pub const IRIS_CSV: &str = include_str!("../data/iris.csv");

#[derive(Debug, Clone, PartialEq)]
pub struct IrisData {
    pub features: Vec<[f64; 4]>,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
}

pub fn load_iris(path: impl AsRef<Path>) -> Result<IrisData> {
    parse_iris(std::fs::File::open(path)?)
}

/// Reads 5-column rows (4 numeric features, then a class name or integer).
/// A first row whose leading field is not numeric is taken as a header.
/// Class names are numbered in order of first appearance.
pub fn parse_iris<R: Read>(reader: R) -> Result<IrisData> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut data = IrisData {
        features: Vec::new(),
        labels: Vec::new(),
        class_names: Vec::new(),
    };
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = row + 1;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        if row == 0 && rec.get(0).is_some_and(|f| f.parse::<f64>().is_err()) {
            continue;
        }
        if rec.len() != 5 {
            return Err(SnnError::Parse {
                line,
                message: format!("expected 5 columns, found {}", rec.len()),
            });
        }
        let mut features = [0.0; 4];
        for (k, slot) in features.iter_mut().enumerate() {
            *slot = rec[k].parse().map_err(|_| SnnError::Parse {
                line,
                message: format!("column {} is not a number: {:?}", k + 1, &rec[k]),
            })?;
        }
        let class = &rec[4];
        let label = match data.class_names.iter().position(|c| c == class) {
            Some(i) => i,
            None => {
                data.class_names.push(class.to_string());
                data.class_names.len() - 1
            }
        };
        data.features.push(features);
        data.labels.push(label);
    }
    if data.features.is_empty() {
        return Err(SnnError::Parse {
            line: 0,
            message: "no data rows".into(),
        });
    }
    // integer class columns: order classes numerically rather than by appearance
    if data.class_names.iter().all(|c| c.parse::<i64>().is_ok()) {
        let mut order: Vec<usize> = (0..data.class_names.len()).collect();
        order.sort_by_key(|&i| data.class_names[i].parse::<i64>().unwrap());
        let mut remap = vec![0; order.len()];
        for (new, &old) in order.iter().enumerate() {
            remap[old] = new;
        }
        data.labels.iter_mut().for_each(|l| *l = remap[*l]);
        data.class_names = order.iter().map(|&i| data.class_names[i].clone()).collect();
    }
    Ok(data)
}

impl IrisData {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Per-feature `(min, max)` over the whole dataset.
    pub fn ranges(&self) -> [(f64, f64); 4] {
        let mut ranges = [(f64::INFINITY, f64::NEG_INFINITY); 4];
        for row in &self.features {
            for (r, &v) in ranges.iter_mut().zip(row) {
                r.0 = r.0.min(v);
                r.1 = r.1.max(v);
            }
        }
        ranges
    }

    pub fn encode(&self, t_max: f64) -> Result<Vec<EncodedSample>> {
        let ranges = self.ranges();
        self.features
            .iter()
            .zip(&self.labels)
            .map(|(row, &label)| {
                let spikes = row
                    .iter()
                    .zip(&ranges)
                    .map(|(&v, &(lo, hi))| encode_iris(v, lo, hi, t_max).map(|t| vec![t]))
                    .collect::<Result<_>>()?;
                Ok(EncodedSample { spikes, label })
            })
            .collect()
    }

    /// Deterministic stratified split: within each class a seeded shuffle
    /// sends `round(n_class·test_fraction)` samples to the test side.
    /// Returns sorted `(train, test)` index lists.
    pub fn stratified_split(&self, seed: u64, test_fraction: f64) -> (Vec<usize>, Vec<usize>) {
        stratified_split(&self.labels, self.n_classes(), seed, test_fraction)
    }
}

pub fn stratified_split(labels: &[usize], n_classes: usize, seed: u64, test_fraction: f64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in 0..n_classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        let n_test = (members.len() as f64 * test_fraction).round() as usize;
        test.extend_from_slice(&members[..n_test]);
        train.extend_from_slice(&members[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

pub const YIN: usize = 0;
pub const YANG: usize = 1;
pub const DOT: usize = 2;

/// Dot radius as a fraction of the outer radius.
pub const DOT_RADIUS_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YinYangPoint {
    pub x: f64,
    pub y: f64,
    pub class: usize,
}

/// Class of a point inside the symbol of outer radius `r` centred at `(r, r)`.
/// The two eyes sit at `(r/2, r)` and `(3r/2, r)`; eyes take precedence.
pub fn yinyang_class(x: f64, y: f64, r: f64) -> usize {
    let r_dot = DOT_RADIUS_FRACTION * r;
    let d_right = (x - 1.5 * r).hypot(y - r);
    let d_left = (x - 0.5 * r).hypot(y - r);
    if d_right < r_dot || d_left < r_dot {
        return DOT;
    }
    let yin = d_right <= r_dot || (d_left > r_dot && d_left <= 0.5 * r) || (y > r && d_right > 0.5 * r);
    if yin {
        YIN
    } else {
        YANG
    }
}

/// Rejection-samples `n` points uniformly from the disk of radius `r` at
/// `(r, r)`. Target classes cycle yin, yang, dot so counts stay within one
/// of `n/3`.
pub fn generate_yinyang(n: usize, r: f64, seed: u64) -> Result<Vec<YinYangPoint>> {
    if n == 0 || !(r > 0.0) {
        return Err(SnnError::invalid("need n > 0 and r > 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    for i in 0..n {
        let goal = i % 3;
        loop {
            let x = rng.random::<f64>() * 2.0 * r;
            let y = rng.random::<f64>() * 2.0 * r;
            if (x - r).hypot(y - r) > r {
                continue;
            }
            let class = yinyang_class(x, y, r);
            if class == goal {
                points.push(YinYangPoint { x, y, class });
                break;
            }
        }
    }
    Ok(points)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YinYangEncoding {
    pub t_early: f64,
    pub t_late: f64,
    pub t_bias: f64,
}

/// Five inputs: `(x, y, 1-x, 1-y)` mapped linearly onto `[t_early, t_late]`,
/// then the bias spike. Coordinates must already be normalized to `[0, 1]`.
pub fn encode_yinyang(x: f64, y: f64, label: usize, enc: &YinYangEncoding) -> Result<EncodedSample> {
    if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
        return Err(SnnError::invalid(format!("coordinates ({x}, {y}) outside [0, 1]")));
    }
    let map = |c: f64| enc.t_early + c * (enc.t_late - enc.t_early);
    Ok(EncodedSample {
        spikes: vec![
            vec![map(x)],
            vec![map(y)],
            vec![map(1.0 - x)],
            vec![map(1.0 - y)],
            vec![enc.t_bias],
        ],
        label,
    })
}

pub fn encode_yinyang_points(points: &[YinYangPoint], r: f64, enc: &YinYangEncoding) -> Result<Vec<EncodedSample>> {
    points
        .iter()
        .map(|p| encode_yinyang((p.x / (2.0 * r)).clamp(0.0, 1.0), (p.y / (2.0 * r)).clamp(0.0, 1.0), p.class, enc))
        .collect()
}

pub fn write_yinyang_csv<W: Write>(mut out: W, points: &[YinYangPoint]) -> std::io::Result<()> {
    writeln!(out, "x,y,class")?;
    for p in points {
        writeln!(out, "{},{},{}", p.x, p.y, p.class)?;
    }
    Ok(())
}

/// `sample_id,neuron_id,time,label`, one line per input spike.
pub fn write_encoded_csv<W: Write>(mut out: W, samples: &[EncodedSample]) -> std::io::Result<()> {
    writeln!(out, "sample_id,neuron_id,time,label")?;
    for (id, s) in samples.iter().enumerate() {
        for (neuron, times) in s.spikes.iter().enumerate() {
            for t in times {
                writeln!(out, "{id},{neuron},{t},{}", s.label)?;
            }
        }
    }
    Ok(())
}

/// SHA-256 of the encoded-sample CSV, as lowercase hex.
pub fn fingerprint(samples: &[EncodedSample]) -> String {
    let mut buf = Vec::new();
    write_encoded_csv(&mut buf, samples).expect("writing to a Vec cannot fail");
    Sha256::digest(&buf).iter().map(|b| format!("{b:02x}")).collect()
}
