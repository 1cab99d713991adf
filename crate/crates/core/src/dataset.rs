//! Labeled binary-classification corpora: synthetic 2-D patterns, CSV
//! persistence and deterministic splitting.
//!
//! Generated datasets are always balanced (`M / 2` samples per class) and
//! emitted class-grouped: the `+1` block first, then the `-1` block. The
//! tensor-product weight model reads the most significant index bit as the
//! class bit, so the ordering is part of the data contract, and
//! [`Dataset::class_grouped`] restores it for externally loaded data.

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Binary class label, serialized as `1` / `-1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    Pos,
    Neg,
}

impl Label {
    pub fn value(self) -> f64 {
        match self {
            Label::Pos => 1.0,
            Label::Neg => -1.0,
        }
    }

    pub fn from_value(v: f64) -> Option<Label> {
        if v == 1.0 {
            Some(Label::Pos)
        } else if v == -1.0 {
            Some(Label::Neg)
        } else {
            None
        }
    }

    /// Sign classification with the tie `sign(0) = +1`.
    pub fn from_score(score: f64) -> Label {
        if score >= 0.0 {
            Label::Pos
        } else {
            Label::Neg
        }
    }

    pub fn flipped(self) -> Label {
        match self {
            Label::Pos => Label::Neg,
            Label::Neg => Label::Pos,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Pos => f.write_str("1"),
            Label::Neg => f.write_str("-1"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub x: Vec<f64>,
    pub label: Label,
}

impl Sample {
    pub fn new(x: Vec<f64>, label: Label) -> Self {
        Self { x, label }
    }

    pub fn r(&self) -> f64 {
        self.label.value()
    }
}

/// An ordered collection of samples sharing one dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    samples: Vec<Sample>,
    /// Seed used by the generator, if the data was generated.
    pub seed: Option<u64>,
    /// Sample count asked for before rounding up to a power of two.
    pub requested: Option<usize>,
}

impl Dataset {
    pub fn new(samples: Vec<Sample>) -> Result<Self> {
        let first = samples
            .first()
            .ok_or_else(|| Error::InvalidArgument("dataset has no samples".into()))?;
        let n = first.x.len();
        if n == 0 {
            return Err(Error::InvalidArgument("samples must have at least one coordinate".into()));
        }
        for s in &samples {
            if s.x.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: s.x.len() });
            }
            if s.x.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument("non-finite coordinate".into()));
            }
        }
        Ok(Self { samples, seed: None, requested: None })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.samples[0].x.len()
    }

    pub fn labels(&self) -> Vec<f64> {
        self.samples.iter().map(Sample::r).collect()
    }

    pub fn points(&self) -> Vec<&[f64]> {
        self.samples.iter().map(|s| s.x.as_slice()).collect()
    }

    pub fn count(&self, label: Label) -> usize {
        self.samples.iter().filter(|s| s.label == label).count()
    }

    /// `m` such that `len() == 2^m`, or an error when the length is not a
    /// power of two or is 1 (the tensor model needs at least one angle).
    pub fn log2_len(&self) -> Result<usize> {
        let len = self.len();
        if !len.is_power_of_two() || len < 2 {
            return Err(Error::InvalidArgument(format!(
                "tensor-weight models need a power-of-two sample count >= 2, got {len}"
            )));
        }
        Ok(len.trailing_zeros() as usize)
    }

    /// Stable reorder: every `+1` sample, then every `-1` sample.
    pub fn class_grouped(&self) -> Dataset {
        let (pos, neg): (Vec<Sample>, Vec<Sample>) =
            self.samples.iter().cloned().partition(|s| s.label == Label::Pos);
        let mut samples = pos;
        samples.extend(neg);
        Dataset { samples, seed: self.seed, requested: self.requested }
    }

    /// Same points with every label flipped.
    pub fn flipped(&self) -> Dataset {
        let samples = self
            .samples
            .iter()
            .map(|s| Sample::new(s.x.clone(), s.label.flipped()))
            .collect();
        Dataset { samples, seed: self.seed, requested: self.requested }
    }

    pub fn with_labels(&self, labels: &[Label]) -> Result<Dataset> {
        if labels.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), got: labels.len() });
        }
        let samples = self
            .samples
            .iter()
            .zip(labels)
            .map(|(s, &l)| Sample::new(s.x.clone(), l))
            .collect();
        Ok(Dataset { samples, seed: self.seed, requested: self.requested })
    }

    /// Translate every point by `shift`.
    pub fn translated(&self, shift: &[f64]) -> Result<Dataset> {
        if shift.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: shift.len() });
        }
        let samples = self
            .samples
            .iter()
            .map(|s| Sample::new(s.x.iter().zip(shift).map(|(a, b)| a + b).collect(), s.label))
            .collect();
        Ok(Dataset { samples, seed: self.seed, requested: self.requested })
    }

    /// Uniformly scale every point by `factor`.
    pub fn scaled(&self, factor: f64) -> Dataset {
        let samples = self
            .samples
            .iter()
            .map(|s| Sample::new(s.x.iter().map(|v| v * factor).collect(), s.label))
            .collect();
        Dataset { samples, seed: self.seed, requested: self.requested }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PatternFamily {
    /// Two disks at mirrored centers `±(0.5, 0.5)`.
    Blobs,
    /// Inner disk (`+1`) inside a ring (`-1`).
    Annulus,
    /// Label is the sign of `x1 * x2`.
    XorQuadrants,
    /// 4x4 checkerboard on `[-1, 1]^2`.
    Checkerboard,
}

impl PatternFamily {
    pub const ALL: [PatternFamily; 4] = [
        PatternFamily::Blobs,
        PatternFamily::Annulus,
        PatternFamily::XorQuadrants,
        PatternFamily::Checkerboard,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PatternFamily::Blobs => "blobs",
            PatternFamily::Annulus => "annulus",
            PatternFamily::XorQuadrants => "xor-quadrants",
            PatternFamily::Checkerboard => "checkerboard",
        }
    }
}

impl fmt::Display for PatternFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PatternFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "blobs" => Ok(PatternFamily::Blobs),
            "annulus" => Ok(PatternFamily::Annulus),
            "xor" | "xor-quadrants" | "xor_quadrants" => Ok(PatternFamily::XorQuadrants),
            "checkerboard" => Ok(PatternFamily::Checkerboard),
            other => Err(Error::InvalidArgument(format!("unknown pattern family `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PatternSpec {
    pub family: PatternFamily,
    /// Requested sample count; rounded up to the next power of two.
    pub samples: usize,
    /// Standard deviation of the positional jitter.
    pub noise: f64,
    pub seed: u64,
}

impl PatternSpec {
    pub fn new(family: PatternFamily, samples: usize, noise: f64, seed: u64) -> Self {
        Self { family, samples, noise, seed }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }
}

const BLOB_CENTER: [f64; 2] = [0.5, 0.5];
const BLOB_RADIUS: f64 = 0.35;
const ANNULUS_SPLIT: f64 = 0.5;
const ANNULUS_OUTER: f64 = 0.95;
const ANNULUS_MIN_GAP: f64 = 0.2;
const XOR_MARGIN: f64 = 0.05;
const BOARD_CELLS: usize = 4;

/// Radial bands `(inner_max, outer_min)` of the annulus pattern. The gap
/// between them is at least `max(noise, 0.2)`.
pub fn annulus_bands(noise: f64) -> (f64, f64) {
    let gap = noise.max(ANNULUS_MIN_GAP);
    (ANNULUS_SPLIT - gap / 2.0, ANNULUS_SPLIT + gap / 2.0)
}

/// Generate a balanced, class-grouped 2-D dataset.
pub fn generate(spec: &PatternSpec) -> Result<Dataset> {
    if spec.samples < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 samples, got {}", spec.samples)));
    }
    if !spec.noise.is_finite() || spec.noise < 0.0 {
        return Err(Error::InvalidArgument(format!("noise must be finite and >= 0, got {}", spec.noise)));
    }
    if spec.family == PatternFamily::Annulus && annulus_bands(spec.noise).0 <= 0.05 {
        return Err(Error::InvalidArgument(format!("annulus noise {} leaves no inner disk", spec.noise)));
    }
    let total = spec.samples.next_power_of_two();
    let half = total / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let jitter = Normal::new(0.0, spec.noise.max(f64::MIN_POSITIVE)).expect("finite std");

    let mut pos = Vec::with_capacity(half);
    let mut neg = Vec::with_capacity(half);
    match spec.family {
        PatternFamily::Blobs => {
            for _ in 0..half {
                let [dx, dy] = uniform_disk(&mut rng, BLOB_RADIUS);
                let p = [BLOB_CENTER[0] + dx, BLOB_CENTER[1] + dy];
                pos.push(p);
                neg.push([-p[0], -p[1]]);
            }
            for p in pos.iter_mut().chain(neg.iter_mut()) {
                *p = jittered(*p, spec.noise, &jitter, &mut rng);
            }
        }
        PatternFamily::Annulus => {
            let (inner_max, outer_min) = annulus_bands(spec.noise);
            for _ in 0..half {
                let r = inner_max * rng.random::<f64>().sqrt();
                let r = radial_jitter(r, 0.0, inner_max, spec.noise, &jitter, &mut rng);
                pos.push(polar(r, rng.random::<f64>() * std::f64::consts::TAU));
            }
            for _ in 0..half {
                let lo = outer_min * outer_min;
                let hi = ANNULUS_OUTER * ANNULUS_OUTER;
                let r = (lo + (hi - lo) * rng.random::<f64>()).sqrt();
                let r = radial_jitter(r, outer_min, ANNULUS_OUTER, spec.noise, &jitter, &mut rng);
                neg.push(polar(r, rng.random::<f64>() * std::f64::consts::TAU));
            }
        }
        PatternFamily::XorQuadrants => {
            let coord = |rng: &mut ChaCha8Rng, sign: f64| {
                sign * (XOR_MARGIN + (1.0 - XOR_MARGIN) * rng.random::<f64>())
            };
            for _ in 0..half {
                let s = if rng.random::<bool>() { 1.0 } else { -1.0 };
                let p = [coord(&mut rng, s), coord(&mut rng, s)];
                pos.push(jittered(p, spec.noise, &jitter, &mut rng));
            }
            for _ in 0..half {
                let s = if rng.random::<bool>() { 1.0 } else { -1.0 };
                let p = [coord(&mut rng, s), coord(&mut rng, -s)];
                neg.push(jittered(p, spec.noise, &jitter, &mut rng));
            }
        }
        PatternFamily::Checkerboard => {
            let width = 2.0 / BOARD_CELLS as f64;
            let cell_point = |rng: &mut ChaCha8Rng, parity: usize| {
                let (i, j) = loop {
                    let i = rng.random_range(0..BOARD_CELLS);
                    let j = rng.random_range(0..BOARD_CELLS);
                    if (i + j) % 2 == parity {
                        break (i, j);
                    }
                };
                let p = [
                    -1.0 + width * (i as f64 + rng.random::<f64>()),
                    -1.0 + width * (j as f64 + rng.random::<f64>()),
                ];
                jittered(p, spec.noise, &jitter, rng)
            };
            for _ in 0..half {
                pos.push(cell_point(&mut rng, 0));
            }
            for _ in 0..half {
                neg.push(cell_point(&mut rng, 1));
            }
        }
    }

    let samples = pos
        .into_iter()
        .map(|p| Sample::new(p.to_vec(), Label::Pos))
        .chain(neg.into_iter().map(|p| Sample::new(p.to_vec(), Label::Neg)))
        .collect();
    let mut ds = Dataset::new(samples)?;
    ds.seed = Some(spec.seed);
    ds.requested = Some(spec.samples);
    Ok(ds)
}

fn uniform_disk(rng: &mut ChaCha8Rng, radius: f64) -> [f64; 2] {
    let r = radius * rng.random::<f64>().sqrt();
    polar(r, rng.random::<f64>() * std::f64::consts::TAU)
}

fn polar(r: f64, phi: f64) -> [f64; 2] {
    [r * phi.cos(), r * phi.sin()]
}

fn jittered(p: [f64; 2], noise: f64, jitter: &Normal<f64>, rng: &mut ChaCha8Rng) -> [f64; 2] {
    if noise == 0.0 {
        return p;
    }
    [
        (p[0] + jitter.sample(rng)).clamp(-1.0, 1.0),
        (p[1] + jitter.sample(rng)).clamp(-1.0, 1.0),
    ]
}

fn radial_jitter(r: f64, lo: f64, hi: f64, noise: f64, jitter: &Normal<f64>, rng: &mut ChaCha8Rng) -> f64 {
    if noise == 0.0 {
        return r;
    }
    (r + jitter.sample(rng)).clamp(lo, hi)
}

/// Split into `(train, test)`. The training part gets
/// `clamp(floor(ratio * M), 1, M - 1)` samples chosen by a seeded shuffle;
/// both parts keep the original relative order.
pub fn split(ds: &Dataset, ratio: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidArgument(format!("split ratio must lie in (0, 1), got {ratio}")));
    }
    let m = ds.len();
    if m < 2 {
        return Err(Error::InvalidArgument("cannot split fewer than 2 samples".into()));
    }
    let n_train = ((ratio * m as f64).floor() as usize).clamp(1, m - 1);
    let mut idx: Vec<usize> = (0..m).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Fisher-Yates, so the permutation is fixed by the seed alone.
    for i in (1..m).rev() {
        let j = rng.random_range(0..=i);
        idx.swap(i, j);
    }
    let mut in_train = vec![false; m];
    for &i in &idx[..n_train] {
        in_train[i] = true;
    }
    let (train, test): (Vec<_>, Vec<_>) = ds
        .samples
        .iter()
        .cloned()
        .zip(in_train)
        .partition(|(_, t)| *t);
    let strip = |v: Vec<(Sample, bool)>| -> Dataset {
        Dataset { samples: v.into_iter().map(|(s, _)| s).collect(), seed: ds.seed, requested: None }
    };
    Ok((strip(train), strip(test)))
}

/// Header-less CSV, one row per sample: coordinates then the label.
pub fn save_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    for s in &ds.samples {
        for v in &s.x {
            write!(out, "{v:.16e},")?;
        }
        writeln!(out, "{}", s.label)?;
    }
    out.flush()?;
    Ok(())
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_csv(&text, path)
}

pub(crate) fn parse_csv(text: &str, path: &Path) -> Result<Dataset> {
    let err = |line: usize, msg: String| Error::Parse { path: path.to_path_buf(), line, msg };
    let mut samples = Vec::new();
    let mut dim = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() < 2 {
            return Err(err(line_no, "expected at least one coordinate and a label".into()));
        }
        let (coords, label) = fields.split_at(fields.len() - 1);
        let x = coords
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| err(line_no, format!("invalid coordinate `{f}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        let label = label[0]
            .parse::<f64>()
            .ok()
            .and_then(Label::from_value)
            .ok_or_else(|| err(line_no, format!("label must be 1 or -1, got `{}`", label[0])))?;
        match dim {
            None => dim = Some(x.len()),
            Some(d) if d != x.len() => {
                return Err(err(line_no, format!("expected {d} coordinates, got {}", x.len())))
            }
            _ => {}
        }
        samples.push(Sample::new(x, label));
    }
    if samples.is_empty() {
        return Err(Error::NoSamples { path: path.to_path_buf() });
    }
    Dataset::new(samples)
}
