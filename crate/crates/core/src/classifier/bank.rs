use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mlp::{train_binary, Mlp, TrainSettings};
use crate::error::{Error, Result};

const JSON_VERSION: u32 = 1;

/// One-vs-all scorers over standardized parameters. Labels are zero-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierBank {
    pub version: u32,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    pub classifiers: Vec<Mlp>,
}

impl ClassifierBank {
    pub fn new(mean: Vec<f64>, scale: Vec<f64>, classifiers: Vec<Mlp>) -> Result<Self> {
        if classifiers.is_empty() {
            return Err(Error::InvalidArgument("bank without classifiers".into()));
        }
        let p = mean.len();
        if scale.len() != p || classifiers.iter().any(|c| c.input_dim() != p) {
            return Err(Error::DimensionMismatch("classifier input dimensions disagree".into()));
        }
        if scale.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::InvalidArgument("normalization scales must be positive".into()));
        }
        Ok(Self {
            version: JSON_VERSION,
            mean,
            scale,
            classifiers,
        })
    }

    pub fn k(&self) -> usize {
        self.classifiers.len()
    }

    pub fn p(&self) -> usize {
        self.mean.len()
    }

    pub fn standardize(&self, theta: &[f64]) -> Vec<f64> {
        theta.iter().zip(&self.mean).zip(&self.scale).map(|((x, m), s)| (x - m) / s).collect()
    }

    pub fn scores(&self, theta: &[f64]) -> Result<Vec<f64>> {
        if theta.len() != self.p() {
            return Err(Error::DimensionMismatch(format!("parameter of length {} for a bank over {}", theta.len(), self.p())));
        }
        let x = self.standardize(theta);
        Ok(self.classifiers.iter().map(|c| c.forward(&x)).collect())
    }

    /// Index of the largest score, lowest index on ties.
    pub fn predict(&self, theta: &[f64]) -> Result<usize> {
        if self.k() == 1 {
            return Ok(0);
        }
        Ok(argmax(&self.scores(theta)?))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("bank serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let bank: Self = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if bank.version != JSON_VERSION {
            return Err(Error::Parse(format!("unsupported classifier bank version {}", bank.version)));
        }
        let classifiers = bank
            .classifiers
            .into_iter()
            .map(|c| Mlp::new(c.layer_sizes, c.params))
            .collect::<Result<_>>()?;
        Self::new(bank.mean, bank.scale, classifiers)
    }
}

pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (j, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = j;
        }
    }
    best
}

/// Trains one binary classifier per label on standardized inputs, in
/// parallel. Classifier `j` is seeded with `seed + j`. Returns the bank and
/// the loss checkpoints of every classifier.
pub fn train_bank(
    thetas: &[Vec<f64>],
    labels: &[usize],
    k: usize,
    hidden_sizes: &[usize],
    settings: &TrainSettings,
    seed: u64,
) -> Result<(ClassifierBank, Vec<Vec<f64>>)> {
    if thetas.is_empty() || thetas.len() != labels.len() {
        return Err(Error::DimensionMismatch(format!("{} parameters with {} labels", thetas.len(), labels.len())));
    }
    let p = thetas[0].len();
    if thetas.iter().any(|t| t.len() != p) {
        return Err(Error::DimensionMismatch("parameters of different lengths".into()));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
        return Err(Error::InvalidArgument(format!("label {bad} with K = {k}")));
    }
    for j in 0..k {
        if !labels.contains(&j) {
            return Err(Error::EmptyClass(j));
        }
    }
    let count = thetas.len() as f64;
    let mean: Vec<f64> = (0..p).map(|i| thetas.iter().map(|t| t[i]).sum::<f64>() / count).collect();
    let scale: Vec<f64> = (0..p)
        .map(|i| {
            let var = thetas.iter().map(|t| (t[i] - mean[i]).powi(2)).sum::<f64>() / count;
            if var > 0.0 { var.sqrt() } else { 1.0 }
        })
        .collect();
    let xs: Vec<Vec<f64>> = thetas
        .iter()
        .map(|t| t.iter().zip(&mean).zip(&scale).map(|((x, m), s)| (x - m) / s).collect())
        .collect();
    let mut sizes = vec![p];
    sizes.extend_from_slice(hidden_sizes);
    sizes.push(1);

    let trained: Vec<(Mlp, Vec<f64>)> = (0..k)
        .into_par_iter()
        .map(|j| {
            let ys: Vec<f64> = labels.iter().map(|&l| if l == j { 1.0 } else { 0.0 }).collect();
            let mut net = Mlp::glorot(sizes.clone(), seed.wrapping_add(j as u64))?;
            let history = train_binary(&mut net, &xs, &ys, settings)?;
            Ok((net, history))
        })
        .collect::<Result<_>>()?;
    let (nets, histories): (Vec<_>, Vec<_>) = trained.into_iter().unzip();
    Ok((ClassifierBank::new(mean, scale, nets)?, histories))
}

/// Axis-aligned 2-D grid through `fixed`, varying coordinates `axis_i` (rows)
/// and `axis_j` (columns) over the given ranges.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionGrid {
    pub axis_i: usize,
    pub axis_j: usize,
    pub range_i: (f64, f64),
    pub range_j: (f64, f64),
    pub resolution: (usize, usize),
}

fn grid_point(range: (f64, f64), n: usize, k: usize) -> f64 {
    if n <= 1 {
        range.0
    } else {
        range.0 + (range.1 - range.0) * k as f64 / (n - 1) as f64
    }
}

impl SectionGrid {
    pub fn coords(&self) -> (Vec<f64>, Vec<f64>) {
        (
            (0..self.resolution.0).map(|k| grid_point(self.range_i, self.resolution.0, k)).collect(),
            (0..self.resolution.1).map(|k| grid_point(self.range_j, self.resolution.1, k)).collect(),
        )
    }
}

/// Predicted labels over a 2-D slice of parameter space.
pub fn partition_section(bank: &ClassifierBank, fixed: &[f64], grid: &SectionGrid) -> Result<Vec<Vec<usize>>> {
    if fixed.len() != bank.p() || grid.axis_i >= bank.p() || grid.axis_j >= bank.p() || grid.axis_i == grid.axis_j {
        return Err(Error::InvalidArgument("section axes must be two distinct parameter coordinates".into()));
    }
    if grid.resolution.0 == 0 || grid.resolution.1 == 0 {
        return Err(Error::InvalidArgument("empty section grid".into()));
    }
    let (xi, xj) = grid.coords();
    xi.iter()
        .map(|&a| {
            xj.iter()
                .map(|&b| {
                    let mut theta = fixed.to_vec();
                    theta[grid.axis_i] = a;
                    theta[grid.axis_j] = b;
                    bank.predict(&theta)
                })
                .collect()
        })
        .collect()
}
