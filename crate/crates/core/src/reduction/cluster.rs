use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::samples::{affine_fit, reassign_distance, SampleSet};
use crate::error::{Error, Result};
use crate::linalg::{vec_ops, Matrix};
use crate::pcls::Basis;

pub const DEFAULT_ITERATION_CAP: usize = 1000;
const JSON_VERSION: u32 = 1;

/// Partition of a sample set with one affine basis per cluster. Labels are
/// zero-based.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    pub k: usize,
    pub m_per_cluster: Vec<usize>,
    pub assignments: Vec<usize>,
    pub bases: Vec<Basis>,
    pub costs_trace: Vec<f64>,
    pub iterations: usize,
}

impl ClusterModel {
    pub fn members(&self, j: usize) -> Vec<usize> {
        (0..self.assignments.len()).filter(|&i| self.assignments[i] == j).collect()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &j in &self.assignments {
            sizes[j] += 1;
        }
        sizes
    }

    pub fn to_json(&self) -> String {
        let doc = ModelJson {
            version: JSON_VERSION,
            k: self.k,
            m_per_cluster: self.m_per_cluster.clone(),
            assignments: self.assignments.clone(),
            phi0: self.bases.iter().map(|b| b.phi0.clone()).collect(),
            phi: self.bases.iter().map(|b| b.phi.as_slice().to_vec()).collect(),
            costs_trace: self.costs_trace.clone(),
            iterations: self.iterations,
        };
        serde_json::to_string_pretty(&doc).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelJson = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if doc.version != JSON_VERSION {
            return Err(Error::Parse(format!("unsupported cluster model version {}", doc.version)));
        }
        if doc.phi0.len() != doc.k || doc.phi.len() != doc.k || doc.m_per_cluster.len() != doc.k {
            return Err(Error::Parse("cluster model arrays disagree with K".into()));
        }
        if doc.assignments.iter().any(|&j| j >= doc.k) {
            return Err(Error::Parse("assignment label out of range".into()));
        }
        let bases = (0..doc.k)
            .map(|j| {
                let n = doc.phi0[j].len();
                let phi = Matrix::from_col_major(n, doc.m_per_cluster[j], doc.phi[j].clone())?;
                Basis::new(doc.phi0[j].clone(), phi)
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            k: doc.k,
            m_per_cluster: doc.m_per_cluster,
            assignments: doc.assignments,
            bases,
            costs_trace: doc.costs_trace,
            iterations: doc.iterations,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct ModelJson {
    version: u32,
    #[serde(rename = "K")]
    k: usize,
    m_per_cluster: Vec<usize>,
    assignments: Vec<usize>,
    phi0: Vec<Vec<f64>>,
    #[serde(rename = "Phi")]
    phi: Vec<Vec<f64>>,
    #[serde(default)]
    costs_trace: Vec<f64>,
    #[serde(default)]
    iterations: usize,
}

fn check_partition(labels: &[usize], k: usize, m: usize) -> Result<()> {
    if labels.len() != m {
        return Err(Error::DimensionMismatch(format!("{} labels for {m} samples", labels.len())));
    }
    if let Some(&bad) = labels.iter().find(|&&j| j >= k) {
        return Err(Error::InvalidArgument(format!("label {bad} with K = {k}")));
    }
    Ok(())
}

fn cluster_points<'a>(samples: &'a SampleSet, labels: &[usize], j: usize) -> Vec<&'a [f64]> {
    samples
        .s_stars
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l == j)
        .map(|(s, _)| s.as_slice())
        .collect()
}

/// Moves the worst-represented sample (from a cluster with at least two
/// members) into each empty cluster.
fn repair_empty(labels: &mut [usize], k: usize, residual: impl Fn(usize, usize) -> f64) {
    loop {
        let mut sizes = vec![0usize; k];
        for &j in labels.iter() {
            sizes[j] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else { return };
        let mut worst: Option<(usize, f64)> = None;
        for i in 0..labels.len() {
            if sizes[labels[i]] < 2 {
                continue;
            }
            let r = residual(i, labels[i]);
            if worst.is_none_or(|(_, w)| r > w) {
                worst = Some((i, r));
            }
        }
        match worst {
            Some((i, _)) => labels[i] = empty,
            None => return,
        }
    }
}

/// Random partition where a seeded shuffle is dealt round-robin, so every
/// cluster is nonempty when `M ≥ K`.
pub fn random_partition(m: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..m).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut labels = vec![0; m];
    for (pos, &i) in perm.iter().enumerate() {
        labels[i] = pos % k;
    }
    labels
}

/// K-means on optimizer vectors followed by an `m`-dimensional SVD basis per
/// cluster.
pub fn kmeans(samples: &SampleSet, k: usize, m: usize, seed: u64) -> Result<ClusterModel> {
    kmeans_with_cap(samples, k, m, seed, DEFAULT_ITERATION_CAP)
}

pub fn kmeans_with_cap(samples: &SampleSet, k: usize, m: usize, seed: u64, cap: usize) -> Result<ClusterModel> {
    let count = samples.len();
    if k == 0 || count < k {
        return Err(Error::InvalidArgument(format!("K = {k} clusters for {count} samples")));
    }
    if m > samples.n() {
        return Err(Error::InvalidArgument(format!("{m} basis vectors in dimension {}", samples.n())));
    }
    let n = samples.n();
    let mut labels = random_partition(count, k, seed);
    let mut trace = Vec::new();
    let mut iterations = 0;
    loop {
        if iterations == cap {
            return Err(Error::IterationCap(cap));
        }
        iterations += 1;
        let mut means = vec![vec![0.0; n]; k];
        let mut sizes = vec![0usize; k];
        for (s, &j) in samples.s_stars.iter().zip(&labels) {
            vec_ops::axpy(1.0, s, &mut means[j]);
            sizes[j] += 1;
        }
        for j in 0..k {
            means[j] = vec_ops::scale(1.0 / sizes[j] as f64, &means[j]);
        }
        let dist = |i: usize, j: usize| vec_ops::norm2_sq(&vec_ops::sub(&samples.s_stars[i], &means[j]));
        trace.push((0..count).map(|i| dist(i, labels[i])).sum());

        let mut next: Vec<usize> = (0..count)
            .map(|i| {
                let mut best = 0;
                let mut best_d = dist(i, 0);
                for j in 1..k {
                    let d = dist(i, j);
                    if d < best_d {
                        best = j;
                        best_d = d;
                    }
                }
                best
            })
            .collect();
        repair_empty(&mut next, k, dist);
        if next == labels {
            break;
        }
        labels = next;
    }
    let bases = (0..k)
        .map(|j| affine_fit(&cluster_points(samples, &labels, j), m).map(|(b, _)| b))
        .collect::<Result<_>>()?;
    Ok(ClusterModel {
        k,
        m_per_cluster: vec![m; k],
        assignments: labels,
        bases,
        costs_trace: trace,
        iterations,
    })
}

/// K-SVD clustering from the partition `init`.
pub fn ksvd(samples: &SampleSet, m_per_cluster: &[usize], init: &[usize]) -> Result<ClusterModel> {
    ksvd_with_cap(samples, m_per_cluster, init, DEFAULT_ITERATION_CAP)
}

/// K-SVD initialized by a converged K-means run.
pub fn ksvd_from_kmeans(samples: &SampleSet, k: usize, m: usize, seed: u64) -> Result<ClusterModel> {
    let init = kmeans(samples, k, m, seed)?;
    ksvd(samples, &vec![m; k], &init.assignments)
}

pub fn ksvd_with_cap(samples: &SampleSet, m_per_cluster: &[usize], init: &[usize], cap: usize) -> Result<ClusterModel> {
    let k = m_per_cluster.len();
    let count = samples.len();
    if k == 0 {
        return Err(Error::InvalidArgument("K-SVD needs at least one cluster".into()));
    }
    check_partition(init, k, count)?;
    if let Some(&m) = m_per_cluster.iter().find(|&&m| m > samples.n()) {
        return Err(Error::InvalidArgument(format!("{m} basis vectors in dimension {}", samples.n())));
    }
    let mut labels = init.to_vec();
    repair_empty(&mut labels, k, |i, _| vec_ops::norm2_sq(&samples.s_stars[i]));
    let mut trace = Vec::new();
    let mut iterations = 0;
    loop {
        if iterations == cap {
            return Err(Error::IterationCap(cap));
        }
        iterations += 1;
        let mut bases = Vec::with_capacity(k);
        let mut cost = 0.0;
        for (j, &m) in m_per_cluster.iter().enumerate() {
            let pts = cluster_points(samples, &labels, j);
            if pts.is_empty() {
                // only reachable when M < K
                bases.push(Basis {
                    phi0: vec![0.0; samples.n()],
                    phi: Matrix::zeros(samples.n(), m),
                    orthonormal: false,
                });
                continue;
            }
            let (b, trailing) = affine_fit(&pts, m)?;
            cost += trailing;
            bases.push(b);
        }
        trace.push(cost);

        let dist: Vec<Vec<f64>> = samples
            .s_stars
            .iter()
            .map(|s| bases.iter().map(|b| reassign_distance(s, b).unwrap_or(f64::INFINITY)).collect())
            .collect();
        let mut next = labels.clone();
        for i in 0..count {
            let cur = labels[i];
            let tol = 1e-12 * (1.0 + vec_ops::norm2_sq(&samples.s_stars[i]));
            let mut best = cur;
            let mut best_d = dist[i][cur] - tol;
            for j in 0..k {
                if dist[i][j] < best_d {
                    best = j;
                    best_d = dist[i][j];
                }
            }
            next[i] = best;
        }
        repair_empty(&mut next, k, |i, j| dist[i][j]);
        if next == labels {
            return Ok(ClusterModel {
                k,
                m_per_cluster: m_per_cluster.to_vec(),
                assignments: labels,
                bases,
                costs_trace: trace,
                iterations,
            });
        }
        labels = next;
    }
}

/// Sum of squared distances from each sample to the affine subspace of its cluster.
pub fn ksvd_cost(model: &ClusterModel, samples: &SampleSet) -> Result<f64> {
    check_partition(&model.assignments, model.k, samples.len())?;
    samples
        .s_stars
        .iter()
        .zip(&model.assignments)
        .map(|(s, &j)| reassign_distance(s, &model.bases[j]))
        .sum()
}

/// The same objective recomputed from the discarded singular values of each
/// refitted cluster.
pub fn trailing_singular_cost(assignments: &[usize], m_per_cluster: &[usize], samples: &SampleSet) -> Result<f64> {
    let k = m_per_cluster.len();
    check_partition(assignments, k, samples.len())?;
    let mut total = 0.0;
    for (j, &m) in m_per_cluster.iter().enumerate() {
        let pts = cluster_points(samples, assignments, j);
        if !pts.is_empty() {
            total += affine_fit(&pts, m)?.1;
        }
    }
    Ok(total)
}
