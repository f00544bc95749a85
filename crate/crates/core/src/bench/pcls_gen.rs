use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{vec_ops, Matrix};
use crate::pcls::{PClsInstance, ReducedPcls};
use crate::reduction::SampleSet;
use crate::solve::{solve_lsi, LsiSolution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RandomPclsSpec {
    pub n: usize,
    pub p: usize,
    pub n_c: usize,
    pub seed: u64,
}

impl Default for RandomPclsSpec {
    fn default() -> Self {
        Self { n: 20, p: 4, n_c: 20, seed: 1 }
    }
}

/// `min ½‖A z − b − F θ‖²  s.t.  −1 ≤ z ≤ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PclsFamily {
    pub a: Matrix,
    pub b: Vec<f64>,
    pub f: Matrix,
    pub g_mat: Matrix,
    pub g: Vec<f64>,
}

pub(crate) fn normal_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn gen_pcls(spec: &RandomPclsSpec) -> Result<PclsFamily> {
    if spec.n == 0 || spec.n_c == 0 {
        return Err(Error::InvalidArgument("empty random problem".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let a = normal_matrix(&mut rng, spec.n_c, spec.n);
    let b = (0..spec.n_c).map(|_| rng.sample(StandardNormal)).collect();
    let f = normal_matrix(&mut rng, spec.n_c, spec.p);
    let g_mat = Matrix::vstack(&[&Matrix::identity(spec.n), &Matrix::<f64>::identity(spec.n).scale(-1.0)])?;
    Ok(PclsFamily { a, b, f, g_mat, g: vec![1.0; 2 * spec.n] })
}

impl PclsFamily {
    pub fn n(&self) -> usize {
        self.a.cols()
    }

    pub fn p(&self) -> usize {
        self.f.cols()
    }

    pub fn rhs(&self, theta: &[f64]) -> Result<Vec<f64>> {
        Ok(vec_ops::add(&self.b, &self.f.matvec(theta)?))
    }

    pub fn instance(&self, theta: &[f64]) -> Result<PClsInstance> {
        PClsInstance::without_equalities(self.a.clone(), self.rhs(theta)?, self.g_mat.clone(), self.g.clone())
    }

    pub fn reduced(&self, theta: &[f64]) -> Result<ReducedPcls> {
        ReducedPcls::new(self.a.clone(), self.rhs(theta)?, self.g_mat.clone(), self.g.clone())
    }

    pub fn solve(&self, theta: &[f64]) -> Result<LsiSolution> {
        solve_lsi(&self.reduced(theta)?)
    }

    /// Draws `θ ~ N(0, I)` until `count` samples have a multiplier of at
    /// least `eps_lambda`, giving up after `50·count` draws.
    pub fn sample(&self, count: usize, eps_lambda: f64, seed: u64) -> Result<SampleSet> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut thetas, mut stars, mut lams) = (Vec::new(), Vec::new(), Vec::new());
        let mut draws = 0;
        while thetas.len() < count {
            draws += 1;
            if draws > 50 * count.max(1) {
                return Err(Error::IterationCap(draws - 1));
            }
            let theta: Vec<f64> = (0..self.p()).map(|_| rng.sample(StandardNormal)).collect();
            let sol = self.solve(&theta)?;
            if sol.lambda_max() >= eps_lambda {
                lams.push(sol.lambda_max());
                stars.push(sol.s);
                thetas.push(theta);
            }
        }
        SampleSet::new(thetas, stars, lams)
    }
}
