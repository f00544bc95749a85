#![allow(dead_code)]

use pcls::linalg::{lstsq, vec_ops};
use pcls::pcls::ReducedPcls;
use pcls::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn normal(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
    Matrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

pub fn tiny_instance(seed: u64) -> ReducedPcls {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=6);
    let n_i = rng.random_range(1..=8);
    let a = normal(&mut rng, n + 2, n);
    let b: Vec<f64> = (0..n + 2).map(|_| 3.0 * rng.sample::<f64, _>(StandardNormal)).collect();
    let g_mat = normal(&mut rng, n_i, n);
    let s0: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let slack: Vec<f64> = (0..n_i).map(|_| rng.random_range(0.0..1.0)).collect();
    let g = vec_ops::add(&g_mat.matvec(&s0).unwrap(), &slack);
    ReducedPcls::new(a, b, g_mat, g).unwrap()
}

/// Best feasible stationary point over every choice of active rows.
pub fn active_set_oracle(r: &ReducedPcls) -> Vec<f64> {
    let (n, n_i) = (r.n(), r.g_mat.rows());
    let h = r.a.tr_matmul(&r.a).unwrap();
    let atb = r.a.tr_matvec(&r.b).unwrap();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1 << n_i) {
        let active: Vec<usize> = (0..n_i).filter(|&i| mask & (1 << i) != 0).collect();
        if active.len() > n {
            continue;
        }
        let k = active.len();
        let mut kkt = Matrix::zeros(n + k, n + k);
        kkt.set_block(0, 0, &h);
        let mut rhs = atb.clone();
        for (j, &i) in active.iter().enumerate() {
            for c in 0..n {
                kkt[(n + j, c)] = r.g_mat[(i, c)];
                kkt[(c, n + j)] = r.g_mat[(i, c)];
            }
            rhs.push(r.g[i]);
        }
        let Ok(sol) = lstsq(&kkt, &rhs) else { continue };
        let resid = vec_ops::sub(&kkt.matvec(&sol).unwrap(), &rhs);
        if vec_ops::norm2(&resid) > 1e-9 * vec_ops::norm2(&rhs).max(1.0) {
            continue;
        }
        let s = sol[..n].to_vec();
        if r.max_violation(&s).unwrap() > 1e-10 {
            continue;
        }
        let f = r.objective(&s).unwrap();
        if best.as_ref().is_none_or(|(bf, _)| f < *bf) {
            best = Some((f, s));
        }
    }
    best.expect("feasible by construction").1
}

pub fn rel_err(x: &[f64], y: &[f64]) -> f64 {
    vec_ops::norm2(&vec_ops::sub(x, y)) / vec_ops::norm2(y).max(1e-12)
}
