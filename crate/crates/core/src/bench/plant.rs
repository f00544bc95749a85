use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Exothermic stirred-tank reactor with state `[T_r, C_A]` and coolant
/// temperature `T_c` as input:
///
/// ```text
/// dC_A/dt = a (C_Af − C_A) − k(T_r) C_A
/// dT_r/dt = a (T_f − T_r) + β k(T_r) C_A − γ (T_r − T_c)
/// k(T)    = k0 exp(−E/T)
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReactorParams {
    pub dilution: f64,
    pub k0: f64,
    pub activation: f64,
    pub heat: f64,
    pub cooling: f64,
    pub c_feed: f64,
    pub t_feed: f64,
    /// Sample time in hours.
    pub sample_time: f64,
    /// RK4 steps per sample when simulating the plant.
    pub substeps: usize,
}

impl Default for ReactorParams {
    fn default() -> Self {
        Self {
            dilution: 0.5,
            k0: 1e28,
            activation: 20000.0,
            heat: 4.0,
            cooling: 2.0,
            c_feed: 10.0,
            t_feed: 298.15,
            sample_time: 0.5,
            substeps: 20,
        }
    }
}

impl ReactorParams {
    pub fn rate(&self, t_r: f64) -> f64 {
        self.k0 * (-self.activation / t_r).exp()
    }

    /// Time derivative of `[T_r, C_A]`.
    pub fn rhs(&self, x: &[f64; 2], t_c: f64) -> [f64; 2] {
        let [t_r, c_a] = *x;
        let k = self.rate(t_r);
        [
            self.dilution * (self.t_feed - t_r) + self.heat * k * c_a - self.cooling * (t_r - t_c),
            self.dilution * (self.c_feed - c_a) - k * c_a,
        ]
    }

    /// Jacobians of `rhs` with respect to the state and the input.
    pub fn jacobian(&self, x: &[f64; 2]) -> ([[f64; 2]; 2], [f64; 2]) {
        let [t_r, c_a] = *x;
        let k = self.rate(t_r);
        let dk = k * self.activation / (t_r * t_r);
        (
            [
                [-self.dilution + self.heat * c_a * dk - self.cooling, self.heat * k],
                [-c_a * dk, -self.dilution - k],
            ],
            [self.cooling, 0.0],
        )
    }

    /// One sample period of the plant with the input held constant.
    pub fn step(&self, x: &[f64; 2], t_c: f64) -> [f64; 2] {
        let h = self.sample_time / self.substeps.max(1) as f64;
        let axpy = |x: &[f64; 2], a: f64, d: &[f64; 2]| [x[0] + a * d[0], x[1] + a * d[1]];
        let mut x = *x;
        for _ in 0..self.substeps.max(1) {
            let k1 = self.rhs(&x, t_c);
            let k2 = self.rhs(&axpy(&x, h / 2.0, &k1), t_c);
            let k3 = self.rhs(&axpy(&x, h / 2.0, &k2), t_c);
            let k4 = self.rhs(&axpy(&x, h, &k3), t_c);
            for i in 0..2 {
                x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        x
    }

    /// Equilibrium with the given concentration and the coolant temperature
    /// holding it.
    pub fn steady_state(&self, c_a: f64) -> Result<([f64; 2], f64)> {
        if !(c_a > 0.0 && c_a < self.c_feed) {
            return Err(Error::Domain(format!("no equilibrium with C_A = {c_a}")));
        }
        let k = self.dilution * (self.c_feed / c_a - 1.0);
        let t_r = self.activation / (self.k0 / k).ln();
        let t_c = t_r - (self.dilution * (self.t_feed - t_r) + self.heat * k * c_a) / self.cooling;
        Ok(([t_r, c_a], t_c))
    }

    /// Forward-Euler affine model around `(x, u)` extended with the held input:
    /// state `[T_r, C_A, u_prev]`, input `Δu`. Returns `(A, B, d)`.
    pub fn extended_model(&self, x: &[f64; 2], u: f64) -> (Matrix, Matrix, Vec<f64>) {
        let ts = self.sample_time;
        let f = self.rhs(x, u);
        let (jx, ju) = self.jacobian(x);
        let mut a = Matrix::identity(3);
        let mut b = Matrix::zeros(3, 1);
        let mut d = vec![0.0; 3];
        for i in 0..2 {
            for j in 0..2 {
                a[(i, j)] += ts * jx[i][j];
            }
            a[(i, 2)] = ts * ju[i];
            b[(i, 0)] = ts * ju[i];
            d[i] = ts * (f[i] - jx[i][0] * x[0] - jx[i][1] * x[1] - ju[i] * u);
        }
        b[(2, 0)] = 1.0;
        (a, b, d)
    }
}
