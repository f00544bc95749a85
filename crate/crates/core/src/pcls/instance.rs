use serde::{Deserialize, Serialize};

use crate::error::{dim_check, Error, Result};
use crate::linalg::{vec_ops, Matrix, Real};

/// One materialized problem `min ½‖Az − b‖²  s.t.  Cz = e, Gz ≤ g`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PClsInstance<T: Real = f64> {
    #[serde(rename = "A")]
    pub a: Matrix<T>,
    pub b: Vec<T>,
    #[serde(rename = "C")]
    pub c: Matrix<T>,
    pub e: Vec<T>,
    #[serde(rename = "G")]
    pub g_mat: Matrix<T>,
    pub g: Vec<T>,
}

impl<T: Real> PClsInstance<T> {
    pub fn new(a: Matrix<T>, b: Vec<T>, c: Matrix<T>, e: Vec<T>, g_mat: Matrix<T>, g: Vec<T>) -> Result<Self> {
        let p = Self { a, b, c, e, g_mat, g };
        p.validate()?;
        Ok(p)
    }

    /// Instance without equality constraints.
    pub fn without_equalities(a: Matrix<T>, b: Vec<T>, g_mat: Matrix<T>, g: Vec<T>) -> Result<Self> {
        let ell = a.cols();
        Self::new(a, b, Matrix::zeros(0, ell), Vec::new(), g_mat, g)
    }

    pub fn validate(&self) -> Result<()> {
        let ell = self.a.cols();
        dim_check(self.a.rows() == self.b.len(), || {
            format!("A has {} rows, b has {}", self.a.rows(), self.b.len())
        })?;
        dim_check(self.c.cols() == ell && self.c.rows() == self.e.len(), || {
            format!("C is {}x{}, e has {}, expected {ell} columns", self.c.rows(), self.c.cols(), self.e.len())
        })?;
        dim_check(self.g_mat.cols() == ell && self.g_mat.rows() == self.g.len(), || {
            format!(
                "G is {}x{}, g has {}, expected {ell} columns",
                self.g_mat.rows(),
                self.g_mat.cols(),
                self.g.len()
            )
        })
    }

    /// Number of optimization variables.
    pub fn ell(&self) -> usize {
        self.a.cols()
    }

    pub fn n_c(&self) -> usize {
        self.a.rows()
    }

    pub fn n_e(&self) -> usize {
        self.c.rows()
    }

    pub fn n_i(&self) -> usize {
        self.g_mat.rows()
    }

    /// `½‖Az − b‖²`
    pub fn objective(&self, z: &[T]) -> Result<T> {
        let r = vec_ops::sub(&self.a.matvec(z)?, &self.b);
        Ok(T::lit(0.5) * vec_ops::norm2_sq(&r))
    }

    /// `‖Az − b‖`
    pub fn residual_norm(&self, z: &[T]) -> Result<T> {
        Ok(vec_ops::norm2(&vec_ops::sub(&self.a.matvec(z)?, &self.b)))
    }

    pub fn cast<S: Real>(&self) -> PClsInstance<S> {
        PClsInstance {
            a: self.a.cast(),
            b: vec_ops::cast(&self.b),
            c: self.c.cast(),
            e: vec_ops::cast(&self.e),
            g_mat: self.g_mat.cast(),
            g: vec_ops::cast(&self.g),
        }
    }
}

impl PClsInstance<f64> {
    /// Parses the JSON fixture form. Empty `C` or `G` arrays get their
    /// column count from `A`.
    pub fn from_json(text: &str) -> Result<Self> {
        let mut p: Self = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let ell = p.a.cols();
        if p.c.rows() == 0 {
            p.c = Matrix::zeros(0, ell);
        }
        if p.g_mat.rows() == 0 {
            p.g_mat = Matrix::zeros(0, ell);
        }
        p.validate()?;
        Ok(p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("finite values serialize")
    }
}

/// Problem `min ½‖A s − b‖²  s.t.  G s ≤ g` left after removing equalities
/// (or after a further basis restriction).
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedPcls<T: Real = f64> {
    pub a: Matrix<T>,
    pub b: Vec<T>,
    pub g_mat: Matrix<T>,
    pub g: Vec<T>,
}

impl<T: Real> ReducedPcls<T> {
    pub fn new(a: Matrix<T>, b: Vec<T>, g_mat: Matrix<T>, g: Vec<T>) -> Result<Self> {
        dim_check(a.rows() == b.len() && g_mat.rows() == g.len() && a.cols() == g_mat.cols(), || {
            format!(
                "reduced problem A {}x{}, b {}, G {}x{}, g {}",
                a.rows(),
                a.cols(),
                b.len(),
                g_mat.rows(),
                g_mat.cols(),
                g.len()
            )
        })?;
        Ok(Self { a, b, g_mat, g })
    }

    /// Number of free variables.
    pub fn n(&self) -> usize {
        self.a.cols()
    }

    pub fn objective(&self, s: &[T]) -> Result<T> {
        let r = vec_ops::sub(&self.a.matvec(s)?, &self.b);
        Ok(T::lit(0.5) * vec_ops::norm2_sq(&r))
    }

    /// Largest violation `max_i (G s − g)_i`, or `−∞` without constraints.
    pub fn max_violation(&self, s: &[T]) -> Result<T> {
        let gs = self.g_mat.matvec(s)?;
        Ok(gs
            .iter()
            .zip(&self.g)
            .fold(T::neg_infinity(), |m, (&x, &y)| m.max(x - y)))
    }

    pub fn cast<S: Real>(&self) -> ReducedPcls<S> {
        ReducedPcls {
            a: self.a.cast(),
            b: vec_ops::cast(&self.b),
            g_mat: self.g_mat.cast(),
            g: vec_ops::cast(&self.g),
        }
    }
}

/// Affine change of variables `z = Z s + z0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Transform<T: Real = f64> {
    pub z_mat: Matrix<T>,
    pub z_off: Vec<T>,
}

impl<T: Real> Transform<T> {
    pub fn apply(&self, s: &[T]) -> Result<Vec<T>> {
        Ok(vec_ops::add(&self.z_mat.matvec(s)?, &self.z_off))
    }

    /// Substitutes the transform into `p`, dropping its equalities.
    pub fn reduce(&self, p: &PClsInstance<T>) -> Result<ReducedPcls<T>> {
        dim_check(self.z_mat.rows() == p.ell() && self.z_off.len() == p.ell(), || {
            format!("transform of {} rows for {} variables", self.z_mat.rows(), p.ell())
        })?;
        let a = p.a.matmul(&self.z_mat)?;
        let b = vec_ops::sub(&p.b, &p.a.matvec(&self.z_off)?);
        let g_mat = p.g_mat.matmul(&self.z_mat)?;
        let g = vec_ops::sub(&p.g, &p.g_mat.matvec(&self.z_off)?);
        ReducedPcls::new(a, b, g_mat, g)
    }
}
