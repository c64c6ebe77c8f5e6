//! Small dense matrices and tensors with jet entries.
//!
//! Chart dimensions stay at or below 8, so everything here is plain
//! row-major `Vec` storage with explicit index math.

use nalgebra::DMatrix;

use crate::jet::{Jet, JetError};

/// Row-major matrix of jets.
#[derive(Clone, Debug)]
pub struct JMat {
    pub rows: usize,
    pub cols: usize,
    pub a: Vec<Jet>,
}

impl JMat {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Jet) -> Self {
        let mut a = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                a.push(f(i, j));
            }
        }
        JMat { rows, cols, a }
    }

    pub fn zeros_like(proto: &Jet, rows: usize, cols: usize) -> Self {
        JMat::from_fn(rows, cols, |_, _| proto.zero_like())
    }

    pub fn identity_like(proto: &Jet, n: usize) -> Self {
        JMat::from_fn(n, n, |i, j| proto.const_like(if i == j { 1.0 } else { 0.0 }))
    }

    pub fn constant(proto: &Jet, m: &DMatrix<f64>) -> Self {
        JMat::from_fn(m.nrows(), m.ncols(), |i, j| proto.const_like(m[(i, j)]))
    }

    pub fn at(&self, i: usize, j: usize) -> &Jet {
        &self.a[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Jet) {
        self.a[i * self.cols + j] = v;
    }

    pub fn values(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self.at(i, j).value())
    }

    pub fn transpose(&self) -> JMat {
        JMat::from_fn(self.cols, self.rows, |i, j| self.at(j, i).clone())
    }

    pub fn matmul(&self, rhs: &JMat) -> JMat {
        assert_eq!(self.cols, rhs.rows, "jet matmul dimension mismatch");
        JMat::from_fn(self.rows, rhs.cols, |i, j| {
            let mut acc = self.at(i, 0) * rhs.at(0, j);
            for k in 1..self.cols {
                acc = &acc + &(self.at(i, k) * rhs.at(k, j));
            }
            acc
        })
    }

    pub fn add(&self, rhs: &JMat) -> JMat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        JMat::from_fn(self.rows, self.cols, |i, j| self.at(i, j) + rhs.at(i, j))
    }

    pub fn sub(&self, rhs: &JMat) -> JMat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        JMat::from_fn(self.rows, self.cols, |i, j| self.at(i, j) - rhs.at(i, j))
    }

    pub fn scale(&self, s: f64) -> JMat {
        JMat::from_fn(self.rows, self.cols, |i, j| self.at(i, j).scale(s))
    }

    pub fn mul_vec(&self, v: &[Jet]) -> Vec<Jet> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut acc = self.at(i, 0) * &v[0];
                for k in 1..self.cols {
                    acc = &acc + &(self.at(i, k) * &v[k]);
                }
                acc
            })
            .collect()
    }

    pub fn truncate(&self, order: usize) -> JMat {
        JMat::from_fn(self.rows, self.cols, |i, j| self.at(i, j).truncate(order))
    }

    /// Inverse of a square jet matrix through the Neumann series around the
    /// numeric inverse of the constant part: with `A = A0 + E` and
    /// `N = A0^{-1} E` (zero constant part),
    /// `A^{-1} = (Σ_k (-N)^k) A0^{-1}` is exact at the truncation order.
    pub fn inverse(&self) -> Result<JMat, JetError> {
        assert_eq!(self.rows, self.cols, "inverse of a non-square jet matrix");
        let n = self.rows;
        let a0 = self.values();
        let det = a0.determinant();
        if det.abs() < 1e-10 {
            return Err(JetError::Domain { op: "matrix inverse", value: det });
        }
        let a0inv = a0.clone().try_inverse().ok_or(JetError::Domain {
            op: "matrix inverse",
            value: det,
        })?;
        let proto = &self.a[0];
        let order = proto.order();
        let b0 = JMat::constant(proto, &a0inv);
        let e = self.sub(&JMat::constant(proto, &a0));
        let nmat = b0.matmul(&e);
        let mut sum = JMat::identity_like(proto, n);
        let mut pow = JMat::identity_like(proto, n);
        for _ in 0..order {
            pow = nmat.matmul(&pow).scale(-1.0);
            sum = sum.add(&pow);
        }
        Ok(sum.matmul(&b0))
    }
}

/// Dense rank-k tensor of f64 values with explicit shape.
#[derive(Clone, Debug)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        Tensor { shape: shape.to_vec(), data: vec![0.0; len] }
    }

    #[inline]
    pub fn idx(&self, ix: &[usize]) -> usize {
        debug_assert_eq!(ix.len(), self.shape.len());
        let mut flat = 0;
        for (d, &i) in ix.iter().enumerate() {
            debug_assert!(i < self.shape[d]);
            flat = flat * self.shape[d] + i;
        }
        flat
    }

    #[inline]
    pub fn get(&self, ix: &[usize]) -> f64 {
        self.data[self.idx(ix)]
    }

    #[inline]
    pub fn set(&mut self, ix: &[usize], v: f64) {
        let k = self.idx(ix);
        self.data[k] = v;
    }

    #[inline]
    pub fn add_to(&mut self, ix: &[usize], v: f64) {
        let k = self.idx(ix);
        self.data[k] += v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}
