//! Dense vector and matrix kernel.
//!
//! Everything the scorer needs is small and dense: matrix-vector products,
//! softmax, cosine similarity and elementwise interactions. Values are `f64`
//! throughout so the finite-difference gradient checks have headroom.

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A dense real vector.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Vector(pub Vec<f64>);

impl Vector {
    pub fn zeros(dim: usize) -> Self {
        Vector(vec![0.0; dim])
    }

    pub fn from_slice(values: &[f64]) -> Self {
        Vector(values.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    pub fn dot(&self, other: &Vector) -> Result<f64> {
        check_same_dim(self, other, "dot")?;
        Ok(dot(&self.0, &other.0))
    }

    pub fn norm(&self) -> f64 {
        dot(&self.0, &self.0).sqrt()
    }

    pub fn add(&self, other: &Vector) -> Result<Vector> {
        check_same_dim(self, other, "add")?;
        Ok(Vector(
            self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect(),
        ))
    }

    pub fn sub(&self, other: &Vector) -> Result<Vector> {
        check_same_dim(self, other, "sub")?;
        Ok(Vector(
            self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect(),
        ))
    }

    /// Elementwise (Hadamard) product.
    pub fn hadamard(&self, other: &Vector) -> Result<Vector> {
        check_same_dim(self, other, "hadamard")?;
        Ok(Vector(
            self.0.iter().zip(&other.0).map(|(a, b)| a * b).collect(),
        ))
    }

    pub fn scale(&self, c: f64) -> Vector {
        Vector(self.0.iter().map(|x| x * c).collect())
    }

    /// `self += c * other`
    pub fn axpy(&mut self, c: f64, other: &Vector) -> Result<()> {
        check_same_dim(self, other, "axpy")?;
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += c * b;
        }
        Ok(())
    }

    /// Returns a unit-length copy, or an error for the zero vector.
    pub fn normalized(&self) -> Result<Vector> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidArgument(
                "cannot normalize a zero or non-finite vector".into(),
            ));
        }
        Ok(self.scale(1.0 / n))
    }

    pub fn concat(parts: &[&Vector]) -> Vector {
        let mut out = Vec::with_capacity(parts.iter().map(|p| p.dim()).sum());
        for p in parts {
            out.extend_from_slice(&p.0);
        }
        Vector(out)
    }
}

impl From<Vec<f64>> for Vector {
    fn from(v: Vec<f64>) -> Self {
        Vector(v)
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for Vector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

fn check_same_dim(a: &Vector, b: &Vector, op: &str) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::Shape(format!(
            "{op}: dimensions {} and {} differ",
            a.dim(),
            b.dim()
        )));
    }
    Ok(())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "matrix {rows}x{cols} needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// `self^T * y`, used when back-propagating through a linear map.
    pub fn transpose_mul(&self, y: &Vector) -> Result<Vector> {
        if y.dim() != self.rows {
            return Err(Error::Shape(format!(
                "transpose_mul: matrix has {} rows, vector has dim {}",
                self.rows,
                y.dim()
            )));
        }
        let mut out = vec![0.0; self.cols];
        for (r, yr) in y.iter().enumerate() {
            for (o, w) in out.iter_mut().zip(self.row(r)) {
                *o += w * yr;
            }
        }
        Ok(Vector(out))
    }
}

/// `W x + b`.
pub fn linear(w: &Matrix, x: &Vector, b: &Vector) -> Result<Vector> {
    if w.cols() != x.dim() || w.rows() != b.dim() {
        return Err(Error::Shape(format!(
            "linear: W is {}x{}, x has dim {}, b has dim {}",
            w.rows(),
            w.cols(),
            x.dim(),
            b.dim()
        )));
    }
    Ok(Vector(
        (0..w.rows())
            .map(|r| dot(w.row(r), x.as_slice()) + b[r])
            .collect(),
    ))
}

/// Numerically stable softmax (max-subtracted).
pub fn softmax(xs: &[f64]) -> Result<Vec<f64>> {
    if xs.is_empty() {
        return Err(Error::Empty("softmax input"));
    }
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = xs.iter().map(|x| (x - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

pub fn cosine(u: &Vector, v: &Vector) -> Result<f64> {
    let d = u.dot(v)?;
    let nu = u.norm();
    let nv = v.norm();
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::InvalidArgument(
            "cosine similarity of a zero vector".into(),
        ));
    }
    Ok((d / (nu * nv)).clamp(-1.0, 1.0))
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn linear_identity_and_zero() {
        let x = Vector(vec![1.5, -2.0, 0.25]);
        let y = linear(&Matrix::identity(3), &x, &Vector::zeros(3)).unwrap();
        assert_eq!(y, x);

        let b = Vector(vec![0.1, 0.2]);
        let y = linear(&Matrix::zeros(2, 3), &x, &b).unwrap();
        assert_eq!(y, b);
    }

    #[test]
    fn linear_three_by_two_by_hand() {
        let w = Matrix::from_rows(3, 2, vec![0.5, -1.0, 2.0, 0.25, -0.75, 3.0]).unwrap();
        let x = Vector(vec![2.0, -4.0]);
        let b = Vector(vec![0.1, -0.2, 0.3]);
        let y = linear(&w, &x, &b).unwrap();
        // 0.5*2 + -1*-4 + 0.1 ; 2*2 + 0.25*-4 - 0.2 ; -0.75*2 + 3*-4 + 0.3
        let expected = [5.1, 2.8, -13.2];
        for (a, e) in y.iter().zip(expected) {
            assert!((a - e).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_shape_mismatch() {
        let w = Matrix::zeros(2, 3);
        assert!(linear(&w, &Vector::zeros(2), &Vector::zeros(2)).is_err());
        assert!(linear(&w, &Vector::zeros(3), &Vector::zeros(3)).is_err());
    }

    #[test]
    fn softmax_examples() {
        assert_eq!(softmax(&[0.0, 0.0]).unwrap(), vec![0.5, 0.5]);
        for c in [-1000.0, 0.0, 3.5, 1e6] {
            for p in softmax(&[c, c, c]).unwrap() {
                assert!((p - 1.0 / 3.0).abs() < 1e-15);
            }
        }
        let p = softmax(&[1.0, 2.0, 3.0]).unwrap();
        let expected = [0.09003057, 0.24472847, 0.66524096];
        for (a, e) in p.iter().zip(expected) {
            assert!((a - e).abs() < 1e-8);
        }
        assert!(softmax(&[]).is_err());
    }

    #[test]
    fn cosine_examples() {
        let v = Vector(vec![0.3, -1.2, 4.0]);
        assert!((cosine(&v, &v).unwrap() - 1.0).abs() < 1e-12);
        let e1 = Vector(vec![1.0, 0.0]);
        let e2 = Vector(vec![0.0, 1.0]);
        assert_eq!(cosine(&e1, &e2).unwrap(), 0.0);
        let u = Vector(vec![1.0, 1.0]);
        assert!((cosine(&u, &e1).unwrap() - 2f64.sqrt() / 2.0).abs() < 1e-12);
        assert!(cosine(&Vector::zeros(2), &e1).is_err());
    }

    #[test]
    fn transpose_mul_matches_explicit_transpose() {
        let w = Matrix::from_rows(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let y = Vector(vec![0.5, -1.0]);
        let got = w.transpose_mul(&y).unwrap();
        assert_eq!(got.0, vec![0.5 - 4.0, 1.0 - 5.0, 1.5 - 6.0]);
    }

    proptest! {
        #[test]
        fn softmax_positive_sums_to_one_and_preserves_order(
            xs in proptest::collection::vec(-50.0f64..50.0, 1..20)
        ) {
            let p = softmax(&xs).unwrap();
            let total: f64 = p.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
            for i in 0..xs.len() {
                prop_assert!(p[i] > 0.0);
                for j in 0..xs.len() {
                    if xs[i] < xs[j] {
                        prop_assert!(p[i] <= p[j]);
                    }
                }
            }
        }

        #[test]
        fn linear_is_additive(
            w in proptest::collection::vec(-3.0f64..3.0, 12),
            x in proptest::collection::vec(-3.0f64..3.0, 4),
            y in proptest::collection::vec(-3.0f64..3.0, 4),
        ) {
            let w = Matrix::from_rows(3, 4, w).unwrap();
            let x = Vector(x);
            let y = Vector(y);
            let zero = Vector::zeros(3);
            let lhs = linear(&w, &x.add(&y).unwrap(), &zero).unwrap();
            let rhs = linear(&w, &x, &zero).unwrap().add(&linear(&w, &y, &zero).unwrap()).unwrap();
            for (a, b) in lhs.iter().zip(rhs.iter()) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
