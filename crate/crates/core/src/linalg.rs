//! Small dense matrices for subsystem blocks.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Row-major dense matrix. Subsystem blocks are tiny (n ≤ 8), so no
/// attempt is made at blocking or SIMD.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>"))]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn scalar(v: f64) -> Self {
        Self { rows: 1, cols: 1, data: vec![v] }
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Shape("ragged matrix rows".into()));
        }
        Ok(Self { rows: r, cols: c, data: rows.iter().flat_map(|row| row.iter().copied()).collect() })
    }

    pub fn column(v: &[f64]) -> Self {
        Self { rows: v.len(), cols: 1, data: v.to_vec() }
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

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.get(r, c);
            }
        }
        t
    }

    pub fn matmul(&self, other: &Mat) -> Result<Mat> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Mat::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a == 0.0 {
                    continue;
                }
                for c in 0..other.cols {
                    out.data[r * other.cols + c] += a * other.get(k, c);
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &Mat) -> Result<Mat> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Shape(format!(
                "cannot add {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn scaled(&self, s: f64) -> Mat {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * s).collect() }
    }

    /// `[self | other]`.
    pub fn hcat(&self, other: &Mat) -> Result<Mat> {
        if self.rows != other.rows {
            return Err(Error::Shape(format!("hcat of {} and {} rows", self.rows, other.rows)));
        }
        let cols = self.cols + other.cols;
        let mut out = Mat::zeros(self.rows, cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[r * cols + c] = self.get(r, c);
            }
            for c in 0..other.cols {
                out.data[r * cols + self.cols + c] = other.get(r, c);
            }
        }
        Ok(out)
    }

    /// `out += self · x`.
    #[inline]
    pub fn mul_acc(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (r, o) in out.iter_mut().enumerate() {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            *o += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        }
    }

    /// `xᵀ · self · x` for square `self`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut acc = 0.0;
        for r in 0..n {
            let xr = x[r];
            if xr == 0.0 {
                continue;
            }
            let row = &self.data[r * n..(r + 1) * n];
            acc += xr * row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        }
        acc
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.rows == self.cols && (0..self.rows).all(|r| (0..r).all(|c| (self.get(r, c) - self.get(c, r)).abs() <= tol))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Eigenvalues of a symmetric matrix, ascending.
    pub fn sym_eigenvalues(&self) -> Result<Vec<f64>> {
        if self.rows != self.cols {
            return Err(Error::Shape(format!("eigenvalues of non-square {}x{}", self.rows, self.cols)));
        }
        if self.rows == 0 {
            return Ok(Vec::new());
        }
        let m = nalgebra::DMatrix::from_row_slice(self.rows, self.cols, &self.data);
        let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        if ev.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("symmetric eigenvalues"));
        }
        ev.sort_by(f64::total_cmp);
        Ok(ev)
    }

    /// Largest singular value squared, `λ_max(selfᵀ self)`.
    pub fn spectral_norm_sq(&self) -> Result<f64> {
        if self.rows == 0 || self.cols == 0 {
            return Ok(0.0);
        }
        let gram = self.transpose().matmul(self)?;
        Ok(gram.sym_eigenvalues()?.last().copied().unwrap_or(0.0).max(0.0))
    }

    /// `‖√M · self‖²` computed as `λ_max(selfᵀ M self)`; avoids forming `√M`.
    pub fn weighted_norm_sq(&self, m: &Mat) -> Result<f64> {
        if self.cols == 0 {
            return Ok(0.0);
        }
        let gram = self.transpose().matmul(&m.matmul(self)?)?;
        let sym = gram.add(&gram.transpose())?.scaled(0.5);
        Ok(sym.sym_eigenvalues()?.last().copied().unwrap_or(0.0).max(0.0))
    }

    pub fn frobenius(&self) -> f64 {
        math::sqrt(self.data.iter().map(|v| v * v).sum())
    }
}

impl TryFrom<Vec<Vec<f64>>> for Mat {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        Mat::from_rows(&refs)
    }
}

impl From<Mat> for Vec<Vec<f64>> {
    fn from(m: Mat) -> Self {
        (0..m.rows).map(|r| m.data[r * m.cols..(r + 1) * m.cols].to_vec()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_and_transpose() {
        let a = Mat::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        let b = a.transpose();
        let c = a.matmul(&b).unwrap();
        assert_eq!(c, Mat::from_rows(&[&[5.0, 11.0], &[11.0, 25.0]]).unwrap());
        assert!(a.matmul(&Mat::zeros(3, 1)).is_err());
    }

    #[test]
    fn sym_eigen_known_values() {
        let m = Mat::from_rows(&[&[2.0, 1.0], &[1.0, 2.0]]).unwrap();
        let ev = m.sym_eigenvalues().unwrap();
        assert!((ev[0] - 1.0).abs() < 1e-12 && (ev[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn weighted_norm_matches_hand_computation() {
        // DᵀMD = [[1,2],[2,4]] for the platoon block, λ_max = 5.
        let m = Mat::from_rows(&[&[2.0, 1.0], &[1.0, 1.0]]).unwrap();
        let d = Mat::from_rows(&[&[0.0, 0.0], &[1.0, 2.0]]).unwrap();
        assert!((d.weighted_norm_sq(&m).unwrap() - 5.0).abs() < 1e-12);
        let dd = d.hcat(&d).unwrap();
        assert!((dd.weighted_norm_sq(&m).unwrap() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn quadratic_form_and_mul_acc() {
        let m = Mat::from_rows(&[&[2.0, 1.0], &[1.0, 1.0]]).unwrap();
        assert_eq!(m.quadratic_form(&[1.0, -1.0]), 1.0);
        let mut out = [1.0, 1.0];
        m.mul_acc(&[1.0, 2.0], &mut out);
        assert_eq!(out, [5.0, 4.0]);
    }
}
