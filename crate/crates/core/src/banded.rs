//! Square banded matrices with equal lower and upper bandwidth, and an LU
//! factorization without pivoting that is computed once and reused for many
//! right-hand sides.
//!
//! Storage is row-major over the band: row `i` holds columns
//! `i - bandwidth ..= i + bandwidth`, with out-of-range slots left at zero.
//! Pivoting is unnecessary for the matrices built here (shifted negative
//! definite operators), and skipping it keeps the fill inside the band.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct BandMatrix {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        let bw = bandwidth.min(n.saturating_sub(1));
        BandMatrix {
            n,
            bw,
            data: vec![0.0; n * (2 * bw + 1)],
        }
    }

    pub fn identity(n: usize, bandwidth: usize) -> Self {
        let mut m = Self::zeros(n, bandwidth);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Builds a matrix from a dense row-major array, keeping only entries
    /// inside the band. Entries outside the band must be zero.
    pub fn from_dense(n: usize, bandwidth: usize, dense: &[f64]) -> Result<Self> {
        if dense.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: dense.len(),
            });
        }
        let mut m = Self::zeros(n, bandwidth);
        for i in 0..n {
            for j in 0..n {
                let v = dense[i * n + j];
                if m.in_band(i, j) {
                    m.set(i, j, v);
                } else if v != 0.0 {
                    return Err(Error::param(
                        "bandwidth",
                        format!("entry ({i},{j}) lies outside bandwidth {}", m.bw),
                    ));
                }
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn width(&self) -> usize {
        2 * self.bw + 1
    }

    #[inline]
    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && i.abs_diff(j) <= self.bw
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        i * self.width() + (j + self.bw - i)
    }

    /// Entry `(i, j)`; zero outside the band.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[self.slot(i, j)]
        } else {
            0.0
        }
    }

    /// Panics when `(i, j)` lies outside the band.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "({i},{j}) outside band {}", self.bw);
        let k = self.slot(i, j);
        self.data[k] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "({i},{j}) outside band {}", self.bw);
        let k = self.slot(i, j);
        self.data[k] += v;
    }

    /// Column range of row `i` that lies inside the band.
    #[inline]
    pub fn row_range(&self, i: usize) -> std::ops::Range<usize> {
        i.saturating_sub(self.bw)..(i + self.bw + 1).min(self.n)
    }

    /// `alpha * I + beta * self`.
    pub fn shifted(&self, alpha: f64, beta: f64) -> BandMatrix {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|x| *x *= beta);
        for i in 0..self.n {
            out.add(i, i, alpha);
        }
        out
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        let w = self.width();
        for (i, yi) in y.iter_mut().enumerate() {
            let row = &self.data[i * w..(i + 1) * w];
            let cols = self.row_range(i);
            let offset = cols.start + self.bw - i;
            let mut acc = 0.0;
            for (a, xj) in row[offset..offset + cols.len()].iter().zip(&x[cols]) {
                acc += a * xj;
            }
            *yi = acc;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    /// Largest absolute row sum; bounds every eigenvalue's modulus.
    pub fn max_row_abs_sum(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row_range(i).map(|j| self.get(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n * self.n];
        for i in 0..self.n {
            for j in self.row_range(i) {
                d[i * self.n + j] = self.get(i, j);
            }
        }
        d
    }

    pub fn factor(&self) -> Result<BandLu> {
        BandLu::new(self)
    }
}

/// In-band LU factors (unit lower `L`, upper `U`) sharing one storage array.
#[derive(Clone, Debug)]
pub struct BandLu {
    lu: BandMatrix,
}

impl BandLu {
    pub fn new(a: &BandMatrix) -> Result<Self> {
        let mut lu = a.clone();
        let n = lu.n;
        let bw = lu.bw;
        let tiny = f64::EPSILON * a.max_abs().max(f64::MIN_POSITIVE) * n.max(1) as f64;
        for k in 0..n {
            let pivot = lu.get(k, k);
            if !(pivot.abs() > tiny) {
                return Err(Error::SingularFactorization { index: k });
            }
            let last = (k + bw).min(n - 1);
            for i in k + 1..=last {
                let l = lu.get(i, k) / pivot;
                if l == 0.0 {
                    continue;
                }
                lu.set(i, k, l);
                for j in k + 1..=last {
                    let ukj = lu.get(k, j);
                    if ukj != 0.0 {
                        lu.add(i, j, -l * ukj);
                    }
                }
            }
        }
        Ok(BandLu { lu })
    }

    pub fn dim(&self) -> usize {
        self.lu.n
    }

    /// Diagonal of `U`.
    pub fn pivots(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.lu.n).map(|i| self.lu.get(i, i))
    }

    /// Overwrites `b` with the solution of `A x = b`.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.lu.n;
        assert_eq!(b.len(), n);
        let bw = self.lu.bw;
        let w = self.lu.width();
        let data = &self.lu.data;
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let row = &data[i * w..(i + 1) * w];
            let mut acc = b[i];
            for j in lo..i {
                acc -= row[j + bw - i] * b[j];
            }
            b[i] = acc;
        }
        for i in (0..n).rev() {
            let hi = (i + bw + 1).min(n);
            let row = &data[i * w..(i + 1) * w];
            let mut acc = b[i];
            for j in i + 1..hi {
                acc -= row[j + bw - i] * b[j];
            }
            b[i] = acc / row[bw];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(n: usize) -> BandMatrix {
        let mut m = BandMatrix::zeros(n, 1);
        for i in 0..n {
            m.set(i, i, 4.0);
            if i + 1 < n {
                m.set(i, i + 1, -1.0);
                m.set(i + 1, i, -1.5);
            }
        }
        m
    }

    #[test]
    fn matvec_matches_dense() {
        let m = tridiag(5);
        let d = m.to_dense();
        let x = [1.0, -2.0, 0.5, 3.0, 1.25];
        let y = m.matvec(&x);
        for i in 0..5 {
            let expect: f64 = (0..5).map(|j| d[i * 5 + j] * x[j]).sum();
            assert_eq!(y[i], expect);
        }
    }

    #[test]
    fn lu_solves_to_residual() {
        let m = tridiag(40);
        let b: Vec<f64> = (0..40).map(|i| (i as f64 * 0.37).sin()).collect();
        let x = m.factor().unwrap().solve(&b);
        let r = m.matvec(&x);
        let err = r
            .iter()
            .zip(&b)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-13, "{err}");
    }

    #[test]
    fn wider_band_solve() {
        let n = 30;
        let bw = 4;
        let mut m = BandMatrix::zeros(n, bw);
        for i in 0..n {
            for j in m.row_range(i) {
                let v = if i == j {
                    10.0
                } else {
                    1.0 / (1.0 + (i + 2 * j) as f64)
                };
                m.set(i, j, v);
            }
        }
        let b: Vec<f64> = (0..n).map(|i| i as f64 - 7.0).collect();
        let x = m.factor().unwrap().solve(&b);
        let r = m.matvec(&x);
        for (ri, bi) in r.iter().zip(&b) {
            assert!((ri - bi).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_is_reported() {
        let m = BandMatrix::from_dense(2, 1, &[1.0, 1.0, 1.0, 1.0]).unwrap();
        assert!(matches!(
            m.factor(),
            Err(Error::SingularFactorization { index: 1 })
        ));
    }

    #[test]
    fn from_dense_rejects_out_of_band() {
        let d = [1.0, 0.0, 2.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        assert!(BandMatrix::from_dense(3, 1, &d).is_err());
        assert!(BandMatrix::from_dense(3, 2, &d).is_ok());
    }

    #[test]
    fn bandwidth_clamped_to_dimension() {
        let m = BandMatrix::identity(1, 5);
        assert_eq!(m.bandwidth(), 0);
        assert_eq!(m.matvec(&[3.0]), vec![3.0]);
    }
}
