//! Banded matrices: storage, products and a partial-pivoting LU solver.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Real matrix whose entry (i, j) may be nonzero only when `i - kl <= j <= i + ku`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandMatrix {
    rows: usize,
    cols: usize,
    kl: usize,
    ku: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(rows: usize, cols: usize, kl: usize, ku: usize) -> Self {
        Self { rows, cols, kl, ku, data: vec![0.0; rows * (kl + ku + 1)] }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(d: &[f64]) -> Self {
        Self { rows: d.len(), cols: d.len(), kl: 0, ku: 0, data: d.to_vec() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// (sub-diagonal count, super-diagonal count)
    pub fn bandwidth(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    fn width(&self) -> usize {
        self.kl + self.ku + 1
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        if i >= self.rows || j >= self.cols || j + self.kl < i || j > i + self.ku {
            None
        } else {
            Some(i * self.width() + j + self.kl - i)
        }
    }

    /// Column range of stored entries in row `i`.
    pub fn row_span(&self, i: usize) -> std::ops::Range<usize> {
        let lo = i.saturating_sub(self.kl);
        let hi = (i + self.ku + 1).min(self.cols);
        lo..hi.max(lo)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.data[s])
    }

    /// Adds `v` to entry (i, j); panics if the entry lies outside the band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j).unwrap_or_else(|| panic!("({i}, {j}) outside band"));
        self.data[s] += v;
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j).unwrap_or_else(|| panic!("({i}, {j}) outside band"));
        self.data[s] = v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        (0..self.rows)
            .map(|i| self.row_span(i).map(|j| self.data[i * self.width() + j + self.kl - i] * x[j]).sum())
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows, self.ku, self.kl);
        for i in 0..self.rows {
            for j in self.row_span(i) {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    /// Matrix product `self * other`.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "product dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols, self.kl + other.kl, self.ku + other.ku);
        for i in 0..self.rows {
            for m in self.row_span(i) {
                let a = self.get(i, m);
                if a == 0.0 {
                    continue;
                }
                for j in other.row_span(m) {
                    out.add(i, j, a * other.get(m, j));
                }
            }
        }
        out
    }

    /// Multiplies row i by `d[i]`.
    pub fn scale_rows(&mut self, d: &[f64]) {
        assert_eq!(d.len(), self.rows);
        let w = self.width();
        for (row, &di) in self.data.chunks_mut(w).zip(d) {
            row.iter_mut().for_each(|v| *v *= di);
        }
    }

    /// `self + diag(d)` for a square matrix.
    pub fn add_diagonal(&mut self, d: &[f64]) {
        assert_eq!(self.rows, self.cols);
        assert_eq!(d.len(), self.rows);
        for (i, &di) in d.iter().enumerate() {
            self.add(i, i, di);
        }
    }

    pub fn add_scaled_identity(&mut self, c: f64) {
        for i in 0..self.rows.min(self.cols) {
            self.add(i, i, c);
        }
    }

    pub fn scale(&mut self, c: f64) {
        self.data.iter_mut().for_each(|v| *v *= c);
    }

    /// Largest absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        self.data.chunks(self.width()).map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn lu(&self) -> Result<BandLu> {
        BandLu::factor(self)
    }
}

/// Solves a small dense system given row-major `a`, through the band solver with full bandwidth.
pub fn solve_dense(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    let w = n.saturating_sub(1);
    let mut m = BandMatrix::zeros(n, n, w, w);
    for (i, row) in a.iter().enumerate() {
        assert_eq!(row.len(), n);
        for (j, &v) in row.iter().enumerate() {
            m.set(i, j, v);
        }
    }
    Ok(m.lu()?.solve(b))
}

/// LU factorization with partial pivoting of a square band matrix.
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    ld: usize,
    ab: Vec<f64>,
    piv: Vec<usize>,
}

impl BandLu {
    fn idx(&self, i: usize, j: usize) -> usize {
        j * self.ld + self.kl + self.ku + i - j
    }

    pub fn factor(a: &BandMatrix) -> Result<Self> {
        assert_eq!(a.rows, a.cols, "LU requires a square matrix");
        let (n, kl, ku) = (a.rows, a.kl, a.ku);
        let ld = 2 * kl + ku + 1;
        let mut lu = Self { n, kl, ku, ld, ab: vec![0.0; n * ld], piv: vec![0; n] };
        for i in 0..n {
            for j in a.row_span(i) {
                let s = lu.idx(i, j);
                lu.ab[s] = a.get(i, j);
            }
        }
        let scale = a.norm_inf().max(f64::MIN_POSITIVE);
        let up = kl + ku;
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = lu.ab[lu.idx(k, k)].abs();
            for i in k + 1..=last {
                let v = lu.ab[lu.idx(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= scale * 1e-300 || !best.is_finite() {
                return Err(Error::Singular(k));
            }
            lu.piv[k] = p;
            let jend = (k + up).min(n - 1);
            if p != k {
                for j in k..=jend {
                    let (x, y) = (lu.idx(k, j), lu.idx(p, j));
                    lu.ab.swap(x, y);
                }
            }
            let pivot = lu.ab[lu.idx(k, k)];
            for i in k + 1..=last {
                let s = lu.idx(i, k);
                let l = lu.ab[s] / pivot;
                lu.ab[s] = l;
                if l == 0.0 {
                    continue;
                }
                for j in k + 1..=jend {
                    let (t, u) = (lu.idx(i, j), lu.idx(k, j));
                    lu.ab[t] -= l * lu.ab[u];
                }
            }
        }
        Ok(lu)
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let mut x = b.to_vec();
        for k in 0..n {
            x.swap(k, self.piv[k]);
            let last = (k + self.kl).min(n.saturating_sub(1));
            for i in k + 1..=last {
                x[i] -= self.ab[self.idx(i, k)] * x[k];
            }
        }
        for i in (0..n).rev() {
            let jend = (i + self.kl + self.ku).min(n - 1);
            let mut acc = x[i];
            for j in i + 1..=jend {
                acc -= self.ab[self.idx(i, j)] * x[j];
            }
            x[i] = acc / self.ab[self.idx(i, i)];
        }
        x
    }
}
