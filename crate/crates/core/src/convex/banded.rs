//! Banded symmetric positive-definite matrices and their Cholesky factor.

use crate::error::{Error, Result};

/// Symmetric matrix stored as its lower band: `data[i * (bw + 1) + d] = A[i][i - d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedSym {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandedSym {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn identity(n: usize, bw: usize) -> Self {
        let mut m = Self::zeros(n, bw);
        for i in 0..n {
            m.data[i * (bw + 1)] = 1.0;
        }
        m
    }

    /// `diagonals[d][i] = A[i + d][i]`; `diagonals[0]` is the main diagonal.
    pub fn from_diagonals(diagonals: &[Vec<f64>]) -> Result<Self> {
        let n = diagonals.first().map_or(0, Vec::len);
        if n == 0 {
            return Err(Error::Empty("banded matrix"));
        }
        let bw = diagonals.len() - 1;
        let mut m = Self::zeros(n, bw);
        for (d, diag) in diagonals.iter().enumerate() {
            if diag.len() != n.saturating_sub(d) {
                return Err(Error::LengthMismatch {
                    what: "sub-diagonal length",
                    left: diag.len(),
                    right: n.saturating_sub(d),
                });
            }
            for (i, &v) in diag.iter().enumerate() {
                m.set(i + d, i, v);
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        debug_assert!(i - j <= self.bw, "entry outside band");
        i * (self.bw + 1) + (i - j)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let d = i.abs_diff(j);
        if d > self.bw {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn add_diagonal(&mut self, v: f64) {
        for i in 0..self.n {
            self.data[i * (self.bw + 1)] += v;
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let row = &self.data[i * (self.bw + 1)..(i + 1) * (self.bw + 1)];
            y[i] += row[0] * x[i];
            for d in 1..=self.bw.min(i) {
                y[i] += row[d] * x[i - d];
                y[i - d] += row[d] * x[i];
            }
        }
        y
    }

    pub fn cholesky(&self) -> Result<BandedCholesky> {
        let (n, bw) = (self.n, self.bw);
        let w = bw + 1;
        let mut l = vec![0.0; n * w];
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let mut sum = self.data[i * w + (i - j)];
                for k in lo..j {
                    sum -= l[i * w + (i - k)] * l[j * w + (j - k)];
                }
                if i == j {
                    if !(sum > 0.0) {
                        return Err(Error::NotSpd { row: i, pivot: sum });
                    }
                    l[i * w] = sum.sqrt();
                } else {
                    l[i * w + (i - j)] = sum / l[j * w];
                }
            }
        }
        Ok(BandedCholesky { n, bw, l })
    }
}

/// Lower-triangular banded factor `L` with `A = L L^T`.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandedCholesky {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        let w = self.bw + 1;
        for i in 0..self.n {
            let mut s = x[i];
            for k in i.saturating_sub(self.bw)..i {
                s -= self.l[i * w + (i - k)] * x[k];
            }
            x[i] = s / self.l[i * w];
        }
        for i in (0..self.n).rev() {
            let mut s = x[i];
            for k in i + 1..(i + w).min(self.n) {
                s -= self.l[k * w + (k - i)] * x[k];
            }
            x[i] = s / self.l[i * w];
        }
    }
}

/// Solves `A y = rhs` for a banded SPD `A` in O(n * bw^2).
pub fn banded_spd_solve(a: &BandedSym, rhs: &[f64]) -> Result<Vec<f64>> {
    if rhs.len() != a.dim() {
        return Err(Error::LengthMismatch {
            what: "rhs vs matrix",
            left: rhs.len(),
            right: a.dim(),
        });
    }
    Ok(a.cholesky()?.solve(rhs))
}
