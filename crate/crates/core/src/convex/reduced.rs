//! A window problem with the pinned prefix substituted out.
//!
//! Free variables are `z = y[q..]`. Every stencil row that touches a free
//! variable becomes `w * |b . z + c|`, where `c` collects the pinned entries.
//! Rows that only see pinned entries are constants.

use super::{BandedSym, DiffStencils, WindowProblem};

#[derive(Debug, Clone)]
pub(crate) struct Row {
    /// First free column touched by the stencil.
    pub col0: usize,
    pub len: usize,
    pub coefs: [f64; 4],
    pub c: f64,
    pub w: f64,
}

impl Row {
    #[inline]
    pub fn dot(&self, z: &[f64]) -> f64 {
        let mut s = self.c;
        for k in 0..self.len {
            s += self.coefs[k] * z[self.col0 + k];
        }
        s
    }

    #[inline]
    pub fn axpy(&self, a: f64, out: &mut [f64]) {
        for k in 0..self.len {
            out[self.col0 + k] += a * self.coefs[k];
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Reduced {
    pub q: usize,
    pub l0: f64,
    pub x_free: Vec<f64>,
    pub rows: Vec<Row>,
    /// Objective contribution of pinned-only terms.
    pub constant: f64,
}

impl Reduced {
    pub fn new(p: &WindowProblem) -> Self {
        let x = p.x();
        let prefix = p.prefix();
        let l = p.lambdas();
        let n = x.len();
        let q = prefix.len();
        let mut constant: f64 = x
            .iter()
            .zip(prefix)
            .map(|(a, b)| l.l0 * (a - b) * (a - b))
            .sum();
        let mut rows = Vec::new();
        for order in 1..=3 {
            let w = l.order_weight(order);
            if w == 0.0 {
                continue;
            }
            let s = DiffStencils::of_order(order);
            if n < s.len() {
                continue;
            }
            for i in 0..=n - s.len() {
                let mut c = 0.0;
                let mut coefs = [0.0; 4];
                let mut len = 0;
                let mut col0 = usize::MAX;
                for (k, &sk) in s.iter().enumerate() {
                    let pos = i + k;
                    if pos < q {
                        c += sk * prefix[pos];
                    } else {
                        if col0 == usize::MAX {
                            col0 = pos - q;
                        }
                        coefs[len] = sk;
                        len += 1;
                    }
                }
                if len == 0 {
                    constant += w * c.abs();
                } else {
                    rows.push(Row {
                        col0,
                        len,
                        coefs,
                        c,
                        w,
                    });
                }
            }
        }
        Self {
            q,
            l0: l.l0,
            x_free: x[q..].to_vec(),
            rows,
            constant,
        }
    }

    pub fn nf(&self) -> usize {
        self.x_free.len()
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }

    pub fn objective(&self, z: &[f64]) -> f64 {
        let fid: f64 = self
            .x_free
            .iter()
            .zip(z)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let pen: f64 = self.rows.iter().map(|r| r.w * r.dot(z).abs()).sum();
        self.constant + self.l0 * fid + pen
    }

    /// `B^T v`.
    pub fn bt(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.nf()];
        for (r, &vi) in self.rows.iter().zip(v) {
            if vi != 0.0 {
                r.axpy(vi, &mut out);
            }
        }
        out
    }

    /// Lagrange dual value for a box-feasible `v` (|v_i| <= w_i):
    /// `v . (c + B x) - ||B^T v||^2 / (4 l0) + constant`.
    pub fn dual_value(&self, v: &[f64]) -> f64 {
        let lin: f64 = self
            .rows
            .iter()
            .zip(v)
            .map(|(r, &vi)| vi * r.dot(&self.x_free))
            .sum();
        let btv = self.bt(v);
        let quad: f64 = btv.iter().map(|a| a * a).sum();
        self.constant + lin - quad / (4.0 * self.l0)
    }

    /// `B^T B` over the free variables (bandwidth 3).
    pub fn gram(&self) -> BandedSym {
        let mut g = BandedSym::zeros(self.nf(), 3);
        for r in &self.rows {
            for a in 0..r.len {
                for b in 0..=a {
                    g.add(r.col0 + a, r.col0 + b, r.coefs[a] * r.coefs[b]);
                }
            }
        }
        g
    }
}
