//! Sliding-window L1 trend optimization (the CineConvex filter).
//!
//! Each window minimizes
//!
//! ```text
//! J(y) = l0 * sum (x - y)^2 + l1 * sum |D1 y| + l2 * sum |D2 y| + l3 * sum |D3 y|
//! ```
//!
//! over the window, where `Dk` is the k-th order forward difference evaluated
//! at every stencil position that fits inside the window. A prefix of `y` may be
//! pinned to values from the previous window; pinned entries are eliminated
//! before solving, so they are reproduced bit-for-bit.

mod admm;
mod banded;
mod ipm;
mod online;
mod reduced;
mod reference;

pub use admm::{snap, solve_window, solve_window_report, SolveReport, POLISH_MAX_DIM};
pub use banded::{banded_spd_solve, BandedCholesky, BandedSym};
pub use online::{CineConvex, WindowTrace};
pub use reference::{reference_solve, reference_solve_report, ReferenceReport, REFERENCE_MAX_N};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when checking that a candidate honours the pinned prefix.
pub const CONSTRAINT_TOL: f64 = 1e-9;

/// Weights of the fidelity term and the three L1 derivative penalties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lambdas {
    pub l0: f64,
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
}

impl Lambdas {
    /// Weights tuned for stage-performance tracks.
    pub const STAGE: Lambdas = Lambdas {
        l0: 1.0,
        l1: 1000.0,
        l2: 50.0,
        l3: 2000.0,
    };
    /// Weights tuned for basketball pan angles.
    pub const BASKETBALL: Lambdas = Lambdas {
        l0: 1.0,
        l1: 2000.0,
        l2: 100.0,
        l3: 3000.0,
    };

    /// Weights for unit-scale synthetic tracks with noise around 0.5.
    pub const SYNTHETIC: Lambdas = Lambdas {
        l0: 1.0,
        l1: 5.0,
        l2: 20.0,
        l3: 50.0,
    };

    pub fn new(l0: f64, l1: f64, l2: f64, l3: f64) -> Result<Self> {
        let l = Self { l0, l1, l2, l3 };
        l.validate()?;
        Ok(l)
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "stage" => Ok(Self::STAGE),
            "basketball" => Ok(Self::BASKETBALL),
            "synthetic" => Ok(Self::SYNTHETIC),
            other => Err(Error::InvalidParameter(format!(
                "unknown lambda preset `{other}` (expected stage, basketball or synthetic)"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.l0, self.l1, self.l2, self.l3];
        if all.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lambdas must be finite and non-negative: {all:?}"
            )));
        }
        if all.iter().all(|v| *v == 0.0) {
            return Err(Error::InvalidParameter("lambdas are all zero".into()));
        }
        Ok(())
    }

    /// Weight of the L1 penalty on differences of the given order (1..=3).
    pub fn order_weight(&self, order: usize) -> f64 {
        match order {
            1 => self.l1,
            2 => self.l2,
            3 => self.l3,
            _ => 0.0,
        }
    }

    /// TV weight that matches the first-order penalty of these lambdas under
    /// the `1/2 * ||y - x||^2` fidelity convention.
    pub fn tv_weight(&self) -> f64 {
        if self.l0 > 0.0 {
            self.l1 / (2.0 * self.l0)
        } else {
            0.0
        }
    }
}

impl Default for Lambdas {
    fn default() -> Self {
        Self::STAGE
    }
}

/// Algorithm used for each window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverMethod {
    /// Operator splitting with active-set polishing.
    Admm,
    /// Primal-dual interior point on the slack form, falling back to `Admm`
    /// if it stalls.
    #[default]
    Ipm,
}

/// Parameters of the window solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverParams {
    pub rho: f64,
    pub max_iter: usize,
    pub eps_abs: f64,
    pub eps_rel: f64,
    /// Consecutive free values closer than this are made exactly equal, unless
    /// that raises the objective. 0 disables.
    pub snap_eps: f64,
    pub method: SolverMethod,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            rho: 1.0,
            max_iter: 10_000,
            eps_abs: 1e-8,
            eps_rel: 1e-6,
            snap_eps: 1e-6,
            method: SolverMethod::Ipm,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::InvalidParameter("rho must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be positive".into()));
        }
        if !(self.eps_abs > 0.0 && self.eps_rel > 0.0) {
            return Err(Error::InvalidParameter(
                "tolerances must be positive".into(),
            ));
        }
        if !(self.snap_eps >= 0.0) {
            return Err(Error::InvalidParameter("snap_eps must be >= 0".into()));
        }
        Ok(())
    }
}

/// Finite-difference stencils applied as sliding correlations over `y`.
#[derive(Debug, Clone, Copy)]
pub struct DiffStencils;

impl DiffStencils {
    pub const FIRST: [f64; 2] = [-1.0, 1.0];
    pub const SECOND: [f64; 3] = [1.0, -2.0, 1.0];
    pub const THIRD: [f64; 4] = [-1.0, 3.0, -3.0, 1.0];

    pub fn of_order(order: usize) -> &'static [f64] {
        match order {
            1 => &Self::FIRST,
            2 => &Self::SECOND,
            3 => &Self::THIRD,
            _ => panic!("difference order must be 1, 2 or 3"),
        }
    }

    /// All valid stencil positions of `order` over `y` (length `len - order`).
    ///
    /// Computed by repeated differencing, so constant runs give exact zeros.
    pub fn apply(order: usize, y: &[f64]) -> Vec<f64> {
        assert!(
            (1..=3).contains(&order),
            "difference order must be 1, 2 or 3"
        );
        let mut d = y.to_vec();
        for _ in 0..order {
            d = d.windows(2).map(|w| w[1] - w[0]).collect();
        }
        d
    }

    pub fn l1(order: usize, y: &[f64]) -> f64 {
        Self::apply(order, y).iter().map(|d| d.abs()).sum()
    }
}

/// One window optimization: input slice, pinned prefix and weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowProblem {
    x: Vec<f64>,
    prefix: Vec<f64>,
    lambdas: Lambdas,
}

impl WindowProblem {
    pub fn new(x: Vec<f64>, prefix: Vec<f64>, lambdas: Lambdas) -> Result<Self> {
        lambdas.validate()?;
        if x.is_empty() {
            return Err(Error::Empty("window input"));
        }
        if prefix.len() > x.len() {
            return Err(Error::LengthMismatch {
                what: "constrained prefix longer than window",
                left: prefix.len(),
                right: x.len(),
            });
        }
        if x.iter().chain(&prefix).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite window data".into()));
        }
        Ok(Self { x, prefix, lambdas })
    }

    pub fn unconstrained(x: Vec<f64>, lambdas: Lambdas) -> Result<Self> {
        Self::new(x, Vec::new(), lambdas)
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn prefix(&self) -> &[f64] {
        &self.prefix
    }

    pub fn lambdas(&self) -> Lambdas {
        self.lambdas
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Same problem with `c` added to the input and the pinned prefix.
    pub fn shifted(&self, c: f64) -> Self {
        Self {
            x: self.x.iter().map(|v| v + c).collect(),
            prefix: self.prefix.iter().map(|v| v + c).collect(),
            lambdas: self.lambdas,
        }
    }

    pub fn check_constraints(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.x.len() {
            return Err(Error::LengthMismatch {
                what: "solution vs window",
                left: y.len(),
                right: self.x.len(),
            });
        }
        for (index, (a, b)) in y.iter().zip(&self.prefix).enumerate() {
            let diff = (a - b).abs();
            if !(diff <= CONSTRAINT_TOL) {
                return Err(Error::ConstraintViolation { index, diff });
            }
        }
        Ok(())
    }
}

/// Window objective `J(y)`; `y` must honour the pinned prefix.
pub fn objective(problem: &WindowProblem, y: &[f64]) -> Result<f64> {
    problem.check_constraints(y)?;
    Ok(raw_objective(&problem.x, y, &problem.lambdas))
}

pub(crate) fn raw_objective(x: &[f64], y: &[f64], l: &Lambdas) -> f64 {
    let fid: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    let mut j = l.l0 * fid;
    for order in 1..=3 {
        let w = l.order_weight(order);
        if w != 0.0 {
            j += w * DiffStencils::l1(order, y);
        }
    }
    j
}

/// Proximal operator of `k * |.|`.
pub fn soft_threshold(v: f64, k: f64) -> f64 {
    debug_assert!(k >= 0.0);
    if v > k {
        v - k
    } else if v < -k {
        v + k
    } else {
        0.0
    }
}
