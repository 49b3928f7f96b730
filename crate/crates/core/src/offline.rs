//! Whole-sequence optimization of the window objective (no window, no pinned
//! prefix). Used to produce pseudo ground truth and as the limit the online
//! filter approaches as its window grows.

use serde::{Deserialize, Serialize};

use crate::convex::{solve_window, Lambdas, SolverParams, WindowProblem};
use crate::error::{Error, Result};

pub const MIN_LEN: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfflineProblem {
    pub x: Vec<f64>,
    pub lambdas: Lambdas,
    pub params: SolverParams,
}

pub fn offline_optimize(problem: &OfflineProblem) -> Result<Vec<f64>> {
    if problem.x.len() < MIN_LEN {
        return Err(Error::InputTooShort {
            len: problem.x.len(),
            min: MIN_LEN,
        });
    }
    let window = WindowProblem::unconstrained(problem.x.clone(), problem.lambdas)?;
    solve_window(&window, &problem.params)
}
