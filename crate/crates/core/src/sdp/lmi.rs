//! Linear matrix inequalities `max b^T y` s.t. `C_k - sum_i y_i A_ki >= 0`, solved as the
//! dual of a standard-form program.

use super::program::{Cone, ConicProgram, Sense, SolveStatus};
use super::solver::{solve, SolverSettings};
use crate::error::Result;
use crate::linalg::RMatrix;

#[derive(Clone, Debug)]
pub struct LmiBlock {
    pub c0: RMatrix,
    /// Per variable, upper-triangle entries `(r, c, v)` of the symmetric matrix `A_i`.
    pub terms: Vec<Vec<(usize, usize, f64)>>,
}

#[derive(Clone, Debug)]
pub struct LmiProblem {
    pub b: Vec<f64>,
    pub blocks: Vec<LmiBlock>,
}

#[derive(Clone, Debug)]
pub struct LmiSolution {
    /// Status of the LMI itself (infeasible means no `y` satisfies the inequalities).
    pub status: SolveStatus,
    pub y: Vec<f64>,
    pub value: f64,
    pub gap: f64,
}

impl LmiProblem {
    pub fn to_program(&self) -> ConicProgram {
        let mut p = ConicProgram::new(Sense::Minimize);
        let ids: Vec<usize> = self.blocks.iter().map(|b| p.add_block(Cone::Psd(b.c0.nrows()))).collect();
        for (blk, &k) in self.blocks.iter().zip(&ids) {
            let n = blk.c0.nrows();
            for r in 0..n {
                for c in r..n {
                    let v = blk.c0[(r, c)];
                    if v != 0.0 {
                        p.add_objective(p.var(k, r, c), if r == c { v } else { 2.0 * v });
                    }
                }
            }
        }
        for (i, &bi) in self.b.iter().enumerate() {
            let mut terms = Vec::new();
            for (blk, &k) in self.blocks.iter().zip(&ids) {
                for &(r, c, v) in &blk.terms[i] {
                    terms.push((p.var(k, r, c), if r == c { v } else { 2.0 * v }));
                }
            }
            p.add_constraint(terms, bi);
        }
        p
    }

    /// `C_k - sum_i y_i A_ki` for block `k`.
    pub fn slack(&self, k: usize, y: &[f64]) -> RMatrix {
        let blk = &self.blocks[k];
        let mut m = blk.c0.clone();
        for (terms, &yi) in blk.terms.iter().zip(y) {
            for &(r, c, v) in terms {
                m[(r, c)] -= yi * v;
                if r != c {
                    m[(c, r)] -= yi * v;
                }
            }
        }
        m
    }
}

pub fn solve_lmi(problem: &LmiProblem, settings: &SolverSettings) -> Result<LmiSolution> {
    let prog = problem.to_program();
    let sol = solve(&prog, settings)?;
    let status = match sol.status {
        SolveStatus::Infeasible => SolveStatus::Unbounded,
        SolveStatus::Unbounded => SolveStatus::Infeasible,
        s => s,
    };
    let value = sol.y.iter().zip(&problem.b).map(|(a, b)| a * b).sum();
    Ok(LmiSolution { status, y: sol.y, value, gap: sol.gap })
}
