//! Standard-form conic programs.
//!
//! A program optimizes `c^T x` subject to `A x = b` and `x` in a product of cones.
//! Variables are addressed by coordinates: a PSD block of size `n` owns the
//! `n (n + 1) / 2` upper-triangle entries `X[r][c]` with `r <= c`, and a coefficient
//! `a` on an off-diagonal coordinate multiplies the single entry `X[r][c]` (not the pair).

use std::fmt::{self, Write as _};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cone {
    Psd(usize),
    NonNeg(usize),
    Free(usize),
}

impl Cone {
    pub fn num_coords(&self) -> usize {
        match *self {
            Cone::Psd(n) => n * (n + 1) / 2,
            Cone::NonNeg(n) | Cone::Free(n) => n,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalLimit,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "OPTIMAL",
            SolveStatus::Infeasible => "INFEASIBLE",
            SolveStatus::Unbounded => "UNBOUNDED",
            SolveStatus::NumericalLimit => "NUMERICAL_LIMIT",
        })
    }
}

#[derive(Clone, Debug)]
pub struct ConicProgram {
    pub sense: Sense,
    cones: Vec<Cone>,
    offsets: Vec<usize>,
    nvars: usize,
    objective: Vec<f64>,
    constraints: Vec<Vec<(usize, f64)>>,
    rhs: Vec<f64>,
}

impl ConicProgram {
    pub fn new(sense: Sense) -> Self {
        ConicProgram {
            sense,
            cones: Vec::new(),
            offsets: Vec::new(),
            nvars: 0,
            objective: Vec::new(),
            constraints: Vec::new(),
            rhs: Vec::new(),
        }
    }

    /// Appends a cone block and returns its index.
    pub fn add_block(&mut self, cone: Cone) -> usize {
        self.offsets.push(self.nvars);
        self.nvars += cone.num_coords();
        self.objective.resize(self.nvars, 0.0);
        self.cones.push(cone);
        self.cones.len() - 1
    }

    pub fn cones(&self) -> &[Cone] {
        &self.cones
    }

    pub fn num_vars(&self) -> usize {
        self.nvars
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn constraints(&self) -> &[Vec<(usize, f64)>] {
        &self.constraints
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn block_offset(&self, block: usize) -> usize {
        self.offsets[block]
    }

    /// Global index of entry `(r, c)` of a PSD block (either order), or entry `r` of a
    /// vector block (`c` must be 0).
    pub fn var(&self, block: usize, r: usize, c: usize) -> usize {
        let off = self.offsets[block];
        match self.cones[block] {
            Cone::Psd(n) => {
                let (r, c) = if r <= c { (r, c) } else { (c, r) };
                assert!(c < n, "PSD coordinate ({r}, {c}) outside block of size {n}");
                off + tri_offset(n, r) + (c - r)
            }
            Cone::NonNeg(n) | Cone::Free(n) => {
                assert!(c == 0 && r < n, "vector coordinate ({r}, {c}) outside block of size {n}");
                off + r
            }
        }
    }

    /// Inverse of [`ConicProgram::var`]: `(block, r, c)`.
    pub fn locate(&self, var: usize) -> (usize, usize, usize) {
        let block = match self.offsets.binary_search(&var) {
            Ok(mut b) => {
                // skip empty blocks sharing the offset
                while b + 1 < self.offsets.len() && self.offsets[b + 1] == var {
                    b += 1;
                }
                b
            }
            Err(b) => b - 1,
        };
        let local = var - self.offsets[block];
        match self.cones[block] {
            Cone::Psd(n) => {
                let mut r = 0;
                while r + 1 < n && tri_offset(n, r + 1) <= local {
                    r += 1;
                }
                (block, r, r + local - tri_offset(n, r))
            }
            _ => (block, local, 0),
        }
    }

    pub fn add_objective(&mut self, var: usize, coef: f64) {
        self.objective[var] += coef;
    }

    /// Adds `sum coef * x[var] = rhs`; duplicate variables are summed.
    pub fn add_constraint(&mut self, terms: Vec<(usize, f64)>, rhs: f64) -> usize {
        let mut terms = terms;
        terms.sort_by_key(|t| t.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
        for (v, a) in terms {
            match merged.last_mut() {
                Some(last) if last.0 == v => last.1 += a,
                _ => merged.push((v, a)),
            }
        }
        merged.retain(|t| t.1 != 0.0);
        self.constraints.push(merged);
        self.rhs.push(rhs);
        self.constraints.len() - 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.objective.len() != self.nvars {
            return Err(Error::DimensionMismatch("objective length differs from variable count".into()));
        }
        for (i, row) in self.constraints.iter().enumerate() {
            if let Some(&(v, _)) = row.iter().find(|t| t.0 >= self.nvars) {
                return Err(Error::DimensionMismatch(format!(
                    "constraint {i} references variable {v} of {}",
                    self.nvars
                )));
            }
            if row.iter().any(|t| !t.1.is_finite()) || !self.rhs[i].is_finite() {
                return Err(Error::InvalidArgument(format!("constraint {i} has a non-finite entry")));
            }
        }
        if self.objective.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("objective has a non-finite entry".into()));
        }
        Ok(())
    }

    /// Sparse-triplet text dump.
    ///
    /// ```text
    /// sense max|min
    /// block <k> psd|nonneg|free <n>
    /// obj <block> <row> <col> <value>
    /// con <i> <block> <row> <col> <value>
    /// rhs <i> <value>
    /// ```
    /// PSD coordinates are upper-triangle (`row <= col`), vector coordinates use `col = 0`.
    pub fn to_triplet_text(&self) -> String {
        let mut s = String::new();
        let sense = match self.sense {
            Sense::Maximize => "max",
            Sense::Minimize => "min",
        };
        writeln!(s, "sense {sense}").unwrap();
        for (k, cone) in self.cones.iter().enumerate() {
            let (kind, n) = match *cone {
                Cone::Psd(n) => ("psd", n),
                Cone::NonNeg(n) => ("nonneg", n),
                Cone::Free(n) => ("free", n),
            };
            writeln!(s, "block {k} {kind} {n}").unwrap();
        }
        for (v, &a) in self.objective.iter().enumerate() {
            if a != 0.0 {
                let (b, r, c) = self.locate(v);
                writeln!(s, "obj {b} {r} {c} {a:e}").unwrap();
            }
        }
        for (i, row) in self.constraints.iter().enumerate() {
            for &(v, a) in row {
                let (b, r, c) = self.locate(v);
                writeln!(s, "con {i} {b} {r} {c} {a:e}").unwrap();
            }
            writeln!(s, "rhs {i} {:e}", self.rhs[i]).unwrap();
        }
        s
    }
}

/// Offset of row `r` within the packed upper triangle of an `n x n` block.
fn tri_offset(n: usize, r: usize) -> usize {
    r * n - r * r.saturating_sub(1) / 2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn var_and_locate_agree() {
        let mut p = ConicProgram::new(Sense::Minimize);
        p.add_block(Cone::NonNeg(2));
        p.add_block(Cone::Psd(4));
        p.add_block(Cone::Free(3));
        assert_eq!(p.num_vars(), 2 + 10 + 3);
        let mut seen = vec![false; p.num_vars()];
        for r in 0..4 {
            for c in r..4 {
                let v = p.var(1, r, c);
                assert_eq!(v, p.var(1, c, r));
                assert_eq!(p.locate(v), (1, r, c));
                assert!(!seen[v]);
                seen[v] = true;
            }
        }
        assert_eq!(p.locate(p.var(0, 1, 0)), (0, 1, 0));
        assert_eq!(p.locate(p.var(2, 2, 0)), (2, 2, 0));
    }

    #[test]
    fn triplet_dump_lists_nonzeros() {
        let mut p = ConicProgram::new(Sense::Maximize);
        let b = p.add_block(Cone::Psd(2));
        p.add_objective(p.var(b, 0, 1), 2.0);
        p.add_constraint(vec![(p.var(b, 0, 0), 1.0), (p.var(b, 1, 1), 1.0)], 1.0);
        let text = p.to_triplet_text();
        assert!(text.contains("block 0 psd 2"));
        assert!(text.contains("obj 0 0 1 2e0"));
        assert!(text.contains("con 0 0 1 1 1e0"));
        assert!(text.contains("rhs 0 1e0"));
    }
}
