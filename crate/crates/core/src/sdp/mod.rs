//! Small dense complex SDPs in trace-constraint form.
//!
//! The problems met in this crate all look like
//!
//! ```text
//! maximize    t
//! subject to  X ⪰ 0,  t ≥ 0,
//!             X[j, j] = 1            (optional, every j)
//!             tr(M_i X) ≥ r0_i + r1_i·t   (or ≤)
//! ```
//!
//! with Hermitian `M_i`. [`solve`] runs a primal–dual interior-point
//! method on this form; [`randomize`] turns a relaxed solution back into a
//! vector.

mod ipm;
pub mod randomize;

use serde::{Deserialize, Serialize};

use crate::linalg::{hermitian_defect, CMat, C64};
use crate::{Error, Result};

pub use ipm::solve;
pub use randomize::{extract_phases, gaussian_randomization, RandomizationConfig};

/// Constraint matrix, either dense or as a PSD factor `U` with `M = U U^H`.
#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintMatrix {
    Dense(CMat),
    LowRank(CMat),
}

impl ConstraintMatrix {
    pub fn dim(&self) -> usize {
        match self {
            ConstraintMatrix::Dense(m) | ConstraintMatrix::LowRank(m) => m.nrows(),
        }
    }

    pub fn to_dense(&self) -> CMat {
        match self {
            ConstraintMatrix::Dense(m) => m.clone(),
            ConstraintMatrix::LowRank(u) => u * u.adjoint(),
        }
    }

    /// Frobenius norm of the represented matrix.
    pub fn frobenius_norm(&self) -> f64 {
        match self {
            ConstraintMatrix::Dense(m) => m.norm(),
            ConstraintMatrix::LowRank(u) => (u.adjoint() * u).norm(),
        }
    }

    pub(crate) fn scaled(&self, factor: f64) -> ConstraintMatrix {
        match self {
            ConstraintMatrix::Dense(m) => ConstraintMatrix::Dense(m * C64::from(factor)),
            ConstraintMatrix::LowRank(u) => ConstraintMatrix::LowRank(u * C64::from(factor.sqrt())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = ">=")]
    Geq,
    #[serde(rename = "<=")]
    Leq,
}

/// `tr(M X)  sense  rhs_const + rhs_t · t`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceConstraint {
    pub matrix: ConstraintMatrix,
    pub sense: Sense,
    pub rhs_const: f64,
    pub rhs_t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Objective {
    /// Maximize `t`.
    MaximizeT,
    /// Decide whether `t ≥ target` is attainable. The solver stops as soon
    /// as either a primal point reaching the target or a dual bound below
    /// it is certified.
    Feasibility { target: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem {
    pub dim: usize,
    pub unit_diag: bool,
    pub constraints: Vec<TraceConstraint>,
    pub objective: Objective,
}

impl SdpProblem {
    pub fn new(dim: usize, unit_diag: bool) -> Self {
        SdpProblem { dim, unit_diag, constraints: Vec::new(), objective: Objective::MaximizeT }
    }

    pub fn with_objective(mut self, objective: Objective) -> Self {
        self.objective = objective;
        self
    }

    pub fn push(&mut self, matrix: ConstraintMatrix, sense: Sense, rhs_const: f64, rhs_t: f64) {
        self.constraints.push(TraceConstraint { matrix, sense, rhs_const, rhs_t });
    }

    /// Checks shapes, finiteness and Hermitian symmetry.
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidParameter("SDP dimension must be >= 1".into()));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.matrix.dim() != self.dim {
                return Err(Error::Dimension(format!(
                    "constraint {i} has side {} but the problem has side {}",
                    c.matrix.dim(),
                    self.dim
                )));
            }
            if !c.rhs_const.is_finite() || !c.rhs_t.is_finite() {
                return Err(Error::InvalidParameter(format!("constraint {i} has a non-finite right side")));
            }
            match &c.matrix {
                ConstraintMatrix::Dense(m) => {
                    if m.ncols() != self.dim {
                        return Err(Error::Dimension(format!("constraint {i} is not square")));
                    }
                    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                        return Err(Error::InvalidParameter(format!("constraint {i} has non-finite entries")));
                    }
                    let defect = hermitian_defect(m);
                    if defect > 1e-10 {
                        return Err(Error::NotHermitian(defect));
                    }
                }
                ConstraintMatrix::LowRank(u) => {
                    if u.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                        return Err(Error::InvalidParameter(format!("constraint {i} has non-finite entries")));
                    }
                }
            }
        }
        if let Objective::Feasibility { target } = self.objective {
            if !target.is_finite() {
                return Err(Error::InvalidParameter("feasibility target must be finite".into()));
            }
        }
        Ok(())
    }

    /// Value of `t` that a given `X` supports: the largest `t ≥ 0` such
    /// that every trace constraint holds, or `None` if some constraint
    /// fails for every `t ≥ 0`. Ignores the diagonal and PSD conditions.
    pub fn supported_t(&self, x: &CMat) -> Option<f64> {
        let mut lo = 0.0f64;
        let mut hi = f64::INFINITY;
        for c in &self.constraints {
            let v = crate::linalg::trace_product_re(&c.matrix.to_dense(), x) - c.rhs_const;
            // sense(v, r1·t)
            let (v, r1) = match c.sense {
                Sense::Geq => (v, c.rhs_t),
                Sense::Leq => (-v, -c.rhs_t),
            };
            // need v ≥ r1·t
            if r1 > 0.0 {
                hi = hi.min(v / r1);
            } else if r1 < 0.0 {
                lo = lo.max(v / r1);
            } else if v < 0.0 {
                return None;
            }
        }
        (lo <= hi).then_some(hi)
    }

    /// JSON rendering for offline cross-checks against another solver.
    pub fn to_json(&self) -> serde_json::Value {
        let mat = |m: &CMat| {
            serde_json::json!({
                "rows": m.nrows(),
                "cols": m.ncols(),
                "re": m.iter().map(|z| z.re).collect::<Vec<_>>(),
                "im": m.iter().map(|z| z.im).collect::<Vec<_>>(),
            })
        };
        let constraints: Vec<_> = self
            .constraints
            .iter()
            .map(|c| {
                serde_json::json!({
                    "matrix": mat(&c.matrix.to_dense()),
                    "sense": c.sense,
                    "rhs_const": c.rhs_const,
                    "rhs_t": c.rhs_t,
                })
            })
            .collect();
        serde_json::json!({
            "dim": self.dim,
            "unit_diag": self.unit_diag,
            "objective": self.objective,
            "layout": "column-major",
            "constraints": constraints,
        })
    }

    pub fn write_json(&self, path: &std::path::Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.to_json())?;
        std::fs::write(path, text)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    MaxIters,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub x_mat: CMat,
    pub t_opt: f64,
    pub status: SdpStatus,
    /// Relative primal residual of the scaled problem.
    pub primal_residual: f64,
    /// Relative dual residual of the scaled problem.
    pub dual_residual: f64,
    /// Relative duality gap of the scaled problem.
    pub gap: f64,
    pub min_eigenvalue: f64,
    /// Upper bound on the optimal `t` from the dual iterate.
    pub dual_bound: f64,
    /// Multipliers in original units: one per unit-diagonal row (if any),
    /// then one per trace constraint.
    pub duals: Vec<f64>,
    pub iterations: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { tol: 1e-6, max_iters: 200 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_hermitian() {
        let mut p = SdpProblem::new(2, true);
        let m = CMat::from_fn(2, 2, |i, j| C64::new((i * 2 + j) as f64, 0.0));
        p.push(ConstraintMatrix::Dense(m), Sense::Geq, 0.0, 1.0);
        assert!(matches!(p.validate(), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn rejects_wrong_size() {
        let mut p = SdpProblem::new(3, true);
        p.push(ConstraintMatrix::Dense(CMat::identity(2, 2)), Sense::Geq, 0.0, 1.0);
        assert!(matches!(p.validate(), Err(Error::Dimension(_))));
    }

    #[test]
    fn json_dump_roundtrips_shape() {
        let mut p = SdpProblem::new(2, true);
        p.push(ConstraintMatrix::LowRank(CMat::from_element(2, 1, C64::new(1.0, 1.0))), Sense::Geq, 0.0, 1.0);
        let v = p.to_json();
        assert_eq!(v["dim"], 2);
        assert_eq!(v["constraints"][0]["matrix"]["re"].as_array().unwrap().len(), 4);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.json");
        p.write_json(&path).unwrap();
        let back: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn supported_t_reads_constraints() {
        let mut p = SdpProblem::new(2, true);
        p.push(ConstraintMatrix::Dense(CMat::identity(2, 2)), Sense::Geq, 0.0, 1.0);
        p.push(ConstraintMatrix::Dense(CMat::identity(2, 2) * C64::from(2.0)), Sense::Geq, 1.0, 1.0);
        assert_eq!(p.supported_t(&CMat::identity(2, 2)), Some(2.0));
    }
}
