//! Causal set to SJ state, with the residual summary used by reports.

use serde::{Deserialize, Serialize};

use crate::causet::{pauli_jordan_from_green, retarded_green_2d_massless, CausalSet, GreenConvention};
use crate::error::Result;
use crate::kahler::{polar_decompose, restrict_to_image, InnerProductSpace, KahlerDecomposition, PauliJordanOperator};
use crate::linalg::{max_abs_c, spectral_norm, spectral_norm_c, RMatrix};
use crate::sj::{purity_check, sj_operator, solve_sj_axioms, QuasiFreeState, SJOperator};

/// SJ axioms, uniqueness and purity for one operator, with the commutator
/// residual relative to `‖E‖` and the purity residual relative to `‖A‖²`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct SjSummary {
    pub positivity: f64,
    pub commutator: f64,
    pub purity: f64,
    pub uniqueness: f64,
    pub theta_norm: f64,
    pub theta_square: f64,
    pub is_pure: bool,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct SjTolerances {
    pub positivity: f64,
    pub commutator: f64,
    pub purity: f64,
    pub uniqueness: f64,
    pub theta: f64,
}

impl Default for SjTolerances {
    fn default() -> Self {
        Self {
            positivity: 1e-10,
            commutator: 1e-12,
            purity: 1e-10,
            uniqueness: 1e-10,
            theta: 1e-10,
        }
    }
}

impl SjTolerances {
    /// Every tolerance replaced by `tol`.
    pub fn uniform(tol: f64) -> Self {
        Self {
            positivity: tol,
            commutator: tol,
            purity: tol,
            uniqueness: tol,
            theta: tol,
        }
    }
}

impl SjSummary {
    pub fn failures(&self, tol: &SjTolerances) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.positivity < -tol.positivity {
            out.push("positivity");
        }
        if self.commutator > tol.commutator {
            out.push("commutator");
        }
        if self.purity > tol.purity {
            out.push("purity");
        }
        if self.uniqueness > tol.uniqueness {
            out.push("uniqueness");
        }
        if (self.theta_norm - 1.0).abs() > tol.theta || self.theta_square > tol.theta {
            out.push("theta");
        }
        out
    }
}

pub fn sj_summary(e: &PauliJordanOperator, k: &KahlerDecomposition, hbar: f64) -> Result<SjSummary> {
    sj_summary_of(e, k, &sj_operator(k, e), hbar)
}

/// Summary for a candidate operator `a` in place of the closed form, used
/// for fault injection. Θ and `is_pure` still describe the SJ state of `k`.
pub fn sj_summary_of(e: &PauliJordanOperator, k: &KahlerDecomposition, a: &SJOperator, hbar: f64) -> Result<SjSummary> {
    let r = a.axiom_residuals(e);
    let norm_e = spectral_norm(&e.framed());
    let norm_a = spectral_norm_c(a.matrix());
    let solved = solve_sj_axioms(e)?;
    let uniqueness = max_abs_c(&(solved.matrix() - a.matrix())) / max_abs_c(a.matrix()).max(1.0);
    let purity = purity_check(&QuasiFreeState::sj(k, hbar)?, 1e-10)?;
    Ok(SjSummary {
        positivity: r.positivity,
        commutator: r.commutator / norm_e,
        purity: r.purity / (norm_a * norm_a),
        uniqueness,
        theta_norm: purity.norm_theta,
        theta_square: purity.theta_square,
        is_pure: purity.is_pure,
    })
}

/// Restricted operator of a causal set: `E_off` from the massless 2D
/// retarded function, restricted to its image.
pub fn causal_set_operator(c: &CausalSet, coupling: f64, rank_tol: f64) -> Result<(RMatrix, PauliJordanOperator, GreenConvention)> {
    let greens = retarded_green_2d_massless(c, coupling);
    let space = InnerProductSpace::identity(c.len());
    let e_off = pauli_jordan_from_green(&greens, &space)?;
    let (basis, op) = restrict_to_image(&e_off, space.gram(), rank_tol)?;
    Ok((basis, op, greens.convention))
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PipelineReport {
    pub elements: usize,
    pub relations: usize,
    pub rank: usize,
    pub thetas: Vec<f64>,
    pub hbar: f64,
    pub lambda: f64,
    pub kahler_residual: f64,
    pub sj: SjSummary,
    pub convention: GreenConvention,
}

impl PipelineReport {
    pub fn all_green(&self, structure_tol: f64, tol: &SjTolerances) -> bool {
        self.kahler_residual <= structure_tol && self.sj.failures(tol).is_empty()
    }
}

pub fn causal_set_report(c: &CausalSet, coupling: f64, rank_tol: f64, hbar: f64) -> Result<PipelineReport> {
    let (_, op, convention) = causal_set_operator(c, coupling, rank_tol)?;
    let k = polar_decompose(&op)?;
    Ok(PipelineReport {
        elements: c.len(),
        relations: c.relations().len(),
        rank: op.dim(),
        thetas: k.thetas().to_vec(),
        hbar,
        lambda: k.lambda(hbar),
        kahler_residual: k.residuals().max(),
        sj: sj_summary(&op, &k, hbar)?,
        convention,
    })
}
