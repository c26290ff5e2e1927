//! The Sorkin-Johnston operator `A = (|E| + iE)/2`, the quasi-free state
//! with covariance `η⁻¹`, its purity/domination data and the positivity of
//! Weyl Gram matrices.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kahler::{KahlerDecomposition, PauliJordanOperator};
use crate::linalg::{
    c, hermitian_eigen, max_abs_c, spectral_norm, spectral_norm_c, to_complex, CMatrix,
    GramFrame, RMatrix, RVector, I,
};

/// Hermitian SJ operator on the complexified space, in gram-orthonormal
/// coordinates (the ambient coordinates when the gram is the identity).
#[derive(Debug, Clone)]
pub struct SJOperator {
    matrix: CMatrix,
}

/// Residuals of the three SJ axioms.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct AxiomResiduals {
    /// Smallest eigenvalue of `A`; non-negative for a positive operator.
    pub positivity: f64,
    /// `‖A − conj(A) − iE‖`
    pub commutator: f64,
    /// `‖A·conj(A)‖`
    pub purity: f64,
}

impl SJOperator {
    /// Wrap a Hermitian, positive semi-definite matrix.
    pub fn from_matrix(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::ShapeMismatch(format!(
                "SJ operator must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let scale = max_abs_c(&matrix).max(f64::MIN_POSITIVE);
        let herm = max_abs_c(&(&matrix - matrix.adjoint())) / scale;
        if herm > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "SJ operator is not Hermitian (relative residual {herm:.3e})"
            )));
        }
        let (values, _) = hermitian_eigen(&matrix);
        if values.first().is_some_and(|&v| v < -1e-10 * scale) {
            return Err(Error::InvalidArgument(format!(
                "SJ operator is not positive (eigenvalue {:.3e})",
                values[0]
            )));
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigen(&self.matrix).0
    }

    /// Axiom residuals against `E` (framed to match the operator).
    pub fn axiom_residuals(&self, e: &PauliJordanOperator) -> AxiomResiduals {
        let a = &self.matrix;
        let conj = a.map(|z| z.conj());
        let ie = to_complex(&e.framed()) * I;
        AxiomResiduals {
            positivity: self.eigenvalues()[0],
            commutator: spectral_norm_c(&(a - &conj - ie)),
            purity: spectral_norm_c(&(a * conj)),
        }
    }

    /// Add `ε·1`, used for fault injection.
    pub fn perturbed(&self, eps: f64) -> Result<Self> {
        let n = self.matrix.nrows();
        Self::from_matrix(&self.matrix + CMatrix::identity(n, n) * c(eps))
    }
}

/// Closed form `A_SJ = (|E| + iE)/2`.
pub fn sj_operator(k: &KahlerDecomposition, e: &PauliJordanOperator) -> SJOperator {
    let frame = e.space().frame();
    let abs = frame.to_frame(k.abs_e());
    let abs = (&abs + abs.transpose()) * 0.5;
    let matrix = (to_complex(&abs) + to_complex(&e.framed()) * I) * c(0.5);
    SJOperator { matrix }
}

/// Solve the axioms directly: in the shared eigenbasis of `iE` and `−E²`
/// the real, positive, commuting root of `H² = −E²` is `|λ|` on each
/// eigenvector, and `A = (H + iE)/2`.
pub fn solve_sj_axioms(e: &PauliJordanOperator) -> Result<SJOperator> {
    let framed = e.framed();
    let n = framed.nrows();
    let (lambdas, v) = hermitian_eigen(&(to_complex(&framed) * I));
    let largest = lambdas.iter().fold(0.0_f64, |m, l| m.max(l.abs()));
    let smallest = lambdas.iter().fold(f64::INFINITY, |m, l| m.min(l.abs()));
    if smallest <= crate::kahler::SINGULAR_TOL * largest {
        return Err(Error::SingularE { smallest });
    }
    let h_diag = CMatrix::from_diagonal(&DVector::from_iterator(
        n,
        lambdas.iter().map(|l| c(l.abs())),
    ));
    let h = (&v * h_diag * v.adjoint()).map(|z| z.re);
    let h = (&h + h.transpose()) * 0.5;
    let matrix = (to_complex(&h) + to_complex(&framed) * I) * c(0.5);
    Ok(SJOperator { matrix })
}

/// Real covector together with its complex components in canonical modes.
#[derive(Debug, Clone, PartialEq)]
pub struct Covector {
    pub real: RVector,
    pub components: Vec<Complex64>,
}

impl Covector {
    pub fn from_real(k: &KahlerDecomposition, real: RVector) -> Result<Self> {
        if real.len() != k.dim() {
            return Err(Error::DimensionMismatch {
                expected: k.dim(),
                got: real.len(),
            });
        }
        let components = k.covector_components(&real);
        Ok(Self { real, components })
    }

    pub fn from_components(k: &KahlerDecomposition, components: Vec<Complex64>) -> Result<Self> {
        if components.len() != k.modes() {
            return Err(Error::DimensionMismatch {
                expected: k.modes(),
                got: components.len(),
            });
        }
        let real = k.covector_from_components(&components);
        Ok(Self { real, components })
    }

    pub fn zero(k: &KahlerDecomposition) -> Self {
        Self {
            real: RVector::zeros(k.dim()),
            components: vec![Complex64::new(0.0, 0.0); k.modes()],
        }
    }

    /// `Σᵢ |φᵢ|²`.
    pub fn norm_sq(&self) -> f64 {
        self.components.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self {
            real: &self.real * t,
            components: self.components.iter().map(|z| z * t).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            real: &self.real + &other.real,
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn neg(&self) -> Self {
        self.scaled(-1.0)
    }
}

/// Quasi-free state `σ(W(φ)) = exp(−(ħ/4)·η_G⁻¹(φ, φ))`.
#[derive(Debug, Clone)]
pub struct QuasiFreeState {
    hbar: f64,
    eta_g: RMatrix,
    eta_inverse: RMatrix,
    omega: RMatrix,
    poisson: RMatrix,
    theta: RMatrix,
}

/// Purity and domination diagnostics for a quasi-free state.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct PurityReport {
    /// `η_G`-weighted operator norm of `Θ`.
    pub norm_theta: f64,
    /// `‖Θ² + 1‖` in the same norm.
    pub theta_square: f64,
    pub is_pure: bool,
    /// `‖Θ‖ ≤ 1 + tol`
    pub dominated: bool,
}

impl QuasiFreeState {
    /// State with bilinear form `η_G` on vectors, for the symplectic
    /// structure of `e`.
    pub fn new(hbar: f64, eta_g: RMatrix, e: &PauliJordanOperator) -> Result<Self> {
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::InvalidArgument(format!("hbar must be positive, got {hbar}")));
        }
        let n = e.dim();
        if eta_g.nrows() != n || eta_g.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: eta_g.nrows(),
            });
        }
        GramFrame::new(&eta_g)?;
        let eta_inverse = eta_g
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::NotPositiveDefinite("η_G is singular".into()))?;
        let eta_inverse = (&eta_inverse + eta_inverse.transpose()) * 0.5;
        let omega = e.omega();
        // ω(v₁, v₂) = η_G(Θv₁, v₂)  ⇒  Θ = −η_G⁻¹·ω
        let theta = -(&eta_inverse * &omega);
        Ok(Self {
            hbar,
            eta_g,
            eta_inverse,
            omega,
            poisson: e.poisson_bivector(),
            theta,
        })
    }

    /// The Sorkin-Johnston state, `η_G = η`.
    pub fn sj(k: &KahlerDecomposition, hbar: f64) -> Result<Self> {
        Self::new(hbar, k.eta().clone(), k.pauli_jordan())
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn eta_g(&self) -> &RMatrix {
        &self.eta_g
    }

    pub fn eta_inverse(&self) -> &RMatrix {
        &self.eta_inverse
    }

    pub fn omega(&self) -> &RMatrix {
        &self.omega
    }

    pub fn theta(&self) -> &RMatrix {
        &self.theta
    }

    /// `{φ, φ'} = φᵀ·π·φ'` with `π = ω⁻¹ = E·G⁻¹`.
    pub fn bracket(&self, a: &RVector, b: &RVector) -> f64 {
        a.dot(&(&self.poisson * b))
    }

    /// `η_G⁻¹(φ, φ)`.
    pub fn covariance(&self, phi: &RVector) -> f64 {
        phi.dot(&(&self.eta_inverse * phi))
    }

    /// `|ω(v₁,v₂)|² − η_G(v₁,v₁)·η_G(v₂,v₂)`; positive values violate
    /// domination.
    pub fn domination_gap(&self, v1: &RVector, v2: &RVector) -> f64 {
        let w = v1.dot(&(&self.omega * v2));
        w * w - v1.dot(&(&self.eta_g * v1)) * v2.dot(&(&self.eta_g * v2))
    }
}

/// `σ(W(φ)) = exp(−(ħ/4)·φᵀ·η_G⁻¹·φ)`.
pub fn state_on_weyl(phi: &RVector, s: &QuasiFreeState) -> Result<Complex64> {
    if phi.len() != s.eta_inverse.nrows() {
        return Err(Error::DimensionMismatch {
            expected: s.eta_inverse.nrows(),
            got: phi.len(),
        });
    }
    Ok(c((-(s.hbar / 4.0) * s.covariance(phi)).exp()))
}

pub fn purity_check(s: &QuasiFreeState, tol: f64) -> Result<PurityReport> {
    if s.omega.clone().try_inverse().is_none() {
        return Err(Error::SingularOmega);
    }
    let frame = GramFrame::new(&s.eta_g)?;
    let theta = frame.to_frame(&s.theta);
    let n = theta.nrows();
    let norm_theta = spectral_norm(&theta);
    let theta_square = spectral_norm(&(&theta * &theta + RMatrix::identity(n, n)));
    Ok(PurityReport {
        norm_theta,
        theta_square,
        is_pure: (norm_theta - 1.0).abs() <= tol && theta_square <= tol,
        dominated: norm_theta <= 1.0 + tol,
    })
}

/// Gram matrix `M_ab = σ(W(φ_a)*·W(φ_b))` and its smallest eigenvalue.
pub fn state_positivity_gram(phis: &[RVector], s: &QuasiFreeState) -> Result<(CMatrix, f64)> {
    if phis.is_empty() {
        return Err(Error::InvalidArgument("empty covector list".into()));
    }
    let n = phis.len();
    let mut m = CMatrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            let diff = &phis[b] - &phis[a];
            let phase = Complex64::from_polar(1.0, -(s.hbar / 2.0) * s.bracket(&(-&phis[a]), &phis[b]));
            m[(a, b)] = phase * state_on_weyl(&diff, s)?;
        }
    }
    let min = hermitian_eigen(&m).0[0];
    Ok((m, min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kahler::{block_rotation, polar_decompose, rotation_block};
    use crate::linalg::max_abs;

    fn decomposed(e: RMatrix) -> (PauliJordanOperator, KahlerDecomposition) {
        let op = PauliJordanOperator::with_identity_gram(e).unwrap();
        let k = polar_decompose(&op).unwrap();
        (op, k)
    }

    #[test]
    fn unit_rotation_operator() {
        let (op, k) = decomposed(rotation_block(1.0));
        let a = sj_operator(&k, &op);
        let expected = CMatrix::from_row_slice(
            2,
            2,
            &[c(0.5), Complex64::new(0.0, 0.5), Complex64::new(0.0, -0.5), c(0.5)],
        );
        assert!(max_abs_c(&(a.matrix() - expected)) < 1e-15);
        let ev = a.eigenvalues();
        assert!(ev[0].abs() < 1e-14 && (ev[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn scaled_rotation_operator() {
        let (op, k) = decomposed(rotation_block(2.0));
        let ev = sj_operator(&k, &op).eigenvalues();
        assert!(ev[0].abs() < 1e-14 && (ev[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn solver_matches_block_oracle() {
        let op = PauliJordanOperator::with_identity_gram(block_rotation(&[3.0, 0.25])).unwrap();
        let a = solve_sj_axioms(&op).unwrap();
        let h = a.matrix().map(|z| z.re * 2.0);
        let expected = RMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 3.0, 0.25, 0.25]));
        assert!(max_abs(&(h - expected)) < 1e-14);
        let unit = PauliJordanOperator::with_identity_gram(rotation_block(1.0)).unwrap();
        let h = solve_sj_axioms(&unit).unwrap().matrix().map(|z| z.re * 2.0);
        assert!(max_abs(&(h - RMatrix::identity(2, 2))) < 1e-14);
    }

    #[test]
    fn weyl_state_values() {
        let (_, k) = decomposed(rotation_block(1.0));
        let s = QuasiFreeState::sj(&k, 2.0).unwrap();
        assert_eq!(state_on_weyl(&RVector::zeros(2), &s).unwrap(), c(1.0));
        // |φ|² = 1 and ħ = 2 give e⁻¹
        let phi = Covector::from_components(&k, vec![c(1.0)]).unwrap().real;
        let v = state_on_weyl(&phi, &s).unwrap().re;
        assert!((v - (-1.0_f64).exp()).abs() < 1e-15);
        let base = state_on_weyl(&phi, &s).unwrap().re;
        let scaled = state_on_weyl(&(&phi * 3.0), &s).unwrap().re;
        assert!((scaled - base.powi(9)).abs() < 1e-15);
        assert!(matches!(
            state_on_weyl(&RVector::zeros(3), &s),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn covariance_matches_mode_norm() {
        let (_, k) = decomposed(block_rotation(&[0.3, 1.7]));
        let s = QuasiFreeState::sj(&k, 1.0).unwrap();
        let phi = Covector::from_real(&k, RVector::from_vec(vec![0.2, -1.0, 0.7, 0.4])).unwrap();
        assert!((s.covariance(&phi.real) - 2.0 * phi.norm_sq()).abs() < 1e-12);
    }

    #[test]
    fn sj_state_is_pure() {
        let (_, k) = decomposed(block_rotation(&[0.3, 1.7]));
        let s = QuasiFreeState::sj(&k, 1.0).unwrap();
        assert!(max_abs(&(s.theta() - k.j())) < 1e-12);
        let r = purity_check(&s, 1e-10).unwrap();
        assert!(r.is_pure && r.dominated, "{r:?}");
    }

    #[test]
    fn doubled_metric_is_mixed() {
        let (op, k) = decomposed(block_rotation(&[0.3, 1.7]));
        let s = QuasiFreeState::new(1.0, k.eta() * 2.0, &op).unwrap();
        let r = purity_check(&s, 1e-10).unwrap();
        assert!((r.norm_theta - 0.5).abs() < 1e-12);
        assert!(!r.is_pure && r.dominated);
    }

    #[test]
    fn halved_metric_violates_domination() {
        let (op, k) = decomposed(rotation_block(1.0));
        let s = QuasiFreeState::new(1.0, k.eta() * 0.5, &op).unwrap();
        let e1 = RVector::from_vec(vec![1.0, 0.0]);
        let f1 = k.j() * &e1;
        assert!(s.domination_gap(&e1, &f1) > 0.0);
        assert!(!purity_check(&s, 1e-10).unwrap().dominated);
    }

    #[test]
    fn positivity_gram_small_cases() {
        let (_, k) = decomposed(rotation_block(1.0));
        let s = QuasiFreeState::sj(&k, 1.0).unwrap();
        let (m, min) = state_positivity_gram(&[RVector::zeros(2)], &s).unwrap();
        assert_eq!(m[(0, 0)], c(1.0));
        assert_eq!(min, 1.0);
        let phi = RVector::from_vec(vec![0.1, 0.05]);
        let (m, min) = state_positivity_gram(&[RVector::zeros(2), phi], &s).unwrap();
        let det = (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).re;
        assert!(det >= 0.0 && min >= -1e-12);
        assert!(state_positivity_gram(&[], &s).is_err());
    }

    #[test]
    fn perturbation_breaks_purity_only() {
        let (op, k) = decomposed(rotation_block(1.0));
        let a = sj_operator(&k, &op).perturbed(1e-3).unwrap();
        let r = a.axiom_residuals(&op);
        assert!(r.positivity > 0.0);
        assert!(r.commutator < 1e-14);
        assert!(r.purity > 1e-4);
    }
}
