//! Dense linear-algebra helpers shared by the decomposition, state and Fock
//! modules. Everything is a thin layer over `nalgebra`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, Schur, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type RMatrix = DMatrix<f64>;
pub type CMatrix = DMatrix<Complex64>;
pub type RVector = DVector<f64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn to_complex(m: &RMatrix) -> CMatrix {
    m.map(c)
}

pub fn max_abs(m: &RMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn max_abs_c(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.norm()))
}

/// Largest singular value.
pub fn spectral_norm(m: &RMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().max()
}

pub fn spectral_norm_c(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .singular_values()
        .iter()
        .fold(0.0_f64, |acc, &x| acc.max(x))
}

/// Eigen-decomposition of a real symmetric matrix, eigenvalues ascending.
pub fn symmetric_eigen(m: &RMatrix) -> (Vec<f64>, RMatrix) {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = RMatrix::from_fn(m.nrows(), order.len(), |r, col| {
        eig.eigenvectors[(r, order[col])]
    });
    (values, vectors)
}

/// Eigen-decomposition of a complex Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let herm = (m + m.adjoint()) * c(0.5);
    let eig = SymmetricEigen::new(herm);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), order.len(), |r, col| {
        eig.eigenvectors[(r, order[col])]
    });
    (values, vectors)
}

/// Eigenvalues of a general complex square matrix via the Schur form.
pub fn eigenvalues_general(m: &CMatrix) -> Vec<Complex64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let schur: Schur<Complex64, Dyn> = Schur::new(m.clone());
    let (_, t) = schur.unpack();
    (0..t.nrows()).map(|k| t[(k, k)]).collect()
}

/// `exp(i·H)` for Hermitian `H`, through its eigenbasis. Exactly unitary up
/// to eigensolver round-off.
pub fn exp_i_hermitian(h: &CMatrix) -> CMatrix {
    let (values, vectors) = hermitian_eigen(h);
    let phases = CMatrix::from_diagonal(&DVector::from_iterator(
        values.len(),
        values.iter().map(|&v| Complex64::from_polar(1.0, v)),
    ));
    &vectors * phases * vectors.adjoint()
}

/// Relative asymmetry `‖M − Mᵀ‖ / max(1, ‖M‖)` in the max-abs norm.
pub fn asymmetry(m: &RMatrix) -> f64 {
    max_abs(&(m - m.transpose())) / max_abs(m).max(1.0)
}

/// Cholesky frame of an SPD gram matrix `G = L·Lᵀ`.
///
/// Operators that are self- or anti-self-adjoint with respect to `G` become
/// symmetric or antisymmetric in the frame `Lᵀ·A·L⁻ᵀ`.
#[derive(Debug, Clone)]
pub struct GramFrame {
    l: RMatrix,
    l_inv: RMatrix,
}

impl GramFrame {
    pub fn new(gram: &RMatrix) -> Result<Self> {
        let chol = Cholesky::new(gram.clone())
            .ok_or_else(|| Error::NotPositiveDefinite("Cholesky factorization failed".into()))?;
        let l = chol.l();
        let l_inv = l
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::NotPositiveDefinite("singular Cholesky factor".into()))?;
        Ok(Self { l, l_inv })
    }

    pub fn to_frame(&self, a: &RMatrix) -> RMatrix {
        self.l.transpose() * a * self.l_inv.transpose()
    }

    pub fn from_frame(&self, a: &RMatrix) -> RMatrix {
        self.l_inv.transpose() * a * self.l.transpose()
    }

    pub fn to_frame_c(&self, a: &CMatrix) -> CMatrix {
        to_complex(&self.l.transpose()) * a * to_complex(&self.l_inv.transpose())
    }

    /// Frame coordinates of an ambient vector.
    pub fn vector_to_frame(&self, v: &RVector) -> RVector {
        self.l.transpose() * v
    }

    /// Ambient vector from frame coordinates.
    pub fn vector_from_frame(&self, v: &RVector) -> RVector {
        self.l_inv.transpose() * v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gram_frame_round_trip() {
        let g = RMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let frame = GramFrame::new(&g).unwrap();
        let a = RMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let back = frame.from_frame(&frame.to_frame(&a));
        assert!(max_abs(&(back - a)) < 1e-14);
    }

    #[test]
    fn non_spd_gram_is_rejected() {
        let g = RMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(GramFrame::new(&g).is_err());
    }

    #[test]
    fn exp_of_hermitian_is_unitary() {
        let h = CMatrix::from_fn(4, 4, |r, s| {
            Complex64::new((r + s) as f64 * 0.3, r as f64 - s as f64)
        });
        let u = exp_i_hermitian(&(&h + h.adjoint()));
        let err = max_abs_c(&(u.adjoint() * &u - CMatrix::identity(4, 4)));
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn schur_eigenvalues_of_triangular() {
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[c(2.0), c(5.0), c(0.0), Complex64::new(0.0, 3.0)],
        );
        let mut ev = eigenvalues_general(&m);
        ev.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert!((ev[0] - Complex64::new(0.0, 3.0)).norm() < 1e-12);
        assert!((ev[1] - c(2.0)).norm() < 1e-12);
    }
}
