//! Symplectic vector spaces with an inner product: restriction of an
//! off-shell Pauli-Jordan operator to its image, the polar decomposition
//! `E = |E|·U*`, the complex structure `J = E·|E|⁻¹`, the compatible metric
//! `η = ⟨·, |E|⁻¹·⟩`, canonical modes and the Laplacian spectrum.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    asymmetry, hermitian_eigen, max_abs, spectral_norm, spectral_norm_c, symmetric_eigen,
    to_complex, CMatrix, GramFrame, RMatrix, RVector, I,
};

/// Relative tolerance for gram symmetry and gram-antisymmetry of `E`.
pub const STRUCTURE_TOL: f64 = 1e-10;
/// Default relative rank tolerance for [`restrict_to_image`].
pub const DEFAULT_RANK_TOL: f64 = 1e-10;
/// Relative singular-value floor below which `E` counts as singular.
pub const SINGULAR_TOL: f64 = 1e-12;

/// Real vector space with an explicit SPD gram matrix.
#[derive(Debug, Clone)]
pub struct InnerProductSpace {
    gram: RMatrix,
    frame: GramFrame,
}

impl InnerProductSpace {
    pub fn new(gram: RMatrix) -> Result<Self> {
        if gram.nrows() != gram.ncols() || gram.nrows() == 0 {
            return Err(Error::ShapeMismatch(format!(
                "gram must be square and non-empty, got {}x{}",
                gram.nrows(),
                gram.ncols()
            )));
        }
        if asymmetry(&gram) > 1e-12 {
            return Err(Error::NotPositiveDefinite("gram is not symmetric".into()));
        }
        let (values, _) = symmetric_eigen(&gram);
        if values[0] <= 0.0 {
            return Err(Error::NotPositiveDefinite(format!(
                "smallest eigenvalue {:.3e}",
                values[0]
            )));
        }
        let frame = GramFrame::new(&gram)?;
        Ok(Self { gram, frame })
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(RMatrix::identity(dim, dim)).expect("identity gram is SPD")
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    pub fn gram(&self) -> &RMatrix {
        &self.gram
    }

    pub fn frame(&self) -> &GramFrame {
        &self.frame
    }

    pub fn is_identity(&self) -> bool {
        self.gram == RMatrix::identity(self.dim(), self.dim())
    }

    pub fn inner(&self, a: &RVector, b: &RVector) -> f64 {
        a.dot(&(&self.gram * b))
    }

    /// Gram adjoint `A* = G⁻¹·Aᵀ·G`.
    pub fn adjoint(&self, a: &RMatrix) -> RMatrix {
        self.frame
            .from_frame(&self.frame.to_frame(a).transpose())
    }
}

/// Gram-antisymmetric, invertible operator `E` on an inner product space.
#[derive(Debug, Clone)]
pub struct PauliJordanOperator {
    space: InnerProductSpace,
    matrix: RMatrix,
}

impl PauliJordanOperator {
    pub fn new(space: InnerProductSpace, matrix: RMatrix) -> Result<Self> {
        let n = space.dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::ShapeMismatch(format!(
                "E is {}x{}, gram is {n}x{n}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if n % 2 == 1 {
            return Err(Error::OddRank { rank: n });
        }
        let framed = space.frame().to_frame(&matrix);
        let residual = max_abs(&(&framed + framed.transpose())) / max_abs(&framed).max(f64::MIN_POSITIVE);
        if residual > STRUCTURE_TOL {
            return Err(Error::NotAntisymmetric { residual });
        }
        let sv = framed.clone().singular_values();
        let largest = sv.max();
        let smallest = sv.min();
        if largest == 0.0 || smallest <= SINGULAR_TOL * largest {
            return Err(Error::SingularE { smallest });
        }
        Ok(Self { space, matrix })
    }

    /// `E` on a space with identity gram.
    pub fn with_identity_gram(matrix: RMatrix) -> Result<Self> {
        let n = matrix.nrows();
        Self::new(InnerProductSpace::identity(n), matrix)
    }

    pub fn space(&self) -> &InnerProductSpace {
        &self.space
    }

    pub fn matrix(&self) -> &RMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn modes(&self) -> usize {
        self.dim() / 2
    }

    /// `E` in the gram-orthonormal frame, where it is antisymmetric.
    pub fn framed(&self) -> RMatrix {
        let f = self.space.frame().to_frame(&self.matrix);
        (&f - f.transpose()) * 0.5
    }

    /// Matrix of `ω(v₁, v₂) = ⟨v₁, E⁻¹ v₂⟩`.
    pub fn omega(&self) -> RMatrix {
        let inv = self
            .matrix
            .clone()
            .try_inverse()
            .expect("validated invertible");
        self.space.gram() * inv
    }

    /// Poisson bivector `π = ω⁻¹ = E·G⁻¹`, acting on covectors.
    pub fn poisson_bivector(&self) -> RMatrix {
        let g_inv = self
            .space
            .gram()
            .clone()
            .try_inverse()
            .expect("SPD gram");
        &self.matrix * g_inv
    }
}

/// Restrict an off-shell operator to its image.
///
/// Returns the ambient basis of the image (columns, gram-orthonormal) and
/// the restricted operator expressed in that basis, whose gram is the
/// identity. A full-rank input is returned unchanged with the identity
/// basis.
pub fn restrict_to_image(
    e_off: &RMatrix,
    gram_off: &RMatrix,
    rank_tol: f64,
) -> Result<(RMatrix, PauliJordanOperator)> {
    let n = e_off.nrows();
    if e_off.ncols() != n || gram_off.nrows() != n || gram_off.ncols() != n {
        return Err(Error::ShapeMismatch(format!(
            "E_off is {}x{}, gram is {}x{}",
            e_off.nrows(),
            e_off.ncols(),
            gram_off.nrows(),
            gram_off.ncols()
        )));
    }
    if n == 0 {
        return Err(Error::DegenerateInput);
    }
    let space = InnerProductSpace::new(gram_off.clone())?;
    let framed = space.frame().to_frame(e_off);
    let scale = max_abs(&framed);
    if scale == 0.0 {
        return Err(Error::DegenerateInput);
    }
    let residual = max_abs(&(&framed + framed.transpose())) / scale;
    if residual > STRUCTURE_TOL {
        return Err(Error::NotAntisymmetric { residual });
    }
    let framed = (&framed - framed.transpose()) * 0.5;
    let svd = framed.clone().svd(true, false);
    let sigma_max = svd.singular_values.max();
    let keep: Vec<usize> = (0..n)
        .filter(|&k| svd.singular_values[k] > rank_tol * sigma_max)
        .collect();
    let rank = keep.len();
    if rank == 0 {
        return Err(Error::DegenerateInput);
    }
    if rank % 2 == 1 {
        return Err(Error::OddRank { rank });
    }
    if rank == n {
        let op = PauliJordanOperator::new(space, e_off.clone())?;
        return Ok((RMatrix::identity(n, n), op));
    }
    let u = svd.u.expect("requested U");
    let image = RMatrix::from_fn(n, rank, |r, col| u[(r, keep[col])]);
    let projector = &image * image.transpose();

    // Pivoted Gram-Schmidt over projected coordinate axes keeps the basis
    // aligned with the input coordinates whenever the image allows it.
    let mut candidates: Vec<RVector> = (0..n)
        .map(|k| &projector * space.frame().vector_to_frame(&RVector::from_fn(n, |r, _| (r == k) as u8 as f64)))
        .collect();
    let mut chosen: Vec<RVector> = Vec::with_capacity(rank);
    for _ in 0..rank {
        let norms: Vec<f64> = candidates.iter().map(|v| v.norm()).collect();
        let best = norms.iter().cloned().fold(0.0_f64, f64::max);
        let pick = norms
            .iter()
            .position(|&x| x >= best * (1.0 - 1e-12))
            .expect("non-empty");
        let v = candidates[pick].clone() / norms[pick];
        for cand in candidates.iter_mut() {
            for _ in 0..2 {
                let proj = v.dot(cand);
                *cand -= &v * proj;
            }
        }
        chosen.push(v);
    }
    let basis_frame = RMatrix::from_columns(&chosen);
    let basis = RMatrix::from_columns(
        &chosen
            .iter()
            .map(|v| space.frame().vector_from_frame(v))
            .collect::<Vec<_>>(),
    );
    let restricted = basis_frame.transpose() * &framed * &basis_frame;
    let restricted = (&restricted - restricted.transpose()) * 0.5;
    let op = PauliJordanOperator::with_identity_gram(restricted)?;
    Ok((basis, op))
}

/// Polar decomposition of `E` together with the derived Kähler data.
#[derive(Debug, Clone)]
pub struct KahlerDecomposition {
    e: PauliJordanOperator,
    abs_e: RMatrix,
    abs_e_inv: RMatrix,
    u: RMatrix,
    j: RMatrix,
    eta: RMatrix,
    omega: RMatrix,
    thetas: Vec<f64>,
    /// Gram-orthonormal columns `(ê₁, Jê₁, ê₂, Jê₂, …)`.
    mode_basis: RMatrix,
}

/// Residuals of the structural identities of a [`KahlerDecomposition`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct KahlerResiduals {
    /// `‖E − |E|·U*‖ / ‖E‖`
    pub polar: f64,
    /// `‖E* − U·|E|‖ / ‖E‖`
    pub polar_adjoint: f64,
    /// `‖J² + 1‖`
    pub j_square: f64,
    /// `‖ω(J·, J·) − ω‖ / ‖ω‖`
    pub omega_invariance: f64,
    /// `‖η(J·, J·) − η‖ / ‖η‖`
    pub eta_invariance: f64,
    /// `‖ω(·, J·) − η‖ / ‖η‖`
    pub kahler: f64,
    /// `‖E|E| − |E|E‖ / (‖E‖·‖|E|‖)`
    pub commutator: f64,
    /// Off-diagonal and diagonal error of `|E|⁻¹` in the mode basis.
    pub mode_diagonal: f64,
}

impl KahlerResiduals {
    pub fn max(&self) -> f64 {
        [
            self.polar,
            self.polar_adjoint,
            self.j_square,
            self.omega_invariance,
            self.eta_invariance,
            self.kahler,
            self.commutator,
            self.mode_diagonal,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Compute `|E| = √(−E²)`, `U`, `J`, `η`, the mode scales `ϑᵢ` and a
/// canonical mode basis.
pub fn polar_decompose(e: &PauliJordanOperator) -> Result<KahlerDecomposition> {
    let n = e.dim();
    let frame = e.space().frame();
    let framed = e.framed();

    // −E² is symmetric PSD in the orthonormal frame.
    let neg_sq = framed.transpose() * &framed;
    let (mu, vecs) = symmetric_eigen(&neg_sq);
    if mu[0] <= 0.0 {
        return Err(Error::SingularE { smallest: mu[0].max(0.0).sqrt() });
    }
    let sqrt_mu = RMatrix::from_diagonal(&DVector::from_iterator(n, mu.iter().map(|m| m.sqrt())));
    let inv_sqrt_mu =
        RMatrix::from_diagonal(&DVector::from_iterator(n, mu.iter().map(|m| 1.0 / m.sqrt())));
    let abs_framed = &vecs * sqrt_mu * vecs.transpose();
    let abs_inv_framed = &vecs * inv_sqrt_mu * vecs.transpose();
    let j_framed = &framed * &abs_inv_framed;

    let abs_e = frame.from_frame(&abs_framed);
    let abs_e_inv = frame.from_frame(&abs_inv_framed);
    let j = frame.from_frame(&j_framed);
    let u = -&j;
    let eta = e.space().gram() * &abs_e_inv;
    let eta = (&eta + eta.transpose()) * 0.5;
    let omega = e.omega();

    // Modes from the positive spectrum of the Hermitian matrix iE.
    let herm = to_complex(&framed) * I;
    let (lambdas, uvecs) = hermitian_eigen(&herm);
    let modes = n / 2;
    let mut thetas = Vec::with_capacity(modes);
    let mut columns = Vec::with_capacity(n);
    for k in 0..modes {
        let idx = modes + k;
        let lambda = lambdas[idx];
        if lambda <= 0.0 {
            return Err(Error::SingularE { smallest: lambda.abs() });
        }
        let mut col: Vec<Complex64> = uvecs.column(idx).iter().cloned().collect();
        let biggest = col.iter().fold(0.0_f64, |a, z| a.max(z.norm()));
        if let Some(lead) = col.iter().find(|z| z.norm() > 1e-8 * biggest) {
            let phase = lead.conj() / lead.norm();
            for z in col.iter_mut() {
                *z *= phase;
            }
        }
        let sqrt2 = std::f64::consts::SQRT_2;
        let re = RVector::from_iterator(n, col.iter().map(|z| z.re * sqrt2));
        let im = RVector::from_iterator(n, col.iter().map(|z| z.im * sqrt2));
        thetas.push(1.0 / lambda);
        columns.push(frame.vector_from_frame(&re));
        columns.push(frame.vector_from_frame(&im));
    }
    let mode_basis = RMatrix::from_columns(&columns);

    Ok(KahlerDecomposition {
        e: e.clone(),
        abs_e,
        abs_e_inv,
        u,
        j,
        eta,
        omega,
        thetas,
        mode_basis,
    })
}

impl KahlerDecomposition {
    pub fn pauli_jordan(&self) -> &PauliJordanOperator {
        &self.e
    }

    pub fn space(&self) -> &InnerProductSpace {
        self.e.space()
    }

    pub fn dim(&self) -> usize {
        self.e.dim()
    }

    pub fn modes(&self) -> usize {
        self.thetas.len()
    }

    pub fn abs_e(&self) -> &RMatrix {
        &self.abs_e
    }

    pub fn abs_e_inv(&self) -> &RMatrix {
        &self.abs_e_inv
    }

    pub fn u(&self) -> &RMatrix {
        &self.u
    }

    /// Gram adjoint `U*`.
    pub fn u_adjoint(&self) -> RMatrix {
        self.space().adjoint(&self.u)
    }

    pub fn j(&self) -> &RMatrix {
        &self.j
    }

    /// Matrix of the bilinear form `η(v₁, v₂) = v₁ᵀ·η·v₂`.
    pub fn eta(&self) -> &RMatrix {
        &self.eta
    }

    /// Matrix of the symplectic form `ω`.
    pub fn omega(&self) -> &RMatrix {
        &self.omega
    }

    /// Mode scales `ϑᵢ`, descending.
    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn mode_basis(&self) -> &RMatrix {
        &self.mode_basis
    }

    /// Ground eigenvalue `λ_ħ = tr|E|⁻¹ / (2ħ)` of the Laplacian.
    pub fn lambda(&self, hbar: f64) -> f64 {
        self.abs_e_inv.trace() / (2.0 * hbar)
    }

    /// Canonical vectors `eᵢ = √(2/ϑᵢ)·êᵢ` and `fᵢ = J·eᵢ`, normalized so
    /// that `η(eᵢ, eᵢ) = 2`. In these coordinates `zⁱ = xⁱ + i·yⁱ`.
    pub fn canonical_basis(&self) -> RMatrix {
        let mut b = self.mode_basis.clone();
        for (i, theta) in self.thetas.iter().enumerate() {
            let s = (2.0 / theta).sqrt();
            b.column_mut(2 * i).scale_mut(s);
            b.column_mut(2 * i + 1).scale_mut(s);
        }
        b
    }

    /// Complex coordinates `zⁱ(v)`.
    pub fn complex_coordinates(&self, v: &RVector) -> Vec<Complex64> {
        let b = self.canonical_basis();
        let coeffs = b
            .clone()
            .lu()
            .solve(v)
            .expect("canonical basis is invertible");
        (0..self.modes())
            .map(|i| Complex64::new(coeffs[2 * i], coeffs[2 * i + 1]))
            .collect()
    }

    /// Complex components `φᵢ` of a real covector, `φ(v) = φᵢzⁱ + φ̄ᵢz̄ⁱ`.
    pub fn covector_components(&self, phi: &RVector) -> Vec<Complex64> {
        let b = self.canonical_basis();
        let on_basis = b.transpose() * phi;
        (0..self.modes())
            .map(|i| Complex64::new(on_basis[2 * i], -on_basis[2 * i + 1]) * 0.5)
            .collect()
    }

    /// Inverse of [`Self::covector_components`].
    pub fn covector_from_components(&self, comps: &[Complex64]) -> RVector {
        let b = self.canonical_basis();
        let on_basis = RVector::from_iterator(
            self.dim(),
            comps.iter().flat_map(|z| [2.0 * z.re, -2.0 * z.im]),
        );
        b.transpose()
            .lu()
            .solve(&on_basis)
            .expect("canonical basis is invertible")
    }

    pub fn residuals(&self) -> KahlerResiduals {
        let n = self.dim();
        let e = self.e.matrix();
        let norm_e = spectral_norm(e);
        let norm_abs = spectral_norm(&self.abs_e);
        let id = RMatrix::identity(n, n);
        let e_adj = self.space().adjoint(e);
        let polar = spectral_norm(&(e - &self.abs_e * self.u_adjoint())) / norm_e;
        let polar_adjoint = spectral_norm(&(e_adj - &self.u * &self.abs_e)) / norm_e;
        let j_square = spectral_norm(&(&self.j * &self.j + &id));
        let norm_omega = spectral_norm(&self.omega);
        let norm_eta = spectral_norm(&self.eta);
        let omega_invariance =
            spectral_norm(&(self.j.transpose() * &self.omega * &self.j - &self.omega)) / norm_omega;
        let eta_invariance =
            spectral_norm(&(self.j.transpose() * &self.eta * &self.j - &self.eta)) / norm_eta;
        let kahler = spectral_norm(&(&self.omega * &self.j - &self.eta)) / norm_eta;
        let commutator =
            spectral_norm(&(e * &self.abs_e - &self.abs_e * e)) / (norm_e * norm_abs);
        let b = &self.mode_basis;
        let in_modes = b.transpose() * self.space().gram() * &self.abs_e_inv * b;
        let target = RMatrix::from_diagonal(&DVector::from_iterator(
            n,
            self.thetas.iter().flat_map(|&t| [t, t]),
        ));
        let mode_diagonal = max_abs(&(in_modes - target)) / self.thetas[0];
        KahlerResiduals {
            polar,
            polar_adjoint,
            j_square,
            omega_invariance,
            eta_invariance,
            kahler,
            commutator,
            mode_diagonal,
        }
    }
}

/// One distinct value of the Laplacian spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralLevel {
    pub value: f64,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Lowest `count` distinct values of `(1/ħ)·Σᵢ(2nᵢ+1)ϑᵢ` with the number
/// of occupation multi-indices that produce each of them.
pub fn laplacian_spectrum(thetas: &[f64], hbar: f64, count: usize) -> Result<Vec<SpectralLevel>> {
    if let Some(&bad) = thetas.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        return Err(Error::InvalidTheta(bad));
    }
    if thetas.is_empty() {
        return Err(Error::InvalidArgument("no modes".into()));
    }
    if !(hbar.is_finite() && hbar > 0.0) {
        return Err(Error::InvalidArgument(format!("hbar must be positive, got {hbar}")));
    }
    if count == 0 {
        return Err(Error::InvalidArgument("count must be at least 1".into()));
    }
    let level = |occ: &[usize]| -> f64 {
        occ.iter()
            .zip(thetas)
            .map(|(&n, &t)| (2 * n + 1) as f64 * t)
            .sum()
    };
    let start = vec![0usize; thetas.len()];
    let mut heap = BinaryHeap::new();
    let mut seen = HashSet::new();
    heap.push(Reverse((Key(level(&start)), start.clone())));
    seen.insert(start);
    let mut out: Vec<(f64, usize)> = Vec::new();
    while let Some(Reverse((Key(value), occ))) = heap.pop() {
        match out.last_mut() {
            Some((last, mult)) if (value - *last).abs() <= 1e-12 * value.abs() => *mult += 1,
            _ => {
                if out.len() == count {
                    break;
                }
                out.push((value, 1));
            }
        }
        for i in 0..occ.len() {
            let mut next = occ.clone();
            next[i] += 1;
            if seen.insert(next.clone()) {
                heap.push(Reverse((Key(level(&next)), next)));
            }
        }
    }
    Ok(out
        .into_iter()
        .map(|(v, m)| SpectralLevel {
            value: v / hbar,
            multiplicity: m,
        })
        .collect())
}

/// Largest pairing distance between the non-zero spectra of `AB` and `BA`,
/// or `None` when the multisets cannot be matched within `tol`.
pub fn nonzero_spectra_distance(a: &CMatrix, b: &CMatrix, tol: f64) -> Result<Option<f64>> {
    if a.ncols() != b.nrows() || a.nrows() != b.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "A is {}x{}, B is {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let scale = (spectral_norm_c(a) * spectral_norm_c(b)).max(1.0);
    let nonzero = |m: CMatrix| -> Vec<Complex64> {
        crate::linalg::eigenvalues_general(&m)
            .into_iter()
            .filter(|z| z.norm() > tol * scale)
            .collect()
    };
    let ab = nonzero(a * b);
    let ba = nonzero(b * a);
    if ab.len() != ba.len() {
        return Ok(None);
    }
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (p, x) in ab.iter().enumerate() {
        for (q, y) in ba.iter().enumerate() {
            pairs.push(((x - y).norm(), p, q));
        }
    }
    pairs.sort_by(|l, r| l.0.total_cmp(&r.0));
    let mut used_ab = vec![false; ab.len()];
    let mut used_ba = vec![false; ba.len()];
    let mut worst = 0.0_f64;
    let mut matched = 0;
    for (d, p, q) in pairs {
        if used_ab[p] || used_ba[q] {
            continue;
        }
        used_ab[p] = true;
        used_ba[q] = true;
        worst = worst.max(d);
        matched += 1;
    }
    debug_assert_eq!(matched, ab.len());
    Ok((worst <= tol * scale).then_some(worst))
}

/// `{0} ∪ spec(AB) = {0} ∪ spec(BA)` as multisets, within `tol`.
pub fn spectra_ab_ba_check(a: &CMatrix, b: &CMatrix, tol: f64) -> Result<bool> {
    Ok(nonzero_spectra_distance(a, b, tol)?.is_some())
}

/// `2×2` rotation block `[[0, s], [−s, 0]]`.
pub fn rotation_block(scale: f64) -> RMatrix {
    RMatrix::from_row_slice(2, 2, &[0.0, scale, -scale, 0.0])
}

/// Block diagonal matrix of rotation blocks with the given scales.
pub fn block_rotation(scales: &[f64]) -> RMatrix {
    let n = 2 * scales.len();
    let mut m = RMatrix::zeros(n, n);
    for (i, &s) in scales.iter().enumerate() {
        m[(2 * i, 2 * i + 1)] = s;
        m[(2 * i + 1, 2 * i)] = -s;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_orthogonal(n: usize, rng: &mut ChaCha8Rng) -> RMatrix {
        let m = RMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        m.qr().q()
    }

    #[test]
    fn unit_rotation_decomposes_trivially() {
        let e = PauliJordanOperator::with_identity_gram(rotation_block(1.0)).unwrap();
        let k = polar_decompose(&e).unwrap();
        let id = RMatrix::identity(2, 2);
        assert!(max_abs(&(k.abs_e() - &id)) < 1e-14);
        assert!(max_abs(&(k.j() - e.matrix())) < 1e-14);
        assert!(max_abs(&(k.eta() - &id)) < 1e-14);
        assert_eq!(k.thetas().len(), 1);
        assert!((k.thetas()[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn scaled_rotation() {
        let e = PauliJordanOperator::with_identity_gram(rotation_block(2.0)).unwrap();
        let k = polar_decompose(&e).unwrap();
        assert!(max_abs(&(k.abs_e() - RMatrix::identity(2, 2) * 2.0)) < 1e-14);
        assert!((k.thetas()[0] - 0.5).abs() < 1e-14);
        assert!(max_abs(&(k.j() - e.matrix() * 0.5)) < 1e-14);
    }

    #[test]
    fn conjugated_blocks_recover_scales() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let o = random_orthogonal(4, &mut rng);
        let e = o.transpose() * block_rotation(&[1.0 / 2.0, 2.0]) * &o;
        let op = PauliJordanOperator::with_identity_gram(e).unwrap();
        let k = polar_decompose(&op).unwrap();
        assert!((k.thetas()[0] - 2.0).abs() < 1e-12);
        assert!((k.thetas()[1] - 0.5).abs() < 1e-12);
        assert!(k.residuals().max() < 1e-10, "{:?}", k.residuals());
    }

    #[test]
    fn gram_weighted_decomposition() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 6;
        let a = RMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let gram = &a * a.transpose() + RMatrix::identity(n, n);
        let s = RMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let skew = &s - s.transpose();
        // E = G⁻¹·S is gram-antisymmetric for antisymmetric S.
        let e = gram.clone().try_inverse().unwrap() * skew;
        let op = PauliJordanOperator::new(InnerProductSpace::new(gram.clone()).unwrap(), e).unwrap();
        let k = polar_decompose(&op).unwrap();
        let r = k.residuals();
        assert!(r.max() < 1e-9, "{r:?}");
        let b = k.mode_basis();
        let gram_b = b.transpose() * &gram * b;
        assert!(max_abs(&(gram_b - RMatrix::identity(n, n))) < 1e-10);
    }

    #[test]
    fn lambda_is_half_trace() {
        let e = PauliJordanOperator::with_identity_gram(block_rotation(&[2.0])).unwrap();
        let k = polar_decompose(&e).unwrap();
        // ϑ = 0.5, ħ = 0.25 → λ = 2
        assert!((k.lambda(0.25) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn restriction_removes_kernel_block() {
        let mut e = RMatrix::zeros(4, 4);
        e[(0, 1)] = 1.0;
        e[(1, 0)] = -1.0;
        let (basis, op) = restrict_to_image(&e, &RMatrix::identity(4, 4), DEFAULT_RANK_TOL).unwrap();
        assert_eq!(basis.ncols(), 2);
        assert!(max_abs(&(op.matrix() - rotation_block(1.0))) < 1e-14);
    }

    #[test]
    fn restriction_of_full_rank_is_identity() {
        let e = block_rotation(&[1.0, 3.0]);
        let (basis, op) = restrict_to_image(&e, &RMatrix::identity(4, 4), DEFAULT_RANK_TOL).unwrap();
        assert_eq!(basis, RMatrix::identity(4, 4));
        assert_eq!(op.matrix(), &e);
    }

    #[test]
    fn restriction_errors() {
        let zero = RMatrix::zeros(3, 3);
        assert!(matches!(
            restrict_to_image(&zero, &RMatrix::identity(3, 3), DEFAULT_RANK_TOL),
            Err(Error::DegenerateInput)
        ));
        let not_skew = RMatrix::identity(2, 2);
        assert!(matches!(
            restrict_to_image(&not_skew, &RMatrix::identity(2, 2), DEFAULT_RANK_TOL),
            Err(Error::NotAntisymmetric { .. })
        ));
    }

    #[test]
    fn singular_e_is_rejected() {
        let mut e = block_rotation(&[1.0, 1.0]);
        e[(2, 3)] = 0.0;
        e[(3, 2)] = 0.0;
        assert!(matches!(
            PauliJordanOperator::with_identity_gram(e),
            Err(Error::SingularE { .. })
        ));
    }

    #[test]
    fn spectrum_single_ladder() {
        let levels = laplacian_spectrum(&[1.0], 1.0, 4).unwrap();
        let values: Vec<f64> = levels.iter().map(|l| l.value).collect();
        assert_eq!(values, vec![1.0, 3.0, 5.0, 7.0]);
        assert!(levels.iter().all(|l| l.multiplicity == 1));
    }

    #[test]
    fn spectrum_two_modes() {
        let levels = laplacian_spectrum(&[1.0, 2.0], 1.0, 4).unwrap();
        let values: Vec<f64> = levels.iter().map(|l| l.value).collect();
        assert_eq!(values, vec![3.0, 5.0, 7.0, 9.0]);
        assert_eq!(levels[2].multiplicity, 2);
    }

    #[test]
    fn spectrum_rejects_bad_theta() {
        assert!(matches!(
            laplacian_spectrum(&[1.0, -0.5], 1.0, 3),
            Err(Error::InvalidTheta(_))
        ));
        assert!(matches!(
            laplacian_spectrum(&[0.0], 1.0, 3),
            Err(Error::InvalidTheta(_))
        ));
    }

    #[test]
    fn ab_ba_identity_and_nilpotent() {
        let id = CMatrix::identity(2, 2);
        assert!(spectra_ab_ba_check(&id, &id, 1e-10).unwrap());
        let a = CMatrix::from_column_slice(2, 1, &[c(1.0), c(0.0)]);
        let b = CMatrix::from_row_slice(1, 2, &[c(0.0), c(1.0)]);
        assert!(spectra_ab_ba_check(&a, &b, 1e-10).unwrap());
        assert!(matches!(
            spectra_ab_ba_check(&a, &a, 1e-10),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn covector_component_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let o = random_orthogonal(4, &mut rng);
        let e = o.transpose() * block_rotation(&[0.7, 1.9]) * &o;
        let k = polar_decompose(&PauliJordanOperator::with_identity_gram(e).unwrap()).unwrap();
        let phi = RVector::from_iterator(4, (0..4).map(|_| rng.random_range(-1.0..1.0)));
        let comps = k.covector_components(&phi);
        let back = k.covector_from_components(&comps);
        assert!((back - &phi).norm() < 1e-12);
        // φ(v) = φᵢzⁱ + c.c.
        let v = RVector::from_iterator(4, (0..4).map(|_| rng.random_range(-1.0..1.0)));
        let z = k.complex_coordinates(&v);
        let via_modes: f64 = comps.iter().zip(&z).map(|(p, z)| 2.0 * (p * z).re).sum();
        assert!((via_modes - phi.dot(&v)).abs() < 1e-12);
    }
}
