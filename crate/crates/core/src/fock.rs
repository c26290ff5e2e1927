//! Truncated multi-mode Fock space: ladder operators, Toeplitz quantization
//! (anti-normal order), dequantization (normal order), Weyl generators and
//! the trace pairing.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, exp_i_hermitian, max_abs_c, CMatrix, RMatrix};
use crate::symbol::{GaussianSymbol, Monomial, PolynomialSymbol};

/// Vacuum tail above which a Weyl generator is rejected.
pub const WEYL_TAIL_TOL: f64 = 1e-8;
/// Per-column tail (probability) used to bound the exact interior of a
/// Weyl generator.
pub const COLUMN_TAIL_TOL: f64 = 1e-14;
/// Default relative residual accepted by [`dequantize`].
pub const DEQUANTIZE_TOL: f64 = 1e-9;

/// Occupations `0 ≤ nᵢ ≤ cutoff` for `modes` modes, enumerated
/// lexicographically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FockTruncation {
    modes: usize,
    cutoff: usize,
}

impl FockTruncation {
    pub fn new(modes: usize, cutoff: usize) -> Result<Self> {
        if modes == 0 {
            return Err(Error::InvalidArgument("at least one mode is required".into()));
        }
        let dim = (cutoff + 1).checked_pow(modes as u32);
        if dim.is_none_or(|d| d > 1 << 16) {
            return Err(Error::InvalidArgument(format!(
                "truncation ({cutoff}+1)^{modes} is too large for dense matrices"
            )));
        }
        Ok(Self { modes, cutoff })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        (self.cutoff + 1).pow(self.modes as u32)
    }

    pub fn index(&self, occ: &[usize]) -> usize {
        occ.iter().fold(0, |acc, &n| acc * (self.cutoff + 1) + n)
    }

    pub fn occupation(&self, mut idx: usize) -> Vec<usize> {
        let mut occ = vec![0; self.modes];
        for slot in occ.iter_mut().rev() {
            *slot = idx % (self.cutoff + 1);
            idx /= self.cutoff + 1;
        }
        occ
    }

    /// Basis positions with every `nᵢ ≤ cutoff − d`.
    pub fn interior(&self, d: usize) -> Vec<usize> {
        if d > self.cutoff {
            return Vec::new();
        }
        (0..self.dim())
            .filter(|&i| self.occupation(i).iter().all(|&n| n + d <= self.cutoff))
            .collect()
    }
}

/// Dense operator on a truncation. Matrix elements are exact on the
/// columns `nᵢ ≤ cutoff − valid_degree`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    trunc: FockTruncation,
    matrix: CMatrix,
    valid_degree: usize,
}

impl FockOperator {
    pub fn new(trunc: FockTruncation, matrix: CMatrix, valid_degree: usize) -> Result<Self> {
        let d = trunc.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::ShapeMismatch(format!(
                "operator is {}x{}, truncation has dimension {d}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self {
            trunc,
            matrix,
            valid_degree,
        })
    }

    pub fn identity(trunc: FockTruncation) -> Self {
        let d = trunc.dim();
        Self {
            trunc,
            matrix: CMatrix::identity(d, d),
            valid_degree: 0,
        }
    }

    pub fn trunc(&self) -> FockTruncation {
        self.trunc
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn valid_degree(&self) -> usize {
        self.valid_degree
    }

    pub fn with_valid_degree(mut self, d: usize) -> Self {
        self.valid_degree = d;
        self
    }

    fn same_trunc(&self, other: &Self) -> Result<()> {
        if self.trunc != other.trunc {
            return Err(Error::ShapeMismatch("operators live on different truncations".into()));
        }
        Ok(())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.same_trunc(other)?;
        Ok(Self {
            trunc: self.trunc,
            matrix: &self.matrix * &other.matrix,
            valid_degree: self.valid_degree + other.valid_degree,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_trunc(other)?;
        Ok(Self {
            trunc: self.trunc,
            matrix: &self.matrix + &other.matrix,
            valid_degree: self.valid_degree.max(other.valid_degree),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(c(-1.0)))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            trunc: self.trunc,
            matrix: &self.matrix * s,
            valid_degree: self.valid_degree,
        }
    }

    pub fn adjoint(&self) -> Self {
        Self {
            trunc: self.trunc,
            matrix: self.matrix.adjoint(),
            valid_degree: self.valid_degree,
        }
    }

    /// Largest entry of `self − other` over the columns `nᵢ ≤ cutoff − d`.
    pub fn interior_diff(&self, other: &Self, d: usize) -> Result<f64> {
        self.same_trunc(other)?;
        Ok(self
            .trunc
            .interior(d)
            .into_iter()
            .map(|col| {
                (0..self.matrix.nrows())
                    .map(|r| (self.matrix[(r, col)] - other.matrix[(r, col)]).norm())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max))
    }

    /// Largest entry over the columns `nᵢ ≤ cutoff − d`.
    pub fn interior_max(&self, d: usize) -> f64 {
        self.trunc
            .interior(d)
            .into_iter()
            .flat_map(|col| (0..self.matrix.nrows()).map(move |r| (r, col)))
            .map(|rc| self.matrix[rc].norm())
            .fold(0.0, f64::max)
    }

    /// `σ_ħ(A) = ⟨0|A|0⟩`, the state obtained by dequantizing and
    /// evaluating at the origin.
    pub fn vacuum_expectation(&self) -> Complex64 {
        self.matrix[(0, 0)]
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }
}

fn sqrt_ratio(hi: usize, lo: usize) -> f64 {
    // √(hi!/lo!) for hi ≥ lo
    ((lo + 1)..=hi).map(|j| (j as f64).sqrt()).product()
}

/// Creation and annihilation operators per mode.
pub fn build_ladders(t: FockTruncation) -> (Vec<FockOperator>, Vec<FockOperator>) {
    let dim = t.dim();
    let mut raise = Vec::with_capacity(t.modes());
    let mut lower = Vec::with_capacity(t.modes());
    for i in 0..t.modes() {
        let mut up = CMatrix::zeros(dim, dim);
        for col in 0..dim {
            let mut occ = t.occupation(col);
            if occ[i] < t.cutoff() {
                occ[i] += 1;
                up[(t.index(&occ), col)] = c((occ[i] as f64).sqrt());
            }
        }
        let down = up.adjoint();
        raise.push(FockOperator::new(t, up, 1).expect("dimensions match"));
        lower.push(FockOperator::new(t, down, 1).expect("dimensions match"));
    }
    (raise, lower)
}

/// Image of `|k⟩` under one monomial, or `None` when it leaves the
/// truncation or is annihilated.
fn monomial_action(
    mono: &Monomial,
    occ: &[usize],
    cutoff: usize,
    anti_normal: bool,
) -> Option<(Vec<usize>, f64)> {
    let mut target = Vec::with_capacity(occ.len());
    let mut weight = 1.0;
    for (i, &k) in occ.iter().enumerate() {
        let (m, n) = (mono.z[i] as usize, mono.zb[i] as usize);
        if anti_normal {
            // lowerⁿ · raiseᵐ: raise first
            let up = k + m;
            if up > cutoff || up < n {
                return None;
            }
            weight *= sqrt_ratio(up, k) * sqrt_ratio(up, up - n);
            target.push(up - n);
        } else {
            // raiseᵐ · lowerⁿ: lower first
            if k < n {
                return None;
            }
            let down = k - n;
            let up = down + m;
            if up > cutoff {
                return None;
            }
            weight *= sqrt_ratio(k, down) * sqrt_ratio(up, down);
            target.push(up);
        }
    }
    Some((target, weight))
}

fn assemble(f: &PolynomialSymbol, hbar: f64, t: FockTruncation, anti_normal: bool) -> Result<FockOperator> {
    if f.modes() != t.modes() {
        return Err(Error::ModeMismatch(f.modes(), t.modes()));
    }
    if !(hbar.is_finite() && hbar > 0.0) {
        return Err(Error::InvalidArgument(format!("hbar must be positive, got {hbar}")));
    }
    let degree = f.degree();
    if degree > t.cutoff() {
        return Err(Error::DegreeTooHigh {
            degree,
            cutoff: t.cutoff(),
        });
    }
    let dim = t.dim();
    let mut m = CMatrix::zeros(dim, dim);
    for col in 0..dim {
        let occ = t.occupation(col);
        for (mono, coeff) in f.terms() {
            if let Some((target, w)) = monomial_action(mono, &occ, t.cutoff(), anti_normal) {
                let scale = hbar.powf(mono.degree() as f64 / 2.0) * w;
                m[(t.index(&target), col)] += coeff * scale;
            }
        }
    }
    FockOperator::new(t, m, degree)
}

/// Toeplitz quantization: `zᵐz̄ⁿ ↦ ħ^{(|m|+|n|)/2}·lowerⁿ·raiseᵐ`.
pub fn toeplitz_of_symbol(f: &PolynomialSymbol, hbar: f64, t: FockTruncation) -> Result<FockOperator> {
    assemble(f, hbar, t, true)
}

/// Inverse of dequantization on polynomials:
/// `zᵐz̄ⁿ ↦ ħ^{(|m|+|n|)/2}·raiseᵐ·lowerⁿ`.
pub fn normal_ordered_operator(f: &PolynomialSymbol, hbar: f64, t: FockTruncation) -> Result<FockOperator> {
    assemble(f, hbar, t, false)
}

/// Dequantize an operator that is a ladder polynomial of degree at most its
/// `valid_degree`.
pub fn dequantize(op: &FockOperator, hbar: f64) -> Result<PolynomialSymbol> {
    dequantize_with(op, hbar, op.valid_degree(), DEQUANTIZE_TOL)
}

fn multi_range(lo: &[usize], hi: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for (&a, &b) in lo.iter().zip(hi) {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (a..=b).map(move |v| {
                    let mut next = prefix.clone();
                    next.push(v);
                    next
                })
            })
            .collect();
    }
    out
}

/// Recover the normal-ordered ladder polynomial of degree `≤ degree` that
/// matches `op` on the interior columns, by least squares per occupation
/// shift.
pub fn dequantize_with(op: &FockOperator, hbar: f64, degree: usize, tol: f64) -> Result<PolynomialSymbol> {
    if !(hbar.is_finite() && hbar > 0.0) {
        return Err(Error::InvalidArgument(format!("hbar must be positive, got {hbar}")));
    }
    let t = op.trunc();
    let n_modes = t.modes();
    let cutoff = t.cutoff();
    let interior = t.interior(degree);
    if interior.is_empty() {
        return Err(Error::DegreeTooHigh { degree, cutoff });
    }
    let interior_occ: Vec<Vec<usize>> = interior.iter().map(|&i| t.occupation(i)).collect();
    let mut out = PolynomialSymbol::zero(n_modes);

    let shifts = multi_range(&vec![0; n_modes], &vec![2 * degree; n_modes])
        .into_iter()
        .map(|v| v.into_iter().map(|x| x as i64 - degree as i64).collect::<Vec<i64>>())
        .filter(|s| s.iter().map(|x| x.unsigned_abs() as usize).sum::<usize>() <= degree);
    for shift in shifts {
        let lo: Vec<usize> = shift.iter().map(|&s| (-s).max(0) as usize).collect();
        let hi = vec![degree; n_modes];
        let unknowns: Vec<Monomial> = multi_range(&lo, &hi)
            .into_iter()
            .map(|n| Monomial {
                z: n.iter().zip(&shift).map(|(&ni, &s)| (ni as i64 + s) as u32).collect(),
                zb: n.iter().map(|&ni| ni as u32).collect(),
            })
            .filter(|m| m.degree() <= degree)
            .collect();
        let rows: Vec<(usize, Vec<usize>)> = interior
            .iter()
            .zip(&interior_occ)
            .filter(|(_, k)| k.iter().zip(&shift).all(|(&ki, &s)| ki as i64 + s >= 0))
            .map(|(&col, k)| (col, k.clone()))
            .collect();
        if rows.is_empty() {
            continue;
        }
        let mut design = RMatrix::zeros(rows.len(), unknowns.len());
        let mut rhs_re = nalgebra::DVector::zeros(rows.len());
        let mut rhs_im = nalgebra::DVector::zeros(rows.len());
        for (r, (col, k)) in rows.iter().enumerate() {
            let target: Vec<usize> = k
                .iter()
                .zip(&shift)
                .map(|(&ki, &s)| (ki as i64 + s) as usize)
                .collect();
            let entry = op.matrix()[(t.index(&target), *col)];
            rhs_re[r] = entry.re;
            rhs_im[r] = entry.im;
            for (u, mono) in unknowns.iter().enumerate() {
                if let Some((_, w)) = monomial_action(mono, k, cutoff, false) {
                    design[(r, u)] = hbar.powf(mono.degree() as f64 / 2.0) * w;
                }
            }
        }
        // Equilibrate columns before the rank test.
        let norms: Vec<f64> = (0..unknowns.len())
            .map(|u| design.column(u).norm())
            .collect();
        if norms.contains(&0.0) {
            return Err(Error::DegreeTooHigh { degree, cutoff });
        }
        for (u, &nrm) in norms.iter().enumerate() {
            design.column_mut(u).scale_mut(1.0 / nrm);
        }
        let svd = design.svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if unknowns.len() > rows.len() || smin <= 1e-12 * smax {
            return Err(Error::DegreeTooHigh { degree, cutoff });
        }
        let eps = 1e-14 * smax;
        let x_re = svd.solve(&rhs_re, eps).expect("U and V computed");
        let x_im = svd.solve(&rhs_im, eps).expect("U and V computed");
        for (u, mono) in unknowns.into_iter().enumerate() {
            out.add_term(mono, Complex64::new(x_re[u], x_im[u]) / norms[u]);
        }
    }
    let scale = out.max_coeff().max(1.0);
    let out = out.pruned(1e-13 * scale);

    let rebuilt = normal_ordered_operator(&out, hbar, t)?;
    let reference = op.interior_max(degree).max(1.0);
    let residual = op.interior_diff(&rebuilt, degree)? / reference;
    if residual > tol {
        return Err(Error::NotPolynomial { degree, residual });
    }
    Ok(out)
}

/// Closed-form dequantization of the projector `|j⟩⟨j|`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectorSymbol {
    pub occupation: Vec<usize>,
    pub hbar: f64,
}

impl ProjectorSymbol {
    /// `exp(−|z|²/ħ)·Πₖ (|zᵏ|²/ħ)^{jₖ}/jₖ!`
    pub fn eval(&self, z: &[Complex64]) -> f64 {
        self.occupation
            .iter()
            .zip(z)
            .map(|(&j, zk)| {
                let x = zk.norm_sqr() / self.hbar;
                let mut v = (-x).exp();
                for i in 1..=j {
                    v *= x / i as f64;
                }
                v
            })
            .product()
    }
}

pub fn dequantize_projector(j: &[usize], hbar: f64) -> Result<ProjectorSymbol> {
    if !(hbar.is_finite() && hbar > 0.0) {
        return Err(Error::InvalidArgument(format!("hbar must be positive, got {hbar}")));
    }
    Ok(ProjectorSymbol {
        occupation: j.to_vec(),
        hbar,
    })
}

/// Truncated coherent amplitudes `e^{−|α|²/2}·αⁿ/√n!` with `α = z̄/√ħ`.
fn coherent_vector(t: FockTruncation, hbar: f64, z: &[Complex64]) -> Vec<Complex64> {
    let per_mode: Vec<Vec<Complex64>> = z
        .iter()
        .map(|zk| {
            let alpha = zk.conj() / hbar.sqrt();
            let mut amp = vec![c((-alpha.norm_sqr() / 2.0).exp())];
            for n in 1..=t.cutoff() {
                let prev = amp[n - 1];
                amp.push(prev * alpha / (n as f64).sqrt());
            }
            amp
        })
        .collect();
    (0..t.dim())
        .map(|idx| {
            t.occupation(idx)
                .iter()
                .enumerate()
                .map(|(k, &n)| per_mode[k][n])
                .product()
        })
        .collect()
}

/// `Ξ_ħ(A)(z) = ⟨α|A|α⟩` for the coherent state at `α = z̄/√ħ`.
pub fn dequantize_at(op: &FockOperator, hbar: f64, z: &[Complex64]) -> Result<Complex64> {
    if z.len() != op.trunc().modes() {
        return Err(Error::DimensionMismatch {
            expected: op.trunc().modes(),
            got: z.len(),
        });
    }
    let v = coherent_vector(op.trunc(), hbar, z);
    let m = op.matrix();
    let mut acc = c(0.0);
    for (col, vc) in v.iter().enumerate() {
        if vc.norm() == 0.0 {
            continue;
        }
        for (row, vr) in v.iter().enumerate() {
            acc += vr.conj() * m[(row, col)] * vc;
        }
    }
    Ok(acc)
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|j| (j as f64).ln()).sum()
}

/// Poisson mass beyond `cutoff` for mean `mu`.
pub fn vacuum_tail(mu: f64, cutoff: usize) -> f64 {
    if mu == 0.0 {
        return 0.0;
    }
    let mut sum = 0.0;
    let mut n = cutoff + 1;
    loop {
        let term = (-mu + n as f64 * mu.ln() - ln_factorial(n)).exp();
        sum += term;
        if n as f64 > mu && term <= 1e-20 * sum.max(f64::MIN_POSITIVE) {
            break;
        }
        n += 1;
    }
    sum
}

/// Generalized Laguerre polynomial `L_k^{(a)}(x)`.
fn laguerre(k: usize, a: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if k == 0 {
        return prev;
    }
    let mut cur = 1.0 + a - x;
    for j in 1..k {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0 + a - x) * cur - (jf + a) * prev) / (jf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// `Σ_{n > cutoff} |⟨n|D(α)|k⟩|²` with `x = |α|²`.
pub fn displaced_column_tail(x: f64, k: usize, cutoff: usize) -> f64 {
    if x == 0.0 {
        return if k <= cutoff { 0.0 } else { 1.0 };
    }
    let mut sum = 0.0;
    let mut n = cutoff.max(k) + 1;
    let mut quiet = 0;
    loop {
        let l = laguerre(k, (n - k) as f64, x);
        let term = if l == 0.0 {
            0.0
        } else {
            (-x + (n - k) as f64 * x.ln() + ln_factorial(k) - ln_factorial(n) + 2.0 * l.abs().ln())
                .exp()
        };
        sum += term;
        quiet = if term <= 1e-22 * sum.max(1e-300) { quiet + 1 } else { 0 };
        if quiet >= 5 || n > cutoff + 400 {
            break;
        }
        n += 1;
    }
    if k > cutoff {
        1.0
    } else {
        sum
    }
}

/// `|⟨n|D(α)|k⟩|` with `x = |α|²`.
pub fn displaced_amplitude(x: f64, n: usize, k: usize) -> f64 {
    let (lo, hi) = if n < k { (n, k) } else { (k, n) };
    if x == 0.0 {
        return if n == k { 1.0 } else { 0.0 };
    }
    let l = laguerre(lo, (hi - lo) as f64, x);
    if l == 0.0 {
        return 0.0;
    }
    (0.5 * (-x + (hi - lo) as f64 * x.ln() + ln_factorial(lo) - ln_factorial(hi)) + l.abs().ln()).exp()
}

/// `W(φ) = exp(i√ħ·Σᵢ(φᵢ·raiseᵢ + φ̄ᵢ·lowerᵢ))`, by Hermitian
/// eigendecomposition of the generator.
pub fn weyl_generator(phi: &[Complex64], hbar: f64, t: FockTruncation) -> Result<FockOperator> {
    if phi.len() != t.modes() {
        return Err(Error::DimensionMismatch {
            expected: t.modes(),
            got: phi.len(),
        });
    }
    if !(hbar.is_finite() && hbar > 0.0) {
        return Err(Error::InvalidArgument(format!("hbar must be positive, got {hbar}")));
    }
    let alpha_sq: Vec<f64> = phi.iter().map(|p| hbar * p.norm_sqr()).collect();
    let tail: f64 = alpha_sq.iter().map(|&x| vacuum_tail(x, t.cutoff())).sum();
    if tail > WEYL_TAIL_TOL {
        return Err(Error::TruncationTooSmall {
            tail,
            tol: WEYL_TAIL_TOL,
        });
    }
    let (raise, lower) = build_ladders(t);
    let dim = t.dim();
    let mut gen = CMatrix::zeros(dim, dim);
    for i in 0..t.modes() {
        gen += raise[i].matrix() * phi[i] + lower[i].matrix() * phi[i].conj();
    }
    gen *= c(hbar.sqrt());
    let w = exp_i_hermitian(&gen);
    let worst = alpha_sq.iter().cloned().fold(0.0, f64::max);
    let k_bound = (0..=t.cutoff())
        .take_while(|&k| displaced_column_tail(worst, k, t.cutoff()) <= COLUMN_TAIL_TOL)
        .last();
    let valid = match k_bound {
        Some(k) => t.cutoff() - k,
        None => t.cutoff(),
    };
    FockOperator::new(t, w, valid)
}

/// `T(e^{iφ}) = exp(−(ħ/2)|φ|²)·W(φ)`.
pub fn toeplitz_exponential(phi: &[Complex64], hbar: f64, t: FockTruncation) -> Result<FockOperator> {
    let w = weyl_generator(phi, hbar, t)?;
    let norm_sq: f64 = phi.iter().map(|p| p.norm_sqr()).sum();
    Ok(w.scale(c((-(hbar / 2.0) * norm_sq).exp())))
}

/// Diagonal Toeplitz matrix of a Gaussian symbol,
/// `⟨n|T(f)|n⟩ = amplitude·Πᵢ βᵢ^{nᵢ}/(2π(βᵢ+ħ)^{nᵢ+1})`.
pub fn gaussian_toeplitz(g: &GaussianSymbol, hbar: f64, t: FockTruncation) -> Result<FockOperator> {
    if g.modes() != t.modes() {
        return Err(Error::ModeMismatch(g.modes(), t.modes()));
    }
    let dim = t.dim();
    let mut m = CMatrix::zeros(dim, dim);
    for idx in 0..dim {
        let occ = t.occupation(idx);
        m[(idx, idx)] = c(g.amplitude()
            * occ
                .iter()
                .zip(g.variances())
                .map(|(&n, &b)| gaussian_diagonal(n, b, hbar))
                .product::<f64>());
    }
    FockOperator::new(t, m, 0)
}

fn gaussian_diagonal(n: usize, beta: f64, hbar: f64) -> f64 {
    (n as f64 * beta.ln() - (n as f64 + 1.0) * (beta + hbar).ln()).exp() / (2.0 * PI)
}

/// The same diagonal entry from the anti-normal series
/// `(2πβ)⁻¹·Σⱼ C(n+j, j)(−ħ/β)ʲ`, summed to `terms` terms.
pub fn gaussian_series_entry(n: usize, beta: f64, hbar: f64, terms: usize) -> f64 {
    let x = -hbar / beta;
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 1..terms {
        term *= x * (n + j) as f64 / j as f64;
        sum += term;
    }
    sum / (2.0 * PI * beta)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct TracePairing {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub diff: f64,
    /// `true` when the right side came from numerical quadrature of
    /// `Ξ(A)·f`, `false` for the mode-factorized closed form.
    pub quadrature: bool,
}

/// Both sides of `Tr(A·T(f)) = (2πħ)^{−N}·∫Ξ(A)·f dvol` for a Gaussian `f`.
/// One-mode pairings integrate `Ξ(A)` numerically on a polar grid; for more
/// modes the integral is taken in closed form per diagonal element.
pub fn trace_pairing_check(a: &FockOperator, f: &GaussianSymbol, hbar: f64) -> Result<TracePairing> {
    let t = a.trunc();
    if f.modes() != t.modes() {
        return Err(Error::ModeMismatch(f.modes(), t.modes()));
    }
    if !(hbar.is_finite() && hbar > 0.0) {
        return Err(Error::InvalidArgument(format!("hbar must be positive, got {hbar}")));
    }
    let tf = gaussian_toeplitz(f, hbar, t)?;
    let lhs = (a.matrix() * tf.matrix()).trace();
    let (rhs, quadrature) = if t.modes() == 1 {
        (pairing_quadrature_1d(a, f, hbar)?, true)
    } else {
        let dim = t.dim();
        let mut acc = c(0.0);
        for idx in 0..dim {
            let occ = t.occupation(idx);
            let w: f64 = occ
                .iter()
                .zip(f.variances())
                .map(|(&k, &b)| radial_pairing(k, b, hbar))
                .product();
            acc += a.matrix()[(idx, idx)] * (f.amplitude() * w);
        }
        (acc, false)
    };
    Ok(TracePairing {
        lhs,
        rhs,
        diff: (lhs - rhs).norm(),
        quadrature,
    })
}

/// `(2πħ)⁻¹∫ e^{−|z|²/ħ}(|z|²/ħ)ᵏ/k!·(2πβ)⁻¹e^{−|z|²/β} dvol`
fn radial_pairing(k: usize, beta: f64, hbar: f64) -> f64 {
    // ∫₀^∞ e^{−u(1/ħ+1/β)}(u/ħ)ᵏ/k!·2π du = 2π·ħ^{−k}·s^{k+1}, s = ħβ/(ħ+β)
    let s = hbar * beta / (hbar + beta);
    ((k as f64 + 1.0) * s.ln() - k as f64 * hbar.ln()).exp() / (2.0 * PI * hbar * 2.0 * PI * beta)
        * 2.0
        * PI
}

fn pairing_quadrature_1d(a: &FockOperator, f: &GaussianSymbol, hbar: f64) -> Result<Complex64> {
    let beta = f.variances()[0];
    let cutoff = a.trunc().cutoff() as f64;
    // Radial extent: the integrand is at most e^{−u/s}·(u/ħ)^cutoff with
    // s = ħβ/(ħ+β); its mass beyond u_max is negligible.
    let s = hbar * beta / (hbar + beta);
    let u_max = s * (cutoff + 60.0 + 12.0 * (cutoff + 1.0).sqrt());
    let r_max = u_max.sqrt();
    let radial = 2001usize;
    let angular = 2 * a.trunc().cutoff() + 8;
    let h = r_max / (radial - 1) as f64;
    let mut acc = c(0.0);
    for ir in 0..radial {
        let r = ir as f64 * h;
        // composite Simpson weights
        let wr = if ir == 0 || ir == radial - 1 {
            1.0
        } else if ir % 2 == 1 {
            4.0
        } else {
            2.0
        } * h
            / 3.0;
        if r == 0.0 {
            continue;
        }
        let mut ring = c(0.0);
        for ia in 0..angular {
            let theta = 2.0 * PI * ia as f64 / angular as f64;
            let z = Complex64::from_polar(r, theta);
            ring += dequantize_at(a, hbar, &[z])? * f.eval(&[z]);
        }
        ring *= 2.0 * PI / angular as f64;
        // dvol = 2 dx dy = 2 r dr dθ
        acc += ring * (2.0 * r * wr);
    }
    Ok(acc / (2.0 * PI * hbar))
}

/// Relative difference of two operators on the interior, for reports.
pub fn relative_interior_diff(a: &FockOperator, b: &FockOperator, d: usize) -> Result<f64> {
    Ok(a.interior_diff(b, d)? / a.interior_max(d).max(b.interior_max(d)).max(1.0))
}

pub fn max_entry(op: &FockOperator) -> f64 {
    max_abs_c(op.matrix())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::{berezin_transform_poly, parse_symbol};

    fn trunc(modes: usize, cutoff: usize) -> FockTruncation {
        FockTruncation::new(modes, cutoff).unwrap()
    }

    #[test]
    fn enumeration_is_lexicographic_bijection() {
        let t = trunc(2, 3);
        assert_eq!(t.dim(), 16);
        assert_eq!(t.occupation(0), vec![0, 0]);
        assert_eq!(t.occupation(1), vec![0, 1]);
        assert_eq!(t.occupation(4), vec![1, 0]);
        for i in 0..t.dim() {
            assert_eq!(t.index(&t.occupation(i)), i);
        }
        assert_eq!(t.interior(2).len(), 4);
    }

    #[test]
    fn lowering_operator_matrix() {
        let (raise, lower) = build_ladders(trunc(1, 2));
        let s2 = 2f64.sqrt();
        let expected = CMatrix::from_row_slice(
            3,
            3,
            &[c(0.0), c(1.0), c(0.0), c(0.0), c(0.0), c(s2), c(0.0), c(0.0), c(0.0)],
        );
        assert!(max_abs_c(&(lower[0].matrix() - expected)) < 1e-15);
        assert_eq!(raise[0].matrix(), &lower[0].matrix().adjoint());
    }

    #[test]
    fn canonical_commutator_on_interior() {
        let t = trunc(2, 5);
        let (raise, lower) = build_ladders(t);
        for i in 0..2 {
            for j in 0..2 {
                let comm = lower[i].mul(&raise[j]).unwrap().sub(&raise[j].mul(&lower[i]).unwrap()).unwrap();
                let expected = if i == j {
                    FockOperator::identity(t)
                } else {
                    FockOperator::new(t, CMatrix::zeros(t.dim(), t.dim()), 0).unwrap()
                };
                assert!(comm.interior_diff(&expected, 1).unwrap() < 1e-12);
            }
        }
    }

    #[test]
    fn toeplitz_examples() {
        let t = trunc(1, 6);
        let one = toeplitz_of_symbol(&PolynomialSymbol::one(1), 0.7, t).unwrap();
        assert_eq!(one, FockOperator::identity(t));
        let (raise, _) = build_ladders(t);
        let z = toeplitz_of_symbol(&PolynomialSymbol::z(1, 0), 0.49, t).unwrap();
        assert!(z.interior_diff(&raise[0].scale(c(0.7)), 1).unwrap() < 1e-15);
        let zz = toeplitz_of_symbol(&parse_symbol("z1*zb1", None).unwrap(), 1.0, t).unwrap();
        for n in 0..6 {
            assert!((zz.matrix()[(n, n)] - c(n as f64 + 1.0)).norm() < 1e-13);
        }
        let high = parse_symbol("z1^7", None).unwrap();
        assert!(matches!(
            toeplitz_of_symbol(&high, 1.0, t),
            Err(Error::DegreeTooHigh { degree: 7, cutoff: 6 })
        ));
    }

    #[test]
    fn dequantize_examples() {
        let t = trunc(1, 8);
        let one = dequantize(&FockOperator::identity(t), 0.3).unwrap();
        assert!(one.max_coeff_diff(&PolynomialSymbol::one(1)).unwrap() < 1e-12);
        let (raise, lower) = build_ladders(t);
        let hbar: f64 = 0.3;
        let z = dequantize(&raise[0].scale(c(hbar.sqrt())), hbar).unwrap();
        assert!(z.max_coeff_diff(&PolynomialSymbol::z(1, 0)).unwrap() < 1e-12);
        let lr = lower[0].mul(&raise[0]).unwrap();
        let sym = dequantize(&lr, 1.0).unwrap();
        let expected = parse_symbol("z1*zb1 + 1", None).unwrap();
        assert!(sym.max_coeff_diff(&expected).unwrap() < 1e-12, "{sym}");
    }

    #[test]
    fn dequantize_rejects_non_polynomial() {
        let t = trunc(1, 10);
        let w = weyl_generator(&[c(0.3)], 0.5, t).unwrap().with_valid_degree(2);
        assert!(matches!(dequantize(&w, 0.5), Err(Error::NotPolynomial { .. })));
    }

    #[test]
    fn dequantize_inverts_toeplitz_as_berezin() {
        let t = trunc(2, 8);
        let f = parse_symbol("z1^2*zb1 + (0,1)*z2*zb2*zb1 - 2*zb2^2 + 0.5", None).unwrap();
        let hbar = 0.4;
        let sym = dequantize(&toeplitz_of_symbol(&f, hbar, t).unwrap(), hbar).unwrap();
        let expected = berezin_transform_poly(&f, &c(hbar));
        assert!(sym.max_coeff_diff(&expected).unwrap() < 1e-10);
    }

    #[test]
    fn projector_symbol_values() {
        let p0 = dequantize_projector(&[0], 1.0).unwrap();
        assert!((p0.eval(&[c(1.0)]) - (-1f64).exp()).abs() < 1e-15);
        let p1 = dequantize_projector(&[1], 1.0).unwrap();
        assert_eq!(p1.eval(&[c(0.0)]), 0.0);
        assert!((p1.eval(&[Complex64::new(0.6, 0.8)]) - (-1f64).exp()).abs() < 1e-15);
        // agrees with the coherent-state expectation of |1⟩⟨1|
        let t = trunc(1, 30);
        let mut m = CMatrix::zeros(31, 31);
        m[(1, 1)] = c(1.0);
        let proj = FockOperator::new(t, m, 0).unwrap();
        let z = Complex64::new(0.3, -0.5);
        assert!((dequantize_at(&proj, 0.7, &[z]).unwrap().re - dequantize_projector(&[1], 0.7).unwrap().eval(&[z])).abs() < 1e-14);
    }

    #[test]
    fn weyl_basics() {
        let t = trunc(1, 40);
        let w0 = weyl_generator(&[c(0.0)], 1.0, t).unwrap();
        assert!(max_abs_c(&(w0.matrix() - CMatrix::identity(41, 41))) < 1e-14);
        assert!(matches!(
            weyl_generator(&[c(3.0)], 1.0, trunc(1, 10)),
            Err(Error::TruncationTooSmall { .. })
        ));
        let phi = [Complex64::new(0.6, 0.8)];
        let w = toeplitz_exponential(&phi, 0.5, t).unwrap();
        assert!((w.vacuum_expectation().re - (-0.5f64).exp()).abs() < 1e-10);
        let bare = weyl_generator(&phi, 0.5, t).unwrap();
        assert!((bare.vacuum_expectation().re - (-0.25f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn weyl_interior_is_reasonable() {
        let t = trunc(1, 40);
        let w = weyl_generator(&[c(1.0)], 1.0, t).unwrap();
        let interior = t.cutoff() - w.valid_degree();
        assert!(interior >= 5, "interior up to {interior}");
    }

    #[test]
    fn column_tail_matches_vacuum_tail() {
        for x in [0.1, 0.5, 1.0] {
            let a = displaced_column_tail(x, 0, 10);
            let b = vacuum_tail(x, 10);
            assert!((a - b).abs() <= 1e-12 * b.max(1e-300), "{a} {b}");
        }
    }

    #[test]
    fn displaced_amplitudes_are_unit_columns() {
        let x: f64 = 0.7;
        let col: f64 = (0..80).map(|n| displaced_amplitude(x, n, 3).powi(2)).sum();
        assert!((col - 1.0).abs() < 1e-12);
        assert!((displaced_amplitude(x, 0, 0) - (-x / 2.0).exp()).abs() < 1e-15);
        let t = trunc(1, 40);
        let w = weyl_generator(&[c(x.sqrt())], 1.0, t).unwrap();
        assert!((w.matrix()[(5, 2)].norm() - displaced_amplitude(x, 5, 2)).abs() < 1e-12);
    }

    #[test]
    fn gaussian_series_resums() {
        for n in 0..6 {
            let s = gaussian_series_entry(n, 2.0, 0.25, 200);
            assert!((s - gaussian_diagonal(n, 2.0, 0.25)).abs() < 1e-14);
        }
    }

    #[test]
    fn trace_pairing_vacuum_projector() {
        let t = trunc(1, 12);
        let mut m = CMatrix::zeros(13, 13);
        m[(0, 0)] = c(1.0);
        let a = FockOperator::new(t, m, 0).unwrap();
        let g = GaussianSymbol::new(vec![1.0], 1.0).unwrap();
        let p = trace_pairing_check(&a, &g, 0.25).unwrap();
        let closed = 1.0 / (2.0 * PI * 1.25);
        assert!((p.lhs.re - closed).abs() < 1e-14);
        assert!((p.rhs.re - closed).abs() < 1e-9, "{} vs {closed}", p.rhs.re);
        let zero = GaussianSymbol::new(vec![1.0], 0.0).unwrap();
        let p = trace_pairing_check(&a, &zero, 0.25).unwrap();
        assert_eq!((p.lhs, p.rhs), (c(0.0), c(0.0)));
    }
}
