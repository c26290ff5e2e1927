//! Numbered diagnostic checks over random ensembles, closed forms and
//! independent reference computations.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::causet::{sprinkle_diamond_2d, DEFAULT_COUPLING};
use crate::cfield::{classical_limit_berezin, HbarGrid};
use crate::error::Result;
use crate::fock::{
    build_ladders, dequantize, displaced_amplitude, displaced_column_tail, relative_interior_diff,
    toeplitz_of_symbol, weyl_generator, FockOperator, FockTruncation,
};
use crate::kahler::{
    block_rotation, laplacian_spectrum, nonzero_spectra_distance, polar_decompose, rotation_block,
    InnerProductSpace, KahlerDecomposition, PauliJordanOperator, DEFAULT_RANK_TOL,
};
use crate::linalg::{c, spectral_norm_c, CMatrix, RMatrix, RVector};
use crate::pipeline::{causal_set_report, sj_summary, SjTolerances};
use crate::sj::{purity_check, state_on_weyl, state_positivity_gram, Covector, QuasiFreeState};
use crate::symbol::{
    berezin_quadrature_1d, berezin_transform_gaussian, exp_remainder_bound_check,
    gauge_relation_check, random_polynomial, star_remainder_exponentials,
    star_t, star_xi, star_zeta, GaussianSymbol, PolynomialSymbol,
};

/// Outcome of one numbered check.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Check {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    /// Worst observed value of the checked quantity.
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

impl Check {
    fn new(id: u32, name: &str, passed: bool, value: f64, threshold: f64, detail: String) -> Self {
        Self {
            id,
            name: name.into(),
            passed,
            value,
            threshold,
            detail,
        }
    }

    fn errored(id: u32, name: &str, err: crate::Error) -> Self {
        Self::new(id, name, false, f64::NAN, f64::NAN, format!("error: {err}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Fock cutoff for the Weyl and state checks.
    pub cutoff: usize,
    pub grid: HbarGrid,
    /// Replaces every residual tolerance when set.
    pub tol: Option<f64>,
    pub density: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            cutoff: 40,
            grid: HbarGrid::standard(),
            tol: None,
            density: 100.0,
        }
    }
}

impl SuiteConfig {
    fn thr(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }

    fn sj_tolerances(&self) -> SjTolerances {
        self.tol.map(SjTolerances::uniform).unwrap_or_default()
    }
}

/// Per-mode cutoff for the two-mode state identity cases.
pub const TWO_MODE_STATE_CUTOFF: usize = 10;

/// Cutoff used by the star-product checks.
pub const STAR_CUTOFF: usize = 16;

fn normal<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Random symmetric positive definite gram, `BBᵀ/n + 1/2`.
pub fn random_gram<R: Rng>(dim: usize, rng: &mut R) -> RMatrix {
    let b = RMatrix::from_fn(dim, dim, |_, _| normal(rng));
    let g = &b * b.transpose() / dim as f64 + RMatrix::identity(dim, dim) * 0.5;
    (&g + g.transpose()) * 0.5
}

/// Random invertible gram-antisymmetric operator, `E = G⁻¹·S` with `S`
/// antisymmetric.
pub fn random_pauli_jordan<R: Rng>(dim: usize, rng: &mut R) -> PauliJordanOperator {
    loop {
        let g = random_gram(dim, rng);
        let a = RMatrix::from_fn(dim, dim, |_, _| normal(rng));
        let s = &a - a.transpose();
        let Some(g_inv) = g.clone().try_inverse() else { continue };
        let Ok(space) = InnerProductSpace::new(g) else { continue };
        if let Ok(op) = PauliJordanOperator::new(space, g_inv * s) {
            return op;
        }
    }
}

/// The 50-member ensemble with `dim = 2, 4, …, 40`.
pub fn sj_ensemble(seed: u64) -> Vec<PauliJordanOperator> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..50).map(|i| random_pauli_jordan(2 * (1 + i % 20), &mut rng)).collect()
}

fn check_sj_axioms(cfg: &SuiteConfig) -> Result<Check> {
    let tol = cfg.sj_tolerances();
    let mut worst_pos = f64::INFINITY;
    let mut worst_comm = 0.0f64;
    let mut worst_pur = 0.0f64;
    for e in sj_ensemble(cfg.seed) {
        let k = polar_decompose(&e)?;
        let s = sj_summary(&e, &k, 1.0)?;
        worst_pos = worst_pos.min(s.positivity);
        worst_comm = worst_comm.max(s.commutator);
        worst_pur = worst_pur.max(s.purity);
    }
    let passed = worst_pos >= -tol.positivity && worst_comm <= tol.commutator && worst_pur <= tol.purity;
    Ok(Check::new(
        1,
        "sj_axioms",
        passed,
        worst_comm.max(worst_pur),
        tol.commutator.min(tol.purity),
        format!(
            "50 operators, dim<=40: min eig {worst_pos:.3e} (>= -{:.0e}), commutator/|E| {worst_comm:.3e} (<= {:.0e}), purity/|A|^2 {worst_pur:.3e} (<= {:.0e})",
            tol.positivity, tol.commutator, tol.purity
        ),
    ))
}

fn check_sj_uniqueness(cfg: &SuiteConfig) -> Result<Check> {
    let thr = cfg.thr(1e-10);
    let mut worst = 0.0f64;
    for e in sj_ensemble(cfg.seed) {
        let k = polar_decompose(&e)?;
        worst = worst.max(sj_summary(&e, &k, 1.0)?.uniqueness);
    }
    Ok(Check::new(
        2,
        "sj_uniqueness",
        worst <= thr,
        worst,
        thr,
        "eigenbasis solution of the axioms vs (|E|+iE)/2, 50 operators".into(),
    ))
}

fn check_purity(cfg: &SuiteConfig) -> Result<Check> {
    let thr = cfg.thr(1e-10);
    let mut ops: Vec<PauliJordanOperator> = sj_ensemble(cfg.seed).into_iter().take(10).collect();
    ops.push(PauliJordanOperator::with_identity_gram(rotation_block(1.0))?);
    let mut worst = 0.0f64;
    let mut scaled_pure = false;
    for e in &ops {
        let k = polar_decompose(e)?;
        let sj = purity_check(&QuasiFreeState::sj(&k, 1.0)?, thr)?;
        worst = worst.max((sj.norm_theta - 1.0).abs()).max(sj.theta_square);
        let scaled = purity_check(&QuasiFreeState::new(1.0, k.eta() * 2.0, e)?, thr)?;
        worst = worst.max((scaled.norm_theta - 0.5).abs());
        scaled_pure |= scaled.is_pure;
    }
    Ok(Check::new(
        3,
        "purity_domination",
        worst <= thr && !scaled_pure,
        worst,
        thr,
        format!("|Theta|=1, Theta^2=-1 for SJ; |Theta|=0.5 and impure for eta_G=2eta; scaled reported pure: {scaled_pure}"),
    ))
}

/// Distinct values and multiplicities of `(1/ħ)Σ(2nᵢ+1)ϑᵢ` over
/// `nᵢ ≤ max_occ`, keeping only values below the first one that a larger
/// occupation could reach.
pub fn brute_force_spectrum(thetas: &[f64], hbar: f64, max_occ: usize) -> Vec<(f64, usize)> {
    let n = thetas.len();
    let base: f64 = thetas.iter().sum();
    let ceiling = thetas
        .iter()
        .map(|t| base + 2.0 * (max_occ + 1) as f64 * t)
        .fold(f64::INFINITY, f64::min);
    let mut values = Vec::new();
    let mut occ = vec![0usize; n];
    loop {
        let v: f64 = occ.iter().zip(thetas).map(|(&k, &t)| (2 * k + 1) as f64 * t).sum();
        if v < ceiling * (1.0 - 1e-12) {
            values.push(v);
        }
        let mut i = 0;
        while i < n {
            occ[i] += 1;
            if occ[i] <= max_occ {
                break;
            }
            occ[i] = 0;
            i += 1;
        }
        if i == n {
            break;
        }
    }
    values.sort_by(f64::total_cmp);
    let mut out: Vec<(f64, usize)> = Vec::new();
    for v in values {
        match out.last_mut() {
            Some((last, m)) if (v - *last).abs() <= 1e-12 * v => *m += 1,
            _ => out.push((v, 1)),
        }
    }
    out.into_iter().map(|(v, m)| (v / hbar, m)).collect()
}

fn check_spectrum(cfg: &SuiteConfig) -> Result<Check> {
    let thr = cfg.thr(1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5bec);
    let mut sets: Vec<Vec<f64>> = vec![
        vec![1.0],
        vec![1.0, 1.0],
        vec![1.0, 0.5],
        vec![1.0, 1.0, 1.0],
        vec![0.75, 0.5, 0.25],
        vec![2.0, 1.0, 1.0],
    ];
    for n in 1..=3 {
        for _ in 0..3 {
            sets.push((0..n).map(|_| rng.random_range(0.1..2.0)).collect());
        }
    }
    let mut mismatches = 0usize;
    let mut worst_value = 0.0f64;
    let mut worst_lowest = 0.0f64;
    let mut levels_checked = 0usize;
    for thetas in &sets {
        let e = PauliJordanOperator::with_identity_gram(block_rotation(
            &thetas.iter().map(|t| 1.0 / t).collect::<Vec<_>>(),
        ))?;
        let k = polar_decompose(&e)?;
        for &hbar in cfg.grid.positive() {
            let brute = brute_force_spectrum(thetas, hbar, 12);
            let gen = laplacian_spectrum(thetas, hbar, brute.len())?;
            levels_checked += brute.len();
            if gen.len() != brute.len() {
                mismatches += 1;
                continue;
            }
            for (g, (v, m)) in gen.iter().zip(&brute) {
                if g.multiplicity != *m {
                    mismatches += 1;
                }
                worst_value = worst_value.max((g.value - v).abs() / v);
            }
            worst_lowest = worst_lowest.max((gen[0].value - k.lambda(hbar)).abs() / k.lambda(hbar));
        }
    }
    let passed = mismatches == 0 && worst_value <= thr && worst_lowest <= thr;
    Ok(Check::new(
        4,
        "laplacian_spectrum",
        passed,
        worst_value.max(worst_lowest),
        thr,
        format!(
            "{} theta sets x {} hbar values, {levels_checked} levels: multiplicity mismatches {mismatches}, lowest vs tr|E|^-1/(2 hbar) {worst_lowest:.3e}",
            sets.len(),
            cfg.grid.positive().len()
        ),
    ))
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).map(|i| (n - i) as f64 / (i + 1) as f64).product()
}

fn power(op: &FockOperator, k: usize) -> Result<FockOperator> {
    let mut out = FockOperator::identity(op.trunc());
    for _ in 0..k {
        out = out.mul(op)?;
    }
    Ok(out)
}

/// `[(a⁻)ᵐ, (a⁺)ⁿ]` against its anti-normal and normal expansions; returns
/// the two relative interior residuals.
pub fn higher_commutator_residuals(m: usize, n: usize, cutoff: usize) -> Result<(f64, f64)> {
    let t = FockTruncation::new(1, cutoff)?;
    let (raise, lower) = build_ladders(t);
    let (r, l) = (&raise[0], &lower[0]);
    let lhs = power(l, m)?.mul(&power(r, n)?)?.sub(&power(r, n)?.mul(&power(l, m)?)?)?;
    let d = m + n;
    let mut anti = FockOperator::new(t, CMatrix::zeros(t.dim(), t.dim()), d)?;
    let mut normal = anti.clone();
    for k in 1..=m.min(n) {
        let w = (1..=k).map(|x| x as f64).product::<f64>() * binomial(m, k) * binomial(n, k);
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        anti = anti.add(&power(l, m - k)?.mul(&power(r, n - k)?)?.scale(c(sign * w)))?;
        normal = normal.add(&power(r, n - k)?.mul(&power(l, m - k)?)?.scale(c(w)))?;
    }
    Ok((
        relative_interior_diff(&lhs, &anti, d)?,
        relative_interior_diff(&lhs, &normal, d)?,
    ))
}

fn check_ladders(cfg: &SuiteConfig) -> Result<Check> {
    let thr = cfg.thr(1e-12);
    let mut worst_ccr = 0.0f64;
    for (modes, cutoff) in [(1usize, 12usize), (2, 6)] {
        let t = FockTruncation::new(modes, cutoff)?;
        let (raise, lower) = build_ladders(t);
        let zero = FockOperator::new(t, CMatrix::zeros(t.dim(), t.dim()), 0)?;
        for i in 0..modes {
            for j in 0..modes {
                let comm = lower[i].mul(&raise[j])?.sub(&raise[j].mul(&lower[i])?)?;
                let expected = if i == j { FockOperator::identity(t) } else { zero.clone() };
                worst_ccr = worst_ccr.max(comm.interior_diff(&expected, 1)?);
            }
        }
    }
    let mut worst_high = 0.0f64;
    for m in 1..=4 {
        for n in 1..=4 {
            let (a, b) = higher_commutator_residuals(m, n, 12)?;
            worst_high = worst_high.max(a).max(b);
        }
    }
    Ok(Check::new(
        5,
        "ladder_identities",
        worst_ccr <= thr && worst_high <= thr,
        worst_ccr.max(worst_high),
        thr,
        format!("[a,a+]=1 on interior: {worst_ccr:.3e}; [a^m,(a+)^n] both orderings, m,n<=4, cutoff 12: {worst_high:.3e} (relative)"),
    ))
}

/// Relative residuals of `T(f)T(g) = T(f ⋆_T g)` and
/// `Ξ(T(f)T(g)) = Ξ(T(f)) ⋆_Ξ Ξ(T(g))`.
pub fn star_product_residuals(
    f: &PolynomialSymbol,
    g: &PolynomialSymbol,
    hbar: f64,
    t: FockTruncation,
) -> Result<(f64, f64)> {
    let tf = toeplitz_of_symbol(f, hbar, t)?;
    let tg = toeplitz_of_symbol(g, hbar, t)?;
    let prod = tf.mul(&tg)?;
    let d = prod.valid_degree();
    let tstar = toeplitz_of_symbol(&star_t(f, g, &c(hbar))?, hbar, t)?;
    let toeplitz = relative_interior_diff(&prod, &tstar, d)?;
    let xi_prod = dequantize(&prod, hbar)?;
    let xi_star = star_xi(&dequantize(&tf, hbar)?, &dequantize(&tg, hbar)?, &c(hbar))?;
    let dequant = xi_prod.max_coeff_diff(&xi_star)? / xi_star.max_coeff().max(1.0);
    Ok((toeplitz, dequant))
}

fn check_star_products(cfg: &SuiteConfig) -> Result<Check> {
    let thr = cfg.thr(1e-10);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x57a2);
    let mut cases = Vec::new();
    for modes in 1..=2 {
        for &hbar in &[1.0, 0.25] {
            for _ in 0..3 {
                let f = random_polynomial(modes, 4, &mut rng);
                let g = random_polynomial(modes, 4, &mut rng);
                cases.push((modes, hbar, f, g));
            }
        }
    }
    let results = cases
        .par_iter()
        .map(|(modes, hbar, f, g)| star_product_residuals(f, g, *hbar, FockTruncation::new(*modes, STAR_CUTOFF)?))
        .collect::<Result<Vec<_>>>()?;
    let worst_t = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let worst_x = results.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(Check::new(
        6,
        "star_products",
        worst_t <= thr && worst_x <= thr,
        worst_t.max(worst_x),
        thr,
        format!(
            "{} random pairs, degree<=4, N<=2, cutoff {STAR_CUTOFF}: Toeplitz {worst_t:.3e}, dequantized {worst_x:.3e}",
            cases.len()
        ),
    ))
}

fn check_gauge(cfg: &SuiteConfig) -> Result<Check> {
    let thr = cfg.thr(1e-10);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x6a09);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let modes = 1 + i % 2;
        let f = random_polynomial(modes, 3, &mut rng);
        let g = random_polynomial(modes, 3, &mut rng);
        let hbar: f64 = rng.random_range(0.01..1.0);
        worst = worst.max(gauge_relation_check(&f, &g, &c(hbar))?);
    }
    Ok(Check::new(
        7,
        "gauge_relation",
        worst <= thr,
        worst,
        thr,
        "B(f *_T g) vs Bf *_Xi Bg, 100 random pairs, degree<=3, N<=2".into(),
    ))
}

fn check_gaussian_berezin(cfg: &SuiteConfig) -> Result<Check> {
    let thr = cfg.thr(1e-6);
    let mut worst = 0.0f64;
    for &beta in &[0.5, 1.0, 2.0] {
        for &hbar in &[0.1, 0.25] {
            let g = GaussianSymbol::new(vec![beta], 1.0)?;
            let closed = berezin_transform_gaussian(&g, hbar);
            let reach = 4.0 * (beta + hbar).sqrt();
            for ir in 0..=8 {
                for ia in 0..3 {
                    let z = Complex64::from_polar(reach * ir as f64 / 8.0, 2.0 * PI * ia as f64 / 3.0 + 0.3);
                    let q = berezin_quadrature_1d(&g, hbar, z, 201)?;
                    worst = worst.max((q - closed.eval(&[z])).abs());
                }
            }
        }
    }
    Ok(Check::new(
        8,
        "gaussian_berezin",
        worst <= thr,
        worst,
        thr,
        "quadrature of b_hbar * f vs variance beta+hbar, beta in {0.5,1,2}, hbar in {0.1,0.25}".into(),
    ))
}

/// Amplitude error budget per column of the product relation.
pub const BCH_COLUMN_TOL: f64 = 1e-7;

/// Estimated amplitude error of column `k` of a truncated one-mode Weyl
/// generator.
fn column_error(x: f64, k: usize, cutoff: usize) -> f64 {
    displaced_column_tail(x, k, cutoff).sqrt()
}

/// Columns `0..=k` on which `W(φ)W(φ')` and `W(φ+φ')` are both exact to
/// [`BCH_COLUMN_TOL`]: the error of `W(φ')|k⟩` plus the errors of `W(φ)` on
/// the columns it reaches, weighted by their amplitudes.
pub fn bch_columns(x1: f64, x2: f64, x12: f64, cutoff: usize) -> Option<usize> {
    let err1: Vec<f64> = (0..=cutoff).map(|j| column_error(x1, j, cutoff)).collect();
    (0..=cutoff)
        .take_while(|&k| {
            let carried: f64 = (0..=cutoff)
                .map(|j| displaced_amplitude(x2, j, k) * err1[j])
                .sum();
            carried + column_error(x2, k, cutoff) + column_error(x12, k, cutoff) <= BCH_COLUMN_TOL
        })
        .last()
}

/// Real covector of one-mode components for the unit rotation, which
/// carries the canonical bracket.
fn unit_mode() -> Result<KahlerDecomposition> {
    polar_decompose(&PauliJordanOperator::with_identity_gram(rotation_block(1.0))?)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct WeylResiduals {
    pub adjoint: f64,
    pub norm: f64,
    pub bch: f64,
    pub bch_columns: usize,
}

/// Adjoint, norm and product-relation residuals for one-mode Weyl
/// generators. The product phase uses the bracket of the real covectors.
pub fn weyl_residuals(phi: Complex64, phi2: Complex64, hbar: f64, cutoff: usize) -> Result<WeylResiduals> {
    let t = FockTruncation::new(1, cutoff)?;
    let k = unit_mode()?;
    let state = QuasiFreeState::sj(&k, hbar)?;
    let w1 = weyl_generator(&[phi], hbar, t)?;
    let w1_neg = weyl_generator(&[-phi], hbar, t)?;
    let w2 = weyl_generator(&[phi2], hbar, t)?;
    let w12 = weyl_generator(&[phi + phi2], hbar, t)?;
    let adjoint = w1.adjoint().interior_diff(&w1_neg, w1.valid_degree())?;
    let norm = (spectral_norm_c(w1.matrix()) - 1.0).abs().max(
        (crate::cfield::interior_norm(&w1) - 1.0).abs(),
    );
    let a = Covector::from_components(&k, vec![phi])?;
    let b = Covector::from_components(&k, vec![phi2])?;
    let bracket = state.bracket(&a.real, &b.real);
    let phase = Complex64::from_polar(1.0, -(hbar / 2.0) * bracket);
    let x = |p: Complex64| hbar * p.norm_sqr();
    let cols = bch_columns(x(phi), x(phi2), x(phi + phi2), cutoff).ok_or(crate::Error::TruncationTooSmall {
        tail: displaced_column_tail(x(phi2), 0, cutoff),
        tol: BCH_COLUMN_TOL,
    })?;
    let lhs = w1.mul(&w2)?;
    let rhs = w12.scale(phase);
    let bch = lhs.interior_diff(&rhs, cutoff - cols)?;
    Ok(WeylResiduals {
        adjoint,
        norm,
        bch,
        bch_columns: cols + 1,
    })
}

fn weyl_samples(hbar: f64) -> Vec<(Complex64, Complex64)> {
    let r = 1.0 / hbar.sqrt();
    vec![
        (Complex64::from_polar(0.9 * r, 0.4), Complex64::from_polar(0.7 * r, 2.1)),
        (Complex64::from_polar(1.0 * r, -1.3), Complex64::from_polar(1.0 * r, 0.2)),
        (Complex64::from_polar(0.3 * r, 3.0), Complex64::from_polar(0.95 * r, -2.5)),
    ]
}

fn check_weyl(cfg: &SuiteConfig) -> Result<Check> {
    let thr = cfg.thr(1e-6);
    let cases: Vec<(f64, Complex64, Complex64)> = [1.0, 0.25, 1.0 / 16.0]
        .iter()
        .flat_map(|&h| weyl_samples(h).into_iter().map(move |(a, b)| (h, a, b)))
        .collect();
    let results = cases
        .par_iter()
        .map(|&(h, a, b)| weyl_residuals(a, b, h, cfg.cutoff))
        .collect::<Result<Vec<_>>>()?;
    let adj = results.iter().map(|r| r.adjoint).fold(0.0, f64::max);
    let norm = results.iter().map(|r| r.norm).fold(0.0, f64::max);
    let bch = results.iter().map(|r| r.bch).fold(0.0, f64::max);
    let cols = results.iter().map(|r| r.bch_columns).min().unwrap_or(0);
    Ok(Check::new(
        9,
        "weyl_machinery",
        adj <= thr && norm <= thr && bch <= thr,
        adj.max(norm).max(bch),
        thr,
        format!(
            "|phi|sqrt(hbar)<=1, cutoff {}: W*=W(-phi) {adj:.3e}, |W|-1 {norm:.3e}, product relation {bch:.3e} on >= {cols} columns",
            cfg.cutoff
        ),
    ))
}

/// Largest gap between `⟨0|W(φ)|0⟩`, `exp(−ħ|φ|²/2)` and the quasi-free
/// value `exp(−(ħ/4)η⁻¹(φ,φ))` of the SJ state of `k`.
pub fn state_identity_residual(k: &KahlerDecomposition, phi: &[Complex64], hbar: f64, cutoff: usize) -> Result<f64> {
    let t = FockTruncation::new(phi.len(), cutoff)?;
    let fock = weyl_generator(phi, hbar, t)?.vacuum_expectation();
    let norm_sq: f64 = phi.iter().map(|p| p.norm_sqr()).sum();
    let closed = c((-(hbar / 2.0) * norm_sq).exp());
    let real = Covector::from_components(k, phi.to_vec())?;
    let quasi_free = state_on_weyl(&real.real, &QuasiFreeState::sj(k, hbar)?)?;
    Ok((fock - closed).norm().max((quasi_free - closed).norm()))
}

fn check_state_identity(cfg: &SuiteConfig) -> Result<Check> {
    let thr = cfg.thr(1e-8);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x57a7);
    let one = unit_mode()?;
    let two = polar_decompose(&random_pauli_jordan(4, &mut rng))?;
    let phis1 = [c(0.0), Complex64::new(0.6, 0.8), Complex64::new(-0.3, 0.2)];
    let phis2 = [
        vec![Complex64::new(0.3, -0.2), Complex64::new(0.1, 0.4)],
        vec![c(0.5), Complex64::new(0.0, -0.5)],
    ];
    let mut jobs: Vec<(usize, Vec<Complex64>, f64)> = Vec::new();
    for &h in cfg.grid.positive() {
        for p in &phis1 {
            jobs.push((1, vec![*p], h));
        }
        for p in &phis2 {
            jobs.push((2, p.clone(), h));
        }
    }
    let worst = jobs
        .par_iter()
        .map(|(modes, phi, h)| {
            if *modes == 1 {
                state_identity_residual(&one, phi, *h, cfg.cutoff)
            } else {
                state_identity_residual(&two, phi, *h, TWO_MODE_STATE_CUTOFF)
            }
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(Check::new(
        10,
        "state_identity",
        worst <= thr,
        worst,
        thr,
        format!("<0|W(phi)|0> vs exp(-hbar|phi|^2/2) vs exp(-(hbar/4)eta^-1(phi,phi)), {} cases over the grid", jobs.len()),
    ))
}

fn check_state_positivity(cfg: &SuiteConfig) -> Result<Check> {
    let thr = cfg.thr(1e-10);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9051);
    let mut worst = f64::INFINITY;
    let mut cases = 0;
    for dim in [2usize, 4, 6, 8] {
        let e = random_pauli_jordan(dim, &mut rng);
        let k = polar_decompose(&e)?;
        for &hbar in &[1.0, 0.25, 2f64.powi(-8)] {
            let s = QuasiFreeState::sj(&k, hbar)?;
            for count in [4usize, 16] {
                let phis: Vec<RVector> = (0..count)
                    .map(|_| RVector::from_fn(dim, |_, _| 2.0 * normal(&mut rng)))
                    .collect();
                worst = worst.min(state_positivity_gram(&phis, &s)?.1);
                cases += 1;
            }
        }
    }
    Ok(Check::new(
        11,
        "state_positivity",
        worst >= -thr,
        worst,
        -thr,
        format!("smallest Gram eigenvalue over {cases} sets of <=16 covectors"),
    ))
}

fn check_classical_limit(cfg: &SuiteConfig) -> Result<Check> {
    let g = GaussianSymbol::new(vec![1.0], 1.0)?;
    let table = classical_limit_berezin(&g, &HbarGrid::standard());
    let decreasing = table.windows(2).all(|w| w[1].value < w[0].value);
    let first = table[0].value;
    let last_positive = table[table.len() - 2].value;
    let ratio = last_positive / first;
    let thr = cfg.thr(1e-3);
    Ok(Check::new(
        12,
        "classical_limit",
        decreasing && ratio < thr,
        ratio,
        thr,
        format!("sup|b*f - f| for beta=1: {first:.3e} at hbar=1, {last_positive:.3e} at 2^-16, strictly decreasing: {decreasing}"),
    ))
}

fn random_complex(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| Complex64::new(normal(rng), normal(rng)))
}

fn check_spectra_ab_ba(cfg: &SuiteConfig) -> Result<Check> {
    let thr = cfg.thr(1e-8);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x1e33);
    let mut worst = 0.0f64;
    let mut unmatched = 0;
    for _ in 0..100 {
        let m = rng.random_range(1..=8);
        let n = rng.random_range(1..=5);
        let a = random_complex(m, n, &mut rng);
        let b = random_complex(n, m, &mut rng);
        match nonzero_spectra_distance(&a, &b, thr)? {
            Some(d) => worst = worst.max(d),
            None => unmatched += 1,
        }
    }
    Ok(Check::new(
        13,
        "spectra_ab_ba",
        unmatched == 0 && worst <= thr,
        worst,
        thr,
        format!("nonzero spectra of AB and BA, 100 pairs up to 8x5: {unmatched} unmatched"),
    ))
}

/// Pairs `(φ, φ')` for the star-remainder check.
fn remainder_pairs(rng: &mut ChaCha8Rng) -> Vec<(Vec<Complex64>, Vec<Complex64>)> {
    (0..24)
        .map(|i| {
            let modes = 1 + i % 2;
            let draw = |rng: &mut ChaCha8Rng| -> Vec<Complex64> {
                (0..modes)
                    .map(|_| Complex64::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)))
                    .collect()
            };
            (draw(rng), draw(rng))
        })
        .collect()
}

fn check_remainders(cfg: &SuiteConfig) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x4e3a);
    let mut held_out: Vec<Complex64> = (0..2000)
        .map(|_| Complex64::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0)))
        .collect();
    held_out.extend((0..500).map(|_| Complex64::from_polar(rng.random_range(10.0..30.0), rng.random_range(0.0..2.0 * PI))));
    held_out.extend((0..500).map(|_| Complex64::from_polar(rng.random_range(0.0..0.5), rng.random_range(0.0..2.0 * PI))));
    let pairs = remainder_pairs(&mut rng);
    let mut violations = 0usize;
    let mut worst_ratio = 0.0f64;
    let mut worst_uniform = 0.0f64;
    let mut constants = Vec::new();
    for k in 1..=3u32 {
        let fit = exp_remainder_bound_check(k, &held_out);
        violations += fit.violations;
        constants.push(fit.constant);
        worst_ratio = worst_ratio.max(fit.max_ratio / fit.constant);
        for (phi, phi2) in &pairs {
            let s = star_zeta(phi, phi2, 1.0);
            let sum_sq: f64 = phi.iter().zip(phi2).map(|(a, b)| (a + b).norm_sqr()).sum();
            // ħ-independent bound over ħ ∈ (0, 1]
            let uniform = 2.0 * fit.constant * s.norm().powi(k as i32 + 1) * s.re.max(0.0).exp();
            for &hbar in cfg.grid.positive() {
                let r = star_remainder_exponentials(phi, phi2, hbar, k)? / hbar;
                let pointwise = fit.constant
                    * s.norm().powi(k as i32 + 1)
                    * (1.0 + (hbar * s.re).exp())
                    * (-(hbar / 2.0) * sum_sq).exp();
                if r > pointwise * (1.0 + 1e-9) + 1e-300 {
                    violations += 1;
                }
                if uniform > 0.0 {
                    worst_uniform = worst_uniform.max(r / uniform);
                }
            }
        }
    }
    Ok(Check::new(
        14,
        "remainder_bounds",
        violations == 0 && worst_uniform <= 1.0,
        worst_uniform,
        1.0,
        format!(
            "C_1..C_3 = {:.4}, {:.4}, {:.4}; 3000 held-out zeta: max ratio/C_k {worst_ratio:.4}; R_T^k/hbar over grid for {} pairs: {violations} violations",
            constants[0],
            constants[1],
            constants[2],
            pairs.len()
        ),
    ))
}

fn check_pipeline(cfg: &SuiteConfig) -> Result<Check> {
    let run = || -> Result<_> {
        let c = sprinkle_diamond_2d(cfg.density, cfg.seed)?;
        causal_set_report(&c, DEFAULT_COUPLING, DEFAULT_RANK_TOL, 1.0)
    };
    let first = run()?;
    let second = run()?;
    let deterministic = first == second;
    let structure = cfg.thr(1e-10);
    let green = first.all_green(structure, &cfg.sj_tolerances());
    Ok(Check::new(
        15,
        "causal_set_pipeline",
        deterministic && green,
        first.kahler_residual,
        structure,
        format!(
            "density {}, seed {}: {} elements, rank {}, deterministic {deterministic}, residuals green {green}",
            cfg.density, cfg.seed, first.elements, first.rank
        ),
    ))
}

type CheckFn = fn(&SuiteConfig) -> Result<Check>;

const CHECKS: [(u32, &str, CheckFn); 15] = [
    (1, "sj_axioms", check_sj_axioms),
    (2, "sj_uniqueness", check_sj_uniqueness),
    (3, "purity_domination", check_purity),
    (4, "laplacian_spectrum", check_spectrum),
    (5, "ladder_identities", check_ladders),
    (6, "star_products", check_star_products),
    (7, "gauge_relation", check_gauge),
    (8, "gaussian_berezin", check_gaussian_berezin),
    (9, "weyl_machinery", check_weyl),
    (10, "state_identity", check_state_identity),
    (11, "state_positivity", check_state_positivity),
    (12, "classical_limit", check_classical_limit),
    (13, "spectra_ab_ba", check_spectra_ab_ba),
    (14, "remainder_bounds", check_remainders),
    (15, "causal_set_pipeline", check_pipeline),
];

/// Run one check by number; errors become failed checks.
pub fn run_check(id: u32, cfg: &SuiteConfig) -> Option<Check> {
    CHECKS
        .iter()
        .find(|(i, _, _)| *i == id)
        .map(|(i, name, f)| f(cfg).unwrap_or_else(|e| Check::errored(*i, name, e)))
}

/// All checks, in order.
pub fn run_suite(cfg: &SuiteConfig) -> Vec<Check> {
    CHECKS
        .par_iter()
        .map(|(i, name, f)| f(cfg).unwrap_or_else(|e| Check::errored(*i, name, e)))
        .collect()
}
