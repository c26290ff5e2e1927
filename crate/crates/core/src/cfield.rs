//! Sections over a grid of ħ values including the classical point, with
//! norm, expansion, classical-limit and state diagnostics.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{
    dequantize, dequantize_at, gaussian_toeplitz, toeplitz_exponential, toeplitz_of_symbol,
    weyl_generator, FockOperator, FockTruncation,
};
use crate::linalg::{c, CMatrix};
use crate::symbol::{berezin_coefficients, ExponentialSymbol, GaussianSymbol, PolynomialSymbol};

/// Strictly decreasing positive ħ values followed by the classical point 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HbarGrid {
    values: Vec<f64>,
}

impl HbarGrid {
    /// Positive values in any order; 0 is appended.
    pub fn new(mut positive: Vec<f64>) -> Result<Self> {
        if positive.is_empty() {
            return Err(Error::InvalidArgument("grid needs at least one positive hbar".into()));
        }
        if let Some(&h) = positive.iter().find(|h| !(h.is_finite() && **h > 0.0)) {
            return Err(Error::InvalidArgument(format!("hbar values must be positive, got {h}")));
        }
        positive.sort_by(|a, b| b.total_cmp(a));
        if positive.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("hbar values must be distinct".into()));
        }
        positive.push(0.0);
        Ok(Self { values: positive })
    }

    /// `top·2^{−j}` for `j = 0..=steps`, then 0.
    pub fn geometric(top: f64, steps: u32) -> Result<Self> {
        Self::new((0..=steps).map(|j| top * 0.5f64.powi(j as i32)).collect())
    }

    /// The `1·2^{−j}`, `j = 0..16` grid.
    pub fn standard() -> Self {
        Self::geometric(1.0, 16).expect("valid grid")
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn positive(&self) -> &[f64] {
        &self.values[..self.values.len() - 1]
    }
}

fn parse_grid_number(s: &str) -> Result<f64> {
    let s = s.trim();
    let bad = || Error::InvalidArgument(format!("cannot read hbar value '{s}'"));
    if let Some((base, exp)) = s.split_once('^') {
        let b: f64 = base.trim().parse().map_err(|_| bad())?;
        let e: i32 = exp.trim().parse().map_err(|_| bad())?;
        Ok(b.powi(e))
    } else {
        s.parse().map_err(|_| bad())
    }
}

impl FromStr for HbarGrid {
    type Err = Error;

    /// `"1:2^-16"` halves from the first value down to the second;
    /// `"1,0.5,0.1"` lists values explicitly.
    fn from_str(s: &str) -> Result<Self> {
        if let Some((top, bottom)) = s.split_once(':') {
            let top = parse_grid_number(top)?;
            let bottom = parse_grid_number(bottom)?;
            if !(top > 0.0 && bottom > 0.0 && bottom <= top) {
                return Err(Error::InvalidArgument(format!("bad hbar range '{s}'")));
            }
            let steps = (top / bottom).log2().round();
            if steps > 64.0 || (top * 0.5f64.powi(steps as i32) / bottom - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!(
                    "hbar range '{s}' must span a power of two"
                )));
            }
            Self::geometric(top, steps as u32)
        } else {
            let vals = s
                .split(',')
                .filter(|t| !t.trim().is_empty())
                .map(parse_grid_number)
                .collect::<Result<Vec<_>>>()?;
            let positive: Vec<f64> = vals.into_iter().filter(|&h| h != 0.0).collect();
            Self::new(positive)
        }
    }
}

impl fmt::Display for HbarGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.values.iter().map(|h| format!("{h:e}")).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// Classical value of a section at ħ = 0.
#[derive(Debug, Clone, PartialEq)]
pub enum ClassicalSymbol {
    Polynomial(PolynomialSymbol),
    Gaussian(GaussianSymbol),
    Exponential(ExponentialSymbol),
}

impl ClassicalSymbol {
    pub fn modes(&self) -> usize {
        match self {
            Self::Polynomial(p) => p.modes(),
            Self::Gaussian(g) => g.modes(),
            Self::Exponential(e) => e.modes(),
        }
    }

    pub fn eval(&self, z: &[Complex64]) -> Complex64 {
        match self {
            Self::Polynomial(p) => p.eval(z),
            Self::Gaussian(g) => c(g.eval(z)),
            Self::Exponential(e) => e.eval(z),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SectionKind {
    Toeplitz,
    Weyl,
}

/// Operators at the positive grid points and the classical symbol at 0.
#[derive(Debug, Clone)]
pub struct SectionSample {
    grid: HbarGrid,
    kind: SectionKind,
    classical: ClassicalSymbol,
    operators: Vec<FockOperator>,
}

impl SectionSample {
    pub fn grid(&self) -> &HbarGrid {
        &self.grid
    }

    pub fn kind(&self) -> SectionKind {
        self.kind
    }

    pub fn classical(&self) -> &ClassicalSymbol {
        &self.classical
    }

    /// Operator at the `i`-th positive grid point.
    pub fn at(&self, i: usize) -> &FockOperator {
        &self.operators[i]
    }

    pub fn operators(&self) -> &[FockOperator] {
        &self.operators
    }
}

/// `ħ ↦ T_ħ(f)` with `f` at ħ = 0.
pub fn toeplitz_section(f: ClassicalSymbol, grid: &HbarGrid, t: FockTruncation) -> Result<SectionSample> {
    if f.modes() != t.modes() {
        return Err(Error::ModeMismatch(f.modes(), t.modes()));
    }
    let operators = grid
        .positive()
        .par_iter()
        .map(|&h| match &f {
            ClassicalSymbol::Polynomial(p) => toeplitz_of_symbol(p, h, t),
            ClassicalSymbol::Gaussian(g) => gaussian_toeplitz(g, h, t),
            ClassicalSymbol::Exponential(e) => toeplitz_exponential(&e.phi, h, t),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SectionSample {
        grid: grid.clone(),
        kind: SectionKind::Toeplitz,
        classical: f,
        operators,
    })
}

/// `ħ ↦ W_ħ(φ)`, whose classical value is `e^{iφ}`.
pub fn weyl_section(phi: &[Complex64], grid: &HbarGrid, t: FockTruncation) -> Result<SectionSample> {
    let operators = grid
        .positive()
        .par_iter()
        .map(|&h| weyl_generator(phi, h, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(SectionSample {
        grid: grid.clone(),
        kind: SectionKind::Weyl,
        classical: ClassicalSymbol::Exponential(ExponentialSymbol::new(phi.to_vec())),
        operators,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridValue {
    pub hbar: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormTable {
    pub rows: Vec<GridValue>,
    /// Largest `|n(ħᵢ) − n(ħᵢ₊₁)|` along the grid, including the step to 0.
    pub max_jump: f64,
    /// Whether the ħ = 0 entry is a supremum over a bounded test domain
    /// (polynomials) rather than over all of phase space.
    pub domain_limited: bool,
}

/// Spectral norm of the columns on which the operator is exact.
pub fn interior_norm(op: &FockOperator) -> f64 {
    let cols = op.trunc().interior(op.valid_degree());
    if cols.is_empty() {
        return 0.0;
    }
    let m = op.matrix();
    let block = CMatrix::from_fn(m.nrows(), cols.len(), |r, k| m[(r, cols[k])]);
    crate::linalg::spectral_norm_c(&block)
}

/// Supremum of a polynomial over the unit polydisk, sampled on a polar grid.
fn polynomial_sup(p: &PolynomialSymbol) -> f64 {
    let n = p.modes();
    let per_mode: Vec<Complex64> = (0..=8)
        .flat_map(|ir| {
            let r = ir as f64 / 8.0;
            (0..16).map(move |ia| Complex64::from_polar(r, 2.0 * PI * ia as f64 / 16.0))
        })
        .collect();
    let mut best = 0.0f64;
    let mut idx = vec![0usize; n];
    loop {
        let z: Vec<Complex64> = idx.iter().map(|&i| per_mode[i]).collect();
        best = best.max(p.eval(&z).norm());
        let mut k = 0;
        while k < n {
            idx[k] += 1;
            if idx[k] < per_mode.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == n {
            return best;
        }
    }
}

/// `n_A(ħ)` on the grid. Positive points use the spectral norm of the exact
/// interior block; ħ = 0 uses the supremum norm of the classical symbol.
pub fn norm_function(s: &SectionSample) -> NormTable {
    let mut rows: Vec<GridValue> = s
        .grid
        .positive()
        .iter()
        .zip(&s.operators)
        .map(|(&hbar, op)| GridValue {
            hbar,
            value: interior_norm(op),
        })
        .collect();
    let (classical, domain_limited) = match &s.classical {
        ClassicalSymbol::Polynomial(p) => (polynomial_sup(p), true),
        ClassicalSymbol::Gaussian(g) => (g.peak().abs(), false),
        ClassicalSymbol::Exponential(_) => (1.0, false),
    };
    rows.push(GridValue {
        hbar: 0.0,
        value: classical,
    });
    let max_jump = rows
        .windows(2)
        .map(|w| (w[0].value - w[1].value).abs())
        .fold(0.0, f64::max);
    NormTable {
        rows,
        max_jump,
        domain_limited,
    }
}

/// Coefficient `f_j` of `Ξ(s(ħ)) = Σ_j f_j ħʲ`.
#[derive(Debug, Clone, PartialEq)]
pub enum ExpansionCoefficient {
    Polynomial(PolynomialSymbol),
    /// `factor · e^{iφ}`
    ScaledExponential { factor: f64, phi: Vec<Complex64> },
}

impl ExpansionCoefficient {
    pub fn eval(&self, z: &[Complex64]) -> Complex64 {
        match self {
            Self::Polynomial(p) => p.eval(z),
            Self::ScaledExponential { factor, phi } => ExponentialSymbol::new(phi.clone()).eval(z) * factor,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExpansionTable {
    pub order: usize,
    pub coefficients: Vec<ExpansionCoefficient>,
    /// `‖Ξ(s(ħ)) − Σ_{j≤k} f_j ħʲ‖ / ħᵏ` per positive grid point.
    pub residuals: Vec<GridValue>,
}

impl ExpansionTable {
    /// Residuals do not grow along the descending grid beyond `slack`.
    pub fn decreasing(&self, slack: f64) -> bool {
        self.residuals.windows(2).all(|w| w[1].value <= w[0].value + slack)
    }
}

fn factorial(j: usize) -> f64 {
    (1..=j).map(|x| x as f64).product()
}

/// Sample points `√ħ·ζ` with `|ζ| ≤ 1`, so that coherent states stay well
/// inside the truncation at every ħ.
fn expansion_points(modes: usize, hbar: f64) -> Vec<Vec<Complex64>> {
    let zetas = [
        c(0.0),
        Complex64::new(0.5, 0.0),
        Complex64::new(0.0, -0.7),
        Complex64::new(-0.6, 0.4),
        Complex64::new(0.3, 0.9),
    ];
    zetas
        .iter()
        .enumerate()
        .map(|(i, _)| {
            (0..modes)
                .map(|k| zetas[(i + k) % zetas.len()] * hbar.sqrt())
                .collect()
        })
        .collect()
}

/// Dequantization expansion to order `k` with its residual table.
/// Polynomial Toeplitz sections use `f_j = Δʲf/j!` and exact
/// dequantization; exponential Toeplitz and Weyl sections use
/// `f_j = (−c|φ|²)ʲ/j!·e^{iφ}` with `c = 1` and `c = 1/2` and compare
/// coherent-state evaluations.
pub fn dequantization_expansion(s: &SectionSample, k: usize) -> Result<ExpansionTable> {
    let hbars = s.grid.positive();
    match (&s.classical, s.kind) {
        (ClassicalSymbol::Polynomial(f), SectionKind::Toeplitz) => {
            let all = berezin_coefficients(f);
            let coefficients: Vec<PolynomialSymbol> = (0..=k)
                .map(|j| all.get(j).cloned().unwrap_or_else(|| PolynomialSymbol::zero(f.modes())))
                .collect();
            let residuals = hbars
                .par_iter()
                .zip(&s.operators)
                .map(|(&hbar, op)| {
                    let xi = dequantize(op, hbar)?;
                    let mut partial = PolynomialSymbol::zero(f.modes());
                    for (j, fj) in coefficients.iter().enumerate() {
                        partial = partial.add(&fj.scale(&c(hbar.powi(j as i32))))?;
                    }
                    Ok(GridValue {
                        hbar,
                        value: xi.max_coeff_diff(&partial)? / hbar.powi(k as i32),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ExpansionTable {
                order: k,
                coefficients: coefficients.into_iter().map(ExpansionCoefficient::Polynomial).collect(),
                residuals,
            })
        }
        (ClassicalSymbol::Exponential(e), kind) => {
            let rate = match kind {
                SectionKind::Toeplitz => 1.0,
                SectionKind::Weyl => 0.5,
            };
            let x = -rate * e.norm_sq();
            let coefficients: Vec<ExpansionCoefficient> = (0..=k)
                .map(|j| ExpansionCoefficient::ScaledExponential {
                    factor: x.powi(j as i32) / factorial(j),
                    phi: e.phi.clone(),
                })
                .collect();
            let residuals = hbars
                .par_iter()
                .zip(&s.operators)
                .map(|(&hbar, op)| {
                    let mut worst = 0.0f64;
                    for z in expansion_points(e.modes(), hbar) {
                        let xi = dequantize_at(op, hbar, &z)?;
                        let partial: Complex64 = coefficients
                            .iter()
                            .enumerate()
                            .map(|(j, fj)| fj.eval(&z) * hbar.powi(j as i32))
                            .sum();
                        worst = worst.max((xi - partial).norm());
                    }
                    Ok(GridValue {
                        hbar,
                        value: worst / hbar.powi(k as i32),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ExpansionTable {
                order: k,
                coefficients,
                residuals,
            })
        }
        (ClassicalSymbol::Gaussian(_), _) => Err(Error::NotExpandable(
            "Gaussian sections have no finite ladder expansion on a truncation".into(),
        )),
        (ClassicalSymbol::Polynomial(_), SectionKind::Weyl) => {
            Err(Error::NotExpandable("polynomial Weyl sections are not supported".into()))
        }
    }
}

/// Supremum distance between two centred one-mode Gaussians
/// `a·e^{−u/b}/(2πb)` and `a·e^{−u/b'}/(2πb')` in `u = |z|²`.
fn gaussian_sup_distance_1d(amplitude: f64, b: f64, b2: f64) -> f64 {
    let d = |u: f64| amplitude * ((-u / b2).exp() / b2 - (-u / b).exp() / b) / (2.0 * PI);
    let mut best = d(0.0).abs();
    if b2 != b {
        let (lo, hi) = if b < b2 { (b, b2) } else { (b2, b) };
        let u_star = 2.0 * (hi / lo).ln() * lo * hi / (hi - lo);
        best = best.max(d(u_star).abs());
    }
    best
}

fn gaussian_sup_distance(g: &GaussianSymbol, shifted: &GaussianSymbol) -> f64 {
    if g.modes() == 1 {
        return gaussian_sup_distance_1d(g.amplitude(), g.variances()[0], shifted.variances()[0]);
    }
    // Radial maximization over a per-mode grid in u = |zⁱ|².
    let n = g.modes();
    let per_mode = ((1e6f64).powf(1.0 / n as f64) as usize).clamp(8, 401);
    let grids: Vec<Vec<f64>> = shifted
        .variances()
        .iter()
        .map(|&b| (0..per_mode).map(|i| 12.0 * b * i as f64 / (per_mode - 1) as f64).collect())
        .collect();
    let mut idx = vec![0usize; n];
    let mut best = 0.0f64;
    loop {
        let z: Vec<Complex64> = idx.iter().zip(&grids).map(|(&i, gr)| c(gr[i].sqrt())).collect();
        best = best.max((shifted.eval(&z) - g.eval(&z)).abs());
        let mut k = 0;
        while k < n {
            idx[k] += 1;
            if idx[k] < per_mode {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == n {
            return best;
        }
    }
}

/// `‖b_ħ ∗ f − f‖_∞` along the grid, using `b_ħ ∗ f` = the same Gaussian
/// with variances `β + ħ`.
pub fn classical_limit_berezin(f: &GaussianSymbol, grid: &HbarGrid) -> Vec<GridValue> {
    grid.values()
        .iter()
        .map(|&hbar| {
            let value = if hbar == 0.0 {
                0.0
            } else {
                gaussian_sup_distance(f, &crate::symbol::berezin_transform_gaussian(f, hbar))
            };
            GridValue { hbar, value }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateValue {
    pub hbar: f64,
    /// `⟨0|s(ħ)|0⟩`, the dequantized operator at the origin.
    pub fock: Complex64,
    pub closed_form: Complex64,
    pub diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateField {
    pub rows: Vec<StateValue>,
    /// `σ₀(f) = f(0)`.
    pub classical: Complex64,
    /// Largest gap between neighbouring grid values, including the step to 0.
    pub max_jump: f64,
    pub max_diff: f64,
}

fn closed_form_state(s: &SectionSample, hbar: f64) -> Complex64 {
    match (&s.classical, s.kind) {
        (ClassicalSymbol::Polynomial(f), _) => {
            let origin = vec![c(0.0); f.modes()];
            berezin_coefficients(f)
                .iter()
                .enumerate()
                .map(|(j, fj)| fj.eval(&origin) * hbar.powi(j as i32))
                .sum()
        }
        (ClassicalSymbol::Gaussian(g), _) => c(g.amplitude()
            * g.variances()
                .iter()
                .map(|b| 1.0 / (2.0 * PI * (b + hbar)))
                .product::<f64>()),
        (ClassicalSymbol::Exponential(e), SectionKind::Toeplitz) => c((-hbar * e.norm_sq()).exp()),
        (ClassicalSymbol::Exponential(e), SectionKind::Weyl) => c((-hbar * e.norm_sq() / 2.0).exp()),
    }
}

/// `σ_ħ(s(ħ)) = Ξ_ħ(s(ħ))(0)` on the grid, against its closed form.
pub fn state_field(s: &SectionSample) -> StateField {
    let rows: Vec<StateValue> = s
        .grid
        .positive()
        .iter()
        .zip(&s.operators)
        .map(|(&hbar, op)| {
            let fock = op.vacuum_expectation();
            let closed_form = closed_form_state(s, hbar);
            StateValue {
                hbar,
                fock,
                closed_form,
                diff: (fock - closed_form).norm(),
            }
        })
        .collect();
    let classical = s.classical.eval(&vec![c(0.0); s.classical.modes()]);
    let mut values: Vec<Complex64> = rows.iter().map(|r| r.fock).collect();
    values.push(classical);
    let max_jump = values.windows(2).map(|w| (w[0] - w[1]).norm()).fold(0.0, f64::max);
    let max_diff = rows.iter().map(|r| r.diff).fold(0.0, f64::max);
    StateField {
        rows,
        classical,
        max_jump,
        max_diff,
    }
}
