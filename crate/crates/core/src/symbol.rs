//! Classical observables in canonical complex coordinates: polynomial,
//! Gaussian and plane-wave symbols, the Poisson bracket, the two star
//! products, the Berezin transform and exponential remainder bounds.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::ops::Neg;

use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{Num, One, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficient field of a [`Polynomial`].
pub trait Scalar: Clone + PartialEq + fmt::Debug + Num + Neg<Output = Self> {
    fn from_i64(v: i64) -> Self;
    fn conj(&self) -> Self;
    fn to_c64(&self) -> Complex64;
    /// The imaginary unit.
    fn i() -> Self;
}

impl Scalar for Complex64 {
    fn from_i64(v: i64) -> Self {
        Complex64::new(v as f64, 0.0)
    }
    fn conj(&self) -> Self {
        Complex::conj(self)
    }
    fn to_c64(&self) -> Complex64 {
        *self
    }
    fn i() -> Self {
        Complex64::new(0.0, 1.0)
    }
}

pub type Rational = BigRational;
pub type ExactComplex = Complex<BigRational>;

impl Scalar for ExactComplex {
    fn from_i64(v: i64) -> Self {
        Complex::new(BigRational::from_integer(BigInt::from(v)), BigRational::zero())
    }
    fn conj(&self) -> Self {
        Complex::conj(self)
    }
    fn to_c64(&self) -> Complex64 {
        Complex64::new(
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }
    fn i() -> Self {
        Complex::new(BigRational::zero(), BigRational::one())
    }
}

/// Exact complex number `(re_num/re_den) + i·(im_num/im_den)`.
pub fn exact(re_num: i64, re_den: i64, im_num: i64, im_den: i64) -> ExactComplex {
    Complex::new(
        BigRational::new(re_num.into(), re_den.into()),
        BigRational::new(im_num.into(), im_den.into()),
    )
}

/// Exponents of `zᵐ z̄ⁿ`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Monomial {
    pub z: Vec<u32>,
    pub zb: Vec<u32>,
}

impl Monomial {
    pub fn constant(modes: usize) -> Self {
        Self {
            z: vec![0; modes],
            zb: vec![0; modes],
        }
    }

    pub fn degree(&self) -> usize {
        self.z.iter().chain(&self.zb).map(|&e| e as usize).sum()
    }

    /// Per-mode `m − n`: the occupation shift of the quantized monomial.
    pub fn shift(&self) -> Vec<i64> {
        self.z
            .iter()
            .zip(&self.zb)
            .map(|(&m, &n)| m as i64 - n as i64)
            .collect()
    }

    fn multiply(&self, other: &Self) -> Self {
        Self {
            z: self.z.iter().zip(&other.z).map(|(a, b)| a + b).collect(),
            zb: self.zb.iter().zip(&other.zb).map(|(a, b)| a + b).collect(),
        }
    }
}

/// Polynomial in `zⁱ, z̄ⁱ` with no stored zero coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial<T: Scalar> {
    modes: usize,
    terms: BTreeMap<Monomial, T>,
}

pub type PolynomialSymbol = Polynomial<Complex64>;
pub type ExactPolynomial = Polynomial<ExactComplex>;

fn factorial(n: u32) -> i64 {
    (1..=n as i64).product()
}

impl<T: Scalar> Polynomial<T> {
    pub fn zero(modes: usize) -> Self {
        Self {
            modes,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(modes: usize, value: T) -> Self {
        Self::monomial(Monomial::constant(modes), value)
    }

    pub fn one(modes: usize) -> Self {
        Self::constant(modes, T::one())
    }

    pub fn monomial(mono: Monomial, coeff: T) -> Self {
        let modes = mono.z.len();
        let mut p = Self::zero(modes);
        p.add_term(mono, coeff);
        p
    }

    /// Coordinate `zⁱ` (zero-based mode index).
    pub fn z(modes: usize, i: usize) -> Self {
        let mut m = Monomial::constant(modes);
        m.z[i] = 1;
        Self::monomial(m, T::one())
    }

    /// Coordinate `z̄ⁱ`.
    pub fn zb(modes: usize, i: usize) -> Self {
        let mut m = Monomial::constant(modes);
        m.zb[i] = 1;
        Self::monomial(m, T::one())
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &T)> {
        self.terms.iter()
    }

    pub fn coeff(&self, mono: &Monomial) -> T {
        self.terms.get(mono).cloned().unwrap_or_else(T::zero)
    }

    /// Number of stored terms.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn add_term(&mut self, mono: Monomial, coeff: T) {
        assert_eq!(mono.z.len(), self.modes, "monomial mode count");
        if coeff.is_zero() {
            return;
        }
        let entry = self.terms.entry(mono);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = o.get().clone() + coeff;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    fn check_modes(&self, other: &Self) -> Result<()> {
        if self.modes != other.modes {
            return Err(Error::ModeMismatch(self.modes, other.modes));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_modes(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(&-T::one()))
    }

    pub fn scale(&self, s: &T) -> Self {
        let mut out = Self::zero(self.modes);
        for (m, c) in &self.terms {
            out.add_term(m.clone(), c.clone() * s.clone());
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_modes(other)?;
        let mut out = Self::zero(self.modes);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.multiply(mb), ca.clone() * cb.clone());
            }
        }
        Ok(out)
    }

    /// Complex conjugate function `conj(f)`.
    pub fn conj(&self) -> Self {
        let mut out = Self::zero(self.modes);
        for (m, c) in &self.terms {
            let swapped = Monomial {
                z: m.zb.clone(),
                zb: m.z.clone(),
            };
            out.add_term(swapped, c.conj());
        }
        out
    }

    /// `∂/∂zⁱ`
    pub fn d_z(&self, i: usize) -> Self {
        self.derive(i, true)
    }

    /// `∂/∂z̄ⁱ`
    pub fn d_zb(&self, i: usize) -> Self {
        self.derive(i, false)
    }

    fn derive(&self, i: usize, holomorphic: bool) -> Self {
        let mut out = Self::zero(self.modes);
        for (m, c) in &self.terms {
            let e = if holomorphic { m.z[i] } else { m.zb[i] };
            if e == 0 {
                continue;
            }
            let mut next = m.clone();
            if holomorphic {
                next.z[i] -= 1;
            } else {
                next.zb[i] -= 1;
            }
            out.add_term(next, c.clone() * T::from_i64(e as i64));
        }
        out
    }

    fn max_exponent(&self, i: usize, holomorphic: bool) -> u32 {
        self.terms
            .keys()
            .map(|m| if holomorphic { m.z[i] } else { m.zb[i] })
            .max()
            .unwrap_or(0)
    }

    /// `Δf = Σᵢ ∂_{zⁱ}∂_{z̄ⁱ} f`.
    pub fn laplacian(&self) -> Self {
        let mut out = Self::zero(self.modes);
        for i in 0..self.modes {
            for (m, c) in self.d_z(i).d_zb(i).terms {
                out.add_term(m, c);
            }
        }
        out
    }

    pub fn to_c64(&self) -> PolynomialSymbol {
        let mut out = PolynomialSymbol::zero(self.modes);
        for (m, c) in &self.terms {
            out.add_term(m.clone(), c.to_c64());
        }
        out
    }

    /// Largest coefficient modulus of `self − other`.
    pub fn max_coeff_diff(&self, other: &Self) -> Result<f64> {
        Ok(self
            .sub(other)?
            .terms
            .values()
            .map(|c| c.to_c64().norm())
            .fold(0.0, f64::max))
    }

    pub fn max_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.to_c64().norm()).fold(0.0, f64::max)
    }
}

impl PolynomialSymbol {
    pub fn eval(&self, z: &[Complex64]) -> Complex64 {
        self.terms
            .iter()
            .map(|(m, c)| {
                let mut v = *c;
                for (i, zi) in z.iter().enumerate() {
                    v *= zi.powu(m.z[i]) * zi.conj().powu(m.zb[i]);
                }
                v
            })
            .sum()
    }

    /// Drop coefficients with modulus at most `tol`.
    pub fn pruned(&self, tol: f64) -> Self {
        let mut out = Self::zero(self.modes);
        for (m, c) in &self.terms {
            if c.norm() > tol {
                out.add_term(m.clone(), *c);
            }
        }
        out
    }
}

/// `{f, g} = i·Σᵢ(∂_{zⁱ}f·∂_{z̄ⁱ}g − ∂_{zⁱ}g·∂_{z̄ⁱ}f)`.
pub fn poisson_bracket<T: Scalar>(f: &Polynomial<T>, g: &Polynomial<T>) -> Result<Polynomial<T>> {
    f.check_modes(g)?;
    let mut out = Polynomial::zero(f.modes);
    for i in 0..f.modes {
        let a = f.d_z(i).mul(&g.d_zb(i))?;
        let b = g.d_z(i).mul(&f.d_zb(i))?;
        out = out.add(&a.sub(&b)?)?;
    }
    Ok(out.scale(&T::i()))
}

/// Multi-indices `α` with `αᵢ ≤ bounds[i]`.
fn multi_indices(bounds: &[u32]) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for &b in bounds {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..=b).map(move |k| {
                    let mut next = prefix.clone();
                    next.push(k);
                    next
                })
            })
            .collect();
    }
    out
}

fn star<T: Scalar>(
    f: &Polynomial<T>,
    g: &Polynomial<T>,
    hbar: &T,
    left_holomorphic: bool,
    sign: i64,
) -> Result<Polynomial<T>> {
    f.check_modes(g)?;
    let bounds: Vec<u32> = (0..f.modes)
        .map(|i| {
            f.max_exponent(i, left_holomorphic)
                .min(g.max_exponent(i, !left_holomorphic))
        })
        .collect();
    let mut out = Polynomial::zero(f.modes);
    let step = hbar.clone() * T::from_i64(sign);
    for alpha in multi_indices(&bounds) {
        let mut df = f.clone();
        let mut dg = g.clone();
        let mut weight = T::one();
        for (i, &a) in alpha.iter().enumerate() {
            for _ in 0..a {
                df = df.derive(i, left_holomorphic);
                dg = dg.derive(i, !left_holomorphic);
                weight = weight * step.clone();
            }
            weight = weight / T::from_i64(factorial(a));
        }
        if df.is_zero() || dg.is_zero() {
            continue;
        }
        out = out.add(&df.mul(&dg)?.scale(&weight))?;
    }
    Ok(out)
}

/// `f ⋆_T g = Σ_α (−ħ)^{|α|}/α! · (∂_z^α f)(∂_z̄^α g)`.
pub fn star_t<T: Scalar>(f: &Polynomial<T>, g: &Polynomial<T>, hbar: &T) -> Result<Polynomial<T>> {
    star(f, g, hbar, true, -1)
}

/// `f ⋆_Ξ g = Σ_α ħ^{|α|}/α! · (∂_z̄^α f)(∂_z^α g)`.
pub fn star_xi<T: Scalar>(f: &Polynomial<T>, g: &Polynomial<T>, hbar: &T) -> Result<Polynomial<T>> {
    star(f, g, hbar, false, 1)
}

/// `Σⱼ ħʲ/j!·Δʲf`; `fⱼ = Δʲf/j!` are the expansion coefficients.
pub fn berezin_coefficients<T: Scalar>(f: &Polynomial<T>) -> Vec<Polynomial<T>> {
    let mut out = Vec::new();
    let mut current = f.clone();
    let mut j = 0i64;
    while !current.is_zero() {
        let coeff = current.scale(&(T::one() / T::from_i64(factorial(j as u32))));
        out.push(coeff);
        current = current.laplacian();
        j += 1;
    }
    if out.is_empty() {
        out.push(Polynomial::zero(f.modes));
    }
    out
}

pub fn berezin_transform_poly<T: Scalar>(f: &Polynomial<T>, hbar: &T) -> Polynomial<T> {
    let mut out = Polynomial::zero(f.modes);
    let mut power = T::one();
    for fj in berezin_coefficients(f) {
        out = out.add(&fj.scale(&power)).expect("same modes");
        power = power * hbar.clone();
    }
    out
}

/// Max coefficient deviation in `B(f ⋆_T g) = B(f) ⋆_Ξ B(g)`.
pub fn gauge_relation_check<T: Scalar>(
    f: &Polynomial<T>,
    g: &Polynomial<T>,
    hbar: &T,
) -> Result<f64> {
    let lhs = berezin_transform_poly(&star_t(f, g, hbar)?, hbar);
    let rhs = star_xi(
        &berezin_transform_poly(f, hbar),
        &berezin_transform_poly(g, hbar),
        hbar,
    )?;
    lhs.max_coeff_diff(&rhs)
}

/// Random polynomial with coefficients uniform in the unit square and
/// every monomial of total degree `≤ degree` present with probability 1/2.
pub fn random_polynomial<R: Rng>(modes: usize, degree: usize, rng: &mut R) -> PolynomialSymbol {
    let mut out = PolynomialSymbol::zero(modes);
    for exps in multi_indices(&vec![degree as u32; 2 * modes]) {
        if exps.iter().sum::<u32>() as usize > degree || !rng.random_bool(0.5) {
            continue;
        }
        let mono = Monomial {
            z: exps[..modes].to_vec(),
            zb: exps[modes..].to_vec(),
        };
        let c = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        out.add_term(mono, c);
    }
    out
}

/// Random polynomial with small Gaussian-integer coefficients.
pub fn random_exact_polynomial<R: Rng>(modes: usize, degree: usize, rng: &mut R) -> ExactPolynomial {
    let mut out = ExactPolynomial::zero(modes);
    for exps in multi_indices(&vec![degree as u32; 2 * modes]) {
        if exps.iter().sum::<u32>() as usize > degree || !rng.random_bool(0.5) {
            continue;
        }
        let mono = Monomial {
            z: exps[..modes].to_vec(),
            zb: exps[modes..].to_vec(),
        };
        out.add_term(
            mono,
            exact(rng.random_range(-5..=5), 1, rng.random_range(-5..=5), 1),
        );
    }
    out
}

impl fmt::Display for PolynomialSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({:?},{:?})", c.re, c.im)?;
            for i in 0..self.modes {
                for (e, name) in [(m.z[i], "z"), (m.zb[i], "zb")] {
                    match e {
                        0 => {}
                        1 => write!(f, "*{name}{}", i + 1)?,
                        _ => write!(f, "*{name}{}^{e}", i + 1)?,
                    }
                }
            }
        }
        Ok(())
    }
}

/// Parse a literal such as `1.0*z1^2*zb1 + (0,0.5)*z2 - 3`. Coordinates are
/// one-based; `modes` fixes the mode count, otherwise the largest index
/// used decides.
pub fn parse_symbol(text: &str, modes: Option<usize>) -> Result<PolynomialSymbol> {
    let bad = |msg: String| Error::MalformedInput(format!("symbol {text:?}: {msg}"));
    // Split into signed terms at top-level + and −.
    let mut terms: Vec<(f64, String)> = Vec::new();
    let mut depth = 0;
    let mut current = String::new();
    let mut sign = 1.0;
    let mut after_op = false;
    let chars: Vec<char> = text.chars().collect();
    for (idx, &ch) in chars.iter().enumerate() {
        match ch {
            '(' => {
                depth += 1;
                current.push(ch);
            }
            ')' => {
                depth -= 1;
                current.push(ch);
            }
            '+' | '-' if depth == 0 => {
                let prev = current.trim_end().chars().last();
                let exponent_sign = matches!(prev, Some('e') | Some('E'))
                    && current.trim_end().len() > 1
                    && chars.get(idx.wrapping_sub(2)).is_some_and(|c| c.is_ascii_digit() || *c == '.');
                if exponent_sign {
                    current.push(ch);
                    continue;
                }
                if !current.trim().is_empty() {
                    terms.push((sign, current.trim().to_string()));
                } else if after_op || !terms.is_empty() {
                    return Err(bad("dangling operator".into()));
                }
                after_op = true;
                current.clear();
                sign = if ch == '-' { -1.0 } else { 1.0 };
            }
            _ => current.push(ch),
        }
    }
    if depth != 0 {
        return Err(bad("unbalanced parentheses".into()));
    }
    if current.trim().is_empty() {
        if !terms.is_empty() || text.trim().ends_with(['+', '-']) {
            return Err(bad("missing term".into()));
        }
    } else {
        terms.push((sign, current.trim().to_string()));
    }

    // (conjugate?, mode, power) factors of one term
    type Factors = Vec<(bool, usize, u32)>;
    let mut parsed: Vec<(Complex64, Factors)> = Vec::new();
    let mut max_mode = 0usize;
    for (sign, term) in &terms {
        let mut coeff = Complex64::new(*sign, 0.0);
        let mut vars = Vec::new();
        for factor in term.split('*') {
            let factor = factor.trim();
            if factor.is_empty() {
                return Err(bad("empty factor".into()));
            }
            if let Some(inner) = factor.strip_prefix('(').and_then(|s| s.strip_suffix(')')) {
                let (re, im) = inner
                    .split_once(',')
                    .ok_or_else(|| bad(format!("complex literal {factor:?} needs (re,im)")))?;
                let re: f64 = re.trim().parse().map_err(|_| bad(format!("bad number {re:?}")))?;
                let im: f64 = im.trim().parse().map_err(|_| bad(format!("bad number {im:?}")))?;
                coeff *= Complex64::new(re, im);
            } else if factor.starts_with('z') {
                let (base, power) = match factor.split_once('^') {
                    Some((b, p)) => (
                        b,
                        p.trim()
                            .parse::<u32>()
                            .map_err(|_| bad(format!("bad exponent in {factor:?}")))?,
                    ),
                    None => (factor, 1),
                };
                let (conj, idx) = match base.strip_prefix("zb") {
                    Some(rest) => (true, rest),
                    None => (false, &base[1..]),
                };
                let idx: usize = idx
                    .parse()
                    .map_err(|_| bad(format!("bad coordinate {base:?}")))?;
                if idx == 0 {
                    return Err(bad("coordinates are numbered from 1".into()));
                }
                max_mode = max_mode.max(idx);
                vars.push((conj, idx - 1, power));
            } else if factor == "i" {
                coeff *= Complex64::new(0.0, 1.0);
            } else {
                let v: f64 = factor
                    .parse()
                    .map_err(|_| bad(format!("bad factor {factor:?}")))?;
                coeff *= v;
            }
        }
        parsed.push((coeff, vars));
    }
    let modes = match modes {
        Some(m) if m < max_mode => {
            return Err(Error::ModeMismatch(m, max_mode));
        }
        Some(m) => m,
        None => max_mode.max(1),
    };
    let mut out = PolynomialSymbol::zero(modes);
    for (coeff, vars) in parsed {
        let mut mono = Monomial::constant(modes);
        for (conj, i, p) in vars {
            if conj {
                mono.zb[i] += p;
            } else {
                mono.z[i] += p;
            }
        }
        out.add_term(mono, coeff);
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TermJson {
    pub m: Vec<u32>,
    pub n: Vec<u32>,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SymbolJson {
    pub modes: usize,
    pub terms: Vec<TermJson>,
}

impl From<&PolynomialSymbol> for SymbolJson {
    fn from(p: &PolynomialSymbol) -> Self {
        Self {
            modes: p.modes,
            terms: p
                .terms
                .iter()
                .map(|(m, c)| TermJson {
                    m: m.z.clone(),
                    n: m.zb.clone(),
                    re: c.re,
                    im: c.im,
                })
                .collect(),
        }
    }
}

impl TryFrom<&SymbolJson> for PolynomialSymbol {
    type Error = Error;
    fn try_from(j: &SymbolJson) -> Result<Self> {
        let mut out = PolynomialSymbol::zero(j.modes);
        for t in &j.terms {
            if t.m.len() != j.modes || t.n.len() != j.modes {
                return Err(Error::MalformedInput(format!(
                    "term exponents must have {} entries",
                    j.modes
                )));
            }
            out.add_term(
                Monomial {
                    z: t.m.clone(),
                    zb: t.n.clone(),
                },
                Complex64::new(t.re, t.im),
            );
        }
        Ok(out)
    }
}

/// `amplitude · Πᵢ (2πβᵢ)⁻¹ exp(−|zⁱ|²/βᵢ)`, normalized against
/// `dvol = Πᵢ 2 dxⁱdyⁱ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianSymbol {
    variances: Vec<f64>,
    amplitude: f64,
}

impl GaussianSymbol {
    pub fn new(variances: Vec<f64>, amplitude: f64) -> Result<Self> {
        if variances.is_empty() {
            return Err(Error::InvalidArgument("Gaussian needs at least one mode".into()));
        }
        if let Some(&b) = variances.iter().find(|b| !(b.is_finite() && **b > 0.0)) {
            return Err(Error::InvalidArgument(format!("variance must be positive, got {b}")));
        }
        Ok(Self {
            variances,
            amplitude,
        })
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn modes(&self) -> usize {
        self.variances.len()
    }

    pub fn eval(&self, z: &[Complex64]) -> f64 {
        self.amplitude
            * self
                .variances
                .iter()
                .zip(z)
                .map(|(b, zi)| (-zi.norm_sqr() / b).exp() / (2.0 * PI * b))
                .product::<f64>()
    }

    /// Value at the origin, which is also its supremum.
    pub fn peak(&self) -> f64 {
        self.amplitude * self.variances.iter().map(|b| 1.0 / (2.0 * PI * b)).product::<f64>()
    }
}

/// Closed form: variances grow by `ħ`, amplitude unchanged.
pub fn berezin_transform_gaussian(g: &GaussianSymbol, hbar: f64) -> GaussianSymbol {
    GaussianSymbol {
        variances: g.variances.iter().map(|b| b + hbar).collect(),
        amplitude: g.amplitude,
    }
}

/// Berezin kernel `b_ħ(z) = (2πħ)^{−N} exp(−|z|²/ħ)`.
pub fn berezin_kernel(z: &[Complex64], hbar: f64) -> f64 {
    z.iter()
        .map(|zi| (-zi.norm_sqr() / hbar).exp() / (2.0 * PI * hbar))
        .product()
}

/// `(b_ħ ∗ f)(z)` for a one-mode Gaussian by tensor trapezoid quadrature
/// over a square that holds the integrand up to a tail below `1e−10`.
pub fn berezin_quadrature_1d(g: &GaussianSymbol, hbar: f64, z: Complex64, points: usize) -> Result<f64> {
    if g.modes() != 1 {
        return Err(Error::ModeMismatch(g.modes(), 1));
    }
    let beta = g.variances[0];
    // The integrand is a Gaussian in w centred at z·β/(β+ħ) with
    // parameter s² = βħ/(β+ħ); e^{−r²/s²} < 1e−10 beyond r = 4.8·s.
    let centre = z * (beta / (beta + hbar));
    let s = (beta * hbar / (beta + hbar)).sqrt();
    let radius = 6.0 * s;
    let h = 2.0 * radius / (points - 1) as f64;
    let mut sum = 0.0;
    for a in 0..points {
        let wa = if a == 0 || a == points - 1 { 0.5 } else { 1.0 };
        for b in 0..points {
            let wb = if b == 0 || b == points - 1 { 0.5 } else { 1.0 };
            let w = centre + Complex64::new(-radius + a as f64 * h, -radius + b as f64 * h);
            sum += wa * wb * berezin_kernel(&[z - w], hbar) * g.eval(&[w]);
        }
    }
    Ok(2.0 * h * h * sum)
}

/// Plane wave `e^{iφ}` with `φ(z) = Σᵢ φᵢzⁱ + φ̄ᵢz̄ⁱ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentialSymbol {
    pub phi: Vec<Complex64>,
}

impl ExponentialSymbol {
    pub fn new(phi: Vec<Complex64>) -> Self {
        Self { phi }
    }

    pub fn modes(&self) -> usize {
        self.phi.len()
    }

    /// `Σᵢ |φᵢ|²`
    pub fn norm_sq(&self) -> f64 {
        self.phi.iter().map(|p| p.norm_sqr()).sum()
    }

    pub fn eval(&self, z: &[Complex64]) -> Complex64 {
        let arg: f64 = self.phi.iter().zip(z).map(|(p, zi)| 2.0 * (p * zi).re).sum();
        Complex64::from_polar(1.0, arg)
    }
}

/// `er_k(ζ) = e^ζ − Σ_{j≤k} ζʲ/j!`, summed as a tail series near the
/// origin to avoid cancellation.
pub fn exp_remainder(k: u32, zeta: Complex64) -> Complex64 {
    if zeta.norm() <= 2.0 {
        let mut term = Complex64::new(1.0, 0.0);
        for j in 1..=k + 1 {
            term *= zeta / j as f64;
        }
        let mut sum = term;
        let mut j = k + 2;
        loop {
            term *= zeta / j as f64;
            sum += term;
            if term.norm() <= 1e-18 * sum.norm().max(f64::MIN_POSITIVE) {
                break;
            }
            j += 1;
        }
        sum
    } else {
        let mut partial = Complex64::new(0.0, 0.0);
        let mut term = Complex64::new(1.0, 0.0);
        for j in 0..=k {
            if j > 0 {
                term *= zeta / j as f64;
            }
            partial += term;
        }
        zeta.exp() - partial
    }
}

/// `|er_k(ζ)| / ((1 + e^{Re ζ})·|ζ|^{k+1})`, continued to the origin.
pub fn remainder_ratio(k: u32, zeta: Complex64) -> f64 {
    let r = zeta.norm();
    if r == 0.0 {
        return 1.0 / (2.0 * factorial(k + 1) as f64);
    }
    exp_remainder(k, zeta).norm() / ((1.0 + zeta.re.exp()) * r.powi(k as i32 + 1))
}

/// Smallest `C_k` consistent with the fit samples, refined by local
/// compass search around the best samples.
pub fn fit_remainder_constant(k: u32, fit_samples: &[Complex64]) -> f64 {
    let mut scored: Vec<(f64, Complex64)> = fit_samples
        .iter()
        .map(|&z| (remainder_ratio(k, z), z))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = scored.first().map(|s| s.0).unwrap_or(0.0);
    for &(start_val, start) in scored.iter().take(8) {
        let (mut val, mut at) = (start_val, start);
        let mut step = 0.1;
        while step > 1e-12 {
            let mut moved = false;
            for d in [
                Complex64::new(step, 0.0),
                Complex64::new(-step, 0.0),
                Complex64::new(0.0, step),
                Complex64::new(0.0, -step),
            ] {
                let cand = remainder_ratio(k, at + d);
                if cand > val {
                    val = cand;
                    at += d;
                    moved = true;
                }
            }
            if !moved {
                step *= 0.5;
            }
        }
        best = best.max(val);
    }
    best
}

/// Dense square grid on `[−r, r]²` used to fit `C_k`.
pub fn remainder_fit_grid(radius: f64, per_axis: usize) -> Vec<Complex64> {
    let h = 2.0 * radius / (per_axis - 1) as f64;
    (0..per_axis)
        .flat_map(|a| {
            (0..per_axis).map(move |b| Complex64::new(-radius + a as f64 * h, -radius + b as f64 * h))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct RemainderCheck {
    pub k: u32,
    pub constant: f64,
    pub max_ratio: f64,
    pub violations: usize,
}

impl RemainderCheck {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Fit `C_k` on a dense grid over `|Re ζ|, |Im ζ| ≤ 10` and assert the bound
/// on the held-out samples.
pub fn exp_remainder_bound_check(k: u32, held_out: &[Complex64]) -> RemainderCheck {
    let constant = fit_remainder_constant(k, &remainder_fit_grid(10.0, 401));
    let ratios: Vec<f64> = held_out.iter().map(|&z| remainder_ratio(k, z)).collect();
    RemainderCheck {
        k,
        constant,
        max_ratio: ratios.iter().cloned().fold(0.0, f64::max),
        violations: ratios.iter().filter(|&&r| r > constant).count(),
    }
}

/// `ζ = ħ·Σᵢ φᵢ·conj(φ'ᵢ)`.
pub fn star_zeta(phi: &[Complex64], phi2: &[Complex64], hbar: f64) -> Complex64 {
    phi.iter().zip(phi2).map(|(a, b)| a * b.conj()).sum::<Complex64>() * hbar
}

/// `R_T^k = ħ^{−k}·|er_k(ζ)|·exp(−(ħ/2)|φ+φ'|²)`.
pub fn star_remainder_exponentials(
    phi: &[Complex64],
    phi2: &[Complex64],
    hbar: f64,
    k: u32,
) -> Result<f64> {
    if phi.len() != phi2.len() {
        return Err(Error::ModeMismatch(phi.len(), phi2.len()));
    }
    if !(hbar.is_finite() && hbar > 0.0) {
        return Err(Error::InvalidArgument(format!("hbar must be positive, got {hbar}")));
    }
    let zeta = star_zeta(phi, phi2, hbar);
    let sum_sq: f64 = phi.iter().zip(phi2).map(|(a, b)| (a + b).norm_sqr()).sum();
    Ok(exp_remainder(k, zeta).norm() * (-(hbar / 2.0) * sum_sq).exp() / hbar.powi(k as i32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn z() -> PolynomialSymbol {
        PolynomialSymbol::z(1, 0)
    }

    fn zb() -> PolynomialSymbol {
        PolynomialSymbol::zb(1, 0)
    }

    #[test]
    fn bracket_examples() {
        assert_eq!(poisson_bracket(&z(), &zb()).unwrap(), PolynomialSymbol::constant(1, c(0.0, 1.0)));
        let f = parse_symbol("z1^2*zb1 + 3*z1", None).unwrap();
        assert!(poisson_bracket(&f, &f).unwrap().is_zero());
        let z2 = z().mul(&z()).unwrap();
        assert_eq!(poisson_bracket(&z2, &zb()).unwrap(), z().scale(&c(0.0, 2.0)));
        assert!(matches!(
            poisson_bracket(&z(), &PolynomialSymbol::z(2, 0)),
            Err(Error::ModeMismatch(1, 2))
        ));
    }

    #[test]
    fn star_examples() {
        let h = c(0.3, 0.0);
        let zz = z().mul(&zb()).unwrap();
        let one = PolynomialSymbol::one(1);
        assert_eq!(star_t(&z(), &zb(), &h).unwrap(), zz.sub(&one.scale(&h)).unwrap());
        assert_eq!(star_t(&zb(), &z(), &h).unwrap(), zz);
        assert_eq!(star_xi(&zb(), &z(), &h).unwrap(), zz.add(&one.scale(&h)).unwrap());
        assert_eq!(star_xi(&z(), &zb(), &h).unwrap(), zz);
        let f = parse_symbol("z1^2*zb1 + (0,2)*zb1^3", None).unwrap();
        assert_eq!(star_t(&one, &f, &h).unwrap(), f);
        let comm = star_xi(&z(), &zb(), &h)
            .unwrap()
            .sub(&star_xi(&zb(), &z(), &h).unwrap())
            .unwrap();
        let pb = poisson_bracket(&z(), &zb()).unwrap().scale(&(c(0.0, 1.0) * h));
        assert_eq!(comm, pb);
    }

    #[test]
    fn berezin_examples() {
        let h = c(0.25, 0.0);
        assert_eq!(berezin_transform_poly(&z(), &h), z());
        let zz = z().mul(&zb()).unwrap();
        let expected = zz.add(&PolynomialSymbol::constant(1, h)).unwrap();
        assert_eq!(berezin_transform_poly(&zz, &h), expected);
        // |z|⁴ → z²z̄² + 4ħ zz̄ + 2ħ²
        let h = exact(1, 3, 0, 1);
        let zz = ExactPolynomial::z(1, 0).mul(&ExactPolynomial::zb(1, 0)).unwrap();
        let quartic = zz.mul(&zz).unwrap();
        let expected = quartic
            .add(&zz.scale(&(h.clone() * exact(4, 1, 0, 1))))
            .unwrap()
            .add(&ExactPolynomial::constant(1, h.clone() * h.clone() * exact(2, 1, 0, 1)))
            .unwrap();
        assert_eq!(berezin_transform_poly(&quartic, &h), expected);
    }

    #[test]
    fn gauge_examples() {
        let h = c(0.5, 0.0);
        let one = PolynomialSymbol::one(1);
        assert_eq!(gauge_relation_check(&one, &one, &h).unwrap(), 0.0);
        assert_eq!(gauge_relation_check(&z(), &zb(), &h).unwrap(), 0.0);
    }

    #[test]
    fn exact_gauge_relation_holds_identically() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let h = exact(1, 2, 0, 1);
        for _ in 0..5 {
            let f = random_exact_polynomial(2, 3, &mut rng);
            let g = random_exact_polynomial(2, 3, &mut rng);
            let lhs = berezin_transform_poly(&star_t(&f, &g, &h).unwrap(), &h);
            let rhs = star_xi(&berezin_transform_poly(&f, &h), &berezin_transform_poly(&g, &h), &h).unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn involution_of_star_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = exact(2, 3, 0, 1);
        let f = random_exact_polynomial(2, 3, &mut rng);
        let g = random_exact_polynomial(2, 3, &mut rng);
        let lhs = star_t(&f, &g, &h).unwrap().conj();
        let rhs = star_t(&g.conj(), &f.conj(), &h).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn literal_round_trip() {
        let p = parse_symbol("1.0*z1^2*zb1 + (0,0.5)*z2 - 3 + 2.5e-3*zb2^2", None).unwrap();
        assert_eq!(p.modes(), 2);
        assert_eq!(p.len(), 4);
        let back = parse_symbol(&p.to_string(), Some(2)).unwrap();
        assert_eq!(back, p);
        let json = SymbolJson::from(&p);
        assert_eq!(PolynomialSymbol::try_from(&json).unwrap(), p);
        let neg = parse_symbol("-z1 - zb1", None).unwrap();
        assert_eq!(neg.coeff(&Monomial { z: vec![1], zb: vec![0] }), c(-1.0, 0.0));
        assert_eq!(neg.coeff(&Monomial { z: vec![0], zb: vec![1] }), c(-1.0, 0.0));
        for bad in ["z0", "z1 +", "(1,2", "z1^x", "q1", "z1 + + z2"] {
            assert!(parse_symbol(bad, None).is_err(), "{bad}");
        }
        assert!(matches!(parse_symbol("z3", Some(2)), Err(Error::ModeMismatch(2, 3))));
    }

    #[test]
    fn gaussian_transform() {
        let g = GaussianSymbol::new(vec![1.0], 1.0).unwrap();
        assert_eq!(berezin_transform_gaussian(&g, 0.0), g);
        let t = berezin_transform_gaussian(&g, 0.25);
        assert_eq!(t.variances(), &[1.25]);
        for zr in [0.0, 0.7, 2.0] {
            let z = c(zr, 0.3 * zr);
            let q = berezin_quadrature_1d(&g, 0.25, z, 161).unwrap();
            assert!((q - t.eval(&[z])).abs() < 1e-9, "{q} vs {}", t.eval(&[z]));
        }
        assert!(GaussianSymbol::new(vec![0.0], 1.0).is_err());
    }

    #[test]
    fn remainder_examples() {
        assert_eq!(exp_remainder(2, c(0.0, 0.0)), c(0.0, 0.0));
        let er0 = exp_remainder(0, c(-1.0, 0.0));
        assert!((er0.re - ((-1.0f64).exp() - 1.0)).abs() < 1e-15);
        for k in 0..4 {
            for z in [c(0.3, -0.2), c(1.9, 0.5), c(-1.5, 0.1)] {
                let direct = {
                    let mut s = c(0.0, 0.0);
                    let mut t = c(1.0, 0.0);
                    for j in 0..=k {
                        if j > 0 {
                            t *= z / j as f64;
                        }
                        s += t;
                    }
                    z.exp() - s
                };
                assert!((exp_remainder(k, z) - direct).norm() < 1e-13);
            }
        }
        let phi = [c(1.0, 0.0)];
        assert_eq!(star_remainder_exponentials(&phi, &[c(0.0, 0.0)], 1.0, 2).unwrap(), 0.0);
        let r = star_remainder_exponentials(&phi, &phi, 1.0, 0).unwrap();
        assert!((r - (1f64.exp() - 1.0) * (-2.0f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn remainder_constant_is_interior_maximum() {
        let check = exp_remainder_bound_check(1, &[c(-1.5, 0.0), c(0.0, 0.0), c(9.0, 4.0)]);
        assert!(check.passed());
        assert!(check.constant > 0.25 && check.constant < 0.27, "{}", check.constant);
    }
}
