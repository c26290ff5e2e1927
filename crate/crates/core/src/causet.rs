//! Causal sets: parsing, Poisson sprinkling into the unit 2D diamond and the
//! discrete retarded Green function that feeds the Pauli-Jordan operator.

use std::f64::consts::SQRT_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kahler::{InnerProductSpace, STRUCTURE_TOL};
use crate::linalg::{max_abs, RMatrix};

/// Identity of the generator used by [`sprinkle_diamond_2d`].
pub const RNG_NAME: &str = "ChaCha8Rng (rand_chacha 0.9), Poisson count via rand_distr 0.5";

/// Finite partial order stored as a dense, transitively closed relation.
#[derive(Debug, Clone, PartialEq)]
pub struct CausalSet {
    n: usize,
    relation: Vec<bool>,
    coords: Option<Vec<[f64; 2]>>,
}

impl CausalSet {
    pub fn empty() -> Self {
        Self {
            n: 0,
            relation: Vec::new(),
            coords: None,
        }
    }

    /// Build from generating relations `x ≺ y`; the transitive closure is
    /// taken and cycles are rejected.
    pub fn from_relations(
        n: usize,
        pairs: &[(usize, usize)],
        coords: Option<Vec<[f64; 2]>>,
    ) -> Result<Self> {
        if let Some(cs) = &coords {
            if cs.len() != n {
                return Err(Error::MalformedInput(format!(
                    "{} coordinate rows for {n} elements",
                    cs.len()
                )));
            }
        }
        let mut relation = vec![false; n * n];
        for &(x, y) in pairs {
            if x >= n || y >= n {
                return Err(Error::MalformedInput(format!(
                    "relation {x}<{y} references an element outside 0..{n}"
                )));
            }
            relation[x * n + y] = true;
        }
        transitive_closure(n, &mut relation);
        if let Some(x) = (0..n).find(|&x| relation[x * n + x]) {
            return Err(Error::CycleDetected(x));
        }
        Ok(Self {
            n,
            relation,
            coords,
        })
    }

    /// Causal set induced by the lightcone order on `(t, x)` points:
    /// `p ≺ q` iff `|x_q − x_p| < t_q − t_p`.
    pub fn from_coords(points: Vec<[f64; 2]>) -> Self {
        let n = points.len();
        let mut relation = vec![false; n * n];
        for (a, p) in points.iter().enumerate() {
            for (b, q) in points.iter().enumerate() {
                relation[a * n + b] = (q[1] - p[1]).abs() < q[0] - p[0];
            }
        }
        Self {
            n,
            relation,
            coords: Some(points),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `x ≺ y`.
    pub fn precedes(&self, x: usize, y: usize) -> bool {
        self.relation[x * self.n + y]
    }

    pub fn coords(&self) -> Option<&[[f64; 2]]> {
        self.coords.as_deref()
    }

    /// Causal matrix `C[x][y] = 1` iff `x ≺ y`.
    pub fn causal_matrix(&self) -> RMatrix {
        RMatrix::from_fn(self.n, self.n, |x, y| {
            if self.precedes(x, y) {
                1.0
            } else {
                0.0
            }
        })
    }

    /// All related pairs `(x, y)` with `x ≺ y`, in row-major order.
    pub fn relations(&self) -> Vec<(usize, usize)> {
        (0..self.n)
            .flat_map(|x| (0..self.n).map(move |y| (x, y)))
            .filter(|&(x, y)| self.precedes(x, y))
            .collect()
    }

    /// True when the stored relation is irreflexive, acyclic and closed.
    pub fn is_valid(&self) -> bool {
        let mut closed = self.relation.clone();
        transitive_closure(self.n, &mut closed);
        closed == self.relation && (0..self.n).all(|x| !self.precedes(x, x))
    }
}

fn transitive_closure(n: usize, rel: &mut [bool]) {
    for k in 0..n {
        for i in 0..n {
            if rel[i * n + k] {
                for j in 0..n {
                    if rel[k * n + j] {
                        rel[i * n + j] = true;
                    }
                }
            }
        }
    }
}

/// Parse edge-list text.
///
/// Entries are separated by newlines, commas or semicolons and read either
/// `a<b`, `b>a` or `a b`. `#` starts a comment. A line `n = 12` (or
/// `n 12`) fixes the element count; otherwise it is one more than the
/// largest index mentioned.
pub fn parse_causal_set(input: &str) -> Result<CausalSet> {
    let mut declared: Option<usize> = None;
    let mut pairs = Vec::new();
    let index = |s: &str| -> Result<usize> {
        s.trim()
            .parse::<usize>()
            .map_err(|_| Error::MalformedInput(format!("not an element index: {:?}", s.trim())))
    };
    for line in input.lines() {
        let line = line.split('#').next().unwrap_or("");
        for entry in line.split([',', ';']) {
            let entry = entry.trim();
            if entry.is_empty() {
                continue;
            }
            if let Some(rest) = entry.strip_prefix('n') {
                let rest = rest.trim().trim_start_matches('=').trim();
                declared = Some(index(rest)?);
                continue;
            }
            let pair = if let Some((a, b)) = entry.split_once('<') {
                (index(a)?, index(b)?)
            } else if let Some((a, b)) = entry.split_once('>') {
                (index(b)?, index(a)?)
            } else {
                let parts: Vec<&str> = entry.split_whitespace().collect();
                match parts.as_slice() {
                    [a, b] => (index(a)?, index(b)?),
                    _ => return Err(Error::MalformedInput(format!("cannot parse {entry:?}"))),
                }
            };
            pairs.push(pair);
        }
    }
    let implied = pairs.iter().map(|&(a, b)| a.max(b) + 1).max().unwrap_or(0);
    let n = match declared {
        Some(n) if n < implied => {
            return Err(Error::MalformedInput(format!(
                "declared n = {n} but index {} appears",
                implied - 1
            )))
        }
        Some(n) => n,
        None => implied,
    };
    CausalSet::from_relations(n, &pairs, None)
}

/// Poisson sprinkling into the unit-volume causal diamond of 2D Minkowski
/// space, `0 ≤ u, v ≤ 1` in lightcone coordinates. Elements are sorted by
/// time so that the causal matrix is strictly upper triangular.
pub fn sprinkle_diamond_2d(density: f64, seed: u64) -> Result<CausalSet> {
    if !(density.is_finite() && density > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "sprinkling density must be positive, got {density}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let poisson = Poisson::new(density)
        .map_err(|e| Error::InvalidArgument(format!("Poisson mean {density}: {e}")))?;
    let count = poisson.sample(&mut rng) as usize;
    let mut uv: Vec<(f64, f64)> = (0..count)
        .map(|_| (rng.random::<f64>(), rng.random::<f64>()))
        .collect();
    uv.sort_by(|a, b| (a.0 + a.1).total_cmp(&(b.0 + b.1)).then(a.0.total_cmp(&b.0)));
    let n = uv.len();
    let mut relation = vec![false; n * n];
    for (i, p) in uv.iter().enumerate() {
        for (j, q) in uv.iter().enumerate() {
            relation[i * n + j] = p.0 < q.0 && p.1 < q.1;
        }
    }
    let coords = uv
        .iter()
        .map(|&(u, v)| [(u + v) / SQRT_2, (u - v) / SQRT_2])
        .collect();
    Ok(CausalSet {
        n,
        relation,
        coords: Some(coords),
    })
}

/// Convention used to build a discrete Green function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreenConvention {
    pub kind: String,
    pub coupling: f64,
    /// `K_R[x][y]` is supported on `y ≺ x`.
    pub support: String,
    /// How the advanced function is obtained from the retarded one.
    pub advanced: String,
}

#[derive(Debug, Clone)]
pub struct GreensData {
    pub retarded: RMatrix,
    pub convention: GreenConvention,
}

pub const DEFAULT_COUPLING: f64 = 0.5;

/// Massless 2D retarded Green function `K_R[x][y] = coupling` for `y ≺ x`.
pub fn retarded_green_2d_massless(c: &CausalSet, coupling: f64) -> GreensData {
    GreensData {
        retarded: c.causal_matrix().transpose() * coupling,
        convention: GreenConvention {
            kind: "2d-massless-causal-matrix".into(),
            coupling,
            support: "K_R[x][y] != 0 only if y precedes x".into(),
            advanced: "gram adjoint of K_R (transpose for identity gram)".into(),
        },
    }
}

/// `E_off = K_R − K_A` with `K_A` the gram adjoint `G⁻¹·K_Rᵀ·G` of the
/// retarded function. For the identity gram this is exactly `K_R − K_Rᵀ`.
pub fn pauli_jordan_from_green(g: &GreensData, space: &InnerProductSpace) -> Result<RMatrix> {
    let k = &g.retarded;
    let n = space.dim();
    if k.nrows() != k.ncols() || k.nrows() != n {
        return Err(Error::ShapeMismatch(format!(
            "K_R is {}x{}, space has dimension {n}",
            k.nrows(),
            k.ncols()
        )));
    }
    let e = if space.is_identity() {
        k - k.transpose()
    } else {
        k - space.adjoint(k)
    };
    let gram = space.gram();
    let scale = max_abs(&e).max(f64::MIN_POSITIVE) * max_abs(gram);
    let residual = max_abs(&(gram * &e + e.transpose() * gram)) / scale;
    if residual > STRUCTURE_TOL {
        return Err(Error::NotAntisymmetric { residual });
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_chain() {
        let c = parse_causal_set("0<1").unwrap();
        assert_eq!(c.causal_matrix(), RMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]));
    }

    #[test]
    fn closure_adds_transitive_pair() {
        let c = parse_causal_set("0<1\n1<2").unwrap();
        assert!(c.precedes(0, 2));
        assert_eq!(c.relations(), vec![(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn parser_variants() {
        let a = parse_causal_set("# chain\nn = 4\n0 1, 2>1; 2<3").unwrap();
        assert_eq!(a.len(), 4);
        assert!(a.precedes(0, 3));
        assert!(matches!(parse_causal_set("0<x"), Err(Error::MalformedInput(_))));
        assert!(matches!(parse_causal_set("n=1\n0<3"), Err(Error::MalformedInput(_))));
        assert!(matches!(parse_causal_set("0<1\n1<0"), Err(Error::CycleDetected(_))));
        assert!(matches!(parse_causal_set("2<2"), Err(Error::CycleDetected(2))));
        assert!(parse_causal_set("").unwrap().is_empty());
    }

    #[test]
    fn timelike_points_relate_once() {
        let c = CausalSet::from_coords(vec![[0.0, 0.0], [1.0, 0.2]]);
        assert_eq!(c.relations(), vec![(0, 1)]);
        let spacelike = CausalSet::from_coords(vec![[0.0, 0.0], [0.1, 0.5]]);
        assert!(spacelike.relations().is_empty());
    }

    #[test]
    fn sparse_sprinkle_is_valid() {
        let c = sprinkle_diamond_2d(1e-6, 1).unwrap();
        assert!(c.is_valid());
        assert!(sprinkle_diamond_2d(0.0, 1).is_err());
    }

    #[test]
    fn sprinkle_count_and_order() {
        let c = sprinkle_diamond_2d(100.0, 7).unwrap();
        assert!((c.len() as f64 - 100.0).abs() <= 40.0, "{}", c.len());
        assert!(c.is_valid());
        for (x, y) in c.relations() {
            assert!(x < y, "sprinkle is time ordered");
            let (p, q) = (c.coords().unwrap()[x], c.coords().unwrap()[y]);
            assert!((q[1] - p[1]).abs() < q[0] - p[0]);
        }
        assert_eq!(c, sprinkle_diamond_2d(100.0, 7).unwrap());
    }

    #[test]
    fn green_and_pauli_jordan() {
        let c = parse_causal_set("0<1").unwrap();
        let g = retarded_green_2d_massless(&c, DEFAULT_COUPLING);
        assert_eq!(g.retarded, RMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.5, 0.0]));
        let ones = GreensData {
            retarded: RMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]),
            convention: g.convention.clone(),
        };
        let e = pauli_jordan_from_green(&ones, &InnerProductSpace::identity(2)).unwrap();
        assert_eq!(e, RMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]));
        let empty = retarded_green_2d_massless(&CausalSet::empty(), 0.5);
        assert_eq!(empty.retarded.nrows(), 0);
        assert!(matches!(
            pauli_jordan_from_green(&g, &InnerProductSpace::identity(3)),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn zero_green_gives_zero_e() {
        let g = GreensData {
            retarded: RMatrix::zeros(3, 3),
            convention: retarded_green_2d_massless(&CausalSet::empty(), 0.5).convention,
        };
        let e = pauli_jordan_from_green(&g, &InnerProductSpace::identity(3)).unwrap();
        assert_eq!(e, RMatrix::zeros(3, 3));
    }

    #[test]
    fn gram_weighted_pauli_jordan_is_gram_antisymmetric() {
        let c = parse_causal_set("0<1\n1<2\n0<3").unwrap();
        let g = retarded_green_2d_massless(&c, 0.5);
        let gram = RMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0, 0.5, 3.0]));
        let space = InnerProductSpace::new(gram.clone()).unwrap();
        let e = pauli_jordan_from_green(&g, &space).unwrap();
        assert!(max_abs(&(&gram * &e + e.transpose() * &gram)) < 1e-14);
    }
}
