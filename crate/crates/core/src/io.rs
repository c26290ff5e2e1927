//! File formats: matrices (CSV or JSON envelope), causal sets (JSON or
//! edge-list text), operator dumps and covector lists.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::causet::{parse_causal_set, CausalSet};
use crate::error::{Error, Result};
use crate::fock::{FockOperator, FockTruncation};
use crate::kahler::{InnerProductSpace, PauliJordanOperator};
use crate::linalg::{CMatrix, RMatrix};

/// JSON envelope for a real matrix with an optional gram (identity when
/// absent).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gram: Option<Vec<Vec<f64>>>,
    pub matrix: Vec<Vec<f64>>,
}

fn rows_to_matrix(rows: &[Vec<f64>], dim: usize, what: &str) -> Result<RMatrix> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(Error::MalformedInput(format!("{what} is not {dim}x{dim}")));
    }
    Ok(RMatrix::from_fn(dim, dim, |r, c| rows[r][c]))
}

fn matrix_to_rows(m: &RMatrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl MatrixFile {
    pub fn from_matrix(matrix: &RMatrix, gram: Option<&RMatrix>) -> Self {
        Self {
            dim: matrix.nrows(),
            gram: gram.map(matrix_to_rows),
            matrix: matrix_to_rows(matrix),
        }
    }

    pub fn matrices(&self) -> Result<(RMatrix, Option<RMatrix>)> {
        let m = rows_to_matrix(&self.matrix, self.dim, "matrix")?;
        let g = self
            .gram
            .as_ref()
            .map(|g| rows_to_matrix(g, self.dim, "gram"))
            .transpose()?;
        Ok((m, g))
    }
}

fn looks_like_json(text: &str) -> bool {
    text.trim_start().starts_with('{')
}

/// Row-major decimal CSV without header.
pub fn parse_matrix_csv(text: &str) -> Result<RMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let row = record
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::MalformedInput(format!("not a number: {f:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let n = rows.len();
    if n == 0 {
        return Err(Error::MalformedInput("empty matrix".into()));
    }
    rows_to_matrix(&rows, n, "CSV matrix")
}

pub fn matrix_to_csv(m: &RMatrix) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for row in m.row_iter() {
        w.write_record(row.iter().map(|x| format!("{x:?}")))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::MalformedInput(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
}

/// Matrix and optional gram from CSV or the JSON envelope.
pub fn parse_matrix_input(text: &str) -> Result<(RMatrix, Option<RMatrix>)> {
    if looks_like_json(text) {
        serde_json::from_str::<MatrixFile>(text)?.matrices()
    } else {
        Ok((parse_matrix_csv(text)?, None))
    }
}

/// Validated Pauli-Jordan operator from matrix text.
pub fn parse_pauli_jordan(text: &str) -> Result<PauliJordanOperator> {
    let (m, g) = parse_matrix_input(text)?;
    let space = match g {
        Some(g) => InnerProductSpace::new(g)?,
        None => InnerProductSpace::identity(m.nrows()),
    };
    PauliJordanOperator::new(space, m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalSetFile {
    pub n: usize,
    pub relations: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<[f64; 2]>>,
}

impl CausalSetFile {
    pub fn from_causal_set(c: &CausalSet) -> Self {
        Self {
            n: c.len(),
            relations: c.relations().into_iter().map(|(a, b)| [a, b]).collect(),
            coords: c.coords().map(|s| s.to_vec()),
        }
    }

    pub fn to_causal_set(&self) -> Result<CausalSet> {
        let pairs: Vec<(usize, usize)> = self.relations.iter().map(|r| (r[0], r[1])).collect();
        CausalSet::from_relations(self.n, &pairs, self.coords.clone())
    }
}

/// Causal set from JSON or edge-list text.
pub fn parse_causal_set_input(text: &str) -> Result<CausalSet> {
    if looks_like_json(text) {
        serde_json::from_str::<CausalSetFile>(text)?.to_causal_set()
    } else {
        parse_causal_set(text)
    }
}

/// Dense operator dump with `[re, im]` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorDump {
    pub trunc: FockTruncation,
    pub valid_degree: usize,
    pub matrix: Vec<Vec<[f64; 2]>>,
}

impl From<&FockOperator> for OperatorDump {
    fn from(op: &FockOperator) -> Self {
        Self {
            trunc: op.trunc(),
            valid_degree: op.valid_degree(),
            matrix: op
                .matrix()
                .row_iter()
                .map(|r| r.iter().map(|z| [z.re, z.im]).collect())
                .collect(),
        }
    }
}

impl TryFrom<&OperatorDump> for FockOperator {
    type Error = Error;

    fn try_from(d: &OperatorDump) -> Result<Self> {
        let dim = d.trunc.dim();
        if d.matrix.len() != dim || d.matrix.iter().any(|r| r.len() != dim) {
            return Err(Error::MalformedInput(format!("operator dump is not {dim}x{dim}")));
        }
        let m = CMatrix::from_fn(dim, dim, |r, c| Complex64::new(d.matrix[r][c][0], d.matrix[r][c][1]));
        FockOperator::new(FockTruncation::new(d.trunc.modes(), d.trunc.cutoff())?, m, d.valid_degree)
    }
}

/// Long-format CSV `row,col,re,im` of the nonzero entries.
pub fn operator_to_csv(op: &FockOperator) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["row", "col", "re", "im"])?;
    let m = op.matrix();
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let z = m[(r, c)];
            if z.re != 0.0 || z.im != 0.0 {
                w.write_record([r.to_string(), c.to_string(), format!("{:?}", z.re), format!("{:?}", z.im)])?;
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::MalformedInput(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
}

/// One covector per line as complex components: `re im re im ...`,
/// separated by whitespace or commas.
pub fn parse_covector_list(text: &str) -> Result<Vec<Vec<Complex64>>> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| {
            let nums = l
                .split(|ch: char| ch == ',' || ch.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|_| Error::MalformedInput(format!("not a number: {s:?}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            if nums.len() % 2 == 1 || nums.is_empty() {
                return Err(Error::MalformedInput(format!(
                    "covector line needs re/im pairs: {l:?}"
                )));
            }
            Ok(nums.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect())
        })
        .collect()
}

pub fn read_text(path: &Path) -> Result<String> {
    Ok(std::fs::read_to_string(path)?)
}

/// Pretty JSON with a trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kahler::rotation_block;
    use crate::linalg::c;

    #[test]
    fn csv_round_trip() {
        let m = rotation_block(1.5);
        let text = matrix_to_csv(&m).unwrap();
        assert_eq!(parse_matrix_csv(&text).unwrap(), m);
        assert!(parse_matrix_csv("1,2\n3").is_err());
        assert!(parse_matrix_csv("1,x\n3,4").is_err());
    }

    #[test]
    fn json_envelope_defaults_to_identity_gram() {
        let text = r#"{"dim": 2, "matrix": [[0, 1], [-1, 0]]}"#;
        let op = parse_pauli_jordan(text).unwrap();
        assert!(op.space().is_identity());
        let file = MatrixFile::from_matrix(op.matrix(), Some(&RMatrix::identity(2, 2)));
        let back = serde_json::to_string(&file).unwrap();
        assert!(parse_pauli_jordan(&back).is_ok());
        assert!(parse_matrix_input(r#"{"dim": 3, "matrix": [[0, 1], [-1, 0]]}"#).is_err());
    }

    #[test]
    fn causal_set_formats_agree() {
        let json = r#"{"n": 3, "relations": [[0, 1], [1, 2]]}"#;
        let a = parse_causal_set_input(json).unwrap();
        let b = parse_causal_set_input("0<1\n1<2").unwrap();
        assert_eq!(a.causal_matrix(), b.causal_matrix());
        let file = CausalSetFile::from_causal_set(&a);
        assert_eq!(file.relations.len(), 3);
        assert!(parse_causal_set_input(r#"{"n": 2, "relations": [[0, 1], [1, 0]]}"#).is_err());
    }

    #[test]
    fn operator_dump_round_trip() {
        let t = FockTruncation::new(1, 2).unwrap();
        let op = FockOperator::identity(t).scale(Complex64::new(0.5, -1.0));
        let dump = OperatorDump::from(&op);
        let json = serde_json::to_string(&dump).unwrap();
        let back: OperatorDump = serde_json::from_str(&json).unwrap();
        assert_eq!(FockOperator::try_from(&back).unwrap(), op);
        let csv = operator_to_csv(&op).unwrap();
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn covector_lines() {
        let v = parse_covector_list("# phi\n0 0\n1, 0.5, -1 2\n").unwrap();
        assert_eq!(v, vec![vec![c(0.0)], vec![Complex64::new(1.0, 0.5), Complex64::new(-1.0, 2.0)]]);
        assert!(parse_covector_list("1 2 3").is_err());
    }
}
