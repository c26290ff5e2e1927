//! Operator dumps for small one-mode truncations, compared against the
//! files in `tests/golden`. Set `SJQ_BLESS=1` to rewrite them.

use std::path::PathBuf;

use num_complex::Complex64;
use sjq_core::fock::{build_ladders, toeplitz_of_symbol, weyl_generator, FockOperator, FockTruncation};
use sjq_core::io::{to_json_string, OperatorDump};
use sjq_core::symbol::parse_symbol;

fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn compare(name: &str, op: &FockOperator) {
    let path = golden_path(name);
    let dump = OperatorDump::from(op);
    if std::env::var_os("SJQ_BLESS").is_some() {
        std::fs::write(&path, to_json_string(&dump).unwrap()).unwrap();
        return;
    }
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let stored: OperatorDump = serde_json::from_str(&text).unwrap();
    assert_eq!(stored.trunc, dump.trunc, "{name}");
    assert_eq!(stored.valid_degree, dump.valid_degree, "{name}");
    let stored = FockOperator::try_from(&stored).unwrap();
    let diff = (stored.matrix() - op.matrix()).map(|z| z.norm()).max();
    assert!(diff < 1e-13, "{name} drifted by {diff:e}");
}

fn t(cutoff: usize) -> FockTruncation {
    FockTruncation::new(1, cutoff).unwrap()
}

#[test]
fn lowering_cutoff_2() {
    let (_, lower) = build_ladders(t(2));
    compare("lower_n1_c2.json", &lower[0]);
}

#[test]
fn raising_cutoff_4() {
    let (raise, _) = build_ladders(t(4));
    compare("raise_n1_c4.json", &raise[0]);
}

#[test]
fn toeplitz_number_symbol_cutoff_4() {
    let f = parse_symbol("z1*zb1", None).unwrap();
    compare("toeplitz_zzb_n1_c4_h0.5.json", &toeplitz_of_symbol(&f, 0.5, t(4)).unwrap());
}

#[test]
fn toeplitz_mixed_symbol_cutoff_4() {
    let f = parse_symbol("z1^2 + (0,1)*zb1 - 0.5*z1*zb1^2", None).unwrap();
    compare("toeplitz_mixed_n1_c4_h1.json", &toeplitz_of_symbol(&f, 1.0, t(4)).unwrap());
}

#[test]
fn weyl_cutoff_4() {
    let w = weyl_generator(&[Complex64::new(0.06, -0.08)], 1.0, t(4)).unwrap();
    compare("weyl_n1_c4_h1.json", &w);
}
