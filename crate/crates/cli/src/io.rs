//! File formats: matrix polynomials as JSON, pencils with a partition sidecar.
//!
//! A polynomial file is `{"rows", "cols", "grade", "field", "coeffs"}` with
//! each coefficient a row-major nested array; complex entries are `[re, im]`.
//! Floats are written in shortest round-trip form and parsed exactly, so a
//! read-write cycle is bit-exact.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use strukt_core::linearize::{recovery_sign, BlockKroneckerPencil};
use strukt_core::nalgebra::{Complex, DMatrix};
use strukt_core::polycore::{MatrixPolynomial, StructureKind};
use strukt_core::{Field, Scalar};

use crate::CliError;

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolyDoc {
    rows: usize,
    cols: usize,
    grade: usize,
    field: Field,
    coeffs: Vec<Vec<Vec<Entry>>>,
}

/// Partition record stored next to a pencil file.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Partition {
    /// Number of `L_k` block rows.
    pub k: usize,
    /// Block size.
    pub n: usize,
    /// Structure of the pencil.
    pub kind: StructureKind,
    /// Sign applied on recovery.
    pub sign: i8,
}

/// A polynomial over either field.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyPoly {
    /// Real coefficients.
    Real(MatrixPolynomial<f64>),
    /// Complex coefficients.
    Complex(MatrixPolynomial<Complex<f64>>),
}

/// A pencil over either field.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyPencil {
    /// Real coefficients.
    Real(BlockKroneckerPencil<f64>),
    /// Complex coefficients.
    Complex(BlockKroneckerPencil<Complex<f64>>),
}

/// `<stem>.partition.json` next to `path`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("partition.json")
}

fn entry_of<T: Scalar>(x: T) -> Result<Entry, CliError> {
    let z = x.to_complex();
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(CliError::Failure("non-finite coefficient cannot be written".into()));
    }
    Ok(match T::FIELD {
        Field::Real => Entry::Real(z.re),
        Field::Complex => Entry::Complex([z.re, z.im]),
    })
}

fn doc_of<T: Scalar>(p: &MatrixPolynomial<T>) -> Result<PolyDoc, CliError> {
    let coeffs = p
        .coeffs()
        .iter()
        .map(|c| {
            (0..c.nrows())
                .map(|i| (0..c.ncols()).map(|j| entry_of(c[(i, j)])).collect::<Result<Vec<_>, _>>())
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PolyDoc { rows: p.rows(), cols: p.cols(), grade: p.grade(), field: T::FIELD, coeffs })
}

fn coeffs_of<T: Scalar>(doc: &PolyDoc) -> Result<Vec<DMatrix<T>>, CliError> {
    let bad = |msg: String| CliError::Input(msg);
    if doc.coeffs.len() != doc.grade + 1 {
        return Err(bad(format!(
            "grade {} needs {} coefficients, found {}",
            doc.grade,
            doc.grade + 1,
            doc.coeffs.len()
        )));
    }
    doc.coeffs
        .iter()
        .enumerate()
        .map(|(d, rows)| {
            if rows.len() != doc.rows || rows.iter().any(|r| r.len() != doc.cols) {
                return Err(bad(format!("coefficient {d} is not {}x{}", doc.rows, doc.cols)));
            }
            let mut m = DMatrix::zeros(doc.rows, doc.cols);
            for (i, row) in rows.iter().enumerate() {
                for (j, e) in row.iter().enumerate() {
                    let (re, im) = match (e, doc.field) {
                        (Entry::Real(x), _) => (*x, 0.0),
                        (Entry::Complex([re, im]), Field::Complex) => (*re, *im),
                        (Entry::Complex(_), Field::Real) => {
                            return Err(bad(format!("complex entry in real coefficient {d}")));
                        }
                    };
                    m[(i, j)] = T::from_parts(re, im).ok_or_else(|| bad("complex entry in real file".into()))?;
                }
            }
            Ok(m)
        })
        .collect()
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Parse a polynomial document.
pub fn parse_poly(text: &str) -> Result<AnyPoly, CliError> {
    let doc: PolyDoc = serde_json::from_str(text).map_err(|e| CliError::Input(format!("polynomial file: {e}")))?;
    let wrap = |e: strukt_core::Error| CliError::Input(e.to_string());
    Ok(match doc.field {
        Field::Real => AnyPoly::Real(MatrixPolynomial::new(coeffs_of(&doc)?).map_err(wrap)?),
        Field::Complex => AnyPoly::Complex(MatrixPolynomial::new(coeffs_of(&doc)?).map_err(wrap)?),
    })
}

/// Serialize a polynomial document.
pub fn poly_to_string<T: Scalar>(p: &MatrixPolynomial<T>) -> Result<String, CliError> {
    let mut s = serde_json::to_string(&doc_of(p)?).map_err(|e| CliError::Failure(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Read a polynomial file.
pub fn read_poly(path: &Path) -> Result<AnyPoly, CliError> {
    parse_poly(&read_text(path)?)
}

/// Write a polynomial file.
pub fn write_poly<T: Scalar>(path: &Path, p: &MatrixPolynomial<T>) -> Result<(), CliError> {
    write_text(path, &poly_to_string(p)?)
}

/// Read a pencil file and its sidecar.
pub fn read_pencil(path: &Path) -> Result<AnyPencil, CliError> {
    let side = sidecar_path(path);
    let part: Partition = serde_json::from_str(&read_text(&side)?)
        .map_err(|e| CliError::Input(format!("malformed sidecar {}: {e}", side.display())))?;
    if part.n == 0 || part.sign != recovery_sign(part.kind, part.k) {
        return Err(CliError::Input(format!(
            "malformed sidecar {}: sign must be {} for {} with k = {}",
            side.display(),
            recovery_sign(part.kind, part.k),
            part.kind,
            part.k
        )));
    }
    fn wrap<T: Scalar>(p: MatrixPolynomial<T>, part: Partition) -> Result<BlockKroneckerPencil<T>, CliError> {
        if p.grade() > 1 {
            return Err(CliError::Input(format!("a pencil has grade 1, found {}", p.grade())));
        }
        let p = p.with_grade(1).map_err(|e| CliError::Input(e.to_string()))?;
        BlockKroneckerPencil::from_parts(p.coeff(0), p.coeff(1), part.k, part.n, part.kind)
            .map_err(|e| CliError::Input(format!("pencil does not match its sidecar: {e}")))
    }
    Ok(match read_poly(path)? {
        AnyPoly::Real(p) => AnyPencil::Real(wrap(p, part)?),
        AnyPoly::Complex(p) => AnyPencil::Complex(wrap(p, part)?),
    })
}

/// Write a pencil file and its sidecar.
pub fn write_pencil<T: Scalar>(path: &Path, l: &BlockKroneckerPencil<T>) -> Result<(), CliError> {
    write_poly(path, &l.as_polynomial())?;
    let part = Partition { k: l.k, n: l.n, kind: l.kind, sign: l.sign };
    let mut s = serde_json::to_string(&part).map_err(|e| CliError::Failure(e.to_string()))?;
    s.push('\n');
    write_text(&sidecar_path(path), &s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_round_trip_is_bit_exact() {
        let c0 = DMatrix::from_row_slice(2, 2, &[0.1, -0.0, 1e-300, f64::MAX]);
        let c1 = DMatrix::from_row_slice(2, 2, &[1.0 / 3.0, f64::MIN_POSITIVE, 5e-324, -2.5]);
        let p = MatrixPolynomial::new(vec![c0, c1]).unwrap();
        let text = poly_to_string(&p).unwrap();
        let AnyPoly::Real(q) = parse_poly(&text).unwrap() else { panic!("field changed") };
        for (a, b) in p.coeffs().iter().zip(q.coeffs()) {
            for (x, y) in a.iter().zip(b.iter()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
        assert_eq!(poly_to_string(&q).unwrap(), text);
    }

    #[test]
    fn complex_entries_are_pairs() {
        let c = DMatrix::from_row_slice(1, 2, &[Complex::new(1.5, -2.0), Complex::new(0.0, 0.1)]);
        let p = MatrixPolynomial::new(vec![c]).unwrap();
        let text = poly_to_string(&p).unwrap();
        assert!(text.contains("[[[[1.5,-2.0],[0.0,0.1]]]]"), "{text}");
        assert_eq!(parse_poly(&text).unwrap(), AnyPoly::Complex(p));
    }

    #[test]
    fn malformed_documents_are_input_errors() {
        for text in [
            "{}",
            r#"{"rows":1,"cols":1,"grade":1,"field":"real","coeffs":[[[1.0]]]}"#,
            r#"{"rows":1,"cols":2,"grade":0,"field":"real","coeffs":[[[1.0]]]}"#,
            r#"{"rows":1,"cols":1,"grade":0,"field":"real","coeffs":[[[[1.0,2.0]]]]}"#,
        ] {
            assert!(matches!(parse_poly(text), Err(CliError::Input(_))), "{text}");
        }
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(sidecar_path(Path::new("out/L.json")), PathBuf::from("out/L.partition.json"));
    }
}
