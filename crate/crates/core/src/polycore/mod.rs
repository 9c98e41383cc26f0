//! Matrix polynomials with an explicit grade, Möbius transformations and
//! the six `M_A`-structures.

mod mobius;
mod structure;

pub use mobius::{mobius_weights, MobiusMatrix};
pub use structure::{
    is_structured, random_polynomial, random_structured, random_structured_with, structure_project,
    structure_project_mobius, structure_residual, StructureKind, DEFAULT_STRUCTURE_TOL,
};

use alloc::vec::Vec;
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::{Field, Scalar};

/// `P(λ) = Σ_{i=0}^{g} P_i λ^i` stored with an explicit grade `g`.
///
/// The grade is part of the value: trailing zero coefficients are kept and
/// `reversal`/`mobius` act at the stored grade.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixPolynomial<T: Scalar> {
    rows: usize,
    cols: usize,
    coeffs: Vec<DMatrix<T>>,
}

/// Two matrices measured jointly: `‖(C, D)‖_F² = ‖C‖_F² + ‖D‖_F²`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarPair<T: Scalar> {
    /// First component.
    pub c: DMatrix<T>,
    /// Second component.
    pub d: DMatrix<T>,
}

impl<T: Scalar> ScalarPair<T> {
    /// Joint Frobenius norm.
    pub fn norm(&self) -> f64 {
        pair_norm(&self.c, &self.d)
    }
}

/// `sqrt(‖c‖_F² + ‖d‖_F²)`.
pub fn pair_norm<T: Scalar>(c: &DMatrix<T>, d: &DMatrix<T>) -> f64 {
    let a = c.norm();
    let b = d.norm();
    libm::hypot(a, b)
}

impl<T: Scalar> MatrixPolynomial<T> {
    /// Build from ascending coefficients `P_0..P_g`; the grade is `coeffs.len() - 1`.
    pub fn new(coeffs: Vec<DMatrix<T>>) -> Result<Self> {
        let first = coeffs.first().ok_or(Error::InvalidArgument("a polynomial needs at least one coefficient"))?;
        let (rows, cols) = first.shape();
        for c in &coeffs {
            if c.shape() != (rows, cols) {
                return Err(Error::DimensionMismatch {
                    op: "coefficient list",
                    expected: (rows, cols),
                    found: c.shape(),
                });
            }
        }
        Ok(Self { rows, cols, coeffs })
    }

    /// Zero polynomial of the given size and grade.
    pub fn zeros(rows: usize, cols: usize, grade: usize) -> Self {
        Self { rows, cols, coeffs: (0..=grade).map(|_| DMatrix::zeros(rows, cols)).collect() }
    }

    /// Grade-0 polynomial.
    pub fn constant(m: DMatrix<T>) -> Self {
        let (rows, cols) = m.shape();
        Self { rows, cols, coeffs: alloc::vec![m] }
    }

    /// The pencil `λ l1 + l0` (grade 1).
    pub fn pencil(l0: DMatrix<T>, l1: DMatrix<T>) -> Result<Self> {
        Self::new(alloc::vec![l0, l1])
    }

    /// Row count.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Column count.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Stored grade.
    pub fn grade(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Field tag of the entries.
    pub fn field(&self) -> Field {
        T::FIELD
    }

    /// True when rows equal columns.
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Coefficients `P_0..P_g`.
    pub fn coeffs(&self) -> &[DMatrix<T>] {
        &self.coeffs
    }

    /// Coefficient `P_i`; zero matrix beyond the grade.
    pub fn coeff(&self, i: usize) -> DMatrix<T> {
        self.coeffs.get(i).cloned().unwrap_or_else(|| DMatrix::zeros(self.rows, self.cols))
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [DMatrix<T>] {
        &mut self.coeffs
    }

    /// Consume into the coefficient list.
    pub fn into_coeffs(self) -> Vec<DMatrix<T>> {
        self.coeffs
    }

    /// Index of the highest nonzero coefficient, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.iter().rposition(|c| c.iter().any(|x| *x != T::zero()))
    }

    /// `sqrt(Σ ‖P_i‖_F²)`.
    pub fn frob_norm(&self) -> f64 {
        let s: f64 = self.coeffs.iter().map(|c| c.norm_squared()).sum();
        libm::sqrt(s)
    }

    /// `Σ P_i λ0^i` by Horner's scheme.
    pub fn evaluate(&self, lambda: T) -> DMatrix<T> {
        let mut acc = self.coeffs[self.grade()].clone();
        for c in self.coeffs.iter().rev().skip(1) {
            acc *= lambda;
            acc += c;
        }
        acc
    }

    /// Same polynomial viewed at another grade.
    pub fn with_grade(&self, grade: usize) -> Result<Self> {
        let degree = self.degree().unwrap_or(0);
        if grade < degree {
            return Err(Error::InvalidGrade { grade, degree });
        }
        let coeffs = (0..=grade).map(|i| self.coeff(i)).collect();
        Ok(Self { rows: self.rows, cols: self.cols, coeffs })
    }

    /// `rev_g P(λ) = λ^g P(1/λ)`.
    pub fn reversal(&self, grade: usize) -> Result<Self> {
        let mut p = self.with_grade(grade)?;
        p.coeffs.reverse();
        Ok(p)
    }

    /// `M_A[P](λ) = Σ P_i (aλ+b)^i (cλ+d)^{g-i}` at the stored grade.
    pub fn mobius(&self, a: &MobiusMatrix<T>) -> Self {
        let g = self.grade();
        let w = mobius_weights(a, g);
        let coeffs = (0..=g)
            .map(|j| {
                let mut acc = DMatrix::zeros(self.rows, self.cols);
                for (i, p) in self.coeffs.iter().enumerate() {
                    let wij = w[(j, i)];
                    if wij != T::zero() {
                        acc += p * wij;
                    }
                }
                acc
            })
            .collect();
        Self { rows: self.rows, cols: self.cols, coeffs }
    }

    /// `P(λ)^⋆`: coefficient-wise (conjugate) transpose.
    pub fn star_adjoint(&self) -> Self {
        Self { rows: self.cols, cols: self.rows, coeffs: self.coeffs.iter().map(|c| c.adjoint()).collect() }
    }

    /// Coefficient-wise transpose without conjugation.
    pub fn transpose(&self) -> Self {
        Self { rows: self.cols, cols: self.rows, coeffs: self.coeffs.iter().map(|c| c.transpose()).collect() }
    }

    /// `s·P`.
    pub fn scaled(&self, s: T) -> Self {
        Self { rows: self.rows, cols: self.cols, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    fn zip_with(
        &self,
        other: &Self,
        op: &'static str,
        f: impl Fn(&DMatrix<T>, &DMatrix<T>) -> DMatrix<T>,
    ) -> Result<Self> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::DimensionMismatch {
                op,
                expected: (self.rows, self.cols),
                found: (other.rows, other.cols),
            });
        }
        let g = self.grade().max(other.grade());
        let coeffs = (0..=g).map(|i| f(&self.coeff(i), &other.coeff(i))).collect();
        Ok(Self { rows: self.rows, cols: self.cols, coeffs })
    }

    /// `P + Q` at grade `max(g_P, g_Q)`.
    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "polynomial sum", |a, b| a + b)
    }

    /// `P - Q` at grade `max(g_P, g_Q)`.
    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "polynomial difference", |a, b| a - b)
    }

    /// Product `P(λ)Q(λ)` at grade `g_P + g_Q`.
    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                op: "polynomial product",
                expected: (self.cols, other.cols),
                found: (other.rows, other.cols),
            });
        }
        let g = self.grade() + other.grade();
        let mut coeffs: Vec<DMatrix<T>> = (0..=g).map(|_| DMatrix::zeros(self.rows, other.cols)).collect();
        for (i, p) in self.coeffs.iter().enumerate() {
            for (j, q) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += p * q;
            }
        }
        Ok(Self { rows: self.rows, cols: other.cols, coeffs })
    }

    /// Sub-polynomial of rows `r0..r0+nr` and columns `c0..c0+nc`, same grade.
    pub fn block(&self, r0: usize, nr: usize, c0: usize, nc: usize) -> Self {
        Self {
            rows: nr,
            cols: nc,
            coeffs: self.coeffs.iter().map(|c| c.view((r0, c0), (nr, nc)).into_owned()).collect(),
        }
    }

    /// `P(λ) ⊗ I_n`.
    pub fn kron_identity(&self, n: usize) -> Self {
        let eye = DMatrix::<T>::identity(n, n);
        Self {
            rows: self.rows * n,
            cols: self.cols * n,
            coeffs: self.coeffs.iter().map(|c| c.kronecker(&eye)).collect(),
        }
    }

    /// Apply `f` to each coefficient.
    pub fn map_coeffs(&self, f: impl Fn(&DMatrix<T>) -> DMatrix<T>) -> Result<Self> {
        Self::new(self.coeffs.iter().map(f).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, Complex};

    fn scalar(cs: &[f64]) -> MatrixPolynomial<f64> {
        MatrixPolynomial::new(cs.iter().map(|&c| DMatrix::from_element(1, 1, c)).collect()).unwrap()
    }

    #[test]
    fn frob_norm_examples() {
        let i2 = DMatrix::<f64>::identity(2, 2);
        let p = MatrixPolynomial::pencil(i2.clone(), i2).unwrap();
        assert_eq!(p.frob_norm(), 2.0);
        assert_eq!(MatrixPolynomial::<f64>::zeros(3, 2, 4).frob_norm(), 0.0);
        assert_eq!(scalar(&[3.0, 4.0]).frob_norm(), 5.0);
        assert_eq!(scalar(&[3.0, 4.0]).with_grade(6).unwrap().frob_norm(), 5.0);
    }

    #[test]
    fn evaluate_examples() {
        let i2 = DMatrix::<f64>::identity(2, 2);
        let p = MatrixPolynomial::pencil(i2.clone(), i2.clone()).unwrap();
        assert_eq!(p.evaluate(2.0), i2 * 3.0);
        let q = MatrixPolynomial::new(alloc::vec![dmatrix![0.0, 0.0], dmatrix![0.0, 1.0], dmatrix![1.0, 0.0]]).unwrap();
        assert_eq!(q.evaluate(-1.0), dmatrix![1.0, -1.0]);
        assert_eq!(q.evaluate(0.0), q.coeff(0));
    }

    #[test]
    fn reversal_examples() {
        let l1 = MatrixPolynomial::pencil(dmatrix![-1.0, 0.0], dmatrix![0.0, 1.0]).unwrap();
        let r = l1.reversal(1).unwrap();
        assert_eq!(r.coeff(0), dmatrix![0.0, 1.0]);
        assert_eq!(r.coeff(1), dmatrix![-1.0, 0.0]);
        let eye = MatrixPolynomial::constant(DMatrix::<f64>::identity(3, 3));
        assert_eq!(eye.reversal(0).unwrap(), eye);
        assert_eq!(scalar(&[3.0, 2.0, 1.0]).reversal(2).unwrap(), scalar(&[1.0, 2.0, 3.0]));
        assert_eq!(scalar(&[1.0, 2.0]).reversal(0), Err(Error::InvalidGrade { grade: 0, degree: 1 }));
        let p = scalar(&[1.0, 2.0, 0.0]);
        assert_eq!(p.reversal(4).unwrap().reversal(4).unwrap(), p.with_grade(4).unwrap());
    }

    #[test]
    fn star_adjoint_examples() {
        let p = MatrixPolynomial::constant(dmatrix![0.0, 1.0; 0.0, 0.0]);
        assert_eq!(p.star_adjoint().coeff(0), dmatrix![0.0, 0.0; 1.0, 0.0]);
        let c = MatrixPolynomial::constant(DMatrix::from_element(1, 1, Complex::new(0.0, 1.0)));
        assert_eq!(c.star_adjoint().coeff(0)[(0, 0)], Complex::new(0.0, -1.0));
    }

    #[test]
    fn product_and_blocks() {
        let p = scalar(&[1.0, 1.0]);
        let q = scalar(&[-1.0, 1.0]);
        assert_eq!(p.checked_mul(&q).unwrap(), scalar(&[-1.0, 0.0, 1.0]));
        let m = MatrixPolynomial::constant(dmatrix![1.0, 2.0; 3.0, 4.0]);
        assert_eq!(m.block(1, 1, 0, 2).coeff(0), dmatrix![3.0, 4.0]);
        assert_eq!(m.kron_identity(2).rows(), 4);
        assert!(p.checked_add(&m).is_err());
        assert_eq!(scalar(&[0.0, 0.0]).degree(), None);
    }
}
