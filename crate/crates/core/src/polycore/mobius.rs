use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `A = [a b; c d]` with `ad - bc ≠ 0`, inducing `M_A`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MobiusMatrix<T: Scalar> {
    a: T,
    b: T,
    c: T,
    d: T,
}

impl<T: Scalar> MobiusMatrix<T> {
    /// Checked constructor; a zero determinant is rejected.
    pub fn new(a: T, b: T, c: T, d: T) -> Result<Self> {
        let m = Self { a, b, c, d };
        if m.det() == T::zero() {
            return Err(Error::SingularMobius);
        }
        Ok(m)
    }

    /// `I_2`, for which `M_A` is the identity.
    pub fn identity() -> Self {
        Self { a: T::one(), b: T::zero(), c: T::zero(), d: T::one() }
    }

    /// `R_2 = [0 1; 1 0]`, for which `M_A` is the reversal.
    pub fn reversal() -> Self {
        Self { a: T::zero(), b: T::one(), c: T::one(), d: T::zero() }
    }

    /// Entries `(a, b, c, d)`.
    pub fn entries(&self) -> (T, T, T, T) {
        (self.a, self.b, self.c, self.d)
    }

    /// `ad - bc`.
    pub fn det(&self) -> T {
        self.a * self.d - self.b * self.c
    }

    /// Matrix product `self · other`; `M_other[M_self[P]] = M_{self·other}[P]`.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        }
    }

    /// Entry-wise conjugate `Ā`.
    pub fn conj(&self) -> Self {
        Self { a: self.a.conjugate(), b: self.b.conjugate(), c: self.c.conjugate(), d: self.d.conjugate() }
    }

    /// `‖A Ā - I‖_max ≤ tol`.
    pub fn is_coninvolutory(&self, tol: f64) -> bool {
        let p = self.compose(&self.conj());
        let e = [p.a - T::one(), p.b, p.c, p.d - T::one()];
        e.iter().all(|x| x.modulus() <= tol)
    }

    /// Cast to another scalar type. Imaginary parts are dropped, so this is
    /// meant for real matrices such as the structure kinds.
    pub fn to_scalar<U: Scalar>(&self) -> MobiusMatrix<U> {
        let f = |x: T| U::from_real(x.real());
        MobiusMatrix { a: f(self.a), b: f(self.b), c: f(self.c), d: f(self.d) }
    }
}

fn poly_mul<T: Scalar>(p: &[T], q: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); p.len() + q.len() - 1];
    for (i, &x) in p.iter().enumerate() {
        for (j, &y) in q.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// `W[(j, i)]` = coefficient of `λ^j` in `(aλ+b)^i (cλ+d)^{g-i}`.
///
/// For integer `A` every weight is an integer, so `M_A` is exact.
pub fn mobius_weights<T: Scalar>(a: &MobiusMatrix<T>, g: usize) -> DMatrix<T> {
    let num = [a.b, a.a];
    let den = [a.d, a.c];
    let mut w = DMatrix::zeros(g + 1, g + 1);
    for i in 0..=g {
        let mut p = vec![T::one()];
        for _ in 0..i {
            p = poly_mul(&p, &num);
        }
        for _ in i..g {
            p = poly_mul(&p, &den);
        }
        for (j, x) in p.into_iter().enumerate() {
            w[(j, i)] = x;
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polycore::MatrixPolynomial;
    use nalgebra::dmatrix;

    #[test]
    fn singular_rejected() {
        assert_eq!(MobiusMatrix::new(1.0, 2.0, 2.0, 4.0), Err(Error::SingularMobius));
    }

    #[test]
    fn identity_and_reversal() {
        let l1 = MatrixPolynomial::pencil(dmatrix![-1.0, 0.0], dmatrix![0.0, 1.0]).unwrap();
        assert_eq!(l1.mobius(&MobiusMatrix::identity()), l1);
        let r = l1.mobius(&MobiusMatrix::reversal());
        assert_eq!(r, l1.reversal(1).unwrap());
        assert_eq!(r.coeff(1), dmatrix![-1.0, 0.0]);
        assert_eq!(r.coeff(0), dmatrix![0.0, 1.0]);
    }

    #[test]
    fn even_substitution() {
        let p = MatrixPolynomial::pencil(dmatrix![0.0], dmatrix![1.0]).unwrap();
        let a = MobiusMatrix::new(-1.0, 0.0, 0.0, 1.0).unwrap();
        assert_eq!(p.mobius(&a).coeff(1), dmatrix![-1.0]);
    }

    #[test]
    fn weights_are_binomial() {
        let a = MobiusMatrix::new(1.0, 1.0, 0.0, 1.0).unwrap();
        let w = mobius_weights(&a, 3);
        // (λ+1)^3
        assert_eq!(w.column(3).iter().copied().collect::<Vec<_>>(), vec![1.0, 3.0, 3.0, 1.0]);
    }

    #[test]
    fn coninvolutory() {
        assert!(MobiusMatrix::<f64>::reversal().is_coninvolutory(0.0));
        assert!(!MobiusMatrix::new(2.0, 0.0, 0.0, 1.0).unwrap().is_coninvolutory(1e-12));
    }
}
