use core::fmt;
use core::str::FromStr;

use nalgebra::DMatrix;
use rand_core::RngCore;
use serde::{Deserialize, Serialize};

use super::{MatrixPolynomial, MobiusMatrix};
use crate::error::{Error, Result};
use crate::rng::seeded_rng;
use crate::scalar::Scalar;

/// Default relative tolerance of [`is_structured`].
pub const DEFAULT_STRUCTURE_TOL: f64 = 1e-12;

/// The six `M_A`-structures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructureKind {
    /// `P^⋆ = P`.
    Symmetric,
    /// `P^⋆ = -P`.
    SkewSymmetric,
    /// `P^⋆ = rev P`.
    Palindromic,
    /// `P^⋆ = -rev P`.
    AntiPalindromic,
    /// `P^⋆(λ) = P(-λ)`.
    Even,
    /// `P^⋆(λ) = -P(-λ)`.
    Odd,
}

impl StructureKind {
    /// All six kinds, in a fixed order.
    pub const ALL: [StructureKind; 6] = [
        StructureKind::Symmetric,
        StructureKind::SkewSymmetric,
        StructureKind::Palindromic,
        StructureKind::AntiPalindromic,
        StructureKind::Even,
        StructureKind::Odd,
    ];

    /// `(a, b, c, d)` of the inducing matrix.
    pub fn entries(self) -> (f64, f64, f64, f64) {
        match self {
            StructureKind::Symmetric => (1.0, 0.0, 0.0, 1.0),
            StructureKind::SkewSymmetric => (-1.0, 0.0, 0.0, -1.0),
            StructureKind::Palindromic => (0.0, 1.0, 1.0, 0.0),
            StructureKind::AntiPalindromic => (0.0, -1.0, -1.0, 0.0),
            StructureKind::Even => (-1.0, 0.0, 0.0, 1.0),
            StructureKind::Odd => (1.0, 0.0, 0.0, -1.0),
        }
    }

    /// The inducing Möbius matrix.
    pub fn mobius<T: Scalar>(self) -> MobiusMatrix<T> {
        let (a, b, c, d) = self.entries();
        let f = T::from_real;
        MobiusMatrix::new(f(a), f(b), f(c), f(d)).expect("structure matrices are nonsingular")
    }

    /// True for the kinds whose matrix is minus that of its partner
    /// (skew-symmetric, anti-palindromic, odd).
    pub fn is_negated(self) -> bool {
        matches!(self, StructureKind::SkewSymmetric | StructureKind::AntiPalindromic | StructureKind::Odd)
    }

    /// `σ = ±1` distinguishing a kind from its partner.
    pub fn sigma(self) -> i8 {
        if self.is_negated() {
            -1
        } else {
            1
        }
    }

    /// Snake-case name used in files.
    pub fn name(self) -> &'static str {
        match self {
            StructureKind::Symmetric => "symmetric",
            StructureKind::SkewSymmetric => "skew_symmetric",
            StructureKind::Palindromic => "palindromic",
            StructureKind::AntiPalindromic => "anti_palindromic",
            StructureKind::Even => "even",
            StructureKind::Odd => "odd",
        }
    }
}

impl fmt::Display for StructureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StructureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let k = match t {
            "symmetric" | "sym" => StructureKind::Symmetric,
            "skew_symmetric" | "skew-symmetric" | "skew" => StructureKind::SkewSymmetric,
            "palindromic" | "pal" => StructureKind::Palindromic,
            "anti_palindromic" | "anti-palindromic" | "antipal" => StructureKind::AntiPalindromic,
            "even" => StructureKind::Even,
            "odd" => StructureKind::Odd,
            _ => return Err(Error::InvalidArgument("unknown structure kind")),
        };
        Ok(k)
    }
}

fn require_square<T: Scalar>(p: &MatrixPolynomial<T>) -> Result<()> {
    if p.is_square() {
        Ok(())
    } else {
        Err(Error::NotSquare { rows: p.rows(), cols: p.cols() })
    }
}

/// `‖M_A[P] - P^⋆‖_F` (absolute).
pub fn structure_residual<T: Scalar>(p: &MatrixPolynomial<T>, a: &MobiusMatrix<T>) -> Result<f64> {
    require_square(p)?;
    let lhs = p.mobius(a);
    let rhs = p.star_adjoint();
    Ok(lhs.checked_sub(&rhs)?.frob_norm())
}

/// True iff `‖M_A[P] - P^⋆‖_F ≤ tol·max(1, ‖P‖_F)` for the kind's `A`.
pub fn is_structured<T: Scalar>(p: &MatrixPolynomial<T>, kind: StructureKind, tol: f64) -> Result<bool> {
    let r = structure_residual(p, &kind.mobius())?;
    Ok(r <= tol * p.frob_norm().max(1.0))
}

/// `(P + M_A[P]^⋆)/2` for an arbitrary coninvolutory `A`.
pub fn structure_project_mobius<T: Scalar>(
    p: &MatrixPolynomial<T>,
    a: &MobiusMatrix<T>,
) -> Result<MatrixPolynomial<T>> {
    require_square(p)?;
    let half = T::from_real(0.5);
    Ok(p.checked_add(&p.mobius(a).star_adjoint())?.scaled(half))
}

/// `(P + M_A[P]^⋆)/2`; idempotent and fixes structured inputs.
pub fn structure_project<T: Scalar>(p: &MatrixPolynomial<T>, kind: StructureKind) -> Result<MatrixPolynomial<T>> {
    structure_project_mobius(p, &kind.mobius())
}

/// Polynomial with i.i.d. standard normal coefficients.
pub fn random_polynomial<T: Scalar, R: RngCore + ?Sized>(
    rows: usize,
    cols: usize,
    grade: usize,
    rng: &mut R,
) -> MatrixPolynomial<T> {
    let mut p = MatrixPolynomial::zeros(rows, cols, grade);
    for c in p.coeffs_mut() {
        *c = DMatrix::from_fn(rows, cols, |_, _| T::sample_normal(rng));
    }
    p
}

const MAX_RETRIES: usize = 16;

/// Random `kind`-structured `n×n` polynomial of grade `g` with `‖P‖_F = target_norm`.
pub fn random_structured_with<T: Scalar, R: RngCore + ?Sized>(
    n: usize,
    g: usize,
    kind: StructureKind,
    target_norm: f64,
    rng: &mut R,
) -> Result<MatrixPolynomial<T>> {
    if !(target_norm > 0.0) || !target_norm.is_finite() {
        return Err(Error::InvalidArgument("target norm must be positive and finite"));
    }
    for _ in 0..MAX_RETRIES {
        let p = structure_project(&random_polynomial::<T, R>(n, n, g, rng), kind)?;
        let nrm = p.frob_norm();
        if nrm > 0.0 {
            return Ok(p.scaled(T::from_real(target_norm / nrm)));
        }
    }
    Err(Error::ZeroProjection)
}

/// [`random_structured_with`] on the stream `seeded_rng(seed, 0)`.
pub fn random_structured<T: Scalar>(
    n: usize,
    g: usize,
    kind: StructureKind,
    target_norm: f64,
    seed: u64,
) -> Result<MatrixPolynomial<T>> {
    random_structured_with(n, g, kind, target_norm, &mut seeded_rng(seed, 0))
}
