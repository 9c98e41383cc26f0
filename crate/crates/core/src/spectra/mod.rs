//! Independent spectral checks: generalized eigenvalues of pencils, a
//! companion-form oracle for polynomial eigenvalues, chordal matching,
//! structure-induced spectral symmetry and minimal indices.

mod matching;
mod qz;

pub use matching::min_cost_assignment;
pub use qz::qz_eigenvalues;

use alloc::vec::Vec;

use nalgebra::{Complex, ComplexField, DMatrix};

use crate::dense::{numerical_rank, set_block, singular_values};
use crate::error::{Error, Result};
use crate::minbases::{convolution_matrix, rank_sweep_points};
use crate::polycore::{MatrixPolynomial, StructureKind};
use crate::scalar::Scalar;

type C = Complex<f64>;

/// `|β| ≤ INFINITE_TOL·‖(α, β)‖` classifies an eigenvalue as infinite.
pub const INFINITE_TOL: f64 = 1e-12;

/// Default rank tolerance of [`minimal_indices`].
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// An eigenvalue `λ = α/β` as a unit-norm projective pair, with `β` real and
/// nonnegative (or `α` real and positive when `β = 0`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjectivePair {
    /// `α`.
    pub alpha: C,
    /// `β`.
    pub beta: C,
}

impl ProjectivePair {
    /// Normalized pair; `None` when both entries vanish.
    pub fn new(alpha: C, beta: C) -> Option<Self> {
        let r = libm::hypot(alpha.modulus(), beta.modulus());
        if !(r > 0.0) || !r.is_finite() {
            return None;
        }
        let (a, b) = (alpha / r, beta / r);
        let phase = if b.modulus() > 0.0 { b.conj() / b.modulus() } else { a.conj() / a.modulus() };
        let mut b = b * phase;
        b.im = 0.0;
        Some(Self { alpha: a * phase, beta: b })
    }

    /// Pair of a finite value.
    pub fn finite(lambda: C) -> Self {
        Self::new(lambda, C::new(1.0, 0.0)).expect("nonzero beta")
    }

    /// The eigenvalue at infinity.
    pub fn infinity() -> Self {
        Self { alpha: C::new(1.0, 0.0), beta: C::new(0.0, 0.0) }
    }

    /// True when `|β| ≤ INFINITE_TOL`.
    pub fn is_infinite(&self) -> bool {
        self.beta.modulus() <= INFINITE_TOL * libm::hypot(self.alpha.modulus(), self.beta.modulus())
    }

    /// `α/β`, or `None` for an infinite eigenvalue.
    pub fn value(&self) -> Option<C> {
        if self.is_infinite() {
            None
        } else {
            Some(self.alpha / self.beta)
        }
    }
}

/// `|αβ' - α'β| / (‖(α,β)‖·‖(α',β')‖)`.
pub fn chordal_distance(x: &ProjectivePair, y: &ProjectivePair) -> f64 {
    let num = (x.alpha * y.beta - y.alpha * x.beta).modulus();
    let den = libm::hypot(x.alpha.modulus(), x.beta.modulus()) * libm::hypot(y.alpha.modulus(), y.beta.modulus());
    (num / den).min(1.0)
}

/// Eigenvalues of a pencil or polynomial, ordered finite first by
/// `(Re, Im)` and infinite last.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumReport {
    /// Projective eigenvalue pairs, counted with multiplicity.
    pub eigenvalues: Vec<ProjectivePair>,
}

impl SpectrumReport {
    /// Sorts and wraps a list of pairs.
    pub fn from_pairs(mut eigenvalues: Vec<ProjectivePair>) -> Self {
        eigenvalues.sort_by(|x, y| match (x.value(), y.value()) {
            (Some(a), Some(b)) => a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)),
            (Some(_), None) => core::cmp::Ordering::Less,
            (None, Some(_)) => core::cmp::Ordering::Greater,
            (None, None) => core::cmp::Ordering::Equal,
        });
        Self { eigenvalues }
    }

    /// Number of eigenvalues.
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    /// True when there are no eigenvalues.
    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Number of infinite eigenvalues.
    pub fn infinite_count(&self) -> usize {
        self.eigenvalues.iter().filter(|e| e.is_infinite()).count()
    }
}

fn to_complex<T: Scalar>(m: &DMatrix<T>) -> DMatrix<C> {
    m.map(|x| x.to_complex())
}

/// Eigenvalues of `λL_1 + L_0`, i.e. of `A - λB` with `A = -L_0`, `B = L_1`.
pub fn pencil_eigs<T: Scalar>(l0: &DMatrix<T>, l1: &DMatrix<T>) -> Result<SpectrumReport> {
    let n = l0.nrows();
    for m in [l0, l1] {
        if m.shape() != (n, n) {
            return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
        }
    }
    let pairs = qz_eigenvalues(-to_complex(l0), to_complex(l1))?;
    let mut eig = Vec::with_capacity(n);
    for (a, b) in pairs {
        eig.push(ProjectivePair::new(a, b).ok_or(Error::SingularPolynomial)?);
    }
    Ok(SpectrumReport::from_pairs(eig))
}

/// `σ_min(P(z))/‖P(z)‖₂` is below this at every probe point of a singular `P`.
const SINGULAR_TOL: f64 = 1e-11;

/// True when `P` is square and its determinant vanishes at every probe point.
pub fn looks_singular<T: Scalar>(p: &MatrixPolynomial<T>) -> bool {
    if !p.is_square() {
        return true;
    }
    if p.rows() == 0 {
        return false;
    }
    let pc = MatrixPolynomial::new(p.coeffs().iter().map(to_complex).collect()).expect("same shapes");
    let pts = [C::new(0.3141, 0.7072), C::new(-1.1, 0.37), C::new(0.59, -1.3), C::new(2.2, 1.9)];
    pts.iter().all(|&z| {
        let s = singular_values(&pc.evaluate(z));
        s[0] == 0.0 || s[s.len() - 1] <= SINGULAR_TOL * s[0]
    })
}

/// First companion form `λ diag(P_g, I, …, I) + [P_{g-1} … P_0; -I 0 …; …]` as `(L_0, L_1)`.
pub fn companion_form<T: Scalar>(p: &MatrixPolynomial<T>) -> (DMatrix<T>, DMatrix<T>) {
    let (n, g) = (p.rows(), p.grade());
    let s = g.max(1) * n;
    let mut l0 = DMatrix::zeros(s, s);
    let mut l1 = DMatrix::identity(s, s);
    if g == 0 {
        return (p.coeff(0), DMatrix::zeros(n, n));
    }
    set_block(&mut l1, 0, 0, &p.coeff(g));
    for j in 0..g {
        set_block(&mut l0, 0, j * n, &p.coeff(g - 1 - j));
    }
    for j in 1..g {
        set_block(&mut l0, j * n, (j - 1) * n, &(-DMatrix::<T>::identity(n, n)));
    }
    (l0, l1)
}

/// Eigenvalues of a regular `P` (finite and infinite, `g·n` in total) from its first companion form.
pub fn reference_polyeigs<T: Scalar>(p: &MatrixPolynomial<T>) -> Result<SpectrumReport> {
    if !p.is_square() {
        return Err(Error::NotSquare { rows: p.rows(), cols: p.cols() });
    }
    if looks_singular(p) {
        return Err(Error::SingularPolynomial);
    }
    let (l0, l1) = companion_form(p);
    pencil_eigs(&l0, &l1)
}

/// Result of [`compare_spectra`].
#[derive(Clone, Debug, PartialEq)]
pub struct MatchReport {
    /// Largest chordal distance over the matching.
    pub max_distance: f64,
    /// Sum of chordal distances over the matching.
    pub total_cost: f64,
    /// Matched pairs with distance above the tolerance.
    pub unmatched: usize,
    /// `pairs[i]` is the index in the second list matched to entry `i` of the first.
    pub pairs: Vec<usize>,
}

/// Min-cost chordal matching of two spectra; `unmatched` counts pairs farther than `tol`.
pub fn compare_spectra_tol(a: &SpectrumReport, b: &SpectrumReport, tol: f64) -> Result<MatchReport> {
    if a.len() != b.len() {
        return Err(Error::CardinalityMismatch { left: a.len(), right: b.len() });
    }
    let cost = DMatrix::from_fn(a.len(), b.len(), |i, j| chordal_distance(&a.eigenvalues[i], &b.eigenvalues[j]));
    let pairs = min_cost_assignment(&cost);
    let d: Vec<f64> = pairs.iter().enumerate().map(|(i, &j)| cost[(i, j)]).collect();
    Ok(MatchReport {
        max_distance: d.iter().copied().fold(0.0, f64::max),
        total_cost: d.iter().sum(),
        unmatched: d.iter().filter(|&&x| x > tol).count(),
        pairs,
    })
}

/// [`compare_spectra_tol`] with `tol = 1e-6`.
pub fn compare_spectra(a: &SpectrumReport, b: &SpectrumReport) -> Result<MatchReport> {
    compare_spectra_tol(a, b, 1e-6)
}

fn reflect(e: &ProjectivePair, kind: StructureKind, conjugate: bool) -> ProjectivePair {
    let cj = |z: C| if conjugate { z.conj() } else { z };
    let (a, b) = (e.alpha, e.beta);
    let (na, nb) = match kind {
        StructureKind::Palindromic | StructureKind::AntiPalindromic => (cj(b), cj(a)),
        StructureKind::Even | StructureKind::Odd => (-cj(a), cj(b)),
        StructureKind::Symmetric | StructureKind::SkewSymmetric => (a.conj(), b.conj()),
    };
    ProjectivePair::new(na, nb).expect("nonzero pair")
}

/// Largest chordal mismatch between a spectrum and its image under the
/// kind's involution, over a min-cost matching: `λ ↔ 1/λ` (palindromic),
/// `λ ↔ -λ` (even/odd), `λ ↔ λ̄` (symmetric/skew), for real coefficients.
pub fn symmetry_check(spec: &SpectrumReport, kind: StructureKind) -> f64 {
    symmetry_check_with(spec, kind, false)
}

/// [`symmetry_check`]; with `conjugate` the pairings of the conjugate-transpose
/// structures are used (`λ ↔ 1/λ̄`, `λ ↔ -λ̄`, `λ ↔ λ̄`). Experimental.
pub fn symmetry_check_with(spec: &SpectrumReport, kind: StructureKind, conjugate: bool) -> f64 {
    let image = SpectrumReport::from_pairs(spec.eigenvalues.iter().map(|e| reflect(e, kind, conjugate)).collect());
    compare_spectra(spec, &image).map(|m| m.max_distance).unwrap_or(f64::INFINITY)
}

/// Minimal indices found by [`minimal_indices`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinimalIndexReport {
    /// Right minimal indices, ascending.
    pub right: Vec<usize>,
    /// Left minimal indices, ascending.
    pub left: Vec<usize>,
    /// Normal rank estimate.
    pub normal_rank: usize,
    /// Largest degree examined.
    pub degrees_searched: usize,
    /// True when `max_degree` did not exhaust the rank deficiency.
    pub partial: bool,
}

fn right_indices<T: Scalar>(
    p: &MatrixPolynomial<T>,
    deficiency: usize,
    max_degree: usize,
    tol: f64,
) -> (Vec<usize>, bool) {
    let mut out = Vec::new();
    let (mut prev_nullity, mut prev_count) = (0usize, 0usize);
    for d in 0..=max_degree {
        if out.len() == deficiency {
            return (out, false);
        }
        let conv = convolution_matrix(p, d);
        let nullity = conv.ncols() - numerical_rank(&conv, tol);
        let count = nullity - prev_nullity;
        for _ in prev_count..count {
            out.push(d);
        }
        prev_nullity = nullity;
        prev_count = count;
    }
    let partial = out.len() < deficiency;
    (out, partial)
}

/// Right and left minimal indices from rank increments of convolution matrices.
///
/// With `ν_d` the nullity of the degree-`d` convolution matrix, `ν_d - ν_{d-1}`
/// counts the indices `≤ d`. The normal rank is the largest numerical rank of
/// `P` over [`rank_sweep_points`]; singular values below `tol·σ_max` count as zero.
pub fn minimal_indices<T: Scalar>(p: &MatrixPolynomial<T>, max_degree: usize, tol: f64) -> MinimalIndexReport {
    let pc = MatrixPolynomial::new(p.coeffs().iter().map(to_complex).collect()).expect("same shapes");
    let normal_rank =
        rank_sweep_points(p.grade(), 0x5eed).iter().map(|&z| numerical_rank(&pc.evaluate(z), tol)).max().unwrap_or(0);
    let (right, pr) = right_indices(&pc, p.cols() - normal_rank, max_degree, tol);
    let (left, pl) = right_indices(&pc.transpose(), p.rows() - normal_rank, max_degree, tol);
    MinimalIndexReport { right, left, normal_rank, degrees_searched: max_degree, partial: pr || pl }
}
