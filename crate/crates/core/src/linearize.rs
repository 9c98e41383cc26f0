//! `M_A`-structured block Kronecker pencils of odd-grade polynomials.
//!
//! A pencil has the natural partition
//! `[M(λ), M_A[L_k]^⋆⊗I_n; L_k(λ)⊗I_n, 0]` with `M = λM_1 + M_0` of size
//! `(k+1)n` and `g = 2k+1`. The coefficients of `P` are spread over the
//! blocks of `M` by a [`Placement`], made structured by [`symmetrize_m`] and
//! framed by [`assemble`]. [`recover`] inverts the construction.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dense::set_block;
use crate::error::{Error, Result};
use crate::minbases::{build_lambda, build_lk};
use crate::polycore::{is_structured, structure_project, structure_residual, MatrixPolynomial, StructureKind};
use crate::scalar::Scalar;

/// Relative tolerance used by [`check_placement`] and [`assemble`].
pub const PLACEMENT_TOL: f64 = 1e-12;

/// Strategy for spreading `P_0..P_g` over the blocks of `M(λ)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// Block diagonal (block antidiagonal for the palindromic kinds); permutes
    /// to a block (anti)tridiagonal pencil.
    Tridiagonal,
    /// The staircase layouts with `λP_g` in a corner block.
    Stacked,
}

impl Placement {
    /// Name used in files.
    pub fn name(self) -> &'static str {
        match self {
            Placement::Tridiagonal => "tridiagonal",
            Placement::Stacked => "stacked",
        }
    }
}

impl fmt::Display for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Placement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "tridiagonal" | "tri" => Ok(Placement::Tridiagonal),
            "stacked" => Ok(Placement::Stacked),
            _ => Err(Error::InvalidArgument("unknown placement")),
        }
    }
}

/// `k` with `g = 2k+1`; even grades are rejected.
pub fn grade_to_k(g: usize) -> Result<usize> {
    if g.is_multiple_of(2) {
        Err(Error::EvenGrade { grade: g })
    } else {
        Ok((g - 1) / 2)
    }
}

/// Sign `s` such that `recover` returns `s·(M_A[Λ_k]^⋆⊗I_n) M (Λ_k⊗I_n)`.
///
/// For the negated kinds `M_A[Λ_k] = (-1)^k` times the vector the placement
/// conditions are written with, so the raw product is `(-1)^k P`.
pub fn recovery_sign(kind: StructureKind, k: usize) -> i8 {
    if kind.is_negated() && k % 2 == 1 {
        -1
    } else {
        1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Family {
    Symmetric,
    Palindromic,
    Alternating,
}

fn family(kind: StructureKind) -> Family {
    match kind {
        StructureKind::Symmetric | StructureKind::SkewSymmetric => Family::Symmetric,
        StructureKind::Palindromic | StructureKind::AntiPalindromic => Family::Palindromic,
        StructureKind::Even | StructureKind::Odd => Family::Alternating,
    }
}

/// One target of a coefficient inside `M(λ)`: `weight·P_coeff` goes to the
/// `degree` coefficient of block `(block_row, block_col)` (0-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PlacementTarget {
    /// Index `ℓ` of `P_ℓ`.
    pub coeff: usize,
    /// Block row, 0-based.
    pub block_row: usize,
    /// Block column, 0-based.
    pub block_col: usize,
    /// 1 for `M_1`, 0 for `M_0`.
    pub degree: usize,
    /// `±1`.
    pub weight: i8,
}

/// Index `ℓ` that the block `(i, j)` (1-based) of `M_degree` contributes to.
fn target_index(fam: Family, k: usize, i: usize, j: usize, degree: usize) -> usize {
    match fam {
        Family::Symmetric | Family::Alternating => 2 * k + 2 + degree - i - j,
        Family::Palindromic => k + i + degree - j,
    }
}

fn block_weight(fam: Family, k: usize, i: usize) -> i8 {
    match fam {
        Family::Alternating if (k + 1 - i) % 2 == 1 => -1,
        _ => 1,
    }
}

/// Where each `P_ℓ` goes for grade `g = 2k+1`.
pub fn placement_map(g: usize, kind: StructureKind, placement: Placement) -> Result<Vec<PlacementTarget>> {
    let k = grade_to_k(g)?;
    let fam = family(kind);
    // (i, j, degree), 1-based blocks
    let mut cells: Vec<(usize, usize, usize)> = Vec::new();
    if k == 0 {
        cells.extend([(1, 1, 1), (1, 1, 0)]);
    } else {
        match (placement, fam) {
            (Placement::Tridiagonal, Family::Symmetric | Family::Alternating) => {
                for i in 1..=k + 1 {
                    cells.extend([(i, i, 1), (i, i, 0)]);
                }
            }
            (Placement::Tridiagonal, Family::Palindromic) => {
                for i in 1..=k + 1 {
                    cells.extend([(i, k + 2 - i, 1), (i, k + 2 - i, 0)]);
                }
            }
            (Placement::Stacked, Family::Symmetric) => {
                cells.extend([(1, 1, 1), (2, 1, 1)]);
                for j in 1..=k {
                    cells.push((2, j, 0));
                }
                for i in 3..=k + 1 {
                    cells.push((i, k, 0));
                }
                cells.push((k + 1, k + 1, 0));
            }
            (Placement::Stacked, Family::Palindromic) => {
                for s in 0..=2 * k {
                    let cell = (k + 1 - s.div_ceil(2), 1 + s / 2);
                    if s < k {
                        cells.push((cell.0, cell.1, 1));
                    }
                    if s + 1 >= k {
                        cells.push((cell.0, cell.1, 0));
                    }
                }
            }
            (Placement::Stacked, Family::Alternating) => {
                cells.extend([(1, 1, 1), (2, 1, 1), (2, 2, 1), (2, 2, 0)]);
                if k >= 2 {
                    for j in 3..=k {
                        cells.push((2, j, 0));
                    }
                    for i in 3..=k {
                        cells.push((i, k, 0));
                    }
                    cells.extend([(k + 1, k + 1, 1), (k + 1, k + 1, 0)]);
                }
            }
        }
    }
    let map: Vec<PlacementTarget> = cells
        .into_iter()
        .map(|(i, j, d)| PlacementTarget {
            coeff: target_index(fam, k, i, j, d),
            block_row: i - 1,
            block_col: j - 1,
            degree: d,
            weight: block_weight(fam, k, i),
        })
        .collect();
    debug_assert!({
        let mut seen: Vec<usize> = map.iter().map(|t| t.coeff).collect();
        seen.sort_unstable();
        seen == (0..=g).collect::<Vec<_>>()
    });
    Ok(map)
}

fn check_poly_for_placement<T: Scalar>(p: &MatrixPolynomial<T>) -> Result<usize> {
    if !p.is_square() {
        return Err(Error::NotSquare { rows: p.rows(), cols: p.cols() });
    }
    grade_to_k(p.grade())
}

/// Build `M(λ)` from a placement map.
pub fn place<T: Scalar>(
    p: &MatrixPolynomial<T>,
    kind: StructureKind,
    placement: Placement,
) -> Result<MatrixPolynomial<T>> {
    let k = check_poly_for_placement(p)?;
    let n = p.rows();
    let mut m = [DMatrix::zeros((k + 1) * n, (k + 1) * n), DMatrix::zeros((k + 1) * n, (k + 1) * n)];
    for t in placement_map(p.grade(), kind, placement)? {
        let blk = p.coeff(t.coeff) * T::from_real(f64::from(t.weight));
        let mut view = m[t.degree].view_mut((t.block_row * n, t.block_col * n), (n, n));
        view += blk;
    }
    let [m0, m1] = m;
    MatrixPolynomial::pencil(m0, m1)
}

/// Block-diagonal (palindromic kinds: block-antidiagonal) `M(λ)` with blocks `±(λP_{2j+1} + P_{2j})`.
pub fn placement_tridiagonal<T: Scalar>(p: &MatrixPolynomial<T>, kind: StructureKind) -> Result<MatrixPolynomial<T>> {
    place(p, kind, Placement::Tridiagonal)
}

/// Staircase `M(λ)`; for `g = 7` these are the classical layouts with
/// `λP_7` in a corner and a run of middle coefficients through one block row.
pub fn placement_stacked<T: Scalar>(p: &MatrixPolynomial<T>, kind: StructureKind) -> Result<MatrixPolynomial<T>> {
    place(p, kind, Placement::Stacked)
}

/// `sqrt(Σ_ℓ ‖S_ℓ(M) - P_ℓ‖_F²)` where `S_ℓ` is the block-sum condition of the kind.
pub fn placement_residual<T: Scalar>(
    m: &MatrixPolynomial<T>,
    p: &MatrixPolynomial<T>,
    kind: StructureKind,
) -> Result<f64> {
    let k = check_poly_for_placement(p)?;
    let n = p.rows();
    let s = (k + 1) * n;
    if (m.rows(), m.cols()) != (s, s) {
        return Err(Error::DimensionMismatch { op: "placement check", expected: (s, s), found: (m.rows(), m.cols()) });
    }
    if m.degree().unwrap_or(0) > 1 {
        return Err(Error::InvalidArgument("M must be a pencil"));
    }
    let m = m.with_grade(1)?;
    let fam = family(kind);
    let g = p.grade();
    let mut sums: Vec<DMatrix<T>> = (0..=g).map(|l| -p.coeff(l)).collect();
    for i in 1..=k + 1 {
        let w = T::from_real(f64::from(block_weight(fam, k, i)));
        for j in 1..=k + 1 {
            for d in 0..2 {
                let blk = m.coeff(d).view(((i - 1) * n, (j - 1) * n), (n, n)).into_owned();
                sums[target_index(fam, k, i, j, d)] += blk * w;
            }
        }
    }
    let sq: f64 = sums.iter().map(|x| x.norm_squared()).sum();
    Ok(libm::sqrt(sq))
}

/// True iff `M` satisfies the kind's block-sum condition for `P` within `1e-12·‖P‖_F`.
pub fn check_placement<T: Scalar>(
    m: &MatrixPolynomial<T>,
    p: &MatrixPolynomial<T>,
    kind: StructureKind,
) -> Result<bool> {
    Ok(placement_residual(m, p, kind)? <= PLACEMENT_TOL * p.frob_norm())
}

/// `(M + M_A[M]^⋆)/2`.
pub fn symmetrize_m<T: Scalar>(m: &MatrixPolynomial<T>, kind: StructureKind) -> Result<MatrixPolynomial<T>> {
    structure_project(&m.with_grade(1)?, kind)
}

/// A structured block Kronecker pencil `λL_1 + L_0` with its partition data.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockKroneckerPencil<T: Scalar> {
    /// Constant coefficient, `(2k+1)n` square.
    pub l0: DMatrix<T>,
    /// Leading coefficient, `(2k+1)n` square.
    pub l1: DMatrix<T>,
    /// Number of `L_k` block rows.
    pub k: usize,
    /// Block size.
    pub n: usize,
    /// Structure of the pencil.
    pub kind: StructureKind,
    /// Sign applied by [`recover`].
    pub sign: i8,
}

impl<T: Scalar> BlockKroneckerPencil<T> {
    /// Wrap coefficients with partition data, checking sizes.
    pub fn from_parts(l0: DMatrix<T>, l1: DMatrix<T>, k: usize, n: usize, kind: StructureKind) -> Result<Self> {
        let s = (2 * k + 1) * n;
        for m in [&l0, &l1] {
            if m.shape() != (s, s) {
                return Err(Error::DimensionMismatch {
                    op: "block Kronecker pencil",
                    expected: (s, s),
                    found: m.shape(),
                });
            }
        }
        Ok(Self { l0, l1, k, n, kind, sign: recovery_sign(kind, k) })
    }

    /// Side length `(2k+1)n`.
    pub fn size(&self) -> usize {
        (2 * self.k + 1) * self.n
    }

    /// The pencil as a grade-1 polynomial.
    pub fn as_polynomial(&self) -> MatrixPolynomial<T> {
        MatrixPolynomial::pencil(self.l0.clone(), self.l1.clone()).expect("square coefficients")
    }

    /// `‖L‖_F`.
    pub fn frob_norm(&self) -> f64 {
        self.as_polynomial().frob_norm()
    }

    /// `M(λ)`, the `(k+1)n` leading block.
    pub fn m_block(&self) -> MatrixPolynomial<T> {
        let s = (self.k + 1) * self.n;
        self.as_polynomial().block(0, s, 0, s)
    }

    /// Natural-partition block `(r, c)` with `r, c ∈ {0, 1}`.
    pub fn natural_block(&self, r: usize, c: usize) -> MatrixPolynomial<T> {
        let s1 = (self.k + 1) * self.n;
        let s2 = self.k * self.n;
        let (r0, nr) = if r == 0 { (0, s1) } else { (s1, s2) };
        let (c0, nc) = if c == 0 { (0, s1) } else { (s1, s2) };
        self.as_polynomial().block(r0, nr, c0, nc)
    }
}

/// `[M, M_A[L_k]^⋆⊗I_n; L_k⊗I_n, 0]`; `M` must be `M_A`-structured.
pub fn assemble<T: Scalar>(
    m: &MatrixPolynomial<T>,
    k: usize,
    n: usize,
    kind: StructureKind,
) -> Result<BlockKroneckerPencil<T>> {
    let s1 = (k + 1) * n;
    if (m.rows(), m.cols()) != (s1, s1) {
        return Err(Error::DimensionMismatch { op: "assemble", expected: (s1, s1), found: (m.rows(), m.cols()) });
    }
    let m = m.with_grade(1)?;
    if !is_structured(&m, kind, PLACEMENT_TOL)? {
        return Err(Error::NotStructured { residual: structure_residual(&m, &kind.mobius())? });
    }
    let lk = build_lk::<T>(k, n);
    let lk12 = lk.mobius(&kind.mobius()).star_adjoint();
    let size = (2 * k + 1) * n;
    let mut l = [DMatrix::zeros(size, size), DMatrix::zeros(size, size)];
    for (d, ld) in l.iter_mut().enumerate() {
        set_block(ld, 0, 0, &m.coeff(d));
        if k > 0 {
            set_block(ld, 0, s1, &lk12.coeff(d));
            set_block(ld, s1, 0, &lk.coeff(d));
        }
    }
    let [l0, l1] = l;
    BlockKroneckerPencil::from_parts(l0, l1, k, n, kind)
}

/// `sign·(M_A[Λ_k]^⋆⊗I_n) M(λ) (Λ_k⊗I_n)` at grade `2k+1`.
pub fn recover<T: Scalar>(l: &BlockKroneckerPencil<T>) -> MatrixPolynomial<T> {
    let (k, n) = (l.k, l.n);
    let right = build_lambda::<T>(k, n).transpose();
    let left = right.mobius(&l.kind.mobius()).star_adjoint();
    let p = left.checked_mul(&l.m_block()).and_then(|x| x.checked_mul(&right)).expect("partition shapes agree");
    p.scaled(T::from_real(f64::from(l.sign)))
}

/// Full pipeline `assemble ∘ symmetrize_m ∘ placement` for a structured `P`.
pub fn linearize<T: Scalar>(
    p: &MatrixPolynomial<T>,
    kind: StructureKind,
    placement: Placement,
) -> Result<BlockKroneckerPencil<T>> {
    linearize_with_sigma(p, kind, placement, None)
}

/// [`linearize`] with an explicit `σ`. The pencil is structured only for
/// `σ = kind.sigma()`, so any other value is rejected.
pub fn linearize_with_sigma<T: Scalar>(
    p: &MatrixPolynomial<T>,
    kind: StructureKind,
    placement: Placement,
    sigma: Option<i8>,
) -> Result<BlockKroneckerPencil<T>> {
    if let Some(s) = sigma {
        if s != kind.sigma() {
            return Err(Error::InvalidArgument(
                "sigma is +1 for symmetric/palindromic/even and -1 for skew-symmetric/anti-palindromic/odd",
            ));
        }
    }
    let k = check_poly_for_placement(p)?;
    if !is_structured(p, kind, PLACEMENT_TOL)? {
        return Err(Error::NotStructured { residual: structure_residual(p, &kind.mobius())? });
    }
    let m = symmetrize_m(&place(p, kind, placement)?, kind)?;
    assemble(&m, k, p.rows(), kind)
}

/// A block permutation `Π` acting on `n×n` blocks: block `p` of `ΠLΠ^T` is
/// block `order[p]` of `L`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockPermutation {
    /// Source block of each destination block.
    pub order: Vec<usize>,
    /// Block size.
    pub n: usize,
}

impl BlockPermutation {
    /// Dense `Π`.
    pub fn matrix<T: Scalar>(&self) -> DMatrix<T> {
        let s = self.order.len() * self.n;
        let mut pi = DMatrix::zeros(s, s);
        for (p, &q) in self.order.iter().enumerate() {
            set_block(&mut pi, p * self.n, q * self.n, &DMatrix::identity(self.n, self.n));
        }
        pi
    }

    /// `Π^T`.
    pub fn inverse(&self) -> Self {
        let mut inv = alloc::vec![0; self.order.len()];
        for (p, &q) in self.order.iter().enumerate() {
            inv[q] = p;
        }
        Self { order: inv, n: self.n }
    }

    /// `Π X Π^T` (exact reindexing).
    pub fn conjugate<T: Scalar>(&self, x: &DMatrix<T>) -> DMatrix<T> {
        let n = self.n;
        let mut out = DMatrix::zeros(x.nrows(), x.ncols());
        for (p, &q) in self.order.iter().enumerate() {
            for (r, &s) in self.order.iter().enumerate() {
                set_block(&mut out, p * n, r * n, &x.view((q * n, s * n), (n, n)).into_owned());
            }
        }
        out
    }
}

/// Odd-even interleave taking the tridiagonal-placement pencil to block
/// tridiagonal form (block antitridiagonal for the palindromic kinds, where
/// the `L_k` rows are interleaved in reverse).
pub fn permutation_to_tridiagonal(k: usize, n: usize, kind: StructureKind) -> BlockPermutation {
    let rev = family(kind) == Family::Palindromic;
    let order = (0..=2 * k)
        .map(|p| {
            let i = p / 2;
            if p % 2 == 0 {
                i
            } else if rev {
                2 * k - i
            } else {
                k + 1 + i
            }
        })
        .collect();
    BlockPermutation { order, n }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polycore::random_structured;

    #[test]
    fn maps_cover_every_coefficient_once() {
        for g in [1, 3, 5, 7, 9, 11] {
            for kind in StructureKind::ALL {
                for pl in [Placement::Tridiagonal, Placement::Stacked] {
                    let map = placement_map(g, kind, pl).unwrap();
                    let mut idx: Vec<usize> = map.iter().map(|t| t.coeff).collect();
                    idx.sort_unstable();
                    assert_eq!(idx, (0..=g).collect::<Vec<_>>(), "{g} {kind} {pl}");
                }
            }
        }
        assert_eq!(placement_map(4, StructureKind::Even, Placement::Stacked), Err(Error::EvenGrade { grade: 4 }));
    }

    #[test]
    fn round_trip_all() {
        for kind in StructureKind::ALL {
            for g in [1, 3, 5, 7, 9] {
                for pl in [Placement::Tridiagonal, Placement::Stacked] {
                    let p = random_structured::<f64>(2, g, kind, 1.0, g as u64).unwrap();
                    let m = place(&p, kind, pl).unwrap();
                    assert!(check_placement(&m, &p, kind).unwrap());
                    let ms = symmetrize_m(&m, kind).unwrap();
                    assert!(check_placement(&ms, &p, kind).unwrap());
                    let l = assemble(&ms, grade_to_k(g).unwrap(), 2, kind).unwrap();
                    assert!(is_structured(&l.as_polynomial(), kind, 1e-13).unwrap());
                    let q = recover(&l);
                    assert!(q.checked_sub(&p).unwrap().frob_norm() <= 1e-13, "{kind} {g} {pl}");
                }
            }
        }
    }

    #[test]
    fn tridiagonal_examples() {
        let p = random_structured::<f64>(2, 5, StructureKind::Even, 1.0, 1).unwrap();
        let m = placement_tridiagonal(&p, StructureKind::Even).unwrap();
        let blk = |d: usize, i: usize| m.coeff(d).view((2 * i, 2 * i), (2, 2)).into_owned();
        assert_eq!(blk(1, 0), p.coeff(5));
        assert_eq!(blk(0, 1), -p.coeff(2));
        assert_eq!(blk(1, 2), p.coeff(1));
    }

    #[test]
    fn check_placement_negative() {
        let p = random_structured::<f64>(2, 3, StructureKind::Symmetric, 1.0, 2).unwrap();
        let zero = MatrixPolynomial::zeros(4, 4, 1);
        assert!(!check_placement(&zero, &p, StructureKind::Symmetric).unwrap());
        let mut m = placement_stacked(&p, StructureKind::Symmetric).unwrap();
        m.coeffs_mut()[0][(0, 0)] += 1.0;
        assert!(!check_placement(&m, &p, StructureKind::Symmetric).unwrap());
        assert!(check_placement(&zero, &p, StructureKind::Symmetric).is_ok());
    }

    #[test]
    fn sigma_validation() {
        let p = random_structured::<f64>(2, 3, StructureKind::Odd, 1.0, 2).unwrap();
        assert!(linearize_with_sigma(&p, StructureKind::Odd, Placement::Tridiagonal, Some(1)).is_err());
        assert!(linearize_with_sigma(&p, StructureKind::Odd, Placement::Tridiagonal, Some(-1)).is_ok());
    }

    #[test]
    fn permutation_is_orthogonal() {
        for kind in StructureKind::ALL {
            let pi = permutation_to_tridiagonal(3, 2, kind).matrix::<f64>();
            assert_eq!(&pi * pi.transpose(), DMatrix::identity(14, 14));
        }
    }

    #[test]
    fn degenerate_k0() {
        let p = random_structured::<f64>(3, 1, StructureKind::Palindromic, 1.0, 4).unwrap();
        let l = linearize(&p, StructureKind::Palindromic, Placement::Stacked).unwrap();
        assert_eq!(l.as_polynomial(), p);
        assert_eq!(recover(&l), p);
    }
}
