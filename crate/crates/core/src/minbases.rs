//! The dual minimal bases `L_k(λ)⊗I_n` and `Λ_k(λ)^T⊗I_n`, minimality
//! tests, and min-norm completion of a perturbed dual basis.

use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{Complex, DMatrix};

use crate::dense::{min_norm_solve, set_block, singular_values};
use crate::error::{Error, Result};
use crate::polycore::MatrixPolynomial;
use crate::rng::seeded_rng;
use crate::scalar::Scalar;

/// `E = [I_k 0]⊗I_n` and `F = [0 I_k]⊗I_n`, so that `λF - E = L_k(λ)⊗I_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct SelectorMatrices<T: Scalar> {
    /// `E_{kn}`.
    pub e: DMatrix<T>,
    /// `F_{kn}`.
    pub f: DMatrix<T>,
}

/// Selector matrices for block size `n`.
pub fn selector_matrices<T: Scalar>(k: usize, n: usize) -> SelectorMatrices<T> {
    let e = DMatrix::from_fn(k * n, (k + 1) * n, |i, j| if i == j { T::one() } else { T::zero() });
    let f = DMatrix::from_fn(k * n, (k + 1) * n, |i, j| if j == i + n { T::one() } else { T::zero() });
    SelectorMatrices { e, f }
}

/// `L_k(λ)⊗I_n`: `kn×(k+1)n` with blocks `-I_n` on the diagonal and `λI_n` on the superdiagonal.
pub fn build_lk<T: Scalar>(k: usize, n: usize) -> MatrixPolynomial<T> {
    let s = selector_matrices::<T>(k, n);
    MatrixPolynomial::pencil(-s.e, s.f).expect("selector shapes agree")
}

/// `Λ_k(λ)^T⊗I_n = [λ^k I_n, …, λI_n, I_n]`, an `n×(k+1)n` polynomial of grade `k`.
pub fn build_lambda<T: Scalar>(k: usize, n: usize) -> MatrixPolynomial<T> {
    let coeffs = (0..=k)
        .map(|p| {
            let mut c = DMatrix::zeros(n, (k + 1) * n);
            set_block(&mut c, 0, (k - p) * n, &DMatrix::identity(n, n));
            c
        })
        .collect();
    MatrixPolynomial::new(coeffs).expect("uniform shapes")
}

/// Matrix of `x ↦ K·x` on coefficient stacks.
///
/// Rows index the coefficients of the product (ascending, `grade(K)+t+1`
/// blocks of `rows(K)`), columns the coefficients of `x` (`t+1` blocks of
/// `cols(K)`), where `t = target_degree`.
pub fn convolution_matrix<T: Scalar>(k: &MatrixPolynomial<T>, target_degree: usize) -> DMatrix<T> {
    let (r, c, gk) = (k.rows(), k.cols(), k.grade());
    let mut m = DMatrix::zeros((gk + target_degree + 1) * r, (target_degree + 1) * c);
    for j in 0..=target_degree {
        for (d, kd) in k.coeffs().iter().enumerate() {
            set_block(&mut m, (j + d) * r, j * c, kd);
        }
    }
    m
}

fn to_complex<T: Scalar>(p: &MatrixPolynomial<T>) -> MatrixPolynomial<Complex<f64>> {
    MatrixPolynomial::new(p.coeffs().iter().map(|c| c.map(|x| x.to_complex())).collect()).expect("same shapes")
}

/// Deterministic per-input seed so the extra sample point does not depend on global state.
fn content_seed<T: Scalar>(p: &MatrixPolynomial<T>) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for c in p.coeffs() {
        for x in c.iter() {
            let z = x.to_complex();
            for b in [z.re.to_bits(), z.im.to_bits()] {
                h ^= b;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
    }
    h
}

/// Sample points of the full-rank sweep: `0`, then `2g+5` roots of unity with
/// moduli alternating between 1 and 3, then one pseudo-random point.
pub fn rank_sweep_points(grade: usize, seed: u64) -> Vec<Complex<f64>> {
    let m = 2 * grade + 5;
    let mut pts = Vec::with_capacity(m + 2);
    pts.push(Complex::new(0.0, 0.0));
    for j in 0..m {
        let rho = if j % 2 == 0 { 1.0 } else { 3.0 };
        let t = 2.0 * PI * (j as f64) / (m as f64);
        pts.push(Complex::new(rho * libm::cos(t), rho * libm::sin(t)));
    }
    let mut rng = seeded_rng(seed, 0);
    pts.push(Complex::<f64>::sample_normal(&mut rng) * 2.0);
    pts
}

/// Probabilistic minimal-basis test for a wide polynomial matrix `Q`.
///
/// Checks that the row-wise leading coefficient matrix has full row rank
/// (row-reducedness) and that `Q(λ0)` has full row rank at every point of
/// [`rank_sweep_points`], with `σ_min > tol·σ_max`. A rank drop away from the
/// sample points goes unnoticed.
pub fn is_minimal_basis<T: Scalar>(q: &MatrixPolynomial<T>, tol: f64) -> Result<bool> {
    if q.rows() >= q.cols() {
        return Err(Error::InvalidArgument("a minimal basis needs more columns than rows"));
    }
    if q.rows() == 0 {
        return Ok(true);
    }
    let full_row_rank = |m: &DMatrix<Complex<f64>>| {
        let s = singular_values(m);
        let smax = s[0];
        s.len() == m.nrows() && smax > 0.0 && s[s.len() - 1] > tol * smax
    };
    let qc = to_complex(q);
    let mut lead = DMatrix::zeros(q.rows(), q.cols());
    for i in 0..q.rows() {
        let deg = qc.coeffs().iter().rposition(|c| c.row(i).iter().any(|x| x.re != 0.0 || x.im != 0.0));
        match deg {
            Some(d) => lead.set_row(i, &qc.coeffs()[d].row(i)),
            None => return Ok(false),
        }
    }
    if !full_row_rank(&lead) {
        return Ok(false);
    }
    let pts = rank_sweep_points(q.grade(), content_seed(q));
    Ok(pts.iter().all(|&z| full_row_rank(&qc.evaluate(z))))
}

/// `π/(12(k+1)^{3/2})`, the size below which a perturbed `L_k⊗I_n` keeps a dual basis of degree `k`.
pub fn dual_completion_threshold(k: usize) -> f64 {
    PI / (12.0 * libm::pow((k + 1) as f64, 1.5))
}

/// `6√2(k+1)/π`: the factor bounding `‖ΔR_k‖_F` by `‖ΔL̃₂₁‖_F`.
pub fn dual_completion_factor(k: usize) -> f64 {
    6.0 * core::f64::consts::SQRT_2 * (k + 1) as f64 / PI
}

/// A perturbed dual pair `K(λ)`, `N(λ) = Λ_k(λ)^T⊗I_n + ΔR_k(λ)^T`.
#[derive(Clone, Debug, PartialEq)]
pub struct DualBasisPair<T: Scalar> {
    /// `K(λ)`, `kn×(k+1)n` pencil.
    pub k_poly: MatrixPolynomial<T>,
    /// `N(λ)`, `n×(k+1)n` of grade `k`.
    pub n_poly: MatrixPolynomial<T>,
    /// `ΔR_k(λ)`, `(k+1)n×n` of grade `k`.
    pub delta_r: MatrixPolynomial<T>,
    /// Block count.
    pub k: usize,
    /// Block size.
    pub n: usize,
    /// `‖K·N^T‖_F`.
    pub residual: f64,
}

/// Completes `K = L_k⊗I_n + ΔL̃₂₁` to a dual pair with the minimum-norm `ΔR_k`.
///
/// `K·ΔR = -K·(Λ_k⊗I_n)` is solved column by column through
/// [`convolution_matrix`] in the min-norm least-squares sense. With
/// `enforce_threshold` the perturbation must be below
/// [`dual_completion_threshold`]; a residual above `tol` is an error.
pub fn dual_basis_complete<T: Scalar>(
    kp: &MatrixPolynomial<T>,
    k: usize,
    n: usize,
    tol: f64,
    enforce_threshold: bool,
) -> Result<DualBasisPair<T>> {
    if (kp.rows(), kp.cols()) != (k * n, (k + 1) * n) {
        return Err(Error::DimensionMismatch {
            op: "dual basis completion",
            expected: (k * n, (k + 1) * n),
            found: (kp.rows(), kp.cols()),
        });
    }
    let kp = kp.with_grade(1)?;
    let lambda_t = build_lambda::<T>(k, n);
    if k == 0 {
        return Ok(DualBasisPair {
            k_poly: kp,
            n_poly: lambda_t,
            delta_r: MatrixPolynomial::zeros(n, n, 0),
            k,
            n,
            residual: 0.0,
        });
    }
    let dl = kp.checked_sub(&build_lk(k, n))?.frob_norm();
    if enforce_threshold && dl >= dual_completion_threshold(k) {
        return Err(Error::Precondition {
            what: "dual completion ‖ΔL̃21‖_F",
            value: dl,
            bound: dual_completion_threshold(k),
        });
    }
    let lambda = lambda_t.transpose();
    let rows = (k + 1) * n;
    let delta_r = if dl == 0.0 {
        MatrixPolynomial::zeros(rows, n, k)
    } else {
        let rhs_poly = kp.checked_mul(&lambda)?;
        let mut rhs = DMatrix::zeros((k + 2) * k * n, n);
        for (i, c) in rhs_poly.coeffs().iter().enumerate() {
            set_block(&mut rhs, i * k * n, 0, &(-c));
        }
        let conv = convolution_matrix(&kp, k);
        let smax = singular_values(&conv)[0];
        let sol = min_norm_solve(&conv, &rhs, 1e-10 * smax)?;
        let coeffs = (0..=k).map(|j| sol.rows(j * rows, rows).into_owned()).collect();
        MatrixPolynomial::new(coeffs)?
    };
    let n_t = lambda.checked_add(&delta_r)?;
    let residual = kp.checked_mul(&n_t)?.frob_norm();
    if !(residual <= tol) {
        return Err(Error::NumericalFailure { what: "dual basis completion", residual });
    }
    Ok(DualBasisPair { k_poly: kp, n_poly: n_t.transpose(), delta_r, k, n, residual })
}
