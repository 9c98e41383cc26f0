//! Vectorized ⋆-Sylvester systems and the quadratic fixed-point iteration
//! that zeroes the `(2,2)` block of a perturbed block Kronecker pencil.
//!
//! Unknowns `(Y, Z)` are vectorized as `[vec(Y); vec(Z^⋆)]` (column-major),
//! and the equations
//!
//! ```text
//! Y (bF̂ + dÊ)^⋆ + Ê Z^⋆ = C_0
//! Y (aF̂ + cÊ)^⋆ + F̂ Z^⋆ = C_1
//! ```
//!
//! become `(T_A + ΔT_A) x = [vec(C_0); vec(C_1)]`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SVD};

use crate::backward::StructuredPerturbation;
use crate::dense::{set_block, singular_values, spectral_norm, unvec};
use crate::error::{Error, Result};
use crate::minbases::selector_matrices;
use crate::polycore::{pair_norm, structure_residual, MatrixPolynomial, MobiusMatrix, StructureKind};
use crate::scalar::Scalar;

/// `Ê = -E_{kn} + ΔA₂₁` and `F̂ = F_{kn} + ΔB₂₁`.
#[derive(Clone, Debug, PartialEq)]
pub struct PerturbedSelectors<T: Scalar> {
    /// `Ê`.
    pub ehat: DMatrix<T>,
    /// `F̂`.
    pub fhat: DMatrix<T>,
}

impl<T: Scalar> PerturbedSelectors<T> {
    /// `(-E, F)`.
    pub fn unperturbed(k: usize, n: usize) -> Self {
        let s = selector_matrices::<T>(k, n);
        Self { ehat: -s.e, fhat: s.f }
    }

    /// `(-E + ΔA₂₁, F + ΔB₂₁)`.
    pub fn new(k: usize, n: usize, da21: &DMatrix<T>, db21: &DMatrix<T>) -> Result<Self> {
        let s = Self::unperturbed(k, n);
        for m in [da21, db21] {
            if m.shape() != s.ehat.shape() {
                return Err(Error::DimensionMismatch {
                    op: "perturbed selectors",
                    expected: s.ehat.shape(),
                    found: m.shape(),
                });
            }
        }
        Ok(Self { ehat: s.ehat + da21, fhat: s.fhat + db21 })
    }

    fn kn(&self) -> (usize, usize) {
        self.ehat.shape()
    }
}

/// `2 sin(π/(4k))`.
pub fn sigma_min_formula(k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1"));
    }
    Ok(2.0 * libm::sin(PI / (4.0 * k as f64)))
}

/// `T_A + ΔT_A` for arbitrary selectors.
pub fn sylvester_operator<T: Scalar>(a: &MobiusMatrix<T>, sel: &PerturbedSelectors<T>) -> DMatrix<T> {
    let (ca, cb, cc, cd) = a.entries();
    let (kn, k1n) = sel.kn();
    let eye = DMatrix::<T>::identity(kn, kn);
    let b0 = (&sel.fhat * cb + &sel.ehat * cd).conjugate();
    let b1 = (&sel.fhat * ca + &sel.ehat * cc).conjugate();
    let rows = kn * kn;
    let cols = kn * k1n;
    let mut t = DMatrix::zeros(2 * rows, 2 * cols);
    set_block(&mut t, 0, 0, &b0.kronecker(&eye));
    set_block(&mut t, 0, cols, &eye.kronecker(&sel.ehat));
    set_block(&mut t, rows, 0, &b1.kronecker(&eye));
    set_block(&mut t, rows, cols, &eye.kronecker(&sel.fhat));
    t
}

/// `T_A`, a `2k²n² × 2k(k+1)n²` matrix with entries in `{0, ±1}`.
pub fn build_ta<T: Scalar>(k: usize, n: usize, kind: StructureKind) -> DMatrix<T> {
    sylvester_operator(&kind.mobius(), &PerturbedSelectors::unperturbed(k, n))
}

/// `T̂_A = [I_k⊗(bF_k - dE_k), -E_k⊗I_k; I_k⊗(aF_k - cE_k), F_k⊗I_k]`.
///
/// `T_A` is permutation-equivalent to `T̂_A ⊗ I_{n²}`, so every singular value
/// of `T̂_A` appears `n²` times in `T_A`.
pub fn build_ta_reduced<T: Scalar>(k: usize, kind: StructureKind) -> DMatrix<T> {
    let (a, b, c, d) = kind.entries();
    let s = selector_matrices::<T>(k, 1);
    let f = |x: f64| T::from_real(x);
    let ik = DMatrix::<T>::identity(k, k);
    let top = &s.f * f(b) - &s.e * f(d);
    let bot = &s.f * f(a) - &s.e * f(c);
    let (r, cl) = (k * k, k * (k + 1));
    let mut t = DMatrix::zeros(2 * r, 2 * cl);
    set_block(&mut t, 0, 0, &ik.kronecker(&top));
    set_block(&mut t, 0, cl, &(-s.e.kronecker(&ik)));
    set_block(&mut t, r, 0, &ik.kronecker(&bot));
    set_block(&mut t, r, cl, &s.f.kronecker(&ik));
    t
}

/// `T̂ = [I_k⊗E_k, E_k⊗I_k; I_k⊗F_k, F_k⊗I_k]`, the common representative of the six reduced matrices.
pub fn reference_t_hat<T: Scalar>(k: usize) -> DMatrix<T> {
    let s = selector_matrices::<T>(k, 1);
    let ik = DMatrix::<T>::identity(k, k);
    let (r, cl) = (k * k, k * (k + 1));
    let mut t = DMatrix::zeros(2 * r, 2 * cl);
    set_block(&mut t, 0, 0, &ik.kronecker(&s.e));
    set_block(&mut t, 0, cl, &s.e.kronecker(&ik));
    set_block(&mut t, r, 0, &ik.kronecker(&s.f));
    set_block(&mut t, r, cl, &s.f.kronecker(&ik));
    t
}

/// `S_k = diag((-1)^0, …, (-1)^{k-1})` and `S_{k+1} = diag(S_k, (-1)^k)`.
pub fn sign_matrices<T: Scalar>(k: usize) -> (DMatrix<T>, DMatrix<T>) {
    let s = |m: usize| {
        DMatrix::from_fn(m, m, |i, j| {
            if i != j {
                T::zero()
            } else if i % 2 == 0 {
                T::one()
            } else {
                -T::one()
            }
        })
    };
    (s(k), s(k + 1))
}

/// `(π/(4k))(1 - 3k‖ΔL‖_F)`, a lower bound on `σ_min(T_A) - ‖ΔT_A‖₂` valid for `‖ΔL‖_F < 1/(3k)`.
pub fn delta_lower_bound(k: usize, norm_dl: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1"));
    }
    let kf = k as f64;
    let bound = 1.0 / (3.0 * kf);
    if !(norm_dl < bound) {
        return Err(Error::Precondition { what: "‖ΔL‖_F for the δ lower bound", value: norm_dl, bound });
    }
    Ok(PI / (4.0 * kf) * (1.0 - 3.0 * kf * norm_dl))
}

/// A factored `T_A + ΔT_A` together with `δ`.
pub struct SylvesterSystem<T: Scalar> {
    a: MobiusMatrix<T>,
    sel: PerturbedSelectors<T>,
    svd: SVD<T, nalgebra::Dyn, nalgebra::Dyn>,
    /// `σ_min(T_A)`.
    pub sigma_min_ta: f64,
    /// `‖ΔT_A‖₂` (or `NaN` when `δ` came from the analytic bound).
    pub norm_delta_ta: f64,
    /// `δ = σ_min(T_A) - ‖ΔT_A‖₂`.
    pub delta: f64,
}

/// How `δ` is obtained.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DeltaSource {
    /// Dense SVD of `ΔT_A`.
    Svd,
    /// [`delta_lower_bound`] with the given `‖ΔL‖_F`.
    LowerBound(f64),
}

impl<T: Scalar> SylvesterSystem<T> {
    /// System of a structure kind; `σ_min(T_A)` from the closed formula.
    pub fn for_kind(kind: StructureKind, sel: PerturbedSelectors<T>, source: DeltaSource) -> Result<Self> {
        let k = sel.kn().0 / (sel.kn().1 - sel.kn().0).max(1);
        let smin = sigma_min_formula(k)?;
        Self::build(kind.mobius(), sel, smin, source)
    }

    /// System of an arbitrary `A`; `σ_min(T_A)` by SVD.
    pub fn new(a: MobiusMatrix<T>, sel: PerturbedSelectors<T>) -> Result<Self> {
        let (kn, k1n) = sel.kn();
        let base = PerturbedSelectors::unperturbed(kn / (k1n - kn).max(1), k1n - kn);
        let smin = crate::dense::min_singular_value(&sylvester_operator(&a, &base));
        Self::build(a, sel, smin, DeltaSource::Svd)
    }

    fn build(a: MobiusMatrix<T>, sel: PerturbedSelectors<T>, sigma_min_ta: f64, source: DeltaSource) -> Result<Self> {
        let (kn, k1n) = sel.kn();
        if kn == 0 || k1n <= kn {
            return Err(Error::InvalidArgument("selectors must be kn x (k+1)n with k >= 1"));
        }
        let n = k1n - kn;
        let k = kn / n;
        let op = sylvester_operator(&a, &sel);
        let (norm_delta_ta, delta) = match source {
            DeltaSource::Svd => {
                let base = sylvester_operator(&a, &PerturbedSelectors::unperturbed(k, n));
                let nd = spectral_norm(&(&op - base));
                (nd, sigma_min_ta - nd)
            }
            DeltaSource::LowerBound(norm_dl) => (f64::NAN, delta_lower_bound(k, norm_dl)?),
        };
        if !(delta > 0.0) {
            return Err(Error::RankRisk { delta });
        }
        let svd = op.svd(true, true);
        Ok(Self { a, sel, svd, sigma_min_ta, norm_delta_ta, delta })
    }

    /// Min-norm `(Y, Z)` with residual check at `1e-12·‖(C_0, C_1)‖_F`.
    pub fn solve(&self, c0: &DMatrix<T>, c1: &DMatrix<T>) -> Result<(DMatrix<T>, DMatrix<T>)> {
        let (kn, k1n) = self.sel.kn();
        for c in [c0, c1] {
            if c.shape() != (kn, kn) {
                return Err(Error::DimensionMismatch {
                    op: "Sylvester right-hand side",
                    expected: (kn, kn),
                    found: c.shape(),
                });
            }
        }
        let mut rhs = DVector::zeros(2 * kn * kn);
        rhs.rows_mut(0, kn * kn).copy_from_slice(c0.as_slice());
        rhs.rows_mut(kn * kn, kn * kn).copy_from_slice(c1.as_slice());
        let cutoff = self.delta * 1e-3;
        let split = |x: &DVector<T>| {
            let y = unvec(&x.as_slice()[..kn * k1n], kn, k1n);
            let z = unvec(&x.as_slice()[kn * k1n..], k1n, kn).adjoint();
            (y, z)
        };
        let mut x = self.svd.solve(&rhs, cutoff).map_err(Error::InvalidArgument)?;
        let scale = pair_norm(c0, c1);
        let (mut best, mut res) = (split(&x), f64::INFINITY);
        // Iterative refinement on the same factorization; keeps the best iterate.
        for step in 0..=REFINEMENT_STEPS {
            let (y, z) = split(&x);
            let (r0, r1) = self.apply(&y, &z);
            let (d0, d1) = (c0 - r0, c1 - r1);
            let r = pair_norm(&d0, &d1);
            if r >= res {
                break;
            }
            (best, res) = ((y, z), r);
            if step == REFINEMENT_STEPS || r <= f64::EPSILON * scale {
                break;
            }
            let mut d = DVector::zeros(2 * kn * kn);
            d.rows_mut(0, kn * kn).copy_from_slice(d0.as_slice());
            d.rows_mut(kn * kn, kn * kn).copy_from_slice(d1.as_slice());
            x += self.svd.solve(&d, cutoff).map_err(Error::InvalidArgument)?;
        }
        if !(res <= 1e-12 * scale) {
            return Err(Error::NumericalFailure { what: "min-norm Sylvester solve", residual: res });
        }
        Ok(best)
    }

    /// Left-hand sides `(Y B_0^⋆ + Ê Z^⋆, Y B_1^⋆ + F̂ Z^⋆)`.
    pub fn apply(&self, y: &DMatrix<T>, z: &DMatrix<T>) -> (DMatrix<T>, DMatrix<T>) {
        let (ca, cb, cc, cd) = self.a.entries();
        let b0 = &self.sel.fhat * cb + &self.sel.ehat * cd;
        let b1 = &self.sel.fhat * ca + &self.sel.ehat * cc;
        let zs = z.adjoint();
        (y * b0.adjoint() + &self.sel.ehat * &zs, y * b1.adjoint() + &self.sel.fhat * zs)
    }

    /// The Möbius matrix of the system.
    pub fn mobius(&self) -> &MobiusMatrix<T> {
        &self.a
    }
}

/// Min-norm solution of the Sylvester pair for a structure kind, with `δ` by SVD.
pub fn min_norm_sylvester_solve<T: Scalar>(
    kind: StructureKind,
    sel: &PerturbedSelectors<T>,
    c0: &DMatrix<T>,
    c1: &DMatrix<T>,
) -> Result<(DMatrix<T>, DMatrix<T>)> {
    SylvesterSystem::for_kind(kind, sel.clone(), DeltaSource::Svd)?.solve(c0, c1)
}

/// `X = (Y + Z)/2`, after checking that `λC_1 + C_0` is `M_A`-structured
/// (relative tolerance `tol`), which is what makes `X` solve the ⋆-Sylvester pair.
pub fn star_from_sylvester<T: Scalar>(
    a: &MobiusMatrix<T>,
    c0: &DMatrix<T>,
    c1: &DMatrix<T>,
    y: &DMatrix<T>,
    z: &DMatrix<T>,
    tol: f64,
) -> Result<DMatrix<T>> {
    let c = MatrixPolynomial::pencil(c0.clone(), c1.clone())?;
    let r = structure_residual(&c, a)?;
    if !(r <= tol * c.frob_norm()) {
        return Err(Error::NotStructured { residual: r });
    }
    Ok((y + z) * T::from_real(0.5))
}

/// Options of [`quadratic_fixed_point`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FixedPointOptions {
    /// Residual tolerance; `None` means `1e-13·θ`.
    pub tol: Option<f64>,
    /// Iteration cap.
    pub max_iter: usize,
    /// Source of `δ`.
    pub delta_source: DeltaSource,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self { tol: None, max_iter: 100, delta_source: DeltaSource::Svd }
    }
}

/// Result of [`quadratic_fixed_point`].
#[derive(Clone, Debug, PartialEq)]
pub struct FixedPointState<T: Scalar> {
    /// Final iterate.
    pub x: DMatrix<T>,
    /// Quadratic-system residual after each iteration.
    pub residuals: Vec<f64>,
    /// `‖X_i‖_F` after each iteration.
    pub iterate_norms: Vec<f64>,
    /// `‖(Y_i, Z_i)‖_F` after each iteration.
    pub pair_norms: Vec<f64>,
    /// `δ`.
    pub delta: f64,
    /// `σ_min(T_A)`.
    pub sigma_min_ta: f64,
    /// `‖ΔT_A‖₂`.
    pub norm_delta_ta: f64,
    /// `θ = ‖(ΔA₂₂, ΔB₂₂)‖_F`.
    pub theta: f64,
    /// `ω = ‖(M_0 + ΔA₁₁, M_1 + ΔB₁₁)‖_F`.
    pub omega: f64,
    /// `κ₁ = θω/δ²`.
    pub kappa1: f64,
    /// `κ = 2κ₁/(1 - 2κ₁ + √(1 - 4κ₁))`.
    pub kappa: f64,
    /// `ρ₀ = θ/δ`.
    pub rho0: f64,
    /// Bound `2ω(1+κ)θ/δ²` on the contraction ratio.
    pub contraction_bound: f64,
    /// Iterations performed.
    pub iterations: usize,
    /// Stopping tolerance: the requested one, raised to the rounding floor
    /// `64ε√(kn)(θ + 2‖X‖(‖Ê‖+‖F̂‖) + ‖X‖²ω)` of the residual evaluation.
    pub tol: f64,
}

impl<T: Scalar> FixedPointState<T> {
    /// `ρ₀(1+κ)`, the bound on every iterate.
    pub fn iterate_bound(&self) -> f64 {
        self.rho0 * (1.0 + self.kappa)
    }

    /// Final residual.
    pub fn residual(&self) -> f64 {
        self.residuals.last().copied().unwrap_or(0.0)
    }
}

/// Correction solves after the first min-norm solve.
const REFINEMENT_STEPS: usize = 2;

/// Iterations without a halving of the residual after which the iteration gives up.
const STAGNATION_WINDOW: usize = 5;

/// `κ` from `κ₁`.
pub fn kappa_limit(kappa1: f64) -> f64 {
    2.0 * kappa1 / (1.0 - 2.0 * kappa1 + libm::sqrt(1.0 - 4.0 * kappa1))
}

/// Residuals `(R_0, R_1)` of the quadratic system at `X`.
pub fn quadratic_residual<T: Scalar>(
    sys: &SylvesterSystem<T>,
    x: &DMatrix<T>,
    m0: &DMatrix<T>,
    m1: &DMatrix<T>,
    da22: &DMatrix<T>,
    db22: &DMatrix<T>,
) -> f64 {
    let (l0, l1) = sys.apply(x, x);
    let xs = x.adjoint();
    let r0 = l0 + da22 + x * m0 * &xs;
    let r1 = l1 + db22 + x * m1 * &xs;
    pair_norm(&r0, &r1)
}

/// Solves
///
/// ```text
/// X(bF̂+dÊ)^⋆ + ÊX^⋆ = -ΔA₂₂ - X(M_0+ΔA₁₁)X^⋆
/// X(aF̂+cÊ)^⋆ + F̂X^⋆ = -ΔB₂₂ - X(M_1+ΔB₁₁)X^⋆
/// ```
///
/// by iterating min-norm Sylvester solves from `X = 0`. Requires `δ > 0`
/// and `θω/δ² < 1/4`.
pub fn quadratic_fixed_point<T: Scalar>(
    pert: &StructuredPerturbation<T>,
    m0: &DMatrix<T>,
    m1: &DMatrix<T>,
    opts: FixedPointOptions,
) -> Result<FixedPointState<T>> {
    let (k, n, kind) = (pert.k, pert.n, pert.kind);
    if k == 0 {
        return Err(Error::InvalidArgument("the fixed point needs k >= 1"));
    }
    let sel = PerturbedSelectors::new(k, n, &pert.da21, &pert.db21)?;
    let sys = SylvesterSystem::for_kind(kind, sel, opts.delta_source)?;
    let m0p = m0 + &pert.da11;
    let m1p = m1 + &pert.db11;
    let theta = pair_norm(&pert.da22, &pert.db22);
    let omega = pair_norm(&m0p, &m1p);
    let delta = sys.delta;
    let kappa1 = theta * omega / (delta * delta);
    if !(kappa1 < 0.25) {
        return Err(Error::Precondition { what: "θω/δ²", value: kappa1, bound: 0.25 });
    }
    let kappa = kappa_limit(kappa1);
    let tol = opts.tol.unwrap_or(1e-13 * theta);
    let a = *sys.mobius();
    let sel_norm = sys.sel.ehat.norm() + sys.sel.fhat.norm();
    let dim_factor = libm::sqrt((k * n) as f64);
    let mut state = FixedPointState {
        x: DMatrix::zeros(k * n, (k + 1) * n),
        residuals: Vec::new(),
        iterate_norms: Vec::new(),
        pair_norms: Vec::new(),
        delta,
        sigma_min_ta: sys.sigma_min_ta,
        norm_delta_ta: sys.norm_delta_ta,
        theta,
        omega,
        kappa1,
        kappa,
        rho0: theta / delta,
        contraction_bound: 2.0 * omega * (1.0 + kappa) * theta / (delta * delta),
        iterations: 0,
        tol,
    };
    for _ in 0..opts.max_iter.max(1) {
        let xs = state.x.adjoint();
        let c0 = -(&pert.da22 + &state.x * &m0p * &xs);
        let c1 = -(&pert.db22 + &state.x * &m1p * &xs);
        let (y, z) = sys.solve(&c0, &c1)?;
        state.pair_norms.push(pair_norm(&y, &z));
        state.x = star_from_sylvester(&a, &c0, &c1, &y, &z, 1e-10)?;
        state.iterate_norms.push(state.x.norm());
        state.iterations += 1;
        let r = quadratic_residual(&sys, &state.x, &m0p, &m1p, &pert.da22, &pert.db22);
        state.residuals.push(r);
        let xn = state.x.norm();
        let floor = 64.0 * f64::EPSILON * dim_factor * (theta + 2.0 * xn * sel_norm + xn * xn * omega);
        state.tol = tol.max(floor);
        if r <= state.tol {
            return Ok(state);
        }
        let h = &state.residuals;
        if h.len() > STAGNATION_WINDOW && r >= 0.5 * h[h.len() - 1 - STAGNATION_WINDOW] {
            break;
        }
    }
    Err(Error::NonConvergence { iterations: state.iterations, residual: state.residual() })
}

/// Singular values of `T_A` and of `T̂_A` (each repeated `n²` times), both sorted decreasingly.
pub fn full_and_reduced_singular_values(k: usize, n: usize, kind: StructureKind) -> (Vec<f64>, Vec<f64>) {
    let full: Vec<f64> = singular_values(&build_ta::<f64>(k, n, kind)).iter().copied().collect();
    let mut red: Vec<f64> = Vec::new();
    for s in singular_values(&build_ta_reduced::<f64>(k, kind)).iter() {
        red.extend(core::iter::repeat_n(*s, n * n));
    }
    red.sort_by(|a, b| b.total_cmp(a));
    (full, red)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::min_singular_value;
    use crate::polycore::random_polynomial;
    use crate::rng::seeded_rng;
    use nalgebra::dmatrix;

    #[test]
    fn ta_small_example() {
        let t = build_ta::<f64>(1, 1, StructureKind::Symmetric);
        assert_eq!(t, dmatrix![-1.0, 0.0, -1.0, 0.0; 0.0, 1.0, 0.0, 1.0]);
        assert_eq!(t.shape(), (2, 4));
        assert_eq!(build_ta::<f64>(2, 2, StructureKind::Odd).shape(), (2 * 4 * 4, 2 * 2 * 3 * 4));
    }

    #[test]
    fn sigma_min_law_small() {
        assert!((sigma_min_formula(1).unwrap() - core::f64::consts::SQRT_2).abs() < 1e-15);
        assert!((sigma_min_formula(2).unwrap() - 0.7653668647301796).abs() < 1e-15);
        assert!(sigma_min_formula(0).is_err());
        for k in 1..=4 {
            assert!(sigma_min_formula(k + 1).unwrap() < sigma_min_formula(k).unwrap());
            for kind in StructureKind::ALL {
                let s = min_singular_value(&build_ta::<f64>(k, 1, kind));
                assert!((s / sigma_min_formula(k).unwrap() - 1.0).abs() < 1e-12, "{k} {kind}");
                let s2 = min_singular_value(&build_ta::<f64>(k, 2, kind));
                assert!((s2 - s).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn reduced_multiplicity_is_n_squared() {
        for k in 1..=3 {
            for kind in StructureKind::ALL {
                let (full, red) = full_and_reduced_singular_values(k, 2, kind);
                assert_eq!(full.len(), red.len());
                for (a, b) in full.iter().zip(&red) {
                    assert!((a - b).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn appendix_sign_identities() {
        for k in 1..=5 {
            let (sk, sk1) = sign_matrices::<f64>(k);
            let s = selector_matrices::<f64>(k, 1);
            assert_eq!(&sk * &s.e * &sk1, s.e);
            assert_eq!(&sk * &s.f * &sk1, -s.f.clone());
            let r = k * k;
            let c = k * (k + 1);
            let dr = DMatrix::from_fn(2 * r, 2 * r, |i, j| {
                if i != j {
                    0.0
                } else if i < r {
                    -1.0
                } else {
                    1.0
                }
            });
            let dc = DMatrix::from_fn(2 * c, 2 * c, |i, j| {
                if i != j {
                    0.0
                } else if i < c {
                    -1.0
                } else {
                    1.0
                }
            });
            let that = reference_t_hat::<f64>(k);
            let t = |kind| build_ta_reduced::<f64>(k, kind);
            assert_eq!(&dr * t(StructureKind::Symmetric), that);
            assert_eq!(&dr * t(StructureKind::SkewSymmetric) * &dc, that);
            assert_eq!(t(StructureKind::Palindromic) * &dc, t(StructureKind::AntiPalindromic));
            assert_eq!(t(StructureKind::Odd) * &dc, t(StructureKind::Even));
            let ik = DMatrix::<f64>::identity(k, k);
            let ik1 = DMatrix::<f64>::identity(k + 1, k + 1);
            let t5 = &dr * t(StructureKind::Even);
            let mut left = DMatrix::zeros(2 * r, 2 * r);
            set_block(&mut left, 0, 0, &ik.kronecker(&sk));
            set_block(&mut left, r, r, &ik.kronecker(&sk));
            let mut right = DMatrix::zeros(2 * c, 2 * c);
            set_block(&mut right, 0, 0, &ik.kronecker(&sk1));
            set_block(&mut right, c, c, &ik1.kronecker(&sk));
            assert_eq!(left * t5 * right, that);
        }
    }

    #[test]
    fn delta_bound() {
        assert!((delta_lower_bound(2, 1.0 / 12.0).unwrap() - PI / 16.0).abs() < 1e-15);
        assert!(delta_lower_bound(2, 0.0).unwrap() <= sigma_min_formula(2).unwrap());
        assert!(delta_lower_bound(2, 0.2).is_err());
    }

    fn structured_rhs(kind: StructureKind, m: usize, seed: u64) -> (DMatrix<f64>, DMatrix<f64>) {
        let mut rng = seeded_rng(seed, 0);
        let c = crate::polycore::structure_project(&random_polynomial::<f64, _>(m, m, 1, &mut rng), kind).unwrap();
        (c.coeff(0), c.coeff(1))
    }

    #[test]
    fn min_norm_solves() {
        for kind in StructureKind::ALL {
            let sel = PerturbedSelectors::<f64>::unperturbed(2, 2);
            let z = DMatrix::zeros(4, 4);
            let (y0, z0) = min_norm_sylvester_solve(kind, &sel, &z, &z).unwrap();
            assert_eq!(y0.norm() + z0.norm(), 0.0);
            let (c0, c1) = structured_rhs(kind, 4, 9);
            let sys = SylvesterSystem::for_kind(kind, sel, DeltaSource::Svd).unwrap();
            let (y, z) = sys.solve(&c0, &c1).unwrap();
            assert!(pair_norm(&y, &z) <= pair_norm(&c0, &c1) / sys.delta * (1.0 + 1e-12));
            let x = star_from_sylvester(sys.mobius(), &c0, &c1, &y, &z, 1e-12).unwrap();
            let (r0, r1) = sys.apply(&x, &x);
            assert!(pair_norm(&(r0 - &c0), &(r1 - &c1)) <= 1e-12 * pair_norm(&c0, &c1), "{kind}");
        }
    }

    #[test]
    fn star_needs_structured_rhs() {
        let a = StructureKind::Symmetric.mobius::<f64>();
        let c0 = dmatrix![0.0, 1.0; 0.0, 0.0];
        let y = DMatrix::zeros(2, 3);
        assert!(matches!(star_from_sylvester(&a, &c0, &c0, &y, &y, 1e-12), Err(Error::NotStructured { .. })));
        let yy = dmatrix![1.0, 2.0, 3.0; 4.0, 5.0, 6.0];
        let s = DMatrix::<f64>::identity(2, 2);
        assert_eq!(star_from_sylvester(&a, &s, &s, &yy, &yy, 1e-12).unwrap(), yy);
    }

    #[test]
    fn star_for_random_involution() {
        // A = [c s; s -c] is real involutory for any angle.
        let (c, s) = (libm::cos(0.7), libm::sin(0.7));
        let a = MobiusMatrix::new(c, s, s, -c).unwrap();
        assert!(a.is_coninvolutory(1e-15));
        let mut rng = seeded_rng(21, 0);
        let cp =
            crate::polycore::structure_project_mobius(&random_polynomial::<f64, _>(4, 4, 1, &mut rng), &a).unwrap();
        let sys = SylvesterSystem::new(a, PerturbedSelectors::unperturbed(2, 2)).unwrap();
        let (y, z) = sys.solve(&cp.coeff(0), &cp.coeff(1)).unwrap();
        let x = star_from_sylvester(&a, &cp.coeff(0), &cp.coeff(1), &y, &z, 1e-12).unwrap();
        let (r0, r1) = sys.apply(&x, &x);
        assert!(pair_norm(&(r0 - cp.coeff(0)), &(r1 - cp.coeff(1))) <= 1e-12 * cp.frob_norm());
    }
}
