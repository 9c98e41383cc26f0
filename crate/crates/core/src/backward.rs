//! Structured backward error pipeline: perturb a block Kronecker pencil,
//! restore its zero `(2,2)` block by a ⋆-congruence, complete the dual
//! minimal basis, rebuild `P + ΔP` and compare against the a priori bound.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::DMatrix;
use rand_core::RngCore;
use serde::{Deserialize, Serialize};

use crate::dense::set_block;
use crate::error::{Error, Result};
use crate::linearize::{BlockKroneckerPencil, Placement};
use crate::minbases::{
    build_lambda, build_lk, dual_basis_complete, dual_completion_factor, dual_completion_threshold, DualBasisPair,
};
use crate::polycore::{random_polynomial, structure_project, structure_residual, MatrixPolynomial, StructureKind};
use crate::rng::seeded_rng;
use crate::scalar::Scalar;
use crate::spectra::{compare_spectra, pencil_eigs, reference_polyeigs};
use crate::sylvester::{quadratic_fixed_point, FixedPointOptions, FixedPointState};

/// Natural blocks of a structured pencil perturbation
/// `ΔL = [λΔB₁₁+ΔA₁₁, ΔL₁₂; λΔB₂₁+ΔA₂₁, λΔB₂₂+ΔA₂₂]`, where `ΔL₁₂ = M_A[ΔL₂₁]^⋆`.
#[derive(Clone, Debug, PartialEq)]
pub struct StructuredPerturbation<T: Scalar> {
    /// `ΔA₁₁`, `(k+1)n` square.
    pub da11: DMatrix<T>,
    /// `ΔB₁₁`, `(k+1)n` square.
    pub db11: DMatrix<T>,
    /// `ΔA₂₁`, `kn×(k+1)n`.
    pub da21: DMatrix<T>,
    /// `ΔB₂₁`, `kn×(k+1)n`.
    pub db21: DMatrix<T>,
    /// `ΔA₂₂`, `kn` square.
    pub da22: DMatrix<T>,
    /// `ΔB₂₂`, `kn` square.
    pub db22: DMatrix<T>,
    /// Structure of the perturbation.
    pub kind: StructureKind,
    /// Block count.
    pub k: usize,
    /// Block size.
    pub n: usize,
}

/// Which natural blocks a random perturbation may touch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockMask {
    /// The `(1,1)` block.
    pub b11: bool,
    /// The `(2,1)` block and with it the `(1,2)` block.
    pub b21: bool,
    /// The `(2,2)` block.
    pub b22: bool,
}

impl BlockMask {
    /// All blocks.
    pub const ALL: BlockMask = BlockMask { b11: true, b21: true, b22: true };
}

impl Default for BlockMask {
    fn default() -> Self {
        Self::ALL
    }
}

impl<T: Scalar> StructuredPerturbation<T> {
    /// The zero perturbation.
    pub fn zero(k: usize, n: usize, kind: StructureKind) -> Self {
        let (s1, s2) = ((k + 1) * n, k * n);
        Self {
            da11: DMatrix::zeros(s1, s1),
            db11: DMatrix::zeros(s1, s1),
            da21: DMatrix::zeros(s2, s1),
            db21: DMatrix::zeros(s2, s1),
            da22: DMatrix::zeros(s2, s2),
            db22: DMatrix::zeros(s2, s2),
            kind,
            k,
            n,
        }
    }

    /// Split a `(2k+1)n` pencil into natural blocks; the `(1,2)` block is dropped.
    pub fn split(dl: &MatrixPolynomial<T>, k: usize, n: usize, kind: StructureKind) -> Result<Self> {
        let s = (2 * k + 1) * n;
        if (dl.rows(), dl.cols()) != (s, s) || dl.grade() > 1 {
            return Err(Error::DimensionMismatch {
                op: "perturbation split",
                expected: (s, s),
                found: (dl.rows(), dl.cols()),
            });
        }
        let dl = dl.with_grade(1)?;
        let (s1, s2) = ((k + 1) * n, k * n);
        let b =
            |c: usize, r0: usize, nr: usize, c0: usize, nc: usize| dl.coeff(c).view((r0, c0), (nr, nc)).into_owned();
        Ok(Self {
            da11: b(0, 0, s1, 0, s1),
            db11: b(1, 0, s1, 0, s1),
            da21: b(0, s1, s2, 0, s1),
            db21: b(1, s1, s2, 0, s1),
            da22: b(0, s1, s2, s1, s2),
            db22: b(1, s1, s2, s1, s2),
            kind,
            k,
            n,
        })
    }

    /// `ΔL₁₁(λ)`.
    pub fn dl11(&self) -> MatrixPolynomial<T> {
        MatrixPolynomial::pencil(self.da11.clone(), self.db11.clone()).expect("square blocks")
    }

    /// `ΔL₂₁(λ)`.
    pub fn dl21(&self) -> MatrixPolynomial<T> {
        MatrixPolynomial::pencil(self.da21.clone(), self.db21.clone()).expect("equal blocks")
    }

    /// `ΔL₂₂(λ)`.
    pub fn dl22(&self) -> MatrixPolynomial<T> {
        MatrixPolynomial::pencil(self.da22.clone(), self.db22.clone()).expect("square blocks")
    }

    /// The assembled `ΔL(λ)`, with `ΔL₁₂ = M_A[ΔL₂₁]^⋆`.
    pub fn to_pencil(&self) -> MatrixPolynomial<T> {
        let (s1, s) = ((self.k + 1) * self.n, (2 * self.k + 1) * self.n);
        let d12 = self.dl21().mobius(&self.kind.mobius()).star_adjoint();
        let mut c = [DMatrix::zeros(s, s), DMatrix::zeros(s, s)];
        let (d11, d21, d22) = (self.dl11(), self.dl21(), self.dl22());
        for (i, m) in c.iter_mut().enumerate() {
            set_block(m, 0, 0, &d11.coeff(i));
            if self.k > 0 {
                set_block(m, 0, s1, &d12.coeff(i));
                set_block(m, s1, 0, &d21.coeff(i));
                set_block(m, s1, s1, &d22.coeff(i));
            }
        }
        let [l0, l1] = c;
        MatrixPolynomial::pencil(l0, l1).expect("square")
    }

    /// `‖ΔL‖_F` of the assembled pencil.
    pub fn frob_norm(&self) -> f64 {
        self.to_pencil().frob_norm()
    }
}

/// Random structured `ΔL` with `‖ΔL‖_F = target_norm`, restricted to the blocks in `mask`.
///
/// A zero `target_norm` gives the zero perturbation.
pub fn random_structured_perturbation_with<T: Scalar, R: RngCore + ?Sized>(
    k: usize,
    n: usize,
    kind: StructureKind,
    target_norm: f64,
    mask: BlockMask,
    rng: &mut R,
) -> Result<StructuredPerturbation<T>> {
    if !(target_norm >= 0.0) || !target_norm.is_finite() {
        return Err(Error::InvalidArgument("perturbation norm must be finite and nonnegative"));
    }
    if target_norm == 0.0 {
        return Ok(StructuredPerturbation::zero(k, n, kind));
    }
    let s = (2 * k + 1) * n;
    for _ in 0..16 {
        let dl = structure_project(&random_polynomial::<T, R>(s, s, 1, rng), kind)?;
        let mut p = StructuredPerturbation::split(&dl, k, n, kind)?;
        if !mask.b11 {
            p.da11.fill(T::zero());
            p.db11.fill(T::zero());
        }
        if !mask.b21 {
            p.da21.fill(T::zero());
            p.db21.fill(T::zero());
        }
        if !mask.b22 {
            p.da22.fill(T::zero());
            p.db22.fill(T::zero());
        }
        let nrm = p.frob_norm();
        if nrm > 0.0 {
            let f = T::from_real(target_norm / nrm);
            for m in [&mut p.da11, &mut p.db11, &mut p.da21, &mut p.db21, &mut p.da22, &mut p.db22] {
                *m *= f;
            }
            return Ok(p);
        }
    }
    Err(Error::ZeroProjection)
}

/// [`random_structured_perturbation_with`] on all blocks and the stream `seeded_rng(seed, 0)`.
pub fn random_structured_perturbation<T: Scalar>(
    k: usize,
    n: usize,
    kind: StructureKind,
    target_norm: f64,
    seed: u64,
) -> Result<StructuredPerturbation<T>> {
    random_structured_perturbation_with(k, n, kind, target_norm, BlockMask::ALL, &mut seeded_rng(seed, 0))
}

/// `(π/16)²/(k²(1+‖M‖_F))`: admissibility of the congruence step.
pub fn congruence_threshold(k: usize, norm_m: f64) -> f64 {
    (PI / 16.0) * (PI / 16.0) / ((k * k) as f64 * (1.0 + norm_m))
}

/// `(π/16)²/((k+1)^{5/2}(1+‖M‖_F))`: admissibility of the whole pipeline.
pub fn theorem_threshold(k: usize, norm_m: f64) -> f64 {
    (PI / 16.0) * (PI / 16.0) / (libm::pow((k + 1) as f64, 2.5) * (1.0 + norm_m))
}

/// `3k‖ΔL‖/(1 - 3k‖ΔL‖)`, or `∞` when `3k‖ΔL‖ ≥ 1`.
pub fn x_norm_bound(k: usize, norm_dl: f64) -> f64 {
    let t = 3.0 * k as f64 * norm_dl;
    if t < 1.0 {
        t / (1.0 - t)
    } else {
        f64::INFINITY
    }
}

/// `‖ΔL‖(1 + 3k(‖M‖ + ‖ΔL‖)/(1 - 3k‖ΔL‖))`, bounding `‖ΔL̃₂₁‖_F`.
pub fn dl21_tilde_bound(k: usize, norm_dl: f64, norm_m: f64) -> f64 {
    let t = 3.0 * k as f64 * norm_dl;
    if t < 1.0 {
        norm_dl * (1.0 + 3.0 * k as f64 * (norm_m + norm_dl) / (1.0 - t))
    } else {
        f64::INFINITY
    }
}

/// `√(k+1)(5‖ΔL₁₁‖ + 4‖M‖‖ΔR‖)`, bounding `‖ΔP‖_F`.
pub fn dp_norm_bound(k: usize, norm_dl11: f64, norm_m: f64, norm_dr: f64) -> f64 {
    libm::sqrt((k + 1) as f64) * (5.0 * norm_dl11 + 4.0 * norm_m * norm_dr)
}

/// Constants of the a priori bound for a given `P` and its pencil.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremBound {
    /// Admissibility threshold on `‖ΔL‖_F`.
    pub threshold: f64,
    /// `C_{P,L} = 68(k+1)^{5/2}(‖L‖/‖P‖)(1+‖M‖+‖M‖²)`.
    pub c_pl: f64,
    /// Multiplier of `‖ΔL‖/‖L‖` in the bound on `‖ΔP‖/‖P‖` (equal to `c_pl`).
    pub bound_ratio_factor: f64,
    /// Simplified factor `(k+1)³√n`, meaningful only when `‖M‖ ≈ ‖P‖`.
    pub simplified_factor: f64,
}

/// Threshold and `C_{P,L}`.
pub fn theorem_bound<T: Scalar>(p: &MatrixPolynomial<T>, l: &BlockKroneckerPencil<T>) -> Result<TheoremBound> {
    let norm_p = p.frob_norm();
    if !(norm_p > 0.0) {
        return Err(Error::InvalidArgument("the bound needs a nonzero polynomial"));
    }
    let norm_m = l.m_block().frob_norm();
    let k1 = (l.k + 1) as f64;
    let c_pl = 68.0 * libm::pow(k1, 2.5) * (l.frob_norm() / norm_p) * (1.0 + norm_m + norm_m * norm_m);
    Ok(TheoremBound {
        threshold: theorem_threshold(l.k, norm_m),
        c_pl,
        bound_ratio_factor: c_pl,
        simplified_factor: k1 * k1 * k1 * libm::sqrt(l.n as f64),
    })
}

/// Output of [`congruence_zero_block`].
#[derive(Clone, Debug, PartialEq)]
pub struct Congruence<T: Scalar> {
    /// The congruence block `X`, `kn×(k+1)n`.
    pub x: DMatrix<T>,
    /// `[I 0; X I](L+ΔL)[I X^⋆; 0 I]` with its `(2,2)` block set to zero.
    pub ltilde: BlockKroneckerPencil<T>,
    /// `‖(2,2) block‖_F` before it was zeroed.
    pub residual22: f64,
    /// Fixed-point diagnostics (`None` when `k = 0`).
    pub fixed_point: Option<FixedPointState<T>>,
}

impl<T: Scalar> Congruence<T> {
    /// `ΔL̃₂₁ = L̃₂₁ - L_k⊗I_n`.
    pub fn dl21_tilde(&self) -> MatrixPolynomial<T> {
        let t = &self.ltilde;
        t.natural_block(1, 0).checked_sub(&build_lk(t.k, t.n)).expect("same shape")
    }
}

/// Finds `X` making the `(2,2)` block of the ⋆-congruent pencil vanish.
///
/// With `enforce_threshold` the perturbation must satisfy
/// `‖ΔL‖ < (π/16)²/(k²(1+‖M‖))`.
pub fn congruence_zero_block<T: Scalar>(
    l: &BlockKroneckerPencil<T>,
    pert: &StructuredPerturbation<T>,
    tol: f64,
    enforce_threshold: bool,
    fp: FixedPointOptions,
) -> Result<Congruence<T>> {
    let (k, n) = (l.k, l.n);
    if (pert.k, pert.n, pert.kind) != (k, n, l.kind) {
        return Err(Error::InvalidArgument("perturbation partition does not match the pencil"));
    }
    let dl = pert.to_pencil();
    let lp = l.as_polynomial().checked_add(&dl)?;
    if k == 0 {
        let ltilde = BlockKroneckerPencil::from_parts(lp.coeff(0), lp.coeff(1), 0, n, l.kind)?;
        return Ok(Congruence { x: DMatrix::zeros(0, n), ltilde, residual22: 0.0, fixed_point: None });
    }
    let norm_dl = dl.frob_norm();
    let m = l.m_block();
    if enforce_threshold {
        let bound = congruence_threshold(k, m.frob_norm());
        if !(norm_dl < bound) {
            return Err(Error::Precondition { what: "‖ΔL‖_F for the congruence step", value: norm_dl, bound });
        }
    }
    let state = quadratic_fixed_point(pert, &m.coeff(0), &m.coeff(1), fp)?;
    let (s1, s) = ((k + 1) * n, (2 * k + 1) * n);
    let mut j = DMatrix::<T>::identity(s, s);
    set_block(&mut j, s1, 0, &state.x);
    let mut c = [lp.coeff(0), lp.coeff(1)].map(|c| &j * c * j.adjoint());
    let mut r22 = 0.0f64;
    for m in c.iter_mut() {
        let mut b = m.view_mut((s1, s1), (k * n, k * n));
        r22 = libm::hypot(r22, b.norm());
        b.fill(T::zero());
    }
    if !(r22 <= tol) {
        return Err(Error::NumericalFailure { what: "congruence (2,2) block", residual: r22 });
    }
    let [l0, l1] = c;
    let ltilde = BlockKroneckerPencil::from_parts(l0, l1, k, n, l.kind)?;
    Ok(Congruence { x: state.x.clone(), ltilde, residual22: r22, fixed_point: Some(state) })
}

/// Output of [`reconstruct_perturbed_polynomial`].
#[derive(Clone, Debug, PartialEq)]
pub struct Reconstruction<T: Scalar> {
    /// `P + ΔP`, grade `2k+1`.
    pub poly: MatrixPolynomial<T>,
    /// Completed dual pair.
    pub dual: DualBasisPair<T>,
}

/// `sign·(M_A[N^T]^⋆)(M+ΔL₁₁)(N^T)` with `N^T = Λ_k⊗I_n + ΔR_k` the
/// min-norm completion for the `(2,1)` block of `ltilde`.
///
/// With `enforce_threshold` the `(2,1)` perturbation must be below
/// `π/(12(k+1)^{3/2})`.
pub fn reconstruct_perturbed_polynomial<T: Scalar>(
    ltilde: &BlockKroneckerPencil<T>,
    enforce_threshold: bool,
) -> Result<MatrixPolynomial<T>> {
    reconstruct_with_dual(ltilde, enforce_threshold).map(|r| r.poly)
}

/// [`reconstruct_perturbed_polynomial`] returning the dual pair as well.
pub fn reconstruct_with_dual<T: Scalar>(
    ltilde: &BlockKroneckerPencil<T>,
    enforce_threshold: bool,
) -> Result<Reconstruction<T>> {
    let (k, n) = (ltilde.k, ltilde.n);
    let kp = ltilde.natural_block(1, 0);
    let tol = 1e-12 * (1.0 + kp.frob_norm());
    let dual = if k == 0 {
        dual_basis_complete(&MatrixPolynomial::zeros(0, n, 1), 0, n, tol, false)?
    } else {
        dual_basis_complete(&kp, k, n, tol, enforce_threshold)?
    };
    let right = build_lambda::<T>(k, n).transpose().checked_add(&dual.delta_r)?;
    let left = right.mobius(&ltilde.kind.mobius()).star_adjoint();
    let poly = left.checked_mul(&ltilde.m_block())?.checked_mul(&right)?.scaled(T::from_real(f64::from(ltilde.sign)));
    Ok(Reconstruction { poly, dual })
}

/// Threshold handling of a certification run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdMode {
    /// Refuse perturbations above the a priori thresholds.
    #[default]
    Certified,
    /// Run whenever the numerics succeed; record which thresholds held.
    Empirical,
}

impl ThresholdMode {
    /// Lowercase name.
    pub fn name(self) -> &'static str {
        match self {
            ThresholdMode::Certified => "certified",
            ThresholdMode::Empirical => "empirical",
        }
    }
}

impl core::str::FromStr for ThresholdMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "certified" => Ok(ThresholdMode::Certified),
            "empirical" => Ok(ThresholdMode::Empirical),
            _ => Err(Error::InvalidArgument("mode must be certified or empirical")),
        }
    }
}

/// Options of a certification trial.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CertifyOptions {
    /// Threshold mode.
    pub mode: ThresholdMode,
    /// Compare pencil and polynomial eigenvalues.
    pub check_eigs: bool,
    /// Fixed-point options.
    pub fixed_point: FixedPointOptions,
    /// Blocks to perturb.
    pub mask: BlockMask,
    /// Relative tolerance of the `ΔP` structure check (times `‖P‖`).
    pub structure_tol: f64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            mode: ThresholdMode::Certified,
            check_eigs: false,
            fixed_point: FixedPointOptions::default(),
            mask: BlockMask::ALL,
            structure_tol: 1e-11,
        }
    }
}

/// One CSV/JSON row; field order is the file column order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    /// Campaign seed.
    pub seed: u64,
    /// Structure.
    pub kind: StructureKind,
    /// Grade.
    pub g: usize,
    /// Block size.
    pub n: usize,
    /// `(g-1)/2`.
    pub k: usize,
    /// Placement of the `M` block.
    pub placement: Placement,
    /// `‖P‖_F`.
    #[serde(rename = "norm_P")]
    pub norm_p: f64,
    /// `‖L‖_F`.
    #[serde(rename = "norm_L")]
    pub norm_l: f64,
    /// `‖M‖_F`.
    #[serde(rename = "norm_M")]
    pub norm_m: f64,
    /// `‖ΔL‖_F`.
    #[serde(rename = "norm_dL")]
    pub norm_dl: f64,
    /// `‖ΔL‖_F` below the a priori threshold.
    pub threshold_ok: bool,
    /// `‖X‖_F`.
    #[serde(rename = "norm_X")]
    pub norm_x: Option<f64>,
    /// `‖ΔR_k‖_F`.
    #[serde(rename = "norm_dR")]
    pub norm_dr: Option<f64>,
    /// `‖ΔP‖_F`.
    #[serde(rename = "norm_dP")]
    pub norm_dp: Option<f64>,
    /// `‖ΔP‖/‖P‖`.
    pub ratio: Option<f64>,
    /// `C_{P,L}`.
    #[serde(rename = "C_PL")]
    pub c_pl: f64,
    /// `C_{P,L}‖ΔL‖/‖L‖`.
    pub bound: f64,
    /// `ratio ≤ bound`.
    pub ratio_le_bound: Option<bool>,
    /// `ΔP` is structured.
    pub structure_ok: Option<bool>,
    /// Largest chordal distance between pencil and polynomial eigenvalues.
    pub eig_chordal_max: Option<f64>,
    /// Fixed-point iterations.
    pub iters: usize,
    /// Wall-clock time in milliseconds (0 unless timing is requested).
    pub wall_ms: u64,
}

/// Diagnostics beyond the file columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct TrialDetails {
    /// Trial index within the campaign.
    pub trial: u64,
    /// Threshold mode.
    pub mode: Option<ThresholdMode>,
    /// `(π/16)²/((k+1)^{5/2}(1+‖M‖))`.
    pub theorem_threshold: f64,
    /// `(π/16)²/(k²(1+‖M‖))`.
    pub congruence_threshold: f64,
    /// `π/(12(k+1)^{3/2})`.
    pub dual_threshold: f64,
    /// `‖ΔL̃₂₁‖_F` below `dual_threshold`.
    pub dual_threshold_ok: Option<bool>,
    /// `θ`.
    pub theta: Option<f64>,
    /// `δ`.
    pub delta: Option<f64>,
    /// `θω/δ²`.
    pub kappa1: Option<f64>,
    /// Final fixed-point residual.
    pub fixed_point_residual: Option<f64>,
    /// Largest iterate norm.
    pub max_iterate_norm: Option<f64>,
    /// `ρ₀(1+κ)`.
    pub iterate_bound: Option<f64>,
    /// `3k‖ΔL‖/(1-3k‖ΔL‖)`.
    pub x_bound: f64,
    /// `‖(2,2)‖` of the congruent pencil before zeroing.
    pub residual22: Option<f64>,
    /// `‖ΔL̃₂₁‖_F`.
    pub norm_dl21_tilde: Option<f64>,
    /// Growth bound on `‖ΔL̃₂₁‖_F`.
    pub dl21_tilde_bound: f64,
    /// `6√2(k+1)/π·‖ΔL̃₂₁‖`.
    pub dr_bound: Option<f64>,
    /// `‖ΔL₁₁‖_F`.
    pub norm_dl11: f64,
    /// `√(k+1)(5‖ΔL₁₁‖ + 4‖M‖‖ΔR‖)`.
    pub dp_bound: Option<f64>,
    /// `‖M_A[ΔP] - ΔP^⋆‖_F`.
    pub dp_structure_residual: Option<f64>,
    /// `‖K N^T‖_F` of the completed dual pair.
    pub duality_residual: Option<f64>,
    /// `(k+1)³√n·‖ΔL‖/‖L‖`.
    pub simplified_bound: f64,
    /// Error that stopped the trial.
    pub error: Option<String>,
}

/// Full record of one trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackwardErrorReport {
    /// File columns.
    pub row: ReportRow,
    /// Extra diagnostics.
    pub details: TrialDetails,
}

impl BackwardErrorReport {
    /// True when the trial ran inside the certified regime and the bound or the structure check failed.
    pub fn certified_violation(&self) -> bool {
        self.details.mode == Some(ThresholdMode::Certified)
            && self.row.threshold_ok
            && (self.row.ratio_le_bound != Some(true) || self.row.structure_ok != Some(true))
    }
}

/// Runs the pipeline for one perturbation of `L` (the pencil of `P`).
///
/// Errors are recorded in the report rather than returned.
pub fn certify_trial<T: Scalar>(
    p: &MatrixPolynomial<T>,
    l: &BlockKroneckerPencil<T>,
    pert: &StructuredPerturbation<T>,
    placement: Placement,
    opts: &CertifyOptions,
) -> BackwardErrorReport {
    let (k, n) = (l.k, l.n);
    let norm_p = p.frob_norm();
    let norm_l = l.frob_norm();
    let norm_m = l.m_block().frob_norm();
    let norm_dl = pert.frob_norm();
    let tb = theorem_bound(p, l).unwrap_or(TheoremBound {
        threshold: theorem_threshold(k, norm_m),
        c_pl: f64::INFINITY,
        bound_ratio_factor: f64::INFINITY,
        simplified_factor: f64::NAN,
    });
    let threshold_ok = norm_dl < tb.threshold;
    let bound = if norm_dl == 0.0 { 0.0 } else { tb.c_pl * norm_dl / norm_l };
    let mut row = ReportRow {
        seed: 0,
        kind: l.kind,
        g: 2 * k + 1,
        n,
        k,
        placement,
        norm_p,
        norm_l,
        norm_m,
        norm_dl,
        threshold_ok,
        norm_x: None,
        norm_dr: None,
        norm_dp: None,
        ratio: None,
        c_pl: tb.c_pl,
        bound,
        ratio_le_bound: None,
        structure_ok: None,
        eig_chordal_max: None,
        iters: 0,
        wall_ms: 0,
    };
    let mut details = TrialDetails {
        mode: Some(opts.mode),
        theorem_threshold: tb.threshold,
        congruence_threshold: congruence_threshold(k, norm_m),
        dual_threshold: dual_completion_threshold(k),
        x_bound: x_norm_bound(k, norm_dl),
        dl21_tilde_bound: dl21_tilde_bound(k, norm_dl, norm_m),
        norm_dl11: pert.dl11().frob_norm(),
        simplified_bound: tb.simplified_factor * norm_dl / norm_l,
        ..TrialDetails::default()
    };
    if let Err(e) = run_pipeline(p, l, pert, opts, &mut row, &mut details) {
        details.error = Some(e.to_string());
    }
    BackwardErrorReport { row, details }
}

fn run_pipeline<T: Scalar>(
    p: &MatrixPolynomial<T>,
    l: &BlockKroneckerPencil<T>,
    pert: &StructuredPerturbation<T>,
    opts: &CertifyOptions,
    row: &mut ReportRow,
    details: &mut TrialDetails,
) -> Result<()> {
    let certified = opts.mode == ThresholdMode::Certified;
    if certified && !row.threshold_ok {
        return Err(Error::Precondition { what: "‖ΔL‖_F", value: row.norm_dl, bound: details.theorem_threshold });
    }
    let tol22 = 1e-10 * row.norm_dl.max(f64::MIN_POSITIVE);
    let cong = congruence_zero_block(l, pert, tol22, certified, opts.fixed_point)?;
    row.norm_x = Some(cong.x.norm());
    details.residual22 = Some(cong.residual22);
    if let Some(fp) = &cong.fixed_point {
        row.iters = fp.iterations;
        details.theta = Some(fp.theta);
        details.delta = Some(fp.delta);
        details.kappa1 = Some(fp.kappa1);
        details.fixed_point_residual = Some(fp.residual());
        details.max_iterate_norm = Some(fp.iterate_norms.iter().copied().fold(0.0, f64::max));
        details.iterate_bound = Some(fp.iterate_bound());
    }
    let dl21t = cong.dl21_tilde().frob_norm();
    details.norm_dl21_tilde = Some(dl21t);
    details.dual_threshold_ok = Some(dl21t < details.dual_threshold);
    details.dr_bound = Some(dual_completion_factor(l.k) * dl21t);
    let rec = reconstruct_with_dual(&cong.ltilde, certified)?;
    let norm_dr = rec.dual.delta_r.frob_norm();
    row.norm_dr = Some(norm_dr);
    details.duality_residual = Some(rec.dual.residual);
    details.dp_bound = Some(dp_norm_bound(l.k, details.norm_dl11, row.norm_m, norm_dr));
    let dp = rec.poly.checked_sub(&p.with_grade(rec.poly.grade())?)?;
    let norm_dp = dp.frob_norm();
    row.norm_dp = Some(norm_dp);
    let ratio = norm_dp / row.norm_p;
    row.ratio = Some(ratio);
    row.ratio_le_bound = Some(ratio <= row.bound);
    let sres = structure_residual(&dp, &l.kind.mobius())?;
    details.dp_structure_residual = Some(sres);
    row.structure_ok = Some(sres <= opts.structure_tol * row.norm_p);
    if opts.check_eigs {
        let lp = l.as_polynomial().checked_add(&pert.to_pencil())?;
        let a = pencil_eigs(&lp.coeff(0), &lp.coeff(1))?;
        // Singular polynomials (e.g. odd-size skew-symmetric) have no eigenvalue
        // list to compare; the column stays empty.
        match reference_polyeigs(&rec.poly) {
            Ok(b) => row.eig_chordal_max = Some(compare_spectra(&a, &b)?.max_distance),
            Err(Error::SingularPolynomial) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(())
}

/// Pipeline over `norms × trials`, sequential and deterministic.
///
/// Trial `t` of norm `j` uses the stream `seeded_rng(seed, j·trials + t)`.
#[allow(clippy::too_many_arguments)]
pub fn run_certification<T: Scalar>(
    p: &MatrixPolynomial<T>,
    kind: StructureKind,
    placement: Placement,
    norms: &[f64],
    trials: usize,
    seed: u64,
    opts: &CertifyOptions,
) -> Result<Vec<BackwardErrorReport>> {
    let l = crate::linearize::linearize(p, kind, placement)?;
    let mut out = Vec::with_capacity(norms.len() * trials);
    for (j, &nrm) in norms.iter().enumerate() {
        for t in 0..trials {
            let idx = (j * trials + t) as u64;
            out.push(run_trial(p, &l, placement, nrm, seed, idx, opts));
        }
    }
    Ok(out)
}

/// One trial of a campaign: draws the perturbation from `seeded_rng(seed, trial)`.
pub fn run_trial<T: Scalar>(
    p: &MatrixPolynomial<T>,
    l: &BlockKroneckerPencil<T>,
    placement: Placement,
    norm: f64,
    seed: u64,
    trial: u64,
    opts: &CertifyOptions,
) -> BackwardErrorReport {
    let mut rng = seeded_rng(seed, trial);
    let mut rep = match random_structured_perturbation_with(l.k, l.n, l.kind, norm, opts.mask, &mut rng) {
        Ok(pert) => certify_trial(p, l, &pert, placement, opts),
        Err(e) => {
            let zero = StructuredPerturbation::zero(l.k, l.n, l.kind);
            let mut r = certify_trial(p, l, &zero, placement, &CertifyOptions { check_eigs: false, ..*opts });
            r.details.error = Some(e.to_string());
            r.row.norm_dl = norm;
            r
        }
    };
    rep.row.seed = seed;
    rep.details.trial = trial;
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linearize::{linearize, recover};
    use crate::polycore::{is_structured, random_structured};

    #[test]
    fn perturbation_contract() {
        for kind in StructureKind::ALL {
            let p = random_structured_perturbation::<f64>(2, 2, kind, 1e-3, 4).unwrap();
            let dl = p.to_pencil();
            assert!(is_structured(&dl, kind, 1e-13).unwrap());
            assert!((dl.frob_norm() / 1e-3 - 1.0).abs() < 1e-14);
            assert!(p.dl22().frob_norm() > 0.0);
            assert_eq!(StructuredPerturbation::split(&dl, 2, 2, kind).unwrap(), p);
            assert_eq!(StructuredPerturbation::split(&dl, 2, 2, kind).unwrap().to_pencil(), dl);
        }
        let z = random_structured_perturbation::<f64>(1, 2, StructureKind::Even, 0.0, 1).unwrap();
        assert_eq!(z.frob_norm(), 0.0);
        assert!(random_structured_perturbation::<f64>(1, 2, StructureKind::Even, -1.0, 1).is_err());
    }

    #[test]
    fn masked_perturbation() {
        let mask = BlockMask { b11: false, b21: false, b22: true };
        let p = random_structured_perturbation_with::<f64, _>(
            2,
            2,
            StructureKind::Palindromic,
            0.5,
            mask,
            &mut seeded_rng(1, 0),
        )
        .unwrap();
        assert_eq!(p.dl11().frob_norm() + p.dl21().frob_norm(), 0.0);
        assert!((p.dl22().frob_norm() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_perturbation_is_identity() {
        for kind in StructureKind::ALL {
            let p = random_structured::<f64>(2, 5, kind, 1.0, 3).unwrap();
            let l = linearize(&p, kind, Placement::Tridiagonal).unwrap();
            let z = StructuredPerturbation::zero(2, 2, kind);
            let c = congruence_zero_block(&l, &z, 0.0, true, FixedPointOptions::default()).unwrap();
            assert_eq!(c.x.norm(), 0.0);
            assert_eq!(c.ltilde, l);
            let q = reconstruct_perturbed_polynomial(&c.ltilde, true).unwrap();
            assert_eq!(q, recover(&l));
            let rep = certify_trial(&p, &l, &z, Placement::Tridiagonal, &CertifyOptions::default());
            assert_eq!(rep.row.ratio, Some(0.0));
            assert_eq!(rep.row.ratio_le_bound, Some(true));
        }
    }

    #[test]
    fn pipeline_small_perturbation() {
        for kind in StructureKind::ALL {
            let p = random_structured::<f64>(2, 5, kind, 1.0, 8).unwrap();
            let l = linearize(&p, kind, Placement::Tridiagonal).unwrap();
            let pert = random_structured_perturbation::<f64>(2, 2, kind, 1e-8, 9).unwrap();
            let c = congruence_zero_block(&l, &pert, 1e-14, true, FixedPointOptions::default()).unwrap();
            assert!(c.residual22 <= 1e-14);
            assert!(c.x.norm() <= x_norm_bound(2, 1e-8));
            assert!(is_structured(&c.ltilde.as_polynomial(), kind, 1e-13).unwrap());
            let mn = l.m_block().frob_norm();
            assert!(c.dl21_tilde().frob_norm() <= dl21_tilde_bound(2, 1e-8, mn));
            let rep = certify_trial(
                &p,
                &l,
                &pert,
                Placement::Tridiagonal,
                &CertifyOptions { check_eigs: true, ..Default::default() },
            );
            assert_eq!(rep.details.error, None, "{kind}");
            assert_eq!(rep.row.ratio_le_bound, Some(true));
            assert_eq!(rep.row.structure_ok, Some(true));
            assert!(rep.row.norm_dp.unwrap() <= rep.details.dp_bound.unwrap());
            assert!(rep.row.eig_chordal_max.unwrap() < 1e-6, "{kind} {:?}", rep.row.eig_chordal_max);
            assert!(!rep.certified_violation());
        }
    }

    #[test]
    fn certified_mode_refuses_large_perturbations() {
        let kind = StructureKind::Symmetric;
        let p = random_structured::<f64>(2, 5, kind, 1.0, 8).unwrap();
        let reps = run_certification(&p, kind, Placement::Stacked, &[1e-1], 2, 5, &CertifyOptions::default()).unwrap();
        for r in &reps {
            assert!(!r.row.threshold_ok);
            assert!(r.details.error.is_some());
            assert!(!r.certified_violation());
        }
        let emp = CertifyOptions { mode: ThresholdMode::Empirical, ..Default::default() };
        let reps = run_certification(&p, kind, Placement::Stacked, &[5e-3], 2, 5, &emp).unwrap();
        for r in &reps {
            assert!(!r.row.threshold_ok);
            assert_eq!(r.details.error, None, "{:?}", r.details);
            assert_eq!(r.row.structure_ok, Some(true));
        }
    }

    #[test]
    fn campaigns_are_deterministic() {
        let kind = StructureKind::Odd;
        let p = random_structured::<f64>(2, 3, kind, 1.0, 2).unwrap();
        let o = CertifyOptions::default();
        let a = run_certification(&p, kind, Placement::Tridiagonal, &[1e-8, 1e-6], 3, 77, &o).unwrap();
        let b = run_certification(&p, kind, Placement::Tridiagonal, &[1e-8, 1e-6], 3, 77, &o).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 6);
        assert!(a.iter().all(|r| r.row.seed == 77));
    }
}
