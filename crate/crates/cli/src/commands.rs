//! Subcommand implementations.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use strukt_core::backward::{
    random_structured_perturbation_with, run_trial, BackwardErrorReport, BlockMask, CertifyOptions, ReportRow,
};
use strukt_core::linearize::{linearize_with_sigma, recover, BlockKroneckerPencil, Placement};
use strukt_core::polycore::{random_structured_with, structure_residual, MatrixPolynomial, StructureKind};
use strukt_core::rng::seeded_rng;
use strukt_core::spectra::{pencil_eigs, reference_polyeigs, symmetry_check, SpectrumReport};
use strukt_core::sylvester::{full_and_reduced_singular_values, sigma_min_formula, FixedPointOptions};
use strukt_core::Scalar;

use crate::config::ExperimentConfig;
use crate::io::{self, AnyPencil, AnyPoly};
use crate::{CliError, Command, Format, GlobalOpts};

/// Environment variable capping the worker count of `certify`.
pub const THREADS_ENV: &str = "STRUKT_NUM_THREADS";

/// Relative-error limit of `sigma-min` unless `--tol` is given.
pub const SIGMA_MIN_TOL: f64 = 1e-10;

/// Chordal distance above which a trial's eigenvalue check counts as failed.
pub const EIG_TOL: f64 = 1e-6;

fn core_input(e: strukt_core::Error) -> CliError {
    CliError::Input(e.to_string())
}

fn core_failure(e: strukt_core::Error) -> CliError {
    CliError::Failure(e.to_string())
}

struct Ctx<'a> {
    global: &'a GlobalOpts,
    /// Data goes to stdout, so notes go to stderr.
    data_on_stdout: bool,
}

impl Ctx<'_> {
    fn note(&self, msg: &str) {
        if self.data_on_stdout {
            eprintln!("{msg}");
        } else {
            println!("{msg}");
        }
    }

    fn require_output(&self, cmd: &str) -> Result<&Path, CliError> {
        self.global
            .output
            .as_deref()
            .ok_or_else(|| CliError::Input(format!("{cmd} writes a pencil and its sidecar; --output is required")))
    }
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Input(format!("{}: {e}", p.display()))),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::Failure(e.to_string())),
    }
}

/// Rows as CSV (header from the field names) or a JSON array.
pub fn render_rows<R: Serialize>(rows: &[R], format: Format) -> Result<String, CliError> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in rows {
                w.serialize(r).map_err(|e| CliError::Failure(e.to_string()))?;
            }
            let bytes = w.into_inner().map_err(|e| CliError::Failure(e.to_string()))?;
            String::from_utf8(bytes).map_err(|e| CliError::Failure(e.to_string()))
        }
        Format::Json => {
            let mut s = serde_json::to_string_pretty(rows).map_err(|e| CliError::Failure(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
    }
}

/// Runs one parsed command line.
pub fn dispatch(command: &Command, global: &GlobalOpts) -> Result<(), CliError> {
    let data_on_stdout = global.output.is_none();
    let ctx = Ctx { global, data_on_stdout };
    match command {
        Command::Linearize { input, kind, placement, sigma } => linearize_cmd(&ctx, input, *kind, *placement, *sigma),
        Command::Recover { pencil } => recover_cmd(&ctx, pencil),
        Command::Perturb { pencil, norm, blocks } => perturb_cmd(&ctx, pencil, *norm, blocks),
        Command::Certify(args) => certify_cmd(global, args),
        Command::SigmaMin { kmax, kinds, n } => sigma_min_cmd(&ctx, *kmax, kinds, *n),
        Command::Eigs { input, kind } => eigs_cmd(&ctx, input, *kind),
    }
}

fn linearize_cmd(
    ctx: &Ctx,
    input: &Path,
    kind: StructureKind,
    placement: Placement,
    sigma: Option<i8>,
) -> Result<(), CliError> {
    let out = ctx.require_output("linearize")?;
    match io::read_poly(input)? {
        AnyPoly::Real(p) => linearize_typed(ctx, &p, kind, placement, sigma, out),
        AnyPoly::Complex(p) => linearize_typed(ctx, &p, kind, placement, sigma, out),
    }
}

fn linearize_typed<T: Scalar>(
    ctx: &Ctx,
    p: &MatrixPolynomial<T>,
    kind: StructureKind,
    placement: Placement,
    sigma: Option<i8>,
    out: &Path,
) -> Result<(), CliError> {
    if p.grade().is_multiple_of(2) {
        return Err(CliError::Input(format!("odd grade required (got {})", p.grade())));
    }
    let l = linearize_with_sigma(p, kind, placement, sigma).map_err(core_input)?;
    io::write_pencil(out, &l)?;
    let res_p = structure_residual(p, &kind.mobius()).map_err(core_failure)?;
    let res_l = structure_residual(&l.as_polynomial(), &kind.mobius()).map_err(core_failure)?;
    ctx.note(&format!("{kind} g={} n={} k={} placement={placement} sign={}", p.grade(), l.n, l.k, l.sign));
    ctx.note(&format!(
        "norm_P={:e} norm_M={:e} norm_L={:e} structure_residual_P={res_p:e} structure_residual_L={res_l:e}",
        p.frob_norm(),
        l.m_block().frob_norm(),
        l.frob_norm()
    ));
    Ok(())
}

fn recover_cmd(ctx: &Ctx, pencil: &Path) -> Result<(), CliError> {
    fn go<T: Scalar>(ctx: &Ctx, l: &BlockKroneckerPencil<T>) -> Result<(), CliError> {
        let p = recover(l);
        write_out(ctx.global.output.as_deref(), &io::poly_to_string(&p)?)?;
        ctx.note(&format!("{} k={} n={}: sign normalization applied: {:+}", l.kind, l.k, l.n, l.sign));
        Ok(())
    }
    match io::read_pencil(pencil)? {
        AnyPencil::Real(l) => go(ctx, &l),
        AnyPencil::Complex(l) => go(ctx, &l),
    }
}

/// Parses a block list such as `11,21,22`.
pub fn parse_blocks(s: &str) -> Result<BlockMask, String> {
    let mut mask = BlockMask { b11: false, b21: false, b22: false };
    for part in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
        match part {
            "11" => mask.b11 = true,
            "21" | "12" => mask.b21 = true,
            "22" => mask.b22 = true,
            _ => return Err(format!("unknown block {part:?}; use 11, 21, 22")),
        }
    }
    if mask == (BlockMask { b11: false, b21: false, b22: false }) {
        return Err("at least one block is required".into());
    }
    Ok(mask)
}

fn perturb_cmd(ctx: &Ctx, pencil: &Path, norm: f64, blocks: &BlockMask) -> Result<(), CliError> {
    fn go<T: Scalar>(ctx: &Ctx, l: &BlockKroneckerPencil<T>, norm: f64, mask: BlockMask) -> Result<(), CliError> {
        let out = ctx.require_output("perturb")?;
        let seed = ctx.global.seed.unwrap_or(0);
        let pert = random_structured_perturbation_with::<T, _>(l.k, l.n, l.kind, norm, mask, &mut seeded_rng(seed, 0))
            .map_err(core_input)?;
        let sum = l.as_polynomial().checked_add(&pert.to_pencil()).map_err(core_failure)?;
        let lp =
            BlockKroneckerPencil::from_parts(sum.coeff(0), sum.coeff(1), l.k, l.n, l.kind).map_err(core_failure)?;
        io::write_pencil(out, &lp)?;
        ctx.note(&format!(
            "seed={seed} norm_dL={:e} norm_L={:e} relative={:e}",
            pert.frob_norm(),
            l.frob_norm(),
            pert.frob_norm() / l.frob_norm()
        ));
        Ok(())
    }
    if !(norm.is_finite() && norm >= 0.0) {
        return Err(CliError::Input("--norm must be finite and nonnegative".into()));
    }
    match io::read_pencil(pencil)? {
        AnyPencil::Real(l) => go(ctx, &l, norm, *blocks),
        AnyPencil::Complex(l) => go(ctx, &l, norm, *blocks),
    }
}

/// Worker pool honoring [`THREADS_ENV`].
pub fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(t) if t >= 1 => t,
            _ => return Err(CliError::Input(format!("{THREADS_ENV} must be a positive integer, got {s:?}"))),
        },
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| CliError::Failure(e.to_string()))
}

/// The campaign's `P`: from the config's polynomial file or a seeded random draw.
pub fn campaign_polynomial(cfg: &mut ExperimentConfig) -> Result<MatrixPolynomial<f64>, CliError> {
    match &cfg.polynomial {
        Some(path) => match io::read_poly(path)? {
            AnyPoly::Real(p) => {
                if !p.is_square() {
                    return Err(CliError::Input("certify needs a square polynomial".into()));
                }
                cfg.g = p.grade();
                cfg.n = p.rows();
                cfg.validate()?;
                Ok(p)
            }
            AnyPoly::Complex(_) => Err(CliError::Input("certify supports real polynomials only".into())),
        },
        // The last stream of the seed is reserved for P; trials use streams 0, 1, ...
        None => random_structured_with(cfg.n, cfg.g, cfg.kind, cfg.p_norm, &mut seeded_rng(cfg.seed, u64::MAX))
            .map_err(core_input),
    }
}

/// Runs every trial of a campaign; the result is in trial order for any thread count.
pub fn run_campaign(
    cfg: &ExperimentConfig,
    p: &MatrixPolynomial<f64>,
    opts: &CertifyOptions,
    timing: bool,
) -> Result<Vec<BackwardErrorReport>, CliError> {
    let l = linearize_with_sigma(p, cfg.kind, cfg.placement, cfg.sigma).map_err(core_input)?;
    let total = cfg.norms.len() * cfg.trials;
    let pool = thread_pool()?;
    Ok(pool.install(|| {
        (0..total)
            .into_par_iter()
            .map(|idx| {
                let start = Instant::now();
                let norm = cfg.norms[idx / cfg.trials];
                let mut r = run_trial(p, &l, cfg.placement, norm, cfg.seed, idx as u64, opts);
                if timing {
                    r.row.wall_ms = start.elapsed().as_millis() as u64;
                }
                r
            })
            .collect()
    }))
}

/// Pass counts of a campaign.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Summary {
    /// Trials run.
    pub total: usize,
    /// Trials below the a priori threshold.
    pub threshold_ok: usize,
    /// Trials with `ratio ≤ bound`.
    pub bound_ok: usize,
    /// Trials with a structured `ΔP`.
    pub structure_ok: usize,
    /// Trials with an eigenvalue comparison.
    pub eig_checked: usize,
    /// Trials whose eigenvalue comparison is within [`EIG_TOL`].
    pub eig_ok: usize,
    /// Trials stopped by an error.
    pub errors: usize,
    /// Certified trials that broke the bound or the structure check.
    pub violations: usize,
}

impl Summary {
    /// Counts over reports.
    pub fn of(reports: &[BackwardErrorReport]) -> Self {
        let mut s = Summary { total: reports.len(), ..Summary::default() };
        for r in reports {
            s.threshold_ok += usize::from(r.row.threshold_ok);
            s.bound_ok += usize::from(r.row.ratio_le_bound == Some(true));
            s.structure_ok += usize::from(r.row.structure_ok == Some(true));
            if let Some(d) = r.row.eig_chordal_max {
                s.eig_checked += 1;
                s.eig_ok += usize::from(d <= EIG_TOL);
            }
            s.errors += usize::from(r.details.error.is_some());
            s.violations += usize::from(r.certified_violation());
        }
        s
    }
}

fn certify_cmd(global: &GlobalOpts, args: &crate::CertifyArgs) -> Result<(), CliError> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(k) = args.kind {
        cfg.kind = k;
    }
    if let Some(g) = args.grade {
        cfg.g = g;
    }
    if let Some(n) = args.n {
        cfg.n = n;
    }
    if let Some(pl) = args.placement {
        cfg.placement = pl;
    }
    if let Some(norms) = &args.norms {
        cfg.norms = norms.clone();
    }
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    if let Some(s) = global.seed {
        cfg.seed = s;
    }
    if let Some(m) = global.mode {
        cfg.mode = m;
    }
    if args.no_eigs {
        cfg.check_eigs = false;
    }
    cfg.validate()?;
    let p = campaign_polynomial(&mut cfg)?;
    let opts = CertifyOptions {
        mode: cfg.mode,
        check_eigs: cfg.check_eigs,
        fixed_point: FixedPointOptions { tol: global.tol, ..FixedPointOptions::default() },
        ..CertifyOptions::default()
    };
    let reports = run_campaign(&cfg, &p, &opts, args.timing)?;
    let rows: Vec<ReportRow> = reports.iter().map(|r| r.row.clone()).collect();

    let mut targets: Vec<(Option<PathBuf>, Format)> = Vec::new();
    if let Some(out) = &global.output {
        targets.push((Some(out.clone()), global.format.unwrap_or(Format::Csv)));
    } else {
        if let Some(c) = &cfg.output.csv {
            targets.push((Some(c.clone()), Format::Csv));
        }
        if let Some(j) = &cfg.output.json {
            targets.push((Some(j.clone()), Format::Json));
        }
        if targets.is_empty() {
            targets.push((None, global.format.unwrap_or(Format::Csv)));
        }
    }
    let data_on_stdout = targets.iter().any(|(p, _)| p.is_none());
    for (path, format) in &targets {
        write_out(path.as_deref(), &render_rows(&rows, *format)?)?;
    }

    let s = Summary::of(&reports);
    let eig = if cfg.check_eigs { format!(", eig<={EIG_TOL:e} {}/{}", s.eig_ok, s.eig_checked) } else { String::new() };
    let line = format!(
        "certify {} g={} n={} {} {} seed={}: {} trials, threshold_ok {}/{}, ratio<=bound {}/{}, structure_ok {}/{}{eig}, errors {}, certified violations {}",
        cfg.kind,
        cfg.g,
        cfg.n,
        cfg.placement,
        cfg.mode.name(),
        cfg.seed,
        s.total,
        s.threshold_ok,
        s.total,
        s.bound_ok,
        s.total,
        s.structure_ok,
        s.total,
        s.errors,
        s.violations
    );
    Ctx { global, data_on_stdout }.note(&line);
    if s.violations > 0 {
        return Err(CliError::Certification(format!("{} certified trial(s) violated the bound", s.violations)));
    }
    Ok(())
}

/// One row of the `sigma-min` table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SigmaMinRow {
    /// Structure.
    pub kind: StructureKind,
    /// Number of `L_k` block rows.
    pub k: usize,
    /// Block size.
    pub n: usize,
    /// `2 sin(π/(4k))`.
    pub formula: f64,
    /// Smallest singular value of the assembled operator.
    pub svd: f64,
    /// `|svd - formula|/formula`.
    pub rel_err: f64,
    /// Largest gap between the full and the reduced singular values.
    pub reduced_gap: f64,
    /// `rel_err` within tolerance.
    pub pass: bool,
}

/// The `sigma-min` table.
pub fn sigma_min_rows(kmax: usize, kinds: &[StructureKind], n: usize, tol: f64) -> Result<Vec<SigmaMinRow>, CliError> {
    if kmax == 0 || n == 0 {
        return Err(CliError::Input("kmax and n must be at least 1".into()));
    }
    let mut rows = Vec::new();
    for &kind in kinds {
        for k in 1..=kmax {
            let formula = sigma_min_formula(k).map_err(core_input)?;
            let (full, red) = full_and_reduced_singular_values(k, n, kind);
            let svd = full.last().copied().unwrap_or(f64::NAN);
            let rel_err = (svd - formula).abs() / formula;
            let reduced_gap = if full.len() == red.len() {
                full.iter().zip(&red).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
            } else {
                f64::INFINITY
            };
            rows.push(SigmaMinRow { kind, k, n, formula, svd, rel_err, reduced_gap, pass: rel_err <= tol });
        }
    }
    Ok(rows)
}

fn sigma_min_cmd(ctx: &Ctx, kmax: usize, kinds: &[StructureKind], n: usize) -> Result<(), CliError> {
    let kinds: Vec<StructureKind> = if kinds.is_empty() { StructureKind::ALL.to_vec() } else { kinds.to_vec() };
    let tol = ctx.global.tol.unwrap_or(SIGMA_MIN_TOL);
    let rows = sigma_min_rows(kmax, &kinds, n, tol)?;
    write_out(ctx.global.output.as_deref(), &render_rows(&rows, ctx.global.format.unwrap_or(Format::Csv))?)?;
    let failed = rows.iter().filter(|r| !r.pass).count();
    let worst = rows.iter().map(|r| r.rel_err).fold(0.0, f64::max);
    ctx.note(&format!("sigma-min: {} rows, max rel err {worst:e}, {failed} above {tol:e}", rows.len()));
    if failed > 0 {
        return Err(CliError::Failure(format!("{failed} row(s) exceed the tolerance")));
    }
    Ok(())
}

/// One eigenvalue as written by `eigs`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EigRow {
    /// Position in the sorted list.
    pub index: usize,
    /// `Re α`.
    pub alpha_re: f64,
    /// `Im α`.
    pub alpha_im: f64,
    /// `Re β`.
    pub beta_re: f64,
    /// `Im β`.
    pub beta_im: f64,
    /// `Re λ`, empty for an infinite eigenvalue.
    pub lambda_re: Option<f64>,
    /// `Im λ`, empty for an infinite eigenvalue.
    pub lambda_im: Option<f64>,
    /// `β ≈ 0`.
    pub infinite: bool,
}

/// Rows of a spectrum.
pub fn eig_rows(spec: &SpectrumReport) -> Vec<EigRow> {
    spec.eigenvalues
        .iter()
        .enumerate()
        .map(|(index, e)| {
            let v = e.value();
            EigRow {
                index,
                alpha_re: e.alpha.re,
                alpha_im: e.alpha.im,
                beta_re: e.beta.re,
                beta_im: e.beta.im,
                lambda_re: v.map(|z| z.re),
                lambda_im: v.map(|z| z.im),
                infinite: e.is_infinite(),
            }
        })
        .collect()
}

fn spectrum_of<T: Scalar>(p: &MatrixPolynomial<T>) -> Result<SpectrumReport, CliError> {
    if !p.is_square() {
        return Err(CliError::Input(format!("square input required (got {}x{})", p.rows(), p.cols())));
    }
    if p.grade() <= 1 {
        let p = p.with_grade(1).map_err(core_input)?;
        pencil_eigs(&p.coeff(0), &p.coeff(1)).map_err(core_failure)
    } else {
        reference_polyeigs(p).map_err(|e| match e {
            strukt_core::Error::SingularPolynomial => core_input(e),
            _ => core_failure(e),
        })
    }
}

fn eigs_cmd(ctx: &Ctx, input: &Path, kind: Option<StructureKind>) -> Result<(), CliError> {
    let side = io::sidecar_path(input);
    let (spec, kind) = if side.exists() {
        match io::read_pencil(input)? {
            AnyPencil::Real(l) => (spectrum_of(&l.as_polynomial())?, kind.or(Some(l.kind))),
            AnyPencil::Complex(l) => (spectrum_of(&l.as_polynomial())?, kind.or(Some(l.kind))),
        }
    } else {
        match io::read_poly(input)? {
            AnyPoly::Real(p) => (spectrum_of(&p)?, kind),
            AnyPoly::Complex(p) => (spectrum_of(&p)?, kind),
        }
    };
    write_out(ctx.global.output.as_deref(), &render_rows(&eig_rows(&spec), ctx.global.format.unwrap_or(Format::Csv))?)?;
    let mut line = format!("eigs: {} eigenvalues, {} infinite", spec.len(), spec.infinite_count());
    if let Some(k) = kind {
        line.push_str(&format!(", {k} symmetry mismatch {:e}", symmetry_check(&spec, k)));
    }
    ctx.note(&line);
    Ok(())
}
