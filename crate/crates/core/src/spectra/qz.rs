//! Complex QZ iteration for eigenvalues of a square pencil `A - λB`.
//!
//! Householder QR of `B`, Givens reduction to Hessenberg-triangular form,
//! then single-shift QZ sweeps on the active window with deflation of
//! infinite eigenvalues by chasing zero diagonal entries of `B` downward.

use alloc::vec::Vec;

use nalgebra::{Complex, ComplexField, DMatrix};

use crate::error::{Error, Result};

type C = Complex<f64>;

const EPS: f64 = f64::EPSILON;

#[derive(Clone, Copy)]
struct Rot {
    c: f64,
    s: C,
}

impl Rot {
    /// `[c s; -s̄ c][f; g] = [r; 0]`.
    fn new(f: C, g: C) -> Self {
        let (af, ag) = (f.modulus(), g.modulus());
        if ag == 0.0 {
            return Self { c: 1.0, s: C::new(0.0, 0.0) };
        }
        if af == 0.0 {
            return Self { c: 0.0, s: g.conj() / ag };
        }
        let h = libm::hypot(af, ag);
        Self { c: af / h, s: (f / af) * g.conj() / h }
    }

    fn rows(&self, m: &mut DMatrix<C>, i: usize, cols: core::ops::Range<usize>) {
        for j in cols {
            let (x, y) = (m[(i, j)], m[(i + 1, j)]);
            m[(i, j)] = x * self.c + self.s * y;
            m[(i + 1, j)] = -self.s.conj() * x + y * self.c;
        }
    }

    /// Acts on columns `j, j+1` so that `[u v] ↦ [0 r]` when built from `(v, u)`.
    fn cols(&self, m: &mut DMatrix<C>, j: usize, rows: core::ops::Range<usize>) {
        for i in rows {
            let (x, y) = (m[(i, j)], m[(i, j + 1)]);
            m[(i, j)] = x * self.c - self.s.conj() * y;
            m[(i, j + 1)] = self.s * x + y * self.c;
        }
    }
}

fn hessenberg_triangular(a: &mut DMatrix<C>, b: &mut DMatrix<C>) {
    let n = a.nrows();
    let qr = b.clone().qr();
    let q = qr.q();
    *b = qr.r();
    *a = q.adjoint() * &*a;
    for j in 0..n.saturating_sub(2) {
        for i in (j + 2..n).rev() {
            let g = Rot::new(a[(i - 1, j)], a[(i, j)]);
            g.rows(a, i - 1, j..n);
            g.rows(b, i - 1, i - 1..n);
            a[(i, j)] = C::new(0.0, 0.0);
            let z = Rot::new(b[(i, i)], b[(i, i - 1)]);
            z.cols(b, i - 1, 0..i + 1);
            z.cols(a, i - 1, 0..n);
            b[(i, i - 1)] = C::new(0.0, 0.0);
        }
    }
}

fn wilkinson_shift(a: &DMatrix<C>, b: &DMatrix<C>, i: usize) -> C {
    let (a11, a12, a21, a22) = (a[(i - 1, i - 1)], a[(i - 1, i)], a[(i, i - 1)], a[(i, i)]);
    let (b11, b12, b22) = (b[(i - 1, i - 1)], b[(i - 1, i)], b[(i, i)]);
    let target = a22 / b22;
    let qa = b11 * b22;
    if qa.modulus() <= EPS * (b11.modulus() + b22.modulus()).powi(2) {
        return target;
    }
    let qb = -(a11 * b22 + a22 * b11 - a21 * b12);
    let qc = a11 * a22 - a12 * a21;
    let disc = (qb * qb - qa * qc * 4.0).sqrt();
    let r1 = (-qb + disc) / (qa * 2.0);
    let r2 = (-qb - disc) / (qa * 2.0);
    if (r1 - target).modulus() <= (r2 - target).modulus() {
        r1
    } else {
        r2
    }
}

/// Generalized eigenvalues of `A x = λ B x` as unnormalized pairs `(α, β)` with `λ = α/β`.
pub fn qz_eigenvalues(mut a: DMatrix<C>, mut b: DMatrix<C>) -> Result<Vec<(C, C)>> {
    let n = a.nrows();
    if a.shape() != (n, n) || b.shape() != (n, n) {
        return Err(Error::NotSquare { rows: a.nrows(), cols: a.ncols() });
    }
    if a.iter().chain(b.iter()).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::EigenFailure);
    }
    let mut out = alloc::vec![(C::new(0.0, 0.0), C::new(0.0, 0.0)); n];
    if n == 0 {
        return Ok(out);
    }
    hessenberg_triangular(&mut a, &mut b);
    let norm_a = a.norm().max(f64::MIN_POSITIVE);
    let norm_b = b.norm().max(f64::MIN_POSITIVE);
    let mut ihi = n - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    loop {
        for j in 1..=ihi {
            let scale = a[(j - 1, j - 1)].modulus() + a[(j, j)].modulus();
            let scale = if scale == 0.0 { norm_a } else { scale };
            if a[(j, j - 1)].modulus() <= EPS * scale {
                a[(j, j - 1)] = C::new(0.0, 0.0);
            }
        }
        let ilo = (1..=ihi).rev().find(|&j| a[(j, j - 1)] == C::new(0.0, 0.0)).unwrap_or(0);
        if ilo == ihi {
            out[ihi] = (a[(ihi, ihi)], b[(ihi, ihi)]);
            if ihi == 0 {
                break;
            }
            ihi -= 1;
            iter = 0;
            continue;
        }
        if let Some(j) = (ilo..=ihi).find(|&j| b[(j, j)].modulus() <= EPS * norm_b) {
            b[(j, j)] = C::new(0.0, 0.0);
            for k in j..ihi {
                let g = Rot::new(b[(k, k + 1)], b[(k + 1, k + 1)]);
                g.rows(&mut b, k, k + 1..ihi + 1);
                b[(k + 1, k + 1)] = C::new(0.0, 0.0);
                g.rows(&mut a, k, k.saturating_sub(1).max(ilo)..ihi + 1);
                if k > ilo {
                    let z = Rot::new(a[(k + 1, k)], a[(k + 1, k - 1)]);
                    z.cols(&mut a, k - 1, ilo..(k + 2).min(ihi + 1));
                    z.cols(&mut b, k - 1, ilo..k + 1);
                    a[(k + 1, k - 1)] = C::new(0.0, 0.0);
                }
            }
            let z = Rot::new(a[(ihi, ihi)], a[(ihi, ihi - 1)]);
            z.cols(&mut a, ihi - 1, ilo..ihi + 1);
            z.cols(&mut b, ihi - 1, ilo..ihi + 1);
            a[(ihi, ihi - 1)] = C::new(0.0, 0.0);
            continue;
        }
        iter += 1;
        total += 1;
        if total > 60 * n {
            return Err(Error::EigenFailure);
        }
        let shift = if iter.is_multiple_of(10) {
            let e = a[(ihi, ihi - 1)].modulus() / b[(ihi - 1, ihi - 1)].modulus();
            a[(ihi, ihi)] / b[(ihi, ihi)] + C::new(e, 0.75 * e)
        } else {
            wilkinson_shift(&a, &b, ihi)
        };
        for k in ilo..ihi {
            let g = if k == ilo {
                Rot::new(a[(ilo, ilo)] - shift * b[(ilo, ilo)], a[(ilo + 1, ilo)])
            } else {
                Rot::new(a[(k, k - 1)], a[(k + 1, k - 1)])
            };
            g.rows(&mut a, k, k.saturating_sub(1).max(ilo)..ihi + 1);
            g.rows(&mut b, k, k..ihi + 1);
            if k > ilo {
                a[(k + 1, k - 1)] = C::new(0.0, 0.0);
            }
            let z = Rot::new(b[(k + 1, k + 1)], b[(k + 1, k)]);
            z.cols(&mut b, k, ilo..k + 2);
            z.cols(&mut a, k, ilo..(k + 3).min(ihi + 1));
            b[(k + 1, k)] = C::new(0.0, 0.0);
        }
    }
    Ok(out)
}
