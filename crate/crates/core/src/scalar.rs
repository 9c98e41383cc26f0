use nalgebra::{Complex, ComplexField};
use rand_core::RngCore;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Field of the coefficient entries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    /// Real entries, `⋆` is the transpose.
    Real,
    /// Complex entries, `⋆` is the conjugate transpose.
    Complex,
}

/// Entry type of matrix polynomials: `f64` or `Complex<f64>`.
pub trait Scalar: ComplexField<RealField = f64> + Copy {
    /// Field tag.
    const FIELD: Field;

    /// Standard normal sample (for complex: real and imaginary parts with variance 1/2).
    fn sample_normal<R: RngCore + ?Sized>(rng: &mut R) -> Self;

    /// Widen to a complex number.
    fn to_complex(self) -> Complex<f64>;

    /// Build from real and imaginary parts; `None` for a real type with nonzero `im`.
    fn from_parts(re: f64, im: f64) -> Option<Self>;
}

impl Scalar for f64 {
    const FIELD: Field = Field::Real;

    fn sample_normal<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }

    fn to_complex(self) -> Complex<f64> {
        Complex::new(self, 0.0)
    }

    fn from_parts(re: f64, im: f64) -> Option<Self> {
        (im == 0.0).then_some(re)
    }
}

impl Scalar for Complex<f64> {
    const FIELD: Field = Field::Complex;

    fn sample_normal<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex::new(re, im) * core::f64::consts::FRAC_1_SQRT_2
    }

    fn to_complex(self) -> Complex<f64> {
        self
    }

    fn from_parts(re: f64, im: f64) -> Option<Self> {
        Some(Complex::new(re, im))
    }
}
