use num_traits::{Float, FromPrimitive, NumCast};
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating-point scalar used throughout the crate.
pub trait Scalar:
    Float + FromPrimitive + NumCast + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Converts an `f64` literal.
    fn lit(x: f64) -> Self {
        <Self as NumCast>::from(x).expect("f64 literal fits the scalar type")
    }

    fn of_usize(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("usize fits the scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `x^(1/q)`, with exact shortcuts for `q = 1` and `q = 2`.
    fn root_q(self, q: Self) -> Self {
        if q == Self::one() {
            self
        } else if q == Self::lit(2.0) {
            self.sqrt()
        } else {
            self.powf(q.recip())
        }
    }

    /// `x^q`, with exact shortcuts for `q = 1` and `q = 2`.
    fn pow_q(self, q: Self) -> Self {
        if q == Self::one() {
            self
        } else if q == Self::lit(2.0) {
            self * self
        } else {
            self.powf(q)
        }
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Hölder conjugate `q' = q / (q - 1)`; infinite for `q = 1`.
pub fn conjugate<F: Scalar>(q: F) -> F {
    if q == F::one() {
        F::infinity()
    } else {
        q / (q - F::one())
    }
}

/// Relative closeness with an absolute floor at `tol`.
pub fn rel_close<F: Scalar>(a: F, b: F, tol: F) -> bool {
    let scale = a.abs().max(b.abs()).max(F::one());
    (a - b).abs() <= tol * scale
}
