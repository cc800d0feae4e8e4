//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating point type the learners and partition recursions are generic over.
pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Residual accepted from the fixed-point solver.
    const RESIDUAL_TOL: f64;

    /// Lossy conversion from `f64`.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable")
    }

    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize is representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar converts to f64")
    }
}

impl Real for f64 {
    const RESIDUAL_TOL: f64 = 1e-10;
}

impl Real for f32 {
    const RESIDUAL_TOL: f64 = 1e-4;
}

/// `log Σ exp(x_i)` with max subtraction. Returns `-inf` for an empty input.
pub fn log_sum_exp<R: Real>(xs: impl IntoIterator<Item = R> + Clone) -> R {
    let max = xs
        .clone()
        .into_iter()
        .fold(R::neg_infinity(), |m, x| if x > m { x } else { m });
    if max == R::neg_infinity() {
        return max;
    }
    if max == R::infinity() {
        return max;
    }
    let sum: R = xs.into_iter().map(|x| (x - max).exp()).sum();
    max + sum.ln()
}

/// Normalised softmax of `logits`, written into `out`. Returns the log normaliser.
pub fn softmax_into<R: Real>(logits: &[R], out: &mut [R]) -> R {
    let max = logits.iter().fold(R::neg_infinity(), |m, &x| if x > m { x } else { m });
    let mut sum = R::zero();
    for (o, &l) in out.iter_mut().zip(logits) {
        *o = (l - max).exp();
        sum = sum + *o;
    }
    for o in out.iter_mut() {
        *o = *o / sum;
    }
    max + sum.ln()
}

/// `x log x` with the `0 log 0 = 0` convention.
#[inline]
pub fn xlogx<R: Real>(x: R) -> R {
    if x <= R::zero() {
        R::zero()
    } else {
        x * x.ln()
    }
}
