//! Scalar abstraction shared by the numeric kernels.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point type usable for fields, energies and Gibbs weights.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Energy gap below which two minimum cuts are treated as tied.
    const TIE_GAP: f64;
    /// Residual capacity below which an arc is treated as saturated.
    const FLOW_EPS: f64;

    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable")
    }

    #[inline]
    fn f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }
}

impl Real for f64 {
    const TIE_GAP: f64 = 1e-9;
    const FLOW_EPS: f64 = 1e-12;
}

impl Real for f32 {
    const TIE_GAP: f64 = 1e-4;
    const FLOW_EPS: f64 = 1e-6;
}

/// `log Σ exp(x_i)`; `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp<R: Real>(xs: impl IntoIterator<Item = R> + Clone) -> R {
    let m = xs
        .clone()
        .into_iter()
        .fold(R::neg_infinity(), |a, b| if b > a { b } else { a });
    if m == R::neg_infinity() {
        return m;
    }
    // compensated summation keeps 2^24-term sums accurate
    let (mut s, mut c) = (R::zero(), R::zero());
    for x in xs {
        let y = (x - m).exp() - c;
        let t = s + y;
        c = (t - s) - y;
        s = t;
    }
    m + s.ln()
}
