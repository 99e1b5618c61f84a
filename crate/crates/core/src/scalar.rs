//! Numeric traits the rest of the crate is generic over.
//!
//! Game representations and equilibrium computations only need field
//! arithmetic and an ordering, so they work equally with `f64` and with
//! exact rationals. The ODE machinery needs transcendental functions and is
//! bounded by [`Real`].

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, FromPrimitive, Num, Signed, ToPrimitive, Zero};
use std::fmt::{Debug, Display};

/// An ordered field: payoffs, probabilities and indifference systems.
pub trait Scalar:
    Clone + Num + Signed + PartialOrd + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Exact conversion from a small integer.
    fn from_int(v: i64) -> Self {
        Self::from_i64(v).expect("i64 is representable")
    }

    /// Approximate value as `f64`, used for reporting.
    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Tolerance used for "numerically zero" checks; zero for exact types.
    fn default_eps() -> Self;

    fn is_exact() -> bool;
}

impl Scalar for f64 {
    fn default_eps() -> Self {
        1e-12
    }

    fn is_exact() -> bool {
        false
    }
}

impl Scalar for f32 {
    fn default_eps() -> Self {
        1e-6
    }

    fn is_exact() -> bool {
        false
    }
}

impl Scalar for BigRational {
    fn default_eps() -> Self {
        BigRational::zero()
    }

    fn is_exact() -> bool {
        true
    }
}

/// Floating-point scalars for integration and diagnostics.
pub trait Real: Scalar + Float {
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("finite literal")
    }
}

impl Real for f64 {}
impl Real for f32 {}

/// Largest denominator accepted when converting a float into a rational.
pub const MAX_DENOMINATOR: i64 = 1_000_000;

/// Converts `v` into the rational `p/q` with `q <= max_den` that rounds back
/// to exactly `v`, if one exists.
///
/// Walks the continued-fraction convergents of `v`; a terminating decimal
/// like `0.3` comes back as `3/10`, not as its binary expansion.
pub fn rational_from_f64(v: f64, max_den: i64) -> Option<BigRational> {
    if !v.is_finite() {
        return None;
    }
    let neg = v < 0.0;
    let target = v.abs();
    let (mut p0, mut q0, mut p1, mut q1) = (0i128, 1i128, 1i128, 0i128);
    let mut rest = target;
    for _ in 0..64 {
        let a = rest.floor();
        if a > 1e15 {
            break;
        }
        let a_i = a as i128;
        let p2 = a_i * p1 + p0;
        let q2 = a_i * q1 + q0;
        if q2 > max_den as i128 {
            break;
        }
        if (p2 as f64) / (q2 as f64) == target {
            let num = if neg { -p2 } else { p2 };
            return Some(BigRational::new(BigInt::from(num), BigInt::from(q2)));
        }
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        let frac = rest - a;
        if frac == 0.0 {
            break;
        }
        rest = 1.0 / frac;
    }
    None
}

/// Formats a rational as a decimal-free `p/q` string, always with a denominator.
pub fn rational_to_string(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parses `p/q` or a plain integer.
pub fn rational_from_str(s: &str) -> Option<BigRational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().ok()?;
            let q: BigInt = q.trim().parse().ok()?;
            if q.is_zero() {
                return None;
            }
            Some(BigRational::new(p, q))
        }
        None => s.parse::<BigInt>().ok().map(BigRational::from_integer),
    }
}

pub(crate) fn sum<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |acc, x| acc + x.clone())
}
