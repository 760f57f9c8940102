//! Working-precision abstraction: plain `f64` or double-double (`TwoFloat`).

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{Float, ToPrimitive};
use serde::{Deserialize, Serialize};
use std::fmt::Debug;
use twofloat::TwoFloat;

pub type C64 = Complex<f64>;

/// Scalar type used by the sampling kernels.
pub trait Real: Float + Send + Sync + Debug + 'static {
    fn of(x: f64) -> Self;
    fn f64(self) -> f64;
    fn of_rational(q: &BigRational) -> Self;
}

impl Real for f64 {
    fn of(x: f64) -> Self {
        x
    }
    fn f64(self) -> f64 {
        self
    }
    fn of_rational(q: &BigRational) -> Self {
        rational_to_f64(q)
    }
}

impl Real for TwoFloat {
    fn of(x: f64) -> Self {
        TwoFloat::from(x)
    }
    fn f64(self) -> f64 {
        self.hi() + self.lo()
    }
    fn of_rational(q: &BigRational) -> Self {
        let hi = rational_to_f64(q);
        if !hi.is_finite() {
            return TwoFloat::from(hi);
        }
        let rest = q - f64_to_rational(hi);
        TwoFloat::new_add(hi, rational_to_f64(&rest))
    }
}

/// Correctly scaled conversion that survives huge numerators and denominators.
pub fn rational_to_f64(q: &BigRational) -> f64 {
    if let (Some(n), Some(d)) = (q.numer().to_f64(), q.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && n.abs() < 9.0e15 && d < 9.0e15 {
            return n / d;
        }
    }
    let nb = q.numer().bits() as i64;
    let db = q.denom().bits() as i64;
    let shift = 60 - (nb - db);
    let scaled = if shift >= 0 {
        (q.numer() << shift as usize) / q.denom()
    } else {
        q.numer() / (q.denom() << (-shift) as usize)
    };
    scaled.to_f64().unwrap_or(0.0) * 2f64.powi(-shift as i32)
}

pub fn f64_to_rational(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap_or_else(|| BigRational::from_integer(BigInt::from(0)))
}

pub fn to_c64<R: Real>(z: Complex<R>) -> C64 {
    C64::new(z.re.f64(), z.im.f64())
}

pub fn of_c64<R: Real>(z: C64) -> Complex<R> {
    Complex::new(R::of(z.re), R::of(z.im))
}

/// Requested arithmetic precision; anything above 53 bits selects double-double.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    Double,
    DoubleDouble,
}

impl Precision {
    pub fn from_bits(bits: u32) -> Self {
        if bits <= 53 {
            Precision::Double
        } else {
            Precision::DoubleDouble
        }
    }

    pub fn bits(self) -> u32 {
        match self {
            Precision::Double => 53,
            Precision::DoubleDouble => 106,
        }
    }
}

/// The `k`-th power of the primitive `n`-th root of unity, refined by Newton
/// iteration in the working precision.
pub fn root_of_unity<R: Real>(k: i64, n: usize) -> Complex<R> {
    let k = k.rem_euclid(n as i64);
    let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
    let mut z = Complex::new(R::of(theta.cos()), R::of(theta.sin()));
    if std::mem::size_of::<R>() > 8 {
        let one = Complex::new(R::one(), R::zero());
        let nn = R::of(n as f64);
        for _ in 0..2 {
            let zn1 = pow_c(z, n - 1);
            z = z - (zn1 * z - one) / (zn1 * nn);
        }
    }
    z
}

fn pow_c<R: Real>(z: Complex<R>, e: usize) -> Complex<R> {
    let mut acc = Complex::new(R::one(), R::zero());
    let mut base = z;
    let mut e = e;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base;
        }
        base = base * base;
        e >>= 1;
    }
    acc
}

/// `|z|` as `f64`, robust against overflow in the squared norm.
pub fn cabs<R: Real>(z: Complex<R>) -> f64 {
    z.re.f64().hypot(z.im.f64())
}
