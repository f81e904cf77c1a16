use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::Add;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

/// An exact nonnegative rational `numerator / 2^exponent`.
///
/// Always kept canonical: the numerator is odd, or the value is zero with
/// exponent zero. Canonical form makes structural equality value equality.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dyadic {
    numerator: BigUint,
    exponent: u64,
}

impl Dyadic {
    pub fn new(numerator: impl Into<BigUint>, exponent: u64) -> Self {
        let mut d = Self {
            numerator: numerator.into(),
            exponent,
        };
        d.canonicalize();
        d
    }

    pub fn zero() -> Self {
        Self {
            numerator: BigUint::zero(),
            exponent: 0,
        }
    }

    pub fn one() -> Self {
        Self {
            numerator: BigUint::one(),
            exponent: 0,
        }
    }

    /// 2^{-e}.
    pub fn pow2_neg(exponent: u64) -> Self {
        Self {
            numerator: BigUint::one(),
            exponent,
        }
    }

    /// The exact value of a finite nonnegative float. Every such float is
    /// dyadic, so this is lossless.
    pub fn from_f64(x: f64) -> Option<Self> {
        if !x.is_finite() || x < 0.0 {
            return None;
        }
        if x == 0.0 {
            return Some(Self::zero());
        }
        let bits = x.to_bits();
        let raw_exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mantissa, exp2) = if raw_exp == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), raw_exp - 1075)
        };
        Some(if exp2 >= 0 {
            Self::new(BigUint::from(mantissa) << (exp2 as u64), 0)
        } else {
            Self::new(mantissa, (-exp2) as u64)
        })
    }

    pub fn numerator(&self) -> &BigUint {
        &self.numerator
    }

    pub fn exponent(&self) -> u64 {
        self.exponent
    }

    pub fn is_zero(&self) -> bool {
        self.numerator.is_zero()
    }

    fn canonicalize(&mut self) {
        match self.numerator.trailing_zeros() {
            None => self.exponent = 0,
            Some(tz) => {
                let shift = tz.min(self.exponent);
                if shift > 0 {
                    self.numerator >>= shift;
                    self.exponent -= shift;
                }
            }
        }
    }

    /// Numerator rescaled to denominator 2^exponent (exponent ≥ own).
    fn scaled(&self, exponent: u64) -> BigUint {
        &self.numerator << (exponent - self.exponent)
    }

    pub fn to_rational(&self) -> BigRational {
        let den = BigUint::one() << self.exponent;
        BigRational::new(self.numerator.clone().into(), den.into())
    }

    /// Nearest-ish float (truncated to 64 significant bits, then rounded by
    /// the conversion). Use [`Dyadic::to_f64_upper`] where soundness matters.
    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let bits = self.numerator.bits();
        let (top, shift) = if bits > 64 {
            ((&self.numerator >> (bits - 64)).to_u64().unwrap(), bits - 64)
        } else {
            (self.numerator.to_u64().unwrap(), 0)
        };
        ldexp(top as f64, shift as i64 - self.exponent as i64)
    }

    /// A float that is ≥ the exact value.
    pub fn to_f64_upper(&self) -> f64 {
        let mut v = self.to_f64();
        while Dyadic::from_f64(v).is_some_and(|d| d < *self) {
            v = v.next_up();
        }
        v
    }

    /// Exact comparison `self ≤ bound`. NaN never certifies anything.
    pub fn le_f64(&self, bound: f64) -> bool {
        if bound.is_nan() {
            return false;
        }
        if bound == f64::INFINITY {
            return true;
        }
        match Dyadic::from_f64(bound) {
            Some(b) => *self <= b,
            None => false,
        }
    }
}

fn ldexp(x: f64, e: i64) -> f64 {
    // split so that intermediate powers stay in range
    let mut v = x;
    let mut e = e;
    while e > 1000 {
        v *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        v *= 2f64.powi(-1000);
        e += 1000;
    }
    v * 2f64.powi(e as i32)
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let e = self.exponent.max(other.exponent);
        self.scaled(e).cmp(&other.scaled(e))
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for &Dyadic {
    type Output = Dyadic;

    fn add(self, rhs: &Dyadic) -> Dyadic {
        let e = self.exponent.max(rhs.exponent);
        Dyadic::new(self.scaled(e) + rhs.scaled(e), e)
    }
}

impl Add for Dyadic {
    type Output = Dyadic;

    fn add(self, rhs: Dyadic) -> Dyadic {
        &self + &rhs
    }
}

impl Sum for Dyadic {
    fn sum<I: Iterator<Item = Dyadic>>(iter: I) -> Self {
        iter.fold(Dyadic::zero(), |acc, x| acc + x)
    }
}

impl<'a> Sum<&'a Dyadic> for Dyadic {
    fn sum<I: Iterator<Item = &'a Dyadic>>(iter: I) -> Self {
        iter.fold(Dyadic::zero(), |acc, x| &acc + x)
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exponent == 0 {
            write!(f, "{}", self.numerator)
        } else if self.exponent <= 32 {
            write!(f, "{}/{}", self.numerator, 1u64 << self.exponent)
        } else {
            write!(f, "{}/2^{}", self.numerator, self.exponent)
        }
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dyadic({self})")
    }
}

impl Serialize for Dyadic {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}
