//! Exact nonnegative fractions and a few helpers for turning big-integer
//! ratios into floats without losing relative precision.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A reduced nonnegative fraction `num/den` with `den > 0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Fraction {
    num: BigUint,
    den: BigUint,
}

impl Fraction {
    pub fn new(num: BigUint, den: BigUint) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::InvalidArgument("zero denominator".into()));
        }
        let g = num.gcd(&den);
        if g.is_zero() || g.is_one() {
            return Ok(Fraction { num, den });
        }
        Ok(Fraction {
            num: &num / &g,
            den: &den / &g,
        })
    }

    pub fn from_u64(num: u64, den: u64) -> Result<Self> {
        Self::new(BigUint::from(num), BigUint::from(den))
    }

    pub fn zero() -> Self {
        Fraction {
            num: BigUint::zero(),
            den: BigUint::one(),
        }
    }

    pub fn num(&self) -> &BigUint {
        &self.num
    }

    pub fn den(&self) -> &BigUint {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        ratio_to_f64(&self.num, &self.den)
    }

    /// Fractional part, i.e. the representative in `[0, 1)`.
    pub fn fract(&self) -> Fraction {
        Fraction {
            num: &self.num % &self.den,
            den: self.den.clone(),
        }
    }

    /// Distance to the nearest integer, as an exact fraction in `[0, 1/2]`.
    pub fn nearest_integer_distance(&self) -> Fraction {
        let r = &self.num % &self.den;
        let other = &self.den - &r;
        let d = if r <= other { r } else { other };
        Fraction::new(d, self.den.clone()).expect("nonzero denominator")
    }

    /// Exact value of an `f64` in `[0, +inf)` as a dyadic fraction.
    pub fn from_f64(x: f64) -> Result<Self> {
        if !x.is_finite() || x < 0.0 {
            return Err(Error::InvalidArgument(format!("{x} is not a finite nonnegative float")));
        }
        if x == 0.0 {
            return Ok(Fraction::zero());
        }
        let bits = x.to_bits();
        let exp_bits = ((bits >> 52) & 0x7ff) as i64;
        let frac_bits = bits & ((1u64 << 52) - 1);
        let (mantissa, exp) = if exp_bits == 0 {
            (frac_bits, -1074)
        } else {
            (frac_bits | (1u64 << 52), exp_bits - 1075)
        };
        let m = BigUint::from(mantissa);
        if exp >= 0 {
            Fraction::new(m << exp as usize, BigUint::one())
        } else {
            Fraction::new(m, BigUint::one() << (-exp) as usize)
        }
    }
}

impl PartialOrd for Fraction {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Fraction {
    fn cmp(&self, other: &Self) -> Ordering {
        (&self.num * &other.den).cmp(&(&other.num * &self.den))
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl FromStr for Fraction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("not a fraction: {s:?}"));
        let s = s.trim();
        match s.split_once('/') {
            Some((n, d)) => {
                let n: BigUint = n.trim().parse().map_err(|_| bad())?;
                let d: BigUint = d.trim().parse().map_err(|_| bad())?;
                Fraction::new(n, d).map_err(|_| bad())
            }
            None => {
                let n: BigUint = s.parse().map_err(|_| bad())?;
                Ok(Fraction::new(n, BigUint::one()).expect("unit denominator"))
            }
        }
    }
}

impl Serialize for Fraction {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Fraction {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `num/den` rounded to an `f64`, keeping about 64 significant bits through the
/// division so that huge operands do not collapse to `inf/inf`.
pub fn ratio_to_f64(num: &BigUint, den: &BigUint) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    let nb = num.bits() as i64;
    let db = den.bits() as i64;
    // scale so the integer quotient has ~64-65 bits
    let shift = 64 - (nb - db);
    let q = if shift >= 0 {
        (num << shift as usize) / den
    } else {
        num / (den << (-shift) as usize)
    };
    let qf = q.to_f64().unwrap_or(f64::INFINITY);
    scale_pow2(qf, -shift)
}

fn scale_pow2(x: f64, e: i64) -> f64 {
    let mut x = x;
    let mut e = e;
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
        if x == 0.0 {
            return 0.0;
        }
    }
    x * 2f64.powi(e as i32)
}

/// The fraction with the smallest denominator in the closed interval `[lo, hi]`
/// (smallest numerator among those), found by walking continued fractions.
pub fn simplest_between(lo: &Fraction, hi: &Fraction) -> Fraction {
    assert!(lo <= hi, "empty interval");
    let (n, d) = simplest_rec(lo.num(), lo.den(), hi.num(), hi.den());
    Fraction::new(n, d).expect("positive denominator")
}

fn simplest_rec(a: &BigUint, b: &BigUint, c: &BigUint, d: &BigUint) -> (BigUint, BigUint) {
    // interval [a/b, c/d]
    let fl = a / b;
    if (a % b).is_zero() {
        return (fl, BigUint::one());
    }
    // an integer strictly inside (a/b, c/d]
    if (&fl + 1u32) * d <= *c {
        return (fl + 1u32, BigUint::one());
    }
    // both ends share integer part fl: recurse on reciprocals of fractional parts
    let a2 = a - &fl * b;
    let c2 = c - &fl * d;
    // 1/[c2/d, a2/b] = [d/c2, b/a2]
    let (n, m) = simplest_rec(d, &c2, b, &a2);
    // value = fl + 1/(n/m) = fl + m/n
    (&fl * &n + m, n)
}
