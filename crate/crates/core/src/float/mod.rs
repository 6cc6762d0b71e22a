//! Positive floats `s * 2^e` with a `w`-bit normalized significand, and the
//! native operations that also produce the auxiliary values the circuits check.

pub mod circuit;

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::field::Field;

pub const EXP_MIN: i32 = -128;
pub const EXP_MAX: i32 = 127;
pub const MIN_PRECISION: u32 = 4;
pub const MAX_PRECISION: u32 = 80;

/// Significand width `w` with relative error `delta = 2^-(w-1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Precision {
    w: u32,
}

impl Precision {
    pub fn new(w: u32, field: &Field) -> Result<Self> {
        if !(MIN_PRECISION..=MAX_PRECISION).contains(&w) {
            return Err(Error::Precision { w, reason: format!("w must be in {MIN_PRECISION}..={MAX_PRECISION}") });
        }
        if !field.supports_precision(w) {
            return Err(Error::Precision {
                w,
                reason: format!("3w+1 = {} is not below the {}-bit field prime", 3 * w + 1, field.bits()),
            });
        }
        Ok(Precision { w })
    }

    pub fn w(&self) -> u32 {
        self.w
    }

    pub fn delta(&self) -> BigRational {
        BigRational::new(BigInt::one(), BigInt::one() << (self.w - 1))
    }
}

/// A nonnegative float. When `zero` is set, `s` and `e` are 0.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Float {
    s: u128,
    e: i32,
    zero: bool,
    w: u32,
}

impl fmt::Debug for Float {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.zero {
            write!(f, "Float(0; w={})", self.w)
        } else {
            write!(f, "Float({}·2^{}; w={})", self.s, self.e, self.w)
        }
    }
}

/// Auxiliary values produced alongside an operation result.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FloatAux {
    /// Normalization shift.
    pub theta: i32,
    /// Exponent gap after ordering (add only).
    pub lambda: Option<i32>,
    /// True when the operands were swapped to put the larger exponent first (add only).
    pub swapped: bool,
    /// True when the gap exceeded `w` and the larger operand was returned (add only).
    pub cutoff: bool,
}

impl FloatAux {
    fn muldiv(theta: u32) -> Self {
        FloatAux { theta: theta as i32, lambda: None, swapped: false, cutoff: false }
    }

    /// Gap actually used for alignment: 0 on the cutoff path.
    pub fn effective_lambda(&self) -> i32 {
        if self.cutoff {
            0
        } else {
            self.lambda.unwrap_or(0)
        }
    }

    /// `2^theta`
    pub fn mid(&self) -> BigUint {
        BigUint::one() << self.theta.max(0) as u32
    }

    /// `2^lambda` for the aligned addition.
    pub fn mid_prime(&self) -> BigUint {
        BigUint::one() << self.effective_lambda() as u32
    }
}

fn pow2(k: u32) -> BigUint {
    BigUint::one() << k
}

fn check_exp(e: i64) -> Result<i32> {
    if (EXP_MIN as i64..=EXP_MAX as i64).contains(&e) {
        Ok(e as i32)
    } else {
        Err(Error::ExponentOverflow(e))
    }
}

fn check_w(w: u32) -> Result<()> {
    if (MIN_PRECISION..=MAX_PRECISION).contains(&w) {
        Ok(())
    } else {
        Err(Error::Precision { w, reason: format!("w must be in {MIN_PRECISION}..={MAX_PRECISION}") })
    }
}

impl Float {
    pub fn zero(w: u32) -> Self {
        Float { s: 0, e: 0, zero: true, w }
    }

    /// A nonzero float; `s` must be normalized and `e` in range.
    pub fn new(s: u128, e: i32, w: u32) -> Result<Self> {
        check_w(w)?;
        if s >> (w - 1) != 1 {
            return Err(Error::MalformedFloat(format!("significand {s} is not a normalized {w}-bit value")));
        }
        check_exp(e as i64)?;
        Ok(Float { s, e, zero: false, w })
    }

    /// Builds from raw parts, accepting the canonical zero encoding.
    pub fn from_parts(s: u128, e: i32, zero: bool, w: u32) -> Result<Self> {
        if zero {
            if s != 0 || e != 0 {
                return Err(Error::MalformedFloat("zero must be encoded as s=0, e=0".into()));
            }
            check_w(w)?;
            Ok(Float::zero(w))
        } else {
            Float::new(s, e, w)
        }
    }

    pub fn one(w: u32) -> Self {
        Float { s: 1 << (w - 1), e: -(w as i32 - 1), zero: false, w }
    }

    pub fn half(w: u32) -> Self {
        Float { s: 1 << (w - 1), e: -(w as i32), zero: false, w }
    }

    pub fn s(&self) -> u128 {
        self.s
    }

    pub fn e(&self) -> i32 {
        self.e
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    pub fn w(&self) -> u32 {
        self.w
    }

    fn from_biguint_parts(s: &BigUint, e: i64, w: u32) -> Result<Self> {
        let s = s.to_u128().ok_or_else(|| Error::MalformedFloat("significand too wide".into()))?;
        Float::new(s, check_exp(e)?, w)
    }

    /// Nearest representable float, ties to even.
    pub fn encode(x: &BigRational, w: u32) -> Result<Self> {
        encode_with(x, w, Rounding::NearestEven)
    }

    /// Largest representable float not above `x`.
    pub fn encode_floor(x: &BigRational, w: u32) -> Result<Self> {
        encode_with(x, w, Rounding::Floor)
    }

    pub fn from_f64(x: f64, w: u32) -> Result<Self> {
        if !x.is_finite() {
            return Err(Error::MalformedFloat(format!("{x} is not finite")));
        }
        let r = BigRational::from_float(x).ok_or_else(|| Error::MalformedFloat(x.to_string()))?;
        Float::encode(&r, w)
    }

    /// Integer conversion with a floor on the significand.
    pub fn from_int_floor(x: u64, w: u32) -> Result<Self> {
        Float::encode_floor(&BigRational::from_integer(BigInt::from(x)), w)
    }

    pub fn decode(&self) -> BigRational {
        if self.zero {
            return BigRational::zero();
        }
        let s = BigInt::from(self.s);
        if self.e >= 0 {
            BigRational::from_integer(s << self.e as u32)
        } else {
            BigRational::new(s, BigInt::one() << (-self.e) as u32)
        }
    }

    pub fn to_f64(&self) -> f64 {
        if self.zero {
            0.0
        } else {
            self.s as f64 * 2f64.powi(self.e)
        }
    }

    fn same_w(&self, other: &Float) -> Result<()> {
        if self.w == other.w {
            Ok(())
        } else {
            Err(Error::PrecisionMismatch(self.w, other.w))
        }
    }

    /// `s_c = floor(s_a s_b / 2^theta)`, `e_c = e_a + e_b + theta`, theta in {w-1, w}.
    pub fn mul(&self, b: &Float) -> Result<(Float, Option<FloatAux>)> {
        self.same_w(b)?;
        if self.zero || b.zero {
            return Ok((Float::zero(self.w), None));
        }
        let w = self.w;
        let prod = BigUint::from(self.s) * BigUint::from(b.s);
        let theta = if prod < pow2(2 * w - 1) { w - 1 } else { w };
        let s = prod >> theta;
        let c = Float::from_biguint_parts(&s, self.e as i64 + b.e as i64 + theta as i64, w)?;
        Ok((c, Some(FloatAux::muldiv(theta))))
    }

    /// `s_c = floor(s_a 2^theta / s_b)`, `e_c = e_a - e_b - theta`, theta in {w-1, w}.
    pub fn div(&self, b: &Float) -> Result<(Float, Option<FloatAux>)> {
        self.same_w(b)?;
        if b.zero {
            return Err(Error::DivisionByZero);
        }
        if self.zero {
            return Ok((Float::zero(self.w), None));
        }
        let w = self.w;
        let theta = if self.s >= b.s { w - 1 } else { w };
        let s = (BigUint::from(self.s) << theta) / BigUint::from(b.s);
        let c = Float::from_biguint_parts(&s, self.e as i64 - b.e as i64 - theta as i64, w)?;
        Ok((c, Some(FloatAux::muldiv(theta))))
    }

    /// Aligned addition; a gap above `w` returns the larger operand unchanged.
    pub fn add(&self, b: &Float) -> Result<(Float, Option<FloatAux>)> {
        self.same_w(b)?;
        if self.zero {
            return Ok((*b, None));
        }
        if b.zero {
            return Ok((*self, None));
        }
        let w = self.w;
        let swapped = self.e < b.e;
        let (hi, lo) = if swapped { (b, self) } else { (self, b) };
        let lambda = hi.e - lo.e;
        if lambda > w as i32 {
            let aux = FloatAux { theta: 0, lambda: Some(lambda), swapped, cutoff: true };
            return Ok((*hi, Some(aux)));
        }
        let lambda_u = lambda as u32;
        let sum = (BigUint::from(hi.s) << lambda_u) + BigUint::from(lo.s);
        let theta = if sum < pow2(w + lambda_u) { lambda_u } else { lambda_u + 1 };
        let s = sum >> theta;
        let c = Float::from_biguint_parts(&s, lo.e as i64 + theta as i64, w)?;
        let aux = FloatAux { theta: theta as i32, lambda: Some(lambda), swapped, cutoff: false };
        Ok((c, Some(aux)))
    }

    pub fn mul_val(&self, b: &Float) -> Result<Float> {
        self.mul(b).map(|r| r.0)
    }

    pub fn div_val(&self, b: &Float) -> Result<Float> {
        self.div(b).map(|r| r.0)
    }

    pub fn add_val(&self, b: &Float) -> Result<Float> {
        self.add(b).map(|r| r.0)
    }

    /// Exact order; zero is below every nonzero value.
    pub fn leq(&self, b: &Float) -> bool {
        match (self.zero, b.zero) {
            (true, _) => true,
            (false, true) => false,
            _ => (self.e, self.s) <= (b.e, b.s),
        }
    }
}

#[derive(Clone, Copy)]
enum Rounding {
    NearestEven,
    Floor,
}

fn encode_with(x: &BigRational, w: u32, mode: Rounding) -> Result<Float> {
    check_w(w)?;
    if x.is_zero() {
        return Ok(Float::zero(w));
    }
    if x < &BigRational::zero() {
        return Err(Error::NegativeValue);
    }
    let n = x.numer().magnitude().clone();
    let d = x.denom().magnitude().clone();
    // floor(log2 x) is either bits(n) - bits(d) or one less.
    let mut k = n.bits() as i64 - d.bits() as i64;
    let ge_pow = |k: i64| -> bool {
        if k >= 0 {
            n >= &d << k as u64
        } else {
            &n << (-k) as u64 >= d
        }
    };
    if !ge_pow(k) {
        k -= 1;
    }
    let mut e = k - (w as i64 - 1);
    // s_exact = n / (d 2^e)
    let (num, den) = if e >= 0 { (n.clone(), &d << e as u64) } else { (&n << (-e) as u64, d.clone()) };
    let (mut s, rem) = num.div_rem(&den);
    if let Rounding::NearestEven = mode {
        let twice = &rem << 1u32;
        let up = match twice.cmp(&den) {
            Ordering::Greater => true,
            Ordering::Equal => s.bit(0),
            Ordering::Less => false,
        };
        if up {
            s += 1u32;
        }
        if s == pow2(w) {
            s = pow2(w - 1);
            e += 1;
        }
    }
    Float::from_biguint_parts(&s, e, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn f(s: u128, e: i32) -> Float {
        Float::new(s, e, 23).unwrap()
    }

    #[test]
    fn encode_examples() {
        assert_eq!(Float::encode(&rat(1, 1), 23).unwrap(), f(4194304, -22));
        assert!(Float::encode(&rat(0, 1), 23).unwrap().is_zero());
        assert_eq!(Float::encode(&rat(1, 3), 23).unwrap(), f(5592405, -24));
        assert!(matches!(Float::encode(&rat(-1, 2), 23), Err(Error::NegativeValue)));
    }

    #[test]
    fn encode_ties_to_even_and_carry() {
        // 17/2 and 19/2 are ties at w=4: keep the even significand.
        assert_eq!(Float::encode(&rat(9, 1), 4).unwrap(), Float::new(9, 0, 4).unwrap());
        assert_eq!(Float::encode(&rat(17, 1), 4).unwrap(), Float::new(8, 1, 4).unwrap());
        assert_eq!(Float::encode(&rat(19, 1), 4).unwrap(), Float::new(10, 1, 4).unwrap());
        // rounding up to 2^w renormalizes
        assert_eq!(Float::encode(&rat(31, 1), 4).unwrap(), Float::new(8, 2, 4).unwrap());
        assert_eq!(Float::encode_floor(&rat(31, 1), 4).unwrap(), Float::new(15, 1, 4).unwrap());
    }

    #[test]
    fn encode_exponent_overflow() {
        let huge = BigRational::from_integer(BigInt::one() << 200u32);
        assert!(matches!(Float::encode(&huge, 23), Err(Error::ExponentOverflow(_))));
    }

    #[test]
    fn decode_examples() {
        assert_eq!(f(4194304, -22).decode(), rat(1, 1));
        assert_eq!(f(5750000, 3).decode(), rat(46000000, 1));
        assert_eq!(Float::zero(23).decode(), rat(0, 1));
    }

    #[test]
    fn mul_examples() {
        let one = Float::one(23);
        let (c, aux) = one.mul(&one).unwrap();
        assert_eq!((c, aux.unwrap().theta), (one, 22));
        let (c, aux) = f(5000000, 0).mul(&f(6000000, 0)).unwrap();
        assert_eq!((c, aux.unwrap().theta), (f(7152557, 22), 22));
        assert_eq!(c.decode(), rat(29999998435328, 1));
        assert!(one.mul(&Float::zero(23)).unwrap().0.is_zero());
    }

    #[test]
    fn div_examples() {
        let one = Float::one(23);
        let (c, aux) = one.div(&one).unwrap();
        assert_eq!((c, aux.unwrap().theta), (one, 22));
        let three = f(6291456, -21);
        let (c, aux) = one.div(&three).unwrap();
        assert_eq!((c, aux.unwrap().theta), (f(5592405, -24), 23));
        assert!(Float::zero(23).div(&three).unwrap().0.is_zero());
        assert!(matches!(one.div(&Float::zero(23)), Err(Error::DivisionByZero)));
    }

    #[test]
    fn add_examples() {
        let one = Float::one(23);
        let (c, aux) = one.add(&one).unwrap();
        let aux = aux.unwrap();
        assert_eq!((c, aux.lambda, aux.theta), (f(4194304, -21), Some(0), 1));
        let (c, aux) = f(6000000, 0).add(&f(5000000, 3)).unwrap();
        let aux = aux.unwrap();
        assert!(aux.swapped);
        assert_eq!((aux.lambda, aux.theta), (Some(3), 3));
        assert_eq!(c, f(5750000, 3));
        assert_eq!(c.decode(), rat(46000000, 1));
        assert_eq!(one.add(&Float::zero(23)).unwrap().0, one);
    }

    #[test]
    fn add_cutoff_returns_larger() {
        let big = f(4194304, 10);
        let small = f(8000000, -30);
        let (c, aux) = small.add(&big).unwrap();
        let aux = aux.unwrap();
        assert!(aux.cutoff && aux.swapped);
        assert_eq!(aux.lambda, Some(40));
        assert_eq!(c, big);
    }

    #[test]
    fn leq_examples() {
        let one = Float::one(23);
        let two = f(4194304, -21);
        assert!(one.leq(&two) && !two.leq(&one));
        assert!(f(5000000, 0).leq(&f(4194305, 1)));
        assert!(one.leq(&one));
        assert!(Float::zero(23).leq(&one) && !one.leq(&Float::zero(23)));
    }

    #[test]
    fn precision_bounds() {
        let field = Field::bn254();
        assert_eq!(Precision::new(23, &field).unwrap().delta(), rat(1, 1 << 22));
        assert!(Precision::new(8, &field).is_ok());
        assert!(matches!(Precision::new(90, &field), Err(Error::Precision { .. })));
        assert!(Precision::new(3, &field).is_err());
    }

    #[test]
    fn exhaustive_theta_ranges_small_w() {
        for w in [4u32, 5] {
            let lo = 1u128 << (w - 1);
            let hi = 1u128 << w;
            for sa in lo..hi {
                for sb in lo..hi {
                    let a = Float::new(sa, 0, w).unwrap();
                    let b = Float::new(sb, 0, w).unwrap();
                    let t = a.mul(&b).unwrap().1.unwrap().theta;
                    assert!(t == w as i32 - 1 || t == w as i32);
                    let t = a.div(&b).unwrap().1.unwrap().theta;
                    assert!(t == w as i32 - 1 || t == w as i32);
                    for lambda in 0..=w as i32 {
                        let hi_op = Float::new(sa, lambda, w).unwrap();
                        let aux = hi_op.add(&b).unwrap().1.unwrap();
                        assert!(aux.theta == lambda || aux.theta == lambda + 1);
                    }
                }
            }
        }
    }
}
