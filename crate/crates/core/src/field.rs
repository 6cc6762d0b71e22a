//! Prime-field arithmetic over a runtime-configured modulus below 2^256.
//!
//! Elements are stored canonically reduced as four little-endian 64-bit limbs.
//! Multiplication goes through Montgomery reduction; callers never see the
//! Montgomery form.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Decimal form of the default 254-bit prime (the BN254 scalar field).
pub const BN254_MODULUS_DEC: &str =
    "21888242871839275222246405745257275088548364400416034343698204186575808495617";

/// A residue modulo the field prime, canonical in `[0, p)`.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldElement([u64; 4]);

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement([0; 4]);
    pub const ONE: FieldElement = FieldElement([1, 0, 0, 0]);

    /// Small unsigned constant. Valid for every supported prime since p > 2^64.
    pub const fn from_u64(v: u64) -> Self {
        FieldElement([v, 0, 0, 0])
    }

    pub fn limbs(&self) -> &[u64; 4] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0 == [0; 4]
    }

    /// Value as `u64` when it fits.
    pub fn to_u64(&self) -> Option<u64> {
        if self.0[1] == 0 && self.0[2] == 0 && self.0[3] == 0 {
            Some(self.0[0])
        } else {
            None
        }
    }

    /// Value as `u128` when it fits.
    pub fn to_u128(&self) -> Option<u128> {
        if self.0[2] == 0 && self.0[3] == 0 {
            Some(self.0[0] as u128 | (self.0[1] as u128) << 64)
        } else {
            None
        }
    }

    pub fn to_biguint(&self) -> BigUint {
        let mut bytes = [0u8; 32];
        for (i, limb) in self.0.iter().enumerate() {
            bytes[i * 8..(i + 1) * 8].copy_from_slice(&limb.to_le_bytes());
        }
        BigUint::from_bytes_le(&bytes)
    }

    pub fn to_be_bytes(&self) -> [u8; 32] {
        let mut out = [0u8; 32];
        for (i, limb) in self.0.iter().enumerate() {
            out[32 - (i + 1) * 8..32 - i * 8].copy_from_slice(&limb.to_be_bytes());
        }
        out
    }

    /// Bit `i` of the canonical representative.
    pub fn bit(&self, i: usize) -> bool {
        i < 256 && (self.0[i / 64] >> (i % 64)) & 1 == 1
    }

    /// Number of significant bits of the canonical representative.
    pub fn bit_len(&self) -> u32 {
        for i in (0..4).rev() {
            if self.0[i] != 0 {
                return 64 * i as u32 + 64 - self.0[i].leading_zeros();
            }
        }
        0
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_u64() {
            Some(v) => write!(f, "Fe({v})"),
            None => write!(f, "Fe(0x{})", hex::encode(self.to_be_bytes())),
        }
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_biguint())
    }
}

/// Field parameters: modulus plus the Montgomery constants derived from it.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct Field {
    modulus: [u64; 4],
    /// -p^{-1} mod 2^64
    inv: u64,
    /// R^2 mod p with R = 2^256
    r2: [u64; 4],
    bits: u32,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Field({} bits)", self.bits)
    }
}

impl Default for Field {
    fn default() -> Self {
        Field::bn254()
    }
}

impl Field {
    /// Builds the field for an odd prime `p` with `2^64 < p < 2^256`.
    pub fn new(p: &BigUint) -> Result<Self> {
        let bits = p.bits() as u32;
        if bits > 256 || bits <= 64 {
            return Err(Error::InvalidModulus(format!("modulus must have 65..=256 bits, got {bits}")));
        }
        if !is_probable_prime(p) {
            return Err(Error::InvalidModulus("modulus is not prime".into()));
        }
        let modulus = to_limbs(p);
        let r2 = to_limbs(&((BigUint::one() << 512u32) % p));
        Ok(Field { modulus, inv: mont_inv(modulus[0]), r2, bits })
    }

    /// The default 254-bit prime.
    pub fn bn254() -> Self {
        // The constants are fixed; building them through `new` keeps a single code path.
        let p: BigUint = BN254_MODULUS_DEC.parse().expect("valid decimal");
        Field::new(&p).expect("BN254 scalar modulus is prime")
    }

    pub fn modulus(&self) -> BigUint {
        FieldElement(self.modulus).to_biguint()
    }

    pub fn modulus_be_bytes(&self) -> [u8; 32] {
        FieldElement(self.modulus).to_be_bytes()
    }

    /// Bit length of the modulus.
    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// Float circuits at precision `w` need `p > 2^{3w+1}` so their relations never wrap.
    pub fn supports_precision(&self, w: u32) -> bool {
        3 * w + 1 < self.bits
    }

    pub fn from_biguint(&self, v: &BigUint) -> FieldElement {
        FieldElement(to_limbs(&(v % self.modulus())))
    }

    /// Parses a canonical big-endian encoding; values `>= p` are rejected.
    pub fn from_be_bytes(&self, bytes: &[u8; 32]) -> Result<FieldElement> {
        let mut limbs = [0u64; 4];
        for (i, limb) in limbs.iter_mut().enumerate() {
            let mut b = [0u8; 8];
            b.copy_from_slice(&bytes[32 - (i + 1) * 8..32 - i * 8]);
            *limb = u64::from_be_bytes(b);
        }
        if geq(&limbs, &self.modulus) {
            return Err(Error::NonCanonical);
        }
        Ok(FieldElement(limbs))
    }

    pub fn from_u128(&self, v: u128) -> FieldElement {
        FieldElement([v as u64, (v >> 64) as u64, 0, 0])
    }

    pub fn from_i64(&self, v: i64) -> FieldElement {
        if v >= 0 {
            FieldElement::from_u64(v as u64)
        } else {
            self.neg(FieldElement::from_u64(v.unsigned_abs()))
        }
    }

    pub fn from_i128(&self, v: i128) -> FieldElement {
        if v >= 0 {
            self.from_u128(v as u128)
        } else {
            self.neg(self.from_u128(v.unsigned_abs()))
        }
    }

    /// Interprets `x` as a signed integer: residues above p/2 map to negatives.
    pub fn to_i64(&self, x: FieldElement) -> Option<i64> {
        if let Some(v) = x.to_u64() {
            return i64::try_from(v).ok();
        }
        let n = self.neg(x).to_u64()?;
        i64::try_from(n).ok().map(|v| -v)
    }

    /// `2^k` as a field element.
    pub fn pow2(&self, k: u32) -> FieldElement {
        if k < 256 {
            let mut limbs = [0u64; 4];
            limbs[(k / 64) as usize] = 1 << (k % 64);
            if !geq(&limbs, &self.modulus) {
                return FieldElement(limbs);
            }
        }
        self.pow(FieldElement::from_u64(2), &BigUint::from(k))
    }

    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        let (sum, carry) = add_limbs(&a.0, &b.0);
        if carry || geq(&sum, &self.modulus) {
            FieldElement(sub_limbs(&sum, &self.modulus).0)
        } else {
            FieldElement(sum)
        }
    }

    pub fn sub(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        let (diff, borrow) = sub_limbs(&a.0, &b.0);
        if borrow {
            FieldElement(add_limbs(&diff, &self.modulus).0)
        } else {
            FieldElement(diff)
        }
    }

    pub fn neg(&self, a: FieldElement) -> FieldElement {
        if a.is_zero() {
            a
        } else {
            FieldElement(sub_limbs(&self.modulus, &a.0).0)
        }
    }

    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        let ab = self.mont_mul(&a.0, &b.0);
        FieldElement(self.mont_mul(&ab, &self.r2))
    }

    /// `a R mod p`, for loops that stay in the Montgomery domain.
    pub(crate) fn to_montgomery(&self, a: FieldElement) -> [u64; 4] {
        self.mont_mul(&a.0, &self.r2)
    }

    pub(crate) fn from_montgomery(&self, a: &[u64; 4]) -> FieldElement {
        FieldElement(self.mont_mul(a, &[1, 0, 0, 0]))
    }

    /// Product of two Montgomery-form values, in Montgomery form.
    #[inline]
    pub(crate) fn mont_product(&self, a: &[u64; 4], b: &[u64; 4]) -> [u64; 4] {
        self.mont_mul(a, b)
    }

    #[inline]
    pub(crate) fn add_limbs_mod(&self, a: &[u64; 4], b: &[u64; 4]) -> [u64; 4] {
        self.add(FieldElement(*a), FieldElement(*b)).0
    }

    pub fn square(&self, a: FieldElement) -> FieldElement {
        self.mul(a, a)
    }

    pub fn pow(&self, base: FieldElement, exp: &BigUint) -> FieldElement {
        let mut acc = FieldElement::ONE;
        for i in (0..exp.bits()).rev() {
            acc = self.square(acc);
            if exp.bit(i) {
                acc = self.mul(acc, base);
            }
        }
        acc
    }

    /// Multiplicative inverse via Fermat's little theorem.
    pub fn inv(&self, a: FieldElement) -> Result<FieldElement> {
        if a.is_zero() {
            return Err(Error::InverseOfZero);
        }
        let e = self.modulus() - BigUint::from(2u32);
        Ok(self.pow(a, &e))
    }

    /// Uniform element from a byte source (rejection sampling on the top limb).
    pub fn random<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> FieldElement {
        loop {
            let mut limbs = [rng.gen::<u64>(), rng.gen::<u64>(), rng.gen::<u64>(), rng.gen::<u64>()];
            for (i, limb) in limbs.iter_mut().enumerate() {
                let lo = 64 * i as u32;
                if self.bits <= lo {
                    *limb = 0;
                } else if self.bits - lo < 64 {
                    *limb &= (1u64 << (self.bits - lo)) - 1;
                }
            }
            if !geq(&limbs, &self.modulus) {
                return FieldElement(limbs);
            }
        }
    }

    #[inline]
    fn mont_mul(&self, a: &[u64; 4], b: &[u64; 4]) -> [u64; 4] {
        let p = &self.modulus;
        let (mut t0, mut t1, mut t2, mut t3, mut t4) = (0u64, 0u64, 0u64, 0u64, 0u64);
        for &bi in b {
            let (r0, c) = mac(t0, a[0], bi, 0);
            let (r1, c) = mac(t1, a[1], bi, c);
            let (r2, c) = mac(t2, a[2], bi, c);
            let (r3, c) = mac(t3, a[3], bi, c);
            let (r4, t5) = adc(t4, c, 0);

            let m = r0.wrapping_mul(self.inv);
            let (_, c) = mac(r0, m, p[0], 0);
            let (s0, c) = mac(r1, m, p[1], c);
            let (s1, c) = mac(r2, m, p[2], c);
            let (s2, c) = mac(r3, m, p[3], c);
            let (s3, c) = adc(r4, c, 0);
            t0 = s0;
            t1 = s1;
            t2 = s2;
            t3 = s3;
            t4 = t5 + c;
        }
        let r = [t0, t1, t2, t3];
        if t4 != 0 || geq(&r, p) {
            sub_limbs(&r, p).0
        } else {
            r
        }
    }
}

/// `a + b * c + carry` as (low, high).
#[inline(always)]
fn mac(a: u64, b: u64, c: u64, carry: u64) -> (u64, u64) {
    let t = a as u128 + (b as u128) * (c as u128) + carry as u128;
    (t as u64, (t >> 64) as u64)
}

#[inline(always)]
fn adc(a: u64, b: u64, carry: u64) -> (u64, u64) {
    let t = a as u128 + b as u128 + carry as u128;
    (t as u64, (t >> 64) as u64)
}

fn to_limbs(v: &BigUint) -> [u64; 4] {
    let mut limbs = [0u64; 4];
    for (i, d) in v.to_u64_digits().into_iter().take(4).enumerate() {
        limbs[i] = d;
    }
    limbs
}

fn geq(a: &[u64; 4], b: &[u64; 4]) -> bool {
    for i in (0..4).rev() {
        if a[i] != b[i] {
            return a[i] > b[i];
        }
    }
    true
}

fn add_limbs(a: &[u64; 4], b: &[u64; 4]) -> ([u64; 4], bool) {
    let mut out = [0u64; 4];
    let mut carry = false;
    for i in 0..4 {
        let (s1, c1) = a[i].overflowing_add(b[i]);
        let (s2, c2) = s1.overflowing_add(carry as u64);
        out[i] = s2;
        carry = c1 || c2;
    }
    (out, carry)
}

fn sub_limbs(a: &[u64; 4], b: &[u64; 4]) -> ([u64; 4], bool) {
    let mut out = [0u64; 4];
    let mut borrow = false;
    for i in 0..4 {
        let (d1, b1) = a[i].overflowing_sub(b[i]);
        let (d2, b2) = d1.overflowing_sub(borrow as u64);
        out[i] = d2;
        borrow = b1 || b2;
    }
    (out, borrow)
}

fn mont_inv(p0: u64) -> u64 {
    // Newton iteration for p0^{-1} mod 2^64.
    let mut x: u64 = 1;
    for _ in 0..6 {
        x = x.wrapping_mul(2u64.wrapping_sub(p0.wrapping_mul(x)));
    }
    x.wrapping_neg()
}

/// Miller-Rabin with the first 20 prime bases.
fn is_probable_prime(n: &BigUint) -> bool {
    const BASES: [u32; 20] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71];
    let two = BigUint::from(2u32);
    if *n < two {
        return false;
    }
    for &b in BASES.iter() {
        let b = BigUint::from(b);
        if *n == b {
            return true;
        }
        if (n % &b).is_zero() {
            return false;
        }
    }
    let n1 = n - 1u32;
    let s = n1.trailing_zeros().unwrap_or(0);
    let d = &n1 >> s;
    'outer: for &b in BASES.iter() {
        let mut x = BigUint::from(b).modpow(&d, n);
        if x.is_one() || x == n1 {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n1 {
                continue 'outer;
            }
        }
        return false;
    }
    true
}
