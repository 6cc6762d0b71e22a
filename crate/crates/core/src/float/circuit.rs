//! Constraint circuits for float multiplication, division and addition, plus the
//! zero-aware wrappers, comparisons and conversions the inference circuits use.

use super::{Float, FloatAux};
use crate::builder::{Builder, Lc};
use crate::error::{Error, Result};
use crate::field::{Field, FieldElement};
use crate::gadgets::{assert_leq, bit_decompose, compare, exponential_check, permutation_check};

/// Exponents are compared after shifting into `[0, 256)`.
const EXP_SHIFT: i64 = 128;
const EXP_WIDTH: u32 = 8;
/// Tolerated distance, in units of the last place, between `q + (1 - q)` and one.
pub const COMPLEMENT_SLACK_BITS: u32 = 4;

#[derive(Clone, Debug)]
pub enum ZeroFlag {
    Never,
    Always,
    Var(Lc),
}

impl ZeroFlag {
    pub fn lc(&self) -> Lc {
        match self {
            ZeroFlag::Never => Lc::zero(),
            ZeroFlag::Always => Lc::one(),
            ZeroFlag::Var(v) => v.clone(),
        }
    }
}

/// In-circuit float: significand, signed exponent and a zero flag.
#[derive(Clone, Debug)]
pub struct FloatVar {
    pub s: Lc,
    pub e: Lc,
    pub zero: ZeroFlag,
}

/// Precision plus the permutation challenges used by additions.
#[derive(Clone, Debug)]
pub struct FloatCtx {
    pub w: u32,
    pub r: Lc,
    pub z: Lc,
}

impl FloatCtx {
    pub fn new(w: u32, r: Lc, z: Lc) -> Self {
        FloatCtx { w, r, z }
    }

    /// Bit width of the alignment shift handed to the power-of-two check.
    pub fn exp_bits(&self) -> u32 {
        if self.w <= 63 {
            6
        } else {
            7
        }
    }
}

fn fe_i64(f: &Field, v: i64) -> FieldElement {
    f.from_i64(v)
}

impl FloatVar {
    pub fn constant(x: &Float, field: &Field) -> Self {
        if x.is_zero() {
            return FloatVar { s: Lc::zero(), e: Lc::zero(), zero: ZeroFlag::Always };
        }
        FloatVar {
            s: Lc::constant(field.from_u128(x.s())),
            e: Lc::constant(fe_i64(field, x.e() as i64)),
            zero: ZeroFlag::Never,
        }
    }

    /// Current value (prove mode); `None` in shape mode.
    pub fn value(&self, b: &Builder, w: u32) -> Result<Option<Float>> {
        let (Some(s), Some(e)) = (b.value(&self.s), b.value_i64(&self.e)) else {
            return Ok(None);
        };
        let zero = match &self.zero {
            ZeroFlag::Never => false,
            ZeroFlag::Always => true,
            ZeroFlag::Var(v) => b.value(v) == Some(FieldElement::ONE),
        };
        let s = s.to_u128().ok_or_else(|| Error::MalformedFloat("significand out of range".into()))?;
        let e = i32::try_from(e).map_err(|_| Error::ExponentOverflow(e))?;
        Float::from_parts(s, e, zero, w).map(Some)
    }

    fn is_never_zero(&self) -> bool {
        matches!(self.zero, ZeroFlag::Never)
    }
}

/// Allocates a nonzero witness float without range checks.
pub fn alloc_float(b: &mut Builder, label: &str, value: Option<&Float>) -> Result<FloatVar> {
    let f = b.field();
    if let Some(v) = value {
        if v.is_zero() {
            return Err(Error::MalformedFloat(format!("{label} must be nonzero")));
        }
    }
    let s = b.alloc_witness(label, value.map(|v| f.from_u128(v.s())))?;
    let e = b.alloc_witness(label, value.map(|v| fe_i64(&f, v.e() as i64)))?;
    Ok(FloatVar { s: s.into(), e: e.into(), zero: ZeroFlag::Never })
}

/// Allocates a nonzero witness float whose significand is range checked and normalized.
pub fn alloc_checked_float(b: &mut Builder, ctx: &FloatCtx, label: &str, value: Option<&Float>) -> Result<FloatVar> {
    let x = alloc_float(b, label, value)?;
    let bits = bit_decompose(b, label, &x.s, ctx.w)?;
    b.assert_equal(&bits.msb(), &Lc::one())?;
    Ok(x)
}

/// Allocates a public float. Range checks on public floats are the verifier's job.
pub fn alloc_public_float(b: &mut Builder, label: &str, value: Option<&Float>, with_zero_flag: bool) -> Result<FloatVar> {
    let f = b.field();
    let s = b.alloc_public(&format!("{label}.s"), value.map(|v| f.from_u128(v.s())))?;
    let e = b.alloc_public(&format!("{label}.e"), value.map(|v| fe_i64(&f, v.e() as i64)))?;
    let zero = if with_zero_flag {
        let z = b.alloc_public(&format!("{label}.zero"), value.map(|v| FieldElement::from_u64(v.is_zero() as u64)))?;
        ZeroFlag::Var(z.into())
    } else {
        if value.is_some_and(|v| v.is_zero()) {
            return Err(Error::MalformedFloat(format!("{label} must be nonzero")));
        }
        ZeroFlag::Never
    };
    Ok(FloatVar { s: s.into(), e: e.into(), zero })
}

fn theta_var(b: &mut Builder, aux: Option<&FloatAux>) -> Result<Lc> {
    let f = b.field();
    Ok(b.alloc_witness("theta", aux.map(|a| fe_i64(&f, a.theta as i64)))?.into())
}

/// `mid = (theta - (w-1)) 2^w - (theta - w) 2^{w-1}` materialized.
fn interpolated_mid(b: &mut Builder, w: u32, theta: &Lc) -> Result<Lc> {
    let f = b.field();
    let hi = f.pow2(w);
    let lo = f.pow2(w - 1);
    let lc = theta
        .scale(&f, f.sub(hi, lo))
        .add_const(&f, f.sub(f.mul(lo, FieldElement::from_u64(w as u64)), f.mul(hi, FieldElement::from_u64(w as u64 - 1))));
    Ok(b.materialize("mid", &lc)?.into())
}

/// `(theta - w)(theta - (w-1)) = 0`
fn theta_selector(b: &mut Builder, theta: &Lc, lo: &Lc) -> Result<()> {
    let f = b.field();
    let t0 = theta.sub(&f, lo);
    let t1 = t0.add_const(&f, f.neg(FieldElement::ONE));
    b.enforce(t0, t1, Lc::zero())
}

/// `z = delta^-1 (x - y)`, `z <= x`, and `s_c` normalized to `w` bits.
fn rounding_tail(b: &mut Builder, w: u32, x: &Lc, y: &Lc, cut: Option<&Lc>, s_c: &Lc, width: u32) -> Result<()> {
    let f = b.field();
    let z = b.materialize("z", &x.sub(&f, y).scale(&f, f.pow2(w - 1)))?;
    let z: Lc = match cut {
        Some(cut) => b.mul("z eff", &Lc::one().sub(&f, cut), &z.into())?,
        None => z.into(),
    };
    assert_leq(b, &z, x, width)?;
    let bits = bit_decompose(b, "s_c", s_c, w)?;
    b.assert_equal(&bits.msb(), &Lc::one())
}

/// Multiplication box for nonzero operands.
pub fn synth_float_mul(b: &mut Builder, ctx: &FloatCtx, a: &FloatVar, bb: &FloatVar, c: &FloatVar, aux: Option<&FloatAux>) -> Result<()> {
    let f = b.field();
    let w = ctx.w;
    let theta = theta_var(b, aux)?;
    // e_c - theta = e_a + e_b
    b.assert_equal(&c.e.sub(&f, &theta), &a.e.add(&f, &bb.e))?;
    theta_selector(b, &theta, &b.constant_i64(w as i64 - 1))?;
    let mid = interpolated_mid(b, w, &theta)?;
    let x = b.mul("x", &a.s, &bb.s)?;
    let y = b.mul("y", &c.s, &mid)?;
    rounding_tail(b, w, &x, &y, None, &c.s, 2 * w)
}

/// Division box for nonzero operands.
pub fn synth_float_div(b: &mut Builder, ctx: &FloatCtx, a: &FloatVar, bb: &FloatVar, c: &FloatVar, aux: Option<&FloatAux>) -> Result<()> {
    let f = b.field();
    let w = ctx.w;
    let theta = theta_var(b, aux)?;
    // e_c + theta = e_a - e_b
    b.assert_equal(&c.e.add(&f, &theta), &a.e.sub(&f, &bb.e))?;
    theta_selector(b, &theta, &b.constant_i64(w as i64 - 1))?;
    let mid = interpolated_mid(b, w, &theta)?;
    let x = b.mul("x", &a.s, &mid)?;
    let y = b.mul("y", &c.s, &bb.s)?;
    rounding_tail(b, w, &x, &y, None, &c.s, 2 * w)
}

/// Addition box for nonzero operands, including the large-gap cutoff.
pub fn synth_float_add(b: &mut Builder, ctx: &FloatCtx, a: &FloatVar, bb: &FloatVar, c: &FloatVar, aux: Option<&FloatAux>) -> Result<()> {
    let f = b.field();
    let w = ctx.w;
    // permuted operands: hat_a has the larger exponent
    let (hi, lo) = match aux {
        Some(x) if x.swapped => (bb, a),
        _ => (a, bb),
    };
    let pick = |b: &Builder, lc: &Lc| aux.and_then(|_| b.value(lc));
    let (hs, he, ls, le) = (pick(b, &hi.s), pick(b, &hi.e), pick(b, &lo.s), pick(b, &lo.e));
    let hat_a_s: Lc = b.alloc_witness("hat_a.s", hs)?.into();
    let hat_a_e: Lc = b.alloc_witness("hat_a.e", he)?.into();
    let hat_b_s: Lc = b.alloc_witness("hat_b.s", ls)?.into();
    let hat_b_e: Lc = b.alloc_witness("hat_b.e", le)?.into();
    permutation_check(
        b,
        [(&a.e, &a.s), (&bb.e, &bb.s)],
        [(&hat_a_e, &hat_a_s), (&hat_b_e, &hat_b_s)],
        &ctx.r,
        &ctx.z,
    )?;
    let shift = fe_i64(&f, EXP_SHIFT);
    assert_leq(b, &hat_b_e.add_const(&f, shift), &hat_a_e.add_const(&f, shift), EXP_WIDTH)?;
    let lambda = hat_a_e.sub(&f, &hat_b_e);
    // cut = [w + 1 <= lambda]
    let cut = compare(b, &b.constant_i64(w as i64 + 1), &lambda, EXP_WIDTH)?;
    let lambda_eff = b.mul("lambda eff", &Lc::one().sub(&f, &cut), &lambda)?;
    let mid_prime_value = aux.map(|x| f.from_biguint(&x.mid_prime()));
    let mid_prime: Lc = b.alloc_witness("mid'", mid_prime_value)?.into();
    exponential_check(b, &lambda_eff, &mid_prime, ctx.exp_bits())?;
    // theta = e_c - hat_b.e - (lambda - lambda_eff); zero on the cutoff path
    let theta = c.e.sub(&f, &hat_b_e).sub(&f, &lambda).add(&f, &lambda_eff);
    theta_selector(b, &theta, &lambda_eff)?;
    let mid = b.mul("mid", &mid_prime, &theta.sub(&f, &lambda_eff).add_const(&f, FieldElement::ONE))?;
    let x = b.mul("hat_a.s * mid'", &hat_a_s, &mid_prime)?.add(&f, &hat_b_s);
    let y = b.mul("y", &c.s, &mid)?;
    rounding_tail(b, w, &x, &y, Some(&cut), &c.s, 2 * w + 1)?;
    b.enforce(cut.clone(), c.s.sub(&f, &hat_a_s), Lc::zero())?;
    b.enforce(cut, c.e.sub(&f, &hat_a_e), Lc::zero())
}

#[derive(Clone, Copy)]
enum Op {
    Mul,
    Div,
    Add,
}

/// Runs the native op on current values, allocates the result and emits the box.
fn core_op(b: &mut Builder, ctx: &FloatCtx, op: Op, a: &FloatVar, bb: &FloatVar) -> Result<FloatVar> {
    let w = ctx.w;
    let (c_val, aux) = match (a.value(b, w)?, bb.value(b, w)?) {
        (Some(x), Some(y)) => {
            let (c, aux) = match op {
                Op::Mul => x.mul(&y)?,
                Op::Div => x.div(&y)?,
                Op::Add => x.add(&y)?,
            };
            (Some(c), aux)
        }
        _ => (None, None),
    };
    let label = match op {
        Op::Mul => "mul.c",
        Op::Div => "div.c",
        Op::Add => "add.c",
    };
    let c = alloc_float(b, label, c_val.as_ref())?;
    match op {
        Op::Mul => synth_float_mul(b, ctx, a, bb, &c, aux.as_ref())?,
        Op::Div => synth_float_div(b, ctx, a, bb, &c, aux.as_ref())?,
        Op::Add => synth_float_add(b, ctx, a, bb, &c, aux.as_ref())?,
    }
    Ok(c)
}

/// Replaces a possibly-zero operand by one so the core boxes always see normalized inputs.
fn substitute_one(b: &mut Builder, ctx: &FloatCtx, x: &FloatVar) -> Result<FloatVar> {
    match &x.zero {
        ZeroFlag::Never => Ok(x.clone()),
        ZeroFlag::Always => Ok(FloatVar::constant(&Float::one(ctx.w), &b.field())),
        ZeroFlag::Var(z) => {
            let one = FloatVar::constant(&Float::one(ctx.w), &b.field());
            let s = b.select("subst.s", z, &one.s, &x.s)?;
            let e = b.select("subst.e", z, &one.e, &x.e)?;
            Ok(FloatVar { s, e, zero: ZeroFlag::Never })
        }
    }
}

fn zero_out(b: &mut Builder, flag: Lc, c: FloatVar) -> Result<FloatVar> {
    let s = b.select("zero.s", &flag, &Lc::zero(), &c.s)?;
    let e = b.select("zero.e", &flag, &Lc::zero(), &c.e)?;
    Ok(FloatVar { s, e, zero: ZeroFlag::Var(flag) })
}

/// Boolean OR of two zero flags.
fn either_zero(b: &mut Builder, x: &ZeroFlag, y: &ZeroFlag) -> Result<ZeroFlag> {
    let f = b.field();
    Ok(match (x, y) {
        (ZeroFlag::Always, _) | (_, ZeroFlag::Always) => ZeroFlag::Always,
        (ZeroFlag::Never, ZeroFlag::Never) => ZeroFlag::Never,
        (ZeroFlag::Var(v), ZeroFlag::Never) | (ZeroFlag::Never, ZeroFlag::Var(v)) => ZeroFlag::Var(v.clone()),
        (ZeroFlag::Var(u), ZeroFlag::Var(v)) => {
            let both = b.mul("or", u, v)?;
            ZeroFlag::Var(u.add(&f, v).sub(&f, &both))
        }
    })
}

/// Zero-aware product.
pub fn float_mul(b: &mut Builder, ctx: &FloatCtx, a: &FloatVar, bb: &FloatVar) -> Result<FloatVar> {
    if matches!(a.zero, ZeroFlag::Always) || matches!(bb.zero, ZeroFlag::Always) {
        return Ok(FloatVar::constant(&Float::zero(ctx.w), &b.field()));
    }
    let a1 = substitute_one(b, ctx, a)?;
    let b1 = substitute_one(b, ctx, bb)?;
    let c = core_op(b, ctx, Op::Mul, &a1, &b1)?;
    match either_zero(b, &a.zero, &bb.zero)? {
        ZeroFlag::Never => Ok(c),
        flag => zero_out(b, flag.lc(), c),
    }
}

/// Zero-aware quotient; the divisor must be nonzero.
pub fn float_div(b: &mut Builder, ctx: &FloatCtx, a: &FloatVar, bb: &FloatVar) -> Result<FloatVar> {
    let divisor = match &bb.zero {
        ZeroFlag::Always => return Err(Error::DivisionByZero),
        ZeroFlag::Never => bb.clone(),
        ZeroFlag::Var(z) => {
            b.assert_equal(z, &Lc::zero())?;
            FloatVar { zero: ZeroFlag::Never, ..bb.clone() }
        }
    };
    match &a.zero {
        ZeroFlag::Always => Ok(FloatVar::constant(&Float::zero(ctx.w), &b.field())),
        ZeroFlag::Never => core_op(b, ctx, Op::Div, a, &divisor),
        ZeroFlag::Var(z) => {
            let a1 = substitute_one(b, ctx, a)?;
            let c = core_op(b, ctx, Op::Div, &a1, &divisor)?;
            zero_out(b, z.clone(), c)
        }
    }
}

/// Zero-aware sum.
pub fn float_add(b: &mut Builder, ctx: &FloatCtx, a: &FloatVar, bb: &FloatVar) -> Result<FloatVar> {
    if matches!(a.zero, ZeroFlag::Always) {
        return Ok(bb.clone());
    }
    if matches!(bb.zero, ZeroFlag::Always) {
        return Ok(a.clone());
    }
    if a.is_never_zero() && bb.is_never_zero() {
        return core_op(b, ctx, Op::Add, a, bb);
    }
    let a1 = substitute_one(b, ctx, a)?;
    let b1 = substitute_one(b, ctx, bb)?;
    let mut c = core_op(b, ctx, Op::Add, &a1, &b1)?;
    if let ZeroFlag::Var(zb) = &bb.zero {
        c = select_float(b, zb, a, &c)?;
    }
    if let ZeroFlag::Var(za) = &a.zero {
        c = select_float(b, za, bb, &c)?;
    }
    c.zero = match (&a.zero, &bb.zero) {
        (ZeroFlag::Var(u), ZeroFlag::Var(v)) => ZeroFlag::Var(b.mul("and", u, v)?),
        _ => ZeroFlag::Never,
    };
    Ok(c)
}

/// `bit ? x : y`
pub fn select_float(b: &mut Builder, bit: &Lc, x: &FloatVar, y: &FloatVar) -> Result<FloatVar> {
    let s = b.select("sel.s", bit, &x.s, &y.s)?;
    let e = b.select("sel.e", bit, &x.e, &y.e)?;
    let zero = match (&x.zero, &y.zero) {
        (ZeroFlag::Never, ZeroFlag::Never) => ZeroFlag::Never,
        (ZeroFlag::Always, ZeroFlag::Always) => ZeroFlag::Always,
        (zx, zy) => ZeroFlag::Var(b.select("sel.zero", bit, &zx.lc(), &zy.lc())?),
    };
    Ok(FloatVar { s, e, zero })
}

pub fn assert_float_equal(b: &mut Builder, x: &FloatVar, y: &FloatVar) -> Result<()> {
    b.assert_equal(&x.s, &y.s)?;
    b.assert_equal(&x.e, &y.e)?;
    let (zx, zy) = (x.zero.lc(), y.zero.lc());
    if zx != zy {
        b.assert_equal(&zx, &zy)?;
    }
    Ok(())
}

/// Returns a bit that is 1 iff `a <= b`; zero sorts below every nonzero value.
pub fn float_leq(b: &mut Builder, ctx: &FloatCtx, a: &FloatVar, bb: &FloatVar) -> Result<Lc> {
    let f = b.field();
    if matches!(a.zero, ZeroFlag::Always) {
        return Ok(Lc::one());
    }
    if matches!(bb.zero, ZeroFlag::Always) {
        return Ok(Lc::one().sub(&f, &a.zero.lc()));
    }
    let shift = fe_i64(&f, EXP_SHIFT);
    let e_ge = compare(b, &bb.e.add_const(&f, shift), &a.e.add_const(&f, shift), EXP_WIDTH)?;
    let e_lt = Lc::one().sub(&f, &e_ge);
    let e_eq = b.is_zero("exp eq", &a.e.sub(&f, &bb.e))?;
    let s_le = compare(b, &a.s, &bb.s, ctx.w)?;
    let mut res = e_lt.add(&f, &b.mul("leq", &e_eq, &s_le)?);
    if let ZeroFlag::Var(zb) = &bb.zero {
        res = b.mul("leq zb", &Lc::one().sub(&f, zb), &res)?;
    }
    if let ZeroFlag::Var(za) = &a.zero {
        res = b.select("leq za", za, &Lc::one(), &res)?;
    }
    Ok(res)
}

/// Native twin of [`int_to_float`].
pub fn int_to_float_native(x: u64, w: u32, zero_as: &Float) -> Result<Float> {
    if x == 0 {
        Ok(*zero_as)
    } else {
        Float::from_int_floor(x, w)
    }
}

fn bits_for(v: u64) -> u32 {
    64 - v.leading_zeros()
}

/// Converts an integer `0 <= x < 2^max_bits` to a float with floor rounding; zero maps to `zero_as`.
///
/// Enforces `x 2^a = s 2^b + r` with `a b = 0`, `0 <= r < 2^b`, `s` normalized, `e = b - a`.
pub fn int_to_float(b: &mut Builder, ctx: &FloatCtx, x: &Lc, max_bits: u32, zero_as: &Float) -> Result<FloatVar> {
    let f = b.field();
    let w = ctx.w;
    let is_zero = b.is_zero("itf zero", x)?;
    let x1 = x.add(&f, &is_zero);
    let xv = b.value_u128(&x1).map(|v| v as u64);
    let (av, bv) = match xv {
        Some(v) => {
            let k = bits_for(v);
            (Some(w.saturating_sub(k)), Some(k.saturating_sub(w)))
        }
        None => (None, None),
    };
    let a: Lc = b.alloc_witness("itf a", av.map(|v| FieldElement::from_u64(v as u64)))?.into();
    let pa: Lc = b.alloc_witness("itf 2^a", av.map(|v| f.pow2(v)))?.into();
    exponential_check(b, &a, &pa, bits_for(w as u64 - 1).max(1))?;
    let (shift_b, pb, r): (Lc, Lc, Lc) = if max_bits > w {
        let bw = bits_for((max_bits - w) as u64);
        let sb: Lc = b.alloc_witness("itf b", bv.map(|v| FieldElement::from_u64(v as u64)))?.into();
        let pb: Lc = b.alloc_witness("itf 2^b", bv.map(|v| f.pow2(v)))?.into();
        exponential_check(b, &sb, &pb, bw)?;
        b.enforce(a.clone(), sb.clone(), Lc::zero())?;
        let rv = xv.zip(bv).map(|(v, s)| FieldElement::from_u64(v & ((1u64 << s) - 1)));
        let r: Lc = b.alloc_witness("itf r", rv)?.into();
        let width = max_bits - w + 1;
        bit_decompose(b, "itf r", &r, width)?;
        assert_leq(b, &r, &pb.add_const(&f, f.neg(FieldElement::ONE)), width)?;
        (sb, pb, r)
    } else {
        (Lc::zero(), Lc::one(), Lc::zero())
    };
    let sv = xv.zip(av).zip(bv).map(|((v, a), s)| f.from_u128(((v >> s) as u128) << a));
    let s: Lc = b.alloc_witness("itf s", sv)?.into();
    let lhs = b.mul("itf x 2^a", &x1, &pa)?;
    b.enforce(s.clone(), pb, lhs.sub(&f, &r))?;
    let bits = bit_decompose(b, "itf s", &s, w)?;
    b.assert_equal(&bits.msb(), &Lc::one())?;
    let converted = FloatVar { s, e: shift_b.sub(&f, &a), zero: ZeroFlag::Never };
    let fallback = FloatVar::constant(zero_as, &f);
    select_float(b, &is_zero, &fallback, &converted)
}

/// Enforces that `q + c_hat` lands within a few units of the last place of one,
/// i.e. `c_hat` is a faithful complement `1 - q`.
pub fn complement_check(b: &mut Builder, ctx: &FloatCtx, q: &FloatVar, c_hat: &FloatVar) -> Result<()> {
    let f = b.field();
    let w = ctx.w;
    let sum = float_add(b, ctx, q, c_hat)?;
    // t = 1 when the sum is at or above one (exponent -(w-1)), 0 when just below (exponent -w)
    let tv = b.value_i64(&sum.e).map(|e| FieldElement::from_u64((e == -(w as i64 - 1)) as u64));
    let t: Lc = b.alloc_witness("complement t", tv)?.into();
    b.assert_boolean(&t)?;
    b.assert_equal(&sum.e, &t.add_const(&f, fe_i64(&f, -(w as i64))))?;
    // dev = t (s - 2^{w-1}) + (1 - t)(2^w - 1 - s)
    let below = Lc::constant(f.sub(f.pow2(w), FieldElement::ONE)).sub(&f, &sum.s);
    let above = sum.s.add_const(&f, f.neg(f.pow2(w - 1)));
    let dev = below.add(&f, &b.mul("complement dev", &t, &above.sub(&f, &below))?);
    bit_decompose(b, "complement dev", &dev, COMPLEMENT_SLACK_BITS)?;
    Ok(())
}

/// Native complement `1 - q` rounded to nearest.
pub fn complement_native(q: &Float) -> Result<Float> {
    let one = num_rational::BigRational::from_integer(1.into());
    Float::encode(&(one - q.decode()), q.w())
}

/// `min(max(x, lo), hi)` with the same selection order as the native clamp.
pub fn clamp(b: &mut Builder, ctx: &FloatCtx, x: &FloatVar, lo: &Float, hi: &Float) -> Result<FloatVar> {
    let f = b.field();
    let lo_v = FloatVar::constant(lo, &f);
    let hi_v = FloatVar::constant(hi, &f);
    let below = float_leq(b, ctx, x, &lo_v)?;
    let t = select_float(b, &below, &lo_v, x)?;
    let above = float_leq(b, ctx, &hi_v, &t)?;
    select_float(b, &above, &hi_v, &t)
}

/// Native twin of [`clamp`].
pub fn clamp_native(x: &Float, lo: &Float, hi: &Float) -> Float {
    let t = if x.leq(lo) { *lo } else { *x };
    if hi.leq(&t) {
        *hi
    } else {
        t
    }
}
