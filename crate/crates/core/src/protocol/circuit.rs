//! One inference iteration as a constraint system: commitment openings, then
//! the truth pass, then the quality pass.

use crate::builder::{Builder, Lc};
use crate::commitment::{synth_open, SpongeParams};
use crate::error::{Error, Result};
use crate::field::{Field, FieldElement};
use crate::float::circuit::{
    alloc_checked_float, alloc_public_float, assert_float_equal, clamp, complement_check, float_add, float_div,
    float_leq, float_mul, int_to_float, select_float, FloatCtx, FloatVar,
};
use crate::float::Float;
use crate::gadgets::compare;
use crate::inference::{crh_thresholds, int_float, zc_clamp_bounds, Algorithm};

use super::Dims;

/// Values for the public slots, in allocation order.
#[derive(Clone, Debug, PartialEq)]
pub struct PublicValues {
    /// `m` worker commitments followed by the truth commitment.
    pub commitments: Vec<FieldElement>,
    pub r: FieldElement,
    pub z: FieldElement,
    pub q_in: Vec<Float>,
    pub q_out: Vec<Float>,
}

/// Prover-only values.
#[derive(Clone, Debug)]
pub struct PrivateValues {
    /// `answers[j][i]`: worker-major, matching the commitment messages.
    pub answers: Vec<Vec<u32>>,
    pub labels: Vec<u32>,
    /// `m` worker openings followed by the truth opening.
    pub randomness: Vec<FieldElement>,
    /// ZenCrowd only: claimed `1 - q_j`.
    pub complements: Vec<Float>,
}

/// Which public Q slots an algorithm uses, and whether they carry a zero flag.
pub(crate) fn q_slots(alg: Algorithm) -> (bool, bool) {
    match alg {
        Algorithm::Mv => (false, false),
        Algorithm::Crh => (true, true),
        Algorithm::Zc => (true, false),
    }
}

/// Number of public field elements per Q float.
pub(crate) fn q_width(alg: Algorithm, input: bool) -> usize {
    match (alg, input) {
        (Algorithm::Mv, _) => 0,
        (Algorithm::Crh, true) => 3,
        _ => 2,
    }
}

pub(crate) fn num_public(alg: Algorithm, dims: Dims) -> usize {
    dims.m + 1 + 2 + dims.m * (q_width(alg, true) + q_width(alg, false))
}

/// A choice in `[0, l)` with its one-hot expansion.
struct ChoiceVar {
    value: Lc,
    onehot: Vec<Lc>,
}

fn alloc_choice(b: &mut Builder, l: u32, label: &str, v: Option<u32>) -> Result<ChoiceVar> {
    let f = b.field();
    if l == 2 {
        let x: Lc = b.alloc_witness(label, v.map(|v| FieldElement::from_u64(v as u64)))?.into();
        b.assert_boolean(&x)?;
        let onehot = vec![Lc::one().sub(&f, &x), x.clone()];
        return Ok(ChoiceVar { value: x, onehot });
    }
    let mut onehot = Vec::with_capacity(l as usize);
    let mut sum = Lc::zero();
    let mut value = Lc::zero();
    for k in 0..l {
        let bit: Lc = b.alloc_witness(label, v.map(|v| FieldElement::from_u64((v == k) as u64)))?.into();
        b.assert_boolean(&bit)?;
        sum = sum.add(&f, &bit);
        value = value.add_scaled(&f, &bit, FieldElement::from_u64(k as u64));
        onehot.push(bit);
    }
    b.assert_equal(&sum, &Lc::one())?;
    Ok(ChoiceVar { value, onehot })
}

fn bits_for(v: u64) -> u32 {
    (64 - v.leading_zeros()).max(1)
}

struct Inputs {
    commitments: Vec<Lc>,
    ctx: FloatCtx,
    q_in: Vec<FloatVar>,
    q_out: Vec<FloatVar>,
    /// `answers[j][i]`
    answers: Vec<Vec<ChoiceVar>>,
    labels: Vec<ChoiceVar>,
    randomness: Vec<Lc>,
}

fn alloc_inputs(b: &mut Builder, alg: Algorithm, dims: Dims, w: u32, pubs: Option<&PublicValues>, privs: Option<&PrivateValues>) -> Result<Inputs> {
    let Dims { n, m, l } = dims;
    let commitments = (0..=m)
        .map(|j| {
            let label = if j < m { format!("com.worker{j}") } else { "com.truth".to_string() };
            b.alloc_public(&label, pubs.map(|p| p.commitments[j])).map(Lc::from)
        })
        .collect::<Result<Vec<_>>>()?;
    let r: Lc = b.alloc_public("challenge.r", pubs.map(|p| p.r))?.into();
    let z: Lc = b.alloc_public("challenge.z", pubs.map(|p| p.z))?.into();
    let ctx = FloatCtx::new(w, r, z);
    let (has_q, in_zero_flag) = q_slots(alg);
    let (mut q_in, mut q_out) = (Vec::new(), Vec::new());
    if has_q {
        for j in 0..m {
            q_in.push(alloc_public_float(b, &format!("q_in.{j}"), pubs.map(|p| &p.q_in[j]), in_zero_flag)?);
        }
        for j in 0..m {
            q_out.push(alloc_public_float(b, &format!("q_out.{j}"), pubs.map(|p| &p.q_out[j]), false)?);
        }
    }
    b.region("inputs");
    let mut answers = Vec::with_capacity(m);
    for j in 0..m {
        let column = (0..n)
            .map(|i| alloc_choice(b, l, "answer", privs.map(|p| p.answers[j][i])))
            .collect::<Result<Vec<_>>>()?;
        answers.push(column);
    }
    let labels = (0..n).map(|i| alloc_choice(b, l, "label", privs.map(|p| p.labels[i]))).collect::<Result<Vec<_>>>()?;
    let randomness = (0..=m)
        .map(|j| b.alloc_witness("opening", privs.map(|p| p.randomness[j])).map(Lc::from))
        .collect::<Result<Vec<_>>>()?;
    Ok(Inputs { commitments, ctx, q_in, q_out, answers, labels, randomness })
}

fn synth_openings(b: &mut Builder, sponge: &SpongeParams, inp: &Inputs) -> Result<()> {
    b.region("openings");
    let m = inp.answers.len();
    for j in 0..m {
        let msg: Vec<Lc> = inp.answers[j].iter().map(|c| c.value.clone()).collect();
        synth_open(b, sponge, &inp.commitments[j], &msg, &inp.randomness[j])?;
    }
    let msg: Vec<Lc> = inp.labels.iter().map(|c| c.value.clone()).collect();
    synth_open(b, sponge, &inp.commitments[m], &msg, &inp.randomness[m])
}

/// Index of the strictly largest entry, ties to the lowest index, via `better(candidate, best)`.
fn argmax<T: Clone>(
    b: &mut Builder,
    items: &[T],
    mut better: impl FnMut(&mut Builder, &T, &T) -> Result<Lc>,
    mut pick: impl FnMut(&mut Builder, &Lc, &T, &T) -> Result<T>,
) -> Result<Lc> {
    let mut best = items[0].clone();
    let mut idx = Lc::zero();
    for (k, item) in items.iter().enumerate().skip(1) {
        let gt = better(b, item, &best)?;
        best = pick(b, &gt, item, &best)?;
        idx = b.select("argmax idx", &gt, &Lc::constant(FieldElement::from_u64(k as u64)), &idx)?;
    }
    Ok(idx)
}

fn synth_mv(b: &mut Builder, dims: Dims, inp: &Inputs) -> Result<()> {
    b.region("truth");
    let f = b.field();
    let width = bits_for(dims.m as u64);
    for i in 0..dims.n {
        let counts: Vec<Lc> = (0..dims.l as usize)
            .map(|k| inp.answers.iter().fold(Lc::zero(), |acc, col| acc.add(&f, &col[i].onehot[k])))
            .collect();
        let label = argmax(
            b,
            &counts,
            |b, cand, best| Ok(Lc::one().sub(&f, &compare(b, cand, best, width)?)),
            |b, gt, cand, best| b.select("argmax count", gt, cand, best),
        )?;
        b.assert_equal(&label, &inp.labels[i].value)?;
    }
    Ok(())
}

/// `choice ? options[choice] : ...` over a one-hot selector.
fn select_onehot(b: &mut Builder, onehot: &[Lc], options: &[FloatVar]) -> Result<FloatVar> {
    let mut acc = options[0].clone();
    for k in 1..options.len() {
        acc = select_float(b, &onehot[k], &options[k], &acc)?;
    }
    Ok(acc)
}

fn synth_crh(b: &mut Builder, dims: Dims, w: u32, smoothing: &Float, inp: &Inputs) -> Result<()> {
    let f = b.field();
    let ctx = &inp.ctx;
    let Dims { n, m, l } = dims;
    b.region("truth");
    let zero = FloatVar::constant(&Float::zero(w), &f);
    let mut scaled = Vec::with_capacity(m);
    for q in &inp.q_in {
        let mut row = vec![zero.clone(), q.clone()];
        for k in 2..l as u64 {
            row.push(float_mul(b, ctx, q, &FloatVar::constant(&int_float(k, w)?, &f))?);
        }
        row.truncate(l as usize);
        scaled.push(row);
    }
    let thresholds: Vec<FloatVar> = crh_thresholds(l, w)?.iter().map(|t| FloatVar::constant(t, &f)).collect();
    for i in 0..n {
        let mut num = zero.clone();
        let mut den = zero.clone();
        for j in 0..m {
            let term = select_onehot(b, &inp.answers[j][i].onehot, &scaled[j])?;
            num = float_add(b, ctx, &num, &term)?;
            den = float_add(b, ctx, &den, &inp.q_in[j])?;
        }
        let soft = float_div(b, ctx, &num, &den)?;
        let mut label = Lc::zero();
        for t in &thresholds {
            let le = float_leq(b, ctx, &soft, t)?;
            label = label.add(&f, &Lc::one().sub(&f, &le));
        }
        b.assert_equal(&label, &inp.labels[i].value)?;
    }

    b.region("quality");
    let mut distances = Vec::with_capacity(m);
    for j in 0..m {
        let mut d = Lc::zero();
        for i in 0..n {
            let (v, t) = (&inp.answers[j][i], &inp.labels[i]);
            let neq = if l == 2 {
                let both = b.mul("xor", &v.value, &t.value)?;
                v.value.add(&f, &t.value).sub(&f, &both.scale(&f, FieldElement::from_u64(2)))
            } else {
                let mut eq = Lc::zero();
                for k in 0..l as usize {
                    eq = eq.add(&f, &b.mul("eq", &v.onehot[k], &t.onehot[k])?);
                }
                Lc::one().sub(&f, &eq)
            };
            d = d.add(&f, &neq);
        }
        distances.push(d);
    }
    let total = distances.iter().fold(Lc::zero(), |acc, d| acc.add(&f, d));
    let total = int_to_float(b, ctx, &total, bits_for((n * m) as u64), smoothing)?;
    for (j, d) in distances.iter().enumerate() {
        let dj = int_to_float(b, ctx, d, bits_for(n as u64), smoothing)?;
        let ratio = float_div(b, ctx, &total, &dj)?;
        assert_float_equal(b, &ratio, &inp.q_out[j])?;
    }
    Ok(())
}

fn synth_zc(b: &mut Builder, dims: Dims, w: u32, inp: &Inputs, privs: Option<&PrivateValues>) -> Result<()> {
    let f = b.field();
    let ctx = &inp.ctx;
    let Dims { n, m, l } = dims;
    b.region("truth");
    let mut comp = Vec::with_capacity(m);
    for (j, q) in inp.q_in.iter().enumerate() {
        let c = alloc_checked_float(b, ctx, "complement", privs.map(|p| &p.complements[j]))?;
        complement_check(b, ctx, q, &c)?;
        comp.push(c);
    }
    let mut posteriors = Vec::with_capacity(n);
    for i in 0..n {
        let mut weights = Vec::with_capacity(l as usize);
        for k in 0..l as usize {
            let mut acc: Option<FloatVar> = None;
            for j in 0..m {
                let factor = select_float(b, &inp.answers[j][i].onehot[k], &inp.q_in[j], &comp[j])?;
                acc = Some(match acc {
                    None => factor,
                    Some(a) => float_mul(b, ctx, &a, &factor)?,
                });
            }
            weights.push(acc.expect("m > 0"));
        }
        let mut total = weights[0].clone();
        for x in &weights[1..] {
            total = float_add(b, ctx, &total, x)?;
        }
        let p = weights.iter().map(|x| float_div(b, ctx, x, &total)).collect::<Result<Vec<_>>>()?;
        let label = argmax(
            b,
            &p,
            |b, cand, best| Ok(Lc::one().sub(&f, &float_leq(b, ctx, cand, best)?)),
            |b, gt, cand, best| select_float(b, gt, cand, best),
        )?;
        b.assert_equal(&label, &inp.labels[i].value)?;
        posteriors.push(p);
    }

    b.region("quality");
    let zero = FloatVar::constant(&Float::zero(w), &f);
    let count = FloatVar::constant(&int_float(n as u64, w)?, &f);
    let (lo, hi) = zc_clamp_bounds(w)?;
    for j in 0..m {
        let mut acc = zero.clone();
        for (i, post) in posteriors.iter().enumerate() {
            for (k, p) in post.iter().enumerate() {
                let term = select_float(b, &inp.answers[j][i].onehot[k], p, &zero)?;
                acc = float_add(b, ctx, &acc, &term)?;
            }
        }
        let mean = float_div(b, ctx, &acc, &count)?;
        let q = clamp(b, ctx, &mean, &lo, &hi)?;
        assert_float_equal(b, &q, &inp.q_out[j])?;
    }
    Ok(())
}

/// Synthesis settings shared by prover and verifier.
pub(crate) struct CircuitSpec<'a> {
    pub field: Field,
    pub sponge: &'a SpongeParams,
    pub w: u32,
    pub smoothing: Float,
    pub alg: Algorithm,
    pub dims: Dims,
}

/// Emits the iteration circuit. With values it also assigns the witness.
pub(crate) fn synthesize(spec: &CircuitSpec<'_>, values: Option<(&PublicValues, &PrivateValues)>) -> Result<Builder> {
    let mut b = match values {
        Some(_) => Builder::prove(spec.field),
        None => Builder::shape(spec.field),
    };
    let (pubs, privs) = match values {
        Some((p, q)) => (Some(p), Some(q)),
        None => (None, None),
    };
    if let Some((p, q)) = values {
        check_value_shapes(spec, p, q)?;
    }
    let inp = alloc_inputs(&mut b, spec.alg, spec.dims, spec.w, pubs, privs)?;
    synth_openings(&mut b, spec.sponge, &inp)?;
    match spec.alg {
        Algorithm::Mv => synth_mv(&mut b, spec.dims, &inp)?,
        Algorithm::Crh => synth_crh(&mut b, spec.dims, spec.w, &spec.smoothing, &inp)?,
        Algorithm::Zc => synth_zc(&mut b, spec.dims, spec.w, &inp, privs)?,
    }
    Ok(b)
}

fn check_value_shapes(spec: &CircuitSpec<'_>, p: &PublicValues, q: &PrivateValues) -> Result<()> {
    let Dims { n, m, .. } = spec.dims;
    let q_len = if spec.alg == Algorithm::Mv { 0 } else { m };
    let checks = [
        (p.commitments.len(), m + 1),
        (p.q_in.len(), q_len),
        (p.q_out.len(), q_len),
        (q.answers.len(), m),
        (q.labels.len(), n),
        (q.randomness.len(), m + 1),
        (q.complements.len(), if spec.alg == Algorithm::Zc { m } else { 0 }),
    ];
    for (got, want) in checks {
        if got != want {
            return Err(Error::LengthMismatch(got, want));
        }
    }
    if let Some(col) = q.answers.iter().find(|c| c.len() != n) {
        return Err(Error::LengthMismatch(col.len(), n));
    }
    Ok(())
}
