//! Range, comparison, power-of-two and two-pair permutation gadgets.

use crate::builder::{Builder, Lc};
use crate::error::{Error, Result};
use crate::field::FieldElement;
use crate::r1cs::VarId;

/// Bits of a decomposed value, least significant first.
#[derive(Clone, Debug)]
pub struct BitVector {
    pub bits: Vec<VarId>,
    pub width: u32,
}

impl BitVector {
    pub fn bit(&self, i: usize) -> Lc {
        self.bits[i].into()
    }

    pub fn msb(&self) -> Lc {
        self.bit(self.bits.len() - 1)
    }
}

fn fits(v: FieldElement, width: u32) -> bool {
    v.bit_len() <= width
}

/// Emits `v = sum 2^i v_i` and `(1 - v_i) v_i = 0` for every bit: `width + 1` constraints.
pub fn bit_decompose(b: &mut Builder, label: &str, v: &Lc, width: u32) -> Result<BitVector> {
    let f = b.field();
    let value = b.value(v);
    if let Some(x) = value {
        if !fits(x, width) && !b.is_lenient() {
            return Err(Error::WitnessOutOfRange { label: label.to_string(), width });
        }
    }
    let mut bits = Vec::with_capacity(width as usize);
    let mut recomposed = Lc::zero();
    for i in 0..width {
        let bit = value.map(|x| FieldElement::from_u64(x.bit(i as usize) as u64));
        let var = b.alloc_witness(label, bit)?;
        b.assert_boolean(&var.into())?;
        recomposed = recomposed.add_scaled(&f, &var.into(), f.pow2(i));
        bits.push(var);
    }
    b.assert_equal(&recomposed, v)?;
    Ok(BitVector { bits, width })
}

/// Returns a bit that is 1 iff `a <= b`, for inputs below `2^width`:
/// `m = b - a + 2^width` is decomposed into `width + 1` bits and its top bit is the answer.
pub fn compare(b: &mut Builder, a: &Lc, rhs: &Lc, width: u32) -> Result<Lc> {
    if !b.is_lenient() {
        for x in [a, rhs] {
            if let Some(v) = b.value(x) {
                if !fits(v, width) {
                    return Err(Error::WitnessOutOfRange { label: "compare input".into(), width });
                }
            }
        }
    }
    let f = b.field();
    let m = rhs.sub(&f, a).add_const(&f, f.pow2(width));
    let bits = bit_decompose(b, "compare", &m, width + 1)?;
    Ok(bits.msb())
}

/// Enforces `a <= b` (compare plus one constraint fixing the result bit).
pub fn assert_leq(b: &mut Builder, a: &Lc, rhs: &Lc, width: u32) -> Result<()> {
    let bit = compare(b, a, rhs, width)?;
    b.assert_equal(&bit, &Lc::one())
}

/// Enforces `out = 2^a` for `a < 2^max_bits` by repeated squaring over the bits of `a`.
pub fn exponential_check(b: &mut Builder, a: &Lc, out: &Lc, max_bits: u32) -> Result<()> {
    let f = b.field();
    let bits = bit_decompose(b, "exp bits", a, max_bits)?;
    let mut acc = Lc::one();
    for i in 0..max_bits as usize {
        // acc * (1 + (2^{2^i} - 1) a_i)
        let k = f.sub(f.pow2(1 << i), FieldElement::ONE);
        let factor = Lc::one().add_scaled(&f, &bits.bit(i), k);
        if i + 1 == max_bits as usize {
            b.enforce(acc.clone(), factor, out.clone())?;
        } else {
            acc = b.mul("exp chain", &acc, &factor)?;
        }
    }
    Ok(())
}

/// Enforces that `{(a1,b1),(a2,b2)}` and `{(c1,d1),(c2,d2)}` are equal as multisets,
/// using challenges `r, z`: `(r - a1 - z b1)(r - a2 - z b2) = (r - c1 - z d1)(r - c2 - z d2)`.
pub fn permutation_check(
    b: &mut Builder,
    input: [(&Lc, &Lc); 2],
    claimed: [(&Lc, &Lc); 2],
    r: &Lc,
    z: &Lc,
) -> Result<()> {
    let f = b.field();
    let mut folded = Vec::with_capacity(4);
    for (x, y) in input.iter().chain(claimed.iter()) {
        let zy = b.mul("perm fold", z, y)?;
        folded.push(r.sub(&f, &x.add(&f, &zy)));
    }
    let lhs = b.mul("perm lhs", &folded[0], &folded[1])?;
    b.enforce(folded[2].clone(), folded[3].clone(), lhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Field;
    use rand::{Rng, SeedableRng};

    fn satisfied(b: Builder) -> bool {
        let (cs, w) = b.finish();
        let publics: Vec<_> = {
            let w = w.as_ref().unwrap();
            cs.public_indices().map(|i| w.assignment[i]).collect()
        };
        cs.is_satisfied(&publics, &w.unwrap()).unwrap().is_satisfied()
    }

    fn witness(b: &mut Builder, v: u64) -> Lc {
        b.alloc_witness("v", Some(FieldElement::from_u64(v))).unwrap().into()
    }

    #[test]
    fn decompose_lsb_first() {
        let mut b = Builder::prove(Field::bn254());
        let v = witness(&mut b, 13);
        let bits = bit_decompose(&mut b, "v", &v, 4).unwrap();
        let got: Vec<u64> = bits.bits.iter().map(|x| b.value(&(*x).into()).unwrap().to_u64().unwrap()).collect();
        assert_eq!(got, vec![1, 0, 1, 1]);
        assert_eq!(b.num_constraints(), 5);
        assert!(satisfied(b));
    }

    #[test]
    fn decompose_zero_and_gate_count() {
        let mut b = Builder::prove(Field::bn254());
        let v = witness(&mut b, 0);
        let bits = bit_decompose(&mut b, "v", &v, 4).unwrap();
        assert!(bits.bits.iter().all(|x| b.value(&(*x).into()) == Some(FieldElement::ZERO)));
        let mut s = Builder::shape(Field::bn254());
        let v = s.alloc_witness("v", None).unwrap();
        bit_decompose(&mut s, "v", &v.into(), 23).unwrap();
        assert_eq!(s.num_constraints(), 24);
    }

    #[test]
    fn decompose_out_of_range() {
        let mut b = Builder::prove(Field::bn254());
        let v = witness(&mut b, 16);
        assert!(matches!(bit_decompose(&mut b, "v", &v, 4), Err(Error::WitnessOutOfRange { .. })));
        let mut b = Builder::prove(Field::bn254()).lenient();
        let v = witness(&mut b, 16);
        bit_decompose(&mut b, "v", &v, 4).unwrap();
        assert!(!satisfied(b));
    }

    #[test]
    fn compare_examples() {
        for (a, rhs, expect) in [(3u64, 5u64, 1u64), (5, 3, 0), (7, 7, 1)] {
            let mut b = Builder::prove(Field::bn254());
            let x = witness(&mut b, a);
            let y = witness(&mut b, rhs);
            let bit = compare(&mut b, &x, &y, 8).unwrap();
            assert_eq!(b.value(&bit), Some(FieldElement::from_u64(expect)));
            assert_eq!(b.num_constraints(), 10);
            assert!(satisfied(b));
        }
    }

    #[test]
    fn compare_exhaustive_small_width() {
        for a in 0..16u64 {
            for c in 0..16u64 {
                let mut b = Builder::prove(Field::bn254());
                let x = witness(&mut b, a);
                let y = witness(&mut b, c);
                let bit = compare(&mut b, &x, &y, 4).unwrap();
                assert_eq!(b.value(&bit), Some(FieldElement::from_u64((a <= c) as u64)));
            }
        }
    }

    #[test]
    fn exponential_examples() {
        for (a, out, ok) in [(5u64, 32u64, true), (0, 1, true), (5, 31, false), (13, 8192, true)] {
            let mut b = Builder::prove(Field::bn254());
            let x = witness(&mut b, a);
            let y = witness(&mut b, out);
            exponential_check(&mut b, &x, &y, 6).unwrap();
            assert_eq!(b.num_constraints(), 13);
            assert_eq!(satisfied(b), ok, "a={a} out={out}");
        }
    }

    fn perm_instance(input: [(u64, u64); 2], claimed: [(u64, u64); 2], r: FieldElement, z: FieldElement) -> bool {
        let mut b = Builder::prove(Field::bn254());
        let r = b.alloc_public("r", Some(r)).unwrap().into();
        let z = b.alloc_public("z", Some(z)).unwrap().into();
        let vars: Vec<Lc> = input.iter().chain(claimed.iter()).flat_map(|&(x, y)| [x, y]).map(|v| witness(&mut b, v)).collect();
        permutation_check(
            &mut b,
            [(&vars[0], &vars[1]), (&vars[2], &vars[3])],
            [(&vars[4], &vars[5]), (&vars[6], &vars[7])],
            &r,
            &z,
        )
        .unwrap();
        assert_eq!(b.num_constraints(), 6);
        satisfied(b)
    }

    #[test]
    fn permutation_examples() {
        let f = Field::bn254();
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(11);
        let (r, z) = (f.random(&mut rng), f.random(&mut rng));
        assert!(perm_instance([(1, 2), (3, 4)], [(1, 2), (3, 4)], r, z));
        assert!(perm_instance([(1, 2), (3, 4)], [(3, 4), (1, 2)], r, z));
        assert!(!perm_instance([(1, 2), (3, 4)], [(1, 2), (3, 5)], r, z));
        // pairs must move together
        assert!(!perm_instance([(1, 2), (3, 4)], [(1, 4), (3, 2)], r, z));
        for _ in 0..50 {
            let v: [u64; 4] = rng.gen();
            assert!(perm_instance([(v[0], v[1]), (v[2], v[3])], [(v[2], v[3]), (v[0], v[1])], r, z));
        }
    }
}
