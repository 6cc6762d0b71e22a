//! Synthesis driver: one code path emits constraints and, when proving,
//! assigns witness values alongside.

use crate::error::{Error, Result};
use crate::field::{Field, FieldElement};
use crate::r1cs::{ConstraintSystem, LinearCombination, VarId, VarKind, Witness};

pub type Lc = LinearCombination;

#[derive(Debug)]
pub struct Builder {
    cs: ConstraintSystem,
    values: Option<Vec<FieldElement>>,
    lenient: bool,
}

impl Builder {
    /// Shape-only synthesis: no values are tracked.
    pub fn shape(field: Field) -> Self {
        Builder { cs: ConstraintSystem::new(field), values: None, lenient: false }
    }

    /// Witness-generating synthesis. Every allocation must supply a value.
    pub fn prove(field: Field) -> Self {
        Builder { cs: ConstraintSystem::new(field), values: Some(vec![FieldElement::ONE]), lenient: false }
    }

    /// In lenient mode gadgets accept out-of-range values and assign truncated
    /// helper bits, so a dishonest assignment surfaces as an unsatisfied
    /// constraint instead of a synthesis error.
    pub fn lenient(mut self) -> Self {
        self.lenient = true;
        self
    }

    pub fn with_labels(mut self) -> Self {
        self.cs = self.cs.with_labels();
        self
    }

    pub fn field(&self) -> Field {
        *self.cs.field()
    }

    pub fn is_proving(&self) -> bool {
        self.values.is_some()
    }

    pub fn is_lenient(&self) -> bool {
        self.lenient
    }

    pub fn cs(&self) -> &ConstraintSystem {
        &self.cs
    }

    pub fn num_constraints(&self) -> usize {
        self.cs.num_constraints()
    }

    fn alloc(&mut self, kind: VarKind, label: &str, value: Option<FieldElement>) -> Result<VarId> {
        if let Some(values) = self.values.as_mut() {
            values.push(value.ok_or_else(|| Error::MissingWitness(label.to_string()))?);
        }
        Ok(self.cs.alloc(kind, label))
    }

    pub fn alloc_public(&mut self, label: &str, value: Option<FieldElement>) -> Result<VarId> {
        self.alloc(VarKind::Public, label, value)
    }

    pub fn alloc_witness(&mut self, label: &str, value: Option<FieldElement>) -> Result<VarId> {
        self.alloc(VarKind::Witness, label, value)
    }

    /// Value of a linear form under the current assignment (prove mode only).
    pub fn value(&self, lc: &Lc) -> Option<FieldElement> {
        self.values.as_ref().map(|v| lc.eval(self.cs.field(), v))
    }

    /// Value as a small unsigned integer.
    pub fn value_u128(&self, lc: &Lc) -> Option<u128> {
        self.value(lc).and_then(|v| v.to_u128())
    }

    /// Value as a signed integer, reading residues above p/2 as negatives.
    pub fn value_i64(&self, lc: &Lc) -> Option<i64> {
        let f = self.field();
        self.value(lc).and_then(|v| f.to_i64(v))
    }

    pub fn enforce(&mut self, a: Lc, b: Lc, c: Lc) -> Result<()> {
        self.cs.enforce(a, b, c)
    }

    pub fn region(&mut self, name: &str) {
        self.cs.begin_region(name);
    }

    pub fn constant(&self, k: FieldElement) -> Lc {
        Lc::constant(k)
    }

    pub fn constant_i64(&self, k: i64) -> Lc {
        Lc::constant(self.field().from_i64(k))
    }

    /// Allocates `lc` as a fresh variable: `lc * 1 = v`.
    pub fn materialize(&mut self, label: &str, lc: &Lc) -> Result<VarId> {
        let v = self.alloc_witness(label, self.value(lc))?;
        self.enforce(lc.clone(), Lc::one(), v.into())?;
        Ok(v)
    }

    /// Allocates the product of two forms: `a * b = v`.
    pub fn mul(&mut self, label: &str, a: &Lc, b: &Lc) -> Result<Lc> {
        let f = self.field();
        let value = match (self.value(a), self.value(b)) {
            (Some(x), Some(y)) => Some(f.mul(x, y)),
            _ => None,
        };
        let v = self.alloc_witness(label, value)?;
        self.enforce(a.clone(), b.clone(), v.into())?;
        Ok(v.into())
    }

    pub fn assert_equal(&mut self, a: &Lc, b: &Lc) -> Result<()> {
        let f = self.field();
        self.enforce(a.sub(&f, b), Lc::one(), Lc::zero())
    }

    /// `x * (1 - x) = 0`
    pub fn assert_boolean(&mut self, x: &Lc) -> Result<()> {
        let f = self.field();
        let one_minus = Lc::one().sub(&f, x);
        self.enforce(x.clone(), one_minus, Lc::zero())
    }

    /// `bit ? a : b` as `b + bit * (a - b)`; one constraint unless both sides are equal.
    pub fn select(&mut self, label: &str, bit: &Lc, a: &Lc, b: &Lc) -> Result<Lc> {
        let f = self.field();
        let diff = a.sub(&f, b);
        if diff.is_empty() {
            return Ok(b.clone());
        }
        if let Some(k) = bit.as_constant() {
            return Ok(if k.is_zero() { b.clone() } else { a.clone() });
        }
        if let Some(k) = diff.as_constant() {
            return Ok(b.add_scaled(&f, bit, k));
        }
        let prod = self.mul(label, bit, &diff)?;
        Ok(b.add(&f, &prod))
    }

    /// Returns a boolean that is 1 exactly when `x` is zero (two constraints).
    pub fn is_zero(&mut self, label: &str, x: &Lc) -> Result<Lc> {
        let f = self.field();
        let xv = self.value(x);
        let inv = xv.map(|v| if v.is_zero() { FieldElement::ZERO } else { f.inv(v).expect("nonzero") });
        let inv = self.alloc_witness(label, inv)?;
        let flag_value = xv.map(|v| if v.is_zero() { FieldElement::ONE } else { FieldElement::ZERO });
        let flag = self.alloc_witness(label, flag_value)?;
        // x * inv = 1 - flag ; x * flag = 0
        self.enforce(x.clone(), inv.into(), Lc::one().sub(&f, &flag.into()))?;
        self.enforce(x.clone(), flag.into(), Lc::zero())?;
        Ok(flag.into())
    }

    pub fn finish(self) -> (ConstraintSystem, Option<Witness>) {
        let witness = self.values.map(|assignment| Witness { assignment });
        (self.cs, witness)
    }

    /// Current public input values in allocation order.
    pub fn public_values(&self) -> Option<Vec<FieldElement>> {
        let values = self.values.as_ref()?;
        Some(self.cs.public_indices().map(|i| values[i]).collect())
    }
}
