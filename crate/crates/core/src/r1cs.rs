//! Rank-1 constraint systems: `<a,x> * <b,x> = <c,x>` rows over a prime field.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{Field, FieldElement};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarKind {
    One,
    Public,
    Witness,
}

/// Dense, allocation-ordered variable handle. Index 0 is the constant one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct VarId {
    pub index: u32,
    pub kind: VarKind,
}

impl VarId {
    pub const ONE: VarId = VarId { index: 0, kind: VarKind::One };
}

impl PartialOrd for VarId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for VarId {
    fn cmp(&self, other: &Self) -> Ordering {
        self.index.cmp(&other.index)
    }
}

/// Sparse linear form. Terms are kept sorted by variable index, without
/// duplicates and without zero coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct LinearCombination {
    terms: Vec<(VarId, FieldElement)>,
}

impl From<VarId> for LinearCombination {
    fn from(v: VarId) -> Self {
        LinearCombination { terms: vec![(v, FieldElement::ONE)] }
    }
}

impl From<&VarId> for LinearCombination {
    fn from(v: &VarId) -> Self {
        LinearCombination::from(*v)
    }
}

impl LinearCombination {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::from(VarId::ONE)
    }

    pub fn constant(c: FieldElement) -> Self {
        if c.is_zero() {
            Self::zero()
        } else {
            LinearCombination { terms: vec![(VarId::ONE, c)] }
        }
    }

    /// Normalizes arbitrary terms: sorts, merges duplicates, drops zeros.
    pub fn from_terms<I>(field: &Field, terms: I) -> Self
    where
        I: IntoIterator<Item = (VarId, FieldElement)>,
    {
        let mut raw: Vec<_> = terms.into_iter().collect();
        raw.sort_by_key(|(v, _)| v.index);
        let mut out: Vec<(VarId, FieldElement)> = Vec::with_capacity(raw.len());
        for (v, c) in raw {
            match out.last_mut() {
                Some((lv, lc)) if lv.index == v.index => *lc = field.add(*lc, c),
                _ => out.push((v, c)),
            }
        }
        out.retain(|(_, c)| !c.is_zero());
        LinearCombination { terms: out }
    }

    pub fn terms(&self) -> &[(VarId, FieldElement)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// The constant value when the form references no variable besides one.
    pub fn as_constant(&self) -> Option<FieldElement> {
        match self.terms.as_slice() {
            [] => Some(FieldElement::ZERO),
            [(v, c)] if v.index == 0 => Some(*c),
            _ => None,
        }
    }

    pub fn max_index(&self) -> Option<u32> {
        self.terms.last().map(|(v, _)| v.index)
    }

    fn merge(&self, field: &Field, other: &Self, scale: Option<FieldElement>, negate: bool) -> Self {
        let map = |c: FieldElement| {
            let c = match scale {
                Some(s) => field.mul(c, s),
                None => c,
            };
            if negate {
                field.neg(c)
            } else {
                c
            }
        };
        let mut out = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() || j < other.terms.len() {
            let take_left = match (self.terms.get(i), other.terms.get(j)) {
                (Some(l), Some(r)) => l.0.index.cmp(&r.0.index),
                (Some(_), None) => Ordering::Less,
                _ => Ordering::Greater,
            };
            match take_left {
                Ordering::Less => {
                    out.push(self.terms[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    let (v, c) = other.terms[j];
                    let c = map(c);
                    if !c.is_zero() {
                        out.push((v, c));
                    }
                    j += 1;
                }
                Ordering::Equal => {
                    let (v, c) = self.terms[i];
                    let sum = field.add(c, map(other.terms[j].1));
                    if !sum.is_zero() {
                        out.push((v, sum));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        LinearCombination { terms: out }
    }

    pub fn add(&self, field: &Field, other: &Self) -> Self {
        self.merge(field, other, None, false)
    }

    pub fn sub(&self, field: &Field, other: &Self) -> Self {
        self.merge(field, other, None, true)
    }

    /// `self + k * other`
    pub fn add_scaled(&self, field: &Field, other: &Self, k: FieldElement) -> Self {
        self.merge(field, other, Some(k), false)
    }

    pub fn scale(&self, field: &Field, k: FieldElement) -> Self {
        if k.is_zero() {
            return Self::zero();
        }
        LinearCombination { terms: self.terms.iter().map(|&(v, c)| (v, field.mul(c, k))).collect() }
    }

    pub fn add_const(&self, field: &Field, k: FieldElement) -> Self {
        self.add(field, &Self::constant(k))
    }

    pub fn eval(&self, field: &Field, assignment: &[FieldElement]) -> FieldElement {
        self.terms.iter().fold(FieldElement::ZERO, |acc, &(v, c)| {
            let x = assignment[v.index as usize];
            let term = if c == FieldElement::ONE { x } else { field.mul(c, x) };
            field.add(acc, term)
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Constraint {
    pub a: LinearCombination,
    pub b: LinearCombination,
    pub c: LinearCombination,
}

impl Constraint {
    pub fn holds(&self, field: &Field, x: &[FieldElement]) -> bool {
        let a = self.a.eval(field, x);
        let b = self.b.eval(field, x);
        field.mul(a, b) == self.c.eval(field, x)
    }
}

/// Full variable assignment indexed by `VarId::index`; slot 0 holds one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub assignment: Vec<FieldElement>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Failure {
    pub index: usize,
    pub region: String,
}

/// Outcome of a satisfiability check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Satisfaction {
    pub first_failure: Option<Failure>,
}

impl Satisfaction {
    pub fn is_satisfied(&self) -> bool {
        self.first_failure.is_none()
    }
}

#[derive(Clone, Debug)]
pub struct ConstraintSystem {
    field: Field,
    kinds: Vec<VarKind>,
    num_public: usize,
    num_witness: usize,
    constraints: Vec<Constraint>,
    labels: BTreeMap<u32, String>,
    keep_witness_labels: bool,
    regions: Vec<(usize, String)>,
}

impl PartialEq for ConstraintSystem {
    fn eq(&self, other: &Self) -> bool {
        self.field == other.field
            && self.kinds == other.kinds
            && self.constraints == other.constraints
    }
}

impl ConstraintSystem {
    pub fn new(field: Field) -> Self {
        ConstraintSystem {
            field,
            kinds: vec![VarKind::One],
            num_public: 0,
            num_witness: 0,
            constraints: Vec::new(),
            labels: BTreeMap::new(),
            keep_witness_labels: false,
            regions: Vec::new(),
        }
    }

    /// Keep debug labels for witness variables too (public labels are always kept).
    pub fn with_labels(mut self) -> Self {
        self.keep_witness_labels = true;
        self
    }

    /// Rebuilds a system whose public variables occupy indices `1..=num_public`.
    pub fn from_parts(
        field: Field,
        num_public: usize,
        num_witness: usize,
        constraints: Vec<Constraint>,
    ) -> Result<Self> {
        let mut kinds = Vec::with_capacity(1 + num_public + num_witness);
        kinds.push(VarKind::One);
        kinds.extend(std::iter::repeat_n(VarKind::Public, num_public));
        kinds.extend(std::iter::repeat_n(VarKind::Witness, num_witness));
        let cs = ConstraintSystem {
            field,
            kinds,
            num_public,
            num_witness,
            constraints: Vec::new(),
            labels: BTreeMap::new(),
            keep_witness_labels: false,
            regions: Vec::new(),
        };
        let mut cs = cs;
        for con in constraints {
            cs.check_lc(&con.a)?;
            cs.check_lc(&con.b)?;
            cs.check_lc(&con.c)?;
            cs.constraints.push(con);
        }
        Ok(cs)
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn alloc(&mut self, kind: VarKind, label: &str) -> VarId {
        let index = self.kinds.len() as u32;
        let kind = match kind {
            VarKind::One | VarKind::Witness => {
                self.num_witness += 1;
                VarKind::Witness
            }
            VarKind::Public => {
                self.num_public += 1;
                VarKind::Public
            }
        };
        self.kinds.push(kind);
        if kind == VarKind::Public || self.keep_witness_labels {
            self.labels.insert(index, label.to_string());
        }
        VarId { index, kind }
    }

    fn check_lc(&self, lc: &LinearCombination) -> Result<()> {
        match lc.max_index() {
            Some(i) if i as usize >= self.kinds.len() => Err(Error::UnallocatedVariable(i)),
            _ => Ok(()),
        }
    }

    pub fn enforce(
        &mut self,
        a: LinearCombination,
        b: LinearCombination,
        c: LinearCombination,
    ) -> Result<()> {
        self.check_lc(&a)?;
        self.check_lc(&b)?;
        self.check_lc(&c)?;
        self.constraints.push(Constraint { a, b, c });
        Ok(())
    }

    /// Marks the start of a named region; later failures report the enclosing name.
    pub fn begin_region(&mut self, name: &str) {
        let at = self.constraints.len();
        if let Some(last) = self.regions.last_mut() {
            if last.0 == at {
                last.1 = name.to_string();
                return;
            }
        }
        self.regions.push((at, name.to_string()));
    }

    pub fn region_of(&self, constraint: usize) -> &str {
        let pos = self.regions.partition_point(|(start, _)| *start <= constraint);
        if pos == 0 {
            ""
        } else {
            &self.regions[pos - 1].1
        }
    }

    pub fn regions(&self) -> &[(usize, String)] {
        &self.regions
    }

    /// Gate count: one per enforced constraint.
    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn num_public(&self) -> usize {
        self.num_public
    }

    pub fn num_witness(&self) -> usize {
        self.num_witness
    }

    pub fn num_vars(&self) -> usize {
        self.kinds.len()
    }

    pub fn kind(&self, index: u32) -> Option<VarKind> {
        self.kinds.get(index as usize).copied()
    }

    /// True when all public variables come right after the constant one.
    pub fn publics_are_contiguous(&self) -> bool {
        self.kinds[1..=self.num_public].iter().all(|k| *k == VarKind::Public)
    }

    pub fn public_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.kinds.iter().enumerate().filter(|(_, k)| **k == VarKind::Public).map(|(i, _)| i)
    }

    pub fn label(&self, index: u32) -> Option<&str> {
        self.labels.get(&index).map(String::as_str)
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    /// Checks every constraint against a full assignment whose public slots must
    /// equal `public_inputs` (in allocation order).
    pub fn is_satisfied(&self, public_inputs: &[FieldElement], witness: &Witness) -> Result<Satisfaction> {
        let x = &witness.assignment;
        if x.len() != self.kinds.len() {
            return Err(Error::WitnessLength { expected: self.kinds.len(), got: x.len() });
        }
        if public_inputs.len() != self.num_public {
            return Err(Error::PublicInputCount { expected: self.num_public, got: public_inputs.len() });
        }
        let fail = |index: usize| Satisfaction {
            first_failure: Some(Failure { index, region: self.region_of(index).to_string() }),
        };
        if x[0] != FieldElement::ONE {
            return Ok(Satisfaction {
                first_failure: Some(Failure { index: 0, region: "constant one slot".into() }),
            });
        }
        if self.public_indices().zip(public_inputs).any(|(i, v)| x[i] != *v) {
            return Ok(Satisfaction {
                first_failure: Some(Failure { index: 0, region: "public input mismatch".into() }),
            });
        }
        let field = &self.field;
        let first = self.constraints.par_iter().position_first(|con| !con.holds(field, x));
        Ok(match first {
            Some(i) => fail(i),
            None => Satisfaction { first_failure: None },
        })
    }
}
