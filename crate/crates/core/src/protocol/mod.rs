//! Commit, prove and verify one inference iteration.
//!
//! The mock backend ships the full witness and checks it directly. It is
//! complete and sound for testing but NOT zero-knowledge; hiding is the job of
//! an external proof system fed with a witness-stripped bundle.

mod bundle;
mod circuit;

use std::fmt;
use std::ops::Range;

use rand::Rng;
use sha2::{Digest, Sha256};

use crate::commitment::{commit, Commitment, SpongeParams};
use crate::error::{Error, Result};
use crate::field::{Field, FieldElement};
use crate::float::{Float, Precision};
use crate::inference::{crh_weight, initial_quality, iterate, zc_complements, Algorithm, AnswerMatrix, PriorFactors, QualityState};
use crate::r1cs::{ConstraintSystem, Witness};

pub use bundle::{BundleHeader, ProofBundle, BUNDLE_MAGIC, BUNDLE_VERSION};
pub use circuit::{PrivateValues, PublicValues};

use circuit::{num_public, q_slots, q_width, synthesize, CircuitSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Dims {
    pub n: usize,
    pub m: usize,
    pub l: u32,
}

impl Dims {
    pub fn of(v: &AnswerMatrix) -> Self {
        Dims { n: v.n(), m: v.m(), l: v.l() }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 || self.l < 2 {
            return Err(Error::Config(format!("dimensions {}x{} with {} choices are empty", self.n, self.m, self.l)));
        }
        if self.n > u32::MAX as usize / 2 || self.m > u32::MAX as usize / 2 || self.l > 1 << 16 {
            return Err(Error::Config("dimensions are too large".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    /// Checks satisfiability of the shipped witness.
    Mock,
    /// Checks bundle structure only; the proof is checked elsewhere.
    External,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolConfig {
    pub w: u32,
    pub prior: PriorFactors,
    pub backend: Backend,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig { w: 23, prior: PriorFactors::default(), backend: Backend::Mock }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PublicParams {
    pub field: Field,
    pub precision: Precision,
    pub sponge: SpongeParams,
    pub prior: PriorFactors,
    pub backend: Backend,
}

pub fn setup(config: &ProtocolConfig) -> Result<PublicParams> {
    let sponge = SpongeParams::bn254().clone();
    let field = *sponge.field();
    let precision = Precision::new(config.w, &field)?;
    config.prior.validate()?;
    let smoothing = config.prior.smoothing_float(config.w)?;
    if smoothing.is_zero() {
        return Err(Error::Prior("smoothing rounds to zero at this precision".into()));
    }
    Ok(PublicParams { field, precision, sponge, prior: config.prior.clone(), backend: config.backend })
}

impl PublicParams {
    pub fn w(&self) -> u32 {
        self.precision.w()
    }

    fn spec(&self, alg: Algorithm, dims: Dims) -> Result<CircuitSpec<'_>> {
        dims.validate()?;
        Ok(CircuitSpec {
            field: self.field,
            sponge: &self.sponge,
            w: self.w(),
            smoothing: self.prior.smoothing_float(self.w())?,
            alg,
            dims,
        })
    }
}

/// Opening randomness: one per worker, then one for the truth vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Openings {
    pub workers: Vec<FieldElement>,
    pub truth: FieldElement,
}

impl Openings {
    pub fn random<R: Rng + ?Sized>(pp: &PublicParams, m: usize, rng: &mut R) -> Self {
        Openings { workers: (0..m).map(|_| pp.field.random(rng)).collect(), truth: pp.field.random(rng) }
    }
}

fn choice_elements(values: &[u32]) -> Vec<FieldElement> {
    values.iter().map(|&v| FieldElement::from_u64(v as u64)).collect()
}

/// Commits to one worker's answers, one field element per answer.
pub fn commit_answers(pp: &PublicParams, answers: &[u32], randomness: FieldElement) -> Commitment {
    commit(&pp.sponge, &choice_elements(answers), randomness)
}

pub fn commit_truth(pp: &PublicParams, labels: &[u32], randomness: FieldElement) -> Commitment {
    commit(&pp.sponge, &choice_elements(labels), randomness)
}

/// Public inputs of an iteration, decoded.
#[derive(Clone, Debug, PartialEq)]
pub struct Statement {
    pub worker_commitments: Vec<FieldElement>,
    pub truth_commitment: FieldElement,
    pub r: FieldElement,
    pub z: FieldElement,
    pub q_in: Vec<Float>,
    /// CRH: ratios before the logarithm. ZenCrowd: the qualities.
    pub q_out: Vec<Float>,
}

impl Statement {
    /// Worker qualities the verifier derives: the logarithm of CRH ratios, or ZenCrowd's values as-is.
    pub fn quality(&self, alg: Algorithm) -> Result<Vec<Float>> {
        match alg {
            Algorithm::Crh => self.q_out.iter().map(crh_weight).collect(),
            _ => Ok(self.q_out.clone()),
        }
    }
}

fn float_elements(f: &Field, x: &Float, zero_flag: bool) -> Vec<FieldElement> {
    let mut out = vec![f.from_u128(x.s()), f.from_i64(x.e() as i64)];
    if zero_flag {
        out.push(FieldElement::from_u64(x.is_zero() as u64));
    }
    out
}

fn public_elements(f: &Field, alg: Algorithm, p: &PublicValues) -> Vec<FieldElement> {
    let (_, in_flag) = q_slots(alg);
    let mut out = p.commitments.clone();
    out.push(p.r);
    out.push(p.z);
    for q in &p.q_in {
        out.extend(float_elements(f, q, in_flag));
    }
    for q in &p.q_out {
        out.extend(float_elements(f, q, false));
    }
    out
}

fn decode_float(f: &Field, w: u32, slots: &[FieldElement]) -> Result<Float> {
    let s = slots[0].to_u128().ok_or_else(|| Error::MalformedFloat("significand out of range".into()))?;
    let e = f.to_i64(slots[1]).ok_or_else(|| Error::MalformedFloat("exponent out of range".into()))?;
    let e = i32::try_from(e).map_err(|_| Error::ExponentOverflow(e))?;
    let zero = match slots.get(2) {
        None => false,
        Some(z) if *z == FieldElement::ZERO => false,
        Some(z) if *z == FieldElement::ONE => true,
        Some(_) => return Err(Error::MalformedFloat("zero flag is not boolean".into())),
    };
    Float::from_parts(s, e, zero, w)
}

fn decode_statement(f: &Field, w: u32, alg: Algorithm, dims: Dims, publics: &[FieldElement]) -> Result<Statement> {
    let m = dims.m;
    if publics.len() != num_public(alg, dims) {
        return Err(Error::PublicInputCount { expected: num_public(alg, dims), got: publics.len() });
    }
    let (wi, wo) = (q_width(alg, true), q_width(alg, false));
    let q_base = m + 3;
    let mut q_in = Vec::new();
    let mut q_out = Vec::new();
    if wi > 0 {
        for j in 0..m {
            q_in.push(decode_float(f, w, &publics[q_base + j * wi..q_base + (j + 1) * wi])?);
        }
        let out_base = q_base + m * wi;
        for j in 0..m {
            q_out.push(decode_float(f, w, &publics[out_base + j * wo..out_base + (j + 1) * wo])?);
        }
    }
    Ok(Statement {
        worker_commitments: publics[..m].to_vec(),
        truth_commitment: publics[m],
        r: publics[m + 1],
        z: publics[m + 2],
        q_in,
        q_out,
    })
}

/// Named public-input slots and constraint regions of an iteration circuit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CircuitLayout {
    /// Ranges over the public-input vector (not variable indices).
    pub public_slots: Vec<(String, Range<usize>)>,
    /// Constraint index ranges.
    pub regions: Vec<(String, Range<usize>)>,
    pub num_public: usize,
    pub num_witness: usize,
    pub num_constraints: usize,
}

impl CircuitLayout {
    fn new(alg: Algorithm, dims: Dims, cs: &ConstraintSystem) -> Self {
        let m = dims.m;
        let (wi, wo) = (q_width(alg, true), q_width(alg, false));
        let mut public_slots = vec![
            ("worker_commitments".to_string(), 0..m),
            ("truth_commitment".to_string(), m..m + 1),
            ("challenges".to_string(), m + 1..m + 3),
        ];
        if wi > 0 {
            public_slots.push(("q_in".to_string(), m + 3..m + 3 + m * wi));
            public_slots.push(("q_out".to_string(), m + 3 + m * wi..m + 3 + m * (wi + wo)));
        }
        let starts = cs.regions();
        let regions = starts
            .iter()
            .enumerate()
            .map(|(k, (start, name))| {
                let end = starts.get(k + 1).map_or(cs.num_constraints(), |x| x.0);
                (name.clone(), *start..end)
            })
            .collect();
        CircuitLayout {
            public_slots,
            regions,
            num_public: cs.num_public(),
            num_witness: cs.num_witness(),
            num_constraints: cs.num_constraints(),
        }
    }

    pub fn region_size(&self, name: &str) -> usize {
        self.regions.iter().filter(|(n, _)| n == name).map(|(_, r)| r.len()).sum()
    }
}

/// Shape-only synthesis of one iteration.
pub fn synth_iteration(pp: &PublicParams, alg: Algorithm, dims: Dims) -> Result<(ConstraintSystem, CircuitLayout)> {
    let b = synthesize(&pp.spec(alg, dims)?, None)?;
    let (cs, _) = b.finish();
    let layout = CircuitLayout::new(alg, dims, &cs);
    Ok((cs, layout))
}

/// SHA-256 over the canonical encoding of the constraint system.
pub fn layout_digest(cs: &ConstraintSystem) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"zkti-layout-v1");
    bundle::write_system(&mut HashWriter(&mut h), cs).expect("hashing does not fail");
    h.finalize().into()
}

struct HashWriter<'a>(&'a mut Sha256);

impl std::io::Write for HashWriter<'_> {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.0.update(buf);
        Ok(buf.len())
    }

    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

/// Fiat-Shamir challenges over the iteration metadata, layout digest and every
/// public input other than the challenges themselves.
pub fn derive_challenges(pp: &PublicParams, header: &BundleHeader, digest: &[u8; 32], publics: &[FieldElement]) -> (FieldElement, FieldElement) {
    let f = &pp.field;
    let tag = f.from_u128(u128::from_be_bytes(*b"zkti-fiat-shamir"));
    let mut transcript = vec![
        tag,
        FieldElement::from_u64(header.w as u64),
        FieldElement::from_u64(header.alg.code() as u64),
        FieldElement::from_u64(header.dims.n as u64),
        FieldElement::from_u64(header.dims.m as u64),
        FieldElement::from_u64(header.dims.l as u64),
        FieldElement::from_u64(header.iteration as u64),
        f.from_u128(u128::from_be_bytes(digest[..16].try_into().expect("16 bytes"))),
        f.from_u128(u128::from_be_bytes(digest[16..].try_into().expect("16 bytes"))),
    ];
    let m = header.dims.m;
    transcript.extend_from_slice(&publics[..=m]);
    transcript.extend_from_slice(&publics[m + 3..]);
    let mut draw = |k: u64| {
        transcript.push(FieldElement::from_u64(k));
        let x = pp.sponge.hash(&transcript);
        transcript.pop();
        x
    };
    (draw(1), draw(2))
}

/// Everything a prover run produces besides the bundle itself.
#[derive(Clone, Debug)]
pub struct ProverOutput {
    pub bundle: ProofBundle,
    pub statement: Statement,
    pub labels: Vec<u32>,
    pub q_out: QualityState,
    pub layout: CircuitLayout,
}

/// Proves one iteration: runs the native update from `q_in`, commits, derives
/// challenges, synthesizes and checks the circuit before packaging it.
pub fn prove(pp: &PublicParams, alg: Algorithm, answers: &AnswerMatrix, openings: &Openings, q_in: &QualityState, iteration: u32) -> Result<ProverOutput> {
    let dims = Dims::of(answers);
    let spec = pp.spec(alg, dims)?;
    if !answers.is_dense() {
        return Err(Error::Answers("proving needs every worker to answer every task".into()));
    }
    if openings.workers.len() != dims.m {
        return Err(Error::LengthMismatch(openings.workers.len(), dims.m));
    }
    let (truth, q_out) = iterate(alg, answers, q_in, &pp.prior, pp.w())?;
    let columns = (0..dims.m).map(|j| answers.worker_column(j)).collect::<Result<Vec<_>>>()?;
    let mut commitments: Vec<FieldElement> =
        columns.iter().zip(&openings.workers).map(|(col, r)| commit_answers(pp, col, *r).digest).collect();
    commitments.push(commit_truth(pp, &truth.labels, openings.truth).digest);
    let (q_in_pub, q_out_pub) = match alg {
        Algorithm::Mv => (Vec::new(), Vec::new()),
        Algorithm::Crh => (q_in.q.clone(), q_out.ratio.clone().ok_or_else(|| Error::Config("missing CRH ratios".into()))?),
        Algorithm::Zc => (q_in.q.clone(), q_out.q.clone()),
    };
    let complements = if alg == Algorithm::Zc { zc_complements(q_in)? } else { Vec::new() };
    let mut randomness = openings.workers.clone();
    randomness.push(openings.truth);

    let (shape, _) = synthesize(&spec, None)?.finish();
    let digest = layout_digest(&shape);
    let layout = CircuitLayout::new(alg, dims, &shape);
    drop(shape);

    let header = BundleHeader::new(pp, alg, dims, iteration);
    let mut pubs = PublicValues { commitments, r: FieldElement::ZERO, z: FieldElement::ZERO, q_in: q_in_pub, q_out: q_out_pub };
    let (r, z) = derive_challenges(pp, &header, &digest, &public_elements(&pp.field, alg, &pubs));
    pubs.r = r;
    pubs.z = z;
    let privs = PrivateValues { answers: columns, labels: truth.labels.clone(), randomness, complements };
    let b = synthesize(&spec, Some((&pubs, &privs)))?;
    let public_inputs = b.public_values().expect("prove mode");
    let (cs, witness) = b.finish();
    let witness = witness.expect("prove mode");
    if let Some(fail) = cs.is_satisfied(&public_inputs, &witness)?.first_failure {
        return Err(Error::Unsatisfied { index: fail.index, region: fail.region });
    }
    let statement = decode_statement(&pp.field, pp.w(), alg, dims, &public_inputs)?;
    let bundle = ProofBundle { header, layout_digest: digest, public_inputs, cs, witness: Some(witness) };
    Ok(ProverOutput { bundle, statement, labels: truth.labels, q_out, layout })
}

/// Why a bundle was rejected.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Rejection {
    ParamsMismatch(String),
    LayoutMismatch,
    MalformedPublicInput(String),
    PriorMismatch,
    ChallengeMismatch,
    WitnessRequired,
    Unsatisfied { index: usize, region: String },
    ChainMismatch(String),
}

impl Rejection {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            Rejection::ParamsMismatch(_) => "params_mismatch",
            Rejection::LayoutMismatch => "layout_mismatch",
            Rejection::MalformedPublicInput(_) => "malformed_public_input",
            Rejection::PriorMismatch => "prior_mismatch",
            Rejection::ChallengeMismatch => "challenge_mismatch",
            Rejection::WitnessRequired => "witness_required",
            Rejection::Unsatisfied { .. } => "unsatisfied",
            Rejection::ChainMismatch(_) => "chain_mismatch",
        }
    }
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rejection::ParamsMismatch(s) => write!(f, "parameters do not match: {s}"),
            Rejection::LayoutMismatch => f.write_str("constraint system differs from the expected circuit"),
            Rejection::MalformedPublicInput(s) => write!(f, "malformed public input: {s}"),
            Rejection::PriorMismatch => f.write_str("first-iteration qualities differ from the prior"),
            Rejection::ChallengeMismatch => f.write_str("challenges do not match the transcript"),
            Rejection::WitnessRequired => f.write_str("witness required by the mock backend"),
            Rejection::Unsatisfied { index, region } => write!(f, "constraint {index} in region `{region}` is not satisfied"),
            Rejection::ChainMismatch(s) => write!(f, "iterations do not chain: {s}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    Reject(Rejection),
}

impl Verdict {
    pub fn is_accept(&self) -> bool {
        matches!(self, Verdict::Accept)
    }
}

macro_rules! reject {
    ($r:expr) => {
        return Ok(Verdict::Reject($r))
    };
}

/// Checks a bundle against the parameters. `Err` is reserved for internal
/// failures; every property of the bundle itself yields a verdict.
pub fn verify(pp: &PublicParams, bundle: &ProofBundle) -> Result<Verdict> {
    let h = &bundle.header;
    if h.prime != pp.field.modulus_be_bytes() {
        reject!(Rejection::ParamsMismatch("field prime".into()));
    }
    if h.w != pp.w() {
        reject!(Rejection::ParamsMismatch(format!("precision {} vs {}", h.w, pp.w())));
    }
    let spec = match pp.spec(h.alg, h.dims) {
        Ok(s) => s,
        Err(e) => reject!(Rejection::ParamsMismatch(e.to_string())),
    };
    let (expected, _) = synthesize(&spec, None)?.finish();
    let digest = layout_digest(&expected);
    drop(expected);
    if digest != bundle.layout_digest || layout_digest(&bundle.cs) != digest {
        reject!(Rejection::LayoutMismatch);
    }
    let statement = match decode_statement(&pp.field, pp.w(), h.alg, h.dims, &bundle.public_inputs) {
        Ok(s) => s,
        Err(e) => reject!(Rejection::MalformedPublicInput(e.to_string())),
    };
    if h.iteration == 0 && h.alg != Algorithm::Mv {
        let q0 = initial_quality(h.alg, h.dims.m, &pp.prior, pp.w())?;
        if statement.q_in != q0.q {
            reject!(Rejection::PriorMismatch);
        }
    }
    if derive_challenges(pp, h, &digest, &bundle.public_inputs) != (statement.r, statement.z) {
        reject!(Rejection::ChallengeMismatch);
    }
    if pp.backend == Backend::External {
        return Ok(Verdict::Accept);
    }
    let Some(witness) = &bundle.witness else {
        reject!(Rejection::WitnessRequired);
    };
    match bundle.cs.is_satisfied(&bundle.public_inputs, witness) {
        Ok(sat) => match sat.first_failure {
            None => Ok(Verdict::Accept),
            Some(fail) => Ok(Verdict::Reject(Rejection::Unsatisfied { index: fail.index, region: fail.region })),
        },
        Err(e) => Ok(Verdict::Reject(Rejection::MalformedPublicInput(e.to_string()))),
    }
}

/// Verifies consecutive iterations and that each one starts from the
/// qualities the previous one published.
pub fn verify_chain(pp: &PublicParams, bundles: &[ProofBundle]) -> Result<Verdict> {
    let mut prev: Option<(&ProofBundle, Statement)> = None;
    for (t, bundle) in bundles.iter().enumerate() {
        let verdict = verify(pp, bundle)?;
        if !verdict.is_accept() {
            return Ok(verdict);
        }
        let h = &bundle.header;
        if h.iteration as usize != t {
            reject!(Rejection::ChainMismatch(format!("bundle {t} claims iteration {}", h.iteration)));
        }
        let st = decode_statement(&pp.field, pp.w(), h.alg, h.dims, &bundle.public_inputs)?;
        if let Some((pb, ps)) = &prev {
            if pb.header.alg != h.alg || pb.header.dims != h.dims {
                reject!(Rejection::ChainMismatch("algorithm or dimensions changed".into()));
            }
            if ps.worker_commitments != st.worker_commitments {
                reject!(Rejection::ChainMismatch("worker commitments changed".into()));
            }
            if h.alg != Algorithm::Mv && ps.quality(h.alg)? != st.q_in {
                reject!(Rejection::ChainMismatch(format!("iteration {t} does not start from the published qualities")));
            }
        }
        prev = Some((bundle, st));
    }
    Ok(Verdict::Accept)
}

impl ProofBundle {
    pub fn statement(&self, pp: &PublicParams) -> Result<Statement> {
        decode_statement(&pp.field, self.header.w, self.header.alg, self.header.dims, &self.public_inputs)
    }

    pub fn challenges(&self) -> (FieldElement, FieldElement) {
        let m = self.header.dims.m;
        (self.public_inputs[m + 1], self.public_inputs[m + 2])
    }

    /// Replaces the witness by `None`, as handed to an external backend.
    pub fn stripped(&self) -> ProofBundle {
        ProofBundle { witness: None, ..self.clone() }
    }
}

/// Re-derives the challenges after public inputs were edited, as a cheating
/// prover would; the witness slots holding public values are updated too.
pub fn rebind_challenges(pp: &PublicParams, bundle: &mut ProofBundle) {
    let (r, z) = derive_challenges(pp, &bundle.header, &bundle.layout_digest, &bundle.public_inputs);
    let m = bundle.header.dims.m;
    bundle.public_inputs[m + 1] = r;
    bundle.public_inputs[m + 2] = z;
    sync_witness_publics(bundle);
}

/// Copies the public-input vector into the public slots of the assignment.
pub fn sync_witness_publics(bundle: &mut ProofBundle) {
    if let Some(w) = bundle.witness.as_mut() {
        for (slot, v) in bundle.cs.public_indices().zip(&bundle.public_inputs) {
            w.assignment[slot] = *v;
        }
    }
}

/// Full assignment from the public inputs and the witness-only tail.
pub(crate) fn assemble_witness(publics: &[FieldElement], tail: Vec<FieldElement>) -> Witness {
    let mut assignment = Vec::with_capacity(1 + publics.len() + tail.len());
    assignment.push(FieldElement::ONE);
    assignment.extend_from_slice(publics);
    assignment.extend(tail);
    Witness { assignment }
}
