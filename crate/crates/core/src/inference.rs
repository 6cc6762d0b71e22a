//! Native truth inference: majority voting, CRH and ZenCrowd over [`Float`]
//! arithmetic. The operation order here is the one the circuits replay, so a
//! native run doubles as the witness for an iteration proof.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::float::circuit::{clamp_native, complement_native, int_to_float_native};
use crate::float::Float;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Mv,
    Crh,
    Zc,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Mv, Algorithm::Crh, Algorithm::Zc];

    pub fn code(self) -> u8 {
        match self {
            Algorithm::Mv => 0,
            Algorithm::Crh => 1,
            Algorithm::Zc => 2,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        Algorithm::ALL.into_iter().find(|a| a.code() == c)
    }

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Mv => "mv",
            Algorithm::Crh => "crh",
            Algorithm::Zc => "zc",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mv" => Ok(Algorithm::Mv),
            "crh" => Ok(Algorithm::Crh),
            "zc" => Ok(Algorithm::Zc),
            other => Err(Error::Config(format!("unknown algorithm `{other}` (expected mv, crh or zc)"))),
        }
    }
}

/// Answers `v_i^j`, stored densely with gaps for unanswered pairs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnswerMatrix {
    n: usize,
    m: usize,
    l: u32,
    cells: Vec<Option<u32>>,
}

impl AnswerMatrix {
    /// Builds from `(task, worker, choice)` triples.
    pub fn new(n: usize, m: usize, l: u32, entries: impl IntoIterator<Item = (usize, usize, u32)>) -> Result<Self> {
        if l < 2 {
            return Err(Error::Answers(format!("need at least 2 choices, got {l}")));
        }
        if n == 0 || m == 0 {
            return Err(Error::Answers("need at least one task and one worker".into()));
        }
        let mut cells = vec![None; n * m];
        for (i, j, v) in entries {
            if i >= n || j >= m {
                return Err(Error::Answers(format!("entry ({i}, {j}) outside {n}x{m}")));
            }
            if v >= l {
                return Err(Error::Answers(format!("answer {v} at ({i}, {j}) is not below {l}")));
            }
            if cells[i * m + j].replace(v).is_some() {
                return Err(Error::Answers(format!("duplicate entry ({i}, {j})")));
            }
        }
        let matrix = AnswerMatrix { n, m, l, cells };
        if let Some(j) = (0..m).find(|&j| matrix.tasks_of(j).next().is_none()) {
            return Err(Error::Answers(format!("worker {j} answered no task")));
        }
        Ok(matrix)
    }

    /// Every worker answers every task; `rows[i][j]`.
    pub fn dense(l: u32, rows: &[Vec<u32>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if let Some(r) = rows.iter().find(|r| r.len() != m) {
            return Err(Error::LengthMismatch(r.len(), m));
        }
        let entries = rows.iter().enumerate().flat_map(|(i, r)| r.iter().enumerate().map(move |(j, &v)| (i, j, v)));
        AnswerMatrix::new(n, m, l, entries)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn l(&self) -> u32 {
        self.l
    }

    pub fn get(&self, i: usize, j: usize) -> Option<u32> {
        self.cells[i * self.m + j]
    }

    pub fn is_dense(&self) -> bool {
        self.cells.iter().all(Option::is_some)
    }

    pub fn num_answers(&self) -> usize {
        self.cells.iter().filter(|c| c.is_some()).count()
    }

    /// `(worker, choice)` pairs for task `i`, in worker order.
    pub fn answers_to(&self, i: usize) -> impl Iterator<Item = (usize, u32)> + '_ {
        (0..self.m).filter_map(move |j| self.get(i, j).map(|v| (j, v)))
    }

    /// `(task, choice)` pairs for worker `j`, in task order.
    pub fn tasks_of(&self, j: usize) -> impl Iterator<Item = (usize, u32)> + '_ {
        (0..self.n).filter_map(move |i| self.get(i, j).map(|v| (i, v)))
    }

    /// Worker `j`'s answers over all tasks; requires a dense matrix.
    pub fn worker_column(&self, j: usize) -> Result<Vec<u32>> {
        (0..self.n).map(|i| self.get(i, j).ok_or_else(|| Error::Answers(format!("({i}, {j}) is unanswered")))).collect()
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        (0..self.n).flat_map(move |i| self.answers_to(i).map(move |(j, v)| (i, j, v)))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PriorFactors {
    /// Initial worker quality.
    pub q0: f64,
    /// Initial quality for ZenCrowd. A uniform 0.5 is a fixed point of its
    /// update (every posterior is flat), so it starts elsewhere.
    pub zc_q0: f64,
    /// Stand-in for a zero distance (and a zero total distance) in the CRH ratio.
    pub smoothing: f64,
    pub max_iter: usize,
    /// Stop once the largest quality change falls below this.
    pub tolerance: f64,
}

impl Default for PriorFactors {
    fn default() -> Self {
        PriorFactors { q0: 0.5, zc_q0: 0.7, smoothing: 0.5, max_iter: 10, tolerance: 1e-4 }
    }
}

impl PriorFactors {
    pub fn validate(&self) -> Result<()> {
        for (name, q) in [("q0", self.q0), ("zc_q0", self.zc_q0)] {
            if !(q > 0.0 && q < 1.0) {
                return Err(Error::Prior(format!("{name} must lie in (0, 1), got {q}")));
            }
        }
        if !(self.smoothing > 0.0 && self.smoothing <= 1.0) {
            return Err(Error::Prior(format!("smoothing must lie in (0, 1], got {}", self.smoothing)));
        }
        if self.max_iter == 0 {
            return Err(Error::Prior("max_iter must be positive".into()));
        }
        if !(self.tolerance >= 0.0 && self.tolerance.is_finite()) {
            return Err(Error::Prior("tolerance must be a finite nonnegative number".into()));
        }
        Ok(())
    }

    pub fn smoothing_float(&self, w: u32) -> Result<Float> {
        Float::from_f64(self.smoothing, w)
    }
}

/// Per-task soft estimates backing the labels.
#[derive(Clone, Debug, PartialEq)]
pub enum SoftTruth {
    /// Vote counts per choice.
    Votes(Vec<Vec<u64>>),
    /// Weighted average of the answers.
    Weighted(Vec<Float>),
    /// Normalized choice distribution.
    Posterior(Vec<Vec<Float>>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TruthState {
    pub soft: SoftTruth,
    pub labels: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QualityState {
    pub q: Vec<Float>,
    /// CRH only: the ratio before the logarithm.
    pub ratio: Option<Vec<Float>>,
}

impl QualityState {
    pub fn uniform(m: usize, q: Float) -> Self {
        QualityState { q: vec![q; m], ratio: None }
    }

    pub fn max_change(&self, other: &QualityState) -> f64 {
        self.q.iter().zip(&other.q).map(|(a, b)| (a.to_f64() - b.to_f64()).abs()).fold(0.0, f64::max)
    }
}

fn argmax_counts(counts: &[u64]) -> u32 {
    let mut best = 0;
    for k in 1..counts.len() {
        if counts[k] > counts[best] {
            best = k;
        }
    }
    best as u32
}

pub fn mv_infer(v: &AnswerMatrix) -> Result<TruthState> {
    let mut votes = Vec::with_capacity(v.n);
    let mut labels = Vec::with_capacity(v.n);
    for i in 0..v.n {
        let mut counts = vec![0u64; v.l as usize];
        for (_, c) in v.answers_to(i) {
            counts[c as usize] += 1;
        }
        if counts.iter().all(|&c| c == 0) {
            return Err(Error::EmptyTask(i));
        }
        labels.push(argmax_counts(&counts));
        votes.push(counts);
    }
    Ok(TruthState { soft: SoftTruth::Votes(votes), labels })
}

/// `k` as a float; exact for the small integers used as choices and counts.
pub fn int_float(k: u64, w: u32) -> Result<Float> {
    Float::from_int_floor(k, w)
}

/// Decision thresholds `k - 1/2` for `k = 1..l`.
pub fn crh_thresholds(l: u32, w: u32) -> Result<Vec<Float>> {
    (1..l as i64)
        .map(|k| Float::encode(&BigRational::new(BigInt::from(2 * k - 1), BigInt::from(2)), w))
        .collect()
}

/// Number of thresholds strictly below `soft`: rounds to the nearest choice, halves going down.
pub fn crh_label(soft: &Float, thresholds: &[Float]) -> u32 {
    thresholds.iter().filter(|t| !soft.leq(t)).count() as u32
}

/// `q_j * k` for `k = 0..l`: the weighted answer a worker contributes for each choice.
pub fn crh_scaled_weights(q: &Float, l: u32) -> Result<Vec<Float>> {
    let w = q.w();
    let mut out = vec![Float::zero(w), *q];
    for k in 2..l as u64 {
        out.push(q.mul_val(&int_float(k, w)?)?);
    }
    out.truncate(l as usize);
    Ok(out)
}

pub fn crh_update_truth(v: &AnswerMatrix, quality: &QualityState) -> Result<TruthState> {
    if quality.q.len() != v.m {
        return Err(Error::LengthMismatch(quality.q.len(), v.m));
    }
    let w = quality.q[0].w();
    let scaled = quality.q.iter().map(|q| crh_scaled_weights(q, v.l)).collect::<Result<Vec<_>>>()?;
    let thresholds = crh_thresholds(v.l, w)?;
    let mut soft = Vec::with_capacity(v.n);
    let mut labels = Vec::with_capacity(v.n);
    for i in 0..v.n {
        let mut num = Float::zero(w);
        let mut den = Float::zero(w);
        let mut answered = false;
        for (j, c) in v.answers_to(i) {
            answered = true;
            num = num.add_val(&scaled[j][c as usize])?;
            den = den.add_val(&quality.q[j])?;
        }
        if !answered {
            return Err(Error::EmptyTask(i));
        }
        if den.is_zero() {
            return Err(Error::ZeroWeights(i));
        }
        let x = num.div_val(&den)?;
        labels.push(crh_label(&x, &thresholds));
        soft.push(x);
    }
    Ok(TruthState { soft: SoftTruth::Weighted(soft), labels })
}

/// Natural log of a ratio, encoded at the ratio's precision. Shared by the
/// prover and the verifier so both derive bit-identical weights.
pub fn crh_weight(ratio: &Float) -> Result<Float> {
    let x = ratio.to_f64().ln();
    if x <= 0.0 {
        Ok(Float::zero(ratio.w()))
    } else {
        Float::from_f64(x, ratio.w())
    }
}

/// Per-worker disagreement counts with the labels.
pub fn crh_distances(v: &AnswerMatrix, labels: &[u32]) -> Result<Vec<u64>> {
    if labels.len() != v.n {
        return Err(Error::LengthMismatch(labels.len(), v.n));
    }
    Ok((0..v.m).map(|j| v.tasks_of(j).filter(|&(i, c)| c != labels[i]).count() as u64).collect())
}

/// `ratio_j = max(D, eps) / max(d_j, eps)` with `D = sum_j d_j`, then `q_j = ln ratio_j`.
pub fn crh_update_quality(v: &AnswerMatrix, truth: &TruthState, prior: &PriorFactors, w: u32) -> Result<QualityState> {
    let d = crh_distances(v, &truth.labels)?;
    let eps = prior.smoothing_float(w)?;
    let total = int_to_float_native(d.iter().sum(), w, &eps)?;
    let mut ratio = Vec::with_capacity(v.m);
    let mut q = Vec::with_capacity(v.m);
    for dj in d {
        let r = total.div_val(&int_to_float_native(dj, w, &eps)?)?;
        q.push(crh_weight(&r)?);
        ratio.push(r);
    }
    Ok(QualityState { q, ratio: Some(ratio) })
}

/// `lo = 4 delta`, `hi = 1 - 4 delta`.
pub fn zc_clamp_bounds(w: u32) -> Result<(Float, Float)> {
    let four_delta = BigRational::new(BigInt::from(4), BigInt::from(1) << (w - 1));
    let lo = Float::encode(&four_delta, w)?;
    let hi = Float::encode(&(BigRational::from_integer(1.into()) - four_delta), w)?;
    Ok((lo, hi))
}

/// Complements `1 - q_j` as committed by the prover.
pub fn zc_complements(quality: &QualityState) -> Result<Vec<Float>> {
    quality.q.iter().map(complement_native).collect()
}

/// Index of the largest value; ties keep the lowest index.
pub fn argmax_floats(values: &[Float]) -> u32 {
    let mut best = 0;
    for k in 1..values.len() {
        if !values[k].leq(&values[best]) {
            best = k;
        }
    }
    best as u32
}

pub fn zc_update_truth(v: &AnswerMatrix, quality: &QualityState) -> Result<TruthState> {
    if quality.q.len() != v.m {
        return Err(Error::LengthMismatch(quality.q.len(), v.m));
    }
    for (j, q) in quality.q.iter().enumerate() {
        if q.is_zero() || Float::one(q.w()).leq(q) {
            return Err(Error::Prior(format!("worker {j} quality {} is outside (0, 1)", q.to_f64())));
        }
    }
    let comp = zc_complements(quality)?;
    let mut post = Vec::with_capacity(v.n);
    let mut labels = Vec::with_capacity(v.n);
    for i in 0..v.n {
        let mut weights = Vec::with_capacity(v.l as usize);
        for k in 0..v.l {
            let mut acc: Option<Float> = None;
            for (j, c) in v.answers_to(i) {
                let factor = if c == k { quality.q[j] } else { comp[j] };
                acc = Some(match acc {
                    None => factor,
                    Some(a) => a.mul_val(&factor)?,
                });
            }
            weights.push(acc.ok_or(Error::EmptyTask(i))?);
        }
        let mut total = weights[0];
        for x in &weights[1..] {
            total = total.add_val(x)?;
        }
        let p = weights.iter().map(|x| x.div_val(&total)).collect::<Result<Vec<_>>>()?;
        labels.push(argmax_floats(&p));
        post.push(p);
    }
    Ok(TruthState { soft: SoftTruth::Posterior(post), labels })
}

/// Mean posterior agreement with each worker's answers, clamped away from 0 and 1.
pub fn zc_update_quality(v: &AnswerMatrix, truth: &TruthState, w: u32) -> Result<QualityState> {
    let SoftTruth::Posterior(post) = &truth.soft else {
        return Err(Error::Config("ZenCrowd quality needs posterior distributions".into()));
    };
    if post.len() != v.n {
        return Err(Error::LengthMismatch(post.len(), v.n));
    }
    let (lo, hi) = zc_clamp_bounds(w)?;
    let mut q = Vec::with_capacity(v.m);
    for j in 0..v.m {
        let mut acc: Option<Float> = None;
        let mut count = 0u64;
        for (i, c) in v.tasks_of(j) {
            let agree = post[i][c as usize];
            acc = Some(match acc {
                None => agree,
                Some(a) => a.add_val(&agree)?,
            });
            count += 1;
        }
        let acc = acc.ok_or_else(|| Error::Answers(format!("worker {j} answered no task")))?;
        let mean = acc.div_val(&int_float(count, w)?)?;
        q.push(clamp_native(&mean, &lo, &hi));
    }
    Ok(QualityState { q, ratio: None })
}

/// Qualities the first iteration starts from.
pub fn initial_quality(alg: Algorithm, m: usize, prior: &PriorFactors, w: u32) -> Result<QualityState> {
    prior.validate()?;
    let q0 = if alg == Algorithm::Zc { prior.zc_q0 } else { prior.q0 };
    Ok(QualityState::uniform(m, Float::from_f64(q0, w)?))
}

/// One pass of update-truth followed by update-quality.
pub fn iterate(alg: Algorithm, v: &AnswerMatrix, q_in: &QualityState, prior: &PriorFactors, w: u32) -> Result<(TruthState, QualityState)> {
    match alg {
        Algorithm::Mv => Ok((mv_infer(v)?, q_in.clone())),
        Algorithm::Crh => {
            let t = crh_update_truth(v, q_in)?;
            let q = crh_update_quality(v, &t, prior, w)?;
            Ok((t, q))
        }
        Algorithm::Zc => {
            let t = zc_update_truth(v, q_in)?;
            let q = zc_update_quality(v, &t, w)?;
            Ok((t, q))
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub q_in: QualityState,
    pub truth: TruthState,
    pub q_out: QualityState,
    pub max_change: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InferenceRun {
    pub truth: TruthState,
    pub quality: QualityState,
    pub trace: Vec<IterationRecord>,
    pub converged: bool,
}

pub fn run_inference(alg: Algorithm, v: &AnswerMatrix, prior: &PriorFactors, w: u32) -> Result<InferenceRun> {
    let mut q = initial_quality(alg, v.m, prior, w)?;
    let mut trace = Vec::new();
    let iterations = if alg == Algorithm::Mv { 1 } else { prior.max_iter };
    let mut converged = alg == Algorithm::Mv;
    for _ in 0..iterations {
        let (truth, q_out) = iterate(alg, v, &q, prior, w)?;
        let max_change = q.max_change(&q_out);
        trace.push(IterationRecord { q_in: q.clone(), truth, q_out: q_out.clone(), max_change });
        q = q_out;
        if alg != Algorithm::Mv && max_change < prior.tolerance {
            converged = true;
            break;
        }
    }
    let last = trace.last().expect("at least one iteration");
    Ok(InferenceRun { truth: last.truth.clone(), quality: last.q_out.clone(), trace, converged })
}

pub fn accuracy(labels: &[u32], truth: &[u32]) -> Result<f64> {
    if labels.len() != truth.len() {
        return Err(Error::LengthMismatch(labels.len(), truth.len()));
    }
    if labels.is_empty() {
        return Ok(1.0);
    }
    let hits = labels.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / labels.len() as f64)
}
