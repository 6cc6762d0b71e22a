//! Python bindings: floats, inference, commitments and the prove/verify protocol.

use std::fs::File;
use std::io::BufReader;

use num_bigint::BigUint;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyBytes;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use zkti::commitment::{commit as commit_message, sponge_hash, SpongeParams};
use zkti::float::Float;
use zkti::inference::{self, initial_quality, run_inference, Algorithm, PriorFactors, QualityState};
use zkti::protocol::{self, setup, Backend, Openings, ProofBundle, ProtocolConfig, PublicParams, Verdict};
use zkti::synthetic::{generate as generate_dataset, SyntheticConfig};
use zkti::{dataset, FieldElement};

create_exception!(zkti_py, ZktiError, PyException);

fn err(e: zkti::Error) -> PyErr {
    ZktiError::new_err(e.to_string())
}

fn algorithm(name: &str) -> PyResult<Algorithm> {
    Algorithm::ALL
        .into_iter()
        .find(|a| a.name() == name.to_ascii_lowercase())
        .ok_or_else(|| PyValueError::new_err(format!("unknown algorithm `{name}` (expected mv, crh or zc)")))
}

fn element(x: &BigUint) -> PyResult<FieldElement> {
    let field = *SpongeParams::bn254().field();
    if x >= &field.modulus() {
        return Err(PyValueError::new_err("value is not below the field modulus"));
    }
    Ok(field.from_biguint(x))
}

/// Floating-point value `s * 2^e` with a `w`-bit significand.
#[pyclass(name = "Float", module = "zkti_py", frozen, eq, skip_from_py_object)]
#[derive(Clone, PartialEq)]
struct PyFloat(Float);

#[pymethods]
impl PyFloat {
    #[new]
    fn new(s: u128, e: i32, w: u32) -> PyResult<Self> {
        Float::new(s, e, w).map(PyFloat).map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (x, w = 23))]
    fn from_f64(x: f64, w: u32) -> PyResult<Self> {
        Float::from_f64(x, w).map(PyFloat).map_err(err)
    }

    #[staticmethod]
    fn zero(w: u32) -> Self {
        PyFloat(Float::zero(w))
    }

    #[getter]
    fn s(&self) -> u128 {
        self.0.s()
    }

    #[getter]
    fn e(&self) -> i32 {
        self.0.e()
    }

    #[getter]
    fn w(&self) -> u32 {
        self.0.w()
    }

    #[getter]
    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }

    fn __float__(&self) -> f64 {
        self.0.to_f64()
    }

    fn mul(&self, other: &PyFloat) -> PyResult<Self> {
        self.0.mul_val(&other.0).map(PyFloat).map_err(err)
    }

    fn div(&self, other: &PyFloat) -> PyResult<Self> {
        self.0.div_val(&other.0).map(PyFloat).map_err(err)
    }

    fn add(&self, other: &PyFloat) -> PyResult<Self> {
        self.0.add_val(&other.0).map(PyFloat).map_err(err)
    }

    fn leq(&self, other: &PyFloat) -> bool {
        self.0.leq(&other.0)
    }

    fn __repr__(&self) -> String {
        format!("Float(s={}, e={}, w={}) ~ {}", self.0.s(), self.0.e(), self.0.w(), self.0.to_f64())
    }
}

/// Worker answers; `rows[i][j]` is worker `j`'s answer to task `i`.
#[pyclass(name = "AnswerMatrix", module = "zkti_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyAnswers(inference::AnswerMatrix);

#[pymethods]
impl PyAnswers {
    #[new]
    #[pyo3(signature = (rows, choices = None))]
    fn new(rows: Vec<Vec<u32>>, choices: Option<u32>) -> PyResult<Self> {
        let l = choices.unwrap_or_else(|| rows.iter().flatten().max().map_or(2, |&x| (x + 1).max(2)));
        inference::AnswerMatrix::dense(l, &rows).map(PyAnswers).map_err(err)
    }

    /// Reads a `task,worker,answer` CSV file.
    #[staticmethod]
    #[pyo3(signature = (path, choices = None))]
    fn from_csv(path: &str, choices: Option<u32>) -> PyResult<Self> {
        let f = File::open(path).map_err(|e| PyValueError::new_err(format!("{path}: {e}")))?;
        dataset::read_answers(BufReader::new(f), choices).map(PyAnswers).map_err(err)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn m(&self) -> usize {
        self.0.m()
    }

    #[getter]
    fn l(&self) -> u32 {
        self.0.l()
    }

    fn get(&self, task: usize, worker: usize) -> Option<u32> {
        self.0.get(task, worker)
    }

    fn __repr__(&self) -> String {
        format!("AnswerMatrix(n={}, m={}, l={})", self.0.n(), self.0.m(), self.0.l())
    }
}

#[pyclass(name = "Inference", module = "zkti_py", get_all, frozen)]
struct PyInference {
    labels: Vec<u32>,
    quality: Vec<f64>,
    iterations: usize,
    converged: bool,
}

#[pyfunction]
#[pyo3(signature = (alg, answers, w = 23, max_iter = 10, tolerance = 1e-4))]
fn infer(py: Python<'_>, alg: &str, answers: &PyAnswers, w: u32, max_iter: usize, tolerance: f64) -> PyResult<PyInference> {
    let alg = algorithm(alg)?;
    let prior = PriorFactors { max_iter, tolerance, ..Default::default() };
    prior.validate().map_err(err)?;
    let run = py.detach(|| run_inference(alg, &answers.0, &prior, w)).map_err(err)?;
    Ok(PyInference {
        labels: run.truth.labels,
        quality: run.quality.q.iter().map(Float::to_f64).collect(),
        iterations: run.trace.len(),
        converged: run.converged,
    })
}

#[pyfunction]
fn accuracy(labels: Vec<u32>, truth: Vec<u32>) -> PyResult<f64> {
    inference::accuracy(&labels, &truth).map_err(err)
}

/// Planted-truth data. Returns `(answers, truth)`.
#[pyfunction]
#[pyo3(signature = (tasks = 100, workers = 30, choices = 2, adversarial_frac = 0.3, quality = 0.8, seed = 0))]
fn generate(tasks: usize, workers: usize, choices: u32, adversarial_frac: f64, quality: f64, seed: u64) -> PyResult<(PyAnswers, Vec<u32>)> {
    let cfg = SyntheticConfig { tasks, workers, choices, adversarial_frac, quality, seed };
    let d = generate_dataset(&cfg).map_err(err)?;
    Ok((PyAnswers(d.answers), d.truth))
}

#[pyfunction]
fn hash(message: Vec<BigUint>) -> PyResult<BigUint> {
    let msg = message.iter().map(element).collect::<PyResult<Vec<_>>>()?;
    Ok(sponge_hash(SpongeParams::bn254(), &msg).to_biguint())
}

#[pyfunction]
fn commit(message: Vec<BigUint>, randomness: BigUint) -> PyResult<BigUint> {
    let msg = message.iter().map(element).collect::<PyResult<Vec<_>>>()?;
    Ok(commit_message(SpongeParams::bn254(), &msg, element(&randomness)?).digest.to_biguint())
}

#[pyclass(name = "Params", module = "zkti_py", frozen)]
struct PyParams(PublicParams);

#[pymethods]
impl PyParams {
    #[new]
    #[pyo3(signature = (w = 23, backend = "mock"))]
    fn new(w: u32, backend: &str) -> PyResult<Self> {
        let backend = match backend {
            "mock" => Backend::Mock,
            "external" => Backend::External,
            other => return Err(PyValueError::new_err(format!("unknown backend `{other}`"))),
        };
        setup(&ProtocolConfig { w, backend, ..Default::default() }).map(PyParams).map_err(err)
    }

    #[getter]
    fn w(&self) -> u32 {
        self.0.w()
    }
}

#[pyclass(name = "Bundle", module = "zkti_py", frozen, from_py_object)]
#[derive(Clone)]
struct PyBundle(ProofBundle);

#[pymethods]
impl PyBundle {
    #[staticmethod]
    fn from_bytes(py: Python<'_>, params: &PyParams, data: &[u8]) -> PyResult<Self> {
        py.detach(|| ProofBundle::import(&params.0.sponge, data)).map(PyBundle).map_err(err)
    }

    #[pyo3(signature = (params, include_witness = true))]
    fn to_bytes<'py>(&self, py: Python<'py>, params: &PyParams, include_witness: bool) -> PyResult<Bound<'py, PyBytes>> {
        let bytes = py.detach(|| self.0.export(&params.0.sponge, include_witness)).map_err(err)?;
        Ok(PyBytes::new(py, &bytes))
    }

    fn stripped(&self) -> Self {
        PyBundle(self.0.stripped())
    }

    #[getter]
    fn alg(&self) -> &'static str {
        self.0.header.alg.name()
    }

    #[getter]
    fn iteration(&self) -> u32 {
        self.0.header.iteration
    }

    #[getter]
    fn w(&self) -> u32 {
        self.0.header.w
    }

    #[getter]
    fn dims(&self) -> (usize, usize, u32) {
        let d = self.0.header.dims;
        (d.n, d.m, d.l)
    }

    #[getter]
    fn num_constraints(&self) -> usize {
        self.0.cs.num_constraints()
    }

    #[getter]
    fn has_witness(&self) -> bool {
        self.0.witness.is_some()
    }

    #[getter]
    fn public_inputs(&self) -> Vec<BigUint> {
        self.0.public_inputs.iter().map(FieldElement::to_biguint).collect()
    }

    fn __repr__(&self) -> String {
        let d = self.0.header.dims;
        format!("Bundle(alg={}, iteration={}, n={}, m={}, constraints={})", self.alg(), self.iteration(), d.n, d.m, self.num_constraints())
    }
}

#[pyclass(name = "Proof", module = "zkti_py", get_all, frozen)]
struct PyProof {
    bundles: Vec<PyBundle>,
    labels: Vec<u32>,
    quality: Vec<f64>,
    constraints_by_region: Vec<(String, usize)>,
}

/// Proves `iterations` consecutive updates (always one for mv). Opening
/// randomness is drawn from `seed`.
#[pyfunction]
#[pyo3(signature = (params, alg, answers, seed = 0, iterations = 1))]
fn prove(py: Python<'_>, params: &PyParams, alg: &str, answers: &PyAnswers, seed: u64, iterations: usize) -> PyResult<PyProof> {
    let alg = algorithm(alg)?;
    let pp = &params.0;
    let v = &answers.0;
    let iterations = if alg == Algorithm::Mv { 1 } else { iterations.max(1) };
    py.detach(|| {
        let openings = Openings::random(pp, v.m(), &mut ChaCha20Rng::seed_from_u64(seed));
        let mut q = initial_quality(alg, v.m(), &pp.prior, pp.w())?;
        let (mut bundles, mut labels, mut regions) = (Vec::new(), Vec::new(), Vec::new());
        for t in 0..iterations {
            let out = protocol::prove(pp, alg, v, &openings, &q, t as u32)?;
            q = QualityState { q: out.statement.quality(alg)?, ratio: None };
            labels = out.labels;
            regions = out.layout.regions.iter().map(|(name, r)| (name.clone(), r.len())).collect();
            bundles.push(PyBundle(out.bundle));
        }
        let quality = if alg == Algorithm::Mv { Vec::new() } else { q.q.iter().map(Float::to_f64).collect() };
        Ok(PyProof { bundles, labels, quality, constraints_by_region: regions })
    })
    .map_err(err)
}

#[pyclass(name = "Verdict", module = "zkti_py", get_all, frozen)]
struct PyVerdict {
    accepted: bool,
    code: Option<&'static str>,
    reason: Option<String>,
}

impl From<Verdict> for PyVerdict {
    fn from(v: Verdict) -> Self {
        match v {
            Verdict::Accept => PyVerdict { accepted: true, code: None, reason: None },
            Verdict::Reject(r) => PyVerdict { accepted: false, code: Some(r.code()), reason: Some(r.to_string()) },
        }
    }
}

#[pymethods]
impl PyVerdict {
    fn __bool__(&self) -> bool {
        self.accepted
    }

    fn __repr__(&self) -> String {
        match &self.reason {
            None => "Verdict(accept)".into(),
            Some(r) => format!("Verdict(reject: {r})"),
        }
    }
}

#[pyfunction]
fn verify(py: Python<'_>, params: &PyParams, bundle: &PyBundle) -> PyResult<PyVerdict> {
    py.detach(|| protocol::verify(&params.0, &bundle.0)).map(Into::into).map_err(err)
}

/// Verifies consecutive iterations, including that each `q_in` is the previous `q_out`.
#[pyfunction]
fn verify_chain(py: Python<'_>, params: &PyParams, bundles: Vec<PyBundle>) -> PyResult<PyVerdict> {
    let bundles: Vec<ProofBundle> = bundles.into_iter().map(|b| b.0).collect();
    py.detach(|| protocol::verify_chain(&params.0, &bundles)).map(Into::into).map_err(err)
}

#[pymodule]
fn zkti_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("ZktiError", m.py().get_type::<ZktiError>())?;
    m.add_class::<PyFloat>()?;
    m.add_class::<PyAnswers>()?;
    m.add_class::<PyInference>()?;
    m.add_class::<PyParams>()?;
    m.add_class::<PyBundle>()?;
    m.add_class::<PyProof>()?;
    m.add_class::<PyVerdict>()?;
    m.add_function(wrap_pyfunction!(infer, m)?)?;
    m.add_function(wrap_pyfunction!(accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(hash, m)?)?;
    m.add_function(wrap_pyfunction!(commit, m)?)?;
    m.add_function(wrap_pyfunction!(prove, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(verify_chain, m)?)?;
    Ok(())
}
