mod report;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use zkti::dataset;
use zkti::float::circuit::{alloc_float, synth_float_add, synth_float_div, synth_float_mul, FloatCtx, FloatVar, ZeroFlag};
use zkti::float::FloatAux;
use zkti::inference::{accuracy, initial_quality, run_inference, AnswerMatrix, Algorithm, PriorFactors, QualityState};
use zkti::protocol::{
    prove, setup, synth_iteration, verify, verify_chain, Backend, Dims, Openings, ProofBundle, ProtocolConfig, Verdict,
};
use zkti::synthetic::{generate, SyntheticConfig};
use zkti::{Builder, Field};

use report::{delta_pct, CircuitRow, OpRow, QSummary, Report};

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Input { path: PathBuf, source: zkti::Error },
    #[error(transparent)]
    Core(#[from] zkti::Error),
    #[error("writing report: {0}")]
    Json(#[from] serde_json::Error),
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Parser)]
#[command(name = "zkti", version, about = "Verifiable truth inference over R1CS")]
struct Cli {
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a planted synthetic dataset and its ground truth.
    Gen(GenArgs),
    /// Run truth inference natively.
    Infer(InferArgs),
    /// Prove one or more inference iterations.
    Prove(ProveArgs),
    /// Verify proof bundles; several bundles are checked as a chain.
    Verify(VerifyArgs),
    /// Report constraint counts per float op and per circuit.
    BenchGates(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgArg {
    Mv,
    Crh,
    Zc,
}

impl From<AlgArg> for Algorithm {
    fn from(a: AlgArg) -> Self {
        match a {
            AlgArg::Mv => Algorithm::Mv,
            AlgArg::Crh => Algorithm::Crh,
            AlgArg::Zc => Algorithm::Zc,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Mock,
    External,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 100)]
    tasks: usize,
    #[arg(long, default_value_t = 30)]
    workers: usize,
    #[arg(long, default_value_t = 2)]
    choices: u32,
    #[arg(long, default_value_t = 0.3)]
    adversarial_frac: f64,
    #[arg(long, default_value_t = 0.8)]
    quality_mean: f64,
    /// Falls back to ZKTI_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    /// Answers CSV.
    #[arg(short, long)]
    output: PathBuf,
    /// Ground-truth CSV; defaults to `<output stem>.truth.csv`.
    #[arg(long)]
    truth_out: Option<PathBuf>,
}

#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    alg: AlgArg,
    /// Answers CSV with header `task,worker,answer`.
    #[arg(long)]
    data: PathBuf,
    /// Number of choices; defaults to the largest answer plus one.
    #[arg(long)]
    choices: Option<u32>,
    #[arg(long, default_value_t = 23)]
    w: u32,
}

#[derive(Args)]
struct InferArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Ground-truth CSV with header `task,truth`.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
}

#[derive(Args)]
struct ProveArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Bundle path; with several iterations `.<t>` is appended per iteration.
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long, default_value_t = 1)]
    iterations: usize,
    /// Seeds the commitment randomness. Falls back to ZKTI_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    /// Leave the witness out of the bundle.
    #[arg(long)]
    strip_witness: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(required = true)]
    bundles: Vec<PathBuf>,
    #[arg(long, default_value_t = 23)]
    w: u32,
    #[arg(long, value_enum, default_value_t = BackendArg::Mock)]
    backend: BackendArg,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "8,16,23")]
    w: Vec<u32>,
    #[arg(long, default_value_t = 100)]
    tasks: usize,
    #[arg(long, default_value_t = 30)]
    workers: usize,
    /// Only count the float operations.
    #[arg(long)]
    ops_only: bool,
}

fn seed(flag: Option<u64>) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("ZKTI_SEED") {
        Ok(v) => v.trim().parse().map_err(|_| CliError::Usage(format!("ZKTI_SEED={v} is not an unsigned integer"))),
        Err(_) => Ok(0),
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|source| CliError::Io { path: path.into(), source })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|source| CliError::Io { path: path.into(), source })
}

fn load_answers(args: &DataArgs) -> Result<AnswerMatrix> {
    dataset::read_answers(open(&args.data)?, args.choices).map_err(|source| CliError::Input { path: args.data.clone(), source })
}

fn ms(start: Instant) -> u64 {
    start.elapsed().as_millis() as u64
}

fn cmd_gen(a: &GenArgs) -> Result<Report> {
    let seed = seed(a.seed)?;
    let cfg = SyntheticConfig {
        tasks: a.tasks,
        workers: a.workers,
        choices: a.choices,
        adversarial_frac: a.adversarial_frac,
        quality: a.quality_mean,
        seed,
    };
    let d = generate(&cfg).map_err(|e| CliError::Usage(e.to_string()))?;
    let truth_path = a.truth_out.clone().unwrap_or_else(|| {
        let stem = a.output.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        a.output.with_file_name(format!("{stem}.truth.csv"))
    });
    dataset::write_answers(create(&a.output)?, &d.answers)?;
    dataset::write_truth(create(&truth_path)?, &d.truth)?;
    let mut r = Report::new("gen");
    r.n = Some(a.tasks);
    r.m = Some(a.workers);
    r.l = Some(a.choices);
    r.seed = Some(seed);
    r.files = Some(vec![a.output.display().to_string(), truth_path.display().to_string()]);
    Ok(r)
}

fn cmd_infer(a: &InferArgs) -> Result<Report> {
    let v = load_answers(&a.data)?;
    let alg: Algorithm = a.data.alg.into();
    let prior = PriorFactors { max_iter: a.max_iter, tolerance: a.tol, ..Default::default() };
    prior.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let run = run_inference(alg, &v, &prior, a.data.w)?;
    let mut r = Report::new("infer");
    r.alg = Some(alg.name());
    r.n = Some(v.n());
    r.m = Some(v.m());
    r.l = Some(v.l());
    r.w = Some(a.data.w);
    r.iterations = Some(run.trace.len());
    r.converged = Some(run.converged);
    if alg != Algorithm::Mv {
        r.q_summary = QSummary::of(&run.quality.q);
    }
    if let Some(path) = &a.truth {
        let truth = dataset::read_truth(open(path)?, v.n()).map_err(|source| CliError::Input { path: path.clone(), source })?;
        r.accuracy = Some(accuracy(&run.truth.labels, &truth)?);
    }
    r.labels = Some(run.truth.labels);
    Ok(r)
}

fn bundle_path(base: &Path, t: usize, total: usize) -> PathBuf {
    if total == 1 {
        base.to_path_buf()
    } else {
        let mut s = base.as_os_str().to_owned();
        s.push(format!(".{t}"));
        PathBuf::from(s)
    }
}

fn cmd_prove(a: &ProveArgs) -> Result<Report> {
    let v = load_answers(&a.data)?;
    let alg: Algorithm = a.data.alg.into();
    let seed = seed(a.seed)?;
    if a.iterations == 0 {
        return Err(CliError::Usage("--iterations must be at least 1".into()));
    }
    let iterations = if alg == Algorithm::Mv { 1 } else { a.iterations };
    let pp = setup(&ProtocolConfig { w: a.data.w, ..Default::default() })?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let openings = Openings::random(&pp, v.m(), &mut rng);
    let mut q = initial_quality(alg, v.m(), &pp.prior, pp.w())?;
    let mut r = Report::new("prove");
    let (mut prove_ms, mut bytes, mut paths) = (0, 0, Vec::new());
    let mut labels = Vec::new();
    for t in 0..iterations {
        let start = Instant::now();
        let out = prove(&pp, alg, &v, &openings, &q, t as u32)?;
        prove_ms += ms(start);
        let encoded = out.bundle.export(&pp.sponge, !a.strip_witness)?;
        let path = bundle_path(&a.output, t, iterations);
        std::fs::write(&path, &encoded).map_err(|source| CliError::Io { path: path.clone(), source })?;
        bytes += encoded.len();
        paths.push(path.display().to_string());
        r.constraints_total = Some(out.layout.num_constraints);
        let mut regions = BTreeMap::new();
        for (name, range) in &out.layout.regions {
            *regions.entry(name.clone()).or_insert(0) += range.len();
        }
        r.constraints_by_region = Some(regions);
        q = QualityState { q: out.statement.quality(alg)?, ratio: None };
        labels = out.labels;
    }
    r.alg = Some(alg.name());
    r.n = Some(v.n());
    r.m = Some(v.m());
    r.l = Some(v.l());
    r.w = Some(pp.w());
    r.seed = Some(seed);
    r.prove_ms = Some(prove_ms);
    r.bundle_bytes = Some(bytes);
    r.bundles = Some(paths);
    r.iterations = Some(iterations);
    if alg != Algorithm::Mv {
        r.q_summary = QSummary::of(&q.q);
    }
    r.labels = Some(labels);
    Ok(r)
}

fn cmd_verify(a: &VerifyArgs) -> Result<Report> {
    let backend = match a.backend {
        BackendArg::Mock => Backend::Mock,
        BackendArg::External => Backend::External,
    };
    let pp = setup(&ProtocolConfig { w: a.w, backend, ..Default::default() })?;
    let mut r = Report::new("verify");
    r.w = Some(a.w);
    r.bundles = Some(a.bundles.iter().map(|p| p.display().to_string()).collect());
    let start = Instant::now();
    let mut bundles = Vec::with_capacity(a.bundles.len());
    for path in &a.bundles {
        let bytes = std::fs::read(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
        match ProofBundle::import(&pp.sponge, &bytes) {
            Ok(b) => bundles.push(b),
            Err(e) => {
                r.verdict = Some("reject");
                r.reason_code = Some("malformed_bundle");
                r.reason = Some(format!("{}: {e}", path.display()));
                r.verify_ms = Some(ms(start));
                return Ok(r);
            }
        }
    }
    let verdict = if bundles.len() == 1 { verify(&pp, &bundles[0])? } else { verify_chain(&pp, &bundles)? };
    r.verify_ms = Some(ms(start));
    let h = &bundles[0].header;
    r.alg = Some(h.alg.name());
    r.n = Some(h.dims.n);
    r.m = Some(h.dims.m);
    r.l = Some(h.dims.l);
    r.iterations = Some(bundles.len());
    r.constraints_total = Some(bundles[0].cs.num_constraints());
    match verdict {
        Verdict::Accept => r.verdict = Some("accept"),
        Verdict::Reject(why) => {
            r.verdict = Some("reject");
            r.reason_code = Some(why.code());
            r.reason = Some(why.to_string());
        }
    }
    Ok(r)
}

type Synth = fn(&mut Builder, &FloatCtx, &FloatVar, &FloatVar, &FloatVar, Option<&FloatAux>) -> zkti::Result<()>;

fn op_constraints(synth: Synth, w: u32) -> Result<usize> {
    let mut b = Builder::shape(Field::bn254());
    let r = b.alloc_public("r", None)?;
    let z = b.alloc_public("z", None)?;
    let ctx = FloatCtx::new(w, r.into(), z.into());
    let x = alloc_float(&mut b, "a", None)?;
    let y = alloc_float(&mut b, "b", None)?;
    let s = b.alloc_witness("c.s", None)?;
    let e = b.alloc_witness("c.e", None)?;
    let c = FloatVar { s: s.into(), e: e.into(), zero: ZeroFlag::Never };
    let before = b.num_constraints();
    synth(&mut b, &ctx, &x, &y, &c, None)?;
    Ok(b.num_constraints() - before)
}

/// Published per-op gate counts (add, mul, div).
fn op_reference(w: u32) -> Option<[usize; 3]> {
    match w {
        23 => Some([131, 82, 82]),
        16 => Some([110, 61, 61]),
        8 => Some([86, 37, 37]),
        _ => None,
    }
}

fn circuit_reference(alg: Algorithm, w: u32, n: usize, m: usize) -> Option<usize> {
    if (w, n, m) != (23, 100, 30) {
        return None;
    }
    Some(match alg {
        Algorithm::Mv => 570_000,
        Algorithm::Crh => 1_760_000,
        Algorithm::Zc => 2_210_000,
    })
}

fn cmd_bench(a: &BenchArgs) -> Result<Report> {
    let mut ops = Vec::new();
    let mut circuits = Vec::new();
    for &w in &a.w {
        let pp = setup(&ProtocolConfig { w, ..Default::default() }).map_err(|e| CliError::Usage(e.to_string()))?;
        let synths: [(&'static str, Synth); 3] = [("add", synth_float_add), ("mul", synth_float_mul), ("div", synth_float_div)];
        for (k, (op, synth)) in synths.into_iter().enumerate() {
            let constraints = op_constraints(synth, w)?;
            let reference = op_reference(w).map(|r| r[k]);
            ops.push(OpRow { w, op, constraints, reference, delta_pct: reference.map(|x| delta_pct(constraints, x)) });
        }
        if a.ops_only {
            continue;
        }
        for alg in Algorithm::ALL {
            let dims = Dims { n: a.tasks, m: a.workers, l: 2 };
            let (_, layout) = synth_iteration(&pp, alg, dims)?;
            let mut by_region = BTreeMap::new();
            for (name, range) in &layout.regions {
                *by_region.entry(name.clone()).or_insert(0) += range.len();
            }
            let reference = circuit_reference(alg, w, a.tasks, a.workers);
            circuits.push(CircuitRow {
                w,
                alg: alg.name(),
                n: a.tasks,
                m: a.workers,
                constraints_total: layout.num_constraints,
                constraints_by_region: by_region,
                reference,
                delta_pct: reference.map(|x| delta_pct(layout.num_constraints, x)),
            });
        }
    }
    let mut r = Report::new("bench-gates");
    r.ops = Some(ops);
    if !a.ops_only {
        r.circuits = Some(circuits);
    }
    Ok(r)
}

fn emit(report: &Report, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => {
            let w = create(path)?;
            serde_json::to_writer_pretty(w, report)?;
        }
        None => {
            println!("{}", serde_json::to_string_pretty(report)?);
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<Report> {
    match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Infer(a) => cmd_infer(a),
        Command::Prove(a) => cmd_prove(a),
        Command::Verify(a) => cmd_verify(a),
        Command::BenchGates(a) => cmd_bench(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let report = match run(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = emit(&report, cli.out.as_deref()) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    if report.verdict == Some("reject") {
        if let Some(reason) = &report.reason {
            eprintln!("rejected: {reason}");
        }
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}
