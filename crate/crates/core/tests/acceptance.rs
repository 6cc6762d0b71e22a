//! Acceptance checks, one test per criterion. Every test prints a single
//! `criterion N: PASS|FAIL ...` line to stderr (bypassing output capture).
//! Tests share a lock so timings are not disturbed by each other.

use std::io::Write;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use zkti::commitment::{commit, synth_open, SpongeParams};
use zkti::float::circuit::{alloc_float, synth_float_add, synth_float_div, synth_float_mul, FloatCtx, FloatVar, ZeroFlag};
use zkti::float::{Float, FloatAux};
use zkti::gadgets::{bit_decompose, compare, exponential_check};
use zkti::inference::{
    initial_quality, run_inference, AnswerMatrix, Algorithm, PriorFactors, QualityState, SoftTruth,
};
use zkti::protocol::{
    commit_answers, prove, rebind_challenges, setup, synth_iteration, verify, BundleHeader, Dims, Openings, ProofBundle,
    ProtocolConfig, PublicParams,
};
use zkti::r1cs::Witness;
use zkti::synthetic::{generate, SyntheticConfig};
use zkti::{Builder, Field, FieldElement, Lc};

static LOCK: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    LOCK.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(id: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "criterion {id}: {verdict} {detail}");
}

fn finish(id: &str, pass: bool, detail: String) {
    report(id, pass, &detail);
    assert!(pass, "criterion {id}: {detail}");
}

fn satisfied(b: Builder) -> bool {
    let publics = b.public_values().expect("prove mode");
    let (cs, w) = b.finish();
    cs.is_satisfied(&publics, &w.expect("prove mode")).unwrap().is_satisfied()
}

fn fe(v: u64) -> FieldElement {
    FieldElement::from_u64(v)
}

fn secs(d: Duration) -> String {
    format!("{:.1}s", d.as_secs_f64())
}

// ---------------------------------------------------------------- criterion 1

#[test]
fn criterion_01_gadget_exactness() {
    let _g = serial();
    let start = Instant::now();
    let f = Field::bn254();
    let mut failures = Vec::new();

    // compare, all pairs below 2^8, one builder per left operand
    for a in 0u64..256 {
        let mut b = Builder::prove(f);
        let av: Lc = b.alloc_witness("a", Some(fe(a))).unwrap().into();
        let mut bits = Vec::with_capacity(256);
        for rhs in 0u64..256 {
            let bv: Lc = b.alloc_witness("b", Some(fe(rhs))).unwrap().into();
            bits.push((rhs, compare(&mut b, &av, &bv, 8).unwrap()));
        }
        for (rhs, bit) in &bits {
            if b.value(bit) != Some(fe((a <= *rhs) as u64)) {
                failures.push(format!("compare({a},{rhs})"));
            }
        }
        if !satisfied(b) {
            failures.push(format!("compare row {a} unsatisfied"));
        }
    }

    // exponential_check: bits forced by the recomposition, out forced by the chain
    for a in 0u64..32 {
        for p in 0u64..32 {
            for claimed in [1u64 << p, (1u64 << a) + 1, 0] {
                let mut b = Builder::prove(f).lenient();
                let av = b.alloc_witness("a", Some(fe(p))).unwrap();
                let out = b.alloc_witness("out", Some(fe(claimed))).unwrap();
                exponential_check(&mut b, &av.into(), &out.into(), 5).unwrap();
                let (cs, w) = b.finish();
                let mut assignment = w.unwrap().assignment;
                assignment[av.index as usize] = fe(a);
                let ok = cs.is_satisfied(&[], &Witness { assignment }).unwrap().is_satisfied();
                let expected = p == a && claimed == 1u64 << a;
                if ok != expected {
                    failures.push(format!("exponential_check a={a} bits={p} out={claimed}: {ok}"));
                }
            }
        }
    }

    // bit_decompose round trip below 2^12, and rejection of 2^12
    let mut b = Builder::prove(f);
    for v in 0u64..(1 << 12) {
        let x: Lc = b.alloc_witness("v", Some(fe(v))).unwrap().into();
        let bits = bit_decompose(&mut b, "v", &x, 12).unwrap();
        let back: u64 = (0..12).map(|i| b.value(&bits.bit(i)).unwrap().to_u64().unwrap() << i).sum();
        if back != v {
            failures.push(format!("bit_decompose({v}) = {back}"));
        }
    }
    if !satisfied(b) {
        failures.push("bit_decompose batch unsatisfied".into());
    }
    let mut b = Builder::prove(f).lenient();
    let x: Lc = b.alloc_witness("v", Some(fe(1 << 12))).unwrap().into();
    bit_decompose(&mut b, "v", &x, 12).unwrap();
    if satisfied(b) {
        failures.push("2^12 fits in 12 bits".into());
    }

    let elapsed = start.elapsed();
    let pass = failures.is_empty() && elapsed < Duration::from_secs(30);
    finish("1", pass, format!("65536 compares, 3072 exponential claims, 4096 decompositions in {} (limit 30s) {failures:?}", secs(elapsed)));
}

// ---------------------------------------------------------------- criterion 2

fn normalized(w: u32) -> std::ops::Range<u128> {
    (1u128 << (w - 1))..(1u128 << w)
}

#[test]
fn criterion_02_theta_lemmas() {
    let _g = serial();
    let start = Instant::now();
    let mut cases = 0u64;
    let mut bad = Vec::new();
    for w in [4u32, 5] {
        for sa in normalized(w) {
            for sb in normalized(w) {
                let a = Float::new(sa, 0, w).unwrap();
                let b = Float::new(sb, 0, w).unwrap();
                for (name, (c, aux)) in [("mul", a.mul(&b).unwrap()), ("div", a.div(&b).unwrap())] {
                    cases += 1;
                    let theta = aux.unwrap().theta;
                    if !(theta == w as i32 - 1 || theta == w as i32) || !normalized(w).contains(&c.s()) {
                        bad.push(format!("{name} w={w} {sa} {sb} theta={theta}"));
                    }
                }
                for lambda in 0..=w as i32 {
                    let hi = Float::new(sa, lambda, w).unwrap();
                    for (x, y) in [(hi, b), (b, hi)] {
                        cases += 1;
                        let (c, aux) = x.add(&y).unwrap();
                        let aux = aux.unwrap();
                        let ok = aux.lambda == Some(lambda)
                            && (aux.theta == lambda || aux.theta == lambda + 1)
                            && normalized(w).contains(&c.s());
                        if !ok {
                            bad.push(format!("add w={w} {sa} {sb} lambda={lambda} {aux:?}"));
                        }
                    }
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = bad.is_empty() && elapsed < Duration::from_secs(60);
    finish("2", pass, format!("{cases} cases, {} outside the lemma sets, {} (limit 60s) {bad:?}", bad.len(), secs(elapsed)));
}

// ---------------------------------------------------------------- criterion 3

fn random_float(rng: &mut impl Rng, w: u32, e: std::ops::RangeInclusive<i32>) -> Float {
    Float::new(rng.gen_range(normalized(w)), rng.gen_range(e), w).unwrap()
}

fn rel_error(got: &Float, exact: &BigRational) -> BigRational {
    ((got.decode() - exact) / exact).abs()
}

#[test]
fn criterion_03_relative_error() {
    let _g = serial();
    let start = Instant::now();
    let w = 23;
    let delta = BigRational::new(BigInt::one(), BigInt::one() << (w - 1));
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let (mut worst, mut cutoffs, mut bad) = (BigRational::zero(), 0u32, 0u32);
    for t in 0..100_000u32 {
        let a = random_float(&mut rng, w, -40..=40);
        let (c, aux, exact) = match t % 3 {
            0 => {
                let b = random_float(&mut rng, w, -40..=40);
                let (c, aux) = a.mul(&b).unwrap();
                (c, aux, a.decode() * b.decode())
            }
            1 => {
                let b = random_float(&mut rng, w, -40..=40);
                let (c, aux) = a.div(&b).unwrap();
                (c, aux, a.decode() / b.decode())
            }
            _ => {
                // a quarter of the additions land past the cutoff gap
                let gap = if rng.gen_bool(0.25) { rng.gen_range(w as i32 + 1..=60) } else { rng.gen_range(0..=w as i32) };
                let b = Float::new(rng.gen_range(normalized(w)), a.e() - gap, w).unwrap();
                let (x, y) = if rng.gen() { (a, b) } else { (b, a) };
                let (c, aux) = x.add(&y).unwrap();
                (c, aux, x.decode() + y.decode())
            }
        };
        if aux.is_some_and(|x| x.cutoff) {
            cutoffs += 1;
        }
        let err = rel_error(&c, &exact);
        if err > delta {
            bad += 1;
        }
        if err > worst {
            worst = err;
        }
    }
    let elapsed = start.elapsed();
    let worst_in_delta = (worst / &delta).to_f64().unwrap();
    let pass = bad == 0 && cutoffs > 0 && elapsed < Duration::from_secs(60);
    finish(
        "3",
        pass,
        format!("100000 ops, {bad} beyond delta, worst error {worst_in_delta:.4} delta, {cutoffs} cutoff additions, {} (limit 60s)", secs(elapsed)),
    );
}

// ---------------------------------------------------------------- criterion 4

type Synth = fn(&mut Builder, &FloatCtx, &FloatVar, &FloatVar, &FloatVar, Option<&FloatAux>) -> zkti::Result<()>;

fn op_gates(synth: Synth, w: u32) -> usize {
    let mut b = Builder::shape(Field::bn254());
    let r = b.alloc_public("r", None).unwrap();
    let z = b.alloc_public("z", None).unwrap();
    let ctx = FloatCtx::new(w, r.into(), z.into());
    let x = alloc_float(&mut b, "a", None).unwrap();
    let y = alloc_float(&mut b, "b", None).unwrap();
    let s = b.alloc_witness("c.s", None).unwrap();
    let e = b.alloc_witness("c.e", None).unwrap();
    let c = FloatVar { s: s.into(), e: e.into(), zero: ZeroFlag::Never };
    let before = b.num_constraints();
    synth(&mut b, &ctx, &x, &y, &c, None).unwrap();
    b.num_constraints() - before
}

fn within(got: f64, target: f64, tol: f64) -> bool {
    (got - target).abs() <= tol * target
}

#[test]
fn criterion_04a_gate_counts_per_op() {
    let _g = serial();
    let targets = [(23u32, [131.0, 82.0, 82.0]), (16, [110.0, 61.0, 61.0]), (8, [86.0, 37.0, 37.0])];
    let ops: [(&str, Synth); 3] = [("add", synth_float_add), ("mul", synth_float_mul), ("div", synth_float_div)];
    let mut pass = true;
    let mut detail = Vec::new();
    for (w, t) in targets {
        for ((name, synth), target) in ops.iter().zip(t) {
            let g = op_gates(*synth, w);
            pass &= within(g as f64, target, 0.20);
            detail.push(format!("{name}@{w}={g}/{target}"));
        }
    }
    finish("4a", pass, format!("per-op constraints vs targets (+-20%): {}", detail.join(" ")));
}

#[test]
fn criterion_04b_crh_precision_reduction() {
    let _g = serial();
    let dims = Dims { n: 100, m: 30, l: 2 };
    let mut sizes = Vec::new();
    for w in [23u32, 16, 8] {
        let pp = setup(&ProtocolConfig { w, ..Default::default() }).unwrap();
        let (_, layout) = synth_iteration(&pp, Algorithm::Crh, dims).unwrap();
        let fixed = layout.region_size("inputs") + layout.region_size("openings");
        sizes.push((w, layout.num_constraints, layout.num_constraints - fixed));
    }
    let (_, full, full_alg) = sizes[0];
    let mut pass = true;
    let mut detail = Vec::new();
    for ((w, total, alg_only), target) in sizes[1..].iter().zip([78.7, 54.7]) {
        let pct = 100.0 * *total as f64 / full as f64;
        let alg_pct = 100.0 * *alg_only as f64 / full_alg as f64;
        pass &= (pct - target).abs() <= 10.0;
        detail.push(format!("w={w}: {total} = {pct:.1}% of w=23 (target {target}% +-10pp; inference part alone {alg_pct:.1}%)"));
    }
    finish("4b", pass, format!("CRH 100x30 at w=23 has {full} constraints; {}", detail.join("; ")));
}

// ---------------------------------------------------------------- criterion 5

fn pp() -> PublicParams {
    setup(&ProtocolConfig::default()).unwrap()
}

fn instance(n: usize, m: usize, l: u32, seed: u64, pp: &PublicParams) -> (AnswerMatrix, Openings) {
    let d = generate(&SyntheticConfig { tasks: n, workers: m, choices: l, seed, ..Default::default() }).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9) ^ 5);
    let openings = Openings::random(pp, m, &mut rng);
    (d.answers, openings)
}

#[test]
fn criterion_05_circuit_sizes() {
    let _g = serial();
    let p = pp();
    let (v, o) = instance(100, 30, 2, 55, &p);
    let mut pass = true;
    let mut detail = Vec::new();
    for (alg, target) in [(Algorithm::Mv, 570_000.0), (Algorithm::Crh, 1_760_000.0), (Algorithm::Zc, 2_210_000.0)] {
        let q0 = initial_quality(alg, 30, &p.prior, p.w()).unwrap();
        let start = Instant::now();
        // prove synthesizes the shape and the witness and checks satisfiability
        let out = prove(&p, alg, &v, &o, &q0, 0).unwrap();
        let elapsed = start.elapsed();
        let size = out.layout.num_constraints;
        let ok = within(size as f64, target, 0.30) && elapsed < Duration::from_secs(300);
        pass &= ok;
        detail.push(format!("{alg} {size} (target {target}, +-30%) in {}", secs(elapsed)));
    }

    // 30 worker openings of 100 answers each
    let sponge = SpongeParams::bn254();
    let mut b = Builder::shape(Field::bn254());
    for _ in 0..30 {
        let c: Lc = b.alloc_public("com", None).unwrap().into();
        let r: Lc = b.alloc_witness("rand", None).unwrap().into();
        let msg: Vec<Lc> = (0..100).map(|_| b.alloc_witness("answer", None).unwrap().into()).collect();
        synth_open(&mut b, sponge, &c, &msg, &r).unwrap();
    }
    let commitments = b.num_constraints();
    pass &= commitments <= 600_000;
    detail.push(format!("commitments for 30x100 answers {commitments} (limit 600000)"));
    finish("5", pass, detail.join("; "));
}

// ---------------------------------------------------------------- criterion 6

fn rejects(p: &PublicParams, b: &ProofBundle) -> bool {
    !verify(p, b).unwrap().is_accept()
}

#[test]
fn criterion_06_completeness_and_soundness() {
    let _g = serial();
    let start = Instant::now();
    let p = pp();
    let mut rng = ChaCha20Rng::seed_from_u64(6);
    let (mut honest, mut honest_ok, mut tampered, mut caught) = (0u32, 0u32, 0u32, 0u32);
    let mut misses = Vec::new();
    for alg in Algorithm::ALL {
        for t in 0..100u64 {
            let n = rng.gen_range(1..=20);
            let m = rng.gen_range(1..=10);
            let l = if t % 4 == 3 { 3 } else { 2 };
            let (v, o) = instance(n, m, l, rng.gen(), &p);
            let q0 = initial_quality(alg, m, &p.prior, p.w()).unwrap();
            let out = prove(&p, alg, &v, &o, &q0, 0).unwrap();
            honest += 1;
            if verify(&p, &out.bundle).unwrap().is_accept() {
                honest_ok += 1;
            }
            let mut attempt = |name: &str, bundle: &ProofBundle| {
                tampered += 1;
                if rejects(&p, bundle) {
                    caught += 1;
                } else {
                    misses.push(format!("{alg} {n}x{m} {name}"));
                }
            };

            // commitment swap
            let mut b = out.bundle.clone();
            let other = if m > 1 { 1 } else { m };
            b.public_inputs.swap(0, other);
            rebind_challenges(&p, &mut b);
            attempt("commitment swap", &b);

            // quality perturbation of three units in the last place
            if alg != Algorithm::Mv {
                let mut b = out.bundle.clone();
                let j = rng.gen_range(0..m);
                let slot = out.layout.public_slots.iter().find(|s| s.0 == "q_out").unwrap().1.start + 2 * j;
                b.public_inputs[slot] = p.field.add(b.public_inputs[slot], fe(3));
                rebind_challenges(&p, &mut b);
                attempt("quality perturbation", &b);
            }

            // one flipped answer, proven honestly, presented under the original commitment
            let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..m));
            let mut rows: Vec<Vec<u32>> = (0..n).map(|i| (0..m).map(|j| v.get(i, j).unwrap()).collect()).collect();
            rows[i][j] = (rows[i][j] + 1) % l;
            let flipped = AnswerMatrix::dense(l, &rows).unwrap();
            let mut b = prove(&p, alg, &flipped, &o, &q0, 0).unwrap().bundle;
            b.public_inputs[j] = commit_answers(&p, &v.worker_column(j).unwrap(), o.workers[j]).digest;
            rebind_challenges(&p, &mut b);
            attempt("answer flip", &b);
        }
    }
    let elapsed = start.elapsed();
    let pass = honest_ok == honest && caught == tampered;
    finish(
        "6",
        pass,
        format!("{honest_ok}/{honest} honest proofs accepted, {caught}/{tampered} tampered proofs rejected in {} {misses:?}", secs(elapsed)),
    );
}

// ---------------------------------------------------------------- criterion 7

/// Exact-rational oracle for one iteration, driven by the same input qualities
/// as the float run. Labels are sets: an exact tie admits every tied choice.
struct Oracle {
    delta: BigRational,
    checks: u64,
    failures: Vec<String>,
    bounds: std::collections::HashMap<usize, BigRational>,
}

impl Oracle {
    /// `(1 - delta)^-k - 1`, the accumulated relative bound for `k` rounded ops.
    fn bound(&mut self, k: usize) -> BigRational {
        let delta = &self.delta;
        self.bounds
            .entry(k)
            .or_insert_with(|| {
                let base = BigRational::one() - delta;
                let mut p = BigRational::one();
                for _ in 0..k {
                    p *= &base;
                }
                p.recip() - BigRational::one()
            })
            .clone()
    }

    fn close(&mut self, what: &str, got: &Float, exact: &BigRational, k: usize) {
        self.checks += 1;
        let ok = if exact.is_zero() {
            got.is_zero()
        } else {
            let bound = self.bound(k);
            rel_error(got, exact) <= bound
        };
        if !ok {
            self.failures.push(format!("{what}: {} vs {} (k={k})", got.to_f64(), exact.to_f64().unwrap()));
        }
    }

    fn label(&mut self, what: &str, got: u32, admissible: &[u32]) {
        self.checks += 1;
        if !admissible.contains(&got) {
            self.failures.push(format!("{what}: label {got} not in {admissible:?}"));
        }
    }
}

fn exact_argmax(values: &[BigRational]) -> Vec<u32> {
    let max = values.iter().max().unwrap();
    (0..values.len() as u32).filter(|&k| &values[k as usize] == max).collect()
}

fn half(k: i64) -> BigRational {
    BigRational::new(BigInt::from(2 * k - 1), BigInt::from(2))
}

fn oracle_crh(o: &mut Oracle, v: &AnswerMatrix, q_in: &QualityState, rec: &zkti::inference::IterationRecord, prior: &PriorFactors) {
    let q: Vec<BigRational> = q_in.q.iter().map(Float::decode).collect();
    let SoftTruth::Weighted(soft) = &rec.truth.soft else { panic!("CRH soft truth") };
    for i in 0..v.n() {
        let answers: Vec<(usize, u32)> = v.answers_to(i).collect();
        let num: BigRational = answers.iter().map(|&(j, c)| &q[j] * BigInt::from(c)).sum();
        let den: BigRational = answers.iter().map(|&(j, _)| q[j].clone()).sum();
        let x = num / den;
        let k = 2 * (answers.len() - 1) + 1 + usize::from(v.l() > 2);
        o.close(&format!("crh soft[{i}]"), &soft[i], &x, k);
        let below = (1..v.l() as i64).filter(|&t| half(t) < x).count() as u32;
        let mut admissible = vec![below];
        if below + 1 < v.l() && x == half(below as i64 + 1) {
            admissible.push(below + 1);
        }
        o.label(&format!("crh label[{i}]"), rec.truth.labels[i], &admissible);
    }
    // distances use the float labels, which were just checked to be admissible
    let labels = &rec.truth.labels;
    let d: Vec<u64> = (0..v.m()).map(|j| v.tasks_of(j).filter(|&(i, c)| c != labels[i]).count() as u64).collect();
    let eps = prior.smoothing_float(23).unwrap().decode();
    let smooth = |x: u64| if x == 0 { eps.clone() } else { BigRational::from_integer(x.into()) };
    let total = smooth(d.iter().sum());
    let ratio = rec.q_out.ratio.as_ref().unwrap();
    for j in 0..v.m() {
        let exact = &total / smooth(d[j]);
        o.close(&format!("crh ratio[{j}]"), &ratio[j], &exact, 3);
        // the weight is a logarithm taken outside the float ops: absolute bound
        let expected = exact.to_f64().unwrap().ln().max(0.0);
        let d_f64 = o.delta.to_f64().unwrap();
        o.checks += 1;
        if (rec.q_out.q[j].to_f64() - expected).abs() > 3.0 * d_f64 + d_f64 * expected + 1e-12 {
            o.failures.push(format!("crh weight[{j}]: {} vs {expected}", rec.q_out.q[j].to_f64()));
        }
    }
}

fn oracle_zc(o: &mut Oracle, v: &AnswerMatrix, q_in: &QualityState, rec: &zkti::inference::IterationRecord) {
    let q: Vec<BigRational> = q_in.q.iter().map(Float::decode).collect();
    let SoftTruth::Posterior(post) = &rec.truth.soft else { panic!("ZC posterior") };
    let l = v.l() as usize;
    let mut exact_post = Vec::with_capacity(v.n());
    let mut k_post = Vec::with_capacity(v.n());
    for i in 0..v.n() {
        let answers: Vec<(usize, u32)> = v.answers_to(i).collect();
        let weights: Vec<BigRational> = (0..l as u32)
            .map(|k| {
                answers
                    .iter()
                    .map(|&(j, c)| if c == k { q[j].clone() } else { BigRational::one() - &q[j] })
                    .product()
            })
            .collect();
        let total: BigRational = weights.iter().sum();
        let p: Vec<BigRational> = weights.iter().map(|x| x / &total).collect();
        // product: cnt-1 multiplications and up to cnt rounded complements
        let k_prod = 2 * answers.len() - 1;
        let k = 2 * k_prod + l;
        for c in 0..l {
            o.close(&format!("zc posterior[{i}][{c}]"), &post[i][c], &p[c], k);
        }
        o.label(&format!("zc label[{i}]"), rec.truth.labels[i], &exact_argmax(&p));
        exact_post.push(p);
        k_post.push(k);
    }
    let lo = BigRational::new(BigInt::from(4), BigInt::one() << 22u32);
    let hi = BigRational::one() - &lo;
    for j in 0..v.m() {
        let tasks: Vec<(usize, u32)> = v.tasks_of(j).collect();
        let sum: BigRational = tasks.iter().map(|&(i, c)| exact_post[i][c as usize].clone()).sum();
        let mean = sum / BigRational::from_integer(BigInt::from(tasks.len()));
        let clamped = mean.clone().max(lo.clone()).min(hi.clone());
        let k = tasks.iter().map(|&(i, _)| k_post[i]).max().unwrap() + tasks.len() + 1;
        o.close(&format!("zc quality[{j}]"), &rec.q_out.q[j], &clamped, k);
    }
}

fn oracle_mv(o: &mut Oracle, v: &AnswerMatrix, rec: &zkti::inference::IterationRecord) {
    let SoftTruth::Votes(votes) = &rec.truth.soft else { panic!("MV votes") };
    for i in 0..v.n() {
        let mut exact = vec![0u64; v.l() as usize];
        for (_, c) in v.answers_to(i) {
            exact[c as usize] += 1;
        }
        o.checks += 1;
        if votes[i] != exact {
            o.failures.push(format!("mv votes[{i}]"));
        }
        let as_rat: Vec<BigRational> = exact.iter().map(|&c| BigRational::from_integer(c.into())).collect();
        o.label(&format!("mv label[{i}]"), rec.truth.labels[i], &exact_argmax(&as_rat));
    }
}

#[test]
fn criterion_07_oracle_equivalence() {
    let _g = serial();
    let start = Instant::now();
    let prior = PriorFactors::default();
    let mut o = Oracle { delta: BigRational::new(BigInt::one(), BigInt::one() << 22u32), checks: 0, failures: Vec::new(), bounds: Default::default() };
    let mut iterations = 0;
    for seed in 0..50u64 {
        let l = if seed % 5 == 4 { 3 } else { 2 };
        let d = generate(&SyntheticConfig { tasks: 20, workers: 10, choices: l, seed: 700 + seed, ..Default::default() }).unwrap();
        let v = &d.answers;
        for alg in Algorithm::ALL {
            let run = run_inference(alg, v, &prior, 23).unwrap();
            for rec in &run.trace {
                iterations += 1;
                match alg {
                    Algorithm::Mv => oracle_mv(&mut o, v, rec),
                    Algorithm::Crh => oracle_crh(&mut o, v, &rec.q_in, rec, &prior),
                    Algorithm::Zc => oracle_zc(&mut o, v, &rec.q_in, rec),
                }
            }
        }
    }
    let pass = o.failures.is_empty();
    o.failures.truncate(10);
    finish(
        "7",
        pass,
        format!("{} checks over {iterations} iterations on 50 instances in {} {:?}", o.checks, secs(start.elapsed()), o.failures),
    );
}

// ---------------------------------------------------------------- criterion 8

fn mean_accuracy(alg: Algorithm, seeds: std::ops::Range<u64>) -> f64 {
    let prior = PriorFactors::default();
    let count = seeds.end - seeds.start;
    let total: f64 = seeds
        .map(|seed| {
            let cfg = SyntheticConfig { tasks: 100, workers: 30, adversarial_frac: 0.3, quality: 0.8, seed, ..Default::default() };
            let d = generate(&cfg).unwrap();
            let run = run_inference(alg, &d.answers, &prior, 23).unwrap();
            zkti::inference::accuracy(&run.truth.labels, &d.truth).unwrap()
        })
        .sum();
    total / count as f64
}

#[test]
fn criterion_08_accuracy() {
    let _g = serial();
    let start = Instant::now();
    let mv = mean_accuracy(Algorithm::Mv, 0..50);
    let crh = mean_accuracy(Algorithm::Crh, 0..50);
    let zc = mean_accuracy(Algorithm::Zc, 0..50);
    let pass = crh >= mv && zc >= mv;
    let synthetic = format!("mean accuracy over 50 planted 100x30 instances: MV {mv:.4}, CRH {crh:.4}, ZC {zc:.4} in {}", secs(start.elapsed()));

    // conditional: the real dataset, when both files are supplied
    match (std::env::var("ZKTI_REAL_ANSWERS"), std::env::var("ZKTI_REAL_TRUTH")) {
        (Ok(answers), Ok(truth)) => {
            let v = zkti::dataset::read_answers(std::fs::File::open(answers).unwrap(), None).unwrap();
            let t = zkti::dataset::read_truth(std::fs::File::open(truth).unwrap(), v.n()).unwrap();
            let prior = PriorFactors::default();
            let acc = |alg| {
                let run = run_inference(alg, &v, &prior, 23).unwrap();
                100.0 * zkti::inference::accuracy(&run.truth.labels, &t).unwrap()
            };
            let (mv, crh, zc) = (acc(Algorithm::Mv), acc(Algorithm::Crh), acc(Algorithm::Zc));
            let real = (mv - 75.9).abs() <= 1.5 && (crh - 78.4).abs() <= 1.5 && (zc - 78.4).abs() <= 1.5;
            report("8 (real data)", real, &format!("MV {mv:.1}% (75.9), CRH {crh:.1}% (78.4), ZC {zc:.1}% (78.4), +-1.5pp"));
            finish("8", pass && real, synthetic);
        }
        _ => {
            let _ = writeln!(std::io::stderr(), "criterion 8 (real data): SKIPPED set ZKTI_REAL_ANSWERS and ZKTI_REAL_TRUTH to run it");
            finish("8", pass, synthetic);
        }
    }
}

// ---------------------------------------------------------------- criterion 9

/// A bundle around a small float circuit, cheap enough to re-import a thousand times.
fn small_bundle(p: &PublicParams) -> ProofBundle {
    let mut b = Builder::prove(p.field);
    let r = b.alloc_public("r", Some(fe(0x1234_5678))).unwrap();
    let z = b.alloc_public("z", Some(fe(0x9abc_def0))).unwrap();
    let ctx = FloatCtx::new(23, r.into(), z.into());
    let x = Float::from_f64(0.3, 23).unwrap();
    let y = Float::from_f64(0.7, 23).unwrap();
    let xv = alloc_float(&mut b, "x", Some(&x)).unwrap();
    let yv = alloc_float(&mut b, "y", Some(&y)).unwrap();
    let s = zkti::float::circuit::float_add(&mut b, &ctx, &xv, &yv).unwrap();
    zkti::float::circuit::float_mul(&mut b, &ctx, &s, &yv).unwrap();
    let public_inputs = b.public_values().unwrap();
    let (cs, witness) = b.finish();
    let header = BundleHeader::new(p, Algorithm::Mv, Dims { n: 1, m: 1, l: 2 }, 0);
    ProofBundle { header, layout_digest: [7; 32], public_inputs, cs, witness }
}

#[test]
fn criterion_09_serialization() {
    let _g = serial();
    let start = Instant::now();
    let p = pp();
    let mut rng = ChaCha20Rng::seed_from_u64(9);
    let mut identical = 0;
    for t in 0..20u64 {
        let alg = Algorithm::ALL[t as usize % 3];
        let (n, m, l) = (rng.gen_range(1..=3), rng.gen_range(1..=2), rng.gen_range(2..=3));
        let (v, o) = instance(n, m, l, rng.gen(), &p);
        let q0 = initial_quality(alg, m, &p.prior, p.w()).unwrap();
        let bundle = prove(&p, alg, &v, &o, &q0, 0).unwrap().bundle;
        let with_witness = t % 2 == 0;
        let bytes = bundle.export(&p.sponge, with_witness).unwrap();
        let back = ProofBundle::import(&p.sponge, &bytes).unwrap();
        let expected = if with_witness { bundle.clone() } else { bundle.stripped() };
        if back == expected && back.export(&p.sponge, with_witness).unwrap() == bytes {
            identical += 1;
        }
    }

    let small = small_bundle(&p).export(&p.sponge, true).unwrap();
    let mut detected = 0;
    for _ in 0..1000 {
        let mut bad = small.clone();
        let pos = rng.gen_range(0..bad.len());
        bad[pos] ^= rng.gen_range(1..=255u8);
        if ProofBundle::import(&p.sponge, &bad).is_err() {
            detected += 1;
        }
    }
    let pass = identical == 20 && detected == 1000;
    finish(
        "9",
        pass,
        format!(
            "{identical}/20 round trips byte-identical, {detected}/1000 single-byte corruptions of a {}-byte bundle detected in {}",
            small.len(),
            secs(start.elapsed())
        ),
    );
}

// ---------------------------------------------------------------- criterion 10

#[test]
fn criterion_10_commitment_consistency() {
    let _g = serial();
    let start = Instant::now();
    let sponge = SpongeParams::bn254();
    let f = *sponge.field();
    let mut rng = ChaCha20Rng::seed_from_u64(10);
    let (mut honest, mut unique) = (0, 0);
    for _ in 0..1000 {
        let len = rng.gen_range(0..=12);
        let msg: Vec<FieldElement> = (0..len).map(|_| f.random(&mut rng)).collect();
        let rand = f.random(&mut rng);
        let digest = commit(sponge, &msg, rand).digest;
        let mut b = Builder::prove(f);
        let c = b.alloc_public("com", Some(digest)).unwrap();
        let r = b.alloc_witness("rand", Some(rand)).unwrap();
        let mv: Vec<_> = msg.iter().map(|x| b.alloc_witness("msg", Some(*x)).unwrap()).collect();
        let lcs: Vec<Lc> = mv.iter().map(|&x| x.into()).collect();
        synth_open(&mut b, sponge, &c.into(), &lcs, &r.into()).unwrap();
        let (cs, w) = b.finish();
        let w = w.unwrap();
        if cs.is_satisfied(&[digest], &w).unwrap().is_satisfied() {
            honest += 1;
        }
        // any other digest, randomness or message element breaks the opening
        let other_digest = !cs.is_satisfied(&[f.add(digest, FieldElement::ONE)], &w).unwrap().is_satisfied();
        let mut w2 = w.clone();
        w2.assignment[r.index as usize] = f.add(rand, FieldElement::ONE);
        let other_rand = !cs.is_satisfied(&[digest], &w2).unwrap().is_satisfied();
        let other_msg = match mv.first() {
            Some(x) => {
                let mut w3 = w.clone();
                w3.assignment[x.index as usize] = f.add(msg[0], FieldElement::ONE);
                !cs.is_satisfied(&[digest], &w3).unwrap().is_satisfied()
            }
            None => true,
        };
        if other_digest && other_rand && other_msg {
            unique += 1;
        }
    }

    let mut state = vec![fe(0), fe(1), fe(2), fe(3), fe(4)];
    sponge.permute(&mut state);
    let published = hex::decode("299c867db6c1fdd79dcefa40e4510b9837e60ebb1ce0663dbaa525df65250465").unwrap();
    let vector = state[0].to_be_bytes()[..] == published[..];

    let pass = honest == 1000 && unique == 1000 && vector;
    finish(
        "10",
        pass,
        format!("{honest}/1000 openings satisfied, {unique}/1000 reject altered digest/randomness/message, published vector {} in {}", if vector { "matches" } else { "differs" }, secs(start.elapsed())),
    );
}
