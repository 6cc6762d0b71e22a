"""Smoke test for the zkti_py extension module.

Build and install it first:

    pip install maturin
    maturin build --release -m crates/python/Cargo.toml -o target/wheels
    pip install target/wheels/zkti-*.whl

Optionally pass the path of a built `zkti` binary to also validate its JSON
reports against crates/cli/schema/report.schema.json.
"""

import json
import pathlib
import subprocess
import sys
import tempfile

import zkti_py as z

ROOT = pathlib.Path(__file__).resolve().parent.parent
P = 21888242871839275222246405745257275088548364400416034343698204186575808495617


def check(name, cond):
    print(f"{'ok  ' if cond else 'FAIL'} {name}")
    if not cond:
        check.failed += 1


check.failed = 0


def floats():
    w = 23
    a, b = z.Float.from_f64(0.75, w), z.Float.from_f64(1.5, w)
    check("float mul", a.mul(b).to_f64() == 1.125)
    check("float div", a.div(b).to_f64() == 0.5)
    check("float add", a.add(b).to_f64() == 2.25)
    check("float leq", a.leq(b) and not b.leq(a))
    third = z.Float.from_f64(1.0, w).div(z.Float.from_f64(3.0, w))
    check("float rounding within delta", abs(third.to_f64() - 1 / 3) <= 2 ** -(w - 1) / 3)
    check("float fields", (a.s, a.w) == (3 << (w - 2), w) and z.Float.zero(w).is_zero)
    try:
        z.Float(1, 0, 23)
        check("unnormalized significand rejected", False)
    except z.ZktiError:
        check("unnormalized significand rejected", True)


def inference():
    v = z.AnswerMatrix([[1, 1, 0], [0, 0, 1]])
    check("answer matrix dims", (v.n, v.m, v.l) == (2, 3, 2))
    check("mv labels", z.infer("mv", v).labels == [1, 0])
    answers, truth = z.generate(tasks=100, workers=30, seed=3)
    acc = {alg: z.accuracy(z.infer(alg, answers).labels, truth) for alg in ("mv", "crh", "zc")}
    print("     accuracy", acc)
    check("weighted algorithms beat majority", acc["crh"] >= acc["mv"] and acc["zc"] >= acc["mv"])
    q = z.infer("crh", answers).quality
    check("crh quality per worker", len(q) == 30 and all(x > 0 for x in q))


def commitments():
    msg, r = [1, 2, 3], 12345
    c = z.commit(msg, r)
    check("commit deterministic", c == z.commit(msg, r))
    check("commit is hash of randomness then message", c == z.hash([r] + msg))
    check("commit binds randomness", c != z.commit(msg, r + 1))
    check("commit binds message", c != z.commit([1, 2, 4], r))
    check("digest in field", 0 <= c < P)
    try:
        z.commit([P], 0)
        check("out-of-field input rejected", False)
    except ValueError:
        check("out-of-field input rejected", True)


def protocol():
    pp = z.Params(w=23)
    answers, _ = z.generate(tasks=4, workers=3, seed=1)
    for alg in ("mv", "crh", "zc"):
        proof = z.prove(pp, alg, answers, seed=9)
        b = proof.bundles[0]
        check(f"{alg} honest proof accepted", z.verify(pp, b).accepted)
        check(f"{alg} labels match inference", proof.labels == z.infer(alg, answers, max_iter=1).labels)
    proof = z.prove(pp, "crh", answers, seed=9, iterations=2)
    check("chain accepted", bool(z.verify_chain(pp, proof.bundles)))
    bad = z.verify_chain(pp, proof.bundles[::-1])
    check("reordered chain rejected", not bad.accepted and bad.code == "chain_mismatch")
    b = proof.bundles[0]
    data = b.to_bytes(pp)
    check("bundle starts with magic", data[:4] == b"zkb1")
    back = z.Bundle.from_bytes(pp, data)
    check("bundle round trip", back.public_inputs == b.public_inputs and z.verify(pp, back).accepted)
    corrupt = bytearray(data)
    corrupt[len(corrupt) // 2] ^= 1
    try:
        z.Bundle.from_bytes(pp, bytes(corrupt))
        check("corrupt bundle rejected", False)
    except z.ZktiError:
        check("corrupt bundle rejected", True)
    v = z.verify(pp, b.stripped())
    check("mock backend needs the witness", v.code == "witness_required")
    check("external backend checks structure", z.verify(z.Params(backend="external"), b.stripped()).accepted)
    check("other precision rejected", z.verify(z.Params(w=16), b).code == "params_mismatch")


def cli(binary):
    import jsonschema

    schema = json.loads((ROOT / "crates/cli/schema/report.schema.json").read_text())
    with tempfile.TemporaryDirectory() as d:
        runs = [
            ["gen", "--tasks", "5", "--workers", "3", "-o", "d.csv"],
            ["infer", "--alg", "zc", "--data", "d.csv", "--truth", "d.truth.csv"],
            ["prove", "--alg", "mv", "--data", "d.csv", "-o", "p.zkb"],
            ["verify", "p.zkb"],
            ["bench-gates", "--ops-only"],
        ]
        for args in runs:
            out = subprocess.run([binary, *args], cwd=d, capture_output=True, text=True)
            report = json.loads(out.stdout)
            errors = list(jsonschema.Draft7Validator(schema).iter_errors(report))
            check(f"cli {args[0]} report valid", out.returncode == 0 and not errors)


if __name__ == "__main__":
    floats()
    inference()
    commitments()
    protocol()
    if len(sys.argv) > 1:
        cli(str(pathlib.Path(sys.argv[1]).resolve()))
    sys.exit(1 if check.failed else 0)
