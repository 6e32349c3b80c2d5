"""Acceptance suite: one check per criterion, each reporting a PASS/FAIL line.

The lines are collected in ``RESULTS`` and printed in the terminal summary
(see ``conftest.py``), so they appear even when output capture is on.
"""
import json
import math
import os
import subprocess
import sys
import time

import numpy as np

from qfuzzy import channels as ch
from qfuzzy import circuit as circ
from qfuzzy import harness as hs
from qfuzzy import metrics as mt
from qfuzzy import models as md
from qfuzzy import optim
from qfuzzy import qsim

from conftest import random_density, random_state

RESULTS: list[str] = []
SINGLE_THREAD = {k: "1" for k in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")}


def report(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def test_criterion_01_text_pipeline_at_desk_scale(tmp_path):
    data = tmp_path / "cvtd.csv"
    hs.write_text_csv(data, hs.gen_synthetic_text(2000, seed=11, scheme="CVTD", neutral_fraction=0.1))
    env = dict(os.environ, **SINGLE_THREAD)
    timings, problems = {}, []
    for model in hs.MODELS:
        out = tmp_path / model
        start = time.perf_counter()
        proc = subprocess.run([sys.executable, "-m", "qfuzzy", "train", "--model", model, "--dataset", str(data),
                               "--scheme", "CVTD", "--output-dir", str(out)],
                              capture_output=True, text=True, env=env, timeout=600)
        timings[model] = time.perf_counter() - start
        if proc.returncode != 0:
            problems.append(f"{model}: exit {proc.returncode} {proc.stderr.strip()[-200:]}")
            continue
        metrics = json.loads((out / "metrics.json").read_text())
        missing = set(mt.SUMMARY_FIELDS) - set(metrics["metrics"])
        if missing or metrics["auc"] is None or not (out / "roc.csv").exists():
            problems.append(f"{model}: missing {sorted(missing)} or AUC")
        if (metrics["n_train"], metrics["n_test"]) != (1000, 500):
            problems.append(f"{model}: split {metrics['n_train']}/{metrics['n_test']}")
        if timings[model] >= 600:
            problems.append(f"{model}: {timings[model]:.0f}s")
    detail = "2000 usable rows, 1000/500 split, " + ", ".join(f"{m} {t:.1f}s" for m, t in timings.items())
    report(1, not problems, detail + ("; " + "; ".join(problems) if problems else ""))


def test_criterion_02_gradient_correctness():
    start = time.perf_counter()
    rng = np.random.default_rng(2)
    circuit = md.build_qfnn_circuit()
    worst_shift = 0.0
    for _ in range(100):
        theta = rng.uniform(-math.pi, math.pi, 8)
        f = circ.CircuitExpectation(circuit, rng.uniform(0, math.pi, 2))
        for k in range(8):
            ps = optim.parameter_shift_grad(f, theta, k)
            fd = optim.finite_difference_grad(f, theta, k, h=1e-4)
            worst_shift = max(worst_shift, abs(ps - fd))

    worst_rel, h = 0.0, 1e-5
    ok_hybrid = True
    for fuzzy in (False, True):
        model = md.HybridModel(fuzzy=fuzzy)
        for _ in range(3):
            params = model.init_params(rng)
            X = rng.uniform(0, 1, (2, 4))
            y = np.array([0, 1])
            _, grad = model.loss_grad(params, X, y)
            for k in range(params.size):
                d = np.zeros_like(params)
                d[k] = h
                fd = (md.loss_value(model.scores(params + d, X), y) - md.loss_value(model.scores(params - d, X), y)) / (2 * h)
                err = abs(grad[k] - fd)
                if err > max(1e-5 * abs(fd), 1e-7):
                    ok_hybrid = False
                if abs(fd) > 1e-7:
                    worst_rel = max(worst_rel, err / abs(fd))
    seconds = time.perf_counter() - start
    ok = worst_shift < 1e-6 and ok_hybrid and seconds < 30
    report(2, ok, f"shift vs FD max abs {worst_shift:.2e} (<1e-6); hybrid max rel {worst_rel:.2e} (<1e-5); "
                  f"{seconds:.1f}s (<30s)")


def test_criterion_03_channel_soundness():
    start = time.perf_counter()
    worst_complete = max(ch.make_channel(label, p / 10).completeness_error()
                         for label in ch.CHANNEL_LABELS for p in range(11))
    rng = np.random.default_rng(3)
    worst_trace, min_eig = 0.0, np.inf
    for i in range(1000):
        n = 1 + i % 2
        rho = random_density(rng, n, rank=int(rng.integers(1, 2**n + 1)))
        chan = ch.make_channel(ch.CHANNEL_LABELS[i % 6], float(rng.uniform()))
        out = ch.apply_channel(qsim.DensityMatrix(n, rho), chan, int(rng.integers(n))).entries
        worst_trace = max(worst_trace, abs(np.trace(out).real - 1))
        min_eig = min(min_eig, float(np.linalg.eigvalsh(out).min()))
    seconds = time.perf_counter() - start
    ok = worst_complete < 1e-12 and worst_trace < 1e-10 and min_eig >= -1e-9 and seconds < 30
    report(3, ok, f"completeness {worst_complete:.1e} (<1e-12); trace dev {worst_trace:.1e} (<1e-10); "
                  f"min eig {min_eig:.1e} (>=-1e-9); {seconds:.1f}s")


def test_criterion_04_simulation_path_equivalence():
    rng = np.random.default_rng(4)
    worst = 0.0
    specs = [md.QfnnCircuitSpec(), md.QfnnCircuitSpec(embedding_axis="y"), md.QfnnCircuitSpec(layer2_extra_ry=True),
             md.QfnnCircuitSpec(fuzzy_block_count=6)]
    for i in range(200):
        circuit = md.build_qfnn_circuit(specs[i % len(specs)])
        theta = rng.uniform(-2 * math.pi, 2 * math.pi, circuit.n_params)
        x = rng.uniform(0, math.pi, 2)
        a = circ.expectations(circuit, theta, x, observed=(0, 1))
        b = circ.expectations(circuit, theta, x, observed=(0, 1), density=True)
        worst = max(worst, float(np.abs(a - b).max()))
    report(4, worst < 1e-10, f"max |statevector - density| {worst:.1e} over 200 configs (<1e-10)")


def test_criterion_05_training_competence():
    accs: dict[str, list[float]] = {"qfnn": [], "ann": [], "cf": []}
    slowest = 0.0
    for model in accs:
        for seed in range(5):
            start = time.perf_counter()
            cfg = hs.ExperimentConfig(model=model, epochs=100, lr=0.01, seed=seed, synthetic_n=200,
                                      synthetic_margin=0.2)
            run = hs.run_experiment(cfg, write=False)
            if model == "qfnn":
                slowest = max(slowest, time.perf_counter() - start)
            accs[model].append(run.metrics["metrics"]["accuracy"])
    q_fail = sum(a < 0.95 for a in accs["qfnn"])
    baseline_fail = {m: sum(a < 0.90 for a in accs[m]) for m in ("ann", "cf")}
    ok = q_fail <= 1 and slowest < 60 and all(v <= 1 for v in baseline_fail.values())
    fmt = {m: "/".join(f"{a:.2f}" for a in v) for m, v in accs.items()}
    report(5, ok, f"qfnn {fmt['qfnn']} (mean {np.mean(accs['qfnn']):.3f}, {q_fail} below 0.95, "
                  f"slowest seed {slowest:.1f}s); ann {fmt['ann']}; cf {fmt['cf']}")


def test_criterion_06_noise_sweep_sanity(tmp_path):
    cfg = hs.ExperimentConfig(epochs=100, seed=0, output_dir=str(tmp_path / "sweep"))
    run = hs.run_noise_sweep(cfg)
    clean = run.metrics["metrics"]["accuracy"]
    zero_dev = max(abs(r["accuracy"] - clean) for r in run.sweep if r["p"] == 0.0)
    dp = {r["p"]: r["accuracy"] for r in run.sweep if r["channel"] == "DP"}
    forced_cfg = hs.ExperimentConfig(epochs=100, seed=0, noise_channels=("DP",), noise_grid=(1.0,),
                                     noise_placement="final_only", output_dir=str(tmp_path / "forced"))
    forced = hs.run_noise_sweep(forced_cfg)
    positive_fraction = float(np.mean(forced.prepared.y_test == 1))
    ok = (zero_dev <= 0.01 and forced.sweep[0]["accuracy"] == positive_fraction
          and sorted(dp) == list(ch.DEFAULT_GRID) and dp[0.9] > 0 and len(run.sweep) == 60)
    curve = " ".join(f"{p:.1f}:{a:.2f}" for p, a in sorted(dp.items()))
    report(6, ok, f"p=0 dev {zero_dev:.3f} (<=0.01); DP p=1 final {forced.sweep[0]['accuracy']:.3f} "
                  f"== positive fraction {positive_fraction:.3f}; DP curve {curve}")


def test_criterion_07_auc_oracle():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(2, 201))
        y = rng.integers(0, 2, n)
        y[:2] = [0, 1]
        s = np.round(rng.uniform(size=n), int(rng.integers(1, 5)))
        pos, neg = s[y == 1], s[y == 0]
        diff = pos[:, None] - neg[None, :]
        concordance = (np.sum(diff > 0) + 0.5 * np.sum(diff == 0)) / diff.size
        worst = max(worst, abs(mt.roc_auc(s, y).auc - concordance))
    report(7, worst < 1e-12, f"max |trapezoid - concordance| {worst:.1e} over 50 sets (<1e-12)")


def test_criterion_08_interference_and_non_uniqueness():
    rng = np.random.default_rng(8)
    worst_law, worst_mod = 0.0, 0.0
    for _ in range(1000):
        r1, r2 = rng.uniform(1e-6, 1, 2)
        t1, t2 = rng.uniform(-math.pi, math.pi, 2)
        alpha, beta = rng.normal(size=2)
        norm = math.hypot(alpha * r1, beta * r2)
        alpha, beta = alpha / norm, beta / norm
        z1, z2 = r1 * np.exp(1j * t1), r2 * np.exp(1j * t2)
        lhs = abs(alpha * z1 + beta * z2) ** 2
        rhs = alpha**2 * r1**2 + beta**2 * r2**2 + 2 * alpha * beta * r1 * r2 * math.cos(t1 - t2)
        worst_law = max(worst_law, abs(lhs - rhs))
        # same modulus, different phase: identical probability
        r = rng.uniform(1e-6, 1)
        p1, p2 = abs(r * np.exp(1j * t1)) ** 2, abs(r * np.exp(1j * t2)) ** 2
        worst_mod = max(worst_mod, abs(p1 - p2))
    report(8, worst_law < 1e-10 and worst_mod < 1e-10,
           f"interference max dev {worst_law:.1e}; phase non-uniqueness max dev {worst_mod:.1e} (<1e-10, 1000 draws)")


def test_criterion_09_qfm_normalization():
    rng = np.random.default_rng(9)
    worst_sum, worst_scale = 0.0, 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 4))
        state = qsim.StateVector(n, random_state(rng, n))
        mu = rng.uniform(1e-3, 10, 2)
        p = md.qfm_probabilities(state, mu)
        q = md.qfm_probabilities(state, mu * rng.uniform(1e-3, 1e3))
        worst_sum = max(worst_sum, abs(sum(p) - 1))
        worst_scale = max(worst_scale, abs(p[0] - q[0]), abs(p[1] - q[1]))
    report(9, worst_sum < 1e-12 and worst_scale < 1e-12,
           f"sum dev {worst_sum:.1e}; scaling dev {worst_scale:.1e} (<1e-12, 1000 draws)")


def test_criterion_10_determinism(tmp_path):
    differing = []
    jobs = [(m, hs.run_experiment, ("metrics.json", "history.csv")) for m in hs.MODELS]
    jobs.append(("qfnn-sweep", hs.run_noise_sweep, ("metrics.json", "history.csv", "sweep.csv")))
    for name, runner, files in jobs:
        model = name.split("-")[0]
        dirs = []
        for tag in ("a", "b"):
            cfg = hs.ExperimentConfig(model=model, epochs=3, seed=5, synthetic_n=60, noise_grid=(0.0, 0.4),
                                      output_dir=str(tmp_path / name / tag))
            runner(cfg)
            dirs.append(tmp_path / name / tag)
        differing += [f"{name}/{f}" for f in files if (dirs[0] / f).read_bytes() != (dirs[1] / f).read_bytes()]
    report(10, not differing, "byte-identical metrics/history for " + ", ".join(j[0] for j in jobs)
           + (f"; differing: {differing}" if differing else ""))
