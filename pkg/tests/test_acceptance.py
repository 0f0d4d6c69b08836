"""Acceptance gate.

Each criterion records one PASS/FAIL line (printed in the terminal summary by
conftest.py) and then asserts, so a red criterion also fails its test.
"""
import math
import time

import numpy as np
import pytest
from scipy.stats import chi2

from qrlsim import harness
from qrlsim import quantum_core as qc
from qrlsim import rl_core as rl
from qrlsim.gridworld import default_layout

VERDICTS = []


def report(number, label, ok, detail):
    VERDICTS.append(f"{'PASS' if ok else 'FAIL'} criterion {number}: {label} ({detail})")
    assert ok, detail


def _grover_operator(dim, target):
    u = np.full(dim, 1 / math.sqrt(dim))
    oracle = np.eye(dim)
    oracle[target, target] = -1
    return (2 * np.outer(u, u) - np.eye(dim)) @ oracle


def test_criterion_1_grover_closed_form():
    t0 = time.perf_counter()
    worst, cases = 0.0, 0
    for n in range(1, 7):
        dim = 2**n
        beta = math.asin(2 ** (-n / 2))
        start = qc.uniform_register(n)
        for target in range(dim):
            op = _grover_operator(dim, target)
            L = 0
            while (2 * L + 1) * beta <= math.pi / 2 + 1e-12:
                got = qc.grover_update(start, target, L).amplitudes
                hit, miss = qc.closed_form_amplitude(beta, L)
                expected = np.full(dim, miss / math.sqrt(dim - 1) if dim > 1 else 0.0)
                expected[target] = hit
                oracle = np.linalg.matrix_power(op, L) @ start.amplitudes
                worst = max(worst, abs(got[target] - hit), np.max(np.abs(got - expected)),
                            np.max(np.abs(got - oracle)))
                cases += 1
                L += 1
    exact = qc.grover_update(qc.uniform_register(2), 3, 1)
    p_full = qc.probabilities(exact)[3]
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-10 and abs(p_full - 1.0) < 1e-12 and elapsed < 1.0
    report(1, "Grover closed form, n=1..6", ok,
           f"{cases} cases, max error {worst:.2e}, n=2 L=1 p={p_full:.15f}, {elapsed:.2f}s")


def test_criterion_2_gate_properties():
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst = dict(hadamard=0.0, phase=0.0, oracle=0.0, mean=0.0, drift=0.0)
    for _ in range(1000):
        n = int(rng.integers(1, 7))
        dim = 2**n
        raw = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        reg = qc.AmplitudeRegister(raw / np.linalg.norm(raw))
        amps = reg.amplitudes

        hh = qc.hadamard_all(qc.hadamard_all(reg))
        worst["hadamard"] = max(worst["hadamard"], np.max(np.abs(hh.amplitudes - amps)))

        shifted = qc.apply_phase_shift(reg, qc.PhaseShift(rng.uniform(0, 2 * np.pi, dim)))
        worst["phase"] = max(worst["phase"], np.max(np.abs(np.abs(shifted.amplitudes) ** 2 - np.abs(amps) ** 2)))

        target = int(rng.integers(dim))
        flipped = qc.oracle_reflection(reg, target)
        as_phase = qc.apply_phase_shift(reg, qc.PhaseShift.single(dim, target, np.pi))
        worst["oracle"] = max(worst["oracle"], np.max(np.abs(flipped.amplitudes - as_phase.amplitudes)))

        reflected = qc.reflection_about_state(reg, qc.uniform_register(n))
        worst["mean"] = max(worst["mean"], np.max(np.abs(reflected.amplitudes - (2 * amps.mean() - amps))))

        for out in (qc.hadamard_all(reg), shifted, flipped, reflected):
            worst["drift"] = max(worst["drift"], abs(out.norm_squared() - reg.norm_squared()))
    elapsed = time.perf_counter() - t0
    ok = (worst["hadamard"] < 1e-12 and worst["phase"] <= 1e-15 and worst["oracle"] < 1e-15
          and worst["mean"] < 1e-12 and worst["drift"] < 1e-12 and elapsed < 5.0)
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    report(2, "gate properties on 1000 random registers", ok, f"{detail}, {elapsed:.2f}s")


def test_criterion_3_measurement_statistics():
    t0 = time.perf_counter()
    rng = np.random.default_rng(99)
    results = []
    for reg in (qc.uniform_register(2), qc.AmplitudeRegister(np.array([math.sqrt(0.9), math.sqrt(0.1)]))):
        draws = np.fromiter((qc.measure(reg, rng) for _ in range(100_000)), dtype=np.int64, count=100_000)
        counts = np.bincount(draws, minlength=reg.dim)
        p = qc.probabilities(reg)
        freq_err = np.max(np.abs(counts / 100_000 - p))
        stat = float(np.sum((counts - 100_000 * p) ** 2 / (100_000 * p)))
        results.append((freq_err, stat, chi2.ppf(0.999, reg.dim - 1)))
    elapsed = time.perf_counter() - t0
    ok = all(e <= 0.01 and s < c for e, s, c in results) and elapsed < 1.0
    detail = "; ".join(f"max |freq-p| {e:.4f}, chi2 {s:.2f} < {c:.2f}" for e, s, c in results)
    report(3, "measurement statistics over 1e5 draws", ok, f"{detail}, {elapsed:.2f}s")


def test_criterion_4_td_matches_bellman():
    t0 = time.perf_counter()
    chain = rl.MarkovChain(np.array([[0, 1, 0], [0, 0, 1], [0, 0, 0]], dtype=float),
                           np.array([1.0, 1.0, 0.0]), ("s0", "s1", "s2"))
    exact = rl.bellman_solve(chain, 0.5).values
    sched = rl.StepsizeSchedule("harmonic", 1.0)
    v = rl.ValueTable.zeros(chain.states)
    for k in range(1, 10_001):
        alpha = rl.stepsize(sched, k)
        v, _ = rl.td_update(v, "s0", 1.0, "s1", False, alpha, 0.5)
        v, _ = rl.td_update(v, "s1", 1.0, "s2", True, alpha, 0.5)
    err = float(np.max(np.abs(v.values - exact)))
    elapsed = time.perf_counter() - t0
    ok = np.allclose(exact, [1.5, 1.0, 0.0]) and err < 1e-3 and elapsed < 1.0
    report(4, "TD(0) vs linear Bellman solve on the 3-state chain", ok,
           f"exact {exact.tolist()}, max error {err:.2e}, {elapsed:.2f}s")


@pytest.fixture(scope="module")
def default_runs():
    return harness.compare(rl.ExperimentConfig(), default_layout(), n_seeds=10, workers=4)


def test_criterion_5_td_baseline_envelope(default_runs):
    td = default_runs.by_agent("td0")
    eto = [r.episodes_to_optimal for r in td]
    median = default_runs.median_episodes_to_optimal("td0")
    all_optimal = all(r.final_path.reached_goal and r.final_path.steps == 20 for r in td)
    ok = all_optimal and median is not None and 200 <= median <= 20000
    report(5, "TD(0) median episodes-to-optimal in [200, 20000]", ok,
           f"median {median}, per seed {eto}, all final paths 20 steps: {all_optimal}")


def _qla_check(qla_runs, td_median):
    median = harness._median([r.episodes_to_optimal for r in qla_runs])
    paths = [(r.final_path.steps if r.final_path.reached_goal else None, r.final_path.undiscounted_return)
             for r in qla_runs]
    ordered = median is not None and td_median is not None and median < td_median
    optimal = all(p == (20, 81.0) for p in paths)
    return ordered and optimal, f"QLA median {median} vs TD median {td_median}, final paths optimal: {optimal}"


def test_criterion_6_qla_faster_than_td_as_stated(default_runs):
    # k_gain=0.01, l_max=1 with the TD target driving the iteration count
    config = rl.ExperimentConfig(k_gain=0.01, l_max=1, reinforcement_signal="td_target")
    literal = harness.compare(config, default_layout(), n_seeds=10, workers=4).by_agent("qla")
    ok, detail = _qla_check(literal, default_runs.median_episodes_to_optimal("td0"))
    report(6, "QLA beats TD(0), k_gain=0.01 with TD-target signal", ok, detail)


def test_criterion_6_qla_faster_than_td_package_defaults(default_runs):
    ok, detail = _qla_check(default_runs.by_agent("qla"), default_runs.median_episodes_to_optimal("td0"))
    report(6, "QLA beats TD(0), package defaults (k_gain=0.5, TD-error signal)", ok, detail)


def test_criterion_7_convergence_halt():
    config = rl.ExperimentConfig()
    records, policy, _ = rl.qla_train(default_layout().to_env(), config)
    halted = len(records) < config.max_episodes and records[-1].max_value_delta <= config.epsilon_v
    norm_err = policy.max_norm_error()
    ok = halted and norm_err <= 1e-9
    report(7, "qla_train halts on |dV| <= 0.01 with normalized registers", ok,
           f"{len(records)} episodes, last max |dV| {records[-1].max_value_delta:.2e}, norm error {norm_err:.1e}")


def test_criterion_8_determinism(tmp_path):
    import subprocess
    import sys

    same = {}
    for agent in rl.AGENTS:
        blobs = []
        for i in range(2):
            out = tmp_path / f"{agent}_{i}.csv"
            proc = subprocess.run([sys.executable, "-m", "qrlsim", "run", "--agent", agent, "--seed", "12345",
                                   "--out", str(out)], capture_output=True, text=True)
            assert proc.returncode == 0, proc.stderr
            blobs.append(out.read_bytes())
        same[agent] = (blobs[0] == blobs[1], len(blobs[0]))
    ok = all(eq for eq, _ in same.values())
    report(8, "byte-identical CSVs across two invocations", ok,
           ", ".join(f"{a}: identical={eq}, {size} bytes" for a, (eq, size) in same.items()))
