"""Time the episode kernels under both backends on the default gridworld.

Usage: python3 benchmarks/bench_backends.py [--episodes N] [--repeat R]

Each backend runs in its own interpreter with ``QRLSIM_BACKEND`` set, so the
numpy row measures the real fallback (helpers included), not a mix.
"""
import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

from qrlsim import kernels
from qrlsim._jit import BACKEND
from qrlsim.gridworld import default_layout


def _qla(fn, env, episodes):
    rng = np.random.default_rng(0)
    amps = np.full((env.n_states, 4), 0.5 + 0j)
    values = np.zeros(env.n_states)
    offset = 0
    for _ in range(episodes):
        steps = fn(env.next_state, env.reward, env.terminal, env.start, amps, values, rng.random(10000),
                   0.99, kernels.SCHEDULE_CONSTANT, 0.1, 1.0, offset, 0.5, 1, kernels.SIGNAL_TD_ERROR, 10000)[0]
        offset += steps
    return offset


def _td0(fn, env, episodes):
    rng = np.random.default_rng(0)
    values = np.zeros(env.n_states)
    offset = 0
    for _ in range(episodes):
        steps = fn(env.next_state, env.reward, env.terminal, env.start, values, rng.random(20000),
                   0.01, 0.99, kernels.SCHEDULE_CONSTANT, 0.1, 1.0, offset, 10000)[0]
        offset += steps
    return offset


def _best(func, repeat):
    best, steps = float("inf"), 0
    for _ in range(repeat):
        t0 = time.perf_counter()
        steps = func()
        best = min(best, time.perf_counter() - t0)
    return best, steps


def _worker(episodes, repeat):
    env = default_layout().to_env()
    timings = {}
    for name, runner, kernel in (("qla", _qla, kernels.qla_episode_kernel),
                                 ("td0", _td0, kernels.td0_episode_kernel)):
        runner(kernel, env, 1)  # warm up / compile
        timings[name] = _best(lambda: runner(kernel, env, episodes), repeat)
    print(json.dumps({"backend": BACKEND, "timings": timings}))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--episodes", type=int, default=200)
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args()
    if args.worker:
        _worker(args.episodes, args.repeat)
        return

    results = {}
    for backend in ("numba", "numpy"):
        proc = subprocess.run(
            [sys.executable, __file__, "--worker", "--episodes", str(args.episodes), "--repeat", str(args.repeat)],
            env=dict(os.environ, QRLSIM_BACKEND=backend), capture_output=True, text=True, check=True,
        )
        results[backend] = json.loads(proc.stdout)["timings"]

    print(f"{'kernel':<8} {'steps':>9} {'numba s':>10} {'numpy s':>10} {'speedup':>9}")
    for name in ("qla", "td0"):
        (fast, steps), (slow, _) = results["numba"][name], results["numpy"][name]
        print(f"{name:<8} {steps:>9} {fast:>10.4f} {slow:>10.4f} {slow / fast:>8.1f}x")


if __name__ == "__main__":
    main()
