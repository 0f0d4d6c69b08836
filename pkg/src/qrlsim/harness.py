"""Experiment runner: seeded runs of both agents, learning-curve CSVs,
seed-sweep comparisons, the key=value config format and the Grover oracle suite.
"""
from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from . import quantum_core as qc
from .errors import ConfigError
from .gridworld import GridWorld, default_layout
from .rl_core import (
    AGENTS,
    EpisodeRecord,
    ExperimentConfig,
    GreedyPath,
    StepsizeSchedule,
    greedy_policy_path,
    qla_train,
    td0_egreedy_train,
)

STABLE_CHECKS = 50
CSV_HEADER = ("agent", "seed", "episode", "steps", "return", "max_value_delta")


@dataclass
class RunResult:
    agent: str
    config: ExperimentConfig
    records: list
    episodes_to_optimal: Optional[int]
    wall_time: float
    final_path: Optional[GreedyPath] = None
    tables: object = field(default=None, repr=False)

    @property
    def seed(self) -> int:
        return self.config.seed


class _OptimalityTracker:
    """Finds the first episode after which the greedy path is shortest and
    stays so for ``STABLE_CHECKS`` consecutive post-episode checks."""

    def __init__(self, env, optimal_steps, gamma):
        self.env = env
        self.optimal_steps = optimal_steps
        self.gamma = gamma
        self.streak_start = None
        self.streak = 0
        self.confirmed = None
        self.last_optimal = False

    def __call__(self, record, tables):
        if self.confirmed is not None:
            return
        path = greedy_policy_path(self.env, tables, self.optimal_steps * 4 + 4, self.gamma)
        self.last_optimal = path.reached_goal and path.steps == self.optimal_steps
        if self.last_optimal:
            if self.streak == 0:
                self.streak_start = record.episode_index
            self.streak += 1
            if self.streak >= STABLE_CHECKS:
                self.confirmed = self.streak_start
        else:
            self.streak = 0

    def result(self, converged):
        if self.confirmed is not None:
            return self.confirmed
        # learning stopped on convergence: the optimal path can no longer change
        if converged and self.last_optimal:
            return self.streak_start
        return None


def run_experiment(agent: str, config: ExperimentConfig, layout: Optional[GridWorld] = None) -> RunResult:
    if agent not in AGENTS:
        raise ConfigError("agent", f"expected one of {AGENTS}, got {agent!r}")
    layout = default_layout() if layout is None else layout
    env = layout.to_env()
    config.validate(env.n_actions if agent == "qla" else None)
    tracker = _OptimalityTracker(env, layout.shortest_path_length(), config.gamma)
    t0 = time.perf_counter()
    if agent == "qla":
        records, policy, v = qla_train(env, config, on_episode=lambda rec, t: tracker(rec, t[0]))
        tables = (policy, v)
        greedy_tables = policy
    else:
        records, v = td0_egreedy_train(env, config, on_episode=tracker)
        tables = v
        greedy_tables = v
    wall = time.perf_counter() - t0
    converged = bool(records) and not records[-1].truncated and records[-1].max_value_delta <= config.epsilon_v
    final_path = greedy_policy_path(env, greedy_tables, 4 * env.n_states, config.gamma)
    return RunResult(agent, config, records, tracker.result(converged), wall, final_path, tables)


def _median(values):
    """Median with unsolved runs (``None``) ranked last; ``None`` if it lands on one."""
    vals = sorted(math.inf if v is None else v for v in values)
    if not vals:
        return None
    mid = len(vals) // 2
    m = float(vals[mid]) if len(vals) % 2 else (vals[mid - 1] + vals[mid]) / 2.0
    return m if math.isfinite(m) else None


def _iqr(values):
    vals = [v for v in values if v is not None]
    if len(vals) != len(values) or not vals:
        return None
    q1, q3 = np.percentile(vals, [25, 75])
    return float(q1), float(q3)


@dataclass
class ComparisonSummary:
    results: list
    base_seed: int
    n_seeds: int

    def by_agent(self, agent) -> list:
        return [r for r in self.results if r.agent == agent]

    def median_episodes_to_optimal(self, agent) -> Optional[float]:
        return _median([r.episodes_to_optimal for r in self.by_agent(agent)])

    def step_curve(self, agent) -> list:
        """Median steps per episode index over the seeds that ran that episode."""
        runs = self.by_agent(agent)
        longest = max((len(r.records) for r in runs), default=0)
        curve = []
        for e in range(longest):
            steps = [r.records[e].steps for r in runs if e < len(r.records)]
            curve.append(float(np.median(steps)))
        return curve

    def to_dict(self, include_curves=True) -> dict:
        agents = {}
        for agent in AGENTS:
            runs = self.by_agent(agent)
            eto = [r.episodes_to_optimal for r in runs]
            entry = {
                "seeds": [r.seed for r in runs],
                "episodes_to_optimal": eto,
                "median_episodes_to_optimal": self.median_episodes_to_optimal(agent),
                "iqr_episodes_to_optimal": _iqr(eto),
                "unsolved": sum(v is None for v in eto),
                "episodes_run": [len(r.records) for r in runs],
                "final_path_steps": [r.final_path.steps if r.final_path and r.final_path.reached_goal else None
                                     for r in runs],
            }
            if include_curves:
                entry["median_steps_curve"] = self.step_curve(agent)
            agents[agent] = entry
        return {"base_seed": self.base_seed, "n_seeds": self.n_seeds, "agents": agents}


def compare(config: ExperimentConfig, layout: Optional[GridWorld] = None, n_seeds: int = 10,
            workers: int = 1) -> ComparisonSummary:
    """Run both agents on seeds ``config.seed .. config.seed + n_seeds - 1``."""
    if n_seeds < 1:
        raise ConfigError("n_seeds", f"must be >= 1, got {n_seeds}")
    jobs = [(agent, config.replace(seed=config.seed + i)) for i in range(n_seeds) for agent in AGENTS]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda job: run_experiment(job[0], job[1], layout), jobs))
    else:
        results = [run_experiment(agent, cfg, layout) for agent, cfg in jobs]
    return ComparisonSummary(results, config.seed, n_seeds)


# ---------------------------------------------------------------- CSV


def write_curves(results, path) -> None:
    if isinstance(results, RunResult):
        results = [results]
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for res in results:
                for rec in res.records:
                    writer.writerow((res.agent, res.seed, rec.episode_index, rec.steps,
                                     repr(rec.undiscounted_return), repr(rec.max_value_delta)))
    except OSError as exc:
        raise OSError(f"cannot write curves to {path}: {exc.strerror or exc}") from exc


def read_curves(path) -> list:
    """Rows of a curves CSV as ``(agent, seed, EpisodeRecord)`` tuples."""
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {header!r}")
        for agent, seed, episode, steps, ret, delta in reader:
            rows.append((agent, int(seed), EpisodeRecord(int(episode), int(steps), float(ret), float(delta))))
    return rows


PLOT_SCRIPT = '''\
import csv, sys
import matplotlib.pyplot as plt

curves = {{}}
with open({csv_path!r}, newline="") as fh:
    for row in csv.DictReader(fh):
        curves.setdefault((row["agent"], row["seed"]), []).append(int(row["steps"]))
for (agent, seed), steps in sorted(curves.items()):
    plt.plot(steps, label=f"{{agent}} seed {{seed}}", alpha=0.6)
plt.yscale("log")
plt.xlabel("episode")
plt.ylabel("steps per episode")
plt.legend()
plt.savefig(sys.argv[1] if len(sys.argv) > 1 else "curves.png", dpi=120)
'''


def write_plot_script(csv_path, script_path) -> None:
    with open(script_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(PLOT_SCRIPT.format(csv_path=str(csv_path)))


# ---------------------------------------------------------------- config file


def _parse_value(name, raw, kind):
    try:
        return kind(raw)
    except ValueError:
        raise ConfigError(name, f"cannot parse {raw!r} as {kind.__name__}") from None


_FIELD_PARSERS = {
    "gamma": float,
    "epsilon_greedy": float,
    "k_gain": float,
    "l_max": int,
    "epsilon_v": float,
    "max_episodes": int,
    "max_steps_per_episode": int,
    "seed": int,
    "reinforcement_signal": str,
}


def parse_config_text(text: str, base: Optional[ExperimentConfig] = None, source="<config>") -> ExperimentConfig:
    """Read flat ``key = value`` lines (``#`` starts a comment) over ``base``."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}", f"expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key] = value
    return apply_overrides(base or ExperimentConfig(), values)


def apply_overrides(config: ExperimentConfig, values: dict) -> ExperimentConfig:
    changes = {}
    for key, value in values.items():
        if key == "schedule":
            changes[key] = value if isinstance(value, StepsizeSchedule) else StepsizeSchedule.parse(str(value))
        elif key in _FIELD_PARSERS:
            kind = _FIELD_PARSERS[key]
            changes[key] = value if not isinstance(value, str) else _parse_value(key, value, kind)
        else:
            raise ConfigError(key, "unknown config key")
    return config.replace(**changes)


def load_config(path, base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read(), base, source=str(path))


def dump_config(config: ExperimentConfig) -> str:
    lines = []
    for name in ExperimentConfig.field_names():
        value = getattr(config, name)
        lines.append(f"{name} = {value!r}" if isinstance(value, float) else f"{name} = {value}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- Grover oracle suite


@dataclass(frozen=True)
class OracleCase:
    n_qubits: int
    iterations: int
    targets: int
    max_error: float

    @property
    def passed(self) -> bool:
        return self.max_error <= 1e-10


def grover_oracle_cases(max_qubits: int = 6) -> list:
    """Every ``(n, L)`` with ``(2L+1)*asin(2**(-n/2)) <= pi/2``, ``n`` in 1..max_qubits."""
    cases = []
    for n in range(1, max_qubits + 1):
        beta = math.asin(2.0 ** (-n / 2.0))
        for L in range(qc.max_safe_iterations(beta) + 1):
            cases.append((n, L))
    return cases


def _grover_matrix(dim, target):
    u = np.full(dim, 1.0 / math.sqrt(dim))
    diffusion = 2.0 * np.outer(u, u) - np.eye(dim)
    oracle = np.eye(dim)
    oracle[target, target] = -1.0
    return diffusion @ oracle


def run_oracle_suite(max_qubits: int = 6) -> list:
    """Compare ``grover_update`` from the uniform register against the closed
    form and against explicit matrix powers, for every target."""
    out = []
    for n, L in grover_oracle_cases(max_qubits):
        dim = 1 << n
        beta = math.asin(2.0 ** (-n / 2.0))
        s, c = qc.closed_form_amplitude(beta, L)
        rest = c / math.sqrt(dim - 1)
        uniform = qc.uniform_register(n)
        worst = 0.0
        for k in range(dim):
            sim = qc.grover_update(uniform, k, L).amplitudes
            expected = np.full(dim, rest)
            expected[k] = s
            brute = np.linalg.matrix_power(_grover_matrix(dim, k), L) @ uniform.amplitudes.real
            worst = max(worst, float(np.max(np.abs(sim - expected))), float(np.max(np.abs(sim - brute))))
        out.append(OracleCase(n, L, dim, worst))
    return out


def iter_summary_lines(summary: ComparisonSummary) -> Iterable[str]:
    for agent in AGENTS:
        d = summary.to_dict(include_curves=False)["agents"][agent]
        yield (f"{agent}: median episodes_to_optimal={d['median_episodes_to_optimal']} "
               f"iqr={d['iqr_episodes_to_optimal']} unsolved={d['unsolved']}/{len(d['seeds'])}")
