"""Tabular learners: TD(0) updates, the amplitude-register (QLA) agent and the
epsilon-greedy TD(0) baseline, plus an exact policy-evaluation solver.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from typing import Callable, Optional, Sequence

import numpy as np

from . import kernels
from .errors import ConfigError, MissingStateError, NoSolutionError, UnsupportedEnvironmentError
from .quantum_core import AmplitudeRegister, max_safe_iterations

AGENTS = ("qla", "td0")
_AGENT_STREAM = {"qla": 1, "td0": 2}


def make_rng(seed: int, agent: str) -> np.random.Generator:
    """Independent stream per (seed, agent) so paired runs never share draws."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(_AGENT_STREAM[agent],)))


# ---------------------------------------------------------------- environment


@dataclass(frozen=True, eq=False)
class TabularEnv:
    """Deterministic finite MDP given as ``(state, action)`` lookup tables.

    ``states`` holds the external label of each state index (grid cells for a
    gridworld); ``goals`` are indices where a greedy walk stops.
    """

    next_state: np.ndarray
    reward: np.ndarray
    terminal: np.ndarray
    start: int = 0
    states: Optional[tuple] = None
    goals: frozenset = frozenset()

    def __post_init__(self):
        ns = np.ascontiguousarray(self.next_state, dtype=np.int64)
        rw = np.ascontiguousarray(self.reward, dtype=np.float64)
        tm = np.ascontiguousarray(self.terminal, dtype=np.bool_)
        if ns.ndim != 2 or rw.shape != ns.shape or tm.shape != ns.shape:
            raise ValueError("next_state, reward and terminal must share one (n_states, n_actions) shape")
        n = ns.shape[0]
        if ns.size and (ns.min() < 0 or ns.max() >= n):
            raise ValueError("next_state entries must be valid state indices")
        if not 0 <= self.start < n:
            raise ValueError(f"start index {self.start} out of range")
        states = tuple(range(n)) if self.states is None else tuple(self.states)
        if len(states) != n:
            raise ValueError("states must label every state index")
        for arr in (ns, rw, tm):
            arr.flags.writeable = False
        object.__setattr__(self, "next_state", ns)
        object.__setattr__(self, "reward", rw)
        object.__setattr__(self, "terminal", tm)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "goals", frozenset(self.goals))
        object.__setattr__(self, "_index", {label: i for i, label in enumerate(states)})

    @property
    def n_states(self) -> int:
        return self.next_state.shape[0]

    @property
    def n_actions(self) -> int:
        return self.next_state.shape[1]

    def index_of(self, label) -> int:
        try:
            return self._index[label]
        except (KeyError, TypeError):
            raise MissingStateError(f"unknown state {label!r}") from None


def as_tabular(env) -> TabularEnv:
    if isinstance(env, TabularEnv):
        return env
    to_env = getattr(env, "to_env", None)
    if callable(to_env):
        return to_env()
    raise UnsupportedEnvironmentError(
        f"{type(env).__name__} exposes no deterministic one-step model (need a TabularEnv or .to_env())"
    )


# ---------------------------------------------------------------- tables


class _Labelled:
    states: tuple

    def index_of(self, label) -> int:
        index = self.__dict__.get("_index")
        if index is None:
            index = {lab: i for i, lab in enumerate(self.states)}
            self.__dict__["_index"] = index
        try:
            return index[label]
        except (KeyError, TypeError):
            raise MissingStateError(f"unknown state {label!r}") from None


@dataclass(eq=False)
class ValueTable(_Labelled):
    values: np.ndarray
    states: tuple

    @classmethod
    def zeros(cls, states) -> "ValueTable":
        states = tuple(states)
        return cls(np.zeros(len(states)), states)

    def __getitem__(self, label) -> float:
        return float(self.values[self.index_of(label)])

    def copy(self) -> "ValueTable":
        return ValueTable(self.values.copy(), self.states)

    def as_dict(self) -> dict:
        return {label: float(v) for label, v in zip(self.states, self.values)}


@dataclass(eq=False)
class ActionPolicyTable(_Labelled):
    amplitudes: np.ndarray  # (n_states, 2**n_qubits), complex
    states: tuple

    @classmethod
    def uniform(cls, states, n_actions: int) -> "ActionPolicyTable":
        n_qubits = action_qubits(n_actions)
        states = tuple(states)
        dim = 1 << n_qubits
        return cls(np.full((len(states), dim), 1.0 / math.sqrt(dim), dtype=np.complex128), states)

    @property
    def n_qubits(self) -> int:
        return self.amplitudes.shape[1].bit_length() - 1

    def register(self, label) -> AmplitudeRegister:
        return AmplitudeRegister(self.amplitudes[self.index_of(label)])

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def max_norm_error(self) -> float:
        return float(np.max(np.abs(self.probabilities().sum(axis=1) - 1.0)))

    def copy(self) -> "ActionPolicyTable":
        return ActionPolicyTable(self.amplitudes.copy(), self.states)


def action_qubits(n_actions: int) -> int:
    if n_actions < 2 or n_actions & (n_actions - 1):
        raise UnsupportedEnvironmentError(f"action count must be a power of two >= 2, got {n_actions}")
    return n_actions.bit_length() - 1


# ---------------------------------------------------------------- configuration


_SCHEDULE_KINDS = {
    "constant": kernels.SCHEDULE_CONSTANT,
    "harmonic": kernels.SCHEDULE_HARMONIC,
    "polynomial": kernels.SCHEDULE_POLYNOMIAL,
}
_SIGNALS = {"td_error": kernels.SIGNAL_TD_ERROR, "td_target": kernels.SIGNAL_TD_TARGET}


@dataclass(frozen=True)
class StepsizeSchedule:
    kind: str = "constant"
    alpha0: float = 0.1
    exponent: float = 1.0

    def __post_init__(self):
        if self.kind not in _SCHEDULE_KINDS:
            raise ConfigError("schedule", f"unknown kind {self.kind!r} (expected one of {sorted(_SCHEDULE_KINDS)})")
        if not 0.0 < self.alpha0 <= 1.0:
            raise ConfigError("schedule", f"alpha0 must be in (0, 1], got {self.alpha0}")
        if self.kind == "polynomial" and not 0.5 < self.exponent <= 1.0:
            raise ConfigError("schedule", f"polynomial exponent must be in (0.5, 1], got {self.exponent}")

    @property
    def code(self) -> int:
        return _SCHEDULE_KINDS[self.kind]

    def __call__(self, k: int) -> float:
        return stepsize(self, k)

    @property
    def robbins_monro(self) -> bool:
        """Whether sum(alpha) diverges while sum(alpha^2) converges."""
        return self.kind != "constant"

    @classmethod
    def parse(cls, text: str) -> "StepsizeSchedule":
        """Parse ``kind[:alpha0[:exponent]]``, e.g. ``polynomial:1.0:0.6``."""
        parts = text.strip().split(":")
        try:
            nums = [float(p) for p in parts[1:]]
        except ValueError:
            raise ConfigError("schedule", f"cannot parse {text!r}") from None
        if len(nums) > 2:
            raise ConfigError("schedule", f"too many components in {text!r}")
        return cls(parts[0].strip(), *nums)

    def __str__(self):
        if self.kind == "polynomial":
            return f"{self.kind}:{self.alpha0!r}:{self.exponent!r}"
        return f"{self.kind}:{self.alpha0!r}"


@dataclass(frozen=True)
class ExperimentConfig:
    gamma: float = 0.99
    epsilon_greedy: float = 0.01
    schedule: StepsizeSchedule = field(default_factory=StepsizeSchedule)
    k_gain: float = 0.5
    l_max: int = 1
    epsilon_v: float = 0.01
    max_episodes: int = 20000
    max_steps_per_episode: int = 10000
    seed: int = 0
    reinforcement_signal: str = "td_error"

    def validate(self, n_actions: Optional[int] = None) -> "ExperimentConfig":
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigError("gamma", f"must be in [0, 1], got {self.gamma}")
        if not 0.0 <= self.epsilon_greedy <= 1.0:
            raise ConfigError("epsilon_greedy", f"must be in [0, 1], got {self.epsilon_greedy}")
        if not isinstance(self.schedule, StepsizeSchedule):
            raise ConfigError("schedule", "must be a StepsizeSchedule")
        if not self.k_gain >= 0.0:
            raise ConfigError("k_gain", f"must be >= 0, got {self.k_gain}")
        if int(self.l_max) != self.l_max or self.l_max < 0:
            raise ConfigError("l_max", f"must be a natural number, got {self.l_max}")
        if not self.epsilon_v > 0.0:
            raise ConfigError("epsilon_v", f"must be > 0, got {self.epsilon_v}")
        if int(self.max_episodes) != self.max_episodes or self.max_episodes < 0:
            raise ConfigError("max_episodes", f"must be a natural number, got {self.max_episodes}")
        if self.max_steps_per_episode is None or int(self.max_steps_per_episode) != self.max_steps_per_episode \
                or self.max_steps_per_episode < 1:
            raise ConfigError("max_steps_per_episode", "a positive step cap is required to bound episodes")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed", f"must be an unsigned 64-bit integer, got {self.seed}")
        if self.reinforcement_signal not in _SIGNALS:
            raise ConfigError("reinforcement_signal", f"expected one of {sorted(_SIGNALS)}, got {self.reinforcement_signal!r}")
        if n_actions is not None:
            beta = math.asin(1.0 / math.sqrt(1 << action_qubits(n_actions)))
            safe = max_safe_iterations(beta)
            if self.l_max > safe:
                raise ConfigError("l_max", f"{self.l_max} overshoots the target for {n_actions} actions (max {safe})")
        return self

    def replace(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)

    @classmethod
    def field_names(cls) -> tuple:
        return tuple(f.name for f in fields(cls))


@dataclass(frozen=True)
class EpisodeRecord:
    episode_index: int
    steps: int
    undiscounted_return: float
    max_value_delta: float
    truncated: bool = False


# ---------------------------------------------------------------- primitives


def td_update(v: ValueTable, s, r: float, s_next, terminal: bool, alpha: float, gamma: float):
    """One TD(0) backup ``V(s) += alpha * (r + gamma*V(s') - V(s))``.

    Returns the updated copy of ``v`` and the signed change of ``V(s)``.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    i = v.index_of(s)
    j = v.index_of(s_next)
    target = r if terminal else r + gamma * v.values[j]
    delta = alpha * (target - v.values[i])
    out = v.copy()
    out.values[i] += delta
    return out, float(delta)


def stepsize(schedule: StepsizeSchedule, k: int) -> float:
    if k < 1:
        raise ValueError(f"step index k must be >= 1, got {k}")
    return float(kernels.stepsize_at(schedule.code, schedule.alpha0, schedule.exponent, k))


def reward_to_iterations(signal: float, k_gain: float, l_max: int) -> int:
    """Grover iteration count ``clamp(floor(k_gain * signal), 0, l_max)``."""
    if k_gain < 0:
        raise ValueError("k_gain must be >= 0")
    return int(kernels.iterations_for(float(signal), float(k_gain), int(l_max)))


def check_convergence(deltas, epsilon_v: float) -> bool:
    """True when every recorded ``|dV(s)|`` is within ``epsilon_v``.

    ``deltas`` may be a mapping (state -> delta) or a sequence; states that are
    absent count as zero change.
    """
    values = deltas.values() if hasattr(deltas, "values") else deltas
    return all(abs(d) <= epsilon_v for d in values)


# ---------------------------------------------------------------- QLA agent


def _qla_step_batch(env, amps, values, config, uniforms, step_offset):
    return kernels.qla_episode_kernel(
        env.next_state, env.reward, env.terminal, env.start, amps, values, uniforms,
        config.gamma, config.schedule.code, config.schedule.alpha0, config.schedule.exponent,
        step_offset, config.k_gain, int(config.l_max), _SIGNALS[config.reinforcement_signal],
        int(config.max_steps_per_episode),
    )


def _record(index, result, cap):
    steps, ret, max_delta, done = result
    return EpisodeRecord(index, int(steps), float(ret), float(max_delta), truncated=(not done and steps >= cap))


def qla_episode(env, policy: ActionPolicyTable, v: ValueTable, config: ExperimentConfig,
                rng: np.random.Generator, *, episode_index: int = 0, step_offset: int = 0):
    """Run one episode from the start state; returns ``(record, policy, v)`` as fresh copies.

    Actions are drawn from ``|C_a|^2`` of the state's register, values get a
    TD(0) backup and the taken action is reinforced by
    ``reward_to_iterations`` Grover iterations.
    """
    env = as_tabular(env)
    config.validate(env.n_actions)
    policy, v = policy.copy(), v.copy()
    if policy.amplitudes.shape[0] != env.n_states or v.values.shape[0] != env.n_states:
        raise MissingStateError("tables do not cover every environment state")
    uniforms = rng.random(config.max_steps_per_episode)
    result = _qla_step_batch(env, policy.amplitudes, v.values, config, uniforms, step_offset)
    return _record(episode_index, result, config.max_steps_per_episode), policy, v


EpisodeCallback = Callable[[EpisodeRecord, object], None]


def qla_train(env, config: ExperimentConfig, on_episode: Optional[EpisodeCallback] = None):
    """Train from uniform registers and ``V = 0`` until an untruncated episode
    changes no value by more than ``epsilon_v`` or ``max_episodes`` run out.

    ``on_episode(record, (policy, v))`` sees the live tables after each episode.
    Returns ``(records, policy, v)``.
    """
    env = as_tabular(env)
    config.validate(env.n_actions)
    rng = make_rng(config.seed, "qla")
    policy = ActionPolicyTable.uniform(env.states, env.n_actions)
    v = ValueTable.zeros(env.states)
    records = []
    step_offset = 0
    cap = config.max_steps_per_episode
    for e in range(config.max_episodes):
        uniforms = rng.random(cap)
        result = _qla_step_batch(env, policy.amplitudes, v.values, config, uniforms, step_offset)
        rec = _record(e, result, cap)
        step_offset += rec.steps
        records.append(rec)
        if on_episode is not None:
            on_episode(rec, (policy, v))
        if not rec.truncated and check_convergence([rec.max_value_delta], config.epsilon_v):
            break
    return records, policy, v


# ---------------------------------------------------------------- TD(0) baseline


def lookahead_q(env: TabularEnv, v: ValueTable, gamma: float) -> np.ndarray:
    """One-step lookahead ``r(s,a) + gamma*V(next(s,a))`` for every state/action."""
    return env.reward + np.where(env.terminal, 0.0, gamma * v.values[env.next_state])


def td0_egreedy_train(env, config: ExperimentConfig, on_episode: Optional[EpisodeCallback] = None):
    """Epsilon-greedy TD(0) with greedy actions from one-step lookahead on the model.

    Stops under the same convergence rule as :func:`qla_train`.  Returns
    ``(records, v)``; ``on_episode(record, v)`` sees the live table.
    """
    env = as_tabular(env)
    config.validate()
    rng = make_rng(config.seed, "td0")
    v = ValueTable.zeros(env.states)
    records = []
    step_offset = 0
    cap = config.max_steps_per_episode
    sched = config.schedule
    for e in range(config.max_episodes):
        uniforms = rng.random(2 * cap)
        result = kernels.td0_episode_kernel(
            env.next_state, env.reward, env.terminal, env.start, v.values, uniforms,
            config.epsilon_greedy, config.gamma, sched.code, sched.alpha0, sched.exponent,
            step_offset, int(cap),
        )
        rec = _record(e, result, cap)
        step_offset += rec.steps
        records.append(rec)
        if on_episode is not None:
            on_episode(rec, v)
        if not rec.truncated and check_convergence([rec.max_value_delta], config.epsilon_v):
            break
    return records, v


# ---------------------------------------------------------------- exact evaluation


@dataclass(frozen=True, eq=False)
class MarkovChain:
    """Fixed-policy chain: ``transition[s, s']`` probabilities and expected
    one-step ``reward[s]``.  All-zero rows are absorbing (value 0)."""

    transition: np.ndarray
    reward: np.ndarray
    states: Optional[tuple] = None


def policy_chain(env, actions: Sequence[int]) -> MarkovChain:
    """Chain induced by following ``actions[s]`` in a deterministic env.
    Terminal transitions lead out of the chain."""
    env = as_tabular(env)
    n = env.n_states
    P = np.zeros((n, n))
    r = np.zeros(n)
    for s in range(n):
        if s in env.goals:
            continue
        a = int(actions[s])
        r[s] = env.reward[s, a]
        if not env.terminal[s, a]:
            P[s, env.next_state[s, a]] = 1.0
    return MarkovChain(P, r, env.states)


def bellman_solve(mdp: MarkovChain, gamma: float) -> ValueTable:
    """Solve ``V = r + gamma * P V`` exactly."""
    P = np.asarray(mdp.transition, dtype=np.float64)
    r = np.asarray(mdp.reward, dtype=np.float64)
    n = r.shape[0]
    if P.shape != (n, n):
        raise ValueError("transition must be (n, n) with n = len(reward)")
    A = np.eye(n) - gamma * P
    if np.linalg.matrix_rank(A) < n:
        raise NoSolutionError("I - gamma*P is singular (gamma = 1 on a non-absorbing chain?)")
    states = tuple(range(n)) if mdp.states is None else tuple(mdp.states)
    return ValueTable(np.linalg.solve(A, r), states)


# ---------------------------------------------------------------- greedy rollout


@dataclass(frozen=True)
class GreedyPath:
    states: tuple
    reached_goal: bool
    undiscounted_return: float

    @property
    def steps(self) -> int:
        return len(self.states) - 1


def greedy_actions(env: TabularEnv, tables, gamma: float = 0.99) -> np.ndarray:
    """Greedy action per state; ties go to the lowest action index.

    A policy table picks its most probable action, a value table uses
    one-step lookahead on the model.
    """
    if isinstance(tables, ActionPolicyTable):
        return np.argmax(tables.probabilities()[:, : env.n_actions], axis=1)
    if isinstance(tables, ValueTable):
        return np.argmax(lookahead_q(env, tables, gamma), axis=1)
    raise TypeError(f"expected ActionPolicyTable or ValueTable, got {type(tables).__name__}")


def greedy_policy_path(env, tables, max_len: int, gamma: float = 0.99) -> GreedyPath:
    """Follow the greedy policy from the start for at most ``max_len`` moves."""
    env = as_tabular(env)
    acts = greedy_actions(env, tables, gamma)
    s = env.start
    path = [env.states[s]]
    ret = 0.0
    for _ in range(max_len):
        a = acts[s]
        ret += float(env.reward[s, a])
        done = bool(env.terminal[s, a])
        s = int(env.next_state[s, a])
        path.append(env.states[s])
        if done or s in env.goals:
            return GreedyPath(tuple(path), True, ret)
    return GreedyPath(tuple(path), False, ret)
