"""Hot loops: Grover iteration, Born sampling and whole training episodes.

Every function here is decorated with :func:`qrlsim._jit.jit`, so it is either
numba-compiled or plain Python depending on ``QRLSIM_BACKEND``.  Both paths
consume the same pre-drawn uniforms and produce identical results.

Environment arrays use the tabular layout of :class:`qrlsim.rl_core.TabularEnv`:
``next_state[s, a]`` (int64), ``reward[s, a]`` (float64), ``terminal[s, a]`` (bool).
"""
import numpy as np

from ._jit import jit

SCHEDULE_CONSTANT = 0
SCHEDULE_HARMONIC = 1
SCHEDULE_POLYNOMIAL = 2

SIGNAL_TD_ERROR = 0
SIGNAL_TD_TARGET = 1


@jit
def grover_inplace(amps, target, iterations):
    # reflection axis frozen at the entry state
    axis = amps.copy()
    for _ in range(iterations):
        amps[target] = -amps[target]
        overlap = np.sum(np.conj(axis) * amps)
        amps[:] = 2.0 * overlap * axis - amps


@jit
def sample_index(amps, u):
    """Inverse-CDF draw over |amps|^2 using one uniform ``u`` in [0, 1)."""
    total = 0.0
    for i in range(amps.shape[0]):
        total += amps[i].real ** 2 + amps[i].imag ** 2
    if total <= 0.0:
        return -1
    threshold = u * total
    acc = 0.0
    last = -1
    for i in range(amps.shape[0]):
        p = amps[i].real ** 2 + amps[i].imag ** 2
        if p > 0.0:
            last = i
            acc += p
            if threshold < acc:
                return i
    return last


@jit
def stepsize_at(kind, alpha0, exponent, k):
    if kind == SCHEDULE_HARMONIC:
        return alpha0 / k
    if kind == SCHEDULE_POLYNOMIAL:
        return alpha0 / k ** exponent
    return alpha0


@jit
def iterations_for(signal, k_gain, l_max):
    x = k_gain * signal
    if not x >= 1.0:  # also catches NaN
        return 0
    if x >= l_max:
        return l_max
    return int(np.floor(x))


@jit
def lookahead_action(next_state, reward, terminal, values, s, gamma):
    best = -np.inf
    best_a = 0
    for a in range(next_state.shape[1]):
        q = reward[s, a]
        if not terminal[s, a]:
            q += gamma * values[next_state[s, a]]
        if q > best:
            best = q
            best_a = a
    return best_a


@jit
def qla_episode_kernel(next_state, reward, terminal, start, amps, values, uniforms,
                       gamma, kind, alpha0, exponent, step0, k_gain, l_max,
                       signal_mode, max_steps):
    """Run one QLA episode in place on ``amps`` and ``values``.

    Returns ``(steps, undiscounted_return, max_abs_delta, reached_terminal)``.
    ``uniforms`` must hold at least ``max_steps`` draws.
    """
    s = start
    steps = 0
    ret = 0.0
    max_delta = 0.0
    done = False
    while steps < max_steps:
        a = sample_index(amps[s], uniforms[steps])
        s_next = next_state[s, a]
        r = reward[s, a]
        term = terminal[s, a]
        target = r
        if not term:
            target += gamma * values[s_next]
        error = target - values[s]
        alpha = stepsize_at(kind, alpha0, exponent, step0 + steps + 1)
        delta = alpha * error
        values[s] += delta
        if abs(delta) > max_delta:
            max_delta = abs(delta)
        signal = error if signal_mode == SIGNAL_TD_ERROR else target
        n_iter = iterations_for(signal, k_gain, l_max)
        if n_iter > 0:
            grover_inplace(amps[s], a, n_iter)
        ret += r
        steps += 1
        s = s_next
        if term:
            done = True
            break
    return steps, ret, max_delta, done


@jit
def td0_episode_kernel(next_state, reward, terminal, start, values, uniforms,
                       epsilon, gamma, kind, alpha0, exponent, step0, max_steps):
    """Run one epsilon-greedy TD(0) episode in place on ``values``.

    Two uniforms per step: the explore test and the random action.
    """
    n_actions = next_state.shape[1]
    s = start
    steps = 0
    ret = 0.0
    max_delta = 0.0
    done = False
    while steps < max_steps:
        if uniforms[2 * steps] < epsilon:
            a = min(int(uniforms[2 * steps + 1] * n_actions), n_actions - 1)
        else:
            a = lookahead_action(next_state, reward, terminal, values, s, gamma)
        s_next = next_state[s, a]
        r = reward[s, a]
        term = terminal[s, a]
        target = r
        if not term:
            target += gamma * values[s_next]
        alpha = stepsize_at(kind, alpha0, exponent, step0 + steps + 1)
        delta = alpha * (target - values[s])
        values[s] += delta
        if abs(delta) > max_delta:
            max_delta = abs(delta)
        ret += r
        steps += 1
        s = s_next
        if term:
            done = True
            break
    return steps, ret, max_delta, done
