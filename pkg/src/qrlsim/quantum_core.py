"""Exact statevector simulation of small qubit registers.

Registers are immutable values: every operation returns a new
:class:`AmplitudeRegister`.  Basis index ``a`` encodes ``|a>`` with qubit ``q``
stored in bit ``q`` of the index (little-endian).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import (
    ExcessiveIterationsError,
    InvalidAxisError,
    InvalidSizeError,
    InvalidStateError,
    ShapeError,
)

MAX_QUBITS = 20
NORM_TOL = 1e-9
AXIS_TOL = 1e-6

_H = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=np.complex128) / math.sqrt(2.0)


def _check_qubit_count(n_qubits):
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise InvalidSizeError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}")


@dataclass(frozen=True, eq=False)
class AmplitudeRegister:
    """Normalized vector of ``2**n_qubits`` complex probability amplitudes."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        size = amps.shape[0]
        if size < 2 or size & (size - 1):
            raise InvalidSizeError(f"register length must be a power of two >= 2, got {size}")
        _check_qubit_count(size.bit_length() - 1)
        norm2 = float(np.sum(np.abs(amps) ** 2))
        if abs(norm2 - 1.0) > NORM_TOL:
            raise InvalidStateError(f"register is not normalized (sum |C|^2 = {norm2!r})")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_qubits(self) -> int:
        return self.amplitudes.shape[0].bit_length() - 1

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def norm_squared(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    def allclose(self, other, atol=1e-12) -> bool:
        other = other.amplitudes if isinstance(other, AmplitudeRegister) else np.asarray(other)
        return self.dim == other.shape[0] and bool(np.allclose(self.amplitudes, other, rtol=0.0, atol=atol))

    def __len__(self):
        return self.dim

    def __repr__(self):
        return f"AmplitudeRegister(n_qubits={self.n_qubits}, amplitudes={np.array2string(self.amplitudes, precision=6)})"


@dataclass(frozen=True, eq=False)
class PhaseShift:
    """Diagonal gate ``diag(exp(i*phi_a))``; phases in radians."""

    phases: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "phases", np.asarray(self.phases, dtype=np.float64).reshape(-1))

    @classmethod
    def single(cls, dim, index, phi):
        phases = np.zeros(dim)
        phases[index] = phi
        return cls(phases)


def _wrap(amps) -> AmplitudeRegister:
    return AmplitudeRegister(amps)


def _raw(register) -> np.ndarray:
    if isinstance(register, AmplitudeRegister):
        return register.amplitudes
    return np.asarray(register, dtype=np.complex128).reshape(-1)


def uniform_register(n_qubits: int) -> AmplitudeRegister:
    _check_qubit_count(n_qubits)
    dim = 1 << n_qubits
    return _wrap(np.full(dim, 1.0 / math.sqrt(dim), dtype=np.complex128))


def basis_register(n_qubits: int, index: int) -> AmplitudeRegister:
    _check_qubit_count(n_qubits)
    dim = 1 << n_qubits
    if not 0 <= index < dim:
        raise IndexError(f"basis index {index} out of range for {n_qubits} qubits")
    amps = np.zeros(dim, dtype=np.complex128)
    amps[index] = 1.0
    return _wrap(amps)


def apply_hadamard(register: AmplitudeRegister, qubit_index: int) -> AmplitudeRegister:
    n = register.n_qubits
    if not 0 <= qubit_index < n:
        raise IndexError(f"qubit_index {qubit_index} out of range for {n} qubits")
    view = register.amplitudes.reshape(1 << (n - qubit_index - 1), 2, 1 << qubit_index)
    out = np.einsum("ij,ajb->aib", _H, view)
    return _wrap(out.reshape(-1))


def hadamard_all(register: AmplitudeRegister) -> AmplitudeRegister:
    """Apply ``H`` to every qubit in turn (``H^{(x)n}``)."""
    for q in range(register.n_qubits):
        register = apply_hadamard(register, q)
    return register


def apply_phase_shift(register: AmplitudeRegister, shift: PhaseShift) -> AmplitudeRegister:
    if shift.phases.shape[0] != register.dim:
        raise ShapeError(f"phase shift has {shift.phases.shape[0]} phases, register has dimension {register.dim}")
    return _wrap(register.amplitudes * np.exp(1j * shift.phases))


def oracle_reflection(register: AmplitudeRegister, target: int) -> AmplitudeRegister:
    """``(I - 2|k><k|)``: negate the amplitude of basis state ``target``."""
    if not 0 <= target < register.dim:
        raise IndexError(f"target {target} out of range for dimension {register.dim}")
    amps = register.amplitudes.copy()
    amps[target] = -amps[target]
    return _wrap(amps)


def reflection_about_state(register: AmplitudeRegister, axis) -> AmplitudeRegister:
    """``(2|axis><axis| - I) register``.

    ``axis`` may be a register or a raw vector; raw vectors must have unit
    norm to within ``AXIS_TOL``.
    """
    u = _raw(axis)
    if u.shape[0] != register.dim:
        raise ShapeError(f"axis dimension {u.shape[0]} != register dimension {register.dim}")
    norm2 = float(np.sum(np.abs(u) ** 2))
    if abs(norm2 - 1.0) > AXIS_TOL:
        raise InvalidAxisError(f"reflection axis is not normalized (sum |u|^2 = {norm2!r})")
    v = register.amplitudes
    return _wrap(2.0 * np.vdot(u, v) * u - v)


def max_grover_iterations(n_qubits: int) -> int:
    """Hard cap on ``L`` accepted by :func:`grover_update`."""
    return int(10 * 2 ** (n_qubits / 2))


def max_safe_iterations(beta: float) -> int:
    """Largest ``L`` with ``(2L+1)*beta <= pi/2``, i.e. no overshoot past the target."""
    if beta <= 0.0:
        raise ValueError("beta must be positive")
    return max(0, int(math.floor((math.pi / (2.0 * beta) - 1.0) / 2.0 + 1e-12)))


def grover_update(register: AmplitudeRegister, target: int, L: int) -> AmplitudeRegister:
    """Apply ``[U_a U_k]^L`` with the reflection axis frozen at ``register``.

    For a real non-negative register whose target amplitude is ``sin(beta)``
    the result has target amplitude ``sin((2L+1)*beta)``.
    """
    if not 0 <= target < register.dim:
        raise IndexError(f"target {target} out of range for dimension {register.dim}")
    if L < 0:
        raise ValueError(f"L must be non-negative, got {L}")
    cap = max_grover_iterations(register.n_qubits)
    if L > cap:
        raise ExcessiveIterationsError(f"L={L} exceeds the cap {cap} for {register.n_qubits} qubits")
    amps = register.amplitudes.copy()
    kernels.grover_inplace(amps, int(target), int(L))
    return _wrap(amps)


def closed_form_amplitude(beta: float, L: int) -> tuple[float, float]:
    """Target and rest-of-space amplitudes after ``L`` Grover iterations."""
    if not 0.0 <= beta <= math.pi / 2.0:
        raise ValueError(f"beta must lie in [0, pi/2], got {beta}")
    angle = (2 * L + 1) * beta
    return math.sin(angle), math.cos(angle)


def probabilities(register) -> np.ndarray:
    return np.abs(_raw(register)) ** 2


def measure(register, rng: np.random.Generator) -> int:
    """Sample a basis index with Born-rule probabilities; the register is untouched."""
    amps = _raw(register)
    index = kernels.sample_index(amps, rng.random())
    if index < 0:
        raise InvalidStateError("cannot measure an all-zero register")
    return int(index)
