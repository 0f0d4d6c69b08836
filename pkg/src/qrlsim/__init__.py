"""Quantum-inspired TD learning: amplitude-register action policies reinforced
by Grover iterations, an epsilon-greedy TD(0) baseline and a gridworld harness."""
from ._jit import BACKEND
from .gridworld import Action, GridWorld, default_layout, parse_layout, serialize_layout, step
from .harness import compare, run_experiment, write_curves
from .quantum_core import (
    AmplitudeRegister,
    PhaseShift,
    apply_hadamard,
    apply_phase_shift,
    closed_form_amplitude,
    grover_update,
    measure,
    oracle_reflection,
    probabilities,
    reflection_about_state,
    uniform_register,
)
from .rl_core import (
    ActionPolicyTable,
    EpisodeRecord,
    ExperimentConfig,
    StepsizeSchedule,
    TabularEnv,
    ValueTable,
    bellman_solve,
    greedy_policy_path,
    qla_train,
    td0_egreedy_train,
    td_update,
)

__version__ = "0.1.0"
