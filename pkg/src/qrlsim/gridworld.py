"""Deterministic cell gridworld and its plain-text layout format.

Cells are addressed as ``(col, row)`` with row 0 at the top.  A layout file
is 13 lines of 13 characters over ``#`` (blocked), ``.`` (free), ``S``
(start) and ``G`` (goal).
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .errors import (
    DuplicateGoalError,
    DuplicateStartError,
    InvalidStateError,
    LayoutDimensionError,
    MissingGoalError,
    MissingStartError,
    UnknownCharacterError,
    UnreachableGoalError,
)

GRID_SIZE = 13


class Action(IntEnum):
    UP = 0
    DOWN = 1
    LEFT = 2
    RIGHT = 3


_MOVES = {
    Action.UP: (0, -1),
    Action.DOWN: (0, 1),
    Action.LEFT: (-1, 0),
    Action.RIGHT: (1, 0),
}


@dataclass(frozen=True)
class StepOutcome:
    next_state: tuple[int, int]
    reward: float
    terminal: bool


@dataclass(frozen=True)
class GridWorld:
    width: int
    height: int
    blocked: frozenset
    start: tuple[int, int]
    goal: tuple[int, int]
    step_reward: float = -1.0
    goal_reward: float = 100.0

    def __post_init__(self):
        object.__setattr__(self, "blocked", frozenset(tuple(c) for c in self.blocked))
        object.__setattr__(self, "start", tuple(self.start))
        object.__setattr__(self, "goal", tuple(self.goal))
        for name in ("start", "goal"):
            cell = getattr(self, name)
            if not self.is_free(cell):
                raise InvalidStateError(f"{name} {cell} is not a free cell")
        if self.start == self.goal:
            raise InvalidStateError("start and goal must differ")
        if self.goal not in self.reachable_from(self.start):
            raise UnreachableGoalError(f"goal {self.goal} is not reachable from start {self.start}")

    def in_bounds(self, cell) -> bool:
        col, row = cell
        return 0 <= col < self.width and 0 <= row < self.height

    def is_free(self, cell) -> bool:
        return self.in_bounds(cell) and tuple(cell) not in self.blocked

    def free_cells(self) -> list[tuple[int, int]]:
        """Free cells in row-major (screen) order."""
        return [(c, r) for r in range(self.height) for c in range(self.width) if (c, r) not in self.blocked]

    def reachable_from(self, cell) -> set:
        seen = {tuple(cell)}
        queue = deque([tuple(cell)])
        while queue:
            col, row = queue.popleft()
            for dc, dr in _MOVES.values():
                nxt = (col + dc, row + dr)
                if nxt not in seen and self.is_free(nxt):
                    seen.add(nxt)
                    queue.append(nxt)
        return seen

    def shortest_path_length(self) -> int:
        dist = {self.start: 0}
        queue = deque([self.start])
        while queue:
            cell = queue.popleft()
            if cell == self.goal:
                return dist[cell]
            for dc, dr in _MOVES.values():
                nxt = (cell[0] + dc, cell[1] + dr)
                if nxt not in dist and self.is_free(nxt):
                    dist[nxt] = dist[cell] + 1
                    queue.append(nxt)
        raise UnreachableGoalError("goal unreachable")

    def optimal_return(self) -> float:
        """Undiscounted return of a shortest start-to-goal episode."""
        return (self.shortest_path_length() - 1) * self.step_reward + self.goal_reward

    def to_env(self):
        """Tabular view with one state per free cell (row-major order)."""
        from .rl_core import TabularEnv

        states = self.free_cells()
        index = {cell: i for i, cell in enumerate(states)}
        n = len(states)
        next_state = np.zeros((n, len(Action)), dtype=np.int64)
        reward = np.zeros((n, len(Action)), dtype=np.float64)
        terminal = np.zeros((n, len(Action)), dtype=np.bool_)
        for i, cell in enumerate(states):
            for a in Action:
                if cell == self.goal:
                    next_state[i, a] = i
                    continue
                out = step(self, cell, a)
                next_state[i, a] = index[out.next_state]
                reward[i, a] = out.reward
                terminal[i, a] = out.terminal
        return TabularEnv(next_state, reward, terminal, start=index[self.start], states=tuple(states),
                          goals=frozenset({index[self.goal]}))


def step(grid: GridWorld, state, action) -> StepOutcome:
    state = tuple(state)
    if not grid.is_free(state):
        raise InvalidStateError(f"cannot step from non-free cell {state}")
    if state == grid.goal:
        raise InvalidStateError("cannot step from the goal")
    dc, dr = _MOVES[Action(action)]
    target = (state[0] + dc, state[1] + dr)
    if not grid.is_free(target):
        return StepOutcome(state, grid.step_reward, False)
    if target == grid.goal:
        return StepOutcome(target, grid.goal_reward, True)
    return StepOutcome(target, grid.step_reward, False)


def default_layout() -> GridWorld:
    """13x13 grid with a blocked outer ring, start (1, 1) and goal (11, 11)."""
    last = GRID_SIZE - 1
    ring = {(c, r) for r in range(GRID_SIZE) for c in range(GRID_SIZE) if c in (0, last) or r in (0, last)}
    return GridWorld(GRID_SIZE, GRID_SIZE, frozenset(ring), (1, 1), (last - 1, last - 1))


def parse_layout(text: str) -> GridWorld:
    lines = text.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    lines = [line.rstrip() for line in lines]
    if len(lines) != GRID_SIZE:
        raise LayoutDimensionError(f"expected {GRID_SIZE} lines, got {len(lines)}")
    blocked = set()
    start = goal = None
    for row, line in enumerate(lines):
        if len(line) != GRID_SIZE:
            raise LayoutDimensionError(f"expected {GRID_SIZE} characters, got {len(line)}", line=row + 1)
        for col, ch in enumerate(line):
            pos = dict(line=row + 1, column=col + 1)
            if ch == "#":
                blocked.add((col, row))
            elif ch == "S":
                if start is not None:
                    raise DuplicateStartError("second start cell 'S'", **pos)
                start = (col, row)
            elif ch == "G":
                if goal is not None:
                    raise DuplicateGoalError("second goal cell 'G'", **pos)
                goal = (col, row)
            elif ch != ".":
                raise UnknownCharacterError(f"unknown character {ch!r}", **pos)
    if start is None:
        raise MissingStartError("no start cell 'S'")
    if goal is None:
        raise MissingGoalError("no goal cell 'G'")
    return GridWorld(GRID_SIZE, GRID_SIZE, frozenset(blocked), start, goal)


def serialize_layout(grid: GridWorld) -> str:
    rows = []
    for r in range(grid.height):
        chars = []
        for c in range(grid.width):
            cell = (c, r)
            if cell == grid.start:
                chars.append("S")
            elif cell == grid.goal:
                chars.append("G")
            elif cell in grid.blocked:
                chars.append("#")
            else:
                chars.append(".")
        rows.append("".join(chars))
    return "\n".join(rows) + "\n"


def load_layout(path) -> GridWorld:
    with open(path, encoding="utf-8") as fh:
        return parse_layout(fh.read())
