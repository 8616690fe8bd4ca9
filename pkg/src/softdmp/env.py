"""Finite MDPs and the benchmark environments (grid mazes and the chain).

Environment specs are JSON documents of the form ``{"type": "grid", ...}`` or
``{"type": "chain", ...}``.  Grid wall maps are ASCII art: ``#`` wall,
``.`` free, ``S`` start, ``G`` goal.  The outer boundary is implicit; bumping
into it counts as a collision just like bumping into an inner wall.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

GRID_ACTIONS = ("up", "down", "left", "right", "stop")
CHAIN_ACTIONS = ("left", "right", "stop")

_MOVES = {"up": (-1, 0), "down": (1, 0), "left": (0, -1), "right": (0, 1), "stop": (0, 0)}

_STOCH_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Mdp:
    """A finite MDP ``(S, A, P, P0, R, gamma)`` with absorbing-state flags.

    ``transition[s, a, s']`` and ``reward[s, a, s']`` are dense tables.
    ``cells`` maps state ids to grid coordinates (row, col) for grid worlds,
    and is empty otherwise.
    """

    transition: np.ndarray
    reward: np.ndarray
    initial_dist: np.ndarray
    absorbing: np.ndarray
    gamma: float
    action_names: tuple = ()
    name: str = ""
    cells: tuple = ()
    shape: tuple = ()
    walls: np.ndarray | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        for attr in ("transition", "reward", "initial_dist", "absorbing"):
            arr = np.array(getattr(self, attr), dtype=bool if attr == "absorbing" else float)
            arr.setflags(write=False)
            object.__setattr__(self, attr, arr)
        n_s, n_a = self.transition.shape[:2]
        if self.transition.shape != (n_s, n_a, n_s) or self.reward.shape != self.transition.shape:
            raise ValueError("transition and reward must both have shape (S, A, S)")
        if self.initial_dist.shape != (n_s,) or self.absorbing.shape != (n_s,):
            raise ValueError("initial_dist and absorbing must have shape (S,)")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"discount must lie in [0, 1), got {self.gamma}")
        if np.any(self.transition < 0) or np.any(np.abs(self.transition.sum(-1) - 1) > _STOCH_TOL):
            raise ValueError("every transition row must be a probability distribution")
        if np.any(self.initial_dist < 0) or abs(self.initial_dist.sum() - 1) > _STOCH_TOL:
            raise ValueError("initial_dist must be a probability distribution")
        for s in np.flatnonzero(self.absorbing):
            if np.any(self.transition[s, :, s] != 1.0) or np.any(self.reward[s, :, s] != 0.0):
                raise ValueError(f"absorbing state {s} must self-loop with reward 0")
        walls = np.zeros(n_s, dtype=bool) if self.walls is None else np.array(self.walls, dtype=bool)
        walls.setflags(write=False)
        object.__setattr__(self, "walls", walls)
        if not self.action_names:
            object.__setattr__(self, "action_names", tuple(f"a{i}" for i in range(n_a)))

    @property
    def n_states(self) -> int:
        return self.transition.shape[0]

    @property
    def n_actions(self) -> int:
        return self.transition.shape[1]

    @property
    def free_states(self) -> np.ndarray:
        """Ids of states an agent can occupy (everything but grid wall cells)."""
        return np.flatnonzero(~self.walls)

    @property
    def expected_reward(self) -> np.ndarray:
        """``sum_s' P(s'|s,a) R(s,a,s')`` as an (S, A) table."""
        if "er" not in self._cache:
            self._cache["er"] = (self.transition * self.reward).sum(-1)
        return self._cache["er"]

    def deterministic_tables(self):
        """``(next_state, reward)`` (S, A) tables, or None if any row is stochastic."""
        if "det" not in self._cache:
            det = None
            if np.all(self.transition.max(-1) == 1.0):
                nxt = self.transition.argmax(-1)
                rew = np.take_along_axis(self.reward, nxt[..., None], -1)[..., 0]
                det = (nxt, rew)
            self._cache["det"] = det
        return self._cache["det"]

    def with_reward(self, reward) -> "Mdp":
        return replace(self, reward=reward, _cache={})

    def with_gamma(self, gamma: float) -> "Mdp":
        return replace(self, gamma=float(gamma), _cache={})


@dataclass(frozen=True)
class GridSpec:
    width: int
    height: int
    start_cell: tuple
    wall_cells: frozenset = frozenset()
    goal_cell: tuple | None = None
    collision_reward: float = -0.1
    goal_reward: float = 0.0
    gamma: float = 0.9
    name: str = "grid"

    def __post_init__(self):
        object.__setattr__(self, "start_cell", tuple(self.start_cell))
        object.__setattr__(self, "wall_cells", frozenset(tuple(c) for c in self.wall_cells))
        if self.goal_cell is not None:
            object.__setattr__(self, "goal_cell", tuple(self.goal_cell))

    @classmethod
    def from_ascii(cls, rows, **kwargs) -> "GridSpec":
        """Parse a wall map given as a list of strings or one multi-line string."""
        if isinstance(rows, str):
            rows = rows.split()
        rows = [r.strip() for r in rows if r.strip()]
        if len({len(r) for r in rows}) != 1:
            raise ValueError("grid map rows must all have the same width")
        walls, start, goal = set(), None, None
        for i, row in enumerate(rows):
            for j, ch in enumerate(row):
                if ch == "#":
                    walls.add((i, j))
                elif ch == "S":
                    if start is not None:
                        raise ValueError("grid map has more than one start cell")
                    start = (i, j)
                elif ch == "G":
                    if goal is not None:
                        raise ValueError("grid map has more than one goal cell")
                    goal = (i, j)
                elif ch != ".":
                    raise ValueError(f"unknown grid map symbol {ch!r}")
        if start is None:
            raise ValueError("grid map has no start cell 'S'")
        return cls(width=len(rows[0]), height=len(rows), start_cell=start,
                   wall_cells=frozenset(walls), goal_cell=goal, **kwargs)


@dataclass(frozen=True)
class ChainSpec:
    """``edge_reward_mode`` decides which transitions pay ``edge_reward``.

    ``"collision"``: trying to move off either end (the agent stays put).
    ``"entry"``: any transition whose destination is an end state, stopping
    there included.
    """

    length: int = 21
    edge_reward: float = -0.1
    gamma: float = 0.9
    edge_reward_mode: str = "collision"
    name: str = "chain"


def _in_grid(spec: GridSpec, cell) -> bool:
    return 0 <= cell[0] < spec.height and 0 <= cell[1] < spec.width


def build_gridworld(spec: GridSpec) -> Mdp:
    """Deterministic grid world with actions up/down/left/right/stop.

    Every cell (walls included) is a state so ids are ``row * width + col``;
    wall cells are unreachable self-loops.  A blocked move leaves the agent in
    place with ``collision_reward``; entering the goal pays ``goal_reward`` and
    the goal is absorbing.
    """
    if spec.width < 1 or spec.height < 1:
        raise ValueError("grid dimensions must be positive")
    for cell in [spec.start_cell, *spec.wall_cells] + ([spec.goal_cell] if spec.goal_cell else []):
        if not _in_grid(spec, cell):
            raise ValueError(f"cell {cell} lies outside the {spec.height}x{spec.width} grid")
    if tuple(spec.start_cell) in spec.wall_cells:
        raise ValueError("start cell is a wall")
    if spec.goal_cell is not None and tuple(spec.goal_cell) in spec.wall_cells:
        raise ValueError("goal cell is a wall")

    n_s, n_a = spec.width * spec.height, len(GRID_ACTIONS)
    idx = lambda cell: cell[0] * spec.width + cell[1]  # noqa: E731
    P = np.zeros((n_s, n_a, n_s))
    R = np.zeros((n_s, n_a, n_s))
    absorbing = np.zeros(n_s, dtype=bool)
    walls = np.zeros(n_s, dtype=bool)
    goal = tuple(spec.goal_cell) if spec.goal_cell is not None else None
    cells = tuple((s // spec.width, s % spec.width) for s in range(n_s))
    for s, cell in enumerate(cells):
        if cell in spec.wall_cells or cell == goal:
            P[s, :, s] = 1.0
            absorbing[s] = cell == goal
            walls[s] = cell != goal
            continue
        for a, name in enumerate(GRID_ACTIONS):
            dr, dc = _MOVES[name]
            target = (cell[0] + dr, cell[1] + dc)
            if name == "stop":
                P[s, a, s] = 1.0
            elif not _in_grid(spec, target) or target in spec.wall_cells:
                P[s, a, s] = 1.0
                R[s, a, s] = spec.collision_reward
            else:
                t = idx(target)
                P[s, a, t] = 1.0
                R[s, a, t] = spec.goal_reward if target == goal else 0.0
    p0 = np.zeros(n_s)
    p0[idx(spec.start_cell)] = 1.0
    return Mdp(P, R, p0, absorbing, spec.gamma, GRID_ACTIONS, spec.name, cells,
               (spec.height, spec.width), walls)


def build_chain(spec: ChainSpec) -> Mdp:
    """1-D chain with actions left/right/stop and no absorbing states.

    Moving off either end leaves the agent at the edge.  Which transitions pay
    ``edge_reward`` follows ``spec.edge_reward_mode``.  Episodes start
    uniformly at random.
    """
    n = spec.length
    if n < 3:
        raise ValueError("chain length must be at least 3")
    if spec.edge_reward_mode not in ("collision", "entry"):
        raise ValueError(f"edge_reward_mode must be 'collision' or 'entry', got {spec.edge_reward_mode!r}")
    P = np.zeros((n, 3, n))
    R = np.zeros((n, 3, n))
    for s in range(n):
        for a, step in enumerate((-1, 1, 0)):
            t = min(max(s + step, 0), n - 1)
            P[s, a, t] = 1.0
            if spec.edge_reward_mode == "entry":
                painful = t in (0, n - 1)
            else:
                painful = step != 0 and t == s
            if painful:
                R[s, a, t] = spec.edge_reward
    return Mdp(P, R, np.full(n, 1.0 / n), np.zeros(n, dtype=bool), spec.gamma,
               CHAIN_ACTIONS, spec.name, tuple((0, s) for s in range(n)), (1, n))


def decompose_reward(mdp: Mdp) -> tuple[Mdp, Mdp]:
    """Split rewards into non-negative and non-positive parts sharing dynamics."""
    return mdp.with_reward(np.maximum(mdp.reward, 0.0)), mdp.with_reward(np.minimum(mdp.reward, 0.0))


def bump_mask(mdp: Mdp) -> np.ndarray:
    """(S, A) mask of actions whose expected reward is negative."""
    return mdp.expected_reward < 0


# -- JSON specs --------------------------------------------------------------

def spec_from_dict(doc: dict) -> GridSpec | ChainSpec:
    doc = dict(doc)
    kind = doc.pop("type", None)
    if kind == "grid":
        rows = doc.pop("map")
        return GridSpec.from_ascii(rows, **doc)
    if kind == "chain":
        return ChainSpec(**doc)
    raise ValueError(f"environment type must be 'grid' or 'chain', got {kind!r}")


def build_env(doc: dict) -> Mdp:
    spec = spec_from_dict(doc)
    return build_gridworld(spec) if isinstance(spec, GridSpec) else build_chain(spec)


def builtin_envs() -> list[str]:
    files = resources.files("softdmp.data").joinpath("envs").iterdir()
    return sorted(f.name[:-5] for f in files if f.name.endswith(".json"))


def load_env_doc(ref) -> dict:
    """Resolve an env reference: inline dict, builtin name, or JSON file path."""
    if isinstance(ref, dict):
        return ref
    ref = str(ref)
    if ref in builtin_envs():
        text = resources.files("softdmp.data").joinpath("envs", ref + ".json").read_text()
    else:
        text = Path(ref).read_text()
    return json.loads(text)
