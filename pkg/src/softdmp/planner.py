"""Soft Q value iteration: model-based fixed points of the mellow-max backup."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .env import Mdp
from .operators import as_eta, format_eta, greedy_action_set, mellow_max


class ConvergenceError(RuntimeError):
    """QVI hit ``max_iter`` with the Bellman residual still >= ``tol``."""

    def __init__(self, result: "PlanResult", tol: float):
        self.result = result
        super().__init__(
            f"soft QVI did not converge: residual {result.residual:.3e} >= tol {tol:.3e} "
            f"after {result.iterations} iterations"
        )


@dataclass
class PlanResult:
    q: np.ndarray
    v: np.ndarray
    iterations: int
    residual: float
    eta: float


def soft_backup(mdp: Mdp, q: np.ndarray, eta) -> np.ndarray:
    """One synchronous soft Bellman backup of ``q``."""
    v = mellow_max(q, eta)
    v[mdp.absorbing] = 0.0
    q_new = mdp.expected_reward + mdp.gamma * (mdp.transition @ v)
    q_new[mdp.absorbing] = 0.0
    return q_new


def soft_qvi(mdp: Mdp, eta, tol: float = 1e-10, max_iter: int = 100_000,
             q0: np.ndarray | None = None) -> PlanResult:
    """Iterate the soft Bellman backup until the sup-norm change drops below ``tol``.

    Sweeps are Jacobi (every entry is updated from the previous table), so the
    result does not depend on state ordering.  Raises ``ConvergenceError`` if
    ``max_iter`` sweeps are not enough.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    eta = as_eta(eta)
    q = np.zeros((mdp.n_states, mdp.n_actions)) if q0 is None else np.array(q0, dtype=float)
    residual, it = math.inf, 0
    while it < max_iter:
        q_new = soft_backup(mdp, q, eta)
        residual = float(np.max(np.abs(q_new - q)))
        q = q_new
        it += 1
        if residual < tol:
            break
    result = PlanResult(q=q, v=mellow_max(q, eta), iterations=it, residual=residual, eta=eta)
    if residual >= tol:
        raise ConvergenceError(result, tol)
    return result


def derive_policies(result: PlanResult, eta=None) -> dict:
    """Per-state greedy action sets under the operator's own extremum and its flip.

    ``optimal`` uses argmax for eta > 0 and argmin for eta < 0; ``flipped`` is
    the opposite extremum.  At eta = 0 both are the full action set.
    """
    eta = result.eta if eta is None else as_eta(eta)
    n_s, n_a = result.q.shape
    if eta == 0.0:
        full = [frozenset(range(n_a))] * n_s
        return {"optimal": list(full), "flipped": list(full)}
    own, other = ("argmax", "argmin") if eta > 0 else ("argmin", "argmax")
    return {
        "optimal": [greedy_action_set(row, own) for row in result.q],
        "flipped": [greedy_action_set(row, other) for row in result.q],
    }


def write_plan_csv(path, result: PlanResult, mdp: Mdp, fmt: str = "{:.12g}") -> None:
    """One row per state: id, grid coordinates, v, then q for every action."""
    names = list(mdp.action_names)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["state", "row", "col", "wall", "eta", "v"] + [f"q_{n}" for n in names])
        for s in range(mdp.n_states):
            row, col = mdp.cells[s] if mdp.cells else ("", "")
            w.writerow([s, row, col, int(mdp.walls[s]), format_eta(result.eta), fmt.format(result.v[s])]
                       + [fmt.format(x) for x in result.q[s]])


def write_policy_csv(path, result: PlanResult, mdp: Mdp) -> None:
    """Greedy action sets per state, actions joined by ``|``."""
    pol = derive_policies(result)
    names = mdp.action_names
    join = lambda acts: "|".join(names[a] for a in sorted(acts))  # noqa: E731
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["state", "row", "col", "wall", "optimal", "flipped"])
        for s in range(mdp.n_states):
            row, col = mdp.cells[s] if mdp.cells else ("", "")
            w.writerow([s, row, col, int(mdp.walls[s]), join(pol["optimal"][s]), join(pol["flipped"][s])])
