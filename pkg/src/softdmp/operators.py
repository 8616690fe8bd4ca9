"""Entropy-parameterized operators over action values.

The mellow-max family ``MM_eta`` interpolates between min (eta = -inf), mean
(eta = 0) and max (eta = +inf).  Entropy parameters are plain floats; the
infinities are ``float('inf')`` / ``float('-inf')``.
"""

from __future__ import annotations

import math

import numpy as np

INF = math.inf

#: |eta| at or above this is treated as infinite.
HARD_THRESHOLD = 1e7

#: Absolute tolerance used to decide ties between action values.
TIE_TOL = 1e-9


def as_eta(value) -> float:
    """Coerce ``value`` (float, int or string such as ``"-inf"``) to an eta.

    Finite values with magnitude >= ``HARD_THRESHOLD`` snap to +/- inf.
    """
    if type(value) is float and abs(value) < HARD_THRESHOLD:
        return value
    if isinstance(value, str):
        value = value.strip().lower()
        if value in ("+inf", "inf", "infinity", "+infinity"):
            return INF
        if value in ("-inf", "-infinity"):
            return -INF
    eta = float(value)
    if math.isnan(eta):
        raise ValueError("entropy parameter may not be NaN")
    if abs(eta) >= HARD_THRESHOLD:
        return math.copysign(INF, eta)
    return eta


def format_eta(eta: float) -> str:
    """String form of an eta that survives a JSON round trip."""
    eta = as_eta(eta)
    if math.isinf(eta):
        return "inf" if eta > 0 else "-inf"
    return repr(eta)


def mellow_max(q, eta) -> np.ndarray | float:
    """Log-average-exp of ``q`` along its last axis.

    ``(1/eta) * log(mean(exp(eta * q)))`` for finite nonzero eta, the exact
    max / min / mean for eta = +inf / -inf / 0.  The exponent is shifted by
    the row max (eta > 0) or row min (eta < 0) so every exponent is <= 0.
    Accepts a single row (returns a float) or a stack of rows.
    """
    eta = as_eta(eta)
    q = np.asarray(q, dtype=float)
    if q.shape[-1] == 0:
        raise ValueError("mellow_max of an empty action set")
    if eta == INF:
        out = q.max(axis=-1)
    elif eta == -INF:
        out = q.min(axis=-1)
    elif eta == 0.0:
        out = q.sum(axis=-1) / q.shape[-1]
    else:
        pivot = q.max(axis=-1) if eta > 0 else q.min(axis=-1)
        z = eta * (q - pivot[..., None] if q.ndim > 1 else q - pivot)
        # log(mean(exp(z))) via expm1/log1p keeps precision when |eta| is tiny
        out = pivot + np.log1p(np.expm1(z).sum(axis=-1) / q.shape[-1]) / eta
    return float(out) if q.ndim == 1 else out


def greedy_action_set(q_row, mode: str = "argmax") -> frozenset:
    """Actions whose value is within ``TIE_TOL`` of the row extremum."""
    q_row = np.asarray(q_row, dtype=float)
    if mode == "argmax":
        ext = q_row.max()
    elif mode == "argmin":
        ext = q_row.min()
    else:
        raise ValueError(f"mode must be 'argmax' or 'argmin', got {mode!r}")
    return frozenset(int(a) for a in np.flatnonzero(np.abs(q_row - ext) <= TIE_TOL))


def boltzmann_policy(q_row, eta, flipped: bool = False) -> np.ndarray:
    """Action distribution proportional to ``exp(eta * q)``.

    With ``flipped`` the sign of eta is reversed, giving ``exp(-eta * q)``.
    Infinite eta gives the uniform distribution over the argmax set
    (effective +inf) or argmin set (effective -inf); eta = 0 is uniform.
    """
    eta = as_eta(eta)
    if flipped:
        eta = -eta
    q_row = np.asarray(q_row, dtype=float)
    n = q_row.shape[0]
    if eta == 0.0:
        return np.full(n, 1.0 / n)
    if math.isinf(eta):
        best = greedy_action_set(q_row, "argmax" if eta > 0 else "argmin")
        probs = np.zeros(n)
        probs[sorted(best)] = 1.0 / len(best)
        return probs
    z = eta * q_row
    w = np.exp(z - z.max())
    return w / w.sum()
