"""Model-free tabular agents: soft Q-learning and softDMP.

softDMP keeps a reward table ``q_plus`` (learned with ``eta_plus >= 0``) and a
punishment table ``q_minus`` (learned with ``eta_minus <= 0``).  It acts with a
mixture of the reward-seeking Boltzmann policy and the *flipped* punishment
policy ``exp(-eta_minus * q_minus)``, which avoids pain.  With separate
buffers, each experience goes to the punishment buffer with probability
``pi_minus(a|s) / (pi_minus(a|s) + pi_plus(a|s))``.

Random draws per environment step, in order:

1. one uniform for the action,
2. one uniform for the transition (only if the row is stochastic),
3. one uniform for buffer routing (separate-buffer agents only),
4. ``batch`` integers for the minibatch (shared buffer, or the plus buffer),
5. ``batch`` integers for the minus-buffer minibatch (separate buffers).
"""

from __future__ import annotations

import json
import math
from typing import NamedTuple

import numpy as np

from .env import Mdp
from .metrics import EpisodeRecord
from .operators import as_eta, boltzmann_policy, format_eta, mellow_max


class Experience(NamedTuple):
    s: int
    a: int
    r: float
    s_next: int
    terminal: bool


class ReplayBuffer:
    """Bounded FIFO of experiences; the oldest entry is evicted first.

    ``capacity=None`` means unbounded.  Storage is columnar so minibatches
    come out as arrays.
    """

    _FIELDS = (("s", np.int64), ("a", np.int64), ("r", float), ("s_next", np.int64), ("terminal", bool))

    def __init__(self, capacity: int | None = 10_000):
        if capacity is not None and capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        size = capacity if capacity is not None else 1024
        self._cols = {name: np.zeros(size, dtype=dt) for name, dt in self._FIELDS}
        self._start = 0
        self._len = 0
        self._cursor = 0
        self.ingested = 0
        self.evicted = 0

    def __len__(self) -> int:
        return self._len

    def _grow(self):
        order = self._order()
        for name in self._cols:
            col = self._cols[name][order]
            self._cols[name] = np.concatenate([col, np.zeros_like(col)])
        self._start = 0

    def _order(self) -> np.ndarray:
        size = len(self._cols["s"])
        return (self._start + np.arange(self._len)) % size

    def push(self, exp: Experience) -> None:
        size = len(self._cols["s"])
        if self._len == size:
            if self.capacity is None:
                self._grow()
                size = len(self._cols["s"])
            else:
                self._start = (self._start + 1) % size
                self._len -= 1
                self.evicted += 1
                self._cursor = max(self._cursor - 1, 0)
        i = (self._start + self._len) % size
        for name, value in zip(self._cols, exp):
            self._cols[name][i] = value
        self._len += 1
        self.ingested += 1

    def sample(self, batch: int, rng: np.random.Generator, order: str = "uniform") -> dict:
        """Minibatch as a dict of column arrays.

        ``uniform`` draws ``batch`` indices with replacement; ``fifo`` walks
        the stored entries oldest-first, wrapping around, and draws nothing.
        """
        if self._len == 0:
            raise ValueError("cannot sample from an empty buffer")
        if order == "uniform":
            pos = rng.integers(0, self._len, size=batch)
        elif order == "fifo":
            pos = (self._cursor + np.arange(batch)) % self._len
            self._cursor = int((self._cursor + batch) % self._len)
        else:
            raise ValueError(f"unknown sampling order {order!r}")
        idx = (self._start + pos) % len(self._cols["s"])
        return {name: col[idx] for name, col in self._cols.items()}

    def entries(self) -> list[Experience]:
        order = self._order()
        cols = [self._cols[name][order].tolist() for name, _ in self._FIELDS]
        return [Experience(*row) for row in zip(*cols)]

    def to_dict(self) -> dict:
        return {"capacity": self.capacity, "entries": [list(e) for e in self.entries()],
                "cursor": self._cursor, "ingested": self.ingested, "evicted": self.evicted}

    @classmethod
    def from_dict(cls, doc: dict) -> "ReplayBuffer":
        buf = cls(doc["capacity"])
        for e in doc["entries"]:
            buf.push(Experience(int(e[0]), int(e[1]), float(e[2]), int(e[3]), bool(e[4])))
        buf._cursor, buf.ingested, buf.evicted = doc["cursor"], doc["ingested"], doc["evicted"]
        return buf


class DualBuffers:
    """Positive and negative replay buffers; each experience lands in exactly one."""

    def __init__(self, capacity: int | None = 10_000):
        self.d_plus = ReplayBuffer(capacity)
        self.d_minus = ReplayBuffer(capacity)

    def __len__(self) -> int:
        return len(self.d_plus) + len(self.d_minus)

    def to_dict(self) -> dict:
        return {"d_plus": self.d_plus.to_dict(), "d_minus": self.d_minus.to_dict()}

    @classmethod
    def from_dict(cls, doc: dict) -> "DualBuffers":
        out = cls.__new__(cls)
        out.d_plus = ReplayBuffer.from_dict(doc["d_plus"])
        out.d_minus = ReplayBuffer.from_dict(doc["d_minus"])
        return out


# -- value updates ------------------------------------------------------------

def sql_update(q: np.ndarray, exp: Experience, alpha: float, gamma: float, eta) -> np.ndarray:
    """Tabular soft Q-learning step, in place: ``q(s,a) <- (1-a) q(s,a) + a (r + g MM_eta q(s',.))``.

    Terminal transitions bootstrap nothing.
    """
    target = exp.r if exp.terminal else exp.r + gamma * mellow_max(q[exp.s_next], eta)
    q[exp.s, exp.a] = (1 - alpha) * q[exp.s, exp.a] + alpha * target
    return q


def sql_update_batch(q: np.ndarray, batch: dict, alpha: float, gamma: float, eta,
                     reward: np.ndarray | None = None) -> np.ndarray:
    """Apply ``sql_update`` for every entry of a minibatch, in place.

    All bootstrap targets are taken from the table as it stood before the
    batch; the blends are then applied in batch order, so repeated (s, a)
    pairs compound.  For a batch of one this is exactly ``sql_update``.
    """
    r = batch["r"] if reward is None else reward
    boot = mellow_max(q[batch["s_next"]], eta)
    targets = np.where(batch["terminal"], r, r + gamma * boot)
    s, a = batch["s"], batch["a"]
    flat = s * q.shape[1] + a
    if len(np.unique(flat)) == len(flat):
        q[s, a] = (1 - alpha) * q[s, a] + alpha * targets
        return q
    for si, ai, t in zip(s.tolist(), a.tolist(), targets.tolist()):
        q[si, ai] = (1 - alpha) * q[si, ai] + alpha * t
    return q


# -- policies -----------------------------------------------------------------

def sql_behavior(q: np.ndarray, s: int, eta) -> np.ndarray:
    """Behaviour of a soft Q agent: flipped Boltzmann when eta < 0."""
    eta = as_eta(eta)
    return boltzmann_policy(q[s], eta, flipped=eta < 0)


def fuse_policies(pi_plus, neg_pi_minus, w: float) -> np.ndarray:
    if not 0.0 <= w <= 1.0:
        raise ValueError("mixing weight must lie in [0, 1]")
    return w * np.asarray(pi_plus, dtype=float) + (1 - w) * np.asarray(neg_pi_minus, dtype=float)


def hardmax_weight(v_plus: float, v_minus: float) -> float:
    """1 if the reward module's value dominates the punishment magnitude, else 0."""
    return 1.0 if v_plus >= abs(v_minus) else 0.0


def discriminator(pi_plus, pi_minus, a: int) -> float:
    """Probability that action ``a`` came from the pain-seeking policy."""
    pm, pp = float(pi_minus[a]), float(pi_plus[a])
    if pm + pp == 0.0:
        return 0.5
    return pm / (pm + pp)


def route_experience(exp: Experience, d: float, buffers: DualBuffers, rng: np.random.Generator) -> str:
    """Send ``exp`` to ``d_minus`` with probability ``d``; consumes one uniform."""
    if not 0.0 <= d <= 1.0:
        raise ValueError("routing probability must lie in [0, 1]")
    if rng.random() < d:
        buffers.d_minus.push(exp)
        return "minus"
    buffers.d_plus.push(exp)
    return "plus"


def sample_action(probs: np.ndarray, rng: np.random.Generator) -> int:
    """Inverse-CDF draw; consumes exactly one uniform."""
    u = rng.random()
    a = int(np.searchsorted(np.cumsum(probs), u, side="right"))
    if a >= len(probs):
        # cumsum rounded below u; fall back to the last action with mass
        a = int(np.flatnonzero(probs)[-1])
    return a


# -- agents -------------------------------------------------------------------

class SoftQAgent:
    """Soft Q-learning with a single table, online or from a replay buffer.

    ``eta=+inf`` is ordinary Q-learning; negative eta agents act with the
    flipped policy.
    """

    kind = "sql"

    def __init__(self, n_states: int, n_actions: int, eta, alpha: float, gamma: float,
                 buffer_capacity: int | None = None, batch_size: int = 0):
        if not 0.0 < alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")
        self.q = np.zeros((n_states, n_actions))
        self.eta = as_eta(eta)
        self.alpha = float(alpha)
        self.gamma = float(gamma)
        self.batch_size = int(batch_size)
        self.buffer = ReplayBuffer(buffer_capacity) if self.batch_size > 0 else None

    def policy(self, s: int) -> np.ndarray:
        return sql_behavior(self.q, s, self.eta)

    def act(self, s: int, rng: np.random.Generator) -> int:
        return sample_action(self.policy(s), rng)

    def observe(self, exp: Experience, rng: np.random.Generator) -> None:
        if self.buffer is None:
            sql_update(self.q, exp, self.alpha, self.gamma, self.eta)
            return
        self.buffer.push(exp)
        sql_update_batch(self.q, self.buffer.sample(self.batch_size, rng), self.alpha, self.gamma, self.eta)

    def value(self) -> np.ndarray:
        return mellow_max(self.q, self.eta)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "q": self.q.tolist(), "eta": format_eta(self.eta),
                "alpha": self.alpha, "gamma": self.gamma, "batch_size": self.batch_size,
                "buffer": self.buffer.to_dict() if self.buffer is not None else None}

    @classmethod
    def from_dict(cls, doc: dict) -> "SoftQAgent":
        q = np.array(doc["q"], dtype=float)
        agent = cls(q.shape[0], q.shape[1], doc["eta"], doc["alpha"], doc["gamma"])
        agent.q = q
        agent.batch_size = doc["batch_size"]
        agent.buffer = ReplayBuffer.from_dict(doc["buffer"]) if doc["buffer"] is not None else None
        return agent


class SoftDmpAgent:
    """Reward/punishment agent with two soft Q tables.

    ``separate=True`` routes experience through the discriminator into two
    buffers (softDMP-sep); otherwise both modules learn from one shared buffer
    (softDMP-one).  ``weighting`` is ``"hardmax"`` (state-wise choice between
    the two sub-policies) or ``"fixed_w"`` with mixing weight ``mix_w``.
    """

    kind = "softdmp"

    def __init__(self, n_states: int, n_actions: int, eta_plus=math.inf, eta_minus=-math.inf,
                 alpha_plus: float = 0.025, alpha_minus: float = 0.001,
                 gamma_plus: float = 0.99, gamma_minus: float = 0.9,
                 weighting: str = "hardmax", mix_w: float = 0.5, separate: bool = False,
                 buffer_capacity: int | None = 10_000, batch_size: int = 32,
                 discriminator_flipped: bool = False):
        self.eta_plus = as_eta(eta_plus)
        self.eta_minus = as_eta(eta_minus)
        if self.eta_plus < 0:
            raise ValueError("eta_plus must be >= 0")
        if self.eta_minus > 0:
            raise ValueError("eta_minus must be <= 0")
        if weighting not in ("hardmax", "fixed_w"):
            raise ValueError(f"weighting must be 'hardmax' or 'fixed_w', got {weighting!r}")
        if not 0.0 <= mix_w <= 1.0:
            raise ValueError("mix_w must lie in [0, 1]")
        for name, alpha in (("alpha_plus", alpha_plus), ("alpha_minus", alpha_minus)):
            if not 0.0 < alpha <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1]")
        self.q_plus = np.zeros((n_states, n_actions))
        self.q_minus = np.zeros((n_states, n_actions))
        self.alpha_plus, self.alpha_minus = float(alpha_plus), float(alpha_minus)
        self.gamma_plus, self.gamma_minus = float(gamma_plus), float(gamma_minus)
        self.weighting = weighting
        self.mix_w = float(mix_w)
        self.separate = bool(separate)
        self.batch_size = int(batch_size)
        self.discriminator_flipped = bool(discriminator_flipped)
        self.buffers = DualBuffers(buffer_capacity) if separate else ReplayBuffer(buffer_capacity)

    def sub_policies(self, s: int):
        """``(pi_plus, pi_minus, neg_pi_minus)`` at state ``s``."""
        pi_plus = boltzmann_policy(self.q_plus[s], self.eta_plus)
        pi_minus = boltzmann_policy(self.q_minus[s], self.eta_minus)
        neg_pi_minus = boltzmann_policy(self.q_minus[s], self.eta_minus, flipped=True)
        return pi_plus, pi_minus, neg_pi_minus

    def weight(self, s: int) -> float:
        if self.weighting == "fixed_w":
            return self.mix_w
        return hardmax_weight(mellow_max(self.q_plus[s], self.eta_plus),
                              mellow_max(self.q_minus[s], self.eta_minus))

    def policy(self, s: int) -> np.ndarray:
        w = self.weight(s)
        if w == 1.0:
            return boltzmann_policy(self.q_plus[s], self.eta_plus)
        if w == 0.0:
            return boltzmann_policy(self.q_minus[s], self.eta_minus, flipped=True)
        pi_plus, _, neg_pi_minus = self.sub_policies(s)
        return fuse_policies(pi_plus, neg_pi_minus, w)

    def act(self, s: int, rng: np.random.Generator) -> int:
        return sample_action(self.policy(s), rng)

    def discriminate(self, exp: Experience) -> float:
        pi_plus = boltzmann_policy(self.q_plus[exp.s], self.eta_plus)
        pi_minus = boltzmann_policy(self.q_minus[exp.s], self.eta_minus, flipped=self.discriminator_flipped)
        return discriminator(pi_plus, pi_minus, exp.a)

    def observe(self, exp: Experience, rng: np.random.Generator) -> None:
        if self.separate:
            route_experience(exp, self.discriminate(exp), self.buffers, rng)
        else:
            self.buffers.push(exp)
        softdmp_step(self, self.buffers, self.batch_size, rng)

    def values(self):
        return mellow_max(self.q_plus, self.eta_plus), mellow_max(self.q_minus, self.eta_minus)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "q_plus": self.q_plus.tolist(), "q_minus": self.q_minus.tolist(),
                "eta_plus": format_eta(self.eta_plus), "eta_minus": format_eta(self.eta_minus),
                "alpha_plus": self.alpha_plus, "alpha_minus": self.alpha_minus,
                "gamma_plus": self.gamma_plus, "gamma_minus": self.gamma_minus,
                "weighting": self.weighting, "mix_w": self.mix_w, "separate": self.separate,
                "batch_size": self.batch_size, "discriminator_flipped": self.discriminator_flipped,
                "buffers": self.buffers.to_dict()}

    @classmethod
    def from_dict(cls, doc: dict) -> "SoftDmpAgent":
        qp = np.array(doc["q_plus"], dtype=float)
        kwargs = {k: doc[k] for k in ("eta_plus", "eta_minus", "alpha_plus", "alpha_minus",
                                      "gamma_plus", "gamma_minus", "weighting", "mix_w", "separate",
                                      "batch_size", "discriminator_flipped")}
        agent = cls(qp.shape[0], qp.shape[1], **kwargs)
        agent.q_plus = qp
        agent.q_minus = np.array(doc["q_minus"], dtype=float)
        buffers = DualBuffers if agent.separate else ReplayBuffer
        agent.buffers = buffers.from_dict(doc["buffers"])
        return agent


def softdmp_step(agent: SoftDmpAgent, buffers, batch: int, rng: np.random.Generator,
                 order: str = "uniform") -> SoftDmpAgent:
    """One replay update of both modules.

    ``buffers`` is either a ``DualBuffers`` (each module samples its own
    buffer) or a single shared ``ReplayBuffer`` (one minibatch feeds both).
    The reward module sees ``max(r, 0)``, the punishment module ``min(r, 0)``.
    A module whose buffer is empty skips the step.
    """
    if isinstance(buffers, ReplayBuffer):
        if len(buffers) == 0:
            return agent
        plus_batch = minus_batch = buffers.sample(batch, rng, order)
    else:
        plus_batch = buffers.d_plus.sample(batch, rng, order) if len(buffers.d_plus) else None
        minus_batch = buffers.d_minus.sample(batch, rng, order) if len(buffers.d_minus) else None
    if plus_batch is not None:
        sql_update_batch(agent.q_plus, plus_batch, agent.alpha_plus, agent.gamma_plus, agent.eta_plus,
                         reward=np.maximum(plus_batch["r"], 0.0))
    if minus_batch is not None:
        sql_update_batch(agent.q_minus, minus_batch, agent.alpha_minus, agent.gamma_minus, agent.eta_minus,
                         reward=np.minimum(minus_batch["r"], 0.0))
    return agent


# -- environment interaction --------------------------------------------------

class Simulator:
    """Samples episodes from an ``Mdp``; deterministic rows consume no randomness."""

    def __init__(self, mdp: Mdp):
        self.mdp = mdp
        det = mdp.deterministic_tables()
        self._next, self._rew = (det[0].tolist(), det[1].tolist()) if det is not None else (None, None)
        self._absorbing = mdp.absorbing.tolist()
        p0 = mdp.initial_dist
        self._start = int(p0.argmax()) if p0.max() == 1.0 else None

    def reset(self, rng: np.random.Generator) -> int:
        if self._start is not None:
            return self._start
        return sample_action(self.mdp.initial_dist, rng)

    def step(self, s: int, a: int, rng: np.random.Generator):
        if self._next is not None:
            s_next, r = self._next[s][a], self._rew[s][a]
        else:
            s_next = sample_action(self.mdp.transition[s, a], rng)
            r = float(self.mdp.reward[s, a, s_next])
        return s_next, r, self._absorbing[s_next]


def run_episode(sim: Simulator, agent, rng: np.random.Generator, max_steps: int,
                episode: int = 0) -> EpisodeRecord:
    """Act and learn until an absorbing state or ``max_steps`` transitions."""
    s = sim.reset(rng)
    total, collisions, steps, done = 0.0, 0, 0, False
    while steps < max_steps and not done:
        a = agent.act(s, rng)
        s_next, r, done = sim.step(s, a, rng)
        agent.observe(Experience(s, a, r, s_next, done), rng)
        total += r
        collisions += r < 0
        steps += 1
        s = s_next
    return EpisodeRecord(episode, steps, total, collisions, done)


# -- checkpoints --------------------------------------------------------------

def agent_from_dict(doc: dict):
    return {"sql": SoftQAgent, "softdmp": SoftDmpAgent}[doc["kind"]].from_dict(doc)


def save_checkpoint(path, agent, rng: np.random.Generator, step: int, episode: int = 0) -> None:
    """JSON snapshot sufficient to resume a run bit-exactly."""
    doc = {"agent": agent.to_dict(), "rng": rng.bit_generator.state, "step": step, "episode": episode}
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_checkpoint(path):
    """Returns ``(agent, rng, step, episode)``."""
    with open(path) as fh:
        doc = json.load(fh)
    state = doc["rng"]
    rng = np.random.Generator(getattr(np.random, state["bit_generator"])())
    rng.bit_generator.state = state
    return agent_from_dict(doc["agent"]), rng, doc["step"], doc["episode"]
