"""Run experiment configs and presets, writing CSV outputs and a manifest.

Each (eta, seed) run owns one ``numpy.random.default_rng(seed)`` stream; the
order of draws within a step is documented in :mod:`softdmp.learner`.
"""

from __future__ import annotations

import csv
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .config import DUAL, ConfigError, ExperimentConfig, config_from_dict
from .env import build_env
from .learner import Simulator, SoftDmpAgent, SoftQAgent, run_episode
from .metrics import (RunSummary, aggregate_trials, fmt, write_aggregate_csv, write_run_csv,
                      write_summary_csv)
from .operators import format_eta, mellow_max
from .planner import soft_qvi, write_plan_csv, write_policy_csv

log = logging.getLogger(__name__)

OUTPUT_ENV_VAR = "SOFTDMP_OUTPUT_ROOT"


@dataclass
class RunOutcome:
    out_dir: Path
    files: list = field(default_factory=list)
    summaries: dict = field(default_factory=dict)
    agents: dict = field(default_factory=dict)


def default_output_root() -> Path:
    return Path(os.environ.get(OUTPUT_ENV_VAR, "results"))


def eta_tag(eta) -> str:
    return "eta_" + format_eta(eta)


def make_agent(cfg: ExperimentConfig, mdp, eta):
    n_s, n_a = mdp.n_states, mdp.n_actions
    if cfg.algorithm in DUAL:
        return SoftDmpAgent(
            n_s, n_a, cfg.eta_plus, cfg.eta_minus, cfg.alpha_plus, cfg.alpha_minus,
            cfg.gamma_plus, cfg.gamma_minus, weighting=cfg.weighting, mix_w=cfg.mix_w,
            separate=cfg.algorithm == "softdmp_sep", buffer_capacity=cfg.buffer_capacity,
            batch_size=cfg.batch_size, discriminator_flipped=cfg.discriminator_policy == "flipped")
    return SoftQAgent(n_s, n_a, eta, cfg.alpha, mdp.gamma, cfg.buffer_capacity,
                      cfg.batch_size if cfg.replay else 0)


def train(cfg: ExperimentConfig, mdp, eta, seed: int):
    """One seeded learning run; returns ``(records, agent)``."""
    rng = np.random.default_rng(seed)
    agent = make_agent(cfg, mdp, eta)
    sim = Simulator(mdp)
    records = [run_episode(sim, agent, rng, cfg.max_steps, ep) for ep in range(cfg.episodes)]
    return records, agent


def _train_job(args):
    cfg, mdp, eta, seed = args
    return train(cfg, mdp, eta, seed)


def resolve_mdp(cfg: ExperimentConfig):
    mdp = build_env(cfg.env)
    return mdp.with_gamma(cfg.gamma) if cfg.gamma is not None else mdp


def _write_curves(path, mdp, curves: dict) -> None:
    """Wide CSV: one row per state, one value column per curve label."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["state", "row", "col", "wall"] + list(curves))
        for s in range(mdp.n_states):
            row, col = mdp.cells[s] if mdp.cells else ("", "")
            w.writerow([s, row, col, int(mdp.walls[s])] + [fmt(v[s]) for v in curves.values()])


def _write_agent_values(path, mdp, agent) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if isinstance(agent, SoftDmpAgent):
            v_plus, v_minus = agent.values()
            w.writerow(["state", "v_plus", "v_minus"]
                       + [f"qp_{a}" for a in mdp.action_names] + [f"qm_{a}" for a in mdp.action_names])
            for s in range(mdp.n_states):
                w.writerow([s, fmt(v_plus[s]), fmt(v_minus[s])]
                           + [fmt(x) for x in agent.q_plus[s]] + [fmt(x) for x in agent.q_minus[s]])
        else:
            v = agent.value()
            w.writerow(["state", "v"] + [f"q_{a}" for a in mdp.action_names])
            for s in range(mdp.n_states):
                w.writerow([s, fmt(v[s])] + [fmt(x) for x in agent.q[s]])


def _run_qvi(cfg, mdp, out: Path, outcome: RunOutcome) -> None:
    curves = {}
    for eta in cfg.eta_list:
        res = soft_qvi(mdp, eta, cfg.tol, cfg.max_iter)
        tag = eta_tag(eta)
        for name, writer in ((f"values_{tag}.csv", write_plan_csv), (f"policy_{tag}.csv", write_policy_csv)):
            writer(out / name, res, mdp)
            outcome.files.append(out / name)
        curves[tag] = res.v
        outcome.summaries[tag] = res
    _write_curves(out / "curves.csv", mdp, curves)
    outcome.files.append(out / "curves.csv")


def _run_learning(cfg, mdp, out: Path, outcome: RunOutcome, workers: int) -> None:
    jobs = [(eta, seed) for eta in cfg.eta_list for seed in cfg.seeds]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_train_job, [(cfg, mdp, e, s) for e, s in jobs]))
    else:
        results = [train(cfg, mdp, e, s) for e, s in jobs]

    sweep = len(cfg.eta_list) > 1
    summary_rows, learned_curves = [], {}
    for (eta, seed), (records, agent) in zip(jobs, results):
        tag = eta_tag(eta) if sweep else cfg.name
        summary = RunSummary(records, cfg.smooth_window)
        outcome.summaries.setdefault(tag, []).append(summary)
        outcome.agents[(tag, seed)] = agent
        for name, write in ((f"run_{tag}_seed{seed}.csv", lambda p: write_run_csv(p, records)),
                            (f"values_{tag}_seed{seed}.csv", lambda p: _write_agent_values(p, mdp, agent))):
            write(out / name)
            outcome.files.append(out / name)
        row = {"run": tag, "seed": seed, "episodes": len(records),
               "avg_step_length": summary.avg_step_length, "collision_rate": summary.collision_rate,
               "collisions_per_episode": summary.collisions_per_episode, "goal_rate": summary.goal_rate,
               "mean_reward": float(summary.rewards.mean())}
        if cfg.algorithm == "softdmp_sep":
            row["n_plus"] = agent.buffers.d_plus.ingested
            row["n_minus"] = agent.buffers.d_minus.ingested
        summary_rows.append(row)
        if not isinstance(agent, SoftDmpAgent):
            learned_curves.setdefault(tag, []).append(agent.value())

    for tag, summaries in outcome.summaries.items():
        path = out / f"aggregate_{tag}.csv"
        write_aggregate_csv(path, aggregate_trials(summaries))
        outcome.files.append(path)
    write_summary_csv(out / "summary.csv", summary_rows)
    outcome.files.append(out / "summary.csv")
    if learned_curves:
        _write_curves(out / "curves.csv", mdp, {t: np.mean(v, axis=0) for t, v in learned_curves.items()})
        outcome.files.append(out / "curves.csv")
    if cfg.reference_qvi:
        ref = {eta_tag(e): soft_qvi(mdp, e, cfg.tol, cfg.max_iter).v for e in cfg.eta_list}
        _write_curves(out / "curves_qvi.csv", mdp, ref)
        outcome.files.append(out / "curves_qvi.csv")


def run_experiment(cfg: ExperimentConfig, out_dir=None, workers: int = 1) -> RunOutcome:
    """Execute every seed of ``cfg`` and write its artifacts under ``out_dir``.

    Raises ``planner.ConvergenceError`` if QVI fails to converge.
    """
    out = Path(out_dir) if out_dir is not None else default_output_root() / cfg.name
    out.mkdir(parents=True, exist_ok=True)
    (out / "manifest.json").write_text(cfg.to_json())
    outcome = RunOutcome(out_dir=out, files=[out / "manifest.json"])
    mdp = resolve_mdp(cfg)
    log.info("running %s (%s) -> %s", cfg.name, cfg.algorithm, out)
    if cfg.algorithm == "qvi":
        _run_qvi(cfg, mdp, out, outcome)
    else:
        _run_learning(cfg, mdp, out, outcome, workers)
    return outcome


# -- presets ------------------------------------------------------------------

def _preset_dir():
    return resources.files("softdmp.data").joinpath("presets")


def list_presets() -> dict:
    """Preset name -> description."""
    out = {}
    for f in sorted(_preset_dir().iterdir(), key=lambda p: p.name):
        if f.name.endswith(".json"):
            out[f.name[:-5]] = json.loads(f.read_text()).get("description", "")
    return out


def load_preset(name: str) -> dict:
    presets = list_presets()
    if name not in presets:
        raise ConfigError("preset", f"unknown preset {name!r}; available: {', '.join(presets)}")
    return json.loads(_preset_dir().joinpath(name + ".json").read_text())


def preset_configs(name: str, seeds=None, overrides: dict | None = None) -> list[ExperimentConfig]:
    doc = load_preset(name)
    configs = []
    for run in doc["runs"]:
        run = {**run, **(overrides or {})}
        if seeds:
            run["seeds"] = list(seeds)
        configs.append(config_from_dict(run))
    return configs


def run_preset(name: str, out_dir=None, seeds=None, overrides: dict | None = None,
               workers: int = 1) -> dict:
    """Run every config of a preset into ``out_dir/<run name>``; returns name -> outcome."""
    root = Path(out_dir) if out_dir is not None else default_output_root() / name
    return {cfg.name: run_experiment(cfg, root / cfg.name, workers)
            for cfg in preset_configs(name, seeds, overrides)}
