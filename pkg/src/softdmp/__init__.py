"""Soft reward-punishment reinforcement learning on tabular MDPs."""

from .env import (ChainSpec, GridSpec, Mdp, build_chain, build_env, build_gridworld,
                  decompose_reward)
from .learner import (DualBuffers, Experience, ReplayBuffer, SoftDmpAgent, SoftQAgent,
                      discriminator, fuse_policies, hardmax_weight, route_experience,
                      softdmp_step, sql_behavior, sql_update)
from .metrics import EpisodeRecord, RunSummary, aggregate_trials, smooth
from .operators import as_eta, boltzmann_policy, greedy_action_set, mellow_max
from .planner import ConvergenceError, PlanResult, derive_policies, soft_qvi

__version__ = "0.1.0"
