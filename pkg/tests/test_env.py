import json

import numpy as np
import pytest

from softdmp.env import (CHAIN_ACTIONS, GRID_ACTIONS, ChainSpec, GridSpec, Mdp, build_chain,
                         build_env, build_gridworld, builtin_envs, bump_mask, decompose_reward,
                         load_env_doc, spec_from_dict)

UP, DOWN, LEFT, RIGHT, STOP = range(5)


def next_state(mdp, s, a):
    return int(np.flatnonzero(mdp.transition[s, a])[0])


class TestGrid:
    def test_umaze_shape(self, umaze):
        assert umaze.n_states == 81
        assert umaze.n_actions == 5
        assert umaze.action_names == GRID_ACTIONS
        assert umaze.walls.sum() == 7

    def test_umaze_rewards(self, umaze):
        assert set(np.unique(umaze.reward)) == {-0.1, 0.0}

    def test_umaze_layout(self, umaze):
        start = int(np.flatnonzero(umaze.initial_dist)[0])
        goal = int(np.flatnonzero(umaze.absorbing)[0])
        assert umaze.cells[start] == (4, 3)
        assert umaze.cells[goal] == (4, 5)

    def test_single_cell(self):
        m = build_gridworld(GridSpec(1, 1, (0, 0), collision_reward=0.0))
        assert np.all(m.transition[0, :, 0] == 1)
        assert np.all(m.reward == 0)

    def test_free_move(self):
        m = build_gridworld(GridSpec(3, 3, (1, 1)))
        assert m.cells[next_state(m, 4, UP)] == (0, 1)
        assert m.reward[4, UP].sum() == 0

    def test_boundary_and_wall_bumps(self):
        m = build_gridworld(GridSpec(3, 3, (0, 0), wall_cells={(1, 0)}, collision_reward=-0.1))
        assert next_state(m, 0, UP) == 0 and m.reward[0, UP, 0] == -0.1
        assert next_state(m, 0, DOWN) == 0 and m.reward[0, DOWN, 0] == -0.1
        assert next_state(m, 0, STOP) == 0 and m.reward[0, STOP, 0] == 0

    def test_goal_absorbing_with_entry_reward(self):
        m = build_gridworld(GridSpec.from_ascii(["S.G"], goal_reward=5.0, collision_reward=-0.5))
        assert m.absorbing.tolist() == [False, False, True]
        assert m.reward[1, RIGHT, 2] == 5.0
        assert np.all(m.transition[2, :, 2] == 1) and np.all(m.reward[2] == 0)

    def test_deterministic(self, umaze):
        assert np.all(np.sort(umaze.transition, axis=-1)[..., -1] == 1.0)
        assert np.all((umaze.transition > 0).sum(-1) == 1)

    @pytest.mark.parametrize("rows", [["S#G", ".."], ["#..", "..."]])
    def test_invalid_maps(self, rows):
        with pytest.raises(ValueError):
            build_gridworld(GridSpec.from_ascii(rows))

    def test_wall_start_or_goal_rejected(self):
        with pytest.raises(ValueError, match="start"):
            build_gridworld(GridSpec(3, 3, (0, 0), wall_cells={(0, 0)}))
        with pytest.raises(ValueError, match="goal"):
            build_gridworld(GridSpec(3, 3, (0, 0), wall_cells={(2, 2)}, goal_cell=(2, 2)))

    def test_out_of_range(self):
        with pytest.raises(ValueError, match="outside"):
            build_gridworld(GridSpec(3, 3, (0, 5)))


class TestChain:
    def test_entry_timing(self):
        m = build_chain(ChainSpec(21, -0.1, edge_reward_mode="entry"))
        assert (m.n_states, m.n_actions) == (21, 3)
        er = m.expected_reward
        dest = m.transition.argmax(-1)
        assert np.all(er[np.isin(dest, [0, 20])] == -0.1)
        assert np.all(er[~np.isin(dest, [0, 20])] == 0)

    def test_collision_timing(self, chain21):
        er = chain21.expected_reward
        assert er[0, 0] == -0.1 and er[20, 1] == -0.1
        er_rest = er.copy()
        er_rest[0, 0] = er_rest[20, 1] = 0
        assert np.all(er_rest == 0)

    @pytest.mark.parametrize("mode", ["entry", "collision"])
    def test_smallest_chain(self, mode):
        m = build_chain(ChainSpec(3, -0.1, edge_reward_mode=mode))
        er = m.expected_reward
        assert er[1].tolist() == [0, 0, 0] if mode == "collision" else er[1].tolist() == [-0.1, -0.1, 0]
        assert er[0].min() == -0.1 and er[2].min() == -0.1

    def test_interior_stop(self, chain21):
        stop = CHAIN_ACTIONS.index("stop")
        assert chain21.transition[10, stop, 10] == 1.0 and chain21.reward[10, stop, 10] == 0.0

    def test_no_absorbing(self, chain21):
        assert not chain21.absorbing.any()

    def test_edges_clamp(self, chain21):
        assert chain21.transition[0, 0, 0] == 1 and chain21.transition[20, 1, 20] == 1

    def test_too_short(self):
        with pytest.raises(ValueError):
            build_chain(ChainSpec(2))


class TestDecompose:
    def test_nav_maze(self, nav_umaze):
        plus, minus = decompose_reward(nav_umaze)
        assert set(np.unique(plus.reward)) == {0.0, 5.0}
        assert set(np.unique(minus.reward)) == {-0.5, 0.0}
        assert np.array_equal(plus.reward + minus.reward, nav_umaze.reward)
        assert np.array_equal(plus.transition, nav_umaze.transition)

    def test_all_zero(self):
        m = build_gridworld(GridSpec(2, 2, (0, 0), collision_reward=0.0))
        plus, minus = decompose_reward(m)
        assert not plus.reward.any() and not minus.reward.any()

    def test_sign_pure(self, umaze):
        plus, minus = decompose_reward(umaze)
        assert not plus.reward.any()
        assert np.array_equal(minus.reward, umaze.reward)


class TestMdpValidation:
    def test_rows_must_be_stochastic(self):
        P = np.zeros((2, 1, 2))
        P[0, 0, 0] = 0.5
        P[1, 0, 1] = 1
        with pytest.raises(ValueError, match="probability"):
            Mdp(P, np.zeros_like(P), [1, 0], [False, False], 0.9)

    def test_bad_discount(self):
        P = np.ones((1, 1, 1))
        with pytest.raises(ValueError, match="discount"):
            Mdp(P, np.zeros_like(P), [1], [False], 1.0)

    def test_absorbing_must_self_loop(self):
        P = np.zeros((2, 1, 2))
        P[:, 0, 1] = 1
        with pytest.raises(ValueError, match="absorbing"):
            Mdp(P, np.zeros_like(P), [1, 0], [True, False], 0.9)

    def test_immutable(self, umaze):
        with pytest.raises(ValueError):
            umaze.reward[0, 0, 0] = 1.0


class TestSpecs:
    def test_builtins(self):
        assert {"umaze", "chain21", "nav_umaze", "nav_tmaze", "nav_threeroom"} <= set(builtin_envs())

    @pytest.mark.parametrize("name", ["umaze", "chain21", "nav_umaze", "nav_tmaze", "nav_threeroom"])
    def test_builtin_envs_valid(self, name):
        m = build_env(load_env_doc(name))
        assert np.allclose(m.transition.sum(-1), 1, atol=1e-12)
        assert abs(m.initial_dist.sum() - 1) < 1e-12

    @pytest.mark.parametrize("name", ["nav_umaze", "nav_tmaze", "nav_threeroom"])
    def test_nav_rewards(self, name):
        m = build_env(load_env_doc(name))
        assert set(np.unique(m.reward)) == {-0.5, 0.0, 5.0}
        assert m.absorbing.sum() == 1

    def test_json_file(self, tmp_path):
        path = tmp_path / "env.json"
        path.write_text(json.dumps({"type": "grid", "map": ["S.", ".G"], "collision_reward": -1}))
        m = build_env(load_env_doc(path))
        assert m.n_states == 4 and bump_mask(m).sum() == 6

    def test_unknown_type(self):
        with pytest.raises(ValueError, match="type"):
            spec_from_dict({"type": "torus"})
