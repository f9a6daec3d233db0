from dataclasses import replace

import numpy as np
import pytest

from mdp_defense import (
    RandomSource,
    TrainConfig,
    count_unupdated,
    generate_state_space,
    init_q_table,
    q_update,
    run_episode,
    select_action,
    train,
    value_iteration_oracle,
)
from mdp_defense.scenario import RewardParams

M64 = (1 << 64) - 1


class _RefXoshiro:
    """Plain-integer xoshiro256** with splitmix64 seeding, for cross-checking."""

    def __init__(self, seed):
        x, self.s = seed, []
        for _ in range(4):
            x = (x + 0x9E3779B97F4A7C15) & M64
            z = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & M64
            z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & M64
            self.s.append(z ^ (z >> 31))

    def next(self):
        s = self.s
        rotl = lambda v, k: ((v << k) | (v >> (64 - k))) & M64
        result = (rotl((s[1] * 5) & M64, 7) * 9) & M64
        t = (s[1] << 17) & M64
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = rotl(s[3], 45)
        return result


@pytest.mark.parametrize("seed", [0, 1, 12345, 2**63 + 7])
def test_generator_matches_reference(seed):
    ref, rng = _RefXoshiro(seed), RandomSource(seed)
    for _ in range(200):
        assert rng.uniform() == (ref.next() >> 11) * 2.0**-53


def test_q_update_examples():
    assert q_update(0.0, -2.1, 0.0, 0.1, 0.9) == pytest.approx(-0.21)
    assert q_update(-0.21, -2.1, 0.0, 0.1, 0.9) == pytest.approx(-0.399)
    assert q_update(-3.0, -1.0, -2.0, 1.0, 0.9) == pytest.approx(-2.8)


class _Fixed:
    def __init__(self, *draws):
        self.draws = list(draws)

    def uniform(self):
        return self.draws.pop(0)

    def integer(self, n):
        return int(self.draws.pop(0) * n)


def test_select_action_greedy(space8):
    q = init_q_table(space8)
    q.values[0] = [-15.6, -6.19, -7.89, -2.1, -10.69, -5.39, -6.89]
    assert q.actions[select_action(q, 0, 0.0, _Fixed(0.5))] == "D3"
    assert select_action(init_q_table(space8), 0, 0.0, _Fixed(0.5)) == 0  # ties: lowest index


def test_select_action_explores_uniformly(space8):
    q = init_q_table(space8)
    rng = RandomSource(3)
    n, k = 10_000, space8.n_actions
    hits = np.bincount([select_action(q, 0, 1.0, rng) for _ in range(n)], minlength=k)
    sigma = np.sqrt(n * (1 / k) * (1 - 1 / k))
    assert np.all(np.abs(hits - n / k) < 3 * sigma)


def test_single_greedy_episode_on_tiny(space_tiny):
    q = init_q_table(space_tiny)
    run_episode(space_tiny, q, TrainConfig(epsilon=0.0), RandomSource(0))
    assert q.values[0, 0] == pytest.approx(-0.5)
    assert q.update_counts.sum() == 1


def test_failing_actions_stay_in_start_row(tiny1):
    stuck = replace(tiny1, rewards=RewardParams(attack_success_rate=0.0, defense_success_rate=0.0))
    space = generate_state_space(stuck)
    q = train(space, TrainConfig(epochs=3, max_episode_steps=50))
    assert q.update_counts[0].sum() > 0
    assert q.update_counts[1:].sum() == 0


def test_tiny_converges_to_oracle(space_tiny):
    oracle = value_iteration_oracle(space_tiny, 0.9)
    q = train(space_tiny, TrainConfig(epochs=20_000))
    assert q.values[0] == pytest.approx([-5.0, -2.0, -5.0])
    np.testing.assert_allclose(q.values, oracle.values, atol=0.01)


@pytest.mark.parametrize("bad", [dict(epochs=0), dict(gamma=1.0), dict(alpha=0.0), dict(epsilon=1.5)])
def test_bad_config_rejected(space_tiny, bad):
    with pytest.raises(ValueError):
        train(space_tiny, TrainConfig(**bad))


def test_count_unupdated(space_tiny):
    q = init_q_table(space_tiny)
    assert count_unupdated(q) == q.values.size
    q.update_counts[0, 1] = 4
    assert count_unupdated(q) == q.values.size - 1


def test_same_seed_same_table(space8):
    a = train(space8, TrainConfig(epochs=500, seed=9))
    b = train(space8, TrainConfig(epochs=500, seed=9))
    c = train(space8, TrainConfig(epochs=500, seed=10))
    assert np.array_equal(a.values, b.values) and np.array_equal(a.update_counts, b.update_counts)
    assert not np.array_equal(a.values, c.values)


def test_values_nonpositive_and_untouched_cells_zero(space8_nopath):
    q = train(space8_nopath, TrainConfig(epochs=2000, seed=4))
    assert np.all(q.values <= 0)
    assert np.all(q.values[q.update_counts == 0] == 0)


def test_oracle_fixed_point_tiny(space_tiny):
    q = value_iteration_oracle(space_tiny, 0.9)
    assert q.values[0] == pytest.approx([-5.0, -2.0, -5.0], abs=1e-12)


def test_oracle_contracts(space8_nopath):
    res = []
    value_iteration_oracle(space8_nopath, 0.9, residuals=res)
    pairs = [(a, b) for a, b in zip(res, res[1:]) if a > 1e-12]
    assert all(b <= 0.9 * a + 1e-12 for a, b in pairs)


def test_tiny_discount_gives_one_step_rewards(space8):
    q = value_iteration_oracle(space8, 1e-9)
    for t in space8.iter_transitions():
        assert q.values[t.source, t.action] == pytest.approx(t.success_reward, abs=1e-6)
