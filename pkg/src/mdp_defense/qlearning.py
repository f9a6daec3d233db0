"""Tabular Q-learning over a generated state space, plus an exact
value-iteration oracle used to check what the learner converges to.

Value semantics shared by the learner and the oracle: the future value of a
landing state is the maximum over its ATTACK column and the columns of the
defenses still feasible there. A state with no feasible attack therefore
keeps an ATTACK value of 0, which is what makes it "secure".
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .scenario import TrainConfig
from .statespace import StateSpace

__all__ = [
    "QTable",
    "RandomSource",
    "TrainConfig",
    "count_unupdated",
    "init_q_table",
    "q_update",
    "run_episode",
    "select_action",
    "train",
    "value_iteration_oracle",
]


class RandomSource:
    """Seeded stream of uniform draws (xoshiro256**, see ``_kernels``).

    The generator state is a 4-word uint64 array shared with the compiled
    training kernel, so Python-side and kernel-side draws continue the same
    stream. Per episode step the draw order is: explore draw, [random
    action], [outcome draw when an action has several outcomes], success
    draw.
    """

    ALGORITHM = "xoshiro256**/splitmix64-seeded/1"

    def __init__(self, seed: int):
        self.seed = seed
        self.state = _kernels.seed_state(seed)

    def uniform(self) -> float:
        return float(_kernels.uniform(self.state))

    def integer(self, n: int) -> int:
        return int(_kernels.integer(self.state, n))


@dataclass
class QTable:
    values: np.ndarray
    update_counts: np.ndarray
    actions: tuple[str, ...]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def row(self, state: int) -> np.ndarray:
        return self.values[state]

    def copy(self) -> QTable:
        return QTable(self.values.copy(), self.update_counts.copy(), self.actions)


def init_q_table(space: StateSpace) -> QTable:
    shape = (space.n_states, space.n_actions)
    return QTable(np.zeros(shape), np.zeros(shape, dtype=np.int64), tuple(space.actions))


def _argmax(row, candidates) -> int:
    # strict ">" keeps the lowest action index on ties
    best = candidates[0]
    best_v = row[best]
    for a in candidates[1:]:
        if row[a] > best_v:
            best, best_v = a, row[a]
    return best


def select_action(q: QTable, state: int, epsilon: float, rng: RandomSource, available=None) -> int:
    """Epsilon-greedy choice.

    Exploration draws uniformly from the whole action alphabet; exploitation
    takes the argmax over ``available`` (whole row when None), ties to the
    lowest action index.
    """
    n = q.values.shape[1]
    if rng.uniform() < epsilon:
        return rng.integer(n)
    row = q.values[state]
    return _argmax(row, range(n) if available is None else tuple(available))


def q_update(q_sa: float, reward: float, future_q: float, alpha: float, gamma: float) -> float:
    return (1.0 - alpha) * q_sa + alpha * (reward + gamma * future_q)


def _run(space: StateSpace, q: QTable, cfg: TrainConfig, rng: RandomSource, epochs: int) -> int:
    arr = space.arrays
    return int(_kernels.train_kernel(
        arr["ptr"], arr["target"], arr["prob"], arr["rate"], arr["r_ok"], arr["r_fail"],
        arr["aptr"], arr["aidx"], q.values, q.update_counts,
        epochs, float(cfg.epsilon), float(cfg.alpha), float(cfg.gamma), int(cfg.max_episode_steps), rng.state,
    ))


def run_episode(space: StateSpace, q: QTable, cfg: TrainConfig, rng: RandomSource) -> QTable:
    """Run one training episode from state 0, updating ``q`` in place.

    The episode ends when the chosen action has no successor. A failed
    transition keeps the agent where it is with the fail reward.
    """
    _run(space, q, cfg, rng, 1)
    return q


def train(space: StateSpace, cfg: TrainConfig) -> QTable:
    """Train a fresh table for ``cfg.epochs`` episodes seeded by ``cfg.seed``."""
    cfg.check()
    q = init_q_table(space)
    _run(space, q, cfg, RandomSource(cfg.seed), cfg.epochs)
    return q


def count_unupdated(q: QTable) -> int:
    return int(np.count_nonzero(q.update_counts == 0))


def value_iteration_oracle(
    space: StateSpace,
    gamma: float,
    tolerance: float = 1e-12,
    max_iterations: int = 100_000,
    residuals: list[float] | None = None,
) -> QTable:
    """Expected-value fixed point of the learner's update rule.

    Infeasible cells stay at 0. Iterates synchronous Bellman sweeps until
    the sup-norm change drops below ``tolerance``; per-sweep residuals are
    appended to ``residuals`` when given. ``update_counts`` of the result
    marks the cells the oracle defines (1) versus infeasible cells (0).
    """
    n, m = space.n_states, space.n_actions
    ts = list(space.iter_transitions())
    src = np.fromiter((t.source for t in ts), dtype=np.int64, count=len(ts))
    act = np.fromiter((t.action for t in ts), dtype=np.int64, count=len(ts))
    dst = np.fromiter((t.target for t in ts), dtype=np.int64, count=len(ts))
    prob = np.fromiter((t.probability for t in ts), dtype=float, count=len(ts))
    rate = np.fromiter((t.success_rate for t in ts), dtype=float, count=len(ts))
    r_ok = np.fromiter((t.success_reward for t in ts), dtype=float, count=len(ts))
    r_fail = np.fromiter((t.fail_reward for t in ts), dtype=float, count=len(ts))
    flat = src * m + act

    mask = np.zeros((n, m), dtype=bool)
    for i, cand in enumerate(space.available):
        mask[i, list(cand)] = True
    feasible = np.zeros(n * m, dtype=bool)
    feasible[flat] = True

    q = np.zeros(n * m)
    for _ in range(max_iterations):
        v = np.where(mask, q.reshape(n, m), -np.inf).max(axis=1)
        contrib = prob * (rate * (r_ok + gamma * v[dst]) + (1.0 - rate) * (r_fail + gamma * v[src]))
        new = np.bincount(flat, weights=contrib, minlength=n * m)
        residual = float(np.max(np.abs(new - q))) if new.size else 0.0
        q = new
        if residuals is not None:
            residuals.append(residual)
        if residual < tolerance:
            break
    else:
        raise RuntimeError(f"value iteration did not converge within {max_iterations} sweeps")
    return QTable(q.reshape(n, m), feasible.reshape(n, m).astype(np.int64), tuple(space.actions))
