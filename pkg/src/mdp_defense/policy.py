"""Read a defense plan out of a trained Q-table and score it against doing
nothing."""

from __future__ import annotations

from dataclasses import dataclass, field

from .qlearning import QTable, _argmax
from .statespace import ATTACK_INDEX, StateSpace


class PlanError(RuntimeError):
    pass


@dataclass
class DefensePlan:
    steps: list[str]
    per_step_reward: list[float]
    terminal_state: int
    start: int = 0
    states: list[int] = field(default_factory=list)

    @property
    def total_undiscounted(self) -> float:
        return float(sum(self.per_step_reward))

    def total_discounted(self, gamma: float) -> float:
        return float(sum(r * gamma**k for k, r in enumerate(self.per_step_reward)))

    def __str__(self) -> str:
        return "-".join(self.steps) if self.steps else "(no defense needed)"


def best_action(q: QTable, state: int, available=None) -> int:
    """Argmax of the state's row over ``available`` (whole row when None);
    ties go to the lowest action index."""
    row = q.values[state]
    return _argmax(row, range(len(row)) if available is None else tuple(available))


def extract_defense_sequence(space: StateSpace, q: QTable, start: int = 0) -> DefensePlan:
    """Follow the greedy defense from ``start`` until ATTACK is at least as
    valuable as every feasible defense, or no defense is left."""
    steps: list[str] = []
    rewards: list[float] = []
    visited = {space.packed[start]}
    states = [start]
    s = start
    while True:
        defenses = space.available[s][1:]
        if not defenses:
            break
        row = q.values[s]
        a = best_action(q, s, defenses)
        if row[ATTACK_INDEX] >= row[a]:
            break
        t = space.successors(s, a)[0]
        steps.append(space.actions[a])
        rewards.append(t.success_reward)
        s = t.target
        if space.packed[s] in visited:
            raise PlanError(f"plan revisits state {s} after {'-'.join(steps)}")
        visited.add(space.packed[s])
        states.append(s)
    return DefensePlan(steps, rewards, s, start, states)


def no_defense_baseline(space: StateSpace, start: int = 0, gamma: float = 1.0) -> float:
    """Expected discounted reward when the defender never acts.

    Dynamic programming over the ATTACK-only subgraph from ``start``; with
    several attack targets this is the expectation over the configured
    target resolution.
    """
    memo: dict[int, float] = {}
    order = [start]
    seen = {start}
    # attack edges only grow the compromised set, so the subgraph is a DAG
    k = 0
    while k < len(order):
        for t in space.successors(order[k], ATTACK_INDEX):
            if t.target not in seen:
                seen.add(t.target)
                order.append(t.target)
        k += 1
    for s in reversed(order):
        outs = space.successors(s, ATTACK_INDEX)
        if not outs:
            memo[s] = 0.0
            continue
        rate, fail = outs[0].success_rate, outs[0].fail_reward
        expected = sum(t.probability * (t.success_reward + gamma * memo[t.target]) for t in outs)
        stay = 1.0 - (1.0 - rate) * gamma
        if stay <= 0.0:
            memo[s] = 0.0 if fail == 0.0 else float("-inf")
        else:
            memo[s] = (rate * expected + (1.0 - rate) * fail) / stay
    return memo[start]


def plan_value(space: StateSpace, plan: DefensePlan, gamma: float) -> float:
    """Discounted reward of executing ``plan`` and then never defending again."""
    n = len(plan.steps)
    return plan.total_discounted(gamma) + gamma**n * no_defense_baseline(space, plan.terminal_state, gamma)


def optimal_solution_reward(space: StateSpace, q: QTable, gamma: float, start: int = 0) -> float:
    """Reward of the solution read out of ``q``: the plan's own defense
    costs plus the undefended attack damage from where the plan stops.

    On a converged table whose plan ends in a secure state this equals the
    Q-value of the plan's first action at ``start``. On an under-trained
    table it scores the plan actually produced, not the table's estimate of
    it (estimates start at 0 and are optimistic).
    """
    return plan_value(space, extract_defense_sequence(space, q, start), gamma)


def improvement_percentage(osr: float, ndr: float) -> float:
    """Fractional improvement of the plan over not defending (1.0 = 100%)."""
    if ndr == 0:
        raise ValueError("undefined baseline: no-defense reward is 0")
    return -(osr - ndr) / ndr
