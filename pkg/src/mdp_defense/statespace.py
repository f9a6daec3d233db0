"""Breadth-first enumeration of every reachable network state and the sparse
transition/reward table over them.

States are packed into integer bitmasks during generation (one bit per
declared host, link, vulnerability and catalog defense). The public
:class:`NetworkState` is the set-based view of the same data.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import NamedTuple

import numpy as np

from .scenario import (
    ATTACK,
    BLOCK,
    INTERNET,
    Link,
    Scenario,
    attack_penalty,
    defense_cost,
)

ATTACK_INDEX = 0
DEFAULT_STATE_CAP = 1_000_000


class StateCapExceeded(RuntimeError):
    def __init__(self, cap: int):
        self.cap = cap
        super().__init__(f"state-space generation exceeded the state cap of {cap} states")


@dataclass(frozen=True)
class NetworkState:
    compromised: frozenset[str]
    links: frozenset[Link]
    vulns: frozenset[tuple[str, str]]
    defenses_remaining: frozenset[str]
    path_cursor: int | None = None


class Transition(NamedTuple):
    source: int
    target: int
    action: int
    probability: float  # chance this outcome is the one drawn for the action
    success_rate: float
    success_reward: float
    fail_reward: float


# packed state: (compromised, links, vulns, defenses, cursor)
Packed = tuple[int, int, int, int, int]


class _Model:
    """Index tables compiled from a scenario; all state arithmetic lives here."""

    def __init__(self, s: Scenario):
        self.scenario = s
        # position 0 is the internet; declared hosts follow in order
        self.nodes = (INTERNET,) + s.host_ids
        self.node_pos = {h: i for i, h in enumerate(self.nodes)}
        self.links = tuple(s.links)
        self.link_pos = {link: i for i, link in enumerate(self.links)}
        self.vulns: list[tuple[str, str]] = []
        self.vuln_cvss: list[float] = []
        self.vuln_penalty: list[float] = []
        self.vuln_host: list[int] = []
        self.host_vuln_mask = [0] * len(self.nodes)
        for hid, v in s.vulnerabilities():
            i = len(self.vulns)
            self.vulns.append((hid, v.id))
            self.vuln_cvss.append(float(v.cvss))
            self.vuln_penalty.append(attack_penalty(s, v))
            self.vuln_host.append(self.node_pos[hid])
            self.host_vuln_mask[self.node_pos[hid]] |= 1 << i
        self.vuln_pos = {pair: i for i, pair in enumerate(self.vulns)}
        self.incoming: list[list[tuple[int, int]]] = [[] for _ in self.nodes]
        for i, link in enumerate(self.links):
            self.incoming[self.node_pos[link.dst]].append((1 << i, 1 << self.node_pos[link.src]))

        self.defense_ids = tuple(d.id for d in s.defenses)
        self.defense_pos = {d: i for i, d in enumerate(self.defense_ids)}
        # per defense: (is_patch, host bit, link clear mask, vuln clear mask, cost)
        self.defense_ops = []
        for d in s.defenses:
            cost = defense_cost(s, d)
            host_bit = 1 << self.node_pos[d.host]
            if d.kind == BLOCK:
                self.defense_ops.append((False, host_bit, 1 << self.link_pos[Link(d.source, d.host)], 0, cost))
            else:
                self.defense_ops.append((True, host_bit, 0, 1 << self.vuln_pos[(d.host, d.vuln)], cost))

        self.path = None if s.attack_path is None else [self.node_pos[h] for h in s.attack_path[1:]]
        self.actions = (ATTACK,) + self.defense_ids
        r = s.rewards
        self.attack_rate = r.attack_success_rate
        self.attack_fail = r.attack_fail_reward
        self.defense_rate = r.defense_success_rate
        self.defense_fail = r.defense_fail_reward
        self.worst_case = r.attack_target == "worst_case"

    # -- packing -----------------------------------------------------------
    def initial(self) -> Packed:
        n_links, n_vulns, n_def = len(self.links), len(self.vulns), len(self.defense_ids)
        return (1, (1 << n_links) - 1, (1 << n_vulns) - 1, (1 << n_def) - 1, 0)

    def encode(self, st: NetworkState) -> Packed:
        comp = 0
        for h in st.compromised:
            comp |= 1 << self.node_pos[h]
        links = sum(1 << self.link_pos[tuple(link)] for link in st.links)
        vulns = sum(1 << self.vuln_pos[tuple(v)] for v in st.vulns)
        defs = sum(1 << self.defense_pos[d] for d in st.defenses_remaining)
        return (comp | 1, links, vulns, defs, st.path_cursor or 0)

    def decode(self, p: Packed) -> NetworkState:
        comp, links, vulns, defs, cursor = p
        return NetworkState(
            compromised=frozenset(h for i, h in enumerate(self.nodes) if comp >> i & 1),
            links=frozenset(link for i, link in enumerate(self.links) if links >> i & 1),
            vulns=frozenset(v for i, v in enumerate(self.vulns) if vulns >> i & 1),
            defenses_remaining=frozenset(d for i, d in enumerate(self.defense_ids) if defs >> i & 1),
            path_cursor=None if self.path is None else cursor,
        )

    # -- dynamics ----------------------------------------------------------
    def _reachable(self, comp: int, links: int, host: int) -> bool:
        for link_bit, src_bit in self.incoming[host]:
            if links & link_bit and comp & src_bit:
                return True
        return False

    def attacks(self, p: Packed) -> list[tuple[int, int]]:
        """Feasible (host position, vuln index) attack targets."""
        comp, links, vulns, _, cursor = p
        if self.path is not None:
            if cursor >= len(self.path):
                return []
            h = self.path[cursor]
            alive = vulns & self.host_vuln_mask[h]
            if comp >> h & 1 or not alive or not self._reachable(comp, links, h):
                return []
            best = max(_bits(alive), key=lambda i: (self.vuln_cvss[i], -i))
            return [(h, best)]
        out = []
        for h in range(1, len(self.nodes)):
            if comp >> h & 1:
                continue
            alive = vulns & self.host_vuln_mask[h]
            if alive and self._reachable(comp, links, h):
                out.extend((h, i) for i in _bits(alive))
        return out

    def defenses(self, p: Packed) -> list[int]:
        comp, _, _, defs, _ = p
        out = []
        for i, (is_patch, host_bit, _, _, _) in enumerate(self.defense_ops):
            if defs >> i & 1 and not (is_patch and comp & host_bit):
                out.append(i)
        return out

    def attack(self, p: Packed, host: int) -> Packed:
        comp, links, vulns, defs, cursor = p
        return (comp | 1 << host, links, vulns, defs, cursor + 1 if self.path is not None else cursor)

    def defend(self, p: Packed, d: int) -> Packed:
        comp, links, vulns, defs, cursor = p
        _, _, link_bit, vuln_bit, _ = self.defense_ops[d]
        return (comp, links & ~link_bit, vulns & ~vuln_bit, defs & ~(1 << d), cursor)

    def attack_outcomes(self, p: Packed) -> list[tuple[Packed, float, float]]:
        """(next state, probability, success reward) for the ATTACK column."""
        targets = self.attacks(p)
        if not targets:
            return []
        if self.worst_case and len(targets) > 1:
            targets = [max(targets, key=lambda t: (self.vuln_cvss[t[1]], -t[1]))]
        prob = 1.0 / len(targets)
        return [(self.attack(p, h), prob, -self.vuln_penalty[v]) for h, v in targets]


def _bits(mask: int):
    i = 0
    while mask:
        if mask & 1:
            yield i
        mask >>= 1
        i += 1


@lru_cache(maxsize=64)
def _compile(s: Scenario) -> _Model:
    return _Model(s)


# -- public per-state operations ------------------------------------------

def initial_state(s: Scenario) -> NetworkState:
    m = _compile(s)
    return m.decode(m.initial())


def canonical_key(st: NetworkState) -> bytes:
    """Order-independent byte key; equal exactly for set-equal states."""
    payload = [
        sorted(st.compromised),
        sorted([link.src, link.dst] for link in st.links),
        sorted([h, v] for h, v in st.vulns),
        sorted(st.defenses_remaining),
        st.path_cursor,
    ]
    return json.dumps(payload, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def feasible_attacks(s: Scenario, st: NetworkState) -> list[tuple[str, str]]:
    m = _compile(s)
    return [(m.nodes[h], m.vulns[v][1]) for h, v in m.attacks(m.encode(st))]


def feasible_defenses(s: Scenario, st: NetworkState) -> list[str]:
    m = _compile(s)
    return [m.defense_ids[i] for i in m.defenses(m.encode(st))]


def apply_action(
    s: Scenario, st: NetworkState, action: str, target: tuple[str, str] | None = None
) -> NetworkState | None:
    """Successor of ``st`` under ``action``, or None when it is not feasible.

    ``action`` is ``ATTACK`` (with a ``(host, vuln)`` target drawn from
    :func:`feasible_attacks`) or a defense id.
    """
    m = _compile(s)
    p = m.encode(st)
    if action == ATTACK:
        if target is None:
            return None
        for h, v in m.attacks(p):
            if (m.nodes[h], m.vulns[v][1]) == tuple(target):
                return m.decode(m.attack(p, h))
        return None
    d = m.defense_pos.get(action)
    if d is None or d not in m.defenses(p):
        return None
    return m.decode(m.defend(p, d))


# -- the generated space --------------------------------------------------

class StateSpace:
    """All reachable states (index 0 = initial) plus the sparse transition table.

    ``transitions`` maps ``(state, action)`` to the tuple of possible
    outcomes; a missing key means the action has no successor there.
    ``available[s]`` lists ATTACK plus every defense feasible in ``s``; it is
    the set over which greedy choices and future values are maximised.
    """

    def __init__(self, scenario: Scenario, packed: list[Packed], transitions: dict[tuple[int, int], tuple[Transition, ...]]):
        self.scenario = scenario
        self._model = _compile(scenario)
        self.packed = packed
        self.index = {p: i for i, p in enumerate(packed)}
        self.transitions = transitions
        self.actions = self._model.actions
        n_actions = len(self.actions)
        self.rows: list[list[tuple[Transition, ...] | None]] = [[None] * n_actions for _ in packed]
        for (i, a), outs in transitions.items():
            self.rows[i][a] = outs
        self.available: list[tuple[int, ...]] = [
            (ATTACK_INDEX,) + tuple(a for a in range(1, n_actions) if row[a] is not None)
            for row in self.rows
        ]

    def __len__(self) -> int:
        return len(self.packed)

    @cached_property
    def arrays(self) -> dict[str, np.ndarray]:
        """Flat CSR form of the table for the compiled training kernel.

        ``ptr[s * n_actions + a] : ptr[... + 1]`` spans the outcomes of
        ``(s, a)``; ``aptr[s] : aptr[s + 1]`` spans ``available[s]`` in ``aidx``.
        """
        n_actions = len(self.actions)
        counts = np.zeros(len(self.packed) * n_actions + 1, dtype=np.int64)
        flat: list[Transition] = []
        for i, row in enumerate(self.rows):
            for a, outs in enumerate(row):
                if outs:
                    counts[i * n_actions + a + 1] = len(outs)
                    flat.extend(outs)
        ptr = np.cumsum(counts)
        lengths = np.fromiter((len(c) for c in self.available), dtype=np.int64, count=len(self.available))
        aptr = np.concatenate(([0], np.cumsum(lengths))).astype(np.int64)
        aidx = np.fromiter((a for c in self.available for a in c), dtype=np.int64, count=int(aptr[-1]))
        n = len(flat)
        return {
            "ptr": ptr,
            "target": np.fromiter((t.target for t in flat), dtype=np.int64, count=n),
            "prob": np.fromiter((t.probability for t in flat), dtype=np.float64, count=n),
            "rate": np.fromiter((t.success_rate for t in flat), dtype=np.float64, count=n),
            "r_ok": np.fromiter((t.success_reward for t in flat), dtype=np.float64, count=n),
            "r_fail": np.fromiter((t.fail_reward for t in flat), dtype=np.float64, count=n),
            "aptr": aptr,
            "aidx": aidx,
        }

    @property
    def n_states(self) -> int:
        return len(self.packed)

    @property
    def n_actions(self) -> int:
        return len(self.actions)

    def state(self, i: int) -> NetworkState:
        return self._model.decode(self.packed[i])

    def index_of(self, st: NetworkState) -> int:
        return self.index[self._model.encode(st)]

    def key(self, i: int) -> bytes:
        return canonical_key(self.state(i))

    def action_index(self, action: str) -> int:
        return self.actions.index(action)

    def successors(self, i: int, action: int) -> tuple[Transition, ...]:
        return self.rows[i][action] or ()

    def feasible(self, i: int, action: int) -> bool:
        return self.rows[i][action] is not None

    def iter_transitions(self):
        for outs in self.transitions.values():
            yield from outs

    # dump helpers: positions follow declared order with the internet at 0
    def compromised_positions(self, i: int) -> list[int]:
        return list(_bits(self.packed[i][0]))

    def link_positions(self, i: int) -> list[tuple[int, int]]:
        m = self._model
        return [(m.node_pos[m.links[b].src], m.node_pos[m.links[b].dst]) for b in _bits(self.packed[i][1])]

    def vuln_ids(self, i: int) -> list[str]:
        return [self._model.vulns[b][1] for b in _bits(self.packed[i][2])]


def generate_state_space(s: Scenario, state_cap: int = DEFAULT_STATE_CAP) -> StateSpace:
    """Materialise every state reachable from the initial state.

    States are numbered in BFS discovery order and deduplicated on their
    packed (canonical) form. Raises StateCapExceeded past ``state_cap``.
    """
    m = _compile(s)
    start = m.initial()
    packed = [start]
    index = {start: 0}
    transitions: dict[tuple[int, int], tuple[Transition, ...]] = {}
    queue = deque([0])

    def visit(p: Packed) -> int:
        j = index.get(p)
        if j is None:
            j = len(packed)
            if j >= state_cap:
                raise StateCapExceeded(state_cap)
            index[p] = j
            packed.append(p)
            queue.append(j)
        return j

    a_rate, a_fail = m.attack_rate, m.attack_fail
    d_rate, d_fail = m.defense_rate, m.defense_fail
    while queue:
        i = queue.popleft()
        p = packed[i]
        outs = m.attack_outcomes(p)
        if outs:
            transitions[(i, ATTACK_INDEX)] = tuple(
                Transition(i, visit(q), ATTACK_INDEX, prob, a_rate, reward, a_fail)
                for q, prob, reward in outs
            )
        for d in m.defenses(p):
            j = visit(m.defend(p, d))
            transitions[(i, d + 1)] = (Transition(i, j, d + 1, 1.0, d_rate, -m.defense_ops[d][4], d_fail),)
    return StateSpace(s, packed, transitions)


def dense_transition_view(space: StateSpace) -> list[list[list[Transition]]]:
    """The s-by-s cell view: ``view[i][j]`` lists transitions from i to j.

    Quadratic in the state count; intended for small spaces only.
    """
    n = space.n_states
    view: list[list[list[Transition]]] = [[[] for _ in range(n)] for _ in range(n)]
    for t in space.iter_transitions():
        view[t.source][t.target].append(t)
    return view
