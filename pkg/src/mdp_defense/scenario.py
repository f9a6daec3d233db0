"""Declarative network scenario: hosts, directed links, vulnerabilities and
the defense catalog that seed the MDP.

Scenarios are read from a JSON document (see ``docs/scenario.schema.json``)
and are immutable once parsed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Any, Mapping, NamedTuple

INTERNET = "internet"
ATTACK = "ATTACK"

BLOCK = "block"
PATCH = "patch"

ATTACK_TARGET_MODES = ("uniform", "worst_case")


class ScenarioError(ValueError):
    """Raised when a scenario document cannot be turned into a valid Scenario."""

    def __init__(self, violations: list[str] | str):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class ScenarioSyntaxError(ScenarioError):
    def __init__(self, message: str, line: int, column: int):
        self.line = line
        self.column = column
        super().__init__(f"syntax error at line {line}, column {column}: {message}")


@dataclass(frozen=True)
class Vulnerability:
    id: str
    cvss: float
    patch_cost: float
    patchable: bool = True


@dataclass(frozen=True)
class Host:
    id: str
    vulnerabilities: tuple[Vulnerability, ...] = ()

    def vulnerability(self, vuln_id: str) -> Vulnerability | None:
        for v in self.vulnerabilities:
            if v.id == vuln_id:
                return v
        return None


class Link(NamedTuple):
    """Directed connection ``src -> dst``; ``src`` may be the internet."""

    src: str
    dst: str


@dataclass(frozen=True)
class DefenseSpec:
    """One catalog entry.

    ``block`` severs the directed link ``source -> host`` (``host`` is the
    protected host); ``patch`` removes ``vuln`` from ``host``.
    """

    id: str
    kind: str
    host: str
    source: str | None = None
    vuln: str | None = None
    cost: float | None = None

    @property
    def description(self) -> str:
        if self.kind == BLOCK:
            src = "Router" if self.source == INTERNET else self.source
            return f"Block port to {src} on {self.host}"
        return f"Patch {self.vuln} on {self.host}"


@dataclass(frozen=True)
class RewardParams:
    attack_weight: float = 1.0
    attack_target: str = "uniform"
    attack_success_rate: float = 1.0
    defense_success_rate: float = 1.0
    attack_fail_reward: float = 0.0
    defense_fail_reward: float = 0.0


@dataclass(frozen=True)
class TrainConfig:
    gamma: float = 0.9
    alpha: float = 0.1
    epsilon: float = 0.7
    epochs: int = 5000
    seed: int = 0
    # guards against endless fail-and-stay loops when success rates are < 1
    max_episode_steps: int = 1000

    def violations(self) -> list[str]:
        out = []
        if not (0.0 < self.gamma < 1.0):
            out.append(f"gamma {self.gamma} out of (0,1)")
        if not (0.0 < self.alpha <= 1.0):
            out.append(f"alpha {self.alpha} out of (0,1]")
        if not (0.0 <= self.epsilon <= 1.0):
            out.append(f"epsilon {self.epsilon} out of [0,1]")
        if not isinstance(self.epochs, int) or self.epochs < 1:
            out.append(f"epochs {self.epochs} must be an integer >= 1")
        if not isinstance(self.seed, int) or not (0 <= self.seed < 2**64):
            out.append(f"seed {self.seed} must be an integer in [0, 2**64)")
        if self.max_episode_steps < 1:
            out.append("max_episode_steps must be >= 1")
        return out

    def check(self) -> TrainConfig:
        problems = self.violations()
        if problems:
            raise ValueError("; ".join(problems))
        return self


@dataclass(frozen=True)
class Scenario:
    hosts: tuple[Host, ...]
    links: tuple[Link, ...]
    defenses: tuple[DefenseSpec, ...] = ()
    attack_path: tuple[str, ...] | None = None
    rewards: RewardParams = field(default_factory=RewardParams)
    learning: TrainConfig = field(default_factory=TrainConfig)

    @cached_property
    def host_ids(self) -> tuple[str, ...]:
        return tuple(h.id for h in self.hosts)

    def host(self, host_id: str) -> Host:
        for h in self.hosts:
            if h.id == host_id:
                return h
        raise KeyError(host_id)

    def defense(self, defense_id: str) -> DefenseSpec:
        for d in self.defenses:
            if d.id == defense_id:
                return d
        raise KeyError(defense_id)

    def vulnerabilities(self) -> list[tuple[str, Vulnerability]]:
        return [(h.id, v) for h in self.hosts for v in h.vulnerabilities]

    def without_attack_path(self) -> Scenario:
        return replace(self, attack_path=None)


def defense_cost(s: Scenario, d: DefenseSpec) -> float:
    """Cost of applying ``d``, as a positive magnitude.

    Patches cost the vulnerability's patch cost. Blocks cost their explicit
    ``cost`` when given, else the highest CVSS on the protected host.
    """
    host = s.host(d.host)
    if d.kind == PATCH:
        vuln = host.vulnerability(d.vuln)
        if vuln is None:
            raise KeyError(f"{d.vuln} on {d.host}")
        return float(vuln.patch_cost)
    if d.cost is not None:
        return float(d.cost)
    return max((float(v.cvss) for v in host.vulnerabilities), default=0.0)


def attack_penalty(s: Scenario, v: Vulnerability) -> float:
    return float(v.cvss) * s.rewards.attack_weight


def _in_range(x: Any, lo: float, hi: float) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x) and lo <= x <= hi


def validate_scenario(s: Scenario) -> list[str]:
    """Return every invariant violation found in ``s`` (empty when valid)."""
    out: list[str] = []
    if not s.hosts:
        out.append("scenario must declare ≥1 host")

    host_map: dict[str, Host] = {}
    for h in s.hosts:
        if h.id == INTERNET:
            out.append(f"host id {INTERNET!r} is reserved")
        elif h.id in host_map:
            out.append(f"duplicate host id {h.id!r}")
        host_map[h.id] = h
        seen: set[str] = set()
        for v in h.vulnerabilities:
            if v.id in seen:
                out.append(f"duplicate vulnerability {v.id!r} on host {h.id!r}")
            seen.add(v.id)
            if not _in_range(v.cvss, 0.0, 10.0):
                out.append(f"{h.id}/{v.id}: cvss out of [0,10]")
            if not _in_range(v.patch_cost, 0.0, 10.0):
                out.append(f"{h.id}/{v.id}: patch_cost out of [0,10]")

    link_set: set[Link] = set()
    for link in s.links:
        if link.src != INTERNET and link.src not in host_map:
            out.append(f"link {link.src}->{link.dst}: unknown reference {link.src!r}")
        if link.dst not in host_map:
            out.append(f"link {link.src}->{link.dst}: unknown reference {link.dst!r}")
        if link.src == link.dst:
            out.append(f"link {link.src}->{link.dst}: self-loop")
        if link in link_set:
            out.append(f"duplicate link {link.src}->{link.dst}")
        link_set.add(link)

    defense_ids: set[str] = set()
    for d in s.defenses:
        if d.id == ATTACK:
            out.append(f"defense id {ATTACK!r} is reserved")
        if d.id in defense_ids:
            out.append(f"duplicate defense id {d.id!r}")
        defense_ids.add(d.id)
        if d.host not in host_map:
            out.append(f"defense {d.id}: unknown reference {d.host!r}")
            continue
        if d.kind == BLOCK:
            if d.source != INTERNET and d.source not in host_map:
                out.append(f"defense {d.id}: unknown reference {d.source!r}")
            elif Link(d.source, d.host) not in link_set:
                out.append(f"defense {d.id}: no link {d.source}->{d.host} to block")
            if d.cost is not None and not _in_range(d.cost, 0.0, 10.0):
                out.append(f"defense {d.id}: cost out of [0,10]")
        elif d.kind == PATCH:
            vuln = host_map[d.host].vulnerability(d.vuln) if d.vuln is not None else None
            if vuln is None:
                out.append(f"defense {d.id}: unknown reference {d.vuln!r} on host {d.host!r}")
            elif not vuln.patchable:
                out.append(f"defense {d.id}: {d.vuln} on {d.host} is not patchable")
            if d.cost is not None:
                out.append(f"defense {d.id}: patch cost comes from the vulnerability, not the defense")
        else:
            out.append(f"defense {d.id}: unknown kind {d.kind!r}")

    if s.attack_path is not None:
        path = s.attack_path
        if not path or path[0] != INTERNET:
            out.append(f"attack path must start at {INTERNET!r}")
        for node in path[1:]:
            if node not in host_map:
                out.append(f"attack path: unknown reference {node!r}")
        if len(set(path)) != len(path):
            out.append("attack path repeats a host")
        for a, b in zip(path, path[1:]):
            if Link(a, b) not in link_set:
                out.append(f"path edge missing: {a}->{b}")

    r = s.rewards
    if not _in_range(r.attack_weight, 0.0, math.inf):
        out.append("rewards.attack_weight must be >= 0")
    if r.attack_target not in ATTACK_TARGET_MODES:
        out.append(f"rewards.attack_target must be one of {ATTACK_TARGET_MODES}")
    for name in ("attack_success_rate", "defense_success_rate"):
        if not _in_range(getattr(r, name), 0.0, 1.0):
            out.append(f"rewards.{name} out of [0,1]")
    for name in ("attack_fail_reward", "defense_fail_reward"):
        if not _in_range(getattr(r, name), -math.inf, 0.0):
            out.append(f"rewards.{name} must be <= 0")

    out.extend(f"learning: {p}" for p in s.learning.violations())
    return out


# -- document <-> Scenario -------------------------------------------------

def _num(doc: Mapping, key: str, where: str, default=None):
    if key not in doc:
        if default is None:
            raise ScenarioError(f"{where}: missing field {key!r}")
        return default
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{where}: field {key!r} must be a number")
    return float(value)


def _str(doc: Mapping, key: str, where: str) -> str:
    value = doc.get(key)
    if not isinstance(value, str):
        raise ScenarioError(f"{where}: field {key!r} must be a string")
    return value


def scenario_from_document(doc: Mapping[str, Any]) -> Scenario:
    """Build a Scenario from decoded JSON without validating invariants."""
    if not isinstance(doc, Mapping):
        raise ScenarioError("scenario document must be an object")
    hosts = []
    for i, h in enumerate(doc.get("hosts") or []):
        where = f"hosts[{i}]"
        if not isinstance(h, Mapping):
            raise ScenarioError(f"{where}: must be an object")
        vulns = []
        for j, v in enumerate(h.get("vulnerabilities") or []):
            vw = f"{where}.vulnerabilities[{j}]"
            vulns.append(Vulnerability(
                id=_str(v, "id", vw),
                cvss=_num(v, "cvss", vw),
                patch_cost=_num(v, "patch_cost", vw),
                patchable=bool(v.get("patchable", True)),
            ))
        hosts.append(Host(_str(h, "id", where), tuple(vulns)))

    links = []
    for i, pair in enumerate(doc.get("links") or []):
        if not (isinstance(pair, (list, tuple)) and len(pair) == 2 and all(isinstance(x, str) for x in pair)):
            raise ScenarioError(f"links[{i}]: must be a [from, to] pair of ids")
        links.append(Link(pair[0], pair[1]))

    defenses = []
    for i, d in enumerate(doc.get("defenses") or []):
        where = f"defenses[{i}]"
        kind = _str(d, "kind", where).lower()
        cost = d.get("cost")
        if cost is not None and (isinstance(cost, bool) or not isinstance(cost, (int, float))):
            raise ScenarioError(f"{where}: field 'cost' must be a number")
        if kind == BLOCK:
            defenses.append(DefenseSpec(_str(d, "id", where), BLOCK, _str(d, "protected", where),
                                        source=_str(d, "from", where),
                                        cost=None if cost is None else float(cost)))
        elif kind == PATCH:
            defenses.append(DefenseSpec(_str(d, "id", where), PATCH, _str(d, "target", where),
                                        vuln=_str(d, "vuln", where),
                                        cost=None if cost is None else float(cost)))
        else:
            raise ScenarioError(f"{where}: unknown defense kind {kind!r}")

    path = doc.get("attack_path")
    if path is not None:
        if not (isinstance(path, list) and all(isinstance(x, str) for x in path)):
            raise ScenarioError("attack_path must be a list of host ids or null")
        path = tuple(path)

    r = doc.get("rewards") or {}
    default_r = RewardParams()
    rewards = RewardParams(
        attack_weight=_num(r, "attack_weight", "rewards", default_r.attack_weight),
        attack_target=r.get("attack_target", default_r.attack_target),
        attack_success_rate=_num(r, "attack_success_rate", "rewards", default_r.attack_success_rate),
        defense_success_rate=_num(r, "defense_success_rate", "rewards", default_r.defense_success_rate),
        attack_fail_reward=_num(r, "attack_fail_reward", "rewards", default_r.attack_fail_reward),
        defense_fail_reward=_num(r, "defense_fail_reward", "rewards", default_r.defense_fail_reward),
    )

    lp = doc.get("learning") or {}
    default_l = TrainConfig()
    for key in ("epochs", "seed", "max_episode_steps"):
        if key in lp and (isinstance(lp[key], bool) or not isinstance(lp[key], int)):
            raise ScenarioError(f"learning: field {key!r} must be an integer")
    learning = TrainConfig(
        gamma=_num(lp, "gamma", "learning", default_l.gamma),
        alpha=_num(lp, "alpha", "learning", default_l.alpha),
        epsilon=_num(lp, "epsilon", "learning", default_l.epsilon),
        epochs=lp.get("epochs", default_l.epochs),
        seed=lp.get("seed", default_l.seed),
        max_episode_steps=lp.get("max_episode_steps", default_l.max_episode_steps),
    )
    return Scenario(tuple(hosts), tuple(links), tuple(defenses), path, rewards, learning)


def parse_scenario(document: str | bytes | Mapping[str, Any]) -> Scenario:
    """Parse and validate a scenario document (JSON text or decoded mapping).

    Raises ScenarioSyntaxError for malformed JSON and ScenarioError listing
    every violation for structurally or semantically invalid input.
    """
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ScenarioSyntaxError(exc.msg, exc.lineno, exc.colno) from None
    s = scenario_from_document(document)
    problems = validate_scenario(s)
    if problems:
        raise ScenarioError(problems)
    return s


def load_scenario(path: str | Path) -> Scenario:
    return parse_scenario(Path(path).read_text(encoding="utf-8"))


def scenario_to_document(s: Scenario) -> dict[str, Any]:
    defenses = []
    for d in s.defenses:
        if d.kind == BLOCK:
            entry = {"id": d.id, "kind": BLOCK, "protected": d.host, "from": d.source}
        else:
            entry = {"id": d.id, "kind": PATCH, "target": d.host, "vuln": d.vuln}
        if d.cost is not None:
            entry["cost"] = d.cost
        defenses.append(entry)
    r, lp = s.rewards, s.learning
    return {
        "hosts": [
            {"id": h.id, "vulnerabilities": [
                {"id": v.id, "cvss": v.cvss, "patch_cost": v.patch_cost, "patchable": v.patchable}
                for v in h.vulnerabilities]}
            for h in s.hosts
        ],
        "links": [[link.src, link.dst] for link in s.links],
        "defenses": defenses,
        "attack_path": None if s.attack_path is None else list(s.attack_path),
        "rewards": {
            "attack_weight": r.attack_weight,
            "attack_target": r.attack_target,
            "attack_success_rate": r.attack_success_rate,
            "defense_success_rate": r.defense_success_rate,
            "attack_fail_reward": r.attack_fail_reward,
            "defense_fail_reward": r.defense_fail_reward,
        },
        "learning": {
            "gamma": lp.gamma, "alpha": lp.alpha, "epsilon": lp.epsilon,
            "epochs": lp.epochs, "seed": lp.seed, "max_episode_steps": lp.max_episode_steps,
        },
    }


def emit_scenario(s: Scenario) -> str:
    return json.dumps(scenario_to_document(s), indent=2) + "\n"
