"""Text dumps, CSV exports and on-disk persistence of generated spaces and
trained tables."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import TextIO

import numpy as np

from .policy import DefensePlan
from .qlearning import QTable
from .scenario import parse_scenario, scenario_to_document
from .statespace import StateSpace, Transition

SPACE_FORMAT = "mdp-defense/state-space"
QTABLE_FORMAT = "mdp-defense/q-table"
FORMAT_VERSION = 1


def format_q(value: float) -> str:
    """Up to three decimals, trailing zeros trimmed, at least one decimal."""
    text = f"{value:.3f}".rstrip("0")
    if text.endswith("."):
        text += "0"
    return "0.0" if text == "-0.0" else text


def _state_lines(space: StateSpace, i: int) -> list[str]:
    links = ", ".join(f"({a}, {b})" for a, b in space.link_positions(i))
    return [
        f"Compromised Hosts: [{', '.join(str(h) for h in space.compromised_positions(i))}]",
        f"Links: [{links}]",
        f"Vulnerabilities: [{', '.join(space.vuln_ids(i))}]",
    ]


def dump_states_text(space: StateSpace, out: TextIO) -> None:
    for i in range(space.n_states):
        out.write(f"State {i}\n")
        out.write("\n".join(_state_lines(space, i)) + "\n\n")


def dump_qtable_text(space: StateSpace, q: QTable, out: TextIO) -> None:
    """Per-state blocks in BFS order; host numbers are declared positions
    with the internet as 0. Q-values follow the action order ATTACK, D1.."""
    for i in range(space.n_states):
        out.write(f"State {i}\n")
        out.write("\n".join(_state_lines(space, i)) + "\n")
        out.write("Q-Values: " + ", ".join(format_q(v) for v in q.values[i]) + "\n\n")


def qtable_text(space: StateSpace, q: QTable) -> str:
    buf = io.StringIO()
    dump_qtable_text(space, q, buf)
    return buf.getvalue()


def write_qtable_csv(space: StateSpace, q: QTable, out: TextIO) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["state_index", "action", "q", "update_count", "feasible"])
    for i in range(space.n_states):
        for a, name in enumerate(space.actions):
            writer.writerow([i, name, repr(float(q.values[i, a])), int(q.update_counts[i, a]),
                             int(space.feasible(i, a))])


def write_transitions_csv(space: StateSpace, out: TextIO) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["source", "target", "action", "probability", "success_rate", "success_reward", "fail_reward"])
    for t in space.iter_transitions():
        writer.writerow([t.source, t.target, space.actions[t.action], repr(t.probability),
                         repr(t.success_rate), repr(t.success_reward), repr(t.fail_reward)])


def write_plan(space: StateSpace, plan: DefensePlan, out: TextIO, fmt: str = "text",
               osr: float | None = None, ndr: float | None = None, improvement: float | None = None) -> None:
    scenario = space.scenario
    if fmt == "csv":
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["step", "defense", "description", "cost", "cumulative_reward"])
        total = 0.0
        for k, (d, r) in enumerate(zip(plan.steps, plan.per_step_reward), start=1):
            total += r
            writer.writerow([k, d, scenario.defense(d).description, repr(-r), repr(total)])
        return
    out.write(f"Optimal defense sequence: {plan}\n")
    total = 0.0
    for k, (d, r) in enumerate(zip(plan.steps, plan.per_step_reward), start=1):
        total += r
        out.write(f"  {k}. {d:<6} {scenario.defense(d).description:<40} cost {-r:6.3f}  cumulative {total:8.3f}\n")
    out.write(f"Terminal state: {plan.terminal_state}\n")
    if osr is not None:
        out.write(f"Optimal solution reward: {osr:.4f}\n")
    if ndr is not None:
        out.write(f"No-defense reward: {ndr:.4f}\n")
    if improvement is not None:
        out.write(f"Improvement: {improvement * 100:.2f}%\n")


# -- persistence -----------------------------------------------------------

def save_space(space: StateSpace, path: str | Path) -> Path:
    doc = {
        "format": SPACE_FORMAT,
        "version": FORMAT_VERSION,
        "scenario": scenario_to_document(space.scenario),
        "actions": list(space.actions),
        "states": [list(p) for p in space.packed],
        "transitions": [list(t) for t in space.iter_transitions()],
    }
    path = Path(path)
    path.write_text(json.dumps(doc, separators=(",", ":")) + "\n", encoding="utf-8")
    return path


def load_space(path: str | Path) -> StateSpace:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != SPACE_FORMAT or doc.get("version") != FORMAT_VERSION:
        raise ValueError(f"{path}: not a version-{FORMAT_VERSION} state-space file")
    scenario = parse_scenario(doc["scenario"])
    packed = [tuple(p) for p in doc["states"]]
    transitions: dict[tuple[int, int], list[Transition]] = {}
    for raw in doc["transitions"]:
        t = Transition(int(raw[0]), int(raw[1]), int(raw[2]), *map(float, raw[3:]))
        transitions.setdefault((t.source, t.action), []).append(t)
    return StateSpace(scenario, packed, {k: tuple(v) for k, v in transitions.items()})


def save_qtable(q: QTable, path: str | Path) -> Path:
    path = Path(path)
    with path.open("wb") as fh:
        np.savez(fh, format=np.array(QTABLE_FORMAT), version=np.array(FORMAT_VERSION),
                 values=q.values, update_counts=q.update_counts, actions=np.array(q.actions))
    return path


def load_qtable(path: str | Path) -> QTable:
    with np.load(Path(path)) as data:
        if str(data["format"]) != QTABLE_FORMAT or int(data["version"]) != FORMAT_VERSION:
            raise ValueError(f"{path}: not a version-{FORMAT_VERSION} q-table file")
        return QTable(data["values"].copy(), data["update_counts"].copy(), tuple(str(a) for a in data["actions"]))
