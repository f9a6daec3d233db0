"""Parameter sweeps and scaling benchmarks, written out as CSV."""

from __future__ import annotations

import csv
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from datetime import datetime
from pathlib import Path
from typing import Sequence

import numpy as np

from .policy import extract_defense_sequence, improvement_percentage, no_defense_baseline, plan_value
from .qlearning import count_unupdated, train
from .scenario import (
    BLOCK,
    INTERNET,
    PATCH,
    DefenseSpec,
    Host,
    Link,
    Scenario,
    ScenarioError,
    TrainConfig,
    Vulnerability,
)
from .statespace import DEFAULT_STATE_CAP, StateCapExceeded, StateSpace, generate_state_space

SWEEP_PARAMETERS = ("gamma", "epsilon", "epochs")


def derive_seed(base_seed: int, value_index: int, repetition: int) -> int:
    """Seed for one sweep cell.

    ``SeedSequence([base_seed, value_index, repetition])`` drawn down to one
    uint64, so cells are reproducible and decorrelated across values.
    """
    state = np.random.SeedSequence([base_seed, value_index, repetition]).generate_state(1, dtype=np.uint64)
    return int(state[0])


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    values: tuple
    scenario: Scenario
    repetitions: int = 5
    base: TrainConfig = field(default_factory=TrainConfig)
    state_cap: int = DEFAULT_STATE_CAP

    def violations(self) -> list[str]:
        out = []
        if self.parameter not in SWEEP_PARAMETERS:
            out.append(f"parameter must be one of {SWEEP_PARAMETERS}")
            return out
        if self.repetitions < 1:
            out.append("repetitions must be >= 1")
        if not self.values:
            out.append("values must not be empty")
        for v in self.values:
            out.extend(replace(self.base, **{self.parameter: v}).violations())
        return out


@dataclass
class SweepRow:
    parameter: str
    value: float
    seed: int
    optimal_reward: float = float("nan")
    improvement_pct: float = float("nan")
    unupdated_count: int = -1
    plan: str = ""
    wall_time_generate: float = 0.0
    wall_time_train: float = 0.0
    error: str = ""


def _sweep_cell(space: StateSpace, parameter: str, value, seed: int, cfg: TrainConfig, gen_time: float) -> SweepRow:
    row = SweepRow(parameter, value, seed, wall_time_generate=gen_time)
    try:
        t0 = time.perf_counter()
        q = train(space, cfg)
        row.wall_time_train = time.perf_counter() - t0
        plan = extract_defense_sequence(space, q, 0)
        row.plan = "-".join(plan.steps)
        row.optimal_reward = plan_value(space, plan, cfg.gamma)
        row.improvement_pct = improvement_percentage(row.optimal_reward, no_defense_baseline(space, 0, cfg.gamma))
        row.unupdated_count = count_unupdated(q)
    except Exception as exc:  # recorded per row; the sweep goes on
        row.error = f"{type(exc).__name__}: {exc}"
    return row


def run_sweep(spec: SweepSpec, out_dir: str | Path | None = None, workers: int = 1) -> list[SweepRow]:
    """Train once per (value, repetition) over a single generated space.

    Rows come back ordered by (value index, repetition) whatever the
    completion order. A CSV is written to ``out_dir`` when given.
    """
    problems = spec.violations()
    if problems:
        raise ValueError("; ".join(problems))
    t0 = time.perf_counter()
    space = generate_state_space(spec.scenario, spec.state_cap)
    gen_time = time.perf_counter() - t0

    jobs = []
    for vi, value in enumerate(spec.values):
        for rep in range(spec.repetitions):
            seed = derive_seed(spec.base.seed, vi, rep)
            cfg = replace(spec.base, **{spec.parameter: value}, seed=seed)
            jobs.append((space, spec.parameter, value, seed, cfg, gen_time))

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_cell, *zip(*jobs)))
    else:
        rows = [_sweep_cell(*job) for job in jobs]

    if out_dir is not None:
        stamp = datetime.now().strftime("%Y%m%dT%H%M%S")
        write_rows_csv(rows, Path(out_dir) / f"sweep_{spec.parameter}_{stamp}.csv")
    return rows


def write_rows_csv(rows: Sequence, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if not rows:
        raise ValueError("no rows to write")
    names = [f.name for f in fields(rows[0])]
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for row in rows:
            writer.writerow([getattr(row, n) for n in names])
    return path


def mean_by_value(rows: Sequence[SweepRow], column: str) -> dict:
    groups: dict = {}
    for row in rows:
        groups.setdefault(row.value, []).append(getattr(row, column))
    return {v: float(np.mean(xs)) for v, xs in groups.items()}


# -- synthetic networks ---------------------------------------------------

@dataclass(frozen=True)
class SynthSpec:
    hosts: int
    topology: str = "chain"
    seed: int = 0
    edge_prob: float = 0.3
    cvss_range: tuple[float, float] = (1.0, 10.0)
    max_retries: int = 100


def synth_scenario(spec: SynthSpec) -> Scenario:
    """Deterministic synthetic network for ``spec``.

    One vulnerability per host (CVSS and patch cost drawn in ``cvss_range``,
    one decimal); catalog = a patch per vulnerability, then a block per
    internet-facing link. ``random`` topologies always link internet->h1 and
    add every other directed pair with ``edge_prob``; draws that leave a
    host unreachable from the internet are retried up to ``max_retries``.
    """
    if spec.hosts < 1:
        raise ValueError("hosts must be >= 1")
    if spec.topology not in ("chain", "random"):
        raise ValueError(f"unknown topology {spec.topology!r}")
    if not (0.0 <= spec.edge_prob <= 1.0):
        raise ValueError("edge_prob out of [0,1]")
    rng = np.random.default_rng(spec.seed)
    names = [f"h{i}" for i in range(1, spec.hosts + 1)]
    lo, hi = spec.cvss_range
    scores = np.round(rng.uniform(lo, hi, size=(spec.hosts, 2)), 1)
    hosts = tuple(
        Host(h, (Vulnerability(f"V{i}", float(scores[i - 1, 0]), float(scores[i - 1, 1])),))
        for i, h in enumerate(names, start=1)
    )

    if spec.topology == "chain":
        links = [Link(INTERNET, names[0])] + [Link(a, b) for a, b in zip(names, names[1:])]
    else:
        candidates = [Link(a, b) for a in [INTERNET] + names for b in names if a != b and (a, b) != (INTERNET, names[0])]
        for _ in range(spec.max_retries):
            keep = rng.random(len(candidates)) < spec.edge_prob
            links = [Link(INTERNET, names[0])] + [c for c, k in zip(candidates, keep) if k]
            if _all_reachable(names, links):
                break
        else:
            raise ScenarioError(
                f"no connected topology after {spec.max_retries} attempts (edge_prob={spec.edge_prob})")

    defenses = [DefenseSpec(f"D{i}", PATCH, h, vuln=f"V{i}") for i, h in enumerate(names, start=1)]
    for link in links:
        if link.src == INTERNET:
            defenses.append(DefenseSpec(f"D{len(defenses) + 1}", BLOCK, link.dst, source=INTERNET))
    return Scenario(hosts, tuple(links), tuple(defenses))


def _all_reachable(names: list[str], links: list[Link]) -> bool:
    seen = {INTERNET}
    frontier = [INTERNET]
    while frontier:
        node = frontier.pop()
        for link in links:
            if link.src == node and link.dst not in seen:
                seen.add(link.dst)
                frontier.append(link.dst)
    return all(h in seen for h in names)


@dataclass
class ScalingRow:
    hosts: int
    states: int
    gen_ms: float
    train_ms: float
    capped: bool = False


def scaling_benchmark(
    host_counts: Sequence[int],
    generator: SynthSpec = SynthSpec(hosts=1),
    cfg: TrainConfig = TrainConfig(),
    state_cap: int = DEFAULT_STATE_CAP,
    out_dir: str | Path | None = None,
) -> list[ScalingRow]:
    """Generation and training wall time per host count (``scaling.csv``).

    The training kernel is compiled (or loaded from cache) before timing.
    """
    train(generate_state_space(synth_scenario(SynthSpec(hosts=1))), replace(cfg, epochs=1))
    rows = []
    for n in host_counts:
        scenario = synth_scenario(replace(generator, hosts=n))
        t0 = time.perf_counter()
        try:
            space = generate_state_space(scenario, state_cap)
        except StateCapExceeded:
            rows.append(ScalingRow(n, state_cap, (time.perf_counter() - t0) * 1e3, float("nan"), capped=True))
            continue
        gen_ms = (time.perf_counter() - t0) * 1e3
        t0 = time.perf_counter()
        train(space, cfg)
        train_ms = (time.perf_counter() - t0) * 1e3
        rows.append(ScalingRow(n, space.n_states, gen_ms, train_ms))
    if out_dir is not None:
        write_rows_csv(rows, Path(out_dir) / "scaling.csv")
    return rows
