"""Command-line front end: validate, generate, train, solve, sweep, bench, dump.

Exit codes: 0 success, 1 validation failure, 2 state cap exceeded, 3 I/O
error. Failures print one ``error: <kind>: <message>`` line on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

from .experiments import SWEEP_PARAMETERS, SweepSpec, SynthSpec, mean_by_value, run_sweep, scaling_benchmark
from .policy import extract_defense_sequence, improvement_percentage, no_defense_baseline, plan_value
from .qlearning import count_unupdated, train
from .reports import (
    dump_qtable_text,
    dump_states_text,
    load_qtable,
    load_space,
    save_qtable,
    save_space,
    write_plan,
    write_qtable_csv,
    write_transitions_csv,
)
from .scenario import Scenario, ScenarioError, TrainConfig, scenario_from_document, validate_scenario, parse_scenario
from .statespace import DEFAULT_STATE_CAP, StateCapExceeded, StateSpace, generate_state_space

EXIT_OK, EXIT_VALIDATION, EXIT_CAP, EXIT_IO = 0, 1, 2, 3


class _Fail(Exception):
    def __init__(self, code: int, kind: str, message: str):
        self.code, self.kind, self.message = code, kind, message


def _csv_list(kind):
    def parse(text: str):
        return [kind(x) for x in text.split(",") if x.strip()]
    return parse


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--gamma", type=float)
    common.add_argument("--alpha", type=float)
    common.add_argument("--epsilon", type=float)
    common.add_argument("--epochs", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--ignore-attack-path", action="store_true")
    common.add_argument("--state-cap", type=int, default=DEFAULT_STATE_CAP)
    common.add_argument("--out", default="out", help="output directory (default: ./out)")
    common.add_argument("--format", choices=("text", "csv"), default="text")

    parser = argparse.ArgumentParser(prog="mdp-defense", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="list scenario violations")
    p.add_argument("scenario")
    p = sub.add_parser("generate", parents=[common], help="enumerate the state space")
    p.add_argument("scenario")
    for name, helptext in (("train", "train a Q-table"), ("solve", "extract the optimal defense plan")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("scenario")
        p.add_argument("--space", help="state-space file written by 'generate'")
        if name == "solve":
            p.add_argument("--qtable", help="q-table file written by 'train'")
    p = sub.add_parser("dump", parents=[common], help="per-state text dump of a stored q-table")
    p.add_argument("scenario")
    p.add_argument("--qtable", required=True)
    p.add_argument("--space")
    p = sub.add_parser("sweep", parents=[common], help="parameter sweep to CSV")
    p.add_argument("scenario")
    p.add_argument("--param", choices=SWEEP_PARAMETERS, required=True)
    p.add_argument("--values", type=_csv_list(float), required=True)
    p.add_argument("--repetitions", type=int, default=5)
    p.add_argument("--workers", type=int, default=1)
    p = sub.add_parser("bench", parents=[common], help="scaling benchmark to scaling.csv")
    p.add_argument("--hosts", type=_csv_list(int), default=list(range(2, 9)))
    p.add_argument("--topology", choices=("chain", "random"), default="chain")
    p.add_argument("--synth-seed", type=int, default=0)
    p.add_argument("--edge-prob", type=float, default=0.3)
    return parser


def _read_scenario(path: str, args) -> Scenario:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise _Fail(EXIT_IO, "io", f"cannot read {path}: {exc.strerror}")
    try:
        s = parse_scenario(text)
    except ScenarioError as exc:
        raise _Fail(EXIT_VALIDATION, "validation", str(exc))
    if args.ignore_attack_path:
        s = s.without_attack_path()
    return s


def _config(s: Scenario, args) -> TrainConfig:
    overrides = {k: getattr(args, k) for k in ("gamma", "alpha", "epsilon", "epochs", "seed")
                 if getattr(args, k, None) is not None}
    cfg = replace(s.learning, **overrides)
    problems = cfg.violations()
    if problems:
        raise _Fail(EXIT_VALIDATION, "validation", "; ".join(problems))
    return cfg


def _space(s: Scenario, args) -> StateSpace:
    if getattr(args, "space", None):
        space = load_space(args.space)
        if space.scenario != s:
            raise _Fail(EXIT_VALIDATION, "validation", f"{args.space} was generated from a different scenario")
        return space
    return generate_state_space(s, args.state_cap)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _trained(space: StateSpace, cfg: TrainConfig, args):
    if getattr(args, "qtable", None):
        q = load_qtable(args.qtable)
        if q.values.shape != (space.n_states, space.n_actions):
            raise _Fail(EXIT_VALIDATION, "validation", f"{args.qtable} does not match the state space")
        return q
    return train(space, cfg)


def cmd_validate(args, out) -> int:
    try:
        doc = json.loads(Path(args.scenario).read_text(encoding="utf-8"))
    except OSError as exc:
        raise _Fail(EXIT_IO, "io", f"cannot read {args.scenario}: {exc.strerror}")
    except json.JSONDecodeError as exc:
        raise _Fail(EXIT_VALIDATION, "validation", f"syntax error at line {exc.lineno}, column {exc.colno}: {exc.msg}")
    try:
        problems = validate_scenario(scenario_from_document(doc))
    except ScenarioError as exc:
        problems = exc.violations
    for p in problems:
        out.write(f"violation: {p}\n")
    if problems:
        raise _Fail(EXIT_VALIDATION, "validation", f"{len(problems)} violation(s) in {args.scenario}")
    out.write(f"{args.scenario}: valid\n")
    return EXIT_OK


def cmd_generate(args, out) -> int:
    s = _read_scenario(args.scenario, args)
    t0 = time.perf_counter()
    space = generate_state_space(s, args.state_cap)
    gen_ms = (time.perf_counter() - t0) * 1e3
    d = _out_dir(args)
    with (d / "states.txt").open("w", encoding="utf-8") as fh:
        dump_states_text(space, fh)
    with (d / "transitions.csv").open("w", encoding="utf-8", newline="") as fh:
        write_transitions_csv(space, fh)
    save_space(space, d / "space.json")
    n_trans = sum(1 for _ in space.iter_transitions())
    out.write(f"states={space.n_states} actions={space.n_actions} transitions={n_trans} gen_ms={gen_ms:.1f}\n")
    return EXIT_OK


def cmd_train(args, out) -> int:
    s = _read_scenario(args.scenario, args)
    cfg = _config(s, args)
    space = _space(s, args)
    q = train(space, cfg)
    d = _out_dir(args)
    with (d / "qtable.txt").open("w", encoding="utf-8") as fh:
        dump_qtable_text(space, q, fh)
    with (d / "qtable.csv").open("w", encoding="utf-8", newline="") as fh:
        write_qtable_csv(space, q, fh)
    save_qtable(q, d / "qtable.npz")
    out.write(f"states={space.n_states} unupdated={count_unupdated(q)} of {q.values.size}\n")
    return EXIT_OK


def cmd_solve(args, out) -> int:
    s = _read_scenario(args.scenario, args)
    cfg = _config(s, args)
    space = _space(s, args)
    q = _trained(space, cfg, args)
    plan = extract_defense_sequence(space, q, 0)
    osr = plan_value(space, plan, cfg.gamma)
    ndr = no_defense_baseline(space, 0, cfg.gamma)
    improvement = improvement_percentage(osr, ndr) if ndr != 0 else None
    write_plan(space, plan, out, args.format, osr, ndr, improvement)
    d = _out_dir(args)
    with (d / "plan.txt").open("w", encoding="utf-8") as fh:
        write_plan(space, plan, fh, "text", osr, ndr, improvement)
    with (d / "plan.csv").open("w", encoding="utf-8", newline="") as fh:
        write_plan(space, plan, fh, "csv")
    return EXIT_OK


def cmd_dump(args, out) -> int:
    s = _read_scenario(args.scenario, args)
    space = _space(s, args)
    q = _trained(space, s.learning, args)
    if args.format == "csv":
        write_qtable_csv(space, q, out)
    else:
        dump_qtable_text(space, q, out)
    return EXIT_OK


def cmd_sweep(args, out) -> int:
    s = _read_scenario(args.scenario, args)
    cfg = _config(s, args)
    values = tuple(int(v) for v in args.values) if args.param == "epochs" else tuple(args.values)
    spec = SweepSpec(args.param, values, s, args.repetitions, cfg, args.state_cap)
    problems = spec.violations()
    if problems:
        raise _Fail(EXIT_VALIDATION, "validation", "; ".join(problems))
    rows = run_sweep(spec, _out_dir(args), workers=args.workers)
    for value, mean in mean_by_value(rows, "improvement_pct").items():
        unupdated = mean_by_value([r for r in rows if r.value == value], "unupdated_count")[value]
        out.write(f"{args.param}={value} mean_improvement={mean:.4f} mean_unupdated={unupdated:.1f}\n")
    return EXIT_OK


def cmd_bench(args, out) -> int:
    base = TrainConfig()
    cfg = _config(Scenario((), (), learning=base), args)
    if any(n < 1 for n in args.hosts):
        raise _Fail(EXIT_VALIDATION, "validation", "host counts must be >= 1")
    synth = SynthSpec(hosts=1, topology=args.topology, seed=args.synth_seed, edge_prob=args.edge_prob)
    rows = scaling_benchmark(args.hosts, synth, cfg, args.state_cap, _out_dir(args))
    for r in rows:
        flag = " capped" if r.capped else ""
        out.write(f"hosts={r.hosts} states={r.states} gen_ms={r.gen_ms:.1f} train_ms={r.train_ms:.1f}{flag}\n")
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "generate": cmd_generate,
    "train": cmd_train,
    "solve": cmd_solve,
    "dump": cmd_dump,
    "sweep": cmd_sweep,
    "bench": cmd_bench,
}


def run(argv: list[str] | None = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args, out)
    except _Fail as f:
        err.write(f"error: {f.kind}: {f.message}\n")
        return f.code
    except StateCapExceeded as exc:
        err.write(f"error: resource: {exc}\n")
        return EXIT_CAP
    except ScenarioError as exc:
        err.write(f"error: validation: {exc}\n")
        return EXIT_VALIDATION
    except OSError as exc:
        err.write(f"error: io: {exc}\n")
        return EXIT_IO
    except ValueError as exc:
        err.write(f"error: validation: {exc}\n")
        return EXIT_VALIDATION


def main() -> None:
    sys.exit(run())
