"""Batch front end: run benchmarks, list the catalog, study quadrature.

Configuration is a nested dict with four sections (problem, run, quadrature,
schedules), read either from JSON or from flat ``dotted.key = value`` lines.
Every run writes a manifest.json recording the fully resolved configuration;
feeding that manifest back in as --config reproduces the run bit for bit,
wall-clock columns aside.

Exit codes: 0 on a completed run (tolerance reached or iteration cap),
2 on configuration errors, 3 when the basis degenerated.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import time

import numpy as np

from .driver import (
    Schedules,
    default_schedules,
    evaluate_solution,
    run_adaptive,
    write_diagnostics_csv,
    write_epochs_csv,
    write_history_csv,
)
from .forms import build_problem, problem_catalog
from .quadrature import riemann_left

_CONFIG_SECTIONS = ("problem", "run", "quadrature", "schedules", "results")
_RUN_KEYS = ("seed", "condition_cap")
_QUAD_KEYS = ("interior_n", "boundary_n", "interface_n")
_SCHED_KEYS = ("width", "learning_rate", "beta", "epochs", "tol", "max_iterations")


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------------------
# configuration files


def _parse_scalar(text: str):
    s = text.strip()
    if "," in s:
        return [_parse_scalar(part) for part in s.split(",")]
    low = s.lower()
    if low == "true":
        return True
    if low == "false":
        return False
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def _set_dotted(tree: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    node = tree
    for k in keys[:-1]:
        node = node.setdefault(k, {})
        if not isinstance(node, dict):
            raise ConfigError(f"key {dotted!r} descends through a non-section value")
    node[keys[-1]] = value


def parse_flat_config(text: str) -> dict:
    """``dotted.key = value`` lines; '#' comments; commas make lists."""
    tree: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        _set_dotted(tree, key, _parse_scalar(value))
    return tree


def load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as err:
        raise ConfigError(f"cannot read config {path!r}: {err}") from None
    stripped = text.lstrip()
    if path.endswith(".json") or stripped.startswith("{"):
        try:
            tree = json.loads(text)
        except json.JSONDecodeError as err:
            raise ConfigError(f"bad JSON in {path!r}: {err}") from None
        if not isinstance(tree, dict):
            raise ConfigError(f"config {path!r} must hold a JSON object")
        return tree
    return parse_flat_config(text)


def _check_keys(section: str, tree: dict, allowed) -> None:
    unknown = sorted(set(tree) - set(allowed))
    if unknown:
        raise ConfigError(
            f"unknown {section} key(s) {', '.join(map(repr, unknown))}; "
            f"allowed: {', '.join(allowed)}"
        )


def _merge_schedule_tree(base: dict, override: dict) -> dict:
    """Dicts merge per key, anything else replaces the default wholesale."""
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = {**merged[key], **value}
        else:
            merged[key] = value
    return merged


@dataclasses.dataclass
class RunPlan:
    problem_name: str
    quadrature: dict
    schedules: Schedules
    seed: int
    condition_cap: float


def resolve_run_plan(config: dict, args) -> RunPlan:
    """Defaults, then the config file, then command-line flags."""
    _check_keys("config", config, _CONFIG_SECTIONS)
    name = getattr(args, "problem", None) or config.get("problem")
    if not name:
        raise ConfigError("no problem named; pass one or set 'problem' in the config")
    if not isinstance(name, str):
        raise ConfigError(f"problem name must be a string, got {name!r}")

    run_tree = config.get("run", {})
    if not isinstance(run_tree, dict):
        raise ConfigError("'run' section must hold key/value pairs")
    _check_keys("run", run_tree, _RUN_KEYS)
    seed = run_tree.get("seed", 0)
    condition_cap = run_tree.get("condition_cap", 1e12)
    if getattr(args, "seed", None) is not None:
        seed = args.seed

    quad_tree = config.get("quadrature", {})
    if not isinstance(quad_tree, dict):
        raise ConfigError("'quadrature' section must hold key/value pairs")
    _check_keys("quadrature", quad_tree, _QUAD_KEYS)

    try:
        base = default_schedules(name).to_dict()
    except KeyError as err:
        raise ConfigError(err.args[0]) from None
    sched_tree = config.get("schedules", {})
    if not isinstance(sched_tree, dict):
        raise ConfigError("'schedules' section must hold key/value pairs")
    _check_keys("schedules", sched_tree, _SCHED_KEYS)
    merged = _merge_schedule_tree(base, sched_tree)
    for flag, key in (("tol", "tol"), ("epochs", "epochs"),
                      ("max_iterations", "max_iterations")):
        value = getattr(args, flag, None)
        if value is not None:
            merged[key] = value
    try:
        schedules = Schedules.from_dict(merged)
    except (ValueError, TypeError, KeyError) as err:
        raise ConfigError(f"bad schedules: {err}") from None

    return RunPlan(
        problem_name=name,
        quadrature={k: int(v) for k, v in quad_tree.items() if v is not None},
        schedules=schedules,
        seed=int(seed),
        condition_cap=float(condition_cap),
    )


# ---------------------------------------------------------------------------
# artifacts


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.17g" % x


def _out_root() -> str:
    return os.environ.get("GALNN_OUT", "galnn_out")


def _no_nan(x: float):
    return None if isinstance(x, float) and math.isnan(x) else x


def write_manifest(path, plan: RunPlan, state) -> None:
    doc = {
        "problem": plan.problem_name,
        "run": {"seed": plan.seed, "condition_cap": plan.condition_cap},
        "quadrature": plan.quadrature,
        "schedules": plan.schedules.to_dict(),
        "results": {
            "terminated_reason": state.terminated_reason,
            "iterations": state.iteration,
            "final_eta": _no_nan(state.history[-1].eta),
            "true_l2": _no_nan(state.history[-1].true_l2),
            "true_energy": _no_nan(state.history[-1].true_energy),
            "initial_true_l2": _no_nan(state.initial_true_l2),
            "initial_true_energy": _no_nan(state.initial_true_energy),
            "wall_time": state.history[-1].wall_time,
        },
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")


def write_solution_csv(path, state, points_1d: int = 512, points_2d: int = 128) -> None:
    problem = state.problem
    bounds = problem.domain.bounds
    if problem.dim == 1:
        x = np.linspace(bounds[0, 0], bounds[0, 1], points_1d)
        grid = x[:, None]
    else:
        x = np.linspace(bounds[0, 0], bounds[0, 1], points_2d)
        y = np.linspace(bounds[1, 0], bounds[1, 1], points_2d)
        xx, yy = np.meshgrid(x, y, indexing="ij")
        grid = np.column_stack([xx.ravel(), yy.ravel()])
        grid = grid[problem.domain.contains(grid)]
    values = evaluate_solution(state, grid).values
    header = "x,u" if problem.dim == 1 else "x,y,u"
    with open(path, "w", encoding="utf-8") as f:
        f.write(header + "\n")
        for row, u in zip(grid, values):
            f.write(",".join(_fmt(v) for v in (*row, u)) + "\n")


def write_basis_csv(path, net) -> None:
    header = ",".join(f"w{a}" for a in range(net.dim)) + ",b,c"
    with open(path, "w", encoding="utf-8") as f:
        f.write(header + "\n")
        for j in range(net.width):
            f.write(",".join(_fmt(v) for v in (
                *net.weights[:, j], net.biases[j], net.coefficients[j])) + "\n")


def write_run_artifacts(outdir: str, plan: RunPlan, state) -> None:
    os.makedirs(outdir, exist_ok=True)
    write_manifest(os.path.join(outdir, "manifest.json"), plan, state)
    write_history_csv(os.path.join(outdir, "history.csv"), state.history)
    write_epochs_csv(os.path.join(outdir, "epochs.csv"), state.epoch_records)
    write_diagnostics_csv(os.path.join(outdir, "diagnostics.csv"), state.diagnostics)
    if state.basis:
        write_solution_csv(os.path.join(outdir, "solution.csv"), state)
    for i, net in enumerate(state.basis, start=1):
        write_basis_csv(os.path.join(outdir, f"basis_{i:02d}.csv"), net)


# ---------------------------------------------------------------------------
# subcommands


def cmd_run(args) -> int:
    config = load_config(args.config) if args.config else {}
    plan = resolve_run_plan(config, args)
    try:
        problem = build_problem(plan.problem_name, **plan.quadrature)
    except KeyError as err:
        raise ConfigError(err.args[0]) from None

    progress = None
    if not args.quiet:
        def progress(row):
            print(
                f"iter {row.iteration:2d}  n={row.n_i:<6d} eta={row.eta:.6e}  "
                f"cond={row.cond:.3e}  wall={row.wall_time:.1f}s",
                flush=True,
            )

    state = run_adaptive(
        problem, plan.schedules, seed=plan.seed,
        condition_cap=plan.condition_cap, progress=progress,
    )
    outdir = args.out or os.path.join(_out_root(), f"{plan.problem_name}_seed{plan.seed}")
    write_run_artifacts(outdir, plan, state)
    if not args.quiet:
        last = state.history[-1]
        print(
            f"{state.terminated_reason}: {state.iteration} basis function(s), "
            f"last eta {last.eta:.6e}"
        )
        print(f"artifacts in {outdir}")
    return 3 if state.terminated_reason == "degenerate" else 0


def cmd_list(args) -> int:
    catalog = problem_catalog()
    if args.json:
        doc = {
            name: {
                "dim": p.dim,
                "form_kind": p.form_kind,
                "exact_solution": p.exact is not None,
                "description": p.description,
                "default_schedules": p.default_schedules.to_dict(),
            }
            for name, p in catalog.items()
        }
        print(json.dumps(doc, indent=2, sort_keys=True))
        return 0
    rows = [
        (name, f"{p.dim}d", p.form_kind,
         "yes" if p.exact is not None else "no", p.description)
        for name, p in catalog.items()
    ]
    widths = [max(len(r[k]) for r in rows + [("name", "dim", "form", "exact", "")])
              for k in range(4)]
    print("  ".join(h.ljust(w) for h, w in zip(("name", "dim", "form", "exact"), widths))
          + "  description")
    for r in rows:
        print("  ".join(r[k].ljust(widths[k]) for k in range(4)) + f"  {r[4]}")
    return 0


def cmd_quadrature_study(args) -> int:
    nodes = [int(n) for n in args.nodes.split(",") if n.strip()]
    if not nodes or min(nodes) < 1:
        raise ConfigError("--nodes needs a comma-separated list of positive counts")
    outdir = args.out or os.path.join(_out_root(), "quadrature_study")
    os.makedirs(outdir, exist_ok=True)
    schedules = default_schedules("l2_fit")
    if args.epochs is not None:
        schedules = dataclasses.replace(schedules, epochs=args.epochs)
    if args.max_iterations is not None:
        schedules = dataclasses.replace(schedules, max_iterations=args.max_iterations)
    summary = []
    for n in nodes:
        problem = build_problem("l2_fit", interior_n=n)
        if args.rule == "riemann":
            rules = dict(problem.training_rules)
            rules["interior"] = riemann_left(n, 0.0, 1.0)
            problem = dataclasses.replace(problem, training_rules=rules)
        start = time.perf_counter()
        state = run_adaptive(problem, schedules, seed=args.seed)
        elapsed = time.perf_counter() - start
        last = state.history[-1]
        summary.append((args.rule, n, state.iteration, last.eta,
                        last.true_l2, state.terminated_reason))
        write_history_csv(
            os.path.join(outdir, f"history_{args.rule}_{n}.csv"), state.history)
        if not args.quiet:
            print(f"{args.rule} n={n:<6d} iterations={state.iteration:<3d} "
                  f"eta={last.eta:.6e}  true_l2={last.true_l2:.6e}  "
                  f"({state.terminated_reason}, {elapsed:.1f}s)", flush=True)
    with open(os.path.join(outdir, "study.csv"), "w", encoding="utf-8") as f:
        f.write("rule,nodes,iterations,final_eta,final_true_l2,reason\n")
        for rule, n, iters, eta, l2, reason in summary:
            f.write(f"{rule},{n},{iters},{_fmt(eta)},{_fmt(l2)},{reason}\n")
    if not args.quiet:
        print(f"artifacts in {outdir}")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="galnn",
        description="Adaptive Galerkin solves over trained network bases.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one benchmark problem")
    run.add_argument("problem", nargs="?", default=None,
                     help="catalog problem (may come from the config instead)")
    run.add_argument("--config", help="JSON or 'dotted.key = value' config file")
    run.add_argument("--out", help="output directory (default $GALNN_OUT/<problem>_seed<seed>)")
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--tol", type=float, default=None)
    run.add_argument("--epochs", type=int, default=None)
    run.add_argument("--max-iterations", dest="max_iterations", type=int, default=None)
    run.add_argument("--quiet", action="store_true")
    run.set_defaults(func=cmd_run)

    lst = sub.add_parser("list", help="show the problem catalog")
    lst.add_argument("--json", action="store_true")
    lst.set_defaults(func=cmd_list)

    study = sub.add_parser(
        "quadrature-study",
        help="rerun the fitting benchmark over a range of node counts",
    )
    study.add_argument("--nodes", required=True,
                       help="comma-separated interior node counts")
    study.add_argument("--rule", choices=("gauss", "riemann"), default="gauss")
    study.add_argument("--seed", type=int, default=0)
    study.add_argument("--epochs", type=int, default=None)
    study.add_argument("--max-iterations", dest="max_iterations", type=int, default=None)
    study.add_argument("--out", help="output directory (default $GALNN_OUT/quadrature_study)")
    study.add_argument("--quiet", action="store_true")
    study.set_defaults(func=cmd_quadrature_study)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
