"""Command-line entry point: ``taskvariants {gen,solve,sweep,fixture}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import fields
from pathlib import Path

from .bench import PRESETS, SweepSpec, preset, run_sweep
from .flatten import flatten
from .generate import FIXTURES, GenParams, generate
from .io import dump_problem, load_problem
from .model import InvalidInputError
from .solvers import SOLVERS, OracleBudgetExceeded, run_solver

_RANGES = ("capability_range", "cost_range", "reward_range")
_FLAGS = ("integer_capabilities", "fixed_configs")


def _add_gen_flags(p: argparse.ArgumentParser, required: bool) -> None:
    defaults = GenParams(1, 1)
    for f in fields(GenParams):
        flag = "--" + f.name.replace("_", "-")
        if f.name in ("num_robots", "num_tasks"):
            p.add_argument(flag, type=int, required=required, default=None if required else 8 if f.name == "num_robots" else 10)
        elif f.name in _RANGES:
            p.add_argument(flag, type=float, nargs=2, metavar=("LO", "HI"), default=getattr(defaults, f.name))
        elif f.name in _FLAGS:
            p.add_argument(flag, action="store_true")
        elif f.name == "seed":
            continue
        else:
            p.add_argument(flag, type=type(getattr(defaults, f.name)), default=getattr(defaults, f.name))


def _gen_params(args: argparse.Namespace, seed: int) -> GenParams:
    values = {f.name: getattr(args, f.name) for f in fields(GenParams) if f.name != "seed"}
    return GenParams(**{**values, "seed": seed})


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def cmd_gen(args: argparse.Namespace) -> int:
    _emit(dump_problem(generate(_gen_params(args, args.seed))), args.output)
    return 0


def cmd_fixture(args: argparse.Namespace) -> int:
    _emit(dump_problem(FIXTURES[args.name]()), args.output)
    return 0


def cmd_solve(args: argparse.Namespace) -> int:
    if args.instance is None and args.seed is None:
        raise InvalidInputError("give an instance file or --seed to generate one")
    problem = load_problem(args.instance) if args.instance else generate(_gen_params(args, args.seed))
    flat = flatten(problem)
    result = run_solver(args.solver, problem, flat, args.config_seed)
    print(json.dumps(result.to_json(include_timing=not args.no_timing), indent=2))
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    if (args.spec is None) == (args.preset is None):
        raise InvalidInputError("give exactly one of a spec file or --preset")
    if args.spec:
        spec = SweepSpec.from_json(json.loads(Path(args.spec).read_text()))
    else:
        spec = preset(args.preset, seed=args.seed)
    overrides = {}
    if args.runs is not None:
        overrides["runs_per_point"] = args.runs
    if args.oracle:
        overrides["oracle"] = True
    if args.no_timing:
        overrides["record_timing"] = False
    if overrides:
        spec = SweepSpec(**{**spec.__dict__, **overrides})
    result = run_sweep(spec, workers=args.workers)
    _emit(result.csv_text(), args.output)
    mean_prep, max_prep = result.prep_time_stats()
    print(f"instance preparation (excluded from solver time): mean {mean_prep:.4f}s, max {max_prep:.4f}s",
          file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="taskvariants", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a random instance as JSON")
    _add_gen_flags(gen, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("-o", "--output")
    gen.set_defaults(func=cmd_gen)

    solve = sub.add_parser("solve", help="solve one instance, print the result JSON")
    solve.add_argument("instance", nargs="?", help="problem JSON file")
    solve.add_argument("--solver", required=True, choices=SOLVERS + ("exact",))
    solve.add_argument("--seed", type=int, help="generate the instance from this seed instead of a file")
    solve.add_argument("--config-seed", type=int, default=0, help="seed for random_config draws")
    solve.add_argument("--no-timing", action="store_true", help="omit elapsed_s for byte-stable output")
    _add_gen_flags(solve, required=False)
    solve.set_defaults(func=cmd_solve)

    sweep = sub.add_parser("sweep", help="run a parameter sweep, write CSV")
    sweep.add_argument("spec", nargs="?", help="sweep spec JSON file")
    sweep.add_argument("--preset", choices=PRESETS)
    sweep.add_argument("--seed", type=int, default=0, help="base seed for --preset")
    sweep.add_argument("--runs", type=int, help="override runs_per_point")
    sweep.add_argument("--workers", type=int, default=1)
    sweep.add_argument("--oracle", action="store_true", help="also run the exact solver where tractable")
    sweep.add_argument("--no-timing", action="store_true", help="leave mean_time_s empty (reproducible CSV)")
    sweep.add_argument("-o", "--output")
    sweep.set_defaults(func=cmd_sweep)

    fixture = sub.add_parser("fixture", help="print a built-in instance")
    fixture.add_argument("name", choices=sorted(FIXTURES))
    fixture.add_argument("-o", "--output")
    fixture.set_defaults(func=cmd_fixture)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (InvalidInputError, OracleBudgetExceeded, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
