"""Command-line front end: ``generate``, ``solve``, ``bench`` and ``inspect``.

Exit codes: 0 on success, 1 on numeric or degenerate-instance failures,
2 on usage and parse errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from .groebner import NotZeroDimensionalError
from .poly import format_monomial
from .problems import REGISTRY, get_problem
from .solver import NumericFailure, solve
from .template import (GeneratorOptions, TemplateError, TemplateFormatError, deserialize,
                       generate_template, serialize)
from .zp_field import DEFAULT_PRIME, is_prime

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2
SEED_ENV = "GAPS_SEED"
GT_TOL = 1e-6


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    subcommand: str
    problem: str | None = None
    template: str | None = None
    instance: str | None = None
    output: str | None = None
    count: int = 0
    options: dict = field(default_factory=dict)

    def validate(self) -> None:
        o = self.options
        if "p" in o and not is_prime(o["p"]):
            raise UsageError(f"--p {o['p']} is not prime")
        if o.get("trials", 1) < 1:
            raise UsageError("--trials must be positive")
        if self.subcommand == "solve" and bool(self.instance) == bool(o.get("random")):
            raise UsageError("solve needs exactly one of INSTANCE or --random")
        if self.subcommand == "bench" and self.count < 0:
            raise UsageError("count must be non-negative")


def _seed(value) -> int:
    if value is not None:
        return value
    env = os.environ.get(SEED_ENV)
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"{SEED_ENV}={env!r} is not an integer") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="elimtemplate",
                                 description="Elimination-template solver generator.")
    sub = ap.add_subparsers(dest="subcommand", required=True)

    g = sub.add_parser("generate", help="generate a solver template for a registered problem")
    g.add_argument("problem")
    g.add_argument("-o", "--output", help="output file (default: <problem>.gaps.json)")
    g.add_argument("--p", type=int, default=DEFAULT_PRIME, help="prime for the Z_p trials")
    g.add_argument("--trials", type=int, default=5)
    g.add_argument("--seed", type=int, default=None, help=f"RNG seed (default: ${SEED_ENV} or 0)")
    g.add_argument("--alpha", default=None, help="action variable (default: first unknown)")
    g.add_argument("--syzygy", action="store_true", help="apply syzygy reduction")
    g.add_argument("--triangular", action="store_true", help="apply triangular reduction")
    g.add_argument("--no-symmetry", action="store_true", help="skip sign-symmetry detection")

    s = sub.add_parser("solve", help="solve an instance with a template")
    s.add_argument("template")
    s.add_argument("instance", nargs="?")
    s.add_argument("--random", action="store_true", help="draw an instance from the real sampler")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--method", choices=("eigen", "charpoly"), default="eigen")
    s.add_argument("--symmetry", choices=("expand", "representatives"), default="expand",
                   help="print full symmetry orbits or one representative each")
    s.add_argument("--json", action="store_true")

    b = sub.add_parser("bench", help="time and check a template on random instances")
    b.add_argument("template")
    b.add_argument("count", type=int)
    b.add_argument("--seed", type=int, default=None)
    b.add_argument("--json", action="store_true")

    i = sub.add_parser("inspect", help="print a template in readable form")
    i.add_argument("template")
    return ap


def _load_template(path: str):
    try:
        with open(path, "rb") as fh:
            return deserialize(fh.read())
    except OSError as exc:
        raise UsageError(f"cannot read template {path!r}: {exc.strerror}") from None
    except TemplateFormatError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _load_instance(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read instance {path!r}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg} (offset {exc.pos})") from None
    if not isinstance(data, dict):
        raise UsageError(f"{path}: instance must be a JSON object keyed by argument name")
    return data


def _problem_for(t):
    try:
        return get_problem(t.problem)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None


def _fmt(z: complex) -> str:
    if abs(z.imag) <= 1e-12 * (1 + abs(z.real)):
        return f"{z.real:.12g}"
    return f"{z.real:.12g}{z.imag:+.12g}j"


# -- subcommands -------------------------------------------------------------------------


def cmd_generate(cfg: RunConfig, out=sys.stdout) -> int:
    if cfg.problem not in REGISTRY:
        raise UsageError(f"unknown problem {cfg.problem!r}; known: {', '.join(sorted(REGISTRY))}")
    problem = get_problem(cfg.problem)
    o = cfg.options
    opts = GeneratorOptions(p=o["p"], trials=o["trials"], seed=o["seed"], alpha=o.get("alpha"),
                            syzygy_reduction=o["syzygy"], triangular_reduction=o["triangular"],
                            detect_symmetry=not o["no_symmetry"])
    try:
        t = generate_template(problem, opts)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    path = cfg.output or f"{cfg.problem}.gaps.json"
    with open(path, "wb") as fh:
        fh.write(serialize(t))
    rows, cols = t.shape
    print(f"problem     {t.problem}", file=out)
    print(f"|B|         {len(t.basis)}", file=out)
    print(f"template    {rows} x {cols} (E={len(t.excessive)} R={len(t.reducible)} "
          f"B={len(t.basis)})", file=out)
    if t.reduction:
        print(f"triangular  {t.reduction.size} rows eliminated up front", file=out)
    sym = ("flip " + ",".join(t.unknowns[k] for k in t.symmetry.variables)) if t.symmetry else "none"
    print(f"symmetry    {sym}", file=out)
    v = t.metadata.get("validation", {})
    print(f"validation  ok (gb_match={v.get('gb_match')}, ground_truth={v.get('ground_truth')})",
          file=out)
    print(f"wrote       {path}", file=out)
    return EXIT_OK


def _solution_records(t, ss, problem=None, inputs=None, gt=None) -> list:
    recs = []
    for s in ss:
        rec = {"values": {n: [v.real, v.imag] for n, v in zip(t.unknowns, s.values)},
               "eigenvalue": [s.eigenvalue.real, s.eigenvalue.imag],
               "residual": s.max_residual, "real": s.is_real}
        if gt is not None:
            rec["gt_error"] = problem.ground_truth_error(inputs, s.values, gt)
        recs.append(rec)
    return recs


def cmd_solve(cfg: RunConfig, out=sys.stdout) -> int:
    t = _load_template(cfg.template)
    o = cfg.options
    gt = problem = None
    if o.get("random"):
        problem = _problem_for(t)
        inputs, gt = problem.rand_arg_rl(np.random.default_rng(o["seed"]))
    else:
        inputs = _load_instance(cfg.instance)
    try:
        flat = t.flatten_inputs(inputs)
        flat = {k: float(v) for k, v in flat.items()}
    except (KeyError, ValueError, TypeError) as exc:
        raise UsageError(f"instance does not match the template arguments: {exc}") from None
    ss = solve(t, flat, method=o["method"], expand_symmetry=o["symmetry"] == "expand", flat=True)
    recs = _solution_records(t, ss, problem, inputs, gt)
    best = min((r["gt_error"] for r in recs), default=float("inf")) if gt is not None else None
    if o.get("json"):
        payload = {"template": t.problem, "method": o["method"], "solutions": recs,
                   "warnings": ss.warnings}
        if gt is not None:
            payload["ground_truth_error"] = best
        json.dump(payload, out, indent=1)
        out.write("\n")
    else:
        for k, r in enumerate(recs):
            print(f"solution {k}" + ("" if r["real"] else " (complex)"), file=out)
            for n, (re, im) in r["values"].items():
                print(f"  {n} = {_fmt(complex(re, im))}", file=out)
            print(f"  eigenvalue = {_fmt(complex(*r['eigenvalue']))}", file=out)
            print(f"  residual = {r['residual']:.3e}", file=out)
            if "gt_error" in r:
                print(f"  ground-truth error = {r['gt_error']:.3e}", file=out)
        for w in ss.warnings:
            print(f"warning: {w}", file=out)
        print(f"{len(recs)} solution(s), {len(ss.real_solutions())} real", file=out)
        if gt is not None:
            verdict = "matched" if best <= GT_TOL else "NOT matched"
            print(f"ground truth {verdict} (best error {best:.3e})", file=out)
    return EXIT_OK


def _percentile(a, q):
    return float(np.percentile(a, q)) if len(a) else float("nan")


def run_bench(t, count: int, seed: int) -> dict:
    problem = _problem_for(t)
    rng = np.random.default_rng(seed)
    instances = [problem.rand_arg_rl(rng) for _ in range(count)]
    table = {}
    for method in ("eigen", "charpoly"):
        times, logres, failures = [], [], 0
        for inputs, gt in instances:
            t0 = time.perf_counter()
            try:
                ss = solve(t, inputs, method=method, expand_symmetry=True)
            except NumericFailure:
                failures += 1
                continue
            times.append(time.perf_counter() - t0)
            res = [s.max_residual for s in ss.real_solutions()]
            if res:
                logres.append(np.log10(max(min(res), 1e-300)))
            errs = [problem.ground_truth_error(inputs, s.values, gt) for s in ss.real_solutions()]
            if not errs or min(errs) > GT_TOL:
                failures += 1
        table[method] = {
            "count": count,
            "median_ms": 1e3 * _percentile(times, 50),
            "p95_ms": 1e3 * _percentile(times, 95),
            "median_log10_residual": _percentile(logres, 50),
            "max_log10_residual": float(max(logres)) if logres else float("nan"),
            "failure_rate": failures / count if count else 0.0,
        }
    return table


def cmd_bench(cfg: RunConfig, out=sys.stdout) -> int:
    t = _load_template(cfg.template)
    table = run_bench(t, cfg.count, cfg.options["seed"])
    if cfg.options.get("json"):
        json.dump(table, out, indent=1)
        out.write("\n")
        return EXIT_OK
    head = f"{'method':<9} {'n':>6} {'median ms':>10} {'p95 ms':>9} {'med log10 res':>14} " \
           f"{'max log10 res':>14} {'fail rate':>10}"
    print(head, file=out)
    for m, r in table.items():
        if not r["count"]:
            continue
        print(f"{m:<9} {r['count']:>6} {r['median_ms']:>10.3f} {r['p95_ms']:>9.3f} "
              f"{r['median_log10_residual']:>14.2f} {r['max_log10_residual']:>14.2f} "
              f"{r['failure_rate']:>10.4f}", file=out)
    return EXIT_OK


def cmd_inspect(cfg: RunConfig, out=sys.stdout) -> int:
    t = _load_template(cfg.template)
    names = t.unknowns
    mono = lambda m: format_monomial(m, names)  # noqa: E731
    rows, cols = t.shape
    print(f"problem        {t.problem}", file=out)
    print(f"unknowns       {', '.join(names)}", file=out)
    print("known          " + ", ".join(f"{k}{tuple(v)}" for k, v in t.known.items()), file=out)
    print(f"order          {t.order}", file=out)
    print(f"action         {mono(t.alpha)}", file=out)
    print(f"solutions      {t.solution_count}", file=out)
    print(f"template       {rows} x {cols}", file=out)
    print(f"  excessive    {len(t.excessive)}", file=out)
    print(f"  reducible    {len(t.reducible)}: {' '.join(mono(m) for m in t.reducible)}", file=out)
    print(f"  basis        {len(t.basis)}: {' '.join(mono(m) for m in t.basis)}", file=out)
    if t.reduction:
        print(f"triangular     {t.reduction.size} x {t.reduction.size} block", file=out)
    if t.symmetry:
        flip = ", ".join(names[k] for k in t.symmetry.variables)
        print(f"symmetry       sign flip of {{{flip}}}, parities {list(t.symmetry.residues)}", file=out)
    else:
        print("symmetry       none", file=out)
    print(f"program        {len(t.program.instructions)} instructions, "
          f"{len(t.program.outputs)} outputs", file=out)
    print("rows", file=out)
    for k, (m, e) in enumerate(t.rows):
        print(f"  {k:4d}  {mono(m)} * f{e}", file=out)
    print("metadata", file=out)
    for k, v in t.metadata.items():
        print(f"  {k}: {json.dumps(v)}", file=out)
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "solve": cmd_solve, "bench": cmd_bench,
            "inspect": cmd_inspect}


def parse_config(argv=None) -> RunConfig:
    ns = build_parser().parse_args(argv)
    opts = {k: v for k, v in vars(ns).items()
            if k not in ("subcommand", "problem", "template", "instance", "output", "count")}
    if "seed" in opts:
        opts["seed"] = _seed(opts["seed"])
    cfg = RunConfig(ns.subcommand, problem=getattr(ns, "problem", None),
                    template=getattr(ns, "template", None), instance=getattr(ns, "instance", None),
                    output=getattr(ns, "output", None), count=getattr(ns, "count", 0), options=opts)
    cfg.validate()
    return cfg


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    try:
        cfg = parse_config(argv)
        return COMMANDS[cfg.subcommand](cfg, out)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericFailure, NotZeroDimensionalError, TemplateError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
