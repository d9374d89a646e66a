"""Command-line front end: ``droso species | verify | growth | nil``.

Output formats (each file starts with versioned ``#`` header lines):

  droso.census/1   CSV  generation,size,groupoid_growth,subexp_root
  droso.verify/1   JSON {"schema", "config", "p", "depth", "passed", "results": [...]}
  droso.growth/1   CSV  n,dim,gamma,stable
  droso.overlay/1  CSV  n,gamma,lower,upper
  droso.nil/1      JSON lines, one report per sampled element
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

from .dpring import DPRing
from .growth import (BudgetExceeded, GrowthTable, TupleGenerator, bound_overlay, enumerate_growth,
                     gk_fit, q_dimension_fit, stabilize_depth)
from .nilcheck import OutsideHypotheses, check_elements, require_uniform, sample_elements
from .pivots import CHECKS, verify_suite
from .species import Census, Schedule, SpecieError, groupoid_growth, subexp_root

SCHEMAS = {
    "species": "droso.census/1",
    "verify": "droso.verify/1",
    "growth": "droso.growth/1",
    "overlay": "droso.overlay/1",
    "nil": "droso.nil/1",
}


class InputError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    p: int = 2
    schedule: str | None = None
    generations: int | None = None
    tuple_spec: str = "trivial"
    depth: str = "auto"
    max_weight: int = 16
    out: str | None = None
    overlay: str | None = None
    seed: int = 0
    samples: int = 20
    max_n: int | None = None
    relations: list[str] = field(default_factory=list)
    census_only: bool = False
    allow_nonuniform: bool = False
    overlay_c: float = 1.0
    overlay_q: int = 1
    overlay_kappa: float = 1.0
    from_table: str | None = None
    fit_q: int = 2

    def header(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


# --------------------------------------------------------------------------
# parsing helpers


def builtin_schedule(name: str) -> Path:
    path = resources.files("droso") / "data" / "schedules" / f"{name}.json"
    return Path(str(path))


def load_schedule(ref: str | None) -> Schedule:
    if ref is None:
        ref = "clover8"
    path = Path(ref)
    if not path.exists() and not ref.endswith(".json"):
        path = builtin_schedule(ref)
    if not path.exists():
        raise InputError(f"schedule {ref!r} not found")
    try:
        return Schedule.load(path)
    except SpecieError as exc:
        raise InputError(str(exc)) from None


def parse_tuple(spec: str, p: int) -> TupleGenerator:
    """trivial | kappa:K | qkappa:Q,K | constant:S,R | path to a JSON list of [S, R]."""
    try:
        if spec == "trivial":
            return TupleGenerator()
        kind, _, arg = spec.partition(":")
        if kind == "kappa" and arg:
            return TupleGenerator("kappa", kappa=float(arg))
        if kind == "qkappa" and arg:
            q, kappa = arg.split(",")
            return TupleGenerator("qkappa", q=int(q), kappa=float(kappa), p=p)
        if kind == "constant" and arg:
            s, r = arg.split(",")
            return TupleGenerator("constant", s=int(s), r=int(r))
    except ValueError as exc:
        raise InputError(f"bad tuple spec {spec!r}: {exc}") from None
    path = Path(spec)
    if not path.exists():
        raise InputError(f"unknown tuple spec {spec!r}")
    text = path.read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        lines = text.splitlines()
        line = lines[exc.lineno - 1] if exc.lineno <= len(lines) else ""
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}\n    {line}") from None
    pairs = []
    for i, item in enumerate(data if isinstance(data, list) else [None]):
        if not (isinstance(item, list) and len(item) == 2 and all(isinstance(x, int) for x in item)):
            raise InputError(f"{path}: entry #{i} must be a [S, R] pair of integers")
        pairs.append(tuple(item))
    return TupleGenerator("custom", values=tuple(pairs))


def build_ring(cfg: RunConfig, depth: int | None = None) -> DPRing:
    schedule = load_schedule(cfg.schedule)
    specie = schedule.build(cfg.generations)
    depth = specie.depth if depth is None else depth
    if depth > specie.depth:
        raise InputError(f"depth {depth} exceeds the {specie.depth} generations of the schedule")
    try:
        caps = parse_tuple(cfg.tuple_spec, cfg.p).build(specie, depth)
        return DPRing(specie, caps, cfg.p, depth)
    except (ValueError, SpecieError) as exc:
        raise InputError(str(exc)) from None


def fixed_depth(cfg: RunConfig) -> int | None:
    if cfg.depth == "auto":
        return None
    try:
        return int(cfg.depth)
    except ValueError:
        raise InputError(f"--depth must be 'auto' or an integer, got {cfg.depth!r}") from None


def _open(path: str | None, stdout):
    if path is None or path == "-":
        return stdout, False
    return open(path, "w", newline=""), True


def _header(fh, kind: str, cfg: RunConfig) -> None:
    fh.write(f"# schema: {SCHEMAS[kind]}\n# config: {cfg.header()}\n")


# --------------------------------------------------------------------------
# commands


def cmd_species(cfg: RunConfig, stdout=sys.stdout, stderr=sys.stderr) -> int:
    schedule = load_schedule(cfg.schedule)
    fh, close = _open(cfg.out, stdout)
    try:
        _header(fh, "species", cfg)
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["generation", "size", "groupoid_growth", "subexp_root"])
        if cfg.census_only:
            census = Census.from_schedule(schedule)
            for n in range(census.depth + 1):
                size = census.size(n)
                w.writerow([n, size, census.groupoid_growth_log2(n), f"{subexp_root(census, n):.12g}"])
        else:
            specie = schedule.build(cfg.generations)
            for n in range(specie.depth + 1):
                w.writerow([n, specie.size(n), groupoid_growth(specie, 1 << n),
                            f"{subexp_root(specie, n):.12g}"])
    finally:
        if close:
            fh.close()
    return 0


def cmd_verify(cfg: RunConfig, stdout=sys.stdout, stderr=sys.stderr) -> int:
    depth = fixed_depth(cfg)
    ring = build_ring(cfg, depth)
    unknown = [r for r in cfg.relations if r not in CHECKS]
    if unknown:
        raise InputError(f"unknown relations {unknown}; choose from {sorted(CHECKS)}")
    report = verify_suite(ring, ring.depth, cfg.relations or None)
    doc = {"schema": SCHEMAS["verify"], "config": asdict(cfg), **report.as_dict()}
    fh, close = _open(cfg.out, stdout)
    try:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    finally:
        if close:
            fh.close()
    return 0 if report.passed else 1


def _read_table(path: str) -> GrowthTable:
    gamma = []
    with open(path) as fh:
        rows = [line for line in fh if not line.startswith("#")]
    for i, row in enumerate(csv.DictReader(rows)):
        try:
            gamma.append(int(row["gamma"]))
        except (KeyError, TypeError, ValueError):
            raise InputError(f"{path}: data row {i + 1} has no integer 'gamma' column") from None
    return GrowthTable.from_gamma(gamma)


def cmd_growth(cfg: RunConfig, stdout=sys.stdout, stderr=sys.stderr) -> int:
    if cfg.from_table:
        table = _read_table(cfg.from_table)
    else:
        depth = fixed_depth(cfg)
        ring = build_ring(cfg)
        try:
            if depth is None:
                _, table = stabilize_depth(ring, cfg.max_weight)
            else:
                if depth > ring.depth:
                    raise InputError(f"depth {depth} exceeds the schedule")
                table = enumerate_growth(ring, cfg.max_weight, depth)
        except BudgetExceeded as exc:
            print(f"budget exceeded: {exc}", file=stderr)
            return 3
        fh, close = _open(cfg.out, stdout)
        try:
            _header(fh, "growth", cfg)
            fh.write(f"# depth: {table.depth}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["n", "dim", "gamma", "stable"])
            for row in table.rows():
                w.writerow(row)
        finally:
            if close:
                fh.close()
    if cfg.overlay:
        with open(cfg.overlay, "w", newline="") as fh:
            _header(fh, "overlay", cfg)
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["n", "gamma", "lower", "upper"])
            k = table.meta.get("k", 3)
            for n, g in enumerate(table.gamma, 1):
                if n < 3:
                    continue
                lo, hi = bound_overlay(cfg.p, k, n, cfg.overlay_c, cfg.overlay_q, cfg.overlay_kappa)
                w.writerow([n, g, f"{lo:.10g}", f"{hi:.10g}"])
    if len(table.dims) >= 16:
        fit = gk_fit(table)
        line = f"gk_fit slope={fit.slope:.6f} upper={fit.upper:.6f} lower={fit.lower:.6f}"
        if cfg.fit_q != 2:
            line += f" q{cfg.fit_q}_alpha={q_dimension_fit(table, cfg.fit_q):.6f}"
        # keep stdout a clean CSV when the table goes there
        print(line, file=stdout if cfg.from_table or cfg.out else stderr)
    elif cfg.from_table:
        raise InputError("need at least 16 rows to fit")
    return 0


def cmd_nil(cfg: RunConfig, stdout=sys.stdout, stderr=sys.stderr) -> int:
    depth = fixed_depth(cfg)
    if depth is None:
        depth = 3
    ring = build_ring(cfg, depth)
    try:
        label = require_uniform(ring, cfg.allow_nonuniform)
    except OutsideHypotheses as exc:
        raise InputError(str(exc)) from None
    sample = sample_elements(ring, depth, cfg.samples, cfg.seed, cfg.max_weight,
                             allow_nonuniform=cfg.allow_nonuniform)
    reports = check_elements(sample.elements, depth, cfg.max_n)
    fh, close = _open(cfg.out, stdout)
    bad = 0
    try:
        fh.write(json.dumps({"schema": SCHEMAS["nil"], "config": asdict(cfg)}, sort_keys=True) + "\n")
        for rep, w in zip(reports, sample.elements):
            doc = rep.as_dict()
            doc["terms"] = len(w)
            if label:
                doc["note"] = (doc["note"] + "; " if doc["note"] else "") + label
            fh.write(json.dumps(doc, sort_keys=True) + "\n")
            bad += not rep.bound_ok
    finally:
        if close:
            fh.close()
    return 1 if bad else 0


# --------------------------------------------------------------------------
# argument parsing


def _common(sp: argparse.ArgumentParser, p: bool = True) -> None:
    sp.add_argument("--schedule", help="schedule JSON file or built-in name (wild3, clover8, hybrid)")
    sp.add_argument("--generations", type=int, help="only materialize this many generations")
    if p:
        sp.add_argument("--p", type=int, default=2, help="prime")
        sp.add_argument("--tuple", dest="tuple_spec", default="trivial",
                        help="trivial | kappa:K | qkappa:Q,K | constant:S,R | JSON file of [S,R] pairs")
    sp.add_argument("--out", help="output file (default stdout)")


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="droso", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("species", help="generation census (droso.census/1 CSV)")
    _common(s, p=False)
    s.add_argument("--census-only", action="store_true",
                   help="count sizes without building flies (big schedules)")

    v = sub.add_parser("verify", help="relation suite (droso.verify/1 JSON)")
    _common(v)
    v.add_argument("--depth", default="auto", help="truncation depth (auto = all generations)")
    v.add_argument("--relation", dest="relations", action="append", default=[],
                   help=f"restrict to a relation; one of {', '.join(CHECKS)}")

    g = sub.add_parser("growth", help="growth table (droso.growth/1 CSV)")
    _common(g)
    g.add_argument("--max-weight", type=int, default=16)
    g.add_argument("--depth", default="auto", help="auto (stabilize) or an integer")
    g.add_argument("--overlay", help="write reference curves (droso.overlay/1 CSV)")
    g.add_argument("--overlay-c", type=float, default=1.0)
    g.add_argument("--overlay-q", type=int, default=1)
    g.add_argument("--overlay-kappa", type=float, default=1.0)
    g.add_argument("--from-table", help="fit an existing table instead of enumerating")
    g.add_argument("--fit-q", type=int, default=2, help="also report the q-dimension estimate")

    n = sub.add_parser("nil", help="nil indices of seeded samples (droso.nil/1 JSON lines)")
    _common(n)
    n.add_argument("--depth", default="3")
    n.add_argument("--samples", type=int, default=20)
    n.add_argument("--seed", type=int, default=0)
    n.add_argument("--max-n", type=int)
    n.add_argument("--max-weight", type=int, default=6, help="weight bound of sampled basis rows")
    n.add_argument("--allow-nonuniform", action="store_true",
                   help="run on non-uniform tuples (results labelled outside the uniform-tuple hypotheses)")
    return ap


def config_from_args(args: argparse.Namespace) -> RunConfig:
    fields = set(RunConfig.__dataclass_fields__)
    kwargs = {k: v for k, v in vars(args).items() if k in fields and v is not None}
    return RunConfig(**kwargs)


COMMANDS = {"species": cmd_species, "verify": cmd_verify, "growth": cmd_growth, "nil": cmd_nil}


def main(argv: list[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = make_parser().parse_args(argv)
    cfg = config_from_args(args)
    try:
        return COMMANDS[cfg.command](cfg, stdout=stdout, stderr=stderr)
    except (InputError, SpecieError) as exc:
        print(f"droso {cfg.command}: {exc}", file=stderr)
        return 2


def run(argv: list[str]) -> tuple[int, str]:
    """Run in-process and capture stdout (handy for tests)."""
    out, err = io.StringIO(), io.StringIO()
    code = main(argv, out, err)
    return code, out.getvalue() + err.getvalue()


if __name__ == "__main__":
    sys.exit(main())
