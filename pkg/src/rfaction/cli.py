"""Command-line front end.

Subcommands: ``build-odometer``, ``torus-residue``, ``analyze-action``,
``verify-residue`` and ``repair-action``.  Reports go to standard output;
domain objects are written with ``--output``.  ``--format machine`` prints
``key=value`` lines in a fixed order.

Exit status: 0 success, 1 verification failed, 2 parse error, 3 invalid
input, 4 budget exceeded.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .crossed import (block_decomposition, connecting_data,
                      render_decomposition, render_limit_skeleton)
from .groups import DEFAULT_CLOSURE_BUDGET, ClosureBudgetExceeded, orbits
from .odometer import build_odometer, check_conjugacy, distance_schedule, is_minimal
from .residue import (MetricAmbient, ProfiniteAmbient, ResidueError,
                      sqrt_value, verify_residue)
from .spaces import truncate
from .stability import AlmostAction, deepest_descent, repair, relator_defect
from .textio import (Document, InvariantError, ParseError, fmt_rational,
                     format_level_action, format_residue, parse_document,
                     parse_rational)
from .torus import (DEFAULT_POINT_BUDGET, FlatTorus, PointBudgetExceeded,
                    TorusAmbient, build_torus_residue)

EXIT_OK, EXIT_FAIL, EXIT_PARSE, EXIT_INVARIANT, EXIT_BUDGET = 0, 1, 2, 3, 4

ENV_CLOSURE = "RFACTION_CLOSURE_BUDGET"
ENV_POINTS = "RFACTION_POINT_BUDGET"


@dataclass
class RunConfig:
    subcommand: str
    inputs: dict
    output: str | None = None
    format: str = "pretty"
    closure_budget: int = DEFAULT_CLOSURE_BUDGET
    point_budget: int = DEFAULT_POINT_BUDGET
    options: dict | None = None

    def __post_init__(self):
        if self.closure_budget <= 0 or self.point_budget <= 0:
            raise ValueError("budgets must be positive")
        for k, v in self.inputs.items():
            if v is not None and not str(v):
                raise ValueError(f"empty path for --{k}")


class Report:
    """Ordered key/value report rendered as ``key=value`` or aligned text."""

    def __init__(self, title: str):
        self.title = title
        self.items: list[tuple[str, str]] = []

    def add(self, key: str, value) -> None:
        if isinstance(value, bool):
            value = "true" if value else "false"
        elif isinstance(value, Fraction):
            value = fmt_rational(value)
        elif isinstance(value, float):
            value = f"{value:.12g}"
        elif isinstance(value, (list, tuple)):
            value = " ".join(fmt_rational(v) if isinstance(v, Fraction) else str(v) for v in value)
        self.items.append((key, str(value)))

    def render(self, fmt: str) -> str:
        if fmt == "machine":
            return "".join(f"{k}={v}\n" for k, v in self.items)
        width = max((len(k) for k, _ in self.items), default=0)
        return f"{self.title}\n" + "".join(f"  {k.ljust(width)}  {v}\n" for k, v in self.items)


def read_document(path: str) -> Document:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return parse_document(text)
    except ParseError as exc:
        raise ParseError(f"{path}: {exc}") from None


def parse_inputs(paths: dict) -> dict:
    """Parse every named input file into a :class:`Document`."""
    return {k: read_document(p) for k, p in paths.items() if p is not None}


def _write(path, text):
    if path:
        Path(path).write_text(text)


def _sq_value(q):
    v = sqrt_value(q)
    return v if isinstance(v, Fraction) else float(v)


# ---------------------------------------------------------------------------
# subcommands


def _space_and_action(space_doc: Document, action_doc: Document | None):
    if space_doc.metrics:
        m = space_doc.one("metrics")
    elif space_doc.profinites:
        p = space_doc.one("profinites")
        m = truncate(p, p.depth)
    else:
        raise InvariantError("space file has no metric or profinite block")
    src = action_doc if action_doc is not None else space_doc
    return m, src.one("actions")


def cmd_build_odometer(cfg: RunConfig, docs) -> tuple[int, str]:
    m, a = _space_and_action(docs["space"], docs["action"])
    raw = cfg.options["thresholds"]
    if raw == "auto":
        ts = distance_schedule(m)
    else:
        ts = tuple(parse_rational(t.strip()) for t in raw.split(","))
    o = build_odometer(m, a, ts)
    rep = Report("odometer")
    rep.add("points", m.size)
    rep.add("thresholds", list(o.provenance))
    rep.add("levels", o.depth)
    rep.add("level_sizes", list(o.level_sizes()))
    rep.add("orbit_counts", [len(orbits(x)) for x in o.action.actions])
    minimal, witness = is_minimal(o)
    rep.add("minimal", minimal)
    if witness is not None:
        rep.add("minimal_witness", list(witness))
    rep.add("conjugacy_defects", [check_conjugacy(o, m, a, n) for n in range(1, o.depth + 1)])
    rep.add("deepest_matches_input", o.action.actions[-1].generator_images == a.generator_images)
    _write(cfg.output, format_level_action(o.action))
    return EXIT_OK, rep.render(cfg.format)


def cmd_torus_residue(cfg: RunConfig, docs) -> tuple[int, str]:
    lat = docs["lattice"].one("lattices")
    gens = docs["generators"].one("generators")
    eps = parse_rational(cfg.options["epsilon"])
    t = FlatTorus(lat)
    tr = build_torus_residue(t, gens, eps, point_budget=cfg.point_budget)
    n = t.dimension
    rep = Report("torus residue")
    rep.add("dimension", n)
    rep.add("epsilon", eps)
    rep.add("delta", tr.delta)
    rep.add("modulus", tr.modulus)
    rep.add("points", tr.residue.size)
    rep.add("proxies", [" ".join(map(str, p)) or "-" for p in tr.proxies] or "-")
    for i, d in enumerate(tr.defect_sq):
        rep.add(f"defect_sq.{i}", d)
        rep.add(f"defect.{i}", _sq_value(d))
    rep.add("density_radius_sq", tr.density_radius_sq)
    rep.add("density_radius", _sq_value(tr.density_radius_sq))
    rep.add("density_bound_sq", tr.density_bound_sq)
    rep.add("passed", tr.passed)
    _write(cfg.output, format_residue(tr.residue))
    return (EXIT_OK if tr.passed else EXIT_FAIL), rep.render(cfg.format)


def cmd_analyze_action(cfg: RunConfig, docs) -> tuple[int, str]:
    fmt = "machine" if cfg.format == "machine" else cfg.options.get("style") or cfg.format
    if docs.get("levels") is not None:
        la = docs["levels"].one("level_actions")
        cd = connecting_data(la, cfg.closure_budget)
        return (EXIT_OK if cd.all_contained else EXIT_FAIL), render_limit_skeleton(cd, fmt)
    a = docs["action"].one("actions")
    bd = block_decomposition(a, cfg.closure_budget)
    return EXIT_OK, render_decomposition(bd, fmt)


def _ambient_for(space_doc: Document):
    if space_doc.metrics:
        return MetricAmbient(space_doc.one("metrics"), space_doc.one("actions"))
    if space_doc.level_actions:
        return ProfiniteAmbient(space_doc.one("level_actions"))
    if space_doc.lattices:
        gens = space_doc.one("generators") if space_doc.generators else []
        return TorusAmbient(FlatTorus(space_doc.one("lattices")), gens)
    raise InvariantError("space file has no metric, levelaction or lattice block")


def cmd_verify_residue(cfg: RunConfig, docs) -> tuple[int, str]:
    r = docs["residue"].one("residues")
    amb = _ambient_for(docs["space"])
    if isinstance(amb, ProfiniteAmbient) and r.labels:
        amb = ProfiniteAmbient(amb.la, len(r.labels[0]))
    witnesses = None
    if docs.get("witness") is not None:
        witnesses = [p for _, pts in docs["witness"].witnesses for p in pts]
    elif isinstance(amb, TorusAmbient):
        raise InvariantError("torus ambients need a --witness file")
    rep_ = verify_residue(r, amb, witnesses)
    rep = Report("residue verification")
    rep.add("points", r.size)
    rep.add("words", len(r.words))
    rep.add("epsilon", r.epsilon)
    rep.add("max_defect_sq", rep_.max_defect_sq)
    rep.add("max_defect", _sq_value(rep_.max_defect_sq))
    rep.add("density_radius_sq", rep_.density_radius_sq)
    rep.add("density_radius", _sq_value(rep_.density_radius_sq))
    rep.add("witnesses", rep_.witness_count)
    rep.add("defect_passed", rep_.defect_passed)
    rep.add("density_passed", rep_.density_passed)
    rep.add("passed", rep_.passed)
    return (EXIT_OK if rep_.passed else EXIT_FAIL), rep.render(cfg.format)


def cmd_repair_action(cfg: RunConfig, docs) -> tuple[int, str]:
    pres = docs["presentation"].one("presentations")
    space = docs["space"].one("profinites")
    maps = docs["generators"].one("actions")
    aa = AlmostAction(space, pres, maps.generator_images)
    rep = Report("repair")
    rep.add("levels", space.depth)
    rep.add("relator_defects", list(relator_defect(aa)) or "-")
    # words are evaluated multiplicatively from generator maps, so pairs never drift
    rep.add("pair_defect", Fraction(0))
    raw = cfg.options.get("level", "auto")
    level = deepest_descent(aa) if raw == "auto" else int(raw)
    if level is None:
        rep.add("level", "none")
        rep.add("passed", False)
        return EXIT_FAIL, rep.render(cfg.format)
    res = repair(aa, level)
    rep.add("level", res.level_used)
    rep.add("distance_bound", res.distance_bound)
    rep.add("measured_distance", res.measured_distance)
    rep.add("passed", res.measured_distance <= res.distance_bound)
    _write(cfg.output, format_level_action(res.exact_action))
    return EXIT_OK, rep.render(cfg.format)


COMMANDS = {
    "build-odometer": (cmd_build_odometer, ("space", "action")),
    "torus-residue": (cmd_torus_residue, ("lattice", "generators")),
    "analyze-action": (cmd_analyze_action, ("action", "levels")),
    "verify-residue": (cmd_verify_residue, ("residue", "space", "witness")),
    "repair-action": (cmd_repair_action, ("presentation", "space", "generators")),
}


def run(cfg: RunConfig) -> tuple[int, str]:
    """Dispatch a subcommand; returns ``(exit status, report text)``."""
    fn, _ = COMMANDS[cfg.subcommand]
    try:
        docs = parse_inputs(cfg.inputs)
        for k in cfg.inputs:
            docs.setdefault(k, None)
        return fn(cfg, docs)
    except ParseError as exc:
        return EXIT_PARSE, f"parse error: {exc}\n"
    except (ClosureBudgetExceeded, PointBudgetExceeded) as exc:
        return EXIT_BUDGET, f"budget exceeded: {exc}\n"
    except (InvariantError, ResidueError, ValueError, AssertionError, IndexError) as exc:
        return EXIT_INVARIANT, f"invalid input: {exc}\n"


def _env_int(name, default):
    v = os.environ.get(name)
    return int(v) if v else default


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rfaction", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="subcommand", required=True)

    def common(sp):
        sp.add_argument("--format", choices=("pretty", "machine"), default="pretty")
        sp.add_argument("--output", help="write the resulting object to this file")
        sp.add_argument("--closure-budget", type=int,
                        default=_env_int(ENV_CLOSURE, DEFAULT_CLOSURE_BUDGET))
        sp.add_argument("--point-budget", type=int,
                        default=_env_int(ENV_POINTS, DEFAULT_POINT_BUDGET))

    sp = sub.add_parser("build-odometer", help="odometer of an isometric action on a finite space")
    sp.add_argument("--space", required=True, help="metric or profinite file")
    sp.add_argument("--action", required=True, help="action file on the space's points")
    sp.add_argument("--thresholds", default="auto", help="comma-separated rationals or 'auto'")
    common(sp)

    sp = sub.add_parser("torus-residue", help="grid residue for torus isometries")
    sp.add_argument("--lattice", required=True)
    sp.add_argument("--generators", required=True)
    sp.add_argument("--epsilon", required=True, help="rational p/q")
    common(sp)

    sp = sub.add_parser("analyze-action", help="crossed-product block structure")
    sp.add_argument("--action")
    sp.add_argument("--levels", help="profinite + levelaction file")
    sp.add_argument("--style", choices=("pretty", "json"), default=None,
                    help="report style when --format is pretty")
    common(sp)

    sp = sub.add_parser("verify-residue", help="check an (epsilon, F)-residue")
    sp.add_argument("--residue", required=True)
    sp.add_argument("--space", required=True,
                    help="metric+action, profinite+levelaction, or lattice+generators file")
    sp.add_argument("--witness")
    common(sp)

    sp = sub.add_parser("repair-action", help="repair an almost action into an exact action")
    sp.add_argument("--presentation", required=True)
    sp.add_argument("--space", required=True, help="profinite file")
    sp.add_argument("--generators", required=True, help="action file with deepest-level maps")
    sp.add_argument("--level", default="auto")
    common(sp)
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    _, names = COMMANDS[ns.subcommand]
    inputs = {k: getattr(ns, k) for k in names}
    options = {k: getattr(ns, k) for k in ("thresholds", "epsilon", "level", "style") if hasattr(ns, k)}
    return RunConfig(ns.subcommand, inputs, ns.output, ns.format,
                     ns.closure_budget, ns.point_budget, options)


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    if ns.subcommand == "analyze-action" and not (ns.action or ns.levels):
        print("analyze-action needs --action or --levels", file=sys.stderr)
        return EXIT_PARSE
    try:
        cfg = config_from_args(ns)
    except ValueError as exc:
        print(f"invalid arguments: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    status, text = run(cfg)
    stream = sys.stdout if status in (EXIT_OK, EXIT_FAIL) else sys.stderr
    stream.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
