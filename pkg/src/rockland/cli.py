"""Command-line entry point: ``rockland <group> <action> ...``.

Every command prints a JSON report (or CSV for probe sweeps) to stdout.
With ``--out DIR`` the report is also written to a file in ``DIR``;
existing files are left alone unless ``--force`` is given.

Exit status: 0 on success, 1 when a check fails, 2 on bad input.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .diffop import DiffOp, OperatorSpecError, freeze, load_operator
from .lie import AlgebraSpecError, homogeneous_dimension, load_algebra, validate
from .uea import Word, normal_order, render, rockland_laplacian

log = logging.getLogger("rockland")

EXIT_OK, EXIT_CHECK_FAILED, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    """Bad command-line input; reported with exit status 2."""


@dataclass
class RunConfig:
    command: str
    seed: int = 0
    tol: float | None = None
    options: dict = field(default_factory=dict)
    out: str | None = None


def _floats(text: str) -> list:
    """``"1,2.5,10"`` or a log grid ``"log:lo:hi:n"``."""
    try:
        if text.startswith("log:"):
            lo, hi, n = text[4:].split(":")
            return [float(x) for x in np.geomspace(float(lo), float(hi), int(n))]
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InputError(f"expected a comma-separated list of numbers or log:lo:hi:n, got {text!r}") from None


def _ints(text: str) -> list:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InputError(f"expected a comma-separated list of integers, got {text!r}") from None


def _box(text: str | None, dim: int, default: float) -> np.ndarray:
    """``"a"`` -> [-a, a] on every axis; ``"lo:hi"`` on every axis; or one ``lo:hi`` per axis."""
    if text is None:
        return np.tile([-default, default], (dim, 1))
    parts = [p for p in text.split(",") if p.strip()]
    sides = []
    for p in parts:
        try:
            if ":" in p:
                lo, hi = (float(x) for x in p.split(":"))
            else:
                hi = abs(float(p))
                lo = -hi
        except ValueError:
            raise InputError(f"cannot parse box side {p!r}") from None
        sides.append([lo, hi])
    if len(sides) == 1:
        sides = sides * dim
    if len(sides) != dim:
        raise InputError(f"box needs 1 or {dim} sides, got {len(sides)}")
    box = np.asarray(sides, dtype=float)
    if np.any(box[:, 1] < box[:, 0]):
        raise InputError("box sides must satisfy lo <= hi")
    return box


class Reporter:
    def __init__(self, cfg: RunConfig, force: bool):
        self.cfg = cfg
        self.force = force

    def emit(self, name: str, text: str, echo: bool = True):
        text = text if text.endswith("\n") else text + "\n"
        path = None
        if self.cfg.out is not None:
            path = Path(self.cfg.out) / name
            if path.exists() and not self.force:
                raise InputError(f"{path} exists; pass --force to overwrite")
        if echo:
            sys.stdout.write(text)
        if path is not None:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text)

    def json(self, name: str, payload: dict):
        body = {"config": asdict(self.cfg), **payload}
        self.emit(name, json.dumps(body, indent=2, sort_keys=True, default=_jsonable))


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, complex):
        return [x.real, x.imag]
    raise TypeError(f"cannot serialise {type(x).__name__}")


# --------------------------------------------------------------------------
# commands


def cmd_algebra(args, rep: Reporter) -> int:
    alg = load_algebra(args.file)
    if args.action == "validate":
        violations = validate(alg)
        rep.json(
            "algebra_validate.json",
            {"algebra": alg.name, "violations": [{"kind": v.kind, "indices": list(v.indices), "detail": v.detail} for v in violations]},
        )
        return EXIT_CHECK_FAILED if violations else EXIT_OK
    info = {
        "algebra": alg.name,
        "labels": list(alg.labels),
        "degrees": list(alg.degrees),
        "dim": alg.dim,
        "step": alg.step,
        "homogeneous_dimension": homogeneous_dimension(alg),
        "generators": [alg.labels[j] for j in alg.generators],
        "rockland_laplacian": render(rockland_laplacian(alg)) if alg.generators else None,
        "violations": len(validate(alg)),
    }
    rep.json("algebra_info.json", info)
    return EXIT_OK


def cmd_uea(args, rep: Reporter) -> int:
    alg = load_algebra(args.algebra)
    try:
        word = Word.parse(args.word, alg, generators_only=False)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    nf = normal_order(alg, word)
    rep.json(
        "uea_normal_order.json",
        {
            "algebra": alg.name,
            "word": str(word),
            "normal_form": render(nf),
            "terms": [{"exponents": list(m), "coeff": [c.real, c.imag]} for m, c in sorted(nf.terms.items())],
        },
    )
    return EXIT_OK


def cmd_rockland(args, rep: Reporter) -> int:
    from .heisenberg import rockland_constant

    P = load_operator(args.op)
    rng = np.random.default_rng(args.seed)
    box = _box(args.box, P.alg.dim, 2.0)
    pts = box[:, 0] + (box[:, 1] - box[:, 0]) * rng.random((args.samples, P.alg.dim))
    pts = np.vstack([np.zeros(P.alg.dim), pts])
    report = rockland_constant(P, pts, n_max=args.n_max, N=args.N, threshold=args.tol or 1e-8)
    rep.json("rockland_check.json", report.to_dict())
    return EXIT_OK


def cmd_partition(args, rep: Reporter) -> int:
    from .covering import build_partition, greedy_net, load_partition, overlap_counts

    source = Path(args.algebra)
    if args.action == "verify" and source.suffix == ".json" and source.exists() and "centers" in source.read_text():
        part = load_partition(source)
        alg = part.alg
    else:
        alg = load_algebra(args.algebra)
        box = _box(args.box, alg.dim, 4.0)
        centers = greedy_net(alg, box, args.eps, seed=args.seed)
        part = build_partition(alg, centers, args.eps, args.N, box)
    stats = part.verify(n_samples=args.samples, seed=args.seed)
    d_hom = homogeneous_dimension(alg)
    overlaps = {}
    for k in sorted({1, int(part.N)}):
        counts = overlap_counts(alg, part.centers, k * part.eps)
        overlaps[str(k)] = {"max": int(counts.max()), "bound": (4 * k + 1) ** d_hom}
    stats["overlaps"] = overlaps
    stats["ok"] = bool(stats["ok"] and all(v["max"] <= v["bound"] for v in overlaps.values()))
    part.stats = stats
    payload = part.to_dict()
    rep.json(f"partition_{args.action}.json", payload)
    return EXIT_OK if stats["ok"] else EXIT_CHECK_FAILED


def _calculus(alg, n, half_width):
    from .lattice import Grid, SpectralCalculus

    return SpectralCalculus(Grid.cube(alg, half_width, n))


def cmd_estimate(args, rep: Reporter) -> int:
    from .covering import build_partition, greedy_net
    from .lattice import estimate_probe, report_json, reports_to_csv, scan_shift

    P = load_operator(args.op)
    mode = {"localize": "localization"}.get(args.action, args.action)
    grids = _ints(args.grid)
    cs = _floats(args.c) if mode != "localization" else [None]
    part = None
    if mode == "localization":
        box = np.tile([-args.half_width, args.half_width], (P.alg.dim, 1))
        part = build_partition(P.alg, greedy_net(P.alg, box, args.eps, seed=args.seed), args.eps, 2.0, box)
    if args.target is not None and mode == "localization":
        raise InputError("--target applies to the forward and backward probes only")
    reports = []
    thresholds = {}
    for n in grids:
        calc = _calculus(P.alg, n, args.half_width)
        if args.target is not None:
            found, c_adm = scan_shift(mode, P, calc, cs, args.target, s=args.s, seed=args.seed, n_tests=args.n_tests)
            reports.extend(found)
            thresholds[n] = c_adm
            print(f"rockland: grid {n}: smallest admissible c for target {args.target:g}: {c_adm}", file=sys.stderr)
            continue
        for c in cs:
            reports.append(
                estimate_probe(mode, P, calc, s=args.s, c=c, partition=part, seed=args.seed, n_tests=args.n_tests)
            )
    rep.emit(f"estimate_{args.action}.csv", reports_to_csv(reports))
    if rep.cfg.out is not None:
        payload = json.loads(report_json(reports, asdict(rep.cfg)))
        if thresholds:
            payload["smallest_admissible_c"] = {str(n): c for n, c in thresholds.items()}
        rep.emit(f"estimate_{args.action}.json", json.dumps(payload, indent=2, sort_keys=True), echo=False)
    return EXIT_OK if all(r.min_ratio > 0 for r in reports) else EXIT_CHECK_FAILED


def cmd_positivity(args, rep: Reporter) -> int:
    from .heisenberg import positivity_transfer_check
    from .lattice import Grid, build_operator

    P = load_operator(args.op)
    if P.uses_variables():
        raise InputError("positivity check needs a constant-coefficient operator")
    D = freeze(P, np.zeros(P.alg.dim))
    grid = Grid.cube(P.alg, args.half_width, args.grid)
    tol = args.tol or 1e-10
    try:
        report = positivity_transfer_check(D, args.N, build_operator(DiffOp.from_uea(D), grid), tol=tol)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    rep.json("positivity.json", {"operator": render(D), **report})
    return EXIT_OK if report["consistent"] else EXIT_CHECK_FAILED


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="RNG seed recorded in every report")
    common.add_argument("--tol", type=float, default=None, help="tolerance override")
    common.add_argument("--out", default=None, help="directory for report files")
    common.add_argument("--force", action="store_true", help="overwrite existing report files")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="rockland", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="group", required=True)

    a = sub.add_parser("algebra", help="validate or describe a graded Lie algebra", parents=[common])
    a.add_argument("action", choices=["validate", "info"])
    a.add_argument("file", help="JSON spec or builtin name")
    a.set_defaults(func=cmd_algebra)

    u = sub.add_parser("uea", help="PBW normal ordering", parents=[common])
    u.add_argument("action", choices=["normal-order"])
    u.add_argument("algebra")
    u.add_argument("word")
    u.set_defaults(func=cmd_uea)

    r = sub.add_parser("rockland", help="Rockland constant on the Heisenberg group", parents=[common])
    r.add_argument("action", choices=["check"])
    r.add_argument("op")
    r.add_argument("--n-max", type=int, default=200)
    r.add_argument("--N", type=int, default=None)
    r.add_argument("--samples", type=int, default=64, help="coefficient sample points")
    r.add_argument("--box", default=None)
    r.set_defaults(func=cmd_rockland)

    q = sub.add_parser("partition", help="epsilon-net and partition of unity", parents=[common])
    q.add_argument("action", choices=["build", "verify"])
    q.add_argument("algebra", help="algebra spec/builtin, or a partition dump for verify")
    q.add_argument("--eps", type=float, default=1.0)
    q.add_argument("--N", type=float, default=2.0)
    q.add_argument("--box", default=None, help="'a', 'lo:hi' or one lo:hi per axis")
    q.add_argument("--samples", type=int, default=10_000)
    q.set_defaults(func=cmd_partition)

    e = sub.add_parser("estimate", help="lattice probes of elliptic estimates", parents=[common])
    e.add_argument("action", choices=["forward", "backward", "localize"])
    e.add_argument("op")
    e.add_argument("--grid", default="16", help="points per axis, comma-separated for a sweep")
    e.add_argument("--s", type=float, default=0.0)
    e.add_argument("--c", default="10", help="shifts: comma-separated or log:lo:hi:n")
    e.add_argument("--target", type=float, default=None, help="report the smallest shift whose min_ratio reaches this")
    e.add_argument("--half-width", type=float, default=4.0)
    e.add_argument("--n-tests", type=int, default=20)
    e.add_argument("--eps", type=float, default=1.5, help="net radius for localize")
    e.set_defaults(func=cmd_estimate)

    s = sub.add_parser("positivity", help="positivity transfer to Schrodinger representations", parents=[common])
    s.add_argument("op")
    s.add_argument("--N", type=int, default=50)
    s.add_argument("--grid", type=int, default=8)
    s.add_argument("--half-width", type=float, default=4.0)
    s.set_defaults(func=cmd_positivity)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    options = {k: v for k, v in vars(args).items() if k not in ("func", "seed", "tol", "out", "force", "verbose")}
    cfg = RunConfig(command=f"{args.group} {getattr(args, 'action', '')}".strip(), seed=args.seed, tol=args.tol, options=options, out=args.out)
    rep = Reporter(cfg, args.force)
    try:
        return args.func(args, rep)
    except (InputError, AlgebraSpecError, OperatorSpecError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"rockland: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
