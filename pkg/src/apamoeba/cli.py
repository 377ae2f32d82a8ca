"""``apamoeba`` command line.

Every subcommand reads a JSON sum file (see :mod:`apamoeba.specfile`), except
``kronecker`` which takes its vectors as flags. Vectors are comma separated;
write negative values with ``=``, e.g. ``--y=-0.5,1``.
"""
from __future__ import annotations

import argparse
import dataclasses
import io
import logging
import math
import os
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import _kernels
from .amoeba import (
    PGM_LEVELS,
    AmoebaConfig,
    Cell,
    FiberConfig,
    OrderConfig,
    components,
    order_at,
    rasterize_amoeba,
)
from .errors import ApamoebaError, SumSpecError
from .expsum import DomainTooDeepError, ExponentialSum
from .jessen import ArgumentConfig, QuadratureConfig, estimate_jessen
from .kronecker import Exhausted, kronecker_approximate, return_gap_scan
from .outputs import RunOutputs, file_digest, to_json, versions
from .relations import SnapConfig, VerifyConfig, component_relations, component_summary, pair_summary, verify_theorem
from .specfile import describe_frequency, parse_sum_spec

log = logging.getLogger("apamoeba")


class UsageError(Exception):
    pass


def _vector(text: str) -> List[float]:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma separated vector: {text!r}") from None
    if not all(math.isfinite(v) for v in vals):
        raise argparse.ArgumentTypeError("vector entries must be finite")
    return vals


def _interval(text: str):
    try:
        lo, hi = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo:hi, got {text!r}") from None
    if not hi > lo:
        raise argparse.ArgumentTypeError("need lo < hi")
    return lo, hi


def _positive(kind):
    def conv(text):
        v = kind(text)
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be positive: {text}")
        return v

    return conv


def _seed(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def _add_common(p: argparse.ArgumentParser, needs_sum: bool = True) -> None:
    if needs_sum:
        p.add_argument("sum", type=Path, help="JSON sum specification file")
    p.add_argument("--seed", type=_seed, default=0, help="master seed (default 0)")
    p.add_argument(
        "--threads",
        type=_positive(int),
        default=None,
        help="worker threads (default: $APAMOEBA_THREADS or the CPU count)",
    )
    p.add_argument("--out", type=Path, default=None, help="output directory")
    p.add_argument("-v", "--verbose", action="count", default=0)


def _add_quadrature(p):
    g = p.add_argument_group("Jessen quadrature")
    g.add_argument("--s0", type=_positive(float), default=QuadratureConfig.s0, help="first box half width")
    g.add_argument("--stages", type=_positive(int), default=QuadratureConfig.stages, help="box doublings")
    g.add_argument("--batches", type=_positive(int), default=QuadratureConfig.batches)
    g.add_argument("--points", type=_positive(int), default=QuadratureConfig.points_per_batch, help="points per batch")
    g.add_argument("--clip", type=_positive(float), default=QuadratureConfig.clip, help="log|f| floor is -clip")
    g.add_argument("--tol", type=_positive(float), default=QuadratureConfig.tol, help="stabilization tolerance")


def _add_amoeba(p):
    g = p.add_argument_group("raster")
    g.add_argument("--box", type=_interval, action="append", help="lo:hi, once per axis or once for all")
    g.add_argument("--res", type=str, default="121", help="cells per axis, e.g. 121 or 121,61")
    g.add_argument("--tau-in", type=_positive(float), default=AmoebaConfig.tau_in)
    g.add_argument("--tau-out", type=_positive(float), default=AmoebaConfig.tau_out)
    g.add_argument("--fiber-samples", type=_positive(int), default=FiberConfig.samples)
    g.add_argument("--fiber-mode", choices=("torus", "box"), default="torus")


def _add_argument(p):
    g = p.add_argument_group("argument tracking")
    g.add_argument("--T", dest="arg_T", type=_positive(float), default=ArgumentConfig.T, help="path length")
    g.add_argument("--lines", type=_positive(int), default=ArgumentConfig.n_lines)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="apamoeba", description="Amoebas, Jessen functions and mean motions of exponential sums."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="evaluate f at one complex point")
    _add_common(p)
    p.add_argument("--x", type=_vector, required=True, help="real part")
    p.add_argument("--y", type=_vector, required=True, help="imaginary part")

    p = sub.add_parser("jessen", help="Jessen function estimates (CSV)")
    _add_common(p)
    p.add_argument("--y", type=_vector, action="append", default=[], help="point, repeatable")
    p.add_argument("--y-range", type=str, default=None, help="lo:hi:n grid along a line (p = 1)")
    _add_quadrature(p)

    for name, helptext in (
        ("amoeba", "classify a raster; PGM (p = 2), CSV and component report"),
        ("components", "components with orders and pairwise relations"),
        ("verify", "check the three group assertions; exit 1 on failure"),
    ):
        p = sub.add_parser(name, help=helptext)
        _add_common(p)
        _add_amoeba(p)
        _add_quadrature(p)
        _add_argument(p)
        if name == "amoeba":
            p.add_argument("--no-orders", action="store_true", help="skip order estimation")
        if name != "amoeba":
            p.add_argument("--n-max", type=_positive(int), default=SnapConfig.n_max, help="largest denominator")
            p.add_argument("--bound", type=_positive(int), default=SnapConfig.bound, help="largest numerator")

    p = sub.add_parser("mean-motion", help="mean motion at one point by both estimators")
    _add_common(p)
    p.add_argument("--y", type=_vector, required=True)
    p.add_argument("--h", type=_positive(float), default=1e-3, help="finite-difference step")
    _add_quadrature(p)
    _add_argument(p)

    p = sub.add_parser("kronecker", help="solve ||mu t - a - 2 pi m|| < eps")
    _add_common(p, needs_sum=False)
    p.add_argument("--mu", type=_vector, required=True)
    p.add_argument("--a", type=_vector, required=True)
    p.add_argument("--eps", type=_positive(float), required=True)
    p.add_argument("--t-max", type=_positive(float), default=1e4)
    p.add_argument("--gaps", action="store_true", help="also scan return times up to --t-max")
    return parser


# config assembly ---------------------------------------------------------


def _quadrature(a) -> QuadratureConfig:
    return QuadratureConfig(
        s0=a.s0, stages=a.stages, batches=a.batches, points_per_batch=a.points, clip=a.clip, seed=a.seed, tol=a.tol
    )


def _argument(a) -> ArgumentConfig:
    return ArgumentConfig(T=a.arg_T, n_lines=a.lines, seed=a.seed)


def _order(a) -> OrderConfig:
    return OrderConfig(quadrature=_quadrature(a), argument=_argument(a), seed=a.seed)


def _amoeba(a) -> AmoebaConfig:
    return AmoebaConfig(
        tau_in=a.tau_in,
        tau_out=a.tau_out,
        fiber=FiberConfig(mode=a.fiber_mode, samples=a.fiber_samples, seed=a.seed),
        threads=a.threads,
    )


def _box_res(a, p: int):
    box = a.box or [(-3.0, 3.0)]
    if len(box) == 1:
        box = box * p
    if len(box) != p:
        raise UsageError(f"--box given {len(box)} times for a sum in {p} variables")
    try:
        res = [int(v) for v in a.res.split(",")]
    except ValueError:
        raise UsageError(f"bad --res {a.res!r}") from None
    if len(res) == 1:
        res = res * p
    if len(res) != p or min(res) < 2:
        raise UsageError("--res needs one value >= 2 per axis")
    return box, res


def _config_dict(*cfgs) -> Dict:
    out = {}
    for name, c in cfgs:
        d = dataclasses.asdict(c) if dataclasses.is_dataclass(c) else c
        out[name] = _strip_threads(d)
    return out


def _strip_threads(d):
    # thread count never changes results, so it stays out of the manifest
    if isinstance(d, dict):
        return {k: _strip_threads(v) for k, v in d.items() if k != "threads"}
    return d


def _point(v: List[float], p: int, flag: str) -> np.ndarray:
    if len(v) != p:
        raise UsageError(f"{flag} needs {p} coordinates, got {len(v)}")
    return np.array(v)


# output helpers ----------------------------------------------------------


def _fmt(x: float) -> str:
    return repr(float(x))


def _csv(header: Sequence[str], rows) -> bytes:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for r in rows:
        buf.write(",".join(r) + "\n")
    return buf.getvalue().encode()


def _pgm(cells: np.ndarray) -> bytes:
    """Axis 0 (y1) runs left to right, axis 1 (y2) bottom to top."""
    lut = np.zeros(3, dtype=np.uint8)
    for c, v in PGM_LEVELS.items():
        lut[int(c)] = v
    img = lut[cells.T[::-1]]
    h, w = img.shape
    return f"P5\n{w} {h}\n255\n".encode() + img.tobytes()


def _cells_csv(raster) -> bytes:
    p = len(raster.box)
    centers = raster.centers()
    rel = raster.relative.ravel()
    cells = raster.cells.ravel()
    header = [f"y_{j + 1}" for j in range(p)] + ["relative_min", "class"]
    rows = ([_fmt(v) for v in c] + [_fmt(r), Cell(int(k)).name] for c, r, k in zip(centers, rel, cells))
    return _csv(header, rows)


class _Run:
    """Output sink: a :class:`RunOutputs` directory, or stdout when no ``--out``."""

    def __init__(self, args, command: str, default_dir: Optional[str] = None):
        self.args = args
        self.command = command
        target = args.out if args.out is not None else (Path(default_dir) if default_dir else None)
        self.outputs = RunOutputs(target) if target is not None else None
        self.config: Dict = {}

    def emit(self, name: str, data: bytes, echo: bool = False) -> None:
        if self.outputs is None:
            sys.stdout.write(data.decode())
        else:
            self.outputs.write(name, data)
            if echo:
                sys.stdout.write(data.decode())

    def finish(self) -> None:
        if self.outputs is None:
            return
        a = self.args
        sum_path = getattr(a, "sum", None)
        manifest = {
            "command": self.command,
            "seed": a.seed,
            "config": self.config,
            "input": None if sum_path is None else {"name": sum_path.name, "sha256": file_digest(sum_path)},
            "versions": versions(_kernels.BACKEND),
        }
        self.outputs.commit(manifest)


# subcommands -------------------------------------------------------------


def _load(path: Path) -> ExponentialSum:
    try:
        text = path.read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    try:
        return parse_sum_spec(text)
    except SumSpecError as exc:
        raise UsageError(f"{path}: {exc}") from None


def cmd_eval(a) -> int:
    s = _load(a.sum)
    x = _point(a.x, s.dimension, "--x")
    y = _point(a.y, s.dimension, "--y")
    v = s(x + 1j * y)
    run = _Run(a, "eval")
    run.emit("eval.json", to_json({"x": x, "y": y, "value": [v.real, v.imag], "abs": abs(v)}))
    run.finish()
    return 0


def cmd_jessen(a) -> int:
    s = _load(a.sum)
    p = s.dimension
    ys = [_point(v, p, "--y") for v in a.y]
    if a.y_range:
        if p != 1:
            raise UsageError("--y-range is only for sums in one variable")
        try:
            lo, hi, n = a.y_range.split(":")
            ys += [np.array([v]) for v in np.linspace(float(lo), float(hi), int(n))]
        except ValueError:
            raise UsageError(f"bad --y-range {a.y_range!r}, expected lo:hi:n") from None
    if not ys:
        raise UsageError("give at least one --y or --y-range")
    cfg = _quadrature(a)
    run = _Run(a, "jessen")
    run.config = _config_dict(("quadrature", cfg))
    rows = []
    for y in ys:
        e = estimate_jessen(s, y, cfg)
        rows.append(
            [_fmt(v) for v in y]
            + [_fmt(e.value), _fmt(e.std_error), _fmt(e.box_half_width), _fmt(e.clipped_fraction), str(e.stabilized)]
        )
    header = [f"y_{j + 1}" for j in range(p)] + ["J", "stderr", "s", "clipped_fraction", "stabilized"]
    run.emit("jessen.csv", _csv(header, rows))
    run.finish()
    return 0


def _frequency_labels(s: ExponentialSum):
    return [describe_frequency(g, s.basis.labels) for g in s.group.generators]


def cmd_amoeba(a) -> int:
    s = _load(a.sum)
    box, res = _box_res(a, s.dimension)
    acfg = _amoeba(a)
    ocfg = None if a.no_orders else _order(a)
    run = _Run(a, "amoeba", default_dir="out")
    run.config = _config_dict(("amoeba", acfg), ("box", box), ("resolution", res))
    if ocfg is not None:
        run.config.update(_config_dict(("order", ocfg)))
    raster = rasterize_amoeba(s, box, res, acfg)
    if s.dimension == 2:
        run.emit("amoeba.pgm", _pgm(raster.cells))
    run.emit("cells.csv", _cells_csv(raster))
    recs = components(raster, ocfg, threads=a.threads)
    report = {"counts": raster.counts(), "components": [component_summary(r) for r in recs]}
    run.emit("components.json", to_json(report))
    run.finish()
    print(f"{len(recs)} components; cells {raster.counts()}; written to {run.outputs.dir}")
    return 0


def cmd_components(a) -> int:
    s = _load(a.sum)
    box, res = _box_res(a, s.dimension)
    acfg, ocfg = _amoeba(a), _order(a)
    scfg = SnapConfig(n_max=a.n_max, bound=a.bound)
    run = _Run(a, "components", default_dir="out")
    run.config = _config_dict(("amoeba", acfg), ("order", ocfg), ("snap", scfg), ("box", box), ("resolution", res))
    raster = rasterize_amoeba(s, box, res, acfg)
    recs = components(raster, ocfg, threads=a.threads)
    rep = component_relations(recs, s, scfg)
    doc = {
        "basis": _frequency_labels(s),
        "counts": raster.counts(),
        "components": [dict(component_summary(r), status=st) for r, st in zip(rep.components, rep.component_status)],
        "pairs": [pair_summary(p) for p in rep.pairs],
        "empirical_K": rep.empirical_K,
    }
    run.emit("components.json", to_json(doc))
    run.finish()
    for r, st in zip(rep.components, rep.component_status):
        grp = None if r.order_group is None else [str(v) for v in r.order_group]
        print(f"component {r.id}: cells={r.size} order={_short(r.order_numeric)} group={grp} [{st}]")
    return 0


def _short(v) -> str:
    return "None" if v is None else "(" + ", ".join(f"{x:.5f}" for x in v) + ")"


def cmd_mean_motion(a) -> int:
    s = _load(a.sum)
    y = _point(a.y, s.dimension, "--y")
    cfg = OrderConfig(quadrature=_quadrature(a), argument=_argument(a), h_min=a.h, h_fraction=0.0, seed=a.seed)
    run = _Run(a, "mean-motion")
    run.config = _config_dict(("order", cfg))
    grad, arg, wind, diag = order_at(s, y, cfg=cfg)
    doc = {
        "y": y,
        "gradient": list(grad.value),
        "gradient_std_error": list(grad.std_error),
        "gradient_stabilized": grad.stabilized,
        "argument": None if arg is None else list(arg),
        "winding": None if wind is None else list(wind),
        "diagnostics": diag,
    }
    run.emit("mean_motion.json", to_json(doc))
    run.finish()
    return 0


def cmd_verify(a) -> int:
    s = _load(a.sum)
    box, res = _box_res(a, s.dimension)
    cfg = VerifyConfig(amoeba=_amoeba(a), order=_order(a), snap=SnapConfig(n_max=a.n_max, bound=a.bound), threads=a.threads)
    run = _Run(a, "verify", default_dir="out")
    run.config = _config_dict(("verify", cfg), ("box", box), ("resolution", res))
    verdict = verify_theorem(s, box, res, cfg)
    doc = verdict.to_dict()
    doc["basis"] = _frequency_labels(s)
    run.emit("verdict.json", to_json(doc))
    run.finish()
    for key in ("assertion_i", "assertion_ii", "assertion_iii"):
        print(f"{key}: {doc[key]['status']}")
    for e in verdict.errors:
        print(f"error: {e}", file=sys.stderr)
    return 1 if verdict.failed else 0


def cmd_kronecker(a) -> int:
    if len(a.mu) != len(a.a):
        raise UsageError("--mu and --a need the same length")
    res = kronecker_approximate(a.mu, a.a, a.eps, a.t_max)
    run = _Run(a, "kronecker")
    run.config = {"mu": a.mu, "a": a.a, "eps": a.eps, "t_max": a.t_max, "gaps": a.gaps}
    if isinstance(res, Exhausted):
        doc = {"status": "Exhausted", "t_max": res.t_max, "best_t": res.best_t, "best_m": list(res.best_m),
               "best_error": res.best_error}
        text = f"Exhausted up to t={res.t_max!r}; best t={res.best_t!r} m={list(res.best_m)} error={res.best_error!r}\n"
    else:
        doc = {"status": "Solved", "t": res.t, "m": list(res.m), "error": res.achieved_error}
        text = f"t={res.t!r} m={list(res.m)} error={res.achieved_error!r}\n"
    if a.gaps:
        scan = return_gap_scan(a.mu, a.a, a.eps, a.t_max)
        doc["return_times"] = list(scan.times)
        doc["max_gap"] = scan.max_gap
        text += f"{len(scan.times)} return windows, max gap {scan.max_gap!r}\n"
    sys.stdout.write(text)
    if run.outputs is not None:
        run.outputs.write("kronecker.json", to_json(doc))
        run.outputs.write("kronecker.txt", text.encode())
        run.finish()
    else:
        sys.stdout.write(to_json(doc).decode())
    return 0


COMMANDS = {
    "eval": cmd_eval,
    "jessen": cmd_jessen,
    "amoeba": cmd_amoeba,
    "components": cmd_components,
    "mean-motion": cmd_mean_motion,
    "verify": cmd_verify,
    "kronecker": cmd_kronecker,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s"
    )
    if args.threads is not None:
        os.environ["APAMOEBA_THREADS"] = str(args.threads)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"apamoeba: error: {exc}", file=sys.stderr)
        return 2
    except (ApamoebaError, DomainTooDeepError, ValueError) as exc:
        print(f"apamoeba: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
