"""Amoeba rasters, complement components and the Laurent winding oracle.

The infimum of ``|f(x + iy)|`` over x is what separates amoeba points from
complement points. By default it is searched on the torus of the spectrum
group: with integer coordinates ``B`` of the frequencies in a group basis,
``f(x + iy) = F(Lambda x)`` for the 2*pi-periodic ``F(xi) = sum a_k e^{i B_k xi}``,
and ``Lambda x`` is dense modulo 2*pi, so the infimum over x is the minimum of
``|F|`` over one period cell. A finite x-box search is available as ``mode="box"``.
"""
from __future__ import annotations

import enum
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage

from . import _kernels
from .errors import ApamoebaError, NonConvergedError, NonIntegerError, ZeroOnPathError
from .expsum import ExponentialSum
from .jessen import (
    ArgumentConfig,
    QuadratureConfig,
    argument_increments,
    argument_rates,
    mean_motion_gradient,
)
from .rng import jittered_grid, stream

log = logging.getLogger(__name__)

TWO_PI = 2 * math.pi


class Cell(enum.IntEnum):
    IN = 0
    UNCERTAIN = 1
    OUT = 2


PGM_LEVELS = {Cell.IN: 0, Cell.UNCERTAIN: 128, Cell.OUT: 255}


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get("APAMOEBA_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class FiberConfig:
    mode: str = "torus"
    samples: int = 512
    n_starts: int = 4
    max_iter: int = 40
    box_half_width: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("torus", "box"):
            raise ValueError("mode must be 'torus' or 'box'")
        if self.samples < 1 or self.n_starts < 1 or self.max_iter < 0:
            raise ValueError("samples and n_starts must be positive")
        if self.box_half_width is not None and self.box_half_width <= 0:
            raise ValueError("box_half_width must be positive")


@dataclass(frozen=True)
class FiberEstimate:
    """Numerical infimum of ``|f(x + iy)|`` over x.

    ``relative`` is ``min_modulus`` divided by ``scale``, the largest term
    modulus ``max_k |c_k| e^{-<y, lambda_k>}``. ``argmin`` is in torus
    coordinates for ``mode="torus"`` and in x for ``mode="box"``.
    """

    y: Tuple[float, ...]
    min_modulus: float
    relative: float
    scale: float
    argmin: Tuple[float, ...]
    argmin_x: Optional[Tuple[float, ...]]
    box_half_width: Optional[float]
    sample_count: int
    mode: str
    doubling_decrease: Optional[float] = None


def default_box_half_width(sum_: ExponentialSum) -> float:
    lam = sum_.group.realize(sum_.basis)
    nz = np.abs(lam[lam != 0])
    return 20 * math.pi / (nz.min() if nz.size else 1.0)


def _search_setup(sum_: ExponentialSum, cfg: FiberConfig, half_width: Optional[float] = None):
    if cfg.mode == "torus":
        W = sum_.lift.astype(float)
        d = W.shape[1]
        lo, hi = np.zeros(d), np.full(d, TWO_PI)
        X = None
    else:
        W = sum_.frequencies
        d = W.shape[1]
        X = half_width or cfg.box_half_width or default_box_half_width(sum_)
        lo, hi = np.full(d, -X), np.full(d, X)
    if d == 0:
        return W, np.zeros((1, 0)), X
    rng = stream(cfg.seed, "fiber", cfg.mode, d)
    samples = jittered_grid(rng, cfg.samples, lo, hi)[0]
    return np.ascontiguousarray(W), np.ascontiguousarray(samples), X


def _relative_minima(sum_: ExponentialSum, ys: np.ndarray, W, samples, cfg: FiberConfig):
    """Relative fiber minima and argmins for rows of ys (shared samples)."""
    la = sum_.log_amplitudes(ys)
    top = la.max(axis=1)
    amp = np.exp(la - top[:, None]) * np.exp(1j * np.angle(sum_.coefficients))[None, :]
    if W.shape[1] == 0:
        # single frequency: |f| is constant along every fiber
        return np.abs(amp.sum(axis=1)), np.zeros((len(ys), 0)), top
    rel, arg = _kernels.fiber_search(np.ascontiguousarray(amp), W, samples, cfg.n_starts, cfg.max_iter)
    if cfg.mode == "torus":
        arg = np.mod(arg, TWO_PI)
    return rel, arg, top


def fiber_min_modulus(sum_: ExponentialSum, y, cfg: FiberConfig = FiberConfig()) -> FiberEstimate:
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.shape != (sum_.dimension,):
        raise ValueError(f"y must have shape ({sum_.dimension},)")
    W, samples, X = _search_setup(sum_, cfg)
    rel, arg, top = _relative_minima(sum_, y[None], W, samples, cfg)
    scale = math.exp(top[0]) if top[0] < 709 else math.inf
    argmin = tuple(arg[0].tolist())
    argmin_x = None
    decrease = None
    if cfg.mode == "box":
        argmin_x = argmin
        W2, s2, _ = _search_setup(sum_, cfg, 2 * X)
        rel2, _, _ = _relative_minima(sum_, y[None], W2, s2, cfg)
        decrease = float((rel[0] - min(rel2[0], rel[0])) / rel[0]) if rel[0] > 0 else 0.0
    else:
        lam = sum_.group.realize(sum_.basis)
        if lam.shape[0] == lam.shape[1] and lam.size and abs(np.linalg.det(lam)) > 1e-12:
            argmin_x = tuple(np.linalg.solve(lam, arg[0]).tolist())
        elif lam.shape[0] == 0:
            argmin_x = tuple([0.0] * sum_.dimension)
    return FiberEstimate(
        y=tuple(y.tolist()),
        min_modulus=float(rel[0] * scale),
        relative=float(rel[0]),
        scale=scale,
        argmin=argmin,
        argmin_x=argmin_x,
        box_half_width=X,
        sample_count=int(samples.shape[0]),
        mode=cfg.mode,
        doubling_decrease=decrease,
    )


@dataclass(frozen=True)
class AmoebaConfig:
    tau_in: float = 1e-4
    tau_out: float = 1e-2
    fiber: FiberConfig = FiberConfig()
    chunk: int = 256
    threads: Optional[int] = None

    def __post_init__(self):
        if not 0 < self.tau_in < self.tau_out:
            raise ValueError("need 0 < tau_in < tau_out")
        if self.chunk < 1:
            raise ValueError("chunk must be positive")


def classify_relative(rel, tau_in: float, tau_out: float) -> np.ndarray:
    rel = np.asarray(rel, dtype=float)
    out = np.full(rel.shape, Cell.UNCERTAIN, dtype=np.int8)
    out[rel < tau_in] = Cell.IN
    out[rel > tau_out] = Cell.OUT
    out[~np.isfinite(rel)] = Cell.UNCERTAIN
    return out


def classify_point(sum_: ExponentialSum, y, cfg: AmoebaConfig = AmoebaConfig()) -> Cell:
    """In / Out / Uncertain from the relative fiber minimum and the two thresholds."""
    est = fiber_min_modulus(sum_, y, cfg.fiber)
    return Cell(int(classify_relative(est.relative, cfg.tau_in, cfg.tau_out)))


@dataclass(frozen=True)
class AmoebaRaster:
    sum: ExponentialSum = field(repr=False)
    box: Tuple[Tuple[float, float], ...]
    resolution: Tuple[int, ...]
    cells: np.ndarray = field(repr=False)
    relative: np.ndarray = field(repr=False)
    tau_in: float
    tau_out: float
    failed: int = 0

    @property
    def spacing(self) -> np.ndarray:
        return np.array([(hi - lo) / n for (lo, hi), n in zip(self.box, self.resolution)])

    def axis_centers(self, j: int) -> np.ndarray:
        lo, hi = self.box[j]
        n = self.resolution[j]
        return lo + (np.arange(n) + 0.5) * (hi - lo) / n

    def center(self, index) -> np.ndarray:
        return np.array([self.axis_centers(j)[i] for j, i in enumerate(index)])

    def centers(self) -> np.ndarray:
        """All cell centers in C order, shape (N, p)."""
        grids = np.meshgrid(*[self.axis_centers(j) for j in range(len(self.box))], indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    def counts(self) -> Dict[str, int]:
        return {c.name: int((self.cells == c).sum()) for c in Cell}


def _normalize_box(box, p: int):
    box = tuple((float(lo), float(hi)) for lo, hi in box)
    if len(box) != p:
        raise ValueError(f"box must have {p} axes")
    if any(not hi > lo for lo, hi in box):
        raise ValueError("box axes need lo < hi")
    return box


def rasterize_amoeba(
    sum_: ExponentialSum, box, resolution, cfg: AmoebaConfig = AmoebaConfig()
) -> AmoebaRaster:
    """Classify every cell center of ``box`` split into ``resolution`` cells per axis.

    Cells are processed in fixed-size chunks on a thread pool; the chunking does
    not depend on the thread count, so results are identical for any count.
    """
    p = sum_.dimension
    box = _normalize_box(box, p)
    if isinstance(resolution, int):
        resolution = (resolution,) * p
    resolution = tuple(int(n) for n in resolution)
    if len(resolution) != p or min(resolution) < 2:
        raise ValueError("resolution must be >= 2 on every axis")
    proto = AmoebaRaster(sum_, box, resolution, np.empty(0), np.empty(0), cfg.tau_in, cfg.tau_out)
    ys = proto.centers()
    W, samples, _ = _search_setup(sum_, cfg.fiber)
    rel = np.empty(len(ys))
    chunks = [slice(i, min(i + cfg.chunk, len(ys))) for i in range(0, len(ys), cfg.chunk)]

    def work(sl):
        with np.errstate(all="ignore"):
            rel[sl] = _relative_minima(sum_, ys[sl], W, samples, cfg.fiber)[0]

    threads = cfg.threads or default_threads()
    if threads == 1:
        for sl in chunks:
            work(sl)
    else:
        with ThreadPoolExecutor(threads) as ex:
            list(ex.map(work, chunks))
    failed = int((~np.isfinite(rel)).sum())
    if failed:
        log.warning("%d cells fell outside the numeric range and were marked Uncertain", failed)
    cells = classify_relative(rel, cfg.tau_in, cfg.tau_out).reshape(resolution)
    return replace(proto, cells=cells, relative=rel.reshape(resolution), failed=failed)


@dataclass(frozen=True)
class OrderConfig:
    """How component orders are estimated."""

    quadrature: QuadratureConfig = QuadratureConfig()
    argument: ArgumentConfig = ArgumentConfig()
    h_fraction: float = 0.01
    h_min: float = 1e-4
    winding_lines: int = 3
    convexity_pairs: int = 200
    seed: int = 0


@dataclass(frozen=True)
class ComponentRecord:
    id: int
    cells: np.ndarray = field(repr=False)
    bbox: Tuple[Tuple[float, float], ...]
    representative: Tuple[float, ...]
    representative_index: Tuple[int, ...]
    inradius: float
    order_numeric: Optional[Tuple[float, ...]] = None
    order_error: Optional[Tuple[float, ...]] = None
    order_argument: Optional[Tuple[float, ...]] = None
    winding: Optional[Tuple[int, ...]] = None
    order_group: Optional[Tuple] = None
    diagnostics: Dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return int(len(self.cells))

    @property
    def estimators_agree(self) -> Optional[bool]:
        return self.diagnostics.get("estimators_agree")


def laurent_winding_order(
    sum_: ExponentialSum, y, axis: int, n_lines: int = 3, seed: int = 0, floor: float = 1e-9
) -> int:
    """Winding number of ``x_axis -> f(x + iy)`` over one period ``[-pi, pi]``.

    Requires integer frequency coordinates on ``axis``. The other coordinates
    are drawn at random for each line and every line must give the same
    integer.
    """
    for _, f in sum_.terms:
        row = f.coords[axis]
        if row[0].denominator != 1 or any(row[1:]):
            raise ValueError(f"frequency {f} is not integral on axis {axis}")
    rng = stream(seed, "winding", axis)
    offsets = rng.uniform(-math.pi, math.pi, size=(n_lines, sum_.dimension))
    inc = argument_increments(sum_, y, axis, -math.pi, math.pi, offsets, floor)
    w = inc / TWO_PI
    r = np.rint(w)
    if np.any(np.abs(w - r) > 0.01):
        raise NonIntegerError(f"winding values {w.tolist()} are not integers")
    if np.any(r != r[0]):
        raise NonIntegerError(f"winding differs between lines: {r.tolist()}")
    return int(r[0])


def _inradius(mask: np.ndarray, index, spacing: np.ndarray) -> float:
    if mask.all():
        return float(0.5 * (np.array(mask.shape) * spacing).min())
    padded = np.pad(mask, 1, constant_values=True)
    dist = ndimage.distance_transform_edt(padded, sampling=spacing)
    inner = tuple(i + 1 for i in index)
    return float(max(dist[inner] - 0.5 * spacing.max(), 0.5 * spacing.min()))


def _convexity_check(mask: np.ndarray, allowed: np.ndarray, flat: np.ndarray, n_pairs: int, seed: int, cid: int):
    if len(flat) < 2 or n_pairs == 0:
        return 0, 0
    rng = stream(seed, "convexity", cid)
    idx = np.array(np.unravel_index(flat, mask.shape)).T
    a = idx[rng.integers(0, len(idx), n_pairs)]
    b = idx[rng.integers(0, len(idx), n_pairs)]
    lo = (a + b) // 2
    hi = (a + b + 1) // 2
    ok = allowed[tuple(lo.T)] | allowed[tuple(hi.T)]
    return int((~ok).sum()), n_pairs


def _estimate_order(sum_: ExponentialSum, y: np.ndarray, inradius: float, cfg: OrderConfig):
    p = sum_.dimension
    h = max(cfg.h_fraction * inradius, cfg.h_min)
    diag: Dict = {"step": h}
    grad = mean_motion_gradient(sum_, y, h, cfg.quadrature)
    diag["gradient_stabilized"] = grad.stabilized
    diag["gradient_box_half_width"] = grad.box_half_width
    arg = None
    try:
        rates = [argument_rates(sum_, y, j, cfg.argument) for j in range(p)]
        arg = tuple(float(r.mean()) for r in rates)
        diag["argument_spread"] = [float(r.max() - r.min()) for r in rates]
    except ApamoebaError as exc:
        diag["argument_error"] = f"{type(exc).__name__}: {exc}"
    wind = None
    if sum_.is_laurent():
        try:
            wind = tuple(
                laurent_winding_order(sum_, y, j, cfg.winding_lines, cfg.seed) for j in range(p)
            )
        except ApamoebaError as exc:
            diag["winding_error"] = f"{type(exc).__name__}: {exc}"
    return grad, arg, wind, diag


def components(
    raster: AmoebaRaster,
    cfg: Optional[OrderConfig] = OrderConfig(),
    threads: Optional[int] = None,
    agreement_tol: float = 3e-2,
) -> List[ComponentRecord]:
    """Face-connected components of Out cells, with order estimates.

    Uncertain cells separate components. Pass ``cfg=None`` to skip the order
    estimates.
    """
    sum_ = raster.sum
    p = sum_.dimension
    out = raster.cells == Cell.OUT
    labels, n = ndimage.label(out, structure=ndimage.generate_binary_structure(p, 1))
    spacing = raster.spacing
    allowed_base = raster.cells == Cell.UNCERTAIN
    records = []
    for cid in range(1, n + 1):
        mask = labels == cid
        flat = np.flatnonzero(mask.ravel())
        rel = raster.relative.ravel()[flat]
        best = flat[int(np.argmax(rel))]
        index = tuple(int(i) for i in np.unravel_index(best, mask.shape))
        idx = np.array(np.unravel_index(flat, mask.shape))
        lo = [float(raster.axis_centers(j)[idx[j].min()] - spacing[j] / 2) for j in range(p)]
        hi = [float(raster.axis_centers(j)[idx[j].max()] + spacing[j] / 2) for j in range(p)]
        viol, pairs = _convexity_check(
            mask, mask | allowed_base, flat, cfg.convexity_pairs if cfg else 0, cfg.seed if cfg else 0, cid
        )
        records.append(
            ComponentRecord(
                id=cid - 1,
                cells=flat,
                bbox=tuple(zip(lo, hi)),
                representative=tuple(raster.center(index).tolist()),
                representative_index=index,
                inradius=_inradius(mask, index, spacing),
                diagnostics={
                    "cell_count": int(len(flat)),
                    "representative_relative_min": float(raster.relative[index]),
                    "convexity_violations": viol,
                    "convexity_pairs": pairs,
                },
            )
        )
    if cfg is None:
        return records

    def fill(rec: ComponentRecord) -> ComponentRecord:
        grad, arg, wind, diag = _estimate_order(sum_, np.array(rec.representative), rec.inradius, cfg)
        if arg is not None:
            diag["estimators_agree"] = bool(np.all(np.abs(np.subtract(grad.value, arg)) < agreement_tol))
        if wind is not None:
            diag["winding_matches"] = bool(
                np.all(np.rint(grad.value) == wind) and (arg is None or np.all(np.rint(arg) == wind))
            )
        return replace(
            rec,
            order_numeric=grad.value,
            order_error=grad.std_error,
            order_argument=arg,
            winding=wind,
            diagnostics={**rec.diagnostics, **diag},
        )

    threads = threads or default_threads()
    if threads == 1:
        return [fill(r) for r in records]
    with ThreadPoolExecutor(threads) as ex:
        return list(ex.map(fill, records))


def order_at(sum_: ExponentialSum, y, inradius: float = 0.1, cfg: OrderConfig = OrderConfig()):
    """Gradient estimate, argument estimate and (Laurent) winding numbers at one point."""
    return _estimate_order(sum_, np.atleast_1d(np.asarray(y, dtype=float)), inradius, cfg)
