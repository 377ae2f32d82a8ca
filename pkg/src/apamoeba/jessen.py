"""Jessen function and mean motion estimates.

``J_f(y)`` is the mean of ``log|f(x + iy)|`` over the x-box ``[-s, s]^p`` as
``s`` grows. On a zero-free component it is affine and its negative gradient is
the mean motion, which also equals the average growth rate of ``arg f`` along
real lines. Both routes are implemented here so they can check each other.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from . import _kernels
from .errors import NonConvergedError, ZeroOnPathError
from .expsum import ExponentialSum
from .rng import jittered_grid, stream

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class QuadratureConfig:
    """Truncation and sampling policy for the box averages.

    The box half-width runs through ``s0, 2 s0, 4 s0, ...`` until two
    consecutive stages agree within ``tol + 2 (se_k + se_{k+1})``. The default
    ``s0`` is a multiple of pi, so boxes hold whole periods of integer-frequency
    sums.
    """

    s0: float = 8 * math.pi
    stages: int = 5
    batches: int = 16
    points_per_batch: int = 1024
    clip: float = 40.0
    seed: int = 0
    tol: float = 1e-3
    grad_tol: float = 5e-3
    clipped_limit: float = 0.01

    def __post_init__(self):
        if not (self.s0 > 0 and self.clip > 0 and self.tol > 0 and self.grad_tol > 0):
            raise ValueError("s0, clip, tol and grad_tol must be positive")
        if self.stages < 2:
            raise ValueError("need at least two stages to test stabilization")
        if self.batches < 2 or self.points_per_batch < 1:
            raise ValueError("need >= 2 batches and >= 1 point per batch")
        if not 0 < self.clipped_limit <= 1:
            raise ValueError("clipped_limit must lie in (0, 1]")

    @property
    def schedule(self) -> Tuple[float, ...]:
        return tuple(self.s0 * 2.0**k for k in range(self.stages))


@dataclass(frozen=True)
class JessenEstimate:
    y: Tuple[float, ...]
    value: float
    std_error: float
    box_half_width: float
    sample_count: int
    clipped_fraction: float
    stabilized: bool
    stage_values: Tuple[float, ...] = ()
    clipped_limit: float = 0.01

    @property
    def reliable(self) -> bool:
        return self.stabilized and self.clipped_fraction < self.clipped_limit


@dataclass(frozen=True)
class GradientEstimate:
    """Mean motion ``-grad J`` by central differences with per-coordinate std errors."""

    y: Tuple[float, ...]
    value: Tuple[float, ...]
    std_error: Tuple[float, ...]
    step: float
    box_half_width: float
    stabilized: bool
    clipped_fraction: float = 0.0


def _stage_points(cfg: QuadratureConfig, p: int, stage: int) -> np.ndarray:
    s = cfg.schedule[stage]
    rng = stream(cfg.seed, "jessen", p, stage)
    return jittered_grid(rng, cfg.points_per_batch, [-s] * p, [s] * p, cfg.batches)


def box_batch_means(sum_: ExponentialSum, ys, pts: np.ndarray, clip: float):
    """Batch means of clipped ``log|f(x + iy)|`` for every row of ``ys`` on shared samples."""
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    logamp = sum_.log_amplitudes(ys)
    phase = np.angle(sum_.coefficients)
    return _kernels.log_abs_means(
        np.ascontiguousarray(logamp), phase, np.ascontiguousarray(sum_.frequencies), pts, float(clip)
    )


def estimate_jessen(sum_: ExponentialSum, y, cfg: QuadratureConfig = QuadratureConfig()) -> JessenEstimate:
    """Estimate ``J_f(y)``; the result is flagged (not raised) if the schedule never stabilizes."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.shape != (sum_.dimension,):
        raise ValueError(f"y must have shape ({sum_.dimension},)")
    values, prev = [], None
    stabilized = False
    for k in range(cfg.stages):
        pts = _stage_points(cfg, sum_.dimension, k)
        means, clipped = box_batch_means(sum_, y[None], pts, cfg.clip)
        b = means[0]
        cur = (float(b.mean()), float(b.std(ddof=1) / math.sqrt(b.size)), int(clipped.sum()), pts.shape[0] * pts.shape[1])
        values.append(cur[0])
        if prev is not None and abs(cur[0] - prev[0]) < cfg.tol + 2 * (cur[1] + prev[1]):
            stabilized = True
            break
        prev = cur
    if not stabilized:
        log.warning("Jessen estimate at y=%s did not stabilize over s=%s", y.tolist(), cfg.schedule)
    return JessenEstimate(
        y=tuple(y.tolist()),
        value=cur[0],
        std_error=cur[1],
        box_half_width=cfg.schedule[k],
        sample_count=cur[3],
        clipped_fraction=cur[2] / cur[3],
        stabilized=stabilized,
        stage_values=tuple(values),
        clipped_limit=cfg.clipped_limit,
    )


def mean_motion_gradient(
    sum_: ExponentialSum, y, h: float, cfg: QuadratureConfig = QuadratureConfig()
) -> GradientEstimate:
    """``-grad J_f(y)`` by central differences of step ``h``.

    Both sides of every difference use the same x samples, and the error bar is
    taken from the spread of per-batch differences, so sampling noise largely
    cancels instead of being amplified by ``1/h``.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    p = sum_.dimension
    if h <= 0:
        raise ValueError("h must be positive")
    offsets = np.vstack([np.eye(p), -np.eye(p)]) * h
    ys = y[None] + offsets
    prev = None
    stabilized = False
    for k in range(cfg.stages):
        pts = _stage_points(cfg, p, k)
        means, clipped = box_batch_means(sum_, ys, pts, cfg.clip)
        g = -(means[:p] - means[p:]) / (2 * h)
        val = g.mean(axis=1)
        se = g.std(axis=1, ddof=1) / math.sqrt(g.shape[1])
        cf = float(clipped.sum()) / clipped.size / (pts.shape[1])
        if prev is not None and np.all(np.abs(val - prev[0]) < cfg.grad_tol + 2 * (se + prev[1])):
            stabilized = True
            break
        prev = (val, se)
    if not stabilized:
        log.warning("mean-motion gradient at y=%s did not stabilize", y.tolist())
    return GradientEstimate(
        y=tuple(y.tolist()),
        value=tuple(val.tolist()),
        std_error=tuple(se.tolist()),
        step=float(h),
        box_half_width=cfg.schedule[k],
        stabilized=stabilized,
        clipped_fraction=cf,
    )


@dataclass(frozen=True)
class ArgumentConfig:
    """Controls for argument tracking along real lines."""

    T: float = 200.0
    n_lines: int = 4
    zero_floor: float = 1e-9
    spread_tol: float = 0.05
    seed: int = 0
    steps_per_period: int = 10

    def __post_init__(self):
        if self.T <= 0 or self.n_lines < 1 or self.zero_floor <= 0 or self.spread_tol <= 0:
            raise ValueError("argument tracking parameters must be positive")


def _normalized_amplitudes(sum_: ExponentialSum, y: np.ndarray) -> np.ndarray:
    la = sum_.log_amplitudes(y)
    return np.exp(la - la.max()) * np.exp(1j * np.angle(sum_.coefficients))


def argument_increments(
    sum_: ExponentialSum,
    y,
    axis: int,
    t0: float,
    t1: float,
    offsets: np.ndarray,
    floor: float,
    steps_per_period: int = 10,
) -> np.ndarray:
    """Continuous increment of ``arg f`` along ``x_axis in [t0, t1]`` for each offset row.

    ``offsets`` (L, p) fixes the remaining x coordinates of each line. The
    starting step is ``2 pi / (steps_per_period * max|lambda_axis|)``.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    amp = _normalized_amplitudes(sum_, y)
    lam = sum_.frequencies
    omega = np.ascontiguousarray(lam[:, axis])
    wmax = float(np.abs(omega).max())
    h0 = 2 * math.pi / (steps_per_period * wmax) if wmax > 0 else (t1 - t0)
    out = np.empty(len(offsets))
    for i, x0 in enumerate(offsets):
        x0 = np.array(x0, dtype=float)
        x0[axis] = 0.0
        a = amp * np.exp(1j * (lam @ x0))
        inc, minmod, status = _kernels.track_argument(a, omega, float(t0), float(t1), h0, floor)
        if status == 1:
            raise ZeroOnPathError(
                f"|f| dropped to {minmod:.3g} (relative) on the line x_{axis} in [{t0}, {t1}] at y={y.tolist()}",
                minmod,
            )
        if status == 2:
            raise NonConvergedError("argument tracking could not resolve the phase by bisection")
        out[i] = inc
    return out


def mean_motion_argument(
    sum_: ExponentialSum, y, axis: int = 0, cfg: ArgumentConfig = ArgumentConfig()
) -> float:
    """Average rate ``(1/2T) * increment of arg f`` along ``x_axis in [-T, T]``.

    The other x coordinates are drawn at random for each of ``cfg.n_lines``
    lines; the line rates must agree within ``cfg.spread_tol``.
    """
    rates = argument_rates(sum_, y, axis, cfg)
    return float(rates.mean())


def argument_rates(sum_: ExponentialSum, y, axis: int = 0, cfg: ArgumentConfig = ArgumentConfig()) -> np.ndarray:
    """Per-line rates behind :func:`mean_motion_argument`."""
    p = sum_.dimension
    if not 0 <= axis < p:
        raise ValueError("axis out of range")
    rng = stream(cfg.seed, "argument-lines", axis)
    offsets = rng.uniform(-cfg.T, cfg.T, size=(cfg.n_lines, p))
    inc = argument_increments(sum_, y, axis, -cfg.T, cfg.T, offsets, cfg.zero_floor, cfg.steps_per_period)
    rates = inc / (2 * cfg.T)
    if rates.max() - rates.min() > cfg.spread_tol:
        raise NonConvergedError(f"line rates {rates.tolist()} spread beyond {cfg.spread_tol}")
    return rates


@dataclass(frozen=True)
class LinearityReport:
    max_residual: float
    slope: Tuple[float, ...]
    intercept: float
    estimates: Tuple[JessenEstimate, ...] = field(repr=False)

    @property
    def mean_motion(self) -> Tuple[float, ...]:
        return tuple(-s for s in self.slope)


def check_linearity(sum_: ExponentialSum, points, cfg: QuadratureConfig = QuadratureConfig()) -> LinearityReport:
    """Least-squares affine fit of J over sample points of one component."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if sum_.dimension == 1 and pts.shape[0] == 1:
        pts = pts.T
    if pts.shape[1] != sum_.dimension:
        raise ValueError("points must have shape (M, p)")
    ests = tuple(estimate_jessen(sum_, y, cfg) for y in pts)
    J = np.array([e.value for e in ests])
    A = np.hstack([np.ones((len(pts), 1)), pts])
    coef, *_ = np.linalg.lstsq(A, J, rcond=None)
    resid = J - A @ coef
    return LinearityReport(float(np.abs(resid).max()), tuple(coef[1:].tolist()), float(coef[0]), ests)
