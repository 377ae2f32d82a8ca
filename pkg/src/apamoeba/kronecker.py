"""Simultaneous Diophantine approximation ``||mu t - a - 2 pi m|| < eps`` by grid scan.

The scan step ``eps / (2 ||mu||)`` means any window where the error dips below
``eps / 2`` is hit. On a hit, ``m`` is fixed and ``t`` moves to the vertex of the
quadratic ``||mu t - a - 2 pi m||^2``, the best point of that window, so a
window yields one canonical solution time.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

import numpy as np

from . import _kernels

TWO_PI = 2 * math.pi


@dataclass(frozen=True)
class KroneckerSolution:
    t: float
    m: Tuple[int, ...]
    achieved_error: float


@dataclass(frozen=True)
class Exhausted:
    """No solution up to ``t_max``; not a disproof, only a search bound."""

    t_max: float
    best_t: float
    best_m: Tuple[int, ...]
    best_error: float


def approximation_error(mu, a, t: float, m) -> float:
    mu, a, m = (np.asarray(v, dtype=float) for v in (mu, a, m))
    return float(np.linalg.norm(mu * t - a - TWO_PI * m))


def _nearest_m(mu, a, t):
    return np.rint((mu * t - a) / TWO_PI)


def _vertex(mu, a, m) -> float:
    return float(mu @ (a + TWO_PI * m) / (mu @ mu))


def _inputs(mu, a, eps):
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    a = np.atleast_1d(np.asarray(a, dtype=float))
    if mu.shape != a.shape or mu.ndim != 1:
        raise ValueError("mu and a must be vectors of equal length")
    if not eps > 0:
        raise ValueError("eps must be positive")
    norm = float(np.linalg.norm(mu))
    if norm == 0:
        raise ValueError("mu must be nonzero")
    return mu, a, norm


def _refine(mu, a, t_hit, eps, t_max):
    m = _nearest_m(mu, a, t_hit)
    tv = _vertex(mu, a, m)
    if 0 < tv <= t_max and approximation_error(mu, a, tv, m) < approximation_error(mu, a, t_hit, m):
        return tv, m
    return t_hit, m


def kronecker_approximate(mu, a, eps: float, t_max: float) -> Union[KroneckerSolution, Exhausted]:
    """First solution ``t in (0, t_max]`` on the scan grid, refined within its window.

    The coordinates of ``mu`` should be linearly independent over Q for a
    solution to exist for every ``a``; that is the caller's assumption.
    Decreasing ``eps`` by a factor of at least 2 never decreases the returned t.
    """
    mu, a, norm = _inputs(mu, a, eps)
    h = eps / (2 * norm)
    n = int(math.floor(t_max / h))
    first, err, best_i = _kernels.kronecker_scan(mu, a, float(eps), h, h, n)
    if first < 0:
        bt = h + best_i * h if best_i >= 0 else 0.0
        bm = _nearest_m(mu, a, bt)
        return Exhausted(float(t_max), bt, tuple(int(v) for v in bm), approximation_error(mu, a, bt, bm))
    t, m = _refine(mu, a, h + first * h, eps, t_max)
    e = approximation_error(mu, a, t, m)
    if not e < eps:
        # refinement can only improve the error; this guards the contract
        t = h + first * h
        m = _nearest_m(mu, a, t)
        e = approximation_error(mu, a, t, m)
    return KroneckerSolution(float(t), tuple(int(v) for v in m), e)


@dataclass(frozen=True)
class GapScan:
    times: Tuple[float, ...]
    max_gap: Optional[float]
    horizon: float


def return_gap_scan(mu, a, eps: float, horizon: float, chunk: int = 1 << 20) -> GapScan:
    """All solution windows in ``(0, horizon]`` and the largest gap between them."""
    mu, a, norm = _inputs(mu, a, eps)
    h = eps / (2 * norm)
    n = int(math.floor(horizon / h))
    runs: List[Tuple[float, float]] = []
    open_run = None
    for start in range(0, n, chunk):
        i = np.arange(start, min(start + chunk, n))
        t = h + i * h
        w = np.multiply.outer(t, mu) - a
        w -= TWO_PI * np.rint(w / TWO_PI)
        err = np.sqrt(np.sum(w * w, axis=1))
        hit = err < eps
        edges = np.flatnonzero(np.diff(np.concatenate([[0], hit.astype(np.int8), [0]])))
        if open_run is not None and not (edges.size and edges[0] == 0):
            runs.append(open_run)
            open_run = None
        for s, e in zip(edges[::2], edges[1::2]):
            k = s + int(np.argmin(err[s:e]))
            cand = (float(err[k]), float(t[k]))
            if s == 0 and open_run is not None:
                cand = min(open_run, cand)
                open_run = None
            if e == len(hit):
                open_run = cand
            else:
                runs.append(cand)
    if open_run is not None:
        runs.append(open_run)
    times = [_refine(mu, a, tb, eps, horizon)[0] for _, tb in runs]
    times.sort()
    gaps = np.diff(times)
    return GapScan(tuple(times), float(gaps.max()) if gaps.size else None, float(horizon))
