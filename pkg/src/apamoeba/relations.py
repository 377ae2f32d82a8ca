"""Mean motions as elements of the spectrum group, and relations between components."""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
from functools import reduce
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from .amoeba import AmoebaConfig, ComponentRecord, OrderConfig, components, rasterize_amoeba
from .errors import AmbiguousMatchError, ApamoebaError, NoMatchError
from .expsum import ExponentialSum, GroupBasis

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GroupExpression:
    """``sum_j coefficients[j] * generator_j``, approximating a numeric vector."""

    coefficients: Tuple[Fraction, ...]
    residual: float
    tolerance: float

    @property
    def denominator(self) -> int:
        return reduce(lambda a, b: a * b // math.gcd(a, b), (c.denominator for c in self.coefficients), 1)

    @property
    def integral(self) -> bool:
        return self.denominator == 1

    def as_strings(self) -> List[str]:
        return [str(c) for c in self.coefficients]


@dataclass(frozen=True)
class SnapConfig:
    n_max: int = 16
    bound: int = 64
    tol_factor: float = 5.0
    error_floor: float = 2e-3
    max_enumeration: int = 5_000_000


def _complexity(coeffs: Tuple[Fraction, ...]) -> Tuple[int, int]:
    den = reduce(lambda a, b: a * b // math.gcd(a, b), (c.denominator for c in coeffs), 1)
    height = max((abs(c.numerator * (den // c.denominator)) for c in coeffs), default=0)
    return den, height


def snap_to_group(
    c,
    error: float,
    generators: np.ndarray,
    n_max: int = 16,
    bound: int = 64,
    tol_factor: float = 5.0,
    max_enumeration: int = 5_000_000,
) -> GroupExpression:
    """Simplest rational vector ``r`` with ``||sum_j r_j g_j - c|| <= tol_factor * error``.

    Candidates have a common denominator ``N <= n_max`` and numerators bounded
    by ``bound``. Coordinates along a numerically independent subset of the
    generators are recovered by rounding a least-squares solve; the remaining
    coordinates are enumerated. Among the candidates within tolerance the one
    with the smallest (denominator, height) wins; a second candidate of the
    same complexity raises AmbiguousMatchError, and an empty set raises
    NoMatchError carrying the best candidate seen.
    """
    c = np.atleast_1d(np.asarray(c, dtype=float))
    G = np.atleast_2d(np.asarray(generators, dtype=float))
    k = G.shape[0] if G.size else 0
    tol = tol_factor * error
    if k == 0:
        res = float(np.linalg.norm(c))
        expr = GroupExpression((), res, tol)
        if res > tol:
            raise NoMatchError(f"residual {res:.3g} exceeds tolerance {tol:.3g}", expr)
        return expr
    _, R, piv = scipy.linalg.qr(G.T, pivoting=True)
    diag = np.abs(np.diag(R)) if R.size else np.zeros(0)
    rank = int((diag > 1e-10 * max(diag.max(initial=0.0), 1.0)).sum())
    pivots, free = np.sort(piv[:rank]), np.sort(piv[rank:])
    n_free = len(free)
    total = n_max * (2 * bound + 1) ** n_free
    if total > max_enumeration:
        raise ValueError(f"enumeration of {total} candidates exceeds max_enumeration")
    pinv = np.linalg.pinv(G[pivots]) if rank else np.zeros((G.shape[1], 0))
    grid = (
        np.array(list(itertools.product(range(-bound, bound + 1), repeat=n_free)), dtype=float)
        if n_free
        else np.zeros((1, 0))
    )
    found: Dict[Tuple[Fraction, ...], float] = {}
    best: Optional[Tuple[float, Tuple[Fraction, ...]]] = None
    for N in range(1, n_max + 1):
        r_free = grid / N
        rhs = c[None, :] - r_free @ G[free]
        num_piv = np.rint((rhs @ pinv) * N)
        r_piv = num_piv / N
        fit = r_piv @ G[pivots] + r_free @ G[free]
        res = np.linalg.norm(fit - c[None, :], axis=1)
        ok = np.all(np.abs(num_piv) <= bound, axis=1)
        res = np.where(ok, res, np.inf)
        i_best = int(np.argmin(res))

        def to_coeffs(i):
            out = [Fraction(0)] * k
            for j, col in enumerate(pivots):
                out[col] = Fraction(int(num_piv[i, j]), N)
            for j, col in enumerate(free):
                out[col] = Fraction(int(grid[i, j]), N)
            return tuple(out)

        if np.isfinite(res[i_best]) and (best is None or res[i_best] < best[0]):
            best = (float(res[i_best]), to_coeffs(i_best))
        for i in np.flatnonzero(res <= tol):
            coeffs = to_coeffs(i)
            found.setdefault(coeffs, float(res[i]))
    if not found:
        expr = GroupExpression(best[1], best[0], tol) if best else None
        raise NoMatchError(
            f"no group element within {tol:.3g} of {c.tolist()} (best residual "
            f"{best[0] if best else float('inf'):.3g})",
            expr,
        )
    ranked = sorted(found.items(), key=lambda kv: (_complexity(kv[0]), kv[1]))
    top_coeffs, top_res = ranked[0]
    tier = _complexity(top_coeffs)
    rivals = [kv for kv in ranked[1:] if _complexity(kv[0]) == tier]
    if rivals:
        raise AmbiguousMatchError(
            f"{len(rivals) + 1} candidates of complexity {tier} within tolerance",
            [GroupExpression(kc, rc, tol) for kc, rc in [ranked[0]] + rivals],
        )
    return GroupExpression(top_coeffs, top_res, tol)


def mean_motion_error(rec: ComponentRecord, floor: float) -> float:
    """Error bar for a component's numeric order: std errors and estimator disagreement."""
    err = floor
    if rec.order_error is not None:
        err = max(err, 3 * max(rec.order_error, default=0.0))
    if rec.order_argument is not None and rec.order_numeric is not None:
        err = max(err, float(np.max(np.abs(np.subtract(rec.order_numeric, rec.order_argument)))))
    return err


@dataclass(frozen=True)
class PairRelation:
    d1: int
    d0: int
    status: str
    expression: Optional[GroupExpression]
    ratio: Optional[float]
    consistent: Optional[bool] = None
    antisymmetric: Optional[bool] = None
    message: str = ""


@dataclass(frozen=True)
class RelationReport:
    generators: Tuple[str, ...]
    pairs: Tuple[PairRelation, ...]
    components: Tuple[ComponentRecord, ...] = field(repr=False)
    component_status: Tuple[str, ...] = ()

    @property
    def empirical_K(self) -> Optional[float]:
        vals = [p.ratio for p in self.pairs if p.ratio is not None]
        return max(vals) if vals else None

    @property
    def integral(self) -> bool:
        return all(p.expression is not None and p.expression.integral for p in self.pairs)

    @property
    def all_matched(self) -> bool:
        return all(p.status == "Verified" for p in self.pairs)


def _snap_status(fn):
    try:
        return "Verified", fn(), ""
    except NoMatchError as exc:
        return "NoMatch", exc.best, str(exc)
    except AmbiguousMatchError as exc:
        return "Ambiguous", None, str(exc)


def component_relations(
    recs: Sequence[ComponentRecord],
    sum_: ExponentialSum,
    cfg: SnapConfig = SnapConfig(),
    basis: Optional[GroupBasis] = None,
) -> RelationReport:
    """Snap every component order and every pairwise difference into the group.

    ``basis`` defaults to the Hermite-normal-form basis of the spectrum group.
    """
    basis = basis or sum_.group
    G = basis.realize(sum_.basis)
    snap = dict(n_max=cfg.n_max, bound=cfg.bound, tol_factor=cfg.tol_factor, max_enumeration=cfg.max_enumeration)
    filled, status = [], []
    for rec in recs:
        if rec.order_numeric is None:
            filled.append(rec)
            status.append("Missing")
            continue
        st, expr, msg = _snap_status(
            lambda: snap_to_group(rec.order_numeric, mean_motion_error(rec, cfg.error_floor), G, **snap)
        )
        if st == "Verified" and not expr.integral:
            st = "NotInGroup"
        status.append(st)
        filled.append(replace(rec, order_group=tuple(expr.coefficients) if st == "Verified" else None))
    pairs = []
    for i, j in itertools.combinations(range(len(filled)), 2):
        r0, r1 = filled[i], filled[j]
        if r0.order_numeric is None or r1.order_numeric is None:
            pairs.append(PairRelation(r1.id, r0.id, "Missing", None, None, message="order not estimated"))
            continue
        dc = np.subtract(r1.order_numeric, r0.order_numeric)
        err = math.hypot(mean_motion_error(r0, cfg.error_floor), mean_motion_error(r1, cfg.error_floor))
        st, expr, msg = _snap_status(lambda: snap_to_group(dc, err, G, **snap))
        st_rev, expr_rev, _ = _snap_status(lambda: snap_to_group(-dc, err, G, **snap))
        ratio = consistent = anti = None
        if st == "Verified":
            norm_dc = float(np.linalg.norm(dc))
            norm_r = float(np.linalg.norm([float(x) for x in expr.coefficients]))
            ratio = norm_r / norm_dc if norm_dc > err else None
            anti = st_rev == "Verified" and all(a == -b for a, b in zip(expr.coefficients, expr_rev.coefficients))
            if r0.order_group is not None and r1.order_group is not None:
                consistent = all(
                    a == b - c for a, b, c in zip(expr.coefficients, r1.order_group, r0.order_group)
                )
        pairs.append(PairRelation(r1.id, r0.id, st, expr, ratio, consistent, anti, msg))
    return RelationReport(
        generators=tuple(str(g) for g in basis.generators),
        pairs=tuple(pairs),
        components=tuple(filled),
        component_status=tuple(status),
    )


@dataclass(frozen=True)
class VerifyConfig:
    amoeba: AmoebaConfig = AmoebaConfig()
    order: OrderConfig = OrderConfig()
    snap: SnapConfig = SnapConfig()
    threads: Optional[int] = None


def _fmt_vec(v):
    return None if v is None else [float(x) for x in v]


def component_summary(rec: ComponentRecord) -> Dict:
    return {
        "id": rec.id,
        "cell_count": rec.size,
        "bounding_box": [list(b) for b in rec.bbox],
        "representative": list(rec.representative),
        "inradius": rec.inradius,
        "order_numeric": _fmt_vec(rec.order_numeric),
        "order_error": _fmt_vec(rec.order_error),
        "order_argument": _fmt_vec(rec.order_argument),
        "winding": None if rec.winding is None else list(rec.winding),
        "order_group": None if rec.order_group is None else [str(x) for x in rec.order_group],
        "diagnostics": rec.diagnostics,
    }


def pair_summary(p: PairRelation) -> Dict:
    return {
        "d1": p.d1,
        "d0": p.d0,
        "status": p.status,
        "r": None if p.expression is None else p.expression.as_strings(),
        "residual": None if p.expression is None else p.expression.residual,
        "tolerance": None if p.expression is None else p.expression.tolerance,
        "integral": None if p.expression is None else p.expression.integral,
        "ratio": p.ratio,
        "consistent": p.consistent,
        "antisymmetric": p.antisymmetric,
        "message": p.message,
    }


@dataclass
class Verdict:
    """Outcome of the full pipeline for the three theorem assertions."""

    assertion_i: Dict
    assertion_ii: Dict
    assertion_iii: Dict
    basis: List[str]
    components: List[Dict]
    raster: Dict
    errors: List[str] = field(default_factory=list)

    @property
    def failed(self) -> bool:
        return bool(self.errors) or any(
            a["status"] == "Failed" for a in (self.assertion_i, self.assertion_ii, self.assertion_iii)
        )

    def to_dict(self) -> Dict:
        return {
            "assertion_i": self.assertion_i,
            "assertion_ii": self.assertion_ii,
            "assertion_iii": self.assertion_iii,
            "basis": self.basis,
            "components": self.components,
            "raster": self.raster,
            "errors": self.errors,
            "failed": self.failed,
        }


def verify_theorem(sum_: ExponentialSum, box, resolution, cfg: VerifyConfig = VerifyConfig()) -> Verdict:
    """Raster, components, mean motions and group relations in one pass.

    Stage failures are recorded in ``Verdict.errors`` rather than raised.
    """
    errors: List[str] = []
    amoeba_cfg = replace(cfg.amoeba, threads=cfg.threads or cfg.amoeba.threads)
    raster_info: Dict = {}
    recs: List[ComponentRecord] = []
    try:
        raster = rasterize_amoeba(sum_, box, resolution, amoeba_cfg)
        raster_info = {"box": [list(b) for b in raster.box], "resolution": list(raster.resolution), **raster.counts()}
        recs = components(raster, cfg.order, threads=cfg.threads)
    except (ApamoebaError, ValueError, OverflowError) as exc:
        errors.append(f"raster/components: {type(exc).__name__}: {exc}")
    basis = sum_.group
    report = component_relations(recs, sum_, cfg.snap, basis) if recs else None
    comps = list(report.components) if report else recs
    status = list(report.component_status) if report else []

    n_ok = sum(s == "Verified" for s in status)
    a1 = {
        "status": "Verified" if recs and n_ok == len(recs) else "Failed",
        "verified": n_ok,
        "total": len(recs),
        "per_component": status,
    }
    pairs = list(report.pairs) if report else []
    ii_ok = all(p.status == "Verified" and p.consistent is not False and p.antisymmetric for p in pairs)
    a2 = {
        "status": "Verified" if recs and ii_ok else "Failed",
        "pairs": [pair_summary(p) for p in pairs],
        "empirical_K": report.empirical_K if report else None,
    }
    integral = bool(report.integral) if report else False
    a3 = {
        "status": "Verified" if recs and (integral or not pairs) else "Failed",
        "component_count": len(recs),
        "finite": True,
        "integral": integral if pairs else True,
    }
    return Verdict(
        assertion_i=a1,
        assertion_ii=a2,
        assertion_iii=a3,
        basis=[str(g) for g in basis.generators],
        components=[component_summary(r) for r in comps],
        raster=raster_info,
        errors=errors,
    )
