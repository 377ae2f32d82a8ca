"""Acceptance criteria 1-7, each at its stated tolerance.

Every test records a one-line outcome in ``RESULTS``; ``conftest.py`` prints
them after the run. Reference values come from ``oracles.py``.
"""
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from apamoeba import (
    BaseIrrationals,
    ExponentialSum,
    FrequencyVector,
    Exhausted,
    KroneckerSolution,
    QuadratureConfig,
    cli,
    components,
    component_relations,
    estimate_jessen,
    kronecker_approximate,
    laurent_winding_order,
    rasterize_amoeba,
    snap_to_group,
)
from apamoeba.amoeba import Cell, default_threads
from apamoeba.relations import mean_motion_error
from oracles import (
    SQRT2,
    bisect,
    exp_minus_two_jessen,
    line_amoeba_component,
    line_amoeba_contains,
    periodic_jessen,
    sqrt2_band,
    winding_number,
)

RESULTS = {}
SUMS = Path(__file__).resolve().parent.parent / "sample_sums"


def record(key, checks, detail=""):
    """Store the outcome, then fail the test with the first broken check."""
    bad = [name for name, ok in checks if not ok]
    RESULTS[key] = (not bad, detail if not bad else f"{detail} failed: {', '.join(bad)}")
    print(f"criterion {key}: {'PASS' if not bad else 'FAIL'} {RESULTS[key][1]}")
    assert not bad, RESULTS[key][1]


def sum_sqrt2():
    basis = BaseIrrationals((1.0, SQRT2), ("1", "sqrt2"))
    fv = lambda a, b: FrequencyVector(((a, b),))
    return ExponentialSum(1, basis, ((1, fv(1, 0)), (1, fv(0, 1)), (6, fv(0, 0))))


# 1 -----------------------------------------------------------------------


def test_criterion_1_one_variable_closed_form():
    t0 = time.perf_counter()
    s = ExponentialSum.from_terms([(1, [1]), (-2, [0])])
    r = rasterize_amoeba(s, [(-3, 3)], 601)
    recs = components(r)
    rep = component_relations(recs, s)
    probes = np.linspace(-2.95, 2.95, 20)
    J = [estimate_jessen(s, [y]).value for y in probes]
    elapsed = time.perf_counter() - t0

    y0 = -math.log(2)
    i0 = int((y0 + 3) / r.spacing[0])
    marked = np.flatnonzero(r.cells != Cell.OUT)
    closed = [exp_minus_two_jessen(y) for y in probes]
    trap = [periodic_jessen([1, -2], [1, 0], y) for y in probes]
    j_err = max(abs(a - b) for a, b in zip(J, closed))
    orders = sorted(rec.order_numeric[0] for rec in rep.components)
    snapped = sorted(
        (snap_to_group(rec.order_numeric, mean_motion_error(rec, 2e-3), [[1.0]]) for rec in rep.components),
        key=lambda e: e.coefficients,
    )
    record(
        1,
        [
            ("oracles agree", max(abs(a - b) for a, b in zip(trap, closed)) < 1e-9),
            ("band within +-1 cell", marked.size > 0 and set(marked) <= {i0 - 1, i0, i0 + 1}),
            ("2 components", len(recs) == 2),
            ("J within 1e-2", j_err < 1e-2),
            ("orders 0 and 1", abs(orders[0]) < 2e-2 and abs(orders[1] - 1) < 2e-2),
            ("snap r = 0, 1", [e.coefficients for e in snapped] == [(0,), (1,)]),
            ("denominator 1", all(e.denominator == 1 for e in snapped)),
            ("runtime < 60 s", elapsed < 60),
        ],
        f"marked={marked.tolist()} i0={i0} max|J-J*|={j_err:.2e} orders={[round(o, 5) for o in orders]} "
        f"time={elapsed:.1f}s",
    )


# 2 -----------------------------------------------------------------------


def test_criterion_2_line_amoeba():
    t0 = time.perf_counter()
    s = ExponentialSum.from_terms([(1, [1, 0]), (1, [0, 1]), (1, [0, 0])])
    r = rasterize_amoeba(s, [(-3, 3), (-3, 3)], 121)
    recs = components(r)
    rep = component_relations(recs, s)
    elapsed = time.perf_counter() - t0

    ys = r.centers()
    cells = r.cells.ravel()
    decided = cells != Cell.UNCERTAIN
    inside = line_amoeba_contains(ys[:, 0], ys[:, 1])
    # membership: In cells inside the amoeba, Out cells in the right component
    labels = np.full(len(cells), -1)
    for rec in rep.components:
        labels[rec.cells] = rec.id
    order_of = {rec.id: tuple(int(round(v)) for v in rec.order_numeric) for rec in rep.components}
    agree = 0
    for k in np.flatnonzero(decided):
        expect = line_amoeba_component(*ys[k])
        got = None if cells[k] == Cell.IN else order_of.get(labels[k])
        agree += expect == got
    frac = agree / decided.sum()
    in_agree = float(np.mean(inside[decided] == (cells[decided] == Cell.IN)))

    rounded = sorted(tuple(int(round(v)) for v in rec.order_numeric) for rec in rep.components)
    wind_ok = all(
        tuple(int(round(v)) for v in rec.order_numeric) == rec.winding
        and tuple(int(round(v)) for v in rec.order_argument) == rec.winding
        for rec in rep.components
    )
    close = all(
        np.max(np.abs(np.subtract(rec.order_numeric, np.rint(rec.order_numeric)))) < 2e-2 for rec in rep.components
    )
    basis = [tuple(float(x) for x in g.flat()) for g in s.group.generators]
    record(
        2,
        [
            ("3 components", len(recs) == 3),
            ("orders (0,0),(1,0),(0,1)", rounded == [(0, 0), (0, 1), (1, 0)]),
            ("orders near integers", close),
            ("winding matches", wind_ok),
            ("basis {(1,0),(0,1)}", sorted(basis) == [(0.0, 1.0), (1.0, 0.0)]),
            ("relations integral", rep.integral and rep.all_matched),
            ("oracle agreement >= 99%", frac >= 0.99 and in_agree >= 0.99),
            ("runtime < 5 min", elapsed < 300),
        ],
        f"component agreement={frac:.4f} in/out agreement={in_agree:.4f} counts={r.counts()} time={elapsed:.1f}s",
    )


# 3 -----------------------------------------------------------------------


def test_criterion_3_almost_periodic():
    y_l, y_u = sqrt2_band()
    y_u_b = bisect(lambda y: math.exp(-y) + math.exp(-SQRT2 * y) - 6, -5, 5)
    y_l_b = bisect(lambda y: math.exp(-SQRT2 * y) - math.exp(-y) - 6, -5, -0.1)

    t0 = time.perf_counter()
    s = sum_sqrt2()
    r = rasterize_amoeba(s, [(-4, 3)], 701)
    recs = components(r)
    rep = component_relations(recs, s)
    elapsed = time.perf_counter() - t0

    c = r.axis_centers(0)
    dy = r.spacing[0]
    marked = c[r.cells[:] != Cell.OUT]
    deep = (c > y_l + dy) & (c < y_u - dy)
    G = s.group.realize(s.basis)
    by_order = sorted(rep.components, key=lambda rec: rec.order_numeric[0])
    orders = [rec.order_numeric[0] for rec in by_order]
    exprs = [
        snap_to_group(rec.order_numeric, mean_motion_error(rec, 2e-3), G).coefficients for rec in by_order
    ]
    record(
        3,
        [
            ("root finders agree", abs(y_u - y_u_b) < 1e-10 and abs(y_l - y_l_b) < 1e-10),
            ("band edges within 1 cell", marked.size > 0 and marked.min() > y_l - dy and marked.max() < y_u + dy),
            ("band interior in amoeba", bool(np.all(r.cells[deep] == Cell.IN))),
            ("2 components", len(recs) == 2),
            ("orders 0 and sqrt2", len(orders) == 2 and abs(orders[0]) < 2e-2 and abs(orders[1] - SQRT2) < 2e-2),
            ("snap (0,0), (0,1)", exprs == [(0, 0), (0, 1)]),
            ("integral", rep.integral),
            ("runtime < 2 min", elapsed < 120),
        ],
        f"y_l={y_l:.6f} y_u={y_u:.6f} marked=[{marked.min():.4f}, {marked.max():.4f}] "
        f"orders={[round(o, 5) for o in orders]} time={elapsed:.1f}s",
    )


# 4 -----------------------------------------------------------------------


def _random_laurent(rng, p, k):
    while True:
        freqs = {tuple(rng.integers(-2, 3, p).tolist()) for _ in range(k)}
        if len(freqs) == k:
            break
    terms = []
    for f in sorted(freqs):
        c = math.exp(rng.uniform(-0.7, 0.7)) * np.exp(1j * rng.uniform(-math.pi, math.pi))
        terms.append((complex(c), list(f)))
    return ExponentialSum.from_terms(terms)


def test_criterion_4_estimator_cross_agreement():
    rng = np.random.default_rng(20240604)
    failures, n_reps, worst = [], 0, 0.0
    for i in range(25):
        p = 1 + i % 2
        k = 2 + (i // 2) % 2
        s = _random_laurent(rng, p, k)
        r = rasterize_amoeba(s, [(-3, 3)] * p, 201 if p == 1 else 41)
        for rec in components(r):
            n_reps += 1
            y = np.array(rec.representative)
            try:
                wind = tuple(laurent_winding_order(s, y, j) for j in range(p))
            except Exception as exc:  # noqa: BLE001 - recorded as a failure
                failures.append(f"sum {i}: winding {exc}")
                continue
            offset = rng.uniform(-math.pi, math.pi, p)
            ref = tuple(
                int(round(winding_number(s.coefficients, s.frequencies, y, j, offset))) for j in range(p)
            )
            if rec.order_argument is None:
                failures.append(f"sum {i}: argument estimator failed {rec.diagnostics.get('argument_error')}")
                continue
            diff = float(np.max(np.abs(np.subtract(rec.order_numeric, rec.order_argument))))
            worst = max(worst, diff)
            ok = (
                diff < 3e-2
                and tuple(int(v) for v in np.rint(rec.order_numeric)) == wind
                and tuple(int(v) for v in np.rint(rec.order_argument)) == wind
                and wind == ref
            )
            if not ok:
                failures.append(
                    f"sum {i} at {rec.representative}: grad={rec.order_numeric} arg={rec.order_argument} "
                    f"wind={wind} oracle={ref}"
                )
    record(
        4,
        [("all representatives agree", not failures)],
        f"{n_reps} representatives over 25 sums, worst |grad-arg|={worst:.2e}"
        + (f"; {failures[:3]}" if failures else ""),
    )


# 5 -----------------------------------------------------------------------


def _random_sum(rng):
    p = int(rng.integers(1, 3))
    k = int(rng.integers(2, 5))
    irrational = rng.random() < 0.3
    basis = BaseIrrationals((1.0, SQRT2), ("1", "sqrt2")) if irrational else BaseIrrationals.rational()
    terms = []
    for _ in range(k):
        rows = tuple(
            tuple([int(rng.integers(-2, 3))] + ([int(rng.integers(-1, 2))] if irrational else [])) for _ in range(p)
        )
        c = math.exp(rng.uniform(-1, 1)) * np.exp(1j * rng.uniform(-math.pi, math.pi))
        terms.append((complex(c), FrequencyVector(rows)))
    return ExponentialSum(p, basis, tuple(terms))


def test_criterion_5_convexity():
    rng = np.random.default_rng(5)
    cfg = QuadratureConfig(seed=5)
    flagged = violations = 0
    worst = -np.inf  # largest gap - 3 se over accepted triples
    for n in range(200):
        s = _random_sum(rng)
        a = rng.uniform(-2, 2, s.dimension)
        b = rng.uniform(-2, 2, s.dimension)
        t = rng.uniform(0.05, 0.95)
        ea, eb, em = (estimate_jessen(s, y, cfg) for y in (a, b, (1 - t) * a + t * b))
        if not (ea.stabilized and eb.stabilized and em.stabilized):
            flagged += 1
            continue
        se = math.sqrt(em.std_error**2 + ((1 - t) * ea.std_error) ** 2 + (t * eb.std_error) ** 2)
        gap = em.value - ((1 - t) * ea.value + t * eb.value)
        worst = max(worst, gap - 3 * se)
        if gap > 3 * se + 1e-12:
            violations += 1
    record(
        5,
        [("no violations", violations == 0), ("flagged < 2%", flagged < 4)],
        f"violations={violations} flagged={flagged}/200 (excluded) max(gap - 3 se)={worst:.2e}",
    )


# 6 -----------------------------------------------------------------------


def test_criterion_6_kronecker():
    rng = np.random.default_rng(6)
    t0 = time.perf_counter()
    solved = exhausted = false_success = 0
    for _ in range(100):
        p = int(rng.integers(1, 4))
        mu = rng.uniform(0.2, 3.0, p)
        a = rng.uniform(-math.pi, math.pi, p)
        eps = float(rng.uniform(1e-2, 0.3))
        res = kronecker_approximate(mu, a, eps, 1e4)
        if isinstance(res, KroneckerSolution):
            solved += 1
            # substitute back with plain numpy, independent of the package helpers
            err = np.sqrt(np.sum((mu * res.t - a - 2 * math.pi * np.asarray(res.m)) ** 2))
            if not (0 < res.t <= 1e4 and err < eps):
                false_success += 1
        else:
            assert isinstance(res, Exhausted)
            exhausted += 1
            assert math.isfinite(res.best_error)
    elapsed = time.perf_counter() - t0
    record(
        6,
        [("zero false success", false_success == 0), ("runtime < 60 s", elapsed < 60)],
        f"solved={solved} exhausted={exhausted} false={false_success} time={elapsed:.2f}s",
    )


# 7 -----------------------------------------------------------------------


def _pipeline(tmp, name, threads, monkeypatch):
    monkeypatch.setenv("APAMOEBA_THREADS", str(threads))
    out = tmp / f"{name}-{threads}"
    if name == "c1":
        args = ["exp_minus_two.json", "--box=-3:3", "--res", "601"]
    else:
        args = ["line.json", "--box=-3:3", "--res", "121"]
    spec = str(SUMS / args[0])
    rc1 = cli.main(["amoeba", spec, *args[1:], "--threads", str(threads), "--out", str(out / "amoeba")])
    rc2 = cli.main(["verify", spec, *args[1:], "--threads", str(threads), "--out", str(out / "verify")])
    assert rc1 == 0 and rc2 == 0
    return {p.relative_to(out): p.read_bytes() for p in sorted(out.rglob("*")) if p.is_file()}


def test_criterion_7_determinism(tmp_path, monkeypatch):
    n = max(4, default_threads())
    checks, detail = [], []
    for name in ("c1", "c2"):
        one = _pipeline(tmp_path, name, 1, monkeypatch)
        many = _pipeline(tmp_path, name, n, monkeypatch)
        same = one.keys() == many.keys() and all(one[k] == many[k] for k in one)
        checks.append((f"{name} identical at 1 and {n} threads", same))
        detail.append(f"{name}: {len(one)} files")
    record(7, checks, "; ".join(detail))
