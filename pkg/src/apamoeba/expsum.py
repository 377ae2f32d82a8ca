"""Finite exponential sums with exactly encoded frequencies.

A frequency is a real p-vector whose j-th coordinate is the rational
combination ``sum_m Q[j][m] * beta_m`` of user-declared base irrationals
``beta`` (``beta_1 = 1`` carries the rational part). Keeping ``Q`` exact makes
the additive group generated by the spectrum computable without rounding.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, reduce
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .lattice import echelon_basis, rational_rank, solve_in_echelon

__all__ = [
    "BaseIrrationals",
    "FrequencyVector",
    "ExponentialSum",
    "GroupBasis",
    "DomainTooDeepError",
    "evaluate",
    "spectrum",
    "group_basis",
    "express_in_basis",
    "realize",
]

# exp() overflows a double above this
_EXP_LIMIT = 709.0


class DomainTooDeepError(OverflowError):
    """A term's modulus ``|c| exp(-<y, lambda>)`` overflows double precision."""

    def __init__(self, term_index: int, exponent: float):
        super().__init__(
            f"term {term_index}: exponent -<y,lambda> = {exponent:.6g} overflows double precision"
        )
        self.term_index = term_index
        self.exponent = exponent


@dataclass(frozen=True)
class BaseIrrationals:
    """Reals ``beta_1 = 1, beta_2, ...`` assumed linearly independent over Q.

    Independence is asserted by the user, not checked.
    """

    values: Tuple[float, ...]
    labels: Tuple[str, ...]

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        labels = tuple(str(s) for s in self.labels)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "labels", labels)
        if not values:
            raise ValueError("at least one base irrational is required")
        if len(values) != len(labels):
            raise ValueError("values and labels differ in length")
        if values[0] != 1.0:
            raise ValueError("the first base irrational must be 1")
        if not all(math.isfinite(v) and v != 0.0 for v in values):
            raise ValueError("base irrationals must be finite and nonzero")
        if len(set(labels)) != len(labels):
            raise ValueError("base irrational labels must be distinct")

    @classmethod
    def rational(cls) -> "BaseIrrationals":
        return cls((1.0,), ("1",))

    @property
    def size(self) -> int:
        return len(self.values)


def _frac(x) -> Fraction:
    if isinstance(x, float):
        raise TypeError("frequency entries must be exact (int, Fraction or 'a/b' string)")
    return Fraction(x)


@dataclass(frozen=True, order=True)
class FrequencyVector:
    """Exact frequency: ``coords[j][m]`` is the coefficient of ``beta_m`` in coordinate j."""

    coords: Tuple[Tuple[Fraction, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(_frac(a) for a in row) for row in self.coords)
        if not rows or not rows[0]:
            raise ValueError("frequency matrix must be at least 1x1")
        if len({len(r) for r in rows}) != 1:
            raise ValueError("ragged frequency matrix")
        object.__setattr__(self, "coords", rows)

    @classmethod
    def from_rationals(cls, values: Sequence, nbase: int = 1) -> "FrequencyVector":
        """Vector with rational coordinates (only the ``beta_1 = 1`` column set)."""
        return cls(tuple((_frac(v),) + (Fraction(0),) * (nbase - 1) for v in values))

    @classmethod
    def zero(cls, dimension: int, nbase: int = 1) -> "FrequencyVector":
        return cls(tuple((Fraction(0),) * nbase for _ in range(dimension)))

    @property
    def dimension(self) -> int:
        return len(self.coords)

    @property
    def nbase(self) -> int:
        return len(self.coords[0])

    def flat(self) -> Tuple[Fraction, ...]:
        return tuple(a for row in self.coords for a in row)

    def is_zero(self) -> bool:
        return not any(self.flat())

    def is_integral(self) -> bool:
        """True when every coordinate is an integer (a Laurent exponent)."""
        return all(row[0].denominator == 1 and not any(row[1:]) for row in self.coords)

    def __add__(self, other: "FrequencyVector") -> "FrequencyVector":
        return FrequencyVector(
            tuple(tuple(a + b for a, b in zip(r, s)) for r, s in zip(self.coords, other.coords))
        )

    def __neg__(self) -> "FrequencyVector":
        return FrequencyVector(tuple(tuple(-a for a in r) for r in self.coords))

    def __sub__(self, other: "FrequencyVector") -> "FrequencyVector":
        return self + (-other)

    def scale(self, k) -> "FrequencyVector":
        k = _frac(k)
        return FrequencyVector(tuple(tuple(k * a for a in r) for r in self.coords))

    def realize(self, basis: BaseIrrationals) -> np.ndarray:
        return realize(self, basis)

    def __str__(self) -> str:
        return "(" + ", ".join("[" + " ".join(str(a) for a in r) + "]" for r in self.coords) + ")"


def realize(freq: FrequencyVector, basis_values: BaseIrrationals) -> np.ndarray:
    """Numeric vector ``lambda_j = sum_m Q[j][m] beta_m``."""
    if freq.nbase != basis_values.size:
        raise ValueError("frequency and base irrationals have different sizes")
    beta = basis_values.values
    return np.array(
        [math.fsum(float(q) * b for q, b in zip(row, beta)) for row in freq.coords], dtype=float
    )


@dataclass(frozen=True)
class ExponentialSum:
    """``f(z) = sum_k c_k exp(i <z, lambda_k>)`` in canonical form.

    Terms with equal frequency are merged, zero coefficients dropped and the
    rest sorted lexicographically by the exact frequency matrix.
    """

    dimension: int
    basis: BaseIrrationals
    terms: Tuple[Tuple[complex, FrequencyVector], ...]

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        merged: Dict[FrequencyVector, complex] = {}
        for coef, freq in self.terms:
            coef = complex(coef)
            if not (math.isfinite(coef.real) and math.isfinite(coef.imag)):
                raise ValueError("coefficients must be finite")
            if freq.dimension != self.dimension or freq.nbase != self.basis.size:
                raise ValueError(f"frequency {freq} does not match dimension/basis")
            merged[freq] = merged.get(freq, 0j) + coef
        terms = tuple(sorted(((c, f) for f, c in merged.items() if c != 0), key=lambda t: t[1]))
        if not terms:
            raise ValueError("an exponential sum needs at least one nonzero term")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def from_terms(
        cls,
        terms: Iterable[Tuple[complex, Sequence]],
        basis: Optional[BaseIrrationals] = None,
    ) -> "ExponentialSum":
        """Build from ``(coefficient, frequency)`` pairs.

        A frequency may be a FrequencyVector or a sequence of rationals (taken
        over ``beta_1 = 1``).
        """
        basis = basis or BaseIrrationals.rational()
        items = []
        for c, f in terms:
            if not isinstance(f, FrequencyVector):
                f = FrequencyVector.from_rationals(f, basis.size)
            items.append((c, f))
        if not items:
            raise ValueError("an exponential sum needs at least one nonzero term")
        return cls(items[0][1].dimension, basis, tuple(items))

    def __len__(self) -> int:
        return len(self.terms)

    @cached_property
    def coefficients(self) -> np.ndarray:
        return np.array([c for c, _ in self.terms], dtype=complex)

    @cached_property
    def frequencies(self) -> np.ndarray:
        """Realized frequencies, shape (K, p)."""
        return np.array([realize(f, self.basis) for _, f in self.terms], dtype=float)

    @cached_property
    def group(self) -> "GroupBasis":
        return group_basis(spectrum(self))

    @cached_property
    def lift(self) -> np.ndarray:
        """Integer coordinates of each term frequency in ``self.group``, shape (K, q).

        With ``Lambda`` the realized generators, ``f(x + iy)`` equals the
        2*pi-periodic function ``sum_k a_k(y) exp(i <lift_k, xi>)`` at
        ``xi = Lambda x``.
        """
        g = self.group
        rows = [express_in_basis(f, g) for _, f in self.terms]
        return np.array(rows, dtype=np.int64).reshape(len(self.terms), len(g))

    def is_laurent(self) -> bool:
        return all(f.is_integral() for _, f in self.terms)

    def log_amplitudes(self, y) -> np.ndarray:
        """``log|c_k| - <y, lambda_k>`` for each term; y may be (p,) or (M, p)."""
        y = np.asarray(y, dtype=float)
        return np.log(np.abs(self.coefficients)) - y @ self.frequencies.T

    def amplitudes(self, y) -> np.ndarray:
        """Complex ``c_k exp(-<y, lambda_k>)`` at one base point y."""
        y = np.asarray(y, dtype=float)
        logmod = self.log_amplitudes(y)
        over = np.flatnonzero(logmod > _EXP_LIMIT)
        if over.size:
            k = int(over[0])
            raise DomainTooDeepError(k, float(-(self.frequencies[k] @ y)))
        return self.coefficients * np.exp(-(self.frequencies @ y))

    def scaled(self, k: complex) -> "ExponentialSum":
        return ExponentialSum(self.dimension, self.basis, tuple((k * c, f) for c, f in self.terms))

    def translated(self, t) -> "ExponentialSum":
        """The sum ``f(z + t)`` for real ``t``."""
        t = np.asarray(t, dtype=float)
        return ExponentialSum(
            self.dimension,
            self.basis,
            tuple((c * np.exp(1j * float(t @ realize(f, self.basis))), f) for c, f in self.terms),
        )

    def __call__(self, z) -> complex:
        return evaluate(self, z)


def evaluate(sum_: ExponentialSum, z) -> complex:
    """``sum_k c_k exp(i <z, lambda_k>)`` at a complex p-vector z."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if z.shape != (sum_.dimension,):
        raise ValueError(f"z must have shape ({sum_.dimension},)")
    if not np.all(np.isfinite(z)):
        raise ValueError("z must be finite")
    amps = sum_.amplitudes(z.imag)
    return complex(np.sum(amps * np.exp(1j * (sum_.frequencies @ z.real))))


def spectrum(sum_: ExponentialSum) -> frozenset:
    """Exact frequencies of the nonzero terms."""
    return frozenset(f for _, f in sum_.terms)


@dataclass(frozen=True)
class GroupBasis:
    """Basis of the additive group generated by a finite set of frequencies.

    Internally the group is the row lattice ``echelon / denominator`` of the
    flattened rational matrices.
    """

    generators: Tuple[FrequencyVector, ...]
    denominator: int
    echelon: Tuple[Tuple[int, ...], ...] = field(repr=False)
    dimension: int = 1
    nbase: int = 1

    def __len__(self) -> int:
        return len(self.generators)

    def realize(self, basis_values: BaseIrrationals) -> np.ndarray:
        """Realized generators as rows, shape (k, p)."""
        if not self.generators:
            return np.zeros((0, self.dimension))
        return np.array([realize(g, basis_values) for g in self.generators])

    def combine(self, coeffs: Sequence) -> FrequencyVector:
        """``sum_j coeffs[j] * generators[j]`` exactly (coefficients may be rational)."""
        out = FrequencyVector.zero(self.dimension, self.nbase)
        for a, g in zip(coeffs, self.generators):
            out = out + g.scale(a)
        return out


def _lcm(a: int, b: int) -> int:
    return a * b // math.gcd(a, b)


def group_basis(freqs: Iterable[FrequencyVector]) -> GroupBasis:
    """Basis of the subgroup generated by ``freqs``, via integer Hermite normal form."""
    freqs = sorted(freqs)
    if not freqs:
        raise ValueError("spectrum must be nonempty")
    p, nb = freqs[0].dimension, freqs[0].nbase
    flats = [f.flat() for f in freqs]
    den = reduce(_lcm, (a.denominator for row in flats for a in row), 1)
    ints = [[int(a * den) for a in row] for row in flats]
    ech = echelon_basis(ints)
    gens = []
    for row in ech:
        vals = [Fraction(a, den) for a in row]
        gens.append(FrequencyVector(tuple(tuple(vals[j * nb:(j + 1) * nb]) for j in range(p))))
    basis = GroupBasis(tuple(gens), den, tuple(tuple(r) for r in ech), p, nb)
    assert rational_rank([g.flat() for g in gens]) == len(gens)
    return basis


def express_in_basis(v: FrequencyVector, basis: GroupBasis) -> Optional[List[int]]:
    """Integer coordinates of ``v`` in ``basis``, or None when v is not in the group."""
    if v.dimension != basis.dimension or v.nbase != basis.nbase:
        raise ValueError("vector does not match the basis shape")
    scaled = [a * basis.denominator for a in v.flat()]
    if any(a.denominator != 1 for a in scaled):
        return None
    if not basis.echelon:
        return [] if not any(scaled) else None
    return solve_in_echelon(basis.echelon, [int(a) for a in scaled])
