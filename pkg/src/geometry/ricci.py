# ricci.py
"""
Ricci components, scalar curvature and Einstein metrics of diagonal invariant metrics.

A diagonal metric is a point x of the positive orthant, x_i scaling the Killing-form
metric on the i-th isotropy summand. The Ricci components ric_k and the scalar curvature
are homogeneous Laurent polynomials of degree -1 built exactly from the structure
constants; floats appear only when they are evaluated.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import numpy as np

from geometry.catalog import FlagSpace
from geometry.newton import (
    EINSTEIN_OPTIONS,
    SolverError,
    SolverOptions,
    find_positive_roots,
    snap_rational,
)
from geometry.polynomials import CompiledSystem, LaurentPolynomial

logger = logging.getLogger(__name__)


class MetricError(ValueError):
    """Raised when a metric vector has the wrong length or a non-positive coordinate."""


# -----------------------------
# Exact Laurent polynomials
# -----------------------------
def _unit(r: int, plus: Sequence[int] = (), minus: Sequence[int] = ()) -> List[int]:
    exps = [0] * r
    for i in plus:
        exps[i] += 1
    for i in minus:
        exps[i] -= 1
    return exps


@lru_cache(maxsize=None)
def ricci_polynomials(space: FlagSpace) -> Tuple[LaurentPolynomial, ...]:
    """
    ric_k = 1/(2 x_k) + 1/(4 d_k) sum_ij [k;ij] x_k/(x_i x_j) - 1/(2 d_k) sum_ij [j;ki] x_j/(x_k x_i)
    """
    r = space.r
    out = []
    for k in range(r):
        dk = space.dims[k]
        poly = LaurentPolynomial.monomial(r, _unit(r, minus=[k]), Fraction(1, 2))
        for i in range(r):
            for j in range(r):
                c = space.constant(k + 1, i + 1, j + 1)
                if c:
                    poly += LaurentPolynomial.monomial(r, _unit(r, [k], [i, j]), c / (4 * dk))
                c = space.constant(j + 1, k + 1, i + 1)
                if c:
                    poly -= LaurentPolynomial.monomial(r, _unit(r, [j], [k, i]), c / (2 * dk))
        out.append(poly)
    return tuple(out)


@lru_cache(maxsize=None)
def scalar_polynomial(space: FlagSpace) -> LaurentPolynomial:
    """Scal = 1/2 sum_i d_i/x_i - 1/4 sum_{i,j,m} [m;ij] x_m/(x_i x_j)."""
    r = space.r
    poly = LaurentPolynomial.zero(r)
    for i in range(r):
        poly += LaurentPolynomial.monomial(r, _unit(r, minus=[i]), Fraction(space.dims[i], 2))
    for m in range(r):
        for i in range(r):
            for j in range(r):
                c = space.constant(m + 1, i + 1, j + 1)
                if c:
                    poly -= LaurentPolynomial.monomial(r, _unit(r, [m], [i, j]), c / 4)
    return poly


@lru_cache(maxsize=None)
def compiled_ricci(space: FlagSpace) -> CompiledSystem:
    return CompiledSystem.from_polynomials(ricci_polynomials(space))


@lru_cache(maxsize=None)
def _compiled_scalar(space: FlagSpace) -> CompiledSystem:
    return CompiledSystem.from_polynomials([scalar_polynomial(space)])


# -----------------------------
# Evaluation
# -----------------------------
@dataclass(frozen=True)
class RicciVector:
    ric: Tuple[float, ...]
    scal: float


def as_metric(space: FlagSpace, x: Sequence[float]) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1 or arr.shape[0] != space.r:
        raise MetricError(f"{space.name}: expected {space.r} metric coordinates, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise MetricError(f"{space.name}: metric coordinates must be positive, got {arr.tolist()}")
    return arr


def ricci_components(space: FlagSpace, x: Sequence[float]) -> RicciVector:
    arr = as_metric(space, x)
    ric = compiled_ricci(space)(arr)
    return RicciVector(ric=tuple(float(v) for v in ric), scal=float(np.dot(space.dims, ric)))


def exact_ricci(space: FlagSpace, x: Sequence) -> Tuple[Fraction, ...]:
    """Ricci components at a rational point, in exact arithmetic."""
    point = [Fraction(v) for v in x]
    if len(point) != space.r or any(v <= 0 for v in point):
        raise MetricError(f"{space.name}: need {space.r} positive rational coordinates")
    return tuple(p.evaluate(point) for p in ricci_polynomials(space))


def scalar_curvature(space: FlagSpace, x: Sequence[float]) -> float:
    arr = as_metric(space, x)
    return float(_compiled_scalar(space)(arr)[0])


def einstein_residual(space: FlagSpace, x: Sequence[float]) -> np.ndarray:
    """ric_i - mean(ric); zero exactly at Einstein metrics."""
    arr = as_metric(space, x)
    ric = compiled_ricci(space)(arr)
    return ric - ric.mean()


# -----------------------------
# Einstein metrics
# -----------------------------
@dataclass(frozen=True)
class EinsteinMetric:
    x: Tuple[float, ...]                        # normalized to x_1 = 1
    lam: float
    residual: float
    exact_x: Optional[Tuple[Fraction, ...]] = None
    exact_lam: Optional[Fraction] = None

    @property
    def is_kahler_einstein(self) -> bool:
        return bool(np.allclose(self.x, np.arange(1, len(self.x) + 1), rtol=0, atol=1e-6))


@lru_cache(maxsize=None)
def einstein_system(space: FlagSpace) -> Tuple[LaurentPolynomial, ...]:
    """The first r-1 mean-centered residuals with x_1 = 1, in the unknowns x_2..x_r."""
    ric = ricci_polynomials(space)
    mean = sum(ric, LaurentPolynomial.zero(space.r)) * Fraction(1, space.r)
    return tuple((ric[i] - mean).fix_variable(0, 1) for i in range(space.r - 1))


def kahler_einstein_lambda(space: FlagSpace) -> Fraction:
    """Einstein constant of the Kahler-Einstein metric (1, 2, ..., r)."""
    return exact_ricci(space, space.kahler_einstein)[0]


def einstein_constants_r2(d1: int, d2: int) -> Tuple[Fraction, Fraction]:
    """(lambda_1, lambda_2) of the two Einstein metrics (1, 2) and (1, 4 d2 / (d1 + 2 d2))."""
    lam1 = Fraction(d1 + 2 * d2, 2 * (d1 + 4 * d2))
    lam2 = Fraction(d1 * d1 + 6 * d1 * d2 + 4 * d2 * d2, 2 * (d1 + 2 * d2) * (d1 + 4 * d2))
    return lam1, lam2


def sort_directions(points: Sequence[Sequence[float]], space: FlagSpace) -> List[int]:
    """
    Order for normalized directions: Kahler-Einstein first, then the catalog's reference
    order when it has one, otherwise lexicographic.
    """
    ke = np.arange(2, space.r + 1, dtype=float)
    refs = [np.asarray(p) for p in space.reference_points]

    def key(i: int):
        p = np.asarray(points[i], dtype=float)
        if np.allclose(p, ke, atol=1e-6):
            return (0, 0, ())
        for rank, ref in enumerate(refs):
            if np.allclose(p, ref, atol=1e-4):
                return (1, rank, ())
        return (2, 0, tuple(p))

    return sorted(range(len(points)), key=key)


def find_einstein_metrics(
    space: FlagSpace,
    opts: Optional[SolverOptions] = None,
) -> List[EinsteinMetric]:
    opts = opts or EINSTEIN_OPTIONS
    polys = einstein_system(space)
    roots = find_positive_roots(
        CompiledSystem.from_polynomials(polys),
        opts,
        extra_starts=[space.kahler_einstein[1:]],
        label=f"Einstein metrics of {space.name}",
    )
    metrics: List[EinsteinMetric] = []
    for i in sort_directions(roots.roots, space):
        u = roots.roots[i]
        exact = snap_rational(u, polys)
        exact_x = (Fraction(1), *exact) if exact else None
        x = tuple(float(v) for v in exact_x) if exact_x else (1.0, *(float(v) for v in u))
        ric = compiled_ricci(space)(np.asarray(x))
        metrics.append(
            EinsteinMetric(
                x=x,
                lam=float(ric.mean()),
                residual=float(roots.residuals[i]),
                exact_x=exact_x,
                exact_lam=exact_ricci(space, exact_x)[0] if exact_x else None,
            )
        )
    if space.expected_n is not None and len(metrics) < space.expected_n:
        raise SolverError(
            f"{space.name}: found {len(metrics)} Einstein metrics, expected {space.expected_n}"
        )
    if space.expected_n is not None and len(metrics) > space.expected_n:
        logger.warning(
            "%s: found %d Einstein metrics, expected %d", space.name, len(metrics), space.expected_n
        )
    return metrics
