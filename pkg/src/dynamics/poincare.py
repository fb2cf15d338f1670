# poincare.py
"""
Fixed points at infinity of the polynomial Ricci flow.

The chart U = {y_1 > 0} of the Poincare compactification uses the coordinates
u_i = x_{i+1} / x_1 (i < r) and u_r = 1 / x_1; infinity is the hyperplane u_r = 0. The
factor u_r^d produced by the substitution cancels against the denominators, so every
chart system is polynomial. The norm factor of the central projection is left out; it
does not change where the fixed points are or how they are classified.

A fixed point at infinity (a_1, ..., a_{r-1}, 0) corresponds to the Einstein direction
(1, a_1, ..., a_{r-1}). Its restricted Jacobian is (r-1)x(r-1); the u_r direction adds one
more eigenvalue, -RF_1(1, a), which is positive and is counted as unstable.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from dynamics.flow import STANDARD, PolynomialSystem, polynomialize
from geometry.catalog import FlagSpace, expected_classification
from geometry.newton import SolverError, SolverOptions, find_positive_roots, snap_rational
from geometry.polynomials import CompiledSystem, LaurentPolynomial, jacobian_matrix
from geometry.ricci import compiled_ricci, exact_ricci, sort_directions

logger = logging.getLogger(__name__)

HYPERBOLICITY_TOL = 1e-6
KAHLER_EINSTEIN_ATOL = 1e-6


class NonHyperbolicError(ArithmeticError):
    """Raised when a linearization has an eigenvalue on the imaginary axis."""


# -----------------------------
# Chart systems
# -----------------------------
@dataclass(frozen=True)
class ChartSystem:
    space: FlagSpace
    components: Tuple[LaurentPolynomial, ...]   # r right-hand sides in (u_1, ..., u_r)
    degree: int

    def is_infinity_invariant(self) -> bool:
        """The u_r equation vanishes identically on u_r = 0."""
        last = self.space.r - 1
        return self.components[-1].restrict_zero(last).is_zero


@dataclass(frozen=True)
class InfinitySystem:
    space: FlagSpace
    components: Tuple[LaurentPolynomial, ...]   # r-1 right-hand sides in (u_1, ..., u_{r-1})
    transverse: LaurentPolynomial               # eigenvalue of the u_r direction, -RF_1(1, u)
    degree: int

    @property
    def nvars(self) -> int:
        return self.space.r - 1

    @cached_property
    def compiled(self) -> CompiledSystem:
        return CompiledSystem.from_polynomials(self.components)

    @cached_property
    def jacobian_polynomials(self) -> List[List[LaurentPolynomial]]:
        return jacobian_matrix(self.components)

    def __call__(self, point: Sequence[float]) -> np.ndarray:
        return self.compiled(np.asarray(point, dtype=float))


def chart_images(r: int) -> List[LaurentPolynomial]:
    """x_1 -> 1/u_r and x_{i+1} -> u_i/u_r, as monomials in (u_1, ..., u_r)."""
    images = [LaurentPolynomial.monomial(r, [0] * (r - 1) + [-1])]
    for i in range(r - 1):
        exps = [0] * r
        exps[i] = 1
        exps[-1] = -1
        images.append(LaurentPolynomial.monomial(r, exps))
    return images


@lru_cache(maxsize=None)
def chart_system(polysys: PolynomialSystem) -> ChartSystem:
    r = polysys.space.r
    images = chart_images(r)
    lift = [0] * (r - 1) + [polysys.degree]
    bars = [comp.substitute(images).shift(lift) for comp in polysys.components]
    components = []
    for i in range(r - 1):
        components.append(-LaurentPolynomial.variable(r, i) * bars[0] + bars[i + 1])
    components.append(-LaurentPolynomial.variable(r, r - 1) * bars[0])
    for comp in components:
        if not comp.is_polynomial():
            raise ArithmeticError(f"{polysys.space.name}: chart system is not polynomial")
    return ChartSystem(space=polysys.space, components=tuple(components), degree=polysys.degree)


@lru_cache(maxsize=None)
def infinity_system(chart: ChartSystem) -> InfinitySystem:
    last = chart.space.r - 1
    if not chart.is_infinity_invariant():
        raise ArithmeticError(f"{chart.space.name}: infinity is not invariant in the chart system")
    components = tuple(
        c.restrict_zero(last).drop_variable(last) for c in chart.components[:-1]
    )
    transverse = chart.components[-1].derivative(last).restrict_zero(last).drop_variable(last)
    return InfinitySystem(
        space=chart.space, components=components, transverse=transverse, degree=chart.degree
    )


def system_at_infinity(space: FlagSpace, convention: str = STANDARD) -> InfinitySystem:
    return infinity_system(chart_system(polynomialize(space, convention)))


# -----------------------------
# Linearization
# -----------------------------
SystemLike = Union[InfinitySystem, Sequence[LaurentPolynomial]]


def _symbolic_jacobian(system: SystemLike) -> List[List[LaurentPolynomial]]:
    if isinstance(system, InfinitySystem):
        return system.jacobian_polynomials
    return jacobian_matrix(list(system))


def jacobian_at(system: SystemLike, point: Sequence[float]) -> np.ndarray:
    """Symbolic derivatives of the right-hand sides, evaluated in floating point."""
    rows = _symbolic_jacobian(system)
    if not rows:
        return np.zeros((0, 0))
    pt = [float(v) for v in point]
    return np.array([[float(p.evaluate(pt)) for p in row] for row in rows])


def exact_jacobian_at(system: SystemLike, point: Sequence) -> Tuple[Tuple[Fraction, ...], ...]:
    """Same as `jacobian_at` for a rational point, in exact arithmetic."""
    pt = [Fraction(v) for v in point]
    return tuple(tuple(Fraction(p.evaluate(pt)) for p in row) for row in _symbolic_jacobian(system))


@dataclass(frozen=True)
class FixedPointAtInfinity:
    index: int                                  # j, 1-based, Kahler-Einstein first
    chart_coords: Tuple[float, ...]
    representative: Tuple[float, ...]           # (1, a_1, ..., a_{r-1})
    eigenvalues: Tuple[complex, ...]
    jacobian: Tuple[Tuple[float, ...], ...]
    transverse_eigenvalue: float
    d_stb: int
    d_unstb: int
    lam: float
    residual: float
    exact_chart: Optional[Tuple[Fraction, ...]] = None
    exact_lam: Optional[Fraction] = None

    @property
    def is_kahler_einstein(self) -> bool:
        ke = np.arange(1, len(self.representative) + 1)
        return bool(np.allclose(self.representative, ke, rtol=0, atol=KAHLER_EINSTEIN_ATOL))

    @property
    def exact_representative(self) -> Optional[Tuple[Fraction, ...]]:
        return (Fraction(1), *self.exact_chart) if self.exact_chart else None

    def to_record(self) -> Dict[str, Any]:
        rec: Dict[str, Any] = {
            "index": self.index,
            "chart": list(self.chart_coords),
            "representative": list(self.representative),
            "eigenvalues": [{"re": float(z.real), "im": float(z.imag)} for z in self.eigenvalues],
            "transverse_eigenvalue": self.transverse_eigenvalue,
            "d_stb": self.d_stb,
            "d_unstb": self.d_unstb,
            "lambda": self.lam,
            "is_kahler_einstein": self.is_kahler_einstein,
        }
        if self.exact_lam is not None:
            rec["exact_lambda"] = str(self.exact_lam)
        return rec


def _sign_counts(
    eigenvalues: Sequence[complex], jacobian: np.ndarray, tol: float
) -> Tuple[int, int]:
    eig = np.asarray(eigenvalues, dtype=complex)
    if eig.size == 0:
        return 0, 1
    scale = float(np.linalg.norm(jacobian, 2)) if np.size(jacobian) else float(np.max(np.abs(eig)))
    re = eig.real
    if np.any(np.abs(re) <= tol * max(scale, np.finfo(float).tiny)):
        raise NonHyperbolicError(
            f"eigenvalue with real part within {tol:g}*|J| of zero: {eig.tolist()}"
        )
    return int(np.sum(re < 0)), int(np.sum(re > 0)) + 1


def classify_stability(fp: FixedPointAtInfinity, tol: float = HYPERBOLICITY_TOL) -> Tuple[int, int]:
    """(d_stb, d_unstb); the radial line toward the origin adds one unstable direction."""
    return _sign_counts(fp.eigenvalues, np.asarray(fp.jacobian, dtype=float), tol)


# -----------------------------
# Fixed points
# -----------------------------
def normalized_residual(
    components: Sequence[LaurentPolynomial], point: Sequence[float]
) -> float:
    """
    Sup over components of |P_k(point)| / max|coefficient of P_k|, evaluated exactly at the
    floating-point point. Rescaling a component by a positive constant leaves it unchanged.
    """
    exact = [Fraction(float(v)) for v in point]
    worst = Fraction(0)
    for p in components:
        if p.is_zero:
            continue
        top = max(abs(c) for _, c in p.items())
        worst = max(worst, abs(p.evaluate(exact)) / top)
    return float(worst)


def find_fixed_points_at_infinity(
    space: FlagSpace,
    opts: Optional[SolverOptions] = None,
    convention: str = STANDARD,
    tol: float = HYPERBOLICITY_TOL,
) -> List[FixedPointAtInfinity]:
    opts = opts or SolverOptions()
    system = system_at_infinity(space, convention)
    roots = find_positive_roots(
        system.compiled,
        opts,
        extra_starts=[tuple(range(2, space.r + 1))],
        label=f"fixed points at infinity of {space.name}",
    )
    points: List[FixedPointAtInfinity] = []
    for j, i in enumerate(sort_directions(roots.roots, space), start=1):
        a = tuple(float(v) for v in roots.roots[i])
        exact = snap_rational(a, system.components)
        if exact:
            a = tuple(float(v) for v in exact)
            jac = np.array(exact_jacobian_at(system, exact), dtype=float)
            transverse = float(system.transverse.evaluate(exact))
        else:
            jac = jacobian_at(system, a)
            transverse = float(system.transverse.evaluate(list(a)))
        eig = np.linalg.eigvals(jac)
        d_stb, d_unstb = _sign_counts(eig, jac, tol)
        rep = (1.0, *a)
        ric = compiled_ricci(space)(np.asarray(rep))
        exact_lam = exact_ricci(space, (1, *exact))[0] if exact else None
        residual = normalized_residual(system.components, a)
        points.append(
            FixedPointAtInfinity(
                index=j,
                chart_coords=a,
                representative=rep,
                eigenvalues=tuple(complex(z) for z in eig),
                jacobian=tuple(tuple(float(v) for v in row) for row in jac),
                transverse_eigenvalue=transverse,
                d_stb=d_stb,
                d_unstb=d_unstb,
                lam=float(ric[0]),
                residual=residual,
                exact_chart=exact,
                exact_lam=exact_lam,
            )
        )
    if space.expected_n is not None and len(points) != space.expected_n:
        logger.warning(
            "%s: found %d fixed points at infinity, expected %d",
            space.name, len(points), space.expected_n,
        )
    logger.info("%s: %d fixed points at infinity", space.name, len(points))
    return points


def fixed_point_report(space: FlagSpace, points: Sequence[FixedPointAtInfinity]) -> Dict[str, Any]:
    return {
        "space": space.name,
        "N": len(points),
        "points": [fp.to_record() for fp in points],
    }


# -----------------------------
# Invariant lines
# -----------------------------
@lru_cache(maxsize=None)
def invariant_line_system(space: FlagSpace) -> Tuple[LaurentPolynomial, ...]:
    """
    v_{i+1} X_i(v) - v_i X_{i+1}(v) = 0 for i = 1..r-1 with v = (1, v_2, ..., v_r):
    each consecutive pair of coordinates of X(v) is normal to the matching rotation of v.
    """
    r = space.r
    comps = [c.fix_variable(0, 1) for c in polynomialize(space).components]
    v = [LaurentPolynomial.constant(r - 1, 1)] + [
        LaurentPolynomial.variable(r - 1, i) for i in range(r - 1)
    ]
    return tuple(v[i + 1] * comps[i] - v[i] * comps[i + 1] for i in range(r - 1))


def find_invariant_lines(
    space: FlagSpace,
    opts: Optional[SolverOptions] = None,
) -> List[Tuple[float, ...]]:
    """Directions (1, v_2, ..., v_r) of the rays through the origin preserved by the flow."""
    opts = opts or SolverOptions()
    roots = find_positive_roots(
        CompiledSystem.from_polynomials(invariant_line_system(space)),
        opts,
        extra_starts=[tuple(range(2, space.r + 1))],
        label=f"invariant lines of {space.name}",
    )
    order = sort_directions(roots.roots, space)
    return [(1.0, *(float(v) for v in roots.roots[i])) for i in order]


# -----------------------------
# Classification table
# -----------------------------
@dataclass(frozen=True)
class Table1Row:
    space: FlagSpace
    found: Tuple[Tuple[int, int], ...]               # (d_stb, d_unstb) per fixed point
    expected: Optional[Tuple[Tuple[int, int], ...]]
    error: Optional[str] = None

    @property
    def matches(self) -> bool:
        return self.error is None and self.expected is not None and self.found == self.expected

    def diff(self) -> List[str]:
        name = self.space.name
        if self.error is not None:
            return [f"{name}: {self.error}"]
        if self.expected is None:
            return [f"{name}: no expected classification in the catalog"]
        lines = []
        if len(self.found) != len(self.expected):
            lines.append(f"{name}: N expected {len(self.expected)}, found {len(self.found)}")
        for j, (got, want) in enumerate(zip(self.found, self.expected), start=1):
            if got != want:
                lines.append(f"{name}: j={j} (d_stb, d_unstb) expected {want}, found {got}")
        return lines


def table1_rows(
    spaces: Sequence[FlagSpace],
    opts: Optional[SolverOptions] = None,
) -> List[Table1Row]:
    """Recompute N and (d_stb, d_unstb) for every space; failures become row errors."""
    rows = []
    for space in spaces:
        expected = expected_classification(space)
        try:
            points = find_fixed_points_at_infinity(space, opts)
        except (SolverError, NonHyperbolicError) as exc:
            logger.warning("%s: classification failed: %s", space.name, exc)
            rows.append(Table1Row(space, (), tuple(expected) if expected else None, str(exc)))
            continue
        found = tuple((fp.d_stb, fp.d_unstb) for fp in points)
        rows.append(Table1Row(space, found, tuple(expected) if expected else None))
    return rows
