# flow.py
"""
The homogeneous Ricci flow x_k' = -2 x_k ric_k(x) on the positive orthant.

Besides the raw vector field this module clears its denominators (a positive factor that
turns the flow into a homogeneous polynomial system with the same trajectories), integrates
trajectories with the Dormand-Prince stepper and carries the Lyapunov certificate for r = 2.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from math import lcm
from pathlib import Path
from typing import IO, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from dynamics.integrator import (
    IntegrationResult,
    IntegratorOptions,
    StepSizeError,
    dormand_prince,
)
from geometry.catalog import FlagSpace
from geometry.polynomials import CompiledSystem, LaurentPolynomial, common_denominator
from geometry.ricci import (
    as_metric,
    compiled_ricci,
    ricci_components,
    ricci_polynomials,
    scalar_curvature,
)

logger = logging.getLogger(__name__)

STANDARD = "standard"
CLEARED = "cleared"
CONVENTIONS = (STANDARD, CLEARED)


class WrongRankError(ValueError):
    """Raised when an operation defined for two summands gets a different space."""


def hrf_vector_field(space: FlagSpace, x: Sequence[float]) -> np.ndarray:
    arr = as_metric(space, x)
    ric = np.asarray(ricci_components(space, arr).ric)
    return -2.0 * arr * ric


# -----------------------------
# Polynomial form
# -----------------------------
@dataclass(frozen=True)
class PolynomialSystem:
    """RF_k = mu(x) * (-2 x_k ric_k), homogeneous of one common degree."""

    space: FlagSpace
    components: Tuple[LaurentPolynomial, ...]
    degree: int
    multiplier: LaurentPolynomial
    convention: str = STANDARD

    @cached_property
    def compiled(self) -> CompiledSystem:
        return CompiledSystem.from_polynomials(self.components)

    def __call__(self, x: Sequence[float]) -> np.ndarray:
        return self.compiled(np.asarray(x, dtype=float))

    def terms(self, k: int) -> List[Tuple[Fraction, Tuple[int, ...]]]:
        """Monomials of RF_{k+1} as (coefficient, exponents)."""
        return [(c, e) for e, c in sorted(self.components[k].items(), reverse=True)]

    def scaled(self, factor: Union[int, Fraction]) -> "PolynomialSystem":
        return PolynomialSystem(
            space=self.space,
            components=tuple(p * factor for p in self.components),
            degree=self.degree,
            multiplier=self.multiplier * factor,
            convention=self.convention,
        )


def standard_multiplier_constant(space: FlagSpace) -> Optional[Fraction]:
    """Constant of the customary clearing factor, or None when there is no customary one."""
    d = space.dims
    if space.r == 2:
        return Fraction(2 * (d[0] + 4 * d[1]))
    if space.r == 3:
        return Fraction(2 * d[0] * d[1] * (d[0] + 4 * d[1] + 9 * d[2]))
    return space.multiplier


@lru_cache(maxsize=None)
def polynomialize(space: FlagSpace, convention: str = STANDARD) -> PolynomialSystem:
    """
    Clear the denominators of -2 x_k ric_k.

    The monomial part of the factor is the lcm of the monomial denominators; its constant
    is the customary one for the space under `standard` and the lcm of the coefficient
    denominators under `cleared` (also the fallback when no customary constant exists).
    """
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown multiplier convention {convention!r}; use one of {CONVENTIONS}")
    r = space.r
    ric = ricci_polynomials(space)
    fields = []
    for k in range(r):
        unit = [0] * r
        unit[k] = 1
        fields.append(ric[k].shift(unit) * -2)
    mono = common_denominator(fields)
    base = [f.shift(mono) for f in fields]

    const = standard_multiplier_constant(space) if convention == STANDARD else None
    if const is None:
        const = Fraction(lcm(1, *(b.coefficient_denominator_lcm() for b in base)))
    components = tuple(b * const for b in base)
    degree = sum(mono)
    for comp in components:
        if not comp.is_polynomial() or not comp.is_homogeneous():
            raise ArithmeticError(f"{space.name}: clearing denominators left a non-polynomial field")
        if not comp.is_zero and comp.degree != degree:
            raise ArithmeticError(f"{space.name}: component degree {comp.degree} != {degree}")
    logger.debug("%s: polynomial flow of degree %d, factor %s", space.name, degree, const)
    return PolynomialSystem(
        space=space,
        components=components,
        degree=degree,
        multiplier=LaurentPolynomial.monomial(r, mono, const),
        convention=convention,
    )


# -----------------------------
# Lyapunov certificate (r = 2)
# -----------------------------
def _require_r2(space: FlagSpace) -> None:
    if space.r != 2:
        raise WrongRankError(f"{space.name} has r={space.r}; this needs r=2")


def lyapunov_function_r2(x: Sequence[float]) -> float:
    """V = (x1^2 + x2^2) / 2."""
    x1, x2 = float(x[0]), float(x[1])
    return 0.5 * (x1 * x1 + x2 * x2)


def lyapunov_derivative_r2(space: FlagSpace, x: Sequence[float]) -> float:
    """dV/dt along the flow, closed form; negative on the whole positive quadrant."""
    _require_r2(space)
    x1, x2 = as_metric(space, x)
    d1, d2 = space.dims
    num = 2 * d2 * x1 ** 2 * (4 * x1 + 3 * x2) + d1 * (2 * x1 ** 3 + x2 ** 3)
    return float(-num / (2 * (d1 + 4 * d2) * x1 ** 2))


# -----------------------------
# Trajectories
# -----------------------------
@dataclass(frozen=True)
class Trajectory:
    """Samples with strictly increasing t; `backward` marks a run that ended at times[0]."""

    space: FlagSpace
    times: np.ndarray
    states: np.ndarray
    terminated_by: str
    backward: bool = False

    @classmethod
    def from_integration(cls, space: FlagSpace, result: IntegrationResult) -> "Trajectory":
        times, states = np.asarray(result.times), np.asarray(result.states)
        backward = len(times) > 1 and times[-1] < times[0]
        if backward:
            times, states = times[::-1].copy(), states[::-1].copy()
        return cls(space, times, states, result.terminated_by, backward)

    @property
    def samples(self) -> List[Tuple[float, Tuple[float, ...]]]:
        return [(float(t), tuple(float(v) for v in x)) for t, x in zip(self.times, self.states)]

    @property
    def final(self) -> Tuple[float, np.ndarray]:
        """Time and state where the integration stopped."""
        k = 0 if self.backward else -1
        return float(self.times[k]), self.states[k]

    def __len__(self) -> int:
        return len(self.times)


def integrate_flow(
    space: FlagSpace,
    x0: Sequence[float],
    t_end: float,
    opts: Optional[IntegratorOptions] = None,
    t0: float = 0.0,
) -> Trajectory:
    """Adaptive solution of the flow from x0 at t0 up to t_end (t_end < t0 runs backward)."""
    start = as_metric(space, x0)
    field_fn = compiled_ricci(space)

    def rhs(y: np.ndarray) -> np.ndarray:
        return -2.0 * y * field_fn(y)

    try:
        result: IntegrationResult = dormand_prince(rhs, start, t0, t_end, opts)
    except StepSizeError as exc:
        logger.warning("%s: integration failed: %s", space.name, exc)
        raise
    logger.info(
        "%s: %d samples, t in [%g, %g], %s",
        space.name, len(result.times), result.times.min(), result.times.max(), result.terminated_by,
    )
    return Trajectory.from_integration(space, result)


def trajectory_frame(traj: Trajectory, with_ricci: bool = False) -> pd.DataFrame:
    """Columns t, x1..xr, scal (and ric1..ricr when asked)."""
    r = traj.space.r
    df = pd.DataFrame(traj.states, columns=[f"x{i + 1}" for i in range(r)])
    df.insert(0, "t", traj.times)
    df["scal"] = [scalar_curvature(traj.space, x) for x in traj.states]
    if with_ricci:
        rics = np.asarray([ricci_components(traj.space, x).ric for x in traj.states])
        for i in range(r):
            df[f"ric{i + 1}"] = rics[:, i]
    return df


def write_trajectory_csv(
    traj: Trajectory,
    out: Union[str, Path, IO[str]],
    with_ricci: bool = False,
) -> None:
    """CSV with 12 significant digits and a trailing `# terminated_by=...` row."""
    text = trajectory_frame(traj, with_ricci).to_csv(index=False, float_format="%.12g")
    text += f"# terminated_by={traj.terminated_by}\n"
    if isinstance(out, (str, Path)):
        Path(out).write_text(text, encoding="utf-8")
    else:
        out.write(text)
