# ancient.py
"""
Straight-line ancient solutions g(t) = (1 - 2 lam t) * e through Einstein directions.

Each fixed point at infinity gives an Einstein metric e (normalized to x_1 = 1) with
constant lam > 0; the scaled family solves the flow for t in (-inf, T), T = 1 / (2 lam),
and shrinks to a point as t -> T.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from dynamics.poincare import FixedPointAtInfinity, find_fixed_points_at_infinity
from geometry.catalog import FlagSpace
from geometry.newton import SolverOptions
from geometry.ricci import as_metric, einstein_residual, scalar_curvature

logger = logging.getLogger(__name__)

EINSTEIN_TOL = 1e-10


class AncientSolutionError(ValueError):
    """Raised when the direction of an ancient solution is not an Einstein metric."""


class ExtinctionDomainError(ValueError):
    """Raised when a time at or past the extinction time is requested."""


@dataclass(frozen=True)
class AncientSolution:
    space: FlagSpace
    direction: Tuple[float, ...]
    lam: float
    extinction_time: float
    scal_at_zero: float
    exact_lambda: Optional[Fraction] = None

    @property
    def exact_extinction_time(self) -> Optional[Fraction]:
        if self.exact_lambda is None:
            return None
        return 1 / (2 * self.exact_lambda)

    def scale(self, t: float) -> float:
        """c(t) = 1 - 2 lam t."""
        if t >= self.extinction_time:
            raise ExtinctionDomainError(
                f"{self.space.name}: t={t:g} is not before the extinction time {self.extinction_time:g}"
            )
        return 1.0 - 2.0 * self.lam * t


def ancient_solution(space: FlagSpace, fp: FixedPointAtInfinity) -> AncientSolution:
    direction = as_metric(space, fp.representative)
    ric = einstein_residual(space, direction)
    residual = float(np.max(np.abs(ric)))
    if residual > EINSTEIN_TOL:
        raise AncientSolutionError(
            f"{space.name}: direction {direction.tolist()} has Einstein residual {residual:.3g}"
        )
    lam = float(fp.exact_lam) if fp.exact_lam is not None else fp.lam
    if lam <= 0:
        raise AncientSolutionError(f"{space.name}: Einstein constant {lam:g} is not positive")
    return AncientSolution(
        space=space,
        direction=tuple(float(v) for v in direction),
        lam=lam,
        extinction_time=1.0 / (2.0 * lam),
        scal_at_zero=scalar_curvature(space, direction),
        exact_lambda=fp.exact_lam,
    )


def ancient_solutions(
    space: FlagSpace,
    opts: Optional[SolverOptions] = None,
) -> List[AncientSolution]:
    """One solution per fixed point at infinity, in fixed-point order."""
    return [ancient_solution(space, fp) for fp in find_fixed_points_at_infinity(space, opts)]


# ---------- Closed forms along a solution ----------

def evaluate(sol: AncientSolution, t: float) -> np.ndarray:
    return sol.scale(t) * np.asarray(sol.direction)


def scal_along(sol: AncientSolution, t: float) -> float:
    return sol.scal_at_zero / sol.scale(t)


def scal_derivative_along(sol: AncientSolution, t: float) -> float:
    c = sol.scale(t)
    return 2.0 * sol.lam * sol.scal_at_zero / (c * c)


def ricci_along(sol: AncientSolution, t: float) -> np.ndarray:
    return np.full(sol.space.r, sol.lam / sol.scale(t))


def volume_proxy(space: FlagSpace, x: Sequence[float]) -> float:
    """prod x_i^(d_i/2), the volume factor relative to the Killing metric."""
    arr = as_metric(space, x)
    return float(np.exp(0.5 * np.dot(space.dims, np.log(arr))))


def ancient_curve(
    sol: AncientSolution,
    t0: float,
    t1: float,
    steps: int,
    scal_only: bool = False,
) -> pd.DataFrame:
    """
    Closed-form samples on linspace(t0, t1, steps), keeping only t < T.

    Columns t, x1..xr, scal, ric1..ricr, volume (or t, scal with `scal_only`).
    """
    if steps < 1:
        raise ValueError(f"steps must be positive, got {steps}")
    if min(t0, t1) >= sol.extinction_time:
        raise ExtinctionDomainError(
            f"{sol.space.name}: grid [{t0:g}, {t1:g}] lies past the extinction time {sol.extinction_time:g}"
        )
    grid = np.linspace(t0, t1, steps)
    kept = grid[grid < sol.extinction_time]
    if len(kept) < len(grid):
        logger.info("%s: dropped %d grid points at or past T=%g",
                    sol.space.name, len(grid) - len(kept), sol.extinction_time)

    c = 1.0 - 2.0 * sol.lam * kept
    df = pd.DataFrame({"t": kept})
    if not scal_only:
        for i, e in enumerate(sol.direction):
            df[f"x{i + 1}"] = c * e
    df["scal"] = sol.scal_at_zero / c
    if scal_only:
        return df
    for i in range(sol.space.r):
        df[f"ric{i + 1}"] = sol.lam / c
    vol0 = volume_proxy(sol.space, sol.direction)
    df["volume"] = vol0 * c ** (sol.space.n / 2)
    return df
