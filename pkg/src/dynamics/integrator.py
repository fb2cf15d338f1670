# integrator.py
"""
Dormand-Prince 5(4) embedded Runge-Kutta pair with adaptive steps.

The 5th order solution is propagated (local extrapolation) and the difference to the 4th
order solution drives the step size. Steps that leave the positive orthant are rejected
and retried with half the step; integration stops early once a coordinate drops below
the extinction floor.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np

logger = logging.getLogger(__name__)

T_END_REACHED = "t_end_reached"
EXTINCTION = "extinction"
STEP_FAILURE = "step_failure"


# butcher table
A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
E = B5 - B4


class StepSizeError(RuntimeError):
    """Raised when the step size underflows or the step budget runs out before t_end."""

    def __init__(self, message: str, partial: Optional["IntegrationResult"] = None):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class IntegratorOptions:
    tol: float = 1e-10              # relative local error per step
    floor: float = 1e-8             # extinction threshold on min(x_i)
    max_steps: int = 100_000
    initial_step: Optional[float] = None
    min_step: float = 1e-14
    safety: float = 0.9


@dataclass(frozen=True)
class IntegrationResult:
    times: np.ndarray      # (m,), monotone in the direction of integration
    states: np.ndarray     # (m, r)
    terminated_by: str


def _initial_step(y: np.ndarray, dy: np.ndarray, span: float) -> float:
    rate = np.max(np.abs(dy) / np.abs(y))
    if rate == 0 or not np.isfinite(rate):
        return abs(span)
    return min(abs(span), 1e-2 / rate)


def dormand_prince(
    f: Callable[[np.ndarray], np.ndarray],
    y0: np.ndarray,
    t0: float,
    t1: float,
    opts: Optional[IntegratorOptions] = None,
) -> IntegrationResult:
    """Integrate the autonomous system y' = f(y) from t0 to t1 (either direction)."""
    opts = opts or IntegratorOptions()
    direction = 1.0 if t1 >= t0 else -1.0
    t = float(t0)
    y = np.asarray(y0, dtype=float).copy()
    times: List[float] = [t]
    states: List[np.ndarray] = [y.copy()]
    if t1 == t0:
        return IntegrationResult(np.asarray(times), np.asarray(states), T_END_REACHED)

    k1 = f(y)
    h = opts.initial_step or _initial_step(y, k1, t1 - t0)

    def partial(reason: str) -> IntegrationResult:
        return IntegrationResult(np.asarray(times), np.vstack(states), reason)

    for _ in range(opts.max_steps):
        remaining = abs(t1 - t)
        if remaining <= 1e-15 * max(1.0, abs(t1)):
            return partial(T_END_REACHED)
        last = h >= remaining
        h = min(h, remaining)
        if h < opts.min_step:
            raise StepSizeError(f"step size underflow ({h:g}) at t={t:g}", partial(STEP_FAILURE))

        hs = direction * h
        ks = [k1]
        ok = True
        for stage in range(1, 7):
            yi = y + hs * (A[stage] @ np.asarray(ks))
            if np.any(yi <= 0) or not np.all(np.isfinite(yi)):
                ok = False
                break
            ks.append(f(yi))
        if not ok:
            h *= 0.5
            continue

        K = np.asarray(ks)
        y_new = y + hs * (B5 @ K)
        err_vec = hs * (E @ K)
        scale = opts.tol * np.maximum(np.maximum(np.abs(y), np.abs(y_new)), opts.floor)
        err = float(np.max(np.abs(err_vec) / scale))

        if err <= 1.0:
            if np.min(y_new) < opts.floor:
                logger.info("Extinction at t=%.6g (min x below %g)", t + hs, opts.floor)
                return partial(EXTINCTION)
            t = t1 if last else t + hs
            y = y_new
            times.append(t)
            states.append(y.copy())
            k1 = ks[-1]  # first-same-as-last
        factor = 4.0 if err == 0 else opts.safety * err ** (-1.0 / 5.0)
        h *= min(4.0, max(0.1, factor))

    raise StepSizeError(f"step budget of {opts.max_steps} exhausted at t={t:g}", partial(STEP_FAILURE))
