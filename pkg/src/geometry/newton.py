# newton.py
"""
Multi-start damped Newton for square polynomial systems on the positive orthant.

All starts are iterated together in log coordinates (x = exp(w)), which keeps every
iterate positive and lets one matrix product evaluate the system at every start.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from geometry.polynomials import CompiledSystem, LaurentPolynomial

logger = logging.getLogger(__name__)


class SolverError(RuntimeError):
    """Raised when multi-start Newton cannot produce the roots that were asked for."""


@dataclass(frozen=True)
class SolverOptions:
    lower: float = 0.05             # start grid, per coordinate
    upper: float = 3.5
    points_per_axis: int = 8
    max_starts: int = 20_000
    tol: float = 1e-12              # residual tolerance relative to the term magnitude
    step_tol: float = 1e-8          # largest Newton step (log coordinates) left at a root
    max_condition: float = 1e8      # of the log Jacobian at a root
    dedup_radius: float = 1e-6
    positivity_floor: float = 1e-2  # a fifth of the lowest start; roots below are discarded
    ceiling: float = 1e4
    max_iter: int = 100
    max_log_step: float = 1.0
    seed: int = 0

    def with_overrides(self, **overrides) -> "SolverOptions":
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})


EINSTEIN_OPTIONS = SolverOptions(upper=5.0)


@dataclass(frozen=True)
class RootSet:
    roots: np.ndarray       # (m, n) distinct positive roots
    residuals: np.ndarray   # sup-norm residual at each root
    starts: int
    converged: int

    def __len__(self) -> int:
        return len(self.roots)


def start_grid(
    nvars: int,
    opts: SolverOptions,
    extra_starts: Iterable[Sequence[float]] = (),
) -> np.ndarray:
    """Log-uniform grid (in log coordinates), uniformly subsampled beyond `max_starts`."""
    axis = np.linspace(np.log(opts.lower), np.log(opts.upper), opts.points_per_axis)
    mesh = np.meshgrid(*([axis] * nvars), indexing="ij")
    grid = np.stack(mesh, axis=-1).reshape(-1, nvars)
    if len(grid) > opts.max_starts:
        rng = np.random.default_rng(opts.seed)
        keep = np.sort(rng.choice(len(grid), size=opts.max_starts, replace=False))
        grid = grid[keep]
    extra = [np.log(np.asarray(p, dtype=float)) for p in extra_starts]
    if extra:
        grid = np.vstack([np.asarray(extra).reshape(-1, nvars), grid])
    return grid


def relative_residual(values: np.ndarray, scale: np.ndarray) -> np.ndarray:
    """max_k |F_k| / (sum of |terms of F_k|), the residual measured against round-off."""
    with np.errstate(all="ignore"):
        rel = np.abs(values) / np.maximum(scale, np.finfo(float).tiny)
    return np.max(rel, axis=-1)


def damped_newton(
    system: CompiledSystem,
    logs: np.ndarray,
    opts: SolverOptions,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Iterate every start with backtracking on the sup-norm residual.

    A start converges when every component vanishes relative to its own term magnitude.
    Returns final log coordinates, sup-norm residuals and a converged mask.
    """
    w = np.array(logs, dtype=float)
    with np.errstate(all="ignore"):
        F, J, scale = system.log_evaluate(w)
    res = np.max(np.abs(F), axis=1)
    rel = relative_residual(F, scale)
    active = np.isfinite(res) & (rel > opts.tol)

    for _ in range(opts.max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        with np.errstate(all="ignore"):
            step = -np.einsum("bij,bj->bi", np.linalg.pinv(J[idx]), F[idx])
        big = np.max(np.abs(step), axis=1)
        step *= np.minimum(1.0, opts.max_log_step / np.maximum(big, 1e-300))[:, None]

        alpha = np.ones(idx.size)
        pending = np.isfinite(step).all(axis=1)
        stalled = ~pending
        for _ in range(16):
            sub = np.flatnonzero(pending)
            if sub.size == 0:
                break
            trial = w[idx[sub]] + alpha[sub, None] * step[sub]
            with np.errstate(all="ignore"):
                Ft, Jt, St = system.log_evaluate(trial)
            rt = np.max(np.abs(Ft), axis=1)
            ok = np.isfinite(rt) & (rt < res[idx[sub]])
            take = idx[sub[ok]]
            w[take], F[take], J[take], scale[take], res[take] = (
                trial[ok], Ft[ok], Jt[ok], St[ok], rt[ok]
            )
            pending[sub[ok]] = False
            alpha[sub[~ok]] *= 0.5
        stalled |= pending

        rel[idx] = relative_residual(F[idx], scale[idx])
        done = rel[idx] <= opts.tol
        diverged = np.abs(w[idx]).max(axis=1) > 40.0
        active[idx[done | stalled | diverged]] = False

    converged = np.isfinite(res) & (rel <= opts.tol)
    return w, res, converged


def deduplicate(points: np.ndarray, residuals: np.ndarray, radius: float) -> np.ndarray:
    """Indices of representatives, best residual first, pairwise farther apart than `radius`."""
    order = np.argsort(residuals, kind="stable")
    remaining = order
    keep = []
    while remaining.size:
        head = remaining[0]
        keep.append(head)
        dist = np.linalg.norm(points[remaining] - points[head], axis=1)
        remaining = remaining[dist > radius]
    return np.asarray(keep, dtype=int)


def polish(
    system: CompiledSystem,
    logs: np.ndarray,
    residuals: np.ndarray,
    steps: int = 3,
) -> Tuple[np.ndarray, np.ndarray]:
    """A few undamped Newton steps in log coordinates, each kept only if the residual drops."""
    w = np.array(logs, dtype=float)
    res = residuals.copy()
    for _ in range(steps):
        with np.errstate(all="ignore"):
            F, J, _ = system.log_evaluate(w)
            trial = w - np.einsum("bij,bj->bi", np.linalg.pinv(J), F)
            Ft, _, _ = system.log_evaluate(trial)
        rt = np.max(np.abs(Ft), axis=1)
        better = np.isfinite(rt) & (rt < res)
        w[better], res[better] = trial[better], rt[better]
    return w, res


def isolated_roots(system: CompiledSystem, logs: np.ndarray, opts: SolverOptions) -> np.ndarray:
    """
    Mask of points that are simple roots: a well-conditioned log Jacobian, a relative
    residual within `tol` and a remaining Newton step below `step_tol`.
    """
    with np.errstate(all="ignore"):
        F, J, scale = system.log_evaluate(logs)
        sv = np.linalg.svd(J, compute_uv=False)
        step = np.einsum("bij,bj->bi", np.linalg.pinv(J), F)
    well_conditioned = sv[:, -1] * opts.max_condition > sv[:, 0]
    small_step = np.max(np.abs(step), axis=1) <= opts.step_tol
    return well_conditioned & small_step & (relative_residual(F, scale) <= opts.tol)


def find_positive_roots(
    system: CompiledSystem,
    opts: SolverOptions,
    extra_starts: Iterable[Sequence[float]] = (),
    label: str = "system",
) -> RootSet:
    if system.size != system.nvars:
        raise ValueError(f"{label}: {system.size} equations in {system.nvars} unknowns")
    starts = start_grid(system.nvars, opts, extra_starts)
    w, res, converged = damped_newton(system, starts, opts)
    x = np.empty((0, system.nvars))
    if converged.any():
        w, res = polish(system, w[converged], res[converged])
        x = np.exp(w)
        inside = np.all((x >= opts.positivity_floor) & (x <= opts.ceiling), axis=1)
        w, x, res = w[inside], x[inside], res[inside]
    if len(x):
        simple = isolated_roots(system, w, opts)
        x, res = x[simple], res[simple]
    if len(x) == 0:
        raise SolverError(
            f"{label}: none of {len(starts)} starts converged to a simple root in "
            f"[{opts.positivity_floor:g}, {opts.ceiling:g}]^{system.nvars}"
        )
    keep = deduplicate(x, res, opts.dedup_radius)
    logger.info(
        "%s: %d starts, %d converged, %d simple roots inside the box, %d distinct",
        label, len(starts), int(converged.sum()), len(x), len(keep),
    )
    return RootSet(roots=x[keep], residuals=res[keep], starts=len(starts), converged=int(converged.sum()))


def snap_rational(
    point: Sequence[float],
    polys: Sequence[LaurentPolynomial],
    max_denominator: int = 1000,
) -> Optional[Tuple[Fraction, ...]]:
    """A nearby small-denominator point where every polynomial vanishes exactly, if any."""
    candidate = tuple(Fraction(float(v)).limit_denominator(max_denominator) for v in point)
    for c, v in zip(candidate, point):
        if c <= 0 or abs(float(c) - v) > 1e-9 * max(1.0, abs(v)):
            return None
    if all(p.evaluate(candidate) == 0 for p in polys):
        return candidate
    return None
