"""Method of moving asymptotes for bound-constrained inequality problems.

One `mma_update` call builds the rational separable approximation of the
objective and constraints around the current iterate, solves its dual with
a safeguarded bisection on the multipliers, and adapts the asymptotes from
the sign pattern of the last two steps.  Variables are normalized to [0, 1]
internally so lengths, coordinates and the dimensionless angle variable can
share one subproblem.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .validation import check_finite_array

# Asymptote adaptation constants: expansion/shrink factors on oscillation,
# initial half-span, the interior margin keeping iterates off the
# asymptotes, and normalized asymptote-distance safeguards.
ASYMPTOTE_EXPAND = 1.2
ASYMPTOTE_SHRINK = 0.7
INITIAL_SPAN = 0.5
INTERIOR_MARGIN = 0.1
# distance floor small enough that oscillation damping can keep shrinking
# steps to convergence instead of locking into a limit cycle
_MIN_ASYMPTOTE_DIST = 1e-6
_MAX_ASYMPTOTE_DIST = 10.0
_OBJECTIVE_RAA = 1e-5
_DUAL_TOL = 1e-10


@dataclass(frozen=True)
class Bounds:
    """Variable box and per-iteration move limit, all per variable."""

    lower: NDArray[np.float64]
    upper: NDArray[np.float64]
    move_limit: NDArray[np.float64]

    def __post_init__(self):
        lower = check_finite_array(self.lower, "lower")
        upper = check_finite_array(self.upper, "upper", shape=lower.shape)
        move = check_finite_array(self.move_limit, "move_limit",
                                  shape=lower.shape)
        if not np.all(lower < upper):
            raise ValueError("lower must be strictly below upper everywhere")
        if not np.all(move > 0):
            raise ValueError("move_limit must be positive everywhere")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "move_limit", move)

    @property
    def size(self) -> int:
        return self.lower.size


@dataclass(frozen=True)
class MmaState:
    """Optimizer memory carried between updates (original variable units)."""

    lower_asymptotes: NDArray[np.float64]
    upper_asymptotes: NDArray[np.float64]
    x_prev: NDArray[np.float64]
    x_prev2: NDArray[np.float64]
    iteration: int

    @classmethod
    def fresh(cls, n: int) -> "MmaState":
        z = np.zeros(n)
        return cls(z.copy(), z.copy(), z.copy(), z.copy(), 0)


def _solve_primal(lam, p0, q0, p, q, low, upp, alpha, beta, y):
    """Minimizer of the separable Lagrangian for fixed multipliers."""
    pj = p0 + lam @ p
    qj = q0 + lam @ q
    sp, sq = np.sqrt(pj), np.sqrt(qj)
    denom = sp + sq
    x = np.where(denom > 0.0, (low * sp + upp * sq) / np.where(denom > 0.0,
                                                               denom, 1.0), y)
    return np.clip(x, alpha, beta)


def _constraint_values(x, p, q, low, upp, b):
    return (p / (upp - x) + q / (x - low)).sum(axis=1) - b


def _bisect_multiplier(i, lam, p0, q0, p, q, low, upp, alpha, beta, y, b):
    """Largest-feasible bisection for one multiplier, others held fixed."""

    def h_of(v):
        lam[i] = v
        x = _solve_primal(lam, p0, q0, p, q, low, upp, alpha, beta, y)
        return _constraint_values(x, p, q, low, upp, b)[i]

    if h_of(0.0) <= 0.0:
        lam[i] = 0.0
        return
    hi = 1.0
    while h_of(hi) > 0.0:
        hi *= 10.0
        if hi > 1e14:
            violation = h_of(hi)
            if violation > 1e-8:
                raise RuntimeError(
                    f"MMA subproblem infeasible: constraint {i} cannot be "
                    f"met within the move limits (residual {violation:.3e})")
            break
    lo = 0.0
    while hi - lo > _DUAL_TOL * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if h_of(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    # land on the feasible side of the bracket
    lam[i] = hi


def mma_update(x: ArrayLike, f: float, df: ArrayLike, g: ArrayLike,
               dg: ArrayLike, bounds: Bounds,
               state: MmaState) -> tuple[NDArray[np.float64], MmaState]:
    """One MMA step.  Constraints are feasible when g <= 0.

    Returns the new iterate (clamped to bounds, move limits and the interior
    margin of the asymptotes) together with the advanced state.
    """
    x = check_finite_array(x, "x", shape=(bounds.size,))
    df = check_finite_array(df, "df", shape=x.shape)
    g = np.atleast_1d(np.asarray(g, dtype=float))
    dg = np.asarray(dg, dtype=float).reshape(g.size, x.size)
    check_finite_array(g, "g")
    check_finite_array(dg, "dg")
    if not np.isfinite(f):
        raise ValueError(f"objective value must be finite, got {f}")
    if np.any(x < bounds.lower - 1e-12) or np.any(x > bounds.upper + 1e-12):
        raise ValueError("x violates its bounds")

    rng = bounds.upper - bounds.lower
    y = (x - bounds.lower) / rng
    df_n = df * rng
    dg_n = dg * rng[None, :]
    ml = bounds.move_limit / rng

    if state.iteration < 2:
        low = y - INITIAL_SPAN
        upp = y + INITIAL_SPAN
    else:
        y1 = (state.x_prev - bounds.lower) / rng
        y2 = (state.x_prev2 - bounds.lower) / rng
        osc = (y - y1) * (y1 - y2)
        factor = np.where(osc > 0, ASYMPTOTE_EXPAND,
                          np.where(osc < 0, ASYMPTOTE_SHRINK, 1.0))
        low_prev = (state.lower_asymptotes - bounds.lower) / rng
        upp_prev = (state.upper_asymptotes - bounds.lower) / rng
        low = y - factor * (y1 - low_prev)
        upp = y + factor * (upp_prev - y1)
        low = np.clip(low, y - _MAX_ASYMPTOTE_DIST, y - _MIN_ASYMPTOTE_DIST)
        upp = np.clip(upp, y + _MIN_ASYMPTOTE_DIST, y + _MAX_ASYMPTOTE_DIST)

    alpha = np.maximum.reduce([np.zeros_like(y),
                               low + INTERIOR_MARGIN * (y - low),
                               y - ml])
    beta = np.minimum.reduce([np.ones_like(y),
                              upp - INTERIOR_MARGIN * (upp - y),
                              y + ml])

    # small symmetric term so the objective approximation has an interior
    # minimizer instead of parking every variable on a clipped asymptote
    sym = 0.001 * np.abs(df_n) + _OBJECTIVE_RAA / (upp - low)
    p0 = (upp - y)**2 * (np.maximum(df_n, 0.0) + sym)
    q0 = (y - low)**2 * (np.maximum(-df_n, 0.0) + sym)
    p = (upp - y)[None, :]**2 * np.maximum(dg_n, 0.0)
    q = (y - low)[None, :]**2 * np.maximum(-dg_n, 0.0)
    b = -g + (p / (upp - y)[None, :] + q / (y - low)[None, :]).sum(axis=1)

    m = g.size
    lam = np.zeros(m)
    if m == 1:
        _bisect_multiplier(0, lam, p0, q0, p, q, low, upp, alpha, beta, y, b)
    elif m > 1:
        # cyclic coordinate ascent on the dual; each pass reuses the
        # single-multiplier bisection
        for _ in range(80):
            lam_old = lam.copy()
            for i in range(m):
                _bisect_multiplier(i, lam, p0, q0, p, q, low, upp, alpha,
                                   beta, y, b)
            if np.max(np.abs(lam - lam_old)) <= _DUAL_TOL * (1 + lam.max()):
                break
    y_new = _solve_primal(lam, p0, q0, p, q, low, upp, alpha, beta, y)

    x_new = bounds.lower + y_new * rng
    new_state = MmaState(
        lower_asymptotes=bounds.lower + low * rng,
        upper_asymptotes=bounds.lower + upp * rng,
        x_prev=x.copy(),
        x_prev2=state.x_prev.copy(),
        iteration=state.iteration + 1,
    )
    return x_new, new_state
