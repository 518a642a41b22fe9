"""Rectangular deformable components and their topology description functions.

A component is a rounded rectangle parameterized by its center, full length,
full thickness, and the sine of its inclination angle.  Its topology
description function (TDF) is a superellipse level-set field: positive
inside the component, zero on the boundary, negative outside.  The structure
TDF is the pointwise maximum over all component TDFs, so overlapping
components union naturally and a component buried inside another stops
influencing the structure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .validation import as_point_array, check_scalar

# Largest admissible |sin(angle)|; keeps cos(angle) away from zero, which the
# angle derivative divides by.
MAX_SIN_ANGLE = 0.995

# Local coordinates are clamped to this magnitude before exponentiation so
# far-field queries cannot overflow.  Clamped points are far outside any
# smoothing band, so field values and derivatives there are inert.
_RATIO_LIMIT = 1.0e6


@dataclass(frozen=True)
class Component:
    """One rectangular building block with its five design variables."""

    center_x: float
    center_y: float
    length: float
    thickness: float
    sin_angle: float

    def __post_init__(self):
        check_scalar(self.length, "length", minimum=0.0, include_min=False)
        check_scalar(self.thickness, "thickness", minimum=0.0, include_min=False)
        check_scalar(self.sin_angle, "sin_angle",
                     minimum=-MAX_SIN_ANGLE, maximum=MAX_SIN_ANGLE)
        check_scalar(self.center_x, "center_x")
        check_scalar(self.center_y, "center_y")

    @property
    def cos_angle(self) -> float:
        """Cosine of the inclination angle, always the nonnegative root."""
        return float(np.sqrt(1.0 - self.sin_angle**2))

    def as_array(self) -> NDArray[np.float64]:
        """The (center_x, center_y, length, thickness, sin_angle) tuple."""
        return np.array([self.center_x, self.center_y, self.length,
                         self.thickness, self.sin_angle])


@dataclass(frozen=True)
class Regularization:
    """Smoothing parameters for the Heaviside/Dirac regularization.

    exponent: even superellipse exponent (larger = sharper corners).
    bandwidth: half-width of the smoothing band in TDF units.
    density_floor: value the smoothed Heaviside takes deep in the void; keeps
        the ersatz stiffness matrix nonsingular.
    """

    exponent: int = 6
    bandwidth: float = 0.04
    density_floor: float = 1.0e-3

    def __post_init__(self):
        if self.exponent < 2 or self.exponent % 2 != 0:
            raise ValueError(f"exponent must be an even integer >= 2, "
                             f"got {self.exponent}")
        check_scalar(self.bandwidth, "bandwidth", minimum=0.0, include_min=False)
        check_scalar(self.density_floor, "density_floor",
                     minimum=0.0, maximum=0.01, include_min=False)


@dataclass(frozen=True)
class FieldSample:
    """Structure TDF evaluated at query points.

    phi_per_component has shape (n_components,) for a single point or
    (n_components, n_points) for an array of points; phi_structure and
    argmax_component drop the leading axis accordingly.
    """

    phi_per_component: NDArray[np.float64]
    phi_structure: NDArray[np.float64] | float
    argmax_component: NDArray[np.intp] | int


def _local_coords(comp: Component, pts: NDArray[np.float64]):
    """Rotate points into the component frame, scaled by the half-axes."""
    q = comp.cos_angle
    p = comp.sin_angle
    dx = pts[:, 0] - comp.center_x
    dy = pts[:, 1] - comp.center_y
    u = (q * dx + p * dy) / (0.5 * comp.length)
    v = (-p * dx + q * dy) / (0.5 * comp.thickness)
    return dx, dy, u, v


def component_tdf(comp: Component, points: ArrayLike,
                  exponent: int = 6) -> float | NDArray[np.float64]:
    """Evaluate a component's TDF at one point or an (n, 2) array of points.

    Positive strictly inside the component, zero on its boundary, negative
    outside.
    """
    pts, single = as_point_array(points)
    phi = _tdf_values(comp, pts, exponent)
    return float(phi[0]) if single else phi


def structure_tdf(comps: list[Component], points: ArrayLike,
                  exponent: int = 6) -> FieldSample:
    """Pointwise maximum of the component TDFs, with per-component values.

    Ties go to the lowest component index.  Raises on an empty component
    list, which is not a valid design.
    """
    if not comps:
        raise ValueError("structure TDF needs at least one component")
    pts, single = as_point_array(points)
    per = np.empty((len(comps), pts.shape[0]))
    for i, comp in enumerate(comps):
        per[i] = _tdf_values(comp, pts, exponent)
    argmax = np.argmax(per, axis=0)
    phi_s = per[argmax, np.arange(pts.shape[0])]
    if single:
        return FieldSample(per[:, 0], float(phi_s[0]), int(argmax[0]))
    return FieldSample(per, phi_s, argmax)


def _tdf_values(comp: Component, pts: NDArray[np.float64],
                exponent: int) -> NDArray[np.float64]:
    _, _, u, v = _local_coords(comp, pts)
    u = np.clip(u, -_RATIO_LIMIT, _RATIO_LIMIT)
    v = np.clip(v, -_RATIO_LIMIT, _RATIO_LIMIT)
    return 1.0 - u**exponent - v**exponent


def smoothed_heaviside(phi: ArrayLike, reg: Regularization):
    """Regularized unit step of the TDF.

    Piecewise cubic: equals 1 above the band, the density floor below it, and
    a monotone C¹ cubic inside |phi| < bandwidth.
    """
    phi = np.asarray(phi, dtype=float)
    eps = reg.bandwidth
    alpha = reg.density_floor
    x = np.clip(phi / eps, -1.0, 1.0)
    mid = 0.75 * (1.0 - alpha) * (x - x**3 / 3.0) + 0.5 * (1.0 + alpha)
    out = np.where(phi >= eps, 1.0, np.where(phi <= -eps, alpha, mid))
    return float(out) if out.ndim == 0 else out


def smoothed_delta(phi: ArrayLike, reg: Regularization):
    """Exact derivative of :func:`smoothed_heaviside` with respect to phi.

    Supported on |phi| < bandwidth, even, peaked at phi = 0.
    """
    phi = np.asarray(phi, dtype=float)
    eps = reg.bandwidth
    alpha = reg.density_floor
    x = phi / eps
    mid = 0.75 * (1.0 - alpha) / eps * (1.0 - x**2)
    out = np.where(np.abs(phi) >= eps, 0.0, mid)
    return float(out) if out.ndim == 0 else out


def component_tdf_gradient(comp: Component, points: ArrayLike,
                           exponent: int = 6):
    """Analytic TDF derivatives with respect to the five design variables.

    Returns the gradient (d phi / d center_x, d center_y, d length,
    d thickness, d sin_angle) as a (5,) vector for a single point or an
    (n, 5) array.  Where the far-field clamp is active the corresponding
    contribution is zero, matching the derivative of the clamped field.
    """
    if abs(comp.sin_angle) > MAX_SIN_ANGLE:
        raise ValueError("sin_angle too close to +-1; angle derivative "
                         "is singular there")
    pts, single = as_point_array(points)
    q = comp.cos_angle
    p = comp.sin_angle
    a = 0.5 * comp.length
    b = 0.5 * comp.thickness
    n = exponent

    dx, dy, u, v = _local_coords(comp, pts)

    # Power terms vanish wherever the clamp bites; those points sit far
    # outside the smoothing band.
    cu = np.abs(u) < _RATIO_LIMIT
    cv = np.abs(v) < _RATIO_LIMIT
    fu = np.where(cu, n * np.clip(u, -_RATIO_LIMIT, _RATIO_LIMIT)**(n - 1), 0.0)
    fv = np.where(cv, n * np.clip(v, -_RATIO_LIMIT, _RATIO_LIMIT)**(n - 1), 0.0)

    # phi = 1 - u^n - v^n, so d phi = -fu * du - fv * dv for each variable.
    grad = np.empty((pts.shape[0], 5))
    grad[:, 0] = fu * (q / a) - fv * (p / b)
    grad[:, 1] = fu * (p / a) + fv * (q / b)
    grad[:, 2] = fu * u / (2.0 * a)
    grad[:, 3] = fv * v / (2.0 * b)
    du_dp = (-(p / q) * dx + dy) / a
    dv_dp = (-dx - (p / q) * dy) / b
    grad[:, 4] = -fu * du_dp - fv * dv_dp
    return grad[0] if single else grad


def pack_design(comps: list[Component]) -> NDArray[np.float64]:
    """Flatten components into the (5 * n_components,) design vector."""
    if not comps:
        raise ValueError("cannot pack an empty component list")
    return np.concatenate([c.as_array() for c in comps])


def unpack_design(design: ArrayLike) -> list[Component]:
    """Rebuild the component list from a flat design vector."""
    design = np.asarray(design, dtype=float)
    if design.ndim != 1 or design.size == 0 or design.size % 5 != 0:
        raise ValueError(f"design vector length must be a positive multiple "
                         f"of 5, got {design.size}")
    return [Component(*design[5 * i:5 * i + 5]) for i in range(design.size // 5)]
