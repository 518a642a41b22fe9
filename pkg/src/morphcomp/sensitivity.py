"""Analytic design gradients of compliance and volume.

Both objective and constraint are chain-ruled through the same Gauss-point
Heaviside discretization used in assembly, which makes the analytic gradient
the exact derivative of the discrete objective wherever a single component
owns the boundary band.  Where boundary bands of two components overlap the
smoothed delta of a component is capped by the delta of the structure field,
so buried boundaries stop contributing (the hiding mechanism).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .fem import FemSolution, Mesh, gauss_point_coords
from .geometry import (
    Component,
    Regularization,
    component_tdf_gradient,
    smoothed_delta,
    structure_tdf,
)


@dataclass(frozen=True)
class GradientVector:
    """Compliance and volume gradients, 5 entries per component."""

    d_compliance: NDArray[np.float64]
    d_volume: NDArray[np.float64]

    def __post_init__(self):
        if (self.d_compliance.shape != self.d_volume.shape
                or self.d_compliance.ndim != 1
                or self.d_compliance.size % 5 != 0):
            raise ValueError("gradient vectors must be flat, equal-length "
                             "and a multiple of 5 long")
        if not (np.isfinite(self.d_compliance).all()
                and np.isfinite(self.d_volume).all()):
            raise ValueError("gradient vectors must be finite")


def _delta_weights(comps: list[Component], mesh: Mesh, reg: Regularization):
    """Per-component capped delta at every Gauss point, plus the points.

    Returns (gauss points flat (n_el*4, 2), list of per-component delta
    arrays).  The cap min(delta(phi_i), delta(phi_structure)) zeroes the
    weight wherever a component's boundary is buried inside the structure.
    """
    gauss = gauss_point_coords(mesh).reshape(-1, 2)
    sample = structure_tdf(comps, gauss, exponent=reg.exponent)
    delta_s = smoothed_delta(sample.phi_structure, reg)
    per_comp = [np.minimum(smoothed_delta(sample.phi_per_component[i], reg),
                           delta_s)
                for i in range(len(comps))]
    return gauss, per_comp


def compliance_gradient(comps: list[Component], mesh: Mesh,
                        reg: Regularization,
                        solution: FemSolution) -> NDArray[np.float64]:
    """d(compliance)/d(design), flat vector of 5 entries per component.

    Uses the self-adjoint identity for compliance: the derivative with
    respect to one element's ersatz density is minus that element's
    unit-density strain energy, and the density derivative is the mean of
    the capped delta times the TDF design gradient over the element's Gauss
    points.
    """
    if solution.element_energy_density.shape != (mesh.n_elements, 4):
        raise ValueError("solution does not match the mesh "
                         f"({solution.element_energy_density.shape} vs "
                         f"{(mesh.n_elements, 4)} Gauss energies)")
    det_j = (mesh.h / 2.0)**2
    elem_energy = solution.element_energy_density.sum(axis=1) * det_j
    # each Gauss point carries a quarter of its element's density derivative
    point_weight = -0.25 * np.repeat(elem_energy, 4)

    gauss, deltas = _delta_weights(comps, mesh, reg)
    grad = np.empty(5 * len(comps))
    for i, comp in enumerate(comps):
        active = np.nonzero(deltas[i])[0]
        if active.size == 0:
            grad[5 * i:5 * i + 5] = 0.0
            continue
        dphi = component_tdf_gradient(comp, gauss[active],
                                      exponent=reg.exponent)
        grad[5 * i:5 * i + 5] = (point_weight[active]
                                 * deltas[i][active]) @ dphi
    return grad


def volume_gradient(comps: list[Component], mesh: Mesh,
                    reg: Regularization) -> NDArray[np.float64]:
    """d(volume)/d(design): the same chain rule with a unit field weight."""
    det_j = (mesh.h / 2.0)**2
    gauss, deltas = _delta_weights(comps, mesh, reg)
    grad = np.empty(5 * len(comps))
    for i, comp in enumerate(comps):
        active = np.nonzero(deltas[i])[0]
        if active.size == 0:
            grad[5 * i:5 * i + 5] = 0.0
            continue
        dphi = component_tdf_gradient(comp, gauss[active],
                                      exponent=reg.exponent)
        grad[5 * i:5 * i + 5] = (det_j * deltas[i][active]) @ dphi
    return grad


def finite_difference_oracle(objective: Callable[[NDArray[np.float64]], float],
                             design: ArrayLike, step: ArrayLike,
                             lower: ArrayLike | None = None,
                             upper: ArrayLike | None = None,
                             ) -> NDArray[np.float64]:
    """Central-difference gradient of a scalar map over the design vector.

    step may be a scalar or one value per coordinate.  Falls back to a
    one-sided difference for coordinates where the central stencil would
    leave the [lower, upper] box.  Test scaffolding, not used by the
    optimizer.
    """
    d = np.asarray(design, dtype=float).copy()
    steps = np.broadcast_to(np.asarray(step, dtype=float), d.shape)
    if np.any(steps <= 0):
        raise ValueError("step must be positive")
    lo = np.full(d.size, -np.inf) if lower is None else np.asarray(lower, float)
    hi = np.full(d.size, np.inf) if upper is None else np.asarray(upper, float)

    def evaluate(vec):
        val = float(objective(vec))
        if not np.isfinite(val):
            raise ValueError("objective returned a non-finite value during "
                             "finite differencing")
        return val

    grad = np.empty(d.size)
    f_center = None
    for k in range(d.size):
        s = steps[k]
        can_up = d[k] + s <= hi[k]
        can_down = d[k] - s >= lo[k]
        if can_up and can_down:
            d[k] += s
            f_hi = evaluate(d)
            d[k] -= 2 * s
            f_lo = evaluate(d)
            d[k] += s
            grad[k] = (f_hi - f_lo) / (2 * s)
        elif can_up or can_down:
            if f_center is None:
                f_center = evaluate(d)
            sign = 1.0 if can_up else -1.0
            d[k] += sign * s
            f_side = evaluate(d)
            d[k] -= sign * s
            grad[k] = sign * (f_side - f_center) / s
        else:
            raise ValueError(f"bounds tighter than the step at coordinate {k}")
    return grad
