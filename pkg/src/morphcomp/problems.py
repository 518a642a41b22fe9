"""Benchmark problem definitions and parametric initial component layouts."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fem import BoundaryConditions, Mesh, build_mesh, element_densities, volume
from .geometry import MAX_SIN_ANGLE, Component, Regularization
from .validation import check_int, check_scalar

_EDGES = ("left", "right", "bottom", "top")
_DIRECTIONS = ("x", "y", "both")

# initial crossed-pair inclination: sin(45 degrees)
DEFAULT_ANGLE_P = float(np.sin(np.pi / 4.0))


@dataclass(frozen=True)
class ProblemSpec:
    """Domain, discretization, supports, loads and the volume budget.

    supports is a tuple of directives, each either
    ("edge", name, direction) with name in left/right/bottom/top, or
    ("point", (x, y), direction), direction in "x"/"y"/"both".
    loads is a tuple of ((x, y), (fx, fy)) applied at the nearest node.
    symmetry optionally names a mirror axis (e.g. "y=0.5") for reporting.
    """

    name: str
    width: float
    height: float
    nx: int
    ny: int
    supports: tuple
    loads: tuple
    volume_fraction_max: float
    symmetry: str | None = None

    def __post_init__(self):
        check_scalar(self.width, "width", minimum=0.0, include_min=False)
        check_scalar(self.height, "height", minimum=0.0, include_min=False)
        check_int(self.nx, "nx", minimum=1)
        check_int(self.ny, "ny", minimum=1)
        check_scalar(self.volume_fraction_max, "volume_fraction_max",
                     minimum=0.0, maximum=1.0,
                     include_min=False, include_max=False)
        if not self.supports:
            raise ValueError("supports must be nonempty")
        for sup in self.supports:
            kind = sup[0]
            if kind == "edge":
                _, edge, direction = sup
                if edge not in _EDGES:
                    raise ValueError(f"unknown edge {edge!r}")
            elif kind == "point":
                _, (px, py), direction = sup
                self._check_inside(px, py, "support")
            else:
                raise ValueError(f"unknown support kind {sup[0]!r}")
            if direction not in _DIRECTIONS:
                raise ValueError(f"unknown support direction {direction!r}")
        if not self.loads:
            raise ValueError("loads must be nonempty")
        for (px, py), (fx, fy) in self.loads:
            self._check_inside(px, py, "load")
            check_scalar(fx, "fx")
            check_scalar(fy, "fy")

    def _check_inside(self, px, py, what):
        if not (0.0 <= px <= self.width and 0.0 <= py <= self.height):
            raise ValueError(f"{what} point ({px}, {py}) outside the closed "
                             f"domain [0,{self.width}] x [0,{self.height}]")

    @property
    def domain_area(self) -> float:
        return self.width * self.height

    @property
    def volume_budget(self) -> float:
        """Admissible material volume (fraction of the domain area)."""
        return self.volume_fraction_max * self.domain_area

    def build_mesh(self) -> Mesh:
        return build_mesh(self.width, self.height, self.nx, self.ny)


def short_beam_problem(load_point: str = "A") -> ProblemSpec:
    """Cantilevered 2 x 1 short beam, left edge clamped, unit downward load.

    Variant A loads the middle of the free right edge, variant B its bottom
    corner.
    """
    if load_point not in ("A", "B"):
        raise ValueError(f"load_point must be 'A' or 'B', got {load_point!r}")
    load_y = 0.5 if load_point == "A" else 0.0
    return ProblemSpec(
        name=f"short_beam_{load_point.lower()}",
        width=2.0, height=1.0, nx=100, ny=50,
        supports=(("edge", "left", "both"),),
        loads=(((2.0, load_y), (0.0, -1.0)),),
        volume_fraction_max=0.5,
        symmetry="y=0.5" if load_point == "A" else None,
    )


def mbb_problem() -> ProblemSpec:
    """Half MBB beam: symmetry rollers on the left edge, support bottom-right.

    The unit load pushes down on the top-left corner of the half model.
    """
    return ProblemSpec(
        name="mbb_half",
        width=3.0, height=1.0, nx=120, ny=40,
        supports=(("edge", "left", "x"), ("point", (3.0, 0.0), "y")),
        loads=(((0.0, 1.0), (0.0, -1.0)),),
        volume_fraction_max=0.4,
        symmetry="x=0",
    )


def resolve_boundary_conditions(spec: ProblemSpec,
                                mesh: Mesh) -> BoundaryConditions:
    """Turn edge/point support directives and loads into mesh DOFs/nodes."""
    tol = 1e-9 * max(spec.width, spec.height)
    coords = mesh.node_coords
    fixed: list[int] = []
    for sup in spec.supports:
        if sup[0] == "edge":
            _, edge, direction = sup
            axis, value = {"left": (0, 0.0), "right": (0, spec.width),
                           "bottom": (1, 0.0), "top": (1, spec.height)}[edge]
            nodes = np.nonzero(np.abs(coords[:, axis] - value) <= tol)[0]
        else:
            _, (px, py), direction = sup
            nodes = np.array([mesh.nearest_node(px, py)])
        for n in nodes:
            if direction in ("x", "both"):
                fixed.append(2 * int(n))
            if direction in ("y", "both"):
                fixed.append(2 * int(n) + 1)
    loads = tuple((mesh.nearest_node(px, py), (fx, fy))
                  for (px, py), (fx, fy) in spec.loads)
    return BoundaryConditions(np.array(sorted(set(fixed)), dtype=np.intp),
                              loads)


def design_bounds(spec: ProblemSpec) -> tuple[np.ndarray, np.ndarray]:
    """Per-variable box for one component: center, size and angle limits."""
    diag = float(np.hypot(spec.width, spec.height))
    lower = np.array([0.0, 0.0, 0.02 * max(spec.width, spec.height),
                      0.01, -MAX_SIN_ANGLE])
    upper = np.array([spec.width, spec.height, diag,
                      0.5 * spec.height, MAX_SIN_ANGLE])
    return lower, upper


def grid_initial_design(cells_x: int, cells_y: int, spec: ProblemSpec,
                        angle_p: float = DEFAULT_ANGLE_P,
                        reg: Regularization | None = None,
                        expected_count: int | None = None) -> list[Component]:
    """Crossed component pairs on a regular cell grid.

    Each cell holds two components through its center at inclinations
    +-angle_p; the shared thickness is bisected so the realized material
    volume starts at the volume budget.
    """
    cells_x = check_int(cells_x, "cells_x", minimum=1)
    cells_y = check_int(cells_y, "cells_y", minimum=1)
    check_scalar(angle_p, "angle_p", minimum=-MAX_SIN_ANGLE,
                 maximum=MAX_SIN_ANGLE)
    count = 2 * cells_x * cells_y
    if expected_count is not None and count != expected_count:
        raise ValueError(f"grid {cells_x} x {cells_y} yields {count} "
                         f"components, expected {expected_count}")

    mesh = spec.build_mesh()
    if reg is None:
        reg = Regularization(exponent=6, bandwidth=2.0 * mesh.h,
                             density_floor=1e-3)
    cell_w = spec.width / cells_x
    cell_h = spec.height / cells_y
    length = 0.9 * float(np.hypot(cell_w, cell_h))
    centers = [((i + 0.5) * cell_w, (j + 0.5) * cell_h)
               for j in range(cells_y) for i in range(cells_x)]

    def layout(thickness):
        return [Component(cx, cy, length, thickness, sign * angle_p)
                for cx, cy in centers for sign in (+1.0, -1.0)]

    def realized_volume(thickness):
        rho = element_densities(layout(thickness), mesh, reg)
        return volume(rho, mesh)

    # material volume grows monotonically with the shared thickness
    t_lo, t_hi = 0.01, 0.5 * spec.height
    target = spec.volume_budget
    if realized_volume(t_hi) < target:
        t = t_hi
    elif realized_volume(t_lo) > target:
        t = t_lo
    else:
        for _ in range(40):
            t_mid = 0.5 * (t_lo + t_hi)
            if realized_volume(t_mid) < target:
                t_lo = t_mid
            else:
                t_hi = t_mid
        t = 0.5 * (t_lo + t_hi)

    design = layout(t)
    got = realized_volume(t)
    if not 0.8 * target <= got <= 1.2 * target:
        raise ValueError(
            f"initial layout volume {got:.4f} cannot reach the window "
            f"[0.8, 1.2] x budget {target:.4f} within thickness bounds")
    return design
