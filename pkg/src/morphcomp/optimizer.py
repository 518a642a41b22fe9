"""Compliance minimization over component layouts, as an estimator."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .fem import (Material, assemble_and_solve, element_densities, volume)
from .geometry import (MAX_SIN_ANGLE, Component, Regularization, pack_design,
                       unpack_design)
from .mma import Bounds, MmaState, mma_update
from .problems import (DEFAULT_ANGLE_P, ProblemSpec, design_bounds,
                       grid_initial_design, resolve_boundary_conditions)
from .sensitivity import compliance_gradient, volume_gradient
from .validation import check_int, check_scalar

CONVERGENCE_STREAK = 3


@dataclass(frozen=True)
class IterationRecord:
    """Snapshot of one optimizer iteration (iteration 0 is the start)."""

    iteration: int
    compliance: float
    volume: float
    volume_fraction: float
    constraint_value: float
    max_design_change: float


class MovingComponentOptimizer(BaseEstimator):
    """Minimum-compliance layout of movable rectangular components.

    fit() runs fixed-grid finite element analyses of the smoothed component
    layout, differentiates compliance and volume with respect to every
    component's position, size and inclination, and advances the layout
    with MMA updates under a volume budget.

    Parameters
    ----------
    n_exponent : even int, superellipse exponent of each component.
    epsilon_factor : float, Heaviside bandwidth in units of the mesh size.
    density_floor : float, ersatz stiffness assigned to void material.
    youngs_modulus, poisson_ratio : isotropic plane-stress material.
    void_scale : float, optional floor remap; 0 leaves densities as they
        are, a positive value rescales stiffness densities linearly from
        [density_floor, 1] onto [void_scale, 1].
    max_iterations : int, update budget (0 analyses the start layout only).
    move_limit_fraction : float, per-iteration cap on each variable's step
        as a fraction of its bound range.
    convergence_tol : float, stop after CONVERGENCE_STREAK consecutive
        iterations whose largest normalized step is below this.
    cells_x, cells_y : int or None, start-layout grid; defaults give two
        rows with roughly square cells.
    angle_p : float, inclination sine of the crossed start components.
    iteration_callback : callable or None, called as
        callback(iteration, components, record) after every recorded
        iteration.

    Attributes (after fit)
    ----------------------
    components_ : final layout as a list of components.
    design_ : the same layout as a flat design vector.
    history_ : list of IterationRecord, entry 0 is the start layout.
    compliance_, volume_fraction_ : final scalar metrics.
    n_iterations_ : number of updates actually performed.
    n_design_variables_ : length of the design vector.
    mesh_, regularization_, material_ : analysis setup used.
    converged_ : True when the step-size criterion triggered the stop.
    """

    def __init__(self, n_exponent=6, epsilon_factor=6.0, density_floor=1e-3,
                 youngs_modulus=1.0, poisson_ratio=0.3, void_scale=0.0,
                 max_iterations=150, move_limit_fraction=0.02,
                 convergence_tol=1e-3, cells_x=None, cells_y=None,
                 angle_p=DEFAULT_ANGLE_P, iteration_callback=None):
        self.n_exponent = n_exponent
        self.epsilon_factor = epsilon_factor
        self.density_floor = density_floor
        self.youngs_modulus = youngs_modulus
        self.poisson_ratio = poisson_ratio
        self.void_scale = void_scale
        self.max_iterations = max_iterations
        self.move_limit_fraction = move_limit_fraction
        self.convergence_tol = convergence_tol
        self.cells_x = cells_x
        self.cells_y = cells_y
        self.angle_p = angle_p
        self.iteration_callback = iteration_callback

    def _validate_params(self):
        n = check_int(self.n_exponent, "n_exponent", minimum=2)
        if n % 2:
            raise ValueError(f"n_exponent must be even, got {n}")
        check_scalar(self.epsilon_factor, "epsilon_factor",
                     minimum=0.0, include_min=False)
        check_scalar(self.density_floor, "density_floor",
                     minimum=0.0, maximum=0.01, include_min=False)
        check_scalar(self.youngs_modulus, "youngs_modulus",
                     minimum=0.0, include_min=False)
        check_scalar(self.poisson_ratio, "poisson_ratio",
                     minimum=-1.0, maximum=0.5,
                     include_min=False, include_max=False)
        check_scalar(self.void_scale, "void_scale",
                     minimum=0.0, maximum=0.01)
        check_int(self.max_iterations, "max_iterations", minimum=0)
        check_scalar(self.move_limit_fraction, "move_limit_fraction",
                     minimum=0.0, maximum=0.5, include_min=False)
        check_scalar(self.convergence_tol, "convergence_tol",
                     minimum=0.0, include_min=False)
        if self.cells_x is not None:
            check_int(self.cells_x, "cells_x", minimum=1)
        if self.cells_y is not None:
            check_int(self.cells_y, "cells_y", minimum=1)
        check_scalar(self.angle_p, "angle_p",
                     minimum=-MAX_SIN_ANGLE, maximum=MAX_SIN_ANGLE)
        if (self.iteration_callback is not None
                and not callable(self.iteration_callback)):
            raise ValueError("iteration_callback must be callable or None")

    def _initial_design(self, problem, reg):
        cells_y = 2 if self.cells_y is None else self.cells_y
        if self.cells_x is None:
            cells_x = max(1, round(cells_y * problem.width / problem.height))
        else:
            cells_x = self.cells_x
        return grid_initial_design(cells_x, cells_y, problem,
                                   angle_p=self.angle_p, reg=reg)

    def fit(self, problem: ProblemSpec, initial_design=None):
        """Optimize the layout for one problem; returns self."""
        self._validate_params()
        if not isinstance(problem, ProblemSpec):
            raise TypeError("problem must be a ProblemSpec, got "
                            f"{type(problem).__name__}")
        mesh = problem.build_mesh()
        reg = Regularization(exponent=self.n_exponent,
                             bandwidth=self.epsilon_factor * mesh.h,
                             density_floor=self.density_floor)
        mat = Material(youngs_modulus=self.youngs_modulus,
                       poisson_ratio=self.poisson_ratio)
        bc = resolve_boundary_conditions(problem, mesh)

        if initial_design is None:
            comps = self._initial_design(problem, reg)
            design = pack_design(comps)
        elif (isinstance(initial_design, (list, tuple))
              and all(isinstance(c, Component) for c in initial_design)
              and initial_design):
            design = pack_design(list(initial_design))
        else:
            design = np.array(initial_design, dtype=float).ravel()
            if design.size == 0 or design.size % 5:
                raise ValueError("initial design must hold 5 values per "
                                 f"component, got {design.size}")

        lo1, up1 = design_bounds(problem)
        n_comp = design.size // 5
        lower = np.tile(lo1, n_comp)
        upper = np.tile(up1, n_comp)
        if np.any(design < lower) or np.any(design > upper):
            raise ValueError("initial design violates the design bounds "
                             "for this problem")
        bounds = Bounds(lower, upper,
                        self.move_limit_fraction * (upper - lower))
        span = upper - lower

        # stiffness densities may be remapped away from the ersatz floor;
        # the chain rule then carries the constant remap slope
        if self.void_scale > 0.0:
            stiff_scale = (1.0 - self.void_scale) / (1.0 - self.density_floor)
        else:
            stiff_scale = 1.0

        def analyze(vec, iteration):
            comps = unpack_design(vec)
            rho = element_densities(comps, mesh, reg)
            rho_stiff = rho
            if self.void_scale > 0.0:
                rho_stiff = (self.void_scale
                             + stiff_scale * (rho - self.density_floor))
            try:
                sol = assemble_and_solve(mesh, rho_stiff, bc, mat)
            except RuntimeError as err:
                raise RuntimeError(
                    f"analysis failed at iteration {iteration}: {err}"
                ) from err
            return comps, sol, volume(rho, mesh)

        area = problem.domain_area
        budget = problem.volume_budget
        records = []

        def push(iteration, sol, vol, change, comps):
            rec = IterationRecord(
                iteration=iteration,
                compliance=float(sol.compliance),
                volume=float(vol),
                volume_fraction=float(vol / area),
                constraint_value=float(vol / budget - 1.0),
                max_design_change=float(change),
            )
            records.append(rec)
            if self.iteration_callback is not None:
                self.iteration_callback(iteration, comps, rec)

        comps, sol, vol = analyze(design, 0)
        push(0, sol, vol, 0.0, comps)

        state = MmaState.fresh(design.size)
        streak = 0
        converged = False
        for it in range(1, self.max_iterations + 1):
            df = compliance_gradient(comps, mesh, reg, sol) * stiff_scale
            dv = volume_gradient(comps, mesh, reg)
            g = np.array([vol / budget - 1.0])
            dg = (dv / budget)[None, :]
            new_design, state = mma_update(design, sol.compliance, df, g, dg,
                                           bounds, state)
            change = float(np.max(np.abs(new_design - design) / span))
            design = new_design
            comps, sol, vol = analyze(design, it)
            push(it, sol, vol, change, comps)
            streak = streak + 1 if change < self.convergence_tol else 0
            if streak >= CONVERGENCE_STREAK:
                converged = True
                break

        self.components_ = comps
        self.design_ = design.copy()
        self.history_ = records
        self.compliance_ = records[-1].compliance
        self.volume_fraction_ = records[-1].volume_fraction
        self.n_iterations_ = records[-1].iteration
        self.n_design_variables_ = design.size
        self.mesh_ = mesh
        self.regularization_ = reg
        self.material_ = mat
        self.converged_ = converged
        return self
