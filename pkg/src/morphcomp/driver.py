"""Config-driven runs: problem setup, optimization, artifact emission."""

from __future__ import annotations

import os

import numpy as np

from .config import ConfigError, RunConfig
from .export import (export_cad_svg, export_component_table,
                     export_contour_svg, export_history_csv)
from .geometry import Component, Regularization
from .optimizer import MovingComponentOptimizer
from .problems import (ProblemSpec, mbb_problem, resolve_boundary_conditions,
                       short_beam_problem)
from .sensitivity import (compliance_gradient, finite_difference_oracle,
                          volume_gradient)


def _parse_pair(text: str, key: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise ConfigError(f"key '{key}': expected 'x,y', got {text!r}")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError:
        raise ConfigError(f"key '{key}': expected two numbers, "
                          f"got {text!r}") from None


def _parse_supports(text: str):
    directives = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        fields = [f.strip() for f in chunk.split(":")]
        if len(fields) != 3 or fields[0] not in ("edge", "point"):
            raise ConfigError("key 'custom.supports': expected "
                              "'edge:NAME:DIR' or 'point:X,Y:DIR', "
                              f"got {chunk!r}")
        kind, where, direction = fields
        if kind == "edge":
            directives.append(("edge", where, direction))
        else:
            directives.append(("point", _parse_pair(where, "custom.supports"),
                               direction))
    if not directives:
        raise ConfigError("key 'custom.supports': no directives given")
    return tuple(directives)


def _parse_loads(text: str):
    loads = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        fields = chunk.split(":")
        if len(fields) != 2:
            raise ConfigError("key 'custom.loads': expected 'X,Y:FX,FY', "
                              f"got {chunk!r}")
        loads.append((_parse_pair(fields[0], "custom.loads"),
                      _parse_pair(fields[1], "custom.loads")))
    if not loads:
        raise ConfigError("key 'custom.loads': no loads given")
    return tuple(loads)


def build_problem(config: RunConfig) -> ProblemSpec:
    """The benchmark named in the config, or the custom problem it defines."""
    if config.problem == "short_beam_a":
        return short_beam_problem("A")
    if config.problem == "short_beam_b":
        return short_beam_problem("B")
    if config.problem == "mbb":
        return mbb_problem()
    try:
        return ProblemSpec(
            name="custom",
            width=config.custom_width,
            height=config.custom_height,
            nx=config.custom_nx,
            ny=config.custom_ny,
            supports=_parse_supports(config.custom_supports),
            loads=_parse_loads(config.custom_loads),
            volume_fraction_max=config.custom_volume_fraction_max,
        )
    except ValueError as err:
        if isinstance(err, ConfigError):
            raise
        raise ConfigError(f"custom problem: {err}") from err


def build_optimizer(config: RunConfig,
                    iteration_callback=None) -> MovingComponentOptimizer:
    return MovingComponentOptimizer(
        n_exponent=config.n_exponent,
        epsilon_factor=config.epsilon_factor,
        density_floor=config.density_floor,
        youngs_modulus=config.youngs_modulus,
        poisson_ratio=config.poisson_ratio,
        void_scale=config.void_scale,
        max_iterations=config.max_iterations,
        move_limit_fraction=config.move_limit_fraction,
        convergence_tol=config.convergence_tol,
        cells_x=config.cells_x,
        cells_y=config.cells_y,
        angle_p=config.angle_p,
        iteration_callback=iteration_callback,
    )


def run_optimization(config: RunConfig, output_dir: str | None = None,
                     max_iterations: int | None = None):
    """Run one optimization and write the configured artifacts.

    Returns (components, records, optimizer).  Artifacts reflect whatever
    iterations completed, so a run that fails mid-way still leaves its
    partial history on disk.
    """
    problem = build_problem(config)
    out = config.output_directory if output_dir is None else output_dir
    mesh = problem.build_mesh()
    reg = Regularization(exponent=config.n_exponent,
                         bandwidth=config.epsilon_factor * mesh.h,
                         density_floor=config.density_floor)

    records: list = []
    latest: dict = {"components": None}

    def on_iteration(iteration, comps, record):
        records.append(record)
        latest["components"] = comps
        if (config.snapshot_every > 0 and config.emit_contour
                and iteration % config.snapshot_every == 0):
            export_contour_svg(comps, mesh, reg,
                               os.path.join(out,
                                            f"contour_{iteration:04d}.svg"))

    opt = build_optimizer(config, iteration_callback=on_iteration)
    if max_iterations is not None:
        opt.set_params(max_iterations=max_iterations)
    try:
        opt.fit(problem)
    finally:
        comps = latest["components"]
        if records and comps is not None:
            if config.emit_history:
                export_history_csv(records, os.path.join(out, "history.csv"))
            if config.emit_components:
                export_component_table(comps,
                                       os.path.join(out, "components.csv"))
            if config.emit_contour:
                export_contour_svg(comps, mesh, reg,
                                   os.path.join(out, "contour.svg"))
            if config.emit_cad:
                export_cad_svg(comps, os.path.join(out, "cad.svg"),
                               domain=(mesh.width, mesh.height))
    return opt.components_, records, opt


_GRADCHECK_STEP = np.array([2.0, 1.0, 2.2, 0.5, 2.0]) * 1e-5


def _gradcheck_design(seed: int) -> list[Component]:
    """Three bars in separate horizontal strips of the 2 x 1 cantilever.

    Keeping the smoothing bands disjoint makes the min-based overlap rule
    differentiable at every Gauss point, so finite differences are a valid
    reference for the analytic gradient.
    """
    rng = np.random.default_rng(seed)
    comps = []
    for band in (0.17, 0.5, 0.83):
        comps.append(Component(
            center_x=float(rng.uniform(0.9, 1.1)),
            center_y=band,
            length=float(rng.uniform(1.5, 2.0)),
            thickness=float(rng.uniform(0.14, 0.22)),
            sin_angle=float(rng.uniform(-0.02, 0.02)),
        ))
    return comps


def gradient_check(config: RunConfig) -> tuple[float, float]:
    """Analytic vs finite-difference gradients on a fixed cantilever.

    Returns the worst relative error for the compliance gradient and for
    the volume gradient, with denominators floored at 1e-8.
    """
    from .fem import Material, assemble_and_solve, element_densities, volume
    from .geometry import pack_design, unpack_design

    spec = ProblemSpec(
        name="gradcheck", width=2.0, height=1.0, nx=20, ny=10,
        supports=(("edge", "left", "both"),),
        loads=(((2.0, 0.5), (0.0, -1.0)),),
        volume_fraction_max=0.5,
    )
    mesh = spec.build_mesh()
    reg = Regularization(exponent=config.n_exponent,
                         bandwidth=config.epsilon_factor * mesh.h,
                         density_floor=config.density_floor)
    mat = Material(config.youngs_modulus, config.poisson_ratio)
    bc = resolve_boundary_conditions(spec, mesh)
    comps = _gradcheck_design(config.seed)
    design = pack_design(comps)
    step = np.tile(_GRADCHECK_STEP, len(comps))

    def compliance_of(vec):
        rho = element_densities(unpack_design(vec), mesh, reg)
        return assemble_and_solve(mesh, rho, bc, mat).compliance

    def volume_of(vec):
        return volume(element_densities(unpack_design(vec), mesh, reg), mesh)

    sol = assemble_and_solve(mesh, element_densities(comps, mesh, reg),
                             bc, mat)
    grad_c = compliance_gradient(comps, mesh, reg, sol)
    grad_v = volume_gradient(comps, mesh, reg)
    fd_c = finite_difference_oracle(compliance_of, design, step)
    fd_v = finite_difference_oracle(volume_of, design, 0.1 * step)

    def worst(analytic, fd):
        denom = np.maximum(np.maximum(np.abs(analytic), np.abs(fd)), 1e-8)
        return float(np.max(np.abs(analytic - fd) / denom))

    return worst(grad_c, fd_c), worst(grad_v, fd_v)
