"""Estimator behavior: convergence loop, records, sklearn conventions."""

import numpy as np
import pytest
from sklearn.base import clone

from morphcomp.fem import Material, assemble_and_solve, element_densities
from morphcomp.geometry import Component, Regularization, pack_design
from morphcomp.optimizer import IterationRecord, MovingComponentOptimizer
from morphcomp.problems import ProblemSpec, resolve_boundary_conditions
from morphcomp.sensitivity import (compliance_gradient,
                                   finite_difference_oracle)


def column_problem():
    return ProblemSpec(
        name="column", width=1.0, height=1.0, nx=16, ny=16,
        supports=(("edge", "bottom", "both"),),
        loads=(((0.5, 1.0), (0.0, -1.0)),),
        volume_fraction_max=0.4,
    )


def test_fit_returns_self_and_sets_attributes():
    opt = MovingComponentOptimizer(max_iterations=8, cells_x=1, cells_y=1)
    assert opt.fit(column_problem()) is opt
    assert len(opt.components_) == 2
    assert opt.n_design_variables_ == 10
    assert opt.design_.shape == (10,)
    assert len(opt.history_) == opt.n_iterations_ + 1
    assert isinstance(opt.history_[0], IterationRecord)
    assert opt.history_[0].iteration == 0
    assert opt.history_[0].max_design_change == 0.0
    assert opt.mesh_.n_elements == 256
    assert opt.regularization_.bandwidth == pytest.approx(6.0 / 16)
    assert opt.material_.poisson_ratio == 0.3


def test_compliance_decreases_and_converges_feasible():
    opt = MovingComponentOptimizer(max_iterations=60, cells_x=1, cells_y=1)
    opt.fit(column_problem())
    hist = opt.history_
    assert opt.converged_
    assert hist[-1].compliance < hist[0].compliance
    assert hist[-1].constraint_value <= 1e-2
    for rec in hist:
        assert rec.volume_fraction == pytest.approx(rec.volume / 1.0)
        assert rec.constraint_value == pytest.approx(
            rec.volume / 0.4 - 1.0, rel=1e-12)


def test_default_grid_matches_domain_aspect():
    spec = ProblemSpec(
        name="wide", width=2.0, height=1.0, nx=20, ny=10,
        supports=(("edge", "left", "both"),),
        loads=(((2.0, 0.5), (0.0, -1.0)),),
        volume_fraction_max=0.5,
    )
    opt = MovingComponentOptimizer(max_iterations=0)
    opt.fit(spec)
    # two rows of roughly square cells: 4 x 2 cells, crossed pairs
    assert opt.n_design_variables_ == 80
    assert len(opt.components_) == 16


def test_tiny_move_limit_freezes_and_converges():
    opt = MovingComponentOptimizer(max_iterations=50,
                                   move_limit_fraction=1e-12,
                                   convergence_tol=1e-3,
                                   cells_x=1, cells_y=1)
    opt.fit(column_problem())
    assert opt.converged_
    assert opt.n_iterations_ == 3
    start = MovingComponentOptimizer(max_iterations=0, cells_x=1, cells_y=1)
    start.fit(column_problem())
    assert np.allclose(opt.design_, start.design_, atol=1e-9)


def test_max_iterations_zero_analyzes_start_only():
    opt = MovingComponentOptimizer(max_iterations=0, cells_x=1, cells_y=1)
    opt.fit(column_problem())
    assert opt.n_iterations_ == 0
    assert len(opt.history_) == 1
    assert not opt.converged_
    assert opt.compliance_ == opt.history_[0].compliance


def test_callback_sees_every_record():
    seen = []

    def cb(iteration, comps, record):
        seen.append((iteration, list(comps), record))

    opt = MovingComponentOptimizer(max_iterations=5, cells_x=1, cells_y=1,
                                   iteration_callback=cb)
    opt.fit(column_problem())
    assert [s[0] for s in seen] == [r.iteration for r in opt.history_]
    assert all(isinstance(c, Component) for c in seen[0][1])
    assert seen[-1][2] == opt.history_[-1]


def test_deterministic_reruns():
    kwargs = dict(max_iterations=10, cells_x=1, cells_y=1)
    a = MovingComponentOptimizer(**kwargs).fit(column_problem())
    b = MovingComponentOptimizer(**kwargs).fit(column_problem())
    assert np.array_equal(a.design_, b.design_)
    assert a.history_ == b.history_


def test_explicit_initial_design_forms_agree():
    comps = [Component(0.5, 0.3, 0.6, 0.15, 0.2),
             Component(0.5, 0.7, 0.6, 0.15, -0.2)]
    spec = column_problem()
    a = MovingComponentOptimizer(max_iterations=4).fit(
        spec, initial_design=comps)
    b = MovingComponentOptimizer(max_iterations=4).fit(
        spec, initial_design=pack_design(comps))
    assert np.array_equal(a.design_, b.design_)


def test_initial_design_outside_bounds_rejected():
    spec = column_problem()
    bad = [Component(1.5, 0.5, 0.5, 0.1, 0.0)]  # center beyond the domain
    with pytest.raises(ValueError, match="bounds"):
        MovingComponentOptimizer().fit(spec, initial_design=bad)
    with pytest.raises(ValueError, match="5 values"):
        MovingComponentOptimizer().fit(spec, initial_design=np.ones(7))


def test_parameter_validation():
    spec = column_problem()
    with pytest.raises(ValueError, match="n_exponent"):
        MovingComponentOptimizer(n_exponent=5).fit(spec)
    with pytest.raises(ValueError, match="poisson_ratio"):
        MovingComponentOptimizer(poisson_ratio=0.5).fit(spec)
    with pytest.raises(ValueError, match="move_limit_fraction"):
        MovingComponentOptimizer(move_limit_fraction=0.0).fit(spec)
    with pytest.raises(ValueError, match="void_scale"):
        MovingComponentOptimizer(void_scale=0.02).fit(spec)
    with pytest.raises(TypeError, match="ProblemSpec"):
        MovingComponentOptimizer().fit("mbb")


def test_sklearn_get_set_clone():
    opt = MovingComponentOptimizer(max_iterations=7, epsilon_factor=1.5)
    params = opt.get_params()
    assert params["max_iterations"] == 7
    assert params["epsilon_factor"] == 1.5
    opt.set_params(convergence_tol=5e-3)
    assert opt.convergence_tol == 5e-3
    twin = clone(opt)
    assert twin.get_params() == opt.get_params()


def test_void_scale_gradient_consistency():
    # the remap multiplies the compliance gradient by a constant slope;
    # check the full chain against finite differences on a coarse mesh
    spec = ProblemSpec(
        name="bar", width=2.0, height=1.0, nx=10, ny=5,
        supports=(("edge", "left", "both"),),
        loads=(((2.0, 0.5), (0.0, -1.0)),),
        volume_fraction_max=0.5,
    )
    mesh = spec.build_mesh()
    reg = Regularization(exponent=6, bandwidth=2 * mesh.h,
                         density_floor=1e-3)
    mat = Material(1.0, 0.3)
    bc = resolve_boundary_conditions(spec, mesh)
    void_scale = 0.005
    scale = (1.0 - void_scale) / (1.0 - reg.density_floor)
    design = pack_design([Component(1.0, 0.5, 1.7, 0.3, 0.015)])

    def compliance_of(vec):
        comps = [Component(*vec[:5])]
        rho = element_densities(comps, mesh, reg)
        rho = void_scale + scale * (rho - reg.density_floor)
        return assemble_and_solve(mesh, rho, bc, mat).compliance

    comps = [Component(*design[:5])]
    rho = element_densities(comps, mesh, reg)
    rho = void_scale + scale * (rho - reg.density_floor)
    sol = assemble_and_solve(mesh, rho, bc, mat)
    grad = compliance_gradient(comps, mesh, reg, sol) * scale
    fd = finite_difference_oracle(
        compliance_of, design,
        1e-5 * np.array([2.0, 1.0, 2.2, 0.5, 2.0]))
    err = np.abs(grad - fd)
    assert np.all(err <= 1e-8 + 1e-3 * np.maximum(np.abs(grad), np.abs(fd)))


def test_void_scale_run_improves_compliance():
    opt = MovingComponentOptimizer(max_iterations=6, void_scale=0.002,
                                   cells_x=1, cells_y=1)
    opt.fit(column_problem())
    assert opt.history_[-1].compliance < opt.history_[0].compliance
