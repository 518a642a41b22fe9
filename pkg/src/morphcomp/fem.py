"""Plane-stress finite elements on a fixed uniform grid of square elements.

The structure occupies the grid only through an ersatz density per element:
the mean of the smoothed Heaviside of the structure TDF over the element's
2x2 Gauss points.  Void elements keep a small floor density so the global
stiffness matrix stays invertible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from numpy.typing import ArrayLike, NDArray

from .geometry import Component, Regularization, smoothed_heaviside, structure_tdf
from .validation import check_int, check_scalar

# 2x2 Gauss abscissae on [-1, 1] with unit weights; point order matches the
# counterclockwise corner order.
_GAUSS_PTS = np.array([[a, b] for a, b in
                       [(-1, -1), (1, -1), (1, 1), (-1, 1)]]) / np.sqrt(3.0)
# Corner coordinates of the reference square, counterclockwise from (-1,-1).
_CORNERS = np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]])


@dataclass(frozen=True)
class Mesh:
    """Uniform grid of square bilinear elements over [0,w] x [0,h]."""

    nx: int
    ny: int
    h: float
    node_coords: NDArray[np.float64] = field(repr=False)
    element_connectivity: NDArray[np.intp] = field(repr=False)

    @property
    def n_nodes(self) -> int:
        return (self.nx + 1) * (self.ny + 1)

    @property
    def n_elements(self) -> int:
        return self.nx * self.ny

    @property
    def n_dofs(self) -> int:
        return 2 * self.n_nodes

    @property
    def width(self) -> float:
        return self.nx * self.h

    @property
    def height(self) -> float:
        return self.ny * self.h

    def node_index(self, i: int, j: int) -> int:
        """Row-major node id of grid position (i, j)."""
        return j * (self.nx + 1) + i

    def nearest_node(self, x: float, y: float) -> int:
        """Node closest to (x, y); ties resolve to the lower node index."""
        d2 = ((self.node_coords[:, 0] - x)**2
              + (self.node_coords[:, 1] - y)**2)
        return int(np.argmin(d2))


def build_mesh(width: float, height: float, nx: int, ny: int) -> Mesh:
    """Uniform square-element mesh with row-major node numbering."""
    check_scalar(width, "width", minimum=0.0, include_min=False)
    check_scalar(height, "height", minimum=0.0, include_min=False)
    nx = check_int(nx, "nx", minimum=1)
    ny = check_int(ny, "ny", minimum=1)
    hx, hy = width / nx, height / ny
    if abs(hx - hy) > 1e-12 * max(hx, hy):
        raise ValueError(f"elements must be square: width/nx = {hx} but "
                         f"height/ny = {hy}")
    h = hx
    xs = np.arange(nx + 1) * h
    ys = np.arange(ny + 1) * h
    gx, gy = np.meshgrid(xs, ys)          # row-major: j outer, i inner
    coords = np.column_stack([gx.ravel(), gy.ravel()])

    ii, jj = np.meshgrid(np.arange(nx), np.arange(ny))
    ii, jj = ii.ravel(), jj.ravel()
    n0 = jj * (nx + 1) + ii
    conn = np.column_stack([n0, n0 + 1, n0 + nx + 2, n0 + nx + 1])
    return Mesh(nx, ny, h, coords, conn.astype(np.intp))


@dataclass(frozen=True)
class Material:
    """Linear isotropic plane-stress material with unit thickness."""

    youngs_modulus: float = 1.0
    poisson_ratio: float = 0.3

    def __post_init__(self):
        check_scalar(self.youngs_modulus, "youngs_modulus",
                     minimum=0.0, include_min=False)
        check_scalar(self.poisson_ratio, "poisson_ratio",
                     minimum=-1.0, maximum=0.5,
                     include_min=False, include_max=False)

    def constitutive(self) -> NDArray[np.float64]:
        """3x3 plane-stress constitutive matrix."""
        e, nu = self.youngs_modulus, self.poisson_ratio
        return e / (1.0 - nu**2) * np.array([[1.0, nu, 0.0],
                                             [nu, 1.0, 0.0],
                                             [0.0, 0.0, (1.0 - nu) / 2.0]])


@dataclass(frozen=True)
class BoundaryConditions:
    """Homogeneous Dirichlet DOFs plus nodal point loads."""

    fixed_dofs: NDArray[np.intp]
    point_loads: tuple[tuple[int, tuple[float, float]], ...]

    def __post_init__(self):
        fixed = np.unique(np.asarray(self.fixed_dofs, dtype=np.intp))
        if fixed.size == 0:
            raise ValueError("fixed_dofs must be nonempty (rigid-body motion)")
        object.__setattr__(self, "fixed_dofs", fixed)
        loads = tuple((int(n), (float(fx), float(fy)))
                      for n, (fx, fy) in self.point_loads)
        object.__setattr__(self, "point_loads", loads)


@dataclass(frozen=True)
class FemSolution:
    """Result of one linear solve on the fixed grid.

    element_energy_density holds the unit-density strain energy density
    (strain : constitutive : strain) at each element's four Gauss points,
    deliberately not scaled by the ersatz density; the density-weighted
    quadrature of it reproduces the compliance.
    """

    displacements: NDArray[np.float64]
    compliance: float
    element_energy_density: NDArray[np.float64]


def _shape_gradients(h: float) -> NDArray[np.float64]:
    """B matrices at the four Gauss points, shape (4, 3, 8)."""
    b_all = np.zeros((4, 3, 8))
    for g, (xi, eta) in enumerate(_GAUSS_PTS):
        # bilinear shape-function gradients on the reference square, mapped
        # by the constant Jacobian 2/h
        dn_dxi = 0.25 * _CORNERS[:, 0] * (1.0 + _CORNERS[:, 1] * eta)
        dn_deta = 0.25 * _CORNERS[:, 1] * (1.0 + _CORNERS[:, 0] * xi)
        dn_dx = dn_dxi * (2.0 / h)
        dn_dy = dn_deta * (2.0 / h)
        b_all[g, 0, 0::2] = dn_dx
        b_all[g, 1, 1::2] = dn_dy
        b_all[g, 2, 0::2] = dn_dy
        b_all[g, 2, 1::2] = dn_dx
    return b_all


def element_stiffness(mat: Material, h: float) -> NDArray[np.float64]:
    """8x8 stiffness of one solid square element (2x2 Gauss, unit thickness)."""
    check_scalar(h, "h", minimum=0.0, include_min=False)
    d = mat.constitutive()
    det_j = (h / 2.0)**2
    ke = np.zeros((8, 8))
    for b in _shape_gradients(h):
        ke += b.T @ d @ b * det_j
    return 0.5 * (ke + ke.T)


def gauss_point_coords(mesh: Mesh) -> NDArray[np.float64]:
    """Global coordinates of every element's Gauss points, (n_elements, 4, 2)."""
    corners = mesh.node_coords[mesh.element_connectivity[:, 0]]
    centers = corners + 0.5 * mesh.h
    offsets = _GAUSS_PTS * (mesh.h / 2.0)
    return centers[:, None, :] + offsets[None, :, :]


def element_densities(comps: list[Component], mesh: Mesh,
                      reg: Regularization) -> NDArray[np.float64]:
    """Ersatz density per element: mean Heaviside of the TDF at Gauss points."""
    gauss = gauss_point_coords(mesh).reshape(-1, 2)
    phi = structure_tdf(comps, gauss, exponent=reg.exponent).phi_structure
    dens = smoothed_heaviside(phi, reg).reshape(mesh.n_elements, 4)
    return dens.mean(axis=1)


def _element_dof_map(mesh: Mesh) -> NDArray[np.intp]:
    """(n_elements, 8) global DOF indices in local node order."""
    conn = mesh.element_connectivity
    dofs = np.empty((mesh.n_elements, 8), dtype=np.intp)
    dofs[:, 0::2] = 2 * conn
    dofs[:, 1::2] = 2 * conn + 1
    return dofs


def _load_vector(mesh: Mesh, bc: BoundaryConditions) -> NDArray[np.float64]:
    f = np.zeros(mesh.n_dofs)
    for node, (fx, fy) in bc.point_loads:
        if not 0 <= node < mesh.n_nodes:
            raise ValueError(f"load node {node} outside mesh "
                             f"with {mesh.n_nodes} nodes")
        f[2 * node] += fx
        f[2 * node + 1] += fy
    return f


def assemble_and_solve(mesh: Mesh, densities: ArrayLike,
                       bc: BoundaryConditions, mat: Material) -> FemSolution:
    """Assemble the ersatz-weighted stiffness, solve, report compliance.

    Fixed DOFs are eliminated before the sparse direct solve; the result is
    deterministic for identical inputs.
    """
    rho = np.asarray(densities, dtype=float)
    if rho.shape != (mesh.n_elements,):
        raise ValueError(f"densities must have shape ({mesh.n_elements},), "
                         f"got {rho.shape}")
    if bc.fixed_dofs.min() < 0 or bc.fixed_dofs.max() >= mesh.n_dofs:
        raise ValueError("fixed_dofs outside the mesh DOF range")

    ke = element_stiffness(mat, mesh.h)
    dof_map = _element_dof_map(mesh)
    vals = rho[:, None, None] * ke[None, :, :]
    rows = np.repeat(dof_map, 8, axis=1)
    cols = np.tile(dof_map, (1, 8))
    k_full = sp.coo_matrix((vals.ravel(), (rows.ravel(), cols.ravel())),
                           shape=(mesh.n_dofs, mesh.n_dofs)).tocsc()

    f = _load_vector(mesh, bc)
    free = np.setdiff1d(np.arange(mesh.n_dofs), bc.fixed_dofs)
    u = np.zeros(mesh.n_dofs)
    f_free = f[free]
    norm_f = np.linalg.norm(f_free)
    if norm_f > 0.0:
        k_ff = k_full[np.ix_(free, free)].tocsc()
        try:
            factor = spla.splu(k_ff)
        except RuntimeError as err:
            raise RuntimeError(f"linear solve failed: {err}") from err
        pivots = np.abs(factor.U.diagonal())
        if pivots.min() <= 1e-13 * pivots.max():
            raise RuntimeError("linear solve failed: singular stiffness "
                               "(insufficient constraints)")
        u_free = factor.solve(f_free)

        # relative residual as normwise backward error; dividing by
        # ||f|| alone is unattainable in float64 once ||K||*||u|| is
        # several orders above ||f||, as rounding the exact solution
        # already leaves that much residual
        k_norm = spla.norm(k_ff, 1)

        def backward_error(vec):
            r = np.linalg.norm(k_ff @ vec - f_free)
            return r / (k_norm * np.linalg.norm(vec) + norm_f)

        residual = backward_error(u_free)
        # iterative refinement reuses the factorization to recover badly
        # scaled systems
        for _ in range(3):
            if not np.isfinite(residual) or residual <= 1e-14:
                break
            u_free = u_free + factor.solve(f_free - k_ff @ u_free)
            residual = backward_error(u_free)
        if not np.isfinite(u_free).all() or residual > 1e-10:
            raise RuntimeError(f"linear solve failed: relative residual "
                               f"{residual:.3e} (singular or ill-posed system)")
        u[free] = u_free

    compliance = float(f @ u)
    d = mat.constitutive()
    u_el = u[dof_map]                                   # (n_el, 8)
    energy = np.empty((mesh.n_elements, 4))
    for g, b in enumerate(_shape_gradients(mesh.h)):
        strain = u_el @ b.T                             # (n_el, 3)
        energy[:, g] = np.einsum("ij,jk,ik->i", strain, d, strain)
    return FemSolution(u, compliance, energy)


def volume(densities: ArrayLike, mesh: Mesh) -> float:
    """Material volume: sum of element densities times element area."""
    rho = np.asarray(densities, dtype=float)
    if rho.shape != (mesh.n_elements,):
        raise ValueError(f"densities must have shape ({mesh.n_elements},), "
                         f"got {rho.shape}")
    return float(rho.sum() * mesh.h**2)
