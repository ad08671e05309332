"""Element operators and global sparse assembly of the Galerkin system.

The discrete residual at node ``i`` is

    r_i = sum_T d grad N_i . K grad theta            (conduction)
        + h_T (N_i, theta - theta_amb)               (surface convection)
        + eps sigma (N_i, theta^4 - theta_amb^4)     (radiation, optional)
        + chi (N_i, d theta / ds)_Sigma              (coolant advection)
        - (N_i, f) + (N_i, q_p)_{Gamma^q}

Constrained nodes (prescribed temperature edges and the vasculature inlet)
are eliminated from the system.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import kernels
from .errors import ConflictingConstraintError, DegenerateElementError
from .mesh import FLUX


def _area(coords):
    p = np.asarray(coords, float)
    det = (p[1, 0] - p[0, 0]) * (p[2, 1] - p[0, 1]) - (p[2, 0] - p[0, 0]) * (p[1, 1] - p[0, 1])
    scale = max(np.abs(p).max(), 1e-300) ** 2
    if abs(det) <= 1e-14 * scale:
        raise DegenerateElementError(f"triangle {p.tolist()} has zero area")
    return 0.5 * det


def element_stiffness(coords, conductivity, thickness):
    a = _area(coords)
    ke = kernels.stiffness_batch(np.asarray(coords, float), np.array([[0, 1, 2]]),
                                 np.asarray(conductivity, float)[None], thickness, use_numba=False)[0]
    return ke if a > 0 else -ke


def element_convection(coords, h, theta_amb=0.0):
    """Consistent convection block and its right-hand side ``h theta_amb A / 3``."""
    a = abs(_area(coords))
    return h * a * kernels.CONVECTION_PATTERN, np.full(3, h * theta_amb * a / 3.0)


def element_advection(length, chi):
    """Coolant advection block on a segment's (upstream, downstream) nodes.

    Independent of ``length``: the shape function integrates to L/2 and the
    derivative is (theta_2 - theta_1) / L.
    """
    if not length > 0:
        raise DegenerateElementError(f"segment length must be positive, got {length}")
    return 0.5 * chi * np.array([[-1.0, 1.0], [-1.0, 1.0]])


def element_load(coords, f):
    return np.full(3, f * abs(_area(coords)) / 3.0)


def radiation_contributions(coords, emissivity, sigma, theta_amb, theta):
    a = abs(_area(coords))
    res, jac = kernels.radiation_batch(np.array([[0, 1, 2]]), np.array([a]), np.asarray(theta, float),
                                       emissivity * sigma, theta_amb, use_numba=False)
    return res[0], jac[0]


def segment_peclet(problem):
    """Coolant-to-conduction ratio chi / (2 d k_min) at a path edge.

    On P1 triangles the conduction coupling across an edge scales with
    ``d k`` independent of the element size, so this ratio is the element
    Peclet number of the embedded line term.
    """
    if problem.chi == 0:
        return 0.0
    k = problem.material.conductivity.reshape(-1, 2, 2)
    kmin = float(np.linalg.eigvalsh(k)[:, 0].min())
    return problem.chi / (2.0 * problem.material.thickness * kmin)


def constraint_map(problem):
    """Node -> prescribed temperature for Dirichlet nodes and the inlet."""
    cmap = dict(problem.loads.dirichlet)
    if problem.has_inlet_constraint:
        n, v = problem.path.inlet, float(problem.flow.inlet_temperature)
        if n in cmap and abs(cmap[n] - v) > 1e-12 * max(abs(v), 1.0):
            raise ConflictingConstraintError(
                f"inlet node {n} has prescribed temperature {cmap[n]} K but inlet temperature {v} K")
        cmap[n] = v
    return dict(sorted(cmap.items()))


@dataclass(frozen=True, eq=False)
class SparseSystem:
    """Reduced system over unconstrained nodes.

    For a linear assembly ``matrix @ theta[free] = rhs``. For a radiative
    assembly at an iterate, ``matrix`` is the Jacobian and ``rhs`` is minus
    the residual, so ``matrix @ delta = rhs`` is the Newton correction.
    """

    matrix: sp.csr_matrix
    rhs: np.ndarray
    constraint_map: dict
    free: np.ndarray
    constrained: np.ndarray
    n_nodes: int

    def expand(self, free_values):
        """Full nodal vector from free-node values plus the constraint values."""
        theta = np.empty(self.n_nodes)
        theta[self.free] = free_values
        theta[self.constrained] = [self.constraint_map[n] for n in self.constrained.tolist()]
        return theta


class LinearOperator:
    """Full (un-eliminated) linear part ``A theta - b`` of the residual.

    Built once per problem; the Newton solver reuses it for every iterate.
    """

    def __init__(self, problem):
        mesh, mat, loads = problem.mesh, problem.material, problem.loads
        tris = mesh.triangles
        area = mesh.signed_areas
        if np.any(area <= 0):
            raise DegenerateElementError(f"triangles {np.flatnonzero(area <= 0)[:5].tolist()} have non-positive area")
        n = mesh.n_nodes
        self.problem = problem
        self.area = area

        blocks = kernels.stiffness_batch(mesh.nodes, tris, mat.conductivity_per_triangle(len(tris)), mat.thickness)
        blocks = blocks + kernels.convection_batch(area, mat.convection_coefficient)
        self._rows = np.repeat(tris, 3, axis=1).ravel()
        self._cols = np.tile(tris, (1, 3)).ravel()
        rows, cols, vals = [self._rows], [self._cols], [blocks.ravel()]

        if problem.chi > 0:
            seg = problem.path.segments
            adv = element_advection(1.0, problem.chi)
            rows.append(np.repeat(seg, 2, axis=1).ravel())
            cols.append(np.tile(seg, (1, 2)).ravel())
            vals.append(np.tile(adv.ravel(), len(seg)))

        self.matrix = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                                    shape=(n, n)).tocsr()

        nodal = (loads.heat_source + mat.convection_coefficient * loads.ambient_temperature) * area / 3.0
        b = np.bincount(tris.ravel(), weights=np.repeat(nodal, 3), minlength=n)
        is_flux = mesh.boundary_tags == FLUX
        if np.any(is_flux):
            e = mesh.boundary_edges[is_flux]
            d = mesh.nodes[e[:, 1]] - mesh.nodes[e[:, 0]]
            half = 0.5 * np.hypot(d[:, 0], d[:, 1]) * loads.neumann_values[is_flux]
            b -= np.bincount(e.ravel(), weights=np.repeat(half, 2), minlength=n)
        self.rhs = b

        self.constraint_map = constraint_map(problem)
        self.constrained = np.array(list(self.constraint_map), dtype=np.int64)
        mask = np.ones(n, bool)
        mask[self.constrained] = False
        self.free = np.flatnonzero(mask)
        self.constrained_values = np.array(list(self.constraint_map.values()), dtype=float)
        self._A_ff = self.matrix[self.free][:, self.free].tocsr()
        self._A_fc = self.matrix[self.free][:, self.constrained].tocsr()

    @property
    def eps_sigma(self):
        p = self.problem
        return p.effective_emissivity * p.material.stefan_boltzmann

    def radiation(self, theta):
        """Global radiation residual (N,) and Jacobian (CSR) at ``theta``."""
        p = self.problem
        res, jac = kernels.radiation_batch(p.mesh.triangles, self.area, theta, self.eps_sigma,
                                           p.loads.ambient_temperature)
        n = p.mesh.n_nodes
        r = np.bincount(p.mesh.triangles.ravel(), weights=res.ravel(), minlength=n)
        J = sp.coo_matrix((jac.ravel(), (self._rows, self._cols)), shape=(n, n)).tocsr()
        return r, J

    def residual(self, theta):
        """Full nodal residual; nonzero entries at constrained nodes are reactions."""
        r = self.matrix @ theta - self.rhs
        if self.problem.radiation_enabled and self.eps_sigma > 0:
            r = r + self.radiation(theta)[0]
        return r

    def linear_system(self):
        rhs = self.rhs[self.free] - self._A_fc @ self.constrained_values
        return SparseSystem(self._A_ff, rhs, self.constraint_map, self.free, self.constrained, len(self.rhs))

    def newton_system(self, theta):
        theta = np.array(theta, dtype=float)
        theta[self.constrained] = self.constrained_values
        r = self.matrix @ theta - self.rhs
        J = self.matrix
        if self.eps_sigma > 0:
            rr, Jr = self.radiation(theta)
            r = r + rr
            J = J + Jr
        J_ff = J[self.free][:, self.free].tocsr()
        return SparseSystem(J_ff, -r[self.free], self.constraint_map, self.free, self.constrained, len(theta))


def assemble(problem, theta=None):
    """Assemble the reduced system.

    Without radiation this is the linear system. With radiation enabled a
    current iterate ``theta`` is required and the Newton system is returned.
    """
    op = LinearOperator(problem)
    if problem.radiation_enabled and op.eps_sigma > 0:
        if theta is None:
            raise ValueError("radiative assembly needs a current iterate theta")
        return op.newton_system(theta)
    return op.linear_system()
