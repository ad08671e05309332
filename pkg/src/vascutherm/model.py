"""Physical problem definition and admissibility checks."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import InvalidArgumentError, ValidationError
from .mesh import FLUX, TEMPERATURE, Mesh, VasculaturePath

STEFAN_BOLTZMANN = 5.67e-8


def heat_capacity_rate(mass_flow_rate, fluid_heat_capacity):
    """chi = mdot * c_f. Units follow the inputs (kg/s and J/kg/K give W/K)."""
    if mass_flow_rate < 0:
        raise InvalidArgumentError(f"mass flow rate must be >= 0, got {mass_flow_rate}")
    if fluid_heat_capacity <= 0:
        raise InvalidArgumentError(f"fluid heat capacity must be > 0, got {fluid_heat_capacity}")
    return mass_flow_rate * fluid_heat_capacity


@dataclass(frozen=True, eq=False)
class MaterialParams:
    thickness: float
    conductivity: np.ndarray  # (2, 2) or (n_triangles, 2, 2), W/m/K
    convection_coefficient: float
    emissivity: float = 0.0
    stefan_boltzmann: float = STEFAN_BOLTZMANN

    def __post_init__(self):
        k = np.array(self.conductivity, dtype=float)
        if k.ndim == 0:
            k = k * np.eye(2)
        k.setflags(write=False)
        object.__setattr__(self, "conductivity", k)

    def conductivity_per_triangle(self, n_triangles):
        k = self.conductivity
        if k.ndim == 2:
            return np.broadcast_to(k, (n_triangles, 2, 2))
        return k


@dataclass(frozen=True)
class VasculatureFlow:
    mass_flow_rate: float  # kg/s
    fluid_heat_capacity: float  # J/kg/K
    inlet_temperature: float  # K

    @property
    def heat_capacity_rate(self):
        return self.mass_flow_rate * self.fluid_heat_capacity


@dataclass(frozen=True, eq=False)
class SourcesAndBCs:
    """Loads and boundary data.

    ``heat_source`` is per triangle (W/m^2). ``neumann_values`` is per boundary
    edge (W/m, positive = heat leaving through the plate edge) and NaN on
    temperature-tagged edges. ``dirichlet`` maps node index to temperature (K).
    """

    heat_source: np.ndarray
    ambient_temperature: float
    neumann_values: np.ndarray
    dirichlet: dict = field(default_factory=dict)

    def __post_init__(self):
        f = np.array(self.heat_source, dtype=float)
        f.setflags(write=False)
        q = np.array(self.neumann_values, dtype=float)
        q.setflags(write=False)
        object.__setattr__(self, "heat_source", f)
        object.__setattr__(self, "neumann_values", q)
        object.__setattr__(self, "dirichlet", {int(k): float(v) for k, v in dict(self.dirichlet).items()})

    @property
    def dirichlet_nodes(self):
        return np.array(sorted(self.dirichlet), dtype=np.int64)

    @property
    def dirichlet_values(self):
        return np.array([self.dirichlet[k] for k in sorted(self.dirichlet)], dtype=float)


@dataclass(frozen=True, eq=False)
class ThermalProblem:
    mesh: Mesh
    material: MaterialParams
    loads: SourcesAndBCs
    path: Optional[VasculaturePath] = None
    flow: Optional[VasculatureFlow] = None
    radiation_enabled: bool = False

    @property
    def chi(self):
        return self.flow.heat_capacity_rate if (self.flow is not None and self.path is not None) else 0.0

    @property
    def has_inlet_constraint(self):
        # no flow means no fluid at the inlet, so nothing pins the inlet node
        return self.path is not None and self.flow is not None and self.chi > 0

    @property
    def effective_emissivity(self):
        return self.material.emissivity if self.radiation_enabled else 0.0

    def total_heat_source(self):
        return float(np.dot(self.loads.heat_source, self.mesh.areas))

    def mean_heat_source(self):
        return self.total_heat_source() / float(self.mesh.areas.sum())

    def replace(self, **changes):
        return replace(self, **changes)

    def with_loads(self, **changes):
        return replace(self, loads=replace(self.loads, **changes))

    def with_flow(self, **changes):
        return replace(self, flow=replace(self.flow, **changes))

    def with_material(self, **changes):
        return replace(self, material=replace(self.material, **changes))


def uniform_loads(mesh, heat_source, ambient_temperature, neumann=0.0, dirichlet=None):
    """Loads with a constant source and, by default, adiabatic flux edges.

    Temperature-tagged edges get NaN flux; ``dirichlet`` may be a scalar
    applied to every node on temperature-tagged edges, or a node dict.
    """
    f = np.full(mesh.n_triangles, float(heat_source))
    is_temp = mesh.boundary_tags == TEMPERATURE
    q = np.where(is_temp, np.nan, float(neumann))
    if dirichlet is None:
        dirichlet = {}
    elif np.isscalar(dirichlet):
        nodes = np.unique(mesh.boundary_edges[is_temp])
        dirichlet = {int(n): float(dirichlet) for n in nodes}
    return SourcesAndBCs(f, ambient_temperature, q, dirichlet)


@dataclass(frozen=True)
class Issue:
    code: str
    message: str
    index: Optional[int] = None

    def __str__(self):
        where = f" [{self.index}]" if self.index is not None else ""
        return f"{self.code}{where}: {self.message}"


def find_issues(problem):
    """Every violated admissibility invariant of ``problem`` (empty when valid)."""
    issues = []
    mesh, mat, loads = problem.mesh, problem.material, problem.loads
    for msg in mesh.check():
        issues.append(Issue("mesh-invalid", msg))

    if not mat.thickness > 0:
        issues.append(Issue("thickness-not-positive", f"d = {mat.thickness}"))
    if not mat.convection_coefficient >= 0:
        issues.append(Issue("convection-negative", f"h_T = {mat.convection_coefficient}"))
    if not 0 <= mat.emissivity <= 1:
        issues.append(Issue("emissivity-out-of-range", f"emissivity = {mat.emissivity}"))
    if not mat.stefan_boltzmann > 0:
        issues.append(Issue("stefan-boltzmann-not-positive", f"sigma = {mat.stefan_boltzmann}"))

    k = mat.conductivity
    if k.shape not in ((2, 2), (mesh.n_triangles, 2, 2)):
        issues.append(Issue("conductivity-shape", f"expected (2, 2) or ({mesh.n_triangles}, 2, 2), got {k.shape}"))
    else:
        kk = k.reshape(-1, 2, 2)
        asym = np.flatnonzero(np.abs(kk[:, 0, 1] - kk[:, 1, 0]) > 1e-12 * np.abs(kk).max(axis=(1, 2)))
        for t in asym[:10]:
            issues.append(Issue("conductivity-not-symmetric", "K is not symmetric", int(t) if k.ndim == 3 else None))
        eig = np.linalg.eigvalsh(kk)
        for t in np.flatnonzero(eig[:, 0] <= 0)[:10]:
            issues.append(Issue("conductivity-not-positive-definite",
                                f"eigenvalues {eig[t].tolist()}", int(t) if k.ndim == 3 else None))

    f = loads.heat_source
    if f.shape != (mesh.n_triangles,):
        issues.append(Issue("heat-source-shape", f"expected ({mesh.n_triangles},), got {f.shape}"))
    elif not np.all(np.isfinite(f)):
        issues.append(Issue("heat-source-not-finite", "heat source has non-finite entries"))
    if not loads.ambient_temperature > 0:
        issues.append(Issue("ambient-temperature-not-positive", f"theta_amb = {loads.ambient_temperature}"))

    q = loads.neumann_values
    nb = len(mesh.boundary_edges)
    if q.shape != (nb,):
        issues.append(Issue("neumann-shape", f"expected ({nb},), got {q.shape}"))
    else:
        temp_nodes = set()
        for e, ((a, b), tag) in enumerate(zip(mesh.boundary_edges.tolist(), mesh.boundary_tags)):
            if tag == FLUX:
                if not np.isfinite(q[e]):
                    issues.append(Issue("flux-edge-missing-data", "flux edge without finite q_p", e))
            else:
                temp_nodes.update((a, b))
                if np.isfinite(q[e]):
                    issues.append(Issue("temperature-edge-has-flux", "temperature edge also carries q_p", e))
                for n in (a, b):
                    if n not in loads.dirichlet:
                        issues.append(Issue("temperature-edge-missing-data", f"node {n} has no prescribed temperature", e))
        for n, v in loads.dirichlet.items():
            if n not in temp_nodes:
                issues.append(Issue("dirichlet-off-temperature-boundary", "prescribed temperature on a node not on a temperature edge", n))
            if not v > 0:
                issues.append(Issue("dirichlet-not-positive", f"theta_p = {v} K", n))

    if problem.path is not None:
        if problem.flow is None:
            issues.append(Issue("flow-missing", "vasculature path given without flow data"))
        if problem.path.inlet not in mesh.boundary_nodes:
            issues.append(Issue("inlet-not-on-boundary", f"inlet node {problem.path.inlet}"))
        if problem.path.node_sequence.max() >= mesh.n_nodes:
            issues.append(Issue("path-out-of-range", "path node index out of range"))
    if problem.flow is not None:
        fl = problem.flow
        if not fl.mass_flow_rate >= 0:
            issues.append(Issue("mass-flow-negative", f"mdot = {fl.mass_flow_rate}"))
        if not fl.fluid_heat_capacity > 0:
            issues.append(Issue("fluid-heat-capacity-not-positive", f"c_f = {fl.fluid_heat_capacity}"))
        if not fl.inlet_temperature > 0:
            issues.append(Issue("inlet-temperature-not-positive", f"theta_inlet = {fl.inlet_temperature}"))
    return issues


def validate(problem):
    """Return ``problem`` unchanged if admissible, else raise ValidationError listing all issues."""
    issues = find_issues(problem)
    if issues:
        raise ValidationError(issues)
    return problem
