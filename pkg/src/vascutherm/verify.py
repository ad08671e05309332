"""Numerical audits of the minimum, maximum, comparison and stability
principles and of the constant-source special-case bounds.

Every check returns a :class:`PrincipleReport` whose status is ``"pass"``,
``"fail"`` (with the worst node) or ``"not-applicable"`` when the input
violates the hypotheses of the principle. Hypothesis-violating inputs are
never scored.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace
from typing import Optional

import numpy as np

from .analysis import mean_temperature, problem_hss
from .errors import InvalidArgumentError, SolverError
from .mesh import FLUX, TEMPERATURE
from .solver import solve, solve_radiative

PASS, FAIL, NOT_APPLICABLE = "pass", "fail", "not-applicable"


@dataclass(frozen=True)
class PrincipleReport:
    name: str
    status: str
    bound_value: Optional[float] = None
    field_extreme: Optional[float] = None
    violation: float = 0.0
    worst_node: Optional[int] = None
    tolerance: float = 0.0
    detail: str = ""

    @property
    def passed(self):
        return self.status == PASS

    @property
    def applicable(self):
        return self.status != NOT_APPLICABLE

    def to_dict(self):
        return asdict(self)


def _na(name, why):
    return PrincipleReport(name, NOT_APPLICABLE, detail=why)


def _scored(name, bound, extreme, violation, worst, tol, detail=""):
    status = PASS if violation <= tol else FAIL
    return PrincipleReport(name, status, float(bound), float(extreme), float(max(violation, 0.0)),
                           None if worst is None else int(worst), float(tol), detail)


def bound_constants(problem):
    """theta_amb, theta_inlet (when a flow is defined) and the prescribed temperatures."""
    vals = [problem.loads.ambient_temperature]
    if problem.path is not None and problem.flow is not None:
        vals.append(problem.flow.inlet_temperature)
    vals.extend(problem.loads.dirichlet.values())
    return np.array(vals, dtype=float)


def default_tolerance(constants, values=()):
    """1e-6 times the dynamic range of the bound constants and the field.

    A floor of 1e-9 relative to the largest magnitude keeps round-off from
    being scored when all constants coincide.
    """
    c = np.concatenate([np.ravel(constants), np.ravel(values)])
    spread = float(np.ptp(c)) if c.size else 0.0
    return max(1e-6 * spread, 1e-9 * float(np.abs(c).max(initial=1.0)))


def _flux_values(problem):
    mesh = problem.mesh
    return problem.loads.neumann_values[mesh.boundary_tags == FLUX]


def check_minimum_principle(field_, problem, tol=None):
    name = "minimum-principle"
    f = problem.loads.heat_source
    if np.any(f < 0):
        return _na(name, "heat source is negative somewhere (needs f >= 0)")
    if np.any(_flux_values(problem) > 0):
        return _na(name, "prescribed flux is outward somewhere (needs q_p <= 0)")
    consts = bound_constants(problem)
    phi = consts.min()
    theta = field_.values
    tol = default_tolerance(consts, theta) if tol is None else tol
    worst = int(np.argmin(theta))
    return _scored(name, phi, theta[worst], phi - theta[worst], worst, tol)


def check_maximum_principle(field_, problem, tol=None):
    name = "maximum-principle"
    f = problem.loads.heat_source
    if np.any(f > 0):
        return _na(name, "heat source is positive somewhere (needs f <= 0)")
    if np.any(_flux_values(problem) < 0):
        return _na(name, "prescribed flux is inward somewhere (needs q_p >= 0)")
    if problem.radiation_enabled and problem.material.emissivity > 0 and np.any(field_.values < 0):
        return _na(name, "radiative principles apply to non-negative fields only")
    consts = bound_constants(problem)
    phi = consts.max()
    theta = field_.values
    tol = default_tolerance(consts, theta) if tol is None else tol
    worst = int(np.argmax(theta))
    return _scored(name, phi, theta[worst], theta[worst] - phi, worst, tol)


def _same_mesh(a, b):
    return a is b or (a.nodes.shape == b.nodes.shape and a.triangles.shape == b.triangles.shape
                      and np.array_equal(a.nodes, b.nodes) and np.array_equal(a.triangles, b.triangles)
                      and np.array_equal(a.boundary_tags, b.boundary_tags))


def _same_material(a, b):
    return (a.thickness == b.thickness and a.convection_coefficient == b.convection_coefficient
            and a.emissivity == b.emissivity and a.stefan_boltzmann == b.stefan_boltzmann
            and np.array_equal(a.conductivity, b.conductivity))


def comparison_hypotheses(problem1, problem2):
    """Reason the ordered-input hypotheses fail, or None when they hold."""
    if problem1.loads.ambient_temperature != problem2.loads.ambient_temperature:
        return "ambient temperatures differ"
    if not _same_material(problem1.material, problem2.material):
        return "material parameters differ"
    if problem1.radiation_enabled != problem2.radiation_enabled:
        return "radiation flags differ"
    p1, p2 = problem1.path, problem2.path
    if (p1 is None) != (p2 is None) or (p1 is not None and not np.array_equal(p1.node_sequence, p2.node_sequence)):
        return "vasculature paths differ"
    if problem1.chi != problem2.chi:
        return "heat capacity rates differ"
    if problem1.flow is not None and problem1.flow.inlet_temperature > problem2.flow.inlet_temperature:
        return "inlet temperatures are not ordered"
    d1, d2 = problem1.loads.dirichlet, problem2.loads.dirichlet
    if set(d1) != set(d2):
        return "prescribed-temperature node sets differ"
    if any(d1[n] > d2[n] for n in d1):
        return "prescribed temperatures are not ordered"
    if np.any(problem1.loads.heat_source > problem2.loads.heat_source):
        return "heat sources are not ordered"
    if np.any(_flux_values(problem1) < _flux_values(problem2)):
        return "prescribed fluxes are not ordered (needs q_p1 >= q_p2)"
    return None


def check_comparison(field1, field2, problem1, problem2, tol=None):
    """Ordered inputs must give theta1 <= theta2 at every node."""
    name = "comparison-principle"
    if not _same_mesh(problem1.mesh, problem2.mesh):
        raise InvalidArgumentError("comparison needs both problems on the same mesh")
    why = comparison_hypotheses(problem1, problem2)
    if why:
        return _na(name, why)
    t1, t2 = field1.values, field2.values
    if problem1.radiation_enabled and (t1.min() < 0 or t2.min() < 0):
        return _na(name, "radiative comparison applies to non-negative fields only")
    diff = t1 - t2
    tol = default_tolerance(np.concatenate([bound_constants(problem1), bound_constants(problem2)]),
                            np.concatenate([t1, t2])) if tol is None else tol
    worst = int(np.argmax(diff))
    return _scored(name, 0.0, diff[worst], diff[worst], worst, tol, "bound is theta1 - theta2 <= 0")


def perturb(problem, d_ambient=0.0, d_inlet=0.0, d_dirichlet=0.0):
    """Copy of ``problem`` with shifted ambient, inlet and prescribed temperatures."""
    loads = problem.loads
    nodes = sorted(loads.dirichlet)
    dd = np.broadcast_to(np.asarray(d_dirichlet, float), (len(nodes),))
    new_loads = replace(loads, ambient_temperature=loads.ambient_temperature + d_ambient,
                        dirichlet={n: loads.dirichlet[n] + float(x) for n, x in zip(nodes, dd)})
    out = replace(problem, loads=new_loads)
    if problem.flow is not None:
        out = replace(out, flow=replace(problem.flow, inlet_temperature=problem.flow.inlet_temperature + d_inlet))
    return out


def check_stability(problem, delta, tol=1e-6, perturbation=None, rng=None, settings=None):
    """Perturb the prescribed temperatures by at most ``delta`` and bound the response.

    ``perturbation`` is a dict with optional keys ``ambient``, ``inlet`` and
    ``dirichlet``; when omitted each is drawn uniformly from [-delta, delta].
    Passes iff sup |theta* - theta| <= delta (1 + tol).
    """
    name = "stability"
    if delta < 0:
        raise InvalidArgumentError("delta must be non-negative")
    if perturbation is None:
        rng = np.random.default_rng(0) if rng is None else rng
        perturbation = {"ambient": rng.uniform(-delta, delta), "inlet": rng.uniform(-delta, delta),
                        "dirichlet": rng.uniform(-delta, delta, len(problem.loads.dirichlet))}
    da = float(perturbation.get("ambient", 0.0))
    di = float(perturbation.get("inlet", 0.0))
    dp = np.asarray(perturbation.get("dirichlet", 0.0), float)
    if max(abs(da), abs(di), float(np.abs(dp).max(initial=0.0))) > delta:
        raise InvalidArgumentError("perturbation exceeds delta")
    if np.any(problem.loads.heat_source != 0) and problem.radiation_enabled and problem.material.emissivity > 0:
        detail = "radiative model: stability is an empirical check only"
    else:
        detail = ""
    base = solve(problem, settings)
    other = solve(perturb(problem, da, di, dp), settings)
    diff = np.abs(other.values - base.values)
    worst = int(np.argmax(diff))
    return _scored(name, delta, diff[worst], diff[worst] - delta, worst, delta * tol, detail)


def special_case_hypotheses(problem):
    mesh = problem.mesh
    f = problem.loads.heat_source
    if np.ptp(f) > 1e-12 * max(abs(f).max(), 1.0):
        return "heat source is not constant"
    if np.any(mesh.boundary_tags == TEMPERATURE) or np.any(problem.loads.neumann_values != 0):
        return "boundary is not entirely adiabatic"
    if f[0] < 0:
        return "heat source is negative"
    hss = problem_hss(problem)
    if problem.flow is not None and problem.flow.inlet_temperature > hss:
        return f"inlet temperature exceeds the hot steady state ({hss:.6g} K)"
    return None


def check_special_case(field_, problem, tol=None):
    """Constant source, adiabatic edges, inlet below HSS: inlet <= theta <= HSS,
    inlet <= mean <= HSS and inlet <= outlet."""
    name = "special-case-bounds"
    why = special_case_hypotheses(problem)
    if why:
        return _na(name, why)
    hss = problem_hss(problem)
    theta = field_.values
    has_flow = problem.path is not None and problem.flow is not None
    low = problem.flow.inlet_temperature if has_flow else hss
    tol = max(1e-6 * (hss - low), 1e-9 * hss) if tol is None else tol

    mean = mean_temperature(field_)
    candidates = [
        (low - theta.min(), int(np.argmin(theta)), "theta >= inlet", theta.min()),
        (theta.max() - hss, int(np.argmax(theta)), "theta <= HSS", theta.max()),
        (low - mean, None, "mean >= inlet", mean),
        (mean - hss, None, "mean <= HSS", mean),
    ]
    if has_flow:
        out = theta[problem.path.outlet]
        candidates.append((low - out, problem.path.outlet, "outlet >= inlet", out))
    viol, worst, which, extreme = max(candidates, key=lambda c: c[0])
    bound = hss if "HSS" in which else low
    return _scored(name, bound, extreme, viol, worst, tol, f"tightest: {which}")


def check_radiative_uniqueness(problem, guesses, tol=1e-8, settings=None):
    """Newton from each non-negative initial guess must reach the same field."""
    name = "radiative-uniqueness"
    if not (problem.radiation_enabled and problem.material.emissivity > 0):
        return _na(name, "radiation is disabled")
    n = problem.mesh.n_nodes
    guesses = [np.broadcast_to(np.asarray(g, float), (n,)) for g in guesses]
    for i, g in enumerate(guesses):
        if np.any(g < 0):
            raise InvalidArgumentError(f"initial guess {i} has negative temperatures")
    fields = []
    for i, g in enumerate(guesses):
        try:
            fields.append(solve_radiative(problem, settings, initial=g).values)
        except SolverError as exc:
            raise type(exc)(f"guess {i}: {exc}") from exc
    if any(f.min() < 0 for f in fields):
        return _scored(name, 0.0, min(f.min() for f in fields), np.inf, None, tol, "negative converged field")
    if len(fields) < 2:
        return PrincipleReport(name, PASS, 0.0, 0.0, 0.0, None, tol, "single guess")
    dev = np.max([np.abs(f - fields[0]) for f in fields[1:]], axis=0)
    worst = int(np.argmax(dev))
    return _scored(name, 0.0, dev[worst], dev[worst], worst, tol, f"{len(fields)} guesses")


def field_checks(field_, problem):
    """Checks that need no extra solves, keyed by name."""
    reports = [check_minimum_principle(field_, problem), check_maximum_principle(field_, problem),
               check_special_case(field_, problem)]
    return {r.name: r for r in reports}
