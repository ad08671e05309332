"""Scalar post-processing: hot steady state, mean and outlet temperatures,
efficiency measures and the global energy-balance audit."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .assembly import LinearOperator, segment_peclet
from .errors import InvalidArgumentError, WrongRegimeError
from .mesh import FLUX


def hss_temperature(f0, h, emissivity, sigma, theta_amb):
    """Hot steady-state temperature.

    Unique root >= theta_amb of h (T - T_amb) + eps sigma (T^4 - T_amb^4) = f0,
    found by Newton's method safeguarded with bisection.
    """
    if f0 < 0:
        raise InvalidArgumentError(f"hot steady state needs a non-negative source, got f0 = {f0}")
    es = emissivity * sigma
    if not h + es > 0:
        raise InvalidArgumentError("hot steady state needs h_T > 0 or eps * sigma > 0")
    if f0 == 0:
        return float(theta_amb)

    def g(t):
        return h * (t - theta_amb) + es * (t**4 - theta_amb**4) - f0

    def dg(t):
        return h + 4.0 * es * t**3

    lo = float(theta_amb)
    hi = lo + f0 / max(h, 4.0 * es * lo**3)
    while g(hi) < 0:
        if hi == lo:  # root is within rounding of theta_amb
            return lo
        hi = lo + 2.0 * (hi - lo)
    t = hi
    for _ in range(200):
        gt = g(t)
        if gt > 0:
            hi = t
        else:
            lo = t
        step = gt / dg(t)
        new = t - step
        if not lo <= new <= hi:
            new = 0.5 * (lo + hi)
        if abs(new - t) <= 4e-16 * abs(t) or hi - lo <= 4e-16 * hi:
            t = new
            break
        t = new
    if abs(g(t)) > 1e-9 * max(f0, 1.0):
        raise ArithmeticError(f"hot steady state residual {g(t):.3e} too large")
    return float(t)


def problem_hss(problem):
    """HSS of a problem using its domain-averaged source (emissivity honours the radiation flag)."""
    mat = problem.material
    return hss_temperature(problem.mean_heat_source(), mat.convection_coefficient,
                           problem.effective_emissivity, mat.stefan_boltzmann,
                           problem.loads.ambient_temperature)


def mean_temperature(field_):
    """Area average of a P1 field (exact: per-triangle mean of nodal values)."""
    mesh = field_.mesh
    area = mesh.areas
    return float(np.dot(area, field_.values[mesh.triangles].mean(axis=1)) / area.sum())


def outlet_temperature(field_, path):
    return float(field_.values[path.outlet])


def coefficient_of_performance(theta_outlet, theta_inlet, chi, total_heat):
    """Heat taken up by the coolant over heat supplied. Not bounded to [0, 1]."""
    if not total_heat > 0:
        raise InvalidArgumentError(f"total supplied heat must be positive, got {total_heat}")
    return chi * (theta_outlet - theta_inlet) / total_heat


def cooling_efficiency(theta_hss, theta_mean, theta_inlet, theta_amb):
    if theta_inlet > theta_hss:
        raise WrongRegimeError(f"inlet {theta_inlet} K above HSS {theta_hss} K is active heating")
    low = min(theta_inlet, theta_amb)
    if not theta_hss > low:
        raise WrongRegimeError(f"HSS {theta_hss} K does not exceed min(inlet, ambient) = {low} K")
    return (theta_hss - theta_mean) / (theta_hss - low)


def max_cooling_efficiency(theta_hss, theta_inlet, theta_amb):
    if theta_inlet > theta_hss:
        raise WrongRegimeError(f"inlet {theta_inlet} K above HSS {theta_hss} K is active heating")
    if theta_inlet <= theta_amb:
        return 1.0
    if theta_hss == theta_amb:
        raise WrongRegimeError("HSS equals ambient with inlet above ambient: efficiency undefined")
    return (theta_hss - theta_inlet) / (theta_hss - theta_amb)


def heating_efficiency(theta_hss, theta_mean, theta_inlet, theta_amb):
    if theta_inlet < theta_hss:
        raise WrongRegimeError(f"inlet {theta_inlet} K below HSS {theta_hss} K is active cooling")
    high = max(theta_inlet, theta_amb)
    if not high > theta_hss:
        raise WrongRegimeError(f"max(inlet, ambient) = {high} K does not exceed HSS {theta_hss} K")
    return (theta_mean - theta_hss) / (high - theta_hss)


@dataclass(frozen=True)
class EnergyBalance:
    """Global heat budget in W. Positive constraint heat enters the plate."""

    heat_supplied: float
    boundary_outflow: float
    convective_loss: float
    radiative_loss: float
    coolant_uptake: float
    inlet_constraint_heat: float
    boundary_constraint_heat: float
    residual: float


def energy_balance(field_, problem):
    """Audit the integral identity

        chi (theta_out - theta_in) = int f - int q_p - int h_T (theta - theta_amb)
                                     - int eps sigma (theta^4 - theta_amb^4) + Q_c

    where ``Q_c`` is the heat held by the prescribed-temperature nodes (the
    Galerkin reactions at the inlet and on temperature edges). Integrals use
    the assembly quadrature. The residual is relative to the largest term.
    """
    mesh, mat, loads = problem.mesh, problem.material, problem.loads
    theta = field_.values
    area = mesh.areas
    tri_mean = theta[mesh.triangles].mean(axis=1)

    supplied = float(np.dot(loads.heat_source, area))
    conv = float(mat.convection_coefficient * np.dot(area, tri_mean - loads.ambient_temperature))
    es = problem.effective_emissivity * mat.stefan_boltzmann
    rad = 0.0
    if es > 0:
        res, _ = kernels.radiation_batch(mesh.triangles, area, theta, es, loads.ambient_temperature)
        rad = float(res.sum())
    is_flux = mesh.boundary_tags == FLUX
    e = mesh.boundary_edges[is_flux]
    d = mesh.nodes[e[:, 1]] - mesh.nodes[e[:, 0]]
    outflow = float(np.dot(np.hypot(d[:, 0], d[:, 1]), loads.neumann_values[is_flux]))

    uptake = 0.0
    if problem.chi > 0:
        uptake = problem.chi * float(theta[problem.path.outlet] - theta[problem.path.inlet])

    op = LinearOperator(problem)
    reactions = op.residual(theta)
    inlet_q = 0.0
    boundary_q = 0.0
    for n in op.constrained.tolist():
        if problem.has_inlet_constraint and n == problem.path.inlet:
            inlet_q += float(reactions[n])
        else:
            boundary_q += float(reactions[n])

    imbalance = uptake - (supplied - outflow - conv - rad + inlet_q + boundary_q)
    scale = max(abs(supplied), abs(uptake), abs(outflow), abs(conv), abs(rad), abs(inlet_q), abs(boundary_q), 1e-12)
    return EnergyBalance(supplied, outflow, conv, rad, uptake, inlet_q, boundary_q, abs(imbalance) / scale)


def energy_balance_residual(field_, problem):
    return energy_balance(field_, problem).residual


@dataclass
class MetricsReport:
    """Scalar outputs of one solve. Temperatures in K, heat in W.

    Exactly one of ``cooling_efficiency`` / ``heating_efficiency`` is set
    when the regime is well defined. ``efficiency_advisory`` is true when the
    source is not uniform, where those definitions do not strictly apply.
    """

    theta_mean: float
    theta_hss: Optional[float]
    theta_ambient: float
    theta_inlet: Optional[float] = None
    theta_outlet: Optional[float] = None
    heat_capacity_rate: float = 0.0
    total_heat: float = 0.0
    coefficient_of_performance: Optional[float] = None
    regime: Optional[str] = None
    cooling_efficiency: Optional[float] = None
    max_cooling_efficiency: Optional[float] = None
    heating_efficiency: Optional[float] = None
    efficiency_advisory: bool = False
    theta_min: float = 0.0
    theta_max: float = 0.0
    energy_balance_residual: float = 0.0
    inlet_constraint_heat: float = 0.0
    segment_peclet: float = 0.0
    iterations: int = 0
    verification: dict = field(default_factory=dict)

    def to_dict(self):
        d = asdict(self)
        return {k: (float(v) if isinstance(v, (np.floating, np.integer)) else v) for k, v in d.items()}


def compute_metrics(field_, problem):
    theta_amb = problem.loads.ambient_temperature
    f = problem.loads.heat_source
    try:
        hss = problem_hss(problem)
    except InvalidArgumentError:
        hss = None
    bal = energy_balance(field_, problem)
    mean = mean_temperature(field_)
    rep = MetricsReport(
        theta_mean=mean, theta_hss=hss, theta_ambient=theta_amb,
        heat_capacity_rate=problem.chi, total_heat=bal.heat_supplied,
        theta_min=float(field_.values.min()), theta_max=float(field_.values.max()),
        energy_balance_residual=bal.residual, inlet_constraint_heat=bal.inlet_constraint_heat,
        segment_peclet=segment_peclet(problem), iterations=field_.iterations,
        efficiency_advisory=bool(f.size and np.ptp(f) > 1e-12 * max(np.abs(f).max(), 1.0)),
    )
    if problem.path is not None and problem.flow is not None:
        t_in = float(problem.flow.inlet_temperature)
        rep.theta_inlet = t_in
        rep.theta_outlet = outlet_temperature(field_, problem.path)
        if bal.heat_supplied > 0:
            rep.coefficient_of_performance = coefficient_of_performance(
                rep.theta_outlet, t_in, problem.chi, bal.heat_supplied)
        if hss is not None:
            try:
                if t_in <= hss:
                    rep.regime = "cooling"
                    rep.max_cooling_efficiency = max_cooling_efficiency(hss, t_in, theta_amb)
                    rep.cooling_efficiency = cooling_efficiency(hss, mean, t_in, theta_amb)
                else:
                    rep.regime = "heating"
                    rep.heating_efficiency = heating_efficiency(hss, mean, t_in, theta_amb)
            except WrongRegimeError:
                pass
    return rep
