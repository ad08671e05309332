"""Linear and damped-Newton solves of the assembled system."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse.linalg as spla

from .assembly import LinearOperator
from .errors import (InvalidArgumentError, NoConvergenceError, NonphysicalIterateError,
                     SingularSystemError, SolverError)
from .model import validate


@dataclass(frozen=True)
class SolveSettings:
    linear_tolerance: float = 1e-10
    newton_tolerance: float = 1e-10
    max_newton_iters: int = 50
    max_halvings: int = 20

    def __post_init__(self):
        for name in ("linear_tolerance", "newton_tolerance"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise InvalidArgumentError(f"{name} must lie in (0, 1), got {v}")
        if self.max_newton_iters < 1 or self.max_halvings < 0:
            raise InvalidArgumentError("iteration caps must be >= 1 (halvings >= 0)")


@dataclass(frozen=True, eq=False)
class TemperatureField:
    values: np.ndarray
    mesh: object
    iterations: int = 0
    residual_norm: float = 0.0
    history: list = field(default_factory=list)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.mesh.n_nodes,):
            raise InvalidArgumentError(f"field has {v.shape} values for {self.mesh.n_nodes} nodes")
        if not np.all(np.isfinite(v)):
            raise SolverError("temperature field has non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return len(self.values)


def _nullspace_reason(problem, op):
    if len(op.constrained) == 0 and problem.material.convection_coefficient == 0 and op.eps_sigma == 0:
        return ("pure Neumann problem: no prescribed temperatures, no inlet constraint, h_T = 0 and no "
                "radiation, so temperature is determined only up to a constant")
    return None


def _factor_solve(matrix, rhs, reason=None):
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", spla.MatrixRankWarning)
            lu = spla.splu(matrix.tocsc())
            x = lu.solve(rhs)
    except (RuntimeError, spla.MatrixRankWarning) as exc:
        raise SingularSystemError(reason or f"singular system matrix ({exc})") from None
    if not np.all(np.isfinite(x)):
        raise SingularSystemError(reason or "singular system matrix (non-finite solution)")
    return x


def solve_linear(problem, settings=None):
    """Solve the convection-only model by sparse LU."""
    settings = settings or SolveSettings()
    validate(problem)
    op = LinearOperator(problem)
    if op.eps_sigma > 0:
        raise InvalidArgumentError("solve_linear needs radiation disabled; use solve_radiative")
    return _solve_linear_op(problem, op, settings)


def _solve_linear_op(problem, op, settings):
    reason = _nullspace_reason(problem, op)
    if reason:
        raise SingularSystemError(reason)
    system = op.linear_system()
    if len(system.free) == 0:
        return TemperatureField(system.expand(np.empty(0)), problem.mesh)
    x = _factor_solve(system.matrix, system.rhs)
    rel = np.linalg.norm(system.matrix @ x - system.rhs) / max(np.linalg.norm(system.rhs), 1e-300)
    if rel > settings.linear_tolerance:
        raise SolverError(f"linear solve residual {rel:.3e} exceeds tolerance {settings.linear_tolerance:.1e}")
    return TemperatureField(system.expand(x), problem.mesh, iterations=1, residual_norm=float(rel))


def initial_guess(problem, settings=None):
    """Convection-only solution (emissivity ignored), clamped at zero."""
    settings = settings or SolveSettings()
    lin = replace(problem, radiation_enabled=False)
    try:
        theta = _solve_linear_op(lin, LinearOperator(lin), settings).values
    except SingularSystemError:
        theta = np.full(problem.mesh.n_nodes, problem.loads.ambient_temperature)
    return np.maximum(theta, 0.0)


def solve_radiative(problem, settings=None, initial=None, callback=None):
    """Damped Newton iteration for the model with surface radiation.

    Steps are halved (up to ``settings.max_halvings`` times) until the iterate
    is non-negative and the residual does not grow. ``callback(k, theta)`` is
    called with every accepted iterate, starting from the initial guess.
    """
    settings = settings or SolveSettings()
    validate(problem)
    op = LinearOperator(problem)
    if op.eps_sigma == 0:
        field_ = _solve_linear_op(problem, op, settings)
        if callback:
            callback(0, field_.values)
        return field_
    reason = _nullspace_reason(problem, op)

    if initial is None:
        theta = initial_guess(problem, settings)
    else:
        theta = np.array(np.broadcast_to(np.asarray(initial, float), (problem.mesh.n_nodes,)))
        if np.any(theta < 0):
            raise InvalidArgumentError("initial guess has negative temperatures")
    theta[op.constrained] = op.constrained_values
    if callback:
        callback(0, theta.copy())

    history = []
    res_norm = np.linalg.norm(op.residual(theta)[op.free])
    for k in range(1, settings.max_newton_iters + 1):
        system = op.newton_system(theta)
        delta = np.zeros_like(theta)
        delta[system.free] = _factor_solve(system.matrix, system.rhs, reason)
        scale = max(np.abs(theta).max(), 1e-300)
        step = 1.0
        for _ in range(settings.max_halvings + 1):
            trial = theta + step * delta
            if trial.min() >= 0:
                trial_norm = np.linalg.norm(op.residual(trial)[op.free])
                small = step * np.abs(delta).max() <= settings.newton_tolerance * scale
                if trial_norm <= res_norm or small:
                    break
            step *= 0.5
        else:
            if trial.min() < 0:
                raise NonphysicalIterateError(
                    f"Newton iterate {k} stays negative (min {trial.min():.3e} K) after "
                    f"{settings.max_halvings} halvings; the iteration is heading for a non-physical root")
            raise NoConvergenceError(f"no residual decrease at Newton iteration {k}", history)
        update = step * np.abs(delta).max() / max(np.abs(trial).max(), 1e-300)
        theta, res_norm = trial, trial_norm
        history.append({"iteration": k, "step": step, "update": float(update), "residual": float(res_norm)})
        if callback:
            callback(k, theta.copy())
        if update <= settings.newton_tolerance:
            return TemperatureField(theta, problem.mesh, iterations=k, residual_norm=float(res_norm),
                                    history=history)
    raise NoConvergenceError(f"Newton did not converge in {settings.max_newton_iters} iterations", history)


def solve(problem, settings=None, initial=None):
    """Dispatch on the radiation flag."""
    if problem.radiation_enabled and problem.material.emissivity > 0:
        return solve_radiative(problem, settings, initial)
    return solve_linear(problem, settings)
