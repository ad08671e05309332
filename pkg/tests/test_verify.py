import numpy as np
import pytest
from numpy.testing import assert_array_equal

from problems import serpentine_waypoints, reference_material
from vascutherm.config import build_problem, bundled_config_text, parse_config
from vascutherm.errors import InvalidArgumentError
from vascutherm.mesh import TEMPERATURE, embed_vasculature, generate_rect_mesh
from vascutherm.model import ThermalProblem, VasculatureFlow, uniform_loads
from vascutherm.solver import TemperatureField, solve
from vascutherm.verify import (FAIL, NOT_APPLICABLE, PASS, bound_constants, check_comparison,
                               check_maximum_principle, check_minimum_principle, check_radiative_uniqueness,
                               check_special_case, check_stability, default_tolerance, field_checks)


def channel_problem(f=0.0, amb=300.0, t_in=300.0, n=16, radiation=False, mdot=2e-6, region=None):
    mesh = generate_rect_mesh(0.1, 0.1, n, n)
    path = embed_vasculature(mesh, [(0, 0.05), (0.1, 0.05)])
    loads = uniform_loads(mesh, f, amb)
    if region is not None:
        c = mesh.centroids
        inside = (c[:, 0] <= region) & (c[:, 1] <= region)
        loads = uniform_loads(mesh, 0.0, amb).__class__(np.where(inside, f, 0.0), amb, loads.neumann_values)
    return ThermalProblem(mesh, reference_material(), loads, path, VasculatureFlow(mdot, 4183.0, t_in), radiation)


def warm_inlet_coarse():
    text = bundled_config_text("warm_inlet").replace("nx = 100", "nx = 50").replace("ny = 100", "ny = 50")
    return build_problem(parse_config(text))


def test_constant_solution_has_no_violation():
    p = channel_problem()
    f = solve(p)
    for check in (check_minimum_principle, check_maximum_principle):
        r = check(f, p)
        assert r.status == PASS and r.violation <= 1e-10  # LU round-off only


def test_warm_inlet_minimum_principle():
    p = warm_inlet_coarse()
    f = solve(p)
    r = check_minimum_principle(f, p)
    assert r.status == PASS
    assert r.bound_value == 298.15
    assert f.values.min() >= 298.15 - r.tolerance
    assert check_special_case(f, p).status == NOT_APPLICABLE


def test_hypothesis_gates():
    p = channel_problem(f=-10.0)
    f = solve(p)
    assert check_minimum_principle(f, p).status == NOT_APPLICABLE
    assert check_maximum_principle(solve(channel_problem(f=10.0)), channel_problem(f=10.0)).status == NOT_APPLICABLE
    outward = p.with_loads(heat_source=np.zeros(p.mesh.n_triangles),
                           neumann_values=np.full(len(p.mesh.boundary_edges), 1.0))
    assert check_minimum_principle(solve(outward), outward).status == NOT_APPLICABLE
    assert "q_p" in check_minimum_principle(solve(outward), outward).detail


def test_mirrored_sink_problem_obeys_maximum_principle():
    p = channel_problem(f=-500.0, amb=298.15, t_in=298.15, radiation=True, mdot=11.564e-3 / 60, n=40, region=0.05)
    f = solve(p)
    r = check_maximum_principle(f, p)
    assert r.status == PASS
    assert f.values.max() <= 298.15 + r.tolerance


def test_located_failure_on_fabricated_field():
    p = channel_problem(f=100.0)
    v = np.array(solve(p).values)
    v[17] = 250.0
    r = check_minimum_principle(TemperatureField(v, p.mesh), p)
    assert r.status == FAIL
    assert r.worst_node == 17
    assert r.violation == pytest.approx(50.0)
    assert r.field_extreme == 250.0


def test_comparison_identical_problems():
    p = channel_problem(f=200.0)
    f = solve(p)
    r = check_comparison(f, f, p, p)
    assert r.status == PASS and r.violation == 0.0


def test_comparison_with_extra_heat_is_strict():
    p1 = channel_problem(f=200.0, radiation=True)
    p2 = p1.with_loads(heat_source=p1.loads.heat_source + 100.0)
    f1, f2 = solve(p1), solve(p2)
    assert check_comparison(f1, f2, p1, p2).status == PASS
    free = np.setdiff1d(np.arange(p1.mesh.n_nodes), [p1.path.inlet])
    assert np.all(f2.values[free] > f1.values[free])


def test_comparison_inverted_pair_not_applicable():
    p1 = channel_problem(f=200.0)
    p2 = p1.with_loads(heat_source=p1.loads.heat_source + 100.0)
    r = check_comparison(solve(p2), solve(p1), p2, p1)
    assert r.status == NOT_APPLICABLE
    assert "heat sources" in r.detail


def test_comparison_rejects_different_meshes():
    p1 = channel_problem(n=8)
    p2 = channel_problem(n=10)
    with pytest.raises(InvalidArgumentError):
        check_comparison(solve(p1), solve(p2), p1, p2)


def test_stability_zero_delta():
    p = channel_problem(f=300.0)
    r = check_stability(p, 0.0)
    assert r.status == PASS and r.field_extreme == 0.0


@pytest.mark.parametrize("which", ["inlet", "ambient"])
def test_stability_unit_shift(which):
    p = channel_problem(f=300.0, mdot=11.564e-3 / 60)
    r = check_stability(p, 1.0, perturbation={which: 1.0})
    assert r.status == PASS
    assert r.field_extreme <= 1.0 + 1e-6


def test_stability_rejects_oversized_perturbation():
    with pytest.raises(InvalidArgumentError):
        check_stability(channel_problem(), 0.5, perturbation={"ambient": 0.6})


def test_special_case_uniform_without_flow():
    p = channel_problem(f=500.0, amb=298.15, mdot=0.0, radiation=True)
    r = check_special_case(solve(p), p)
    assert r.status == PASS
    assert r.bound_value == pytest.approx(323.8, abs=0.05)


def test_special_case_reference_straight_channel():
    text = bundled_config_text("reference").replace("nx = 100", "nx = 50").replace("ny = 100", "ny = 50")
    p = build_problem(parse_config(text))
    r = check_special_case(solve(p), p)
    assert r.status == PASS


def test_special_case_reports_coarse_mesh_undershoot():
    # at segment Peclet ~167 a coarse serpentine undershoots the inlet temperature
    mesh = generate_rect_mesh(0.1, 0.1, 20, 20)
    p = ThermalProblem(mesh, reference_material(), uniform_loads(mesh, 500.0, 295.15),
                       embed_vasculature(mesh, serpentine_waypoints()),
                       VasculatureFlow(11.564e-3 / 60, 4183.0, 280.0), True)
    r = check_special_case(solve(p), p)
    assert r.status == FAIL
    assert r.worst_node in p.path.node_sequence.tolist()
    assert 0 < r.violation < 0.5


def test_special_case_gates():
    p = channel_problem(f=500.0, t_in=400.0)
    assert "exceeds the hot steady state" in check_special_case(solve(p), p).detail
    mesh = generate_rect_mesh(0.1, 0.1, 4, 4).with_tags({"left": TEMPERATURE})
    q = ThermalProblem(mesh, reference_material(), uniform_loads(mesh, 100.0, 300.0, dirichlet=300.0))
    assert check_special_case(solve(q), q).status == NOT_APPLICABLE


def test_radiative_uniqueness():
    p = channel_problem(f=500.0, amb=298.15, radiation=True, mdot=11.564e-3 / 60)
    r = check_radiative_uniqueness(p, [298.15, 398.15])
    assert r.status == PASS and r.violation <= 1e-8
    assert check_radiative_uniqueness(p, [298.15]).status == PASS
    with pytest.raises(InvalidArgumentError):
        check_radiative_uniqueness(p, [300.0, -1.0])
    assert check_radiative_uniqueness(p.replace(radiation_enabled=False), [1.0, 2.0]).status == NOT_APPLICABLE


def test_oracles_do_not_mutate():
    p = channel_problem(f=100.0, radiation=True)
    f = solve(p)
    before = (f.values.copy(), p.loads.heat_source.copy(), dict(p.loads.dirichlet))
    field_checks(f, p)
    check_stability(p, 1.0)
    assert_array_equal(f.values, before[0])
    assert_array_equal(p.loads.heat_source, before[1])
    assert p.loads.dirichlet == before[2]


def test_tolerance_and_constants():
    p = channel_problem(amb=300.0, t_in=310.0)
    assert_array_equal(bound_constants(p), [300.0, 310.0])
    assert default_tolerance([300.0, 310.0]) == pytest.approx(1e-5)
    assert default_tolerance([300.0, 300.0]) == pytest.approx(3e-7)


def test_reports_serialise():
    p = channel_problem(f=100.0)
    d = check_minimum_principle(solve(p), p).to_dict()
    assert set(d) == {"name", "status", "bound_value", "field_extreme", "violation", "worst_node",
                      "tolerance", "detail"}
