"""Random problem generators shared by the property and acceptance tests."""

import itertools

import numpy as np

from vascutherm.assembly import segment_peclet
from vascutherm.mesh import SIDES, TEMPERATURE, embed_vasculature, generate_rect_mesh, path_from_nodes
from vascutherm.model import MaterialParams, SourcesAndBCs, ThermalProblem, VasculatureFlow

REFERENCE = dict(thickness=4.31e-3, conductivity=0.5593, convection_coefficient=13.0, emissivity=0.95)


def reference_material(**changes):
    return MaterialParams(**{**REFERENCE, **changes})


def serpentine_waypoints(length=0.1, height=0.1, passes=5):
    """Serpentine entering at the left edge and leaving at the right edge."""
    ys = np.linspace(0.1, 0.9, passes) * height
    xs = (0.1 * length, 0.9 * length)
    pts = [(0.0, ys[0])]
    for i, y in enumerate(ys):
        if i > 0:
            pts.append((pts[-1][0], y))
        end = xs[1] if i % 2 == 0 else xs[0]
        pts.append((length if i == passes - 1 else end, y))
    return pts


def reaction_number(problem):
    """Film-to-conduction ratio h_T dx^2 / (d k_min) at the coarsest cell spacing.

    Large values mean the consistent convection matrix dominates the
    stiffness and the discrete operator stops being monotone.
    """
    nodes = problem.mesh.nodes
    dx = max((nodes[:, i].max() - nodes[:, i].min()) / (len(np.unique(nodes[:, i])) - 1) for i in (0, 1))
    K = np.asarray(problem.material.conductivity, float)
    k_min = np.linalg.eigvalsh(K if K.ndim == 2 else K[0]).min()
    return problem.material.convection_coefficient * dx**2 / (problem.material.thickness * k_min)


def random_problem(rng, sign=1, radiation=None, max_peclet=2.0):
    """Random admissible problem.

    ``sign=1`` draws f >= 0 and q_p <= 0 (minimum-principle hypotheses),
    ``sign=-1`` the mirror image. The heat capacity rate keeps the segment
    Peclet number below ``max_peclet``.
    """
    length, height = rng.uniform(0.05, 0.2, 2)
    nx, ny = rng.integers(4, 16, 2)
    mesh = generate_rect_mesh(length, height, int(nx), int(ny))
    temp_sides = [s for s in SIDES if rng.random() < 0.3]
    mesh = mesh.with_tags({s: TEMPERATURE for s in temp_sides})

    k = rng.uniform(0.2, 5.0)
    d = rng.uniform(1e-3, 1e-2)
    h = rng.uniform(0.0, 30.0)
    if sign < 0:
        # sinks need enough film cooling to keep the field well above 0 K
        h = 5.0 + h * 25.0 / 30.0
    if radiation is None:
        radiation = bool(rng.random() < 0.5)
    mat = MaterialParams(d, k, h, rng.uniform(0.0, 1.0) if radiation else 0.0)

    amb = rng.uniform(250.0, 350.0)
    f_max = 1000.0 if sign > 0 else min(1000.0, 0.5 * h * amb)
    f = sign * rng.uniform(0.0, f_max, mesh.n_triangles) * (rng.random(mesh.n_triangles) < 0.6)
    is_temp = mesh.boundary_tags == TEMPERATURE
    q = -sign * rng.uniform(0.0, 5.0, len(is_temp)) * (rng.random(len(is_temp)) < 0.5)
    q = np.where(is_temp, np.nan, q)
    nodes = np.unique(mesh.boundary_edges[is_temp])
    dirichlet = {int(n): float(v) for n, v in zip(nodes, rng.uniform(250.0, 350.0, len(nodes)))}
    if not dirichlet and h == 0:
        mat = MaterialParams(d, k, 1.0, mat.emissivity)

    path = flow = None
    if rng.random() < 0.8:
        j0, j1 = rng.integers(1, ny, 2)
        i1 = rng.integers(1, nx)
        x1, y0, y1 = i1 * length / nx, j0 * height / ny, j1 * height / ny
        pts = [(0.0, y0), (x1, y0), (x1, y1), (length, y1)]
        if j0 == j1:
            pts = [pts[0], pts[-1]]
        path = embed_vasculature(mesh, pts)
        chi = rng.uniform(0.0, max_peclet) * 2.0 * d * k * 0.999
        inlet = path.inlet
        t_in = dirichlet.get(inlet, rng.uniform(250.0, 350.0))
        flow = VasculatureFlow(chi / 4000.0, 4000.0, t_in)
    loads = SourcesAndBCs(f, amb, q, dirichlet)
    p = ThermalProblem(mesh, mat, loads, path, flow, radiation)
    assert segment_peclet(p) < max_peclet
    return p


SMALL_SHAPES = [(nx, ny) for nx, ny in itertools.product(range(1, 25), repeat=2) if (nx + 1) * (ny + 1) <= 50]


def oracle_problem(nx, ny, seed, jitter=True, radiation=False):
    rng = np.random.default_rng(seed)
    length, height = rng.uniform(0.05, 0.2, 2)
    mesh = generate_rect_mesh(length, height, nx, ny)
    if jitter:
        # move interior nodes off the grid so triangles are general
        nodes = np.array(mesh.nodes)
        hx, hy = length / nx, height / ny
        interior = ~np.isin(np.arange(mesh.n_nodes), mesh.boundary_nodes)
        nodes[interior] += rng.uniform(-0.2, 0.2, (interior.sum(), 2)) * [hx, hy]
        mesh = type(mesh)(nodes, mesh.triangles, mesh.boundary_edges, mesh.boundary_tags, mesh.boundary_sides)
    sides = [s for s in ("bottom", "right", "top", "left") if rng.random() < 0.3 and s != "left"]
    mesh = mesh.with_tags({s: TEMPERATURE for s in sides})

    a, c = rng.uniform(0.2, 2.0, 2)
    b = rng.uniform(-0.5, 0.5) * np.sqrt(a * c)
    K = np.array([[a, b], [b, c]])
    if rng.random() < 0.5:
        K = np.broadcast_to(K, (mesh.n_triangles, 2, 2)) * rng.uniform(0.5, 1.5, (mesh.n_triangles, 1, 1))
    mat = MaterialParams(rng.uniform(1e-3, 1e-2), K, rng.uniform(0.5, 30.0), rng.uniform(0, 1) if radiation else 0.0)

    is_temp = mesh.boundary_tags == TEMPERATURE
    q = np.where(is_temp, np.nan, rng.uniform(-5, 5, len(is_temp)))
    nodes_t = np.unique(mesh.boundary_edges[is_temp]).tolist()
    dirichlet = {n: rng.uniform(280, 320) for n in nodes_t}
    loads = SourcesAndBCs(rng.uniform(0, 800, mesh.n_triangles), rng.uniform(280, 320), q, dirichlet)

    path = flow = None
    if ny >= 2 and nx >= 1:
        j = int(rng.integers(1, ny))
        seq = [j * (nx + 1) + i for i in range(nx + 1)]
        path = path_from_nodes(mesh, seq)
        flow = VasculatureFlow(rng.uniform(0, 2e-5), 4183.0, rng.uniform(280, 320))
    return ThermalProblem(mesh, mat, loads, path, flow, radiation)
