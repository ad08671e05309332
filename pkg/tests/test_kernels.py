import os
import subprocess
import sys

import numpy as np
import pytest
from numpy.testing import assert_allclose

from vascutherm import kernels
from vascutherm.mesh import generate_rect_mesh

needs_numba = pytest.mark.skipif(not kernels.HAS_NUMBA, reason="numba not installed")


@pytest.fixture(scope="module")
def jittered():
    mesh = generate_rect_mesh(0.1, 0.07, 13, 9)
    rng = np.random.default_rng(3)
    nodes = mesh.nodes + rng.uniform(-2e-3, 2e-3, mesh.nodes.shape)
    K = rng.uniform(0.5, 1.5, (mesh.n_triangles, 1, 1)) * np.array([[1.0, 0.2], [0.2, 0.7]])
    theta = rng.uniform(250.0, 400.0, mesh.n_nodes)
    return nodes, mesh.triangles, K, theta


@needs_numba
def test_stiffness_paths_agree(jittered):
    nodes, tris, K, _ = jittered
    a = kernels.stiffness_batch(nodes, tris, K, 4.31e-3, use_numba=False)
    b = kernels.stiffness_batch(nodes, tris, K, 4.31e-3, use_numba=True)
    assert_allclose(b, a, rtol=1e-13, atol=1e-13 * np.abs(a).max())


@needs_numba
def test_radiation_paths_agree(jittered):
    nodes, tris, _, theta = jittered
    area, _ = kernels.element_geometry(nodes, tris)
    r1, j1 = kernels.radiation_batch(tris, area, theta, 0.95 * 5.67e-8, 298.15, use_numba=False)
    r2, j2 = kernels.radiation_batch(tris, area, theta, 0.95 * 5.67e-8, 298.15, use_numba=True)
    assert_allclose(r2, r1, rtol=1e-12, atol=1e-14 * np.abs(r1).max())
    assert_allclose(j2, j1, rtol=1e-12, atol=1e-14 * np.abs(j1).max())


def test_geometry_gradients_sum_to_zero(jittered):
    nodes, tris, _, _ = jittered
    area, g = kernels.element_geometry(nodes, tris)
    assert np.all(area > 0)
    assert_allclose(g.sum(axis=1), 0.0, atol=1e-9)
    # N_a(x_b) - N_a(x_0) = delta_ab - delta_a0
    p = nodes[tris]
    expected = np.eye(3) - np.outer([1.0, 0.0, 0.0], np.ones(3))
    assert_allclose(np.einsum("tai,tbi->tab", g, p - p[:, :1]), np.broadcast_to(expected, g.shape[:1] + (3, 3)),
                    atol=1e-12)


def test_convection_batch_pattern():
    blocks = kernels.convection_batch([0.5, 2.0], 12.0)
    assert_allclose(blocks[0], 0.5 * np.array([[2, 1, 1], [1, 2, 1], [1, 1, 2]]))
    assert_allclose(blocks[1].sum(), 12.0 * 2.0)


@pytest.mark.parametrize("flag,expected", [("1", "False"), ("0", str(kernels.HAS_NUMBA))])
def test_environment_flag_selects_path(flag, expected):
    env = dict(os.environ, VASCUTHERM_DISABLE_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", "from vascutherm import kernels; print(kernels.USE_NUMBA)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == expected
