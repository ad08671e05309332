"""Structured triangular meshes of rectangles and embedded vasculature paths."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .errors import InletNotOnBoundaryError, InvalidArgumentError, SnapFailureError

FLUX = "flux"
TEMPERATURE = "temperature"
SIDES = ("bottom", "right", "top", "left")


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Mesh:
    """Conforming P1 triangulation.

    ``boundary_edges`` is ordered as a closed counter-clockwise loop for
    generated meshes. ``boundary_sides`` names the rectangle side of each
    boundary edge (empty strings for hand-built meshes).
    """

    nodes: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    boundary_tags: np.ndarray
    boundary_sides: np.ndarray = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "nodes", _frozen(self.nodes, float).reshape(-1, 2))
        object.__setattr__(self, "triangles", _frozen(self.triangles, np.int64).reshape(-1, 3))
        object.__setattr__(self, "boundary_edges", _frozen(self.boundary_edges, np.int64).reshape(-1, 2))
        nb = len(self.boundary_edges)
        object.__setattr__(self, "boundary_tags", _frozen(self.boundary_tags, object).reshape(nb))
        sides = self.boundary_sides if self.boundary_sides is not None else [""] * nb
        object.__setattr__(self, "boundary_sides", _frozen(sides, object).reshape(nb))

    @property
    def n_nodes(self):
        return len(self.nodes)

    @property
    def n_triangles(self):
        return len(self.triangles)

    @cached_property
    def signed_areas(self):
        p = self.nodes[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    @property
    def areas(self):
        return np.abs(self.signed_areas)

    @cached_property
    def centroids(self):
        return self.nodes[self.triangles].mean(axis=1)

    @cached_property
    def edge_set(self):
        t = self.triangles
        e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        e.sort(axis=1)
        return frozenset(map(tuple, e.tolist()))

    @cached_property
    def boundary_nodes(self):
        return frozenset(self.boundary_edges.ravel().tolist())

    @property
    def diagonal(self):
        span = self.nodes.max(axis=0) - self.nodes.min(axis=0)
        return float(np.hypot(*span))

    def with_tags(self, tags):
        """Return a copy with boundary tags replaced.

        ``tags`` maps a side name to ``"flux"`` or ``"temperature"``, or is a
        full per-edge sequence.
        """
        if isinstance(tags, dict):
            new = np.array(self.boundary_tags, dtype=object)
            for side, tag in tags.items():
                if side not in SIDES:
                    raise InvalidArgumentError(f"unknown side {side!r}")
                new[self.boundary_sides == side] = tag
        else:
            new = np.asarray(tags, dtype=object)
        for tag in set(new.tolist()):
            if tag not in (FLUX, TEMPERATURE):
                raise InvalidArgumentError(f"unknown boundary tag {tag!r}")
        return replace(self, boundary_tags=new)

    def check(self):
        """List violated mesh invariants (empty if the mesh is sound)."""
        issues = []
        n = self.n_nodes
        if self.triangles.size and (self.triangles.min() < 0 or self.triangles.max() >= n):
            issues.append("triangle node index out of range")
            return issues
        if self.boundary_edges.size and (self.boundary_edges.min() < 0 or self.boundary_edges.max() >= n):
            issues.append("boundary edge node index out of range")
            return issues
        bad = np.flatnonzero(self.signed_areas <= 0)
        if bad.size:
            issues.append(f"non-positive signed area in triangles {bad[:5].tolist()}")

        count = {}
        t = self.triangles
        for e in np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]]).tolist():
            k = (min(e), max(e))
            count[k] = count.get(k, 0) + 1
        for a, b in self.boundary_edges.tolist():
            if count.get((min(a, b), max(a, b)), 0) != 1:
                issues.append(f"boundary edge ({a}, {b}) is not in exactly one triangle")

        # closed loop: every boundary node has degree 2 and the edges form one cycle
        adj = {}
        for a, b in self.boundary_edges.tolist():
            adj.setdefault(a, []).append(b)
            adj.setdefault(b, []).append(a)
        if any(len(v) != 2 for v in adj.values()):
            issues.append("boundary edges do not form a closed loop")
        elif adj:
            start = next(iter(adj))
            seen, prev, cur = {start}, None, start
            while True:
                nxt = adj[cur][0] if adj[cur][0] != prev else adj[cur][1]
                if nxt == start:
                    break
                seen.add(nxt)
                prev, cur = cur, nxt
            if len(seen) != len(adj):
                issues.append("boundary edges form more than one loop")
        return issues


def generate_rect_mesh(length, height, nx, ny):
    """Structured mesh of ``[0, length] x [0, height]``.

    Each cell is split along its lower-left to upper-right diagonal. All
    boundary edges start tagged ``"flux"``.
    """
    if not (length > 0 and height > 0):
        raise InvalidArgumentError(f"dimensions must be positive, got {length} x {height}")
    if int(nx) != nx or int(ny) != ny or nx < 1 or ny < 1:
        raise InvalidArgumentError(f"cell counts must be integers >= 1, got {nx} x {ny}")
    nx, ny = int(nx), int(ny)

    xs = np.arange(nx + 1) * (length / nx)
    ys = np.arange(ny + 1) * (height / ny)
    xs[-1], ys[-1] = length, height
    X, Y = np.meshgrid(xs, ys)
    nodes = np.column_stack([X.ravel(), Y.ravel()])

    def nid(i, j):
        return j * (nx + 1) + i

    i, j = np.meshgrid(np.arange(nx), np.arange(ny))
    i, j = i.ravel(), j.ravel()
    ll, lr, ur, ul = nid(i, j), nid(i + 1, j), nid(i + 1, j + 1), nid(i, j + 1)
    tris = np.empty((2 * len(ll), 3), dtype=np.int64)
    tris[0::2] = np.column_stack([ll, lr, ur])
    tris[1::2] = np.column_stack([ll, ur, ul])

    edges, sides = [], []
    for k in range(nx):
        edges.append((nid(k, 0), nid(k + 1, 0)))
        sides.append("bottom")
    for k in range(ny):
        edges.append((nid(nx, k), nid(nx, k + 1)))
        sides.append("right")
    for k in range(nx, 0, -1):
        edges.append((nid(k, ny), nid(k - 1, ny)))
        sides.append("top")
    for k in range(ny, 0, -1):
        edges.append((nid(0, k), nid(0, k - 1)))
        sides.append("left")

    return Mesh(nodes, tris, edges, [FLUX] * len(edges), sides)


@dataclass(frozen=True, eq=False)
class VasculaturePath:
    """Ordered node path along mesh edges; index 0 is the inlet."""

    node_sequence: np.ndarray
    points: np.ndarray
    segment_lengths: np.ndarray
    cumulative_arclength: np.ndarray
    unit_tangents: np.ndarray

    @property
    def inlet(self):
        return int(self.node_sequence[0])

    @property
    def outlet(self):
        return int(self.node_sequence[-1])

    @property
    def n_segments(self):
        return len(self.segment_lengths)

    @property
    def total_length(self):
        return float(self.cumulative_arclength[-1])

    @property
    def segments(self):
        return np.column_stack([self.node_sequence[:-1], self.node_sequence[1:]])


def path_from_nodes(mesh, node_sequence):
    """Build a path from an explicit node sequence, checking every invariant."""
    seq = np.asarray(node_sequence, dtype=np.int64)
    if seq.ndim != 1 or len(seq) < 2:
        raise InvalidArgumentError("a vasculature path needs at least two nodes")
    if seq.min() < 0 or seq.max() >= mesh.n_nodes:
        raise InvalidArgumentError("path node index out of range")
    if np.any(seq[1:] == seq[:-1]):
        raise InvalidArgumentError("path has duplicate consecutive nodes (zero-length segment)")
    if len(set(seq.tolist())) != len(seq):
        raise InvalidArgumentError("path revisits a node; only simple paths are supported")
    edges = mesh.edge_set
    for a, b in zip(seq[:-1].tolist(), seq[1:].tolist()):
        if (min(a, b), max(a, b)) not in edges:
            raise InvalidArgumentError(f"path segment ({a}, {b}) is not a mesh edge")
    bnodes = mesh.boundary_nodes
    if seq[0] not in bnodes:
        raise InletNotOnBoundaryError(f"inlet node {seq[0]} at {mesh.nodes[seq[0]].tolist()} is interior")
    if seq[-1] not in bnodes:
        raise InletNotOnBoundaryError(f"outlet node {seq[-1]} at {mesh.nodes[seq[-1]].tolist()} is interior")

    pts = mesh.nodes[seq]
    d = np.diff(pts, axis=0)
    lengths = np.hypot(d[:, 0], d[:, 1])
    tangents = d / lengths[:, None]
    cum = np.concatenate([[0.0], np.cumsum(lengths)])
    return VasculaturePath(_frozen(seq, np.int64), _frozen(pts, float), _frozen(lengths, float),
                           _frozen(cum, float), _frozen(tangents, float))


def _snap(mesh, point, tol):
    d = np.hypot(*(mesh.nodes - np.asarray(point, float)).T)
    k = int(np.argmin(d))
    if d[k] > tol:
        raise SnapFailureError(f"waypoint {tuple(point)} is {d[k]:.3e} m from the nearest node (tolerance {tol:.3e})")
    return k


def _straight_route(mesh, a, b, tol):
    pa, pb = mesh.nodes[a], mesh.nodes[b]
    seg = pb - pa
    L = np.hypot(*seg)
    rel = mesh.nodes - pa
    t = rel @ seg / L**2
    dist = np.abs(rel[:, 0] * seg[1] - rel[:, 1] * seg[0]) / L
    on = np.flatnonzero((dist <= tol) & (t >= -tol / L) & (t <= 1 + tol / L))
    route = on[np.argsort(t[on], kind="stable")]
    edges = mesh.edge_set
    for u, v in zip(route[:-1].tolist(), route[1:].tolist()):
        if (min(u, v), max(u, v)) not in edges:
            raise SnapFailureError(f"no along-edge route between nodes {a} and {b}")
    return route.tolist()


def embed_vasculature(mesh, waypoints):
    """Snap waypoints to nodes and join them along mesh edges.

    Consecutive waypoints that are not axis-aligned are joined by an L-shaped
    staircase: horizontal leg from the lexicographically smaller point, then
    vertical. The rule is symmetric, so reversing the waypoints reverses the
    path exactly.
    """
    wps = np.asarray(waypoints, dtype=float)
    if wps.ndim != 2 or wps.shape[1] != 2 or len(wps) < 2:
        raise InvalidArgumentError("need at least two 2D waypoints")
    tol = 1e-9 * mesh.diagonal
    snapped = [_snap(mesh, p, tol) for p in wps]
    for k, (a, b) in enumerate(zip(snapped[:-1], snapped[1:])):
        if a == b:
            raise InvalidArgumentError(f"waypoints {k} and {k + 1} snap to the same node {a}")

    seq = [snapped[0]]
    for a, b in zip(snapped[:-1], snapped[1:]):
        pa, pb = mesh.nodes[a], mesh.nodes[b]
        if abs(pa[0] - pb[0]) <= tol or abs(pa[1] - pb[1]) <= tol:
            legs = _straight_route(mesh, a, b, tol)
        else:
            lo, hi = (pa, pb) if tuple(pa) < tuple(pb) else (pb, pa)
            corner = _snap(mesh, (hi[0], lo[1]), tol)
            lo_id = a if lo is pa else b
            hi_id = b if lo is pa else a
            legs = _straight_route(mesh, lo_id, corner, tol) + _straight_route(mesh, corner, hi_id, tol)[1:]
            if lo is not pa:
                legs = legs[::-1]
        seq.extend(legs[1:])
    return path_from_nodes(mesh, seq)


def path_tangent_at(path, segment):
    """Unit tangent of segment ``segment`` (from node i to node i+1)."""
    if not 0 <= segment < path.n_segments:
        raise IndexError(f"segment index {segment} out of range [0, {path.n_segments})")
    return path.unit_tangents[segment].copy()
