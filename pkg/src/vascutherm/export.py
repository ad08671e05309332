"""Field and metrics writers. Output is deterministic: floats use ``repr``."""

from __future__ import annotations

import csv
import json
import math

import numpy as np


def write_field_csv(path, field_):
    mesh = field_.mesh
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node", "x", "y", "theta"])
        for i, ((x, y), t) in enumerate(zip(mesh.nodes.tolist(), field_.values.tolist())):
            w.writerow([i, repr(x), repr(y), repr(t)])


def vtk_text(mesh, point_data=None, title="vascutherm"):
    """Legacy ASCII VTK unstructured grid; ``point_data`` maps names to nodal arrays."""
    lines = ["# vtk DataFile Version 3.0", title, "ASCII", "DATASET UNSTRUCTURED_GRID",
             f"POINTS {mesh.n_nodes} double"]
    lines += [f"{x!r} {y!r} 0.0" for x, y in mesh.nodes.tolist()]
    m = mesh.n_triangles
    lines.append(f"CELLS {m} {4 * m}")
    lines += [f"3 {a} {b} {c}" for a, b, c in mesh.triangles.tolist()]
    lines.append(f"CELL_TYPES {m}")
    lines += ["5"] * m
    if point_data:
        lines.append(f"POINT_DATA {mesh.n_nodes}")
        for name, values in point_data.items():
            values = np.asarray(values, float)
            if values.shape != (mesh.n_nodes,):
                raise ValueError(f"point data {name!r} has shape {values.shape}")
            lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
            lines += [repr(v) for v in values.tolist()]
    return "\n".join(lines) + "\n"


def write_field_vtk(path, field_, name="temperature"):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(vtk_text(field_.mesh, {name: field_.values}))


def write_mesh_vtk(path, mesh):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(vtk_text(mesh))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj):
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def write_json(path, obj):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(obj))
