"""Line-oriented run configuration.

Grammar (one statement per line, ``#`` starts a comment)::

    [section]
    key = value [unit]

Numbers may carry a unit suffix; it is converted to SI on parsing and a
value without a suffix is taken to be in the SI unit. Lists of points are
written ``x y; x y; ...``. See the README for every section and key.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib.resources import files

import numpy as np

from .errors import ConfigError
from .mesh import SIDES, TEMPERATURE, embed_vasculature, generate_rect_mesh
from .model import STEFAN_BOLTZMANN, MaterialParams, SourcesAndBCs, ThermalProblem, VasculatureFlow, validate
from .solver import SolveSettings

# unit suffix -> factor to SI, per quantity
UNITS = {
    "length": {"m": 1.0, "cm": 1e-2, "mm": 1e-3},
    "temperature": {"K": 1.0},
    "conductivity": {"W/m/K": 1.0},
    "film": {"W/m^2/K": 1.0},
    "radiation": {"W/m^2/K^4": 1.0},
    "areal": {"W/m^2": 1.0},
    "linear": {"W/m": 1.0},
    "mass_flow": {"kg/s": 1.0, "kg/min": 1.0 / 60.0, "kg/h": 1.0 / 3600.0},
    "capacity": {"J/kg/K": 1.0},
    "none": {},
}
SI = {q: next(iter(u), "") for q, u in UNITS.items()}


@dataclass(frozen=True)
class Key:
    kind: str  # float, int, bool, str, points, box, tensor, boundary
    quantity: str = "none"
    required: bool = False
    default: object = None


SCHEMA = {
    "geometry": {
        "length": Key("float", "length", True),
        "height": Key("float", "length", True),
        "nx": Key("int", required=True),
        "ny": Key("int", required=True),
    },
    "material": {
        "thickness": Key("float", "length", True),
        "conductivity": Key("tensor", "conductivity", True),
        "convection_coefficient": Key("float", "film", True),
        "emissivity": Key("float", default=0.0),
        "stefan_boltzmann": Key("float", "radiation", default=STEFAN_BOLTZMANN),
    },
    "vasculature": {
        "waypoints": Key("points", "length", True),
        "mass_flow_rate": Key("float", "mass_flow", True),
        "fluid_heat_capacity": Key("float", "capacity", True),
        "inlet_temperature": Key("float", "temperature", True),
    },
    "source": {
        "value": Key("float", "areal", True),
        "region": Key("box", "length"),
        "background": Key("float", "areal", default=0.0),
    },
    "environment": {
        "ambient_temperature": Key("float", "temperature", True),
        "radiation": Key("bool", default=False),
    },
    "boundary": {side: Key("boundary", default=("adiabatic", 0.0)) for side in SIDES},
    "solver": {
        "linear_tolerance": Key("float", default=1e-10),
        "newton_tolerance": Key("float", default=1e-10),
        "max_newton_iters": Key("int", default=50),
        "max_halvings": Key("int", default=20),
    },
    "output": {
        "field_csv": Key("str", default="field.csv"),
        "field_vtk": Key("str", default="field.vtk"),
        "metrics_json": Key("str", default="metrics.json"),
    },
}
OPTIONAL_SECTIONS = {"vasculature", "boundary", "solver", "output"}


@dataclass(frozen=True)
class RunConfig:
    """Flat, SI-valued run description. ``waypoints`` is None without a vasculature."""

    length: float
    height: float
    nx: int
    ny: int
    thickness: float
    conductivity: tuple  # (kxx, kxy, kyy)
    convection_coefficient: float
    ambient_temperature: float
    value: float
    emissivity: float = 0.0
    stefan_boltzmann: float = STEFAN_BOLTZMANN
    waypoints: tuple = None
    mass_flow_rate: float = 0.0
    fluid_heat_capacity: float = 0.0
    inlet_temperature: float = 0.0
    region: tuple = None
    background: float = 0.0
    radiation: bool = False
    boundary: tuple = (("bottom", "adiabatic", 0.0), ("right", "adiabatic", 0.0),
                       ("top", "adiabatic", 0.0), ("left", "adiabatic", 0.0))
    linear_tolerance: float = 1e-10
    newton_tolerance: float = 1e-10
    max_newton_iters: int = 50
    max_halvings: int = 20
    field_csv: str = "field.csv"
    field_vtk: str = "field.vtk"
    metrics_json: str = "metrics.json"

    @property
    def heat_capacity_rate(self):
        return self.mass_flow_rate * self.fluid_heat_capacity if self.waypoints else 0.0

    @property
    def settings(self):
        return SolveSettings(self.linear_tolerance, self.newton_tolerance, self.max_newton_iters, self.max_halvings)

    def boundary_spec(self, side):
        for s, kind, value in self.boundary:
            if s == side:
                return kind, value
        raise KeyError(side)


_NUMBER = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_NUM_UNIT = re.compile(rf"^({_NUMBER})\s*(\S*)$")


def _number(text, quantity, line, key):
    m = _NUM_UNIT.match(text.strip())
    if not m:
        raise ConfigError(f"{key}: expected a number, got {text!r}", line)
    value, unit = float(m.group(1)), m.group(2)
    allowed = UNITS[quantity]
    if unit:
        if unit not in allowed:
            expect = ", ".join(allowed) if allowed else "no unit"
            raise ConfigError(f"{key}: unit {unit!r} does not match (expected {expect})", line)
        value *= allowed[unit]
    return value


def _numbers(text, quantity, line, key):
    """Whitespace-separated numbers with one optional trailing unit for the whole list."""
    parts = text.split()
    unit = ""
    if parts and not re.fullmatch(_NUMBER, parts[-1]):
        unit = parts.pop()
    if not parts:
        raise ConfigError(f"{key}: expected numbers, got {text!r}", line)
    return [_number(p + (" " + unit if unit else ""), quantity, line, key) for p in parts]


def _parse_value(key, spec, text, line):
    if spec.kind == "float":
        return _number(text, spec.quantity, line, key)
    if spec.kind == "int":
        if not re.fullmatch(r"[-+]?\d+", text):
            raise ConfigError(f"{key}: expected an integer, got {text!r}", line)
        return int(text)
    if spec.kind == "bool":
        low = text.lower()
        if low in ("true", "yes", "on", "1"):
            return True
        if low in ("false", "no", "off", "0"):
            return False
        raise ConfigError(f"{key}: expected true or false, got {text!r}", line)
    if spec.kind == "str":
        return text
    if spec.kind == "tensor":
        vals = _numbers(text, spec.quantity, line, key)
        if len(vals) == 1:
            return (vals[0], 0.0, vals[0])
        if len(vals) == 3:
            return tuple(vals)
        raise ConfigError(f"{key}: give k or 'kxx kxy kyy', got {len(vals)} numbers", line)
    if spec.kind == "box":
        vals = _numbers(text, spec.quantity, line, key)
        if len(vals) != 4:
            raise ConfigError(f"{key}: expected 'xmin ymin xmax ymax'", line)
        return tuple(vals)
    if spec.kind == "points":
        body, unit = text, ""
        tail = text.split()
        if tail and not re.fullmatch(_NUMBER, tail[-1]):
            unit = tail[-1]
            body = text[: text.rstrip().rfind(unit)]
        pts = []
        for chunk in body.split(";"):
            xy = _numbers(f"{chunk} {unit}", spec.quantity, line, key)
            if len(xy) != 2:
                raise ConfigError(f"{key}: each point needs two coordinates, got {chunk.strip()!r}", line)
            pts.append(tuple(xy))
        if len(pts) < 2:
            raise ConfigError(f"{key}: a vasculature needs at least two waypoints", line)
        return tuple(pts)
    if spec.kind == "boundary":
        kind, _, rest = text.partition(" ")
        if kind == "adiabatic" and not rest.strip():
            return ("adiabatic", 0.0)
        if kind == "flux":
            return ("flux", _number(rest, "linear", line, key))
        if kind == "temperature":
            return ("temperature", _number(rest, "temperature", line, key))
        raise ConfigError(f"{key}: expected 'adiabatic', 'flux <W/m>' or 'temperature <K>', got {text!r}", line)
    raise AssertionError(spec.kind)


def parse_config(text):
    """Parse configuration text into a :class:`RunConfig`."""
    values = {}
    seen_sections = set()
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].strip()
        if not stripped:
            continue
        m = re.fullmatch(r"\[\s*([A-Za-z_]+)\s*\]", stripped)
        if m:
            section = m.group(1)
            if section not in SCHEMA:
                raise ConfigError(f"unknown section [{section}]", lineno)
            if section in seen_sections:
                raise ConfigError(f"duplicate section [{section}]", lineno)
            seen_sections.add(section)
            continue
        if "=" not in stripped:
            raise ConfigError(f"expected 'key = value', got {stripped!r}", lineno)
        if section is None:
            raise ConfigError("key outside any [section]", lineno)
        key, _, val = (s.strip() for s in stripped.partition("="))
        spec = SCHEMA[section].get(key)
        if spec is None:
            raise ConfigError(f"unknown key {key!r} in [{section}]", lineno)
        if (section, key) in values:
            raise ConfigError(f"duplicate key {key!r} in [{section}]", lineno)
        values[(section, key)] = _parse_value(key, spec, val, lineno)

    missing = []
    for sec, keys in SCHEMA.items():
        if sec in OPTIONAL_SECTIONS and sec not in seen_sections:
            continue
        missing += [f"{sec}.{k}" for k, spec in keys.items() if spec.required and (sec, k) not in values]
    if missing:
        raise ConfigError("missing required keys: " + ", ".join(missing))

    kwargs = {}
    boundary = []
    for sec, keys in SCHEMA.items():
        for k, spec in keys.items():
            v = values.get((sec, k), spec.default)
            if sec == "boundary":
                boundary.append((k, v[0], v[1]))
            elif (sec, k) in values or spec.default is not None:
                kwargs[k] = v
    return RunConfig(boundary=tuple(boundary), **kwargs)


def _fmt(v):
    return repr(float(v))


def serialize_config(config):
    """Canonical SI text that parses back to an equal :class:`RunConfig`."""
    out = []
    for sec, keys in SCHEMA.items():
        if sec == "vasculature" and config.waypoints is None:
            continue
        out.append(f"[{sec}]")
        for k, spec in keys.items():
            if sec == "boundary":
                kind, value = config.boundary_spec(k)
                unit = {"flux": " W/m", "temperature": " K"}.get(kind)
                out.append(f"{k} = {kind}" + (f" {_fmt(value)}{unit}" if unit else ""))
                continue
            v = getattr(config, k)
            if v is None:
                continue
            unit = SI[spec.quantity]
            suffix = f" {unit}" if unit else ""
            if spec.kind == "float":
                text = _fmt(v) + suffix
            elif spec.kind == "int":
                text = str(int(v))
            elif spec.kind == "bool":
                text = "true" if v else "false"
            elif spec.kind == "str":
                text = v
            elif spec.kind in ("tensor", "box"):
                text = " ".join(_fmt(x) for x in v) + suffix
            elif spec.kind == "points":
                text = "; ".join(f"{_fmt(x)} {_fmt(y)}" for x, y in v) + suffix
            out.append(f"{k} = {text}")
        out.append("")
    return "\n".join(out)


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def source_field(config, mesh):
    """Per-triangle source: ``value`` inside ``region`` (by centroid), ``background`` elsewhere."""
    if config.region is None:
        return np.full(mesh.n_triangles, config.value)
    x0, y0, x1, y1 = config.region
    c = mesh.centroids
    inside = (c[:, 0] >= x0) & (c[:, 0] <= x1) & (c[:, 1] >= y0) & (c[:, 1] <= y1)
    return np.where(inside, config.value, config.background)


def build_problem(config, check=True):
    """Mesh and assemble the :class:`ThermalProblem` described by ``config``."""
    mesh = generate_rect_mesh(config.length, config.height, config.nx, config.ny)
    tags = {s: TEMPERATURE for s, kind, _ in config.boundary if kind == "temperature"}
    mesh = mesh.with_tags(tags)

    q = np.zeros(len(mesh.boundary_edges))
    dirichlet = {}
    for side, kind, value in config.boundary:
        on_side = mesh.boundary_sides == side
        if kind == "temperature":
            q[on_side] = np.nan
            # corners shared by two temperature sides keep the first side's value
            for n in np.unique(mesh.boundary_edges[on_side]).tolist():
                dirichlet.setdefault(n, value)
        else:
            q[on_side] = value

    kxx, kxy, kyy = config.conductivity
    mat = MaterialParams(config.thickness, np.array([[kxx, kxy], [kxy, kyy]]), config.convection_coefficient,
                         config.emissivity, config.stefan_boltzmann)
    loads = SourcesAndBCs(source_field(config, mesh), config.ambient_temperature, q, dirichlet)
    path = flow = None
    if config.waypoints is not None:
        path = embed_vasculature(mesh, config.waypoints)
        flow = VasculatureFlow(config.mass_flow_rate, config.fluid_heat_capacity, config.inlet_temperature)
    problem = ThermalProblem(mesh, mat, loads, path, flow, config.radiation)
    return validate(problem) if check else problem


BUNDLED = ("reference", "warm_inlet", "cold_inlet")


def bundled_config_text(name):
    """Text of a configuration shipped with the package (``reference``, ``warm_inlet``, ``cold_inlet``)."""
    if name not in BUNDLED:
        raise ConfigError(f"no bundled config {name!r}; choose from {', '.join(BUNDLED)}")
    return files("vascutherm").joinpath("configs").joinpath(f"{name}.cfg").read_text(encoding="utf-8")
