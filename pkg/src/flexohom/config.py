"""TOML run configuration with strict key checking."""
from dataclasses import dataclass, field, fields
from pathlib import Path

import tomli

from .constitutive import TABLE1, MaterialParams
from .homogenization import DBC, PBC, SWEEP_VARIABLES, RveSpec, SweepSpec
from .mesh import HoleSpec, center_at_centroid, read_mesh
from .quadrature import MAX_DEGREE
from .two_scale import EDGES, FIELDS, DirichletBC, EdgeLoad, LocalizationRequest


class ConfigError(ValueError):
    pass


_MATERIAL_KEYS = {f.name for f in fields(MaterialParams)} | {"preset"}
_HOLE_KEYS = {"shape", "center", "size", "orientation"}
_PRESETS = {"table1": TABLE1}


@dataclass
class MacroConfig:
    width: float = 10.0
    height: float = 10.0
    nx: int = 4
    ny: int = 4
    dirichlet: list = field(default_factory=list)
    loads: list = field(default_factory=list)
    localize: list = field(default_factory=list)


@dataclass
class RunConfig:
    materials: dict
    rve: RveSpec
    mesh_file: str = None
    bc: str = PBC
    degree: int = 8
    residual_tol: float = 1e-10
    output_dir: str = "out"
    threads: int = 1
    sweep: SweepSpec = None
    macro: MacroConfig = None
    source: str = None

    def rve_mesh(self):
        if self.mesh_file:
            return center_at_centroid(read_mesh(self.mesh_file))
        return self.rve.build_mesh()


def _check_keys(table, allowed, path):
    if not isinstance(table, dict):
        raise ConfigError(f"{path}: expected a table")
    unknown = sorted(set(table) - set(allowed))
    if unknown:
        where = f"{path}.{unknown[0]}" if path else unknown[0]
        raise ConfigError(f"{where}: unknown key")


def _num(v, path, positive=False, integer=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {v!r}")
    if integer and int(v) != v:
        raise ConfigError(f"{path}: expected an integer")
    if positive and not v > 0:
        raise ConfigError(f"{path}: must be positive")
    return int(v) if integer else float(v)


def _material(table, path):
    _check_keys(table, _MATERIAL_KEYS, path)
    table = dict(table)
    preset = table.pop("preset", None)
    if preset is not None:
        if preset not in _PRESETS:
            raise ConfigError(f"{path}.preset: unknown preset {preset!r}")
        base = {f.name: getattr(_PRESETS[preset], f.name) for f in fields(MaterialParams)}
    else:
        missing = [k for k in ("lam", "G") if k not in table]
        if missing:
            raise ConfigError(f"{path}.{missing[0]}: required")
        base = {}
    for k, v in table.items():
        base[k] = _num(v, f"{path}.{k}")
    try:
        return MaterialParams(**base)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _holes(items, path):
    if not isinstance(items, list):
        raise ConfigError(f"{path}: expected an array of tables")
    out = []
    for i, h in enumerate(items):
        p = f"{path}[{i}]"
        _check_keys(h, _HOLE_KEYS, p)
        shape = h.get("shape", "circle")
        if shape not in ("circle", "triangle", "rectangle"):
            raise ConfigError(f"{p}.shape: unknown shape {shape!r}")
        center = h.get("center", [0.0, 0.0])
        if not (isinstance(center, list) and len(center) == 2):
            raise ConfigError(f"{p}.center: expected [x1, x2]")
        size = h.get("size", 0.1)
        size = [_num(s, f"{p}.size", positive=True) for s in size] if isinstance(size, list) else _num(size, f"{p}.size", positive=True)
        out.append(
            HoleSpec(
                shape,
                tuple(_num(c, f"{p}.center") for c in center),
                tuple(size) if isinstance(size, list) else size,
                _num(h.get("orientation", 0.0), f"{p}.orientation"),
            )
        )
    return out


def _bc(v, path):
    if not isinstance(v, str) or v.upper() not in (PBC, DBC):
        raise ConfigError(f"{path}: expected 'PBC' or 'DBC'")
    return v.upper()


def _macro(t, path):
    _check_keys(t, {"width", "height", "nx", "ny", "dirichlet", "loads", "localize"}, path)
    m = MacroConfig()
    for k in ("width", "height"):
        if k in t:
            setattr(m, k, _num(t[k], f"{path}.{k}", positive=True))
    for k in ("nx", "ny"):
        if k in t:
            setattr(m, k, _num(t[k], f"{path}.{k}", positive=True, integer=True))
    for i, d in enumerate(t.get("dirichlet", [])):
        p = f"{path}.dirichlet[{i}]"
        _check_keys(d, {"edge", "field", "value"}, p)
        if d.get("edge") not in EDGES:
            raise ConfigError(f"{p}.edge: expected one of {EDGES}")
        if d.get("field") not in FIELDS:
            raise ConfigError(f"{p}.field: expected one of {tuple(FIELDS)}")
        m.dirichlet.append(DirichletBC(d["edge"], d["field"], _num(d.get("value", 0.0), f"{p}.value")))
    for i, d in enumerate(t.get("loads", [])):
        p = f"{path}.loads[{i}]"
        _check_keys(d, {"edge", "traction", "charge"}, p)
        if d.get("edge") not in EDGES:
            raise ConfigError(f"{p}.edge: expected one of {EDGES}")
        tr = d.get("traction", [0.0, 0.0])
        if not (isinstance(tr, list) and len(tr) == 2):
            raise ConfigError(f"{p}.traction: expected [t1, t2]")
        m.loads.append(
            EdgeLoad(d["edge"], tuple(_num(x, f"{p}.traction") for x in tr), _num(d.get("charge", 0.0), f"{p}.charge"))
        )
    for i, d in enumerate(t.get("localize", [])):
        p = f"{path}.localize[{i}]"
        _check_keys(d, {"element", "point"}, p)
        m.localize.append(
            LocalizationRequest(_num(d.get("element", 0), f"{p}.element", integer=True), _num(d.get("point", 0), f"{p}.point", integer=True))
        )
    return m


def parse_config(data: dict, source=None) -> RunConfig:
    _check_keys(data, {"run", "materials", "rve", "sweep", "macro"}, "")
    run = data.get("run", {})
    _check_keys(run, {"bc", "degree", "residual_tol", "output_dir", "threads"}, "run")
    bc = _bc(run.get("bc", PBC), "run.bc")
    degree = _num(run.get("degree", 8), "run.degree", integer=True)
    if not 0 <= degree <= MAX_DEGREE:
        raise ConfigError(f"run.degree: must lie in [0, {MAX_DEGREE}]")
    if degree < 8:
        raise ConfigError("run.degree: element matrices need a rule of degree 8 or more")
    tol = _num(run.get("residual_tol", 1e-10), "run.residual_tol", positive=True)
    threads = _num(run.get("threads", 1), "run.threads", positive=True, integer=True)
    out = run.get("output_dir", "out")
    if not isinstance(out, str):
        raise ConfigError("run.output_dir: expected a string")

    mats_t = data.get("materials")
    if not mats_t:
        raise ConfigError("materials: at least one region material is required")
    _check_keys(mats_t, mats_t.keys(), "materials")
    materials = {name: _material(t, f"materials.{name}") for name, t in mats_t.items()}

    rv = data.get("rve", {})
    _check_keys(rv, {"side_length", "element_size", "symmetry", "holes", "inclusions", "mesh_file"}, "rve")
    spec = RveSpec(
        side_length=_num(rv.get("side_length", 1.0), "rve.side_length", positive=True),
        element_size=_num(rv.get("element_size", 0.05), "rve.element_size", positive=True),
        symmetry=rv.get("symmetry", "auto"),
        holes=_holes(rv.get("holes", []), "rve.holes"),
        inclusions=_holes(rv.get("inclusions", []), "rve.inclusions"),
        materials=materials,
    )
    if spec.symmetry not in ("auto", "none", "x", "y", "xy"):
        raise ConfigError("rve.symmetry: expected auto, none, x, y or xy")
    mesh_file = rv.get("mesh_file")
    regions = ["matrix"] + (["inclusion"] if spec.inclusions else [])
    if mesh_file is None:
        for r in regions:
            if r not in materials:
                raise ConfigError(f"materials.{r}: no material given for region {r!r}")

    sweep = None
    if "sweep" in data:
        s = data["sweep"]
        _check_keys(s, {"variable", "values", "normalization", "layouts", "bc"}, "sweep")
        var = s.get("variable")
        if var not in SWEEP_VARIABLES:
            raise ConfigError(f"sweep.variable: expected one of {SWEEP_VARIABLES}")
        vals = s.get("values", [])
        if not isinstance(vals, list):
            raise ConfigError("sweep.values: expected an array")
        layouts = {k: _holes(v, f"sweep.layouts.{k}") for k, v in s.get("layouts", {}).items()}
        norm = s.get("normalization")
        if norm is not None and norm not in materials:
            raise ConfigError(f"sweep.normalization: no material given for region {norm!r}")
        if var == "stiffnessFactor" and "matrix" not in materials:
            raise ConfigError("materials.matrix: stiffness sweeps scale the 'matrix' region")
        if var != "layout":
            vals = [_num(v, f"sweep.values[{i}]") for i, v in enumerate(vals)]
        sweep = SweepSpec(var, vals, spec, _bc(s.get("bc", bc), "sweep.bc"), norm, layouts, degree)

    macro = _macro(data["macro"], "macro") if "macro" in data else None
    return RunConfig(
        materials=materials,
        rve=spec,
        mesh_file=mesh_file,
        bc=bc,
        degree=degree,
        residual_tol=tol,
        output_dir=out,
        threads=threads,
        sweep=sweep,
        macro=macro,
        source=source,
    )


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"{path}: no such file")
    try:
        data = tomli.loads(path.read_text())
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    cfg = parse_config(data, str(path))
    if cfg.mesh_file and not Path(cfg.mesh_file).is_absolute():
        cfg.mesh_file = str(path.parent / cfg.mesh_file)
    return cfg
