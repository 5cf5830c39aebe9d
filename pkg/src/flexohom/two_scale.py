"""Macro problem with homogenized generalized tangents and localization.

The problem is linear, so the RVE tangent is computed once and reused at
every macro integration point; localization re-runs a single RVE case with
the macro state extracted at the requested point.
"""
import hashlib
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .assembly import ReducedSolver, SolverError, assemble, boundary_edges, edge_load, residual_check
from .bell import DOFS_PER_NODE, evaluate_fields
from .fields import FieldSnapshot, nodal_snapshot, snapshot_from_fields
from .homogenization import RVE, EffectiveTangents, RveResult, effective_tangents
from .mesh import Mesh, classify_boundary
from .quadrature import triangle_quadrature
from .rve_bc import ConstraintSet, MacroState, eliminate

log = logging.getLogger(__name__)

FIELDS = {"u1": 0, "u2": 1, "phi": 2}
EDGES = ("left", "right", "bottom", "top")
# dofs fixed by a constant value along an edge: value, tangential first and second derivative
_EDGE_DOFS = {"left": (0, 2, 5), "right": (0, 2, 5), "bottom": (0, 1, 3), "top": (0, 1, 3)}

CONSISTENCY_TOL = 1e-8


class MacroProblemError(ValueError):
    pass


@dataclass
class DirichletBC:
    edge: str
    field: str
    value: float = 0.0

    def __post_init__(self):
        if self.edge not in EDGES:
            raise MacroProblemError(f"unknown edge {self.edge!r}")
        if self.field not in FIELDS:
            raise MacroProblemError(f"unknown field {self.field!r}")


@dataclass
class EdgeLoad:
    edge: str
    traction: tuple = (0.0, 0.0)
    charge: float = 0.0

    def __post_init__(self):
        if self.edge not in EDGES:
            raise MacroProblemError(f"unknown edge {self.edge!r}")


@dataclass
class MacroProblem:
    mesh: Mesh
    material: object  # EffectiveTangents, 11x11 array or region -> law mapping
    dirichlet: list = field(default_factory=list)
    loads: list = field(default_factory=list)
    degree: int = 8

    def materials(self):
        m = self.material
        if isinstance(m, EffectiveTangents):
            m = m.Cbig
        if isinstance(m, dict):
            return {k: (v.Cbig if isinstance(v, EffectiveTangents) else v) for k, v in m.items()}
        return {name: m for name in self.mesh.region_names.values()}


@dataclass
class LocalizationRequest:
    element: int
    point: int


@dataclass
class MacroSolution:
    problem: MacroProblem
    u: np.ndarray
    system: object
    residual: float
    fields: dict  # evaluate_fields at the quadrature points, (nel, nq, ...)

    def state_at(self, element, point) -> MacroState:
        nel, nq = self.fields["eps"].shape[:2]
        if not (0 <= element < nel and 0 <= point < nq):
            raise MacroProblemError(f"no quadrature point ({element}, {point}) in the macro model")
        f = self.fields
        return MacroState(f["eps"][element, point], f["g"][element, point], -f["E"][element, point])

    def stress_at(self, element, point):
        f = self.fields
        return np.concatenate([f["sigma"][element, point], f["tau"][element, point], f["D"][element, point]])

    def snapshot(self, name="macro"):
        mats = self.system.material_stack
        return nodal_snapshot(name, self.problem.mesh, self.u, mats, self.system.batch)


def _edge_nodes(mesh, edge):
    b = classify_boundary(mesh)
    return getattr(b, edge)


def _dirichlet_set(mesh, bcs) -> ConstraintSet:
    prescribed = {}
    for bc in bcs:
        for node in _edge_nodes(mesh, bc.edge):
            for k, d in enumerate(_EDGE_DOFS[bc.edge]):
                dof = DOFS_PER_NODE * int(node) + 6 * FIELDS[bc.field] + d
                val = bc.value if k == 0 else 0.0
                if dof in prescribed and prescribed[dof] != val:
                    raise MacroProblemError(f"contradictory Dirichlet data at node {node} ({bc.field})")
                prescribed[dof] = val
    fixed = np.array(sorted(prescribed), dtype=int)
    ndof = DOFS_PER_NODE * mesh.n_nodes
    return ConstraintSet(
        slaves=np.zeros(0, dtype=int),
        coef=sp.csr_matrix((0, ndof)),
        offsets=np.zeros((0, 1)),
        fixed=fixed,
        values=np.array([[prescribed[d]] for d in fixed]).reshape(-1, 1),
    )


def _edge_selection(mesh, edge):
    lo, hi = mesh.bbox
    tol = 1e-8 * float(np.max(hi - lo))
    d, v = {"left": (0, lo[0]), "right": (0, hi[0]), "bottom": (1, lo[1]), "top": (1, hi[1])}[edge]
    edges = boundary_edges(mesh)
    tri = mesh.triangles
    a = mesh.nodes[tri[edges[:, 0], edges[:, 1]], d]
    b = mesh.nodes[tri[edges[:, 0], (edges[:, 1] + 1) % 3], d]
    return edges[(np.abs(a - v) <= tol) & (np.abs(b - v) <= tol)]


def solve_macro(p: MacroProblem) -> MacroSolution:
    fields_present = {bc.field for bc in p.dirichlet}
    missing = [f for f in FIELDS if f not in fields_present]
    if missing:
        raise MacroProblemError(f"under-constrained macro problem: no essential data for {missing}")
    sys = assemble(p.mesh, p.materials(), p.degree)
    for ld in p.loads:
        edge_load(sys, _edge_selection(p.mesh, ld.edge), ld.traction, ld.charge)
    red = eliminate(_dirichlet_set(p.mesh, p.dirichlet), sys.ndof)
    try:
        solver = ReducedSolver(sys, red)
    except SolverError as exc:
        raise MacroProblemError(f"under-constrained macro problem: {exc}") from exc
    a = np.ones(1)
    u = solver.solve(a)
    res = residual_check(sys, red, a, u)
    rule = triangle_quadrature(p.degree)
    f = evaluate_fields(sys.batch, u[sys.dof_map], rule.points, sys.material_stack)
    return MacroSolution(problem=p, u=u, system=sys, residual=res, fields=f)


# ---------------------------------------------------------------------------
# RVE tangent cache and localization


def rve_key(rve: RVE):
    """Fingerprint of an RVE configuration (mesh, materials, bc, degree)."""
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(rve.mesh.nodes).tobytes())
    h.update(np.ascontiguousarray(rve.mesh.triangles).tobytes())
    h.update(np.ascontiguousarray(rve.mesh.regions).tobytes())
    for name in sorted(rve.materials):
        h.update(name.encode())
        m = rve.materials[name]
        h.update(np.ascontiguousarray(m.generalized() if hasattr(m, "generalized") else m, dtype=float).tobytes())
    h.update(f"{rve.bc}:{rve.degree}".encode())
    return h.hexdigest()


class TangentCache:
    """Effective tangents per distinct RVE configuration, computed once."""

    def __init__(self):
        self._store = {}
        self.computations = 0
        self.hits = 0

    def get(self, rve: RVE) -> EffectiveTangents:
        key = rve_key(rve)
        if key in self._store:
            self.hits += 1
        else:
            self.computations += 1
            self._store[key] = effective_tangents(rve)
        return self._store[key]


@dataclass
class Localization:
    request: LocalizationRequest
    macro: MacroState
    result: RveResult
    predicted: np.ndarray  # Cbig @ macro state
    snapshot: FieldSnapshot

    @property
    def consistency_error(self):
        got = self.result.generalized_stress
        return float(np.abs(got - self.predicted).max() / max(np.abs(self.predicted).max(), 1e-300))


def localize(sol: MacroSolution, req: LocalizationRequest, rve: RVE, tangents: EffectiveTangents) -> Localization:
    state = sol.state_at(req.element, req.point)
    res = rve.run(state)
    snap = nodal_snapshot(
        f"micro e{req.element} q{req.point}", rve.mesh, res.solution, rve.system.material_stack, rve.batch
    )
    return Localization(req, state, res, tangents.Cbig @ state.as_vector(), snap)


@dataclass
class TwoScaleResult:
    tangents: EffectiveTangents
    macro: MacroSolution
    localizations: list
    cache: TangentCache

    def max_consistency_error(self):
        return max((loc.consistency_error for loc in self.localizations), default=0.0)


def run_two_scale(macro_mesh, rve: RVE, dirichlet, loads, requests, degree=8, cache=None) -> TwoScaleResult:
    """One-shot two-scale analysis: tangent once, macro solve, localizations."""
    cache = TangentCache() if cache is None else cache
    tan = cache.get(rve)
    prob = MacroProblem(macro_mesh, tan, list(dirichlet), list(loads), degree)
    sol = solve_macro(prob)
    locs = []
    for req in requests:
        loc = localize(sol, req, rve, cache.get(rve))
        if loc.consistency_error > CONSISTENCY_TOL:
            log.warning("scale consistency %.3e at %s", loc.consistency_error, req)
        locs.append(loc)
    return TwoScaleResult(tan, sol, locs, cache)


def macro_snapshot_at_points(sol: MacroSolution, name="macro-qp"):
    """Quadrature-point fields of the macro model as a point snapshot."""
    return snapshot_from_fields(name, sol.fields)
