"""RVE load cases, homogenized stresses, effective tangents and sweeps."""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from math import pi, sqrt

import numpy as np

from .assembly import GlobalSystem, ReducedSolver, assemble, boundary_edges, residual_check
from .bell import BellBatch
from .constitutive import N_GEN, SL_E, SL_EPS, SL_G, MaterialMatrices, MaterialParams, build_material_matrices
from .mesh import (
    HoleSpec,
    _as_hole,
    Mesh,
    center_at_centroid,
    classify_boundary,
    generate_inclusion_rve,
    generate_square_rve,
    pair_periodic_nodes,
)
from .quadrature import gauss_legendre_01, triangle_quadrature
from .rve_bc import MacroState, _as_vector, build_dbc, build_pbc, eliminate, polynomial_dofs

log = logging.getLogger(__name__)

PBC, DBC = "PBC", "DBC"
ENERGY_FLOOR = 1e-30
CENTER_TOL = 1e-10

BLOCKS = {
    "CsigEps": (SL_EPS, SL_EPS),
    "CsigG": (SL_EPS, SL_G),
    "CsigE": (SL_EPS, SL_E),
    "CtauEps": (SL_G, SL_EPS),
    "CtauG": (SL_G, SL_G),
    "CtauE": (SL_G, SL_E),
    "CDeps": (SL_E, SL_EPS),
    "CDg": (SL_E, SL_G),
    "CDE": (SL_E, SL_E),
}

# report label -> (row, column) of the 11x11 tangent
REPORT_LABELS = {"C11": (0, 0), "C33": (2, 2)}
REPORT_LABELS.update({f"e{i + 1}{j + 1}": (9 + i, j) for i in range(2) for j in range(3)})
REPORT_LABELS.update({"kappa11": (9, 9), "kappa33": (10, 10)})
REPORT_LABELS.update({f"f{i + 1}{j + 1}": (9 + i, 3 + j) for i in range(2) for j in range(6)})

PIEZO_LABELS = tuple(k for k in REPORT_LABELS if k.startswith("e"))


class HomogenizationError(RuntimeError):
    pass


def resolve_materials(materials):
    """Region name -> MaterialMatrices; MaterialParams are converted."""
    out = {}
    for name, m in materials.items():
        out[name] = build_material_matrices(m) if isinstance(m, MaterialParams) else m
    return out


def strain_gradient_moment(x):
    """A(x) (3x6): polynomial strain per unit macro gradient, eps_poly = A(x) gM."""
    x1, x2 = x[..., 0], x[..., 1]
    z = np.zeros_like(x1)
    return np.stack(
        [
            np.stack([x1, x2, z, z, z, z], axis=-1),
            np.stack([z, z, z, z, x1, x2], axis=-1),
            np.stack([z, 0.5 * x1, 0.5 * x2, 0.5 * x1, 0.5 * x2, z], axis=-1),
        ],
        axis=-2,
    )


@dataclass
class RveResult:
    solution: np.ndarray
    macro: MacroState
    sigmaM: np.ndarray
    tauM: np.ndarray
    DM: np.ndarray
    microEnergy: float
    residual: float

    @property
    def generalized_stress(self):
        return np.concatenate([self.sigmaM, self.tauM, self.DM])


@dataclass
class EffectiveTangents:
    """11x11 generalized tangent in the (eps, g, -E) ordering."""

    Cbig: np.ndarray
    bc: str = PBC
    hill_mandel: np.ndarray = field(default_factory=lambda: np.zeros(0))
    residuals: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def block(self, name):
        r, c = BLOCKS[name]
        return self.Cbig[r, c]

    def __getattr__(self, name):
        if name in BLOCKS:
            return self.block(name)
        raise AttributeError(name)

    def report(self):
        """Two-index coefficients; dielectric constants are reported positive."""
        out = {k: float(self.Cbig[i, j]) for k, (i, j) in REPORT_LABELS.items()}
        out["kappa11"], out["kappa33"] = -out["kappa11"], -out["kappa33"]
        return out

    def symmetry_error(self):
        C = self.Cbig
        return float(np.abs(C - C.T).max() / np.abs(C).max())

    def piezo(self):
        return self.block("CDeps")


def reference_report(m):
    """Report labels of a micro material, used for normalisation."""
    if isinstance(m, MaterialParams):
        m = build_material_matrices(m)
    return EffectiveTangents(m.generalized()).report()


def normalize_report(rep, ref):
    out = {}
    for k, v in rep.items():
        r = ref[k]
        out[k] = v / r if r != 0 else float("nan")
    return out


class RVE:
    """Meshed RVE with cached assembly, constraint elimination and factors."""

    def __init__(self, mesh: Mesh, materials, bc=PBC, degree=8):
        bc = bc.upper()
        if bc not in (PBC, DBC):
            raise ValueError(f"unknown boundary condition {bc!r}")
        lo, hi = mesh.bbox
        if np.abs(mesh.centroid()).max() > CENTER_TOL * np.max(hi - lo):
            raise HomogenizationError("RVE mesh is not centred on its centroid")
        self.mesh = mesh
        self.materials = resolve_materials(materials)
        self.bc = bc
        self.degree = degree
        self.volume = mesh.area()
        self.box_area = float(np.prod(hi - lo))
        self.box_center = 0.5 * (lo + hi)
        self.counters = {"assemble": 0, "factorize": 0, "solve": 0}

    @cached_property
    def batch(self):
        return BellBatch(self.mesh.element_coords())

    @cached_property
    def system(self) -> GlobalSystem:
        self.counters["assemble"] += 1
        return assemble(self.mesh, self.materials, self.degree, batch=self.batch)

    @cached_property
    def constraints(self):
        bsets = classify_boundary(self.mesh)
        if self.bc == PBC:
            return build_pbc(self.mesh, bsets, pair_periodic_nodes(self.mesh, bsets))
        return build_dbc(self.mesh, bsets)

    @cached_property
    def reduction(self):
        return eliminate(self.constraints, self.system.ndof)

    @cached_property
    def solver(self) -> ReducedSolver:
        self.counters["factorize"] += 1
        return ReducedSolver(self.system, self.reduction)

    @cached_property
    def _operators(self):
        """Dense (11, ndof) maps to volume-averaged stresses and strains."""
        sys = self.system
        rule = triangle_quadrature(self.degree)
        ndof = sys.ndof
        H = np.zeros((N_GEN, ndof))
        S = np.zeros((N_GEN, ndof))
        for idx, sub in self.batch.chunks():
            B = sub.generalized_B(rule.points)
            w = rule.weights[None, :] * sub.area[:, None]
            MB = np.matmul(sys.material_stack[idx][:, None], B)
            A = strain_gradient_moment(sub.physical_points(rule.points))
            MB[:, :, SL_G] += np.matmul(A.transpose(0, 1, 3, 2), MB[:, :, SL_EPS])
            He = np.einsum("eq,eqib->eib", w, MB, optimize=True)
            Se = np.einsum("eq,eqib->eib", w, B, optimize=True)
            dm = sys.dof_map[idx]
            for i in range(N_GEN):
                np.add.at(H[i], dm, He[:, i])
                np.add.at(S[i], dm, Se[:, i])
        return H / self.volume, S / self.volume

    def solve(self, macros):
        """Full solutions for a (11,) or (11, k) array of macro states."""
        A = np.asarray(macros, dtype=float)
        self.counters["solve"] += 1 if A.ndim == 1 else A.shape[1]
        return self.solver.solve(A)

    def homogenized(self, U):
        return self._operators[0] @ U

    def averaged_strain(self, U):
        return self._operators[1] @ U

    def energy(self, U):
        K = self.system.K
        return np.einsum("i...,i...->...", U, K @ U) / self.volume

    def run(self, macro) -> RveResult:
        a = _as_vector(macro)
        u = self.solve(a)
        return self._result(u, a)

    def _result(self, u, a):
        s = self.homogenized(u)
        return RveResult(
            solution=u,
            macro=MacroState.from_vector(a),
            sigmaM=s[SL_EPS],
            tauM=s[SL_G],
            DM=s[SL_E],
            microEnergy=float(self.energy(u)),
            residual=residual_check(self.system, self.reduction, a, u),
        )

    def run_all(self, A):
        A = np.asarray(A, dtype=float)
        U = self.solve(A)
        return [self._result(U[:, j], A[:, j]) for j in range(A.shape[1])]


def _rve(mesh_or_rve, materials=None, bc=PBC, degree=8) -> RVE:
    if isinstance(mesh_or_rve, RVE):
        return mesh_or_rve
    return RVE(mesh_or_rve, materials, bc, degree)


def run_rve_case(mesh, materials, macro, bc=PBC, degree=8) -> RveResult:
    return _rve(mesh, materials, bc, degree).run(macro)


def _field_average(rve: RVE, result: RveResult, rows):
    return rve.homogenized(result.solution)[rows]


def average_stress(result: RveResult, rve: RVE):
    return _field_average(rve, result, SL_EPS)


def average_higher_stress(result: RveResult, rve: RVE):
    """Average of tau + sym(sigma x) with the RVE centred at its centroid."""
    return _field_average(rve, result, SL_G)


def average_electric_displacement(result: RveResult, rve: RVE):
    return _field_average(rve, result, SL_E)


def hill_mandel_gap(result: RveResult, macro=None):
    a = result.macro.as_vector() if macro is None else _as_vector(macro)
    macro_work = float(result.generalized_stress @ a)
    return abs(result.microEnergy - macro_work) / max(abs(result.microEnergy), ENERGY_FLOOR)


def effective_tangents(mesh, materials=None, bc=PBC, degree=8) -> EffectiveTangents:
    """Unit perturbation of each of the 11 macro components; one factorisation."""
    rve = _rve(mesh, materials, bc, degree)
    results = rve.run_all(np.eye(N_GEN))
    bad = [r.residual for r in results if r.residual > 1e-10]
    if bad:
        log.warning("RVE residual above 1e-10: %s", bad)
    C = np.column_stack([r.generalized_stress for r in results])
    gaps = np.array([hill_mandel_gap(r) for r in results])
    res = np.array([r.residual for r in results])
    return EffectiveTangents(Cbig=C, bc=rve.bc, hill_mandel=gaps, residuals=res)


# ---------------------------------------------------------------------------
# boundary integrals over the outer RVE boundary


def _outer_edges(rve: RVE):
    mesh = rve.mesh
    lo, hi = mesh.bbox
    tol = 1e-8 * float(np.max(hi - lo))
    edges = boundary_edges(mesh)
    tri = mesh.triangles
    a = mesh.nodes[tri[edges[:, 0], edges[:, 1]]]
    b = mesh.nodes[tri[edges[:, 0], (edges[:, 1] + 1) % 3]]
    on = np.zeros(len(edges), dtype=bool)
    for d in range(2):
        for v in (lo[d], hi[d]):
            on |= (np.abs(a[:, d] - v) <= tol) & (np.abs(b[:, d] - v) <= tol)
    return edges[on]


def _boundary_moments(rve: RVE, u, npts=4):
    """Integrals of (u_i n_j, u_i,j n_k, phi n_j) over the outer boundary."""
    s, w = gauss_legendre_01(npts)
    un = np.zeros((2, 2))
    gun = np.zeros((2, 2, 2))
    phin = np.zeros(2)
    edges = _outer_edges(rve)
    dm = rve.system.dof_map
    for k in range(3):
        sel = edges[edges[:, 1] == k, 0]
        if not len(sel):
            continue
        bary = np.zeros((npts, 3))
        bary[:, k] = 1 - s
        bary[:, (k + 1) % 3] = s
        sub = rve.batch.subset(sel)
        N = sub.basis(bary)  # (ne, nq, 6, 18)
        # (element, vertex, field, dof) -> (element, field, 6 * vertex + dof)
        ue = u[dm[sel]].reshape(len(sel), 3, 3, 6).transpose(0, 2, 1, 3).reshape(len(sel), 3, 18)
        vals = np.einsum("eqcb,efb->eqfc", N[:, :, 0:3], ue)
        xy = sub.xy
        t = xy[:, (k + 1) % 3] - xy[:, k]
        L = np.hypot(t[:, 0], t[:, 1])
        n = np.column_stack([t[:, 1], -t[:, 0]]) / L[:, None]
        wl = w[None, :] * L[:, None]
        un += np.einsum("eq,eqi,ej->ij", wl, vals[:, :, 0:2, 0], n)
        gun += np.einsum("eq,eqij,ek->ijk", wl, vals[:, :, 0:2, 1:3], n)
        phin += np.einsum("eq,eq,ej->j", wl, vals[:, :, 2, 0], n)
    return un, gun, phin


def _moments_to_state(un, gun, phin, area, center):
    eps = np.array([un[0, 0], un[1, 1], 0.5 * (un[0, 1] + un[1, 0])]) / area
    g = np.array(
        [
            gun[0, 0, 0],
            0.5 * (gun[0, 0, 1] + gun[0, 1, 0]),
            gun[0, 1, 1],
            gun[1, 0, 0],
            0.5 * (gun[1, 0, 1] + gun[1, 1, 0]),
            gun[1, 1, 1],
        ]
    ) / area
    eps = eps - strain_gradient_moment(np.asarray(center, dtype=float)) @ g
    return MacroState(eps, g, phin / area)


def recovered_macro_state(rve: RVE, u) -> MacroState:
    """Macro state seen by the outer RVE boundary.

    The boundary integrals equal box averages of strain, strain gradient and
    potential gradient, with any hole filled by an arbitrary smooth extension.
    """
    un, gun, phin = _boundary_moments(rve, u)
    return _moments_to_state(un, gun, phin, rve.box_area, rve.box_center)


def fluctuation_boundary_averages(rve: RVE, u, macro):
    """Outer-boundary integrals of the fluctuation, divided by the box area.

    Returns (w_i n_j, w_i,j n_k, w_phi n_j) as (2x2, 2x2x2, 2) arrays; all
    vanish under periodic or fully prescribed boundary data.
    """
    w = u - polynomial_dofs(rve.mesh, macro)
    un, gun, phin = _boundary_moments(rve, w)
    return un / rve.box_area, gun / rve.box_area, phin / rve.box_area


# ---------------------------------------------------------------------------
# RVE descriptions and parameter sweeps


SWEEP_VARIABLES = ("intrinsicLength", "modelSize", "porosity", "layout", "stiffnessFactor", "flexoFactor")


@dataclass
class RveSpec:
    side_length: float = 1.0
    holes: list = field(default_factory=list)
    inclusions: list = field(default_factory=list)
    element_size: float = 0.05
    materials: dict = field(default_factory=dict)  # region name -> MaterialParams
    symmetry: str = "auto"

    def build_mesh(self) -> Mesh:
        if self.inclusions:
            return generate_inclusion_rve(self.side_length, self.inclusions, self.element_size, self.symmetry)
        return generate_square_rve(self.side_length, self.holes, self.element_size, self.symmetry)

    def with_(self, **kw):
        d = dict(self.__dict__)
        d.update(kw)
        return RveSpec(**d)


@dataclass
class SweepSpec:
    variable: str
    values: list
    base: RveSpec
    bc: str = PBC
    normalization: str = None  # region whose micro material normalises the report
    layouts: dict = field(default_factory=dict)  # layout name -> hole list
    degree: int = 8

    def __post_init__(self):
        if self.variable not in SWEEP_VARIABLES:
            raise ValueError(f"unknown sweep variable {self.variable!r}; expected one of {SWEEP_VARIABLES}")


def _hole_for_porosity(base: RveSpec, p):
    if p < 0 or p >= 1:
        raise ValueError(f"porosity must lie in [0, 1), got {p}")
    if p == 0:
        return []
    shape = "circle"
    center, orient = (0.0, 0.0), 0.0
    if base.holes:
        h = base.holes[0]
        h = _as_hole(h)
        shape, center, orient = h.shape, h.center, h.orientation
    area = p * base.side_length**2
    size = sqrt(area / pi) if shape == "circle" else sqrt(area / (3 * sqrt(3)))
    return [HoleSpec(shape, center, size, orient)]


def _inclusion_region(materials):
    return "inclusion" if "inclusion" in materials else None


def sweep_case(spec: SweepSpec, value):
    """(mesh, materials) for one sweep value."""
    base = spec.base
    mats = dict(base.materials)
    var = spec.variable
    if var == "intrinsicLength":
        mats = {k: m.with_(l=float(value)) for k, m in mats.items()}
        return base.build_mesh(), mats
    if var == "modelSize":
        mesh = base.build_mesh().scaled(float(value) / base.side_length)
        return center_at_centroid(mesh), mats
    if var == "porosity":
        return base.with_(holes=_hole_for_porosity(base, float(value))).build_mesh(), mats
    if var == "layout":
        if value not in spec.layouts:
            raise KeyError(f"layout {value!r} is not defined")
        return base.with_(holes=list(spec.layouts[value])).build_mesh(), mats
    if var == "stiffnessFactor":
        mats["matrix"] = mats["matrix"].scaled_stiffness(float(value))
        return base.build_mesh(), mats
    # flexoFactor
    region = _inclusion_region(mats)
    names = [region] if region else list(mats)
    for k in names:
        mats[k] = mats[k].scaled_flexo(float(value))
    return base.build_mesh(), mats


def parameter_sweep(spec: SweepSpec, threads=1, on_row=None):
    """One effective_tangents run per value; returns a list of report rows.

    Failed cases keep their row with status ``failed: <reason>`` and NaN
    coefficients. ``on_row(index, row)`` is called as rows complete.
    """
    ref = None
    if spec.normalization:
        if spec.normalization not in spec.base.materials:
            raise KeyError(f"normalization region {spec.normalization!r} has no material")
        ref = reference_report(spec.base.materials[spec.normalization])

    def one(i, value):
        row = {"variable": spec.variable, "value": value}
        try:
            mesh, mats = sweep_case(spec, value)
            tan = effective_tangents(mesh, mats, spec.bc, spec.degree)
            rep = tan.report()
            if ref is not None:
                rep = normalize_report(rep, ref)
            row.update(status="ok", **rep)
        except Exception as exc:  # noqa: BLE001 - reported in the table
            log.error("sweep value %r failed: %s", value, exc)
            row.update(status=f"failed: {exc}", **{k: float("nan") for k in REPORT_LABELS})
        if on_row is not None:
            on_row(i, row)
        return row

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda iv: one(*iv), enumerate(spec.values)))
    else:
        rows = [one(i, v) for i, v in enumerate(spec.values)]
    return rows
