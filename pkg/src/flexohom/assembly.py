"""Global sparse assembly, affine constraint reduction and direct solve."""
import logging
from dataclasses import dataclass

import numpy as np
import pymetis
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .bell import DOFS_PER_ELEMENT, DOFS_PER_NODE, BellBatch
from .constitutive import MaterialMatrices
from .mesh import Mesh
from .quadrature import gauss_legendre_01

log = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-10

FIELD_U1, FIELD_U2, FIELD_PHI = 0, 1, 2


class SolverError(RuntimeError):
    pass


def dof_index(node, field, dof=0):
    """Global index of ``dof`` (0..5) of ``field`` (u1, u2, phi) at ``node``."""
    return DOFS_PER_NODE * np.asarray(node) + 6 * field + dof


def element_dof_map(mesh: Mesh):
    return (DOFS_PER_NODE * mesh.triangles[:, :, None] + np.arange(DOFS_PER_NODE)).reshape(-1, DOFS_PER_ELEMENT)


def material_stack(mesh: Mesh, materials):
    """Per-element 11x11 generalized matrices from a region-name mapping.

    Values may be MaterialMatrices or explicit 11x11 arrays.
    """
    out = np.empty((mesh.n_elements, 11, 11))
    for tag in np.unique(mesh.regions):
        name = mesh.region_names.get(int(tag), str(tag))
        if name not in materials:
            raise KeyError(f"no material given for region {name!r}")
        m = materials[name]
        out[mesh.regions == tag] = m.generalized() if isinstance(m, MaterialMatrices) else np.asarray(m)
    return out


@dataclass
class GlobalSystem:
    K: sp.csr_matrix
    F: np.ndarray
    dof_map: np.ndarray  # (nel, 54)
    batch: BellBatch
    material_stack: np.ndarray

    @property
    def ndof(self):
        return self.K.shape[0]


def assemble(mesh: Mesh, materials, degree=8, batch=None) -> GlobalSystem:
    """Scatter Bell element matrices into a global CSR matrix.

    Micro problems carry no body force or free charge, so F is zero; surface
    terms are added with :func:`edge_load`.
    """
    batch = BellBatch(mesh.element_coords()) if batch is None else batch
    mats = material_stack(mesh, materials)
    Ke = batch.stiffness(mats, degree)
    dm = element_dof_map(mesh)
    ndof = DOFS_PER_NODE * mesh.n_nodes
    rows = np.repeat(dm, DOFS_PER_ELEMENT, axis=1).ravel()
    cols = np.tile(dm, (1, DOFS_PER_ELEMENT)).ravel()
    K = sp.coo_matrix((Ke.ravel(), (rows, cols)), shape=(ndof, ndof)).tocsr()
    K.sum_duplicates()
    return GlobalSystem(K=K, F=np.zeros(ndof), dof_map=dm, batch=batch, material_stack=mats)


def boundary_edges(mesh: Mesh):
    """(element, local edge) for edges on the domain boundary.

    Local edge k joins vertices k and k+1.
    """
    tri = mesh.triangles
    e = np.stack([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]], axis=1).reshape(-1, 2)
    key = np.sort(e, axis=1)
    _, inv, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
    idx = np.flatnonzero(counts[inv.ravel()] == 1)
    return np.column_stack([idx // 3, idx % 3])


def edge_load(sys: GlobalSystem, edges, traction=(0.0, 0.0), charge=0.0, npts=4):
    """Add consistent nodal loads of a constant traction and surface charge.

    F_u += int N_u^T t dG and F_phi -= int N_phi omega dG over ``edges``.
    """
    edges = np.asarray(edges, dtype=int).reshape(-1, 2)
    s, w = gauss_legendre_01(npts)
    t = np.asarray(traction, dtype=float)
    for k in range(3):
        sel = edges[edges[:, 1] == k, 0]
        if len(sel) == 0:
            continue
        bary = np.zeros((npts, 3))
        bary[:, k] = 1.0 - s
        bary[:, (k + 1) % 3] = s
        sub = BellBatch(sys.batch.xy[sel])
        V = sub.value_matrix(bary)  # (ne, nq, 3, 54)
        xy = sys.batch.xy[sel]
        L = np.linalg.norm(xy[:, (k + 1) % 3] - xy[:, k], axis=1)
        load = np.array([t[0], t[1], -charge])
        fe = np.einsum("eqcb,c,q,e->eb", V, load, w, L)
        np.add.at(sys.F, sys.dof_map[sel], fe)
    return sys


@dataclass
class AffineReduction:
    """u = T z + R a, with ``a`` the load parameter vector (e.g. a macro state)."""

    T: sp.csr_matrix
    R: sp.csr_matrix
    free: np.ndarray  # master dof of each column of T

    @property
    def nfree(self):
        return self.T.shape[1]

    def offset(self, a):
        return self.R @ np.asarray(a, dtype=float)

    def expand(self, z, a):
        return self.T @ z + self.offset(a)


def node_nested_dissection(K, dof_nodes):
    """Fill-reducing dof permutation from a nested dissection of the node graph.

    ``dof_nodes[i]`` is the mesh node owning row ``i`` of ``K``. All dofs of a
    node stay contiguous, which keeps the supernodes of the factor dense.
    """
    dof_nodes = np.asarray(dof_nodes)
    uniq, grp = np.unique(dof_nodes, return_inverse=True)
    n = len(uniq)
    P = sp.csr_matrix((np.ones(len(grp)), (np.arange(len(grp)), grp)), shape=(len(grp), n))
    A = (P.T @ (abs(K) @ P)).tocsr()
    A.setdiag(0)
    A.eliminate_zeros()
    if n < 8 or A.nnz == 0:
        node_order = np.arange(n)
    else:
        adj = [A.indices[A.indptr[i] : A.indptr[i + 1]] for i in range(n)]
        node_order = np.asarray(pymetis.nested_dissection(adjacency=adj)[0])
    order = np.argsort(grp, kind="stable")
    starts = np.searchsorted(grp[order], np.arange(n))
    counts = np.bincount(grp, minlength=n)
    return np.concatenate([order[starts[k] : starts[k] + counts[k]] for k in node_order])


class ReducedSolver:
    """Sparse LU of T^T K T, reusable across load vectors.

    The reduced matrix is symmetric quasi-definite (positive displacement
    block, negative potential block), so diagonal pivots in a symmetric
    ordering are safe. A symmetric diagonal scaling first brings every dof,
    including potential and second-derivative dofs, to unit diagonal.
    """

    def __init__(self, sys: GlobalSystem, red: AffineReduction):
        self.sys = sys
        self.red = red
        Kr = (red.T.T @ sys.K @ red.T).tocsc()
        self.K_red = Kr
        d = np.abs(Kr.diagonal())
        d[d == 0] = 1.0
        self.scale = 1.0 / np.sqrt(d)
        S = sp.diags(self.scale)
        Ks = (S @ Kr @ S).tocsc()
        self.perm = node_nested_dissection(Ks, red.free // DOFS_PER_NODE)
        self.iperm = np.empty_like(self.perm)
        self.iperm[self.perm] = np.arange(len(self.perm))
        try:
            self.lu = spla.splu(
                Ks[self.perm][:, self.perm].tocsc(),
                permc_spec="NATURAL",
                diag_pivot_thresh=0.0,
                options=dict(SymmetricMode=True),
            )
        except RuntimeError as exc:
            raise SolverError(f"factorisation failed: {exc}") from exc
        diagU = np.abs(self.lu.U.diagonal())
        if diagU.min() < 1e-14 * diagU.max():
            raise SolverError("reduced system is singular (tiny pivot)")
        self._Ks = Ks

    def _lu_solve(self, b):
        x = np.empty_like(b)
        x[self.perm] = self.lu.solve(b[self.perm])
        return x

    def solve_reduced(self, rhs):
        rhs = np.asarray(rhs, dtype=float)
        s = self.scale if rhs.ndim == 1 else self.scale[:, None]
        b = s * rhs
        x = self._lu_solve(b)
        # one step of iterative refinement covers the missing off-diagonal pivoting
        x += self._lu_solve(b - self._Ks @ x)
        return s * x

    def solve(self, a=None, F=None):
        """Full solution(s) for load parameters ``a`` (vector or (k, m) matrix)."""
        K, T = self.sys.K, self.red.T
        F = self.sys.F if F is None else F
        if a is None:
            a = np.zeros(self.red.R.shape[1])
        a = np.asarray(a, dtype=float)
        r = self.red.R @ a
        if a.ndim == 1:
            rhs = T.T @ (F - K @ r)
        else:
            rhs = T.T @ (F[:, None] - K @ r)
        z = self.solve_reduced(rhs)
        return T @ z + r


def solve(sys: GlobalSystem, red: AffineReduction, a=None, check=True):
    solver = ReducedSolver(sys, red)
    u = solver.solve(a)
    if check:
        res = residual_check(sys, red, a, u)
        if res > RESIDUAL_TOL:
            raise SolverError(f"relative residual {res:.3e} exceeds {RESIDUAL_TOL}")
    return u


def residual_check(sys: GlobalSystem, red: AffineReduction, a, u):
    """||T^T (K u - F)|| / max(||T^T F||, ||T^T K r||); 0 for a zero system."""
    a = np.zeros(red.R.shape[1]) if a is None else np.asarray(a, dtype=float)
    r = red.R @ a
    T = red.T
    F = sys.F if np.ndim(u) == 1 else sys.F[:, None]
    num = np.linalg.norm(T.T @ (sys.K @ u - F), axis=0)
    den = np.maximum(np.linalg.norm(T.T @ sys.F), np.linalg.norm(T.T @ (sys.K @ r), axis=0))
    num = np.atleast_1d(num)
    den = np.atleast_1d(den)
    out = np.where(den > 0, num / np.where(den > 0, den, 1.0), np.where(num > 0, np.inf, 0.0))
    return float(out.max())
