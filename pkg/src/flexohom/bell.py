"""Bell C1 triangle.

The reduced quintic is obtained from the 21-dof Argyris quintic by replacing
each mid-side normal-derivative dof with the cubic Hermite interpolant of the
normal derivative along that edge. What remains are 6 dofs per vertex::

    (w, w_1, w_2, w_11, w_12, w_22)

Each node carries u1, u2 and phi with this layout, giving 18 dofs per node
and 54 per element, ordered node-major: ``18 * node + 6 * field + dof``.

All computations are batched over elements. Polynomials are written in the
reference-triangle coordinates; derivative functionals are mapped through the
affine Jacobian and scaled by h (longest edge). The 21-dof reference moment
matrix is inverted once; per element only the jet transform and the three
mid-side constraints are applied, which keeps round-off at the level of the
Jacobian condition number.
"""
from dataclasses import dataclass

import numpy as np

from .constitutive import EPS0, GeneralizedStrainState, MaterialMatrices
from .quadrature import triangle_quadrature

DEGENERACY_TOL = 1e-12
DOFS_PER_NODE = 18
DOFS_PER_ELEMENT = 54
CHUNK = 512  # elements per vectorised block

# (a, b) exponents of the 21 quintic monomials xi^a eta^b
_EXPONENTS = np.array([(a, n - a) for n in range(6) for a in range(n, -1, -1)])
# derivative multi-indices: value, d1, d2, d11, d12, d22
_DERIVS = np.array([(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)])
_ORDER = _DERIVS.sum(axis=1)

_U1 = np.array([18 * i + d for i in range(3) for d in range(6)])
_U2 = _U1 + 6
_PHI = _U1 + 12
U_DOFS = np.array([18 * i + j for i in range(3) for j in range(12)])
PHI_DOFS = _PHI


class DegenerateTriangleError(ValueError):
    pass


def _falling(n, k):
    # n (n-1) ... (n-k+1) for k in {0, 1, 2}; vanishes when k > n
    return np.where(k == 0, 1.0, np.where(k == 1, n, n * (n - 1))).astype(float)


_COEF = _falling(_EXPONENTS[:, 0][None, :], _DERIVS[:, 0][:, None]) * _falling(
    _EXPONENTS[:, 1][None, :], _DERIVS[:, 1][:, None]
)
_PA = np.maximum(_EXPONENTS[:, 0][None, :] - _DERIVS[:, 0][:, None], 0)
_PB = np.maximum(_EXPONENTS[:, 1][None, :] - _DERIVS[:, 1][:, None], 0)


def monomial_derivatives(xi, eta):
    """Value and derivatives (up to order 2) of the 21 quintic monomials.

    Returns array of shape ``xi.shape + (6, 21)``.
    """
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    xp = xi[..., None] ** np.arange(6)
    ep = eta[..., None] ** np.arange(6)
    return _COEF * xp[..., _PA] * ep[..., _PB]


def _check_geometry(xy):
    e0 = xy[:, 1] - xy[:, 0]
    e1 = xy[:, 2] - xy[:, 1]
    e2 = xy[:, 0] - xy[:, 2]
    area = 0.5 * (e0[:, 0] * (-e2[:, 1]) - e0[:, 1] * (-e2[:, 0]))
    lengths = np.stack([np.hypot(*e.T) for e in (e0, e1, e2)], axis=1)
    h = lengths.max(axis=1)
    bad = np.abs(area) < DEGENERACY_TOL * h**2
    if np.any(bad):
        raise DegenerateTriangleError(f"degenerate triangle(s) at index {np.flatnonzero(bad)[:5].tolist()}")
    if np.any(area < 0):
        raise DegenerateTriangleError("triangle vertices must be counterclockwise")
    return area, h


# reference triangle: vertices (0,0), (1,0), (0,1); edge k joins vertex k to k+1
_REF_VERTS = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


def _ref_edges():
    t, n, mid = [], [], []
    for k in range(3):
        e = _REF_VERTS[(k + 1) % 3] - _REF_VERTS[k]
        e = e / np.linalg.norm(e)
        t.append(e)
        n.append([e[1], -e[0]])
        mid.append(0.5 * (_REF_VERTS[k] + _REF_VERTS[(k + 1) % 3]))
    return np.array(t), np.array(n), np.array(mid)


_REF_T, _REF_N, _REF_MID = _ref_edges()


def _reference_argyris():
    """Inverse moment matrix of the 21-dof quintic on the reference triangle.

    Functionals: vertex jets (18), then the reference-normal derivative at
    each mid-side (3). Also returns the mid-side tangential derivative as a
    row over the vertex jets (it does not depend on the mid-side dofs).
    """
    A = np.empty((21, 21))
    A[:18] = monomial_derivatives(_REF_VERTS[:, 0], _REF_VERTS[:, 1]).reshape(18, 21)
    Dm = monomial_derivatives(_REF_MID[:, 0], _REF_MID[:, 1])  # (3, 6, 21)
    A[18:] = np.einsum("kd,kdm->km", _REF_N, Dm[:, 1:3])
    C = np.linalg.solve(A, np.eye(21))
    C += np.linalg.solve(A, np.eye(21) - A @ C)
    W = np.einsum("kd,kdm->km", _REF_T, Dm[:, 1:3]) @ C[:, :18]
    return C, W


_C_REF, _W_TAN = _reference_argyris()


def _jet_transform(G):
    """(nel, 6, 6) map from reference-coordinate jets to scaled physical jets.

    ``G`` is h * J^-T, acting on reference gradients; second derivatives
    transform as G H G^T, written out on the condensed (11, 12, 22) entries.
    The map is a representation, so its inverse is ``_jet_transform(inv(G))``.
    """
    nel = G.shape[0]
    T = np.zeros((nel, 6, 6))
    T[:, 0, 0] = 1.0
    T[:, 1:3, 1:3] = G
    for row, (a, b) in enumerate(((0, 0), (0, 1), (1, 1))):
        T[:, 3 + row, 3] = G[:, a, 0] * G[:, b, 0]
        T[:, 3 + row, 4] = G[:, a, 0] * G[:, b, 1] + G[:, a, 1] * G[:, b, 0]
        T[:, 3 + row, 5] = G[:, a, 1] * G[:, b, 1]
    return T


class BellBatch:
    """Bell basis for a batch of triangles, coordinates of shape (nel, 3, 2)."""

    def __init__(self, xy):
        xy = np.asarray(xy, dtype=float)
        if xy.ndim == 2:
            xy = xy[None]
        self.xy = xy
        self.area, self.h = _check_geometry(xy)
        J = np.stack([xy[:, 1] - xy[:, 0], xy[:, 2] - xy[:, 0]], axis=2)
        Jinv = np.linalg.inv(J)
        G = self.h[:, None, None] * Jinv.transpose(0, 2, 1)
        self.jet = _jet_transform(G)
        self.coeffs = self._bell_coefficients(G, _jet_transform(np.linalg.inv(G)))

    @property
    def nel(self):
        return self.xy.shape[0]

    def _bell_coefficients(self, G, Tinv):
        """Monomial coefficients (nel, 21, 18) of the 18 Bell basis functions.

        Physical vertex dofs map to reference jets through ``Tinv``; each
        mid-side reference-normal derivative follows from the cubic Hermite
        constraint on the physical normal derivative, after removing its
        tangential part (fixed by the vertex jets).
        """
        xy = self.xy
        nel = xy.shape[0]
        R = np.zeros((nel, 21, 18))
        for v in range(3):
            R[:, 6 * v : 6 * v + 6, 6 * v : 6 * v + 6] = Tinv
        for k in range(3):
            a, b = k, (k + 1) % 3
            edge = (xy[:, b] - xy[:, a]) / self.h[:, None]
            L = np.hypot(edge[:, 0], edge[:, 1])
            t = edge / L[:, None]
            n = np.column_stack([t[:, 1], -t[:, 0]])
            # cubic Hermite value of the physical normal derivative at the mid-point
            row = np.zeros((nel, 18))
            for vert, sgn in ((a, 1.0), (b, -1.0)):
                base = 6 * vert
                row[:, base + 1] += 0.5 * n[:, 0]
                row[:, base + 2] += 0.5 * n[:, 1]
                s = sgn * L / 8.0
                row[:, base + 3] += s * t[:, 0] * n[:, 0]
                row[:, base + 4] += s * (t[:, 0] * n[:, 1] + t[:, 1] * n[:, 0])
                row[:, base + 5] += s * t[:, 1] * n[:, 1]
            # n . (G grad_ref) = alpha * d_nref + beta * d_tref
            v = np.einsum("eij,ei->ej", G, n)
            alpha, beta = v @ _REF_N[k], v @ _REF_T[k]
            tan = _W_TAN[k] @ R[:, :18]  # (nel, 18)
            R[:, 18 + k] = (row - beta[:, None] * tan) / alpha[:, None]
        return _C_REF @ R

    def physical_points(self, bary):
        bary = np.atleast_2d(np.asarray(bary, dtype=float))
        return np.einsum("qi,eid->eqd", bary, self.xy)

    def basis(self, bary):
        """Basis functions and their physical derivatives at barycentric points.

        Returns (nel, nq, 6, 18): axis 2 is (value, d1, d2, d11, d12, d22),
        axis 3 the basis function of vertex ``k // 6`` and dof ``k % 6``.
        """
        bary = np.atleast_2d(np.asarray(bary, dtype=float))
        P = monomial_derivatives(bary[:, 1], bary[:, 2])  # (nq, 6, 21), reference jets
        N = np.einsum("qjm,emk->eqjk", P, self.coeffs)
        N = np.einsum("eij,eqjk->eqik", self.jet, N)
        dof_order = np.tile(_ORDER, 3)
        h = self.h[:, None, None, None]
        scale = h ** (dof_order[None, None, None, :] - _ORDER[None, None, :, None])
        return N * scale

    def generalized_B(self, bary):
        """(nel, nq, 11, 54) map from element dofs to (eps, g, negE)."""
        N = self.basis(bary)
        nel, nq = N.shape[:2]
        B = np.zeros((nel, nq, 11, DOFS_PER_ELEMENT))
        B[:, :, 0, _U1] = N[:, :, 1]
        B[:, :, 1, _U2] = N[:, :, 2]
        B[:, :, 2, _U1] = 0.5 * N[:, :, 2]
        B[:, :, 2, _U2] = 0.5 * N[:, :, 1]
        B[:, :, 3:6, _U1] = N[:, :, 3:6]
        B[:, :, 6:9, _U2] = N[:, :, 3:6]
        B[:, :, 9, _PHI] = N[:, :, 1]
        B[:, :, 10, _PHI] = N[:, :, 2]
        return B

    def value_matrix(self, bary):
        """(nel, nq, 3, 54) map from element dofs to (u1, u2, phi)."""
        N = self.basis(bary)
        nel, nq = N.shape[:2]
        V = np.zeros((nel, nq, 3, DOFS_PER_ELEMENT))
        V[:, :, 0, _U1] = N[:, :, 0]
        V[:, :, 1, _U2] = N[:, :, 0]
        V[:, :, 2, _PHI] = N[:, :, 0]
        return V

    def subset(self, idx):
        out = object.__new__(BellBatch)
        out.xy, out.area, out.h = self.xy[idx], self.area[idx], self.h[idx]
        out.jet, out.coeffs = self.jet[idx], self.coeffs[idx]
        return out

    def chunks(self, size=None):
        size = CHUNK if size is None else size
        for start in range(0, self.nel, size):
            idx = slice(start, min(start + size, self.nel))
            yield idx, self.subset(idx)

    def stiffness(self, materials, degree=8):
        """Element matrices (nel, 54, 54) for per-element 11x11 generalized laws."""
        rule = triangle_quadrature(degree)
        Mg = np.asarray(materials, dtype=float)
        if Mg.ndim == 2:
            Mg = np.broadcast_to(Mg, (self.nel, 11, 11))
        K = np.empty((self.nel, DOFS_PER_ELEMENT, DOFS_PER_ELEMENT))
        for idx, sub in self.chunks():
            B = sub.generalized_B(rule.points)
            n = sub.nel
            w = rule.weights[None, :] * sub.area[:, None]
            DB = np.matmul(Mg[idx][:, None], B)
            Bw = B * w[:, :, None, None]
            K[idx] = np.matmul(
                Bw.reshape(n, -1, DOFS_PER_ELEMENT).transpose(0, 2, 1),
                DB.reshape(n, -1, DOFS_PER_ELEMENT),
            )
        return 0.5 * (K + K.transpose(0, 2, 1))


# ---------------------------------------------------------------------------
# single-element interface


@dataclass
class BellBasisEval:
    """Basis at one point: ``values[c, k]``, c in (value, d1, d2, d11, d12, d22)."""

    values: np.ndarray  # (6, 18)

    @property
    def N(self):
        return self.values[0]

    @property
    def grad(self):
        return self.values[1:3]

    @property
    def hessian(self):
        return self.values[3:6]


@dataclass
class KinematicMatrices:
    Nu: np.ndarray  # 2x36
    Bu: np.ndarray  # 3x36
    Hu: np.ndarray  # 6x36
    Nphi: np.ndarray  # 1x18
    Bphi: np.ndarray  # 2x18


def _tri(tri):
    tri = np.asarray(tri, dtype=float)
    if tri.shape != (3, 2):
        raise ValueError("triangle must be given as a (3, 2) array of vertices")
    return BellBatch(tri[None])


def bell_basis(bary, tri) -> BellBasisEval:
    return BellBasisEval(_tri(tri).basis(np.asarray(bary)[None])[0, 0])


def kinematic_matrices(bary, tri) -> KinematicMatrices:
    batch = _tri(tri)
    B = batch.generalized_B(np.asarray(bary)[None])[0, 0]
    V = batch.value_matrix(np.asarray(bary)[None])[0, 0]
    return KinematicMatrices(
        Nu=V[0:2][:, U_DOFS],
        Bu=B[0:3][:, U_DOFS],
        Hu=B[3:9][:, U_DOFS],
        Nphi=V[2:3][:, PHI_DOFS],
        Bphi=B[9:11][:, PHI_DOFS],
    )


def element_matrices(tri, m: MaterialMatrices, degree=8):
    """Blocks (Kuu 36x36, Kuphi 36x18, Kphiu 18x36, Kphiphi 18x18)."""
    K = _tri(tri).stiffness(m.generalized(), degree)[0]
    return (
        K[np.ix_(U_DOFS, U_DOFS)],
        K[np.ix_(U_DOFS, PHI_DOFS)],
        K[np.ix_(PHI_DOFS, U_DOFS)],
        K[np.ix_(PHI_DOFS, PHI_DOFS)],
    )


def element_matrix(tri, m: MaterialMatrices, degree=8):
    """Full 54x54 element matrix in node-major dof order."""
    return _tri(tri).stiffness(m.generalized(), degree)[0]


def evaluate_fields(batch: BellBatch, dofs, bary, mats):
    """Field values at barycentric points of each element.

    ``dofs`` is (nel, 54); ``mats`` is a MaterialMatrices, an 11x11 or
    (nel, 11, 11) array, or a per-element sequence of either. Returns a dict of arrays with leading shape (nel, nq).
    """
    dofs = np.asarray(dofs, dtype=float).reshape(batch.nel, DOFS_PER_ELEMENT)
    B = batch.generalized_B(bary)
    V = batch.value_matrix(bary)
    s = np.einsum("eqib,eb->eqi", B, dofs)
    vals = np.einsum("eqib,eb->eqi", V, dofs)
    if isinstance(mats, MaterialMatrices):
        Mg = np.broadcast_to(mats.generalized(), (batch.nel, 11, 11))
    elif isinstance(mats, np.ndarray):
        Mg = np.broadcast_to(mats, (batch.nel, 11, 11))
    else:
        Mg = np.stack([m.generalized() if isinstance(m, MaterialMatrices) else np.asarray(m) for m in mats])
    conj = np.einsum("eij,eqj->eqi", Mg, s)
    eps, g, negE = s[..., 0:3], s[..., 3:9], s[..., 9:11]
    D = conj[..., 9:11]
    return {
        "x": batch.physical_points(bary),
        "u": vals[..., 0:2],
        "phi": vals[..., 2],
        "eps": eps,
        "g": g,
        "E": -negE,
        "sigma": conj[..., 0:3],
        "tau": conj[..., 3:9],
        "D": D,
        "P": D + EPS0 * negE,
        "H": 0.5 * np.einsum("eqi,eqi->eq", s, conj),
    }


def element_fields(tri, nodal, bary, m: MaterialMatrices):
    """Fields of one element at one barycentric point.

    ``nodal`` is the 54-vector of element dofs.
    """
    bary = np.asarray(bary, dtype=float)
    if np.any(bary < -1e-12) or abs(bary.sum() - 1.0) > 1e-12:
        raise ValueError("point lies outside the element")
    f = evaluate_fields(_tri(tri), np.asarray(nodal)[None], bary[None], m)
    return {k: v[0, 0] for k, v in f.items()}


def nodal_dofs_from_function(points, fn):
    """Per-node 6-vectors (w, w_1, w_2, w_11, w_12, w_22) from a callable.

    ``fn(x, y)`` must return that 6-tuple.
    """
    return np.array([fn(x, y) for x, y in np.asarray(points)], dtype=float)


def state_at(fields, e, q):
    """GeneralizedStrainState from an evaluate_fields result."""
    return GeneralizedStrainState(fields["eps"][e, q], fields["g"][e, q], -fields["E"][e, q])

