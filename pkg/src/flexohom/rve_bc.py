"""Macro-imposed boundary data for RVE problems.

The micro field is the Taylor polynomial of the macro state plus a
fluctuation,

    u1   = eps11 x1 + eps12 x2 + 1/2 g111 x1^2 + g112 x1 x2 + 1/2 g122 x2^2 + w1
    u2   = eps12 x1 + eps22 x2 + 1/2 g211 x1^2 + g212 x1 x2 + 1/2 g222 x2^2 + w2
    phi  = -E1 x1 - E2 x2 + w_phi

and :func:`macro_dof_matrix` gives the 18 nodal dofs of the polynomial part
as a linear map of the 11-component macro state. Constraint sets are stored
as linear maps of the macro state too, so one elimination serves every load
case.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .assembly import AffineReduction
from .bell import DOFS_PER_NODE
from .constitutive import N_GEN, SL_E, SL_EPS, SL_G
from .mesh import BoundarySets, Mesh


class ConstraintError(ValueError):
    pass


@dataclass
class MacroState:
    epsM: np.ndarray = field(default_factory=lambda: np.zeros(3))
    gM: np.ndarray = field(default_factory=lambda: np.zeros(6))
    negEM: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        self.epsM = np.asarray(self.epsM, dtype=float).reshape(3)
        self.gM = np.asarray(self.gM, dtype=float).reshape(6)
        self.negEM = np.asarray(self.negEM, dtype=float).reshape(2)

    def as_vector(self):
        return np.concatenate([self.epsM, self.gM, self.negEM])

    @classmethod
    def from_vector(cls, v):
        v = np.asarray(v, dtype=float).reshape(N_GEN)
        return cls(v[SL_EPS], v[SL_G], v[SL_E])

    @classmethod
    def unit(cls, j):
        v = np.zeros(N_GEN)
        v[j] = 1.0
        return cls.from_vector(v)


def _as_vector(macro):
    if isinstance(macro, MacroState):
        return macro.as_vector()
    return np.asarray(macro, dtype=float)


def macro_row_blocks(x1, x2):
    """W (12x3), S (12x6), L (6x2) at a node.

    Rows follow the nodal dof layout (w, w_1, w_2, w_11, w_12, w_22), first
    for u1 then for u2 (W, S) or for phi (L).
    """
    W = np.zeros((12, 3))
    W[0] = (x1, 0.0, x2)
    W[1] = (1.0, 0.0, 0.0)
    W[2] = (0.0, 0.0, 1.0)
    W[6] = (0.0, x2, x1)
    W[7] = (0.0, 0.0, 1.0)
    W[8] = (0.0, 1.0, 0.0)

    quad = np.array(
        [
            [0.5 * x1 * x1, x1 * x2, 0.5 * x2 * x2],
            [x1, x2, 0.0],
            [0.0, x1, x2],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
        ]
    )
    S = np.zeros((12, 6))
    S[0:6, 0:3] = quad
    S[6:12, 3:6] = quad

    L = np.zeros((6, 2))
    L[0] = (x1, x2)
    L[1] = (1.0, 0.0)
    L[2] = (0.0, 1.0)
    return W, S, L


def macro_dof_matrix(x1, x2):
    """G (18x11) so that the 18 polynomial dofs of a node are G @ macro."""
    W, S, L = macro_row_blocks(x1, x2)
    G = np.zeros((DOFS_PER_NODE, N_GEN))
    G[0:12, SL_EPS] = W
    G[0:12, SL_G] = S
    G[12:18, SL_E] = L
    return G


def macro_dof_matrices(points):
    """Stack of G for an (n, 2) array of points, shape (n, 18, 11)."""
    return np.stack([macro_dof_matrix(x, y) for x, y in np.asarray(points, dtype=float)])


def polynomial_dofs(mesh: Mesh, macro):
    """Global dof vector of the macro polynomial field (zero fluctuation)."""
    G = macro_dof_matrices(mesh.nodes)
    return (G @ _as_vector(macro)).ravel()


@dataclass
class ConstraintSet:
    """Affine relations and prescriptions, linear in the macro state.

    relation i:   u[slaves[i]] = sum_j coef[i, j] u[j] + offsets[i] @ macro
    prescription: u[fixed[k]]  = values[k] @ macro
    """

    slaves: np.ndarray
    coef: sp.csr_matrix  # (n_rel, ndof)
    offsets: np.ndarray  # (n_rel, 11)
    fixed: np.ndarray
    values: np.ndarray  # (n_fixed, 11)

    @property
    def n_relations(self):
        return len(self.slaves)

    def prescribed_values(self, macro):
        return self.values @ _as_vector(macro)

    def relation_offsets(self, macro):
        return self.offsets @ _as_vector(macro)

    def check(self):
        if len(np.unique(self.slaves)) != len(self.slaves):
            raise ConstraintError("a dof appears as slave in more than one relation")
        if len(np.unique(self.fixed)) != len(self.fixed):
            raise ConstraintError("a dof is prescribed twice")
        both = np.intersect1d(self.slaves, self.fixed)
        if len(both):
            raise ConstraintError(f"dofs {both[:5].tolist()} are both prescribed and slave")
        return self


def _node_dofs(nodes):
    return (DOFS_PER_NODE * np.asarray(nodes)[:, None] + np.arange(DOFS_PER_NODE)).ravel()


def _prescribe_nodes(mesh: Mesh, nodes):
    nodes = np.asarray(nodes, dtype=int)
    G = macro_dof_matrices(mesh.nodes[nodes])
    return _node_dofs(nodes), G.reshape(-1, N_GEN)


def build_dbc(mesh: Mesh, bsets: BoundarySets) -> ConstraintSet:
    """Every boundary dof follows the macro polynomial (no fluctuation)."""
    fixed, values = _prescribe_nodes(mesh, bsets.all_nodes())
    ndof = DOFS_PER_NODE * mesh.n_nodes
    return ConstraintSet(
        slaves=np.zeros(0, dtype=int),
        coef=sp.csr_matrix((0, ndof)),
        offsets=np.zeros((0, N_GEN)),
        fixed=fixed,
        values=values,
    ).check()


def build_pbc(mesh: Mesh, bsets: BoundarySets, pairs) -> ConstraintSet:
    """Periodic fluctuations; right/top dofs are slaves of left/bottom ones.

    All 18 dofs of the four corner nodes are prescribed from the macro
    polynomial, which removes rigid motions and the potential constant.
    """
    lr, bt = pairs
    pairs = np.vstack([np.asarray(lr, dtype=int).reshape(-1, 2), np.asarray(bt, dtype=int).reshape(-1, 2)])
    pairs = pairs[np.argsort(pairs[:, 1], kind="stable")]
    if np.intersect1d(pairs[:, 1], bsets.corners).size or np.intersect1d(pairs[:, 0], bsets.corners).size:
        raise ConstraintError("corner nodes must not appear in periodic pairs")
    masters, slaves = pairs[:, 0], pairs[:, 1]
    Gm = macro_dof_matrices(mesh.nodes[masters])
    Gs = macro_dof_matrices(mesh.nodes[slaves])
    sd = _node_dofs(slaves)
    md = _node_dofs(masters)
    ndof = DOFS_PER_NODE * mesh.n_nodes
    coef = sp.csr_matrix((np.ones(len(sd)), (np.arange(len(sd)), md)), shape=(len(sd), ndof))
    fixed, values = _prescribe_nodes(mesh, bsets.corners)
    return ConstraintSet(
        slaves=sd,
        coef=coef,
        offsets=(Gs - Gm).reshape(-1, N_GEN),
        fixed=fixed,
        values=values,
    ).check()


def eliminate(cs: ConstraintSet, ndof: int) -> AffineReduction:
    """Resolve relations into u = T z + R a.

    Chains (a master that is itself a slave) are resolved level by level;
    cyclic relations raise ConstraintError.
    """
    cs.check()
    if np.any(cs.slaves >= ndof) or np.any(cs.fixed >= ndof):
        raise ConstraintError("constraint refers to a dof outside the system")
    kind = np.zeros(ndof, dtype=int)  # 0 free, 1 fixed, 2 slave
    kind[cs.fixed] = 1
    kind[cs.slaves] = 2
    free = np.flatnonzero(kind == 0)

    T = sp.csr_matrix((np.ones(len(free)), (free, np.arange(len(free)))), shape=(ndof, len(free)))
    R = np.zeros((ndof, cs.values.shape[1]))
    R[cs.fixed] = cs.values

    coef = cs.coef.tocsr()
    resolved = kind != 2
    pending = np.arange(cs.n_relations)
    while len(pending):
        rows = coef[pending]
        deps_ok = np.array(
            [resolved[rows.indices[rows.indptr[i] : rows.indptr[i + 1]]].all() for i in range(len(pending))],
            dtype=bool,
        )
        if not deps_ok.any():
            raise ConstraintError("cyclic slave/master relations")
        ready = pending[deps_ok]
        C = coef[ready]
        s = cs.slaves[ready]
        R[s] = C @ R + cs.offsets[ready]
        E = sp.csr_matrix((np.ones(len(s)), (s, np.arange(len(s)))), shape=(ndof, len(s)))
        T = (T + E @ (C @ T)).tocsr()
        resolved[s] = True
        pending = pending[~deps_ok]
    return AffineReduction(T=T.tocsr(), R=sp.csr_matrix(R), free=free)
