"""Post-processed field snapshots (per output point)."""
from dataclasses import dataclass

import numpy as np

from .assembly import element_dof_map
from .bell import BellBatch, evaluate_fields
from .constitutive import EPS0

FIELD_GROUPS = (
    ("x", ("x1", "x2")),
    ("u", ("u1", "u2")),
    ("phi", ("phi",)),
    ("eps", ("eps11", "eps22", "eps12")),
    ("g", ("g111", "g112", "g122", "g211", "g212", "g222")),
    ("E", ("E1", "E2")),
    ("sigma", ("sigma11", "sigma22", "sigma12")),
    ("tau", ("tau111", "tau112", "tau122", "tau211", "tau212", "tau222")),
    ("D", ("D1", "D2")),
    ("P", ("P1", "P2")),
    ("H", ("H",)),
)
FIELD_COLUMNS = tuple(c for _, cols in FIELD_GROUPS for c in cols)

_VERTICES = np.eye(3)


@dataclass
class FieldSnapshot:
    """Field values at output points; optional triangle connectivity."""

    name: str
    values: np.ndarray  # (n, len(FIELD_COLUMNS))
    triangles: np.ndarray = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.shape[1] != len(FIELD_COLUMNS):
            raise ValueError(f"snapshot needs {len(FIELD_COLUMNS)} columns")

    @property
    def n_points(self):
        return self.values.shape[0]

    def column(self, name):
        return self.values[:, FIELD_COLUMNS.index(name)]

    def group(self, key):
        cols = dict(FIELD_GROUPS)[key]
        idx = [FIELD_COLUMNS.index(c) for c in cols]
        return self.values[:, idx]

    def polarization_error(self):
        """max |P - (D - eps0 E)|."""
        return float(np.abs(self.group("P") - (self.group("D") - EPS0 * self.group("E"))).max(initial=0.0))


def _flatten(fields):
    cols = []
    for key, names in FIELD_GROUPS:
        v = np.asarray(fields[key], dtype=float)
        cols.append(v.reshape(-1, len(names)))
    return np.hstack(cols)


def snapshot_from_fields(name, fields, triangles=None):
    return FieldSnapshot(name, _flatten(fields), triangles)


def nodal_snapshot(name, mesh, u, mats, batch: BellBatch = None):
    """Fields at mesh nodes; element-wise values averaged over adjacent elements.

    Primary fields and their derivatives are continuous up to first order, so
    only second derivatives and the stresses built from them are smoothed.
    """
    batch = BellBatch(mesh.element_coords()) if batch is None else batch
    dofs = u[element_dof_map(mesh)]
    f = evaluate_fields(batch, dofs, _VERTICES, mats)
    flat = _flatten(f).reshape(mesh.n_elements * 3, -1)
    nodes = mesh.triangles.ravel()
    acc = np.zeros((mesh.n_nodes, flat.shape[1]))
    np.add.at(acc, nodes, flat)
    cnt = np.bincount(nodes, minlength=mesh.n_nodes).astype(float)
    cnt[cnt == 0] = 1.0
    vals = acc / cnt[:, None]
    vals[:, 0:2] = mesh.nodes
    return FieldSnapshot(name, vals, mesh.triangles.copy())
