"""Periodic-conforming triangulations of square RVEs and rectangular plates.

Each outer edge of the square is discretised once and the same 1D
distribution is imposed on the opposite edge, so periodic node pairs exist
by construction. When the hole/inclusion layout is mirror symmetric, only a
fundamental region (half or quadrant) is triangulated and then reflected,
which makes the discrete RVE exactly symmetric.
"""
from dataclasses import dataclass, field
from math import ceil, pi, sqrt

import numpy as np
import shapely.affinity
import triangle
from scipy.spatial import cKDTree
from shapely.geometry import Polygon, box
from shapely.ops import unary_union

from .bell import DEGENERACY_TOL

MATRIX_TAG = 0
INCLUSION_TAG = 1


class MeshError(ValueError):
    pass


class BoundaryError(MeshError):
    pass


@dataclass
class Mesh:
    nodes: np.ndarray  # (N, 2)
    triangles: np.ndarray  # (M, 3) counterclockwise
    regions: np.ndarray  # (M,) integer region tags
    region_names: dict = field(default_factory=lambda: {MATRIX_TAG: "matrix"})

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float).reshape(-1, 2)
        self.triangles = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        self.regions = np.asarray(self.regions, dtype=np.int64).reshape(-1)

    @property
    def n_nodes(self):
        return len(self.nodes)

    @property
    def n_elements(self):
        return len(self.triangles)

    @property
    def bbox(self):
        lo = self.nodes.min(axis=0)
        hi = self.nodes.max(axis=0)
        return lo, hi

    def element_coords(self):
        return self.nodes[self.triangles]

    def element_areas(self):
        xy = self.element_coords()
        d1 = xy[:, 1] - xy[:, 0]
        d2 = xy[:, 2] - xy[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def area(self):
        return float(self.element_areas().sum())

    def centroid(self):
        a = self.element_areas()
        c = self.element_coords().mean(axis=1)
        return (a[:, None] * c).sum(axis=0) / a.sum()

    def region_area(self, tag):
        return float(self.element_areas()[self.regions == tag].sum())

    def translated(self, shift):
        return Mesh(self.nodes + np.asarray(shift), self.triangles.copy(), self.regions.copy(), dict(self.region_names))

    def scaled(self, factor):
        return Mesh(self.nodes * factor, self.triangles.copy(), self.regions.copy(), dict(self.region_names))

    def validate(self):
        if self.n_elements == 0:
            raise MeshError("mesh has no triangles")
        if self.triangles.min() < 0 or self.triangles.max() >= self.n_nodes:
            raise MeshError("triangle references an unknown node")
        lo, hi = self.bbox
        scale = float(np.max(hi - lo))
        pairs = cKDTree(self.nodes).query_pairs(1e-9 * scale)
        if pairs:
            raise MeshError(f"duplicate nodes: {sorted(pairs)[:3]}")
        areas = self.element_areas()
        xy = self.element_coords()
        h = np.max(np.linalg.norm(xy - np.roll(xy, 1, axis=1), axis=2), axis=1)
        if np.any(areas <= 0):
            raise MeshError("triangles must be counterclockwise")
        if np.any(areas < DEGENERACY_TOL * h**2):
            raise MeshError("degenerate triangle in mesh")
        missing = set(np.unique(self.regions)) - set(self.region_names)
        if missing:
            raise MeshError(f"region tags without a material name: {sorted(missing)}")
        self._check_conforming()
        return self

    def _check_conforming(self):
        # every edge is shared by at most two triangles, and boundary edges
        # cannot pass through another node (hanging node)
        e = np.sort(self.triangles[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
        uniq, counts = np.unique(e, axis=0, return_counts=True)
        if np.any(counts > 2):
            raise MeshError("non-manifold edge")
        bnd = uniq[counts == 1]
        tree = cKDTree(self.nodes)
        p, q = self.nodes[bnd[:, 0]], self.nodes[bnd[:, 1]]
        mid = 0.5 * (p + q)
        rad = 0.5 * np.linalg.norm(q - p, axis=1)
        for k, cand in enumerate(tree.query_ball_point(mid, rad * (1 - 1e-9))):
            for c in cand:
                if c in bnd[k]:
                    continue
                d = self.nodes[c] - p[k]
                t = q[k] - p[k]
                if abs(d[0] * t[1] - d[1] * t[0]) < 1e-9 * np.dot(t, t):
                    raise MeshError(f"hanging node {c} on edge {tuple(bnd[k])}")


# ---------------------------------------------------------------------------
# geometry


@dataclass
class HoleSpec:
    """Circle (size = radius) or equilateral triangle (size = inradius).

    ``orientation`` is the direction of a triangle apex in degrees, measured
    from the x1 axis.
    """

    shape: str
    center: tuple = (0.0, 0.0)
    size: float = 0.1
    orientation: float = 0.0

    def polygon(self, h):
        cx, cy = self.center
        if self.shape == "circle":
            n = max(32, int(ceil(2 * pi * self.size / h)))
            n = 4 * int(ceil(n / 4))
            q = n // 4
            # first-quadrant samples mirrored, so the polygon is exactly symmetric
            th = np.arange(q) * (2 * pi / n)
            c, s = self.size * np.cos(th), self.size * np.sin(th)
            c[0], s[0] = self.size, 0.0
            pts = np.concatenate(
                [
                    np.column_stack([c, s]),
                    np.column_stack([-s, c]),
                    np.column_stack([-c, -s]),
                    np.column_stack([s, -c]),
                ]
            )
            return Polygon(pts + [cx, cy])
        if self.shape == "triangle":
            r = self.size
            side = 2 * sqrt(3) * r
            per_side = max(12, int(ceil(side / h)))
            ang = np.deg2rad(self.orientation) + np.array([0.0, 2 * pi / 3, 4 * pi / 3])
            verts = 2 * r * np.column_stack([np.cos(ang), np.sin(ang)])
            if self.orientation % 90 == 0:
                verts = np.round(verts, 15)
            pts = []
            for k in range(3):
                a, b = verts[k], verts[(k + 1) % 3]
                for t in np.arange(per_side) / per_side:
                    pts.append(a + t * (b - a))
            return Polygon(np.array(pts) + [cx, cy])
        if self.shape == "rectangle":
            w, hgt = (self.size, self.size) if np.isscalar(self.size) else self.size
            return box(cx - w / 2, cy - hgt / 2, cx + w / 2, cy + hgt / 2)
        raise MeshError(f"unknown hole shape {self.shape!r}")

    def exact_area(self):
        if self.shape == "circle":
            return pi * self.size**2
        if self.shape == "triangle":
            return 3 * sqrt(3) * self.size**2
        w, hgt = (self.size, self.size) if np.isscalar(self.size) else self.size
        return w * hgt


def _as_hole(h):
    if isinstance(h, HoleSpec):
        return h
    h = dict(h)
    return HoleSpec(
        shape=h.get("shape", "circle"),
        center=tuple(h.get("center", (0.0, 0.0))),
        size=h.get("size", h.get("radius", 0.1)),
        orientation=float(h.get("orientation", 0.0)),
    )


def _mirror_x2(geom):
    return shapely.affinity.scale(geom, 1.0, -1.0, origin=(0, 0))


def _mirror_x1(geom):
    return shapely.affinity.scale(geom, -1.0, 1.0, origin=(0, 0))


def _is_symmetric(geom, mirror, tol):
    if geom.is_empty:
        return True
    return geom.symmetric_difference(mirror(geom)).area <= tol


def _detect_symmetry(shapes, a):
    tol = 1e-10 * a * a
    sx = all(_is_symmetric(g, _mirror_x2, tol) for g in shapes)
    sy = all(_is_symmetric(g, _mirror_x1, tol) for g in shapes)
    if sx and sy:
        return "xy"
    if sx:
        return "x"
    if sy:
        return "y"
    return "none"


def _fundamental_box(a, sym):
    return {
        "none": box(-a, -a, a, a),
        "x": box(-a, 0, a, a),  # mirrored across x2 = 0
        "y": box(0, -a, a, a),  # mirrored across x1 = 0
        "xy": box(0, 0, a, a),
    }[sym]


def _rings(poly):
    yield np.asarray(poly.exterior.coords)[:-1]
    for r in poly.interiors:
        yield np.asarray(r.coords)[:-1]


def _iter_polys(geom):
    if geom.is_empty:
        return
    if geom.geom_type == "Polygon":
        yield geom
    elif hasattr(geom, "geoms"):
        for g in geom.geoms:
            yield from _iter_polys(g)


class _PSLG:
    """Vertex/segment accumulator with coordinate de-duplication."""

    def __init__(self, a, n_edge, h):
        self.a = a
        self.h = h
        self.grid = np.linspace(-a, a, n_edge + 1)
        if n_edge % 2 == 0:
            self.grid[n_edge // 2] = 0.0
        self.tol = 1e-9 * a
        self.verts = []
        self.index = {}
        self.segments = set()

    def _key(self, p):
        return (round(p[0] / self.tol), round(p[1] / self.tol))

    def vertex(self, p):
        p = np.asarray(p, dtype=float)
        k = self._key(p)
        if k not in self.index:
            self.index[k] = len(self.verts)
            self.verts.append(p)
        return self.index[k]

    def _snap(self, p):
        p = np.array(p, dtype=float)
        for d in (0, 1):
            for side in (-self.a, self.a):
                if abs(p[d] - side) < self.tol:
                    p[d] = side
            if abs(p[d]) < self.tol:
                p[d] = 0.0
        return p

    def _interior_points(self, p, q):
        # canonical direction so shared segments densify identically
        if tuple(q) < tuple(p):
            return self._interior_points(q, p)[::-1]
        a = self.a
        for d in (0, 1):
            o = 1 - d
            if abs(p[d] - q[d]) < self.tol and abs(abs(p[d]) - a) < self.tol:
                lo, hi = sorted((p[o], q[o]))
                ts = self.grid[(self.grid > lo + self.tol) & (self.grid < hi - self.tol)]
                if p[o] > q[o]:
                    ts = ts[::-1]
                pts = np.zeros((len(ts), 2))
                pts[:, d] = p[d]
                pts[:, o] = ts
                return list(pts)
        n = int(ceil(np.linalg.norm(q - p) / self.h - 1e-9))
        return [p + (q - p) * k / n for k in range(1, n)]

    def add_ring(self, ring):
        ring = [self._snap(p) for p in ring]
        m = len(ring)
        for k in range(m):
            p, q = ring[k], ring[(k + 1) % m]
            chain = [p] + self._interior_points(p, q) + [q]
            ids = [self.vertex(c) for c in chain]
            for i, j in zip(ids[:-1], ids[1:]):
                if i != j:
                    self.segments.add((min(i, j), max(i, j)))


def _triangulate_pieces(pieces, a, h, n_edge):
    """Triangulate tagged polygons covering (part of) the square."""
    pslg = _PSLG(a, n_edge, h)
    for poly, _ in pieces:
        for ring in _rings(poly):
            pslg.add_ring(ring)
    union = unary_union([p for p, _ in pieces])
    holes = []
    for poly in _iter_polys(union):
        for r in poly.interiors:
            holes.append(Polygon(r).representative_point().coords[0])
    regions = []
    for poly, tag in pieces:
        for sub in _iter_polys(poly):
            x, y = sub.representative_point().coords[0]
            regions.append([x, y, tag, 0.0])
    data = dict(
        vertices=np.array(pslg.verts),
        segments=np.array(sorted(pslg.segments)),
        regions=np.array(regions),
    )
    if holes:
        data["holes"] = np.array(holes)
    max_area = sqrt(3) / 4 * h * h
    out = triangle.triangulate(data, f"pq30a{max_area:.12g}YAQ")
    if "triangles" not in out or len(out["triangles"]) == 0:
        raise MeshError("mesher failed to produce triangles")
    tags = out["triangle_attributes"][:, 0].round().astype(int)
    return out["vertices"], out["triangles"], tags


def _reflect(nodes, tris, tags, axis):
    m = nodes.copy()
    m[:, axis] *= -1.0
    return m, tris[:, [0, 2, 1]], tags


def _merge(parts, tol):
    nodes = np.concatenate([p[0] for p in parts])
    offsets = np.cumsum([0] + [len(p[0]) for p in parts[:-1]])
    tris = np.concatenate([p[1] + o for p, o in zip(parts, offsets)])
    tags = np.concatenate([p[2] for p in parts])
    tree = cKDTree(nodes)
    rep = np.arange(len(nodes))
    for i, j in sorted(tree.query_pairs(tol)):
        ri, rj = rep[i], rep[j]
        r = min(ri, rj)
        rep[rep == max(ri, rj)] = r
    uniq, inv = np.unique(rep, return_inverse=True)
    return nodes[uniq], inv[tris], tags


def _square_mesh(side, hole_geoms, inclusion_geoms, h, symmetry):
    a = side / 2.0
    square = box(-a, -a, a, a)
    holes = unary_union(hole_geoms) if hole_geoms else Polygon()
    incl = unary_union(inclusion_geoms) if inclusion_geoms else Polygon()
    if not holes.is_empty:
        if not square.buffer(-1e-9 * side).contains(holes):
            raise MeshError("holes must lie strictly inside the square")
        if sum(g.area for g in hole_geoms) - holes.area > 1e-12 * side * side:
            raise MeshError("holes must be pairwise disjoint")
    domain = square.difference(holes)
    if symmetry == "auto":
        symmetry = _detect_symmetry([holes, incl], a)
    n_edge = max(2, int(ceil(side / h)))
    if symmetry != "none" and n_edge % 2:
        n_edge += 1
    fund = _fundamental_box(a, symmetry)
    dom_f = domain.intersection(fund)
    inc_f = dom_f.intersection(incl) if not incl.is_empty else Polygon()
    mat_f = dom_f.difference(incl) if not incl.is_empty else dom_f
    pieces = [(p, MATRIX_TAG) for p in _iter_polys(mat_f)]
    pieces += [(p, INCLUSION_TAG) for p in _iter_polys(inc_f)]
    nodes, tris, tags = _triangulate_pieces(pieces, a, h, n_edge)
    parts = [(nodes, tris, tags)]
    if symmetry in ("x", "xy"):
        parts.append(_reflect(*parts[0], axis=1))
    if symmetry == "xy":
        base = _merge(parts, 1e-9 * side)
        parts = [base, _reflect(*base, axis=0)]
    elif symmetry == "y":
        parts.append(_reflect(*parts[0], axis=0))
    nodes, tris, tags = _merge(parts, 1e-9 * side) if len(parts) > 1 else parts[0]
    names = {MATRIX_TAG: "matrix"}
    if np.any(tags == INCLUSION_TAG):
        names[INCLUSION_TAG] = "inclusion"
    mesh = Mesh(nodes, tris, tags, names)
    return mesh


def generate_square_rve(side_length=1.0, holes=(), target_element_size=0.1, symmetry="auto", center=True):
    """Square RVE of given side with circular/triangular holes, centred on the origin.

    ``symmetry`` is one of "auto", "none", "x", "y", "xy"; a mirror option
    meshes a fundamental region and reflects it.
    """
    holes = [_as_hole(h) for h in holes]
    geoms = [hl.polygon(target_element_size) for hl in holes]
    mesh = _square_mesh(side_length, geoms, [], target_element_size, symmetry)
    mesh.validate()
    return center_at_centroid(mesh) if center else mesh


def generate_inclusion_rve(side_length=1.0, inclusions=(), target_element_size=0.1, symmetry="auto", center=True):
    """Two-phase square RVE; ``inclusions`` use the HoleSpec shapes.

    Inclusions may touch or cover the whole square.
    """
    incs = [_as_hole(h) for h in inclusions]
    a = side_length / 2
    square = box(-a, -a, a, a)
    geoms = [s.polygon(target_element_size).intersection(square) for s in incs]
    mesh = _square_mesh(side_length, [], geoms, target_element_size, symmetry)
    mesh.validate()
    return center_at_centroid(mesh) if center else mesh


def checkerboard_layout(side_length, n=2, fill=None):
    """Inclusions on the 'black' cells of an n x n checkerboard.

    ``fill`` shrinks each square inclusion relative to its cell.
    """
    cell = side_length / n
    size = cell * (fill if fill else 1.0)
    out = []
    for i in range(n):
        for j in range(n):
            if (i + j) % 2 == 0:
                cx = -side_length / 2 + (i + 0.5) * cell
                cy = -side_length / 2 + (j + 0.5) * cell
                out.append(HoleSpec("rectangle", (cx, cy), size))
    return out


def rectangle_mesh(width, height, nx, ny, origin=(0.0, 0.0)):
    """Structured right-triangle mesh of a rectangle (used for macro plates)."""
    x = origin[0] + np.linspace(0.0, width, nx + 1)
    y = origin[1] + np.linspace(0.0, height, ny + 1)
    X, Y = np.meshgrid(x, y, indexing="ij")
    nodes = np.column_stack([X.ravel(), Y.ravel()])
    idx = np.arange((nx + 1) * (ny + 1)).reshape(nx + 1, ny + 1)
    tris = []
    for i in range(nx):
        for j in range(ny):
            a, b, c, d = idx[i, j], idx[i + 1, j], idx[i + 1, j + 1], idx[i, j + 1]
            if (i + j) % 2 == 0:
                tris += [(a, b, c), (a, c, d)]
            else:
                tris += [(a, b, d), (b, c, d)]
    return Mesh(nodes, np.array(tris), np.zeros(len(tris), dtype=int)).validate()


def center_at_centroid(mesh: Mesh) -> Mesh:
    c = mesh.centroid()
    out = mesh.translated(-c)
    # a second pass removes the remaining round-off
    return out.translated(-out.centroid())


def porosity(mesh: Mesh):
    lo, hi = mesh.bbox
    return 1.0 - mesh.area() / float(np.prod(hi - lo))


def jitter_interior(mesh: Mesh, rng, amplitude=0.1) -> Mesh:
    """Randomly move nodes that lie on no boundary or region interface.

    Displacements are ``amplitude`` times the shortest incident edge, halved
    until every triangle keeps a positive area. Boundary and interface nodes
    stay put, so periodic pairing and the geometry are unchanged.
    """
    tri = mesh.triangles
    e = np.sort(tri[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
    owner = np.repeat(np.arange(mesh.n_elements), 3)
    uniq, inv, counts = np.unique(e, axis=0, return_inverse=True, return_counts=True)
    fixed = np.zeros(mesh.n_nodes, dtype=bool)
    fixed[uniq[counts == 1].ravel()] = True
    tag_lo = np.full(len(uniq), np.iinfo(np.int64).max)
    tag_hi = np.full(len(uniq), np.iinfo(np.int64).min)
    np.minimum.at(tag_lo, inv.ravel(), mesh.regions[owner])
    np.maximum.at(tag_hi, inv.ravel(), mesh.regions[owner])
    fixed[uniq[tag_lo != tag_hi].ravel()] = True
    length = np.linalg.norm(mesh.nodes[uniq[:, 0]] - mesh.nodes[uniq[:, 1]], axis=1)
    hmin = np.full(mesh.n_nodes, np.inf)
    np.minimum.at(hmin, uniq[:, 0], length)
    np.minimum.at(hmin, uniq[:, 1], length)
    step = rng.uniform(-1.0, 1.0, (mesh.n_nodes, 2)) * np.where(fixed, 0.0, hmin)[:, None]
    amp = amplitude
    while amp > 1e-6:
        out = Mesh(mesh.nodes + amp * step, tri.copy(), mesh.regions.copy(), dict(mesh.region_names))
        xy = out.element_coords()
        h = np.max(np.linalg.norm(xy - np.roll(xy, 1, axis=1), axis=2), axis=1)
        if np.all(out.element_areas() > 1e-3 * h**2):
            return out
        amp *= 0.5
    return mesh


# ---------------------------------------------------------------------------
# boundary classification


@dataclass
class BoundarySets:
    left: np.ndarray
    right: np.ndarray
    bottom: np.ndarray
    top: np.ndarray
    corners: np.ndarray  # (bottom-left, bottom-right, top-right, top-left)

    def all_nodes(self):
        return np.unique(np.concatenate([self.left, self.right, self.bottom, self.top]))


def classify_boundary(mesh: Mesh, tol=None) -> BoundarySets:
    lo, hi = mesh.bbox
    L = float(np.max(hi - lo))
    tol = 1e-8 * L if tol is None else tol
    x, y = mesh.nodes[:, 0], mesh.nodes[:, 1]
    left = np.flatnonzero(np.abs(x - lo[0]) <= tol)
    right = np.flatnonzero(np.abs(x - hi[0]) <= tol)
    bottom = np.flatnonzero(np.abs(y - lo[1]) <= tol)
    top = np.flatnonzero(np.abs(y - hi[1]) <= tol)
    left = left[np.argsort(y[left])]
    right = right[np.argsort(y[right])]
    bottom = bottom[np.argsort(x[bottom])]
    top = top[np.argsort(x[top])]
    if len(left) != len(right) or np.any(np.abs(y[left] - y[right]) > tol):
        raise BoundaryError("left and right boundary discretisations are not mirrored; periodic conditions impossible")
    if len(bottom) != len(top) or np.any(np.abs(x[bottom] - x[top]) > tol):
        raise BoundaryError("bottom and top boundary discretisations are not mirrored; periodic conditions impossible")
    corners = np.array([bottom[0], bottom[-1], top[-1], top[0]])
    if not (left[0] == bottom[0] and right[0] == bottom[-1] and right[-1] == top[-1] and left[-1] == top[0]):
        raise BoundaryError("missing corner node")
    return BoundarySets(left, right, bottom, top, corners)


def pair_periodic_nodes(mesh: Mesh, bsets: BoundarySets, tol=None):
    """(left, right) and (bottom, top) node pairs, corners excluded."""
    lo, hi = mesh.bbox
    tol = 1e-8 * float(np.max(hi - lo)) if tol is None else tol
    x = mesh.nodes

    def match(a, b, coord):
        a = np.setdiff1d(a, bsets.corners)
        b = np.setdiff1d(b, bsets.corners)
        if len(a) != len(b):
            raise BoundaryError("unequal number of boundary nodes on opposite edges")
        tree = cKDTree(x[b][:, [coord]])
        d, j = tree.query(x[a][:, [coord]])
        if np.any(d > tol) or len(set(j.tolist())) != len(j):
            raise BoundaryError("unmatched periodic boundary node")
        return np.column_stack([a, b[j]])

    return match(bsets.left, bsets.right, 1), match(bsets.bottom, bsets.top, 0)


# ---------------------------------------------------------------------------
# file format


MESH_HEADER = "flexohom-mesh 1"


def write_mesh(mesh: Mesh, path):
    lines = [MESH_HEADER, f"nodes {mesh.n_nodes}"]
    lines += [f"{i} {x!r} {y!r}" for i, (x, y) in enumerate(mesh.nodes.tolist())]
    lines.append(f"triangles {mesh.n_elements}")
    lines += [f"{i} {a} {b} {c} {t}" for i, ((a, b, c), t) in enumerate(zip(mesh.triangles.tolist(), mesh.regions.tolist()))]
    lines.append(f"regions {len(mesh.region_names)}")
    lines += [f"{t} {name}" for t, name in sorted(mesh.region_names.items())]
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_mesh(path) -> Mesh:
    with open(path) as fh:
        lines = fh.read().split("\n")
    pos = 0

    def err(msg):
        raise MeshError(f"{path}:{pos + 1}: {msg}")

    def next_line():
        nonlocal pos
        while pos < len(lines) and not lines[pos].strip():
            pos += 1
        if pos >= len(lines):
            err("unexpected end of file")
        line = lines[pos]
        pos += 1
        return line.split()

    def section(name):
        tok = next_line()
        if len(tok) != 2 or tok[0] != name:
            pos_err = f"expected '{name} <count>'"
            raise MeshError(f"{path}:{pos}: {pos_err}")
        try:
            return int(tok[1])
        except ValueError:
            raise MeshError(f"{path}:{pos}: bad count {tok[1]!r}") from None

    if " ".join(next_line()) != MESH_HEADER:
        raise MeshError(f"{path}:{pos}: missing '{MESH_HEADER}' header")
    n = section("nodes")
    nodes = np.empty((n, 2))
    seen = set()
    for _ in range(n):
        tok = next_line()
        try:
            i, x1, x2 = int(tok[0]), float(tok[1]), float(tok[2])
        except (ValueError, IndexError):
            raise MeshError(f"{path}:{pos}: malformed node line") from None
        if len(tok) != 3:
            raise MeshError(f"{path}:{pos}: malformed node line")
        if i in seen:
            raise MeshError(f"{path}:{pos}: duplicate node id {i}")
        if not 0 <= i < n:
            raise MeshError(f"{path}:{pos}: node id {i} out of range")
        seen.add(i)
        nodes[i] = x1, x2
    m = section("triangles")
    if m == 0:
        raise MeshError(f"{path}:{pos}: mesh has no triangles")
    tris = np.empty((m, 3), dtype=np.int64)
    tags = np.empty(m, dtype=np.int64)
    seen = set()
    for _ in range(m):
        tok = next_line()
        try:
            vals = [int(t) for t in tok]
        except ValueError:
            raise MeshError(f"{path}:{pos}: malformed triangle line") from None
        if len(vals) != 5:
            raise MeshError(f"{path}:{pos}: malformed triangle line")
        i = vals[0]
        if i in seen or not 0 <= i < m:
            raise MeshError(f"{path}:{pos}: duplicate or out-of-range triangle id {i}")
        if any(not 0 <= v < n for v in vals[1:4]):
            raise MeshError(f"{path}:{pos}: triangle references unknown node")
        seen.add(i)
        tris[i] = vals[1:4]
        tags[i] = vals[4]
    k = section("regions")
    names = {}
    for _ in range(k):
        tok = next_line()
        if len(tok) != 2:
            raise MeshError(f"{path}:{pos}: malformed region line")
        try:
            names[int(tok[0])] = tok[1]
        except ValueError:
            raise MeshError(f"{path}:{pos}: malformed region line") from None
    return Mesh(nodes, tris, tags, names).validate()
