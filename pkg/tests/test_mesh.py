import numpy as np
import pytest

from flexohom.mesh import (
    BoundaryError,
    HoleSpec,
    Mesh,
    MeshError,
    center_at_centroid,
    checkerboard_layout,
    classify_boundary,
    generate_inclusion_rve,
    generate_square_rve,
    jitter_interior,
    pair_periodic_nodes,
    porosity,
    read_mesh,
    rectangle_mesh,
    write_mesh,
)


def min_angle_deg(mesh):
    xy = mesh.element_coords()
    out = []
    for k in range(3):
        p, q = xy[:, (k + 1) % 3] - xy[:, k], xy[:, (k + 2) % 3] - xy[:, k]
        c = np.einsum("ed,ed->e", p, q) / np.linalg.norm(p, axis=1) / np.linalg.norm(q, axis=1)
        out.append(np.degrees(np.arccos(np.clip(c, -1, 1))))
    return np.min(out)


def test_plain_square(plain_mesh):
    m = plain_mesh
    assert abs(m.area() - 1.0) < 1e-12
    np.testing.assert_allclose(m.centroid(), 0.0, atol=1e-14)
    assert np.all(m.element_areas() > 0)
    assert min_angle_deg(m) > 29.0


def test_circle_hole_porosity_and_symmetry(circle_mesh):
    m = circle_mesh
    assert abs(porosity(m) - np.pi * 0.04) < 5e-3
    # xy-symmetric layout: the node set is invariant under both mirrors
    pts = {tuple(np.round(p, 12)) for p in m.nodes}
    assert all((round(-x, 12) + 0.0, y) in pts for x, y in pts)
    assert all((x, round(-y, 12) + 0.0) in pts for x, y in pts)


def test_triangle_hole_geometry():
    h = HoleSpec("triangle", (0.0, 0.0), 0.2, orientation=0.0)
    m = generate_square_rve(1.0, [h], 0.1, center=False)
    assert abs((1.0 - m.area()) - h.exact_area()) < 1e-12
    # apex on +x1, flat side facing -x1: mirror symmetric about x2 = 0 only
    pts = {tuple(np.round(p, 12)) for p in m.nodes}
    assert all((x, round(-y, 12) + 0.0) in pts for x, y in pts)
    assert not all((round(-x, 12) + 0.0, y) in pts for x, y in pts)


def test_centering_moves_offset_hole_rve_to_centroid():
    m = generate_square_rve(1.0, [HoleSpec("circle", (0.2, 0.1), 0.15)], 0.1)
    np.testing.assert_allclose(m.centroid(), 0.0, atol=1e-15)
    lo, hi = m.bbox
    assert lo[0] > -0.5 and hi[0] > 0.5 and lo[1] > -0.5  # box shifted toward the hole side
    assert center_at_centroid(m).centroid() == pytest.approx([0, 0], abs=1e-15)


def test_inclusion_rve_regions(composite_mesh):
    m = composite_mesh
    assert m.region_names == {0: "matrix", 1: "inclusion"}
    assert abs(m.region_area(1) - 3 * np.sqrt(3) * 0.04) < 1e-12
    assert abs(m.area() - 1.0) < 1e-12


def test_checkerboard_layout():
    incs = checkerboard_layout(1.0, 2)
    assert len(incs) == 2
    m = generate_inclusion_rve(1.0, checkerboard_layout(1.0, 2, fill=0.8), 0.1)
    assert abs(m.region_area(1) - 2 * 0.16) < 1e-12


@pytest.mark.parametrize("sym", ["none", "x", "y", "xy"])
def test_periodic_pairs_exist_for_every_symmetry_mode(sym):
    m = generate_square_rve(1.0, [HoleSpec("circle", (0.1, -0.05), 0.15)], 0.12, symmetry=sym if sym == "none" else "none")
    b = classify_boundary(m)
    lr, bt = pair_periodic_nodes(m, b)
    np.testing.assert_allclose(m.nodes[lr[:, 0], 1], m.nodes[lr[:, 1], 1], atol=1e-12)
    np.testing.assert_allclose(m.nodes[bt[:, 0], 0], m.nodes[bt[:, 1], 0], atol=1e-12)
    assert len(b.corners) == 4


def test_corners_excluded_from_pairs(plain_mesh):
    b = classify_boundary(plain_mesh)
    lr, bt = pair_periodic_nodes(plain_mesh, b)
    assert not np.intersect1d(np.concatenate([lr.ravel(), bt.ravel()]), b.corners).size
    lo, hi = plain_mesh.bbox
    np.testing.assert_allclose(plain_mesh.nodes[b.corners], [[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]])


def test_unmirrored_boundary_is_rejected():
    m = rectangle_mesh(1.0, 1.0, 2, 2)
    nodes = m.nodes.copy()
    nodes[(np.abs(nodes[:, 0] - 1.0) < 1e-12) & (np.abs(nodes[:, 1] - 0.5) < 1e-12), 1] = 0.4
    with pytest.raises(BoundaryError):
        classify_boundary(Mesh(nodes, m.triangles, m.regions))


def test_holes_must_fit_and_be_disjoint():
    with pytest.raises(MeshError):
        generate_square_rve(1.0, [HoleSpec("circle", (0.0, 0.0), 0.6)], 0.1)
    with pytest.raises(MeshError):
        generate_square_rve(1.0, [HoleSpec("circle", (0.0, 0.0), 0.2), HoleSpec("circle", (0.1, 0.0), 0.2)], 0.1)
    with pytest.raises(MeshError):
        generate_square_rve(1.0, [HoleSpec("hexagon", (0.0, 0.0), 0.2)], 0.1)


def test_rectangle_mesh():
    m = rectangle_mesh(3.0, 2.0, 3, 2, origin=(1.0, 1.0))
    assert m.n_elements == 12 and m.n_nodes == 12
    assert abs(m.area() - 6.0) < 1e-12


def test_scaling_and_translation(plain_mesh):
    s = plain_mesh.scaled(0.1)
    assert abs(s.area() - 0.01) < 1e-14
    t = plain_mesh.translated([1.0, 2.0])
    np.testing.assert_allclose(t.centroid(), [1.0, 2.0], atol=1e-14)


def test_jitter_keeps_boundary_and_interfaces(composite_mesh):
    j = jitter_interior(composite_mesh, np.random.default_rng(0), 0.2)
    moved = np.any(j.nodes != composite_mesh.nodes, axis=1)
    assert moved.any()
    b = classify_boundary(composite_mesh)
    assert not moved[b.all_nodes()].any()
    assert abs(j.region_area(1) - composite_mesh.region_area(1)) < 1e-14
    np.testing.assert_allclose(j.centroid(), composite_mesh.centroid(), atol=1e-14)
    pair_periodic_nodes(j, classify_boundary(j))
    j.validate()


def test_mesh_round_trip(tmp_path, composite_mesh):
    p = tmp_path / "rve.mesh"
    write_mesh(composite_mesh, p)
    m = read_mesh(p)
    np.testing.assert_array_equal(m.nodes, composite_mesh.nodes)
    np.testing.assert_array_equal(m.triangles, composite_mesh.triangles)
    np.testing.assert_array_equal(m.regions, composite_mesh.regions)
    assert m.region_names == composite_mesh.region_names
    write_mesh(m, tmp_path / "again.mesh")
    assert (tmp_path / "again.mesh").read_bytes() == p.read_bytes()


GOOD = """flexohom-mesh 1
nodes 3
0 0.0 0.0
1 1.0 0.0
2 0.0 1.0
triangles 1
0 0 1 2 0
regions 1
0 matrix
"""


@pytest.mark.parametrize(
    "text, match",
    [
        (GOOD.replace("flexohom-mesh 1", "other 1"), "header"),
        (GOOD.replace("nodes 3", "nodes x"), "bad count"),
        (GOOD.replace("1 1.0 0.0", "1 1.0"), "malformed node"),
        (GOOD.replace("1 1.0 0.0", "0 1.0 0.0"), "duplicate node"),
        (GOOD.replace("0 0 1 2 0", "0 0 1 7 0"), "unknown node"),
        (GOOD.replace("0 0 1 2 0", "0 0 2 1 0"), "counterclockwise"),
        (GOOD.replace("triangles 1\n0 0 1 2 0\n", "triangles 0\n"), "no triangles"),
        (GOOD.replace("0 matrix", "3 matrix"), "region tags"),
        (GOOD.split("regions")[0], "end of file"),
        (GOOD.replace("2 0.0 1.0", "2 2.0 0.0"), "degenerate|counterclockwise"),
    ],
)
def test_read_mesh_errors(tmp_path, text, match):
    p = tmp_path / "bad.mesh"
    p.write_text(text)
    with pytest.raises(MeshError, match=match):
        read_mesh(p)


def test_read_mesh_reports_line_numbers(tmp_path):
    p = tmp_path / "bad.mesh"
    p.write_text(GOOD.replace("1 1.0 0.0", "1 1.0"))
    with pytest.raises(MeshError, match=r"bad.mesh:4:"):
        read_mesh(p)


def test_validate_detects_duplicates_and_hanging_nodes():
    nodes = np.array([[0, 0], [1, 0], [0, 1], [1, 1], [0.5, 0.5]], dtype=float)
    with pytest.raises(MeshError, match="hanging"):
        Mesh(nodes, [[0, 1, 2], [1, 3, 4]], [0, 0]).validate()
    with pytest.raises(MeshError, match="duplicate"):
        Mesh(np.vstack([nodes[:3], nodes[:1]]), [[0, 1, 2], [3, 1, 2]], [0, 0]).validate()
