import numpy as np
import pytest
import scipy.sparse as sp

from flexohom.assembly import (
    ReducedSolver,
    SolverError,
    assemble,
    boundary_edges,
    dof_index,
    edge_load,
    material_stack,
    node_nested_dissection,
    residual_check,
    solve,
)
from flexohom.constitutive import TABLE1, build_material_matrices
from flexohom.mesh import classify_boundary, rectangle_mesh
from flexohom.rve_bc import ConstraintSet, build_dbc, eliminate, polynomial_dofs


def mats(m=None):
    return {"matrix": build_material_matrices(m or TABLE1.with_(l=0.3))}


def test_dof_index_layout():
    assert dof_index(0, 0) == 0
    assert dof_index(2, 1, 3) == 36 + 6 + 3
    np.testing.assert_array_equal(dof_index(np.array([0, 1]), 2, 5), [17, 35])


def test_global_matrix_is_symmetric(composite_mesh):
    from flexohom.constitutive import MaterialParams

    inc = build_material_matrices(MaterialParams(lam=10.0, G=5.0, l=0.1))
    sys = assemble(composite_mesh, {**mats(), "inclusion": inc})
    K = sys.K
    assert K.shape == (18 * composite_mesh.n_nodes,) * 2
    assert abs(K - K.T).max() <= 1e-12 * abs(K).max()
    assert not sys.F.any()


def test_material_stack_requires_every_region(composite_mesh):
    with pytest.raises(KeyError, match="inclusion"):
        material_stack(composite_mesh, mats())


def test_linear_field_is_exact_under_dbc(plain_mesh):
    sys = assemble(plain_mesh, mats())
    red = eliminate(build_dbc(plain_mesh, classify_boundary(plain_mesh)), sys.ndof)
    a = np.zeros(11)
    a[[0, 1, 2, 9, 10]] = [1e-3, -2e-3, 5e-4, 0.01, -0.02]
    u = solve(sys, red, a)
    np.testing.assert_allclose(u, polynomial_dofs(plain_mesh, a), atol=1e-12)
    assert residual_check(sys, red, a, u) < 1e-10


def test_multiple_load_vectors_in_one_solve(plain_mesh):
    sys = assemble(plain_mesh, mats())
    red = eliminate(build_dbc(plain_mesh, classify_boundary(plain_mesh)), sys.ndof)
    A = np.random.default_rng(0).normal(size=(11, 3))
    solver = ReducedSolver(sys, red)
    U = solver.solve(A)
    for j in range(3):
        np.testing.assert_allclose(U[:, j], solver.solve(A[:, j]), atol=1e-12)
    assert residual_check(sys, red, A, U) < 1e-10


def test_unconstrained_system_is_reported_singular():
    mesh = rectangle_mesh(1.0, 1.0, 2, 2)
    sys = assemble(mesh, mats())
    empty = ConstraintSet(np.zeros(0, dtype=int), sp.csr_matrix((0, sys.ndof)), np.zeros((0, 11)), np.zeros(0, dtype=int), np.zeros((0, 11)))
    with pytest.raises(SolverError):
        solve(sys, eliminate(empty, sys.ndof), np.zeros(11))


def test_zero_system_has_zero_residual(plain_mesh):
    sys = assemble(plain_mesh, mats())
    red = eliminate(build_dbc(plain_mesh, classify_boundary(plain_mesh)), sys.ndof)
    assert residual_check(sys, red, np.zeros(11), np.zeros(sys.ndof)) == 0.0


def test_nested_dissection_is_a_node_blocked_permutation(circle_mesh):
    sys = assemble(circle_mesh, mats())
    nodes = np.arange(sys.ndof) // 18
    perm = node_nested_dissection(sys.K, nodes)
    np.testing.assert_array_equal(np.sort(perm), np.arange(sys.ndof))
    blocks = nodes[perm].reshape(-1, 18)
    assert (blocks == blocks[:, :1]).all()


def test_boundary_edges_of_a_rectangle():
    mesh = rectangle_mesh(3.0, 2.0, 3, 2)
    e = boundary_edges(mesh)
    assert len(e) == 2 * (3 + 2)
    tri = mesh.triangles
    a = mesh.nodes[tri[e[:, 0], e[:, 1]]]
    b = mesh.nodes[tri[e[:, 0], (e[:, 1] + 1) % 3]]
    assert np.isclose(np.linalg.norm(b - a, axis=1).sum(), 10.0)


def test_edge_load_totals_and_moments():
    mesh = rectangle_mesh(3.0, 2.0, 3, 2)
    sys = assemble(mesh, mats())
    e = boundary_edges(mesh)
    tri = mesh.triangles
    a = mesh.nodes[tri[e[:, 0], e[:, 1]]]
    b = mesh.nodes[tri[e[:, 0], (e[:, 1] + 1) % 3]]
    right = e[(np.abs(a[:, 0] - 3) < 1e-12) & (np.abs(b[:, 0] - 3) < 1e-12)]
    edge_load(sys, right, traction=(0.5, -0.25), charge=0.1)
    F = sys.F.reshape(-1, 3, 6)
    # value shape functions form a partition of unity; total = load x length
    np.testing.assert_allclose(F[:, :, 0].sum(0), [0.5 * 2, -0.25 * 2, -0.1 * 2], atol=1e-13)
    # first moment: int x2 t1 dG over x2 in [0, 2]
    x2 = mesh.nodes[:, 1]
    np.testing.assert_allclose(F[:, 0, 0] @ x2 + F[:, 0, 2].sum(), 0.5 * 2.0, atol=1e-13)
