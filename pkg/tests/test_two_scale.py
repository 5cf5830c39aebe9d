import numpy as np
import pytest

from flexohom.constitutive import TABLE1, build_material_matrices
from flexohom.homogenization import RVE, effective_tangents
from flexohom.mesh import rectangle_mesh
from flexohom.two_scale import (
    DirichletBC,
    EdgeLoad,
    LocalizationRequest,
    MacroProblem,
    MacroProblemError,
    TangentCache,
    rve_key,
    run_two_scale,
    solve_macro,
)

SUPPORTS = [
    DirichletBC("left", "u1", 0.0),
    DirichletBC("bottom", "u2", 0.0),
    DirichletBC("bottom", "phi", 0.0),
    DirichletBC("top", "phi", 0.01),
]
LOADS = [EdgeLoad("right", (0.1, 0.0))]


@pytest.fixture(scope="module")
def macro_mesh():
    return rectangle_mesh(4.0, 2.0, 4, 2)


@pytest.fixture(scope="module")
def holed_rve(circle_mesh):
    return RVE(circle_mesh, {"matrix": TABLE1.with_(l=0.3)})


def test_homogeneous_rve_reproduces_a_direct_macro_solve(plain_mesh, macro_mesh):
    mat = TABLE1.with_(l=0.2, f1=0.0, f2=0.0)
    tan = effective_tangents(plain_mesh, {"matrix": mat})
    direct = solve_macro(MacroProblem(macro_mesh, {"matrix": build_material_matrices(mat).generalized()}, SUPPORTS, LOADS))
    upscaled = solve_macro(MacroProblem(macro_mesh, tan, SUPPORTS, LOADS))
    scale = np.abs(direct.u).max()
    np.testing.assert_allclose(upscaled.u, direct.u, atol=1e-9 * scale)
    assert direct.residual < 1e-10 and upscaled.residual < 1e-10


def test_localization_is_consistent_and_tangent_is_computed_once(holed_rve, macro_mesh):
    reqs = [LocalizationRequest(0, 0), LocalizationRequest(5, 3)]
    res = run_two_scale(macro_mesh, holed_rve, SUPPORTS, LOADS, reqs)
    assert res.max_consistency_error() < 1e-8
    assert res.cache.computations == 1 and res.cache.hits == len(reqs)
    assert holed_rve.counters["factorize"] == 1
    loc = res.localizations[1]
    np.testing.assert_array_equal(loc.macro.as_vector(), res.macro.state_at(5, 3).as_vector())
    np.testing.assert_allclose(res.macro.stress_at(5, 3), res.tangents.Cbig @ loc.macro.as_vector(), rtol=1e-12, atol=1e-14)
    assert loc.snapshot.n_points == holed_rve.mesh.n_nodes


def test_cache_key_tracks_the_configuration(circle_mesh):
    a = RVE(circle_mesh, {"matrix": TABLE1})
    b = RVE(circle_mesh, {"matrix": TABLE1})
    c = RVE(circle_mesh, {"matrix": TABLE1.with_(l=0.5)})
    d = RVE(circle_mesh, {"matrix": TABLE1}, "DBC")
    assert rve_key(a) == rve_key(b)
    assert len({rve_key(a), rve_key(c), rve_key(d)}) == 3
    cache = TangentCache()
    cache.get(a)
    cache.get(b)
    assert (cache.computations, cache.hits) == (1, 1)


def test_missing_essential_data_is_rejected(macro_mesh):
    with pytest.raises(MacroProblemError, match="phi"):
        solve_macro(MacroProblem(macro_mesh, build_material_matrices(TABLE1).generalized(), SUPPORTS[:2], LOADS))


def test_contradictory_dirichlet_data_is_rejected(macro_mesh):
    bad = SUPPORTS + [DirichletBC("left", "phi", 1.0)]
    with pytest.raises(MacroProblemError, match="contradictory"):
        solve_macro(MacroProblem(macro_mesh, build_material_matrices(TABLE1).generalized(), bad, LOADS))


def test_bad_requests_are_rejected(holed_rve, macro_mesh):
    with pytest.raises(MacroProblemError, match="quadrature point"):
        run_two_scale(macro_mesh, holed_rve, SUPPORTS, LOADS, [LocalizationRequest(10_000, 0)])
    with pytest.raises(MacroProblemError):
        DirichletBC("middle", "u1")
    with pytest.raises(MacroProblemError):
        DirichletBC("left", "temperature")
    with pytest.raises(MacroProblemError):
        EdgeLoad("diagonal")
