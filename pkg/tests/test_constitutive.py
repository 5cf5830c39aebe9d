import numpy as np
import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from flexohom.constitutive import (
    EPS0,
    N_GEN,
    TABLE1,
    GeneralizedStrainState,
    MaterialParams,
    build_material_matrices,
    electric_displacement,
    enthalpy_density,
    gradient_stiffness,
    higher_order_stress,
    polarization,
    reciprocal_form,
    stress,
)


def symbolic_gradient_matrix():
    """Hessian of 1/2 eps_ij,k C_ijmn eps_mn,k in the condensed g variables."""
    lam, G = sympy.symbols("lam G", positive=True)
    g = sympy.symbols("g111 g112 g122 g211 g212 g222")
    second = {(0, 0, 0): g[0], (0, 0, 1): g[1], (0, 1, 1): g[2], (1, 0, 0): g[3], (1, 0, 1): g[4], (1, 1, 1): g[5]}

    def u(i, j, k):
        return second[(i,) + tuple(sorted((j, k)))]

    def eps_grad(i, j, k):
        return (u(i, j, k) + u(j, i, k)) / 2

    def d(a, b):
        return 1 if a == b else 0

    def C(i, j, m, n):
        return lam * d(i, j) * d(m, n) + G * (d(i, m) * d(j, n) + d(i, n) * d(j, m))

    r = range(2)
    W = sympy.Rational(1, 2) * sum(
        eps_grad(i, j, k) * C(i, j, m, n) * eps_grad(m, n, k) for i in r for j in r for m in r for n in r for k in r
    )
    return sympy.lambdify((lam, G), sympy.hessian(W, g), "numpy")


def test_gradient_matrix_matches_symbolic_derivation():
    Q = symbolic_gradient_matrix()
    for lam, G in [(179.0, 54.0), (1.0, 2.0), (-0.5, 1.0)]:
        np.testing.assert_allclose(gradient_stiffness(lam, G), np.array(Q(lam, G), dtype=float), atol=1e-12)


def test_qbar_scales_with_l_squared():
    m0 = build_material_matrices(TABLE1.with_(l=1.0))
    m1 = build_material_matrices(TABLE1.with_(l=0.3))
    np.testing.assert_allclose(m1.Qbar, 0.09 * m0.Qbar, rtol=1e-14)
    assert np.all(build_material_matrices(TABLE1).Qbar == 0)


def test_elastic_block():
    m = build_material_matrices(TABLE1)
    np.testing.assert_array_equal(m.C, [[287, 179, 0], [179, 287, 0], [0, 0, 216]])


def test_generalized_matrix_symmetric_and_quasi_definite():
    M = build_material_matrices(TABLE1.with_(l=0.5)).generalized()
    assert M.shape == (N_GEN, N_GEN)
    np.testing.assert_array_equal(M, M.T)
    assert np.all(np.linalg.eigvalsh(M[:9, :9]) > 0)
    assert np.all(np.linalg.eigvalsh(M[9:, 9:]) < 0)


params = st.builds(
    MaterialParams,
    lam=st.floats(0, 300),
    G=st.floats(1, 100),
    l=st.floats(0, 2),
    e31=st.floats(-20, 20),
    e33=st.floats(-20, 20),
    e15=st.floats(-20, 20),
    kappa11=st.floats(0.1, 20),
    kappa33=st.floats(0.1, 20),
    f1=st.floats(-5, 5),
    f2=st.floats(-5, 5),
)
vec = st.lists(st.floats(-1, 1), min_size=N_GEN, max_size=N_GEN)


@given(params, vec)
def test_stresses_are_gradients_of_enthalpy(p, v):
    m = build_material_matrices(p)
    s = GeneralizedStrainState.from_vector(v)
    conj = np.concatenate([stress(s, m), higher_order_stress(s, m), electric_displacement(s, m)])
    h = 1e-6
    fd = np.empty(N_GEN)
    for i in range(N_GEN):
        dv = np.zeros(N_GEN)
        dv[i] = h
        hp = enthalpy_density(GeneralizedStrainState.from_vector(np.asarray(v) + dv), m)
        hm = enthalpy_density(GeneralizedStrainState.from_vector(np.asarray(v) - dv), m)
        fd[i] = (hp - hm) / (2 * h)
    scale = max(1.0, np.abs(conj).max())
    np.testing.assert_allclose(fd, conj, atol=1e-6 * scale)
    assert abs(enthalpy_density(s, m) - 0.5 * s.as_vector() @ m.generalized() @ s.as_vector()) < 1e-9 * max(
        1.0, abs(enthalpy_density(s, m))
    )


def test_electric_displacement_convention():
    # D = kappa E + e eps + f g; a pure field E1 = 1 gives D1 = kappa11
    m = build_material_matrices(TABLE1)
    s = GeneralizedStrainState(np.zeros(3), np.zeros(6), [-1.0, 0.0])
    np.testing.assert_allclose(electric_displacement(s, m), [TABLE1.kappa11, 0.0])
    s = GeneralizedStrainState([0.0, 1.0, 0.0], np.zeros(6), np.zeros(2))
    np.testing.assert_allclose(electric_displacement(s, m), [0.0, TABLE1.e33])
    s = GeneralizedStrainState([0.0, 0.0, 1.0], np.zeros(6), np.zeros(2))
    np.testing.assert_allclose(electric_displacement(s, m), [2 * TABLE1.e15, 0.0])


def test_flexo_matrix_pattern():
    f = build_material_matrices(TABLE1.with_(f1=1.5, f2=0.25)).fMat
    np.testing.assert_allclose(f[0], [2.0, 0, 1.5, 0, 0.5, 0])
    np.testing.assert_allclose(f[1], [0, 0.5, 0, 1.5, 0, 2.0])


def test_polarization_identity():
    D, negE = np.array([0.3, -0.2]), np.array([1.0, 2.0])
    np.testing.assert_allclose(polarization(D, negE), D - EPS0 * (-negE))


@pytest.mark.parametrize(
    "kw",
    [dict(G=0.0), dict(G=-1.0), dict(lam=-200.0), dict(kappa11=0.0), dict(kappa33=-1.0), dict(l=-0.1)],
)
def test_invalid_parameters_rejected(kw):
    with pytest.raises(ValueError):
        TABLE1.with_(**kw)


def test_reciprocal_form():
    r = reciprocal_form(TABLE1)
    np.testing.assert_allclose(r.chi, np.diag([12.5 - EPS0, 14.4 - EPS0]))
    np.testing.assert_allclose(r.alpha @ r.chi, np.eye(2), atol=1e-15)
    m = build_material_matrices(TABLE1)
    np.testing.assert_allclose(r.chi @ r.d, m.eMat.T, atol=1e-13)
    np.testing.assert_allclose(r.chi @ r.h, m.fMat, atol=1e-13)
    with pytest.raises(ValueError):
        reciprocal_form(TABLE1.with_(kappa11=EPS0 / 2))


def test_material_helpers():
    p = TABLE1.scaled_stiffness(0.5).scaled_flexo(3.0)
    assert (p.lam, p.G, p.f1, p.f2) == (89.5, 27.0, 3.0, 3.0)
    assert p.e33 == TABLE1.e33
