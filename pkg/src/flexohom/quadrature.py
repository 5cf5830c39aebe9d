"""Quadrature rules on triangles.

Points are returned in barycentric coordinates and weights are normalised to
sum to one, so that ``area * weights`` integrates over a physical triangle.
"""
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

MAX_DEGREE = 30


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray  # (nq, 3) barycentric
    weights: np.ndarray  # (nq,), sum to 1
    degree: int

    def scaled(self, area):
        """Weights scaled to a triangle of the given area."""
        return self.weights * area

    def __len__(self):
        return len(self.weights)


def _orbit_s21(a, w):
    b = 1.0 - 2.0 * a
    pts = [(a, a, b), (a, b, a), (b, a, a)]
    return pts, [w] * 3


def _orbit_s111(a, b, w):
    c = 1.0 - a - b
    pts = [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)]
    return pts, [w] * 6


def _dunavant8():
    # 16-point symmetric rule, all weights positive
    pts = [(1 / 3, 1 / 3, 1 / 3)]
    wts = [0.144315607677787]
    for a, w in [
        (0.459292588292723, 0.095091634267285),
        (0.170569307751760, 0.103217370534718),
        (0.050547228317031, 0.032458497623198),
    ]:
        p, q = _orbit_s21(a, w)
        pts += p
        wts += q
    p, q = _orbit_s111(0.008394777409958, 0.263112829634638, 0.027230314174435)
    pts += p
    wts += q
    pts = np.array(pts)
    wts = np.array(wts)
    return _polish(pts, wts, 8)


def _monomials(degree):
    return [(a, b) for n in range(degree + 1) for a in range(n + 1) for b in [n - a]]


def _exact_moment(a, b):
    # integral of x^a y^b over the unit right triangle, divided by its area 1/2
    from math import factorial

    return 2.0 * factorial(a) * factorial(b) / factorial(a + b + 2)


def _polish(pts, wts, degree):
    """Newton-refine the tabulated symmetric rule so the moment equations hold
    to machine precision. Only the published 15-digit values are perturbed."""
    mons = _monomials(degree)
    exact = np.array([_exact_moment(a, b) for a, b in mons])
    x = np.concatenate([pts[:, 0], pts[:, 1], wts])
    n = len(wts)

    def resid(v):
        px, py, w = v[:n], v[n : 2 * n], v[2 * n :]
        return np.array([np.sum(w * px**a * py**b) for a, b in mons]) - exact

    for _ in range(4):
        r = resid(x)
        if np.max(np.abs(r)) < 1e-16:
            break
        J = np.empty((len(mons), 3 * n))
        px, py, w = x[:n], x[n : 2 * n], x[2 * n :]
        for i, (a, b) in enumerate(mons):
            J[i, :n] = w * a * px ** max(a - 1, 0) * py**b if a else 0.0
            J[i, n : 2 * n] = w * b * px**a * py ** max(b - 1, 0) if b else 0.0
            J[i, 2 * n :] = px**a * py**b
        dx = np.linalg.lstsq(J, -r, rcond=None)[0]
        x = x + dx
    px, py, w = x[:n], x[n : 2 * n], x[2 * n :]
    bary = np.column_stack([1.0 - px - py, px, py])
    return bary, w


def _conical_product(degree):
    """Collapsed Gauss-Jacobi rule, exact to ``degree``; positive weights."""
    n = degree // 2 + 1
    xg, wg = roots_legendre(n)
    xj, wj = roots_jacobi(n, 1.0, 0.0)
    s = 0.5 * (xg + 1.0)
    t = 0.5 * (xj + 1.0)
    # map (s, t) in unit square -> x = s (1 - t), y = t
    S, T = np.meshgrid(s, t, indexing="ij")
    WS, WT = np.meshgrid(wg, wj, indexing="ij")
    x = (S * (1.0 - T)).ravel()
    y = T.ravel()
    w = (WS * WT).ravel() / 8.0
    w = w / w.sum()
    bary = np.column_stack([1.0 - x - y, x, y])
    return bary, w


_CACHE = {}


def triangle_quadrature(min_degree=8):
    """Return a rule exact for bivariate polynomials of total degree ``min_degree``."""
    min_degree = int(min_degree)
    if min_degree < 0 or min_degree > MAX_DEGREE:
        raise ValueError(f"unsupported quadrature degree {min_degree} (max {MAX_DEGREE})")
    if min_degree <= 8:
        key = 8
    else:
        key = min_degree
    if key not in _CACHE:
        if key == 8:
            pts, wts = _dunavant8()
        else:
            pts, wts = _conical_product(key)
        _CACHE[key] = QuadratureRule(pts, wts, key)
    return _CACHE[key]


def gauss_legendre_01(n):
    """Gauss-Legendre points and weights on [0, 1]."""
    x, w = roots_legendre(n)
    return 0.5 * (x + 1.0), 0.5 * w
