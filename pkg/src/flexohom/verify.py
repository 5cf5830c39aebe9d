"""Element-level self checks behind ``flexohom verify``."""
from dataclasses import dataclass
from math import factorial

import numpy as np

from .bell import BellBatch
from .quadrature import triangle_quadrature


@dataclass
class Check:
    name: str
    value: float
    tol: float

    @property
    def passed(self):
        return bool(self.value <= self.tol)


MIN_ANGLE = 20.0  # degrees; generated meshes guarantee 30


def _cross(a, b):
    return a[0] * b[1] - a[1] * b[0]


def min_angle(p):
    ang = []
    for k in range(3):
        a, b = p[(k + 1) % 3] - p[k], p[(k + 2) % 3] - p[k]
        ang.append(np.degrees(np.arccos(np.clip(a @ b / np.linalg.norm(a) / np.linalg.norm(b), -1, 1))))
    return min(ang)


def random_triangle(rng, scale=1.0, min_angle_deg=MIN_ANGLE):
    """Random counterclockwise triangle with a bounded minimum angle.

    Round-off in the second-derivative dofs grows like the square of the
    Jacobian condition number, so sliver triangles are excluded.
    """
    while True:
        p = rng.uniform(-1, 1, (3, 2)) * scale
        a = 0.5 * _cross(p[1] - p[0], p[2] - p[0])
        if abs(a) > 0.1 * scale**2 and min_angle(p) >= min_angle_deg:
            return p if a > 0 else p[[0, 2, 1]]


def monomial_jet(a, b, x, y):
    """(p, p_1, p_2, p_11, p_12, p_22) of x^a y^b at arrays x, y."""

    def d(n, k, t):
        if k > n:
            return np.zeros_like(t)
        return factorial(n) / factorial(n - k) * t ** (n - k)

    return np.stack(
        [
            d(a, 0, x) * d(b, 0, y),
            d(a, 1, x) * d(b, 0, y),
            d(a, 0, x) * d(b, 1, y),
            d(a, 2, x) * d(b, 0, y),
            d(a, 1, x) * d(b, 1, y),
            d(a, 0, x) * d(b, 2, y),
        ],
        axis=-1,
    )


def kronecker_error(rng):
    tri = random_triangle(rng)
    N = BellBatch(tri).basis(np.eye(3))[0]  # (3 vertices, 6 derivs, 18)
    M = N.transpose(0, 1, 2).reshape(18, 18)
    return float(np.abs(M - np.eye(18)).max())


def reproduction_error(rng, degree=4, npts=20):
    tri = random_triangle(rng)
    batch = BellBatch(tri)
    bary = rng.dirichlet(np.ones(3), npts)
    x = bary @ tri
    N = batch.basis(bary)[0]  # (npts, 6, 18)
    worst = 0.0
    for n in range(degree + 1):
        for a in range(n + 1):
            b = n - a
            dofs = monomial_jet(a, b, tri[:, 0], tri[:, 1]).ravel()
            got = N[:, 0:3] @ dofs
            exact = monomial_jet(a, b, x[:, 0], x[:, 1])[:, 0:3]
            scale = max(1.0, np.abs(exact).max())
            worst = max(worst, float(np.abs(got - exact).max() / scale))
    return worst


def conformity_error(rng, npts=10):
    """Value and normal-derivative jump across the shared edge of two triangles."""
    a, b = np.array([0.0, 0.0]), np.array([1.0, 0.2]) + rng.uniform(-0.1, 0.1, 2)
    c = np.array([0.3, 1.0]) + rng.uniform(-0.1, 0.1, 2)
    d = np.array([0.7, -0.9]) + rng.uniform(-0.1, 0.1, 2)
    t1 = np.array([a, b, c])  # edge a-b is local edge 0
    t2 = np.array([b, a, d])  # same edge reversed
    if _cross(t2[1] - t2[0], t2[2] - t2[0]) < 0:
        t2 = t2[[1, 0, 2]]
    data = {tuple(p): rng.normal(size=6) for p in (a, b, c, d)}
    s = np.linspace(0.05, 0.95, npts)
    pts = a[None] + s[:, None] * (b - a)[None]
    tvec = (b - a) / np.linalg.norm(b - a)
    n = np.array([tvec[1], -tvec[0]])
    out = []
    for tri in (t1, t2):
        batch = BellBatch(tri)
        T = np.column_stack([tri[1] - tri[0], tri[2] - tri[0]])
        lam = np.linalg.solve(T, (pts - tri[0]).T).T
        bary = np.column_stack([1 - lam.sum(1), lam])
        N = batch.basis(bary)[0]
        dofs = np.concatenate([data[tuple(p)] for p in tri])
        vals = N[:, 0:3] @ dofs
        out.append(np.column_stack([vals[:, 0], vals[:, 1:3] @ n]))
    return float(np.abs(out[0] - out[1]).max())


def quadrature_error(degree=8):
    rule = triangle_quadrature(degree)
    x, y = rule.points[:, 1], rule.points[:, 2]
    worst = 0.0
    for n in range(degree + 1):
        for a in range(n + 1):
            b = n - a
            exact = factorial(a) * factorial(b) / factorial(a + b + 2)
            got = 0.5 * np.sum(rule.weights * x**a * y**b)
            worst = max(worst, abs(got - exact))
    return worst


def run_checks(seed=0, trials=5):
    rng = np.random.default_rng(seed)
    return [
        Check("kronecker", max(kronecker_error(rng) for _ in range(trials)), 1e-12),
        Check("polynomial reproduction (degree 4)", max(reproduction_error(rng) for _ in range(trials)), 1e-9),
        Check("C1 conformity", max(conformity_error(rng) for _ in range(trials)), 1e-9),
        Check("quadrature monomials (degree 8)", quadrature_error(8), 1e-13),
        Check("quadrature monomials (degree 10)", quadrature_error(10), 1e-13),
    ]
