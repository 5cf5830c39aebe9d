"""Linear flexoelectric constitutive law in condensed matrix form.

Internal units: length in um, stress in GPa and electric potential in kV.
In this system the tabulated units (e in C/m^2, f in uC/m, kappa in nC/(V m))
carry over with a factor of exactly one, and the electric displacement comes
out in C/m^2.

Generalised strain ordering (11 components)::

    eps  = (eps11, eps22, eps12)               # eps12 unscaled
    g    = (g111, g112, g122, g211, g212, g222)
    negE = (-E1, -E2)

The conjugate generalised stresses are (sigma, tau, D) with the enthalpy
H = 1/2 s^T M s, where M is the 11x11 block matrix returned by
:meth:`MaterialMatrices.generalized`. The dielectric block enters as -kappa,
so M is symmetric indefinite.
"""
from dataclasses import dataclass, replace

import numpy as np

# vacuum permittivity in nC/(V m)
EPS0 = 8.8541878128e-3

N_EPS, N_G, N_E = 3, 6, 2
N_GEN = N_EPS + N_G + N_E
SL_EPS = slice(0, 3)
SL_G = slice(3, 9)
SL_E = slice(9, 11)

GEN_LABELS = (
    "eps11", "eps22", "eps12",
    "g111", "g112", "g122", "g211", "g212", "g222",
    "negE1", "negE2",
)  # fmt: skip


@dataclass(frozen=True)
class MaterialParams:
    """Isotropic flexoelectric material (tabulated units, see module doc)."""

    lam: float
    G: float
    l: float = 0.0
    e31: float = 0.0
    e33: float = 0.0
    e15: float = 0.0
    kappa11: float = 1.0
    kappa33: float = 1.0
    f1: float = 0.0
    f2: float = 0.0

    def __post_init__(self):
        if not self.G > 0:
            raise ValueError(f"shear modulus G must be positive, got {self.G}")
        if not self.lam + 2 * self.G > 0:
            raise ValueError("lambda + 2G must be positive")
        if not (self.kappa11 > 0 and self.kappa33 > 0):
            raise ValueError("dielectric constants must be positive")
        if self.l < 0:
            raise ValueError(f"intrinsic length must be non-negative, got {self.l}")

    def with_(self, **kw):
        return replace(self, **kw)

    def scaled_stiffness(self, factor):
        return replace(self, lam=self.lam * factor, G=self.G * factor)

    def scaled_flexo(self, factor):
        return replace(self, f1=self.f1 * factor, f2=self.f2 * factor)


# values of the reference material used throughout the examples
TABLE1 = MaterialParams(
    lam=179.0, G=54.0, l=0.0,
    e31=-2.7, e33=3.65, e15=21.3,
    kappa11=12.5, kappa33=14.4,
    f1=1.0, f2=1.0,
)  # fmt: skip


def gradient_stiffness(lam, G):
    """Isotropic strain-gradient matrix Q (without the l^2 factor)."""
    return np.array(
        [
            [lam + 2 * G, 0, 0, 0, lam, 0],
            [0, lam + 3 * G, 0, G, 0, lam],
            [0, 0, G, 0, G, 0],
            [0, G, 0, G, 0, 0],
            [lam, 0, G, 0, lam + 3 * G, 0],
            [0, lam, 0, 0, 0, lam + 2 * G],
        ],
        dtype=float,
    )


@dataclass(frozen=True)
class MaterialMatrices:
    C: np.ndarray
    Qbar: np.ndarray
    eMat: np.ndarray  # 3x2, sigma = C eps + eMat negE
    fMat: np.ndarray  # 2x6, D = eMat^T eps + fMat g - kappa negE
    kappa: np.ndarray

    def generalized(self):
        """11x11 symmetric block matrix [[C, 0, e], [0, Qbar, f^T], [e^T, f, -kappa]]."""
        M = np.zeros((N_GEN, N_GEN))
        M[SL_EPS, SL_EPS] = self.C
        M[SL_G, SL_G] = self.Qbar
        M[SL_EPS, SL_E] = self.eMat
        M[SL_E, SL_EPS] = self.eMat.T
        M[SL_G, SL_E] = self.fMat.T
        M[SL_E, SL_G] = self.fMat
        M[SL_E, SL_E] = -self.kappa
        return M


def build_material_matrices(p: MaterialParams) -> MaterialMatrices:
    if not p.G > 0 or not (p.kappa11 > 0 and p.kappa33 > 0):
        raise ValueError("G and dielectric constants must be positive")
    lam, G = p.lam, p.G
    C = np.array([[lam + 2 * G, lam, 0], [lam, lam + 2 * G, 0], [0, 0, 4 * G]], dtype=float)
    Qbar = p.l**2 * gradient_stiffness(lam, G)
    eT = np.array([[0, 0, 2 * p.e15], [p.e31, p.e33, 0]], dtype=float)
    f1, f2 = p.f1, p.f2
    fMat = np.array(
        [
            [f1 + 2 * f2, 0, f1, 0, 2 * f2, 0],
            [0, 2 * f2, 0, f1, 0, f1 + 2 * f2],
        ],
        dtype=float,
    )
    kappa = np.diag([p.kappa11, p.kappa33]).astype(float)
    return MaterialMatrices(C=C, Qbar=Qbar, eMat=eT.T.copy(), fMat=fMat, kappa=kappa)


@dataclass
class GeneralizedStrainState:
    eps: np.ndarray
    g: np.ndarray
    negE: np.ndarray

    def __post_init__(self):
        self.eps = np.asarray(self.eps, dtype=float).reshape(3)
        self.g = np.asarray(self.g, dtype=float).reshape(6)
        self.negE = np.asarray(self.negE, dtype=float).reshape(2)

    @classmethod
    def zero(cls):
        return cls(np.zeros(3), np.zeros(6), np.zeros(2))

    @classmethod
    def from_vector(cls, v):
        v = np.asarray(v, dtype=float)
        return cls(v[SL_EPS], v[SL_G], v[SL_E])

    def as_vector(self):
        return np.concatenate([self.eps, self.g, self.negE])


def stress(s: GeneralizedStrainState, m: MaterialMatrices):
    return m.C @ s.eps + m.eMat @ s.negE


def higher_order_stress(s: GeneralizedStrainState, m: MaterialMatrices):
    return m.Qbar @ s.g + m.fMat.T @ s.negE


def electric_displacement(s: GeneralizedStrainState, m: MaterialMatrices):
    # D = kappa E + e eps + f g, with E = -negE
    return m.eMat.T @ s.eps + m.fMat @ s.g - m.kappa @ s.negE


def enthalpy_density(s: GeneralizedStrainState, m: MaterialMatrices):
    return (
        0.5 * s.eps @ m.C @ s.eps
        + 0.5 * s.g @ m.Qbar @ s.g
        + s.eps @ m.eMat @ s.negE
        + s.g @ m.fMat.T @ s.negE
        - 0.5 * s.negE @ m.kappa @ s.negE
    )


def polarization(D, negE, eps0=EPS0):
    """P = D - eps0 E."""
    return np.asarray(D) + eps0 * np.asarray(negE)


@dataclass(frozen=True)
class ReciprocalForm:
    chi: np.ndarray  # clamped dielectric susceptibility, kappa - eps0 I
    alpha: np.ndarray  # reciprocal susceptibility
    d: np.ndarray  # 2x3, alpha applied to the piezoelectric coupling (E index first)
    h: np.ndarray  # 2x6, alpha applied to the flexoelectric coupling


def reciprocal_form(p: MaterialParams, vacuum_permittivity=EPS0) -> ReciprocalForm:
    """Coefficients of the internal-energy (polarisation based) description."""
    kap = np.array([p.kappa11, p.kappa33], dtype=float)
    if np.any(kap <= vacuum_permittivity):
        raise ValueError("dielectric constants must exceed the vacuum permittivity")
    chi = np.diag(kap - vacuum_permittivity)
    alpha = np.diag(1.0 / np.diag(chi))
    m = build_material_matrices(p)
    return ReciprocalForm(chi=chi, alpha=alpha, d=alpha @ m.eMat.T, h=alpha @ m.fMat)
