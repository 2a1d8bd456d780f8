"""The singular weight |x|^{-b}: grid sampling, the Riesz-type constant in
D^s|x|^{-b} = c |x|^{-b-s}, and a grid oracle that checks it."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.special import gamma, hyp2f1, rgamma, zeta

from .spectral import Field, Grid, fractional_derivative


class PoleError(ValueError):
    """Parameter sits on a pole of the homogeneous-distribution family."""


def _near_int(x, tol=1e-12):
    return abs(x - round(x)) <= tol


def origin_cell_average(dim, b, h):
    """Mean of |x|^{-b} over the cube [-h/2, h/2]^dim.

    Uses div(x|x|^{-b}) = (dim-b)|x|^{-b}, which turns the cube integral into
    2*dim faces of (a^2+|y|^2)^{-b/2} with a = h/2.
    """
    if not 0 < b < dim:
        raise ValueError("need 0 < b < dim")
    a = h / 2
    if dim == 1:
        return a ** -b / (1 - b)
    if dim == 2:
        return 2 * a ** -b * hyp2f1(0.5, b / 2, 1.5, -1.0) / (2 - b)
    # dim 3: one smooth 1D integral remains
    f = lambda v: (1 + v * v) ** (-b / 2) * hyp2f1(0.5, b / 2, 1.5, -1 / (1 + v * v))
    I = quad(f, 0, 1, epsabs=0, epsrel=1e-13)[0]
    return 3 * a ** -b * I / (3 - b)


def eval_weight(grid: Grid, b: float, epsilon: float = 0.0) -> Field:
    """(|x|^2 + eps^2)^{-b/2}; for eps = 0 the origin cell gets its cell average."""
    if not 0 < b < grid.dim:
        raise ValueError(f"b must lie in (0, {grid.dim}), got {b}")
    r = grid.r
    if epsilon > 0:
        return Field(grid, (r ** 2 + epsilon ** 2) ** (-b / 2))
    w = np.empty(grid.shape)
    nz = r > 0
    w[nz] = r[nz] ** -b
    w[~nz] = origin_cell_average(grid.dim, b, grid.h)
    return Field(grid, w)


def riesz_constant(N: int, b: float, s: float) -> complex:
    """c with D^s|x|^{-b} = c|x|^{-b-s}, ratio of the Fourier constants of
    |x|^{-b} and |x|^{-b-s}."""
    lam = b + s - N
    if lam >= -1e-12 and _near_int(lam):
        raise PoleError(f"b+s-N = {lam:g} is a nonnegative integer")
    c = 2.0 ** s * gamma((N - b) / 2) * gamma((b + s) / 2) * rgamma(b / 2) * rgamma((N - b - s) / 2)
    return complex(c)


def renormalization_mass(N, lam, eps):
    """m(eps) with (|x|^2+eps^2)^{-lam/2} - m(eps) delta -> |x|^{-lam} as eps -> 0
    (analytically continued past lam = N, valid for lam < N+2, lam != N)."""
    if _near_int((lam - N) / 2) and lam >= N:
        raise PoleError("lam - N is a nonnegative even integer")
    return eps ** (N - lam) * np.pi ** (N / 2) * gamma((lam - N) / 2) * rgamma(lam / 2)


# ------------------------------------------------------------ oracle

def _smoothstep(t):
    t = np.clip(t, 0.0, 1.0)
    f = lambda u: np.where(u > 0, np.exp(-1.0 / np.maximum(u, 1e-300)), 0.0)
    return f(t) / (f(t) + f(1 - t))


@lru_cache(maxsize=None)
def lattice_sum(N, p, R=None):
    """sum over k in Z^N \\ {0} of |k|^{-p} (p > N)."""
    if N == 1:
        return 2 * float(zeta(p))
    if R is None:
        R = 400 if N == 2 else 60
    k = np.arange(-R, R + 1, dtype=float)
    g = np.meshgrid(*([k] * N), indexing="ij", sparse=True)
    r = np.sqrt(sum(c * c for c in g))
    inside = (r > 0) & (r <= R)
    S = np.sum(r[inside] ** -p)
    omega = 2 * np.pi ** (N / 2) / gamma(N / 2)
    return float(S + omega * R ** (N - p) / (p - N))


def _kernel_const(N, s):
    # D^s g(x) = C ∫ g(y)|x-y|^{-N-s} dy for x outside supp g
    return 2 ** s * gamma((N + s) / 2) * rgamma(-s / 2) / np.pi ** (N / 2)


@dataclass
class HormanderReport:
    deviation: float
    c: float
    quotient_min: float
    quotient_max: float
    pole_distance: float
    near_pole: bool
    L: float
    M: int


def hormander_report(grid: Grid, b, s, annulus=(1.0, 2.0), epsilon=0.0, far_field=True):
    """Grid value of D^s w divided by |x|^{-b-s} on an annulus, compared with c.

    The box truncates the non-decaying weight. With far_field=True the weight
    is tapered radially between R1 and R2 inside the box, and the analytic
    exterior contribution (plus the periodic images of the tapered part, to
    second order in |x|) is added back.
    """
    N = grid.dim
    r_in, r_out = annulus
    c = riesz_constant(N, b, s).real
    w = eval_weight(grid, b, epsilon).values.real
    r = grid.r
    ann = (r >= r_in) & (r <= r_out)
    p = N + s
    if s == 0 or not far_field:
        d = fractional_derivative(Field(grid, w), s).values.real[ann]
    else:
        L = grid.L
        R1 = max(0.15 * L, 1.25 * r_out)
        R2 = min(R1 + 0.4 * L, 0.95 * L)
        chi = 1 - _smoothstep((r - R1) / (R2 - R1))
        wc = w * chi
        d = fractional_derivative(Field(grid, wc), s).values.real[ann]
        C = _kernel_const(N, s)
        omega = 2 * np.pi ** (N / 2) / gamma(N / 2)
        m0 = grid.cell * wc.sum()
        m2 = grid.cell * (wc * r ** 2).sum()
        lap = p * (s + 2)   # Laplacian of |y|^{-p} is lap |y|^{-p-2}

        def tail(q):
            f = lambda t: t ** (-b - q - 1) * _smoothstep((t - R1) / (R2 - R1))
            return quad(f, R1, R2, limit=400, epsabs=0, epsrel=1e-12)[0] + R2 ** (-b - q) / (b + q)

        ra = r[ann]
        ext = C * omega * (tail(s) + ra ** 2 / (2 * N) * lap * tail(s + 2))
        img = C * (m0 * (2 * L) ** -p * lattice_sum(N, p)
                   + (m0 * ra ** 2 + m2) / (2 * N) * lap * (2 * L) ** (-p - 2) * lattice_sum(N, p + 2))
        d = d + ext - img
    q = d / r[ann] ** (-b - s)
    dev = float(np.max(np.abs(q / c - 1)))
    lam = b + s - N
    pd = float(abs(lam - max(0, round(lam))))
    return HormanderReport(dev, c, float(q.min()), float(q.max()), pd, pd < 0.05, grid.L, grid.M)


def verify_hormander(grid: Grid, b, s, annulus=(1.0, 2.0), epsilon=0.0, far_field=True) -> float:
    return hormander_report(grid, b, s, annulus, epsilon, far_field).deviation
