"""Free Schrödinger group, the oscillatory Beta integral

    H(y; theta, beta) = ∫_0^1 e^{iyr} r^{theta-1} (1-r)^{beta-1} dr
                      = B(theta, beta) 1F1(theta; theta+beta; iy),

and the explicit evolution e^{itΔ}|x|^{-lam} built from it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq
from scipy.special import gamma, rgamma, roots_jacobi

from .spectral import Field, Grid, Trajectory, apply_multiplier, mixed_norm, sobolev_norm
from .weights import PoleError, renormalization_mass

H_TOL = 1e-8
QUADRATURE, ASYMPTOTIC, EXTENSION = "Quadrature", "Asymptotic", "Extension"


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class HParams:
    theta: float
    beta: float
    y: float = 0.0

    @property
    def eta(self):
        # order of the remainder in the large-|x|^2/t expansion
        return min(self.theta, self.beta + 1)


@dataclass(frozen=True)
class HValue:
    value: complex
    abs_error_estimate: float
    method: str


# ------------------------------------------------------------ free group

def free_symbol(grid: Grid, t):
    return np.exp(-1j * t * grid.xi2)


def free_evolve(f: Field, t: float) -> Field:
    """e^{itΔ}f, i.e. the multiplier e^{-it|xi|^2}."""
    if t == 0:
        return f.physical()
    return apply_multiplier(f, free_symbol(f.grid, t))


def gaussian_at_origin(t, N):
    """e^{itΔ}e^{-pi|x|^2} at x = 0."""
    return (1 + 4j * np.pi * t) ** (-N / 2)


def gaussian_nonlinearity_at_origin(t, N, alpha):
    z = 1 + 4j * np.pi * np.asarray(t, dtype=float)
    return 1.0 / (np.abs(z) ** (N * alpha / 2) * z ** (N / 2))


def free_kernel(x_abs, t, N):
    """e^{itΔ}δ = (4 pi i t)^{-N/2} e^{i|x|^2/4t}."""
    return (4j * np.pi * t) ** (-N / 2) * np.exp(1j * np.asarray(x_abs) ** 2 / (4 * t))


# ------------------------------------------------------------ H function

def _beta_fn(theta, beta):
    # Gamma ratio, also the continuation for -1 < theta < 0
    return float(gamma(theta) * gamma(beta) * rgamma(theta + beta))


@lru_cache(maxsize=512)
def _gj(n, a, b):
    with np.errstate(invalid="ignore", divide="ignore"):   # scipy's k=1 recurrence term when a+b = -1
        x, w = roots_jacobi(n, a, b)
    return (1 + x) / 2, w


def _quad_h(y, theta, beta, n):
    r, w = _gj(n, beta - 1, theta - 1)
    return 2.0 ** (1 - theta - beta) * np.dot(w, np.exp(1j * y * r))


def _quad_h_cont(y, theta, beta, n):
    # theta in (-1, 0]: B(theta,beta) + ∫ r^theta (1-r)^{beta-1} (e^{iyr}-1)/r dr
    r, w = _gj(n, beta - 1, theta)
    g = 2j * np.sin(y * r / 2) * np.exp(1j * y * r / 2) / r
    return 2.0 ** (-theta - beta) * np.dot(w, g)


def _series(y, a, c, phase_sign, first):
    """sum_k (1-c)_k/k! Gamma(a+k) e^{±i pi (a+k)/2} y^{-a-k}, optimally truncated.
    Returns (sum, first omitted term magnitude)."""
    term = first
    total = 0j
    k = 0
    while True:
        total += term
        ratio = (1 - c + k) / (k + 1) * (a + k) * (1j * phase_sign) / y
        nxt = term * ratio
        if nxt == 0:
            return total, 0.0
        if abs(nxt) >= abs(term) or k > 400:
            return total, abs(nxt)
        if abs(nxt) < 1e-18 * abs(total):
            return total + nxt, abs(nxt * ratio)
        term = nxt
        k += 1


def _asym_full(y, theta, beta):
    a0 = gamma(theta) * np.exp(1j * np.pi * theta / 2) * y ** -theta
    b0 = gamma(beta) * np.exp(-1j * np.pi * beta / 2) * y ** -beta
    sa, ea = _series(y, theta, beta, +1, a0)
    sb, eb = _series(y, beta, theta, -1, b0)
    return sa + np.exp(1j * y) * sb, ea + eb


def _asym_error(y, theta, beta):
    return _asym_full(y, theta, beta)[1]


@lru_cache(maxsize=256)
def crossover(theta, beta, tol=H_TOL):
    """Y*: smallest y (>= 1) where the asymptotic series error estimate is below tol/10."""
    target = tol / 10
    f = lambda ly: math.log(max(_asym_error(math.exp(ly), theta, beta), 1e-300)) - math.log(target)
    if f(0.0) <= 0:
        return 1.0
    hi = 1.0
    while f(hi) > 0:
        hi += 1.0
        if hi > 30:
            return math.inf
    return math.exp(brentq(f, hi - 1.0, hi, xtol=1e-6))


def _quad_adaptive(y, theta, beta, tol, cont=False):
    n = int(y / 2) + 40
    q = _quad_h_cont if cont else _quad_h
    v1 = q(y, theta, beta, n)
    while True:
        v2 = q(y, theta, beta, n + 8)
        err = abs(v2 - v1)
        if err < tol / 10 or n > 20000:
            return v2, err
        n *= 2
        v1 = q(y, theta, beta, n)


def _h_general(y, theta, beta, tol=H_TOL):
    """H for theta > -1 (theta != 0), beta > 0; theta < 0 means the continuation."""
    if y < 0:
        v = _h_general(-y, theta, beta, tol)
        return HValue(np.conj(v.value), v.abs_error_estimate, v.method)
    cont = theta < 0
    if y == 0:
        return HValue(complex(_beta_fn(theta, beta)), 0.0, QUADRATURE)
    if y > crossover(theta, beta, tol):
        v, e = _asym_full(y, theta, beta)
        return HValue(complex(v), float(e), ASYMPTOTIC)
    v, e = _quad_adaptive(y, theta, beta, tol, cont)
    B = _beta_fn(theta, beta)
    if cont:
        v = v + B
    # node/weight rounding is not seen by the n vs n+8 difference
    e = max(e, 3e-13 * (1 + y) * (abs(B) + 1))
    return HValue(complex(v), float(e), QUADRATURE)


def h_function(y: float, theta: float, beta: float, tol=H_TOL) -> HValue:
    if theta <= 0 or beta <= 0:
        raise DomainError(f"need theta > 0 and beta > 0, got theta={theta}, beta={beta}")
    return _h_general(y, theta, beta, tol)


def h_continued(y: float, theta: float, beta: float, tol=H_TOL) -> HValue:
    """Analytic continuation of H to -1 < theta < 0."""
    if not -1 < theta < 0 or beta <= 0:
        raise DomainError("h_continued needs -1 < theta < 0 and beta > 0")
    return _h_general(y, theta, beta, tol)


def _two_terms(y, theta, beta):
    return (gamma(theta) * np.exp(1j * np.pi * theta / 2) * y ** -theta
            + gamma(beta) * np.exp(-1j * np.pi * beta / 2) * np.exp(1j * y) * y ** -beta)


@lru_cache(maxsize=256)
def remainder_constant(theta, beta, tol=H_TOL):
    """C in |H - two terms| <= C (y^{-theta-1} + y^{-beta-1}), fitted on [Y*/2, 2Y*]."""
    ys = crossover(theta, beta, tol)
    ys = 1.0 if not math.isfinite(ys) else ys
    grid = np.geomspace(ys / 2, 2 * ys, 41)
    ratios = []
    for y in grid:
        h = h_function(y, theta, beta, tol).value
        ratios.append(abs(h - _two_terms(y, theta, beta)) / (y ** (-theta - 1) + y ** (-beta - 1)))
    return 1.5 * max(ratios)


def h_asymptotic(y: float, theta: float, beta: float) -> HValue:
    """Two leading terms of the large-y expansion."""
    if y <= 0:
        raise DomainError("h_asymptotic needs y > 0")
    C = remainder_constant(theta, beta)
    return HValue(complex(_two_terms(y, theta, beta)), C * (y ** (-theta - 1) + y ** (-beta - 1)), ASYMPTOTIC)


def _shifted_term(y, c, beta1, tol):
    """c * H(y; c, beta1) for c > -1, smooth through c = 0 (value 1 there)."""
    if abs(c) < 1e-12:
        return 1.0 + 0j, 0.0
    if c > 0:
        v = _h_general(y, c, beta1, tol)
        return c * v.value, abs(c) * v.abs_error_estimate
    v = _h_general(y, c, beta1, tol)
    return c * v.value, abs(c) * v.abs_error_estimate


def extension_bracket(y_arg, y_coef, theta, beta, tol=H_TOL):
    """(theta-1)H(y_arg; theta-1, beta+1) + i y_coef H(y_arg; theta, beta+1)."""
    a, ea = _shifted_term(y_arg, theta - 1, beta + 1, tol)
    v = _h_general(y_arg, theta, beta + 1, tol)
    return a + 1j * y_coef * v.value, ea + abs(y_coef) * v.abs_error_estimate


def _pole_check(lam, N):
    if lam <= 0:
        raise DomainError("lam must be positive")
    if lam >= N + 2:
        raise DomainError(f"lam >= N+2 is outside the supported range (lam={lam}, N={N})")
    for p in (N, N + 1):
        if abs(lam - p) < 1e-12:
            raise PoleError(f"lam = {p} is a pole of the weight family")


def weight_evolution_value(t, x_abs, lam, N, convention="quarter", tol=H_TOL) -> HValue:
    """e^{itΔ}|x|^{-lam} at |x| = x_abs with an error estimate.

    convention: "quarter" evaluates the extension formula at |x|^2/(4t)
    (checked against grid propagation); "literal" uses |x|^2/t in the H
    arguments of the extension formula, kept for comparison.
    """
    _pole_check(lam, N)
    if t <= 0:
        raise DomainError("t must be positive")
    theta, beta = lam / 2, (N - lam) / 2
    y = x_abs ** 2 / (4 * t)
    pref = (4 * t) ** (-lam / 2) * np.exp(-1j * np.pi * lam / 4) * rgamma(lam / 2)
    if lam < N:
        v = _h_general(y, theta, beta, tol)
        return HValue(complex(pref * v.value), abs(pref) * v.abs_error_estimate, v.method)
    y_arg = y if convention == "quarter" else x_abs ** 2 / t
    br, e = extension_bracket(y_arg, y, theta, beta, tol)
    return HValue(complex(pref * br / beta), abs(pref / beta) * e, EXTENSION)


def weight_evolution(t: float, x_abs: float, lam: float, N: int, convention="quarter") -> complex:
    return weight_evolution_value(t, x_abs, lam, N, convention).value


def weight_evolution_profile(t, x_abs, lam, N, convention="quarter"):
    return np.array([weight_evolution(t, float(x), lam, N, convention) for x in np.ravel(x_abs)])


def normalized_weight_evolution(t, x_abs, lam, N):
    """beta Gamma(lam/2) (4it)^{lam/2} e^{itΔ}|x|^{-lam}, computed through
    weight_evolution (direct path below N, extension above); smooth across lam = N."""
    beta = (N - lam) / 2
    four_it = (4 * t) ** (lam / 2) * np.exp(1j * np.pi * lam / 4)
    return beta * gamma(lam / 2) * four_it * weight_evolution(t, x_abs, lam, N)


def leading_large_x(t, x_abs, lam, N):
    """t^{-theta} e^{i|x|^2/4t} (|x|^2/4t)^{-beta} times the constant of the e^{iy} term."""
    theta, beta = lam / 2, (N - lam) / 2
    y = x_abs ** 2 / (4 * t)
    c = (4 * t) ** (-lam / 2) * np.exp(-1j * np.pi * lam / 4) * rgamma(lam / 2) \
        * gamma(beta) * np.exp(-1j * np.pi * beta / 2)
    if lam > N:
        c = (4 * t) ** (-lam / 2) * np.exp(-1j * np.pi * lam / 4) * rgamma(lam / 2) \
            * 1j * gamma(beta + 1) * np.exp(-1j * np.pi * (beta + 1) / 2) / beta
    return c * np.exp(1j * y) * y ** -beta


# ------------------------------------------------------------ grid oracle

def oracle_grid_size(t, eps, x_max, N=1, digits=12.0, pts_per_eps=6):
    """(L, M) so wrapped high frequencies are damped by e^{-digits} and w_eps is resolved."""
    L = digits * t / eps + x_max / 2 + 1
    L = 2.0 ** math.ceil(math.log2(L))
    M = 2 ** math.ceil(math.log2(2 * L * pts_per_eps / eps))
    return L, M


def grid_weight_evolution(t, lam, N, eps, L=None, M=None, x_max=2.0):
    """Grid propagation of (|x|^2+eps^2)^{-lam/2} minus the propagated
    renormalization mass m(eps) delta. Returns (grid, values)."""
    if L is None or M is None:
        L0, M0 = oracle_grid_size(t, eps, x_max, N)
        L = L or L0
        M = M or M0
    g = Grid(N, M, L)
    w = Field(g, (g.r ** 2 + eps ** 2) ** (-lam / 2))
    u = free_evolve(w, t).values
    if lam > N - 2:
        u = u - renormalization_mass(N, lam, eps) * free_kernel(g.r, t, N)
    return g, u


# ------------------------------------------------------------ Strichartz probe

def free_trajectory(u0: Field, T, n_times):
    times = np.linspace(0.0, T, n_times)
    tr = Trajectory(u0.grid)
    fh = u0.frequency()
    for t in times:
        tr.append(t, free_evolve(fh, t))
    return tr


def strichartz_ratio(u0: Field, pair, T: float, n_times: int) -> float:
    tr = free_trajectory(u0, T, n_times)
    return mixed_norm(tr, pair.q, pair.r) / sobolev_norm(u0, pair.s, homogeneous=True)
