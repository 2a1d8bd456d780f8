"""First Picard iterate of the weighted problem for Gaussian data:

    D^s iμ ∫_0^t e^{i(t-τ)Δ}[w |U|^α U](τ) dτ,   U(τ) = e^{iτΔ}u0,

its splitting I + II + III (commutator, difference from the origin value,
origin-value term), the further split III = III1 + III21 + III22, and
refinement studies whose verdicts are compared with the regime classifier.

The τ-integral is done on composite Gauss-Legendre nodes with Filon-type
weights: on each panel the integrand's Fourier coefficients are expanded in
Legendre polynomials and integrated against e^{iτ|ξ|^2} exactly (spherical
Bessel moments), so the rule does not need to resolve the phase |ξ|^2 τ.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss, legval
from scipy.special import gamma, rgamma, spherical_jn

from .exponents import ProblemParams, classify
from .propagator import free_evolve, gaussian_nonlinearity_at_origin, weight_evolution
from .spectral import FREQUENCY, Field, Grid, frac_symbol, gaussian, lp_norm, to_physical
from .weights import riesz_constant

PANEL_NODES = 8
BOUNDED, DIVERGING, INCONCLUSIVE = "Bounded", "Diverging", "Inconclusive"


@dataclass
class DuhamelConfig:
    params: ProblemParams
    t_final: float
    tau_nodes: int = 64
    ladder: list = field(default_factory=list)   # (L, M, eps) triples; eps None -> eps_factor*h
    eps_factor: float = 0.5
    refine: str = "M"                             # which ladder coordinate the slope is fitted against
    slope_threshold: float = 0.05

    def __post_init__(self):
        if not self.t_final > 0:
            raise ValueError("t_final must be positive")
        if self.tau_nodes % PANEL_NODES:
            raise ValueError(f"tau_nodes must be a multiple of {PANEL_NODES}")
        Ms = [r[1] for r in self.ladder]
        Ls = [r[0] for r in self.ladder]
        if any(b <= a for a, b in zip(Ms, Ms[1:])):
            raise ValueError("ladder must be strictly refining in M")
        if any(b < a for a, b in zip(Ls, Ls[1:])):
            raise ValueError("ladder must be non-decreasing in L")

    def eps_for(self, grid: Grid, eps=None):
        return self.eps_factor * grid.h if eps is None else eps


@dataclass
class DivergenceReport:
    rungs: list            # dicts: L, M, eps, norm, and decomposition norms
    fitted_slope: float
    verdict: str
    refine: str
    label: str = "Theorem-range"
    slopes: dict = field(default_factory=dict)
    shells: list = field(default_factory=list)


# ------------------------------------------------------------ τ quadrature

class FilonRule:
    """∫_0^t e^{-i(t-τ)ω} g(τ) dτ for ω = |ξ|^2 on a grid, g sampled at nodes()."""

    def __init__(self, grid: Grid, t, n_nodes):
        self.t = t
        self.P = n_nodes // PANEL_NODES
        x, w = leggauss(PANEL_NODES)
        self.x, self.w = x, w
        self.d = t / self.P
        om = grid.xi2
        self.omega = om
        z = om * self.d / 2
        eye = np.eye(PANEL_NODES)
        # a[j, k] = (2k+1) w_j P_k(x_j) i^k
        self.a = np.array([[(2 * k + 1) * w[j] * legval(x[j], eye[k]) * 1j ** k
                            for k in range(PANEL_NODES)] for j in range(PANEL_NODES)])
        self.J = [spherical_jn(k, z) for k in range(PANEL_NODES)]
        self.mids = [(p + 0.5) * self.d for p in range(self.P)]

    def nodes(self):
        return [m + self.d / 2 * xj for m in self.mids for xj in self.x]

    def integrate(self, samples):
        """samples: iterator of arrays g(τ_n, ξ) in nodes() order."""
        acc = 0j
        it = iter(samples)
        for m in self.mids:
            G = [next(it) for _ in range(PANEL_NODES)]
            s = 0j
            for k in range(PANEL_NODES):
                Gk = sum(self.a[j, k] * G[j] for j in range(PANEL_NODES))
                s = s + self.J[k] * Gk
            acc = acc + np.exp(1j * self.omega * m) * s * (self.d / 2)
        return np.exp(-1j * self.omega * self.t) * acc


# ------------------------------------------------------------ pieces

def _origin_values(u0: Field, params, taus):
    """f(τ, 0): closed form for the standard Gaussian, grid value otherwise."""
    g = gaussian(u0.grid)
    if np.allclose(u0.physical().values, g.values, rtol=0, atol=1e-14):
        return [complex(gaussian_nonlinearity_at_origin(t, params.N, params.alpha)) for t in taus]
    out = []
    idx = u0.grid.origin_index
    for t in taus:
        v = free_evolve(u0, t).values[idx]
        out.append(abs(v) ** params.alpha * v)
    return out


def _weight(grid, b, eps):
    return (grid.r ** 2 + eps ** 2) ** (-b / 2)


def _fwd(grid, v):
    # frequency coefficients of a physical array
    return Field(grid, v).frequency().values


class _Setup:
    def __init__(self, u0: Field, cfg: DuhamelConfig, eps=None):
        p = cfg.params
        self.grid = g = u0.grid
        self.p = p
        self.eps = cfg.eps_for(g, eps)
        self.w = _weight(g, p.b, self.eps)
        self.Ds = frac_symbol(g, p.s)
        self.Dsw = Field(g, self.Ds * _fwd(g, self.w), FREQUENCY).physical().values
        self.rule = FilonRule(g, cfg.t_final, cfg.tau_nodes)
        self.taus = self.rule.nodes()
        self.u0h = u0.frequency()
        self.f0 = _origin_values(u0, p, self.taus)
        self.coef = 1j * p.mu

    def f(self, tau):
        U = free_evolve(self.u0h, tau).values
        return np.abs(U) ** self.p.alpha * U

    def out(self, coeffs):
        return to_physical(Field(self.grid, self.coef * coeffs, FREQUENCY))


def duhamel_term(u0: Field, cfg: DuhamelConfig, eps=None) -> Field:
    S = _Setup(u0, cfg, eps)
    g = S.grid
    samples = (S.Ds * _fwd(g, S.w * S.f(t)) for t in S.taus)
    return S.out(S.rule.integrate(samples))


def decompose(u0: Field, cfg: DuhamelConfig, eps=None):
    """(I, II, III), each computed from its own integrand."""
    S = _Setup(u0, cfg, eps)
    g = S.grid
    fs = [S.f(t) for t in S.taus]
    if cfg.params.s == 0:
        I = Field(g, np.zeros(g.shape))
    else:
        I = S.out(S.rule.integrate(S.Ds * _fwd(g, S.w * f) - _fwd(g, S.Dsw * f) for f in fs))
    II = S.out(S.rule.integrate(_fwd(g, S.Dsw * (f - f0)) for f, f0 in zip(fs, S.f0)))
    Dswh = _fwd(g, S.Dsw)
    III = S.out(S.rule.integrate(Dswh * f0 for f0 in S.f0))
    return I, II, III


def duhamel_with_parts(u0: Field, cfg: DuhamelConfig, eps=None):
    """Total and (I, II, III) sharing one setup."""
    S = _Setup(u0, cfg, eps)
    g = S.grid
    fs = [S.f(t) for t in S.taus]
    total = S.out(S.rule.integrate(S.Ds * _fwd(g, S.w * f) for f in fs))
    if cfg.params.s == 0:
        I = Field(g, np.zeros(g.shape))
    else:
        I = S.out(S.rule.integrate(S.Ds * _fwd(g, S.w * f) - _fwd(g, S.Dsw * f) for f in fs))
    II = S.out(S.rule.integrate(_fwd(g, S.Dsw * (f - f0)) for f, f0 in zip(fs, S.f0)))
    III = S.out(S.rule.integrate(_fwd(g, S.Dsw) * f0 for f0 in S.f0))
    return total, I, II, III


def converged_duhamel(u0: Field, cfg: DuhamelConfig, tol=1e-6, max_nodes=1024):
    """Double tau_nodes until the L2 norm changes by less than tol (relative)."""
    n = cfg.tau_nodes
    prev = duhamel_term(u0, cfg)
    while n < max_nodes:
        n *= 2
        c2 = DuhamelConfig(cfg.params, cfg.t_final, n, cfg.ladder, cfg.eps_factor, cfg.refine)
        cur = duhamel_term(u0, c2)
        a, b = lp_norm(prev), lp_norm(cur)
        if abs(a - b) <= tol * max(b, 1e-300):
            return cur, n
        prev = cur
    return prev, n


# ------------------------------------------------------------ III split

def _iii_constant(p: ProblemParams):
    return 1j * p.mu * riesz_constant(p.N, p.b, p.s)


def _iii1_radial(r, p, t, n=48):
    """iμ c ∫_{σ>r^2}^{t} f(t-σ,0) e^{iσΔ}|x|^{-λ}(r) dσ, log-substituted Gauss-Legendre."""
    lam = p.b + p.s
    lo = r * r
    if lo >= t:
        return 0j
    x, w = leggauss(n)
    a, b = math.log(lo), math.log(t)
    v = (b - a) / 2 * x + (b + a) / 2
    sig = np.exp(v)
    vals = [complex(gaussian_nonlinearity_at_origin(t - s_, p.N, p.alpha)) * weight_evolution(s_, r, lam, p.N)
            for s_ in sig]
    return _iii_constant(p) * np.dot(w * sig, vals) * (b - a) / 2


def _iii21_radial(rs, p, t, U_span=4000 * np.pi, panel=np.pi):
    """Leading oscillatory term of e^{iσΔ}|x|^{-λ} integrated over σ < min(t, r^2).

    In u = r^2/(4σ) the integral is K r^{2-λ}/4 ∫_{u0}^∞ f(t - r^2/(4u), 0) u^{λ-N/2-2} e^{iu} du,
    done by composite Gauss-Legendre up to u0 + U_span and a two-term
    integration-by-parts tail.
    """
    lam = p.b + p.s
    N = p.N
    beta = (N - lam) / 2
    K = _iii_constant(p) * np.exp(-1j * np.pi * lam / 4) * gamma(beta) * np.exp(-1j * np.pi * beta / 2) * rgamma(lam / 2)
    pw = lam - N / 2 - 2
    rs = np.asarray(rs, dtype=float)
    out = np.zeros(rs.shape, dtype=complex)
    ok = rs > 0
    r = rs[ok]
    a = r * r / 4
    u0 = np.maximum(a / t, 0.25)
    f = lambda tau: gaussian_nonlinearity_at_origin(tau, N, p.alpha)
    ac = a[:, None]
    g = lambda u, aa=ac: f(t - aa / u) * u ** pw
    x, w = leggauss(16)
    # panels graded so f(t - a/u) is resolved: its scale in u is ~ u^2/(4 pi a)
    acc = np.zeros(r.shape, dtype=complex)
    lo = u0.copy()
    end = u0 + U_span
    while True:
        act = lo < end
        if not act.any():
            break
        pl = np.minimum(panel, 0.05 * lo[act] ** 2 / a[act])
        pl = np.minimum(pl, end[act] - lo[act])
        u = lo[act][:, None] + (x[None, :] + 1) * pl[:, None] / 2
        acc[act] += (g(u, ac[act]) * np.exp(1j * u)) @ w * (pl / 2)
        lo[act] += pl
    U = end
    du = 1e-4 * U
    gt = lambda u: g(u, a)
    gp = (gt(U + du) - gt(U - du)) / (2 * du)
    acc += (1j * gt(U) - gp) * np.exp(1j * U)
    out[ok] = K * r ** (2 - lam) / 4 * acc
    return out


def _radial_field(grid: Grid, func, spacing=None):
    """Evaluate a radial profile on the grid: exact radii in 1D, interpolated otherwise."""
    r = grid.r
    if grid.dim == 1:
        ur, inv = np.unique(r, return_inverse=True)
        prof = func(ur)
        return Field(grid, prof[inv].reshape(grid.shape))
    spacing = spacing or grid.h / 8
    rr = np.arange(0, r.max() + 2 * spacing, spacing)
    prof = func(rr)
    v = np.interp(r, rr, prof.real) + 1j * np.interp(r, rr, prof.imag)
    return Field(grid, v)


def third_term_split(u0: Field, cfg: DuhamelConfig, III: Field = None, eps=None):
    """(III1, III21, III22) with III22 = III - III1 - III21."""
    p = cfg.params
    lam = p.b + p.s
    riesz_constant(p.N, p.b, p.s)          # PoleError on the pole set
    weight_evolution(1.0, 1.0, lam, p.N)   # PoleError/DomainError for lam
    t = cfg.t_final
    if III is None:
        III = decompose(u0, cfg, eps)[2]
    g = u0.grid
    origin_r = g.h / 4   # the origin cell is evaluated at a nearby radius

    def iii1(rs):
        return np.array([_iii1_radial(max(x, origin_r), p, t) for x in rs])

    III1 = _radial_field(g, iii1)
    III21 = _radial_field(g, lambda rs: _iii21_radial(rs, p, t))
    III22 = III - III1 - III21
    return III1, III21, III22


# ------------------------------------------------------------ refinement

def standard_ladder(params: ProblemParams, n_rungs=4):
    """Default (L, M, eps=None) ladder and refinement coordinate."""
    N = params.N
    lam = params.b + params.s
    ill = classify(params).regime == "IllPosed"
    if N == 1 and ill and lam < 1.5:
        Ls = [8 * 2 ** k for k in range(n_rungs)]
        return [(L, int(128 * L), None) for L in Ls], "L"
    if N == 1:
        return [(16.0, 512 * 2 ** k, None) for k in range(n_rungs)], "M"
    base = [(12.0, 128), (12.0, 256), (16.0, 512), (16.0, 1024), (24.0, 2048)]
    return [(L, M, None) for L, M in base[:n_rungs]], "both"


def _slope(xs, ys):
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


def verdict_from_norms(norms, slope, threshold=0.05):
    n = np.asarray(norms)
    d = np.diff(n)
    if np.all(d > 0) and slope > threshold:
        return DIVERGING
    ad = np.abs(d)
    if len(ad) >= 2 and np.all(ad[1:] < ad[:-1]):
        return BOUNDED
    return INCONCLUSIVE


def radial_shells(f: Field, edges=(0, 0.25, 0.5, 1, 2, 4, 8, 16, 32, 64)):
    """Fraction of ||f||_2^2 in each radial shell."""
    v = np.abs(f.physical().values) ** 2 * f.grid.cell
    r = f.grid.r
    tot = v.sum()
    out = []
    for lo, hi in zip(edges, edges[1:]):
        m = (r >= lo) & (r < hi)
        out.append((lo, hi, float(v[m].sum() / tot) if tot > 0 else 0.0))
    return out


def refinement_study(cfg: DuhamelConfig, u0_factory=gaussian, split=False) -> DivergenceReport:
    if len(cfg.ladder) < 4:
        raise ValueError("refinement_study needs at least 4 rungs")
    p = cfg.params
    rungs = []
    last = None
    for L, M, eps in cfg.ladder:
        g = Grid(p.N, M, L)
        u0 = u0_factory(g)
        total, I, II, III = duhamel_with_parts(u0, cfg, eps)
        row = dict(L=L, M=M, eps=cfg.eps_for(g, eps), norm=lp_norm(total),
                   I=lp_norm(I), II=lp_norm(II), III=lp_norm(III),
                   split_residual=lp_norm(total - I - II - III) / max(lp_norm(total), 1e-300))
        if split:
            III1, III21, III22 = third_term_split(u0, cfg, III, eps)
            row.update(III1=lp_norm(III1), III21=lp_norm(III21), III22=lp_norm(III22))
        rungs.append(row)
        last = total
    norms = [r["norm"] for r in rungs]
    Ms = [r["M"] for r in rungs]
    Ls = [r["L"] for r in rungs]
    slopes = {"M": _slope(Ms, norms)}
    if len(set(Ls)) > 1:
        slopes["L"] = _slope(Ls, norms)
    key = "L" if cfg.refine == "L" else "M"
    slope = slopes[key]
    verdict = verdict_from_norms(norms, slope, cfg.slope_threshold)
    even = abs(p.alpha / 2 - round(p.alpha / 2)) < 1e-12
    return DivergenceReport(rungs, slope, verdict, cfg.refine,
                            "Theorem-range" if even else "Exploratory", slopes, radial_shells(last))


def expected_verdict(params: ProblemParams):
    """Verdict the regime classifier predicts for the refinement probe."""
    reg = classify(params).regime
    return DIVERGING if reg == "IllPosed" else BOUNDED
