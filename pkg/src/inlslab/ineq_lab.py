"""Ratio probes for the fractional inequality toolkit: Leibniz commutator,
weighted interpolation, chain rules and the difference estimate.

Implicit constants are never bounded absolutely. A probe reports LHS, RHS
and their ratio; families of test functions and a dyadic dilation ladder
check finiteness and dilation stability of the ratio.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .spectral import Field, Grid, dilate, fractional_derivative, gaussian, lp_norm

LIPSCHITZ, HOELDER, DIFFERENCE = "Lipschitz", "Hoelder", "Difference"
DILATIONS = (0.5, 1.0, 2.0)


class ExponentMismatch(ValueError):
    pass


class InequalityDomainError(ValueError):
    pass


@dataclass
class RatioReport:
    lemma_id: str
    members: list = field(default_factory=list)   # dicts: name, lam, lhs, rhs, ratio, extra
    max_ratio: float = 0.0
    ratio_spread: float = 1.0

    def finalize(self):
        r = [m["ratio"] for m in self.members]
        self.max_ratio = float(max(r)) if r else 0.0
        spreads = []
        for name in {m["name"] for m in self.members}:
            rr = [m["ratio"] for m in self.members if m["name"] == name and m["ratio"] > 0]
            if len(rr) > 1:
                spreads.append(max(rr) / min(rr))
        self.ratio_spread = float(max(spreads)) if spreads else 1.0
        return self

    @property
    def all_finite(self):
        return all(np.isfinite(m["ratio"]) and np.isfinite(m["lhs"]) and np.isfinite(m["rhs"])
                   for m in self.members)

    def member_names(self):
        return sorted({m["name"] for m in self.members})


def _inv(p):
    return 0.0 if p == np.inf else 1.0 / p


def _holder(p, a, b, what):
    if abs(_inv(p) - _inv(a) - _inv(b)) > 1e-12:
        raise ExponentMismatch(f"{what}: 1/{p} != 1/{a} + 1/{b}")


def _Ds(f, s):
    return fractional_derivative(f, s)


def _norm_on(f: Field, p, mask):
    v = np.abs(f.physical().values)[mask]
    if p == np.inf:
        return float(v.max()) if v.size else 0.0
    return float((f.grid.cell * np.sum(v ** p)) ** (1.0 / p))


def _single(lemma, lhs, rhs, name="member", lam=1.0, **extra):
    ratio = lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else np.inf)
    rep = RatioReport(lemma, [dict(name=name, lam=lam, lhs=lhs, rhs=rhs, ratio=ratio, **extra)])
    return rep.finalize()


# ------------------------------------------------------------ families

def _bump(grid, R=2.0):
    r = grid.r / R
    v = np.zeros(grid.shape)
    m = r < 1
    v[m] = np.exp(-1.0 / (1 - r[m] ** 2))
    return Field(grid, v)


def _random_packets(grid, seed, n=4):
    rng = np.random.default_rng(seed)
    xs = grid.coords()
    v = np.zeros(grid.shape, dtype=complex)
    for _ in range(n):
        c = rng.uniform(-1.5, 1.5, size=grid.dim)
        a = rng.uniform(1.0, 3.0)
        k = rng.uniform(-3.0, 3.0, size=grid.dim)
        amp = rng.normal() + 1j * rng.normal()
        r2 = sum((x - ci) ** 2 for x, ci in zip(xs, c))
        ph = sum(ki * x for ki, x in zip(k, xs))
        v = v + amp * np.exp(-a * r2 + 1j * ph)
    return Field(grid, v / np.abs(v).max())


@dataclass
class TestFamily:
    grid: Grid
    members: list                      # (name, Field)
    dilations: tuple = DILATIONS

    def boundary_max(self):
        out = 0.0
        for _, f in self.members:
            for lam in self.dilations:
                v = np.abs(dilate(f, lam).values)
                edge = np.zeros(self.grid.shape, dtype=bool)
                for ax in range(self.grid.dim):
                    sl = [slice(None)] * self.grid.dim
                    sl[ax] = 0
                    edge[tuple(sl)] = True
                out = max(out, float(v[edge].max()))
        return out

    def ladder(self, f):
        return [(lam, dilate(f, lam)) for lam in self.dilations]


def standard_family(grid: Grid, seed=0) -> TestFamily:
    members = [
        ("gaussian", gaussian(grid)),
        ("gaussian_wide", gaussian(grid, a=np.pi / 4)),
        ("gaussian_narrow", gaussian(grid, a=4 * np.pi)),
        ("modulated", gaussian(grid, a=np.pi / 2, k0=3.0)),
        ("bump", _bump(grid)),
        ("random_bandlimited", _random_packets(grid, seed)),
    ]
    return TestFamily(grid, members)


# ------------------------------------------------------------ Leibniz commutator

def leibniz_commutator(f: Field, g: Field, s):
    return _Ds(Field(f.grid, f.physical().values * g.physical().values), s) \
        - Field(f.grid, _Ds(f, s).values * g.physical().values) \
        - Field(f.grid, f.physical().values * _Ds(g, s).values)


def leibniz_commutator_test(f: Field, g: Field, s, A=1.0, p=2.0, p1=4.0, q1=4.0,
                            p2=4.0, q2=4.0, name="member", lam=1.0) -> RatioReport:
    """A is the radius of the ball region (default unit ball)."""
    if not 0 < s < 1:
        raise InequalityDomainError("need 0 < s < 1")
    _holder(p, p1, q1, "pair 1")
    _holder(p, p2, q2, "pair 2")
    lhs = lp_norm(leibniz_commutator(f, g, s), p)
    inA = f.grid.r < A
    Dg = _Ds(g, s)
    rhs = _norm_on(f, p1, inA) * lp_norm(Dg, q1) + _norm_on(f, p2, ~inA) * lp_norm(Dg, q2)
    return _single("gen_leib_1", lhs, rhs, name, lam)


# ------------------------------------------------------------ weighted interpolation

def interp_exponents(N, a, s, p, eta):
    if not a > 0:
        raise InequalityDomainError("need a > 0")
    if not 1 < p < N / a:
        raise InequalityDomainError(f"need 1 < p < N/a = {N / a:g}")
    if not 0 <= s < N / p - a:
        raise InequalityDomainError(f"need 0 <= s < N/p - a = {N / p - a:g}")
    if not (0 < eta < a and 1.0 / p - (a + eta) / N > 0):
        raise InequalityDomainError("need 0 < eta < a and (a+eta)/N < 1/p")
    return 1.0 / (1.0 / p - (a + eta) / N), 1.0 / (1.0 / p - (a - eta) / N)


def weighted_interp_lhs(f: Field, a, s, p, eps):
    g = f.grid
    w = Field(g, (g.r ** 2 + eps ** 2) ** (-a / 2))
    wf = Field(g, w.values * f.physical().values)
    D = _Ds(wf, s)
    comm = D - Field(g, _Ds(w, s).values * f.physical().values)
    return lp_norm(D, p) + lp_norm(comm, p)


def weighted_interp_test(f: Field, a, s, p, eta, eps_factors=(1.0, 0.5), name="member",
                         lam=1.0, check=True) -> RatioReport:
    """Ratio with the regularized weight at eps = factor*h for each factor."""
    N = f.grid.dim
    if check:
        qp, qm = interp_exponents(N, a, s, p, eta)
    else:
        qp = 1.0 / (1.0 / p - (a + eta) / N)
        qm = 1.0 / (1.0 / p - (a - eta) / N)
    Df = _Ds(f, s)
    rhs = np.sqrt(lp_norm(Df, qp) * lp_norm(Df, qm))
    rep = RatioReport("basic_interp")
    for k in eps_factors:
        lhs = weighted_interp_lhs(f, a, s, p, k * f.grid.h)
        rep.members.append(dict(name=name, lam=lam, lhs=lhs, rhs=rhs, ratio=lhs / rhs, eps_factor=k))
    return rep.finalize()


# ------------------------------------------------------------ chain rules

def F_power(z, alpha):
    return np.abs(z) ** alpha * z


def chain_rule_test(u: Field, s, alpha, variant=LIPSCHITZ, p=2.0, p1=4.0, p2=4.0, sigma=0.9,
                    v: Field = None, name="member", lam=1.0) -> RatioReport:
    """Lipschitz: F(z)=|z|^α z with G=|z|^α. Hoelder: the α-Hölder map |z|^α
    (the Hölder factor of F). Difference: F(u)-F(v) with q=p1, r=p2 and the
    α >= 1 or α < 1 right-hand side."""
    if not 0 < s < 1:
        raise InequalityDomainError("need 0 < s < 1")
    g = u.grid
    uv = u.physical().values
    if variant == LIPSCHITZ:
        _holder(p, p1, p2, "chain_2")
        lhs = lp_norm(_Ds(Field(g, F_power(uv, alpha)), s), p)
        rhs = lp_norm(Field(g, np.abs(uv) ** alpha), p1) * lp_norm(_Ds(u, s), p2)
        return _single("chain_2", lhs, rhs, name, lam)
    if variant == HOELDER:
        if not 0 < alpha < 1:
            raise InequalityDomainError("Hoelder variant needs 0 < alpha < 1")
        if not 0 < s < alpha:
            raise InequalityDomainError("Hoelder variant needs 0 < s < alpha")
        if not s / alpha < sigma < 1:
            raise InequalityDomainError("need s/alpha < sigma < 1")
        _holder(p, p1, p2, "chain_3")
        if not (1 - s / (alpha * sigma)) * p1 > 1:
            raise ExponentMismatch("need (1 - s/(alpha sigma)) p1 > 1")
        e1 = alpha - s / sigma
        lhs = lp_norm(_Ds(Field(g, np.abs(uv) ** alpha), s), p)
        rhs = lp_norm(u, e1 * p1) ** e1 * lp_norm(_Ds(u, sigma), s / sigma * p2) ** (s / sigma)
        return _single("chain_3", lhs, rhs, name, lam)
    if variant == DIFFERENCE:
        if v is None:
            raise ValueError("Difference variant needs v")
        _holder(p, p1, p2, "diff_estim")
        q, r = p1, p2
        vv = v.physical().values
        lhs = lp_norm(_Ds(Field(g, F_power(uv, alpha) - F_power(vv, alpha)), s), p)
        d = Field(g, uv - vv)
        nu = lp_norm(u, alpha * q) + lp_norm(v, alpha * q)
        dsn = lp_norm(_Ds(u, s), r) + lp_norm(_Ds(v, s), r)
        if alpha >= 1:
            rhs = nu ** alpha * lp_norm(_Ds(d, s), r) + dsn * nu ** (alpha - 1) * lp_norm(d, alpha * q)
        else:
            rhs = nu ** alpha * lp_norm(_Ds(d, s), r) + dsn * lp_norm(d, alpha * q) ** alpha
        return _single("diff_estim", lhs, rhs, name, lam)
    raise ValueError(f"unknown variant {variant}")


# ------------------------------------------------------------ family sweeps

def _merge(lemma, reports):
    out = RatioReport(lemma)
    for r in reports:
        out.members.extend(r.members)
    return out.finalize()


def family_sweep(lemma, family: TestFamily, **kw) -> RatioReport:
    """Run one probe over every family member and dilation."""
    reps = []
    for name, f in family.members:
        for lam, fl in family.ladder(f):
            if lemma == "gen_leib_1":
                reps.append(leibniz_commutator_test(fl, fl, name=name, lam=lam, **kw))
            elif lemma == "basic_interp":
                reps.append(weighted_interp_test(fl, name=name, lam=lam, **kw))
            elif lemma == "chain_2":
                reps.append(chain_rule_test(fl, variant=LIPSCHITZ, name=name, lam=lam, **kw))
            elif lemma == "chain_3":
                reps.append(chain_rule_test(fl, variant=HOELDER, name=name, lam=lam, **kw))
            elif lemma == "diff_estim":
                pert = Field(fl.grid, 0.1 * gaussian(fl.grid, a=2.0).values * fl.physical().values)
                reps.append(chain_rule_test(fl, variant=DIFFERENCE, v=fl + pert, name=name, lam=lam, **kw))
            else:
                raise ValueError(f"unknown lemma {lemma}")
    return _merge(lemma, reps)


def sharpness_probe(f_factory, a, s, p, Ms, L=16.0):
    """LHS of the weighted interpolation bound along an M-refinement (eps = h/2);
    growth signals an out-of-hypothesis exponent."""
    out = []
    for M in Ms:
        g = Grid(1, M, L)
        f = f_factory(g)
        out.append((M, weighted_interp_lhs(f, a, s, p, g.h / 2)))
    return out
