"""Exponent arithmetic for the weighted NLS  i u_t + Δu + μ|x|^{-b}|u|^α u = 0.

Critical index, admissibility geometry, regime classification and a small
solver that produces explicit Hölder/Strichartz exponent tuples.

Extended reals use ``math.inf``; IEEE arithmetic gives 2/inf == 0.0 exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

INF = math.inf
DEFAULT_ETA = 1e-3
DEFAULT_CAP = 1e6      # stand-in for "arbitrarily large r" when N = 1, 2
N_RHO_GRID = 10_000
EQ_TOL = 1e-12


class InfeasibleSystem(ValueError):
    """The restriction interval for rho is empty."""


class ParameterError(ValueError):
    def __init__(self, field_name, msg):
        super().__init__(f"{field_name}: {msg}")
        self.field = field_name


@dataclass(frozen=True)
class ProblemParams:
    N: int
    s: float
    b: float
    alpha: float
    mu: int = 1

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ParameterError("N", f"must be a positive integer, got {self.N}")
        if not self.alpha > 0:
            raise ParameterError("alpha", f"must be > 0, got {self.alpha}")
        if not self.b > 0:
            raise ParameterError("b", f"must be > 0, got {self.b}")
        if not self.s >= 0:
            raise ParameterError("s", f"must be >= 0, got {self.s}")
        if self.mu not in (1, -1):
            raise ParameterError("mu", f"must be +1 or -1, got {self.mu}")

    @property
    def s_c(self):
        return critical_index(self)

    @property
    def alpha_s(self):
        return alpha_max(self.N, self.s, self.b)

    def with_(self, **kw):
        d = dict(N=self.N, s=self.s, b=self.b, alpha=self.alpha, mu=self.mu)
        d.update(kw)
        return ProblemParams(**d)


def critical_index(params: ProblemParams) -> float:
    return params.N / 2 - (2 - params.b) / params.alpha


def alpha_max(N, s, b):
    if s < N / 2:
        return (4 - 2 * b) / (N - 2 * s)
    return INF


def _inv(x):
    # 1/x with 1/inf = 0
    return 0.0 if x == INF else 1.0 / x


def is_admissible(q, r, N, s, tol=EQ_TOL) -> bool:
    if not (2 <= q <= INF and 2 <= r <= INF):
        return False
    if q == 2 and r == INF and N == 2:
        return False
    return abs(2 * _inv(q) - (N / 2 - N * _inv(r) - s)) <= tol


def q_from_r(r, N, s):
    """Time exponent making (q, r) admissible at index s (inf when 2/q = 0)."""
    two_over_q = N / 2 - N * _inv(r) - s
    if abs(two_over_q) < 1e-15:
        return INF
    return 2.0 / two_over_q


@dataclass(frozen=True)
class AdmissiblePair:
    q: float
    r: float
    s: float
    N: int

    def __post_init__(self):
        if not is_admissible(self.q, self.r, self.N, self.s):
            raise ValueError(f"({self.q}, {self.r}) is not admissible at s={self.s}, N={self.N}")

    @classmethod
    def from_r(cls, r, N, s):
        return cls(q_from_r(r, N, s), r, s, N)


def as_range(N, s, tol=1e-9, cap=DEFAULT_CAP, eps0=0.01, eps1=0.02):
    """(lo, hi, lo_open, hi_open) for the r-range of the set A_s."""
    if abs(abs(s) - 1) < 1e-15:
        if N < 3:
            raise ValueError("A_{±1} is only defined for N >= 3")
        if s > 0:
            return 2 * N / (N - 2 - eps0 / 2), 2 * N / (N - 2 - eps0), False, False
        return 2 * N / (N - 2 + 2 * eps1), 2 * N / (N - 2 + eps1), False, False
    if abs(s) > 1:
        raise ValueError("A_s needs s in [-1, 1]")
    upper = 2 * N / (N - 2) if N > 2 else cap
    if s == 0:
        return 2.0, upper, True, N <= 2
    return 2 * N / (N - 2 * abs(s)), upper, True, True


def in_set_As(q, r, N, s, tol=1e-9, cap=DEFAULT_CAP, eps0=0.01, eps1=0.02) -> bool:
    lo, hi, lo_open, hi_open = as_range(N, s, tol, cap, eps0, eps1)
    # r may sit a few tol inside an open endpoint (e.g. q = inf with r = 2+), so
    # admissibility is accepted within the matching slack N*tol
    if not is_admissible(q, r, N, s, tol=max(EQ_TOL, N * tol)):
        return False
    if lo_open:
        lo = lo + tol
    if hi_open:
        hi = hi - tol
    return lo <= r <= hi


# ---------------------------------------------------------------- classify

def _is_int(x, tol=1e-12):
    return abs(x - round(x)) <= tol


def _is_even_pos(x, tol=1e-12):
    return _is_int(x, tol) and round(x) > 0 and round(x) % 2 == 0


@dataclass
class RegimeReport:
    regime: str
    s_c: float
    alpha_s: float
    reasons: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def record(self):
        d = {"regime": self.regime, "s_c": _fmt(self.s_c), "alpha_s": _fmt(self.alpha_s)}
        for name, ok in self.reasons:
            d["check." + name] = str(bool(ok)).lower()
        for k, v in self.metadata.items():
            d["meta." + k] = str(v)
        return canonical_record(d)


def _fmt(x):
    if isinstance(x, float):
        if x == INF:
            return "inf"
        return repr(x)
    return str(x)


def canonical_record(d) -> str:
    return "".join(f"{k}={_fmt(d[k])}\n" for k in sorted(d))


def classify(params: ProblemParams, space="H", crit_tol=1e-12) -> RegimeReport:
    """Regime of a parameter tuple. space = "H" (inhomogeneous) or "Hdot"."""
    N, s, b, a = params.N, params.s, params.b, params.alpha
    sc, a_s = params.s_c, params.alpha_s
    reasons = []

    def chk(name, ok):
        reasons.append((name, bool(ok)))
        return bool(ok)

    lam = b + s
    ill = [
        chk("ill.0<b<N", 0 < b < N),
        chk("ill.min(N,N/2+1)_le_b+s<N/2+2", min(N, N / 2 + 1) <= lam < N / 2 + 2),
        chk("ill.alpha_even", _is_even_pos(a)),
        chk("ill.b+s_not_integer_if_ge_N", lam < N or not _is_int(lam)),
    ]
    wp = [chk("wp.b<min(2,N-s,N/2+1-s)", 0 < b < min(2, N - s, N / 2 + 1 - s))]
    if not _is_even_pos(a):
        wp.append(chk("wp.s<alpha+1", s < a + 1))
    if space == "Hdot":
        wp.append(chk("wp.0_le_s_le_1", 0 <= s <= 1))
        wp.append(chk("wp.s<N/2", s < N / 2))
    crit = a_s != INF and abs(a - a_s) <= crit_tol * max(1.0, a_s)
    sub = a < a_s and not crit
    chk("wp.alpha<alpha_s", sub)
    chk("wp.alpha_eq_alpha_s", crit)
    if space == "Hdot" and N == 1 and sub:
        wp.append(chk("wp.alpha_ge_1_for_N1", a >= 1))

    meta = {"continuous_dependence": s <= 1 or space == "Hdot", "space": space}
    if all(ill):
        regime = "IllPosed"
    elif all(wp) and sub:
        regime = "SubcriticalWP"
    elif all(wp) and crit:
        regime = "CriticalWP"
    else:
        regime = "OutOfScope"
    return RegimeReport(regime, sc, a_s, reasons, meta)


# ------------------------------------------------------------ feasibility

@dataclass
class FeasibilityCertificate:
    rho: float
    r1: float
    r2: float
    r3: float
    q3: float
    s_tilde: float
    theta_sub: float
    eta: float
    mode: str
    s0: Optional[float] = None
    eps0: Optional[float] = None
    eps1: Optional[float] = None
    margin: float = 0.0
    interval: tuple = ()
    extra: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)

    def record(self):
        d = {k: getattr(self, k) for k in
             ("rho", "r1", "r2", "r3", "q3", "s_tilde", "theta_sub", "eta", "mode", "margin")}
        for k in ("s0", "eps0", "eps1"):
            if getattr(self, k) is not None:
                d[k] = getattr(self, k)
        for k, v in self.extra.items():
            d["extra." + k] = v
        for k, v in self.residuals.items():
            d["residual." + k] = v
        return canonical_record(d)


def _F(x):
    return Fraction(0) if x == INF else Fraction(x)


def _Finv(x):
    return Fraction(0) if x == INF else 1 / Fraction(x)


def _inhom_bounds(N, b, a, st, cap):
    """Lower/upper bounds on x = 1/rho as (value, name) lists."""
    lows = [((N - 2 * b - a * (N - 2 * st)) / (2 * N), "rho<2N/(N-2b-alpha(N-2s~))")]
    ups = [(1 - (b + st) / N, "rho>N/(N-b-s~)"), (0.5, "rho>2")]
    if N >= 3:
        lows.append(((N - 2) / (2 * N), "rho<2N/(N-2)"))
        ups.append(((N - 2 * b + 2 + a * (2 - N + 2 * st)) / (2 * N),
                    "rho>2N/(N-2b+2+alpha(2-N+2s~))"))
    else:
        lows.append((1.0 / cap, "rho<=cap"))
        ups.append((1 - (b - a * st) / N, "rho>N/(N-b+alpha s~)"))
    return lows, ups


def _inhom_exponents(x, N, b, a, st):
    ir1 = 1 - x - b / N
    ir3 = (ir1 + a * st / N) / (a + 1)
    ir2 = ir3 - st / N
    two_q3 = N / 2 - N * ir3
    return ir1, ir2, ir3, two_q3


def _inhom_ok(x, N, b, a, st, eta):
    ir1, ir2, ir3, two_q3 = _inhom_exponents(x, N, b, a, st)
    star = (N - 2) / (2 * N) if N >= 3 else 0.0
    for sg in (1, -1):
        i3 = ir3 + sg * eta / N
        q = two_q3 / 2 - sg * eta / 2
        if not (star < i3 < 0.5 and 0 <= q <= 0.5):
            return False
    return 0 < ir1 <= 1 and 0 < ir2 <= 1 and star < ir3 < 0.5 and 0 <= two_q3 <= 1


def _solve_inhom(params, st, eta, cap):
    N, b, a = params.N, params.b, params.alpha
    lows, ups = _inhom_bounds(N, b, a, st, cap)
    lo, lo_name = max(lows)
    hi, hi_name = min(ups)
    if not lo < hi:
        raise InfeasibleSystem(
            f"empty rho-interval: need {lo_name} and {hi_name}, "
            f"but 1/rho lower bound {lo:.6g} >= upper bound {hi:.6g}")
    xs = lo + (hi - lo) * (np.arange(N_RHO_GRID) + 0.5) / N_RHO_GRID
    margin = np.minimum(xs - lo, hi - xs)
    best, bx = -1.0, None
    for i in np.argsort(-margin, kind="stable"):
        if _inhom_ok(xs[i], N, b, a, st, eta):
            best, bx = margin[i], xs[i]
            break
    if bx is None:
        raise InfeasibleSystem("no grid point of the rho-interval satisfies the exponent ranges")
    return float(bx), float(best), (lo, hi)


def _theta(params, st):
    s, sc = params.s, params.s_c
    if abs(s - sc) < 1e-15:
        return 1.0
    return (st - sc) / (s - sc)


def _inhom_cert(params, eta, cap, mode="Inhomogeneous"):
    N, s, b, a = params.N, params.s, params.b, params.alpha
    sc = params.s_c
    if s < N / 2:
        cands = [s]
    else:
        lo = max(sc, 0.0)
        cands = [lo + (N / 2 - lo) * k / 10 for k in range(1, 10)]
    best, err = None, None
    for st in cands:
        try:
            x, m, iv = _solve_inhom(params, st, eta, cap)
        except InfeasibleSystem as e:
            err = err or e
            continue
        if best is None or m > best[1]:
            best = (x, m, iv, st)
    if best is None:
        raise err
    x, m, iv, st = best
    ir1, ir2, ir3, two_q3 = _inhom_exponents(x, N, b, a, st)
    cert = FeasibilityCertificate(
        rho=1 / x, r1=1 / ir1, r2=1 / ir2, r3=1 / ir3, q3=(INF if two_q3 == 0 else 2 / two_q3),
        s_tilde=st, theta_sub=_theta(params, st), eta=eta, mode=mode, margin=m, interval=iv)
    if mode == "Homogeneous":
        cert.s0 = s
    cert.residuals = certificate_residuals(cert, params)
    return cert


def _hom_cert(params, eta):
    N, s, b, a = params.N, params.s, params.b, params.alpha
    sigma = (1 - eta) * s
    s0 = (1 - eta) ** 2 * a * s
    ir8 = 0.5 - eta
    ir4 = a * (ir8 - s / N)
    ir6 = (a - s0 / sigma) * (ir8 - s / N)
    ir7 = (s0 / sigma) * (ir8 - (s - sigma) / N)
    x = (1 - b / N - ir4) / 2
    lo, hi = (N - 2) / (2 * N), (N - 2 * (s - s0)) / (2 * N)
    if not lo < x < hi:
        name = "1/rho>(N-2)/(2N)" if x <= lo else "1/rho<(N-2(s-s0))/(2N)"
        raise InfeasibleSystem(f"homogeneous system violates {name}: 1/rho={x:.6g}, interval ({lo:.6g}, {hi:.6g})")
    if not (0 < s0 < a and s0 / a < sigma < s and (a - s0 / sigma) > 0):
        raise InfeasibleSystem("s0/sigma bookkeeping fails: need 0<s0<alpha and s0/alpha<sigma<s")
    ir5 = x
    ir1 = ir4 + ir5
    ir3 = ir5 - s0 / N
    ir2 = ir6 + ir7
    if not (ir3 > 0 and ir2 > 0 and ir1 <= 1):
        raise InfeasibleSystem("homogeneous system gives a non-positive reciprocal exponent")
    two_q8 = N / 2 - N * ir8
    cert = FeasibilityCertificate(
        rho=1 / x, r1=1 / ir1, r2=1 / ir2, r3=1 / ir3, q3=2 / two_q8,
        s_tilde=s, theta_sub=_theta(params, s), eta=eta, mode="Homogeneous", s0=s0,
        margin=min(x - lo, hi - x), interval=(lo, hi),
        extra={"sigma": sigma, "r4": 1 / ir4, "r5": 1 / ir5, "r6": 1 / ir6, "r7": 1 / ir7, "r8": 1 / ir8})
    cert.residuals = certificate_residuals(cert, params)
    return cert


def _crit_cert(params, eta, eps=None):
    N, b, a = params.N, params.b, params.alpha
    sc = params.s_c
    extra = {}
    eps0 = eps1 = None
    if sc < -1e-12 or sc > 1 + 1e-12:
        raise InfeasibleSystem(f"critical system needs 0 <= s_c <= 1, got s_c={sc:.6g}")
    if sc < 1 - 1e-12:
        if N >= 2:
            ir2 = (N - 2 * sc) / (2 * N) - eta
            x = (N - 2) / (2 * N) + a * eta / 2
        else:
            x = eta
            ir2 = (1 - b - 2 * eta) / a
        ir3 = x
        lo, hi = ((N - 2) / (2 * N), 0.5)
    else:
        if N < 3:
            raise InfeasibleSystem("s_c = 1 endpoint needs N >= 3")
        if eps is None:
            eps = 20 * eta / min(a, 1.0)
        if eps >= 1:
            raise InfeasibleSystem(f"endpoint slack eps={eps:.3g} is not small; reduce eta")
        ir2 = ir3 = (N - 2 - eps) / (2 * N)
        x = (N - 2 + (1 + (4 - 2 * b) / (N - 2)) * eps) / (2 * N)
        eps0 = (1 + (2 - b) / (2 * (N - 2))) * eps
        eps1 = (1 + (2 - b) / (N - 2)) * eps
        extra["eps"] = eps
        lo, hi = (N - 2 + eps1) / (2 * N), (N - 2 + 2 * eps1) / (2 * N)
    ir1 = 1 - x - b / N
    if not (lo < x < hi and 0 < ir2 and ir1 > 0):
        raise InfeasibleSystem(f"critical system: 1/rho={x:.6g} outside ({lo:.6g}, {hi:.6g}) or 1/r2<=0")
    two_q3 = N / 2 - N * ir3 - sc
    cert = FeasibilityCertificate(
        rho=1 / x, r1=1 / ir1, r2=1 / ir2, r3=1 / ir3, q3=(INF if abs(two_q3) < 1e-15 else 2 / two_q3),
        s_tilde=sc, theta_sub=1.0, eta=eta, mode="Critical", eps0=eps0, eps1=eps1,
        margin=min(x - lo, hi - x), interval=(lo, hi), extra=extra)
    cert.residuals = certificate_residuals(cert, params)
    return cert


def strichartz_feasible(params: ProblemParams, mode="Inhomogeneous", eta=DEFAULT_ETA,
                        cap=DEFAULT_CAP) -> FeasibilityCertificate:
    """Explicit exponent tuple for the nonlinear estimate of the requested mode.

    The classification is deliberately not consulted: boundary sweeps rely on
    the solver failing on its own when the rho-interval empties.
    """
    if mode == "Inhomogeneous":
        return _inhom_cert(params, eta, cap)
    if mode == "Homogeneous":
        if params.alpha >= 1 or params.N == 1:
            return _inhom_cert(params, eta, cap, mode="Homogeneous")
        return _hom_cert(params, eta)
    if mode == "Critical":
        return _crit_cert(params, eta)
    raise ValueError(f"unknown mode {mode!r}")


def certificate_residuals(cert: FeasibilityCertificate, params: ProblemParams) -> dict:
    """Exact rational residuals of the identities declared by the certificate's mode."""
    N = Fraction(params.N)
    b, a, s = _F(params.b), _F(params.alpha), _F(params.s)
    sc = N / 2 - (2 - b) / a
    st = _F(cert.s_tilde)
    irho, ir1, ir2, ir3 = (_Finv(v) for v in (cert.rho, cert.r1, cert.r2, cert.r3))
    iq3 = _Finv(cert.q3)
    res = {}
    res["holder_rho"] = (1 - irho) - (b / N + ir1)
    if cert.mode == "Critical":
        res["holder_r1"] = ir1 - (a * ir2 + ir3)
        res["adm_q3"] = 2 * iq3 - (N / 2 - N * ir3 - _F(cert.s_tilde))
    elif cert.mode == "Homogeneous" and cert.extra:
        e = cert.extra
        ir4, ir5, ir6, ir7, ir8 = (_Finv(e[k]) for k in ("r4", "r5", "r6", "r7", "r8"))
        s0, sig = _F(cert.s0), _F(e["sigma"])
        res["holder_r1_a"] = ir1 - (ir2 + ir3)
        res["holder_r1_b"] = ir1 - (ir4 + ir5)
        res["holder_r2"] = ir2 - (ir6 + ir7)
        res["sobolev_r3"] = ir3 - (ir5 - s0 / N)
        res["r8_r4"] = ir8 - (ir4 / a + s / N)
        res["r8_r6"] = ir8 - (ir6 / (a - s0 / sig) + s / N)
        res["r8_r7"] = ir8 - (ir7 / (s0 / sig) + (s - sig) / N)
        res["adm_q8"] = 2 * iq3 - (N / 2 - N * ir8)
    else:
        res["holder_r1"] = ir1 - (a * ir2 + ir3)
        res["sobolev_r2"] = ir2 - (ir3 - st / N)
        res["adm_q3"] = 2 * iq3 - (N / 2 - N * ir3)
        # 1/gamma' = alpha(s~ - s_c)/2 + (alpha+1)/q3 with (gamma, rho) L2-admissible
        igam = (N / 2 - N * irho) / 2
        res["gamma_identity"] = (1 - igam) - (a * (st - sc) / 2 + (a + 1) * iq3)
    res["theta"] = _F(cert.theta_sub) * (s - sc) - (st - sc)
    return {k: float(abs(v)) for k, v in res.items()}
