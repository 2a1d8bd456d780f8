"""Curated regression corpus: every worked example of the library plus the
well-posed/ill-posed dichotomy table, each with a stored expectation.

An entry is checked in one of four ways:
    close   |value - expected| <= tol
    below   value <= tol
    equal   value == expected (categorical)
    raises  the call raises the named exception
Tolerances of close/below entries scale with the --tighten factor.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from types import SimpleNamespace

import numpy as np

from . import duhamel as du
from . import evolve as ev
from . import exponents as ex
from . import ineq_lab as iq
from . import propagator as pr
from . import spectral as sp
from . import weights as wt


@dataclass
class Entry:
    id: str
    criterion: str
    check: str            # close | below | equal | raises
    fn: object
    expected: object = None
    tol: float = 0.0
    slow: bool = False


@dataclass
class Outcome:
    entry: Entry
    value: object
    tol: float
    passed: bool


def evaluate(e: Entry, tighten=1.0) -> Outcome:
    tol = e.tol * tighten
    if e.check == "raises":
        try:
            e.fn()
            value = "no exception"
        except Exception as err:  # the class name is the observed value
            value = type(err).__name__
        return Outcome(e, value, tol, value == e.expected)
    value = e.fn()
    if e.check == "equal":
        return Outcome(e, value, tol, value == e.expected)
    v = float(value)
    if e.check == "close":
        ok = bool(np.isfinite(v) and abs(v - e.expected) <= tol)
    elif e.check == "below":
        ok = bool(np.isfinite(v) and v <= tol)
    else:
        raise ValueError(f"unknown check {e.check}")
    return Outcome(e, v, tol, ok)


# ------------------------------------------------------------ helpers

def _rel(a, b):
    return abs(a - b) / abs(b)


def _plane_wave(g, k):
    return sp.Field(g, np.exp(1j * k * g.dxi * g.x1))


def _spectral_const():
    g = sp.Grid(1, 64, 4.0)
    fh = sp.to_frequency(sp.Field(g, np.ones(g.shape))).values
    return _rel(fh[0].real, (2 * g.L) / np.sqrt(2 * np.pi)) + float(np.abs(fh[1:]).max())


def _plane_single_mode():
    g = sp.Grid(1, 64, 4.0)
    fh = np.abs(sp.to_frequency(_plane_wave(g, 5)).values)
    return int(np.sum(fh > 1e-10 * fh.max()))


def _frac_identity():
    g = sp.Grid(1, 128, 8.0)
    f = sp.gaussian(g)
    return sp.lp_norm(sp.fractional_derivative(f, 0.0) - f) / sp.lp_norm(f)


def _frac_plane():
    g = sp.Grid(1, 64, 4.0)
    f = _plane_wave(g, 5)
    xi0 = 5 * g.dxi
    d = sp.fractional_derivative(f, 0.7).physical()
    return float(np.abs(d.values - xi0 ** 0.7 * f.values).max())


def _indicator_l1():
    g = sp.Grid(2, 32, 4.0)
    v = np.zeros(g.shape)
    v[3, 5] = 1.0
    return _rel(sp.lp_norm(sp.Field(g, v), 1), g.h ** 2)


def _gauss_linf():
    return sp.lp_norm(sp.gaussian(sp.Grid(2, 64, 4.0)), np.inf)


def _sobolev_zero():
    f = sp.gaussian(sp.Grid(1, 128, 8.0))
    return _rel(sp.sobolev_norm(f, 0.0), sp.lp_norm(f))


def _sobolev_plane():
    g = sp.Grid(1, 64, 4.0)
    xi0 = 5 * g.dxi
    return _rel(sp.sobolev_norm(_plane_wave(g, 5), 1.3), (1 + xi0 ** 2) ** 0.65 * np.sqrt(2 * g.L))


def _mixed_stationary():
    g = sp.Grid(1, 128, 8.0)
    f = sp.gaussian(g)
    tr = sp.Trajectory(g)
    for t in (0.0, 0.5, 1.0):
        tr.append(t, f)
    return _rel(sp.mixed_norm(tr, np.inf, 4.0), sp.lp_norm(f, 4.0))


def _mixed_single():
    g = sp.Grid(1, 128, 8.0)
    f = sp.gaussian(g)
    tr = sp.Trajectory(g)
    tr.append(0.0, f)
    return _rel(sp.mixed_norm(tr, 3.0, 2.0, dt_single=0.25), 0.25 ** (1 / 3) * sp.lp_norm(f))


def _weight_unit():
    g = sp.Grid(1, 64, 4.0)
    w = wt.eval_weight(g, 0.7).values.real
    j = np.argmin(np.abs(g.x1 - 1.0))
    return abs(w[j] - 1.0)


def _weight_reg_max():
    g = sp.Grid(2, 64, 4.0)
    w = wt.eval_weight(g, 1.2, g.h).values.real
    ok = np.all(np.isfinite(w)) and np.unravel_index(np.argmax(w), g.shape) == g.origin_index
    return "finite, max at origin" if ok else "violated"


def _hormander_s0():
    return wt.verify_hormander(sp.Grid(1, 1024, 16.0), 0.4, 0.0)


def _free_identity():
    f = sp.gaussian(sp.Grid(2, 64, 8.0))
    return sp.lp_norm(pr.free_evolve(f, 0.0) - f) / sp.lp_norm(f)


def _free_unitary():
    f = sp.gaussian(sp.Grid(2, 64, 8.0), k0=1.0)
    return _rel(sp.lp_norm(pr.free_evolve(f, 0.7)), sp.lp_norm(f))


def _gauss_pin():
    err = 0.0
    for N in (1, 2):
        g = sp.Grid(N, 1024 if N == 1 else 256, 16.0)
        f = sp.gaussian(g)
        for t in (0.1, 0.5, 1.0):
            v = pr.free_evolve(f, t).physical().values[g.origin_index]
            err = max(err, abs(v - pr.gaussian_at_origin(t, N)) / abs(pr.gaussian_at_origin(t, N)))
    return err


def _gnl_modulus():
    err = abs(pr.gaussian_nonlinearity_at_origin(0.0, 2, 2) - 1)
    for t in (0.1, 0.5, 1.0):
        v = abs(pr.gaussian_nonlinearity_at_origin(t, 2, 2))
        err = max(err, _rel(v, (1 + 16 * np.pi ** 2 * t ** 2) ** (-2 * 3 / 4)))
    return err


def _h_beta():
    return abs(pr.h_function(0.0, 0.3, 1.5).value - math.gamma(0.3) * math.gamma(1.5) / math.gamma(1.8))


def _h_11():
    y = 7.3
    return abs(pr.h_function(y, 1.0, 1.0).value - (np.exp(1j * y) - 1) / (1j * y))


def _h_remainder_slope():
    th, be = 0.3, 0.9
    ys = np.geomspace(50, 5000, 25)
    r = [abs(pr.h_function(y, th, be, tol=1e-12).value - pr._two_terms(y, th, be)) for y in ys]
    return float(np.polyfit(np.log(ys), np.log(r), 1)[0]) - (-min(th + 1, be + 1) + 0.1)


def _h_interference():
    # theta = beta: |H| oscillates with period 2 pi in y
    th = be = 0.6
    y0 = 400.0
    m = lambda y: abs(pr.h_function(y, th, be).value) * y ** th
    a = [m(y0), m(y0 + 2 * np.pi)]
    b = m(y0 + np.pi)
    return _rel(a[1], a[0]) / _rel(b, a[0])


def _large_x():
    # remainder after the leading term decays like y^{-eta}, eta = min(theta, beta+1)
    t, lam, N = 0.5, 0.7, 1
    xs = np.geomspace(20, 400, 20)
    r = [abs(pr.weight_evolution(t, x, lam, N) - pr.leading_large_x(t, x, lam, N)) for x in xs]
    eta = min(lam / 2, (N - lam) / 2 + 1)
    return abs(np.polyfit(np.log(xs ** 2 / (4 * t)), np.log(r), 1)[0] + eta)


def _strichartz_unit():
    u0 = sp.gaussian(sp.Grid(1, 256, 16.0))
    return abs(pr.strichartz_ratio(u0, ex.AdmissiblePair(np.inf, 2.0, 0.0, 1), 1.0, 5) - 1)


def _duh_cfg(p, t=0.5, ladder=None):
    return du.DuhamelConfig(p, t, ladder=ladder or [])


def _duh_mu_linear():
    p = ex.ProblemParams(1, 0.3, 0.4, 2, mu=1)
    g = sp.Grid(1, 1024, 16.0)
    u0 = sp.gaussian(g)
    a = du.duhamel_term(u0, _duh_cfg(p))
    b = du.duhamel_term(u0, _duh_cfg(p.with_(mu=-1)))
    return sp.lp_norm(a + b) / sp.lp_norm(a)


def _duh_split():
    p = ex.ProblemParams(1, 0.5, 0.8, 2)
    g = sp.Grid(1, 2048, 16.0)
    tot, I, II, III = du.duhamel_with_parts(sp.gaussian(g), _duh_cfg(p))
    return sp.lp_norm(tot - I - II - III) / sp.lp_norm(tot)


def _duh_s0():
    p = ex.ProblemParams(1, 0.0, 0.4, 2)
    g = sp.Grid(1, 1024, 16.0)
    I, II, III = du.decompose(sp.gaussian(g), _duh_cfg(p))
    return float(np.abs(I.physical().values).max())


def _dichotomy(N, s, b):
    def fn():
        p = ex.ProblemParams(N, s, b, 2)
        ladder, refine = du.standard_ladder(p)
        return du.refinement_study(du.DuhamelConfig(p, 0.5, ladder=ladder, refine=refine)).verdict
    return fn


def _iii21_slope():
    p = ex.ProblemParams(1, 0.5, 0.8, 2)
    ladder, _ = du.standard_ladder(p)
    rep = du.refinement_study(du.DuhamelConfig(p, 0.5, ladder=ladder, refine="L"), split=True)
    Ls = [r["L"] for r in rep.rungs]
    return du._slope(np.sqrt(Ls), [r["III21"] for r in rep.rungs])


def _ev_params(mu=-1):
    return ex.ProblemParams(1, 1.0, 0.5, 2, mu=mu)


def _ev_free():
    g = sp.Grid(1, 256, 16.0)
    u0 = sp.gaussian(g, a=1.0)
    zero = sp.Field(g, np.zeros(g.shape))
    u = ev.strang_step(u0, 0.1, _ev_params(), zero)
    return sp.lp_norm(u - pr.free_evolve(u0, 0.1)) / sp.lp_norm(u0)


def _ev_phase():
    g = sp.Grid(1, 256, 16.0)
    u0 = sp.gaussian(g, a=1.0)
    p = _ev_params(1)
    w = ev.default_weight(g, p)
    rot = sp.Field(g, ev._phase(u0.values, 0.05, p, w.values.real))
    a = np.abs(ev.strang_step(u0, 0.1, p, w).values)
    b = np.abs(pr.free_evolve(rot, 0.1).values)
    return float(np.abs(a - b).max())


def _ev_zero():
    g = sp.Grid(1, 128, 8.0)
    tr = ev.run(sp.Field(g, np.zeros(g.shape)), _ev_params(), 0.1, ev.IntegratorControls(0.01))
    return max(float(np.abs(f.values).max()) for f in tr.snapshots)


def _ev_conserved_zero():
    g = sp.Grid(1, 128, 8.0)
    m, e = ev.conserved(sp.Field(g, np.zeros(g.shape)), _ev_params(), ev.default_weight(g, _ev_params()))
    return abs(m) + abs(e)


def _ev_linear_energy():
    g = sp.Grid(1, 256, 16.0)
    u0 = sp.gaussian(g, a=1.0, k0=1.0)
    e0 = 0.5 * ev.gradient_sq(u0)
    return _rel(0.5 * ev.gradient_sq(pr.free_evolve(u0, 0.8)), e0)


def _ev_synthetic():
    p = ex.ProblemParams(1, 1.0, 0.5, 4)
    rep = ev.blowup_rate(ev.synthetic_blowup_trajectory(p, T_star=1.0, C=2.0), p)
    q = np.array([v for _, v in rep.rate_quantity])
    return float(np.abs(q / np.median(q) - 1).max())


def _ev_degenerate():
    p = ex.ProblemParams(1, 0.125, 0.5, 4)
    ev.blowup_rate(ev.synthetic_blowup_trajectory(p, s=1.0), p, s=p.s_c)


_IQ_GRID = (1, 2048, 32.0)


def _iq_const():
    g = sp.Grid(*_IQ_GRID)
    f = sp.gaussian(g)
    one = sp.Field(g, np.ones(g.shape))
    return sp.lp_norm(iq.leibniz_commutator(f, one, 0.4)) / sp.lp_norm(f)


def _iq_swap():
    g = sp.Grid(*_IQ_GRID)
    f, h = sp.gaussian(g), sp.gaussian(g, a=np.pi / 4, k0=2.0)
    a = iq.leibniz_commutator(f, h, 0.4)
    b = iq.leibniz_commutator(h, f, 0.4)
    return sp.lp_norm(a - b) / sp.lp_norm(a)


def _iq_s0():
    g = sp.Grid(*_IQ_GRID)
    r = iq.weighted_interp_test(sp.gaussian(g), 0.4, 0.0, 2.0, 0.05)
    return "finite" if r.all_finite else "infinite"


def _iq_diff_zero():
    g = sp.Grid(*_IQ_GRID)
    u = sp.gaussian(g, k0=1.0)
    r = iq.chain_rule_test(u, 0.5, 2.0, iq.DIFFERENCE, v=u)
    return r.members[0]["lhs"]


def _cli_classify():
    from .cli import main
    import io
    import contextlib
    import tempfile
    buf = io.StringIO()
    with tempfile.TemporaryDirectory() as d, contextlib.redirect_stdout(buf):
        code = main(["--out", d, "classify", "--N", "1", "--s", "0.5", "--b", "0.8", "--alpha", "2"])
    return f"{code}:{'IllPosed' in buf.getvalue()}"


def _cli_bad_alpha():
    from .cli import main
    import io
    import contextlib
    import tempfile
    buf = io.StringIO()
    with tempfile.TemporaryDirectory() as d, contextlib.redirect_stderr(buf):
        code = main(["--out", d, "classify", "--N", "1", "--s", "0.5", "--b", "0.8", "--alpha", "-1"])
    return f"{code}:{'alpha' in buf.getvalue()}"


def _sc_formula(N, b, alpha):
    return ex.critical_index(SimpleNamespace(N=N, b=b, alpha=alpha))


def _crit_cert():
    c = ex.strichartz_feasible(ex.ProblemParams(3, 1, 1, 2), mode="Critical")
    eps = c.eps0 / 1.5   # eps0 = [1 + (2-b)/(2(N-2))] eps at N=3, b=1
    return max(max(abs(v) for v in c.residuals.values()), abs(c.eps1 - 2 * eps))


E = Entry
ENTRIES = [
    E("exponents.sc_N3_b1_a2", "1", "close", lambda: _sc_formula(3, 1, 2), 1.0, 1e-12),
    E("exponents.sc_N2_b0_a2", "1", "close", lambda: _sc_formula(2, 0, 2), 0.0, 1e-12),
    E("exponents.alpha_max_N3_s1_b1", "1", "close", lambda: ex.alpha_max(3, 1, 1), 2.0, 1e-12),
    E("exponents.alpha_max_N2_s1_b05", "1", "equal", lambda: str(ex.alpha_max(2, 1, 0.5)), "inf"),
    E("exponents.admissible_inf_2_N3", "1", "equal", lambda: ex.is_admissible(np.inf, 2, 3, 0), True),
    E("exponents.admissible_2_inf_N2", "1", "equal", lambda: ex.is_admissible(2, np.inf, 2, 0), False),
    E("exponents.As_2plus_N3", "1", "equal", lambda: ex.in_set_As(np.inf, 2 + 2e-9, 3, 0), True),
    E("exponents.As_endpoint_excluded", "1", "equal",
      lambda: ex.in_set_As(ex.q_from_r(3.0, 3, 0.5), 3.0, 3, 0.5), False),
    E("exponents.As_s1_N2", "1", "raises", lambda: ex.as_range(2, 1), "ValueError"),
    E("exponents.classify_N1_s05_b08", "2", "equal",
      lambda: ex.classify(ex.ProblemParams(1, 0.5, 0.8, 2)).regime, "IllPosed"),
    E("exponents.classify_N3_s1_b1", "2", "equal",
      lambda: ex.classify(ex.ProblemParams(3, 1, 1, 2)).regime, "CriticalWP"),
    E("exponents.critical_certificate", "2", "below", _crit_cert, None, 1e-12),
    E("exponents.infeasible_at_boundary", "2", "raises",
      lambda: ex.strichartz_feasible(ex.ProblemParams(1, 0.5, 1.0, 2)), "InfeasibleSystem"),
    E("spectral.constant_mode", "3", "below", _spectral_const, None, 1e-12),
    E("spectral.plane_wave_single_mode", "3", "equal", _plane_single_mode, 1),
    E("spectral.frac_sigma0", "3", "below", _frac_identity, None, 1e-14),
    E("spectral.frac_plane_wave", "3", "below", _frac_plane, None, 1e-12),
    E("spectral.indicator_l1", "3", "below", _indicator_l1, None, 1e-14),
    E("spectral.gaussian_linf", "3", "close", _gauss_linf, 1.0, 1e-15),
    E("spectral.sobolev_sigma0", "3", "below", _sobolev_zero, None, 1e-14),
    E("spectral.sobolev_plane_wave", "3", "below", _sobolev_plane, None, 1e-13),
    E("spectral.mixed_stationary", "3", "below", _mixed_stationary, None, 1e-15),
    E("spectral.mixed_single", "3", "below", _mixed_single, None, 1e-14),
    E("weights.unit_radius", "6", "below", _weight_unit, None, 1e-15),
    E("weights.regularized_max_origin", "6", "equal", _weight_reg_max, "finite, max at origin"),
    E("weights.riesz_s0", "6", "close", lambda: wt.riesz_constant(1, 0.4, 1e-9).real, 1.0, 1e-8),
    E("weights.riesz_pole", "6", "raises", lambda: wt.riesz_constant(2, 1.2, 0.8), "PoleError"),
    E("weights.hormander_s0", "6", "below", _hormander_s0, None, 1e-10),
    E("propagator.t0_identity", "3", "below", _free_identity, None, 1e-15),
    E("propagator.unitary", "3", "below", _free_unitary, None, 1e-12),
    E("propagator.gaussian_origin_pin", "3", "below", _gauss_pin, None, 1e-8),
    E("propagator.gaussian_nonlinearity_modulus", "3", "below", _gnl_modulus, None, 1e-14),
    E("propagator.h_beta_at_0", "4", "below", _h_beta, None, 1e-10),
    E("propagator.h_11_elementary", "4", "below", _h_11, None, 1e-10),
    E("propagator.h_remainder_slope", "5", "below", _h_remainder_slope, None, 0.0),
    E("propagator.h_period_2pi", "5", "below", _h_interference, None, 0.05),
    E("propagator.large_x_remainder_order", "6", "below", _large_x, None, 0.02),
    E("propagator.pole_lam_eq_N", "6", "raises", lambda: pr.weight_evolution(0.5, 1.0, 1.0, 1), "PoleError"),
    E("propagator.strichartz_unitarity", "3", "below", _strichartz_unit, None, 1e-12),
    E("duhamel.mu_sign_linearity", "7", "below", _duh_mu_linear, None, 1e-14),
    E("duhamel.split_identity", "7", "below", _duh_split, None, 1e-6),
    E("duhamel.I_vanishes_s0", "7", "below", _duh_s0, None, 1e-14),
    E("duhamel.dichotomy_N1_s05_b08", "7", "equal", _dichotomy(1, 0.5, 0.8), "Diverging", slow=True),
    E("duhamel.dichotomy_N1_s02_b03", "7", "equal", _dichotomy(1, 0.2, 0.3), "Bounded"),
    E("duhamel.dichotomy_N2_s12_b10", "7", "equal", _dichotomy(2, 1.2, 1.0), "Diverging", slow=True),
    E("duhamel.dichotomy_N2_s04_b04", "7", "equal", _dichotomy(2, 0.4, 0.4), "Bounded", slow=True),
    E("duhamel.iii21_L_slope", "7", "close", _iii21_slope, 0.15, 0.045, slow=True),
    E("evolve.zero_weight_free", "8", "below", _ev_free, None, 1e-14),
    E("evolve.phase_preserves_modulus", "8", "below", _ev_phase, None, 1e-14),
    E("evolve.zero_data", "8", "below", _ev_zero, None, 0.0),
    E("evolve.conserved_zero", "8", "below", _ev_conserved_zero, None, 0.0),
    E("evolve.linear_energy", "8", "below", _ev_linear_energy, None, 1e-12),
    E("evolve.synthetic_rate", "9", "below", _ev_synthetic, None, 0.1),
    E("evolve.degenerate_s_eq_sc", "9", "raises", _ev_degenerate, "ValueError"),
    E("ineq.leibniz_constant_g", "10", "below", _iq_const, None, 1e-10),
    E("ineq.leibniz_swap", "10", "below", _iq_swap, None, 1e-14),
    E("ineq.interp_s0_finite", "10", "equal", _iq_s0, "finite"),
    E("ineq.difference_v_eq_u", "10", "below", _iq_diff_zero, None, 1e-10),
    E("cli.classify_example", "11", "equal", _cli_classify, "0:True"),
    E("cli.invalid_alpha", "11", "equal", _cli_bad_alpha, "1:True"),
]


def select(ids=None, skip_slow=False):
    out = ENTRIES if ids is None else [e for e in ENTRIES if e.id in set(ids)]
    if ids is not None:
        unknown = set(ids) - {e.id for e in ENTRIES}
        if unknown:
            raise KeyError(f"unknown corpus entries: {sorted(unknown)}")
    return [e for e in out if not (skip_slow and e.slow)]
