import numpy as np
import pytest
from scipy.integrate import quad_vec

from inlslab.duhamel import (BOUNDED, DIVERGING, INCONCLUSIVE, DuhamelConfig, FilonRule, converged_duhamel,
                             decompose, duhamel_term, duhamel_with_parts, expected_verdict, refinement_study,
                             standard_ladder, third_term_split, verdict_from_norms)
from inlslab.exponents import ProblemParams
from inlslab.spectral import Grid, gaussian, lp_norm


def cfg_for(N=1, s=0.3, b=0.4, alpha=2, mu=1, t=0.5, **kw):
    return DuhamelConfig(ProblemParams(N, s, b, alpha, mu), t, **kw)


def test_config_validation():
    with pytest.raises(ValueError):
        cfg_for(t=0.0)
    with pytest.raises(ValueError):
        cfg_for(tau_nodes=12)
    with pytest.raises(ValueError):
        cfg_for(ladder=[(16, 512, None), (16, 256, None)])
    with pytest.raises(ValueError):
        cfg_for(ladder=[(16, 256, None), (8, 512, None)])


def test_filon_rule_exact_for_polynomials():
    g = Grid(1, 64, 4.0)
    t = 0.7
    rule = FilonRule(g, t, 16)
    om = g.xi2
    taus = rule.nodes()
    got = rule.integrate(np.full(g.shape, tau ** 3, complex) for tau in taus)
    # ∫_0^t e^{-i(t-τ)ω} τ^3 dτ in closed form
    z = -1j * om
    with np.errstate(divide="ignore", invalid="ignore"):
        exact = np.exp(z * t) * (6 - np.exp(-z * t) * (6 + 6 * z * t + 3 * (z * t) ** 2 + (z * t) ** 3)) / z ** 4
    exact[om == 0] = t ** 4 / 4
    assert np.abs(got - exact).max() < 1e-11


def test_mu_sign_linearity():
    g = Grid(1, 1024, 16.0)
    u0 = gaussian(g)
    a = duhamel_term(u0, cfg_for(mu=1))
    b = duhamel_term(u0, cfg_for(mu=-1))
    assert lp_norm(a + b) == 0.0
    assert np.all(np.isfinite(a.values))


def test_small_b_against_direct_summation_oracle():
    # b -> 0: unweighted first iterate, DFT by explicit summation, τ by adaptive quadrature
    g = Grid(1, 128, 8.0)
    s, alpha, mu, t = 0.4, 2, 1, 0.3
    u0 = gaussian(g)
    x, xi = g.x1, g.xi1
    E = np.exp(-1j * np.outer(xi, x)) * g.h / np.sqrt(2 * np.pi)
    Einv = np.exp(1j * np.outer(x, xi)) * g.dxi / np.sqrt(2 * np.pi)
    u0h = E @ u0.values

    def integrand(tau):
        U = Einv @ (np.exp(-1j * tau * xi ** 2) * u0h)
        F = np.abs(U) ** alpha * U
        return np.exp(-1j * (t - tau) * xi ** 2) * np.abs(xi) ** s * (E @ F)

    re = quad_vec(lambda tau: integrand(tau).real, 0, t, epsabs=1e-13, epsrel=1e-12)[0]
    im = quad_vec(lambda tau: integrand(tau).imag, 0, t, epsabs=1e-13, epsrel=1e-12)[0]
    oracle = 1j * mu * (Einv @ (re + 1j * im))
    got = duhamel_term(u0, cfg_for(s=s, b=1e-10, alpha=alpha, mu=mu, t=t)).physical().values
    assert np.linalg.norm(got - oracle) / np.linalg.norm(oracle) < 1e-6


def test_tau_node_doubling_converges():
    g = Grid(1, 1024, 16.0)
    u0 = gaussian(g)
    cfg = cfg_for(s=0.2, b=0.3)
    a = lp_norm(duhamel_term(u0, cfg))
    b = lp_norm(duhamel_term(u0, cfg_for(s=0.2, b=0.3, tau_nodes=128)))
    assert abs(a - b) / b < 1e-6
    f, n = converged_duhamel(u0, cfg)
    assert n >= cfg.tau_nodes and lp_norm(f) == pytest.approx(b, rel=1e-6)


@pytest.mark.parametrize("N,s,b", [(1, 0.5, 0.8), (1, 0.2, 0.3), (2, 1.2, 1.0)])
def test_splitting_identity(N, s, b):
    g = Grid(N, 2048 if N == 1 else 128, 16.0 if N == 1 else 12.0)
    tot, I, II, III = duhamel_with_parts(gaussian(g), cfg_for(N=N, s=s, b=b))
    assert lp_norm(tot - I - II - III) / lp_norm(tot) < 1e-6
    I2, II2, III2 = decompose(gaussian(g), cfg_for(N=N, s=s, b=b))
    assert lp_norm(I2 - I) <= 1e-14 * lp_norm(tot)


def test_s0_I_vanishes():
    g = Grid(1, 512, 16.0)
    I, II, III = decompose(gaussian(g), cfg_for(s=0.0, b=0.4))
    assert np.abs(I.values).max() == 0.0


def test_third_term_split_sums_to_III():
    g = Grid(1, 1024, 16.0)
    cfg = cfg_for(s=0.5, b=0.8)
    _, _, III = decompose(gaussian(g), cfg)
    a, b, c = third_term_split(gaussian(g), cfg, III)
    assert lp_norm(a + b + c - III) <= 1e-13 * lp_norm(III)


def test_well_posed_s0_pieces_saturate():
    p = ProblemParams(1, 0.0, 0.4, 2)
    ladder = [(16.0, 256 * 2 ** k, None) for k in range(4)]
    rep = refinement_study(DuhamelConfig(p, 0.5, ladder=ladder), split=True)
    for key in ("III1", "III21", "III22", "norm"):
        v = [r[key] for r in rep.rungs]
        d = np.abs(np.diff(v))
        r = d[-1] / d[-2]
        # geometric decay of increments; the projected tail stays small
        assert r < 0.85 and d[-1] * r / (1 - r) < 0.1 * v[-1], key


def test_verdict_rules():
    assert verdict_from_norms([1, 1.1, 1.25, 1.4], 0.2) == DIVERGING
    assert verdict_from_norms([1, 1.1, 1.15, 1.17], 0.02) == BOUNDED
    assert verdict_from_norms([1, 1.2, 1.1, 1.3], 0.01) == INCONCLUSIVE
    assert verdict_from_norms([1, 1.1, 1.25, 1.4], 0.01) == INCONCLUSIVE


def test_standard_ladders():
    lad, ref = standard_ladder(ProblemParams(1, 0.5, 0.8, 2))
    assert ref == "L" and [r[0] for r in lad] == [8, 16, 32, 64]
    lad, ref = standard_ladder(ProblemParams(1, 0.2, 0.3, 2))
    assert ref == "M" and len({r[0] for r in lad}) == 1
    lad, ref = standard_ladder(ProblemParams(2, 1.2, 1.0, 2))
    assert ref == "both"


def test_refinement_bounded_1d_well_posed():
    p = ProblemParams(1, 0.2, 0.3, 2)
    ladder, refine = standard_ladder(p)
    rep = refinement_study(DuhamelConfig(p, 0.5, ladder=ladder, refine=refine))
    assert rep.verdict == BOUNDED == expected_verdict(p)
    assert rep.label == "Theorem-range"
    assert max(r["split_residual"] for r in rep.rungs) < 1e-6
    assert abs(sum(f for _, _, f in rep.shells) - 1) < 1e-12


def test_refinement_needs_four_rungs():
    with pytest.raises(ValueError):
        refinement_study(cfg_for(ladder=[(16, 256, None)]))


def test_exploratory_label_for_odd_alpha():
    p = ProblemParams(1, 0.2, 0.3, 3)
    ladder = [(16.0, 256 * 2 ** k, None) for k in range(4)]
    assert refinement_study(DuhamelConfig(p, 0.5, ladder=ladder)).label == "Exploratory"
