import math
from fractions import Fraction

import numpy as np
import pytest

from inlslab.exponents import (INF, AdmissiblePair, InfeasibleSystem, ParameterError, ProblemParams,
                               alpha_max, as_range, certificate_residuals, classify, critical_index,
                               in_set_As, is_admissible, q_from_r, strichartz_feasible)


def P(N, s, b, a, mu=1):
    return ProblemParams(N, s, b, a, mu)


def test_critical_index_examples():
    assert critical_index(P(3, 1, 1, 2)) == pytest.approx(1.0, abs=1e-15)
    assert critical_index(P(1, 0, 0.5, 4)) == pytest.approx(0.125, abs=1e-15)


def test_alpha_max_examples():
    assert alpha_max(3, 1, 1) == pytest.approx(2.0, abs=1e-15)
    assert alpha_max(2, 1, 0.5) == INF
    assert alpha_max(1, 0, 0.5) == pytest.approx(3.0, abs=1e-15)


@pytest.mark.parametrize("field,kw", [("alpha", dict(alpha=0)), ("alpha", dict(alpha=-1)),
                                      ("b", dict(b=0)), ("s", dict(s=-0.1)), ("N", dict(N=0)),
                                      ("mu", dict(mu=2))])
def test_parameter_errors_name_field(field, kw):
    d = dict(N=1, s=0.5, b=0.5, alpha=2)
    d.update(kw)
    with pytest.raises(ParameterError) as e:
        ProblemParams(**d)
    assert e.value.field == field


def test_admissibility_examples():
    assert is_admissible(INF, 2, 3, 0)
    assert not is_admissible(2, INF, 2, 0)
    assert is_admissible(4, 4, 2, 0)
    assert q_from_r(2.0, 3, 0) == INF
    with pytest.raises(ValueError):
        AdmissiblePair(3, 3, 0, 1)


def test_in_set_As_examples():
    tol = 1e-9
    assert in_set_As(INF, 2 + 2 * tol, 3, 0, tol=tol)
    assert not in_set_As(INF, 2.0, 3, 0, tol=tol)          # open lower endpoint
    r = 2 * 3 / (3 - 1.0)
    assert not in_set_As(q_from_r(r, 3, 0.5), r, 3, 0.5, tol=tol)
    with pytest.raises(ValueError):
        as_range(2, 1)
    lo, hi, _, _ = as_range(3, 1)
    assert lo < hi


def test_classify_examples():
    assert classify(P(1, 0.5, 0.8, 2)).regime == "IllPosed"
    assert classify(P(3, 1, 1, 2)).regime == "CriticalWP"
    # alpha = alpha_s = 1 at s = 0: the critical-case hypotheses hold literally
    assert classify(P(3, 0, 0.5, 1)).regime == "CriticalWP"
    assert classify(P(3, 0, 0.5, 0.9)).regime == "SubcriticalWP"


def test_classify_record_is_canonical():
    rec = classify(P(1, 0.5, 0.8, 2)).record()
    lines = rec.splitlines()
    assert all(line.count("=") == 1 for line in lines)
    keys = [line.split("=")[0] for line in lines]
    assert keys == sorted(keys)
    assert "regime=IllPosed" in rec


def test_regimes_mutually_exclusive_sweep():
    # classify returns exactly one label; the non-OutOfScope labels never overlap
    rng = np.random.default_rng(1)
    for _ in range(300):
        N = int(rng.integers(1, 4))
        p = P(N, float(rng.uniform(0, 2)), float(rng.uniform(0.05, N - 0.05)), float(rng.choice([1, 2, 4, 1.5])))
        rep = classify(p)
        ill = all(ok for name, ok in rep.reasons if name.startswith("ill."))
        if rep.regime in ("SubcriticalWP", "CriticalWP"):
            assert not ill


def test_inhomogeneous_certificate():
    p = P(3, 0.5, 0.5, 1)
    c = strichartz_feasible(p)
    res = certificate_residuals(c, p)
    assert len(res) >= 5
    assert max(abs(v) for v in res.values()) < 1e-12
    assert c.interval[0] < 1 / c.rho < c.interval[1] or c.interval[0] < c.rho < c.interval[1]


def test_critical_certificate_eps_relations():
    p = P(3, 1, 1, 2)
    c = strichartz_feasible(p, mode="Critical")
    N, b = 3, 1
    eps = c.eps0 / (1 + (2 - b) / (2 * (N - 2)))
    assert c.eps1 == pytest.approx((1 + (2 - b) / (N - 2)) * eps, abs=1e-12)
    assert max(abs(v) for v in c.residuals.values()) < 1e-12


def test_infeasible_names_violated_inequality():
    with pytest.raises(InfeasibleSystem) as e:
        strichartz_feasible(P(1, 0.5, 1.0, 2))     # b+s = N/2+1
    assert "rho" in str(e.value)


def test_exact_rational_cross_check():
    rng = np.random.default_rng(7)
    for _ in range(50):
        N = int(rng.integers(1, 4))
        b = Fraction(int(rng.integers(1, 20)), 20) * N
        a = Fraction(int(rng.integers(1, 40)), 10)
        sc = Fraction(N, 2) - (2 - b) / a
        assert abs(critical_index(P(N, 0, float(b), float(a))) - float(sc)) < 1e-12
    assert math.isinf(alpha_max(2, 1.5, 0.5))
