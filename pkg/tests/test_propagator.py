import json
import math
from pathlib import Path

import numpy as np
import pytest

from inlslab.exponents import AdmissiblePair
from inlslab.propagator import (ASYMPTOTIC, EXTENSION, QUADRATURE, DomainError, crossover, free_evolve,
                                gaussian_at_origin, gaussian_nonlinearity_at_origin, h_asymptotic,
                                h_continued, h_function, leading_large_x, normalized_weight_evolution,
                                strichartz_ratio, weight_evolution, weight_evolution_value)
from inlslab.spectral import Grid, dilate, gaussian, lp_norm
from inlslab.weights import PoleError

DATA = Path(__file__).parent / "data"


def test_t0_identity_and_unitarity():
    f = gaussian(Grid(1, 256, 8.0), k0=2.0)
    assert lp_norm(free_evolve(f, 0.0) - f) == 0.0
    assert lp_norm(free_evolve(f, 1.3)) == pytest.approx(lp_norm(f), rel=1e-12)


@pytest.mark.parametrize("N", [1, 2])
def test_gaussian_origin_pin(N):
    g = Grid(N, 2 ** 10 if N == 1 else 256, 16.0)
    f = gaussian(g)
    for t in (0.1, 0.25, 0.5, 1.0):
        v = free_evolve(f, t).physical().values[g.origin_index]
        assert abs(v / gaussian_at_origin(t, N) - 1) < 1e-8


def test_gaussian_nonlinearity_at_origin():
    assert gaussian_nonlinearity_at_origin(0.0, 1, 2) == pytest.approx(1.0)
    g = Grid(1, 1024, 16.0)
    f = gaussian(g)
    for t in (0.2, 0.7):
        for a in (2, 3.5):
            v = abs(gaussian_nonlinearity_at_origin(t, 1, a))
            assert v == pytest.approx((1 + 16 * np.pi ** 2 * t ** 2) ** (-(a + 1) / 4), rel=1e-13)
            u = free_evolve(f, t).physical().values[g.origin_index]
            assert abs(abs(u) ** a * u - gaussian_nonlinearity_at_origin(t, 1, a)) < 1e-6


def test_h_beta_and_elementary():
    for th, be in [(0.3, 0.9), (1.5, 0.3), (2.0, 2.5)]:
        B = math.gamma(th) * math.gamma(be) / math.gamma(th + be)
        assert abs(h_function(0.0, th, be).value - B) < 1e-10
    for y in (0.5, 3.0, 40.0, 900.0):
        assert abs(h_function(y, 1.0, 1.0).value - (np.exp(1j * y) - 1) / (1j * y)) < 1e-9


def test_h_example_against_frozen_oracle():
    d = json.loads((DATA / "h_oracle.json").read_text())["example_5_09_03"]
    v = h_function(5.0, 0.9, 0.3)
    assert abs(v.value - complex(d["re"], d["im"])) < 1e-10
    assert v.method == QUADRATURE


def test_h_conjugate_symmetry_and_domain():
    v, w = h_function(7.0, 0.4, 0.8), h_function(-7.0, 0.4, 0.8)
    assert abs(w.value - np.conj(v.value)) < 1e-14
    with pytest.raises(DomainError):
        h_function(1.0, 0.0, 1.0)
    with pytest.raises(DomainError):
        h_function(1.0, 0.5, -0.1)
    with pytest.raises(DomainError):
        h_asymptotic(0.0, 0.5, 0.5)


def test_h_error_estimate_bounds_true_error():
    d = json.loads((DATA / "h_oracle.json").read_text())["values"]
    for r in d[::7]:
        v = h_function(r["y"], r["theta"], r["beta"])
        err = abs(v.value - complex(r["re"], r["im"]))
        assert err <= max(10 * v.abs_error_estimate, 1e-12)


def test_h_switches_to_asymptotic_past_crossover():
    ys = crossover(0.3, 0.9)
    assert 1 <= ys < 100
    assert h_function(2 * ys, 0.3, 0.9).method == ASYMPTOTIC
    assert h_function(ys / 2, 0.3, 0.9).method == QUADRATURE


def test_h_continued_matches_integration_by_parts():
    # one integration by parts continues H to -1 < theta < 0:
    # th H(y; th, be) = -iy H(y; th+1, be) + (be-1) H(y; th+1, be-1)
    th, be, y = -0.4, 2.3, 3.0
    lhs = h_continued(y, th, be).value
    rhs = (-1j * y * h_function(y, th + 1, be).value + (be - 1) * h_function(y, th + 1, be - 1).value) / th
    assert abs(lhs - rhs) < 1e-9


def test_h_asymptotic_remainder_slope():
    for th, be in [(0.3, 0.9), (0.9, 1.5), (1.5, 0.3)]:
        ys = np.geomspace(50, 5000, 25)
        r = [abs(h_function(y, th, be, tol=1e-12).value - h_asymptotic(y, th, be).value) for y in ys]
        slope = np.polyfit(np.log(ys), np.log(r), 1)[0]
        assert slope <= -min(th + 1, be + 1) + 0.1
        est = [h_asymptotic(y, th, be).abs_error_estimate for y in ys]
        assert all(a <= e for a, e in zip(r, est))


def test_h_modulus_slope():
    for th, be in [(0.3, 0.9), (0.9, 0.3), (0.3, 1.5)]:
        ys = np.geomspace(200, 10000, 40)
        m = [abs(h_function(y, th, be).value) for y in ys]
        slope = np.polyfit(np.log(ys), np.log(m), 1)[0]
        assert slope == pytest.approx(-min(th, be), rel=0.05)


def test_h_equal_exponents_period():
    m = lambda y: abs(h_function(y, 0.6, 0.6).value) * y ** 0.6
    y0 = 300.0
    assert abs(m(y0 + 2 * np.pi) - m(y0)) < 0.02 * abs(m(y0 + np.pi) - m(y0))


def test_weight_evolution_against_fourier_oracle():
    rows = json.loads((DATA / "weight_evolution_oracle.json").read_text())["values"]
    for r in rows:
        v = weight_evolution(r["t"], r["x"], r["lam"], r["N"])
        ex = complex(r["re"], r["im"])
        assert abs(v - ex) / abs(ex) < 1e-8


def test_weight_evolution_paths_and_poles():
    assert weight_evolution_value(0.5, 1.0, 1.3, 1).method == EXTENSION
    assert weight_evolution_value(0.5, 1.0, 0.7, 1).method != EXTENSION
    for lam in (1.0, 2.0):
        with pytest.raises(PoleError):
            weight_evolution(0.5, 1.0, lam, 1)
    for lam in (0.0, 3.0, 3.5):
        with pytest.raises(DomainError):
            weight_evolution(0.5, 1.0, lam, 1)


def test_extension_continuous_at_theta_one():
    # continuity in lam across theta = 1 away from the poles
    a = weight_evolution(0.5, 1.2, 2.0 - 1e-7, 3)
    b = weight_evolution(0.5, 1.2, 2.0 + 1e-7, 3)
    assert abs(a - b) / abs(a) < 1e-5


def test_literal_convention_disagrees_with_oracle():
    rows = json.loads((DATA / "weight_evolution_oracle.json").read_text())["values"]
    r = [x for x in rows if x["lam"] == 1.3][2]
    ex = complex(r["re"], r["im"])
    lit = weight_evolution(r["t"], r["x"], r["lam"], 1, convention="literal")
    assert abs(lit - ex) / abs(ex) > 1e-2


def test_large_x_remainder_order():
    t = 0.5
    for lam in (0.3, 0.7, 1.3):
        xs = np.geomspace(20, 400, 20)
        r = [abs(weight_evolution(t, x, lam, 1) - leading_large_x(t, x, lam, 1)) for x in xs]
        eta = min(lam / 2, (1 - lam) / 2 + 1)
        slope = np.polyfit(np.log(xs ** 2 / (4 * t)), np.log(r), 1)[0]
        assert slope == pytest.approx(-eta, abs=0.02)


def test_normalized_weight_evolution_is_finite():
    v = normalized_weight_evolution(0.5, 1.5, 0.7, 1)
    assert np.isfinite(v)


def test_strichartz_ratio_unitarity_and_family():
    g = Grid(1, 1024, 32.0)
    assert strichartz_ratio(gaussian(g), AdmissiblePair(np.inf, 2.0, 0.0, 1), 1.0, 5) == pytest.approx(1.0, abs=1e-12)
    pair = AdmissiblePair(8.0, 4.0, 0.0, 1)
    rng = np.random.default_rng(3)
    fam = [gaussian(g), dilate(gaussian(g), 0.5), dilate(gaussian(g), 2.0), gaussian(g, a=np.pi / 2, k0=3.0)]
    bump = np.where(np.abs(g.x1) < 1, np.exp(-1 / np.maximum(1 - g.x1 ** 2, 1e-300)), 0.0)
    fam.append(type(fam[0])(g, bump))
    ph = sum(np.exp(-(g.x1 - c) ** 2 + 1j * k * g.x1) for c, k in zip(rng.uniform(-3, 3, 4), rng.uniform(-4, 4, 4)))
    fam.append(type(fam[0])(g, ph))
    ratios = [strichartz_ratio(f, pair, 4.0, 401) for f in fam]
    assert max(ratios) / min(ratios) < 10
