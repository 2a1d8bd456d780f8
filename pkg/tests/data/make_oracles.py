"""Regenerate the frozen oracle tables in this directory.

    python3 tests/data/make_oracles.py

h_oracle.json
    H(y; theta, beta) = ∫_0^1 e^{iyr} r^{theta-1}(1-r)^{beta-1} dr by brute-force
    adaptive quadrature: [0, 1/2] with r = u^{1/theta}, [1/2, 1] with
    1-r = v^{1/beta}, each split into pieces of at most half an oscillation,
    quad at epsabs 1e-15. Cross-checked against B(theta, beta) 1F1(theta;
    theta+beta; iy) in 40-digit mpmath; the discrepancy is stored per value.

weight_evolution_oracle.json
    e^{itΔ}|x|^{-lam}(x) for N = 1 from the Fourier side: the transform of
    |x|^{-lam} is C_lam |xi|^{lam-1}, so the value is
    (2 pi)^{-1/2} C_lam ∫ |xi|^{lam-1} e^{-it xi^2 + i x xi} dxi. The contour
    rotation xi = e^{-i pi/4} u makes the Gaussian factor real. |xi|^{lam-1} is
    locally integrable for lam > 0, so one formula covers 0 < lam < 3; the
    integral is done in 30-digit mpmath.
"""
import json
import math
from pathlib import Path

import mpmath as mp
import numpy as np
from scipy.integrate import quad

HERE = Path(__file__).parent
PAIRS = [(th, be) for th in (0.3, 0.9, 1.5) for be in (0.3, 0.9, 1.5)]
YS = [0.0] + list(np.geomspace(1e-2, 1e4, 49))


def _pieces(a, b, y):
    n = max(1, int(math.ceil((b - a) * y / math.pi)))
    return np.linspace(a, b, n + 1)


def h_quad(y, th, be):
    total = 0j
    # left half, r = u^{1/th}: r^{th-1} dr = du / th
    for r0, r1 in zip(*(lambda e: (e[:-1], e[1:]))(_pieces(0.0, 0.5, y))):
        u0, u1 = r0 ** th, r1 ** th
        for part in (np.cos, np.sin):
            f = lambda u: part(y * u ** (1 / th)) * (1 - u ** (1 / th)) ** (be - 1) / th
            v = quad(f, u0, u1, epsabs=1e-15, epsrel=1e-14, limit=200)[0]
            total += v if part is np.cos else 1j * v
    # right half, 1 - r = v^{1/be}: (1-r)^{be-1} dr = -dv / be
    for r0, r1 in zip(*(lambda e: (e[:-1], e[1:]))(_pieces(0.5, 1.0, y))):
        v0, v1 = (1 - r1) ** be, (1 - r0) ** be
        for part in (np.cos, np.sin):
            f = lambda v: part(y * (1 - v ** (1 / be))) * (1 - v ** (1 / be)) ** (th - 1) / be
            w = quad(f, v0, v1, epsabs=1e-15, epsrel=1e-14, limit=200)[0]
            total += w if part is np.cos else 1j * w
    return total


def h_mpmath(y, th, be):
    with mp.workdps(40):
        v = mp.beta(th, be) * mp.hyp1f1(th, th + be, 1j * mp.mpf(y))
        return complex(v)


def make_h():
    rows = []
    for th, be in PAIRS:
        for y in YS:
            q = h_quad(y, th, be)
            m = h_mpmath(y, th, be)
            rows.append(dict(theta=th, beta=be, y=float(y), re=q.real, im=q.imag,
                             mpmath_discrepancy=abs(q - m)))
    extra = dict(theta=0.9, beta=0.3, y=5.0)
    q = h_quad(5.0, 0.9, 0.3)
    extra.update(re=q.real, im=q.imag, mpmath_discrepancy=abs(q - h_mpmath(5.0, 0.9, 0.3)))
    worst = max(r["mpmath_discrepancy"] for r in rows + [extra])
    out = dict(description="H(y; theta, beta) brute-force quadrature oracle",
               max_mpmath_discrepancy=worst, values=rows, example_5_09_03=extra)
    (HERE / "h_oracle.json").write_text(json.dumps(out, indent=1) + "\n")
    print("h oracle: worst discrepancy vs mpmath", worst)


def weight_fourier(t, x, lam):
    with mp.workdps(30):
        t, x, lam = mp.mpf(t), mp.mpf(x), mp.mpf(lam)
        C = 2 ** (mp.mpf(1) / 2 - lam) * mp.gamma((1 - lam) / 2) / mp.gamma(lam / 2)
        ph = mp.exp(-1j * mp.pi / 4)
        U = (x + mp.sqrt(x * x + 200 * t)) / t
        f = lambda u: u ** (lam - 1) * mp.exp(-t * u * u) * mp.cos(x * ph * u)
        I = mp.quad(f, mp.linspace(0, U, 40))
        return complex((2 * mp.pi) ** -0.5 * C * 2 * ph ** lam * I)


def make_weight():
    t = 0.5
    rows = []
    for lam in (0.3, 0.7, 1.3, 1.7):
        for x in np.linspace(1.0, 2.0, 5):
            v = weight_fourier(t, float(x), lam)
            rows.append(dict(t=t, lam=lam, N=1, x=float(x), re=v.real, im=v.imag))
    (HERE / "weight_evolution_oracle.json").write_text(
        json.dumps(dict(description="e^{itΔ}|x|^{-lam} Fourier-side oracle, N=1", values=rows), indent=1) + "\n")
    print("weight oracle:", len(rows), "values")


if __name__ == "__main__":
    make_weight()
    make_h()
