"""Split-step time integration of iu_t + Δu + μ w|u|^α u = 0, conserved
quantities, and the blow-up rate monitor."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .exponents import ProblemParams, classify
from .propagator import free_evolve
from .spectral import Field, Grid, Trajectory, freq_l2, lp_norm, sobolev_norm
from .weights import eval_weight


class StepCollapse(RuntimeError):
    def __init__(self, msg, traj=None):
        super().__init__(msg)
        self.traj = traj


class NotBlowingUp(RuntimeError):
    pass


@dataclass
class IntegratorControls:
    dt: float
    adapt: bool = False
    dt_min: float = 1e-12
    max_steps: int = 10 ** 6
    blowup_norm_cap: float = None     # absolute H^s cap; default 1e6 x initial norm
    tol: float = 1e-8                 # step-doubling tolerance (relative L2)
    snapshot_every: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.dt_min > self.dt:
            raise ValueError("dt_min must not exceed dt")


@dataclass
class BlowupRateReport:
    T_star: float
    samples: list           # (t, Hdot^s norm)
    rate_quantity: list     # (t, (T*-t)^{(s-s_c)/2} norm)
    infimum: float
    median: float
    window: tuple           # (T*-t) range of the final resolved decade
    exponent: float


def default_weight(grid: Grid, params: ProblemParams) -> Field:
    """Regularized weight with eps = h/2."""
    return eval_weight(grid, params.b, grid.h / 2)


def _phase(u, tau, params, w):
    return u * np.exp(1j * params.mu * tau * w * np.abs(u) ** params.alpha)


def strang_step(u: Field, dt: float, params: ProblemParams, w: Field) -> Field:
    wv = w.physical().values.real
    v = _phase(u.physical().values, dt / 2, params, wv)
    v = free_evolve(Field(u.grid, v), dt).values
    return Field(u.grid, _phase(v, dt / 2, params, wv))


def gradient_sq(u: Field) -> float:
    fh = u.frequency()
    return float(u.grid.dxi ** u.grid.dim * np.sum(u.grid.xi2 * np.abs(fh.values) ** 2))


def conserved(u: Field, params: ProblemParams, w: Field):
    mass = lp_norm(u) ** 2
    v = np.abs(u.physical().values)
    pot = u.grid.cell * float(np.sum(w.physical().values.real * v ** (params.alpha + 2)))
    energy = 0.5 * gradient_sq(u) - params.mu / (params.alpha + 2) * pot
    return mass, energy


def spectral_tail(u: Field, frac=2 / 3):
    """L2 fraction of u carried by modes with |k| above frac of the Nyquist index."""
    fh = u.frequency().values
    k = np.abs(u.grid.k1)
    mask = np.zeros(u.grid.shape, dtype=bool)
    for ax in range(u.grid.dim):
        sh = [1] * u.grid.dim
        sh[ax] = u.grid.M
        mask = mask | (k.reshape(sh) > frac * u.grid.M / 2)
    tot = np.sum(np.abs(fh) ** 2)
    return float(np.sqrt(np.sum(np.abs(fh[mask]) ** 2) / tot)) if tot > 0 else 0.0


ROW_COLUMNS = ("t", "mass", "energy", "Hs_norm", "Hdot_s_norm", "dt", "spectral_tail")


def _record(traj, u, t, dt, params, w, s):
    m, e = conserved(u, params, w)
    traj.meta.setdefault("rows", []).append(
        (t, m, e, sobolev_norm(u, s), sobolev_norm(u, s, homogeneous=True), dt, spectral_tail(u)))


def run(u0: Field, params: ProblemParams, T: float, controls: IntegratorControls,
        w: Field = None, s: float = None) -> Trajectory:
    """Integrate to T. Numerical blow-up (H^s norm above the cap) stops the run
    and sets traj.meta['blowup']; dt below dt_min raises StepCollapse.

    T < 0 integrates backward. Trajectory times are the elapsed integration
    time (increasing); the physical time is meta['direction'] times that.
    """
    if classify(params).regime == "OutOfScope":
        warnings.warn("parameters are outside the classified regimes; running anyway")
    s = params.s if s is None else s
    grid = u0.grid
    w = default_weight(grid, params) if w is None else w
    u = u0.physical()
    n0 = sobolev_norm(u, s)
    cap = controls.blowup_norm_cap or 1e6 * max(n0, 1e-300)
    traj = Trajectory(grid, params=params)
    sign = 1.0 if T >= 0 else -1.0
    traj.meta.update(blowup=False, reason="", s=s, direction=int(sign))
    traj.append(0.0, u)
    _record(traj, u, 0.0, 0.0, params, w, s)
    t, dt, steps = 0.0, controls.dt, 0
    T_abs = abs(T)
    while t < T_abs * (1 - 1e-14) and steps < controls.max_steps:
        h = min(dt, T_abs - t)
        if controls.adapt:
            big = strang_step(u, sign * h, params, w)
            half = strang_step(strang_step(u, sign * h / 2, params, w), sign * h / 2, params, w)
            err = lp_norm(big - half) / max(lp_norm(half), 1e-300)
            if err > controls.tol:
                dt = h / 2
                if dt < controls.dt_min:
                    traj.meta.update(blowup=True, reason="dt below dt_min")
                    raise StepCollapse(f"dt = {dt:.3e} < dt_min at t = {t:.6g}", traj)
                continue
            u = half
            if err < controls.tol / 32:
                dt = min(2 * h, controls.dt)
        else:
            u = strang_step(u, sign * h, params, w)
        t += h
        steps += 1
        norm = sobolev_norm(u, s)
        if steps % controls.snapshot_every == 0 or t >= T_abs * (1 - 1e-14) or norm > cap \
                or not np.isfinite(norm):
            traj.append(t, u)
        _record(traj, u, t, h, params, w, s)
        if norm > cap or not np.isfinite(norm):
            traj.meta.update(blowup=True, reason="H^s norm above cap")
            break
    return traj


# ------------------------------------------------------------ blow-up rate

def _fit_tstar_linear(ts, ns, expo):
    # ||u||^{-1/expo} is linear in t with zero at T* when the rate is sharp
    y = ns ** (-1.0 / expo)
    c, a = np.polyfit(ts, y, 1)
    if c >= 0:
        raise NotBlowingUp("norm does not grow toward a finite time")
    return -a / c


def _fit_tstar_free(ts, ns, T0):
    """Least squares of log n = log C - g log(T* - t) with g free."""
    t_end = ts[-1]
    span = ts[-1] - ts[0]

    def resid(x):
        T, lc, g = x
        return lc - g * np.log(np.maximum(T - ts, 1e-300)) - np.log(ns)

    lo = [t_end + 1e-12 * max(span, 1e-300), -np.inf, 0.0]
    x0 = [max(T0, t_end + 1e-3 * span), np.log(ns[-1]), 0.5]
    sol = least_squares(resid, x0, bounds=(lo, [t_end + 10 * span, np.inf, 10.0]))
    return float(sol.x[0]), float(sol.x[2])


def blowup_rate(traj: Trajectory, params: ProblemParams, s: float = None,
                fit_fraction=0.2, min_growth=4.0, res_tol=1e-3) -> BlowupRateReport:
    """T* from the resolved part of the run (spectral tail <= res_tol), then the
    rate quantity (T*-t)^{(s-s_c)/2}||u||_{Hdot^s} over the final resolved
    decade of T*-t.

    T* comes from a fit of n = C (T*-t)^{-g} with g free over samples whose
    norm is at least fit_fraction of the last resolved norm; the linearized
    fit of n^{-2/(s-s_c)} against t is reported alongside (it is unbiased
    only when the observed rate equals the lower-bound rate).
    """
    s = traj.meta.get("s", params.s) if s is None else s
    expo = (s - params.s_c) / 2
    if expo <= 0:
        raise ValueError("blowup_rate needs s > s_c")
    rows = traj.meta.get("rows")
    if rows:
        ts = np.array([r[0] for r in rows])
        ns = np.array([r[4] for r in rows])
        tail = np.array([r[6] for r in rows])
    else:
        ts = np.asarray(traj.times)
        ns = np.array([sobolev_norm(f, s, homogeneous=True) for f in traj.snapshots])
        tail = np.array([spectral_tail(f) for f in traj.snapshots])
    res = np.nonzero(tail <= res_tol)[0]
    last = res.max()
    ts, ns = ts[:last + 1], ns[:last + 1]
    if ns[-1] < min_growth * ns[0]:
        raise NotBlowingUp(f"resolved norm grew only by {ns[-1] / ns[0]:.3g}")
    sel = ns >= ns[-1] * fit_fraction
    T_lin = _fit_tstar_linear(ts[sel], ns[sel], expo)
    T_star, g = _fit_tstar_free(ts[sel], ns[sel], T_lin)
    d = T_star - ts
    d_min = d[-1]
    win = d <= 10 * d_min
    q = d[win] ** expo * ns[win]
    rep = BlowupRateReport(T_star, list(zip(ts.tolist(), ns.tolist())),
                           list(zip(ts[win].tolist(), q.tolist())), float(q.min()),
                           float(np.median(q)), (float(d_min), float(10 * d_min)), expo)
    rep.T_star_linear = float(T_lin)
    rep.fitted_exponent = g
    return rep


def synthetic_blowup_trajectory(params: ProblemParams, T_star=1.0, s=None, n=400, C=1.0):
    """Trajectory whose meta rows carry norm = C (T*-t)^{-(s-s_c)/2} exactly."""
    s = params.s if s is None else s
    expo = (s - params.s_c) / 2
    ts = T_star * (1 - np.geomspace(1, 1e-4, n))
    traj = Trajectory(Grid(params.N, 2, 1.0), params=params)
    traj.meta["s"] = s
    traj.meta["rows"] = [(t, 0.0, 0.0, 0.0, C * (T_star - t) ** -expo, 0.0, 0.0) for t in ts]
    return traj
