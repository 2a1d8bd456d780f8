"""Periodic pseudospectral engine on [-L, L)^d.

Fourier convention (approximates the unitary continuous transform
f^(xi) = (2 pi)^{-d/2} ∫ f(x) e^{-i x.xi} dx):

    x_j  = -L + j h,   h = 2L/M,   j = 0..M-1   (origin is j = M/2)
    xi_k = (pi/L) k,   k = fftfreq integers (fft ordering, Nyquist k = -M/2)
    f^_k = (h / sqrt(2 pi))^d (-1)^{k_1+...+k_d} fftn(f)_k

Norms use the cell measure h^d in physical space and (pi/L)^d in frequency
space, so Parseval holds with no extra constants. The constant field 1 maps
to a single mode f^_0 = (2L)^d / (2 pi)^{d/2}.

numpy/scipy FFTs allocate their own buffers, so there is no workspace object;
every function here is pure.
"""
from __future__ import annotations

import io
import struct
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft as sfft
from scipy.integrate import trapezoid

MAGIC = b"INLSFLD1"
PHYSICAL, FREQUENCY = "Physical", "Frequency"


@dataclass(frozen=True)
class Grid:
    dim: int
    M: int
    L: float

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError("dim must be 1, 2 or 3")
        if self.M < 2 or self.M & (self.M - 1):
            raise ValueError("M must be a power of two")
        if not self.L > 0:
            raise ValueError("L must be positive")

    @property
    def h(self):
        return 2 * self.L / self.M

    @property
    def shape(self):
        return (self.M,) * self.dim

    @property
    def cell(self):
        return self.h ** self.dim

    @property
    def dxi(self):
        return np.pi / self.L

    @cached_property
    def x1(self):
        return -self.L + self.h * np.arange(self.M)

    @cached_property
    def k1(self):
        return np.fft.fftfreq(self.M, d=1.0 / self.M)

    @cached_property
    def xi1(self):
        return self.dxi * self.k1

    def coords(self):
        return np.meshgrid(*([self.x1] * self.dim), indexing="ij", sparse=True)

    @cached_property
    def r(self):
        r2 = sum(c ** 2 for c in self.coords())
        return np.sqrt(r2)

    @cached_property
    def xi2(self):
        g = np.meshgrid(*([self.xi1] * self.dim), indexing="ij", sparse=True)
        return sum(c ** 2 for c in g)

    @cached_property
    def xi_abs(self):
        return np.sqrt(self.xi2)

    @cached_property
    def sign(self):
        s = (-1.0) ** self.k1
        out = 1.0
        for ax in range(self.dim):
            sh = [1] * self.dim
            sh[ax] = self.M
            out = out * s.reshape(sh)
        return out

    @property
    def origin_index(self):
        return (self.M // 2,) * self.dim


@dataclass(frozen=True)
class Field:
    grid: Grid
    values: np.ndarray
    space: str = PHYSICAL

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != self.grid.shape:
            raise ValueError(f"values shape {v.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "values", v)

    def physical(self):
        return self if self.space == PHYSICAL else to_physical(self)

    def frequency(self):
        return self if self.space == FREQUENCY else to_frequency(self)

    def __add__(self, other):
        return Field(self.grid, self.values + _same(self, other).values, self.space)

    def __sub__(self, other):
        return Field(self.grid, self.values - _same(self, other).values, self.space)

    def scale(self, c):
        return Field(self.grid, c * self.values, self.space)


def _same(a, b):
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")
    return b if b.space == a.space else (b.frequency() if a.space == FREQUENCY else b.physical())


@dataclass
class Trajectory:
    grid: Grid
    times: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    params: object = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.times) != len(self.snapshots):
            raise ValueError("one snapshot per time")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("times must be strictly increasing")

    def append(self, t, f):
        if self.times and t <= self.times[-1]:
            raise ValueError("times must be strictly increasing")
        self.times.append(float(t))
        self.snapshots.append(f)


def from_function(grid: Grid, func) -> Field:
    return Field(grid, func(*grid.coords()))


def gaussian(grid: Grid, a=np.pi, center=0.0, k0=0.0) -> Field:
    """exp(-a|x-c|^2 + i k0 x_1)."""
    xs = grid.coords()
    r2 = sum((c - center) ** 2 for c in xs)
    return Field(grid, np.exp(-a * r2 + 1j * k0 * xs[0]))


def _fwd_factor(grid):
    return (grid.h / np.sqrt(2 * np.pi)) ** grid.dim * grid.sign


def to_frequency(f: Field) -> Field:
    if f.space != PHYSICAL:
        raise ValueError("field is already in frequency space")
    return Field(f.grid, _fwd_factor(f.grid) * sfft.fftn(f.values), FREQUENCY)


def to_physical(f: Field) -> Field:
    if f.space != FREQUENCY:
        raise ValueError("field is already in physical space")
    return Field(f.grid, sfft.ifftn(f.values / _fwd_factor(f.grid)), PHYSICAL)


def apply_multiplier(f: Field, m) -> Field:
    """Physical-space result of multiplying the Fourier coefficients by m(xi)."""
    if f.space == FREQUENCY:
        return to_physical(Field(f.grid, m * f.values, FREQUENCY))
    return Field(f.grid, sfft.ifftn(m * sfft.fftn(f.values)))


def frac_symbol(grid: Grid, sigma):
    if sigma == 0:
        return np.ones(grid.shape)
    m = np.zeros(grid.shape)
    nz = grid.xi2 > 0
    m[nz] = grid.xi2[nz] ** (sigma / 2)
    return m


def fractional_derivative(f: Field, sigma: float) -> Field:
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if sigma == 0:
        return f.physical()
    return apply_multiplier(f, frac_symbol(f.grid, sigma))


def lp_norm(f: Field, p=2.0) -> float:
    v = np.abs(f.physical().values)
    if p == np.inf:
        return float(v.max())
    if p < 1:
        raise ValueError("p must be in [1, inf]")
    return float((f.grid.cell * np.sum(v ** p)) ** (1.0 / p))


def freq_l2(fh: Field) -> float:
    return float(np.sqrt(fh.grid.dxi ** fh.grid.dim * np.sum(np.abs(fh.values) ** 2)))


def sobolev_norm(f: Field, sigma: float, homogeneous=False) -> float:
    fh = f.frequency()
    if homogeneous:
        m = frac_symbol(f.grid, sigma)
    else:
        m = (1 + f.grid.xi2) ** (sigma / 2)
    return freq_l2(Field(f.grid, m * fh.values, FREQUENCY))


def mixed_norm(traj: Trajectory, q, r, dt_single=1.0) -> float:
    """L^q_t L^r_x over the snapshot times (trapezoid rule in t).

    A single snapshot is given the time measure dt_single, so the result is
    dt_single^{1/q} ||f||_r.
    """
    n = np.array([lp_norm(f, r) for f in traj.snapshots])
    if q == np.inf:
        return float(n.max())
    if len(n) == 1:
        return float(dt_single ** (1 / q) * n[0])
    return float(trapezoid(n ** q, np.asarray(traj.times)) ** (1 / q))


def s_norm(traj: Trajectory, pairs) -> float:
    """Sup of mixed norms over a finite list of (q, r) pairs."""
    return max(mixed_norm(traj, q, r) for q, r in pairs)


def dilate(f: Field, lam) -> Field:
    """g(x) = f(lam x) for dyadic lam = 2^k.

    lam < 1 uses trigonometric interpolation (zero-padded upsampling), lam > 1
    subsamples and fills the outside of the box with zeros.
    """
    k = np.log2(lam)
    if abs(k - round(k)) > 1e-12:
        raise ValueError("lam must be a power of two")
    k = int(round(k))
    g = f.physical()
    v = g.values
    M = g.grid.M
    for _ in range(abs(k)):
        for ax in range(g.grid.dim):
            v = _half(v, ax, M) if k < 0 else _double(v, ax, M)
    return Field(g.grid, v)


def _half(v, ax, M):
    # values at x_j/2: upsample by 2 then read fine indices M/2 .. 3M/2-1
    F = np.fft.fft(v, axis=ax)
    F = np.moveaxis(F, ax, 0)
    pad = np.zeros((2 * M,) + F.shape[1:], dtype=complex)
    pad[:M // 2] = F[:M // 2]
    pad[-M // 2 + 1:] = F[-M // 2 + 1:]
    nyq = F[M // 2]
    pad[M // 2] = nyq / 2
    pad[-M // 2] = nyq / 2
    fine = np.fft.ifft(pad, axis=0) * 2
    # origin of the physical grid sits at index M/2; phase of the shift is
    # already built into the periodic indexing since both grids start at -L
    out = fine[M // 2: M // 2 + M]
    return np.moveaxis(out, 0, ax)


def _double(v, ax, M):
    v = np.moveaxis(v, ax, 0)
    out = np.zeros_like(v)
    j = np.arange(M)
    src = 2 * j - M // 2
    ok = (src >= 0) & (src < M)
    out[ok] = v[src[ok]]
    return np.moveaxis(out, 0, ax)


# ------------------------------------------------------------ serialization

_HDR = struct.Struct("<8siiqd")   # magic, dim, M, space code, L


def field_to_bytes(f: Field) -> bytes:
    code = 0 if f.space == PHYSICAL else 1
    buf = io.BytesIO()
    buf.write(_HDR.pack(MAGIC, f.grid.dim, f.grid.M, code, f.grid.L))
    buf.write(np.ascontiguousarray(f.values, dtype="<c16").tobytes(order="C"))
    return buf.getvalue()


def field_from_bytes(data: bytes) -> Field:
    magic, dim, M, code, L = _HDR.unpack_from(data, 0)
    if magic != MAGIC:
        raise ValueError("not an INLSFLD1 container")
    g = Grid(dim, M, L)
    vals = np.frombuffer(data, dtype="<c16", offset=_HDR.size).reshape(g.shape)
    return Field(g, vals.astype(complex), PHYSICAL if code == 0 else FREQUENCY)


def save_field(path, f: Field):
    with open(path, "wb") as fh:
        fh.write(field_to_bytes(f))


def load_field(path) -> Field:
    with open(path, "rb") as fh:
        return field_from_bytes(fh.read())
