"""Analytic correlation functions of the XY chain with z-axis DM interaction.

    H = sum_j { J [ (1+g) Sx_j Sx_j+1 + (1-g) Sy_j Sy_j+1
                    + D (Sx_j Sy_j+1 - Sy_j Sx_j+1) ] - Sz_j }

on a periodic ring. Single-site magnetization and the two-point functions
follow from the fermionic mode functions

    b(phi)     = J (cos phi - 2 D sin phi) - 1
    Delta(phi) = sqrt(b^2 + J^2 g^2 sin^2 phi)

either as a sum over ring modes or, for an infinite chain, as
(1 / 2 pi) * integral over phi in [0, pi].

Units: Boltzmann constant k = 1, unit field coefficient.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy.integrate import quad_vec
from scipy.linalg import toeplitz

from xydm.errors import DomainError, NumericalError, ValidationError
from xydm.xstate import XState

#: largest separation / |R| accepted by the correlator routines
R_CAP = 64
#: absolute tolerance for the adaptive quadrature over [0, pi]
QUAD_EPSABS = 1e-10
#: subinterval cap for the adaptive quadrature
QUAD_LIMIT = 2000
#: below this value of beta*Delta, tanh(beta Delta / 2) / Delta uses its series
SERIES_CUTOFF = 1e-6


@dataclass(frozen=True)
class FiniteRing:
    N: int

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 4 or self.N % 2:
            raise ValidationError(f"ring size must be an even integer >= 4, got {self.N!r}")


@dataclass(frozen=True)
class ThermodynamicLimit:
    pass


THERMODYNAMIC_LIMIT = ThermodynamicLimit()


@dataclass(frozen=True)
class ChainParams:
    """One model instance. ``temperature=0`` is the ground state, ``inf`` is beta = 0."""

    J: float
    gamma: float
    D: float = 0.0
    temperature: float = 0.0
    lattice: FiniteRing | ThermodynamicLimit = field(default=THERMODYNAMIC_LIMIT)

    def __post_init__(self):
        for name in ("J", "gamma", "D"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(f"{name} must be finite")
        if math.isnan(self.temperature) or self.temperature < 0:
            raise ValidationError(f"temperature must be >= 0, got {self.temperature!r}")
        if self.J < 0:
            raise ValidationError(f"J must be >= 0, got {self.J!r}")
        if not isinstance(self.lattice, (FiniteRing, ThermodynamicLimit)):
            raise ValidationError(f"unknown lattice {self.lattice!r}")
        if not 0.0 <= self.gamma <= 1.0:
            warnings.warn(f"anisotropy gamma={self.gamma} outside [0, 1]", stacklevel=3)

    @classmethod
    def from_beta(cls, J, gamma, D=0.0, beta=math.inf, lattice=THERMODYNAMIC_LIMIT):
        if beta < 0 or math.isnan(beta):
            raise ValidationError(f"beta must be >= 0, got {beta!r}")
        temperature = math.inf if beta == 0 else 1.0 / beta
        return cls(J, gamma, D, temperature, lattice)

    @property
    def beta(self):
        if self.temperature == 0:
            return math.inf
        return 1.0 / self.temperature

    @property
    def N(self):
        return self.lattice.N if isinstance(self.lattice, FiniteRing) else None

    def replace(self, **changes):
        return replace(self, **changes)


@dataclass(frozen=True)
class CorrelationSet:
    sz: float
    xx: float
    yy: float
    zz: float
    r: int

    def __post_init__(self):
        tol = 1e-9
        if abs(self.sz) > 0.5 + tol:
            raise ValidationError(f"|<Sz>| = {abs(self.sz)!r} exceeds 1/2")
        for name in ("xx", "yy", "zz"):
            if abs(getattr(self, name)) > 0.25 + tol:
                raise ValidationError(f"|<{name}>| = {abs(getattr(self, name))!r} exceeds 1/4")


def _bracket(p, phi):
    return p.J * (np.cos(phi) - 2.0 * p.D * np.sin(phi)) - 1.0


def dispersion(p, phi):
    """Mode energy Delta(phi) >= 0; accepts scalars or arrays."""
    b = _bracket(p, phi)
    out = np.hypot(b, p.J * p.gamma * np.sin(phi))
    return float(out) if np.ndim(out) == 0 else out


def _kernels(p, phi):
    """Return b * w and (J g sin phi) * w with w = tanh(beta Delta / 2) / Delta.

    At T = 0 the bounded ratios b / Delta and J g sin phi / Delta are formed
    directly; points where Delta vanishes contribute zero.
    """
    b = _bracket(p, phi)
    s = p.J * p.gamma * np.sin(phi)
    delta = np.hypot(b, s)
    beta = p.beta
    if beta == 0:
        w = np.zeros_like(delta)
    elif math.isinf(beta):
        with np.errstate(divide="ignore"):
            w = np.where(delta > 0, 1.0 / np.where(delta > 0, delta, 1.0), 0.0)
    else:
        x = beta * delta
        small = x < SERIES_CUTOFF
        safe = np.where(small, 1.0, delta)
        w = np.where(small, 0.5 * beta * (1.0 - x * x / 12.0), np.tanh(0.5 * x) / safe)
    return b * w, s * w


def _integrand(p, rmax):
    R = np.arange(-rmax, rmax + 1, dtype=float)

    def f(phi):
        rb, rs = _kernels(p, np.array([phi]))
        g = -2.0 * np.cos(R * phi) * rb[0] + 2.0 * np.sin(R * phi) * rs[0]
        return np.concatenate([-rb, g])

    return f


def _bracket_zeros(p):
    """Points in (0, pi) where b(phi) = 0; kinks of the integrand live there."""
    amp = p.J * math.hypot(1.0, 2.0 * p.D)
    if amp < 1.0:
        return []
    alpha = math.atan2(2.0 * p.D, 1.0)
    base = math.acos(1.0 / amp)
    pts = []
    for c in (base - alpha, -base - alpha):
        for k in (-1, 0, 1):
            v = c + 2 * math.pi * k
            if 1e-12 < v < math.pi - 1e-12:
                pts.append(v)
    return sorted(set(pts))


def mode_angles(N):
    """Ring modes phi_p = (2p - 1) pi / N, p = 1..N/2 (half-integer momenta)."""
    return (2.0 * np.arange(1, N // 2 + 1) - 1.0) * math.pi / N


@lru_cache(maxsize=8192)
def _table(p, rmax):
    """(<Sz>, G_{-rmax..rmax}) for one parameter point."""
    if rmax > R_CAP:
        raise DomainError(f"|R| = {rmax} exceeds cap {R_CAP}")
    f = _integrand(p, rmax)
    if isinstance(p.lattice, FiniteRing):
        phi = mode_angles(p.lattice.N)
        rb, rs = _kernels(p, phi)
        R = np.arange(-rmax, rmax + 1)[:, None]
        g = (-2.0 * np.cos(R * phi) * rb + 2.0 * np.sin(R * phi) * rs).sum(axis=1) / p.lattice.N
        sz = float(-rb.sum() / p.lattice.N)
        return sz, g
    if p.beta == 0:
        return 0.0, np.zeros(2 * rmax + 1)
    pts = _bracket_zeros(p)
    res, err, info = quad_vec(
        f, 0.0, math.pi,
        epsabs=QUAD_EPSABS, epsrel=0.0, norm="max", limit=QUAD_LIMIT,
        points=pts or None, full_output=True,
    )
    if not info.success:
        raise NumericalError(
            f"quadrature did not converge for {p} (estimated error {err:.3g})", achieved=err)
    res = np.asarray(res) / (2.0 * math.pi)
    return float(res[0]), res[1:]


def magnetization(p):
    """Magnetization density <S^z>."""
    return _table(p, 0)[0]


def g_function(p, R):
    """G_R for one integer R (generally G_R != G_-R when gamma != 0)."""
    R = int(R)
    rmax = abs(R)
    _, g = _table(p, rmax)
    return float(g[R + rmax])


def _g_lookup(p, rmax):
    _, g = _table(p, rmax)
    return lambda R: g[R + rmax]


def _check_r(r):
    if int(r) != r or r < 1:
        raise DomainError(f"separation must be a positive integer, got {r!r}")
    if r > R_CAP:
        raise DomainError(f"separation {r} exceeds cap {R_CAP}")
    return int(r)


def _xx(G, r):
    col = [G(a - 1) for a in range(r)]
    row = [G(-b - 1) for b in range(r)]
    return 0.25 * float(np.linalg.det(toeplitz(col, row)))


def _yy(G, r):
    col = [G(a + 1) for a in range(r)]
    row = [G(1 - b) for b in range(r)]
    return 0.25 * float(np.linalg.det(toeplitz(col, row)))


def xx_correlator(p, r):
    """<Sx_i Sx_i+r> as a quarter of an r x r Toeplitz determinant of G."""
    r = _check_r(r)
    return _xx(_g_lookup(p, r), r)


def yy_correlator(p, r):
    r = _check_r(r)
    return _yy(_g_lookup(p, r), r)


def zz_correlator(p, r):
    r = _check_r(r)
    sz, g = _table(p, r)
    return float(sz * sz - 0.25 * g[2 * r] * g[0])


def correlations(p, r):
    r = _check_r(r)
    sz, g = _table(p, r)
    G = _g_lookup(p, r)
    return CorrelationSet(
        sz=sz,
        xx=_xx(G, r),
        yy=_yy(G, r),
        zz=float(sz * sz - 0.25 * g[2 * r] * g[0]),
        r=r,
    )


def pair_density_matrix(p, r, tol=1e-9):
    """X-state of two spins at separation ``r``; raises ValidationError if unphysical."""
    c = correlations(p, r)
    return XState.from_correlators(c.sz, c.xx, c.yy, c.zz).validate(tol)


def purity(s):
    m = s.to_matrix()
    return float(np.trace(m @ m))
