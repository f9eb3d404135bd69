"""Two-qubit X-shaped density matrices.

Basis order is |up up>, |up down>, |down up>, |down down> with the first
label belonging to site i and the second to site j::

    [[u_plus, 0,       0,       y      ],
     [0,      w_plus,  x,       0      ],
     [0,      x,       w_minus, 0      ],
     [y,      0,       0,       u_minus]]

All entropies are in bits (log base 2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from xydm.errors import DomainError, ValidationError

#: eigenvalues in [-CLAMP_TOL, 0) are round-off and are set to zero
CLAMP_TOL = 1e-12


@dataclass(frozen=True)
class XState:
    u_plus: float
    u_minus: float
    w_plus: float
    w_minus: float
    x: float
    y: float
    sz_i: float
    sz_j: float

    @classmethod
    def from_correlators(cls, sz, xx, yy, zz):
        """Translation-invariant state from <S^z> and the two-point correlators."""
        return cls(
            u_plus=0.25 + sz + zz,
            u_minus=0.25 - sz + zz,
            w_plus=0.25 - zz,
            w_minus=0.25 - zz,
            x=xx + yy,
            y=xx - yy,
            sz_i=sz,
            sz_j=sz,
        )

    @classmethod
    def from_diagonal(cls, u_plus, w_plus, w_minus, u_minus, x=0.0, y=0.0):
        """Build a state whose magnetizations are implied by the diagonal."""
        return cls(
            u_plus=u_plus,
            u_minus=u_minus,
            w_plus=w_plus,
            w_minus=w_minus,
            x=x,
            y=y,
            sz_i=u_plus + w_plus - 0.5,
            sz_j=u_plus + w_minus - 0.5,
        )

    @property
    def translation_invariant(self):
        return abs(self.w_plus - self.w_minus) <= 1e-9 and abs(self.sz_i - self.sz_j) <= 1e-9

    def violations(self, tol=CLAMP_TOL):
        """List of invariant violations (empty when the state is valid)."""
        out = []
        trace = self.u_plus + self.u_minus + self.w_plus + self.w_minus
        if not all(math.isfinite(v) for v in self.as_tuple()):
            return ["non-finite field"]
        if abs(trace - 1.0) > tol:
            out.append(f"trace {trace!r} != 1")
        for name in ("u_plus", "u_minus", "w_plus", "w_minus"):
            if getattr(self, name) < -tol:
                out.append(f"{name} = {getattr(self, name)!r} < 0")
        if self.u_plus * self.u_minus < self.y**2 - tol:
            out.append("outer block not positive (u+ u- < y^2)")
        if self.w_plus * self.w_minus < self.x**2 - tol:
            out.append("inner block not positive (w+ w- < x^2)")
        if abs(self.sz_i - (self.u_plus + self.w_plus - 0.5)) > tol:
            out.append("sz_i inconsistent with diagonal")
        if abs(self.sz_j - (self.u_plus + self.w_minus - 0.5)) > tol:
            out.append("sz_j inconsistent with diagonal")
        return out

    def validate(self, tol=CLAMP_TOL):
        problems = self.violations(tol)
        if problems:
            raise ValidationError(f"invalid XState {self}: " + "; ".join(problems))
        return self

    def as_tuple(self):
        return (self.u_plus, self.u_minus, self.w_plus, self.w_minus,
                self.x, self.y, self.sz_i, self.sz_j)

    def to_matrix(self):
        rho = np.zeros((4, 4))
        rho[0, 0] = self.u_plus
        rho[1, 1] = self.w_plus
        rho[2, 2] = self.w_minus
        rho[3, 3] = self.u_minus
        rho[1, 2] = rho[2, 1] = self.x
        rho[0, 3] = rho[3, 0] = self.y
        return rho


def eigenvalues(s, tol=CLAMP_TOL):
    """Spectrum of ``s`` as (inner-, inner+, outer-, outer+).

    Inner is the {|up down>, |down up>} block, outer the {|up up>, |down down>}
    block. Under translation invariance these are the four closed-form
    eigenvalues written in terms of the correlators.
    """
    s.validate(tol)
    w_mean = 0.5 * (s.w_plus + s.w_minus)
    w_rad = math.hypot(0.5 * (s.w_plus - s.w_minus), s.x)
    u_mean = 0.5 * (s.u_plus + s.u_minus)
    u_rad = math.hypot(0.5 * (s.u_plus - s.u_minus), s.y)
    lam = np.array([w_mean - w_rad, w_mean + w_rad, u_mean - u_rad, u_mean + u_rad])
    if np.any(lam < -tol):
        raise ValidationError(f"negative eigenvalue {lam.min()!r} in {s}")
    lam[lam < 0] = 0.0
    return lam


def entropy(spectrum, tol=1e-10):
    """Shannon entropy in bits of a probability vector, with 0 log 0 = 0."""
    p = np.asarray(spectrum, dtype=float)
    if np.any(p < -tol) or np.any(p > 1 + tol):
        raise DomainError(f"spectrum entries outside [0, 1]: {p}")
    if abs(p.sum() - 1.0) > tol:
        raise DomainError(f"spectrum sums to {p.sum()!r}, not 1")
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def binary_entropy(p):
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def _site_entropy(sz, tol):
    if abs(sz) > 0.5 + tol:
        raise DomainError(f"magnetization {sz!r} outside [-1/2, 1/2]")
    return binary_entropy(min(max(0.5 + sz, 0.0), 1.0))


def reduced_entropies(s, tol=CLAMP_TOL):
    """(S(rho_i), S(rho_j)) from the single-site spectra 1/2 +- sz."""
    return _site_entropy(s.sz_i, tol), _site_entropy(s.sz_j, tol)


def joint_entropy(s, tol=CLAMP_TOL):
    return entropy(eigenvalues(s, tol), tol=max(tol, 1e-10))
