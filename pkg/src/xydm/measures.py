"""Correlation measures of two-qubit X states.

Projective measurements are performed on site j with outcomes

    |1> = cos(theta) |up> + e^{i phi} sin(theta) |down>
    |2> = sin(theta) |up> - e^{i phi} cos(theta) |down>
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize

from xydm.errors import DomainError
from xydm.xstate import binary_entropy, joint_entropy, reduced_entropies

log = logging.getLogger(__name__)

#: clamping corrections larger than this are logged
CLAMP_WARN = 1e-9
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]])
YY = np.kron(SIGMA_Y, SIGMA_Y)


class Branch(str, Enum):
    QD1 = "QD1"
    QD2 = "QD2"
    BRUTE_FORCE = "BF"


@dataclass(frozen=True)
class MeasureReport:
    mutual_information: float
    quantum_discord: float
    classical_correlation: float
    concurrence: float
    discord_branch: Branch
    lambda_cap: float

    def as_dict(self):
        return {
            "MI": self.mutual_information,
            "QD": self.quantum_discord,
            "CC": self.classical_correlation,
            "C": self.concurrence,
            "branch": self.discord_branch.value,
            "Lambda": self.lambda_cap,
        }


class BruteForceResult(NamedTuple):
    quantum_discord: float
    classical_correlation: float
    theta: float
    phi: float
    conditional_entropy: float


def mutual_information(s):
    """I = S(rho_i) + S(rho_j) - S(rho_ij), in bits."""
    si, sj = reduced_entropies(s)
    return si + sj - joint_entropy(s)


def _xlog(a, b):
    # a log2(a / (a + b)) with 0 log 0 = 0
    return a * math.log2(a / (a + b)) if a > 0 else 0.0


def _split(mi, qd, state):
    """Clamp QD into [0, I] and return (I, QD, CC) with QD + CC = I."""
    mi = max(mi, 0.0)
    clamped = min(max(qd, 0.0), mi)
    if abs(clamped - qd) > CLAMP_WARN:
        log.warning("discord %.3e clamped to %.3e for %s", qd, clamped, state)
    return mi, clamped, mi - clamped


def discord_closed_form(s):
    """Discord as the smaller of the z- and x-measurement branches.

    Needs w_plus == w_minus; other states are routed to the brute-force
    minimizer and reported with branch ``BF``.
    """
    s.validate()
    mi = mutual_information(s)
    c = concurrence(s)
    u_p, u_m = s.u_plus, s.u_minus
    lam = min(math.sqrt((u_p - u_m) ** 2 + 4.0 * (abs(s.x) + abs(s.y)) ** 2), 1.0)
    if not s.translation_invariant:
        bf = discord_bruteforce(s)
        mi, qd, cc = _split(mi, bf.quantum_discord, s)
        return MeasureReport(mi, qd, cc, c, Branch.BRUTE_FORCE, lam)
    w = s.w_plus
    s_i, _ = reduced_entropies(s)
    s_ij = joint_entropy(s)
    cond_z = -(_xlog(u_p, w) + _xlog(w, u_p) + _xlog(u_m, w) + _xlog(w, u_m))
    qd1 = s_i - s_ij + cond_z
    qd2 = s_i - s_ij + binary_entropy(0.5 * (1.0 + lam))
    branch = Branch.QD1 if qd1 <= qd2 else Branch.QD2
    mi, qd, cc = _split(mi, min(qd1, qd2), s)
    return MeasureReport(mi, qd, cc, c, branch, lam)


def _projectors(theta, phi):
    theta, phi = np.broadcast_arrays(np.asarray(theta, dtype=float), np.asarray(phi, dtype=float))
    v = np.stack([np.cos(theta) + 0j, np.exp(1j * phi) * np.sin(theta)], axis=-1)
    return v[..., :, None] * v[..., None, :].conj()


def _conditional(rho, theta, phi, site):
    """Vectorized sum_k p_k S(rho^k) over broadcast (theta, phi)."""
    t = np.asarray(rho, dtype=complex).reshape(2, 2, 2, 2)
    P = _projectors(theta, phi)
    if site == "j":
        reduced = np.einsum("abcb->ac", t)
        m1 = np.einsum("abcd,...db->...ac", t, P)
    elif site == "i":
        reduced = np.einsum("abad->bd", t)
        m1 = np.einsum("abcd,...ca->...bd", t, P)
    else:
        raise DomainError(f"site must be 'i' or 'j', got {site!r}")
    total = 0.0
    for m in (m1, reduced - m1):
        tr = np.real(m[..., 0, 0] + m[..., 1, 1])
        rad = np.sqrt(np.real(m[..., 0, 0] - m[..., 1, 1]) ** 2 + 4.0 * np.abs(m[..., 0, 1]) ** 2)
        for lam in (0.5 * (tr + rad), 0.5 * (tr - rad)):
            ok = (lam > 0) & (tr > 0)
            ratio = np.where(ok, lam / np.where(tr > 0, tr, 1.0), 1.0)
            total = total - np.where(ok, lam * np.log2(ratio), 0.0)
    return total


def conditional_entropy(s, theta, phi, site="j"):
    """Average entropy of the unmeasured qubit after measuring ``site``."""
    s.validate()
    return float(_conditional(s.to_matrix(), theta, phi, site))


def _fold(theta, phi):
    theta = math.fmod(theta, math.pi)
    if theta < 0:
        theta, phi = -theta, phi + math.pi
    if theta > math.pi / 2:
        theta, phi = math.pi - theta, phi + math.pi
    return theta, phi % (2 * math.pi)


def discord_bruteforce(s, coarse_grid=(64, 64), site="j"):
    """Discord by direct minimization over projective measurements on ``site``.

    A full (theta, phi) grid scan is followed by a Nelder-Mead polish from the
    best grid cell. No structure of X states is assumed.
    """
    s.validate()
    n_theta, n_phi = coarse_grid
    rho = s.to_matrix()
    thetas = np.linspace(0.0, math.pi / 2, n_theta)
    phis = np.linspace(0.0, 2 * math.pi, n_phi, endpoint=False)
    grid = _conditional(rho, thetas[:, None], phis[None, :], site)
    k = int(np.argmin(grid))
    a, b = divmod(k, n_phi)
    best = (float(grid[a, b]), float(thetas[a]), float(phis[b]))

    def f(v):
        return float(_conditional(rho, v[0], v[1], site))

    step = (thetas[1] - thetas[0] if n_theta > 1 else 0.1, phis[1] - phis[0] if n_phi > 1 else 0.1)
    x0 = np.array([best[1], best[2]])
    simplex = np.array([x0, x0 + [step[0], 0.0], x0 + [0.0, step[1]]])
    res = minimize(f, x0, method="Nelder-Mead",
                   options={"initial_simplex": simplex, "xatol": 1e-10, "fatol": 1e-14,
                            "maxiter": 4000})
    if res.fun < best[0]:
        theta, phi = _fold(float(res.x[0]), float(res.x[1]))
        best = (float(res.fun), theta, phi)
    s_i, s_j = reduced_entropies(s)
    s_unmeasured = s_i if site == "j" else s_j
    mi = mutual_information(s)
    cc = s_unmeasured - best[0]
    return BruteForceResult(mi - cc, cc, best[1], best[2], best[0])


def concurrence(s):
    """Concurrence of an X state from its off-diagonals and block diagonals."""
    s.validate()
    c = 2.0 * max(0.0,
                  abs(s.x) - math.sqrt(max(s.u_plus * s.u_minus, 0.0)),
                  abs(s.y) - math.sqrt(max(s.w_plus * s.w_minus, 0.0)))
    return min(c, 1.0)


def _psd_sqrt(rho):
    w, v = np.linalg.eigh(rho)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def general_concurrence_oracle(rho, tol=1e-9):
    """Wootters concurrence of an arbitrary two-qubit density matrix.

    The square roots of the eigenvalues of rho * rho_tilde are taken as the
    singular values of sqrt(rho) sqrt(rho_tilde), which stays accurate when
    some of them vanish.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise DomainError(f"expected a 4x4 matrix, got shape {rho.shape}")
    if np.abs(rho - rho.conj().T).max() > tol:
        raise DomainError("matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > tol:
        raise DomainError(f"trace {np.trace(rho).real!r} != 1")
    if np.linalg.eigvalsh(rho).min() < -tol:
        raise DomainError("matrix is not positive semidefinite")
    root = _psd_sqrt(rho)
    root_tilde = YY @ root.conj() @ YY
    zeta = np.linalg.svd(root @ root_tilde, compute_uv=False)
    zeta = np.sort(zeta)[::-1]
    return float(max(0.0, zeta[0] - zeta[1] - zeta[2] - zeta[3]))
