"""Exact diagonalization of small rings.

Used as the independent reference for the analytic correlators. Site 0 is
the leftmost tensor factor and |up> is basis state 0, so bit (N - 1 - j) of
a basis index is 1 when spin j points down.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg as la
from scipy import sparse

from xydm.chain import ChainParams, CorrelationSet, FiniteRing, correlations
from xydm.errors import DomainError, NumericalError, StructuralError
from xydm.measures import discord_closed_form
from xydm.xstate import XState

N_MIN, N_MAX = 4, 14
SX = np.array([[0.0, 1.0], [1.0, 0.0]]) / 2
SY = np.array([[0.0, -1.0j], [1.0j, 0.0]]) / 2
SZ = np.array([[1.0, 0.0], [0.0, -1.0]]) / 2
X_PATTERN = np.array([[1, 0, 0, 1], [0, 1, 1, 0], [0, 1, 1, 0], [1, 0, 0, 1]], dtype=bool)
#: allowed magnitude of non-X elements before the reduction is rejected
LEAK_TOL = 1e-6
BOUNDARIES = ("periodic", "open")


def _ring_size(p, N=None):
    if N is None:
        if not isinstance(p.lattice, FiniteRing):
            raise DomainError("exact diagonalization needs a FiniteRing lattice or explicit N")
        N = p.lattice.N
    if N % 2 or not N_MIN <= N <= N_MAX:
        raise DomainError(f"N must be even with {N_MIN} <= N <= {N_MAX}, got {N}")
    return N


def _bonds(N, boundary):
    if boundary not in BOUNDARIES:
        raise DomainError(f"boundary must be one of {BOUNDARIES}, got {boundary!r}")
    last = N if boundary == "periodic" else N - 1
    return [(j, (j + 1) % N) for j in range(last)]


def _site(op, j, N):
    return sparse.kron(sparse.kron(sparse.identity(2**j), sparse.csr_matrix(op)),
                       sparse.identity(2 ** (N - j - 1)), format="csr")


def build_hamiltonian(p, N=None, boundary="periodic"):
    """Dense 2^N x 2^N Hamiltonian assembled from Kronecker products."""
    N = _ring_size(p, N)
    sx = [_site(SX, j, N) for j in range(N)]
    sy = [_site(SY, j, N) for j in range(N)]
    H = sparse.csr_matrix((2**N, 2**N), dtype=complex)
    for j, k in _bonds(N, boundary):
        H = H + p.J * ((1 + p.gamma) * sx[j] @ sx[k] + (1 - p.gamma) * sy[j] @ sy[k]
                       + p.D * (sx[j] @ sy[k] - sy[j] @ sx[k]))
    for j in range(N):
        H = H - _site(SZ, j, N)
    return H.toarray()


def apply_hamiltonian(p, psi, N=None, boundary="periodic"):
    """H @ psi computed by bit manipulation on basis indices, without a matrix.

    Per bond the couplings in ladder form are
    (J/2)(1 + iD) S+_j S-_k + (J/2)(1 - iD) S-_j S+_k + (J g / 2)(S+_j S+_k + S-_j S-_k).
    """
    N = _ring_size(p, N)
    psi = np.asarray(psi, dtype=complex)
    idx = np.arange(2**N)
    down = [(idx >> (N - 1 - j)) & 1 for j in range(N)]
    out = -0.5 * sum(1 - 2 * d for d in down) * psi
    c_pm = 0.5 * p.J * (1 + 1j * p.D)
    c_mp = 0.5 * p.J * (1 - 1j * p.D)
    c_pair = 0.5 * p.J * p.gamma
    for j, k in _bonds(N, boundary):
        mask = (1 << (N - 1 - j)) | (1 << (N - 1 - k))
        dj, dk = down[j], down[k]
        flipped = idx ^ mask
        for sel, coeff in (
            ((dj == 1) & (dk == 0), c_pm),    # S+_j S-_k raises j, lowers k
            ((dj == 0) & (dk == 1), c_mp),
            ((dj == 1) & (dk == 1), c_pair),  # S+ S+
            ((dj == 0) & (dk == 0), c_pair),  # S- S-
        ):
            src = idx[sel]
            out[flipped[sel]] += coeff * psi[src]
    return out


@dataclass(frozen=True)
class DenseState:
    """Mixture sum_k weights[k] |v_k><v_k| with orthonormal columns v_k."""

    weights: np.ndarray
    vectors: np.ndarray

    @property
    def N(self):
        return int(round(math.log2(self.vectors.shape[0])))

    def density_matrix(self):
        return (self.vectors * self.weights) @ self.vectors.conj().T

    def expectation(self, op):
        v = self.vectors
        return float(np.real(np.einsum("k,ik,ik->", self.weights, v.conj(), op @ v)))


def thermal_or_ground_state(H, temperature, degeneracy_tol=1e-9):
    """Gibbs state at ``temperature``; at T = 0 the uniform mixture over the ground space."""
    H = np.asarray(H)
    dim = H.shape[0]
    if np.abs(H - H.conj().T).max() > 1e-10:
        raise DomainError("Hamiltonian is not Hermitian")
    if not np.any(H.imag if np.iscomplexobj(H) else 0):
        H = H.real
    try:
        if temperature == 0:
            k = min(dim, 16)
            while True:
                E, V = la.eigh(H, subset_by_index=[0, k - 1])
                g = int(np.sum(E <= E[0] + degeneracy_tol * max(1.0, abs(E[0]))))
                if g < k or k == dim:
                    break
                k = min(dim, 4 * k)
            return DenseState(np.full(g, 1.0 / g), V[:, :g])
        E, V = la.eigh(H)
    except la.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from exc
    if math.isinf(temperature):
        w = np.full(dim, 1.0 / dim)
    else:
        w = np.exp(-(E - E[0]) / temperature)
        w /= w.sum()
    return DenseState(w, V)


@lru_cache(maxsize=32)
def exact_state(p, N=None, boundary="periodic"):
    return thermal_or_ground_state(build_hamiltonian(p, N, boundary), p.temperature)


@dataclass(frozen=True)
class PairReduction:
    rho: np.ndarray
    xstate: XState
    leakage: float
    phase_x: float
    phase_y: float

    def correlations(self, r):
        m = self.rho
        return CorrelationSet(
            sz=float(np.real(m[0, 0] + m[1, 1]) - 0.5),
            xx=float(np.real(m[1, 2] + m[0, 3]) / 2),
            yy=float(np.real(m[1, 2] - m[0, 3]) / 2),
            zz=float(np.real(m[0, 0] + m[3, 3] - m[1, 1] - m[2, 2]) / 4),
            r=r,
        )


def reduced_pair(state, i, j, imag_tol=1e-10):
    """Two-site density matrix of spins i, j and its X-state projection.

    Complex off-diagonals are rotated real by local z-rotations (which leave
    every correlation measure unchanged); their phases are reported.
    """
    N = state.N
    if i == j or not (0 <= i < N and 0 <= j < N):
        raise DomainError(f"need distinct sites in [0, {N}), got {i}, {j}")
    k = state.vectors.shape[1]
    psi = (state.vectors * np.sqrt(state.weights)).reshape([2] * N + [k])
    psi = np.moveaxis(psi, [i, j], [0, 1]).reshape(4, -1)
    rho = psi @ psi.conj().T
    leakage = float(np.abs(rho[~X_PATTERN]).max())
    if leakage > LEAK_TOL:
        raise StructuralError(f"reduced state of sites ({i}, {j}) is not X-shaped "
                              f"(max off-pattern element {leakage:.3g})")
    x, y = rho[1, 2], rho[0, 3]
    if abs(x.imag) <= imag_tol and abs(y.imag) <= imag_tol:
        xr, yr = float(x.real), float(y.real)
    else:
        xr, yr = float(abs(x)), float(abs(y))
    d = np.real(np.diag(rho))
    xs = XState(
        u_plus=float(d[0]), u_minus=float(d[3]), w_plus=float(d[1]), w_minus=float(d[2]),
        x=xr, y=yr, sz_i=float(d[0] + d[1] - 0.5), sz_j=float(d[0] + d[2] - 0.5),
    )
    return PairReduction(rho, xs, leakage, float(np.angle(x)), float(np.angle(y)))


@dataclass(frozen=True)
class EDPoint:
    N: int
    correlations: CorrelationSet
    report: object
    leakage: float


def ed_point(p, N, r=1):
    """Correlators and measures of spins (0, r) from the exact state of an N-ring."""
    state = exact_state(p.replace(lattice=FiniteRing(N)))
    red = reduced_pair(state, 0, r)
    return EDPoint(N, red.correlations(r), discord_closed_form(red.xstate), red.leakage)


QUANTITIES = ("sz", "xx", "yy", "zz", "MI", "QD", "CC", "C")


def _values(corr, report):
    return {
        "sz": corr.sz, "xx": corr.xx, "yy": corr.yy, "zz": corr.zz,
        "MI": report.mutual_information, "QD": report.quantum_discord,
        "CC": report.classical_correlation, "C": report.concurrence,
    }


@dataclass(frozen=True)
class OracleComparison:
    params: ChainParams
    r: int
    Ns: tuple
    analytic: dict
    ed: dict        # N -> {quantity: value}
    deltas: dict    # N -> {quantity: |analytic - ed|}

    def max_delta(self, N):
        return max(self.deltas[N].values())

    def shrinking(self, floor=1e-10):
        """Per quantity: deltas non-increasing over Ns (or already below ``floor``)."""
        out = {}
        for q in QUANTITIES:
            seq = [self.deltas[N][q] for N in self.Ns]
            out[q] = all(b <= a or b < floor for a, b in zip(seq, seq[1:]))
        return out


def compare_to_analytic(p, r=1, Ns=(8, 10, 12)):
    """Thermodynamic-limit analytic values against ED at each ring size in ``Ns``."""
    from xydm.chain import THERMODYNAMIC_LIMIT, pair_density_matrix

    tl = p.replace(lattice=THERMODYNAMIC_LIMIT)
    analytic = _values(correlations(tl, r), discord_closed_form(pair_density_matrix(tl, r)))
    ed, deltas = {}, {}
    for N in Ns:
        pt = ed_point(p, N, r)
        ed[N] = _values(pt.correlations, pt.report)
        deltas[N] = {q: abs(analytic[q] - ed[N][q]) for q in QUANTITIES}
    return OracleComparison(tl, r, tuple(Ns), analytic, ed, deltas)


def gauge_partner(p):
    """Isotropic chain without DM whose coupling absorbs the DM term: J sqrt(1 + D^2)."""
    return p.replace(J=p.J * math.hypot(1.0, p.D), D=0.0)


@dataclass(frozen=True)
class GaugeReport:
    spectra_match: bool
    measures_match: bool
    spectral_deviation: float
    measure_deviation: float

    @property
    def max_deviation(self):
        return max(self.spectral_deviation, self.measure_deviation)

    @property
    def match(self):
        return self.spectra_match and self.measures_match


def verify_gauge_equivalence(pA, pB, N, boundary="periodic",
                             spectrum_tol=1e-9, measure_tol=1e-8):
    """Compare full spectra and nearest-neighbour measures of two Hamiltonians."""
    HA = build_hamiltonian(pA, N, boundary)
    HB = build_hamiltonian(pB, N, boundary)
    spec_dev = float(np.abs(la.eigvalsh(HA) - la.eigvalsh(HB)).max())
    reports = []
    for p, H in ((pA, HA), (pB, HB)):
        red = reduced_pair(thermal_or_ground_state(H, p.temperature), 0, 1)
        rep = discord_closed_form(red.xstate)
        reports.append((rep.quantum_discord, rep.classical_correlation, rep.concurrence))
    meas_dev = float(max(abs(a - b) for a, b in zip(*reports)))
    return GaugeReport(spec_dev <= spectrum_tol, meas_dev <= measure_tol, spec_dev, meas_dev)
