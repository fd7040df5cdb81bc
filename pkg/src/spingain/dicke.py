"""Symmetric-subspace spin states and banded collective-spin operators.

States of N spin-1/2 atoms restricted to the maximal-spin (Dicke) sector are
vectors over the magnetization index m = -N/2 ... N/2 (N+1 amplitudes).  Every
collective observable used here is banded in this basis: S_z is diagonal,
S_x and S_y live on bands +-1, and products stay banded with additive band
widths.  All contractions therefore cost O(N * bandwidth) instead of O(N^2).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

__all__ = [
    "BandOverflowError",
    "DickeVector",
    "BandedOperator",
    "BandedDensity",
    "coherent_state_x",
    "spin_operators",
    "band_product",
    "band_commutator",
    "band_commutator_i",
    "band_anticommutator",
    "band_linear_combination",
    "expectation",
    "apply_diagonal_phase",
]

_NORM_TOL = 1e-12
_HERM_TOL = 1e-12


class BandOverflowError(ValueError):
    """An operator band falls outside the coherence bands stored for a state."""


def _band_col_range(n_atoms, k):
    """Valid column indices for band k: elements (j+k, j) with both in range."""
    return max(0, -k), n_atoms - max(0, k)


def m_values(n_atoms):
    """Magnetization grid m_i = i - N/2 (half-integers for odd N)."""
    return np.arange(n_atoms + 1, dtype=float) - n_atoms / 2.0


@dataclass(frozen=True)
class DickeVector:
    """Pure state over the Dicke basis, index i <-> m = i - N/2."""

    n_atoms: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.n_atoms < 1:
            raise ValueError(f"n_atoms must be >= 1, got {self.n_atoms}")
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.n_atoms + 1,):
            raise ValueError(
                f"need {self.n_atoms + 1} amplitudes, got shape {amps.shape}"
            )
        norm_sq = float(np.sum(np.abs(amps) ** 2))
        if abs(norm_sq - 1.0) > 1e-10:
            raise ValueError(f"state not normalized: sum |c_m|^2 = {norm_sq!r}")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @property
    def m_values(self):
        return m_values(self.n_atoms)

    def norm_squared(self):
        return float(np.sum(np.abs(self.amplitudes) ** 2))


@dataclass(frozen=True)
class BandedOperator:
    """Operator stored as diagonal bands: band k holds elements (j+k, j).

    Band k is an array over the valid columns j = max(0,-k) .. N-max(0,k),
    so bands k and -k share the same index order and hermiticity reads
    band(-k) == conj(band(k)).
    """

    n_atoms: int
    bands: dict = field(default_factory=dict)
    hermitian: bool = False

    def __post_init__(self):
        if self.n_atoms < 1:
            raise ValueError(f"n_atoms must be >= 1, got {self.n_atoms}")
        clean = {}
        for k, arr in self.bands.items():
            k = int(k)
            if abs(k) > self.n_atoms:
                continue
            arr = np.asarray(arr, dtype=complex)
            expected = self.n_atoms + 1 - abs(k)
            if arr.shape != (expected,):
                raise ValueError(f"band {k}: need length {expected}, got {arr.shape}")
            arr.flags.writeable = False
            clean[k] = arr
        object.__setattr__(self, "bands", clean)
        if self.hermitian and not self._hermitian_within(_HERM_TOL):
            raise ValueError("hermitian flag set but bands are not conjugate-paired")

    @property
    def max_band(self):
        return max((abs(k) for k in self.bands), default=0)

    def band(self, k):
        """Band k entries (zeros if the band is not stored)."""
        if k in self.bands:
            return self.bands[k]
        return np.zeros(self.n_atoms + 1 - abs(k), dtype=complex)

    def _hermitian_within(self, tol):
        scale = max(self.abs_max(), 1.0)
        for k, arr in self.bands.items():
            other = self.band(-k)
            if np.max(np.abs(other - np.conj(arr))) > tol * scale:
                return False
        return True

    def abs_max(self):
        return max((float(np.max(np.abs(a))) for a in self.bands.values()), default=0.0)

    def scaled(self, factor):
        bands = {k: factor * a for k, a in self.bands.items()}
        herm = self.hermitian and abs(complex(factor).imag) == 0.0 and complex(factor).real == factor
        return BandedOperator(self.n_atoms, bands, hermitian=bool(herm))

    def dagger(self):
        bands = {-k: np.conj(a) for k, a in self.bands.items()}
        return BandedOperator(self.n_atoms, bands, hermitian=self.hermitian)

    def dense(self):
        """Full (N+1)x(N+1) matrix; intended for small N oracles."""
        n = self.n_atoms + 1
        out = np.zeros((n, n), dtype=complex)
        for k, arr in self.bands.items():
            lo, hi = _band_col_range(self.n_atoms, k)
            cols = np.arange(lo, hi + 1)
            out[cols + k, cols] = arr
        return out

    @staticmethod
    def from_dense(matrix, hermitian=False, tol=0.0):
        matrix = np.asarray(matrix, dtype=complex)
        n_atoms = matrix.shape[0] - 1
        bands = {}
        for k in range(-n_atoms, n_atoms + 1):
            lo, hi = _band_col_range(n_atoms, k)
            cols = np.arange(lo, hi + 1)
            arr = matrix[cols + k, cols]
            if np.max(np.abs(arr)) > tol:
                bands[k] = arr
        return BandedOperator(n_atoms, bands, hermitian=hermitian)


@dataclass(frozen=True)
class BandedDensity:
    """Density matrix truncated to coherence bands |m - m'| <= max_band."""

    n_atoms: int
    bands: dict = field(default_factory=dict)
    unit_trace: bool = True

    def __post_init__(self):
        if self.n_atoms < 1:
            raise ValueError(f"n_atoms must be >= 1, got {self.n_atoms}")
        clean = {}
        for k, arr in self.bands.items():
            k = int(k)
            arr = np.asarray(arr, dtype=complex)
            expected = self.n_atoms + 1 - abs(k)
            if arr.shape != (expected,):
                raise ValueError(f"band {k}: need length {expected}, got {arr.shape}")
            arr.flags.writeable = False
            clean[k] = arr
        object.__setattr__(self, "bands", clean)
        if self.unit_trace and abs(self.trace() - 1.0) > 1e-10:
            raise ValueError(f"trace = {self.trace()!r}, expected 1")

    @property
    def max_band(self):
        return max((abs(k) for k in self.bands), default=0)

    def band(self, k):
        if k in self.bands:
            return self.bands[k]
        return np.zeros(self.n_atoms + 1 - abs(k), dtype=complex)

    def trace(self):
        return float(np.real(np.sum(self.band(0))))

    def dense(self):
        n = self.n_atoms + 1
        out = np.zeros((n, n), dtype=complex)
        for k, arr in self.bands.items():
            lo, hi = _band_col_range(self.n_atoms, k)
            cols = np.arange(lo, hi + 1)
            out[cols + k, cols] = arr
        return out


##############################################################################
# constructors
##############################################################################

def coherent_state_x(n_atoms):
    """Spin-coherent state polarized along +x, S_x eigenvalue N/2.

    Amplitudes c_m = 2^(-N/2) sqrt(binom(N, N/2+m)), evaluated through
    log-gamma so that N up to 1e6 neither overflows nor underflows the
    binomial prefactors.
    """
    if n_atoms < 1:
        raise ValueError(f"n_atoms must be >= 1, got {n_atoms}")
    i = np.arange(n_atoms + 1, dtype=float)
    log_amp = 0.5 * (
        gammaln(n_atoms + 1.0) - gammaln(i + 1.0) - gammaln(n_atoms - i + 1.0)
    ) - 0.5 * n_atoms * np.log(2.0)
    amps = np.exp(log_amp)
    amps /= np.sqrt(np.sum(amps**2))
    return DickeVector(n_atoms, amps.astype(complex))


def ladder_elements(n_atoms):
    """Raising-operator matrix elements A_i = <m_i+1|S_+|m_i> for i = 0..N-1."""
    j = n_atoms / 2.0
    m = m_values(n_atoms)[:-1]
    return np.sqrt((j - m) * (j + m + 1.0))


def spin_operators(n_atoms):
    """Collective (S_x, S_y, S_z) as Hermitian banded operators."""
    if n_atoms < 1:
        raise ValueError(f"n_atoms must be >= 1, got {n_atoms}")
    a = ladder_elements(n_atoms).astype(complex)
    m = m_values(n_atoms).astype(complex)
    s_x = BandedOperator(n_atoms, {1: a / 2.0, -1: a / 2.0}, hermitian=True)
    s_y = BandedOperator(n_atoms, {1: -0.5j * a, -1: 0.5j * a}, hermitian=True)
    s_z = BandedOperator(n_atoms, {0: m}, hermitian=True)
    return s_x, s_y, s_z


def spin_generator(n_atoms, axis):
    """S_n = n . S for a unit 3-vector axis (x, y, z components)."""
    s_x, s_y, s_z = spin_operators(n_atoms)
    return band_linear_combination(axis, (s_x, s_y, s_z), hermitian=True)


##############################################################################
# banded algebra
##############################################################################

def _check_same_size(a, b):
    if a.n_atoms != b.n_atoms:
        raise ValueError(f"mismatched n_atoms: {a.n_atoms} vs {b.n_atoms}")


def band_product(a, b):
    """Exact banded matrix product; K(AB) <= K(A) + K(B)."""
    _check_same_size(a, b)
    n = a.n_atoms
    out = {}
    for k1, arr1 in a.bands.items():
        lo1, hi1 = _band_col_range(n, k1)
        for k2, arr2 in b.bands.items():
            k = k1 + k2
            if abs(k) > n:
                continue
            lo2, hi2 = _band_col_range(n, k2)
            # element (j+k, j) += A(j+k, j+k2) * B(j+k2, j); A column is j+k2
            j_lo = max(lo2, lo1 - k2)
            j_hi = min(hi2, hi1 - k2)
            if j_lo > j_hi:
                continue
            lo_k, _ = _band_col_range(n, k)
            seg = arr1[j_lo + k2 - lo1 : j_hi + k2 - lo1 + 1] * arr2[j_lo - lo2 : j_hi - lo2 + 1]
            if k not in out:
                out[k] = np.zeros(n + 1 - abs(k), dtype=complex)
            out[k][j_lo - lo_k : j_hi - lo_k + 1] += seg
    return BandedOperator(n, out, hermitian=False)


def band_linear_combination(coeffs, ops, hermitian=None):
    """Sum of coeff_i * op_i over a matching-size operator list."""
    ops = list(ops)
    if not ops:
        raise ValueError("need at least one operator")
    n = ops[0].n_atoms
    for op in ops[1:]:
        _check_same_size(ops[0], op)
    out = {}
    for c, op in zip(coeffs, ops):
        if c == 0:
            continue
        for k, arr in op.bands.items():
            if k not in out:
                out[k] = np.zeros(n + 1 - abs(k), dtype=complex)
            out[k] += c * arr
    if hermitian is None:
        hermitian = all(op.hermitian for op in ops) and all(
            complex(c).imag == 0.0 for c in coeffs
        )
    return BandedOperator(n, out, hermitian=bool(hermitian))


def band_commutator(a, b):
    """[A, B]; anti-Hermitian when A and B are Hermitian (see band_commutator_i)."""
    ab = band_product(a, b)
    ba = band_product(b, a)
    return band_linear_combination([1.0, -1.0], [ab, ba], hermitian=False)


def band_commutator_i(a, b):
    """-i [A, B]: the tracked Hermitian factor of the commutator of Hermitians."""
    c = band_commutator(a, b)
    herm = a.hermitian and b.hermitian
    return BandedOperator(c.n_atoms, {k: -1j * arr for k, arr in c.bands.items()},
                          hermitian=herm)


def band_anticommutator(a, b):
    """{A, B} = AB + BA; Hermitian for Hermitian inputs."""
    ab = band_product(a, b)
    ba = band_product(b, a)
    herm = a.hermitian and b.hermitian
    s = band_linear_combination([1.0, 1.0], [ab, ba], hermitian=False)
    return BandedOperator(s.n_atoms, s.bands, hermitian=herm)


##############################################################################
# contraction
##############################################################################

def expectation(state, op):
    """<A> on a DickeVector or Tr[A rho] on a BandedDensity (complex result).

    Hermitian operators give a real value up to roundoff; callers take .real.
    For densities the operator bands must fit inside the stored coherence
    bands, otherwise the truncated result would be silently wrong.
    """
    if isinstance(state, DickeVector):
        if state.n_atoms != op.n_atoms:
            raise ValueError(f"mismatched n_atoms: {state.n_atoms} vs {op.n_atoms}")
        psi = state.amplitudes
        total = 0.0 + 0.0j
        for k, arr in op.bands.items():
            lo, hi = _band_col_range(state.n_atoms, k)
            cols = np.arange(lo, hi + 1)
            total += np.sum(np.conj(psi[cols + k]) * arr * psi[cols])
        return complex(total)
    if isinstance(state, BandedDensity):
        if state.n_atoms != op.n_atoms:
            raise ValueError(f"mismatched n_atoms: {state.n_atoms} vs {op.n_atoms}")
        if op.max_band > state.max_band:
            raise BandOverflowError(
                f"operator band {op.max_band} exceeds stored coherence band "
                f"{state.max_band}"
            )
        total = 0.0 + 0.0j
        for k, arr in op.bands.items():
            # Tr[A rho] pairs element A(j+k, j) with rho(j, j+k); the stored
            # index order of band k of A and band -k of rho coincide.
            total += np.sum(arr * state.band(-k))
        return complex(total)
    raise TypeError(f"unsupported state type {type(state)!r}")


def apply_diagonal_phase(state, phases):
    """c_m -> exp(-i phi_m) c_m; exactly norm-preserving."""
    phases = np.asarray(phases, dtype=float)
    if phases.shape != state.amplitudes.shape:
        raise ValueError(
            f"need {state.amplitudes.shape[0]} phases, got shape {phases.shape}"
        )
    return DickeVector(state.n_atoms, np.exp(-1j * phases) * state.amplitudes)
