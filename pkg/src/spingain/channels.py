"""State preparation, dephasing channels, and the echo observable.

Twisting about z for a dimensionless time chi*t multiplies amplitude m by
exp(-i chit m^2).  Both decoherence models reduce to Gaussian decay of the
coherence bands rho_{m,m'}:

* ballistic: a shot-to-shot random rotation D about z with variance
  eps * N**gamma gives decay exp(-s k^2 / 2), s = eps N^gamma (chit_total)^2;
* diffusive: continuous z-dephasing at rate eps*chi gives the exact
  master-equation solution decay exp(-s k^2 / 2), s = eps * chit.

The echo (second twisting of duration chitau before a linear readout) is
handled in the Heisenberg picture: conjugation by exp(-i chitau Sz^2) is a
pure band-phase multiplication.  For ballistic noise the random rotation is
drawn once per shot and is shared by preparation and echo, so expectation
values are averaged term by term over D; ShotNoisyOperator records the
linear-in-D phase slope of every band to make that average exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dicke import (
    BandedDensity,
    BandedOperator,
    DickeVector,
    band_anticommutator,
    band_linear_combination,
    coherent_state_x,
    expectation,
    m_values,
    spin_operators,
)

__all__ = [
    "NoiseKernel",
    "PreparationSpec",
    "ShotNoisyOperator",
    "oat_state",
    "ballistic_kernel",
    "diffusive_kernel",
    "no_noise",
    "make_kernel",
    "prepare_noisy",
    "twist_conjugate",
    "decay_bands",
    "mai_observable",
    "mai_effective_observable_noisy",
    "shot_plain",
    "shot_split_conjugated",
    "shot_product",
    "shot_combine",
    "shot_expectation",
    "phase_terms",
    "ballistic_mc_oracle",
]

_KINDS = ("none", "ballistic", "diffusive")


@dataclass(frozen=True)
class NoiseKernel:
    """Per-band coherence decay: decay(k) = exp(-s k^2 / 2)."""

    kind: str
    epsilon: float = 0.0
    gamma: float = 0.0
    s: float = 0.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.s < 0:
            raise ValueError(f"derived variance must be >= 0, got {self.s}")

    def decay(self, k):
        """Decay factor for band offset k (scalar or array)."""
        k = np.asarray(k, dtype=float)
        return np.exp(-0.5 * self.s * k**2)


def no_noise():
    return NoiseKernel("none")


def ballistic_kernel(n_atoms, chit_total, epsilon, gamma):
    """Kernel of the shot-to-shot rotation accumulated over chit_total.

    The Gaussian average <exp(-i chit D k)> over D with variance eps N^gamma
    equals exp(-eps N^gamma (chit k)^2 / 2), hence s = eps N^gamma chit^2.
    """
    if epsilon < 0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must be in [0, 1], got {gamma}")
    s = epsilon * float(n_atoms) ** gamma * chit_total**2
    return NoiseKernel("ballistic", epsilon, gamma, s)


def diffusive_kernel(n_atoms, chit, epsilon):
    """Kernel of continuous z-dephasing at relative rate epsilon over chit."""
    if epsilon < 0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    if chit < 0:
        raise ValueError(f"chit must be >= 0, got {chit}")
    return NoiseKernel("diffusive", epsilon, 0.0, epsilon * chit)


def make_kernel(kind, n_atoms, chit, epsilon=0.0, gamma=0.0):
    """Kernel for a given elapsed preparation time chit."""
    if kind == "none":
        return no_noise()
    if kind == "ballistic":
        return ballistic_kernel(n_atoms, chit, epsilon, gamma)
    if kind == "diffusive":
        return diffusive_kernel(n_atoms, chit, epsilon)
    raise ValueError(f"unknown noise kind {kind!r}")


@dataclass(frozen=True)
class PreparationSpec:
    """Twisting preparation: N atoms for time chit under a noise kernel.

    When the time is parametrized as chit = sigma * N**(-alpha) both the
    exponent pair and chit are stored and must agree to 1e-14.
    """

    n_atoms: int
    chit: float
    alpha: float | None = None
    sigma: float | None = None
    noise: NoiseKernel = field(default_factory=no_noise)

    def __post_init__(self):
        if self.n_atoms < 1:
            raise ValueError(f"n_atoms must be >= 1, got {self.n_atoms}")
        if self.chit < 0:
            raise ValueError(f"chit must be >= 0, got {self.chit}")
        if (self.alpha is None) != (self.sigma is None):
            raise ValueError("alpha and sigma must be given together")
        if self.alpha is not None:
            implied = self.sigma * float(self.n_atoms) ** (-self.alpha)
            if abs(self.chit - implied) > 1e-14 * max(abs(implied), 1e-300):
                raise ValueError(
                    f"chit = {self.chit!r} inconsistent with "
                    f"sigma*N^-alpha = {implied!r}"
                )

    @staticmethod
    def build(n_atoms, chit=None, alpha=None, sigma=None,
              noise_kind="none", epsilon=0.0, gamma=0.0):
        """Resolve the time policy and derive the preparation kernel."""
        if chit is None:
            if alpha is None or sigma is None:
                raise ValueError("need chit or the (alpha, sigma) pair")
            chit = sigma * float(n_atoms) ** (-alpha)
        kern = make_kernel(noise_kind, n_atoms, chit, epsilon, gamma)
        return PreparationSpec(n_atoms, chit, alpha, sigma, kern)


##############################################################################
# preparation
##############################################################################

def oat_state(n_atoms, chit):
    """Twisted state: coherent-x amplitudes with phases chit * m^2."""
    state = coherent_state_x(n_atoms)
    m = m_values(n_atoms)
    return _twist(state, chit, m)


def _twist(state, chit, m):
    if chit == 0.0:
        return state
    return DickeVector(state.n_atoms, np.exp(-1j * chit * m**2) * state.amplitudes)


def prepare_noisy(spec, max_band=8):
    """Dephased twisted state as a BandedDensity truncated at max_band.

    rho_{m,m'} = exp(-i chit (m^2 - m'^2)) decay(m-m') c_m c_m'; only bands
    |m-m'| <= max_band are kept, which is exact for any observable whose own
    band width fits (expectation raises BandOverflowError otherwise).
    """
    psi = oat_state(spec.n_atoms, spec.chit).amplitudes
    n = spec.n_atoms
    bands = {}
    for k in range(-min(max_band, n), min(max_band, n) + 1):
        lo = max(0, -k)
        hi = n - max(0, k)
        cols = np.arange(lo, hi + 1)
        bands[k] = psi[cols + k] * np.conj(psi[cols]) * float(spec.noise.decay(k))
    return BandedDensity(n, bands)


##############################################################################
# echo conjugation
##############################################################################

def twist_conjugate(op, chitau):
    """exp(+i chitau Sz^2) A exp(-i chitau Sz^2) as band-phase multiplication.

    Band k element (m+k, m) acquires exp(i chitau (2 m k + k^2)).
    """
    if chitau == 0.0:
        return op
    n = op.n_atoms
    m = m_values(n)
    bands = {}
    for k, arr in op.bands.items():
        lo = max(0, -k)
        hi = n - max(0, k)
        mcols = m[lo : hi + 1]
        bands[k] = arr * np.exp(1j * chitau * (2.0 * mcols * k + k * k))
    return BandedOperator(n, bands, hermitian=op.hermitian)


def decay_bands(op, s):
    """Multiply band k by exp(-s k^2 / 2); the adjoint of a dephasing step."""
    if s == 0.0:
        return op
    bands = {k: arr * math.exp(-0.5 * s * k * k) for k, arr in op.bands.items()}
    return BandedOperator(op.n_atoms, bands, hermitian=op.hermitian)


def mai_observable(n_atoms, m_vec, chitau):
    """Echo observable U_tau^dag (m . S) U_tau with U_tau = exp(-i chitau Sz^2)."""
    m_vec = np.asarray(m_vec, dtype=float)
    if m_vec.shape != (3,) or not np.all(np.isfinite(m_vec)):
        raise ValueError(f"m_vec must be a finite 3-vector, got {m_vec!r}")
    s_ops = spin_operators(n_atoms)
    s_m = band_linear_combination(m_vec, s_ops, hermitian=True)
    return twist_conjugate(s_m, chitau)


def mai_effective_observable_noisy(n_atoms, m_vec, chitau, noise,
                                   same_shot_coupling=True):
    """Adjoint-channel image of the echo observable under dephasing.

    Diffusive noise acts during the echo itself, so every band of the
    conjugated observable decays with s = eps |chitau|.  Ballistic noise is a
    single random rotation shared (by default) between preparation and echo;
    the returned ShotNoisyOperator keeps the per-band D-phase slopes so the
    Gaussian average can be applied to every contraction term exactly.  With
    same_shot_coupling=False an independent rotation is drawn for the echo,
    which again reduces to a plain band decay.
    """
    if noise.kind == "none":
        return mai_observable(n_atoms, m_vec, chitau)
    if noise.kind == "diffusive":
        op = mai_observable(n_atoms, m_vec, chitau)
        return decay_bands(op, noise.epsilon * abs(chitau))
    if noise.kind == "ballistic":
        op = mai_observable(n_atoms, m_vec, chitau)
        if not same_shot_coupling:
            s = noise.epsilon * float(n_atoms) ** noise.gamma * chitau**2
            return decay_bands(op, s)
        return shot_split_conjugated(op, abs(chitau))
    raise ValueError(f"unsupported noise kind {noise.kind!r}")


##############################################################################
# shot-noise tagged algebra (ballistic, shared D)
##############################################################################

@dataclass(frozen=True)
class ShotNoisyOperator:
    """Banded operator split into parts with a linear-in-D band phase.

    Part w collects the matrix elements whose phase under the random rotation
    D is exp(i chitau_abs * w * D); for an echo-conjugated observable w is the
    band offset itself.  Products add the slopes, so mixed products with
    rotation generators (slope 0) remain exactly averageable.
    """

    n_atoms: int
    chitau_abs: float
    parts: dict = field(default_factory=dict)

    def part(self, w):
        return self.parts.get(w)


def shot_plain(op, chitau_abs):
    """Wrap an operator that carries no echo phase (slope-0 part only)."""
    return ShotNoisyOperator(op.n_atoms, chitau_abs, {0: op})


def shot_split_conjugated(op, chitau_abs):
    """Split an echo-conjugated operator band-by-band: band k has slope k."""
    parts = {}
    for k, arr in op.bands.items():
        parts[k] = BandedOperator(op.n_atoms, {k: arr}, hermitian=False)
    return ShotNoisyOperator(op.n_atoms, chitau_abs, parts)


def _check_shot_compatible(a, b):
    if a.n_atoms != b.n_atoms:
        raise ValueError(f"mismatched n_atoms: {a.n_atoms} vs {b.n_atoms}")
    if a.chitau_abs != b.chitau_abs:
        raise ValueError("mismatched echo durations in shot-noise product")


def shot_product(a, b):
    from .dicke import band_product

    _check_shot_compatible(a, b)
    parts = {}
    for wa, opa in a.parts.items():
        for wb, opb in b.parts.items():
            w = wa + wb
            prod = band_product(opa, opb)
            if w in parts:
                parts[w] = band_linear_combination([1.0, 1.0], [parts[w], prod])
            else:
                parts[w] = prod
    return ShotNoisyOperator(a.n_atoms, a.chitau_abs, parts)


def shot_combine(coeffs, ops):
    """Linear combination of shot-noise operators, merged part by part."""
    ops = list(ops)
    _ = [_check_shot_compatible(ops[0], o) for o in ops[1:]]
    parts = {}
    for c, op in zip(coeffs, ops):
        for w, banded in op.parts.items():
            scaled = banded.scaled(c)
            if w in parts:
                parts[w] = band_linear_combination([1.0, 1.0], [parts[w], scaled])
            else:
                parts[w] = scaled
    return ShotNoisyOperator(ops[0].n_atoms, ops[0].chitau_abs, parts)


def phase_terms(psi, chit, op):
    """Contraction terms (slope theta, complex coefficient) against psi.

    psi is the noiseless twisted state; every term of <op> for a fixed shot D
    equals coefficient * exp(i D theta) with theta = chit*k + chitau_abs*w.
    Plain BandedOperators are treated as slope-0 echo parts with the state
    bands still contributing chit*k.
    """
    if isinstance(op, BandedOperator):
        op = shot_plain(op, 0.0)
    n = op.n_atoms
    amps = psi.amplitudes
    terms = []
    for w, banded in op.parts.items():
        for k, arr in banded.bands.items():
            lo = max(0, -k)
            hi = n - max(0, k)
            cols = np.arange(lo, hi + 1)
            coeff = complex(np.sum(np.conj(amps[cols + k]) * arr * amps[cols]))
            theta = chit * k + op.chitau_abs * w
            terms.append((theta, coeff))
    return terms


def shot_expectation(psi, chit, dvar, op):
    """Exact Gaussian-averaged expectation over the shared shot rotation D."""
    total = 0.0 + 0.0j
    for theta, coeff in phase_terms(psi, chit, op):
        total += coeff * math.exp(-0.5 * dvar * theta * theta)
    return complex(total)


##############################################################################
# Monte-Carlo oracle
##############################################################################

@dataclass
class McMoments:
    """Sampled strategy moments with per-batch values for error bars."""

    means: np.ndarray
    second: np.ndarray
    vmat: np.ndarray
    means_se: np.ndarray
    second_se: np.ndarray
    vmat_se: np.ndarray
    batch_means: np.ndarray
    batch_second: np.ndarray
    batch_vmat: np.ndarray
    n_samples: int
    seed: int


def ballistic_mc_oracle(n_atoms, chit, chitau, epsilon, gamma, seed,
                        n_samples=100_000, strategy="mai", n_batches=20):
    """Sample the shot rotation D and average the full strategy moments.

    Each sample runs the pure-state pipeline: extra diagonal phases
    chit*D*m during preparation and |chitau|*D*m during the echo (the echo
    reverses the twisting sign, not the noise).  Every requested expectation
    is linear in exp(i D theta) for the term slopes theta of the strategy's
    moment tables, so the sample average of those phase factors reproduces
    the per-sample pipeline exactly.  Deterministic for a given seed;
    batches give standard errors.
    """
    from .moments import strategy_term_tables

    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if n_samples % n_batches != 0:
        raise ValueError("n_samples must be divisible by n_batches")
    tables = strategy_term_tables(n_atoms, chit, strategy, chitau)
    dvar = epsilon * float(n_atoms) ** gamma
    rng = np.random.Generator(np.random.PCG64(seed))
    d = rng.normal(0.0, math.sqrt(dvar) if dvar > 0 else 0.0, n_samples)

    # empirical E[exp(i D theta)] per batch, in fixed batch order
    phase = np.exp(1j * np.outer(d, tables.thetas))
    batch_char = phase.reshape(n_batches, n_samples // n_batches, -1).mean(axis=1)
    char = batch_char.mean(axis=0)

    def combine(weights):
        means = tables.eval_means(weights)
        second = tables.eval_second(weights)
        vmat = tables.eval_vmat(weights)
        return means, second, vmat

    means, second, vmat = combine(char)
    batch_vals = [combine(batch_char[b]) for b in range(n_batches)]
    batch_means = np.array([b[0] for b in batch_vals])
    batch_second = np.array([b[1] for b in batch_vals])
    batch_vmat = np.array([b[2] for b in batch_vals])

    def se(batch):
        return batch.std(axis=0, ddof=1) / math.sqrt(n_batches)

    return McMoments(
        means=means, second=second, vmat=vmat,
        means_se=se(batch_means.real), second_se=se(batch_second.real),
        vmat_se=se(batch_vmat.real),
        batch_means=batch_means, batch_second=batch_second,
        batch_vmat=batch_vmat,
        n_samples=n_samples, seed=seed,
    )
