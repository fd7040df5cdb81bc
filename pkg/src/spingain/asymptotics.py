"""Closed-form large-N gain laws and the unifying time-dependence model.

All prefactors are evaluated from their radical expressions at run time;
decimal constants appear only in tests.  The unifying model

    gain(t) = N^2 (chi t)^2 / (1 + M + B)

collects the measurement penalty M (strategy-dependent power of N (chi t))
and the noise penalty B (ballistic ~ t^2, diffusive ~ t, doubled twisting
path for the echo strategy).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .numerics import golden_section_max

__all__ = [
    "ScalingLaw",
    "scaling_law",
    "predicted_gain",
    "predicted_optimal_gain",
    "ballistic_limit_gain",
    "critical_alpha",
    "unified_gain",
    "optimize_unified",
    "optimal_time_hint",
    "optimal_time",
    "optimal_gain_prefactor",
]


@dataclass(frozen=True)
class ScalingLaw:
    """gain ~ prefactor * N^exponent within a validity window in alpha."""

    strategy: str
    noise_kind: str
    exponent: float
    prefactor: float
    alpha_range: tuple
    source: str

    def __post_init__(self):
        if not 0.0 <= self.exponent <= 1.0:
            raise ValueError(f"exponent out of range: {self.exponent}")
        if self.prefactor <= 0:
            raise ValueError(f"prefactor must be positive: {self.prefactor}")

    def evaluate(self, n_atoms):
        return self.prefactor * float(n_atoms) ** self.exponent


def optimal_time(strategy, n_atoms):
    """Noiseless optimal twisting time for the fixed-basis strategies."""
    n = float(n_atoms)
    strategy = strategy.lower()
    if strategy == "l":
        return 3.0 ** (1.0 / 6.0) * n ** (-2.0 / 3.0)
    if strategy == "nl":
        return ((5.0 / 2.0) * 3.0**3) ** 0.1 * n ** (-3.0 / 5.0)
    if strategy == "q":
        return ((7.0 / 6.0) * 5.0**3) ** (1.0 / 14.0) * n ** (-4.0 / 7.0)
    if strategy == "mai":
        return n**-0.5
    raise ValueError(f"no optimal-time law for strategy {strategy!r}")


def optimal_gain_prefactor(strategy):
    strategy = strategy.lower()
    if strategy == "l":
        return 2.0 * 3.0 ** (-2.0 / 3.0)
    if strategy == "nl":
        return 2.0 * (2.0 / 5.0) ** (4.0 / 5.0) * 3.0 ** (3.0 / 5.0)
    if strategy == "q":
        return (6.0 / 7.0) ** (6.0 / 7.0) * 5.0 ** (3.0 / 7.0)
    if strategy == "mai":
        return 1.0 / math.e
    raise ValueError(f"no optimal-gain law for strategy {strategy!r}")


def scaling_law(strategy, noise_kind="none", alpha=None, sigma=1.0,
                epsilon=0.0, gamma=0.0):
    """Power law in N matching predicted_gain at fixed (alpha, sigma)."""
    strategy = strategy.lower()
    if strategy in ("l", "nl", "q") and noise_kind == "none":
        exponents = {"l": 2.0 / 3.0, "nl": 4.0 / 5.0, "q": 6.0 / 7.0}
        return ScalingLaw(strategy, "none", exponents[strategy],
                          optimal_gain_prefactor(strategy),
                          (0.5, 1.0), f"{strategy}-optimal")
    if strategy in ("mai", "qfi"):
        if alpha is None:
            raise ValueError("mai/qfi scaling laws need alpha")
        _check_alpha_sigma(alpha, sigma)
        if noise_kind == "none":
            if alpha > 0.5:
                return ScalingLaw(strategy, "none", 2.0 - 2.0 * alpha,
                                  sigma**2, (0.5, 1.0), "echo-noiseless")
            pref = (sigma**2 * math.exp(-(sigma**2)) if strategy == "mai"
                    else 0.5 * (1.0 - math.exp(-2.0 * sigma**2)))
            return ScalingLaw(strategy, "none", 1.0, pref, (0.5, 0.5),
                              "echo-heisenberg")
        if noise_kind == "ballistic":
            a_c = critical_alpha(gamma)
            if alpha > a_c:
                return ScalingLaw(strategy, "ballistic", 2.0 - 2.0 * alpha,
                                  sigma**2, (a_c, 1.0), "echo-short-time")
            return ScalingLaw(strategy, "ballistic", 1.0 - gamma,
                              1.0 / (4.0 * epsilon), (0.5, a_c),
                              "echo-noise-plateau")
        if noise_kind == "diffusive":
            if alpha > 0.5:
                return ScalingLaw(strategy, "diffusive", 1.0 - alpha,
                                  sigma / (2.0 * epsilon), (0.5, 1.0),
                                  "echo-diffusive")
            return ScalingLaw(strategy, "diffusive", 0.5,
                              sigma * math.exp(-(sigma**2)) / (2.0 * epsilon),
                              (0.5, 0.5), "echo-diffusive-root")
    raise ValueError(f"no scaling law for ({strategy!r}, {noise_kind!r})")


def _check_alpha_sigma(alpha, sigma):
    if not 0.5 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [1/2, 1], got {alpha}")
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")


def predicted_gain(strategy, noise_kind, n_atoms, alpha, sigma,
                   epsilon=0.0, gamma=0.0):
    """Piecewise closed-form gain at chit = sigma N^-alpha, as printed.

    The alpha = 1/2 branches switch on exact equality of the supplied alpha.
    """
    strategy = strategy.lower()
    _check_alpha_sigma(alpha, sigma)
    n = float(n_atoms)
    s2 = sigma**2
    if strategy in ("mai", "qfi"):
        if noise_kind == "none":
            if alpha == 0.5:
                if strategy == "mai":
                    return s2 * math.exp(-s2) * n
                return 0.5 * (1.0 - math.exp(-2.0 * s2)) * n
            return s2 * n ** (2.0 - 2.0 * alpha)
        if strategy == "qfi":
            raise ValueError("qfi prediction is defined for the pure state only")
        if noise_kind == "ballistic":
            if alpha == 0.5:
                return s2 * math.exp(-s2) * n / (1.0 + 4.0 * epsilon * s2 * n**gamma)
            return (s2 * n ** (2.0 - 2.0 * alpha)
                    / (1.0 + 4.0 * epsilon * s2 * n ** (1.0 + gamma - 2.0 * alpha)))
        if noise_kind == "diffusive":
            if epsilon <= 0:
                raise ValueError("diffusive law needs epsilon > 0")
            if alpha == 0.5:
                return sigma * math.exp(-s2) / (2.0 * epsilon) * math.sqrt(n)
            return sigma / (2.0 * epsilon) * n ** (1.0 - alpha)
        raise ValueError(f"unknown noise kind {noise_kind!r}")
    if strategy in ("l", "nl", "q") and noise_kind == "none":
        return scaling_law(strategy).evaluate(n_atoms)
    raise ValueError(f"no closed form for ({strategy!r}, {noise_kind!r})")


def ballistic_limit_gain(n_atoms, alpha, sigma, epsilon, gamma):
    """Thermodynamic-limit echo gain under ballistic noise (both regimes)."""
    _check_alpha_sigma(alpha, sigma)
    if alpha > critical_alpha(gamma):
        return sigma**2 * float(n_atoms) ** (2.0 - 2.0 * alpha)
    return float(n_atoms) ** (1.0 - gamma) / (4.0 * epsilon)


def predicted_optimal_gain(strategy, noise_kind, n_atoms,
                           epsilon=0.0, gamma=0.0):
    """Gain at the strategy's optimal preparation time (large-N law)."""
    strategy = strategy.lower()
    n = float(n_atoms)
    if noise_kind == "none":
        if strategy in ("l", "nl", "q"):
            return scaling_law(strategy).evaluate(n_atoms)
        if strategy in ("mai", "qfi"):
            # sigma^2 e^-sigma^2 peaks at sigma = 1
            return predicted_gain(strategy, "none", n_atoms, 0.5, 1.0)
    if strategy == "mai" and noise_kind == "ballistic":
        return n ** (1.0 - gamma) / (4.0 * epsilon)
    if strategy == "mai" and noise_kind == "diffusive":
        # sigma e^-sigma^2 peaks at sigma = 1/sqrt(2)
        return predicted_gain("mai", "diffusive", n_atoms, 0.5,
                              1.0 / math.sqrt(2.0), epsilon)
    raise ValueError(f"no optimal-gain law for ({strategy!r}, {noise_kind!r})")


def critical_alpha(gamma):
    """Preparation-time exponent where the ballistic scaling law switches."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must be in [0, 1], got {gamma}")
    return (1.0 + gamma) / 2.0


def unified_gain(n_atoms, chit, strategy, noise_kind="none",
                 epsilon=0.0, gamma=0.0):
    """N^2 (chi t)^2 / (1 + M + B) with the strategy and noise penalties."""
    if chit <= 0:
        raise ValueError(f"chit must be positive, got {chit}")
    strategy = strategy.lower()
    n = float(n_atoms)
    u = chit
    if strategy == "l":
        m_term = n**4 * u**6 / 6.0
    elif strategy == "nl":
        m_term = n**6 * u**10 / 270.0
    elif strategy == "q":
        m_term = n**8 * u**14 / 875.0
    elif strategy in ("mai", "qfi"):
        m_term = 0.0
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    mai_factor = 2.0 if strategy == "mai" else 1.0
    if noise_kind == "none":
        b_term = 0.0
    elif noise_kind == "ballistic":
        b_term = mai_factor**2 * epsilon * n ** (1.0 + gamma) * u**2
    elif noise_kind == "diffusive":
        b_term = mai_factor * epsilon * n * u
    else:
        raise ValueError(f"unknown noise kind {noise_kind!r}")
    return n**2 * u**2 / (1.0 + m_term + b_term)


def optimize_unified(n_atoms, strategy, noise_kind="none",
                     epsilon=0.0, gamma=0.0):
    """Golden-section maximum of the unified gain over log chit."""
    n = float(n_atoms)
    try:
        center = optimal_time(strategy, n_atoms)
    except ValueError:
        center = n**-0.75
    lo = math.log(center / 50.0)
    hi = math.log(min(center * 50.0, 1.0))

    def f(log_t):
        return unified_gain(n_atoms, math.exp(log_t), strategy, noise_kind,
                            epsilon, gamma)

    x, fx, _ = golden_section_max(f, lo, hi, tol=1e-11, max_iter=400)
    return math.exp(x), fx


def optimal_time_hint(strategy, noise_kind, n_atoms, epsilon=0.0, gamma=0.0):
    """Asymptotic optimal-time prediction used to bracket the 1-D search.

    Returns None when no printed law applies (the caller then brackets with
    [1/N, 1/sqrt(N)]).
    """
    strategy = strategy.lower()
    n = float(n_atoms)
    if noise_kind == "none":
        return optimal_time(strategy, n_atoms)
    if strategy == "mai" and noise_kind == "ballistic":
        if epsilon > 0:
            return (2.0 * epsilon) ** -0.25 * n ** (-0.5 - gamma / 4.0)
        return optimal_time(strategy, n_atoms)
    if strategy == "mai" and noise_kind == "diffusive":
        return n**-0.5 / math.sqrt(2.0)
    return None
