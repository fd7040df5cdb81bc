"""Small deterministic numerical helpers shared across modules."""

from __future__ import annotations

import math

import numpy as np

__all__ = ["golden_section_max", "pinv_psd"]

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_max(f, lo, hi, tol=1e-8, max_iter=200):
    """Maximize a unimodal f on [lo, hi]; returns (x, f(x), evaluations).

    Classic golden-section bracketing, reusing one evaluation per step; the
    returned x is the midpoint of the final bracket, so its uncertainty is
    half the final interval width.
    """
    if hi <= lo:
        raise ValueError(f"empty bracket [{lo}, {hi}]")
    x1 = hi - _INV_PHI * (hi - lo)
    x2 = lo + _INV_PHI * (hi - lo)
    f1 = f(x1)
    f2 = f(x2)
    evals = 2
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        if f1 >= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _INV_PHI * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _INV_PHI * (hi - lo)
            f2 = f(x2)
        evals += 1
    x = 0.5 * (lo + hi)
    return x, f(x), evals + 1


def pinv_psd(matrix, cutoff=1e-12):
    """Pseudo-inverse of a symmetric PSD matrix with a relative eigenvalue cutoff.

    Eigenvalues below cutoff * max(eigenvalues) are treated as exact zeros.
    Returns (pinv, condition, rank); condition is max/min over kept modes.
    """
    matrix = np.asarray(matrix, dtype=float)
    evals, evecs = np.linalg.eigh(matrix)
    lam_max = float(evals.max(initial=0.0))
    keep = evals > cutoff * max(lam_max, 0.0)
    if not np.any(keep):
        return np.zeros_like(matrix), math.inf, 0
    vk = evecs[:, keep]
    inv = (vk / evals[keep]) @ vk.T
    condition = float(lam_max / evals[keep].min())
    return inv, condition, int(np.count_nonzero(keep))
