"""Atom-number and preparation-time sweeps, power-law fits, figure datasets."""

from __future__ import annotations

import math
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import asymptotics
from .channels import PreparationSpec
from .gain import optimize_time, qfi_pure, strategy_gain
from .channels import oat_state

__all__ = [
    "SweepRecord",
    "ScalingFit",
    "sweep_n",
    "sweep_alpha",
    "fit_exponent",
    "figure_data",
    "fig2_normalizations",
    "fig2_crossover_width",
]


@dataclass(frozen=True)
class SweepRecord:
    """One sweep point; nan marks fields that do not apply."""

    n_atoms: int
    strategy: str
    noise_kind: str
    epsilon: float
    gamma: float
    alpha: float
    sigma: float
    chit: float
    chitau: float
    xi_inv_sq: float
    xi_inv_sq_pred: float
    fq_over_n: float
    seconds: float


@dataclass(frozen=True)
class ScalingFit:
    """Least-squares exponent of log gain vs log N."""

    exponent: float
    stderr: float
    log_prefactor: float
    residual_rms: float
    n_range: tuple
    n_points: int

    def __post_init__(self):
        if self.stderr < 0:
            raise ValueError("standard error must be >= 0")


def _predicted_for(strategy, noise_kind, n_atoms, alpha, sigma, epsilon, gamma):
    try:
        if alpha is None:
            return asymptotics.predicted_optimal_gain(
                strategy, noise_kind, n_atoms, epsilon, gamma
            )
        return asymptotics.predicted_gain(
            strategy, noise_kind, n_atoms, alpha, sigma, epsilon, gamma
        )
    except ValueError:
        return math.nan


def _one_point(n_atoms, strategy, noise_kind, epsilon, gamma, time_policy,
               alpha, sigma, engine):
    start = time.perf_counter()
    if time_policy == "optimize":
        result = optimize_time(n_atoms, strategy, noise_kind, epsilon, gamma,
                               engine=engine)
        rec_alpha, rec_sigma = math.nan, math.nan
    elif time_policy == "fixed":
        spec = PreparationSpec.build(n_atoms, alpha=alpha, sigma=sigma,
                                     noise_kind=noise_kind, epsilon=epsilon,
                                     gamma=gamma)
        result = strategy_gain(spec, strategy, engine=engine)
        rec_alpha, rec_sigma = alpha, sigma
    else:
        raise ValueError(f"unknown time policy {time_policy!r}")
    fq = math.nan
    if noise_kind == "none":
        fq = qfi_pure(oat_state(n_atoms, result.chit)) / n_atoms
    pred = _predicted_for(strategy, noise_kind, n_atoms,
                          rec_alpha if time_policy == "fixed" else None,
                          rec_sigma, epsilon, gamma)
    chitau = result.chitau if result.chitau is not None else math.nan
    return SweepRecord(
        n_atoms=n_atoms, strategy=strategy, noise_kind=noise_kind,
        epsilon=epsilon, gamma=gamma, alpha=rec_alpha, sigma=rec_sigma,
        chit=result.chit, chitau=chitau, xi_inv_sq=result.xi_inv_sq,
        xi_inv_sq_pred=pred, fq_over_n=fq,
        seconds=time.perf_counter() - start,
    )


def _failed_record(n_atoms, strategy, noise_kind, epsilon, gamma, alpha, sigma):
    return SweepRecord(
        n_atoms=n_atoms, strategy=strategy, noise_kind=noise_kind,
        epsilon=epsilon, gamma=gamma,
        alpha=math.nan if alpha is None else alpha,
        sigma=math.nan if sigma is None else sigma,
        chit=math.nan, chitau=math.nan, xi_inv_sq=math.nan,
        xi_inv_sq_pred=math.nan, fq_over_n=math.nan, seconds=math.nan,
    )


def sweep_n(strategy, noise_kind, n_list, time_policy="optimize", alpha=None,
            sigma=1.0, epsilon=0.0, gamma=0.0, threads=1, engine="banded"):
    """One gain record per atom number; failures warn and leave nan rows."""
    n_list = [int(n) for n in n_list]
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list must be strictly increasing")
    strategy = strategy.lower()

    def job(n_atoms):
        try:
            return _one_point(n_atoms, strategy, noise_kind, epsilon, gamma,
                              time_policy, alpha, sigma, engine)
        except Exception as exc:  # keep sweeping, report the hole
            warnings.warn(f"sweep point N={n_atoms} failed: {exc}")
            return _failed_record(n_atoms, strategy, noise_kind, epsilon,
                                  gamma, alpha, sigma)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(job, n_list))
    else:
        records = [job(n) for n in n_list]
    return sorted(records, key=lambda r: r.n_atoms)


def sweep_alpha(strategy, noise_kind, n_atoms, alpha_grid, sigma=1.0,
                epsilon=0.0, gamma=0.0, threads=1, engine="banded"):
    """Fixed N, sweep the preparation-time exponent alpha."""
    strategy = strategy.lower()

    def job(alpha):
        try:
            return _one_point(n_atoms, strategy, noise_kind, epsilon, gamma,
                              "fixed", float(alpha), sigma, engine)
        except Exception as exc:
            warnings.warn(f"sweep point alpha={alpha} failed: {exc}")
            return _failed_record(n_atoms, strategy, noise_kind, epsilon,
                                  gamma, float(alpha), sigma)

    grid = [float(a) for a in alpha_grid]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(job, grid))
    else:
        records = [job(a) for a in grid]
    return sorted(records, key=lambda r: r.alpha)


def fit_exponent(records, full_range=False):
    """Unweighted least squares of log gain vs log N.

    By default only the top half of the N range enters, which suppresses
    finite-size bias; pass full_range=True to fit everything.  Rows with
    non-positive or non-finite gain are excluded with a warning.
    """
    usable = []
    for rec in records:
        if not math.isfinite(rec.xi_inv_sq) or rec.xi_inv_sq <= 0:
            warnings.warn(f"excluding N={rec.n_atoms}: gain {rec.xi_inv_sq!r}")
            continue
        usable.append(rec)
    usable.sort(key=lambda r: r.n_atoms)
    if not full_range:
        keep = (len(usable) + 1) // 2
        usable = usable[len(usable) - keep:]
    if len(usable) < 4:
        raise ValueError(f"exponent fit needs >= 4 points, have {len(usable)}")

    x = np.log([r.n_atoms for r in usable])
    y = np.log([r.xi_inv_sq for r in usable])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    dof = len(usable) - 2
    var = float(resid @ resid) / dof
    stderr = math.sqrt(var / float(np.sum((x - x.mean()) ** 2)))
    return ScalingFit(
        exponent=float(slope), stderr=stderr, log_prefactor=float(intercept),
        residual_rms=math.sqrt(float(resid @ resid) / len(usable)),
        n_range=(usable[0].n_atoms, usable[-1].n_atoms),
        n_points=len(usable),
    )


##############################################################################
# figure datasets
##############################################################################

_FIG_N_DEFAULT = tuple(2**k for k in range(7, 15))
_FIG2_N_DEFAULT = (100, 1000, 10_000, 100_000)
_FIG1B_GAMMAS = (0.0, 1.0 / 3.0, 0.65, 1.0)


def figure_data(which, n_list=None, alpha_grid=None, epsilon=0.05,
                gamma=0.65, sigma=1.0, threads=1):
    """Datasets behind the three summary figures.

    fig1a: noiseless gains vs N for every strategy plus SQL/HL reference rows.
    fig1b: echo-strategy gains vs N under ballistic noise for several gamma.
    fig2:  echo gains vs alpha at sigma=1 under ballistic noise for four
           decades of N (the normalized forms are derived, not stored).
    """
    which = which.lower()
    if which == "fig1a":
        n_list = list(n_list or _FIG_N_DEFAULT)
        records = []
        for strategy in ("l", "nl", "q"):
            records.extend(sweep_n(strategy, "none", n_list,
                                   time_policy="optimize", threads=threads))
        records.extend(sweep_n("mai", "none", n_list, time_policy="fixed",
                               alpha=0.5, sigma=1.0, threads=threads))
        for n_atoms in n_list:
            records.append(_reference_record(n_atoms, "sql", 1.0))
            records.append(_reference_record(n_atoms, "hl", float(n_atoms)))
        return records
    if which == "fig1b":
        n_list = list(n_list or _FIG_N_DEFAULT)
        records = []
        for gam in _FIG1B_GAMMAS:
            records.extend(sweep_n("mai", "ballistic", n_list,
                                   time_policy="optimize", epsilon=epsilon,
                                   gamma=gam, threads=threads))
        return records
    if which == "fig2":
        if alpha_grid is None:
            alpha_grid = np.round(np.arange(0.50, 1.0001, 0.02), 10)
        records = []
        for n_atoms in (n_list or _FIG2_N_DEFAULT):
            records.extend(sweep_alpha("mai", "ballistic", int(n_atoms),
                                       alpha_grid, sigma=sigma,
                                       epsilon=epsilon, gamma=gamma,
                                       threads=threads))
        return records
    raise ValueError(f"unknown figure tag {which!r}")


def _reference_record(n_atoms, label, value):
    return SweepRecord(
        n_atoms=n_atoms, strategy=label, noise_kind="none", epsilon=0.0,
        gamma=0.0, alpha=math.nan, sigma=math.nan, chit=math.nan,
        chitau=math.nan, xi_inv_sq=value, xi_inv_sq_pred=value,
        fq_over_n=math.nan, seconds=0.0,
    )


def fig2_normalizations(records, n_atoms, epsilon, gamma):
    """(alpha, gain/plateau, gain/N^(2-2alpha)) rows for one N, sorted."""
    rows = []
    plateau = float(n_atoms) ** (1.0 - gamma) / (4.0 * epsilon)
    for rec in records:
        if rec.n_atoms != n_atoms or not math.isfinite(rec.xi_inv_sq):
            continue
        short = rec.sigma**2 * float(n_atoms) ** (2.0 - 2.0 * rec.alpha)
        rows.append((rec.alpha, rec.xi_inv_sq / plateau, rec.xi_inv_sq / short))
    return sorted(rows)


def fig2_crossover_width(records, n_atoms, epsilon, gamma,
                         lo_level=0.25, hi_level=0.75):
    """Width in alpha of the region where the plateau normalization sits
    between the two levels, measured by linear interpolation along the curve."""
    rows = fig2_normalizations(records, n_atoms, epsilon, gamma)
    alphas = np.array([r[0] for r in rows])
    ratio = np.array([r[1] for r in rows])
    inside = 0.0
    for i in range(len(alphas) - 1):
        a0, a1 = alphas[i], alphas[i + 1]
        r0, r1 = ratio[i], ratio[i + 1]
        seg = a1 - a0
        lo_cut, hi_cut = sorted((r0, r1))
        # overlap of [lo_cut, hi_cut] with [lo_level, hi_level] along alpha
        if hi_cut <= lo_level or lo_cut >= hi_level:
            continue
        if abs(r1 - r0) < 1e-15:
            inside += seg if lo_level <= r0 <= hi_level else 0.0
            continue
        t0 = (lo_level - r0) / (r1 - r0)
        t1 = (hi_level - r0) / (r1 - r0)
        t_lo, t_hi = sorted((t0, t1))
        inside += seg * max(0.0, min(1.0, t_hi) - max(0.0, t_lo))
    return float(inside)
