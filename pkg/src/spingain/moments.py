"""Gram (covariance) matrices and commutator vectors for observable bases.

For a basis {X_i} and rotation generator S_n the estimation error at the
zero-phase working point is governed by

    Gamma_ij = <{X_i, X_j}>/2 - <X_i><X_j>      (covariance)
    v_i      = -i <[X_i, S_n]>                  (signal slope)

Both are assembled from banded contractions, so the cost is O(N) per entry.
The commutator vector is linear in the axis, v = V n with V_ia the slope
against the three generators; axis optimization therefore never recomputes
moments.  A dense (N+1)x(N+1) brute-force engine mirrors every path for
oracle comparisons at small N.
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
    band_product,
    expectation,
    m_values,
    spin_operators,
)
from .channels import (
    PreparationSpec,
    decay_bands,
    no_noise,
    oat_state,
    phase_terms,
    prepare_noisy,
    shot_combine,
    shot_plain,
    shot_product,
    shot_split_conjugated,
    twist_conjugate,
)

__all__ = [
    "ObservableBasis",
    "GramData",
    "MomentData",
    "build_basis",
    "gram_data",
    "strategy_moment_data",
    "strategy_term_tables",
    "TermTables",
    "dense_oracle",
    "dense_strategy_moment_data",
    "DENSE_LIMIT",
]

DENSE_LIMIT = 64
STRATEGIES = ("l", "nl", "q", "mai")

# stored coherence bands needed per basis: widest pair product + margin 0
_BASIS_BAND = {"l": 2, "nl": 4, "q": 4, "mai": 2}

_IMAG_TOL = 1e-9


@dataclass(frozen=True)
class ObservableBasis:
    """Labelled list of Hermitian measurement observables."""

    label: str
    ops: tuple


@dataclass(frozen=True)
class GramData:
    """Covariance matrix and signal vector for one rotation axis."""

    gamma: np.ndarray
    v: np.ndarray
    axis: np.ndarray
    means: np.ndarray


@dataclass(frozen=True)
class MomentData:
    """Axis-independent moments: means, covariance, and slopes V_ia."""

    means: np.ndarray
    gamma: np.ndarray
    vmat: np.ndarray
    label: str = ""

    def v_for_axis(self, axis):
        return self.vmat @ np.asarray(axis, dtype=float)


def _pair_ops_plain(ops):
    out = {}
    for i in range(len(ops)):
        for j in range(i, len(ops)):
            out[(i, j)] = band_anticommutator(ops[i], ops[j]).scaled(0.5)
    return out


def build_basis(label, n_atoms, chitau=None):
    """L, NL, Q, or (noiseless) MAI observable basis."""
    label = label.lower()
    s_x, s_y, s_z = spin_operators(n_atoms)
    if label == "l":
        return ObservableBasis("l", (s_x, s_y, s_z))
    if label == "nl":
        xz = band_anticommutator(s_x, s_z).scaled(0.5)
        return ObservableBasis("nl", (s_y, s_z, xz))
    if label == "q":
        singles = (s_x, s_y, s_z)
        pairs = _pair_ops_plain(singles)
        return ObservableBasis(
            "q",
            singles
            + (pairs[(0, 0)], pairs[(1, 1)], pairs[(2, 2)],
               pairs[(0, 1)], pairs[(0, 2)], pairs[(1, 2)]),
        )
    if label == "mai":
        if chitau is None:
            raise ValueError("mai basis needs the echo time chitau")
        return ObservableBasis(
            "mai", tuple(twist_conjugate(s, chitau) for s in (s_x, s_y, s_z))
        )
    raise ValueError(f"unknown basis label {label!r}")


def _real_checked(value, scale, what):
    if abs(value.imag) > _IMAG_TOL * max(abs(value.real), scale, 1.0):
        raise RuntimeError(f"{what} has spurious imaginary part {value.imag!r}")
    return value.real


def basis_moment_data(state, ops, label=""):
    """Means, covariance, and generator slopes for plain Hermitian observables.

    Uses <X_j X_i> = conj(<X_i X_j>) so one banded product per pair suffices;
    v entries come from 2 Im <X_i S_a> = -i <[X_i, S_a]>.
    """
    ops = list(ops)
    n_ops = len(ops)
    n_atoms = ops[0].n_atoms
    gens = spin_operators(n_atoms)
    scale = float(n_atoms) ** 2

    means = np.zeros(n_ops)
    for i, op in enumerate(ops):
        means[i] = _real_checked(expectation(state, op), scale, f"<X_{i}>")

    gamma = np.zeros((n_ops, n_ops))
    for i in range(n_ops):
        for j in range(i, n_ops):
            z = expectation(state, band_product(ops[i], ops[j]))
            sym = z.real  # <{Xi,Xj}>/2
            gamma[i, j] = gamma[j, i] = sym - means[i] * means[j]

    vmat = np.zeros((n_ops, 3))
    for i in range(n_ops):
        for a, gen in enumerate(gens):
            z = expectation(state, band_product(ops[i], gen))
            vmat[i, a] = 2.0 * z.imag
    return MomentData(means, gamma, vmat, label)


def gram_data(state, basis, axis):
    """Covariance and signal vector of a basis for one unit rotation axis."""
    axis = np.asarray(axis, dtype=float)
    if abs(np.linalg.norm(axis) - 1.0) > 1e-12:
        raise ValueError(f"axis must be a unit vector, |n| = {np.linalg.norm(axis)!r}")
    data = basis_moment_data(state, basis.ops, basis.label)
    _check_psd(data.gamma)
    return GramData(data.gamma, data.v_for_axis(axis), axis, data.means)


def _check_psd(gamma):
    evals = np.linalg.eigvalsh(gamma)
    tr = float(np.trace(gamma))
    if evals[0] < -1e-10 * max(tr, 1.0):
        raise RuntimeError(f"covariance not positive semidefinite: {evals[0]!r}")


##############################################################################
# strategy dispatch
##############################################################################

def _mai_channel_moment_data(spec, chitau, s_echo):
    """Echo strategy with a band-multiplier noise channel (or none).

    The adjoint channel acts once on each measured polynomial, so the pair
    observables are the channel image of {S_i, S_j}/2, not products of the
    dressed singles.
    """
    n = spec.n_atoms
    gens = spin_operators(n)
    pure = spec.noise.kind == "none" and s_echo == 0.0
    if pure:
        state = oat_state(n, spec.chit)
    else:
        state = prepare_noisy(spec, max_band=_BASIS_BAND["mai"])

    dressed = [decay_bands(twist_conjugate(g, chitau), s_echo) for g in gens]
    scale = float(n) ** 2

    means = np.zeros(3)
    for i, op in enumerate(dressed):
        means[i] = _real_checked(expectation(state, op), scale, f"<X_{i}>")

    gamma = np.zeros((3, 3))
    for i in range(3):
        for j in range(i, 3):
            pair = band_anticommutator(gens[i], gens[j]).scaled(0.5)
            pair = decay_bands(twist_conjugate(pair, chitau), s_echo)
            sym = _real_checked(expectation(state, pair), scale, "pair moment")
            gamma[i, j] = gamma[j, i] = sym - means[i] * means[j]

    vmat = np.zeros((3, 3))
    for i in range(3):
        for a in range(3):
            z = expectation(state, band_product(dressed[i], gens[a]))
            vmat[i, a] = 2.0 * z.imag
    return MomentData(means, gamma, vmat, "mai")


def _mai_shot_moment_data(spec, chitau):
    """Echo strategy under a shared shot rotation, averaged term by term."""
    n = spec.n_atoms
    psi = oat_state(n, spec.chit)
    dvar = spec.noise.epsilon * float(n) ** spec.noise.gamma
    tau_abs = abs(chitau)
    gens = spin_operators(n)
    tagged = [shot_split_conjugated(twist_conjugate(g, chitau), tau_abs)
              for g in gens]
    plain = [shot_plain(g, tau_abs) for g in gens]

    def avg(op):
        total = 0.0 + 0.0j
        for theta, coeff in phase_terms(psi, spec.chit, op):
            total += coeff * math.exp(-0.5 * dvar * theta * theta)
        return total

    scale = float(n) ** 2
    means = np.zeros(3)
    for i, op in enumerate(tagged):
        means[i] = _real_checked(avg(op), scale, f"<X_{i}>")

    gamma = np.zeros((3, 3))
    for i in range(3):
        for j in range(i, 3):
            pair = band_anticommutator(gens[i], gens[j]).scaled(0.5)
            pair_tagged = shot_split_conjugated(twist_conjugate(pair, chitau), tau_abs)
            sym = _real_checked(avg(pair_tagged), scale, "pair moment")
            gamma[i, j] = gamma[j, i] = sym - means[i] * means[j]

    vmat = np.zeros((3, 3))
    for i in range(3):
        for a in range(3):
            comm = shot_combine(
                [-1j, 1j],
                [shot_product(tagged[i], plain[a]),
                 shot_product(plain[a], tagged[i])],
            )
            vmat[i, a] = _real_checked(avg(comm), scale, "commutator slope")
    return MomentData(means, gamma, vmat, "mai")


def strategy_moment_data(spec, strategy, chitau=None, same_shot=True):
    """Moment data for a measurement strategy on a prepared (noisy) state."""
    strategy = strategy.lower()
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; pick from {STRATEGIES}")
    n = spec.n_atoms

    if strategy != "mai":
        basis = build_basis(strategy, n)
        if spec.noise.kind == "none":
            state = oat_state(n, spec.chit)
        else:
            state = prepare_noisy(spec, max_band=_BASIS_BAND[strategy])
        return basis_moment_data(state, basis.ops, strategy)

    if chitau is None:
        chitau = -spec.chit
    kind = spec.noise.kind
    if kind == "none":
        return _mai_channel_moment_data(spec, chitau, 0.0)
    if kind == "diffusive":
        return _mai_channel_moment_data(
            spec, chitau, spec.noise.epsilon * abs(chitau)
        )
    if kind == "ballistic":
        if same_shot:
            return _mai_shot_moment_data(spec, chitau)
        s_echo = spec.noise.epsilon * float(n) ** spec.noise.gamma * chitau**2
        return _mai_channel_moment_data(spec, chitau, s_echo)
    raise ValueError(f"unsupported noise kind {kind!r}")


##############################################################################
# term tables (shared by the analytic shot average and the MC oracle)
##############################################################################

@dataclass
class TermTables:
    """Per-moment contraction terms keyed by their D-phase slope theta.

    Every strategy moment for a fixed shot rotation D is
    sum_t coeff_t exp(i D theta_t); evaluating with weights
    exp(-var(D) theta^2 / 2) gives the exact Gaussian average while the
    empirical characteristic function of sampled D gives the MC estimate.
    """

    n_ops: int
    thetas: np.ndarray
    mean_tables: list
    second_tables: dict
    vmat_tables: dict

    def _eval(self, table, weights):
        idx, coeff = table
        return complex(np.sum(coeff * weights[idx]))

    def eval_means(self, weights):
        return np.array([self._eval(t, weights).real for t in self.mean_tables])

    def eval_second(self, weights):
        out = np.zeros((self.n_ops, self.n_ops))
        for (i, j), table in self.second_tables.items():
            val = self._eval(table, weights).real
            out[i, j] = out[j, i] = val
        return out

    def eval_vmat(self, weights):
        out = np.zeros((self.n_ops, 3))
        for (i, a), table in self.vmat_tables.items():
            out[i, a] = self._eval(table, weights).real
        return out

    def moment_data(self, dvar):
        """Exact Gaussian average of all tables at shot variance dvar."""
        weights = np.exp(-0.5 * dvar * self.thetas**2)
        means = self.eval_means(weights)
        second = self.eval_second(weights)
        vmat = self.eval_vmat(weights)
        return MomentData(means, second - np.outer(means, means), vmat)


def strategy_term_tables(n_atoms, chit, strategy, chitau=None):
    """Slope-resolved contraction tables for all moments of a strategy."""
    strategy = strategy.lower()
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    psi = oat_state(n_atoms, chit)
    gens = spin_operators(n_atoms)

    if strategy == "mai":
        if chitau is None:
            chitau = -chit
        tau_abs = abs(chitau)
        ops = [shot_split_conjugated(twist_conjugate(g, chitau), tau_abs)
               for g in gens]
        gen_tagged = [shot_plain(g, tau_abs) for g in gens]

        def pair_op(i, j):
            pair = band_anticommutator(gens[i], gens[j]).scaled(0.5)
            return shot_split_conjugated(twist_conjugate(pair, chitau), tau_abs)

    else:
        basis = build_basis(strategy, n_atoms)
        ops = [shot_plain(op, 0.0) for op in basis.ops]
        gen_tagged = [shot_plain(g, 0.0) for g in gens]
        plain_pairs = _pair_ops_plain(list(basis.ops))

        def pair_op(i, j):
            return shot_plain(plain_pairs[(i, j)], 0.0)

    theta_index = {}
    thetas = []

    def table(op):
        idx = []
        coeff = []
        for theta, c in phase_terms(psi, chit, op):
            if theta not in theta_index:
                theta_index[theta] = len(thetas)
                thetas.append(theta)
            idx.append(theta_index[theta])
            coeff.append(c)
        return np.asarray(idx, dtype=int), np.asarray(coeff, dtype=complex)

    mean_tables = [table(op) for op in ops]
    second_tables = {}
    for i in range(len(ops)):
        for j in range(i, len(ops)):
            second_tables[(i, j)] = table(pair_op(i, j))
    vmat_tables = {}
    for i, op in enumerate(ops):
        for a, gen in enumerate(gen_tagged):
            comm = shot_combine(
                [-1j, 1j], [shot_product(op, gen), shot_product(gen, op)]
            )
            vmat_tables[(i, a)] = table(comm)

    return TermTables(
        n_ops=len(ops),
        thetas=np.asarray(thetas, dtype=float),
        mean_tables=mean_tables,
        second_tables=second_tables,
        vmat_tables=vmat_tables,
    )


##############################################################################
# dense brute-force engine (oracle, N <= 64)
##############################################################################

def _dense_guard(n_atoms):
    if n_atoms > DENSE_LIMIT:
        raise ValueError(f"dense oracle refused for N = {n_atoms} > {DENSE_LIMIT}")


def _dense_spins(n_atoms):
    m = m_values(n_atoms)
    j = n_atoms / 2.0
    a = np.sqrt((j - m[:-1]) * (j + m[:-1] + 1.0))
    sp = np.zeros((n_atoms + 1, n_atoms + 1), dtype=complex)
    sp[np.arange(1, n_atoms + 1), np.arange(n_atoms)] = a
    s_x = (sp + sp.conj().T) / 2.0
    s_y = (sp - sp.conj().T) / 2.0j
    s_z = np.diag(m.astype(complex))
    return s_x, s_y, s_z


def _dense_coherent(n_atoms):
    c = np.array(
        [math.comb(n_atoms, i) for i in range(n_atoms + 1)], dtype=float
    )
    return np.sqrt(c / 2.0**n_atoms).astype(complex)


def _dense_twisted(n_atoms, chit):
    m = m_values(n_atoms)
    return _dense_coherent(n_atoms) * np.exp(-1j * chit * m**2)


def _dense_kernel_mask(n_atoms, s):
    m = m_values(n_atoms)
    diff = m[:, None] - m[None, :]
    return np.exp(-0.5 * s * diff**2)


def _dense_basis(label, n_atoms):
    s_x, s_y, s_z = _dense_spins(n_atoms)
    acom = lambda a, b: (a @ b + b @ a) / 2.0
    if label == "l":
        return [s_x, s_y, s_z]
    if label == "nl":
        return [s_y, s_z, acom(s_x, s_z)]
    if label == "q":
        return [s_x, s_y, s_z, acom(s_x, s_x), acom(s_y, s_y), acom(s_z, s_z),
                acom(s_x, s_y), acom(s_x, s_z), acom(s_y, s_z)]
    raise ValueError(label)


def dense_oracle(spec, op):
    """Tr[A rho] by full dense construction; refuses N beyond the oracle limit."""
    _dense_guard(spec.n_atoms)
    psi = _dense_twisted(spec.n_atoms, spec.chit)
    rho = np.outer(psi, psi.conj()) * _dense_kernel_mask(spec.n_atoms, spec.noise.s)
    a = op.dense() if isinstance(op, BandedOperator) else np.asarray(op)
    return complex(np.trace(a @ rho))


def _dense_moments_from(rho, ops, gens):
    n_ops = len(ops)
    means = np.array([np.trace(op @ rho).real for op in ops])
    gamma = np.zeros((n_ops, n_ops))
    second = np.zeros((n_ops, n_ops))
    for i in range(n_ops):
        for j in range(i, n_ops):
            sym = np.trace((ops[i] @ ops[j] + ops[j] @ ops[i]) @ rho).real / 2.0
            second[i, j] = second[j, i] = sym
            gamma[i, j] = gamma[j, i] = sym - means[i] * means[j]
    vmat = np.zeros((n_ops, 3))
    for i in range(n_ops):
        for a in range(3):
            comm = ops[i] @ gens[a] - gens[a] @ ops[i]
            vmat[i, a] = (-1j * np.trace(comm @ rho)).real
    return means, second, gamma, vmat


def dense_strategy_moment_data(spec, strategy, chitau=None, same_shot=True,
                               gh_nodes=80):
    """Dense mirror of strategy_moment_data for oracle comparisons.

    The shared-shot ballistic echo is averaged by Gauss-Hermite quadrature
    over the random rotation, which is exact to machine precision for the
    small phase slopes arising at oracle sizes.
    """
    _dense_guard(spec.n_atoms)
    strategy = strategy.lower()
    n = spec.n_atoms
    gens = _dense_spins(n)
    m = m_values(n)

    if strategy != "mai":
        psi = _dense_twisted(n, spec.chit)
        rho = np.outer(psi, psi.conj()) * _dense_kernel_mask(n, spec.noise.s)
        ops = _dense_basis(strategy, n)
        means, _, gamma, vmat = _dense_moments_from(rho, ops, gens)
        return MomentData(means, gamma, vmat, strategy)

    if chitau is None:
        chitau = -spec.chit

    if spec.noise.kind == "ballistic" and same_shot:
        dvar = spec.noise.epsilon * float(n) ** spec.noise.gamma
        nodes, weights = np.polynomial.hermite.hermgauss(gh_nodes)
        weights = weights / math.sqrt(math.pi)
        d_values = math.sqrt(2.0 * dvar) * nodes if dvar > 0 else np.zeros_like(nodes)
        c0 = _dense_coherent(n)
        acc_means = np.zeros(3)
        acc_second = np.zeros((3, 3))
        acc_vmat = np.zeros((3, 3))
        for d, w in zip(d_values, weights):
            psi_d = c0 * np.exp(-1j * spec.chit * (m**2 + d * m))
            rho_d = np.outer(psi_d, psi_d.conj())
            u_echo = np.exp(-1j * (chitau * m**2 + abs(chitau) * d * m))
            ops_d = [np.conj(u_echo)[:, None] * g * u_echo[None, :] for g in gens]
            means, second, _, vmat = _dense_moments_from(rho_d, ops_d, gens)
            acc_means += w * means
            acc_second += w * second
            acc_vmat += w * vmat
        gamma = acc_second - np.outer(acc_means, acc_means)
        return MomentData(acc_means, gamma, acc_vmat, "mai")

    # none / diffusive / independent-shot ballistic: band-multiplier channel
    if spec.noise.kind == "none":
        s_echo = 0.0
    elif spec.noise.kind == "diffusive":
        s_echo = spec.noise.epsilon * abs(chitau)
    else:
        s_echo = spec.noise.epsilon * float(n) ** spec.noise.gamma * chitau**2
    psi = _dense_twisted(n, spec.chit)
    rho = np.outer(psi, psi.conj()) * _dense_kernel_mask(n, spec.noise.s)
    u = np.exp(-1j * chitau * m**2)
    mask = _dense_kernel_mask(n, s_echo)
    conj = lambda a: mask * (np.conj(u)[:, None] * a * u[None, :])
    singles = [conj(g) for g in gens]
    means = np.array([np.trace(op @ rho).real for op in singles])
    gamma = np.zeros((3, 3))
    for i in range(3):
        for j in range(i, 3):
            pair = conj((gens[i] @ gens[j] + gens[j] @ gens[i]) / 2.0)
            sym = np.trace(pair @ rho).real
            gamma[i, j] = gamma[j, i] = sym - means[i] * means[j]
    vmat = np.zeros((3, 3))
    for i in range(3):
        for a in range(3):
            comm = singles[i] @ gens[a] - gens[a] @ singles[i]
            vmat[i, a] = (-1j * np.trace(comm @ rho)).real
    return MomentData(means, gamma, vmat, "mai")
