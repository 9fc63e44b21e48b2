"""Two-point-measurement work statistics for a dephasing quench.

Switching on ``H_I = sum_n |n><n| ⊗ B_n`` at ``t = 0`` from the Gibbs state of
``H0 = H_S + H_B`` gives a work distribution that is a mixture over system
levels, ``p(w) = sum_n p^S_n p_n(w)``. Each ``p_n`` is the work distribution of
the environment-only quench ``H_B -> H_B + B_n`` and needs only a
``dim_B``-sized diagonalization.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .models import DephasingModel
from .operators import (
    cluster_values,
    commutator,
    eig_hermitian,
    is_diagonal,
    max_abs,
)
from .thermo import (
    boltzmann_weights,
    check_beta,
    free_energy,
    initial_state,
    spectral_free_energy,
    system_populations,
)

COALESCE_RTOL = 1e-9
# squared overlaps below this are eigensolver round-off, not transitions
TRANSITION_FLOOR = 1e-24
NORM_TOL = 1e-10
BOUND_TOL = 1e-9


class InvariantViolation(RuntimeError):
    """An exact identity failed beyond tolerance; this indicates a bug."""


class PreconditionError(ValueError):
    pass


def coalesce_tolerance(scale: float) -> float:
    return COALESCE_RTOL * max(1.0, scale)


@dataclass(frozen=True)
class WorkDistribution:
    """Discrete work distribution: ascending atom positions and their weights."""

    values: np.ndarray
    probs: np.ndarray

    @classmethod
    def from_atoms(cls, values, probs, tol: float = COALESCE_RTOL) -> "WorkDistribution":
        """Build a distribution, clipping tiny negatives and merging atoms closer than ``tol``.

        Merged atoms sit at the probability-weighted mean of their members.
        """
        values = np.asarray(values, dtype=float).ravel()
        probs = np.asarray(probs, dtype=float).ravel()
        if np.any(probs < -1e-14):
            raise InvariantViolation(f"negative atom weight {probs.min():.3e}")
        probs = np.clip(probs, 0.0, None)
        keep = probs > 0
        values, probs = values[keep], probs[keep]
        out_w, out_p = [], []
        for idx in cluster_values(values, tol):
            p = probs[idx].sum()
            out_w.append(float(np.dot(values[idx], probs[idx]) / p))
            out_p.append(p)
        w = np.array(out_w)
        p = np.array(out_p)
        w.setflags(write=False)
        p.setflags(write=False)
        return cls(w, p)

    def __len__(self):
        return self.values.size

    @property
    def total(self) -> float:
        return float(self.probs.sum())

    def moment(self, k: int) -> float:
        return float(np.dot(self.probs, self.values ** k))

    @property
    def mean(self) -> float:
        return self.moment(1)

    def moments(self, max_order: int) -> np.ndarray:
        return moments(self, max_order)

    def log_exp_average(self, beta: float) -> float:
        """``ln <exp(-beta w)>`` evaluated without overflow."""
        return float(logsumexp(-beta * self.values, b=self.probs))

    def exp_average(self, beta: float) -> float:
        return float(np.exp(self.log_exp_average(beta)))

    def histogram(self, width: float) -> tuple[np.ndarray, np.ndarray]:
        """Bin atoms into bins of ``width`` aligned at 0; returns (bin left edges, mass)."""
        if width <= 0:
            raise ValueError("bin width must be positive")
        idx = np.floor(self.values / width).astype(np.int64)
        bins, inv = np.unique(idx, return_inverse=True)
        mass = np.bincount(inv, weights=self.probs)
        return bins * width, mass


def moments(d: WorkDistribution, max_order: int) -> np.ndarray:
    """``[<w>, <w^2>, ..., <w^max_order>]``."""
    if max_order < 1:
        raise ValueError("max_order must be >= 1")
    return np.array([d.moment(k) for k in range(1, max_order + 1)])


def mixture(dists, weights, tol: float = COALESCE_RTOL) -> WorkDistribution:
    vals = np.concatenate([d.values for d in dists])
    probs = np.concatenate([w * d.probs for d, w in zip(dists, weights)])
    return WorkDistribution.from_atoms(vals, probs, tol)


def distribution_discrepancy(a: WorkDistribution, b: WorkDistribution, tol: float) -> float:
    """Largest probability mismatch between two distributions.

    Atoms of both are pooled and grouped by position (``tol``); the result is
    the largest ``|mass_a - mass_b|`` over groups, so an atom missing from one
    side counts with its full weight.
    """
    vals = np.concatenate([a.values, b.values])
    pa = np.concatenate([a.probs, np.zeros(len(b))])
    pb = np.concatenate([np.zeros(len(a)), b.probs])
    worst = 0.0
    for idx in cluster_values(vals, tol):
        worst = max(worst, abs(pa[idx].sum() - pb[idx].sum()))
    return worst


@dataclass(frozen=True)
class BlockWorkSet:
    """Per-level work distributions of the environment quenches ``H_B -> H_B + B_n``.

    ``transitions[n][m, k]`` is ``|<E^n_k|E_m>|^2``; rows index the initial
    ``H_B`` eigenstate, columns the final block eigenstate.
    """

    beta: float
    env_spectrum: np.ndarray
    env_populations: np.ndarray
    env_free_energy: float
    block_spectra: tuple
    transitions: tuple
    block_free_energies: np.ndarray
    distributions: tuple
    tol: float

    @property
    def n_levels(self) -> int:
        return len(self.distributions)

    @property
    def free_energy_changes(self) -> np.ndarray:
        return self.block_free_energies - self.env_free_energy


def _block_distribution(e_init, p_init, e_final, trans, tol) -> WorkDistribution:
    w = e_final[None, :] - e_init[:, None]
    p = p_init[:, None] * trans
    return WorkDistribution.from_atoms(w, p, tol)


def _clean_transitions(overlaps: np.ndarray) -> np.ndarray:
    t = np.abs(overlaps) ** 2
    t[t < TRANSITION_FLOOR] = 0.0
    return t


def block_work_set(model: DephasingModel, beta: float, tol: float | None = None) -> BlockWorkSet:
    """Diagonalize every block ``H_B + B_n`` and form the per-level ``p_n(w)``.

    The system energy ``eps_n`` is left out of the blocks: the system
    population is not changed by the quench, so it cancels in the work.
    """
    beta = check_beta(beta)
    if tol is None:
        tol = coalesce_tolerance(model.energy_scale())
    env = eig_hermitian(model.env_hamiltonian)
    p_b = boltzmann_weights(env.eigenvalues, beta)
    f_b = free_energy(env, beta)
    spectra, trans, f_n, dists = [], [], [], []
    for n in range(model.dim_s):
        blk = eig_hermitian(model.block(n))
        t = _clean_transitions(env.eigenvectors.conj().T @ blk.eigenvectors)
        spectra.append(blk.eigenvalues)
        trans.append(t)
        f_n.append(free_energy(blk, beta))
        dists.append(_block_distribution(env.eigenvalues, p_b, blk.eigenvalues, t, tol))
    return BlockWorkSet(
        beta=beta,
        env_spectrum=env.eigenvalues,
        env_populations=p_b,
        env_free_energy=f_b,
        block_spectra=tuple(spectra),
        transitions=tuple(trans),
        block_free_energies=np.array(f_n),
        distributions=tuple(dists),
        tol=tol,
    )


def work_distribution(bw: BlockWorkSet, p_s) -> WorkDistribution:
    """Mixture ``sum_n p^S_n p_n(w)`` with atom coalescing."""
    p_s = np.asarray(p_s, dtype=float)
    if p_s.size != bw.n_levels:
        raise ValueError(f"{p_s.size} populations for {bw.n_levels} levels")
    if abs(p_s.sum() - 1) > NORM_TOL:
        raise ValueError(f"system populations sum to {p_s.sum()!r}")
    return mixture(bw.distributions, p_s, bw.tol)


def mean_work_direct(model: DephasingModel, beta: float) -> float:
    """``sum_n p^S_n Tr{B_n rho_B(0)}``."""
    from .thermo import thermal_state

    rho_b = thermal_state(model.env_hamiltonian, beta)
    p_s = system_populations(model, beta)
    return float(sum(p * np.trace(b @ rho_b).real for p, b in zip(p_s, model.couplings)))


def jarzynski_block(bw: BlockWorkSet) -> tuple[np.ndarray, np.ndarray]:
    """Per-level ``(<exp(-beta w)>_n, exp(-beta dF^n_B))``."""
    lhs = np.array([d.exp_average(bw.beta) for d in bw.distributions])
    rhs = np.exp(-bw.beta * bw.free_energy_changes)
    return lhs, rhs


def delta_free_energy(bw: BlockWorkSet, p_s) -> float:
    """``dF = -ln(sum_n p^S_n exp(-beta dF^n_B)) / beta``."""
    p_s = np.asarray(p_s, dtype=float)
    return float(-logsumexp(-bw.beta * bw.free_energy_changes, b=p_s) / bw.beta)


def jarzynski_global(d: WorkDistribution, bw: BlockWorkSet, p_s) -> tuple[float, float]:
    """``(<exp(-beta w)>, exp(-beta dF))`` for the whole quench."""
    return d.exp_average(bw.beta), float(np.exp(-bw.beta * delta_free_energy(bw, p_s)))


def full_space_free_energy_change(h0, h, beta: float) -> float:
    """``-ln(Z / Z0) / beta`` from the full-space spectra."""
    return free_energy(h, beta) - free_energy(h0, beta)


def relative_residual(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), np.finfo(float).tiny)


@dataclass(frozen=True)
class ThermoReport:
    mean_work: float
    moments: np.ndarray
    exp_beta_work: float
    delta_F: float
    intermediate_bound: float
    irreversible_work: float
    gap_work_bound: float = field(default=0.0)
    gap_bound_delta_F: float = field(default=0.0)

    def as_dict(self) -> dict:
        return {
            "mean_work": self.mean_work,
            "moments": [float(m) for m in self.moments],
            "exp_beta_work": self.exp_beta_work,
            "delta_F": self.delta_F,
            "intermediate_bound": self.intermediate_bound,
            "irreversible_work": self.irreversible_work,
            "gap_work_bound": self.gap_work_bound,
            "gap_bound_delta_F": self.gap_bound_delta_F,
        }


def bound_chain(bw: BlockWorkSet, p_s, max_order: int = 2, tol: float = BOUND_TOL) -> ThermoReport:
    """Evaluate ``<w> >= sum_n p^S_n F^n_B - F_B >= dF`` and report the gaps.

    Raises :class:`InvariantViolation` if either inequality fails by more than
    ``tol``.
    """
    p_s = np.asarray(p_s, dtype=float)
    d = work_distribution(bw, p_s)
    mom = moments(d, max(1, max_order))
    mean = float(mom[0])
    bound = float(np.dot(p_s, bw.block_free_energies) - bw.env_free_energy)
    df = delta_free_energy(bw, p_s)
    g1 = mean - bound
    g2 = bound - df
    if g1 < -tol or g2 < -tol:
        raise InvariantViolation(
            f"bound chain violated: <w> - bound = {g1:.3e}, bound - dF = {g2:.3e}"
        )
    return ThermoReport(
        mean_work=mean,
        moments=mom,
        exp_beta_work=d.exp_average(bw.beta),
        delta_F=df,
        intermediate_bound=bound,
        irreversible_work=mean - df,
        gap_work_bound=g1,
        gap_bound_delta_F=g2,
    )


def commuting_fast_path(model: DephasingModel, beta: float, tol: float | None = None,
                        comm_tol: float = 1e-10) -> BlockWorkSet:
    """Block work set when every ``B_n`` commutes with ``H_B``.

    ``H_B`` is diagonalized once; each ``B_n`` is then diagonalized only inside
    the degenerate eigenspaces of ``H_B``, giving a joint eigenbasis. Work
    atoms sit at the eigenvalues of ``B_n`` with the thermal weight of the
    shared ``H_B`` level. The stored transition matrices are the identity in
    that joint basis and ``block_spectra[n]`` follows the same ordering
    (it is not sorted).
    """
    beta = check_beta(beta)
    for n, b in enumerate(model.couplings):
        c = max_abs(commutator(model.env_hamiltonian, b))
        if c >= comm_tol:
            raise PreconditionError(
                f"||[H_B, B_{n}]||_max = {c:.3e} >= {comm_tol:.1e}; use block_work_set instead"
            )
    if tol is None:
        tol = coalesce_tolerance(model.energy_scale())
    env = eig_hermitian(model.env_hamiltonian)
    e = env.eigenvalues
    v = env.eigenvectors
    p_b = boltzmann_weights(e, beta)
    f_b = free_energy(env, beta)
    groups = cluster_values(e, coalesce_tolerance(max_abs(model.env_hamiltonian)))
    spectra, trans, f_n, dists = [], [], [], []
    for b in model.couplings:
        shifts = np.empty_like(e)
        diag = np.diag(b) if is_diagonal(b) else None
        for idx in groups:
            q = v[:, idx]
            qbq = (q.conj().T * diag) @ q if diag is not None else q.conj().T @ b @ q
            shifts[idx] = np.linalg.eigvalsh(qbq)
        e_n = e + shifts
        spectra.append(e_n)
        trans.append(np.eye(e.size))
        f_n.append(spectral_free_energy(e_n, beta))
        dists.append(WorkDistribution.from_atoms(shifts, p_b, tol))
    return BlockWorkSet(
        beta=beta,
        env_spectrum=e,
        env_populations=p_b,
        env_free_energy=f_b,
        block_spectra=tuple(spectra),
        transitions=tuple(trans),
        block_free_energies=np.array(f_n),
        distributions=tuple(dists),
        tol=tol,
    )


def brute_force_tpm(h0, h, beta: float, tol: float | None = None) -> WorkDistribution:
    """Sudden-quench two-point-measurement distribution on the full space.

    ``p(w) = sum_ab |<b|a>|^2 exp(-beta lambda_a) / Z0  delta(w - lambda_b + lambda_a)``.
    Independent of any block structure; used as an oracle.
    """
    beta = check_beta(beta)
    if tol is None:
        tol = coalesce_tolerance(max_abs(h))
    s0 = eig_hermitian(h0)
    s1 = eig_hermitian(h)
    p0 = boltzmann_weights(s0.eigenvalues, beta)
    t = _clean_transitions(s0.eigenvectors.conj().T @ s1.eigenvectors)
    return _block_distribution(s0.eigenvalues, p0, s1.eigenvalues, t, tol)


def _block_evolved_env_states(model: DephasingModel, beta: float, t: float):
    from .dynamics import propagate
    from .thermo import thermal_state

    rho_b = thermal_state(model.env_hamiltonian, beta)
    out = []
    for n in range(model.dim_s):
        u = propagate(model.block(n), t)
        out.append(u @ rho_b @ u.conj().T)
    return rho_b, out


def cyclic_switchoff_work(model: DephasingModel, beta: float, t: float,
                          tol: float = BOUND_TOL) -> float:
    """Total mean work for switching ``H_I`` on at 0 and off again at ``t``.

    ``<w_tot> = Tr{H_I rho(0)} - Tr{H_I rho(t)}``. Since ``rho(0)`` is diagonal
    in the system levels, ``rho(t)`` is evaluated level by level.
    """
    p_s = system_populations(model, beta)
    rho_b, evolved = _block_evolved_env_states(model, beta, t)
    w_on = sum(p * np.trace(b @ rho_b).real for p, b in zip(p_s, model.couplings))
    w_off = -sum(p * np.trace(b @ r).real for p, b, r in zip(p_s, model.couplings, evolved))
    total = float(w_on + w_off)
    if total < -tol:
        raise InvariantViolation(f"cyclic work {total:.3e} is negative")
    return total


def environment_energy_change(model: DephasingModel, beta: float, t: float) -> float:
    """``Tr{(1 ⊗ H_B)(rho(t) - rho(0))}`` on the full space."""
    from .dynamics import propagate
    from .models import assemble_total_hamiltonians

    _, h = assemble_total_hamiltonians(model)
    rho0 = initial_state(model, beta)
    u = propagate(h, t)
    drho = u @ rho0 @ u.conj().T - rho0
    h_env = np.kron(np.eye(model.dim_s), model.env_hamiltonian)
    return float(np.trace(h_env @ drho).real)
