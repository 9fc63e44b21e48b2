"""Time evolution under a dephasing Hamiltonian.

Covers exact propagators, the environment branch states ``|phi_n(t)>``,
decoherence functions, and time-dependent couplings ``B_n(t)`` handled in the
interaction picture of ``H_B`` through the time-ordered unitaries ``V_n(t)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import polar

from .models import DephasingModel, assemble_total_hamiltonians
from .operators import (
    SpectralDecomposition,
    eig_hermitian,
    hermitian,
    max_abs,
    operator_function,
    partial_trace_env,
)
from .thermo import boltzmann_weights, initial_state, system_populations
from .work import WorkDistribution, _clean_transitions, coalesce_tolerance

OVERLAP_FLOOR = 1e-300
DEFAULT_STEPS = 1024
AUDIT_TOL = 1e-6
UNITARITY_TOL = 1e-8


class StepSizeError(RuntimeError):
    """The time-ordered product did not pass its step-halving audit."""


def propagate(h, t: float) -> np.ndarray:
    """``exp(-i H t)`` from the spectral decomposition of ``h``."""
    spec = h if isinstance(h, SpectralDecomposition) else eig_hermitian(h)
    return operator_function(spec, lambda lam: np.exp(-1j * lam * t))


# -- branch states and decoherence ------------------------------------------

@dataclass(frozen=True)
class BranchStateSet:
    time: float
    states: np.ndarray  # (dim_S, dim_B), row n is |phi_n(t)>

    def overlaps(self) -> np.ndarray:
        """Matrix of ``<phi_n(t)|phi_m(t)>``."""
        return self.states.conj() @ self.states.T


def branch_states(model: DephasingModel, phi0, t: float) -> BranchStateSet:
    """``|phi_n(t)> = exp(-i (eps_n + H_B + B_n) t) |phi0>`` for every level."""
    phi0 = np.asarray(phi0, dtype=complex)
    if phi0.shape != (model.dim_b,):
        raise ValueError(f"phi0 must have shape ({model.dim_b},)")
    if abs(np.linalg.norm(phi0) - 1) > 1e-10:
        raise ValueError("phi0 must be normalized")
    states = np.array([
        propagate(model.block(n, include_system_energy=True), t) @ phi0
        for n in range(model.dim_s)
    ])
    return BranchStateSet(float(t), states)


def _log_abs(x: np.ndarray) -> np.ndarray:
    a = np.abs(x)
    with np.errstate(divide="ignore"):
        return np.where(a < OVERLAP_FLOOR, -np.inf, np.log(np.maximum(a, OVERLAP_FLOOR)))


def decoherence_function(bs: BranchStateSet) -> np.ndarray:
    """``Gamma_nm = ln |<phi_n|phi_m>|``; the diagonal is set to 0.

    Overlaps smaller than 1e-300 are reported as ``-inf``.
    """
    g = _log_abs(bs.overlaps())
    g = (g + g.T) / 2
    np.fill_diagonal(g, 0.0)
    return g


# -- time-dependent couplings -----------------------------------------------

@dataclass(frozen=True)
class CouplingSchedule:
    """Per-level couplings ``B_n(t)`` sampled on a uniform grid over ``[0, total_time]``.

    ``levels[n]`` maps a time to a Hermitian environment operator. Callbacks
    must be pure.
    """

    levels: Sequence[Callable[[float], np.ndarray]]
    total_time: float
    steps: int = DEFAULT_STEPS
    require_zero_start: bool = False

    def __post_init__(self):
        if not self.total_time >= 0:
            raise ValueError("total_time must be non-negative")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.require_zero_start:
            for n, f in enumerate(self.levels):
                if max_abs(f(0.0)) > 0:
                    raise ValueError(f"B_{n}(0) must vanish")

    @property
    def dt(self) -> float:
        return self.total_time / self.steps

    def coupling(self, n: int, t: float) -> np.ndarray:
        return hermitian(self.levels[n](t), name=f"B_{n}({t})")

    def final_couplings(self) -> list[np.ndarray]:
        return [self.coupling(n, self.total_time) for n in range(len(self.levels))]

    def with_steps(self, steps: int) -> "CouplingSchedule":
        return CouplingSchedule(self.levels, self.total_time, steps, False)


def constant_schedule(couplings, total_time: float, steps: int = DEFAULT_STEPS) -> CouplingSchedule:
    cs = [np.asarray(b, dtype=complex) for b in couplings]
    return CouplingSchedule([lambda s, b=b: b for b in cs], total_time, steps)


def linear_ramp_schedule(couplings, total_time: float, steps: int = DEFAULT_STEPS) -> CouplingSchedule:
    """``B_n(s) = (s / T) B_n``; vanishes at ``s = 0``."""
    cs = [np.asarray(b, dtype=complex) for b in couplings]
    if total_time <= 0:
        raise ValueError("linear ramp needs total_time > 0")
    return CouplingSchedule(
        [lambda s, b=b: (s / total_time) * b for b in cs], total_time, steps, True
    )


def quench_off_schedule(couplings, t_off: float, total_time: float,
                        steps: int = DEFAULT_STEPS) -> CouplingSchedule:
    """``B_n`` on for ``s < t_off`` and zero afterwards."""
    cs = [np.asarray(b, dtype=complex) for b in couplings]
    return CouplingSchedule(
        [lambda s, b=b: b if s < t_off else np.zeros_like(b) for b in cs],
        total_time, steps,
    )


@dataclass(frozen=True)
class TimeOrderedPropagator:
    unitary: np.ndarray
    time: float
    steps: int
    audit_delta: float
    unitarity_error: float


def _midpoint_product(b_of_t, env: SpectralDecomposition, total_time: float, steps: int) -> np.ndarray:
    dim = env.dim
    v = np.eye(dim, dtype=complex)
    if total_time == 0:
        return v
    dt = total_time / steps
    ev, vecs = env.eigenvalues, env.eigenvectors
    for j in range(steps):
        s = (j + 0.5) * dt
        # B^I(s) = e^{iH_B s} B(s) e^{-iH_B s}; work in the H_B eigenbasis
        phase = np.exp(1j * ev * s)
        b_eig = vecs.conj().T @ b_of_t(s) @ vecs
        b_int = phase[:, None] * b_eig * phase.conj()[None, :]
        lam, w = np.linalg.eigh(b_int)
        step = (w * np.exp(-1j * lam * dt)) @ w.conj().T
        v = step @ v
    return vecs @ v @ vecs.conj().T


def time_ordered_V(schedule: CouplingSchedule, env_hamiltonian, n: int,
                   audit_tol: float = AUDIT_TOL, extrapolate: bool = True) -> TimeOrderedPropagator:
    """``V_n(T) = T exp(-i int_0^T B^I_n(s) ds)`` by the midpoint product rule.

    The product is evaluated at ``dt`` and ``dt / 2``; a difference above
    ``audit_tol`` raises :class:`StepSizeError`. The midpoint rule is
    symmetric, so its error expansion has only even powers of ``dt`` and the
    pair is Richardson-extrapolated to fourth order, then projected back onto
    the unitaries (polar factor). With ``extrapolate=False`` the ``dt / 2``
    product is returned as is.
    """
    env = env_hamiltonian if isinstance(env_hamiltonian, SpectralDecomposition) \
        else eig_hermitian(env_hamiltonian)
    f = lambda s: schedule.coupling(n, s)  # noqa: E731
    coarse = _midpoint_product(f, env, schedule.total_time, schedule.steps)
    fine = _midpoint_product(f, env, schedule.total_time, 2 * schedule.steps)
    delta = max_abs(fine - coarse)
    if delta > audit_tol:
        raise StepSizeError(
            f"V_{n}: halving the step changed the result by {delta:.3e} > {audit_tol:.1e}; "
            f"increase steps above {schedule.steps}"
        )
    v = fine
    if extrapolate:
        v, _ = polar((4 * fine - coarse) / 3)
    err = max_abs(v @ v.conj().T - np.eye(v.shape[0]))
    if err > UNITARITY_TOL:
        raise StepSizeError(f"V_{n} unitarity drift {err:.3e} > {UNITARITY_TOL:.1e}")
    return TimeOrderedPropagator(v, schedule.total_time, 2 * schedule.steps, delta, err)


def interaction_picture(b, env_hamiltonian, t: float) -> np.ndarray:
    """``e^{i H_B t} B e^{-i H_B t}``."""
    u = propagate(env_hamiltonian, t)
    return u.conj().T @ b @ u


def td_transition_probs(v: np.ndarray, env_hamiltonian, final_block, t: float) -> np.ndarray:
    """``|<E^n_k(t)| e^{-i H_B t} V_n(t) |E_m>|^2`` indexed ``[m, k]``.

    ``final_block`` is ``H_B + B_n(t)`` at the final time.
    """
    env = eig_hermitian(env_hamiltonian)
    blk = final_block if isinstance(final_block, SpectralDecomposition) else eig_hermitian(final_block)
    evolved = propagate(env, t) @ v @ env.eigenvectors
    return _clean_transitions(evolved.conj().T @ blk.eigenvectors)


def td_work_distribution(v: np.ndarray, env_hamiltonian, final_block, t: float, beta: float,
                         tol: float | None = None) -> WorkDistribution:
    """Per-level work distribution for a time-dependent coupling ending at ``final_block``."""
    env = eig_hermitian(env_hamiltonian)
    blk = eig_hermitian(final_block)
    trans = td_transition_probs(v, env_hamiltonian, blk, t)
    p = boltzmann_weights(env.eigenvalues, beta)
    if tol is None:
        tol = coalesce_tolerance(max(max_abs(env_hamiltonian), max_abs(final_block)))
    w = blk.eigenvalues[None, :] - env.eigenvalues[:, None]
    return WorkDistribution.from_atoms(w, p[:, None] * trans, tol)


def td_mean_work_per_level(v: np.ndarray, b_final, env_hamiltonian, rho_b, t: float) -> float:
    """``Tr{(V^† H_B V - H_B) rho_B} + Tr{V^† B^I(t) V rho_B}``."""
    h_b = np.asarray(env_hamiltonian)
    vd = v.conj().T
    b_int = interaction_picture(b_final, h_b, t)
    first = np.trace((vd @ h_b @ v - h_b) @ rho_b)
    second = np.trace(vd @ b_int @ v @ rho_b)
    return float((first + second).real)


def decoherence_from_propagators(v_n: np.ndarray, v_m: np.ndarray, rho_b) -> float:
    """``Gamma_nm = ln |Tr{V_m^† V_n rho_B}|`` (``-inf`` below 1e-300)."""
    x = np.trace(v_m.conj().T @ v_n @ rho_b)
    return float(_log_abs(np.array(x)))


def static_V(model: DephasingModel, n: int, t: float) -> np.ndarray:
    """Exact ``V_n(t) = e^{i H_B t} e^{-i (H_B + B_n) t}`` for a constant coupling."""
    return propagate(model.env_hamiltonian, -t) @ propagate(model.block(n), t)


# -- full-space checks ------------------------------------------------------

def reduced_system_state(model: DephasingModel, rho_full) -> np.ndarray:
    return partial_trace_env(rho_full, model.dim_s, model.dim_b)


def evolve_full(model: DephasingModel, rho0, t: float) -> np.ndarray:
    _, h = assemble_total_hamiltonians(model)
    u = propagate(h, t)
    return u @ rho0 @ u.conj().T


def system_energy_invariance(model: DephasingModel, beta: float, t: float) -> tuple[float, float]:
    """``(<dE_S>, max_n |<n|rho_S(t)|n> - <n|rho_S(0)|n>|)`` on the full space."""
    _, h = assemble_total_hamiltonians(model)
    u = propagate(h, t)
    rho0 = initial_state(model, beta)
    hs = np.kron(model.system_hamiltonian(), np.eye(model.dim_b))
    de = np.trace((u.conj().T @ hs @ u - hs) @ rho0).real
    rho_s_t = reduced_system_state(model, u @ rho0 @ u.conj().T)
    drift = np.max(np.abs(np.diag(rho_s_t).real - system_populations(model, beta)))
    return float(de), float(drift)

