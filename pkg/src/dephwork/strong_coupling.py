"""Strong-coupling internal energy for dephasing models.

The effective system Hamiltonian is

    H*_S(beta, t) = -(1/beta) ln Tr_B{ U (e^{-beta H_S} ⊗ rho_B(0)) U^† }

and the internal energy is ``Tr{(H*_S + beta dH*_S/dbeta) rho_S(t)}``. For a
dephasing interaction the partial trace returns ``e^{-beta H_S}`` exactly, so
``H*_S = H_S`` at all times; the functions here compute everything on the
full space so that this can be checked rather than assumed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import propagate
from .models import DephasingModel, assemble_total_hamiltonians
from .operators import eig_hermitian, max_abs, partial_trace_env
from .thermo import check_beta, initial_state, thermal_state

EIGEN_FLOOR = 1e-300
FD_STABILITY_TOL = 1e-4


class NumericalBreakdown(RuntimeError):
    pass


@dataclass(frozen=True)
class EffectiveHamiltonianResult:
    H_star: np.ndarray
    beta: float
    t: float

    def deviation(self, h_s) -> float:
        return max_abs(self.H_star - h_s)


def _log_positive(a: np.ndarray) -> np.ndarray:
    spec = eig_hermitian((a + a.conj().T) / 2)
    lam = spec.eigenvalues
    if lam[0] <= EIGEN_FLOOR:
        raise NumericalBreakdown(
            f"partial trace has non-positive eigenvalue {lam[0]:.3e}; matrix log undefined"
        )
    v = spec.eigenvectors
    return (v * np.log(lam)) @ v.conj().T


def effective_system_hamiltonian(model: DephasingModel, beta: float, t: float,
                                 hermitian_tol: float = 1e-10) -> EffectiveHamiltonianResult:
    """Evaluate ``H*_S(beta, t)`` by full-space evolution and partial trace.

    ``e^{-beta H_S}`` is formed with the ground energy factored out and that
    energy added back after the logarithm, so large ``beta * eps`` is safe.
    """
    beta = check_beta(beta)
    if t < 0:
        raise ValueError("t must be non-negative")
    eps = model.system_energies
    shift = eps.min()
    gibbs_s = np.diag(np.exp(-beta * (eps - shift))).astype(complex)
    rho_b = thermal_state(model.env_hamiltonian, beta)
    _, h = assemble_total_hamiltonians(model)
    u = propagate(h, t)
    x = u @ np.kron(gibbs_s, rho_b) @ u.conj().T
    reduced = partial_trace_env(x, model.dim_s, model.dim_b)
    h_star = -_log_positive(reduced) / beta + shift * np.eye(model.dim_s)
    herm = max_abs(h_star - h_star.conj().T)
    if herm > hermitian_tol:
        raise NumericalBreakdown(f"H*_S not Hermitian: deviation {herm:.3e}")
    return EffectiveHamiltonianResult(h_star, beta, float(t))


def reduced_state(model: DephasingModel, beta: float, t: float) -> np.ndarray:
    """``rho_S(t) = Tr_B{U rho(0) U^†}``."""
    _, h = assemble_total_hamiltonians(model)
    u = propagate(h, t)
    rho = u @ initial_state(model, beta) @ u.conj().T
    return partial_trace_env(rho, model.dim_s, model.dim_b)


def _internal_energy(model, beta, t, dbeta, rho_s):
    h_plus = effective_system_hamiltonian(model, beta + dbeta, t).H_star
    h_minus = effective_system_hamiltonian(model, beta - dbeta, t).H_star
    h_mid = effective_system_hamiltonian(model, beta, t).H_star
    dh = (h_plus - h_minus) / (2 * dbeta)
    return float(np.trace((h_mid + beta * dh) @ rho_s).real), float(np.trace(beta * dh @ rho_s).real)


def strong_coupling_internal_energy(model: DephasingModel, beta: float, t: float,
                                    dbeta: float | None = None,
                                    return_derivative_term: bool = False):
    """``<E_S(t)> = Tr{(H*_S + beta dH*_S/dbeta) rho_S(t)}``.

    The beta derivative is a central difference with step ``dbeta``
    (default ``1e-5 * beta``). The step is halved once as a stability check;
    a shift larger than 1e-4 raises :class:`NumericalBreakdown`.
    """
    beta = check_beta(beta)
    if dbeta is None:
        dbeta = 1e-5 * beta
    if not 0 < dbeta < beta:
        raise ValueError("dbeta must satisfy 0 < dbeta < beta")
    rho_s = reduced_state(model, beta, t)
    e1, term = _internal_energy(model, beta, t, dbeta, rho_s)
    e2, _ = _internal_energy(model, beta, t, dbeta / 2, rho_s)
    if abs(e1 - e2) > FD_STABILITY_TOL:
        raise NumericalBreakdown(
            f"finite difference unstable: halving dbeta moved the energy by {abs(e1 - e2):.3e}"
        )
    return (e1, term) if return_derivative_term else e1
