"""Gibbs states, partition functions and free energies.

Every Boltzmann weight is evaluated relative to the smallest eigenvalue, so
only the dimensionless products ``beta * (lambda - lambda_min)`` reach
``exp``.
"""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

from .models import DephasingModel
from .operators import SpectralDecomposition, eig_hermitian, operator_function

MIN_BETA = 1e-8


def check_beta(beta: float) -> float:
    beta = float(beta)
    if not np.isfinite(beta) or beta <= 0:
        raise ValueError(f"beta must be finite and positive, got {beta!r}")
    return beta


def _spectrum(h) -> SpectralDecomposition:
    return h if isinstance(h, SpectralDecomposition) else eig_hermitian(h)


def boltzmann_weights(energies, beta: float) -> np.ndarray:
    """Normalized ``exp(-beta E) / Z`` for a 1-D array of energies."""
    beta = check_beta(beta)
    e = np.asarray(energies, dtype=float)
    x = -beta * (e - e.min())
    w = np.exp(x - logsumexp(x))
    return w


def log_partition(energies, beta: float) -> float:
    """``ln sum exp(-beta E)``, stabilized."""
    beta = check_beta(beta)
    e = np.asarray(energies, dtype=float)
    return float(logsumexp(-beta * e))


def thermal_state(h, beta: float) -> np.ndarray:
    """``exp(-beta H) / Tr exp(-beta H)``.

    ``h`` may be a matrix or an existing :class:`SpectralDecomposition`.
    """
    beta = check_beta(beta)
    spec = _spectrum(h)
    return operator_function(spec, lambda lam: -beta * lam, normalize=True)


def free_energy(h, beta: float) -> float:
    """``-ln(Tr exp(-beta H)) / beta`` via log-sum-exp on the spectrum."""
    return spectral_free_energy(_spectrum(h).eigenvalues, beta)


def spectral_free_energy(energies, beta: float) -> float:
    """Free energy of a level set given directly as energies (any order)."""
    beta = check_beta(beta)
    e = np.asarray(energies, dtype=float)
    e_min = e.min()
    return float(e_min - logsumexp(-beta * (e - e_min)) / beta)


def system_populations(model: DephasingModel, beta: float) -> np.ndarray:
    """Thermal populations ``p^S_n`` of the system levels."""
    return boltzmann_weights(model.system_energies, beta)


def population_unbalance(omega: float, beta: float) -> float:
    """``p_0 - p_1 = tanh(beta omega / 2)`` for the qubit ``H_S = -omega sigma_z / 2``."""
    return float(np.tanh(check_beta(beta) * omega / 2))


def initial_state(model: DephasingModel, beta: float) -> np.ndarray:
    """Full-space product Gibbs state ``rho_S(0) ⊗ rho_B(0)``."""
    rho_s = np.diag(system_populations(model, beta)).astype(complex)
    return np.kron(rho_s, thermal_state(model.env_hamiltonian, beta))
