"""Closed-form results for the qubit examples, used to cross-check the engine."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import expit

from .models import FermionBathSpec, build_qubit_fermion_model, single_particle_spectrum
from .thermo import check_beta, population_unbalance, system_populations
from .work import PreconditionError, bound_chain, commuting_fast_path


def fermi(eps, beta: float):
    """``1 / (exp(beta eps) + 1)`` without overflow."""
    return expit(-beta * np.asarray(eps, dtype=float))


def boson_second_moment(frequencies, couplings, beta: float) -> float:
    """``sum_k g_k^2 coth(beta w_k / 2)``; ``beta = inf`` gives ``sum_k g_k^2``."""
    w = np.asarray(frequencies, dtype=float)
    g = np.asarray(couplings, dtype=float)
    if np.any(w <= 0):
        raise ValueError("mode frequencies must be positive")
    if np.isinf(beta):
        return float(np.sum(g ** 2))
    return float(np.sum(g ** 2 / np.tanh(check_beta(beta) * w / 2)))


def _homogeneous_g(spec: FermionBathSpec) -> float:
    if not spec.is_homogeneous:
        raise PreconditionError("closed forms need homogeneous site couplings g_j = g")
    return float(spec.site_couplings[0])


def fermion_mean_work(spec: FermionBathSpec, omega: float, beta: float) -> float:
    """``<w> = g dp^S sum_k f(eps_k)`` for ``B = g N``."""
    g = _homogeneous_g(spec)
    eps = single_particle_spectrum(spec)
    return float(g * population_unbalance(omega, beta) * np.sum(fermi(eps, beta)))


def fermion_free_energy(hopping: float, mu: float, sites: int, beta: float) -> float:
    """``F_B(mu) = -sum_k ln(1 + exp(-beta eps_k)) / beta``."""
    spec = FermionBathSpec.homogeneous(hopping, mu, sites, 0.0)
    eps = single_particle_spectrum(spec)
    beta = check_beta(beta)
    return float(-np.sum(np.logaddexp(0.0, -beta * eps)) / beta)


def fermion_bound_formula(spec: FermionBathSpec, omega: float, beta: float) -> float:
    """Intermediate bound ``sum_n p^S_n F^n_B - F_B`` for the qubit with ``B = g N``.

    Level 0 (energy ``-omega/2``) sees ``H_B + g N``, i.e. chemical potential
    ``mu - g``; level 1 sees ``mu + g``.
    """
    g = _homogeneous_g(spec)
    t, mu, L = spec.hopping, spec.chemical_potential, spec.sites
    beta = check_beta(beta)
    z_s = 2 * np.cosh(beta * omega / 2)
    return float(
        np.exp(beta * omega / 2) * fermion_free_energy(t, mu - g, L, beta) / z_s
        + np.exp(-beta * omega / 2) * fermion_free_energy(t, mu + g, L, beta) / z_s
        - fermion_free_energy(t, mu, L, beta)
    )


def saturation_limit(g_prime: float, omega: float, beta: float, hopping: float, mu: float,
                     epsabs: float = 1e-10) -> float:
    """``g' dp^S / pi * int_0^pi dk f(-mu - 2 t cos k)`` by adaptive quadrature."""
    val, _ = quad(lambda k: fermi(-mu - 2 * hopping * np.cos(k), beta),
                  0.0, np.pi, epsabs=epsabs, epsrel=0.0, limit=200)
    return float(g_prime * population_unbalance(omega, beta) * val / np.pi)


@dataclass(frozen=True)
class ScanPoint:
    sites: int
    mean_work: float
    bound: float
    gap: float


def saturation_scan(g_prime: float, omega: float, beta: float, hopping: float, mu: float,
                    sizes) -> list[ScanPoint]:
    """Exact engine runs of the qubit + fermion chain with ``g = g' / L``."""
    sizes = list(sizes)
    if sizes != sorted(sizes):
        raise ValueError("sizes must be ascending")
    out = []
    for L in sizes:
        spec = FermionBathSpec.homogeneous(hopping, mu, L, g_prime / L)
        model = build_qubit_fermion_model(omega, spec)
        bw = commuting_fast_path(model, beta)
        rep = bound_chain(bw, system_populations(model, beta), max_order=1)
        out.append(ScanPoint(L, rep.mean_work, rep.intermediate_bound, rep.gap_work_bound))
    return out
