"""Hamiltonian builders for pure-dephasing models.

A dephasing model couples system level ``n`` to the environment through
``|n><n| ⊗ B_n``, so the total Hamiltonian is block diagonal in the system
eigenbasis with block ``n`` equal to ``eps_n + H_B + B_n``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .operators import (
    commutator,
    hermitian,
    kron_all,
    max_abs,
    projector,
)

MAX_DIM = 4096
MAX_FERMION_SITES = 12


class BudgetError(ValueError):
    """Raised when a requested Hilbert space exceeds the dense-storage budget."""


class UnsupportedVariantError(ValueError):
    pass


@dataclass(frozen=True)
class DephasingModel:
    """System levels ``eps_n``, environment Hamiltonian ``H_B`` and couplings ``B_n``."""

    system_energies: np.ndarray
    env_hamiltonian: np.ndarray
    couplings: tuple

    def __post_init__(self):
        eps = np.asarray(self.system_energies, dtype=float).copy()
        if eps.ndim != 1 or eps.size < 1:
            raise ValueError("system_energies must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(eps)):
            raise ValueError("system_energies must be finite")
        eps.setflags(write=False)
        hb = hermitian(self.env_hamiltonian, name="env_hamiltonian")
        cs = tuple(hermitian(b, name=f"coupling B_{n}") for n, b in enumerate(self.couplings))
        if len(cs) != eps.size:
            raise ValueError(
                f"{len(cs)} couplings given for {eps.size} system levels"
            )
        for n, b in enumerate(cs):
            if b.shape != hb.shape:
                raise ValueError(
                    f"coupling B_{n} has shape {b.shape}, env_hamiltonian has {hb.shape}"
                )
        object.__setattr__(self, "system_energies", eps)
        object.__setattr__(self, "env_hamiltonian", hb)
        object.__setattr__(self, "couplings", cs)

    @property
    def dim_s(self) -> int:
        return self.system_energies.size

    @property
    def dim_b(self) -> int:
        return self.env_hamiltonian.shape[0]

    @property
    def dim(self) -> int:
        return self.dim_s * self.dim_b

    def block(self, n: int, include_system_energy: bool = False) -> np.ndarray:
        """``H_B + B_n`` (plus ``eps_n`` on the diagonal if requested)."""
        h = self.env_hamiltonian + self.couplings[n]
        if include_system_energy:
            h = h + self.system_energies[n] * np.eye(self.dim_b)
        return h

    def energy_scale(self) -> float:
        """``||H||_max`` of the assembled Hamiltonian, computed block by block."""
        return max(max_abs(self.block(n, True)) for n in range(self.dim_s))

    def system_hamiltonian(self) -> np.ndarray:
        return np.diag(self.system_energies).astype(complex)

    def interaction(self) -> np.ndarray:
        d_s, d_b = self.dim_s, self.dim_b
        h = np.zeros((d_s * d_b, d_s * d_b), dtype=complex)
        for n, b in enumerate(self.couplings):
            h[n * d_b:(n + 1) * d_b, n * d_b:(n + 1) * d_b] = b
        return h

    def with_couplings(self, couplings) -> "DephasingModel":
        return DephasingModel(self.system_energies, self.env_hamiltonian, tuple(couplings))


def assemble_total_hamiltonians(model: DephasingModel) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(H0, H)`` on the full system ⊗ environment space."""
    d_s, d_b = model.dim_s, model.dim_b
    eye_s = np.eye(d_s)
    eye_b = np.eye(d_b)
    h0 = np.kron(model.system_hamiltonian(), eye_b) + np.kron(eye_s, model.env_hamiltonian)
    h_int = sum(
        np.kron(projector(n, d_s), b) for n, b in enumerate(model.couplings)
    )
    h = h0 + h_int
    return h0, h


# -- qubit -----------------------------------------------------------------

@dataclass(frozen=True)
class QubitSpec:
    omega: float


def build_qubit_model(q: QubitSpec, env_hamiltonian, coupling) -> DephasingModel:
    """Qubit with ``H_S = -omega sigma_z / 2`` and ``H_I = sigma_z ⊗ B``.

    Level 0 is the ``sigma_z = +1`` state with energy ``-omega/2``; level 1
    has energy ``+omega/2``. The couplings are therefore ``(B, -B)``.
    """
    if not np.isfinite(q.omega):
        raise ValueError("qubit omega must be finite")
    b = hermitian(coupling, name="qubit coupling B")
    return DephasingModel(
        np.array([-q.omega / 2, q.omega / 2]),
        env_hamiltonian,
        (b, -b),
    )


# -- bosons ----------------------------------------------------------------

@dataclass(frozen=True)
class BosonBathSpec:
    mode_frequencies: Sequence[float]
    couplings: Sequence[float]
    fock_cutoff: int

    def __post_init__(self):
        if len(self.mode_frequencies) != len(self.couplings):
            raise ValueError("mode_frequencies and couplings differ in length")
        if len(self.mode_frequencies) == 0:
            raise ValueError("boson bath needs at least one mode")
        if any(w <= 0 or not np.isfinite(w) for w in self.mode_frequencies):
            raise ValueError("mode frequencies must be positive and finite")
        if self.fock_cutoff < 1:
            raise ValueError("fock_cutoff must be >= 1")

    @property
    def dim(self) -> int:
        return (self.fock_cutoff + 1) ** len(self.mode_frequencies)


def annihilation(n_max: int) -> np.ndarray:
    """Truncated single-mode annihilation operator on ``|0>..|n_max>``."""
    return np.diag(np.sqrt(np.arange(1, n_max + 1)), k=1).astype(complex)


def boson_mode_operators(n_modes: int, n_max: int) -> list[np.ndarray]:
    a = annihilation(n_max)
    eye = np.eye(n_max + 1)
    return [
        kron_all([a if j == k else eye for j in range(n_modes)])
        for k in range(n_modes)
    ]


def build_boson_bath(s: BosonBathSpec, max_dim: int = MAX_DIM) -> tuple[np.ndarray, np.ndarray]:
    """``H_B = sum_k w_k a_k^† a_k`` and ``B = sum_k g_k (a_k + a_k^†)``, mode 0 slowest."""
    if s.dim > max_dim:
        raise BudgetError(
            f"boson Fock space dimension {s.dim} = ({s.fock_cutoff}+1)^{len(s.mode_frequencies)} "
            f"exceeds budget {max_dim}"
        )
    ops = boson_mode_operators(len(s.mode_frequencies), s.fock_cutoff)
    h_b = np.zeros((s.dim, s.dim), dtype=complex)
    b = np.zeros_like(h_b)
    for a, w, g in zip(ops, s.mode_frequencies, s.couplings):
        h_b += w * (a.conj().T @ a)
        b += g * (a + a.conj().T)
    return h_b, b


def check_cutoff_convergence(s: BosonBathSpec, observable, rtol: float = 1e-6,
                             max_dim: int = MAX_DIM) -> tuple[float, float, float]:
    """Evaluate ``observable(H_B, B)`` at ``n_max`` and ``2 n_max``.

    Returns ``(value, value_doubled, relative_drift)``; raises ``RuntimeError``
    if the drift exceeds ``rtol``.
    """
    v1 = float(observable(*build_boson_bath(s, max_dim)))
    s2 = BosonBathSpec(s.mode_frequencies, s.couplings, 2 * s.fock_cutoff)
    v2 = float(observable(*build_boson_bath(s2, max_dim)))
    drift = abs(v2 - v1) / max(abs(v2), np.finfo(float).tiny)
    if drift > rtol:
        raise RuntimeError(
            f"Fock cutoff {s.fock_cutoff} not converged: relative drift {drift:.3e} > {rtol:.1e}"
        )
    return v1, v2, drift


# -- fermions --------------------------------------------------------------

@dataclass(frozen=True)
class FermionBathSpec:
    hopping: float
    chemical_potential: float
    sites: int
    site_couplings: Sequence[float] = field(default=())
    boundary: str = "periodic"

    def __post_init__(self):
        if self.sites < 2:
            raise ValueError("fermion chain needs at least 2 sites")
        if self.boundary not in ("periodic", "open"):
            raise ValueError(f"boundary must be 'periodic' or 'open', got {self.boundary!r}")
        if len(self.site_couplings) != self.sites:
            raise ValueError(
                f"{len(self.site_couplings)} site couplings given for {self.sites} sites"
            )

    @classmethod
    def homogeneous(cls, hopping, chemical_potential, sites, g, boundary="periodic"):
        return cls(hopping, chemical_potential, sites, (g,) * sites, boundary)

    @property
    def is_homogeneous(self) -> bool:
        return len(set(self.site_couplings)) <= 1

    def hopping_matrix(self) -> np.ndarray:
        """Single-particle matrix ``h`` with ``H_B = sum_ij h_ij c_i^† c_j``."""
        L = self.sites
        h = -self.chemical_potential * np.eye(L)
        bonds = L if self.boundary == "periodic" else L - 1
        for j in range(bonds):
            i, k = j, (j + 1) % L
            h[i, k] -= self.hopping
            h[k, i] -= self.hopping
        return h


def jordan_wigner_annihilators(L: int) -> list[np.ndarray]:
    """``c_j = Z ⊗ ... ⊗ Z ⊗ sigma^- ⊗ 1 ⊗ ... ⊗ 1`` with site 0 slowest.

    Local basis is ``(|empty>, |occupied>)`` and ``Z = diag(1, -1)``.
    """
    lower = np.array([[0, 1], [0, 0]], dtype=complex)
    z = np.diag([1.0, -1.0]).astype(complex)
    eye = np.eye(2)
    return [
        kron_all([z] * j + [lower] + [eye] * (L - j - 1))
        for j in range(L)
    ]


def build_fermion_bath(s: FermionBathSpec, max_sites: int = MAX_FERMION_SITES):
    """Tight-binding ``H_B`` and density coupling ``B = sum_j g_j n_j`` on Fock space."""
    if s.sites > max_sites or 2 ** s.sites > MAX_DIM:
        raise BudgetError(
            f"fermion Fock space dimension 2^{s.sites} = {2 ** s.sites} exceeds budget "
            f"(max {max_sites} sites)"
        )
    h_b = quadratic_fock_hamiltonian(s.hopping_matrix())
    # number operators are diagonal in the occupation basis
    occ = occupations(s.sites)
    b = np.diag(occ @ np.asarray(s.site_couplings, dtype=float)).astype(complex)
    return h_b, b


def quadratic_fock_hamiltonian(h: np.ndarray) -> np.ndarray:
    """Dense ``sum_ij h_ij c_i^† c_j`` on the ``2^L`` occupation basis.

    Matrix elements are generated from bit operations with the Jordan-Wigner
    sign ``(-1)^(number of occupied sites before j)``, so no ``c_j`` matrices
    are materialized.
    """
    L = h.shape[0]
    dim = 2 ** L
    occ = occupations(L).astype(np.int64)
    # parity[:, j] = number of occupied sites strictly before site j
    before = np.cumsum(occ, axis=1) - occ
    states = np.arange(dim)
    out = np.zeros((dim, dim), dtype=complex)
    out[states, states] = occ @ np.real(np.diag(h))
    for i in range(L):
        for j in range(L):
            if i == j or h[i, j] == 0:
                continue
            src = states[(occ[:, j] == 1) & (occ[:, i] == 0)]
            mid = src ^ (1 << (L - 1 - j))
            dst = mid ^ (1 << (L - 1 - i))
            sign = (-1.0) ** (before[src, j] + before[mid, i])
            out[dst, src] += h[i, j] * sign
    return out


def occupations(L: int) -> np.ndarray:
    """``(2^L, L)`` array of site occupations for each basis state."""
    idx = np.arange(2 ** L)
    return ((idx[:, None] >> (L - 1 - np.arange(L))[None, :]) & 1).astype(float)


def number_operator(L: int) -> np.ndarray:
    return np.diag(occupations(L).sum(axis=1)).astype(complex)


def single_particle_spectrum(s: FermionBathSpec) -> np.ndarray:
    """``eps_k = -mu - 2 t cos k`` for ``k = 2 pi m / L``, ascending."""
    if s.boundary != "periodic":
        raise UnsupportedVariantError(
            "closed-form dispersion is only available for periodic chains"
        )
    k = 2 * np.pi * np.arange(s.sites) / s.sites
    return np.sort(-s.chemical_potential - 2 * s.hopping * np.cos(k))


def build_qubit_fermion_model(omega: float, s: FermionBathSpec) -> DephasingModel:
    h_b, b = build_fermion_bath(s)
    return build_qubit_model(QubitSpec(omega), h_b, b)


def build_qubit_boson_model(omega: float, s: BosonBathSpec) -> DephasingModel:
    h_b, b = build_boson_bath(s)
    return build_qubit_model(QubitSpec(omega), h_b, b)


def commutes_with_system(model: DephasingModel) -> float:
    """``||[H, H_S ⊗ 1]||_max`` on the full space."""
    _, h = assemble_total_hamiltonians(model)
    hs = np.kron(model.system_hamiltonian(), np.eye(model.dim_b))
    return max_abs(commutator(h, hs))
