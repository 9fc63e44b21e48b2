import numpy as np
import pytest

from corpus import random_hermitian, random_model
from dephwork.models import DephasingModel, QubitSpec, build_qubit_model
from dephwork.strong_coupling import (
    effective_system_hamiltonian,
    reduced_state,
    strong_coupling_internal_energy,
)


def test_t_zero_is_exact(rng):
    m = random_model(rng, 3, 4)
    assert effective_system_hamiltonian(m, 1.0, 0.0).deviation(m.system_hamiltonian()) < 1e-12


def test_zero_coupling(rng):
    m = DephasingModel([0.0, 0.4, 0.9], random_hermitian(rng, 3), [np.zeros((3, 3))] * 3)
    assert effective_system_hamiltonian(m, 0.6, 3.3).deviation(m.system_hamiltonian()) < 1e-12


def test_qubit_random_bath(rng):
    m = build_qubit_model(QubitSpec(1.0), random_hermitian(rng, 4), random_hermitian(rng, 4))
    assert effective_system_hamiltonian(m, 1.3, 2.7).deviation(m.system_hamiltonian()) < 1e-9


def test_free_qubit_energy():
    m = build_qubit_model(QubitSpec(1.0), np.diag([0.0, 1.0]), np.zeros((2, 2)))
    e = strong_coupling_internal_energy(m, 0.8, 1.0)
    assert e == pytest.approx(-0.5 * np.tanh(0.4), abs=1e-8)


def test_internal_energy_time_independent(rng):
    m = random_model(rng, 3, 4)
    vals = [strong_coupling_internal_energy(m, 1.1, t) for t in (0.0, 1.0, 3.0)]
    assert max(vals) - min(vals) < 1e-6
    p = np.diag(reduced_state(m, 1.1, 0.0)).real
    assert vals[0] == pytest.approx(np.dot(p, m.system_energies), abs=1e-6)


def test_finite_difference_step_halving(rng):
    m = random_model(rng, 2, 4)
    e1, term = strong_coupling_internal_energy(m, 1.0, 2.0, dbeta=1e-4, return_derivative_term=True)
    e2 = strong_coupling_internal_energy(m, 1.0, 2.0, dbeta=5e-5)
    assert abs(e1 - e2) < 1e-8
    # H*_S does not depend on beta, so the derivative term vanishes
    assert abs(term) < 1e-6


def test_bad_dbeta(rng):
    with pytest.raises(ValueError):
        strong_coupling_internal_energy(random_model(rng, 2, 2), 1.0, 1.0, dbeta=2.0)
