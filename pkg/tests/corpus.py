"""Shared model corpus for the identity checks.

Every entry is small enough for full-space oracles (d_S * d_B <= 64).
"""

import numpy as np

from dephwork.models import (
    BosonBathSpec,
    DephasingModel,
    FermionBathSpec,
    QubitSpec,
    build_boson_bath,
    build_qubit_boson_model,
    build_qubit_fermion_model,
    build_qubit_model,
)


def random_hermitian(rng, n, scale=1.0):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * (a + a.conj().T) / 2


def random_model(rng, d_s=None, d_b=None, scale=1.0):
    d_s = d_s or int(rng.integers(1, 5))
    d_b = d_b or int(rng.integers(2, 17))
    eps = rng.uniform(-1, 1, size=d_s)
    h_b = random_hermitian(rng, d_b)
    bs = [random_hermitian(rng, d_b, scale) for _ in range(d_s)]
    return DephasingModel(eps, h_b, bs)


def corpus():
    """``[(name, model, beta)]``; deterministic."""
    rng = np.random.default_rng(2024)
    out = []
    for i in range(8):
        d_s = int(rng.integers(2, 5))
        d_b = int(rng.integers(2, 17))
        out.append((f"random-{i}-{d_s}x{d_b}", random_model(rng, d_s, d_b),
                    float(rng.uniform(0.1, 5))))
    out.append(("qubit-random-bath", build_qubit_model(QubitSpec(1.0), random_hermitian(rng, 4),
                                                        random_hermitian(rng, 4)), 1.0))
    out.append(("degenerate-omega0", build_qubit_model(QubitSpec(0.0), np.diag([0.0, 0.0, 1.0]),
                                                        random_hermitian(rng, 3)), 0.7))
    out.append(("scalar-couplings", DephasingModel([0.0, 0.4, 1.1], random_hermitian(rng, 5),
                                                   [c * np.eye(5) for c in (0.3, -0.2, 0.7)]), 1.3))
    out.append(("fermion-L3", build_qubit_fermion_model(
        1.0, FermionBathSpec.homogeneous(1.0, 0.2, 3, 0.4)), 1.0))
    out.append(("fermion-L4-inhom", build_qubit_fermion_model(
        0.8, FermionBathSpec(1.0, -0.1, 4, (0.3, -0.1, 0.2, 0.5))), 2.0))
    out.append(("boson-2mode", build_qubit_boson_model(
        1.0, BosonBathSpec((1.0, 2.0), (0.3, 0.1), 3)), 1.0))
    return out
