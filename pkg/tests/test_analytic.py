import numpy as np
import pytest

from dephwork.analytic import (
    boson_second_moment,
    fermi,
    fermion_bound_formula,
    fermion_free_energy,
    fermion_mean_work,
    saturation_limit,
    saturation_scan,
)
from dephwork.models import (
    BosonBathSpec,
    FermionBathSpec,
    build_qubit_boson_model,
    build_qubit_fermion_model,
)
from dephwork.runner import work_set
from dephwork.thermo import system_populations
from dephwork.work import PreconditionError, bound_chain


def _report(model, beta, order=2):
    return bound_chain(work_set(model, beta), system_populations(model, beta), max_order=order)


def test_fermi_extremes():
    assert fermi(0.0, 1.0) == 0.5
    assert fermi(1e4, 10.0) == 0.0
    assert fermi(-1e4, 10.0) == 1.0


def test_boson_closed_form_cases():
    assert boson_second_moment([1.0, 2.0], [0.0, 0.0], 1.0) == 0.0
    assert boson_second_moment([1.0], [0.2], np.inf) == pytest.approx(0.04)
    assert boson_second_moment([1.0], [0.2], 200.0) == pytest.approx(0.04, rel=1e-12)
    expected = 0.09 / np.tanh(0.5) + 0.01 / np.tanh(1.0)
    assert boson_second_moment([1.0, 2.0], [0.3, 0.1], 1.0) == pytest.approx(expected, rel=1e-14)


def _truncated_mode_second_moment(omega, g, beta, n_max):
    """``g^2 <(a + a^+)^2>`` in the Gibbs state of a mode cut off at ``n_max``."""
    n = np.arange(n_max + 1)
    p = np.exp(-beta * omega * n)
    p /= p.sum()
    # <n|(a + a^+)^2|n> = 2n + 1, except n_max where a a^+ has no room
    diag = 2 * n + 1.0
    diag[-1] = n_max
    return g ** 2 * float(np.dot(p, diag))


def test_boson_engine_two_modes_truncated():
    m = build_qubit_boson_model(1.0, BosonBathSpec((1.0, 2.0), (0.3, 0.1), 12))
    rep = _report(m, 1.0)
    assert abs(rep.mean_work) < 1e-12
    truncated = sum(_truncated_mode_second_moment(w, g, 1.0, 12) for w, g in ((1, 0.3), (2, 0.1)))
    assert abs(rep.moments[1] - truncated) < 1e-12


def test_boson_engine_two_modes_converged():
    exact = boson_second_moment([1.0, 2.0], [0.3, 0.1], 1.0)
    m = build_qubit_boson_model(1.0, BosonBathSpec((1.0, 2.0), (0.3, 0.1), 20))
    rep = _report(m, 1.0)
    assert abs(rep.mean_work) < 1e-12
    assert abs(rep.moments[1] - exact) / exact < 1e-6


@pytest.mark.parametrize("beta", [0.3, 1.0, 4.0])
def test_boson_zero_mean_any_beta(beta):
    m = build_qubit_boson_model(1.3, BosonBathSpec((0.7,), (0.9,), 6))
    assert abs(_report(m, beta).mean_work) < 1e-12


def test_fermion_mean_trivial():
    assert fermion_mean_work(FermionBathSpec.homogeneous(1.0, 0.0, 4, 0.0), 1.0, 1.0) == 0.0
    assert fermion_mean_work(FermionBathSpec.homogeneous(1.0, 0.0, 4, 0.5), 0.0, 1.0) == 0.0


def test_fermion_mean_engine():
    spec = FermionBathSpec.homogeneous(1.0, 0.0, 4, 0.5)
    rep = _report(build_qubit_fermion_model(1.0, spec), 1.0)
    assert abs(rep.mean_work - fermion_mean_work(spec, 1.0, 1.0)) < 1e-10


def test_fermion_bound_cases():
    assert fermion_bound_formula(FermionBathSpec.homogeneous(1.0, 0.2, 4, 0.0), 1.0, 1.0) \
        == pytest.approx(0.0, abs=1e-14)
    spec = FermionBathSpec.homogeneous(1.0, 0.2, 4, 0.3)
    two_term = 0.5 * fermion_free_energy(1.0, -0.1, 4, 1.0) \
        + 0.5 * fermion_free_energy(1.0, 0.5, 4, 1.0) - fermion_free_energy(1.0, 0.2, 4, 1.0)
    assert abs(fermion_bound_formula(spec, 0.0, 1.0) - two_term) < 1e-12


def test_fermion_bound_engine():
    spec = FermionBathSpec.homogeneous(1.0, 0.3, 8, 0.25)
    rep = _report(build_qubit_fermion_model(1.0, spec), 2.0)
    assert abs(rep.intermediate_bound - fermion_bound_formula(spec, 1.0, 2.0)) < 1e-10


def test_fermion_free_energy_matches_engine():
    from dephwork.models import build_fermion_bath
    from dephwork.thermo import free_energy

    h_b, _ = build_fermion_bath(FermionBathSpec.homogeneous(1.0, 0.4, 5, 0.0))
    assert abs(free_energy(h_b, 1.5) - fermion_free_energy(1.0, 0.4, 5, 1.5)) < 1e-10


def test_closed_forms_need_homogeneous():
    with pytest.raises(PreconditionError):
        fermion_mean_work(FermionBathSpec(1.0, 0.0, 3, (0.1, 0.2, 0.3)), 1.0, 1.0)


def test_saturation_limit_reference():
    # tanh(1/2)/pi * int_0^pi dk / (exp(-2 cos k) + 1); the integral is pi/2 by k -> pi - k symmetry
    assert saturation_limit(1.0, 1.0, 1.0, 1.0, 0.0) == pytest.approx(np.tanh(0.5) / 2, abs=1e-10)
    assert saturation_limit(1.0, 1.0, 1.0, 1.0, 0.0) == pytest.approx(0.2310585786300049,
                                                                      abs=1e-12)


def test_saturation_scan_zero_coupling():
    pts = saturation_scan(0.0, 1.0, 1.0, 1.0, 0.0, (2, 4))
    assert all(abs(p.gap) < 1e-14 for p in pts)


def test_saturation_scan_frozen_gaps():
    # exact engine values, frozen; closed forms agree to 1e-15
    pts = saturation_scan(1.0, 1.0, 1.0, 1.0, 0.0, (2, 4, 8))
    gaps = [p.gap for p in pts]
    assert gaps == pytest.approx([0.0264469901893572, 0.022159165906686068, 0.010461710467900343],
                                 abs=1e-12)
    assert all(a > b for a, b in zip(gaps, gaps[1:]))
    for p in pts:
        spec = FermionBathSpec.homogeneous(1.0, 0.0, p.sites, 1.0 / p.sites)
        assert abs(p.bound - fermion_bound_formula(spec, 1.0, 1.0)) < 1e-10


def test_saturation_scan_sizes_ascending():
    with pytest.raises(ValueError):
        saturation_scan(1.0, 1.0, 1.0, 1.0, 0.0, (4, 2))
