import numpy as np
import pytest

from dephwork.config import (
    ConfigError,
    load_toml,
    parse_matrix,
    scenario_hash,
    sweep_points,
    validate,
)

BASE = {"beta": 1.0, "model": {"kind": "qubit-fermion", "omega": 1.0, "sites": 4,
                               "coupling": 0.5}}


def _with(**kw):
    raw = {k: (dict(v) if isinstance(v, dict) else v) for k, v in BASE.items()}
    raw.update(kw)
    return raw


def test_minimal_config_defaults():
    sc = validate(_with())
    assert sc.outputs == ("all",) and sc.moment_order == 2
    assert sc.times() == []
    assert sc.tolerances["jarzynski"] == 1e-9


@pytest.mark.parametrize("raw,field", [
    (_with(beta=0.0), "beta"),
    (_with(beta="hot"), "beta"),
    (_with(colour=1), "colour"),
    (_with(outputs=["plots"]), "outputs"),
    (_with(moment_order=9), "moment_order"),
    ({"beta": 1.0}, "model"),
    (_with(model={"kind": "spin-chain"}), "model.kind"),
    (_with(model={"kind": "qubit-fermion", "omega": 1.0, "sites": 1, "coupling": 0.1}),
     "model.sites"),
    (_with(model={"kind": "qubit-fermion", "omega": 1.0, "sites": 3, "coupling": 0.1,
                  "total_coupling": 1.0}), "model.coupling"),
    (_with(model={"kind": "qubit-boson", "omega": 1.0, "frequencies": [1.0, -2.0],
                  "couplings": [0.1, 0.1], "fock_cutoff": 3}), "model.frequencies"),
    (_with(model={"kind": "generic-matrices", "system_energies": [0.0, 1.0],
                  "env_hamiltonian": [[0.0]], "couplings": [[[0.0]]]}), "model.couplings"),
    (_with(time={"total": -1.0}), "time.total"),
    (_with(schedule={"preset": "linear-ramp"}), "time.total"),
    (_with(schedule={"preset": "zigzag"}, time={"total": 1.0}), "schedule.preset"),
    (_with(tolerances={"jarzynski": -1.0}), "tolerances.jarzynski"),
    (_with(tolerances={"vibes": 1.0}), "tolerances.vibes"),
])
def test_validation_errors_name_field(raw, field):
    with pytest.raises(ConfigError) as exc:
        validate(raw)
    assert exc.value.field == field


def test_parse_matrix_complex_entries():
    m = parse_matrix([[1.0, [0.0, 2.0]], [[0.0, -2.0], 3]], "m")
    assert np.allclose(m, [[1, 2j], [-2j, 3]])
    for bad in ([[1, 2]], [[1, "x"], [0, 1]], [[1, [1, 2, 3]], [0, 1]], "abc"):
        with pytest.raises(ConfigError):
            parse_matrix(bad, "m")


def test_time_grid():
    sc = validate(_with(time={"total": 2.0, "steps": 4}))
    assert sc.times() == [0.0, 0.5, 1.0, 1.5, 2.0]


def test_hash_stable_and_order_independent():
    a = {"beta": 1.0, "model": {"kind": "x", "omega": 1}}
    b = {"model": {"omega": 1, "kind": "x"}, "beta": 1.0}
    assert scenario_hash(a) == scenario_hash(b)
    assert scenario_hash(a) != scenario_hash({**a, "beta": 2.0})


def test_sweep_points():
    sc = validate(_with(sweep={"parameter": "model.sites", "values": [2, 4]}))
    pts = sweep_points(sc)
    assert [p["model"]["sites"] for p in pts] == [2, 4]
    assert all("sweep" not in p for p in pts)
    bad = validate(_with(sweep={"parameter": "nowhere.x", "values": [1]}))
    with pytest.raises(ConfigError):
        sweep_points(bad)


def test_load_toml_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_toml(tmp_path / "missing.toml")
    p = tmp_path / "bad.toml"
    p.write_text("beta = = 1")
    with pytest.raises(ConfigError):
        load_toml(p)
