"""Execute scenarios: build the model, compute requested outputs, run checks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import dynamics as dyn
from .analytic import fermion_bound_formula, fermion_mean_work
from .config import ConfigError, Scenario, parse_matrix
from .models import (
    BosonBathSpec,
    DephasingModel,
    FermionBathSpec,
    assemble_total_hamiltonians,
    build_qubit_boson_model,
    build_qubit_fermion_model,
)
from .operators import commutator, max_abs
from .strong_coupling import effective_system_hamiltonian, strong_coupling_internal_energy
from .thermo import system_populations, thermal_state
from .work import (
    BlockWorkSet,
    WorkDistribution,
    block_work_set,
    bound_chain,
    brute_force_tpm,
    commuting_fast_path,
    cyclic_switchoff_work,
    distribution_discrepancy,
    environment_energy_change,
    full_space_free_energy_change,
    jarzynski_block,
    jarzynski_global,
    relative_residual,
    work_distribution,
)

FULL_SPACE_LIMIT = 1024
CHECK_SIZE_LIMIT = 256
# fixed sample times for the "random times" checks, so runs are reproducible
CHECK_TIMES = tuple(float(x) for x in np.random.default_rng(20240611).uniform(0.1, 10.0, 5))


@dataclass
class Check:
    name: str
    residual: float
    tolerance: float
    passed: bool

    def as_dict(self):
        return {"name": self.name, "residual": self.residual,
                "tolerance": self.tolerance, "passed": self.passed}

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<40s} residual={self.residual:.3e}  tol={self.tolerance:.1e}"


def upper(name, residual, tol) -> Check:
    """Passes when ``residual <= tol``."""
    residual = float(residual)
    return Check(name, residual, tol, bool(residual <= tol))


def lower(name, value, tol) -> Check:
    """Passes when ``value >= -tol``."""
    value = float(value)
    return Check(name, value, tol, bool(value >= -tol))


@dataclass
class RunResult:
    report: dict
    distribution: WorkDistribution | None = None
    decoherence: list | None = None
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def _fermion_spec(m: dict) -> FermionBathSpec:
    L = int(m["sites"])
    if "site_couplings" in m:
        g = tuple(float(x) for x in m["site_couplings"])
    elif "total_coupling" in m:
        g = (float(m["total_coupling"]) / L,) * L
    else:
        g = (float(m["coupling"]),) * L
    return FermionBathSpec(float(m.get("hopping", 1.0)), float(m.get("chemical_potential", 0.0)),
                           L, g, m.get("boundary", "periodic"))


def build_model(sc: Scenario) -> DephasingModel:
    m = sc.model
    if m["kind"] == "qubit-fermion":
        return build_qubit_fermion_model(float(m["omega"]), _fermion_spec(m))
    if m["kind"] == "qubit-boson":
        spec = BosonBathSpec(tuple(map(float, m["frequencies"])), tuple(map(float, m["couplings"])),
                             int(m["fock_cutoff"]))
        return build_qubit_boson_model(float(m["omega"]), spec)
    h_b = parse_matrix(m["env_hamiltonian"], "model.env_hamiltonian")
    cs = [parse_matrix(c, f"model.couplings[{n}]") for n, c in enumerate(m["couplings"])]
    if any(c.shape != h_b.shape for c in cs):
        raise ConfigError("model.couplings", "coupling matrices must match env_hamiltonian size")
    return DephasingModel(np.array(m["system_energies"], dtype=float), h_b, cs)


def fermion_spec_of(sc: Scenario) -> FermionBathSpec | None:
    """The bath spec when the closed forms apply (periodic, homogeneous), else None."""
    if sc.model["kind"] != "qubit-fermion":
        return None
    spec = _fermion_spec(sc.model)
    if spec.boundary != "periodic" or not spec.is_homogeneous:
        return None
    return spec


def work_set(model: DephasingModel, beta: float) -> BlockWorkSet:
    """Commuting fast path when it applies, generic block path otherwise."""
    if all(max_abs(commutator(model.env_hamiltonian, b)) < 1e-10 for b in model.couplings):
        return commuting_fast_path(model, beta)
    return block_work_set(model, beta)


def _schedule(sc: Scenario, model: DephasingModel):
    s = sc.schedule
    steps = int(s.get("product_steps", 1024))
    T = sc.time_total
    if s["preset"] == "constant":
        return dyn.constant_schedule(model.couplings, T, steps)
    if s["preset"] == "linear-ramp":
        return dyn.linear_ramp_schedule(model.couplings, T, steps)
    return dyn.quench_off_schedule(model.couplings, float(s["t_off"]), T, steps)


def run_scenario(sc: Scenario, model: DephasingModel | None = None) -> RunResult:
    """Compute every requested output of a scenario and its invariant checks."""
    tol = sc.tolerances
    if model is None:
        model = build_model(sc)
    beta = sc.beta
    p_s = system_populations(model, beta)
    bw = work_set(model, beta)
    dist = work_distribution(bw, p_s)
    rep = bound_chain(bw, p_s, max_order=sc.moment_order, tol=float("inf"))

    out: dict = {"scenario": sc.raw, "hash": sc.digest,
                 "dimensions": {"system": model.dim_s, "environment": model.dim_b}}
    checks = [upper("normalization", abs(dist.total - 1), tol["normalization"])]

    thermo = rep.as_dict()
    out["thermo"] = thermo
    na = "not-applicable"

    out["distribution"] = {"atoms": len(dist)} if sc.wants("distribution") else na
    out["moments"] = [float(x) for x in rep.moments] if sc.wants("moments") else na

    if sc.wants("jarzynski"):
        lhs, rhs = jarzynski_block(bw)
        block_res = [relative_residual(a, b) for a, b in zip(lhs, rhs)]
        g_lhs, g_rhs = jarzynski_global(dist, bw, p_s)
        jz = {"block_lhs": lhs.tolist(), "block_rhs": rhs.tolist(),
              "block_residuals": block_res, "global_lhs": g_lhs, "global_rhs": g_rhs,
              "global_residual": relative_residual(g_lhs, g_rhs)}
        checks.append(upper("jarzynski_block", max(block_res), tol["jarzynski"]))
        checks.append(upper("jarzynski_global", jz["global_residual"], tol["jarzynski"]))
        if model.dim <= FULL_SPACE_LIMIT:
            h0, h = assemble_total_hamiltonians(model)
            z_ratio = float(np.exp(-beta * full_space_free_energy_change(h0, h, beta)))
            jz["full_space_Z_ratio"] = z_ratio
            checks.append(upper("jarzynski_full_space", relative_residual(g_lhs, z_ratio),
                                tol["jarzynski"]))
        else:
            jz["full_space_Z_ratio"] = na
        out["jarzynski"] = jz
    else:
        out["jarzynski"] = na

    if sc.wants("bounds"):
        checks.append(lower("bound_work_minus_intermediate", rep.gap_work_bound, tol["bounds"]))
        checks.append(lower("bound_intermediate_minus_dF", rep.gap_bound_delta_F, tol["bounds"]))
        fspec = fermion_spec_of(sc)
        if fspec is not None:
            omega = float(sc.model["omega"])
            thermo["closed_form_mean_work"] = fermion_mean_work(fspec, omega, beta)
            thermo["closed_form_bound"] = fermion_bound_formula(fspec, omega, beta)
            checks.append(upper("closed_form_mean_work",
                                abs(rep.mean_work - thermo["closed_form_mean_work"]),
                                tol["closed_form"]))
            checks.append(upper("closed_form_bound",
                                abs(rep.intermediate_bound - thermo["closed_form_bound"]),
                                tol["closed_form"]))
        out["bounds"] = {"mean_work": rep.mean_work, "intermediate_bound": rep.intermediate_bound,
                         "delta_F": rep.delta_F, "gap": rep.gap_work_bound}
    else:
        out["bounds"] = na

    times = sc.times()
    decoherence_rows = None
    if sc.wants("decoherence"):
        if times:
            decoherence_rows = _decoherence_rows(sc, model, times)
            out["decoherence"] = {"times": len(times), "pairs": model.dim_s * (model.dim_s - 1) // 2}
        else:
            out["decoherence"] = f"{na}: no [time] grid"
    else:
        out["decoherence"] = na

    if sc.wants("strong-coupling"):
        if not times:
            out["strong-coupling"] = f"{na}: no [time] grid"
        elif model.dim > FULL_SPACE_LIMIT:
            out["strong-coupling"] = f"{na}: full space dimension {model.dim} > {FULL_SPACE_LIMIT}"
        else:
            out["strong-coupling"] = _strong_coupling(model, beta, times, tol, checks)
    else:
        out["strong-coupling"] = na

    if sc.wants("cyclic"):
        if not times:
            out["cyclic"] = f"{na}: no [time] grid"
        else:
            rows = []
            for t in times:
                w = cyclic_switchoff_work(model, beta, t, tol=float("inf"))
                rows.append({"t": t, "total_work": w})
                checks.append(lower(f"cyclic_nonnegative(t={t:g})", w, tol["cyclic"]))
                if model.dim <= FULL_SPACE_LIMIT:
                    de = environment_energy_change(model, beta, t)
                    rows[-1]["environment_energy_change"] = de
                    checks.append(upper(f"cyclic_bookkeeping(t={t:g})", abs(w - de),
                                        tol["cyclic_bookkeeping"]))
            out["cyclic"] = rows
    else:
        out["cyclic"] = na

    if sc.schedule is not None:
        out["time_dependent"] = _time_dependent(sc, model, bw, tol, checks)

    out["checks"] = [c.as_dict() for c in checks]
    return RunResult(out, dist if sc.wants("distribution") else None, decoherence_rows, checks)


def _propagators(sc: Scenario, model: DephasingModel, t: float):
    if sc.schedule is None:
        return [dyn.static_V(model, n, t) for n in range(model.dim_s)]
    sch = _schedule(sc, model)
    sch = dyn.CouplingSchedule(sch.levels, t, sch.steps)
    return [dyn.time_ordered_V(sch, model.env_hamiltonian, n, sc.tolerances["audit"]).unitary
            for n in range(model.dim_s)]


def _decoherence_rows(sc: Scenario, model: DephasingModel, times) -> list:
    rho_b = thermal_state(model.env_hamiltonian, sc.beta)
    rows = []
    for t in times:
        vs = _propagators(sc, model, t)
        row = [t]
        for n in range(model.dim_s):
            for m in range(n + 1, model.dim_s):
                row.append(dyn.decoherence_from_propagators(vs[n], vs[m], rho_b))
        rows.append(row)
    return rows


def _strong_coupling(model, beta, times, tol, checks) -> dict:
    h_s = model.system_hamiltonian()
    devs, energies = [], []
    for t in times:
        devs.append(effective_system_hamiltonian(model, beta, t).deviation(h_s))
        energies.append(strong_coupling_internal_energy(model, beta, t))
    spread = max(energies) - min(energies)
    checks.append(upper("effective_hamiltonian_equals_H_S", max(devs), tol["effective_hamiltonian"]))
    checks.append(upper("internal_energy_time_independent", spread, tol["internal_energy"]))
    return {"times": list(times), "H_star_deviation": devs, "internal_energy": energies}


def _time_dependent(sc, model, bw, tol, checks) -> dict:
    sch = _schedule(sc, model)
    T = sch.total_time
    rho_b = thermal_state(model.env_hamiltonian, sc.beta)
    finals = sch.final_couplings()
    levels = []
    for n in range(model.dim_s):
        v = dyn.time_ordered_V(sch, model.env_hamiltonian, n, tol["audit"]).unitary
        final_block = model.env_hamiltonian + finals[n]
        d = dyn.td_work_distribution(v, model.env_hamiltonian, final_block, T, sc.beta)
        mw = dyn.td_mean_work_per_level(v, finals[n], model.env_hamiltonian, rho_b, T)
        checks.append(upper(f"td_mean_work_consistency(n={n})", abs(mw - d.mean),
                            tol["static_limit"]))
        levels.append({"mean_work": mw, "distribution_mean": d.mean})
    p_s = system_populations(model, sc.beta)
    final_model = model.with_couplings(finals)
    f_bw = work_set(final_model, sc.beta)
    bound = float(np.dot(p_s, f_bw.block_free_energies) - f_bw.env_free_energy)
    mean = float(np.dot(p_s, [lv["mean_work"] for lv in levels]))
    checks.append(lower("td_bound", mean - bound, tol["bounds"]))
    return {"preset": sc.schedule["preset"], "levels": levels, "mean_work": mean,
            "intermediate_bound": bound}


def check_scenario(sc: Scenario, model: DephasingModel | None = None,
                   size_limit: int = CHECK_SIZE_LIMIT) -> list[Check]:
    """The invariant suite on one small model; every entry carries a residual."""
    tol = sc.tolerances
    if model is None:
        model = build_model(sc)
    if model.dim > size_limit:
        raise ConfigError("model", f"check needs d_S*d_B <= {size_limit}, got {model.dim}; "
                                   "use a smaller check model")
    beta = sc.beta
    p_s = system_populations(model, beta)
    bw = block_work_set(model, beta)
    dist = work_distribution(bw, p_s)
    h0, h = assemble_total_hamiltonians(model)
    bf = brute_force_tpm(h0, h, beta, tol=bw.tol)
    out = [upper("oracle_equivalence", distribution_discrepancy(dist, bf, bw.tol), tol["oracle"])]

    lhs, rhs = jarzynski_block(bw)
    out.append(upper("jarzynski_block",
                     max(relative_residual(a, b) for a, b in zip(lhs, rhs)), tol["jarzynski"]))
    g_lhs, g_rhs = jarzynski_global(dist, bw, p_s)
    out.append(upper("jarzynski_global", relative_residual(g_lhs, g_rhs), tol["jarzynski"]))
    z_ratio = float(np.exp(-beta * full_space_free_energy_change(h0, h, beta)))
    out.append(upper("jarzynski_full_space", relative_residual(g_lhs, z_ratio), tol["jarzynski"]))

    rep = bound_chain(bw, p_s, tol=float("inf"))
    out.append(lower("bound_work_minus_intermediate", rep.gap_work_bound, tol["bounds"]))
    out.append(lower("bound_intermediate_minus_dF", rep.gap_bound_delta_F, tol["bounds"]))

    de = [dyn.system_energy_invariance(model, beta, t) for t in CHECK_TIMES]
    out.append(upper("system_energy_change", max(abs(x[0]) for x in de), tol["energy"]))
    out.append(upper("population_drift", max(x[1] for x in de), tol["energy"]))

    h_s = model.system_hamiltonian()
    sc_times = (0.0, 1.0, 3.0)
    devs = [effective_system_hamiltonian(model, beta, t).deviation(h_s) for t in sc_times]
    out.append(upper("effective_hamiltonian_equals_H_S", max(devs), tol["effective_hamiltonian"]))
    energies = [strong_coupling_internal_energy(model, beta, t) for t in sc_times]
    out.append(upper("internal_energy_time_independent", max(energies) - min(energies),
                     tol["internal_energy"]))

    cyc = [(cyclic_switchoff_work(model, beta, t, tol=float("inf")),
            environment_energy_change(model, beta, t)) for t in CHECK_TIMES]
    out.append(lower("cyclic_work_nonnegative", min(w for w, _ in cyc), tol["cyclic"]))
    out.append(upper("cyclic_equals_env_energy_change", max(abs(w - e) for w, e in cyc),
                     tol["cyclic_bookkeeping"]))
    return out
