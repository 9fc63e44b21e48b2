"""Exact work statistics for quenches that switch on a pure-dephasing interaction."""

from .models import (
    BosonBathSpec,
    DephasingModel,
    FermionBathSpec,
    QubitSpec,
    assemble_total_hamiltonians,
    build_boson_bath,
    build_fermion_bath,
    build_qubit_model,
    single_particle_spectrum,
)
from .thermo import free_energy, system_populations, thermal_state
from .work import (
    BlockWorkSet,
    ThermoReport,
    WorkDistribution,
    block_work_set,
    bound_chain,
    brute_force_tpm,
    commuting_fast_path,
    cyclic_switchoff_work,
    jarzynski_block,
    jarzynski_global,
    moments,
    work_distribution,
)

__version__ = "0.1.0"
