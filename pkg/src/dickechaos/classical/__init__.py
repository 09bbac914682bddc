"""Classical limit: H_cl, its flow, Poincare sections and Lyapunov exponents."""

from ._backend import DEFAULT as BACKEND, KERNELS, get_kernel
from .dynamics import (DEFAULT_ATOL, DEFAULT_RTOL, LyapunovResult, SamplingBox, SectionPoints,
                       Trajectory, integrate, lyapunov_ensemble, lyapunov_json, lyapunov_max,
                       lyapunov_run, occupied_cells, poincare_section, sample_energy_shell,
                       section_bounds, section_csv)
from .hamiltonian import (FlowParams, PhasePoint, classical_hamiltonian, constraint_eta,
                          energy_minimum, equations_of_motion, flow_params, jacobian,
                          linearized_frequencies)

__all__ = [
    "BACKEND", "KERNELS", "get_kernel", "DEFAULT_ATOL", "DEFAULT_RTOL", "LyapunovResult",
    "SamplingBox", "SectionPoints", "Trajectory", "integrate", "lyapunov_ensemble",
    "lyapunov_json", "lyapunov_max", "lyapunov_run", "occupied_cells", "poincare_section",
    "sample_energy_shell", "section_bounds", "section_csv", "FlowParams", "PhasePoint",
    "classical_hamiltonian", "constraint_eta", "energy_minimum", "equations_of_motion",
    "flow_params", "jacobian", "linearized_frequencies",
]
