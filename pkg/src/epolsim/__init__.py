"""Free-electron / nonlinear-cavity simulator: blockade dynamics, spectra, and gates."""

from .tensor import (
    TensorSpace,
    Operator,
    StateVector,
    DensityMatrix,
    kron,
    embed,
    embed_group,
    partial_trace,
    expectation,
)
from .cavity import (
    CavityModel,
    PolaritonBasis,
    build_kerr,
    build_jc,
    polariton_eigenbasis,
    transition_frequency,
    jc_splitting_factors,
    pair_states,
)
from .electron import (
    LadderConfig,
    EnvelopeSamples,
    build_ladder,
    comb_state,
    energy_to_velocity,
    coupling_from_envelope,
    ELECTRON_REST_KEV,
)
from .dynamics import (
    SystemConfig,
    IntegratorConfig,
    EvolveResult,
    Diagnostics,
    NumericsError,
    TraceDriftError,
    CutoffError,
    WrapAroundError,
    ConvergenceError,
    FeasibilityReport,
    interaction_hamiltonian,
    evolve_lindblad,
    scattering_linear,
    scattering_blockade,
    frame_align,
    initial_state,
    blockade_angle,
    pair_detuning,
    auto_steps,
    feasibility_check,
    check_feasibility,
)
from .observables import (
    Distribution,
    eels_spectrum,
    polariton_statistics,
    state_fidelity,
    entanglement_entropy,
    poisson_reference,
)
from .gates import (
    CircuitReport,
    RotationReport,
    IdentityCheck,
    gate_space,
    gate_pass,
    cep_rz,
    cep_rz_target,
    r_transverse,
    electron_hadamard,
    spectrometer,
    cpe_path,
    two_polariton_cz,
    equivalence_up_to_phase,
    gate_identity_suite,
    noisy_gate_fidelity,
)

__version__ = "0.1.0"
