"""Process-certified prepare-and-measure DIQKD workbench."""

__version__ = "0.1.0"

from .adversary import (
    AttackModel,
    CloneSpec,
    ancilla_independence,
    bob_channel,
    eve_information,
    model_selection_report,
    secrecy_distance,
    uqcm_state,
)
from .classical_bound import GcpModel, build_chi_gc, certify, gcp_stats, maximize_fgc
from .keyrate import (
    FiniteKeyParams,
    RateResult,
    asymptotic_rate_diqkd,
    asymptotic_rate_ediqkd,
    critical_qber_diqkd,
    critical_qber_ediqkd,
    efficiency_factor,
    finite_rate_diqkd,
    finite_rate_ediqkd,
    leak_ec,
    min_key_rounds,
)
from .linalg import (
    binary_entropy,
    partial_trace,
    pauli,
    rotated_observable,
    tensor,
    trace_distance,
    von_neumann_entropy,
)
from .photonic import (
    EfficiencyBudget,
    PhotonicParams,
    effective_stats,
    efactor_vs_efficiency,
    rate_with_imperfections,
    required_efficiency,
)
from .simulate import SessionConfig, extract_keys, iid_block_check, run_session
from .tomography import (
    ConditionalStats,
    MeasurementFrame,
    apply_process,
    chi_identity,
    process_fidelity,
    process_matrix_1q,
    process_matrix_2q,
    protocol_frame,
    reconstruct_state,
)
