"""Direct quantum state tomography with fan-out meter couplings: simulation,
estimation, reconstruction and error mitigation."""

from .dqst import (
    ElementEstimate,
    EstimationError,
    RawMatrix,
    enumerate_settings,
    estimate_elements,
    ghz_fidelity_estimate,
    reconstruct_raw,
    shots_for_accuracy,
)
from .kernels import BACKEND
from .mitigation import (
    ConfusionMatrix,
    MitigationError,
    ZneSeries,
    bootstrap_stats,
    calibrate_confusion,
    mitigate_counts,
    run_zne,
    tensor_confusion,
)
from .qcore import BitVector, DensityMatrix, Ket, PauliString, fidelity, pauli_matrix, pure_fidelity, trace_distance
from .reconstruct import ProjectionReport, compare_states, project_physical, standard_qst
from .simkernel import (
    CountTable,
    NoiseModel,
    Setting,
    TargetKind,
    TargetSpec,
    joint_state,
    outcome_distribution,
    prepare_target,
    sample_shots,
    trajectory_ghz_counts,
)
from .twirl import TwirlSet, cz_twirl_sets

__version__ = "0.1.0"
