"""qflex: dense statevector simulation, geometric-flexibility diagnostics,
and data re-uploading classifier benchmarks."""

__version__ = "0.1.0"

from .ansatz import (
    ACLS,
    PDR,
    AnsatzSpec,
    GateSlot,
    apply_ising_block,
    apply_slots,
    build_ansatz,
    build_layer,
    cnot_generator,
    count_report,
    data_upload_block,
    entangler_block,
    from_slots,
    ising_block,
    k_se,
    rotation_block,
)
from .clamaps import (
    ACLSVerdict,
    Bilinear,
    CLAMap,
    Constant,
    FixedValue,
    GateGeometry,
    PureData,
    acls_check,
    bilinear_map,
    closed_form_derivative_1d,
    closed_form_fidelity_1d,
    constant_map,
    data_jacobian,
    diagonal_bilinear_map,
    eval_coefficients,
    numerical_rank,
    pure_data_map,
    selective_direction_count,
    weight_jacobian,
)
from .config import DEFAULT_TOLERANCES, Tolerances
from .core import (
    DenseHermitian,
    EigenSystem,
    Generator,
    PauliString,
    StateVector,
    apply_rotation,
    eigendecompose,
    expectation,
    fidelity,
    fidelity_weight_derivative,
    fubini_study_distance,
)
from .data import Dataset, HypersphereConfig, gen_hypersphere, load_csv, minmax_scale, save_csv
from .errors import (
    DataFormatError,
    DivergenceError,
    QflexError,
    ShapeError,
    ValidationError,
)
from .metrics import Metrics, confusion_matrix, one_vs_all_auc, roc_auc
from .model import (
    ModelState,
    forward,
    forward_batch,
    gradient,
    loss,
    new_model,
    prepare_psi0,
)
from .training import TrainConfig, evaluate, load_checkpoint, run_suite, save_checkpoint, train
