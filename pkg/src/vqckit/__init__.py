"""vqckit: exact statevector simulation, analytic shift-rule derivatives, Hessian
spectra, loss-landscape slices, and adaptive learning-rate training for small
variational quantum classifiers."""

__version__ = "0.1.0"

from .derivatives import (
    ExpectationFn,
    fd_gradient,
    fd_hessian,
    gradient_variance_scan,
    loss_gradient,
    loss_hessian,
    loss_value,
    prediction,
    shift_gradient,
    shift_hessian,
)
from .datasets import (
    Dataset,
    DatasetError,
    gen_parity_dataset,
    gen_synthetic_tabular,
    load_csv,
    read_slice,
    read_spectrum,
    read_trace,
    split_dataset,
    synthetic_clean_labels,
    write_dataset,
    write_slice,
    write_spectrum,
    write_trace,
)
from .models import (
    PARITY4,
    TABULAR8,
    EncodedSample,
    Model,
    ModelSpec,
    build_model,
    build_parity_circuit,
    build_tabular_circuit,
    classify,
    encode,
    encode_dataset,
    parity_label,
    state_prep_cost,
)
from .simulator import (
    Angle,
    Circuit,
    Gate,
    StateVector,
    apply_gate,
    basis_state,
    cnot,
    cz,
    expect_z,
    expect_z_batch,
    h,
    rot3,
    run_circuit,
    run_circuit_batch,
    rx,
    ry,
    rz,
    u1,
    zero_state,
)
from .spectral import (
    DEGENERATE,
    LOCAL_MAX,
    LOCAL_MIN,
    SADDLE,
    ConvergenceError,
    LandscapeSlice,
    Spectrum,
    classify_stationary,
    count_signs,
    descent_path_overlay,
    eig_symmetric,
    landscape_slice,
)
from .training import (
    AHLRConfig,
    ClassifierLoss,
    GDConfig,
    TraceEvent,
    TraceRecord,
    TrainingDivergedError,
    TrainingTrace,
    VERDICT_CONVERGED,
    VERDICT_STUCK,
    gd_step,
    init_params,
    train_ahlr,
    train_gd,
)
