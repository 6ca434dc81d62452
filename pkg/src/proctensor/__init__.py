"""Full and restricted process tensors for simulated open quantum systems."""
from .bases import (
    OpBasis,
    compute_duals,
    full_op_basis,
    in_span,
    overcomplete_projectors,
    projective_basis_qubit,
    projective_span_membership,
    random_unitary_basis,
    span_decompose,
    state_basis,
    unitary_basis_qubit,
)
from .choi import (
    ChoiMap,
    apply_choi,
    causal_break,
    choi_from_kraus,
    choi_from_unitary,
    identity_map,
    kron,
    partial_trace,
    preparation,
    seq_tensor,
)
from .decoupling import lindblad_contrast, r_map, search, unitarity_distance
from .process_tensor import (
    ProcessTensor,
    Subprocess,
    apply,
    containment_probability_map,
    contract,
    intermediate_from_icpovm,
    positivity_report,
    reconstruct,
    reconstruct_scenario,
)
from .simulator import (
    EnvModel,
    Scenario,
    XStateParams,
    heisenberg_scenario,
    lindblad_dephase,
    product_xstate,
    run_correlated,
    run_sequence,
    shallow_pocket_channel,
    shallow_pocket_scenario,
    swap_unitary,
    unitary_scenario,
    xstate,
)
from .witnesses import (
    correlation_memory,
    cptp_consistency,
    detection_implies_nonmarkov_check,
    k_exact,
    markov_test,
)

__version__ = "0.1.0"
