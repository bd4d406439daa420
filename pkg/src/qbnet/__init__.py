"""Induced Boolean networks of periodically measured open quantum networks."""

from .chain import (
    Distribution,
    MarkovStructure,
    TransitionMatrix,
    expected_post_measurement,
    limit_transition,
    markov_structure,
    stationary_distribution,
    tau_scan,
    transition_matrix,
)
from .consensus import (
    InteractionGraph,
    consensus_as_lindblad,
    consensus_transition,
    path_graph,
    predicted_classes,
    quantum_laplacian,
)
from .hilbert import DensityOp, PureState, projector, tensor_product, validate_density
from .lindblad import (
    LindbladModel,
    build_generator,
    from_coordinates,
    gell_mann_basis,
    matrix_exp,
    propagate,
    steady_state,
    to_coordinates,
)
from .measurement import btoi, itob, measurement_setup, network_projectors, qubit_basis_from_angles, theta_matrix

__version__ = "0.1.0"

__all__ = [
    "DensityOp",
    "Distribution",
    "InteractionGraph",
    "LindbladModel",
    "MarkovStructure",
    "PureState",
    "TransitionMatrix",
    "btoi",
    "build_generator",
    "consensus_as_lindblad",
    "consensus_transition",
    "expected_post_measurement",
    "from_coordinates",
    "gell_mann_basis",
    "itob",
    "limit_transition",
    "markov_structure",
    "matrix_exp",
    "measurement_setup",
    "network_projectors",
    "path_graph",
    "predicted_classes",
    "projector",
    "propagate",
    "quantum_laplacian",
    "qubit_basis_from_angles",
    "stationary_distribution",
    "steady_state",
    "tau_scan",
    "tensor_product",
    "theta_matrix",
    "to_coordinates",
    "transition_matrix",
    "validate_density",
]
