"""Classical simulation of flat-band quantum walks on digital quantum circuits."""
from .lattice import (
    BandStructure,
    LatticeSpec,
    band_structure,
    build_diamond_chain,
    build_embedded_chain,
    build_single_plaquette,
)
from .hamiltonian import HamiltonianTerms, PauliTerm, hopping_terms, interaction_terms, to_matrix
from .circuit import Circuit, Gate, compression_ratio, depth, trotter_circuit, trotter_step
from .simulator import (
    ShotRecord,
    StateVector,
    apply_circuit,
    apply_noisy_circuit,
    exact_evolve,
    post_select,
    prepare_initial,
    sample_shots,
)
from .compressor import (
    AnsatzCircuit,
    CompressConfig,
    CompressionResult,
    compress,
    compress_incremental,
    gradient,
    loss,
)

__version__ = "0.1.0"
