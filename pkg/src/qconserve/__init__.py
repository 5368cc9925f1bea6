"""qconserve: conservation-law audits for measured composite quantum systems.

Models a measured system together with its preparation/measurement
apparatus as one explicit tensor-product state, and verifies numerically
that quantities <psi|Q|psi> whose observables commute with the Hamiltonian
stay put through unitary interaction, entanglement, collapse, and branch
renormalization -- and that apparent subsystem violations are offset inside
each branch.
"""

from .dynamics import (
    EvolutionPlan,
    ExactPropagator,
    apply_unitary,
    evolve_exact,
    evolve_split_step,
    hermitian_generator,
    run_plan,
)
from .entanglement import (
    EntropyReport,
    disentangling_unitary,
    entropy,
    entropy_report,
    epsilon_entropy_approx,
    two_branch_entropy_exact,
    two_branch_state,
)
from .errors import (
    BoundaryClearanceError,
    LadderEdgeError,
    NumericalGuardError,
    SynthesisFailureError,
)
from .grids import GridSpec
from .ledger import ConservationLedger, ConservationReport, LedgerEntry
from .measurement import (
    Branch,
    ExpectationAudit,
    ProjectorSet,
    basis_projectors,
    indicator_projectors,
    measure,
    sample_branch,
    total_expectation_audit,
    window_projector,
)
from .operators import (
    HermitianOperator,
    commutator_norm,
    embed,
    expectation,
    grid_operators,
    identity,
    sigma_x,
    sigma_y,
    sigma_z,
    spectral_momentum_moment,
)
from .states import (
    Factor,
    ReducedDensity,
    SchmidtDecomposition,
    SpaceLayout,
    StateVector,
    inner,
    partial_trace,
    permute_factors,
    schmidt,
    tensor,
)

__version__ = "0.1.0"
