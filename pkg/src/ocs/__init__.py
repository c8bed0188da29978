"""Numerics for one-channel block operators.

Rank-one inter-shell couplings make every spectral question scalar: the
resolvent reduces to channel overlaps, eigenvalue equations to 2x2 transfer
recursions, and boundary data to Moebius maps of the upper half plane.
The subpackages follow that reduction: model (shells and dense oracles),
transfer (coefficients, transfer matrices, singular sets), greens
(fundamental solutions, m-functions, Weyl circles), spectral (densities,
a.c. criterion, compactly supported eigenfunctions), anderson (random
antitree families and their deterministic limits), experiments/cli
(reproducible batch runs).
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    GuardError,
    OcsError,
    StructureError,
)
from .model import (
    OneChannelOperator,
    ShellData,
    assemble_dense,
    jacobi_operator,
    operator_from_description,
    random_one_channel,
)
from .transfer import (
    GMatrix,
    TransferMatrix,
    g_matrix,
    singular_set,
    transfer_matrix,
    transfer_product,
)
from .greens import (
    MFunctionSample,
    WeylCircle,
    fundamental_solutions,
    limit_point_diagnostic,
    m_function,
    resolvent_block,
    weyl_radius,
)
from .spectral import (
    ACCriterionResult,
    FiniteEigenfunction,
    SpectralEstimate,
    ac_criterion,
    eigen_histogram,
    finite_eigenfunction,
    finite_eigenfunctions,
    fullline_density,
    halfline_density,
)
from .anderson import (
    DisorderSpec,
    LimitTransfer,
    PartialAntitreeSpec,
    StretchedAntitreeSpec,
    elliptic_conjugation,
    harmonic_mean,
    interval_A,
    interval_S,
    limit_transfer_partial,
    limit_transfer_stretched,
    moment_bound_check,
    sample_shell_partial,
    sample_shell_stretched,
    well_balanced_check,
)

__all__ = [name for name in dir() if not name.startswith("_")]
