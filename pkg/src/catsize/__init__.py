"""Quantum Fisher information and effective sizes of macroscopic superpositions.

Exact QFI of reference states, lower bounds from measured data, fitting of
parity fringes, a record format with simulator, and a registry of published
bounds.  Set ``CATSIZE_DISABLE_JIT=1`` to run the pure-numpy kernels.
"""

from ._kernels import HAVE_NUMBA, JIT_ENABLED
from .bounds import (
    BoundResult,
    PairScan,
    ProbabilityPair,
    VarianceRecord,
    bhattacharyya_bound,
    fitted_bound,
    histogram_bound,
    optimal_pair,
    pairwise_scan,
    shortcut_a2s,
    static_bound,
)
from .datasets import (
    ExperimentEntry,
    FockHistogramPair,
    MeasurementRecord,
    ParityFringe,
    WignerCut,
    read_record,
    registry,
    registry_entry,
    simulate_record,
    uniform_grid,
    write_record,
)
from .errors import CatsizeError, FitError, RecordFormatError, TruncationError, ValidationError
from .fitting import FitProblem, FitReport, fit, initial_guess
from .qfi import (
    EffectiveSize,
    QfiMatrix,
    QfiValue,
    coherence_length,
    effective_size,
    optimize_generator,
    qfi_exact,
    qfi_matrix,
)
from .space import (
    DensityMatrix,
    EigenDecomposition,
    ObservableMatrix,
    SpaceSpec,
    eig_hermitian,
    fock_operators,
    spin_operators,
    unitary_from_generator,
)
from .states import (
    FringeModel,
    WignerCatModel,
    analytic_neff,
    cat,
    coherent,
    dicke,
    dicke_collective_neff,
    exact_displaced_parity,
    exact_fringe_parity,
    fock,
    ghz,
    make_state,
    one_axis_twisted,
    spin_coherent,
    squeezed,
    two_mode_cat,
)

__version__ = "0.1.0"
