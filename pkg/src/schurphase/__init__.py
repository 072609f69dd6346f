"""Phase-space analysis of Schur vectors in non-Hermitian kicked-rotor maps.

Builds non-unitary Floquet operators, computes decay-ordered Schur bases and
Husimi distributions, propagates the classical norm over phase space, and
constructs Planck-cell-conditioned semiclassical densities that approximate
the Husimi distributions of Schur-vector sets.
"""

__version__ = "0.1.0"

from .classical import (
    EnsembleSpec,
    FlowSpec,
    KickedMap,
    MapState,
    NormLandscape,
    integrate_frozen_gaussian,
    norm_landscape,
    norm_landscape_series,
    poincare_section,
    step_escape,
    step_pt,
)
from .compare import ScanResult, ScanRow, jsd, tf_scan
from .density import (
    DensityField,
    SupportSet,
    ThresholdResult,
    ThresholdUnreachableError,
    smooth,
    solve_threshold,
    support_set,
)
from .model import (
    FloquetOperator,
    RotorParams,
    SU2Params,
    build_escape_floquet,
    build_pt_floquet,
    build_su2_hamiltonian,
    load_operator,
    save_operator,
    su2_schur_reference,
)
from .phasespace import (
    CoherentStateFactory,
    Field,
    TorusGrid,
    coherent_state,
    husimi,
    husimi_sum,
)
from .spectral import (
    EigenPairs,
    NormOperatorResult,
    OrderedSchur,
    OverflowBreakdownError,
    QuasiEnergySet,
    eigendecompose_biorthogonal,
    expand_in_eigenbasis,
    norm_operator_eigvecs,
    ordered_schur,
    quasienergies,
    schur_fraction_sets,
    subspace_angles,
)
