"""hessform: similarity of nonnegative/Metzler matrices to nonnegative/Metzler
upper Hessenberg form.

Exact constructive decisions up to dimension 4, verifiable similarity
certificates, structured obstructions, the planar counterexample analysis for
discrete-time controller forms, and an alternating-projection heuristic for
larger dimensions.
"""

__version__ = "0.1.0"

from .errors import (
    ClusterAmbiguityError,
    ConstructionDefect,
    HessformError,
    IllConditionedWarning,
    InputError,
    NumericalError,
    PerronVectorError,
)
from .linalg import (
    ClassReport,
    PerronData,
    SortedSpectrum,
    classify,
    geometric_multiplicity,
    jordan_like_form,
    metzler_shift,
    permutation_to_hessenberg,
    perron_pair,
    sorted_spectrum,
)
from .cones import (
    ConeRep,
    CoverCertificate,
    CoverDecision,
    Membership,
    SimplexPoint,
    Verdict,
    boundary_shift,
    cone_membership,
    simplex_project,
    triangle_cover_decision,
    unproject,
    verify_cover_certificate,
)
from .transforms import (
    Mode,
    Obstruction,
    ObstructionKind,
    RankOneShiftForm,
    SimilarityCertificate,
    ct_hess_3,
    diag_commuting_transform,
    dt_hess_2,
    eigvec_b_transform,
    fix_b_boundary,
    make_certificate,
    metzler_hess_3,
    metzler_hess_4,
    nonneg_hess_3,
    rank_one_shift_detect,
    verify_certificate,
)
from .systems import (
    Domain,
    IterateTrace,
    PositiveSystem,
    dt_hess_feasibility_3,
    dt_iterates,
    is_controller_hessenberg,
)
from .search import (
    AltProjConfig,
    Generator,
    RestartLog,
    SearchReport,
    altproj_hess,
    random_experiment,
    sample_matrix,
)

__all__ = [
    "AltProjConfig",
    "ClassReport",
    "ClusterAmbiguityError",
    "ConeRep",
    "ConstructionDefect",
    "CoverCertificate",
    "CoverDecision",
    "Domain",
    "Generator",
    "HessformError",
    "IllConditionedWarning",
    "InputError",
    "IterateTrace",
    "Membership",
    "Mode",
    "NumericalError",
    "Obstruction",
    "ObstructionKind",
    "PerronData",
    "PerronVectorError",
    "PositiveSystem",
    "RankOneShiftForm",
    "RestartLog",
    "SearchReport",
    "SimilarityCertificate",
    "SimplexPoint",
    "SortedSpectrum",
    "Verdict",
    "altproj_hess",
    "boundary_shift",
    "classify",
    "cone_membership",
    "ct_hess_3",
    "diag_commuting_transform",
    "dt_hess_2",
    "dt_hess_feasibility_3",
    "dt_iterates",
    "eigvec_b_transform",
    "fix_b_boundary",
    "geometric_multiplicity",
    "is_controller_hessenberg",
    "jordan_like_form",
    "make_certificate",
    "metzler_hess_3",
    "metzler_hess_4",
    "metzler_shift",
    "nonneg_hess_3",
    "permutation_to_hessenberg",
    "perron_pair",
    "random_experiment",
    "rank_one_shift_detect",
    "sample_matrix",
    "simplex_project",
    "sorted_spectrum",
    "triangle_cover_decision",
    "unproject",
    "verify_certificate",
]
