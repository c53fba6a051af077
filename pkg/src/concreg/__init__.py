"""Concave regression with likelihood-ratio inference at a point.

The estimators are the unconstrained concave least-squares fit and its
pinned variant forced through a point (x0, y0).  Twice the gap between
their objectives, divided by the noise variance, is asymptotically
pivotal, so a single simulated critical-value table serves every dataset:
`lr_test` and `confidence_interval` consume a `CriticalTable`, and
`critical_table` regenerates one from scratch.
"""

# Version first: submodules imported below read it at import time.
__version__ = "0.1.0"

from .data import (
    AugmentedDesign,
    Design,
    PiecewiseLinearConcave,
    active_knots,
    augment,
    evaluate,
    read_design,
)
from .cone import ConeProblem, ConeSolution, FenchelReport, fenchel_check, generators, project
from .estimators import FitResult, fit_alse, fit_nlse
from .certify import CharacterizationReport, check_alse, check_nlse
from .inference import (
    ConfidenceInterval,
    LrDecision,
    LrLocalization,
    LrResult,
    confidence_interval,
    lr_localization,
    lr_statistic,
    lr_test,
)
from .limit import (
    CriticalTable,
    InvelopeCheckReport,
    LimitPath,
    coarsen_path,
    critical_table,
    dee_draw,
    invelope_check,
    invelope_constrained,
    invelope_unconstrained,
    rescale_canonical,
    simulate_path,
    transform_path,
)
from .studies import (
    EcdfStudy,
    LevelEstimate,
    Scenario,
    d_constant,
    ecdf_study,
    generate_design,
    level_study,
    replicate_statistics,
    write_ecdf_csv,
    write_level_csv,
)

__all__ = [
    "__version__",
    "AugmentedDesign",
    "CharacterizationReport",
    "ConeProblem",
    "ConeSolution",
    "ConfidenceInterval",
    "CriticalTable",
    "FenchelReport",
    "Design",
    "EcdfStudy",
    "FitResult",
    "InvelopeCheckReport",
    "LevelEstimate",
    "LimitPath",
    "LrDecision",
    "LrLocalization",
    "LrResult",
    "PiecewiseLinearConcave",
    "Scenario",
    "active_knots",
    "augment",
    "check_alse",
    "check_nlse",
    "coarsen_path",
    "confidence_interval",
    "critical_table",
    "d_constant",
    "dee_draw",
    "ecdf_study",
    "evaluate",
    "fenchel_check",
    "fit_alse",
    "fit_nlse",
    "generate_design",
    "generators",
    "invelope_check",
    "invelope_constrained",
    "invelope_unconstrained",
    "level_study",
    "lr_localization",
    "lr_statistic",
    "lr_test",
    "project",
    "read_design",
    "replicate_statistics",
    "rescale_canonical",
    "simulate_path",
    "transform_path",
    "write_ecdf_csv",
    "write_level_csv",
]
