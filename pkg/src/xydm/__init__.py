"""Pairwise quantum discord, classical correlation and concurrence in the
anisotropic XY chain with Dzyaloshinskii-Moriya interaction."""

from xydm.errors import (
    DomainError,
    NumericalError,
    StructuralError,
    ValidationError,
    XYDMError,
)
from xydm.xstate import XState, eigenvalues, entropy, reduced_entropies
from xydm.chain import (
    ChainParams,
    CorrelationSet,
    FiniteRing,
    ThermodynamicLimit,
    correlations,
    dispersion,
    g_function,
    magnetization,
    pair_density_matrix,
    xx_correlator,
    yy_correlator,
    zz_correlator,
)
from xydm.measures import (
    MeasureReport,
    concurrence,
    conditional_entropy,
    discord_bruteforce,
    discord_closed_form,
    general_concurrence_oracle,
    mutual_information,
)

__version__ = "0.1.0"

__all__ = [
    "ChainParams",
    "CorrelationSet",
    "DomainError",
    "FiniteRing",
    "MeasureReport",
    "NumericalError",
    "StructuralError",
    "ThermodynamicLimit",
    "ValidationError",
    "XState",
    "XYDMError",
    "concurrence",
    "conditional_entropy",
    "correlations",
    "discord_bruteforce",
    "discord_closed_form",
    "dispersion",
    "eigenvalues",
    "entropy",
    "g_function",
    "general_concurrence_oracle",
    "magnetization",
    "mutual_information",
    "pair_density_matrix",
    "reduced_entropies",
    "xx_correlator",
    "yy_correlator",
    "zz_correlator",
]
