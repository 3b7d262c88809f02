"""Multicomponent log-gas partition functions and correlations as Berezin integrals."""

from .cache import CoefficientCache
from .correlations import InsertionSet, correlation_canonical, correlation_grand, omega_with_insertions
from .ensemble import (
    EnsembleSpec,
    FugacityPolynomial,
    SpecError,
    admissible_populations,
    assemble_omega,
    build_omega_even,
    build_omega_odd,
    build_omegas,
    partition_canonical,
    partition_canonical_laplace,
    partition_grand,
    population_probability,
)
from .exterior import (
    AntisymmetricMatrix,
    Form,
    berezin_full,
    berezin_partial,
    exp_form,
    hyperpfaffian,
    pfaffian,
    sgn_increasing,
    sgn_map_tuple,
    wedge,
)
from .oracle import direct_correlation, direct_partition, mehta_reference
from .poly import CompleteFamily, IncreasingMap, confluent_vandermonde, modified_derivative, wronskian
from .quadrature import Potential, QuadratureScheme, WeightedMeasure

__version__ = "0.1.0"
