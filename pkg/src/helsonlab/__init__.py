"""Helson and Hankel matrices, averaging projections and Schatten-norm bounds."""

from helsonlab.numkernel import (
    Factorization,
    c_alpha,
    check_multiplicative_pair,
    convolve,
    d_alpha,
    divisor_pairs,
    factorize,
)
from helsonlab.schatten import (
    ComplexMatrix,
    SymbolSequence,
    dyadic_embed,
    hankel_truncation,
    helson_truncation,
    kron,
    multiplicative_assemble,
    restrict_prime,
    schatten_norm,
    singular_values,
    trace_pairing,
)
from helsonlab.projections import (
    WeightFunction,
    hankel_average,
    hankel_weighted_average,
    helson_average,
    helson_weighted_average,
    local_weight,
    projection_output_matrix,
    validate_weight,
    weight_phi_family,
    weight_Phi_family,
)
from helsonlab.bounds import (
    LowerBoundResult,
    WeightTriple,
    blowup_experiment,
    best_ratio_at_prime,
    solve_uniform_bound,
    test_matrix,
)

__version__ = "0.1.0"
