"""Exact scalars and bivariate polynomials."""
from .bipoly import (
    MONOMIAL_ORDERS,
    BiPoly,
    FloatPoly,
    get_max_degree,
    max_degree,
    poly_divide_exact,
    poly_eval,
    set_max_degree,
)
from .numbers import (
    ParamPoly,
    QuadraticNumber,
    exact_sqrt,
    parse_expression,
    sign,
    to_float,
    to_fraction,
)

__all__ = [
    "BiPoly",
    "FloatPoly",
    "MONOMIAL_ORDERS",
    "ParamPoly",
    "QuadraticNumber",
    "exact_sqrt",
    "get_max_degree",
    "max_degree",
    "parse_expression",
    "poly_divide_exact",
    "poly_eval",
    "set_max_degree",
    "sign",
    "to_float",
    "to_fraction",
]
