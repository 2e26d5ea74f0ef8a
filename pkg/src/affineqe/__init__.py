"""Symbolic-numeric toolkit for affine connections and their quasi-Einstein geometry."""

from .expr import (
    AffineQEError,
    DomainError,
    ExactModeError,
    ExprSyntaxError,
    Rational,
    ScalarExpr,
    UnknownIdentifierError,
    Verdict,
    differentiate,
    evaluate,
    format_expr,
    is_identically_zero,
    parse_rational,
    parse_scalar,
)

__all__ = [
    "AffineQEError",
    "DomainError",
    "ExactModeError",
    "ExprSyntaxError",
    "Rational",
    "ScalarExpr",
    "UnknownIdentifierError",
    "Verdict",
    "differentiate",
    "evaluate",
    "format_expr",
    "is_identically_zero",
    "parse_rational",
    "parse_scalar",
]

__version__ = "0.1.0"
