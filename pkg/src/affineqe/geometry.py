"""Affine manifolds from Christoffel data and their curvature invariants.

Index conventions (fixed once, validated against the worked 3-dimensional
example with nonzero symbols 1/3/4/5):

* curvature   R[i][j][k][l] = d_i G_jk^l - d_j G_ik^l + G_in^l G_jk^n - G_jn^l G_ik^n
* Ricci       rho_jk = trace of the FIRST lower slot, sum_i R[i][j][k][i]
* Hessian     H_ij f = d_i d_j f - G_ij^k d_k f
* nabla rho   (grad rho)_{i;jk} = d_i rho_jk - G_ij^l rho_lk - G_ik^l rho_jl
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from . import expr as ex
from .expr import (
    AffineQEError,
    DomainError,
    ScalarExpr,
    Verdict,
    combine_verdicts,
)


class ManifoldFormatError(AffineQEError):
    """Malformed manifold document or inconsistent Christoffel data."""


class ExcludedLocusError(DomainError):
    """A point landed on the excluded locus of the chart."""


# --------------------------------------------------------------------------
# types


@dataclass(frozen=True)
class AffineManifold:
    """Torsion-free connection on an m-dimensional chart, given by its symbols.

    ``gamma[i][j][k]`` holds the symbol with lower indices i,j and upper index k;
    the i,j symmetry is enforced at construction.  ``excluded`` lists expressions
    whose zero sets are removed from the chart (e.g. the wall x1 = 0).
    """

    dim: int
    coords: tuple
    gamma: tuple
    excluded: tuple = ()

    def __post_init__(self):
        if self.dim < 2:
            raise ManifoldFormatError("dimension must be at least 2")
        if len(self.coords) != self.dim:
            raise ManifoldFormatError("coordinate names do not match dimension")

    def symbol(self, i: int, j: int, k: int) -> ScalarExpr:
        return self.gamma[i][j][k]

    def check_point(self, point) -> None:
        mode = "exact" if all(not isinstance(c, float) for c in point) else "float"
        for g in self.excluded:
            if ex.evaluate(g, point, mode) == 0:
                raise ExcludedLocusError(
                    f"point {tuple(point)} lies on the excluded locus")

    def random_point(self, rng: random.Random, mode: str = "exact"):
        if mode == "exact":
            return ex.random_rational_point(self.dim, rng, avoid=self.excluded)
        return ex.random_float_point(self.dim, rng, avoid=self.excluded)


@dataclass(frozen=True)
class TensorField:
    """Componentwise tensor on a chart: nested grid of expressions.

    ``covariant_rank`` lower slots come first in the index order; when
    ``has_upper`` is set there is one trailing contravariant slot.
    """

    components: tuple
    covariant_rank: int
    has_upper: bool = False

    def comp(self, *indices) -> ScalarExpr:
        node = self.components
        for i in indices:
            node = node[i]
        return node

    @property
    def dim(self) -> int:
        return len(self.components)


def _grid(shape: Sequence[int], fill: Callable) -> tuple:
    def build(prefix, depth):
        if depth == len(shape):
            return fill(*prefix)
        return tuple(build(prefix + (i,), depth + 1) for i in range(shape[depth]))

    return build((), 0)


def tensor_from(shape: Sequence[int], fill: Callable,
                covariant_rank: int, has_upper: bool = False) -> TensorField:
    return TensorField(_grid(shape, fill), covariant_rank, has_upper)


def tensor_map(fn: Callable, *tensors: TensorField) -> TensorField:
    lead = tensors[0]
    rank = lead.covariant_rank + (1 if lead.has_upper else 0)
    shape = [lead.dim] * rank

    def fill(*idx):
        return fn(*[t.comp(*idx) for t in tensors])

    return tensor_from(shape, fill, lead.covariant_rank, lead.has_upper)


def tensor_sub(a: TensorField, b: TensorField) -> TensorField:
    return tensor_map(lambda x, y: ex.simplify_rational(x - y), a, b)


def tensor_zero_verdict(t: TensorField, rng: random.Random | None = None) -> Verdict:
    rank = t.covariant_rank + (1 if t.has_upper else 0)

    def walk(node, depth):
        if depth == rank:
            yield ex.is_identically_zero(node, rng)
        else:
            for child in node:
                yield from walk(child, depth + 1)

    return combine_verdicts(walk(t.components, 0))


# --------------------------------------------------------------------------
# loading


def from_christoffel(dim: int, coords: Sequence[str],
                     entries: dict, excluded: Sequence[ScalarExpr] = ()) -> AffineManifold:
    """Build a manifold from {(i, j, k): expr} with 0-based indices.

    Entries may be given for either or both of (i, j) and (j, i); duplicates
    must agree structurally or the data is rejected as asymmetric.
    """
    table: dict = {}
    for (i, j, k), value in entries.items():
        if not all(0 <= n < dim for n in (i, j, k)):
            raise ManifoldFormatError(f"index out of range in entry {(i, j, k)}")
        key = (min(i, j), max(i, j), k)
        if key in table and table[key] != value:
            if ex.is_identically_zero(table[key] - value) is Verdict.NONZERO:
                raise ManifoldFormatError(
                    f"asymmetric Christoffel entry at {(i + 1, j + 1, k + 1)}")
        else:
            table[key] = value

    def fill(i, j, k):
        return table.get((min(i, j), max(i, j), k), ex.ZERO)

    grid = _grid((dim, dim, dim), fill)
    return AffineManifold(dim, tuple(coords), grid, tuple(excluded))


def _parse_key(key: str) -> tuple:
    try:
        lower, upper = key.split("^")
        i, j = lower.split(",")
        return int(i) - 1, int(j) - 1, int(upper) - 1
    except ValueError:
        raise ManifoldFormatError(
            f"bad christoffel key {key!r}; expected 'i,j^k'") from None


def load_manifold(document: dict) -> AffineManifold:
    """Build a manifold from its JSON document form.

    Schema: ``{"dim": m, "coords": [...], "christoffel": {"i,j^k": "<expr>"},
    "excluded": ["<expr>", ...]}`` with 1-based keys; omitted symbols are zero.
    """
    try:
        dim = int(document["dim"])
    except (KeyError, TypeError, ValueError):
        raise ManifoldFormatError("missing or bad 'dim'") from None
    coords = document.get("coords") or [f"x{i + 1}" for i in range(dim)]
    if len(coords) != dim:
        raise ManifoldFormatError("coords length does not match dim")
    entries = {}
    for key, text in (document.get("christoffel") or {}).items():
        i, j, k = _parse_key(key)
        entries[(i, j, k)] = ex.parse_scalar(text, coords)
    excluded = tuple(ex.parse_scalar(text, coords)
                     for text in document.get("excluded") or [])
    return from_christoffel(dim, coords, entries, excluded)


def manifold_document(m: AffineManifold) -> dict:
    """Inverse of load_manifold, for report output."""
    christoffel = {}
    for i in range(m.dim):
        for j in range(i, m.dim):
            for k in range(m.dim):
                g = m.gamma[i][j][k]
                if g != ex.ZERO:
                    christoffel[f"{i + 1},{j + 1}^{k + 1}"] = ex.format_expr(g, m.coords)
    return {
        "dim": m.dim,
        "coords": list(m.coords),
        "christoffel": christoffel,
        "excluded": [ex.format_expr(g, m.coords) for g in m.excluded],
    }


# --------------------------------------------------------------------------
# curvature and friends


def curvature(m: AffineManifold) -> TensorField:
    """Full (1,3) curvature; antisymmetric in the first two lower slots."""
    dgamma = [[[[ex.differentiate(m.gamma[j][k][l], i) for l in range(m.dim)]
                for k in range(m.dim)] for j in range(m.dim)] for i in range(m.dim)]

    def fill(i, j, k, l):
        total = dgamma[i][j][k][l] - dgamma[j][i][k][l]
        for n in range(m.dim):
            total = total + m.gamma[i][n][l] * m.gamma[j][k][n] \
                - m.gamma[j][n][l] * m.gamma[i][k][n]
        return ex.simplify_rational(total)

    return tensor_from((m.dim,) * 4, fill, covariant_rank=3, has_upper=True)


@dataclass(frozen=True)
class RicciTensors:
    full: TensorField
    sym: TensorField
    alt: TensorField


def ricci(m: AffineManifold) -> RicciTensors:
    """Ricci tensor with its symmetric and antisymmetric parts.

    Computed from the traced curvature display directly; the trace-consistency
    with :func:`curvature` is a tested invariant rather than an assumption.
    """
    half = Fraction(1, 2)

    def rho_jk(j, k):
        total = ex.ZERO
        for i in range(m.dim):
            total = total + ex.differentiate(m.gamma[j][k][i], i) \
                - ex.differentiate(m.gamma[i][k][i], j)
            for n in range(m.dim):
                total = total + m.gamma[i][n][i] * m.gamma[j][k][n] \
                    - m.gamma[j][n][i] * m.gamma[i][k][n]
        return ex.simplify_rational(total)

    grid = [[rho_jk(j, k) for k in range(m.dim)] for j in range(m.dim)]
    full = TensorField(tuple(tuple(row) for row in grid), 2)
    sym = tensor_from((m.dim, m.dim),
                      lambda j, k: ex.simplify_rational(half * (grid[j][k] + grid[k][j])), 2)
    alt = tensor_from((m.dim, m.dim),
                      lambda j, k: ex.simplify_rational(half * (grid[j][k] - grid[k][j])), 2)
    return RicciTensors(full, sym, alt)


def hessian(m: AffineManifold, f: ScalarExpr) -> TensorField:
    df = [ex.differentiate(f, k) for k in range(m.dim)]

    def fill(i, j):
        total = ex.differentiate(df[j], i)
        for k in range(m.dim):
            total = total - m.gamma[i][j][k] * df[k]
        return ex.simplify_rational(total)

    return tensor_from((m.dim, m.dim), fill, 2)


def nabla_ricci(m: AffineManifold, r: RicciTensors | None = None) -> TensorField:
    """Covariant derivative of the full Ricci tensor, derivative slot first."""
    rho = (r or ricci(m)).full

    def fill(i, j, k):
        total = ex.differentiate(rho.comp(j, k), i)
        for l in range(m.dim):
            total = total - m.gamma[i][j][l] * rho.comp(l, k) \
                - m.gamma[i][k][l] * rho.comp(j, l)
        return ex.simplify_rational(total)

    return tensor_from((m.dim,) * 3, fill, 3)


def is_totally_symmetric(t: TensorField, rng: random.Random | None = None) -> Verdict:
    """True-ish verdict when every index permutation fixes the tensor."""
    if t.has_upper or t.covariant_rank not in (2, 3):
        raise ValueError("total symmetry is defined here for (0,2) and (0,3) tensors")
    verdicts = []
    n = t.dim
    if t.covariant_rank == 2:
        for i in range(n):
            for j in range(i + 1, n):
                verdicts.append(ex.is_identically_zero(t.comp(i, j) - t.comp(j, i), rng))
    else:
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    base = t.comp(i, j, k)
                    for perm in ((i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)):
                        verdicts.append(ex.is_identically_zero(base - t.comp(*perm), rng))
    return combine_verdicts(verdicts)


def apply_qe_operator(m: AffineManifold, mu: Fraction, f: ScalarExpr,
                      ricci_sym: TensorField | None = None) -> TensorField:
    """Residual H f - mu f rho_s; f solves the eigen-equation iff this is zero."""
    rho_s = ricci_sym if ricci_sym is not None else ricci(m).sym
    hess = hessian(m, f)
    mu = Fraction(mu)
    return tensor_map(lambda h, r: ex.simplify_rational(h - mu * f * r), hess, rho_s)


def is_affine_killing(m: AffineManifold, field: Sequence[ScalarExpr],
                      rng: random.Random | None = None) -> Verdict:
    """Verdict on the componentwise affine-Killing equation for a vector field."""
    if len(field) != m.dim:
        raise ValueError("vector field must have one component per coordinate")
    dfield = [[ex.differentiate(field[l], i) for l in range(m.dim)]
              for i in range(m.dim)]
    verdicts = []
    for i in range(m.dim):
        for j in range(i, m.dim):
            for k in range(m.dim):
                total = ex.differentiate(dfield[j][k], i)
                for l in range(m.dim):
                    total = total + field[l] * ex.differentiate(m.gamma[i][j][k], l) \
                        + dfield[i][l] * m.gamma[l][j][k] \
                        + dfield[j][l] * m.gamma[i][l][k] \
                        - dfield[l][k] * m.gamma[i][j][l]
                verdicts.append(ex.is_identically_zero(total, rng))
    return combine_verdicts(verdicts)


def flat_manifold(dim: int, coords: Sequence[str] | None = None) -> AffineManifold:
    names = tuple(coords) if coords else tuple(f"x{i + 1}" for i in range(dim))
    return from_christoffel(dim, names, {})
