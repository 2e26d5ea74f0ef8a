"""Neutral-signature metrics on the cotangent bundle of an affine manifold.

The deformed extension of a connection with symbols G_ij^k and a symmetric
tensor Phi is the 2m-dimensional metric

    g = dx^i (.) dy_i + {Phi_ij - 2 y_k G_ij^k} dx^i (x) dx^j

(the mixed terms read as the symmetric pairing).  Its components are degree-1
polynomials in the fiber coordinates, so everything lives in the ordinary
expression type with the chart enlarged from m to 2m coordinates.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import expr as ex
from . import geometry as geo
from .expr import DomainError, ScalarExpr, Verdict


@dataclass(frozen=True)
class PseudoMetric:
    """Symmetric metric grid on a 2m chart (x^1..x^m, y_1..y_m)."""

    base_dim: int
    coords: tuple
    components: tuple
    block_extension: bool = False
    excluded: tuple = ()

    @property
    def n(self) -> int:
        return 2 * self.base_dim

    def comp(self, a: int, b: int) -> ScalarExpr:
        return self.components[a][b]


def _symmetric_or_raise(grid, size, what):
    for i in range(size):
        for j in range(i + 1, size):
            if ex.is_identically_zero(grid[i][j] - grid[j][i]) is Verdict.NONZERO:
                raise ValueError(f"{what} is not symmetric at ({i + 1},{j + 1})")


def deformed_extension(manifold: geo.AffineManifold,
                       phi: Sequence | None = None) -> PseudoMetric:
    """The neutral metric with xx-block Phi_ij - 2 y_k G_ij^k."""
    m = manifold.dim
    if phi is None:
        phi = [[ex.ZERO] * m for _ in range(m)]
    phi = [[ex.as_expr(entry) for entry in row] for row in phi]
    if len(phi) != m or any(len(row) != m for row in phi):
        raise ValueError(f"deformation tensor must be {m}x{m}")
    _symmetric_or_raise(phi, m, "deformation tensor")
    coords = tuple(manifold.coords) + tuple(f"y{i + 1}" for i in range(m))

    def fill(a, b):
        if a < m and b < m:
            total = phi[a][b]
            for k in range(m):
                total = total - 2 * ex.coord(m + k) * manifold.gamma[a][b][k]
            return ex.simplify_rational(total)
        if a < m <= b:
            return ex.ONE if b - m == a else ex.ZERO
        if b < m <= a:
            return ex.ONE if a - m == b else ex.ZERO
        return ex.ZERO

    grid = tuple(tuple(fill(a, b) for b in range(2 * m)) for a in range(2 * m))
    return PseudoMetric(m, coords, grid, block_extension=True,
                        excluded=manifold.excluded)


def metric_from_grid(base_dim: int, coords, grid,
                     excluded=()) -> PseudoMetric:
    grid = tuple(tuple(ex.as_expr(e) for e in row) for row in grid)
    _symmetric_or_raise(grid, 2 * base_dim, "metric")
    return PseudoMetric(base_dim, tuple(coords), grid, block_extension=False,
                        excluded=tuple(excluded))


# --------------------------------------------------------------------------
# inverse metric


def _determinant(grid, rows, cols):
    if len(rows) == 1:
        return grid[rows[0]][cols[0]]
    total = ex.ZERO
    top = rows[0]
    for position, col in enumerate(cols):
        minor = _determinant(grid, rows[1:], cols[:position] + cols[position + 1:])
        term = grid[top][col] * minor
        total = total + (term if position % 2 == 0 else ex.neg(term))
    return ex.simplify_rational(total)


def inverse_metric(metric: PseudoMetric) -> tuple:
    """Exact inverse component grid.

    Block extensions use the closed form (zero xx-block, identity pairing,
    yy-block the negative of the xx-block); general metrics go through the
    adjugate, rejecting an identically-degenerate determinant.
    """
    n = metric.n
    m = metric.base_dim
    if metric.block_extension:
        def fill(a, b):
            if a < m and b < m:
                return ex.ZERO
            if a < m <= b:
                return ex.ONE if b - m == a else ex.ZERO
            if b < m <= a:
                return ex.ONE if a - m == b else ex.ZERO
            return ex.simplify_rational(ex.neg(metric.comp(a - m, b - m)))

        return tuple(tuple(fill(a, b) for b in range(n)) for a in range(n))
    everything = tuple(range(n))
    det = _determinant(metric.components, everything, everything)
    if ex.is_identically_zero(det) is not Verdict.NONZERO:
        raise DomainError("metric is degenerate")
    out = []
    for a in range(n):
        row = []
        for b in range(n):
            rows = tuple(r for r in everything if r != b)
            cols = tuple(c for c in everything if c != a)
            cofactor = _determinant(metric.components, rows, cols)
            sign = 1 if (a + b) % 2 == 0 else -1
            row.append(ex.simplify_rational(sign * cofactor / det))
        out.append(tuple(row))
    return tuple(out)


def signature_at(metric: PseudoMetric, point) -> tuple:
    """(positive, negative) eigenvalue counts of the metric at a float point."""
    values = np.array([[ex.evaluate(metric.comp(a, b), point, "float")
                        for b in range(metric.n)] for a in range(metric.n)])
    eigenvalues = np.linalg.eigvalsh(values)
    return int(np.sum(eigenvalues > 0)), int(np.sum(eigenvalues < 0))


# --------------------------------------------------------------------------
# the Levi-Civita connection


@dataclass(frozen=True)
class MetricConnection:
    """Torsion-free metric connection of a pseudo-metric, as an affine chart."""

    metric: PseudoMetric
    manifold: geo.AffineManifold


def levi_civita(metric: PseudoMetric) -> MetricConnection:
    """Koszul symbols (1/2) g^{kl} (d_i g_jl + d_j g_il - d_l g_ij)."""
    n = metric.n
    inverse = inverse_metric(metric)
    half = Fraction(1, 2)
    # first derivatives d_i g_jl, computed once
    dgrid = [[[ex.differentiate(metric.comp(j, l), i) for l in range(n)]
              for j in range(n)] for i in range(n)]

    def fill(i, j, k):
        total = ex.ZERO
        for l in range(n):
            if inverse[k][l] == ex.ZERO:
                continue
            bracket = dgrid[i][j][l] + dgrid[j][i][l] - dgrid[l][i][j]
            if bracket == ex.ZERO:
                continue
            total = total + inverse[k][l] * bracket
        return ex.simplify_rational(half * total)

    grid = tuple(tuple(tuple(fill(i, j, k) for k in range(n))
                       for j in range(n)) for i in range(n))
    manifold = geo.AffineManifold(n, metric.coords, grid, metric.excluded)
    return MetricConnection(metric, manifold)


def metric_compatibility_residual(connection: MetricConnection) -> geo.TensorField:
    """d_k g_ij - G_ki^l g_lj - G_kj^l g_il, identically zero for Levi-Civita."""
    g = connection.metric
    conn = connection.manifold
    n = g.n

    def fill(k, i, j):
        total = ex.differentiate(g.comp(i, j), k)
        for l in range(n):
            total = total - conn.gamma[k][i][l] * g.comp(l, j) \
                - conn.gamma[k][j][l] * g.comp(i, l)
        return ex.simplify_rational(total)

    return geo.tensor_from((n, n, n), fill, 3)


# --------------------------------------------------------------------------
# pullback identities


@dataclass(frozen=True)
class ExtensionResiduals:
    hessian_defect: geo.TensorField   # H_g(pullback f) - pullback(H f)
    ricci_defect: geo.TensorField     # rho_g - 2 pullback(rho_s)
    null_gradient: ScalarExpr         # |d pullback f|^2_g


def extension_identities_residuals(manifold: geo.AffineManifold,
                                   phi, f: ScalarExpr,
                                   connection: MetricConnection | None = None
                                   ) -> ExtensionResiduals:
    """Residuals of the three pullback identities; all vanish for any Phi."""
    m = manifold.dim
    metric = deformed_extension(manifold, phi)
    conn = connection if connection is not None else levi_civita(metric)
    n = metric.n

    lifted_hessian = geo.hessian(conn.manifold, f)
    base_hessian = geo.hessian(manifold, f)

    def hess_fill(a, b):
        want = base_hessian.comp(a, b) if a < m and b < m else ex.ZERO
        return ex.simplify_rational(lifted_hessian.comp(a, b) - want)

    rho_total = geo.ricci(conn.manifold).full
    rho_base = geo.ricci(manifold).sym

    def ricci_fill(a, b):
        want = 2 * rho_base.comp(a, b) if a < m and b < m else ex.ZERO
        return ex.simplify_rational(rho_total.comp(a, b) - want)

    inverse = inverse_metric(metric)
    df = [ex.differentiate(f, a) for a in range(n)]
    norm = ex.ZERO
    for a in range(n):
        for b in range(n):
            if df[a] == ex.ZERO or df[b] == ex.ZERO:
                continue
            norm = norm + inverse[a][b] * df[a] * df[b]

    return ExtensionResiduals(
        geo.tensor_from((n, n), hess_fill, 2),
        geo.tensor_from((n, n), ricci_fill, 2),
        ex.simplify_rational(norm),
    )


# --------------------------------------------------------------------------
# quasi-Einstein verification


def quasi_einstein_residual(metric: PseudoMetric, psi: ScalarExpr, mu, lam,
                            connection: MetricConnection | None = None
                            ) -> geo.TensorField:
    """Component grid of H psi + rho - mu dpsi (x) dpsi - lambda g."""
    mu = Fraction(mu)
    lam = Fraction(lam)
    conn = connection if connection is not None else levi_civita(metric)
    n = metric.n
    hess = geo.hessian(conn.manifold, psi)
    rho = geo.ricci(conn.manifold).full
    dpsi = [ex.differentiate(psi, a) for a in range(n)]

    def fill(a, b):
        total = hess.comp(a, b) + rho.comp(a, b) \
            - mu * dpsi[a] * dpsi[b] - lam * metric.comp(a, b)
        return ex.simplify_rational(total)

    return geo.tensor_from((n, n), fill, 2)


def soliton_potential(f: ScalarExpr, eigenvalue) -> tuple:
    """Potential and equation parameter for a solution of the eigen-equation.

    A positive f with H f = mu_a f rho_s yields psi = -(2/mu_a) log f solving
    the quasi-Einstein equation on the extension with parameter mu_a / 2 and
    lambda = 0.
    """
    mu_a = Fraction(eigenvalue)
    if mu_a == 0:
        raise ValueError("the change of variables needs a nonzero eigenvalue")
    psi = ex.simplify_rational(ex.mul(ex.const(Fraction(-2, 1) / mu_a), ex.log(f)))
    return psi, mu_a / 2


def sample_residual(tensor: geo.TensorField, points, mode: str = "float") -> float:
    """Worst absolute component value over the sample points."""
    worst = 0.0
    rank = tensor.covariant_rank + (1 if tensor.has_upper else 0)

    def walk(node, depth):
        nonlocal worst
        if depth == rank:
            for p in points:
                worst = max(worst, abs(float(ex.evaluate(node, p, mode))))
        else:
            for child in node:
                walk(child, depth + 1)

    walk(tensor.components, 0)
    return worst


def random_symmetric_phi(dim: int, rng: random.Random, degree: int = 1) -> list:
    """Random polynomial deformation tensor for property sweeps."""

    def entry():
        total = ex.const(Fraction(rng.randint(-3, 3), rng.randint(1, 2)))
        for _ in range(degree):
            total = total + ex.const(Fraction(rng.randint(-2, 2), 1)) \
                * ex.coord(rng.randrange(dim))
        return total

    grid = [[ex.ZERO] * dim for _ in range(dim)]
    for i in range(dim):
        for j in range(i, dim):
            value = entry()
            grid[i][j] = value
            grid[j][i] = value
    return grid
