"""Projective deformations of connections and flatness machinery.

A 1-form omega deforms a connection by G~_ij^k = G_ij^k + d_i^k w_j + d_j^k w_i
(this orientation is fixed once at the API boundary; the opposite convention
differs by omega -> -omega).  Closed omega = dg gives *strong* deformations,
which preserve unparametrized geodesics, the alternating Ricci tensor, and the
solution space at the distinguished eigenvalue -1/(m-1) via f -> e^g f.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from . import expr as ex
from . import geometry as geo
from . import qe_solver as qs
from .expr import DomainError, ScalarExpr, Verdict, combine_verdicts
from .poly import RationalFunc


class FlatnessError(DomainError):
    """A flat-chart operation was attempted outside its regime."""


# --------------------------------------------------------------------------
# deformations


@dataclass(frozen=True)
class ProjectiveChange:
    """A 1-form, optionally presented as dg for an explicit potential g."""

    omega: tuple
    potential: ScalarExpr | None = None

    def __post_init__(self):
        if self.potential is not None:
            for i, w in enumerate(self.omega):
                check = ex.is_identically_zero(
                    ex.differentiate(self.potential, i) - w)
                if check is Verdict.NONZERO:
                    raise ValueError(
                        f"potential derivative along x{i + 1} does not match omega")

    @classmethod
    def from_potential(cls, potential: ScalarExpr, dim: int) -> "ProjectiveChange":
        omega = tuple(ex.differentiate(potential, i) for i in range(dim))
        return cls(omega, potential)

    @property
    def dim(self) -> int:
        return len(self.omega)


def _as_change(omega, dim: int) -> ProjectiveChange:
    if isinstance(omega, ProjectiveChange):
        if omega.dim != dim:
            raise ValueError("1-form dimension does not match the manifold")
        return omega
    return ProjectiveChange(tuple(ex.as_expr(w) for w in omega))


def is_strong(change: ProjectiveChange) -> Verdict:
    """Closedness of the 1-form: d_i w_j - d_j w_i identically zero."""
    if change.potential is not None:
        return Verdict.ZERO
    verdicts = []
    for i in range(change.dim):
        for j in range(i + 1, change.dim):
            verdicts.append(ex.is_identically_zero(
                ex.differentiate(change.omega[j], i)
                - ex.differentiate(change.omega[i], j)))
    return combine_verdicts(verdicts)


def _pole_locus(omega: Sequence[ScalarExpr]) -> list:
    poles = []
    for w in omega:
        if not w.rational_only:
            continue
        rf = ex.to_ratfunc(w)
        if not rf.den.is_constant:
            poles.append(ex.from_ratfunc(RationalFunc(rf.den)))
    return poles


def deform(manifold: geo.AffineManifold, omega,
           extra_excluded: Sequence[ScalarExpr] = ()) -> geo.AffineManifold:
    """Deformed connection G + delta (x) omega + omega (x) delta.

    Poles of rational omega components join the excluded locus automatically;
    singularities of exp/log components must be passed via ``extra_excluded``.
    """
    change = _as_change(omega, manifold.dim)
    m = manifold.dim

    def fill(i, j, k):
        total = manifold.gamma[i][j][k]
        if i == k:
            total = total + change.omega[j]
        if j == k:
            total = total + change.omega[i]
        return ex.simplify_rational(total)

    grid = tuple(tuple(tuple(fill(i, j, k) for k in range(m))
                       for j in range(m)) for i in range(m))
    excluded = list(manifold.excluded) + list(extra_excluded)
    for pole in _pole_locus(change.omega):
        if all(pole != g for g in excluded):
            excluded.append(pole)
    return geo.AffineManifold(m, manifold.coords, grid, tuple(excluded))


def ricci_transform_residual(manifold: geo.AffineManifold,
                             potential: ScalarExpr) -> geo.TensorField:
    """rho_s(deformed) - rho_s + (m-1)(H g - dg (x) dg); identically zero always."""
    m = manifold.dim
    change = ProjectiveChange.from_potential(potential, m)
    deformed = deform(manifold, change)
    rho_before = geo.ricci(manifold).sym
    rho_after = geo.ricci(deformed).sym
    hess = geo.hessian(manifold, potential)
    dg = change.omega

    def fill(i, j):
        correction = (m - 1) * (hess.comp(i, j) - dg[i] * dg[j])
        return ex.simplify_rational(
            rho_after.comp(i, j) - rho_before.comp(i, j) + correction)

    return geo.tensor_from((m, m), fill, 2)


@dataclass(frozen=True)
class LiouvilleReport:
    ricci_preserved: Verdict
    hessian_condition: Verdict

    @property
    def consistent(self) -> bool:
        return bool(self.ricci_preserved) == bool(self.hessian_condition)


def liouville_check(manifold: geo.AffineManifold, potential: ScalarExpr,
                    rng: random.Random | None = None) -> LiouvilleReport:
    """Equivalent tests for a Ricci-preserving strong deformation by dg.

    The third characterization (e^{-g} has parallel Hessian) reduces to the
    Hessian condition through H e^{-g} = -e^{-g}(H g - dg (x) dg), so it is
    implied rather than retested in exact mode.
    """
    m = manifold.dim
    change = ProjectiveChange.from_potential(potential, m)
    deformed = deform(manifold, change)
    diff = geo.tensor_sub(geo.ricci(deformed).sym, geo.ricci(manifold).sym)
    ricci_preserved = geo.tensor_zero_verdict(diff, rng)
    hess = geo.hessian(manifold, potential)
    dg = change.omega
    condition = geo.tensor_from(
        (m, m), lambda i, j: ex.simplify_rational(hess.comp(i, j) - dg[i] * dg[j]), 2)
    hessian_condition = geo.tensor_zero_verdict(condition, rng)
    return LiouvilleReport(ricci_preserved, hessian_condition)


# --------------------------------------------------------------------------
# flatness


@dataclass(frozen=True)
class FlatnessReport:
    flat: bool
    dim: int
    space: qs.SolutionSpace
    surface_symmetry: Verdict | None  # total symmetry of rho and grad rho (m = 2)
    criteria_agree: bool | None


def strong_flatness_test(manifold: geo.AffineManifold, basepoint,
                         rng: random.Random | None = None) -> FlatnessReport:
    """Maximal solution space at -1/(m-1) detects strong projective flatness.

    On surfaces the independent symmetry criterion (rho and grad rho totally
    symmetric) is evaluated as well and the agreement of the two is reported.
    """
    mu_m = qs.distinguished_eigenvalue(manifold.dim)
    space = qs.solution_dimension(manifold, mu_m, basepoint)
    flat = space.dim == manifold.dim + 1
    surface_symmetry = None
    agree = None
    if manifold.dim == 2:
        parts = geo.ricci(manifold)
        sym_rho = geo.is_totally_symmetric(parts.full, rng)
        sym_nabla = geo.is_totally_symmetric(geo.nabla_ricci(manifold, parts), rng)
        surface_symmetry = combine_verdicts([sym_rho, sym_nabla])
        agree = bool(surface_symmetry) == flat
    return FlatnessReport(flat, space.dim, space, surface_symmetry, agree)


@dataclass(frozen=True)
class FlatChart:
    """Straightening chart built from jet-normalized solutions z^i = phi_i/phi_0."""

    basepoint: tuple
    jet_basis: tuple          # m+1 jets, Theta(phi_i) = e_i
    grid_points: tuple
    z_values: tuple           # per grid point, the m chart values
    z_jacobians: tuple        # per grid point, m x m matrix dz^i/dx^j
    base_z: tuple             # z evaluated at the basepoint via a closed path
    base_jacobian: tuple      # dz at the basepoint via a closed path

    @property
    def dim(self) -> int:
        return len(self.base_z)


def _chart_data_from_jets(jets, dim):
    """z^i = phi_i/phi_0 and its x-Jacobian from the m+1 transported jets."""
    phi0 = jets[0]
    if abs(phi0[0]) < 1e-12:
        raise FlatnessError("phi_0 vanishes on the grid; shrink the chart region")
    z = [jets[i][0] / phi0[0] for i in range(1, dim + 1)]
    jac = [[(jets[i][1 + j] * phi0[0] - jets[i][0] * phi0[1 + j]) / phi0[0] ** 2
            for j in range(dim)] for i in range(1, dim + 1)]
    return tuple(z), tuple(tuple(row) for row in jac)


def flat_chart(manifold: geo.AffineManifold, basepoint, grid,
               steps_per_segment: int = 1000) -> FlatChart:
    """Build the straightening chart near a basepoint of a maximal-dimension space.

    The solution jets with Theta(phi_i) = e_i are transported from the basepoint
    to every grid point; the base invariants (z = 0, dz = identity) are measured
    along a short out-and-back path so they reflect real transport error.
    """
    m = manifold.dim
    mu_m = qs.distinguished_eigenvalue(m)
    space = qs.solution_dimension(manifold, mu_m, basepoint)
    if space.dim != m + 1:
        raise FlatnessError(
            f"solution space has dimension {space.dim} < {m + 1}; no flat chart")
    # the kernel is the whole jet space, so the normalized basis is standard
    jet_basis = tuple(tuple(Fraction(1) if a == i else Fraction(0)
                            for a in range(m + 1)) for i in range(m + 1))
    rho_sym = geo.ricci(manifold).sym

    def transported(path):
        return [qs.transport_jet(manifold, mu_m, path, [float(c) for c in jet],
                                 steps_per_segment, ricci_sym=rho_sym)
                for jet in jet_basis]

    z_values = []
    z_jacobians = []
    base = tuple(float(c) for c in basepoint)
    for point in grid:
        jets = transported([base, tuple(float(c) for c in point)])
        z, jac = _chart_data_from_jets(jets, m)
        z_values.append(z)
        z_jacobians.append(jac)
    # out-and-back: a nondegenerate closed path measuring base-invariant error
    probe = tuple(c + (0.1 if i == 0 else 0.0) for i, c in enumerate(base))
    jets = transported([base, probe, base])
    base_z, base_jac = _chart_data_from_jets(jets, m)
    return FlatChart(base, jet_basis, tuple(tuple(p) for p in grid),
                     tuple(z_values), tuple(z_jacobians), base_z, base_jac)


def base_invariant_errors(chart: FlatChart) -> tuple:
    """(max |z(P)|, max |dz(P) - id|) from the closed-path measurement."""
    z_err = max(abs(v) for v in chart.base_z)
    jac_err = max(abs(chart.base_jacobian[i][j] - (1.0 if i == j else 0.0))
                  for i in range(chart.dim) for j in range(chart.dim))
    return z_err, jac_err


def chart_radius(manifold: geo.AffineManifold, basepoint,
                 fallback: float = 0.5) -> float:
    """Quarter of the (first-order) distance to the excluded locus."""
    if not manifold.excluded:
        return fallback
    point = [float(c) for c in basepoint]
    best = fallback * 4
    for g in manifold.excluded:
        value = abs(ex.evaluate(g, point, "float"))
        grad = math.sqrt(sum(
            ex.evaluate(ex.differentiate(g, i), point, "float") ** 2
            for i in range(manifold.dim)))
        if grad > 0:
            best = min(best, value / grad)
    return best / 4


def box_grid(basepoint, radius: float, per_axis: int = 3) -> list:
    """Axis-aligned grid of (2*per_axis+1)^m points around the basepoint."""
    base = [float(c) for c in basepoint]
    offsets = [radius * k / per_axis for k in range(-per_axis, per_axis + 1)]
    points = [()]
    for c in base:
        points = [p + (c + o,) for p in points for o in offsets]
    return points


# --------------------------------------------------------------------------
# geodesics


def _geodesic_rhs(manifold: geo.AffineManifold):
    compiled = {}
    for i in range(manifold.dim):
        for j in range(manifold.dim):
            for k in range(manifold.dim):
                g = manifold.gamma[i][j][k]
                if g != ex.ZERO:
                    compiled[(i, j, k)] = ex.compile_float(g)

    def rhs(x, v):
        acc = [0.0] * len(v)
        for (i, j, k), fn in compiled.items():
            acc[k] -= fn(x) * v[i] * v[j]
        return acc

    return rhs


def integrate_geodesic(manifold: geo.AffineManifold, start, velocity,
                       horizon: float, samples: int = 10,
                       steps: int = 400,
                       max_distance: float | None = None) -> list:
    """Sample points of the geodesic through (start, velocity) up to ``horizon``.

    Geodesics are affinely parametrized, so coordinate speed may grow; when
    ``max_distance`` is given, integration stops once the trajectory leaves
    that ball around the start.
    """
    rhs = _geodesic_rhs(manifold)
    x = [float(c) for c in start]
    origin = list(x)
    v = [float(c) * horizon for c in velocity]  # reparametrize to unit time
    h = 1.0 / steps
    trail = [tuple(x)]
    for _step in range(steps):
        def deriv(state):
            return state[1], rhs(state[0], state[1])

        k1x, k1v = deriv((x, v))
        k2x, k2v = deriv(([x[i] + h / 2 * k1x[i] for i in range(len(x))],
                          [v[i] + h / 2 * k1v[i] for i in range(len(x))]))
        k3x, k3v = deriv(([x[i] + h / 2 * k2x[i] for i in range(len(x))],
                          [v[i] + h / 2 * k2v[i] for i in range(len(x))]))
        k4x, k4v = deriv(([x[i] + h * k3x[i] for i in range(len(x))],
                          [v[i] + h * k3v[i] for i in range(len(x))]))
        x = [x[i] + h / 6 * (k1x[i] + 2 * k2x[i] + 2 * k3x[i] + k4x[i])
             for i in range(len(x))]
        v = [v[i] + h / 6 * (k1v[i] + 2 * k2v[i] + 2 * k3v[i] + k4v[i])
             for i in range(len(x))]
        if not all(math.isfinite(c) for c in x):
            raise DomainError("geodesic integration diverged")
        trail.append(tuple(x))
        if max_distance is not None and math.sqrt(
                sum((a - b) ** 2 for a, b in zip(x, origin))) > max_distance:
            break
    if len(trail) < 3:
        raise DomainError("geodesic left the region immediately")
    picks = sorted({round(i * (len(trail) - 1) / samples)
                    for i in range(samples + 1)})
    return [trail[i] for i in picks]


def _deviation_from_chord(points) -> float:
    first = points[0]
    last = points[-1]
    chord = [b - a for a, b in zip(first, last)]
    length = math.sqrt(sum(c * c for c in chord))
    if length == 0:
        raise DomainError("degenerate geodesic image")
    worst = 0.0
    for p in points[1:-1]:
        rel = [c - a for a, c in zip(first, p)]
        t = sum(r * c for r, c in zip(rel, chord)) / length ** 2
        perp = [r - t * c for r, c in zip(rel, chord)]
        worst = max(worst, math.sqrt(sum(c * c for c in perp)) / length)
    return worst


def geodesic_straightness(manifold: geo.AffineManifold, chart: FlatChart,
                          n_geodesics: int, rng: random.Random,
                          horizon: float | None = None,
                          steps_per_segment: int = 600) -> float:
    """Max normalized deviation of chart images of geodesics from straight chords.

    The horizon shrinks and the geodesic is retried when it leaves the chart
    region (phi_0 near zero or the excluded locus); persistent failure raises.
    """
    m = manifold.dim
    mu_m = qs.distinguished_eigenvalue(m)
    rho_sym = geo.ricci(manifold).sym
    base = chart.basepoint
    span = horizon if horizon is not None else max(
        abs(b - a) for p in chart.grid_points for a, b in zip(base, p))
    worst = 0.0
    for _ in range(n_geodesics):
        direction = [rng.uniform(-1, 1) for _ in range(m)]
        norm = math.sqrt(sum(c * c for c in direction)) or 1.0
        direction = [c / norm for c in direction]
        radius = span
        for _attempt in range(4):
            try:
                samples = integrate_geodesic(manifold, base, direction, radius,
                                             max_distance=radius)
                images = []
                for point in samples:
                    jets = [qs.transport_jet(manifold, mu_m, [base, point],
                                             [float(c) for c in jet],
                                             steps_per_segment, ricci_sym=rho_sym)
                            for jet in chart.jet_basis]
                    z, _ = _chart_data_from_jets(jets, m)
                    images.append(z)
                worst = max(worst, _deviation_from_chord(images))
                break
            except (DomainError, geo.ExcludedLocusError):
                radius /= 2
        else:
            raise FlatnessError("geodesic kept leaving the chart region")
    return worst


# --------------------------------------------------------------------------
# the Ricci-flat gauge


@dataclass(frozen=True)
class GaugeResult:
    manifold: geo.AffineManifold
    residual: geo.TensorField
    verdict: Verdict


def ricci_flat_gauge(manifold: geo.AffineManifold, potential: ScalarExpr,
                     rng: random.Random | None = None) -> GaugeResult:
    """Deform by dg so the symmetric Ricci tensor vanishes.

    Requires e^{-g} to solve the eigen-equation at -1/(m-1); the returned
    verdict certifies (exactly or by sampling) that rho_s of the deformed
    connection is zero.
    """
    mu_m = qs.distinguished_eigenvalue(manifold.dim)
    candidate = ex.exp(ex.neg(potential))
    residual = geo.apply_qe_operator(manifold, mu_m, candidate)
    if not geo.tensor_zero_verdict(residual, rng):
        raise DomainError(
            "e^{-g} does not solve the eigen-equation at -1/(m-1)")
    deformed = deform(manifold, ProjectiveChange.from_potential(potential, manifold.dim))
    rho_sym = geo.ricci(deformed).sym
    return GaugeResult(deformed, rho_sym, geo.tensor_zero_verdict(rho_sym, rng))


def ricci_flat_residual_numeric(manifold: geo.AffineManifold,
                                space: qs.SolutionSpace, points,
                                fd_step: float = 1e-4,
                                steps_per_segment: int = 400) -> float:
    """Numerically evaluate rho_s of the gauge built from a solver solution.

    A kernel jet with nonzero function part provides f by transport; second
    derivatives come from finite differences of the transported gradient, so
    the identity rho_s(deformed) = rho_s + (m-1) H f / f is measured, not
    assumed.  Returns the worst absolute component over the sample points.
    """
    m = manifold.dim
    mu_m = qs.distinguished_eigenvalue(m)
    jet = next((vec for vec in space.basis if abs(float(vec[0])) > 1e-9), None)
    if jet is None:
        raise DomainError("no solution with nonzero value at the basepoint")
    base = [float(c) for c in space.basepoint]
    rho_parts = geo.ricci(manifold)
    rho_fns = [[ex.compile_float(rho_parts.sym.comp(i, j)) for j in range(m)]
               for i in range(m)]
    gamma_fns = [[[ex.compile_float(manifold.gamma[i][j][k]) for k in range(m)]
                  for j in range(m)] for i in range(m)]

    def jet_at(x):
        return qs.transport_jet(manifold, mu_m, [tuple(base), tuple(x)],
                                [float(c) for c in jet], steps_per_segment,
                                ricci_sym=rho_parts.sym)

    worst = 0.0
    for point in points:
        x = [float(c) for c in point]
        center = jet_at(x)
        f_val = center[0]
        if abs(f_val) < 1e-9:
            raise DomainError(f"solution vanishes near {tuple(x)}")
        grad = center[1:]
        hess = [[0.0] * m for _ in range(m)]
        for i in range(m):
            up = list(x)
            dn = list(x)
            up[i] += fd_step
            dn[i] -= fd_step
            jet_up = jet_at(up)
            jet_dn = jet_at(dn)
            for j in range(m):
                d2 = (jet_up[1 + j] - jet_dn[1 + j]) / (2 * fd_step)
                hess[i][j] += d2
        for i in range(m):
            for j in range(m):
                covariant = hess[i][j] - sum(
                    gamma_fns[i][j][k](x) * grad[k] for k in range(m))
                value = rho_fns[i][j](x) + (m - 1) * covariant / f_val
                worst = max(worst, abs(value))
    return worst
