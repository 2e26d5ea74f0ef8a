"""Jet-space solver for the affine quasi-Einstein eigen-equation.

The second-order equation ``H f = mu f rho_s`` is rewritten as the first-order
system ``d_i u = A_i u`` on the jet vector ``u = (f, d_1 f, ..., d_m f)``.
Frobenius integrability produces linear constraints on admissible jets; the
constraints are prolonged until their rank at the basepoint stabilizes, and the
kernel of the evaluated stack is the space of admissible initial jets.  Jets
are evaluated along paths by fixed-step classical Runge-Kutta transport.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from . import expr as ex
from . import geometry as geo
from .linalg import RowReducer, float_rank_kernel


def distinguished_eigenvalue(dim: int) -> Fraction:
    """The eigenvalue -1/(m-1) invariant under strong projective deformation."""
    return Fraction(-1, dim - 1)


# --------------------------------------------------------------------------
# first-order form


@dataclass(frozen=True)
class JetSystem:
    """Matrices A_i with d_i u = A_i u for the jet u = (f, d_1 f, ..., d_m f)."""

    manifold: geo.AffineManifold
    mu: Fraction
    matrices: tuple  # one (m+1)x(m+1) grid of ScalarExpr per coordinate

    @property
    def dim(self) -> int:
        return self.manifold.dim

    @property
    def jet_size(self) -> int:
        return self.manifold.dim + 1

    @property
    def mu_m(self) -> Fraction:
        return distinguished_eigenvalue(self.manifold.dim)

    @property
    def rational_only(self) -> bool:
        return all(entry.rational_only
                   for grid in self.matrices for row in grid for entry in row)


def build_jet_system(manifold: geo.AffineManifold, mu,
                     ricci_sym: geo.TensorField | None = None) -> JetSystem:
    """First-order form of the eigen-equation: d_i d_j f = G_ij^k d_k f + mu rho_s_ij f."""
    mu = Fraction(mu)
    rho_s = ricci_sym if ricci_sym is not None else geo.ricci(manifold).sym
    m = manifold.dim
    matrices = []
    for i in range(m):
        grid = []
        row0 = [ex.ZERO] * (m + 1)
        row0[1 + i] = ex.ONE
        grid.append(tuple(row0))
        for j in range(m):
            row = [ex.simplify_rational(mu * rho_s.comp(i, j))]
            for k in range(m):
                row.append(manifold.gamma[i][j][k])
            grid.append(tuple(row))
        matrices.append(tuple(grid))
    return JetSystem(manifold, mu, tuple(matrices))


# --------------------------------------------------------------------------
# constraints


@dataclass(frozen=True)
class ConstraintRow:
    entries: tuple  # jet_size ScalarExpr; the constraint is entries . u = 0
    generation: int

    @property
    def is_structurally_zero(self) -> bool:
        return all(e is ex.ZERO or e == ex.ZERO for e in self.entries)


@dataclass
class ConstraintStack:
    jet_size: int
    rows: list

    def effective_rows(self) -> list:
        return [r for r in self.rows if not r.is_structurally_zero]

    def latest_generation(self) -> int:
        return max((r.generation for r in self.rows), default=0)


def _commutator_rows(system: JetSystem, i: int, j: int):
    """Rows of d_i A_j - d_j A_i + A_j A_i - A_i A_j."""
    a_i = system.matrices[i]
    a_j = system.matrices[j]
    n = system.jet_size
    for a in range(n):
        entries = []
        for b in range(n):
            total = ex.differentiate(a_j[a][b], i) - ex.differentiate(a_i[a][b], j)
            for s in range(n):
                total = total + a_j[a][s] * a_i[s][b] - a_i[a][s] * a_j[s][b]
            entries.append(ex.simplify_rational(total))
        yield tuple(entries)


def integrability_constraints(system: JetSystem) -> ConstraintStack:
    """Generation-0 stack: curvature of the jet system annihilates solution jets."""
    rows = []
    for i in range(system.dim):
        for j in range(i + 1, system.dim):
            for entries in _commutator_rows(system, i, j):
                rows.append(ConstraintRow(entries, 0))
    return ConstraintStack(system.jet_size, rows)


def _prolong_row(system: JetSystem, entries: tuple, direction: int) -> tuple:
    """d_i c + c . A_i, valid on solution jets whenever c . u = 0 is."""
    a = system.matrices[direction]
    n = system.jet_size
    new = []
    for b in range(n):
        total = ex.differentiate(entries[b], direction)
        for s in range(n):
            if entries[s] == ex.ZERO or a[s][b] == ex.ZERO:
                continue
            total = total + entries[s] * a[s][b]
        new.append(ex.simplify_rational(total))
    return tuple(new)


def prolong(system: JetSystem, stack: ConstraintStack,
            rows: Sequence[ConstraintRow] | None = None) -> ConstraintStack:
    """Append the derivative of every (given) row along every direction."""
    source = stack.effective_rows() if rows is None else rows
    generation = stack.latest_generation() + 1
    new_rows = list(stack.rows)
    seen = {r.entries for r in stack.rows}
    for row in source:
        for i in range(system.dim):
            entries = _prolong_row(system, row.entries, i)
            if all(e == ex.ZERO for e in entries) or entries in seen:
                continue
            seen.add(entries)
            new_rows.append(ConstraintRow(entries, generation))
    return ConstraintStack(stack.jet_size, new_rows)


# --------------------------------------------------------------------------
# dimension at a basepoint


@dataclass(frozen=True)
class SolutionSpace:
    """Admissible initial jets at a basepoint: dim + final rank = m + 1."""

    basepoint: tuple
    mu: Fraction
    dim: int
    basis: tuple  # jet vectors spanning the kernel of the evaluated stack
    rank_history: tuple
    stabilized: bool
    exact: bool


def _is_exact_point(point) -> bool:
    return all(not isinstance(c, float) for c in point)


def solution_dimension(manifold: geo.AffineManifold, mu, basepoint,
                       ricci_sym: geo.TensorField | None = None,
                       max_generations: int | None = None) -> SolutionSpace:
    """Dimension and jet basis of the local solution space at ``basepoint``.

    Prolongation stops once the evaluated rank is unchanged across two
    consecutive generations (or the kernel is already empty); hitting the
    generation cap without that is reported via ``stabilized=False``.
    """
    manifold.check_point(basepoint)
    system = build_jet_system(manifold, mu, ricci_sym)
    n = system.jet_size
    cap = max_generations if max_generations is not None else 2 * manifold.dim + 6
    exact = system.rational_only and _is_exact_point(basepoint)
    point = tuple(Fraction(c) for c in basepoint) if exact \
        else tuple(float(c) for c in basepoint)

    def eval_row(row: ConstraintRow):
        mode = "exact" if exact else "float"
        return [ex.evaluate(e, point, mode) for e in row.entries]

    stack = integrability_constraints(system)
    latest = stack.effective_rows()
    reducer = RowReducer(n) if exact else None
    float_rows: list = []

    def current_rank() -> int:
        if exact:
            return reducer.rank
        rank, _ = float_rank_kernel(float_rows, n)
        return rank

    for row in latest:
        values = eval_row(row)
        if exact:
            reducer.add_row(values)
        else:
            float_rows.append(values)
    history = [current_rank()]
    stabilized = False

    generation = 0
    while True:
        if history[-1] == n:
            stabilized = True
            break
        if not latest:
            stabilized = True
            break
        if len(history) >= 3 and history[-1] == history[-2] == history[-3]:
            stabilized = True
            break
        if generation >= cap:
            break
        generation += 1
        before = len(stack.rows)
        stack = prolong(system, stack, rows=latest)
        latest = [r for r in stack.rows[before:]]
        for row in latest:
            values = eval_row(row)
            if exact:
                reducer.add_row(values)
            else:
                float_rows.append(values)
        history.append(current_rank())

    if exact:
        basis = tuple(reducer.kernel_basis())
        rank = reducer.rank
    else:
        rank, kernel = float_rank_kernel(float_rows, n)
        basis = tuple(kernel)
    return SolutionSpace(
        basepoint=tuple(point),
        mu=Fraction(mu),
        dim=n - rank,
        basis=basis,
        rank_history=tuple(history),
        stabilized=stabilized,
        exact=exact,
    )


def in_solution_space(space: SolutionSpace, jet, tol: float = 1e-8) -> bool:
    """Is the given jet in the span of the computed kernel basis?"""
    if space.exact and _is_exact_point(jet):
        reducer = RowReducer(len(jet))
        for vec in space.basis:
            reducer.add_row(vec)
        return not reducer.add_row([Fraction(c) for c in jet])
    if not space.basis:
        return all(abs(float(c)) <= tol for c in jet)
    import numpy as np

    matrix = np.asarray([[float(c) for c in vec] for vec in space.basis], float).T
    target = np.asarray([float(c) for c in jet], float)
    coeffs, *_ = np.linalg.lstsq(matrix, target, rcond=None)
    return bool(np.linalg.norm(matrix @ coeffs - target) <= tol * max(1.0, np.linalg.norm(target)))


def solution_report(space: SolutionSpace) -> dict:
    """JSON-ready report document."""

    def as_text(value):
        return str(Fraction(value)) if not isinstance(value, float) else repr(value)

    return {
        "mu": str(space.mu),
        "basepoint": [as_text(c) for c in space.basepoint],
        "dim": space.dim,
        "rank_history": list(space.rank_history),
        "stabilized": space.stabilized,
        "basis_jets": [[as_text(c) for c in vec] for vec in space.basis],
    }


# --------------------------------------------------------------------------
# transport


class _CompiledSystem:
    """Float-compiled sparse A_i matrices plus excluded-locus guards."""

    def __init__(self, system: JetSystem):
        self.dim = system.dim
        self.jet_size = system.jet_size
        self.entries = []  # per direction: list of (a, b, fn)
        for i in range(system.dim):
            sparse = []
            for a in range(system.jet_size):
                for b in range(system.jet_size):
                    e = system.matrices[i][a][b]
                    if e != ex.ZERO:
                        sparse.append((a, b, ex.compile_float(e)))
            self.entries.append(sparse)
        self.guards = [ex.compile_float(g) for g in system.manifold.excluded]

    def check_guards(self, x, previous=None):
        signs = []
        for fn in self.guards:
            value = fn(x)
            if value == 0.0:
                raise geo.ExcludedLocusError(f"path touched the excluded locus at {tuple(x)}")
            signs.append(value > 0.0)
        if previous is not None and signs != previous:
            raise geo.ExcludedLocusError(f"path crossed the excluded locus near {tuple(x)}")
        return signs

    def derivative(self, x, velocity, u):
        du = [0.0] * self.jet_size
        for i in range(self.dim):
            v = velocity[i]
            if v == 0.0:
                continue
            for a, b, fn in self.entries[i]:
                du[a] += v * fn(x) * u[b]
        return du


def transport_jet(manifold: geo.AffineManifold, mu, path, u0,
                  steps_per_segment: int = 1000,
                  ricci_sym: geo.TensorField | None = None):
    """Integrate d_t u = velocity^i A_i u along a polyline with classical RK4."""
    if len(path) < 2:
        return [float(c) for c in u0]
    system = build_jet_system(manifold, mu, ricci_sym)
    compiled = _CompiledSystem(system)
    if len(u0) != system.jet_size:
        raise ValueError(f"jet must have {system.jet_size} components")
    u = [float(c) for c in u0]
    signs = compiled.check_guards([float(c) for c in path[0]])
    for start, stop in zip(path, path[1:]):
        p = [float(c) for c in start]
        velocity = [float(b) - float(a) for a, b in zip(start, stop)]
        h = 1.0 / steps_per_segment
        for step in range(steps_per_segment):
            t0 = step * h
            x0 = [p[i] + t0 * velocity[i] for i in range(len(p))]
            xm = [p[i] + (t0 + h / 2) * velocity[i] for i in range(len(p))]
            x1 = [p[i] + (t0 + h) * velocity[i] for i in range(len(p))]
            signs = compiled.check_guards(x1, signs)
            k1 = compiled.derivative(x0, velocity, u)
            k2 = compiled.derivative(xm, velocity, [u[a] + h / 2 * k1[a] for a in range(len(u))])
            k3 = compiled.derivative(xm, velocity, [u[a] + h / 2 * k2[a] for a in range(len(u))])
            k4 = compiled.derivative(x1, velocity, [u[a] + h * k3[a] for a in range(len(u))])
            u = [u[a] + h / 6 * (k1[a] + 2 * k2[a] + 2 * k3[a] + k4[a])
                 for a in range(len(u))]
            if not all(math.isfinite(v) for v in u):
                raise ex.DomainError("transport produced non-finite jet values")
    return u


def holonomy_defect(manifold: geo.AffineManifold, mu, loop, u0,
                    steps_per_segment: int = 1000,
                    ricci_sym: geo.TensorField | None = None) -> float:
    """Norm of (transport around the closed loop) - identity applied to u0."""
    first = [float(c) for c in loop[0]]
    last = [float(c) for c in loop[-1]]
    if any(abs(a - b) > 0.0 for a, b in zip(first, last)):
        raise ValueError("loop is not closed")
    transported = transport_jet(manifold, mu, loop, u0, steps_per_segment, ricci_sym)
    return math.sqrt(sum((t - float(u)) ** 2 for t, u in zip(transported, u0)))
