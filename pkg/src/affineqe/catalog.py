"""Catalog of locally homogeneous models with known solution-space dimensions.

Two surface families carry the catalog: constant-symbol charts ("type A") and
wall charts with symbols C/x1 on x1 > 0 ("type B"), plus two 3-dimensional
constant-symbol models with worked dimension tables.  ``expected_dimension``
evaluates the published case analysis literally and therefore applies only to
parameters already in the stated normal forms; anything else is classified by
the solver alone (``crosscheck`` / ``sweep``).
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from . import expr as ex
from . import geometry as geo
from . import qe_solver as qs
from .expr import AffineQEError, Verdict
from .linalg import exact_rank


class RegimeError(AffineQEError):
    """Model parameters are outside the regime an operation is defined for."""


def q(value) -> Fraction:
    return Fraction(value)


# --------------------------------------------------------------------------
# surface families


@dataclass(frozen=True)
class TypeASurface:
    """Constant Christoffel symbols on the plane."""

    c11_1: Fraction
    c11_2: Fraction
    c12_1: Fraction
    c12_2: Fraction
    c22_1: Fraction
    c22_2: Fraction

    def constants(self) -> dict:
        return {(0, 0, 0): self.c11_1, (0, 0, 1): self.c11_2,
                (0, 1, 0): self.c12_1, (0, 1, 1): self.c12_2,
                (1, 1, 0): self.c22_1, (1, 1, 1): self.c22_2}

    def constants_dict(self) -> dict:
        return {name: getattr(self, name) for name in _SIX}

    def manifold(self) -> geo.AffineManifold:
        entries = {idx: ex.const(v) for idx, v in self.constants().items() if v}
        return geo.from_christoffel(2, ("x1", "x2"), entries)


@dataclass(frozen=True)
class TypeBSurface:
    """Symbols C_ij^k / x1 on the half-plane x1 > 0."""

    c11_1: Fraction
    c11_2: Fraction
    c12_1: Fraction
    c12_2: Fraction
    c22_1: Fraction
    c22_2: Fraction

    def constants(self) -> dict:
        return {(0, 0, 0): self.c11_1, (0, 0, 1): self.c11_2,
                (0, 1, 0): self.c12_1, (0, 1, 1): self.c12_2,
                (1, 1, 0): self.c22_1, (1, 1, 1): self.c22_2}

    def constants_dict(self) -> dict:
        return {name: getattr(self, name) for name in _SIX}

    def manifold(self) -> geo.AffineManifold:
        x1 = ex.coord(0)
        entries = {idx: ex.const(v) / x1
                   for idx, v in self.constants().items() if v}
        return geo.from_christoffel(2, ("x1", "x2"), entries, excluded=[x1])

    def is_also_constant_type(self) -> bool:
        return not (self.c12_1 or self.c22_1 or self.c22_2)


@dataclass(frozen=True)
class Family3dParams:
    """Parameters (x, y, z, w) of the degenerate-Ricci 3-dimensional family."""

    x: Fraction
    y: Fraction
    z: Fraction
    w: Fraction

    def manifold(self) -> geo.AffineManifold:
        c = self
        entries = {
            (0, 0, 0): c.z, (0, 1, 0): q(1), (0, 2, 0): c.x,
            (1, 1, 1): q(1), (1, 2, 0): c.x, (2, 2, 1): c.y, (2, 2, 2): c.w,
        }
        return geo.from_christoffel(
            3, ("x1", "x2", "x3"),
            {idx: ex.const(v) for idx, v in entries.items() if v})


def exp3d_model() -> geo.AffineManifold:
    """The 3-dimensional constant model with nondegenerate Ricci and
    solution span {exp(3 x3), x1 exp(3 x3)} at its special eigenvalue."""
    return geo.from_christoffel(3, ("x1", "x2", "x3"), {
        (0, 1, 2): ex.const(1),
        (0, 2, 0): ex.const(3),
        (1, 2, 1): ex.const(4),
        (2, 2, 2): ex.const(5),
    })


def exp_surface(c11_2=0, c12_2=0, c22_2=0) -> TypeASurface:
    """Normal form with first symbol row (1,0,0); exp(x1) is a parallel-Hessian
    function and the cubed-Ricci scalar invariant is defined on it."""
    return TypeASurface(q(1), q(c11_2), q(0), q(c12_2), q(0), q(c22_2))


def parallel_surface(c11_2=0, c12_2=0, c22_2=0) -> TypeASurface:
    """Normal form with vanishing first symbol row; x1 is parallel-Hessian and
    the Ricci tensor is parallel."""
    return TypeASurface(q(0), q(c11_2), q(0), q(c12_2), q(0), q(c22_2))


# wall-chart normal forms (all on x1 > 0)


def wall_dim1_surface(c=1, c11_1=0, c11_2=0, c12_2=0) -> TypeBSurface:
    """C_22^1 = 0 and C_22^2 = C_12^1 = c != 0: a single solution line at the
    distinguished surface eigenvalue."""
    if not q(c):
        raise RegimeError("c must be nonzero")
    return TypeBSurface(q(c11_1), q(c11_2), q(c), q(c12_2), q(0), q(c))


def wall_dim1_mixed_surface(eps=1, c11_2=1, c12_2=0) -> TypeBSurface:
    """Second dimension-one normal form; sign eps picks the +-branch."""
    if eps not in (1, -1):
        raise RegimeError("eps must be +1 or -1")
    if not q(c11_2):
        raise RegimeError("c11_2 must be nonzero")
    return TypeBSurface(1 + 2 * q(c12_2) + eps * q(c11_2) ** 2, q(c11_2),
                        q(0), q(c12_2), q(eps), 2 * eps * q(c11_2))


def wall_projflat_surface(eps=1, c12_2=1) -> TypeBSurface:
    """Strongly projectively flat wall chart that is not a constant chart."""
    if eps not in (1, -1):
        raise RegimeError("eps must be +1 or -1")
    if not q(c12_2):
        raise RegimeError("c12_2 must be nonzero")
    return TypeBSurface(1 + 2 * q(c12_2), q(0), q(0), q(c12_2), q(eps), q(0))


def wall_eigen_surface(eps=1, c11_1=0, c11_2=0, c12_2=0) -> TypeBSurface:
    """Family whose nontrivial eigenvalue is pinned by its constants."""
    if eps not in (1, -1):
        raise RegimeError("eps must be +1 or -1")
    return TypeBSurface(q(c11_1), q(c11_2), q(0), q(c12_2),
                        q(eps), 2 * eps * q(c11_2))


def wall_eigen_value(surface: TypeBSurface) -> Fraction:
    """The pinned eigenvalue of a wall_eigen_surface instance."""
    eps = 1 if surface.c22_1 > 0 else -1
    delta = 1 - surface.c11_1 + surface.c12_2
    if delta == 0:
        raise RegimeError("degenerate family member: 1 - C_11^1 + C_12^2 = 0")
    return (1 + 2 * surface.c12_2 + eps * 2 * surface.c11_2 ** 2
            - (surface.c11_1 - surface.c12_2) ** 2) / delta ** 2


def wall_eigen_pair_surface(eps=1, c12_2=1) -> TypeBSurface:
    """Two-dimensional solution space at the eigenvalue C_12^2 / 2."""
    if eps not in (1, -1):
        raise RegimeError("eps must be +1 or -1")
    if not q(c12_2):
        raise RegimeError("c12_2 must be nonzero")
    return TypeBSurface(-1 + q(c12_2), q(0), q(0), q(c12_2), q(eps), q(0))


def wall_eigen_pair_mixed_surface(eps=1, c11_2=1) -> TypeBSurface:
    """Second two-dimensional normal form; eigenvalue -(3+-8c^2)/(4+-8c^2)."""
    if eps not in (1, -1):
        raise RegimeError("eps must be +1 or -1")
    if not q(c11_2):
        raise RegimeError("c11_2 must be nonzero")
    c = q(c11_2)
    return TypeBSurface(-Fraction(1, 2) * (5 + eps * 16 * c ** 2), c,
                        q(0), -Fraction(1, 2) * (3 + eps * 8 * c ** 2),
                        q(eps), 2 * eps * c)


def wall_eigen_pair_mixed_value(surface: TypeBSurface) -> Fraction:
    eps = 1 if surface.c22_1 > 0 else -1
    c = surface.c11_2
    return -(3 + eps * 8 * c ** 2) / (4 + eps * 8 * c ** 2)


# --------------------------------------------------------------------------
# generic entry points


_SURFACE_KINDS = ("typeA", "typeB")
MODEL_KINDS = ("typeA", "typeB", "exp3d", "family3d", "expSurface",
               "parallelSurface", "wallDim1", "wallDim1Mixed", "wallProjFlat",
               "wallEigen", "wallEigenPair", "wallEigenPairMixed")

_SIX = ("c11_1", "c11_2", "c12_1", "c12_2", "c22_1", "c22_2")


def _six_constants(params: dict) -> list:
    try:
        return [q(params[name]) for name in _SIX]
    except KeyError as err:
        raise RegimeError(f"missing surface constant {err}") from None


def model_for(kind: str, params: dict | None = None):
    """Catalog object (surface record or manifold) for a kind/params pair."""
    params = params or {}
    if kind == "typeA":
        return TypeASurface(*_six_constants(params))
    if kind == "typeB":
        return TypeBSurface(*_six_constants(params))
    if kind == "exp3d":
        return exp3d_model()
    if kind == "family3d":
        try:
            return Family3dParams(q(params["x"]), q(params["y"]),
                                  q(params["z"]), q(params["w"]))
        except KeyError as err:
            raise RegimeError(f"missing family parameter {err}") from None
    builders = {
        "expSurface": exp_surface,
        "parallelSurface": parallel_surface,
        "wallDim1": wall_dim1_surface,
        "wallDim1Mixed": wall_dim1_mixed_surface,
        "wallProjFlat": wall_projflat_surface,
        "wallEigen": wall_eigen_surface,
        "wallEigenPair": wall_eigen_pair_surface,
        "wallEigenPairMixed": wall_eigen_pair_mixed_surface,
    }
    if kind not in builders:
        raise RegimeError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")
    return builders[kind](**params)


def build_model(kind: str, params: dict | None = None) -> geo.AffineManifold:
    obj = model_for(kind, params)
    return obj if isinstance(obj, geo.AffineManifold) else obj.manifold()


def default_basepoint(manifold: geo.AffineManifold) -> tuple:
    if manifold.excluded:
        return (q(1),) + (q(0),) * (manifold.dim - 1)
    return (q(0),) * manifold.dim


# --------------------------------------------------------------------------
# expected dimensions


@dataclass(frozen=True)
class Prediction:
    kind: str  # "exact" | "at-least" | "not-covered"
    value: int | None = None

    @classmethod
    def exact(cls, value: int) -> "Prediction":
        return cls("exact", value)

    @classmethod
    def at_least(cls, value: int) -> "Prediction":
        return cls("at-least", value)

    def matches(self, computed: int) -> bool:
        if self.kind == "exact":
            return computed == self.value
        if self.kind == "at-least":
            return computed >= self.value
        return True

    def __str__(self) -> str:
        if self.kind == "exact":
            return str(self.value)
        if self.kind == "at-least":
            return f">={self.value}"
        return "not-covered"


NOT_COVERED = Prediction("not-covered")


def _ricci_constants_a(s: TypeASurface):
    rho = geo.ricci(s.manifold()).full
    point = (q(0), q(0))
    return [[ex.evaluate(rho.comp(i, j), point) for j in range(2)] for i in range(2)]


def _ricci_constants_b(s: TypeBSurface):
    # every component is const / x1^2; evaluate at x1 = 1 to read the constants
    rho = geo.ricci(s.manifold())
    point = (q(1), q(0))
    full = [[ex.evaluate(rho.full.comp(i, j), point) for j in range(2)] for i in range(2)]
    sym = [[ex.evaluate(rho.sym.comp(i, j), point) for j in range(2)] for i in range(2)]
    return full, sym


def _expected_type_a(s: TypeASurface, mu: Fraction) -> Prediction:
    rho = _ricci_constants_a(s)
    rank = exact_rank(rho, 2)
    if rank == 0:  # flat plane: parallel-Hessian functions are the affine ones
        return Prediction.exact(3)
    if mu == -1:
        return Prediction.exact(3)
    if mu == 0:
        first_row = (s.c11_1, s.c12_1, s.c22_1)
        if first_row in ((q(1), q(0), q(0)), (q(0), q(0), q(0))):
            return Prediction.exact(2)
        return Prediction.exact(1)
    return Prediction.exact(2 if rank == 1 else 0)


def _matches_wall_dim1_mixed(s: TypeBSurface, eps: int) -> bool:
    return (s.c22_1 == eps and s.c12_1 == 0
            and s.c22_2 == 2 * eps * s.c11_2 and s.c22_2 != 0
            and s.c11_1 == 1 + 2 * s.c12_2 + eps * s.c11_2 ** 2)


def _matches_wall_projflat(s: TypeBSurface, eps: int) -> bool:
    return (s.c11_1 == 1 + 2 * s.c12_2 and s.c11_2 == 0 and s.c12_1 == 0
            and s.c12_2 != 0 and s.c22_1 == eps and s.c22_2 == 0)


def _matches_wall_eigen(s: TypeBSurface, eps: int, mu: Fraction) -> bool:
    if not (s.c22_1 == eps and s.c12_1 == 0 and s.c22_2 == 2 * eps * s.c11_2):
        return False
    delta = 1 - s.c11_1 + s.c12_2
    if delta == 0:
        return False
    pinned = (1 + 2 * s.c12_2 + eps * 2 * s.c11_2 ** 2
              - (s.c11_1 - s.c12_2) ** 2) / delta ** 2
    return mu == pinned


def _matches_wall_eigen_pair(s: TypeBSurface, eps: int, mu: Fraction) -> bool:
    return (s.c11_1 == -1 + s.c12_2 and s.c11_2 == 0 and s.c12_1 == 0
            and s.c22_1 == eps and s.c22_2 == 0
            and s.c12_2 != 0 and mu == Fraction(s.c12_2, 2))


def _matches_wall_eigen_pair_mixed(s: TypeBSurface, eps: int, mu: Fraction) -> bool:
    c = s.c11_2
    if c == 0:
        return False
    if not (s.c11_1 == -Fraction(1, 2) * (5 + eps * 16 * c ** 2)
            and s.c12_1 == 0
            and s.c12_2 == -Fraction(1, 2) * (3 + eps * 8 * c ** 2)
            and s.c22_1 == eps and s.c22_2 == 2 * eps * c):
        return False
    return mu == -(3 + eps * 8 * c ** 2) / (4 + eps * 8 * c ** 2)


def _expected_yamabe_wall(s: TypeBSurface) -> Prediction:
    first = (s.c11_1, s.c12_1, s.c22_1)
    second = (s.c11_2, s.c12_2, s.c22_2)
    if first[1] == 0 and first[2] == 0:            # includes log and power cases
        return Prediction.exact(2)
    if second == (q(0), q(0), q(0)):
        return Prediction.exact(2)
    if any(second):                                 # first row proportional to second
        ratios = {Fraction(a, b) for a, b in zip(first, second) if b}
        if len(ratios) == 1 and all(a == 0 for a, b in zip(first, second) if not b):
            return Prediction.exact(2)
    return Prediction.exact(1)


def _expected_type_b(s: TypeBSurface, mu: Fraction) -> Prediction:
    full, sym = _ricci_constants_b(s)
    if exact_rank(full, 2) == 0:  # flat half-plane
        return Prediction.exact(3)
    if mu == 0:
        return _expected_yamabe_wall(s)
    if exact_rank(sym, 2) == 0:
        # symmetric Ricci part vanishes: the equation is mu-independent
        return _expected_yamabe_wall(s)
    if mu == -1:
        if s.c22_1 == 0 and s.c22_2 == s.c12_1 != 0:
            return Prediction.exact(1)
        if any(_matches_wall_dim1_mixed(s, eps) for eps in (1, -1)):
            return Prediction.exact(1)
        if s.is_also_constant_type():
            return Prediction.exact(3)
        if any(_matches_wall_projflat(s, eps) for eps in (1, -1)):
            return Prediction.exact(3)
        return Prediction.exact(0)
    # mu outside {0, -1}
    if s.is_also_constant_type():
        # linearly equivalent to a constant chart with rank-one Ricci
        return Prediction.exact(2)
    if any(_matches_wall_eigen_pair(s, eps, mu) for eps in (1, -1)):
        return Prediction.exact(2)
    if any(_matches_wall_eigen_pair_mixed(s, eps, mu) for eps in (1, -1)):
        return Prediction.exact(2)
    if any(_matches_wall_eigen(s, eps, mu) for eps in (1, -1)):
        return Prediction.at_least(1)
    return Prediction.exact(0)


def _expected_exp3d(mu: Fraction) -> Prediction:
    if mu == Fraction(-3, 5):
        return Prediction.exact(2)
    if mu == 0:
        return Prediction.exact(1)
    return Prediction.exact(0)


def _expected_family3d(p: Family3dParams, mu: Fraction) -> Prediction:
    if mu != Fraction(-1, 2):
        return NOT_COVERED
    x, z, w = p.x, p.z, p.w
    if x == 0 or (w == x and z == 1):
        return Prediction.exact(4)
    if z == 1:
        return Prediction.exact(2)
    if z == 0:
        return Prediction.exact(0)
    return Prediction.exact(1 if w == (x + 2 * x * z - x * z ** 2) / (2 * z) else 0)


def expected_dimension(kind: str, params: dict | None, mu) -> Prediction:
    """Published case analysis, evaluated literally on normal-form parameters."""
    mu = q(mu)
    obj = model_for(kind, params)
    if isinstance(obj, TypeASurface):
        return _expected_type_a(obj, mu)
    if isinstance(obj, TypeBSurface):
        return _expected_type_b(obj, mu)
    if isinstance(obj, Family3dParams):
        return _expected_family3d(obj, mu)
    if kind == "exp3d":
        return _expected_exp3d(mu)
    return NOT_COVERED


# --------------------------------------------------------------------------
# crosschecks and sweeps


@dataclass(frozen=True)
class CrosscheckReport:
    kind: str
    params: dict
    mu: Fraction
    basepoint: tuple
    predicted: Prediction
    computed: int
    agree: bool


def crosscheck(kind: str, params: dict | None, mu, basepoint=None) -> CrosscheckReport:
    manifold = build_model(kind, params)
    point = tuple(basepoint) if basepoint is not None else default_basepoint(manifold)
    predicted = expected_dimension(kind, params, mu)
    computed = qs.solution_dimension(manifold, mu, point).dim
    return CrosscheckReport(kind, dict(params or {}), q(mu), point,
                            predicted, computed, predicted.matches(computed))


@dataclass
class SweepResult:
    rows: list
    violations: list

    @property
    def dims(self) -> set:
        return {row["dim"] for row in self.rows}

    def table(self) -> str:
        lines = [f"{'params':<44} {'mu':>8} {'dim':>4}"]
        for row in self.rows:
            lines.append(f"{str(row['params']):<44} {str(row['mu']):>8} {row['dim']:>4}")
        return "\n".join(lines)


def _surface_checks(kind, params, mu, dim, rho_rank, violations):
    if mu == -1 and dim == 2:
        violations.append(f"{kind} {params}: dim 2 at the surface eigenvalue")
    if kind == "typeA" and mu not in (0, -1) and rho_rank:
        want = {0: 3, 1: 2, 2: 0}[rho_rank]
        if dim != want:
            violations.append(
                f"typeA {params}: rank {rho_rank} but dim {dim} at mu={mu}")


def sweep(kind: str, param_grid: Sequence[dict], mu_list: Sequence,
          basepoint=None) -> SweepResult:
    """Solver dimensions over a parameter/eigenvalue grid plus property audit."""
    rows = []
    violations: list = []
    for params in param_grid:
        try:
            obj = model_for(kind, params)
            manifold = obj if isinstance(obj, geo.AffineManifold) else obj.manifold()
            point = tuple(basepoint) if basepoint is not None \
                else default_basepoint(manifold)
            ricci_parts = geo.ricci(manifold)
            rho_rank = None
            if isinstance(obj, TypeASurface):
                rho_rank = exact_rank(_ricci_constants_a(obj), 2)
            for mu in mu_list:
                mu = q(mu)
                space = qs.solution_dimension(manifold, mu, point,
                                              ricci_sym=ricci_parts.sym)
                if not space.stabilized:
                    violations.append(f"{kind} {params} mu={mu}: not stabilized")
                if space.dim > manifold.dim + 1:
                    violations.append(f"{kind} {params} mu={mu}: bound exceeded")
                if manifold.dim == 2:
                    _surface_checks(kind, params, mu, space.dim, rho_rank, violations)
                rows.append({"params": dict(params), "mu": str(mu), "dim": space.dim})
        except AffineQEError as err:
            violations.append(f"{kind} {params}: {err}")
    return SweepResult(rows, violations)


# --------------------------------------------------------------------------
# random models


def random_constant(rng: random.Random) -> Fraction:
    den = rng.randint(1, 3)
    return Fraction(rng.randint(-3 * den, 3 * den), den)


def _random_six(rng: random.Random) -> list:
    return [random_constant(rng) for _ in range(6)]


def random_type_a(rng: random.Random, max_tries: int = 200) -> TypeASurface:
    """Random constant-symbol surface with nonvanishing Ricci tensor."""
    for _ in range(max_tries):
        surface = TypeASurface(*_random_six(rng))
        if exact_rank(_ricci_constants_a(surface), 2):
            return surface
    raise RegimeError("could not draw a curved surface")


def random_type_b(rng: random.Random, max_tries: int = 200) -> TypeBSurface:
    """Random wall-chart surface with nonvanishing Ricci tensor."""
    for _ in range(max_tries):
        surface = TypeBSurface(*_random_six(rng))
        full, _ = _ricci_constants_b(surface)
        if exact_rank(full, 2):
            return surface
    raise RegimeError("could not draw a curved surface")


# --------------------------------------------------------------------------
# the cubed-Ricci scalar invariant


def alpha_invariant(manifold: geo.AffineManifold) -> ex.ScalarExpr:
    """The scalar (grad rho)_{111}^2 / rho_11^3.

    Defined in the regime where rho_11 is not identically zero and the
    covariant derivative of the Ricci tensor is a multiple of dx1 (x) dx1 (x) dx1;
    it is unchanged under chart maps fixing that regime.
    """
    parts = geo.ricci(manifold)
    rho11 = parts.full.comp(0, 0)
    if ex.is_identically_zero(rho11) is not Verdict.NONZERO:
        raise RegimeError("rho_11 is identically zero")
    nabla = geo.nabla_ricci(manifold, parts)
    m = manifold.dim
    for i in range(m):
        for j in range(m):
            for k in range(m):
                if (i, j, k) == (0, 0, 0):
                    continue
                if ex.is_identically_zero(nabla.comp(i, j, k)) is Verdict.NONZERO:
                    raise RegimeError(
                        "grad Ricci is not a multiple of dx1 (x) dx1 (x) dx1")
    return ex.simplify_rational(ex.powi(nabla.comp(0, 0, 0), 2) / ex.powi(rho11, 3))
