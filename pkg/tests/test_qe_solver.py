import math
import random
from fractions import Fraction

import pytest

from affineqe import expr as ex
from affineqe import geometry as geo
from affineqe import qe_solver as qs
from affineqe.expr import Verdict
from affineqe.linalg import exact_rank

X2 = ["x1", "x2"]
X3 = ["x1", "x2", "x3"]


def q(a, b=1):
    return Fraction(a, b)


def example_b1():
    return geo.from_christoffel(3, X3, {
        (0, 1, 2): ex.const(1),
        (0, 2, 0): ex.const(3),
        (1, 2, 1): ex.const(4),
        (2, 2, 2): ex.const(5),
    })


def example_b2(x, y, z, w):
    return geo.from_christoffel(3, X3, {
        (0, 0, 0): ex.const(z), (0, 1, 0): ex.const(1), (0, 2, 0): ex.const(x),
        (1, 1, 1): ex.const(1), (1, 2, 0): ex.const(x),
        (2, 2, 1): ex.const(y), (2, 2, 2): ex.const(w),
    })


def type_b(c11_1=0, c11_2=0, c12_1=0, c12_2=0, c22_1=0, c22_2=0):
    x1 = ex.coord(0)
    table = {(0, 0, 0): c11_1, (0, 0, 1): c11_2, (0, 1, 0): c12_1,
             (0, 1, 1): c12_2, (1, 1, 0): c22_1, (1, 1, 1): c22_2}
    entries = {idx: ex.const(Fraction(v)) / x1 for idx, v in table.items() if v}
    return geo.from_christoffel(2, X2, entries, excluded=[x1])


def sheared_flat_plane():
    """Flat plane deformed by the non-closed 1-form x2 dx1."""
    x2 = ex.coord(1)
    return geo.from_christoffel(2, X2, {(0, 0, 0): 2 * x2, (0, 1, 1): x2})


ORIGIN3 = (q(0), q(0), q(0))
ORIGIN2 = (q(0), q(0))
WALL_BASE = (q(1), q(0))


def rand_c(rng):
    den = rng.randint(1, 3)
    return Fraction(rng.randint(-3 * den, 3 * den), den)


class TestJetSystem:
    def test_flat_matrices_have_only_unit_rows(self):
        system = qs.build_jet_system(geo.flat_manifold(2), q(5))
        for i in range(2):
            grid = system.matrices[i]
            for a in range(3):
                for b in range(3):
                    want = ex.ONE if (a == 0 and b == 1 + i) else ex.ZERO
                    assert grid[a][b] == want

    def test_b1_structure(self):
        m = example_b1()
        mu = q(-3, 5)
        rho_s = geo.ricci(m).sym
        system = qs.build_jet_system(m, mu)
        for i in range(3):
            grid = system.matrices[i]
            for j in range(3):
                lead = grid[1 + j][0]
                want = ex.simplify_rational(mu * rho_s.comp(i, j))
                assert ex.is_identically_zero(lead - want) is Verdict.ZERO
                for k in range(3):
                    assert grid[1 + j][1 + k] == m.gamma[i][j][k]

    def test_hessian_symmetry_of_rows(self):
        system = qs.build_jet_system(example_b1(), q(2))
        for i in range(3):
            for j in range(3):
                assert system.matrices[i][1 + j] == system.matrices[j][1 + i]

    def test_wall_chart_entries_scale_inversely(self):
        system = qs.build_jet_system(type_b(c12_1=1, c22_2=1), q(1))
        entry = system.matrices[0][2][1]  # Gamma_12^1 = 1/x1
        assert ex.is_identically_zero(entry - 1 / ex.coord(0)) is Verdict.ZERO


class TestConstraints:
    def test_flat_stack_is_effectively_empty(self):
        system = qs.build_jet_system(geo.flat_manifold(3), q(1))
        stack = qs.integrability_constraints(system)
        assert stack.effective_rows() == []

    def test_sheared_plane_stack(self):
        system = qs.build_jet_system(sheared_flat_plane(), q(-1))
        stack = qs.integrability_constraints(system)
        rows = [[ex.evaluate(e, (q(1, 3), q(5, 7))) for e in r.entries]
                for r in stack.effective_rows()]
        # the commutator rows alone leave a line; one prolongation kills it
        assert exact_rank(rows, 3) == 2
        prolonged = qs.prolong(system, stack)
        rows = [[ex.evaluate(e, (q(1, 3), q(5, 7))) for e in r.entries]
                for r in prolonged.effective_rows()]
        assert exact_rank(rows, 3) == 3

    def test_b1_stack_already_full_rank_off_spectrum(self):
        system = qs.build_jet_system(example_b1(), q(1))
        stack = qs.integrability_constraints(system)
        rows = [[ex.evaluate(e, ORIGIN3) for e in r.entries]
                for r in stack.effective_rows()]
        assert exact_rank(rows, 4) == 4  # kernel empty before any prolongation

    def test_commutator_annihilates_known_solution_jets(self):
        m = example_b1()
        system = qs.build_jet_system(m, q(-3, 5))
        stack = qs.integrability_constraints(system)
        fn = ex.parse_scalar("exp(3*x3)", X3)
        point = (0.3, -0.2, 0.1)
        jet = [ex.evaluate(fn, point, "float")] + [
            ex.evaluate(ex.differentiate(fn, i), point, "float") for i in range(3)]
        for row in stack.effective_rows():
            value = sum(ex.evaluate(e, point, "float") * j
                        for e, j in zip(row.entries, jet))
            assert abs(value) < 1e-12

    def test_prolong_empty_stack(self):
        system = qs.build_jet_system(geo.flat_manifold(2), q(0))
        stack = qs.integrability_constraints(system)
        assert qs.prolong(system, stack).effective_rows() == []

    def test_prolong_gradient_row_with_flat_system(self):
        system = qs.build_jet_system(geo.flat_manifold(2), q(0))
        stack = qs.ConstraintStack(3, [qs.ConstraintRow((ex.ZERO, ex.ONE, ex.ZERO), 0)])
        prolonged = qs.prolong(system, stack)
        assert len(prolonged.rows) == 1  # appended rows were all zero

    def test_prolonged_rows_annihilate_solution_jets(self):
        m = example_b1()
        system = qs.build_jet_system(m, q(-3, 5))
        stack = qs.prolong(system, qs.integrability_constraints(system))
        fn = ex.parse_scalar("x1*exp(3*x3)", X3)
        point = (0.4, 0.6, -0.3)
        jet = [ex.evaluate(fn, point, "float")] + [
            ex.evaluate(ex.differentiate(fn, i), point, "float") for i in range(3)]
        for row in stack.effective_rows():
            value = sum(ex.evaluate(e, point, "float") * j
                        for e, j in zip(row.entries, jet))
            assert abs(value) < 1e-10


class TestSolutionDimension:
    def test_flat_space_is_maximal(self):
        space = qs.solution_dimension(geo.flat_manifold(3), q(7), (q(0),) * 3)
        assert space.dim == 4
        assert space.stabilized
        assert list(space.basis) == [
            (1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1)]

    @pytest.mark.parametrize("mu,want", [
        (q(-3, 5), 2), (q(0), 1), (q(-1), 0), (q(-1, 2), 0),
        (q(1), 0), (q(3, 5), 0), (q(2), 0),
    ])
    def test_b1_dimension_table(self, mu, want):
        assert qs.solution_dimension(example_b1(), mu, ORIGIN3).dim == want

    @pytest.mark.parametrize("params,want", [
        ((1, 0, 0, 0), 0),
        ((1, 0, 2, q(1, 4)), 1),
        ((1, 0, 1, 0), 2),
        ((0, 5, 7, -2), 4),
        ((0, 1, 2, 3), 4),
    ])
    def test_b2_case_table(self, params, want):
        m = example_b2(*[Fraction(v) for v in params])
        assert qs.solution_dimension(m, q(-1, 2), ORIGIN3).dim == want

    def test_projective_shear_destroys_solutions(self):
        assert qs.solution_dimension(geo.flat_manifold(2), q(-1), ORIGIN2).dim == 3
        assert qs.solution_dimension(sheared_flat_plane(), q(-1), ORIGIN2).dim == 0

    def test_point_on_excluded_locus_rejected(self):
        m = type_b(c12_1=1, c22_2=1)
        with pytest.raises(geo.ExcludedLocusError):
            qs.solution_dimension(m, q(-1), (q(0), q(1)))

    def test_depth_cap_is_flagged(self):
        m = example_b2(q(1), q(0), q(0), q(0))
        space = qs.solution_dimension(m, q(-1, 2), ORIGIN3, max_generations=0)
        assert not space.stabilized

    def test_float_basepoint_uses_numeric_rank(self):
        space = qs.solution_dimension(example_b1(), q(-3, 5), (0.1, -0.2, 0.05))
        assert not space.exact
        assert space.dim == 2


class TestTransport:
    def test_flat_linear_jet(self):
        u = qs.transport_jet(geo.flat_manifold(2), q(-1), [(0, 0), (0.7, 0.3)], [0, 1, 0])
        assert u[0] == pytest.approx(0.7, abs=1e-10)
        assert u[1] == pytest.approx(1.0, abs=1e-12)
        assert u[2] == pytest.approx(0.0, abs=1e-12)

    def test_flat_constant_jet(self):
        u = qs.transport_jet(geo.flat_manifold(2), q(3),
                             [(0, 0), (0.2, 0.9), (1.5, -1.0)], [1, 0, 0])
        assert u == pytest.approx([1.0, 0.0, 0.0], abs=1e-12)

    def test_b1_exponential_solution_value(self):
        u = qs.transport_jet(example_b1(), q(-3, 5),
                             [(0, 0, 0), (0, 0, 0.5)], [1, 0, 0, 3])
        want = math.exp(1.5)
        assert abs(u[0] - want) / want < 1e-8
        assert abs(u[3] - 3 * want) / (3 * want) < 1e-8

    def test_excluded_crossing_detected(self):
        m = type_b(c11_1=-1)
        with pytest.raises(geo.ExcludedLocusError):
            qs.transport_jet(m, q(0), [(1, 0), (-1, 0)], [1, 0, 0])

    def test_jet_length_checked(self):
        with pytest.raises(ValueError):
            qs.transport_jet(geo.flat_manifold(2), q(0), [(0, 0), (1, 0)], [1, 0])


UNIT_LOOP_13 = [(0, 0, 0), (1, 0, 0), (1, 0, 1), (0, 0, 1), (0, 0, 0)]
UNIT_LOOP_23 = [(0, 0, 0), (0, 1, 0), (0, 1, 1), (0, 0, 1), (0, 0, 0)]


class TestHolonomy:
    def test_flat_loop_defect_negligible(self):
        loop = [(0, 0), (1, 0), (1, 1), (0, 1), (0, 0)]
        d = qs.holonomy_defect(geo.flat_manifold(2), q(-1), loop, [1, 0.5, -2])
        assert d < 1e-10

    def test_b1_admissible_jets(self):
        for u0 in [(1, 0, 0, 3), (0, 1, 0, 0)]:
            d = qs.holonomy_defect(example_b1(), q(-3, 5), UNIT_LOOP_13, u0)
            assert d < 1e-8

    def test_b1_inadmissible_jet_detected_by_some_loop(self):
        u0 = (0, 0, 1, 0)
        defects = [qs.holonomy_defect(example_b1(), q(-3, 5), loop, u0)
                   for loop in (UNIT_LOOP_13, UNIT_LOOP_23)]
        assert max(defects) > 1e-4

    def test_open_path_rejected(self):
        with pytest.raises(ValueError):
            qs.holonomy_defect(geo.flat_manifold(2), q(0),
                               [(0, 0), (1, 0), (1, 1)], [1, 0, 0])


class TestReports:
    def test_report_document_shape(self):
        space = qs.solution_dimension(example_b1(), q(-3, 5), ORIGIN3)
        report = qs.solution_report(space)
        assert report["mu"] == "-3/5"
        assert report["dim"] == 2
        assert report["stabilized"] is True
        assert len(report["basis_jets"]) == 2
        assert report["basepoint"] == ["0", "0", "0"]


class TestInvariants:
    def test_rank_history_monotone(self):
        rng = random.Random(31)
        for _ in range(25):
            entries = {(i, j, k): ex.const(rand_c(rng))
                       for i in range(2) for j in range(i, 2) for k in range(2)
                       if rng.random() < 0.8}
            m = geo.from_christoffel(2, X2, entries)
            space = qs.solution_dimension(m, rand_c(rng), ORIGIN2)
            history = space.rank_history
            assert all(a <= b for a, b in zip(history, history[1:]))

    def test_dimension_bound_random_models(self):
        rng = random.Random(47)
        seen = 0
        while seen < 200:
            m_dim = rng.choice([2, 3])
            coords = X2 if m_dim == 2 else X3
            wall = rng.random() < 0.5
            entries = {}
            for i in range(m_dim):
                for j in range(i, m_dim):
                    for k in range(m_dim):
                        if rng.random() < 0.5:
                            value = ex.const(rand_c(rng))
                            entries[(i, j, k)] = value / ex.coord(0) if wall else value
            excluded = [ex.coord(0)] if wall else []
            m = geo.from_christoffel(m_dim, coords, entries, excluded)
            point = (q(1),) + (q(0),) * (m_dim - 1) if wall else (q(0),) * m_dim
            space = qs.solution_dimension(m, rand_c(rng), point)
            assert 0 <= space.dim <= m_dim + 1
            assert space.dim + space.rank_history[-1] == m_dim + 1
            seen += 1

    def test_kernel_jets_have_tiny_holonomy(self):
        rng = random.Random(3)
        m = example_b1()
        space = qs.solution_dimension(m, q(-3, 5), ORIGIN3)
        for u0 in space.basis:
            for _ in range(5):
                a = [rng.uniform(-0.5, 0.5) for _ in range(3)]
                b = [rng.uniform(-0.5, 0.5) for _ in range(3)]
                loop = [(0, 0, 0), tuple(a), tuple(b), (0, 0, 0)]
                d = qs.holonomy_defect(m, q(-3, 5), loop, [float(c) for c in u0],
                                       steps_per_segment=400)
                assert d < 1e-7

    def test_dimension_point_independent(self):
        models = [
            (example_b1(), q(-3, 5), ORIGIN3, (q(1, 3), q(-1, 2), q(1, 4))),
            (type_b(c12_1=1, c22_2=1), q(-1), WALL_BASE, (q(2), q(1, 3))),
            (type_b(c11_1=3, c12_2=1, c22_1=1), q(-1), WALL_BASE, (q(1, 2), q(-1))),
        ]
        for m, mu, p1, p2 in models:
            assert qs.solution_dimension(m, mu, p1).dim == qs.solution_dimension(m, mu, p2).dim

    def test_printed_generators_lie_in_kernel(self):
        # constant-symbol exponential family at the origin
        m = geo.from_christoffel(2, X2, {(0, 0, 0): ex.const(1), (0, 1, 1): ex.const(q(1, 2))})
        space = qs.solution_dimension(m, q(0), ORIGIN2)
        assert space.dim == 2
        assert qs.in_solution_space(space, (q(1), q(0), q(0)))   # f = 1
        assert qs.in_solution_space(space, (q(1), q(1), q(0)))   # f = e^{x1}

        m = geo.from_christoffel(2, X2, {(0, 0, 1): ex.const(1), (0, 1, 1): ex.const(q(1, 2)),
                                         (1, 1, 1): ex.const(1)})
        space = qs.solution_dimension(m, q(0), ORIGIN2)
        assert space.dim == 2
        assert qs.in_solution_space(space, (q(0), q(1), q(0)))   # f = x1

        # wall-chart Yamabe families at (1, 0)
        yamabe = [
            (dict(c11_1=-1, c11_2=1, c12_2=1, c22_2=2), (q(0), q(1), q(0))),    # log x1
            (dict(c11_1=-2, c11_2=1, c12_2=1, c22_2=2), (q(1), q(-1), q(0))),   # 1/x1
            (dict(c11_1=1, c12_1=1, c22_1=1), (q(0), q(0), q(1))),              # x2
            (dict(c11_1=2, c12_1=1, c11_2=1, c12_2=q(1, 2)), (q(1), q(1), q(-2))),  # x1 - 2 x2
        ]
        for params, jet in yamabe:
            space = qs.solution_dimension(type_b(**params), q(0), WALL_BASE)
            assert space.dim == 2
            assert qs.in_solution_space(space, jet)
            assert qs.in_solution_space(space, (q(1), q(0), q(0)))

        # the 3-dimensional example with its exponential pair
        space = qs.solution_dimension(example_b1(), q(-3, 5), ORIGIN3)
        assert qs.in_solution_space(space, (q(1), q(0), q(0), q(3)))  # e^{3x3}
        assert qs.in_solution_space(space, (q(0), q(1), q(0), q(0)))  # x1 e^{3x3}

    def test_surface_wall_models_never_dim_two(self):
        rng = random.Random(7)
        seen = 0
        while seen < 60:
            cs = [rand_c(rng) for _ in range(6)]
            m = type_b(*cs)
            if geo.tensor_zero_verdict(geo.ricci(m).full) is not Verdict.NONZERO:
                continue
            assert qs.solution_dimension(m, q(-1), WALL_BASE).dim != 2
            seen += 1
