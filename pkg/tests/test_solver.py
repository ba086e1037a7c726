from fractions import Fraction

import numpy as np
import pytest

from sparsepos import problems
from sparsepos.poly import BlockLayout, Polynomial
from sparsepos.problem import ProblemInstance
from sparsepos.relax import (
    LinearProgram,
    assemble_krivine,
    assemble_sparse_schmudgen,
    normalize_krivine,
)
from sparsepos.solver import (
    INFEASIBLE,
    OPTIMAL,
    UNBOUNDED,
    solve_lp,
    solve_sdp,
)

UNIVARIATE = BlockLayout(1, 0, 0)
X1 = Polynomial.variable(UNIVARIATE, "x")
INTERVAL_G = 1 - X1**2


def _univariate(f, r):
    inst = ProblemInstance(UNIVARIATE, f, (INTERVAL_G,), ())
    return inst, assemble_sparse_schmudgen(inst, r)


# Closed-form minima on [-1, 1]; the relaxation is exact at the given order.
CLOSED_FORMS = [
    (X1**2, 1, 0.0),
    (X1, 1, -1.0),
    (X1**4 - X1**2, 2, -0.25),
    ((X1 - Polynomial.constant(UNIVARIATE, Fraction(1, 3))) ** 2, 1, 0.0),
    (X1**3, 2, -1.0),
    (2 + X1, 1, 1.0),
]


class TestSdpClosedForms:
    @pytest.mark.parametrize("f,r,expected", CLOSED_FORMS)
    def test_closed_form_minimum(self, f, r, expected):
        _, prog = _univariate(f, r)
        report = solve_sdp(prog)
        assert report.status == OPTIMAL
        assert abs(report.primal_objective - expected) <= 1e-6
        assert abs(report.dual_objective - expected) <= 1e-6

    def test_constant_objective_is_exact(self):
        _, prog = _univariate(Polynomial.constant(UNIVARIATE, 1), 1)
        report = solve_sdp(prog)
        assert report.status == OPTIMAL
        assert report.primal_objective == 1.0

    def test_square_has_zero_dual(self):
        _, prog = _univariate(X1**2, 1)
        report = solve_sdp(prog)
        assert abs(report.dual_objective) <= 1e-6


class TestSolveReports:
    def test_unit_moment_pinned(self):
        _, prog = _univariate(X1, 1)
        report = solve_sdp(prog)
        assert report.moments.unit == 1.0

    def test_moments_nearly_feasible(self):
        _, prog = _univariate(X1, 1)
        report = solve_sdp(prog)
        for _, matrix in prog.psd_blocks:
            mat = matrix.instantiate(report.moments)
            assert float(np.linalg.eigvalsh(mat)[0]) >= -1e-7

    def test_weak_duality(self):
        for f, r, _ in CLOSED_FORMS:
            _, prog = _univariate(f, r)
            report = solve_sdp(prog)
            assert report.dual_objective <= report.primal_objective + 1e-7

    def test_weak_duality_when_truncated(self):
        _, prog = _univariate(X1**4 - X1**2, 2)
        report = solve_sdp(prog, max_iter=3)
        assert report.status == "max-iterations"
        assert report.dual_objective <= report.primal_objective + 1e-7

    def test_complementarity_at_optimum(self):
        prog = assemble_sparse_schmudgen(problems.twoballs(), 2)
        report = solve_sdp(prog)
        for (label, matrix), (_, gram) in zip(prog.psd_blocks, report.dual_blocks):
            primal_block = matrix.instantiate(report.moments)
            scale = 1.0 + float(np.abs(primal_block).max()) + float(np.abs(gram).max())
            assert abs(float(np.tensordot(primal_block, gram))) <= 1e-5 * scale

    def test_determinism(self):
        prog = assemble_sparse_schmudgen(problems.twoballs(), 2)
        a = solve_sdp(prog, tol=1e-8)
        b = solve_sdp(prog, tol=1e-8)
        assert abs(a.primal_objective - b.primal_objective) <= 1e-7
        assert a.iterations == b.iterations

    def test_dual_blocks_are_psd(self):
        prog = assemble_sparse_schmudgen(problems.twoballs(), 2)
        report = solve_sdp(prog)
        for _, gram in report.dual_blocks:
            assert float(np.linalg.eigvalsh(gram)[0]) >= -1e-9

    def test_tolerance_validation(self):
        _, prog = _univariate(X1, 1)
        with pytest.raises(ValueError):
            solve_sdp(prog, tol=1.0)
        with pytest.raises(ValueError):
            solve_sdp(prog, tol=1e-15)


class TestLp:
    def test_affine_identity_bound(self):
        # f = 1 + x equals 2 * (1 - g) with g = (1-x)/2: the bound is 0.
        layout = UNIVARIATE
        x = Polynomial.variable(layout, "x")
        g = (1 - x).scale(Fraction(1, 2))
        inst = ProblemInstance(layout, 1 + x, (g,), ())
        prog = assemble_krivine(normalize_krivine(inst, [1]), 1)
        report = solve_lp(prog)
        assert report.status == OPTIMAL
        assert abs(report.primal_objective) <= 1e-7

    def test_constant_objective(self):
        layout = UNIVARIATE
        x = Polynomial.variable(layout, "x")
        inst = ProblemInstance(layout, Polynomial.constant(layout, 5), ((1 - x).scale(Fraction(1, 2)),), ())
        prog = assemble_krivine(normalize_krivine(inst, [1]), 1)
        report = solve_lp(prog)
        assert report.status == OPTIMAL
        assert abs(report.primal_objective - 5) <= 1e-8

    def test_doctored_infeasible_rows(self):
        # A constant row demanding -1 >= 0 contradicts the pinned unit moment.
        zero = UNIVARIATE.zero_exponent
        prog = LinearProgram(
            layout=UNIVARIATE,
            order=1,
            variable_index=(zero, (1,)),
            objective={(1,): Fraction(1)},
            rows=(
                (("xy", (0,), (0,)), {zero: Fraction(-1)}),
                (("xy", (1,), (0,)), {(1,): Fraction(1)}),
            ),
            scaling=(Fraction(1),),
        )
        report = solve_lp(prog)
        assert report.status == INFEASIBLE

    def test_unconstrained_moment_is_unbounded(self):
        # Even-degree constraints never touch odd moments, so minimizing x
        # escapes to minus infinity.
        inst = normalize_krivine(problems.interval(), [1])
        report = solve_lp(assemble_krivine(inst, 2))
        assert report.status == UNBOUNDED

    def test_row_duals_nonnegative(self):
        layout = UNIVARIATE
        x = Polynomial.variable(layout, "x")
        inst = ProblemInstance(layout, x, ((1 - x).scale(Fraction(1, 2)),), ())
        prog = assemble_krivine(normalize_krivine(inst, [1]), 2)
        report = solve_lp(prog)
        assert report.status == OPTIMAL
        assert all(v >= -1e-9 for _, v in report.dual_blocks)
        assert abs(report.primal_objective + 1) <= 1e-6


class TestModuleVersusPreordering:
    """[-1,1] described by the two affine constraints 1-x and 1+x separates
    the hierarchies: the subset product (1-x)(1+x) makes the preordering
    exact at the first order, while the quadratic module leaves the top
    moment unconstrained there (unbounded) and only catches up one order
    later."""

    def _instance(self):
        return ProblemInstance(UNIVARIATE, 1 - X1**2, (1 - X1, 1 + X1), ())

    def test_preordering_exact_at_first_order(self):
        report = solve_sdp(assemble_sparse_schmudgen(self._instance(), 1))
        assert report.status == OPTIMAL
        assert abs(report.primal_objective) <= 1e-6

    def test_module_unbounded_then_exact(self):
        from sparsepos.relax import assemble_sparse_putinar

        report1 = solve_sdp(assemble_sparse_putinar(self._instance(), 1))
        assert report1.status == UNBOUNDED
        report2 = solve_sdp(assemble_sparse_putinar(self._instance(), 2))
        assert report2.status == OPTIMAL
        assert abs(report2.primal_objective) <= 1e-6
