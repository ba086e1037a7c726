"""Acceptance suite: one test per criterion, one printed pass/fail line each.

Criteria share the session solve cache (see conftest), so the heavy work
happens once.  Tolerances are pinned here and nowhere else.
"""

from __future__ import annotations

import numpy as np

from sparsepos import problems
from sparsepos.certify import SOSCertificate, extract_cone, extract_sos, verify
from sparsepos.moments import (
    localizing_matrix,
    min_eigenvalue,
    mixture_moments,
    moment_matrix,
)
from sparsepos.relax import assemble_krivine, normalize_krivine
from sparsepos.solver import OPTIMAL, UNBOUNDED, solve_lp

SOUNDNESS_TOL = 1e-5
EXACT_INTERVAL_TOL = 1e-6
EXACT_CONSTANT_TOL = 1e-8
MONOTONICITY_TOL = 1e-7
ORDERING_TOL = 1e-7
ROUNDTRIP_TOL = 1e-5
KRIVINE_TOL = 1e-6
GAP_TOL = 1e-6
PSD_FLOOR = -1e-10
TAMPER_REJECT = 0.05
RUNTIME_BUDGET_S = 60.0

SPARSE_MODES = {"schmudgen", "putinar", "product", "krivine"}


def _report(number: int, name: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"[acceptance] criterion {number} {name}: {status}{suffix}")


def _optimal_entries(suite):
    return [e for e in suite.rows() if e.report.status == OPTIMAL]


def test_criterion_1_soundness_of_bounds(suite):
    worst = -np.inf
    failures = []
    for entry in suite.rows():
        status = entry.report.status
        if entry.variant == "krivine" and status == UNBOUNDED:
            continue  # no finite bound: vacuously below the minimum
        if status != OPTIMAL:
            failures.append(f"{entry.instance_name}/{entry.variant}/r{entry.r}: {status}")
            continue
        oracle = suite.oracles[entry.instance_name]
        margin = suite.margins[entry.instance_name]
        slack = oracle.minimum + SOUNDNESS_TOL + margin - entry.report.primal_objective
        worst = max(worst, entry.report.primal_objective - oracle.minimum)
        if slack < 0:
            failures.append(
                f"{entry.instance_name}/{entry.variant}/r{entry.r}: bound "
                f"{entry.report.primal_objective} above oracle {oracle.minimum}"
            )
    in_budget = suite.seconds <= RUNTIME_BUDGET_S
    ok = not failures and in_budget
    _report(
        1,
        "soundness of bounds",
        ok,
        f"max bound-minus-oracle {worst:.2e}, runtime {suite.seconds:.1f}s",
    )
    assert not failures, failures
    assert in_budget, f"suite took {suite.seconds:.1f}s > {RUNTIME_BUDGET_S}s"


def test_criterion_2_exactness_on_closed_forms(suite):
    errs = []
    for variant in ("schmudgen-sparse", "putinar-sparse", "dense"):
        bound = suite.entries[("interval", variant, 1)].report.primal_objective
        errs.append(abs(bound - (-1.0)))
        assert abs(bound - (-1.0)) <= EXACT_INTERVAL_TOL, (variant, bound)
    const_err = 0.0
    for (name, variant, r), entry in suite.entries.items():
        if name != "constant5":
            continue
        assert entry.report.status == OPTIMAL
        err = abs(entry.report.primal_objective - 5.0)
        const_err = max(const_err, err)
        assert err <= EXACT_CONSTANT_TOL, (variant, r, entry.report.primal_objective)
    _report(
        2,
        "exactness on closed forms",
        True,
        f"interval err {max(errs):.1e}, constant err {const_err:.1e}",
    )


def test_criterion_3_monotonicity(suite):
    checked = 0
    for name in ("twoballs", "product", "interval", "constant5", "fivevar"):
        for variant in ("schmudgen-sparse", "putinar-sparse", "dense", "product", "krivine"):
            bounds = [
                e.report.primal_objective
                for (n, v, _), e in sorted(suite.entries.items())
                if n == name and v == variant and e.report.status == OPTIMAL
            ]
            for lo, hi in zip(bounds, bounds[1:]):
                checked += 1
                assert lo <= hi + MONOTONICITY_TOL, (name, variant, lo, hi)
    _report(3, "monotonicity in the order", True, f"{checked} consecutive pairs")
    assert checked > 0


def test_criterion_4_variant_ordering(suite):
    pairs = 0
    for name in ("twoballs", "interval", "fivevar"):
        for r in (1, 2, 3):
            put = suite.entries.get((name, "putinar-sparse", r))
            schm = suite.entries.get((name, "schmudgen-sparse", r))
            dense = suite.entries.get((name, "dense", r))
            if put is not None and schm is not None:
                assert (
                    put.report.primal_objective
                    <= schm.report.primal_objective + ORDERING_TOL
                ), (name, r)
                pairs += 1
            if schm is not None and dense is not None:
                assert (
                    schm.report.primal_objective
                    <= dense.report.primal_objective + ORDERING_TOL
                ), (name, r)
                pairs += 1
    _report(4, "quadratic module <= preordering <= dense", True, f"{pairs} comparisons")
    assert pairs >= 12


def test_criterion_5_certificate_round_trip(suite):
    verified = 0
    worst = 0.0
    for entry in _optimal_entries(suite):
        instance = problems.get(entry.instance_name)
        if entry.variant == "krivine":
            cert = extract_cone(entry.report, entry.program)
        else:
            cert = extract_sos(entry.report, entry.program)
        result = verify(cert, instance, tol=ROUNDTRIP_TOL)
        worst = max(worst, result.residual / (1 + float(instance.objective.max_norm())))
        assert result.passed, (entry.instance_name, entry.variant, entry.r, result)
        assert result.psd_ok
        if cert.mode in SPARSE_MODES:
            assert result.coupling_free, (entry.instance_name, entry.variant, entry.r)
        verified += 1
    _report(
        5,
        "certificate round trip",
        True,
        f"{verified} certificates, worst relative residual {worst:.1e}",
    )
    assert verified >= 40


def test_criterion_6_krivine_interval():
    instance = problems.interval_affine()
    normed = normalize_krivine(instance, [1])
    program = assemble_krivine(normed, 2)
    report = solve_lp(program, tol=1e-9)
    assert report.status == OPTIMAL
    err = abs(report.dual_objective - (-1.0))
    cert = extract_cone(report, program)
    min_coeff = min(
        (v for coeffs in (cert.xy_coeffs, cert.yz_coeffs) for v in coeffs.values()),
        default=0.0,
    )
    ok = err <= KRIVINE_TOL and min_coeff >= -1e-9
    _report(6, "cone hierarchy certifies the interval", ok,
            f"lambda err {err:.1e}, min coeff {min_coeff:.1e}")
    assert ok
    assert verify(cert, instance).passed


def test_criterion_7_duality_gap(suite):
    worst = 0.0
    for entry in _optimal_entries(suite):
        gap = abs(entry.report.primal_objective - entry.report.dual_objective)
        worst = max(worst, gap)
        assert gap <= GAP_TOL, (entry.instance_name, entry.variant, entry.r, gap)
    _report(7, "no duality gap at optimality", True, f"worst gap {worst:.1e}")


def test_criterion_8_moment_law_invariants():
    instance = problems.twoballs()
    layout = instance.layout
    g, h = instance.g_constraints[0], instance.h_constraints[0]
    rng = np.random.default_rng(20260809)
    blocks = [
        moment_matrix(layout, "xy", 2),
        moment_matrix(layout, "yz", 2),
        localizing_matrix(g, "xy", 1),
        localizing_matrix(h, "yz", 1),
    ]
    worst_eig = np.inf
    worst_minor = np.inf
    for _ in range(50):
        k = int(rng.integers(1, 6))
        points = []
        while len(points) < k:
            pt = rng.uniform(-1, 1, 3)
            if instance.feasible(pt):
                points.append(pt)
        weights = rng.dirichlet(np.ones(k))
        u = mixture_moments(layout, weights, points, 2)
        for block in blocks:
            worst_eig = min(worst_eig, min_eigenvalue(block.instantiate(u)))
        for a in range(3):
            for b in range(3):
                lhs = u.values[(2 * a, 0, 0)] * u.values[(0, 2 * b, 0)]
                rhs = u.values[(a, b, 0)] ** 2
                worst_minor = min(worst_minor, lhs - rhs)
    ok = worst_eig >= PSD_FLOOR and worst_minor >= PSD_FLOOR
    _report(8, "moment-law invariants", ok,
            f"min eigenvalue {worst_eig:.1e}, min minor slack {worst_minor:.1e}")
    assert ok


def test_criterion_9_fault_injection(suite):
    entry = suite.entries[("twoballs", "schmudgen-sparse", 2)]
    cert = extract_sos(entry.report, entry.program)
    term = cert.terms[0]
    gram = term.gram.copy()
    gram[0, 0] += 0.1
    tampered = SOSCertificate(
        cert.lam,
        (type(term)(term.family, term.subset, term.block, term.weight, term.basis, gram),)
        + cert.terms[1:],
        cert.mode,
        cert.order,
        cert.layout,
    )
    result = verify(tampered, problems.get("twoballs"))
    ok = (not result.passed) and result.residual >= TAMPER_REJECT
    _report(9, "fault injection rejected", ok, f"residual {result.residual:.3f}")
    assert ok
