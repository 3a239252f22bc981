"""Acceptance criteria, one verdict line each (see the terminal summary)."""

import time

import pytest

from helmsweep.harness import reproduce_table, within_tolerance
from helmsweep.reference_counts import ALPHAS, OUTERS, TABLE_SETUP
from helmsweep.verification import equivalence_suite, nilpotency_suite, structure_suite

COARSE_PS = (4, 8, 16)
CELL_BUDGET_S = 5.0
TABLE_BUDGET_S = 600.0


@pytest.fixture(scope="module")
def nilpotency():
    return nilpotency_suite()


@pytest.fixture(scope="module")
def equivalence():
    return equivalence_suite()


@pytest.fixture(scope="module")
def structure():
    return structure_suite()


def checks_by_name(report):
    return {check.name: check for check in report.checks}


def check_lines(checks):
    return [
        f"{'ok  ' if check.passed else 'MISS'} {check.name}: {check.measured:.2e} "
        f"{'>=' if check.lower else '<='} {check.tolerance:.0e} over {check.runs} runs"
        + ("" if check.passed else f", worst at {check.worst}")
        for check in checks
    ]


@pytest.fixture(scope="module")
def exact_rows():
    """alpha = 0 rows of every coarse table, timed per (p, outer) pair (both drivers share one build)."""
    rows = {}
    for table_id in TABLE_SETUP:
        for p in COARSE_PS:
            for outer in OUTERS:
                start = time.perf_counter()
                cells = reproduce_table(table_id, 64, ps=(p,), alphas=(0.0,), outers=(outer,))
                rows[(table_id, p, outer)] = (cells, time.perf_counter() - start)
    return rows


def test_criterion_1_exact_rows_take_one_iteration(exact_rows, acceptance):
    cells = [cell for group, _ in exact_rows.values() for cell in group]
    ones = sum(cell.report.converged and cell.report.iters == 1 for cell in cells)
    slowest = max(seconds for _, seconds in exact_rows.values())
    passed = ones == len(cells) and slowest < CELL_BUDGET_S
    details = [
        f"table {t} p={p} {outer}: iters {[c.iters_text for c in group]} in {seconds:.2f}s"
        for (t, p, outer), (group, seconds) in exact_rows.items()
        if any(c.report.iters != 1 for c in group) or seconds >= CELL_BUDGET_S
    ]
    summary = f"{ones}/{len(cells)} alpha=0 cells need exactly 1 iteration; slowest cell pair {slowest:.2f}s < {CELL_BUDGET_S:.0f}s"
    assert acceptance(1, passed, summary, details), summary


def test_criterion_2_exact_sweeps_solve_in_one_application(nilpotency, acceptance):
    named = checks_by_name(nilpotency)
    checks = [named[name] for name in ("dosm-exact-one-sweep", "lu-sweep-exact", "source-transfer-exact", "polarized-exact")]
    worst = max(check.measured for check in checks)
    passed = all(check.passed for check in checks)
    summary = f"worst one-application residual {worst:.2e} <= 1e-10 (16/32 grids, J 2-4, alpha 0/0.1/1)"
    assert acceptance(2, passed, summary, check_lines(checks)), summary


def test_criterion_3_parallel_schwarz_terminates_after_J_steps(nilpotency, acceptance):
    named = checks_by_name(nilpotency)
    after, before = named["posm-exact-after-J"], named["posm-inexact-before-J"]
    passed = after.passed and before.passed
    summary = f"error after J steps {after.measured:.2e} <= 1e-10, smallest error after J-1 steps {before.measured:.2e} >= 1e-3"
    assert acceptance(3, passed, summary, check_lines([after, before])), summary


def test_criterion_4_global_transmission_two_phase(nilpotency, acceptance):
    check = checks_by_name(nilpotency)["global-osm-two-phase"]
    summary = f"worst two-phase residual {check.measured:.2e} <= 1e-10 (includes J=4, 32x32, alpha=1)"
    assert acceptance(4, check.passed, summary, check_lines([check])), summary


def test_criterion_5_equivalence_suite(equivalence, acceptance):
    checks = equivalence.checks
    failed = [check.name for check in checks if not check.passed]
    summary = f"{len(checks) - len(failed)}/{len(checks)} equivalence checks within 1e-10 relative"
    if failed:
        summary += f"; failing: {', '.join(failed)}"
    assert acceptance(5, not failed, summary, check_lines(checks)), summary


def test_criterion_6_residual_substructuring(nilpotency, acceptance):
    named = checks_by_name(nilpotency)
    checks = [named["residual-substructuring"], named["residual-support-size"], named["residual-support-distance"]]
    exact, size, near = checks
    passed = all(check.passed for check in checks)
    summary = (
        f"residual {exact.measured:.2e} <= 1e-10, reduced/full size {size.measured:.3f} < 1, "
        f"support within {near.measured:.0f} gridline of an interface"
    )
    assert acceptance(6, passed, summary, check_lines(checks)), summary


ANCHORS = [
    (1, 1.0, 4, "gmres", (20, 19, 19)),
    (2, 0.01, 4, "richardson", (7, 4, 3)),
    (3, 0.1, 8, "gmres", (8, 6, 6)),
    (4, 0.05, 16, "richardson", (5, 5, 4)),
]


@pytest.mark.slow
def test_criterion_7_table_reproduction(exact_rows, acceptance):
    start = time.perf_counter()
    halves = {}
    for table_id in TABLE_SETUP:
        exact = [cell for (t, _, _), (group, _) in exact_rows.items() if t == table_id for cell in group]
        halves[(table_id, 64)] = exact + reproduce_table(table_id, 64, alphas=ALPHAS[1:])
        halves[(table_id, 128)] = reproduce_table(table_id, 128)
    elapsed = time.perf_counter() - start + sum(seconds for _, seconds in exact_rows.values())

    details = []
    for (table_id, inverse_h), cells in halves.items():
        misses = [cell for cell in cells if not within_tolerance(cell)]
        details.append(f"table {table_id} h=1/{inverse_h}: {len(cells) - len(misses)}/{len(cells)} cells within tolerance")
        for cell in misses:
            published = "-" if cell.reference is None else cell.reference
            details.append(
                f"  miss alpha={cell.alpha:g} p={cell.p} {cell.outer} {cell.driver}: {cell.iters_text} vs {published}"
            )

    anchors_ok = True
    for table_id, alpha, p, driver, expected in ANCHORS:
        found = {
            cell.outer: cell for cell in halves[(table_id, 64)] if (cell.alpha, cell.p, cell.driver) == (alpha, p, driver)
        }
        cells = [found[outer] for outer in OUTERS]
        ok = all(within_tolerance(cell) for cell in cells)
        anchors_ok &= ok
        details.append(
            f"anchor table {table_id} alpha={alpha:g} p={p} {driver}: "
            f"{tuple(cell.iters_text for cell in cells)} vs {expected} {'ok' if ok else 'MISS'}"
        )

    dashes = [
        cell
        for table_id in (1, 2)
        for cell in halves[(table_id, 64)]
        if cell.alpha == 1.0 and cell.driver == "richardson" and cell.reference is None
    ]
    dashes_ok = sum(not cell.report.converged for cell in dashes)
    details.append(f"alpha=1 Richardson '-' cells of tables 1-2 reproduced: {dashes_ok}/{len(dashes)}")

    total = sum(len(cells) for cells in halves.values())
    matched = sum(within_tolerance(cell) for cells in halves.values() for cell in cells)
    passed = matched == total and anchors_ok and dashes_ok == len(dashes) and elapsed < TABLE_BUDGET_S
    summary = (
        f"{matched}/{total} cells within tolerance (h=1/64 all p, h=1/128 p=4), "
        f"anchors {'ok' if anchors_ok else 'MISS'}, '-' cells {dashes_ok}/{len(dashes)}, "
        f"runtime {elapsed:.0f}s < {TABLE_BUDGET_S:.0f}s"
    )
    assert acceptance(7, passed, summary, details), summary


def test_criterion_8_structural_properties(structure, acceptance):
    checks = structure.checks
    failed = [check.name for check in checks if not check.passed]
    summary = f"{len(checks) - len(failed)}/{len(checks)} structural checks pass"
    assert acceptance(8, not failed, summary, check_lines(checks)), summary
