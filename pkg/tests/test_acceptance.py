"""Acceptance suite: every pinned criterion at its stated tolerance.

Each test prints one pass/fail line per check (visible with -s or -rA;
`nearcrit verify all` prints them unconditionally).  Criterion 10's
exponent subcheck is a known red kept as stated: the asymptotic window of
the perturbed (p=1, N=9) branch lies beyond double-precision shooting
conditioning, so the accessible window's fitted exponent is inflated by
slowly decaying mass corrections.
"""

import pytest

from nearcrit import acceptance


def _run(k):
    results = acceptance.run_criterion(k)
    lines = []
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        line = (f"[{status}] {r.check}: value={r.lhs:.6g} "
                f"tol={r.tolerance:g} residual={r.residual:.3g}")
        print(line)
        lines.append((r, line))
    return lines


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_identities_criteria(k):
    for r, line in _run(k):
        assert r.passed, line


def test_criterion_5_pohozaev():
    for r, line in _run(5):
        assert r.passed, line


def test_criterion_6_supercritical_rate():
    for r, line in _run(6):
        assert r.passed, line


def test_criterion_7_subcritical_rate():
    for r, line in _run(7):
        assert r.passed, line


def test_criterion_8_profiles():
    for r, line in _run(8):
        assert r.passed, line


def test_criterion_9_concentration():
    for r, line in _run(9):
        assert r.passed, line


def test_criterion_10_perturbed():
    results = _run(10)
    windows = [(r, line) for r, line in results
               if r.check.startswith("10.window")]
    assert len(windows) == 3
    for r, line in windows:
        assert r.passed, line
    exponent = [(r, line) for r, line in results
                if r.check.startswith("10.perturbed-exponent")]
    assert len(exponent) == 1
    r, line = exponent[0]
    # Known red at desk scale; the blocking analysis is in the repo notes.
    # The assertion is kept as stated rather than weakened.
    assert r.passed, line + " | " + r.inputs["known_blocker"]


def test_criterion_11_box():
    for r, line in _run(11):
        assert r.passed, line
