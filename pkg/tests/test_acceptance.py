"""Acceptance checks, one test per criterion, each at its stated tolerance.

The summary lines ("[pass] ...") are collected and printed at the end of the run.
"""
import pytest

from nodalsplit import verify

RESULTS = []


def _check(res):
    RESULTS.append(res)
    print(res.line())
    for key, val in res.measured.items():
        print(f"    {key} = {val}")
    assert res.passed is True, f"{res.line()} tolerance: {res.tolerance} measured: {res.measured}"


def test_degenerate_eigenvalue_and_index():
    _check(verify.criterion_1())


def test_variation_matrix_consistency_random_shapes():
    _check(verify.criterion_2(seed=0))


def test_coefficient_envelope():
    _check(verify.criterion_3(seed=0))


def test_limit_nodal_counts_and_predictor():
    _check(verify.criterion_4())


def test_second_order_convergence_flat():
    _check(verify.criterion_5())


@pytest.mark.slow
def test_branch_slopes():
    _check(verify.criterion_6())


@pytest.mark.slow
def test_avoided_crossing_gap_scaling():
    _check(verify.criterion_7())


@pytest.mark.slow
def test_curve_counts_and_separation():
    _check(verify.criterion_8())


@pytest.mark.slow
def test_mode_amplitudes_and_boundary_coefficients():
    _check(verify.criterion_9())


@pytest.mark.slow
def test_boundary_angles():
    _check(verify.criterion_10())
