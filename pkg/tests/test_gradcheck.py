import numpy as np
import pytest
import torch

from smokestyle.gradcheck import (
    GradReport,
    autograd_gradient,
    central_difference,
    check_advection,
    compare,
)


def test_report_pass_fail_and_text():
    ok = GradReport("thing", 5, 1, 1e-5, 1e-3)
    bad = GradReport("thing", 5, 1, 0.2, 1e-3)
    assert ok.passed and not bad.passed
    assert "ok" in str(ok) and "FAIL" in str(bad)


def test_central_difference_exact_on_quadratic():
    # (f(x+h) - f(x-h)) / 2h recovers the gradient of a quadratic exactly
    x0 = np.array([1.0, -2.0, 3.0])
    grad = central_difference(lambda x: float((x ** 2).sum()), x0, range(3), h=0.1)
    assert np.allclose(grad, 2 * x0, atol=1e-10)


def test_autograd_gradient_flattens():
    x0 = np.arange(6, dtype=np.float64).reshape(2, 3)
    grad = autograd_gradient(lambda x: (x ** 3).sum(), x0)
    assert grad.shape == (6,)
    assert np.allclose(grad, 3 * x0.reshape(-1) ** 2)


def test_compare_accepts_correct_gradient():
    x0 = np.array([0.3, -0.7, 1.1])
    report = compare("cubic", lambda x: (x ** 3).sum(), x0)
    assert report.passed
    assert report.checked == 3 and report.skipped == 0


def test_compare_flags_wrong_gradient():
    class Doubler(torch.autograd.Function):
        @staticmethod
        def forward(ctx, x):
            ctx.save_for_backward(x)
            return (x ** 2).sum()

        @staticmethod
        def backward(ctx, g):
            (x,) = ctx.saved_tensors
            return 4 * x * g  # claims twice the true gradient

    report = compare("broken", Doubler.apply, np.array([0.5, 1.5]))
    assert not report.passed
    assert report.max_rel_err == pytest.approx(1.0, rel=1e-3)


def test_compare_skips_below_magnitude_floor():
    # gradient of x**2 at 0 is 0: below the floor, excluded from the quotient
    report = compare("flat spot", lambda x: (x ** 2).sum(), np.array([0.0, 2.0]))
    assert report.skipped == 1 and report.checked == 1
    assert report.passed


def test_advection_suite_passes():
    report = check_advection()
    assert report.passed
    assert report.checked > 0
