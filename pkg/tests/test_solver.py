"""Newton corrector and bordered linear solves."""

import numpy as np
import pytest

import foldcont as fc
from foldcont.errors import NoConvergence, SingularBordered
from foldcont.solver import (StateVector, bordered_solve, linearize,
                             newton_correct, residual)


def test_residual_zero_at_trivial_mu_zero(interval_problem):
    p = interval_problem
    res = residual(p.op, p.spec, StateVector(np.zeros(p.op.n), 0.0))
    assert np.max(np.abs(res)) == 0.0


def test_newton_quadratic_history(interval_problem):
    p = interval_problem
    x = p.op.mesh.points[p.op.mesh.interior, 0]
    v0 = 0.3 * np.sin(np.pi * x)
    out = newton_correct(p.op, p.spec, 1.0, v0, tol=1e-13)
    hist = np.array(out.residual_history)
    assert hist[-1] < 1e-10
    # quadratic tail: log-residual roughly doubles per step before roundoff
    mid = hist[(hist > 1e-11) & (hist < 1e-2)]
    if len(mid) >= 2:
        ratios = np.log(mid[1:]) / np.log(mid[:-1])
        assert np.all(ratios > 1.5)


def test_newton_solution_is_residual_zero(disk_problem):
    p = disk_problem
    out = newton_correct(p.op, p.spec, 0.5, np.zeros(p.op.n))
    res = residual(p.op, p.spec, StateVector(out.v, 0.5))
    assert np.max(np.abs(res)) <= max(1e-10, 10 * p.op.res_floor)
    assert np.all(out.v > 0)  # minimal solutions are positive


def test_newton_failure_far_from_branch(interval_problem):
    p = interval_problem
    with pytest.raises(NoConvergence):
        newton_correct(p.op, p.spec, 10.0, np.zeros(p.op.n), max_iter=5)


def test_linearize_matches_fd_directional(interval_problem):
    p = interval_problem
    rng = np.random.default_rng(3)
    v = rng.uniform(0.0, 0.5, p.op.n)
    dv = rng.standard_normal(p.op.n)
    st = StateVector(v, 1.2)
    lin = linearize(p.op, p.spec, st)
    eps = 1e-7
    fd = (residual(p.op, p.spec, StateVector(v + eps * dv, 1.2))
          - residual(p.op, p.spec, StateVector(v - eps * dv, 1.2))) / (2 * eps)
    assert np.max(np.abs(lin.matrix @ dv - fd)) < 1e-5


def test_bordered_solve_consistency(interval_problem):
    p = interval_problem
    out = newton_correct(p.op, p.spec, 1.0, np.zeros(p.op.n))
    st = StateVector(out.v, 1.0)
    lin = linearize(p.op, p.spec, st)
    tau_v = np.ones(p.op.n) / np.sqrt(p.op.n)
    rhs = np.sin(np.arange(p.op.n))
    dv, dmu = bordered_solve(lin, rhs, 0.7, (tau_v, 0.5))
    f_mu = lin.fvec
    assert np.max(np.abs(lin.matrix @ dv + dmu * f_mu - rhs)) < 1e-9
    assert np.dot(lin.w * tau_v, dv) + 0.5 * dmu == pytest.approx(0.7, abs=1e-9)


def test_bordered_singular_raises(interval_problem):
    p = interval_problem
    out = newton_correct(p.op, p.spec, 1.0, np.zeros(p.op.n))
    lin = linearize(p.op, p.spec, StateVector(out.v, 1.0))
    # zero tangent row and zero mu column make the system singular
    lin.fvec = np.zeros(p.op.n)
    with pytest.raises(SingularBordered):
        bordered_solve(lin, np.zeros(p.op.n), 1.0,
                       (np.zeros(p.op.n), 0.0))
