import numpy as np
import pytest

import foldcont as fc
from foldcont.continuation import ContinuationConfig, trace_continuum


@pytest.fixture(scope="session")
def interval_problem():
    return fc.make_problem(fc.domain_from_key("interval:64"), fc.exponential())


@pytest.fixture(scope="session")
def disk_problem():
    return fc.make_problem(fc.domain_from_key("disk:24x48"), fc.exponential())


@pytest.fixture(scope="session")
def rect_problem():
    return fc.make_problem(fc.domain_from_key("rect:16x16"), fc.exponential())


@pytest.fixture(scope="session")
def interval_branch(interval_problem):
    return trace_continuum(interval_problem, ContinuationConfig())


@pytest.fixture(scope="session")
def disk_branch(disk_problem):
    cfg = ContinuationConfig(mu_floor=0.15, norm_cap=9.0)
    return trace_continuum(disk_problem, cfg)


def solve_at_mu(problem, mu_target, nsteps=8):
    """Ramp a Newton solve from v=0 up to mu_target on the minimal branch."""
    from foldcont.solver import newton_correct

    v = np.zeros(problem.op.n)
    for mu in np.linspace(mu_target / nsteps, mu_target, nsteps):
        v = newton_correct(problem.op, problem.spec, float(mu), v).v
    return fc.StateVector(v, mu_target)
