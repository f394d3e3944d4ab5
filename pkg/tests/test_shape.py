"""Domain-variation derivative, boundary pairing, perturbed-domain sweep."""

import numpy as np
import pytest

import foldcont as fc
from foldcont.config import json_dumps_17
from foldcont.continuation import ContinuationConfig
from foldcont.errors import DomainError, NotAFold
from foldcont.shape import (PerturbationField, fd_domain_derivative,
                            genericity_experiment, hadamard_pairing,
                            shape_derivative_report, transport_term)
from foldcont.solver import StateVector

from conftest import solve_at_mu


def _field(problem, index=0):
    fields = fc.collar_basis(problem.domain.kind, 4, problem.domain.lengths)
    return PerturbationField(fields[index])


def test_transport_requires_solution(interval_problem):
    state = StateVector(np.ones(interval_problem.op.n), 1.0)
    with pytest.raises(DomainError):
        transport_term(interval_problem.op, interval_problem.spec, state,
                       _field(interval_problem))


def test_fd_matches_transport_interval():
    problem = fc.make_problem(fc.domain_from_key("interval:256"),
                              fc.exponential())
    state = solve_at_mu(problem, 1.0)
    hdot = _field(problem)
    formula = -transport_term(problem.op, problem.spec, state, hdot)
    errs = []
    for eps in (1e-2, 1e-3, 1e-4):
        fd = fd_domain_derivative(problem, state, hdot, eps)
        errs.append(problem.op.norm_w(fd - formula))
    assert errs[0] > errs[1] > errs[2]
    order = np.polyfit(np.log([1e-2, 1e-3, 1e-4]), np.log(errs), 1)[0]
    assert order >= 0.9


def test_shape_derivative_report_fields(interval_problem):
    state = solve_at_mu(interval_problem, 1.0)
    rep = shape_derivative_report(interval_problem, state,
                                  _field(interval_problem))
    assert rep.epsilons == [1e-2, 1e-3, 1e-4]
    assert len(rep.fd_values) == len(rep.errors) == 3
    assert rep.formula_values[0] == rep.formula_values[-1] > 0.0
    assert rep.errors[0] > rep.errors[-1]
    d = rep.to_dict()
    assert d["hadamard_lhs"] is None and d["relative_gap"] is None


def test_fd_derivative_smooth_field_disk(disk_problem):
    # dilation field: no collar truncation, first order in eps
    state = solve_at_mu(disk_problem, 1.0)
    hdot = PerturbationField(fc.LinearField(np.eye(2)))
    formula = -transport_term(disk_problem.op, disk_problem.spec, state, hdot)
    errs = [disk_problem.op.norm_w(
        fd_domain_derivative(disk_problem, state, hdot, eps) - formula)
        for eps in (1e-2, 1e-3)]
    assert errs[1] < 0.2 * errs[0]


def test_hadamard_pairing_at_disk_fold(disk_problem, disk_branch):
    rec = disk_branch.folds[0]
    state = StateVector(rec.v, rec.mu_fold)
    hdot = _field(disk_problem)  # radially symmetric boundary bump
    lhs, rhs = hadamard_pairing(disk_problem.op, disk_problem.spec, state,
                                rec.eigenpair, hdot)
    assert abs(lhs - rhs) <= 0.05 * max(abs(lhs), abs(rhs))
    assert abs(lhs) > 1e-3


def test_hadamard_rejects_non_fold(disk_problem):
    state = solve_at_mu(disk_problem, 1.0)
    lin = fc.linearize(disk_problem.op, disk_problem.spec, state)
    pair = fc.eigenpairs(lin, 1)[0]  # sigma well away from zero
    with pytest.raises(NotAFold):
        hadamard_pairing(disk_problem.op, disk_problem.spec, state, pair,
                         _field(disk_problem))


def test_boundary_trace_shape(disk_problem):
    hdot = _field(disk_problem)
    idx, arc, nu = disk_problem.op.boundary_quadrature()
    tr = hdot.boundary_trace(disk_problem.op)
    assert tr.shape == idx.shape
    # outward bump: nonnegative trace for the symmetric mode
    assert np.min(tr) > -1e-12


def test_genericity_experiment_report():
    base = fc.domain_from_key("rect:16x16")
    cfg = ContinuationConfig()
    rep = genericity_experiment(base, fc.exponential(), 3, 0.02, 2, 7, cfg)
    assert rep.summary["n_samples"] == 3
    assert rep.summary["n_failed_samples"] == 0
    assert [r["sample"] for r in rep.samples] == [0, 1, 2]
    for r in rep.samples:
        assert r["status"] == "ok"
        assert r["events"][-1] in ("MuFloor", "NormCap", "MaxSteps")
        for f in r["folds"]:
            assert f["spectral_gap"] > rep.summary["simple_threshold_gap"]
            assert f["transversality_normalized"] > 1e-3


def test_genericity_experiment_jobs_merge_identical():
    base = fc.domain_from_key("rect:16x16")
    cfg = ContinuationConfig()
    rep1 = genericity_experiment(base, fc.exponential(), 3, 0.02, 2, 7, cfg,
                                 jobs=1)
    rep2 = genericity_experiment(base, fc.exponential(), 3, 0.02, 2, 7, cfg,
                                 jobs=2)
    assert json_dumps_17(rep1.to_dict()) == json_dumps_17(rep2.to_dict())
