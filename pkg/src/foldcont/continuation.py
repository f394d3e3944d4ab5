"""Branch tracing: natural continuation on the stable branch, then
pseudo-arclength through folds, with fold refinement and event records.

A trace starts at (mu, v) = (0, 0), follows the minimal branch in mu
while the principal eigenvalue stays well positive, switches to
arclength stepping, refines every sign change of sigma_1 to a fold
record, and stops at MuFloor, NormCap, MaxSteps or a degeneracy.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .assemble import DiscreteOperator, assemble_elliptic
from .diffeo import Diffeomorphism, identity_diffeo
from .errors import (ConfigError, DomainError, FoldcontError, NoConvergence,
                     SingularBordered, SingularJacobian, StepFailure)
from .mesh import Mesh, ReferenceDomain, build_mesh
from .nonlinearity import NonlinearitySpec
from .solver import (StateVector, bordered_solve, linearize, newton_correct,
                     residual)
from . import spectral
from .spectral import FoldRecord, near_zero_eigenpairs

__all__ = [
    "Problem",
    "ContinuationConfig",
    "BranchPoint",
    "BranchEvent",
    "Branch",
    "make_problem",
    "trace_minimal_branch",
    "step_pseudoarclength",
    "trace_continuum",
    "refine_fold",
    "check_simple_curve",
]


@dataclass
class Problem:
    domain: ReferenceDomain
    mesh: Mesh
    op: DiscreteOperator
    spec: NonlinearitySpec
    h: Diffeomorphism


def make_problem(domain: ReferenceDomain, spec: NonlinearitySpec,
                 h: Optional[Diffeomorphism] = None) -> Problem:
    mesh = build_mesh(domain)
    if h is None:
        h = identity_diffeo(mesh.dim)
    op = assemble_elliptic(mesh, h)
    return Problem(domain=domain, mesh=mesh, op=op, spec=spec, h=h)


@dataclass
class ContinuationConfig:
    ds_init: float = 0.1
    ds_min: float = 1e-8
    ds_max: float = 0.5
    mu_floor: float = 0.05
    norm_cap: float = 10.0
    max_steps: int = 1000
    omega: float = 0.5          # weight of the mu component in the arc norm
    newton_tol: float = 1e-10
    max_newton: int = 25
    switch_ratio: float = 0.2   # leave natural continuation below this sigma1 fraction
    fold_tol: float = 1e-8
    snapshot_every: int = 1
    eig_k: int = 4
    shift_tol: float = 1e-10
    cr_window: int = 4

    def __post_init__(self):
        if not (0.0 < self.ds_min <= self.ds_init <= self.ds_max):
            raise ConfigError("need 0 < ds_min <= ds_init <= ds_max")
        if self.mu_floor <= 0.0:
            raise ConfigError("mu_floor must be positive")
        if self.norm_cap <= 0.0:
            raise ConfigError("norm_cap must be positive")
        if not 0.0 < self.omega < 1.0:
            raise ConfigError("omega must lie strictly between 0 and 1")


@dataclass
class BranchPoint:
    s: float
    mu: float
    v: Optional[np.ndarray]     # thinned to None off snapshot points
    sup_norm: float
    sigma1: float
    morse_index: int
    tangent: tuple              # (tau_v, tau_mu), unit in the weighted norm

    def scalars(self) -> dict:
        return {"s": self.s, "mu": self.mu, "sup_norm": self.sup_norm,
                "sigma1": self.sigma1, "morse_index": self.morse_index}


@dataclass
class BranchEvent:
    kind: str   # Fold | MuFloor | NormCap | MaxSteps | NewtonFailure | DegeneratePoint | SwitchToArclength
    s_at: float
    info: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "s_at": self.s_at, "info": self.info}


@dataclass
class Branch:
    points: List[BranchPoint] = field(default_factory=list)
    events: List[BranchEvent] = field(default_factory=list)
    folds: List[FoldRecord] = field(default_factory=list)

    @property
    def last(self) -> BranchPoint:
        return self.points[-1]


# ----------------------------------------------------------------------
# norms and tangents
# ----------------------------------------------------------------------

def _arc_norm(op, omega, dv, dmu) -> float:
    return float(np.sqrt(omega * dmu ** 2
                         + (1.0 - omega) * np.dot(op.w * dv, dv)))


def _weighted_tangent(tangent, omega):
    tau_v, tau_mu = tangent
    return ((1.0 - omega) * tau_v, omega * tau_mu)


def _compute_tangent(lin, prev_tangent, omega):
    z_v, z_mu = bordered_solve(lin, np.zeros(lin.matrix.shape[0]), 1.0,
                               _weighted_tangent(prev_tangent, omega))
    nrm = _arc_norm(lin.op, omega, z_v, z_mu)
    tau_v, tau_mu = z_v / nrm, z_mu / nrm
    ip = (omega * prev_tangent[1] * tau_mu
          + (1.0 - omega) * np.dot(lin.op.w * prev_tangent[0], tau_v))
    if ip < 0.0:
        tau_v, tau_mu = -tau_v, -tau_mu
    return tau_v, tau_mu


def _spectrum_at(problem, state, config, top_estimate=None):
    lin = linearize(problem.op, problem.spec, state)
    pairs = spectral.eigenpairs(lin, min(config.eig_k,
                                         max(1, lin.matrix.shape[0] - 2)),
                                top_estimate=top_estimate)
    sigma1 = pairs[0].sigma
    index, near = spectral.morse_index(lin, config.shift_tol, pairs=pairs)
    return lin, sigma1, index, near


def _make_point(problem, state, s, sigma1, index, tangent, store_v=True):
    return BranchPoint(
        s=float(s), mu=state.mu,
        v=np.array(state.v) if store_v else None,
        sup_norm=state.sup_norm, sigma1=float(sigma1),
        morse_index=int(index), tangent=tangent)


# ----------------------------------------------------------------------
# natural continuation on the minimal branch
# ----------------------------------------------------------------------

def trace_minimal_branch(problem: Problem, config: ContinuationConfig) -> Branch:
    """Continuation in mu from (0, 0) while sigma_1 stays safely positive."""
    op, spec = problem.op, problem.spec
    branch = Branch()
    n = op.n

    state = StateVector(np.zeros(n), 0.0)
    lin, sigma1, index, _ = _spectrum_at(problem, state, config)
    sigma1_ref = sigma1
    tangent = _compute_tangent(lin, (np.zeros(n), 1.0), config.omega)
    branch.points.append(_make_point(problem, state, 0.0, sigma1, index, tangent))

    dmu = config.ds_init
    s = 0.0
    while len(branch.points) < config.max_steps:
        last = branch.last
        if last.sigma1 < config.switch_ratio * sigma1_ref:
            branch.events.append(BranchEvent("SwitchToArclength", last.s))
            break
        mu_new = last.mu + dmu
        slope = (last.tangent[0] / last.tangent[1]
                 if abs(last.tangent[1]) > 1e-12 else np.zeros(n))
        v_guess = last.v + dmu * slope
        try:
            result = newton_correct(op, spec, mu_new, v_guess,
                                    tol=config.newton_tol,
                                    max_iter=config.max_newton)
        except (NoConvergence, SingularJacobian, DomainError):
            dmu *= 0.5
            if dmu < config.ds_min:
                branch.events.append(BranchEvent(
                    "NewtonFailure", last.s, {"stage": "minimal"}))
                return branch
            continue
        state = StateVector(result.v, mu_new)
        lin, sigma1, index, _ = _spectrum_at(problem, state, config,
                                             top_estimate=-last.sigma1)
        if sigma1 <= 0.0:
            # overshot the fold; retry with a smaller natural step
            dmu *= 0.5
            if dmu < config.ds_min:
                branch.events.append(BranchEvent(
                    "NewtonFailure", last.s, {"stage": "minimal-overshoot"}))
                return branch
            continue
        tangent = _compute_tangent(lin, last.tangent, config.omega)
        s += _arc_norm(op, config.omega, state.v - last.v, dmu)
        branch.points.append(_make_point(problem, state, s, sigma1, index, tangent))
        if result.iterations <= 3:
            dmu = min(dmu * 1.3, config.ds_max)
    else:
        branch.events.append(BranchEvent("MaxSteps", branch.last.s))
    return branch


# ----------------------------------------------------------------------
# pseudo-arclength stepping
# ----------------------------------------------------------------------

def _correct_arclength(problem, last: BranchPoint, ds, config):
    """One predictor-corrector step; returns (state, lin, iterations)."""
    op, spec = problem.op, problem.spec
    omega = config.omega
    tol = max(config.newton_tol, 10.0 * op.res_floor)
    tau_v, tau_mu = last.tangent
    v = last.v + ds * tau_v
    mu = last.mu + ds * tau_mu
    tan_eff = _weighted_tangent(last.tangent, omega)
    for it in range(config.max_newton):
        try:
            state = StateVector(v, mu)
            res = residual(op, spec, state)
        except DomainError as exc:
            raise StepFailure(str(exc)) from exc
        if state.sup_norm > 4.0 * config.norm_cap:
            # an escaped iterate makes f(v) overflow and the bordered
            # factorization meaningless; treat as a failed step, not a
            # degeneracy, so the caller can retry with a smaller ds
            raise StepFailure(
                f"corrector iterate escaped (sup = {state.sup_norm:.3e})")
        con = (omega * tau_mu * (mu - last.mu)
               + (1.0 - omega) * np.dot(op.w * tau_v, v - last.v) - ds)
        if (np.max(np.abs(res)) <= tol
                and abs(con) <= tol * max(1.0, abs(ds))):
            lin = linearize(op, spec, state)
            return state, lin, it
        lin = linearize(op, spec, state)
        dv, dmu = bordered_solve(lin, -res, -con, tan_eff)
        v = v + dv
        mu = mu + dmu
        if not (np.all(np.isfinite(v)) and np.isfinite(mu)):
            raise StepFailure("non-finite corrector iterate")
    raise StepFailure(f"corrector did not converge at ds = {ds:.3e}")


def step_pseudoarclength(problem: Problem, last: BranchPoint, ds: float,
                         config: ContinuationConfig):
    """Advance one arclength step; returns (BranchPoint, newton_iterations)."""
    state, lin, iters = _correct_arclength(problem, last, ds, config)
    pairs = spectral.eigenpairs(lin, min(config.eig_k,
                                         max(1, lin.matrix.shape[0] - 2)),
                                top_estimate=-last.sigma1)
    sigma1 = pairs[0].sigma
    index, _ = spectral.morse_index(lin, config.shift_tol, pairs=pairs)
    tangent = _compute_tangent(lin, last.tangent, config.omega)
    s = last.s + _arc_norm(problem.op, config.omega,
                           state.v - last.v, state.mu - last.mu)
    return _make_point(problem, state, s, sigma1, index, tangent), iters


# ----------------------------------------------------------------------
# fold refinement
# ----------------------------------------------------------------------

def refine_fold(problem: Problem, lo: BranchPoint, hi: BranchPoint,
                config: ContinuationConfig) -> FoldRecord:
    """Regula-falsi on sigma_1 along the step from lo toward hi."""
    from .errors import BracketError

    if lo.sigma1 * hi.sigma1 >= 0.0:
        raise BracketError("no sigma_1 sign change over the bracket")
    t_a, g_a = 0.0, lo.sigma1
    t_b, g_b = hi.s - lo.s, hi.sigma1
    state = None
    sigma = g_b
    for _ in range(80):
        t = t_a - g_a * (t_b - t_a) / (g_b - g_a)
        t = min(max(t, t_a + 1e-3 * (t_b - t_a)), t_b - 1e-3 * (t_b - t_a))
        state, lin, _ = _correct_arclength(problem, lo, t, config)
        pairs = near_zero_eigenpairs(lin, min(2, lin.matrix.shape[0] - 1))
        sigma = pairs[0].sigma
        if abs(sigma) <= config.fold_tol:
            break
        if sigma * g_a > 0.0:
            t_a, g_a = t, sigma
        else:
            t_b, g_b = t, sigma
    else:
        if abs(sigma) > 100 * config.fold_tol:
            raise BracketError(
                f"fold refinement stalled at |sigma| = {abs(sigma):.3e}")

    lin = linearize(problem.op, problem.spec, state)
    k = min(3, lin.matrix.shape[0] - 1)
    pairs = near_zero_eigenpairs(lin, k)
    eig = pairs[0]
    gap = abs(pairs[1].sigma) if len(pairs) > 1 else float("inf")
    tv, tv_norm = spectral.transversality(problem.spec, state, eig, problem.op)
    s_fold = lo.s + _arc_norm(problem.op, config.omega,
                              state.v - lo.v, state.mu - lo.mu)
    return FoldRecord(
        s_fold=float(s_fold), mu_fold=state.mu, sup_norm=state.sup_norm,
        eigenpair=eig, spectral_gap=float(gap), transversality=tv,
        transversality_normalized=tv_norm, v=np.array(state.v))


def cr_local_diagnostics(problem: Problem, record: FoldRecord,
                         base_point: BranchPoint, config: ContinuationConfig,
                         delta: Optional[float] = None, n_each: int = 4):
    """Expansion diagnostics from fine arclength samples around a fold.

    Steps off the refined fold point in both directions with a small
    fixed arc increment, so the quadratic fits are local regardless of
    the step sizes used by the main trace.
    """
    op, spec = problem.op, problem.spec
    state = StateVector(record.v, record.mu_fold)
    lin = linearize(op, spec, state)
    tangent = _compute_tangent(lin, base_point.tangent, config.omega)
    fold_bp = _make_point(problem, state, record.s_fold, 0.0, 0, tangent)
    if delta is None:
        delta = min(0.02, 0.5 * config.ds_init)
    ds_list, mus, sigs, vs = [], [], [], []
    for k in list(range(-n_each, 0)) + list(range(1, n_each + 1)):
        d = k * delta
        st, lin_s, _ = _correct_arclength(problem, fold_bp, d, config)
        pair = near_zero_eigenpairs(lin_s, 1)[0]
        ds_list.append(d)
        mus.append(st.mu)
        sigs.append(pair.sigma)
        vs.append(np.array(st.v))
    return spectral.cr_from_samples(ds_list, mus, sigs, vs, record, op, spec,
                                    config.omega)


# ----------------------------------------------------------------------
# the full continuum trace
# ----------------------------------------------------------------------

def trace_continuum(problem: Problem, config: ContinuationConfig,
                    resume_from: Optional[Branch] = None) -> Branch:
    """Trace from (0,0) until MuFloor / NormCap / MaxSteps, recording folds.

    A partial branch is always returned; degeneracies become events, not
    exceptions.
    """
    if resume_from is not None and resume_from.points:
        branch = resume_from
    else:
        branch = trace_minimal_branch(problem, config)
        if branch.events and branch.events[-1].kind == "NewtonFailure":
            return branch

    ds = config.ds_init
    while len(branch.points) < config.max_steps:
        last = branch.last
        if last.mu < config.mu_floor and last.s > 0:
            branch.events.append(BranchEvent("MuFloor", last.s,
                                             {"mu": last.mu}))
            break
        if last.sup_norm > config.norm_cap:
            branch.events.append(BranchEvent("NormCap", last.s,
                                             {"sup_norm": last.sup_norm}))
            break
        try:
            point, iters = step_pseudoarclength(problem, last, ds, config)
        except (StepFailure, SingularJacobian) as exc:
            ds *= 0.5
            if ds < config.ds_min:
                branch.events.append(BranchEvent(
                    "NewtonFailure", last.s, {"reason": str(exc)}))
                break
            continue
        except SingularBordered as exc:
            branch.events.append(BranchEvent(
                "DegeneratePoint", last.s, {"reason": str(exc)}))
            break
        if point.s - last.s > 2.0 * ds:
            # corrector hopped to a remote point; not a valid arc step
            ds *= 0.5
            if ds < config.ds_min:
                branch.events.append(BranchEvent(
                    "NewtonFailure", last.s,
                    {"reason": "persistent corrector jumps"}))
                break
            continue

        thin = (len(branch.points) % max(1, config.snapshot_every)) == 0
        if not thin:
            point.v = None
        branch.points.append(point)

        if point.mu < config.mu_floor:
            # overshot the floor within one step; a sign change here is a
            # corrector artifact near the trivial branch, not a fold
            branch.events.append(BranchEvent("MuFloor", point.s,
                                             {"mu": point.mu}))
            break
        if point.sup_norm > config.norm_cap:
            # same for the a priori bound: past the cap the spectrum is
            # not trustworthy, so stop before the sign-change test
            branch.events.append(BranchEvent("NormCap", point.s,
                                             {"sup_norm": point.sup_norm}))
            break

        if last.sigma1 * point.sigma1 < 0.0:
            try:
                record = refine_fold(problem, last, point, config)
            except (StepFailure, SingularBordered) as exc:
                branch.events.append(BranchEvent(
                    "DegeneratePoint", last.s, {"reason": str(exc)}))
                break
            if record.spectral_gap <= 10.0 * config.fold_tol or \
                    abs(record.transversality_normalized) < 1e-3:
                branch.folds.append(record)
                branch.events.append(BranchEvent(
                    "DegeneratePoint", record.s_fold,
                    {"gap": record.spectral_gap,
                     "transversality": record.transversality_normalized}))
                break
            try:
                record.cr = cr_local_diagnostics(problem, record, last, config)
            except FoldcontError:
                record.cr = None
            branch.folds.append(record)
            branch.events.append(BranchEvent(
                "Fold", record.s_fold, {"mu": record.mu_fold,
                                        "fold_index": len(branch.folds) - 1}))
        if iters <= 3:
            ds = min(ds * 1.3, config.ds_max)
        elif iters > 8:
            ds = max(ds * 0.5, config.ds_min)
    else:
        branch.events.append(BranchEvent("MaxSteps", branch.last.s))
    return branch


def check_simple_curve(branch: Branch, ds_max: float,
                       mu_tol: float = 1e-8, v_tol: float = 1e-6) -> bool:
    """No two well-separated points coincide in (mu, v)."""
    pts = [p for p in branch.points if p.v is not None]
    for i, a in enumerate(pts):
        for b in pts[i + 1:]:
            if abs(b.s - a.s) <= 5.0 * ds_max:
                continue
            if abs(a.mu - b.mu) < mu_tol and \
                    float(np.max(np.abs(a.v - b.v))) < v_tol:
                return False
    return True
