"""Nonlinear residual, linearization and the two linear solves.

Sign convention: the residual is Delta_h v + mu f(v) and the stored
linearization is L = Delta_h + mu diag(f'(v)).  Spectra reported to the
rest of the package (and in every output) are negated into the
convention where the principal eigenvalue is positive on the minimal
branch; the flip happens in spectral.py, nowhere else.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assemble import DiscreteOperator
from .errors import (DomainError, NoConvergence, SingularBordered,
                     SingularJacobian)
from .nonlinearity import NonlinearitySpec, eval_f

__all__ = [
    "StateVector",
    "LinearizedOperator",
    "residual",
    "linearize",
    "newton_correct",
    "bordered_solve",
    "bordered_factorization",
]


@dataclass
class StateVector:
    """Candidate solution pair: interior grid function v and parameter mu."""

    v: np.ndarray
    mu: float

    def __post_init__(self):
        self.v = np.asarray(self.v, dtype=float)
        self.mu = float(self.mu)

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.v))) if self.v.size else 0.0


class LinearizedOperator:
    """L = Delta_h + mu diag(f'(v)) plus the mu-column f(v)."""

    def __init__(self, op: DiscreteOperator, matrix, fvec, state: StateVector):
        self.op = op
        self.matrix = matrix.tocsr()
        self.fvec = fvec  # d(residual)/d(mu) = f(v)
        self.state = state
        self._lu = None

    @property
    def w(self):
        return self.op.w

    def solve(self, rhs):
        if self._lu is None:
            try:
                self._lu = spla.splu(self.matrix.tocsc())
            except RuntimeError as exc:
                raise SingularJacobian(str(exc)) from exc
        out = self._lu.solve(rhs)
        if not np.all(np.isfinite(out)):
            raise SingularJacobian("non-finite solution from factorization")
        return out


def _check_domain(spec: NonlinearitySpec, v: np.ndarray):
    if spec.lower_limit is not None and np.any(v <= spec.lower_limit):
        raise DomainError(
            f"iterate leaves the domain of f (min v = {v.min():.3e})")


def residual(op: DiscreteOperator, spec: NonlinearitySpec,
             state: StateVector) -> np.ndarray:
    """Delta_h v + mu f(v) on interior nodes; zero iff discrete solution."""
    _check_domain(spec, state.v)
    (f,) = eval_f(spec, state.v, 0)
    return op.apply(state.v) + state.mu * f


def linearize(op: DiscreteOperator, spec: NonlinearitySpec,
              state: StateVector) -> LinearizedOperator:
    _check_domain(spec, state.v)
    f, f1 = eval_f(spec, state.v, 1)
    matrix = op.lap + sp.diags(state.mu * f1)
    lin = LinearizedOperator(op, matrix, np.asarray(f, dtype=float), state)
    # max of the potential bounds the top eigenvalue from above (the
    # Dirichlet Laplacian part is negative definite), used by eigenpairs
    lin.potential_max = float(np.max(state.mu * f1)) if len(f1) else 0.0
    return lin


@dataclass
class NewtonResult:
    v: np.ndarray
    residual_history: list = field(default_factory=list)
    iterations: int = 0


def newton_correct(op: DiscreteOperator, spec: NonlinearitySpec, mu: float,
                   v0: np.ndarray, tol: float = 1e-10, max_iter: int = 25,
                   max_halvings: int = 8) -> NewtonResult:
    """Newton at fixed mu with a halving line search on residual increase."""
    tol = max(tol, 10.0 * op.res_floor)
    v = np.array(v0, dtype=float)
    res = residual(op, spec, StateVector(v, mu))
    rnorm = float(np.max(np.abs(res)))
    history = [rnorm]
    for it in range(max_iter):
        if rnorm <= tol:
            return NewtonResult(v, history, it)
        lin = linearize(op, spec, StateVector(v, mu))
        step = lin.solve(-res)
        lam = 1.0
        for _ in range(max_halvings + 1):
            v_try = v + lam * step
            try:
                res_try = residual(op, spec, StateVector(v_try, mu))
            except DomainError:
                lam *= 0.5
                continue
            rnorm_try = float(np.max(np.abs(res_try)))
            if rnorm_try < rnorm or rnorm_try <= tol:
                break
            lam *= 0.5
        else:
            raise NoConvergence("line search stalled", last_iterate=v,
                                history=history)
        v, res, rnorm = v_try, res_try, rnorm_try
        history.append(rnorm)
    if rnorm <= tol:
        return NewtonResult(v, history, max_iter)
    raise NoConvergence(
        f"no convergence in {max_iter} iterations (residual {rnorm:.3e})",
        last_iterate=v, history=history)


def bordered_factorization(lin: LinearizedOperator, tangent):
    """LU of [[L, f(v)], [w*tau_v, tau_mu]]; raises on genuine degeneracy."""
    tau_v, tau_mu = tangent
    n = lin.matrix.shape[0]
    col = sp.csr_matrix(lin.fvec[:, None])
    row = sp.csr_matrix((lin.w * tau_v)[None, :])
    corner = sp.csr_matrix(np.array([[float(tau_mu)]]))
    big = sp.bmat([[lin.matrix, col], [row, corner]], format="csc")
    try:
        lu = spla.splu(big)
    except RuntimeError as exc:
        raise SingularBordered(str(exc)) from exc
    return lu, n


def bordered_solve(lin: LinearizedOperator, rhs_v: np.ndarray, rhs_s: float,
                   tangent) -> tuple[np.ndarray, float]:
    """Solve L vdot + f(v) mudot = rhs_v with <tau_v, vdot>_w + tau_mu mudot = rhs_s."""
    lu, n = bordered_factorization(lin, tangent)
    sol = lu.solve(np.concatenate([rhs_v, [float(rhs_s)]]))
    if not np.all(np.isfinite(sol)):
        raise SingularBordered("non-finite bordered solution")
    return sol[:n], float(sol[n])
