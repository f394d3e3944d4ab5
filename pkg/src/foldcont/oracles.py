"""Independent cross-checks: closed-form families, shooting, multistart.

Nothing here touches the continuation engine or the assembled operators
except where a routine explicitly evaluates a residual on a supplied
grid.  These routines provide reference values the main solver is tested
against, so they use different discretizations on purpose (an adaptive
one-dimensional integrator, closed-form families, dense Newton runs).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .errors import BlowupError, BracketError
from .nonlinearity import NonlinearitySpec, eval_f

__all__ = [
    "RadialFamilyPoint",
    "radial_profile",
    "radial_family_point",
    "radial_branch",
    "integrate_ivp",
    "shoot_boundary_value",
    "solutions_1d",
    "fold_1d_shooting",
    "interval_family_mu",
    "interval_family_sup",
    "interval_fold_exact",
    "multistart_enumerate",
]


# ----------------------------------------------------------------------
# closed-form radial family on the unit disk, f(v) = e^v
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class RadialFamilyPoint:
    """One member of the explicit radial family on the unit disk."""

    b: float
    mu: float
    sup_norm: float


def radial_profile(b: float, r) -> np.ndarray:
    """u_b(r) = 2 ln((1+b) / (1 + b r^2)); vanishes at r = 1."""
    r = np.asarray(r, dtype=float)
    return 2.0 * np.log((1.0 + b) / (1.0 + b * r * r))


def radial_family_point(b: float) -> RadialFamilyPoint:
    if b < 0.0:
        raise ValueError("family parameter b must be nonnegative")
    mu = 8.0 * b / (1.0 + b) ** 2
    return RadialFamilyPoint(b=float(b), mu=float(mu),
                             sup_norm=2.0 * np.log(1.0 + b))


def radial_branch(bs) -> List[RadialFamilyPoint]:
    return [radial_family_point(b) for b in np.asarray(bs, dtype=float)]


# ----------------------------------------------------------------------
# adaptive explicit Runge-Kutta integrator (Dormand-Prince 5(4) pair)
# ----------------------------------------------------------------------

_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192,
                   -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640,
                   -92097 / 339200, 187 / 2100, 1 / 40])


def integrate_ivp(fun, t0: float, t1: float, y0, rtol: float = 1e-10,
                  atol: float = 1e-12, blowup: float = 1e6,
                  max_steps: int = 100000) -> np.ndarray:
    """Integrate y' = fun(t, y) from t0 to t1; returns y(t1).

    Embedded 5(4) pair with standard PI-free step control.  Raises
    BlowupError when the solution magnitude exceeds ``blowup``.
    """
    y = np.array(y0, dtype=float)
    t = float(t0)
    direction = 1.0 if t1 >= t0 else -1.0
    h = direction * min(0.1 * abs(t1 - t0) + 1e-30, 0.05)
    for _ in range(max_steps):
        if direction * (t - t1) >= 0.0:
            return y
        if direction * (t + h - t1) > 0.0:
            h = t1 - t
        k = np.empty((7, y.size))
        k[0] = fun(t, y)
        for i in range(1, 7):
            yi = y + h * sum(a * k[j] for j, a in enumerate(_DP_A[i]))
            k[i] = fun(t + _DP_C[i] * h, yi)
        y5 = y + h * (_DP_B5 @ k)
        y4 = y + h * (_DP_B4 @ k)
        sc = atol + rtol * np.maximum(np.abs(y), np.abs(y5))
        err = np.sqrt(np.mean(((y5 - y4) / sc) ** 2))
        if err <= 1.0:
            t += h
            y = y5
            if np.max(np.abs(y)) > blowup:
                raise BlowupError(f"|y| exceeded {blowup:.1e} at t = {t:.6f}")
        fac = 0.9 * (max(err, 1e-16)) ** (-0.2)
        h *= min(5.0, max(0.2, fac))
    raise BlowupError("integrator step budget exhausted")


# ----------------------------------------------------------------------
# 1D two-point problem by symmetric shooting from the midpoint
# ----------------------------------------------------------------------

def shoot_boundary_value(spec: NonlinearitySpec, mu: float,
                         alpha: float, rtol: float = 1e-10) -> float:
    """v(1) for the profile with v(1/2) = alpha, v'(1/2) = 0.

    Solutions of v'' + mu f(v) = 0 on (0, 1) with zero boundary data are
    symmetric about the midpoint, so alpha is the candidate sup norm and
    roots of this map in alpha enumerate the solutions at fixed mu.
    """

    def rhs(t, y):
        (f,) = eval_f(spec, np.array([y[0]]), 0)
        return np.array([y[1], -mu * f[0]])

    y = integrate_ivp(rhs, 0.5, 1.0, np.array([alpha, 0.0]), rtol=rtol)
    return float(y[0])


def _alpha_peak(spec, mu, alpha_max, rtol):
    """Maximizer of the boundary map over [0, alpha_max] (golden section)."""
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = 0.0, float(alpha_max)
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    gc = shoot_boundary_value(spec, mu, c, rtol)
    gd = shoot_boundary_value(spec, mu, d, rtol)
    for _ in range(80):
        if b - a < 1e-12 * max(1.0, alpha_max):
            break
        if gc > gd:
            b, d, gd = d, c, gc
            c = b - invphi * (b - a)
            gc = shoot_boundary_value(spec, mu, c, rtol)
        else:
            a, c, gc = c, d, gd
            d = a + invphi * (b - a)
            gd = shoot_boundary_value(spec, mu, d, rtol)
    alpha = 0.5 * (a + b)
    return alpha, shoot_boundary_value(spec, mu, alpha, rtol)


def _bisect(g, a, b, ga, gb, tol=1e-12, max_iter=200):
    if ga == 0.0:
        return a
    if gb == 0.0:
        return b
    if ga * gb > 0.0:
        raise BracketError("no sign change for bisection")
    for _ in range(max_iter):
        m = 0.5 * (a + b)
        gm = g(m)
        if gm == 0.0 or (b - a) < tol:
            return m
        if ga * gm < 0.0:
            b, gb = m, gm
        else:
            a, ga = m, gm
    return 0.5 * (a + b)


def solutions_1d(spec: NonlinearitySpec, mu: float, alpha_max: float = 25.0,
                 rtol: float = 1e-10) -> List[float]:
    """Sup norms of all solutions at fixed mu (0, 1 or 2 for these f).

    The boundary map alpha -> v(1; alpha) is negative at alpha = 0 for
    mu > 0, rises to a single peak and falls again, so its roots come in
    at most one pair that merges at the fold.
    """
    if mu <= 0.0:
        return [0.0] if mu == 0.0 else []
    peak, g_peak = _alpha_peak(spec, mu, alpha_max, rtol)
    if g_peak < 0.0:
        return []
    g = lambda a: shoot_boundary_value(spec, mu, a, rtol)
    g0 = g(0.0)
    out = []
    if g0 < 0.0 <= g_peak:
        out.append(_bisect(g, 0.0, peak, g0, g_peak))
    g_hi = g(alpha_max)
    if g_hi < 0.0 <= g_peak:
        out.append(_bisect(g, peak, alpha_max, g_peak, g_hi))
    # a tangency produces two nearly equal roots; keep both only if distinct
    if len(out) == 2 and abs(out[1] - out[0]) < 1e-8:
        out = [0.5 * (out[0] + out[1])]
    return sorted(out)


def fold_1d_shooting(spec: NonlinearitySpec, mu_lo: float = 1.0,
                     mu_hi: float = 6.0, tol: float = 1e-10,
                     rtol: float = 1e-10) -> float:
    """Fold parameter by bisection on existence of shooting solutions."""

    def exists(mu):
        _, g_peak = _alpha_peak(spec, mu, 25.0, rtol)
        return g_peak >= 0.0

    if not exists(mu_lo):
        raise BracketError(f"no solution at mu_lo = {mu_lo}")
    if exists(mu_hi):
        raise BracketError(f"solution persists at mu_hi = {mu_hi}")
    while mu_hi - mu_lo > tol:
        mid = 0.5 * (mu_lo + mu_hi)
        if exists(mid):
            mu_lo = mid
        else:
            mu_hi = mid
    return 0.5 * (mu_lo + mu_hi)


# ----------------------------------------------------------------------
# closed-form family on the unit interval, f(v) = e^v
# ----------------------------------------------------------------------

def interval_family_mu(theta: float) -> float:
    """mu along the explicit one-parameter family on the interval."""
    return theta * theta / (2.0 * np.cosh(theta / 4.0) ** 2)


def interval_family_sup(theta: float) -> float:
    return 2.0 * np.log(np.cosh(theta / 4.0))


def interval_fold_exact(tol: float = 1e-14) -> tuple:
    """(mu*, sup*) at the interval fold: stationary point of mu(theta).

    The fold parameter solves (theta/4) tanh(theta/4) = 1.
    """
    g = lambda t: (t / 4.0) * np.tanh(t / 4.0) - 1.0
    theta = _bisect(g, 1.0, 20.0, g(1.0), g(20.0), tol=tol)
    return interval_family_mu(theta), interval_family_sup(theta)


# ----------------------------------------------------------------------
# multistart enumeration at fixed mu on an assembled problem
# ----------------------------------------------------------------------

def multistart_enumerate(problem, mu: float, n_starts: int, seed,
                         amp_max: float = 10.0, tol: float = 1e-10,
                         cluster_tol: float = 1e-6) -> List[np.ndarray]:
    """Distinct Newton limits at fixed mu from seeded random starts.

    Starts are random amplitudes on a fixed positive bump plus smooth
    seeded noise; converged iterates are clustered by sup distance.
    """
    from .solver import newton_correct
    from .errors import NoConvergence, SingularJacobian, DomainError

    mesh = problem.mesh
    pts = mesh.points[mesh.interior]
    if mesh.dim == 1:
        bump = np.sin(np.pi * pts[:, 0])
    elif mesh.kind == "disk":
        r2 = pts[:, 0] ** 2 + pts[:, 1] ** 2
        bump = 1.0 - r2
    else:
        lx, ly = mesh.domain.lengths
        bump = (np.sin(np.pi * pts[:, 0] / lx)
                * np.sin(np.pi * pts[:, 1] / ly))
    rng = np.random.default_rng(seed)
    found: List[np.ndarray] = []
    for _ in range(n_starts):
        amp = rng.uniform(0.0, amp_max)
        wiggle = rng.uniform(-0.2, 0.2) * bump * np.cos(
            rng.integers(1, 4) * np.pi * pts[:, 0])
        v0 = amp * bump + amp * wiggle
        try:
            res = newton_correct(problem.op, problem.spec, mu, v0,
                                 tol=tol, max_iter=60)
        except (NoConvergence, SingularJacobian, DomainError):
            continue
        v = res.v
        if any(float(np.max(np.abs(v - u))) < cluster_tol for u in found):
            continue
        found.append(v)
    found.sort(key=lambda u: float(np.max(np.abs(u))))
    return found
