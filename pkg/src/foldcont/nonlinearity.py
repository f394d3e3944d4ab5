"""Nonlinearities f and runtime checks of the standing hypotheses.

Built-in kinds are the exponential f(t) = e^t (domain all of R) and the
power family f(t) = (1+t)^p with p > 1 (domain t > -1).  Custom
nonlinearities are tabulated Chebyshev series for f, f', f'' on a fixed
interval; evaluation outside that interval is an error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from numpy.polynomial import chebyshev as cheb

from .errors import ConfigError, DomainError

__all__ = [
    "NonlinearitySpec",
    "GrowthReport",
    "exponential",
    "power",
    "custom",
    "eval_f",
    "check_h1",
    "check_growth",
    "spec_from_key",
]


@dataclass(frozen=True)
class NonlinearitySpec:
    """Immutable description of a nonlinearity f with two derivatives.

    ``lower_limit`` is None for the exponential kind (domain unbounded
    below, an explicit sentinel rather than a large negative float).
    """

    kind: str  # "exp" | "power" | "custom"
    description: str
    lower_limit: Optional[float] = None
    exponent: Optional[float] = None
    # Chebyshev coefficients of f, f', f'' on [cheb_lo, cheb_hi] (custom only)
    cheb_coeffs: Optional[tuple] = None
    cheb_interval: Optional[tuple] = None

    @property
    def a(self) -> float:
        """Lower limit of the domain of f (-inf for the exponential)."""
        return -math.inf if self.lower_limit is None else self.lower_limit

    def in_domain(self, t) -> bool:
        t = np.asarray(t, dtype=float)
        if self.lower_limit is not None and np.any(t <= self.lower_limit):
            return False
        if self.kind == "custom":
            lo, hi = self.cheb_interval
            if np.any(t < lo) or np.any(t > hi):
                return False
        return bool(np.all(np.isfinite(t)))


def exponential() -> NonlinearitySpec:
    return NonlinearitySpec(kind="exp", description="f(t) = exp(t)")


def power(p: float) -> NonlinearitySpec:
    if p <= 1.0:
        raise ConfigError(f"power nonlinearity requires p > 1, got {p}")
    return NonlinearitySpec(
        kind="power",
        description=f"f(t) = (1+t)^{p}",
        lower_limit=-1.0,
        exponent=float(p),
    )


def custom(coeffs_f: Sequence[float],
           coeffs_f1: Sequence[float],
           coeffs_f2: Sequence[float],
           interval: tuple[float, float],
           description: str = "custom tabulated nonlinearity") -> NonlinearitySpec:
    lo, hi = float(interval[0]), float(interval[1])
    if not lo < hi:
        raise ConfigError("custom nonlinearity needs a nondegenerate interval")
    return NonlinearitySpec(
        kind="custom",
        description=description,
        lower_limit=lo,
        cheb_coeffs=(tuple(map(float, coeffs_f)),
                     tuple(map(float, coeffs_f1)),
                     tuple(map(float, coeffs_f2))),
        cheb_interval=(lo, hi),
    )


def spec_from_key(key: str) -> NonlinearitySpec:
    """Parse a config key: ``exp`` or ``power:<p>``."""
    if key == "exp":
        return exponential()
    if key.startswith("power:"):
        try:
            p = float(key.split(":", 1)[1])
        except ValueError as exc:
            raise ConfigError(f"bad power exponent in {key!r}") from exc
        return power(p)
    raise ConfigError(f"unknown nonlinearity key {key!r}")


def _eval_custom(spec: NonlinearitySpec, t, order: int):
    lo, hi = spec.cheb_interval
    x = (2.0 * np.asarray(t, dtype=float) - (lo + hi)) / (hi - lo)
    return cheb.chebval(x, spec.cheb_coeffs[order])


def eval_f(spec: NonlinearitySpec, t, max_order: int = 2):
    """Evaluate f and derivatives up to max_order at t (scalar or array).

    Returns a tuple (f,), (f, f') or (f, f', f'').  Raises DomainError
    for arguments at or below the lower domain limit.
    """
    if max_order not in (0, 1, 2):
        raise ConfigError(f"max_order must be in {{0,1,2}}, got {max_order}")
    if not spec.in_domain(t):
        raise DomainError(
            f"argument outside domain of {spec.description} (a = {spec.a})")
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0

    # overflow is handled by the finiteness check below, not a warning
    with np.errstate(over="ignore", invalid="ignore"):
        if spec.kind == "exp":
            e = np.exp(t)
            vals = [e, e, e]
        elif spec.kind == "power":
            p = spec.exponent
            base = 1.0 + t
            vals = [base ** p,
                    p * base ** (p - 1.0),
                    p * (p - 1.0) * base ** (p - 2.0)]
        elif spec.kind == "custom":
            vals = [_eval_custom(spec, t, k) for k in range(3)]
        else:  # pragma: no cover - constructor guards the kind
            raise ConfigError(f"unknown nonlinearity kind {spec.kind!r}")

    out = tuple(float(v) if scalar else v for v in vals[: max_order + 1])
    if not all(np.all(np.isfinite(v)) for v in out):
        raise DomainError(f"non-finite value of {spec.description} at t")
    return out


def check_h1(spec: NonlinearitySpec, t_grid: Sequence[float]):
    """Sample positivity, monotonicity and convexity of f on a grid.

    Returns (ok, first_violation) where first_violation is None or a
    (t, quantity_name, value) triple.  Violations are data, not errors.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size == 0:
        raise ConfigError("empty sample grid")
    if np.any(np.diff(t_grid) <= 0):
        raise ConfigError("t_grid must be strictly increasing")
    f, f1, f2 = eval_f(spec, t_grid, 2)
    for name, vals in (("f", f), ("f'", f1), ("f''", f2)):
        bad = np.nonzero(np.asarray(vals) <= 0.0)[0]
        if bad.size:
            i = int(bad[0])
            return False, (float(t_grid[i]), name, float(np.asarray(vals)[i]))
    return True, None


@dataclass
class GrowthReport:
    """Sampled growth-condition trends; trends are reported, never certified."""

    superlinear_ok: bool
    subcritical_ok: bool
    theta_used: float
    dimension: int
    beta_used: Optional[float]
    superlinear_inconclusive: bool = False
    details: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "superlinear_ok": self.superlinear_ok,
            "subcritical_ok": self.subcritical_ok,
            "theta_used": self.theta_used,
            "dimension": self.dimension,
            "beta_used": self.beta_used,
            "superlinear_inconclusive": self.superlinear_inconclusive,
            "details": self.details,
        }


def _antiderivative(spec: NonlinearitySpec, t: np.ndarray) -> np.ndarray:
    """F(t) = integral of f from 0 to t, exact for built-in kinds."""
    if spec.kind == "exp":
        return np.exp(t) - 1.0
    if spec.kind == "power":
        p = spec.exponent
        return ((1.0 + t) ** (p + 1.0) - 1.0) / (p + 1.0)
    # custom: composite trapezoid on a fine subgrid per sample
    out = np.empty_like(t)
    for i, ti in enumerate(t):
        xs = np.linspace(0.0, ti, 257)
        (fx,) = eval_f(spec, xs, 0)
        out[i] = np.trapz(fx, xs)
    return out


def check_growth(spec: NonlinearitySpec, theta: float, t_max: float,
                 n_samples: int = 64, dimension: int = 2,
                 beta: Optional[float] = None) -> GrowthReport:
    """Sample the superlinearity / subcriticality trends up to t_max.

    theta must lie in [0, 2N/(N-2)) for N >= 3 and be >= 0 for N = 2.
    For N = 2 the subcritical exponent beta is optional; when omitted the
    subcritical check is skipped (reported as passing with a note).
    """
    n = int(dimension)
    if n < 2:
        raise ConfigError("dimension must be >= 2")
    if theta < 0 or (n >= 3 and theta >= 2.0 * n / (n - 2.0)):
        raise DomainError(f"theta = {theta} outside [0, 2N/(N-2)) for N = {n}")
    if n_samples < 10:
        raise ConfigError("need at least 10 samples")
    if t_max <= 1.0:
        raise ConfigError("t_max must exceed 1")

    t = np.geomspace(1.0, t_max, int(n_samples))
    f, = eval_f(spec, t, 0)
    big_f = _antiderivative(spec, t)

    ratio_lin = f / t
    # superlinear: f(t)/t increasing with a real margin over the range
    increasing = bool(np.all(np.diff(ratio_lin) > -1e-12 * np.abs(ratio_lin[:-1])))
    margin = ratio_lin[-1] / ratio_lin[0]
    superlinear_ok = increasing and margin >= 2.0
    inconclusive = increasing and not superlinear_ok

    if beta is None and n >= 3:
        beta = (n + 2.0) / (n - 2.0)
    if beta is not None:
        ratio_beta = f / t ** beta
        beta_ok = bool(ratio_beta[-1] <= ratio_beta[0]
                       and np.all(np.diff(ratio_beta[t >= t[-1] ** 0.5]) <= 0))
    else:
        beta_ok = True  # not checkable without an exponent (N = 2 case)

    dln = (t * f - theta * big_f) / (t ** 2 * f ** (2.0 / n))
    tail = dln[t >= t[-1] ** 0.5]
    dln_ok = bool(tail[-1] <= 1e-8 or np.all(np.diff(tail) <= 0))
    subcritical_ok = beta_ok and dln_ok

    details = [(float(ti), float(ri), float(di))
               for ti, ri, di in zip(t, ratio_lin, dln)]
    return GrowthReport(
        superlinear_ok=bool(superlinear_ok),
        subcritical_ok=subcritical_ok,
        theta_used=float(theta),
        dimension=n,
        beta_used=None if beta is None else float(beta),
        superlinear_inconclusive=inconclusive,
        details=details,
    )
