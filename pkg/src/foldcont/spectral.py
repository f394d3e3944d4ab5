"""Eigenpairs of the linearization, Morse index and fold diagnostics.

All eigenvalues exposed here follow the convention in which the
principal eigenvalue sigma_1 is positive on the stable minimal branch
(i.e. they are the negated spectrum of the stored Delta_h + mu f'(v)).
Pairs are residual-verified; the solver output is never trusted blindly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import EigSolverFailure, InsufficientSamples
from .nonlinearity import eval_f
from .solver import LinearizedOperator

__all__ = [
    "EigenPair",
    "FoldRecord",
    "CRDiagnostics",
    "eigenpairs",
    "near_zero_eigenpairs",
    "morse_index",
    "transversality",
    "cr_from_samples",
    "cr_expansion_check",
    "track_sigma1",
]

EIG_TOL = 1e-8


@dataclass
class EigenPair:
    """Eigenvalue (stability convention) and quadrature-normalized mode."""

    sigma: float
    phi: np.ndarray


@dataclass
class CRDiagnostics:
    mu_prime_at_fold: float
    mu_second_at_fold: float
    xi_second_order_slope: float
    ratio_law_error: float

    def to_dict(self):
        return {
            "mu_prime_at_fold": self.mu_prime_at_fold,
            "mu_second_at_fold": self.mu_second_at_fold,
            "xi_second_order_slope": self.xi_second_order_slope,
            "ratio_law_error": self.ratio_law_error,
        }


@dataclass
class FoldRecord:
    s_fold: float
    mu_fold: float
    sup_norm: float
    eigenpair: EigenPair
    spectral_gap: float
    transversality: float
    transversality_normalized: float
    v: np.ndarray = None
    cr: Optional[CRDiagnostics] = None

    def to_dict(self):
        return {
            "s_fold": self.s_fold,
            "mu_fold": self.mu_fold,
            "sup_norm": self.sup_norm,
            "sigma": self.eigenpair.sigma,
            "spectral_gap": self.spectral_gap,
            "transversality": self.transversality,
            "transversality_normalized": self.transversality_normalized,
            "cr": None if self.cr is None else self.cr.to_dict(),
        }


def _symmetric_form(lin: LinearizedOperator):
    """Similarity transform making the weighted-symmetric operator symmetric."""
    s = np.sqrt(lin.w)
    mat = sp.diags(s) @ lin.matrix @ sp.diags(1.0 / s)
    mat = (mat + mat.T) * 0.5
    return mat.tocsc(), s


def _finish_pairs(lin, vals_stored, vecs_scaled, s):
    pairs = []
    for sigma_st, psi in zip(vals_stored, vecs_scaled.T):
        phi = psi / s
        nrm = np.sqrt(np.dot(lin.w * phi, phi))
        phi = phi / nrm
        # sign convention: positive weighted mean if single-signed,
        # else first significantly nonzero component positive
        scale = np.max(np.abs(phi))
        if np.all(phi >= -1e-10 * scale) or np.all(phi <= 1e-10 * scale):
            if np.dot(lin.w, phi) < 0:
                phi = -phi
        else:
            nz = np.nonzero(np.abs(phi) > 1e-8 * scale)[0]
            if phi[nz[0]] < 0:
                phi = -phi
        res = lin.matrix @ phi - sigma_st * phi
        resn = np.sqrt(np.dot(lin.w * res, res))
        if resn > EIG_TOL * max(1.0, abs(sigma_st)):
            raise EigSolverFailure(
                f"eigen residual {resn:.3e} exceeds {EIG_TOL} "
                f"(scale {max(1.0, abs(sigma_st)):.1e})")
        pairs.append(EigenPair(sigma=-float(sigma_st), phi=phi))
    return pairs


def _start_vector(n: int) -> np.ndarray:
    # fixed Lanczos start vector: ARPACK's default draws from the
    # process-global RNG, which makes results depend on call order
    return np.random.default_rng(0x5eed).standard_normal(n)


def eigenpairs(lin: LinearizedOperator, k: int,
               top_estimate: Optional[float] = None):
    """The k lowest eigenvalues (sigma_1 first, ascending) with modes.

    top_estimate, when given, only ever raises the shift-invert target;
    the baseline is an a priori bound on the stored spectrum, so stale
    estimates cannot make the solver miss the top eigenvalue.
    """
    mat, s = _symmetric_form(lin)
    n = mat.shape[0]
    if k < 1:
        raise ValueError("k must be >= 1")
    if n <= max(2 * k + 2, 200):
        vals, vecs = np.linalg.eigh(mat.toarray())
        order = np.argsort(vals)[::-1][:k]  # largest stored = lowest reported
        return _finish_pairs(_LinView(lin), vals[order], vecs[:, order], s)
    # rigorous upper bound on the stored spectrum: the Laplacian part is
    # negative definite, so every eigenvalue lies below max(mu f'(v)).
    # Shift-inverting just above that bound makes the k nearest values
    # exactly the k largest ones, and the shift stays close enough to the
    # top for fast convergence even when the top eigenvalue is isolated.
    ub = getattr(lin, "potential_max", None)
    if ub is None:
        d = mat.diagonal()
        ub = float(np.max(d + np.abs(mat).sum(axis=1).A1 - np.abs(d)))
    if top_estimate is not None:
        ub = max(ub, top_estimate)
    shift = ub + max(1.0, 1e-6 * abs(ub))
    last_exc = None
    for _ in range(4):
        try:
            vals, vecs = spla.eigsh(mat, k=k, sigma=shift, which="LM",
                                    v0=_start_vector(n))
        except Exception as exc:
            last_exc = exc
            shift = 2.0 * abs(shift) + 2.0
            continue
        order = np.argsort(vals)[::-1]
        return _finish_pairs(_LinView(lin), vals[order], vecs[:, order], s)
    raise EigSolverFailure(
        f"shift-invert did not stabilize ({last_exc})")


def near_zero_eigenpairs(lin: LinearizedOperator, k: int, shift: float = 0.0):
    """The k eigenpairs closest to zero (by magnitude), nearest first."""
    mat, s = _symmetric_form(lin)
    n = mat.shape[0]
    if n <= max(2 * k + 2, 200):
        vals, vecs = np.linalg.eigh(mat.toarray())
        order = np.argsort(np.abs(vals - shift))[:k]
        return _finish_pairs(_LinView(lin), vals[order], vecs[:, order], s)
    try:
        vals, vecs = spla.eigsh(mat, k=k, sigma=shift, which="LM",
                                v0=_start_vector(n))
    except Exception as exc:
        raise EigSolverFailure(str(exc)) from exc
    order = np.argsort(np.abs(vals - shift))
    return _finish_pairs(_LinView(lin), vals[order], vecs[:, order], s)


class _LinView:
    """Minimal view used by _finish_pairs (matrix + weights)."""

    def __init__(self, lin):
        self.matrix = lin.matrix
        self.w = lin.w


def morse_index(lin: LinearizedOperator, shift_tol: float = 1e-10,
                pairs=None):
    """(number of unstable directions, near-singular flag).

    Counts reported-convention negative eigenvalues; 0 on the minimal
    branch.  The flag is set when some |sigma| <= shift_tol.  Pairs
    already computed for this linearization may be passed in; k is
    escalated only when every returned eigenvalue is negative.
    """
    n = lin.matrix.shape[0]
    k = min(4, n - 1) if n > 2 else n
    if pairs is not None and len(pairs) >= 1:
        k = len(pairs)
    while True:
        if pairs is None:
            pairs = eigenpairs(lin, k)
        sigmas = np.array([p.sigma for p in pairs])
        near = bool(np.min(np.abs(sigmas)) <= shift_tol)
        count = int(np.sum(sigmas < 0.0))
        if count < k or k >= n - 1 or k >= n:
            return count, near
        k = min(2 * k, max(n - 1, 1))
        pairs = None


def transversality(spec, state, pair: EigenPair, op):
    """(integral of f(v) phi, same normalized by ||f(v)||_w)."""
    (f,) = eval_f(spec, state.v, 0)
    val = float(np.dot(op.w, f * pair.phi))
    fn = float(np.sqrt(np.dot(op.w * f, f)))
    return val, val / fn if fn > 0 else 0.0


def track_sigma1(branch, zero_tol: float = 1e-10, run_length: int = 10):
    """(s, sigma1) series with sign-change flags and a vanishing guard.

    Returns (series, sign_change_spans, identically_zero_flag); a run of
    more than run_length consecutive |sigma1| < zero_tol raises the flag
    (identical vanishing is excluded for these branches).
    """
    series = [(p.s, p.sigma1) for p in branch.points]
    spans = []
    for a, b in zip(branch.points[:-1], branch.points[1:]):
        if a.sigma1 * b.sigma1 < 0.0:
            spans.append((a.s, b.s))
    run = 0
    flag = False
    for _, sg in series:
        run = run + 1 if abs(sg) < zero_tol else 0
        if run > run_length:
            flag = True
            break
    return series, spans, flag


def cr_from_samples(ds, mus, sigmas, vs, fold: FoldRecord, op,
                    spec, omega: float = 0.5) -> CRDiagnostics:
    """Expansion diagnostics from solution samples at arc offsets ds.

    ds are signed arclength offsets from the fold (both signs present);
    mus, sigmas, vs are the parameter, crossing eigenvalue and interior
    solution at each offset.  Fits mu(s) cubically, measures the
    second-order decay of the off-mode remainder xi(s), and compares
    sigma(s)/mu'(s) against the limit integral ratio.

    In the weighted parametrization the branch velocity at the fold is
    phi / sqrt(1 - omega), so the ratio limit carries the same factor:
    sigma/mu' -> sqrt(1 - omega) * integral of f(v*) phi.
    """
    ds = np.asarray(ds, dtype=float)
    mus = np.asarray(mus, dtype=float)
    sig = np.asarray(sigmas, dtype=float)
    if np.sum(ds < 0) < 2 or np.sum(ds > 0) < 2:
        raise InsufficientSamples("need at least two samples per side")

    # cubic fit of mu(s) including the fold point itself; the cubic term
    # absorbs the asymmetry that would otherwise contaminate mu'
    coef = np.polyfit(np.concatenate([ds, [0.0]]),
                      np.concatenate([mus, [fold.mu_fold]]),
                      3 if ds.size >= 5 else 2)
    dcoef = np.polyder(coef)
    mu_prime = float(np.polyval(dcoef, 0.0))
    mu_second = float(np.polyval(np.polyder(dcoef), 0.0))

    phi = fold.eigenpair.phi
    xi_norms, xi_ds = [], []
    for v, d in zip(vs, ds):
        diff = v - fold.v
        c = float(np.dot(op.w * diff, phi))
        xi = diff - c * phi
        xin = float(np.sqrt(np.dot(op.w * xi, xi)))
        if xin > 0 and abs(d) > 0:
            xi_norms.append(xin)
            xi_ds.append(abs(d))
    if len(xi_norms) < 3:
        raise InsufficientSamples("too few off-mode remainder samples")
    slope = float(np.polyfit(np.log(xi_ds), np.log(xi_norms), 1)[0])

    # ratio law: sigma(s)/mu'(s) -> target as s -> 0.  The first-order
    # correction is odd in s, so ratios at +-|d| are averaged in pairs.
    (f_fold,) = eval_f(spec, fold.v, 0)
    target = float(np.sqrt(1.0 - omega) * np.dot(op.w, f_fold * phi))
    amax = np.max(np.abs(ds))
    ratios = {}
    for d, sg in zip(ds, sig):
        if abs(d) < 0.4 * amax:
            continue
        mu_p = float(np.polyval(dcoef, d))
        if abs(mu_p) < 1e-14:
            continue
        ratios.setdefault(round(abs(d), 12), []).append(sg / mu_p)
    errs = [abs(np.mean(v) - target) / abs(target) for v in ratios.values()]
    if not errs:
        raise InsufficientSamples("no usable ratio-law sample points")
    return CRDiagnostics(
        mu_prime_at_fold=mu_prime,
        mu_second_at_fold=float(mu_second),
        xi_second_order_slope=slope,
        ratio_law_error=float(max(errs)),
    )


def cr_expansion_check(branch, fold: FoldRecord, op, spec,
                       window: int = 4, omega: float = 0.5) -> CRDiagnostics:
    """Fold-expansion diagnostics from stored branch points."""
    pts = [p for p in branch.points if p.v is not None]
    lo = [p for p in pts if p.s < fold.s_fold]
    hi = [p for p in pts if p.s > fold.s_fold]
    if len(lo) < window or len(hi) < window:
        raise InsufficientSamples(
            f"need {window} stored samples per side, have {len(lo)}/{len(hi)}")
    samples = lo[-window:] + hi[:window]
    return cr_from_samples(
        [p.s - fold.s_fold for p in samples],
        [p.mu for p in samples],
        [p.sigma1 for p in samples],
        [p.v for p in samples], fold, op, spec, omega)
