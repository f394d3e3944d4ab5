"""Command-line entry points: trace, shape-check, generic-exp, oracle,
spectrum.  Exit codes: 0 success, 1 config/solver failure, 2 degenerate
point encountered, 3 threshold miss."""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys

import numpy as np

from .config import RunConfig, atomic_write, fmt_float, json_dumps_17
from .continuation import ContinuationConfig, make_problem, trace_continuum
from .diffeo import collar_basis, identity_diffeo, random_diffeo
from .errors import ConfigError, FoldcontError, NoConvergence
from .mesh import domain_from_key
from .nonlinearity import spec_from_key
from .oracles import (fold_1d_shooting, interval_fold_exact,
                      radial_family_point)
from .shape import (PerturbationField, genericity_experiment,
                    hadamard_pairing, shape_derivative_report)
from .solver import StateVector, newton_correct
from . import spectral

_VERBOSITY = 1


def _log(msg, level=1):
    if _VERBOSITY >= level:
        print(msg, file=sys.stderr)


def _load_config(args) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg.set("run", "seed", str(args.seed))
    if args.jobs is not None:
        cfg.set("run", "jobs", str(args.jobs))
    if args.out is not None:
        cfg.set("run", "out_dir", args.out)
    return cfg.resolve()


def _build_problem(cfg: RunConfig):
    spec = spec_from_key(cfg.get("problem", "nonlinearity"))
    domain = domain_from_key(cfg.get("problem", "domain"))
    amp = cfg.get("problem", "diffeo_amplitude")
    if amp > 0.0:
        h = random_diffeo(domain.kind, amp, cfg.get("problem", "diffeo_modes"),
                          [cfg.get("run", "seed"), 0], domain.lengths)
    else:
        h = identity_diffeo(2 if domain.kind != "interval" else 1)
    return make_problem(domain, spec, h)


def _cont_config(cfg: RunConfig) -> ContinuationConfig:
    c = cfg
    return ContinuationConfig(
        ds_init=c.get("continuation", "ds_init"),
        ds_min=c.get("continuation", "ds_min"),
        ds_max=c.get("continuation", "ds_max"),
        mu_floor=c.get("continuation", "mu_floor"),
        norm_cap=c.get("continuation", "norm_cap"),
        max_steps=c.get("continuation", "max_steps"),
        omega=c.get("continuation", "omega"),
        newton_tol=c.get("continuation", "newton_tol"),
        max_newton=c.get("continuation", "max_newton"),
        switch_ratio=c.get("continuation", "switch_ratio"),
        fold_tol=c.get("continuation", "fold_tol"),
        snapshot_every=c.get("continuation", "snapshot_every"),
        eig_k=c.get("continuation", "eig_k"),
        cr_window=c.get("continuation", "cr_window"),
    )


def _solve_at_mu(problem, mu_target, tol=1e-10):
    """Ramp mu from zero to mu_target on the minimal branch."""
    v = np.zeros(problem.op.n)
    mu = 0.0
    dmu = min(0.25, mu_target)
    while mu < mu_target:
        step = min(dmu, mu_target - mu)
        try:
            res = newton_correct(problem.op, problem.spec, mu + step, v,
                                 tol=tol)
        except (NoConvergence, FoldcontError):
            dmu *= 0.5
            if dmu < 1e-6:
                raise ConfigError(
                    f"cannot reach mu_target = {mu_target} on the stable branch")
            continue
        v = res.v
        mu += step
    return StateVector(v, mu)


def _csv_text(header, rows):
    out = io.StringIO()
    wr = csv.writer(out, lineterminator="\n")
    wr.writerow(header)
    for row in rows:
        wr.writerow([fmt_float(x) if isinstance(x, float) else x
                     for x in row])
    return out.getvalue()


# ----------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------

def cmd_trace(cfg: RunConfig, args) -> int:
    out_dir = cfg.get("run", "out_dir")
    problem = _build_problem(cfg)
    branch = trace_continuum(problem, _cont_config(cfg))

    lines = [json_dumps_17(p.scalars()) for p in branch.points]
    atomic_write(os.path.join(out_dir, "branch.jsonl"),
                 "\n".join(lines) + "\n")
    rows = [(p.s, p.mu, p.sup_norm, p.sigma1, p.morse_index)
            for p in branch.points]
    atomic_write(os.path.join(out_dir, "branch.csv"),
                 _csv_text(["s", "mu", "sup_norm", "sigma1", "morse_index"],
                           rows))
    atomic_write(os.path.join(out_dir, "events.json"),
                 json_dumps_17([e.to_dict() for e in branch.events]) + "\n")
    atomic_write(os.path.join(out_dir, "folds.json"),
                 json_dumps_17([f.to_dict() for f in branch.folds]) + "\n")

    if getattr(args, "self_check", False):
        ok = _crosscheck_outputs(out_dir)
        _log(f"self-check: jsonl/csv series {'match' if ok else 'DIFFER'}")
        if not ok:
            return 1

    kinds = [e.kind for e in branch.events]
    _log(f"trace: {len(branch.points)} points, {len(branch.folds)} fold(s), "
         f"events {kinds}")
    if "DegeneratePoint" in kinds:
        return 2
    if kinds and kinds[-1] in ("MuFloor", "NormCap"):
        return 0
    atomic_write(os.path.join(out_dir, "error.json"),
                 json_dumps_17({"error": "trace did not reach a terminal "
                                         "invariant", "events": kinds}) + "\n")
    return 1


def _crosscheck_outputs(out_dir) -> bool:
    import json as _json
    with open(os.path.join(out_dir, "branch.jsonl")) as fh:
        recs = [_json.loads(line) for line in fh if line.strip()]
    with open(os.path.join(out_dir, "branch.csv")) as fh:
        rd = csv.DictReader(fh)
        rows = list(rd)
    if len(recs) != len(rows):
        return False
    for rec, row in zip(recs, rows):
        for key in ("s", "mu", "sup_norm", "sigma1"):
            if float(rec[key]) != float(row[key]):
                return False
        if int(rec["morse_index"]) != int(row["morse_index"]):
            return False
    return True


def cmd_shape_check(cfg: RunConfig, args) -> int:
    out_dir = cfg.get("run", "out_dir")
    scale = cfg.get("shape", "field_scale")
    if scale == 0.0:
        raise ConfigError("[shape] field_scale = 0 gives a zero variation "
                          "field; nothing to validate")
    problem = _build_problem(cfg)
    fields = collar_basis(problem.domain.kind, 4, problem.domain.lengths)
    idx = cfg.get("shape", "field_index")
    if not 0 <= idx < len(fields):
        raise ConfigError(f"[shape] field_index {idx} out of range "
                          f"(have {len(fields)} fields)")
    base = fields[idx]
    if scale != 1.0:
        from .diffeo import Diffeomorphism
        base = Diffeomorphism([base], [scale])  # value/jacobian scale linearly
        hdot = PerturbationField(_DiffeoAsField(base))
    else:
        hdot = PerturbationField(base)

    state = _solve_at_mu(problem, cfg.get("shape", "mu_target"))
    report = shape_derivative_report(problem, state, hdot,
                                     cfg.get("shape", "epsilons"))

    gap_ok = True
    if not cfg.get("shape", "skip_hadamard"):
        branch = trace_continuum(problem, _cont_config(cfg))
        if not branch.folds:
            raise ConfigError("no fold found for the Hadamard check; "
                              "adjust continuation settings")
        rec = branch.folds[0]
        fold_state = StateVector(rec.v, rec.mu_fold)
        lhs, rhs = hadamard_pairing(problem.op, problem.spec, fold_state,
                                    rec.eigenpair, hdot,
                                    _cont_config(cfg).fold_tol)
        report.hadamard_lhs = lhs
        report.hadamard_rhs = rhs
        report.relative_gap = abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-12)
        gap_ok = report.relative_gap <= cfg.get("shape", "hadamard_threshold")

    atomic_write(os.path.join(out_dir, "shape_report.json"),
                 json_dumps_17(report.to_dict()) + "\n")
    _log(f"shape-check: observed_order = {report.observed_order:.3f}, "
         f"relative_gap = {report.relative_gap}")
    if report.observed_order >= 0.9 and gap_ok:
        return 0
    return 3


class _DiffeoAsField:
    """Adapter: use a Diffeomorphism displacement as a variation field."""

    def __init__(self, diffeo):
        self.diffeo = diffeo

    def value(self, x):
        return self.diffeo.displacement(x)

    def jacobian(self, x):
        return self.diffeo.jacobian(x) - np.eye(x.shape[1])


def cmd_generic_exp(cfg: RunConfig, args) -> int:
    out_dir = cfg.get("run", "out_dir")
    spec = spec_from_key(cfg.get("problem", "nonlinearity"))
    domain = domain_from_key(cfg.get("problem", "domain"))
    report = genericity_experiment(
        domain, spec,
        n_samples=cfg.get("experiment", "n_samples"),
        amplitude=cfg.get("experiment", "amplitude"),
        n_modes=cfg.get("experiment", "n_modes"),
        seed=cfg.get("run", "seed"),
        config=_cont_config(cfg),
        jobs=cfg.get("run", "jobs"))
    atomic_write(os.path.join(out_dir, "experiment.json"),
                 json_dumps_17(report.to_dict()) + "\n")
    _log(f"generic-exp: {report.summary['n_folds']} folds over "
         f"{report.summary['n_samples']} samples, "
         f"{report.summary['n_degenerate_halts']} degenerate halt(s)")
    return 0


def cmd_oracle(cfg: RunConfig, args) -> int:
    out_dir = cfg.get("run", "out_dir")
    b_grid = cfg.get("oracle", "b_grid")
    if not b_grid:
        raise ConfigError("[oracle] b_grid is empty")
    rows = []
    for b in b_grid:
        pt = radial_family_point(b)
        rows.append((pt.b, pt.mu, pt.sup_norm))
    radial_csv = _csv_text(["b", "mu", "sup_norm"], rows)
    sys.stdout.write(radial_csv)
    atomic_write(os.path.join(out_dir, "oracle_radial.csv"), radial_csv)

    if cfg.get("oracle", "fold_bisect"):
        spec = spec_from_key(cfg.get("problem", "nonlinearity"))
        mu_star = fold_1d_shooting(spec, tol=1e-8)
        mu_exact, sup_exact = interval_fold_exact()
        fold_csv = _csv_text(
            ["mu_fold_shooting", "mu_fold_closed_form", "sup_closed_form"],
            [(mu_star, mu_exact, sup_exact)])
        sys.stdout.write(fold_csv)
        atomic_write(os.path.join(out_dir, "oracle_interval.csv"), fold_csv)
    return 0


def cmd_spectrum(cfg: RunConfig, args) -> int:
    problem = _build_problem(cfg)
    state = _solve_at_mu(problem, cfg.get("spectrum", "mu"))
    from .solver import linearize
    lin = linearize(problem.op, problem.spec, state)
    k = min(cfg.get("spectrum", "k"), problem.op.n - 2)
    pairs = spectral.eigenpairs(lin, k)
    rows = [(i + 1, p.sigma) for i, p in enumerate(pairs)]
    sys.stdout.write(_csv_text(["i", "sigma"], rows))
    return 0


# ----------------------------------------------------------------------

def make_parser():
    p = argparse.ArgumentParser(
        prog="foldcont",
        description="Solution-branch continuation with fold diagnostics "
                    "for -Lap v = mu f(v) on reference and perturbed domains")
    p.add_argument("--config", help="path to a key=value config file")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--verbose", action="store_true")
    p.add_argument("--quiet", action="store_true")
    p.add_argument("--dump-config", action="store_true",
                   help="print the fully-resolved config and exit")
    sub = p.add_subparsers(dest="command")
    tr = sub.add_parser("trace", help="trace the solution continuum")
    tr.add_argument("--self-check", action="store_true", dest="self_check",
                    help="re-read branch.jsonl/branch.csv and compare")
    sub.add_parser("shape-check", help="validate the domain-variation "
                                       "derivative and boundary pairing")
    sub.add_parser("generic-exp", help="seeded perturbed-domain experiment")
    sub.add_parser("oracle", help="print closed-form and shooting tables")
    sub.add_parser("spectrum", help="eigenvalue table at a branch point")
    return p


_COMMANDS = {
    "trace": cmd_trace,
    "shape-check": cmd_shape_check,
    "generic-exp": cmd_generic_exp,
    "oracle": cmd_oracle,
    "spectrum": cmd_spectrum,
}


def main(argv=None) -> int:
    global _VERBOSITY
    parser = make_parser()
    args = parser.parse_args(argv)
    if args.verbose:
        _VERBOSITY = 2
    if args.quiet:
        _VERBOSITY = 0
    try:
        cfg = _load_config(args)
        if args.dump_config:
            sys.stdout.write(cfg.dump())
            return 0
        if not args.command:
            parser.print_help(sys.stderr)
            return 1
        return _COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except FoldcontError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
