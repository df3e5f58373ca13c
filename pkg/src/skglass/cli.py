"""Command-line front end.

One subcommand per operation; every subcommand writes its result files
into the output directory and prints a one-line summary.  Exit codes:
0 success, 1 validation/numerical error, 2 resource/budget error.

Experiment subcommands accept a declarative TOML config plus flag
overrides, flags winning key by key; unknown config keys are rejected so
a typo cannot silently fall back to a default.  The output directory
resolves as --out, else the SKGLASS_OUT environment variable, else the
working directory.  Replicate parallelism is capped by --threads
(default: available parallelism) and never changes output bytes.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

try:
    import tomllib  # py >= 3.11
except ModuleNotFoundError:  # pragma: no cover - version-dependent import
    import tomli as tomllib

from ._version import __version__
from .disorder import sample_matrix
from .errors import NumericalError, ResourceError, ValidationError
from .experiments import (
    ExperimentConfig,
    PRESETS,
    preset_pieces,
    proposition6_experiment,
    stability_experiment,
    tap_residual_diagnostic,
    theorem2_experiment,
    theorem3_experiment,
    theorem4_experiment,
)
from .gibbs import exact_gibbs, overlap_moments
from .iterations import DEFAULT_CELL_BUDGET, amp_run, bolthausen_run, cavity_run
from .reporting import build_metadata, write_csv, write_json, write_trace_csv
from .scalars import ModelParams, big_q, delta_orbit, solve_q
from .state_evolution import state_evolution

EXPERIMENT_KEYS = ("beta", "h", "n_list", "depth", "replicates", "base_seed", "preset", "tolerances")
EXPERIMENT_DEFAULTS = {"replicates": 20, "base_seed": 0, "preset": "bolthausen", "tolerances": {}}


class _Parser(argparse.ArgumentParser):
    # argparse exits the process on bad flags; route through the error taxonomy instead
    def error(self, message):
        raise ValidationError(message)


def _out_dir(args):
    out = args.out or os.environ.get("SKGLASS_OUT") or "."
    os.makedirs(out, exist_ok=True)
    return out


def _path(args, name):
    return os.path.join(_out_dir(args), name)


def _load_config(path):
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    unknown = sorted(set(raw) - set(EXPERIMENT_KEYS))
    if unknown:
        raise ValidationError(
            f"unknown config keys {unknown}; known keys are {sorted(EXPERIMENT_KEYS)}"
        )
    return raw


def _parse_n_list(text):
    try:
        return [int(tok) for tok in str(text).replace(" ", "").split(",") if tok]
    except ValueError:
        raise ValidationError(f"--n-list must be comma-separated integers, got {text!r}")


def _resolve_experiment(args):
    """Merge config file, flags (flags win), and defaults into an ExperimentConfig."""
    cfg = dict(_load_config(args.config)) if args.config else {}
    flags = {
        "beta": args.beta,
        "h": args.h,
        "n_list": _parse_n_list(args.n_list) if args.n_list is not None else None,
        "depth": args.depth,
        "replicates": args.replicates,
        "base_seed": args.base_seed,
        "preset": args.preset,
    }
    for key, val in flags.items():
        if val is not None:
            cfg[key] = val
    for key, val in EXPERIMENT_DEFAULTS.items():
        cfg.setdefault(key, val)
    missing = [k for k in ("beta", "h", "n_list", "depth") if k not in cfg]
    if missing:
        raise ValidationError(f"missing required experiment parameters: {missing}")
    return ExperimentConfig(
        beta=float(cfg["beta"]),
        h=float(cfg["h"]),
        n_list=tuple(int(n) for n in cfg["n_list"]),
        K=int(cfg["depth"]),
        replicates=int(cfg["replicates"]),
        base_seed=int(cfg["base_seed"]),
        preset=str(cfg["preset"]),
        tolerances=dict(cfg["tolerances"]),
    )


def _experiment_mapping(command, cfg):
    """The resolved mapping that the config hash commits to."""
    return {
        "command": command,
        "beta": cfg.beta,
        "h": cfg.h,
        "n_list": list(cfg.n_list),
        "depth": cfg.K,
        "replicates": cfg.replicates,
        "base_seed": cfg.base_seed,
        "preset": cfg.preset,
        "tolerances": cfg.tolerances,
    }


def _scalar_meta(command, mapping, base_seed=0, **extra):
    mapping = {"command": command, **mapping}
    return build_metadata(mapping, base_seed, **extra)


def _add_model_flags(sp):
    sp.add_argument("--beta", type=float, required=True)
    sp.add_argument("--h", type=float, required=True)


def _add_out_flag(sp):
    sp.add_argument("--out", default=None, help="output directory (default: $SKGLASS_OUT or .)")


def _add_run_flags(sp, preset=True):
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--seed", type=int, required=True)
    _add_model_flags(sp)
    sp.add_argument("--depth", type=int, required=True)
    if preset:
        sp.add_argument("--preset", choices=PRESETS, default="tanh")
    _add_out_flag(sp)


def _add_experiment_flags(sp, default_preset=None):
    sp.add_argument("--config", default=None, help="TOML config; flags override its keys")
    sp.add_argument("--beta", type=float, default=None)
    sp.add_argument("--h", type=float, default=None)
    sp.add_argument("--n-list", default=None, help="comma-separated sizes, e.g. 50,100,200")
    sp.add_argument("--depth", type=int, default=None)
    sp.add_argument("--replicates", type=int, default=None)
    sp.add_argument("--base-seed", type=int, default=None)
    sp.add_argument("--preset", choices=PRESETS, default=default_preset)
    sp.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    _add_out_flag(sp)


def build_parser():
    parser = _Parser(prog="skglass", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"skglass {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve-q", help="replica-symmetric overlap q(beta, h)")
    _add_model_flags(sp)
    sp.add_argument("--tol", type=float, default=1e-12)
    _add_out_flag(sp)

    sp = sub.add_parser("at-line", help="AT condition value beta^2 E cosh^-4")
    _add_model_flags(sp)
    _add_out_flag(sp)

    sp = sub.add_parser("delta-orbit", help="orbit of the Delta map from Q")
    _add_model_flags(sp)
    sp.add_argument("--depth", type=int, required=True)
    sp.add_argument("--tol", type=float, default=0.0)
    _add_out_flag(sp)

    sp = sub.add_parser("state-evolution", help="iterate covariance table")
    _add_model_flags(sp)
    sp.add_argument("--depth", type=int, required=True)
    sp.add_argument("--preset", choices=PRESETS, default="bolthausen")
    _add_out_flag(sp)

    sp = sub.add_parser("run-amp", help="AMP iteration on one sampled matrix")
    _add_run_flags(sp)

    sp = sub.add_parser("run-bolthausen", help="TAP iteration on one sampled matrix")
    _add_run_flags(sp, preset=False)

    sp = sub.add_parser("run-cavity", help="cavity recursion on one sampled matrix")
    _add_run_flags(sp)
    sp.add_argument("--budget", type=int, default=DEFAULT_CELL_BUDGET)

    sp = sub.add_parser("gibbs", help="exact Gibbs summary by enumeration")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--seed", type=int, required=True)
    _add_model_flags(sp)
    sp.add_argument("--exclude", default="", help="comma-separated excluded sites")
    _add_out_flag(sp)

    for name, help_text, preset in (
        ("exp-theorem2", "iterate moments vs. state evolution", None),
        ("exp-theorem3", "AMP-cavity distance scaling in n", "tanh"),
        ("exp-theorem4", "TAP vs. exact magnetization by depth", "bolthausen"),
        ("exp-stability", "subset-growth stability scaling in n", "tanh"),
        ("exp-prop6", "overlap statistics vs. scalar limits", "bolthausen"),
    ):
        sp = sub.add_parser(name, help=help_text)
        _add_experiment_flags(sp, default_preset=preset)

    sp = sub.add_parser("tap-residual", help="TAP residual at the exact magnetization")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--seed", type=int, required=True)
    _add_model_flags(sp)
    _add_out_flag(sp)

    return parser


def _cmd_solve_q(args):
    p = ModelParams(beta=args.beta, h=args.h)
    sol = solve_q(p, tol=args.tol)
    mapping = {"beta": args.beta, "h": args.h, "tol": args.tol}
    meta = _scalar_meta("solve-q", mapping)
    write_json(_path(args, "solve_q.json"), meta, sol)
    print(
        f"q={sol.q:.12g} at_gap={sol.at_gap:.12g} residual={sol.q_residual:.3g} "
        f"iterations={sol.iterations}"
    )


def _cmd_at_line(args):
    p = ModelParams(beta=args.beta, h=args.h)
    sol = solve_q(p)
    inside = sol.at_gap < 1.0
    mapping = {"beta": args.beta, "h": args.h}
    meta = _scalar_meta("at-line", mapping)
    write_json(
        _path(args, "at_line.json"),
        meta,
        {"q": sol.q, "at_gap": sol.at_gap, "inside": inside},
    )
    print(f"at_gap={sol.at_gap:.12g} ({'inside' if inside else 'outside'} the AT region)")


def _cmd_delta_orbit(args):
    p = ModelParams(beta=args.beta, h=args.h)
    orbit = delta_orbit(p, args.depth, tol=args.tol)
    sol = solve_q(p)
    mapping = {"beta": args.beta, "h": args.h, "depth": args.depth, "tol": args.tol}
    meta = _scalar_meta("delta-orbit", mapping)
    write_json(
        _path(args, "delta_orbit.json"),
        meta,
        {"orbit": orbit, "q": sol.q, "at_gap": sol.at_gap, "Q": big_q(p, q=sol.q)},
    )
    write_csv(
        _path(args, "delta_orbit.csv"),
        meta,
        ("k", "value"),
        [(k, v) for k, v in enumerate(orbit)],
    )
    print(f"orbit length {len(orbit)}, last={orbit[-1]:.12g}, q={sol.q:.12g}")


def _cmd_state_evolution(args):
    p = ModelParams(beta=args.beta, h=args.h)
    q = solve_q(p).q if args.preset == "bolthausen" else None
    fs, _, w0_law = preset_pieces(args.preset, p, q)
    table = state_evolution(fs, w0_law, args.depth)
    mapping = {"beta": args.beta, "h": args.h, "depth": args.depth, "preset": args.preset}
    meta = _scalar_meta("state-evolution", mapping)
    write_json(
        _path(args, "state_evolution.json"),
        meta,
        {"k": table.k, "sigma": table.sigma, "w0_law": table.w0_law},
    )
    rows = [
        (a, b, float(table.sigma[a, b])) for a in range(table.k) for b in range(table.k)
    ]
    write_csv(_path(args, "state_evolution.csv"), meta, ("a", "b", "value"), rows)
    print(f"covariance table {table.k}x{table.k} written")


def _trace_meta(command, mapping, args, preset):
    return _scalar_meta(
        command,
        mapping,
        n=args.n,
        seed=args.seed,
        K=args.depth,
        preset=preset,
        norm="mean-square: (1/n) sum_i x_i^2",
    )


def _cmd_run_amp(args):
    p = ModelParams(beta=args.beta, h=args.h)
    q = solve_q(p).q if args.preset == "bolthausen" else None
    fs, u0_of, _ = preset_pieces(args.preset, p, q)
    A = sample_matrix(args.n, args.seed)
    trace = amp_run(A, u0_of(args.n), fs, args.depth)
    mapping = {
        "beta": args.beta, "h": args.h, "n": args.n, "seed": args.seed,
        "depth": args.depth, "preset": args.preset,
    }
    meta = _trace_meta("run-amp", mapping, args, args.preset)
    write_trace_csv(_path(args, "amp_trace.csv"), meta, trace)
    write_json(_path(args, "amp_run.json"), meta, {"norms": trace.norms, "meta": trace.meta})
    print(f"amp depth {trace.K}, final mean-square norm {trace.norms[-1]:.12g}")


def _cmd_run_bolthausen(args):
    p = ModelParams(beta=args.beta, h=args.h)
    A = sample_matrix(args.n, args.seed)
    trace = bolthausen_run(A, p, args.depth)
    mapping = {
        "beta": args.beta, "h": args.h, "n": args.n, "seed": args.seed, "depth": args.depth,
    }
    meta = _trace_meta("run-bolthausen", mapping, args, "bolthausen")
    write_trace_csv(_path(args, "bolthausen_trace.csv"), meta, trace)
    write_json(
        _path(args, "bolthausen_run.json"), meta, {"norms": trace.norms, "meta": trace.meta}
    )
    dev = trace.meta["amp_identity_deviation"]
    print(f"bolthausen depth {trace.K}, amp identity deviation {dev:.3g}")


def _cmd_run_cavity(args):
    p = ModelParams(beta=args.beta, h=args.h)
    q = solve_q(p).q if args.preset == "bolthausen" else None
    fs, u0_of, _ = preset_pieces(args.preset, p, q)
    A = sample_matrix(args.n, args.seed)
    trace, table = cavity_run(A, u0_of(args.n), fs, args.depth, budget=args.budget)
    mapping = {
        "beta": args.beta, "h": args.h, "n": args.n, "seed": args.seed,
        "depth": args.depth, "preset": args.preset, "budget": args.budget,
    }
    meta = _trace_meta("run-cavity", mapping, args, args.preset)
    write_trace_csv(_path(args, "cavity_trace.csv"), meta, trace)
    write_json(
        _path(args, "cavity_run.json"),
        meta,
        {"norms": trace.norms, "meta": trace.meta, "cells_allocated": table.cells_allocated},
    )
    print(f"cavity depth {trace.K}, {table.cells_allocated} table cells")


def _cmd_gibbs(args):
    p = ModelParams(beta=args.beta, h=args.h)
    A = sample_matrix(args.n, args.seed)
    S = frozenset(int(t) for t in args.exclude.replace(" ", "").split(",") if t)
    g = exact_gibbs(A, p, S)
    om = overlap_moments(g, solve_q(p).q)
    mapping = {
        "beta": args.beta, "h": args.h, "n": args.n, "seed": args.seed,
        "exclude": sorted(S),
    }
    meta = _scalar_meta("gibbs", mapping, n=args.n, seed=args.seed)
    write_json(
        _path(args, "gibbs.json"),
        meta,
        {"summary": g, "overlap": om},
    )
    print(f"logZ={g.logZ:.12g} over {g.n_eff} sites, mean_R={om.mean_R:.12g}")


def _cmd_tap_residual(args):
    p = ModelParams(beta=args.beta, h=args.h)
    A = sample_matrix(args.n, args.seed)
    g = exact_gibbs(A, p, frozenset())
    res = tap_residual_diagnostic(A, p, g.magnetizations)
    rms = float(np.sqrt(np.mean(res**2)))
    mapping = {"beta": args.beta, "h": args.h, "n": args.n, "seed": args.seed}
    meta = _scalar_meta("tap-residual", mapping, n=args.n, seed=args.seed)
    write_csv(
        _path(args, "tap_residual.csv"),
        meta,
        ("i", "residual"),
        [(i, float(v)) for i, v in enumerate(res)],
    )
    write_json(_path(args, "tap_residual.json"), meta, {"rms": rms, "residuals": res})
    print(f"tap residual rms {rms:.6g} over {args.n} sites")


def _scaling_files(args, name, report, mapping):
    meta = build_metadata(mapping, report.meta["base_seed"])
    write_json(_path(args, f"{name}_report.json"), meta, report)
    rows = [
        (n, m, s, report.slope, report.half_width)
        for n, m, s in zip(report.n_list, report.means, report.ses)
    ]
    write_csv(
        _path(args, f"{name}_scaling.csv"),
        meta,
        ("n", "mean", "se", "slope", "half_width"),
        rows,
    )


def _cmd_exp_theorem2(args):
    cfg = _resolve_experiment(args)
    report = theorem2_experiment(cfg, threads=args.threads)
    mapping = _experiment_mapping("exp-theorem2", cfg)
    meta = build_metadata(mapping, cfg.base_seed)
    write_json(_path(args, "theorem2_report.json"), meta, report)
    rows = []
    for a in range(cfg.K):
        for b in range(cfg.K):
            rows.append(
                ("moment", a + 1, b + 1, "",
                 float(report.moment_mean[a, b]), float(report.moment_se[a, b]),
                 float(report.moment_theory[a, b]))
            )
    for i, label in enumerate(report.psi_labels):
        rows.append(
            ("psi", -1, -1, label, report.psi_mean[i], report.psi_se[i], report.psi_theory[i])
        )
    write_csv(
        _path(args, "theorem2_table.csv"),
        meta,
        ("kind", "a", "b", "label", "empirical", "se", "theory"),
        rows,
    )
    print(
        f"theorem2 n={report.n} K={report.K} preset={report.preset}: "
        f"max moment dev {report.max_moment_dev:.6g}, max psi dev {report.max_psi_dev:.6g}"
    )


def _cmd_exp_theorem3(args):
    cfg = _resolve_experiment(args)
    report = theorem3_experiment(cfg, threads=args.threads)
    _scaling_files(args, "theorem3", report, _experiment_mapping("exp-theorem3", cfg))
    if report.exact_zero:
        print(f"theorem3 K={cfg.K}: distance identically zero across n={list(cfg.n_list)}")
    else:
        print(f"theorem3 slope {report.slope:.4f} +- {report.half_width:.4f}")


def _cmd_exp_theorem4(args):
    cfg = _resolve_experiment(args)
    report = theorem4_experiment(cfg, threads=args.threads)
    mapping = _experiment_mapping("exp-theorem4", cfg)
    meta = build_metadata(mapping, cfg.base_seed, at_gap=report.at_gap)
    write_json(_path(args, "theorem4_report.json"), meta, report)
    rows = [
        (k, report.distance_mean[k], report.distance_se[k], report.theory_curve[k])
        for k in report.ks
    ]
    write_csv(
        _path(args, "theorem4_curve.csv"), meta, ("k", "mean", "se", "theory"), rows
    )
    warn = " (AT warning: gap >= 1)" if report.at_warning else ""
    print(
        f"theorem4 n={report.n}: distance k=2 {report.distance_mean[2]:.6g} -> "
        f"k={report.K} {report.distance_mean[report.K]:.6g}{warn}"
    )


def _cmd_exp_stability(args):
    cfg = _resolve_experiment(args)
    report = stability_experiment(cfg, threads=args.threads)
    _scaling_files(args, "stability", report, _experiment_mapping("exp-stability", cfg))
    if report.exact_zero:
        print(f"stability k={cfg.K}: difference identically zero across n={list(cfg.n_list)}")
    else:
        print(f"stability slope {report.slope:.4f} +- {report.half_width:.4f}")


def _cmd_exp_prop6(args):
    cfg = _resolve_experiment(args)
    report = proposition6_experiment(cfg, threads=args.threads)
    mapping = _experiment_mapping("exp-prop6", cfg)
    meta = build_metadata(mapping, cfg.base_seed)
    write_json(_path(args, "prop6_report.json"), meta, report)
    rows = []
    for r, t in enumerate(report.triples_empty):
        rows.append((r, 0, t.D_S, t.E_S_k, t.R_S_k, t.rho_S_k))
    for r, t in enumerate(report.triples_single):
        rows.append((r, 1, t.D_S, t.E_S_k, t.R_S_k, t.rho_S_k))
    write_csv(
        _path(args, "prop6_triples.csv"),
        meta,
        ("replicate", "subset_size", "D", "E", "R", "rho"),
        rows,
    )
    print(
        f"prop6 n={report.n} k={report.k}: msd(D)={report.msd_D:.3g} "
        f"msd(E)={report.msd_E:.3g} msd(R)={report.msd_R:.3g}"
    )


_HANDLERS = {
    "solve-q": _cmd_solve_q,
    "at-line": _cmd_at_line,
    "delta-orbit": _cmd_delta_orbit,
    "state-evolution": _cmd_state_evolution,
    "run-amp": _cmd_run_amp,
    "run-bolthausen": _cmd_run_bolthausen,
    "run-cavity": _cmd_run_cavity,
    "gibbs": _cmd_gibbs,
    "exp-theorem2": _cmd_exp_theorem2,
    "exp-theorem3": _cmd_exp_theorem3,
    "exp-theorem4": _cmd_exp_theorem4,
    "exp-stability": _cmd_exp_stability,
    "exp-prop6": _cmd_exp_prop6,
    "tap-residual": _cmd_tap_residual,
}


def dispatch(argv):
    """Parse argv, run the subcommand, map errors to exit codes."""
    try:
        args = build_parser().parse_args(argv)
        _HANDLERS[args.command](args)
        return 0
    except SystemExit as exc:  # -h / --version print and stop
        return int(exc.code or 0)
    except (ValidationError, NumericalError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ResourceError as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
