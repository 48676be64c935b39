"""Command-line front end: analyze-f, walk, poisson, martin, cg-table and
selftest subcommands emitting deterministic JSON/CSV reports.

Exit codes: 0 success, 2 validation errors (bad F, bad measure, missing
inputs), 3 numerical failures (not transient, budget exceeded, truncation
or category too small)."""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .accept import AcceptanceSuite, format_line
from .boundary import (
    block_indicator,
    markov_step,
    martin_block,
    martin_phi_fit,
    poisson_convergence,
    poisson_kernel_operator,
)
from .errors import NumericalError, QwbError, ValidationError
from .fmatrix import (
    canonical_invariants,
    fmatrix_from_json,
    fparams_to_json,
    invariants_to_json,
    standard_f,
    validate_f,
)
from .fusion import Measure, measure_props, qdim
from .jsonio import dump_file, to_jsonable
from .tlcat import build_category, cg_isometry, zero_weight_space
from .walk import (
    green_central,
    martin_kernel_central,
    transience_report,
    transition_matrix,
)


def _load_config_file(path: str) -> dict:
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValidationError(f"bad config line {raw.strip()!r}")
            key, val = line.split("=", 1)
            out[key.strip().replace("-", "_")] = val.strip()
    return out


def _resolve_f(args) -> np.ndarray:
    given_file = getattr(args, "f_file", None)
    given_q = getattr(args, "q", None)
    if (given_file is None) == (given_q is None):
        raise ValidationError("exactly one of --f FILE or --q VALUE required")
    if given_file is not None:
        with open(given_file, "r", encoding="utf-8") as fh:
            return fmatrix_from_json(json.load(fh))
    return standard_f(float(given_q))


def _measure(args) -> Measure:
    if not getattr(args, "measure", None):
        raise ValidationError("--measure required (e.g. 1:1.0)")
    return Measure.from_string(args.measure)


def _base_config(args, command: str) -> dict:
    cfg = {
        "command": command,
        "threads": int(os.environ.get("QWB_THREADS", "1") or 1),
    }
    for key in ("f_file", "q", "measure", "xmax", "x", "tol", "nmax",
                "out", "csv", "seed"):
        if hasattr(args, key) and getattr(args, key) is not None:
            cfg[key] = getattr(args, key)
    return cfg


def _write(report: dict, out_path):
    if out_path:
        dump_file(report, out_path)
    else:
        from .jsonio import dumps

        sys.stdout.write(dumps(report) + "\n")


def cmd_analyze_f(args) -> int:
    F = _resolve_f(args)
    params = validate_f(F)
    inv = canonical_invariants(F)
    report = {
        "version": __version__,
        "config": _base_config(args, "analyze-f"),
        "fparams": fparams_to_json(params),
        "invariants": invariants_to_json(inv),
    }
    _write(report, args.out)
    return 0


def cmd_walk(args) -> int:
    F = _resolve_f(args)
    params = validate_f(F)
    mu = _measure(args)
    K = transition_matrix(mu, params.q, args.xmax)
    sums = K.p[: K.valid_max + 1].sum(axis=1)
    report = {
        "version": __version__,
        "config": _base_config(args, "walk"),
        "q": params.q,
        "band": K.band,
        "valid_rows": K.valid_max,
        "row_sum_max_deviation": float(np.max(np.abs(sums - 1.0))),
        "transience": transience_report(mu, params.q),
        "measure_props": measure_props(mu),
    }
    if report["transience"]["transient"]:
        value, tail, n_used = green_central(mu, params.q, 0, 0, args.tol)
        report["green_origin"] = {
            "value": value, "tail_bound": tail, "n_used": n_used,
        }
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write("x,z,p\n")
            for x in range(K.x_max + 1):
                for z in range(K.x_max + 1):
                    if K.p[x, z] != 0.0:
                        fh.write(f"{x},{z},{format(K.p[x, z], '.17g')}\n")
    _write(report, args.out)
    return 0


def cmd_poisson(args) -> int:
    F = _resolve_f(args)
    params = validate_f(F)
    mu = _measure(args)
    x_build = max(args.x + 2, 8)
    C_tilde = build_category(standard_f(params.q), x_build)
    rep = poisson_convergence(C_tilde, args.x, mu, args.tol, args.nmax)
    n_probe = rep.n_star if rep.n_star is not None else args.nmax
    K, cert = poisson_kernel_operator(C_tilde, args.x, mu, n_probe)
    ev = np.linalg.eigvalsh((K + K.conj().T) / 2.0)
    report = {
        "version": __version__,
        "config": _base_config(args, "poisson"),
        "q": params.q,
        "x": args.x,
        "target": rep.target,
        "n_star": rep.n_star,
        "distances": rep.distances,
        "kernel_trace_at_n_star": float(np.trace(K).real),
        "kernel_eigenvalues_at_n_star": [float(v) for v in ev],
        "zero_weight_dimension": len(zero_weight_space(C_tilde, args.x)),
        "truncation_certificate": cert,
    }
    _write(report, args.out)
    return 0


def cmd_martin(args) -> int:
    F = _resolve_f(args)
    params = validate_f(F)
    mu = _measure(args)
    x_src = args.x
    trans = transience_report(mu, params.q)
    report = {
        "version": __version__,
        "config": _base_config(args, "martin"),
        "q": params.q,
        "transience": trans,
    }
    y_list = list(range(max(2, x_src), args.xmax + 1))
    central = martin_kernel_central(mu, params.q, x_src, y_list)
    report["central"] = central
    if params.n == 2:
        # blockwise diagnostics are affordable when the chain dimensions
        # grow linearly
        window_budget = 96
        C = build_category(F, window_budget)
        a = block_indicator(C, 0, window_budget)
        K, cert = martin_block(a, mu, C, 1e-8)
        dev = max(
            float(np.max(np.abs(K.get(x, C) - np.eye(C.dim(x)))))
            for x in range(K.x_valid + 1)
        )
        C_tilde = C
        fit = martin_phi_fit(K, C, C_tilde, range(min(4, K.x_valid) + 1),
                             [0, 2])
        report["block"] = {
            "window": K.x_valid,
            "identity_deviation_p_eps": dev,
            "n_used": cert["n_used"],
            "green_column": cert["green_column"],
            "phi_fit_residuals": [[x, r] for x, r in fit],
        }
    else:
        report["block"] = {
            "skipped": "block dimensions grow exponentially for n >= 3; "
                       "central diagnostics only"
        }
    _write(report, args.out)
    return 0


def cmd_cg_table(args) -> int:
    F = _resolve_f(args)
    C = build_category(F, args.xmax)
    dims = {str(x): C.dim(x) for x in range(args.xmax + 1)}
    spectra = {
        str(x): [float(v) for v in np.sort(np.linalg.eigvalsh(C.Q(x)))]
        for x in range(args.xmax + 1)
    }
    tables = {}
    for y in range(args.xmax + 1):
        for z in range(args.xmax + 1):
            for x in range(abs(y - z), min(y + z, args.xmax) + 1, 2):
                V = cg_isometry(C, y, z, x).matrix
                tables[f"{y},{z},{x}"] = {
                    "re": [[float(v) for v in row] for row in V.real],
                    "im": [[float(v) for v in row] for row in V.imag],
                }
    report = {
        "version": __version__,
        "config": _base_config(args, "cg-table"),
        "q": C.q,
        "dims": dims,
        "q_spectra": spectra,
        "cg": tables,
    }
    _write(report, args.out)
    return 0


def cmd_selftest(args) -> int:
    suite = AcceptanceSuite(seed=args.seed)
    report = suite.run_all(with_determinism=not args.skip_determinism)
    report["config"] = _base_config(args, "selftest")
    for rec in report["criteria"]:
        print(format_line(rec))
    if args.out:
        dump_file(report, args.out)
    return 0 if report["all_passed"] else 3


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="qwb",
        description="fusion-ring random walks and boundary diagnostics "
                    "for universal orthogonal quantum groups",
    )
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, measure=False, xmax=None, tol=None, nmax=None, x=None):
        sp.add_argument("--f", "--F", dest="f_file", metavar="FILE",
                        help="JSON file with the defining matrix")
        sp.add_argument("--q", type=float, help="deformation parameter")
        sp.add_argument("--config", help="key=value defaults file")
        sp.add_argument("--out", help="JSON report path (stdout if absent)")
        if measure:
            sp.add_argument("--measure", help="e.g. 1:1.0 or 1:0.5,2:0.5")
        if xmax is not None:
            sp.add_argument("--xmax", type=int, default=xmax)
        if tol is not None:
            sp.add_argument("--tol", type=float, default=tol)
        if nmax is not None:
            sp.add_argument("--nmax", type=int, default=nmax)
        if x is not None:
            sp.add_argument("--x", type=int, default=x)

    sp = sub.add_parser("analyze-f", help="validate F and report invariants")
    common(sp)
    sp.set_defaults(func=cmd_analyze_f)

    sp = sub.add_parser("walk", help="central random walk diagnostics")
    common(sp, measure=True, xmax=60, tol=1e-8)
    sp.add_argument("--csv", help="CSV dump of the kernel (header x,z,p)")
    sp.set_defaults(func=cmd_walk)

    sp = sub.add_parser("poisson", help="Poisson kernel convergence sweep")
    common(sp, measure=True, tol=1e-3, nmax=200, x=2)
    sp.set_defaults(func=cmd_poisson)

    sp = sub.add_parser("martin", help="Martin kernel diagnostics")
    common(sp, measure=True, xmax=20, tol=1e-8, x=2)
    sp.set_defaults(func=cmd_martin)

    sp = sub.add_parser("cg-table", help="export dims, spectra, CG tables")
    common(sp, xmax=4)
    sp.set_defaults(func=cmd_cg_table)

    sp = sub.add_parser("selftest", help="run the acceptance suite")
    sp.add_argument("--seed", type=int, default=7)
    sp.add_argument("--out", help="JSON report path")
    sp.add_argument("--skip-determinism", action="store_true",
                    help="skip the double-run determinism criterion")
    sp.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    # first pass to honor --config defaults without overriding CLI values
    args, _ = parser.parse_known_args(argv)
    if getattr(args, "config", None):
        defaults = _load_config_file(args.config)
        coerce = {"q": float, "tol": float, "xmax": int, "nmax": int,
                  "x": int, "seed": int}
        typed = {
            k: (coerce[k](v) if k in coerce else v)
            for k, v in defaults.items()
        }
        parser.set_defaults(**typed)
        args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except QwbError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
