"""Command-line front end: ``python -m fixedbasis {run,lona,fit,table1}``."""
from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile


from . import __version__
from .analysis import (
    fit_report_json,
    fit_scaling,
    format_curve_csv,
    read_curve_csv,
)
from .experiments import TABLE_OMEGA0, best_fourier_curve, scheme_curve, steps_table
from .schemes import (
    DEFAULT_BRANCH_CAP,
    DEFAULT_M_MAX,
    DEFAULT_PRUNE,
    BranchLimitError,
    ConfigurationError,
    SchemeKind,
    SchemeSpec,
    generate_lona_sequence,
    read_lona_file,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_IO = 4
EXIT_RESOURCE = 5

FORMATS = """\
file formats:
  curve CSV     '#' comment lines (command, seed, ...), then the columns
                N,mse,standard_error,trials,scheme,seed
  trial dump    JSON lines, one trial per line: N, trial_index, true_omega,
                estimate, squared_error, variance_trace, record [[m, r], ...]
  LONA file     JSON {"omega0", "m_max", "prune_threshold", "sequence": [m1, ...]}
  fit report    JSON {"model", "rate", "coefficient", "ci": [lo, hi], "r_squared", "range"}
  table CSV     '#' comment lines, then scheme,threshold,steps,N_max,trials,seed
                (steps is empty when the threshold was not reached by N_max)

exit codes: 0 ok, 2 usage, 3 configuration, 4 I/O, 5 LONA branch cap
"""

SCHEMES = {
    "fourier": SchemeKind.FOURIER_PARTITION,
    "bayes-m1": SchemeKind.BAYES_FIXED_M1,
    "bayes-uniform": SchemeKind.BAYES_UNIFORM,
    "adaptive": SchemeKind.BAYES_ADAPTIVE,
    "lona": SchemeKind.LONA,
}


class CliError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def atomic_write(path, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file and rename."""
    try:
        directory = os.path.dirname(os.path.abspath(path))
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {path}: {exc}") from exc


def _n_values(args) -> list:
    if args.n_list:
        values = [int(x) for x in args.n_list.split(",") if x.strip()]
    elif args.n_range:
        parts = [int(x) for x in args.n_range.split(":")]
        if len(parts) == 2:
            parts.append(1)
        if len(parts) != 3 or parts[2] < 1:
            raise CliError(EXIT_USAGE, f"bad --n-range {args.n_range!r}, expected A:B[:step]")
        values = list(range(parts[0], parts[1] + 1, parts[2]))
    else:
        raise CliError(EXIT_USAGE, "one of --n-list or --n-range is required")
    if not values or min(values) < 1:
        raise CliError(EXIT_USAGE, "N values must be positive")
    return sorted(set(values))


def _load_lona(path, needed: int) -> list:
    if not path:
        raise CliError(EXIT_CONFIG, "the lona scheme needs --lona-file")
    try:
        seq = read_lona_file(path)["sequence"]
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read {path}: {exc}") from exc
    except (ValueError, ConfigurationError) as exc:
        raise CliError(EXIT_CONFIG, f"{path}: {exc}") from exc
    if len(seq) < needed:
        raise CliError(EXIT_CONFIG, f"{path} holds {len(seq)} waiting times, run needs {needed}")
    return seq


def _header(command: str, args, keys) -> list:
    return [f"fixedbasis {__version__} {command}"] + [
        f"{k}={getattr(args, k)}" for k in keys
    ]


def _peak_opts(args) -> dict:
    return {"interpolate": args.interpolate, "exclude_dc": args.exclude_dc}


def cmd_run(args) -> int:
    Ns = _n_values(args)
    kind = SCHEMES[args.scheme]
    lona = _load_lona(args.lona_file, Ns[-1]) if kind is SchemeKind.LONA else None
    dump = []
    try:
        if kind is SchemeKind.FOURIER_PARTITION and args.n_rep is None:
            rows, chosen = best_fourier_curve(Ns, args.trials, args.seed, args.omega0, **_peak_opts(args))
            if args.dump_trials:
                raise CliError(EXIT_USAGE, "--dump-trials needs a fixed --n-rep for fourier")
        else:
            spec = SchemeSpec(kind, n=args.n_rep or 1, m_max=args.m_max, lona_sequence=lona)
            rows, ens = scheme_curve(spec, Ns, args.trials, args.seed, args.omega0,
                                     args.statistic, **_peak_opts(args))
            if args.dump_trials:
                dump = _dump_lines(spec, Ns, args, ens)
    except ConfigurationError as exc:
        raise CliError(EXIT_CONFIG, str(exc)) from exc
    comments = _header("run", args, ("scheme", "n_rep", "trials", "seed", "omega0", "m_max", "statistic"))
    atomic_write(args.out, format_curve_csv(rows, comments))
    if args.dump_trials:
        atomic_write(args.dump_trials, "".join(dump))
    if args.plot_script:
        atomic_write(args.plot_script, PLOT_STUB.format(csv=args.out))
    for p in rows:
        print(f"N={p.N:<6d} {args.statistic}={p.mse:.6g}  se={p.standard_error:.3g}")
    return EXIT_OK


def _dump_lines(spec, Ns, args, ens) -> list:
    from .simulator import TrialConfig, run_ensemble

    lines = []
    for N in Ns:
        if ens is None:
            part = run_ensemble(TrialConfig(spec, N, args.omega0, args.seed, **_peak_opts(args)), args.trials)
        else:
            part = ens.truncated(N)
        for t in part.results:
            row = {"N": N}
            row.update(t.to_dict())
            lines.append(json.dumps(row) + "\n")
    return lines


def cmd_lona(args) -> int:
    try:
        seq = generate_lona_sequence(args.omega0, args.steps, args.m_max, args.prune, args.branch_cap)
    except BranchLimitError as exc:
        raise CliError(EXIT_RESOURCE, f"{exc}; reached depth {exc.depth - 1}") from exc
    doc = {
        "omega0": args.omega0,
        "m_max": args.m_max,
        "prune_threshold": args.prune,
        "sequence": seq,
    }
    if args.out:
        atomic_write(args.out, json.dumps(doc) + "\n")
    print(json.dumps(seq))
    return EXIT_OK


def _parse_range(text):
    try:
        lo, hi = (float(x) for x in text.split(":"))
    except ValueError as exc:
        raise CliError(EXIT_USAGE, f"bad --range {text!r}, expected A:B") from exc
    return lo, hi


def cmd_fit(args) -> int:
    try:
        curve = read_curve_csv(args.input)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read {args.input}: {exc}") from exc
    except (ValueError, KeyError) as exc:
        raise CliError(EXIT_IO, f"malformed CSV {args.input}: {exc}") from exc
    rng = _parse_range(args.range) if args.range else None
    try:
        fit = fit_scaling(curve, args.model, rng, weighted=args.weighted)
    except ValueError as exc:
        raise CliError(EXIT_CONFIG, str(exc)) from exc
    if args.report:
        atomic_write(args.report, fit_report_json(fit))
    print(f"model={fit.model.value} rate={fit.rate:.6g} "
          f"ci=[{fit.ci_low:.6g}, {fit.ci_high:.6g}] r2={fit.r_squared:.6g} "
          f"range={fit.fit_range[0]}:{fit.fit_range[1]}")
    return EXIT_OK


LABELS = {
    "bayes-m1": "Bayesian n=N",
    "fourier": "Fourier",
    "bayes-n1": "Bayesian n=1",
    "lona": "LONA",
    "adaptive": "Adaptive",
}


def cmd_table1(args) -> int:
    thresholds = (1e-3, 1e-5) if args.deep else (1e-3,)
    if args.lona_file:
        lona = _load_lona(args.lona_file, 1)
    else:
        try:
            lona = generate_lona_sequence(args.omega0, args.lona_steps, args.m_max, args.prune)
        except BranchLimitError as exc:
            raise CliError(EXIT_RESOURCE, f"{exc}; reached depth {exc.depth - 1}") from exc
    rows = steps_table(args.trials, args.seed, lona, args.omega0, thresholds, args.deep,
                       args.m_max, statistic=args.statistic, **_peak_opts(args))
    lines = [f"# {c}\n" for c in _header("table1", args, ("trials", "seed", "omega0", "m_max", "deep", "statistic"))]
    lines.append(f"# lona_sequence={json.dumps(list(lona))}\n")
    lines.append("scheme,threshold,steps,N_max,trials,seed\n")
    for r in rows:
        steps = "" if r.steps is None else str(r.steps)
        lines.append(f"{r.scheme},{r.threshold!r},{steps},{r.N_max},{r.trials},{r.seed}\n")
    atomic_write(args.out, "".join(lines))
    print(f"{'Algorithm':<16}" + "".join(f"{'V=%g' % t:>10}" for t in thresholds))
    for name in LABELS:
        cells = [r.display for r in rows if r.scheme == name]
        print(f"{LABELS[name]:<16}" + "".join(f"{c:>10}" for c in cells))
    return EXIT_OK


PLOT_STUB = """\
# plot the curve written by fixedbasis; edit freely
import csv
import matplotlib.pyplot as plt

with open({csv!r}) as fh:
    rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
N = [int(r["N"]) for r in rows]
mse = [float(r["mse"]) for r in rows]
plt.semilogy(N, mse, "o-")
plt.xlabel("N")
plt.ylabel("MSE")
plt.show()
"""


def _add_common(p, omega0=1.0):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--omega0", type=float, default=omega0)
    p.add_argument("--m-max", type=int, default=DEFAULT_M_MAX)
    p.add_argument("--statistic", choices=("mse", "variance"), default="mse",
                   help="per-trial quantity averaged for Bayesian schemes")
    p.add_argument("--interpolate", action="store_true",
                   help="parabolic refinement of the Fourier peak")
    p.add_argument("--exclude-dc", action="store_true",
                   help="skip bin 0 in the Fourier peak search")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fixedbasis",
        description="Qubit frequency estimation from fixed-basis measurements.",
        epilog=FORMATS,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--config", help="JSON or TOML file with option defaults")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="MSE curve of one scheme over several N",
                         epilog=FORMATS, formatter_class=argparse.RawDescriptionHelpFormatter)
    run.add_argument("--scheme", required=True, choices=sorted(SCHEMES))
    run.add_argument("--n-list", help="comma separated N values")
    run.add_argument("--n-range", help="A:B[:step], inclusive")
    run.add_argument("--n-rep", type=int, default=None,
                     help="repetitions per waiting time (fourier, bayes-uniform); "
                          "fourier without it takes the best of n=1,2,3")
    run.add_argument("--lona-file")
    run.add_argument("--out", required=True)
    run.add_argument("--dump-trials")
    run.add_argument("--plot-script", help="also write a matplotlib script for the CSV")
    _add_common(run)
    run.set_defaults(func=cmd_run)

    lona = sub.add_parser("lona", help="generate a LONA waiting-time sequence",
                          epilog=FORMATS, formatter_class=argparse.RawDescriptionHelpFormatter)
    lona.add_argument("--steps", type=int, required=True)
    lona.add_argument("--m-max", type=int, default=DEFAULT_M_MAX)
    lona.add_argument("--prune", type=float, default=DEFAULT_PRUNE)
    lona.add_argument("--branch-cap", type=int, default=DEFAULT_BRANCH_CAP)
    lona.add_argument("--omega0", type=float, default=1.0)
    lona.add_argument("--out")
    lona.set_defaults(func=cmd_lona)

    fit = sub.add_parser("fit", help="fit a power law or exponential to a curve CSV",
                         epilog=FORMATS, formatter_class=argparse.RawDescriptionHelpFormatter)
    fit.add_argument("--input", required=True)
    fit.add_argument("--model", choices=("power", "exp"), default="power")
    fit.add_argument("--range", help="A:B inclusive range of N")
    fit.add_argument("--report")
    fit.add_argument("--weighted", action="store_true", help="weight points by (mse/se)^2")
    fit.set_defaults(func=cmd_fit)

    t1 = sub.add_parser("table1", help="steps each scheme needs to reach a variance threshold",
                        epilog=FORMATS, formatter_class=argparse.RawDescriptionHelpFormatter)
    t1.add_argument("--out", required=True)
    t1.add_argument("--deep", action="store_true", help="also the 1e-5 threshold")
    t1.add_argument("--lona-file")
    t1.add_argument("--lona-steps", type=int, default=30)
    t1.add_argument("--prune", type=float, default=DEFAULT_PRUNE)
    _add_common(t1, omega0=TABLE_OMEGA0)
    t1.set_defaults(func=cmd_table1)
    return parser


def _read_config(path) -> dict:
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read {path}: {exc}") from exc
    try:
        if path.endswith(".toml"):
            try:
                import tomllib
            except ModuleNotFoundError:  # python < 3.11
                import tomli as tomllib
            data = tomllib.loads(raw.decode())
        else:
            data = json.loads(raw)
    except ValueError as exc:
        raise CliError(EXIT_CONFIG, f"bad config {path}: {exc}") from exc
    return {k.replace("-", "_"): v for k, v in data.items()}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.config:
            # config values become defaults; explicit flags still win
            cfg = _read_config(args.config)
            subparser = parser._subparsers._group_actions[0].choices[args.command]
            subparser.set_defaults(**cfg)
            args = parser.parse_args(argv)
        return args.func(args)
    except CliError as exc:
        print(f"fixedbasis: error: {exc}", file=sys.stderr)
        return exc.code
    except ConfigurationError as exc:
        print(f"fixedbasis: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
