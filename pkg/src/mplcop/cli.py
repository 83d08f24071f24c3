"""Command-line front end.

    mplcop fit DATA.csv --family clayton --method mpl-mode --method mm-tau
    mplcop pseudo-obs DATA.csv --scheme median
    mplcop simulate --replications 200 --n 50 --tau 0.1 --out-dir results/
    mplcop --figure1-data

Exit codes: 0 success, 2 configuration or input error, 3 a fit did not
converge, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np
from scipy import stats

from . import __version__, copulas
from .copula_estimator import estimate
from .estimators import MIN_MPL_SAMPLES, Method
from .exceptions import NumericalError
from .experiment import (
    ALL_FAMILIES,
    ALL_METHODS,
    DEFAULT_SIZES,
    DEFAULT_TAUS,
    PRE_NOTE,
    ExperimentConfig,
    asymptotic_pre,
    relative_efficiency,
    run_cell,
)
from .pseudo_obs import Scheme, beta_median, pseudo_observations
from .report import (
    asymptotic_markdown,
    build_manifest,
    format_number,
    metrics_markdown,
    pre_markdown,
    rows_to_csv,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NOT_CONVERGED = 3
EXIT_NUMERIC = 4

logger = logging.getLogger("mplcop")


class InputError(ValueError):
    """Unreadable or malformed input data or configuration."""


# --------------------------------------------------------------------------
# input


def read_pairs(path) -> np.ndarray:
    """Two-column numeric CSV with an optional single header row."""
    try:
        with open(path, newline="", encoding="utf-8") as handle:
            lines = list(csv.reader(handle))
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    rows = []
    for number, line in enumerate(lines, start=1):
        cells = [c.strip() for c in line]
        if not any(cells):
            continue
        if len(cells) != 2:
            raise InputError(f"{path}:{number}: expected 2 columns, found {len(cells)}")
        try:
            pair = (float(cells[0]), float(cells[1]))
        except ValueError:
            if not rows and number == 1:
                continue  # header
            raise InputError(f"{path}:{number}: non-numeric value in {line!r}") from None
        if not all(math.isfinite(x) for x in pair):
            raise InputError(f"{path}:{number}: non-finite value in {line!r}")
        rows.append(pair)
    if not rows:
        raise InputError(f"{path}: no data rows")
    return np.asarray(rows, dtype=float)


_LIST_KEYS = {
    "families": "families", "family": "families",
    "methods": "methods", "method": "methods",
    "tau_levels": "tau_levels", "tau": "tau_levels",
    "sample_sizes": "sample_sizes", "n": "sample_sizes",
}
_SCALAR_KEYS = {
    "replications": "replications",
    "base_seed": "base_seed", "seed": "base_seed",
    "asymptotic_n": "asymptotic_n",
    "n_jobs": "n_jobs", "jobs": "n_jobs",
    "asymptotic": "asymptotic",
}


def read_config(path) -> dict:
    """Flat ``key = value`` file; lists are comma separated, ``#`` starts a comment."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"cannot read config {path}: {exc}") from None
    out = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}:{number}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.lower().replace("-", "_")
        if key in _LIST_KEYS:
            out[_LIST_KEYS[key]] = [v.strip() for v in value.split(",") if v.strip()]
        elif key in _SCALAR_KEYS:
            out[_SCALAR_KEYS[key]] = value
        else:
            raise InputError(f"{path}:{number}: unknown key {key!r}")
    return out


def _as_bool(value):
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in {"1", "true", "yes", "on"}:
        return True
    if text in {"0", "false", "no", "off"}:
        return False
    raise InputError(f"not a boolean: {value!r}")


def build_config(args) -> tuple[ExperimentConfig, bool]:
    settings = read_config(args.config) if args.config else {}
    flags = {
        "families": args.family,
        "methods": args.method,
        "tau_levels": args.tau,
        "sample_sizes": args.n,
        "replications": args.replications,
        "base_seed": args.seed,
        "asymptotic_n": args.asymptotic_n,
        "n_jobs": args.jobs,
    }
    settings.update({k: v for k, v in flags.items() if v is not None})
    asymptotic = _as_bool(settings.pop("asymptotic", False)) or args.asymptotic
    try:
        config = ExperimentConfig(
            families=tuple(settings.get("families", ALL_FAMILIES)),
            tau_levels=tuple(float(t) for t in settings.get("tau_levels", DEFAULT_TAUS)),
            sample_sizes=tuple(int(n) for n in settings.get("sample_sizes", DEFAULT_SIZES)),
            replications=int(settings.get("replications", 5000)),
            base_seed=int(settings.get("base_seed", 1)),
            methods=tuple(settings.get("methods", ALL_METHODS)),
            asymptotic_n=int(settings.get("asymptotic_n", 100_000)),
            n_jobs=int(settings.get("n_jobs", 1)),
        )
    except (TypeError, ValueError) as exc:
        raise InputError(f"invalid configuration: {exc}") from None
    if asymptotic and config.asymptotic_n < 10_000:
        raise InputError(f"asymptotic_n must be >= 10000, got {config.asymptotic_n}")
    return config, asymptotic


# --------------------------------------------------------------------------
# commands


def _ties(X):
    return [j + 1 for j in range(2) if np.unique(X[:, j]).size < X.shape[0]]


def cmd_fit(args, out=None) -> int:
    out = out or sys.stdout
    X = read_pairs(args.data)
    n = X.shape[0]
    if n < MIN_MPL_SAMPLES:
        raise InputError(f"need at least {MIN_MPL_SAMPLES} observations, got {n}")
    family = copulas.CopulaFamily.parse(args.family)
    methods = [Method.parse(m) for m in (args.method or ["mpl-mode"])]
    tied = _ties(X)
    status = EXIT_OK
    for k, method in enumerate(methods):
        if k:
            print("", file=out)
        fit = estimate(family, X, method, compute_se=not args.no_se, tie_seed=args.tie_seed)
        print(f"method: {fit.method.value}", file=out)
        print(f"family: {fit.family.value}", file=out)
        print(f"n: {fit.n}", file=out)
        print(f"theta_hat: {format_number(fit.theta_hat)}", file=out)
        if fit.se is not None:
            print(f"se: {format_number(fit.se)}", file=out)
            print(f"ci95: [{format_number(fit.ci_low)}, {format_number(fit.ci_high)}]", file=out)
        else:
            print("se: none", file=out)
        print(f"converged: {str(fit.converged).lower()}", file=out)
        for column in tied:
            print(f"warning: ties in column {column} broken at random (tie seed {args.tie_seed})", file=out)
        if fit.clamped:
            print(f"warning: sample coefficient {fit.coefficient:.6g} outside the attainable range; "
                  "estimate clamped to the parameter bound", file=out)
        if fit.at_boundary:
            print("warning: pseudo-likelihood maximised at the edge of the parameter range", file=out)
        if not fit.converged:
            status = EXIT_NOT_CONVERGED
    return status


def cmd_pseudo_obs(args, out=None) -> int:
    out = out or sys.stdout
    X = read_pairs(args.data)
    if X.shape[0] < 2:
        raise InputError("need at least 2 observations")
    U = pseudo_observations(X, scheme=args.scheme, tie_seed=args.tie_seed)
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["u1", "u2"])
    for a, b in U:
        writer.writerow([repr(float(a)), repr(float(b))])
    return EXIT_OK


def _write(path: Path, text: str) -> str:
    path.write_text(text, encoding="utf-8")
    return hashlib.sha256(text.encode()).hexdigest()


def cmd_simulate(args, out=None) -> int:
    out = out or sys.stdout
    config, asymptotic = build_config(args)
    out_dir = Path(args.out_dir)

    def progress(family, tau, n):
        logger.info("finished %s tau=%g n=%d", family, tau, n)

    metrics = []
    for family in config.families:
        for tau in config.tau_levels:
            for n in config.sample_sizes:
                metrics.extend(run_cell(config, family, tau, n))
                progress(family, tau, n)
    has_reference = Method.MPL_CANONICAL.value in config.methods
    pre = relative_efficiency(metrics) if has_reference else []
    if not has_reference:
        logger.warning("mpl-canonical not among the methods; pre.csv will be empty")
    asymptotic_rows = asymptotic_pre(config) if asymptotic else None

    logger.info(PRE_NOTE)
    # all computation is done; write everything at once
    out_dir.mkdir(parents=True, exist_ok=True)
    files = {
        "metrics.csv": _write(out_dir / "metrics.csv", rows_to_csv(metrics)),
        "pre.csv": _write(out_dir / "pre.csv", rows_to_csv(pre)),
    }
    thetas = {(f, t): copulas.theta_of_tau(f, t) for f in config.families for t in config.tau_levels}
    sections = [
        "# Simulation tables",
        f"config sha256 `{config.fingerprint()}`, {config.replications} replications, "
        f"base seed {config.base_seed}, see manifest.json",
        metrics_markdown(metrics),
    ]
    if pre:
        sections.append(pre_markdown(metrics, pre))
    if asymptotic_rows is not None:
        files["pre_asymptotic.csv"] = _write(out_dir / "pre_asymptotic.csv", rows_to_csv(asymptotic_rows))
        sections.append(asymptotic_markdown(asymptotic_rows, thetas))
    files["tables.md"] = _write(out_dir / "tables.md", "\n\n".join(sections) + "\n")
    manifest = build_manifest(config, metrics, __version__, files, asymptotic)
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {', '.join(sorted(files))}, manifest.json to {out_dir}", file=out)
    return EXIT_OK


def figure1_data(out=None, r=45, n=50, points=501) -> int:
    """Density of the r-th uniform order statistic on (0.75, 1) with its mean, median and mode."""
    out = out or sys.stdout
    a, b = r, n - r + 1
    grid = np.linspace(0.75, 1.0, points)
    density = stats.beta.pdf(grid, a, b)
    markers = {
        "mean": r / (n + 1.0),
        "median": float(beta_median(np.array([r]), n)[0]),
        "mode": (r - 1.0) / (n - 1.0),
    }
    rows = [(x, d, "") for x, d in zip(grid, density)]
    rows += [(x, float(stats.beta.pdf(x, a, b)), name) for name, x in markers.items()]
    rows.sort(key=lambda row: row[0])
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["x", "density", "marker"])
    for x, d, name in rows:
        writer.writerow([format_number(float(x), 10), format_number(float(d), 10), name])
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mplcop",
        description="Rank-based copula estimation and Monte Carlo comparison.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    parser.add_argument(
        "--figure1-data",
        action="store_true",
        help="print the Beta(45, 6) density on (0.75, 1) with mean, median and mode markers",
    )
    sub = parser.add_subparsers(dest="command")

    families = [f.value for f in copulas.CopulaFamily]
    methods = [m.value for m in Method]

    fit = sub.add_parser("fit", help="estimate the copula parameter of a two-column CSV")
    fit.add_argument("data")
    fit.add_argument("--family", required=True, choices=families)
    fit.add_argument("--method", action="append", choices=methods,
                     help="repeat for several methods (default mpl-mode)")
    fit.add_argument("--no-se", action="store_true", help="skip standard errors")
    fit.add_argument("--tie-seed", type=int, default=0)

    pobs = sub.add_parser("pseudo-obs", help="print pseudo-observations of a two-column CSV")
    pobs.add_argument("data")
    pobs.add_argument("--scheme", default="canonical", choices=[s.value for s in Scheme])
    pobs.add_argument("--tie-seed", type=int, default=0)

    sim = sub.add_parser("simulate", help="run the Monte Carlo study")
    sim.add_argument("--config", help="key = value file; flags override it")
    sim.add_argument("--family", action="append", choices=families)
    sim.add_argument("--method", action="append", choices=methods)
    sim.add_argument("--tau", action="append", type=float)
    sim.add_argument("--n", action="append", type=int)
    sim.add_argument("--replications", type=int)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--asymptotic", action="store_true",
                     help="also write pre_asymptotic.csv from one large sample per cell")
    sim.add_argument("--asymptotic-n", type=int)
    sim.add_argument("--jobs", type=int, help="worker processes")
    sim.add_argument("--out-dir", default="mplcop-results")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    commands = {"fit": cmd_fit, "pseudo-obs": cmd_pseudo_obs, "simulate": cmd_simulate}
    try:
        if args.figure1_data:
            return figure1_data()
        if args.command is None:
            parser.print_usage(sys.stderr)
            return EXIT_CONFIG
        return commands[args.command](args)
    except NumericalError as exc:
        print(f"mplcop: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InputError, ValueError) as exc:
        print(f"mplcop: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
